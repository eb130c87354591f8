"""Move features, knowledge parameters and the knowledge XML format."""
