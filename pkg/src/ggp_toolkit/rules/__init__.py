"""KIF rule sheets, the board extension and mGDL normalization."""
