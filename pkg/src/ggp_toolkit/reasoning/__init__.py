"""Rule sheet compiler, fact stores, reasoning engine and playout benchmark."""
