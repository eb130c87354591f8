"""Evolution of knowledge files: records, chromosomes, tournaments and the SGA loop."""
