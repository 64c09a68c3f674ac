"""One handler per command-line subcommand."""
