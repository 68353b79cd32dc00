"""Command-line tools: zeta-dist and zd-run-log."""
