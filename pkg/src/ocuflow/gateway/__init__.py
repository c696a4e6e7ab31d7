"""Operational shell: CLI, HTTP service, and the bit-exact file formats."""
