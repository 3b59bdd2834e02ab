"""Test package for pffc."""
