"""Pytest configuration: keeps the tests directory importable for helpers."""
