"""Directed formation control in bipolar coordinates with prescribed performance."""
