"""Sigma-point filtering and orbit-determination toolkit."""
