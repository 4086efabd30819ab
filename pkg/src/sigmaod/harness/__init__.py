"""Scenario configuration, synthesis, Monte-Carlo runs, statistics and output."""
