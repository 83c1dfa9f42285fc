"""Experiment orchestration: splitting, metrics, replications and benchmarks."""
