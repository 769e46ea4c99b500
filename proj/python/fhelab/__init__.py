"""CKKS memory-traffic model, DRAM mapping simulator and arithmetic self-checks."""

from ._fhelab import (
    bootstrap_cost,
    cost_of,
    dram_compare,
    presets,
    search,
    selftest,
    throughput,
)

__all__ = [
    "bootstrap_cost",
    "cost_of",
    "dram_compare",
    "presets",
    "search",
    "selftest",
    "throughput",
]
