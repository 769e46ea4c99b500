import math

import pytest

fhelab = pytest.importorskip("fhelab")


def close(got, want, tol=0.05):
    return abs(got - want) <= tol * abs(want)


def test_presets():
    assert {"baseline", "best-case"} <= set(fhelab.presets())
    with pytest.raises(ValueError):
        fhelab.cost_of("Mult", preset="nope")


def test_mult_and_bootstrap_costs():
    mult = fhelab.cost_of("Mult", preset="baseline", level=35)
    assert close(mult["gop"], 1.8333)
    base = fhelab.bootstrap_cost("baseline")
    opt = fhelab.bootstrap_cost("best-case")
    assert [b["name"] for b in base["breakdown"]] == ["CoeffToSlot", "PolyEval63", "SlotToCoeff"]
    assert close(opt["gop"], 79.24)
    assert close(opt["gb"], 45.33)
    assert base["gb"] / opt["gb"] >= 4.3


def test_throughput_row():
    r = fhelab.throughput(65536, 19, 19, 45.33, 900e9)
    assert close(r["throughput"] / 1e6, 469.68)
    assert math.isclose(r["brt_seconds"], 45.33e9 / 900e9, rel_tol=1e-9)


def test_search_top():
    top = fhelab.search("best-case", 3)
    assert len(top) == 3
    assert (top[0]["L"], top[0]["dnum"], top[0]["fft"]) == (40, 2, 6)
    assert top[0]["throughput"] >= top[1]["throughput"]


def test_dram_and_selftest():
    d = fhelab.dram_compare()
    assert len(d["cells"]) == 4
    ratio = dict(d["total_vs_first"])["optimized"]
    assert 2.0 <= ratio <= 2.8
    assert all(c["pass"] for c in fhelab.selftest(3))
