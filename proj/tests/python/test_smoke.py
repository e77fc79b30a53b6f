import os
import pathlib

import pytest

import llmsim

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_presets_listed():
    assert "llama31_70b" in llmsim.model_preset_names()
    assert "mi355x" in llmsim.gpu_preset_names()
    assert llmsim.make_workload_preset("mlperf_405b").total == 10112


def test_estimate_consistent():
    e = llmsim.quick_estimate("llama31_70b", "mi325x", "longalpaca_70b", "dp1.tp8.pp1", 16)
    assert e.ttft > 0 and e.tpot > 0
    assert e.global_batch == 16
    assert e.prefill["kernels"]["all_reduce"]["count"] == 160
    shares = sum(k["share"] for k in e.decode["kernels"].values())
    assert shares == pytest.approx(1.0, abs=1e-9)
    w = llmsim.make_workload_preset("longalpaca_70b")
    assert e.tps == llmsim.throughput(e.ttft, e.tpot, 16, llmsim.ParallelPlan.parse("dp1.tp8.pp1"), w)


def test_max_nano_batch():
    dep = llmsim.ModelDeployment("llama31_405b", llmsim.Precision.fp4)
    node = llmsim.NodeSpec(llmsim.make_gpu_preset("mi355x"))
    w = llmsim.make_workload_preset("mlperf_405b")
    assert llmsim.max_nano_batch(llmsim.ParallelPlan(8, 1, 1), node, dep, w) == 32
    assert llmsim.max_nano_batch(llmsim.ParallelPlan(1, 1, 8), node, dep, w) == 512


def test_errors_are_typed():
    with pytest.raises(llmsim.InfeasibleError):
        llmsim.quick_estimate("llama31_70b", "mi325x", "longalpaca_70b", "dp8.tp1.pp1", 256)
    with pytest.raises(llmsim.ConfigError):
        llmsim.make_model_preset("nope")
    with pytest.raises(llmsim.ConfigError):
        llmsim.ParallelPlan.parse("tp8")


def test_sweep_round_trip(tmp_path):
    cfg = llmsim.load_sweep_config(ROOT / "configs" / "fig6.ini")
    result = llmsim.run_sweep(cfg)
    assert len(result) == 4
    assert result.status == "all_feasible"
    csv = result.to_csv()
    assert csv.splitlines()[0].startswith("plan,tp,pp,dp,nano_batch")
    again = llmsim.sweep_result_from_json(result.to_json())
    assert again.to_csv() == csv
    written = result.emit("json", tmp_path / "fig6.json")
    assert [p.name for p in written] == ["fig6.json"]


def test_feasibility_matrix():
    dep = llmsim.ModelDeployment("llama31_70b")
    node = llmsim.NodeSpec(llmsim.make_gpu_preset("mi325x"))
    rows = llmsim.feasibility_matrix(dep, node, llmsim.make_workload_preset("longalpaca_70b"))
    assert len(rows) == 10
    assert dict((p, b) for p, _, b in rows)["dp8.tp1.pp1"] < 256
