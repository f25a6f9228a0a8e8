"""Sweep plumbing: instance replay, precision modes, failure reporting."""

from quadenhance.checks import (gradcheck_families, make_sweep_instance,
                                oracle_chain_sweep)
from quadenhance.config import GradcheckConfig, OracleEquivConfig
from quadenhance.enhancer import qe_forward


def test_sweep_instances_replayable():
    layer_a, x_a = make_sweep_instance(12345)
    layer_b, x_b = make_sweep_instance(12345)
    assert layer_a.W.tobytes() == layer_b.W.tobytes()
    assert x_a.tobytes() == x_b.tobytes()
    assert qe_forward(layer_a, x_a).tobytes() == qe_forward(layer_b, x_b).tobytes()


def test_sweep_covers_widest_shift_set():
    layer, _ = make_sweep_instance(0)    # seed 0 is forced onto the widest set
    assert layer.lam.shifts == (-2, -1, 1, 2)


def test_small_sweep_passes_both_precisions():
    for precision in ("f64", "f32"):
        cfg = OracleEquivConfig.from_dict({"instances": 50, "seed": 14,
                                           "precision": precision})
        res = oracle_chain_sweep(cfg)
        assert res.passed, res.summary()
        assert res.max_dev_chain <= res.tol / 4, "want comfortable margin"


def test_sweep_deterministic():
    cfg = OracleEquivConfig.from_dict({"instances": 20, "seed": 3})
    a, b = oracle_chain_sweep(cfg), oracle_chain_sweep(cfg)
    assert a.max_dev_chain == b.max_dev_chain
    assert a.worst_seed == b.worst_seed


def test_gradcheck_families_summary_fields():
    cfg = GradcheckConfig.from_dict({"instances": 2, "families": ["swiglu"]})
    (res,) = gradcheck_families(cfg)
    assert res.family == "swiglu"
    assert res.instances == 2
    assert res.worst_param in ("W1", "W2")
    assert "PASS" in res.summary()


def test_gradcheck_f32_mode():
    cfg = GradcheckConfig.from_dict({"instances": 3, "precision": "f32",
                                     "families": ["qe_layer"]})
    (res,) = gradcheck_families(cfg)
    assert res.passed
    assert res.tol == 1e-2
