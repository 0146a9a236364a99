# Copyright (C) 2026 The vecplan Authors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import vecplan


def test_dataset_and_codec_shapes():
    plans = vecplan.generate_dataset(5, seed=3)
    assert len(plans) == 5
    assert plans == vecplan.generate_dataset(5, seed=3)
    t = vecplan.encode_plan(__import__("json").dumps(plans[0]))
    assert t["boundary"].shape == (8, 80)
    assert t["entrance"].shape == (8, 8)
    assert t["nodes"].shape == (8, 5)
    assert t["adjacency"].shape == (8, 8)
    assert t["boxes"].shape == (8, 4)
    assert np.abs(t["nodes"]).max() <= 1.0


def test_forward_noise_inverts():
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((8, 5))
    eps = rng.standard_normal((8, 5))
    xt = vecplan.forward_noise(x0, 400, eps)
    assert np.allclose(vecplan.estimate_x0(xt, eps, 400), x0, atol=1e-9)
    s = vecplan.schedule()
    assert len(s["alpha_bar"]) == 1001
    assert s["alpha_bar"][0] == 1.0


def test_confirmed_count_and_iou():
    assert vecplan.confirmed_count(5, 500) == 3
    assert vecplan.confirmed_count(8, 0) == 8
    assert vecplan.rectilinear_iou([(0, 0, 1, 1)], [(0.5, 0, 1.5, 1)]) == pytest.approx(1 / 3)


def test_metrics_on_identical_sets():
    plans = vecplan.generate_dataset(40, seed=8)
    stats = vecplan.plan_statistics(plans, plans)
    assert stats["R_n"] == 1.0
    assert vecplan.frechet_distance(plans, plans) <= 1e-8


def test_errors_carry_codes():
    with pytest.raises(vecplan.VecplanError) as info:
        vecplan.frechet_distance(vecplan.generate_dataset(3), vecplan.generate_dataset(3))
    assert info.value.code == "TooFewSamples"


def test_train_and_generate_nodes(tmp_path):
    plans = vecplan.generate_dataset(30, seed=4)
    config = {"steps": 5, "batch_size": 4, "d_model": 8, "layers": 1, "heads": 2, "ff_ratio": 2, "timesteps": 20}
    ckpt = tmp_path / "nodes.ckpt"
    log = vecplan.train(plans, "nodes", "B", config, ckpt)
    assert [r["step"] for r in log] == [1, 2, 3, 4, 5]
    reg = vecplan.Registry()
    reg.add("nodes/B", str(ckpt))
    assert reg.ids() == ["nodes/B"]
    request = {"target": "nodes", "seed": 9, "variant": "nodes/B", "conditions": {
        "boundary": plans[0]["boundary"], "entrance": plans[0]["entrance"]}}
    a = vecplan.generate(reg, request)
    b = vecplan.generate(reg, request)
    assert a == b
    assert "nodes" in a
