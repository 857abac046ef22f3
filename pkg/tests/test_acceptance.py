"""Acceptance gate: one test per criterion, each printing a PASS line.

Criterion 4's loss-ratio clause is implemented faithfully and is expected
to fail: the stride-32 maps (p_5, p_g) are 2x2 at the 64-pixel desk scale
and carry an irreducible loss of ~1.35 each after upsampled supervision,
so the total cannot drop below ~45% of its starting value. The analysis
lives in the decisions ledger; the Dice clause passes.
"""

import os
import time

import numpy as np
import pytest

from errnet import cli
from errnet import tensor as T
from errnet.checks import LOSS_TOLERANCE, OP_TOLERANCE, run_gradcheck
from errnet.encoder import STRIDES
from errnet.losses import LEVEL_ORDER, total_loss
from errnet.metrics import EvalPair, e_measure_mean, mae, s_measure, weighted_f
from errnet.model import ASPP_DILATIONS, ErrNet, NgesPriors, Rru
from errnet.netpbm import read_map
from oracles import (dice_coefficient, e_measure_naive, mae_naive,
                     s_measure_naive, weighted_f_naive)


def _report(line):
    print(f"\nACCEPTANCE {line}")


def test_criterion_gradient_correctness():
    """Every op < 1e-5, every loss parameter group < 1e-3, within 5 minutes."""
    t0 = time.time()
    report, thresholds, ok = run_gradcheck(seed=0)
    elapsed = time.time() - t0
    op_worst = max(v for k, v in report.items() if not k.startswith("loss/"))
    loss_worst = max(v for k, v in report.items() if k.startswith("loss/"))
    for name, err in report.items():
        assert err < thresholds[name], f"{name}: {err:.3e}"
    assert op_worst < OP_TOLERANCE
    assert loss_worst < LOSS_TOLERANCE
    assert elapsed < 300.0, f"gradcheck took {elapsed:.0f}s"
    _report(f"PASS gradient correctness: ops<={op_worst:.2e}, "
            f"loss groups<={loss_worst:.2e}, {elapsed:.0f}s")


def test_criterion_algorithm1_invariants(rng):
    """Reverse masks equal 1 - sigmoid(combined priors) exactly, channels
    identical, zero priors give 0.5, neighbour present iff level < 5."""
    for level, channels in ((5, 64), (4, 64), (3, 32)):
        rru = Rru(level, channels, rng)
        p_g = T.Tensor(rng.standard_normal((1, 1, 2, 2)))
        neighbour = None if level == 5 else T.Tensor(rng.standard_normal((1, 1, 4, 4)))
        priors = NgesPriors(global_prior=p_g, neighbour=neighbour,
                            edge=T.Tensor(rng.standard_normal((1, 64, 16, 16))),
                            semantic=T.Tensor(rng.standard_normal((1, channels, 8, 8))))
        mask, combined = rru.reverse_mask(priors, 8, 8)
        want = T.one_minus(T.sigmoid(combined))
        for c in range(channels):
            np.testing.assert_array_equal(mask.data[:, c:c + 1], want.data)
        # zero-logit priors give exactly 0.5
        zero_priors = NgesPriors(
            global_prior=T.Tensor(np.zeros((1, 1, 8, 8))),
            neighbour=None if level == 5 else T.Tensor(np.zeros((1, 1, 8, 8))),
            edge=priors.edge, semantic=priors.semantic)
        zero_mask, _ = rru.reverse_mask(zero_priors, 8, 8)
        np.testing.assert_array_equal(zero_mask.data, np.full((1, channels, 8, 8), 0.5))
        # structural neighbour rules
        bad = NgesPriors(global_prior=p_g, edge=priors.edge, semantic=priors.semantic,
                         neighbour=p_g if level == 5 else None)
        with pytest.raises(ValueError):
            rru._check_priors(bad)
    _report("PASS algorithm-1 invariants: reversal masks exact, priors structural")


def test_criterion_metric_oracles():
    """mae/e/s to 1e-9, weighted F to 1e-6, on 50 random 8x8 pairs, plus
    perfect- and inverted-prediction sanity."""
    worst = {"mae": 0.0, "e": 0.0, "s": 0.0, "f": 0.0}
    for seed in range(50):
        r = np.random.default_rng(seed)
        pred = r.uniform(size=(8, 8))
        gt = (r.uniform(size=(8, 8)) < r.uniform(0.2, 0.8)).astype(np.float64)
        pair = EvalPair(pred=pred, gt=gt)
        worst["mae"] = max(worst["mae"], abs(mae(pair) - mae_naive(pred, gt)))
        worst["e"] = max(worst["e"], abs(e_measure_mean(pair) - e_measure_naive(pred, gt)))
        worst["s"] = max(worst["s"], abs(s_measure(pair) - s_measure_naive(pred, gt)))
        worst["f"] = max(worst["f"], abs(weighted_f(pair) - weighted_f_naive(pred, gt)))
    assert worst["mae"] < 1e-9
    assert worst["e"] < 1e-9
    assert worst["s"] < 1e-9
    assert worst["f"] < 1e-6

    gt = np.zeros((16, 16))
    gt[3:11, 5:13] = 1.0
    perfect = EvalPair(pred=gt.copy(), gt=gt)
    assert abs(s_measure(perfect) - 1.0) < 1e-6
    assert abs(weighted_f(perfect) - 1.0) < 1e-6
    assert mae(perfect) == 0.0
    inverted = EvalPair(pred=1.0 - gt, gt=gt)
    assert mae(inverted) == 1.0
    _report(f"PASS metric oracles: mae<={worst['mae']:.1e} e<={worst['e']:.1e} "
            f"s<={worst['s']:.1e} fw<={worst['f']:.1e} over 50 pairs")


def test_criterion_overfit_capability(tmp_path):
    """Seed-7 8-image set, 200 iterations: thresholded Dice > 0.95 per image
    and final epoch-mean loss < 25% of first-epoch mean, within 15 minutes.

    Training config (free under the criterion): encoder widths 48/96/96/
    192/192, full batch 8, single scale, 140 iterations at lr 2e-3 then a
    60-iteration resume at 3e-4. Model seeds 0, 1, and 2 all clear the Dice
    bar on this exact pipeline; seed 0 is pinned. The loss-ratio clause is
    unattainable at desk scale (irreducible 2x2-map loss floor, see ledger)
    and this test states both outcomes honestly.
    """
    t0 = time.time()
    data = tmp_path / "overfit_data"
    stage1 = tmp_path / "overfit_s1"
    stage2 = tmp_path / "overfit_s2"
    pred_dir = tmp_path / "overfit_pred"
    cfg = tmp_path / "model.cfg"
    cfg.write_text("".join(f"encoder.c{i + 1} = {c}\n"
                           for i, c in enumerate((48, 96, 96, 192, 192))))
    assert cli.main(["synth", "--seed", "7", "--count", "8", "--size", "64",
                     "--contrast", "0.15", "--out", str(data)]) == 0
    assert cli.main(["train", "--data", str(data), "--out", str(stage1),
                     "--config", str(cfg), "--seed", "0", "--iterations", "140",
                     "--batch", "8", "--lr", "0.002", "--scales", "1.0",
                     "--quiet"]) == 0
    assert cli.main(["train", "--data", str(data), "--out", str(stage2),
                     "--config", str(cfg), "--seed", "0", "--iterations", "60",
                     "--batch", "8", "--lr", "0.0003", "--scales", "1.0",
                     "--init-ckpt", str(stage1 / "model.ckpt"), "--quiet"]) == 0
    assert cli.main(["predict", "--ckpt", str(stage2 / "model.ckpt"),
                     "--images", str(data / "images"), "--out", str(pred_dir),
                     "--config", str(cfg), "--seed", "0"]) == 0

    dices = []
    for name in sorted(os.listdir(data / "masks")):
        gt = (read_map(data / "masks" / name) >= 0.5).astype(np.float64)
        pred = (read_map(pred_dir / name) > 0.5).astype(np.float64)
        dices.append(dice_coefficient(pred, gt))
    elapsed = time.time() - t0

    totals = []
    for stage in (stage1, stage2):
        rows = open(stage / "loss.csv").read().strip().splitlines()[1:]
        totals += [float(r.split(",")[1]) for r in rows]
    assert len(totals) == 200
    per_epoch = 1  # batch 8 over 8 images
    first_epoch = float(np.mean(totals[:per_epoch]))
    final_epoch = float(np.mean(totals[-per_epoch:]))
    ratio = final_epoch / first_epoch

    assert elapsed < 900.0, f"overfit run took {elapsed:.0f}s"
    assert min(dices) > 0.95, f"dice per image: {[round(d, 4) for d in dices]}"
    _report(f"PASS overfit dice: min={min(dices):.4f} over 8 images, {elapsed:.0f}s")
    _report(f"{'PASS' if ratio < 0.25 else 'FAIL'} overfit loss ratio: "
            f"final/first = {final_epoch:.3f}/{first_epoch:.3f} = {ratio:.3f} "
            "(< 0.25 required; unattainable at desk scale, see ledger)")
    assert ratio < 0.25, (
        f"final epoch-mean {final_epoch:.3f} is {ratio:.1%} of first-epoch mean "
        f"{first_epoch:.3f}; the 2x2 stride-32 maps bound the total below "
        "~45% at this scale (documented spec defect)")


def test_criterion_shape_topology(rng):
    """Stride contract for any legal size; ASPP rates exactly {1,6,12,18};
    loss sums over exactly {3,4,5,g} plus edge."""
    net = ErrNet(seed=0)
    for h, w in ((32, 32), (64, 96)):
        ps = net(T.Tensor(rng.standard_normal((1, 3, h, w))))
        assert ps.p_3.shape == (1, 1, h // 8, w // 8)
        assert ps.p_4.shape == (1, 1, h // 16, w // 16)
        assert ps.p_5.shape == (1, 1, h // 32, w // 32)
        assert ps.p_g.shape == (1, 1, h // 32, w // 32)
        assert ps.p_e.shape == (1, 1, h // 4, w // 4)
    assert STRIDES == (4, 4, 8, 16, 32)
    assert ASPP_DILATIONS == (1, 6, 12, 18)
    assert tuple(b.geometry["dilation"] for b in net.aspp.branches) == (1, 6, 12, 18)

    from errnet.synth import SynthConfig, synth_generate
    s = synth_generate(SynthConfig(seed=1, count=1, size=32))[0]
    lb = total_loss(net(T.Tensor(s.image[None])), T.Tensor(s.mask[None]),
                    T.Tensor(s.edge[None]))
    assert set(lb.per_level) == {"3", "4", "5", "g"}
    assert LEVEL_ORDER == ("3", "4", "5", "g")
    folded = lb.edge
    for lvl in LEVEL_ORDER:
        folded = folded + sum(lb.per_level[lvl])
    assert folded == lb.total
    _report("PASS shape/topology: stride contract, dilations {1,6,12,18}, "
            "loss over {3,4,5,g}+edge")


def test_criterion_determinism(tmp_path):
    """Fixed seed gives bitwise-identical checkpoints, predictions, CSVs."""
    def run_once(tag):
        data = tmp_path / f"data_{tag}"
        out = tmp_path / f"run_{tag}"
        pred = tmp_path / f"pred_{tag}"
        assert cli.main(["synth", "--seed", "11", "--count", "2", "--size", "64",
                         "--out", str(data)]) == 0
        assert cli.main(["train", "--data", str(data), "--out", str(out),
                         "--seed", "4", "--iterations", "4", "--batch", "2",
                         "--quiet"]) == 0
        assert cli.main(["predict", "--ckpt", str(out / "model.ckpt"),
                         "--images", str(data / "images"), "--out", str(pred),
                         "--seed", "4"]) == 0
        blobs = {}
        for root in (data, out, pred):
            for dirpath, _, files in os.walk(root):
                for f in sorted(files):
                    rel = os.path.relpath(os.path.join(dirpath, f), tmp_path)
                    rel = rel.split(os.sep, 1)[1]  # drop the tagged top dir
                    blobs[rel] = open(os.path.join(dirpath, f), "rb").read()
        return blobs

    first = run_once("a")
    second = run_once("b")
    assert first.keys() == second.keys()
    diffs = [k for k in first if first[k] != second[k]]
    assert not diffs, f"non-deterministic artifacts: {diffs}"
    _report(f"PASS determinism: {len(first)} artifacts bitwise identical across runs")


def test_criterion_non_reproduction_statement():
    """README records the full-scale reference values as non-targets."""
    readme = open(os.path.join(os.path.dirname(__file__), "..", "README.md")).read()
    for token in (".780", ".867", ".629", ".044", "79.3"):
        assert token in readme, f"reference value {token} missing from README"
    lowered = readme.lower()
    assert "not" in lowered and ("reference" in lowered or "target" in lowered)
    _report("PASS non-reproduction statement: reference values recorded in README")
