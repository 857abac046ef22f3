"""Command-line harness: synth, train, predict, eval, gradcheck.

Exit codes: 0 success, 1 validation error, 2 numerical-check failure.
Configuration precedence is defaults < --config file < flags, and the
effective configuration is echoed before work starts.
"""

import argparse
import os
import sys

from . import __version__
from .checkpoint import CheckpointError, load_into
from .checks import run_gradcheck
from .config import TrainConfig, apply_overrides, config_lines, parse_config_file
from .metrics import evaluate_folder, report_to_csv
from .model import final_prediction, sigmoid
from .netpbm import read_map, write_map
from .synth import SynthConfig, synth_generate, write_dataset
from .tensor import Tensor, bilinear_resize, no_grad
from .train import build_model, train


def _build_parser():
    parser = argparse.ArgumentParser(prog="errnet", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value configuration file")
    shared.add_argument("--seed", type=int, help="PRNG seed")
    shared.add_argument("--out", help="output path")

    p = sub.add_parser("synth", parents=[shared], help="generate a synthetic dataset")
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--contrast", type=float, default=0.15)

    p = sub.add_parser("train", parents=[shared], help="train on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--iterations", type=int, help="stop after this many iterations")
    p.add_argument("--scales", help="comma-separated scale factors")
    p.add_argument("--init-ckpt", help="checkpoint to resume from")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("predict", parents=[shared], help="write prediction maps")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--dump-all", action="store_true",
                   help="also write the p4/p5/pg/pe maps")

    p = sub.add_parser("eval", parents=[shared], help="evaluate predictions against GT")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)

    sub.add_parser("gradcheck", parents=[shared], help="finite-difference verification")
    return parser


def _effective_config(args):
    cfg = TrainConfig()
    if getattr(args, "config", None):
        cfg = apply_overrides(cfg, parse_config_file(args.config))
    flag_overrides = {}
    for key, attr in (("lr", "lr"), ("epochs", "epochs"), ("batch", "batch"),
                      ("seed", "seed"), ("scales", "scales")):
        value = getattr(args, attr, None)
        if value is not None:
            flag_overrides[key] = value
    cfg = apply_overrides(cfg, flag_overrides)
    print("effective configuration:")
    for line in config_lines(cfg):
        print("  " + line)
    return cfg


def cmd_synth(args):
    if args.out is None:
        print("synth: --out directory is required", file=sys.stderr)
        return 1
    try:
        cfg = SynthConfig(seed=args.seed if args.seed is not None else 0,
                          count=args.count, size=args.size, contrast=args.contrast)
    except ValueError as exc:
        print(f"synth: {exc}", file=sys.stderr)
        return 1
    samples = synth_generate(cfg)
    write_dataset(samples, args.out)
    print(f"wrote {len(samples)} samples under {args.out}")
    return 0


def cmd_train(args):
    cfg = _effective_config(args)
    try:
        ckpt, csv = train(cfg, args.data, args.out or ".",
                          iterations=args.iterations, init_ckpt=args.init_ckpt,
                          log=None if args.quiet else print)
    except (FileNotFoundError, ValueError, CheckpointError) as exc:
        print(f"train: {exc}", file=sys.stderr)
        return 1
    print(f"checkpoint: {ckpt}")
    print(f"loss csv:   {csv}")
    return 0


def cmd_predict(args):
    cfg = _effective_config(args)
    out_dir = args.out or "predictions"
    net = build_model(cfg)
    try:
        load_into(args.ckpt, net.parameters())
    except (FileNotFoundError, CheckpointError) as exc:
        print(f"predict: {exc}", file=sys.stderr)
        return 1
    names = sorted(f for f in os.listdir(args.images) if f.endswith(".ppm"))
    if not names:
        print(f"predict: no .ppm images under {args.images}", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    for name in names:
        stem = name[:-4]
        image = read_map(os.path.join(args.images, name))
        h, w = image.shape[1], image.shape[2]
        with no_grad():
            preds = net(Tensor(image[None]))
            final = final_prediction(preds, h, w)
            write_map(os.path.join(out_dir, f"{stem}.pgm"), final.data[0, 0])
            if args.dump_all:
                for label, logits in (("p4", preds.p_4), ("p5", preds.p_5),
                                      ("pg", preds.p_g), ("pe", preds.p_e)):
                    up = sigmoid(bilinear_resize(logits, h, w))
                    write_map(os.path.join(out_dir, f"{stem}.{label}.pgm"), up.data[0, 0])
    print(f"wrote predictions for {len(names)} images to {out_dir}")
    return 0


def cmd_eval(args):
    try:
        report = evaluate_folder(args.pred, args.gt)
    except FileNotFoundError as exc:
        print(f"eval: {exc}", file=sys.stderr)
        return 1
    for err in report.errors:
        print(f"eval error: {err}", file=sys.stderr)
    means = report.means()
    if means is None:
        print("eval: no image pairs evaluated", file=sys.stderr)
        return 1
    print(f"S_alpha  {means['s_alpha']:.6f}")
    print(f"E_phi    {means['e_phi']:.6f}")
    print(f"F_w_beta {means['f_w_beta']:.6f}")
    print(f"MAE      {means['mae']:.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report_to_csv(report))
        print(f"report csv: {args.out}")
    return 1 if report.errors else 0


def cmd_gradcheck(args):
    seed = args.seed if args.seed is not None else 0
    report, thresholds, ok = run_gradcheck(seed=seed)
    for name, err in report.items():
        status = "pass" if err < thresholds[name] else "FAIL"
        print(f"{name:40s} {err:12.3e}  (< {thresholds[name]:.0e})  {status}")
    print("gradcheck:", "all components passed" if ok else "FAILURES above")
    return 0 if ok else 2


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"synth": cmd_synth, "train": cmd_train, "predict": cmd_predict,
                "eval": cmd_eval, "gradcheck": cmd_gradcheck}
    return handlers[args.command](args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
