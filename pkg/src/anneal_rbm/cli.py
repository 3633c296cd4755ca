"""Command-line harness for reproducible seeded experiments.

Subcommands: `bas` (emit the dataset), `train` (run a config, write the
history CSV, per-image bands and checkpoints), `eval` (metrics on a
checkpoint), `sample` (emit a sample batch CSV for a checkpoint), and
`compare` (summary table across history CSVs).

Every CSV starts with a header comment carrying the fully resolved
config; re-running from that header reproduces the file byte for byte.
Exit codes: 0 success, 2 malformed config (offending key on stderr),
3 infeasible embedding, 1 other errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annealer import EmulatorConfig, make_schedule, forward_sample, reverse_sample
from .bas import clamp_mask, generate_bas, save_bas
from .chimera import default_graph, embed_rbm, identity_embedding, lower_problem
from .config import (load_config, parse_header, render_header, sparse_mask_80,
                     to_train_config)
from .errors import ConfigError, ContractViolation, EmbeddingError
from .ising import to_ising
from .metrics import (delta_probability, log_likelihood_av, metrics_csv,
                      per_image_band_csv, reconstruction_score)
from .rbm import load_rbm, save_rbm
from .training import STREAM_EVAL, stream, train


def _apply_thread_cap() -> None:
    """ANNEAL_RBM_THREADS caps worker parallelism (numba's thread pool).

    Results are independent of the cap: the sampler's randomness is
    counter-based, not sequential.
    """
    cap = os.environ.get("ANNEAL_RBM_THREADS")
    if not cap:
        return
    try:
        import numba
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def _build_embedding(values: dict):
    n_v, n_h = values["train.n_v"], values["train.n_h"]
    if values["train.method"] in ("classical", "exact"):
        return None
    kind = values["embedding.kind"]
    if kind == "identity":
        return identity_embedding(n_v, n_h)
    if kind != "chimera":
        raise ConfigError("embedding.kind", f"unknown embedding {kind!r}")
    graph = default_graph(with_faults=values["embedding.use_fault_fixture"])
    return embed_rbm(graph, n_v, n_h, values["embedding.j_c"])


def _mask_from(values: dict):
    name = values.get("train.mask", "none")
    if name == "none":
        return None
    if name == "sparse80":
        return sparse_mask_80(values["train.n_v"], values["train.n_h"])
    raise ConfigError("train.mask", f"unknown mask {name!r}")


def cmd_bas(args) -> int:
    ds = generate_bas(args.m)
    if args.out:
        save_bas(ds, args.out)
    else:
        for img in ds.images:
            sys.stdout.write("".join(str(int(b)) for b in img) + "\n")
    return 0


def cmd_train(args) -> int:
    values = load_config(args.config, args.override or ())
    if args.seed is not None:
        values["train.seed"] = args.seed
    header = f"anneal-rbm v{__version__} train config: {render_header(values)}"
    config = to_train_config(values)
    embedding = _build_embedding(values)
    mask = _mask_from(values)
    dataset = generate_bas(int(round(np.sqrt(config.n_v)))).images
    history = train(config, dataset, embedding=embedding, mask=mask)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    history.to_csv(out / "history.csv", header=header)
    for epoch, rbm in sorted(history.checkpoints.items()):
        save_rbm(rbm, out / f"checkpoint_e{epoch:05d}.rbm")
    if values["eval.bands"]:
        epochs = [rec["epoch"] for rec in history.records]
        bands = np.array([
            delta_probability(history.checkpoints[min(
                history.checkpoints, key=lambda k: abs(k - ep))], dataset)[1]
            for ep in epochs])
        per_image_band_csv(out / "bands.csv", epochs, bands, header=header)
    print(f"wrote {out / 'history.csv'} ({len(history.records)} records, "
          f"{len(history.checkpoints)} checkpoints)")
    return 0


def cmd_eval(args) -> int:
    rbm = load_rbm(args.checkpoint)
    dataset = generate_bas(int(round(np.sqrt(rbm.n_v)))).images
    rng = stream(args.seed, STREAM_EVAL)
    row = {"checkpoint": str(args.checkpoint)}
    row["ll_av"] = log_likelihood_av(rbm, dataset)
    total, per_image, bottom = delta_probability(rbm, dataset)
    row["delta_prob"] = total
    row["delta_bottom"] = bottom
    m = int(round(np.sqrt(rbm.n_v)))
    row["reconstruction"] = reconstruction_score(
        rbm, dataset, clamp_mask(m), args.n_g, args.trials, rng)
    header = (f"anneal-rbm v{__version__} eval config: "
              f"train.seed={args.seed} train.recon_n_g={args.n_g} "
              f"train.recon_trials={args.trials}")
    if args.out:
        metrics_csv(args.out, [row], header=header)
    else:
        for key, val in row.items():
            print(f"{key}: {val}")
    return 0


def cmd_sample(args) -> int:
    values = load_config(args.config, args.override or ())
    if args.seed is not None:
        values["train.seed"] = args.seed
    values["train.method"] = args.method
    rbm = load_rbm(args.checkpoint)
    values["train.n_v"], values["train.n_h"] = rbm.n_v, rbm.n_h
    header = (f"anneal-rbm v{__version__} sample config: "
              f"{render_header(values)} sample.cycles={args.cycles} "
              f"sample.checkpoint={args.checkpoint}")
    embedding = _build_embedding(values)
    phys = lower_problem(to_ising(rbm, values["train.alpha"]), embedding)
    t_eff = values.get("train.t_eff") or values["train.alpha"]
    emu = EmulatorConfig(
        t_eff=t_eff,
        sweeps_per_microsecond=values["annealer.sweeps_per_microsecond"],
        field_noise_sd=values["annealer.field_noise_sd"],
        coupling_noise_sd=values["annealer.coupling_noise_sd"])
    rng = stream(values["train.seed"], STREAM_EVAL, 1)
    policy = values["annealer.chain_policy"]
    if args.method == "forward":
        sched = make_schedule("forward", values["annealer.forward_anneal_us"])
        batch = forward_sample(phys, sched, args.cycles, emu, rng, policy=policy)
    else:
        sched = make_schedule("reverse", values["annealer.reverse_down_us"],
                              values["annealer.reverse_pause_us"],
                              values["annealer.reverse_up_us"],
                              values["annealer.s_pause"])
        dataset = generate_bas(int(round(np.sqrt(rbm.n_v)))).images
        from .training import _reverse_starts
        starts = _reverse_starts(rbm, dataset, args.cycles, rng)
        batch = reverse_sample(phys, starts, sched, args.cycles, emu, rng,
                               policy=policy)
    batch.to_csv(args.out, header=header)
    print(f"wrote {args.out} ({len(batch)} samples, "
          f"break rate {batch.break_rate:.4f})")
    return 0


def cmd_compare(args) -> int:
    rows = []
    for path in args.histories:
        records = _read_history(path)
        evaluated = [r for r in records if r.get("ll_av") not in (None, "")]
        final = evaluated[-1]
        best_ll = max(float(r["ll_av"]) for r in evaluated)
        rows.append({
            "history": str(path),
            "final_epoch": int(final["epoch"]),
            "final_ll_av": float(final["ll_av"]),
            "best_ll_av": best_ll,
            "final_delta_prob": float(final["delta_prob"]),
            "final_reconstruction": (float(final["reconstruction"])
                                     if final.get("reconstruction") else None),
        })
    if args.out:
        metrics_csv(args.out, rows, header=f"anneal-rbm v{__version__} compare")
    else:
        for row in rows:
            print(" ".join(f"{k}={v}" for k, v in row.items()))
    return 0


def _read_history(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if not ln.startswith("#")]
    cols = lines[0].split(",")
    return [dict(zip(cols, ln.split(","))) for ln in lines[1:]]


def reproduce_from_header(history_csv, out_dir) -> int:
    """Re-run a training experiment from the header of its history CSV."""
    with open(history_csv) as fh:
        values = parse_header(fh.readline())
    header = f"anneal-rbm v{__version__} train config: {render_header(values)}"
    config = to_train_config(values)
    embedding = _build_embedding(values)
    mask = _mask_from(values)
    dataset = generate_bas(int(round(np.sqrt(config.n_v)))).images
    history = train(config, dataset, embedding=embedding, mask=mask)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    history.to_csv(out / "history.csv", header=header)
    for epoch, rbm in sorted(history.checkpoints.items()):
        save_rbm(rbm, out / f"checkpoint_e{epoch:05d}.rbm")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anneal-rbm",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bas", help="emit the Bars-and-Stripes dataset")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bas)

    p = sub.add_parser("train", help="run a training config")
    p.add_argument("--config", required=True,
                   help="preset name or config file path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--override", action="append", metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="metrics for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-g", type=int, default=500, dest="n_g")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="emit a sample batch for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=("forward", "reverse"), required=True)
    p.add_argument("--cycles", type=int, default=150)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--override", action="append", metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("compare", help="summary table over history CSVs")
    p.add_argument("histories", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EmbeddingError as exc:
        print(f"embedding error: {exc}", file=sys.stderr)
        return 3
    except (ContractViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
