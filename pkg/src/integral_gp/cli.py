"""Command line pipeline: ``integral-gp <subcommand> [options]``.

Subcommands
-----------
synth      write the synthetic layouts, truth grid and decision threshold
fit        learn hyperparameters from a sample CSV and write model JSON
predict    posterior mean and std at query supports
fuse       fuse a block model with assays
validate   ratio distortion and category agreement against a reference
classify   grade categories, high-grade probability and threshold sensitivity
repro      point versus integral comparison on both synthetic scenarios
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, fusion, gp, hyperopt, io, metrics, repro, synthetic
from .kernels import KernelFamily, parse_family
from .supports import KernelSpec, Supports

log = logging.getLogger("integral_gp")

_AXES = ("x", "y", "z")


def _pair(text: str, name: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be two comma-separated numbers") from None
    return lo, hi


def _thresholds(text):
    return _pair(text, "thresholds")


def _bounds(text: str) -> dict:
    """``amplitude=1e-6:4,length_scale=0.01:100,noise=1e-6:1``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            key, rng = part.split("=")
            lo, hi = (float(v) for v in rng.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse bound {part!r}; use key=lo:hi") from None
        out[key.strip()] = (lo, hi)
    return out


def _int_list(text: str):
    return tuple(int(v) for v in text.split(","))


def _run_config(args) -> dict:
    skip = {"func", "out", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _optim(args) -> hyperopt.OptimConfig:
    return hyperopt.OptimConfig(n_starts=args.starts, seed=args.seed, bounds=args.bounds or {})


def _support_columns(s: Supports) -> dict:
    D = s.dim
    cols = {a: s.centroids[:, q] for q, a in enumerate(_AXES[:D])}
    cols.update({"h" + a: s.extents[:, q] for q, a in enumerate(_AXES[:D])})
    return cols


def _write_json(path: Path, obj, args):
    obj = {"tool": f"integral-gp {__version__}", "seed": args.seed,
           "config": io.config_hash(_run_config(args)), **obj}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    scn = synthetic.Scenario.from_id(args.scenario)
    out = _outdir(args)
    cfg, seed = _run_config(args), args.seed
    meta = {"scenario": scn.name}
    for which in ("points", "lines"):
        io.write_samples(out / f"{which}.csv", synthetic.sample_layout(scn, which), seed, cfg, meta)
    blocks = synthetic.sample_layout(scn, "blocks")
    model = fusion.BlockModel(
        synthetic.BLOCK_ORIGIN, (synthetic.BLOCK_SIZE,) * 2, synthetic.BLOCK_COUNTS, blocks.values
    )
    io.write_block_model(out / "blocks.csv", model, seed, cfg, meta)
    nx, ny = args.grid
    xs = np.linspace(*scn.x_range, nx)
    ys = np.linspace(*scn.y_range, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    io.write_table(
        out / "truth_grid.csv",
        {"x": X, "y": Y, "value": scn.f(X, Y), "above": scn.above(X, Y).astype(int)},
        seed, cfg, meta,
    )
    tau = synthetic.threshold_tau(scn)
    (out / "tau.txt").write_text(io.fmt(tau) + "\n", encoding="utf-8")
    print(f"{scn.name}: tau = {tau:.6f}; wrote {out}")
    return 0


# ---------------------------------------------------------------- fit / predict


def _load_training(args):
    train, _ = io.read_samples(args.train)
    if args.points:
        train = train.as_points()
    return train


def cmd_fit(args) -> int:
    train = _load_training(args)
    noise = train.noise if train.noise is not None and np.any(train.noise > 0) else None
    res = hyperopt.optimize_full(args.kernel, train, _optim(args), noise_vec=noise)
    path = Path(args.out)
    _write_json(path, {"kernel": res.kernel.to_dict(), "lml": res.lml,
                       "n_train": len(train), "points": bool(args.points)}, args)
    k = res.kernel
    print(f"LML {res.lml:.6g}  amplitude {k.amplitude:.6g}  length_scales "
          f"{' '.join(f'{v:.6g}' for v in k.length_scales)}  noise {k.base_noise:.6g}")
    return 0


def _load_model(path) -> KernelSpec:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    try:
        return KernelSpec.from_dict(d["kernel"])
    except (KeyError, TypeError) as exc:
        raise io.SchemaError(f"{path}: model file lacks kernel field {exc}") from None


def cmd_predict(args) -> int:
    kernel = _load_model(args.model)
    train = _load_training(args)
    query, _ = io.read_samples(args.query)
    if args.points:
        query = query.as_points()
    noise = train.noise if train.noise is not None and np.any(train.noise > 0) else None
    post = gp.fit(kernel, train, noise).predict(query)
    cols = _support_columns(query)
    cols.update(mean=post.mean, std=post.std)
    if args.hg_prob:
        cols["hg_prob"] = metrics.hg_probability(post.mean, post.std, args.hg_threshold)
    io.write_table(args.out, cols, args.seed, _run_config(args))
    print(f"predicted {len(query)} supports -> {args.out}")
    return 0


# ---------------------------------------------------------------- fuse


def cmd_fuse(args) -> int:
    model, _ = io.read_block_model(args.epr)
    bh, _ = io.read_samples(args.bh)
    cfg = fusion.FusionConfig(
        bench_top=args.bench_top,
        epsilon=args.epsilon,
        neighborhood_radius=args.radius,
        subdiv=args.subdiv,
        use_epr=not args.no_epr,
    )
    try:
        rep = fusion.fuse(model, bh, cfg, _optim(args), args.kernel)
    except fusion.EmptyBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args)
    run_cfg, seed = _run_config(args), args.seed
    meta = {"mode": rep.mode}
    q = rep.field.locations
    io.write_table(out / "fused_mean.csv", {**_support_columns(q), "mean": rep.field.mean}, seed, run_cfg, meta)
    io.write_table(out / "fused_std.csv", {**_support_columns(q), "std": rep.field.std}, seed, run_cfg, meta)
    E = _support_columns(rep.epr_cells)
    io.write_table(out / "sigma_hat.csv", {**E, "sigma_hat": rep.bh_uncertainty}, seed, run_cfg, meta)
    io.write_table(out / "counts.csv", {**E, "count": rep.bh_count}, seed, run_cfg, meta)
    io.write_table(out / "noise.csv", {**E, "noise": rep.epr_noise}, seed, run_cfg, meta)
    _write_json(out / "hyperparams.json", {
        "kernel": rep.kernel.to_dict(), "lml": rep.lml, "mode": rep.mode,
        "bh_density": rep.bh_density, "n_blocks": len(rep.epr_cells), "n_assays": len(rep.bh),
    }, args)
    print(f"mode={rep.mode}: {len(rep.epr_cells)} blocks, {len(rep.bh)} assays, "
          f"density {rep.bh_density:.4g} -> {out}")
    return 0


# ---------------------------------------------------------------- validate / classify


def _field_values(cols, path):
    for key in ("mean", "value"):
        if key in cols:
            return cols[key]
    raise io.SchemaError(f"{path}: needs a 'mean' or 'value' column")


def _load_reference(path) -> Supports:
    """Reference samples from a sample CSV or a field CSV (``mean`` column)."""
    cols, _ = io.read_table(path)
    axes = [a for a in _AXES if a in cols]
    if "x" not in cols or "y" not in cols:
        raise io.SchemaError(f"{path}: reference needs 'x' and 'y' columns")
    A = np.column_stack([cols[a] for a in axes])
    return Supports(A, None, _field_values(cols, path))


def match_reference(field_cols: dict, ref: Supports) -> np.ndarray:
    """Mean reference value inside each field cell's horizontal footprint.

    A footprint is ``(a - h/2, a + h/2]`` per horizontal axis, or the exact
    coordinate when the extent is zero.  Cells without a reference are NaN.
    """
    hax = [a for a in ("x", "y") if a in field_cols]
    n = len(field_cols[hax[0]])
    inside = np.ones((n, len(ref)), dtype=bool)
    for q, a in enumerate(hax):
        c = field_cols[a][:, None]
        h = field_cols.get("h" + a, np.zeros(n))[:, None]
        r = ref.centroids[None, :, q]
        box = (r > c - h / 2) & (r <= c + h / 2)
        inside &= np.where(h > 0, box, r == c)
    cnt = inside.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, inside @ ref.values / cnt, np.nan)


def _category_summary(model_vals, ref_vals, thresholds) -> dict:
    lm = metrics.classify(model_vals, thresholds)
    lr = metrics.classify(ref_vals, thresholds)
    delta, mabs, msigned = metrics.categorical_distance(lm, lr)
    P, n_ref, n_mod = metrics.confusion_probs(lm, lr)
    return {
        "labels_model": lm, "labels_reference": lr, "delta": delta,
        "mean_abs_delta": mabs, "mean_delta": msigned,
        "confusion": [[None if np.isnan(v) else float(v) for v in row] for row in P],
        "n_reference": n_ref.tolist(), "n_model": n_mod.tolist(),
    }


def _print_summary(s: dict):
    for k in ("sigma_R", "n_used", "n_rejected", "mean_abs_delta", "mean_delta"):
        if k in s:
            print(f"{k:>15}: {s[k]}")
    if "confusion" in s:
        print("confusion p(model | reference), rows W LG HG:")
        for name, row in zip(("W", "LG", "HG"), s["confusion"]):
            print(f"  {name:>2} " + " ".join("   nan" if v is None else f"{v:6.3f}" for v in row))
        print(f"  n(reference) {s['n_reference']}  n(model) {s['n_model']}")


def cmd_validate(args) -> int:
    cols, _ = io.read_table(args.field)
    model_vals = _field_values(cols, args.field)
    ref_vals = match_reference(cols, _load_reference(args.reference))
    ok = np.isfinite(ref_vals)
    if not ok.any():
        print("error: no field cell contains a reference sample", file=sys.stderr)
        return 2
    sr = metrics.sigma_R(model_vals[ok], ref_vals[ok])
    cat = _category_summary(model_vals[ok], ref_vals[ok], args.thresholds)
    summary = {"sigma_R": sr.sigma, "n_used": sr.n_used, "n_rejected": sr.n_rejected,
               "n_unmatched": int((~ok).sum()),
               **{k: v for k, v in cat.items() if not k.startswith(("labels", "delta"))}}
    out = _outdir(args)
    per = {k: cols[k][ok] for k in cols if k in ("x", "y", "z", "hx", "hy", "hz")}
    per.update(model=model_vals[ok], reference=ref_vals[ok],
               label_model=cat["labels_model"], label_reference=cat["labels_reference"],
               delta=cat["delta"])
    io.write_table(out / "validation.csv", per, args.seed, _run_config(args))
    _write_json(out / "summary.json", summary, args)
    _print_summary(summary)
    return 0


def cmd_classify(args) -> int:
    cols, _ = io.read_table(args.field)
    mean = _field_values(cols, args.field)
    labels = metrics.classify(mean, args.thresholds)
    per = {k: cols[k] for k in cols if k in ("x", "y", "z", "hx", "hy", "hz")}
    per.update(mean=mean, label=labels)
    if args.hg_prob:
        if "std" not in cols:
            raise io.SchemaError(f"{args.field}: --hg-prob needs a 'std' column")
        per["hg_prob"] = metrics.hg_probability(mean, cols["std"], args.thresholds[1])
    perturbed = args.perturbed or tuple(t - 0.1 for t in args.thresholds)
    sens = metrics.threshold_sensitivity(mean, args.thresholds, perturbed)
    changed = np.zeros(mean.size, dtype=int)
    changed[sens["index"]] = 1
    per["changed_if_perturbed"] = changed
    summary = {"n_cells": int(mean.size),
               "counts": {c.name: int(np.sum(labels == c)) for c in metrics.CategoryLabel},
               "n_changed_if_perturbed": sens["n_changed"], "perturbed": list(perturbed)}
    if args.reference:
        rv = match_reference(cols, _load_reference(args.reference))
        ok = np.isfinite(rv)
        if ok.any():
            cat = _category_summary(mean[ok], rv[ok], args.thresholds)
            summary.update({k: v for k, v in cat.items() if not k.startswith(("labels", "delta"))})
    out = _outdir(args)
    io.write_table(out / "classes.csv", per, args.seed, _run_config(args))
    _write_json(out / "summary.json", summary, args)
    print(f"labels W/LG/HG: {summary['counts']}; {sens['n_changed']} change under {perturbed}")
    _print_summary(summary)
    return 0


# ---------------------------------------------------------------- repro


def cmd_repro(args) -> int:
    cfg = repro.ReproConfig(family=parse_family(args.kernel).tag, n_starts=args.starts,
                            seeds=args.seeds, support_radius=args.radius,
                            bounds=args.bounds)
    scen = [synthetic.Scenario.from_id(s).name for s in args.scenarios]

    def progress(r):
        log.info("%s %-8s seed %d: boundary %.4f value %.4f", r.scenario, r.arm, r.seed,
                 r.boundary_rmse, r.value_rmse)

    results = repro.run(scen, cfg, progress)
    out = _outdir(args)
    rows = [r for _, rs in results.values() for r in rs]
    io.write_table(out / "runs.csv", {
        "scenario": [synthetic.SCENARIOS.index(r.scenario) + 1 for r in rows],
        "integral": [int(r.arm == "integral") for r in rows],
        "seed": [r.seed for r in rows],
        "lml": [r.lml for r in rows],
        "boundary_rmse": [r.boundary_rmse for r in rows],
        "value_rmse": [r.value_rmse for r in rows],
        "value_rmse_support_only": [r.value_rmse_support_only for r in rows],
        "n_missing": [r.n_missing for r in rows],
    }, args.seed, _run_config(args), {"mask_radius": cfg.support_radius, "interface_band": cfg.interface_band})
    summaries = [repro.summarize(d, rs) for d, rs in results.values()]
    _write_json(out / "summary.json", {"summaries": summaries}, args)
    table = repro.format_table(summaries)
    (out / "table.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="integral-gp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"integral-gp {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help, optim=False):
        sp.add_argument("--out", required=True, help=out_help)
        sp.add_argument("--seed", type=int, default=0)
        if optim:
            sp.add_argument("--kernel", default=KernelFamily.MATERN32.tag,
                            choices=[f.tag for f in KernelFamily])
            sp.add_argument("--starts", type=int, default=10, help="optimiser restarts")
            sp.add_argument("--bounds", type=_bounds, default=None,
                            help="e.g. amplitude=1e-6:4,length_scale=0.01:100,noise=1e-6:1")

    sp = sub.add_parser("synth", help="synthetic layouts and truth")
    sp.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    sp.add_argument("--grid", type=_int_list, default=(315, 185), help="truth grid nx,ny")
    common(sp, "output directory")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("fit", help="learn hyperparameters")
    sp.add_argument("--train", required=True)
    sp.add_argument("--points", action="store_true", help="collapse supports to centroids")
    common(sp, "model JSON path", optim=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="posterior at query supports")
    sp.add_argument("--model", required=True)
    sp.add_argument("--train", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--points", action="store_true", help="collapse supports to centroids")
    sp.add_argument("--hg-prob", action="store_true", help="add a high-grade probability column")
    sp.add_argument("--hg-threshold", type=float, default=60.0)
    common(sp, "field CSV path")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("fuse", help="fuse a block model with assays")
    sp.add_argument("--epr", required=True, help="block model CSV")
    sp.add_argument("--bh", required=True, help="assay CSV")
    sp.add_argument("--bench-top", type=float, default=None, help="drilled bench top elevation")
    sp.add_argument("--epsilon", type=float, default=0.01)
    sp.add_argument("--radius", type=int, default=0, help="neighbourhood radius in blocks")
    sp.add_argument("--subdiv", type=int, default=1)
    sp.add_argument("--no-epr", action="store_true", help="predict from assays only")
    common(sp, "output directory", optim=True)
    sp.set_defaults(func=cmd_fuse)

    for name, func, help_ in (("validate", cmd_validate, "compare a field with reference samples"),
                              ("classify", cmd_classify, "grade categories")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--field", required=True)
        sp.add_argument("--reference", required=(name == "validate"))
        sp.add_argument("--thresholds", type=_thresholds, default=metrics.DEFAULT_THRESHOLDS)
        if name == "classify":
            sp.add_argument("--perturbed", type=_thresholds, default=None,
                            help="comparison thresholds (default: both lowered by 0.1)")
            sp.add_argument("--hg-prob", action="store_true")
        common(sp, "output directory")
        sp.set_defaults(func=func)

    sp = sub.add_parser("repro", help="point versus integral experiment")
    sp.add_argument("--scenarios", type=_int_list, default=(1, 2))
    sp.add_argument("--seeds", type=_int_list, default=(0, 1, 2, 3, 4))
    sp.add_argument("--radius", type=float, default=1.0, help="sample proximity for value RMSE")
    common(sp, "output directory", optim=True)
    sp.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (io.SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
