"""Reproducible experiment runner.

Subcommands: simulate, theory, compare, waiting-times, concentration.
All randomness flows from --seed through documented stream splitting by
(replica index, purpose tag), so any command with a fixed seed writes
byte-identical data files; wall-clock metrics go to a separate
metrics.json, which is the one deliberately non-reproducible output.

Config files are flat `key = value` text (keys are the long flag names,
`#` comments allowed); command-line flags win over config values.

Exit codes: 0 pass, 1 threshold failure, 2 usage or config error,
3 resource cap hit.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .models import (
    ModelSpec,
    ResourceCapError,
    ba_run_identified,
    ba_run_rescaled,
    ba_run_single,
    iipa_run,
    price_run,
    simon_run,
    simon_run_with_genealogy,
)
from .rng import make_rng
from .stats import (
    DegreeHistogram,
    collect_descendant_waiting_times,
    collect_waiting_times,
    concentration_scan,
    fit_exponential_rate,
    histogram,
    histogram_from_checkpoint,
    histogram_from_sizes,
    ks_statistic,
    tail_slope,
    total_variation,
)
from .theory import TheoryPmf, iipa_expected, price_expected, simon_expected, theory_pmf
from .yule import YuleCaps, yule_simulate_event_driven

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config file and argument plumbing
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    values = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line is not key = value: {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _merge_config(args: argparse.Namespace) -> None:
    """Fill still-unset options from the config file; flags win."""
    if not getattr(args, "config", None):
        return
    for key, text in _load_config(args.config).items():
        if not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, _coerce(text))


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required here")


def _default(args, name, value):
    if getattr(args, name) is None:
        setattr(args, name, value)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# File output (deterministic formatting)
# ---------------------------------------------------------------------------


def _write_histogram_csv(path: Path, hist: DegreeHistogram, model: str) -> None:
    lines = [f"# kind={hist.kind} model={model} t={hist.t!r} "
             f"vertices={hist.n_vertices} beyond={hist.beyond}",
             "k,count,fraction"]
    for k in np.flatnonzero(hist.counts):
        if k == 0:
            continue
        c = int(hist.counts[k])
        lines.append(f"{int(k)},{c},{c / hist.n_vertices!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_histogram_csv(path) -> DegreeHistogram:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    if text and text[0].startswith("#"):
        for token in text[0][1:].split():
            if "=" in token:
                key, val = token.split("=", 1)
                meta[key] = val
        text = text[1:]
    if not text or text[0] != "k,count,fraction":
        raise UsageError(f"{path}: not a histogram CSV")
    ks, counts = [], []
    for line in text[1:]:
        if not line.strip():
            continue
        k, c, _ = line.split(",")
        ks.append(int(k))
        counts.append(int(c))
    if not ks:
        raise UsageError(f"{path}: empty histogram")
    arr = np.zeros(max(ks) + 1, dtype=np.int64)
    for k, c in zip(ks, counts):
        arr[k] = c
    t = None if meta.get("t", "None") == "None" else float(meta["t"])
    return DegreeHistogram(arr, int(arr.sum()) + int(meta.get("beyond", 0)), t,
                           meta.get("kind", "in-degree"),
                           beyond=int(meta.get("beyond", 0)))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _geometric_checkpoints(total: int, points: int = 8) -> list[int]:
    if total <= 1:
        return [total]
    ts = np.unique(np.geomspace(10, total, points).astype(np.int64))
    return [int(t) for t in ts if 1 <= t <= total] or [total]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _spec_from_args(args) -> ModelSpec:
    return ModelSpec(model=args.model, alpha=args.alpha, m=args.m,
                     k0=args.k0 if args.k0 is not None else 1,
                     out_degree_law=args.out_degree_law or "constant",
                     beta=args.beta, lam=getattr(args, "lam", None))


def _run_one(args, spec: ModelSpec, replica: int, checkpoints):
    rng = make_rng(args.seed, replica=replica, purpose="simulate")
    if spec.model == "simon":
        if args.genealogy:
            return simon_run_with_genealogy(args.steps, spec.alpha, rng)
        return simon_run(args.steps, spec.alpha, rng, checkpoints)
    if spec.model == "iipa":
        return iipa_run(args.vertices, int(spec.m), rng, checkpoints)
    if spec.model == "ba":
        if int(spec.m) == 1:
            return ba_run_single(args.vertices, rng, checkpoints)
        return ba_run_identified(args.vertices, int(spec.m), rng)
    if spec.model == "ba-rescaled":
        return ba_run_rescaled(args.vertices, int(spec.m), rng, checkpoints)
    if spec.model == "price":
        return price_run(args.vertices, spec, rng)
    raise UsageError(f"simulate does not handle model {spec.model!r}")


def _simulate_yule(args, out: Path) -> dict:
    caps = YuleCaps(max_genera=args.max_genera or 10_000_000,
                    max_species=args.max_species or 10_000_000)
    pooled = []
    for replica in range(args.replicas):
        rng = make_rng(args.seed, replica=replica, purpose="simulate")
        pooled.append(yule_simulate_event_driven(args.beta, args.lam,
                                                 args.time_horizon, rng, caps))
    sizes = np.concatenate(pooled)
    hist = histogram_from_sizes(sizes, horizon=args.time_horizon)
    fname = f"hist_final_T{args.time_horizon!r}.csv"
    _write_histogram_csv(out / fname, hist, "yule")
    return {"checkpoints": [{"at": args.time_horizon, "file": fname,
                             "n_vertices": hist.n_vertices, "beyond": 0}],
            "n_genera": int(len(sizes)), "n_species": int(sizes.sum())}


def cmd_simulate(args) -> int:
    _require(args, "model", "seed", "out")
    _default(args, "replicas", 1)
    _default(args, "genealogy", False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    # the config echo is experiment provenance; the output path is not part
    # of it, so summaries diff clean across destinations
    summary: dict = {"command": "simulate", "model": args.model,
                     "seed": args.seed, "replicas": args.replicas,
                     "config": {k: v for k, v in vars(args).items()
                                if k not in ("func", "config", "out")
                                and v is not None}}
    total_events = 0

    if args.model == "yule":
        _require(args, "beta", "lam", "time_horizon")
        summary.update(_simulate_yule(args, out))
        summary["kind"] = "size"
        total_events = summary["n_species"]
    else:
        spec = _spec_from_args(args)
        if spec.model == "simon":
            _require(args, "steps")
            horizon = args.steps
        else:
            _require(args, "vertices")
            horizon = args.vertices
        if args.checkpoints is not None:
            checkpoints = _int_list(str(args.checkpoints))
        else:
            checkpoints = _geometric_checkpoints(horizon)
        if horizon not in checkpoints:
            checkpoints.append(horizon)
        models = [spec.model]
        if args.couple:
            if spec.model not in ("iipa", "ba-rescaled") or int(spec.m or 0) != 1:
                raise UsageError("--couple requires --model iipa or ba-rescaled with m=1")
            models = ["iipa", "ba-rescaled"]
        summary["checkpoints"] = []
        pooled: dict = {}
        for model in models:
            spec_m = ModelSpec(model=model, alpha=spec.alpha, m=spec.m, k0=spec.k0,
                               out_degree_law=spec.out_degree_law)
            for replica in range(args.replicas):
                res = _run_one(args, spec_m, replica, checkpoints)
                total_events += res.state.t
                summary["kind"] = res.kind
                if res.truncated_batches:
                    summary["truncated_batches"] = (
                        summary.get("truncated_batches", 0) + res.truncated_batches)
                snap = []
                if res.checkpoints is not None:
                    snap = [(int(res.checkpoints.times[i]),
                             histogram_from_checkpoint(res, i))
                            for i in range(len(res.checkpoints.times))]
                else:
                    snap = [(horizon, histogram(res))]
                for at, hist in snap:
                    key = (model, at)
                    if key not in pooled:
                        pooled[key] = hist
                    else:
                        acc = pooled[key]
                        size = max(len(acc.counts), len(hist.counts))
                        counts = np.zeros(size, dtype=np.int64)
                        counts[:len(acc.counts)] += acc.counts
                        counts[:len(hist.counts)] += hist.counts
                        pooled[key] = DegreeHistogram(
                            counts, acc.n_vertices + hist.n_vertices, acc.t,
                            acc.kind, acc.beyond + hist.beyond)
        for (model, at), hist in sorted(pooled.items()):
            prefix = f"hist_{model}_" if args.couple else "hist_"
            fname = f"{prefix}n{at}.csv"
            _write_histogram_csv(out / fname, hist, model)
            summary["checkpoints"].append(
                {"model": model, "at": at, "file": fname,
                 "n_vertices": hist.n_vertices, "beyond": hist.beyond})
        if args.couple:
            pairs = [(at, pooled[("iipa", at)], pooled[("ba-rescaled", at)])
                     for at in checkpoints]
            summary["coupled"] = True
            summary["histograms_identical"] = all(
                len(a.counts) == len(b.counts) and np.array_equal(a.counts, b.counts)
                for _, a, b in pairs)
    _write_json(out / "summary.json", summary)
    elapsed = time.perf_counter() - started
    _write_json(out / "metrics.json", {
        "out": str(out),
        "wall_clock_seconds": elapsed,
        "events_total": total_events,
        "events_per_second": total_events / elapsed if elapsed > 0 else None})
    return EXIT_OK


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------


def _theory_from_args(args) -> TheoryPmf:
    return theory_pmf(args.model, alpha=args.alpha, m=args.m, rho=args.rho)


def cmd_theory(args) -> int:
    _require(args, "model", "k_max")
    pmf = _theory_from_args(args)
    ks = np.arange(pmf.k_min, args.k_max + 1)
    header = "k,probability"
    expected_col = None
    if args.expected_at is not None:
        n_at = int(args.expected_at)
        k_cap = min(args.k_max, 512)
        if args.model == "simon":
            table = simon_expected(n_at, k_cap, args.alpha, record_at=[n_at])
        elif args.model == "iipa":
            table = iipa_expected(n_at, k_cap, int(args.m), record_at=[n_at])
        elif args.model == "price":
            table = price_expected(n_at, k_cap, int(args.m), record_at=[n_at])
        else:
            raise UsageError(f"no expectation recurrence for {args.model!r}")
        expected_col = table.row(n_at) / n_at
        header += f",expected_fraction_at_{n_at}"
    lines = [header]
    vals = pmf.pmf(ks)
    for i, k in enumerate(ks):
        row = f"{int(k)},{float(vals[i])!r}"
        if expected_col is not None:
            e = float(expected_col[k]) if k < len(expected_col) else 0.0
            row += f",{e!r}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _parse_theory_source(token: str) -> TheoryPmf:
    # theory:MODEL:key=value[,key=value]  e.g. theory:simon:alpha=0.5
    parts = token.split(":")
    if len(parts) < 2:
        raise UsageError(f"bad theory source {token!r}")
    params = {}
    if len(parts) > 2 and parts[2]:
        for kv in parts[2].split(","):
            key, val = kv.split("=")
            params[key] = float(val)
    return theory_pmf(parts[1], **params)


def cmd_compare(args) -> int:
    _require(args, "run", "model")
    _default(args, "k_cap", 200)
    reference = _theory_from_args(args)
    if str(args.run).startswith("theory:"):
        run_hist = _parse_theory_source(args.run)
        source_kind = run_hist.kind
    else:
        run_hist = read_histogram_csv(args.run)
        source_kind = run_hist.kind
    if source_kind != reference.kind and not args.override_kind:
        raise UsageError(
            f"kind mismatch: run is {source_kind!r} but the reference is "
            f"{reference.kind!r}; these are different random variables "
            "(pass --override-kind to compare anyway)")
    reports = [total_variation(run_hist, reference, k_cap=args.k_cap,
                               threshold=args.tv_threshold)]
    if args.slope_range is not None:
        if not isinstance(run_hist, DegreeHistogram):
            raise UsageError("tail slope needs an empirical histogram run")
        lo, hi = _float_list(str(args.slope_range))
        k_lo, k_hi = (_int_list(str(args.slope_window))
                      if args.slope_window else (10, 100))
        reports.append(tail_slope(run_hist, k_lo, k_hi, bounds=(lo, hi)))
    payload = {"command": "compare", "reference": {"model": args.model,
               "params": reference.params}, "reports": [r.to_dict() for r in reports]}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    failed = any(r.passed is False for r in reports)
    return EXIT_THRESHOLD if failed else EXIT_OK


# ---------------------------------------------------------------------------
# waiting-times
# ---------------------------------------------------------------------------


def cmd_waiting_times(args) -> int:
    _require(args, "alpha", "steps", "seed", "out")
    _default(args, "t_star", 10_000)
    _default(args, "genealogy", False)
    _default(args, "k_levels", "1,2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = make_rng(args.seed, purpose="waiting-times")
    if args.genealogy:
        run = simon_run_with_genealogy(args.steps, args.alpha, rng)
        samples = collect_descendant_waiting_times(run, args.t_star)
    else:
        run = simon_run(args.steps, args.alpha, rng)
        samples = collect_waiting_times(run, args.alpha, args.t_star)
    lines = ["vertex,k,x,epoch,z,rate"]
    for row in samples:
        lines.append(f"{row['vertex']},{row['k']},{row['x']},{row['epoch']},"
                     f"{float(row['z'])!r},{float(row['rate'])!r}")
    (out / "samples.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    levels = _int_list(str(args.k_levels))
    thresholds = (_float_list(str(args.ks_thresholds))
                  if args.ks_thresholds else [None] * len(levels))
    if len(thresholds) != len(levels):
        raise UsageError("--ks-thresholds must match --k-levels")
    reports = []
    failed = False
    for level, thr in zip(levels, thresholds):
        mask = samples["k"] == level
        z = samples["z"][mask]
        rate = float(samples["rate"][mask][0]) if mask.any() else float(level)
        try:
            rep = ks_statistic(z, rate, threshold=thr)
            entry = rep.to_dict()
            entry["k"] = level
            entry["fitted_rate"] = fit_exponential_rate(z)
            failed = failed or rep.passed is False
        except ValueError as exc:
            entry = {"k": level, "error": str(exc), "sample_size": int(mask.sum())}
        reports.append(entry)
    _write_json(out / "ks.json", {
        "command": "waiting-times", "alpha": args.alpha, "t_star": args.t_star,
        "genealogy": bool(args.genealogy), "steps": args.steps,
        "n_samples": int(len(samples)), "reports": reports})
    return EXIT_THRESHOLD if failed else EXIT_OK


# ---------------------------------------------------------------------------
# concentration
# ---------------------------------------------------------------------------


def cmd_concentration(args) -> int:
    _require(args, "alpha", "t_list", "seed")
    _default(args, "k", 1)
    _default(args, "seeds", 200)
    spec = ModelSpec("simon", alpha=args.alpha)
    scan = concentration_scan(spec, args.k, _int_list(str(args.t_list)),
                              args.seeds, seed=args.seed)
    lines = ["t,std"] + [f"{t},{s!r}" for t, s in scan]
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="flat key = value config file; flags win")
    sub.add_argument("--model", choices=("simon", "iipa", "price", "ba",
                                         "ba-rescaled", "yule"))
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--m", type=float)
    sub.add_argument("--k0", type=int)
    sub.add_argument("--out-degree-law", choices=("constant", "geometric"))
    sub.add_argument("--beta", type=float)
    sub.add_argument("--lambda", dest="lam", type=float)
    sub.add_argument("--rho", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefatt",
        description="Preferential-attachment growth models: simulate, "
                    "evaluate theory, and compare.")
    subs = parser.add_subparsers(dest="cmd", required=True)

    sim = subs.add_parser("simulate", help="run a model and write histograms")
    _add_common(sim)
    sim.add_argument("--steps", type=int, help="elementary events (simon)")
    sim.add_argument("--vertices", type=int, help="vertex count target")
    sim.add_argument("--time-horizon", dest="time_horizon", type=float,
                     help="continuous horizon (yule)")
    sim.add_argument("--replicas", type=int)
    sim.add_argument("--checkpoints", help="comma list of checkpoint times")
    sim.add_argument("--couple", action="store_true",
                     help="drive iipa and ba-rescaled (m=1) from one stream")
    sim.add_argument("--genealogy", action="store_true", default=None)
    sim.add_argument("--max-genera", dest="max_genera", type=int)
    sim.add_argument("--max-species", dest="max_species", type=int)
    sim.set_defaults(func=cmd_simulate)

    theo = subs.add_parser("theory", help="evaluate closed forms to CSV")
    _add_common(theo)
    theo.add_argument("--k-max", dest="k_max", type=int)
    theo.add_argument("--expected-at", dest="expected_at", type=int,
                      help="also tabulate E N_k / n at this n (recurrence)")
    theo.set_defaults(func=cmd_theory)

    comp = subs.add_parser("compare", help="fit reports of a run against theory")
    _add_common(comp)
    comp.add_argument("--run", help="histogram CSV or theory:MODEL:k=v source")
    comp.add_argument("--k-cap", dest="k_cap", type=int)
    comp.add_argument("--tv-threshold", dest="tv_threshold", type=float)
    comp.add_argument("--slope-range", dest="slope_range",
                      help="lo,hi acceptance band for the tail slope")
    comp.add_argument("--slope-window", dest="slope_window",
                      help="k_lo,k_hi fit window (default 10,100)")
    comp.add_argument("--override-kind", dest="override_kind",
                      action="store_true",
                      help="allow comparing in-degree against degree laws")
    comp.set_defaults(func=cmd_compare)

    wt = subs.add_parser("waiting-times",
                         help="extract transformed waiting times and KS reports")
    _add_common(wt)
    wt.add_argument("--steps", type=int)
    wt.add_argument("--t-star", dest="t_star", type=int)
    wt.add_argument("--genealogy", action="store_true", default=None)
    wt.add_argument("--k-levels", dest="k_levels")
    wt.add_argument("--ks-thresholds", dest="ks_thresholds")
    wt.set_defaults(func=cmd_waiting_times)

    conc = subs.add_parser("concentration",
                           help="across-seed std of N_k(t)/t at several t")
    _add_common(conc)
    conc.add_argument("--k", type=int)
    conc.add_argument("--t-list", dest="t_list")
    conc.add_argument("--seeds", type=int)
    conc.set_defaults(func=cmd_concentration)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
