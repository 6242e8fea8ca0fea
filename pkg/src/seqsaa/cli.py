"""Command-line interface: ``seqsaa {generate,solve,study,rates,lemma-check}``."""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import fields
from pathlib import Path

from .benchlab.generators import GeneratorSpec, generate_deak_like
from .benchlab.lemma import FAMILIES, ZERO, Geometric, lemma_prox_harness
from .benchlab.rates import rate_experiment
from .benchlab.reports import rates_csv, summary_csv, to_json, trajectory_csv
from .benchlab.replications import run_replications, tabulate
from .benchlab.truth import ground_truth
from .errors import InsufficientData, InvalidSpec, NumericalFailure, SeqSAAError
from .instances import BUILTIN
from .model import dumps_instance, load_instance
from .sequential import Schedule, SeqConfig, run_with_stopping

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_TIMEOUT, EXIT_NUMERIC = 0, 1, 2, 3, 4
TRUTH_SUPPORT_CAP = 200_000

RUN_DEFAULTS = {
    "instance": "lands",
    "sampler": "iid",
    "schedule": {"kind": "geometric", "c1": 1.5},
    "nu": 1.0,
    "sigma_min": 1e-5,
    "sigma_max": None,
    "ci_floor": 1e-5,
    "alpha": 0.1,
    "eps": None,
    "eps_rel": 1e-3,
    "m1": 100,
    "n1": None,
    "seed": 0,
    "time_limit_s": 7200.0,
    "max_inner": 500,
    "val_max_inner": 500,
    "val_rel_gap": 1e-4,
    "val_eps_frac": 1e-3,
    "warmstart": True,
    "blocks": 1,
    "alpha_lev": 0.5,
    "threads": 1,
    "reuse_prefix": False,
    "max_outer": None,
    "truth": False,
}
STUDY_DEFAULTS = {"replications": 20, "schedules": None, "truth": True}
RATES_DEFAULTS = {"replications": 20, "outer_iters": 12, "schedules": ["geometric(1.5)", "polynomial(100,1)"], "truth": True}


# ---------------------------------------------------------------------------
# config handling


def parse_schedule(spec) -> Schedule:
    """``"geometric(1.5)"``-style strings or ``{"kind": ..., ...}`` dicts."""
    if isinstance(spec, Schedule):
        return spec
    if isinstance(spec, str):
        m = re.fullmatch(r"\s*(\w+)\s*(?:\(([^)]*)\))?\s*", spec)
        if not m:
            raise InvalidSpec(f"cannot parse schedule {spec!r}")
        kind, args = m.group(1), m.group(2)
        vals = [float(a) for a in args.split(",")] if args else []
        makers = {"linear": Schedule.linear, "geometric": Schedule.geometric, "dynamic": Schedule.dynamic,
                  "polynomial": Schedule.polynomial}
        if kind not in makers:
            raise InvalidSpec(f"unknown schedule kind {kind!r}")
        if kind == "linear":
            vals = [int(v) for v in vals]
        try:
            return makers[kind](*vals)
        except (TypeError, ValueError) as exc:
            raise InvalidSpec(f"schedule {spec!r}: {exc}") from exc
    if isinstance(spec, dict):
        allowed = {f.name for f in fields(Schedule)}
        unknown = sorted(set(spec) - allowed)
        if unknown:
            raise InvalidSpec(f"unknown schedule keys {unknown}")
        try:
            return Schedule(**spec)
        except (TypeError, ValueError) as exc:
            raise InvalidSpec(f"schedule: {exc}") from exc
    raise InvalidSpec(f"bad schedule {spec!r}")


def schedule_to_dict(s: Schedule) -> dict:
    return {f.name: getattr(s, f.name) for f in fields(Schedule)}


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidSpec(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidSpec(f"{path}: config must be a JSON object")
    return data


def resolve(data: dict, defaults: dict) -> dict:
    """Merge ``data`` over ``defaults``; unknown keys are rejected."""
    unknown = sorted(set(data) - set(defaults))
    if unknown:
        raise InvalidSpec(f"unknown config keys {unknown}")
    out = dict(defaults)
    out.update(data)
    return out


def resolve_instance(ref):
    if isinstance(ref, dict):
        if set(ref) != {"generator"}:
            raise InvalidSpec("instance object must be {'generator': {...}}")
        return generate_deak_like(GeneratorSpec.from_dict(ref["generator"]))
    if not isinstance(ref, str):
        raise InvalidSpec(f"bad instance reference {ref!r}")
    if ref in BUILTIN:
        return BUILTIN[ref]()
    path = Path(ref)
    if not path.exists():
        raise InvalidSpec(f"instance {ref!r} is neither a built-in name nor an existing file")
    return load_instance(path)


def build_config(d: dict, instance=None) -> SeqConfig:
    instance = instance if instance is not None else resolve_instance(d["instance"])
    kw = {k: d[k] for k in d if k in {f.name for f in fields(SeqConfig)} and k not in ("instance", "schedule")}
    try:
        return SeqConfig(instance, schedule=parse_schedule(d["schedule"]), **kw)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"config: {exc}") from exc


def echo(d: dict, cfg: SeqConfig) -> dict:
    """Fully resolved config (defaults filled) in the input schema."""
    out = dict(d)
    out["schedule"] = schedule_to_dict(parse_schedule(d["schedule"]))
    out["sigma_max"] = cfg.sigma_max
    out["n1"] = cfg.n1
    return out


def maybe_truth(instance, wanted: bool):
    if not wanted:
        return None
    size = instance.model.support_size
    if size is None or size > TRUTH_SUPPORT_CAP:
        return None
    return ground_truth(instance)


# ---------------------------------------------------------------------------
# subcommands


def _apply_run_flags(d: dict, a) -> dict:
    flag_map = {
        "instance": a.instance, "sampler": a.sampler, "seed": a.seed, "eps": a.eps, "eps_rel": a.eps_rel,
        "alpha": a.alpha, "max_outer": a.max_outer, "time_limit_s": a.time_limit, "threads": a.threads,
        "m1": a.m1, "nu": a.nu,
    }
    for k, v in flag_map.items():
        if v is not None:
            d[k] = v
    if a.eps is not None:
        d["eps_rel"] = None
    if a.no_warmstart:
        d["warmstart"] = False
    if a.truth:
        d["truth"] = True
    if a.schedule is not None:
        sched = {"kind": a.schedule}
        for key, val in (("delta", a.delta), ("c1", a.c1), ("c0", a.c0), ("c_h", a.ch), ("C1", a.C1),
                         ("p", a.p), ("poly_c0", a.poly_c0)):
            if val is not None:
                sched[key] = val
        d["schedule"] = sched
    if a.m1 is not None:
        d["n1"] = None
    return d


def _write(out_dir: Path, name: str, text: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")


def cmd_generate(a) -> int:
    if a.spec:
        spec = GeneratorSpec.from_dict(load_config(a.spec))
    else:
        spec = GeneratorSpec(a.n1, a.r1, a.n2, a.r2, a.support, a.variance, a.seed)
    inst = generate_deak_like(spec).check()
    text = dumps_instance(inst)
    if a.out == "-":
        sys.stdout.write(text)
    else:
        Path(a.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_solve(a) -> int:
    d = resolve(load_config(a.config) if a.config else {}, RUN_DEFAULTS)
    d = _apply_run_flags(d, a)
    cfg = build_config(d)
    out_dir = Path(a.out_dir)
    _write(out_dir, "config.json", to_json(echo(d, cfg)))
    truth = maybe_truth(cfg.instance, d["truth"])
    rep = run_with_stopping(cfg)
    if truth is not None:
        rep.true_gap = truth.gap(cfg.instance, rep.x)
        for st in rep.trajectory:
            st.true_gap = truth.gap(cfg.instance, st.x)
    table = tabulate(cfg.schedule.label(), [rep], 1, 0, truth)
    _write(out_dir, "trajectory.csv", trajectory_csv([(f"seed{cfg.seed}", rep.trajectory)]))
    _write(out_dir, "summary.csv", summary_csv([table]))
    report = rep.to_json()
    report["instance"] = cfg.instance.name
    report["schedule"] = cfg.schedule.label()
    report["z_star"] = truth.z_star if truth is not None else None
    report["elapsed_s"] = rep.trajectory[-1].elapsed
    sys.stdout.write(to_json(report))
    return EXIT_TIMEOUT if rep.timed_out else EXIT_OK


def cmd_study(a) -> int:
    d = resolve(load_config(a.config) if a.config else {}, {**RUN_DEFAULTS, **STUDY_DEFAULTS})
    d = _apply_run_flags(d, a)
    if a.replications is not None:
        d["replications"] = a.replications
    schedules = d["schedules"] or [d["schedule"]]
    base = dict(d)
    base["schedule"] = schedules[0]
    cfg0 = build_config(base)
    truth = maybe_truth(cfg0.instance, d["truth"])
    echo_d = echo(base, cfg0)
    echo_d["schedules"] = [schedule_to_dict(parse_schedule(s)) for s in schedules]
    out_dir = Path(a.out_dir)
    _write(out_dir, "config.json", to_json(echo_d))
    tables, runs = [], []
    any_timeout = False
    for s in schedules:
        cfg = build_config({**base, "schedule": s}, cfg0.instance)
        study = run_replications(cfg, int(d["replications"]), truth)
        tables.append(study.table)
        any_timeout |= study.table.timed_out > 0
        runs.extend((f"{study.table.label}/seed{r.seed}", r.trajectory) for r in study.reports)
        for seed, err in study.errors.items():
            print(f"{study.table.label} seed {seed} failed: {err}", file=sys.stderr)
    _write(out_dir, "summary.csv", summary_csv(tables))
    _write(out_dir, "trajectory.csv", trajectory_csv(runs))
    sys.stdout.write(summary_csv(tables))
    return EXIT_TIMEOUT if any_timeout else EXIT_OK


def cmd_rates(a) -> int:
    d = resolve(load_config(a.config) if a.config else {}, {**RUN_DEFAULTS, **RATES_DEFAULTS})
    d = _apply_run_flags(d, a)
    if a.replications is not None:
        d["replications"] = a.replications
    base = dict(d)
    base["schedule"] = d["schedules"][0]
    cfg0 = build_config(base)
    truth = maybe_truth(cfg0.instance, True)
    if truth is None:
        raise InvalidSpec("rate experiments need a finite support small enough for the ground-truth oracle")
    configs = {}
    for s in d["schedules"]:
        cfg = build_config({**base, "schedule": s}, cfg0.instance)
        configs[cfg.schedule.label()] = cfg
    seeds = [d["seed"] + i for i in range(int(d["replications"]))]
    fits, _ = rate_experiment(configs, seeds, truth, max_outer=int(d["outer_iters"]))
    out_dir = Path(a.out_dir)
    _write(out_dir, "config.json", to_json({**echo(base, cfg0), "schedules": d["schedules"]}))
    text = rates_csv(list(fits.values()))
    _write(out_dir, "rates.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_lemma(a) -> int:
    seq = Geometric(1.0, 0.5)
    ok = True
    for name in FAMILIES:
        for delta, eps in ((seq, seq), (ZERO, ZERO)):
            rec = lemma_prox_harness(delta, eps, name, a.K, strict=False)
            tag = "zero" if delta is ZERO else "geometric"
            print(f"{name:8s} {tag:9s} k=1..{a.K}: {'ok' if rec.ok else 'FAILED'}")
            ok &= rec.ok
    return EXIT_OK if ok else EXIT_ERROR


# ---------------------------------------------------------------------------
# argument parsing


def _run_args(p):
    p.add_argument("--config", help="JSON config file (flags override its values)")
    p.add_argument("--instance", help="built-in name (lands, gbd, pgp2, cep) or instance JSON path")
    p.add_argument("--sampler", choices=["iid", "antithetic", "lhs"])
    p.add_argument("--schedule", choices=["linear", "geometric", "dynamic", "polynomial"])
    p.add_argument("--delta", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--ch", type=float)
    p.add_argument("--C1", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--poly-c0", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--eps", type=float, help="absolute CI target (disables eps_rel)")
    p.add_argument("--eps-rel", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--max-outer", type=int)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-warmstart", action="store_true")
    p.add_argument("--truth", action="store_true", help="compute true gaps via the full-support oracle")
    p.add_argument("--out-dir", default=".")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqsaa", description="Adaptive sequential SAA for two-stage stochastic LPs")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a DEAK-like instance as JSON")
    g.add_argument("--spec", help="generator spec JSON")
    g.add_argument("--n1", type=int, default=40)
    g.add_argument("--r1", type=int, default=20)
    g.add_argument("--n2", type=int, default=30)
    g.add_argument("--r2", type=int, default=20)
    g.add_argument("--support", type=int, default=1000)
    g.add_argument("--variance", choices=["normal", "high"], default="normal")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="one run with the finite stopping rule")
    _run_args(s)
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("study", help="seeded replications, one summary row per schedule")
    _run_args(st)
    st.add_argument("--replications", type=int)
    st.set_defaults(func=cmd_study)

    r = sub.add_parser("rates", help="log-gap vs log-work slopes per schedule")
    _run_args(r)
    r.add_argument("--replications", type=int)
    r.set_defaults(func=cmd_rates)

    lm = sub.add_parser("lemma-check", help="run the tail-bound verification harness")
    lm.add_argument("--K", type=int, default=20)
    lm.set_defaults(func=cmd_lemma)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return a.func(a)
    except InvalidSpec as exc:
        print(f"seqsaa: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"seqsaa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InsufficientData as exc:
        print(f"seqsaa: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SeqSAAError as exc:
        print(f"seqsaa: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
