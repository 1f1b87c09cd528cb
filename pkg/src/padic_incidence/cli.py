"""Command-line entry point.

Exit codes: 0 success, 1 a checked property failed, 2 bad usage or input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import jsonschema

from . import fourier as fr
from .config import Configuration
from .constructions import cantor_product_config, random_config, wolff_grid_stub
from .exact import Exponent, PValue
from .geometry import GeometryError
from .incidence import incidence_count, rich_tubes
from .multiscale import build_scale_delta, default_slack, nice_certify, uniformize
from .setstats import frostman_certificate, katz_tao_certificate
from .verify import SUITES, SuiteOptions

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_DIGITS = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_FRACTION = {"type": "string", "pattern": r"^(-?\d+(/\d+)?\+)?(log:)?\d+(/\d+)?$"}

GENERATOR_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["product", "random", "wolff"]},
        "a_digits": _DIGITS,
        "b_digits": _DIGITS,
        "slope_digits": _DIGITS,
        "size": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 1},
        "j": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

EXPERIMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentSpec",
    "type": "object",
    "required": ["command", "p", "seed"],
    "properties": {
        "command": {"enum": ["sweep", "gen"]},
        "p": {"enum": [2, 3, 5, 7, 11, 13]},
        "n": {"type": "integer", "minimum": 1},
        "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "generator": GENERATOR_SCHEMA,
        "input": {"type": "string"},
        "s": _FRACTION,
        "t": _FRACTION,
        "eps": {"type": "array", "items": _FRACTION},
        "eta": {"type": "array", "items": _FRACTION},
        "rich": {
            "type": "object",
            "required": ["delta", "a", "b"],
            "properties": {
                "delta": {"type": "integer", "minimum": 0},
                "a": {"type": "integer", "minimum": 1},
                "b": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "slack": _FRACTION,
    },
    "additionalProperties": False,
}

SWEEP_COLUMNS = (
    "index", "p", "n", "eps", "eta", "seed", "P_delta", "T_delta", "M",
    "t", "ratio", "ratio_ge_1", "rich_count", "rich_sum_squares", "rich_J",
)


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def write_csv(rows, columns, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    _emit(buf.getvalue(), out)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_json(path: str) -> dict:
    try:
        plan = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    try:
        jsonschema.validate(plan, EXPERIMENT_SCHEMA)
    except jsonschema.ValidationError as e:
        field = "/".join(map(str, e.absolute_path)) or "<root>"
        raise UsageError(f"invalid field {field}: {e.message}") from None
    return plan


def _load_config(path: str) -> Configuration:
    try:
        return Configuration.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _exponent(p: int, text: str, name: str) -> Exponent:
    try:
        return Exponent.parse(p, text)
    except ValueError as e:
        raise UsageError(f"invalid field {name}: {e}") from None


def _threads() -> int:
    raw = os.environ.get("PIL_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        val = int(raw)
    except ValueError:
        raise UsageError("PIL_THREADS must be a positive integer") from None
    if val < 1:
        raise UsageError("PIL_THREADS must be a positive integer")
    return val


def build_generator(gen: dict, p: int, n: int, seed) -> Configuration:
    kind = gen["kind"]
    if kind == "product":
        return cantor_product_config(
            p, n,
            gen.get("a_digits", list(range(p))),
            gen.get("b_digits", list(range(p))),
            gen.get("slope_digits", list(range(p))),
        )
    if kind == "random":
        if "size" not in gen or "M" not in gen:
            raise UsageError("invalid field generator: random needs size and M")
        return random_config(seed, p, n, gen["size"], gen["M"], gen.get("slope_digits"))
    return wolff_grid_stub(p, n, gen.get("j", 1))


# -- subcommands -------------------------------------------------------------


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    opt = SuiteOptions(args.p, args.n, args.seed or 0, args.trials)
    rows: list = []
    if args.suite == "highlow":
        checks = SUITES["highlow"](opt, rows)
    else:
        checks = SUITES[args.suite](opt)
    failures = 0
    total = 0
    for chk in checks:
        total += 1
        if not chk.ok:
            failures += 1
            print(f"FAIL [{chk.label}] {chk.detail}", file=sys.stderr)
    if args.suite == "highlow":
        write_csv(rows, ("trial",) + fr.CSV_COLUMNS, args.out)
    print(f"{args.suite}: {total - failures}/{total} checks passed", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


def cmd_gen(args) -> int:
    if args.config:
        plan = _load_json(args.config)
        gen = plan.get("generator")
        if gen is None:
            raise UsageError("invalid field generator: required for gen")
        p, n, seed = plan["p"], plan.get("n", args.n), plan["seed"]
        if n is None:
            raise UsageError("invalid field n: required for gen")
        out = args.out or plan.get("out")
    else:
        if args.kind is None or args.p is None or args.n is None:
            raise UsageError("gen needs --config or --kind with --p and --n")
        gen = {"kind": args.kind}
        for key in ("a_digits", "b_digits", "slope_digits"):
            val = getattr(args, key)
            if val is not None:
                gen[key] = [int(d) for d in val.split(",")]
        if args.size is not None:
            gen["size"] = args.size
        if args.M is not None:
            gen["M"] = args.M
        if args.j is not None:
            gen["j"] = args.j
        p, n, seed, out = args.p, args.n, args.seed, args.out
        if gen["kind"] == "random" and seed is None:
            raise UsageError("random generation needs --seed")
    _emit(build_generator(gen, p, n, seed).dumps(), out)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load_config(args.input)
    s = _exponent(cfg.ambient.p, args.s, "s")
    lines = [
        frostman_certificate(cfg.P, s).record(),
        katz_tao_certificate(cfg.P, s).record(),
    ]
    ok = True
    if all(cfg.assoc[c] for c in cfg.cubes):
        cert = nice_certify(cfg, s)
        ok = cert.lower_bound_holds(cfg.ambient)
        lines.append(
            f"kind=nice s={s} C={cert.C} M_min={cert.M_min} M_max={cert.M_max} "
            f"similar={int(cert.sizes_similar)} lower_bound={int(ok)}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_incidence(args) -> int:
    cfg = _load_config(args.input)
    I = incidence_count(cfg.P, cfg.T)
    _emit(f"incidences={I} cubes={len(cfg.cubes)} tubes={len(cfg.tubes)}\n", args.out)
    return EXIT_OK


def cmd_dft(args) -> int:
    cfg = _load_config(args.input)
    n = cfg.ambient.n
    ks = [args.k] if args.k is not None else list(range(1, n))
    rows, bad = [], 0
    for k in ks:
        rep = fr.highlow_split(cfg.P, cfg.T, k)
        rows.append(rep.row())
        bad += float(rep.lhs) > rep.rhs + 1e-6
    write_csv(rows, fr.CSV_COLUMNS, args.out)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_uniformize(args) -> int:
    cfg = _load_config(args.input)
    levels = args.levels if args.levels is not None else cfg.ambient.n // args.block
    res = uniformize(cfg.P, args.block, levels)
    keep = set(res.P.distinct())
    if args.write_config:
        Path(args.write_config).write_text(cfg.restrict(lambda c: c in keep).dumps(), encoding="utf-8")
    rows = [{"stage": st.name, "kept_class": st.kept_class, "retained": st.retained} for st in res.stages]
    rows.append({"stage": "total", "kept_class": "", "retained": float(res.ratio)})
    write_csv(rows, ("stage", "kept_class", "retained"), args.out)
    return EXIT_OK if res.ratio >= res.guaranteed else EXIT_FAIL


def cmd_richtubes(args) -> int:
    cfg = _load_config(args.input)
    st = rich_tubes(cfg.P, args.delta, args.a, args.b)
    rows = [{"tube": str(t), "N": nv} for t, nv in st.tubes]
    write_csv(rows, ("tube", "N"), args.out)
    print(f"rich={st.count} sum_squares={st.sum_squares} J={st.J}", file=sys.stderr)
    return EXIT_OK if args.b**2 * st.sum_squares <= 2 * st.J else EXIT_FAIL


def cmd_buildscale(args) -> int:
    cfg = _load_config(args.input)
    s = _exponent(cfg.ambient.p, args.s, "s")
    slack = default_slack(cfg.ambient) if args.slack is None else Fraction(args.slack)
    cfg1, cfg_d, rep = build_scale_delta(cfg, args.delta, s, slack)
    if args.write_config:
        Path(args.write_config).write_text(cfg1.dumps(), encoding="utf-8")
    if args.write_delta:
        Path(args.write_delta).write_text(cfg_d.dumps(), encoding="utf-8")
    cd = nice_certify(cfg_d, s)
    ok = rep.identity_within(slack) and cd.C <= PValue(s.p, slack)
    row = {
        "delta": args.delta, "cubes": len(cfg1.cubes), "delta_cubes": len(cfg_d.cubes),
        "m": rep.common_m, "X": rep.common_X, "C_delta": float(cd.C),
        "M_delta": cd.M_max, "cover_ratio": float(rep.ratio), "identity_ok": ok,
    }
    write_csv([row], tuple(row), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def sweep_point(plan: dict, index: int, n: int, eps: str, eta: str) -> dict:
    p = plan["p"]
    seed = [plan["seed"], index]
    cfg = build_generator(plan["generator"], p, n, seed)
    sizes = cfg.family_sizes().values()
    M = max(sizes)
    T_delta = len(cfg.tubes)
    row = {"index": index, "p": p, "n": n, "eps": eps, "eta": eta, "seed": plan["seed"],
           "P_delta": len(cfg.cubes), "T_delta": T_delta, "M": M}
    if "t" in plan:
        t = Exponent.parse(p, plan["t"])
        ratio = PValue(p, T_delta) / (t.power(n) * M)
        row.update(t=plan["t"], ratio=float(ratio), ratio_ge_1=ratio >= 1)
    if "rich" in plan:
        r = plan["rich"]
        if r["delta"] <= n:
            st = rich_tubes(cfg.P, r["delta"], r["a"], r["b"])
            row.update(rich_count=st.count, rich_sum_squares=st.sum_squares, rich_J=st.J)
    return row


def run_sweep(plan: dict) -> list[dict]:
    if plan.get("generator") is None:
        raise UsageError("invalid field generator: required for sweep")
    for name in ("s", "t"):
        if name in plan:
            _exponent(plan["p"], plan[name], name)
    n_values = plan.get("n_values", [plan["n"]] if "n" in plan else [])
    grid = [
        (n, e, h)
        for n in n_values
        for e in plan.get("eps", ["0"])
        for h in plan.get("eta", ["0"])
    ]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        # map yields results in submission order
        return list(pool.map(lambda ip: sweep_point(plan, ip[0], *ip[1]), enumerate(grid)))


def cmd_sweep(args) -> int:
    if not args.config:
        raise UsageError("sweep needs --config")
    plan = _load_json(args.config)
    if args.seed is not None:
        plan["seed"] = args.seed
    rows = run_sweep(plan)
    write_csv(rows, SWEEP_COLUMNS, args.out or plan.get("out"))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--config")
    sp.add_argument("--slack")
    sp.add_argument("--trials", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padic-incidence", description="p-adic incidence toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify", help="run an invariant suite")
    sp.add_argument("suite")
    _common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", help="generate a configuration")
    _common(sp)
    sp.add_argument("--kind", choices=["product", "random", "wolff"])
    sp.add_argument("--a-digits", dest="a_digits")
    sp.add_argument("--b-digits", dest="b_digits")
    sp.add_argument("--slope-digits", dest="slope_digits")
    sp.add_argument("--size", type=int)
    sp.add_argument("--M", type=int)
    sp.add_argument("--j", type=int)
    sp.set_defaults(func=cmd_gen)

    for name, func, helptext in (
        ("check", cmd_check, "spacing and nice certificates"),
        ("incidence", cmd_incidence, "incidence count of a configuration"),
        ("dft", cmd_dft, "high/low frequency split report"),
        ("uniformize", cmd_uniformize, "greedy uniform subset"),
        ("richtubes", cmd_richtubes, "rich tubes and the triple count"),
        ("buildscale", cmd_buildscale, "Delta-scale configuration"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("input")
        _common(sp)
        sp.set_defaults(func=func)
        if name in ("check", "buildscale"):
            sp.add_argument("--s", required=True, help="exponent as u/v or log:q")
        if name == "dft":
            sp.add_argument("--k", type=int)
        if name == "uniformize":
            sp.add_argument("--block", type=int, default=1)
            sp.add_argument("--levels", type=int)
        if name in ("uniformize", "buildscale"):
            sp.add_argument("--write-config")
        if name == "buildscale":
            sp.add_argument("--delta", type=int, required=True)
            sp.add_argument("--write-delta")
        if name == "richtubes":
            sp.add_argument("--delta", type=int, required=True)
            sp.add_argument("--a", type=int, required=True)
            sp.add_argument("--b", type=int, required=True)

    sp = sub.add_parser("sweep", help="run an experiment grid from a JSON plan")
    _common(sp)
    sp.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GeometryError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
