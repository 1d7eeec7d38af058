"""Command-line front end.

Subcommands: sieve, correlate, predict, arcs, verify, experiment.
Environment: CORRLAB_CACHE (table cache directory), CORRLAB_THREADS.
A flat key=value config file can seed any flag; explicit flags win.

Exit codes: 0 success, 2 invalid configuration, 3 resource estimate
exceeded without --force, 4 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import arcs as arcs_mod
from . import corr, decomp, dirichlet, expsum, local, sieve
from .quad import QuadratureError

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NUMERIC = 4

X_HARD_LIMIT = 10**9


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace

    def __post_init__(self):
        a = self.args
        for name in ("x", "hi", "p_max", "q_max"):
            v = getattr(a, name, None)
            if v is not None and v < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be >= 1, got {v}")
        if getattr(a, "h_window", None) is not None and a.h_window < 0:
            raise ConfigError(f"--h must be >= 0, got {a.h_window}")
        if getattr(a, "threads", None) is not None and a.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {a.threads}")
        x = getattr(a, "x", None)
        if x is not None and x > X_HARD_LIMIT and not getattr(a, "force", False):
            raise ResourceGuard(
                f"X={x:g} exceeds {X_HARD_LIMIT:g}; pass --force to override")


class ResourceGuard(RuntimeError):
    pass


def _int(s: str) -> int:
    return int(float(s))


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corrlab",
                                description="correlations of arithmetic functions workbench")
    p.add_argument("--config", type=Path, help="flat key=value file; flags override")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get(sieve.THREADS_ENV, "1")))
    common.add_argument("--output", type=Path)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--no-plot", action="store_true",
                        help="skip the figure normally rendered beside the output")
    common.add_argument("--force", action="store_true")

    ps = sub.add_parser("sieve", parents=[common], help="tabulate an arithmetic function")
    ps.add_argument("--kind", required=True,
                    choices=("lambda", "moebius", "log", "dk"))
    ps.add_argument("--k", type=int, default=2)
    ps.add_argument("--lo", type=_int, default=1)
    ps.add_argument("--hi", type=_int, required=True)
    ps.add_argument("--cache", action="store_true",
                    help="read/write the CORRLAB_CACHE directory")

    pc = sub.add_parser("correlate", parents=[common], help="shifted correlation series")
    pc.add_argument("--kind", required=True,
                    choices=("lambda-lambda", "dk-dl", "lambda-dk", "goldbach"))
    pc.add_argument("--x", type=_int, required=True)
    pc.add_argument("--h0", type=_int, default=None)
    pc.add_argument("--h", dest="h_window", type=_int, required=True,
                    help="half-width H of the shift window")
    pc.add_argument("--k", type=int, default=2)
    pc.add_argument("--l", type=int, default=2)
    pc.add_argument("--a", dest="level_a", type=float, default=1.0)
    pc.add_argument("--p-max", type=_int, default=10**6)
    pc.add_argument("--predict", default="singular-series",
                    choices=("singular-series", "leading", "major-arc", "none"))
    pc.add_argument("--b", type=float, default=1.5)
    pc.add_argument("--bp", type=float, default=3.0)
    pc.add_argument("--even-only", action="store_true")

    pp = sub.add_parser("predict", parents=[common], help="main-term predictions")
    pp.add_argument("--kind", required=True,
                    choices=("singular-series", "singular-series-ramanujan",
                             "d2d2-leading", "dkdl-leading", "dk-lambda-leading",
                             "twin-prime-constant"))
    pp.add_argument("--h", dest="shift", type=_int, default=2)
    pp.add_argument("--k", type=int, default=2)
    pp.add_argument("--l", type=int, default=2)
    pp.add_argument("--p-max", type=_int, default=10**6)
    pp.add_argument("--q-max", type=_int, default=10**4)

    pa = sub.add_parser("arcs", parents=[common], help="major arc system summary")
    pa.add_argument("--x", type=_int, required=True)
    pa.add_argument("--b", type=float, required=True)
    pa.add_argument("--bp", type=float, required=True)

    pv = sub.add_parser("verify", parents=[common], help="identity test suites")
    pv.add_argument("--suite", default="identities", choices=("identities",))
    pv.add_argument("--x", type=_int, default=2000)

    pe = sub.add_parser("experiment", parents=[common], help="named experiments")
    pe.add_argument("--name", required=True,
                    choices=("averaged-hl", "averaged-dkdl", "averaged-lambda-dk",
                             "goldbach", "kog", "fourth-moment", "jutila",
                             "rs-fourth", "ytilde-ep", "good-cancellation",
                             "heath-brown", "comb-decompose"))
    pe.add_argument("--x", type=_int, default=10**5)
    pe.add_argument("--h", dest="h_window", type=_int, default=128)
    pe.add_argument("--h0", type=_int, default=None)
    pe.add_argument("--a", dest="level_a", type=float, default=1.0)
    pe.add_argument("--b", type=float, default=1.5)
    pe.add_argument("--bp", type=float, default=3.0)
    pe.add_argument("--k", type=int, default=2)
    pe.add_argument("--l", type=int, default=2)
    pe.add_argument("--q", type=int, default=1)
    pe.add_argument("--q0", type=int, default=1)
    pe.add_argument("--t", type=float, default=50.0)
    pe.add_argument("--t0", type=float, default=10.0)
    pe.add_argument("--theta", type=float, default=-1.0)
    pe.add_argument("--m", type=int, default=3)
    pe.add_argument("--m1", type=int, default=100)
    pe.add_argument("--eps", type=float, default=0.2)
    pe.add_argument("--p-max", type=_int, default=10**6)
    return p


def _apply_config_file(argv: List[str]) -> List[str]:
    """Prepend key=value pairs from --config as flags (so real flags win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = Path(argv[i + 1])
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    injected: List[str] = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if val.lower() in ("true", "yes"):
            injected.append(flag)
        else:
            injected.extend([flag, val])
    # subcommand must stay first; inject right after it
    rest = argv[:i] + argv[i + 2:]
    if not rest:
        return injected
    return [rest[0]] + injected + rest[1:]


def _emit(args: argparse.Namespace, payload: dict,
          series: Optional[corr.CorrelationSeries] = None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if series is not None and args.format == "csv":
        body = corr.series_to_csv(series)
    else:
        body = text + "\n"
    if args.output:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(body)
        print(f"wrote {args.output}")
        if series is not None and not args.no_plot:
            from .plots import plot_series
            png = args.output.with_suffix(".png")
            plot_series(series, png, title=payload.get("experiment", ""))
            print(f"wrote {png}")
        if series is not None and args.format == "csv":
            print(text)
    else:
        sys.stdout.write(body)
        if series is not None and args.format == "csv":
            print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    return str(o)


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_sieve(args) -> int:
    kind = {"lambda": sieve.Kind.VON_MANGOLDT, "moebius": sieve.Kind.MOEBIUS,
            "log": sieve.Kind.LOG, "dk": sieve.Kind.DIVISOR}[args.kind]
    k = args.k if args.kind == "dk" else 0
    if args.cache:
        table = sieve.load_or_sieve(kind, args.lo, args.hi, k=k, threads=args.threads)
    else:
        table = sieve._sieve_by_kind(kind, k, args.lo, args.hi, args.threads)
    if args.output:
        sieve.write_table(table, args.output)
        print(f"wrote {args.output}")
    payload = {"kind": args.kind, "k": k, "lo": table.lo, "hi": table.hi,
               "sum": table.sum(), "l2sq": table.l2sq()}
    print(json.dumps(payload, default=_json_default))
    return EXIT_OK


def _cmd_correlate(args) -> int:
    X, H = args.x, args.h_window
    cost = arcs_mod.estimate_cost(args.kind, X, H)
    print(json.dumps({"estimated": cost}, default=_json_default))
    if cost["est_memory_bytes"] > 4e9 and not args.force:
        raise ResourceGuard("estimated memory above 4 GB; pass --force")
    prediction = {"singular-series": "closed-form", "leading": "closed-form",
                  "major-arc": "major-arc", "none": "closed-form"}[args.predict]
    series, profile = arcs_mod.averaged_theorem_experiment(
        args.kind, X, H, args.level_a, B=args.b, B_prime=args.bp, h0=args.h0,
        k=args.k, l=args.l, p_max=args.p_max, prediction=prediction,
        even_only=args.even_only)
    if args.predict == "none":
        series.main_terms = None
        payload = {"experiment": args.kind, "X": X, "H": H}
    else:
        payload = {"experiment": args.kind, "X": X, "H": H, "A": args.level_a,
                   "profile": profile.__dict__}
    _emit(args, payload, series=series)
    return EXIT_OK


def _cmd_predict(args) -> int:
    h = args.shift
    if args.kind == "twin-prime-constant":
        r = local.twin_prime_constant(args.p_max)
        payload = {"kind": args.kind, "value": r.value, "p_max": r.p_max,
                   "tail_bound": r.tail_bound}
    elif args.kind == "singular-series":
        r = local.singular_series(h, args.p_max)
        payload = {"h": h, "kind": args.kind, "value": r.value, "p_max": r.p_max,
                   "tail_bound": local.twin_prime_constant(args.p_max).tail_bound}
    elif args.kind == "singular-series-ramanujan":
        v = local.singular_series_via_ramanujan(h, args.q_max)
        payload = {"h": h, "kind": args.kind, "value": v, "q_max": args.q_max}
    elif args.kind == "d2d2-leading":
        r = local.leading_coeff_P(2, 2, h, args.p_max)
        payload = {"h": h, "kind": args.kind, "value": r.value, "p_max": r.p_max,
                   "tail_bound": r.tail_bound}
    elif args.kind == "dkdl-leading":
        r = local.leading_coeff_P(args.k, args.l, h, args.p_max)
        payload = {"h": h, "kind": args.kind, "k": args.k, "l": args.l,
                   "value": r.value, "p_max": r.p_max, "tail_bound": r.tail_bound}
    else:
        r = local.leading_coeff_Q(args.k, h, args.p_max)
        payload = {"h": h, "kind": args.kind, "k": args.k, "value": r.value,
                   "p_max": r.p_max, "tail_bound": r.tail_bound}
    _emit(args, payload)
    return EXIT_OK


def _cmd_arcs(args) -> int:
    system = arcs_mod.build_arcs(args.x, args.b, args.bp)
    payload = {"X": args.x, "B": args.b, "B_prime": args.bp, "Q": system.Q,
               "delta": system.delta, "n_arcs": len(system.arcs),
               "measure": system.measure(),
               "closed_form_measure": 2 * system.delta * sum(
                   local.euler_phi(q) for q in range(1, int(system.Q) + 1))}
    _emit(args, payload)
    return EXIT_OK


def _cmd_verify(args) -> int:
    checks = _identity_suite(args.x)
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
        failed += not ok
    return EXIT_OK if failed == 0 else 1


def _identity_suite(x: int):
    out = []
    mu = sieve.sieve_moebius(1, x)
    one = sieve.ones_table(1, x)
    lam = sieve.sieve_lambda(1, x)
    conv = sieve.dirichlet_convolve(mu, one, 1, x)
    err = float(np.abs(conv.values - np.concatenate([[1.0], np.zeros(x - 1)])).max())
    out.append(("mu * 1 = delta_1", err == 0.0, f"max err {err:g}"))
    L = sieve.sieve_log(1, x)
    err = float(np.abs(sieve.dirichlet_convolve(L, mu, 1, x).values - lam.values).max())
    out.append(("L * mu = Lambda", err < 1e-9, f"max err {err:g}"))
    d2 = sieve.sieve_dk(2, 1, x)
    err = float(np.abs(sieve.dirichlet_convolve(one, one, 1, x).values - d2.values).max())
    out.append(("1 * 1 = d_2", err == 0.0, f"max err {err:g}"))
    hyper = sum(x // d for d in range(1, x + 1))
    out.append(("hyperbola sum", float(d2.values.sum()) == float(hyper),
                f"{d2.values.sum():g} vs {hyper}"))
    f = sieve.sieve_dk(3, x // 2 + 1, x)
    g = sieve.sieve_dk(3, 1, x + 10)
    lhs, rhs, aerr = arcs_mod.parseval_check(f, g, 7)
    out.append(("Plancherel d_3 h=7", aerr <= 1e-9 * max(lhs, 1.0), f"abs err {aerr:g}"))
    out.append(("c_1(h) = 1", local.ramanujan_sum(1, 5) == 1.0, ""))
    out.append(("c_q(0) = phi(q)",
                local.ramanujan_sum(60, 0) == float(local.euler_phi(60)), ""))
    tau_ok = True
    for q1 in range(1, 13):
        for ch in dirichlet.characters(q1):
            if ch.is_principal:
                mu_q = 1 if q1 == 1 else (0 if any(
                    e > 1 for e in local.factorize(q1).values())
                    else (-1) ** len(local.factorize(q1)))
                tau_ok &= abs(dirichlet.gauss_sum(ch) - mu_q) < 1e-9
    out.append(("principal Gauss sum = mu(q1)", tau_ok, "q1 <= 12"))
    r = expsum.maximal_sum(np.ones(64))
    out.append(("maximal sum of ones", r.value == 64.0, f"{r.value}"))
    s = arcs_mod.exp_sum(lam, 0.0)
    out.append(("S_f(0) = sum f", abs(s - lam.sum()) < 1e-9 * lam.sum(), ""))
    return out


def _cmd_experiment(args) -> int:
    name = args.name
    if name in ("averaged-hl", "averaged-dkdl", "averaged-lambda-dk", "goldbach"):
        kind = {"averaged-hl": "lambda-lambda", "averaged-dkdl": "dk-dl",
                "averaged-lambda-dk": "lambda-dk", "goldbach": "goldbach"}[name]
        series, profile = arcs_mod.averaged_theorem_experiment(
            kind, args.x, args.h_window, args.level_a, B=args.b, B_prime=args.bp,
            h0=args.h0, k=args.k, l=args.l, p_max=args.p_max,
            even_only=(kind == "lambda-lambda"))
        payload = {"experiment": name,
                   "params": {"X": args.x, "H": args.h_window, "A": args.level_a},
                   "profile": profile.__dict__}
        _emit(args, payload, series=series)
        return EXIT_OK
    if name == "kog":
        payload = arcs_mod.kog_check(args.x, q_max=5)
        payload = {"experiment": name, **payload}
    elif name == "fourth-moment":
        payload = dirichlet.fourth_moment_experiment(args.x, args.q, args.t)
    elif name == "jutila":
        t_list = [args.t + i * 2 * args.t0 for i in range(3)]
        payload = dirichlet.jutila_experiment(args.q, 2 * args.t, args.t0, t_list,
                                              X=args.x if args.x > 1 else None)
    elif name == "rs-fourth":
        payload = expsum.rs_fourth_moment_experiment(args.m1, args.t, args.theta)
    elif name == "ytilde-ep":
        payload = expsum.y_tilde_vs_exponent_pair(args.t * 1000, args.m1,
                                                  H=args.h_window, Q=7.0, q1=args.q)
    elif name == "good-cancellation":
        rows = dirichlet.good_cancellation_report(
            ("one", "mu", "log"), [args.x // 4, args.x // 2, args.x],
            args.q, 1, [args.t])
        payload = {"experiment": name, "rows": rows}
    elif name == "heath-brown":
        hb = decomp.heath_brown_decompose(args.k if args.k <= 5 else 3, args.x)
        payload = {"experiment": name, "K": hb.K, "X": hb.X,
                   "mu_cutoff": hb.mu_cutoff,
                   "max_reconstruction_error": hb.max_reconstruction_error,
                   "pieces": [{"j": p.j, "coefficient": p.coefficient}
                              for p in hb.pieces]}
    elif name == "comb-decompose":
        fk = "lambda" if args.k == 0 else "dk"
        dec = decomp.comb_decompose(fk, m=args.m, eps=args.eps,
                                    H0=args.x ** (1.0 / args.m + args.eps * 1.5),
                                    X=args.x, q0=args.q0, k=max(args.k, 2))
        payload = {"experiment": name, "counts": dec.counts(),
                   "reconstruction_error": dec.reconstruction_error,
                   "small_l2_budget": dec.small_l2_budget,
                   "pieces": [{"shape": p.shape, "N": p.N, "Ms": list(p.Ms),
                               "l2sq": p.l2sq} for p in dec.pieces]}
    else:
        raise ConfigError(f"unknown experiment {name}")
    _emit(args, payload)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        RunConfig(command=args.command, args=args)
        os.environ.setdefault(sieve.THREADS_ENV, str(args.threads))
        handler = {"sieve": _cmd_sieve, "correlate": _cmd_correlate,
                   "predict": _cmd_predict, "arcs": _cmd_arcs,
                   "verify": _cmd_verify, "experiment": _cmd_experiment}[args.command]
        return handler(args)
    except ResourceGuard as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except QuadratureError as exc:
        print(f"numeric non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, sieve.RangeError, sieve.CoverageError,
            decomp.DecompositionError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
