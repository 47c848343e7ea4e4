"""Command-line front end: ``qpkid {keygen,simulate,attack,bound,verify,sweep}``.

Exit status: 0 when everything passes, 1 when a verification or statistical
check fails, 2 on usage or parameter errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import adversary as adv
from . import bounds
from .errors import ProtocolError
from .protocol import Params, keygen, private_key_dict, public_key_dict
from .rng import resolve_seed, stream
from .simulate import attack_acceptance, honest_acceptance
from .verify import CHECKS, LIMITATION, run_suite

R_MAX, S_MAX, T_MAX, T_BRUTE_MAX = 64, 4096, 16, 8


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    """Parse ``"1,2,4"`` or ``"1-8"`` (or a mix) into a list of ints."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _check_r(r: int) -> None:
    if not 1 <= r <= R_MAX:
        raise UsageError(f"--r must lie in [1, {R_MAX}] (desk-scale cap), got {r}")


def _check_s(s: int) -> None:
    if not 1 <= s <= S_MAX:
        raise UsageError(f"--s must lie in [1, {S_MAX}] (desk-scale cap), got {s}")


def _check_t(t: int, r: int | None = None) -> None:
    if not 1 <= t <= T_MAX:
        raise UsageError(f"t must lie in [1, {T_MAX}] for matrix builds, got {t}")
    if r is not None and not r <= t <= 2 * r - 1:
        raise UsageError(f"t = {t} is not r + t' for r = {r} and 0 <= t' <= r - 1")


def _check_trials(n: int) -> None:
    if n < 1:
        raise UsageError("--trials must be >= 1")


def _report(command: str, config: dict, results, passed: bool, started: float, **extra) -> dict:
    rep = {
        "command": command,
        "config": config,
        "version": f"qpkid {__version__}",
        "results": results,
        "pass": bool(passed),
        "wall_clock_s": round(time.perf_counter() - started, 6),
    }
    rep.update(extra)
    return rep


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return buf.getvalue()


def render_table(rows: list[dict], columns: list[str]) -> str:
    def fmt(v) -> str:
        if isinstance(v, float):
            return f"{v:.6g}"
        return "" if v is None else str(v)

    cells = [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: dict, rows: list[dict], columns: list[str], fmt: str, out: str | None) -> None:
    if fmt == "json":
        _emit(dumps_json(report), out)
    elif fmt == "csv":
        _emit(render_csv(rows, columns), out)
    else:
        _emit(render_table(rows, columns), out)


# --- commands -------------------------------------------------------------


def cmd_keygen(args) -> int:
    _check_r(args.r)
    _check_s(args.s)
    seed = resolve_seed(args.seed)
    issuer = keygen(Params(s=args.s, r=args.r), stream(seed, "keygen"))
    private = dumps_json(private_key_dict(issuer, seed))
    if args.out:
        path = Path(args.out)
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w") as fh:
            fh.write(private)
        os.chmod(path, 0o600)
        pub = path.with_name(path.stem + ".pub.json")
        pub.write_text(dumps_json(public_key_dict(issuer, seed)))
        print(f"private key -> {path} (mode 600); public descriptor -> {pub}; copy budget r = {args.r}", file=sys.stderr)
    else:
        sys.stdout.write(private)
        print(f"copy budget r = {args.r}", file=sys.stderr)
    return 0


SIM_COLUMNS = ["metric", "estimate", "stderr", "trials", "analytic", "bound", "pass"]


def simulate_report(
    mode: str, r: int, s: int, t_prime: int, strategy: str, trials: int, seed: int, workers: int = 1
) -> tuple[dict, list[dict]]:
    started = time.perf_counter()
    config = {"mode": mode, "r": r, "s": s, "trials": trials, "seed": seed}
    if mode == "honest":
        est = honest_acceptance(r, s, trials, seed)
        row = {"metric": "honest_acceptance", **est.to_dict(), "analytic": 1.0, "bound": None}
        row["pass"] = est.successes == est.trials
        return _report("simulate", config, [row], row["pass"], started), [row]

    if not 0 <= t_prime <= r - 1:
        raise UsageError(f"--t-prime must lie in [0, {r - 1}]")
    t = r + t_prime
    _check_t(t)
    strat = adv.make_strategy(strategy, t)
    alpha = strat.mean_success(r)
    attempts = r - t_prime
    config.update(strategy=strategy, t_prime=t_prime, t=t, attempts=attempts)
    single = attack_acceptance(strat, r, s, trials, seed, workers=workers)
    multi = attack_acceptance(strat, r, s, trials, seed, attempts=attempts, workers=workers)
    p_break = bounds.break_probability_bound(r, s)
    rows = [
        {"metric": "per_iteration_success", "estimate": None, "stderr": None, "trials": None,
         "analytic": alpha, "bound": bounds.per_iteration_bound(t), "pass": alpha <= bounds.per_iteration_bound(t)},
        {"metric": "single_attempt_acceptance", **single.to_dict(), "analytic": alpha**s, "bound": p_break,
         "pass": single.within(alpha**s) and single.at_most(p_break)},
        {"metric": "fooled_at_least_once", **multi.to_dict(), "analytic": 1 - (1 - alpha**s) ** attempts,
         "bound": p_break, "pass": multi.within(1 - (1 - alpha**s) ** attempts) and multi.at_most(p_break)},
    ]
    for row in rows:
        row.pop("successes", None)
    rep = _report("simulate", config, rows, all(row["pass"] for row in rows), started,
                  note="bound assumes no degradation of Eve's reference between attempts; likely not tight")
    return rep, rows


def cmd_simulate(args) -> int:
    _check_r(args.r)
    _check_s(args.s)
    _check_trials(args.trials)
    seed = resolve_seed(args.seed)
    rep, rows = simulate_report(args.mode, args.r, args.s, args.t_prime, args.strategy, args.trials, seed, args.workers)
    _emit_report(rep, rows, SIM_COLUMNS, args.format, args.out)
    return 0 if rep["pass"] else 1


BOUND_COLUMNS = ["ell", "t_plus_ell_minus_1", "attempt_bound"]


def cmd_bound(args) -> int:
    _check_r(args.r)
    if (args.s is None) == (args.epsilon is None):
        raise UsageError("give exactly one of --s or --epsilon")
    if args.epsilon is not None:
        if not 0 < args.epsilon < 1:
            raise UsageError("--epsilon must lie in (0, 1)")
        s = bounds.required_s(args.r, args.epsilon)
    else:
        _check_s(args.s)
        s = args.s
    if not 0 <= args.t_prime <= args.r - 1:
        raise UsageError(f"--t-prime must lie in [0, {args.r - 1}]")
    rep = bounds.BoundReport(args.r, s, t_prime=args.t_prime, epsilon=args.epsilon)
    if args.format == "json":
        _emit(dumps_json(rep.to_dict()), args.out)
        return 0
    rows = [
        {"ell": ell, "t_plus_ell_minus_1": rep.t + ell - 1, "attempt_bound": b}
        for ell, b in enumerate(rep.per_attempt_bounds, start=1)
    ]
    if args.format == "csv":
        _emit(render_csv(rows, BOUND_COLUMNS), args.out)
        return 0
    head = [
        f"r = {rep.r}  s = {rep.s}  t' = {rep.t_prime}  t = {rep.t}  c = {rep.c:.6f}",
        f"per-iteration bound      {rep.per_iteration_bound:.6f}",
        f"union over attempts      {rep.union_bound:.6g}",
        f"P_break bound            {rep.p_break_bound:.6g}" + ("  (clamped to 1)" if rep.clamped else ""),
    ]
    if rep.epsilon is not None:
        head.append(f"required s (theorem)     {rep.required_s}   epsilon = {rep.epsilon}")
        head.append(f"required s (exact)       {rep.required_s_exact}")
    _emit("\n".join(head) + "\n\n" + render_table(rows, BOUND_COLUMNS), args.out)
    return 0


VERIFY_COLUMNS = ["check", "params", "deviation", "tolerance", "pass"]


def cmd_verify(args) -> int:
    only = None
    if args.only:
        only = [n for part in args.only for n in part.split(",") if n]
        unknown = [n for n in only if n not in CHECKS]
        if unknown:
            raise UsageError(f"unknown check(s) {unknown}; choose from {sorted(CHECKS)}")
    if args.t_max is not None and not 1 <= args.t_max <= T_MAX:
        raise UsageError(f"--t-max must lie in [1, {T_MAX}] (brute force additionally capped at {T_BRUTE_MAX})")
    _check_trials(args.trials)
    seed = resolve_seed(args.seed)
    started = time.perf_counter()
    results = run_suite(only=only, t_max=args.t_max, seed=seed, trials=args.trials, inject_fault=args.inject_fault)
    rows = [r.to_dict() for r in results]
    ok = all(r.passed for r in results)
    config = {"only": only, "t_max": args.t_max, "seed": seed, "trials": args.trials, "inject_fault": args.inject_fault}
    rep = _report("verify", config, rows, ok, started, limitation=LIMITATION,
                  summary={"checks": len(rows), "passed": sum(r.passed for r in results)})
    if args.format == "text":
        text_rows = [dict(row, params=json.dumps(row["params"], sort_keys=True)) for row in rows]
        _emit(render_table(text_rows, VERIFY_COLUMNS) + f"\n{rep['summary']['passed']}/{len(rows)} passed\n{LIMITATION}\n", args.out)
    elif args.format == "csv":
        _emit(render_csv([dict(row, params=json.dumps(row["params"], sort_keys=True)) for row in rows], VERIFY_COLUMNS), args.out)
    else:
        _emit(dumps_json(rep), args.out)
    return 0 if ok else 1


SWEEP_COLUMNS = ["r", "s", "t", "alpha", "alpha_pow_s", "bound", "mc_estimate", "stderr", "trials"]


def sweep_rows(
    r_values: list[int] | None,
    s_values: list[int],
    t_values: list[int] | None,
    t_primes: list[int],
    strategy: str,
    trials: int,
    seed: int,
) -> list[dict]:
    if not s_values or (r_values is not None and not r_values) or (t_values is not None and not t_values):
        raise UsageError("empty sweep grid")
    for s in s_values:
        _check_s(s)
    pairs: list[tuple[int, int]] = []
    if t_values is not None:
        for t in t_values:
            _check_t(t)
        if r_values is None:
            pairs = [(adv.minimal_r(t), t) for t in t_values]
        else:
            for r in r_values:
                _check_r(r)
                for t in t_values:
                    _check_t(t, r)
                    pairs.append((r, t))
    else:
        if r_values is None:
            raise UsageError("give --r or --t")
        for r in r_values:
            _check_r(r)
            for tp in t_primes:
                if not 0 <= tp <= r - 1:
                    raise UsageError(f"--t-prime {tp} outside [0, {r - 1}] for r = {r}")
                _check_t(r + tp)
                pairs.append((r, r + tp))
    if not pairs:
        raise UsageError("empty sweep grid")
    rows = []
    for r, t in pairs:
        strat = adv.make_strategy(strategy, t)
        alpha = strat.mean_success(r)
        for s in s_values:
            est = attack_acceptance(strat, r, s, trials, seed)
            rows.append({
                "r": r, "s": s, "t": t, "alpha": alpha, "alpha_pow_s": alpha**s,
                "bound": bounds.break_probability_bound(r, s),
                "mc_estimate": est.p, "stderr": est.stderr, "trials": trials,
            })
    return rows


def cmd_sweep(args) -> int:
    _check_trials(args.trials)
    seed = resolve_seed(args.seed)
    started = time.perf_counter()
    rows = sweep_rows(
        _int_list(args.r) if args.r else None,
        _int_list(args.s),
        _int_list(args.t) if args.t else None,
        _int_list(args.t_prime),
        args.strategy,
        args.trials,
        seed,
    )
    config = {"r": args.r, "s": args.s, "t": args.t, "t_prime": args.t_prime, "strategy": args.strategy,
              "trials": args.trials, "seed": seed}
    _emit_report(_report("sweep", config, rows, True, started), rows, SWEEP_COLUMNS, args.format, args.out)
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpkid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qpkid {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="json"):
        sp.add_argument("--seed", type=int, default=None, help="master seed (falls back to $QPK_SEED)")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv", "text"), default=fmt)

    k = sub.add_parser("keygen", help="generate a private key and public-key descriptor")
    k.add_argument("--r", type=int, required=True)
    k.add_argument("--s", type=int, required=True)
    k.add_argument("--seed", type=int, default=None)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_keygen)

    for name, mode in (("simulate", "honest"), ("attack", "attack")):
        sp = sub.add_parser(name, help="Monte Carlo of honest or adversarial runs")
        sp.add_argument("--mode", choices=("honest", "attack"), default=mode)
        sp.add_argument("--r", type=int, required=True)
        sp.add_argument("--s", type=int, required=True)
        sp.add_argument("--t-prime", type=int, default=0)
        sp.add_argument("--strategy", choices=sorted(adv.STRATEGIES), default="optimal")
        sp.add_argument("--trials", type=int, default=10_000)
        sp.add_argument("--workers", type=int, default=1)
        common(sp, fmt="text")
        sp.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bound", help="analytic break-probability bounds")
    b.add_argument("--r", type=int, required=True)
    b.add_argument("--s", type=int, default=None)
    b.add_argument("--epsilon", type=float, default=None)
    b.add_argument("--t-prime", type=int, default=0)
    common(b, fmt="text")
    b.set_defaults(func=cmd_bound)

    v = sub.add_parser("verify", help="run the numerical verification suite")
    v.add_argument("--only", action="append", default=None, help=f"comma list from {','.join(CHECKS)}")
    v.add_argument("--t-max", type=int, default=None)
    v.add_argument("--trials", type=int, default=10**6)
    v.add_argument("--inject-fault", choices=("povm",), default=None, help=argparse.SUPPRESS)
    common(v, fmt="text")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="grid of analytic values, bounds and Monte Carlo estimates")
    w.add_argument("--r", default=None, help='e.g. "1,2,4" or "1-8"')
    w.add_argument("--s", required=True)
    w.add_argument("--t", default=None, help="explicit t values; r defaults to the smallest admissible")
    w.add_argument("--t-prime", default="0")
    w.add_argument("--strategy", choices=sorted(adv.STRATEGIES), default="optimal")
    w.add_argument("--trials", type=int, default=10_000)
    common(w, fmt="csv")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"qpkid {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
