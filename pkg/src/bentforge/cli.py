"""Command-line entry point: ``bentforge <subcommand> ...``.

Field elements are written as hex (``0x1f``), decimal bitmasks, ``g^k`` (power of
the generator of GF(2^m0)) or ``z^k`` (power of the generator of the subfield
in question, GF(2^m1) unless stated otherwise).  GF(4) elements are 1, w, w2.

Exit status: 0 on success, 1 when a check finds an inconsistency, 2 on usage
or input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from .field import FieldError, GF4Element, context_new, is_in_subfield
from .sums import (
    ClosedFormMismatch,
    cubic_sum,
    cubic_sum_a0_closed,
    cubic_sum_aa_closed,
    cubic_sum_aa_odd_closed,
    coset_cubic,
    coset_cubic_direct,
    coset_kloosterman,
    coset_kloosterman_direct,
    hasse_weil_bound,
    kloosterman,
    sigma_closed,
    sigma_direct,
)
from .sweep import CheckpointCorrupt, CheckpointMismatch, SweepConfig, SweepError, resume, run_sweep
from .walsh import (
    BinomialFunction,
    ConjectureViolation,
    bent_certify,
    conjecture2_check,
    export_spectrum,
    reduced,
    s2_subfield_closed,
    s_nu_direct,
    walsh_bruteforce,
    walsh_from_s_nu,
    walsh_odd_closed,
    walsh_zero_closed,
)

THREADS_ENV = "BENTFORGE_THREADS"


class UsageError(Exception):
    pass


def parse_element(ctx, token: str, degree: int | None = None):
    token = token.strip()
    if token.startswith("z^"):
        return ctx.parse(token, base=ctx.subfield_generator(ctx.m1 if degree is None else degree))
    return ctx.parse(token)


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo..hi, got {text!r}") from None


def _emit(args, payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
        return
    for k, v in payload.items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True)
        print(f"{k}: {v}")


# -- subcommands ----------------------------------------------------------------

def cmd_context(args) -> int:
    ctx = context_new(args.m0)
    _emit(args, ctx.describe())
    return 0


def _sums_context(args):
    if args.m1 is None:
        raise UsageError("--m1 is required")
    m0 = args.m0 or 2 * args.m1
    ctx = context_new(m0)
    if m0 % args.m1:
        raise UsageError(f"--m1 {args.m1} does not divide m0 = {m0}")
    return ctx, args.m1


def _sub_element(ctx, token: str, m1: int):
    # inside a sums query g^k and z^k both mean the generator of GF(2^m1)
    token = token.strip()
    if token.startswith("g^"):
        token = "z^" + token[2:]
    x = parse_element(ctx, token, m1)
    if not is_in_subfield(x, m1):
        raise UsageError(f"{token} is not in GF(2^{m1})")
    return x


def cmd_sums(args) -> int:
    if args.sum == "sigma":
        if args.m is None or args.k is None:
            raise UsageError("sigma needs --m and --k")
        value = sigma_closed(args.m, args.k)
        out = {"sum": "sigma", "m": args.m, "k": args.k, "value": value, "closed_form_used": True}
        if args.check:
            out["oracle_value"] = sigma_direct(args.m, args.k)
        _emit(args, out)
        return 0 if out.get("oracle_value", value) == value else 1
    ctx, m1 = _sums_context(args)
    if args.a is None:
        raise UsageError("--a is required")
    a = _sub_element(ctx, args.a, m1)
    out = {"sum": args.sum, "m1": m1, "a_hex": hex(a.bits)}
    oracle = None
    if args.sum == "kloosterman":
        out["value"] = kloosterman(a, m1)
        out["closed_form_used"] = False
        out["K_mod3"] = out["value"] % 3
        out["hasse_weil_bound"] = hasse_weil_bound(m1)
    elif args.sum == "cubic":
        b = a if args.b in (None, "a") else _sub_element(ctx, args.b, m1)
        out["b_hex"] = hex(b.bits)
        direct = cubic_sum(a, b, m1)
        closed = None
        if a and b == a:
            closed = (cubic_sum_aa_closed if m1 % 2 == 0 else cubic_sum_aa_odd_closed)(a, m1)
        elif a and not b and m1 % 2 == 0:
            closed = cubic_sum_a0_closed(a, m1)
        out["closed_form_used"] = closed is not None
        out["value"] = direct if closed is None else closed
        oracle = direct
    else:
        if args.gamma is None:
            raise UsageError(f"{args.sum} needs --gamma")
        gamma = GF4Element.parse(args.gamma)
        out["gamma"] = str(gamma)
        closed_fn, direct_fn = ((coset_cubic, coset_cubic_direct) if args.sum == "coset-cubic"
                                else (coset_kloosterman, coset_kloosterman_direct))
        out["value"] = closed_fn(a, gamma, m1)
        out["closed_form_used"] = True
        oracle = direct_fn(a, gamma, m1)
    if args.check and oracle is not None:
        out["oracle_value"] = oracle
    _emit(args, out)
    return 0 if out.get("oracle_value", out["value"]) == out["value"] else 1


def _function(args):
    ctx = context_new(args.m0)
    a = parse_element(ctx, args.a)
    b = GF4Element.parse(args.b)
    return ctx, BinomialFunction(ctx, a, b)


def closed_walsh(fab: BinomialFunction, omega) -> tuple[int, str]:
    """Best available formula route for W(omega) and its name."""
    ctx = fab.ctx
    if ctx.nu == 1:
        return walsh_odd_closed(fab, omega), "odd-closed"
    red = reduced(fab)
    if red.reduction_witness is not None:
        omega = red.reduction_witness[1] * omega
    if not omega:
        return walsh_zero_closed(red), "zero-closed"
    if ctx.nu == 2 and is_in_subfield(omega, ctx.m1):
        return walsh_from_s_nu(red, omega, s2_subfield_closed(red, omega)), "subfield-closed"
    return walsh_from_s_nu(red, omega, s_nu_direct(red, omega)), "s_nu-expansion"


def cmd_walsh(args) -> int:
    ctx, fab = _function(args)
    omega = parse_element(ctx, args.omega)
    out = {"m0": ctx.m0, "a_hex": hex(fab.a.bits), "b": str(fab.b), "omega_hex": hex(omega.bits)}
    method = args.method or "both"
    if method in ("closed", "both"):
        out["closed"], out["route"] = closed_walsh(fab, omega)
    if method in ("brute", "both"):
        out["brute"] = walsh_bruteforce(fab, omega)
    status = 0
    if method == "both":
        out["agree"] = out["closed"] == out["brute"]
        status = 0 if out["agree"] else 1
    if args.dump:
        meta = export_spectrum(fab, args.dump)
        out["spectrum_file"] = str(args.dump)
        out["parseval_ok"] = meta["parseval_ok"]
        status = status or (0 if meta["parseval_ok"] else 1)
    _emit(args, out)
    return status


def cmd_bent(args) -> int:
    ctx, fab = _function(args)
    v = bent_certify(fab, spectrum=False if args.no_spectrum else None)
    out = {"m0": ctx.m0, "a_hex": hex(fab.a.bits), "b": str(fab.b), **v.to_dict()}
    _emit(args, out)
    return 1 if v.agree is False else 0


def cmd_conjecture(args) -> int:
    ctx = context_new(args.m0)
    if args.omega is not None:
        _, fab = _function(args)
        r = conjecture2_check(reduced(fab), parse_element(ctx, args.omega))
        _emit(args, r.to_dict())
        return 0 if r.consistent else 1
    cfg = _cfg_from_args(args, {"mode": "conjecture2"})
    return _run(args, cfg)


def _config_file(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    try:
        return json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc


def _cfg_from_args(args, fixed: dict | None = None) -> SweepConfig:
    d = {k: v for k, v in _config_file(args).items() if k not in ("output", "checkpoint", "workers")}
    flags = {
        "m0": args.m0,
        "mode": getattr(args, "mode", None),
        "b_selection": args.b_list.split(",") if args.b_list else None,
        "omega_selection": args.omega_mode,
        "omega_sample": args.sample,
        "seed": args.seed,
        "chunk": args.chunk,
        "spot_fraction": args.spot_fraction,
        "s_method": args.s_method,
    }
    if args.a_range:
        flags.update(a_selection="range", a_values=list(args.a_range))
    elif args.a_list:
        flags.update(a_selection="list", a_values=[int(v) for v in args.a_list.split(",")])
    d.update({k: v for k, v in flags.items() if v is not None})
    d.update(fixed or {})
    if args.sample and flags["omega_selection"] is None:
        d["omega_selection"] = "sample"
    if "m0" not in d:
        raise UsageError("--m0 is required (flag or config file)")
    try:
        return SweepConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _workers(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    file_workers = _config_file(args).get("workers")
    if file_workers:
        return int(file_workers)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _run(args, cfg: SweepConfig) -> int:
    filecfg = _config_file(args)
    output = args.output or filecfg.get("output")
    checkpoint = args.checkpoint or filecfg.get("checkpoint")
    progress = None if args.quiet else sys.stderr
    if output:
        summary = run_sweep(cfg, output, checkpoint, _workers(args), args.max_units, progress)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            summary = run_sweep(cfg, Path(tmp) / "sweep.ndjson", None, _workers(args), args.max_units, progress)
    _emit(args, summary)
    if summary.get("type") == "partial":
        return 0
    return 0 if summary["ok"] else 1


def cmd_sweep(args) -> int:
    return _run(args, _cfg_from_args(args))


def cmd_resume(args) -> int:
    cfg = _cfg_from_args(args) if (args.config or args.m0) else None
    progress = None if args.quiet else sys.stderr
    summary = resume(args.checkpoint, cfg, _workers(args), args.max_units, progress)
    _emit(args, summary)
    if summary.get("type") == "partial":
        return 0
    return 0 if summary["ok"] else 1


# -- parser ---------------------------------------------------------------------

def _sweep_flags(p, mode: bool = True) -> None:
    p.add_argument("--config", help="JSON file with sweep settings (flags win)")
    if mode:
        p.add_argument("--mode", choices=["conjecture2", "bent-agreement", "closed-vs-brute"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--a-range", type=_range, help="class representatives z^i with lo <= i < hi")
    g.add_argument("--a-list", help="comma separated exponents i for a = z^i")
    p.add_argument("--b-list", help="comma separated GF(4) elements (default 1,w,w2)")
    p.add_argument("--omega-mode", choices=["all", "subfield", "sample"])
    p.add_argument("--sample", type=int, help="number of sampled omega (implies --omega-mode sample)")
    p.add_argument("--seed", type=int)
    p.add_argument("--chunk", type=int, help="omega per record")
    p.add_argument("--spot-fraction", type=float)
    p.add_argument("--s-method", choices=["gather", "fft"])
    p.add_argument("--output", help="NDJSON output path")
    p.add_argument("--checkpoint", help="checkpoint path (default OUTPUT.ckpt)")
    p.add_argument("--max-units", type=int, help="stop after this many work units")
    p.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--quiet", action="store_true", help="no progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bentforge", description=__doc__.split("\n\n")[0])
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=fn)
        return p

    p = add("context", cmd_context, "describe the field context for m0")
    p.add_argument("--m0", type=int, required=True)

    p = add("sums", cmd_sums, "Kloosterman, cubic, coset and Sigma sums")
    p.add_argument("sum", choices=["kloosterman", "cubic", "coset-cubic", "coset-kloosterman", "sigma"])
    p.add_argument("--m1", type=int, help="degree of the subfield the sum runs over")
    p.add_argument("--m0", type=int, help="ambient degree (default 2*m1)")
    p.add_argument("--a")
    p.add_argument("--b", help="cubic only: 'a' (default), 0 or another element")
    p.add_argument("--gamma", help="coset sums: 1, w or w2")
    p.add_argument("--m", type=int, help="sigma only")
    p.add_argument("--k", type=int, help="sigma only")
    p.add_argument("--check", action="store_true", help="also report the direct-enumeration value")

    for name, fn, help_ in (("walsh", cmd_walsh, "Walsh transform value at one omega"),
                            ("bent", cmd_bent, "bentness verdict for f_{a,b}")):
        p = add(name, fn, help_)
        p.add_argument("--m0", type=int, required=True)
        p.add_argument("--a", required=True)
        p.add_argument("--b", default="1")
        if name == "walsh":
            p.add_argument("--omega", required=True)
            g = p.add_mutually_exclusive_group()
            g.add_argument("--closed", dest="method", action="store_const", const="closed")
            g.add_argument("--brute", dest="method", action="store_const", const="brute")
            g.add_argument("--both", dest="method", action="store_const", const="both")
            p.add_argument("--dump", help="write the full spectrum (int32 LE) and a JSON sidecar here")
        else:
            p.add_argument("--no-spectrum", action="store_true", help="Kloosterman criterion only")

    p = add("conjecture", cmd_conjecture, "check the S_2 identity (one omega, or a sweep)")
    p.add_argument("--m0", type=int, required=True)
    p.add_argument("--a", help="coefficient, for a single-omega check")
    p.add_argument("--b", default="1")
    p.add_argument("--omega", help="single omega; omit to sweep")
    _sweep_flags(p, mode=False)

    p = add("sweep", cmd_sweep, "run a verification sweep")
    p.add_argument("--m0", type=int)
    _sweep_flags(p)

    p = add("resume", cmd_resume, "resume an interrupted sweep from its checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--m0", type=int, help="with the other sweep flags: config to compare against")
    p.add_argument("--config", help="JSON config to compare against the checkpoint")
    for flag in ("--mode", "--b-list", "--omega-mode", "--s-method"):
        p.add_argument(flag)
    for flag in ("--sample", "--seed", "--chunk", "--max-units", "--threads"):
        p.add_argument(flag, type=int)
    p.add_argument("--spot-fraction", type=float)
    p.add_argument("--a-range", type=_range)
    p.add_argument("--a-list")
    p.add_argument("--quiet", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "conjecture" and args.omega is not None and not args.a:
        parser.error("--omega needs --a")
    try:
        return args.func(args)
    except (UsageError, FieldError, CheckpointMismatch, ValueError) as exc:
        print(f"bentforge: error: {exc}", file=sys.stderr)
        return 2
    except (ClosedFormMismatch, ConjectureViolation, CheckpointCorrupt, SweepError) as exc:
        print(f"bentforge: inconsistency: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
