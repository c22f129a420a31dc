"""Resumable verification sweeps over (a, b, omega).

Output is newline-delimited JSON: a header line, then the records of every work
unit (one unit per coefficient class representative a = z^i), then a trailing
summary.  Every line carries a CRC32 of its own canonical encoding.  Workers
compute units and a single writer commits them in unit order, so the byte
stream does not depend on the number of workers.
"""
from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import logging
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .field import FieldContext, FieldError, GF4Element, context_new
from .polar import unit_group
from .sums import cubic_sum_aa_odd_closed, kloosterman
from .vec import exp_table
from .walsh import (
    BinomialFunction,
    GaussSumEngine,
    SPECTRUM_MAX_DEGREE,
    f_bits_on_U,
    fa_bits_on_U,
    is_bent_spectrum,
    parseval_count_check,
    parseval_ok,
    s_nu_direct,
    solve_h_vec,
    walsh_full_coefficients,
    walsh_spectrum_bruteforce,
    walsh_zero_closed,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODES = ("conjecture2", "bent-agreement", "closed-vs-brute")
A_SELECTIONS = ("classes", "list", "range")
OMEGA_SELECTIONS = ("all", "subfield", "sample")
BITMASK_ORDER_MAX_DEGREE = 24


class SweepError(RuntimeError):
    pass


class CheckpointMismatch(SweepError):
    pass


class CheckpointCorrupt(SweepError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    m0: int
    mode: str = "conjecture2"
    a_selection: str = "classes"
    # explicit powers i (a = z^i) for "list"; [lo, hi) for "range"
    a_values: tuple[int, ...] = ()
    b_selection: tuple[str, ...] = ("1", "w", "w2")
    omega_selection: str = "all"
    omega_sample: int = 0
    seed: int = 0
    chunk: int = 65536
    spot_fraction: float = 0.01
    s_method: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.a_selection not in A_SELECTIONS:
            raise ValueError(f"a_selection must be one of {A_SELECTIONS}")
        if self.omega_selection not in OMEGA_SELECTIONS:
            raise ValueError(f"omega_selection must be one of {OMEGA_SELECTIONS}")
        if self.a_selection == "range" and len(self.a_values) != 2:
            raise ValueError("a range needs exactly two bounds lo, hi")
        if self.omega_selection == "sample" and self.omega_sample <= 0:
            raise ValueError("sample mode needs omega_sample > 0")
        if self.chunk <= 0:
            raise ValueError("chunk must be positive")
        if not 0 <= self.spot_fraction <= 1:
            raise ValueError("spot_fraction must lie in [0, 1]")
        for t in self.b_selection:
            GF4Element.parse(t)
        object.__setattr__(self, "a_values", tuple(int(v) for v in self.a_values))
        object.__setattr__(self, "b_selection", tuple(self.b_selection))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["a_values"] = list(self.a_values)
        d["b_selection"] = list(self.b_selection)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SweepConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for k in ("a_values", "b_selection"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)

    def hash(self) -> str:
        return hashlib.sha256(_canonical(self.to_dict()).encode()).hexdigest()[:16]

    @property
    def b_values(self) -> list[GF4Element]:
        return [GF4Element.parse(t) for t in self.b_selection]


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def encode_record(rec: dict) -> str:
    body = _canonical(rec)
    rec = dict(rec, crc=zlib.crc32(body.encode()))
    return _canonical(rec) + "\n"


def decode_record(line: str) -> dict:
    try:
        rec = json.loads(line)
        crc = rec.pop("crc")
    except (ValueError, KeyError, AttributeError) as exc:
        raise CheckpointCorrupt(f"unreadable record: {line[:80]!r}") from exc
    if zlib.crc32(_canonical(rec).encode()) != crc:
        raise CheckpointCorrupt(f"CRC mismatch in record: {line[:80]!r}")
    return rec


# -- task expansion -------------------------------------------------------------

def cyclotomic_representatives(m1: int) -> list[int]:
    """Smallest exponent i in each class {i 2^j mod (2^m1 - 1)}; a = z^i."""
    n = (1 << m1) - 1
    seen = bytearray(n)
    reps = []
    for i in range(n):
        if seen[i]:
            continue
        reps.append(i)
        j = i
        while not seen[j]:
            seen[j] = 1
            j = 2 * j % n
    return reps


def class_of(i: int, m1: int) -> list[int]:
    n = (1 << m1) - 1
    out, j = [], i
    while True:
        out.append(j)
        j = 2 * j % n
        if j == i:
            return sorted(out)


def expand_units(cfg: SweepConfig) -> list[int]:
    ctx = context_new(cfg.m0)
    m1 = ctx.m1
    if cfg.a_selection == "classes":
        return cyclotomic_representatives(m1)
    if cfg.a_selection == "list":
        n = (1 << m1) - 1
        return [v % n for v in cfg.a_values]
    lo, hi = cfg.a_values
    return [i for i in cyclotomic_representatives(m1) if lo <= i < hi]


@functools.lru_cache(maxsize=2)
def _log_table(ctx: FieldContext) -> np.ndarray:
    exp = exp_table(ctx)
    lg = np.zeros(1 << ctx.m0, dtype=np.int64)
    lg[exp] = np.arange(ctx.order, dtype=np.int64)
    lg.setflags(write=False)
    return lg


class OmegaSelection:
    """Ordered nonzero omega, yielded in chunks as (keys, logs).

    Keys are omega bitmasks up to m0 = 24 and generator exponents above that
    (no bitmask table is materialized there).
    """

    def __init__(self, ctx: FieldContext, cfg: SweepConfig):
        self.ctx, self.cfg = ctx, cfg
        self.order = "bitmask" if ctx.m0 <= BITMASK_ORDER_MAX_DEGREE or cfg.omega_selection != "all" else "log"
        self._fixed = None
        N = ctx.order
        if cfg.omega_selection == "subfield":
            step = N // ((1 << ctx.m1) - 1)
            L = np.arange((1 << ctx.m1) - 1, dtype=np.int64) * step
            self._fixed = self._by_bitmask(L)
        elif cfg.omega_selection == "sample":
            rng = np.random.default_rng(cfg.seed)
            k = min(cfg.omega_sample, N)
            L = np.sort(rng.choice(N, size=k, replace=False).astype(np.int64))
            self._fixed = self._by_bitmask(L)

    def _by_bitmask(self, L: np.ndarray):
        if self.ctx.m0 <= BITMASK_ORDER_MAX_DEGREE:
            keys = exp_table(self.ctx)[L].astype(np.int64)
        else:
            keys = np.array([self.ctx.gen_power(int(v)).bits for v in L], dtype=np.int64)
        o = np.argsort(keys, kind="stable")
        return keys[o], L[o]

    def __len__(self) -> int:
        return self.ctx.order if self._fixed is None else len(self._fixed[0])

    def chunks(self):
        c = self.cfg.chunk
        if self._fixed is not None:
            keys, L = self._fixed
            for lo in range(0, len(keys), c):
                yield keys[lo: lo + c], L[lo: lo + c]
            return
        N = self.ctx.order
        if self.order == "bitmask":
            lg = _log_table(self.ctx)
            for lo in range(1, N + 1, c):
                keys = np.arange(lo, min(lo + c, N + 1), dtype=np.int64)
                yield keys, lg[keys]
        else:
            for lo in range(0, N, c):
                L = np.arange(lo, min(lo + c, N), dtype=np.int64)
                yield L, L

    def element(self, key: int):
        return self.ctx(key) if self.order == "bitmask" else self.ctx.gen_power(key)


@functools.lru_cache(maxsize=2)
def _omega_selection(ctx: FieldContext, cfg: SweepConfig) -> OmegaSelection:
    return OmegaSelection(ctx, cfg)


def _u_index(ctx: FieldContext, L: np.ndarray) -> np.ndarray:
    ug = unit_group(ctx)
    s1 = ug.unit_index(ctx.g)
    return (L % ug.order) * s1 % ug.order


def _hist(values: np.ndarray) -> dict:
    v, c = np.unique(values, return_counts=True)
    return {str(int(a)): int(b) for a, b in zip(v, c)}


def _crc(arr: np.ndarray) -> int:
    return zlib.crc32(np.ascontiguousarray(arr).tobytes())


def _walsh_from_s(ctx: FieldContext, K: int, f: np.ndarray, S: np.ndarray) -> np.ndarray:
    c_k, c_f, c_s = walsh_full_coefficients(ctx)
    den = 3
    base = Fraction(1) + c_k * (1 - K)
    num = int(base * den) + int(c_f * den) * (1 - 2 * f.astype(np.int64)) + den * c_s * S
    if np.any(num % den):
        raise ArithmeticError("non-integral Walsh value from S_nu")
    return num // den


# -- work units -----------------------------------------------------------------

@functools.lru_cache(maxsize=2)
def _engine(ctx: FieldContext) -> GaussSumEngine:
    return GaussSumEngine(ctx)


def _base_record(kind: str, ctx: FieldContext, i: int, a, K: int) -> dict:
    return {"type": kind, "m0": ctx.m0, "a_power": i, "a_hex": hex(a.bits), "K": K, "K_mod3": K % 3}


def _unit_conjecture(cfg: SweepConfig, i: int) -> list[dict]:
    ctx = context_new(cfg.m0)
    if ctx.nu != 2:
        raise SweepError(f"conjecture2 mode needs nu = 2, m0 = {cfg.m0} has nu = {ctx.nu}")
    z = ctx.subfield_generator(ctx.m1)
    a = z ** i
    K = kloosterman(a)
    in_h = K % 3 == 1
    eng = _engine(ctx)
    ug = eng.ug
    n = ug.order
    fa_s = eng.fa_signs(a)
    table = eng.s_table(fa_s, cfg.s_method)
    f_u = fa_bits_on_U(a)
    sel = _omega_selection(ctx, cfg)
    out = []
    for b in cfg.b_values:
        for ci, (keys, L) in enumerate(sel.chunks()):
            s = _u_index(ctx, L)
            S = table[s, b.log]
            f = f_u[(-ug.project(s, 1)) % n]
            W = _walsh_from_s(ctx, K, f, S)
            rec = _base_record("conjecture2", ctx, i, a, K)
            rec.update(b=str(b), chunk=ci, omega_order=sel.order, omega_first=int(keys[0]),
                       omega_last=int(keys[-1]), count=int(len(keys)), in_hypothesis=in_h,
                       s2_crc=_crc(S.astype(np.int32)), s2_min=int(S.min()), s2_max=int(S.max()),
                       walsh_hist=_hist(W))
            if in_h:
                h, ok = solve_h_vec(S, K, f, ctx.m_nu)
                rec.update(consistent=int(ok.sum()), inconsistent=int((~ok).sum()),
                           h_ones=int(h[ok].sum()), h_crc=_crc(np.packbits(h)),
                           conjectured_walsh_mismatch=int(np.count_nonzero(
                               ok & (W != (1 - 2 * (h ^ f).astype(np.int64)) * (1 << ctx.m1) + (4 - K) // 3))))
            out.append(rec)
    tail = _base_record("unit", ctx, i, a, K)
    tail["in_hypothesis"] = in_h
    if in_h and cfg.omega_selection == "all":
        reports = {}
        for b in cfg.b_values:
            r = parseval_count_check(BinomialFunction(ctx, a, b), K, eng, s_table=table)
            reports[str(b)] = r.to_dict()
        tail["parseval"] = reports
        tail["parseval_ok"] = all(r["ok"] for r in reports.values())
    tail["spot"] = _spot_checks_conjecture(cfg, ctx, i, a, K, table)
    out.append(tail)
    return out


def _spot_checks_conjecture(cfg, ctx, i, a, K, table) -> dict:
    """Recompute a sample of table entries by direct enumeration.

    Checks the w1 <-> w1^-1 symmetry and the class-member identity
    S(a^2, b^2, omega^2) = S(a, b, omega) along the way.
    """
    ug = unit_group(ctx)
    n = ug.order
    k = int(round(cfg.spot_fraction * n))
    if cfg.spot_fraction and k == 0:
        k = 1
    rng = np.random.default_rng([cfg.seed, i])
    picks = rng.choice(n, size=k, replace=False) if k else np.zeros(0, dtype=np.int64)
    bs = cfg.b_values
    b_pick = rng.integers(0, len(bs), size=k)
    a2 = a * a
    K2 = kloosterman(a2)
    sym_fail = member_fail = direct_fail = 0
    for s, bi in zip(picks.tolist(), b_pick.tolist()):
        b = bs[bi]
        fab = BinomialFunction(ctx, a, b)
        w = ctx(int(ug.elements[s]))
        d = s_nu_direct(fab, w)
        direct_fail += d != table[s, b.log]
        s_inv = (s - 2 * int(ug.project(s, 1))) % n
        d_inv = s_nu_direct(fab, ctx(int(ug.elements[s_inv])))
        sym_fail += d_inv != d or table[s_inv, b.log] != d
        member_fail += s_nu_direct(BinomialFunction(ctx, a2, b * b), w * w) != d
    return {"samples": int(k), "direct_fail": int(direct_fail), "symmetry_fail": int(sym_fail),
            "member_fail": int(member_fail), "member_K_fail": int(K2 != K)}


def _unit_bent(cfg: SweepConfig, i: int) -> list[dict]:
    ctx = context_new(cfg.m0)
    if ctx.m0 > SPECTRUM_MAX_DEGREE:
        raise SweepError(f"bent-agreement needs full spectra, m0 <= {SPECTRUM_MAX_DEGREE}")
    z = ctx.subfield_generator(ctx.m1)
    a = z ** i
    K = kloosterman(a)
    out = []
    for b in cfg.b_values:
        spec = walsh_spectrum_bruteforce(BinomialFunction(ctx, a, b))
        sb = is_bent_spectrum(spec, ctx.m1)
        rec = _base_record("bent", ctx, i, a, K)
        rec.update(b=str(b), spectrum_bent=sb, kloosterman_bent=K == 4, agree=sb == (K == 4),
                   parseval=parseval_ok(spec, ctx.m0), spectrum_crc=_crc(spec), walsh_hist=_hist(spec))
        out.append(rec)
    tail = _base_record("unit", ctx, i, a, K)
    tail["spot"] = {"member_K_fail": int(kloosterman(a * a) != K)}
    out.append(tail)
    return out


def _unit_closed(cfg: SweepConfig, i: int) -> list[dict]:
    ctx = context_new(cfg.m0)
    if ctx.m0 > SPECTRUM_MAX_DEGREE:
        raise SweepError(f"closed-vs-brute needs full spectra, m0 <= {SPECTRUM_MAX_DEGREE}")
    z = ctx.subfield_generator(ctx.m1)
    a = z ** i
    K = kloosterman(a)
    ug = unit_group(ctx)
    n = ug.order
    sel = _omega_selection(ctx, cfg)
    table = None
    if ctx.nu > 1:
        eng = _engine(ctx)
        table = eng.s_table(eng.fa_signs(a), cfg.s_method)
        f_u = fa_bits_on_U(a)
    else:
        C = cubic_sum_aa_odd_closed(a, ctx.m1)
    out = []
    for b in cfg.b_values:
        fab = BinomialFunction(ctx, a, b)
        spec = walsh_spectrum_bruteforce(fab)
        if ctx.nu == 1:
            inner = 1 - K - 4 * C if b.code == 1 else 1 - K + 2 * C
            w0 = 1 - ((1 << ctx.m1) - 1) * (inner // 3)
            fb = f_bits_on_U(fab)
        else:
            w0 = walsh_zero_closed(fab, K)
        mism, total = 0, 0
        for keys, L in sel.chunks():
            if sel.order != "bitmask":
                raise SweepError("closed-vs-brute needs bitmask-ordered omega")
            s = _u_index(ctx, L)
            if ctx.nu == 1:
                W = 1 + (1 << ctx.m1) * (1 - 2 * fb[(-s) % n].astype(np.int64)) + inner // 3
            else:
                f = f_u[(-ug.project(s, 1)) % n]
                W = _walsh_from_s(ctx, K, f, table[s, b.log])
            mism += int(np.count_nonzero(W != spec[keys]))
            total += len(keys)
        rec = _base_record("closed", ctx, i, a, K)
        rec.update(b=str(b), compared=total, mismatches=mism, w0_closed=int(w0), w0_brute=int(spec[0]),
                   w0_match=int(w0) == int(spec[0]))
        out.append(rec)
    out.append(_base_record("unit", ctx, i, a, K))
    return out


_UNITS = {"conjecture2": _unit_conjecture, "bent-agreement": _unit_bent, "closed-vs-brute": _unit_closed}


def run_unit(cfg_dict: dict, i: int) -> tuple[list[str], float]:
    cfg = SweepConfig.from_dict(cfg_dict)
    t = time.perf_counter()
    recs = _UNITS[cfg.mode](cfg, i)
    return [encode_record(r) for r in recs], time.perf_counter() - t


# -- summary --------------------------------------------------------------------

def summarize(records) -> dict:
    s = {"type": "summary", "units": 0, "records": 0, "consistent": 0, "inconsistent": 0,
         "out_of_hypothesis_records": 0, "parseval_failures": 0, "spot_samples": 0, "spot_failures": 0,
         "bent_disagreements": 0, "bent_pairs": 0, "parseval_spectrum_failures": 0,
         "closed_mismatches": 0, "closed_compared": 0, "conjectured_walsh_mismatch": 0}
    for r in records:
        t = r["type"]
        if t == "header":
            continue
        s["records"] += 1
        if t == "unit":
            s["units"] += 1
            if r.get("parseval_ok") is False:
                s["parseval_failures"] += 1
            spot = r.get("spot", {})
            s["spot_samples"] += spot.get("samples", 0)
            s["spot_failures"] += sum(v for k, v in spot.items() if k.endswith("_fail"))
        elif t == "conjecture2":
            if r["in_hypothesis"]:
                s["consistent"] += r["consistent"]
                s["inconsistent"] += r["inconsistent"]
                s["conjectured_walsh_mismatch"] += r["conjectured_walsh_mismatch"]
            else:
                s["out_of_hypothesis_records"] += 1
        elif t == "bent":
            s["bent_pairs"] += 1
            s["bent_disagreements"] += not r["agree"]
            s["parseval_spectrum_failures"] += not r["parseval"]
        elif t == "closed":
            s["closed_compared"] += r["compared"] + 1
            s["closed_mismatches"] += r["mismatches"] + (not r["w0_match"])
    s["ok"] = not (s["inconsistent"] or s["parseval_failures"] or s["spot_failures"]
                   or s["bent_disagreements"] or s["parseval_spectrum_failures"]
                   or s["closed_mismatches"] or s["conjectured_walsh_mismatch"])
    return s


def read_records(path: Path, limit: int | None = None) -> list[dict]:
    data = Path(path).read_bytes()
    if limit is not None:
        data = data[:limit]
    return [decode_record(line) for line in data.decode().splitlines() if line]


# -- driver -----------------------------------------------------------------------

def _write_checkpoint(path: Path, state: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(_canonical(state))
    os.replace(tmp, path)


def _header(cfg: SweepConfig) -> dict:
    ctx = context_new(cfg.m0)
    return {"type": "header", "version": FORMAT_VERSION, "config": cfg.to_dict(),
            "config_hash": cfg.hash(), "context": ctx.to_dict()}


def run_sweep(cfg: SweepConfig, output: str | Path, checkpoint: str | Path | None = None,
              workers: int = 1, max_units: int | None = None, progress=sys.stderr) -> dict:
    """Run a sweep from scratch; ``max_units`` stops early (as if interrupted)."""
    output = Path(output)
    checkpoint = Path(checkpoint) if checkpoint else output.with_name(output.name + ".ckpt")
    with open(output, "w") as fh:
        fh.write(encode_record(_header(cfg)))
        offset = fh.tell()
    state = {"config_hash": cfg.hash(), "config": cfg.to_dict(), "output": str(output),
             "units_done": 0, "offset": offset, "complete": False, "elapsed": 0.0}
    _write_checkpoint(checkpoint, state)
    return _drive(cfg, output, checkpoint, state, workers, max_units, progress)


def resume(checkpoint: str | Path, cfg: SweepConfig | None = None, workers: int = 1,
           max_units: int | None = None, progress=sys.stderr) -> dict:
    checkpoint = Path(checkpoint)
    try:
        state = json.loads(checkpoint.read_text())
    except (OSError, ValueError) as exc:
        raise CheckpointCorrupt(f"cannot read checkpoint {checkpoint}: {exc}") from exc
    stored = SweepConfig.from_dict(state["config"])
    if stored.hash() != state["config_hash"]:
        raise CheckpointCorrupt("checkpoint config does not match its own hash")
    if cfg is not None and cfg.hash() != state["config_hash"]:
        raise CheckpointMismatch(
            f"config hash {cfg.hash()} differs from checkpoint {state['config_hash']}; refusing to resume")
    output = Path(state["output"])
    if not output.exists() or output.stat().st_size < state["offset"]:
        raise CheckpointCorrupt(f"{output} is shorter than the checkpointed offset")
    recs = read_records(output, state["offset"])
    if not recs or recs[0].get("config_hash") != state["config_hash"]:
        raise CheckpointCorrupt("output header does not match the checkpoint")
    if state["complete"]:
        return recs[-1]
    with open(output, "r+b") as fh:
        fh.truncate(state["offset"])
    return _drive(stored, output, checkpoint, state, workers, max_units, progress)


def _drive(cfg, output, checkpoint, state, workers, max_units, progress) -> dict:
    units = expand_units(cfg)
    todo = units[state["units_done"]:]
    if max_units is not None:
        todo = todo[:max_units]
    cfg_dict = cfg.to_dict()
    if workers > 1 and len(todo) > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(run_unit, [cfg_dict] * len(todo), todo)
    else:
        pool = None
        results = (run_unit(cfg_dict, i) for i in todo)
    try:
        with open(output, "a") as fh:
            for i, (lines, dt) in zip(todo, results):
                fh.writelines(lines)
                fh.flush()
                os.fsync(fh.fileno())
                state["units_done"] += 1
                state["offset"] = fh.tell()
                state["elapsed"] += dt
                _write_checkpoint(checkpoint, state)
                if progress:
                    print(f"[{cfg.mode}] unit {state['units_done']}/{len(units)} a=z^{i} {dt:.2f}s",
                          file=progress, flush=True)
    finally:
        if pool:
            pool.shutdown()
    if state["units_done"] < len(units):
        return {"type": "partial", "units_done": state["units_done"], "units_total": len(units)}
    summary = summarize(read_records(output))
    summary["config_hash"] = cfg.hash()
    with open(output, "a") as fh:
        fh.write(encode_record(summary))
        state["offset"] = fh.tell()
    state["complete"] = True
    _write_checkpoint(checkpoint, state)
    return summary
