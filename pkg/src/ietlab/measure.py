"""Sampling from the suspension measure, invariance checks, entropy estimators.

The suspension carries the product of Lebesgue measure on the base with
Lebesgue measure in the fiber; its total mass is twice the roof integral.
``sample_mu`` draws exact (not approximate) samples by envelope rejection:
the envelope is flat over the middle of each interval and matches the
logarithmic spike profile near the ends, so one proposal is accepted with
probability r/env <= 1.

Entropy estimators operate on integer symbol streams and know nothing about
where the stream came from; ``abramov`` converts a base-map entropy rate to
the flow entropy rate via the time change.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import (
    ConsistencyError,
    ConstraintViolationError,
    InsufficientDataError,
    raise_for_status,
)
from .geometry import SuspensionPoint
from .iet import CountableIET, FiberPoint
from .roof import RoofIntegral, RoofSpec, roof_integral

log = logging.getLogger(__name__)

SAMPLE_CHUNK = 65536
MIN_EFFICIENCY = 0.25


# ---------------------------------------------------------------------------
# total mass
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureReport:
    """Mass of the suspension region, computed twice.

    ``integral_r`` and ``integral_r_alt`` are the roof integral under the
    two quadrature schemes; the fiber above x has length r(x) + r(T^-1 x),
    and base-map invariance of Lebesgue measure makes each of the two
    contributions equal to the roof integral.  ``total_mass`` sums one copy
    of each scheme, so the identity total = 2 * integral_r doubles as a
    scheme-agreement check.
    """

    integral_r: float
    integral_r_alt: float
    total_mass: float
    tail_bound: float

    @property
    def normalization(self) -> float:
        return 1.0 / self.total_mass

    @property
    def identity_gap(self) -> float:
        """|total_mass - 2 * integral_r|, relative."""
        return abs(self.total_mass - 2.0 * self.integral_r) / self.total_mass

    def as_dict(self) -> dict:
        return {
            "integral_r": self.integral_r,
            "integral_r_alt": self.integral_r_alt,
            "total_mass": self.total_mass,
            "normalization": self.normalization,
            "tail_bound": self.tail_bound,
            "identity_gap": self.identity_gap,
        }


def total_mass(spec: RoofSpec, quad_tol: float = 1e-12) -> MeasureReport:
    """Mass of the suspension region: one roof integral per fiber side."""
    top = roof_integral(spec, quad_tol=quad_tol, scheme="simpson")
    bottom = roof_integral(spec, quad_tol=quad_tol, scheme="gauss")
    return MeasureReport(
        integral_r=top.value,
        integral_r_alt=bottom.value,
        total_mass=top.value + bottom.value,
        tail_bound=top.error_bound + bottom.error_bound,
    )


# ---------------------------------------------------------------------------
# exact sampling by envelope rejection
# ---------------------------------------------------------------------------


@dataclass
class PointBatch:
    """Samples from the normalized suspension measure, stored as arrays."""

    idx: np.ndarray
    off: np.ndarray
    hei: np.ndarray
    proposals: int = 0
    accepted: int = 0
    band_rejects: int = 0
    step_discards: int = 0

    def __len__(self) -> int:
        return int(self.idx.shape[0])

    @property
    def efficiency(self) -> float:
        if self.proposals == 0:
            return 1.0
        return self.accepted / self.proposals

    def point(self, k: int) -> SuspensionPoint:
        return SuspensionPoint(
            FiberPoint(int(self.idx[k]), float(self.off[k])), float(self.hei[k]))

    def __iter__(self) -> Iterator[SuspensionPoint]:
        return (self.point(k) for k in range(len(self)))


def interval_lefts(iet: CountableIET) -> np.ndarray:
    """Left endpoints of every representable interval, indexed by interval."""
    return np.asarray([iet.left(i) for i in range(iet.n_trunc)], dtype=np.float64)


def _spike_fraction(rng: np.random.Generator, k: int) -> np.ndarray:
    """Draw V on (0, 1] with density (1 - log v) / 2.

    Mixture: with probability 1/2 take U, otherwise U1 * U2 (whose density
    is -log v).  Zero draws are nudged away from the singular endpoint.
    """
    u1 = rng.random(k)
    u2 = rng.random(k)
    coin = rng.random(k) < 0.5
    v = np.where(coin, u1, u1 * u2)
    return np.maximum(v, 1e-300)


def sample_mu(spec: RoofSpec, count: int, seed: int | tuple,
              chunk: int = SAMPLE_CHUNK, max_rounds: int = 512) -> PointBatch:
    """Draw ``count`` exact samples from the normalized suspension measure.

    Deterministic given ``seed`` (an integer or a tuple of integers): chunk
    c extends the seed words with c and uses a fixed draw layout, so results
    do not depend on thread scheduling.  Mass beyond the index truncation is
    not representable and is skipped; its relative weight is below the
    truncation tail bound.
    """
    if count <= 0:
        raise ConstraintViolationError("sample count must be positive")
    if isinstance(seed, (tuple, list)):
        seed_words = tuple(int(s) for s in seed)
    else:
        seed_words = (int(seed),)
    lengths, bs, flat, band = spec.pack()
    cum = np.cumsum(lengths + (0.0 if flat else 2.0 * bs))
    total_env = float(cum[-1])

    out_idx = np.empty(count, dtype=np.int64)
    out_off = np.empty(count, dtype=np.float64)
    out_hei = np.empty(count, dtype=np.float64)
    stats = PointBatch(out_idx, out_off, out_hei)

    filled = 0
    n_chunks = (count + chunk - 1) // chunk
    for ci in range(n_chunks):
        want = min(chunk, count - filled)
        rng = np.random.default_rng(np.random.SeedSequence(seed_words + (ci,)))
        got = 0
        rounds = 0
        while got < want:
            rounds += 1
            if rounds > max_rounds:
                raise ConsistencyError("rejection sampler stalled; check roof")
            k = want - got
            stats.proposals += k
            sel = np.searchsorted(cum, rng.random(k) * total_env, side="right")
            sel = np.minimum(sel, lengths.shape[0] - 1).astype(np.int64)
            l = lengths[sel]
            b = bs[sel]
            q = rng.random(k) * (l + (0.0 if flat else 2.0 * b))
            v = _spike_fraction(rng, k)
            if flat:
                u = q
                env = np.ones(k)
            else:
                left_spike = q < 2.0 * b
                right_spike = (~left_spike) & (q < 4.0 * b)
                middle = ~(left_spike | right_spike)
                u = np.where(left_spike, b * v,
                             np.where(right_spike, l - b * v, b + (q - 4.0 * b)))
                # evaluate the envelope at the stored offset with the same
                # expressions the roof kernel uses, so rounding of u cannot
                # push the acceptance ratio past 1
                t_eff = np.where(left_spike, u / b,
                                 np.where(right_spike, (l - u) / b, 1.0))
                env = 1.0 - np.log(np.maximum(t_eff, 5e-324))
            ok = (u > band * l) & (u < l * (1.0 - band))
            stats.band_rejects += int(k - np.count_nonzero(ok))

            r = np.empty(k)
            dr = np.empty(k)
            kernels.roof_eval_batch(sel, u, lengths, bs, flat, r, dr)
            ratio = np.where(ok, r / env, 0.0)
            if np.any(ratio > 1.0 + 1e-12):
                worst = float(np.max(ratio))
                raise ConsistencyError(
                    f"envelope violated: acceptance ratio {worst} > 1")
            accept = rng.random(k) < ratio

            # fiber side: upper keeps the base point, lower pushes it forward
            upper = rng.random(k) < 0.5
            frac = rng.random(k)
            y = np.where(upper, frac * r, -(1.0 - frac) * r)

            idx_a = sel[accept]
            off_a = u[accept]
            y_a = y[accept]
            up_a = upper[accept]
            lower = ~up_a
            if np.any(lower):
                li = idx_a[lower].copy()
                lo = off_a[lower].copy()
                st = np.empty(li.shape[0], dtype=np.int64)
                bad = kernels.base_step_batch(
                    *spec.iet.pack(), spec.iet.n_trunc, li, lo, st)
                if bad:
                    keep_st = st == kernels.OK
                    stats.step_discards += int(np.count_nonzero(~keep_st))
                    sel_keep = up_a.copy()
                    sel_keep[np.flatnonzero(lower)[keep_st]] = True
                    idx_a[lower] = li
                    off_a[lower] = lo
                    idx_a = idx_a[sel_keep]
                    off_a = off_a[sel_keep]
                    y_a = y_a[sel_keep]
                else:
                    idx_a[lower] = li
                    off_a[lower] = lo

            take = min(idx_a.shape[0], want - got)
            out_idx[filled + got:filled + got + take] = idx_a[:take]
            out_off[filled + got:filled + got + take] = off_a[:take]
            out_hei[filled + got:filled + got + take] = y_a[:take]
            got += take
            stats.accepted += take
        filled += want

    if stats.efficiency < MIN_EFFICIENCY:
        log.warning("sampler efficiency %.3f below %.2f",
                    stats.efficiency, MIN_EFFICIENCY)
    else:
        log.debug("sampler efficiency %.3f", stats.efficiency)
    return stats


# ---------------------------------------------------------------------------
# invariance of the flow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Axis-aligned box in (absolute base coordinate, fiber height)."""

    name: str
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return ((xs >= self.x_lo) & (xs < self.x_hi)
                & (ys >= self.y_lo) & (ys < self.y_hi))

    def as_dict(self) -> dict:
        return {"name": self.name, "x_lo": self.x_lo, "x_hi": self.x_hi,
                "y_lo": self.y_lo, "y_hi": self.y_hi}


def standard_boxes() -> tuple[Region, ...]:
    """Eight boxes inside the suspension region for every roof (r >= 1)."""
    out = []
    for j in range(4):
        x_lo, x_hi = 0.25 * j, 0.25 * (j + 1)
        out.append(Region(f"x{j}y-", x_lo, x_hi, -0.75, 0.0))
        out.append(Region(f"x{j}y+", x_lo, x_hi, 0.0, 0.75))
    return tuple(out)


@dataclass(frozen=True)
class InvarianceRow:
    region: Region
    freq_pre: float
    freq_post: float

    @property
    def deviation(self) -> float:
        return abs(self.freq_post - self.freq_pre)

    def as_dict(self) -> dict:
        return {**self.region.as_dict(), "freq_pre": self.freq_pre,
                "freq_post": self.freq_post, "deviation": self.deviation}


@dataclass(frozen=True)
class InvarianceReport:
    count: int
    used: int
    discards: int
    threshold: float
    rows: tuple[InvarianceRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.deviation <= self.threshold for row in self.rows)

    def as_dict(self) -> dict:
        return {"count": self.count, "used": self.used,
                "discards": self.discards, "threshold": self.threshold,
                "passed": self.passed,
                "rows": [row.as_dict() for row in self.rows]}


StepFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], int]


def invariance_check(spec: RoofSpec, count: int = 100000, seed: int = 0,
                     boxes: Sequence[Region] | None = None,
                     step_fn: StepFn | None = None) -> InvarianceReport:
    """Compare box frequencies before and after one unit of flow time.

    Pairs whose forward step fails (exclusion band, truncation) are dropped
    from both sides.  ``step_fn`` replaces the time-one map for fault
    injection in tests; it must mutate the arrays in place and fill status.
    """
    if boxes is None:
        boxes = standard_boxes()
    batch = sample_mu(spec, count, seed)
    lefts = interval_lefts(spec.iet)
    xs_pre = lefts[batch.idx] + batch.off
    ys_pre = batch.hei.copy()

    idx = batch.idx.copy()
    off = batch.off.copy()
    hei = batch.hei.copy()
    status = np.empty(count, dtype=np.int64)
    if step_fn is None:
        kernels.flow_time_one_batch(
            *spec.iet.pack(), *spec.pack(), spec.iet.n_trunc,
            idx, off, hei, status)
    else:
        step_fn(idx, off, hei, status)
    keep = status == kernels.OK
    used = int(np.count_nonzero(keep))
    if used == 0:
        raise ConsistencyError("no surviving samples in invariance check")
    xs_post = lefts[idx[keep]] + off[keep]
    ys_post = hei[keep]
    xs_pre = xs_pre[keep]
    ys_pre = ys_pre[keep]

    rows = []
    for box in boxes:
        pre = float(np.count_nonzero(box.contains(xs_pre, ys_pre))) / used
        post = float(np.count_nonzero(box.contains(xs_post, ys_post))) / used
        rows.append(InvarianceRow(box, pre, post))
    return InvarianceReport(
        count=count, used=used, discards=count - used,
        threshold=4.0 / math.sqrt(used), rows=tuple(rows))


# ---------------------------------------------------------------------------
# symbol streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolStream:
    """Integer symbols in [0, alphabet_size) with a provenance note."""

    alphabet_size: int
    symbols: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.int64)
        object.__setattr__(self, "symbols", sym)
        if self.alphabet_size < 2:
            raise ConstraintViolationError("alphabet needs at least 2 symbols")
        if sym.size and (sym.min() < 0 or sym.max() >= self.alphabet_size):
            raise ConstraintViolationError("symbol out of alphabet range")

    def __len__(self) -> int:
        return int(self.symbols.size)


def bernoulli_stream(p: float, length: int, seed: int) -> SymbolStream:
    """Independent 0/1 symbols with P(1) = p."""
    if not 0.0 < p < 1.0:
        raise ConstraintViolationError("bernoulli parameter must be in (0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    sym = (rng.random(length) < p).astype(np.int64)
    return SymbolStream(2, sym, provenance=f"bernoulli(p={p})")


def coded_orbit_stream(iet: CountableIET, length: int, seed: int = 0,
                       start: FiberPoint | None = None,
                       alphabet_size: int = 16,
                       max_attempts: int = 100) -> SymbolStream:
    """Symbolic coding of a base orbit: symbol = min(interval index, A - 1).

    A random start is redrawn if the orbit leaves the representable index
    range before ``length`` steps.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    out = np.empty(length, dtype=np.int64)
    for _ in range(max_attempts):
        p = start if start is not None else iet.locate(rng.random())
        status = kernels.code_orbit(*iet.pack(), iet.n_trunc,
                                    p.index, p.offset, alphabet_size, out)
        if status == kernels.OK:
            return SymbolStream(alphabet_size, out,
                                provenance=f"orbit({iet.name})")
        if start is not None:
            raise_for_status(int(status), "coded orbit from fixed start")
    raise ConsistencyError("could not find a full-length orbit to code")


def write_symbols(path, stream: SymbolStream) -> None:
    """One decimal symbol per line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(map(str, stream.symbols.tolist())))
        fh.write("\n")


def read_symbols(path, alphabet_size: int | None = None) -> SymbolStream:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read().split()
    sym = np.asarray([int(tok) for tok in text], dtype=np.int64)
    if alphabet_size is None:
        alphabet_size = int(sym.max()) + 1 if sym.size else 2
        alphabet_size = max(alphabet_size, 2)
    return SymbolStream(alphabet_size, sym, provenance=f"file:{path}")


# ---------------------------------------------------------------------------
# entropy estimators
# ---------------------------------------------------------------------------


def block_entropy(stream: SymbolStream, block_len: int) -> float:
    """Empirical entropy (nats) of overlapping blocks of the given length."""
    if block_len == 0:
        return 0.0
    sym = stream.symbols
    a = stream.alphabet_size
    n = sym.size
    m = n - block_len + 1
    if m <= 0:
        raise InsufficientDataError("stream shorter than the block length")
    if block_len * math.log2(a) >= 62:
        raise ConstraintViolationError("block keys exceed int64 range")
    keys = np.zeros(m, dtype=np.int64)
    for j in range(block_len):
        keys = keys * a + sym[j:j + m]
    counts = np.unique(keys, return_counts=True)[1]
    p = counts / m
    return float(-np.sum(p * np.log(p)))


def plugin_block_entropy(stream: SymbolStream, block_len: int = 12) -> float:
    """Conditional block estimator: H(block_len) - H(block_len - 1), nats.

    Requires length >= alphabet_size * 2**block_len so the longest blocks
    are not hopelessly undersampled.
    """
    if block_len < 1:
        raise ConstraintViolationError("block length must be >= 1")
    need = stream.alphabet_size * (1 << block_len)
    if len(stream) < need:
        raise InsufficientDataError(
            f"plug-in block estimator needs >= {need} symbols, "
            f"got {len(stream)}")
    return block_entropy(stream, block_len) - block_entropy(stream, block_len - 1)


def lz78_rate(stream: SymbolStream) -> float:
    """Incremental-parsing entropy estimate c ln(c) / n in nats.

    Downward biased at practical lengths; reported alongside the plug-in
    estimator, never compared against tight thresholds on its own.
    """
    sym = stream.symbols
    n = int(sym.size)
    if n < 2:
        raise InsufficientDataError("LZ parsing needs at least 2 symbols")
    table: dict[tuple[int, int], int] = {}
    node = 0
    next_id = 1
    phrases = 0
    for s in sym.tolist():
        key = (node, s)
        nxt = table.get(key)
        if nxt is None:
            table[key] = next_id
            next_id += 1
            phrases += 1
            node = 0
        else:
            node = nxt
    if node != 0:
        phrases += 1
    return phrases * math.log(phrases) / n


@dataclass(frozen=True)
class EntropyEstimate:
    method: str
    value: float
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"method": self.method, "value": self.value, **self.detail}


def entropy_estimate(stream: SymbolStream, method: str = "plugin",
                     block_len: int = 12) -> EntropyEstimate:
    """Entropy rate estimate for a symbol stream, in nats per symbol."""
    if method == "plugin":
        value = plugin_block_entropy(stream, block_len)
        return EntropyEstimate("plugin", value,
                               {"block_len": block_len, "length": len(stream)})
    if method == "lz78":
        return EntropyEstimate("lz78", lz78_rate(stream),
                               {"length": len(stream)})
    raise ConstraintViolationError(f"unknown entropy method {method!r}")


# ---------------------------------------------------------------------------
# time change
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbramovResult:
    """Entropy of the unit-speed flow for a given base entropy rate.

    The normalized suspension measure rescales time by the mean fiber
    length 2 * integral_r, so h_flow = h_base / (2 * integral_r).
    """

    h_base: float
    h_flow: float
    scale: float

    def as_dict(self) -> dict:
        def render(x: float):
            return "inf" if math.isinf(x) else x
        return {"h_base": render(self.h_base), "h_flow": render(self.h_flow),
                "scale": self.scale}


def abramov(h_base: float, integral_r: float) -> AbramovResult:
    """Convert a base entropy rate to the flow rate; infinity passes through."""
    if not integral_r > 0.0 or math.isinf(integral_r):
        raise ConstraintViolationError("roof integral must be finite positive")
    if math.isnan(h_base) or h_base < 0.0:
        raise ConstraintViolationError("base entropy must be >= 0")
    scale = 2.0 * integral_r
    return AbramovResult(h_base=h_base, h_flow=h_base / scale, scale=scale)
