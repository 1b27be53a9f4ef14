"""Base-map families against closed-form oracles."""

import math

import numpy as np
import pytest

from ietlab.errors import ConstraintViolationError, TruncationExceededError
from ietlab.iet import (
    GOLDEN_ROTATION,
    CountableIET,
    FiberPoint,
    partition_entropy,
    validate,
)

THETA = GOLDEN_ROTATION


# ---------------------------------------------------------------------------
# block rotation
# ---------------------------------------------------------------------------


def test_block_rotation_partition_oracle(golden_iet):
    # block n = [1 - 2^-n, 1 - 2^-n-1); its left piece has relative length
    # 1 - theta, its right piece relative length theta
    for n in range(12):
        block = 2.0 ** -(n + 1)
        start = 1.0 - 2.0 ** -n
        assert golden_iet.left(2 * n) == pytest.approx(start, abs=1e-16)
        assert golden_iet.length(2 * n) == pytest.approx(
            (1.0 - THETA) * block, rel=1e-15)
        assert golden_iet.length(2 * n + 1) == pytest.approx(
            THETA * block, rel=1e-15)
        assert golden_iet.right(2 * n + 1) == pytest.approx(
            start + block, abs=1e-15)


def test_block_rotation_step_is_rotation_oracle(golden_iet):
    # independent oracle: inside block n the map is rotation by theta
    # in block-relative coordinates
    rng = np.random.default_rng(7)
    for _ in range(2000):
        x = rng.random()
        p = golden_iet.locate(x)
        q = golden_iet.step(p)
        n = p.index >> 1
        block = 2.0 ** -(n + 1)
        start = 1.0 - 2.0 ** -n
        rel = (x - start) / block
        expected = start + ((rel + THETA) % 1.0) * block
        assert golden_iet.absolute(q) == pytest.approx(expected, abs=1e-14)
        assert q.index >> 1 == n  # blocks are invariant


def test_locate_absolute_round_trip(golden_iet):
    rng = np.random.default_rng(11)
    for x in rng.random(2000):
        p = golden_iet.locate(float(x))
        assert 0 <= p.index < golden_iet.n_trunc
        assert 0.0 <= p.offset < golden_iet.length(p.index)
        assert golden_iet.absolute(p) == pytest.approx(float(x), abs=1e-15)


def test_step_back_inverts_step(golden_iet, swap_iet, vnk_iet):
    rng = np.random.default_rng(13)
    for iet in (golden_iet, swap_iet, vnk_iet):
        for _ in range(500):
            p = iet.locate(rng.random())
            q = iet.step(p)
            back = iet.step_back(q)
            assert back.index == p.index
            assert back.offset == pytest.approx(p.offset, abs=1e-15)
            fwd = iet.step(iet.step_back(p))
            assert fwd.index == p.index
            assert fwd.offset == pytest.approx(p.offset, abs=1e-15)


# ---------------------------------------------------------------------------
# block swap
# ---------------------------------------------------------------------------


def test_block_swap_is_involution_exact(swap_iet):
    # dyadic translations are exact in binary floats, so T(T(p)) == p exactly
    rng = np.random.default_rng(17)
    for _ in range(1000):
        p = swap_iet.locate(rng.random())
        q = swap_iet.step(swap_iet.step(p))
        assert q == p


def test_block_swap_moves_halves(swap_iet):
    # left half of block 0 is [0, 1/4) and maps onto [1/4, 1/2)
    p = swap_iet.locate(0.1)
    assert p.index == 0
    assert swap_iet.absolute(swap_iet.step(p)) == pytest.approx(0.35, abs=1e-16)


# ---------------------------------------------------------------------------
# odometer
# ---------------------------------------------------------------------------


def test_odometer_orbit_is_van_der_corput(vnk_iet):
    # the forward orbit of 0 enumerates the bit-reversal (van der Corput)
    # sequence: after 2^k steps every dyadic interval of size 2^-k was hit
    def van_der_corput(m: int) -> float:
        out, denom = 0.0, 0.5
        while m:
            if m & 1:
                out += denom
            m >>= 1
            denom *= 0.5
        return out

    p = vnk_iet.locate(0.0)
    seen = [vnk_iet.absolute(p)]
    for _ in range(63):
        p = vnk_iet.step(p)
        seen.append(vnk_iet.absolute(p))
    expected = [van_der_corput(m) for m in range(64)]
    assert seen == pytest.approx(expected, abs=1e-15)


def test_odometer_violates_isolation(vnk_iet):
    report = validate(vnk_iet)
    assert report.cond_partition and report.cond_covering
    assert not report.cond_isolation
    assert report.overall == "WARN"
    assert report.offenders  # accumulation near 0 is reported


# ---------------------------------------------------------------------------
# explicit tables
# ---------------------------------------------------------------------------


def _three_interval_table(n_trunc=16):
    # [0,.2) -> +0.3, [.2,.5) -> +0.3, [.5,.8) -> -0.5, identity tail on [.8,1)
    pairs = [(0.0, 0.3), (0.2, 0.3), (0.5, -0.5), (0.8, 0.0)]
    return CountableIET.explicit_table(pairs, n_trunc=n_trunc)


def test_explicit_table_steps(golden_iet):
    iet = _three_interval_table()
    assert iet.absolute(iet.step(iet.locate(0.1))) == pytest.approx(0.4)
    assert iet.absolute(iet.step(iet.locate(0.6))) == pytest.approx(0.1)
    # identity tail: fixed pointwise, subdivided dyadically
    p = iet.locate(0.85)
    assert iet.step(p) == p
    assert iet.locate(0.96).index > p.index
    assert validate(iet).overall == "PASS"


def test_explicit_table_rejects_bad_input():
    with pytest.raises(ConstraintViolationError):
        CountableIET.explicit_table([(0.1, 0.2), (0.8, 0.0)])  # not from 0
    with pytest.raises(ConstraintViolationError):
        CountableIET.explicit_table([(0.0, 0.2), (0.8, 0.1)])  # tail shifts
    with pytest.raises(ConstraintViolationError):
        # images overlap: both pieces land on [0.4, ...)
        CountableIET.explicit_table(
            [(0.0, 0.4), (0.2, 0.2), (0.5, 0.0)])
    with pytest.raises(ConstraintViolationError):
        # image leaves [0, tail start)
        CountableIET.explicit_table([(0.0, 0.7), (0.2, 0.0)])
    with pytest.raises(ConstraintViolationError):
        CountableIET.explicit_table([])


def test_truncation_errors(golden_iet):
    deep = 1.0 - 2.0 ** -40  # block 40 needs index 80 >= 64
    with pytest.raises(TruncationExceededError):
        golden_iet.locate(deep)
    with pytest.raises(TruncationExceededError):
        golden_iet.length(64)


def test_validate_passes_builtin_families(golden_iet, swap_iet):
    for iet in (golden_iet, swap_iet):
        report = validate(iet)
        assert report.overall == "PASS", report.as_dict()
        assert not report.offenders


# ---------------------------------------------------------------------------
# partition entropy
# ---------------------------------------------------------------------------


def bernoulli_entropy(p: float) -> float:
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def test_partition_entropy_closed_forms(golden_iet, swap_iet, vnk_iet):
    # blocks have length 2^-n-1 and entropy contribution splits into the
    # within-block Bernoulli part plus the dyadic part 2 log 2
    expect_rot = bernoulli_entropy(THETA) + 2.0 * math.log(2.0)
    expect_swap = 3.0 * math.log(2.0)
    expect_vnk = 2.0 * math.log(2.0)
    for iet, expect in ((golden_iet, expect_rot), (swap_iet, expect_swap),
                        (vnk_iet, expect_vnk)):
        ent = partition_entropy(iet)
        assert ent.status == "CONVERGENT"
        assert ent.value == pytest.approx(expect, rel=1e-12)


def test_partition_entropy_explicit_table():
    iet = _three_interval_table()
    # three finite cells plus the tail treated as one cell
    expect = (-0.2 * math.log(0.2) - 0.3 * math.log(0.3)
              - 0.3 * math.log(0.3) - 0.2 * math.log(0.2))
    ent = partition_entropy(iet)
    assert ent.value == pytest.approx(expect, rel=1e-12)
