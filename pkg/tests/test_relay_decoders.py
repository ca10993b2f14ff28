import itertools

import numpy as np
import pytest

from coopstc.algebra import (
    coded_constellation,
    galois_conjugate,
    golden_code,
    make_qam,
    tast4_code,
)
from coopstc.relay_decoders import (
    CasselsBudgetError,
    PamSearchProblem,
    cassels_decode,
    cassels_search,
    diophantine_decode_element,
    exhaustive_decode_1d,
    exhaustive_decode_pair,
    two_step_decode,
)

THETA = (1 + np.sqrt(5)) / 2
GOLDEN = golden_code()
TAST = tast4_code()


def pam(z):
    return np.arange(-(z - 1), z, 2)


def brute_force_pam_pair(y, theta, z):
    """Oracle: scan the full Z-PAM grid."""
    best, bd = None, np.inf
    for p in pam(z):
        for q in pam(z):
            d = (y - p - theta * q) ** 2
            if d < bd:
                bd, best = d, (p, q)
    return best, bd


# ---------------------------------------------------------------------------
# Cassels search


def test_pam_problem_header():
    pr = PamSearchProblem.from_observation(y=2.0, theta=THETA, Z=4)
    assert pr.beta == pytest.approx(-(2.0 + 5 * (1 + THETA)) / 2)
    assert pr.zeta == pytest.approx(-THETA)


def test_cassels_known_point():
    (bp, _) = brute_force_pam_pair(1 + 3 * THETA, THETA, 4)
    assert bp == (1, 3)
    assert cassels_decode(1 + 3 * THETA, THETA, 4) == (1, 3)


def test_cassels_corner_point():
    y = -3 * (1 + THETA)
    assert cassels_decode(y, THETA, 4) == (-3, -3)


@pytest.mark.parametrize("z", [2, 4, 8])
def test_cassels_noiseless_exhaustive(z):
    for p, q in itertools.product(pam(z), pam(z)):
        y = float(p + THETA * q)
        assert cassels_decode(y, THETA, z) == (p, q), (p, q)


def test_cassels_noisy_objective_agreement():
    rng = np.random.default_rng(0)
    z = 4
    lim = (z - 1) * (1 + THETA)
    hits = 0
    trials = 10_000
    for _ in range(trials):
        y = rng.uniform(-lim, lim)
        res = cassels_search(PamSearchProblem.from_observation(y, THETA, z))
        _, bd = brute_force_pam_pair(y, THETA, z)
        hits += abs(res.objective ** 2 - bd) < 1e-9
    assert hits / trials >= 0.99


def test_cassels_iterations_sublinear():
    # At Z=2 the search is dominated by the constant boundary work and the
    # continued-fraction loop rarely engages, so growth is measured from the
    # first non-degenerate size: doubling Z must less than double the count.
    rng = np.random.default_rng(1)
    means = []
    for z in (2, 4, 8, 16):
        lim = (z - 1) * (1 + THETA)
        its = [
            cassels_search(
                PamSearchProblem.from_observation(rng.uniform(-lim, lim), THETA, z)
            ).iterations
            for _ in range(2000)
        ]
        means.append(np.mean(its))
    assert all(b >= a for a, b in zip(means, means[1:]))
    for a, b in zip(means[1:], means[2:]):
        assert b / a < 2.0
    slope = np.polyfit(np.log([4, 8, 16]), np.log(means[1:]), 1)[0]
    assert slope < 1.0
    assert means[3] < 4 * means[1]


def test_cassels_budget_cap():
    pr = PamSearchProblem.from_observation(0.37, THETA, 16)
    with pytest.raises(CasselsBudgetError, match="cassels budget exceeded"):
        cassels_search(pr, max_iterations=0)


def test_cassels_rejects_degenerate_pam():
    with pytest.raises(ValueError):
        cassels_search(PamSearchProblem.from_observation(0.0, THETA, 1))


# ---------------------------------------------------------------------------
# exhaustive 1D


def test_exhaustive_1d_zero_noise_fixed_point():
    q = make_qam(4)
    cp = coded_constellation(q, GOLDEN, 0)
    h, rho = 0.8 - 0.3j, 7.0
    for n in range(len(cp)):
        y = np.sqrt(rho) * h * cp.values[n]
        elem = exhaustive_decode_1d(y, h, rho, cp)
        assert tuple(elem.coeffs) == tuple(cp.coeffs[n])


def test_exhaustive_1d_zero_channel_tie_break():
    q = make_qam(4)
    cp = coded_constellation(q, GOLDEN, 0)
    elem = exhaustive_decode_1d(1.0 + 1.0j, 0.0, 4.0, cp)
    assert tuple(elem.coeffs) == tuple(cp.coeffs[0])


def test_exhaustive_1d_double_oracle_reverse_scan():
    # independent oracle scanning C' in reverse order
    rng = np.random.default_rng(2)
    q = make_qam(4)
    cp = coded_constellation(q, GOLDEN, 0)
    h, rho = 0.5 + 1.1j, 5.0
    for _ in range(300):
        y = np.sqrt(rho) * h * cp.values[rng.integers(len(cp))] + (
            rng.normal() + 1j * rng.normal()
        ) / np.sqrt(2)
        d = np.abs(y - np.sqrt(rho) * h * cp.values) ** 2
        rev_idx = None
        best = np.inf
        for n in reversed(range(len(cp))):
            if d[n] < best:
                best, rev_idx = d[n], n
        fwd = exhaustive_decode_1d(y, h, rho, cp)
        ties = np.sum(np.abs(d - d.min()) < 1e-15)
        if ties == 1:
            assert tuple(fwd.coeffs) == tuple(cp.coeffs[rev_idx])


# ---------------------------------------------------------------------------
# diophantine element decoding


def test_diophantine_noiseless_all_16qam_pairs():
    q = make_qam(16)
    h, rho = 1.3 - 0.4j, 9.0
    alpha = GOLDEN.alpha
    for s1 in q.raw_points:
        for s2 in q.raw_points:
            x = (s1 + THETA * s2) * q.scale
            y = np.sqrt(rho) * h * alpha * x
            elem = diophantine_decode_element(y, h, rho, alpha, THETA, 16)
            assert elem.coeffs == (s1, s2)


def test_diophantine_output_closure():
    # even under absurd noise the decoded element stays inside C'
    rng = np.random.default_rng(3)
    q = make_qam(16)
    valid = set(q.raw_points.tolist())
    for _ in range(200):
        y = 40 * (rng.normal() + 1j * rng.normal())
        elem = diophantine_decode_element(y, 1.0, 4.0, GOLDEN.alpha, THETA, 16)
        assert elem.coeffs[0] in valid and elem.coeffs[1] in valid


def test_diophantine_zero_channel():
    with pytest.raises(ValueError, match="unresolvable"):
        diophantine_decode_element(1.0, 0.0, 4.0, GOLDEN.alpha, THETA, 16)


def test_diophantine_matches_exhaustive_at_moderate_noise():
    rng = np.random.default_rng(4)
    q = make_qam(16)
    cp = coded_constellation(q, GOLDEN, 0)
    h, rho = 0.9 + 0.2j, 200.0
    agree = 0
    trials = 500
    for _ in range(trials):
        n = rng.integers(len(cp))
        y = np.sqrt(rho) * h * GOLDEN.alpha * cp.values[n] + (
            rng.normal() + 1j * rng.normal()
        ) / np.sqrt(2)
        d = diophantine_decode_element(y, h, rho, GOLDEN.alpha, THETA, 16)
        e = exhaustive_decode_1d(y, h * GOLDEN.alpha, rho, cp)
        agree += tuple(d.coeffs) == tuple(e.coeffs)
    assert agree / trials >= 0.99


# ---------------------------------------------------------------------------
# paired exhaustive and two-step decoding


def test_pair_decode_noiseless():
    rng = np.random.default_rng(5)
    q = make_qam(4)
    c0 = coded_constellation(q, TAST, 0)
    c1 = coded_constellation(q, TAST, 1)
    h, rho = 0.7 + 0.7j, 6.0
    for _ in range(50):
        n = rng.integers(len(c0))
        ya = np.sqrt(rho) * h * c0.values[n]
        yb = np.sqrt(rho) * h * c1.values[n]
        elem, conj = exhaustive_decode_pair(ya, yb, h, rho, c0, c1)
        assert tuple(elem.coeffs) == tuple(c0.coeffs[n])
        assert conj == pytest.approx(complex(c1.values[n]))


def test_pair_decode_misaligned():
    q = make_qam(4)
    c0 = coded_constellation(q, TAST, 0)
    c16 = coded_constellation(make_qam(16), GOLDEN, 0)
    with pytest.raises(ValueError, match="misaligned"):
        exhaustive_decode_pair(0, 0, 1.0, 1.0, c0, c16)


def test_pair_decode_matches_loop_oracle():
    rng = np.random.default_rng(6)
    q = make_qam(4)
    c0 = coded_constellation(q, TAST, 0)
    c1 = coded_constellation(q, TAST, 1)
    h, rho = 1.1 - 0.5j, 3.0
    for _ in range(200):
        n = rng.integers(len(c0))
        w = (rng.normal(size=2) + 1j * rng.normal(size=2)) / np.sqrt(2)
        ya = np.sqrt(rho) * h * c0.values[n] + w[0]
        yb = np.sqrt(rho) * h * c1.values[n] + w[1]
        best, bd = None, np.inf
        for m in range(len(c0)):
            d = (
                abs(ya - np.sqrt(rho) * h * c0.values[m]) ** 2
                + abs(yb - np.sqrt(rho) * h * c1.values[m]) ** 2
            )
            if d < bd:
                bd, best = d, m
        elem, _ = exhaustive_decode_pair(ya, yb, h, rho, c0, c1)
        assert tuple(elem.coeffs) == tuple(c0.coeffs[best])


def test_two_step_rotation_is_unitary():
    theta = TAST.theta
    m = np.array([[1, theta], [1, -theta]])
    assert np.allclose(m.conj().T @ m, 2 * np.eye(2), atol=1e-12)


def test_two_step_noiseless():
    rng = np.random.default_rng(7)
    q = make_qam(4)
    c0 = coded_constellation(q, TAST, 0)
    c2 = coded_constellation(q, TAST, 2)
    h, rho = 0.9 - 0.1j, 8.0
    for _ in range(50):
        n = rng.integers(len(c0))
        ya = np.sqrt(rho) * h * c0.values[n]
        yb = np.sqrt(rho) * h * c2.values[n]
        elem, conj2 = two_step_decode(ya, yb, h, rho, q, TAST.theta)
        assert tuple(elem.coeffs) == tuple(c0.coeffs[n])
        assert conj2 == pytest.approx(complex(c2.values[n]))
        assert galois_conjugate(elem, 2) * q.scale == pytest.approx(conj2)


def test_two_step_equals_joint_pair_ml():
    # unitary rotation keeps the noise white, so the per-coordinate search
    # must reproduce the joint ML decision over the (x, sigma^2 x) pairing
    rng = np.random.default_rng(8)
    q = make_qam(4)
    c0 = coded_constellation(q, TAST, 0)
    c2 = coded_constellation(q, TAST, 2)
    h, rho = 0.8 + 0.4j, 2.0
    for _ in range(2000):
        n = rng.integers(len(c0))
        w = (rng.normal(size=2) + 1j * rng.normal(size=2)) / np.sqrt(2)
        ya = np.sqrt(rho) * h * c0.values[n] + w[0]
        yb = np.sqrt(rho) * h * c2.values[n] + w[1]
        fast, _ = two_step_decode(ya, yb, h, rho, q, TAST.theta)
        joint, _ = exhaustive_decode_pair(ya, yb, h, rho, c0, c2)
        assert tuple(fast.coeffs) == tuple(joint.coeffs)


def test_two_step_zero_channel():
    with pytest.raises(ValueError, match="unresolvable"):
        two_step_decode(1.0, 1.0, 0.0, 4.0, make_qam(4), TAST.theta)


def test_two_step_search_size():
    # each of the two steps scans the M^2-point z-constellation
    from coopstc.relay_decoders import z_constellation

    for order in (4, 16):
        q = make_qam(order)
        za, zb, zv = z_constellation(q, TAST.theta)
        assert len(zv) == order ** 2
        assert len(np.unique(np.round(zv, 9))) == order ** 2
