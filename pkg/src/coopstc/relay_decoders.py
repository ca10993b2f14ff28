"""Partial decoders used at the relays: coded elements x in O_K are
estimated directly, without resolving the information symbols.

Three families:
  * exhaustive search over the coded constellation (1D, and the paired 2D
    variant for codes whose conjugates must be decoded jointly),
  * diophantine approximation of a real-theta element via a modified
    Cassels continued-fraction search on each real dimension,
  * the two-step method that rotates (x, sigma^2(x)) into two independent
    degree-2 elements.

The `h` argument of every decoder is the full effective complex gain that
multiplies the *normalized* coded value on the air (channel coefficient
times the codeword energy scale and any shaping/twist unit); the decoders
then model the observation as y = sqrt(rho) * h * value + noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    CodedConstellation,
    CodedElement,
    QamConstellation,
    golden_code,
    make_qam,
    tast4_code,
)

__all__ = [
    "PamSearchProblem",
    "CasselsResult",
    "CasselsBudgetError",
    "cassels_search",
    "cassels_decode",
    "exhaustive_decode_1d",
    "diophantine_decode_element",
    "exhaustive_decode_pair",
    "two_step_decode",
]


class CasselsBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class PamSearchProblem:
    """Find (P, Q) in the Z-PAM minimizing |y - P - theta*Q|, stated in the
    continued-fraction form D(p, q) = |q*zeta - p - beta| over {1..Z}^2."""

    y: float
    theta: float
    Z: int
    beta: float
    zeta: float

    @classmethod
    def from_observation(cls, y: float, theta: float, Z: int) -> "PamSearchProblem":
        beta = -(y + (Z + 1) * (1 + theta)) / 2
        return cls(y=float(y), theta=float(theta), Z=int(Z), beta=beta, zeta=-theta)


@dataclass(frozen=True)
class CasselsResult:
    P: int                       # PAM values, odd in {-(Z-1)..Z-1}
    Q: int
    objective: float             # |y - P - theta*Q|
    iterations: int


def _record_pairs(slope: float, beta: float, jmax: int, budget: int):
    """Continued-fraction enumeration of the running minima of
    |j*slope - p - beta| over j = 1..jmax with p free.

    The state machine is the classical Ostrowski digit recursion: eta_n are
    the convergent residuals of `slope`, (P_n, Q_n) accumulate the digit
    expansion of the inhomogeneous part, zeta_n its remaining residual.
    """
    pairs: list[tuple[int, int]] = []
    eta2, eta1 = slope, -1.0
    zeta = -beta
    p2, p1 = 0, 1
    q2, q1 = 1, 0
    P, Q = 0, 0
    it = 0
    while eta1 != 0.0 and zeta != 0.0 and Q <= jmax:
        it += 1
        if it > budget:
            raise CasselsBudgetError("cassels budget exceeded")
        a = math.floor(-eta2 / eta1)
        p = p2 + a * p1
        q = q2 + a * q1
        eta = eta2 + a * eta1
        if Q <= q1:
            b = math.floor(-(zeta + eta2) / eta1)
            P = P + p2 + b * p1
            Q = Q + q2 + b * q1
            zeta = zeta + eta2 + b * eta1
        else:
            P = P - p1
            Q = Q - q1
            zeta = zeta - eta1
        pairs.append((P, Q))
        p2, p1 = p1, p
        q2, q1 = q1, q
        eta2, eta1 = eta1, eta
    return pairs, it


def cassels_search(
    problem: PamSearchProblem, max_iterations: int = 64
) -> CasselsResult:
    """Box-constrained best inhomogeneous approximation on the Z-PAM.

    The q-range {1..Z} splits into two clamped regimes (the free-optimal p
    falls outside {1..Z}; the distance is then linear in q, so only the
    regime boundary can win) and an in-band interval on which the
    continued-fraction record enumeration, restarted at the interval start,
    visits every candidate that can improve the minimum. Ties keep the last
    minimizer found.
    """
    y, theta, Z = problem.y, problem.theta, problem.Z
    slope, beta = problem.zeta, problem.beta
    if Z < 2:
        raise ValueError("Z-PAM needs Z >= 2")

    state = {"d": math.inf, "P": None, "Q": None}

    def consider(p: int, q: int) -> None:
        pam_p, pam_q = 2 * p - (Z + 1), 2 * q - (Z + 1)
        d = (y - pam_p - theta * pam_q) ** 2
        if d <= state["d"]:
            state["d"], state["P"], state["Q"] = d, pam_p, pam_q

    def t(q: int) -> float:
        return q * slope - beta

    # in-band q's have round(t(q)) inside {1..Z}; t is monotone in q
    if slope < 0:
        qa = math.ceil((beta + Z + 0.5) / slope + 1e-12)
        qb = math.floor((beta + 0.5) / slope - 1e-12)
    else:
        qa = math.ceil((beta + 0.5) / slope + 1e-12)
        qb = math.floor((beta + Z + 0.5) / slope - 1e-12)
    qa, qb = max(1, qa), min(Z, qb)

    iterations = 0
    if qa > 1:                    # clamped at p = Z above the band
        consider(Z, min(qa - 1, Z))
    if qb < Z:                    # clamped at p = 1 below the band
        consider(1, max(qb + 1, 1))
    if qa <= qb:
        consider(int(round(t(qa))), qa)
        if qb > qa:
            pairs, iterations = _record_pairs(
                slope, beta - qa * slope, qb - qa, max_iterations
            )
            for _, j in pairs:
                q = qa + j
                if qa < q <= qb:
                    consider(int(round(t(q))), q)
    return CasselsResult(
        P=state["P"], Q=state["Q"], objective=math.sqrt(state["d"]),
        iterations=iterations,
    )


def cassels_decode(y: float, theta: float, Z: int) -> tuple[int, int]:
    """Decode a noisy y ~ P + theta*Q to the best Z-PAM pair (P, Q)."""
    res = cassels_search(PamSearchProblem.from_observation(y, theta, Z))
    return res.P, res.Q


def exhaustive_decode_1d(
    y: complex, h: complex, rho: float, cprime: CodedConstellation
) -> CodedElement:
    """argmin over x in C' of |y - sqrt(rho) h x|^2, lowest index on ties."""
    if len(cprime) < 1:
        raise ValueError("empty coded constellation")
    d = np.abs(y - np.sqrt(rho) * h * cprime.values) ** 2
    return cprime.element(int(np.argmin(d)))


def _clamp_pam(v: int, Z: int) -> int:
    """Nearest odd PAM value in {-(Z-1)..Z-1}."""
    return max(-(Z - 1), min(Z - 1, v))


def diophantine_decode_element(
    y_r: complex, h: complex, rho: float, alpha: complex, theta: float, M: int
) -> CodedElement:
    """Decode a Golden coded element x = s1 + theta*s2 from one observation
    by normalizing to y_r / (sqrt(rho) h alpha) and running the Cassels
    search independently on the real and imaginary parts (theta is real, so
    the two parts separate exactly). Output coefficients are clamped into
    the QAM alphabet, so the result always lies in C'.
    """
    if h == 0:
        raise ValueError("unresolvable (zero channel)")
    qam = make_qam(M)
    Z = qam.pam_side
    y = y_r / (np.sqrt(rho) * h * alpha * qam.scale)
    p_re, q_re = cassels_decode(float(y.real), float(theta), Z)
    p_im, q_im = cassels_decode(float(y.imag), float(theta), Z)
    s1 = complex(_clamp_pam(p_re, Z), _clamp_pam(p_im, Z))
    s2 = complex(_clamp_pam(q_re, Z), _clamp_pam(q_im, Z))
    return CodedElement(coeffs=(s1, s2), code=golden_code())


def exhaustive_decode_pair(
    y_a: complex,
    y_b: complex,
    h: complex,
    rho: float,
    c1: CodedConstellation,
    c2: CodedConstellation,
) -> tuple[CodedElement, complex]:
    """Joint argmin of |y_a - sqrt(rho) h x|^2 + |y_b - sqrt(rho) h sigma(x)|^2
    over the index-aligned constellations (c1, c2)."""
    if len(c1) != len(c2) or not np.array_equal(c1.coeffs, c2.coeffs):
        raise ValueError("misaligned coded constellations")
    g = np.sqrt(rho) * h
    d = np.abs(y_a - g * c1.values) ** 2 + np.abs(y_b - g * c2.values) ** 2
    n = int(np.argmin(d))
    return c1.element(n), complex(c2.values[n])


def z_constellation(qam: QamConstellation, theta: complex):
    """The M^2-point degree-2 constellation {a + theta^2 b} searched by each
    of the two steps, with the generating coefficients."""
    t2 = theta * theta
    grid_a, grid_b = np.meshgrid(qam.raw_points, qam.raw_points, indexing="ij")
    za, zb = grid_a.reshape(-1), grid_b.reshape(-1)
    return za, zb, (za + t2 * zb) * qam.scale


def two_step_decode(
    y_a: complex,
    y_b: complex,
    h: complex,
    rho: float,
    qam: QamConstellation,
    theta: complex,
) -> tuple[CodedElement, complex]:
    """Decode (x, sigma^2(x)) of the 4x4 TAST code through the rotation

        [x; sigma^2(x)] = [[1, theta], [1, -theta]] [z1; z2],

    with z1 = s1 + theta^2 s3 and z2 = s2 + theta^2 s4 in the degree-2 ring
    of Q(theta^2). (1/sqrt2)M is unitary, so applying (1/2) M^dagger to the
    normalized observations keeps the noise white and per-coordinate
    exhaustive search over the M^2-point z-constellations is jointly ML.
    """
    if h == 0:
        raise ValueError("unresolvable (zero channel)")
    g = np.sqrt(rho) * h
    ya, yb = y_a / g, y_b / g
    z1 = (ya + yb) / 2
    z2 = (np.conj(theta) * ya - np.conj(theta) * yb) / 2
    za, zb, zvals = z_constellation(qam, theta)
    i1 = int(np.argmin(np.abs(z1 - zvals) ** 2))
    i2 = int(np.argmin(np.abs(z2 - zvals) ** 2))
    a1, b1 = za[i1], zb[i1]
    a2, b2 = za[i2], zb[i2]
    t2 = theta * theta
    elem = CodedElement(coeffs=(a1, a2, b1, b2), code=tast4_code())
    z1_hat = (a1 + t2 * b1) * qam.scale
    z2_hat = (a2 + t2 * b2) * qam.scale
    sigma2_value = complex(z1_hat - theta * z2_hat)
    return elem, sigma2_value
