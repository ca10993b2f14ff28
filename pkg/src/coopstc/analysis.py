"""Outage Monte Carlo (via the closed-form block determinants), analytic
diversity-multiplexing tradeoff curves, diversity-slope fitting, and the
frame-error-rate experiment driver.

All estimators are deterministic functions of (config, seed, workers):
trials are split into per-worker shares driven by independent seeded
streams, and aggregation is an order-independent sum of counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .protocols import default_pool_size, run_protocol_trial

__all__ = [
    "OutageConfig",
    "OutagePoint",
    "OutageResult",
    "FerConfig",
    "FerPoint",
    "FerResult",
    "wilson_interval",
    "outage_mc",
    "dmt_incomplete_df",
    "dmt_components",
    "estimate_diversity_slope",
    "fer_experiment",
]


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (valid at low k)."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# outage


@dataclass(frozen=True)
class OutageConfig:
    """Incomplete-DF outage experiment; n_relays = 0 gives the pure SISO
    reference. With `multiplexing_r` set, the rate sweeps with the SNR as
    R = r log2(rho) (a finite-SNR stand-in for the tradeoff limit, slow and
    loose at desk scale); otherwise R is fixed and the measured slope
    corresponds to the r -> 0 diversity."""

    n_relays: int
    snr_db: tuple[float, ...]
    R: float
    trials: int
    pool_size: int | None = None
    seed: int = 0
    workers: int = 1
    multiplexing_r: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.snr_db) == 0:
            raise ValueError("empty SNR grid")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("snr_db grid must be strictly increasing")
        if self.multiplexing_r is not None and self.multiplexing_r < 0:
            raise ValueError("multiplexing gain must be >= 0")

    @property
    def pool(self) -> int:
        return self.pool_size if self.pool_size else default_pool_size(self.n_relays)

    def rate_at(self, snr_db: float) -> float:
        if self.multiplexing_r is None:
            return self.R
        return self.multiplexing_r * math.log2(10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class OutagePoint:
    snr_db: float
    R: float
    trials: int
    outages: int
    probability: float
    ci_lo: float
    ci_hi: float
    nu_trials: tuple[int, ...]     # histogram of N_u over trials
    nu_outages: tuple[int, ...]    # outage counts conditioned on N_u


@dataclass(frozen=True)
class OutageResult:
    config: OutageConfig
    points: tuple[OutagePoint, ...]


def _outage_counts(cfg: OutageConfig, snr_db: float, trials: int, rng, chunk=500_000):
    """Vectorized trial loop: sample the pool, keep the N best uplinks,
    apply the 2R uplink test, then the conditional outage event with the
    closed-form determinant 1 + (rho/2)(3|g0|^2+|g_i|^2) + (rho^2/2)|g0|^4."""
    n, pool, R = cfg.n_relays, cfg.pool, cfg.rate_at(snr_db)
    rho = 10.0 ** (snr_db / 10.0)
    nu_trials = np.zeros(n + 1, dtype=np.int64)
    nu_out = np.zeros(n + 1, dtype=np.int64)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        done += m
        g0 = rng.exponential(size=m)
        if n == 0:
            out = np.log2(1.0 + rho * g0) < R
            nu_trials[0] += m
            nu_out[0] += int(out.sum())
            continue
        h2 = rng.exponential(size=(m, pool))
        best = np.sort(h2, axis=1)[:, -n:]
        usable = np.log2(1.0 + rho * best) >= 2.0 * R
        nu = usable.sum(axis=1)
        g = rng.exponential(size=(m, n))
        det = 1.0 + (rho / 2) * (3 * g0[:, None] + g) + (rho * rho / 2) * g0[:, None] ** 2
        logdet = np.where(usable, np.log2(det), 0.0).sum(axis=1)
        coop_out = logdet < 2.0 * nu * R
        siso_out = np.log2(1.0 + rho * g0) < R
        out = np.where(nu >= 1, coop_out, siso_out)
        nu_trials += np.bincount(nu, minlength=n + 1)
        nu_out += np.bincount(nu, weights=out, minlength=n + 1).astype(np.int64)
    return nu_trials, nu_out


def _outage_worker(args):
    cfg, snr_db, trials, stream_key = args
    rng = np.random.default_rng(stream_key)
    return _outage_counts(cfg, snr_db, trials, rng)


def outage_mc(cfg: OutageConfig) -> OutageResult:
    """Estimate the outage probability on the SNR grid, with Wilson
    intervals and the per-N_u mode histogram."""
    points = []
    tasks = []
    for i, snr in enumerate(cfg.snr_db):
        share = [cfg.trials // cfg.workers] * cfg.workers
        for w in range(cfg.trials % cfg.workers):
            share[w] += 1
        for w in range(cfg.workers):
            if share[w]:
                tasks.append((i, (cfg, snr, share[w], [cfg.seed, i, w])))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_outage_worker, [t[1] for t in tasks]))
    else:
        results = [_outage_worker(t[1]) for t in tasks]
    for i, snr in enumerate(cfg.snr_db):
        nu_trials = np.zeros(cfg.n_relays + 1, dtype=np.int64)
        nu_out = np.zeros(cfg.n_relays + 1, dtype=np.int64)
        for (j, _), (nt, no) in zip(tasks, results):
            if j == i:
                nu_trials += nt
                nu_out += no
        k, n = int(nu_out.sum()), int(nu_trials.sum())
        lo, hi = wilson_interval(k, n)
        points.append(
            OutagePoint(
                snr_db=snr, R=cfg.rate_at(snr), trials=n, outages=k,
                probability=k / n,
                ci_lo=lo, ci_hi=hi,
                nu_trials=tuple(int(v) for v in nu_trials),
                nu_outages=tuple(int(v) for v in nu_out),
            )
        )
    return OutageResult(config=cfg, points=tuple(points))


# ---------------------------------------------------------------------------
# DMT


def dmt_incomplete_df(r, n_relays: int):
    """Closed-form tradeoff d*(r) = (1-r)^+ + N (1-2r)^+."""
    r = np.asarray(r, dtype=float)
    d = np.maximum(1.0 - r, 0.0) + n_relays * np.maximum(1.0 - 2.0 * r, 0.0)
    return float(d) if d.ndim == 0 else d


def dmt_components(r: float, n_relays: int, n_used: int) -> tuple[float, float]:
    """Exponent pair (d_out, d_O) of the N_u-relay branch: the conditional
    cooperative outage and the probability of that uplink pattern."""
    if not 0 <= n_used <= n_relays:
        raise ValueError(f"N_u out of range: {n_used}")
    plus = max(1.0 - 2.0 * r, 0.0)
    return (1.0 - r) + n_used * plus, (n_relays - n_used) * plus


def estimate_diversity_slope(snr_db, probabilities, window: tuple[float, float]) -> float:
    """Least-squares diversity estimate -dlog10(P)/dlog10(rho) over the
    SNR window (inclusive, in dB)."""
    snr = np.asarray(snr_db, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    lo, hi = window
    mask = (snr >= lo) & (snr <= hi)
    if mask.sum() < 2:
        raise ValueError("insufficient events: need >= 2 points in window")
    if np.any(p[mask] <= 0):
        raise ValueError("insufficient events: zero-count estimate in window")
    slope = np.polyfit(snr[mask] / 10.0, np.log10(p[mask]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# frame error rate


@dataclass(frozen=True)
class FerConfig:
    protocol: str
    n_relays: int
    R: float
    snr_db: tuple[float, ...]
    relay_decoder: str = "exhaustive"
    target_errors: int = 100
    max_frames: int = 200_000
    pool_size: int | None = None
    seed: int = 0
    workers: int = 1
    noise_scale: float = 1.0
    genie: bool = False
    siso_frame_uses: int | None = None

    def __post_init__(self):
        if len(self.snr_db) == 0:
            raise ValueError("empty SNR grid")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("snr_db grid must be strictly increasing")


@dataclass(frozen=True)
class FerPoint:
    snr_db: float
    frames: int
    errors: int
    fer: float
    ci_lo: float
    ci_hi: float
    reached_target: bool          # False flags an accuracy-limited point
    mode_counts: tuple[int, ...]  # histogram of used-relay counts (0..N)


@dataclass(frozen=True)
class FerResult:
    config: FerConfig
    points: tuple[FerPoint, ...]


_ROUND_FRAMES = 500               # frames per worker per stopping-rule round


def _fer_worker(args):
    cfg, snr_db, n_frames, stream_key = args
    rng = np.random.default_rng(stream_key)
    errors = 0
    mode_counts = np.zeros(cfg.n_relays + 1, dtype=np.int64)
    for _ in range(n_frames):
        out = run_protocol_trial(
            cfg.protocol,
            rng,
            n_relays=cfg.n_relays,
            R=cfg.R,
            snr_db=snr_db,
            pool_size=cfg.pool_size,
            relay_decoder=cfg.relay_decoder,
            noise_scale=cfg.noise_scale,
            genie=cfg.genie,
            siso_frame_uses=cfg.siso_frame_uses,
        )
        errors += out.frame_error
        mode_counts[min(out.n_used, cfg.n_relays)] += 1
    return n_frames, errors, mode_counts


def fer_experiment(cfg: FerConfig) -> FerResult:
    """Per SNR point, run frames in fixed-size worker rounds until the
    target error count (default 100) or the frame cap is reached."""
    points = []
    for i, snr in enumerate(cfg.snr_db):
        frames = errors = 0
        mode_counts = np.zeros(cfg.n_relays + 1, dtype=np.int64)
        rnd = 0
        while errors < cfg.target_errors and frames < cfg.max_frames:
            per_worker = min(_ROUND_FRAMES, max(1, (cfg.max_frames - frames) // cfg.workers + 1))
            tasks = [
                (cfg, snr, per_worker, [cfg.seed, i, w, rnd])
                for w in range(cfg.workers)
            ]
            if cfg.workers > 1:
                with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                    results = list(ex.map(_fer_worker, tasks))
            else:
                results = [_fer_worker(t) for t in tasks]
            for nf, ne, mc in results:
                frames += nf
                errors += ne
                mode_counts += mc
            rnd += 1
        lo, hi = wilson_interval(errors, frames)
        points.append(
            FerPoint(
                snr_db=snr, frames=frames, errors=errors,
                fer=errors / frames, ci_lo=lo, ci_hi=hi,
                reached_target=errors >= cfg.target_errors,
                mode_counts=tuple(int(v) for v in mode_counts),
            )
        )
    return FerResult(config=cfg, points=tuple(points))
