"""Frame schedules and end-to-end transmit/receive chains for the SISO,
NAF, Asymmetric DF and Incomplete DF protocols.

Power conventions: senders scale unit-energy signals by sqrt(rho); when two
terminals share a channel use each takes half the power (the 1/sqrt(2)
factors of the equivalent channel). Relay labels are 1-based throughout,
matching the usable-relay bookkeeping of the selection rule.

The destination always decodes the exact ML hypothesis under the assumption
that relays re-encoded correctly; a mis-decoding relay still forwards its
(wrong) line, so residual relay errors show up as frame errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    QamConstellation,
    coded_constellation,
    coeff_tensor,
    golden_code,
    make_qam,
    tast4_code,
)
from .channel import ChannelRealization, sample_channel
from .destination import build_lattice, sphere_search
from .relay_decoders import (
    diophantine_decode_element,
    exhaustive_decode_1d,
    exhaustive_decode_pair,
    two_step_decode,
)

__all__ = [
    "UseSlot",
    "FrameSchedule",
    "ModeDecision",
    "TrialOutcome",
    "incomplete_df_schedule",
    "asymmetric_df_schedule",
    "naf_schedule",
    "siso_schedule",
    "select_mode",
    "pick_best_relays",
    "constellation_order",
    "run_siso_frame",
    "run_naf_frame",
    "run_asymmetric_df_frame",
    "run_incomplete_df_frame",
    "run_protocol_trial",
]

PROTOCOLS = ("siso", "naf", "asymmetric_df", "incomplete_df")
RELAY_DECODERS = ("exhaustive", "diophantine", "two_step")


@dataclass(frozen=True)
class UseSlot:
    """Who transmits what during one channel use (indices 0-based; relay
    labels 1-based). `naf_echo_use` marks amplify-and-forward of an earlier
    use instead of a recoded line."""

    source_row: int | None = None
    source_col: int | None = None
    source_symbol: int | None = None
    relay: int | None = None
    relay_row: int | None = None
    relay_col: int | None = None
    naf_echo_use: int | None = None

    @property
    def n_transmitters(self) -> int:
        return 1 + (self.relay is not None)


@dataclass(frozen=True)
class FrameSchedule:
    name: str
    n_relays: int
    total_uses: int
    phase1_uses: int
    slots: tuple[UseSlot, ...]


def incomplete_df_schedule(n_relays: int, reordered: bool = False) -> FrameSchedule:
    """4N^2-use frame: source sends N codeword lines, then the remaining N
    lines while each relay sends its decoded line. `reordered` interleaves
    the phase-1 rows (rows 1 and 3 first for N=2) for two-step decoding."""
    n, size = n_relays, 2 * n_relays
    if reordered and n_relays != 2:
        raise ValueError("reordered schedule is defined for the N=2 code")
    p1_rows = [2 * k for k in range(n)] if reordered else list(range(n))
    p2_rows = [r for r in range(size) if r not in p1_rows]
    slots = [
        UseSlot(source_row=r, source_col=c) for r in p1_rows for c in range(size)
    ]
    for k, r2 in enumerate(p2_rows):
        for c in range(size):
            slots.append(
                UseSlot(
                    source_row=r2, source_col=c,
                    relay=k + 1, relay_row=p1_rows[k], relay_col=c,
                )
            )
    return FrameSchedule(
        name="incomplete_df", n_relays=n, total_uses=4 * n * n,
        phase1_uses=2 * n * n, slots=tuple(slots),
    )


def asymmetric_df_schedule(n_relays: int = 1) -> FrameSchedule:
    """6N^2-use frame: all 4N^2 symbols sent uncoded, then the second half
    of the codeword from the source while relays send the recoded first
    half."""
    n, size = n_relays, 2 * n_relays
    slots = [UseSlot(source_symbol=k) for k in range(4 * n * n)]
    for k in range(n):
        for c in range(size):
            slots.append(
                UseSlot(
                    source_row=n + k, source_col=c,
                    relay=k + 1, relay_row=k, relay_col=c,
                )
            )
    return FrameSchedule(
        name="asymmetric_df", n_relays=n, total_uses=6 * n * n,
        phase1_uses=4 * n * n, slots=tuple(slots),
    )


def naf_schedule() -> FrameSchedule:
    """4-use non-orthogonal AF frame: relay echoes uses 1-2 during 3-4."""
    slots = (
        UseSlot(source_row=0, source_col=0),
        UseSlot(source_row=0, source_col=1),
        UseSlot(source_row=1, source_col=0, relay=1, naf_echo_use=0),
        UseSlot(source_row=1, source_col=1, relay=1, naf_echo_use=1),
    )
    return FrameSchedule(
        name="naf", n_relays=1, total_uses=4, phase1_uses=2, slots=slots
    )


def siso_schedule(n_uses: int) -> FrameSchedule:
    slots = tuple(UseSlot(source_symbol=k) for k in range(n_uses))
    return FrameSchedule(
        name="siso", n_relays=0, total_uses=n_uses, phase1_uses=n_uses, slots=slots
    )


@dataclass(frozen=True)
class ModeDecision:
    """Outcome of the per-frame selection: which relays can decode."""

    usable_relays: tuple[int, ...]
    mode: str                     # "df" or "siso"
    threshold_R: float            # spectral efficiency of the uplink test


def select_mode(ch: ChannelRealization, R: float, protocol: str) -> ModeDecision:
    """Keep relays whose source-relay link is not in outage. The uplink
    carries the frame information in a shorter phase, so its spectral
    efficiency is 2R (Incomplete DF) or 3R/2 (Asymmetric DF)."""
    if R <= 0:
        raise ValueError("R must be positive")
    if protocol == "incomplete_df":
        thr = 2.0 * R
    elif protocol == "asymmetric_df":
        thr = 1.5 * R
    else:
        raise ValueError(f"no selection rule for protocol {protocol!r}")
    usable = tuple(
        n + 1
        for n, hn in enumerate(ch.h)
        if math.log2(1.0 + ch.rho * abs(hn) ** 2) >= thr
    )
    return ModeDecision(
        usable_relays=usable, mode="df" if usable else "siso", threshold_R=thr
    )


def pick_best_relays(h_coeffs, k: int) -> tuple[int, ...]:
    """1-based labels of the k largest |h|^2, lowest label on ties."""
    mags = np.abs(np.asarray(h_coeffs)) ** 2
    if k > len(mags):
        raise ValueError(f"cannot pick {k} of {len(mags)} relays")
    order = np.argsort(-mags, kind="stable")[:k]
    return tuple(sorted(int(i) + 1 for i in order))


def constellation_order(protocol: str, R: float) -> int:
    """QAM order matching spectral efficiency R bits pcu for a protocol.

    Full-rate protocols map R bits onto one symbol per use; the Asymmetric
    DF sends 2/3 symbol per use, so each symbol carries 3R/2 bits.
    """
    bits = 1.5 * R if protocol == "asymmetric_df" else R
    order = 2.0 ** bits
    m = int(round(order))
    if abs(order - m) > 1e-9 or m not in (4, 16, 64):
        raise ValueError(
            f"{protocol} at R={R} bits pcu needs a 2^{bits:g}-point "
            "constellation; only 4/16/64-QAM are supported"
        )
    return m


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one simulated frame (or frame group for fallback modes)."""

    mode: str                     # "df", "naf" or "siso"
    n_used: int
    relay_correct: tuple[bool, ...]
    frame_error: bool
    sent: np.ndarray | None
    decoded: np.ndarray | None
    channel: ChannelRealization | None
    metric: float | None = None   # ML residual of the decoded hypothesis


def draw_symbols(qam: QamConstellation, count: int, rng: np.random.Generator):
    """Uniform raw (integer-coordinate) QAM symbols."""
    return qam.raw_points[rng.integers(0, qam.order, size=count)]


def _noise(rng: np.random.Generator, scale: float) -> complex:
    # drawn even when scale == 0 so noiseless runs keep the same rng stream
    w = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
    return scale * w


def run_siso_frame(
    s, ch: ChannelRealization, rng, *, qam: QamConstellation, noise_scale: float = 1.0
) -> TrialOutcome:
    """Uncoded transmission over the direct link, per-symbol ML detection."""
    s = np.asarray(s, dtype=complex)
    g = np.sqrt(ch.rho) * ch.g0 * qam.scale
    w = (rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s))) / np.sqrt(2)
    y = g * s + noise_scale * w
    d = np.abs(y[:, None] - g * qam.raw_points[None, :]) ** 2
    idx = np.argmin(d, axis=1)
    decoded = qam.raw_points[idx]
    return TrialOutcome(
        mode="siso", n_used=0, relay_correct=(),
        frame_error=bool(np.any(decoded != s)), sent=s, decoded=decoded,
        channel=ch, metric=float(d[np.arange(len(s)), idx].sum()),
    )


def _decode_frame(y_obs, g_rows, qam, sent):
    sys = build_lattice(np.asarray(y_obs), np.asarray(g_rows), qam.pam_levels)
    res = sphere_search(sys)
    decoded = res.coords[0::2] + 1j * res.coords[1::2]
    return decoded, bool(np.any(decoded != sent)), res.metric


def run_incomplete_df_frame(
    s,
    ch: ChannelRealization,
    decision: ModeDecision,
    relay_decoder: str,
    rng,
    *,
    qam: QamConstellation,
    noise_scale: float = 1.0,
    genie: bool = False,
) -> TrialOutcome:
    """One Incomplete DF frame over the (already reduced) channel whose
    relays are exactly the usable ones. Phase 1: relays partially decode the
    coded elements of their lines; phase 2: they forward the recoded lines
    while the source completes the codeword."""
    if decision.mode != "df":
        raise ValueError("incomplete DF frame requires a DF mode decision")
    n = ch.n_relays
    if n not in (1, 2):
        raise ValueError("incomplete DF is implemented for 1 or 2 relays")
    spec = golden_code() if n == 1 else tast4_code()
    s = np.asarray(s, dtype=complex)
    if s.shape != (spec.size * spec.degree,):
        raise ValueError(
            f"expected {spec.size * spec.degree} symbols, got {s.shape}"
        )
    if relay_decoder not in RELAY_DECODERS:
        raise ValueError(f"unknown relay decoder {relay_decoder!r}")
    if relay_decoder == "diophantine" and n != 1:
        raise ValueError("diophantine decoder requires the Golden (N=1) configuration")
    if relay_decoder == "two_step" and n != 2:
        raise ValueError("two-step decoder requires the TAST (N=2) configuration")

    sched = incomplete_df_schedule(n, reordered=(relay_decoder == "two_step"))
    tensor = coeff_tensor(spec)
    scale = spec.entry_scale * qam.scale
    xmat = np.einsum("ijk,k->ij", tensor, s)     # raw codeword
    sq = np.sqrt(ch.rho)

    # phase 1: destination and every relay listen
    p1 = sched.slots[: sched.phase1_uses]
    y_obs, g_rows = [], []
    relay_obs = np.zeros((n, sched.phase1_uses), dtype=complex)
    for u, slot in enumerate(p1):
        tx = scale * xmat[slot.source_row, slot.source_col]
        y_obs.append(sq * ch.g0 * tx + _noise(rng, noise_scale))
        g_rows.append(sq * ch.g0 * scale * tensor[slot.source_row, slot.source_col])
        for j in range(n):
            relay_obs[j, u] = sq * ch.h[j] * tx + _noise(rng, noise_scale)

    slot_of = {(sl.source_row, sl.source_col): u for u, sl in enumerate(p1)}
    s_hat = _relay_estimates(
        relay_obs, slot_of, ch, spec, qam, relay_decoder, s, genie
    )
    relay_correct = tuple(bool(np.array_equal(s_hat[j], s)) for j in range(n))
    x_relay = [np.einsum("ijk,k->ij", tensor, s_hat[j]) for j in range(n)]

    # phase 2: source and one relay split the power
    half = 1 / np.sqrt(2)
    for slot in sched.slots[sched.phase1_uses:]:
        j = slot.relay - 1
        tx_r = scale * x_relay[j][slot.relay_row, slot.relay_col]
        tx_s = scale * xmat[slot.source_row, slot.source_col]
        y = sq * (ch.g[j] * half * tx_r + ch.g0 * half * tx_s) + _noise(rng, noise_scale)
        y_obs.append(y)
        g_rows.append(
            sq * scale * (
                ch.g[j] * half * tensor[slot.relay_row, slot.relay_col]
                + ch.g0 * half * tensor[slot.source_row, slot.source_col]
            )
        )

    decoded, err, metric = _decode_frame(y_obs, g_rows, qam, s)
    return TrialOutcome(
        mode="df", n_used=n, relay_correct=relay_correct, frame_error=err,
        sent=s, decoded=decoded, channel=ch, metric=metric,
    )


def _relay_estimates(relay_obs, slot_of, ch, spec, qam, relay_decoder, s, genie):
    """Each relay's estimate of the full symbol vector, from which it
    recodes its own line."""
    n = ch.n_relays
    d = spec.degree
    if genie:
        return [np.array(s, dtype=complex) for _ in range(n)]
    out = []
    if n == 1:
        c0 = coded_constellation(qam, spec, 0)
        for j in range(n):
            h_exh = ch.h[j] * spec.entry_scale * spec.alpha
            h_dio = ch.h[j] * spec.entry_scale
            coeffs = []
            for k in range(spec.size):
                y = relay_obs[j, slot_of[(0, k)]]
                if relay_decoder == "diophantine":
                    elem = diophantine_decode_element(
                        y, h_dio, ch.rho, spec.alpha, spec.theta.real, qam.order
                    )
                else:
                    elem = exhaustive_decode_1d(y, h_exh, ch.rho, c0)
                coeffs.extend(elem.coeffs)
            out.append(np.array(coeffs, dtype=complex))
        return out
    # N = 2: elements and a conjugate decoded jointly from the two rows
    cj = 2 if relay_decoder == "two_step" else 1
    row_b = cj                     # phase-1 rows are (0, cj)
    c0 = coded_constellation(qam, spec, 0)
    ccj = coded_constellation(qam, spec, cj)
    for j in range(n):
        h_eff = ch.h[j] * spec.entry_scale
        coeffs = []
        for k in range(spec.size):
            col_b = (k + row_b) % spec.size
            y_a = relay_obs[j, slot_of[(0, k)]]
            y_b = relay_obs[j, slot_of[(row_b, col_b)]]
            if col_b < row_b:      # remove the layer twist (unit modulus)
                y_b = y_b / spec.gamma
            if relay_decoder == "two_step":
                elem, _ = two_step_decode(
                    y_a, y_b, h_eff, ch.rho, qam, spec.theta
                )
            else:
                elem, _ = exhaustive_decode_pair(y_a, y_b, h_eff, ch.rho, c0, ccj)
            coeffs.extend(elem.coeffs)
        out.append(np.array(coeffs, dtype=complex))
    return out


def run_asymmetric_df_frame(
    s,
    ch: ChannelRealization,
    decision: ModeDecision,
    rng,
    *,
    qam: QamConstellation,
    noise_scale: float = 1.0,
    genie: bool = False,
) -> TrialOutcome:
    """One Asymmetric DF frame (N=1, Golden): four uncoded symbols, then the
    second codeword line from the source while the relay sends the recoded
    first line. The destination uses all six observations."""
    if decision.mode != "df":
        raise ValueError("asymmetric DF frame requires a DF mode decision")
    if ch.n_relays != 1:
        raise ValueError("asymmetric DF is implemented for the 1-relay case")
    spec = golden_code()
    s = np.asarray(s, dtype=complex)
    if s.shape != (4,):
        raise ValueError(f"expected 4 symbols, got {s.shape}")
    sched = asymmetric_df_schedule(1)
    tensor = coeff_tensor(spec)
    scale = spec.entry_scale * qam.scale
    sq = np.sqrt(ch.rho)
    xmat = np.einsum("ijk,k->ij", tensor, s)

    y_obs, g_rows = [], []
    s_hat = np.empty(4, dtype=complex)
    for k in range(4):
        tx = qam.scale * s[k]
        y_obs.append(sq * ch.g0 * tx + _noise(rng, noise_scale))
        row = np.zeros(4, dtype=complex)
        row[k] = sq * ch.g0 * qam.scale
        g_rows.append(row)
        r = sq * ch.h[0] * tx + _noise(rng, noise_scale)
        d = np.abs(r - sq * ch.h[0] * qam.scale * qam.raw_points) ** 2
        s_hat[k] = qam.raw_points[int(np.argmin(d))]
    if genie:
        s_hat = np.array(s, dtype=complex)
    relay_ok = bool(np.array_equal(s_hat, s))
    x_relay = np.einsum("ijk,k->ij", tensor, s_hat)

    half = 1 / np.sqrt(2)
    for slot in sched.slots[sched.phase1_uses:]:
        tx_r = scale * x_relay[slot.relay_row, slot.relay_col]
        tx_s = scale * xmat[slot.source_row, slot.source_col]
        y = sq * (ch.g[0] * half * tx_r + ch.g0 * half * tx_s) + _noise(rng, noise_scale)
        y_obs.append(y)
        g_rows.append(
            sq * scale * (
                ch.g[0] * half * tensor[slot.relay_row, slot.relay_col]
                + ch.g0 * half * tensor[slot.source_row, slot.source_col]
            )
        )
    decoded, err, metric = _decode_frame(y_obs, g_rows, qam, s)
    return TrialOutcome(
        mode="df", n_used=1, relay_correct=(relay_ok,), frame_error=err,
        sent=s, decoded=decoded, channel=ch, metric=metric,
    )


def run_naf_frame(
    s,
    ch: ChannelRealization,
    rng,
    *,
    qam: QamConstellation,
    noise_scale: float = 1.0,
) -> TrialOutcome:
    """One Golden-coded NAF frame: the relay amplifies its two phase-1
    observations during phase 2 with the gain that puts half the power
    budget on the relayed signal; the destination whitens the amplified
    noise and sphere-decodes the four-symbol hypothesis."""
    if ch.n_relays != 1:
        raise ValueError(
            "NAF frame runs on one relay; multi-relay NAF is composed of "
            "consecutive single-relay subframes"
        )
    spec = golden_code()
    s = np.asarray(s, dtype=complex)
    if s.shape != (4,):
        raise ValueError(f"expected 4 symbols, got {s.shape}")
    tensor = coeff_tensor(spec)
    scale = spec.entry_scale * qam.scale
    sq = np.sqrt(ch.rho)
    xmat = np.einsum("ijk,k->ij", tensor, s)
    h1, g1 = ch.h[0], ch.g[0]
    b = np.sqrt((ch.rho / 2) / (ch.rho * abs(h1) ** 2 + 1.0))

    y_obs, g_rows = [], []
    relay_rx = []
    for c in range(2):
        tx = scale * xmat[0, c]
        y_obs.append(sq * ch.g0 * tx + _noise(rng, noise_scale))
        g_rows.append(sq * ch.g0 * scale * tensor[0, c])
        relay_rx.append(sq * h1 * tx + _noise(rng, noise_scale))
    half = 1 / np.sqrt(2)
    white = 1.0 / np.sqrt(1.0 + abs(g1 * b) ** 2)
    for c in range(2):
        tx_s = scale * xmat[1, c]
        y = sq * ch.g0 * half * tx_s + g1 * b * relay_rx[c] + _noise(rng, noise_scale)
        row = (
            sq * ch.g0 * half * scale * tensor[1, c]
            + g1 * b * sq * h1 * scale * tensor[0, c]
        )
        y_obs.append(white * y)
        g_rows.append(white * row)
    decoded, err, metric = _decode_frame(y_obs, g_rows, qam, s)
    return TrialOutcome(
        mode="naf", n_used=1, relay_correct=(), frame_error=err,
        sent=s, decoded=decoded, channel=ch, metric=metric,
    )


def naf_relay_gain(rho: float, h1: complex) -> float:
    """Amplification b with b^2 (rho |h1|^2 + 1) = rho / 2."""
    return float(np.sqrt((rho / 2) / (rho * abs(h1) ** 2 + 1.0)))


def run_protocol_trial(
    protocol: str,
    rng: np.random.Generator,
    *,
    n_relays: int,
    R: float,
    snr_db: float,
    pool_size: int | None = None,
    relay_decoder: str = "exhaustive",
    noise_scale: float = 1.0,
    genie: bool = False,
    siso_frame_uses: int | None = None,
) -> TrialOutcome:
    """One full protocol trial: draw the relay pool, select the mode, and
    run the frame (or the per-relay / reduced-code subframes that fill the
    same time slot when fewer relays are usable)."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    qam = make_qam(constellation_order(protocol, R))

    if protocol == "siso":
        uses = siso_frame_uses if siso_frame_uses else 4 * max(n_relays, 1) ** 2
        ch = sample_channel(0, snr_db, rng)
        s = draw_symbols(qam, uses, rng)
        return run_siso_frame(s, ch, rng, qam=qam, noise_scale=noise_scale)

    pool = pool_size if pool_size else default_pool_size(n_relays)
    chp = sample_channel(pool, snr_db, rng)
    best = pick_best_relays(chp.h, n_relays)
    ch = chp.subset(best)

    if protocol == "naf":
        errors = []
        sent, dec, metrics = [], [], []
        for lbl in range(1, n_relays + 1):
            s = draw_symbols(qam, 4, rng)
            out = run_naf_frame(
                s, ch.subset([lbl]), rng, qam=qam, noise_scale=noise_scale
            )
            errors.append(out.frame_error)
            sent.append(out.sent)
            dec.append(out.decoded)
            metrics.append(out.metric)
        return TrialOutcome(
            mode="naf", n_used=n_relays, relay_correct=(),
            frame_error=any(errors), sent=np.concatenate(sent),
            decoded=np.concatenate(dec), channel=ch, metric=max(metrics),
        )

    decision = select_mode(ch, R, protocol)
    n_used = len(decision.usable_relays)
    total_uses = (6 if protocol == "asymmetric_df" else 4) * n_relays ** 2

    if n_used == 0:
        qam_fb = make_qam(constellation_order("siso", R))
        s = draw_symbols(qam_fb, total_uses, rng)
        out = run_siso_frame(s, ch, rng, qam=qam_fb, noise_scale=noise_scale)
        return TrialOutcome(
            mode="siso", n_used=0, relay_correct=(), frame_error=out.frame_error,
            sent=out.sent, decoded=out.decoded, channel=ch, metric=out.metric,
        )

    ch_used = ch.subset(decision.usable_relays)
    sub_decision = ModeDecision(
        usable_relays=tuple(range(1, n_used + 1)),
        mode="df",
        threshold_R=decision.threshold_R,
    )
    if protocol == "asymmetric_df":
        s = draw_symbols(qam, 4, rng)
        return run_asymmetric_df_frame(
            s, ch_used, sub_decision, rng, qam=qam,
            noise_scale=noise_scale, genie=genie,
        )
    # incomplete DF: fill the 4N^2-use slot with 2N_u x 2N_u code frames
    sub_uses = 4 * n_used ** 2
    n_sub = total_uses // sub_uses
    errs, rc, metrics = [], [], []
    sent, dec = [], []
    # the N=2 decoders have no meaning on the Golden fallback subframes
    sub_dec = relay_decoder
    if n_used != n_relays and relay_decoder == "two_step":
        sub_dec = "exhaustive"
    for _ in range(n_sub):
        s = draw_symbols(qam, sub_uses, rng)
        out = run_incomplete_df_frame(
            s, ch_used, sub_decision, sub_dec, rng, qam=qam,
            noise_scale=noise_scale, genie=genie,
        )
        errs.append(out.frame_error)
        rc.extend(out.relay_correct)
        sent.append(out.sent)
        dec.append(out.decoded)
        metrics.append(out.metric)
    return TrialOutcome(
        mode="df", n_used=n_used, relay_correct=tuple(rc),
        frame_error=any(errs), sent=np.concatenate(sent),
        decoded=np.concatenate(dec), channel=ch, metric=max(metrics),
    )


def default_pool_size(n_relays: int) -> int:
    """Reachable-relay pool: 3 candidates in the 1-relay setup, 4 in the
    2-relay setup."""
    return {1: 3, 2: 4}.get(n_relays, max(n_relays, 1))
