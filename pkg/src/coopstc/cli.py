"""Command-line front end: experiment configuration, dispatch, and the CSV
plus run-metadata outputs.

Usage:
    coopstc <kind> --config <path> [--seed K] [--workers N] [--out DIR]

`kind` is one of fer | outage | dmt | mindet | decoder-bench. The config
file is either JSON or flat key=value lines; a small set of flags can
replace the file entirely. results.csv is a pure function of
(config, seed, workers); meta.json echoes the config and records seed,
workers, version, wall time and the selection-mode histogram.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import golden_code, make_qam, min_det, tast4_code
from .analysis import (
    FerConfig,
    OutageConfig,
    dmt_incomplete_df,
    fer_experiment,
    outage_mc,
)
from .protocols import PROTOCOLS, RELAY_DECODERS, constellation_order
from .relay_decoders import PamSearchProblem, cassels_search

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "run_experiment", "main"]

KINDS = ("fer", "outage", "dmt", "mindet", "decoder-bench")

CSV_SCHEMAS = {
    "fer": "snr_db,protocol,decoder,frames,errors,fer,ci_lo,ci_hi",
    "outage": "snr_db,R,trials,outage,ci_lo,ci_hi",
    "dmt": "r,d",
    "mindet": "code,M,min_det,exhaustive,n_differences",
    "decoder-bench": "decoder,param,trials,match_rate,avg_visited",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    protocol: str | None = None
    decoder: str = "exhaustive"
    n_relays: int = 1
    R: float = 4.0
    snr_db: tuple[float, ...] = ()
    trials: int = 100_000
    target_errors: int = 100
    max_frames: int = 200_000
    pool_size: int | None = None
    seed: int = 0
    workers: int = 1
    code: str = "golden"
    M: int = 4
    zero_noise: bool = False
    siso_frame_uses: int | None = None
    multiplexing_r: float | None = None
    out: str = "out"


_KEY_TYPES = {
    "kind": str, "protocol": str, "decoder": str, "n_relays": int, "R": float,
    "snr_db": tuple, "trials": int, "target_errors": int, "max_frames": int,
    "pool_size": int, "seed": int, "workers": int, "code": str, "M": int,
    "zero_noise": bool, "siso_frame_uses": int, "multiplexing_r": float,
    "out": str,
}


def _coerce(key: str, value):
    typ = _KEY_TYPES[key]
    if typ is tuple:
        if isinstance(value, (list, tuple)):
            return tuple(float(v) for v in value)
        return tuple(float(v) for v in str(value).split(",") if v.strip())
    if typ is bool:
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    return typ(value)


def _load_file(path: str) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be an object: {path}")
        return data
    except json.JSONDecodeError:
        pass
    data = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        data[key.strip()] = value.strip()
    return data


def parse_config(source: str | dict | None, overrides: dict | None = None) -> ExperimentConfig:
    """Build and validate a config from a file path or a dict, with CLI
    overrides applied on top. Unknown keys are rejected."""
    raw: dict = {}
    if isinstance(source, str):
        raw.update(_load_file(source))
    elif isinstance(source, dict):
        raw.update(source)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    fields = {}
    for key, value in raw.items():
        if key not in _KEY_TYPES:
            raise ConfigError(f"unknown config key: {key!r}")
        try:
            fields[key] = _coerce(key, value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({e})") from None
    if "kind" not in fields:
        raise ConfigError("missing experiment kind")
    cfg = ExperimentConfig(**fields)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind: {cfg.kind!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.kind in ("fer", "outage"):
        if not cfg.snr_db:
            raise ConfigError("empty SNR grid")
        if any(b <= a for a, b in zip(cfg.snr_db, cfg.snr_db[1:])):
            raise ConfigError("snr_db grid must be strictly increasing")
    if cfg.kind == "fer":
        if cfg.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol: {cfg.protocol!r}")
        if cfg.decoder not in RELAY_DECODERS:
            raise ConfigError(f"unknown relay decoder: {cfg.decoder!r}")
        if cfg.decoder == "diophantine" and cfg.n_relays != 1:
            raise ConfigError(
                "diophantine decoder requires the Golden (N=1) configuration"
            )
        if cfg.decoder == "two_step" and cfg.n_relays != 2:
            raise ConfigError("two-step decoder requires the TAST (N=2) configuration")
        if cfg.protocol == "asymmetric_df" and cfg.n_relays != 1:
            raise ConfigError("asymmetric DF is implemented for the 1-relay case")
        if cfg.n_relays not in (1, 2) and cfg.protocol != "siso":
            raise ConfigError("cooperative protocols support 1 or 2 relays")
        try:
            constellation_order(cfg.protocol, cfg.R)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if cfg.target_errors < 1 or cfg.max_frames < 1:
            raise ConfigError("stopping rule must be positive")
    if cfg.kind == "outage":
        if cfg.trials < 1:
            raise ConfigError("trials must be >= 1")
        if cfg.n_relays < 0:
            raise ConfigError("n_relays must be >= 0")
    if cfg.kind == "dmt" and cfg.n_relays < 0:
        raise ConfigError("n_relays must be >= 0")
    if cfg.kind == "mindet":
        if cfg.code not in ("golden", "tast4"):
            raise ConfigError(f"unknown code: {cfg.code!r}")
        if cfg.M not in (4, 16, 64):
            raise ConfigError(f"unsupported constellation order: {cfg.M}")
    if cfg.kind == "decoder-bench" and cfg.M not in (4, 16, 64):
        raise ConfigError(f"unsupported constellation order: {cfg.M}")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _run_fer(cfg: ExperimentConfig):
    fcfg = FerConfig(
        protocol=cfg.protocol,
        n_relays=cfg.n_relays,
        R=cfg.R,
        snr_db=cfg.snr_db,
        relay_decoder=cfg.decoder,
        target_errors=cfg.target_errors,
        max_frames=cfg.max_frames,
        pool_size=cfg.pool_size,
        seed=cfg.seed,
        workers=cfg.workers,
        noise_scale=0.0 if cfg.zero_noise else 1.0,
        siso_frame_uses=cfg.siso_frame_uses,
    )
    res = fer_experiment(fcfg)
    rows = [
        ",".join(
            [
                _fmt(p.snr_db), cfg.protocol, cfg.decoder, str(p.frames),
                str(p.errors), _fmt(p.fer), _fmt(p.ci_lo), _fmt(p.ci_hi),
            ]
        )
        for p in res.points
    ]
    meta = {
        "mode_counts": {_fmt(p.snr_db): list(p.mode_counts) for p in res.points},
        "reached_target": {_fmt(p.snr_db): p.reached_target for p in res.points},
    }
    return rows, meta


def _run_outage(cfg: ExperimentConfig):
    ocfg = OutageConfig(
        n_relays=cfg.n_relays,
        snr_db=cfg.snr_db,
        R=cfg.R,
        trials=cfg.trials,
        pool_size=cfg.pool_size,
        seed=cfg.seed,
        workers=cfg.workers,
        multiplexing_r=cfg.multiplexing_r,
    )
    res = outage_mc(ocfg)
    rows = [
        ",".join(
            [
                _fmt(p.snr_db), _fmt(p.R), str(p.trials), _fmt(p.probability),
                _fmt(p.ci_lo), _fmt(p.ci_hi),
            ]
        )
        for p in res.points
    ]
    meta = {
        "mode_counts": {_fmt(p.snr_db): list(p.nu_trials) for p in res.points},
        "mode_outages": {_fmt(p.snr_db): list(p.nu_outages) for p in res.points},
    }
    return rows, meta


def _run_dmt(cfg: ExperimentConfig):
    grid = np.linspace(0.0, 1.0, 101)
    d = dmt_incomplete_df(grid, cfg.n_relays)
    rows = [f"{_fmt(r)},{_fmt(v)}" for r, v in zip(grid, d)]
    return rows, {}


def _run_mindet(cfg: ExperimentConfig):
    spec = golden_code() if cfg.code == "golden" else tast4_code()
    qam = make_qam(cfg.M)
    res = min_det(spec, qam, rng=np.random.default_rng(cfg.seed))
    row = ",".join(
        [cfg.code, str(cfg.M), _fmt(res.value), str(res.exhaustive).lower(),
         str(res.n_differences)]
    )
    return [row], {}


def _run_decoder_bench(cfg: ExperimentConfig):
    """Cassels agreement and iteration counts per PAM side, plus the
    points-examined figure of the exhaustive search."""
    rng = np.random.default_rng(cfg.seed)
    theta = golden_code().theta.real
    rows = []
    for z in (2, 4, 8, 16):
        pam = np.arange(-(z - 1), z, 2)
        lim = (z - 1) * (1 + theta)
        match = 0
        iters = 0
        for _ in range(cfg.trials):
            y = rng.uniform(-lim, lim)
            res = cassels_search(PamSearchProblem.from_observation(y, theta, z))
            grid = pam[:, None] + theta * pam[None, :]
            dbest = float(np.min((y - grid) ** 2))
            match += abs(res.objective**2 - dbest) < 1e-9
            iters += res.iterations
        rows.append(
            ",".join(
                ["cassels", str(z), str(cfg.trials),
                 _fmt(match / cfg.trials), _fmt(iters / cfg.trials)]
            )
        )
    rows.append(
        ",".join(
            ["exhaustive", str(cfg.M), str(cfg.trials), _fmt(1.0),
             _fmt(float(cfg.M ** 2))]
        )
    )
    return rows, {}


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run one experiment; writes <out>/results.csv and <out>/meta.json and
    returns the output directory."""
    runners = {
        "fer": _run_fer,
        "outage": _run_outage,
        "dmt": _run_dmt,
        "mindet": _run_mindet,
        "decoder-bench": _run_decoder_bench,
    }
    t0 = time.time()
    rows, extra_meta = runners[cfg.kind](cfg)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        csv_path.write_text(CSV_SCHEMAS[cfg.kind] + "\n" + "\n".join(rows) + "\n")
        meta = {
            "config": dataclasses.asdict(cfg),
            "seed": cfg.seed,
            "workers": cfg.workers,
            "version": __version__,
            "wall_time_s": round(time.time() - t0, 3),
        }
        meta.update(extra_meta)
        (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as e:
        raise RuntimeError(f"cannot write outputs under {out}: {e}") from e
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coopstc",
        description="Cooperative relay-channel simulation experiments",
    )
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", help="JSON or key=value config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out")
    ap.add_argument("--protocol", choices=PROTOCOLS)
    ap.add_argument("--decoder", choices=RELAY_DECODERS)
    ap.add_argument("--relays", type=int, dest="n_relays")
    ap.add_argument("--rate", type=float, dest="R", help="spectral efficiency, bits pcu")
    ap.add_argument("--snr", dest="snr_db", help="comma-separated dB list")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--target-errors", type=int, dest="target_errors")
    ap.add_argument("--max-frames", type=int, dest="max_frames")
    ap.add_argument("--pool", type=int, dest="pool_size")
    ap.add_argument("--code", choices=("golden", "tast4"))
    ap.add_argument("--order", type=int, dest="M", help="QAM order")
    ap.add_argument("--zero-noise", action="store_true", default=None, dest="zero_noise")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        k: v for k, v in vars(args).items() if k != "config" and v is not None
    }
    try:
        # default worker count is the available parallelism, recorded in meta
        if "workers" not in overrides and "workers" not in _file_keys(args.config):
            overrides["workers"] = max(1, os.cpu_count() or 1)
        cfg = parse_config(args.config, overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        out = run_experiment(cfg)
    except Exception as e:  # noqa: BLE001 - surface runtime failures as exit 1
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out / 'results.csv'} and {out / 'meta.json'}")
    return 0


def _file_keys(path: str | None) -> set:
    if not path:
        return set()
    try:
        return set(_load_file(path))
    except (ConfigError, OSError):
        return set()


if __name__ == "__main__":
    sys.exit(main())
