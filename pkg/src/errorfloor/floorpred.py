"""Floor-prediction pipeline.

Wires a parity-check matrix, a list of failure sets, and a per-SNR
input-statistics source (density evolution or decoder capture) into the
state-space predictor, producing SNR-swept FER/BER bound curves with a
per-set breakdown.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, frame_rng
from .dde import dde_run
from .decoder import DecoderConfig, run_capture
from .statespace import (
    InputStats,
    beta_prime_moments,
    build_model,
    failure_probability,
    gain_schedule,
    union_bounds,
)
from .tanner import ParityCheckMatrix, classify, induce, load_alist, load_trapping_sets

CACHE_ENV = "ERRORFLOOR_CACHE_DIR"


@dataclass(frozen=True)
class PredictionJob:
    """One prediction run: code, sets, SNR grid, stats source."""

    H: ParityCheckMatrix
    sets: tuple
    snr_grid: tuple
    rate: float
    multiplicities: tuple = ()
    source: str = "dde"  # dde | spa
    saturation: float | None = 25.0
    horizon: int = 20
    inversion_iters: int = 3
    mode: str = "pairwise"
    capture_frames: int = 100
    capture_seed: int = 0
    code_id: str = ""

    def __post_init__(self):
        if not self.sets:
            raise ValueError("need at least one failure set")
        if self.multiplicities == ():
            object.__setattr__(self, "multiplicities", (1,) * len(self.sets))
        if len(self.multiplicities) != len(self.sets):
            raise ValueError("one multiplicity per set")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be >= 1")
        snr = np.asarray(self.snr_grid, dtype=float)
        if len(snr) < 1 or np.any(np.diff(snr) <= 0):
            raise ValueError("SNR grid must be strictly increasing")
        if self.source not in ("dde", "spa"):
            raise ValueError(f"unknown stats source {self.source!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not self.code_id:
            object.__setattr__(self, "code_id", code_digest(self.H))


def code_digest(H: ParityCheckMatrix) -> str:
    h = hashlib.sha1()
    h.update(f"{H.n_chks}x{H.n_vars}".encode())
    for row in H.chk_vars:
        h.update(np.asarray(sorted(map(int, row)), dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def _check_degree(H: ParityCheckMatrix) -> int:
    return int(np.max(H.chk_degrees))


def stats_from_dde(
    cfg: ChannelConfig, d_v: int, d_c: int, n_iters: int, saturation: float | None
) -> InputStats:
    res = dde_run(d_v, d_c, cfg, n_iters, saturation=saturation)
    return InputStats(
        "dde", d_c, cfg.mean_llr, res.m_ex, res.var_ex, res.g_bar, res.p_e,
        cfg.ebn0_db, cfg.rate, saturation,
    )


def stats_from_capture(
    H: ParityCheckMatrix,
    cfg: ChannelConfig,
    n_iters: int,
    saturation: float | None,
    mode: str = "pairwise",
    n_frames: int = 100,
    seed: int = 0,
    batch_size: int = 50,
) -> InputStats:
    """Population statistics captured from the decoder itself on
    all-zero-codeword frames."""
    dec = DecoderConfig(mode=mode, max_iters=n_iters, saturation=saturation)
    d_c = _check_degree(H)

    def batches():
        left = n_frames
        b = 0
        while left > 0:
            take = min(batch_size, left)
            rng = frame_rng(seed, b)
            noise = rng.normal(0.0, cfg.sigma, size=(take, H.n_vars))
            yield cfg.llr_scale * (1.0 + noise)
            left -= take
            b += 1

    rows = run_capture(H, batches(), dec, d_c)
    return InputStats(
        "spa",
        d_c,
        cfg.mean_llr,
        np.array([r.m_ex for r in rows]),
        np.array([r.var_ex for r in rows]),
        np.array([r.g_bar for r in rows]),
        np.array([r.p_e for r in rows]),
        cfg.ebn0_db,
        cfg.rate,
        saturation,
    )


def _cache_path(cache_dir, job: PredictionJob, cfg: ChannelConfig) -> Path:
    key = "|".join(
        [
            job.code_id if job.source == "spa" else "ensemble",
            job.source,
            f"{cfg.ebn0_db:.6f}",
            f"{cfg.rate:.10g}",
            "none" if job.saturation is None else f"{job.saturation:.6g}",
            f"h{job.horizon}",
            job.mode if job.source == "spa" else "-",
            f"f{job.capture_frames}s{job.capture_seed}" if job.source == "spa" else "-",
        ]
    )
    name = hashlib.sha1(key.encode()).hexdigest()[:24] + ".csv"
    return Path(cache_dir) / name


def _stats_for(job: PredictionJob, cfg: ChannelConfig, d_v: int, cache_dir) -> InputStats:
    path = None
    if cache_dir:
        path = _cache_path(cache_dir, job, cfg)
        if path.exists():
            return InputStats.from_csv(path)
    if job.source == "dde":
        stats = stats_from_dde(cfg, d_v, _check_degree(job.H), job.horizon, job.saturation)
    else:
        stats = stats_from_capture(
            job.H, cfg, job.horizon, job.saturation,
            mode=job.mode, n_frames=job.capture_frames, seed=job.capture_seed,
        )
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        os.close(fd)
        try:
            stats.to_csv(tmp)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
    return stats


@dataclass(frozen=True)
class SetPrediction:
    set_index: int
    a: int
    b: int
    r: float
    h: int
    horizon: int
    mean: float
    var: float
    p_fail: float
    multiplicity: int

    @property
    def fer_contribution(self) -> float:
        return self.multiplicity * self.p_fail


@dataclass
class PredictionReport:
    job_echo: dict
    snr_grid: np.ndarray
    fer: np.ndarray
    ber: np.ndarray
    breakdown: list  # list (per SNR) of lists of SetPrediction

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "floor-prediction v1",
                "job": self.job_echo,
                "curve": [
                    {"ebn0_db": float(s), "fer_bound": float(f), "ber_bound": float(b)}
                    for s, f, b in zip(self.snr_grid, self.fer, self.ber)
                ],
                "breakdown": [
                    [
                        {
                            "set": p.set_index,
                            "a": p.a,
                            "b": p.b,
                            "r": p.r,
                            "h": p.h,
                            "horizon": p.horizon,
                            "mean": p.mean,
                            "var": p.var,
                            "p_fail": p.p_fail,
                            "multiplicity": p.multiplicity,
                            "fer_contribution": p.fer_contribution,
                        }
                        for p in rows
                    ]
                    for rows in self.breakdown
                ],
            },
            indent=2,
        )

    def to_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(["# floor-prediction v1"])
        w.writerow(
            ["ebn0_db", "set", "a", "b", "r", "h", "horizon", "mean", "var",
             "p_fail", "multiplicity", "fer_contribution"]
        )
        for s, rows in zip(self.snr_grid, self.breakdown):
            for p in rows:
                w.writerow(
                    [f"{s:.6g}", p.set_index, p.a, p.b, f"{p.r:.6g}", p.h, p.horizon,
                     f"{p.mean:.6g}", f"{p.var:.6g}", f"{p.p_fail:.6g}", p.multiplicity,
                     f"{p.fer_contribution:.6g}"]
                )
        w.writerow([])
        w.writerow(["ebn0_db", "fer_bound", "ber_bound"])
        for s, f, b in zip(self.snr_grid, self.fer, self.ber):
            w.writerow([f"{s:.6g}", f"{f:.6g}", f"{b:.6g}"])


def predict_set(
    H: ParityCheckMatrix,
    d_v: int,
    T,
    stats: InputStats,
    cfg: ChannelConfig,
    horizon: int,
    inversion_iters: int,
    set_index: int = 0,
    multiplicity: int = 1,
) -> SetPrediction:
    """State-space failure probability for one set under the given
    per-iteration input statistics."""
    sub = induce(H, T)
    model = build_model(sub, d_v)
    sched = gain_schedule(stats, inversion_iters)
    mean, var = beta_prime_moments(model, sched, stats, horizon)
    return SetPrediction(
        set_index,
        model.a,
        model.b,
        float(model.summary.r),
        int(model.summary.h),
        horizon,
        mean,
        var,
        failure_probability(mean, var),
        multiplicity,
    )


def _curve_point(args):
    job, snr, d_v, cache_dir = args
    cfg = ChannelConfig(snr, job.rate)
    stats = _stats_for(job, cfg, d_v, cache_dir)
    rows = [
        predict_set(
            job.H, d_v, T, stats, cfg, job.horizon, job.inversion_iters,
            set_index=i, multiplicity=int(job.multiplicities[i]),
        )
        for i, T in enumerate(job.sets)
    ]
    fer, ber = union_bounds(
        [p.p_fail for p in rows],
        [p.multiplicity for p in rows],
        [p.a for p in rows],
        job.H.n_vars,
    )
    return fer, ber, rows


def predict_curve(job: PredictionJob, cache_dir=None, workers: int = 1) -> PredictionReport:
    """SNR-swept FER/BER bounds with a per-set breakdown."""
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV) or None
    vd = job.H.var_degrees
    if not np.all(vd == vd[0]):
        raise ValueError("prediction requires a variable-regular code")
    d_v = int(vd[0])
    tasks = [(job, float(s), d_v, cache_dir) for s in job.snr_grid]
    if workers == 1 or len(tasks) == 1:
        outs = [_curve_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_curve_point, tasks))
    echo = {
        "code_id": job.code_id,
        "n": job.H.n_vars,
        "sets": [list(map(int, T)) for T in job.sets],
        "multiplicities": list(job.multiplicities),
        "snr_grid": [float(s) for s in job.snr_grid],
        "rate": job.rate,
        "source": job.source,
        "saturation": job.saturation,
        "horizon": job.horizon,
        "inversion_iters": job.inversion_iters,
        "mode": job.mode,
        "capture_frames": job.capture_frames,
        "capture_seed": job.capture_seed,
    }
    return PredictionReport(
        echo,
        np.asarray(job.snr_grid, dtype=float),
        np.array([o[0] for o in outs]),
        np.array([o[1] for o in outs]),
        [o[2] for o in outs],
    )


def load_job(path) -> PredictionJob:
    """Flat key-value job file; relative paths resolve against the file."""
    base = Path(path).parent
    kv = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got {line!r}")
            k, v = line.split("=", 1)
            kv[k.strip()] = v.strip()
    try:
        H = load_alist(base / kv["code"])
        sets = tuple(tuple(map(int, s)) for s in load_trapping_sets(base / kv["sets"]))
        snr = tuple(float(x) for x in kv["snr"].replace(",", " ").split())
    except KeyError as e:
        raise ValueError(f"job file is missing the {e.args[0]!r} key") from None
    rate = float(kv["rate"]) if "rate" in kv else (H.n_vars - H.n_chks) / H.n_vars
    sat_txt = kv.get("saturation", "25").lower()
    mults = tuple(int(x) for x in kv["multiplicities"].replace(",", " ").split()) \
        if "multiplicities" in kv else ()
    return PredictionJob(
        H=H,
        sets=sets,
        snr_grid=snr,
        rate=rate,
        multiplicities=mults,
        source=kv.get("source", "dde"),
        saturation=None if sat_txt in ("none", "inf") else float(sat_txt),
        horizon=int(kv.get("horizon", "20")),
        inversion_iters=int(kv.get("inversion_iters", "3")),
        mode=kv.get("mode", "pairwise"),
        capture_frames=int(kv.get("capture_frames", "100")),
        capture_seed=int(kv.get("capture_seed", "0")),
    )
