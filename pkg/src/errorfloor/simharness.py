"""Monte Carlo decoding runs and a semi-analytic floor estimator.

The floor estimator conditions the noise on a trapping set T through an
orthonormal rotation whose first basis vector has equal support on T:
pinning the first rotated coordinate pins the mean noise over T at s
while the remaining coordinates stay i.i.d.  Conditional failure rates
measured on an s grid are then integrated against the Gaussian density
of the mean, N(0, sigma^2/a).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .channel import ChannelConfig, frame_rng
from .decoder import DecoderConfig, decode_batch
from .tanner import ParityCheckMatrix, classify, induce


class GridCoverageWarning(UserWarning):
    pass


class ExtrapolationWarning(UserWarning):
    pass


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    """95% score interval for k successes in n trials."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run shape.  Results depend only on (seed, batch_size),
    never on the worker count."""

    max_frames: int = 100_000
    target_errors: int | None = None
    seed: int = 0
    workers: int = 1
    batch_size: int = 256
    log_failures: bool = True
    ec_window: int | None = None  # overrides the decoder's trailing window

    def __post_init__(self):
        if self.max_frames < 1 or self.batch_size < 1 or self.workers < 1:
            raise ValueError("max_frames, batch_size and workers must be positive")
        if self.target_errors is not None and self.target_errors < 1:
            raise ValueError("target_errors must be positive")


@dataclass(frozen=True)
class FailureRecord:
    frame: int
    iterations: int
    failed_set: tuple
    a: int
    b: int
    elementary: bool | None = None
    absorbing: bool | None = None
    fully_absorbing: bool | None = None
    codeword: bool | None = None


@dataclass
class McResult:
    frames: int
    frame_errors: int
    bit_errors: int
    n: int
    fer: float
    ber: float
    fer_ci: tuple
    ber_ci: tuple
    failures: list

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "bit_errors": self.bit_errors,
            "n": self.n,
            "fer": self.fer,
            "ber": self.ber,
            "fer_ci": list(self.fer_ci),
            "ber_ci": list(self.ber_ci),
            "failures": [
                {
                    "frame": f.frame,
                    "iterations": f.iterations,
                    "failed_set": list(f.failed_set),
                    "a": f.a,
                    "b": f.b,
                    "elementary": f.elementary,
                    "absorbing": f.absorbing,
                    "fully_absorbing": f.fully_absorbing,
                    "codeword": f.codeword,
                }
                for f in self.failures
            ],
        }


def _sim_batch(args):
    H, cfg, dec, seed, batch_idx, batch_size = args
    rng = frame_rng(seed, batch_idx)
    noise = rng.normal(0.0, cfg.sigma, size=(batch_size, H.n_vars))
    llrs = cfg.llr_scale * (1.0 + noise)
    res = decode_batch(H, llrs, dec)
    err_rows = np.flatnonzero(res.failed.any(axis=1))
    bit_errors = int(res.hard.sum())
    log = [
        (int(i), int(res.iterations[i]), tuple(map(int, np.flatnonzero(res.failed[i]))))
        for i in err_rows
    ]
    return batch_size, len(err_rows), bit_errors, log


def _classify_failure(H, frame, iterations, fset, d_v):
    sub = induce(H, fset)
    if d_v is None:
        return FailureRecord(frame, iterations, fset, sub.a, sub.b)
    c = classify(sub, d_v)
    return FailureRecord(
        frame, iterations, fset, c.a, c.b, c.elementary, c.absorbing, c.fully_absorbing, c.codeword
    )


def run_monte_carlo(
    H: ParityCheckMatrix, cfg: ChannelConfig, dec: DecoderConfig, mc: McConfig
) -> McResult:
    """All-zero-codeword simulation with Wilson intervals and a failure
    log holding each frame's not-eventually-correct set and its (a, b)."""
    if mc.ec_window is not None:
        dec = replace(dec, ec_window=mc.ec_window)
    vd = H.var_degrees
    d_v = int(vd[0]) if len(vd) and np.all(vd == vd[0]) else None

    n_batches = -(-mc.max_frames // mc.batch_size)
    sizes = [min(mc.batch_size, mc.max_frames - i * mc.batch_size) for i in range(n_batches)]
    tasks = [(H, cfg, dec, mc.seed, i, sizes[i]) for i in range(n_batches)]

    frames = frame_errors = bit_errors = 0
    failures = []

    def consume(batch_idx, out):
        nonlocal frames, frame_errors, bit_errors
        bsize, errs, berrs, log = out
        base = batch_idx * mc.batch_size
        frames += bsize
        frame_errors += errs
        bit_errors += berrs
        if mc.log_failures:
            for local, iters, fset in log:
                failures.append(_classify_failure(H, base + local, iters, fset, d_v))
        return mc.target_errors is not None and frame_errors >= mc.target_errors

    if mc.workers == 1:
        for i, t in enumerate(tasks):
            if consume(i, _sim_batch(t)):
                break
    else:
        # aggregate in batch order so the stopping point is worker-invariant
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            window = 4 * mc.workers
            pending = {i: pool.submit(_sim_batch, tasks[i]) for i in range(min(window, n_batches))}
            nxt = len(pending)
            for i in range(n_batches):
                out = pending.pop(i).result()
                if nxt < n_batches:
                    pending[nxt] = pool.submit(_sim_batch, tasks[nxt])
                    nxt += 1
                if consume(i, out):
                    for fut in pending.values():
                        fut.cancel()
                    break

    total_bits = frames * H.n_vars
    return McResult(
        frames=frames,
        frame_errors=frame_errors,
        bit_errors=bit_errors,
        n=H.n_vars,
        fer=frame_errors / frames if frames else 0.0,
        ber=bit_errors / total_bits if total_bits else 0.0,
        fer_ci=wilson_interval(frame_errors, frames),
        ber_ci=wilson_interval(bit_errors, total_bits),
        failures=failures,
    )


_ROT_CACHE: dict = {}


def _equal_support_rotation(a: int) -> np.ndarray:
    """Orthonormal Q whose first column is 1/sqrt(a) on every entry,
    completed by Gram-Schmidt over the standard basis."""
    Q = _ROT_CACHE.get(a)
    if Q is None:
        M = np.eye(a)
        M[:, 0] = 1.0
        Q, _ = np.linalg.qr(M)
        if Q[0, 0] < 0:
            Q = -Q
        _ROT_CACHE[a] = Q
    return Q


def _rotated_noise(T, s, cfg, rng, n, n_frames):
    T = np.asarray(T, dtype=np.int64)
    a = T.size
    noise = rng.normal(0.0, cfg.sigma, size=(n_frames, n))
    u = np.empty((n_frames, a))
    u[:, 0] = s * math.sqrt(a)
    if a > 1:
        u[:, 1:] = rng.normal(0.0, cfg.sigma, size=(n_frames, a - 1))
    noise[:, T] = u @ _equal_support_rotation(a).T
    return cfg.llr_scale * (1.0 + noise)


def rotated_noise_frame(T, s: float, cfg: ChannelConfig, rng, n: int) -> np.ndarray:
    """One LLR frame whose mean noise over T is pinned at s.

    The T block is Q u with u[0] = s*sqrt(a) fixed and the other a-1
    rotated coordinates i.i.d. N(0, sigma^2); off-T noise is untouched
    channel noise.
    """
    if len(T) < 1:
        raise ValueError("need a non-empty trapping set")
    return _rotated_noise(T, s, cfg, rng, n, 1)[0]


@dataclass(frozen=True)
class SemiAnalyticConfig:
    """Importance-sampling plan for one trapping set."""

    trap_set: tuple
    s_grid: tuple = tuple(np.linspace(-2.0, -0.8, 8))
    frames_per_point: int = 20_000
    target_failures: int = 50
    mode: str = "exact-match"
    sat_iters: int = 20
    sat_limit: float = 25.0
    ec_window: int = 12
    seed: int = 0
    batch_size: int = 512
    refine_rounds: int = 0

    def __post_init__(self):
        if len(self.trap_set) < 1:
            raise ValueError("trapping set must have a >= 1 variables")
        s = np.asarray(self.s_grid, dtype=float)
        if len(s) < 1 or np.any(np.diff(s) <= 0):
            raise ValueError("s grid must be strictly increasing")
        if s[-1] >= 0:
            raise ValueError("s grid must stay below zero")
        if self.mode not in ("exact-match", "saturation-phase"):
            raise ValueError(f"unknown classification mode {self.mode!r}")


@dataclass(frozen=True)
class ConditionalEstimate:
    s: float
    failures: int
    frames: int

    @property
    def p(self) -> float:
        return self.failures / self.frames if self.frames else 0.0

    @property
    def ci(self) -> tuple:
        return wilson_interval(self.failures, self.frames)


def conditional_failure(
    H: ParityCheckMatrix,
    T,
    s: float,
    n_frames: int,
    cfg: ChannelConfig,
    dec: DecoderConfig,
    mode: str = "exact-match",
    seed: int = 0,
    stream_base: int = 0,
    target_failures: int | None = None,
    batch_size: int = 512,
    sat_iters: int = 20,
    sat_limit: float = 25.0,
    ec_window: int = 12,
) -> ConditionalEstimate:
    """P{failure pattern == T | mean noise over T = s}.

    exact-match compares the decoder's not-eventually-correct set with T
    directly; saturation-phase first lets the given (non-saturating)
    decoder run, then appends `sat_iters` saturated iterations and
    matches on their trailing `ec_window`.
    """
    T = tuple(sorted(int(v) for v in T))
    mask = np.zeros(H.n_vars, dtype=bool)
    mask[list(T)] = True
    if mode not in ("exact-match", "saturation-phase"):
        raise ValueError(f"unknown classification mode {mode!r}")

    fails = 0
    frames = 0
    batch = 0
    while frames < n_frames:
        bsize = min(batch_size, n_frames - frames)
        rng = frame_rng(seed, stream_base + batch)
        llrs = _rotated_noise(T, s, cfg, rng, H.n_vars, bsize)
        if mode == "exact-match":
            res = decode_batch(H, llrs, dec)
            failed = res.failed
        else:
            pre = decode_batch(H, llrs, dec, return_state=True)
            sat_dec = DecoderConfig(
                mode=dec.mode,
                max_iters=sat_iters,
                saturation=sat_limit,
                early_stop=False,
                ec_window=ec_window,
            )
            failed = decode_batch(H, llrs, sat_dec, init_v2c=pre.state_v2c).failed
        fails += int((failed == mask).all(axis=1).sum())
        frames += bsize
        batch += 1
        if target_failures is not None and fails >= target_failures:
            break
    return ConditionalEstimate(float(s), fails, frames)


def integrate_floor(s_grid, cond, cfg: ChannelConfig, a: int, warn: bool = True) -> float:
    """Integrate P{failure | s} against the mean-noise density N(0, sigma^2/a).

    The conditional curve is treated as piecewise linear between grid
    points and held constant beyond both ends, so each segment has a
    closed form under the Gaussian measure.
    """
    s = np.asarray(s_grid, dtype=float)
    p = np.asarray(cond, dtype=float)
    if s.shape != p.shape or s.ndim != 1 or len(s) < 1:
        raise ValueError("grid and estimates must be 1-d and aligned")
    if len(s) > 1 and np.any(np.diff(s) <= 0):
        raise ValueError("s grid must be strictly increasing")
    sig = cfg.sigma / math.sqrt(a)
    z = s / sig
    cdf = ndtr(z)
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    left = p[0] * cdf[0]
    right = p[-1] * (1.0 - cdf[-1])
    total = left + right
    if len(s) > 1:
        slope = np.diff(p) / np.diff(s)
        icept = p[:-1] - slope * s[:-1]
        total += float(np.sum(icept * np.diff(cdf) + slope * sig * (pdf[:-1] - pdf[1:])))
    if warn and total > 0 and max(left, right) >= 0.01 * total:
        warnings.warn(
            f"grid endpoints hold {100 * max(left, right) / total:.1f}% of the mass; "
            "widen the s grid",
            GridCoverageWarning,
            stacklevel=2,
        )
    return float(total)


@dataclass
class FloorEstimate:
    """Semi-analytic failure probability for one trapping set."""

    value: float
    ci: tuple
    s_grid: np.ndarray
    cond: np.ndarray
    cond_lo: np.ndarray
    cond_hi: np.ndarray
    frames: np.ndarray
    a: int
    ebn0_db: float
    rate: float
    mode: str
    extrapolated_from: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "ci": list(self.ci),
            "s_grid": [float(x) for x in self.s_grid],
            "cond": [float(x) for x in self.cond],
            "cond_lo": [float(x) for x in self.cond_lo],
            "cond_hi": [float(x) for x in self.cond_hi],
            "frames": [int(x) for x in self.frames],
            "a": self.a,
            "ebn0_db": self.ebn0_db,
            "rate": self.rate,
            "mode": self.mode,
            "extrapolated_from": self.extrapolated_from,
            "notes": list(self.notes),
        }


def _point_eval(args):
    H, cfg, dec, sa, s, idx = args
    return conditional_failure(
        H,
        sa.trap_set,
        s,
        sa.frames_per_point,
        cfg,
        dec,
        mode=sa.mode,
        seed=sa.seed,
        stream_base=(idx + 1) << 20,
        target_failures=sa.target_failures,
        batch_size=sa.batch_size,
        sat_iters=sa.sat_iters,
        sat_limit=sa.sat_limit,
        ec_window=sa.ec_window,
    )


def semi_analytic_floor(
    H: ParityCheckMatrix,
    cfg: ChannelConfig,
    dec: DecoderConfig,
    sa: SemiAnalyticConfig,
    workers: int = 1,
) -> FloorEstimate:
    """Sweep the s grid, optionally refine around the integrand peak,
    then integrate the conditional curve with CI propagation."""
    points = [(float(s), i) for i, s in enumerate(sa.s_grid)]
    estimates: dict = {}
    next_idx = len(points)

    def eval_points(batch):
        tasks = [(H, cfg, dec, sa, s, i) for s, i in batch]
        if workers == 1 or len(tasks) == 1:
            outs = [_point_eval(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outs = list(pool.map(_point_eval, tasks))
        for (s, _), est in zip(batch, outs):
            estimates[s] = est

    eval_points(points)
    a = len(sa.trap_set)
    sig = cfg.sigma / math.sqrt(a)
    for _ in range(sa.refine_rounds):
        grid = sorted(estimates)
        if len(grid) < 2:
            break
        dens = [math.exp(-0.5 * (s / sig) ** 2) for s in grid]
        contrib = [
            0.5 * (estimates[grid[i]].p * dens[i] + estimates[grid[i + 1]].p * dens[i + 1])
            * (grid[i + 1] - grid[i])
            for i in range(len(grid) - 1)
        ]
        k = int(np.argmax(contrib))
        if contrib[k] <= 0:
            break
        mid = 0.5 * (grid[k] + grid[k + 1])
        eval_points([(mid, next_idx)])
        next_idx += 1

    grid = np.array(sorted(estimates))
    cond = np.array([estimates[s].p for s in grid])
    lo = np.array([estimates[s].ci[0] for s in grid])
    hi = np.array([estimates[s].ci[1] for s in grid])
    frames = np.array([estimates[s].frames for s in grid])

    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", GridCoverageWarning)
        value = integrate_floor(grid, cond, cfg, a)
        v_lo = integrate_floor(grid, lo, cfg, a, warn=False)
        v_hi = integrate_floor(grid, hi, cfg, a, warn=False)
        notes.extend(str(w.message) for w in caught)
    return FloorEstimate(
        value, (v_lo, v_hi), grid, cond, lo, hi, frames, a, cfg.ebn0_db, cfg.rate, sa.mode,
        notes=notes,
    )


def extrapolate_floor(
    anchor: FloorEstimate, target: ChannelConfig, max_db_step: float = 1.0
) -> FloorEstimate:
    """Re-integrate the anchor's conditional curve against another SNR's
    mean-noise density, leaving the curve itself untouched."""
    step = target.ebn0_db - anchor.ebn0_db
    if abs(step) > max_db_step:
        raise ValueError(
            f"extrapolation step {step:+.2f} dB exceeds the configured {max_db_step:.2f} dB range"
        )
    notes = list(anchor.notes)
    if step != 0.0:
        msg = (
            f"conditional curve held from {anchor.ebn0_db:.2f} dB; real floors fall faster "
            "with SNR than this local extrapolation"
        )
        warnings.warn(msg, ExtrapolationWarning, stacklevel=2)
        notes.append(msg)
    value = integrate_floor(anchor.s_grid, anchor.cond, target, anchor.a, warn=False)
    v_lo = integrate_floor(anchor.s_grid, anchor.cond_lo, target, anchor.a, warn=False)
    v_hi = integrate_floor(anchor.s_grid, anchor.cond_hi, target, anchor.a, warn=False)
    return FloorEstimate(
        value,
        (v_lo, v_hi),
        anchor.s_grid.copy(),
        anchor.cond.copy(),
        anchor.cond_lo.copy(),
        anchor.cond_hi.copy(),
        anchor.frames.copy(),
        anchor.a,
        target.ebn0_db,
        target.rate,
        anchor.mode,
        extrapolated_from=anchor.ebn0_db,
        notes=notes,
    )
