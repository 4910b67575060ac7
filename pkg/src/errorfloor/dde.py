"""Discretized density evolution and its Gaussian approximation.

Densities live on a uniform LLR grid (default step 50/2047, support
+-50); the check transform applies the exact pairwise reduction as a
density operator via a precomputed quantization table, the variable
transform is plain convolution.  Decoder saturation is modeled by
sweeping tail mass onto the clamp bins after each check transform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .channel import ChannelConfig

DEFAULT_STEP = 50.0 / 2047.0
DEFAULT_HALF_BINS = 2047


def _pair_table(delta: float, half: int) -> np.ndarray:
    """Quantized pairwise check operation: entry (i, j) is the grid index
    of R(i*delta, j*delta).  |R| <= min(|a|, |b|) keeps it in range."""
    x = np.arange(-half, half + 1, dtype=float) * delta
    T = np.empty((x.size, x.size), dtype=np.int16)
    chunk = 256
    for lo in range(0, x.size, chunk):
        a = x[lo : lo + chunk, None]
        b = x[None, :]
        base = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        r = base + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
        T[lo : lo + chunk] = np.rint(r / delta).astype(np.int16)
    return T


_TABLE_CACHE: dict = {}


def _table(delta: float, half: int) -> np.ndarray:
    key = (round(delta, 12), half)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _pair_table(delta, half)
    return _TABLE_CACHE[key]


@dataclass
class Pmf:
    """Probability mass on the uniform grid i*delta, i in [-half, half]."""

    probs: np.ndarray
    delta: float = DEFAULT_STEP
    half: int = DEFAULT_HALF_BINS

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.size != 2 * self.half + 1:
            raise ValueError("pmf length must be 2*half+1")

    @property
    def grid(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1) * self.delta

    def mean(self) -> float:
        return float(self.grid @ self.probs)

    def variance(self) -> float:
        m = self.mean()
        return max(float((self.grid**2) @ self.probs - m * m), 0.0)

    def tanh_mean(self) -> float:
        return float(np.tanh(self.grid / 2.0) @ self.probs)

    def negative_mass(self) -> float:
        return float(self.probs[: self.half].sum())

    def total(self) -> float:
        return float(self.probs.sum())

    def normalized(self) -> "Pmf":
        """Rescale to unit total.  One iteration raises the total mass
        to the power (d_c - 1)(d_v - 1), so float drift in the total
        compounds exponentially unless removed each round."""
        return Pmf(self.probs / self.probs.sum(), self.delta, self.half)

    def saturate(self, limit: float) -> "Pmf":
        """Sweep all mass beyond +-limit onto the clamp bins."""
        k = int(round(limit / self.delta))
        if k >= self.half:
            return self
        p = self.probs.copy()
        c = self.half  # center index
        p[c + k] += p[c + k + 1 :].sum()
        p[c - k] += p[: c - k].sum()
        p[c + k + 1 :] = 0.0
        p[: c - k] = 0.0
        return Pmf(p, self.delta, self.half)

    def convolve(self, other: "Pmf") -> "Pmf":
        """Sum of independent variables; out-of-range mass accumulates on
        the boundary bins (the grid's own saturation)."""
        if (self.delta, self.half) != (other.delta, other.half):
            raise ValueError("incompatible grids")
        full = np.convolve(self.probs, other.probs)
        h = self.half  # full covers grid indices -2h .. +2h
        p = full[h : 3 * h + 1].copy()
        p[0] += full[:h].sum()
        p[-1] += full[3 * h + 1 :].sum()
        return Pmf(p, self.delta, self.half)

    def check_pair(self, other: "Pmf") -> "Pmf":
        """Density of R(X, Y) for independent X ~ self, Y ~ other."""
        if (self.delta, self.half) != (other.delta, other.half):
            raise ValueError("incompatible grids")
        T = _table(self.delta, self.half)
        size = 2 * self.half + 1
        out = np.zeros(size)
        chunk = 512
        for lo in range(0, size, chunk):
            hi = min(lo + chunk, size)
            w = self.probs[lo:hi, None] * other.probs[None, :]
            out += np.bincount(
                (T[lo:hi].astype(np.int64) + self.half).ravel(), weights=w.ravel(), minlength=size
            )
        return Pmf(out, self.delta, self.half)


def channel_pmf(cfg: ChannelConfig, delta: float = DEFAULT_STEP, half: int = DEFAULT_HALF_BINS) -> Pmf:
    """Quantized N(m_lambda, 2 m_lambda) channel LLR density."""
    m = cfg.mean_llr
    sd = math.sqrt(2.0 * m)
    edges = (np.arange(-half, half + 2) - 0.5) * delta
    cdf = ndtr((edges - m) / sd)
    p = np.diff(cdf)
    p[0] += cdf[0]
    p[-1] += 1.0 - cdf[-1]
    return Pmf(p, delta, half)


def check_transform(vc: Pmf, d_c: int) -> Pmf:
    """Density of a check output with d_c - 1 iid inputs."""
    if d_c < 2:
        raise ValueError("check degree must be >= 2")
    out = vc
    for _ in range(d_c - 2):
        out = out.check_pair(vc)
    return out


@dataclass
class DDEResult:
    """Per-iteration DDE path: saturated check-output stats, gains, and
    error probabilities of the messages entering the checks."""

    m_ex: np.ndarray
    var_ex: np.ndarray
    g_bar: np.ndarray
    p_e: np.ndarray
    m_vc: np.ndarray
    check_pmf: Pmf = None
    vc_pmf: Pmf = None


def dde_run(
    d_v: int,
    d_c: int,
    cfg: ChannelConfig,
    n_iters: int,
    saturation: float | None = 25.0,
    delta: float = DEFAULT_STEP,
    half: int = DEFAULT_HALF_BINS,
) -> DDEResult:
    if saturation is not None and saturation >= half * delta:
        warnings.warn(
            f"saturation {saturation:g} is beyond the grid edge {half * delta:g}; "
            "the grid boundary acts as the effective clamp",
            stacklevel=2,
        )
    ch = channel_pmf(cfg, delta, half)
    vc = ch
    m_ex, var_ex, g_bar, p_e, m_vc = [], [], [], [], []
    for _ in range(n_iters):
        g_bar.append(vc.tanh_mean() ** (d_c - 2))
        p_e.append(vc.negative_mass())
        cv = check_transform(vc, d_c)
        if saturation is not None:
            cv = cv.saturate(saturation)
        cv = cv.normalized()
        m_ex.append(cv.mean())
        var_ex.append(cv.variance())
        vc = ch
        for _ in range(d_v - 1):
            vc = vc.convolve(cv)
        vc = vc.normalized()
        m_vc.append(vc.mean())
    return DDEResult(
        np.array(m_ex), np.array(var_ex), np.array(g_bar), np.array(p_e), np.array(m_vc), cv, vc
    )


# ---------------------------------------------------------------------------
# Gaussian approximation

_SQRT_PI = math.sqrt(math.pi)


def phi(x: float) -> float:
    """phi(x) = 1 - E[tanh(u/2)] for u ~ N(x, 2x); phi(0) = 1.

    Integrates 1 - tanh(u/2) = 2 e^-u / (1 + e^-u), which is positive,
    so adaptive quadrature controls the relative error of phi itself
    even deep in the tail.  Above x = 700 the integrand underflows and
    the tight upper asymptote sqrt(pi/x) e^{-x/4} (1 - 1/(7x)) takes
    over."""
    if x < 0:
        raise ValueError("phi domain is x >= 0")
    if x == 0:
        return 1.0
    if x > 700:
        return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 1.0 / (7.0 * x))
    s = 2.0 * math.sqrt(x)

    def integrand(t):
        u = x + s * t
        if u >= 0:
            e = math.exp(-u)
            g = 2.0 * e / (1.0 + e)
        else:
            g = 2.0 / (1.0 + math.exp(u))
        return g * math.exp(-t * t)

    # the integrand's second hump sits near t = -sqrt(x)/2 (where tanh
    # transitions); make sure the range covers it for large x
    lo = min(-12.0, -0.5 * math.sqrt(x) - 12.0)
    val, _ = quad(integrand, lo, 12.0, epsabs=0.0, epsrel=1e-11, limit=400,
                  points=[-0.5 * math.sqrt(x)] if x > 100 else None)
    return val / _SQRT_PI


def phi_inv(y: float, lo: float = 1e-12, hi: float = 5000.0) -> float:
    """Inverse of phi by bisection (phi is strictly decreasing)."""
    if not 0.0 < y <= 1.0:
        raise ValueError("phi_inv domain is (0, 1]")
    if y == 1.0:
        return 0.0
    if phi(hi) > y:
        raise ValueError("y below phi(hi); raise hi")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > y:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def gaussian_de_step(m_prev: float, cfg: ChannelConfig, d_v: int, d_c: int) -> float:
    """One Gaussian-approximation DE update of the check-output mean."""
    x = cfg.mean_llr + (d_v - 1) * m_prev
    return phi_inv(1.0 - (1.0 - phi(x)) ** (d_c - 1))


def growth_threshold_regular(d_v: int, d_c: int, delta: float = 1.0) -> float:
    """Eb/N0 (dB) above which the large-mean DE growth condition
    R*Eb/N0 > ln((d_c-1)/delta) holds for the (d_v, d_c) ensemble."""
    rate = 1.0 - d_v / d_c
    return 10.0 * math.log10(math.log((d_c - 1) / delta) / rate)


def growth_threshold_pointwise(
    d_v: int,
    d_c: int,
    r: float,
    m_prev: float,
    cfg: ChannelConfig,
    delta_mode: str = "one-minus-3-over-x",
) -> bool:
    """Pointwise growth condition at mean m_prev against a set with
    spectral radius r; satisfied means DE outpaces the set's gain."""
    return pointwise_margin(d_v, d_c, r, m_prev, cfg, delta_mode) > 0


def pointwise_margin(
    d_v: int,
    d_c: int,
    r: float,
    m_prev: float,
    cfg: ChannelConfig,
    delta_mode: str = "one-minus-3-over-x",
) -> float:
    """Signed slack of the pointwise growth condition (positive:
    satisfied)."""
    eps = d_v - 1 - r
    x = cfg.mean_llr + (d_v - 1) * m_prev
    if delta_mode == "one":
        delta = 1.0
    elif delta_mode == "one-minus-3-over-x":
        delta = 1.0 - 3.0 / x
        if delta <= 0:
            return -math.inf
    else:
        raise ValueError(f"unknown delta_mode {delta_mode!r}")
    need = math.log((d_c - 1) / delta) / (1.0 + 2.0 / x) - eps * m_prev / 4.0
    return cfg.rate * cfg.ebn0 - need


def pointwise_crossing(
    d_v: int,
    d_c: int,
    r: float,
    cfg: ChannelConfig,
    delta_mode: str = "one-minus-3-over-x",
    lo: float = 0.1,
    hi: float = 500.0,
) -> float:
    """Smallest m_prev at which the pointwise condition turns on."""
    if pointwise_margin(d_v, d_c, r, lo, cfg, delta_mode) > 0:
        return lo
    if pointwise_margin(d_v, d_c, r, hi, cfg, delta_mode) <= 0:
        raise ValueError("condition never satisfied below hi")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if pointwise_margin(d_v, d_c, r, mid, cfg, delta_mode) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def growth_threshold_irregular(lambda_coeffs, rho_coeffs, delta: float = 1.0) -> float:
    """Eb/N0 (dB) for an irregular ensemble: R*Eb/N0 > sum_j rho_j
    ln((j-1)/delta).  Degree distributions are edge-perspective,
    coefficient index = degree."""
    lam = {int(d): c for d, c in lambda_coeffs.items() if c}
    rho = {int(d): c for d, c in rho_coeffs.items() if c}
    for name, dist in (("lambda", lam), ("rho", rho)):
        s = sum(dist.values())
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"{name} coefficients must sum to 1")
    rate = 1.0 - sum(c / d for d, c in rho.items()) / sum(c / d for d, c in lam.items())
    need = sum(c * math.log((d - 1) / delta) for d, c in rho.items())
    return 10.0 * math.log10(need / rate)
