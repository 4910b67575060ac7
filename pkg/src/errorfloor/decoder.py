"""Flooding sum-product decoding in the LLR domain, batched over frames.

Check updates run in one of four modes: the reference tanh-product form
(overflow-prone, kept as a reference), an exact pairwise reduction that
cannot overflow, its two-piece linear approximation, and min-sum.
Saturation, when enabled, clamps check-node outputs only; variable nodes
and channel LLRs are never clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tanner import ParityCheckMatrix

MODES = ("pairwise", "exact-tanh", "approx", "min-sum")


class NonFiniteMessageError(FloatingPointError):
    """Raised when exact-tanh mode produces inf/nan; the tanh product
    rounds to +-1 once any input magnitude passes ~38.12."""


# tanh(x/2) lands within half an ulp of 1 for x > 55 ln 2 = 38.1230949,
# so a double-precision factor rounds to exactly 1 from there on
_ROUND_EPS = 2.0 ** -54


def _factor_deficit(x):
    """1 - tanh(|x|/2) with double-precision rounding to 1 emulated."""
    ax = np.abs(x)
    with np.errstate(over="ignore"):
        d = 2.0 / (np.exp(ax) + 1.0)
    return np.where(d < _ROUND_EPS, 0.0, d)


def _corr_exact(apb, amb):
    with np.errstate(invalid="ignore"):
        return np.log1p(np.exp(-apb)) - np.log1p(np.exp(-amb))


def _corr_approx(apb, amb):
    def piece(x):
        return np.where(x < 2.5, 0.6 - 0.24 * x, 0.0)

    return piece(apb) - piece(amb)


def _pair_reduce(a, b, corr):
    """One step of the pairwise check reduction.

    Exact form: sign(a)sign(b)min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|).
    Infinite arguments act as neutral elements (corrections vanish).
    """
    base = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    if corr is None:
        return base
    with np.errstate(invalid="ignore"):
        apb = np.abs(a + b)
        amb = np.abs(a - b)
    c = corr(apb, amb)
    inf_mask = np.isinf(a) | np.isinf(b)
    if inf_mask.any():
        c = np.where(inf_mask, 0.0, c)
    return base + c


def _sgn(x: float) -> float:
    return 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)


def _fold(inputs, corr):
    """Scalar pairwise reduction matching _pair_reduce, in plain floats."""
    acc = math.inf
    for x in inputs:
        x = float(x)
        base = _sgn(acc) * _sgn(x) * min(abs(acc), abs(x))
        if corr is None or math.isinf(acc) or math.isinf(x):
            acc = base
        else:
            acc = base + corr(abs(acc + x)) - corr(abs(acc - x))
    return acc


def _corr_exact_1(x: float) -> float:
    return math.log1p(math.exp(-x)) if x < 745.0 else 0.0


def _corr_approx_1(x: float) -> float:
    return 0.6 - 0.24 * x if x < 2.5 else 0.0


def check_update_pairwise(inputs) -> float:
    """Extrinsic check output via the exact pairwise reduction; finite
    for any finite inputs, single input returned unchanged."""
    return _fold(inputs, _corr_exact_1)


def check_update_approx(inputs) -> float:
    """Pairwise reduction with both correction terms replaced by the
    two-piece linear fit 0.6 - 0.24|x| (zero beyond |x| = 2.5)."""
    return _fold(inputs, _corr_approx_1)


def check_update_minsum(inputs) -> float:
    """Sign-product times minimum magnitude; no correction terms."""
    return _fold(inputs, None)


def check_update_exact(inputs) -> float:
    """Reference tanh-product form 2*atanh(prod tanh(x/2)).

    Factor magnitudes round to exactly 1 beyond |x| = 55 ln 2 = 38.123,
    as in any double-precision tanh product; once every factor rounds,
    the output is non-finite and callers are expected to test for it.
    Below the rounding point the deficit of the magnitude product from 1
    is tracked directly, so no precision is lost near saturation.
    """
    sign = 1.0
    eps = None
    prod = 1.0
    for x in inputs:
        ax = float(x)
        if ax < 0.0:
            sign = -sign
            ax = -ax
        if ax > 45.0:  # deficit already below the rounding point
            d = 0.0
        else:
            d = 2.0 / (math.exp(ax) + 1.0)
            if d < _ROUND_EPS:
                d = 0.0
        eps = d if eps is None else eps + d - eps * d
        prod *= 1.0 - d
    if eps is None:
        raise ValueError("need at least one input message")
    if eps == 0.0:
        return sign * math.inf
    if eps < 0.5:
        return sign * math.log((2.0 - eps) / eps)
    return sign * 2.0 * math.atanh(prod)


_CORR = {"pairwise": _corr_exact, "approx": _corr_approx, "min-sum": None}


@dataclass(frozen=True)
class DecoderConfig:
    mode: str = "pairwise"
    max_iters: int = 200
    saturation: float | None = None
    early_stop: bool = True
    ec_window: int = 12

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.saturation is not None and self.saturation <= 0:
            raise ValueError("saturation limit must be positive")


class _Layout:
    """Padded gather/scatter index tables for one parity-check matrix.

    Edges are numbered check-major; index `E` is a sentinel slot whose
    message is pinned to +inf (the neutral element of every check op).
    """

    def __init__(self, H: ParityCheckMatrix):
        dc = H.chk_degrees
        dv = H.var_degrees
        self.E = int(dc.sum())
        self.n = H.n_vars
        self.m = H.n_chks
        self.edge_var = (
            np.concatenate(H.chk_vars).astype(np.int64) if self.E else np.zeros(0, np.int64)
        )
        self.edge_chk = np.repeat(np.arange(self.m, dtype=np.int64), dc)
        off = np.concatenate([[0], np.cumsum(dc)])
        dcmax = int(dc.max(initial=1))
        dvmax = int(dv.max(initial=1))
        self.chk_eid = np.full((self.m, dcmax), self.E, dtype=np.int64)
        self.chk_var_pad = np.full((self.m, dcmax), self.n, dtype=np.int64)
        for c in range(self.m):
            self.chk_eid[c, : dc[c]] = np.arange(off[c], off[c + 1])
            self.chk_var_pad[c, : dc[c]] = H.chk_vars[c]
        self.chk_valid = self.chk_eid < self.E
        self.var_eid = np.full((self.n, dvmax), self.E, dtype=np.int64)
        fill = np.zeros(self.n, dtype=np.int64)
        for e, v in enumerate(self.edge_var):
            self.var_eid[v, fill[v]] = e
            fill[v] += 1


def _layout(H: ParityCheckMatrix) -> _Layout:
    lay = getattr(H, "_decoder_layout", None)
    if lay is None:
        lay = _Layout(H)
        H._decoder_layout = lay
    return lay


def _check_pass(v2c, lay: _Layout, mode: str) -> np.ndarray:
    """All extrinsic check outputs for a batch; returns [F, E]."""
    F = v2c.shape[0]
    ext = np.concatenate([v2c, np.full((F, 1), np.inf)], axis=1)
    M = ext[:, lay.chk_eid]  # [F, m, dcmax]
    dcmax = M.shape[2]
    if mode == "exact-tanh":
        sgn = np.where(M < 0, -1.0, 1.0)  # pads -> +1
        d = _factor_deficit(M)            # pads -> 0 (neutral factor)
        p = 1.0 - d
        ef = np.zeros_like(M)
        eb = np.zeros_like(M)
        sf = np.ones_like(M)
        sb = np.ones_like(M)
        pf = np.ones_like(M)
        pb = np.ones_like(M)
        for k in range(1, dcmax):
            ef[:, :, k] = ef[:, :, k - 1] + d[:, :, k - 1] - ef[:, :, k - 1] * d[:, :, k - 1]
            sf[:, :, k] = sf[:, :, k - 1] * sgn[:, :, k - 1]
            pf[:, :, k] = pf[:, :, k - 1] * p[:, :, k - 1]
        for k in range(dcmax - 2, -1, -1):
            eb[:, :, k] = eb[:, :, k + 1] + d[:, :, k + 1] - eb[:, :, k + 1] * d[:, :, k + 1]
            sb[:, :, k] = sb[:, :, k + 1] * sgn[:, :, k + 1]
            pb[:, :, k] = pb[:, :, k + 1] * p[:, :, k + 1]
        e = ef + eb - ef * eb
        with np.errstate(divide="ignore"):
            # deficit form near saturation, plain product elsewhere
            out = np.where(
                e < 0.5,
                np.log((2.0 - e) / np.where(e > 0.0, e, 1.0)),
                2.0 * np.arctanh(pf * pb),
            )
            out = np.where(e > 0.0, out, np.inf) * sf * sb
    else:
        corr = _CORR[mode]
        fwd = np.full_like(M, np.inf)
        bwd = np.full_like(M, np.inf)
        for k in range(1, dcmax):
            fwd[:, :, k] = _pair_reduce(fwd[:, :, k - 1], M[:, :, k - 1], corr)
        for k in range(dcmax - 2, -1, -1):
            bwd[:, :, k] = _pair_reduce(bwd[:, :, k + 1], M[:, :, k + 1], corr)
        out = _pair_reduce(fwd, bwd, corr)
    c2v = np.empty((F, lay.E))
    c2v[:, lay.chk_eid[lay.chk_valid]] = out[:, lay.chk_valid]
    return c2v


@dataclass
class IterationStats:
    iteration: int
    m_ex: float
    var_ex: float
    g_bar: float
    p_e: float
    correlation: float | None = None


class CaptureAccumulator:
    """Per-iteration statistics over all frames fed through a decoder.

    Gain uses the messages *entering* the checks at each iteration (the
    previous iteration's variable outputs), raised to d_c - 2; the
    mean/variance track check outputs after saturation.  Optional edge
    subsets restrict the gain population and designate the unsatisfied
    check outputs whose cross-frame correlation is of interest.
    """

    def __init__(self, d_c: int, n_iters: int, gain_edges=None, corr_edges=None):
        self.d_c = int(d_c)
        self.n_iters = int(n_iters)
        self.gain_edges = gain_edges
        self.corr_edges = corr_edges
        z = np.zeros(n_iters)
        self._tanh_sum = z.copy()
        self._tanh_n = z.copy()
        self._neg_sum = z.copy()
        self._neg_n = z.copy()
        self._cv_sum = z.copy()
        self._cv_sq = z.copy()
        self._cv_n = z.copy()
        self._corr_samples = [[] for _ in range(n_iters)]

    def pre_check(self, it: int, v2c: np.ndarray) -> None:
        pop = v2c if self.gain_edges is None else v2c[:, self.gain_edges]
        self._tanh_sum[it] += np.tanh(pop / 2.0).sum()
        self._tanh_n[it] += pop.size
        self._neg_sum[it] += np.count_nonzero(v2c < 0)
        self._neg_n[it] += v2c.size

    def post_check(self, it: int, c2v: np.ndarray) -> None:
        self._cv_sum[it] += c2v.sum()
        self._cv_sq[it] += (c2v * c2v).sum()
        self._cv_n[it] += c2v.size
        if self.corr_edges is not None and len(self.corr_edges) >= 2:
            self._corr_samples[it].append(c2v[:, self.corr_edges].copy())

    def results(self) -> list[IterationStats]:
        rows = []
        for it in range(self.n_iters):
            if self._cv_n[it] == 0:
                break
            tanh_mean = self._tanh_sum[it] / self._tanh_n[it]
            mean = self._cv_sum[it] / self._cv_n[it]
            var = self._cv_sq[it] / self._cv_n[it] - mean * mean
            corr = None
            if self._corr_samples[it]:
                x = np.concatenate(self._corr_samples[it], axis=0)
                cm = np.corrcoef(x, rowvar=False)
                off = cm[~np.eye(cm.shape[0], dtype=bool)]
                corr = float(np.mean(off))
            rows.append(
                IterationStats(
                    iteration=it + 1,
                    m_ex=float(mean),
                    var_ex=float(var),
                    g_bar=float(tanh_mean ** (self.d_c - 2)),
                    p_e=float(self._neg_sum[it] / self._neg_n[it]),
                    correlation=corr,
                )
            )
        return rows


@dataclass
class DecodeResult:
    hard: np.ndarray
    converged: bool
    iterations: int
    failed_set: np.ndarray
    soft: np.ndarray


@dataclass
class BatchResult:
    hard: np.ndarray        # [F, n] uint8
    converged: np.ndarray   # [F] bool
    iterations: np.ndarray  # [F] int32
    failed: np.ndarray      # [F, n] bool, not eventually correct
    state_v2c: np.ndarray | None = None
    state_idx: np.ndarray | None = None

    def failed_sets(self):
        return [np.flatnonzero(row) for row in self.failed]


def decode_batch(
    H: ParityCheckMatrix,
    llrs: np.ndarray,
    cfg: DecoderConfig,
    reference=None,
    capture: CaptureAccumulator | None = None,
    init_v2c: np.ndarray | None = None,
    return_state: bool = False,
) -> BatchResult:
    """Decode many frames at once; frames that satisfy all checks leave
    the batch early unless a capture hook needs every iteration.

    `reference` is the transmitted hard word (defaults to all-zero) used
    for the eventually-correct bookkeeping: a non-converged frame's
    failed set collects symbols wrong anywhere in the trailing
    `cfg.ec_window` iterations, a converged frame's the symbols wrong at
    exit.
    """
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    F, n = llrs.shape
    if n != H.n_vars:
        raise ValueError("LLR width does not match the code length")
    lay = _layout(H)
    ref = np.zeros(n, dtype=np.uint8) if reference is None else np.asarray(reference, dtype=np.uint8)

    early = cfg.early_stop and capture is None and not return_state

    hard_out = np.zeros((F, n), dtype=np.uint8)
    conv_out = np.zeros(F, dtype=bool)
    iters_out = np.full(F, cfg.max_iters, dtype=np.int32)
    failed_out = np.zeros((F, n), dtype=bool)

    idx = np.arange(F)
    ch = llrs
    v2c = ch[:, lay.edge_var].copy() if init_v2c is None else np.array(init_v2c, dtype=float)
    last_wrong = np.zeros((F, n), dtype=np.int32)
    first_conv = np.zeros(F, dtype=np.int32)

    sat = cfg.saturation
    for it in range(1, cfg.max_iters + 1):
        if capture is not None:
            capture.pre_check(it - 1, v2c)
        c2v = _check_pass(v2c, lay, cfg.mode)
        if cfg.mode == "exact-tanh" and not np.isfinite(c2v).all():
            raise NonFiniteMessageError(
                f"non-finite check output at iteration {it}; inputs exceeded the tanh-product range"
            )
        if sat is not None:
            np.clip(c2v, -sat, sat, out=c2v)
        if capture is not None:
            capture.post_check(it - 1, c2v)

        ext = np.concatenate([c2v, np.zeros((c2v.shape[0], 1))], axis=1)
        soft = ch + ext[:, lay.var_eid].sum(axis=2)
        v2c = soft[:, lay.edge_var] - c2v

        hard = (soft < 0).astype(np.uint8)
        wrong = hard != ref
        last_wrong[wrong] = it

        hard_ext = np.concatenate([hard, np.zeros((hard.shape[0], 1), dtype=np.uint8)], axis=1)
        parity = hard_ext[:, lay.chk_var_pad].sum(axis=2) & 1
        conv_now = ~parity.any(axis=1)
        np.copyto(first_conv, it, where=(first_conv == 0) & conv_now)

        if early and conv_now.any():
            done = np.flatnonzero(conv_now)
            gd = idx[done]
            hard_out[gd] = hard[done]
            conv_out[gd] = True
            iters_out[gd] = it
            failed_out[gd] = wrong[done]
            keep = np.flatnonzero(~conv_now)
            if keep.size == 0:
                return BatchResult(hard_out, conv_out, iters_out, failed_out)
            idx = idx[keep]
            ch = ch[keep]
            v2c = v2c[keep]
            last_wrong = last_wrong[keep]
            first_conv = first_conv[keep]
            hard = hard[keep]
            wrong = wrong[keep]
            conv_now = conv_now[keep]

    # frames still in flight after the last iteration
    lo = cfg.max_iters - cfg.ec_window + 1
    hard_out[idx] = hard
    conv_out[idx] = conv_now if not early else False
    iters_out[idx] = np.where(first_conv > 0, first_conv, cfg.max_iters)
    failed_out[idx] = np.where(conv_now[:, None], wrong, last_wrong >= max(lo, 1)) if not early \
        else last_wrong >= max(lo, 1)

    state_v2c = v2c if return_state else None
    state_idx = idx.copy() if return_state else None
    return BatchResult(hard_out, conv_out, iters_out, failed_out, state_v2c, state_idx)


def decode(H: ParityCheckMatrix, llr, cfg: DecoderConfig, reference=None) -> DecodeResult:
    """Decode a single frame; see decode_batch for the semantics."""
    llr = np.asarray(llr, dtype=float)
    res = decode_batch(H, llr[None, :], cfg, reference=reference)
    # soft values are recomputed cheaply for the single-frame API
    soft = _soft_values(H, llr, cfg)
    return DecodeResult(
        hard=res.hard[0],
        converged=bool(res.converged[0]),
        iterations=int(res.iterations[0]),
        failed_set=np.flatnonzero(res.failed[0]),
        soft=soft,
    )


def _soft_values(H, llr, cfg):
    lay = _layout(H)
    v2c = llr[None, lay.edge_var].copy()
    soft = llr[None, :].copy()
    for it in range(cfg.max_iters):
        c2v = _check_pass(v2c, lay, cfg.mode)
        if cfg.saturation is not None:
            np.clip(c2v, -cfg.saturation, cfg.saturation, out=c2v)
        ext = np.concatenate([c2v, np.zeros((1, 1))], axis=1)
        soft = llr[None, :] + ext[:, lay.var_eid].sum(axis=2)
        v2c = soft[:, lay.edge_var] - c2v
        hard = (soft < 0).astype(np.uint8)
        hard_ext = np.concatenate([hard, np.zeros((1, 1), dtype=np.uint8)], axis=1)
        if cfg.early_stop and not (hard_ext[:, lay.chk_var_pad].sum(axis=2) & 1).any():
            break
    return soft[0]


def designated_gain_edges(H: ParityCheckMatrix, var_set) -> np.ndarray:
    """Edges entering a set's degree-2 checks from outside the set."""
    from .tanner import induce

    lay = _layout(H)
    sub = induce(H, var_set)
    deg2 = set(int(c) for c, d in zip(sub.checks, sub.check_degrees) if d == 2)
    members = set(map(int, sub.variables))
    mask = np.array(
        [int(c) in deg2 and int(v) not in members for c, v in zip(lay.edge_chk, lay.edge_var)]
    )
    return np.flatnonzero(mask)


def unsatisfied_output_edges(H: ParityCheckMatrix, var_set) -> np.ndarray:
    """Edges from a set's odd-degree checks into the set (the model's
    external inputs)."""
    from .tanner import induce

    lay = _layout(H)
    sub = induce(H, var_set)
    odd = set(int(c) for c, d in zip(sub.checks, sub.check_degrees) if d % 2 == 1)
    members = set(map(int, sub.variables))
    mask = np.array(
        [int(c) in odd and int(v) in members for c, v in zip(lay.edge_chk, lay.edge_var)]
    )
    return np.flatnonzero(mask)


def run_capture(
    H: ParityCheckMatrix,
    llr_batches,
    cfg: DecoderConfig,
    d_c: int,
    designated=None,
    with_correlation: bool = False,
) -> list[IterationStats]:
    """Feed LLR batches through the decoder collecting per-iteration
    statistics; early termination is disabled so every frame contributes
    to every iteration."""
    gain_edges = designated_gain_edges(H, designated) if designated is not None else None
    corr_edges = (
        unsatisfied_output_edges(H, designated)
        if designated is not None and with_correlation
        else None
    )
    cap = CaptureAccumulator(d_c, cfg.max_iters, gain_edges, corr_edges)
    for llrs in llr_batches:
        decode_batch(H, llrs, cfg, capture=cap)
    return cap.results()


def capture_gain(H, llr_batches, cfg, d_c, designated=None) -> np.ndarray:
    """Per-iteration gain estimates; see run_capture."""
    rows = run_capture(H, llr_batches, cfg, d_c, designated=designated)
    return np.array([r.g_bar for r in rows])


def capture_correlation(H, llr_batches, cfg, d_c, designated) -> np.ndarray:
    """Per-iteration mean off-diagonal correlation among the designated
    set's unsatisfied-check outputs."""
    rows = run_capture(H, llr_batches, cfg, d_c, designated=designated, with_correlation=True)
    return np.array([np.nan if r.correlation is None else r.correlation for r in rows])
