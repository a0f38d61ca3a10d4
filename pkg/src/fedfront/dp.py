"""Gradient privatization and Renyi-DP accounting.

Training privacy comes from per-sample L2 clipping plus Gaussian noise on
the summed batch gradient (noise std sigma * C, then divided by the batch
size). The accountant tracks, per Renyi order alpha, the accumulated
divergence of the Poisson-subsampled Gaussian mechanism and converts it to
an (epsilon, delta) guarantee with the classic bound

    epsilon = min_alpha [ rdp(alpha) + ln(1/delta) / (alpha - 1) ].

Per-step divergences follow the standard sampled-Gaussian analysis: the
closed form alpha / (2 sigma^2) without subsampling, a finite binomial sum
for integer orders, and a sign-tracked two-part series for fractional
orders. The accountant assumes Poisson subsampling at rate q even though
training draws shuffled fixed-size batches; that approximation is inherited
from the usual DP-SGD tooling and is the documented semantics here.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

DEFAULT_DELTA = 1e-5

_MAX_SERIES_TERMS = 10_000
_SERIES_LOG_CUTOFF = -30.0


def default_order_grid() -> tuple[float, ...]:
    """Quarter steps near 1 where small-q optima land, integers 5..63 beyond."""
    fractional = [1.0 + 0.25 * i for i in range(1, 16)]  # 1.25 .. 4.75
    integers = [float(a) for a in range(5, 64)]
    return tuple(fractional + integers)


@dataclass(frozen=True)
class DpConfig:
    noise_multiplier: float
    max_grad_norm: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if self.noise_multiplier < 0:
            raise ValueError("noise_multiplier must be nonnegative")
        if self.max_grad_norm <= 0:
            raise ValueError("max_grad_norm must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class PrivacyAccountant:
    """Accumulated per-order Renyi divergences for one training stream."""

    orders: tuple[float, ...]
    accumulated_rdp: np.ndarray
    steps_taken: int = 0
    unbounded: bool = False

    @classmethod
    def fresh(cls, orders: tuple[float, ...] | None = None) -> "PrivacyAccountant":
        orders = default_order_grid() if orders is None else tuple(orders)
        if any(a <= 1.0 for a in orders):
            raise ValueError("Renyi orders must all exceed 1")
        return cls(orders=orders, accumulated_rdp=np.zeros(len(orders)))


@dataclass(frozen=True)
class PrivacySpend:
    epsilon: float
    delta: float
    optimal_order: float


def clip_gradient(g: np.ndarray, max_grad_norm: float) -> np.ndarray:
    """Scale g to norm at most C: g / max(1, ||g||_2 / C)."""
    if max_grad_norm <= 0:
        raise ValueError("max_grad_norm must be positive")
    g = np.asarray(g, dtype=np.float64)
    norm = float(np.linalg.norm(g))
    return g / max(1.0, norm / max_grad_norm)


def clip_rows(per_sample_grads: np.ndarray, max_grad_norm: float) -> np.ndarray:
    """Row-wise L2 clipping of a |B| x P gradient matrix."""
    if max_grad_norm <= 0:
        raise ValueError("max_grad_norm must be positive")
    g = np.asarray(per_sample_grads, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    factors = 1.0 / np.maximum(1.0, norms / max_grad_norm)
    return g * factors[:, None]


def privatize_batch(
    per_sample_grads: np.ndarray, cfg: DpConfig, rng: np.random.Generator
) -> np.ndarray:
    """Clipped, noised mean gradient: (sum_i clip(g_i, C) + z) / |B|.

    z is Gaussian with std sigma * C per coordinate; the noise draw is
    skipped entirely when sigma is zero so noise-free runs consume no rng
    state.
    """
    g = np.asarray(per_sample_grads, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 1:
        raise ValueError("per_sample_grads must be a nonempty |B| x P matrix")
    total = clip_rows(g, cfg.max_grad_norm).sum(axis=0)
    if cfg.noise_multiplier > 0:
        total = total + rng.normal(
            0.0, cfg.noise_multiplier * cfg.max_grad_norm, size=total.shape
        )
    return total / g.shape[0]


def sample_rate(batch_size: int, n_samples: int) -> float:
    if not 1 <= batch_size <= n_samples:
        raise ValueError(
            f"batch_size must lie in [1, n_samples], got {batch_size} of {n_samples}"
        )
    return batch_size / n_samples


def _log_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    lo, hi = min(a, b), max(a, b)
    return hi + math.log1p(math.exp(lo - hi))


def _log_sub(a: float, b: float) -> float:
    """log(exp(a) - exp(b)) for a >= b."""
    if b == -math.inf:
        return a
    if b > a:
        raise ValueError("log_sub requires a >= b")
    if a == b:
        return -math.inf
    return a + math.log1p(-math.exp(b - a))


def _log_erfc(x: float) -> float:
    # erfc(x) = 2 * Phi(-sqrt(2) x); log_ndtr stays accurate far in the tail.
    return math.log(2.0) + special.log_ndtr(-x * math.sqrt(2.0))


def _log_a_integer(q: float, sigma: float, alpha: int) -> float:
    log_terms = []
    log_q = math.log(q)
    log_1mq = math.log1p(-q)
    for i in range(alpha + 1):
        log_coef = (
            special.gammaln(alpha + 1)
            - special.gammaln(i + 1)
            - special.gammaln(alpha - i + 1)
        )
        log_terms.append(
            log_coef
            + i * log_q
            + (alpha - i) * log_1mq
            + (i * i - i) / (2.0 * sigma**2)
        )
    return float(special.logsumexp(log_terms))


def _log_a_fractional(q: float, sigma: float, alpha: float) -> float:
    # Split the defining integral at z0 where the two mixture components
    # balance, expand each side binomially and track term signs explicitly.
    z0 = sigma**2 * math.log(1.0 / q - 1.0) + 0.5
    log_q = math.log(q)
    log_1mq = math.log1p(-q)
    sqrt2_sigma = math.sqrt(2.0) * sigma
    log_a0 = -math.inf
    log_a1 = -math.inf
    for i in range(_MAX_SERIES_TERMS):
        coef = special.binom(alpha, i)
        if coef == 0.0:
            break
        log_coef = math.log(abs(coef))
        j = alpha - i
        log_t0 = log_coef + i * log_q + j * log_1mq
        log_t1 = log_coef + j * log_q + i * log_1mq
        log_e0 = math.log(0.5) + _log_erfc((i - z0) / sqrt2_sigma)
        log_e1 = math.log(0.5) + _log_erfc((z0 - j) / sqrt2_sigma)
        log_s0 = log_t0 + (i * i - i) / (2.0 * sigma**2) + log_e0
        log_s1 = log_t1 + (j * j - j) / (2.0 * sigma**2) + log_e1
        if coef > 0:
            log_a0 = _log_add(log_a0, log_s0)
            log_a1 = _log_add(log_a1, log_s1)
        else:
            log_a0 = _log_sub(log_a0, log_s0)
            log_a1 = _log_sub(log_a1, log_s1)
        if i > alpha and max(log_s0, log_s1) < _SERIES_LOG_CUTOFF:
            return _log_add(log_a0, log_a1)
    raise RuntimeError(
        f"subsampled-Gaussian series did not converge for q={q}, sigma={sigma}, "
        f"alpha={alpha}"
    )


def rdp_step_value(q: float, sigma: float, alpha: float) -> float:
    """Per-step Renyi divergence of the sampled Gaussian at one order."""
    if sigma <= 0:
        raise ValueError("sigma must be positive for a finite Renyi divergence")
    if not 0 < q <= 1:
        raise ValueError("sample rate must lie in (0, 1]")
    if alpha <= 1:
        raise ValueError("Renyi order must exceed 1")
    if q == 1.0:
        return alpha / (2.0 * sigma**2)
    if float(alpha).is_integer():
        log_a = _log_a_integer(q, sigma, int(alpha))
    else:
        log_a = _log_a_fractional(q, sigma, alpha)
    return max(log_a / (alpha - 1.0), 0.0)


@functools.lru_cache(maxsize=256)
def rdp_step_vector(
    q: float, sigma: float, orders: tuple[float, ...]
) -> tuple[float, ...]:
    """Per-step divergence at every order, cached per (q, sigma, grid)."""
    return tuple(rdp_step_value(q, sigma, a) for a in orders)


def accountant_step(
    acct: PrivacyAccountant, noise_multiplier: float, q: float
) -> PrivacyAccountant:
    """Compose one subsampled-Gaussian step onto the ledger (pure update).

    A zero noise multiplier marks the ledger as unbounded instead of
    raising; epsilon() then reports infinite spend.
    """
    if noise_multiplier < 0:
        raise ValueError("noise_multiplier must be nonnegative")
    if not 0 < q <= 1:
        raise ValueError("sample rate must lie in (0, 1]")
    if noise_multiplier == 0:
        return replace(acct, steps_taken=acct.steps_taken + 1, unbounded=True)
    step = np.array(rdp_step_vector(q, noise_multiplier, acct.orders))
    return replace(
        acct,
        accumulated_rdp=acct.accumulated_rdp + step,
        steps_taken=acct.steps_taken + 1,
    )


def epsilon(acct: PrivacyAccountant, delta: float) -> PrivacySpend:
    """Convert the accumulated ledger to an (epsilon, delta) guarantee."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if len(acct.orders) == 0:
        raise ValueError("accountant has an empty order grid")
    if acct.steps_taken < 1:
        raise ValueError("accountant has recorded no steps")
    if acct.unbounded:
        return PrivacySpend(epsilon=math.inf, delta=delta, optimal_order=math.nan)
    orders = np.asarray(acct.orders)
    candidates = acct.accumulated_rdp + math.log(1.0 / delta) / (orders - 1.0)
    best = int(np.argmin(candidates))
    return PrivacySpend(
        epsilon=float(candidates[best]),
        delta=delta,
        optimal_order=float(orders[best]),
    )
