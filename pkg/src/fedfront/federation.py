"""Federated training rounds: local DP-SGD with a proximal term, FedAvg join.

Every source of randomness is derived from (seed, purpose tag, client id,
round index) so results do not depend on execution order; clients may run
sequentially or in parallel and reproduce bit-identical rounds. Within one
client update the rng is consumed in a fixed order: one permutation per
epoch, then one Gaussian draw per batch (only when the noise multiplier is
positive).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ClientPartition
from .dp import (
    DpConfig,
    PrivacyAccountant,
    PrivacySpend,
    epsilon,
    privatize_batch,
    rdp_step_vector,
    sample_rate,
)
from .nn import (
    ModelArchitecture,
    ModelParams,
    TrainingConfig,
    adam_step,
    bce_loss,
    forward,
    init_adam_state,
    init_model,
    per_sample_gradients,
)

# rng stream tags; part of the determinism contract.
_TAG_CLIENT = 1
_TAG_SELECT = 2


@dataclass(frozen=True)
class ClientConfig:
    training: TrainingConfig
    dp: DpConfig
    proximal_mu: float = 0.0

    def __post_init__(self) -> None:
        if self.proximal_mu < 0:
            raise ValueError("proximal_mu must be nonnegative")


@dataclass(frozen=True)
class FederationConfig:
    num_clients: int = 10
    rounds: int = 100
    client_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.num_clients < 1:
            raise ValueError("num_clients must be at least 1")
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")
        if not 0 < self.client_fraction <= 1:
            raise ValueError("client_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class AccountantDelta:
    """Accounting advance produced by one client update: steps at fixed (sigma, q)."""

    steps: int
    noise_multiplier: float
    sample_rate: float


@dataclass
class RoundResult:
    round_index: int
    client_params: list[tuple[ModelParams, int]]
    aggregated: ModelParams
    per_client_accountants: list[PrivacyAccountant]


@dataclass
class FederationState:
    global_params: ModelParams
    round_index: int
    accountants: list[PrivacyAccountant]


@dataclass(frozen=True)
class RoundSummary:
    round_index: int
    train_loss: float


def client_rng(seed: int, client_id: int, round_index: int) -> np.random.Generator:
    """The rng stream a given client uses in a given round."""
    return np.random.default_rng(
        np.random.SeedSequence([seed, _TAG_CLIENT, client_id, round_index])
    )


def proximal_gradient(
    w: ModelParams, w_global: ModelParams, mu: float
) -> np.ndarray:
    """Gradient mu * (w - w_global) of the penalty (mu/2) ||w - w_global||^2."""
    if w.weights.shape != w_global.weights.shape:
        raise ValueError("parameter vectors differ in length")
    return mu * (w.weights - w_global.weights)


def proximal_penalty(w: ModelParams, w_global: ModelParams, mu: float) -> float:
    diff = w.weights - w_global.weights
    return 0.5 * mu * float(diff @ diff)


def client_update(
    global_params: ModelParams,
    data: ClientPartition,
    cfg: ClientConfig,
    rng: np.random.Generator,
) -> tuple[ModelParams, int, AccountantDelta]:
    """Local training per the client-side procedure.

    Runs local_epochs of shuffled fixed-size batches. Each batch takes
    per-sample loss gradients, adds the proximal pull mu * (w - w_global)
    to every row (before clipping, matching a privacy engine that sees the
    proximal term inside the loss), clips, noises, and applies Adam. The
    Adam state starts fresh; only weights arrive from the server.
    """
    n = data.n_samples
    if n < 1:
        raise ValueError("client partition is empty")
    x = data.features.rows
    y = data.labels
    batch_size = cfg.training.batch_size
    if batch_size > n:
        warnings.warn(
            f"client {data.client_id}: batch size {batch_size} exceeds partition "
            f"size {n}; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        batch_size = n
    q = sample_rate(batch_size, n)
    mu = cfg.proximal_mu

    params = global_params.with_weights(global_params.weights.copy())
    adam = init_adam_state(params.arch)
    steps = 0
    for _ in range(cfg.training.local_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            grads = per_sample_gradients(params, x[idx], y[idx])
            if mu > 0:
                grads = grads + proximal_gradient(params, global_params, mu)
            noisy = privatize_batch(grads, cfg.dp, rng)
            params, adam = adam_step(params, adam, noisy, cfg.training.learning_rate)
            steps += 1
    delta = AccountantDelta(
        steps=steps, noise_multiplier=cfg.dp.noise_multiplier, sample_rate=q
    )
    return params, n, delta


def apply_accountant_delta(
    acct: PrivacyAccountant, delta: AccountantDelta
) -> PrivacyAccountant:
    """Advance the ledger by delta.steps composed steps at fixed (sigma, q).

    The per-step divergence vector is constant for fixed (sigma, q), so the
    composition collapses to one fused multiply-add.
    """
    if delta.steps == 0:
        return acct
    if delta.noise_multiplier == 0:
        return replace(
            acct, steps_taken=acct.steps_taken + delta.steps, unbounded=True
        )
    step_vec = np.array(
        rdp_step_vector(delta.sample_rate, delta.noise_multiplier, acct.orders)
    )
    return replace(
        acct,
        accumulated_rdp=acct.accumulated_rdp + delta.steps * step_vec,
        steps_taken=acct.steps_taken + delta.steps,
    )


def aggregate(updates: Sequence[tuple[ModelParams, int]]) -> ModelParams:
    """Sample-count-weighted mean of client weight vectors."""
    if not updates:
        raise ValueError("cannot aggregate an empty update list")
    length = updates[0][0].weights.shape[0]
    total = 0
    for params, n in updates:
        if params.weights.shape[0] != length:
            raise ValueError("client parameter vectors differ in length")
        if n < 1:
            raise ValueError("aggregation weights need n_samples >= 1")
        total += n
    mixed = np.zeros(length)
    for params, n in updates:
        mixed += (n / total) * params.weights
    return updates[0][0].with_weights(mixed)


def run_round(
    state: FederationState,
    partitions: Sequence[ClientPartition],
    fed_cfg: FederationConfig,
    client_cfg: ClientConfig,
    seed: int,
) -> tuple[FederationState, RoundResult]:
    """One communication round; a pure function of state + inputs."""
    n_clients = len(partitions)
    if fed_cfg.num_clients != n_clients:
        raise ValueError(
            f"config says {fed_cfg.num_clients} clients but got {n_clients} partitions"
        )
    r = state.round_index
    if fed_cfg.client_fraction >= 1.0:
        selected = list(range(n_clients))
    else:
        n_sel = max(1, math.ceil(fed_cfg.client_fraction * n_clients))
        pick_rng = np.random.default_rng(
            np.random.SeedSequence([seed, _TAG_SELECT, r])
        )
        selected = sorted(pick_rng.choice(n_clients, size=n_sel, replace=False))

    updates: list[tuple[ModelParams, int]] = []
    accountants = list(state.accountants)
    for cid in selected:
        rng = client_rng(seed, cid, r)
        params, n, delta = client_update(
            state.global_params, partitions[cid], client_cfg, rng
        )
        updates.append((params, n))
        accountants[cid] = apply_accountant_delta(accountants[cid], delta)

    aggregated = aggregate(updates)
    new_state = FederationState(
        global_params=aggregated, round_index=r + 1, accountants=accountants
    )
    result = RoundResult(
        round_index=r,
        client_params=updates,
        aggregated=aggregated,
        per_client_accountants=list(accountants),
    )
    return new_state, result


def max_client_spend(
    accountants: Sequence[PrivacyAccountant], delta: float
) -> PrivacySpend:
    """Worst-exposed client's epsilon; zero spend if nothing was recorded."""
    spends = [
        epsilon(acct, delta) for acct in accountants if acct.steps_taken > 0
    ]
    if not spends:
        return PrivacySpend(epsilon=0.0, delta=delta, optimal_order=math.nan)
    return max(spends, key=lambda s: s.epsilon)


def run_training(
    partitions: Sequence[ClientPartition],
    fed_cfg: FederationConfig,
    client_cfg: ClientConfig,
    seed: int,
    arch: ModelArchitecture | None = None,
) -> tuple[ModelParams, list[RoundSummary], PrivacySpend]:
    """Full federated run: R rounds from a seeded initial model.

    Returns the final global weights, the per-round training-loss history of
    the aggregated model, and the maximum privacy spend over clients at the
    configured delta.
    """
    if not partitions:
        raise ValueError("need at least one client partition")
    if arch is None:
        width = partitions[0].features.rows.shape[1]
        arch = ModelArchitecture(layer_widths=(width, 64, 32, 1))
    state = FederationState(
        global_params=init_model(arch, seed),
        round_index=0,
        accountants=[PrivacyAccountant.fresh() for _ in partitions],
    )
    history: list[RoundSummary] = []
    for _ in range(fed_cfg.rounds):
        state, result = run_round(state, partitions, fed_cfg, client_cfg, seed)
        history.append(
            RoundSummary(
                round_index=result.round_index,
                train_loss=_weighted_train_loss(state.global_params, partitions),
            )
        )
    spend = max_client_spend(state.accountants, client_cfg.dp.delta)
    return state.global_params, history, spend


def _weighted_train_loss(
    params: ModelParams, partitions: Sequence[ClientPartition]
) -> float:
    total = sum(p.n_samples for p in partitions)
    loss = 0.0
    for p in partitions:
        loss += (p.n_samples / total) * bce_loss(forward(params, p.features.rows), p.labels)
    return loss


def write_manifest(path: str | Path, entries: dict[str, object]) -> None:
    """Plain key = value run manifest, one entry per line."""
    path = Path(path)
    lines = [f"{key} = {value}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
