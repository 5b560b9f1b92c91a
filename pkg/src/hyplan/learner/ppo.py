#!/usr/bin/env python
# encoding: utf-8

"""Planner imitating PPO: GAE, the clipped loss and the update loop.

    J = -J_pi + c * J_V + lambda_reg * sum ||p||^2

J_pi is the clipped surrogate with rho = pi_net(acc) / pi_planner(acc) and a
detached advantage. J_V = mean(A^2), differentiated through V inside every
TD error, i.e. V regresses towards the lambda-return.
"""

import copy
from typing import NamedTuple, Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from .. import logging
from .network import LearnerException, LstmState, NavPPO

logger = logging.get_logger(__name__, logging.DEBUG)


class LengthMismatchException(LearnerException):
    """Rewards and values don't line up"""


class DegeneratePolicyException(LearnerException):
    """The planner gave zero probability to the executed action"""


class NonFiniteLossException(LearnerException):
    """NaN or inf loss; the update was rolled back"""


class PpoConfig(BaseModel):
    """Loss and optimizer settings"""

    model_config = ConfigDict(frozen=True)

    clip: float = Field(0.2, gt=0)
    value_weight: float = Field(0.5, ge=0)
    reg: float = Field(1e-5, ge=0)
    lam: float = Field(0.95, ge=0, le=1)
    gamma: float = Field(0.98, gt=0, lt=1)
    learning_rate: float = Field(3e-4, ge=0)
    minibatch: int = Field(32, ge=1)
    epochs: int = Field(4, ge=1)
    chunk: int = Field(8, ge=1)
    temperature: float = Field(0.5, gt=0)


class Transition(NamedTuple):
    """One executed step. h, c is the LSTM state *before* this step."""

    image: np.ndarray
    features: np.ndarray
    h: np.ndarray
    c: np.ndarray
    policy: np.ndarray
    acc: int
    reward: float
    terminal: bool


class TransitionBuffer:
    """Ordered transitions of one scene, plus the inputs of the state
    reached after the last step (used to bootstrap V if not terminal)."""

    def __init__(self):
        self.transitions: list[Transition] = []
        self.final: Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self.transitions)

    def add(self, transition: Transition) -> None:
        self.transitions.append(transition)

    def set_final(self, image: np.ndarray, features: np.ndarray, h: np.ndarray, c: np.ndarray):
        self.final = (image, features, h, c)

    @property
    def terminated(self) -> bool:
        return bool(self.transitions) and self.transitions[-1].terminal

    def chunks(self, size: int) -> list[range]:
        """Contiguous index ranges of at most 'size' steps"""
        n = len(self.transitions)
        return [range(i, min(i + size, n)) for i in range(0, n, size)]


def gae(
    rewards: Sequence[float],
    values: Sequence[float],
    terminals: Sequence[bool],
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Backward recursion A_t = delta_t + gamma * lam * A_{t+1}.

    'values' has one more entry than 'rewards' (the bootstrap value). A
    terminal step neither bootstraps nor propagates.
    """

    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    terminals = np.asarray(terminals, dtype=bool)
    if len(values) != len(rewards) + 1 or len(terminals) != len(rewards):
        raise LengthMismatchException(
            f"Expected len(values) == len(rewards) + 1 == len(terminals) + 1: "
            f"{len(values)}, {len(rewards)}, {len(terminals)}"
        )

    rtn = np.zeros(len(rewards))
    running = 0.0
    for t in reversed(range(len(rewards))):
        nonterminal = 0.0 if terminals[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        rtn[t] = running

    return rtn


def gae_torch(
    rewards: torch.Tensor, values: torch.Tensor, terminals: torch.Tensor, gamma: float, lam: float
) -> torch.Tensor:
    """Differentiable gae() (w.r.t. values)"""
    if len(values) != len(rewards) + 1:
        raise LengthMismatchException(f"{len(values)} values for {len(rewards)} rewards")

    nonterminal = 1.0 - terminals.to(values.dtype)
    deltas = rewards + gamma * values[1:] * nonterminal - values[:-1]
    rtn = []
    running = torch.zeros((), dtype=values.dtype)
    for t in reversed(range(len(rewards))):
        running = deltas[t] + gamma * lam * nonterminal[t] * running
        rtn.append(running)

    return torch.stack(rtn[::-1]) if rtn else values[:0]


def clipped_surrogate(rho: torch.Tensor, adv: torch.Tensor, clip: float) -> torch.Tensor:
    """min(rho * A, clip(rho, 1 - eps, 1 + eps) * A), elementwise"""
    return torch.minimum(rho * adv, torch.clamp(rho, 1.0 - clip, 1.0 + clip) * adv)


class _Batch(NamedTuple):
    images: torch.Tensor
    features: torch.Tensor
    h: torch.Tensor
    c: torch.Tensor
    policy: torch.Tensor
    acc: torch.Tensor
    rewards: torch.Tensor
    terminals: torch.Tensor


def _tensors(net: NavPPO, buffer: TransitionBuffer) -> _Batch:
    tr = buffer.transitions
    dtype = net.dtype
    return _Batch(
        torch.as_tensor(np.stack([x.image for x in tr]), dtype=dtype),
        torch.as_tensor(np.stack([x.features for x in tr]), dtype=dtype),
        torch.as_tensor(np.stack([np.ravel(x.h) for x in tr]), dtype=dtype),
        torch.as_tensor(np.stack([np.ravel(x.c) for x in tr]), dtype=dtype),
        torch.as_tensor(np.stack([x.policy for x in tr]), dtype=dtype),
        torch.as_tensor([x.acc for x in tr], dtype=torch.long),
        torch.as_tensor([x.reward for x in tr], dtype=dtype),
        torch.as_tensor([x.terminal for x in tr], dtype=torch.bool),
    )


def _run_chunk(net: NavPPO, data: _Batch, steps: range) -> tuple[torch.Tensor, torch.Tensor]:
    """Replay one chunk from its stored start state (truncated BPTT)"""
    i = steps.start
    state = LstmState(data.h[i : i + 1], data.c[i : i + 1])
    logits, values = [], []
    for t in steps:
        logit, value, state = net(data.images[t : t + 1], data.features[t : t + 1], state)
        logits.append(logit)
        values.append(value)
    return torch.cat(logits), torch.cat(values)


def _bootstrap_value(net: NavPPO, buffer: TransitionBuffer) -> torch.Tensor:
    if buffer.terminated or buffer.final is None:
        return torch.zeros(1, dtype=net.dtype)

    image, features, h, c = buffer.final
    dtype = net.dtype
    state = LstmState(
        torch.as_tensor(np.ravel(h), dtype=dtype).reshape(1, -1),
        torch.as_tensor(np.ravel(c), dtype=dtype).reshape(1, -1),
    )
    _, value, _ = net(
        torch.as_tensor(image, dtype=dtype).unsqueeze(0),
        torch.as_tensor(features, dtype=dtype).unsqueeze(0),
        state,
    )
    return value


def regularizer(net: NavPPO) -> torch.Tensor:
    return sum(torch.sum(p * p) for p in net.parameters())


def ppo_loss(
    net: NavPPO,
    buffer: TransitionBuffer,
    cfg: PpoConfig,
    chunks: None | Sequence[range] = None,
    values_all: None | torch.Tensor = None,
) -> tuple[torch.Tensor, dict[str, float]]:
    """The loss over the steps of 'chunks' (default: the whole buffer).

    Values of steps outside 'chunks' are taken from 'values_all' (detached,
    T+1 entries incl. bootstrap) when given, so that the advantage of a
    minibatch step still sees the full episode.
    """

    if not buffer.transitions:
        raise LearnerException("Empty transition buffer")

    data = _tensors(net, buffer)
    chunks = list(chunks) if chunks is not None else buffer.chunks(cfg.chunk)

    planner_prob = data.policy.gather(1, data.acc[:, None]).squeeze(1)
    if bool(torch.any(planner_prob <= 0)):
        raise DegeneratePolicyException("Planner policy is 0 for an executed action")

    index = torch.as_tensor([t for steps in chunks for t in steps], dtype=torch.long)
    results = [_run_chunk(net, data, steps) for steps in chunks]
    logits = torch.cat([x[0] for x in results])
    values_mb = torch.cat([x[1] for x in results])

    n = len(buffer)
    if values_all is None:
        values = torch.zeros(n + 1, dtype=net.dtype)
        values[-1:] = _bootstrap_value(net, buffer)
    else:
        values = values_all.detach().clone()
    values = values.index_put((index,), values_mb)

    adv_all = gae_torch(data.rewards, values, data.terminals, cfg.gamma, cfg.lam)
    adv = adv_all[index]
    adv_detached = adv.detach()

    probs = torch.softmax(logits, dim=1)
    rho = probs.gather(1, data.acc[index][:, None]).squeeze(1) / planner_prob[index]

    j_pi = clipped_surrogate(rho, adv_detached, cfg.clip).mean()
    j_v = torch.mean(adv * adv)
    reg = regularizer(net)
    loss = -j_pi + cfg.value_weight * j_v + cfg.reg * reg

    parts = {
        "loss": float(loss.detach()),
        "policy": float(j_pi.detach()),
        "value": float(j_v.detach()),
        "reg": float(reg.detach()),
    }
    return loss, parts


def loss_and_grads(
    net: NavPPO, buffer: TransitionBuffer, cfg: PpoConfig
) -> tuple[float, dict[str, torch.Tensor]]:
    """Full-buffer loss and its gradient for every named parameter"""
    loss, _ = ppo_loss(net, buffer, cfg)
    names, params = zip(*net.named_parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return float(loss.detach()), {
        name: (g if g is not None else torch.zeros_like(p))
        for name, p, g in zip(names, params, grads)
    }


@torch.no_grad()
def values_for(net: NavPPO, buffer: TransitionBuffer, cfg: PpoConfig) -> torch.Tensor:
    """Detached V for every step plus the bootstrap value (T + 1)"""
    data = _tensors(net, buffer)
    values = [_run_chunk(net, data, steps)[1] for steps in buffer.chunks(cfg.chunk)]
    return torch.cat(values + [_bootstrap_value(net, buffer)])


class PpoTrainer:
    """Owns the network and its Adam optimizer. Single threaded."""

    def __init__(self, net: NavPPO, cfg: None | PpoConfig = None, seed: int = 0):
        self.net = net
        self.cfg = cfg = cfg or PpoConfig()
        self.optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
        self.rng = np.random.default_rng(seed)
        self.updates = 0
        self.skipped = 0

    def train_update(self, buffer: TransitionBuffer) -> dict[str, float]:
        """'epochs' passes of shuffled minibatches of whole chunks"""

        if not buffer.transitions:
            raise LearnerException("Empty transition buffer")

        cfg = self.cfg
        snapshot = (copy.deepcopy(self.net.state_dict()), copy.deepcopy(self.optimizer.state_dict()))
        chunks = buffer.chunks(cfg.chunk)
        per_batch = max(1, cfg.minibatch // cfg.chunk)

        parts: dict[str, float] = {}
        for _epoch in range(cfg.epochs):
            values_all = values_for(self.net, buffer, cfg)
            order = self.rng.permutation(len(chunks))
            for i in range(0, len(order), per_batch):
                batch = [chunks[j] for j in order[i : i + per_batch]]
                loss, parts = ppo_loss(self.net, buffer, cfg, batch, values_all)
                if not torch.isfinite(loss):
                    self.net.load_state_dict(snapshot[0])
                    self.optimizer.load_state_dict(snapshot[1])
                    self.skipped += 1
                    raise NonFiniteLossException(f"Non-finite loss: {parts}")

                self.optimizer.zero_grad()
                loss.backward()
                self.optimizer.step()

        self.updates += 1
        logger.debug("PPO update %d: %s", self.updates, parts)
        return parts
