#!/usr/bin/env python
# encoding: utf-8

"""NavPPO actor-critic network.

    image (S x S x 3) -> 3 x [conv, layer norm, relu] -> dense -> relu
    concat non-visual features (5) -> LSTM cell -> [MC dropout] -> policy (3), value (1)

Dropout is never sampled by torch. A mask is only applied when the caller
supplies one, which makes every forward pass deterministic.
"""

from typing import NamedTuple, Optional

import numpy as np
import torch
from torch import nn
from pydantic import BaseModel, ConfigDict, Field

from ..world import Acc


class LearnerException(Exception):
    """LearnerException"""


class ShapeMismatchException(LearnerException):
    """Input tensors don't match the architecture"""


class NetworkArch(BaseModel):
    """Architecture of the network. Part of every model file header."""

    model_config = ConfigDict(frozen=True)

    image_size: int = Field(84, ge=1)
    channels: int = 3
    # (filters, kernel, stride)
    convs: tuple[tuple[int, int, int], ...] = ((16, 8, 4), (32, 4, 2), (32, 3, 1))
    dense: int = 128
    features: int = 5
    hidden: int = 128
    dropout: float = Field(0.2, ge=0, lt=1)
    actions: int = 3

    @classmethod
    def tiny(cls, **kvargs) -> "NetworkArch":
        """Same structure on 8x8 images. Small enough for gradient checks."""
        args = {"image_size": 8, "convs": ((4, 3, 1), (4, 3, 1), (4, 3, 1)), "dense": 8, "hidden": 8}
        args.update(kvargs)
        return cls(**args)

    def conv_sizes(self) -> list[int]:
        """Spatial size after each conv layer"""
        size, rtn = self.image_size, []
        for _filters, kernel, stride in self.convs:
            size = (size - kernel) // stride + 1
            if size < 1:
                raise ValueError(f"Image size {self.image_size} too small for the conv stack")
            rtn.append(size)
        return rtn


class LstmState(NamedTuple):
    """Recurrent carry, each of shape (batch, hidden)"""

    h: torch.Tensor
    c: torch.Tensor

    def detach(self) -> "LstmState":
        return LstmState(self.h.detach(), self.c.detach())

    def numpy(self) -> tuple[np.ndarray, np.ndarray]:
        return self.h.detach().cpu().numpy().copy(), self.c.detach().cpu().numpy().copy()


class NavPPO(nn.Module):
    """Actor (policy head) and critic (value head) sharing one trunk"""

    def __init__(self, arch: None | NetworkArch = None):
        super().__init__()
        self.arch = arch = arch or NetworkArch()

        layers: list[nn.Module] = []
        in_channels = arch.channels
        for (filters, kernel, stride), size in zip(arch.convs, arch.conv_sizes()):
            layers += [
                nn.Conv2d(in_channels, filters, kernel, stride),
                nn.LayerNorm([filters, size, size]),
                nn.ReLU(),
            ]
            in_channels = filters

        flat = in_channels * arch.conv_sizes()[-1] ** 2
        self.conv = nn.Sequential(*layers, nn.Flatten())
        self.dense = nn.Sequential(nn.Linear(flat, arch.dense), nn.ReLU())
        self.lstm = nn.LSTMCell(arch.dense + arch.features, arch.hidden)
        self.policy_head = nn.Linear(arch.hidden, arch.actions)
        self.value_head = nn.Linear(arch.hidden, 1)

    @property
    def dtype(self) -> torch.dtype:
        return self.value_head.weight.dtype

    def zero_state(self, batch: int = 1) -> LstmState:
        zeros = torch.zeros(batch, self.arch.hidden, dtype=self.dtype)
        return LstmState(zeros, zeros.clone())

    def _check(self, image: torch.Tensor, features: torch.Tensor, state: LstmState):
        size, arch = self.arch.image_size, self.arch
        if image.dim() != 4 or tuple(image.shape[1:]) != (size, size, arch.channels):
            raise ShapeMismatchException(
                f"Expected images (B, {size}, {size}, {arch.channels}), got {tuple(image.shape)}"
            )
        batch = image.shape[0]
        if tuple(features.shape) != (batch, arch.features):
            raise ShapeMismatchException(
                f"Expected features ({batch}, {arch.features}), got {tuple(features.shape)}"
            )
        for name, x in zip(("h", "c"), state):
            if tuple(x.shape) != (batch, arch.hidden):
                raise ShapeMismatchException(
                    f"Expected LSTM {name} ({batch}, {arch.hidden}), got {tuple(x.shape)}"
                )

    def trunk(
        self, image: torch.Tensor, features: torch.Tensor, state: LstmState
    ) -> LstmState:
        """New LSTM state; images are channels-last"""
        self._check(image, features, state)
        x = self.conv(image.permute(0, 3, 1, 2))
        x = torch.cat([self.dense(x), features], dim=1)
        h, c = self.lstm(x, (state.h, state.c))
        return LstmState(h, c)

    def heads(
        self, h: torch.Tensor, mask: None | torch.Tensor = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(logits (B, 3), value (B,)); mask is already scaled by 1/(1-p)"""
        if mask is not None:
            h = h * mask
        return self.policy_head(h), self.value_head(h).squeeze(-1)

    def forward(
        self,
        image: torch.Tensor,
        features: torch.Tensor,
        state: LstmState,
        mask: None | torch.Tensor = None,
    ) -> tuple[torch.Tensor, torch.Tensor, LstmState]:
        state = self.trunk(image, features, state)
        logits, value = self.heads(state.h, mask)
        return logits, value, state


def make_features(
    prev_reward: float, prev_acc: Optional[Acc], speed: float, v_max: float
) -> np.ndarray:
    """(r / 1000, onehot(previous acc), speed / v_max); no previous acc => zeros"""
    rtn = np.zeros(5, dtype=np.float32)
    rtn[0] = np.clip(prev_reward / 1000.0, -1.0, 1.0)
    if prev_acc is not None:
        rtn[1 + int(prev_acc)] = 1.0
    rtn[4] = np.clip(speed / v_max, 0.0, 1.0)
    return rtn


def to_batch(net: NavPPO, image: np.ndarray, features: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
    """Single numpy sample -> batch of one"""
    img = torch.as_tensor(np.asarray(image), dtype=net.dtype).unsqueeze(0)
    feat = torch.as_tensor(np.asarray(features), dtype=net.dtype).unsqueeze(0)
    return img, feat


def dropout_masks(
    count: int, hidden: int, rate: float, rng: np.random.Generator
) -> np.ndarray:
    """(count, hidden) inverted dropout masks: 0 or 1/(1 - rate)"""
    if rate <= 0.0:
        return np.ones((count, hidden))
    keep = rng.random((count, hidden)) >= rate
    return keep / (1.0 - rate)


@torch.no_grad()
def mc_forward_stats(
    net: NavPPO,
    image: np.ndarray,
    features: np.ndarray,
    state: LstmState,
    passes: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Mean and unbiased variance of the value under 'passes' dropout masks.
    The trunk runs once, only the heads see the different masks."""

    if passes < 2:
        raise ValueError(f"At least 2 forward passes required: {passes}")

    img, feat = to_batch(net, image, features)
    h = net.trunk(img, feat, state).h
    masks = torch.as_tensor(dropout_masks(passes, net.arch.hidden, net.arch.dropout, rng), dtype=net.dtype)
    values = net.value_head(h * masks).squeeze(-1).double().numpy()
    return float(values.mean()), float(values.var(ddof=1))


def softmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    e = np.exp(x - np.max(x))
    return e / e.sum()
