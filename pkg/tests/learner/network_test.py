#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import numpy as np
import pytest
import torch

from hyplan.learner.network import (
    NavPPO,
    NetworkArch,
    ShapeMismatchException,
    dropout_masks,
    make_features,
    mc_forward_stats,
    softmax,
    to_batch,
)
from hyplan.world import Acc

from builders import check_gradient


def tiny_net(seed=0, **kvargs) -> NavPPO:
    torch.manual_seed(seed)
    return NavPPO(NetworkArch.tiny(**kvargs))


def test_arch():
    arch = NetworkArch()
    assert arch.conv_sizes() == [20, 9, 7]
    assert NetworkArch.tiny().conv_sizes() == [6, 4, 2]

    with pytest.raises(ValueError):
        NetworkArch(image_size=4).conv_sizes()


def test_forward_shapes():
    net = tiny_net()
    image = torch.rand(2, 8, 8, 3)
    features = torch.rand(2, 5)
    logits, value, state = net(image, features, net.zero_state(2))
    assert logits.shape == (2, 3)
    assert value.shape == (2,)
    assert state.h.shape == state.c.shape == (2, 8)

    h, c = state.numpy()
    assert h.shape == (2, 8)
    assert not state.detach().h.requires_grad

    with pytest.raises(ShapeMismatchException):
        net(torch.rand(2, 8, 8, 4), features, net.zero_state(2))

    with pytest.raises(ShapeMismatchException):
        net(image, torch.rand(2, 4), net.zero_state(2))

    with pytest.raises(ShapeMismatchException):
        net(image, features, net.zero_state(3))


def test_deterministic_without_mask():
    net = tiny_net()
    img, feat = to_batch(net, np.random.default_rng(0).random((8, 8, 3)), np.zeros(5))
    a = net(img, feat, net.zero_state())
    b = net(img, feat, net.zero_state())
    assert torch.equal(a[0], b[0])
    assert torch.equal(a[1], b[1])


def test_make_features():
    x = make_features(-200.0, None, 4.0, 8.0)
    assert x.dtype == np.float32
    assert x.tolist() == pytest.approx([-0.2, 0.0, 0.0, 0.0, 0.5])

    x = make_features(5000.0, Acc.DECELERATE, 20.0, 8.0)
    assert x.tolist() == pytest.approx([1.0, 0.0, 1.0, 0.0, 1.0])

    x = make_features(-1.0, Acc.MAINTAIN, 0.0, 8.0)
    assert x[1:4].tolist() == [0.0, 0.0, 1.0]


def test_dropout_masks():
    rng = np.random.default_rng(0)
    masks = dropout_masks(1000, 8, 0.2, rng)
    assert masks.shape == (1000, 8)
    assert set(np.unique(masks).tolist()) <= {0.0, 1.25}
    assert (masks == 0.0).mean() == pytest.approx(0.2, abs=0.02)

    assert (dropout_masks(3, 8, 0.0, rng) == 1.0).all()


def test_mc_forward_stats():
    net = tiny_net()
    rng = np.random.default_rng(0)
    image = rng.random((8, 8, 3))
    features = make_features(0.0, None, 4.0, 8.33)

    with pytest.raises(ValueError):
        mc_forward_stats(net, image, features, net.zero_state(), 1, rng)

    mean, var = mc_forward_stats(net, image, features, net.zero_state(), 20, rng)
    assert np.isfinite(mean)
    assert var >= 0.0

    # Without dropout every pass is the plain forward pass
    net = tiny_net(dropout=0.0)
    mean, var = mc_forward_stats(net, image, features, net.zero_state(), 5, rng)
    img, feat = to_batch(net, image, features)
    _, value, _ = net(img, feat, net.zero_state())
    assert var == pytest.approx(0.0, abs=1e-12)
    assert mean == pytest.approx(float(value[0]), abs=1e-6)


def test_softmax():
    p = softmax(np.array([1000.0, 1000.0, 0.0]))
    assert p.tolist() == pytest.approx([0.5, 0.5, 0.0])
    assert softmax(np.zeros(3)).sum() == pytest.approx(1.0)


GRADIENT_DRAWS = 200


def gradient_inputs(seed):
    rng = np.random.default_rng(seed)
    image = torch.as_tensor(rng.random((1, 8, 8, 3)), dtype=torch.float64)
    features = torch.as_tensor(rng.random((1, 5)), dtype=torch.float64)
    return image, features


@pytest.mark.slow
def test_value_gradient():
    net = tiny_net().double()
    for seed in range(2):
        image, features = gradient_inputs(seed)
        check_gradient(
            lambda x=image, y=features: net(x, y, net.zero_state())[1][0], net, GRADIENT_DRAWS, seed=seed
        )


@pytest.mark.slow
def test_policy_gradient():
    net = tiny_net().double()
    for seed in range(2):
        image, features = gradient_inputs(seed)
        acc = seed % 3
        check_gradient(
            lambda x=image, y=features, a=acc: torch.log_softmax(net(x, y, net.zero_state())[0], dim=1)[0, a],
            net,
            GRADIENT_DRAWS,
            seed=seed,
        )
