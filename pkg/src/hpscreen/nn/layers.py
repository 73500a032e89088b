"""Layers with explicit forward/backward, enough for the autoencoder.

Ops covered: conv, transposed conv, batch norm, leaky ReLU, sigmoid, MSE.
Each layer caches what its backward pass needs; backward(dy) returns dx and
stores parameter gradients on the Parameter objects.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from . import conv2d_backward_input, conv2d_backward_weights, conv2d_forward


class Parameter:
    """Named weight array plus its gradient and whether Adam should touch it."""

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.trainable = trainable


class Layer:
    def parameters(self) -> list[Parameter]:
        return []

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d(Layer):
    """Cross-correlation with size-preserving padding (pad = k // 2)."""

    def __init__(self, name: str, cin: int, cout: int, k: int, stride: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.stride = stride
        self.pad = k // 2
        self.w = Parameter(f"{name}.w", he_uniform(rng, (cout, cin, k, k), cin * k * k, dtype))
        self.b = Parameter(f"{name}.b", np.zeros(cout, dtype=dtype))
        self._x: np.ndarray | None = None

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._x = x
        y = conv2d_forward(x, self.w.value, self.stride, self.pad)
        return y + self.b.value[None, :, None, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._x
        self.b.grad = dy.sum(axis=(0, 2, 3))
        self.w.grad = conv2d_backward_weights(x, dy, self.stride, self.pad)
        return conv2d_backward_input(dy, self.w.value, self.stride, self.pad,
                                     x.shape[2], x.shape[3])


class ConvTranspose2d(Layer):
    """Adjoint convolution; output_padding = stride - 1 recovers exact upsizes.

    Weight layout is (cin, cout, k, k): the forward pass is the input-gradient
    of a regular convolution with that same weight, and vice versa.
    """

    def __init__(self, name: str, cin: int, cout: int, k: int, stride: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.stride = stride
        self.pad = k // 2
        self.output_padding = stride - 1
        self.w = Parameter(f"{name}.w", he_uniform(rng, (cin, cout, k, k), cin * k * k, dtype))
        self.b = Parameter(f"{name}.b", np.zeros(cout, dtype=dtype))
        self._x: np.ndarray | None = None

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def out_size(self, in_size: int) -> int:
        k = self.w.value.shape[2]
        return (in_size - 1) * self.stride - 2 * self.pad + k + self.output_padding

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._x = x
        y = conv2d_backward_input(x, self.w.value, self.stride, self.pad,
                                  self.out_size(x.shape[2]), self.out_size(x.shape[3]))
        return y + self.b.value[None, :, None, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._x
        self.b.grad = dy.sum(axis=(0, 2, 3))
        # Roles swap relative to Conv2d: dy acts as the conv input.
        self.w.grad = conv2d_backward_weights(dy, x, self.stride, self.pad)
        return conv2d_forward(dy, self.w.value, self.stride, self.pad)


class BatchNorm2d(Layer):
    """Per-channel batch norm: batch statistics in training, running at inference."""

    def __init__(self, name: str, channels: int, momentum: float = 0.1,
                 eps: float = 1e-5, dtype=np.float32):
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = Parameter(f"{name}.beta", np.zeros(channels, dtype=dtype))
        self.running_mean = Parameter(f"{name}.running_mean", np.zeros(channels, dtype=dtype),
                                      trainable=False)
        self.running_var = Parameter(f"{name}.running_var", np.ones(channels, dtype=dtype),
                                     trainable=False)
        self._cache = None

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta, self.running_mean, self.running_var]

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        g = self.gamma.value[None, :, None, None]
        b = self.beta.value[None, :, None, None]
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            count = x.shape[0] * x.shape[2] * x.shape[3]
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
            self._cache = (xhat, inv_std, count)
            m = self.momentum
            unbiased = var * count / (count - 1) if count > 1 else var
            rdtype = self.running_mean.value.dtype
            self.running_mean.value = ((1 - m) * self.running_mean.value
                                       + m * mean).astype(rdtype)
            self.running_var.value = ((1 - m) * self.running_var.value
                                      + m * unbiased).astype(rdtype)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var.value + self.eps)
            xhat = ((x - self.running_mean.value[None, :, None, None])
                    * inv_std[None, :, None, None])
        return g * xhat + b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, inv_std, count = self._cache
        self.gamma.grad = (dy * xhat).sum(axis=(0, 2, 3))
        self.beta.grad = dy.sum(axis=(0, 2, 3))
        dxhat = dy * self.gamma.value[None, :, None, None]
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (inv_std[None, :, None, None] / count
                * (count * dxhat - sum_dxhat - xhat * sum_dxhat_xhat))


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.01):
        self.slope = slope
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, self.slope * dy)


class Sigmoid(Layer):
    def __init__(self):
        self._y: np.ndarray | None = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        self._y = expit(x)
        return self._y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._y * (1.0 - self._y)


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy


def mse_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean over all elements of the squared difference."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    diff = np.asarray(x_hat, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    return float(np.mean(diff * diff))


def mse_grad(x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    """d(mse_loss)/d(x_hat)."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    return (2.0 / x.size) * (x_hat - x)
