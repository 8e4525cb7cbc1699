"""
Independent reference implementations.

These are deliberately written as plain loops so they share no code path with
the vectorized implementations they check.
"""

import math
from collections.abc import Callable, Mapping

import numpy as np


def naive_rdft(frame: np.ndarray) -> np.ndarray:
    """Non-negative-frequency DFT bins of a real frame by direct summation."""
    n = len(frame)
    out = np.zeros(n // 2 + 1, dtype=np.complex128)
    for k in range(n // 2 + 1):
        acc = 0j
        for t in range(n):
            acc += frame[t] * complex(math.cos(-2 * math.pi * k * t / n), math.sin(-2 * math.pi * k * t / n))
        out[k] = acc
    return out


def sine_window_oracle(n: int) -> np.ndarray:
    return np.array([math.sin(math.pi * (i + 0.5) / n) for i in range(n)])


def _tanh_layer(weight: np.ndarray, bias: np.ndarray, x: list[float]) -> list[float]:
    return [math.tanh(sum(weight[i, j] * x[j] for j in range(len(x))) + bias[i]) for i in range(len(bias))]


def _linear(weight: np.ndarray, bias: np.ndarray, x: list[float]) -> list[float]:
    return [sum(weight[i, j] * x[j] for j in range(len(x))) + bias[i] for i in range(len(bias))]


def mlp_encode(params: Mapping[str, np.ndarray], power: np.ndarray) -> tuple[list[float], list[float]]:
    """Encoder mean and variance of one frame, after the log-power standardisation."""
    shift, scale = params["encoder.input.shift"], params["encoder.input.scale"]
    u = [(math.log(max(p, 1e-10)) - shift[f]) / scale[f] for f, p in enumerate(power)]
    h = _tanh_layer(params["encoder.hidden.weight"], params["encoder.hidden.bias"], u)
    mean = _linear(params["encoder.mean.weight"], params["encoder.mean.bias"], h)
    logvar = _linear(params["encoder.logvar.weight"], params["encoder.logvar.bias"], h)
    return mean, [math.exp(v) for v in logvar]


def mlp_decode(params: Mapping[str, np.ndarray], z: np.ndarray) -> list[float]:
    """Decoder variances of one latent code."""
    h = _tanh_layer(params["decoder.hidden.weight"], params["decoder.hidden.bias"], list(z))
    return [math.exp(v) for v in _linear(params["decoder.logvar.weight"], params["decoder.logvar.bias"], h)]


def is_cost_oracle(V: np.ndarray, W: np.ndarray, H: np.ndarray) -> float:
    total = 0.0
    F, N = V.shape
    for f in range(F):
        for t in range(N):
            wh = sum(W[f, k] * H[k, t] for k in range(W.shape[1]))
            ratio = V[f, t] / wh
            total += ratio - math.log(ratio) - 1.0
    return total


def wiener_oracle(x: complex, speech_var: float, noise_var: float) -> tuple[complex, complex, float]:
    """Posterior means of s and n and the posterior variance for one bin."""
    total = speech_var + noise_var
    return x * speech_var / total, x * noise_var / total, speech_var * noise_var / total


def central_difference(
    loss: Callable[[Mapping[str, np.ndarray]], float],
    params: Mapping[str, np.ndarray],
    name: str,
    step: float = 1e-6,
) -> np.ndarray:
    """Numerical gradient of ``loss`` with respect to ``params[name]``."""
    base = {k: v.copy() for k, v in params.items()}
    grad = np.zeros_like(base[name])
    for idx in np.ndindex(grad.shape):
        original = base[name][idx]
        base[name][idx] = original + step
        plus = loss(base)
        base[name][idx] = original - step
        minus = loss(base)
        base[name][idx] = original
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - b| / max(|a|, |b|, floor), elementwise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale))
