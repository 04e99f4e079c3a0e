"""Parameterised building blocks: convolutions, SE gating, encoder, recurrent cells."""
from __future__ import annotations

import numpy as np

from ..core import (
    Module,
    Parameter,
    ShapeError,
    Tensor,
    as_tensor,
    batchnorm_temporal,
    concat,
    conv2d,
    conv_transpose2d,
    linear,
    maxpool2d,
    softmax_spatial,
    split,
)


def _uniform(rng: np.random.Generator, shape: tuple, bound: float) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def scaled(channels: int, width: float) -> int:
    return max(1, int(round(channels * width)))


class Conv2d(Module):
    """3x3 (or k x k) convolution with He-uniform init unless a gain is given.

    ``gain`` switches to a variance of gain**2 / fan_in, used for the
    recurrent cells where small weights keep the state contractive.
    """

    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator, padding: int | None = None, gain: float | None = None):
        fan_in = cin * k * k
        bound = np.sqrt(6.0 / fan_in) if gain is None else gain * np.sqrt(3.0 / fan_in)
        self.weight = Parameter(_uniform(rng, (cout, cin, k, k), bound))
        self.bias = Parameter(np.zeros(cout))
        self.padding = k // 2 if padding is None else padding

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, padding=self.padding)


class ConvTranspose2d(Module):
    def __init__(self, cin: int, cout: int, k: int, stride: int, padding: int, rng: np.random.Generator):
        # fan-in seen by each output pixel of a transposed conv
        fan_in = cin * max(1, (k // stride) ** 2)
        self.weight = Parameter(_uniform(rng, (cin, cout, k, k), np.sqrt(6.0 / fan_in)))
        self.bias = Parameter(np.zeros(cout))
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return conv_transpose2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Linear(Module):
    def __init__(self, fin: int, fout: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(fin)
        self.weight = Parameter(_uniform(rng, (fout, fin), bound))
        self.bias = Parameter(_uniform(rng, (fout,), bound))

    def forward(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)


class SELayer(Module):
    """Squeeze-and-excitation: global average pool, C -> C/r -> C, sigmoid scale."""

    def __init__(self, channels: int, rng: np.random.Generator, reduction: int = 2):
        self.channels = channels
        self.fc1 = Linear(channels, max(1, channels // reduction), rng)
        self.fc2 = Linear(max(1, channels // reduction), channels, rng)
        self.forced_scale: np.ndarray | None = None

    def scale(self, x: Tensor) -> Tensor:
        """Per-sample channel scale in [0, 1], shape (B, C)."""
        x = as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"SE layer expects (B, {self.channels}, H, W), got {x.shape}")
        if self.forced_scale is not None:
            return Tensor(np.broadcast_to(self.forced_scale, (x.shape[0], self.channels)))
        squeezed = x.mean(axis=(2, 3))
        return self.fc2(self.fc1(squeezed).relu()).sigmoid()

    def forward(self, x: Tensor) -> Tensor:
        s = self.scale(x)
        return x * s.reshape(x.shape[0], self.channels, 1, 1)


class Encoder(Module):
    """Per-modality convolutional encoder-decoder; output has the input's shape.

    conv 32, conv 64, maxpool, conv 128, conv 128, deconv 128, deconv 64
    (the 2x upsampling), deconv 32, conv back to the input channels. ReLU
    between layers, none after the last.
    """

    def __init__(self, rng: np.random.Generator, channels: int = 3, width: float = 1.0):
        c32, c64, c128 = scaled(32, width), scaled(64, width), scaled(128, width)
        self.conv1 = Conv2d(channels, c32, 3, rng)
        self.conv2 = Conv2d(c32, c64, 3, rng)
        self.conv3 = Conv2d(c64, c128, 3, rng)
        self.conv4 = Conv2d(c128, c128, 3, rng)
        self.deconv1 = ConvTranspose2d(c128, c128, 3, 1, 1, rng)
        self.deconv2 = ConvTranspose2d(c128, c64, 2, 2, 0, rng)
        self.deconv3 = ConvTranspose2d(c64, c32, 3, 1, 1, rng)
        self.out = Conv2d(c32, channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        x = self.conv2(self.conv1(x).relu()).relu()
        x, _ = maxpool2d(x, 2)
        x = self.conv4(self.conv3(x).relu()).relu()
        x = self.deconv1(x).relu()
        x = self.deconv2(x).relu()
        x = self.deconv3(x).relu()
        return self.out(x)


class BatchNormTemporal(Module):
    _buffer_names = ("running_mean", "running_var")

    def __init__(self, channels: int):
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def forward(self, x: Tensor) -> Tensor:
        return batchnorm_temporal(x, self.gamma, self.beta, self.running_mean, self.running_var, self.training)


class SpatialAttention(Module):
    """``softmax_spatial(conv1x1(z_prev)) * x``, one attention map shared by all channels.

    With ``z_prev`` absent or zero the map is uniform, i.e. ``x / (H * W)``.
    """

    def __init__(self, hidden: int, rng: np.random.Generator):
        self.proj = Conv2d(hidden, 1, 1, rng, gain=0.5)

    def weights(self, z_prev: Tensor | None, shape: tuple) -> Tensor:
        b, _, h, w = shape
        if z_prev is None:
            return Tensor(np.full((b, 1, h, w), 1.0 / (h * w)))
        return softmax_spatial(self.proj(z_prev))

    def forward(self, x: Tensor, z_prev: Tensor | None) -> Tensor:
        return x * self.weights(z_prev, x.shape)


class ConvLSTMCell(Module):
    """Four-gate convolutional LSTM; one conv over ``[x, h]`` yields i, f, o, g."""

    def __init__(self, cin: int, hidden: int, rng: np.random.Generator, gain: float = 0.5):
        self.hidden = hidden
        self.gates = Conv2d(cin + hidden, 4 * hidden, 3, rng, gain=gain)
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0  # forget gate
        self.gates.bias.assign(bias)

    def initial_state(self, b: int, h: int, w: int) -> tuple[Tensor, Tensor]:
        zeros = Tensor(np.zeros((b, self.hidden, h, w)))
        return zeros, zeros

    def forward(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, tuple[Tensor, Tensor]]:
        h_prev, c_prev = state
        i, f, o, g = split(self.gates(concat([x, h_prev], axis=1)), [self.hidden] * 4, axis=1)
        c = f.sigmoid() * c_prev + i.sigmoid() * g.tanh()
        h = o.sigmoid() * c.tanh()
        return h, (h, c)


class ALSTM(Module):
    """Attentive conv-LSTM: attend the input with the previous output, then one cell step."""

    def __init__(self, cin: int, hidden: int, rng: np.random.Generator, gain: float = 0.5):
        self.attention = SpatialAttention(hidden, rng)
        self.cell = ConvLSTMCell(cin, hidden, rng, gain)

    def initial_state(self, b: int, h: int, w: int):
        return self.cell.initial_state(b, h, w)

    def step(self, x: Tensor, state, z_prev: Tensor | None):
        return self.cell(self.attention(x, z_prev), state)


class GMU(Module):
    """Convolutional gated multimodal unit, optionally recurrent.

    For each modality m: ``h_m = tanh(Wx_m * x_m [+ Uh_m * h_m_prev] + b_h)``
    and ``z_m = sigmoid(Wz_m * [x_1..x_M] [+ Uz_m * z_m_prev] + b_z)``;
    the output is ``sum_m z_m * h_m``. The M gate convolutions over the
    concatenated input are fused into one convolution.
    """

    def __init__(self, in_channels: list[int], out_channels: int, rng: np.random.Generator, recurrent: bool = False, gain: float = 0.5):
        self.in_channels = list(in_channels)
        self.m = len(in_channels)
        self.out_channels = out_channels
        self.recurrent = recurrent
        self.wx = [Conv2d(c, out_channels, 3, rng, gain=gain) for c in in_channels]
        self.wz = Conv2d(sum(in_channels), self.m * out_channels, 3, rng, gain=gain)
        if recurrent:
            self.uh = [Conv2d(out_channels, out_channels, 3, rng, gain=gain) for _ in in_channels]
            self.uz = [Conv2d(out_channels, out_channels, 3, rng, gain=gain) for _ in in_channels]
        self.forced_gates: np.ndarray | None = None
        self.gate_log: list[np.ndarray] | None = None

    def initial_state(self, b: int, h: int, w: int):
        zeros = Tensor(np.zeros((b, self.out_channels, h, w)))
        return [zeros] * self.m, [zeros] * self.m

    def forward(self, xs: list[Tensor], state=None):
        """Returns ``(h, (h_m list, z_m list))``."""
        if len(xs) != self.m:
            raise ShapeError(f"GMU expects {self.m} modality inputs, got {len(xs)}")
        if self.recurrent and state is None:
            b, _, hh, ww = xs[0].shape
            state = self.initial_state(b, hh, ww)
        gate_pre = split(self.wz(concat(xs, axis=1)), [self.out_channels] * self.m, axis=1)
        hs, zs = [], []
        for m in range(self.m):
            pre_h = self.wx[m](xs[m])
            pre_z = gate_pre[m]
            if self.recurrent:
                pre_h = pre_h + self.uh[m](state[0][m])
                pre_z = pre_z + self.uz[m](state[1][m])
            hs.append(pre_h.tanh())
            if self.forced_gates is not None:
                zs.append(Tensor(np.full(pre_z.shape, float(self.forced_gates[m]))))
            else:
                zs.append(pre_z.sigmoid())
        out = zs[0] * hs[0]
        for m in range(1, self.m):
            out = out + zs[m] * hs[m]
        if self.gate_log is not None:
            self.gate_log.append(np.array([z.data.mean() for z in zs]))
        return out, (hs, zs)
