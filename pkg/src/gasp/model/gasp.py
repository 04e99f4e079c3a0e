"""Assembly of the full saliency network for every integration variant.

Input is a (B, T, 15, H, W) stack of standardised colour maps in modality
order IMG, SP, GF, GE, FER (three channels each). Static variants take
T = 1. The network returns spatial logits (B, 1, H, W) and, with the
directed attention module, one half-resolution inverted-stream prediction
per timestep.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from ..core import Module, ShapeError, Tensor, as_tensor, concat, split, stack
from .dam import DAM
from .layers import ALSTM, GMU, BatchNormTemporal, Conv2d, Encoder, SELayer

N_MODALITIES = 5
MAP_CHANNELS = 3
STACK_CHANNELS = N_MODALITIES * MAP_CHANNELS

STATIC_VARIANTS = ("additive", "concatenative", "alstm", "se", "gmu", "agmu", "lagmu")
SEQUENTIAL_VARIANTS = ("alstm", "rgmu", "argmu", "largmu")
VARIANTS = tuple(dict.fromkeys(STATIC_VARIANTS + SEQUENTIAL_VARIANTS))
GATED_VARIANTS = ("gmu", "agmu", "lagmu", "rgmu", "argmu", "largmu")
CONTEXT_SIZES = (1, 2, 4, 6, 8, 10, 12)
STATIC_ITERATIONS = 3


@dataclass(frozen=True)
class Widths:
    """Channel budget. ``encoder`` multiplies the encoder's 32/64/128 widths."""

    encoder: float = 1.0
    hidden: int = 32  # conv-LSTM hidden channels
    gmu: int = 32  # GMU output channels
    fusion: int = 32  # conv width of the additive / concatenative heads

    def to_dict(self) -> dict:
        return asdict(self)


# full-size channel counts; hidden and gmu are set so DAM + LARGMU has ~4.28M parameters
FULL_WIDTHS = Widths(encoder=1.0, hidden=105, gmu=105, fusion=32)
DESK_WIDTHS = Widths(encoder=0.25, hidden=16, gmu=16, fusion=16)


class ModelOutput(NamedTuple):
    logits: Tensor
    dam_preds: list[Tensor] | None


def validate(variant: str, context: int) -> str:
    """Normalise a variant id and check it against the context size."""
    v = variant.lower().replace("dam+", "").replace("dam_", "").strip()
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; valid variants: {', '.join(VARIANTS)}")
    if context not in CONTEXT_SIZES:
        raise ValueError(f"context size {context} not in {CONTEXT_SIZES}")
    if context == 1 and v not in STATIC_VARIANTS:
        raise ValueError(f"variant {v!r} is sequential and needs context > 1")
    if context > 1 and v not in SEQUENTIAL_VARIANTS:
        raise ValueError(f"variant {v!r} is static and needs context 1")
    return v


def _group_sizes(channels: int, groups: int) -> list[int]:
    return [len(g) for g in np.array_split(np.arange(channels), groups)]


class GASP(Module):
    def __init__(self, variant: str, context: int = 1, with_dam: bool = False, widths: Widths = DESK_WIDTHS, seed: int = 0):
        self.variant = validate(variant, context)
        self.context = context
        self.with_dam = with_dam
        self.widths = widths
        self.seed = seed
        self.sequential = context > 1
        rng = np.random.default_rng(seed)
        m, c = N_MODALITIES, MAP_CHANNELS

        if with_dam:
            self.dam = DAM(STACK_CHANNELS, rng)
        if self.variant == "se":
            self.se = SELayer(STACK_CHANNELS, rng)
        if self.sequential:
            self.encoders = [Encoder(rng, c, widths.encoder) for _ in range(m)]
            self.bn = BatchNormTemporal(STACK_CHANNELS)
        else:
            self.encoder = Encoder(rng, c, widths.encoder)

        v = self.variant
        if v in ("additive", "concatenative"):
            self.fuse = Conv2d(c if v == "additive" else STACK_CHANNELS, widths.fusion, 3, rng)
            head_in = widths.fusion
        elif v == "se":
            head_in = STACK_CHANNELS
        elif v == "alstm":
            self.alstm = ALSTM(STACK_CHANNELS, widths.hidden, rng)
            head_in = widths.hidden
        elif v in ("gmu", "rgmu"):
            self.gmu = GMU([c] * m, widths.gmu, rng, recurrent=v == "rgmu")
            head_in = widths.gmu
        elif v in ("agmu", "argmu"):
            # attention per modality, gated fusion, then the LSTM cell
            self.gmu = GMU([c] * m, widths.gmu, rng, recurrent=v == "argmu")
            self.alstm = ALSTM(widths.gmu, widths.hidden, rng)
            head_in = widths.hidden
        else:  # lagmu, largmu: concatenate, ALSTM, then gate channel groups
            self.alstm = ALSTM(STACK_CHANNELS, widths.hidden, rng)
            self.gmu = GMU(_group_sizes(widths.hidden, m), widths.gmu, rng, recurrent=v == "largmu")
            head_in = widths.gmu
        self.head = Conv2d(head_in, 1, 1, rng)
        self.assign_names()

    # -- plumbing ---------------------------------------------------------------
    @property
    def gated(self) -> bool:
        return self.variant in GATED_VARIANTS

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "context": self.context,
            "with_dam": self.with_dam,
            "widths": self.widths.to_dict(),
            "seed": self.seed,
        }

    def tie_sync(self) -> None:
        if self.with_dam:
            self.dam.tie_sync()

    def frozen_parameters(self):
        return [p for p in self.parameters() if p.frozen]

    def trainable_parameters(self):
        return [p for p in self.parameters() if not p.frozen]

    # -- forward -----------------------------------------------------------------
    def _encode(self, pm: Tensor, b: int, t: int, h: int, w: int) -> list[list[Tensor]]:
        """Encoder outputs as ``[timestep][modality] -> (B, 3, H, W)``."""
        m, c = N_MODALITIES, MAP_CHANNELS
        if not self.sequential:
            enc = self.encoder(pm.reshape(b * m, c, h, w)).reshape(b, m, c, h, w)
            return [[enc[:, i] for i in range(m)]]
        seq = pm.reshape(b, t, m, c, h, w)
        per_mod = [self.encoders[i](seq[:, :, i].reshape(b * t, c, h, w)).reshape(b, t, c, h, w) for i in range(m)]
        normed = self.bn(concat(per_mod, axis=2))
        return [[normed[:, s, i * c : (i + 1) * c] for i in range(m)] for s in range(t)]

    def _integrate(self, feats: list[list[Tensor]]) -> Tensor:
        v = self.variant
        if v == "additive":
            total = feats[0][0]
            for f in feats[0][1:]:
                total = total + f
            return self.fuse(total).relu()
        if v == "concatenative":
            return self.fuse(concat(feats[0], axis=1)).relu()
        if v == "se":
            return concat(feats[0], axis=1)
        if v == "gmu":
            return self.gmu(feats[0])[0]

        b, _, h, w = feats[0][0].shape
        # static variants re-attend the single frame; sequential ones read one frame per step
        steps = feats * STATIC_ITERATIONS if not self.sequential else feats
        if v == "rgmu":
            state = self.gmu.initial_state(b, h, w)
            for xs in steps:
                out, state = self.gmu(xs, state)
            return out

        lstm_state = self.alstm.initial_state(b, h, w)
        z = None
        gmu_state = self.gmu.initial_state(b, h, w) if v in ("argmu", "largmu") else None
        for xs in steps:
            if v == "alstm":
                z, lstm_state = self.alstm.step(concat(xs, axis=1), lstm_state, z)
                out = z
            elif v in ("agmu", "argmu"):
                a = self.alstm.attention.weights(z, xs[0].shape)
                fused, gmu_state = self.gmu([x * a for x in xs], gmu_state)
                z, lstm_state = self.alstm.cell(fused, lstm_state)
                out = z
            else:  # lagmu, largmu
                z, lstm_state = self.alstm.step(concat(xs, axis=1), lstm_state, z)
                groups = split(z, self.gmu.in_channels, axis=1)
                out, gmu_state = self.gmu(groups, gmu_state)
            if v in ("agmu", "lagmu"):
                gmu_state = None
        return out

    def forward(self, x) -> ModelOutput:
        x = as_tensor(x)
        if x.ndim == 4 and not self.sequential:
            x = x.reshape(x.shape[0], 1, *x.shape[1:])
        if x.ndim != 5 or x.shape[2] != STACK_CHANNELS:
            raise ShapeError(f"expected (B, T, {STACK_CHANNELS}, H, W) input, got {x.shape}")
        b, t, _, h, w = x.shape
        if t != self.context:
            raise ShapeError(f"model built for context {self.context}, got {t} timesteps")
        flat = x.reshape(b * t, STACK_CHANNELS, h, w)
        dam_preds = None
        if self.with_dam:
            flat, inv = self.dam(flat)
            inv = inv.reshape(b, t, 1, h // 2, w // 2)
            dam_preds = [inv[:, s] for s in range(t)]
        if self.variant == "se":
            flat = self.se(flat)
        feats = self._encode(flat, b, t, h, w)
        return ModelOutput(self.head(self._integrate(feats)), dam_preds)

    # -- gate recording ------------------------------------------------------------
    def record_gates(self, on: bool = True) -> None:
        if not self.gated:
            raise ValueError(f"variant {self.variant!r} has no gates")
        self.gmu.gate_log = [] if on else None


def build_model(variant: str, context: int = 1, with_dam: bool = False, widths: Widths = DESK_WIDTHS, seed: int = 0) -> GASP:
    return GASP(variant, context, with_dam, widths, seed)


def model_from_description(desc: dict) -> GASP:
    return GASP(desc["variant"], desc["context"], desc["with_dam"], Widths(**desc["widths"]), desc.get("seed", 0))
