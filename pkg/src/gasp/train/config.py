"""Training configuration: a flat ``key = value`` file plus overrides."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..model import CONTEXT_SIZES, DESK_WIDTHS, FULL_WIDTHS, Widths, validate
from ..synthetic import SOCIAL

WIDTH_PROFILES = {"desk": DESK_WIDTHS, "full": FULL_WIDTHS}
TIE_MODES = ("step", "phase")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "gmu"
    context: int = 1
    dam: bool = True
    iterations: int = 2000
    batch_size: int = 4
    lr: float = 1e-3
    seed: int = 0
    preset: str = "tiny"
    data_seed: int = 0
    data: str = ""  # dataset directory; empty means generate in memory
    sp_quality: float = 0.4
    ablate: tuple[str, ...] = ()
    widths: str = "desk"
    tie_mode: str = "step"
    phase_length: int = 100
    log_every: int = 50
    debug: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", validate(self.variant, self.context))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.context not in CONTEXT_SIZES:
            raise ConfigError(f"context must be one of {CONTEXT_SIZES}")
        if self.batch_size < 1 or self.iterations < 0:
            raise ConfigError("batch_size must be >= 1 and iterations >= 0")
        bad = set(self.ablate) - set(SOCIAL)
        if bad:
            raise ConfigError(f"can only ablate {SOCIAL}, got {sorted(bad)}")
        object.__setattr__(self, "ablate", tuple(m for m in SOCIAL if m in self.ablate))
        if self.widths not in WIDTH_PROFILES:
            raise ConfigError(f"widths must be one of {sorted(WIDTH_PROFILES)}")
        if self.tie_mode not in TIE_MODES:
            raise ConfigError(f"tie_mode must be one of {TIE_MODES}")
        if not 0.0 <= self.sp_quality <= 1.0:
            raise ConfigError("sp_quality must lie in [0, 1]")

    @property
    def model_widths(self) -> Widths:
        return WIDTH_PROFILES[self.widths]

    @property
    def label(self) -> str:
        return ("DAM+" if self.dam else "") + self.variant.upper()

    def with_overrides(self, **kw) -> "TrainConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = kinds[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("tuple"):
            return tuple(p.strip().upper() for p in raw.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = _coerce(key.strip(), value)
    return out


def load_config(path: str | Path | None = None, **overrides) -> TrainConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)
