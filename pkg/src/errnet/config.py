"""Training configuration with flat `key = value` config-file support.

Precedence: built-in defaults < config file < command-line flags. The
desk-scale defaults are the tested path; full-scale presets (352 px,
batch 36, 30 epochs, ResNet-50-like widths) are documented but untested
at benchmark scale.
"""

from dataclasses import dataclass, replace

from .encoder import DESK_CHANNELS, FULL_SCALE_CHANNELS


@dataclass
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 50
    batch: int = 4
    input_size: int = 64
    seed: int = 0
    encoder_channels: tuple = DESK_CHANNELS
    aspp_mid_channels: int = 64
    scales: tuple = (0.75, 1.0, 1.25)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.input_size % 32:
            raise ValueError(f"input_size must be a multiple of 32, got {self.input_size}")

    @classmethod
    def full_scale(cls, **overrides):
        base = dict(epochs=30, batch=36, input_size=352, encoder_channels=FULL_SCALE_CHANNELS)
        base.update(overrides)
        return cls(**base)


def parse_config_file(path):
    """Flat `key = value` lines; blank lines and # comments ignored."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


_SIMPLE_KEYS = {
    "lr": float,
    "epochs": int,
    "batch": int,
    "input_size": int,
    "seed": int,
    "aspp.mid_channels": int,
    "scales": None,
}


def apply_overrides(cfg, overrides):
    """Overlay string key/value pairs (from file or flags) onto a config."""
    channels = list(cfg.encoder_channels)
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("encoder.c1", "encoder.c2", "encoder.c3", "encoder.c4", "encoder.c5"):
            channels[int(key[-1]) - 1] = int(value)
        elif key == "scales":
            if isinstance(value, str):
                value = tuple(float(v) for v in value.split(",") if v.strip())
            updates["scales"] = tuple(value)
        elif key == "aspp.mid_channels":
            updates["aspp_mid_channels"] = int(value)
        elif key in _SIMPLE_KEYS:
            updates[key] = _SIMPLE_KEYS[key](value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    updates["encoder_channels"] = tuple(channels)
    return replace(cfg, **updates)


def config_lines(cfg):
    """Effective configuration as flat key = value lines (echoed at startup)."""
    lines = [
        f"lr = {cfg.lr}",
        f"epochs = {cfg.epochs}",
        f"batch = {cfg.batch}",
        f"input_size = {cfg.input_size}",
        f"seed = {cfg.seed}",
    ]
    lines += [f"encoder.c{i + 1} = {c}" for i, c in enumerate(cfg.encoder_channels)]
    lines.append(f"aspp.mid_channels = {cfg.aspp_mid_channels}")
    lines.append("scales = " + ",".join(str(s) for s in cfg.scales))
    return lines
