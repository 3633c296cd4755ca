"""Plain-text key=value experiment configs and the shipped presets.

Format: '[section]' headers, 'key = value' lines, '#' comments. Sections
mirror the modules: [train], [init], [annealer], [embedding], [eval].
Every run resolves its config to a flat 'section.key=value' string that
is embedded in output headers; parsing that string back reproduces the
run byte for byte.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .training import InitSpec, TrainConfig

PRESETS = ("paper_classical", "paper_forward", "paper_reverse", "paper_sparse")

_SCHEMA = {
    "train": {
        "method": str, "epochs": int, "eta": float, "alpha": float,
        "n_g": int, "cycles": int, "seed": int, "n_v": int, "n_h": int,
        "t_eff": float, "ll_every": int, "recon_every": int,
        "recon_trials": int, "recon_n_g": int, "checkpoint_every": int,
        "mask": str,
    },
    "init": {"mu": float, "sigma": float, "trunc": float},
    "annealer": {
        "sweeps_per_microsecond": float, "field_noise_sd": float,
        "coupling_noise_sd": float, "forward_anneal_us": float,
        "reverse_down_us": float, "reverse_pause_us": float,
        "reverse_up_us": float, "s_pause": float, "chain_policy": str,
    },
    "embedding": {"kind": str, "j_c": float, "use_fault_fixture": bool},
    "eval": {"bands": bool},
}

_DEFAULTS = {
    "train.method": "classical", "train.epochs": 1000, "train.eta": 0.15,
    "train.alpha": 0.32, "train.n_g": 200, "train.cycles": 150,
    "train.seed": 0, "train.n_v": 16, "train.n_h": 16,
    "train.ll_every": 10, "train.recon_every": 100,
    "train.recon_trials": 20, "train.recon_n_g": 500,
    "train.checkpoint_every": 100, "train.mask": "none",
    "init.mu": 0.0, "init.sigma": 2.0, "init.trunc": 3.0,
    "annealer.sweeps_per_microsecond": 10.0,
    "annealer.field_noise_sd": 0.0, "annealer.coupling_noise_sd": 0.0,
    "annealer.forward_anneal_us": 2.0, "annealer.reverse_down_us": 1.0,
    "annealer.reverse_pause_us": 18.0, "annealer.reverse_up_us": 1.0,
    "annealer.s_pause": 0.2, "annealer.chain_policy": "majority-vote",
    "embedding.kind": "chimera", "embedding.j_c": -1.0,
    "embedding.use_fault_fixture": True,
    "eval.bands": False,
}


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config_text(text: str) -> dict:
    """Parse and type-check config text into a flat {'sec.key': value} dict."""
    values = dict(_DEFAULTS)
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(section, f"unknown section (line {lineno})")
            continue
        if "=" not in line:
            raise ConfigError(line, f"expected key = value (line {lineno})")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if section is None:
            raise ConfigError(key, "key appears before any [section]")
        if key not in _SCHEMA[section]:
            raise ConfigError(f"{section}.{key}", "unknown key")
        typ = _SCHEMA[section][key]
        try:
            parsed = _parse_bool(val) if typ is bool else typ(val)
        except ValueError:
            raise ConfigError(f"{section}.{key}",
                              f"cannot parse {val!r} as {typ.__name__}") from None
        values[f"{section}.{key}"] = parsed
    return values


def preset_path(name: str) -> Path:
    return Path(str(resources.files("anneal_rbm") / "presets" / f"{name}.cfg"))


def load_config(name_or_path, overrides=()) -> dict:
    """Load a preset by name or a config file by path, then apply
    'section.key=value' override strings."""
    path = Path(name_or_path)
    if not path.exists() and str(name_or_path) in PRESETS:
        path = preset_path(str(name_or_path))
    if not path.exists():
        raise ConfigError(str(name_or_path), "no such config file or preset")
    values = parse_config_text(path.read_text())
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(ov, "override must look like section.key=value")
        key, _, val = ov.partition("=")
        key = key.strip()
        sec, _, base = key.partition(".")
        if sec not in _SCHEMA or base not in _SCHEMA[sec]:
            raise ConfigError(key, "unknown key")
        typ = _SCHEMA[sec][base]
        try:
            values[key] = _parse_bool(val.strip()) if typ is bool else typ(val.strip())
        except ValueError:
            raise ConfigError(key, f"cannot parse {val!r} as {typ.__name__}") from None
    return values


def render_header(values: dict) -> str:
    """Canonical one-line rendering embedded in every output file."""
    parts = []
    for key in sorted(values):
        val = values[key]
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = f"{val:.17g}"
        parts.append(f"{key}={val}")
    return " ".join(parts)


def parse_header(line: str) -> dict:
    """Inverse of `render_header` (accepts the leading '# ' and any prefix
    up to 'config:')."""
    if "config:" in line:
        line = line.split("config:", 1)[1]
    values = dict(_DEFAULTS)
    for token in line.split():
        key, _, val = token.partition("=")
        sec, _, base = key.partition(".")
        if sec not in _SCHEMA or base not in _SCHEMA[sec]:
            raise ConfigError(key, "unknown key in header")
        typ = _SCHEMA[sec][base]
        values[key] = _parse_bool(val) if typ is bool else typ(val)
    return values


def sparse_mask_80(n_v: int = 16, n_h: int = 16):
    """Deterministic banded mask with 5 hidden partners per visible unit
    (80 connections at 16+16), standing in for sparse-chip topologies."""
    import numpy as np
    mask = np.zeros((n_v, n_h), dtype=np.uint8)
    for i in range(n_v):
        for d in range(5):
            mask[i, (i + d) % n_h] = 1
    return mask


def to_train_config(values: dict) -> TrainConfig:
    """Build the TrainConfig (validating domain constraints) from a flat
    config dict."""
    from .errors import ContractViolation

    t_eff = values.get("train.t_eff")
    try:
        return TrainConfig(
            n_v=values["train.n_v"], n_h=values["train.n_h"],
            epochs=values["train.epochs"], eta=values["train.eta"],
            alpha=values["train.alpha"], method=values["train.method"],
            n_g=values["train.n_g"], cycles=values["train.cycles"],
            init=InitSpec(values["init.mu"], values["init.sigma"],
                          values["init.trunc"]),
            seed=values["train.seed"], t_eff=t_eff,
            sweeps_per_microsecond=values["annealer.sweeps_per_microsecond"],
            field_noise_sd=values["annealer.field_noise_sd"],
            coupling_noise_sd=values["annealer.coupling_noise_sd"],
            forward_anneal_us=values["annealer.forward_anneal_us"],
            reverse_steps_us=(values["annealer.reverse_down_us"],
                              values["annealer.reverse_pause_us"],
                              values["annealer.reverse_up_us"]),
            s_pause=values["annealer.s_pause"],
            chain_policy=values["annealer.chain_policy"],
            ll_every=values["train.ll_every"],
            recon_every=values["train.recon_every"],
            recon_trials=values["train.recon_trials"],
            recon_n_g=values["train.recon_n_g"],
            checkpoint_every=values["train.checkpoint_every"],
        )
    except ContractViolation as exc:
        raise ConfigError("train", str(exc)) from exc
