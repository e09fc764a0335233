"""Flat key=value run configuration files.

Lines are `key = value`; blank lines and `#` comments are ignored. Every
key is typed and validated against the schema below; unknown keys are
rejected so typos fail loudly. The shipped files under configs/ document
the working sets for both games at desk and full scale.
"""

from __future__ import annotations

from .kitchen import KitchenGame, KitchenSpec
from .scheduling import SchedulingGame, SchedulingSpec
from .trainer import TrainConfig


def _int_tuple(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.replace(" ", "").split(",") if x)


_SCHEMA = {
    # environment
    "env": str,
    "K": int, "M": int, "W": int,  # kitchen
    "D": int, "p": float,  # scheduling
    # data generation
    "train_scenarios": int, "test_scenarios": int,
    "dish_fraction": float,
    "train_schedules": int, "test_schedules": int,
    # training
    "rounds": int, "round_length": int, "batch_size": int, "gamma": float,
    "lr_q": float, "lr_pi": float, "lr_f": float,
    "target_sync": int, "buffer_capacity": int,
    "hidden": _int_tuple, "activation": str, "optimizer": str,
    "beta_exec": float, "beta_train_start": float,
    "eps_start": float, "eps_end": float,
    "eval_episodes": int, "eval_mode": str, "metrics_every": int,
    "halt_patience": int, "seed": int,
}

_DEFAULTS = {
    "env": "kitchen",
    "K": 3, "M": 3, "W": 6,
    "D": 4, "p": 0.5,
    "train_scenarios": 4000, "test_scenarios": 600,
    "dish_fraction": 0.7,
    "train_schedules": 0, "test_schedules": 0,  # 0 = auto 11:5 split of 2^D
}


def parse_config(path) -> dict:
    values = dict(_DEFAULTS)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _SCHEMA:
                raise ValueError(
                    f"{path}:{lineno}: unknown key {key!r} "
                    f"(known: {', '.join(sorted(_SCHEMA))})"
                )
            try:
                values[key] = _SCHEMA[key](val)
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {e}") from e
    if values["env"] not in ("kitchen", "scheduling"):
        raise ValueError(f"env must be kitchen or scheduling, got {values['env']!r}")
    return values


def build_game(values: dict):
    if values["env"] == "kitchen":
        return KitchenGame(KitchenSpec(values["K"], values["M"], values["W"]))
    return SchedulingGame(SchedulingSpec(values["D"], values["p"]))


def build_train_config(values: dict, seed=None) -> TrainConfig:
    kwargs = {}
    for name in TrainConfig.__dataclass_fields__:
        if name in values:
            kwargs[name] = values[name]
    if seed is not None:
        kwargs["seed"] = seed
    return TrainConfig(**kwargs)


def split_kwargs(values: dict) -> dict:
    if values["env"] == "kitchen":
        return {"dish_fraction": values["dish_fraction"]}
    return {
        "train_schedules": values["train_schedules"],
        "test_schedules": values["test_schedules"],
    }
