"""Run hyper-parameters and run configuration.

Config files are UTF-8 ``key=value`` lines (``#`` comments and blank lines
allowed) whose keys mirror the HyperParams and RunConfig fields.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class HyperParams:
    """Weights and sizes shared by the loss, spectral and fusion stages."""

    lambda1: float = 0.1        # weight of the affine-deviation shape loss
    lambda2: float = 1.0        # weight of the boundary BCE loss
    lambda_affinity: float = 0.0  # weight of the color/position affinity term
    k_eig: int = 5              # eigensegments taken per image
    k_nn: int = 8               # neighbours in the color/position KNN graph
    tau_fuse: float = 0.5       # IoU threshold for replacing a region
    n_dense_max: int = 8192     # max pixel-graph size for a dense solve

    def __post_init__(self) -> None:
        if min(self.lambda1, self.lambda2, self.lambda_affinity) < 0:
            raise ValueError("loss/affinity weights must be >= 0")
        if self.k_eig < 1 or self.k_nn < 1 or self.n_dense_max < 1:
            raise ValueError("k_eig, k_nn and n_dense_max must be >= 1")
        if not 0.0 <= self.tau_fuse:
            raise ValueError("tau_fuse must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    """HyperParams plus execution context; hashed into every report."""

    hp: HyperParams = field(default_factory=HyperParams)
    out_dir: Path = Path("out")
    workers: int = 1
    seed: int = 42

    def config_hash(self) -> str:
        parts = [f"{f.name}={getattr(self.hp, f.name)!r}" for f in fields(HyperParams)]
        parts.append(f"seed={self.seed}")
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


_INT_KEYS = {"k_eig", "k_nn", "n_dense_max", "workers", "seed"}
_FLOAT_KEYS = {"lambda1", "lambda2", "lambda_affinity", "tau_fuse"}


def parse_config_file(path: str | Path) -> dict[str, object]:
    """Parse key=value lines into typed values; unknown keys are rejected."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key == "out_dir":
            values[key] = Path(value)
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def build_run_config(
    file_values: dict[str, object] | None = None, **overrides: object
) -> RunConfig:
    """Merge config-file values with explicit overrides (overrides win)."""
    merged: dict[str, object] = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    hp_kwargs = {
        f.name: merged.pop(f.name) for f in fields(HyperParams) if f.name in merged
    }
    hp = replace(HyperParams(), **hp_kwargs) if hp_kwargs else HyperParams()
    rc_kwargs = {k: merged.pop(k) for k in ("out_dir", "workers", "seed") if k in merged}
    if merged:
        raise ValueError(f"unknown config keys: {sorted(merged)}")
    return RunConfig(hp=hp, **rc_kwargs)  # type: ignore[arg-type]
