# Pipeline settings, presets and the worker count
from dataclasses import asdict, dataclass, field, fields
import hashlib
import json
import os
from pathlib import Path
import tomllib

from .exceptions import ConfigError

PRESETS = {
    "near-isometric": (0.0, 0.6, 0.8),
    "non-isometric": (0.5, 0.6, 0.8),
}

# Settings that change a spectral basis; everything else is match-only
SPECTRA_FIELDS = (
    "k",
    "clip_lo_pct",
    "clip_hi_pct",
    "clip_floor",
    "smooth_iterations",
    "smooth_step",
    "lumped_mass",
    "clamp_cotangents",
    "seed",
)

DESCRIPTOR_KINDS = ("hks", "wks")


def _option(default, doc: str):
    return field(default=default, metadata={"doc": doc})


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the matching pipeline.

    Load one with :meth:`from_toml` or build it with keyword arguments;
    values are type-checked and validated on construction.
    """

    alphas: tuple[float, ...] = _option(
        PRESETS["near-isometric"], "spectral domains, each in [0, 1]"
    )
    k: int = _option(30, "eigenpairs per domain")
    clip_lo_pct: float = _option(0.4, "lower |K| clipping percentile")
    clip_hi_pct: float = _option(75.0, "upper |K| clipping percentile")
    clip_floor: float = _option(
        1e-3, "minimum clip value relative to the upper one"
    )
    smooth_iterations: int = _option(3, "Laplacian smoothing iterations")
    smooth_step: float = _option(0.5, "Laplacian smoothing step")
    lumped_mass: bool = _option(False, "diagonal (lumped) mass matrix")
    clamp_cotangents: bool = _option(
        False, "clamp negative cotangent weights to zero"
    )
    descriptor: str = _option("wks", "descriptor kind: hks or wks")
    num_descriptors: int = _option(100, "time or energy samples")
    wks_variance_scale: float = _option(7.0, "WKS width in energy steps")
    normalize_descriptors: bool = _option(
        True, "zero mean, unit variance per channel"
    )
    descriptor_step: int = _option(
        10, "every n-th channel enters the descriptor term"
    )
    w_bijectivity: float = _option(1e3, "bijectivity weight")
    w_orthogonality: float = _option(1e3, "orthogonality weight")
    w_laplacian: float = _option(1.0, "Laplacian commutativity weight")
    w_descriptor: float = _option(1e5, "descriptor commutativity weight")
    lsq_damping: float = _option(1e-8, "relative least-squares damping")
    max_iters: int = _option(500, "refinement iteration cap")
    rel_tol: float = _option(1e-7, "refinement relative decrease stop")
    max_halvings: int = _option(30, "backtracking halvings per iteration")
    cache_dir: str = _option(".sispec_cache", "basis cache directory")
    seed: int = _option(0, "seed of every random choice")
    workers: int = _option(0, "parallel domains; 0 picks automatically")

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            expected = f.type
            if f.name == "alphas":
                if isinstance(value, (str, bytes)) or not hasattr(
                    value, "__iter__"
                ):
                    raise ConfigError(f"alphas must be a list, got {value!r}")
                object.__setattr__(
                    self, "alphas", tuple(_number(a, "alphas") for a in value)
                )
            elif expected is bool:
                if not isinstance(value, bool):
                    raise ConfigError(f"{f.name} must be a boolean")
            elif expected is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{f.name} must be an integer")
            elif expected is float:
                object.__setattr__(self, f.name, _number(value, f.name))
            elif not isinstance(value, str):
                raise ConfigError(f"{f.name} must be a string")
        self._validate()

    def _validate(self):
        if not self.alphas:
            raise ConfigError("alphas must not be empty")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ConfigError(f"every alpha must lie in [0, 1]: {self.alphas}")
        if len(set(self.alphas)) != len(self.alphas):
            raise ConfigError(f"alphas repeat a value: {self.alphas}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if not 0 <= self.clip_lo_pct < self.clip_hi_pct <= 100:
            raise ConfigError(
                "need 0 <= clip_lo_pct < clip_hi_pct <= 100, got "
                f"{self.clip_lo_pct}, {self.clip_hi_pct}"
            )
        if not 0 < self.clip_floor < 1:
            raise ConfigError("clip_floor must lie in (0, 1)")
        if self.smooth_iterations < 0 or not 0 < self.smooth_step < 1:
            raise ConfigError(
                "need smooth_iterations >= 0 and 0 < smooth_step < 1"
            )
        if self.descriptor not in DESCRIPTOR_KINDS:
            raise ConfigError(
                f"descriptor must be one of {DESCRIPTOR_KINDS}, got "
                f"'{self.descriptor}'"
            )
        for name in ("num_descriptors", "descriptor_step"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.wks_variance_scale <= 0:
            raise ConfigError("wks_variance_scale must be positive")
        weights = (
            self.w_bijectivity,
            self.w_orthogonality,
            self.w_laplacian,
            self.w_descriptor,
        )
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ConfigError("loss weights must be >= 0, not all zero")
        if self.lsq_damping < 0 or self.rel_tol < 0:
            raise ConfigError("lsq_damping and rel_tol must be >= 0")
        if self.max_iters < 0 or self.max_halvings < 0 or self.workers < 0:
            raise ConfigError(
                "max_iters, max_halvings and workers must be >= 0"
            )

    @classmethod
    def from_toml(cls, path: str | Path, **overrides) -> "PipelineConfig":
        """Read a flat TOML file; ``overrides`` win over file values.

        Raises:
            ConfigError: On unknown keys, wrong types or invalid values.
        """
        path = Path(path)
        try:
            with open(path, "rb") as handle:
                values = tomllib.load(handle)
        except tomllib.TOMLDecodeError as error:
            raise ConfigError(f"{path}: {error}") from error
        values.update(overrides)
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        return cls(**values)

    def replace(self, **changes) -> "PipelineConfig":
        return self.from_dict({**asdict(self), **changes})

    def to_toml(self) -> str:
        """Flat TOML text with each setting's meaning in a comment."""
        lines = ["# sispec pipeline configuration"]
        for f in fields(self):
            default = _toml_value(f.default)
            lines.append(f"# {f.metadata['doc']} (default {default})")
            lines.append(f"{f.name} = {_toml_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def spectra_settings(self) -> dict:
        return {name: getattr(self, name) for name in SPECTRA_FIELDS}

    def digest(self) -> str:
        """Stable hash of every setting."""
        text = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return repr(value)


def parse_alphas(text: str) -> tuple[float, ...]:
    """A preset name (``near-isometric``, ``non-isometric``) or a comma
    separated list of numbers."""
    text = text.strip()
    if text in PRESETS:
        return PRESETS[text]
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(
            f"--alphas takes a preset ({', '.join(PRESETS)}) or a comma "
            f"separated list, got '{text}'"
        ) from None


def default_num_workers(n_tasks: int, requested: int = 0) -> int:
    """Worker threads for ``n_tasks`` independent jobs.

    ``SISPEC_NUM_WORKERS`` overrides ``requested``, which overrides the CPU
    count; the result never exceeds ``n_tasks``.
    """
    env = os.getenv("SISPEC_NUM_WORKERS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(
                f"SISPEC_NUM_WORKERS must be an integer, got '{env}'"
            ) from None
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, n_tasks))
