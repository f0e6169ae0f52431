"""Scenario configuration: defaults, validation, file loading, overlap resolution."""
import dataclasses
import json
import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping, NamedTuple, Optional

from src.errors import ConfigurationError, ParameterError
from src.quantum.modes import OverlapModel

logger = logging.getLogger(__name__)

# Above this the gamma modes are no longer "almost orthogonal"
GAMMA_OVERLAP_WARNING = 0.3


class Regime(str, Enum):
    INSTANTANEOUS = "instantaneous"
    RATE = "rate"


class Evolution(str, Enum):
    CORRECT = "correct"
    INGRAHAM = "ingraham"


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Physical and numerical dials of one run.

    Lengths share one unit (micrometres for the defaults). The defaults give
    s_gamma = 0 (lambda_gamma = separation / 2) and s_phi ~ 1
    (lambda_phi >> separation), the headline case.
    """

    lambda_gamma: float = 0.5
    lambda_phi: float = 1000.0
    separation: float = 1.0
    screen_distance: float = 1000.0
    screen_halfwidth: float = 2000.0
    grid_points: int = 201
    s_gamma_override: Optional[float] = None
    s_phi_override: Optional[float] = None
    regime: Regime = Regime.INSTANTANEOUS
    gamma_t: float = 1.0
    alice_pulse: bool = True
    evolution: Evolution = Evolution.CORRECT
    include_late_decay: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "regime", Regime(self.regime))
            object.__setattr__(self, "evolution", Evolution(self.evolution))
        except ValueError as e:
            raise ConfigurationError(str(e)) from e

        for name in ("lambda_gamma", "lambda_phi", "separation", "screen_distance", "screen_halfwidth"):
            value = getattr(self, name)
            if not value > 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        for name in ("s_gamma_override", "s_phi_override"):
            value = getattr(self, name)
            if value is not None and not -1.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [-1, 1], got {value}")
        if not self.gamma_t >= 0:
            raise ParameterError(f"gamma_t must be non-negative, got {self.gamma_t}")

        if isinstance(self.grid_points, bool) or int(self.grid_points) != self.grid_points:
            raise ConfigurationError(f"grid_points must be an integer, got {self.grid_points!r}")
        object.__setattr__(self, "grid_points", int(self.grid_points))
        if self.grid_points < 3 or self.grid_points % 2 == 0:
            raise ConfigurationError(
                f"grid_points must be odd and at least 3 (symmetric grid through x = 0), got {self.grid_points}"
            )
        if self.evolution is Evolution.INGRAHAM and self.regime is not Regime.INSTANTANEOUS:
            raise ConfigurationError("The ingraham evolution is only defined in the instantaneous regime")

    @property
    def effective_gamma_t(self) -> Optional[float]:
        """gamma_t in the rate regime, None (t -> infinity) when instantaneous."""
        return self.gamma_t if self.regime is Regime.RATE else None

    def to_dict(self) -> Dict[str, Any]:
        values = {}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            values[field.name] = value.value if isinstance(value, Enum) else value
        return values


class ResolvedOverlaps(NamedTuple):
    s_gamma: float
    s_phi: float


def overlap_model(override: Optional[float]) -> OverlapModel:
    """A fixed overlap when overridden, otherwise the isotropic point-source kernel."""
    return OverlapModel() if override is None else OverlapModel.fixed(override)


def resolve_overlaps(cfg: ScenarioConfig) -> ResolvedOverlaps:
    """Overlaps actually used: overrides when given, otherwise the isotropic kernel."""
    s_gamma = overlap_model(cfg.s_gamma_override).overlap(cfg.lambda_gamma, cfg.separation)
    s_phi = overlap_model(cfg.s_phi_override).overlap(cfg.lambda_phi, cfg.separation)
    if abs(s_gamma) > GAMMA_OVERLAP_WARNING:
        logger.warning(
            f"s_gamma = {s_gamma:.3f}: the gamma modes are far from orthogonal, "
            "Bob's two sources are far from distinguishable on the screen"
        )
    return ResolvedOverlaps(float(s_gamma), float(s_phi))


_ALIASES = {
    "s_phi": "s_phi_override",
    "s_gamma": "s_gamma_override",
    "late_decay": "include_late_decay",
}
_FIELDS = {field.name: field for field in dataclasses.fields(ScenarioConfig)}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in _FIELDS:
        raise ConfigurationError(f"Unknown configuration key '{key}'")
    return key


def _coerce(key: str, value: Any) -> Any:
    text = value.strip() if isinstance(value, str) else None
    try:
        if key in ("s_gamma_override", "s_phi_override"):
            if value is None or (text is not None and text.lower() in ("", "none", "null")):
                return None
            return float(value)
        if key in ("alice_pulse", "include_late_decay"):
            if isinstance(value, bool):
                return value
            if text is not None and text.lower() in _TRUE | _FALSE:
                return text.lower() in _TRUE
            raise ValueError(f"not a boolean: {value!r}")
        if key == "grid_points":
            return int(value)
        if key == "regime":
            return Regime(text if text is not None else value)
        if key == "evolution":
            return Evolution(text if text is not None else value)
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid value for '{key}': {e}") from e


def config_from_mapping(values: Mapping[str, Any], base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Overlay `values` (dash or underscore keys, strings allowed) on `base`."""
    updates = {}
    for key, value in values.items():
        canonical = _canonical_key(key)
        updates[canonical] = _coerce(canonical, value)
    return dataclasses.replace(base or ScenarioConfig(), **updates)


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON object or flat key=value lines ('#' starts a comment)."""
    if not os.path.isfile(path):
        raise ConfigurationError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()

    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Malformed JSON config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"JSON config {path} must hold an object")
        # A run manifest carries the resolved config under "config"
        if isinstance(data.get("config"), dict):
            data = data["config"]
        logger.info(f"Loaded JSON config from {path}")
        return dict(data)

    data = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{number}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        data[key.strip()] = value.strip()
    logger.info(f"Loaded key=value config from {path}")
    return data
