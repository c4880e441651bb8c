"""Physical constants, atom/laser parameter containers and validation.

All quantities are stored in SI base units. Unit conversion (micrometres,
Rabi frequency in multiples of the decay rate) happens only at the config
file / CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

from .errors import (
    ConfigError,
    NegativeRate,
    NonPositiveMass,
    NonPositiveVelocity,
    NonPositiveWidth,
    UnknownConfigKey,
)


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed fundamental constants (SI)."""

    hbar: float = 1.0545718e-34       # J s
    boltzmann: float = 1.380649e-23   # J/K


CONSTANTS = PhysicalConstants()

# Standard atomic mass of cesium-133.  Not a fitted quantity: the decay
# rate below corresponds to the 852 nm Cs D2 transition.
CESIUM_MASS_KG = 2.2069e-25
CESIUM_GAMMA_PER_S = 33.3e6


@dataclass(frozen=True)
class RabiProfile:
    """Spatial coupling profile of the laser beam.

    kind:
      * ``sharp`` -- constant coupling ``omega`` on (0, L), zero outside.
      * ``gaussian`` -- ``L*omega0 * exp(-(x-x0)^2/(2 delta^2)) / (delta sqrt(2 pi))``,
        normalized so the integrated coupling equals ``L*omega0``.
      * ``tabulated`` -- piecewise-linear interpolation of (x, omega) samples.
    """

    kind: str = "sharp"
    omega0: float = 0.0          # gaussian peak-normalization rate (1/s)
    center: float = 0.0          # gaussian center x0 (m)
    width: float = 0.0           # gaussian width delta (m)
    samples: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("sharp", "gaussian", "tabulated"):
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.width <= 0.0:
                raise NonPositiveWidth("profile.delta must be > 0")
            if self.omega0 < 0.0:
                raise NegativeRate("profile.omega0 must be >= 0")
        if self.kind == "tabulated":
            xs = [x for x, _ in self.samples]
            if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise ConfigError("tabulated profile needs >= 2 strictly increasing x samples")
            if any(w < 0.0 for _, w in self.samples):
                raise NegativeRate("tabulated profile values must be >= 0")

    def value(self, x, *, beam_width: float, omega: float):
        """Evaluate the local Rabi frequency at position(s) x (SI)."""
        import numpy as np

        x = np.asarray(x, dtype=float)
        if self.kind == "sharp":
            return np.where((x > 0.0) & (x < beam_width), omega, 0.0)
        if self.kind == "gaussian":
            amp = beam_width * self.omega0 / (self.width * math.sqrt(2.0 * math.pi))
            return amp * np.exp(-((x - self.center) ** 2) / (2.0 * self.width**2))
        xs = np.array([p[0] for p in self.samples])
        ws = np.array([p[1] for p in self.samples])
        return np.interp(x, xs, ws, left=0.0, right=0.0)


@dataclass(frozen=True)
class AtomLaserConfig:
    """Atom plus laser-beam parameters, SI units throughout."""

    mass: float                  # kg
    gamma: float                 # spontaneous decay rate (1/s)
    omega: float                 # Rabi frequency (1/s); peak value for sharp profiles
    beam_width: float            # L (m)
    profile: RabiProfile = field(default_factory=RabiProfile)
    constants: PhysicalConstants = CONSTANTS


@dataclass(frozen=True)
class ValidatedConfig(AtomLaserConfig):
    """An AtomLaserConfig that passed ``validate``; immutable and shareable."""


def validate(config: AtomLaserConfig) -> ValidatedConfig:
    """Check physicality and return the validated (SI) configuration.

    Raises NonPositiveMass, NegativeRate or NonPositiveWidth naming the
    offending field.
    """
    if not (config.mass > 0.0) or not math.isfinite(config.mass):
        raise NonPositiveMass(f"mass must be > 0, got {config.mass!r}")
    if config.gamma < 0.0 or not math.isfinite(config.gamma):
        raise NegativeRate(f"gamma must be >= 0, got {config.gamma!r}")
    if config.omega < 0.0 or not math.isfinite(config.omega):
        raise NegativeRate(f"omega must be >= 0, got {config.omega!r}")
    if not (config.beam_width > 0.0) or not math.isfinite(config.beam_width):
        raise NonPositiveWidth(f"beam_width must be > 0, got {config.beam_width!r}")
    if isinstance(config, ValidatedConfig):
        return config
    return ValidatedConfig(
        mass=config.mass,
        gamma=config.gamma,
        omega=config.omega,
        beam_width=config.beam_width,
        profile=config.profile,
        constants=config.constants,
    )


def cesium_config(
    omega: float,
    beam_width: float = 5e-6,
    gamma: float = CESIUM_GAMMA_PER_S,
    profile: RabiProfile | None = None,
) -> ValidatedConfig:
    """Cesium preset (852 nm transition) with the given coupling and width."""
    return validate(
        AtomLaserConfig(
            mass=CESIUM_MASS_KG,
            gamma=gamma,
            omega=omega,
            beam_width=beam_width,
            profile=profile if profile is not None else RabiProfile(),
        )
    )


@dataclass(frozen=True)
class ScaleReport:
    """Derived kinematic scales for one incident velocity."""

    velocity: float              # m/s
    kinetic_energy: float        # J
    wavenumber: float            # 1/m
    energy_over_coupling: float  # 2E / (hbar Omega); inf when Omega = 0
    driving_ratio: float         # Omega / gamma; inf when gamma = 0
    strong_driving: bool
    beam_over_penetration: float  # L / l; 0 when l diverges
    de_broglie_wavelength: float  # 2 pi / k (m)
    rabi_wavelength: float        # 2 pi v / Omega (m); inf when Omega = 0


def derived_scales(config: ValidatedConfig, velocity: float) -> ScaleReport:
    """Pure function of (config, v): energies, wavenumbers and regime ratios."""
    if not (velocity > 0.0):
        raise NonPositiveVelocity(f"velocity must be > 0, got {velocity!r}")
    hbar = config.constants.hbar
    energy = 0.5 * config.mass * velocity * velocity
    k = config.mass * velocity / hbar
    if config.omega > 0.0:
        e_over_c = 2.0 * energy / (hbar * config.omega)
        rabi_wl = 2.0 * math.pi * velocity / config.omega
    else:
        e_over_c = math.inf
        rabi_wl = math.inf
    driving = config.omega / config.gamma if config.gamma > 0.0 else math.inf
    if config.gamma > 0.0 and config.omega > 0.0:
        from .regimes import penetration_length

        length = penetration_length(velocity, config.gamma, config.omega)
        beam_ratio = config.beam_width / length
    else:
        beam_ratio = 0.0
    return ScaleReport(
        velocity=velocity,
        kinetic_energy=energy,
        wavenumber=k,
        energy_over_coupling=e_over_c,
        driving_ratio=driving,
        strong_driving=driving > 1.0,
        beam_over_penetration=beam_ratio,
        de_broglie_wavelength=2.0 * math.pi / k,
        rabi_wavelength=rabi_wl,
    )


# --- config file format -------------------------------------------------
#
# Flat "key = value" text, '#' comments.  Typed keys; unknown keys are an
# error so that typos never silently fall back to defaults.

_SCALAR_KEYS = {
    "mass_kg",
    "gamma_per_s",
    "omega_per_s",
    "omega_in_gamma",
    "L_um",
    "profile.omega0_per_s",
    "profile.x0_um",
    "profile.delta_um",
}
_STRING_KEYS = {"profile.kind"}


def _parse_lines(lines: Iterator[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_config_text(text: str) -> ValidatedConfig:
    """Parse the flat key-value config format into a ValidatedConfig."""
    raw = _parse_lines(iter(text.splitlines()))
    values: dict[str, float] = {}
    strings: dict[str, str] = {}
    for key, value in raw.items():
        if key in _SCALAR_KEYS:
            try:
                values[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: not a number: {value!r}") from exc
        elif key in _STRING_KEYS:
            strings[key] = value
        else:
            raise UnknownConfigKey(f"unknown config key {key!r}")

    if "mass_kg" not in values:
        raise ConfigError("missing required key 'mass_kg'")
    if "gamma_per_s" not in values:
        raise ConfigError("missing required key 'gamma_per_s'")
    if "L_um" not in values:
        raise ConfigError("missing required key 'L_um'")
    gamma = values["gamma_per_s"]
    if "omega_per_s" in values and "omega_in_gamma" in values:
        raise ConfigError("give either 'omega_per_s' or 'omega_in_gamma', not both")
    if "omega_per_s" in values:
        omega = values["omega_per_s"]
    elif "omega_in_gamma" in values:
        omega = values["omega_in_gamma"] * gamma
    else:
        omega = 0.0

    kind = strings.get("profile.kind", "sharp")
    if kind == "gaussian":
        profile = RabiProfile(
            kind="gaussian",
            omega0=values.get("profile.omega0_per_s", omega),
            center=values.get("profile.x0_um", 0.0) * 1e-6,
            width=values.get("profile.delta_um", 0.0) * 1e-6,
        )
    elif kind == "sharp":
        for key in ("profile.omega0_per_s", "profile.x0_um", "profile.delta_um"):
            if key in values:
                raise ConfigError(f"key {key!r} only applies to gaussian profiles")
        profile = RabiProfile()
    else:
        raise ConfigError(f"config files support profile.kind sharp|gaussian, got {kind!r}")

    return validate(
        AtomLaserConfig(
            mass=values["mass_kg"],
            gamma=gamma,
            omega=omega,
            beam_width=values["L_um"] * 1e-6,
            profile=profile,
        )
    )


def load_config(path: str) -> ValidatedConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read())


def config_summary(config: AtomLaserConfig) -> list[str]:
    """Key=value lines (SI) describing a config, for CSV headers."""
    lines = [
        f"mass_kg = {config.mass!r}",
        f"gamma_per_s = {config.gamma!r}",
        f"omega_per_s = {config.omega!r}",
        f"L_m = {config.beam_width!r}",
        f"profile.kind = {config.profile.kind}",
    ]
    if config.profile.kind == "gaussian":
        lines += [
            f"profile.omega0_per_s = {config.profile.omega0!r}",
            f"profile.x0_m = {config.profile.center!r}",
            f"profile.delta_m = {config.profile.width!r}",
        ]
    return lines


def with_omega(config: ValidatedConfig, omega: float) -> ValidatedConfig:
    """Copy of the config with a different coupling strength."""
    if config.profile.kind == "gaussian":
        profile = replace(config.profile, omega0=omega)
        return validate(replace(config, omega=omega, profile=profile))
    return validate(replace(config, omega=omega))
