"""Closed-form operating-regime diagnostics in the velocity/coupling plane.

Everything here is elementary arithmetic on the configuration; the
absorption solver is only used by the test suite to cross-validate these
predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonPositiveVelocity
from .model import ValidatedConfig


def penetration_length(v: float, gamma: float, omega: float) -> float:
    """Depth over which a stationary wave is absorbed: 5 v (2/gamma + gamma/omega^2)."""
    if not (v > 0.0):
        raise NonPositiveVelocity(f"v must be > 0, got {v!r}")
    if not (gamma > 0.0) or not (omega > 0.0):
        raise ValueError("penetration_length requires gamma > 0 and omega > 0")
    return 5.0 * v * (2.0 / gamma + gamma / (omega * omega))


def ridge_velocity(config: ValidatedConfig, n: int) -> float:
    """Velocity of full-excitation ridge n: L*omega / ((2n+1) pi)."""
    return config.beam_width * config.omega / ((2 * n + 1) * math.pi)


def ridge_locations(config: ValidatedConfig, n_max: int) -> list[tuple[int, float, float]]:
    """Ridges 0..n_max as (n, velocity at the config coupling, slope).

    The slope (2n+1) pi / L gives the ridge line omega = slope * v in the
    coupling/velocity plane.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    out = []
    for n in range(n_max + 1):
        slope = (2 * n + 1) * math.pi / config.beam_width
        out.append((n, ridge_velocity(config, n), slope))
    return out


def detection_window(config: ValidatedConfig, n: int) -> tuple[float, float]:
    """(window bound, packet sigma) for near-complete detection on ridge n.

    The window bound is the printed upper bound on the full velocity width
    with absorption above 99%; the packet sigma is the matched velocity
    spread, one eighth of the window.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    width = (2.0 / (math.pi * (2 * n + 1))) ** 2 * config.beam_width * config.omega / 10.0
    sigma = ridge_velocity(config, n) / (60.0 * (2 * n + 1))
    return width, sigma


def critical_temperature(beam_width: float, gamma: float, mass: float,
                         boltzmann: float = None) -> float:
    """Temperature above which the finite beam width matters.

    Uses the velocity v_L = L*gamma/10 at which the penetration length
    under strong driving equals the beam width.
    """
    from .model import CONSTANTS

    if boltzmann is None:
        boltzmann = CONSTANTS.boltzmann
    if not (beam_width > 0.0 and gamma > 0.0 and mass > 0.0):
        raise ValueError("all arguments must be > 0")
    v_l = beam_width * gamma / 10.0
    return mass * v_l * v_l / boltzmann


@dataclass(frozen=True)
class InequalityTerm:
    """One term of a regime inequality chain, with its margin."""

    name: str
    lhs: float
    rhs: float
    comparator: str   # "<<" or "<~"
    passed: bool

    @property
    def margin(self) -> float:
        """rhs/lhs; large is comfortable, below the factor is failing."""
        if self.lhs == 0.0:
            return math.inf
        return self.rhs / self.lhs


@dataclass(frozen=True)
class RegimeReport:
    """Classification of one operating point of the measurement."""

    velocity: float
    driving: str                      # "weak" | "strong"
    reflection_flag: bool             # kinetic energy at or below coupling scale
    beam_class: str                   # "semi-infinite-like" | "finite"
    penetration: float                # l (m); inf when undefined
    ridge_index: int | None
    direct_chain: tuple[InequalityTerm, ...]
    ideal_chain: tuple[InequalityTerm, ...]
    much_less_factor: float

    @property
    def direct_chain_ok(self) -> bool:
        return all(t.passed for t in self.direct_chain)

    @property
    def ideal_chain_ok(self) -> bool:
        return all(t.passed for t in self.ideal_chain)

    def to_text(self) -> str:
        lines = [
            f"velocity_mps          {self.velocity:.6g}",
            f"driving               {self.driving}",
            f"reflection_flag       {self.reflection_flag}",
            f"beam_class            {self.beam_class}",
            f"penetration_length_m  {self.penetration:.6g}",
            f"ridge_index           {self.ridge_index if self.ridge_index is not None else '-'}",
            f"much_less_factor      {self.much_less_factor:.6g}",
        ]
        for label, chain in (("direct", self.direct_chain), ("ideal", self.ideal_chain)):
            for term in chain:
                lines.append(
                    f"{label}:{term.name:<20} {term.lhs:.6g} {term.comparator} "
                    f"{term.rhs:.6g}  margin {term.margin:.3g}  "
                    f"{'pass' if term.passed else 'FAIL'}"
                )
        return "\n".join(lines)

    @staticmethod
    def csv_header() -> str:
        return (
            "velocity_mps,driving,reflection_flag,beam_class,penetration_length_m,"
            "ridge_index,direct_chain_ok,ideal_chain_ok"
        )

    def to_csv_row(self) -> str:
        ridge = self.ridge_index if self.ridge_index is not None else ""
        return (
            f"{self.velocity:.17g},{self.driving},{int(self.reflection_flag)},"
            f"{self.beam_class},{self.penetration:.17g},{ridge},"
            f"{int(self.direct_chain_ok)},{int(self.ideal_chain_ok)}"
        )


def _term(name: str, lhs: float, rhs: float, comparator: str, factor: float) -> InequalityTerm:
    if comparator == "<<":
        passed = lhs == 0.0 or rhs >= factor * lhs
    else:  # "<~": same order or smaller, no factor
        passed = lhs == 0.0 or rhs >= lhs
    return InequalityTerm(name=name, lhs=lhs, rhs=rhs, comparator=comparator, passed=passed)


def find_ridge_index(config: ValidatedConfig, v: float, n_max: int = 200) -> int | None:
    """Ridge whose half detection window contains v, if any."""
    if config.omega <= 0.0:
        return None
    est = 0.5 * (config.beam_width * config.omega / (math.pi * v) - 1.0)
    candidates = {0, max(0, int(math.floor(est))), max(0, int(math.ceil(est)))}
    for n in sorted(candidates):
        if n > n_max:
            continue
        width, _ = detection_window(config, n)
        if abs(v - ridge_velocity(config, n)) <= 0.5 * width:
            return n
    return None


def classify(
    config: ValidatedConfig,
    v: float,
    delta_t: float | None = None,
    much_less_factor: float = 10.0,
) -> RegimeReport:
    """Evaluate every regime criterion at velocity v with explicit margins.

    ``much_less_factor`` operationalizes the "much less than" comparisons;
    raising it can only turn passing terms into failing ones.
    """
    if not (v > 0.0):
        raise NonPositiveVelocity(f"v must be > 0, got {v!r}")
    hbar = config.constants.hbar
    omega, gamma = config.omega, config.gamma
    energy = 0.5 * config.mass * v * v

    driving_ratio = omega / gamma if gamma > 0.0 else math.inf
    driving = "strong" if driving_ratio > 1.0 else "weak"
    reflection = omega > 0.0 and 2.0 * energy / (hbar * omega) <= 1.0

    if gamma > 0.0 and omega > 0.0:
        pen = penetration_length(v, gamma, omega)
    else:
        pen = math.inf
    beam_class = "semi-infinite-like" if config.beam_width > pen else "finite"

    inv_omega = 1.0 / omega if omega > 0.0 else math.inf
    pump_time = inv_omega + (gamma / (omega * omega) if omega > 0.0 else math.inf)
    decay_2 = 2.0 / gamma if gamma > 0.0 else math.inf
    inv_gamma = 1.0 / gamma if gamma > 0.0 else math.inf
    transit = config.beam_width / v

    direct = [
        _term("energy_vs_pumping", hbar / energy, pump_time, "<<", much_less_factor),
        _term("pumping_vs_decay", pump_time, decay_2, "<<", much_less_factor),
        _term("decay_vs_transit", decay_2, transit / 5.0, "<<", much_less_factor),
    ]
    if delta_t is not None:
        direct.append(_term("decay_vs_packet_span", decay_2, delta_t, "<<", much_less_factor))

    ideal = [
        _term("energy_vs_coupling", hbar / energy, inv_omega, "<<", much_less_factor),
        _term("coupling_vs_transit", inv_omega, transit, "<~", much_less_factor),
        _term("transit_vs_lifetime", transit, inv_gamma, "<<", much_less_factor),
    ]

    return RegimeReport(
        velocity=v,
        driving=driving,
        reflection_flag=reflection,
        beam_class=beam_class,
        penetration=pen,
        ridge_index=find_ridge_index(config, v),
        direct_chain=tuple(direct),
        ideal_chain=tuple(ideal),
        much_less_factor=much_less_factor,
    )
