"""Transfer-matrix scattering backend for arbitrary coupling profiles.

The profile is sliced into piecewise-constant segments; a 4x4 propagator
in the (phi1, phi1', phi2, phi2') value/derivative basis maps each slice,
so coupled and uncoupled segments compose in a single basis.  For the
sharp-edged profile this reduces to one slice and serves as the
independent cross-check of the closed-form solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceWarning, EmptySupport, SingularMatching
from .model import ValidatedConfig
from .scattering import (
    ChannelWavenumbers,
    ScatteringSolution,
    internal_eigensystem,
    matching_residual,
)

DEFAULT_SLICES = 256


@dataclass(frozen=True)
class SliceDecomposition:
    """Piecewise-constant representation of a coupling profile."""

    edges: tuple[float, ...]    # n_slices + 1 strictly increasing positions (m)
    omegas: tuple[float, ...]   # constant coupling per slice (1/s)

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.omegas) + 1 or len(self.omegas) < 1:
            raise EmptySupport("decomposition needs at least one slice")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("slice edges must be strictly increasing")

    @property
    def n_slices(self) -> int:
        return len(self.omegas)


def discretize(
    profile, n_slices: int, support_cut: float = 1e-6, *, config: ValidatedConfig = None
) -> SliceDecomposition:
    """Slice a RabiProfile into equal-width midpoint-sampled segments.

    Sharp-edged profiles are represented exactly by a single slice.
    Gaussian support is truncated where the coupling falls below
    ``support_cut`` times its peak.  Requires the owning config for the
    beam width and coupling scale.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    if config is None:
        raise ValueError("discretize requires the owning config")
    L = config.beam_width
    if profile.kind == "sharp":
        return SliceDecomposition(edges=(0.0, L), omegas=(config.omega,))
    if profile.kind == "gaussian":
        if profile.omega0 <= 0.0:
            raise EmptySupport("gaussian profile has zero amplitude")
        if not (0.0 < support_cut < 1.0):
            raise ValueError("support_cut must be in (0, 1)")
        half = profile.width * math.sqrt(-2.0 * math.log(support_cut))
        lo = profile.center - half
        hi = profile.center + half
    else:  # tabulated
        xs = [x for x, _ in profile.samples]
        lo, hi = xs[0], xs[-1]
    if hi <= lo:
        raise EmptySupport("profile support is empty after truncation")
    edges = np.linspace(lo, hi, n_slices + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    omegas = profile.value(mids, beam_width=L, omega=config.omega)
    return SliceDecomposition(edges=tuple(edges.tolist()), omegas=tuple(np.asarray(omegas).tolist()))


def slice_matrix(
    omega: float, width: float, energy: float, gamma: float, mass: float, hbar: float = None
) -> np.ndarray:
    """4x4 propagator of one constant-coupling slice at energy E.

    Acts on (phi1, phi1', phi2, phi2'); zero width gives the identity.
    """
    from .model import CONSTANTS

    if hbar is None:
        hbar = CONSTANTS.hbar
    if width < 0.0:
        raise ValueError("width must be >= 0")
    if not (energy > 0.0):
        raise ValueError("energy must be > 0")
    k = math.sqrt(2.0 * mass * energy) / hbar
    return kernels.slice_propagator(np.array([k]), omega, width, gamma, mass, hbar)[0]


def transfer_rows(k, decomp: SliceDecomposition, config: ValidatedConfig) -> np.ndarray:
    """Batched transfer-matrix amplitudes: (nk, 4) rows [R1, R2, T1, T2]."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return kernels.transfer_solve(
        k,
        np.asarray(decomp.edges),
        np.asarray(decomp.omegas),
        config.gamma,
        config.mass,
        config.constants.hbar,
    )


def solve_profile(
    k: float,
    config: ValidatedConfig,
    n_slices: int = DEFAULT_SLICES,
    support_cut: float = 1e-6,
    check_convergence: bool = False,
) -> ScatteringSolution:
    """Scattering solution for the configured profile via transfer matrices.

    With ``check_convergence`` the slice count is doubled once and a
    ConvergenceWarning is issued if the absorption moves by more than 1e-6.
    """
    if not (k > 0.0):
        raise ValueError(f"k must be > 0, got {k!r}")
    hbar = config.constants.hbar
    decomp = discretize(config.profile, n_slices, support_cut, config=config)
    amps, states = kernels.transfer_solve(
        np.array([k]),
        np.asarray(decomp.edges),
        np.asarray(decomp.omegas),
        config.gamma,
        config.mass,
        hbar,
        return_states=True,
    )
    row = amps[0]
    if not np.all(np.isfinite(row.view(float))):
        raise SingularMatching(f"transfer matching is singular at k={k!r}")

    if check_convergence and decomp.n_slices > 1:
        fine = discretize(config.profile, 2 * n_slices, support_cut, config=config)
        row_fine = transfer_rows(np.array([k]), fine, config)[0]
        a_coarse = 1.0 - abs(row[2]) ** 2 - abs(row[0]) ** 2
        a_fine = 1.0 - abs(row_fine[2]) ** 2 - abs(row_fine[0]) ** 2
        if abs(a_fine - a_coarse) > 1e-6:
            warnings.warn(
                f"absorption changed by {abs(a_fine - a_coarse):.2e} on slice doubling",
                ConvergenceWarning,
                stacklevel=2,
            )

    energy = (hbar * k) ** 2 / (2.0 * config.mass)
    q = complex(kernels.channel_q(np.array([k]), config.gamma, config.mass, hbar)[0])
    if config.omega > 0.0:
        kp, km, _, _ = kernels.mode_wavenumbers(
            np.array([k]), config.gamma, config.omega, config.mass, hbar
        )
        wn = ChannelWavenumbers(k=float(k), q=q, k_plus=complex(kp[0]), k_minus=complex(km[0]))
        eig = internal_eigensystem(config.gamma, config.omega)
    else:
        wn = ChannelWavenumbers(k=float(k), q=q, k_plus=complex(k), k_minus=q)
        eig = None

    sol = ScatteringSolution(
        k=float(k),
        config=config,
        wavenumbers=wn,
        eigensystem=eig,
        R1=complex(row[0]),
        R2=complex(row[1]),
        T1=complex(row[2]),
        T2=complex(row[3]),
        slice_edges=decomp.edges,
        slice_omegas=decomp.omegas,
        slice_states=states[0],
    )
    residual = matching_residual(sol)
    if residual > 1e-6:
        raise SingularMatching(
            f"transfer matching residual {residual:.2e} at k={k!r}"
        )
    return sol
