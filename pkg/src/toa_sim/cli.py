"""Command-line front end: parameter scans, figure datasets, regime reports.

All output is CSV with '#'-prefixed header comments recording the full
run configuration; floats are printed with 17 significant digits so
identical runs produce byte-identical files.  Plotting is out of scope.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from multiprocessing import Pool

import numpy as np

from . import __version__
from .errors import ConfigError, NumericError, ToaSimError
from .model import (
    RabiProfile,
    ValidatedConfig,
    cesium_config,
    config_summary,
    load_config,
    with_omega,
)
from .regimes import RegimeReport, classify, critical_temperature, ridge_locations
from .scattering import ABSORPTION_BAND
from .series import TimeSeries
from . import distributions as dist
from . import transfer
from . import wavepacket as wpk
from .kernels import get_backend, sharp_edge_solve, transfer_solve

GAMMA_CS = 33.3e6

FIG6_PACKET = {
    "v1_mps": 167.05,
    "v2_mps": 167.05 + 0.9e-6,
    "delta_x_um": 4233.0,
    "omega_per_s": 104.43e6,
    "L_um": 5.0,
}


def _float_fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="toa-sim",
        description="Fluorescence time-of-arrival simulator for a finite-width laser beam",
    )
    # Config errors (including bad usage) must exit 1, not argparse's 2.
    parser.error = _argparse_error.__get__(parser)
    parser.add_argument("--version", action="version", version=f"toa-sim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.error = _argparse_error.__get__(p)
        p.add_argument("--config", help="flat key=value parameter file")
        p.add_argument("--preset", help="figure preset: fig1 fig2 fig3 fig4 fig5 fig6 fig7")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for scans")
        p.add_argument(
            "--backend",
            choices=["analytic", "transfer"],
            default=None,
            help="scattering backend (default: analytic for sharp edges, transfer otherwise)",
        )

    p = sub.add_parser("absorption-map", help="A(v, omega) on a rectangular grid")
    add_common(p)
    p.add_argument("--v-min", type=float, default=2.0)
    p.add_argument("--v-max", type=float, default=400.0)
    p.add_argument("--n-v", type=int, default=161)
    p.add_argument("--omega-min", type=float, default=2e6)
    p.add_argument("--omega-max", type=float, default=2.2e8)
    p.add_argument("--n-omega", type=int, default=161)
    p.add_argument("--n-slices", type=int, default=transfer.DEFAULT_SLICES)

    p = sub.add_parser("absorption-cut", help="A(v) at fixed omega")
    add_common(p)
    p.add_argument("--v-min", type=float, default=2.0)
    p.add_argument("--v-max", type=float, default=900.0)
    p.add_argument("--n-v", type=int, default=1200)
    p.add_argument("--omega-in-gamma", type=float, default=None)
    p.add_argument("--n-slices", type=int, default=transfer.DEFAULT_SLICES)
    p.add_argument("--ridge-markers", type=int, default=3, help="annotate ridges 0..n")

    p = sub.add_parser("plane", help="regime boundary families in the omega-v plane")
    add_common(p)
    p.add_argument("--omega-min", type=float, default=2e6)
    p.add_argument("--omega-max", type=float, default=2.2e8)
    p.add_argument("--n-omega", type=int, default=161)
    p.add_argument("--n-ridges", type=int, default=20)

    p = sub.add_parser("critical-temperature", help="T_c versus beam width")
    add_common(p)
    p.add_argument("--L-min-um", type=float, default=0.5)
    p.add_argument("--L-max-um", type=float, default=50.0)
    p.add_argument("--n-L", type=int, default=100)

    p = sub.add_parser("distributions", help="arrival-time distribution columns")
    add_common(p)
    p.add_argument("--v-mean", type=float, default=None, help="packet mean velocity (m/s)")
    p.add_argument("--delta-x-um", type=float, default=None, help="packet width (um)")
    p.add_argument("--flux-position", type=float, default=None,
                   help="evaluation point for J and the axiomatic density (m, default L)")
    p.add_argument("--n-times", type=int, default=2000)
    p.add_argument("--window-sigmas", type=float, default=5.0)
    p.add_argument("--k-nodes", type=int, default=257)

    p = sub.add_parser("regime", help="operating-regime report at one velocity")
    add_common(p)
    p.add_argument("--velocity", type=float, required=True)
    p.add_argument("--delta-t", type=float, default=None, help="packet time span (s)")
    p.add_argument("--factor", type=float, default=10.0, help="'much less than' factor")

    return parser.parse_args(argv)


def _argparse_error(self, message):
    self.print_usage(sys.stderr)
    raise ConfigError(message)


def _base_config(args) -> ValidatedConfig:
    if args.config:
        return load_config(args.config)
    if args.preset == "fig6":
        return cesium_config(omega=FIG6_PACKET["omega_per_s"],
                             beam_width=FIG6_PACKET["L_um"] * 1e-6)
    if args.preset == "fig7":
        profile = RabiProfile(kind="gaussian", omega0=5 * GAMMA_CS,
                              center=2.5e-6, width=0.529e-6)
        return cesium_config(omega=5 * GAMMA_CS, profile=profile)
    if args.preset == "fig5":
        return cesium_config(omega=5 * GAMMA_CS)
    return cesium_config(omega=5 * GAMMA_CS)


def _header(args, config: ValidatedConfig, extra: list[str] = ()) -> list[str]:
    lines = [
        f"toa-sim {__version__}",
        f"command = {args.command}",
        f"preset = {args.preset or '-'}",
        f"kernel_backend = {get_backend().BACKEND_NAME}",
    ]
    lines += config_summary(config)
    lines += list(extra)
    return lines


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _sharp_absorption_row(config: ValidatedConfig, v: np.ndarray) -> tuple[np.ndarray, list[str]]:
    from .scattering import sharp_edge_rows

    k = config.mass * v / config.constants.hbar
    rows = sharp_edge_rows(k, config)
    return _absorption_with_status(rows[:, [0, 1, 2, 3]])


def _transfer_absorption_row(
    config: ValidatedConfig, v: np.ndarray, n_slices: int
) -> tuple[np.ndarray, list[str]]:
    decomp = transfer.discretize(config.profile, n_slices, config=config)
    k = config.mass * v / config.constants.hbar
    rows = transfer.transfer_rows(k, decomp, config)
    return _absorption_with_status(rows)


def _absorption_with_status(amps: np.ndarray) -> tuple[np.ndarray, list[str]]:
    a = 1.0 - np.abs(amps[:, 2]) ** 2 - np.abs(amps[:, 0]) ** 2
    status = []
    out = np.empty(a.shape[0])
    for i, val in enumerate(a):
        if not np.isfinite(val):
            out[i] = np.nan
            status.append("singular")
        elif val < -ABSORPTION_BAND or val > 1.0 + ABSORPTION_BAND:
            out[i] = np.nan
            status.append("nonphysical")
        else:
            out[i] = min(max(val, 0.0), 1.0)
            status.append("")
    return out, status


def _map_worker(task):
    config, v, omega, backend, n_slices = task
    cfg = with_omega(config, omega)
    if backend == "transfer":
        return _transfer_absorption_row(cfg, v, n_slices)
    return _sharp_absorption_row(cfg, v)


def cmd_absorption_map(args) -> str:
    config = _base_config(args)
    if args.preset == "fig4":
        args.v_min, args.v_max = 0.02, 2.0
    if args.n_v < 2 or args.n_omega < 2:
        raise ConfigError("map needs n_v >= 2 and n_omega >= 2")
    if not (0.0 < args.v_min < args.v_max) or not (0.0 < args.omega_min < args.omega_max):
        raise ConfigError("scan ranges must be positive and ordered")
    backend = args.backend or ("transfer" if config.profile.kind != "sharp" else "analytic")
    if backend == "analytic" and config.profile.kind != "sharp":
        raise ConfigError("analytic backend requires a sharp-edged profile")
    v = np.linspace(args.v_min, args.v_max, args.n_v)
    omegas = np.linspace(args.omega_min, args.omega_max, args.n_omega)

    tasks = [(config, v, float(om), backend, args.n_slices) for om in omegas]
    if args.jobs > 1:
        with Pool(args.jobs) as pool:
            results = pool.map(_map_worker, tasks)
    else:
        results = [_map_worker(task) for task in tasks]

    if backend == "transfer":
        _convergence_spot_check(config, v, omegas, args.n_slices)

    lines = [f"# {line}" for line in _header(args, config, [
        f"backend = {backend}",
        f"v_mps = linspace({_float_fmt(args.v_min)}, {_float_fmt(args.v_max)}, {args.n_v})",
        f"omega_per_s = linspace({_float_fmt(args.omega_min)}, {_float_fmt(args.omega_max)}, {args.n_omega})",
    ])]
    lines.append("v_mps,omega_per_s,A,status")
    for j, om in enumerate(omegas):
        a_row, status = results[j]
        for i, vv in enumerate(v):
            a_txt = _float_fmt(a_row[i]) if np.isfinite(a_row[i]) else ""
            lines.append(f"{_float_fmt(vv)},{_float_fmt(om)},{a_txt},{status[i]}")
    return "\n".join(lines) + "\n"


def _convergence_spot_check(config, v, omegas, n_slices) -> None:
    """Doubled-slice check at the scan corners and center (warns only)."""
    import warnings

    from .errors import ConvergenceWarning

    probes = [(v[0], omegas[0]), (v[-1], omegas[0]), (v[0], omegas[-1]),
              (v[-1], omegas[-1]), (v[len(v) // 2], omegas[len(omegas) // 2])]
    worst = 0.0
    for vv, om in probes:
        cfg = with_omega(config, float(om))
        a1, _ = _transfer_absorption_row(cfg, np.array([vv]), n_slices)
        a2, _ = _transfer_absorption_row(cfg, np.array([vv]), 2 * n_slices)
        if np.isfinite(a1[0]) and np.isfinite(a2[0]):
            worst = max(worst, abs(a1[0] - a2[0]))
    if worst > 1e-6:
        warnings.warn(
            f"slice doubling moves absorption by {worst:.2e} at scan probes; "
            f"consider more than {n_slices} slices",
            ConvergenceWarning,
            stacklevel=2,
        )


def cmd_absorption_cut(args) -> str:
    config = _base_config(args)
    if args.n_v < 2 or not (0.0 < args.v_min < args.v_max):
        raise ConfigError("cut needs n_v >= 2 and a positive ordered range")
    backend = args.backend or ("transfer" if config.profile.kind != "sharp" else "analytic")
    v = np.linspace(args.v_min, args.v_max, args.n_v)

    columns: list[tuple[str, np.ndarray, list[str]]] = []
    if args.preset == "fig5":
        strong = with_omega(config, 5 * config.gamma)
        weak = with_omega(config, 0.5 * config.gamma)
        a_s, st_s = _map_worker((strong, v, strong.omega, backend, args.n_slices))
        a_w, st_w = _map_worker((weak, v, weak.omega, backend, args.n_slices))
        columns = [("A_strong", a_s, st_s), ("A_weak", a_w, st_w)]
        marker_cfg = strong
    else:
        cfg = config
        if args.omega_in_gamma is not None:
            cfg = with_omega(config, args.omega_in_gamma * config.gamma)
        a, st = _map_worker((cfg, v, cfg.omega, backend, args.n_slices))
        columns = [("A", a, st)]
        marker_cfg = cfg

    extra = []
    if marker_cfg.omega > 0.0:
        for n, vn, slope in ridge_locations(marker_cfg, args.ridge_markers):
            extra.append(f"ridge n={n}: v_mps = {_float_fmt(vn)}")
    lines = [f"# {line}" for line in _header(args, marker_cfg, extra)]
    names = ",".join(name for name, _, _ in columns)
    stats = ",".join(f"status_{name}" for name, _, _ in columns)
    lines.append(f"v_mps,{names},{stats}")
    for i, vv in enumerate(v):
        vals = ",".join(
            _float_fmt(col[i]) if np.isfinite(col[i]) else "" for _, col, _ in columns
        )
        sts = ",".join(st[i] for _, _, st in columns)
        lines.append(f"{_float_fmt(vv)},{vals},{sts}")
    return "\n".join(lines) + "\n"


def cmd_plane(args) -> str:
    config = _base_config(args)
    if args.n_omega < 2 or not (0.0 < args.omega_min < args.omega_max):
        raise ConfigError("plane needs n_omega >= 2 and a positive ordered range")
    omegas = np.linspace(args.omega_min, args.omega_max, args.n_omega)
    gamma = config.gamma
    L = config.beam_width
    lines = [f"# {line}" for line in _header(args, config)]
    lines.append("family,n,omega_per_s,v_mps")
    hbar = config.constants.hbar
    mass = config.mass
    for om in omegas:
        # beam-width boundary: penetration length equals L
        v_eq = L / (5.0 * (2.0 / gamma + gamma / (om * om)))
        lines.append(f"beam_width,,{_float_fmt(om)},{_float_fmt(v_eq)}")
        # reflection boundary: kinetic energy equals the coupling scale
        v_refl = math.sqrt(hbar * om / mass)
        lines.append(f"reflection,,{_float_fmt(om)},{_float_fmt(v_refl)}")
    for n in range(args.n_ridges + 1):
        slope = (2 * n + 1) * math.pi / L
        for om in omegas:
            lines.append(f"ridge,{n},{_float_fmt(om)},{_float_fmt(om / slope)}")
    return "\n".join(lines) + "\n"


def cmd_critical_temperature(args) -> str:
    config = _base_config(args)
    if args.n_L < 1 or not (0.0 < args.L_min_um <= args.L_max_um):
        raise ConfigError("critical-temperature needs a positive ordered L range")
    widths = np.linspace(args.L_min_um, args.L_max_um, args.n_L)
    lines = [f"# {line}" for line in _header(args, config)]
    lines.append("L_um,Tc_K")
    for l_um in widths:
        tc = critical_temperature(l_um * 1e-6, config.gamma, config.mass)
        lines.append(f"{_float_fmt(l_um)},{_float_fmt(tc)}")
    return "\n".join(lines) + "\n"


def cmd_distributions(args) -> str:
    import warnings

    config = _base_config(args)
    hbar = config.constants.hbar
    L = config.beam_width
    if args.preset == "fig6" or (args.v_mean is None and args.delta_x_um is None):
        sigx = FIG6_PACKET["delta_x_um"] * 1e-6
        v1 = FIG6_PACKET["v1_mps"]
        tw = (12.0 * sigx + L) / v1
        comps = (
            wpk.GaussianComponent(mean_velocity=v1, delta_x=sigx,
                                  waist_position=L, waist_time=tw),
            wpk.GaussianComponent(mean_velocity=FIG6_PACKET["v2_mps"], delta_x=sigx,
                                  waist_position=L, waist_time=tw),
        )
        v_ref = v1
    else:
        if args.v_mean is None or args.delta_x_um is None:
            raise ConfigError("distributions needs --v-mean and --delta-x-um (or --preset fig6)")
        sigx = args.delta_x_um * 1e-6
        v_ref = args.v_mean
        tw = (12.0 * sigx + L) / v_ref
        comps = (
            wpk.GaussianComponent(mean_velocity=v_ref, delta_x=sigx,
                                  waist_position=L, waist_time=tw),
        )
    spec = wpk.PacketSpec(components=comps, mass=config.mass)
    grid = wpk.default_kgrid(spec, n_nodes=args.k_nodes)
    backend = args.backend or ("transfer" if config.profile.kind != "sharp" else "analytic")
    prop = wpk.ConditionalPropagator(spec, config, grid, backend=backend)

    report = classify(config, v_ref)
    if not report.ideal_chain_ok:
        warnings.warn(
            "packet velocity outside the ideal-distribution validity chain; "
            "normalized output is still meaningful",
            stacklevel=1,
        )

    sig_t = sigx / v_ref
    half = args.window_sigmas * sig_t
    times = TimeSeries(
        t0=tw - half, dt=2.0 * half / args.n_times, values=np.zeros(args.n_times + 1)
    )
    x_eval = args.flux_position if args.flux_position is not None else L

    pi_vals = prop.photon_density(times.times) if config.gamma > 0.0 else np.zeros(len(times))
    pi = dist.DistributionSeries(t0=times.t0, dt=times.dt, values=pi_vals, kind="observed")
    flux = dist.free_flux(spec, x_eval, times)
    kij = dist.kijowski_density(spec, x_eval, times)
    from .errors import ZeroIntegral

    if config.gamma > 0.0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pi_id = dist.deconvolve(pi, config.gamma, method="fourier")
        try:
            pi_id_norm = dist.normalize(pi_id)
        except ZeroIntegral:
            # no coupling, nothing detected: normalized column stays zero
            pi_id_norm = pi_id
    else:
        pi_id = pi.tagged(np.zeros(len(pi)), "ideal")
        pi_id_norm = pi_id
    lines = [f"# {line}" for line in _header(args, config, [
        f"packet components = {len(comps)}",
        f"delta_x_m = {_float_fmt(sigx)}",
        f"waist_time_s = {_float_fmt(tw)}",
        f"flux_position_m = {_float_fmt(x_eval)}",
        f"backend = {backend}",
    ])]
    lines.append("t_s,J,Pi,Pi_id,Pi_id_norm,Pi_K")
    tt = times.times
    for i in range(len(tt)):
        lines.append(
            f"{_float_fmt(tt[i])},{_float_fmt(flux.values[i])},{_float_fmt(pi.values[i])},"
            f"{_float_fmt(pi_id.values[i])},{_float_fmt(pi_id_norm.values[i])},"
            f"{_float_fmt(kij.values[i])}"
        )
    return "\n".join(lines) + "\n"


def cmd_regime(args) -> str:
    config = _base_config(args)
    report = classify(config, args.velocity, delta_t=args.delta_t,
                      much_less_factor=args.factor)
    sys.stdout.write(report.to_text() + "\n")
    lines = [f"# {line}" for line in _header(args, config)]
    lines.append(RegimeReport.csv_header())
    lines.append(report.to_csv_row())
    return "\n".join(lines) + "\n"


_COMMANDS = {
    "absorption-map": cmd_absorption_map,
    "absorption-cut": cmd_absorption_cut,
    "plane": cmd_plane,
    "critical-temperature": cmd_critical_temperature,
    "distributions": cmd_distributions,
    "regime": cmd_regime,
}


def main(argv=None) -> int:
    try:
        args = _parse_args(argv if argv is not None else sys.argv[1:])
        text = _COMMANDS[args.command](args)
        if args.command == "regime" and not args.out:
            return 0
        _write(args, text)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ToaSimError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
