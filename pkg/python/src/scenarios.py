"""Scenario runners: build the model, run the analyses, write artifacts and checks."""

from typing import Any, Callable, Dict, Optional, Tuple
import logging
import math
import time
import warnings

import numpy as np
import pandas as pd

try:
    from . import __version__
    from .artifacts import ArtifactWriter, RunManifest
    from .carpets import (
        GridSpec,
        density_carpet,
        density_minima,
        far_field_time,
        ladder_grid,
        ladder_spikes,
        momentum_ladder,
        plateau_fraction,
        recurrence_report,
    )
    from .config import CENTER_PATH_TOLERANCE, MIN_FIT_POINTS, CheckStatus, Normalization, Sampling, Scenario
    from .errors import ArityError, ConvergenceWarning, NodeError
    from .fractal import density_length_series, fractal_dimension, trajectory_length_series
    from .hydro import (
        continuity_residual,
        convergence_order,
        energy_split,
        hydro_fields,
        local_energy,
        quantum_potential,
        two_wave_velocity,
    )
    from .parsing import ScenarioConfig, config_to_dict
    from .toymodel import ToyParams, potential_profile, well_history, x_min_forms
    from .trajectories import (
        EnsembleSpec,
        TrajectoryEnsemble,
        channeling_check,
        closed_form_gaussian_path,
        density_histogram_deviation,
        exchange_diagnostics,
        mirror_confinement,
        ordering_check,
        packet_width,
        run_ensemble,
        tolerance_convergence,
        velocity_at,
        velocity_double_sum,
    )
    from .wavemodel import (
        GaussianSpec,
        GlobalPhaseSpec,
        ModelSpec,
        PhysicalConstants,
        SuperpositionSpec,
        TalbotSpec,
        counter_propagating,
        critical_speed,
        eval_gaussian,
        eval_model,
        gaussian_in_well,
        harmonic_relative_frequency,
        harmonic_state,
        model_norm,
        model_support,
        recurrence_time,
        slit_array,
        spreading_ratio,
        square_wave_state,
        talbot_scales,
        talbot_terms,
        tent_state,
    )
except ImportError:
    from src import __version__
    from src.artifacts import ArtifactWriter, RunManifest
    from src.carpets import (
        GridSpec,
        density_carpet,
        density_minima,
        far_field_time,
        ladder_grid,
        ladder_spikes,
        momentum_ladder,
        plateau_fraction,
        recurrence_report,
    )
    from src.config import CENTER_PATH_TOLERANCE, MIN_FIT_POINTS, CheckStatus, Normalization, Sampling, Scenario
    from src.errors import ArityError, ConvergenceWarning, NodeError
    from src.fractal import density_length_series, fractal_dimension, trajectory_length_series
    from src.hydro import (
        continuity_residual,
        convergence_order,
        energy_split,
        hydro_fields,
        local_energy,
        quantum_potential,
        two_wave_velocity,
    )
    from src.parsing import ScenarioConfig, config_to_dict
    from src.toymodel import ToyParams, potential_profile, well_history, x_min_forms
    from src.trajectories import (
        EnsembleSpec,
        TrajectoryEnsemble,
        channeling_check,
        closed_form_gaussian_path,
        density_histogram_deviation,
        exchange_diagnostics,
        mirror_confinement,
        ordering_check,
        packet_width,
        run_ensemble,
        tolerance_convergence,
        velocity_at,
        velocity_double_sum,
    )
    from src.wavemodel import (
        GaussianSpec,
        GlobalPhaseSpec,
        ModelSpec,
        PhysicalConstants,
        SuperpositionSpec,
        TalbotSpec,
        counter_propagating,
        critical_speed,
        eval_gaussian,
        eval_model,
        gaussian_in_well,
        harmonic_relative_frequency,
        harmonic_state,
        model_norm,
        model_support,
        recurrence_time,
        slit_array,
        spreading_ratio,
        square_wave_state,
        talbot_scales,
        talbot_terms,
        tent_state,
    )

logger = logging.getLogger(__name__)

CONTINUITY_MIN_ORDER = 1.8
NORM_TOLERANCE = 1e-6
PHASE_SAMPLES = 20


class CheckBook:
    """Named check outcomes, kept in insertion order and written to checks.json."""

    def __init__(self):
        self.results: Dict[str, Dict[str, Any]] = {}

    def add(self, name: str, passed: bool, value: Any = None, threshold: Any = None, detail: str = "") -> None:
        status = CheckStatus.PASS if passed else CheckStatus.FAIL
        self.results[name] = {"status": status.value, "value": value, "threshold": threshold, "detail": detail}
        log = logger.info if passed else logger.warning
        log(f"check {name}: {status.value} (value={value}, threshold={threshold})")

    def at_most(self, name: str, value: float, threshold: float, detail: str = "") -> None:
        self.add(name, bool(value <= threshold), value, threshold, detail)

    def at_least(self, name: str, value: float, threshold: float, detail: str = "") -> None:
        self.add(name, bool(value >= threshold), value, threshold, detail)

    def skip(self, name: str, detail: str) -> None:
        self.results[name] = {"status": CheckStatus.SKIP.value, "value": None, "threshold": None, "detail": detail}
        logger.info(f"check {name}: skip ({detail})")

    @property
    def failed(self) -> Tuple[str, ...]:
        return tuple(k for k, v in self.results.items() if v["status"] == CheckStatus.FAIL.value)


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def trajectories_frame(e: TrajectoryEnsemble) -> pd.DataFrame:
    columns = {"t": e.times}
    for i in range(e.n_traj):
        columns[f"path_{i:05d}"] = e.paths[i]
    return pd.DataFrame(columns)


def carpet_frame(values: np.ndarray, grid: GridSpec) -> pd.DataFrame:
    """Row-major density grid: column 't' then one column per x value."""
    headers = [f"{x:.16e}" for x in grid.x_values()]
    df = pd.DataFrame(values, columns=headers)
    df.insert(0, "t", grid.t_values())
    return df


def _gaussian_window(model: ModelSpec, c: PhysicalConstants, t_end: float, widths: float = 6.0) -> Tuple[float, float]:
    lo0, hi0 = model_support(model, c, 0.0, widths)
    lo1, hi1 = model_support(model, c, t_end, widths)
    half = max(abs(lo0), abs(hi0), abs(lo1), abs(hi1))
    return (-half, half)


def _in_band(value: float, low: float, high: float) -> bool:
    return bool(low <= value <= high)


def _span_window(model: ModelSpec, c: PhysicalConstants, t_end: float, widths: float = 6.0) -> Tuple[float, float]:
    lo0, hi0 = model_support(model, c, 0.0, widths)
    lo1, hi1 = model_support(model, c, t_end, widths)
    return (min(lo0, lo1), max(hi0, hi1))


def _check_aborts(book: CheckBook, e: TrajectoryEnsemble, cfg: ScenarioConfig, name: str = "node_aborts") -> None:
    book.at_most(name, e.abort_fraction, cfg.checks.abort_limit, f"{e.abort_count}/{e.n_traj} paths hit a node")


def _check_ordering(book: CheckBook, e: TrajectoryEnsemble, name: str = "non_crossing") -> None:
    report = ordering_check(e)
    detail = "" if report.ok else f"first violation: paths {report.first_pair} at t={report.first_time}"
    book.add(name, report.ok, report.violations, 0, detail)


def _check_tolerance_convergence(book: CheckBook, model: ModelSpec, e: TrajectoryEnsemble, cfg_int, c,
                                 n_paths: int = 8) -> None:
    starts = e.x0[e.completed_mask][:n_paths]
    if starts.size == 0:
        book.skip("tolerance_convergence", "no completed paths to re-integrate")
        return
    ratio = tolerance_convergence(model, starts, cfg_int, c)
    book.at_most("tolerance_convergence", ratio, 10.0,
                 f"{starts.size} paths re-run with rtol and atol halved (units of atol + rtol max|x|)")


def _check_continuity(book: CheckBook, name: str, model: ModelSpec, grid: GridSpec, c: PhysicalConstants) -> None:
    coarse, fine, order = convergence_order(model, grid, c)
    book.at_least(name, order, CONTINUITY_MIN_ORDER, f"residual {coarse:.3e} -> {fine:.3e} under refinement")


def _check_phase_invariance(book: CheckBook, model: ModelSpec, e: TrajectoryEnsemble, cfg_int, c,
                            rng: np.random.Generator, n_paths: int = 16) -> None:
    starts = e.x0[:n_paths]
    ref = e.paths[:n_paths]
    keep = ~np.isnan(ref).any(axis=1)
    if not keep.any():
        book.skip("phase_invariance", "no completed reference paths")
        return
    worst = 0.0
    variants = [GlobalPhaseSpec(model, alpha=float(a)) for a in rng.uniform(0, 2 * math.pi, PHASE_SAMPLES)]
    variants.append(GlobalPhaseSpec(model, cubic=1.0))
    spec = EnsembleSpec(len(starts))
    for variant in variants:
        other = run_ensemble(variant, spec, cfg_int, c, x0=starts)
        worst = max(worst, float(np.nanmax(np.abs(other.paths[keep] - ref[keep]))))
    scale = cfg_int.atol + cfg_int.rtol * float(np.nanmax(np.abs(ref[keep])))
    book.at_most("phase_invariance", worst, 10.0 * scale, f"{len(variants)} global phases, {int(keep.sum())} paths")


def _check_transport(book: CheckBook, cfg: ScenarioConfig, model: ModelSpec, cfg_int, c,
                     e: Optional[TrajectoryEnsemble] = None) -> None:
    n = cfg.ensemble.transport_n_traj
    if n:
        spec = EnsembleSpec(n, Sampling.DENSITY_WEIGHTED, cfg.ensemble.support, cfg.seed)
        e = run_ensemble(model, spec, cfg_int, c)
    elif e is None or cfg.ensemble.sampling != Sampling.DENSITY_WEIGHTED:
        book.skip("density_transport", "no density-weighted ensemble configured")
        return
    t_end = float(e.times[-1])
    deviation = density_histogram_deviation(e.paths[:, -1], model, t_end, c)
    book.at_most("density_transport", deviation, cfg.checks.transport_tolerance,
                 f"{e.n_traj} paths, 50 bins at t={t_end:g}")


def _check_two_wave(book: CheckBook, model: SuperpositionSpec, c: PhysicalConstants, t_end: float,
                    rng: np.random.Generator, tol: float, n_points: int = 200) -> None:
    a, b = model.components
    lo, hi = model_support(model, c, t_end, 4.0)
    worst = 0.0
    used = 0
    for x, t in zip(rng.uniform(lo, hi, n_points), rng.uniform(0.0, t_end, n_points)):
        w1 = eval_gaussian(a, c, x, t)
        w2 = eval_gaussian(b, c, x, t)
        if min(abs(w1.psi) ** 2, abs(w2.psi) ** 2) <= 1e-12:
            continue
        try:
            rho, J, v, dec = two_wave_velocity(w1, w2, c)
            direct = hydro_fields(eval_model(model, c, x, t), c)
        except NodeError:
            continue
        rho1, rho2 = abs(w1.psi) ** 2, abs(w2.psi) ** 2
        v1 = (c.hbar / c.mass) * (w1.dpsi / w1.psi).imag
        v2 = (c.hbar / c.mass) * (w2.dpsi / w2.psi).imag
        amp = 2.0 * math.sqrt(rho1 * rho2)
        rho_scale = rho1 + rho2 + amp
        j_scale = rho1 * abs(v1) + rho2 * abs(v2) + amp * (0.5 * abs(v1 + v2) + abs(dec.osmotic_split))
        worst = max(
            worst,
            abs(rho - direct.rho) / rho_scale,
            abs(J - direct.J) / j_scale,
            abs(v - direct.v) * direct.rho / j_scale,
        )
        used += 1
    book.at_most("two_wave_equivalence", worst, tol, f"{used} sample points with both partial densities > 1e-12")


def _write_carpet(writer: ArtifactWriter, model: ModelSpec, grid: GridSpec, c: PhysicalConstants,
                  norm: Normalization = Normalization.RAW):
    carpet = density_carpet(model, grid, norm, c)
    writer.csv("carpet.csv", carpet_frame(carpet.values, grid))
    return carpet


def _check_mirror_symmetry(book: CheckBook, carpet, name: str = "carpet_symmetry") -> None:
    x = carpet.grid.x_values()
    if not np.allclose(x, -x[::-1], rtol=0, atol=1e-12 * max(1.0, abs(x).max())):
        book.skip(name, "grid is not symmetric about x = 0")
        return
    mismatch = float(np.max(np.abs(carpet.values - carpet.values[:, ::-1])))
    book.at_most(name, mismatch, 1e-10, "max |rho(x,t) - rho(-x,t)|")


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def _run_two_slit(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    model = slit_array(2, m["d"], m["sigma0"], c)
    t_end = 8.0 * c.mass * m["sigma0"] ** 2 / c.hbar
    cfg_int = cfg.integrator.build(t_end)

    e = run_ensemble(model, cfg.ensemble_spec, cfg_int, c)
    writer.csv("trajectories.csv", trajectories_frame(e))
    _check_aborts(book, e, cfg)
    _check_ordering(book, e)
    _check_tolerance_convergence(book, model, e, cfg_int, c)
    crossings = mirror_confinement(e, 0.0)
    book.add("mirror_confinement", crossings == 0, crossings, 0, "paths changing sign of x")

    v0 = velocity_at(model, e.x0, cfg_int.save_times[0], c)
    book.at_most("initial_velocity_zero", float(np.max(np.abs(v0))), 1e-12)

    _check_two_wave(book, model, c, cfg_int.save_times[-1], rng, cfg.checks.identity_tolerance)
    _check_phase_invariance(book, model, e, cfg_int, c, rng)
    _check_transport(book, cfg, model, cfg_int, c, e)

    t_last = cfg_int.save_times[-1]
    grid = cfg.grid or GridSpec(_gaussian_window(model, c, t_last), 401, (0.0, t_last), 201)
    carpet = _write_carpet(writer, model, grid, c)
    _check_mirror_symmetry(book, carpet)
    _check_continuity(book, "continuity_order", model,
                      GridSpec(_gaussian_window(model, c, t_last), 801, (0.0, t_last), 101), c)
    book.at_most("norm", abs(model_norm(model, c, 0.0) - 1.0), NORM_TOLERANCE)


def _run_single_packet(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    packet = GaussianSpec(m["x0"], m["v"], m["sigma0"])
    t_end = 8.0 * c.mass * m["sigma0"] ** 2 / c.hbar
    cfg_int = cfg.integrator.build(t_end)

    e = run_ensemble(packet, cfg.ensemble_spec, cfg_int, c)
    writer.csv("trajectories.csv", trajectories_frame(e))
    _check_aborts(book, e, cfg)
    _check_ordering(book, e)
    _check_tolerance_convergence(book, packet, e, cfg_int, c)

    exact = closed_form_gaussian_path(packet, e.x0[:, np.newaxis], e.times[np.newaxis, :], c)
    done = e.completed_mask
    scale = np.maximum(np.abs(exact[done]), m["sigma0"])
    error = float(np.nanmax(np.abs(e.paths[done] - exact[done]) / scale)) if done.any() else math.inf
    book.at_most("closed_form_paths", error, 1e-6, "x(t) - x_t = (x(0) - x0) sigma_t / sigma0")
    _check_transport(book, cfg, packet, cfg_int, c, e)

    t_last = cfg_int.save_times[-1]
    grid = cfg.grid or GridSpec(_span_window(packet, c, t_last, 8.0), 801, (0.0, t_last), 101)
    carpet = _write_carpet(writer, packet, grid, c)
    x = grid.x_values()
    worst = 0.0
    for row, t in zip(carpet.values, grid.t_values()):
        mass = np.sum(row)
        mean = np.sum(row * x) / mass
        width = math.sqrt(np.sum(row * (x - mean) ** 2) / mass)
        expected = m["sigma0"] * spreading_ratio(m["sigma0"], float(t), c)
        worst = max(worst, abs(width / expected - 1.0))
    book.at_most("spreading_law", worst, 1e-3, "row second moment vs sigma_t")

    _check_continuity(book, "continuity_order", packet,
                      GridSpec(_span_window(packet, c, t_last), 801, (0.0, t_last), 101), c)
    book.at_most("norm", abs(model_norm(packet, c, t_last) - 1.0), NORM_TOLERANCE)


def _run_counter_propagating(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook,
                             rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    d = m["d"]
    narrow = min(m["sigma_left"], m["sigma_right"])
    crit = critical_speed(d, narrow, c)
    v = m.get("v") or crit.v
    model = counter_propagating(d, v, m["sigma_left"], m["sigma_right"], c, m["weight_left"], m["weight_right"])
    t_end = 2.0 * d / v
    cfg_int = cfg.integrator.build(t_end)

    book.at_most("critical_speed_ratio", abs(crit.v_over_vs - 2.2 * d / narrow), 1e-12 * crit.v_over_vs,
                 f"v/v_s = {crit.v_over_vs:g}")

    e = run_ensemble(model, cfg.ensemble_spec, cfg_int, c)
    writer.csv("trajectories.csv", trajectories_frame(e))
    _check_aborts(book, e, cfg)
    _check_ordering(book, e)
    _check_tolerance_convergence(book, model, e, cfg_int, c)

    report = exchange_diagnostics(e, model, c)
    t_last = float(e.times[-1])
    left, right = model.components
    writer.json("exchange.json", {
        "t_final": t_last,
        "v": v,
        "symmetry_line": report.line,
        "left": {"count": report.left_count, "final_velocity": report.left_final_velocity,
                 "to_other_side": report.left_to_right, "initial_spread": report.left_initial_spread,
                 "final_spread": report.left_final_spread},
        "right": {"count": report.right_count, "final_velocity": report.right_final_velocity,
                  "to_other_side": report.right_to_left, "initial_spread": report.right_initial_spread,
                  "final_spread": report.right_final_spread},
        "migrations": report.migrations,
    })

    equal_weights = math.isclose(m["weight_left"], m["weight_right"])
    equal_widths = math.isclose(m["sigma_left"], m["sigma_right"])
    if equal_weights:
        tol = cfg.checks.exchange_velocity_tolerance
        gap = max(abs(report.left_final_velocity - right.v), abs(report.right_final_velocity - left.v)) / abs(v)
        book.at_most("velocity_exchange", gap, tol, "each side ends with the other packet's velocity")
        if equal_widths:
            book.add("side_crossings", report.migrations == 0, report.migrations, 0)
        else:
            tol = cfg.checks.exchange_spread_tolerance
            gap = max(
                abs(report.left_final_spread / packet_width(right, t_last, c) - 1.0),
                abs(report.right_final_spread / packet_width(left, t_last, c) - 1.0),
            )
            book.at_most("spread_exchange", gap, tol, "each side ends with the other packet's width")
    else:
        book.add("migration", report.migrations > 0, report.migrations, ">0",
                 "paths crossing the symmetry line with unequal weights")

    grid = cfg.grid or GridSpec(_gaussian_window(model, c, t_last), 601, (0.0, t_last), 201)
    _write_carpet(writer, model, grid, c)


def _run_harmonic(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    spec = harmonic_state(m["omega"], list(zip(m["levels"], np.sqrt(m["weights"]))))
    try:
        omega_rel = harmonic_relative_frequency(spec, c)
        period = 2.0 * math.pi / abs(omega_rel)
        expected = m["omega"] * (spec.levels[1][0] - spec.levels[0][0])
        book.at_most("relative_frequency", abs(omega_rel - expected), 1e-12 * abs(expected), f"omega_ba={omega_rel:g}")
    except ArityError as e:
        book.skip("relative_frequency", str(e))
        period = 2.0 * math.pi / m["omega"]

    cfg_int = cfg.integrator.build(2.0 * period)
    lo, hi = model_support(spec, c, 0.0, 3.0)
    x = np.linspace(lo, hi, 801)

    def density(t):
        return np.abs(eval_model(spec, c, x, t).psi) ** 2

    mismatch = max(float(np.max(np.abs(density(t + period) - density(t)))) for t in (0.0, 0.31 * period))
    book.at_most("density_period", mismatch, 1e-10, f"period {period:g}")

    e = run_ensemble(spec, cfg.ensemble_spec, cfg_int, c)
    writer.csv("trajectories.csv", trajectories_frame(e))
    _check_aborts(book, e, cfg)
    _check_ordering(book, e)
    _check_tolerance_convergence(book, spec, e, cfg_int, c)
    one_period = int(np.argmin(np.abs(e.times - (e.times[0] + period))))
    if abs(e.times[one_period] - e.times[0] - period) < 1e-12 * period:
        done = e.completed_mask
        drift = float(np.max(np.abs(e.paths[done, one_period] - e.x0[done]))) if done.any() else math.inf
        book.at_most("trajectory_period", drift, 1e-5, "paths return to their start after one period")
    else:
        book.skip("trajectory_period", "save grid does not contain t0 + period")

    worst_energy = 0.0
    worst_q = 0.0
    xs = rng.uniform(lo, hi, 100)
    ts = rng.uniform(0.0, period, 100)
    for xi, ti in zip(xs, ts):
        w = eval_model(spec, c, float(xi), float(ti))
        if abs(w.psi) ** 2 < 1e-12:
            continue
        parts = energy_split(w, c)
        lhs = local_energy(w, c)
        scale = abs(lhs) + parts.kinetic + abs(parts.internal) + abs(parts.flux_term)
        worst_energy = max(worst_energy, abs(lhs - (parts.kinetic + parts.internal + parts.flux_term)) / scale)
        q1 = quantum_potential(w, c, "amplitude")
        q2 = quantum_potential(w, c, "density")
        worst_q = max(worst_q, abs(q1 - q2) / max(abs(q1), abs(q2), c.hbar * m["omega"]))
    book.at_most("energy_identity", worst_energy, 1e-10)
    book.at_most("quantum_potential_forms", worst_q, 1e-10)

    grid = cfg.grid or GridSpec((lo, hi), 401, (0.0, 2.0 * period), 201)
    _write_carpet(writer, spec, grid, c)
    _check_continuity(book, "continuity_order", spec, GridSpec((lo, hi), 201, (0.0, period), 101), c)


def _run_talbot(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    spec = TalbotSpec(m["d"], m["sigma0"], m.get("nmax"))
    d = spec.d
    tau_t = talbot_scales(d, c).tau_T
    tol = cfg.checks.recurrence_tolerance

    report = recurrence_report(spec, c)
    book.at_most("recurrence_full", report.full_period_mismatch, tol, f"tau_T = {tau_t:g}")
    book.at_most("recurrence_half_shift", report.half_shift_mismatch, tol, "rho(x + d/2, t + tau_T/2) vs rho(x, t)")
    book.at_most("talbot_recurrence_relation", abs(0.5 * tau_t - recurrence_time(d, c)) / recurrence_time(d, c), 1e-15)

    n, _, _, omega = talbot_terms(spec, c)
    phase_error = float(np.max(np.abs(omega * tau_t / (2.0 * math.pi) - n * n)))
    book.at_most("temporal_phase_integers", phase_error, 1e-9, "omega_n tau_T / 2 pi = n^2")

    xs = rng.uniform(-0.5 * d, 0.5 * d, 100)
    ts = rng.uniform(0.0, tau_t, 100)
    shift_error = 0.0
    for ell in (-2, -1, 1, 2):
        for xi, ti in zip(xs, ts):
            base = eval_model(spec, c, float(xi), float(ti)).psi
            shifted = eval_model(spec, c, float(xi) + ell * d, float(ti)).psi
            shift_error = max(shift_error, abs(shifted - base))
    peak = float(np.max(np.abs(eval_model(spec, c, np.linspace(-0.5 * d, 0.5 * d, 401), 0.0).psi)))
    book.at_most("spatial_period", shift_error / peak, 1e-12)
    book.at_most("norm", abs(model_norm(spec, c, 0.0) - 1.0), NORM_TOLERANCE, "one unit cell")

    worst = 0.0
    used = 0
    for xi, ti in zip(xs, ts):
        try:
            generic = float(velocity_at(spec, float(xi), float(ti), c, floor=1e-12))
            double = float(velocity_double_sum(spec, float(xi), float(ti), c))
        except NodeError:
            continue
        worst = max(worst, abs(generic - double) / max(abs(generic), abs(double), c.hbar / (c.mass * d)))
        used += 1
    book.at_most("velocity_double_sum", worst, 1e-10, f"{used} sample points")

    cfg_int = cfg.integrator.build(2.0 * tau_t)
    e = run_ensemble(spec, cfg.ensemble_spec, cfg_int, c)
    writer.csv("trajectories.csv", trajectories_frame(e))
    _check_aborts(book, e, cfg)
    _check_ordering(book, e)
    _check_tolerance_convergence(book, spec, e, cfg_int, c)
    leaks = channeling_check(e, d)
    book.add("unit_cell_channeling", leaks == 0, leaks, 0, "paths leaving their starting cell")

    grid = cfg.grid or GridSpec((-d, d), 401, (0.0, 2.0 * tau_t), 201)
    carpet = _write_carpet(writer, spec, grid, c)
    _check_mirror_symmetry(book, carpet)


def _run_nslit_ladder(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    d, sigma0 = m["d"], m["sigma0"]
    counts = sorted(set(m["compare_slits"]) | {m["n_slits"]})

    fractions = {}
    rows = []
    main = None
    for n_slits in counts:
        model = slit_array(n_slits, d, sigma0, c)
        t_far = far_field_time(d, sigma0, n_slits, c)
        ladder = momentum_ladder(model, ladder_grid(d, t_far, c, m["orders"], m["nx"]), t_far, c, period=d)
        fractions[n_slits] = plateau_fraction(ladder)
        rows.append({"n_slits": n_slits, "t_far": t_far, "plateau_fraction": fractions[n_slits]})
        if n_slits == m["n_slits"]:
            main = ladder
    writer.csv("plateaus.csv", pd.DataFrame(rows, columns=["n_slits", "t_far", "plateau_fraction"]))
    writer.csv("ladder.csv", pd.DataFrame({
        "x": main.x,
        "density": main.density,
        "p_normalized": main.p_normalized,
        "skipped": main.skipped.astype(int),
    }))

    book.at_least("plateau_fraction", fractions[m["n_slits"]], cfg.checks.plateau_min,
                  f"N={m['n_slits']}, {main.skipped_count} low-density points skipped")
    compared = [fractions[n] for n in m["compare_slits"]]
    monotone = all(b >= a for a, b in zip(compared, compared[1:]))
    book.add("plateau_monotone", monotone, compared, "nondecreasing", f"N = {list(m['compare_slits'])}")

    few = min(counts)
    model = slit_array(few, d, sigma0, c)
    t_far = far_field_time(d, sigma0, few, c)
    sparse = momentum_ladder(model, ladder_grid(d, t_far, c, m["orders"], m["nx"]), t_far, c, period=d, floor=1e-300)
    spikes = ladder_spikes(sparse)
    minima = density_minima(sparse.density)
    if spikes.size == 0:
        book.skip("spikes_at_minima", f"no spikes found for N={few}")
    else:
        offsets = np.array([np.min(np.abs(minima - s)) if minima.size else np.inf for s in spikes])
        book.add("spikes_at_minima", bool(np.all(offsets <= 1)), int(offsets.max()), 1,
                 f"{spikes.size} spikes for N={few} (grid cells to nearest density minimum)")

    single = GaussianSpec(0.0, 0.0, sigma0)
    t_single = far_field_time(d, sigma0, 1, c)
    ramp = momentum_ladder(single, ladder_grid(d, t_single, c, 1, 801), t_single, c, period=d)
    keep = ~ramp.skipped
    slope, intercept = np.polyfit(ramp.x[keep], ramp.p_normalized[keep], 1)
    residual = float(np.max(np.abs(ramp.p_normalized[keep] - (slope * ramp.x[keep] + intercept))))
    book.at_most("single_packet_ramp", residual, 1e-8, "single Gaussian momentum is linear in x")


def _run_box_diffraction(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    spec = gaussian_in_well(m["d"], m["sigma0"], c, m.get("n_terms"))
    tau_r = recurrence_time(spec.d, c)
    tau_t = talbot_scales(spec.d, c).tau_T

    report = recurrence_report(spec, c)
    book.at_most("recurrence_full", report.full_period_mismatch, cfg.checks.recurrence_tolerance,
                 f"tau_r = {tau_r:g}")
    book.at_most("talbot_recurrence_relation", abs(0.5 * tau_t - tau_r) / tau_r, 1e-15)

    left, right = spec.well
    walls = max(
        float(np.max(np.abs(eval_model(spec, c, np.array([left, right]), t).psi)))
        for t in np.linspace(0.0, tau_r, 7)
    )
    book.at_most("wall_nodes", walls, 1e-10, "|psi| at the walls")
    book.at_most("norm", abs(model_norm(spec, c, 0.0) - 1.0), NORM_TOLERANCE, "well width")

    grid = cfg.grid or GridSpec(spec.well, 401, (0.0, tau_r), 201)
    carpet = _write_carpet(writer, spec, grid, c)
    _check_mirror_symmetry(book, carpet)


def _run_fractal(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    L = m["L"]
    k_values = m["k_values"]
    base = square_wave_state(L, m["w"], max(k_values))
    tau_r = recurrence_time(L, c)
    t = m["time_fraction"] * tau_r

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        series = density_length_series(base, k_values, t, c)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    estimate = fractal_dimension(series)
    writer.csv("scaling.csv", pd.DataFrame({"K": series.K.astype(int), "L": series.L}))

    smooth = tent_state(L, max(k_values))
    smooth_estimate = fractal_dimension(density_length_series(smooth, k_values, t, c))

    book.add("length_resolution", converged, converged, True, "doubling nx changes L by < 1%")
    book.add("fractal_dimension", _in_band(estimate.D_f, cfg.checks.dimension_low, cfg.checks.dimension_high),
             estimate.D_f, [cfg.checks.dimension_low, cfg.checks.dimension_high])
    book.at_least("fit_r_squared", estimate.r_squared, cfg.checks.r_squared_min)
    book.add("smooth_control", _in_band(smooth_estimate.D_f, 0.95, 1.05), smooth_estimate.D_f, [0.95, 1.05])

    left, right = base.well
    span = (0.0, m["span_fraction"] * tau_r)
    cfg_int = cfg.integrator.build(span[1])
    center = 0.5 * (left + right)
    trajectory = {}
    try:
        flat = trajectory_length_series(base, center, m["n_values"], span, cfg_int, c)
        flat_gap = float(np.max(np.abs(flat.L - 1.0)))
        book.at_most("center_trajectory_flat", flat_gap, CENTER_PATH_TOLERANCE,
                     "symmetric state keeps the center path at rest (L = 1 in span units)")
        if len(flat.entries) >= MIN_FIT_POINTS:
            flat_D = fractal_dimension(flat).D_f
            book.add("center_trajectory_dimension", _in_band(flat_D, 0.95, 1.05), flat_D, [0.95, 1.05])

        x0 = left + m["x0_fraction"] * (right - left)
        moving = trajectory_length_series(base, x0, m["n_values"], span, cfg_int, c)
        writer.csv("trajectory_scaling.csv", pd.DataFrame({"N": moving.K.astype(int), "L": moving.L}))
        book.add("trajectory_length_grows", bool(moving.L[-1] > moving.L[0]),
                 [float(moving.L[0]), float(moving.L[-1])], "increasing")
        if len(moving.entries) >= 4:
            traj_estimate = fractal_dimension(moving)
            trajectory = {"D_f": traj_estimate.D_f, "slope_stderr": traj_estimate.slope_stderr,
                          "r_squared": traj_estimate.r_squared, "n_points": traj_estimate.n_points, "x0": x0}
    except NodeError as e:
        book.skip("trajectory_length_grows", f"trajectory hit a node: {e}")

    writer.json("dimension.json", {
        "D_f": estimate.D_f,
        "slope_stderr": estimate.slope_stderr,
        "r_squared": estimate.r_squared,
        "n_points": estimate.n_points,
        "t": t,
        "t_over_tau_r": m["time_fraction"],
        "w_over_L": m["w"] / L,
        "smooth_D_f": smooth_estimate.D_f,
        "trajectory": trajectory,
    })


def _run_toymodel(cfg: ScenarioConfig, writer: ArtifactWriter, book: CheckBook, rng: np.random.Generator) -> None:
    c, m = cfg.constants, cfg.model
    sigma0 = m["sigma0"]
    v_s = c.hbar / (2.0 * c.mass * sigma0)
    times = np.linspace(0.0, m["tau_max"] * 2.0 * c.mass * sigma0 ** 2 / c.hbar, m["nt"])

    histories = []
    profiles = []
    worst_t0 = worst_depth = worst_forms = 0.0
    extremes = {}
    for ratio in m["speed_ratios"]:
        label = f"v/vs={ratio:g}"
        params = ToyParams(p=c.mass * ratio * v_s, sigma0=sigma0, x0=-m["distance"] * sigma0, constants=c)
        df = well_history(params, times)
        df.insert(0, "preset", label)
        histories.append(df)

        x_min0 = df["x_min"].iloc[0]
        worst_t0 = max(worst_t0, abs(df["width"].iloc[0] / (math.pi * c.hbar / (2.0 * params.p)) - 1.0))
        depth = df["V0"] * df["x_min"] ** 2 / (2.0 * c.hbar ** 2 / c.mass)
        worst_depth = max(worst_depth, float(np.max(np.abs(depth - 1.0))))
        for t in times:
            first, second = x_min_forms(params, float(t))
            worst_forms = max(worst_forms, abs(first - second) / abs(second))
        extremes[ratio] = (float(df["width"].min()), float(df["V0"].max()))

        x = np.linspace(1.5 * x_min0, -0.5 * x_min0, 201)
        profiles.append(pd.DataFrame({"preset": label, "x": x, "V": potential_profile(params, x, 0.0)}))

    writer.csv("toymodel.csv", pd.concat(histories, ignore_index=True))
    writer.csv("potential.csv", pd.concat(profiles, ignore_index=True))
    book.at_most("x_min_at_start", worst_t0, 1e-12, "well width -x_min(0) = pi hbar / 2p")
    book.at_most("depth_identity", worst_depth, 1e-12, "V0 x_min^2 = 2 hbar^2 / m")
    book.at_most("x_min_forms_agree", worst_forms, 1e-12)

    slow, fast = min(extremes), max(extremes)
    ordered = extremes[slow][0] > extremes[fast][0] and extremes[slow][1] < extremes[fast][1]
    book.add("regime_ordering", ordered,
             {"slow": list(extremes[slow]), "fast": list(extremes[fast])}, "wider and shallower when slow",
             "min well width and max depth for the slowest and fastest packets")


RUNNERS: Dict[Scenario, Callable[[ScenarioConfig, ArtifactWriter, CheckBook, np.random.Generator], None]] = {
    Scenario.TWO_SLIT: _run_two_slit,
    Scenario.SINGLE_PACKET: _run_single_packet,
    Scenario.COUNTER_PROPAGATING: _run_counter_propagating,
    Scenario.HARMONIC_TWO_LEVEL: _run_harmonic,
    Scenario.TALBOT: _run_talbot,
    Scenario.NSLIT_LADDER: _run_nslit_ladder,
    Scenario.BOX_DIFFRACTION: _run_box_diffraction,
    Scenario.FRACTAL: _run_fractal,
    Scenario.TOYMODEL: _run_toymodel,
}


def run_scenario(cfg: ScenarioConfig) -> Tuple[RunManifest, CheckBook]:
    """Run one scenario end to end and write its artifacts into cfg.output_dir.

    Returns:
        (manifest, check book); the run passed iff book.failed is empty
    """
    t0 = time.perf_counter()
    logger.info(f"Running scenario {cfg.scenario.value} (seed={cfg.seed}) into {cfg.output_dir}")
    writer = ArtifactWriter(cfg.output_dir)
    book = CheckBook()
    rng = np.random.default_rng(cfg.seed)

    RUNNERS[cfg.scenario](cfg, writer, book, rng)

    writer.json("checks.json", book.results)
    duration = time.perf_counter() - t0
    manifest = writer.finish(cfg.scenario.value, __version__, cfg.seed, config_to_dict(cfg), duration)
    if book.failed:
        logger.warning(f"{len(book.failed)} check(s) failed: {', '.join(book.failed)}")
    return manifest, book
