//! The six scenarios. Each returns an [`Outcome`] and writes its CSV
//! artifacts into `dir`.

use std::ops::ControlFlow;
use std::path::Path;

use rayon::prelude::*;

use super::config::*;
use super::export::{eigenvalue_table, trajectory_table, Table};
use super::report::Outcome;
use crate::dynamics::{evolve_backward_observed, evolve_observed, SolverConfig, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::invariants::{distance_to_q, hamiltonian, quasipower};
use crate::linops::{discrete_spectrum, identity_suite, root_space_check, OperatorHandle, OperatorKind};
use crate::modulation::{
    bootstrap_observables, build_initial_data, random_tiered_fixture, ModulationCoords, ModulationTracker,
    TierCoefficients,
};
use crate::rhs::{consistency_check, eval_all, eval_theta_alpha_dot, exact_rates, track_snapshots, ModulationSeries};
use crate::solitons::{blowup_time, ground_state, q_profiles, standing_wave, two_param_soliton};

fn save(o: &mut Outcome, dir: &Path, name: &str, table: &Table) -> Result<()> {
    table.save(dir.join(name))?;
    o.artifacts.push(name.to_string());
    Ok(())
}

fn save_json(o: &mut Outcome, dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    o.artifacts.push(name.to_string());
    Ok(())
}

/// Steps between records so that samples land every `every` time units.
fn stride(every: f64, dt: f64) -> usize {
    ((every / dt).round() as usize).max(1)
}

fn kind_name(kind: OperatorKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{kind:?}"))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn max_drift(traj: &Trajectory) -> (f64, f64) {
    let first = traj.diagnostics[0].invariants;
    traj.diagnostics.iter().fold((0.0, 0.0), |(m, h), d| {
        (
            f64::max(m, (d.invariants.quasipower - first.quasipower).norm()),
            f64::max(h, (d.invariants.hamiltonian - first.hamiltonian).norm()),
        )
    })
}

pub fn soliton_propagation(cfg: &ScenarioConfig, p: &SolitonPropagationParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let alpha = p.alpha;
    let u0 = ground_state(alpha, &grid)?;
    let mut o = Outcome::default();

    let solver = SolverConfig {
        keep_snapshots: false,
        ..cfg.solver.clone()
    };
    let mut sup = 0.0f64;
    let mut tracker = ModulationTracker::new(0.0, alpha);
    let mut coords: Vec<Option<ModulationCoords>> = Vec::new();
    let mut last = 0.0;
    let traj = evolve_observed(&u0, &solver, |s| {
        if let Ok(exact) = standing_wave(alpha, s.time, &grid) {
            sup = sup.max((s.field - &exact).norm_h1());
        }
        coords.push(tracker.track(s.field, -alpha * alpha * (s.time - last)).ok().map(|r| r.1));
        last = s.time;
        ControlFlow::Continue(())
    })?;
    o.set("sup_h1_error", sup);
    let (dm, dh) = max_drift(&traj);
    o.set("mass_drift", dm);
    o.set("energy_drift", dh);
    let q = &q_profiles(&grid).q;
    o.set("mass_quadrature_error", (quasipower(q).re - 2.0).abs());
    o.set("energy_quadrature_error", (hamiltonian(q).re + 2.0).abs());
    if traj.termination != Termination::Completed {
        o.truncated = true;
        o.note(format!("propagation ended early: {:?}", traj.termination));
    }
    let refs: Vec<Option<&ModulationCoords>> = coords.iter().map(Option::as_ref).collect();
    save(&mut o, dir, "trajectory.csv", &trajectory_table(&traj.diagnostics, &refs, None))?;

    if p.compare_local {
        let local = SolverConfig {
            nonlocal: false,
            ..solver.clone()
        };
        let mut sup_local = 0.0f64;
        evolve_observed(&u0, &local, |s| {
            if let Ok(exact) = standing_wave(alpha, s.time, &grid) {
                sup_local = sup_local.max((s.field - &exact).norm_h1());
            }
            ControlFlow::Continue(())
        })?;
        o.set("local_sup_h1_error", sup_local);
    }

    if let Some(c) = &p.convergence {
        let final_error = |dt: f64| -> Result<f64> {
            let run = SolverConfig {
                dt,
                scheme: c.scheme,
                record_every: usize::MAX,
                ..solver.clone()
            };
            let traj = evolve_observed(&u0, &run, |_| ControlFlow::Continue(()))?;
            let exact = standing_wave(alpha, traj.end_time, &grid)?;
            Ok((&traj.final_state - &exact).norm_h1())
        };
        let coarse = final_error(c.dt_coarse)?;
        let fine = final_error(c.dt_fine)?;
        o.set("convergence_ratio", coarse / fine);
        o.note(format!("{:?} final H1 errors: dt={} -> {coarse:e}, dt={} -> {fine:e}", c.scheme, c.dt_coarse, c.dt_fine));
    }
    Ok(o)
}

/// Zero of the least-squares line through `(t, 1/‖u‖_∞)` on the window.
pub fn extrapolate_singular_time(times: &[f64], linf: &[f64], window: [f64; 2]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(linf)
        .filter(|(t, l)| **t >= window[0] && **t <= window[1] && **l > 0.0)
        .map(|(t, l)| (*t, 1.0 / l))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    let (slope, intercept) = linear_fit(&x, &y)?;
    (slope < 0.0).then(|| -intercept / slope)
}

pub fn blowup(cfg: &ScenarioConfig, p: &BlowupParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let (alpha, beta) = (p.alpha, p.beta);
    let u0 = two_param_soliton(alpha, beta, 0.0, &grid)?;
    let expected = blowup_time(alpha, beta);
    let track_until = expected.map_or(f64::INFINITY, |t| p.track_fraction * t);
    let mut o = Outcome::default();

    let solver = SolverConfig {
        keep_snapshots: false,
        ..cfg.solver.clone()
    };
    let mut tracking = 0.0f64;
    let mut tracking_unit = 0.0f64;
    let traj = evolve_observed(&u0, &solver, |s| {
        if s.time <= track_until {
            if let Ok(exact) = two_param_soliton(alpha, beta, s.time, &grid) {
                let e = s.field.max_abs_diff(&exact);
                tracking = tracking.max(e);
                if s.time <= 1.0 {
                    tracking_unit = tracking_unit.max(e);
                }
            }
        }
        ControlFlow::Continue(())
    })?;
    let none: Vec<Option<&ModulationCoords>> = Vec::new();
    save(&mut o, dir, "trajectory.csv", &trajectory_table(&traj.diagnostics, &none, None))?;

    o.set("tracking_error", tracking);
    o.set("tracking_error_unit", tracking_unit);
    o.set("max_linf", traj.diagnostics.iter().map(|d| d.linf).fold(0.0, f64::max));
    let detected = traj.termination == Termination::BlowupDetected;
    o.flag("blowup_detected", detected);
    match traj.termination {
        Termination::Completed => {}
        other => {
            o.truncated = true;
            o.note(format!("run stopped at t = {} ({other:?})", traj.end_time));
        }
    }
    if let Some(b) = &traj.blowup {
        o.note(format!("detection: {:?}, linf {:e}, tail {:e}", b.criteria, b.linf, b.tail_fraction));
    }
    match expected {
        Some(t_b) => {
            o.set("expected_time", t_b);
            if detected {
                let t_d = traj.end_time;
                o.set("detected_time", t_d);
                o.set("detected_relative_error", (t_d - t_b).abs() / t_b);
                let times: Vec<f64> = traj.diagnostics.iter().map(|d| d.time).collect();
                let linf: Vec<f64> = traj.diagnostics.iter().map(|d| d.linf).collect();
                let window = [p.extrapolation_window[0] * t_d, p.extrapolation_window[1] * t_d];
                match extrapolate_singular_time(&times, &linf, window) {
                    Some(t_e) => {
                        o.set("estimated_time", t_e);
                        o.set("relative_error", (t_e - t_b).abs() / t_b);
                    }
                    None => o.note("too few samples in the extrapolation window"),
                }
            } else {
                o.note("no blow-up detected before t_end");
            }
        }
        None => o.note("alpha = beta: standing wave, no blow-up expected"),
    }
    Ok(o)
}

struct WindowSample {
    t: f64,
    d: f64,
    lambda: f64,
    xi: f64,
    c: [f64; 8],
}

struct WindowRun {
    crossing: Option<f64>,
    samples: Vec<WindowSample>,
    failure: Option<String>,
}

fn window_run(u0: &Field, solver: &SolverConfig, level: Option<f64>, backward: bool) -> Result<WindowRun> {
    let mut tracker = ModulationTracker::default();
    let mut last = 0.0;
    let mut run = WindowRun {
        crossing: None,
        samples: Vec::new(),
        failure: None,
    };
    let observer = |s: &crate::dynamics::Snapshot<'_>| {
        let d = distance_to_q(s.field).distance;
        let (_, c) = match tracker.track(s.field, -(s.time - last)) {
            Ok(r) => r,
            Err(e) => {
                run.failure = Some(format!("fit failed at t = {}: {e}", s.time));
                return ControlFlow::Break(());
            }
        };
        last = s.time;
        let rates = match exact_rates(&c) {
            Ok(r) => r,
            Err(e) => {
                run.failure = Some(format!("rates failed at t = {}: {e}", s.time));
                return ControlFlow::Break(());
            }
        };
        let b = bootstrap_observables(&c, rates.theta_dot, rates.alpha_dot);
        run.samples.push(WindowSample {
            t: s.time,
            d,
            lambda: b.lambda,
            xi: b.xi,
            c: [
                c.theta,
                c.alpha,
                c.a_e,
                c.b_e,
                c.a_o,
                c.b_o,
                c.eta_e.norm_h1(),
                c.eta_o.norm_h1(),
            ],
        });
        if level.is_some_and(|l| d > l) {
            run.crossing = Some(s.time.abs());
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    };
    if backward {
        evolve_backward_observed(u0, solver, observer)?;
    } else {
        evolve_observed(u0, solver, observer)?;
    }
    Ok(run)
}

/// `shape · ε^power`, entry by entry.
pub fn tiered_coefficients(shape: &TierCoefficients, powers: &TierPowers, epsilon: f64) -> TierCoefficients {
    TierCoefficients {
        a_e: shape.a_e * epsilon.powi(powers.a_e),
        b_e: shape.b_e * epsilon.powi(powers.b_e),
        a_o: shape.a_o * epsilon.powi(powers.a_o),
        b_o: shape.b_o * epsilon.powi(powers.b_o),
    }
}

struct WindowResult {
    epsilon: f64,
    t_star: f64,
    crossed: bool,
    xi_sup: f64,
    lambda_sup: f64,
    d_sup: f64,
    samples: Vec<(f64, WindowSample)>,
    failures: Vec<String>,
}

fn window_for(grid: &Grid, cfg: &ScenarioConfig, p: &StabilityWindowParams, epsilon: f64) -> Result<WindowResult> {
    let coeffs = tiered_coefficients(&p.shape, &p.powers, epsilon);
    let (_, se, so) = random_tiered_fixture(grid, epsilon, p.eta_fill, cfg.seed);
    let data = build_initial_data(grid, epsilon, coeffs, Some((&se, &so)), p.tier_constant)?;
    let solver = SolverConfig {
        t_end: p.t_max,
        record_every: stride(p.sample_every, cfg.solver.dt),
        keep_snapshots: false,
        ..cfg.solver.clone()
    };
    let level = (epsilon > 0.0).then(|| p.k * epsilon);
    let mut runs = vec![(1.0, window_run(&data.u0, &solver, level, false)?)];
    if p.backward {
        runs.push((-1.0, window_run(&data.u0, &solver, level, true)?));
    }
    let crossing = runs.iter().filter_map(|r| r.1.crossing).fold(None, |a: Option<f64>, c| {
        Some(a.map_or(c, |a| a.min(c)))
    });
    let t_star = crossing.unwrap_or(p.t_max);
    let mut out = WindowResult {
        epsilon,
        t_star,
        crossed: crossing.is_some(),
        xi_sup: 0.0,
        lambda_sup: 0.0,
        d_sup: 0.0,
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (sign, run) in runs {
        out.failures.extend(run.failure);
        for s in run.samples {
            if s.t.abs() <= t_star {
                out.xi_sup = out.xi_sup.max(s.xi);
                out.lambda_sup = out.lambda_sup.max(s.lambda);
                out.d_sup = out.d_sup.max(s.d);
            }
            out.samples.push((sign, s));
        }
    }
    // Backward samples first, in increasing time; t = 0 appears once.
    out.samples.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then(b.0.total_cmp(&a.0)));
    out.samples.dedup_by(|a, b| a.1.t == b.1.t);
    Ok(out)
}

pub fn stability_window(cfg: &ScenarioConfig, p: &StabilityWindowParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mut o = Outcome::default();
    let results = p
        .epsilons
        .par_iter()
        .map(|&eps| window_for(&grid, cfg, p, eps))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Table::new(&["epsilon", "t_star", "crossed", "xi_sup", "lambda_sup", "d_sup", "xi_over_eps2"]);
    for (i, r) in results.iter().enumerate() {
        o.set(format!("t_star.{i}"), r.t_star);
        o.set(format!("xi_sup.{i}"), r.xi_sup);
        o.set(format!("lambda_sup.{i}"), r.lambda_sup);
        o.set(format!("d_sup.{i}"), r.d_sup);
        let ratio = (r.epsilon > 0.0).then(|| r.xi_sup / (r.epsilon * r.epsilon));
        summary.row(&[
            Some(r.epsilon),
            Some(r.t_star),
            Some(if r.crossed { 1.0 } else { 0.0 }),
            Some(r.xi_sup),
            Some(r.lambda_sup),
            Some(r.d_sup),
            ratio,
        ]);
        for f in &r.failures {
            o.truncated = true;
            o.note(format!("epsilon {:e}: {f}", r.epsilon));
        }
        if !r.crossed {
            o.note(format!("epsilon {:e}: no crossing before t_max = {} (censored)", r.epsilon, p.t_max));
        }
        let mut series = Table::new(&[
            "t", "d", "lambda", "xi", "theta", "alpha", "a_e", "b_e", "a_o", "b_o", "eta_e", "eta_o",
        ]);
        for (_, s) in &r.samples {
            let mut row = vec![Some(s.t), Some(s.d), Some(s.lambda), Some(s.xi)];
            row.extend(s.c.iter().map(|v| Some(*v)));
            series.row(&row);
        }
        save(&mut o, dir, &format!("window_{i}.csv"), &series)?;
    }
    save(&mut o, dir, "window.csv", &summary)?;

    let positive: Vec<&WindowResult> = results.iter().filter(|r| r.epsilon > 0.0).collect();
    let mut by_size = positive.clone();
    by_size.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    o.flag("t_star_monotone", by_size.windows(2).all(|w| w[1].t_star >= w[0].t_star));
    o.set("crossings", results.iter().filter(|r| r.crossed).count() as f64);
    let log_inv: Vec<f64> = positive.iter().map(|r| (1.0 / r.epsilon).ln()).collect();
    let t_star: Vec<f64> = positive.iter().map(|r| r.t_star).collect();
    if let Some((slope, _)) = linear_fit(&log_inv, &t_star) {
        o.set("t_star_slope", slope);
    }
    let xi_c = positive.iter().map(|r| r.xi_sup / (r.epsilon * r.epsilon)).fold(0.0, f64::max);
    o.set("xi_constant", xi_c);
    o.set("lambda_constant", positive.iter().map(|r| r.lambda_sup / r.epsilon).fold(0.0, f64::max));
    let (lx, ly): (Vec<f64>, Vec<f64>) = positive
        .iter()
        .filter(|r| r.xi_sup > 0.0)
        .map(|r| (r.epsilon.ln(), r.xi_sup.ln()))
        .unzip();
    if let Some((slope, _)) = linear_fit(&lx, &ly) {
        o.set("xi_exponent", slope);
    }
    Ok(o)
}

pub fn lower_bound(cfg: &ScenarioConfig, p: &LowerBoundParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let (alpha, beta) = (p.alpha, p.beta);
    let gap = (alpha - beta).abs();
    let mut o = Outcome::default();
    let mut table = Table::new(&["t", "difference_l2", "ratio"]);
    let mut ratios = Vec::with_capacity(p.samples);
    for i in 0..p.samples {
        let t = p.t_window * i as f64 / (p.samples - 1) as f64;
        let diff = (&two_param_soliton(alpha, alpha, t, &grid)? - &two_param_soliton(alpha, beta, t, &grid)?).norm_l2();
        let ratio = (gap > 0.0).then(|| diff / (gap * (1.0 + t)));
        if i == 0 {
            o.set("initial_difference", diff);
            if let Some(r) = ratio {
                o.set("initial_ratio", r);
            }
        }
        ratios.extend(ratio);
        table.row(&[Some(t), Some(diff), ratio]);
    }
    save(&mut o, dir, "lower_bound.csv", &table)?;
    if ratios.is_empty() {
        o.note("alpha = beta: the two solutions coincide");
    } else {
        o.set("ratio_min", ratios.iter().copied().fold(f64::INFINITY, f64::min));
        o.set("ratio_max", ratios.iter().copied().fold(0.0, f64::max));
    }
    match blowup_time(alpha, beta) {
        Some(t_b) => {
            let fine = p.divergence_grid.build()?;
            let t = p.divergence_fraction * t_b;
            let start = two_param_soliton(alpha, beta, 0.0, &fine)?.norm_l2();
            let late = two_param_soliton(alpha, beta, t, &fine)?.norm_l2();
            o.set("divergence_factor", late / start);
            o.note(format!("L2 norm {start:e} at t = 0 and {late:e} at t = {t}"));
        }
        None => o.note("no blow-up time for alpha = beta"),
    }
    Ok(o)
}

struct Fitted {
    traj: Trajectory,
    series: ModulationSeries,
}

fn fitted_run(u0: &Field, cfg: &ScenarioConfig, t_end: f64, every: f64) -> Result<Fitted> {
    let solver = SolverConfig {
        t_end,
        record_every: stride(every, cfg.solver.dt),
        keep_snapshots: true,
        ..cfg.solver.clone()
    };
    let traj = evolve_observed(u0, &solver, |_| ControlFlow::Continue(()))?;
    if traj.termination != Termination::Completed {
        return Err(Error::Config(format!("fitted run ended early: {:?}", traj.termination)));
    }
    let series = track_snapshots(&traj.times, &traj.snapshots)?;
    Ok(Fitted { traj, series })
}

fn save_fitted(o: &mut Outcome, dir: &Path, name: &str, f: &Fitted) -> Result<()> {
    let rates: Vec<Option<crate::rhs::RhsReport>> = f.series.coords.iter().map(|c| eval_all(c).ok()).collect();
    let rate_refs: Vec<_> = rates.iter().map(Option::as_ref).collect();
    let coord_refs: Vec<_> = f.series.coords.iter().map(Some).collect();
    save(o, dir, name, &trajectory_table(&f.traj.diagnostics, &coord_refs, Some(&rate_refs)))
}

fn max_constraint_residual(series: &ModulationSeries) -> f64 {
    series
        .coords
        .iter()
        .flat_map(|c| c.orthogonality_residuals())
        .map(f64::abs)
        .fold(0.0, f64::max)
}

pub fn modulation_ode_check(cfg: &ScenarioConfig, p: &ModulationOdeParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let prof = q_profiles(&grid);
    let mut o = Outcome::default();
    let mut residual = 0.0f64;

    // Standing wave: θ̇ = -1 from the formulas and from the fitted phase.
    let standing = fitted_run(&prof.q, cfg, p.secular_time, p.sample_every)?;
    let mut formula_err = 0.0f64;
    for c in &standing.series.coords {
        let (td, _) = eval_theta_alpha_dot(c)?;
        formula_err = formula_err.max((td + 1.0).abs());
    }
    let h = p.sample_every;
    let theta: Vec<f64> = standing.series.coords.iter().map(|c| c.theta).collect();
    let fd_err = theta
        .windows(3)
        .map(|w| ((w[2] - w[0]) / (2.0 * h) + 1.0).abs())
        .fold(0.0, f64::max);
    o.set("standing_theta_dot_error", formula_err);
    o.set("standing_fd_theta_error", fd_err);
    let report = consistency_check(&standing.series, p.tolerance)?;
    o.set(
        "standing_max_discrepancy",
        report.quantities.iter().map(|q| q.max_formula.max(q.max_exact)).fold(0.0, f64::max),
    );
    residual = residual.max(max_constraint_residual(&standing.series));
    save_fitted(&mut o, dir, "standing.csv", &standing)?;

    // b_o-only kick: a_o(t) ≈ -2 b_o t.
    let delta = p.delta;
    let kick = |coeffs: TierCoefficients| build_initial_data(&grid, delta.sqrt(), coeffs, None, 1.0);
    let b_only = kick(TierCoefficients {
        b_o: delta,
        ..Default::default()
    })?;
    let secular = fitted_run(&b_only.u0, cfg, p.secular_time, p.sample_every)?;
    let a_end = secular.series.coords.last().map_or(0.0, |c| c.a_o);
    let expected = -2.0 * delta * p.secular_time;
    o.set("secular_a_o", a_end);
    o.set("secular_a_o_expected", expected);
    o.set("secular_relative_error", ((a_end - expected) / expected).abs());
    residual = residual.max(max_constraint_residual(&secular.series));
    save_fitted(&mut o, dir, "b_o_kick.csv", &secular)?;

    // a_o-only kick: no forcing of a_o at leading order.
    let a_only = kick(TierCoefficients {
        a_o: delta,
        ..Default::default()
    })?;
    let flat = fitted_run(&a_only.u0, cfg, p.secular_time, p.sample_every)?;
    let a0 = flat.series.coords[0].a_o;
    let drift = flat.series.coords.iter().map(|c| (c.a_o - a0).abs()).fold(0.0, f64::max);
    o.set("a_o_only_drift", drift / delta);
    residual = residual.max(max_constraint_residual(&flat.series));
    save_fitted(&mut o, dir, "a_o_kick.csv", &flat)?;

    if p.epsilon > 0.0 {
        let (coeffs, se, so) = random_tiered_fixture(&grid, p.epsilon, 0.5, cfg.seed);
        let data = build_initial_data(&grid, p.epsilon, coeffs, Some((&se, &so)), 1.0)?;
        let generic = fitted_run(&data.u0, cfg, p.generic_time, p.sample_every)?;
        let report = consistency_check(&generic.series, p.tolerance)?;
        let mut worst_exact = 0.0f64;
        let mut worst_formula = 0.0f64;
        for q in &report.quantities {
            o.set(format!("generic.{}.exact_ratio", q.quantity), q.exact_ratio);
            o.set(format!("generic.{}.formula_ratio", q.quantity), q.formula_ratio);
            worst_exact = worst_exact.max(q.exact_ratio);
            worst_formula = worst_formula.max(q.formula_ratio);
        }
        o.set("generic_exact_ratio", worst_exact);
        o.set("generic_formula_ratio", worst_formula);
        residual = residual.max(max_constraint_residual(&generic.series));
        save_fitted(&mut o, dir, "generic.csv", &generic)?;
        save_json(&mut o, dir, "consistency_generic.json", &report)?;
    }
    o.set("constraint_residual", residual);
    Ok(o)
}

pub fn spectrum(cfg: &ScenarioConfig, p: &SpectrumParams, dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let mut o = Outcome::default();
    let ids = identity_suite(&grid, p.identity_pairs, cfg.seed)?;
    o.set("identity_profile_max", ids.profile_max());
    o.set("conjugation_max", ids.conjugation_he.max(ids.conjugation_ho));
    o.set("sigma1_plain", ids.sigma1_plain);
    o.set("sigma1_corrected", ids.sigma1_corrected);
    let roots = root_space_check(&grid)?;
    o.set("kernel_max", roots.kernel_max());
    o.set("chain_max", roots.chain_max());
    save_json(&mut o, dir, "identities.json", &ids)?;
    save_json(&mut o, dir, "root_space.json", &roots)?;

    for &kind in &p.operators {
        let name = kind_name(kind);
        let spec = discrete_spectrum(&OperatorHandle::new(kind, &grid), p.n_eigs, p.gap_margin)?;
        o.set(format!("gap_count.{name}"), spec.gap_count as f64);
        o.set(format!("zero_cluster.{name}"), spec.zero_cluster as f64);
        if let Some(l) = spec.eigenvalues.first() {
            o.set(format!("smallest.{name}"), l.norm());
        }
        save(&mut o, dir, &format!("eigenvalues_{name}.csv"), &eigenvalue_table(&spec))?;
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn extrapolation_of_a_pole() {
        // ‖u‖_∞ = 1/(5 - t) has its singularity at t = 5.
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let l: Vec<f64> = t.iter().map(|t| 1.0 / (5.0 - t)).collect();
        let est = extrapolate_singular_time(&t, &l, [3.0, 4.5]).unwrap();
        assert!((est - 5.0).abs() < 1e-12);
        assert!(extrapolate_singular_time(&t, &l, [10.0, 11.0]).is_none());
    }

    #[test]
    fn tier_scaling() {
        let shape = TierCoefficients {
            a_e: 1.0,
            b_e: 2.0,
            a_o: 3.0,
            b_o: -1.0,
        };
        let c = tiered_coefficients(&shape, &TierPowers::default(), 0.1);
        assert!((c.a_o - 0.3).abs() < 1e-15 && (c.b_o + 0.01).abs() < 1e-15 && (c.b_e - 0.02).abs() < 1e-15);
    }
}
