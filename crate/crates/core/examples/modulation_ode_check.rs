//! Fitted modulation parameters along a kicked trajectory, against both the
//! closed evolution formulas and the projected equation.
//!
//! cargo run --release --example modulation_ode_check

use nnls_lab::dynamics::{evolve, SolverConfig};
use nnls_lab::modulation::{build_initial_data, fit_modulation, TierCoefficients};
use nnls_lab::rhs::{consistency_check, eval_all, exact_rates, track_snapshots, Tolerance};
use nnls_lab::solitons::ground_state;
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let grid = Grid::new(1024, 64.0)?;

    let target = ground_state(1.05, &grid)?.scale(num_complex::Complex64::from_polar(1.0, 0.3));
    let fit = fit_modulation(&target, (0.0, 1.0))?;
    println!("fit of e^(0.3i) Q_1.05: θ = {:.12}, α = {:.12} ({} iterations)", fit.theta, fit.alpha, fit.iterations);

    let delta = 1e-3;
    let coeffs = TierCoefficients {
        b_o: delta,
        ..Default::default()
    };
    let data = build_initial_data(&grid, delta.sqrt(), coeffs, None, 1.0)?;
    let cfg = SolverConfig {
        dt: 1e-3,
        t_end: 0.5,
        record_every: 10,
        ..Default::default()
    };
    let traj = evolve(&data.u0, &cfg)?;
    let series = track_snapshots(&traj.times, &traj.snapshots)?;
    for i in (0..series.times.len()).step_by(10) {
        let c = &series.coords[i];
        let f = eval_all(c)?;
        let e = exact_rates(c)?;
        println!(
            "t = {:.2}  a_o = {:+.4e} (expected {:+.4e})  ȧ_o formula {:+.4e} exact {:+.4e}",
            series.times[i],
            c.a_o,
            -2.0 * delta * series.times[i],
            f.a_o_dot,
            e.a_o_dot
        );
    }
    let report = consistency_check(&series, Tolerance { abs: 1e-7, rel: 0.05 })?;
    for q in &report.quantities {
        println!(
            "{:>5}: max |rate| {:.3e}, formula off by {:.3e}, projection off by {:.3e}",
            q.quantity, q.max_rate, q.max_formula, q.max_exact
        );
    }
    Ok(())
}
