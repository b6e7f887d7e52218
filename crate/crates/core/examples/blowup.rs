//! Two-parameter soliton running into its singular time.
//!
//! cargo run --release --example blowup [beta] [n]
//!
//! The default (beta = 0.9, n = 8192) takes ~15 s. The run stops when the
//! spectral tail or the amplitude detector fires; the singular time is then
//! estimated by extrapolating `1/‖u‖_∞` to zero.

use nnls_lab::dynamics::{evolve, SolverConfig};
use nnls_lab::experiments::scenarios::extrapolate_singular_time;
use nnls_lab::solitons::{blowup_time, two_param_soliton};
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let beta: f64 = args.next().map_or(0.9, |s| s.parse().expect("beta"));
    let n: usize = args.next().map_or(8192, |s| s.parse().expect("n"));
    let grid = Grid::new(n, 64.0)?;
    let t_b = blowup_time(1.0, beta).expect("beta != 1");

    let u0 = two_param_soliton(1.0, beta, 0.0, &grid)?;
    let cfg = SolverConfig {
        dt: 1e-3,
        t_end: 1.5 * t_b,
        record_every: 50,
        keep_snapshots: false,
        ..Default::default()
    };
    let traj = evolve(&u0, &cfg)?;
    println!("closed-form blow-up time {t_b:.5}");
    println!("{:?} at t = {:.4} ({:?})", traj.termination, traj.end_time, traj.blowup);

    let times: Vec<f64> = traj.diagnostics.iter().map(|d| d.time).collect();
    let linf: Vec<f64> = traj.diagnostics.iter().map(|d| d.linf).collect();
    let window = [0.85 * traj.end_time, 0.95 * traj.end_time];
    if let Some(t) = extrapolate_singular_time(&times, &linf, window) {
        println!("extrapolated {t:.5}, relative error {:.2e}", (t - t_b).abs() / t_b);
    }
    Ok(())
}
