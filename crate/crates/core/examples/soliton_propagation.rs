//! Propagates the ground state and compares with `e^{-it}Q`.
//!
//! cargo run --release --example soliton_propagation

use std::ops::ControlFlow;

use nnls_lab::dynamics::{evolve_observed, Scheme, SolverConfig};
use nnls_lab::invariants::{hamiltonian, quasipower};
use nnls_lab::solitons::{ground_state, standing_wave};
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let grid = Grid::new(1024, 64.0)?;
    let q = ground_state(1.0, &grid)?;
    println!("M(Q) = {:.12}, H(Q) = {:.12}", quasipower(&q).re, hamiltonian(&q).re);

    for scheme in [Scheme::IfRk4, Scheme::StrangRk4] {
        let cfg = SolverConfig {
            dt: 1e-3,
            t_end: 5.0,
            scheme,
            record_every: 500,
            ..Default::default()
        };
        let mut worst = 0.0f64;
        let traj = evolve_observed(&q, &cfg, |s| {
            let exact = standing_wave(1.0, s.time, &grid).unwrap();
            let err = (s.field - &exact).norm_h1();
            worst = worst.max(err);
            println!("  {scheme:?} t = {:4.1}  H1 error {err:.3e}", s.time);
            ControlFlow::Continue(())
        })?;
        let m0 = traj.diagnostics[0].invariants.quasipower;
        let m1 = traj.diagnostics.last().unwrap().invariants.quasipower;
        println!("{scheme:?}: sup error {worst:.3e}, quasipower drift {:.3e}", (m1 - m0).norm());
    }
    Ok(())
}
