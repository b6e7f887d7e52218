//! Separation of `u_{α,β}` from the standing wave, and L² growth toward the
//! singular time, from the closed forms alone.
//!
//! cargo run --release --example lower_bound

use nnls_lab::solitons::{blowup_time, two_param_soliton};
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let grid = Grid::new(4096, 64.0)?;
    let (a, b) = (1.0, 0.99);
    println!("{:>6} {:>12} {:>10}", "t", "‖diff‖", "ratio");
    for i in 0..=10 {
        let t = i as f64;
        let d = (&two_param_soliton(a, a, t, &grid)? - &two_param_soliton(a, b, t, &grid)?).norm_l2();
        println!("{t:6.1} {d:12.5e} {:10.4}", d / ((a - b) * (1.0 + t)));
    }

    let t_b = blowup_time(a, b).unwrap();
    let fine = Grid::new(65536, 64.0)?;
    let l0 = two_param_soliton(a, b, 0.0, &fine)?.norm_l2();
    for frac in [0.5, 0.9, 0.99, 0.999] {
        let l = two_param_soliton(a, b, frac * t_b, &fine)?.norm_l2();
        println!("t = {frac} T: L2 norm grew by {:.3}", l / l0);
    }
    Ok(())
}
