//! Dense spectra of the linearised operators at n = 512.
//!
//! cargo run --release --example spectrum

use nnls_lab::linops::{discrete_spectrum, OperatorHandle, OperatorKind};
use nnls_lab::solitons::q_profiles;
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    let grid = Grid::new(512, 64.0)?;
    for kind in [OperatorKind::He, OperatorKind::Ho, OperatorKind::LMinus, OperatorKind::LPlus] {
        let s = discrete_spectrum(&OperatorHandle::new(kind, &grid), 8, 1e-3)?;
        println!(
            "{kind:?}: dim {}, |λ| ≤ 1e-3: {}, in the gap: {}",
            s.dimension, s.zero_cluster, s.gap_count
        );
        for l in &s.eigenvalues {
            println!("    {:+.6e} {:+.6e}i", l.re, l.im);
        }
        if let Some(v) = &s.ground_vector {
            let q = &q_profiles(&grid).q;
            let c = v.inner(q)?.norm() / (v.norm_l2() * q.norm_l2());
            println!("    lowest eigenvector vs Q: |cos| = {c:.6}");
        }
    }
    let free = discrete_spectrum(&OperatorHandle::free(OperatorKind::LPlus, &grid), 1, 1e-3)?;
    println!("free operator, smallest |λ| = {:.8}", free.eigenvalues[0].norm());
    Ok(())
}
