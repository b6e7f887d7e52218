//! Linearised operators: kernel identities, the conjugation checks and the
//! root-space chains.
//!
//! cargo run --release --example operators

use nnls_lab::linops::{identity_suite, root_space_check, Operand, OperatorHandle, OperatorKind};
use nnls_lab::solitons::q_profiles;
use nnls_lab::Grid;

fn main() -> nnls_lab::Result<()> {
    for (n, len) in [(64, 20.0), (256, 40.0), (1024, 64.0)] {
        let grid = Grid::new(n, len)?;
        let ids = identity_suite(&grid, 20, 1)?;
        println!(
            "n = {n:5}, L = {len}: profile identities {:.2e}, conjugation {:.2e}, sigma1 plain {:.2e} / corrected {:.2e}",
            ids.profile_max(),
            ids.conjugation_he.max(ids.conjugation_ho),
            ids.sigma1_plain,
            ids.sigma1_corrected
        );
    }

    let grid = Grid::default();
    let p = q_profiles(&grid);
    let lp = OperatorHandle::new(OperatorKind::LPlus, &grid);
    let img = lp.apply(&Operand::Single(p.q_prime.clone()))?.single()?;
    println!("‖L₊Q' + 2Q‖_∞ = {:.3e}", (&img + &p.q.scale_real(2.0)).norm_inf());

    let roots = root_space_check(&grid)?;
    println!("{roots:#?}");
    Ok(())
}
