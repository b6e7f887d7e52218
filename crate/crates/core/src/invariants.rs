//! Conserved and structural functionals: quasipower `M`, Hamiltonian `H`,
//! the two symplectic forms, and the orbital distance `d(u, Q)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::Field;
use crate::solitons::q_profiles;

/// `M` and `H` at one time. Both are complex for generic data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub time: f64,
    pub quasipower: Complex64,
    pub hamiltonian: Complex64,
}

impl InvariantReport {
    pub fn of(u: &Field, time: f64) -> InvariantReport {
        InvariantReport {
            time,
            quasipower: quasipower(u),
            hamiltonian: hamiltonian(u),
        }
    }
}

/// `M[u] = ½ ∫ u u⋆ dx`. The integrand pairs `x` with `-x`, so this is not `½‖u‖²`.
pub fn quasipower(u: &Field) -> Complex64 {
    0.5 * u.hadamard(&u.reflect_conjugate()).integral()
}

/// `H[u] = -½ ∫ ∂xu ∂x(u⋆) dx - ¼ ∫ u² (u⋆)² dx`.
pub fn hamiltonian(u: &Field) -> Complex64 {
    let star = u.reflect_conjugate();
    let kinetic = u.dx().hadamard(&star.dx()).integral();
    let potential = u
        .zip_map(&star, |a, b| {
            let p = a * b;
            p * p
        })
        .integral();
    -0.5 * kinetic - 0.25 * potential
}

/// `ω(f, g) = Im ∫ f⋆ g dx`.
pub fn symplectic(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(f.reflect_conjugate().hadamard(g).integral().im)
}

/// `ω_NLS(f, g) = Im ∫ f* g dx`.
pub fn symplectic_nls(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(f.conj().hadamard(g).integral().im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDistance {
    pub distance: f64,
    /// Minimising phase, in `(-π, π]`.
    pub phase: f64,
}

/// `d(u, Q) = inf_β ‖u - e^{iβ}Q‖_{H¹}`.
///
/// The infimum is attained at `β* = arg (u, Q)_{H¹}`; the distance is then
/// evaluated directly as `‖u - e^{iβ*}Q‖_{H¹}` to avoid cancellation.
pub fn distance_to_q(u: &Field) -> OrbitalDistance {
    let q = &q_profiles(u.grid()).q;
    let overlap = u.inner_h1(q).expect("profiles share the field's grid");
    let phase = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    let rotated = q.scale(Complex64::from_polar(1.0, phase));
    OrbitalDistance {
        distance: (u - &rotated).norm_h1(),
        phase,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::I;
    use crate::grid::Grid;

    #[test]
    fn zero_field_has_zero_invariants() {
        let z = Field::zeros(&Grid::new(64, 10.0).unwrap());
        assert_eq!(quasipower(&z), Complex64::new(0.0, 0.0));
        assert_eq!(hamiltonian(&z), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn quasipower_ignores_global_phase() {
        let g = Grid::default();
        let q = &q_profiles(&g).q;
        let m0 = quasipower(q);
        for phi in [0.3, 1.1, -2.0] {
            let m = quasipower(&q.scale(Complex64::from_polar(1.0, phi)));
            assert!((m - m0).norm() < 1e-12);
        }
    }

    #[test]
    fn symplectic_forms_on_ground_state() {
        let g = Grid::default();
        let q = &q_profiles(&g).q;
        let iq = q.times_i();
        assert!((symplectic(q, &iq).unwrap() - 4.0).abs() < 1e-8);
        assert!(symplectic(q, q).unwrap().abs() < 1e-15);
        let probe = Field::from_fn(&g, |x| Complex64::new((-x * x).exp(), x * (-x * x).exp()));
        let a = symplectic(q, &probe).unwrap();
        let b = symplectic_nls(q, &probe).unwrap();
        assert!((a - b).abs() < 1e-15);
        let _ = I;
    }

    #[test]
    fn distance_vanishes_on_the_phase_orbit() {
        let g = Grid::default();
        let q = &q_profiles(&g).q;
        let d = distance_to_q(q);
        assert!(d.distance < 1e-14 && d.phase.abs() < 1e-14);
        let d = distance_to_q(&q.scale(Complex64::from_polar(1.0, 0.7)));
        assert!(d.distance < 1e-12);
        assert!((d.phase - 0.7).abs() < 1e-12);
    }
}
