//! Modulation coordinates around the ground state.
//!
//! A state near the phase orbit of `Q` is written `u = e^{iθ}(Q_α + v)` with
//! `(θ, α)` fixed by `⟨iv | Q'_α⟩ = ⟨v | Q_α⟩ = 0`. The perturbation is split
//! into even and odd parts and expanded on the root-space profiles:
//!
//! ```text
//! v_e = a_e iQ + b_e Q' + η_e,     v_o = a_o i∂xQ + b_o xQ + η_o
//! ```
//!
//! with `η_e ⟂ {Q, iQ'}` and `η_o ⟂ {∂xQ, i xQ}` for the real pairing
//! `⟨f | g⟩ = Re ∫ f g*`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, I};
use crate::grid::Grid;
use crate::solitons::{
    q_alpha_at, q_alpha_prime_at, q_alpha_second_at, q_profiles, QProfiles,
};

pub const FIT_TOLERANCE: f64 = 1e-11;
pub const FIT_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationFit {
    pub theta: f64,
    pub alpha: f64,
    pub iterations: usize,
    /// `[⟨iv | Q'_α⟩, ⟨v | Q_α⟩]` at the returned parameters.
    pub residuals: [f64; 2],
}

struct AlphaProfiles {
    q: Field,
    qp: Field,
    qpp: Field,
}

fn alpha_profiles(grid: &Grid, alpha: f64) -> AlphaProfiles {
    AlphaProfiles {
        q: Field::from_real_fn(grid, |x| q_alpha_at(alpha, x)),
        qp: Field::from_real_fn(grid, |x| q_alpha_prime_at(alpha, x)),
        qpp: Field::from_real_fn(grid, |x| q_alpha_second_at(alpha, x)),
    }
}

fn constraint_residuals(u: &Field, theta: f64, p: &AlphaProfiles) -> (Field, [f64; 2]) {
    let v = &u.scale(Complex64::from_polar(1.0, -theta)) - &p.q;
    let f1 = v.times_i().semi_inner_unchecked(&p.qp);
    let f2 = v.semi_inner_unchecked(&p.q);
    (v, [f1, f2])
}

/// Newton iteration on the two orthogonality constraints, started at `guess`.
///
/// The phase is not reduced modulo 2π, so warm starts from the previous
/// snapshot give a continuous `θ(t)`.
pub fn fit_modulation(u: &Field, guess: (f64, f64)) -> Result<ModulationFit> {
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    let (mut theta, mut alpha) = guess;
    if !(alpha.is_finite() && alpha > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "initial guess must be finite with alpha > 0",
        });
    }
    let grid = u.grid();
    let mut residuals = [f64::NAN; 2];
    for iteration in 0..=FIT_MAX_ITERATIONS {
        let p = alpha_profiles(grid, alpha);
        let (v, r) = constraint_residuals(u, theta, &p);
        residuals = r;
        if r[0].abs() < FIT_TOLERANCE && r[1].abs() < FIT_TOLERANCE {
            return Ok(ModulationFit {
                theta,
                alpha,
                iterations: iteration,
                residuals,
            });
        }
        if iteration == FIT_MAX_ITERATIONS {
            break;
        }
        let iv = v.times_i();
        let j11 = (&v + &p.q).semi_inner_unchecked(&p.qp);
        let j12 = iv.semi_inner_unchecked(&p.qpp);
        let j21 = -iv.semi_inner_unchecked(&p.q);
        let j22 = -p.qp.semi_inner_unchecked(&p.q) + v.semi_inner_unchecked(&p.qp);
        let det = j11 * j22 - j12 * j21;
        if !(det.abs() > 1e-300) || !det.is_finite() {
            break;
        }
        let d_theta = (j22 * r[0] - j12 * r[1]) / det;
        let d_alpha = (-j21 * r[0] + j11 * r[1]) / det;
        theta -= d_theta;
        alpha -= d_alpha;
        if !(alpha > 0.0 && alpha.is_finite() && theta.is_finite()) {
            break;
        }
    }
    Err(Error::FitFailure {
        iterations: FIT_MAX_ITERATIONS,
        residuals,
    })
}

#[derive(Clone, Debug)]
pub struct ModulationCoords {
    pub theta: f64,
    pub alpha: f64,
    pub a_e: f64,
    pub b_e: f64,
    pub a_o: f64,
    pub b_o: f64,
    pub eta_e: Field,
    pub eta_o: Field,
    /// `e^{-iθ} u - Q_α`.
    pub v: Field,
}

/// Pairings that normalise the four coordinate projections. Each equals
/// `M(Q)` up to quadrature error; using the discrete values makes the
/// residuals orthogonal to machine precision.
struct Normalizers {
    a_e: f64,
    b_e: f64,
    a_o: f64,
    b_o: f64,
}

fn normalizers(p: &QProfiles) -> Normalizers {
    let iq = p.q.times_i();
    let idq = p.dx_q.times_i();
    Normalizers {
        a_e: -iq.times_i().semi_inner_unchecked(&p.q_prime),
        b_e: p.q_prime.semi_inner_unchecked(&p.q),
        a_o: idq.times_i().semi_inner_unchecked(&p.x_q),
        b_o: -p.x_q.semi_inner_unchecked(&p.dx_q),
    }
}

/// Root-space coefficients `(a, b)` and residual of an even field.
fn split_even(ve: &Field, p: &QProfiles, nz: &Normalizers) -> (f64, f64, Field) {
    let a = -ve.times_i().semi_inner_unchecked(&p.q_prime) / nz.a_e;
    let b = ve.semi_inner_unchecked(&p.q) / nz.b_e;
    let eta = ve.zip_map(&p.q, |f, q| f - a * I * q).zip_map(&p.q_prime, |f, qp| f - b * qp);
    (a, b, eta)
}

/// Root-space coefficients `(a, b)` and residual of an odd field.
fn split_odd(vo: &Field, p: &QProfiles, nz: &Normalizers) -> (f64, f64, Field) {
    let a = vo.times_i().semi_inner_unchecked(&p.x_q) / nz.a_o;
    let b = -vo.semi_inner_unchecked(&p.dx_q) / nz.b_o;
    let eta = vo.zip_map(&p.dx_q, |f, d| f - a * I * d).zip_map(&p.x_q, |f, xq| f - b * xq);
    (a, b, eta)
}

/// `[a_e, b_e, a_o, b_o]` of an arbitrary perturbation `w`, by linearity the
/// rates of change when `w = ∂t v`.
pub fn root_coefficients(w: &Field) -> [f64; 4] {
    let p = q_profiles(w.grid());
    let nz = normalizers(p);
    let (we, wo) = w.even_odd_split();
    let (a_e, b_e, _) = split_even(&we, p, &nz);
    let (a_o, b_o, _) = split_odd(&wo, p, &nz);
    [a_e, b_e, a_o, b_o]
}

/// Coordinates of `u` for given `(θ, α)`, normally taken from [`fit_modulation`].
pub fn decompose(u: &Field, theta: f64, alpha: f64) -> ModulationCoords {
    let grid = u.grid();
    let q_alpha = Field::from_real_fn(grid, |x| q_alpha_at(alpha, x));
    let v = &u.scale(Complex64::from_polar(1.0, -theta)) - &q_alpha;
    let p = q_profiles(grid);
    let nz = normalizers(p);
    let (ve, vo) = v.even_odd_split();
    let (a_e, b_e, eta_e) = split_even(&ve, p, &nz);
    let (a_o, b_o, eta_o) = split_odd(&vo, p, &nz);
    ModulationCoords {
        theta,
        alpha,
        a_e,
        b_e,
        a_o,
        b_o,
        eta_e,
        eta_o,
        v,
    }
}

impl ModulationCoords {
    /// `v` rebuilt from the coefficients and residuals.
    pub fn reconstruct_v(&self) -> Field {
        let p = q_profiles(self.v.grid());
        let mut out = &self.eta_e + &self.eta_o;
        let terms = [
            (Complex64::new(0.0, self.a_e), &p.q),
            (Complex64::new(self.b_e, 0.0), &p.q_prime),
            (Complex64::new(0.0, self.a_o), &p.dx_q),
            (Complex64::new(self.b_o, 0.0), &p.x_q),
        ];
        for (c, f) in terms {
            out += &f.scale(c);
        }
        out
    }

    /// `e^{iθ}(Q_α + v)`.
    pub fn reconstruct_u(&self) -> Field {
        let q_alpha = Field::from_real_fn(self.v.grid(), |x| q_alpha_at(self.alpha, x));
        (&q_alpha + &self.reconstruct_v()).scale(Complex64::from_polar(1.0, self.theta))
    }

    pub fn v_even(&self) -> Field {
        self.v.even_part()
    }

    pub fn v_odd(&self) -> Field {
        self.v.odd_part()
    }

    /// `⟨iv_e | Q'_α - Q'⟩ / M(Q)`, which equals `a_e` whenever the
    /// constraints hold.
    pub fn a_e_from_constraint(&self) -> f64 {
        let grid = self.v.grid();
        let p = q_profiles(grid);
        let diff = Field::from_real_fn(grid, |x| q_alpha_prime_at(self.alpha, x)) - p.q_prime.clone();
        self.v_even().times_i().semi_inner_unchecked(&diff) / p.mass
    }

    /// The four orthogonality pairings of the residuals.
    pub fn orthogonality_residuals(&self) -> [f64; 4] {
        let p = q_profiles(self.v.grid());
        [
            self.eta_e.semi_inner_unchecked(&p.q),
            self.eta_e.times_i().semi_inner_unchecked(&p.q_prime),
            self.eta_o.semi_inner_unchecked(&p.dx_q),
            self.eta_o.times_i().semi_inner_unchecked(&p.x_q),
        ]
    }
}

/// Fit followed by decomposition, warm-started from the previous call.
#[derive(Clone, Debug)]
pub struct ModulationTracker {
    guess: (f64, f64),
}

impl Default for ModulationTracker {
    fn default() -> Self {
        ModulationTracker { guess: (0.0, 1.0) }
    }
}

impl ModulationTracker {
    pub fn new(theta: f64, alpha: f64) -> Self {
        ModulationTracker {
            guess: (theta, alpha),
        }
    }

    /// Fits `u`, shifting the phase guess by `phase_advance` first (for states
    /// near the standing wave, minus the time since the previous call).
    pub fn track(&mut self, u: &Field, phase_advance: f64) -> Result<(ModulationFit, ModulationCoords)> {
        let guess = (self.guess.0 + phase_advance, self.guess.1);
        let fit = fit_modulation(u, guess)?;
        self.guess = (fit.theta, fit.alpha);
        Ok((fit, decompose(u, fit.theta, fit.alpha)))
    }
}

/// Removes the even root-space components of the even part of `seed`.
pub fn project_even(seed: &Field) -> Field {
    let p = q_profiles(seed.grid());
    split_even(&seed.even_part(), p, &normalizers(p)).2
}

/// Removes the odd root-space components of the odd part of `seed`.
pub fn project_odd(seed: &Field) -> Field {
    let p = q_profiles(seed.grid());
    split_odd(&seed.odd_part(), p, &normalizers(p)).2
}

/// Coefficients `(ã_e, b̃_e, ã_o, b̃_o)` of the initial perturbation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierCoefficients {
    pub a_e: f64,
    pub b_e: f64,
    pub a_o: f64,
    pub b_o: f64,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub u0: Field,
    pub w0: Field,
    pub eta_e: Field,
    pub eta_o: Field,
    /// `‖u₀ - Q‖_{H¹}`.
    pub distance_h1: f64,
}

/// Assembles `u₀ = Q + ã_e iQ + b̃_e Q' + η_e + ã_o i∂xQ + b̃_o xQ + η_o`.
///
/// `ã_e, b̃_e, ã_o` must not exceed `tier_constant · ε` and `b̃_o`, `‖η_e‖_{H¹}`,
/// `‖η_o‖_{H¹}` must not exceed `tier_constant · ε²`. Seeds are first reduced to
/// their even (resp. odd) part and projected off the root space, and the
/// size check applies to the projected residuals.
pub fn build_initial_data(
    grid: &Grid,
    epsilon: f64,
    coeffs: TierCoefficients,
    seeds: Option<(&Field, &Field)>,
    tier_constant: f64,
) -> Result<InitialData> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be finite and non-negative",
        });
    }
    if !(tier_constant.is_finite() && tier_constant > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tier_constant",
            value: tier_constant,
            reason: "must be positive",
        });
    }
    let first = tier_constant * epsilon;
    let second = tier_constant * epsilon * epsilon;
    let slack = 1.0 + 1e-12;
    let check = |name: &'static str, value: f64, bound: f64| -> Result<()> {
        if value.is_finite() && value.abs() <= bound * slack {
            Ok(())
        } else {
            Err(Error::TierViolation {
                coefficient: name,
                value,
                bound,
            })
        }
    };
    check("a_e", coeffs.a_e, first)?;
    check("b_e", coeffs.b_e, first)?;
    check("a_o", coeffs.a_o, first)?;
    check("b_o", coeffs.b_o, second)?;

    let (eta_e, eta_o) = match seeds {
        Some((se, so)) => {
            if !se.grid().same_as(grid) || !so.grid().same_as(grid) {
                return Err(Error::GridMismatch);
            }
            (project_even(se), project_odd(so))
        }
        None => (Field::zeros(grid), Field::zeros(grid)),
    };
    check("eta_e", eta_e.norm_h1(), second)?;
    check("eta_o", eta_o.norm_h1(), second)?;

    let p = q_profiles(grid);
    let mut w0 = &eta_e + &eta_o;
    w0 += &p.q.scale(Complex64::new(0.0, coeffs.a_e));
    w0 += &p.q_prime.scale_real(coeffs.b_e);
    w0 += &p.dx_q.scale(Complex64::new(0.0, coeffs.a_o));
    w0 += &p.x_q.scale_real(coeffs.b_o);
    let u0 = &p.q + &w0;
    Ok(InitialData {
        distance_h1: w0.norm_h1(),
        u0,
        w0,
        eta_e,
        eta_o,
    })
}

/// Smooth localized random field `Σ_{m<6} c_m x^m e^{-x²/2}` with complex
/// coefficients drawn uniformly from the unit square, normalised to H¹ norm
/// `h1_norm`.
pub fn random_smooth_field(grid: &Grid, rng: &mut impl Rng, h1_norm: f64) -> Field {
    let coeffs: Vec<Complex64> = (0..6)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let f = Field::from_fn(grid, |x| {
        let g = (-0.5 * x * x).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = 1.0;
        for c in &coeffs {
            acc += c * pow;
            pow *= x;
        }
        acc * g
    });
    let norm = f.norm_h1();
    if norm > 0.0 {
        f.scale_real(h1_norm / norm)
    } else {
        f
    }
}

/// A reproducible tiered fixture: coefficients and projected seeds drawn
/// from a ChaCha stream, each within `fill · tier`.
pub fn random_tiered_fixture(
    grid: &Grid,
    epsilon: f64,
    fill: f64,
    seed: u64,
) -> (TierCoefficients, Field, Field) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e1 = fill * epsilon;
    let e2 = fill * epsilon * epsilon;
    let coeffs = TierCoefficients {
        a_e: rng.random_range(-1.0..1.0) * e1,
        b_e: rng.random_range(-1.0..1.0) * e1,
        a_o: rng.random_range(-1.0..1.0) * e1,
        b_o: rng.random_range(-1.0..1.0) * e2,
    };
    let se = project_even(&random_smooth_field(grid, &mut rng, 1.0));
    let so = project_odd(&random_smooth_field(grid, &mut rng, 1.0));
    let scale_to = |f: Field, target: f64| {
        let n = f.norm_h1();
        if n > 0.0 {
            f.scale_real(target / n)
        } else {
            f
        }
    };
    let re = rng.random_range(0.0..1.0) * e2;
    let ro = rng.random_range(0.0..1.0) * e2;
    (coeffs, scale_to(se, re), scale_to(so, ro))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapObservables {
    pub lambda: f64,
    pub xi: f64,
}

/// `Λ = |a_e|+|b_e|+|a_o|+|b_o|+‖η_e‖_{H¹}+‖η_o‖_{H¹}+|α-1|` and
/// `Ξ = |1+θ̇|+|α̇|`.
pub fn bootstrap_observables(
    coords: &ModulationCoords,
    theta_dot: f64,
    alpha_dot: f64,
) -> BootstrapObservables {
    let lambda = coords.a_e.abs()
        + coords.b_e.abs()
        + coords.a_o.abs()
        + coords.b_o.abs()
        + coords.eta_e.norm_h1()
        + coords.eta_o.norm_h1()
        + (coords.alpha - 1.0).abs();
    BootstrapObservables {
        lambda,
        xi: (1.0 + theta_dot).abs() + alpha_dot.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::ground_state;

    #[test]
    fn ground_state_fits_immediately() {
        let g = Grid::default();
        let q = ground_state(1.0, &g).unwrap();
        let fit = fit_modulation(&q, (0.0, 1.0)).unwrap();
        assert_eq!(fit.iterations, 0);
        assert_eq!((fit.theta, fit.alpha), (0.0, 1.0));
    }

    #[test]
    fn recovers_phase_and_scale() {
        let g = Grid::default();
        let u = ground_state(1.05, &g).unwrap().scale(Complex64::from_polar(1.0, 0.3));
        let fit = fit_modulation(&u, (0.0, 1.0)).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-10);
        assert!((fit.alpha - 1.05).abs() < 1e-10);
    }

    #[test]
    fn basis_projections() {
        let g = Grid::default();
        let p = q_profiles(&g);
        let u = &p.q + &p.q.scale(Complex64::new(0.0, 0.01));
        let c = decompose(&u, 0.0, 1.0);
        assert!((c.a_e - 0.01).abs() < 1e-12);
        assert!(c.b_e.abs() < 1e-12 && c.a_o.abs() < 1e-12 && c.b_o.abs() < 1e-12);
        assert!(c.eta_e.norm_l2() < 1e-12 && c.eta_o.norm_l2() < 1e-12);

        let u = &p.q + &p.q_prime.scale_real(0.02);
        let c = decompose(&u, 0.0, 1.0);
        assert!((c.b_e - 0.02).abs() < 1e-12 && c.a_e.abs() < 1e-12);

        let v = &p.dx_q.scale(Complex64::new(0.0, 0.01)) + &p.x_q.scale_real(0.003);
        let c = decompose(&(&p.q + &v), 0.0, 1.0);
        assert!((c.a_o - 0.01).abs() < 1e-12);
        assert!((c.b_o - 0.003).abs() < 1e-12);
        assert!(c.a_e.abs() < 1e-12 && c.b_e.abs() < 1e-12);
    }

    #[test]
    fn tier_violation_names_coefficient() {
        let g = Grid::default();
        let coeffs = TierCoefficients {
            b_o: 2e-4,
            ..Default::default()
        };
        match build_initial_data(&g, 1e-2, coeffs, None, 1.0) {
            Err(Error::TierViolation { coefficient, .. }) => assert_eq!(coefficient, "b_o"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_term_norm() {
        let g = Grid::default();
        let eps = 1e-2;
        let coeffs = TierCoefficients {
            a_e: eps,
            ..Default::default()
        };
        let d = build_initial_data(&g, eps, coeffs, None, 1.0).unwrap();
        let q = &q_profiles(&g).q;
        assert!((d.distance_h1 - eps * q.norm_h1()).abs() < 1e-14);
        let zero = build_initial_data(&g, eps, TierCoefficients::default(), None, 1.0).unwrap();
        assert_eq!(zero.u0.values(), q.values());
    }

    #[test]
    fn observables_arithmetic() {
        let g = Grid::default();
        let mut c = decompose(&q_profiles(&g).q, 0.0, 1.0);
        let b = bootstrap_observables(&c, -1.0, 0.0);
        assert_eq!((b.lambda, b.xi), (0.0, 0.0));
        c.a_e = 1e-2;
        c.b_o = 1e-4;
        let b = bootstrap_observables(&c, -1.0 + 1e-4, 0.0);
        assert!((b.lambda - 0.0101).abs() < 1e-15);
        assert!((b.xi - 1e-4).abs() < 1e-15);
    }
}
