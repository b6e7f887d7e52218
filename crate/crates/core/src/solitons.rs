//! Closed-form solutions: the ground state `Q_α(x) = 2√2 α / (e^{αx} + e^{-αx})`,
//! its standing wave, the two-parameter family that blows up at
//! `|t| = π/|α² - β²|`, and the profiles spanning the root spaces at zero.
//!
//! `Q'` always denotes the α-derivative `∂_α Q_α |_{α=1} = (1 + x∂x)Q`; the
//! spatial derivative is `∂xQ`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Denominator modulus below which the two-parameter soliton is treated as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub alpha: f64,
    pub beta: f64,
}

impl SolitonParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(SolitonParams { alpha, beta })
    }

    pub fn blowup_time(&self) -> Option<f64> {
        blowup_time(self.alpha, self.beta)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn sech(x: f64) -> f64 {
    // 1/cosh underflows gracefully to 0 for large |x|
    1.0 / x.cosh()
}

/// `Q_α(x)`.
pub fn q_alpha_at(alpha: f64, x: f64) -> f64 {
    SQRT_2 * alpha * sech(alpha * x)
}

/// `∂_α Q_α(x) = √2 sech(αx) (1 - αx tanh(αx))`.
pub fn q_alpha_prime_at(alpha: f64, x: f64) -> f64 {
    let s = alpha * x;
    SQRT_2 * sech(s) * (1.0 - s * s.tanh())
}

/// `∂²_α Q_α(x) = √2 x sech(s) (s tanh² s - s sech² s - 2 tanh s)`, `s = αx`.
pub fn q_alpha_second_at(alpha: f64, x: f64) -> f64 {
    let s = alpha * x;
    let (t, h) = (s.tanh(), sech(s));
    SQRT_2 * x * h * (s * t * t - s * h * h - 2.0 * t)
}

pub fn ground_state(alpha: f64, grid: &Grid) -> Result<Field> {
    check_positive("alpha", alpha)?;
    Ok(Field::from_real_fn(grid, |x| q_alpha_at(alpha, x)))
}

/// `Q'_α` sampled from its closed form.
pub fn ground_state_alpha_derivative(alpha: f64, grid: &Grid) -> Result<Field> {
    check_positive("alpha", alpha)?;
    Ok(Field::from_real_fn(grid, |x| q_alpha_prime_at(alpha, x)))
}

/// `Q''_α = ∂²_α Q_α` sampled from its closed form.
pub fn ground_state_alpha_second_derivative(alpha: f64, grid: &Grid) -> Result<Field> {
    check_positive("alpha", alpha)?;
    Ok(Field::from_real_fn(grid, |x| q_alpha_second_at(alpha, x)))
}

/// `e^{-itα²} Q_α`.
pub fn standing_wave(alpha: f64, t: f64, grid: &Grid) -> Result<Field> {
    let phase = Complex64::from_polar(1.0, -t * alpha * alpha);
    Ok(ground_state(alpha, grid)?.scale(phase))
}

fn two_param_denominator(alpha: f64, beta: f64, t: f64, x: f64) -> Complex64 {
    Complex64::from_polar((alpha * x).exp(), alpha * alpha * t)
        + Complex64::from_polar((-beta * x).exp(), beta * beta * t)
}

/// `u_{α,β}(t,x) = √2(α+β) / (e^{iα²t+αx} + e^{iβ²t-βx})` at a single point.
pub fn two_param_soliton_at(alpha: f64, beta: f64, t: f64, x: f64) -> Result<Complex64> {
    let d = two_param_denominator(alpha, beta, t, x);
    let modulus = d.norm();
    if !(modulus >= SINGULAR_DENOMINATOR) {
        return Err(Error::SingularEvaluation { t, x, modulus });
    }
    Ok(SQRT_2 * (alpha + beta) / d)
}

pub fn two_param_soliton(alpha: f64, beta: f64, t: f64, grid: &Grid) -> Result<Field> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let values = grid
        .points()
        .iter()
        .map(|&x| two_param_soliton_at(alpha, beta, t, x))
        .collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}

/// Analytic `∂t u_{α,β}`, used to check the closed form against the equation.
pub fn two_param_soliton_dt(alpha: f64, beta: f64, t: f64, grid: &Grid) -> Result<Field> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let c = SQRT_2 * (alpha + beta);
    let values = grid
        .points()
        .iter()
        .map(|&x| {
            let ea = Complex64::from_polar((alpha * x).exp(), alpha * alpha * t);
            let eb = Complex64::from_polar((-beta * x).exp(), beta * beta * t);
            let d = ea + eb;
            if d.norm() < SINGULAR_DENOMINATOR {
                return Err(Error::SingularEvaluation {
                    t,
                    x,
                    modulus: d.norm(),
                });
            }
            let dd = Complex64::i() * (alpha * alpha * ea + beta * beta * eb);
            Ok(-c * dd / (d * d))
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}

/// First positive blow-up time `π/|α² - β²|`; `None` when `α = β` (no blow-up).
///
/// The singularity is two-sided: the closed form is singular at both
/// `t = ±π/|α²-β²|`.
pub fn blowup_time(alpha: f64, beta: f64) -> Option<f64> {
    let gap = (alpha * alpha - beta * beta).abs();
    if gap == 0.0 || !gap.is_finite() {
        None
    } else {
        Some(PI / gap)
    }
}

/// The four profiles spanning the root spaces at zero, plus `M(Q) = ½∫Q²`.
#[derive(Clone, Debug)]
pub struct QProfiles {
    pub q: Field,
    /// `Q' = (1 + x∂x)Q`, computed with the spectral derivative.
    pub q_prime: Field,
    pub dx_q: Field,
    pub x_q: Field,
    /// Quasipower of `Q` by quadrature.
    pub mass: f64,
}

impl QProfiles {
    fn compute(grid: &Grid) -> QProfiles {
        let q = ground_state(1.0, grid).expect("alpha = 1 is valid");
        let dx_q = q.dx();
        let x_q = q.times_x();
        let q_prime = &q + &dx_q.times_x();
        let mass = 0.5 * q.semi_inner_unchecked(&q);
        QProfiles {
            q,
            q_prime,
            dx_q,
            x_q,
            mass,
        }
    }
}

/// Profiles for `grid`, computed once per grid and shared by its clones.
pub fn q_profiles(grid: &Grid) -> &QProfiles {
    grid.profiles_cell().get_or_init(|| QProfiles::compute(grid))
}

pub fn q_prime(grid: &Grid) -> Field {
    q_profiles(grid).q_prime.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value() {
        assert!((q_alpha_at(1.0, 0.0) - SQRT_2).abs() < 1e-15);
        let g = Grid::default();
        let q = ground_state(1.0, &g).unwrap();
        assert!((q.norm_inf() - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(ground_state(0.0, &g).is_err());
        assert!(ground_state(-1.0, &g).is_err());
        assert!(two_param_soliton(1.0, 0.0, 0.0, &g).is_err());
        assert!(SolitonParams::new(1.0, -0.5).is_err());
    }

    #[test]
    fn scaling_of_ground_state() {
        let g = Grid::default();
        let q2 = ground_state(2.0, &g).unwrap();
        let expect = Field::from_real_fn(&g, |x| 2.0 * q_alpha_at(1.0, 2.0 * x));
        assert!(q2.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn standing_wave_phases() {
        let g = Grid::default();
        let q = ground_state(1.0, &g).unwrap();
        assert!(standing_wave(1.0, 0.0, &g).unwrap().max_abs_diff(&q) < 1e-15);
        let w = standing_wave(1.0, PI, &g).unwrap();
        assert!(w.max_abs_diff(&q.scale_real(-1.0)) < 1e-12);
    }

    #[test]
    fn blowup_time_values() {
        let t = blowup_time(1.0, 0.9).unwrap();
        assert!((t - PI / 0.19).abs() < 1e-12);
        assert!((t - 16.53469).abs() < 1e-5);
        assert_eq!(blowup_time(0.9, 1.0), Some(t));
        assert_eq!(blowup_time(1.0, 1.0), None);
    }

    #[test]
    fn two_param_value_at_origin() {
        let u = two_param_soliton_at(1.0, 0.9, 0.0, 0.0).unwrap();
        assert!((u.re - SQRT_2 * 1.9 / 2.0).abs() < 1e-14);
        assert!(u.im.abs() < 1e-15);
        assert!((u.re - 1.34350).abs() < 1e-5);
    }

    #[test]
    fn singular_point_is_reported() {
        let t = blowup_time(1.0, 0.9).unwrap();
        let err = two_param_soliton_at(1.0, 0.9, t, 0.0);
        assert!(matches!(err, Err(Error::SingularEvaluation { .. })));
    }

    #[test]
    fn q_prime_at_origin() {
        let g = Grid::default();
        let p = q_profiles(&g);
        let mid = g.n() / 2;
        assert!((p.q_prime.values()[mid].re - SQRT_2).abs() < 1e-12);
        assert!((p.mass - 2.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_derivatives_match_finite_differences() {
        let h = 1e-4;
        for &alpha in &[0.8, 1.0, 1.3] {
            for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
                let fd1 = (q_alpha_at(alpha + h, x) - q_alpha_at(alpha - h, x)) / (2.0 * h);
                let fd2 = (q_alpha_at(alpha + h, x) - 2.0 * q_alpha_at(alpha, x)
                    + q_alpha_at(alpha - h, x))
                    / (h * h);
                assert!((fd1 - q_alpha_prime_at(alpha, x)).abs() < 1e-7);
                assert!((fd2 - q_alpha_second_at(alpha, x)).abs() < 1e-6);
            }
        }
    }
}
