//! Linearised operators at the ground state.
//!
//! ```text
//! L₊ = -∂x² + 1 - 3Q²          L₋ = -∂x² + 1 - Q²
//! 𝓛±v = -∂x²v + v - 2Q²v ± Q² v*          (real-linear)
//! H_e = (-∂x² + 1)σ₃ + Q² [[-2, -1], [1, 2]]      H_o = H_eᵀ
//! P = (1/√2)[[1, i], [1, -i]]
//! ```
//!
//! In `(Re, Im)` blocks `𝓛₊ = diag(L₋, L₊)` and `𝓛₋ = diag(L₊, L₋)`. The
//! conjugated pair operators are `P⁻¹H_eP = i[[0, L₋], [-L₊, 0]]` and
//! `P⁻¹H_oP = i[[0, L₊], [-L₋, 0]]`; the two are related by
//! `P⁻¹H_oP = -σ₁ (P⁻¹H_eP) σ₁`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, I};
use crate::grid::Grid;
use crate::modulation::random_smooth_field;
use crate::solitons::q_profiles;

/// Largest dense matrix dimension assembled by [`OperatorHandle::dense`].
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    LPlus,
    LMinus,
    CalLPlus,
    CalLMinus,
    He,
    Ho,
    PinvHeP,
    PinvHoP,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 8] = [
        OperatorKind::LPlus,
        OperatorKind::LMinus,
        OperatorKind::CalLPlus,
        OperatorKind::CalLMinus,
        OperatorKind::He,
        OperatorKind::Ho,
        OperatorKind::PinvHeP,
        OperatorKind::PinvHoP,
    ];

    fn takes_pair(self) -> bool {
        matches!(
            self,
            OperatorKind::He | OperatorKind::Ho | OperatorKind::PinvHeP | OperatorKind::PinvHoP
        )
    }

    fn is_symmetric(self) -> bool {
        matches!(
            self,
            OperatorKind::LPlus | OperatorKind::LMinus | OperatorKind::CalLPlus | OperatorKind::CalLMinus
        )
    }
}

#[derive(Clone, Debug)]
pub enum Operand {
    Single(Field),
    Pair(Field, Field),
}

impl Operand {
    pub fn single(self) -> Result<Field> {
        match self {
            Operand::Single(f) => Ok(f),
            Operand::Pair(..) => Err(Error::KindMismatch("expected a single field")),
        }
    }

    pub fn pair(self) -> Result<(Field, Field)> {
        match self {
            Operand::Pair(f, g) => Ok((f, g)),
            Operand::Single(_) => Err(Error::KindMismatch("expected a pair of fields")),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        match self {
            Operand::Single(f) => f.norm_inf(),
            Operand::Pair(f, g) => f.norm_inf().max(g.norm_inf()),
        }
    }
}

/// Operator on a grid, with potential `Q²` (or zero for the free operator).
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    kind: OperatorKind,
    grid: Grid,
    q2: Vec<f64>,
}

/// `(-∂x² + 1) f`.
fn kinetic(f: &Field) -> Field {
    f - &f.dxx()
}

impl OperatorHandle {
    pub fn new(kind: OperatorKind, grid: &Grid) -> OperatorHandle {
        let q2 = q_profiles(grid).q.values().iter().map(|c| c.re * c.re).collect();
        OperatorHandle {
            kind,
            grid: grid.clone(),
            q2,
        }
    }

    /// Same operator with the potential switched off.
    pub fn free(kind: OperatorKind, grid: &Grid) -> OperatorHandle {
        OperatorHandle {
            kind,
            grid: grid.clone(),
            q2: vec![0.0; grid.n()],
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn potential(&self, f: &Field, c: f64) -> Field {
        let values = f.values().iter().zip(&self.q2).map(|(z, w)| z * (c * w)).collect();
        Field::from_vec(&self.grid, values)
    }

    fn l_plus(&self, f: &Field) -> Field {
        kinetic(f) - self.potential(f, 3.0)
    }

    fn l_minus(&self, f: &Field) -> Field {
        kinetic(f) - self.potential(f, 1.0)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Matrix-free application.
    pub fn apply(&self, x: &Operand) -> Result<Operand> {
        match x {
            Operand::Single(f) => {
                if self.kind.takes_pair() {
                    return Err(Error::KindMismatch("pair operator applied to a single field"));
                }
                self.check(f)?;
                Ok(Operand::Single(self.apply_single(f)))
            }
            Operand::Pair(f, g) => {
                if !self.kind.takes_pair() {
                    return Err(Error::KindMismatch("scalar operator applied to a pair"));
                }
                self.check(f)?;
                self.check(g)?;
                let (a, b) = self.apply_pair(f, g);
                Ok(Operand::Pair(a, b))
            }
        }
    }

    fn apply_single(&self, f: &Field) -> Field {
        match self.kind {
            OperatorKind::LPlus => self.l_plus(f),
            OperatorKind::LMinus => self.l_minus(f),
            OperatorKind::CalLPlus | OperatorKind::CalLMinus => {
                let sign = if self.kind == OperatorKind::CalLPlus { 1.0 } else { -1.0 };
                let base = kinetic(f) - self.potential(f, 2.0);
                base + self.potential(&f.conj(), sign)
            }
            _ => unreachable!("pair kinds are dispatched to apply_pair"),
        }
    }

    fn apply_pair(&self, f: &Field, g: &Field) -> (Field, Field) {
        match self.kind {
            OperatorKind::He => (
                kinetic(f) - self.potential(f, 2.0) - self.potential(g, 1.0),
                -kinetic(g) + self.potential(f, 1.0) + self.potential(g, 2.0),
            ),
            OperatorKind::Ho => (
                kinetic(f) - self.potential(f, 2.0) + self.potential(g, 1.0),
                -kinetic(g) - self.potential(f, 1.0) + self.potential(g, 2.0),
            ),
            OperatorKind::PinvHeP => (self.l_minus(g).times_i(), -self.l_plus(f).times_i()),
            OperatorKind::PinvHoP => (self.l_plus(g).times_i(), -self.l_minus(f).times_i()),
            _ => unreachable!("scalar kinds are dispatched to apply_single"),
        }
    }

    /// Dense real matrix. Scalar `L±` give an `n×n` matrix acting on real and
    /// imaginary parts alike; `𝓛±` give a `2n×2n` matrix on stacked
    /// `(Re v, Im v)`; pair operators give a `2n×2n` matrix `A` on stacked
    /// `(f, g)` with the operator equal to `factor · A`.
    pub fn dense(&self) -> Result<DenseOperator> {
        let n = self.grid.n();
        let dim = match self.kind {
            OperatorKind::LPlus | OperatorKind::LMinus => n,
            _ => 2 * n,
        };
        if dim > MAX_DENSE_DIM {
            return Err(Error::MatrixTooLarge {
                size: dim,
                limit: MAX_DENSE_DIM,
            });
        }
        let factor = match self.kind {
            OperatorKind::PinvHeP | OperatorKind::PinvHoP => I,
            _ => Complex64::new(1.0, 0.0),
        };
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let unit = |j: usize, c: Complex64| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[j] = c;
            Field::from_vec(&self.grid, v)
        };
        let zero = Field::zeros(&self.grid);
        for col in 0..dim {
            let column: Vec<f64> = match self.kind {
                OperatorKind::LPlus | OperatorKind::LMinus => {
                    let out = self.apply_single(&unit(col, Complex64::new(1.0, 0.0)));
                    out.values().iter().map(|c| c.re).collect()
                }
                OperatorKind::CalLPlus | OperatorKind::CalLMinus => {
                    let input = if col < n {
                        unit(col, Complex64::new(1.0, 0.0))
                    } else {
                        unit(col - n, I)
                    };
                    let out = self.apply_single(&input);
                    out.values()
                        .iter()
                        .map(|c| c.re)
                        .chain(out.values().iter().map(|c| c.im))
                        .collect()
                }
                _ => {
                    let e = unit(col % n, Complex64::new(1.0, 0.0));
                    let (a, b) = if col < n {
                        self.apply_pair(&e, &zero)
                    } else {
                        self.apply_pair(&zero, &e)
                    };
                    a.values()
                        .iter()
                        .chain(b.values())
                        .map(|c| (c / factor).re)
                        .collect()
                }
            };
            for (row, value) in column.into_iter().enumerate() {
                m[(row, col)] = value;
            }
        }
        Ok(DenseOperator {
            kind: self.kind,
            grid: self.grid.clone(),
            matrix: m,
            factor,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub kind: OperatorKind,
    grid: Grid,
    pub matrix: DMatrix<f64>,
    pub factor: Complex64,
}

impl DenseOperator {
    /// Dense application; agrees with [`OperatorHandle::apply`].
    pub fn apply(&self, x: &Operand) -> Result<Operand> {
        let n = self.grid.n();
        let mul = |re: Vec<f64>| -> Vec<f64> { (&self.matrix * DVector::from_vec(re)).data.into() };
        let to_field = |re: &[f64], im: &[f64]| {
            Field::from_vec(
                &self.grid,
                re.iter()
                    .zip(im)
                    .map(|(&a, &b)| self.factor * Complex64::new(a, b))
                    .collect(),
            )
        };
        match (self.kind, x) {
            (OperatorKind::LPlus | OperatorKind::LMinus, Operand::Single(f)) => {
                let re = mul(f.values().iter().map(|c| c.re).collect());
                let im = mul(f.values().iter().map(|c| c.im).collect());
                Ok(Operand::Single(to_field(&re, &im)))
            }
            (OperatorKind::CalLPlus | OperatorKind::CalLMinus, Operand::Single(f)) => {
                let stacked = mul(
                    f.values()
                        .iter()
                        .map(|c| c.re)
                        .chain(f.values().iter().map(|c| c.im))
                        .collect(),
                );
                Ok(Operand::Single(to_field(&stacked[..n], &stacked[n..])))
            }
            (_, Operand::Pair(f, g)) if self.kind.takes_pair() => {
                let re = mul(f.values().iter().chain(g.values()).map(|c| c.re).collect());
                let im = mul(f.values().iter().chain(g.values()).map(|c| c.im).collect());
                Ok(Operand::Pair(
                    to_field(&re[..n], &im[..n]),
                    to_field(&re[n..], &im[n..]),
                ))
            }
            _ => Err(Error::KindMismatch("operand shape does not match the operator")),
        }
    }
}

fn sup_diff(a: &Operand, b: &Operand) -> f64 {
    match (a, b) {
        (Operand::Single(f), Operand::Single(g)) => f.max_abs_diff(g),
        (Operand::Pair(f1, g1), Operand::Pair(f2, g2)) => f1.max_abs_diff(f2).max(g1.max_abs_diff(g2)),
        _ => f64::INFINITY,
    }
}

/// `P(f, g)`.
pub fn apply_p(f: &Field, g: &Field) -> (Field, Field) {
    let ig = g.times_i();
    ((f + &ig).scale_real(FRAC_1_SQRT_2), (f - &ig).scale_real(FRAC_1_SQRT_2))
}

/// `P⁻¹(f, g)`.
pub fn apply_p_inv(f: &Field, g: &Field) -> (Field, Field) {
    (
        (f + g).scale_real(FRAC_1_SQRT_2),
        (g - f).times_i().scale_real(FRAC_1_SQRT_2),
    )
}

/// `P⁻¹ H P (f, g)` evaluated literally for `H = H_e` or `H_o`.
pub fn conjugate_by_p(h: &OperatorHandle, f: &Field, g: &Field) -> Result<(Field, Field)> {
    let (pf, pg) = apply_p(f, g);
    let (hf, hg) = h.apply(&Operand::Pair(pf, pg))?.pair()?;
    Ok(apply_p_inv(&hf, &hg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `‖L₋Q‖_∞`
    pub l_minus_q: f64,
    /// `‖L₊∂xQ‖_∞`
    pub l_plus_dx_q: f64,
    /// `‖L₊Q' + 2Q‖_∞`
    pub l_plus_q_prime: f64,
    /// `‖L₋(xQ) + 2∂xQ‖_∞`
    pub l_minus_x_q: f64,
    /// Literal `P⁻¹H_eP` against `i[[0, L₋], [-L₊, 0]]`, max over random pairs.
    pub conjugation_he: f64,
    /// Literal `P⁻¹H_oP` against `i[[0, L₊], [-L₋, 0]]`.
    pub conjugation_ho: f64,
    /// `P⁻¹H_oP` against `σ₁ P⁻¹H_eP` (the relation without the sign and
    /// right factor; not an identity).
    pub sigma1_plain: f64,
    /// `P⁻¹H_oP` against `-σ₁ (P⁻¹H_eP) σ₁`.
    pub sigma1_corrected: f64,
    pub random_pairs: usize,
}

impl IdentityReport {
    /// The four profile identities.
    pub fn profile_max(&self) -> f64 {
        self.l_minus_q
            .max(self.l_plus_dx_q)
            .max(self.l_plus_q_prime)
            .max(self.l_minus_x_q)
    }
}

pub fn identity_suite(grid: &Grid, random_pairs: usize, seed: u64) -> Result<IdentityReport> {
    let p = q_profiles(grid);
    let lp = OperatorHandle::new(OperatorKind::LPlus, grid);
    let lm = OperatorHandle::new(OperatorKind::LMinus, grid);
    let he = OperatorHandle::new(OperatorKind::He, grid);
    let ho = OperatorHandle::new(OperatorKind::Ho, grid);
    let pe = OperatorHandle::new(OperatorKind::PinvHeP, grid);
    let po = OperatorHandle::new(OperatorKind::PinvHoP, grid);

    let l_minus_q = lm.l_minus(&p.q).norm_inf();
    let l_plus_dx_q = lp.l_plus(&p.dx_q).norm_inf();
    let l_plus_q_prime = (lp.l_plus(&p.q_prime) + p.q.scale_real(2.0)).norm_inf();
    let l_minus_x_q = (lm.l_minus(&p.x_q) + p.dx_q.scale_real(2.0)).norm_inf();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ce, mut co, mut s_plain, mut s_corr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..random_pairs {
        let f = random_smooth_field(grid, &mut rng, 1.0);
        let g = random_smooth_field(grid, &mut rng, 1.0);
        let pair = Operand::Pair(f.clone(), g.clone());

        let (a, b) = conjugate_by_p(&he, &f, &g)?;
        let lit_e = Operand::Pair(a, b);
        ce = ce.max(sup_diff(&lit_e, &pe.apply(&pair)?));

        let (a, b) = conjugate_by_p(&ho, &f, &g)?;
        let lit_o = Operand::Pair(a, b);
        co = co.max(sup_diff(&lit_o, &po.apply(&pair)?));

        let (e1, e2) = lit_e.pair()?;
        s_plain = s_plain.max(sup_diff(&lit_o, &Operand::Pair(e2, e1)));

        let (a, b) = conjugate_by_p(&he, &g, &f)?;
        s_corr = s_corr.max(sup_diff(&lit_o, &Operand::Pair(-b, -a)));
    }
    Ok(IdentityReport {
        l_minus_q,
        l_plus_dx_q,
        l_plus_q_prime,
        l_minus_x_q,
        conjugation_he: ce,
        conjugation_ho: co,
        sigma1_plain: s_plain,
        sigma1_corrected: s_corr,
        random_pairs,
    })
}

/// Image of a generalised kernel vector: distance from the expected span
/// after one application, and norm after two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub first_off_span: f64,
    pub second: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSpaceReport {
    /// `P⁻¹H_eP (0, Q)`
    pub even_kernel: f64,
    /// `P⁻¹H_eP (Q', 0)`: lands in `span{(0, Q)}`, then vanishes.
    pub even_chain: ChainCheck,
    /// `P⁻¹H_oP (0, ∂xQ)`
    pub odd_kernel: f64,
    /// `P⁻¹H_oP (xQ, 0)`: lands in `span{(0, ∂xQ)}`, then vanishes.
    pub odd_chain: ChainCheck,
    /// `P⁻¹H_eP (∂xQ, 0)`: odd functions under the even operator.
    pub even_operator_odd_kernel: f64,
    /// `P⁻¹H_eP (0, xQ)`: lands in `span{(∂xQ, 0)}`, then vanishes.
    pub even_operator_odd_chain: ChainCheck,
}

impl RootSpaceReport {
    pub fn kernel_max(&self) -> f64 {
        self.even_kernel.max(self.odd_kernel).max(self.even_operator_odd_kernel)
    }

    pub fn chain_max(&self) -> f64 {
        [self.even_chain, self.odd_chain, self.even_operator_odd_chain]
            .iter()
            .map(|c| c.first_off_span.max(c.second))
            .fold(0.0, f64::max)
    }
}

/// Sup norm of `(f, g)` minus its L²-projection onto `span{(a, b)}`.
fn off_span(f: &Field, g: &Field, a: &Field, b: &Field) -> f64 {
    let num = f.inner_unchecked(a) + g.inner_unchecked(b);
    let den = a.inner_unchecked(a).re + b.inner_unchecked(b).re;
    let c = num / den;
    (f - &a.scale(c)).norm_inf().max((g - &b.scale(c)).norm_inf())
}

fn chain(op: &OperatorHandle, x: (Field, Field), span: (&Field, &Field)) -> Result<ChainCheck> {
    let (f, g) = op.apply(&Operand::Pair(x.0, x.1))?.pair()?;
    let first_off_span = off_span(&f, &g, span.0, span.1);
    let second = op.apply(&Operand::Pair(f, g))?.norm_inf();
    Ok(ChainCheck {
        first_off_span,
        second,
    })
}

pub fn root_space_check(grid: &Grid) -> Result<RootSpaceReport> {
    let p = q_profiles(grid);
    let z = Field::zeros(grid);
    let pe = OperatorHandle::new(OperatorKind::PinvHeP, grid);
    let po = OperatorHandle::new(OperatorKind::PinvHoP, grid);
    let kernel = |op: &OperatorHandle, f: &Field, g: &Field| -> Result<f64> {
        Ok(op.apply(&Operand::Pair(f.clone(), g.clone()))?.norm_inf())
    };
    Ok(RootSpaceReport {
        even_kernel: kernel(&pe, &z, &p.q)?,
        even_chain: chain(&pe, (p.q_prime.clone(), z.clone()), (&z, &p.q))?,
        odd_kernel: kernel(&po, &z, &p.dx_q)?,
        odd_chain: chain(&po, (p.x_q.clone(), z.clone()), (&z, &p.dx_q))?,
        even_operator_odd_kernel: kernel(&pe, &p.dx_q, &z)?,
        even_operator_odd_chain: chain(&pe, (z.clone(), p.x_q.clone()), (&p.dx_q, &z))?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub kind: OperatorKind,
    /// Smallest-modulus eigenvalues, ascending by modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Total number of eigenvalues computed.
    pub dimension: usize,
    /// Eigenvalues with modulus at most `gap_margin`.
    pub zero_cluster: usize,
    /// Eigenvalues with modulus in `(gap_margin, 1 - gap_margin)`.
    pub gap_count: usize,
    pub gap_margin: f64,
    /// For self-adjoint kinds: eigenvector of the smallest eigenvalue
    /// (real part of the field for `𝓛±`).
    #[serde(skip)]
    pub ground_vector: Option<Field>,
}

impl Spectrum {
    pub fn is_gap_eigenvalue(&self, lambda: Complex64) -> bool {
        let m = lambda.norm();
        m > self.gap_margin && m < 1.0 - self.gap_margin
    }
}

fn sort_by_modulus(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
}

/// Dense eigenvalues of the operator, sorted by modulus; the first `n_eigs`
/// are returned. Self-adjoint kinds use a symmetric solver and also return
/// the lowest eigenvector; pair operators go through a real Schur form.
pub fn discrete_spectrum(op: &OperatorHandle, n_eigs: usize, gap_margin: f64) -> Result<Spectrum> {
    let dense = op.dense()?;
    let dim = dense.matrix.nrows();
    let (mut values, ground_vector) = if op.kind.is_symmetric() {
        let sym = (&dense.matrix + dense.matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lowest = eig.eigenvalues.imin();
        let col = eig.eigenvectors.column(lowest);
        let n = op.grid.n();
        let vec: Vec<Complex64> = (0..n).map(|j| Complex64::new(col[j], 0.0)).collect();
        let values: Vec<Complex64> = eig.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect();
        (values, Some(Field::from_vec(&op.grid, vec)))
    } else {
        let ev = dense.matrix.complex_eigenvalues();
        (ev.iter().map(|&l| dense.factor * l).collect::<Vec<_>>(), None)
    };
    sort_by_modulus(&mut values);
    let zero_cluster = values.iter().filter(|l| l.norm() <= gap_margin).count();
    let gap_count = values
        .iter()
        .filter(|l| l.norm() > gap_margin && l.norm() < 1.0 - gap_margin)
        .count();
    values.truncate(n_eigs.min(dim));
    Ok(Spectrum {
        kind: op.kind,
        eigenvalues: values,
        dimension: dim,
        zero_cluster,
        gap_count,
        gap_margin,
        ground_vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_on_default_grid() {
        let g = Grid::default();
        let p = q_profiles(&g);
        let lm = OperatorHandle::new(OperatorKind::LMinus, &g);
        let out = lm.apply(&Operand::Single(p.q.clone())).unwrap().single().unwrap();
        assert!(out.norm_inf() < 1e-8);
        let lp = OperatorHandle::new(OperatorKind::LPlus, &g);
        let out = lp.apply(&Operand::Single(p.q_prime.clone())).unwrap().single().unwrap();
        assert!((out + p.q.scale_real(2.0)).norm_inf() < 1e-7);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = Grid::new(32, 10.0).unwrap();
        let f = Field::zeros(&g);
        let he = OperatorHandle::new(OperatorKind::He, &g);
        assert!(he.apply(&Operand::Single(f.clone())).is_err());
        let lp = OperatorHandle::new(OperatorKind::LPlus, &g);
        assert!(lp.apply(&Operand::Pair(f.clone(), f)).is_err());
        let other = Field::zeros(&Grid::new(64, 10.0).unwrap());
        assert!(matches!(lp.apply(&Operand::Single(other)), Err(Error::GridMismatch)));
    }

    #[test]
    fn p_round_trip() {
        let g = Grid::new(64, 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_smooth_field(&g, &mut rng, 1.0);
        let h = random_smooth_field(&g, &mut rng, 1.0);
        let (a, b) = apply_p(&f, &h);
        let (c, d) = apply_p_inv(&a, &b);
        assert!(c.max_abs_diff(&f) < 1e-15 && d.max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn dense_matches_matrix_free() {
        let g = Grid::new(64, 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in OperatorKind::ALL {
            let op = OperatorHandle::new(kind, &g);
            let dense = op.dense().unwrap();
            let f = random_smooth_field(&g, &mut rng, 1.0);
            let h = random_smooth_field(&g, &mut rng, 1.0);
            let x = if kind.takes_pair() {
                Operand::Pair(f, h)
            } else {
                Operand::Single(f)
            };
            let a = op.apply(&x).unwrap();
            let b = dense.apply(&x).unwrap();
            assert!(sup_diff(&a, &b) < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn too_large_is_rejected() {
        let g = Grid::new(4096, 64.0).unwrap();
        let op = OperatorHandle::new(OperatorKind::He, &g);
        assert!(matches!(op.dense(), Err(Error::MatrixTooLarge { .. })));
    }
}
