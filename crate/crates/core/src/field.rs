//! Complex fields on a periodic grid: spectral calculus, the reflection
//! conjugation `f⋆(x) = conj(f(-x))`, quadrature norms and inner products.
//!
//! All integrals use the rectangle rule on the periodic grid. Sobolev norms
//! use the weight `(1 + |k|)^{2s}` rather than `(1 + k²)^s`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    post_blowup: bool,
}

/// Unnormalised DFT coefficients of a field (index ordering of [`Grid`]).
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Field {
    /// Validating constructor: one finite sample per grid point.
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if !values.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Field::from_vec(grid, values))
    }

    /// Field captured after a blow-up was flagged; non-finite samples allowed.
    pub fn new_post_blowup(grid: &Grid, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        let mut f = Field::from_vec(grid, values);
        f.post_blowup = true;
        Ok(f)
    }

    pub(crate) fn from_vec(grid: &Grid, values: Vec<Complex64>) -> Field {
        debug_assert_eq!(values.len(), grid.n());
        Field {
            grid: grid.clone(),
            values,
            post_blowup: false,
        }
    }

    pub fn zeros(grid: &Grid) -> Field {
        Field::from_vec(grid, vec![Complex64::new(0.0, 0.0); grid.n()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Field {
        Field::from_vec(grid, grid.points().iter().map(|&x| f(x)).collect())
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec(
            grid,
            grid.points()
                .iter()
                .map(|&x| Complex64::new(f(x), 0.0))
                .collect(),
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_post_blowup(&self) -> bool {
        self.post_blowup
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_vec(&self.grid, self.values.iter().map(|&c| f(c)).collect())
    }

    /// Pointwise combination; panics if the grids differ.
    pub fn zip_map(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        self.assert_same_grid(other);
        Field::from_vec(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    /// Multiplication by the imaginary unit.
    pub fn times_i(&self) -> Field {
        self.map(|v| I * v)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    /// Multiply by the coordinate `x`.
    pub fn times_x(&self) -> Field {
        Field::from_vec(
            &self.grid,
            self.values
                .iter()
                .zip(self.grid.points())
                .map(|(&v, &x)| v * x)
                .collect(),
        )
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn assert_same_grid(&self, other: &Field) {
        assert!(
            self.grid.same_as(&other.grid),
            "pointwise operation on fields from different grids"
        );
    }

    pub fn to_spectral(&self) -> SpectralField {
        let mut coeffs = self.values.clone();
        self.grid.forward(&mut coeffs);
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `f(-x)` by periodic index reversal.
    pub fn reflect(&self) -> Field {
        let n = self.grid.n();
        Field::from_vec(
            &self.grid,
            (0..n)
                .map(|j| self.values[self.grid.mirror_index(j)])
                .collect(),
        )
    }

    /// `f⋆(x) = conj(f(-x))`, computed in physical space.
    pub fn reflect_conjugate(&self) -> Field {
        let n = self.grid.n();
        Field::from_vec(
            &self.grid,
            (0..n)
                .map(|j| self.values[self.grid.mirror_index(j)].conj())
                .collect(),
        )
    }

    /// Spectral derivative of order 1 or 2. The Nyquist mode is dropped for
    /// odd order so that real fields stay real.
    pub fn derivative(&self, order: u32) -> Result<Field> {
        let grid = &self.grid;
        let nyquist = grid.n() / 2;
        let mut spec = self.to_spectral();
        match order {
            1 => {
                for (m, (c, &k)) in spec.coeffs.iter_mut().zip(grid.wavenumbers()).enumerate() {
                    *c = if m == nyquist { Complex64::new(0.0, 0.0) } else { *c * I * k };
                }
            }
            2 => {
                for (c, &k) in spec.coeffs.iter_mut().zip(grid.wavenumbers()) {
                    *c *= -k * k;
                }
            }
            other => return Err(Error::UnsupportedOrder(other)),
        }
        Ok(spec.to_field())
    }

    pub fn dx(&self) -> Field {
        self.derivative(1).expect("order 1 is supported")
    }

    pub fn dxx(&self) -> Field {
        self.derivative(2).expect("order 2 is supported")
    }

    /// `(∫ (1+|k|)^{2s} |f̂(k)|² dk)^{1/2}` with the Plancherel-consistent
    /// discrete normalisation, so `s = 0` reproduces the L² norm.
    pub fn norm_hs(&self, s: f64) -> f64 {
        self.to_spectral().norm_hs(s)
    }

    pub fn norm_h1(&self) -> f64 {
        self.norm_hs(1.0)
    }

    /// Rectangle-rule L^p norm; `p = f64::INFINITY` gives the max modulus.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.norm_inf());
        }
        let dx = self.grid.dx();
        if p == 2.0 {
            let s: f64 = self.values.iter().map(|c| c.norm_sqr()).sum();
            return Ok((s * dx).sqrt());
        }
        let s: f64 = self.values.iter().map(|c| c.norm().powf(p)).sum();
        Ok((s * dx).powf(1.0 / p))
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_lp(2.0).expect("p = 2 is valid")
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `(u, v) = ∫ u v* dx`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self.inner_unchecked(other))
    }

    /// `⟨u | v⟩ = Re (u, v)`.
    pub fn semi_inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.semi_inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.dx()
    }

    pub(crate) fn semi_inner_unchecked(&self, other: &Field) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.dx()
    }

    /// `∫ f dx`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dx()
    }

    /// H¹ inner product with the same `(1+|k|)²` weight as [`Field::norm_hs`].
    pub fn inner_h1(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let a = self.to_spectral();
        let b = other.to_spectral();
        let n = self.grid.n() as f64;
        let s: Complex64 = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .zip(self.grid.wavenumbers())
            .map(|((x, y), &k)| {
                let w = 1.0 + k.abs();
                x * y.conj() * (w * w)
            })
            .sum();
        Ok(s * (self.grid.dx() / n))
    }

    /// `(f_e, f_o)` with `f_e(x) = (f(x)+f(-x))/2`, `f_o(x) = (f(x)-f(-x))/2`.
    pub fn even_odd_split(&self) -> (Field, Field) {
        let r = self.reflect();
        let even = self.zip_map(&r, |a, b| 0.5 * (a + b));
        let odd = self.zip_map(&r, |a, b| 0.5 * (a - b));
        (even, odd)
    }

    pub fn even_part(&self) -> Field {
        self.even_odd_split().0
    }

    pub fn odd_part(&self) -> Field {
        self.even_odd_split().1
    }

    /// Max modulus of the difference.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<SpectralField> {
        if coeffs.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn to_field(&self) -> Field {
        let mut values = self.coeffs.clone();
        self.grid.inverse(&mut values);
        Field::from_vec(&self.grid, values)
    }

    /// Coefficients of `f⋆`: for the index DFT this is plain conjugation.
    pub fn reflect_conjugate(&self) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn norm_hs(&self, s: f64) -> f64 {
        let n = self.grid.n() as f64;
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(c, &k)| (1.0 + k.abs()).powf(2.0 * s) * c.norm_sqr())
            .sum();
        (sum * self.grid.dx() / n).sqrt()
    }

    /// Fraction of spectral mass carried by `|k| >= fraction * k_max`.
    pub fn tail_fraction(&self, band_start: f64) -> f64 {
        let cut = band_start * self.grid.k_max();
        let (mut tail, mut total) = (0.0, 0.0);
        for (c, &k) in self.coeffs.iter().zip(self.grid.wavenumbers()) {
            let p = c.norm_sqr();
            total += p;
            if k.abs() >= cut {
                tail += p;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

impl<'a> Add<&'a Field> for &'a Field {
    type Output = Field;
    fn add(self, rhs: &'a Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Field> for &'a Field {
    type Output = Field;
    fn sub(self, rhs: &'a Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Add for Field {
    type Output = Field;
    fn add(self, rhs: Field) -> Field {
        &self + &rhs
    }
}

impl Sub for Field {
    type Output = Field;
    fn sub(self, rhs: Field) -> Field {
        &self - &rhs
    }
}

impl AddAssign<&Field> for Field {
    fn add_assign(&mut self, rhs: &Field) {
        self.assert_same_grid(rhs);
        self.values
            .iter_mut()
            .zip(&rhs.values)
            .for_each(|(a, b)| *a += b);
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

impl Neg for Field {
    type Output = Field;
    fn neg(mut self) -> Field {
        self.values.iter_mut().for_each(|v| *v = -*v);
        self
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale_real(self)
    }
}

impl Mul<&Field> for Complex64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = Grid::new(64, 10.0).unwrap();
        let f = Field::from_real_fn(&g, |_| 3.5);
        assert!(f.derivative(1).unwrap().norm_inf() < 1e-13);
        assert!(f.derivative(2).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn sine_is_second_derivative_eigenfunction() {
        let g = Grid::new(128, 7.0).unwrap();
        let w = 2.0 * PI / g.length();
        let f = Field::from_real_fn(&g, |x| (w * x).sin());
        let d2 = f.derivative(2).unwrap();
        let expect = f.scale_real(-w * w);
        assert!(d2.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn rejects_unsupported_order() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(matches!(
            Field::zeros(&g).derivative(3),
            Err(Error::UnsupportedOrder(3))
        ));
    }

    #[test]
    fn lp_rejects_small_exponent() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(Field::zeros(&g).norm_lp(0.5).is_err());
        assert!(Field::zeros(&g).norm_lp(f64::NAN).is_err());
        assert_eq!(Field::zeros(&g).norm_lp(3.0).unwrap(), 0.0);
        assert_eq!(Field::zeros(&g).norm_lp(f64::INFINITY).unwrap(), 0.0);
        assert_eq!(Field::zeros(&g).norm_hs(2.0), 0.0);
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let a = Field::zeros(&Grid::new(16, 1.0).unwrap());
        let b = Field::zeros(&Grid::new(32, 1.0).unwrap());
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch)));
        assert!(matches!(a.semi_inner(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn new_validates_samples() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(Field::new(&g, vec![Complex64::new(0.0, 0.0); 15]).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Field::new(&g, v.clone()), Err(Error::NonFinite)));
        let tagged = Field::new_post_blowup(&g, v).unwrap();
        assert!(tagged.is_post_blowup() && !tagged.is_finite());
    }

    #[test]
    fn split_of_mixed_parity_field() {
        let g = Grid::default();
        let q = Field::from_real_fn(&g, |x| 2f64.sqrt() * sech(x));
        let dq = Field::from_real_fn(&g, |x| -(2f64.sqrt()) * sech(x) * x.tanh());
        let f = &q + &dq.times_i();
        let (e, o) = f.even_odd_split();
        // the self-mirrored point -L/2 carries the O(e^{-L/2}) tail
        assert!(e.max_abs_diff(&q) < 1e-13);
        assert!(o.max_abs_diff(&dq.times_i()) < 1e-13);
    }

    #[test]
    fn tail_fraction_of_band_limited_field_is_zero() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let f = Field::from_real_fn(&g, |x| x.cos());
        assert!(f.to_spectral().tail_fraction(0.9) < 1e-28);
        let nyq = Field::from_real_fn(&g, |x| (32.0 * x).cos());
        assert!((nyq.to_spectral().tail_fraction(0.9) - 1.0).abs() < 1e-12);
    }
}
