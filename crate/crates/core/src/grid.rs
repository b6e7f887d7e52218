//! Uniform periodic grid on `[-length/2, length/2)` with its FFT plans.
//!
//! Wavenumbers use the standard FFT ordering: index `m < n/2` carries
//! `k = 2πm/length`, index `m >= n/2` carries `k = 2π(m - n)/length`.
//! The Nyquist mode therefore sits at index `n/2` with a negative sign, and
//! `k = 0` appears exactly once at index 0.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::solitons::QProfiles;

pub const MIN_POINTS: usize = 16;

/// Default box used throughout the crate: 1024 points on a length-64 interval.
pub const DEFAULT_N: usize = 1024;
pub const DEFAULT_LENGTH: f64 = 64.0;

struct GridInner {
    n: usize,
    length: f64,
    points: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    profiles: OnceLock<QProfiles>,
}

/// Cheap-to-clone handle; clones share points, wavenumbers, FFT plans and
/// the cached ground-state profiles.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Grid> {
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least {MIN_POINTS}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }
        let dx = length / n as f64;
        let points = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        let scale = 2.0 * PI / length;
        let half = n / 2;
        let wavenumbers = (0..n)
            .map(|m| {
                if m < half {
                    scale * m as f64
                } else {
                    scale * (m as f64 - n as f64)
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                length,
                points,
                wavenumbers,
                forward,
                inverse,
                profiles: OnceLock::new(),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn dx(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.inner.points
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Largest resolved |k|, i.e. π/dx.
    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Index of the point `-x_j` under periodic reflection. The left
    /// endpoint `-length/2` maps to itself.
    #[inline]
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.inner.n - j) % self.inner.n
    }

    /// Same discretisation (n and length). Clones of one grid always match.
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }

    /// Unnormalised forward DFT in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
    }

    /// Inverse DFT in place, including the 1/n normalisation.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub(crate) fn forward_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inner.forward.process_with_scratch(buf, scratch);
    }

    pub(crate) fn inverse_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inner.inverse.process_with_scratch(buf, scratch);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.inner
            .forward
            .get_inplace_scratch_len()
            .max(self.inner.inverse.get_inplace_scratch_len())
    }

    pub(crate) fn profiles_cell(&self) -> &OnceLock<QProfiles> {
        &self.inner.profiles
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(DEFAULT_N, DEFAULT_LENGTH).expect("default grid is valid")
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_origin() {
        let g = Grid::new(16, 16.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.points()[0], -8.0);
        let g = Grid::new(1024, 40.0).unwrap();
        assert_eq!(g.dx(), 0.0390625);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid::new(10, 40.0), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(8, 40.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, -1.0).is_err());
        assert!(Grid::new(64, f64::NAN).is_err());
    }

    #[test]
    fn wavenumber_ordering() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k.iter().filter(|&&v| v == 0.0).count(), 1);
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 1.0).abs() < 1e-15);
        assert!((k[7] - 7.0).abs() < 1e-15);
        assert!((k[8] + 8.0).abs() < 1e-15);
        assert!((k[15] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_pairs_points() {
        let g = Grid::new(32, 10.0).unwrap();
        for j in 1..32 {
            let m = g.mirror_index(j);
            assert!((g.points()[j] + g.points()[m]).abs() < 1e-12);
        }
        assert_eq!(g.mirror_index(0), 0);
    }
}
