//! Time integration of `i∂t u - ∂x²u = u² u⋆` (and of the local cubic NLS
//! `i∂t u - ∂x²u = |u|²u` as a comparison toggle) on the periodic grid.
//!
//! Written as `u_t = -i ∂x²u - i N(u)`, the linear flow is the exact Fourier
//! multiplier `e^{i k² t}`. Two schemes are provided:
//!
//! * [`Scheme::IfRk4`]: integrating-factor (Lawson) RK4 on the full right-hand
//!   side; fourth order, the default.
//! * [`Scheme::StrangRk4`]: Strang splitting with the exact linear half-steps
//!   around an RK4 nonlinear step; second order. The nonlocal nonlinear flow
//!   does not preserve `|u|`, so the nonlinear substep is integrated rather
//!   than solved as a phase rotation.

use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::invariants::InvariantReport;

const TAIL_BAND_START: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangRk4,
    IfRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// `true` integrates the nonlocal equation, `false` the local cubic NLS.
    pub nonlocal: bool,
    pub blowup_linf_threshold: f64,
    /// Fraction of spectral mass in the top 10% of |k| that flags resolution loss.
    pub blowup_spectral_tail_threshold: f64,
    pub record_every: usize,
    /// Halve the step while `dt · max|u|²` exceeds `adaptive_limit`.
    pub adaptive: bool,
    pub adaptive_limit: f64,
    pub min_dt: f64,
    pub keep_snapshots: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::IfRk4,
            nonlocal: true,
            blowup_linf_threshold: 1e3,
            blowup_spectral_tail_threshold: 1e-3,
            record_every: 10,
            adaptive: false,
            adaptive_limit: 0.05,
            min_dt: 1e-9,
            keep_snapshots: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive and finite",
                })
            }
        }
        positive("dt", self.dt)?;
        positive("blowup_linf_threshold", self.blowup_linf_threshold)?;
        positive("blowup_spectral_tail_threshold", self.blowup_spectral_tail_threshold)?;
        positive("adaptive_limit", self.adaptive_limit)?;
        positive("min_dt", self.min_dt)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                reason: "must be finite and non-negative",
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// `u² u⋆` (nonlocal) or `u² u*` (local), pointwise.
pub fn nonlinearity(u: &Field, nonlocal: bool) -> Field {
    let partner = if nonlocal { u.reflect_conjugate() } else { u.conj() };
    u.zip_map(&partner, |a, b| a * a * b)
}

/// `-i u² w` with `w = u⋆` or `u*`, written into `out`.
fn nonlinear_rhs(grid: &Grid, nonlocal: bool, u: &[Complex64], out: &mut [Complex64]) {
    let minus_i = Complex64::new(0.0, -1.0);
    for (j, o) in out.iter_mut().enumerate() {
        let partner = if nonlocal {
            u[grid.mirror_index(j)].conj()
        } else {
            u[j].conj()
        };
        *o = minus_i * u[j] * u[j] * partner;
    }
}

/// Reusable single-step integrator with preallocated buffers.
pub struct Stepper {
    grid: Grid,
    scheme: Scheme,
    nonlocal: bool,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    scratch: Vec<Complex64>,
    bufs: [Vec<Complex64>; 6],
}

impl Stepper {
    pub fn new(grid: &Grid, scheme: Scheme, nonlocal: bool, dt: f64) -> Stepper {
        let n = grid.n();
        let zero = Complex64::new(0.0, 0.0);
        let mut s = Stepper {
            grid: grid.clone(),
            scheme,
            nonlocal,
            dt: f64::NAN,
            half: vec![zero; n],
            full: vec![zero; n],
            scratch: vec![zero; grid.scratch_len()],
            bufs: std::array::from_fn(|_| vec![zero; n]),
        };
        s.set_dt(dt);
        s
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        self.dt = dt;
        for ((h, f), &k) in self
            .half
            .iter_mut()
            .zip(self.full.iter_mut())
            .zip(self.grid.wavenumbers())
        {
            *h = Complex64::from_polar(1.0, 0.5 * k * k * dt);
            *f = *h * *h;
        }
    }

    /// Advances `u` by one step of size [`Stepper::dt`] in place.
    pub fn step(&mut self, u: &mut [Complex64]) -> Result<()> {
        assert_eq!(u.len(), self.grid.n());
        if self.dt == 0.0 {
            return Ok(());
        }
        match self.scheme {
            Scheme::IfRk4 => self.step_if_rk4(u),
            Scheme::StrangRk4 => self.step_strang(u),
        }
        if u.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    fn fwd(grid: &Grid, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        grid.forward_with_scratch(buf, scratch);
    }

    fn inv(grid: &Grid, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        grid.inverse_with_scratch(buf, scratch);
    }

    fn step_if_rk4(&mut self, u: &mut [Complex64]) {
        let h = self.dt;
        let grid = &self.grid;
        let nonlocal = self.nonlocal;
        let (e, e2) = (&self.half, &self.full);
        let scratch = &mut self.scratch;
        let [uh, ka, kb, kc, kd, tmp] = &mut self.bufs;

        // uh = F u, ka = h F N(u)
        uh.copy_from_slice(u);
        Self::fwd(grid, uh, scratch);
        nonlinear_rhs(grid, nonlocal, u, ka);
        Self::fwd(grid, ka, scratch);
        ka.iter_mut().for_each(|c| *c *= h);

        // kb = h F N(F⁻¹ E(uh + ka/2))
        for j in 0..uh.len() {
            tmp[j] = e[j] * (uh[j] + 0.5 * ka[j]);
        }
        Self::inv(grid, tmp, scratch);
        nonlinear_rhs(grid, nonlocal, tmp, kb);
        Self::fwd(grid, kb, scratch);
        kb.iter_mut().for_each(|c| *c *= h);

        // kc = h F N(F⁻¹ (E uh + kb/2))
        for j in 0..uh.len() {
            tmp[j] = e[j] * uh[j] + 0.5 * kb[j];
        }
        Self::inv(grid, tmp, scratch);
        nonlinear_rhs(grid, nonlocal, tmp, kc);
        Self::fwd(grid, kc, scratch);
        kc.iter_mut().for_each(|c| *c *= h);

        // kd = h F N(F⁻¹ (E² uh + E kc))
        for j in 0..uh.len() {
            tmp[j] = e2[j] * uh[j] + e[j] * kc[j];
        }
        Self::inv(grid, tmp, scratch);
        nonlinear_rhs(grid, nonlocal, tmp, kd);
        Self::fwd(grid, kd, scratch);
        kd.iter_mut().for_each(|c| *c *= h);

        for j in 0..uh.len() {
            u[j] = e2[j] * uh[j] + (e2[j] * ka[j] + 2.0 * e[j] * (kb[j] + kc[j]) + kd[j]) / 6.0;
        }
        Self::inv(grid, u, scratch);
    }

    fn linear_half(&mut self, u: &mut [Complex64]) {
        Self::fwd(&self.grid, u, &mut self.scratch);
        u.iter_mut().zip(&self.half).for_each(|(c, e)| *c *= e);
        Self::inv(&self.grid, u, &mut self.scratch);
    }

    fn step_strang(&mut self, u: &mut [Complex64]) {
        self.linear_half(u);
        let h = self.dt;
        let grid = &self.grid;
        let nonlocal = self.nonlocal;
        let [k1, k2, k3, k4, tmp, _] = &mut self.bufs;
        nonlinear_rhs(grid, nonlocal, u, k1);
        for j in 0..u.len() {
            tmp[j] = u[j] + 0.5 * h * k1[j];
        }
        nonlinear_rhs(grid, nonlocal, tmp, k2);
        for j in 0..u.len() {
            tmp[j] = u[j] + 0.5 * h * k2[j];
        }
        nonlinear_rhs(grid, nonlocal, tmp, k3);
        for j in 0..u.len() {
            tmp[j] = u[j] + h * k3[j];
        }
        nonlinear_rhs(grid, nonlocal, tmp, k4);
        for j in 0..u.len() {
            u[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
        self.linear_half(u);
    }
}

/// One step of size `dt` using the scheme and equation selected in `cfg`.
pub fn step(u: &Field, dt: f64, cfg: &SolverConfig) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut stepper = Stepper::new(u.grid(), cfg.scheme, cfg.nonlocal, dt);
    let mut values = u.values().to_vec();
    stepper.step(&mut values)?;
    Ok(Field::from_vec(u.grid(), values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCriterion {
    Amplitude,
    SpectralTail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    /// Criteria that fired, amplitude first.
    pub criteria: Vec<BlowupCriterion>,
    pub linf: f64,
    pub tail_fraction: f64,
}

/// Flags a state whose sup norm exceeds `blowup_linf_threshold` or whose top
/// 10% wavenumber band carries more than `blowup_spectral_tail_threshold` of
/// the spectral mass.
pub fn detect_blowup(u: &Field, cfg: &SolverConfig) -> Option<BlowupReport> {
    let linf = u.norm_inf();
    let tail_fraction = u.to_spectral().tail_fraction(TAIL_BAND_START);
    let mut criteria = Vec::new();
    if !(linf <= cfg.blowup_linf_threshold) {
        criteria.push(BlowupCriterion::Amplitude);
    }
    if !(tail_fraction <= cfg.blowup_spectral_tail_threshold) {
        criteria.push(BlowupCriterion::SpectralTail);
    }
    if criteria.is_empty() {
        None
    } else {
        Some(BlowupReport {
            criteria,
            linf,
            tail_fraction,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected,
    ResolutionLost,
    /// The observer passed to [`evolve_observed`] asked to stop.
    Halted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
    pub invariants: InvariantReport,
}

impl Diagnostics {
    pub fn of(u: &Field, time: f64) -> Diagnostics {
        Diagnostics {
            time,
            l2: u.norm_l2(),
            linf: u.norm_inf(),
            h1: u.norm_h1(),
            invariants: InvariantReport::of(u, time),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Recorded states, aligned with `times` when `keep_snapshots` is set.
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<Diagnostics>,
    pub termination: Termination,
    /// Time at which the run stopped (detection time for blow-up).
    pub end_time: f64,
    pub blowup: Option<BlowupReport>,
    pub steps: usize,
    pub final_state: Field,
}

/// Recorded state handed to an observer.
pub struct Snapshot<'a> {
    pub index: usize,
    pub time: f64,
    pub field: &'a Field,
}

pub fn evolve(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    evolve_observed(u0, cfg, |_| ControlFlow::Continue(()))
}

/// Evolves `u0` to `cfg.t_end`, calling `observer` at every recorded time.
///
/// Errors are reserved for invalid input; blow-up and loss of resolution end
/// the run normally and are reported through [`Trajectory::termination`].
pub fn evolve_observed<F>(u0: &Field, cfg: &SolverConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(&Snapshot<'_>) -> ControlFlow<()>,
{
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid = u0.grid().clone();
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        termination: Termination::Completed,
        end_time: 0.0,
        blowup: None,
        steps: 0,
        final_state: u0.clone(),
    };
    let mut state = u0.values().to_vec();
    let mut stepper = Stepper::new(&grid, cfg.scheme, cfg.nonlocal, cfg.dt);

    let mut record = |traj: &mut Traj, field: Field, time: f64| -> ControlFlow<()> {
        let index = traj.times.len();
        traj.times.push(time);
        traj.diagnostics.push(Diagnostics::of(&field, time));
        let flow = observer(&Snapshot {
            index,
            time,
            field: &field,
        });
        if cfg.keep_snapshots {
            traj.snapshots.push(field);
        }
        flow
    };
    type Traj = Trajectory;

    if let Some(report) = detect_blowup(u0, cfg) {
        let _ = record(&mut traj, u0.clone(), 0.0);
        traj.termination = Termination::BlowupDetected;
        traj.blowup = Some(report);
        return Ok(traj);
    }
    if record(&mut traj, u0.clone(), 0.0).is_break() {
        traj.termination = Termination::Halted;
        return Ok(traj);
    }

    // Time is tracked as base + count·h so fixed-step runs land on exact multiples.
    let mut h = cfg.dt;
    let mut base = 0.0;
    let mut count: usize = 0;
    let mut t = 0.0;
    let mut step_index: usize = 0;
    let tol = 1e-9 * cfg.dt;

    while t < cfg.t_end - tol {
        if cfg.adaptive {
            let peak = state.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
            while h * peak > cfg.adaptive_limit {
                base = t;
                count = 0;
                h *= 0.5;
                if h < cfg.min_dt {
                    traj.termination = Termination::ResolutionLost;
                    traj.end_time = t;
                    traj.final_state = Field::from_vec(&grid, state);
                    return Ok(traj);
                }
            }
        }
        let remaining = cfg.t_end - t;
        let last = remaining < h - tol;
        let this_h = if last { remaining } else { h };
        stepper.set_dt(this_h);
        let previous = state.clone();
        if stepper.step(&mut state).is_err() {
            traj.termination = Termination::ResolutionLost;
            traj.end_time = t;
            traj.final_state = Field::from_vec(&grid, previous);
            traj.steps = step_index;
            return Ok(traj);
        }
        step_index += 1;
        count += 1;
        t = if last { cfg.t_end } else { base + count as f64 * h };

        let field = Field::from_vec(&grid, state.clone());
        if let Some(report) = detect_blowup(&field, cfg) {
            let _ = record(&mut traj, field.clone(), t);
            traj.termination = Termination::BlowupDetected;
            traj.blowup = Some(report);
            traj.end_time = t;
            traj.final_state = field;
            traj.steps = step_index;
            return Ok(traj);
        }
        let at_end = t >= cfg.t_end - tol;
        if step_index % cfg.record_every == 0 || at_end {
            if record(&mut traj, field.clone(), t).is_break() {
                traj.termination = Termination::Halted;
                traj.end_time = t;
                traj.final_state = field;
                traj.steps = step_index;
                return Ok(traj);
            }
        }
    }
    traj.end_time = t;
    traj.steps = step_index;
    traj.final_state = Field::from_vec(&grid, state);
    Ok(traj)
}

/// The PT map `u ↦ u⋆`. If `u(t)` solves the nonlocal equation, so does
/// `t ↦ u(-t)⋆`.
pub fn pt_transform(u: &Field) -> Field {
    u.reflect_conjugate()
}

/// Backward evolution to `-cfg.t_end` through the PT symmetry: evolve `u0⋆`
/// forward and map each state back. Times are negative and returned in
/// increasing order, ending at `t = 0`.
pub fn evolve_backward(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    evolve_backward_observed(u0, cfg, |_| ControlFlow::Continue(()))
}

/// As [`evolve_backward`], with the observer seeing `u(-s)` at time `-s` in
/// the order the states are produced (decreasing time).
pub fn evolve_backward_observed<F>(u0: &Field, cfg: &SolverConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(&Snapshot<'_>) -> ControlFlow<()>,
{
    let mut fwd = evolve_observed(&pt_transform(u0), cfg, |s| {
        let mapped = pt_transform(s.field);
        observer(&Snapshot {
            index: s.index,
            time: -s.time,
            field: &mapped,
        })
    })?;
    fwd.times.iter_mut().for_each(|t| *t = -*t);
    fwd.times.reverse();
    fwd.snapshots = fwd.snapshots.iter().rev().map(pt_transform).collect();
    fwd.diagnostics.reverse();
    for d in fwd.diagnostics.iter_mut() {
        d.time = -d.time;
        d.invariants.time = -d.invariants.time;
    }
    fwd.end_time = -fwd.end_time;
    fwd.final_state = pt_transform(&fwd.final_state);
    Ok(fwd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::{ground_state, standing_wave};

    #[test]
    fn zero_step_is_identity() {
        let g = Grid::new(128, 20.0).unwrap();
        let q = ground_state(1.0, &g).unwrap();
        for scheme in [Scheme::IfRk4, Scheme::StrangRk4] {
            let cfg = SolverConfig {
                scheme,
                ..Default::default()
            };
            let out = step(&q, 0.0, &cfg).unwrap();
            assert_eq!(out.values(), q.values());
        }
    }

    #[test]
    fn nonlinearity_on_real_even_state() {
        let g = Grid::default();
        let q = ground_state(1.0, &g).unwrap();
        let q3 = q.map(|c| c * c * c);
        assert!(nonlinearity(&q, true).max_abs_diff(&q3) < 1e-15);
        assert!(nonlinearity(&q, false).max_abs_diff(&q3) < 1e-15);
        let iq = q.times_i();
        let iq3 = q3.times_i();
        assert!(nonlinearity(&iq, true).max_abs_diff(&iq3) < 1e-15);
        assert!(nonlinearity(&iq, false).max_abs_diff(&iq3) < 1e-15);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = Grid::new(64, 20.0).unwrap();
        let q = ground_state(1.0, &g).unwrap();
        for cfg in [
            SolverConfig { dt: 0.0, ..Default::default() },
            SolverConfig { record_every: 0, ..Default::default() },
            SolverConfig { blowup_linf_threshold: -1.0, ..Default::default() },
            SolverConfig { t_end: f64::NAN, ..Default::default() },
        ] {
            assert!(evolve(&q, &cfg).is_err());
        }
    }

    #[test]
    fn amplitude_criterion() {
        let g = Grid::new(64, 20.0).unwrap();
        let cfg = SolverConfig::default();
        let q = ground_state(1.0, &g).unwrap();
        assert!(detect_blowup(&q, &cfg).is_none());
        let spike = Field::from_real_fn(&g, |x| 1e4 * (-x * x).exp());
        let r = detect_blowup(&spike, &cfg).unwrap();
        assert_eq!(r.criteria[0], BlowupCriterion::Amplitude);
    }

    #[test]
    fn recording_cadence() {
        let g = Grid::new(128, 30.0).unwrap();
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.25,
            record_every: 10,
            ..Default::default()
        };
        let traj = evolve(&standing_wave(1.0, 0.0, &g).unwrap(), &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        assert_eq!(traj.times.len(), 4);
        assert!((traj.times[3] - 0.25).abs() < 1e-15);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.steps, 25);
    }
}
