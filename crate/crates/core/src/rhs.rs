//! Evolution formulas for the modulation parameters and root-space
//! coordinates, and their comparison with finite differences of fitted
//! series.
//!
//! Two evaluations are offered:
//!
//! * [`eval_theta_alpha_dot`] / [`eval_coefficient_dots`] evaluate the
//!   closed projection formulas term by term, exactly as written (including
//!   the `(1+θ̇)Q_α` forcing and the repeated `⟨Q_α-Q | Q'⟩` term).
//! * [`exact_rates`] differentiates the constraints and projects the true
//!   `∂t v` obtained from the equation itself. It is the reference the
//!   formulas are checked against.
//!
//! The sign convention for the dilation term is `-iα̇ Q'_α` on the right of
//! `i∂t v + 𝓛v = …`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::nonlinearity;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linops::{Operand, OperatorHandle, OperatorKind};
use crate::modulation::{root_coefficients, ModulationCoords, ModulationTracker};
use crate::solitons::{q_alpha_at, q_alpha_prime_at, q_alpha_second_at, q_profiles};

/// Relative size of `det` (against `M(Q)²`) below which the 2×2 system is
/// rejected.
pub const DEGENERACY_RATIO: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsTerm {
    pub quantity: String,
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub theta_dot: f64,
    pub alpha_dot: f64,
    pub a_e_dot: f64,
    pub b_e_dot: f64,
    pub a_o_dot: f64,
    pub b_o_dot: f64,
    /// Each addend of each formula, already divided by `M(Q)` where the
    /// formula is normalised that way.
    pub residual_terms: Vec<RhsTerm>,
}

impl RhsReport {
    /// `[θ̇, α̇, ȧ_e, ḃ_e, ȧ_o, ḃ_o]`.
    pub fn rates(&self) -> [f64; 6] {
        [
            self.theta_dot,
            self.alpha_dot,
            self.a_e_dot,
            self.b_e_dot,
            self.a_o_dot,
            self.b_o_dot,
        ]
    }
}

pub const QUANTITIES: [&str; 6] = ["theta", "alpha", "a_e", "b_e", "a_o", "b_o"];

/// Profiles and derived fields shared by the formulas.
struct Ctx {
    m: f64,
    q: Field,
    qp: Field,
    dx_q: Field,
    x_q: Field,
    qa: Field,
    qpa: Field,
    qppa: Field,
    /// `Q_α² - Q²`
    dq2: Field,
    ve: Field,
    vo: Field,
    ne: Field,
    no: Field,
    lp: OperatorHandle,
    lm: OperatorHandle,
}

fn pair(a: &Field, b: &Field) -> f64 {
    a.semi_inner_unchecked(b)
}

/// `𝓝_α(v₁, v₂) = Q_α v₁² + 2Q_α v₁v₂ + v₁² v₂`.
fn big_n(qa: &Field, v1: &Field, v2: &Field) -> Field {
    let values = qa
        .values()
        .iter()
        .zip(v1.values().iter().zip(v2.values()))
        .map(|(q, (a, b))| q * a * a + 2.0 * q * a * b + a * a * b)
        .collect();
    Field::from_vec(qa.grid(), values)
}

impl Ctx {
    fn new(c: &ModulationCoords) -> Ctx {
        let grid = c.v.grid();
        let p = q_profiles(grid);
        let alpha = c.alpha;
        let qa = Field::from_real_fn(grid, |x| q_alpha_at(alpha, x));
        let dq2 = qa.zip_map(&p.q, |a, b| a * a - b * b);
        let (ve, vo) = c.v.even_odd_split();
        let plus = &ve + &vo;
        let minus = &ve - &vo;
        let a = big_n(&qa, &plus, &minus.conj());
        let b = big_n(&qa, &minus, &plus.conj());
        let ne = (&a + &b).scale_real(0.5);
        let no = (&a - &b).scale_real(0.5);
        Ctx {
            m: p.mass,
            q: p.q.clone(),
            qp: p.q_prime.clone(),
            dx_q: p.dx_q.clone(),
            x_q: p.x_q.clone(),
            qpa: Field::from_real_fn(grid, |x| q_alpha_prime_at(alpha, x)),
            qppa: Field::from_real_fn(grid, |x| q_alpha_second_at(alpha, x)),
            qa,
            dq2,
            ve,
            vo,
            ne,
            no,
            lp: OperatorHandle::new(OperatorKind::LPlus, grid),
            lm: OperatorHandle::new(OperatorKind::LMinus, grid),
        }
    }

    fn apply(op: &OperatorHandle, f: &Field) -> Field {
        op.apply(&Operand::Single(f.clone()))
            .and_then(Operand::single)
            .expect("scalar operator on its own grid")
    }
}

struct Terms(Vec<RhsTerm>);

impl Terms {
    fn push(&mut self, quantity: &str, label: &str, value: f64) -> f64 {
        self.0.push(RhsTerm {
            quantity: quantity.to_string(),
            label: label.to_string(),
            value,
        });
        value
    }
}

/// `(θ̇, α̇)` from the two projected equations, solved as a coupled 2×2
/// system (the phase equation carries `α̇ ⟨iv_e | Q''_α⟩`).
pub fn eval_theta_alpha_dot(coords: &ModulationCoords) -> Result<(f64, f64)> {
    let ctx = Ctx::new(coords);
    let mut t = Terms(Vec::new());
    theta_alpha(&ctx, coords, &mut t)
}

fn theta_alpha(ctx: &Ctx, coords: &ModulationCoords, t: &mut Terms) -> Result<(f64, f64)> {
    let m = ctx.m;
    let dq = &ctx.qa - &ctx.q;
    let dqp = &ctx.qpa - &ctx.qp;
    let ive = ctx.ve.times_i();

    // (1+θ̇) · bθ + α̇ · cθ = rθ
    let b_theta = m
        + pair(&dq, &ctx.qp)
        + pair(&ctx.ve, &ctx.qp)
        + pair(&dq, &dqp)
        + pair(&dq, &ctx.qp)
        + pair(&(&ctx.q + &ctx.ve), &dqp);
    let c_theta = pair(&ive, &ctx.qppa);
    let r_theta = -t.push("theta", "<v_e|L+(Q'_a-Q')>", pair(&ctx.ve, &Ctx::apply(&ctx.lp, &dqp)))
        - t.push("theta", "2M b_e", 2.0 * m * coords.b_e)
        - t.push("theta", "<N_e|Q'>", pair(&ctx.ne, &ctx.qp));

    // α̇ · bα = rα
    let b_alpha = m + pair(&dqp, &ctx.qa) + pair(&ctx.qp, &dq) - pair(&ctx.ve, &ctx.qpa);
    let r_alpha = t.push("alpha", "<iv_e|L-(Q_a-Q)>", pair(&ive, &Ctx::apply(&ctx.lm, &dq)))
        + t.push("alpha", "<i(Q_a^2-Q^2)v_e|Q_a>", pair(&ctx.dq2.hadamard(&ive), &ctx.qa))
        + t.push("alpha", "<iN_e|Q_a>", pair(&ctx.ne.times_i(), &ctx.qa));

    let det = b_theta * b_alpha;
    if !(det.abs() >= DEGENERACY_RATIO * m * m) {
        return Err(Error::DegenerateState { det });
    }
    let alpha_dot = r_alpha / b_alpha;
    let one_plus = (r_theta - c_theta * alpha_dot) / b_theta;
    t.push("theta", "coefficient of (1+theta_dot)", b_theta);
    t.push("theta", "coefficient of alpha_dot", c_theta);
    t.push("alpha", "coefficient of alpha_dot", b_alpha);
    Ok((one_plus - 1.0, alpha_dot))
}

/// The four coefficient formulas evaluated at given `(θ̇, α̇)`.
pub fn eval_coefficient_dots(coords: &ModulationCoords, theta_dot: f64, alpha_dot: f64) -> RhsReport {
    let ctx = Ctx::new(coords);
    let mut t = Terms(Vec::new());
    coefficient_dots(&ctx, coords, theta_dot, alpha_dot, &mut t)
}

fn coefficient_dots(
    ctx: &Ctx,
    coords: &ModulationCoords,
    theta_dot: f64,
    alpha_dot: f64,
    t: &mut Terms,
) -> RhsReport {
    let m = ctx.m;
    let w = 1.0 + theta_dot;
    let dq = &ctx.qa - &ctx.q;
    let ive = ctx.ve.times_i();
    let ivo = ctx.vo.times_i();

    let a_e_dot = t.push("a_e", "-2<v_e|Q_a-Q>", -2.0 * pair(&ctx.ve, &dq) / m)
        + t.push("a_e", "-(1+theta_dot)<Q_a+v_e|Q'>", -w * pair(&(&ctx.qa + &ctx.ve), &ctx.qp) / m)
        + t.push("a_e", "-3<(Q_a^2-Q^2)v_e|Q'>", -3.0 * pair(&ctx.dq2.hadamard(&ctx.ve), &ctx.qp) / m)
        + t.push("a_e", "-<N_e|Q'>", -pair(&ctx.ne, &ctx.qp) / m);

    let b_e_dot = t.push("b_e", "-(1+theta_dot)<iv_e|Q>", -w * pair(&ive, &ctx.q) / m)
        + t.push("b_e", "-alpha_dot<Q'_a|Q>", -alpha_dot * pair(&ctx.qpa, &ctx.q) / m)
        + t.push("b_e", "-<i(Q_a^2-Q^2)v_e|Q>", -pair(&ctx.dq2.hadamard(&ive), &ctx.q) / m)
        + t.push("b_e", "-<iN_e|Q>", -pair(&ctx.ne.times_i(), &ctx.q) / m);

    let a_o_dot = t.push("a_o", "-2b_o", -2.0 * coords.b_o)
        + t.push("a_o", "(1+theta_dot)<v_o|xQ>", w * pair(&ctx.vo, &ctx.x_q) / m)
        + t.push("a_o", "<(Q_a^2-Q^2)v_o|xQ>", pair(&ctx.dq2.hadamard(&ctx.vo), &ctx.x_q) / m)
        + t.push("a_o", "<N_o|xQ>", pair(&ctx.no, &ctx.x_q) / m);

    let b_o_dot = t.push("b_o", "(1+theta_dot)<iv_o|dxQ>", w * pair(&ivo, &ctx.dx_q) / m)
        + t.push("b_o", "3<i(Q_a^2-Q^2)v_o|dxQ>", 3.0 * pair(&ctx.dq2.hadamard(&ivo), &ctx.dx_q) / m)
        + t.push("b_o", "<iN_o|dxQ>", pair(&ctx.no.times_i(), &ctx.dx_q) / m);

    RhsReport {
        theta_dot,
        alpha_dot,
        a_e_dot,
        b_e_dot,
        a_o_dot,
        b_o_dot,
        residual_terms: std::mem::take(&mut t.0),
    }
}

/// Phase/dilation solve followed by the coefficient formulas.
pub fn eval_all(coords: &ModulationCoords) -> Result<RhsReport> {
    let ctx = Ctx::new(coords);
    let mut t = Terms(Vec::new());
    let (td, ad) = theta_alpha(&ctx, coords, &mut t)?;
    Ok(coefficient_dots(&ctx, coords, td, ad, &mut t))
}

/// Rates obtained from the equation directly: with `z = Q_α + v`,
/// `∂t v = -i(∂x²z + z²z⋆) - iθ̇ z - α̇ Q'_α`, where `(θ̇, α̇)` keep both
/// constraints satisfied; the coefficient rates are the root-space
/// projections of `∂t v`.
pub fn exact_rates(coords: &ModulationCoords) -> Result<RhsReport> {
    let grid = coords.v.grid();
    let alpha = coords.alpha;
    let qa = Field::from_real_fn(grid, |x| q_alpha_at(alpha, x));
    let qpa = Field::from_real_fn(grid, |x| q_alpha_prime_at(alpha, x));
    let qppa = Field::from_real_fn(grid, |x| q_alpha_second_at(alpha, x));
    let z = &qa + &coords.v;
    let w = (z.dxx() + nonlinearity(&z, true)).scale(Complex64::new(0.0, -1.0));
    let v = &coords.v;

    let j11 = pair(&z, &qpa);
    let j12 = pair(&v.times_i(), &qppa);
    let j21 = -pair(&z.times_i(), &qa);
    let j22 = -pair(&qpa, &qa) + pair(v, &qpa);
    let r1 = -pair(&w.times_i(), &qpa);
    let r2 = -pair(&w, &qa);
    let det = j11 * j22 - j12 * j21;
    let m = q_profiles(grid).mass;
    if !(det.abs() >= DEGENERACY_RATIO * m * m) {
        return Err(Error::DegenerateState { det });
    }
    let theta_dot = (j22 * r1 - j12 * r2) / det;
    let alpha_dot = (j11 * r2 - j21 * r1) / det;
    let v_t = &(&w - &z.scale(Complex64::new(0.0, theta_dot))) - &qpa.scale_real(alpha_dot);
    let [a_e_dot, b_e_dot, a_o_dot, b_o_dot] = root_coefficients(&v_t);
    Ok(RhsReport {
        theta_dot,
        alpha_dot,
        a_e_dot,
        b_e_dot,
        a_o_dot,
        b_o_dot,
        residual_terms: Vec::new(),
    })
}

/// Fitted coordinates at recorded times.
#[derive(Clone, Debug)]
pub struct ModulationSeries {
    pub times: Vec<f64>,
    pub coords: Vec<ModulationCoords>,
}

impl ModulationSeries {
    /// `[θ, α, a_e, b_e, a_o, b_o]` at sample `i`.
    pub fn values(&self, i: usize) -> [f64; 6] {
        let c = &self.coords[i];
        [c.theta, c.alpha, c.a_e, c.b_e, c.a_o, c.b_o]
    }
}

/// Fits every snapshot in order, warm-starting each Newton solve from the
/// previous one with the phase advanced by `-Δt`.
pub fn track_snapshots(times: &[f64], snapshots: &[Field]) -> Result<ModulationSeries> {
    if times.len() != snapshots.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: snapshots.len(),
        });
    }
    let mut tracker = ModulationTracker::default();
    let mut coords = Vec::with_capacity(times.len());
    let mut last_t = times.first().copied().unwrap_or(0.0);
    for (&t, u) in times.iter().zip(snapshots) {
        let (_, c) = tracker.track(u, -(t - last_t))?;
        last_t = t;
        coords.push(c);
    }
    Ok(ModulationSeries {
        times: times.to_vec(),
        coords,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    fn allowed(&self, reference: f64) -> f64 {
        self.abs.max(self.rel * reference.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityDiscrepancy {
    pub quantity: String,
    /// Largest `|finite difference|` over the interior samples.
    pub max_rate: f64,
    /// Largest `|FD - formula|`.
    pub max_formula: f64,
    /// Largest `|FD - exact projection|`.
    pub max_exact: f64,
    /// Largest `|FD - x| / max(abs, rel·|FD|)`; at most 1 means within tolerance.
    pub formula_ratio: f64,
    pub exact_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub samples: usize,
    pub tolerance: Tolerance,
    pub quantities: Vec<QuantityDiscrepancy>,
}

impl ConsistencyReport {
    pub fn get(&self, quantity: &str) -> Option<&QuantityDiscrepancy> {
        self.quantities.iter().find(|q| q.quantity == quantity)
    }

    pub fn formula_within(&self) -> bool {
        self.quantities.iter().all(|q| q.formula_ratio <= 1.0)
    }

    pub fn exact_within(&self) -> bool {
        self.quantities.iter().all(|q| q.exact_ratio <= 1.0)
    }
}

/// Central differences of the fitted series against both evaluations at
/// every interior sample. Samples must be uniformly spaced.
pub fn consistency_check(series: &ModulationSeries, tolerance: Tolerance) -> Result<ConsistencyReport> {
    let n = series.times.len();
    if n < 3 {
        return Err(Error::InsufficientSnapshots(n));
    }
    let h = series.times[1] - series.times[0];
    let uniform = series
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    if !(h > 0.0) || !uniform {
        return Err(Error::Config("consistency check needs uniformly spaced samples".into()));
    }
    let mut out: Vec<QuantityDiscrepancy> = QUANTITIES
        .iter()
        .map(|q| QuantityDiscrepancy {
            quantity: q.to_string(),
            max_rate: 0.0,
            max_formula: 0.0,
            max_exact: 0.0,
            formula_ratio: 0.0,
            exact_ratio: 0.0,
        })
        .collect();
    for i in 1..n - 1 {
        let prev = series.values(i - 1);
        let next = series.values(i + 1);
        let formula = eval_all(&series.coords[i])?.rates();
        let exact = exact_rates(&series.coords[i])?.rates();
        for k in 0..6 {
            let fd = (next[k] - prev[k]) / (2.0 * h);
            let q = &mut out[k];
            let allowed = tolerance.allowed(fd);
            let df = (fd - formula[k]).abs();
            let de = (fd - exact[k]).abs();
            q.max_rate = q.max_rate.max(fd.abs());
            q.max_formula = q.max_formula.max(df);
            q.max_exact = q.max_exact.max(de);
            q.formula_ratio = q.formula_ratio.max(df / allowed);
            q.exact_ratio = q.exact_ratio.max(de / allowed);
        }
    }
    Ok(ConsistencyReport {
        samples: n,
        tolerance,
        quantities: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::modulation::decompose;

    #[test]
    fn ground_state_rates() {
        let g = Grid::default();
        let c = decompose(&q_profiles(&g).q, 0.0, 1.0);
        let (td, ad) = eval_theta_alpha_dot(&c).unwrap();
        assert_eq!((td, ad), (-1.0, 0.0));
        let r = eval_coefficient_dots(&c, td, ad);
        assert_eq!([r.a_e_dot, r.b_e_dot, r.a_o_dot, r.b_o_dot], [0.0; 4]);
        let e = exact_rates(&c).unwrap();
        assert!((e.theta_dot + 1.0).abs() < 1e-9 && e.alpha_dot.abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_coupling() {
        let g = Grid::default();
        let p = q_profiles(&g);
        let delta = 1e-4;
        let c = decompose(&(&p.q + &p.x_q.scale_real(delta)), 0.0, 1.0);
        let r = eval_all(&c).unwrap();
        assert!((r.a_o_dot + 2.0 * delta).abs() < 1e-2 * delta);
        let e = exact_rates(&c).unwrap();
        assert!((e.a_o_dot + 2.0 * delta).abs() < 1e-2 * delta);
    }

    #[test]
    fn too_few_samples() {
        let g = Grid::new(64, 30.0).unwrap();
        let q = q_profiles(&g).q.clone();
        let s = track_snapshots(&[0.0, 0.1], &[q.clone(), q]).unwrap();
        let tol = Tolerance { abs: 1e-6, rel: 0.0 };
        assert!(matches!(consistency_check(&s, tol), Err(Error::InsufficientSnapshots(2))));
    }
}
