use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use nnls_lab::dynamics::{pt_transform, step, SolverConfig};
use nnls_lab::experiments::config::{LowerBoundParams, Scenario};
use nnls_lab::experiments::{ScenarioConfig, SweepConfig};
use nnls_lab::invariants::{hamiltonian, quasipower, symplectic};
use nnls_lab::linops::{apply_p, apply_p_inv, Operand, OperatorHandle, OperatorKind};
use nnls_lab::modulation::{build_initial_data, decompose, fit_modulation, random_tiered_fixture};
use nnls_lab::solitons::{blowup_time, ground_state, two_param_soliton, two_param_soliton_at};
use nnls_lab::{Field, Grid};

fn grid() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| Grid::new(256, 40.0).unwrap())
}

/// Localised smooth field with a few Hermite-like modes.
fn bump(c: &[(f64, f64)]) -> Field {
    Field::from_fn(grid(), |x| {
        let g = (-0.5 * x * x).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = 1.0;
        for &(re, im) in c {
            acc += Complex64::new(re, im) * p;
            p *= x;
        }
        acc * g
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reflection_is_an_involution(c in coeffs()) {
        let u = bump(&c);
        prop_assert_eq!(u.reflect_conjugate().reflect_conjugate().into_values(), u.values().to_vec());
        prop_assert_eq!(pt_transform(&pt_transform(&u)).into_values(), u.values().to_vec());
    }

    #[test]
    fn even_odd_parts_recombine(c in coeffs()) {
        let u = bump(&c);
        let (e, o) = u.even_odd_split();
        prop_assert!((&e + &o).max_abs_diff(&u) < 1e-15);
        prop_assert!(e.max_abs_diff(&e.reflect()) < 1e-15);
        prop_assert!(o.max_abs_diff(&o.reflect().scale_real(-1.0)) < 1e-15);
        prop_assert!(e.semi_inner(&o).unwrap().abs() < 1e-12);
    }

    #[test]
    fn parseval(c in coeffs()) {
        let u = bump(&c);
        let s = u.to_spectral();
        prop_assert!((s.norm_hs(0.0) - u.norm_l2()).abs() < 1e-12 * (1.0 + u.norm_l2()));
        prop_assert!(s.to_field().max_abs_diff(&u) < 1e-13);
    }

    #[test]
    fn derivative_is_exact_on_gaussians(s in 0.6..2.0f64, shift in -3.0..3.0f64) {
        let f = Field::from_real_fn(grid(), |x| (-(x - shift).powi(2) / (2.0 * s * s)).exp());
        let exact = Field::from_real_fn(grid(), |x| -(x - shift) / (s * s) * (-(x - shift).powi(2) / (2.0 * s * s)).exp());
        prop_assert!(f.dx().max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn quasipower_is_gauge_invariant(c in coeffs(), phase in -3.2..3.2f64) {
        let u = bump(&c);
        let m = quasipower(&u);
        let h = hamiltonian(&u);
        let r = u.scale(Complex64::from_polar(1.0, phase));
        prop_assert!((quasipower(&r) - m).norm() < 1e-12 * (1.0 + m.norm()));
        prop_assert!((hamiltonian(&r) - h).norm() < 1e-12 * (1.0 + h.norm()));
    }

    #[test]
    fn symplectic_form_is_antisymmetric(a in coeffs(), b in coeffs()) {
        let (f, g) = (bump(&a), bump(&b));
        let w = symplectic(&f, &g).unwrap();
        prop_assert!((w + symplectic(&g, &f).unwrap()).abs() < 1e-12 * (1.0 + w.abs()));
        prop_assert!(symplectic(&f, &f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scalar_operators_are_symmetric(a in coeffs(), b in coeffs(), k in 0usize..4) {
        let kind = [OperatorKind::LPlus, OperatorKind::LMinus, OperatorKind::CalLPlus, OperatorKind::CalLMinus][k];
        let op = OperatorHandle::new(kind, grid());
        let (f, g) = (bump(&a), bump(&b));
        let lf = op.apply(&Operand::Single(f.clone())).unwrap().single().unwrap();
        let lg = op.apply(&Operand::Single(g.clone())).unwrap().single().unwrap();
        let lhs = lf.semi_inner(&g).unwrap();
        let rhs = f.semi_inner(&lg).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{kind:?}: {lhs} vs {rhs}");
    }

    #[test]
    fn p_map_inverts(a in coeffs(), b in coeffs()) {
        let (f, g) = (bump(&a), bump(&b));
        let (pf, pg) = apply_p(&f, &g);
        let (f2, g2) = apply_p_inv(&pf, &pg);
        prop_assert!(f2.max_abs_diff(&f) < 1e-14 && g2.max_abs_diff(&g) < 1e-14);
    }

    #[test]
    fn pt_symmetry_of_the_flow(c in coeffs(), scale in 0.05..0.5f64) {
        // One step forward from u⋆ equals the PT image of one step backward.
        let u = bump(&c).scale_real(scale);
        let cfg = SolverConfig::default();
        let fwd = step(&pt_transform(&u), 1e-3, &cfg).unwrap();
        let back = pt_transform(&step(&u, -1e-3, &cfg).unwrap());
        prop_assert!(fwd.max_abs_diff(&back) < 1e-14);
    }

    #[test]
    fn stepping_is_deterministic(c in coeffs()) {
        let u = bump(&c).scale_real(0.3);
        let cfg = SolverConfig::default();
        let a = step(&u, 1e-3, &cfg).unwrap();
        let b = step(&u, 1e-3, &cfg).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn tiered_round_trip(seed in any::<u64>(), eps in 1e-4..3e-2f64) {
        let (co, se, so) = random_tiered_fixture(grid(), eps, 0.5, seed);
        let data = build_initial_data(grid(), eps, co, Some((&se, &so)), 1.0).unwrap();
        let c = decompose(&data.u0, 0.0, 1.0);
        prop_assert!(c.reconstruct_u().max_abs_diff(&data.u0) < 1e-12);
        // At (θ, α) = (0, 1) the coordinates are the tiered inputs.
        prop_assert!((c.a_e - co.a_e).abs() < 1e-12 && (c.b_e - co.b_e).abs() < 1e-12);
        prop_assert!((c.a_o - co.a_o).abs() < 1e-12 && (c.b_o - co.b_o).abs() < 1e-12);
        let de = c.eta_e.max_abs_diff(&data.eta_e);
        prop_assert!(de < 1e-10, "{de:e}");
        prop_assert!(c.eta_o.max_abs_diff(&data.eta_o) < 1e-10);
        prop_assert!(c.orthogonality_residuals().iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn fit_recovers_phase_and_scale(theta in -1.0..1.0f64, alpha in 0.9..1.1f64) {
        let u = ground_state(alpha, grid()).unwrap().scale(Complex64::from_polar(1.0, theta));
        let fit = fit_modulation(&u, (0.0, 1.0)).unwrap();
        prop_assert!((fit.theta - theta).abs() < 1e-10 && (fit.alpha - alpha).abs() < 1e-10);
    }

    #[test]
    fn two_param_soliton_symmetries(alpha in 0.5..1.5f64, beta in 0.5..1.5f64, x in -5.0..5.0f64) {
        prop_assume!((alpha - beta).abs() > 1e-3);
        let t = 0.3 * blowup_time(alpha, beta).unwrap();
        let u = two_param_soliton_at(alpha, beta, t, x).unwrap();
        let v = two_param_soliton_at(beta, alpha, t, x).unwrap();
        // Swapping the parameters reflects space.
        let w = two_param_soliton_at(alpha, beta, t, -x).unwrap();
        prop_assert!((v - w).norm() < 1e-12 * (1.0 + u.norm()), "{v} vs {w}");
    }

    #[test]
    fn config_hash_survives_reserialisation(beta in 0.9..0.999f64, samples in 2usize..500) {
        let p = LowerBoundParams { beta, samples, ..Default::default() };
        let cfg = ScenarioConfig::new(Scenario::LowerBound(p), "out");
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn sweep_cells_form_the_cross_product(a in 1usize..4, b in 1usize..4) {
        let va: Vec<f64> = (0..a).map(|i| 0.9 + 0.01 * i as f64).collect();
        let vb: Vec<usize> = (0..b).map(|i| 11 + i).collect();
        let text = serde_json::json!({
            "version": 1,
            "base": {"version": 1, "scenario": "lower_bound", "params": {}, "output_dir": "x"},
            "axes": [{"pointer": "/params/beta", "values": va}, {"pointer": "/params/samples", "values": vb}],
            "output_dir": "sweep"
        }).to_string();
        let cells = SweepConfig::from_json(&text).unwrap().cells().unwrap();
        prop_assert_eq!(cells.len(), a * b);
        let Scenario::LowerBound(last) = &cells[a * b - 1].1.scenario else { panic!() };
        prop_assert_eq!(last.beta, va[a - 1]);
        prop_assert_eq!(last.samples, vb[b - 1]);
    }
}

#[test]
fn soliton_sampling_matches_pointwise_form() {
    let u = two_param_soliton(1.0, 0.9, 2.0, grid()).unwrap();
    for (j, &x) in grid().points().iter().enumerate().step_by(17) {
        assert_eq!(u.values()[j], two_param_soliton_at(1.0, 0.9, 2.0, x).unwrap());
    }
}
