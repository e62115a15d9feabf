use adiabound::bounds::audit_inequality;
use adiabound::{
    driving_uncertainty, evaluate_hamiltonian, expectation, grover_bound, grover_c_final, grover_delta_v, ground_state,
    necessary_run_time, overlap_sq, propagate, variance, GroverInstance, HermitianOperator, InterpolatedHamiltonian,
    Path, Profile, PropagatorConfig, Schedule, StateVector, C64,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(complex(), dim)
        .prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| StateVector::normalized(v).unwrap())
}

fn hermitian(dim: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |v| {
        let a = DMatrix::from_vec(dim, dim, v);
        (&a + a.adjoint()).unscale(2.0)
    })
}

fn operator_and_state(max_dim: usize) -> impl Strategy<Value = (HermitianOperator, StateVector)> {
    (2..=max_dim).prop_flat_map(|d| (hermitian(d), state(d))).prop_map(|(m, s)| (HermitianOperator::dense(m).unwrap(), s))
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        Just(Profile::Linear),
        (0.3..4.0f64).prop_map(|p| Profile::power(p).unwrap()),
        (0.5..8.0f64).prop_map(|k| Profile::tanh_ramp(k).unwrap()),
        (2u64..5000).prop_map(|n| Profile::local_adiabatic_grover(n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_is_nonnegative_and_centered((h, psi) in operator_and_state(8)) {
        let var = variance(&h, &psi).unwrap();
        prop_assert!(var >= 0.0);
        let mean = expectation(&h, &psi).unwrap();
        let m = h.to_dense();
        let shifted = &m - DMatrix::<C64>::identity(m.nrows(), m.ncols()) * C64::new(mean, 0.0);
        let centered = (&shifted * psi.amplitudes()).norm_squared();
        prop_assert!((var - centered).abs() <= 1e-10 * (1.0 + centered));
    }

    #[test]
    fn ground_state_is_an_eigenvector(m in (2usize..=64).prop_flat_map(hermitian)) {
        let h = HermitianOperator::dense(m.clone()).unwrap();
        if let Ok(pair) = ground_state(&h) {
            let v = pair.state.amplitudes();
            let residual = (&m * v - v * C64::new(pair.energy, 0.0)).norm();
            prop_assert!(residual <= 1e-10 * h.norm_bound().max(1.0));
            prop_assert!((pair.state.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(pair.gap > 0.0);
        }
    }

    #[test]
    fn evaluation_is_affine_in_lambda(
        (a, b) in (2usize..=6).prop_flat_map(|d| (hermitian(d), hermitian(d))),
        l1 in 0.0..=1.0f64,
        l2 in 0.0..=1.0f64,
        mix in 0.0..=1.0f64,
    ) {
        let ih = InterpolatedHamiltonian::new(HermitianOperator::dense(a).unwrap(), HermitianOperator::dense(b).unwrap()).unwrap();
        let at = |l: f64| evaluate_hamiltonian(&ih, l).unwrap().to_dense();
        let lm = mix * l1 + (1.0 - mix) * l2;
        let combined = at(l1) * C64::new(mix, 0.0) + at(l2) * C64::new(1.0 - mix, 0.0);
        prop_assert!((at(lm) - combined).norm() <= 1e-12 * (1.0 + ih.norm_estimate()));
        prop_assert_eq!(at(0.0), ih.h0().to_dense());
        prop_assert_eq!(at(1.0), ih.h1().to_dense());
    }

    #[test]
    fn overlap_is_symmetric_and_phase_blind(
        (a, b) in (1usize..=10).prop_flat_map(|d| (state(d), state(d))),
        phi in -10.0..10.0f64,
    ) {
        let ab = overlap_sq(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - overlap_sq(&b, &a).unwrap()).abs() <= 1e-15);
        prop_assert!((ab - overlap_sq(&a.with_phase(phi), &b).unwrap()).abs() <= 1e-12);
        prop_assert!((overlap_sq(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn schedules_are_monotone_with_exact_endpoints(p in profile(), t_f in 0.01..1e4f64, u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let s = Schedule::new(p, t_f).unwrap();
        prop_assert!(s.evaluate(0.0).unwrap().abs() <= 1e-12);
        prop_assert!((s.evaluate(t_f).unwrap() - 1.0).abs() <= 1e-12);
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let (a, b) = (s.evaluate(lo * t_f).unwrap(), s.evaluate(hi * t_f).unwrap());
        prop_assert!(a <= b + 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
        let int = s.integral_of_lambda(t_f).unwrap();
        prop_assert!(int >= -1e-12 && int <= t_f * (1.0 + 1e-10));
    }

    #[test]
    fn integral_scales_linearly_with_run_time(p in profile(), eta in 1e-3..10.0f64) {
        let path = Path::new(p);
        let unit = path.base().integral_of_lambda(path.base().run_time()).unwrap();
        let s = path.rescale(eta).unwrap();
        prop_assert!((s.run_time() - 1.0 / eta).abs() <= 1e-12 / eta);
        let scaled = s.integral_of_lambda(s.run_time()).unwrap();
        prop_assert!((scaled - unit / eta).abs() <= 1e-9 * unit / eta);
        for frac in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let a = s.evaluate(frac * s.run_time()).unwrap();
            let b = path.base().evaluate(frac * path.base().run_time()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn necessary_run_time_monotone(dv in 1e-3..10.0f64, c in 0.0..=1.0f64, e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64, scale in 1.0..5.0f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let t_lo = necessary_run_time(dv, c, lo).unwrap();
        let t_hi = necessary_run_time(dv, c, hi).unwrap();
        prop_assert!(t_lo >= t_hi);
        prop_assert!(t_hi >= 0.0);
        prop_assert!(necessary_run_time(dv * scale, c, lo).unwrap() <= t_lo + 1e-15);
    }

    #[test]
    fn grover_bound_is_composed_from_closed_forms(k in 1u32..=20, eps in 0.0..=1.0f64) {
        let n = 1u64 << k;
        let composed = necessary_run_time(grover_delta_v(n).unwrap(), grover_c_final(n).unwrap(), eps).unwrap();
        prop_assert!((grover_bound(n, eps).unwrap() - composed).abs() <= 1e-12 * (1.0 + composed));
    }

    #[test]
    fn marked_item_does_not_change_the_closed_forms(n in 2u64..=24, pick in 0.0..1.0f64) {
        let marked = 1 + ((pick * n as f64) as u64).min(n - 1);
        let ih = adiabound::build_full(&GroverInstance::new(n, marked).unwrap()).unwrap().densified();
        let dv = driving_uncertainty(&ih).unwrap();
        prop_assert!((dv - grover_delta_v(n).unwrap()).abs() <= 1e-12);
        let phi0 = ground_state(ih.h0()).unwrap().state;
        let phi1 = ground_state(ih.h1()).unwrap().state;
        prop_assert!((overlap_sq(&phi1, &phi0).unwrap() - 1.0 / n as f64).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grover_dynamics_stay_in_the_two_dim_subspace(n in 3u64..=40, marked_pick in 0.0..1.0f64, t_f in 0.5..20.0f64) {
        let marked = 1 + ((marked_pick * n as f64) as u64).min(n - 1);
        let g = GroverInstance::new(n, marked).unwrap();
        let ih = adiabound::build_full(&g).unwrap();
        let tr = propagate(&ih, &Schedule::linear(t_f).unwrap(), &PropagatorConfig::default().with_samples(5)).unwrap();
        let m = g.marked_state().unwrap();
        let r = g.rest_state().unwrap();
        let psi = tr.final_state.amplitudes();
        let projected: DVector<C64> = m.amplitudes() * m.amplitudes().dotc(psi) + r.amplitudes() * r.amplitudes().dotc(psi);
        prop_assert!((psi - projected).norm() <= 1e-10);
    }

    #[test]
    fn fixed_run_time_audit_holds_for_random_pairs(
        (a, b) in (2usize..=5).prop_flat_map(|d| (hermitian(d), hermitian(d))),
        t_f in 0.05..5.0f64,
        p in profile(),
    ) {
        let ih = InterpolatedHamiltonian::new(HermitianOperator::dense(a).unwrap(), HermitianOperator::dense(b).unwrap()).unwrap();
        let Ok(dv) = driving_uncertainty(&ih) else { return Ok(()); };
        let Ok(tr) = propagate(&ih, &Schedule::new(p, t_f).unwrap(), &PropagatorConfig::default().with_samples(21)) else {
            return Ok(());
        };
        prop_assert!(tr.max_norm_deviation() <= 1e-9);
        prop_assert!(!audit_inequality(&tr, dv).is_violated());
    }
}
