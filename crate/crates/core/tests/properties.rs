//! Property tests for the algebraic and analytic invariants.

use proptest::prelude::*;

use barriers_core::*;

const TOL: f64 = DEFAULT_TOL_BITS;

fn dims_strategy() -> impl Strategy<Value = (usize, usize, usize)> {
    ((1usize..=3), (1usize..=3), (1usize..=3))
}

prop_compose! {
    fn support_strategy()(dims in dims_strategy())(
        picks in proptest::collection::btree_set(
            (0usize..dims.0, 0usize..dims.1, 0usize..dims.2), 1..=4),
        dims in Just(dims),
    ) -> TensorSupport {
        let points = picks.into_iter().map(|(i, j, k)| Triple::new(i, j, k));
        TensorSupport::new(dims, points).expect("valid support")
    }
}

prop_compose! {
    fn tensor_strategy()(support in support_strategy()) -> Tensor {
        let one = Coeff::from_integer(1);
        Tensor::new(support.dims(), support.points().map(|p| (*p, one))).expect("valid tensor")
    }
}

prop_compose! {
    fn theta_strategy()(raw in [1u32..1000, 1u32..1000, 1u32..1000]) -> Theta {
        let sum: f64 = raw.iter().map(|&x| x as f64).sum();
        Theta::new(raw[0] as f64 / sum, raw[1] as f64 / sum,
                   1.0 - raw[0] as f64 / sum - raw[1] as f64 / sum).expect("normalized")
    }
}

fn zeta(support: &TensorSupport, theta: &Theta) -> f64 {
    let pres = Presentation::new("t", support.clone());
    zeta_upper(&pres, theta, TOL).unwrap().log2_value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kronecker_is_associative(a in tensor_strategy(), b in tensor_strategy(), c in tensor_strategy()) {
        let left = a.kronecker(&b).unwrap().kronecker(&c).unwrap();
        let right = a.kronecker(&b.kronecker(&c).unwrap()).unwrap();
        // row-major flattening makes the supports literally equal
        prop_assert_eq!(left.support(), right.support());
    }

    #[test]
    fn document_round_trip(t in tensor_strategy()) {
        let doc = serialize_tensor(&t);
        prop_assert_eq!(parse_tensor(&doc).unwrap(), t);
    }

    #[test]
    fn direct_sum_counts(a in tensor_strategy(), b in tensor_strategy()) {
        let s = a.direct_sum(&b).unwrap();
        prop_assert_eq!(s.support().len(), a.support().len() + b.support().len());
        let (da, db) = (a.dims(), b.dims());
        prop_assert_eq!(s.dims(), (da.0 + db.0, da.1 + db.1, da.2 + db.2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn objective_is_concave(support in support_strategy(),
                            theta in theta_strategy(),
                            wa in proptest::collection::vec(1u32..100, 4),
                            wb in proptest::collection::vec(1u32..100, 4),
                            lam in 0.0f64..1.0) {
        let n = support.len();
        let norm = |w: &[u32]| {
            let s: f64 = w.iter().take(n).map(|&x| x as f64).sum();
            w.iter().take(n).map(|&x| x as f64 / s).collect::<Vec<f64>>()
        };
        let pa = norm(&wa);
        let pb = norm(&wb);
        let da = SupportDistribution::from_point_masses(&support, &pa).unwrap();
        let db = SupportDistribution::from_point_masses(&support, &pb).unwrap();
        let mix: Vec<f64> = pa.iter().zip(&pb).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let dm = SupportDistribution::from_point_masses(&support, &mix).unwrap();
        let fa = objective(&da, &support, &theta);
        let fb = objective(&db, &support, &theta);
        let fm = objective(&dm, &support, &theta);
        prop_assert!(fm >= lam * fa + (1.0 - lam) * fb - 1e-10);
    }

    #[test]
    fn zeta_matches_closed_form_on_matmul(a in 1usize..=4, b in 1usize..=4, c in 1usize..=4,
                                          theta in theta_strategy()) {
        let t = Tensor::matmul(a, b, c).unwrap();
        let solved = zeta(t.support(), &theta);
        let closed = zeta_matmul_closed(a, b, c, &theta).log2_value;
        prop_assert!((solved - closed).abs() <= 1e-6,
                     "mm({a},{b},{c}): solved {solved} closed {closed}");
    }

    #[test]
    fn zeta_is_kronecker_multiplicative(s in tensor_strategy(), t in tensor_strategy(),
                                        theta in theta_strategy()) {
        let st = s.kronecker(&t).unwrap();
        let v_st = zeta(st.support(), &theta);
        let v_s = zeta(s.support(), &theta);
        let v_t = zeta(t.support(), &theta);
        prop_assert!((v_st - (v_s + v_t)).abs() <= 1e-6,
                     "log zeta: {v_st} vs {v_s} + {v_t}");
    }

    #[test]
    fn zeta_is_direct_sum_additive(s in tensor_strategy(), t in tensor_strategy(),
                                   theta in theta_strategy()) {
        let sum = s.direct_sum(&t).unwrap();
        let v_sum = zeta(sum.support(), &theta).exp2();
        let v_s = zeta(s.support(), &theta).exp2();
        let v_t = zeta(t.support(), &theta).exp2();
        prop_assert!((v_sum - (v_s + v_t)).abs() <= 1e-6,
                     "2^zeta: {v_sum} vs {v_s} + {v_t}");
    }

    #[test]
    fn gradient_matches_central_differences(support in support_strategy(),
                                            theta in theta_strategy(),
                                            raw in proptest::collection::vec(1u32..50, 4)) {
        let n = support.len();
        let s: f64 = raw.iter().take(n).map(|&x| x as f64).sum();
        let masses: Vec<f64> = raw.iter().take(n).map(|&x| x as f64 / s).collect();
        let dist = SupportDistribution::from_point_masses(&support, &masses).unwrap();
        let grad = objective_gradient(&dist, &support, &theta);
        let h = 1e-6;
        for (idx, g) in grad.iter().enumerate() {
            let g_bits = g.expect("interior") / std::f64::consts::LN_2;
            let mut plus = masses.clone();
            let mut minus = masses.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let fd = (objective_unnormalized(&support, &theta, &plus)
                - objective_unnormalized(&support, &theta, &minus)) / (2.0 * h);
            prop_assert!((fd - g_bits).abs() <= 1e-6 * g_bits.abs().max(1.0),
                         "idx {idx}: fd {fd} grad {g_bits}");
        }
    }

    #[test]
    fn solver_bounded_by_dims_and_size(support in support_strategy(), theta in theta_strategy()) {
        let rep = maximize_entropy(&support, &theta, None, TOL).unwrap();
        let dim_bound: f64 = (0..3)
            .map(|ax| theta.get(ax) * (support.dim(ax) as f64).log2())
            .sum();
        let size_bound = (support.len() as f64).log2();
        prop_assert!(rep.value_bits <= dim_bound + 1e-9);
        prop_assert!(rep.value_bits <= size_bound + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solver_matches_oracle_on_small_supports(support in support_strategy(),
                                               theta in theta_strategy()) {
        // tolerance well below the 1e-10 slack: the oracle's grid can contain
        // the exact optimum, and the solver's feasible value trails the true
        // maximum by up to its tolerance
        let rep = maximize_entropy(&support, &theta, None, 1e-12).unwrap();
        let oracle = brute_force_max(&support, &theta, None, 0.01).unwrap();
        prop_assert!(rep.value_bits >= oracle - 1e-10);
        prop_assert!((rep.value_bits - oracle).abs() <= 1e-2);
    }

    #[test]
    fn barrier_monotone_in_p_and_kappa(p_lo in 0.0f64..2.0, dp in 0.01f64..1.0,
                                       k_lo in 0.0f64..1.0, dk in 0.01f64..1.0) {
        let t = Tensor::cw_big(2).unwrap();
        let part = orbits(t.support(), &cw_big_action(2)).unwrap();
        let pres = Presentation::with_partition("cw:2", t.support().clone(), part).unwrap();
        let config = SearchConfig {
            theta_grid_step: 0.02,
            theta_resolution: 1e-3,
            inner_tol_bits: 1e-9,
        };
        let query = |p: f64, k: f64| {
            BarrierQuery::new("cw:2", vec![pres.clone()], 4.0)
                .unwrap()
                .with_p(p)
                .unwrap()
                .with_kappa(k)
                .unwrap()
        };
        let v_lo = barrier_omega(&query(p_lo, k_lo), &config).unwrap().value;
        let v_p = barrier_omega(&query(p_lo + dp, k_lo), &config).unwrap().value;
        let v_k = barrier_omega(&query(p_lo, k_lo + dk), &config).unwrap().value;
        prop_assert!(v_p >= v_lo - 1e-9, "p-monotonicity: {v_p} < {v_lo}");
        prop_assert!(v_k >= v_lo - 1e-9, "kappa-monotonicity: {v_k} < {v_lo}");
    }
}
