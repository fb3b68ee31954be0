use proptest::prelude::*;
use rand::Rng;
use rdsm::damage_model::*;
use rdsm::param_space::*;
use rdsm::rdsm::*;
use rdsm::sampling::*;
use rdsm::sensitivity::*;

fn unit_vector() -> impl Strategy<Value = ParamVector> {
    prop::array::uniform32(0.0..=1.0f64).prop_flat_map(|head| {
        prop::array::uniform9(0.0..=1.0f64).prop_map(move |tail| {
            let mut u = [0.0; N_PARAMS];
            u[..32].copy_from_slice(&head);
            u[32..].copy_from_slice(&tail);
            u
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_inverts_denormalize(u in unit_vector()) {
        let catalog = ParameterCatalog::canonical();
        let dist = SamplingDistribution::UniformPm20;
        let x = denormalize(&u, catalog, &dist).unwrap();
        let back = normalize(&x, catalog, &dist).unwrap();
        for j in 0..N_PARAMS {
            prop_assert!((back[j] - u[j]).abs() <= 1e-12, "{j}: {} vs {}", back[j], u[j]);
        }
    }

    #[test]
    fn lhs_puts_one_point_in_each_stratum(n in 1usize..300, dim in 1usize..6, seed in any::<u64>()) {
        let d = sample_lhs(n, dim, seed).unwrap();
        for j in 0..dim {
            let mut hit = vec![false; n];
            for u in d.column(j) {
                prop_assert!((0.0..1.0).contains(&u));
                let k = (u * n as f64) as usize;
                let (lo, hi) = stratum_bounds(k, n);
                prop_assert!(lo <= u && u < hi);
                prop_assert!(!hit[k]);
                hit[k] = true;
            }
        }
    }

    #[test]
    fn samplers_are_pure_functions_of_the_seed(n in 1usize..50, dim in 1usize..5, seed in any::<u64>()) {
        prop_assert_eq!(sample_mc(n, dim, seed).unwrap(), sample_mc(n, dim, seed).unwrap());
        prop_assert_eq!(sample_lhs(n, dim, seed).unwrap(), sample_lhs(n, dim, seed).unwrap());
    }

    #[test]
    fn fdr_values_dominate_raw_and_invert_logworth(p in prop::collection::vec(1e-200..=1.0f64, 1..41)) {
        let q = benjamini_hochberg(&p);
        for (raw, adj) in p.iter().zip(&q) {
            prop_assert!(adj >= raw && *adj <= 1.0);
            let back = 10f64.powf(-logworth(*adj));
            prop_assert!((back - adj).abs() <= 1e-12 * adj);
        }
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|a, b| p[*a].total_cmp(&p[*b]));
        prop_assert!(order.windows(2).all(|w| q[w[0]] <= q[w[1]]));
    }

    #[test]
    fn gate_moves_toward_engagement(u in 0.0..=1.0f64, v in 0.0..=1.0f64, z in 0.0..=1.0f64, du in 0.0..=1.0f64, dv in 0.0..=1.0f64) {
        let g = EngagementGate::default();
        if g.engaged(u, v, z).unwrap() {
            prop_assert!(g.engaged((u + du).min(1.0), (v + dv).min(1.0), z).unwrap());
        }
    }

    #[test]
    fn cohesive_dissipation_is_bounded_and_damage_monotone(gc in 0.5..30.0f64, t0 in 1e3..1e4f64, k in 1e6..1e9f64, steps in 2usize..40) {
        let law = CohesiveLaw::new(k, t0, gc);
        prop_assume!(law.is_ok());
        let law = law.unwrap();
        let mut last = 0.0;
        for i in 0..=steps {
            let delta = 1.2 * law.delta_f * i as f64 / steps as f64;
            let d = law.damage(delta);
            prop_assert!(d >= last && (0.0..=1.0).contains(&d));
            prop_assert!(law.dissipated(delta) <= gc * (1.0 + 1e-12));
            last = d;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn source_energies_are_nonnegative_and_sum(u in unit_vector()) {
        let specimen = BendSpecimen::new(SpecimenConfig::default()).unwrap();
        let x = denormalize(&u, ParameterCatalog::canonical(), &SamplingDistribution::UniformPm20).unwrap();
        let (e, history) = simulate_bend_history(&x, &specimen).unwrap();
        prop_assert!(e.as_array().iter().all(|v| *v >= 0.0));
        prop_assert!(e.is_consistent(1e-9));
        for w in history.windows(2) {
            for (a, b) in w[0].plies.iter().zip(&w[1].plies) {
                prop_assert!(b.d11 >= a.d11 && b.d22 >= a.d22 && b.d12 >= a.d12 && b.eps12_p >= a.eps12_p);
            }
            for (a, b) in w[0].metal.iter().zip(&w[1].metal) {
                prop_assert!(b.eps_p >= a.eps_p);
            }
            for (a, b) in w[0].cohesive.iter().zip(&w[1].cohesive) {
                prop_assert!(b.damage >= a.damage);
            }
        }
    }

    #[test]
    fn screening_ignores_affine_rescaling(scale in 0.01..100.0f64, shift in -50.0..50.0f64, col in 0usize..3, seed in any::<u64>()) {
        let d = sample_mc(60, 3, seed).unwrap();
        let mut rng = rng_from_seed(seed ^ 1);
        let noise = sample_mc(60, 1, rng.random()).unwrap();
        let inputs: Vec<Vec<f64>> = d.rows().map(|r| r.to_vec()).collect();
        let y: Vec<f64> = inputs.iter().zip(noise.column(0)).map(|(x, e)| 3.0 * x[0] + x[1] + 0.5 * e).collect();
        let names = ["a", "b", "c"];
        let base = screen_fdr_logworth(&inputs, &y, &names, "y", RetentionRule::for_total()).unwrap();
        let moved: Vec<Vec<f64>> = inputs.iter().map(|x| {
            let mut x = x.clone();
            x[col] = scale * x[col] + shift;
            x
        }).collect();
        let other = screen_fdr_logworth(&moved, &y, &names, "y", RetentionRule::for_total()).unwrap();
        prop_assert_eq!(&base.retained, &other.retained);
        for (a, b) in base.scores.iter().zip(&other.scores) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert!((a.logworth - b.logworth).abs() <= 1e-6 * a.logworth.abs().max(1.0));
        }
    }
}
