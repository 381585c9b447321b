use kaclab::chaos_metrics::{cost, w1_brute_force, w1_empirical, PointCloud, W1Options};
use kaclab::chaotic_init::{
    sample_conditioned_product, sample_uniform_sphere, DensitySpec, McmcOptions, SphereSpec, SphereVariant,
};
use kaclab::kac_process::{conserved_check, KacProcess, Scheme, TimeScale, VelocityState};
use kaclab::kernels::CollisionKernel;
use kaclab::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn kernel(k: u8) -> CollisionKernel {
    match k % 3 {
        0 => CollisionKernel::maxwell_cutoff(),
        1 => CollisionKernel::hard_spheres(),
        _ => CollisionKernel::true_maxwell(0.2, 0.5).unwrap(),
    }
}

fn cloud(vals: &[f64], n: usize, j: usize, d: usize) -> PointCloud {
    PointCloud::new(vals[..n * j * d].to_vec(), j, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dynamics_conserve_momentum_and_energy(
        seed in any::<u64>(),
        n in 2usize..24,
        d in 2usize..4,
        k in any::<u8>(),
        rejection in any::<bool>(),
    ) {
        let mut rng = stream(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let state = VelocityState::new(data, d, kernel(k)).unwrap();
        let before = conserved_check(&state);
        let scheme = if rejection { Scheme::Rejection } else { Scheme::Ssa };
        let mut p = KacProcess::new(state, TimeScale::Ordered);
        let traj = p.simulate(&[0.0, 0.5, 2.0], &mut rng, scheme).unwrap();
        prop_assert_eq!(traj.snapshots.len(), 3);
        let after = conserved_check(p.state());
        for a in 0..d {
            prop_assert!((after.momentum[a] - before.momentum[a]).abs() < 1e-10 * n as f64);
        }
        prop_assert!((after.energy - before.energy).abs() < 1e-10 * before.energy.max(1.0));
        prop_assert!(traj.snapshots.windows(2).all(|w| w[0].collisions <= w[1].collisions));
    }

    #[test]
    fn sphere_samplers_land_on_the_sphere(seed in any::<u64>(), n in 3usize..40, d in 1usize..4) {
        let mut rng = stream(seed);
        let sphere = if d == 1 && seed % 2 == 0 { SphereSpec::kac(n) } else { SphereSpec::boltzmann(n, d) };
        // The Kac sphere carries no momentum constraint.
        let momentum_bound = if sphere.variant == SphereVariant::Kac { f64::INFINITY } else { 1e-9 * n as f64 };
        let s = sample_uniform_sphere(&sphere, &mut rng).unwrap();
        let c = conserved_check(&s);
        prop_assert!(c.sphere_residuals.0 < momentum_bound && c.sphere_residuals.1 < 1e-10 * n as f64);
        let f = DensitySpec::symmetric_bimodal(sphere.dim, 1.5, 0.2).unwrap();
        let s = sample_conditioned_product(&f, &sphere, &mut rng, McmcOptions { n_burn: 20 * n, n_thin: 1 }).unwrap();
        let c = conserved_check(&s);
        prop_assert!(c.sphere_residuals.0 < momentum_bound && c.sphere_residuals.1 < 1e-9 * n as f64);
    }

    #[test]
    fn truncated_distance_is_a_metric(vals in prop::collection::vec(-2.0f64..2.0, 36), n in 1usize..5, d in 1usize..4) {
        let j = 1;
        let x = cloud(&vals, n, j, d);
        let y = cloud(&vals[12..], n, j, d);
        let z = cloud(&vals[24..], n, j, d);
        let o = W1Options::default();
        let w = |a: &PointCloud, b: &PointCloud| w1_empirical(a, b, &o).unwrap().value;
        prop_assert_eq!(w(&x, &x), 0.0);
        prop_assert!((w(&x, &y) - w(&y, &x)).abs() < 1e-12);
        prop_assert!(w(&x, &z) <= w(&x, &y) + w(&y, &z) + 1e-12);
        prop_assert!(w(&x, &y) <= 1.0);
    }

    #[test]
    fn exact_solver_equals_enumeration(vals in prop::collection::vec(-1.5f64..1.5, 36), n in 1usize..7, three in any::<bool>()) {
        let d = if three { 3 } else { 1 };
        let x = cloud(&vals, n, 1, d);
        let y = cloud(&vals[18..], n, 1, d);
        let a = w1_empirical(&x, &y, &W1Options::default()).unwrap();
        prop_assert!(!a.approximate);
        // Same optimum, summed in a different order.
        let b = w1_brute_force(&x, &y).unwrap();
        prop_assert!((a.value - b).abs() < 1e-12, "{} vs {}", a.value, b);
    }

    #[test]
    fn cost_is_bounded_and_symmetric(vals in prop::collection::vec(-5.0f64..5.0, 12), j in 1usize..3) {
        let d = 12 / (2 * j);
        let (a, b) = vals.split_at(j * d);
        let c = cost(a, &b[..j * d], j, d);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, cost(&b[..j * d], a, j, d));
    }
}
