mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sampled_modal::*;

fn sys_from_seed(seed: u64, n: usize, nu: usize) -> System {
    random_system(&mut rng(seed), n, nu)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_law(seed in 0u64..1000, t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let sys = sys_from_seed(seed, 20, 1);
        let x = random_state(&mut rng(seed + 7), 20);
        let a = apply_semigroup(t1 + t2, &x, &sys).unwrap();
        let b = apply_semigroup(t1, &apply_semigroup(t2, &x, &sys).unwrap(), &sys).unwrap();
        prop_assert!(rel_err(a.coeffs(), b.coeffs()) <= 1e-12);
    }

    #[test]
    fn variation_of_constants(seed in 0u64..1000, t1 in 0.01f64..5.0, t2 in 0.01f64..5.0) {
        let sys = sys_from_seed(seed, 15, 1);
        let u = c(0.3, -1.1);
        let lhs = apply_input_map(t1 + t2, u, &sys).unwrap();
        let a = apply_semigroup(t2, &apply_input_map(t1, u, &sys).unwrap(), &sys).unwrap();
        let b = apply_input_map(t2, u, &sys).unwrap();
        let rhs: Vec<C> = a.coeffs().iter().zip(b.coeffs()).map(|(p, q)| p + q).collect();
        prop_assert!(rel_err(lhs.coeffs(), &rhs) <= 1e-12);
    }

    #[test]
    fn nonresonance_conjugate_symmetric(re1 in 0.01f64..2.0, im1 in -5.0f64..5.0, re2 in 0.01f64..2.0, im2 in -5.0f64..5.0, tau in 0.1f64..5.0) {
        prop_assume!((im1 - im2).abs() > 1e-6 || (re1 - re2).abs() > 1e-6);
        let mk = |s: f64| {
            let modes = vec![
                Mode::new(c(re1, s * im1), c(1.0, 0.0), c(0.0, 0.0)),
                Mode::new(c(re2, s * im2), c(1.0, 0.0), c(0.0, 0.0)),
            ];
            System::new(modes, sector(), 1.0, 1.0).unwrap()
        };
        prop_assert_eq!(check_nonresonance(&mk(1.0), tau), check_nonresonance(&mk(-1.0), tau));
    }

    #[test]
    fn zero_feedback_margins_are_one(seed in 0u64..1000, tau in 0.01f64..2.0) {
        let sys = sys_from_seed(seed, 10, 0);
        let sys = sys.clone().with_feedback(&vec![c(0.0, 0.0); 10]).unwrap();
        let grid: Vec<f64> = (-100..=100).map(|k| k as f64 * 0.3).collect();
        prop_assert_eq!(continuous_margin(&sys, &grid, &[]).unwrap().eps_c, 1.0);
        let op = Operator::new(&sys, tau).unwrap();
        prop_assert_eq!(discrete_margin(&op, 256, Some(0.0)).unwrap().eps_d, 1.0);
    }

    #[test]
    fn refinement_never_raises_margin(seed in 0u64..1000) {
        let (_, op) = certified(&mut rng(seed), 15);
        let coarse = discrete_margin(&op, 256, Some(0.0)).unwrap();
        let fine = discrete_margin(&op, 4096, Some(0.0)).unwrap();
        // the coarse grid's first 256 nodes are a subset of every finer grid
        let first: f64 = (0..256)
            .map(|j| {
                let z = C::from_polar(1.0, std::f64::consts::TAU * j as f64 / 256.0);
                (c(1.0, 0.0) - transfer_h(&op, z, None).unwrap().value).norm()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(coarse.raw_min <= first);
        prop_assert!(fine.raw_min <= first);
    }

    #[test]
    fn mode_bound_never_violated(seed in 0u64..1000, tau in 0.01f64..3.0) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 30, 2);
        let (c1, _) = sampling_gap(&sys, tau);
        let consts = gamma_constants(&sys, tau, sys.beta + sys.gamma, if c1.is_finite() { c1 } else { 1.0 }).unwrap();
        let zs: Vec<C> = (0..200).map(|_| annulus(&mut r, 1.0, 3.0)).collect();
        let check = verify_mode_bound(&sys, tau, &zs, &consts).unwrap();
        prop_assert!(check.max_violation <= 0.0, "violation {}", check.max_violation);
    }
}

#[test]
fn pole_placement_hits_targets() {
    let mut r = rng(11);
    for m in 1..=12 {
        let modes: Vec<Mode> = (0..m)
            .map(|k| Mode::new(c(0.2 + 0.05 * k as f64, 1.5 * k as f64 - 8.0), c(1.0, 0.1 * k as f64), c(0.0, 0.0)))
            .collect();
        let sys = System::new(modes, sector(), 1.0, 1.0).unwrap();
        let targets: Vec<C> =
            (0..m).map(|k| c(-1.0 - 0.05 * k as f64, 1.5 * k as f64 - 8.0 + r.random_range(-0.2..0.2))).collect();
        let d = design_feedback(&sys, &targets).unwrap();
        assert!(d.max_target_error <= 1e-8, "m={m}: {}", d.max_target_error);
        assert!(d.hurwitz);
    }
}

#[test]
fn exterior_minimum_respects_certificate() {
    let mut r = rng(12);
    for _ in 0..10 {
        let (sys, op) = certified(&mut r, 20);
        let m = discrete_margin(&op, 256, h_tail_for(&sys, op.tau())).unwrap();
        assert!(m.certifies_exterior());
        let zs: Vec<C> = (0..10_000).map(|_| annulus(&mut r, 1.0, 2.0)).collect();
        let ext = exterior_min(&op, Some(m.tail_bound), &zs).unwrap();
        assert!(ext >= m.eps_d - 1e-4, "{ext} < {}", m.eps_d);
    }
}

#[test]
fn parseval_on_random_certified_systems() {
    let mut r = rng(13);
    for _ in 0..15 {
        let (_, op) = certified(&mut r, 20);
        let x = random_state(&mut r, op.len());
        for rad in [1.1, 1.2, 1.5] {
            let p = parseval_check(&op, rad, &x, 8192, None).unwrap();
            assert!(p.residual <= 1e-8, "r={rad}: {}", p.residual);
        }
    }
}

#[test]
fn quadrature_converges_spectrally() {
    let mut r = rng(14);
    for _ in 0..10 {
        let (_, op) = certified(&mut r, 20);
        let x = random_state(&mut r, op.len());
        let a = circle_integral(&op, 1.05, &x, 4096, false).unwrap();
        let b = circle_integral(&op, 1.05, &x, 8192, false).unwrap();
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }
}
