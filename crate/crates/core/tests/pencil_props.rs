mod common;

use common::{circle_point, poles, random_realization, sample_point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rattoep::linalg::{self, c64, CMat, C64};
use rattoep::pencil::{assemble_pencil, det_coeffs, ess_points_at, ess_spectrum_sweep, exceptional_set};
use rattoep::ratsym::{eval_realization, Realization};
use rattoep::Config;

fn random_lambda(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
}

/// `[[c, f(z)], [0, c]]`-type symbol with `E = {c}`.
fn triangular_with_exceptional(seed: u64) -> (Realization, C64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = c64(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let r0 = CMat::from_row_slice(2, 2, &[c, c64(rng.random_range(-1.0..1.0), 0.0), c64(0.0, 0.0), c]);
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let alpha = CMat::from_element(1, 1, c64(th.cos(), th.sin()));
    let beta = CMat::from_row_slice(1, 2, &[c64(0.0, 0.0), c64(1.0, 0.0)]);
    let gamma = CMat::from_row_slice(2, 1, &[c64(rng.random_range(0.5..2.0), 0.0), c64(0.0, 0.0)]);
    let a = CMat::from_element(1, 1, c64(rng.random_range(-0.5..0.5), 0.0));
    let b = CMat::from_row_slice(1, 2, &[c64(0.0, 0.0), c64(1.0, 0.0)]);
    let cc = CMat::from_row_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
    (Realization::new(r0, a, b, cc, alpha, beta, gamma).unwrap(), c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn descriptions_agree(seed in any::<u64>()) {
        let cfg = Config::default();
        let real = random_realization(seed);
        prop_assume!(real.validate(&cfg).is_ok());
        let pl = assemble_pencil(&real);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let avoid = poles(&real);
        for _ in 0..8 {
            let nu = circle_point(&mut rng, &avoid, 1e-2);
            let at = ess_points_at(&pl, &real, nu, &cfg).unwrap();
            prop_assert!(!at.singular);
            prop_assert!(!at.via_pencil);
            let scale = 1.0 + at.lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(linalg::matching_distance(&at.lambdas, &at.pencil_lambdas) < 1e-6 * scale);
            prop_assert!(at.residual < 1e-8);
        }
    }

    #[test]
    fn determinant_factorizes(seed in any::<u64>()) {
        let cfg = Config::default();
        let real = random_realization(seed);
        prop_assume!(real.validate(&cfg).is_ok());
        let pl = assemble_pencil(&real);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 11);
        let avoid = poles(&real);
        let (np, nm, m) = (real.n_plus(), real.n_minus(), real.m());
        for _ in 0..6 {
            let nu = circle_point(&mut rng, &avoid, 1e-2);
            let lam = random_lambda(&mut rng);
            let lhs = linalg::det(&pl.eval(lam, nu)).norm();
            let om = eval_realization(&real, nu).unwrap();
            let rhs = linalg::det(&(om - CMat::identity(m, m) * lam)).norm()
                * linalg::det(&(real.a() * nu - CMat::identity(np, np))).norm()
                * linalg::det(&(CMat::identity(nm, nm) * nu - real.alpha())).norm();
            prop_assert!((lhs - rhs).abs() <= 1e-7 * lhs.max(rhs).max(1e-300));
        }
    }

    #[test]
    fn schur_complement_identity(seed in any::<u64>()) {
        let cfg = Config::default();
        let real = random_realization(seed);
        prop_assume!(real.validate(&cfg).is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 13);
        let avoid = poles(&real);
        let (np, nm, m) = (real.n_plus(), real.n_minus(), real.m());
        for _ in 0..6 {
            let z = sample_point(&mut rng, &avoid);
            let lam = random_lambda(&mut rng);
            let a_hat = linalg::block_diag(&[
                &(real.a() * z - CMat::identity(np, np)),
                &(real.alpha() - CMat::identity(nm, nm) * z),
            ]);
            let Some(a_inv) = linalg::guarded_inverse(&a_hat, 1e8) else { continue };
            let b_hat = linalg::vstack(&[real.b(), real.beta()]);
            let c_hat = linalg::hstack(&[&(real.c() * z), real.gamma()]);
            let d_hat = real.r0() - CMat::identity(m, m) * lam;
            let got = d_hat - c_hat * a_inv * b_hat;
            let want = eval_realization(&real, z).unwrap() - CMat::identity(m, m) * lam;
            prop_assert!(linalg::max_abs(&(got - &want)) < 1e-9 * (1.0 + linalg::max_abs(&want)));
        }
    }

    #[test]
    fn inversion_formula(seed in any::<u64>()) {
        let cfg = Config::default();
        let real = random_realization(seed);
        prop_assume!(real.validate(&cfg).is_ok());
        let pl = assemble_pencil(&real);
        let e = pl.selector();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 17);
        let avoid = poles(&real);
        let m = real.m();
        let mut done = 0;
        while done < 20 {
            let z = sample_point(&mut rng, &avoid);
            let lam = random_lambda(&mut rng);
            let Some(l_inv) = linalg::guarded_inverse(&pl.eval(lam, z), 1e8) else { continue };
            let om = eval_realization(&real, z).unwrap() - CMat::identity(m, m) * lam;
            let Some(want) = linalg::guarded_inverse(&om, 1e8) else { continue };
            let got = &e * l_inv * e.adjoint();
            prop_assert!(linalg::fro_norm(&(got - &want)) < 1e-7 * linalg::fro_norm(&want).max(1.0));
            done += 1;
        }
    }

    #[test]
    fn determinant_interpolation(seed in any::<u64>()) {
        let cfg = Config::default();
        let real = random_realization(seed);
        prop_assume!(real.validate(&cfg).is_ok());
        let pl = assemble_pencil(&real);
        let bp = det_coeffs(&pl).unwrap();
        prop_assert_eq!(bp.coeffs.shape(), (real.m() + 1, real.n_plus() + real.n_minus() + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 19);
        for _ in 0..30 {
            let lam = random_lambda(&mut rng);
            let z = c64(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let l = pl.eval(lam, z);
            let want = linalg::det(&l);
            let scale: f64 = l.row_iter().map(|r| r.norm()).product();
            prop_assert!((bp.eval(lam, z) - want).norm() <= 1e-7 * scale.max(want.norm()));
        }
        let e = exceptional_set(&bp, cfg.e_tol).unwrap();
        prop_assert!(e.len() <= real.m());
    }

    #[test]
    fn exceptional_points_annihilate_det(seed in any::<u64>()) {
        let cfg = Config::default();
        let (real, c) = triangular_with_exceptional(seed);
        let pl = assemble_pencil(&real);
        let bp = det_coeffs(&pl).unwrap();
        let e = exceptional_set(&bp, cfg.e_tol).unwrap();
        prop_assert!(e.len() <= real.m());
        prop_assert_eq!(e.len(), 1);
        prop_assert!((e[0] - c).norm() < 1e-8 * (1.0 + c.norm()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 23);
        for _ in 0..10 {
            let nu = circle_point(&mut rng, &[], 0.0);
            prop_assert!(linalg::relative_det(&pl.eval(e[0], nu)) < 1e-8);
        }
    }
}

#[test]
fn sweep_residuals_are_small() {
    let cfg = Config::default();
    let mut checked = 0;
    for seed in 0..40u64 {
        let real = random_realization(seed);
        if real.validate(&cfg).is_err() {
            continue;
        }
        let cloud = ess_spectrum_sweep(&real, 64, &cfg).unwrap();
        assert!(!cloud.whole_plane || !cloud.degenerate_nus.is_empty());
        assert!(cloud.max_residual < 1e-8, "seed {seed}: residual {:e}", cloud.max_residual);
        checked += 1;
    }
    assert!(checked > 20);
}
