mod support;

use peakguard_core::analysis::{analyze, DisturbanceSpec};
use peakguard_core::linalg::eigenvalues;
use peakguard_core::sim::{generate_random_system, RandomSystemSpec};
use peakguard_core::synthesis::design_kalman_uniform;
use peakguard_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(r: Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let (f, g) = random_parallel_pair(&mut rng(seed));
        check(check_triangle(&f, &g))?;
    }

    #[test]
    fn submultiplicative(seed in any::<u64>()) {
        let (f, h) = random_series_pair(&mut rng(seed));
        check(check_submultiplicative(&f, &h))?;
    }

    #[test]
    fn amplification_bound(seed in any::<u64>(), bound in 0.1f64..3.0) {
        let mut r = rng(seed);
        let (f, _) = random_parallel_pair(&mut r);
        check(check_amplification(&f, bound, &mut r))?;
    }

    #[test]
    fn hinf_sandwich(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nx, nu, ny) = (r.random_range(1..=4), r.random_range(1..=3), r.random_range(1..=3));
        let g = random_channel(&mut r, nx, nu, ny, false);
        check(check_sandwich(&g))?;
    }

    #[test]
    fn norm_scales_with_gain(seed in any::<u64>(), alpha in -4.0f64..4.0) {
        let (f, _) = random_parallel_pair(&mut rng(seed));
        check(check_scaling(&f, alpha))?;
    }

    #[test]
    fn expm_semigroup(seed in any::<u64>(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let m = gaussian(&mut rng(seed), 4, 4);
        let m = m.scale(5.0 / m.norm_fro().max(1e-12) * rng(seed ^ 1).random_range(0.01..1.0));
        check(check_expm_semigroup(&m, s, t))?;
    }

    #[test]
    fn expm_spectral_mapping(seed in any::<u64>(), t in 0.0f64..1.5) {
        let m = gaussian(&mut rng(seed), 4, 4);
        let m = m.scale(5.0 / m.norm_fro().max(1e-12));
        check(check_expm_spectrum(&m, t))?;
    }

    #[test]
    fn hurwitz_similarity_invariant(seed in any::<u64>(), shift in prop_oneof![-1.0f64..-0.05, 0.05f64..1.0]) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let m = gaussian(&mut r, n, n);
        let alpha = eigenvalues(&m).unwrap().spectral_abscissa;
        let a = &m - &Matrix::identity(n).scale(alpha - shift);
        let t = &Matrix::identity(n) + &gaussian(&mut r, n, n).scale(0.2);
        prop_assume!(t.inverse().map(|ti| ti.norm_inf() * t.norm_inf() < 20.0).unwrap_or(false));
        check(check_hurwitz_similarity(&a, &t))?;
    }

    #[test]
    fn lyapunov_residual(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let margin = r.random_range(0.05..1.0);
        let a = stable_matrix(&mut r, n, margin);
        let g = gaussian(&mut r, n, n);
        check(check_lyapunov(&a, &(&g * &g.transpose())))?;
    }

    #[test]
    fn care_residual_and_stabilising(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let ny = r.random_range(1..=3);
        let a = gaussian(&mut r, n, n);
        let c = gaussian(&mut r, ny, n);
        let g = gaussian(&mut r, n, n);
        let h = gaussian(&mut r, ny, ny);
        let q = &(&g * &g.transpose()) + &Matrix::identity(n).scale(0.1);
        let rr = &(&h * &h.transpose()) + &Matrix::identity(ny).scale(0.1);
        check(check_care(&a, &c, &q, &rr))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn corollary_inequality(seed in any::<u64>(), stream in 0u64..1000) {
        let plant = generate_random_system(&RandomSystemSpec::new(2, 2, 2, seed, stream)).unwrap();
        let k = random_stabilising_gain(&mut rng(seed ^ stream), &plant);
        check(check_corollary(&plant, &k))?;
    }
}

#[test]
fn analyze_is_bit_identical_across_calls() {
    for stream in 0..5 {
        let plant = generate_random_system(&RandomSystemSpec::new(3, 1, 2, 17, stream)).unwrap();
        let k = design_kalman_uniform(&plant, 0.5).unwrap();
        let d = DisturbanceSpec::infinity(0.5).unwrap();
        let a = analyze(&plant, &k, &d, None).unwrap();
        let b = analyze(&plant, &k, &d, None).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.epsilon_e_tilde.to_bits(), b.epsilon_e_tilde.to_bits());
    }
}

#[test]
fn fine_grid_oracle_agrees_on_first_order_lag() {
    let ch = peakguard_core::peaknorm::LtiChannel::strictly_proper(
        Matrix::from_diag(&[-2.0]),
        Matrix::from_diag(&[3.0]),
        Matrix::from_diag(&[1.0]),
    )
    .unwrap();
    // ∫ 3 e^{−2t} dt = 1.5
    assert!((fine_grid_norm(&ch, 30.0, 1e-3) - 1.5).abs() < 1e-6);
}
