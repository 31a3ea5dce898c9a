mod common;

use common::quad;
use grouptest::dgp::{Design, DgpConfig};
use grouptest::exec::Execution;
use grouptest::numkern::{chisq_upper_quantile, SymMatrix};
use grouptest::theory::{
    asymptotic_power, boundary_gamma, estimate_moments, noncentrality_multigroup, LocalAlternative, MomentBlock,
    MomentSpec, Regime,
};
use grouptest::{TestName, TransformKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pd(k: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let b: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::from_lower_fn(k, |i, j| (0..k).map(|l| b[i * k + l] * b[j * k + l]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
}

fn random_block(k: usize, rng: &mut ChaCha8Rng) -> MomentBlock {
    MomentBlock {
        q: random_pd(k, rng),
        s: random_pd(k, rng),
        w: random_pd(k, rng),
        omega: (0..k).map(|_| random_pd(k, rng)).collect(),
    }
}

fn random_spec(k: usize, groups: usize, rng: &mut ChaCha8Rng) -> MomentSpec {
    let full = random_block(k, rng);
    let g = random_block(k, rng);
    MomentSpec::new(full, vec![g; groups], random_pd(k, rng), rng.random_range(0.5..3.0)).unwrap()
}

#[test]
fn shared_moments_collapse_to_two_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let k = rng.random_range(1..=3);
        let sizes: Vec<f64> = (0..4).map(|_| rng.random_range(1.0..10.0)).collect();
        let total: f64 = sizes.iter().sum();
        let (n, c2_per_unit) = (100.0, rng.random_range(0.01..0.1));
        let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let multi_ms = random_spec(k, 4, &mut rng);
        let two_ms = MomentSpec::new(multi_ms.full.clone(), vec![multi_ms.groups[0].clone()], multi_ms.psi.clone(), multi_ms.v0).unwrap();
        let multi = LocalAlternative {
            lambdas: vec![lambda.clone(); 4],
            m: sizes.iter().map(|s| s / n).collect(),
            c: sizes.iter().map(|s| (s * c2_per_unit).sqrt()).collect(),
        };
        let two = LocalAlternative::two_group(lambda, total / n, (total * c2_per_unit).sqrt());
        let a = noncentrality_multigroup(&multi_ms, &multi).unwrap();
        let b = noncentrality_multigroup(&two_ms, &two).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * (1.0 + y.abs());
        assert!(close(a.delta, b.delta) && close(a.j, b.j) && close(a.lm_ncp, b.lm_ncp), "{a:?} vs {b:?}");
    }
}

#[test]
fn zero_c_group_adds_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ms2 = random_spec(2, 2, &mut rng);
    let ms1 = MomentSpec::new(ms2.full.clone(), vec![ms2.groups[0].clone()], ms2.psi.clone(), ms2.v0).unwrap();
    let l = vec![0.4, -0.7];
    let with_zero = LocalAlternative { lambdas: vec![l.clone(), vec![3.0, 1.0]], m: vec![0.2, 0.0], c: vec![0.9, 0.0] };
    let alone = LocalAlternative { lambdas: vec![l], m: vec![0.2], c: vec![0.9] };
    let a = noncentrality_multigroup(&ms2, &with_zero).unwrap();
    let b = noncentrality_multigroup(&ms1, &alone).unwrap();
    assert!((a.delta - b.delta).abs() < 1e-12 && (a.j - b.j).abs() < 1e-12 && (a.lm_ncp - b.lm_ncp).abs() < 1e-12);
}

#[test]
fn noncentrality_is_quadratic_in_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let ms = random_spec(2, 1, &mut rng);
        let l: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = rng.random_range(0.2..4.0);
        let base = noncentrality_multigroup(&ms, &LocalAlternative::two_group(l.clone(), 0.3, 0.8)).unwrap();
        let scaled =
            noncentrality_multigroup(&ms, &LocalAlternative::two_group(l.iter().map(|v| a * v).collect(), 0.3, 0.8)).unwrap();
        assert!((scaled.delta - a * a * base.delta).abs() < 1e-10 * (1.0 + scaled.delta.abs()));
        assert!((scaled.j - a * a * base.j).abs() < 1e-10 * (1.0 + scaled.j.abs()));
        for (s, b) in scaled.lm.iter().zip(&base.lm) {
            assert!((s - a * a * b).abs() < 1e-10 * (1.0 + s.abs()));
        }
        // The χ² noncentrality is a quadratic form in δ_LM, so it scales by a⁴.
        assert!((scaled.lm_ncp - a.powi(4) * base.lm_ncp).abs() < 1e-9 * (1.0 + scaled.lm_ncp));
    }
}

#[test]
fn power_increases_with_noncentrality() {
    for test in [TestName::Delta, TestName::ScJ, TestName::BrsLm] {
        for k in [1, 3] {
            let grid: Vec<f64> = (0..=10).map(|i| asymptotic_power(test, 0.5 * i as f64, k, 0.05).unwrap()).collect();
            assert!(grid.windows(2).all(|w| w[1] > w[0]), "{test}: {grid:?}");
        }
    }
}

#[test]
fn lm_power_matches_quadrature() {
    let crit = chisq_upper_quantile(0.05, 1);
    let want = 1.0 - quad::noncentral_chisq_cdf(crit, 1, 1.0);
    let got = asymptotic_power(TestName::BrsLm, 1.0, 1, 0.05).unwrap();
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    let crit = chisq_upper_quantile(0.05, 3);
    let want = 1.0 - quad::noncentral_chisq_cdf(crit, 3, 2.5);
    assert!((asymptotic_power(TestName::BrsLm, 2.5, 3, 0.05).unwrap() - want).abs() < 1e-6);
}

#[test]
fn boundary_scales_as_sqrt_t_n_quarter() {
    for n in [10, 100, 1000, 40_000] {
        for t in [1, 5, 50] {
            let g = boundary_gamma(n, t, n, Regime::LargeT);
            assert!((g / ((t as f64).sqrt() * (n as f64).powf(0.25)) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn moments_of_iid_standard_normal_regressors() {
    let (n, t) = (60, 40);
    let cfg = DgpConfig::two_group(n, t, 15, 0.0).with_design(Design::Clean);
    let ms = estimate_moments(&cfg, TransformKind::None, 150, 4, Execution::Parallel, None).unwrap();
    let se = ms.std_err.as_ref().unwrap();
    let tf = t as f64;
    let checks = [
        ("Q", ms.full.q.get(0, 0), se.full.q.get(0, 0), 1.0),
        ("S", ms.full.s.get(0, 0), se.full.s.get(0, 0), 1.0),
        // x²/Σx² is Beta(1/2, (T−1)/2) independent of Σx², so
        // E[x⁴/Σx²] = 3/(T+2) and W = 1 − 3/(T+2).
        ("W", ms.full.w.get(0, 0), se.full.w.get(0, 0), 1.0 - 3.0 / (tf + 2.0)),
        ("Omega", ms.full.omega[0].get(0, 0), se.full.omega[0].get(0, 0), 0.5 * (1.0 - 1.0 / tf)),
        ("Psi", ms.psi.get(0, 0), se.psi.get(0, 0), 0.5 * (1.0 - 1.0 / tf)),
        ("Q group", ms.groups[0].q.get(0, 0), se.groups[0].q.get(0, 0), 1.0),
    ];
    for (name, v, s, want) in checks {
        assert!(s > 0.0 && (v - want).abs() <= 2.0 * s + 1e-12, "{name}: {v} vs {want} (se {s})");
    }
    assert!(ms.v0 > 0.0);
    assert_eq!(ms.reps, Some(150));
}

#[test]
fn estimated_delta_noncentrality_is_nonnegative() {
    let cfg = DgpConfig::two_group(80, 30, 20, 0.0);
    let ms = estimate_moments(&cfg, TransformKind::Within, 40, 2, Execution::Parallel, None).unwrap();
    let gamma = boundary_gamma(80, 30, 20, Regime::LargeT);
    for lambda in [0.5, 1.0, 3.0] {
        let alt = LocalAlternative::from_design(80, 30, &[20], gamma, vec![vec![lambda]], Regime::LargeT).unwrap();
        assert!(noncentrality_multigroup(&ms, &alt).unwrap().delta >= 0.0);
    }
}
