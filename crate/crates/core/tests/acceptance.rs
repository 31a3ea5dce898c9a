//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::ExitCode;

use common::{oracle, quad, random_panel, rel_close};
use grouptest::dgp::{Design, DgpConfig, GroupSizes};
use grouptest::exec::Execution;
use grouptest::homogeneity::{delta_parts, lm_components, sc_components, swamy_statistic};
use grouptest::numkern::{chisq_cdf, noncentral_chisq_cdf, std_normal_cdf};
use grouptest::sim::count_rejections;
use grouptest::theory::{asymptotic_power, estimate_moments, noncentrality_for, LocalAlternative, Regime};
use grouptest::{estimators::pooled_residuals, PanelDataset, SlopeTestSuite, TestName, TestOptions, TransformKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const ALPHA: f64 = 0.05;
const REPS: usize = 1000;
const LIMIT_TESTS: [TestName; 3] = [TestName::Delta, TestName::ScJ, TestName::BrsLm];

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, details: &[String]) {
        println!("{} criterion {id}", if ok { "PASS" } else { "FAIL" });
        for d in details {
            println!("    {d}");
        }
        if !ok {
            self.failures += 1;
        }
    }
}

fn suite(tests: &[TestName]) -> SlopeTestSuite {
    SlopeTestSuite::new(tests.iter().copied(), TestOptions::with_alpha(ALPHA)).unwrap()
}

fn suite_none(tests: &[TestName]) -> SlopeTestSuite {
    tests.iter().fold(suite(tests), |s, &t| s.with_transform(t, TransformKind::None))
}

/// `(test, rate, mc_std_err, n_errors)` per test.
fn rates(dgp: &DgpConfig, suite: &SlopeTestSuite, reps: usize) -> Vec<(TestName, f64, f64, usize)> {
    count_rejections(dgp, suite, reps, SEED, Execution::Parallel, None)
        .unwrap()
        .into_iter()
        .map(|(t, _, rej, err)| {
            let eff = (reps - err) as f64;
            let r = rej as f64 / eff;
            (t, r, (r * (1.0 - r) / eff).sqrt(), err)
        })
        .collect()
}

fn fmt_rates(label: &str, r: &[(TestName, f64, f64, usize)]) -> String {
    let cells: Vec<String> = r.iter().map(|(t, v, se, e)| format!("{t}={v:.3} (se {se:.3}, errors {e})")).collect();
    format!("{label}: {}", cells.join(", "))
}

fn null_design(n: usize, t: usize) -> DgpConfig {
    DgpConfig { p: 1, group_sizes: GroupSizes::Fixed(vec![]), ..DgpConfig::two_group(n, t, 1, 0.0) }
}

fn criterion_1(rep: &mut Report) {
    let a = rates(&null_design(100, 100), &suite(&LIMIT_TESTS), REPS);
    let ok_a = a.iter().all(|&(_, r, _, _)| (0.03..=0.07).contains(&r));
    rep.check("1a size at (N,T)=(100,100) in [0.03,0.07]", ok_a, &[fmt_rates("rates", &a)]);

    let b = rates(&null_design(100, 10), &suite(&LIMIT_TESTS), REPS);
    let ok_b = b.iter().all(|&(t, r, _, _)| match t {
        TestName::BrsLm => (0.03..=0.07).contains(&r),
        _ => (0.02..=0.10).contains(&r),
    });
    rep.check(
        "1b size at (N,T)=(100,10): LM in [0.03,0.07], delta and J in [0.02,0.10]",
        ok_b,
        &[fmt_rates("rates", &b)],
    );
}

fn criterion_2(rep: &mut Report) {
    let s = suite(&LIMIT_TESTS);
    let curve: Vec<_> = [10, 30, 50].iter().map(|&m| rates(&DgpConfig::two_group(100, 100, m, 0.3), &s, REPS)).collect();
    let mut details: Vec<String> =
        curve.iter().zip([10, 30, 50]).map(|(r, m)| fmt_rates(&format!("lambda=0.3 M2={m}"), r)).collect();
    let mut ok = true;
    for j in 0..LIMIT_TESTS.len() {
        for w in curve.windows(2) {
            let (lo, hi) = (w[0][j], w[1][j]);
            let gap_ok = hi.1 - lo.1 > 2.0 * lo.2.max(hi.2);
            if !(hi.1 > lo.1 && gap_ok) {
                ok = false;
                details.push(format!("{}: {:.3} -> {:.3} is not a strict increase beyond 2 se", lo.0, lo.1, hi.1));
            }
        }
    }
    let strong = rates(&DgpConfig::two_group(100, 100, 50, 0.5), &s, REPS);
    if strong.iter().any(|&(_, r, _, _)| r < 0.95) {
        ok = false;
    }
    details.push(fmt_rates("lambda=0.5 M2=50 (need >= 0.95)", &strong));
    rep.check("2 two-group power monotone in M2 and high at lambda=0.5", ok, &details);
}

fn criterion_3(rep: &mut Report) {
    let s = suite(&LIMIT_TESTS);
    let small = rates(&DgpConfig::two_group(100, 10, 5, 0.1), &s, REPS);
    let large = rates(&DgpConfig::two_group(100, 100, 50, 0.3), &s, REPS);
    let ok = small.iter().all(|&(_, r, _, _)| r <= 0.12) && large.iter().all(|&(_, r, _, _)| r >= 0.5);
    rep.check(
        "3 trivial power below sqrt(N), nontrivial above",
        ok,
        &[fmt_rates("T=10 lambda=0.1 M2=5 (need <= 0.12)", &small), fmt_rates("T=100 lambda=0.3 M2=50 (need >= 0.5)", &large)],
    );
}

fn criterion_4(rep: &mut Report) {
    let s = suite(&LIMIT_TESTS);
    let p3 = rates(&DgpConfig::multi_group(100, 100, 3, 40, 0.1, 0.2), &s, REPS);
    let p10 = rates(&DgpConfig::multi_group(100, 100, 10, 40, 0.1, 0.2), &s, REPS);
    let ok = p3.iter().zip(&p10).all(|(a, b)| (a.1 - b.1).abs() <= 0.15);
    rep.check(
        "4 power depends on total M not on P (|diff| <= 0.15)",
        ok,
        &[fmt_rates("P=3", &p3), fmt_rates("P=10", &p10)],
    );
}

fn random_instance(rng: &mut ChaCha8Rng) -> PanelDataset {
    let n = rng.random_range(2..=5);
    let k = rng.random_range(1..=3);
    let t = rng.random_range(k + 3..=10);
    random_panel(n, t, k, rng.random())
}

fn criterion_5(rep: &mut Report) {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let opts = TestOptions::default();
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for case in 0..50 {
        let d = random_instance(&mut rng);
        let mut pairs: Vec<(&str, f64, f64)> = Vec::new();
        pairs.push(("swamy", swamy_statistic(&d, &opts).unwrap().statistic, oracle::swamy(&d)));
        let (delta, spy) = delta_parts(&d, &opts).unwrap();
        let (o_spy, o_delta) = oracle::delta(&d, d.n_periods() as f64);
        pairs.push(("s_py", spy, o_spy));
        pairs.push(("delta", delta, o_delta));
        let sc = sc_components(&d).unwrap();
        let (lm_sc, b_hat, v_hat, j) = oracle::sc(&d);
        pairs.extend([("lm_sc", sc.lm_sc, lm_sc), ("b_hat", sc.b_hat, b_hat), ("v_hat_sc", sc.v_hat, v_hat), ("j", sc.j, j)]);
        let (_, resid) = pooled_residuals(&d).unwrap();
        let lm = lm_components(&d, &resid).unwrap();
        let (s, v, o_lm) = oracle::brs(&d);
        for (a, b) in lm.score.iter().zip(&s) {
            pairs.push(("s_hat", *a, *b));
        }
        for (r, row) in v.iter().enumerate() {
            for (c, b) in row.iter().enumerate() {
                pairs.push(("v_hat_kl", lm.v_hat.get(r, c), *b));
            }
        }
        pairs.push(("lm", lm.lm, o_lm));
        for (name, a, b) in pairs {
            let e = rel(a, b);
            worst = worst.max(e);
            if e > TOL {
                bad.push(format!("case {case} (N={}, T={}, K={}): {name} {a} vs {b}", d.n_units(), d.n_periods(), d.n_regressors()));
            }
        }
    }
    let mut details = vec![format!("worst relative error {worst:.2e} over 50 instances")];
    details.extend(bad.iter().take(10).cloned());
    rep.check("5 streaming statistics match nested-loop oracles to 1e-10", bad.is_empty(), &details);
}

fn all_stats(d: &PanelDataset) -> Vec<f64> {
    let opts = TestOptions::default();
    TestName::ALL.iter().map(|t| t.run(d, &opts).unwrap().statistic).collect()
}

fn criterion_6(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut bad = Vec::new();
    for case in 0..20 {
        let d = random_instance(&mut rng);
        let base = all_stats(&d);
        for c in [0.5, 3.0, 100.0] {
            let scaled = d.with_y(d.y().iter().map(|v| c * v).collect()).unwrap();
            for (name, (a, b)) in ["swamy", "delta", "sc_j", "brs_lm"].iter().zip(base.iter().zip(all_stats(&scaled))) {
                if !rel_close(*a, b, 1e-9) {
                    bad.push(format!("case {case}: {name} scale c={c}: {a} vs {b}"));
                }
            }
        }
        let mut order: Vec<usize> = (0..d.n_units()).collect();
        order.reverse();
        let perm = all_stats(&d.permute_units(&order).unwrap());
        for (a, b) in base.iter().zip(perm) {
            if !rel_close(*a, b, 1e-9) {
                bad.push(format!("case {case}: permutation {a} vs {b}"));
            }
        }
    }
    // Homogeneous panels sharing one noise draw across two slope vectors.
    for case in 0..20 {
        let (n, t, k) = (rng.random_range(2..=5), rng.random_range(6..=10), rng.random_range(1..=3));
        let x: Vec<f64> = (0..n * t * k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let e: Vec<f64> = (0..n * t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let make = |beta: &[f64]| {
            let y = (0..n * t).map(|r| (0..k).map(|c| beta[c] * x[r * k + c]).sum::<f64>() + e[r]).collect();
            PanelDataset::from_arrays(n, t, k, y, x.clone()).unwrap()
        };
        let b0 = vec![1.0; k];
        let b1: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        for (a, b) in all_stats(&make(&b0)).iter().zip(all_stats(&make(&b1))) {
            if !rel_close(*a, b, 1e-9) {
                bad.push(format!("case {case}: beta shift {a} vs {b}"));
            }
        }
    }
    let mut details = vec![format!("{} violations", bad.len())];
    details.extend(bad.iter().take(10).cloned());
    rep.check("6 scale, permutation and beta-shift invariance", bad.is_empty(), &details);
}

/// Clean two-group design of criteria 7 and 8 with limit constant `c`.
fn clean_design(c: f64) -> (DgpConfig, f64) {
    let (n, t, m) = (400usize, 100usize, 100usize);
    let gamma = ((m * t) as f64).sqrt() / (n as f64).powf(0.25);
    let lambda = c / gamma;
    (DgpConfig::two_group(n, t, m, lambda).with_design(Design::Clean), gamma)
}

fn criterion_7(rep: &mut Report) {
    let (dgp, gamma) = clean_design(1.0);
    let moments = estimate_moments(&dgp, TransformKind::None, 200, SEED, Execution::Parallel, None).unwrap();
    let alt = LocalAlternative::from_design(dgp.n, dgp.t, &[100], gamma, vec![vec![1.0]], Regime::LargeT).unwrap();
    let tests = [TestName::Delta, TestName::BrsLm];
    let emp = rates(&dgp, &suite_none(&tests), 2000);
    let mut ok = true;
    let mut details = vec![format!("c^2 = {:.4}, m0 = {:.3}", alt.c_squared(), alt.m0())];
    for (t, r, se, _) in emp {
        let nc = noncentrality_for(t, &moments, &alt, Regime::LargeT).unwrap();
        let theo = asymptotic_power(t, nc, 1, ALPHA).unwrap();
        let good = (r - theo).abs() <= 0.10;
        ok &= good;
        details.push(format!("{t}: noncentrality {nc:.4}, asymptotic power {theo:.4}, empirical {r:.4} (se {se:.4})"));
    }
    rep.check("7 empirical power within 0.10 of asymptotic power", ok, &details);
}

fn criterion_8(rep: &mut Report) {
    let s = suite_none(&LIMIT_TESTS);
    let base = rates(&clean_design(1.0).0, &s, REPS);
    let weak = rates(&clean_design(1.0 / 3.0).0, &s, REPS);
    let strong = rates(&clean_design(3.0).0, &s, REPS);
    let mut ok = true;
    for ((b, w), st) in base.iter().zip(&weak).zip(&strong) {
        ok &= b.1 - w.1 >= 0.5 * (b.1 - ALPHA);
        ok &= st.1 > 0.9;
    }
    rep.check(
        "8 tripling gamma halves the excess power, dividing by 3 gives power > 0.9",
        ok,
        &[fmt_rates("c=1", &base), fmt_rates("c=1/3", &weak), fmt_rates("c=3", &strong)],
    );
}

fn criterion_9(rep: &mut Report) {
    const TOL: f64 = 1e-8;
    let mut worst = [0.0f64; 3];
    for i in 0..100 {
        let z = -8.0 + 16.0 * i as f64 / 99.0;
        worst[0] = worst[0].max((std_normal_cdf(z) - quad::normal_cdf(z)).abs());

        let df = 1 + (i % 10) as u32;
        let x = 0.05 + 40.0 * (i as f64 / 99.0);
        worst[1] = worst[1].max((chisq_cdf(x, df) - quad::chisq_cdf(x, df)).abs());

        let ncp = 0.25 * (i % 13) as f64;
        let x = 0.1 + 30.0 * (i as f64 / 99.0);
        let df = 1 + (i % 5) as u32;
        worst[2] = worst[2].max((noncentral_chisq_cdf(x, df, ncp) - quad::noncentral_chisq_cdf(x, df, ncp)).abs());
    }
    rep.check(
        "9 distribution functions match quadrature to 1e-8",
        worst.iter().all(|&w| w <= TOL),
        &[format!("max abs error: normal {:.2e}, chisq {:.2e}, noncentral chisq {:.2e}", worst[0], worst[1], worst[2])],
    );
}

fn main() -> ExitCode {
    let mut rep = Report { failures: 0 };
    criterion_9(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep);
    if rep.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", rep.failures);
        ExitCode::FAILURE
    }
}
