//! Normal and chi-squared distribution functions.
//!
//! The normal CDF goes through `erfc`, the central chi-squared through the
//! regularized incomplete gamma function (series below `a + 1`, Lentz
//! continued fraction above), and the noncentral chi-squared through the
//! Poisson mixture of central CDFs.

use super::tol;

const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// 1 − Φ(z), accurate in the far upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ^{-1}(p): Wichura's AS 241 (PPND16) followed by one Newton step.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = ppnd16(p);
    // Newton polish against the erfc-based CDF.
    let err = if p < 0.5 { std_normal_cdf(x) - p } else { (1.0 - p) - std_normal_sf(x) };
    let d = std_normal_pdf(x);
    if d > 0.0 && err.is_finite() {
        x - err / d
    } else {
        x
    }
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_4e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))`.
pub fn reg_gamma(a: f64, x: f64) -> (f64, f64) {
    assert!(a > 0.0, "shape must be positive");
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    let log_prefix = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (sum * log_prefix.exp()).min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = (log_prefix.exp() * h).clamp(0.0, 1.0);
        (1.0 - q, q)
    }
}

/// Central chi-squared CDF with real degrees of freedom.
pub fn chisq_cdf_real(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    reg_gamma(0.5 * df, 0.5 * x).0
}

pub fn chisq_sf_real(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_gamma(0.5 * df, 0.5 * x).1
}

/// Central chi-squared CDF. `df == 0` is the point mass at zero.
pub fn chisq_cdf(x: f64, df: u32) -> f64 {
    if df == 0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    chisq_cdf_real(x, df as f64)
}

/// Upper tail `P(X ≥ x)` of the central chi-squared.
pub fn chisq_sf(x: f64, df: u32) -> f64 {
    if df == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    chisq_sf_real(x, df as f64)
}

/// Upper-tail quantile: the `x` with `P(X ≥ x) = upper`.
pub fn chisq_upper_quantile(upper: f64, df: u32) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    assert!(upper > 0.0 && upper < 1.0, "tail probability must be in (0,1)");
    let mut hi = (df as f64).max(1.0);
    while chisq_sf(hi, df) > upper {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chisq_sf(mid, df) > upper {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Runs `f(df + 2j)` through the Poisson(ncp/2) mixture, stopping once the
/// weight not yet visited drops below `NONCENTRAL_TAIL_TOL`.
fn poisson_mixture(df: f64, ncp: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mu = 0.5 * ncp;
    let j0 = mu.floor();
    let w0 = (-mu + j0 * mu.ln() - ln_gamma(j0 + 1.0)).exp();
    let mut total = 0.0;
    let mut seen = 0.0;
    // Downward from the mode.
    let mut w = w0;
    let mut j = j0;
    loop {
        total += w * f(df + 2.0 * j);
        seen += w;
        if j == 0.0 || w < 1e-20 * w0.max(1e-300) {
            break;
        }
        w *= j / mu;
        j -= 1.0;
    }
    // Upward from the mode.
    let mut w = w0;
    let mut j = j0;
    let cap = j0 + 100.0 + 50.0 * mu.sqrt() + 10_000.0;
    while 1.0 - seen >= tol::NONCENTRAL_TAIL_TOL && j < cap {
        w *= mu / (j + 1.0);
        j += 1.0;
        total += w * f(df + 2.0 * j);
        seen += w;
        if w == 0.0 {
            break;
        }
    }
    total
}

/// Noncentral chi-squared CDF with noncentrality `ncp`.
pub fn noncentral_chisq_cdf(x: f64, df: u32, ncp: f64) -> f64 {
    assert!(ncp >= 0.0, "noncentrality must be non-negative");
    if ncp == 0.0 {
        return chisq_cdf(x, df);
    }
    if x <= 0.0 {
        return 0.0;
    }
    // Above the mean the truncated mixture is summed for the smaller tail.
    if x > df as f64 + ncp {
        return (1.0 - noncentral_chisq_sf(x, df, ncp)).clamp(0.0, 1.0);
    }
    poisson_mixture(df as f64, ncp, |d| chisq_cdf_real(x, d)).clamp(0.0, 1.0)
}

/// Noncentral chi-squared upper tail.
pub fn noncentral_chisq_sf(x: f64, df: u32, ncp: f64) -> f64 {
    assert!(ncp >= 0.0, "noncentrality must be non-negative");
    if ncp == 0.0 {
        return chisq_sf(x, df);
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x <= df as f64 + ncp {
        return (1.0 - noncentral_chisq_cdf(x, df, ncp)).clamp(0.0, 1.0);
    }
    poisson_mixture(df as f64, ncp, |d| chisq_sf_real(x, d)).clamp(0.0, 1.0)
}
