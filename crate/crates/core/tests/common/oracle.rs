//! Naive reference implementations: explicit inverses by Gauss–Jordan
//! elimination and every double sum by nested loops.

use grouptest::PanelDataset;

pub fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..2 * n {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn quad(a: &[Vec<f64>], v: &[f64]) -> f64 {
    mat_vec(a, v).iter().zip(v).map(|(x, y)| x * y).sum()
}

fn x_at(d: &PanelDataset, i: usize, t: usize, k: usize) -> f64 {
    d.x_unit(i)[t * d.n_regressors() + k]
}

fn gram(d: &PanelDataset, i: usize) -> Vec<Vec<f64>> {
    let kk = d.n_regressors();
    (0..kk)
        .map(|a| (0..kk).map(|b| (0..d.n_periods()).map(|t| x_at(d, i, t, a) * x_at(d, i, t, b)).sum()).collect())
        .collect()
}

fn xy(d: &PanelDataset, i: usize, y: &[f64]) -> Vec<f64> {
    (0..d.n_regressors()).map(|a| (0..d.n_periods()).map(|t| x_at(d, i, t, a) * y[t]).sum()).collect()
}

pub fn unit_beta(d: &PanelDataset, i: usize) -> Vec<f64> {
    mat_vec(&inverse(&gram(d, i)), &xy(d, i, d.y_unit(i)))
}

fn resid(d: &PanelDataset, i: usize, beta: &[f64]) -> Vec<f64> {
    (0..d.n_periods())
        .map(|t| d.y_unit(i)[t] - (0..d.n_regressors()).map(|a| x_at(d, i, t, a) * beta[a]).sum::<f64>())
        .collect()
}

pub fn sigma2_hat(d: &PanelDataset, i: usize) -> f64 {
    let e = resid(d, i, &unit_beta(d, i));
    e.iter().map(|v| v * v).sum::<f64>() / (d.n_periods() - d.n_regressors() - 1) as f64
}

pub fn wls(d: &PanelDataset, w: &[f64]) -> Vec<f64> {
    let kk = d.n_regressors();
    let mut g = vec![vec![0.0; kk]; kk];
    let mut v = vec![0.0; kk];
    for i in 0..d.n_units() {
        let gi = gram(d, i);
        let xi = xy(d, i, d.y_unit(i));
        for a in 0..kk {
            v[a] += xi[a] / w[i];
            for b in 0..kk {
                g[a][b] += gi[a][b] / w[i];
            }
        }
    }
    mat_vec(&inverse(&g), &v)
}

pub fn pooled_beta(d: &PanelDataset) -> Vec<f64> {
    wls(d, &vec![1.0; d.n_units()])
}

pub fn pooled_resid(d: &PanelDataset) -> Vec<Vec<f64>> {
    let b = pooled_beta(d);
    (0..d.n_units()).map(|i| resid(d, i, &b)).collect()
}

/// `S(σ̄²)` with the inner WLS weighted by `wls_w`.
pub fn dispersion(d: &PanelDataset, sbar: &[f64], wls_w: &[f64]) -> f64 {
    let bw = wls(d, wls_w);
    (0..d.n_units())
        .map(|i| {
            let diff: Vec<f64> = unit_beta(d, i).iter().zip(&bw).map(|(a, b)| a - b).collect();
            quad(&gram(d, i), &diff) / sbar[i]
        })
        .sum()
}

pub fn swamy(d: &PanelDataset) -> f64 {
    let s: Vec<f64> = (0..d.n_units()).map(|i| sigma2_hat(d, i)).collect();
    dispersion(d, &s, &s)
}

/// `(S_PY, Δ)` with pooled variances over `divisor`.
pub fn delta(d: &PanelDataset, divisor: f64) -> (f64, f64) {
    let s: Vec<f64> = pooled_resid(d).iter().map(|e| e.iter().map(|v| v * v).sum::<f64>() / divisor).collect();
    let spy = dispersion(d, &s, &s);
    let nk = (d.n_units() * d.n_regressors()) as f64;
    (spy, (spy - nk) / (2.0 * nk).sqrt())
}

/// `(LM_SC, B̂, V̂, 𝒥)`. The hat diagonal comes from the full T×T projection
/// and `b̂ₜ'b̂ₛ` from `xₜ'Ŝ⁻¹xₛ`.
pub fn sc(d: &PanelDataset) -> (f64, f64, f64, f64) {
    let (n, t, kk) = (d.n_units(), d.n_periods(), d.n_regressors());
    let res = pooled_resid(d);
    let (mut lm, mut bias, mut var) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let ginv = inverse(&gram(d, i));
        let e = &res[i];
        let xt = |s: usize| (0..kk).map(|a| x_at(d, i, s, a)).collect::<Vec<_>>();
        let proj = |a: usize, b: usize| -> f64 {
            let xa = xt(a);
            mat_vec(&ginv, &xt(b)).iter().zip(&xa).map(|(u, v)| u * v).sum()
        };
        for a in 0..t {
            for b in 0..t {
                lm += e[a] * proj(a, b) * e[b];
            }
            bias += e[a] * e[a] * proj(a, a);
        }
        for a in 1..t {
            let mut inner = 0.0;
            for b in 0..a {
                // b̂ₐ'b̂_b = T xₐ'G⁻¹x_b
                inner += t as f64 * proj(a, b) * e[b];
            }
            var += (e[a] * inner).powi(2);
        }
    }
    let nf = n as f64;
    let b_hat = bias / nf.sqrt();
    let v_hat = 4.0 * var / ((t * t) as f64 * nf);
    (lm, b_hat, v_hat, (lm / nf.sqrt() - b_hat) / v_hat.sqrt())
}

/// `(ŝ, V̂, LM)` by explicit quadruple loops.
pub fn brs(d: &PanelDataset) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let (n, t, kk) = (d.n_units(), d.n_periods(), d.n_regressors());
    let res = pooled_resid(d);
    let mut s = vec![0.0; kk];
    let mut v = vec![vec![0.0; kk]; kk];
    for i in 0..n {
        let e = &res[i];
        for k in 0..kk {
            for a in 1..t {
                for b in 0..a {
                    s[k] += e[a] * e[b] * x_at(d, i, a, k) * x_at(d, i, b, k);
                }
            }
        }
        for k in 0..kk {
            for l in 0..kk {
                for a in 0..t {
                    let mut pk = 0.0;
                    let mut pl = 0.0;
                    for b in 0..a {
                        pk += e[b] * x_at(d, i, b, k);
                    }
                    for p in 0..a {
                        pl += e[p] * x_at(d, i, p, l);
                    }
                    v[k][l] += e[a] * e[a] * x_at(d, i, a, k) * x_at(d, i, a, l) * pk * pl;
                }
            }
        }
    }
    let lm = quad(&inverse(&v), &s);
    (s, v, lm)
}
