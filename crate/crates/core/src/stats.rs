//! Small statistical helpers: two-sample Kolmogorov-Smirnov and chi-square.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sample KS statistic `sup |F_a - F_b|`. Panics on empty samples.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> f64 {
    assert!(!sample_a.is_empty() && !sample_b.is_empty());
    let mut a: Vec<f64> = sample_a.to_vec();
    let mut b: Vec<f64> = sample_b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut d: f64 = 0.0;
    while ia < a.len() && ib < b.len() {
        let x = a[ia].min(b[ib]);
        while ia < a.len() && a[ia] <= x {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= x {
            ib += 1;
        }
        fa = ia as f64 / na;
        fb = ib as f64 / nb;
        d = d.max((fa - fb).abs());
    }
    let _ = (fa, fb);
    d
}

/// Asymptotic p-value of the two-sample KS statistic via the Kolmogorov
/// distribution `Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na as f64) * (nb as f64) / ((na + nb) as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    kolmogorov_q(lambda)
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += term;
        sign = -sign;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper-tail p-value of a chi-square statistic with `df` degrees of freedom.
pub fn chi_square_p(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// Chi-square statistic of observed counts against expected counts.
/// Expected entries must be positive.
pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            debug_assert!(e > 0.0);
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Standard error of an empirical proportion `p` over `n` samples.
pub fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Two-sided z threshold at family level `alpha` Bonferroni-corrected over
/// `tests` comparisons.
pub fn bonferroni_z(alpha: f64, tests: usize) -> f64 {
    let per_test = (alpha / tests.max(1) as f64).clamp(1e-300, 1.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - per_test / 2.0)
}

/// Empirical median (averages the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
