//! Small statistical toolkit: error function, normal CDF, proportion and
//! median intervals, a rank-sum test and least-squares slopes.

use std::f64::consts::PI;

/// z quantile of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Error function.
///
/// Maclaurin series below |x| = 2.5, continued fraction for `erfc` above.
/// Absolute error is below 1e-14 over the real line.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

/// Complementary error function with full relative precision in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        let n = f64::from(n);
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated bottom-up; 80 levels is far past convergence for x >= 2.5.
    let mut t = x;
    for n in (1..=80).rev() {
        t = x + (n as f64 / 2.0) / t;
    }
    (-x * x).exp() / (PI.sqrt() * t)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let v = sorted(xs);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Median with a distribution-free ~95% interval from order statistics
/// (normal approximation to the binomial rank distribution).
pub fn median_with_ci(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let v = sorted(xs);
    let n = v.len() as f64;
    let half_width = Z95 * n.sqrt() / 2.0;
    let lo_rank = ((n / 2.0 - half_width).floor() as isize).max(1) as usize;
    let hi_rank = ((n / 2.0 + half_width).ceil() as usize).min(v.len());
    (median(&v), v[lo_rank - 1], v[hi_rank - 1])
}

/// Mean with a normal-approximation 95% interval.
pub fn mean_with_ci(xs: &[f64]) -> (f64, f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, m, m);
    }
    let half = Z95 * std_dev(xs) / (xs.len() as f64).sqrt();
    (m, m - half, m + half)
}

/// Average ranks (1-based), ties share the mean rank.
fn ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (out, tie_term)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSum {
    /// Mann–Whitney U of the first sample.
    pub u: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Wilcoxon rank-sum / Mann–Whitney U test, normal approximation with tie
/// and continuity corrections.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> RankSum {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (r, tie_term) = ranks(&all);
    let r1: f64 = r[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return RankSum {
            u,
            z: 0.0,
            p_value: 1.0,
        };
    }
    let diff = ((u - mu).abs() - 0.5).max(0.0);
    let z = diff / var.sqrt() * (u - mu).signum();
    let p_value = (2.0 * normal_cdf(-z.abs())).min(1.0);
    RankSum { u, z, p_value }
}

/// Ordinary least-squares fit `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, erf(x), erfc(x)) from a correctly rounded libm.
    const ERF_TABLE: &[(f64, f64, f64)] = &[
        (0.0, 0.0, 1.0),
        (0.1, 0.1124629160182849, 0.8875370839817152),
        (0.5, 0.5204998778130465, 0.4795001221869535),
        (1.0, 0.8427007929497149, 0.15729920705028513),
        (1.5, 0.9661051464753108, 0.033894853524689274),
        (2.0, 0.9953222650189527, 0.004677734981047265),
        (2.5, 0.999593047982555, 0.0004069520174449589),
        (2.6, 0.9997639655834707, 0.00023603441652934908),
        (3.0, 0.9999779095030014, 2.2090496998585438e-05),
        (4.0, 0.9999999845827421, 1.541725790028002e-08),
        (5.0, 0.9999999999984626, 1.5374597944280351e-12),
        (6.0, 1.0, 2.1519736712498916e-17),
    ];

    #[test]
    fn erf_matches_reference() {
        for &(x, e, c) in ERF_TABLE {
            assert!((erf(x) - e).abs() < 1e-14, "erf({x})");
            assert!((erf(-x) + e).abs() < 1e-14, "erf(-{x})");
            assert!(
                (erfc(x) - c).abs() <= 1e-12 * c.max(1e-3),
                "erfc({x}) = {}",
                erfc(x)
            );
        }
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(2.0) - 0.9772498680518208).abs() < 1e-14);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(-2.0) + normal_cdf(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_estimate() {
        for &(s, n) in &[(0u64, 10u64), (10, 10), (3, 100), (500, 1000)] {
            let (lo, hi) = wilson_interval(s, n, Z95);
            let p = s as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn rank_sum_reference() {
        // scipy.stats.mannwhitneyu(..., method="asymptotic", use_continuity=True)
        let r = rank_sum_test(&[1., 2., 3., 4., 5.], &[3., 6., 7., 8., 9., 10.]);
        assert_eq!(r.u, 2.5);
        assert!((r.p_value - 0.02810006355731762).abs() < 1e-12);
        let r = rank_sum_test(&[1., 2., 2., 4., 5.], &[2., 6., 7., 8., 8., 10.]);
        assert_eq!(r.u, 3.0);
        assert!((r.p_value - 0.03368044581929327).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_identical_samples() {
        let a = [0.3, 1.2, 2.2, 0.7];
        let r = rank_sum_test(&a, &a);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn median_ci_brackets_median() {
        let xs: Vec<f64> = (0..20).map(|i| (i * 7 % 20) as f64).collect();
        let (m, lo, hi) = median_with_ci(&xs);
        assert_eq!(m, 9.5);
        assert!(lo <= m && m <= hi);
        assert_eq!((lo, hi), (4.0, 14.0));
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 0.5).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
    }
}
