//! Descriptive statistics, two-sample tests and least-squares fits.
//!
//! Distribution functions are evaluated natively: the regularized incomplete
//! beta function by Lentz's continued fraction (Student t), and the
//! regularized incomplete gamma function by series / continued fraction
//! (normal tail via `erfc`).

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const FPMIN: f64 = 1e-300;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut sum = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    1.0 - gamma_q(a, x)
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln_front = -x + a * x.ln() - ln_gamma(a);
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
        1.0 - sum * ln_front.exp()
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
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
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        ln_front.exp() * h
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * inc_beta(df / 2.0, 0.5, df / (df + t * t));
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Quantile of Student's t by bisection on the CDF.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level {p} outside (0, 1)");
    let (mut lo, mut hi) = (-1.0, 1.0);
    while student_t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation; absent for a single sample.
    pub std_dev: Option<f64>,
    /// `mean ± t(0.975, n-1) * sd / sqrt(n)`; absent for a single sample.
    pub ci95: Option<(f64, f64)>,
}

/// Quantile of sorted data with linear interpolation at rank `p * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample variance.
pub fn variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (samples.len() - 1) as f64
}

pub fn describe(samples: &[f64]) -> Result<SummaryStats> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples to describe".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = mean(samples);
    let (std_dev, ci95) = if n >= 2 {
        let sd = variance(samples).sqrt();
        let half = student_t_quantile(0.975, (n - 1) as f64) * sd / (n as f64).sqrt();
        (Some(sd), Some((m - half, m + half)))
    } else {
        (None, None)
    };
    Ok(SummaryStats {
        n,
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
        mean: m,
        std_dev,
        ci95,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
    /// Zero-variance input handled by convention rather than by the test.
    pub degenerate: bool,
}

impl TestResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn degenerate_result(name: &str, mean_diff: f64) -> TestResult {
    if mean_diff == 0.0 {
        TestResult { test_name: name.into(), statistic: 0.0, p_value: 1.0, df: None, degenerate: true }
    } else {
        TestResult {
            test_name: name.into(),
            statistic: f64::INFINITY.copysign(mean_diff),
            p_value: 0.0,
            df: None,
            degenerate: true,
        }
    }
}

fn check_samples(a: &[f64], min_len: usize, what: &str) -> Result<()> {
    if a.len() < min_len {
        return Err(Error::Empty(format!("{what} needs at least {min_len} samples per group, got {}", a.len())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!("{what}: non-finite sample")));
    }
    Ok(())
}

/// Unpaired two-sided t-test with unequal variances (Welch-Satterthwaite df).
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    const NAME: &str = "welch_t";
    check_samples(a, 2, NAME)?;
    check_samples(b, 2, NAME)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(degenerate_result(NAME, diff));
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TestResult { test_name: NAME.into(), statistic: t, p_value: student_t_two_sided(t, df), df: Some(df), degenerate: false })
}

/// Two-sided one-sample t-test on the differences `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    const NAME: &str = "paired_t";
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    check_samples(a, 2, NAME)?;
    check_samples(b, 2, NAME)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let md = mean(&diffs);
    let var = variance(&diffs);
    if var == 0.0 {
        return Ok(degenerate_result(NAME, md));
    }
    let t = md / (var / n).sqrt();
    let df = n - 1.0;
    Ok(TestResult { test_name: NAME.into(), statistic: t, p_value: student_t_two_sided(t, df), df: Some(df), degenerate: false })
}

/// Largest `n_a * n_b` for which the exact Mann-Whitney distribution is used.
pub const MANN_WHITNEY_EXACT_LIMIT: usize = 400;

/// Midranks (1-based) of the pooled sample and the tie-correction sum `Σ(t³ - t)`.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// `U_a`: number of pairs with `a > b`, ties counting one half.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let ra: f64 = ranks[..a.len()].iter().sum();
    let na = a.len() as f64;
    ra - na * (na + 1.0) / 2.0
}

/// Number of rank arrangements giving each value of `U` (`0..=m*n`) for
/// group sizes `m` and `n` without ties.
pub fn exact_u_counts(m: usize, n: usize) -> Vec<u128> {
    // table[i][j][u] for i <= m, j <= n
    let mut table: Vec<Vec<Vec<u128>>> = vec![vec![Vec::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut counts = vec![0u128; i * j + 1];
            if i == 0 || j == 0 {
                counts[0] = 1;
            } else {
                // the largest value belongs to group a (exceeds all j of b) or to group b
                for (u, c) in table[i - 1][j].iter().enumerate() {
                    counts[u + j] += c;
                }
                for (u, c) in table[i][j - 1].iter().enumerate() {
                    counts[u] += c;
                }
            }
            table[i][j] = counts;
        }
    }
    std::mem::take(&mut table[m][n])
}

/// Exact two-sided p-value `min(1, 2 * min(P(U <= u), P(U >= u)))`.
pub fn mann_whitney_exact_p(u: f64, m: usize, n: usize) -> f64 {
    let counts = exact_u_counts(m, n);
    let total: u128 = counts.iter().sum();
    let (mut below, mut above) = (0u128, 0u128);
    for (k, &c) in counts.iter().enumerate() {
        if k as f64 <= u + 1e-9 {
            below += c;
        }
        if k as f64 >= u - 1e-9 {
            above += c;
        }
    }
    (2.0 * below.min(above) as f64 / total as f64).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_normal_p(u: f64, m: usize, n: usize, tie_sum: f64) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let total = mf + nf;
    let mean_u = mf * nf / 2.0;
    let var = if total > 1.0 {
        mf * nf / 12.0 * ((total + 1.0) - tie_sum / (total * (total - 1.0)))
    } else {
        0.0
    };
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean_u).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / SQRT_2).min(1.0)
}

/// Two-sided Mann-Whitney U test. Exact when `n_a * n_b <= 400` and there are
/// no ties; normal approximation otherwise.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_samples(a, 1, "mann_whitney")?;
    check_samples(b, 1, "mann_whitney")?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let na = a.len() as f64;
    let u = ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0;
    let (name, p) = if a.len() * b.len() <= MANN_WHITNEY_EXACT_LIMIT && ties == 0.0 {
        ("mann_whitney_exact", mann_whitney_exact_p(u, a.len(), b.len()))
    } else {
        ("mann_whitney_normal", mann_whitney_normal_p(u, a.len(), b.len(), ties))
    };
    Ok(TestResult { test_name: name.into(), statistic: u, p_value: p, df: None, degenerate: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub model_name: String,
    pub params: Vec<f64>,
    pub r_square: f64,
}

impl RegressionFit {
    /// Evaluates the fitted model at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.model_name.as_str() {
            "linear" => p[0] * x + p[1],
            "quadratic" => (p[0] * x + p[1]) * x + p[2],
            "exponential" => p[0] * (-p[1] * x).exp() + p[2],
            other => panic!("unknown model {other}"),
        }
    }
}

/// `1 - SS_res / SS_tot`; 1 when both are zero, 0 when only `SS_tot` is.
pub fn r_square(ys: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let m = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - m) * (y - m)).sum();
    let ss_res: f64 = ys.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    if ss_tot == 0.0 {
        return if ss_res <= 1e-24 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

fn check_xy(xs: &[f64], ys: &[f64], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} x values and {} y values", xs.len(), ys.len())));
    }
    if xs.len() < min_len {
        return Err(Error::Empty(format!("need at least {min_len} points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite point".into()));
    }
    Ok(())
}

/// Ordinary least squares `y = slope * x + intercept`; params `[slope, intercept]`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    check_xy(xs, ys, 2)?;
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }
    let (slope, intercept) = if ys.iter().all(|&y| y == ys[0]) {
        (0.0, ys[0])
    } else {
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    };
    let r2 = r_square(ys, xs.iter().map(|x| slope * x + intercept));
    Ok(RegressionFit { model_name: "linear".into(), params: vec![slope, intercept], r_square: r2 })
}

/// Least squares `y = a x² + b x + c`; params `[a, b, c]`.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    check_xy(xs, ys, 3)?;
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Degenerate("quadratic fit needs three distinct x values".into()));
    }
    // centre and scale x for conditioning: t = (x - mx) / s
    let mx = mean(xs);
    let s = xs.iter().map(|x| (x - mx).abs()).fold(0.0, f64::max);
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = (x - mx) / s;
        let row = [t * t, t, 1.0];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [p2, p1, p0] = solve3(ata, aty).ok_or_else(|| Error::Degenerate("singular quadratic system".into()))?;
    // back to x: p2 t² + p1 t + p0 with t = (x - mx)/s
    let a = p2 / (s * s);
    let b = p1 / s - 2.0 * p2 * mx / (s * s);
    let c = p0 - p1 * mx / s + p2 * mx * mx / (s * s);
    let r2 = r_square(ys, xs.iter().map(|&x| {
        let t = (x - mx) / s;
        (p2 * t + p1) * t + p0
    }));
    Ok(RegressionFit { model_name: "quadratic".into(), params: vec![a, b, c], r_square: r2 })
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = v[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// For a fixed decay rate `b`, the least-squares `(a, c)` of `a·exp(-b x) + c`
/// and the resulting sum of squared residuals.
fn project_decay(xs: &[f64], ys: &[f64], b: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let phi: Vec<f64> = xs.iter().map(|&x| (-b * x).exp()).collect();
    let mp = phi.iter().sum::<f64>() / n;
    let my = mean(ys);
    let spp: f64 = phi.iter().map(|p| (p - mp) * (p - mp)).sum();
    let (a, c) = if spp <= 1e-300 || !spp.is_finite() {
        (0.0, my)
    } else {
        let spy: f64 = phi.iter().zip(ys).map(|(p, y)| (p - mp) * (y - my)).sum();
        let a = spy / spp;
        (a, my - a * mp)
    };
    let sse = phi.iter().zip(ys).map(|(p, y)| (a * p + c - y).powi(2)).sum();
    (a, c, sse)
}

/// Fits `y = a·exp(-b·x) + c` with `b >= 0`; params `[a, b, c]`.
///
/// Start values come from a grid of offsets `c` below `min(ys)`, each solved
/// for `(a, b)` by regressing `ln(y - c)` on `x`. The decay rate is then
/// refined by golden-section search in which `(a, c)` are re-solved exactly
/// for every trial `b`, iterating until the relative change of the residual
/// sum of squares drops below 1e-9.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    check_xy(xs, ys, 4)?;
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = ymax - ymin;
    if span == 0.0 {
        return Ok(RegressionFit { model_name: "exponential".into(), params: vec![0.0, 0.0, ymin], r_square: 1.0 });
    }
    let xmin = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xrange = xmax - xmin;
    if xrange == 0.0 {
        return Err(Error::Degenerate("all x values are equal".into()));
    }

    let mut candidates: Vec<f64> = Vec::new();
    const C_GRID: usize = 120;
    for k in 0..C_GRID {
        let offset = span * 10f64.powf(-6.0 + 7.0 * k as f64 / (C_GRID - 1) as f64);
        let c = ymin - offset;
        let logs: Vec<f64> = ys.iter().map(|y| (y - c).ln()).collect();
        if logs.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if let Ok(line) = fit_linear(xs, &logs) {
            candidates.push((-line.params[0]).max(0.0));
        }
    }
    if candidates.is_empty() {
        return Err(Error::Degenerate("data is not shaped like an exponential decay".into()));
    }
    // a log-spaced ladder of rates so the refinement can bracket the optimum
    const B_GRID: usize = 200;
    let ladder: Vec<f64> =
        (0..B_GRID).map(|k| 10f64.powf(-4.0 + 7.0 * k as f64 / (B_GRID - 1) as f64) / xrange).collect();
    let sse = |b: f64| project_decay(xs, ys, b).2;

    let mut best_b = 0.0;
    let mut best_sse = sse(0.0);
    for &b in candidates.iter().chain(&ladder) {
        let s = sse(b);
        if s < best_sse {
            best_sse = s;
            best_b = b;
        }
    }

    // bracket around the best start using the neighbouring ladder rungs
    let below = ladder.iter().copied().filter(|&b| b < best_b).fold(0.0, f64::max);
    let above = ladder.iter().copied().filter(|&b| b > best_b).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (below, if above.is_finite() { above } else { best_b * 2.0 + 1.0 / xrange });
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    let mut previous = best_sse;
    for _ in 0..500 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = sse(x2);
        }
        let current = f1.min(f2);
        let converged_obj = (previous - current).abs() <= 1e-9 * previous.abs().max(f64::MIN_POSITIVE);
        previous = current;
        if converged_obj && hi - lo <= 1e-13 * hi.max(1e-300) {
            break;
        }
    }
    let refined = if f1 < f2 { x1 } else { x2 };
    if sse(refined) < best_sse {
        best_b = refined;
    }
    let (a, c, _) = project_decay(xs, ys, best_b);
    let params = vec![a, best_b, c];
    let r2 = r_square(ys, xs.iter().map(|&x| a * (-best_b * x).exp() + c));
    Ok(RegressionFit { model_name: "exponential".into(), params, r_square: r2 })
}
