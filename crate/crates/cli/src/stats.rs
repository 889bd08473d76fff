//! Divergences, chi-square goodness of fit, and least-squares trend.

use num_traits::Float;

use crate::HarnessError;

/// Jensen-Shannon divergence in bits, with `0 * log 0 = 0`. Result is in `[0, 1]`.
pub fn js_divergence<F: Float>(p: &[F], q: &[F]) -> Result<F, HarnessError> {
    if p.len() != q.len() {
        return Err(HarnessError::LengthMismatch(p.len(), q.len()));
    }
    if p.iter().chain(q).any(|&v| v < F::zero() || v.is_nan()) {
        return Err(HarnessError::NegativeEntry);
    }
    let half = F::from(0.5).unwrap();
    let mut acc = F::zero();
    for (&a, &b) in p.iter().zip(q) {
        let m = (a + b) * half;
        if a > F::zero() {
            acc = acc + a * (a / m).log2();
        }
        if b > F::zero() {
            acc = acc + b * (b / m).log2();
        }
    }
    Ok((acc * half).max(F::zero()).min(F::one()))
}

/// Total variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
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
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain: a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series for P(a, x).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..10_000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).max(0.0)
    } else {
        // Continued fraction for Q(a, x), modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (log_prefix.exp() * h).min(1.0)
    }
}

/// Survival function of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, stat / 2.0)
}

/// Outcome of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of `counts` against `probs`.
///
/// Cells with expected count below 5 are pooled into one cell. A pooled cell
/// with zero expectation and zero observations is dropped; any observation in
/// a zero-probability cell gives `p = 0`.
pub fn chi_square_test(counts: &[u64], probs: &[f64]) -> Result<ChiSquare, HarnessError> {
    if counts.len() != probs.len() {
        return Err(HarnessError::LengthMismatch(counts.len(), probs.len()));
    }
    if probs.iter().any(|&p| p < 0.0 || p.is_nan()) {
        return Err(HarnessError::NegativeEntry);
    }
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * nf;
        if p == 0.0 && c > 0 {
            return Ok(ChiSquare {
                statistic: f64::INFINITY,
                dof: counts.len().saturating_sub(1),
                p_value: 0.0,
            });
        }
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
        } else {
            cells.push((c as f64, e));
        }
    }
    if pool_exp > 0.0 {
        cells.push((pool_obs, pool_exp));
    } else if pool_obs > 0.0 {
        return Ok(ChiSquare {
            statistic: f64::INFINITY,
            dof: cells.len(),
            p_value: 0.0,
        });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        chi_square_sf(statistic, dof as f64)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Ordinary least-squares fit `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit, HarnessError> {
    if x.len() != y.len() {
        return Err(HarnessError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(HarnessError::InvalidConfig(
            "least squares needs at least 3 points".into(),
        ));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InvalidConfig(
            "least squares needs distinct x".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        intercept,
        slope,
        slope_se,
    })
}

/// Frequencies `counts / Σ counts`.
pub fn normalize_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}
