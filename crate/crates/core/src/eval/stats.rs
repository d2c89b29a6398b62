//! Kruskal-Wallis H test with a chi-square upper-tail p-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

/// Average ranks (1-based) of `values`, with ties sharing the mean rank.
/// Also returns the tie term `Σ (t³ − t)` over tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        order[i..j].iter().for_each(|&k| ranks[k] = rank);
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// H statistic with tie correction; `df` = groups − 1.
///
/// H is computed as `12/(N(N+1)) Σ nᵢ (R̄ᵢ − (N+1)/2)²` so groups with equal
/// mean ranks give exactly zero. When every value is tied H is 0 and p is 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::validation("Kruskal-Wallis needs at least two groups"));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::validation("Kruskal-Wallis groups must be non-empty"));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::validation("Kruskal-Wallis values must not be NaN"));
    }
    let n = pooled.len() as f64;
    let df = groups.len() - 1;
    let (ranks, ties) = average_ranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, df, p: 1.0 });
    }
    let grand = (n + 1.0) / 2.0;
    let mut offset = 0;
    let mut spread = 0.0;
    for g in groups {
        let sum: f64 = ranks[offset..offset + g.len()].iter().sum();
        let mean = sum / g.len() as f64;
        spread += g.len() as f64 * (mean - grand) * (mean - grand);
        offset += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * spread / correction;
    Ok(KruskalWallis {
        h,
        df,
        p: chi_square_sf(h, df as f64),
    })
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
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
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Chi-square survival function `P(X > x)` with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let r = kruskal_wallis(&g).unwrap();
        assert!((r.h - 7.2).abs() < 1e-12);
        assert_eq!(r.df, 2);
        // df = 2 tail is exp(-x/2)
        assert!((r.p - (-3.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn identical_and_all_tied() {
        let g = vec![vec![1.0, 2.0, 3.0]; 3];
        assert_eq!(kruskal_wallis(&g).unwrap().h, 0.0);
        let r = kruskal_wallis(&[vec![4.0, 4.0], vec![4.0]]).unwrap();
        assert_eq!((r.h, r.p), (0.0, 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kruskal_wallis(&[vec![1.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        let (r, t) = average_ranks(&[10.0, 20.0, 10.0, 30.0]);
        assert_eq!(r, vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn gamma_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        // Q(1, x) = exp(-x)
        for x in [0.1, 1.0, 2.5, 10.0, 40.0] {
            assert!((gamma_q(1.0, x) - (-x).exp()).abs() < 1e-14);
        }
    }
}
