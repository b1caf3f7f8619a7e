use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankComparison {
    pub rho: f64,
    /// Two-sided, from the t approximation with `n − 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    /// Set when `|rho| = 1`; the p-value is then reported as its limit 0.
    pub exact: bool,
}

/// 1-based ranks, ties sharing the average of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation of paired scores.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<RankComparison, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::TooFewItems(n));
    }
    let rho = pearson(&average_ranks(a), &average_ranks(b)).ok_or(AnalysisError::ConstantScores)?;
    if (1.0 - rho.abs()) < 1e-15 {
        return Ok(RankComparison {
            rho: rho.signum(),
            p_value: 0.0,
            n,
            exact: true,
        });
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("n > 2 here");
    Ok(RankComparison {
        rho,
        p_value: (2.0 * dist.sf(t.abs())).min(1.0),
        n,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_values() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let same = spearman(&x, &x).unwrap();
        assert_eq!((same.rho, same.p_value, same.exact), (1.0, 0.0, true));
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(spearman(&x, &rev).unwrap().rho, -1.0);
        let r = spearman(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.rho, 0.8, epsilon = 1e-15);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn t_approximation_p_value() {
        // rho = 0.8, n = 5: t = 0.8·sqrt(3/0.36) = 2.3094, two-sided p = 0.1041
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.p_value, 0.104_088_0, epsilon = 1e-6);
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(AnalysisError::TooFewItems(1))));
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(AnalysisError::LengthMismatch(2, 1))));
        assert!(matches!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(AnalysisError::ConstantScores)));
    }
}
