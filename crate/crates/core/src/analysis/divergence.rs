/// Shannon entropy in the given log base, with `0·log 0 = 0`.
pub fn entropy(p: &[f64], base: f64) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    h / base.ln()
}

/// Divergences below this are rounding noise (their square root, about
/// 1e-7, would otherwise show up as a spurious distance).
const NOISE_FLOOR: f64 = 1e-14;

/// Generalized Jensen-Shannon divergence `H(Σ wᵢ·pᵢ) − Σ wᵢ·H(pᵢ)`,
/// evaluated as the weighted KL divergence of each `pᵢ` from the mixture,
/// which avoids the cancellation of two nearly equal entropies. Weights are
/// normalized.
pub fn js_divergence(distributions: &[Vec<f64>], weights: &[f64], base: f64) -> f64 {
    assert_eq!(distributions.len(), weights.len());
    let total: f64 = weights.iter().sum();
    let len = distributions.first().map_or(0, Vec::len);
    let mut mixture = vec![0.0; len];
    for (d, &w) in distributions.iter().zip(weights) {
        for (m, &x) in mixture.iter_mut().zip(d) {
            *m += w / total * x;
        }
    }
    let mut kl = 0.0;
    for (d, &w) in distributions.iter().zip(weights) {
        let k: f64 = d
            .iter()
            .zip(&mixture)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &m)| x * (x / m).ln())
            .sum();
        kl += w / total * k;
    }
    let d = kl / base.ln();
    if d < NOISE_FLOOR {
        0.0
    } else {
        d
    }
}

/// Base-2 Jensen-Shannon distance between two distributions, in [0, 1].
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    js_divergence(&[p.to_vec(), q.to_vec()], &[0.5, 0.5], 2.0).sqrt()
}
