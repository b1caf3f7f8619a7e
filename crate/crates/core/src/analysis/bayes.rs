use super::AnalysisError;

fn open_unit(name: &str, p: f64) -> Result<(), AnalysisError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!("{name} must lie in (0, 1), got {p}")))
    }
}

/// Ratio of posterior odds to prior odds, written as in the risk-threshold
/// definition: `[(1 − prior)/prior] / [(1 − posterior)/posterior]`.
pub fn bayes_factor(prior: f64, posterior: f64) -> Result<f64, AnalysisError> {
    open_unit("prior", prior)?;
    open_unit("posterior", posterior)?;
    Ok(((1.0 - prior) / prior) / ((1.0 - posterior) / posterior))
}

/// Posterior probability at which the Bayes factor against `prior` reaches
/// `bf`: `1 / (1 + (1 − prior)/(prior·bf))`.
pub fn bf_threshold_posterior(prior: f64, bf: f64) -> Result<f64, AnalysisError> {
    open_unit("prior", prior)?;
    if !(bf > 0.0 && bf.is_finite()) {
        return Err(AnalysisError::Domain(format!("Bayes factor must be positive, got {bf}")));
    }
    Ok(1.0 / (1.0 + (1.0 - prior) / (prior * bf)))
}

/// Jeffreys' "substantial" and "strong" evidence bounds.
pub const SUBSTANTIAL_BF: f64 = 3.162_277_660_168_379_5; // 10^(1/2)
pub const STRONG_BF: f64 = 10.0;
