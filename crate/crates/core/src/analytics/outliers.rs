use crate::error::{Error, Result};

/// Norm of per-dimension z-scores for each animal. `None` when every
/// dimension is constant.
pub fn zscore_scores(features: &[(u32, Vec<f64>)]) -> Result<Option<Vec<(u32, f64)>>> {
    if features.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 animals (got {})",
            features.len()
        )));
    }
    let dim = features[0].1.len();
    if features.iter().any(|(_, f)| f.len() != dim) {
        return Err(Error::domain("feature vectors have inconsistent dimension"));
    }
    let n = features.len() as f64;
    let mut stats = Vec::with_capacity(dim);
    for j in 0..dim {
        let mean = features.iter().map(|(_, f)| f[j]).sum::<f64>() / n;
        let sd = (features
            .iter()
            .map(|(_, f)| (f[j] - mean).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        stats.push((mean, sd));
    }
    // relative tolerance: dimensions whose spread is pure rounding noise count as constant
    let constant = |j: usize| stats[j].1 <= 1e-12 * (1.0 + stats[j].0.abs());
    if (0..dim).all(constant) {
        return Ok(None);
    }
    Ok(Some(
        features
            .iter()
            .map(|(id, f)| {
                let ss: f64 = (0..dim)
                    .filter(|&j| !constant(j))
                    .map(|j| ((f[j] - stats[j].0) / stats[j].1).powi(2))
                    .sum();
                (*id, ss.sqrt())
            })
            .collect(),
    ))
}

/// Animals whose z-score norm exceeds `threshold` standard deviations.
pub fn zscore_outliers(features: &[(u32, Vec<f64>)], threshold: f64) -> Result<Vec<u32>> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!(
            "threshold must be > 0 (got {threshold})"
        )));
    }
    match zscore_scores(features)? {
        Some(scores) => Ok(scores
            .into_iter()
            .filter(|&(_, s)| s > threshold)
            .map(|(id, _)| id)
            .collect()),
        None => {
            log::warn!("all feature dimensions have zero variance; no outliers flagged");
            Ok(Vec::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herd() -> Vec<(u32, Vec<f64>)> {
        (0..30u32)
            .map(|i| {
                let a = 0.5 + 0.01 * ((i * 7) % 11) as f64;
                let t = 38.5 + 0.02 * ((i * 5) % 7) as f64;
                (i, vec![a, t])
            })
            .collect()
    }

    #[test]
    fn identical_features_flag_nothing() {
        let f: Vec<_> = (0..5).map(|i| (i, vec![1.0, 2.0])).collect();
        assert!(zscore_outliers(&f, 3.0).unwrap().is_empty());
    }

    #[test]
    fn displaced_animal_is_flagged() {
        let mut f = herd();
        // direct z computation for the displaced activity dimension
        let acts: Vec<f64> = f.iter().map(|x| x.1[0]).collect();
        let mean = acts.iter().sum::<f64>() / acts.len() as f64;
        let sd = (acts.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / acts.len() as f64).sqrt();
        f[17].1[0] = mean + 6.0 * sd;
        let flagged = zscore_outliers(&f, 3.0).unwrap();
        assert_eq!(flagged, vec![17]);
    }

    #[test]
    fn infinite_threshold_flags_nothing() {
        let mut f = herd();
        f[3].1[1] = 45.0;
        assert!(zscore_outliers(&f, f64::INFINITY).unwrap().is_empty());
        assert!(zscore_outliers(&f, 0.0).is_err());
        assert!(zscore_outliers(&f[..2], 1.0).is_err());
    }
}
