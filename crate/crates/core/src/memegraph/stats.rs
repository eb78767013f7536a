use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean-absolute-difference Gini coefficient.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("gini needs finite non-negative values".into()));
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Err(Error::Undefined("gini of an all-zero distribution"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let weighted: f64 = v.iter().enumerate().map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x).sum();
    Ok(weighted / (n * total))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Positive decay exponent.
    pub exponent: f64,
    /// Fitted log of the scale constant.
    pub log_scale: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares of `ln y` on `ln x` over points with both positive;
/// `y ≈ exp(log_scale) * x^-exponent`.
pub fn power_law_fit(xs: &[f64], ys: &[f64], min_points: usize) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < min_points.max(2) {
        return Err(Error::InvalidInput(format!(
            "power-law fit needs {} positive points, got {}",
            min_points.max(2),
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Undefined("power-law fit with a single distinct x"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit {
        exponent: -slope,
        log_scale: my - slope * mx,
        r_squared,
        points: pts.len(),
    })
}

/// Rank-frequency exponent of a frequency list (sorted descending here).
pub fn zipf_fit(frequencies: &[f64]) -> Result<PowerLawFit> {
    let mut f: Vec<f64> = frequencies.iter().copied().filter(|&x| x > 0.0).collect();
    if f.len() < 10 {
        return Err(Error::InvalidInput(format!("zipf fit needs at least 10 positive ranks, got {}", f.len())));
    }
    f.sort_by(|a, b| b.total_cmp(a));
    let ranks: Vec<f64> = (1..=f.len()).map(|r| r as f64).collect();
    power_law_fit(&ranks, &f, 10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_extremes() {
        assert_eq!(gini(&[0.0, 0.0, 0.0, 10.0]).unwrap(), 0.75);
        assert_eq!(gini(&[3.0; 7]).unwrap(), 0.0);
        assert!(gini(&[0.0, 0.0]).is_err());
        assert!(gini(&[]).is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let f: Vec<f64> = (1..=100).map(|r| 1000.0 * (r as f64).powi(-2)).collect();
        let fit = zipf_fit(&f).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_ranks() {
        assert!(zipf_fit(&[5.0, 4.0, 3.0, 0.0]).is_err());
    }
}
