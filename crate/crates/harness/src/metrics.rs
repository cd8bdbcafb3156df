use crate::error::{HarnessError, Result};

/// Euclidean norm of the value error, `sqrt(|v_ref - v|^2)`.
pub fn rmsve(v: &[f64], v_ref: &[f64]) -> Result<f64> {
    if v.len() != v_ref.len() {
        return Err(HarnessError::Config(format!(
            "value tables differ in size: {} vs {}",
            v.len(),
            v_ref.len()
        )));
    }
    Ok(v.iter()
        .zip(v_ref)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Mean and standard error of one sample. The standard error uses the
/// unbiased variance and is 0 for fewer than two values.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-index mean and standard error over equally long curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveStats {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CurveStats {
    pub fn from_curves(curves: &[Vec<f64>]) -> Result<Self> {
        let len = curves.first().map_or(0, Vec::len);
        if curves.iter().any(|c| c.len() != len) {
            return Err(HarnessError::Config("curves differ in length".into()));
        }
        let (mean, stderr) = (0..len)
            .map(|i| mean_stderr(&curves.iter().map(|c| c[i]).collect::<Vec<_>>()))
            .unzip();
        Ok(Self { mean, stderr })
    }

    /// Area under the mean curve, one unit per index.
    pub fn auc(&self) -> f64 {
        self.mean.iter().sum()
    }
}

/// Zero-centres the values and divides by their range. A degenerate range
/// maps every value to 0.
pub fn normalize_aucs(aucs: &[f64]) -> Vec<f64> {
    if aucs.is_empty() {
        return Vec::new();
    }
    let max = aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = aucs.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range <= 0.0 || !range.is_finite() {
        return vec![0.0; aucs.len()];
    }
    let centre = aucs.iter().sum::<f64>() / aucs.len() as f64;
    aucs.iter().map(|a| (a - centre) / range).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmsve_examples() {
        assert_eq!(rmsve(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmsve(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(rmsve(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_seed_has_zero_stderr() {
        let s = CurveStats::from_curves(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(s.stderr, vec![0.0; 3]);
        assert_eq!(s.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.auc(), 6.0);
    }

    #[test]
    fn degenerate_range_is_zero() {
        assert_eq!(normalize_aucs(&[4.0, 4.0, 4.0]), vec![0.0; 3]);
        assert_eq!(normalize_aucs(&[1.0, 3.0]), vec![-0.5, 0.5]);
    }
}
