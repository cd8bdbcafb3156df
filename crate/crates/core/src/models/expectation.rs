use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector};

/// Linear backward expectation model: for every state feature vector `x`,
/// the predecessor mean `E[x~|x]`, second moment `E[x~ x~^T|x]` and a
/// bilinear reward `r(x~, x) = x~^T Theta_r x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationModelBundle {
    features: DMatrix<f64>,
    mean: Vec<DVector<f64>>,
    second_moment: Vec<DMatrix<f64>>,
    reward_params: DMatrix<f64>,
    discount: f64,
}

impl ExpectationModelBundle {
    /// `features` is `S x d` (one row per state) and `backward` the
    /// state-only predecessor matrix `P(s~|s)`, rows indexed by `s`.
    pub fn new(
        features: DMatrix<f64>,
        backward: &DMatrix<f64>,
        reward_params: DMatrix<f64>,
        discount: f64,
    ) -> Result<Self> {
        let (n, dim) = features.shape();
        if backward.shape() != (n, n) {
            return invalid("backward matrix must be square over the feature rows");
        }
        if reward_params.shape() != (dim, dim) {
            return invalid("reward parameters must be d x d");
        }
        let rows: Vec<DVector<f64>> = (0..n).map(|s| features.row(s).transpose()).collect();
        let mut mean = Vec::with_capacity(n);
        let mut second_moment = Vec::with_capacity(n);
        for s in 0..n {
            let mut mu = DVector::zeros(dim);
            let mut sigma = DMatrix::zeros(dim, dim);
            for (prev, x) in rows.iter().enumerate() {
                let p = backward[(s, prev)];
                if p != 0.0 {
                    mu.axpy(p, x, 1.0);
                    sigma.ger(p, x, x, 1.0);
                }
            }
            mean.push(mu);
            second_moment.push(sigma);
        }
        Ok(Self {
            features,
            mean,
            second_moment,
            reward_params,
            discount,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn locate(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.dim() {
            return invalid(format!(
                "feature has length {}, expected {}",
                x.len(),
                self.dim()
            ));
        }
        (0..self.features.nrows())
            .find(|&s| {
                self.features
                    .row(s)
                    .iter()
                    .zip(x.iter())
                    .all(|(a, b)| a == b)
            })
            .ok_or_else(|| crate::Error::InvalidInput("feature vector matches no state".into()))
    }

    /// `E[x~|x]`
    pub fn mean_predecessor(&self, x: &DVector<f64>) -> Result<&DVector<f64>> {
        Ok(&self.mean[self.locate(x)?])
    }

    /// `E[x~ x~^T|x]`
    pub fn predecessor_covariance(&self, x: &DVector<f64>) -> Result<&DMatrix<f64>> {
        Ok(&self.second_moment[self.locate(x)?])
    }

    /// `E[x~ x~^T|x] Theta_r x`
    pub fn expected_reward_vector(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.predecessor_covariance(x)? * (&self.reward_params * x))
    }

    pub fn reward_params(&self) -> &DMatrix<f64> {
        &self.reward_params
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }
}

/// One expected backward TD update of linear weights `w` from feature `x`.
pub fn expected_linear_backward_step(
    w: &DVector<f64>,
    x: &DVector<f64>,
    bundle: &ExpectationModelBundle,
    step_size: f64,
) -> Result<DVector<f64>> {
    if w.len() != bundle.dim() {
        return invalid(format!(
            "weights have length {}, expected {}",
            w.len(),
            bundle.dim()
        ));
    }
    let s = bundle.locate(x)?;
    let mean = &bundle.mean[s];
    let second = &bundle.second_moment[s];
    let reward = second * (&bundle.reward_params * x);
    let bootstrap = mean * (bundle.discount * x.dot(w));
    Ok(w + (reward + bootstrap - second * w) * step_size)
}
