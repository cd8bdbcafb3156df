//! Softmax (exponential-family) transition models and their likelihood and
//! planner-aware gradients.

use crate::error::{invalid, Result};
use crate::tables::ValueTable;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelDirection {
    /// Predicts the successor given the source.
    Forward,
    /// Predicts the predecessor given the destination.
    Backward,
}

/// `p_theta(c | k) = exp(theta . f(c, k)) / sum_c' exp(theta . f(c', k))`
/// over all states `c` for every conditioning state `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilyModelParams {
    pub theta: DVector<f64>,
    n_states: usize,
    /// Indexed `[k][c]`, each of length `dim`.
    features: Vec<DVector<f64>>,
    direction: ModelDirection,
}

/// Observed `s -> s'` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservedTransition {
    pub state: usize,
    pub next_state: usize,
}

/// Inputs of the planner-aware loss: the planner's TD update vectors are
/// `(r(s,s') + gamma v(s') - v(s)) x(u)` with `u` the updated endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningContext {
    /// `r(s, s')`
    pub reward: DMatrix<f64>,
    pub values: ValueTable,
    /// Value features, one row per state.
    pub value_features: DMatrix<f64>,
    pub discount: f64,
}

impl ExpFamilyModelParams {
    /// `feature(candidate, conditioning)` fills the pair features. For the
    /// backward direction the candidate is a predecessor and the conditioning
    /// state its destination; forward is the other way round.
    pub fn new(
        theta: DVector<f64>,
        n_states: usize,
        direction: ModelDirection,
        feature: impl Fn(usize, usize) -> DVector<f64>,
    ) -> Result<Self> {
        let dim = theta.len();
        let mut features = Vec::with_capacity(n_states * n_states);
        for k in 0..n_states {
            for c in 0..n_states {
                let f = feature(c, k);
                if f.len() != dim {
                    return invalid(format!(
                        "feature ({c}, {k}) has length {}, expected {dim}",
                        f.len()
                    ));
                }
                features.push(f);
            }
        }
        Ok(Self {
            theta,
            n_states,
            features,
            direction,
        })
    }

    pub fn direction(&self) -> ModelDirection {
        self.direction
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn feature(&self, candidate: usize, conditioning: usize) -> &DVector<f64> {
        &self.features[conditioning * self.n_states + candidate]
    }

    /// Softmax over candidates for one conditioning state.
    pub fn probs(&self, conditioning: usize) -> Vec<f64> {
        self.probs_with(&self.theta, conditioning)
    }

    fn probs_with(&self, theta: &DVector<f64>, k: usize) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.n_states)
            .map(|c| theta.dot(self.feature(c, k)))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    /// `(conditioning, observed candidate)` of a transition.
    fn roles(&self, t: &ObservedTransition) -> (usize, usize) {
        match self.direction {
            ModelDirection::Forward => (t.state, t.next_state),
            ModelDirection::Backward => (t.next_state, t.state),
        }
    }

    fn check_batch(&self, batch: &[ObservedTransition]) -> Result<()> {
        if batch.is_empty() {
            return invalid("gradient needs a nonempty batch");
        }
        if let Some(t) = batch
            .iter()
            .find(|t| t.state >= self.n_states || t.next_state >= self.n_states)
        {
            return invalid(format!(
                "transition ({}, {}) out of range",
                t.state, t.next_state
            ));
        }
        Ok(())
    }

    fn expected_feature(&self, probs: &[f64], k: usize) -> DVector<f64> {
        let mut mean = DVector::zeros(self.theta.len());
        for (c, &p) in probs.iter().enumerate() {
            mean.axpy(p, self.feature(c, k), 1.0);
        }
        mean
    }

    /// Mean negative log-likelihood of the batch at `theta`.
    pub fn negative_log_likelihood(
        &self,
        theta: &DVector<f64>,
        batch: &[ObservedTransition],
    ) -> Result<f64> {
        self.check_batch(batch)?;
        let total: f64 = batch
            .iter()
            .map(|t| {
                let (k, obs) = self.roles(t);
                -self.probs_with(theta, k)[obs].ln()
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// `TD(c, k) x(u)`, the planner's update vector for candidate `c` under
    /// conditioning state `k`.
    fn update_vector(&self, ctx: &PlanningContext, c: usize, k: usize) -> DVector<f64> {
        let (s, next) = match self.direction {
            ModelDirection::Forward => (k, c),
            ModelDirection::Backward => (c, k),
        };
        let td = ctx.reward[(s, next)] + ctx.discount * ctx.values.get(next) - ctx.values.get(s);
        ctx.value_features.row(s).transpose() * td
    }

    fn check_context(&self, ctx: &PlanningContext) -> Result<()> {
        let n = self.n_states;
        if ctx.reward.shape() != (n, n) || ctx.values.len() != n || ctx.value_features.nrows() != n
        {
            return invalid("planning context is not dimensioned to the state space");
        }
        Ok(())
    }

    /// `1/(2n) sum_i |E_theta[U | k_i] - U(c_i, k_i)|^2`
    pub fn planml_loss(
        &self,
        theta: &DVector<f64>,
        batch: &[ObservedTransition],
        ctx: &PlanningContext,
    ) -> Result<f64> {
        self.check_batch(batch)?;
        self.check_context(ctx)?;
        let total: f64 = batch
            .iter()
            .map(|t| {
                let (k, obs) = self.roles(t);
                let probs = self.probs_with(theta, k);
                let mut expected = DVector::zeros(ctx.value_features.ncols());
                for (c, &p) in probs.iter().enumerate() {
                    expected.axpy(p, &self.update_vector(ctx, c, k), 1.0);
                }
                (expected - self.update_vector(ctx, obs, k)).norm_squared()
            })
            .sum();
        Ok(total / (2.0 * batch.len() as f64))
    }
}

/// `1/n sum_i (E_theta[f(., k_i)] - f(c_i, k_i))`, the gradient of the mean
/// negative log-likelihood.
pub fn mle_gradient(
    params: &ExpFamilyModelParams,
    batch: &[ObservedTransition],
) -> Result<DVector<f64>> {
    params.check_batch(batch)?;
    let mut grad = DVector::zeros(params.theta.len());
    for t in batch {
        let (k, obs) = params.roles(t);
        let probs = params.probs(k);
        grad += params.expected_feature(&probs, k) - params.feature(obs, k);
    }
    Ok(grad / batch.len() as f64)
}

/// `1/n sum_i Cov(U, f)^T (E_theta[U] - U_i)`, the gradient of
/// [`ExpFamilyModelParams::planml_loss`].
pub fn planml_gradient(
    params: &ExpFamilyModelParams,
    batch: &[ObservedTransition],
    ctx: &PlanningContext,
) -> Result<DVector<f64>> {
    params.check_batch(batch)?;
    params.check_context(ctx)?;
    let dim = params.theta.len();
    let out_dim = ctx.value_features.ncols();
    let mut grad = DVector::zeros(dim);
    for t in batch {
        let (k, obs) = params.roles(t);
        let probs = params.probs(k);
        let mean_f = params.expected_feature(&probs, k);
        let updates: Vec<DVector<f64>> = (0..params.n_states)
            .map(|c| params.update_vector(ctx, c, k))
            .collect();
        let mut mean_u = DVector::zeros(out_dim);
        for (u, &p) in updates.iter().zip(&probs) {
            mean_u.axpy(p, u, 1.0);
        }
        let mut cov = DMatrix::zeros(out_dim, dim);
        for (c, (u, &p)) in updates.iter().zip(&probs).enumerate() {
            if p != 0.0 {
                cov.ger(p, u, &(params.feature(c, k) - &mean_f), 1.0);
            }
        }
        grad += cov.transpose() * (&mean_u - &updates[obs]);
    }
    Ok(grad / batch.len() as f64)
}
