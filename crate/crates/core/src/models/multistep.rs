use crate::chain::TabularChain;
use crate::error::{invalid, Result};
use nalgebra::DMatrix;

/// `n`-step predecessor matrix: the `n`-th power of a reversed chain's
/// transition matrix.
pub fn n_step_backward(reversed: &TabularChain, n: u32) -> Result<DMatrix<f64>> {
    if n == 0 {
        return invalid("n-step model needs n >= 1");
    }
    let one = reversed.transition();
    let mut out = one.clone();
    for _ in 1..n {
        out = &out * one;
    }
    Ok(out)
}

/// Backward model over a random horizon: with continuation `lambda(s)` the
/// lookback extends one more step.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaModel {
    table: DMatrix<f64>,
    lambda: Vec<f64>,
    step_size: f64,
}

impl LambdaModel {
    pub fn new(lambda: Vec<f64>, step_size: f64) -> Result<Self> {
        if lambda.is_empty() {
            return invalid("lambda model needs at least one state");
        }
        if lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return invalid("lambda values must lie in [0, 1]");
        }
        let n = lambda.len();
        Ok(Self {
            table: DMatrix::zeros(n, n),
            lambda,
            step_size,
        })
    }

    pub fn constant(n_states: usize, lambda: f64, step_size: f64) -> Result<Self> {
        Self::new(vec![lambda; n_states], step_size)
    }

    pub fn with_table(mut self, table: DMatrix<f64>) -> Result<Self> {
        if table.shape() != self.table.shape() {
            return invalid("lambda table shape does not match the state count");
        }
        self.table = table;
        Ok(self)
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    pub fn n_states(&self) -> usize {
        self.lambda.len()
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn set_step_size(&mut self, step_size: f64) {
        self.step_size = step_size;
    }

    /// TD update of row `s_curr` after observing `s_prev -> s_curr`.
    pub fn update(&mut self, s_prev: usize, s_curr: usize) -> Result<()> {
        let n = self.n_states();
        if s_prev >= n || s_curr >= n {
            return invalid(format!("transition ({s_prev}, {s_curr}) out of range"));
        }
        let lambda = self.lambda[s_curr];
        let bootstrap: Vec<f64> = self.table.row(s_prev).iter().copied().collect();
        for (prev, boot) in bootstrap.into_iter().enumerate() {
            let indicator = if prev == s_prev { 1.0 } else { 0.0 };
            let target = (1.0 - lambda) * indicator + lambda * boot;
            let cell = &mut self.table[(s_curr, prev)];
            *cell += self.step_size * (target - *cell);
        }
        Ok(())
    }
}
