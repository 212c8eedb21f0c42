//! Adam with bias correction and the reduce-on-plateau learning-rate rule.

use crate::tensor::Tensor;

use super::AutodiffError;

/// Adam optimizer state: one pair of moment accumulators per parameter,
/// addressed by position in a fixed parameter order.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Number of steps taken so far.
    pub t: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl AdamState {
    /// Fresh state with the given initial learning rate and the standard
    /// moment decay constants (0.9 / 0.999 / 1e-8). Moment buffers are
    /// allocated on the first step.
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// Start an optimizer step: increments `t`. Follow with one
    /// [`AdamState::update_param`] per parameter, in the same fixed order
    /// on every step.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    /// Update parameter `index` with `grad`. `name` is used only for error
    /// reporting.
    pub fn update_param(
        &mut self,
        index: usize,
        name: &str,
        param: &mut Tensor,
        grad: &Tensor,
    ) -> Result<(), AutodiffError> {
        assert!(self.t >= 1, "call begin_step before update_param");
        if !grad.all_finite() {
            return Err(AutodiffError::NonFiniteParamGradient {
                param: name.to_string(),
            });
        }
        if self.first_moment.len() == index {
            // First step allocates the moment buffers in parameter order.
            self.first_moment.push(Tensor::zeros(param.shape()));
            self.second_moment.push(Tensor::zeros(param.shape()));
        }
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let m = self.first_moment[index].data_mut();
        let v = self.second_moment[index].data_mut();
        for ((p, g), (mi, vi)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
            *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }

    /// One optimizer step over all parameters at once. `params` and `grads`
    /// must be in the same fixed order on every call.
    pub fn step(
        &mut self,
        params: &mut [(String, &mut Tensor)],
        grads: &[Tensor],
    ) -> Result<(), AutodiffError> {
        assert_eq!(params.len(), grads.len(), "params/grads length mismatch");
        self.begin_step();
        for (i, (name, param)) in params.iter_mut().enumerate() {
            self.update_param(i, name, param, &grads[i])?;
        }
        Ok(())
    }

    /// First-moment accumulator for parameter `i` (test hook).
    pub fn first_moment(&self, i: usize) -> Option<&Tensor> {
        self.first_moment.get(i)
    }
}

/// Reduce-on-plateau scheduler in maximize mode: when the monitored metric
/// fails to improve on the best seen for `patience` consecutive steps, the
/// learning rate is multiplied by `factor` and the counter resets.
#[derive(Clone, Debug)]
pub struct PlateauState {
    pub patience: usize,
    pub factor: f64,
    best_metric: Option<f64>,
    epochs_since_improvement: usize,
}

impl PlateauState {
    pub fn new(patience: usize, factor: f64) -> Self {
        assert!(patience >= 1, "patience must be >= 1");
        assert!(factor > 0.0 && factor < 1.0, "factor must be in (0, 1)");
        PlateauState {
            patience,
            factor,
            best_metric: None,
            epochs_since_improvement: 0,
        }
    }

    /// The paper's setting: patience 4, factor 0.8.
    pub fn paper_default() -> Self {
        Self::new(4, 0.8)
    }

    /// Record one epoch's metric and possibly reduce `learning_rate`.
    pub fn step(&mut self, metric: f64, learning_rate: &mut f64) {
        match self.best_metric {
            Some(best) if metric <= best => {
                self.epochs_since_improvement += 1;
                if self.epochs_since_improvement >= self.patience {
                    *learning_rate *= self.factor;
                    self.epochs_since_improvement = 0;
                }
            }
            _ => {
                self.best_metric = Some(metric);
                self.epochs_since_improvement = 0;
            }
        }
    }

    pub fn best_metric(&self) -> Option<f64> {
        self.best_metric
    }
}
