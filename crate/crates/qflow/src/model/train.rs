//! Adam optimization of the circuit parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{InitialStateDistribution, SaxCodebook, TransitionTensor};
use crate::qsim::{AnsatzParams, CircuitLayout};
use crate::{Error, Result};

use super::cost::{cost, CostBreakdown, EvalContext};
use super::gradient::cost_gradient;
use super::{AlphaMatrix, ShotsMode, TrainingData};

/// RNG stream for drawing the initial parameters.
pub(crate) const INIT_STREAM: u64 = 1;

/// Optimizer settings and objective weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: AlphaMatrix,
    pub learning_rate: f64,
    pub iterations: usize,
    pub num_layers: usize,
    pub shots: ShotsMode,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl TrainConfig {
    /// Defaults tuned for the hourly panels this pipeline targets: a fairly
    /// aggressive step with Adam's standard moment constants.
    pub fn new(alpha: AlphaMatrix) -> Self {
        TrainConfig {
            alpha,
            learning_rate: 0.1,
            iterations: 300,
            num_layers: 1,
            shots: ShotsMode::Exact,
            seed: 7,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.num_layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        if let ShotsMode::Sampled { shots } = self.shots {
            if shots == 0 {
                return Err(Error::Config("sampled mode needs at least one shot".into()));
            }
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {beta}")));
            }
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First- and second-moment accumulators of Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1,
            beta2,
            epsilon,
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn apply(&mut self, params: &mut [f64], grad: &[f64], learning_rate: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// A fitted circuit together with everything generation and inspection need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub layout: CircuitLayout,
    pub params: AnsatzParams,
    pub codebook: SaxCodebook,
    pub transitions: TransitionTensor,
    pub initial_states: InitialStateDistribution,
    pub origin_means: Vec<f64>,
    pub port_names: Vec<String>,
    /// Cost at every parameter vector visited, including the initial one;
    /// always `iterations + 1` entries.
    pub cost_history: Vec<CostBreakdown>,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn final_cost(&self) -> &CostBreakdown {
        self.cost_history
            .last()
            .expect("cost history is never empty")
    }
}

/// Fits the ansatz to the encoded panel with Adam.
///
/// In exact mode the run is fully deterministic given the seed (which only
/// feeds the initial parameter draw); in sampled mode the seed also numbers
/// the per-evaluation shot streams.
pub fn train(data: &TrainingData, config: &TrainConfig) -> Result<TrainedModel> {
    data.validate()?;
    config.validate()?;
    if config.alpha.num_ports() != data.layout.num_ports() {
        return Err(Error::Config(format!(
            "alpha matrix covers {} ports, data has {}",
            config.alpha.num_ports(),
            data.layout.num_ports()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    let template = AnsatzParams::random_init(&data.layout, config.num_layers, &mut rng)?;
    let mut flat = template.to_flat();

    let mut ctx = EvalContext::new(config.shots, config.seed);
    let mut adam = AdamState::new(flat.len(), config.beta1, config.beta2, config.epsilon);
    let mut history = Vec::with_capacity(config.iterations + 1);

    for iteration in 0..config.iterations {
        let current = template.from_flat(&flat)?;
        let (breakdown, grad) = cost_gradient(&current, data, &config.alpha, &mut ctx)?;
        if !breakdown.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "optimization diverged at iteration {iteration}: cost {}, last finite cost {}",
                breakdown.total,
                history
                    .last()
                    .map(|c: &CostBreakdown| c.total.to_string())
                    .unwrap_or_else(|| "none".into())
            )));
        }
        history.push(breakdown);
        adam.apply(&mut flat, &grad, config.learning_rate);
    }

    let params = template.from_flat(&flat)?;
    let final_cost = cost(&params, data, &config.alpha, &mut ctx)?;
    if !final_cost.total.is_finite() {
        return Err(Error::Numerical(format!(
            "final cost is not finite: {}",
            final_cost.total
        )));
    }
    history.push(final_cost);

    Ok(TrainedModel {
        layout: data.layout.clone(),
        params,
        codebook: data.codebook.clone(),
        transitions: data.transitions.clone(),
        initial_states: data.initial_states.clone(),
        origin_means: data.origin_means.clone(),
        port_names: data.port_names.clone(),
        cost_history: history,
        config: config.clone(),
    })
}
