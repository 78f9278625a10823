//! The training objective: per-port transition fidelity plus a weighted
//! penalty on cross-port correlation mismatch.
//!
//! For every horizon t and every observed opening state î (weight w), the
//! circuit is evolved from î to time t and the resulting port marginals are
//! compared against the empirical transition rows with a KL divergence.  On
//! top of that, each weighted port pair contributes the squared gap between
//! the model's increment correlation and the empirical one, both centered on
//! the codebook's stored mean increment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::qsim::{
    prepare_from_state, sample_outcomes, trace_ancillas, AngleShift, AnsatzParams, CircuitLayout,
    JointDistribution,
};
use crate::{Error, Result};

use super::{AlphaMatrix, ShotsMode, TrainingData};

/// Weighted second moments below this make a model correlation undefined.
pub(crate) const MODEL_VARIANCE_FLOOR: f64 = 1e-12;

/// Pseudo-count added to finite-shot frequency estimates so that empirical
/// probabilities stay strictly positive inside the divergences.
const SAMPLED_SMOOTHING: f64 = 1e-6;

/// First RNG stream used by sampled evaluations; streams below this are
/// reserved for other draws (parameter initialization, path generation).
const EVAL_STREAM_BASE: u64 = 256;

/// The two components of the objective and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Weighted KL divergence between model conditionals and transition rows.
    pub term1: f64,
    /// Weighted squared correlation mismatch over port pairs.
    pub term2: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(term1: f64, term2: f64) -> Self {
        CostBreakdown {
            term1,
            term2,
            total: term1 + term2,
        }
    }
}

/// KL divergence `Σ p·ln(p/q)` in nats, with `0·ln 0 = 0`.
///
/// Entries where `p` is zero contribute nothing; a zero in `q` under positive
/// `p` mass makes the divergence infinite and is reported as a numerical
/// error rather than silently returned.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Contract(format!(
            "KL divergence needs equal lengths, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi < 0.0 {
            return Err(Error::Contract(format!(
                "probability p[{i}] = {pi} is negative"
            )));
        }
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::Numerical(format!(
                "infinite divergence: q[{i}] = {qi} under p[{i}] = {pi}"
            )));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

/// Turns circuit evolutions into outcome distributions, either exactly or
/// through finite-shot sampling.
///
/// In sampled mode each evaluation draws from a fresh, numbered RNG stream,
/// so a whole training run is reproducible from the seed while no two
/// evaluations share shot noise.
#[derive(Debug, Clone)]
pub struct EvalContext {
    mode: ShotsMode,
    seed: u64,
    next_stream: u64,
}

impl EvalContext {
    pub fn new(mode: ShotsMode, seed: u64) -> Self {
        EvalContext {
            mode,
            seed,
            next_stream: EVAL_STREAM_BASE,
        }
    }

    /// Exact probabilities straight off the statevector.
    pub fn exact() -> Self {
        EvalContext::new(ShotsMode::Exact, 0)
    }

    /// Smoothed finite-shot frequency estimates.
    pub fn sampled(shots: u64, seed: u64) -> Self {
        EvalContext::new(ShotsMode::Sampled { shots }, seed)
    }

    pub fn mode(&self) -> ShotsMode {
        self.mode
    }

    /// Evolves `from` under the circuit with explicit diagonal angles and an
    /// optional basis-angle shift, then reads out the joint distribution.
    pub(crate) fn estimate_with(
        &mut self,
        layout: &CircuitLayout,
        params: &AnsatzParams,
        from: &[usize],
        diag_angles: &[f64],
        shift: Option<&AngleShift>,
    ) -> Result<JointDistribution> {
        if params.num_qubits() != layout.total_qubits() {
            return Err(Error::Contract(format!(
                "parameters sized for {} qubits, layout has {}",
                params.num_qubits(),
                layout.total_qubits()
            )));
        }
        let mut state = prepare_from_state(layout, from)?;
        params.evolve_with(&mut state, diag_angles, shift);
        let dist = trace_ancillas(layout, &state);
        match self.mode {
            ShotsMode::Exact => Ok(dist),
            ShotsMode::Sampled { shots } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(self.next_stream);
                self.next_stream += 1;
                let counts = sample_outcomes(&dist, shots, &mut rng)?;
                let denom = shots as f64 + counts.len() as f64 * SAMPLED_SMOOTHING;
                let probs = counts
                    .iter()
                    .map(|&c| (c as f64 + SAMPLED_SMOOTHING) / denom)
                    .collect();
                JointDistribution::new(dist.num_ports(), dist.states_per_port(), probs)
            }
        }
    }

    /// Unshifted evolution of `from` to horizon `t`.
    pub(crate) fn estimate(
        &mut self,
        layout: &CircuitLayout,
        params: &AnsatzParams,
        from: &[usize],
        t: usize,
    ) -> Result<JointDistribution> {
        self.estimate_with(layout, params, from, &params.diag_angles(t as f64), None)
    }
}

/// One weighted port pair's correlation state at a single horizon; the
/// quantities the gradient needs to differentiate the squared mismatch.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairTerm {
    pub d: usize,
    pub dp: usize,
    pub alpha: f64,
    pub data_rho: f64,
    pub model_rho: f64,
    /// Weighted second moment of port d's centered representatives.
    pub var_d: f64,
    pub var_dp: f64,
}

/// Everything the objective and its gradient need at one horizon.
pub(crate) struct HorizonEval {
    /// Joint outcome tables, one per opening state in the support.
    pub tables: Vec<JointDistribution>,
    /// Port marginals of each table: `[support][port][state]`.
    pub marginals: Vec<Vec<Vec<f64>>>,
    /// Representatives centered on the cell mean: `[port][state]`.
    pub centered: Vec<Vec<f64>>,
    /// Pairs that actually contribute to the penalty at this horizon.
    pub pairs: Vec<PairTerm>,
    pub term1: f64,
    pub term2: f64,
}

/// Second moment `Σ m(j)·a(j)²` of centered representatives `a` under a
/// marginal `m`.
fn second_moment(marginal: &[f64], centered: &[f64]) -> f64 {
    marginal
        .iter()
        .zip(centered)
        .map(|(&m, &a)| m * a * a)
        .sum()
}

/// Evaluates the circuit at one horizon across the whole opening-state
/// support and scores both cost terms.
pub(crate) fn evaluate_horizon(
    params: &AnsatzParams,
    data: &TrainingData,
    alpha: &AlphaMatrix,
    t: usize,
    ctx: &mut EvalContext,
) -> Result<HorizonEval> {
    let layout = &data.layout;
    let ports = layout.num_ports();
    let states = layout.states_per_port();
    let support = data.initial_states.support();
    let diag = params.diag_angles(t as f64);

    let mut tables = Vec::with_capacity(support.len());
    let mut marginals = Vec::with_capacity(support.len());
    let mut term1 = 0.0;
    for (from, w) in support {
        let q = ctx.estimate_with(layout, params, from, &diag, None)?;
        let mut per_port = Vec::with_capacity(ports);
        for d in 0..ports {
            let m = q.port_marginal(d);
            term1 += w * kl_divergence(&m, data.transitions.row(d, t, from[d]))?;
            per_port.push(m);
        }
        tables.push(q);
        marginals.push(per_port);
    }

    let centered: Vec<Vec<f64>> = (0..ports)
        .map(|d| {
            let mean = data.codebook.mean(d, t);
            (0..states)
                .map(|j| data.codebook.representative(d, t, j) - mean)
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    let mut term2 = 0.0;
    if !alpha.is_zero() {
        // Support-weighted port marginals and their second moments.
        let mut weighted_marg = vec![vec![0.0; states]; ports];
        for (si, (_, w)) in support.iter().enumerate() {
            for d in 0..ports {
                for j in 0..states {
                    weighted_marg[d][j] += w * marginals[si][d][j];
                }
            }
        }
        let moments: Vec<f64> = (0..ports)
            .map(|d| second_moment(&weighted_marg[d], &centered[d]))
            .collect();

        for d in 0..ports {
            for dp in 0..ports {
                if dp == d {
                    continue;
                }
                let a = alpha.get(d, dp);
                if a == 0.0 {
                    continue;
                }
                let Some(data_rho) = data.correlations.get(d, dp, t) else {
                    continue;
                };
                if moments[d] <= MODEL_VARIANCE_FLOOR || moments[dp] <= MODEL_VARIANCE_FLOOR {
                    continue;
                }
                let mut biv = vec![0.0; states * states];
                for (si, (_, w)) in support.iter().enumerate() {
                    let b = tables[si].bivariate_marginal(d, dp);
                    for (slot, value) in biv.iter_mut().zip(&b) {
                        *slot += w * value;
                    }
                }
                let mut cov = 0.0;
                for j in 0..states {
                    for jp in 0..states {
                        cov += biv[j * states + jp] * centered[d][j] * centered[dp][jp];
                    }
                }
                let model_rho = cov / (moments[d] * moments[dp]).sqrt();
                term2 += a * (data_rho - model_rho).powi(2);
                pairs.push(PairTerm {
                    d,
                    dp,
                    alpha: a,
                    data_rho,
                    model_rho,
                    var_d: moments[d],
                    var_dp: moments[dp],
                });
            }
        }
    }

    Ok(HorizonEval {
        tables,
        marginals,
        centered,
        pairs,
        term1,
        term2,
    })
}

/// Scores a parameter set against the encoded data.
pub fn cost(
    params: &AnsatzParams,
    data: &TrainingData,
    alpha: &AlphaMatrix,
    ctx: &mut EvalContext,
) -> Result<CostBreakdown> {
    data.validate()?;
    if alpha.num_ports() != data.layout.num_ports() {
        return Err(Error::Contract(format!(
            "alpha matrix covers {} ports, data has {}",
            alpha.num_ports(),
            data.layout.num_ports()
        )));
    }
    let mut term1 = 0.0;
    let mut term2 = 0.0;
    for t in data.transitions.horizons() {
        let eval = evaluate_horizon(params, data, alpha, t, ctx)?;
        term1 += eval.term1;
        term2 += eval.term2;
    }
    Ok(CostBreakdown::new(term1, term2))
}

/// The model's conditional next-state distribution for one port, given the
/// joint opening state `from` and horizon `t`.
pub fn model_conditional(
    layout: &CircuitLayout,
    params: &AnsatzParams,
    from: &[usize],
    t: usize,
    port: usize,
    ctx: &mut EvalContext,
) -> Result<Vec<f64>> {
    layout.check_state(from)?;
    if port >= layout.num_ports() {
        return Err(Error::Contract(format!(
            "port {port} out of range for {} ports",
            layout.num_ports()
        )));
    }
    let q = ctx.estimate(layout, params, from, t)?;
    Ok(q.port_marginal(port))
}

/// The model's increment correlation between two ports at one horizon,
/// averaged over the opening-state support; `None` when a port's weighted
/// spread collapses below the variance floor.
pub fn model_correlation(
    params: &AnsatzParams,
    data: &TrainingData,
    t: usize,
    d: usize,
    dp: usize,
    ctx: &mut EvalContext,
) -> Result<Option<f64>> {
    data.validate()?;
    let ports = data.layout.num_ports();
    let states = data.layout.states_per_port();
    if d >= ports || dp >= ports || d == dp {
        return Err(Error::Contract(format!(
            "correlation needs two distinct ports below {ports}, got ({d}, {dp})"
        )));
    }
    if t == 0 || t > data.transitions.num_horizons() {
        return Err(Error::Contract(format!(
            "horizon {t} outside 1..={}",
            data.transitions.num_horizons()
        )));
    }

    let support = data.initial_states.support();
    let mut marg_d = vec![0.0; states];
    let mut marg_dp = vec![0.0; states];
    let mut biv = vec![0.0; states * states];
    for (from, w) in support {
        let q = ctx.estimate(&data.layout, params, from, t)?;
        for (slot, value) in marg_d.iter_mut().zip(q.port_marginal(d)) {
            *slot += w * value;
        }
        for (slot, value) in marg_dp.iter_mut().zip(q.port_marginal(dp)) {
            *slot += w * value;
        }
        for (slot, value) in biv.iter_mut().zip(q.bivariate_marginal(d, dp)) {
            *slot += w * value;
        }
    }

    let centered = |port: usize| -> Vec<f64> {
        let mean = data.codebook.mean(port, t);
        (0..states)
            .map(|j| data.codebook.representative(port, t, j) - mean)
            .collect()
    };
    let a_d = centered(d);
    let a_dp = centered(dp);
    let var_d = second_moment(&marg_d, &a_d);
    let var_dp = second_moment(&marg_dp, &a_dp);
    if var_d <= MODEL_VARIANCE_FLOOR || var_dp <= MODEL_VARIANCE_FLOOR {
        return Ok(None);
    }
    let mut cov = 0.0;
    for j in 0..states {
        for jp in 0..states {
            cov += biv[j * states + jp] * a_d[j] * a_dp[jp];
        }
    }
    Ok(Some(cov / (var_d * var_dp).sqrt()))
}
