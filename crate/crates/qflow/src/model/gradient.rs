//! Exact differentiation of the objective with parameter-shift rules.
//!
//! The cost depends on the circuit only through the joint outcome tables
//! Q(î, t), so the gradient factors into an adjoint table ∂C/∂Q — computed in
//! closed form from the divergences and the correlation penalty — contracted
//! with ∂Q/∂θ from shifted circuit evaluations.
//!
//! Every basis angle appears twice (once in V, mirrored in V†), so its
//! derivative needs two shift rules — one per occurrence — at ±π/2 each.
//! A phase rate enters through the single diagonal angle φ = rate·t, giving
//! one shift rule scaled by the chain factor t.

use std::f64::consts::FRAC_PI_2;

use crate::qsim::{AngleShift, AngleSide, AnsatzParams, JointDistribution};
use crate::{Error, Result};

use super::cost::{cost, evaluate_horizon, CostBreakdown, EvalContext, HorizonEval};
use super::{AlphaMatrix, TrainingData};

/// Contracts an adjoint table with the difference of two shifted outcome
/// tables.
fn shift_dot(adjoint: &[f64], plus: &JointDistribution, minus: &JointDistribution) -> f64 {
    adjoint
        .iter()
        .zip(plus.probabilities().iter().zip(minus.probabilities()))
        .map(|(&g, (&p, &m))| g * (p - m))
        .sum()
}

/// The closed-form sensitivity ∂C/∂Q(î, t) for every opening state in the
/// support, laid out over joint outcome indices.
fn build_adjoints(eval: &HorizonEval, data: &TrainingData, t: usize) -> Vec<Vec<f64>> {
    let ports = data.layout.num_ports();
    let num_joint = data.layout.num_joint_states();
    let support = data.initial_states.support();

    let mut adjoints = Vec::with_capacity(support.len());
    for (si, (from, w)) in support.iter().enumerate() {
        let table = &eval.tables[si];
        let mut adjoint = vec![0.0; num_joint];
        for (idx, slot) in adjoint.iter_mut().enumerate() {
            let outcome = table.outcome(idx);
            let mut adj = 0.0;
            // d/dQ of Σ_d w·KL(marginal_d ‖ row_d): the marginal is a linear
            // slice of Q, so each joint outcome inherits (ln(p/q) + 1) from
            // every port's divergence. Outcomes with zero marginal mass sit
            // at the flat bottom of p·ln p and contribute nothing.
            for d in 0..ports {
                let p = eval.marginals[si][d][outcome[d]];
                if p > 0.0 {
                    let target = data.transitions.row(d, t, from[d])[outcome[d]];
                    adj += w * ((p / target).ln() + 1.0);
                }
            }
            // d/dQ of the correlation penalty: differentiate ρ = cov/√(v·v')
            // through the weighted bivariate table and both second moments.
            for pair in &eval.pairs {
                let a_d = eval.centered[pair.d][outcome[pair.d]];
                let a_dp = eval.centered[pair.dp][outcome[pair.dp]];
                let scale = (pair.var_d * pair.var_dp).sqrt();
                let drho = w
                    * (a_d * a_dp / scale
                        - 0.5
                            * pair.model_rho
                            * (a_d * a_d / pair.var_d + a_dp * a_dp / pair.var_dp));
                adj += 2.0 * pair.alpha * (pair.model_rho - pair.data_rho) * drho;
            }
            *slot = adj;
        }
        adjoints.push(adjoint);
    }
    adjoints
}

/// Evaluates the cost and its exact gradient over the flat parameter vector
/// `[basis_angles…, phase_rates…]`.
pub fn cost_gradient(
    params: &AnsatzParams,
    data: &TrainingData,
    alpha: &AlphaMatrix,
    ctx: &mut EvalContext,
) -> Result<(CostBreakdown, Vec<f64>)> {
    data.validate()?;
    if alpha.num_ports() != data.layout.num_ports() {
        return Err(Error::Contract(format!(
            "alpha matrix covers {} ports, data has {}",
            alpha.num_ports(),
            data.layout.num_ports()
        )));
    }
    let layout = &data.layout;
    let num_basis = params.basis_angles().len();
    let num_rates = params.phase_rates().len();
    let mut grad = vec![0.0; num_basis + num_rates];
    let mut term1 = 0.0;
    let mut term2 = 0.0;

    for t in data.transitions.horizons() {
        let eval = evaluate_horizon(params, data, alpha, t, ctx)?;
        term1 += eval.term1;
        term2 += eval.term2;
        let adjoints = build_adjoints(&eval, data, t);

        let tf = t as f64;
        let diag = params.diag_angles(tf);
        for ((from, _), adjoint) in data.initial_states.support().iter().zip(&adjoints) {
            if adjoint.iter().all(|&g| g == 0.0) {
                continue;
            }
            for index in 0..num_basis {
                for side in [AngleSide::Forward, AngleSide::Reversed] {
                    let plus = ctx.estimate_with(
                        layout,
                        params,
                        from,
                        &diag,
                        Some(&AngleShift {
                            index,
                            side,
                            delta: FRAC_PI_2,
                        }),
                    )?;
                    let minus = ctx.estimate_with(
                        layout,
                        params,
                        from,
                        &diag,
                        Some(&AngleShift {
                            index,
                            side,
                            delta: -FRAC_PI_2,
                        }),
                    )?;
                    grad[index] += 0.5 * shift_dot(adjoint, &plus, &minus);
                }
            }
            for qubit in 0..num_rates {
                let mut shifted = diag.clone();
                shifted[qubit] = diag[qubit] + FRAC_PI_2;
                let plus = ctx.estimate_with(layout, params, from, &shifted, None)?;
                shifted[qubit] = diag[qubit] - FRAC_PI_2;
                let minus = ctx.estimate_with(layout, params, from, &shifted, None)?;
                grad[num_basis + qubit] += tf * 0.5 * shift_dot(adjoint, &plus, &minus);
            }
        }
    }

    Ok((CostBreakdown::new(term1, term2), grad))
}

/// Central finite differences of the exact cost; the slow reference the
/// parameter-shift gradient is checked against.
pub fn finite_difference_gradient(
    params: &AnsatzParams,
    data: &TrainingData,
    alpha: &AlphaMatrix,
    step: f64,
) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Contract(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let flat = params.to_flat();
    let mut grad = vec![0.0; flat.len()];
    for (k, slot) in grad.iter_mut().enumerate() {
        let mut shifted = flat.clone();
        shifted[k] = flat[k] + step;
        let up = cost(
            &params.from_flat(&shifted)?,
            data,
            alpha,
            &mut EvalContext::exact(),
        )?;
        shifted[k] = flat[k] - step;
        let down = cost(
            &params.from_flat(&shifted)?,
            data,
            alpha,
            &mut EvalContext::exact(),
        )?;
        *slot = (up.total - down.total) / (2.0 * step);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::encode::{
        fit_codebook, BinningStrategy, CorrelationTable, InitialStateDistribution, Panel,
        TransitionTensor,
    };
    use crate::model::cost::model_correlation;
    use crate::model::test_fixtures::{small_bundle, walk_panel};
    use crate::qsim::test_oracle as dense;
    use crate::qsim::{CircuitLayout, EntanglePattern};

    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn parameter_shift_matches_finite_differences() {
        let data = small_bundle(21);
        let alpha = AlphaMatrix::uniform(2, 1.5).unwrap();
        for seed in [1u64, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = dense::random_params(&data.layout, 1, &mut rng);
            let (_, shifted) =
                cost_gradient(&params, &data, &alpha, &mut EvalContext::exact()).unwrap();
            let differenced = finite_difference_gradient(&params, &data, &alpha, 1e-5).unwrap();
            for (k, (a, b)) in shifted.iter().zip(&differenced).enumerate() {
                assert!(
                    rel_err(*a, *b) < 1e-6,
                    "seed {seed}, param {k}: shift rule {a} vs finite difference {b}"
                );
            }
        }
    }

    #[test]
    fn two_layer_gradients_also_match() {
        // A second layer doubles each angle's occurrences across V and V†;
        // the per-occurrence shifts must still add up correctly.
        let data = small_bundle(22);
        let alpha = AlphaMatrix::uniform(2, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = dense::random_params(&data.layout, 2, &mut rng);
        let (_, shifted) =
            cost_gradient(&params, &data, &alpha, &mut EvalContext::exact()).unwrap();
        let differenced = finite_difference_gradient(&params, &data, &alpha, 1e-5).unwrap();
        for (k, (a, b)) in shifted.iter().zip(&differenced).enumerate() {
            assert!(
                rel_err(*a, *b) < 1e-6,
                "param {k}: shift rule {a} vs finite difference {b}"
            );
        }
    }

    #[test]
    fn gradient_vanishes_when_model_reproduces_data() {
        // One port, rows set to the circuit's own conditionals: the objective
        // sits at an exact minimum, so both the cost and its gradient vanish.
        let layout = CircuitLayout::new(1, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = dense::random_params(&layout, 1, &mut rng);
        let horizons = 3;
        let mut ctx = EvalContext::exact();
        let mut probs = Vec::new();
        for t in 1..=horizons {
            for from in 0..2 {
                let q = ctx.estimate(&layout, &params, &[from], t).unwrap();
                probs.extend(q.port_marginal(0));
            }
        }
        let transitions = TransitionTensor::from_probabilities(1, 2, horizons, probs).unwrap();
        let codebook = {
            let panel = walk_panel(6, 1, horizons + 2, 3);
            fit_codebook(&panel.increments().unwrap(), 2, BinningStrategy::EqualFrequency).unwrap()
        };
        let data = TrainingData {
            layout: layout.clone(),
            codebook,
            transitions,
            correlations: CorrelationTable::undefined(1, horizons + 1),
            initial_states: InitialStateDistribution::from_weights(
                1,
                2,
                vec![(vec![0], 0.6), (vec![1], 0.4)],
            )
            .unwrap(),
            origin_means: vec![10.0],
            port_names: vec!["P0".into()],
        };

        let (value, grad) =
            cost_gradient(&params, &data, &AlphaMatrix::zeros(1), &mut ctx).unwrap();
        assert!(
            value.total.abs() < 1e-12,
            "cost {} should vanish at the fitted point",
            value.total
        );
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm} at the fitted point");
    }

    #[test]
    fn matched_correlation_penalty_adds_no_gradient() {
        // When the recorded correlations equal the model's own, the penalty
        // and its gradient are zero, so alpha must not change the answer.
        let mut data = small_bundle(31);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = dense::random_params(&data.layout, 1, &mut rng);

        let mut matched = CorrelationTable::undefined(2, data.codebook.num_steps());
        let mut ctx = EvalContext::exact();
        for t in data.transitions.horizons() {
            let rho = model_correlation(&params, &data, t, 0, 1, &mut ctx)
                .unwrap()
                .expect("defined in this fixture");
            matched.set_pair(0, 1, t, rho);
        }
        data.correlations = matched;

        let alpha = AlphaMatrix::uniform(2, 2.0).unwrap();
        let (with_penalty, g_pen) =
            cost_gradient(&params, &data, &alpha, &mut EvalContext::exact()).unwrap();
        let (_, g_plain) =
            cost_gradient(&params, &data, &AlphaMatrix::zeros(2), &mut EvalContext::exact())
                .unwrap();
        assert!(
            with_penalty.term2 < 1e-18,
            "matched correlations leave no squared gap, got {}",
            with_penalty.term2
        );
        for (k, (a, b)) in g_pen.iter().zip(&g_plain).enumerate() {
            assert!(
                (a - b).abs() < 1e-9,
                "param {k}: {a} with penalty vs {b} without"
            );
        }
    }

    /// Ports swapped everywhere: values, names, and derived statistics.
    fn swap_ports(panel: &Panel) -> Panel {
        let names = vec![
            panel.port_names()[1].clone(),
            panel.port_names()[0].clone(),
        ];
        let mut out = Panel::zeros(names, panel.day_labels().to_vec(), panel.num_times());
        for day in 0..panel.num_days() {
            for port in 0..2 {
                for time in 0..panel.num_times() {
                    out.set(day, 1 - port, time, panel.get(day, port, time));
                }
            }
        }
        out
    }

    #[test]
    fn relabeling_ports_and_ancillas_permutes_the_gradient() {
        // Under the distance-two pattern on four qubits the entangling pairs
        // (0,2) (1,3) (2,0) (3,1) map onto each other when the two port
        // qubits swap together with the two ancillas — the swapped gates act
        // on disjoint wires and commute. Relabeled data plus relabeled
        // parameters must therefore give an identical cost and a gradient
        // permuted the same way.
        let perm = [1usize, 0, 3, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let basis: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let rates: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let params = AnsatzParams::new(
            4,
            vec![EntanglePattern::DistanceTwo],
            basis.clone(),
            rates.clone(),
        )
        .unwrap();
        let mut basis_p = vec![0.0; 12];
        let mut rates_p = vec![0.0; 4];
        for q in 0..4 {
            for s in 0..3 {
                basis_p[perm[q] * 3 + s] = basis[q * 3 + s];
            }
            rates_p[perm[q]] = rates[q];
        }
        let params_p =
            AnsatzParams::new(4, vec![EntanglePattern::DistanceTwo], basis_p, rates_p).unwrap();

        let panel = walk_panel(6, 2, 5, 13);
        let data =
            TrainingData::from_panel(&panel, 2, 2, BinningStrategy::EqualFrequency).unwrap();
        let data_swapped =
            TrainingData::from_panel(&swap_ports(&panel), 2, 2, BinningStrategy::EqualFrequency)
                .unwrap();

        let alpha = AlphaMatrix::uniform(2, 1.0).unwrap();
        let (c0, g0) = cost_gradient(&params, &data, &alpha, &mut EvalContext::exact()).unwrap();
        let (c1, g1) =
            cost_gradient(&params_p, &data_swapped, &alpha, &mut EvalContext::exact()).unwrap();

        assert!(
            (c0.total - c1.total).abs() < 1e-12,
            "costs diverge: {} vs {}",
            c0.total,
            c1.total
        );
        for q in 0..4 {
            for s in 0..3 {
                let a = g0[q * 3 + s];
                let b = g1[perm[q] * 3 + s];
                assert!(
                    (a - b).abs() < 1e-10,
                    "basis angle (qubit {q}, slot {s}): {a} vs {b}"
                );
            }
        }
        for q in 0..4 {
            let a = g0[12 + q];
            let b = g1[12 + perm[q]];
            assert!((a - b).abs() < 1e-10, "phase rate (qubit {q}): {a} vs {b}");
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        let data = small_bundle(9);
        let params = AnsatzParams::zeros(&data.layout, 1).unwrap();
        let err =
            finite_difference_gradient(&params, &data, &AlphaMatrix::zeros(2), 0.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
