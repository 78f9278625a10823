//! What-if simulation: pre-adding bicycles to a port group before the day
//! starts.
//!
//! Generated count paths use virtual-demand semantics — they keep falling
//! below zero where real stock would have run out — so the unmet demand of
//! a path is its depth below zero. Adding `a` bicycles converts up to `a`
//! units of that depth into real rentals (the primary effect). Each rented
//! bicycle then travels to a destination group and, after a configurable
//! lag, raises that group's path; demand the destination would have missed
//! is served instead (the secondary effect).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::PortGroup;
use crate::generate::{generate_ensemble, GenerationMode};
use crate::model::TrainedModel;
use crate::{Error, Result};

/// Where rented-out bicycles go, per source group, and how long they ride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    /// Grid steps between a rental at the source and its arrival at the
    /// destination. Arrivals past the end of the day are dropped.
    pub lag: usize,
    /// Destination weights per source group; each list must sum to 1.
    pub routes: BTreeMap<PortGroup, Vec<(PortGroup, f64)>>,
}

impl Default for RoutingConfig {
    /// The morning-commute pattern: bicycles rented in residential areas
    /// ride mostly to offices, arriving two hours later.
    fn default() -> Self {
        let mut routes = BTreeMap::new();
        routes.insert(
            PortGroup::Residential,
            vec![(PortGroup::Office, 0.9), (PortGroup::Others, 0.1)],
        );
        RoutingConfig { lag: 2, routes }
    }
}

impl RoutingConfig {
    pub fn validate(&self) -> Result<()> {
        for (source, destinations) in &self.routes {
            let mut seen = Vec::new();
            let mut sum = 0.0;
            for &(dest, weight) in destinations {
                if !weight.is_finite() || weight < 0.0 {
                    return Err(Error::Config(format!(
                        "routing weight {weight} for {source} → {dest} must be finite and non-negative"
                    )));
                }
                if dest == *source {
                    return Err(Error::Config(format!(
                        "routing {source} to itself is not supported"
                    )));
                }
                if seen.contains(&dest) {
                    return Err(Error::Config(format!(
                        "duplicate routing destination {dest} for {source}"
                    )));
                }
                seen.push(dest);
                sum += weight;
            }
            if !destinations.is_empty() && (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "routing weights for {source} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Unmet demand of a virtual-count path: how far it dips below zero.
pub fn path_depth(path: &[f64]) -> f64 {
    path.iter().fold(0.0f64, |depth, &x| depth.max(-x))
}

/// Rentals gained at the source by adding `added` bicycles: every unit of
/// depth converts one bicycle into a rental, up to the number added.
pub fn primary_effect(path: &[f64], added: f64) -> f64 {
    added.min(path_depth(path))
}

/// Cumulative departures of the added bicycles over the day. An added
/// bicycle leaves when the path sinks below its previous minimum — that is
/// the moment demand would have gone unserved — so the cumulative count at
/// grid point `t` is the running depth, capped at the stock added.
pub fn departure_staircase(path: &[f64], added: f64) -> Vec<f64> {
    let mut depth_so_far = 0.0f64;
    path.iter()
        .map(|&x| {
            depth_so_far = depth_so_far.max(-x);
            depth_so_far.min(added)
        })
        .collect()
}

/// Outcome of one pre-adding experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    pub added: f64,
    pub target: PortGroup,
    pub port_names: Vec<String>,
    /// Rentals gained at the target, one entry per generated path.
    pub primary_per_path: Vec<f64>,
    pub primary_mean: f64,
    /// Rentals gained at each receiving group (route order preserved).
    pub secondary_per_path: Vec<(PortGroup, Vec<f64>)>,
    pub secondary_mean: Vec<(PortGroup, f64)>,
    /// Primary plus all secondary means.
    pub total_mean: f64,
    /// Ensemble-mean count curves without the intervention, per port.
    pub before_mean: Vec<Vec<f64>>,
    /// Ensemble-mean curves with the added stock and routed arrivals.
    pub after_mean: Vec<Vec<f64>>,
}

/// Generates an ensemble from the model and measures the effect of adding
/// `added` bicycles to `target` before the day starts. Paths start from the
/// model's mean day-start counts and evolve in reinjection mode.
pub fn simulate_addition(
    model: &TrainedModel,
    added: f64,
    target: PortGroup,
    routing: &RoutingConfig,
    n_paths: usize,
    seed: u64,
) -> Result<InterventionResult> {
    if !added.is_finite() || added < 0.0 {
        return Err(Error::Config(format!(
            "added bicycle count must be finite and non-negative, got {added}"
        )));
    }
    routing.validate()?;
    let port_index = |group: PortGroup| {
        model
            .port_names
            .iter()
            .position(|name| name == group.as_str())
            .ok_or_else(|| {
                Error::Config(format!(
                    "model has no series for group {group}; its ports are {:?}",
                    model.port_names
                ))
            })
    };
    let target_index = port_index(target)?;
    let routes = routing.routes.get(&target).cloned().unwrap_or_default();
    let route_indices: Vec<(PortGroup, usize, f64)> = routes
        .iter()
        .map(|&(dest, weight)| Ok((dest, port_index(dest)?, weight)))
        .collect::<Result<_>>()?;

    let ensemble = generate_ensemble(
        model,
        GenerationMode::Reinjection,
        &model.origin_means,
        n_paths,
        seed,
    )?;
    let num_ports = ensemble.num_ports();
    let grid = ensemble.num_steps + 1;

    let mut primary_per_path = Vec::with_capacity(n_paths);
    let mut secondary_per_path: Vec<(PortGroup, Vec<f64>)> = routes
        .iter()
        .map(|&(dest, _)| (dest, Vec::with_capacity(n_paths)))
        .collect();
    let mut before_sum = vec![vec![0.0; grid]; num_ports];
    let mut after_sum = vec![vec![0.0; grid]; num_ports];

    for path in &ensemble.paths {
        let target_path = &path.counts[target_index];
        primary_per_path.push(primary_effect(target_path, added));
        let departures = departure_staircase(target_path, added);

        for port in 0..num_ports {
            for t in 0..grid {
                before_sum[port][t] += path.counts[port][t];
                after_sum[port][t] += path.counts[port][t];
            }
        }
        for t in 0..grid {
            after_sum[target_index][t] += added;
        }

        for (route, &(_, dest_index, weight)) in secondary_per_path.iter_mut().zip(&route_indices)
        {
            let dest_path = &path.counts[dest_index];
            let mut raised_depth = 0.0f64;
            for t in 0..grid {
                let received = if t >= routing.lag {
                    weight * departures[t - routing.lag]
                } else {
                    0.0
                };
                raised_depth = raised_depth.max(-(dest_path[t] + received));
                after_sum[dest_index][t] += received;
            }
            route.1.push(path_depth(dest_path) - raised_depth.max(0.0));
        }
    }

    let mean = |values: &[f64]| values.iter().sum::<f64>() / values.len() as f64;
    let primary_mean = mean(&primary_per_path);
    let secondary_mean: Vec<(PortGroup, f64)> = secondary_per_path
        .iter()
        .map(|(dest, values)| (*dest, mean(values)))
        .collect();
    let total_mean = primary_mean + secondary_mean.iter().map(|&(_, v)| v).sum::<f64>();
    let scale = 1.0 / n_paths as f64;
    let to_mean = |sums: Vec<Vec<f64>>| {
        sums.into_iter()
            .map(|row| row.into_iter().map(|v| v * scale).collect())
            .collect()
    };

    Ok(InterventionResult {
        added,
        target,
        port_names: ensemble.port_names.clone(),
        primary_per_path,
        primary_mean,
        secondary_per_path,
        secondary_mean,
        total_mean,
        before_mean: to_mean(before_sum),
        after_mean: to_mean(after_sum),
    })
}

/// One line of the effect table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub label: String,
    pub mean: f64,
}

/// Tabulates an intervention result: the primary effect at the target, one
/// secondary row per receiving group, and their total. With `decimals set`,
/// each row is rounded first so the total row is exactly the column sum.
pub fn effect_report(result: &InterventionResult, decimals: Option<u32>) -> Vec<EffectRow> {
    let round = |v: f64| match decimals {
        Some(d) => {
            let factor = 10f64.powi(d as i32);
            (v * factor).round() / factor
        }
        None => v,
    };
    let mut rows = vec![EffectRow {
        label: format!("primary ({})", result.target),
        mean: round(result.primary_mean),
    }];
    for &(dest, value) in &result.secondary_mean {
        rows.push(EffectRow {
            label: format!("secondary ({dest})"),
            mean: round(value),
        });
    }
    let total = rows.iter().map(|row| row.mean).sum();
    rows.push(EffectRow {
        label: "total".into(),
        mean: total,
    });
    rows
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::encode::{BinningStrategy, Panel};
    use crate::model::test_fixtures::small_bundle;
    use crate::model::{AlphaMatrix, CostBreakdown, TrainConfig, TrainingData};
    use crate::qsim::test_oracle as dense;
    use crate::ErrorCategory;

    fn model_from(data: &TrainingData, seed: u64) -> TrainedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TrainedModel {
            layout: data.layout.clone(),
            params: dense::random_params(&data.layout, 1, &mut rng),
            codebook: data.codebook.clone(),
            transitions: data.transitions.clone(),
            initial_states: data.initial_states.clone(),
            origin_means: data.origin_means.clone(),
            port_names: data.port_names.clone(),
            cost_history: vec![CostBreakdown::new(0.0, 0.0)],
            config: TrainConfig::new(AlphaMatrix::zeros(data.layout.num_ports())),
        }
    }

    /// A commuter day frozen into a model: every increment cell holds one
    /// value (two identical days), so generated paths reproduce the day
    /// exactly and every effect below is a hand-checkable constant.
    ///
    /// Residential: 12, down 10/h for 10 hours (deep depletion to −88),
    /// then up 10/h. Office: 18, up 5/h to 48, down 8/h to −8 at t = 13,
    /// then up 2/h. Others: 30, easing to 22 and back — never near zero.
    fn commuter_model() -> TrainedModel {
        let mut increments = Vec::new();
        increments.push((12.0, vec![-10.0; 10], vec![10.0; 6]));
        increments.push((18.0, vec![5.0; 6], {
            let mut v = vec![-8.0; 7];
            v.extend([2.0; 3]);
            v
        }));
        increments.push((30.0, vec![-1.0; 8], vec![1.0; 8]));

        let names = vec![
            "Residential".to_string(),
            "Office".to_string(),
            "Others".to_string(),
        ];
        let mut panel = Panel::zeros(names, vec!["d1".into(), "d2".into()], 17);
        for (port, (start, down, up)) in increments.iter().enumerate() {
            for day in 0..2 {
                let mut level = *start;
                panel.set(day, port, 0, level);
                let mut t = 1;
                for &step in down.iter().chain(up) {
                    level += step;
                    panel.set(day, port, t, level);
                    t += 1;
                }
            }
        }
        let data =
            TrainingData::from_panel(&panel, 2, 1, BinningStrategy::EqualFrequency).unwrap();
        model_from(&data, 17)
    }

    #[test]
    fn depth_and_primary_follow_the_min_rule() {
        let path = [5.0, -3.0, -12.0, 4.0];
        assert_eq!(path_depth(&path), 12.0);
        assert_eq!(primary_effect(&path, 100.0), 12.0);
        let deep = [5.0, -150.0, 4.0];
        assert_eq!(primary_effect(&deep, 100.0), 100.0);
        assert_eq!(primary_effect(&[3.0, 1.0, 2.0], 100.0), 0.0);
        assert_eq!(primary_effect(&path, 0.0), 0.0);
    }

    #[test]
    fn staircase_tracks_the_running_shortage() {
        let path = [12.0, 2.0, -8.0, -3.0, -20.0, 5.0];
        assert_eq!(
            departure_staircase(&path, 100.0),
            vec![0.0, 0.0, 8.0, 8.0, 20.0, 20.0]
        );
        assert_eq!(
            departure_staircase(&path, 10.0),
            vec![0.0, 0.0, 8.0, 8.0, 10.0, 10.0]
        );
    }

    #[test]
    fn commuter_scenario_reproduces_the_effect_table() {
        let model = commuter_model();
        let result =
            simulate_addition(&model, 100.0, PortGroup::Residential, &RoutingConfig::default(), 4, 9)
                .unwrap();

        assert_eq!(result.primary_mean, 88.0);
        assert!(result.primary_per_path.iter().all(|&p| p == 88.0));
        assert_eq!(
            result.secondary_mean,
            vec![(PortGroup::Office, 8.0), (PortGroup::Others, 0.0)]
        );
        assert_eq!(result.total_mean, 96.0);

        let report = effect_report(&result, Some(1));
        let values: Vec<(String, f64)> =
            report.into_iter().map(|row| (row.label, row.mean)).collect();
        assert_eq!(
            values,
            vec![
                ("primary (Residential)".to_string(), 88.0),
                ("secondary (Office)".to_string(), 8.0),
                ("secondary (Others)".to_string(), 0.0),
                ("total".to_string(), 96.0),
            ]
        );

        // The after-curves carry the added stock and the routed arrivals.
        for t in 0..17 {
            assert_eq!(result.after_mean[0][t], result.before_mean[0][t] + 100.0);
        }
        let departures = departure_staircase(&result.before_mean[0], 100.0);
        for t in 0..17 {
            let expected = if t >= 2 { 0.9 * departures[t - 2] } else { 0.0 };
            assert!(
                (result.after_mean[1][t] - result.before_mean[1][t] - expected).abs() < 1e-9,
                "office curve at t = {t}"
            );
        }
        // Office bottoms out at −8 before and clears zero after.
        let before_min = result.before_mean[1].iter().cloned().fold(f64::MAX, f64::min);
        let after_min = result.after_mean[1].iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(before_min, -8.0);
        assert!(after_min > 0.0);
    }

    #[test]
    fn never_depleting_targets_gain_nothing() {
        let model = commuter_model();
        let mut routing = RoutingConfig::default();
        routing
            .routes
            .insert(PortGroup::Others, vec![(PortGroup::Office, 1.0)]);
        let result =
            simulate_addition(&model, 50.0, PortGroup::Others, &routing, 3, 11).unwrap();
        assert_eq!(result.primary_mean, 0.0);
        assert_eq!(result.secondary_mean, vec![(PortGroup::Office, 0.0)]);
        assert_eq!(result.total_mean, 0.0);
        // No bicycles depart, so the office curve only shifts at the target.
        for t in 0..17 {
            assert_eq!(result.after_mean[1][t], result.before_mean[1][t]);
            assert_eq!(result.after_mean[2][t], result.before_mean[2][t] + 50.0);
        }
    }

    #[test]
    fn adding_nothing_changes_nothing() {
        let model = commuter_model();
        let result = simulate_addition(
            &model,
            0.0,
            PortGroup::Residential,
            &RoutingConfig::default(),
            2,
            5,
        )
        .unwrap();
        assert_eq!(result.primary_mean, 0.0);
        assert!(result.secondary_mean.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(result.total_mean, 0.0);
        assert_eq!(result.before_mean, result.after_mean);
        let report = effect_report(&result, Some(1));
        assert!(report.iter().all(|row| row.mean == 0.0));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let model = commuter_model();
        let run = || {
            simulate_addition(
                &model,
                30.0,
                PortGroup::Residential,
                &RoutingConfig::default(),
                5,
                123,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_requests_are_rejected_as_config_errors() {
        let model = commuter_model();
        let routing = RoutingConfig::default();

        let err = simulate_addition(&model, -1.0, PortGroup::Residential, &routing, 2, 1)
            .unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Config);

        let mut bad = RoutingConfig::default();
        bad.routes.insert(
            PortGroup::Residential,
            vec![(PortGroup::Office, 0.5), (PortGroup::Others, 0.3)],
        );
        let err = simulate_addition(&model, 10.0, PortGroup::Residential, &bad, 2, 1)
            .unwrap_err();
        assert!(err.to_string().contains("sum to"), "{err}");

        let mut bad = RoutingConfig::default();
        bad.routes
            .insert(PortGroup::Residential, vec![(PortGroup::Residential, 1.0)]);
        assert!(RoutingConfig::validate(&bad).is_err());

        let mut bad = RoutingConfig::default();
        bad.routes.insert(
            PortGroup::Residential,
            vec![(PortGroup::Office, 0.5), (PortGroup::Office, 0.5)],
        );
        assert!(bad.validate().unwrap_err().to_string().contains("duplicate"));

        // A model whose ports are not group-named cannot be targeted.
        let generic = model_from(&small_bundle(3), 3);
        let err = simulate_addition(&generic, 10.0, PortGroup::Residential, &routing, 2, 1)
            .unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Config);
        assert!(err.to_string().contains("Residential"), "{err}");
    }

    proptest! {
        #[test]
        fn primary_effect_invariants(
            raw in prop::collection::vec(-40.0..40.0f64, 2..24),
            dip in 0.1..60.0f64,
            a1 in 0.0..50.0f64,
            a2 in 0.0..50.0f64,
            delta in 0.0..30.0f64,
        ) {
            // Guarantee a below-zero excursion so depth is positive.
            let mut path = raw;
            path.push(-dip);
            let depth = path_depth(&path);
            prop_assert!(depth >= dip);

            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let p_lo = primary_effect(&path, lo);
            let p_hi = primary_effect(&path, hi);
            prop_assert!((0.0..=lo).contains(&p_lo));
            prop_assert!(p_lo <= p_hi, "monotone in the added stock");

            // Deepening the whole path by delta converts exactly the
            // remaining headroom into extra rentals.
            let deeper: Vec<f64> = path.iter().map(|x| x - delta).collect();
            let gained = primary_effect(&deeper, hi) - p_hi;
            prop_assert!((gained - delta.min(hi - p_hi)).abs() < 1e-9);

            // The staircase is non-decreasing, capped, and ends at the
            // primary effect.
            let stair = departure_staircase(&path, hi);
            prop_assert!(stair.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(stair.iter().all(|&s| (0.0..=hi).contains(&s)));
            prop_assert_eq!(*stair.last().unwrap(), p_hi);
        }

        #[test]
        fn integer_additions_gain_at_most_one_rental_each(
            raw in prop::collection::vec(-30.0..30.0f64, 2..16),
        ) {
            // Each further bicycle yields at most as much as the one before:
            // the gain steps are non-increasing in a.
            let gains: Vec<f64> = (0..12)
                .map(|a| primary_effect(&raw, (a + 1) as f64) - primary_effect(&raw, a as f64))
                .collect();
            for pair in gains.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12);
            }
            prop_assert!(gains.iter().all(|&g| (0.0..=1.0 + 1e-12).contains(&g)));
        }
    }
}
