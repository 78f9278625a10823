//! The time-parameterized ansatz `U(θ, t) = V · D(θ_φ · t) · V†`.
//!
//! `V` is a hardware-efficient basis change: per layer, an Euler rotation
//! triple RZ·RY·RZ on every qubit followed by a ring of CNOTs. `D` applies a
//! Z rotation on each qubit whose angle grows linearly in the evolution time
//! `t`, so a single parameter set describes the dynamics at every horizon.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layout::CircuitLayout;
use super::state::StateVector;
use crate::{Error, Result};

/// CNOT arrangement used by one entangling layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglePattern {
    /// CNOT(q, q+1 mod n) for every qubit q.
    AdjacentRing,
    /// CNOT(q, q+2 mod n) for every qubit q; empty below three qubits.
    DistanceTwo,
}

impl EntanglePattern {
    /// The (control, target) sequence this pattern applies on `n` qubits.
    pub fn cnot_sequence(self, n: usize) -> Vec<(usize, usize)> {
        let offset = match self {
            EntanglePattern::AdjacentRing => 1,
            EntanglePattern::DistanceTwo => 2,
        };
        if n <= offset {
            return Vec::new();
        }
        (0..n).map(|q| (q, (q + offset) % n)).collect()
    }

    /// Default pattern for layer `layer` (rings first, then distance-two).
    pub fn default_for_layer(layer: usize) -> Self {
        if layer % 2 == 0 {
            EntanglePattern::AdjacentRing
        } else {
            EntanglePattern::DistanceTwo
        }
    }
}

/// Identifies one occurrence of a basis angle inside the circuit: every basis
/// angle appears once in `V` and once (negated) in `V†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSide {
    /// The occurrence inside `V` (applied after the diagonal).
    Forward,
    /// The occurrence inside `V†` (applied before the diagonal).
    Reversed,
}

/// An additive offset applied to a single basis-angle occurrence during one
/// evolution; the mechanism behind parameter-shift differentiation.
#[derive(Debug, Clone, Copy)]
pub struct AngleShift {
    pub index: usize,
    pub side: AngleSide,
    pub delta: f64,
}

/// Full parameter set of the ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    /// Euler angles of `V`, flattened as `[layer][qubit][rz, ry, rz]`.
    basis_angles: Vec<f64>,
    /// Per-qubit phase rates; qubit q's diagonal angle at time t is
    /// `phase_rates[q] · t`.
    phase_rates: Vec<f64>,
    /// Entangling pattern of each layer.
    patterns: Vec<EntanglePattern>,
    /// Number of qubits the parameters are sized for.
    num_qubits: usize,
}

impl AnsatzParams {
    /// Builds a parameter set from explicit angles.
    pub fn new(
        num_qubits: usize,
        patterns: Vec<EntanglePattern>,
        basis_angles: Vec<f64>,
        phase_rates: Vec<f64>,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        let expected = patterns.len() * num_qubits * 3;
        if basis_angles.len() != expected {
            return Err(Error::Config(format!(
                "expected {expected} basis angles for {} layers on {num_qubits} qubits, got {}",
                patterns.len(),
                basis_angles.len()
            )));
        }
        if phase_rates.len() != num_qubits {
            return Err(Error::Config(format!(
                "expected {num_qubits} phase rates, got {}",
                phase_rates.len()
            )));
        }
        Ok(AnsatzParams {
            basis_angles,
            phase_rates,
            patterns,
            num_qubits,
        })
    }

    /// All-zero parameters (identity circuit at every t).
    pub fn zeros(layout: &CircuitLayout, num_layers: usize) -> Result<Self> {
        let n = layout.total_qubits();
        AnsatzParams::new(
            n,
            (0..num_layers.max(1))
                .map(EntanglePattern::default_for_layer)
                .collect(),
            vec![0.0; num_layers.max(1) * n * 3],
            vec![0.0; n],
        )
    }

    /// Random initialization with every angle drawn uniformly from
    /// [-0.1, 0.1], a small-perturbation start that keeps early measurement
    /// distributions close to deterministic transitions.
    pub fn random_init(
        layout: &CircuitLayout,
        num_layers: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let n = layout.total_qubits();
        let layers = num_layers.max(1);
        let basis_angles = (0..layers * n * 3)
            .map(|_| rng.gen_range(-0.1..0.1))
            .collect();
        let phase_rates = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        AnsatzParams::new(
            n,
            (0..layers).map(EntanglePattern::default_for_layer).collect(),
            basis_angles,
            phase_rates,
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[EntanglePattern] {
        &self.patterns
    }

    pub fn basis_angles(&self) -> &[f64] {
        &self.basis_angles
    }

    pub fn phase_rates(&self) -> &[f64] {
        &self.phase_rates
    }

    /// Total number of free parameters (basis angles + phase rates).
    pub fn num_parameters(&self) -> usize {
        self.basis_angles.len() + self.phase_rates.len()
    }

    /// Flattened view `[basis_angles…, phase_rates…]` used by the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.basis_angles.clone();
        flat.extend_from_slice(&self.phase_rates);
        flat
    }

    /// Rebuilds parameters from the flattened optimizer layout.
    pub fn from_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_parameters() {
            return Err(Error::Contract(format!(
                "expected {} flattened parameters, got {}",
                self.num_parameters(),
                flat.len()
            )));
        }
        let (basis, rates) = flat.split_at(self.basis_angles.len());
        AnsatzParams::new(
            self.num_qubits,
            self.patterns.clone(),
            basis.to_vec(),
            rates.to_vec(),
        )
    }

    /// Applies `V` (forward) or `V†` (reversed), optionally offsetting one
    /// angle occurrence.
    fn apply_basis_change(&self, state: &mut StateVector, side: AngleSide, shift: Option<&AngleShift>) {
        let n = self.num_qubits;
        let delta_for = |flat_index: usize| -> f64 {
            match shift {
                Some(s) if s.index == flat_index && s.side == side => s.delta,
                _ => 0.0,
            }
        };
        match side {
            AngleSide::Forward => {
                for (layer, pattern) in self.patterns.iter().enumerate() {
                    for qubit in 0..n {
                        let base = (layer * n + qubit) * 3;
                        state.apply_rz(qubit, self.basis_angles[base] + delta_for(base));
                        state.apply_ry(qubit, self.basis_angles[base + 1] + delta_for(base + 1));
                        state.apply_rz(qubit, self.basis_angles[base + 2] + delta_for(base + 2));
                    }
                    for (control, target) in pattern.cnot_sequence(n) {
                        state.apply_cnot(control, target);
                    }
                }
            }
            AngleSide::Reversed => {
                for (layer, pattern) in self.patterns.iter().enumerate().rev() {
                    for (control, target) in pattern.cnot_sequence(n).into_iter().rev() {
                        state.apply_cnot(control, target);
                    }
                    for qubit in (0..n).rev() {
                        let base = (layer * n + qubit) * 3;
                        state.apply_rz(qubit, -(self.basis_angles[base + 2] + delta_for(base + 2)));
                        state.apply_ry(qubit, -(self.basis_angles[base + 1] + delta_for(base + 1)));
                        state.apply_rz(qubit, -(self.basis_angles[base] + delta_for(base)));
                    }
                }
            }
        }
    }

    /// Applies the diagonal block with explicit per-qubit angles.
    fn apply_diagonal(&self, state: &mut StateVector, angles: &[f64]) {
        for (qubit, &angle) in angles.iter().enumerate() {
            state.apply_rz(qubit, angle);
        }
    }

    /// Core evolution routine: `V · diag(angles) · V†` with an optional shift
    /// on one basis-angle occurrence. `diag_angles` are the already-scaled
    /// per-qubit Z angles.
    pub(crate) fn evolve_with(
        &self,
        state: &mut StateVector,
        diag_angles: &[f64],
        shift: Option<&AngleShift>,
    ) {
        debug_assert_eq!(state.num_qubits(), self.num_qubits);
        debug_assert_eq!(diag_angles.len(), self.num_qubits);
        self.apply_basis_change(state, AngleSide::Reversed, shift);
        self.apply_diagonal(state, diag_angles);
        self.apply_basis_change(state, AngleSide::Forward, shift);
    }

    /// Per-qubit diagonal angles at evolution time `t`.
    pub(crate) fn diag_angles(&self, t: f64) -> Vec<f64> {
        self.phase_rates.iter().map(|r| r * t).collect()
    }
}

/// Evolves `state` in place under `U(θ, t)`.
pub fn evolve(state: &mut StateVector, params: &AnsatzParams, t: f64) -> Result<()> {
    if state.num_qubits() != params.num_qubits() {
        return Err(Error::Contract(format!(
            "state has {} qubits, parameters expect {}",
            state.num_qubits(),
            params.num_qubits()
        )));
    }
    params.evolve_with(state, &params.diag_angles(t), None);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::test_oracle as dense;
    use crate::qsim::test_oracle::{random_params, random_state};
    use crate::qsim::{prepare_from_state, CircuitLayout};

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_sequences() {
        assert_eq!(
            EntanglePattern::AdjacentRing.cnot_sequence(3),
            vec![(0, 1), (1, 2), (2, 0)]
        );
        assert_eq!(
            EntanglePattern::DistanceTwo.cnot_sequence(4),
            vec![(0, 2), (1, 3), (2, 0), (3, 1)]
        );
        assert!(EntanglePattern::AdjacentRing.cnot_sequence(1).is_empty());
        assert!(EntanglePattern::DistanceTwo.cnot_sequence(2).is_empty());
    }

    #[test]
    fn evolve_at_time_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (ports, states, ancillas) in [(1, 2, 0), (2, 2, 1), (1, 4, 2), (3, 2, 2)] {
            let layout = CircuitLayout::new(ports, states, ancillas).unwrap();
            let params = random_params(&layout, 2, &mut rng);
            let original = random_state(layout.total_qubits(), &mut rng);
            let mut state = original.clone();
            evolve(&mut state, &params, 0.0).unwrap();
            dense::assert_close(state.amplitudes(), original.amplitudes(), 1e-12);
        }
    }

    #[test]
    fn zero_basis_angles_preserve_basis_probabilities() {
        // With V = identity the circuit is purely diagonal: basis states only
        // pick up phases, so measurement statistics are the identity map.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let layout = CircuitLayout::new(2, 2, 1).unwrap();
        let n = layout.total_qubits();
        for _ in 0..20 {
            let params = AnsatzParams::new(
                n,
                vec![EntanglePattern::AdjacentRing],
                vec![0.0; n * 3],
                (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            )
            .unwrap();
            let index = rng.gen_range(0..1usize << n);
            let mut state = StateVector::basis(n, index);
            let t = rng.gen_range(0.0..8.0);
            evolve(&mut state, &params, t).unwrap();
            for (i, p) in state.probabilities().iter().enumerate() {
                let expected = if i == index { 1.0 } else { 0.0 };
                assert!((p - expected).abs() < 1e-12, "index {i}: {p}");
            }
        }
    }

    #[test]
    fn matches_dense_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (ports, states, ancillas, layers) in
            [(1, 2, 0, 1), (1, 2, 2, 1), (2, 2, 1, 2), (1, 4, 1, 2), (3, 2, 2, 1)]
        {
            let layout = CircuitLayout::new(ports, states, ancillas).unwrap();
            let params = random_params(&layout, layers, &mut rng);
            let t = rng.gen_range(0.0..6.0);
            let matrix = dense::ansatz_matrix(&params, t);
            for _ in 0..3 {
                let original = random_state(layout.total_qubits(), &mut rng);
                let reference = dense::apply_matrix(&matrix, original.amplitudes());
                let mut state = original;
                evolve(&mut state, &params, t).unwrap();
                dense::assert_close(state.amplitudes(), &reference, 1e-10);
            }
        }
    }

    #[test]
    fn single_qubit_transition_probability_is_sin_squared() {
        // One qubit, V = RY(π/2): U(θ, t) = RY(π/2)·RZ(φt)·RY(-π/2) sends
        // |0⟩ to |1⟩ with probability sin²(φt/2).
        let layout = CircuitLayout::new(1, 2, 0).unwrap();
        let rate = std::f64::consts::FRAC_PI_2;
        let params = AnsatzParams::new(
            1,
            vec![EntanglePattern::AdjacentRing],
            vec![0.0, std::f64::consts::FRAC_PI_2, 0.0],
            vec![rate],
        )
        .unwrap();
        for t in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let mut state = prepare_from_state(&layout, &[0]).unwrap();
            evolve(&mut state, &params, t).unwrap();
            let expected = (0.5 * rate * t).sin().powi(2);
            assert!(
                (state.probabilities()[1] - expected).abs() < 1e-12,
                "t = {t}"
            );
        }
    }

    #[test]
    fn evolution_times_compose() {
        // U(t₁)·U(t₂) = U(t₁ + t₂): the conjugating V cancels internally.
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let layout = CircuitLayout::new(2, 2, 2).unwrap();
        let params = random_params(&layout, 2, &mut rng);
        let original = random_state(layout.total_qubits(), &mut rng);

        let mut two_step = original.clone();
        evolve(&mut two_step, &params, 1.25).unwrap();
        evolve(&mut two_step, &params, 2.5).unwrap();

        let mut one_step = original;
        evolve(&mut one_step, &params, 3.75).unwrap();
        dense::assert_close(two_step.amplitudes(), one_step.amplitudes(), 1e-10);
    }

    #[test]
    fn shifted_occurrence_offsets_one_angle() {
        // A forward-side shift must reproduce evolution with the angle edited
        // in V only; verified against the dense oracle built from two
        // different parameter sets.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let layout = CircuitLayout::new(2, 2, 1).unwrap();
        let params = random_params(&layout, 2, &mut rng);
        let t = 1.7;
        let index = 7;
        let delta = 0.9;

        let mut shifted_angles = params.basis_angles().to_vec();
        shifted_angles[index] += delta;
        let edited = AnsatzParams::new(
            params.num_qubits(),
            params.patterns().to_vec(),
            shifted_angles,
            params.phase_rates().to_vec(),
        )
        .unwrap();

        // Forward-only shift: V uses the edited angle, V† the original.
        let v_edited = dense::basis_change_matrix(&edited);
        let v_original = dense::basis_change_matrix(&params);
        let diag = dense::diagonal_matrix(&params, t);
        let reference_matrix = dense::matmul(
            &v_edited,
            &dense::matmul(&diag, &dense::conj_transpose(&v_original)),
        );

        let original = random_state(layout.total_qubits(), &mut rng);
        let reference = dense::apply_matrix(&reference_matrix, original.amplitudes());

        let mut state = original;
        params.evolve_with(
            &mut state,
            &params.diag_angles(t),
            Some(&AngleShift {
                index,
                side: AngleSide::Forward,
                delta,
            }),
        );
        dense::assert_close(state.amplitudes(), &reference, 1e-10);
    }

    proptest! {
        #[test]
        fn evolution_preserves_norm(seed in 0u64..500, t in 0.0f64..16.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layout = CircuitLayout::new(2, 2, 1).unwrap();
            let params = random_params(&layout, 2, &mut rng);
            let mut state = random_state(layout.total_qubits(), &mut rng);
            evolve(&mut state, &params, t).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn forward_then_reversed_is_identity(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layout = CircuitLayout::new(1, 4, 1).unwrap();
            let params = random_params(&layout, 2, &mut rng);
            let original = random_state(layout.total_qubits(), &mut rng);
            let mut state = original.clone();
            params.apply_basis_change(&mut state, AngleSide::Forward, None);
            params.apply_basis_change(&mut state, AngleSide::Reversed, None);
            for (a, b) in state.amplitudes().iter().zip(original.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
