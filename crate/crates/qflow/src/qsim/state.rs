//! Exact statevector simulation with in-place gate kernels.

use num_complex::Complex64;

use super::layout::CircuitLayout;
use crate::{Error, Result};

/// Full statevector over `num_qubits` qubits.
///
/// Qubit `q` corresponds to bit `num_qubits - 1 - q` of the amplitude index,
/// i.e. qubit 0 is the most significant bit. This matches
/// [`CircuitLayout`]'s port-major basis indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state |0…0⟩.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    /// The computational basis state |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        debug_assert!(index < 1 << num_qubits);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    /// Builds a statevector from raw amplitudes (must have power-of-two
    /// length). Intended for tests and oracles; no normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::Contract(format!(
                "amplitude vector length {} is not a power of two",
                amps.len()
            )));
        }
        Ok(StateVector {
            num_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Squared norm; 1 for any state reached purely through unitaries.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Measurement probabilities over the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Bit mask isolating qubit `q` in an amplitude index.
    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        debug_assert!(qubit < self.num_qubits);
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies an arbitrary single-qubit gate `[[u00, u01], [u10, u11]]`.
    pub fn apply_single(&mut self, qubit: usize, u: [Complex64; 4]) {
        let step = self.mask(qubit);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + step {
                let high = low | step;
                let a = self.amps[low];
                let b = self.amps[high];
                self.amps[low] = u[0] * a + u[1] * b;
                self.amps[high] = u[2] * a + u[3] * b;
            }
            base += step << 1;
        }
    }

    /// Z-axis rotation by `angle`: diag(e^{-iθ/2}, e^{+iθ/2}).
    pub fn apply_rz(&mut self, qubit: usize, angle: f64) {
        let half = 0.5 * angle;
        let phase_lo = Complex64::from_polar(1.0, -half);
        let phase_hi = Complex64::from_polar(1.0, half);
        let step = self.mask(qubit);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + step {
                let high = low | step;
                self.amps[low] *= phase_lo;
                self.amps[high] *= phase_hi;
            }
            base += step << 1;
        }
    }

    /// Y-axis rotation by `angle`:
    /// [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]].
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) {
        let half = 0.5 * angle;
        let (sin, cos) = half.sin_cos();
        let step = self.mask(qubit);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + step {
                let high = low | step;
                let a = self.amps[low];
                let b = self.amps[high];
                self.amps[low] = cos * a - sin * b;
                self.amps[high] = sin * a + cos * b;
            }
            base += step << 1;
        }
    }

    /// Controlled-NOT with the given control and target qubits.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        debug_assert_ne!(control, target);
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for idx in 0..self.amps.len() {
            // Visit each swapped pair once, from its target-clear member.
            if idx & cmask != 0 && idx & tmask == 0 {
                self.amps.swap(idx, idx | tmask);
            }
        }
    }
}

/// Prepares the computational basis state encoding `from` under `layout`,
/// with all ancillas in |0⟩.
pub fn prepare_from_state(layout: &CircuitLayout, from: &[usize]) -> Result<StateVector> {
    layout.check_state(from)?;
    Ok(StateVector::basis(
        layout.total_qubits(),
        layout.basis_index(from),
    ))
}
