//! Qubit register layout: one register per port plus work ancillas.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Upper bound on simulated qubits; 2^20 complex amplitudes (~16 MiB) keeps
/// exact simulation comfortably in memory and time budgets.
pub const MAX_QUBITS: usize = 20;

/// Maximum number of ancilla qubits supported by the ansatz configuration.
pub const MAX_ANCILLAS: usize = 4;

/// Assignment of qubits to ports.
///
/// Each port owns `log2(states_per_port)` adjacent qubits; ports are laid out
/// first (port 0 owning the most significant qubits), followed by
/// `num_ancillas` work qubits in the least significant positions. Within a
/// port the first qubit is the most significant bit of the port's state, so a
/// joint state `(s_0, …, s_{D-1})` with ancillas cleared sits at basis index
/// `(((s_0 · N + s_1) · N + …) · N + s_{D-1}) · 2^A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitLayout {
    num_ports: usize,
    states_per_port: usize,
    num_ancillas: usize,
}

impl CircuitLayout {
    /// Validates and builds a layout.
    ///
    /// `states_per_port` must be a power of two (≥ 2) so each port maps onto
    /// whole qubits; the full register must fit in [`MAX_QUBITS`].
    pub fn new(num_ports: usize, states_per_port: usize, num_ancillas: usize) -> Result<Self> {
        if num_ports == 0 {
            return Err(Error::Config("layout needs at least one port".into()));
        }
        if states_per_port < 2 || !states_per_port.is_power_of_two() {
            return Err(Error::Config(format!(
                "states per port must be a power of two >= 2, got {states_per_port}"
            )));
        }
        if num_ancillas > MAX_ANCILLAS {
            return Err(Error::Config(format!(
                "at most {MAX_ANCILLAS} ancillas supported, got {num_ancillas}"
            )));
        }
        let layout = CircuitLayout {
            num_ports,
            states_per_port,
            num_ancillas,
        };
        let total = layout.total_qubits();
        if total > MAX_QUBITS {
            return Err(Error::Config(format!(
                "layout requires {total} qubits, exceeding the {MAX_QUBITS}-qubit simulator bound"
            )));
        }
        Ok(layout)
    }

    /// Number of ports (independent registers).
    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    /// Size of each port's state alphabet.
    pub fn states_per_port(&self) -> usize {
        self.states_per_port
    }

    /// Number of ancilla qubits appended after the port registers.
    pub fn num_ancillas(&self) -> usize {
        self.num_ancillas
    }

    /// Qubits per port register.
    pub fn qubits_per_port(&self) -> usize {
        self.states_per_port.trailing_zeros() as usize
    }

    /// Total qubits simulated.
    pub fn total_qubits(&self) -> usize {
        self.num_ports * self.qubits_per_port() + self.num_ancillas
    }

    /// Number of distinct joint states over all ports (ancillas excluded).
    pub fn num_joint_states(&self) -> usize {
        self.states_per_port.pow(self.num_ports as u32)
    }

    /// Flat index of a joint state in port-major order.
    pub fn joint_index(&self, state: &[usize]) -> usize {
        debug_assert_eq!(state.len(), self.num_ports);
        state.iter().fold(0, |acc, &s| {
            debug_assert!(s < self.states_per_port);
            acc * self.states_per_port + s
        })
    }

    /// Inverse of [`joint_index`](Self::joint_index).
    pub fn joint_state(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.num_joint_states());
        let mut state = vec![0; self.num_ports];
        for slot in state.iter_mut().rev() {
            *slot = index % self.states_per_port;
            index /= self.states_per_port;
        }
        state
    }

    /// Basis-vector index of a joint state with all ancillas in |0⟩.
    pub fn basis_index(&self, state: &[usize]) -> usize {
        self.joint_index(state) << self.num_ancillas
    }

    /// Validates a joint state against this layout.
    pub fn check_state(&self, state: &[usize]) -> Result<()> {
        if state.len() != self.num_ports {
            return Err(Error::Contract(format!(
                "joint state has {} ports, layout expects {}",
                state.len(),
                self.num_ports
            )));
        }
        for (d, &s) in state.iter().enumerate() {
            if s >= self.states_per_port {
                return Err(Error::Contract(format!(
                    "port {d} state {s} out of range 0..{}",
                    self.states_per_port
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_qubits() {
        let layout = CircuitLayout::new(3, 2, 2).unwrap();
        assert_eq!(layout.qubits_per_port(), 1);
        assert_eq!(layout.total_qubits(), 5);
        assert_eq!(layout.num_joint_states(), 8);

        let layout = CircuitLayout::new(2, 4, 1).unwrap();
        assert_eq!(layout.qubits_per_port(), 2);
        assert_eq!(layout.total_qubits(), 5);
        assert_eq!(layout.num_joint_states(), 16);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(CircuitLayout::new(0, 2, 0).is_err());
        assert!(CircuitLayout::new(1, 3, 0).is_err());
        assert!(CircuitLayout::new(1, 1, 0).is_err());
        assert!(CircuitLayout::new(1, 2, 5).is_err());
        // 11 ports × 2 qubits = 22 qubits: over the simulator bound.
        assert!(CircuitLayout::new(11, 4, 0).is_err());
        // Exactly 20 qubits is allowed.
        assert!(CircuitLayout::new(10, 4, 0).is_ok());
    }

    #[test]
    fn joint_index_round_trip() {
        let layout = CircuitLayout::new(3, 4, 1).unwrap();
        for idx in 0..layout.num_joint_states() {
            let state = layout.joint_state(idx);
            assert_eq!(layout.joint_index(&state), idx);
        }
    }

    #[test]
    fn basis_index_places_ancillas_low() {
        // Three one-qubit ports with two ancillas: joint state (1, 0, 1)
        // occupies bit pattern 10100 = 20.
        let layout = CircuitLayout::new(3, 2, 2).unwrap();
        assert_eq!(layout.basis_index(&[1, 0, 1]), 0b10100);
    }
}
