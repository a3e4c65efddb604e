//! Shared fixtures for the benchmarks.

use qcrack::{CircuitSpec, QNodeInput};

/// Deterministic, non-degenerate inputs for `spec`.
pub fn fixture_input(spec: &CircuitSpec) -> QNodeInput {
    QNodeInput {
        features: (0..spec.num_qubits)
            .map(|i| 0.3 + 0.17 * i as f64)
            .collect(),
        params: (0..spec.num_params())
            .map(|j| -0.8 + 0.11 * j as f64)
            .collect(),
    }
}
