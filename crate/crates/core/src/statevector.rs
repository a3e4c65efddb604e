//! Dense statevector simulation.
//!
//! Basis index `i` of a `Q`-qubit register encodes `|b_{Q-1} ... b_1 b_0>`
//! with qubit 0 as the least-significant bit. Printed bitstrings follow the
//! same order, so the leftmost character is qubit `Q-1`. Under this mapping
//! the textbook ket `|10>` with "first qubit = control" is basis index 2,
//! i.e. qubit 1 holds the control.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Complex = Complex64;

pub const DEFAULT_MAX_QUBITS: usize = 20;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// 2x2 operator acting on one wire, row-major `[[m00, m01], [m10, m11]]`.
pub type Matrix2 = [[Complex; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    X {
        target: usize,
    },
    H {
        target: usize,
    },
    Ry {
        target: usize,
        theta: f64,
    },
    Cx {
        control: usize,
        target: usize,
    },
    Cry {
        control: usize,
        target: usize,
        theta: f64,
    },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::X { target }
            | Gate::H { target }
            | Gate::Ry { target, .. }
            | Gate::Cx { target, .. }
            | Gate::Cry { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cx { control, .. } | Gate::Cry { control, .. } => Some(control),
            _ => None,
        }
    }

    /// Rotation angle for the parametric kinds.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { theta, .. } | Gate::Cry { theta, .. } => Some(theta),
            _ => None,
        }
    }

    /// The operator applied to the target wire (conditionally, for controlled kinds).
    pub fn target_matrix(&self) -> Matrix2 {
        match *self {
            Gate::X { .. } | Gate::Cx { .. } => [[ZERO, ONE], [ONE, ZERO]],
            Gate::H { .. } => {
                let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Ry { theta, .. } | Gate::Cry { theta, .. } => ry_matrix(theta),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { target, theta } => Gate::Ry {
                target,
                theta: -theta,
            },
            Gate::Cry {
                control,
                target,
                theta,
            } => Gate::Cry {
                control,
                target,
                theta: -theta,
            },
            g => g,
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= num_qubits {
            return Err(Error::arg(format!(
                "{self}: target {target} out of range for {num_qubits} qubits"
            )));
        }
        if let Some(control) = self.control() {
            if control >= num_qubits {
                return Err(Error::arg(format!(
                    "{self}: control {control} out of range for {num_qubits} qubits"
                )));
            }
            if control == target {
                return Err(Error::arg(format!("{self}: control equals target")));
            }
        }
        if let Some(theta) = self.angle() {
            if !theta.is_finite() {
                return Err(Error::arg(format!("{self}: non-finite angle")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X { target } => write!(f, "X q{target}"),
            Gate::H { target } => write!(f, "H q{target}"),
            Gate::Ry { target, theta } => write!(f, "RY({theta:.6}) q{target}"),
            Gate::Cx { control, target } => write!(f, "CX q{control}->q{target}"),
            Gate::Cry {
                control,
                target,
                theta,
            } => write!(f, "CRY({theta:.6}) q{control}->q{target}"),
        }
    }
}

pub fn ry_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex::new(c, 0.0), Complex::new(-s, 0.0)],
        [Complex::new(s, 0.0), Complex::new(c, 0.0)],
    ]
}

/// Derivative of [`ry_matrix`] with respect to `theta`.
pub fn ry_derivative(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex::new(-s / 2.0, 0.0), Complex::new(-c / 2.0, 0.0)],
        [Complex::new(c / 2.0, 0.0), Complex::new(-s / 2.0, 0.0)],
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex>,
}

/// JSON debug layout: `{"num_qubits": Q, "amps": [[re, im], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
struct StateDump {
    num_qubits: usize,
    amps: Vec<[f64; 2]>,
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::zero_with_cap(num_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_with_cap(num_qubits: usize, cap: usize) -> Result<Self> {
        Self::basis_with_cap(num_qubits, 0, cap)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        Self::basis_with_cap(num_qubits, index, DEFAULT_MAX_QUBITS)
    }

    fn basis_with_cap(num_qubits: usize, index: usize, cap: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > cap {
            return Err(Error::Capacity {
                requested: num_qubits,
                cap,
            });
        }
        let len = 1usize << num_qubits;
        if index >= len {
            return Err(Error::arg(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; len];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps explicit amplitudes; they must be finite and normalised within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: num_qubits,
                cap: DEFAULT_MAX_QUBITS,
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::data("non-finite amplitude"));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::data(format!("state norm {norm} is not 1")));
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amps(&self) -> &[Complex] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::X { target } => self.swap_pairs(target, None),
            Gate::Cx { control, target } => self.swap_pairs(target, Some(control)),
            Gate::Ry { target, theta } => self.rotate_y(target, None, theta),
            Gate::Cry {
                control,
                target,
                theta,
            } => self.rotate_y(target, Some(control), theta),
            Gate::H { target } => self.apply_matrix(target, None, &gate.target_matrix()),
        }
    }

    /// Applies an arbitrary (not necessarily unitary) 2x2 operator to `target`,
    /// restricted to basis states where `control` is set.
    pub(crate) fn apply_matrix(&mut self, target: usize, control: Option<usize>, m: &Matrix2) {
        self.for_each_pair(target, control, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = m[0][0] * x + m[0][1] * y;
            *a1 = m[1][0] * x + m[1][1] * y;
        });
    }

    pub(crate) fn apply_z(&mut self, qubit: usize) {
        let mask = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    fn rotate_y(&mut self, target: usize, control: Option<usize>, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        self.for_each_pair(target, control, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = x * c - y * s;
            *a1 = x * s + y * c;
        });
    }

    fn swap_pairs(&mut self, target: usize, control: Option<usize>) {
        self.for_each_pair(target, control, std::mem::swap);
    }

    /// Visits every amplitude pair `(i, i | 1 << target)` with the target bit of
    /// `i` clear, skipping pairs whose control bit is clear.
    #[inline]
    fn for_each_pair(
        &mut self,
        target: usize,
        control: Option<usize>,
        mut f: impl FnMut(&mut Complex, &mut Complex),
    ) {
        let stride = 1usize << target;
        let control_mask = control.map_or(0, |c| 1usize << c);
        for (b, block) in self.amps.chunks_exact_mut(stride << 1).enumerate() {
            let base = b * (stride << 1);
            // A control above the target is constant across the block.
            if control_mask > stride && base & control_mask == 0 {
                continue;
            }
            let (lo, hi) = block.split_at_mut(stride);
            for (j, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if control_mask != 0 && control_mask < stride && j & control_mask == 0 {
                    continue;
                }
                f(a0, a1);
            }
        }
    }

    pub fn z_expectation(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }

    /// `<Z_q>` for every wire, in qubit order.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.num_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, zq) in z.iter_mut().enumerate() {
                if (i >> q) & 1 == 0 {
                    *zq += p;
                } else {
                    *zq -= p;
                }
            }
        }
        z
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::arg(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let dump = StateDump {
            num_qubits: self.num_qubits,
            amps: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string(&dump).expect("state dump is always serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: StateDump = serde_json::from_str(text)?;
        let state = Self::from_amplitudes(
            dump.amps
                .iter()
                .map(|&[re, im]| Complex::new(re, im))
                .collect(),
        )?;
        if state.num_qubits != dump.num_qubits {
            return Err(Error::data(format!(
                "num_qubits {} does not match {} amplitudes",
                dump.num_qubits,
                state.amps.len()
            )));
        }
        Ok(state)
    }
}

pub fn zero_state(num_qubits: usize) -> Result<StateVector> {
    StateVector::zero(num_qubits)
}

pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

pub fn z_expectation(state: &StateVector, qubit: usize) -> Result<f64> {
    state.z_expectation(qubit)
}

/// Measurement outcomes keyed by bitstring (qubit `Q-1` leftmost).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl ShotCounts {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Result<Self> {
        let shots: u64 = counts.values().sum();
        if shots == 0 {
            return Err(Error::data("shot counts are empty"));
        }
        Ok(Self { shots, counts })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }
}

pub fn bitstring(index: usize, num_qubits: usize) -> String {
    format!("{index:0num_qubits$b}")
}

/// Draws `shots` measurements of the full register from the seeded shot stream.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::arg("shots must be >= 1"));
    }
    let mut rng = rng::stream(seed, rng::STREAM_SHOTS);
    let probs = state.probabilities();
    let total: f64 = probs.iter().sum();
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);

    // Sequential conditional binomials: outcome i receives Bin(remaining, p_i / p_rest).
    let mut counts = BTreeMap::new();
    let mut remaining = shots;
    let mut mass_left = total;
    for (i, &p) in probs.iter().enumerate().take(last_nonzero + 1) {
        if remaining == 0 {
            break;
        }
        let n = if i == last_nonzero {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng)
        };
        mass_left -= p;
        remaining -= n;
        if n > 0 {
            counts.insert(bitstring(i, state.num_qubits), n);
        }
    }
    Ok(ShotCounts { shots, counts })
}

/// `(n0 - n1) / shots` for one qubit position.
pub fn estimate_z_from_counts(counts: &ShotCounts, qubit: usize) -> Result<f64> {
    let mut width = None;
    let (mut n0, mut n1) = (0u64, 0u64);
    for (bits, &n) in &counts.counts {
        if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::data(format!("malformed bitstring {bits:?}")));
        }
        match width {
            None => width = Some(bits.len()),
            Some(w) if w != bits.len() => {
                return Err(Error::data(format!(
                    "bitstring {bits:?} has width {}, expected {w}",
                    bits.len()
                )))
            }
            _ => {}
        }
        if qubit >= bits.len() {
            return Err(Error::arg(format!(
                "qubit {qubit} out of range for {}-bit outcomes",
                bits.len()
            )));
        }
        match bits.as_bytes()[bits.len() - 1 - qubit] {
            b'0' => n0 += n,
            _ => n1 += n,
        }
    }
    Ok((n0 as f64 - n1 as f64) / counts.shots as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochCoords {
    pub theta: f64,
    pub phi: f64,
}

/// Bloch angles of a single-qubit state, after rotating away the global phase
/// so that the `|0>` amplitude is real and non-negative.
pub fn bloch_coords(state: &StateVector) -> Result<BlochCoords> {
    if state.num_qubits != 1 {
        return Err(Error::arg(format!(
            "Bloch coordinates need a single qubit, got {}",
            state.num_qubits
        )));
    }
    let (alpha, beta) = (state.amps[0], state.amps[1]);
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    let a = (alpha.norm() / norm).clamp(0.0, 1.0);
    let theta = 2.0 * a.acos();
    if (theta / 2.0).sin() < 1e-12 || alpha.norm() < 1e-12 {
        return Ok(BlochCoords { theta, phi: 0.0 });
    }
    let mut phi = (beta.arg() - alpha.arg()).rem_euclid(TAU);
    if phi >= TAU {
        phi = 0.0;
    }
    debug_assert!((0.0..=PI).contains(&theta));
    Ok(BlochCoords { theta, phi })
}
