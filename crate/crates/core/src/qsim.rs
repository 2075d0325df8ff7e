//! Exact two-qubit statevector simulation, seeded random circuit generation,
//! and basis-rotated measurement with finite-shot sampling.
//!
//! # Amplitude ordering
//!
//! The four amplitudes are indexed as `index = 2 * bit(qubit 0) + bit(qubit 1)`,
//! i.e. qubit 0 is the *left* bit of the outcome bitstring. Index 0..3 therefore
//! corresponds to the outcomes `00, 01, 10, 11`. This convention is used by
//! every probability vector in the crate.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};
use std::fmt;
use thiserror::Error;

use crate::rng;

/// Errors from circuit construction, configuration, and simulation.
#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("qubit operand {0} out of range for a two-qubit register")]
    InvalidQubit(u8),
    #[error("CX control and target must be distinct qubits")]
    DuplicateOperands,
    #[error("gate {0} does not take a rotation angle")]
    UnexpectedAngle(&'static str),
    #[error("gate {0} requires a rotation angle")]
    MissingAngle(&'static str),
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("gate set must contain at least one single-qubit gate")]
    EmptyGateSet,
    #[error("invalid depth range [{min}, {max}]: require 1 <= min <= max")]
    InvalidDepthRange { min: u32, max: u32 },
    #[error("two-qubit placement probability must be in [0, 1], got {0}")]
    InvalidTwoQubitProb(f64),
}

/// The closed gate universe: single-qubit Cliffords, T, axis rotations, and CX.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
}

impl GateKind {
    /// Every supported kind, in the fixed order used by feature schemas.
    pub const ALL: [GateKind; 11] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::T => "T",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cx => "CX",
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cx)
    }
}

/// A gate placed on the two-qubit register.
///
/// Construction enforces the operand rules: rotation kinds always carry a
/// finite angle (stored reduced into `[0, 2π)`), non-rotation kinds never do,
/// and CX takes two distinct qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    target: u8,
    control: Option<u8>,
    angle: Option<f64>,
}

fn check_qubit(q: u8) -> Result<(), QsimError> {
    if q < 2 {
        Ok(())
    } else {
        Err(QsimError::InvalidQubit(q))
    }
}

impl Gate {
    /// Places a parameter-free single-qubit gate.
    pub fn single(kind: GateKind, qubit: u8) -> Result<Gate, QsimError> {
        check_qubit(qubit)?;
        if kind.is_two_qubit() {
            return Err(QsimError::DuplicateOperands);
        }
        if kind.is_rotation() {
            return Err(QsimError::MissingAngle(kind.name()));
        }
        Ok(Gate { kind, target: qubit, control: None, angle: None })
    }

    /// Places an axis rotation. The angle is reduced into `[0, 2π)`.
    pub fn rotation(kind: GateKind, qubit: u8, angle: f64) -> Result<Gate, QsimError> {
        check_qubit(qubit)?;
        if !kind.is_rotation() {
            return Err(QsimError::UnexpectedAngle(kind.name()));
        }
        if !angle.is_finite() {
            return Err(QsimError::NonFiniteAngle(angle));
        }
        let angle = angle.rem_euclid(TAU);
        Ok(Gate { kind, target: qubit, control: None, angle: Some(angle) })
    }

    /// Places a CX with the given control and target.
    pub fn cx(control: u8, target: u8) -> Result<Gate, QsimError> {
        check_qubit(control)?;
        check_qubit(target)?;
        if control == target {
            return Err(QsimError::DuplicateOperands);
        }
        Ok(Gate { kind: GateKind::Cx, target, control: Some(control), angle: None })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn target(&self) -> u8 {
        self.target
    }

    pub fn control(&self) -> Option<u8> {
        self.control
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }
}

impl fmt::Display for Gate {
    /// Textual debug form, one gate per line in circuit listings:
    /// `H @ q0`, `RX(1.25) @ q1`, `CX @ q1,q0` (control first).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.control, self.angle) {
            (Some(c), _) => write!(f, "{} @ q{},q{}", self.kind.name(), c, self.target),
            (None, Some(a)) => write!(f, "{}({}) @ q{}", self.kind.name(), a, self.target),
            (None, None) => write!(f, "{} @ q{}", self.kind.name(), self.target),
        }
    }
}

/// Measurement basis for the whole register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    Z,
    X,
    Y,
}

impl MeasBasis {
    /// Fixed tag used when deriving per-basis measurement seeds.
    pub fn index(self) -> u64 {
        match self {
            MeasBasis::Z => 0,
            MeasBasis::X => 1,
            MeasBasis::Y => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasBasis::Z => "Z",
            MeasBasis::X => "X",
            MeasBasis::Y => "Y",
        }
    }
}

/// Pure state of the two-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amp: [Complex64; 4],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Bit of `qubit` within amplitude index `idx` (qubit 0 is the high bit).
fn bit(idx: usize, qubit: u8) -> usize {
    (idx >> (1 - qubit as usize)) & 1
}

fn single_qubit_matrix(kind: GateKind, angle: Option<f64>) -> [[Complex64; 2]; 2] {
    let s2 = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match kind {
        GateKind::H => [[s2, s2], [s2, -s2]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -Complex64::i()], [Complex64::i(), ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::S => [[ONE, ZERO], [ZERO, Complex64::i()]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -Complex64::i()]],
        GateKind::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, FRAC_PI_4)]],
        GateKind::Rx => {
            let t = angle.expect("rotation gate carries an angle") / 2.0;
            let (c, s) = (Complex64::new(t.cos(), 0.0), Complex64::new(0.0, -t.sin()));
            [[c, s], [s, c]]
        }
        GateKind::Ry => {
            let t = angle.expect("rotation gate carries an angle") / 2.0;
            let (c, s) = (Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0));
            [[c, -s], [s, c]]
        }
        GateKind::Rz => {
            let t = angle.expect("rotation gate carries an angle") / 2.0;
            [[Complex64::from_polar(1.0, -t), ZERO], [ZERO, Complex64::from_polar(1.0, t)]]
        }
        GateKind::Cx => unreachable!("CX is not a single-qubit gate"),
    }
}

impl StateVector {
    /// The register initialized to |00⟩.
    pub fn zero() -> StateVector {
        StateVector { amp: [ONE, ZERO, ZERO, ZERO] }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amp
    }

    /// Outcome probabilities |a_k|² in (00, 01, 10, 11) order.
    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.amp[0].norm_sqr(),
            self.amp[1].norm_sqr(),
            self.amp[2].norm_sqr(),
            self.amp[3].norm_sqr(),
        ]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies one gate, returning the new state.
    #[must_use]
    pub fn apply(&self, gate: &Gate) -> StateVector {
        let mut amp = self.amp;
        match gate.kind {
            GateKind::Cx => {
                let control = gate.control.expect("CX carries a control");
                let target = gate.target;
                for idx in 0..4 {
                    if bit(idx, control) == 1 && bit(idx, target) == 0 {
                        let flipped = idx ^ (1 << (1 - target as usize));
                        amp.swap(idx, flipped);
                    }
                }
            }
            _ => {
                let u = single_qubit_matrix(gate.kind, gate.angle);
                let stride = 1 << (1 - gate.target as usize);
                for idx in 0..4 {
                    if bit(idx, gate.target) == 0 {
                        let a = amp[idx];
                        let b = amp[idx + stride];
                        amp[idx] = u[0][0] * a + u[0][1] * b;
                        amp[idx + stride] = u[1][0] * a + u[1][1] * b;
                    }
                }
            }
        }
        StateVector { amp }
    }
}

/// An ordered gate list with its layer count and generation seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    gates: Vec<Gate>,
    depth: u32,
    seed: u64,
}

impl Circuit {
    pub fn new(gates: Vec<Gate>, depth: u32, seed: u64) -> Circuit {
        assert!(depth >= 1, "circuit depth must be at least 1");
        Circuit { gates, depth, seed }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One gate per line, in application order.
    pub fn debug_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parameters for seeded random circuit generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub min_depth: u32,
    pub max_depth: u32,
    /// Allowed gate universe. Single-qubit layers draw uniformly from the
    /// single-qubit members; CX layers are placed only if CX is present.
    pub gate_set: Vec<GateKind>,
    /// Per-layer probability of placing a CX instead of two single-qubit gates.
    pub two_qubit_prob: f64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig {
            min_depth: 1,
            max_depth: 8,
            gate_set: GateKind::ALL.to_vec(),
            two_qubit_prob: 0.5,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<(), QsimError> {
        if self.min_depth < 1 || self.min_depth > self.max_depth {
            return Err(QsimError::InvalidDepthRange { min: self.min_depth, max: self.max_depth });
        }
        if !self.gate_set.iter().any(|k| !k.is_two_qubit()) {
            return Err(QsimError::EmptyGateSet);
        }
        if !(0.0..=1.0).contains(&self.two_qubit_prob) {
            return Err(QsimError::InvalidTwoQubitProb(self.two_qubit_prob));
        }
        Ok(())
    }
}

/// Generates a random circuit as a deterministic function of `(config, seed)`.
///
/// The draw order is fixed: first the depth, uniform on
/// `[min_depth, max_depth]`; then for each layer a coin against
/// `two_qubit_prob`. Heads places one CX with uniformly random orientation;
/// tails places one uniformly random single-qubit gate on each qubit
/// (qubit 0 first), drawing a uniform angle in `[0, 2π)` right after each
/// rotation kind.
pub fn random_circuit(config: &CircuitConfig, seed: u64) -> Result<Circuit, QsimError> {
    config.validate()?;
    let singles: Vec<GateKind> =
        config.gate_set.iter().copied().filter(|k| !k.is_two_qubit()).collect();
    let has_cx = config.gate_set.contains(&GateKind::Cx);
    let mut rng = rng::stream(seed);

    let depth = rng.gen_range(config.min_depth..=config.max_depth);
    let mut gates = Vec::new();
    for _ in 0..depth {
        if has_cx && rng.gen::<f64>() < config.two_qubit_prob {
            let flipped: bool = rng.gen();
            let (c, t) = if flipped { (1, 0) } else { (0, 1) };
            gates.push(Gate::cx(c, t).expect("static operands"));
        } else {
            for q in 0..2u8 {
                let kind = singles[rng.gen_range(0..singles.len())];
                let gate = if kind.is_rotation() {
                    Gate::rotation(kind, q, rng.gen::<f64>() * TAU)
                } else {
                    Gate::single(kind, q)
                };
                gates.push(gate.expect("kind drawn from validated set"));
            }
        }
    }
    Ok(Circuit { gates, depth, seed })
}

fn run<'a>(gates: impl IntoIterator<Item = &'a Gate>) -> StateVector {
    gates.into_iter().fold(StateVector::zero(), |st, g| st.apply(g))
}

/// Runs the circuit from |00⟩ and returns the final state.
pub fn simulate(circuit: &Circuit) -> StateVector {
    run(circuit.gates())
}

/// Gates that map the requested measurement basis onto a plain Z readout:
/// nothing for Z, a Hadamard per qubit for X, and S† then H per qubit for Y.
pub fn basis_rotation(basis: MeasBasis) -> Vec<Gate> {
    let single = |k, q| Gate::single(k, q).expect("static rotation gates");
    match basis {
        MeasBasis::Z => vec![],
        MeasBasis::X => vec![single(GateKind::H, 0), single(GateKind::H, 1)],
        MeasBasis::Y => vec![
            single(GateKind::Sdg, 0),
            single(GateKind::H, 0),
            single(GateKind::Sdg, 1),
            single(GateKind::H, 1),
        ],
    }
}

/// Outcome distribution of a basis measurement.
///
/// With `shots = 0` the probabilities are exact (`|a_k|²`); otherwise they
/// are empirical frequencies `count_k / shots` from seeded multinomial
/// sampling. For power-of-two shot counts the frequencies are dyadic, so
/// they sum to exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDistribution {
    pub basis: MeasBasis,
    pub p: [f64; 4],
    pub shots: u32,
}

/// Measures the circuit in the given basis.
///
/// The basis rotation is appended to the circuit and the extended circuit is
/// re-simulated, so each basis consumes its own shot budget. Zero-probability
/// outcomes are never drawn.
pub fn measure(circuit: &Circuit, basis: MeasBasis, shots: u32, seed: u64) -> MeasurementDistribution {
    let rotation = basis_rotation(basis);
    let state = run(circuit.gates().iter().chain(rotation.iter()));
    let p = state.probabilities();
    if shots == 0 {
        return MeasurementDistribution { basis, p, shots: 0 };
    }

    let fallback = (0..4).rev().find(|&k| p[k] > 0.0).unwrap_or(3);
    let mut rng = rng::stream(seed);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        let mut u = rng.gen::<f64>();
        let mut cell = fallback;
        for k in 0..4 {
            if u < p[k] {
                cell = k;
                break;
            }
            u -= p[k];
        }
        counts[cell] += 1;
    }
    let freq = [
        counts[0] as f64 / shots as f64,
        counts[1] as f64 / shots as f64,
        counts[2] as f64 / shots as f64,
        counts[3] as f64 / shots as f64,
    ];
    MeasurementDistribution { basis, p: freq, shots }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn assert_probs(state: &StateVector, expected: [f64; 4], tol: f64) {
        let p = state.probabilities();
        for k in 0..4 {
            assert!(
                (p[k] - expected[k]).abs() < tol,
                "probability mismatch at {k}: {p:?} vs {expected:?}"
            );
        }
    }

    fn bell() -> Circuit {
        Circuit::new(
            vec![Gate::single(GateKind::H, 0).unwrap(), Gate::cx(0, 1).unwrap()],
            2,
            0,
        )
    }

    #[test]
    fn h_on_qubit0() {
        let st = StateVector::zero().apply(&Gate::single(GateKind::H, 0).unwrap());
        assert!((st.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < EPS);
        assert!((st.amplitudes()[2].re - FRAC_1_SQRT_2).abs() < EPS);
        assert!(st.amplitudes()[1].norm() < EPS);
        assert!(st.amplitudes()[3].norm() < EPS);
    }

    #[test]
    fn x_on_qubit1() {
        let st = StateVector::zero().apply(&Gate::single(GateKind::X, 1).unwrap());
        assert_probs(&st, [0.0, 1.0, 0.0, 0.0], EPS);
    }

    #[test]
    fn rz_is_phase_only() {
        for seed in 0..20u64 {
            let circuit = random_circuit(&CircuitConfig::default(), seed).unwrap();
            let st = simulate(&circuit);
            for q in 0..2u8 {
                let theta = 0.1 + 0.3 * seed as f64;
                let rotated = st.apply(&Gate::rotation(GateKind::Rz, q, theta).unwrap());
                assert_probs(&rotated, st.probabilities(), 1e-10);
            }
        }
    }

    #[test]
    fn all_gate_matrices_are_unitary() {
        let mut rng = rng::stream(314);
        for kind in GateKind::ALL {
            if kind.is_two_qubit() {
                continue;
            }
            let angles: Vec<Option<f64>> = if kind.is_rotation() {
                (0..100).map(|_| Some(rng.gen::<f64>() * TAU)).collect()
            } else {
                vec![None]
            };
            for angle in angles {
                let u = single_qubit_matrix(kind, angle);
                for r in 0..2 {
                    for c in 0..2 {
                        // (U U†)[r][c]
                        let v = u[r][0] * u[c][0].conj() + u[r][1] * u[c][1].conj();
                        let expected = if r == c { 1.0 } else { 0.0 };
                        assert!(
                            (v - Complex64::new(expected, 0.0)).norm() < EPS,
                            "{} not unitary at ({r},{c}): {v}",
                            kind.name()
                        );
                    }
                }
            }
        }
        // CX is a basis permutation: applying it twice is the identity.
        for start in 0..4usize {
            let mut amp = [ZERO; 4];
            amp[start] = ONE;
            let st = StateVector { amp };
            let once = st.apply(&Gate::cx(1, 0).unwrap());
            let twice = once.apply(&Gate::cx(1, 0).unwrap());
            assert_eq!(twice.probabilities()[start], 1.0);
        }
    }

    #[test]
    fn simulate_empty_is_identity() {
        let st = simulate(&Circuit::new(vec![], 1, 0));
        assert_probs(&st, [1.0, 0.0, 0.0, 0.0], 0.0);
    }

    #[test]
    fn bell_amplitudes() {
        let st = simulate(&bell());
        assert!((st.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < EPS);
        assert!((st.amplitudes()[3].re - FRAC_1_SQRT_2).abs() < EPS);
        assert!(st.amplitudes()[1].norm() < EPS);
        assert!(st.amplitudes()[2].norm() < EPS);
    }

    #[test]
    fn simulation_preserves_norm() {
        for seed in 0..100u64 {
            let circuit = random_circuit(&CircuitConfig::default(), seed).unwrap();
            let n = simulate(&circuit).norm_sqr();
            assert!((n - 1.0).abs() < 1e-10, "norm drift {n} at seed {seed}");
        }
    }

    #[test]
    fn basis_rotation_gates() {
        assert!(basis_rotation(MeasBasis::Z).is_empty());
        let x = basis_rotation(MeasBasis::X);
        assert_eq!(x.len(), 2);
        assert!(x.iter().all(|g| g.kind() == GateKind::H));
        let y = basis_rotation(MeasBasis::Y);
        let kinds: Vec<GateKind> = y.iter().map(|g| g.kind()).collect();
        assert_eq!(kinds, [GateKind::Sdg, GateKind::H, GateKind::Sdg, GateKind::H]);
    }

    #[test]
    fn zero_state_is_uniform_in_x_and_y() {
        let empty = Circuit::new(vec![], 1, 0);
        for basis in [MeasBasis::X, MeasBasis::Y] {
            let dist = measure(&empty, basis, 0, 0);
            for k in 0..4 {
                assert!((dist.p[k] - 0.25).abs() < EPS, "{:?}: {:?}", basis, dist.p);
            }
        }
    }

    #[test]
    fn bell_exact_z_distribution() {
        let dist = measure(&bell(), MeasBasis::Z, 0, 0);
        assert!((dist.p[0] - 0.5).abs() < EPS);
        assert!(dist.p[1].abs() < EPS);
        assert!(dist.p[2].abs() < EPS);
        assert!((dist.p[3] - 0.5).abs() < EPS);
    }

    #[test]
    fn bell_sampled_frequencies() {
        let dist = measure(&bell(), MeasBasis::Z, 1024, 99);
        // impossible outcomes are never drawn
        assert_eq!(dist.p[1], 0.0);
        assert_eq!(dist.p[2], 0.0);
        assert!((dist.p[0] - 0.5).abs() <= 0.06, "p00 = {}", dist.p[0]);
        assert_eq!(dist.p[0] + dist.p[3], 1.0);
    }

    #[test]
    fn four_shot_frequencies_are_quantized() {
        for seed in 0..20u64 {
            let circuit = random_circuit(&CircuitConfig::default(), seed).unwrap();
            let dist = measure(&circuit, MeasBasis::Z, 4, seed);
            for f in dist.p {
                assert!([0.0, 0.25, 0.5, 0.75, 1.0].contains(&f), "unexpected freq {f}");
            }
        }
    }

    #[test]
    fn dyadic_shot_counts_sum_to_one_exactly() {
        for shots in [256u32, 1024, 4096] {
            for seed in 0..10u64 {
                let circuit = random_circuit(&CircuitConfig::default(), seed).unwrap();
                let dist = measure(&circuit, MeasBasis::Y, shots, seed ^ 0xabcd);
                assert_eq!(dist.p.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn measurement_is_deterministic() {
        let c = random_circuit(&CircuitConfig::default(), 5).unwrap();
        let a = measure(&c, MeasBasis::X, 2048, 17);
        let b = measure(&c, MeasBasis::X, 2048, 17);
        assert_eq!(a, b);
        let other = measure(&c, MeasBasis::X, 2048, 18);
        assert_ne!(a, other);
    }

    #[test]
    fn x_basis_equals_hadamard_then_z() {
        for seed in 0..100u64 {
            let circuit = random_circuit(&CircuitConfig::default(), seed).unwrap();
            let direct = measure(&circuit, MeasBasis::X, 0, 0);
            let mut gates = circuit.gates().to_vec();
            gates.extend(basis_rotation(MeasBasis::X));
            let appended = Circuit::new(gates, circuit.depth(), circuit.seed());
            let via_z = measure(&appended, MeasBasis::Z, 0, 0);
            for k in 0..4 {
                assert!((direct.p[k] - via_z.p[k]).abs() < EPS);
            }
        }
    }

    #[test]
    fn random_circuit_is_deterministic() {
        let cfg = CircuitConfig::default();
        assert_eq!(random_circuit(&cfg, 123).unwrap(), random_circuit(&cfg, 123).unwrap());
        assert_ne!(random_circuit(&cfg, 123).unwrap(), random_circuit(&cfg, 124).unwrap());
    }

    #[test]
    fn forced_depth_is_respected() {
        let cfg = CircuitConfig { min_depth: 3, max_depth: 3, ..CircuitConfig::default() };
        for seed in 0..50u64 {
            assert_eq!(random_circuit(&cfg, seed).unwrap().depth(), 3);
        }
    }

    #[test]
    fn depths_stay_in_range_and_angles_in_cycle() {
        let cfg = CircuitConfig::default();
        for seed in 0..500u64 {
            let c = random_circuit(&cfg, seed).unwrap();
            assert!((1..=8).contains(&c.depth()));
            for g in c.gates() {
                if let Some(a) = g.angle() {
                    assert!((0.0..TAU).contains(&a));
                }
            }
        }
    }

    #[test]
    fn depth_histogram_is_uniform() {
        // chi-squared against uniform over {1..8}; 18.475 is the 99th
        // percentile of chi2 with 7 degrees of freedom.
        let cfg = CircuitConfig::default();
        let trials = 10_000u64;
        let mut counts = [0f64; 8];
        for seed in 0..trials {
            let c = random_circuit(&cfg, rng::derive_seed(0xd9, seed)).unwrap();
            counts[(c.depth() - 1) as usize] += 1.0;
        }
        let expected = trials as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 18.475, "depth histogram not uniform: chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn sampling_error_shrinks_with_shots() {
        let ladder = [256u32, 1024, 4096, 16384];
        let trials = 200u64;
        let mut mean_dev = [0.0f64; 4];
        let mut within_tol = 0usize;
        for t in 0..trials {
            let circuit = random_circuit(&CircuitConfig::default(), rng::derive_seed(0x5a, t)).unwrap();
            let exact = measure(&circuit, MeasBasis::Z, 0, 0).p;
            for (i, &shots) in ladder.iter().enumerate() {
                let freq = measure(&circuit, MeasBasis::Z, shots, rng::derive_seed(t, i as u64)).p;
                let dev = (0..4).map(|k| (freq[k] - exact[k]).abs()).fold(0.0, f64::max);
                mean_dev[i] += dev / trials as f64;
                if i == ladder.len() - 1 && dev <= 0.02 {
                    within_tol += 1;
                }
            }
        }
        for w in 1..ladder.len() {
            assert!(
                mean_dev[w] < mean_dev[w - 1],
                "mean max deviation not decreasing: {mean_dev:?}"
            );
        }
        assert!(
            within_tol as f64 / trials as f64 >= 0.99,
            "only {within_tol}/{trials} trials within 0.02 at 16384 shots"
        );
    }

    #[test]
    fn gate_constructor_rejects_bad_operands() {
        assert_eq!(Gate::single(GateKind::H, 2).unwrap_err(), QsimError::InvalidQubit(2));
        assert_eq!(Gate::cx(0, 0).unwrap_err(), QsimError::DuplicateOperands);
        assert_eq!(
            Gate::single(GateKind::Rx, 0).unwrap_err(),
            QsimError::MissingAngle("RX")
        );
        assert_eq!(
            Gate::rotation(GateKind::H, 0, 1.0).unwrap_err(),
            QsimError::UnexpectedAngle("H")
        );
        assert!(Gate::rotation(GateKind::Rx, 0, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = CircuitConfig { min_depth: 0, ..CircuitConfig::default() };
        assert!(matches!(random_circuit(&cfg, 0), Err(QsimError::InvalidDepthRange { .. })));
        let cfg = CircuitConfig { min_depth: 5, max_depth: 2, ..CircuitConfig::default() };
        assert!(matches!(random_circuit(&cfg, 0), Err(QsimError::InvalidDepthRange { .. })));
        let cfg = CircuitConfig { gate_set: vec![], ..CircuitConfig::default() };
        assert_eq!(random_circuit(&cfg, 0).unwrap_err(), QsimError::EmptyGateSet);
        // a CX-only set has no single-qubit gates to fill non-CX layers
        let cfg = CircuitConfig { gate_set: vec![GateKind::Cx], ..CircuitConfig::default() };
        assert_eq!(random_circuit(&cfg, 0).unwrap_err(), QsimError::EmptyGateSet);
        let cfg = CircuitConfig { two_qubit_prob: 1.5, ..CircuitConfig::default() };
        assert!(matches!(random_circuit(&cfg, 0), Err(QsimError::InvalidTwoQubitProb(_))));
    }

    #[test]
    fn debug_text_format() {
        let c = Circuit::new(
            vec![
                Gate::single(GateKind::H, 0).unwrap(),
                Gate::rotation(GateKind::Rx, 1, 0.5).unwrap(),
                Gate::cx(1, 0).unwrap(),
            ],
            3,
            0,
        );
        assert_eq!(c.debug_text(), "H @ q0\nRX(0.5) @ q1\nCX @ q1,q0\n");
    }
}
