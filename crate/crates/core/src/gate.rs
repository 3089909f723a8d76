//! Qubit registers and gate algebra.
//!
//! Registers use the big-endian computational basis: in `|x₁,…,x_n⟩` the
//! first qubit is the most significant bit of the basis index. Controlled
//! gates put their control qubits first.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matrix::{c, complex_vec_serde, CMatrix, C64, I, ONE, ZERO};
use crate::{Error, Result};

pub const DEFAULT_UNITARITY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// A unitary on `qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumGate {
    matrix: CMatrix,
    qubits: usize,
}

impl QuantumGate {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, unitarity_tol: f64) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "gate dimension {dim} is not a power of two"
            )));
        }
        let defect = matrix.unitarity_defect();
        if defect > unitarity_tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not unitary: ‖U†U − I‖_F = {defect:.3e} > {unitarity_tol:.1e}"
            )));
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn identity(qubits: usize) -> Self {
        Self {
            matrix: CMatrix::identity(1 << qubits),
            qubits,
        }
    }

    /// Product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            qubits: self.qubits,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            qubits: self.qubits,
        }
    }
}

/// Gate names understood by [`named_gate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Identity,
    X,
    Y,
    Z,
    /// `diag(1, e^{iπα})`, requires the parameter α.
    Phase,
    /// `(1/√2)[[1, 1], [−1, 1]]`. This is the default meaning of `H`.
    HRotation,
    /// Conventional Hadamard `(1/√2)[[1, 1], [1, −1]]`.
    HStd,
    Cnot,
    Ccnot,
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "I" | "ID" => GateKind::Identity,
            "X" | "NOT" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "PHASE" => GateKind::Phase,
            "H" | "H_PAPER" | "H_ROT" => GateKind::HRotation,
            "H_STD" => GateKind::HStd,
            "CNOT" => GateKind::Cnot,
            "CCNOT" | "TOFFOLI" => GateKind::Ccnot,
            other => return Err(Error::InvalidInput(format!("unknown gate name {other:?}"))),
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Identity => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Phase => "PHASE",
            GateKind::HRotation => "H",
            GateKind::HStd => "H_std",
            GateKind::Cnot => "CNOT",
            GateKind::Ccnot => "CCNOT",
        };
        f.write_str(s)
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// `σ_z^α = diag(1, e^{iπα})`.
pub fn phase(alpha: f64) -> CMatrix {
    CMatrix::diag(&[ONE, C64::from_polar(1.0, PI * alpha)])
}

pub fn hadamard_rotation() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[&[s, s], &[-s, s]])
}

pub fn hadamard_std() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

pub fn named_gate(kind: GateKind, param: Option<f64>) -> Result<QuantumGate> {
    let single = |m: CMatrix| QuantumGate { matrix: m, qubits: 1 };
    Ok(match kind {
        GateKind::Identity => QuantumGate::identity(1),
        GateKind::X => single(pauli_x()),
        GateKind::Y => single(pauli_y()),
        GateKind::Z => single(pauli_z()),
        GateKind::Phase => {
            let alpha = param.ok_or_else(|| {
                Error::InvalidInput("PHASE requires a parameter α".into())
            })?;
            if !alpha.is_finite() {
                return Err(Error::InvalidInput("PHASE parameter must be finite".into()));
            }
            single(phase(alpha))
        }
        GateKind::HRotation => single(hadamard_rotation()),
        GateKind::HStd => single(hadamard_std()),
        GateKind::Cnot => controlled(&single(pauli_x()), 1),
        GateKind::Ccnot => controlled(&single(pauli_x()), 2),
    })
}

/// Parses `X`, `H_std`, `PHASE:0.25`, … into a gate.
pub fn parse_gate(spec: &str) -> Result<QuantumGate> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => {
            let value = p.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("bad gate parameter in {spec:?}"))
            })?;
            (n, Some(value))
        }
        None => (spec, None),
    };
    named_gate(name.parse()?, param)
}

/// `Λ_k(U)`: applies `U` to the target register iff all `k` leading control
/// qubits are 1.
pub fn controlled(u: &QuantumGate, k: usize) -> QuantumGate {
    let target = u.dim();
    let dim = target << k;
    let offset = dim - target;
    let mut m = CMatrix::identity(dim);
    for i in 0..target {
        for j in 0..target {
            m[(offset + i, offset + j)] = u.matrix[(i, j)];
        }
    }
    QuantumGate {
        matrix: m,
        qubits: u.qubits + k,
    }
}

/// Kronecker product in list order.
pub fn tensor(gates: &[QuantumGate]) -> Result<QuantumGate> {
    let (first, rest) = gates
        .split_first()
        .ok_or_else(|| Error::InvalidInput("tensor of an empty gate list".into()))?;
    let mut acc = first.clone();
    for g in rest {
        acc = QuantumGate {
            matrix: acc.matrix.kron(&g.matrix),
            qubits: acc.qubits + g.qubits,
        };
    }
    Ok(acc)
}

/// `|0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ σ_x`.
///
/// The same decomposition is sometimes quoted with `|0⟩⟨1|` in the first
/// term; that operator is not a projector and the resulting matrix is not
/// the controlled NOT (it is not even unitary).
pub fn cnot_projector_form() -> CMatrix {
    let p0 = CMatrix::diag(&[ONE, ZERO]);
    let p1 = CMatrix::diag(&[ZERO, ONE]);
    &p0.kron(&CMatrix::identity(2)) + &p1.kron(&pauli_x())
}

/// `|0⟩⟨0| ⊗ 1 ⊗ 1 + |1⟩⟨1| ⊗ cNOT`.
pub fn ccnot_projector_form() -> CMatrix {
    let p0 = CMatrix::diag(&[ONE, ZERO]);
    let p1 = CMatrix::diag(&[ZERO, ONE]);
    &p0.kron(&CMatrix::identity(4)) + &p1.kron(&cnot_projector_form())
}

/// Real `(x, y, z)` on the unit sphere with `U = xσ_x + yσ_y + zσ_z`, for a
/// traceless Hermitian unitary `U`.
pub fn pauli_decomposition(u: &CMatrix, tol: f64) -> Result<[f64; 3]> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u.dim(),
        });
    }
    if u.trace().norm() > tol || u.hermiticity_defect() > tol || u.unitarity_defect() > tol {
        return Err(Error::InvalidInput(
            "matrix is not a traceless Hermitian unitary".into(),
        ));
    }
    let coeff = |p: CMatrix| ((&p * u).trace() * 0.5).re;
    Ok([coeff(pauli_x()), coeff(pauli_y()), coeff(pauli_z())])
}

/// Normalized state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    #[serde(with = "complex_vec_serde")]
    amplitudes: Vec<C64>,
}

impl QubitState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "state length {} is not a power of two",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!(
                "state is not normalized: Σ|c|² = {norm}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << qubits];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    /// Basis state from a bit string, first bit most significant.
    pub fn from_bits(bits: &[u8]) -> Self {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        Self::basis(bits.len(), index)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    /// Index of the basis state carrying all the weight, if any.
    pub fn as_basis_index(&self, tol: f64) -> Option<usize> {
        let idx = self.amplitudes.iter().position(|z| z.norm() > 1.0 - tol)?;
        let rest: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, z)| z.norm())
            .sum();
        (rest <= tol).then_some(idx)
    }
}

/// `g · s`; no renormalization.
pub fn apply(g: &QuantumGate, s: &QubitState) -> Result<QubitState> {
    let amplitudes = g.matrix.mul_vec(&s.amplitudes)?;
    Ok(QubitState { amplitudes })
}

/// `⟨N⟩ = |β|²` for a single qubit `α|0⟩ + β|1⟩`.
pub fn expectation_value(s: &QubitState) -> Result<f64> {
    if s.amplitudes.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: s.amplitudes.len(),
        });
    }
    Ok(s.amplitudes[1].norm_sqr())
}

/// A traceless Hermitian unitary `xσ_x + yσ_y + zσ_z` for a unit vector.
pub fn pauli_combination(x: f64, y: f64, z: f64) -> CMatrix {
    &(&pauli_x().scale(c(x, 0.0)) + &pauli_y().scale(c(y, 0.0))) + &pauli_z().scale(c(z, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gate(kind: GateKind) -> QuantumGate {
        named_gate(kind, None).unwrap()
    }

    #[test]
    fn pauli_x_literal() {
        assert_eq!(gate(GateKind::X).matrix(), &CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn phase_one_is_pauli_z() {
        let p = named_gate(GateKind::Phase, Some(1.0)).unwrap();
        assert!(p.matrix().distance(&pauli_z()) < 1e-15);
    }

    #[test]
    fn phase_needs_param() {
        assert!(named_gate(GateKind::Phase, None).is_err());
        assert!("FOO".parse::<GateKind>().is_err());
        assert!(parse_gate("PHASE:x").is_err());
        let t = parse_gate("PHASE:0.25").unwrap();
        assert!((t.matrix()[(1, 1)] - C64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_hadamard_squares_to_rotation() {
        let h = hadamard_rotation();
        let h2 = &h * &h;
        // (H²)₀₀ = 0 and H² = [[0, 1], [−1, 0]]
        let want = CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(h2[(0, 0)].norm() < 1e-15);
        assert!(h2.distance(&want) < 1e-15);
        let hs = hadamard_std();
        assert!((&hs * &hs).distance(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn controlled_zero_is_u_and_cnot_truth_table() {
        let x = gate(GateKind::X);
        assert_eq!(controlled(&x, 0), x);
        let cnot = controlled(&x, 1);
        for u in 0..2u8 {
            for v in 0..2u8 {
                let out = apply(&cnot, &QubitState::from_bits(&[u, v])).unwrap();
                let want = QubitState::from_bits(&[u, v ^ u]);
                assert_eq!(out, want);
            }
        }
        assert_eq!(cnot.matrix(), &cnot_projector_form());
    }

    #[test]
    fn ccnot_identities() {
        let ccnot = gate(GateKind::Ccnot);
        for a in 0..2u8 {
            let out = apply(&ccnot, &QubitState::from_bits(&[1, 1, a])).unwrap();
            assert_eq!(out, QubitState::from_bits(&[1, 1, 1 - a]));
            for b in 0..2u8 {
                let out = apply(&ccnot, &QubitState::from_bits(&[a, b, 0])).unwrap();
                assert_eq!(out, QubitState::from_bits(&[a, b, a & b]));
            }
        }
        assert_eq!(ccnot.matrix(), &ccnot_projector_form());
    }

    #[test]
    fn misprinted_cnot_form_is_not_cnot() {
        let bad = &CMatrix::from_rows(&[&[ZERO, ONE], &[ZERO, ZERO]]).kron(&CMatrix::identity(2))
            + &CMatrix::diag(&[ZERO, ONE]).kron(&pauli_x());
        assert!(bad.unitarity_defect() > 0.5);
    }

    #[test]
    fn controlled_blocks_exhaustive() {
        let u2 = named_gate(GateKind::Phase, Some(0.3))
            .unwrap()
            .compose(&gate(GateKind::HStd))
            .unwrap();
        let u4 = tensor(&[gate(GateKind::HRotation), gate(GateKind::Y)]).unwrap();
        for u in [u2, u4] {
            for k in 0..=3 {
                let g = controlled(&u, k);
                assert!(g.matrix().unitarity_defect() <= DEFAULT_UNITARITY_TOL);
                let t = u.dim();
                for ctrl in 0..(1usize << k) {
                    for i in 0..t {
                        for j in 0..t {
                            let got = g.matrix()[(ctrl * t + i, ctrl * t + j)];
                            let want = if ctrl == (1 << k) - 1 {
                                u.matrix()[(i, j)]
                            } else if i == j {
                                ONE
                            } else {
                                ZERO
                            };
                            assert_eq!(got, want);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let i = QuantumGate::identity(1);
        assert_eq!(tensor(&[i.clone(), i]).unwrap(), QuantumGate::identity(2));
        let xx = tensor(&[gate(GateKind::X), gate(GateKind::X)]).unwrap();
        let out = apply(&xx, &QubitState::from_bits(&[0, 0])).unwrap();
        assert_eq!(out, QubitState::from_bits(&[1, 1]));
        let zz = tensor(&[gate(GateKind::Z), gate(GateKind::Z)]).unwrap();
        assert_eq!(zz.matrix(), &CMatrix::diag(&[ONE, -ONE, -ONE, ONE]));
        assert_eq!(zz.qubits(), 2);
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn apply_examples() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let s = QubitState::new(vec![a, b]).unwrap();
        let out = apply(&gate(GateKind::X), &s).unwrap();
        assert_eq!(out.amplitudes(), &[b, a]);
        assert_eq!(apply(&QuantumGate::identity(1), &s).unwrap(), s);
        let out = apply(&gate(GateKind::HRotation), &QubitState::basis(1, 0)).unwrap();
        let r = FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0] - c(r, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(-r, 0.0)).norm() < 1e-15);
        assert!(apply(&gate(GateKind::Cnot), &s).is_err());
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(expectation_value(&QubitState::basis(1, 0)).unwrap(), 0.0);
        assert_eq!(expectation_value(&QubitState::basis(1, 1)).unwrap(), 1.0);
        let r = FRAC_1_SQRT_2;
        let s = QubitState::new(vec![c(r, 0.0), c(0.0, r)]).unwrap();
        assert!((expectation_value(&s).unwrap() - 0.5).abs() < 1e-15);
        assert!(expectation_value(&QubitState::basis(2, 0)).is_err());
    }

    #[test]
    fn rejects_bad_states_and_gates() {
        assert!(QubitState::new(vec![ONE, ONE]).is_err());
        assert!(QubitState::new(vec![ONE, ZERO, ZERO]).is_err());
        assert!(QuantumGate::new(CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]])).is_err());
        assert!(QuantumGate::new(CMatrix::identity(3)).is_err());
    }

    #[test]
    fn named_gates_are_unitary() {
        for k in [
            GateKind::Identity,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::HRotation,
            GateKind::HStd,
            GateKind::Cnot,
            GateKind::Ccnot,
        ] {
            assert!(gate(k).matrix().unitarity_defect() <= DEFAULT_UNITARITY_TOL, "{k}");
        }
    }

    proptest! {
        #[test]
        fn traceless_hermitian_unitaries_decompose(theta in 0.0..PI, phi in 0.0..(2.0 * PI)) {
            let (x, y, z) = (theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let u = pauli_combination(x, y, z);
            let [a, b, cc] = pauli_decomposition(&u, 1e-10).unwrap();
            prop_assert!((a * a + b * b + cc * cc - 1.0).abs() < 1e-12);
            prop_assert!(pauli_combination(a, b, cc).distance(&u) < 1e-12);
        }
    }
}
