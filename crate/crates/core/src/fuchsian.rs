//! Logarithmic connections, parallel transport and monodromy.
//!
//! A connection is a list of scalar logarithmic 1-forms `ω_j` (a
//! [`FormBasis`]) paired with residue matrices `U^j`, so that
//! `Ω = Σ_j U^j ω_j`. Three bases cover the cases in use:
//!
//! - punctures in ℂ: `ω_j = dz/(z − s_j)`;
//! - the diagonal arrangement in ℂⁿ: `ω_ij = d(z_i − z_j)/(z_i − z_j)`;
//! - general hyperplanes: `ω_j = dh_j/h_j − dh_ref/h_ref`.
//!
//! Transport solves `dF = Ω(γ(t))·γ'(t)·F` with `F(start) = I`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{complex_vec_serde, CMatrix, C64, ZERO};
use crate::ode::{self, Options};
use crate::paths::{AffineFunctional, LoopSet, PiecewisePath, Point, POINT_SEPARATION};
use crate::{Error, Result};

/// Paths closer than this to the polar divisor are rejected outright.
pub const MIN_CLEARANCE: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Residual above which a Chern sum is not considered integral.
pub const CHERN_RESIDUAL_TOL: f64 = 1e-6;

/// Scalar logarithmic 1-forms `ω_1, …, ω_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FormBasis {
    /// `dz/(z − s_j)` on ℂ.
    Points {
        #[serde(with = "complex_vec_serde")]
        poles: Vec<C64>,
    },
    /// `d(z_i − z_j)/(z_i − z_j)` on ℂⁿ, pairs 1-based with `i < j`.
    Pairs { n: usize, pairs: Vec<(usize, usize)> },
    /// `dh_j/h_j − dh_ref/h_ref`; without a reference hyperplane the second
    /// term is dropped (the reference is at infinity).
    Hyperplanes {
        hyperplanes: Vec<AffineFunctional>,
        #[serde(default)]
        reference: Option<AffineFunctional>,
    },
}

impl FormBasis {
    /// All pairs `(i, j)`, `1 <= i < j <= n`, in lexicographic order.
    pub fn all_pairs(n: usize) -> Self {
        let pairs = (1..=n)
            .flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)))
            .collect();
        FormBasis::Pairs { n, pairs }
    }

    pub fn len(&self) -> usize {
        match self {
            FormBasis::Points { poles } => poles.len(),
            FormBasis::Pairs { pairs, .. } => pairs.len(),
            FormBasis::Hyperplanes { hyperplanes, .. } => hyperplanes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of the ambient ℂⁿ.
    pub fn ambient_dim(&self) -> usize {
        match self {
            FormBasis::Points { .. } => 1,
            FormBasis::Pairs { n, .. } => *n,
            FormBasis::Hyperplanes { hyperplanes, .. } => {
                hyperplanes.first().map_or(0, AffineFunctional::dim)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidInput("connection needs at least one form".into()));
        }
        match self {
            FormBasis::Points { poles } => {
                crate::paths::Divisor::points(poles.clone())?;
            }
            FormBasis::Pairs { n, pairs } => {
                for &(i, j) in pairs {
                    if !(1 <= i && i < j && j <= *n) {
                        return Err(Error::InvalidInput(format!("bad pair ({i}, {j}) for n = {n}")));
                    }
                }
            }
            FormBasis::Hyperplanes {
                hyperplanes,
                reference,
            } => {
                let d = self.ambient_dim();
                let all = hyperplanes.iter().chain(reference.iter());
                for h in all {
                    if h.dim() != d || h.coeff_norm() == 0.0 {
                        return Err(Error::InvalidInput(
                            "hyperplanes must share a dimension and have nonzero normals".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes `ω_j(z)(v)` into `out`.
    pub fn eval(&self, z: &[C64], v: &[C64], out: &mut [C64]) {
        match self {
            FormBasis::Points { poles } => {
                for (o, s) in out.iter_mut().zip(poles) {
                    *o = v[0] / (z[0] - s);
                }
            }
            FormBasis::Pairs { pairs, .. } => {
                for (o, &(i, j)) in out.iter_mut().zip(pairs) {
                    *o = (v[i - 1] - v[j - 1]) / (z[i - 1] - z[j - 1]);
                }
            }
            FormBasis::Hyperplanes {
                hyperplanes,
                reference,
            } => {
                let r = reference
                    .as_ref()
                    .map_or(ZERO, |h| h.linear(v) / h.eval(z));
                for (o, h) in out.iter_mut().zip(hyperplanes) {
                    *o = h.linear(v) / h.eval(z) - r;
                }
            }
        }
    }

    /// Functionals whose zero sets carry the poles, with the factor turning
    /// `|h|` into a distance.
    pub fn singular_components(&self) -> Vec<(AffineFunctional, f64)> {
        match self {
            FormBasis::Points { poles } => poles
                .iter()
                .map(|&s| (AffineFunctional::point(s), 1.0))
                .collect(),
            FormBasis::Pairs { n, pairs } => pairs
                .iter()
                .map(|&(i, j)| (AffineFunctional::difference(*n, i - 1, j - 1), 1.0))
                .collect(),
            FormBasis::Hyperplanes {
                hyperplanes,
                reference,
            } => hyperplanes
                .iter()
                .chain(reference.iter())
                .map(|h| (h.clone(), 1.0 / h.coeff_norm()))
                .collect(),
        }
    }

    pub fn distance(&self, z: &[C64]) -> f64 {
        self.singular_components()
            .iter()
            .map(|(h, s)| h.eval(z).norm() * s)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn clearance(&self, path: &PiecewisePath) -> f64 {
        self.singular_components()
            .iter()
            .map(|(h, s)| path.min_modulus(h) * s)
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_path(&self, path: &PiecewisePath) -> Result<f64> {
        if path.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: path.dim(),
            });
        }
        let clearance = self.clearance(path);
        if clearance <= MIN_CLEARANCE {
            return Err(Error::DivisorContact {
                distance: clearance,
            });
        }
        Ok(clearance)
    }
}

/// `Ω = Σ_j U^j ω_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConnectionRepr", into = "ConnectionRepr")]
pub struct LogarithmicConnection {
    basis: FormBasis,
    residues: Vec<CMatrix>,
    regular_at_infinity: bool,
}

#[derive(Serialize, Deserialize)]
struct ConnectionRepr {
    #[serde(flatten)]
    basis: FormBasis,
    residues: Vec<CMatrix>,
    #[serde(default)]
    regular_at_infinity: bool,
}

impl TryFrom<ConnectionRepr> for LogarithmicConnection {
    type Error = Error;
    fn try_from(r: ConnectionRepr) -> Result<Self> {
        Self::with_flags(r.basis, r.residues, r.regular_at_infinity)
    }
}

impl From<LogarithmicConnection> for ConnectionRepr {
    fn from(c: LogarithmicConnection) -> Self {
        ConnectionRepr {
            basis: c.basis,
            residues: c.residues,
            regular_at_infinity: c.regular_at_infinity,
        }
    }
}

impl LogarithmicConnection {
    pub fn new(basis: FormBasis, residues: Vec<CMatrix>) -> Result<Self> {
        Self::with_flags(basis, residues, false)
    }

    /// With `regular_at_infinity` set (punctures only), `‖Σ A_j‖_F ≤ 1e-12`
    /// is enforced.
    pub fn with_flags(basis: FormBasis, residues: Vec<CMatrix>, regular_at_infinity: bool) -> Result<Self> {
        basis.validate()?;
        if residues.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "{} residues for {} forms",
                residues.len(),
                basis.len()
            )));
        }
        let dim = residues[0].dim();
        if let Some(r) = residues.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
        if regular_at_infinity {
            if !matches!(basis, FormBasis::Points { .. }) {
                return Err(Error::InvalidInput(
                    "regularity at infinity applies to punctured-plane connections only".into(),
                ));
            }
            let total = residues
                .iter()
                .fold(CMatrix::zeros(dim), |acc, r| &acc + r);
            if total.frobenius_norm() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "residues sum to {:.3e}, not regular at infinity",
                    total.frobenius_norm()
                )));
            }
        }
        Ok(Self {
            basis,
            residues,
            regular_at_infinity,
        })
    }

    /// Punctured plane: `Σ A_j/(z − s_j) dz`.
    pub fn points(poles: Vec<C64>, residues: Vec<CMatrix>) -> Result<Self> {
        Self::new(FormBasis::Points { poles }, residues)
    }

    /// Configuration space: `Σ_{i<j} Ω_ij d log(z_i − z_j)`, all pairs in
    /// lexicographic order.
    pub fn pairs(n: usize, omegas: Vec<CMatrix>) -> Result<Self> {
        Self::new(FormBasis::all_pairs(n), omegas)
    }

    pub fn zero(basis: FormBasis, dim: usize) -> Result<Self> {
        let m = basis.len();
        Self::new(basis, vec![CMatrix::zeros(dim); m])
    }

    pub fn basis(&self) -> &FormBasis {
        &self.basis
    }

    pub fn residues(&self) -> &[CMatrix] {
        &self.residues
    }

    pub fn regular_at_infinity(&self) -> bool {
        self.regular_at_infinity
    }

    pub fn dim(&self) -> usize {
        self.residues[0].dim()
    }

    /// `Ω_ij` for a pairs basis (1-based), zero when the pair is absent.
    pub fn pair_residue(&self, i: usize, j: usize) -> Option<CMatrix> {
        let FormBasis::Pairs { pairs, .. } = &self.basis else {
            return None;
        };
        let key = if i < j { (i, j) } else { (j, i) };
        Some(
            pairs
                .iter()
                .position(|&p| p == key)
                .map_or_else(|| CMatrix::zeros(self.dim()), |k| self.residues[k].clone()),
        )
    }

    /// `Ω(z)(v) = Σ_j U^j ω_j(z)(v)`.
    pub fn contract(&self, z: &[C64], v: &[C64]) -> CMatrix {
        let mut coeffs = vec![ZERO; self.basis.len()];
        self.basis.eval(z, v, &mut coeffs);
        let mut acc = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for (w, u) in coeffs.iter().zip(&self.residues) {
            acc += u.inner() * *w;
        }
        CMatrix::new(acc).expect("finite off the divisor")
    }
}

/// Outcome of a transport with the integrator's bookkeeping.
#[derive(Clone, Debug)]
pub struct Transport {
    pub matrix: CMatrix,
    pub stats: ode::Stats,
    pub clearance: f64,
}

/// Path-ordered exponential of `Ω` along `path` with accumulated error
/// estimate at most `tol`.
pub fn transport(conn: &LogarithmicConnection, path: &PiecewisePath, tol: f64) -> Result<CMatrix> {
    Ok(transport_detailed(conn, path, tol)?.matrix)
}

pub fn transport_detailed(conn: &LogarithmicConnection, path: &PiecewisePath, tol: f64) -> Result<Transport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let clearance = conn.basis.check_path(path)?;
    let d = conn.dim();
    let m = conn.basis.len();
    let norms: Vec<f64> = conn.residues.iter().map(CMatrix::frobenius_norm).collect();
    let opts = Options {
        tol: tol / path.segments().len() as f64,
        ..Options::default()
    };

    let mut state: Vec<C64> = CMatrix::identity(d).as_slice().to_vec();
    let mut stats = ode::Stats::default();
    let mut coeffs = vec![ZERO; m];
    let mut a = DMatrix::<C64>::zeros(d, d);

    for (k, seg) in path.segments().iter().enumerate() {
        let cap = |t: f64| {
            let mut w = vec![ZERO; m];
            conn.basis.eval(&seg.point(t), &seg.velocity(t), &mut w);
            let bound: f64 = w.iter().zip(&norms).map(|(c, n)| c.norm() * n).sum();
            if bound > 0.0 {
                2.0 / bound
            } else {
                f64::INFINITY
            }
        };
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            conn.basis.eval(&seg.point(t), &seg.velocity(t), &mut coeffs);
            a.fill(ZERO);
            for (w, u) in coeffs.iter().zip(&conn.residues) {
                a += u.inner() * *w;
            }
            let yv = DMatrixView::from_slice(y, d, d);
            let mut dv = DMatrixViewMut::from_slice(dy, d, d);
            dv.gemm(C64::new(1.0, 0.0), &a, &yv, ZERO);
        };
        let s = ode::integrate(&mut state, 0.0, 1.0, &opts, cap, rhs).map_err(|f| {
            Error::StepUnderflow {
                segment: k,
                t: f.t,
                closest: clearance,
            }
        })?;
        stats += s;
    }
    Ok(Transport {
        matrix: CMatrix::new(DMatrix::from_column_slice(d, d, &state))?,
        stats,
        clearance,
    })
}

/// One matrix per generator loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRepresentation {
    pub labels: Vec<String>,
    pub matrices: Vec<CMatrix>,
    #[serde(with = "complex_vec_serde")]
    pub basepoint: Point,
}

impl MonodromyRepresentation {
    /// `M_1 M_2 ⋯ M_m`.
    pub fn ordered_product(&self) -> CMatrix {
        let d = self.matrices[0].dim();
        self.matrices
            .iter()
            .fold(CMatrix::identity(d), |acc, m| &acc * m)
    }

    /// `‖M_1 ⋯ M_m − I‖_F`, the defect of the relation `γ_1⋯γ_m = 1`
    /// traversed in reverse label order.
    pub fn relation_defect(&self) -> f64 {
        let p = self.ordered_product();
        p.distance(&CMatrix::identity(p.dim()))
    }
}

/// Transports around each loop; loops must share their basepoint.
pub fn monodromy_representation(
    conn: &LogarithmicConnection,
    loops: &[PiecewisePath],
    tol: f64,
) -> Result<MonodromyRepresentation> {
    let set = LoopSet::new(loops.to_vec())?;
    let matrices = set
        .loops
        .par_iter()
        .map(|l| transport(conn, l, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonodromyRepresentation {
        labels: (1..=matrices.len()).map(|k| format!("gamma_{k}")).collect(),
        matrices,
        basepoint: set.loops[0].start(),
    })
}

/// Window `[start, start + 2π)` for eigenvalue arguments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBranch {
    pub start: f64,
}

impl Default for LogBranch {
    fn default() -> Self {
        Self { start: 0.0 }
    }
}

// within this of the cut an argument is taken to sit exactly on the closed end
const CUT_SNAP: f64 = 1e-13;
const CUT_GUARD: f64 = 1e-10;

impl LogBranch {
    fn argument(&self, z: C64) -> Result<f64> {
        let theta = self.start + (z.arg() - self.start).rem_euclid(TAU);
        let from_cut = (theta - self.start).min(self.start + TAU - theta);
        if from_cut <= CUT_SNAP {
            Ok(self.start)
        } else if from_cut <= CUT_GUARD {
            Err(Error::BranchCut {
                argument: z.arg(),
                cut: self.start,
            })
        } else {
            Ok(theta)
        }
    }

    /// `log(z)/(2πi)` with the argument in the window.
    pub fn exponent(&self, z: C64) -> Result<C64> {
        let theta = self.argument(z)?;
        let log = C64::new(z.norm().ln(), theta);
        Ok(log / C64::new(0.0, TAU))
    }
}

/// `E` with `e^{2πiE} = M`, eigenvalue arguments of `M` in the branch window.
///
/// Normal inputs go through the unitary Schur basis, so unitary `M` yields
/// Hermitian `E`. Non-normal inputs are diagonalized from the Schur form;
/// defective ones are rejected.
pub fn residue_log(m: &CMatrix, branch: LogBranch) -> Result<CMatrix> {
    let d = m.dim();
    let scale = m.max_abs().max(1e-300);
    let schur = nalgebra::Schur::try_new(m.inner().clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let eig: Vec<C64> = (0..d).map(|k| t[(k, k)]).collect();
    if let Some(z) = eig.iter().find(|z| z.norm() <= 1e-14 * scale) {
        return Err(Error::InvalidInput(format!("matrix is singular (eigenvalue {z})")));
    }
    let exps = eig
        .iter()
        .map(|&z| branch.exponent(z))
        .collect::<Result<Vec<_>>>()?;

    let strict_upper: f64 = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .map(|(i, j)| t[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if strict_upper <= 1e-12 * scale {
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(exps));
        return CMatrix::new(&q * diag * q.adjoint());
    }

    // eigenvectors of the triangular factor by back substitution
    let cluster = 1e-8 * scale;
    let mut w = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        w[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let num: C64 = ((i + 1)..=k).map(|l| t[(i, l)] * w[(l, k)]).sum();
            let den = t[(i, i)] - eig[k];
            if den.norm() <= cluster {
                if num.norm() > cluster {
                    return Err(Error::Defective(format!(
                        "eigenvalue {:.6} repeats with coupling {:.3e}; a Jordan block of size >= 2 is present",
                        eig[k],
                        num.norm()
                    )));
                }
                w[(i, k)] = ZERO;
            } else {
                w[(i, k)] = -num / den;
            }
        }
    }
    let v = &q * &w;
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Defective("eigenvector matrix is singular".into()))?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(exps));
    CMatrix::new(v * diag * v_inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernIndex {
    pub index: i64,
    /// Distance of the unrounded sum from the nearest integer.
    pub residual: f64,
    pub re: f64,
    pub im: f64,
}

/// `Σ_j tr E_j` with `E_j = residue_log(M_j)`, rounded.
pub fn chern_index(rep: &MonodromyRepresentation, branch: LogBranch) -> Result<ChernIndex> {
    let mut sum = ZERO;
    for m in &rep.matrices {
        sum += residue_log(m, branch)?.trace();
    }
    let index = sum.re.round();
    let residual = (sum - C64::new(index, 0.0)).norm();
    if residual > CHERN_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "trace sum {sum} is not integral (residual {residual:.3e}); branch choices are inconsistent"
        )));
    }
    Ok(ChernIndex {
        index: index as i64,
        residual,
        re: sum.re,
        im: sum.im,
    })
}

/// `‖Ω(u)Ω(v) − Ω(v)Ω(u)‖_F` at `point`.
pub fn curvature_residual(conn: &LogarithmicConnection, point: &[C64], u: &[C64], v: &[C64]) -> Result<f64> {
    let n = conn.basis.ambient_dim();
    if point.len() != n || u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: point.len(),
        });
    }
    if conn.basis.distance(point) <= POINT_SEPARATION {
        return Err(Error::InvalidInput("point lies on the divisor".into()));
    }
    let a = conn.contract(point, u);
    let b = conn.contract(point, v);
    Ok(a.commutator(&b).frobenius_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub relation: String,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub max_violation: f64,
    pub checks: Vec<RelationCheck>,
}

impl IntegrabilityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Infinitesimal braid relations for a pairs connection:
/// `[Ω_ij, Ω_ik + Ω_jk] = 0` and `[Ω_ik, Ω_ij + Ω_jk] = 0` for `i < j < k`,
/// and `[Ω_ij, Ω_kl] = 0` for distinct `i, j, k, l`.
pub fn integrability_check(conn: &LogarithmicConnection) -> Result<IntegrabilityReport> {
    let FormBasis::Pairs { n, .. } = conn.basis else {
        return Err(Error::InvalidInput(
            "integrability check needs a configuration-space (pairs) connection".into(),
        ));
    };
    let mut omega: HashMap<(usize, usize), CMatrix> = HashMap::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            omega.insert((i, j), conn.pair_residue(i, j).expect("pairs basis"));
        }
    }
    let get = |i: usize, j: usize| &omega[&if i < j { (i, j) } else { (j, i) }];
    let mut checks = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            for k in (j + 1)..=n {
                let v1 = get(i, j).commutator(&(get(i, k) + get(j, k))).frobenius_norm();
                checks.push(RelationCheck {
                    relation: format!("[O{i}{j}, O{i}{k} + O{j}{k}]"),
                    violation: v1,
                });
                let v2 = get(i, k).commutator(&(get(i, j) + get(j, k))).frobenius_norm();
                checks.push(RelationCheck {
                    relation: format!("[O{i}{k}, O{i}{j} + O{j}{k}]"),
                    violation: v2,
                });
            }
        }
    }
    let pairs: Vec<(usize, usize)> = omega.keys().copied().collect();
    let mut sorted = pairs.clone();
    sorted.sort();
    for (a, &(i, j)) in sorted.iter().enumerate() {
        for &(k, l) in &sorted[a + 1..] {
            if i != k && i != l && j != k && j != l {
                checks.push(RelationCheck {
                    relation: format!("[O{i}{j}, O{k}{l}]"),
                    violation: get(i, j).commutator(get(k, l)).frobenius_norm(),
                });
            }
        }
    }
    let max_violation = checks.iter().map(|c| c.violation).fold(0.0, f64::max);
    Ok(IntegrabilityReport {
        max_violation,
        checks,
    })
}

/// `e^{2πi·w·A}` for a scalar multiple; used as the exact single-pole value.
pub fn single_pole_monodromy(residue: &CMatrix, winding: i32) -> CMatrix {
    residue.scale(C64::new(0.0, 2.0 * PI * winding as f64)).exp()
}
