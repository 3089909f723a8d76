//! sl₂ spin modules, the two-site Casimir operator and the
//! Knizhnik-Zamolodchikov connection.
//!
//! Spin modules use the weight basis `m = j, j−1, …, −j` with
//! `h = 2S_z`, `e = S_+`, `f = S_−`, so `[h, e] = 2e`, `[h, f] = −2f` and
//! `[e, f] = h`. The Casimir element is `c = ½h² + ef + fe`, and
//! `Ω = ½(Δc − c⊗1 − 1⊗c) = ½h⊗h + e⊗f + f⊗e`. On two spin-½ sites this is
//! `P − ½I` with `P` the swap.
//!
//! The braid generator `σ_i` acts by transport along the half-twist of
//! strands `i, i+1` followed by the flip of tensor factors `i, i+1`. A braid
//! word `l_1 l_2 ⋯ l_k`, read as the order of travel, maps to
//! `B_{l_k} ⋯ B_{l_1}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fuchsian::{self, LogarithmicConnection, RelationCheck};
use crate::matrix::{CMatrix, C64, ONE, ZERO};
use crate::paths::{self, AffineFunctional, BraidLetter, BraidWord, PiecewisePath};
use crate::{Error, Result};

/// Tolerance on the stored sl₂ commutation relations.
pub const COMMUTATION_TOL: f64 = 1e-12;

/// The irreducible sl₂ module of spin `two_j / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinModule {
    two_j: u32,
    h: CMatrix,
    e: CMatrix,
    f: CMatrix,
}

impl SpinModule {
    pub fn new(two_j: u32) -> Self {
        let d = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let m = |r: usize| j - r as f64;
        let h = CMatrix::from_fn(d, |r, s| if r == s { C64::new(2.0 * m(r), 0.0) } else { ZERO });
        // e|m⟩ = √((j−m)(j+m+1)) |m+1⟩, and |m+1⟩ sits one row up
        let e = CMatrix::from_fn(d, |r, s| {
            if r + 1 == s {
                C64::new(((j - m(s)) * (j + m(s) + 1.0)).sqrt(), 0.0)
            } else {
                ZERO
            }
        });
        let f = e.adjoint();
        Self { two_j, h, e, f }
    }

    /// Spin `j` given as a nonnegative half-integer.
    pub fn from_spin(j: f64) -> Result<Self> {
        let two_j = 2.0 * j;
        if !(two_j >= 0.0) || (two_j - two_j.round()).abs() > 1e-12 || two_j > 64.0 {
            return Err(Error::InvalidInput(format!("spin {j} is not a half-integer in [0, 32]")));
        }
        Ok(Self::new(two_j.round() as u32))
    }

    pub fn spin(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    /// Largest Frobenius defect among `[h,e] − 2e`, `[h,f] + 2f`, `[e,f] − h`.
    pub fn commutation_defect(&self) -> f64 {
        let two = C64::new(2.0, 0.0);
        let a = (&self.h.commutator(&self.e) - &self.e.scale(two)).frobenius_norm();
        let b = (&self.h.commutator(&self.f) + &self.f.scale(two)).frobenius_norm();
        let c = (&self.e.commutator(&self.f) - &self.h).frobenius_norm();
        a.max(b).max(c)
    }

    /// `c = ½h² + ef + fe`, which acts as `2j(j+1)` on the module.
    pub fn casimir(&self) -> CMatrix {
        casimir_of(&self.h, &self.e, &self.f)
    }
}

fn casimir_of(h: &CMatrix, e: &CMatrix, f: &CMatrix) -> CMatrix {
    let half = C64::new(0.5, 0.0);
    &(&(h * h).scale(half) + &(e * f)) + &(f * e)
}

/// `X ↦ I ⊗ ⋯ ⊗ X ⊗ ⋯ ⊗ I` with `X` in factor `site` (0-based).
pub fn embed(op: &CMatrix, site: usize, dims: &[usize]) -> CMatrix {
    dims.iter().enumerate().fold(CMatrix::identity(1), |acc, (k, &d)| {
        if k == site {
            acc.kron(op)
        } else {
            acc.kron(&CMatrix::identity(d))
        }
    })
}

/// `½(Δc − c⊗1 − 1⊗c)` on `V_i ⊗ V_j`.
pub fn casimir_omega(vi: &SpinModule, vj: &SpinModule) -> CMatrix {
    let dims = [vi.dim(), vj.dim()];
    let both = |a: &CMatrix, b: &CMatrix| &embed(a, 0, &dims) + &embed(b, 1, &dims);
    let delta_c = casimir_of(&both(&vi.h, &vj.h), &both(&vi.e, &vj.e), &both(&vi.f, &vj.f));
    let ci = embed(&vi.casimir(), 0, &dims);
    let cj = embed(&vj.casimir(), 1, &dims);
    (&(&delta_c - &ci) - &cj).scale(C64::new(0.5, 0.0))
}

/// Permutation matrix exchanging tensor factors `a` and `b` (0-based) of
/// `V^{⊗n}`; all factors must have the dimension in `dims`.
pub fn flip_operator(dims: &[usize], a: usize, b: usize) -> Result<CMatrix> {
    if dims[a] != dims[b] {
        return Err(Error::InvalidInput(format!(
            "cannot exchange factors of dimensions {} and {}",
            dims[a], dims[b]
        )));
    }
    let total: usize = dims.iter().product();
    let digits = |mut idx: usize| {
        let mut out = vec![0usize; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = idx % dims[k];
            idx /= dims[k];
        }
        out
    };
    let index = |ds: &[usize]| ds.iter().zip(dims).fold(0usize, |acc, (x, d)| acc * d + x);
    let mut p = CMatrix::zeros(total);
    for col in 0..total {
        let mut ds = digits(col);
        ds.swap(a, b);
        p[(index(&ds), col)] = ONE;
    }
    Ok(p)
}

/// `n` marked points with spin modules and coupling `λ`.
#[derive(Clone, Debug)]
pub struct KZSystem {
    modules: Vec<SpinModule>,
    lambda: C64,
    /// `Ω_ij` on `V_1 ⊗ ⋯ ⊗ V_n`, pairs in lexicographic order.
    omegas: Vec<CMatrix>,
}

/// Builds the system `∂Ψ/∂z_i = (1/λ) Σ_{j≠i} Ω_ij/(z_i − z_j) Ψ`.
pub fn build_kz(modules: Vec<SpinModule>, lambda: C64) -> Result<KZSystem> {
    let n = modules.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("KZ system needs n >= 2 points, got {n}")));
    }
    if lambda == ZERO || !lambda.is_finite() {
        return Err(Error::InvalidInput("coupling λ must be finite and nonzero".into()));
    }
    let dims: Vec<usize> = modules.iter().map(SpinModule::dim).collect();
    if dims.iter().product::<usize>() > 4096 {
        return Err(Error::InvalidInput("tensor space exceeds 4096 dimensions".into()));
    }
    let lift = |k: usize, pick: fn(&SpinModule) -> &CMatrix| embed(pick(&modules[k]), k, &dims);
    let mut omegas = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pair = |pick: fn(&SpinModule) -> &CMatrix| &lift(i, pick) + &lift(j, pick);
            let delta_c = casimir_of(&pair(SpinModule::h), &pair(SpinModule::e), &pair(SpinModule::f));
            let ci = embed(&modules[i].casimir(), i, &dims);
            let cj = embed(&modules[j].casimir(), j, &dims);
            omegas.push((&(&delta_c - &ci) - &cj).scale(C64::new(0.5, 0.0)));
        }
    }
    Ok(KZSystem {
        modules,
        lambda,
        omegas,
    })
}

/// `n` copies of the spin-`j` module.
pub fn uniform_kz(n: usize, spin: f64, lambda: C64) -> Result<KZSystem> {
    let v = SpinModule::from_spin(spin)?;
    build_kz(vec![v; n], lambda)
}

impl KZSystem {
    pub fn n(&self) -> usize {
        self.modules.len()
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn modules(&self) -> &[SpinModule] {
        &self.modules
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modules.iter().map(SpinModule::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// `Ω_ij` for `1 <= i < j <= n`.
    pub fn omega(&self, i: usize, j: usize) -> Result<&CMatrix> {
        let n = self.n();
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        if i < 1 || i == j || j > n {
            return Err(Error::InvalidInput(format!("no pair ({i}, {j}) among {n} points")));
        }
        // lexicographic position of (i, j)
        let k = (1..i).map(|r| n - r).sum::<usize>() + (j - i - 1);
        Ok(&self.omegas[k])
    }

    pub fn omegas(&self) -> &[CMatrix] {
        &self.omegas
    }

    /// The configuration-space connection with residues `Ω_ij/λ`.
    pub fn connection(&self) -> LogarithmicConnection {
        let inv = ONE / self.lambda;
        let residues = self.omegas.iter().map(|o| o.scale(inv)).collect();
        LogarithmicConnection::pairs(self.n(), residues).expect("pairs basis is valid")
    }

    /// The diagonal sl₂ action `Σ_k x_k` for `x ∈ {h, e, f}`.
    pub fn total_action(&self) -> [CMatrix; 3] {
        let dims = self.dims();
        let sum = |pick: fn(&SpinModule) -> &CMatrix| {
            (0..self.n()).fold(CMatrix::zeros(self.dim()), |acc, k| {
                &acc + &embed(pick(&self.modules[k]), k, &dims)
            })
        };
        [sum(SpinModule::h), sum(SpinModule::e), sum(SpinModule::f)]
    }

    fn require_identical(&self) -> Result<()> {
        if self.modules.windows(2).any(|w| w[0].two_j != w[1].two_j) {
            return Err(Error::InvalidInput(
                "braid group action needs identical modules at all points".into(),
            ));
        }
        Ok(())
    }
}

/// Direction of the half-twist realizing `σ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

/// `B_i = P_{i,i+1} · T(σ_i)` with the counterclockwise half-twist from
/// the default basepoint.
pub fn braid_matrix(sys: &KZSystem, i: usize, tol: f64) -> Result<CMatrix> {
    braid_matrix_with(sys, i, Orientation::Counterclockwise, true, tol)
}

/// Half-twist transport in the given orientation, optionally followed by
/// the flip of factors `i, i+1`.
pub fn braid_matrix_with(
    sys: &KZSystem,
    i: usize,
    orientation: Orientation,
    flip: bool,
    tol: f64,
) -> Result<CMatrix> {
    sys.require_identical()?;
    let letter = match orientation {
        Orientation::Counterclockwise => BraidLetter::pos(i),
        Orientation::Clockwise => BraidLetter::neg(i),
    };
    let path = paths::braid_word_path(sys.n(), &BraidWord(vec![letter]), None)?;
    let t = fuchsian::transport(&sys.connection(), &path, tol)?;
    if flip {
        Ok(&flip_operator(&sys.dims(), i - 1, i)? * &t)
    } else {
        Ok(t)
    }
}

/// All generators `B_1, …, B_{n−1}`, computed in parallel.
pub fn braid_matrices(sys: &KZSystem, tol: f64) -> Result<Vec<CMatrix>> {
    use rayon::prelude::*;
    (1..sys.n())
        .into_par_iter()
        .map(|i| braid_matrix(sys, i, tol))
        .collect()
}

/// `B_{l_k} ⋯ B_{l_1}` for the word `l_1 ⋯ l_k`.
pub fn word_matrix(mats: &[CMatrix], word: &BraidWord) -> Result<CMatrix> {
    let d = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("no generator matrices".into()))?
        .dim();
    let mut acc = CMatrix::identity(d);
    for l in word.letters() {
        let b = mats.get(l.generator.wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidInput(format!("word uses generator {} beyond the given matrices", l.generator))
        })?;
        let factor = if l.inverse { b.try_inverse()? } else { b.clone() };
        acc = &factor * &acc;
    }
    Ok(acc)
}

/// One convention for the `n = 2` generator compared with `e^{−πiΩ/λ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConventionVariant {
    pub orientation: Orientation,
    pub flip: bool,
    pub matrix: CMatrix,
    pub distance: f64,
    pub projective_distance: f64,
}

/// The four orientation/flip variants of `B_1` for `n = 2`, against the
/// reference `e^{−πiΩ_12/λ}`.
pub fn braid_conventions(sys: &KZSystem, tol: f64) -> Result<Vec<ConventionVariant>> {
    if sys.n() != 2 {
        return Err(Error::InvalidInput("convention comparison is defined for n = 2".into()));
    }
    let reference = sys
        .omega(1, 2)?
        .scale(C64::new(0.0, -PI) / sys.lambda)
        .exp();
    let mut out = Vec::new();
    for orientation in [Orientation::Counterclockwise, Orientation::Clockwise] {
        for flip in [true, false] {
            let matrix = braid_matrix_with(sys, 1, orientation, flip, tol)?;
            out.push(ConventionVariant {
                orientation,
                flip,
                distance: matrix.distance(&reference),
                projective_distance: matrix.projective_distance(&reference),
                matrix,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BraidRelationReport {
    pub n: usize,
    /// `‖B_i B_{i+1} B_i − B_{i+1} B_i B_{i+1}‖_F`.
    pub braid: Vec<RelationCheck>,
    /// `‖B_i B_j − B_j B_i‖_F` for `|i − j| >= 2`.
    pub far_commutation: Vec<RelationCheck>,
    /// Unitarity defects of the `τ_ij` matrices, present when all inputs
    /// are unitary within `tol`.
    pub pure_braid_unitarity: Option<Vec<RelationCheck>>,
    pub max_deviation: f64,
    pub tol: f64,
}

impl BraidRelationReport {
    pub fn passes(&self) -> bool {
        self.max_deviation <= self.tol
    }
}

pub fn verify_braid_relations(mats: &[CMatrix], n: usize, tol: f64) -> Result<BraidRelationReport> {
    if n < 2 || mats.len() != n - 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} generator matrices for n = {n}, got {}",
            n.saturating_sub(1),
            mats.len()
        )));
    }
    let d = mats[0].dim();
    if let Some(m) = mats.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.dim(),
        });
    }
    let mut braid = Vec::new();
    for i in 0..mats.len().saturating_sub(1) {
        let (a, b) = (&mats[i], &mats[i + 1]);
        let lhs = &(a * b) * a;
        let rhs = &(b * a) * b;
        braid.push(RelationCheck {
            relation: format!("s{0} s{1} s{0} = s{1} s{0} s{1}", i + 1, i + 2),
            violation: lhs.distance(&rhs),
        });
    }
    let mut far = Vec::new();
    for i in 0..mats.len() {
        for j in (i + 2)..mats.len() {
            far.push(RelationCheck {
                relation: format!("s{} s{} = s{1} s{0}", i + 1, j + 1),
                violation: mats[i].commutator(&mats[j]).frobenius_norm(),
            });
        }
    }
    let pure = if mats.iter().all(|m| m.is_unitary(tol)) {
        let mut checks = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let w = paths::pure_braid_word(n, i, j)?;
                checks.push(RelationCheck {
                    relation: format!("tau_{i}{j} unitary"),
                    violation: word_matrix(mats, &w)?.unitarity_defect(),
                });
            }
        }
        Some(checks)
    } else {
        None
    };
    let max_deviation = braid
        .iter()
        .chain(&far)
        .chain(pure.iter().flatten())
        .map(|c| c.violation)
        .fold(0.0, f64::max);
    Ok(BraidRelationReport {
        n,
        braid,
        far_commutation: far,
        pure_braid_unitarity: pure,
        max_deviation,
        tol,
    })
}

/// An invariant Hermitian form `H` with `B_i† H B_i = H` and, when `H` is
/// positive definite, the conjugated generators `S B_i S^{-1}` with
/// `S = H^{1/2}`, which are then unitary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Unitarization {
    pub form: CMatrix,
    /// `max_i ‖B_i† H B_i − H‖_F / ‖H‖_F`.
    pub invariance_defect: f64,
    /// Smallest eigenvalue of `H` relative to the largest.
    pub definiteness: f64,
    pub unitarized: Option<Vec<CMatrix>>,
    /// `max_i ‖(S B_i S^{-1})†(S B_i S^{-1}) − I‖_F`.
    pub max_unitarity_defect: Option<f64>,
}

impl Unitarization {
    /// `H` is invariant to rounding and the conjugated generators are
    /// unitary within `tol`.
    pub fn certifies(&self, tol: f64) -> bool {
        self.invariance_defect <= 1e-12 && self.max_unitarity_defect.is_some_and(|d| d <= tol)
    }
}

/// Averages `H ↦ B† H B` over a symmetric random walk on the generators,
/// starting from `I`, until the average is invariant.
///
/// The average stays positive definite and converges when the group
/// generated is relatively compact, which is the unitarizable case.
pub fn unitarization(mats: &[CMatrix], max_iterations: usize) -> Result<Unitarization> {
    let d = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("no generator matrices".into()))?
        .dim();
    let inverses = mats.iter().map(CMatrix::try_inverse).collect::<Result<Vec<_>>>()?;
    let defect = |h: &CMatrix| {
        mats.iter()
            .map(|b| (&(&b.adjoint() * h) * b).distance(h))
            .fold(0.0, f64::max)
            / h.frobenius_norm()
    };
    let mut h = CMatrix::identity(d);
    for _ in 0..max_iterations {
        if defect(&h) <= 1e-14 {
            break;
        }
        let mut acc = h.clone();
        for (b, bi) in mats.iter().zip(&inverses) {
            acc += &(&(&b.adjoint() * &h) * b);
            acc += &(&(&bi.adjoint() * &h) * bi);
        }
        let trace = acc.trace().re;
        // restore exact Hermitian symmetry lost to rounding
        h = (&acc + &acc.adjoint()).scale(C64::new(0.5 * d as f64 / trace, 0.0));
    }
    let eig = h.inner().clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x.abs())));
    let definiteness = lo / hi;
    let invariance_defect = defect(&h);
    let (unitarized, max_unitarity_defect) = if definiteness > 1e-8 {
        let sqrt: Vec<f64> = eig.eigenvalues.iter().map(|x| x.sqrt()).collect();
        let q = &eig.eigenvectors;
        let s = CMatrix::new(q * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            sqrt.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )) * q.adjoint())?;
        let s_inv = s.try_inverse()?;
        let u: Vec<CMatrix> = mats.iter().map(|b| &(&s * b) * &s_inv).collect();
        let worst = u.iter().map(CMatrix::unitarity_defect).fold(0.0, f64::max);
        (Some(u), Some(worst))
    } else {
        (None, None)
    };
    Ok(Unitarization {
        form: h,
        invariance_defect,
        definiteness,
        unitarized,
        max_unitarity_defect,
    })
}

/// `exp((ℓ/λ) Ω)` where `ℓ` is `ln(z_1 − z_2)` continued along `path` in ℂ²
/// from its principal value at the start.
pub fn two_point_propagator(omega: &CMatrix, lambda: C64, path: &PiecewisePath) -> Result<CMatrix> {
    let (ell_start, ell_end) = continued_log(lambda, path)?;
    Ok(omega.scale((ell_end - ell_start) / lambda).exp())
}

fn continued_log(lambda: C64, path: &PiecewisePath) -> Result<(C64, C64)> {
    if lambda == ZERO {
        return Err(Error::InvalidInput("coupling λ must be nonzero".into()));
    }
    if path.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: path.dim(),
        });
    }
    let h = AffineFunctional::difference(2, 0, 1);
    if path.min_modulus(&h) <= crate::paths::POINT_SEPARATION {
        return Err(Error::InvalidInput("path meets z_1 = z_2".into()));
    }
    let start = h.eval(&path.start()).ln();
    Ok((start, start + path.log_increment(&h)))
}

/// `F(z) = e^{(1/λ) ln(z_1 − z_2) Ω} C` at the end of `path`, with the
/// logarithm continued along it from the principal branch at its start.
pub fn two_point_solution(omega: &CMatrix, lambda: C64, path: &PiecewisePath, c: &[C64]) -> Result<Vec<C64>> {
    let (_, ell) = continued_log(lambda, path)?;
    omega.scale(ell / lambda).exp().mul_vec(c)
}

/// `F` at `(z_1, z_2)` on the principal branch of `ln(z_1 − z_2)`.
pub fn two_point_principal(omega: &CMatrix, lambda: C64, z: (C64, C64), c: &[C64]) -> Result<Vec<C64>> {
    let w = z.0 - z.1;
    if w.norm() <= crate::paths::POINT_SEPARATION {
        return Err(Error::InvalidInput("z_1 = z_2".into()));
    }
    if lambda == ZERO {
        return Err(Error::InvalidInput("coupling λ must be nonzero".into()));
    }
    omega.scale(w.ln() / lambda).exp().mul_vec(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use crate::paths::PathSegment;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spin_s_dot_s(vi: &SpinModule, vj: &SpinModule) -> CMatrix {
        // 2 S·S with S_x = (e+f)/2, S_y = (e−f)/2i, S_z = h/2
        let half = c(0.5, 0.0);
        let sx = |v: &SpinModule| (v.e() + v.f()).scale(half);
        let sy = |v: &SpinModule| (v.e() - v.f()).scale(c(0.0, -0.5));
        let sz = |v: &SpinModule| v.h().scale(half);
        let sum = &(&sx(vi).kron(&sx(vj)) + &sy(vi).kron(&sy(vj))) + &sz(vi).kron(&sz(vj));
        sum.scale(c(2.0, 0.0))
    }

    #[test]
    fn spin_modules_satisfy_sl2() {
        for two_j in 0..=8 {
            let v = SpinModule::new(two_j);
            assert_eq!(v.dim(), two_j as usize + 1);
            assert!(v.commutation_defect() <= COMMUTATION_TOL, "2j = {two_j}");
            let j = v.spin();
            let expected = CMatrix::identity(v.dim()).scale(c(2.0 * j * (j + 1.0), 0.0));
            assert!(v.casimir().distance(&expected) < 1e-12);
        }
        assert!(SpinModule::from_spin(0.3).is_err());
        assert!(SpinModule::from_spin(-0.5).is_err());
    }

    #[test]
    fn spin_half_omega_is_the_printed_matrix() {
        let v = SpinModule::new(1);
        let omega = casimir_omega(&v, &v);
        let printed = CMatrix::from_real_rows(&[
            &[0.5, 0.0, 0.0, 0.0],
            &[0.0, -0.5, 1.0, 0.0],
            &[0.0, 1.0, -0.5, 0.0],
            &[0.0, 0.0, 0.0, 0.5],
        ]);
        // exact dyadic rationals
        assert_eq!(omega, printed);
        let swap = flip_operator(&[2, 2], 0, 1).unwrap();
        assert_eq!(omega, &swap - &CMatrix::identity(4).scale(c(0.5, 0.0)));
    }

    #[test]
    fn spin_half_omega_spectrum() {
        let v = SpinModule::new(1);
        let omega = casimir_omega(&v, &v);
        let eig = omega.inner().clone().symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let want = [-1.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_matches_independent_spin_dot_spin() {
        for a in 0..=4 {
            for b in 0..=4 {
                let (vi, vj) = (SpinModule::new(a), SpinModule::new(b));
                let d = casimir_omega(&vi, &vj).distance(&spin_s_dot_s(&vi, &vj));
                assert!(d < 1e-12, "2j = {a}, {b}: {d}");
            }
        }
    }

    #[test]
    fn omega_commutes_with_diagonal_action() {
        for a in 0..=4 {
            for b in 0..=4 {
                let (vi, vj) = (SpinModule::new(a), SpinModule::new(b));
                let omega = casimir_omega(&vi, &vj);
                let dims = [vi.dim(), vj.dim()];
                for (x, y) in [(vi.h(), vj.h()), (vi.e(), vj.e()), (vi.f(), vj.f())] {
                    let delta = &embed(x, 0, &dims) + &embed(y, 1, &dims);
                    assert!(omega.commutator(&delta).frobenius_norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn embedded_omegas_are_local_and_hermitian() {
        let sys = uniform_kz(4, 0.5, c(3.0, 0.0)).unwrap();
        let dims = sys.dims();
        let x = crate::gate::pauli_x();
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                let o = sys.omega(i, j).unwrap();
                assert!(o.hermiticity_defect() < 1e-14);
                for k in (1..=4).filter(|&k| k != i && k != j) {
                    let other = embed(&x, k - 1, &dims);
                    assert!(o.commutator(&other).frobenius_norm() < 1e-14);
                }
            }
        }
        // pairwise embedding agrees with the two-site operator on sites 1, 2
        let v = SpinModule::new(1);
        let direct = casimir_omega(&v, &v).kron(&CMatrix::identity(4));
        assert_eq!(sys.omega(1, 2).unwrap(), &direct);
    }

    #[test]
    fn n2_connection_is_the_two_point_system() {
        let lambda = c(2.0, 0.5);
        let sys = uniform_kz(2, 0.5, lambda).unwrap();
        let conn = sys.connection();
        let omega = casimir_omega(&SpinModule::new(1), &SpinModule::new(1));
        let z = [c(0.3, 0.2), c(-1.0, 0.7)];
        // ∂/∂z_1 and ∂/∂z_2 components
        let d1 = conn.contract(&z, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let d2 = conn.contract(&z, &[c(0.0, 0.0), c(1.0, 0.0)]);
        let expect = omega.scale(ONE / (lambda * (z[0] - z[1])));
        assert!(d1.distance(&expect) < 1e-14);
        assert!(d2.distance(&expect.scale(-ONE)) < 1e-14);
    }

    #[test]
    fn kz_flatness() {
        for n in 2..=4 {
            let sys = uniform_kz(n, 0.5, c(3.0, 0.0)).unwrap();
            let rep = fuchsian::integrability_check(&sys.connection()).unwrap();
            assert!(rep.max_violation <= 1e-12, "n = {n}: {}", rep.max_violation);
        }
        let sys = uniform_kz(3, 1.0, c(2.0, 1.0)).unwrap();
        assert!(fuchsian::integrability_check(&sys.connection()).unwrap().max_violation <= 1e-12);
    }

    #[test]
    fn kz_curvature_vanishes_at_random_points() {
        let sys = uniform_kz(3, 0.5, c(3.0, 0.0)).unwrap();
        let conn = sys.connection();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rc = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        for _ in 0..20 {
            let z: Vec<C64> = (0..3).map(|_| rc()).collect();
            let u: Vec<C64> = (0..3).map(|_| rc()).collect();
            let v: Vec<C64> = (0..3).map(|_| rc()).collect();
            assert!(fuchsian::curvature_residual(&conn, &z, &u, &v).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn zero_residues_give_identity_transport() {
        let sys = uniform_kz(3, 0.5, c(3.0, 0.0)).unwrap();
        let conn = LogarithmicConnection::zero(sys.connection().basis().clone(), sys.dim()).unwrap();
        let path = paths::braid_generator_path(3, 2, None).unwrap();
        let t = fuchsian::transport(&conn, &path, 1e-10).unwrap();
        assert!(t.distance(&CMatrix::identity(8)) < 1e-14);
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(uniform_kz(3, 0.5, ZERO).is_err());
        assert!(uniform_kz(1, 0.5, ONE).is_err());
        let mixed = build_kz(vec![SpinModule::new(1), SpinModule::new(2)], ONE).unwrap();
        assert!(braid_matrix(&mixed, 1, 1e-10).is_err());
    }

    #[test]
    fn flip_is_an_involution_swapping_factors() {
        let dims = [2, 3, 3];
        let p = flip_operator(&dims, 1, 2).unwrap();
        assert_eq!(&p * &p, CMatrix::identity(18));
        let a = CMatrix::from_fn(3, |r, s| c(r as f64, s as f64));
        let b = CMatrix::from_fn(3, |r, s| c((r * s) as f64, 1.0));
        let lhs = &(&p * &CMatrix::identity(2).kron(&a).kron(&b)) * &p;
        assert_eq!(lhs, CMatrix::identity(2).kron(&b).kron(&a));
        assert!(flip_operator(&dims, 0, 1).is_err());
    }

    #[test]
    fn two_point_principal_at_unit_separation() {
        let omega = casimir_omega(&SpinModule::new(1), &SpinModule::new(1));
        let cvec = vec![c(0.1, 0.2), c(0.3, -0.4), c(0.5, 0.0), c(-0.6, 0.7)];
        let f = two_point_principal(&omega, c(2.0, 0.0), (c(3.0, 0.0), c(2.0, 0.0)), &cvec).unwrap();
        for (a, b) in f.iter().zip(&cvec) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn two_point_full_loop_picks_up_monodromy() {
        let omega = casimir_omega(&SpinModule::new(1), &SpinModule::new(1));
        let lambda = c(3.0, 1.0);
        // z_1 circles z_2 = 0 once counterclockwise at radius 1
        let loop_ = PiecewisePath::new(vec![PathSegment::Arc {
            center: vec![ZERO, ZERO],
            offset: vec![ONE, ZERO],
            sweep: 2.0 * PI,
        }])
        .unwrap();
        let m = two_point_propagator(&omega, lambda, &loop_).unwrap();
        let want = omega.scale(c(0.0, 2.0 * PI) / lambda).exp();
        assert!(m.distance(&want) < 1e-13);
    }

    #[test]
    fn half_twist_closed_form_for_n2() {
        let sys = uniform_kz(2, 0.5, c(2.0, 0.0)).unwrap();
        let omega = sys.omega(1, 2).unwrap().clone();
        let p = flip_operator(&[2, 2], 0, 1).unwrap();
        let b = braid_matrix(&sys, 1, 1e-12).unwrap();
        let want = &p * &omega.scale(c(0.0, PI) / sys.lambda()).exp();
        assert!(b.distance(&want) < 1e-9, "{}", b.distance(&want));
    }

    #[test]
    fn braid_relations_hold_for_n3_and_n4() {
        for n in [3, 4] {
            let sys = uniform_kz(n, 0.5, c(3.0, 0.0)).unwrap();
            let b = braid_matrices(&sys, 1e-11).unwrap();
            let rep = verify_braid_relations(&b, n, 1e-6).unwrap();
            assert!(rep.passes(), "n = {n}: {}", rep.max_deviation);
            for i in 1..n {
                let full = fuchsian::transport(&sys.connection(), &paths::pure_braid_path(n, i, i + 1, None).unwrap(), 1e-11)
                    .unwrap();
                assert!((&b[i - 1] * &b[i - 1]).distance(&full) < 1e-6);
            }
        }
    }

    #[test]
    fn pure_braid_words_match_direct_transport() {
        let sys = uniform_kz(3, 0.5, c(2.0, 0.5)).unwrap();
        let b = braid_matrices(&sys, 1e-12).unwrap();
        let conn = sys.connection();
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            let w = paths::pure_braid_word(3, i, j).unwrap();
            let direct = fuchsian::transport(&conn, &paths::pure_braid_path(3, i, j, None).unwrap(), 1e-12).unwrap();
            assert!(word_matrix(&b, &w).unwrap().distance(&direct) < 1e-8, "tau_{i}{j}");
        }
    }

    #[test]
    fn two_strand_generator_is_unitary_for_real_coupling() {
        for lam in [2.0, 3.0, 7.5] {
            let sys = uniform_kz(2, 0.5, c(lam, 0.0)).unwrap();
            let b = braid_matrix(&sys, 1, 1e-12).unwrap();
            assert!(b.unitarity_defect() <= 1e-8);
        }
    }

    #[test]
    fn unitarizable_coupling_admits_a_definite_form() {
        let sys = uniform_kz(3, 0.5, c(5.0, 0.0)).unwrap();
        let b = braid_matrices(&sys, 1e-12).unwrap();
        // not unitary in the tensor basis ...
        assert!(b[0].unitarity_defect() > 1e-2);
        // ... but unitary after conjugating by the square root of an invariant form
        let u = unitarization(&b, 20_000).unwrap();
        assert!(u.invariance_defect < 1e-12);
        assert!(u.definiteness > 0.1);
        assert!(u.max_unitarity_defect.unwrap() <= 1e-8);
    }

    #[test]
    fn level_one_coupling_has_unbounded_image() {
        // at λ = 3 the spin-½ three-strand representation is not semisimple:
        // powers of B_1 B_2^{-1} grow linearly, so no invariant definite form exists
        let sys = uniform_kz(3, 0.5, c(3.0, 0.0)).unwrap();
        let b = braid_matrices(&sys, 1e-12).unwrap();
        let g = &b[0] * &b[1].try_inverse().unwrap();
        let (n10, n100, n1000) = (g.powi(10).frobenius_norm(), g.powi(100).frobenius_norm(), g.powi(1000).frobenius_norm());
        assert!(n100 / n10 > 8.0 && n1000 / n100 > 8.0 && n1000 / n100 < 12.0);
        let u = unitarization(&b, 2000).unwrap();
        assert!(!u.certifies(1e-8), "{} {}", u.invariance_defect, u.definiteness);
    }

    #[test]
    fn convention_report_contains_the_printed_value() {
        let sys = uniform_kz(2, 0.5, c(3.0, 0.0)).unwrap();
        let variants = braid_conventions(&sys, 1e-12).unwrap();
        assert_eq!(variants.len(), 4);
        let hit = variants
            .iter()
            .find(|v| v.distance < 1e-9)
            .expect("one variant reproduces e^{-πiΩ/λ}");
        assert_eq!((hit.orientation, hit.flip), (Orientation::Clockwise, false));
    }

    #[test]
    fn word_matrix_of_identities() {
        let mats = vec![CMatrix::identity(2); 3];
        let w = paths::pure_braid_word(4, 1, 4).unwrap();
        assert_eq!(word_matrix(&mats, &w).unwrap(), CMatrix::identity(2));
        let rep = verify_braid_relations(&mats, 4, 1e-12).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.passes());
    }

    #[test]
    fn pauli_pair_violates_braid_relation() {
        let (x, z) = (crate::gate::pauli_x(), crate::gate::pauli_z());
        let rep = verify_braid_relations(&[x.clone(), z.clone()], 3, 1e-6).unwrap();
        let want = (&(&x * &z) * &x).distance(&(&(&z * &x) * &z));
        assert!((rep.braid[0].violation - want).abs() < 1e-15);
        // σ_xσ_zσ_x = −σ_z and σ_zσ_xσ_z = −σ_x
        assert!((want - 2.0).abs() < 1e-12);
        assert!(!rep.passes());
    }
}
