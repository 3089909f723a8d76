//! Chen iterated integrals and order-by-order synthesis of a connection
//! family with prescribed monodromy.
//!
//! For `Ω(λ) = Σ_k λ^k Σ_a U_k^a ω_a` and a loop `γ`, the left-acting
//! path-ordered exponential expands as
//!
//! ```text
//! ρ(γ) = I + Σ_q Σ_{a_1…a_q} C_γ(a_1…a_q) · U^{a_q}(λ) ⋯ U^{a_1}(λ),
//! C_γ(a_1…a_q) = ∫_{t_1<…<t_q} ω_{a_1}(γ(t_1)) ⋯ ω_{a_q}(γ(t_q)).
//! ```
//!
//! The coefficient of `λ^k` is linear in `U_k` through the periods
//! `P_{ja} = ∫_{γ_j} ω_a` and otherwise involves only `U_1, …, U_{k−1}`, so
//! the `U_k^a` follow from the targets one order at a time by solving with
//! the period matrix. Form letters are 0-based throughout this module.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fuchsian::{self, FormBasis, LogarithmicConnection};
use crate::matrix::{CMatrix, C64, ONE, ZERO};
use crate::ode::{self, Options};
use crate::paths::PiecewisePath;
use crate::{Error, Result};

pub const DEFAULT_ORDER: usize = 4;
/// Above this `|λ|` evaluation and verification carry a warning.
pub const LAMBDA_ADVISORY: f64 = 0.1;
/// Above this `‖M_1^j‖_F` targets are not treated as close to the identity.
pub const FIRST_ORDER_ADVISORY: f64 = 1.0;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 12;

fn integrate_forms<F>(basis: &FormBasis, path: &PiecewisePath, tol: f64, state: &mut [C64], mut rhs: F) -> Result<()>
where
    F: FnMut(&[C64], &[C64], &mut [C64]),
{
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let clearance = basis.check_path(path)?;
    let m = basis.len();
    let opts = Options {
        tol: tol / path.segments().len() as f64,
        ..Options::default()
    };
    let mut w = vec![ZERO; m];
    for (k, seg) in path.segments().iter().enumerate() {
        let cap = |t: f64| {
            let mut w = vec![ZERO; m];
            basis.eval(&seg.point(t), &seg.velocity(t), &mut w);
            let bound: f64 = w.iter().map(|c| c.norm()).sum();
            if bound > 0.0 {
                2.0 / bound
            } else {
                f64::INFINITY
            }
        };
        ode::integrate(state, 0.0, 1.0, &opts, cap, |t, y, dy| {
            basis.eval(&seg.point(t), &seg.velocity(t), &mut w);
            rhs(&w, y, dy);
        })
        .map_err(|f| Error::StepUnderflow {
            segment: k,
            t: f.t,
            closest: clearance,
        })?;
    }
    Ok(())
}

/// `∫_γ ω_{j_1} ⋯ ω_{j_k}` from the companion system
/// `y_0' = 0, y_q' = y_{q−1}·ω_{j_q}(γ)γ'`, `y(0) = (1, 0, …, 0)`.
pub fn chen_integral(basis: &FormBasis, word: &[usize], path: &PiecewisePath, tol: f64) -> Result<C64> {
    if word.is_empty() {
        return Err(Error::InvalidInput("iterated integral needs at least one form".into()));
    }
    if let Some(&a) = word.iter().find(|&&a| a >= basis.len()) {
        return Err(Error::InvalidInput(format!("form index {a} out of range")));
    }
    let k = word.len();
    let mut y = vec![ZERO; k + 1];
    y[0] = ONE;
    integrate_forms(basis, path, tol, &mut y, |w, y, dy| {
        dy[0] = ZERO;
        for q in 1..=k {
            dy[q] = y[q - 1] * w[word[q - 1]];
        }
    })?;
    Ok(y[k])
}

/// Every iterated integral of words of length `1..=depth` in `m` forms.
///
/// Words of length `q` are stored as base-`m` numbers (first letter most
/// significant) after the `m + m² + ⋯ + m^{q−1}` shorter ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub forms: usize,
    pub depth: usize,
    #[serde(with = "crate::matrix::complex_vec_serde")]
    pub values: Vec<C64>,
}

impl Signature {
    fn offset(m: usize, q: usize) -> usize {
        (1..q).map(|r| m.pow(r as u32)).sum()
    }

    fn len_for(m: usize, depth: usize) -> usize {
        Self::offset(m, depth + 1)
    }

    pub fn index(&self, word: &[usize]) -> usize {
        let local = word.iter().fold(0usize, |acc, &a| acc * self.forms + a);
        Self::offset(self.forms, word.len()) + local
    }

    pub fn get(&self, word: &[usize]) -> C64 {
        assert!(!word.is_empty() && word.len() <= self.depth);
        self.values[self.index(word)]
    }

    /// Values of all words of length `q`, in base-`m` order.
    pub fn level(&self, q: usize) -> &[C64] {
        let start = Self::offset(self.forms, q);
        &self.values[start..start + self.forms.pow(q as u32)]
    }
}

/// All iterated integrals up to `depth` along `path` in one truncated
/// tensor-algebra system.
pub fn chen_signature(basis: &FormBasis, path: &PiecewisePath, depth: usize, tol: f64) -> Result<Signature> {
    let m = basis.len();
    if depth == 0 || depth > MAX_ORDER {
        return Err(Error::InvalidInput(format!("signature depth must be in 1..={MAX_ORDER}")));
    }
    let total = Signature::len_for(m, depth);
    if total > 2_000_000 {
        return Err(Error::InvalidInput(format!("{total} iterated integrals requested")));
    }
    let mut y = vec![ZERO; total];
    integrate_forms(basis, path, tol, &mut y, |w, y, dy| {
        dy[..m].copy_from_slice(w);
        for q in 1..depth {
            let (src, dst) = (Signature::offset(m, q), Signature::offset(m, q + 1));
            for p in 0..m.pow(q as u32) {
                let parent = y[src + p];
                for (a, wa) in w.iter().enumerate() {
                    dy[dst + p * m + a] = parent * wa;
                }
            }
        }
    })?;
    Ok(Signature {
        forms: m,
        depth,
        values: y,
    })
}

/// `M^j(λ) = I + Σ_k λ^k M_k^j`, truncated at order `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub struct RepresentationFamily {
    /// `coefficients[j][k − 1] = M_k^j`.
    coefficients: Vec<Vec<CMatrix>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    generators: usize,
    order: usize,
    coefficients: Vec<Vec<CMatrix>>,
}

impl TryFrom<FamilyRepr> for RepresentationFamily {
    type Error = Error;
    fn try_from(r: FamilyRepr) -> Result<Self> {
        let fam = Self::new(r.coefficients)?;
        if fam.generators() != r.generators || fam.order() != r.order {
            return Err(Error::InvalidInput(format!(
                "declared {} generators to order {}, found {} to order {}",
                r.generators,
                r.order,
                fam.generators(),
                fam.order()
            )));
        }
        Ok(fam)
    }
}

impl From<RepresentationFamily> for FamilyRepr {
    fn from(f: RepresentationFamily) -> Self {
        FamilyRepr {
            generators: f.generators(),
            order: f.order(),
            coefficients: f.coefficients,
        }
    }
}

fn check_grid(coefficients: &[Vec<CMatrix>], what: &str) -> Result<(usize, usize)> {
    let first = coefficients
        .first()
        .and_then(|c| c.first())
        .ok_or_else(|| Error::InvalidInput(format!("{what} has no coefficients")))?;
    let (order, dim) = (coefficients[0].len(), first.dim());
    for row in coefficients {
        if row.len() != order {
            return Err(Error::InvalidInput(format!("{what}: every generator needs {order} coefficients")));
        }
        if let Some(m) = row.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
    }
    if order > MAX_ORDER {
        return Err(Error::InvalidInput(format!("{what}: order {order} exceeds {MAX_ORDER}")));
    }
    Ok((order, dim))
}

impl RepresentationFamily {
    pub fn new(coefficients: Vec<Vec<CMatrix>>) -> Result<Self> {
        check_grid(&coefficients, "representation family")?;
        Ok(Self { coefficients })
    }

    /// All coefficients zero.
    pub fn zero(generators: usize, dim: usize, order: usize) -> Result<Self> {
        Self::new(vec![vec![CMatrix::zeros(dim); order]; generators])
    }

    /// `M^j(λ) = exp(2πiλH_j)`, i.e. `M_k^j = (2πiH_j)^k / k!`.
    pub fn exponential(hs: &[CMatrix], order: usize) -> Result<Self> {
        let coefficients = hs
            .iter()
            .map(|h| {
                let a = h.scale(C64::new(0.0, 2.0 * PI));
                let mut term = CMatrix::identity(h.dim());
                (1..=order)
                    .map(|k| {
                        term = (&term * &a).scale(C64::new(1.0 / k as f64, 0.0));
                        term.clone()
                    })
                    .collect()
            })
            .collect();
        Self::new(coefficients)
    }

    pub fn generators(&self) -> usize {
        self.coefficients.len()
    }

    pub fn order(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0][0].dim()
    }

    /// `M_k^j` with 0-based `j` and `k >= 1`.
    pub fn coefficient(&self, j: usize, k: usize) -> &CMatrix {
        &self.coefficients[j][k - 1]
    }

    pub fn coefficients(&self) -> &[Vec<CMatrix>] {
        &self.coefficients
    }

    /// The truncated series `ρ_λ(γ_j)`.
    pub fn evaluate(&self, j: usize, lambda: C64) -> CMatrix {
        let mut acc = CMatrix::identity(self.dim());
        let mut pow = ONE;
        for m in &self.coefficients[j] {
            pow *= lambda;
            acc += &m.scale(pow);
        }
        acc
    }
}

/// `U^a(λ) = Σ_k λ^k U_k^a` over a fixed form basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionFamily {
    pub basis: FormBasis,
    /// `coefficients[a][k − 1] = U_k^a`.
    coefficients: Vec<Vec<CMatrix>>,
}

impl ConnectionFamily {
    pub fn new(basis: FormBasis, coefficients: Vec<Vec<CMatrix>>) -> Result<Self> {
        check_grid(&coefficients, "connection family")?;
        if coefficients.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficient series for {} forms",
                coefficients.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coefficients })
    }

    pub fn order(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0][0].dim()
    }

    pub fn forms(&self) -> usize {
        self.coefficients.len()
    }

    /// `U_k^a` with 0-based `a` and `k >= 1`.
    pub fn coefficient(&self, a: usize, k: usize) -> &CMatrix {
        &self.coefficients[a][k - 1]
    }

    pub fn coefficients(&self) -> &[Vec<CMatrix>] {
        &self.coefficients
    }

    /// `max_a ‖U_k^a‖_F` for `k = 1..=K`.
    pub fn order_norms(&self) -> Vec<f64> {
        (1..=self.order())
            .map(|k| {
                (0..self.forms())
                    .map(|a| self.coefficient(a, k).frobenius_norm())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Ratio-test estimate `‖U_{K−1}‖/‖U_K‖` of the convergence radius;
    /// `None` when the tail vanishes or the order is 1.
    pub fn radius_estimate(&self) -> Option<f64> {
        let norms = self.order_norms();
        let scale = norms.iter().copied().fold(0.0, f64::max);
        let significant: Vec<(usize, f64)> = norms
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, x)| x > 1e-9 * scale.max(1e-300))
            .collect();
        match significant.as_slice() {
            [.., (k0, a), (k1, b)] => Some((a / b).powf(1.0 / (k1 - k0) as f64)),
            _ => None,
        }
    }

    /// Residues `U^a(λ)` summed to order `K` (or `truncate`, if smaller).
    pub fn residues_at(&self, lambda: C64, truncate: usize) -> Vec<CMatrix> {
        let order = truncate.min(self.order());
        self.coefficients
            .iter()
            .map(|series| {
                let mut acc = CMatrix::zeros(self.dim());
                let mut pow = ONE;
                for u in &series[..order] {
                    pow *= lambda;
                    acc += &u.scale(pow);
                }
                acc
            })
            .collect()
    }
}

/// The connection `Σ_a U^a(λ) ω_a` from the truncated series.
pub fn evaluate_at(family: &ConnectionFamily, lambda: C64) -> LogarithmicConnection {
    evaluate_truncated(family, lambda, family.order())
}

/// As [`evaluate_at`], keeping only orders `1..=truncate`.
pub fn evaluate_truncated(family: &ConnectionFamily, lambda: C64, truncate: usize) -> LogarithmicConnection {
    LogarithmicConnection::new(family.basis.clone(), family.residues_at(lambda, truncate))
        .expect("family basis and residues were validated")
}

/// Advisories for using a family at `λ`.
pub fn evaluation_warnings(family: &ConnectionFamily, lambda: C64) -> Vec<String> {
    let mut out = Vec::new();
    if lambda.norm() > LAMBDA_ADVISORY {
        out.push(format!(
            "|lambda| = {:.3} exceeds the small-coupling bound {LAMBDA_ADVISORY}",
            lambda.norm()
        ));
    }
    if let Some(r) = family.radius_estimate() {
        if lambda.norm() >= r {
            out.push(format!(
                "|lambda| = {:.3} is beyond the estimated convergence radius {r:.3}",
                lambda.norm()
            ));
        }
    }
    out
}

/// Matrix-valued polynomials in `λ` truncated at degree `K`; index `k`
/// holds the coefficient of `λ^k`.
type Poly = Vec<DMatrix<C64>>;

/// Coefficients `[λ^k] ρ(γ)` for `k = 1..=order` of the Peano series of
/// the family `coefficients[a][k−1] = U_k^a` along a loop with signature
/// `sig`.
pub fn peano_coefficients(coefficients: &[Vec<CMatrix>], sig: &Signature, order: usize) -> Vec<CMatrix> {
    let m = coefficients.len();
    let d = coefficients[0][0].dim();
    assert_eq!(sig.forms, m);
    assert!(sig.depth >= order);
    let zero = DMatrix::<C64>::zeros(d, d);
    // U^a(λ) as polynomials
    let u: Vec<Poly> = coefficients
        .iter()
        .map(|series| {
            let mut p = vec![zero.clone(); order + 1];
            for (k, c) in series.iter().enumerate().take(order) {
                p[k + 1] = c.inner().clone();
            }
            p
        })
        .collect();

    let mut total = vec![zero.clone(); order + 1];
    // level q: products U^{a_q}(λ)⋯U^{a_1}(λ) for all words of length q;
    // only degrees >= q can be nonzero
    let mut level: Vec<Poly> = u.clone();
    for q in 1..=order {
        for (w, poly) in level.iter().enumerate() {
            let cw = sig.level(q)[w];
            if cw == ZERO {
                continue;
            }
            for deg in q..=order {
                total[deg] += &poly[deg] * cw;
            }
        }
        if q == order {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * m);
        for poly in &level {
            for ua in &u {
                let mut prod = vec![zero.clone(); order + 1];
                for (i, ui) in ua.iter().enumerate().skip(1) {
                    for (j, pj) in poly.iter().enumerate().skip(q) {
                        if i + j > order {
                            break;
                        }
                        prod[i + j] += ui * pj;
                    }
                }
                next.push(prod);
            }
        }
        level = next;
    }
    total
        .into_iter()
        .skip(1)
        .map(|x| CMatrix::new(x).expect("finite products"))
        .collect()
}

/// Compositions of `k` into `q` positive parts, in lexicographic order.
pub fn compositions(k: usize, q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=k.saturating_sub(q - 1) {
        for mut rest in compositions(k - first, q - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Output of [`synthesize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Synthesis {
    pub family: ConnectionFamily,
    /// `P_{ja} = ∫_{γ_j} ω_a`.
    pub period_matrix: Vec<Vec<crate::matrix::ComplexRepr>>,
    /// `residuals[k − 1][j] = ‖[λ^k] ρ(γ_j) − M_k^j‖_F` after synthesis.
    pub residuals: Vec<Vec<f64>>,
    pub radius_estimate: Option<f64>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub signatures: Vec<Signature>,
}

/// Solves for `U_1, …, U_K` order by order.
///
/// `loops[j]` must be the generator loop of target `j`; there must be as
/// many loops as forms and the period matrix must be invertible.
pub fn synthesize(
    targets: &RepresentationFamily,
    basis: &FormBasis,
    loops: &[PiecewisePath],
    order: usize,
    tol: f64,
) -> Result<Synthesis> {
    let m = basis.len();
    if order == 0 || order > targets.order() {
        return Err(Error::InvalidInput(format!(
            "order must be in 1..={}, got {order}",
            targets.order()
        )));
    }
    if targets.generators() != m || loops.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} targets and {} loops for {m} forms; all three must agree",
            targets.generators(),
            loops.len()
        )));
    }
    crate::paths::LoopSet::new(loops.to_vec())?;
    let signatures = loops
        .par_iter()
        .map(|l| chen_signature(basis, l, order, tol))
        .collect::<Result<Vec<_>>>()?;

    let period = DMatrix::from_fn(m, m, |j, a| signatures[j].get(&[a]));
    let period_inv = period
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("period matrix of the loops is singular".into()))?;
    let cond = period.norm() * period_inv.norm();
    let d = targets.dim();
    let mut coefficients: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(order); m];

    for k in 1..=order {
        // with U_k provisionally zero, [λ^k] of the series is the q >= 2 part
        let provisional: Vec<Vec<CMatrix>> = coefficients
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.resize(k, CMatrix::zeros(d));
                s
            })
            .collect();
        let corrections: Vec<CMatrix> = signatures
            .iter()
            .map(|sig| peano_coefficients(&provisional, sig, k).pop().expect("k >= 1"))
            .collect();
        let rhs: Vec<CMatrix> = (0..m)
            .map(|j| targets.coefficient(j, k) - &corrections[j])
            .collect();
        for (a, series) in coefficients.iter_mut().enumerate() {
            let mut acc = CMatrix::zeros(d);
            for (j, r) in rhs.iter().enumerate() {
                acc += &r.scale(period_inv[(a, j)]);
            }
            series.push(acc);
        }
    }

    let residuals = {
        let per_gen: Vec<Vec<CMatrix>> = signatures
            .iter()
            .map(|sig| peano_coefficients(&coefficients, sig, order))
            .collect();
        (1..=order)
            .map(|k| {
                (0..m)
                    .map(|j| per_gen[j][k - 1].distance(targets.coefficient(j, k)))
                    .collect()
            })
            .collect()
    };
    let family = ConnectionFamily::new(basis.clone(), coefficients)?;
    let mut warnings = Vec::new();
    for j in 0..m {
        let n1 = targets.coefficient(j, 1).frobenius_norm();
        if n1 > FIRST_ORDER_ADVISORY {
            warnings.push(format!(
                "target {j}: ‖M_1‖ = {n1:.3} exceeds {FIRST_ORDER_ADVISORY}; targets are not close to the identity"
            ));
        }
    }
    if cond > 1e8 {
        warnings.push(format!("period matrix is ill-conditioned (condition ≈ {cond:.1e})"));
    }
    Ok(Synthesis {
        radius_estimate: family.radius_estimate(),
        period_matrix: (0..m)
            .map(|j| (0..m).map(|a| period[(j, a)].into()).collect())
            .collect(),
        family,
        residuals,
        warnings,
        signatures,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchReport {
    #[serde(with = "crate::matrix::complex_serde")]
    pub lambda: C64,
    pub order: usize,
    /// `‖M_numeric^j − ρ_λ(γ_j)‖_F`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// `max_deviation / |λ|^{K+1}`.
    pub order_constant: f64,
    pub monodromy: Vec<CMatrix>,
    pub warnings: Vec<String>,
}

/// Forward monodromy of the evaluated family compared with the targets.
pub fn verify_match(
    targets: &RepresentationFamily,
    family: &ConnectionFamily,
    lambda: C64,
    loops: &[PiecewisePath],
    tol: f64,
) -> Result<MatchReport> {
    if loops.len() != targets.generators() {
        return Err(Error::InvalidInput(format!(
            "{} loops for {} targets",
            loops.len(),
            targets.generators()
        )));
    }
    if family.dim() != targets.dim() {
        return Err(Error::DimensionMismatch {
            expected: targets.dim(),
            found: family.dim(),
        });
    }
    let conn = evaluate_at(family, lambda);
    let rep = fuchsian::monodromy_representation(&conn, loops, tol)?;
    let deviations: Vec<f64> = rep
        .matrices
        .iter()
        .enumerate()
        .map(|(j, m)| m.distance(&targets.evaluate(j, lambda)))
        .collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let scale = lambda.norm().powi(family.order() as i32 + 1);
    Ok(MatchReport {
        lambda,
        order: family.order(),
        order_constant: if scale > 0.0 { max_deviation / scale } else { 0.0 },
        deviations,
        max_deviation,
        monodromy: rep.matrices,
        warnings: evaluation_warnings(family, lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use crate::paths::{generator_loop, generator_loops, pure_braid_path};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_PI_I: C64 = C64::new(0.0, 2.0 * PI);

    fn random_hermitian(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> CMatrix {
        let g = CMatrix::from_fn(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (&g + &g.adjoint()).scale(c(0.5, 0.0));
        h.scale(c(norm / h.frobenius_norm(), 0.0))
    }

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> CMatrix {
        let g = CMatrix::from_fn(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        g.scale(c(norm / g.frobenius_norm(), 0.0))
    }

    fn origin() -> FormBasis {
        FormBasis::Points { poles: vec![ZERO] }
    }

    fn two_points() -> (FormBasis, Vec<PiecewisePath>) {
        let poles = vec![ZERO, ONE];
        let loops = generator_loops(c(0.5, -1.0), &poles, 0.3).unwrap();
        (FormBasis::Points { poles }, loops)
    }

    fn unit_loop() -> PiecewisePath {
        generator_loop(c(2.0, 0.0), ZERO, 0.5, &[ZERO]).unwrap()
    }

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|x| x as f64).product()
    }

    #[test]
    fn single_form_integrals() {
        let l = unit_loop();
        for k in 1..=4 {
            let got = chen_integral(&origin(), &vec![0; k], &l, 1e-12).unwrap();
            let want = TWO_PI_I.powi(k as i32) / factorial(k);
            assert!((got - want).norm() < 1e-8, "k = {k}");
        }
        // a pole outside the loop contributes nothing
        let outside = FormBasis::Points { poles: vec![c(5.0, 0.0)] };
        assert!(chen_integral(&outside, &[0], &l, 1e-12).unwrap().norm() < 1e-10);
    }

    #[test]
    fn signature_agrees_with_companion_integrals() {
        let (basis, loops) = two_points();
        let sig = chen_signature(&basis, &loops[0], 3, 1e-12).unwrap();
        for word in [vec![0], vec![1], vec![0, 1], vec![1, 0], vec![1, 1, 0], vec![0, 1, 0]] {
            let single = chen_integral(&basis, &word, &loops[0], 1e-12).unwrap();
            assert!((sig.get(&word) - single).norm() < 1e-9, "{word:?}");
        }
    }

    #[test]
    fn compositions_are_exhaustive() {
        assert_eq!(compositions(4, 2), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        for k in 1..=8 {
            let total: usize = (1..=k).map(|q| compositions(k, q).len()).sum();
            assert_eq!(total, 1 << (k - 1));
        }
    }

    /// Direct enumeration over compositions and words.
    fn peano_explicit(coeffs: &[Vec<CMatrix>], sig: &Signature, k: usize) -> CMatrix {
        let m = coeffs.len();
        let d = coeffs[0][0].dim();
        let mut acc = CMatrix::zeros(d);
        for q in 1..=k {
            for comp in compositions(k, q) {
                for w in 0..m.pow(q as u32) {
                    let word: Vec<usize> = (0..q).rev().map(|r| (w / m.pow(r as u32)) % m).collect();
                    let mut prod = CMatrix::identity(d);
                    for (a, kk) in word.iter().zip(&comp) {
                        prod = coeffs[*a][kk - 1].clone() * prod;
                    }
                    acc += &prod.scale(sig.get(&word));
                }
            }
        }
        acc
    }

    #[test]
    fn polynomial_expansion_matches_explicit_sum() {
        let (basis, loops) = two_points();
        let sig = chen_signature(&basis, &loops[1], 4, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coeffs: Vec<Vec<CMatrix>> = (0..2)
            .map(|_| (0..4).map(|_| random_matrix(&mut rng, 2, 0.5)).collect())
            .collect();
        let fast = peano_coefficients(&coeffs, &sig, 4);
        for k in 1..=4 {
            let slow = peano_explicit(&coeffs, &sig, k);
            assert!(fast[k - 1].distance(&slow) < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn first_order_is_m_over_two_pi_i() {
        let (basis, loops) = two_points();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let targets = RepresentationFamily::new(
            (0..2).map(|_| vec![random_matrix(&mut rng, 2, 0.5)]).collect(),
        )
        .unwrap();
        let s = synthesize(&targets, &basis, &loops, 1, 1e-12).unwrap();
        for j in 0..2 {
            let want = targets.coefficient(j, 1).scale(ONE / TWO_PI_I);
            assert!(s.family.coefficient(j, 1).distance(&want) < 1e-9);
        }
    }

    #[test]
    fn second_order_formula() {
        let (basis, loops) = two_points();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let targets = RepresentationFamily::new(
            (0..2)
                .map(|_| (0..2).map(|_| random_matrix(&mut rng, 2, 0.5)).collect())
                .collect(),
        )
        .unwrap();
        let s = synthesize(&targets, &basis, &loops, 2, 1e-12).unwrap();
        let u1 = |a: usize| s.family.coefficient(a, 1);
        for j in 0..2 {
            let mut corr = CMatrix::zeros(2);
            for k1 in 0..2 {
                for k2 in 0..2 {
                    let cij = chen_integral(&basis, &[k1, k2], &loops[j], 1e-12).unwrap();
                    corr += &(u1(k2) * u1(k1)).scale(cij);
                }
            }
            let want = (targets.coefficient(j, 2) - &corr).scale(ONE / TWO_PI_I);
            assert!(s.family.coefficient(j, 2).distance(&want) < 1e-8, "j = {j}");
        }
    }

    #[test]
    fn single_generator_exponential_recovers_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, 2, 0.8);
        let targets = RepresentationFamily::exponential(std::slice::from_ref(&h), 4).unwrap();
        let s = synthesize(&targets, &origin(), &[unit_loop()], 4, 1e-12).unwrap();
        assert!(s.family.coefficient(0, 1).distance(&h) < 1e-9);
        for k in 2..=4 {
            assert!(s.family.coefficient(0, k).frobenius_norm() < 1e-8, "k = {k}");
        }
        assert!(s.radius_estimate.is_none());
        for row in &s.residuals {
            assert!(row.iter().all(|&r| r < 1e-10));
        }
    }

    #[test]
    fn evaluation_is_series_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<Vec<CMatrix>> = (0..2)
            .map(|_| (0..3).map(|_| random_matrix(&mut rng, 2, 1.0)).collect())
            .collect();
        let fam = ConnectionFamily::new(two_points().0, coeffs).unwrap();
        let zero = evaluate_at(&fam, ZERO);
        assert!(zero.residues().iter().all(|r| r.frobenius_norm() == 0.0));
        let lam = c(0.1, 0.0);
        let k1 = evaluate_truncated(&fam, lam, 1);
        for a in 0..2 {
            assert!(k1.residues()[a].distance(&fam.coefficient(a, 1).scale(lam)) < 1e-16);
        }
        let lam = c(0.07, 0.02);
        let k2 = evaluate_truncated(&fam, lam, 2);
        let k3 = evaluate_truncated(&fam, lam, 3);
        for a in 0..2 {
            let diff = (&k3.residues()[a] - &k2.residues()[a]).frobenius_norm();
            let want = fam.coefficient(a, 3).frobenius_norm() * lam.norm().powi(3);
            assert!((diff - want).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_targets_give_zero_connection() {
        let (basis, loops) = two_points();
        let targets = RepresentationFamily::zero(2, 2, 3).unwrap();
        let s = synthesize(&targets, &basis, &loops, 3, 1e-10).unwrap();
        assert!(s.family.coefficients().iter().flatten().all(|u| u.frobenius_norm() < 1e-12));
        let rep = verify_match(&targets, &s.family, c(0.05, 0.0), &loops, 1e-10).unwrap();
        assert!(rep.max_deviation < 1e-12);
    }

    #[test]
    fn round_trip_order_scaling() {
        let (basis, loops) = two_points();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let hs = vec![random_hermitian(&mut rng, 2, 1.0), random_hermitian(&mut rng, 2, 1.0)];
        let targets = RepresentationFamily::exponential(&hs, 4).unwrap();
        let lam = c(0.05, 0.0);
        let run = |k: usize| {
            let s = synthesize(&targets, &basis, &loops, k, 1e-12).unwrap();
            let exact = RepresentationFamily::exponential(&hs, k).unwrap();
            let rep = verify_match(&exact, &s.family, lam, &loops, 1e-12).unwrap();
            // against the exact exponential rather than the truncated series
            let dev = rep
                .monodromy
                .iter()
                .zip(&hs)
                .map(|(m, h)| m.distance(&h.scale(TWO_PI_I * lam).exp()))
                .fold(0.0, f64::max);
            (dev, rep)
        };
        let (d2, _) = run(2);
        let (d4, rep4) = run(4);
        assert!(d4 <= 1e-5, "{d4}");
        assert!(d2 / d4 >= 50.0, "{d2} / {d4}");
        for m in &rep4.monodromy {
            // unitary up to the truncation error
            assert!(m.unitarity_defect() < 3.0 * d4);
        }
    }

    #[test]
    fn flat_targets_resynthesize_a_flat_connection() {
        // targets from the Peano series of λΩ_0 with Ω_0 a spin-½ KZ
        // connection; synthesis should return U_1 = Ω_0 and nothing else
        let kz = crate::kz::uniform_kz(3, 0.5, ONE).unwrap();
        let base = kz.connection();
        let basis = base.basis().clone();
        let loops: Vec<PiecewisePath> = [(1, 2), (1, 3), (2, 3)]
            .iter()
            .map(|&(i, j)| pure_braid_path(3, i, j, None).unwrap())
            .collect();
        let order = 3;
        let u0: Vec<Vec<CMatrix>> = base
            .residues()
            .iter()
            .map(|r| {
                let mut s = vec![r.scale(c(0.1, 0.0))];
                s.resize(order, CMatrix::zeros(8));
                s
            })
            .collect();
        let sigs: Vec<Signature> = loops
            .iter()
            .map(|l| chen_signature(&basis, l, order, 1e-12).unwrap())
            .collect();
        let targets = RepresentationFamily::new(
            sigs.iter().map(|s| peano_coefficients(&u0, s, order)).collect(),
        )
        .unwrap();
        let s = synthesize(&targets, &basis, &loops, order, 1e-12).unwrap();
        for a in 0..3 {
            assert!(s.family.coefficient(a, 1).distance(&u0[a][0]) < 1e-8);
            for k in 2..=order {
                assert!(s.family.coefficient(a, k).frobenius_norm() < 1e-8);
            }
        }
        let conn = evaluate_at(&s.family, c(0.05, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let mut rc = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let z: Vec<C64> = (0..3).map(|_| rc()).collect();
            let u: Vec<C64> = (0..3).map(|_| rc()).collect();
            let v: Vec<C64> = (0..3).map(|_| rc()).collect();
            let res = fuchsian::curvature_residual(&conn, &z, &u, &v).unwrap();
            let dist = basis.distance(&z);
            // scale the bound by the size of the form values at the point
            assert!(res <= 1e-10 * (1.0 + 1.0 / dist).powi(2) * 100.0, "{res}");
        }
    }

    #[test]
    fn family_json_round_trip() {
        let targets = RepresentationFamily::exponential(&[crate::gate::pauli_z()], 2).unwrap();
        let s = serde_json::to_string(&targets).unwrap();
        assert!(s.contains(r#""generators":1"#) && s.contains(r#""order":2"#));
        let back: RepresentationFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, targets);
        let bad = s.replace(r#""order":2"#, r#""order":3"#);
        assert!(serde_json::from_str::<RepresentationFamily>(&bad).is_err());
    }

    #[test]
    fn synthesis_rejects_mismatched_inputs() {
        let (basis, loops) = two_points();
        let targets = RepresentationFamily::zero(1, 2, 2).unwrap();
        assert!(synthesize(&targets, &basis, &loops, 2, 1e-10).is_err());
        let targets = RepresentationFamily::zero(2, 2, 2).unwrap();
        assert!(synthesize(&targets, &basis, &loops, 3, 1e-10).is_err());
        assert!(synthesize(&targets, &basis, &loops[..1], 2, 1e-10).is_err());
    }

    fn random_loop(seed: u64) -> PiecewisePath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = c(rng.random_range(-0.5..1.5), rng.random_range(0.8..2.0));
        let which = if rng.random_bool(0.5) { ZERO } else { ONE };
        generator_loop(base, which, rng.random_range(0.1..0.4), &[ZERO, ONE]).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn shuffle_identity(seed in 0u64..1000) {
            let (basis, _) = two_points();
            let l = random_loop(seed);
            let sig = chen_signature(&basis, &l, 2, 1e-12).unwrap();
            let lhs = sig.get(&[0]) * sig.get(&[1]);
            let rhs = sig.get(&[0, 1]) + sig.get(&[1, 0]);
            prop_assert!((lhs - rhs).norm() < 1e-8);
        }

        #[test]
        fn exact_form_power_identity(seed in 0u64..1000, a in 0usize..2) {
            let (basis, _) = two_points();
            let l = random_loop(seed);
            let sig = chen_signature(&basis, &l, 4, 1e-12).unwrap();
            let first = sig.get(&[a]);
            for k in 2..=4 {
                let want = first.powi(k as i32) / factorial(k);
                prop_assert!((sig.get(&vec![a; k]) - want).norm() < 1e-8);
            }
        }

        #[test]
        fn reexpansion_reproduces_targets(seed in 0u64..1000, m in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let poles: Vec<C64> = (0..m).map(|k| c(k as f64, 0.0)).collect();
            let loops = generator_loops(c(0.5, -1.0), &poles, 0.3).unwrap();
            let basis = FormBasis::Points { poles };
            let order = 3;
            let targets = RepresentationFamily::new(
                (0..m)
                    .map(|_| (0..order).map(|_| { let norm = rng.random_range(0.1..1.0); random_matrix(&mut rng, 2, norm) }).collect())
                    .collect(),
            ).unwrap();
            let s = synthesize(&targets, &basis, &loops, order, 1e-12).unwrap();
            // independent signatures at a different tolerance
            for (j, l) in loops.iter().enumerate() {
                let sig = chen_signature(&basis, l, order, 1e-11).unwrap();
                let back = peano_coefficients(s.family.coefficients(), &sig, order);
                for k in 1..=order {
                    prop_assert!(back[k - 1].distance(targets.coefficient(j, k)) < 1e-7);
                }
            }
        }
    }
}
