//! Heuristic screening of finite gate sets for density in the projective
//! unitary group.
//!
//! Density cannot be decided numerically. The screen reports one of three
//! verdicts: the generators commute; closure under products stops growing
//! (a finite group is suspected); or it keeps growing (density is likely).
//! Group elements are compared up to a global phase.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gate::QuantumGate;
use crate::matrix::{CMatrix, C64};
use crate::{Error, Result};

pub const COMMUTE_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_LEN: usize = 16;
pub const DEFAULT_GRID: f64 = 1e-6;
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSet {
    pub labels: Vec<String>,
    pub generators: Vec<QuantumGate>,
}

impl GateSet {
    pub fn new(labels: Vec<String>, generators: Vec<QuantumGate>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidInput("gate set is empty".into()))?;
        if labels.len() != generators.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} generators",
                labels.len(),
                generators.len()
            )));
        }
        if let Some(g) = generators.iter().find(|g| g.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: g.dim(),
            });
        }
        Ok(Self { labels, generators })
    }

    /// Labels `g1, g2, …`.
    pub fn unlabeled(generators: Vec<QuantumGate>) -> Result<Self> {
        let labels = (1..=generators.len()).map(|k| format!("g{k}")).collect();
        Self::new(labels, generators)
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        self.generators.iter().map(|g| g.matrix().clone()).collect()
    }

    /// `{V U V†}` for every generator.
    pub fn conjugate(&self, v: &QuantumGate) -> Result<Self> {
        let generators = self
            .generators
            .iter()
            .map(|g| QuantumGate::new(&(v.matrix() * g.matrix()) * &v.matrix().adjoint()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.labels.clone(), generators)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Abelian,
    FiniteSuspect,
    DenseLikely,
    /// Dimension above 2: only the commutator screen was run and it failed.
    NonAbelian,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Abelian => "abelian",
            Verdict::FiniteSuspect => "finite-suspect",
            Verdict::DenseLikely => "dense-likely",
            Verdict::NonAbelian => "non-abelian",
        })
    }
}

/// Phase-invariant hash key: the entries of `U ⊗ conj(U)` on a grid.
fn projective_key(u: &CMatrix, grid: f64) -> Vec<i64> {
    let s = u.as_slice();
    let mut key = Vec::with_capacity(2 * s.len() * s.len());
    for a in s {
        for b in s {
            let z = a * b.conj();
            key.push((z.re / grid).round() as i64);
            key.push((z.im / grid).round() as i64);
        }
    }
    key
}

/// Projectively distinct words of length `<= max_len`, breadth first.
#[derive(Clone, Debug)]
pub struct Closure {
    pub elements: Vec<CMatrix>,
    /// Distinct elements after each length `0..=reached`.
    pub sizes: Vec<usize>,
    /// First length at which no new element appeared.
    pub saturated_at: Option<usize>,
    /// The node budget stopped the enumeration early.
    pub partial: bool,
}

pub fn enumerate_closure(gens: &[CMatrix], max_len: usize, grid: f64, node_budget: usize) -> Closure {
    let d = gens[0].dim();
    let id = CMatrix::identity(d);
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    seen.insert(projective_key(&id, grid));
    let mut elements = vec![id.clone()];
    let mut frontier = vec![id];
    let mut sizes = vec![1];
    let mut visited = 0usize;
    for len in 1..=max_len {
        if visited + frontier.len() * gens.len() > node_budget {
            return Closure {
                elements,
                sizes,
                saturated_at: None,
                partial: true,
            };
        }
        visited += frontier.len() * gens.len();
        let products: Vec<(Vec<i64>, CMatrix)> = frontier
            .par_iter()
            .flat_map_iter(|w| {
                gens.iter().map(move |g| {
                    let p = g * w;
                    (projective_key(&p, grid), p)
                })
            })
            .collect();
        let mut next = Vec::new();
        for (key, p) in products {
            if seen.insert(key) {
                next.push(p);
            }
        }
        if next.is_empty() {
            return Closure {
                elements,
                sizes,
                saturated_at: Some(len),
                partial: false,
            };
        }
        elements.extend(next.iter().cloned());
        sizes.push(elements.len());
        frontier = next;
    }
    Closure {
        elements,
        sizes,
        saturated_at: None,
        partial: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenOptions {
    pub max_len: usize,
    pub grid: f64,
    pub commute_tol: f64,
    pub node_budget: usize,
}

impl Default for ScreenOptions {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            grid: DEFAULT_GRID,
            commute_tol: COMMUTE_TOL,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub verdict: Verdict,
    /// Largest `‖[U_a, U_b]‖_F` over generator pairs.
    pub max_commutator: f64,
    /// Closure sizes by word length, when enumerated.
    pub closure_sizes: Vec<usize>,
    pub saturated_at: Option<usize>,
    pub partial: bool,
}

pub fn density_screen(gs: &GateSet) -> ScreenReport {
    density_screen_with(gs, &ScreenOptions::default())
}

pub fn density_screen_with(gs: &GateSet, opts: &ScreenOptions) -> ScreenReport {
    let mats = gs.matrices();
    let mut max_commutator: f64 = 0.0;
    for (a, u) in mats.iter().enumerate() {
        for v in &mats[a + 1..] {
            max_commutator = max_commutator.max(u.commutator(v).frobenius_norm());
        }
    }
    let mut report = ScreenReport {
        verdict: Verdict::Abelian,
        max_commutator,
        closure_sizes: vec![],
        saturated_at: None,
        partial: false,
    };
    if max_commutator <= opts.commute_tol {
        return report;
    }
    if gs.dim() != 2 {
        report.verdict = Verdict::NonAbelian;
        return report;
    }
    let closure = enumerate_closure(&mats, opts.max_len, opts.grid, opts.node_budget);
    report.verdict = if closure.saturated_at.is_some() {
        Verdict::FiniteSuspect
    } else {
        Verdict::DenseLikely
    };
    report.closure_sizes = closure.sizes;
    report.saturated_at = closure.saturated_at;
    report.partial = closure.partial;
    report
}

/// Haar-distributed SU(2) element from a normalized Gaussian quaternion.
pub fn haar_su2(rng: &mut ChaCha8Rng) -> CMatrix {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = C64::new(q[0] / n, q[1] / n);
    let b = C64::new(q[2] / n, q[3] / n);
    CMatrix::from_rows(&[&[a, -b.conj()], &[b, a.conj()]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub max_len: usize,
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: f64,
    pub node_budget: usize,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            max_len: 12,
            eps: 0.5,
            samples: 200,
            seed: 7,
            grid: DEFAULT_GRID,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub coverage: f64,
    pub covered: usize,
    pub samples: usize,
    pub elements: usize,
    /// Median over targets of the distance to the nearest word.
    pub median_distance: f64,
    pub partial: bool,
}

/// Fraction of Haar-random SU(2) targets within projective distance `eps`
/// of a word of length `<= max_len`.
pub fn epsilon_net_coverage(gs: &GateSet, opts: &CoverageOptions) -> Result<CoverageReport> {
    if gs.dim() != 2 {
        return Err(Error::InvalidInput("coverage is defined for single-qubit gate sets".into()));
    }
    if !(opts.eps > 0.0) || opts.samples == 0 {
        return Err(Error::InvalidInput("coverage needs eps > 0 and at least one sample".into()));
    }
    let closure = enumerate_closure(&gs.matrices(), opts.max_len, opts.grid, opts.node_budget);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let targets: Vec<CMatrix> = (0..opts.samples).map(|_| haar_su2(&mut rng)).collect();
    let mut nearest: Vec<f64> = targets
        .par_iter()
        .map(|t| {
            closure
                .elements
                .iter()
                .map(|w| w.projective_distance(t))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let covered = nearest.iter().filter(|&&x| x <= opts.eps).count();
    nearest.sort_by(f64::total_cmp);
    Ok(CoverageReport {
        coverage: covered as f64 / opts.samples as f64,
        covered,
        samples: opts.samples,
        elements: closure.elements.len(),
        median_distance: nearest[nearest.len() / 2],
        partial: closure.partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{hadamard_std, pauli_x, pauli_z, phase};

    fn set(ms: Vec<CMatrix>) -> GateSet {
        GateSet::unlabeled(ms.into_iter().map(|m| QuantumGate::new(m).unwrap()).collect()).unwrap()
    }

    fn ht() -> GateSet {
        set(vec![hadamard_std(), phase(0.25)])
    }

    #[test]
    fn screen_examples() {
        assert_eq!(density_screen(&set(vec![pauli_z()])).verdict, Verdict::Abelian);
        assert_eq!(density_screen(&set(vec![phase(1.0 / 3.0)])).verdict, Verdict::Abelian);
        let pauli = density_screen(&set(vec![pauli_x(), pauli_z()]));
        assert_eq!(pauli.verdict, Verdict::FiniteSuspect);
        assert!(*pauli.closure_sizes.last().unwrap() <= 16);
        assert_eq!(*pauli.closure_sizes.last().unwrap(), 4);
        let r = density_screen(&ht());
        assert_eq!(r.verdict, Verdict::DenseLikely);
        assert!(r.closure_sizes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn clifford_group_saturates() {
        // H and S generate the single-qubit Clifford group: 24 elements mod phase
        let r = density_screen(&set(vec![hadamard_std(), phase(0.5)]));
        assert_eq!(r.verdict, Verdict::FiniteSuspect);
        assert_eq!(*r.closure_sizes.last().unwrap(), 24);
    }

    #[test]
    fn identity_covers_almost_nothing() {
        let r = epsilon_net_coverage(
            &set(vec![CMatrix::identity(2)]),
            &CoverageOptions {
                eps: 0.1,
                ..CoverageOptions::default()
            },
        )
        .unwrap();
        assert_eq!(r.elements, 1);
        assert!(r.coverage < 0.02);
    }

    #[test]
    fn coverage_is_monotone() {
        let base = CoverageOptions {
            samples: 100,
            seed: 3,
            ..CoverageOptions::default()
        };
        let mut last = 0.0;
        for max_len in [2, 4, 6, 8, 10] {
            let r = epsilon_net_coverage(&ht(), &CoverageOptions { max_len, ..base }).unwrap();
            assert!(r.coverage >= last);
            last = r.coverage;
        }
        let mut last = 0.0;
        for eps in [0.1, 0.2, 0.4, 0.8] {
            let r = epsilon_net_coverage(&ht(), &CoverageOptions { eps, max_len: 8, ..base }).unwrap();
            assert!(r.coverage >= last);
            last = r.coverage;
        }
    }

    #[test]
    fn abelian_sets_cover_little() {
        for g in [phase(1.0 / 3.0), pauli_z(), phase(0.1)] {
            let gs = set(vec![g]);
            assert_eq!(density_screen(&gs).verdict, Verdict::Abelian);
            for max_len in [4, 16] {
                let r = epsilon_net_coverage(
                    &gs,
                    &CoverageOptions {
                        eps: 0.3,
                        max_len,
                        ..CoverageOptions::default()
                    },
                )
                .unwrap();
                assert!(r.coverage < 0.5);
            }
        }
    }

    #[test]
    fn verdict_is_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for gs in [ht(), set(vec![pauli_x(), pauli_z()]), set(vec![phase(0.3)])] {
            let want = density_screen(&gs).verdict;
            for _ in 0..3 {
                let v = QuantumGate::new(haar_su2(&mut rng)).unwrap();
                assert_eq!(density_screen(&gs.conjugate(&v).unwrap()).verdict, want);
            }
        }
    }

    #[test]
    fn budget_flags_partial_results() {
        let r = enumerate_closure(&ht().matrices(), 16, DEFAULT_GRID, 50);
        assert!(r.partial);
        assert!(r.saturated_at.is_none());
    }

    #[test]
    fn projective_key_ignores_phase() {
        let u = haar_su2(&mut ChaCha8Rng::seed_from_u64(1));
        let v = u.scale(C64::from_polar(1.0, 0.7));
        assert_eq!(projective_key(&u, 1e-6), projective_key(&v, 1e-6));
    }
}
