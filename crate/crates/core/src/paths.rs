//! Piecewise contours in ℂⁿ built from straight lines and circular arcs.
//!
//! Every segment is parameterized by `t ∈ [0, 1]`. An arc moves any subset
//! of coordinates along circles with a shared angular sweep,
//! `z(t) = center + offset·e^{i·sweep·t}`, so a single arc can realize a
//! braid half-twist where two coordinates orbit their midpoint together.
//! Every affine function of the coordinates restricted to a segment is
//! again a line or an arc in ℂ, which makes distances to a hyperplane
//! divisor and logarithm increments available in closed form.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matrix::{complex_serde, complex_vec_serde, C64, ONE, ZERO};
use crate::{Error, Result};

/// Joints closer than this are continuous.
pub const CONTINUITY_TOL: f64 = 1e-12;
/// Closed loops return to their basepoint within this distance.
pub const CLOSURE_TOL: f64 = 1e-9;
/// Clearance from the divisor required of every emitted path.
pub const DEFAULT_CLEARANCE: f64 = 0.05;
/// Samples per segment used by the discretized oracles.
pub const ORACLE_SAMPLES: usize = 2048;
/// Minimum separation of divisor points.
pub const POINT_SEPARATION: f64 = 1e-9;

pub type Point = Vec<C64>;

fn max_coord_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `h(z) = Σ a_k z_k + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctional {
    #[serde(with = "complex_vec_serde")]
    pub coeffs: Vec<C64>,
    #[serde(with = "complex_serde")]
    pub constant: C64,
}

impl AffineFunctional {
    pub fn new(coeffs: Vec<C64>, constant: C64) -> Self {
        Self { coeffs, constant }
    }

    /// `z − s` on ℂ.
    pub fn point(s: C64) -> Self {
        Self::new(vec![ONE], -s)
    }

    /// `z_i − z_j` on ℂⁿ (0-based indices).
    pub fn difference(n: usize, i: usize, j: usize) -> Self {
        let mut coeffs = vec![ZERO; n];
        coeffs[i] = ONE;
        coeffs[j] = -ONE;
        Self::new(coeffs, ZERO)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.linear(z) + self.constant
    }

    /// Linear part `Σ a_k v_k`, i.e. `dh(v)`.
    pub fn linear(&self, v: &[C64]) -> C64 {
        self.coeffs.iter().zip(v).map(|(a, x)| a * x).sum()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn restrict(&self, seg: &PathSegment) -> Restriction {
        match seg {
            PathSegment::Line { start, end } => Restriction::Line {
                w0: self.eval(start),
                w1: self.eval(end),
            },
            PathSegment::Arc {
                center,
                offset,
                sweep,
            } => Restriction::Arc {
                center: self.eval(center),
                phasor: self.linear(offset),
                sweep: *sweep,
            },
        }
    }
}

/// An affine function restricted to one segment: a curve in ℂ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Restriction {
    Line { w0: C64, w1: C64 },
    Arc { center: C64, phasor: C64, sweep: f64 },
}

impl Restriction {
    pub fn at(&self, t: f64) -> C64 {
        match *self {
            Restriction::Line { w0, w1 } => w0 + (w1 - w0) * t,
            Restriction::Arc {
                center,
                phasor,
                sweep,
            } => center + phasor * C64::from_polar(1.0, sweep * t),
        }
    }

    /// `min_{t∈[0,1]} |w(t)|`.
    pub fn min_modulus(&self) -> f64 {
        match *self {
            Restriction::Line { w0, w1 } => {
                let d = w1 - w0;
                let dd = d.norm_sqr();
                if dd == 0.0 {
                    return w0.norm();
                }
                let t = (-(d.conj() * w0).re / dd).clamp(0.0, 1.0);
                (w0 + d * t).norm()
            }
            Restriction::Arc {
                center,
                phasor,
                sweep,
            } => {
                let (cn, r) = (center.norm(), phasor.norm());
                if r == 0.0 {
                    return cn;
                }
                if cn == 0.0 {
                    return r;
                }
                // The circle point nearest the origin points along −center.
                let target = (-center).arg();
                let start = phasor.arg();
                let gap = if sweep >= 0.0 {
                    (target - start).rem_euclid(TAU)
                } else {
                    (start - target).rem_euclid(TAU)
                };
                if gap <= sweep.abs() {
                    (cn - r).abs()
                } else {
                    self.at(0.0).norm().min(self.at(1.0).norm())
                }
            }
        }
    }

    /// Continuous change of `log w` over the segment.
    pub fn log_increment(&self) -> C64 {
        match *self {
            Restriction::Line { w0, w1 } => (w1 / w0).ln(),
            Restriction::Arc {
                center,
                phasor,
                sweep,
            } => {
                if phasor.norm() > center.norm() {
                    let rot = C64::from_polar(1.0, -sweep);
                    C64::new(0.0, sweep) + ((phasor + center * rot) / (phasor + center)).ln()
                } else {
                    let rot = C64::from_polar(1.0, sweep);
                    ((center + phasor * rot) / (center + phasor)).ln()
                }
            }
        }
    }
}

/// One piece of a contour, parameterized on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PathSegment {
    Line {
        #[serde(with = "complex_vec_serde")]
        start: Point,
        #[serde(with = "complex_vec_serde")]
        end: Point,
    },
    /// `z(t) = center + offset·e^{i·sweep·t}`; coordinates with zero offset
    /// stay fixed at `center`.
    Arc {
        #[serde(with = "complex_vec_serde")]
        center: Point,
        #[serde(with = "complex_vec_serde")]
        offset: Point,
        sweep: f64,
    },
}

impl PathSegment {
    pub fn line(start: Point, end: Point) -> Self {
        PathSegment::Line { start, end }
    }

    /// Planar arc of the given radius from `start_angle` to `end_angle`.
    pub fn arc(center: C64, radius: f64, start_angle: f64, end_angle: f64) -> Self {
        PathSegment::Arc {
            center: vec![center],
            offset: vec![C64::from_polar(radius, start_angle)],
            sweep: end_angle - start_angle,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PathSegment::Line { start, .. } => start.len(),
            PathSegment::Arc { center, .. } => center.len(),
        }
    }

    pub fn point(&self, t: f64) -> Point {
        match self {
            PathSegment::Line { start, end } => start
                .iter()
                .zip(end)
                .map(|(a, b)| a + (b - a) * t)
                .collect(),
            PathSegment::Arc {
                center,
                offset,
                sweep,
            } => {
                let rot = C64::from_polar(1.0, sweep * t);
                center.iter().zip(offset).map(|(c, o)| c + o * rot).collect()
            }
        }
    }

    /// `dz/dt`.
    pub fn velocity(&self, t: f64) -> Point {
        match self {
            PathSegment::Line { start, end } => {
                start.iter().zip(end).map(|(a, b)| b - a).collect()
            }
            PathSegment::Arc { offset, sweep, .. } => {
                let rot = C64::new(0.0, *sweep) * C64::from_polar(1.0, sweep * t);
                offset.iter().map(|o| o * rot).collect()
            }
        }
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(1.0)
    }

    pub fn reversed(&self) -> Self {
        match self {
            PathSegment::Line { start, end } => PathSegment::Line {
                start: end.clone(),
                end: start.clone(),
            },
            PathSegment::Arc {
                center,
                offset,
                sweep,
            } => {
                let rot = C64::from_polar(1.0, *sweep);
                PathSegment::Arc {
                    center: center.clone(),
                    offset: offset.iter().map(|o| o * rot).collect(),
                    sweep: -sweep,
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |p: &Point| p.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        match self {
            PathSegment::Line { start, end } => {
                if start.len() != end.len() || start.is_empty() {
                    return Err(Error::InvalidInput("line endpoints differ in dimension".into()));
                }
                if !finite(start) || !finite(end) {
                    return Err(Error::InvalidInput("line endpoints must be finite".into()));
                }
            }
            PathSegment::Arc {
                center,
                offset,
                sweep,
            } => {
                if center.len() != offset.len() || center.is_empty() {
                    return Err(Error::InvalidInput("arc center/offset differ in dimension".into()));
                }
                if !finite(center) || !finite(offset) || !sweep.is_finite() {
                    return Err(Error::InvalidInput("arc data must be finite".into()));
                }
                if offset.iter().all(|o| o.norm() == 0.0) {
                    return Err(Error::InvalidInput("arc radius must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// A continuous chain of segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct PiecewisePath {
    segments: Vec<PathSegment>,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    #[serde(default)]
    closed: bool,
    segments: Vec<PathSegment>,
}

impl TryFrom<PathRepr> for PiecewisePath {
    type Error = Error;
    fn try_from(r: PathRepr) -> Result<Self> {
        let p = PiecewisePath::new(r.segments)?;
        if r.closed && !p.is_closed() {
            return Err(Error::InvalidInput("path flagged closed does not return to its start".into()));
        }
        Ok(p)
    }
}

impl From<PiecewisePath> for PathRepr {
    fn from(p: PiecewisePath) -> Self {
        PathRepr {
            closed: p.is_closed(),
            segments: p.segments,
        }
    }
}

impl PiecewisePath {
    pub fn new(segments: Vec<PathSegment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidInput("path has no segments".into()))?;
        let dim = first.dim();
        for (k, seg) in segments.iter().enumerate() {
            seg.validate()?;
            if seg.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "segment {k} has dimension {} instead of {dim}",
                    seg.dim()
                )));
            }
        }
        for (k, pair) in segments.windows(2).enumerate() {
            let gap = max_coord_distance(&pair[0].end(), &pair[1].start());
            if gap > CONTINUITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "discontinuity {gap:.3e} between segments {k} and {}",
                    k + 1
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn start(&self) -> Point {
        self.segments[0].start()
    }

    pub fn end(&self) -> Point {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn is_closed(&self) -> bool {
        max_coord_distance(&self.start(), &self.end()) <= CLOSURE_TOL
    }

    /// `p` followed by `q`.
    pub fn concat(&self, q: &PiecewisePath) -> Result<PiecewisePath> {
        if self.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.dim(),
            });
        }
        let gap = max_coord_distance(&self.end(), &q.start());
        if gap > CONTINUITY_TOL {
            return Err(Error::InvalidInput(format!(
                "cannot concatenate: endpoint mismatch {gap:.3e}"
            )));
        }
        let mut segments = self.segments.clone();
        segments.extend(q.segments.iter().cloned());
        Ok(Self { segments })
    }

    pub fn concat_all(paths: &[PiecewisePath]) -> Result<PiecewisePath> {
        let (first, rest) = paths
            .split_first()
            .ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
        rest.iter().try_fold(first.clone(), |acc, p| acc.concat(p))
    }

    /// Reverses segment order and orientation.
    pub fn invert(&self) -> PiecewisePath {
        Self {
            segments: self.segments.iter().rev().map(PathSegment::reversed).collect(),
        }
    }

    /// `samples` evenly spaced parameter points per segment, plus the end.
    pub fn sample(&self, samples: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.segments.len() * samples + 1);
        for seg in &self.segments {
            for k in 0..samples {
                out.push(seg.point(k as f64 / samples as f64));
            }
        }
        out.push(self.end());
        out
    }

    /// Analytic `min |h(γ(t))|` over the path.
    pub fn min_modulus(&self, h: &AffineFunctional) -> f64 {
        self.segments
            .iter()
            .map(|s| h.restrict(s).min_modulus())
            .fold(f64::INFINITY, f64::min)
    }

    /// Continuous change of `log h(γ(t))` along the path.
    pub fn log_increment(&self, h: &AffineFunctional) -> C64 {
        self.segments.iter().map(|s| h.restrict(s).log_increment()).sum()
    }
}

/// Winding number of `h(γ)` around 0 by summing argument increments over
/// `ORACLE_SAMPLES` samples per segment. Not rounded.
pub fn winding_number(path: &PiecewisePath, h: &AffineFunctional) -> f64 {
    let values: Vec<C64> = path.sample(ORACLE_SAMPLES).iter().map(|z| h.eval(z)).collect();
    let total: f64 = values.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
    total / TAU
}

/// Winding number of a planar path around `s`.
pub fn winding_around(path: &PiecewisePath, s: C64) -> f64 {
    winding_number(path, &AffineFunctional::point(s))
}

/// The polar divisor of a connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Divisor {
    /// Finitely many points in ℂ.
    Points {
        #[serde(with = "complex_vec_serde")]
        points: Vec<C64>,
    },
    /// The arrangement `{z_i = z_j}` in ℂⁿ.
    Differences { n: usize },
    /// Zero sets of affine functionals in ℂⁿ.
    Hyperplanes { hyperplanes: Vec<AffineFunctional> },
}

impl Divisor {
    pub fn points(points: Vec<C64>) -> Result<Self> {
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if (a - b).norm() <= POINT_SEPARATION {
                    return Err(Error::InvalidInput(format!(
                        "divisor points {a} and {b} coincide"
                    )));
                }
            }
        }
        Ok(Divisor::Points { points })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Divisor::Points { .. } => Some(1),
            Divisor::Differences { n } => Some(*n),
            Divisor::Hyperplanes { hyperplanes } => hyperplanes.first().map(|h| h.dim()),
        }
    }

    /// Defining functionals paired with the scale that turns `|h|` into a
    /// distance. For the diagonal arrangement the scale is 1, so clearance
    /// there is the minimum pairwise separation `|z_i − z_j|`.
    pub fn components(&self) -> Vec<(AffineFunctional, f64)> {
        match self {
            Divisor::Points { points } => points
                .iter()
                .map(|&s| (AffineFunctional::point(s), 1.0))
                .collect(),
            Divisor::Differences { n } => (0..*n)
                .flat_map(|i| ((i + 1)..*n).map(move |j| (i, j)))
                .map(|(i, j)| (AffineFunctional::difference(*n, i, j), 1.0))
                .collect(),
            Divisor::Hyperplanes { hyperplanes } => hyperplanes
                .iter()
                .map(|h| (h.clone(), 1.0 / h.coeff_norm()))
                .collect(),
        }
    }

    pub fn distance(&self, z: &[C64]) -> f64 {
        self.components()
            .iter()
            .map(|(h, s)| h.eval(z).norm() * s)
            .fold(f64::INFINITY, f64::min)
    }

    /// Analytic closest approach of a path.
    pub fn clearance(&self, path: &PiecewisePath) -> f64 {
        self.components()
            .iter()
            .map(|(h, s)| path.min_modulus(h) * s)
            .fold(f64::INFINITY, f64::min)
    }

    /// Closest approach over `samples` points per segment.
    pub fn sampled_clearance(&self, path: &PiecewisePath, samples: usize) -> f64 {
        path.sample(samples)
            .iter()
            .map(|z| self.distance(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Loop based at `basepoint` going once counterclockwise around `puncture`:
/// straight approach, full circle of `radius`, straight return.
///
/// `divisor` lists every puncture (the target may be included); the circle
/// must stay within half the distance to any other puncture and the whole
/// loop must keep [`DEFAULT_CLEARANCE`].
pub fn generator_loop(
    basepoint: C64,
    puncture: C64,
    radius: f64,
    divisor: &[C64],
) -> Result<PiecewisePath> {
    generator_loop_with_clearance(basepoint, puncture, radius, divisor, DEFAULT_CLEARANCE)
}

pub fn generator_loop_with_clearance(
    basepoint: C64,
    puncture: C64,
    radius: f64,
    divisor: &[C64],
    clearance: f64,
) -> Result<PiecewisePath> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("loop radius must be positive".into()));
    }
    let dist = (basepoint - puncture).norm();
    if dist <= radius {
        return Err(Error::InvalidInput(format!(
            "basepoint lies within radius {radius} of the puncture"
        )));
    }
    for &s in divisor {
        let sep = (s - puncture).norm();
        if sep > POINT_SEPARATION && radius >= 0.5 * sep {
            return Err(Error::InvalidInput(format!(
                "radius {radius} too large: another puncture lies at distance {sep}"
            )));
        }
    }
    let dir = (basepoint - puncture) / dist;
    let touch = puncture + dir * radius;
    let path = PiecewisePath::new(vec![
        PathSegment::line(vec![basepoint], vec![touch]),
        PathSegment::Arc {
            center: vec![puncture],
            offset: vec![touch - puncture],
            sweep: TAU,
        },
        PathSegment::line(vec![touch], vec![basepoint]),
    ])?;
    let mut all = divisor.to_vec();
    if !all.iter().any(|s| (s - puncture).norm() <= POINT_SEPARATION) {
        all.push(puncture);
    }
    let got = Divisor::Points { points: all }.clearance(&path);
    if got < clearance {
        return Err(Error::InvalidInput(format!(
            "loop passes within {got:.3e} of the divisor (clearance {clearance})"
        )));
    }
    Ok(path)
}

/// Standard generators around each puncture from a common basepoint.
pub fn generator_loops(basepoint: C64, punctures: &[C64], radius: f64) -> Result<Vec<PiecewisePath>> {
    Divisor::points(punctures.to_vec())?;
    punctures
        .iter()
        .map(|&s| generator_loop(basepoint, s, radius, punctures))
        .collect()
}

/// `σ_k` or `σ_k^{-1}`, with 1-based `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidLetter {
    pub generator: usize,
    pub inverse: bool,
}

impl BraidLetter {
    pub fn pos(generator: usize) -> Self {
        Self {
            generator,
            inverse: false,
        }
    }

    pub fn neg(generator: usize) -> Self {
        Self {
            generator,
            inverse: true,
        }
    }
}

/// A word in braid generators, read left to right as the order of travel.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord(pub Vec<BraidLetter>);

impl BraidWord {
    pub fn letters(&self) -> &[BraidLetter] {
        &self.0
    }

    pub fn exponent_sum(&self) -> i64 {
        self.0.iter().map(|l| if l.inverse { -1 } else { 1 }).sum()
    }

    /// Permutation of strand slots induced by the word: entry `s` is the
    /// final slot of the strand starting in slot `s` (0-based).
    pub fn permutation(&self, n: usize) -> Vec<usize> {
        let mut slot_of: Vec<usize> = (0..n).collect();
        for l in &self.0 {
            let k = l.generator - 1;
            for s in slot_of.iter_mut() {
                if *s == k {
                    *s = k + 1;
                } else if *s == k + 1 {
                    *s = k;
                }
            }
        }
        slot_of
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| {
                if l.inverse {
                    format!("s{}^-1", l.generator)
                } else {
                    format!("s{}", l.generator)
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// `(1, 2, …, n)`.
pub fn default_basepoint(n: usize) -> Point {
    (1..=n).map(|k| C64::new(k as f64, 0.0)).collect()
}

fn check_generator(n: usize, i: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("braid group needs n >= 2, got {n}")));
    }
    if i < 1 || i >= n {
        return Err(Error::InvalidInput(format!("generator index {i} outside 1..{}", n - 1)));
    }
    Ok(())
}

/// `τ_ij = (σ_{j−1}⋯σ_{i+1}) σ_i² (σ_{i+1}^{-1}⋯σ_{j−1}^{-1})`, so that
/// `τ_{i,i+1} = σ_i²`.
pub fn pure_braid_word(n: usize, i: usize, j: usize) -> Result<BraidWord> {
    if !(1 <= i && i < j && j <= n) {
        return Err(Error::InvalidInput(format!(
            "pure braid indices must satisfy 1 <= i < j <= n, got i={i}, j={j}, n={n}"
        )));
    }
    let mut w: Vec<BraidLetter> = ((i + 1)..j).rev().map(BraidLetter::pos).collect();
    w.push(BraidLetter::pos(i));
    w.push(BraidLetter::pos(i));
    w.extend(((i + 1)..j).map(BraidLetter::neg));
    Ok(BraidWord(w))
}

/// Expands a braid word into a contour in ℂⁿ from `basepoint`.
///
/// Slot `k` is the location `basepoint[k]`. The letter `σ_k` exchanges the
/// two strands currently in slots `k` and `k+1` by a counterclockwise
/// half-turn about their midpoint (clockwise for `σ_k^{-1}`); all other
/// coordinates stay fixed.
pub fn braid_word_path(n: usize, word: &BraidWord, basepoint: Option<&[C64]>) -> Result<PiecewisePath> {
    let base: Point = match basepoint {
        Some(b) => b.to_vec(),
        None => default_basepoint(n),
    };
    if base.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: base.len(),
        });
    }
    if word.0.is_empty() {
        return Err(Error::InvalidInput("empty braid word has no path".into()));
    }
    for l in &word.0 {
        check_generator(n, l.generator)?;
    }
    let divisor = Divisor::Differences { n };
    if divisor.distance(&base) <= POINT_SEPARATION {
        return Err(Error::InvalidInput("basepoint lies on the diagonal divisor".into()));
    }
    // coord_in_slot[s] = coordinate index currently sitting in slot s
    let mut coord_in_slot: Vec<usize> = (0..n).collect();
    let mut current = base.clone();
    let mut segments = Vec::with_capacity(word.0.len());
    for l in &word.0 {
        let k = l.generator - 1;
        let (a, b) = (coord_in_slot[k], coord_in_slot[k + 1]);
        let mid = (base[k] + base[k + 1]) * 0.5;
        let mut center = current.clone();
        let mut offset = vec![ZERO; n];
        center[a] = mid;
        center[b] = mid;
        offset[a] = current[a] - mid;
        offset[b] = current[b] - mid;
        let seg = PathSegment::Arc {
            center,
            offset,
            sweep: if l.inverse { -PI } else { PI },
        };
        current = seg.end();
        // snap to the exact slot locations to keep joints continuous
        current[a] = base[k + 1];
        current[b] = base[k];
        segments.push(seg);
        coord_in_slot.swap(k, k + 1);
    }
    let path = PiecewisePath::new(segments)?;
    let got = divisor.clearance(&path);
    if got < DEFAULT_CLEARANCE {
        return Err(Error::InvalidInput(format!(
            "braid path passes within {got:.3e} of the diagonal (clearance {DEFAULT_CLEARANCE})"
        )));
    }
    Ok(path)
}

/// Half-twist `σ_i` in `X_n` from the basepoint (default `(1, …, n)`).
pub fn braid_generator_path(n: usize, i: usize, basepoint: Option<&[C64]>) -> Result<PiecewisePath> {
    check_generator(n, i)?;
    braid_word_path(n, &BraidWord(vec![BraidLetter::pos(i)]), basepoint)
}

/// Closed loop in `X_n` realizing `τ_ij`.
pub fn pure_braid_path(n: usize, i: usize, j: usize, basepoint: Option<&[C64]>) -> Result<PiecewisePath> {
    braid_word_path(n, &pure_braid_word(n, i, j)?, basepoint)
}

/// A list of loops sharing a basepoint, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSet {
    pub loops: Vec<PiecewisePath>,
}

impl LoopSet {
    pub fn new(loops: Vec<PiecewisePath>) -> Result<Self> {
        let first = loops
            .first()
            .ok_or_else(|| Error::InvalidInput("loop set is empty".into()))?;
        let base = first.start();
        for (k, l) in loops.iter().enumerate() {
            if !l.is_closed() {
                return Err(Error::InvalidInput(format!("loop {k} is not closed")));
            }
            if l.dim() != first.dim() || max_coord_distance(&l.start(), &base) > CLOSURE_TOL {
                return Err(Error::InvalidInput(format!(
                    "loop {k} does not share the basepoint of loop 0"
                )));
            }
        }
        Ok(Self { loops })
    }
}
