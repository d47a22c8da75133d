//! Points, point sets, the Hausdorff metric, axis-aligned boxes and the
//! constrained flats `K^{n-1}_C` (row vectors with entry sum 1 and bounded
//! entries).
//!
//! All types are immutable after construction and all operations are pure.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Deterministic RNG used everywhere sampling is needed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point of `R^m`, `m >= 1`, with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point needs at least one coordinate".into()));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("point coordinates must be finite".into()));
        }
        Ok(Self { coords: DVector::from_vec(coords) })
    }

    pub(crate) fn from_vector(coords: DVector<f64>) -> Self {
        debug_assert!(coords.len() >= 1 && coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub(crate) fn vector(&self) -> &DVector<f64> {
        &self.coords
    }
}

/// Euclidean distance between two points of the same space.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
            context: "distance",
        });
    }
    Ok((&a.coords - &b.coords).norm())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A finite nonempty set of points of uniform dimension.
///
/// Duplicates are permitted internally; set semantics only matter to the
/// Hausdorff metric, which is blind to multiplicity.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Point>,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("point set must be nonempty".into()))?;
        let dim = first.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                    context: "point set",
                });
            }
        }
        Ok(Self { points, dim })
    }

    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Point::new).collect::<Result<Vec<_>>>()?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Union keeping multiplicity and order (left points first).
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
                context: "union",
            });
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        PointSet::new(points)
    }

    /// Axis-aligned bounding box of the set.
    pub fn bounding_box(&self) -> BoundingBox {
        let mut lower = self.points[0].coords.clone();
        let mut upper = lower.clone();
        for p in &self.points[1..] {
            for (i, c) in p.coords().iter().enumerate() {
                if *c < lower[i] {
                    lower[i] = *c;
                }
                if *c > upper[i] {
                    upper[i] = *c;
                }
            }
        }
        BoundingBox { lower, upper }
    }

    /// Set equality up to `tol` in the Hausdorff sense.
    pub fn set_eq(&self, other: &PointSet, tol: f64) -> bool {
        matches!(hausdorff(self, other), Ok(h) if h <= tol)
    }

    /// CSV serialization: one point per row, coordinates as columns,
    /// `.` decimal separator, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse the CSV format produced by [`PointSet::to_csv`].
    /// A trailing newline (or stray blank lines) is tolerated.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let coords = line
                .split(',')
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad coordinate {field:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(coords);
        }
        Self::from_coords(rows)
    }
}

/// Directed Hausdorff distance `sup_{a in A} inf_{b in B} d(a, b)`.
///
/// Exhaustive double loop over squared distances with an early inner exit:
/// once the infimum for the current `a` drops below the running supremum,
/// `a` cannot raise it. The single square root at the end commutes with
/// max/min, so the result is bit-identical to the naive per-pair version.
fn directed_hausdorff_sq(a: &PointSet, b: &PointSet) -> f64 {
    let mut sup_sq = 0.0_f64;
    for p in &a.points {
        let pc = p.coords();
        let mut inf_sq = f64::INFINITY;
        for q in &b.points {
            let d = squared_distance(pc, q.coords());
            if d < inf_sq {
                inf_sq = d;
                if inf_sq <= sup_sq {
                    break;
                }
            }
        }
        if inf_sq > sup_sq {
            sup_sq = inf_sq;
        }
    }
    sup_sq
}

/// Hausdorff distance between two point sets of the same dimension.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
            context: "hausdorff",
        });
    }
    let ab = directed_hausdorff_sq(a, b);
    let ba = directed_hausdorff_sq(b, a);
    Ok(ab.max(ba).sqrt())
}

/// An axis-aligned box `[lower, upper]` used as an invariant domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
                context: "box bounds",
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("box needs at least one dimension".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite()) {
                return Err(Error::InvalidInput("box bounds must be finite".into()));
            }
            if l > u {
                return Err(Error::InvalidInput(format!("box lower {l} exceeds upper {u}")));
            }
        }
        Ok(Self {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        })
    }

    /// Cube `[-r, r]^n`.
    pub fn centered_cube(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        self.lower.as_slice()
    }

    pub fn upper(&self) -> &[f64] {
        self.upper.as_slice()
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .enumerate()
                .all(|(i, c)| self.lower[i] - tol <= *c && *c <= self.upper[i] + tol)
    }

    /// Smallest box containing both.
    pub fn merge(&self, other: &BoundingBox) -> BoundingBox {
        let lower = self.lower.zip_map(&other.lower, f64::min);
        let upper = self.upper.zip_map(&other.upper, f64::max);
        BoundingBox { lower, upper }
    }

    /// Box inflated about its center by `factor` (1.0 = unchanged).
    pub fn inflate(&self, factor: f64) -> BoundingBox {
        let center = (&self.lower + &self.upper) * 0.5;
        let half = (&self.upper - &self.lower) * (0.5 * factor);
        BoundingBox {
            lower: &center - &half,
            upper: &center + &half,
        }
    }

    /// Deterministic interior sample.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let coords = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if l == u { *l } else { rng.random_range(*l..=*u) })
            .collect::<Vec<f64>>();
        Point::from_vector(DVector::from_vec(coords))
    }
}

/// The flat `K^{n-1}` of row vectors summing to 1, optionally restricted to
/// entries `|x_i| <= bound` (`K^{n-1}_C`). `bound = f64::INFINITY` means the
/// unconstrained flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSpec {
    pub n: usize,
    pub bound: f64,
}

impl FlatSpec {
    pub fn unbounded(n: usize) -> Self {
        Self { n, bound: f64::INFINITY }
    }

    pub fn bounded(n: usize, bound: f64) -> Self {
        Self { n, bound }
    }
}

/// Membership of `v` in `K^{n-1}` / `K^{n-1}_C` up to `tol`.
pub fn in_flat(v: &Point, spec: &FlatSpec, tol: f64) -> Result<bool> {
    if v.dim() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: v.dim(),
            context: "flat membership",
        });
    }
    let sum: f64 = v.coords().iter().sum();
    if (sum - 1.0).abs() > tol {
        return Ok(false);
    }
    if spec.bound.is_finite() {
        Ok(v.coords().iter().all(|c| c.abs() <= spec.bound + tol))
    } else {
        Ok(true)
    }
}

/// Deterministic sample of `count` vectors from the flat.
///
/// Each sample is the barycenter `(1/n, ..., 1/n)` plus a random zero-sum
/// direction scaled to respect the entry bound, so membership holds by
/// construction (up to roundoff of order `n * eps`). A bound below `1/n`
/// makes `K^{n-1}_C` empty; the sampler then degenerates to the barycenter.
pub fn sample_flat(spec: &FlatSpec, count: usize, seed: u64) -> PointSet {
    assert!(count >= 1, "sample_flat needs count >= 1");
    let n = spec.n;
    let mut rng = seeded_rng(seed);
    let barycenter = 1.0 / n as f64;
    let headroom = if spec.bound.is_finite() {
        (spec.bound - barycenter).max(0.0)
    } else {
        2.0
    };
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let dir: Vec<f64> = raw.iter().map(|d| d - mean).collect();
        let amp = dir.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let t = if amp < 1e-12 { 0.0 } else { rng.random_range(0.0..1.0) * headroom / amp };
        let coords: Vec<f64> = dir.iter().map(|d| barycenter + t * d).collect();
        points.push(Point::from_vector(DVector::from_vec(coords)));
    }
    PointSet { points, dim: n }
}
