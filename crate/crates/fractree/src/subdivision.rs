//! Binary subdivision schemes (stationary, non-stationary with growing
//! masks, non-uniform), slanted refinement matrices, and the constructions
//! linking schemes to staircase function systems and to trees of maps.
//!
//! # Finite-data convention
//!
//! The refinement rule `p'_i = sum_j a_{i-2j} p_j` is applied interior-only:
//! an output index is kept iff its complete mask window lies inside the
//! data, so every output row is a full even/odd sub-mask of the level mask.
//! Refining `n` points with a mask of support length `s` yields
//! `m = 2n - s + 2` points and loses `s - 2` boundary samples per level;
//! callers must pad initial data accordingly. Rebased output `i` reads
//! inputs from `floor(i/2)` with the reversed parity sub-mask, which makes
//! refinement rows and slanted-matrix rows literally identical.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::Rng;

use crate::geometry::{hausdorff, sample_flat, seeded_rng, BoundingBox, FlatSpec, Point, PointSet};
use crate::maps::{AffineMap, FunctionSystem};
use crate::staircase::StaircaseSfs;
use crate::tree::MapTree;
use crate::{Error, Result};

/// Levels probed when validating constant reproduction up front.
const REPRODUCTION_PROBE_LEVELS: usize = 16;

/// A finite refinement mask. Leading/trailing zeros are trimmed on
/// construction; interior-only refinement is invariant under index shifts,
/// so `first_index` is bookkeeping only.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    coefficients: Vec<f64>,
    first_index: i64,
}

impl Mask {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        Self::with_first_index(coefficients, 0)
    }

    pub fn with_first_index(coefficients: Vec<f64>, first_index: i64) -> Result<Self> {
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("mask coefficients must be finite".into()));
        }
        let lead = coefficients.iter().take_while(|c| **c == 0.0).count();
        let trail = coefficients.iter().rev().take_while(|c| **c == 0.0).count();
        if lead + trail >= coefficients.len() {
            return Err(Error::InvalidInput("mask must have a nonzero coefficient".into()));
        }
        let trimmed = coefficients[lead..coefficients.len() - trail].to_vec();
        Ok(Self {
            coefficients: trimmed,
            first_index: first_index + lead as i64,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    /// Support length (first to last nonzero, inclusive).
    pub fn support(&self) -> usize {
        self.coefficients.len()
    }

    /// Sums over the even- and odd-indexed coefficients (absolute indices).
    pub fn parity_sums(&self) -> (f64, f64) {
        let mut sums = [0.0_f64; 2];
        for (t, c) in self.coefficients.iter().enumerate() {
            sums[((self.first_index + t as i64).rem_euclid(2)) as usize] += c;
        }
        (sums[0], sums[1])
    }

    /// Both parity sums equal to 1 within `tol`: constant data refines to
    /// itself and refinement rows sum to 1.
    pub fn reproduces_constants(&self, tol: f64) -> bool {
        let (e, o) = self.parity_sums();
        (e - 1.0).abs() <= tol && (o - 1.0).abs() <= tol
    }

    /// Coefficients of `2^{-d} (1 + z)^{d+1}` (degree-`d` B-spline mask).
    pub fn bspline(degree: u32) -> Mask {
        let scale = 0.5f64.powi(degree as i32);
        Mask::new(binomial_row(degree as usize + 1).iter().map(|b| b * scale).collect())
            .expect("binomial masks are well formed")
    }
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// One refinement row: coefficients applied to inputs `start, start+1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRow {
    pub start: usize,
    pub coeffs: Vec<f64>,
}

impl RuleRow {
    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

/// Rebased interior-only rule row of a mask: output `i` reads inputs from
/// `floor(i/2)` with the reversed parity sub-mask.
fn mask_rule_row(mask: &Mask, i: usize) -> RuleRow {
    let s = mask.support();
    let p = i % 2;
    let count = (p + s - 2) / 2 + 1;
    let coeffs = (0..count)
        .map(|t| {
            let idx = p + s - 2 - 2 * t;
            mask.coefficients[idx]
        })
        .collect();
    RuleRow { start: i / 2, coeffs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Stationary,
    NonStationary,
    NonUniform,
}

/// A binary subdivision scheme: per-level masks, or per-location rule rows
/// for non-uniform schemes.
#[derive(Clone)]
pub struct Scheme {
    kind: SchemeKind,
    name: String,
    mask_gen: Option<Arc<dyn Fn(usize) -> Mask + Send + Sync>>,
    rule_gen: Option<Arc<dyn Fn(usize, usize) -> Option<RuleRow> + Send + Sync>>,
    /// Declared polynomial degree of support growth (0 = fixed size).
    growth_degree: u32,
    /// Fixed slant span for non-uniform schemes.
    fixed_span: Option<usize>,
}

impl Scheme {
    pub fn stationary(name: &str, mask: Mask) -> Scheme {
        Scheme {
            kind: SchemeKind::Stationary,
            name: name.to_string(),
            mask_gen: Some(Arc::new(move |_| mask.clone())),
            rule_gen: None,
            growth_degree: 0,
            fixed_span: None,
        }
    }

    /// Non-stationary scheme with a declared polynomial growth degree for
    /// the mask supports (`sigma_k <= sigma_1 + k^degree`, checked).
    pub fn non_stationary<F>(name: &str, growth_degree: u32, mask_gen: F) -> Scheme
    where
        F: Fn(usize) -> Mask + Send + Sync + 'static,
    {
        Scheme {
            kind: SchemeKind::NonStationary,
            name: name.to_string(),
            mask_gen: Some(Arc::new(mask_gen)),
            rule_gen: None,
            growth_degree,
            fixed_span: None,
        }
    }

    /// Non-uniform scheme: `rule(level, position)` yields the refinement
    /// row for each output position, all rows fitting the fixed slant span.
    pub fn non_uniform<F>(name: &str, span: usize, rule: F) -> Scheme
    where
        F: Fn(usize, usize) -> Option<RuleRow> + Send + Sync + 'static,
    {
        assert!(span >= 2, "slant span must be at least 2");
        Scheme {
            kind: SchemeKind::NonUniform,
            name: name.to_string(),
            mask_gen: None,
            rule_gen: Some(Arc::new(rule)),
            growth_degree: 0,
            fixed_span: Some(span),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth_degree(&self) -> u32 {
        self.growth_degree
    }

    /// True when every level has the same slant span.
    pub fn fixed_size(&self) -> bool {
        self.kind == SchemeKind::NonUniform || self.growth_degree == 0
    }

    /// Mask used when refining level `k-1` into level `k` (`k >= 1`),
    /// with the declared growth bound enforced.
    pub fn mask_for_level(&self, level: usize) -> Result<Mask> {
        assert!(level >= 1, "levels are indexed from 1");
        let gen = self
            .mask_gen
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("non-uniform scheme has no masks".into()))?;
        let mask = gen(level);
        let base = gen(1).support();
        let allowed = base + (level as f64).powi(self.growth_degree as i32) as usize - 1;
        if mask.support() > allowed {
            return Err(Error::MaskGrowth {
                level,
                support: mask.support(),
                degree: self.growth_degree,
                base,
            });
        }
        Ok(mask)
    }

    /// Slant span at a level: support length of the level mask, or the
    /// declared span for non-uniform schemes.
    pub fn span_at(&self, level: usize) -> Result<usize> {
        match self.kind {
            SchemeKind::NonUniform => Ok(self.fixed_span.expect("non-uniform schemes declare a span")),
            _ => Ok(self.mask_for_level(level)?.support()),
        }
    }

    /// Refinement row for rebased output `position` at `level`.
    pub fn rule_row(&self, level: usize, position: usize) -> Result<RuleRow> {
        match self.kind {
            SchemeKind::NonUniform => {
                let gen = self.rule_gen.as_ref().expect("non-uniform schemes have rules");
                gen(level, position).ok_or(Error::UndefinedRule { level, position })
            }
            _ => Ok(mask_rule_row(&self.mask_for_level(level)?, position)),
        }
    }

    /// Output count of one interior-only refinement step. At least one
    /// complete window must fit: `2 n_prev - span + 2 >= 1`.
    pub fn output_count(&self, level: usize, n_prev: usize) -> Result<usize> {
        let span = self.span_at(level)?;
        if 2 * n_prev + 1 < span {
            return Err(Error::DataConsumed {
                level,
                remaining: n_prev,
                support: span,
            });
        }
        Ok(2 * n_prev + 2 - span)
    }

    /// Constant reproduction at the first probed levels (all rule rows sum
    /// to 1), required by the flat-invariance constructions.
    pub fn check_constant_reproduction(&self, levels: usize) -> Result<()> {
        match self.kind {
            SchemeKind::NonUniform => Ok(()), // validated per materialized row
            _ => {
                for level in 1..=levels {
                    let mask = self.mask_for_level(level)?;
                    if !mask.reproduces_constants(1e-12) {
                        let (e, o) = mask.parity_sums();
                        return Err(Error::FlatNotInvariant {
                            level,
                            even_sum: e,
                            odd_sum: o,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// The interpolatory "lazy" scheme with mask `[1, 1]`.
pub fn lazy_scheme() -> Scheme {
    Scheme::stationary("lazy", Mask::new(vec![1.0, 1.0]).expect("lazy mask is well formed"))
}

/// Degree-`d` B-spline scheme (mask `2^{-d} (1+z)^{d+1}`).
pub fn bspline_scheme(degree: u32) -> Scheme {
    assert!(degree >= 1, "B-spline schemes need degree >= 1");
    Scheme::stationary(&format!("bspline{degree}"), Mask::bspline(degree))
}

/// Chaikin's corner-cutting scheme (quadratic B-spline).
pub fn chaikin_scheme() -> Scheme {
    let mut s = bspline_scheme(2);
    s.name = "chaikin".into();
    s
}

/// The non-stationary scheme generating the up function: level-`k` mask
/// `2^{1-k} (1+z)^k` with support size `k + 1` (linear growth).
pub fn up_function_scheme() -> Scheme {
    Scheme::non_stationary("upfn", 1, |k| {
        let scale = 0.5f64.powi(k as i32 - 1);
        Mask::new(binomial_row(k).iter().map(|b| b * scale).collect())
            .expect("binomial masks are well formed")
    })
}

/// Location-dependent corner cutting: output rows are `(1-t, t)` /
/// `(t, 1-t)` with the tension `t` varying affinely with the parametric
/// location of the output across the level-`k` range determined by `n0`
/// initial points. `t` in `(0, 1/2)` keeps the scheme convergent;
/// `t = 1/4` everywhere reproduces Chaikin exactly.
pub fn location_dependent_chaikin(n0: usize, t_min: f64, t_max: f64) -> Scheme {
    assert!(n0 >= 4, "need at least 4 initial points");
    assert!(0.0 < t_min && t_min <= t_max && t_max < 0.5, "tensions must lie in (0, 1/2)");
    Scheme::non_uniform("chaikin-var", 4, move |level, position| {
        // m_k = (n0 - 2) 2^k + 2 under span-4 interior-only refinement
        let m_k = (n0 - 2) as f64 * 2.0f64.powi(level as i32) + 2.0;
        if position as f64 >= m_k {
            return None;
        }
        let x = position as f64 / (m_k - 1.0);
        let t = t_min + (t_max - t_min) * x;
        let coeffs = if position % 2 == 0 {
            vec![1.0 - t, t]
        } else {
            vec![t, 1.0 - t]
        };
        Some(RuleRow {
            start: position / 2,
            coeffs,
        })
    })
}

/// An ordered control polygon at a subdivision level; point `i` carries the
/// binary parametric value `i * 2^{-level}` (up to the boundary drift of
/// interior-only refinement).
#[derive(Debug, Clone)]
pub struct ControlPolygon {
    points: Vec<Point>,
    level: usize,
}

impl ControlPolygon {
    pub fn new(points: Vec<Point>, level: usize) -> Result<Self> {
        let set = PointSet::new(points)?; // validates nonempty + uniform dim
        Ok(Self {
            points: set.points().to_vec(),
            level,
        })
    }

    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .map(Point::new)
                .collect::<Result<Vec<_>>>()?,
            0,
        )
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parameter_step(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn to_point_set(&self) -> PointSet {
        PointSet::new(self.points.clone()).expect("polygon is a valid point set")
    }

    pub fn diameter(&self) -> f64 {
        self.to_point_set().bounding_box().diameter()
    }
}

/// The unit square as a 4-point control polygon.
pub fn square_polygon() -> ControlPolygon {
    ControlPolygon::from_coords(vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ])
    .expect("square polygon is well formed")
}

/// A 1D delta sequence: `2 * pad + 1` samples, zero except a central 1.
pub fn delta_polygon(pad: usize) -> ControlPolygon {
    let n = 2 * pad + 1;
    let mut rows = vec![vec![0.0]; n];
    rows[pad][0] = 1.0;
    ControlPolygon::from_coords(rows).expect("delta polygon is well formed")
}

fn refine_with_rows(
    scheme: &Scheme,
    level: usize,
    poly: &ControlPolygon,
) -> Result<ControlPolygon> {
    let n = poly.len();
    let m = scheme.output_count(level, n)?;
    let dim = poly.dim();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let row = scheme.rule_row(level, i)?;
        if row.start + row.coeffs.len() > n {
            return Err(Error::UndefinedRule { level, position: i });
        }
        let mut acc = vec![0.0; dim];
        for (t, c) in row.coeffs.iter().enumerate() {
            for (d, a) in acc.iter_mut().enumerate() {
                *a += c * poly.points[row.start + t].coords()[d];
            }
        }
        out.push(Point::new(acc)?);
    }
    ControlPolygon::new(out, poly.level + 1)
}

/// One interior-only refinement step with an explicit mask.
pub fn refine(mask: &Mask, poly: &ControlPolygon) -> Result<ControlPolygon> {
    if 2 * poly.len() + 1 < mask.support() {
        return Err(Error::TooFewPoints {
            got: poly.len(),
            support: mask.support(),
        });
    }
    let scheme = Scheme::stationary("adhoc", mask.clone());
    refine_with_rows(&scheme, poly.level + 1, poly)
}

/// All polygons `p^0 ... p^levels` under the scheme.
pub fn subdivide_levels(
    scheme: &Scheme,
    p0: &ControlPolygon,
    levels: usize,
) -> Result<Vec<ControlPolygon>> {
    let mut out = Vec::with_capacity(levels + 1);
    out.push(p0.clone());
    for k in 1..=levels {
        let next = refine_with_rows(scheme, k, out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

/// The level-`levels` polygon under the scheme.
pub fn subdivide(scheme: &Scheme, p0: &ControlPolygon, levels: usize) -> Result<ControlPolygon> {
    Ok(subdivide_levels(scheme, p0, levels)?
        .pop()
        .expect("at least the initial polygon"))
}

/// The pair of slanted submatrices generating the first and last `n_k`
/// points of one refinement level.
#[derive(Debug, Clone)]
pub struct SlantedPair {
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub level: usize,
}

impl SlantedPair {
    /// Output dimension `n_k` (rows of each matrix).
    pub fn n_out(&self) -> usize {
        self.s1.nrows()
    }

    /// Input dimension `n_{k-1}` (columns).
    pub fn n_in(&self) -> usize {
        self.s1.ncols()
    }
}

/// Full `m x n_prev` refinement matrix of one level.
pub fn level_matrix(scheme: &Scheme, level: usize, n_prev: usize) -> Result<DMatrix<f64>> {
    let m = scheme.output_count(level, n_prev)?;
    let mut mat = DMatrix::zeros(m, n_prev);
    for i in 0..m {
        let row = scheme.rule_row(level, i)?;
        if row.start + row.coeffs.len() > n_prev {
            return Err(Error::UndefinedRule { level, position: i });
        }
        for (t, c) in row.coeffs.iter().enumerate() {
            mat[(i, row.start + t)] = *c;
        }
    }
    Ok(mat)
}

/// Slanted pair at `level` for `n_prev` incoming points. Fixed-size schemes
/// take the first/last `n_prev` rows (square matrices); growing schemes
/// take `n_k = ceil(m_k / 2)`.
pub fn slanted_pair(scheme: &Scheme, level: usize, n_prev: usize) -> Result<SlantedPair> {
    let m = scheme.output_count(level, n_prev)?;
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "refinement at level {level} yields only {m} points"
        )));
    }
    let n_k = if scheme.fixed_size() { n_prev } else { m.div_ceil(2) };
    if m < n_k {
        return Err(Error::DataConsumed {
            level,
            remaining: m,
            support: n_k,
        });
    }
    let full = level_matrix(scheme, level, n_prev)?;
    let s1 = full.rows(0, n_k).into_owned();
    let s2 = full.rows(m - n_k, n_k).into_owned();
    Ok(SlantedPair { s1, s2, level })
}

/// Per-level output dimensions `n_0 ... n_levels` of the slanted pipeline.
pub fn slanted_dims(scheme: &Scheme, n0: usize, levels: usize) -> Result<Vec<usize>> {
    let mut dims = Vec::with_capacity(levels + 1);
    dims.push(n0);
    for k in 1..=levels {
        let n_prev = dims[k - 1];
        let m = scheme.output_count(k, n_prev)?;
        dims.push(if scheme.fixed_size() { n_prev } else { m.div_ceil(2) });
    }
    Ok(dims)
}

/// The staircase SFS attached to a constant-reproducing scheme: level-1
/// systems send row vectors `A` to points `A S1_r pbar0` of the control
/// space, deeper levels act by `A -> A S^{[k]}_r`. Domains are the boxes
/// bounding `K^{n_k - 1}_C` with the supplied flat bound `C`.
pub fn scheme_to_staircase_sfs(
    scheme: &Scheme,
    p0: &ControlPolygon,
    flat_bound: f64,
) -> Result<StaircaseSfs> {
    assert!(flat_bound > 0.0 && flat_bound.is_finite());
    scheme.check_constant_reproduction(REPRODUCTION_PROBE_LEVELS)?;
    let n0 = p0.len();
    let m_dim = p0.dim();
    let scheme = scheme.clone();
    let scheme_for_dims = scheme.clone();
    let p0_matrix = DMatrix::from_fn(n0, m_dim, |i, j| p0.points()[i].coords()[j]);
    let max_abs = p0
        .points()
        .iter()
        .flat_map(|p| p.coords())
        .fold(0.0_f64, |acc, c| acc.max(c.abs()));
    let sfs = StaircaseSfs::new(move |k| {
        let dims = slanted_dims(&scheme, n0, k).expect("slanted pipeline exhausted");
        let pair = slanted_pair(&scheme, k, dims[k - 1]).expect("slanted pipeline exhausted");
        let systems: Vec<AffineMap> = [&pair.s1, &pair.s2]
            .into_iter()
            .map(|s| {
                // row action A -> A S (then A S pbar0 at level 1), written
                // on column vectors via the transpose
                if k == 1 {
                    let combined = s * &p0_matrix; // n_1 x m
                    AffineMap::from_parts(combined.transpose(), nalgebra::DVector::zeros(m_dim))
                } else {
                    AffineMap::from_parts(s.transpose(), nalgebra::DVector::zeros(s.ncols()))
                }
            })
            .collect();
        FunctionSystem::new(systems).expect("slanted systems are well formed")
    });
    let bound = flat_bound;
    Ok(sfs.with_domains(move |i| {
        if i == 0 {
            // trajectories end as K-combinations of control points
            let r = bound * n0 as f64 * max_abs;
            Some(BoundingBox::centered_cube(m_dim, r.max(1.0)).expect("cube is well formed"))
        } else {
            let dims = slanted_dims(&scheme_for_dims, n0, i).ok()?;
            Some(BoundingBox::centered_cube(dims[i], bound).expect("cube is well formed"))
        }
    }))
}

/// The tree of maps attached to a fixed-span (possibly non-uniform)
/// constant-reproducing scheme.
///
/// Node `c` at depth `k` carries the `n0 x n0` matrix producing the first
/// (last symbol 1) or last (last symbol 2) `n0` points of the refinement of
/// the parent's window; depth-1 maps additionally right-multiply by the
/// initial control points, landing in the control space. Matrices are
/// memoized per code.
pub fn nonuniform_tree(scheme: &Scheme, p0: &ControlPolygon) -> Result<MapTree> {
    if !scheme.fixed_size() {
        return Err(Error::InvalidInput(
            "the tree construction needs a fixed slant span".into(),
        ));
    }
    let span = scheme.span_at(1)?;
    let n0 = p0.len();
    let m_dim = p0.dim();
    if n0 < span {
        return Err(Error::TooFewPoints { got: n0, support: span });
    }
    if let SchemeKind::Stationary | SchemeKind::NonStationary = scheme.kind() {
        scheme.check_constant_reproduction(REPRODUCTION_PROBE_LEVELS)?;
    }
    let p0_matrix = DMatrix::from_fn(n0, m_dim, |i, j| p0.points()[i].coords()[j]);
    let scheme = scheme.clone();
    let memo: Mutex<HashMap<Vec<u8>, AffineMap>> = Mutex::new(HashMap::new());
    let child2_shift = n0 - span + 2;

    Ok(MapTree::new(n0, m_dim, move |code| {
        if let Some(hit) = memo.lock().expect("memo lock").get(code) {
            return Ok(hit.clone());
        }
        let k = code.len();
        // window offsets of the parent (level k-1) and this node (level k)
        let mut parent_offset = 0usize;
        for s in &code[..k - 1] {
            parent_offset = 2 * parent_offset + if *s == 2 { child2_shift } else { 0 };
        }
        let node_offset = 2 * parent_offset + if code[k - 1] == 2 { child2_shift } else { 0 };
        let mut s_matrix = DMatrix::zeros(n0, n0);
        for r in 0..n0 {
            let row = scheme.rule_row(k, node_offset + r)?;
            let sum = row.sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::FlatNotInvariant {
                    level: k,
                    even_sum: sum,
                    odd_sum: sum,
                });
            }
            if row.start < parent_offset || row.start + row.coeffs.len() > parent_offset + n0 {
                return Err(Error::UndefinedRule {
                    level: k,
                    position: node_offset + r,
                });
            }
            for (t, c) in row.coeffs.iter().enumerate() {
                s_matrix[(r, row.start - parent_offset + t)] = *c;
            }
        }
        let map = if k == 1 {
            let combined = &s_matrix * &p0_matrix; // n0 x m
            AffineMap::from_parts(combined.transpose(), nalgebra::DVector::zeros(m_dim))
        } else {
            AffineMap::from_parts(s_matrix.transpose(), nalgebra::DVector::zeros(n0))
        };
        memo.lock().expect("memo lock").insert(code.to_vec(), map.clone());
        Ok(map)
    }))
}

/// Validity of a base matrix per the windowed-flat conditions: every row is
/// a contiguous window of length at most `rho` lying in `K^{rho-1}_C`, and
/// the column sums have no (near-)zero entry.
pub fn base_matrix_valid(rows: &[Vec<f64>], rho: usize, bound: f64) -> bool {
    let Some(first) = rows.first() else {
        return false;
    };
    let n = first.len();
    if n <= rho {
        return false;
    }
    let tol = 1e-12;
    let mut col_sums = vec![0.0_f64; n];
    for row in rows {
        if row.len() != n {
            return false;
        }
        let nz: Vec<usize> = (0..n).filter(|j| row[*j] != 0.0).collect();
        let (Some(&lo), Some(&hi)) = (nz.first(), nz.last()) else {
            return false; // all-zero row cannot sum to 1
        };
        if hi - lo + 1 > rho {
            return false;
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return false;
        }
        if row.iter().any(|v| v.abs() > bound + tol) {
            return false;
        }
        for (j, v) in row.iter().enumerate() {
            col_sums[j] += v;
        }
    }
    col_sums.iter().all(|s| s.abs() > tol)
}

/// Base matrices for the full-matrix staircase bridge.
#[derive(Debug, Clone, Copy)]
pub enum BridgeBase {
    /// The identity matrix: the trajectory reproduces the refinement
    /// cascade bit for bit.
    Identity,
    /// Rows tiling the level with windows of length `rho` sampled from
    /// `K^{rho-1}_C`.
    Sampled { rho: usize, bound: f64 },
}

/// Backward staircase trajectory on the full (non-square) refinement
/// matrices viewed as maps `A -> A S^{[k]}`, compared to the direct
/// subdivision output.
///
/// By linearity the trajectory value equals `A_k` applied to the refinement
/// cascade, which is how it is evaluated; with the identity base the
/// trajectory is therefore exactly the level-`k` polygon.
pub fn staircase_bridge_check(
    scheme: &Scheme,
    p0: &ControlPolygon,
    k: usize,
    seed: u64,
    base: BridgeBase,
) -> Result<f64> {
    assert!(k >= 1);
    let cascade = subdivide_levels(scheme, p0, k)?;
    let pk = cascade.last().expect("nonempty cascade");
    let n_k = pk.len();
    let dim = pk.dim();
    let rows: Vec<Vec<f64>> = match base {
        BridgeBase::Identity => {
            return hausdorff(&pk.to_point_set(), &pk.to_point_set());
        }
        BridgeBase::Sampled { rho, bound } => {
            if n_k <= rho {
                return Err(Error::InvalidBase(format!(
                    "level has {n_k} points, need more than the window {rho}"
                )));
            }
            let mut rng = seeded_rng(seed);
            let count = n_k.div_ceil(rho);
            let mut attempt = 0;
            loop {
                let mut rows = Vec::with_capacity(count);
                for r in 0..count {
                    let start = (r * rho).min(n_k - rho);
                    let window = sample_flat(&FlatSpec::bounded(rho, bound), 1, rng.random())
                        .points()[0]
                        .coords()
                        .to_vec();
                    let mut row = vec![0.0; n_k];
                    row[start..start + rho].copy_from_slice(&window);
                    rows.push(row);
                }
                if base_matrix_valid(&rows, rho, bound) {
                    break rows;
                }
                attempt += 1;
                if attempt > 50 {
                    return Err(Error::InvalidBase(
                        "could not sample a valid base matrix".into(),
                    ));
                }
            }
        }
    };
    // trajectory rows: A_k applied to the level-k points
    let mut traj = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut acc = vec![0.0; dim];
        for (j, w) in row.iter().enumerate() {
            if *w != 0.0 {
                for (d, a) in acc.iter_mut().enumerate() {
                    *a += w * pk.points()[j].coords()[d];
                }
            }
        }
        traj.push(Point::new(acc)?);
    }
    hausdorff(&PointSet::new(traj)?, &pk.to_point_set())
}

/// One row of the empirical convergence diagnostics.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    /// Level `k` of the comparison `p^k` vs `p^{k+1}`.
    pub level: usize,
    /// Hausdorff distance between consecutive polygons.
    pub hausdorff_gap: f64,
    /// Max displacement under the dyadic correspondence
    /// `input j -> output 2j - (span - 2)`.
    pub max_displacement: f64,
}

/// Per-level set distances and parameter-matched displacements; the
/// C0/h-convergence proxies measured, not assumed.
pub fn convergence_report(
    scheme: &Scheme,
    p0: &ControlPolygon,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    assert!(levels >= 2, "need at least two levels to compare");
    let cascade = subdivide_levels(scheme, p0, levels)?;
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let here = &cascade[k];
        let next = &cascade[k + 1];
        let gap = hausdorff(&here.to_point_set(), &next.to_point_set())?;
        let span = scheme.span_at(k + 1)?;
        let mut disp = 0.0_f64;
        for (j, p) in here.points().iter().enumerate() {
            let idx = 2 * j as i64 - (span as i64 - 2);
            if idx < 0 || idx as usize >= next.len() {
                continue;
            }
            let q = &next.points()[idx as usize];
            let d: f64 = p
                .coords()
                .iter()
                .zip(q.coords())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            disp = disp.max(d);
        }
        rows.push(ConvergenceRow {
            level: k,
            hausdorff_gap: gap,
            max_displacement: disp,
        });
    }
    Ok(rows)
}

/// Heuristic read of a convergence report: the displacement column must
/// have shrunk substantially by the last level.
pub fn shows_convergence(rows: &[ConvergenceRow]) -> bool {
    match (rows.first(), rows.last()) {
        (Some(first), Some(last)) => {
            last.max_displacement <= 0.75 * first.max_displacement + 1e-12
        }
        _ => false,
    }
}
