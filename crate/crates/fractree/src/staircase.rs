//! Backward trajectories of map sequences between spaces of varying
//! dimension ("staircase" sequences `T_i : R^{n_i} -> R^{n_{i-1}}`), their
//! set-valued counterparts, grouping, partial limits and convergence
//! certification.
//!
//! A trajectory needs a base sequence supplying a starting point (or set)
//! per level, since the spaces differ. All generators must be pure.

use std::sync::Arc;

use crate::geometry::{distance, hausdorff, BoundingBox, Point, PointSet};
use crate::maps::{apply, apply_system, compose, lipschitz_bound, AffineMap, FunctionSystem};
use crate::trajectories::{certificate, ConvergenceCertificate};
use crate::{Error, Result};

/// Grouping orders tried automatically when plain certification fails.
const AUTO_GROUPINGS: [usize; 4] = [1, 2, 4, 8];

/// A sequence of affine maps `T_i : R^{n_i} -> R^{n_{i-1}}`, `i >= 1`,
/// with optional per-level invariant domains `C_i`.
#[derive(Clone)]
pub struct StaircaseSequence {
    map_gen: Arc<dyn Fn(usize) -> AffineMap + Send + Sync>,
    domain_gen: Arc<dyn Fn(usize) -> Option<BoundingBox> + Send + Sync>,
}

impl StaircaseSequence {
    pub fn new<M>(map_gen: M) -> Self
    where
        M: Fn(usize) -> AffineMap + Send + Sync + 'static,
    {
        Self {
            map_gen: Arc::new(map_gen),
            domain_gen: Arc::new(|_| None),
        }
    }

    pub fn with_domains<D>(mut self, domain_gen: D) -> Self
    where
        D: Fn(usize) -> Option<BoundingBox> + Send + Sync + 'static,
    {
        self.domain_gen = Arc::new(domain_gen);
        self
    }

    /// `T_i`, `i >= 1`.
    pub fn map_at(&self, i: usize) -> AffineMap {
        assert!(i >= 1, "staircase maps are indexed from 1");
        (self.map_gen)(i)
    }

    /// `n_i`: dimension of the level-`i` space.
    pub fn dim_at(&self, i: usize) -> usize {
        if i == 0 {
            self.map_at(1).out_dim()
        } else {
            self.map_at(i).in_dim()
        }
    }

    /// Declared invariant domain `C_i`, if any.
    pub fn domain_at(&self, i: usize) -> Option<BoundingBox> {
        (self.domain_gen)(i)
    }

    /// Chaining consistency `out_dim(T_{i+1}) = in_dim(T_i)` over a prefix.
    pub fn validate(&self, levels: usize) -> Result<()> {
        for i in 1..levels {
            let here = self.map_at(i).in_dim();
            let next = self.map_at(i + 1).out_dim();
            if here != next {
                return Err(Error::DimensionMismatch {
                    expected: here,
                    got: next,
                    context: "staircase chaining",
                });
            }
        }
        Ok(())
    }

    /// The shifted sequence `Sigma_m = {T_i}_{i >= m}` (its level `j`
    /// corresponds to original level `m - 1 + j`).
    pub fn shift(&self, m: usize) -> StaircaseSequence {
        assert!(m >= 1);
        let maps = self.map_gen.clone();
        let domains = self.domain_gen.clone();
        StaircaseSequence {
            map_gen: Arc::new(move |i| maps(m - 1 + i)),
            domain_gen: Arc::new(move |i| domains(m - 1 + i)),
        }
    }
}

/// Per-level starting points `x_i in C_i` for a backward trajectory.
#[derive(Clone)]
pub struct BaseSequence {
    point_gen: Arc<dyn Fn(usize) -> Point + Send + Sync>,
}

impl BaseSequence {
    pub fn new<P>(point_gen: P) -> Self
    where
        P: Fn(usize) -> Point + Send + Sync + 'static,
    {
        Self {
            point_gen: Arc::new(point_gen),
        }
    }

    pub fn point_at(&self, i: usize) -> Point {
        assert!(i >= 1, "base points are indexed from 1");
        (self.point_gen)(i)
    }

    /// Base for the grouped sequence: level `j` takes the original `j * l`.
    pub fn group(&self, l: usize) -> BaseSequence {
        assert!(l >= 1);
        let inner = self.point_gen.clone();
        BaseSequence {
            point_gen: Arc::new(move |j| inner(j * l)),
        }
    }

    /// Base for the shifted sequence `Sigma_m`.
    pub fn shift(&self, m: usize) -> BaseSequence {
        assert!(m >= 1);
        let inner = self.point_gen.clone();
        BaseSequence {
            point_gen: Arc::new(move |i| inner(m - 1 + i)),
        }
    }
}

/// `p_k(xbar) = T_1 . T_2 ... T_k (x_k)`, a point of `R^{n_0}`.
pub fn staircase_trajectory(seq: &StaircaseSequence, base: &BaseSequence, k: usize) -> Result<Point> {
    assert!(k >= 1, "trajectory depth must be >= 1");
    let mut x = base.point_at(k);
    for i in (1..=k).rev() {
        x = apply(&seq.map_at(i), &x)?;
    }
    Ok(x)
}

/// `d(p_k(xbar), p_k(ybar))`; bounded by `D * prod s_i` for base sequences
/// inside the invariant domains.
pub fn staircase_equivalence_gap(
    seq: &StaircaseSequence,
    base_a: &BaseSequence,
    base_b: &BaseSequence,
    k: usize,
) -> Result<f64> {
    distance(
        &staircase_trajectory(seq, base_a, k)?,
        &staircase_trajectory(seq, base_b, k)?,
    )
}

/// Grouping of order `l`: `G_j = T_{(j-1)l+1} . ... . T_{jl}`.
pub fn group(seq: &StaircaseSequence, l: usize) -> StaircaseSequence {
    assert!(l >= 1, "grouping order must be >= 1");
    let maps = seq.map_gen.clone();
    let domains = seq.domain_gen.clone();
    StaircaseSequence {
        map_gen: Arc::new(move |j| {
            let lo = (j - 1) * l + 1;
            let hi = j * l;
            let mut composed = maps(hi);
            for i in (lo..hi).rev() {
                composed = compose(&maps(i), &composed).expect("staircase chaining broken");
            }
            composed
        }),
        domain_gen: Arc::new(move |j| domains(j * l)),
    }
}

/// Diameter bound used in certificates: the declared domains when complete,
/// otherwise the empirical per-level bounding boxes of trajectory
/// intermediates (inflated by 10%) merged with whatever was declared.
fn effective_diameter(
    seq: &StaircaseSequence,
    base: &BaseSequence,
    horizon: usize,
) -> Result<(f64, bool)> {
    let mut declared = Vec::with_capacity(horizon + 1);
    let mut all_declared = true;
    for i in 0..=horizon {
        let d = seq.domain_at(i);
        all_declared &= d.is_some();
        declared.push(d);
    }
    if all_declared {
        let d = declared
            .iter()
            .map(|b| b.as_ref().expect("checked above").diameter())
            .fold(0.0_f64, f64::max);
        return Ok((d, false));
    }
    let mut boxes: Vec<Option<BoundingBox>> = declared;
    for k in 1..=horizon {
        let mut x = base.point_at(k);
        let mut level = k;
        record_point(&mut boxes[level], &x);
        while level > 0 {
            x = apply(&seq.map_at(level), &x)?;
            level -= 1;
            record_point(&mut boxes[level], &x);
        }
    }
    let d = boxes
        .iter()
        .flatten()
        .map(|b| b.diameter())
        .fold(0.0_f64, f64::max);
    Ok((d * 1.1, true))
}

fn record_point(slot: &mut Option<BoundingBox>, p: &Point) {
    let single = BoundingBox::new(p.coords().to_vec(), p.coords().to_vec())
        .expect("point bounds are well formed");
    *slot = Some(match slot.take() {
        Some(b) => b.merge(&single),
        None => single,
    });
}

/// One row of a certification table.
#[derive(Debug, Clone)]
pub struct CertifyRow {
    pub k: usize,
    pub s_k: f64,
    pub product: f64,
    pub tail_bound: f64,
}

/// Certification attempt for one (possibly grouped) sequence.
#[derive(Debug, Clone)]
pub struct CertifyReport {
    /// Grouping order this attempt used (1 = the raw sequence).
    pub grouping: usize,
    /// Levels of the grouped sequence covered by the table.
    pub rows: Vec<CertifyRow>,
    /// First grouped level whose tail bound met the tolerance.
    pub certified_at: Option<usize>,
    /// Certificate at `certified_at` (or at the horizon when uncertified).
    pub certificate: ConvergenceCertificate,
    /// The diameter bound used.
    pub diameter: f64,
    /// True when the diameter came from empirical bounding boxes.
    pub empirical_domain: bool,
}

fn certify_one(s: &[f64], d: f64, tol: f64, horizon: usize) -> (Vec<CertifyRow>, Option<usize>, ConvergenceCertificate) {
    let mut rows = Vec::with_capacity(horizon);
    let mut certified = None;
    let mut chosen = None;
    for k in 1..=horizon {
        let cert = certificate(s, k, d, horizon);
        rows.push(CertifyRow {
            k,
            s_k: s[k - 1],
            product: cert.product_k,
            tail_bound: cert.tail_bound,
        });
        if certified.is_none() && !cert.conservative && cert.tail_bound <= tol {
            certified = Some(k);
            chosen = Some(cert);
        }
    }
    let cert = chosen.unwrap_or_else(|| certificate(s, horizon, d, horizon));
    (rows, certified, cert)
}

/// A certified staircase limit.
#[derive(Debug, Clone)]
pub struct StaircaseLimit {
    pub point: Point,
    /// Tail bound certifying `d(point, limit) <= bound`.
    pub bound: f64,
    /// Grouping order that certified (1 = none needed).
    pub grouping: usize,
    /// Original-sequence depth of the returned trajectory value.
    pub steps: usize,
    pub empirical_domain: bool,
}

/// First certified trajectory value, retrying with grouping orders
/// 2, 4, 8 when the raw sequence does not certify within `max_k`.
pub fn staircase_limit(
    seq: &StaircaseSequence,
    base: &BaseSequence,
    tol: f64,
    max_k: usize,
) -> Result<StaircaseLimit> {
    assert!(tol > 0.0 && max_k >= 1);
    let mut best = f64::INFINITY;
    for &l in &AUTO_GROUPINGS {
        let horizon = max_k / l;
        if horizon == 0 {
            continue;
        }
        let grouped = if l == 1 { seq.clone() } else { group(seq, l) };
        let gbase = base.group(l);
        let (d, empirical) = effective_diameter(&grouped, &gbase, horizon)?;
        let s: Vec<f64> = (1..=horizon)
            .map(|j| lipschitz_bound(&grouped.map_at(j)))
            .collect();
        let (_, certified, cert) = certify_one(&s, d, tol, horizon);
        if let Some(j) = certified {
            let point = staircase_trajectory(&grouped, &gbase, j)?;
            return Ok(StaircaseLimit {
                point,
                bound: cert.tail_bound,
                grouping: l,
                steps: j * l,
                empirical_domain: empirical,
            });
        }
        if !cert.conservative {
            best = best.min(cert.tail_bound);
        }
    }
    Err(Error::NoCertificate { max_k, best })
}

/// Certification tables for the raw sequence and the automatic grouping
/// retries, in the order tried; stops after the first certified attempt.
pub fn staircase_certification(
    seq: &StaircaseSequence,
    base: &BaseSequence,
    tol: f64,
    max_k: usize,
) -> Result<Vec<CertifyReport>> {
    let mut reports = Vec::new();
    for &l in &AUTO_GROUPINGS {
        let horizon = max_k / l;
        if horizon == 0 {
            continue;
        }
        let grouped = if l == 1 { seq.clone() } else { group(seq, l) };
        let gbase = base.group(l);
        let (d, empirical) = effective_diameter(&grouped, &gbase, horizon)?;
        let s: Vec<f64> = (1..=horizon)
            .map(|j| lipschitz_bound(&grouped.map_at(j)))
            .collect();
        let (rows, certified, cert) = certify_one(&s, d, tol, horizon);
        let done = certified.is_some();
        reports.push(CertifyReport {
            grouping: l,
            rows,
            certified_at: certified,
            certificate: cert,
            diameter: d,
            empirical_domain: empirical,
        });
        if done {
            break;
        }
    }
    Ok(reports)
}

/// Limit `tau_{m-1}` of the partial sequence `Sigma_m = {T_i}_{i >= m}`.
pub fn partial_limit(
    seq: &StaircaseSequence,
    base: &BaseSequence,
    m: usize,
    tol: f64,
    max_k: usize,
) -> Result<Point> {
    assert!(m >= 1);
    Ok(staircase_limit(&seq.shift(m), &base.shift(m), tol, max_k)?.point)
}

/// A sequence of function systems `F_i` with `f_{r,i} : R^{n_i} -> R^{n_{i-1}}`.
#[derive(Clone)]
pub struct StaircaseSfs {
    system_gen: Arc<dyn Fn(usize) -> FunctionSystem + Send + Sync>,
    domain_gen: Arc<dyn Fn(usize) -> Option<BoundingBox> + Send + Sync>,
}

impl StaircaseSfs {
    pub fn new<S>(system_gen: S) -> Self
    where
        S: Fn(usize) -> FunctionSystem + Send + Sync + 'static,
    {
        Self {
            system_gen: Arc::new(system_gen),
            domain_gen: Arc::new(|_| None),
        }
    }

    pub fn with_domains<D>(mut self, domain_gen: D) -> Self
    where
        D: Fn(usize) -> Option<BoundingBox> + Send + Sync + 'static,
    {
        self.domain_gen = Arc::new(domain_gen);
        self
    }

    /// Staircase of singleton systems mirroring a plain map sequence.
    pub fn from_sequence(seq: &StaircaseSequence) -> Self {
        let maps = seq.map_gen.clone();
        let domains = seq.domain_gen.clone();
        Self {
            system_gen: Arc::new(move |i| {
                FunctionSystem::new(vec![maps(i)]).expect("singleton system is well formed")
            }),
            domain_gen: Arc::new(move |i| domains(i)),
        }
    }

    pub fn system_at(&self, i: usize) -> FunctionSystem {
        assert!(i >= 1, "systems are indexed from 1");
        (self.system_gen)(i)
    }

    pub fn dim_at(&self, i: usize) -> usize {
        if i == 0 {
            self.system_at(1).out_dim()
        } else {
            self.system_at(i).in_dim()
        }
    }

    pub fn domain_at(&self, i: usize) -> Option<BoundingBox> {
        (self.domain_gen)(i)
    }

    /// Contraction factor `s_i = max_r Lip(f_{r,i})`.
    pub fn contraction_at(&self, i: usize) -> f64 {
        self.system_at(i).contraction_factor()
    }

    /// Grouping of order `l`: systems whose members are all `2^l`-style
    /// compositions of member maps, deepest level applied first.
    pub fn group(&self, l: usize) -> StaircaseSfs {
        assert!(l >= 1);
        let systems = self.system_gen.clone();
        let domains = self.domain_gen.clone();
        StaircaseSfs {
            system_gen: Arc::new(move |j| {
                let lo = (j - 1) * l + 1;
                let hi = j * l;
                let mut members: Vec<AffineMap> =
                    systems(hi).maps().to_vec();
                for i in (lo..hi).rev() {
                    let outer = systems(i);
                    let mut next = Vec::with_capacity(outer.maps().len() * members.len());
                    for f in outer.maps() {
                        for g in &members {
                            next.push(compose(f, g).expect("staircase chaining broken"));
                        }
                    }
                    members = next;
                }
                FunctionSystem::new(members).expect("grouped system is well formed")
            }),
            domain_gen: Arc::new(move |j| domains(j * l)),
        }
    }

    /// The shifted staircase `Sigma_m = {F_i}_{i >= m}`.
    pub fn shift(&self, m: usize) -> StaircaseSfs {
        assert!(m >= 1);
        let systems = self.system_gen.clone();
        let domains = self.domain_gen.clone();
        StaircaseSfs {
            system_gen: Arc::new(move |i| systems(m - 1 + i)),
            domain_gen: Arc::new(move |i| domains(m - 1 + i)),
        }
    }
}

/// Per-level starting sets `A_i subset C_i`.
#[derive(Clone)]
pub struct BaseSetSequence {
    set_gen: Arc<dyn Fn(usize) -> PointSet + Send + Sync>,
}

impl BaseSetSequence {
    pub fn new<S>(set_gen: S) -> Self
    where
        S: Fn(usize) -> PointSet + Send + Sync + 'static,
    {
        Self {
            set_gen: Arc::new(set_gen),
        }
    }

    /// Singleton sets from a base point sequence.
    pub fn from_points(base: &BaseSequence) -> Self {
        let inner = base.point_gen.clone();
        Self {
            set_gen: Arc::new(move |i| {
                PointSet::new(vec![inner(i)]).expect("singleton set is well formed")
            }),
        }
    }

    pub fn set_at(&self, i: usize) -> PointSet {
        assert!(i >= 1, "base sets are indexed from 1");
        (self.set_gen)(i)
    }

    pub fn shift(&self, m: usize) -> BaseSetSequence {
        assert!(m >= 1);
        let inner = self.set_gen.clone();
        BaseSetSequence {
            set_gen: Arc::new(move |i| inner(m - 1 + i)),
        }
    }
}

/// `p_k(Abar) = F_1 . F_2 ... F_k (A_k)`, a set in `R^{n_0}`.
pub fn staircase_sfs_trajectory(
    sfs: &StaircaseSfs,
    base: &BaseSetSequence,
    k: usize,
) -> Result<PointSet> {
    sfs_partial_trajectory(sfs, base, 1, k)
}

/// Trajectory of the partial staircase `Sigma_m`:
/// `F_m . F_{m+1} ... F_k (A_k)`, a set in `R^{n_{m-1}}`.
pub fn sfs_partial_trajectory(
    sfs: &StaircaseSfs,
    base: &BaseSetSequence,
    m: usize,
    k: usize,
) -> Result<PointSet> {
    assert!(m >= 1 && k >= m, "need 1 <= m <= k");
    let mut s = base.set_at(k);
    for i in (m..=k).rev() {
        s = apply_system(&sfs.system_at(i), &s)?;
    }
    Ok(s)
}

/// Hausdorff gap of the staircase self-referential identity
/// `P_{m-1} = F_m(P_m)` at matched finite depth `k`; exactly zero up to
/// floating point because both sides perform the same compositions.
pub fn sfs_self_referential_gap(
    sfs: &StaircaseSfs,
    base: &BaseSetSequence,
    m: usize,
    k: usize,
) -> Result<f64> {
    if m < 1 || m >= k {
        return Err(Error::InvalidInput(format!(
            "self-referential gap needs 1 <= m < k, got m={m}, k={k}"
        )));
    }
    let lhs = sfs_partial_trajectory(sfs, base, m, k)?;
    let deeper = sfs_partial_trajectory(sfs, base, m + 1, k)?;
    let rhs = apply_system(&sfs.system_at(m), &deeper)?;
    hausdorff(&lhs, &rhs)
}

/// Certification tables for a staircase SFS (contraction factors in place
/// of single-map Lipschitz bounds), with the same automatic grouping retry.
pub fn sfs_certification(
    sfs: &StaircaseSfs,
    base: &BaseSetSequence,
    tol: f64,
    max_k: usize,
) -> Result<Vec<CertifyReport>> {
    let mut reports = Vec::new();
    for &l in &AUTO_GROUPINGS {
        let horizon = max_k / l;
        if horizon == 0 {
            continue;
        }
        let grouped = if l == 1 { sfs.clone() } else { sfs.group(l) };
        let (d, empirical) = sfs_effective_diameter(&grouped, base, l, horizon)?;
        let s: Vec<f64> = (1..=horizon).map(|j| grouped.contraction_at(j)).collect();
        let (rows, certified, cert) = certify_one(&s, d, tol, horizon);
        let done = certified.is_some();
        reports.push(CertifyReport {
            grouping: l,
            rows,
            certified_at: certified,
            certificate: cert,
            diameter: d,
            empirical_domain: empirical,
        });
        if done {
            break;
        }
    }
    Ok(reports)
}

fn sfs_effective_diameter(
    grouped: &StaircaseSfs,
    base: &BaseSetSequence,
    l: usize,
    horizon: usize,
) -> Result<(f64, bool)> {
    let mut all = true;
    let mut max_d = 0.0_f64;
    for i in 0..=horizon {
        match grouped.domain_at(i) {
            Some(b) => max_d = max_d.max(b.diameter()),
            None => {
                all = false;
                break;
            }
        }
    }
    if all {
        return Ok((max_d, false));
    }
    // Empirical fallback: bounding boxes of one trajectory's intermediates.
    let mut boxes: Vec<Option<BoundingBox>> = (0..=horizon).map(|i| grouped.domain_at(i)).collect();
    let mut s = base.set_at(horizon * l);
    record_set(&mut boxes[horizon], &s);
    for i in (1..=horizon).rev() {
        s = apply_system(&grouped.system_at(i), &s)?;
        record_set(&mut boxes[i - 1], &s);
    }
    let d = boxes
        .iter()
        .flatten()
        .map(|b| b.diameter())
        .fold(0.0_f64, f64::max);
    Ok((d * 1.1, true))
}

fn record_set(slot: &mut Option<BoundingBox>, s: &PointSet) {
    let b = s.bounding_box();
    *slot = Some(match slot.take() {
        Some(old) => old.merge(&b),
        None => b,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::seeded_rng;
    use crate::trajectories::{backward_limit, MapSequence};
    use rand::Rng;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    /// All levels one-dimensional, `T_i(x) = x/2`.
    fn halving() -> StaircaseSequence {
        StaircaseSequence::new(|_| AffineMap::line(0.5, 0.0))
            .with_domains(|_| Some(BoundingBox::centered_cube(1, 1.0).unwrap()))
    }

    fn ones_base() -> BaseSequence {
        BaseSequence::new(|_| Point::new(vec![1.0]).unwrap())
    }

    /// `T_i : R^{i+1} -> R^i`, `(v_1, ..., v_{i+1}) -> (v_1 + v_{i+1}, v_2, ..., v_i) / 2`.
    fn shrinking_staircase() -> StaircaseSequence {
        StaircaseSequence::new(|i| {
            let mut rows = vec![vec![0.0; i + 1]; i];
            rows[0][0] = 0.5;
            rows[0][i] = 0.5;
            for (r, row) in rows.iter_mut().enumerate().skip(1) {
                row[r] = 0.5;
            }
            AffineMap::new(rows, vec![0.0; i]).unwrap()
        })
    }

    #[test]
    fn trajectory_examples() {
        assert_eq!(
            staircase_trajectory(&halving(), &ones_base(), 5).unwrap(),
            pt(&[1.0 / 32.0])
        );

        let seq = shrinking_staircase();
        let base = BaseSequence::new(|i| Point::new(vec![1.0; i + 1]).unwrap());
        assert_eq!(staircase_trajectory(&seq, &base, 1).unwrap(), pt(&[1.0]));

        // k = 1 reduces to a single application
        let t1 = seq.map_at(1);
        assert_eq!(
            staircase_trajectory(&seq, &base, 1).unwrap(),
            apply(&t1, &base.point_at(1)).unwrap()
        );
        seq.validate(6).unwrap();
    }

    #[test]
    fn equivalence_gap_examples() {
        let seq = halving();
        assert_eq!(
            staircase_equivalence_gap(&seq, &ones_base(), &ones_base(), 7).unwrap(),
            0.0
        );

        let zero = BaseSequence::new(|_| Point::new(vec![0.0]).unwrap());
        for k in 1..=20 {
            let gap = staircase_equivalence_gap(&seq, &ones_base(), &zero, k).unwrap();
            assert!(gap <= 0.5f64.powi(k as i32) + 1e-15);
        }

        // non-contractive chain: gap bounded by the base distance only
        let drift = StaircaseSequence::new(|_| AffineMap::line(1.0, 0.0));
        let gap = staircase_equivalence_gap(&drift, &ones_base(), &zero, 9).unwrap();
        assert_eq!(gap, 1.0);
    }

    #[test]
    fn grouping_examples() {
        let seq = halving();
        let g1 = group(&seq, 1);
        for i in 1..=5 {
            assert_eq!(g1.map_at(i), seq.map_at(i));
        }

        let g2 = group(&seq, 2);
        assert_eq!(g2.map_at(3), AffineMap::line(0.25, 0.0));

        // grouped trajectory at step j equals the original at step j*l
        let seq = shrinking_staircase();
        let base = BaseSequence::new(|i| Point::new(vec![0.25; i + 1]).unwrap());
        for l in [2usize, 3] {
            let grouped = group(&seq, l);
            let gbase = base.group(l);
            for j in 1..=3 {
                let a = staircase_trajectory(&grouped, &gbase, j).unwrap();
                let b = staircase_trajectory(&seq, &base, j * l).unwrap();
                assert!(distance(&a, &b).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn limit_matches_one_dimensional_reduction() {
        let seq = halving();
        let limit = staircase_limit(&seq, &ones_base(), 1e-8, 120).unwrap();
        assert_eq!(limit.grouping, 1);
        assert!(!limit.empirical_domain);

        let flat = MapSequence::constant(
            BoundingBox::centered_cube(1, 1.0).unwrap(),
            AffineMap::line(0.5, 0.0),
        );
        let (p, _) = backward_limit(&flat, &pt(&[1.0]), 1e-8, 120).unwrap();
        assert!(distance(&limit.point, &p).unwrap() <= 2e-8);
    }

    #[test]
    fn limit_errors_without_contraction() {
        let drift = StaircaseSequence::new(|_| AffineMap::line(1.0, 0.0))
            .with_domains(|_| Some(BoundingBox::centered_cube(1, 1.0).unwrap()));
        assert!(matches!(
            staircase_limit(&drift, &ones_base(), 1e-6, 64),
            Err(Error::NoCertificate { .. })
        ));
    }

    #[test]
    fn grouping_certifies_alternating_chain() {
        // Raw Lipschitz bounds alternate 2 and 3 (product diverges), yet the
        // pair compositions contract: grouping of order 2 certifies.
        let seq = StaircaseSequence::new(|i| {
            if i % 2 == 1 {
                AffineMap::new(vec![vec![2.0, 0.0], vec![0.0, 0.1]], vec![0.0, 0.0]).unwrap()
            } else {
                AffineMap::new(vec![vec![0.0, 0.3], vec![3.0, 0.0]], vec![0.0, 0.0]).unwrap()
            }
        })
        .with_domains(|_| Some(BoundingBox::centered_cube(2, 4.0).unwrap()));
        let base = BaseSequence::new(|_| Point::new(vec![1.0, 1.0]).unwrap());

        let g = group(&seq, 2);
        let s1 = lipschitz_bound(&g.map_at(1));
        assert!(s1 < 1.0 && s1 > 0.5); // [[0, 0.6], [0.3, 0]] has norm 0.6

        let limit = staircase_limit(&seq, &base, 1e-6, 200).unwrap();
        assert_eq!(limit.grouping, 2);
        assert!(limit.point.coords().iter().all(|c| c.abs() <= 1e-6));

        let reports = staircase_certification(&seq, &base, 1e-6, 200).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].grouping, 1);
        assert!(reports[0].certified_at.is_none());
        assert_eq!(reports[1].grouping, 2);
        assert!(reports[1].certified_at.is_some());
    }

    #[test]
    fn one_dimensional_grouped_products() {
        // s_i alternating 1.1, 0.4: pair products are 0.44.
        let seq = StaircaseSequence::new(|i| {
            AffineMap::line(if i % 2 == 1 { 1.1 } else { 0.4 }, 0.05)
        })
        .with_domains(|_| Some(BoundingBox::centered_cube(1, 2.0).unwrap()));
        let g = group(&seq, 2);
        for j in 1..=4 {
            assert!((lipschitz_bound(&g.map_at(j)) - 0.44).abs() < 1e-14);
        }
        let base = BaseSequence::new(|_| Point::new(vec![0.5]).unwrap());
        let limit = staircase_limit(&seq, &base, 1e-6, 200).unwrap();
        // fixed point of x -> 0.44 x + (1.1 * 0.05 + 0.05) = 0.105/0.56
        assert!((limit.point.coords()[0] - 0.105 / 0.56).abs() <= limit.bound + 1e-9);
    }

    #[test]
    fn partial_limit_chain() {
        let seq = StaircaseSequence::new(|i| AffineMap::line(0.5, 0.25 / i as f64))
            .with_domains(|_| Some(BoundingBox::centered_cube(1, 2.0).unwrap()));
        let base = BaseSequence::new(|_| Point::new(vec![0.5]).unwrap());
        let tol = 1e-9;

        // m = 1 agrees with the full staircase limit
        let full = staircase_limit(&seq, &base, tol, 200).unwrap();
        let tau0 = partial_limit(&seq, &base, 1, tol, 200).unwrap();
        assert!(distance(&full.point, &tau0).unwrap() <= 2.0 * tol);

        // tau_{m-1} = T_m(tau_m)
        for m in 2..=8usize {
            let tau_prev = partial_limit(&seq, &base, m, tol, 200).unwrap();
            let tau_m = partial_limit(&seq, &base, m + 1, tol, 200).unwrap();
            let mapped = apply(&seq.map_at(m), &tau_m).unwrap();
            assert!(distance(&tau_prev, &mapped).unwrap() <= 2.0 * tol);
        }

        // constant halving chain: every tau_m = 0
        let seq0 = halving();
        for m in 1..=5 {
            let tau = partial_limit(&seq0, &ones_base(), m, 1e-8, 120).unwrap();
            assert!(tau.coords()[0].abs() <= 1e-7);
        }
    }

    #[test]
    fn sfs_trajectory_examples() {
        // singleton systems reduce to the point trajectory exactly
        let seq = shrinking_staircase();
        let sfs = StaircaseSfs::from_sequence(&seq);
        let base = BaseSequence::new(|i| Point::new(vec![0.5; i + 1]).unwrap());
        let sets = BaseSetSequence::from_points(&base);
        for k in 1..=6 {
            let s = staircase_sfs_trajectory(&sfs, &sets, k).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(
                s.points()[0],
                staircase_trajectory(&seq, &base, k).unwrap()
            );
        }

        // constant-dimension Cantor staircase matches the iterated system
        let cantor = StaircaseSfs::new(|_| {
            FunctionSystem::new(vec![
                AffineMap::line(1.0 / 3.0, 0.0),
                AffineMap::line(1.0 / 3.0, 2.0 / 3.0),
            ])
            .unwrap()
        });
        let zero_sets = BaseSetSequence::new(|_| PointSet::from_coords(vec![vec![0.0]]).unwrap());
        let s2 = staircase_sfs_trajectory(&cantor, &zero_sets, 2).unwrap();
        let expected = PointSet::from_coords(vec![
            vec![0.0],
            vec![2.0 / 9.0],
            vec![2.0 / 3.0],
            vec![8.0 / 9.0],
        ])
        .unwrap();
        assert!(s2.set_eq(&expected, 1e-15));

        // k = 1 is a single set-valued application
        let s1 = staircase_sfs_trajectory(&cantor, &zero_sets, 1).unwrap();
        let direct = apply_system(&cantor.system_at(1), &zero_sets.set_at(1)).unwrap();
        assert!(s1.set_eq(&direct, 0.0));
    }

    #[test]
    fn sfs_self_referential() {
        let cantor = StaircaseSfs::new(|_| {
            FunctionSystem::new(vec![
                AffineMap::line(1.0 / 3.0, 0.0),
                AffineMap::line(1.0 / 3.0, 2.0 / 3.0),
            ])
            .unwrap()
        });
        let sets = BaseSetSequence::new(|_| PointSet::from_coords(vec![vec![0.0]]).unwrap());
        for m in 1..=4 {
            assert_eq!(sfs_self_referential_gap(&cantor, &sets, m, 10).unwrap(), 0.0);
        }
        assert!(sfs_self_referential_gap(&cantor, &sets, 5, 5).is_err());
    }

    #[test]
    fn equivalence_bound_random_staircases() {
        let mut rng = seeded_rng(42);
        for _ in 0..30 {
            // random dims n_0..n_k in 1..=3, random contractive maps
            let k = rng.random_range(3..=8usize);
            let dims: Vec<usize> = (0..=k).map(|_| rng.random_range(1..=3usize)).collect();
            let mut maps = Vec::new();
            let mut lips = Vec::new();
            for i in 1..=k {
                let (out_d, in_d) = (dims[i - 1], dims[i]);
                let m: Vec<Vec<f64>> = (0..out_d)
                    .map(|_| (0..in_d).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let raw = AffineMap::new(m, vec![0.0; out_d]).unwrap();
                let target = rng.random_range(0.2..0.95);
                let factor = target / lipschitz_bound(&raw).max(1e-9);
                let scaled: Vec<Vec<f64>> = (0..out_d)
                    .map(|r| (0..in_d).map(|c| raw.matrix()[(r, c)] * factor).collect())
                    .collect();
                let map = AffineMap::new(scaled, vec![0.0; out_d]).unwrap();
                lips.push(lipschitz_bound(&map));
                maps.push(map);
            }
            let maps2 = maps.clone();
            let seq = StaircaseSequence::new(move |i| maps2[i - 1].clone());
            let d = 2.0 * 3.0f64.sqrt(); // diam of [-1,1]^3 covers all levels
            let dims_a = dims.clone();
            let base_a = BaseSequence::new(move |i| Point::new(vec![1.0; dims_a[i]]).unwrap());
            let dims_b = dims.clone();
            let base_b = BaseSequence::new(move |i| Point::new(vec![-1.0; dims_b[i]]).unwrap());
            for depth in 1..=k {
                let gap = staircase_equivalence_gap(&seq, &base_a, &base_b, depth).unwrap();
                let product: f64 = lips[..depth].iter().product();
                assert!(gap <= d * product + 1e-9);
            }
        }
    }
}
