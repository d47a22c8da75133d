//! Forward and backward trajectories of a sequence of maps on one space,
//! with numerical convergence certificates.
//!
//! For maps `{T_i}` with Lipschitz bounds `{s_i}` on an invariant domain of
//! diameter `D`, the backward trajectories `Psi_k = T_1 . T_2 ... T_k` are
//! Cauchy with `d(Psi_m, Psi_k) <= D * sum_{j=k}^{m-1} prod_{i<=j} s_i`; a
//! certificate reports the truncated tail of that series.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::geometry::{distance, BoundingBox, Point};
use crate::maps::{apply, lipschitz_bound, AffineMap};
use crate::{Error, Result};

/// Marginal-term threshold below which a truncated tail is accepted as a
/// certificate.
const TAIL_CUTOFF: f64 = 1e-15;

/// A sequence of square affine maps `T_i : R^m -> R^m`, `i >= 1`, together
/// with a declared invariant domain.
///
/// The generator must be pure: the same index always yields the same map.
#[derive(Clone)]
pub struct MapSequence {
    generator: Arc<dyn Fn(usize) -> AffineMap + Send + Sync>,
    domain: BoundingBox,
}

impl MapSequence {
    pub fn new<G>(domain: BoundingBox, generator: G) -> Self
    where
        G: Fn(usize) -> AffineMap + Send + Sync + 'static,
    {
        Self {
            generator: Arc::new(generator),
            domain,
        }
    }

    /// The same map at every index.
    pub fn constant(domain: BoundingBox, map: AffineMap) -> Self {
        Self::new(domain, move |_| map.clone())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoundingBox {
        &self.domain
    }

    /// `T_i`, checked to be an endomorphism of the declared space.
    pub fn map_at(&self, i: usize) -> Result<AffineMap> {
        assert!(i >= 1, "map indices start at 1");
        let m = (self.generator)(i);
        if m.in_dim() != self.dim() || m.out_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.in_dim().max(m.out_dim()),
                context: "map sequence entry",
            });
        }
        Ok(m)
    }

    /// Lipschitz bounds `s_1 ... s_n`.
    pub fn lipschitz_prefix(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|i| Ok(lipschitz_bound(&self.map_at(i)?))).collect()
    }
}

/// Truncated-series certificate for backward convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    /// Cut index `k`.
    pub k: usize,
    /// `prod_{i=1}^k s_i`.
    pub product_k: f64,
    /// `D * sum_{j=k}^{horizon} prod_{i=1}^j s_i`.
    pub tail_bound: f64,
    /// Truncation horizon of the series.
    pub horizon: usize,
    /// True when the marginal term at the horizon has not dropped below
    /// the cutoff, i.e. the truncation is not yet trustworthy.
    pub conservative: bool,
}

/// Certificate from explicit Lipschitz bounds `s[0] = s_1, ...`.
///
/// `s` must cover indices `1..=horizon` and `horizon >= k >= 1`.
pub fn certificate(s: &[f64], k: usize, d: f64, horizon: usize) -> ConvergenceCertificate {
    assert!(k >= 1 && horizon >= k, "need 1 <= k <= horizon");
    assert!(s.len() >= horizon, "need Lipschitz bounds up to the horizon");
    assert!(s[..horizon].iter().all(|v| *v >= 0.0), "Lipschitz bounds must be nonnegative");
    let mut product = 1.0_f64;
    let mut product_k = 1.0_f64;
    let mut tail = 0.0_f64;
    for (j, sj) in s[..horizon].iter().enumerate() {
        product *= sj;
        let idx = j + 1;
        if idx == k {
            product_k = product;
        }
        if idx >= k {
            tail += product;
        }
    }
    ConvergenceCertificate {
        k,
        product_k,
        tail_bound: d * tail,
        horizon,
        conservative: d * product >= TAIL_CUTOFF,
    }
}

/// Forward trajectory `Phi_k(x) = T_k . T_{k-1} ... T_1 (x)`.
pub fn forward(seq: &MapSequence, x: &Point, k: usize) -> Result<Point> {
    assert!(k >= 1, "trajectory length must be >= 1");
    let mut p = x.clone();
    for i in 1..=k {
        p = apply(&seq.map_at(i)?, &p)?;
    }
    Ok(p)
}

/// Backward trajectory `Psi_k(x) = T_1 . T_2 ... T_k (x)`.
pub fn backward(seq: &MapSequence, x: &Point, k: usize) -> Result<Point> {
    assert!(k >= 1, "trajectory length must be >= 1");
    let mut p = x.clone();
    for i in (1..=k).rev() {
        p = apply(&seq.map_at(i)?, &p)?;
    }
    Ok(p)
}

/// First certified backward trajectory value.
///
/// Returns `Psi_k(x)` for the smallest `k` whose certificate tail bound is
/// at most `tol` (and not conservative), together with that bound. The
/// series is truncated at `max_k`.
pub fn backward_limit(
    seq: &MapSequence,
    x: &Point,
    tol: f64,
    max_k: usize,
) -> Result<(Point, f64)> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(max_k >= 1);
    let s = seq.lipschitz_prefix(max_k)?;
    let d = seq.domain.diameter();
    let mut best = f64::INFINITY;
    for k in 1..=max_k {
        let cert = certificate(&s, k, d, max_k);
        if !cert.conservative {
            best = best.min(cert.tail_bound);
            if cert.tail_bound <= tol {
                return Ok((backward(seq, x, k)?, cert.tail_bound));
            }
        }
    }
    Err(Error::NoCertificate { max_k, best })
}

/// Exact fixed point `(I - M)^{-1} b` of a contractive affine map.
pub fn fixed_point(map: &AffineMap) -> Result<Point> {
    let lip = lipschitz_bound(map);
    if lip >= 1.0 {
        return Err(Error::NotContractive(lip));
    }
    let n = map.in_dim();
    let system = DMatrix::identity(n, n) - map.matrix();
    let solved = system
        .lu()
        .solve(map.translation())
        .ok_or_else(|| Error::InvalidInput("singular system while solving for fixed point".into()))?;
    Ok(Point::from_vector(solved))
}

/// `Phi_k(x)` and its distance to the exact fixed point of `limit_map`.
///
/// When the `T_i` approach `limit_map` uniformly on the domain, the forward
/// trajectory converges to that fixed point; this measures how far a finite
/// trajectory still is.
pub fn forward_limit_check(
    seq: &MapSequence,
    limit_map: &AffineMap,
    x: &Point,
    k: usize,
) -> Result<(Point, f64)> {
    let p = fixed_point(limit_map)?;
    let phi = forward(seq, x, k)?;
    let gap = distance(&phi, &p)?;
    Ok((phi, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::seeded_rng;
    use crate::maps::compose;
    use rand::Rng;

    fn pt1(x: f64) -> Point {
        Point::new(vec![x]).unwrap()
    }

    fn unit_domain() -> BoundingBox {
        BoundingBox::centered_cube(1, 1.0).unwrap()
    }

    /// `T_i(x) = x/2 + 2^{-i}`.
    fn shrinking_seq() -> MapSequence {
        MapSequence::new(unit_domain(), |i| {
            AffineMap::line(0.5, 0.5f64.powi(i as i32))
        })
    }

    #[test]
    fn forward_examples() {
        let id = MapSequence::constant(unit_domain(), AffineMap::identity(1));
        assert_eq!(forward(&id, &pt1(0.25), 7).unwrap(), pt1(0.25));

        let halving = MapSequence::constant(unit_domain(), AffineMap::line(0.5, 0.0));
        assert_eq!(forward(&halving, &pt1(1.0), 4).unwrap(), pt1(1.0 / 16.0));

        // T_1(0) = 1/2, T_2(1/2) = 1/2, T_3(1/2) = 3/8
        assert_eq!(forward(&shrinking_seq(), &pt1(0.0), 3).unwrap(), pt1(3.0 / 8.0));
    }

    #[test]
    fn backward_examples() {
        let id = MapSequence::constant(unit_domain(), AffineMap::identity(1));
        assert_eq!(backward(&id, &pt1(0.25), 7).unwrap(), pt1(0.25));

        let halving = MapSequence::constant(unit_domain(), AffineMap::line(0.5, 0.0));
        assert_eq!(backward(&halving, &pt1(1.0), 5).unwrap(), pt1(1.0 / 32.0));

        // T_3(0) = 1/8, T_2(1/8) = 5/16, T_1(5/16) = 21/32; value frozen
        // from the composition oracle below.
        let psi3 = backward(&shrinking_seq(), &pt1(0.0), 3).unwrap();
        assert_eq!(psi3, pt1(21.0 / 32.0));
    }

    #[test]
    fn backward_matches_composition_oracle() {
        let seq = shrinking_seq();
        for k in 1..=12 {
            let mut composed = seq.map_at(k).unwrap();
            for i in (1..k).rev() {
                composed = compose(&seq.map_at(i).unwrap(), &composed).unwrap();
            }
            let via_compose = apply(&composed, &pt1(0.0)).unwrap();
            let via_backward = backward(&seq, &pt1(0.0), k).unwrap();
            assert!(distance(&via_compose, &via_backward).unwrap() < 1e-10);
        }
    }

    #[test]
    fn certificate_examples() {
        let s = vec![0.5; 60];
        let cert = certificate(&s, 10, 1.0, 60);
        assert_eq!(cert.product_k, 0.5f64.powi(10));
        let expected_tail: f64 = (10..=60).map(|j| 0.5f64.powi(j)).sum();
        assert!((cert.tail_bound - expected_tail).abs() < 1e-18);
        assert!((cert.tail_bound - 0.5f64.powi(9)).abs() < 1e-12);
        assert!(!cert.conservative);

        let ones = vec![1.0; 40];
        assert!(certificate(&ones, 5, 1.0, 40).conservative);

        let zeros = vec![0.0; 10];
        let cert = certificate(&zeros, 3, 1.0, 10);
        assert_eq!(cert.product_k, 0.0);
        assert_eq!(cert.tail_bound, 0.0);
        assert!(!cert.conservative);
    }

    #[test]
    fn certificate_product_monotone_when_contractive() {
        let s: Vec<f64> = (1..=30).map(|i| 0.3 + 0.5 / i as f64).collect();
        let mut last = f64::INFINITY;
        for k in 1..=30 {
            let c = certificate(&s, k, 2.0, 30);
            assert!(c.product_k <= last);
            assert!(c.tail_bound >= 0.0);
            last = c.product_k;
        }
    }

    #[test]
    fn backward_limit_examples() {
        let halving = MapSequence::constant(unit_domain(), AffineMap::line(0.5, 0.0));
        let (p, bound) = backward_limit(&halving, &pt1(1.0), 1e-6, 80).unwrap();
        assert!(p.coords()[0].abs() <= 1e-6);
        assert!(bound <= 1e-6);

        // constant T(x) = x/2 + 1 on [0, 4]: Banach fixed point 2
        let domain = BoundingBox::new(vec![0.0], vec![4.0]).unwrap();
        let seq = MapSequence::constant(domain, AffineMap::line(0.5, 1.0));
        let (p, bound) = backward_limit(&seq, &pt1(0.5), 1e-8, 120).unwrap();
        assert!((p.coords()[0] - 2.0).abs() <= bound + 1e-8);

        let drifting = MapSequence::constant(unit_domain(), AffineMap::line(1.0, 0.0));
        assert!(matches!(
            backward_limit(&drifting, &pt1(0.5), 1e-6, 50),
            Err(Error::NoCertificate { .. })
        ));
    }

    #[test]
    fn forward_limit_examples() {
        let domain = BoundingBox::new(vec![0.0], vec![4.0]).unwrap();
        let t = AffineMap::line(0.5, 1.0);
        let seq = MapSequence::constant(domain.clone(), t.clone());
        let (_, gap) = forward_limit_check(&seq, &t, &pt1(0.0), 30).unwrap();
        assert!(gap <= 0.5f64.powi(29) * 2.0);

        // T_i -> T with uniformly vanishing perturbation 2^{-i}
        let seq = shrinking_seq();
        let t = AffineMap::line(0.5, 0.0);
        let (_, gap20) = forward_limit_check(&seq, &t, &pt1(0.0), 20).unwrap();
        let (_, gap40) = forward_limit_check(&seq, &t, &pt1(0.0), 40).unwrap();
        assert!(gap40 < gap20 && gap40 < 1e-9);

        // starting at the fixed point of a stationary sequence
        let seq = MapSequence::constant(domain, AffineMap::line(0.5, 1.0));
        let t = AffineMap::line(0.5, 1.0);
        let (_, gap) = forward_limit_check(&seq, &t, &pt1(2.0), 13).unwrap();
        assert_eq!(gap, 0.0);

        let expanding = AffineMap::line(2.0, 0.0);
        assert!(matches!(
            forward_limit_check(&seq, &expanding, &pt1(0.0), 3),
            Err(Error::NotContractive(_))
        ));
    }

    /// Random contractive sequences keeping the unit cube invariant.
    fn random_contractive(seed: u64, dim: usize) -> MapSequence {
        MapSequence::new(BoundingBox::centered_cube(dim, 1.0).unwrap(), move |i| {
            let mut rng = seeded_rng(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let scale = rng.random_range(0.2..0.9);
            let mut m = vec![vec![0.0; dim]; dim];
            for row in m.iter_mut() {
                for e in row.iter_mut() {
                    *e = rng.random_range(-1.0..1.0);
                }
            }
            let raw = AffineMap::new(m, vec![0.0; dim]).unwrap();
            let norm = lipschitz_bound(&raw).max(1e-9);
            let factor = scale / norm;
            let scaled: Vec<Vec<f64>> = (0..dim)
                .map(|r| (0..dim).map(|c| raw.matrix()[(r, c)] * factor).collect())
                .collect();
            let trans: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(-(1.0 - scale)..(1.0 - scale)))
                .collect();
            AffineMap::new(scaled, trans).unwrap()
        })
    }

    #[test]
    fn asymptotic_equivalence_bound() {
        for seed in 0..20u64 {
            let dim = (seed % 3 + 1) as usize;
            let seq = random_contractive(seed, dim);
            let mut rng = seeded_rng(seed + 1000);
            let x = seq.domain().sample(&mut rng);
            let y = seq.domain().sample(&mut rng);
            let dxy = distance(&x, &y).unwrap();
            let s = seq.lipschitz_prefix(20).unwrap();
            for k in 1..=20 {
                let prod: f64 = s[..k].iter().product();
                let back_gap = distance(
                    &backward(&seq, &x, k).unwrap(),
                    &backward(&seq, &y, k).unwrap(),
                )
                .unwrap();
                assert!(back_gap <= dxy * prod + 1e-9);
                let fwd_gap = distance(
                    &forward(&seq, &x, k).unwrap(),
                    &forward(&seq, &y, k).unwrap(),
                )
                .unwrap();
                assert!(fwd_gap <= dxy * prod + 1e-9);
            }
        }
    }

    #[test]
    fn backward_cauchy_bound() {
        for seed in 100..110u64 {
            let seq = random_contractive(seed, 2);
            let mut rng = seeded_rng(seed);
            let x = seq.domain().sample(&mut rng);
            let d = seq.domain().diameter();
            let s = seq.lipschitz_prefix(15).unwrap();
            for k in 1..=14 {
                let prod: f64 = s[..k].iter().product();
                let gap = distance(
                    &backward(&seq, &x, k + 1).unwrap(),
                    &backward(&seq, &x, k).unwrap(),
                )
                .unwrap();
                assert!(gap <= d * prod + 1e-9);
            }
        }
    }
}
