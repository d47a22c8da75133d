//! Affine maps `x -> Mx + b` between real spaces of possibly different
//! dimension, with certified Lipschitz bounds (spectral norm of `M`),
//! composition, and finite function systems with set-valued action.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{seeded_rng, BoundingBox, Point, PointSet};
use crate::{Error, Result};

/// Iteration cap for the power method on `M^T M`.
const POWER_ITERATION_CAP: usize = 10_000;
/// Relative convergence tolerance for the power method.
const POWER_ITERATION_TOL: f64 = 1e-12;

/// Spectral-norm bound together with its quality.
///
/// `conservative` is set when the power iteration hit its cap and the value
/// fell back to the Frobenius norm, which is always an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    pub value: f64,
    pub conservative: bool,
}

/// An affine map `p -> matrix * p + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    translation: DVector<f64>,
}

impl AffineMap {
    /// Build from row-major matrix entries and a translation vector.
    pub fn new(matrix: Vec<Vec<f64>>, translation: Vec<f64>) -> Result<Self> {
        let out_dim = matrix.len();
        if out_dim == 0 {
            return Err(Error::InvalidInput("affine map needs at least one row".into()));
        }
        let in_dim = matrix[0].len();
        if in_dim == 0 {
            return Err(Error::InvalidInput("affine map needs at least one column".into()));
        }
        for row in &matrix {
            if row.len() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: in_dim,
                    got: row.len(),
                    context: "matrix row",
                });
            }
            if !row.iter().all(|e| e.is_finite()) {
                return Err(Error::InvalidInput("matrix entries must be finite".into()));
            }
        }
        if translation.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: translation.len(),
                context: "translation",
            });
        }
        if !translation.iter().all(|e| e.is_finite()) {
            return Err(Error::InvalidInput("translation entries must be finite".into()));
        }
        let m = DMatrix::from_fn(out_dim, in_dim, |i, j| matrix[i][j]);
        Ok(Self {
            matrix: m,
            translation: DVector::from_vec(translation),
        })
    }

    pub(crate) fn from_parts(matrix: DMatrix<f64>, translation: DVector<f64>) -> Self {
        debug_assert_eq!(matrix.nrows(), translation.len());
        Self { matrix, translation }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    /// 1D map `x -> a x + b`.
    pub fn line(a: f64, b: f64) -> Self {
        Self {
            matrix: DMatrix::from_element(1, 1, a),
            translation: DVector::from_element(1, b),
        }
    }

    /// `scale * R(theta)` plus translation, `R` the clockwise rotation
    /// `[[cos, sin], [-sin, cos]]`.
    pub fn scaled_rotation(scale: f64, theta: f64, translation: [f64; 2]) -> Self {
        let (s, c) = theta.sin_cos();
        let m = DMatrix::from_row_slice(2, 2, &[scale * c, scale * s, -scale * s, scale * c]);
        Self {
            matrix: m,
            translation: DVector::from_row_slice(&translation),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// Certified Lipschitz bound; see [`lipschitz_bound`].
    pub fn lipschitz_certificate(&self) -> LipschitzBound {
        spectral_norm(&self.matrix)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MapDto::from(self)).expect("map serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: MapDto = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        dto.try_into()
    }
}

/// JSON shape `{"matrix": [[...]], "translation": [...]}`.
#[derive(Serialize, Deserialize)]
pub struct MapDto {
    pub matrix: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl From<&AffineMap> for MapDto {
    fn from(m: &AffineMap) -> Self {
        MapDto {
            matrix: (0..m.out_dim())
                .map(|i| (0..m.in_dim()).map(|j| m.matrix[(i, j)]).collect())
                .collect(),
            translation: m.translation.as_slice().to_vec(),
        }
    }
}

impl TryFrom<MapDto> for AffineMap {
    type Error = Error;

    fn try_from(dto: MapDto) -> Result<Self> {
        AffineMap::new(dto.matrix, dto.translation)
    }
}

/// Apply `f` to a point.
pub fn apply(f: &AffineMap, p: &Point) -> Result<Point> {
    if p.dim() != f.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.in_dim(),
            got: p.dim(),
            context: "apply",
        });
    }
    Ok(Point::from_vector(&f.matrix * p.vector() + &f.translation))
}

/// Largest singular value of the map's matrix.
///
/// For the Euclidean metric this equals `Lip(f)` over any full-dimensional
/// domain. Closed form is used when the Gram matrix is at most 2x2;
/// otherwise the power method with cap [`POWER_ITERATION_CAP`], falling back
/// to the Frobenius norm (flagged conservative) on cap hit.
pub fn lipschitz_bound(f: &AffineMap) -> f64 {
    f.lipschitz_certificate().value
}

fn spectral_norm(m: &DMatrix<f64>) -> LipschitzBound {
    // Work with the smaller Gram matrix: same nonzero eigenvalues.
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let n = gram.nrows();
    if n == 1 {
        return LipschitzBound {
            value: gram[(0, 0)].max(0.0).sqrt(),
            conservative: false,
        };
    }
    if n == 2 {
        let (a, b, c) = (gram[(0, 0)], gram[(0, 1)], gram[(1, 1)]);
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        return LipschitzBound {
            value: (mid + rad).max(0.0).sqrt(),
            conservative: false,
        };
    }
    // Power iteration on the PSD Gram matrix.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    let norm = v.norm();
    v /= norm;
    let mut lambda = 0.0_f64;
    for _ in 0..POWER_ITERATION_CAP {
        let w = &gram * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return LipschitzBound { value: 0.0, conservative: false };
        }
        let next = wn;
        let done = (next - lambda).abs() <= POWER_ITERATION_TOL * next.max(1e-300);
        lambda = next;
        v = w / wn;
        if done {
            return LipschitzBound {
                value: lambda.sqrt(),
                conservative: false,
            };
        }
    }
    LipschitzBound {
        value: m.iter().map(|e| e * e).sum::<f64>().sqrt(),
        conservative: true,
    }
}

/// Composition `f . g` (apply `g` first).
pub fn compose(f: &AffineMap, g: &AffineMap) -> Result<AffineMap> {
    if f.in_dim() != g.out_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.in_dim(),
            got: g.out_dim(),
            context: "compose",
        });
    }
    Ok(AffineMap {
        matrix: &f.matrix * &g.matrix,
        translation: &f.matrix * &g.translation + &f.translation,
    })
}

/// A finite nonempty family of affine maps with common `in_dim`/`out_dim`.
#[derive(Debug, Clone)]
pub struct FunctionSystem {
    maps: Vec<AffineMap>,
}

impl FunctionSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::InvalidInput("function system must be nonempty".into()))?;
        let (in_dim, out_dim) = (first.in_dim(), first.out_dim());
        for m in &maps {
            if m.in_dim() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: in_dim,
                    got: m.in_dim(),
                    context: "function system in_dim",
                });
            }
            if m.out_dim() != out_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim,
                    got: m.out_dim(),
                    context: "function system out_dim",
                });
            }
        }
        Ok(Self { maps })
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn in_dim(&self) -> usize {
        self.maps[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.maps[0].out_dim()
    }

    /// `L_F = max_i Lip(f_i)`, the contraction factor of the set-valued map.
    pub fn contraction_factor(&self) -> f64 {
        self.maps
            .iter()
            .map(lipschitz_bound)
            .fold(0.0_f64, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SystemDto {
            maps: self.maps.iter().map(MapDto::from).collect(),
        })
        .expect("system serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: SystemDto = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        FunctionSystem::new(
            dto.maps
                .into_iter()
                .map(AffineMap::try_from)
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// JSON shape `{"maps": [...]}`.
#[derive(Serialize, Deserialize)]
pub struct SystemDto {
    pub maps: Vec<MapDto>,
}

/// Set-valued action `F(S) = union of f(S) over members` (Eq. FX style).
/// Output order is maps-major then input order; duplicates are kept.
pub fn apply_system(system: &FunctionSystem, s: &PointSet) -> Result<PointSet> {
    if s.dim() != system.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.in_dim(),
            got: s.dim(),
            context: "apply_system",
        });
    }
    let mut points = Vec::with_capacity(system.maps.len() * s.len());
    for f in &system.maps {
        for p in s.iter() {
            points.push(apply(f, p)?);
        }
    }
    PointSet::new(points)
}

/// True iff every member map sends the box into itself.
///
/// For an affine map each output coordinate attains its extrema at a vertex
/// of the box, so checking the per-coordinate extremal vertices is exact;
/// `samples` random interior points are verified as a safety net.
pub fn invariant_box_check(
    system: &FunctionSystem,
    domain: &BoundingBox,
    samples: usize,
    seed: u64,
) -> bool {
    let dim = domain.dim();
    if system.in_dim() != dim || system.out_dim() != dim {
        return false;
    }
    let (lo, hi) = (domain.lower(), domain.upper());
    for f in &system.maps {
        for i in 0..dim {
            let mut min_i = 0.0;
            let mut max_i = 0.0;
            for j in 0..dim {
                let a = f.matrix[(i, j)] * lo[j];
                let b = f.matrix[(i, j)] * hi[j];
                min_i += a.min(b);
                max_i += a.max(b);
            }
            min_i += f.translation[i];
            max_i += f.translation[i];
            if min_i < lo[i] || max_i > hi[i] {
                return false;
            }
        }
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..samples {
        let p = domain.sample(&mut rng);
        for f in &system.maps {
            let image = apply(f, &p).expect("dimensions checked above");
            if !domain.contains(&image, 1e-12) {
                return false;
            }
        }
    }
    true
}
