//! Binary code space, lazy trees of maps, finite-depth tree attractors and
//! their self-referential decomposition.
//!
//! A tree of maps attaches an affine map `f_c` to every nonempty binary code
//! `c` over `{1, 2}`. An infinite code is a path; its backward composition
//! `f_(c1) . f_(c1 c2) . ... ` applied to a base point converges (under
//! summable Lipschitz products) to one attractor point, and the union over
//! all depth-k codes approximates the attractor in the Hausdorff metric.

use std::fmt;
use std::sync::Arc;

use crate::geometry::{distance, hausdorff, seeded_rng, Point, PointSet};
use crate::maps::{apply, lipschitz_bound, AffineMap, FunctionSystem};
use crate::{Error, Result};

/// Enumeration guard for depth-k attractors (2^k points).
pub const MAX_TREE_DEPTH: usize = 24;

/// A finite word over the alphabet `{1, 2}`; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Code {
    symbols: Vec<u8>,
}

impl Code {
    pub fn empty() -> Self {
        Self { symbols: Vec::new() }
    }

    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|s| **s != 1 && **s != 2) {
            return Err(Error::InvalidSymbol(bad));
        }
        Ok(Self { symbols })
    }

    /// Parse from a digit string like `"1211"`.
    pub fn parse(text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| match c {
                '1' => Ok(1u8),
                '2' => Ok(2u8),
                other => Err(Error::Parse(format!("invalid code digit {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// All codes of length `k` in lexicographic order (1 < 2).
    pub fn all_of_length(k: usize) -> Vec<Code> {
        let mut out = Vec::with_capacity(1usize << k);
        let mut current = vec![1u8; k];
        loop {
            out.push(Code { symbols: current.clone() });
            // increment as a base-2 counter over {1, 2}
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if current[i] == 1 {
                    current[i] = 2;
                    break;
                }
                current[i] = 1;
            }
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Append symbol `j` (the prolongation operator).
pub fn prolong(c: &Code, j: u8) -> Result<Code> {
    if j != 1 && j != 2 {
        return Err(Error::InvalidSymbol(j));
    }
    let mut symbols = c.symbols.clone();
    symbols.push(j);
    Ok(Code { symbols })
}

/// First `len` symbols (the truncation operator), `1 <= len <= |c|`.
pub fn truncate(c: &Code, len: usize) -> Result<Code> {
    if len < 1 || len > c.len() {
        return Err(Error::TruncationOutOfRange { len, max: c.len() });
    }
    Ok(Code {
        symbols: c.symbols[..len].to_vec(),
    })
}

/// The dyadic value `sum_j (i_j - 1) 2^{-j}` attached to a code.
pub fn code_value(c: &Code) -> f64 {
    let mut value = 0.0;
    let mut weight = 0.5;
    for s in &c.symbols {
        if *s == 2 {
            value += weight;
        }
        weight *= 0.5;
    }
    value
}

/// Frechet distance `sum_n |i_n - j_n| / 3^n` between equal-length codes
/// (finite prefixes of infinite codes).
pub fn frechet(a: &Code, b: &Code) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CodeLengthMismatch { a: a.len(), b: b.len() });
    }
    let mut sum = 0.0;
    let mut weight = 1.0 / 3.0;
    for (x, y) in a.symbols.iter().zip(&b.symbols) {
        sum += (*x as f64 - *y as f64).abs() * weight;
        weight /= 3.0;
    }
    Ok(sum)
}

/// A lazily defined binary tree of affine maps.
///
/// Maps at depth >= 2 are endomorphisms of `R^dimension`; depth-1 maps send
/// `R^dimension` to `R^root_codomain` (equal to `dimension` except for the
/// subdivision bridge, whose depth-1 maps land in the control-point space).
/// The node callback must be pure and is safe to call concurrently.
#[derive(Clone)]
pub struct MapTree {
    node_map: Arc<dyn Fn(&[u8]) -> Result<AffineMap> + Send + Sync>,
    dimension: usize,
    root_codomain: usize,
}

impl MapTree {
    pub fn new<F>(dimension: usize, root_codomain: usize, node_map: F) -> Self
    where
        F: Fn(&[u8]) -> Result<AffineMap> + Send + Sync + 'static,
    {
        Self {
            node_map: Arc::new(node_map),
            dimension,
            root_codomain,
        }
    }

    /// Constant tree carrying the same binary function system at every node.
    pub fn constant(system: &FunctionSystem) -> Result<Self> {
        if system.maps().len() != 2 {
            return Err(Error::InvalidInput(format!(
                "constant tree needs exactly 2 maps, got {}",
                system.maps().len()
            )));
        }
        if system.in_dim() != system.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: system.in_dim(),
                got: system.out_dim(),
                context: "constant tree maps must be endomorphisms",
            });
        }
        let dim = system.in_dim();
        let maps = [system.maps()[0].clone(), system.maps()[1].clone()];
        Ok(Self::new(dim, dim, move |code| {
            let j = *code.last().expect("node codes are nonempty");
            Ok(maps[(j - 1) as usize].clone())
        }))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn root_codomain(&self) -> usize {
        self.root_codomain
    }

    /// The map at a nonempty code, with its dimensions validated.
    pub fn map_at(&self, c: &Code) -> Result<AffineMap> {
        self.map_at_symbols(c.symbols())
    }

    fn map_at_symbols(&self, symbols: &[u8]) -> Result<AffineMap> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("tree nodes are indexed by nonempty codes".into()));
        }
        let m = (self.node_map)(symbols)?;
        let want_out = if symbols.len() == 1 {
            self.root_codomain
        } else {
            self.dimension
        };
        if m.in_dim() != self.dimension || m.out_dim() != want_out {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: m.in_dim(),
                context: "tree node map",
            });
        }
        Ok(m)
    }

    /// Subtree below the depth-1 node `j`: `node'(c) = node(j c)`.
    ///
    /// Its depth-1 maps are the parent's depth-2 maps, hence endomorphisms.
    pub fn subtree(&self, j: u8) -> Result<MapTree> {
        if j != 1 && j != 2 {
            return Err(Error::InvalidSymbol(j));
        }
        let inner = self.node_map.clone();
        let dim = self.dimension;
        Ok(MapTree {
            node_map: Arc::new(move |code: &[u8]| {
                let mut shifted = Vec::with_capacity(code.len() + 1);
                shifted.push(j);
                shifted.extend_from_slice(code);
                inner(&shifted)
            }),
            dimension: dim,
            root_codomain: dim,
        })
    }
}

/// Backward composition along the path of `c`: the deepest map first,
/// `f_(t1 c) ( f_(t2 c) ( ... f_c (x) ) )`.
pub fn path_point(tree: &MapTree, c: &Code, x: &Point) -> Result<Point> {
    if c.is_empty() {
        return Err(Error::InvalidInput("path needs a nonempty code".into()));
    }
    let mut p = x.clone();
    for len in (1..=c.len()).rev() {
        let f = tree.map_at_symbols(&c.symbols()[..len])?;
        p = apply(&f, &p)?;
    }
    Ok(p)
}

fn attractor_rec(
    tree: &MapTree,
    prefix: &mut Vec<u8>,
    remaining: usize,
    x: &Point,
    out: &mut Vec<Point>,
) -> Result<()> {
    if remaining == 0 {
        out.push(x.clone());
        return Ok(());
    }
    for j in [1u8, 2u8] {
        prefix.push(j);
        let f = tree.map_at_symbols(prefix)?;
        let mut below = Vec::with_capacity(1usize << (remaining - 1));
        attractor_rec(tree, prefix, remaining - 1, x, &mut below)?;
        for p in &below {
            out.push(apply(&f, p)?);
        }
        prefix.pop();
    }
    Ok(())
}

/// Depth-k tree attractor `{ path_point(tree, c, x) : c in {1,2}^k }`,
/// ordered lexicographically by code (1 < 2).
///
/// Computed by the self-referential recursion, so each of the `2^{k+1} - 2`
/// node maps is materialized exactly once and every returned value is
/// bit-identical to the corresponding [`path_point`].
pub fn tree_attractor(tree: &MapTree, x: &Point, depth: usize) -> Result<PointSet> {
    if depth < 1 || depth > MAX_TREE_DEPTH {
        return Err(Error::BudgetExceeded {
            depth,
            max: MAX_TREE_DEPTH,
        });
    }
    if x.dim() != tree.dimension {
        return Err(Error::DimensionMismatch {
            expected: tree.dimension,
            got: x.dim(),
            context: "tree attractor base point",
        });
    }
    let mut out = Vec::with_capacity(1usize << depth);
    attractor_rec(tree, &mut Vec::with_capacity(depth), depth, x, &mut out)?;
    PointSet::new(out)
}

/// The attractor points paired with their codes, in the same order.
pub fn tree_attractor_labeled(
    tree: &MapTree,
    x: &Point,
    depth: usize,
) -> Result<Vec<(Code, Point)>> {
    let points = tree_attractor(tree, x, depth)?;
    let codes = Code::all_of_length(depth);
    Ok(codes.into_iter().zip(points.points().iter().cloned()).collect())
}

/// Per-depth suprema `delta_k` of the Lipschitz products along all paths,
/// `k = 1..=depth`, computed exactly by enumeration.
pub fn path_product_sup(tree: &MapTree, depth: usize) -> Result<Vec<f64>> {
    if depth < 1 || depth > MAX_TREE_DEPTH {
        return Err(Error::BudgetExceeded {
            depth,
            max: MAX_TREE_DEPTH,
        });
    }
    fn rec(
        tree: &MapTree,
        prefix: &mut Vec<u8>,
        product: f64,
        depth: usize,
        sup: &mut [f64],
    ) -> Result<()> {
        if prefix.len() == depth {
            return Ok(());
        }
        for j in [1u8, 2u8] {
            prefix.push(j);
            let p = product * lipschitz_bound(&tree.map_at_symbols(prefix)?);
            let k = prefix.len();
            if p > sup[k - 1] {
                sup[k - 1] = p;
            }
            rec(tree, prefix, p, depth, sup)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut sup = vec![0.0; depth];
    rec(tree, &mut Vec::with_capacity(depth), 1.0, depth, &mut sup)?;
    Ok(sup)
}

/// Largest Lipschitz bound over all node maps down to `depth`; with the
/// per-depth products this yields geometric tail estimates for the
/// attractor truncation error.
pub fn max_node_lipschitz(tree: &MapTree, depth: usize) -> Result<f64> {
    fn rec(tree: &MapTree, prefix: &mut Vec<u8>, depth: usize, max: &mut f64) -> Result<()> {
        if prefix.len() == depth {
            return Ok(());
        }
        for j in [1u8, 2u8] {
            prefix.push(j);
            let lip = lipschitz_bound(&tree.map_at_symbols(prefix)?);
            if lip > *max {
                *max = lip;
            }
            rec(tree, prefix, depth, max)?;
            prefix.pop();
        }
        Ok(())
    }
    if depth < 1 || depth > MAX_TREE_DEPTH {
        return Err(Error::BudgetExceeded {
            depth,
            max: MAX_TREE_DEPTH,
        });
    }
    let mut max = 0.0;
    rec(tree, &mut Vec::with_capacity(depth), depth, &mut max)?;
    Ok(max)
}

/// Hausdorff gap of the finite-depth self-referential identity
/// `U = f_1(U_1) union f_2(U_2)`; zero up to floating point by construction.
pub fn self_referential_check(tree: &MapTree, x: &Point, depth: usize) -> Result<f64> {
    if depth < 2 {
        return Err(Error::InvalidInput("self-referential check needs depth >= 2".into()));
    }
    let whole = tree_attractor(tree, x, depth)?;
    let mut pieces = Vec::with_capacity(whole.len());
    for j in [1u8, 2u8] {
        let sub = tree.subtree(j)?;
        let part = tree_attractor(&sub, x, depth - 1)?;
        let f = tree.map_at_symbols(&[j])?;
        for p in part.iter() {
            pieces.push(apply(&f, p)?);
        }
    }
    hausdorff(&whole, &PointSet::new(pieces)?)
}

/// Continuity-modulus test for the code-to-attractor map: for random pairs
/// of depth-k codes sharing a prefix of length `l`,
/// `d(gamma_k(a), gamma_k(b)) <= D * prod_{m<=l} s_(tm a) + 1e-9`,
/// with `D` the diameter of the attractor's bounding box at `depth`.
pub fn continuity_modulus_check(
    tree: &MapTree,
    x: &Point,
    depth: usize,
    pairs: usize,
    seed: u64,
) -> Result<bool> {
    if depth < 2 {
        return Err(Error::InvalidInput("continuity check needs depth >= 2".into()));
    }
    let d = tree_attractor(tree, x, depth)?.bounding_box().diameter();
    let mut rng = seeded_rng(seed);
    use rand::Rng;
    for _ in 0..pairs {
        let shared = rng.random_range(1..depth);
        let mut a = Vec::with_capacity(depth);
        for _ in 0..shared {
            a.push(rng.random_range(1..=2) as u8);
        }
        let mut b = a.clone();
        a.push(1);
        b.push(2);
        while a.len() < depth {
            a.push(rng.random_range(1..=2) as u8);
            b.push(rng.random_range(1..=2) as u8);
        }
        let (ca, cb) = (Code::new(a)?, Code::new(b)?);
        let gap = distance(&path_point(tree, &ca, x)?, &path_point(tree, &cb, x)?)?;
        let mut product = 1.0;
        for m in 1..=shared {
            product *= lipschitz_bound(&tree.map_at_symbols(&ca.symbols()[..m])?);
        }
        if gap > d * product + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The code-dependent rotation tree of function systems: branch 1 carries a
/// fixed affine contraction, branch 2 a scaled rotation whose angle
/// `theta = 3 t(parent) + 1` varies with the dyadic value of the parent
/// code (`t(empty) = 0`).
pub fn tfs_example_tree() -> MapTree {
    MapTree::new(2, 2, |code| {
        let j = *code.last().expect("node codes are nonempty");
        if j == 1 {
            AffineMap::new(vec![vec![0.4, 0.4], vec![-0.5, 0.3]], vec![4.0, 4.0])
        } else {
            let parent = Code {
                symbols: code[..code.len() - 1].to_vec(),
            };
            let theta = 3.0 * code_value(&parent) + 1.0;
            Ok(AffineMap::scaled_rotation(0.8, theta, [-2.0, 0.0]))
        }
    })
}

/// Constant tree of the two Cantor maps `x/3` and `x/3 + 2/3`.
pub fn cantor_tree() -> MapTree {
    let system = FunctionSystem::new(vec![
        AffineMap::line(1.0 / 3.0, 0.0),
        AffineMap::line(1.0 / 3.0, 2.0 / 3.0),
    ])
    .expect("cantor system is well formed");
    MapTree::constant(&system).expect("cantor tree is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{apply_system, compose};

    fn code(text: &str) -> Code {
        Code::parse(text).unwrap()
    }

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn cantor_system() -> FunctionSystem {
        FunctionSystem::new(vec![
            AffineMap::line(1.0 / 3.0, 0.0),
            AffineMap::line(1.0 / 3.0, 2.0 / 3.0),
        ])
        .unwrap()
    }

    #[test]
    fn prolong_and_truncate() {
        assert_eq!(prolong(&code("12"), 1).unwrap(), code("121"));
        assert_eq!(prolong(&Code::empty(), 2).unwrap(), code("2"));
        assert!(matches!(prolong(&code("1"), 3), Err(Error::InvalidSymbol(3))));

        let c = code("1221");
        assert_eq!(truncate(&c, 2).unwrap(), code("12"));
        assert_eq!(truncate(&c, 4).unwrap(), c);
        assert!(truncate(&c, 0).is_err());
        assert!(truncate(&c, 5).is_err());

        // prolong then truncate back
        let p = prolong(&c, 2).unwrap();
        assert_eq!(truncate(&p, c.len()).unwrap(), c);
        // nested truncation collapses
        assert_eq!(
            truncate(&truncate(&c, 3).unwrap(), 2).unwrap(),
            truncate(&c, 2).unwrap()
        );
    }

    #[test]
    fn code_value_examples() {
        assert_eq!(code_value(&code("111")), 0.0);
        assert_eq!(code_value(&code("2")), 0.5);
        assert_eq!(code_value(&code("212")), 0.625);
        assert_eq!(code_value(&Code::empty()), 0.0);
    }

    #[test]
    fn frechet_examples() {
        assert_eq!(frechet(&code("121"), &code("121")).unwrap(), 0.0);
        assert_eq!(frechet(&code("211"), &code("111")).unwrap(), 1.0 / 3.0);
        assert_eq!(frechet(&code("12"), &code("21")).unwrap(), 1.0 / 3.0 + 1.0 / 9.0);
        assert!(frechet(&code("1"), &code("11")).is_err());
    }

    #[test]
    fn lexicographic_enumeration() {
        let codes = Code::all_of_length(2);
        assert_eq!(codes, vec![code("11"), code("12"), code("21"), code("22")]);
        let mut sorted = codes.clone();
        sorted.sort();
        assert_eq!(sorted, codes);
    }

    #[test]
    fn path_point_examples() {
        let t = cantor_tree();
        let f1 = t.map_at(&code("1")).unwrap();
        assert_eq!(
            path_point(&t, &code("1"), &pt(&[0.7])).unwrap(),
            apply(&f1, &pt(&[0.7])).unwrap()
        );
        assert_eq!(
            path_point(&t, &code("111"), &pt(&[1.0])).unwrap(),
            pt(&[1.0 / 27.0])
        );

        // rotation tree, code (2,2): theta of node (2,2) comes from parent
        // (2), theta of node (2) from the empty parent.
        let tfs = tfs_example_tree();
        let f2 = AffineMap::scaled_rotation(0.8, 1.0, [-2.0, 0.0]);
        let f22 = AffineMap::scaled_rotation(0.8, 3.0 * 0.5 + 1.0, [-2.0, 0.0]);
        let expected = apply(&compose(&f2, &f22).unwrap(), &pt(&[0.0, 0.0])).unwrap();
        let got = path_point(&tfs, &code("22"), &pt(&[0.0, 0.0])).unwrap();
        assert!(distance(&expected, &got).unwrap() < 1e-12);
    }

    #[test]
    fn tfs_node_maps() {
        let t = tfs_example_tree();
        let fixed = AffineMap::new(vec![vec![0.4, 0.4], vec![-0.5, 0.3]], vec![4.0, 4.0]).unwrap();
        assert_eq!(t.map_at(&code("1")).unwrap(), fixed);
        assert_eq!(
            t.map_at(&code("2")).unwrap(),
            AffineMap::scaled_rotation(0.8, 1.0, [-2.0, 0.0])
        );
        // t((1)) = 0, so node (1,2) also rotates by 1
        assert_eq!(
            t.map_at(&code("12")).unwrap(),
            AffineMap::scaled_rotation(0.8, 1.0, [-2.0, 0.0])
        );
    }

    #[test]
    fn tree_attractor_examples() {
        let t = cantor_tree();
        let depth1 = tree_attractor(&t, &pt(&[0.0]), 1).unwrap();
        assert!(depth1.set_eq(
            &PointSet::from_coords(vec![vec![0.0], vec![2.0 / 3.0]]).unwrap(),
            0.0
        ));

        let depth2 = tree_attractor(&t, &pt(&[0.0]), 2).unwrap();
        let expected = PointSet::from_coords(vec![
            vec![0.0],
            vec![2.0 / 9.0],
            vec![2.0 / 3.0],
            vec![8.0 / 9.0],
        ])
        .unwrap();
        assert!(depth2.set_eq(&expected, 1e-15));

        assert!(matches!(
            tree_attractor(&t, &pt(&[0.0]), 25),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn constant_tree_reduces_to_iterated_system() {
        let t = cantor_tree();
        let sys = cantor_system();
        let mut s = PointSet::from_coords(vec![vec![0.3]]).unwrap();
        for depth in 1..=8 {
            s = apply_system(&sys, &s).unwrap();
            let attr = tree_attractor(&t, &pt(&[0.3]), depth).unwrap();
            assert!(attr.set_eq(&s, 1e-12));
        }
    }

    #[test]
    fn subtree_identities() {
        let t = cantor_tree();
        let s1 = t.subtree(1).unwrap();
        assert_eq!(
            s1.map_at(&code("2")).unwrap(),
            t.map_at(&code("12")).unwrap()
        );
        // constant tree: subtree is the same tree
        for c in ["1", "21", "122"] {
            assert_eq!(s1.map_at(&code(c)).unwrap(), t.map_at(&code(c)).unwrap());
        }

        let tfs = tfs_example_tree();
        let sub = tfs.subtree(1).unwrap();
        assert_eq!(
            sub.map_at(&code("2")).unwrap(),
            tfs.map_at(&code("12")).unwrap()
        );
        assert!(matches!(tfs.subtree(0), Err(Error::InvalidSymbol(0))));
    }

    #[test]
    fn self_referential_identity() {
        let cantor = cantor_tree();
        for depth in 2..=8 {
            assert!(self_referential_check(&cantor, &pt(&[0.0]), depth).unwrap() <= 1e-12);
        }
        let tfs = tfs_example_tree();
        // exact at matched finite depth: same float operations on both sides
        assert_eq!(
            self_referential_check(&tfs, &pt(&[0.0, 0.0]), 5).unwrap(),
            0.0
        );
        assert!(self_referential_check(&tfs, &pt(&[0.0, 0.0]), 10).unwrap() <= 1e-10);
    }

    #[test]
    fn continuity_modulus() {
        let t = cantor_tree();
        assert!(continuity_modulus_check(&t, &pt(&[0.0]), 10, 100, 5).unwrap());

        // explicit uniform-contraction pair: shared prefix length 2
        let a = code("112111");
        let b = code("112222");
        let gap = distance(
            &path_point(&t, &a, &pt(&[0.0])).unwrap(),
            &path_point(&t, &b, &pt(&[0.0])).unwrap(),
        )
        .unwrap();
        assert!(gap <= (1.0f64 / 9.0) * 1.0 + 1e-12);

        let tfs = tfs_example_tree();
        assert!(continuity_modulus_check(&tfs, &pt(&[0.0, 0.0]), 12, 200, 7).unwrap());
    }

    #[test]
    fn base_point_independence() {
        let tfs = tfs_example_tree();
        let x = pt(&[0.0, 0.0]);
        let y = pt(&[3.0, -1.0]);
        let dxy = distance(&x, &y).unwrap();
        for depth in [4usize, 8, 12] {
            let sup = path_product_sup(&tfs, depth).unwrap();
            let ax = tree_attractor(&tfs, &x, depth).unwrap();
            let ay = tree_attractor(&tfs, &y, depth).unwrap();
            let h = hausdorff(&ax, &ay).unwrap();
            assert!(h <= dxy * sup[depth - 1] + 1e-9);
        }
    }

    #[test]
    fn depth_cauchy_bound() {
        let t = cantor_tree();
        let x = pt(&[0.0]);
        for k in 2..=10 {
            let a = tree_attractor(&t, &x, k).unwrap();
            let b = tree_attractor(&t, &x, k + 1).unwrap();
            let delta_k = path_product_sup(&t, k).unwrap()[k - 1];
            let d = a.union(&b).unwrap().bounding_box().diameter();
            assert!(hausdorff(&a, &b).unwrap() <= d * delta_k + 1e-12);
        }
    }

    #[test]
    fn path_product_sup_values() {
        let t = cantor_tree();
        let sup = path_product_sup(&t, 5).unwrap();
        for (k, s) in sup.iter().enumerate() {
            assert!((s - (1.0f64 / 3.0).powi(k as i32 + 1)).abs() < 1e-14);
        }
        let tfs = tfs_example_tree();
        let sup = path_product_sup(&tfs, 6).unwrap();
        for (k, s) in sup.iter().enumerate() {
            assert!((s - 0.8f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
    }
}
