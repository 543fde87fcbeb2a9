//! Tensor network state varieties `TNS(T, f)`.
//!
//! A tensor lies in `TNS(T, f)` iff its flattening along the factors below
//! each vertex `v` has rank at most `f(v)`. Equivalently there is a chain of
//! subspaces `U_leaf ⊆ V_i`, `U_v ⊆ U_{v1} ⊗ U_{v2}` with `dim U_v ≤ f(v)`
//! and `t ∈ U_root`; [`SubspaceChain`] stores such a chain.
//!
//! `dims` arguments are indexed by leaf slot. When a tensor is paired with a
//! tree through a [`LeafOrdering`], slot `s` lives on factor `ordering(s)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{format_rational, Field, Matrix, Rational};
use crate::tensor::DenseTensor;
use crate::trees::{BinaryTree, LeafOrdering, LeafSet, VertexId};

/// Random coordinates are drawn uniformly from `-SAMPLE_RANGE..=SAMPLE_RANGE`.
pub const SAMPLE_RANGE: i64 = 10;

/// Attempts before a sampler gives up on genericity.
pub const MAX_RESAMPLES: usize = 20;

/// Per-vertex rank bounds `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankFunction {
    values: Vec<usize>,
}

impl RankFunction {
    pub fn constant(tree: &BinaryTree, r: usize) -> Self {
        RankFunction {
            values: vec![r; tree.num_vertices()],
        }
    }

    pub fn from_values(tree: &BinaryTree, values: Vec<usize>) -> Result<Self> {
        if values.len() != tree.num_vertices() {
            return invalid(format!(
                "rank function has {} values for {} vertices",
                values.len(),
                tree.num_vertices()
            ));
        }
        Ok(RankFunction { values })
    }

    pub fn get(&self, v: VertexId) -> usize {
        self.values[v]
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// `Some(r)` if every vertex has the same bound `r`.
    pub fn as_constant(&self) -> Option<usize> {
        let first = *self.values.first()?;
        self.values.iter().all(|&x| x == first).then_some(first)
    }

    pub fn from_json(json: &RankFunctionJson, tree: &BinaryTree) -> Result<Self> {
        match (json.constant, &json.values) {
            (Some(r), None) => Ok(Self::constant(tree, r)),
            (None, Some(values)) => {
                let mut out = vec![None; tree.num_vertices()];
                for (&v, &r) in values {
                    match out.get_mut(v) {
                        Some(slot) => *slot = Some(r),
                        None => return invalid(format!("rank given for unknown vertex {v}")),
                    }
                }
                let values = out
                    .into_iter()
                    .enumerate()
                    .map(|(v, r)| r.map_or_else(|| invalid(format!("no rank for vertex {v}")), Ok))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RankFunction { values })
            }
            _ => invalid("rank function needs exactly one of \"constant\" or \"values\""),
        }
    }

    pub fn to_json(&self) -> RankFunctionJson {
        match self.as_constant() {
            Some(r) => RankFunctionJson {
                constant: Some(r),
                values: None,
            },
            None => RankFunctionJson {
                constant: None,
                values: Some(self.values.iter().copied().enumerate().collect()),
            },
        }
    }
}

/// `{"constant":2}` or `{"values":{"0":1,"1":2,…}}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankFunctionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<usize, usize>>,
}

/// Result of [`normalize_rank_function`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedRanks {
    pub ranks: RankFunction,
    /// Some vertex has bound 0, so the variety is `{0}`.
    pub zero_variety: bool,
}

fn check_dims(tree: &BinaryTree, dims: &[usize]) -> Result<()> {
    if dims.len() != tree.num_leaves() {
        return invalid(format!(
            "{} dimensions given for {} leaves",
            dims.len(),
            tree.num_leaves()
        ));
    }
    if dims.contains(&0) {
        return invalid("leaf dimensions must be positive");
    }
    Ok(())
}

/// Clamp `f(leaf_i) ≤ d_i` and `f(v) ≤ f(v1)·f(v2)`; neither changes the variety.
pub fn normalize_rank_function(
    tree: &BinaryTree,
    f: &RankFunction,
    dims: &[usize],
) -> Result<NormalizedRanks> {
    check_dims(tree, dims)?;
    if f.values.len() != tree.num_vertices() {
        return invalid("rank function does not match the tree");
    }
    let mut values = f.values.clone();
    // One postorder pass is a fixed point: a vertex only depends on its
    // children, which are final by then.
    for v in tree.postorder() {
        values[v] = match tree.children(v) {
            None => values[v].min(dims[tree.leaf_slot(v).unwrap()]),
            Some((a, b)) => values[v].min(values[a].saturating_mul(values[b])),
        };
    }
    let zero_variety = values.contains(&0);
    Ok(NormalizedRanks {
        ranks: RankFunction { values },
        zero_variety,
    })
}

/// Effective ranks `f'`: the largest contraction dimensions any member can
/// realize, propagated from `f'(root) = 1` downward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveRanks(pub Vec<usize>);

impl EffectiveRanks {
    pub fn get(&self, v: VertexId) -> usize {
        self.0[v]
    }
}

/// `f'(root) = 1`, `f'(v1) = min(f'(v)·f(v2), f(v1))` and symmetrically.
/// Expects a normalized `f`.
pub fn effective_ranks(tree: &BinaryTree, f: &RankFunction) -> EffectiveRanks {
    let mut fp = vec![0; tree.num_vertices()];
    fp[tree.root()] = 1;
    for v in tree.preorder() {
        if let Some((a, b)) = tree.children(v) {
            fp[a] = (fp[v] * f.get(b)).min(f.get(a));
            fp[b] = (fp[v] * f.get(a)).min(f.get(b));
        }
    }
    EffectiveRanks(fp)
}

/// Dimension of `TNS(T, f)` in `V_1 ⊗ … ⊗ V_n` with `dim V_i = dims[i]`:
/// `1 + Σ_nodes (f'(v1)f'(v2) − f'(v))·f'(v) + Σ_leaves (d_i − f'(l))·f'(l)`.
pub fn variety_dimension(tree: &BinaryTree, f: &RankFunction, dims: &[usize]) -> Result<u64> {
    let norm = normalize_rank_function(tree, f, dims)?;
    if norm.zero_variety {
        return Ok(0);
    }
    let fp = effective_ranks(tree, &norm.ranks);
    let mut dim: u64 = 1;
    for v in tree.vertices() {
        let here = fp.get(v) as u64;
        let ambient = match tree.children(v) {
            Some((a, b)) => (fp.get(a) * fp.get(b)) as u64,
            None => dims[tree.leaf_slot(v).unwrap()] as u64,
        };
        dim += (ambient - here) * here;
    }
    Ok(dim)
}

/// The closed form `n·r²(r−1) + r² + Σ (d_i − r)·r` offered for constant `f ≡ r`.
pub fn constant_shortcut_dimension(r: usize, dims: &[usize]) -> i64 {
    let (n, r) = (dims.len() as i64, r as i64);
    n * r * r * (r - 1) + r * r + dims.iter().map(|&d| (d as i64 - r) * r).sum::<i64>()
}

/// Formula value plus the constant-rank shortcut when it is meaningful.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dimension: u64,
    /// Only quoted when `f ≡ r` and `f' ≡ r` away from the root.
    pub constant_shortcut: Option<i64>,
    pub shortcut_agrees: Option<bool>,
}

pub fn dimension_report(tree: &BinaryTree, f: &RankFunction, dims: &[usize]) -> Result<DimensionReport> {
    let dimension = variety_dimension(tree, f, dims)?;
    let norm = normalize_rank_function(tree, f, dims)?;
    let constant_shortcut = match norm.ranks.as_constant() {
        Some(r) if !norm.zero_variety => {
            let fp = effective_ranks(tree, &norm.ranks);
            let uniform = tree
                .vertices()
                .filter(|&v| v != tree.root())
                .all(|v| fp.get(v) == r);
            uniform.then(|| constant_shortcut_dimension(r, dims))
        }
        _ => None,
    };
    Ok(DimensionReport {
        dimension,
        constant_shortcut,
        shortcut_agrees: constant_shortcut.map(|s| s == dimension as i64),
    })
}

/// Measured flattening rank at every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankProfile(pub Vec<usize>);

impl RankProfile {
    pub fn get(&self, v: VertexId) -> usize {
        self.0[v]
    }

    pub fn to_map(&self) -> BTreeMap<usize, usize> {
        self.0.iter().copied().enumerate().collect()
    }
}

impl Serialize for RankProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RankProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<usize, usize>::deserialize(d)?;
        if map.keys().copied().ne(0..map.len()) {
            return Err(serde::de::Error::custom("profile keys must be 0..n"));
        }
        Ok(RankProfile(map.into_values().collect()))
    }
}

fn check_tensor<T: Field>(t: &DenseTensor<T>, tree: &BinaryTree, ordering: &LeafOrdering) -> Result<()> {
    if t.order() != tree.num_leaves() || ordering.len() != tree.num_leaves() {
        return invalid(format!(
            "tensor of order {} with a {}-entry ordering on a tree with {} leaves",
            t.order(),
            ordering.len(),
            tree.num_leaves()
        ));
    }
    Ok(())
}

/// Flattening rank of `t` along `ordering(cos v)` for every vertex `v`.
pub fn rank_profile<T: Field>(
    t: &DenseTensor<T>,
    tree: &BinaryTree,
    ordering: &LeafOrdering,
    tol: f64,
) -> Result<RankProfile> {
    check_tensor(t, tree, ordering)?;
    tree.vertices()
        .map(|v| t.flattening_rank(&ordering.apply(tree.cos(v)), tol))
        .collect::<Result<Vec<_>>>()
        .map(RankProfile)
}

/// Whether `t ∈ TNS(tree, f)` with leaves placed by `ordering`; the full
/// profile is returned either way.
pub fn is_member<T: Field>(
    t: &DenseTensor<T>,
    tree: &BinaryTree,
    ordering: &LeafOrdering,
    f: &RankFunction,
    tol: f64,
) -> Result<(bool, RankProfile)> {
    if f.values.len() != tree.num_vertices() {
        return invalid("rank function does not match the tree");
    }
    let profile = rank_profile(t, tree, ordering, tol)?;
    let member = tree.vertices().all(|v| profile.get(v) <= f.get(v));
    Ok((member, profile))
}

/// Bases of the subspaces `U_v`, one column per basis vector.
///
/// Leaf bases are in the coordinates of `V_i`; a node's basis is in the
/// coordinates of `U_{v1} ⊗ U_{v2}`, row `i·dim U_{v2} + j` pairing basis
/// vector `i` of the left child with `j` of the right child. Nesting is
/// therefore built into the representation.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceChain<T> {
    pub bases: Vec<Matrix<T>>,
}

/// Factors of `cos v` in ascending order, and shapes from the tensor.
fn ascending_factors(tree: &BinaryTree, ordering: &LeafOrdering, v: VertexId) -> Vec<usize> {
    ordering.apply(tree.cos(v)).to_vec()
}

impl<T: Field> SubspaceChain<T> {
    pub fn dim(&self, v: VertexId) -> usize {
        self.bases[v].cols()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.cols()).collect()
    }

    /// Ambient vectors spanning `U_v`, each a tensor over the factors
    /// `ordering(cos v)` in ascending order.
    pub fn ambient_basis(
        &self,
        tree: &BinaryTree,
        ordering: &LeafOrdering,
        v: VertexId,
    ) -> Result<Vec<DenseTensor<T>>> {
        match tree.children(v) {
            None => (0..self.dim(v))
                .map(|c| DenseTensor::vector(self.bases[v].column(c)))
                .collect(),
            Some((a, b)) => {
                let left = self.ambient_basis(tree, ordering, a)?;
                let right = self.ambient_basis(tree, ordering, b)?;
                let here = ascending_factors(tree, ordering, v);
                let pos = |w| -> Vec<usize> {
                    ascending_factors(tree, ordering, w)
                        .iter()
                        .map(|f| here.binary_search(f).unwrap())
                        .collect()
                };
                let (pa, pb) = (pos(a), pos(b));
                let products = pairwise_products(&left, &pa, &right, &pb)?;
                let basis = &self.bases[v];
                if basis.rows() != products.len() {
                    return invalid(format!(
                        "basis of vertex {v} has {} rows, expected {}",
                        basis.rows(),
                        products.len()
                    ));
                }
                (0..basis.cols())
                    .map(|c| {
                        let mut acc = DenseTensor::zeros(products[0].shape().to_vec())?;
                        for (r, p) in products.iter().enumerate() {
                            acc.add_scaled(basis.get(r, c), p);
                        }
                        Ok(acc)
                    })
                    .collect()
            }
        }
    }

    /// The tensor spanning `U_root` (first root basis vector), laid out with
    /// slot `s` on factor `ordering(s)`.
    pub fn realize(&self, tree: &BinaryTree, ordering: &LeafOrdering) -> Result<DenseTensor<T>> {
        let mut basis = self.ambient_basis(tree, ordering, tree.root())?;
        if basis.is_empty() {
            return invalid("the root subspace is zero-dimensional");
        }
        Ok(basis.swap_remove(0))
    }
}

fn pairwise_products<T: Field>(
    left: &[DenseTensor<T>],
    pa: &[usize],
    right: &[DenseTensor<T>],
    pb: &[usize],
) -> Result<Vec<DenseTensor<T>>> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            out.push(DenseTensor::outer(&[(l, pa), (r, pb)])?);
        }
    }
    Ok(out)
}

impl SubspaceChain<Rational> {
    /// Random integer bases with the given per-vertex dimensions.
    pub fn random(
        tree: &BinaryTree,
        dims: &[usize],
        vertex_dims: &[usize],
        rng: &mut impl Rng,
    ) -> Result<Self> {
        check_dims(tree, dims)?;
        let bases = tree
            .vertices()
            .map(|v| {
                let rows = match tree.children(v) {
                    None => dims[tree.leaf_slot(v).unwrap()],
                    Some((a, b)) => vertex_dims[a] * vertex_dims[b],
                };
                random_integer_matrix(rows, vertex_dims[v], rng)
            })
            .collect();
        Ok(SubspaceChain { bases })
    }

    pub fn to_json(&self) -> BTreeMap<usize, MatrixJson> {
        self.bases
            .iter()
            .enumerate()
            .map(|(v, m)| {
                (
                    v,
                    MatrixJson {
                        rows: m.rows(),
                        cols: m.cols(),
                        entries: m.data().iter().map(format_rational).collect(),
                    },
                )
            })
            .collect()
    }
}

/// Row-major matrix with exact entries as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<String>,
}

pub fn random_integer_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<Rational> {
    Matrix::from_fn(rows, cols, |_, _| {
        Rational::from_i64(rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE))
    })
}

pub fn random_integer_vector(len: usize, rng: &mut impl Rng) -> Vec<Rational> {
    (0..len)
        .map(|_| Rational::from_i64(rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE)))
        .collect()
}

/// A generic member of `TNS(tree, f)` (factors in slot order) and the chain
/// it was built from.
///
/// Subspaces of dimension `f'(v)` are drawn with random integer
/// coordinates; the draw is accepted only when the realized rank profile
/// equals `f'` exactly, i.e. each `U_v` is recovered as the contraction of
/// the tensor. Otherwise it is redrawn, up to [`MAX_RESAMPLES`] times.
pub fn sample_member(
    tree: &BinaryTree,
    f: &RankFunction,
    dims: &[usize],
    rng: &mut impl Rng,
) -> Result<(DenseTensor<Rational>, SubspaceChain<Rational>)> {
    let norm = normalize_rank_function(tree, f, dims)?;
    let identity = LeafOrdering::identity(tree.num_leaves());
    if norm.zero_variety {
        let bases = tree
            .vertices()
            .map(|v| match tree.children(v) {
                None => Matrix::zeros(dims[tree.leaf_slot(v).unwrap()], 0),
                Some(_) => Matrix::zeros(0, 0),
            })
            .collect();
        return Ok((DenseTensor::zeros(dims.to_vec())?, SubspaceChain { bases }));
    }
    let fp = effective_ranks(tree, &norm.ranks);
    let mut bad_vertex = tree.root();
    for _ in 0..MAX_RESAMPLES {
        let chain = SubspaceChain::random(tree, dims, &fp.0, rng)?;
        let t = chain.realize(tree, &identity)?;
        let profile = rank_profile(&t, tree, &identity, 0.0)?;
        match tree.vertices().find(|&v| profile.get(v) != fp.get(v)) {
            None => return Ok((t, chain)),
            Some(v) => bad_vertex = v,
        }
    }
    Err(Error::SamplingFailure {
        vertex: bad_vertex,
        attempts: MAX_RESAMPLES,
    })
}

/// Recover `U_v = (⊗_{l∉cos v} V_l)* ⌟ t` at every vertex and express each
/// node's subspace inside the product of its children's.
///
/// The root basis is `t` itself, so [`SubspaceChain::realize`] returns `t`.
pub fn extract_subspaces<T: Field>(
    t: &DenseTensor<T>,
    tree: &BinaryTree,
    ordering: &LeafOrdering,
    tol: f64,
) -> Result<SubspaceChain<T>> {
    check_tensor(t, tree, ordering)?;
    T::check_tolerance(tol)?;
    if t.is_zero() {
        return invalid("cannot extract subspaces of the zero tensor");
    }
    let n = tree.num_leaves();
    let mut ambient: Vec<Option<Matrix<T>>> = vec![None; tree.num_vertices()];
    let mut bases: Vec<Option<Matrix<T>>> = vec![None; tree.num_vertices()];
    for v in tree.postorder() {
        let s: LeafSet = ordering.apply(tree.cos(v));
        let flat = t.flatten(&s)?;
        let here = if v == tree.root() {
            flat
        } else {
            T::column_basis(&flat, tol)?
        };
        let coords = match tree.children(v) {
            None => here.clone(),
            Some((a, b)) => {
                let factors = s.to_vec();
                let shape_of = |w: VertexId| -> Vec<usize> {
                    ascending_factors(tree, ordering, w)
                        .iter()
                        .map(|&f| t.shape()[f])
                        .collect()
                };
                let pos = |w: VertexId| -> Vec<usize> {
                    ascending_factors(tree, ordering, w)
                        .iter()
                        .map(|f| factors.binary_search(f).unwrap())
                        .collect()
                };
                let columns = |w: VertexId| -> Result<Vec<DenseTensor<T>>> {
                    let m = ambient[w].as_ref().unwrap();
                    (0..m.cols())
                        .map(|c| DenseTensor::new(shape_of(w), m.column(c)))
                        .collect()
                };
                let products = pairwise_products(&columns(a)?, &pos(a), &columns(b)?, &pos(b))?;
                let rows = here.rows();
                let k = Matrix::from_fn(rows, products.len(), |r, c| products[c].data()[r].clone());
                T::solve(&k, &here, tol)?.ok_or_else(|| {
                    Error::InternalInconsistency(format!(
                        "U_{v} is not contained in U_{a} ⊗ U_{b} (n = {n})"
                    ))
                })?
            }
        };
        ambient[v] = Some(here);
        bases[v] = Some(coords);
    }
    Ok(SubspaceChain {
        bases: bases.into_iter().map(Option::unwrap).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    #[test]
    fn normalization_clamps() {
        let t = BinaryTree::perfect(2);
        let f = RankFunction::constant(&t, 2);
        assert_eq!(normalize_rank_function(&t, &f, &[2; 4]).unwrap().ranks, f);

        let mut v = vec![2; 7];
        v[3] = 5;
        let n = normalize_rank_function(&t, &RankFunction::from_values(&t, v).unwrap(), &[2; 4])
            .unwrap();
        assert_eq!(n.ranks.get(3), 2);

        let mut v = vec![2; 7];
        v[1] = 9;
        let n = normalize_rank_function(&t, &RankFunction::from_values(&t, v).unwrap(), &[2; 4])
            .unwrap();
        assert_eq!(n.ranks.get(1), 4);
        assert!(!n.zero_variety);

        let mut v = vec![2; 7];
        v[4] = 0;
        let n = normalize_rank_function(&t, &RankFunction::from_values(&t, v).unwrap(), &[2; 4])
            .unwrap();
        assert!(n.zero_variety);
        assert!(normalize_rank_function(&t, &f, &[2; 3]).is_err());
    }

    #[test]
    fn effective_rank_examples() {
        let t = BinaryTree::perfect(2);
        let fp = effective_ranks(&t, &RankFunction::constant(&t, 2));
        assert_eq!(fp.0, vec![1, 2, 2, 2, 2, 2, 2]);
        assert_eq!(effective_ranks(&t, &RankFunction::constant(&t, 1)).0, vec![1; 7]);

        let tt = BinaryTree::train_track(4).unwrap();
        let fp = effective_ranks(&tt, &RankFunction::constant(&tt, 2));
        let expect: Vec<usize> = tt.vertices().map(|v| if v == 0 { 1 } else { 2 }).collect();
        assert_eq!(fp.0, expect);
    }

    #[test]
    fn dimension_examples() {
        for tree in [BinaryTree::perfect(2), BinaryTree::train_track(4).unwrap()] {
            assert_eq!(variety_dimension(&tree, &RankFunction::constant(&tree, 1), &[2; 4]).unwrap(), 5);
            assert_eq!(variety_dimension(&tree, &RankFunction::constant(&tree, 2), &[2; 4]).unwrap(), 12);
        }
        // A single factor: the whole space.
        let leaf = BinaryTree::perfect(0);
        assert_eq!(variety_dimension(&leaf, &RankFunction::constant(&leaf, 3), &[5]).unwrap(), 5);
    }

    #[test]
    fn shortcut_is_flagged_not_trusted() {
        let t = BinaryTree::perfect(2);
        let rep = dimension_report(&t, &RankFunction::constant(&t, 2), &[2; 4]).unwrap();
        assert_eq!(rep.dimension, 12);
        assert_eq!(rep.constant_shortcut, Some(20));
        assert_eq!(rep.shortcut_agrees, Some(false));
        // Leaves clamp to d = 2 while nodes keep 3: no shortcut quoted.
        let rep = dimension_report(&t, &RankFunction::constant(&t, 3), &[2; 4]).unwrap();
        assert_eq!(rep.constant_shortcut, None);
    }

    #[test]
    fn rank_one_membership() {
        let t = BinaryTree::perfect(2);
        let x = DenseTensor::outer_vectors(&vec![random_integer_vector(2, &mut rng_from_seed(1)); 4])
            .unwrap();
        let id = LeafOrdering::identity(4);
        let (ok, profile) = is_member(&x, &t, &id, &RankFunction::constant(&t, 1), 0.0).unwrap();
        assert!(ok);
        assert_eq!(profile.0, vec![1; 7]);
    }

    #[test]
    fn sampled_members_realize_effective_ranks() {
        let t = BinaryTree::perfect(3);
        let f = RankFunction::constant(&t, 2);
        let mut rng = rng_from_seed(7);
        let (x, chain) = sample_member(&t, &f, &[2; 8], &mut rng).unwrap();
        let (ok, profile) = is_member(&x, &t, &LeafOrdering::identity(8), &f, 0.0).unwrap();
        assert!(ok);
        let expect: Vec<usize> = t.vertices().map(|v| if v == 0 { 1 } else { 2 }).collect();
        assert_eq!(profile.0, expect);
        assert_eq!(chain.dims(), expect);
    }

    #[test]
    fn rank_one_function_samples_simple_tensor() {
        let t = BinaryTree::train_track(3).unwrap();
        let (x, _) = sample_member(&t, &RankFunction::constant(&t, 1), &[3, 2, 4], &mut rng_from_seed(3))
            .unwrap();
        for mask in 1u32..7 {
            let s = LeafSet::from_indices(3, (0..3).filter(|i| mask >> i & 1 == 1));
            assert_eq!(x.flattening_rank(&s, 0.0).unwrap(), 1);
        }
    }

    #[test]
    fn zero_rank_gives_zero_tensor() {
        let t = BinaryTree::perfect(1);
        let f = RankFunction::from_values(&t, vec![0, 2, 2]).unwrap();
        let (x, _) = sample_member(&t, &f, &[2, 2], &mut rng_from_seed(0)).unwrap();
        assert!(x.is_zero());
        assert_eq!(variety_dimension(&t, &f, &[2, 2]).unwrap(), 0);
    }

    #[test]
    fn extraction_round_trip() {
        let t = BinaryTree::perfect(2);
        let f = RankFunction::constant(&t, 2);
        let (x, _) = sample_member(&t, &f, &[3; 4], &mut rng_from_seed(11)).unwrap();
        let ord = LeafOrdering::from_one_based(&[3, 1, 4, 2]).unwrap();
        let permuted = x.permute_factors(ord.as_slice()).unwrap();
        let chain = extract_subspaces(&permuted, &t, &ord, 0.0).unwrap();
        assert_eq!(chain.realize(&t, &ord).unwrap(), permuted);
        let fp = effective_ranks(&t, &f);
        assert_eq!(chain.dims(), fp.0);

        let fl = permuted.to_float();
        let fchain = extract_subspaces(&fl, &t, &ord, 1e-9).unwrap();
        assert_eq!(fchain.dims(), fp.0);
        let back = fchain.realize(&t, &ord).unwrap();
        for (a, b) in back.data().iter().zip(fl.data()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn leaf_subspace_is_span_of_fibers() {
        let t = BinaryTree::perfect(1);
        // Mode-1 fibers (columns along factor 0) are (1,2) and (2,4): one line.
        let x = DenseTensor::from_integers(vec![2, 2], &[1, 2, 2, 4]).unwrap();
        let chain = extract_subspaces(&x, &t, &LeafOrdering::identity(2), 0.0).unwrap();
        assert_eq!(chain.dim(1), 1);
        assert_eq!(chain.bases[1].column(0), vec![Rational::from_i64(1), Rational::from_i64(2)]);
        assert!(extract_subspaces(&DenseTensor::<Rational>::zeros(vec![2, 2]).unwrap(), &t, &LeafOrdering::identity(2), 0.0).is_err());
    }

    #[test]
    fn rank_function_json() {
        let t = BinaryTree::perfect(1);
        let j: RankFunctionJson = serde_json::from_str(r#"{"constant":2}"#).unwrap();
        assert_eq!(RankFunction::from_json(&j, &t).unwrap(), RankFunction::constant(&t, 2));
        let j: RankFunctionJson = serde_json::from_str(r#"{"values":{"0":1,"1":2,"2":3}}"#).unwrap();
        assert_eq!(RankFunction::from_json(&j, &t).unwrap().values(), &[1, 2, 3]);
        let j: RankFunctionJson = serde_json::from_str(r#"{"values":{"0":1,"1":2}}"#).unwrap();
        assert!(RankFunction::from_json(&j, &t).is_err());
        let p = RankProfile(vec![1, 2, 2]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"0":1,"1":2,"2":2}"#);
        assert_eq!(serde_json::from_str::<RankProfile>(&s).unwrap(), p);
    }
}
