//! Explicit tensors separating the hierarchical and tensor-train formats.
//!
//! Every constructor certifies its output with exact ranks before returning
//! it, resampling random choices up to [`MAX_RESAMPLES`] times.

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Field, Matrix, Rational};
use crate::tensor::DenseTensor;
use crate::tns::{
    is_member, random_integer_matrix, random_integer_vector, sample_member, RankFunction,
    RankProfile, SubspaceChain, MAX_RESAMPLES,
};
use crate::trees::{cos_cover_number, BinaryTree, LeafOrdering, LeafSet, VertexId};

/// A tensor `t1 ⊗ t2 ⊗ ⨂ x_l` and the ranks it realizes on a set `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductWitness {
    pub tensor: DenseTensor<Rational>,
    /// Rank of `t1` on `A ∩ cos v1`.
    pub q1: usize,
    /// Rank of `t2` on `A ∩ cos v2`.
    pub q2: usize,
    /// Rank of the product on `A`; always `q1·q2`.
    pub rank: usize,
}

/// Positions within `factors` (ascending) of the elements of `set`.
fn restrict(set: &LeafSet, factors: &[usize]) -> LeafSet {
    LeafSet::from_indices(
        factors.len(),
        factors.iter().enumerate().filter(|(_, &f)| set.contains(f)).map(|(i, _)| i),
    )
}

/// Place each part on its factor list and fill every other factor with the
/// given vector.
fn assemble(
    n: usize,
    parts: &[(&DenseTensor<Rational>, &[usize])],
    filler: impl Fn(usize) -> Vec<Rational>,
) -> Result<DenseTensor<Rational>> {
    let mut used = vec![false; n];
    for (_, factors) in parts {
        for &f in *factors {
            if f >= n {
                return invalid(format!("factor {f} out of range for order {n}"));
            }
            used[f] = true;
        }
    }
    let fillers: Vec<(usize, DenseTensor<Rational>)> = (0..n)
        .filter(|&f| !used[f])
        .map(|f| Ok((f, DenseTensor::vector(filler(f))?)))
        .collect::<Result<_>>()?;
    let singles: Vec<[usize; 1]> = fillers.iter().map(|(f, _)| [*f]).collect();
    let mut all: Vec<(&DenseTensor<Rational>, &[usize])> = parts.to_vec();
    all.extend(fillers.iter().zip(&singles).map(|((_, t), s)| (t, &s[..])));
    DenseTensor::outer(&all)
}

fn unit_filler(dims: &[usize]) -> impl Fn(usize) -> Vec<Rational> + '_ {
    move |f| {
        let mut v = vec![Rational::from_i64(0); dims[f]];
        v[0] = Rational::from_i64(1);
        v
    }
}

/// Tensor product of `t1` (on the factors of `cos v1`) and `t2` (on
/// `cos v2`) with `fillers[l]` on every remaining factor `l`.
///
/// If `t1`, `t2` are members of the subtree varieties then the product is a
/// member of `TNS(tree, r)`, and its rank on `a` is the product of the
/// ranks of `t1` and `t2` on the parts of `a` they see.
#[allow(clippy::too_many_arguments)]
pub fn product_witness(
    tree: &BinaryTree,
    ordering: &LeafOrdering,
    v1: VertexId,
    t1: &DenseTensor<Rational>,
    v2: VertexId,
    t2: &DenseTensor<Rational>,
    a: &LeafSet,
    fillers: &[Vec<Rational>],
) -> Result<ProductWitness> {
    let n = tree.num_leaves();
    if ordering.len() != n || a.universe() != n || fillers.len() != n {
        return invalid("ordering, set and fillers must all cover the tree's leaves");
    }
    let s1 = ordering.apply(tree.descendant_leaves(v1)?);
    let s2 = ordering.apply(tree.descendant_leaves(v2)?);
    if !s1.is_disjoint(&s2) {
        return invalid(format!("vertices {v1} and {v2} have overlapping leaf sets"));
    }
    let (f1, f2) = (s1.to_vec(), s2.to_vec());
    if t1.order() != f1.len() || t2.order() != f2.len() {
        return invalid("factor tensors do not match their subtrees");
    }
    let covered = s1.union(&s2);
    for l in (0..n).filter(|&l| !covered.contains(l)) {
        if fillers[l].iter().all(|x| x.is_zero()) {
            return invalid(format!("filler at factor {} is zero", l + 1));
        }
    }
    let tensor = assemble(n, &[(t1, &f1), (t2, &f2)], |l| fillers[l].clone())?;
    let q1 = t1.flattening_rank(&restrict(a, &f1), 0.0)?;
    let q2 = t2.flattening_rank(&restrict(a, &f2), 0.0)?;
    let rank = tensor.flattening_rank(a, 0.0)?;
    Ok(ProductWitness {
        tensor,
        q1,
        q2,
        rank,
    })
}

/// A member of `HF(r, k)` whose flattening along the first `j` leaves of a
/// train track (in the order `sigma`) has rank at least `r^⌈k/2⌉`.
#[derive(Clone, Debug, PartialEq)]
pub struct HackbuschWitness {
    pub tensor: DenseTensor<Rational>,
    pub j: usize,
    pub rank: usize,
    pub profile: RankProfile,
    /// Leaf relabeling `x ↦ x XOR mask` applied so the train track starts at
    /// leaf 1; the returned tensor is already mapped back.
    pub mask: usize,
    pub trace: Vec<String>,
}

/// Witness that `HF(r, k) ⊄ TT(r^⌈k/2⌉ − 1, 2^k)` for the leaf order `sigma`
/// (`sigma` maps train-track slot `i` to perfect-tree leaf `sigma(i)`).
///
/// Inductive on `k` in steps of two. The perfect tree splits into four
/// quarter subtrees; each gets a recursive witness for the order in which
/// `sigma` visits its leaves. The earliest train-track prefix completing one
/// of those witnesses is then extended by a second factor that contributes
/// another factor `r` to the rank, either from a second quarter, from the
/// quarter-sized subtree next to it, or through a coupling tensor `u`
/// between the first quarter and the right half.
pub fn hackbusch_witness(
    k: usize,
    r: usize,
    sigma: &LeafOrdering,
    dims: &[usize],
    rng: &mut impl Rng,
) -> Result<HackbuschWitness> {
    let n = 1usize << k;
    if sigma.len() != n || dims.len() != n {
        return invalid(format!("need {n} leaves for k = {k}"));
    }
    if r == 0 || dims.iter().any(|&d| d < r) {
        return invalid("need r ≥ 1 and every dimension at least r");
    }
    if k > 20 {
        return invalid("k too large");
    }
    let order = sigma.as_slice();
    let target = r.pow(k.div_ceil(2) as u32);
    let tree = BinaryTree::perfect(k);
    let identity = LeafOrdering::identity(n);
    let f = RankFunction::constant(&tree, r);
    let mut last_trace = Vec::new();
    for attempt in 0..MAX_RESAMPLES {
        let mut trace = Vec::new();
        let (tensor, j) = build_hackbusch(k, r, order, dims, rng, &mut trace)?;
        let prefix = LeafSet::from_indices(n, order[..j].iter().copied());
        let rank = tensor.flattening_rank(&prefix, 0.0)?;
        let (member, profile) = is_member(&tensor, &tree, &identity, &f, 0.0)?;
        if member && rank >= target {
            return Ok(HackbuschWitness {
                tensor,
                j,
                rank,
                profile,
                mask: order[0],
                trace,
            });
        }
        trace.push(format!(
            "attempt {attempt}: member={member}, rank {rank} on prefix {j}, need {target}"
        ));
        last_trace = trace;
    }
    Err(Error::ConstructionFailure { trace: last_trace })
}

/// Recursive step on local leaves `0..2^k`; `order` lists them in visiting
/// order. Returns the tensor (factor = local leaf) and the prefix length.
fn build_hackbusch(
    k: usize,
    r: usize,
    order: &[usize],
    dims: &[usize],
    rng: &mut impl Rng,
    trace: &mut Vec<String>,
) -> Result<(DenseTensor<Rational>, usize)> {
    let mask = order[0];
    if mask != 0 {
        // Flipping the subtrees along the bits of `mask` is an automorphism
        // of the perfect tree that moves the first visited leaf to leaf 0.
        let flipped: Vec<usize> = order.iter().map(|&x| x ^ mask).collect();
        let flipped_dims: Vec<usize> = (0..dims.len()).map(|x| dims[x ^ mask]).collect();
        let (t, j) = build_hackbusch(k, r, &flipped, &flipped_dims, rng, trace)?;
        let back: Vec<usize> = (0..dims.len()).map(|x| x ^ mask).collect();
        return Ok((t.permute_factors(&back)?, j));
    }
    match k {
        0 => {
            let v = loop {
                let v = random_integer_vector(dims[0], rng);
                if v.iter().any(|x| !x.is_zero()) {
                    break v;
                }
            };
            Ok((DenseTensor::vector(v)?, 1))
        }
        1 => {
            let tree = BinaryTree::perfect(1);
            let (t, _) = sample_member(&tree, &RankFunction::constant(&tree, r), dims, rng)?;
            trace.push("k=1 base".into());
            Ok((t, 1))
        }
        _ => build_hackbusch_step(k, r, order, dims, rng, trace),
    }
}

fn build_hackbusch_step(
    k: usize,
    r: usize,
    order: &[usize],
    dims: &[usize],
    rng: &mut impl Rng,
    trace: &mut Vec<String>,
) -> Result<(DenseTensor<Rational>, usize)> {
    let n = order.len();
    let q = n / 4;
    let quarter_of = |x: usize| x / q;
    let factors = |lo: usize, len: usize| -> Vec<usize> { (lo..lo + len).collect() };

    // Recursive witnesses for the quarters and the train-track positions
    // at which they become complete.
    let mut witness = Vec::with_capacity(4);
    let mut complete_at = [0usize; 4];
    for a in 0..4 {
        let local: Vec<usize> = order
            .iter()
            .filter(|&&x| quarter_of(x) == a)
            .map(|&x| x % q)
            .collect();
        let (t, m) = build_hackbusch(k - 2, r, &local, &dims[a * q..(a + 1) * q], rng, trace)?;
        let mut seen = 0;
        for (pos, &x) in order.iter().enumerate() {
            if quarter_of(x) == a {
                seen += 1;
                if seen == m {
                    complete_at[a] = pos + 1;
                    break;
                }
            }
        }
        witness.push(t);
    }
    let prefix = |j: usize| -> Vec<usize> { order[..j].to_vec() };
    let touches = |j: usize, a: usize| prefix(j).iter().any(|&x| quarter_of(x) == a);
    let generic = |depth: usize, lo: usize, rng: &mut dyn rand::RngCore| -> Result<DenseTensor<Rational>> {
        let tree = BinaryTree::perfect(depth);
        let mut rng = rng;
        sample_member(&tree, &RankFunction::constant(&tree, r), &dims[lo..lo + (1 << depth)], &mut rng)
            .map(|(t, _)| t)
    };
    let product = |a: usize, ta: &DenseTensor<Rational>, lo: usize, tb: &DenseTensor<Rational>| {
        assemble(
            n,
            &[(ta, &factors(a * q, q)), (tb, &factors(lo, tb.order()))],
            unit_filler(dims),
        )
    };

    let (j1, a) = (0..4).map(|a| (complete_at[a], a)).min().unwrap();
    if let Some(b) = (0..4).find(|&b| b != a && touches(j1, b)) {
        trace.push(format!("k={k} case i: quarter {a} complete at {j1}, quarter {b} touched"));
        let other = generic(k - 2, b * q, rng)?;
        return Ok((product(a, &witness[a], b * q, &other)?, j1));
    }
    // The prefix stays inside the quarter holding the first visited leaf.
    let (j2, b) = (1..4).map(|b| (complete_at[b], b)).min().unwrap();
    if let Some(c) = (1..4).find(|&c| c != b && touches(j2, c)) {
        trace.push(format!("k={k} case ii: quarters 0, {b} at {j2}, quarter {c} touched"));
        let other = generic(k - 2, c * q, rng)?;
        return Ok((product(b, &witness[b], c * q, &other)?, j2));
    }
    let in_prefix = prefix(j2).iter().filter(|&&x| quarter_of(x) == 0).count();
    if in_prefix < q {
        trace.push(format!("k={k} case ii: quarters 0, {b} at {j2}, quarter 0 partial"));
        let other = generic(k - 2, 0, rng)?;
        return Ok((product(b, &witness[b], 0, &other)?, j2));
    }
    if b != 1 {
        trace.push(format!("k={k} case ii: quarter 0 full, quarter {b} at {j2}, left half"));
        let other = generic(k - 1, 0, rng)?;
        return Ok((product(b, &witness[b], 0, &other)?, j2));
    }
    trace.push(format!("k={k} case iii: quarter 0 full, quarter 1 at {j2}, coupling u"));
    let u = coupling(k, r, dims, rng)?;
    let mut u_factors = factors(0, q);
    u_factors.extend(factors(2 * q, 2 * q));
    let t = assemble(n, &[(&u, &u_factors), (&witness[1], &factors(q, q))], unit_filler(dims))?;
    Ok((t, j2))
}

/// `u = Σ c_ij B1_i ⊗ B2_j` with `B1` spanning an `r`-dimensional top space
/// of a random chain on the first quarter, `B2` the same on the right half.
/// Factors: the first quarter, then the right half.
fn coupling(k: usize, r: usize, dims: &[usize], rng: &mut impl Rng) -> Result<DenseTensor<Rational>> {
    let n = dims.len();
    let q = n / 4;
    let top_space = |depth: usize, lo: usize, rng: &mut dyn rand::RngCore| -> Result<Vec<DenseTensor<Rational>>> {
        let tree = BinaryTree::perfect(depth);
        let vertex_dims = vec![r; tree.num_vertices()];
        let mut rng = rng;
        let chain = SubspaceChain::random(&tree, &dims[lo..lo + (1 << depth)], &vertex_dims, &mut rng)?;
        chain.ambient_basis(&tree, &LeafOrdering::identity(1 << depth), tree.root())
    };
    let b1 = top_space(k - 2, 0, rng)?;
    let b2 = top_space(k - 1, 2 * q, rng)?;
    let c: Matrix<Rational> = random_integer_matrix(r, r, rng);
    let left: Vec<usize> = (0..q).collect();
    let right: Vec<usize> = (q..3 * q).collect();
    let mut u = DenseTensor::zeros(
        dims[..q].iter().chain(&dims[2 * q..]).copied().collect(),
    )?;
    for (i, x) in b1.iter().enumerate() {
        for (jj, y) in b2.iter().enumerate() {
            let p = DenseTensor::outer(&[(x, &left), (y, &right)])?;
            u.add_scaled(c.get(i, jj), &p);
        }
    }
    Ok(u)
}

/// A member of `TT(r, 2^k)` whose flattening along a cherry `{2i−1, 2i}` of
/// the perfect tree has rank `r²`.
#[derive(Clone, Debug, PartialEq)]
pub struct CherryWitness {
    pub tensor: DenseTensor<Rational>,
    /// The cherry as 1-based perfect-tree leaves.
    pub cherry: (usize, usize),
    pub rank: usize,
    pub profile: RankProfile,
}

/// Witness that `TT(r, 2^k) ⊄ HF(r² − 1, k)` when train-track slot `i`
/// carries perfect-tree leaf `matching(i)`.
///
/// Picks a cherry kept away from both ends of the train track, couples the
/// first train-track leaf with the earlier cherry leaf and the later cherry
/// leaf with the last train-track leaf, and puts unit vectors elsewhere.
pub fn cherry_witness(
    k: usize,
    r: usize,
    matching: &LeafOrdering,
    dims: &[usize],
    rng: &mut impl Rng,
) -> Result<CherryWitness> {
    if k < 3 {
        return invalid("the cherry construction needs k ≥ 3");
    }
    if k > 20 {
        return invalid("k too large");
    }
    let n = 1usize << k;
    if matching.len() != n || dims.len() != n {
        return invalid(format!("need {n} leaves for k = {k}"));
    }
    if r == 0 || dims.iter().any(|&d| d < r) {
        return invalid("need r ≥ 1 and every dimension at least r");
    }
    let (first, last) = (matching.factor(0), matching.factor(n - 1));
    let (c1, c2) = (0..n / 2)
        .map(|i| (2 * i, 2 * i + 1))
        .find(|&(x, y)| ![x, y].contains(&first) && ![x, y].contains(&last))
        .expect("four or more cherries, at most two touch the ends");
    let (c1, c2) = if matching.slot(c1) < matching.slot(c2) {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let tt = BinaryTree::train_track(n)?;
    let f = RankFunction::constant(&tt, r);
    let cherry = LeafSet::from_indices(n, [c1, c2]);
    let target = r * r;
    let mut last_rank = 0;
    for _ in 0..MAX_RESAMPLES {
        let y1 = coupled_pair(r, dims[first], dims[c1], rng)?;
        let y2 = coupled_pair(r, dims[c2], dims[last], rng)?;
        let (p1, p2) = (sorted_pair(first, c1), sorted_pair(c2, last));
        let y1 = if first < c1 { y1 } else { y1.permute_factors(&[1, 0])? };
        let y2 = if c2 < last { y2 } else { y2.permute_factors(&[1, 0])? };
        let tensor = assemble(n, &[(&y1, &p1), (&y2, &p2)], unit_filler(dims))?;
        let rank = tensor.flattening_rank(&cherry, 0.0)?;
        let (member, profile) = is_member(&tensor, &tt, matching, &f, 0.0)?;
        if member && rank == target {
            return Ok(CherryWitness {
                tensor,
                cherry: (c1.min(c2) + 1, c1.max(c2) + 1),
                rank,
                profile,
            });
        }
        last_rank = rank;
    }
    Err(Error::ConstructionFailure {
        trace: vec![format!(
            "cherry ({}, {}): rank {last_rank}, need {target}",
            c1 + 1,
            c2 + 1
        )],
    })
}

fn sorted_pair(x: usize, y: usize) -> [usize; 2] {
    [x.min(y), x.max(y)]
}

/// Generic element of `U ⊗ W` for random `r`-dimensional `U ⊆ K^d1`,
/// `W ⊆ K^d2`.
fn coupled_pair(r: usize, d1: usize, d2: usize, rng: &mut impl Rng) -> Result<DenseTensor<Rational>> {
    let u = random_integer_matrix(d1, r, rng);
    let w = random_integer_matrix(d2, r, rng);
    let c = random_integer_matrix(r, r, rng);
    let m = u.matmul(&c).matmul(&w.transpose());
    DenseTensor::new(vec![d1, d2], m.into_data())
}

/// A flattening rank that is strictly smaller than the naive cover-number
/// prediction `r^min(h(A), h(L∖A))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankGapExample {
    /// 1-based factors of `A`.
    pub set: Vec<usize>,
    pub rank: usize,
    pub naive: usize,
}

/// A generic member of `HF(2, 3)` with `dim V_i = 2` and its rank on the
/// factors `{1, 2, 3, 5}`.
pub fn naive_rank_gap_example(rng: &mut impl Rng) -> Result<(DenseTensor<Rational>, RankGapExample)> {
    let tree = BinaryTree::perfect(3);
    let r = 2;
    let (t, _) = sample_member(&tree, &RankFunction::constant(&tree, r), &[2; 8], rng)?;
    let a = LeafSet::from_indices(8, [0, 1, 2, 4]);
    let rank = t.flattening_rank(&a, 0.0)?;
    let h = cos_cover_number(&tree, &a)?.min(cos_cover_number(&tree, &a.complement())?);
    Ok((
        t,
        RankGapExample {
            set: a.iter().map(|i| i + 1).collect(),
            rank,
            naive: r.pow(h as u32),
        },
    ))
}

/// For odd `k`: one plus the value of the `(k−1)`-digit binary string
/// `1010…10`.
pub fn separating_index(k: usize) -> Result<u64> {
    if k.is_multiple_of(2) || k > 63 {
        return invalid(format!("separating index is defined for odd k ≤ 63, got {k}"));
    }
    let digits = "10".repeat((k - 1) / 2);
    Ok(if digits.is_empty() {
        1
    } else {
        u64::from_str_radix(&digits, 2).expect("binary digits") + 1
    })
}
