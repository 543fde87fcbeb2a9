//! Brute-force oracles and certification sweeps.
//!
//! Sweeps are deterministic: item `i` uses the seed `seed ^ i`, items are
//! processed in parallel with rayon and reported in index order, and each
//! record carries a SHA-256 of its witness tensor (failures embed the full
//! tensor) so any line can be regenerated and rechecked.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::linalg::{Field, Matrix, ModP, Rational, MODULUS};
use crate::rng_from_seed;
use crate::tensor::{AnyTensor, DenseTensor, TensorJson};
use crate::tns::{
    effective_ranks, is_member, normalize_rank_function, sample_member, variety_dimension,
    RankFunction, SubspaceChain, MAX_RESAMPLES,
};
use crate::trees::{full_binary_shapes, BinaryTree, LeafOrdering, TreeSpec};
use crate::witness::{cherry_witness, hackbusch_witness};

/// Outcome of [`jacobian_dimension_oracle`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// Largest Jacobian rank seen over the attempts.
    pub rank: u64,
    pub formula: u64,
    pub parameters: usize,
    pub attempts: usize,
    pub agrees: bool,
}

/// Rank of the Jacobian of the subspace-chain parametrization at random
/// points, computed modulo the prime [`MODULUS`].
///
/// The tensor is multilinear in the per-vertex coefficient matrices, so the
/// derivative along one matrix entry is the tensor realized with that
/// matrix replaced by the corresponding unit matrix. A mod-`p` rank never
/// exceeds the rational rank; points whose rank falls short of the formula
/// are redrawn up to [`MAX_RESAMPLES`] times.
pub fn jacobian_dimension_oracle(
    tree: &BinaryTree,
    f: &RankFunction,
    dims: &[usize],
    seed: u64,
) -> Result<JacobianReport> {
    let formula = variety_dimension(tree, f, dims)?;
    let norm = normalize_rank_function(tree, f, dims)?;
    if norm.zero_variety {
        return Ok(JacobianReport {
            rank: 0,
            formula,
            parameters: 0,
            attempts: 0,
            agrees: formula == 0,
        });
    }
    let fp = effective_ranks(tree, &norm.ranks);
    let identity = LeafOrdering::identity(tree.num_leaves());
    let shape_of = |v: usize| match tree.children(v) {
        None => (dims[tree.leaf_slot(v).unwrap()], fp.get(v)),
        Some((a, b)) => (fp.get(a) * fp.get(b), fp.get(v)),
    };
    let parameters: usize = tree.vertices().map(|v| {
        let (r, c) = shape_of(v);
        r * c
    }).sum();
    let mut rng = rng_from_seed(seed);
    let mut best = 0;
    let mut attempts = 0;
    while attempts < MAX_RESAMPLES {
        attempts += 1;
        let point = SubspaceChain {
            bases: tree
                .vertices()
                .map(|v| {
                    let (r, c) = shape_of(v);
                    Matrix::from_fn(r, c, |_, _| ModP::new(rng.gen_range(0..MODULUS)))
                })
                .collect(),
        };
        let mut columns: Vec<ModP> = Vec::new();
        let mut count = 0;
        for v in tree.vertices() {
            let (r, c) = shape_of(v);
            for i in 0..r {
                for j in 0..c {
                    let mut direction = point.clone();
                    let mut unit = Matrix::zeros(r, c);
                    unit.set(i, j, ModP::new(1));
                    direction.bases[v] = unit;
                    columns.extend(direction.realize(tree, &identity)?.into_data());
                    count += 1;
                }
            }
        }
        let len = columns.len() / count.max(1);
        let jac = Matrix::new(count, len, columns);
        let rank = ModP::rank(&jac, 0.0)? as u64;
        best = best.max(rank);
        if best >= formula {
            break;
        }
    }
    Ok(JacobianReport {
        rank: best,
        formula,
        parameters,
        attempts,
        agrees: best == formula,
    })
}

/// Which orderings a sweep visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingFilter {
    /// Every ordering with `sigma(1) = 1`.
    All,
    /// This many uniformly random orderings.
    Sample(usize),
}

/// One line of a sweep report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepItem {
    pub index: usize,
    /// 1-based: train-track slot `i` carries perfect-tree leaf `sigma[i]`.
    pub sigma: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cherry: Option<[usize; 2]>,
    pub rank: usize,
    pub ok: bool,
    pub seed: u64,
    /// Relabeling `x ↦ x XOR mask` (0-based leaves) used to start at leaf 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Present only on failures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total: usize,
    pub verified: usize,
    pub failed: usize,
    /// Required rank on the certified set.
    pub target: usize,
    pub min_rank: Option<usize>,
    pub failures: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub params: serde_json::Value,
    pub items: Vec<SweepItem>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.summary.failed == 0
    }
}

/// SHA-256 of the canonical JSON form of a rational tensor.
pub fn tensor_digest(t: &DenseTensor<Rational>) -> String {
    let json = serde_json::to_string(&AnyTensor::Rational(t.clone()).to_json())
        .expect("tensor JSON is always serializable");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Orderings of `0..n` fixing `0`, in lexicographic order.
fn normalized_orderings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest: Vec<usize> = (1..n).collect();
    loop {
        let mut sigma = vec![0];
        sigma.extend(&rest);
        out.push(sigma);
        if !next_permutation(&mut rest) {
            return out;
        }
    }
}

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

fn sweep_orderings(n: usize, filter: OrderingFilter, seed: u64, max_all: usize) -> Result<Vec<Vec<usize>>> {
    match filter {
        OrderingFilter::All => {
            if n > max_all {
                return invalid(format!("exhaustive sweeps are limited to {max_all} leaves"));
            }
            Ok(normalized_orderings(n))
        }
        OrderingFilter::Sample(count) => Ok((0..count)
            .map(|i| {
                let mut sigma: Vec<usize> = (0..n).collect();
                sigma.shuffle(&mut rng_from_seed(seed ^ i as u64 ^ 0x5eed_0000_0000));
                sigma
            })
            .collect()),
    }
}

fn summarize(items: &[SweepItem], target: usize) -> SweepSummary {
    let failures: Vec<usize> = items.iter().filter(|i| !i.ok).map(|i| i.index).collect();
    SweepSummary {
        total: items.len(),
        verified: items.len() - failures.len(),
        failed: failures.len(),
        target,
        min_rank: items.iter().filter(|i| i.error.is_none()).map(|i| i.rank).min(),
        failures,
    }
}

fn one_based(sigma: &[usize]) -> Vec<usize> {
    sigma.iter().map(|x| x + 1).collect()
}

/// Run [`hackbusch_witness`] for every ordering selected by `filter`.
///
/// `All` visits the `(n−1)!` orderings with `sigma(1) = 1` (the others are
/// images of these under perfect-tree automorphisms) and is limited to
/// `k ≤ 3`.
pub fn verify_hackbusch_sweep(k: usize, r: usize, filter: OrderingFilter, seed: u64) -> Result<SweepReport> {
    if k == 0 || k > 6 {
        return invalid("k must be between 1 and 6");
    }
    let n = 1 << k;
    let orderings = sweep_orderings(n, filter, seed, 8)?;
    let dims = vec![r.max(1); n];
    let target = r.pow(k.div_ceil(2) as u32);
    let items: Vec<SweepItem> = orderings
        .par_iter()
        .enumerate()
        .map(|(index, sigma)| {
            let item_seed = seed ^ index as u64;
            let ordering = LeafOrdering::new(sigma.clone()).expect("valid permutation");
            let mut item = SweepItem {
                index,
                sigma: one_based(sigma),
                j: None,
                cherry: None,
                rank: 0,
                ok: false,
                seed: item_seed,
                mask: Some(sigma[0]),
                tensor_sha256: None,
                error: None,
                tensor: None,
            };
            match hackbusch_witness(k, r, &ordering, &dims, &mut rng_from_seed(item_seed)) {
                Ok(w) => {
                    item.j = Some(w.j);
                    item.rank = w.rank;
                    item.ok = w.rank >= target;
                    item.tensor_sha256 = Some(tensor_digest(&w.tensor));
                    if !item.ok {
                        item.tensor = Some(AnyTensor::Rational(w.tensor).to_json());
                    }
                }
                Err(e) => item.error = Some(e.to_string()),
            }
            item
        })
        .collect();
    let summary = summarize(&items, target);
    Ok(SweepReport {
        params: serde_json::json!({
            "kind": "hackbusch", "k": k, "r": r, "filter": filter, "seed": seed,
        }),
        items,
        summary,
    })
}

/// Run [`cherry_witness`] on the orderings selected by `filter`; an item
/// passes when the cherry flattening has rank exactly `r²`.
pub fn verify_cherry_sweep(k: usize, r: usize, filter: OrderingFilter, seed: u64) -> Result<SweepReport> {
    if !(3..=6).contains(&k) {
        return invalid("k must be between 3 and 6");
    }
    let n = 1 << k;
    let orderings = sweep_orderings(n, filter, seed, 8)?;
    let dims = vec![r.max(1); n];
    let target = r * r;
    let items: Vec<SweepItem> = orderings
        .par_iter()
        .enumerate()
        .map(|(index, sigma)| {
            let item_seed = seed ^ index as u64;
            let ordering = LeafOrdering::new(sigma.clone()).expect("valid permutation");
            let mut item = SweepItem {
                index,
                sigma: one_based(sigma),
                j: None,
                cherry: None,
                rank: 0,
                ok: false,
                seed: item_seed,
                mask: None,
                tensor_sha256: None,
                error: None,
                tensor: None,
            };
            match cherry_witness(k, r, &ordering, &dims, &mut rng_from_seed(item_seed)) {
                Ok(w) => {
                    item.cherry = Some([w.cherry.0, w.cherry.1]);
                    item.rank = w.rank;
                    item.ok = w.rank == target;
                    item.tensor_sha256 = Some(tensor_digest(&w.tensor));
                    if !item.ok {
                        item.tensor = Some(AnyTensor::Rational(w.tensor).to_json());
                    }
                }
                Err(e) => item.error = Some(e.to_string()),
            }
            item
        })
        .collect();
    let summary = summarize(&items, target);
    Ok(SweepReport {
        params: serde_json::json!({
            "kind": "cherry", "k": k, "r": r, "filter": filter, "seed": seed,
        }),
        items,
        summary,
    })
}

/// Sample members of `TNS(source, f)` and test membership in
/// `TNS(target, bound)` with the target's leaves placed by `ordering`.
/// Returns the indices of samples that fail.
#[allow(clippy::too_many_arguments)]
pub fn verify_containment(
    source: &BinaryTree,
    f: &RankFunction,
    target: &BinaryTree,
    ordering: &LeafOrdering,
    bound: &RankFunction,
    dims: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let results: Vec<Result<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (t, _) = sample_member(source, f, dims, &mut rng_from_seed(seed ^ i as u64))?;
            Ok(is_member(&t, target, ordering, bound, 0.0)?.0)
        })
        .collect();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        if !r? {
            failures.push(i);
        }
    }
    Ok(failures)
}

/// One formula-versus-oracle comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCase {
    pub tree: TreeSpec,
    pub rank: usize,
    pub dims: Vec<usize>,
    pub formula: u64,
    pub jacobian: u64,
    pub agrees: bool,
}

/// Compare [`variety_dimension`] with [`jacobian_dimension_oracle`] on every
/// full binary tree shape with at most `max_leaves` leaves, every constant
/// rank in `ranks` and every dimension vector produced by `dims_for`.
pub fn dimension_sweep(
    max_leaves: usize,
    ranks: &[usize],
    dims_for: impl Fn(usize) -> Vec<Vec<usize>> + Sync,
    seed: u64,
) -> Result<Vec<DimensionCase>> {
    let mut jobs = Vec::new();
    for n in 1..=max_leaves {
        for shape in full_binary_shapes(n) {
            let tree = BinaryTree::from_shape(&shape);
            for &r in ranks {
                for dims in dims_for(n) {
                    jobs.push((tree.clone(), r, dims));
                }
            }
        }
    }
    jobs.par_iter()
        .enumerate()
        .map(|(i, (tree, r, dims))| {
            let f = RankFunction::constant(tree, *r);
            let report = jacobian_dimension_oracle(tree, &f, dims, seed ^ i as u64)?;
            Ok(DimensionCase {
                tree: tree.to_spec(),
                rank: *r,
                dims: dims.clone(),
                formula: report.formula,
                jacobian: report.rank,
                agrees: report.agrees,
            })
        })
        .collect()
}
