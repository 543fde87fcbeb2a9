//! Containment exponents between tree formats.
//!
//! If every `cos v'` of tree `B` (or its complement) is a union of at most
//! `c` DOAD sets of tree `A`, then `TNS(A, r) ⊆ TNS(B, r^c)` for every `r`:
//! a flattening along such a union factors through at most `c` flattenings
//! of rank `≤ r`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::trees::{doad_cover_number, BinaryTree, LeafOrdering, VertexId};

/// Cover data for one vertex of the target tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCover {
    /// `orderingB(cos v')` as 1-based factor indices.
    pub set: Vec<usize>,
    pub cover: usize,
    /// `None` when `cos v'` is every leaf.
    pub complement_cover: Option<usize>,
    pub exponent: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferReport {
    pub exponent: usize,
    pub per_vertex: BTreeMap<VertexId, VertexCover>,
}

/// The smallest `c` certified by DOAD covers for `TNS(A, r) ⊆ TNS(B, r^c)`.
pub fn transfer_exponent(
    tree_a: &BinaryTree,
    ordering_a: &LeafOrdering,
    tree_b: &BinaryTree,
    ordering_b: &LeafOrdering,
) -> Result<TransferReport> {
    let n = tree_a.num_leaves();
    if tree_b.num_leaves() != n || ordering_a.len() != n || ordering_b.len() != n {
        return invalid(format!(
            "leaf-count mismatch: trees have {} and {} leaves, orderings {} and {}",
            n,
            tree_b.num_leaves(),
            ordering_a.len(),
            ordering_b.len()
        ));
    }
    let mut per_vertex = BTreeMap::new();
    for v in tree_b.vertices() {
        let s = ordering_b.apply(tree_b.cos(v));
        let cover = doad_cover_number(tree_a, ordering_a, &s)?;
        let rest = s.complement();
        let complement_cover = if rest.is_empty() {
            None
        } else {
            Some(doad_cover_number(tree_a, ordering_a, &rest)?)
        };
        let exponent = complement_cover.map_or(cover, |c| c.min(cover));
        let set = s.iter().map(|i| i + 1).collect();
        per_vertex.insert(
            v,
            VertexCover {
                set,
                cover,
                complement_cover,
                exponent,
            },
        );
    }
    let exponent = per_vertex.values().map(|c| c.exponent).max().unwrap_or(1);
    Ok(TransferReport {
        exponent,
        per_vertex,
    })
}

/// `HF(r, k) ⊆ TT(r^c, 2^k)` with `c = ⌈k/2⌉`.
pub fn hf_to_tt_bound(k: usize) -> Result<usize> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    Ok(k.div_ceil(2))
}

/// `TT(r, 2^k) ⊆ HF(r^c, k)`: `c = 2` once `k ≥ 3`.
///
/// For `k ≤ 2` every perfect-tree descendant set is an initial segment of
/// the train track or the complement of one, so `c = 1`.
pub fn tt_to_hf_bound(k: usize) -> Result<usize> {
    match k {
        0 => invalid("k must be at least 1"),
        1 | 2 => Ok(1),
        _ => Ok(2),
    }
}

/// Exponents computed by exact cover search on the standard pair
/// `perfect(k)` / `train_track(2^k)` with left-to-right leaves:
/// `(HF → TT, TT → HF)`.
pub fn standard_pair_exponents(k: usize) -> Result<(usize, usize)> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let hf = BinaryTree::perfect(k);
    let tt = BinaryTree::train_track(1 << k)?;
    let id = LeafOrdering::identity(1 << k);
    let forward = transfer_exponent(&hf, &id, &tt, &id)?.exponent;
    let backward = transfer_exponent(&tt, &id, &hf, &id)?.exponent;
    Ok((forward, backward))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_tree_same_order() {
        for tree in [
            BinaryTree::perfect(3),
            BinaryTree::train_track(5).unwrap(),
            BinaryTree::perfect(0),
        ] {
            let id = LeafOrdering::identity(tree.num_leaves());
            assert_eq!(transfer_exponent(&tree, &id, &tree, &id).unwrap().exponent, 1);
        }
    }

    #[test]
    fn standard_pairs_match_closed_forms() {
        for k in 1..=4 {
            let (f, b) = standard_pair_exponents(k).unwrap();
            assert_eq!(f, hf_to_tt_bound(k).unwrap(), "k={k}");
            assert_eq!(b, tt_to_hf_bound(k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn per_vertex_report() {
        let hf = BinaryTree::perfect(2);
        let tt = BinaryTree::train_track(4).unwrap();
        let id = LeafOrdering::identity(4);
        let rep = transfer_exponent(&hf, &id, &tt, &id).unwrap();
        assert_eq!(rep.per_vertex.len(), tt.num_vertices());
        let root = &rep.per_vertex[&0];
        assert_eq!(root.complement_cover, None);
        assert_eq!(root.exponent, 1);
        // {1,2,3} is itself DOAD for the perfect tree: the complement of leaf 4.
        let v = tt.vertices().find(|&v| tt.cos(v).len() == 3).unwrap();
        assert_eq!(rep.per_vertex[&v].cover, 1);
        assert_eq!(rep.per_vertex[&v].complement_cover, Some(1));
    }

    #[test]
    fn mismatch_rejected() {
        let a = BinaryTree::perfect(2);
        let b = BinaryTree::perfect(3);
        assert!(transfer_exponent(&a, &LeafOrdering::identity(4), &b, &LeafOrdering::identity(8)).is_err());
        assert!(hf_to_tt_bound(0).is_err());
    }

    #[test]
    fn json_shape() {
        let t = BinaryTree::perfect(1);
        let id = LeafOrdering::identity(2);
        let v = serde_json::to_value(transfer_exponent(&t, &id, &t, &id).unwrap()).unwrap();
        assert_eq!(v["exponent"], 1);
        assert_eq!(v["per_vertex"]["1"]["set"], serde_json::json!([1]));
    }
}
