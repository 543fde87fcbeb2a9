//! Full binary trees, descendant leaf sets and exact cover numbers.
//!
//! Vertices are dense ids `0..|V|` with the root at `0`, numbered
//! breadth-first (left child before right child). Leaf slots are the leaves
//! read left to right, so slot `i` is the `i`-th leaf of the picture. Leaf
//! sets are bitsets over slots, or over tensor factors once an ordering is
//! applied; both are 0-based internally and 1-based in JSON.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type VertexId = usize;

/// A subset of `0..universe`, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafSet {
    universe: usize,
    words: Vec<u64>,
}

impl LeafSet {
    pub fn empty(universe: usize) -> Self {
        LeafSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for i in 0..universe {
            s.insert(i);
        }
        s
    }

    /// Panics if an index is outside the universe.
    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    /// The interval `lo..hi` (half-open, 0-based).
    pub fn range(universe: usize, lo: usize, hi: usize) -> Self {
        Self::from_indices(universe, lo..hi)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.universe, "index {i} outside universe {}", self.universe);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        Self::full(self.universe).difference(self)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.universe, other.universe);
        LeafSet {
            universe: self.universe,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for LeafSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints the set 1-based, e.g. `{1,2,3,5}`.
impl fmt::Display for LeafSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Bijection from leaf slots to tensor factor indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeafOrdering {
    slot_to_factor: Vec<usize>,
    factor_to_slot: Vec<usize>,
}

impl LeafOrdering {
    pub fn identity(n: usize) -> Self {
        LeafOrdering {
            slot_to_factor: (0..n).collect(),
            factor_to_slot: (0..n).collect(),
        }
    }

    /// `perm[slot]` is the 0-based factor index of that slot.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inverse = vec![usize::MAX; n];
        for (slot, &factor) in perm.iter().enumerate() {
            if factor >= n || inverse[factor] != usize::MAX {
                return invalid(format!("ordering {perm:?} is not a permutation of 0..{n}"));
            }
            inverse[factor] = slot;
        }
        Ok(LeafOrdering {
            slot_to_factor: perm,
            factor_to_slot: inverse,
        })
    }

    /// Parse the 1-based JSON/CLI form.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return invalid("orderings are 1-based; found 0");
        }
        Self::new(perm.iter().map(|&i| i - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.slot_to_factor.iter().map(|&i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.slot_to_factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_to_factor.is_empty()
    }

    pub fn factor(&self, slot: usize) -> usize {
        self.slot_to_factor[slot]
    }

    pub fn slot(&self, factor: usize) -> usize {
        self.factor_to_slot[factor]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.slot_to_factor
    }

    pub fn inverse(&self) -> LeafOrdering {
        LeafOrdering {
            slot_to_factor: self.factor_to_slot.clone(),
            factor_to_slot: self.slot_to_factor.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.slot_to_factor.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// Map a set of slots to the set of factors.
    pub fn apply(&self, slots: &LeafSet) -> LeafSet {
        LeafSet::from_indices(slots.universe(), slots.iter().map(|s| self.factor(s)))
    }
}

/// Recursive description of a tree shape, used by the builders.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => l.leaves() + r.leaves(),
        }
    }
}

/// A rooted full binary tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTree {
    children: Vec<Option<(VertexId, VertexId)>>,
    parent: Vec<Option<VertexId>>,
    depth: Vec<usize>,
    leaf_slots: Vec<VertexId>,
    slot_of: Vec<Option<usize>>,
    cos: Vec<LeafSet>,
}

impl BinaryTree {
    /// Build from a children table indexed by vertex id; the root is `0`.
    pub fn from_children(children: Vec<Option<(VertexId, VertexId)>>) -> Result<Self> {
        let nv = children.len();
        if nv == 0 {
            return invalid("a tree needs at least one vertex");
        }
        let mut parent = vec![None; nv];
        for (v, c) in children.iter().enumerate() {
            if let Some((a, b)) = *c {
                for x in [a, b] {
                    if x >= nv {
                        return invalid(format!("vertex {v} has unknown child {x}"));
                    }
                    if x == 0 {
                        return invalid("the root 0 cannot be a child");
                    }
                    if parent[x].is_some() {
                        return invalid(format!("vertex {x} has two parents"));
                    }
                    parent[x] = Some(v);
                }
                if a == b {
                    return invalid(format!("vertex {v} lists child {a} twice"));
                }
            }
        }
        if let Some(v) = (1..nv).find(|&v| parent[v].is_none()) {
            return invalid(format!("vertex {v} has no parent"));
        }

        // Left-to-right DFS gives the leaf slots; it also detects cycles and
        // unreachable parts.
        let mut depth = vec![0; nv];
        let mut seen = vec![false; nv];
        let mut leaf_slots = Vec::new();
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return invalid("children table contains a cycle");
            }
            seen[v] = true;
            match children[v] {
                Some((a, b)) => {
                    depth[a] = depth[v] + 1;
                    depth[b] = depth[v] + 1;
                    stack.push(b);
                    stack.push(a);
                }
                None => leaf_slots.push(v),
            }
        }
        if seen.iter().any(|s| !s) {
            return invalid("tree is not connected");
        }
        let n = leaf_slots.len();
        if nv != 2 * n - 1 {
            return invalid(format!("{nv} vertices but {n} leaves; not a full binary tree"));
        }
        let mut slot_of = vec![None; nv];
        for (s, &v) in leaf_slots.iter().enumerate() {
            slot_of[v] = Some(s);
        }

        let mut cos = vec![LeafSet::empty(n); nv];
        let mut tree = BinaryTree {
            children,
            parent,
            depth,
            leaf_slots,
            slot_of,
            cos: Vec::new(),
        };
        for v in tree.postorder() {
            cos[v] = match tree.children[v] {
                None => LeafSet::from_indices(n, [tree.slot_of[v].unwrap()]),
                Some((a, b)) => cos[a].union(&cos[b]),
            };
        }
        tree.cos = cos;
        Ok(tree)
    }

    /// Build from a shape, numbering vertices breadth-first.
    pub fn from_shape(shape: &Shape) -> Self {
        let mut children = vec![None];
        let mut queue = VecDeque::from([(shape, 0usize)]);
        while let Some((s, id)) = queue.pop_front() {
            if let Shape::Node(l, r) = s {
                let a = children.len();
                children.push(None);
                children.push(None);
                children[id] = Some((a, a + 1));
                queue.push_back((l, a));
                queue.push_back((r, a + 1));
            }
        }
        Self::from_children(children).expect("shapes always build valid trees")
    }

    pub fn to_shape(&self) -> Shape {
        self.shape_at(self.root())
    }

    fn shape_at(&self, v: VertexId) -> Shape {
        match self.children[v] {
            None => Shape::Leaf,
            Some((a, b)) => Shape::Node(Box::new(self.shape_at(a)), Box::new(self.shape_at(b))),
        }
    }

    /// Perfect binary tree of depth `k`: `2^k` leaves, all at depth `k`.
    pub fn perfect(k: usize) -> Self {
        fn shape(k: usize) -> Shape {
            if k == 0 {
                Shape::Leaf
            } else {
                Shape::Node(Box::new(shape(k - 1)), Box::new(shape(k - 1)))
            }
        }
        Self::from_shape(&shape(k))
    }

    /// Train-track tree with `n >= 2` leaves: a left spine of nodes whose
    /// right children are leaves. Slots run from the bottom-left leaf (slot 0)
    /// up to the root's right child (slot `n-1`), so every node's descendant
    /// set is an initial interval.
    pub fn train_track(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("a train-track tree needs n >= 2 leaves, got {n}"));
        }
        let mut shape = Shape::Leaf;
        for _ in 1..n {
            shape = Shape::Node(Box::new(shape), Box::new(Shape::Leaf));
        }
        Ok(Self::from_shape(&shape))
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn num_vertices(&self) -> usize {
        self.children.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_slots.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.num_vertices()
    }

    pub fn children(&self, v: VertexId) -> Option<(VertexId, VertexId)> {
        self.children[v]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_none()
    }

    pub fn leaf_slot(&self, v: VertexId) -> Option<usize> {
        self.slot_of[v]
    }

    pub fn leaf_vertex(&self, slot: usize) -> VertexId {
        self.leaf_slots[slot]
    }

    pub fn leaf_slots(&self) -> &[VertexId] {
        &self.leaf_slots
    }

    pub fn nodes(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| !self.is_leaf(v))
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.num_vertices());
        let mut stack = vec![(self.root(), false)];
        while let Some((v, expanded)) = stack.pop() {
            match (self.children[v], expanded) {
                (Some((a, b)), false) => {
                    stack.push((v, true));
                    stack.push((b, false));
                    stack.push((a, false));
                }
                _ => out.push(v),
            }
        }
        out
    }

    /// Parents before children.
    pub fn preorder(&self) -> Vec<VertexId> {
        let mut out = self.postorder();
        out.reverse();
        out
    }

    /// `cos v`: the leaf slots below `v`.
    pub fn descendant_leaves(&self, v: VertexId) -> Result<&LeafSet> {
        match self.cos.get(v) {
            Some(s) => Ok(s),
            None => invalid(format!("unknown vertex {v}")),
        }
    }

    /// `cos v` without the bounds check.
    pub fn cos(&self, v: VertexId) -> &LeafSet {
        &self.cos[v]
    }

    pub fn to_spec(&self) -> TreeSpec {
        TreeSpec::Explicit {
            children: self
                .children
                .iter()
                .map(|c| c.map(|(a, b)| vec![a, b]))
                .collect(),
        }
    }
}

/// JSON description of a tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TreeSpec {
    Perfect { k: usize },
    Traintrack { n: usize },
    /// `children[v]` is `[left, right]` for nodes and `null` or `[]` for leaves.
    Explicit { children: Vec<Option<Vec<usize>>> },
}

impl TreeSpec {
    pub fn build(&self) -> Result<BinaryTree> {
        match self {
            TreeSpec::Perfect { k } => {
                if *k > 20 {
                    return invalid(format!("perfect tree depth {k} is too large"));
                }
                Ok(BinaryTree::perfect(*k))
            }
            TreeSpec::Traintrack { n } => BinaryTree::train_track(*n),
            TreeSpec::Explicit { children } => {
                let table = children
                    .iter()
                    .enumerate()
                    .map(|(v, c)| match c.as_deref() {
                        None | Some([]) => Ok(None),
                        Some(&[a, b]) => Ok(Some((a, b))),
                        Some(other) => invalid(format!(
                            "vertex {v} must have 0 or 2 children, got {other:?}"
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                BinaryTree::from_children(table)
            }
        }
    }
}

/// All sets `cos v` and `L \ cos v`, deduplicated, in a stable order.
pub fn doad_sets(tree: &BinaryTree) -> Vec<LeafSet> {
    let mut sets = BTreeSet::new();
    for v in tree.vertices() {
        sets.insert(tree.cos(v).clone());
        sets.insert(tree.cos(v).complement());
    }
    sets.into_iter().collect()
}

/// `h(A)`: the least number of descendant sets `cos v` whose union is
/// exactly `A` (a set of leaf slots).
pub fn cos_cover_number(tree: &BinaryTree, a: &LeafSet) -> Result<usize> {
    check_target(tree, a)?;
    let candidates: Vec<LeafSet> = tree.vertices().map(|v| tree.cos(v).clone()).collect();
    Ok(min_exact_cover(a, &candidates).expect("singletons always cover"))
}

/// Least number of DOAD sets of `tree`, mapped to factors through
/// `ordering`, whose union is exactly `s` (a set of factor indices).
pub fn doad_cover_number(tree: &BinaryTree, ordering: &LeafOrdering, s: &LeafSet) -> Result<usize> {
    check_target(tree, s)?;
    if ordering.len() != tree.num_leaves() {
        return invalid(format!(
            "ordering has {} entries but the tree has {} leaves",
            ordering.len(),
            tree.num_leaves()
        ));
    }
    let candidates: Vec<LeafSet> = doad_sets(tree).iter().map(|d| ordering.apply(d)).collect();
    Ok(min_exact_cover(s, &candidates).expect("singletons always cover"))
}

fn check_target(tree: &BinaryTree, s: &LeafSet) -> Result<()> {
    if s.universe() != tree.num_leaves() {
        return invalid(format!(
            "leaf set over {} elements used with a tree of {} leaves",
            s.universe(),
            tree.num_leaves()
        ));
    }
    if s.is_empty() {
        return invalid("cover numbers are defined for non-empty sets only");
    }
    Ok(())
}

/// Minimum number of candidate sets whose union equals `target` exactly,
/// or `None` if no union does. Iterative deepening on the count; only
/// candidates inside `target` can take part in an exact union.
pub fn min_exact_cover(target: &LeafSet, candidates: &[LeafSet]) -> Option<usize> {
    if target.is_empty() {
        return Some(0);
    }
    let mut usable: Vec<LeafSet> = candidates
        .iter()
        .filter(|c| !c.is_empty() && c.is_subset(target))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    usable.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let covered = usable.iter().fold(LeafSet::empty(target.universe()), |acc, c| acc.union(c));
    if &covered != target {
        return None;
    }
    let upper = greedy_cover(target, &usable);
    let largest = usable[0].len();
    let lower = target.len().div_ceil(largest);
    (lower..upper)
        .find(|&d| cover_within(target, &usable, largest, d))
        .or(Some(upper))
}

fn greedy_cover(target: &LeafSet, usable: &[LeafSet]) -> usize {
    let mut left = target.clone();
    let mut count = 0;
    while !left.is_empty() {
        let best = usable
            .iter()
            .max_by_key(|c| c.intersection(&left).len())
            .expect("usable sets cover the target");
        left = left.difference(best);
        count += 1;
    }
    count
}

fn cover_within(left: &LeafSet, usable: &[LeafSet], largest: usize, depth: usize) -> bool {
    if left.is_empty() {
        return true;
    }
    if depth == 0 || left.len() > depth * largest {
        return false;
    }
    let e = left.first().unwrap();
    usable
        .iter()
        .filter(|c| c.contains(e))
        .any(|c| cover_within(&left.difference(c), usable, largest, depth - 1))
}

/// `α(i)`: number of ones in the binary expansion of `i`.
pub fn ones_count(i: u64) -> u32 {
    i.count_ones()
}

/// Every full binary tree shape with `n` leaves, up to swapping children.
/// Each unordered shape appears once, with the larger subtree (in the
/// `Shape` order) on the left.
pub fn full_binary_shapes(n: usize) -> Vec<Shape> {
    if n == 0 {
        return Vec::new();
    }
    let mut table: Vec<Vec<Shape>> = vec![Vec::new(), vec![Shape::Leaf]];
    for m in 2..=n {
        let mut out = BTreeSet::new();
        for left in 1..m {
            let right = m - left;
            if left < right {
                continue;
            }
            for a in &table[left] {
                for b in &table[right] {
                    if left == right && a < b {
                        continue;
                    }
                    out.insert(Shape::Node(Box::new(a.clone()), Box::new(b.clone())));
                }
            }
        }
        table.push(out.into_iter().collect());
    }
    table.swap_remove(n)
}
