//! Tensor network state (TNS) varieties over full binary trees.
//!
//! A tensor `t` in `V_1 ⊗ … ⊗ V_n` belongs to `TNS(T, f)` when, for every
//! vertex `v` of the tree `T`, the flattening of `t` along the leaves below
//! `v` has rank at most `f(v)`. The two trees of interest are the perfect
//! binary tree (hierarchical format, `HF(r, k)`) and the train-track tree
//! (tensor-train format, `TT(r, n)`).
//!
//! The crate provides
//! - [`trees`]: tree construction, descendant leaf sets and exact cover numbers,
//! - [`tensor`]: dense tensors, flattenings and exact/floating ranks,
//! - [`tns`]: rank functions, membership, dimension formula, sampling,
//! - [`transfer`]: containment exponents between two tree formats,
//! - [`witness`]: explicit tensors separating HF from TT and back,
//! - [`harness`]: brute-force oracles and certification sweeps.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod tensor;
pub mod tns;
pub mod transfer;
pub mod trees;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{Arith, Field, Matrix, ModP, Rational};
pub use tensor::{AnyTensor, DenseTensor};
pub use tns::{EffectiveRanks, RankFunction, RankProfile, SubspaceChain};
pub use trees::{BinaryTree, LeafOrdering, LeafSet, TreeSpec};

/// Default relative singular-value cutoff for floating-point ranks.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-9;

/// Deterministic RNG used throughout: ChaCha8 seeded from a `u64`.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Build the crate-wide RNG from a seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
