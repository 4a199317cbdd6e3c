//! Statistics of word-induced random permutations over free products.
//!
//! A free product `Γ = G_1 * … * G_k` of finite cyclic groups and finitely
//! generated free groups acts on `{1,…,N}` through a uniformly random
//! homomorphism `Γ → Sym(N)`. For a fixed word `γ ∈ Γ`, the image of `γ` is a
//! "γ-random permutation", and this crate computes its local statistics:
//!
//! * exact finite-`N` expectations and moments of fixed-point and short-cycle
//!   counts, as arbitrary-precision rationals ([`exact`]),
//! * the integer limits and Poisson-mixture limit laws of those statistics,
//!   together with the subgroup data that parameterizes them ([`limits`]),
//! * the combinatorial machinery behind both: labeled partial covers of the
//!   wedge space of `Γ` ([`subcover`]) and complete enumeration of their
//!   quotients ([`resolution`]),
//! * Monte Carlo sampling ([`montecarlo`]) and exhaustive enumeration
//!   ([`bruteforce`]) oracles for cross-validation.

pub mod bruteforce;
pub mod exact;
pub mod group;
pub mod limits;
pub mod montecarlo;
mod numutil;
pub mod resolution;
pub mod subcover;

pub use group::{ElementClass, FactorSpec, Presentation, Word};
pub use subcover::SubCover;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("word is trivial")]
    TrivialWord,
    #[error("word has finite order (torsion)")]
    TorsionWord,
    #[error("search budget exceeded ({0} nodes)")]
    BudgetExceeded(u64),
    #[error("enumeration cap exceeded ({0} homomorphisms)")]
    CapExceeded(u128),
    #[error("sub-covers built over different presentations")]
    MixedPresentations,
    #[error("sub-cover is not connected")]
    Disconnected,
    #[error("vertex is not part of the sub-cover")]
    NoSuchVertex,
    #[error("no power of the word lies in the subgroup")]
    NoPowerInSubgroup,
    #[error("invalid sub-cover: {0}")]
    InvalidSubCover(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Node budget for quotient-enumeration searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(10_000_000)
    }
}
