//! Exact solvers for online bin stretching games.
//!
//! * [`lower`]: the adversary game over integer item sizes, whose min-max
//!   value is a lower bound on the optimal stretching factor.
//! * [`upper`]: the item-class game with adversarial overflows, whose
//!   min-max value is an upper bound and whose strategies are algorithms.
//! * [`proofs`]: strategy trees as canonical JSON, plus verifiers that only
//!   rely on the game rules and [`feasibility`].
//! * [`lifting`]: wraps an integer-size policy into an upper-game algorithm
//!   and measures its worst case.
//! * [`bounds`]: the closed-form relations between the two games.

pub mod bounds;
pub mod feasibility;
pub mod lifting;
pub mod lower;
pub mod policy;
pub mod proofs;
pub mod search;
pub mod types;
pub mod upper;

pub use feasibility::{find_packing, fits, repack_incremented, FeasibilityCache, Packing};
pub use lower::{algorithm_policy, extract_adversary_strategy, legal_items_lower, solve_lower, LowerSolver, LowerState};
pub use policy::{OnlinePolicy, PolicyError};
pub use proofs::{AdversaryNode, AlgorithmNode, ProofDocument, ProofError};
pub use search::{SolveError, SolveOptions};
pub use types::{canonicalize, distinct_bin_moves, Config, ItemMultiset, LoadVector, OverflowLegality, Score};
pub use upper::{extract_algorithm_strategy, legal_moves_upper, solve_upper, UpperSolver, UpperState};
