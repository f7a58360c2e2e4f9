//! Exact-arithmetic gap satisfiability for bounded mixed-integer bilinear
//! systems, with a multi-priced timed automaton front-end.
//!
//! The solver decides the gap variant of feasibility for constraint systems
//! mixing integer and real variables under bilinear rows `x^T A_i y + b_i^T y <= c_i`:
//! an instance that is satisfiable with slack `eps` on every bilinear row must
//! be answered SAT, an unsatisfiable instance must be answered UNSAT, and
//! anything in between may be answered either way.  Every SAT answer carries a
//! rational witness that is re-verified by exact substitution; every UNSAT
//! answer carries a refutation tree whose leaves are Farkas or interval
//! certificates that can be re-checked offline.
//!
//! Module map:
//! - [`geometry`]: exact rational LP (Bland pivoting, Farkas certificates),
//!   polyhedron vertex enumeration, directional widths.
//! - [`semilinear`]: hybrid linear set decompositions of integer solution
//!   sets and the change-of-variables substitution driving the recursion.
//! - [`mib`]: the mixed-integer bilinear system model, slack checking,
//!   boundedness, standard-form transformation.
//! - [`relax`]: the constant ledger (kappa bounds, flatness bound, width
//!   direction set) and construction of the relaxed real system.
//! - [`realfeas`]: certified feasibility kernel for bounded degree-2 systems
//!   (branch-and-prune with exact interval arithmetic and Farkas pruning).
//! - [`engine`]: the recursive gap decision procedure: base case, relaxation,
//!   rounding via lattice width, splitting, and a racing witness search.
//! - [`mpta`]: multi-priced timed automata, run semantics, bounded integer
//!   run enumeration, and the master-system reduction for gap domination.
//! - [`json`]: canonical JSON formats shared with the CLI.

pub mod engine;
pub mod geometry;
pub mod json;
pub mod mib;
pub mod mpta;
pub mod num;
pub mod realfeas;
pub mod relax;
pub mod semilinear;
pub mod verify;

pub use num::{Int, Rat};
