//! Block-diagonal semidefinite programming.
//!
//! The model is the linear-matrix-inequality form
//!
//! ```text
//!     maximize  c·y   subject to   F₀ + Σ yₖ Fₖ ⪰ 0
//! ```
//!
//! over real symmetric blocks (complex data enters pre-embedded through
//! [`crate::hermlin::realify`]). Diagonal blocks carry scalar inequalities
//! such as variable boxes. The solver is a dense infeasible-start
//! primal-dual path-following method with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector, adequate at desk scale.

mod model;
mod sdpa;
mod solver;

pub use model::{BlockData, BlockSpec, SdpError, SdpProblem, SparseEntry};
pub use sdpa::{parse_sdpa, write_sdpa};
pub use solver::{solve, FeasVerdict, SdpSolution, SdpStatus, SolveOptions};

/// Margin verdict thresholds: feasible if t* ≥ feas_margin, infeasible if
/// t* ≤ −feas_margin, else indeterminate.
pub fn margin_verdict(t_star: f64, feas_margin: f64) -> FeasVerdict {
    if t_star >= feas_margin {
        FeasVerdict::Feasible
    } else if t_star <= -feas_margin {
        FeasVerdict::Infeasible
    } else {
        FeasVerdict::Indeterminate
    }
}
