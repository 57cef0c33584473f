//! Feature selection for efficiency benchmarking of decision-making units
//! (DMUs): given a dataset of input and output quantities, select the `p`
//! outputs (and optionally `p̃` inputs) that optimize a chosen efficiency
//! objective, with a self-contained LP/MILP/convex-MIQP solver underneath.
//!
//! The main pieces:
//!
//! * [`data`] — dataset loading, range normalization, correlations, and
//!   efficiency-distribution summaries;
//! * [`milp`] — the generic model layer and solver stack (revised simplex,
//!   branch-and-bound, outer approximation);
//! * [`dea`] — constant-returns-to-scale input-oriented efficiency scores
//!   over any active subset of inputs and outputs;
//! * [`select`] — the selection formulations (individual and joint, five
//!   objectives, weight/cost/cluster/correlation extensions) and solvers;
//! * [`greedy`] — the nested forward-selection heuristic and warm start;
//! * [`oracle`] — exhaustive subset enumeration, the testing ground truth;
//! * [`game`] — cross-efficiency differences between individually preferred
//!   and jointly optimal selections, support percentages, histograms;
//! * [`report`] — run reports and CSV emission for the CLI.

// Indexed loops are clearer for tableau/matrix operations
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod dea;
pub mod game;
pub mod greedy;
pub mod milp;
pub mod oracle;
pub mod report;
pub mod select;
