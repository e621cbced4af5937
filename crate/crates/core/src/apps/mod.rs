//! The two application families: network utility maximization with single-path
//! routing and dynamic spectrum management. Oracles for primal and dual values and
//! end-to-end gap reports.

pub mod concave;
pub mod dsm;
pub mod num;
pub mod report;

pub use concave::DualSearch;
pub use dsm::{build_dsm, dsm_dual_grid, dsm_primal_grid, DsmDual, DsmInstance, DsmPrimal};
pub use num::{build_num, build_num_with_paths, num_dual_opt, num_dual_value, num_primal_exact, NumInstance, NumPrimal, Utility};
pub use report::{dsm_gap_report, dsm_table, num_gap_report, num_table, Estimate, Family, GapReport, Instance, Verdicts};
