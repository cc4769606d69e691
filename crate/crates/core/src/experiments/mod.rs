//! Overlap experiments across weight processes and the convergent-grid trace.

mod dichotomy;
mod figure1;
mod grid;
mod overlap;

pub use dichotomy::{
    dichotomy_report, ExperimentReport, ModelVerdict, ReportMetadata, ReportRow, Status,
    DEFICIENCY_Z, TRACKING_Z,
};
pub use figure1::{figure1_run, Figure1Trace, TracePoint, FIGURE1_B_GRID, FIGURE1_L};
pub use grid::{build_convergent_grid, ConvergentGrid};
pub use overlap::{
    estimate_expected_overlap, estimate_overlap_curve, CurveDiagnostics, ModelSpec, OverlapCurve,
    MIN_REPS,
};
