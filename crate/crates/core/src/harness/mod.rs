//! Experiment presets, the sweep runner and result I/O.

pub mod presets;
pub mod run;
pub mod spec;
pub mod summary;
pub mod table;

pub use presets::{preset, PRESETS};
pub use run::{run_drop, run_experiment};
pub use spec::{ExperimentSpec, SweepParam};
pub use summary::{summarize, CurvePoint};
pub use table::{write_cost_csv, GridFailure, ResultRow, ResultTable, COST_COLUMNS, RUN_COLUMNS};
