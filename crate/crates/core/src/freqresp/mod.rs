//! Frequency responses, loop functions and stability margins.

pub mod evaluate;
pub mod loops;
pub mod margins;
pub mod report;
pub mod response;

pub use evaluate::{dense_transfer, HessenbergSystem, ProjectedPath};
pub use loops::{coupled_margins, loop_functions, LoopResponses};
pub use margins::{stability_margins, stability_margins_exact, LoopMargins, MarginResult};
pub use response::{default_grid, log_grid, FrequencyResponse, LoopFunction};
pub use report::{bode_csv, loop_functions_csv, margins_csv, nichols_csv};
