//! Random test profiles, inequality verification suites, parameter sweeps and
//! report serialization.

pub mod report;
pub mod samples;
pub mod sweep;
pub mod verify;

pub use report::{Check, Report};
pub use samples::{generate_samples, SampleSpec};
pub use sweep::{run_sweep, write_csv, SweepRecord, SweepTasks};
pub use verify::{verify_inequalities, ConstantSource, Suite, VerifyReport, Violation};
