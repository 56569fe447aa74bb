//! Command-line driver: experiment specs, sweeps, comparisons and analysis.

pub mod analyze;
pub mod bench;
pub mod compare;
pub mod run;
pub mod spec;

/// Exit status for a failed tolerance check.
pub const EXIT_TOLERANCE: i32 = 2;
/// Exit status for invalid parameters or a solver size limit.
pub const EXIT_GUARD: i32 = 3;

/// Map an error chain to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<spec::SpecError>().is_some() {
            return EXIT_GUARD;
        }
        if let Some(e) = cause.downcast_ref::<chiralwg::Error>() {
            return if e.is_guard_violation() { EXIT_GUARD } else { 1 };
        }
    }
    1
}
