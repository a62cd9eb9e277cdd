//! Scenario-driven front end of the calcination plant model.

pub mod run;
pub mod scenario;
pub mod verify;

/// Process exit status for an error: 1 for bad input, 2 for solver failure.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use claycalc::Error;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse { .. } | Error::Config(_) | Error::Input(_) | Error::Io(_) => 1,
                _ => 2,
            };
        }
    }
    1
}
