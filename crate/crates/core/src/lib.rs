//! Multiply chaotic sets in full shifts and in continued-fraction space:
//! exact construction, verification of the chaotic properties, and the
//! dimension and ergodic estimates that go with them.

pub mod cf;
pub mod construction;
pub mod ddouble;
pub mod dimension;
pub mod error;
pub mod gauss;
pub mod rational;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};

/// Sizes the global worker pool. Only the first call has an effect.
pub fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("thread count must be positive".into()));
    }
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
