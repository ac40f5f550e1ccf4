//! Shared fixtures for the criterion benchmarks.

use peb_core::simulation::{sample_dgp, DgpSpec};
use peb_core::ObservationSet;

/// A sample of size `n` from the reference data-generating process.
pub fn reference_sample(n: usize) -> ObservationSet {
    sample_dgp(&DgpSpec::default(), n, 0xBEEF).expect("reference spec is valid")
}
