//! Benchmark fixtures shared by the criterion targets.

use shine_core::synthetic::{generate, SyntheticData, SyntheticSpec};

/// The default planted-pathway profile: 200 genes, 20 gene sets, 400 subjects.
pub fn default_data() -> SyntheticData {
    generate(&SyntheticSpec::default()).expect("default synthetic profile")
}
