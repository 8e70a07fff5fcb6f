//! mdbook can't link code listings against workspace crates, so each chapter
//! is pulled in here and `cargo test --doc` runs it. One module per chapter
//! keeps failures traceable.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/warning.md")]
pub mod warning {}
#[doc = include_str!("../../../book/src/routing.md")]
pub mod routing {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/predictor.md")]
pub mod predictor {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
