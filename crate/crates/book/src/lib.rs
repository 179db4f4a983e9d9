//! Guide chapters compiled as doc-tests.
//!
//! mdbook cannot run listings that depend on workspace crates, so each
//! chapter is included here as the documentation of an empty module and
//! `cargo test --doc -p slagwall-book` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/level-sets.md")]
pub mod level_sets {}
#[doc = include_str!("../../../book/src/construction.md")]
pub mod construction {}
#[doc = include_str!("../../../book/src/stability.md")]
pub mod stability {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/bundles.md")]
pub mod bundles {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
