//! The user guide, compiled straight from the book chapters under
//! `book/src/` so every code block in the book runs under
//! `cargo test --doc` and cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mechanisms.md")]
pub mod mechanisms {}

#[doc = include_str!("../../../book/src/paths.md")]
pub mod paths {}

#[doc = include_str!("../../../book/src/ivp.md")]
pub mod ivp {}

#[doc = include_str!("../../../book/src/semigroup.md")]
pub mod semigroup {}

#[doc = include_str!("../../../book/src/discrete.md")]
pub mod discrete {}

#[doc = include_str!("../../../book/src/montecarlo.md")]
pub mod montecarlo {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
