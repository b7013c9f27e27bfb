//! The guide's chapters, compiled as doc-tests so every listing keeps
//! building against the current library.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../book/src/distances.md")]
pub mod distances {}
#[doc = include_str!("../../book/src/collaborations.md")]
pub mod collaborations {}
#[doc = include_str!("../../book/src/indicators.md")]
pub mod indicators {}
#[doc = include_str!("../../book/src/proximity.md")]
pub mod proximity {}
#[doc = include_str!("../../book/src/efficiency.md")]
pub mod efficiency {}
#[doc = include_str!("../../book/src/synthetic.md")]
pub mod synthetic {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
