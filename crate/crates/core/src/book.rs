#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}

#[doc = include_str!("../../../book/src/twist.md")]
pub mod twist {}

#[doc = include_str!("../../../book/src/commuting.md")]
pub mod commuting {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
