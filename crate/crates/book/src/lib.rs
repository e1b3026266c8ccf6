//! Guide chapters compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/quaternions.md")]
pub mod quaternions {}

#[doc = include_str!("../../../book/src/connections.md")]
pub mod connections {}

#[doc = include_str!("../../../book/src/twistor.md")]
pub mod twistor {}

#[doc = include_str!("../../../book/src/fixed-points.md")]
pub mod fixed_points {}

#[doc = include_str!("../../../book/src/swann.md")]
pub mod swann {}

#[doc = include_str!("../../../book/src/quotients.md")]
pub mod quotients {}

#[doc = include_str!("../../../book/src/chern.md")]
pub mod chern {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
