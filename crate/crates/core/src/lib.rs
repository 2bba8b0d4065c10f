//! Real-normalized differentials of the second kind on odd hyperelliptic
//! curves.

pub mod curve;
pub mod differential;
pub mod error;
pub mod homology;
pub mod io;
pub mod leaf;
pub mod periods;
pub mod poly;
pub mod flow;
pub mod quad;
pub mod rn;
pub mod series;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
    #[doc = include_str!("../../../book/src/real_normalized.md")]
    mod real_normalized {}
    #[doc = include_str!("../../../book/src/zeros.md")]
    mod zeros {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/leaves.md")]
    mod leaves {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
