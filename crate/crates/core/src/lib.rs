#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbq;
pub mod confset;
pub mod error;
pub mod etz;
pub mod ingest;
pub mod numerics;
pub mod sim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/etz.md")]
    mod etz {}
    #[doc = include_str!("../../../book/src/confset.md")]
    mod confset {}
    #[doc = include_str!("../../../book/src/cbq.md")]
    mod cbq {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
