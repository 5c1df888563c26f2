#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod event_triggered;
pub mod format;
pub mod graph;
pub mod quad;
pub mod scenarios;

pub use error::{Error, Result};
