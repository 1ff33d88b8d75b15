//! HTTP service exposing cases with live re-assessment.

pub mod api;
pub mod ops;
pub mod store;

pub use api::router;
pub use ops::{apply_ops, Op, Rejection};
pub use store::{Store, StoreError};
