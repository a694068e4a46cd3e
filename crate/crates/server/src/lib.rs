//! HTTP front end and operator commands for [`rxtropic_core`].
//!
//! [`api::router`] builds the axum application; [`cli::run`] is everything
//! behind the `rxtropic` binary.

pub mod api;
pub mod cli;

pub use api::{router, ApiError, ErrorBody};
