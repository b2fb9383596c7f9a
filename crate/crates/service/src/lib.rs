//! HTTP API and command-line front end over `guielicit-core`.

pub mod api;
pub mod cli;
pub mod error;
pub mod runtime;
pub mod sessions;

pub use api::{router, AppState};
pub use error::ApiError;
