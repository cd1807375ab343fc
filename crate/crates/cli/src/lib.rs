//! Command-line and HTTP front ends for `parcc-core`.

pub mod api;
pub mod service;
