//! Shared helpers for integration and acceptance tests.
#![allow(dead_code)]

pub mod bath;
pub mod series;
