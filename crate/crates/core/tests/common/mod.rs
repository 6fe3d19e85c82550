//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod gen;
pub mod roundtrip;
pub mod wire;
