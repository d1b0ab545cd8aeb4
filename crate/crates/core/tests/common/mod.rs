//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's arithmetic.
#![allow(dead_code)]

pub mod oracles;
