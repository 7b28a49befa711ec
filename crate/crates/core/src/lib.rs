//! Exact point counts, trace-formula characters and cuspidal-type characters
//! for level-m Deligne-Lusztig coverings of `GL_2` over `F_q[[t]]`.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod adlv;
pub mod bhtypes;
pub mod cache;
pub mod chars;
pub mod cyclo;
pub mod error;
pub mod fftower;
pub mod fingroup;
pub mod fppoly;
pub mod groups;
pub mod linalg;
pub mod suites;
pub mod trace;
pub mod trunc;

pub use error::{Error, Result};
