#![no_std]
extern crate alloc;

pub mod error;
pub mod fastmod;
pub mod linalg;
pub mod modforms;
pub mod msymb;
pub mod nt;
pub mod padic;
pub mod qlattice;
pub mod recognize;
pub mod rigidprod;

pub use error::{Error, Result};
