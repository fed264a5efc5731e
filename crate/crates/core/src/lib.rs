//! Slotting and order-picking evaluation for fleets of automated drug
//! dispensing machines.
//!
//! The pipeline runs in four steps:
//!
//! 1. [`correlation`] turns an order history into demand frequencies and a
//!    pairwise Jaccard similarity matrix.
//! 2. [`slotting`] groups drugs onto machines (Stage I) and places each
//!    machine's bins on rack locations (Stage II), giving the FA, ICA,
//!    SSFA and SSCA strategies.
//! 3. [`picking`] splits each order over machines, routes the crane through
//!    both I/O points and prices the overlap with pharmacist sorting.
//! 4. [`datagen`] reads and writes the CSV formats and synthesises
//!    correlated order histories.

pub mod correlation;
pub mod datagen;
pub mod error;
pub mod model;
pub mod picking;
pub mod slotting;

pub use error::{Error, Result};
