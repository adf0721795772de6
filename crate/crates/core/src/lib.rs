//! Bicriteria approximation solvers for node-capacitated network design.
//!
//! The crate covers the single-sink problem (unsplittable demands to one
//! sink under a uniform node capacity), the multicommodity problem (unit
//! request pairs), and energy-efficient routing through a tiered reduction
//! to the multicommodity problem. Exact enumeration oracles for small
//! instances back every approximation audit.

pub mod bench;
pub mod clustering;
pub mod energy;
pub mod error;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod io;
pub mod mcnc;
pub mod oracle;
pub mod ssnc;
pub mod steiner;

pub use error::{Error, Result};
