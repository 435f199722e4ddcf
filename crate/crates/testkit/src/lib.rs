//! Oracles and fixtures shared by the hybridgnn test suites.
//!
//! Everything here is written against the definitions directly and shares no
//! code paths with the library beyond its data types.

pub mod fixtures;
pub mod grad;
pub mod laws;
pub mod oracle;
