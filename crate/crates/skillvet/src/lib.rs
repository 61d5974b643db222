//! Vetting toolkit for voice-assistant skill marketplaces: corpus handling,
//! policy text preparation, data-practice classification, permission
//! traceability, phonetic squatting detection and aggregate reporting.

pub mod analytics;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod phonetics;
pub mod textprep;
pub mod traceability;

pub use error::{Error, Result};
