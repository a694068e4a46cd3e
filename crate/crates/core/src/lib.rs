//! Electronic prescribing engine.
//!
//! Doctors compose prescriptions, a rules engine screens them against the
//! patient's allergies, active medications and diagnosis, and pharmacists
//! acknowledge, dispense and print them. Every mutating action lands in an
//! append-only audit log kept in the same embedded store as the records.
//!
//! The pieces are usable on their own, but most callers start from
//! [`Service`], which wires them together around one [`store::Store`]:
//!
//! ```no_run
//! use rxtropic_core::{Service, ServiceConfig, store::Store};
//!
//! let store = Store::open("rxtropic.redb")?;
//! let service = Service::new(store, ServiceConfig::default());
//! let session = service.auth.login("ADM-0001", "correct horse battery")?;
//! # Ok::<(), rxtropic_core::Error>(())
//! ```

pub mod admin;
pub mod auth;
pub mod catalog;
pub mod clock;
pub mod domain;
mod error;
pub mod fixture;
pub mod ids;
pub mod print;
pub mod rules;
pub mod store;
pub mod tooling;
pub mod workflow;

mod service;

pub use error::{Error, Result};
pub use service::{Service, ServiceConfig};
