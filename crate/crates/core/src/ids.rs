//! Opaque record identifiers.
//!
//! Identifiers are 128 random bits rendered as 32 lowercase hex digits, so
//! they leak nothing about creation order or volume.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Generates a fresh 128-bit identifier as lowercase hex.
pub fn new_id() -> String {
    let bytes: [u8; 16] = rand::rng().random();
    hex::encode(bytes)
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new() -> Self {
                Self(new_id())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Default for $name {
            fn default() -> Self {
                Self::new()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Identifies a practitioner account (administrator, doctor or pharmacist).
    AccountId
);
id_type!(PatientId);
id_type!(DrugId);
id_type!(DiseaseId);
id_type!(
    /// Identifies an interaction rule. The drug pair is the natural key; this
    /// id only gives the rule a stable address for editing.
    RuleId
);
id_type!(PrescriptionId);
