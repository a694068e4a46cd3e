//! Plain-text copy of a prescription for the patient to take elsewhere.
//!
//! ```text
//! RXTROPIC PRESCRIPTION <id>
//! PATIENT: <full_name> DOB:<YYYY-MM-DD>
//! PRESCRIBER: <full_name> LIC:<license_number>
//! DIAGNOSIS: <disease name>
//! - <drug name> | <dose> | <frequency> | <duration_days>d | <instructions>
//! PRINTED: <ISO-8601 UTC timestamp>
//! ```
//!
//! UTF-8, every line terminated by LF. Apart from the last line the output
//! depends only on the records.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::domain::{Disease, Drug, Patient, PractitionerAccount, Prescription};
use crate::ids::DrugId;

/// Keeps a field on its own line.
fn one_line(s: &str) -> String {
    s.replace(['\r', '\n'], " ")
}

pub fn render(
    rx: &Prescription,
    patient: &Patient,
    prescriber: &PractitionerAccount,
    diagnosis: &Disease,
    drug_lookup: impl Fn(&DrugId) -> Option<Drug>,
    printed_at: DateTime<Utc>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "RXTROPIC PRESCRIPTION {}", rx.id);
    let _ = writeln!(
        out,
        "PATIENT: {} DOB:{}",
        one_line(&patient.full_name),
        patient.date_of_birth.format("%Y-%m-%d")
    );
    let _ = writeln!(
        out,
        "PRESCRIBER: {} LIC:{}",
        one_line(&prescriber.full_name),
        one_line(&prescriber.license_number)
    );
    let _ = writeln!(out, "DIAGNOSIS: {}", one_line(&diagnosis.name));
    for item in &rx.items {
        let name = drug_lookup(&item.drug_id).map_or_else(|| item.drug_id.to_string(), |d| d.name);
        let _ = writeln!(
            out,
            "- {} | {} | {} | {}d | {}",
            one_line(&name),
            one_line(&item.dose),
            one_line(&item.frequency),
            item.duration_days,
            one_line(&item.instructions)
        );
    }
    let _ = writeln!(
        out,
        "PRINTED: {}",
        printed_at.to_rfc3339_opts(SecondsFormat::Secs, true)
    );
    out
}
