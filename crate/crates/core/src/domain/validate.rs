use std::collections::HashSet;

use chrono::Utc;

use super::*;

/// Intrinsic invariants of a domain value.
///
/// Returns one message per violated invariant and an empty list when the
/// value is well formed. Invariants that need other records (an indication
/// pointing at a real disease, a prescriber who really is a doctor) are
/// checked by the store when the record is written.
pub trait Validate {
    fn violations(&self) -> Vec<String>;

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// One message per violated invariant; empty when the value is well formed.
pub fn validate_entity(entity: &impl Validate) -> Vec<String> {
    entity.violations()
}

fn require_text(out: &mut Vec<String>, field: &str, value: &str) {
    if value.trim().is_empty() {
        out.push(format!("{field} must be nonempty"));
    }
}

fn require_codes<'a>(out: &mut Vec<String>, field: &str, codes: impl IntoIterator<Item = &'a String>) {
    for code in codes {
        if code.trim().is_empty() {
            out.push(format!("{field} must not contain empty codes"));
        } else if *code != normalize_code(code) {
            out.push(format!("{field} code {code:?} is not normalized"));
        }
    }
}

impl Validate for PractitionerAccount {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        require_text(&mut out, "full_name", &self.full_name);
        require_text(&mut out, "license_number", &self.license_number);
        if self.password_digest.as_str().is_empty() {
            out.push("password_digest must be set".into());
        }
        out
    }
}

impl Validate for Patient {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        require_text(&mut out, "full_name", &self.full_name);
        if self.date_of_birth > Utc::now().date_naive() {
            out.push("date_of_birth must not be in the future".into());
        }
        require_codes(&mut out, "allergies", &self.allergies);
        out
    }
}

impl Validate for Disease {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        require_text(&mut out, "name", &self.name);
        out
    }
}

impl Validate for Drug {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        require_text(&mut out, "name", &self.name);
        require_codes(&mut out, "substance_codes", &self.substance_codes);
        out
    }
}

impl Validate for InteractionRule {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.drug_pair.is_degenerate() {
            out.push("pair drugs must be distinct".into());
        }
        out
    }
}

impl Validate for PrescriptionItem {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.duration_days < 1 {
            out.push(format!("item {}: duration_days must be at least 1", self.drug_id));
        }
        out
    }
}

impl Validate for OverrideRecord {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.reason.trim().is_empty() {
            out.push(format!("override for {}: reason must be nonempty", self.finding_kind));
        }
        out
    }
}

impl Validate for Prescription {
    fn violations(&self) -> Vec<String> {
        use PrescriptionStatus::*;

        let mut out = Vec::new();
        if self.items.is_empty() {
            out.push("items must be nonempty".into());
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(&item.drug_id) {
                out.push(format!("items must not repeat drug {}", item.drug_id));
            }
            out.extend(item.violations());
        }
        for o in &self.overrides {
            out.extend(o.violations());
        }

        let chain = [
            ("created_at", Some(self.created_at)),
            ("sent_at", self.sent_at),
            ("acknowledged_at", self.acknowledged_at),
            ("dispensed_at", self.dispensed_at),
        ];
        let mut previous: Option<(&str, DateTime<Utc>)> = None;
        for (name, at) in chain {
            if let Some(at) = at {
                if let Some((prev_name, prev_at)) = previous {
                    if at < prev_at {
                        out.push(format!("{name} must not precede {prev_name}"));
                    }
                }
                previous = Some((name, at));
            }
        }
        if let Some(cancelled) = self.cancelled_at {
            if cancelled < self.created_at {
                out.push("cancelled_at must not precede created_at".into());
            }
        }

        let needs_pharmacist = matches!(self.status, Acknowledged | Dispensed);
        match (needs_pharmacist, &self.pharmacist_id) {
            (true, None) => out.push(format!("pharmacist_id is required when {}", self.status)),
            (false, Some(_)) => out.push(format!("pharmacist_id must be absent when {}", self.status)),
            _ => {}
        }

        let stamp_required = match self.status {
            Draft => None,
            Sent => Some(("sent_at", self.sent_at)),
            Acknowledged => Some(("acknowledged_at", self.acknowledged_at)),
            Dispensed => Some(("dispensed_at", self.dispensed_at)),
            Cancelled => Some(("cancelled_at", self.cancelled_at)),
        };
        if let Some((name, None)) = stamp_required {
            out.push(format!("{name} is required when {}", self.status));
        }
        out
    }
}
