use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{tables, IndexTable, Reader, RecordTable};
use crate::domain::*;
use crate::Result;

/// Narrows a `list` call. Fields that make no sense for a record kind are
/// ignored by it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListFilter {
    pub status: Option<PrescriptionStatus>,
    /// Case-insensitive substring of the record's name.
    pub name_contains: Option<String>,
    pub active: Option<bool>,
}

impl ListFilter {
    pub fn status(status: PrescriptionStatus) -> Self {
        Self { status: Some(status), ..Self::default() }
    }

    pub fn name(fragment: impl Into<String>) -> Self {
        Self { name_contains: Some(fragment.into()), ..Self::default() }
    }

    pub fn active(active: bool) -> Self {
        Self { active: Some(active), ..Self::default() }
    }

    fn accepts(&self, name: Option<&str>, active: Option<bool>, status: Option<PrescriptionStatus>) -> bool {
        let name_ok = match (&self.name_contains, name) {
            (Some(fragment), Some(name)) => name.to_lowercase().contains(&fragment.to_lowercase()),
            _ => true,
        };
        let active_ok = match (self.active, active) {
            (Some(want), Some(have)) => want == have,
            _ => true,
        };
        let status_ok = match (self.status, status) {
            (Some(want), Some(have)) => want == have,
            _ => true,
        };
        name_ok && active_ok && status_ok
    }
}

/// A domain type the store knows how to persist.
pub trait Record: Serialize + DeserializeOwned + Validate + Clone {
    const KIND: &'static str;
    const TABLE: RecordTable;
    const INDEX: Option<IndexTable> = None;
    /// Non-unique index from [`Record::group_key`] to ids.
    const GROUP: Option<IndexTable> = None;

    fn id(&self) -> &str;

    /// Key of the group this record is listed under in `GROUP`.
    fn group_key(&self) -> Option<String> {
        None
    }

    /// Natural key that must be unique within the kind, when there is one.
    fn unique_key(&self) -> Option<String> {
        None
    }

    /// How a uniqueness clash is described to the caller.
    fn describe_unique(&self) -> String {
        format!("{} {}", Self::KIND, self.id())
    }

    fn matches(&self, filter: &ListFilter) -> bool;

    /// Invariants that depend on other stored records.
    fn reference_violations<R: Reader>(&self, _reader: &R) -> Result<Vec<String>> {
        Ok(Vec::new())
    }
}

impl Record for PractitionerAccount {
    const KIND: &'static str = "practitioner";
    const TABLE: RecordTable = tables::PRACTITIONERS;
    const INDEX: Option<IndexTable> = Some(tables::LICENSE_INDEX);

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn unique_key(&self) -> Option<String> {
        Some(name_key(&self.license_number))
    }

    fn describe_unique(&self) -> String {
        format!("account with license number {}", self.license_number)
    }

    fn matches(&self, filter: &ListFilter) -> bool {
        filter.accepts(Some(&self.full_name), Some(self.active), None)
    }
}

impl Record for Patient {
    const KIND: &'static str = "patient";
    const TABLE: RecordTable = tables::PATIENTS;

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn matches(&self, filter: &ListFilter) -> bool {
        filter.accepts(Some(&self.full_name), Some(self.active), None)
    }
}

impl Record for Disease {
    const KIND: &'static str = "disease";
    const TABLE: RecordTable = tables::DISEASES;
    const INDEX: Option<IndexTable> = Some(tables::DISEASE_NAME_INDEX);

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn unique_key(&self) -> Option<String> {
        Some(name_key(&self.name))
    }

    fn describe_unique(&self) -> String {
        format!("disease named {}", self.name)
    }

    fn matches(&self, filter: &ListFilter) -> bool {
        filter.accepts(Some(&self.name), None, None)
    }
}

impl Record for Drug {
    const KIND: &'static str = "drug";
    const TABLE: RecordTable = tables::DRUGS;
    const INDEX: Option<IndexTable> = Some(tables::DRUG_NAME_INDEX);

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn unique_key(&self) -> Option<String> {
        Some(name_key(&self.name))
    }

    fn describe_unique(&self) -> String {
        format!("drug named {}", self.name)
    }

    fn matches(&self, filter: &ListFilter) -> bool {
        filter.accepts(Some(&self.name), Some(self.active), None)
    }

    fn reference_violations<R: Reader>(&self, reader: &R) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for disease in &self.indications {
            if reader.get::<Disease>(disease.as_str())?.is_none() {
                out.push(format!("indication {disease} does not refer to an existing disease"));
            }
        }
        Ok(out)
    }
}

impl Record for InteractionRule {
    const KIND: &'static str = "interaction";
    const TABLE: RecordTable = tables::INTERACTIONS;
    const INDEX: Option<IndexTable> = Some(tables::PAIR_INDEX);

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn unique_key(&self) -> Option<String> {
        Some(self.drug_pair.key())
    }

    fn describe_unique(&self) -> String {
        format!(
            "interaction rule for {} and {}",
            self.drug_pair.first(),
            self.drug_pair.second()
        )
    }

    fn matches(&self, _filter: &ListFilter) -> bool {
        true
    }

    fn reference_violations<R: Reader>(&self, reader: &R) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for drug in [self.drug_pair.first(), self.drug_pair.second()] {
            if reader.get::<Drug>(drug.as_str())?.is_none() {
                out.push(format!("drug {drug} does not exist"));
            }
        }
        Ok(out)
    }
}

impl Record for Prescription {
    const KIND: &'static str = "prescription";
    const TABLE: RecordTable = tables::PRESCRIPTIONS;
    const GROUP: Option<IndexTable> = Some(tables::RX_BY_PATIENT);

    fn id(&self) -> &str {
        self.id.as_str()
    }

    fn group_key(&self) -> Option<String> {
        Some(self.patient_id.to_string())
    }

    fn matches(&self, filter: &ListFilter) -> bool {
        filter.accepts(None, None, Some(self.status))
    }

    fn reference_violations<R: Reader>(&self, reader: &R) -> Result<Vec<String>> {
        let mut out = Vec::new();
        if reader.get::<Patient>(self.patient_id.as_str())?.is_none() {
            out.push(format!("patient {} does not exist", self.patient_id));
        }
        if reader.get::<Disease>(self.diagnosis.as_str())?.is_none() {
            out.push(format!("diagnosis {} does not exist", self.diagnosis));
        }
        for drug in self.drug_ids() {
            if reader.get::<Drug>(drug.as_str())?.is_none() {
                out.push(format!("drug {drug} does not exist"));
            }
        }
        let role_of = |id: &str| -> Result<Option<Role>> {
            Ok(reader.get::<PractitionerAccount>(id)?.map(|a| a.role))
        };
        if role_of(self.prescriber_id.as_str())? != Some(Role::Doctor) {
            out.push("prescriber must be a DOCTOR account".into());
        }
        if let Some(pharmacist) = &self.pharmacist_id {
            if role_of(pharmacist.as_str())? != Some(Role::Pharmacist) {
                out.push("pharmacist_id must be a PHARMACIST account".into());
            }
        }
        for o in &self.overrides {
            if role_of(o.actor_id.as_str())? != Some(Role::Doctor) {
                out.push(format!("override for {} must be made by a DOCTOR", o.finding_kind));
            }
        }
        Ok(out)
    }
}
