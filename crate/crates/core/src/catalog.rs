//! Read-only lookups for the doctor and pharmacist consoles.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auth::{Actor, Permission};
use crate::clock::Clock;
use crate::domain::*;
use crate::ids::{DiseaseId, DrugId, PatientId};
use crate::rules::{self, PatientClinicalContext, Registry};
use crate::store::{ListFilter, Reader, Store};
use crate::Result;

/// What a prescriber checks before composing: demographics, allergies,
/// history and what the patient is currently taking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient: Patient,
    /// Newest first.
    pub prescriptions: Vec<Prescription>,
    pub active_medications: BTreeSet<DrugId>,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    store: Store,
    clock: Arc<dyn Clock>,
    duplicate_window_days: u32,
}

impl Catalog {
    pub fn new(store: Store, clock: Arc<dyn Clock>, duplicate_window_days: u32) -> Self {
        Self { store, clock, duplicate_window_days }
    }

    /// Active patients whose name contains `query`, case-insensitively.
    pub fn search_patients(&self, actor: &Actor, query: &str) -> Result<Vec<Patient>> {
        actor.require(Permission::ViewPatientRecord)?;
        let filter = ListFilter { active: Some(true), ..ListFilter::name(query) };
        let mut found: Vec<Patient> = self.store.list(&filter)?;
        found.sort_by_cached_key(|p| (name_key(&p.full_name), p.id.clone()));
        Ok(found)
    }

    pub fn patient_record(&self, actor: &Actor, id: &PatientId) -> Result<PatientRecord> {
        actor.require(Permission::ViewPatientRecord)?;
        let snapshot = self.store.snapshot()?;
        let patient: Patient = snapshot.require(id.as_str())?;
        let mut prescriptions = snapshot.prescriptions_for_patient(id)?;
        let context =
            PatientClinicalContext::assemble(&patient, &prescriptions, self.clock.now(), self.duplicate_window_days);
        prescriptions.sort_by(|a, b| b.created_at.cmp(&a.created_at).then_with(|| a.id.cmp(&b.id)));
        Ok(PatientRecord { patient, prescriptions, active_medications: context.active_medications })
    }

    pub fn drug(&self, actor: &Actor, id: &DrugId) -> Result<Drug> {
        actor.require(Permission::ViewDrugDetail)?;
        self.store.snapshot()?.require(id.as_str())
    }

    /// Active drugs whose name contains `query`, sorted by name.
    pub fn search_drugs(&self, actor: &Actor, query: &str) -> Result<Vec<Drug>> {
        actor.require(Permission::ViewDrugDetail)?;
        let filter = ListFilter { active: Some(true), ..ListFilter::name(query) };
        let mut found: Vec<Drug> = self.store.list(&filter)?;
        found.sort_by_cached_key(|d| name_key(&d.name));
        Ok(found)
    }

    pub fn diseases(&self, actor: &Actor) -> Result<Vec<Disease>> {
        actor.require(Permission::ViewDrugDetail)?;
        let mut all: Vec<Disease> = self.store.list(&ListFilter::default())?;
        all.sort_by_cached_key(|d| name_key(&d.name));
        Ok(all)
    }

    /// The compose screen's drug menu for a diagnosis.
    pub fn suggested_drugs(&self, actor: &Actor, diagnosis: &DiseaseId) -> Result<Vec<Drug>> {
        actor.require(Permission::ComposeRx)?;
        let snapshot = self.store.snapshot()?;
        let all = ListFilter::default();
        let registry = Registry::new(snapshot.list::<Drug>(&all)?, snapshot.list::<Disease>(&all)?);
        rules::suggest_drugs(diagnosis, &registry)
    }
}
