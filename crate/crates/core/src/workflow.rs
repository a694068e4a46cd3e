//! The prescription lifecycle.
//!
//! ```text
//!   compose ─► DRAFT ──send──► SENT ──acknowledge──► ACKNOWLEDGED ──dispense──► DISPENSED
//!                │               │
//!                └────cancel─────┴──────► CANCELLED
//! ```
//!
//! Only the prescribing doctor may edit, send or cancel, and only before a
//! pharmacist has acknowledged. Each operation runs in a single store
//! transaction: screening, the status compare-and-set and the audit entry
//! either all happen or none do, which is what lets exactly one of several
//! racing pharmacists acknowledge a prescription.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::auth::{Actor, Permission};
use crate::clock::Clock;
use crate::domain::*;
use crate::ids::{AccountId, DiseaseId, PatientId, PrescriptionId};
use crate::print;
use crate::rules::{self, Formulary, PatientClinicalContext};
use crate::store::{AuditEvent, ListFilter, Reader, Store};
use crate::{Error, Result};

/// A prescriber's justification for one kind of warning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideRequest {
    pub finding_kind: FindingKind,
    pub reason: String,
}

impl OverrideRequest {
    pub fn new(finding_kind: FindingKind, reason: impl Into<String>) -> Self {
        Self { finding_kind, reason: reason.into() }
    }
}

/// A row of the pharmacy queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrescriptionSummary {
    pub id: PrescriptionId,
    pub status: PrescriptionStatus,
    pub patient_id: PatientId,
    pub patient_name: String,
    pub prescriber_id: AccountId,
    pub prescriber_name: String,
    pub diagnosis: DiseaseId,
    pub diagnosis_name: String,
    pub item_count: usize,
    pub sent_at: Option<DateTime<Utc>>,
    pub pharmacist_id: Option<AccountId>,
}

#[derive(Debug, Clone)]
pub struct Workflow {
    store: Store,
    clock: Arc<dyn Clock>,
    duplicate_window_days: u32,
}

fn ensure_prescriber(actor: &Actor, rx: &Prescription) -> Result<()> {
    if rx.prescriber_id != actor.account_id {
        return Err(Error::NotPrescriber);
    }
    Ok(())
}

fn event(at: DateTime<Utc>, actor: &Actor, action: &str, rx: &PrescriptionId) -> AuditEvent {
    AuditEvent::new(at, actor.account_id.as_str(), action, "prescription", rx.as_str())
}

impl Workflow {
    pub fn new(store: Store, clock: Arc<dyn Clock>, duplicate_window_days: u32) -> Self {
        Self { store, clock, duplicate_window_days }
    }

    /// Current time, but never earlier than anything already recorded on
    /// the prescription, so lifecycle timestamps stay ordered.
    fn stamp(&self, rx: &Prescription) -> DateTime<Utc> {
        self.clock.now().max(rx.last_event_at())
    }

    fn check_inputs<R: Reader>(
        reader: &R,
        patient_id: &PatientId,
        diagnosis: &DiseaseId,
        items: &[PrescriptionItem],
    ) -> Result<()> {
        match reader.get::<Patient>(patient_id.as_str())? {
            Some(p) if p.active => {}
            _ => return Err(Error::UnknownPatient(patient_id.to_string())),
        }
        if reader.get::<Disease>(diagnosis.as_str())?.is_none() {
            return Err(Error::UnknownDisease(diagnosis.to_string()));
        }
        for item in items {
            match reader.get::<Drug>(item.drug_id.as_str())? {
                Some(d) if d.active => {}
                _ => return Err(Error::UnknownDrug(item.drug_id.to_string())),
            }
        }
        Ok(())
    }

    fn screen<R: Reader>(&self, reader: &R, rx: &Prescription, as_of: DateTime<Utc>) -> Result<Vec<ValidationFinding>> {
        let patient = reader
            .get::<Patient>(rx.patient_id.as_str())?
            .ok_or_else(|| Error::UnknownPatient(rx.patient_id.to_string()))?;
        let history = reader.prescriptions_for_patient(&rx.patient_id)?;
        let context = PatientClinicalContext::assemble(&patient, &history, as_of, self.duplicate_window_days);
        let formulary = Formulary::load(reader)?;
        rules::validate(&rx.diagnosis, &rx.items, &context, &formulary, self.duplicate_window_days)
    }

    pub fn compose(
        &self,
        actor: &Actor,
        patient_id: &PatientId,
        diagnosis: &DiseaseId,
        items: Vec<PrescriptionItem>,
    ) -> Result<Prescription> {
        actor.require(Permission::ComposeRx)?;
        let now = self.clock.now();
        self.store.write(|tx| {
            Self::check_inputs(tx, patient_id, diagnosis, &items)?;
            let rx = Prescription {
                id: PrescriptionId::new(),
                patient_id: patient_id.clone(),
                prescriber_id: actor.account_id.clone(),
                diagnosis: diagnosis.clone(),
                items,
                status: PrescriptionStatus::Draft,
                overrides: Vec::new(),
                created_at: now,
                sent_at: None,
                acknowledged_at: None,
                dispensed_at: None,
                cancelled_at: None,
                pharmacist_id: None,
            };
            let violations = rx.violations();
            if !violations.is_empty() {
                return Err(Error::Validation(violations));
            }
            tx.put(&rx)?;
            tx.append_audit(event(now, actor, "prescription.compose", &rx.id).detail(json!({
                "patient_id": rx.patient_id,
                "diagnosis": rx.diagnosis,
                "items": rx.items.len(),
            })))?;
            Ok(rx)
        })
    }

    /// Screens a draft against the patient's current record. Read only.
    pub fn preview_findings(&self, actor: &Actor, id: &PrescriptionId) -> Result<Vec<ValidationFinding>> {
        actor.require(Permission::ComposeRx)?;
        let snapshot = self.store.snapshot()?;
        let rx: Prescription = snapshot.require(id.as_str())?;
        ensure_prescriber(actor, &rx)?;
        if rx.status != PrescriptionStatus::Draft {
            return Err(Error::wrong_state("preview", rx.status));
        }
        self.screen(&snapshot, &rx, self.clock.now())
    }

    /// Replaces the items and diagnosis of a draft. Any overrides are
    /// dropped since they answered the old findings.
    pub fn edit_draft(
        &self,
        actor: &Actor,
        id: &PrescriptionId,
        items: Vec<PrescriptionItem>,
        diagnosis: &DiseaseId,
    ) -> Result<Prescription> {
        actor.require(Permission::ComposeRx)?;
        self.store.write(|tx| {
            let mut rx: Prescription = tx.require(id.as_str())?;
            ensure_prescriber(actor, &rx)?;
            if rx.status != PrescriptionStatus::Draft {
                return Err(Error::wrong_state("edit", rx.status));
            }
            Self::check_inputs(tx, &rx.patient_id, diagnosis, &items)?;
            rx.items = items;
            rx.diagnosis = diagnosis.clone();
            rx.overrides.clear();
            let violations = rx.violations();
            if !violations.is_empty() {
                return Err(Error::Validation(violations));
            }
            tx.put(&rx)?;
            tx.append_audit(event(self.stamp(&rx), actor, "prescription.edit", &rx.id).detail(json!({
                "diagnosis": rx.diagnosis,
                "items": rx.items.len(),
            })))?;
            Ok(rx)
        })
    }

    /// Screens the draft and, if nothing blocks and every warning kind has
    /// an override with a reason, moves it to SENT.
    pub fn send(&self, actor: &Actor, id: &PrescriptionId, overrides: &[OverrideRequest]) -> Result<Prescription> {
        actor.require(Permission::SendRx)?;
        self.store.write(|tx| {
            let rx: Prescription = tx.require(id.as_str())?;
            ensure_prescriber(actor, &rx)?;
            if rx.status != PrescriptionStatus::Draft {
                return Err(Error::wrong_state("send", rx.status));
            }
            let at = self.stamp(&rx);
            let findings = self.screen(tx, &rx, at)?;

            let blocks: Vec<_> = findings
                .iter()
                .filter(|f| f.severity == FindingSeverity::Block)
                .cloned()
                .collect();
            if !blocks.is_empty() {
                return Err(Error::Blocked(blocks));
            }

            let mut reasons: BTreeMap<FindingKind, &str> = BTreeMap::new();
            for o in overrides {
                let reason = o.reason.trim();
                if !reason.is_empty() {
                    reasons.entry(o.finding_kind).or_insert(reason);
                }
            }
            let unresolved: Vec<_> = findings
                .iter()
                .filter(|f| !reasons.contains_key(&f.kind))
                .cloned()
                .collect();
            if !unresolved.is_empty() {
                return Err(Error::OverridesRequired(unresolved));
            }

            let mut records: BTreeMap<FindingKind, OverrideRecord> = BTreeMap::new();
            for f in &findings {
                records.entry(f.kind).or_insert_with(|| OverrideRecord {
                    finding_kind: f.kind,
                    reason: reasons[&f.kind].to_owned(),
                    actor_id: actor.account_id.clone(),
                    at,
                });
            }
            let overridden: Vec<FindingKind> = records.keys().copied().collect();
            let audit = event(at, actor, "prescription.send", id).detail(json!({
                "findings": findings.len(),
                "overridden": overridden,
            }));
            tx.transition(id, PrescriptionStatus::Draft, PrescriptionStatus::Sent, audit, |rx| {
                rx.sent_at = Some(at);
                rx.overrides = records.into_values().collect();
                Ok(())
            })
        })
    }

    pub fn cancel(&self, actor: &Actor, id: &PrescriptionId, reason: &str) -> Result<Prescription> {
        actor.require(Permission::CancelRx)?;
        self.store.write(|tx| {
            let rx: Prescription = tx.require(id.as_str())?;
            ensure_prescriber(actor, &rx)?;
            if !matches!(rx.status, PrescriptionStatus::Draft | PrescriptionStatus::Sent) {
                return Err(Error::wrong_state("cancel", rx.status));
            }
            let at = self.stamp(&rx);
            let audit = event(at, actor, "prescription.cancel", id).detail(json!({
                "from": rx.status,
                "reason": reason,
            }));
            tx.transition(id, rx.status, PrescriptionStatus::Cancelled, audit, |rx| {
                rx.cancelled_at = Some(at);
                Ok(())
            })
        })
    }

    /// Every SENT prescription plus the ones this pharmacist has
    /// acknowledged, oldest send first.
    pub fn list_pending(&self, actor: &Actor) -> Result<Vec<PrescriptionSummary>> {
        actor.require(Permission::ListPending)?;
        let snapshot = self.store.snapshot()?;
        let mut queue: Vec<Prescription> = snapshot
            .list::<Prescription>(&ListFilter::default())?
            .into_iter()
            .filter(|rx| match rx.status {
                PrescriptionStatus::Sent => true,
                PrescriptionStatus::Acknowledged => rx.pharmacist_id.as_ref() == Some(&actor.account_id),
                _ => false,
            })
            .collect();
        queue.sort_by(|a, b| a.sent_at.cmp(&b.sent_at).then_with(|| a.id.cmp(&b.id)));
        queue.iter().map(|rx| summarize(&snapshot, rx)).collect()
    }

    /// Claims a SENT prescription for the calling pharmacist. Of several
    /// concurrent callers exactly one wins; the rest get `WRONG_STATE`.
    pub fn acknowledge(&self, actor: &Actor, id: &PrescriptionId) -> Result<Prescription> {
        actor.require(Permission::AcknowledgeRx)?;
        self.store.write(|tx| {
            let rx: Prescription = tx.require(id.as_str())?;
            match rx.status {
                PrescriptionStatus::Sent => {}
                PrescriptionStatus::Acknowledged if rx.pharmacist_id.as_ref() != Some(&actor.account_id) => {
                    return Err(Error::WrongState("already acknowledged by another pharmacist".into()));
                }
                other => return Err(Error::wrong_state("acknowledge", other)),
            }
            let at = self.stamp(&rx);
            let audit = event(at, actor, "prescription.acknowledge", id);
            tx.transition(id, PrescriptionStatus::Sent, PrescriptionStatus::Acknowledged, audit, |rx| {
                rx.acknowledged_at = Some(at);
                rx.pharmacist_id = Some(actor.account_id.clone());
                Ok(())
            })
        })
    }

    pub fn dispense(&self, actor: &Actor, id: &PrescriptionId) -> Result<Prescription> {
        actor.require(Permission::DispenseRx)?;
        self.store.write(|tx| {
            let rx: Prescription = tx.require(id.as_str())?;
            if rx.status != PrescriptionStatus::Acknowledged {
                return Err(Error::wrong_state("dispense", rx.status));
            }
            if rx.pharmacist_id.as_ref() != Some(&actor.account_id) {
                return Err(Error::NotAcknowledgingPharmacist);
            }
            let at = self.stamp(&rx);
            let audit = event(at, actor, "prescription.dispense", id);
            tx.transition(id, PrescriptionStatus::Acknowledged, PrescriptionStatus::Dispensed, audit, |rx| {
                rx.dispensed_at = Some(at);
                Ok(())
            })
        })
    }

    /// Renders the printable copy. Printing discloses the prescription, so
    /// it is audited even though nothing else changes.
    pub fn print_copy(&self, actor: &Actor, id: &PrescriptionId) -> Result<String> {
        actor.require(Permission::PrintRx)?;
        let printed_at = self.clock.now();
        self.store.write(|tx| {
            let rx: Prescription = tx.require(id.as_str())?;
            if !matches!(
                rx.status,
                PrescriptionStatus::Sent | PrescriptionStatus::Acknowledged | PrescriptionStatus::Dispensed
            ) {
                return Err(Error::wrong_state("print", rx.status));
            }
            let patient: Patient = tx.require(rx.patient_id.as_str())?;
            let prescriber: PractitionerAccount = tx.require(rx.prescriber_id.as_str())?;
            let disease: Disease = tx.require(rx.diagnosis.as_str())?;
            let text = print::render(
                &rx,
                &patient,
                &prescriber,
                &disease,
                |drug| tx.get::<Drug>(drug.as_str()).ok().flatten(),
                printed_at,
            );
            tx.append_audit(event(printed_at, actor, "prescription.print", id))?;
            Ok(text)
        })
    }

    pub fn get(&self, actor: &Actor, id: &PrescriptionId) -> Result<Prescription> {
        actor.require(Permission::ViewPatientRecord)?;
        self.store.snapshot()?.require(id.as_str())
    }
}

fn summarize<R: Reader>(reader: &R, rx: &Prescription) -> Result<PrescriptionSummary> {
    let patient_name = reader
        .get::<Patient>(rx.patient_id.as_str())?
        .map(|p| p.full_name)
        .unwrap_or_default();
    let prescriber_name = reader
        .get::<PractitionerAccount>(rx.prescriber_id.as_str())?
        .map(|a| a.full_name)
        .unwrap_or_default();
    let diagnosis_name = reader
        .get::<Disease>(rx.diagnosis.as_str())?
        .map(|d| d.name)
        .unwrap_or_default();
    Ok(PrescriptionSummary {
        id: rx.id.clone(),
        status: rx.status,
        patient_id: rx.patient_id.clone(),
        patient_name,
        prescriber_id: rx.prescriber_id.clone(),
        prescriber_name,
        diagnosis: rx.diagnosis.clone(),
        diagnosis_name,
        item_count: rx.items.len(),
        sent_at: rx.sent_at,
        pharmacist_id: rx.pharmacist_id.clone(),
    })
}
