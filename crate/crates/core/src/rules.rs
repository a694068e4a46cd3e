//! Prescription screening.
//!
//! Four independent checks run against a proposed prescription:
//!
//! | check       | fires when                                                | severity |
//! |-------------|-----------------------------------------------------------|----------|
//! | allergy     | a drug's substance codes meet the patient's allergies     | BLOCK    |
//! | interaction | an interaction rule covers a pair touching the new items  | WARN     |
//! | indication  | a drug is not indicated for the diagnosis                 | WARN     |
//! | duplicate   | the drug was sent for this patient inside the window      | WARN     |
//!
//! Blocks cannot be overridden. Each warning kind needs a recorded override
//! reason before the prescription can be sent; the severity of an
//! interaction rule only changes the message.
//!
//! Everything here is a pure function of its inputs. The store is only
//! touched by [`Formulary::load`] and by callers assembling a
//! [`PatientClinicalContext`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::*;
use crate::ids::{DiseaseId, DrugId};
use crate::store::{ListFilter, Reader};
use crate::{Error, Result};

pub const DEFAULT_DUPLICATE_WINDOW_DAYS: u32 = 30;

/// Drugs and diseases, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    drugs: BTreeMap<DrugId, Drug>,
    diseases: BTreeMap<DiseaseId, Disease>,
}

impl Registry {
    pub fn new(drugs: impl IntoIterator<Item = Drug>, diseases: impl IntoIterator<Item = Disease>) -> Self {
        Self {
            drugs: drugs.into_iter().map(|d| (d.id.clone(), d)).collect(),
            diseases: diseases.into_iter().map(|d| (d.id.clone(), d)).collect(),
        }
    }

    pub fn drug(&self, id: &DrugId) -> Option<&Drug> {
        self.drugs.get(id)
    }

    pub fn disease(&self, id: &DiseaseId) -> Option<&Disease> {
        self.diseases.get(id)
    }

    pub fn drugs(&self) -> impl Iterator<Item = &Drug> {
        self.drugs.values()
    }

    fn require_drug(&self, id: &DrugId) -> Result<&Drug> {
        self.drug(id).ok_or_else(|| Error::UnknownDrug(id.to_string()))
    }

    fn drug_name<'a>(&'a self, id: &'a DrugId) -> &'a str {
        self.drug(id).map_or(id.as_str(), |d| d.name.as_str())
    }
}

/// Interaction rules indexed by unordered drug pair.
#[derive(Debug, Clone, Default)]
pub struct InteractionTable {
    rules: HashMap<DrugPair, InteractionRule>,
}

impl InteractionTable {
    pub fn new(rules: impl IntoIterator<Item = InteractionRule>) -> Self {
        Self {
            rules: rules.into_iter().map(|r| (r.drug_pair.clone(), r)).collect(),
        }
    }

    /// Order of the arguments does not matter.
    pub fn lookup(&self, a: &DrugId, b: &DrugId) -> Option<&InteractionRule> {
        self.rules.get(&DrugPair::new(a.clone(), b.clone()))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Everything the checks need besides the patient.
#[derive(Debug, Clone, Default)]
pub struct Formulary {
    pub registry: Registry,
    pub interactions: InteractionTable,
}

impl Formulary {
    pub fn load<R: Reader>(reader: &R) -> Result<Self> {
        let all = ListFilter::default();
        Ok(Self {
            registry: Registry::new(reader.list::<Drug>(&all)?, reader.list::<Disease>(&all)?),
            interactions: InteractionTable::new(reader.list::<InteractionRule>(&all)?),
        })
    }
}

/// What the engine knows about a patient at evaluation time. Always
/// derived from current records, never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientClinicalContext {
    /// Canonical substance codes.
    pub allergies: BTreeSet<String>,
    pub active_medications: BTreeSet<DrugId>,
    /// (drug, sent_at) for non-cancelled prescriptions sent inside the
    /// duplicate-therapy window.
    pub recent_prescriptions: Vec<(DrugId, DateTime<Utc>)>,
    pub as_of: DateTime<Utc>,
}

impl PatientClinicalContext {
    /// Builds the context from the patient and their prescription history.
    ///
    /// Active medications are every item of a SENT or ACKNOWLEDGED
    /// prescription, plus items of DISPENSED prescriptions whose course
    /// (dispense date + duration) still covers `as_of`.
    pub fn assemble(patient: &Patient, history: &[Prescription], as_of: DateTime<Utc>, window_days: u32) -> Self {
        let window_start = as_of - Duration::days(i64::from(window_days));
        let mut active = BTreeSet::new();
        let mut recent = Vec::new();
        for rx in history.iter().filter(|rx| rx.patient_id == patient.id) {
            match rx.status {
                PrescriptionStatus::Sent | PrescriptionStatus::Acknowledged => {
                    active.extend(rx.drug_ids().cloned());
                }
                PrescriptionStatus::Dispensed => {
                    if let Some(dispensed) = rx.dispensed_at {
                        for item in &rx.items {
                            if dispensed + Duration::days(i64::from(item.duration_days)) >= as_of {
                                active.insert(item.drug_id.clone());
                            }
                        }
                    }
                }
                PrescriptionStatus::Draft | PrescriptionStatus::Cancelled => {}
            }
            if rx.status != PrescriptionStatus::Cancelled {
                if let Some(sent) = rx.sent_at.filter(|s| *s >= window_start) {
                    recent.extend(rx.drug_ids().map(|d| (d.clone(), sent)));
                }
            }
        }
        recent.sort();
        Self {
            allergies: patient.allergies.iter().map(|a| normalize_code(a)).collect(),
            active_medications: active,
            recent_prescriptions: recent,
            as_of,
        }
    }
}

fn finding(kind: FindingKind, message: String, subjects: impl IntoIterator<Item = DrugId>) -> ValidationFinding {
    let severity = match kind {
        FindingKind::Allergy => FindingSeverity::Block,
        _ => FindingSeverity::Warn,
    };
    ValidationFinding {
        kind,
        severity,
        message,
        subject_drug_ids: subjects.into_iter().collect(),
    }
}

/// One BLOCK finding per item whose drug carries a code the patient is
/// allergic to.
pub fn check_allergy(
    items: &[PrescriptionItem],
    allergies: &BTreeSet<String>,
    registry: &Registry,
) -> Result<Vec<ValidationFinding>> {
    let allergies: BTreeSet<String> = allergies.iter().map(|a| normalize_code(a)).collect();
    let mut out = Vec::new();
    for item in items {
        let drug = registry.require_drug(&item.drug_id)?;
        let hits: Vec<String> = drug.allergen_codes().intersection(&allergies).cloned().collect();
        if !hits.is_empty() {
            out.push(finding(
                FindingKind::Allergy,
                format!("patient is allergic to {} ({})", hits.join(", "), drug.name),
                [drug.id.clone()],
            ));
        }
    }
    Ok(out)
}

/// One WARN finding per interacting pair drawn from the items and the
/// active medications, where at least one side is a new item. Pairs made
/// only of active medications were already accepted earlier.
pub fn check_interactions(
    items: &[PrescriptionItem],
    active_medications: &BTreeSet<DrugId>,
    interactions: &InteractionTable,
    registry: &Registry,
) -> Vec<ValidationFinding> {
    let prescribed: BTreeSet<&DrugId> = items.iter().map(|i| &i.drug_id).collect();
    let candidates: BTreeSet<&DrugId> = prescribed.iter().copied().chain(active_medications).collect();

    let mut hits = BTreeMap::new();
    for &new in &prescribed {
        for &other in &candidates {
            if new == other {
                continue;
            }
            let pair = DrugPair::new(new.clone(), other.clone());
            if hits.contains_key(&pair) {
                continue;
            }
            if let Some(rule) = interactions.lookup(new, other) {
                hits.insert(pair, rule);
            }
        }
    }

    hits.into_iter()
        .map(|(pair, rule)| {
            let mut message = format!(
                "{} interaction between {} and {}",
                rule.severity,
                registry.drug_name(pair.first()),
                registry.drug_name(pair.second()),
            );
            if !rule.note.trim().is_empty() {
                message.push_str(": ");
                message.push_str(rule.note.trim());
            }
            finding(FindingKind::Interaction, message, [pair.first().clone(), pair.second().clone()])
        })
        .collect()
}

/// One WARN finding per item whose drug is not indicated for the diagnosis.
/// Drugs without any indications always warn.
pub fn check_indication(
    items: &[PrescriptionItem],
    diagnosis: &DiseaseId,
    registry: &Registry,
) -> Result<Vec<ValidationFinding>> {
    let disease = registry
        .disease(diagnosis)
        .ok_or_else(|| Error::UnknownDisease(diagnosis.to_string()))?;
    let mut out = Vec::new();
    for item in items {
        let drug = registry.require_drug(&item.drug_id)?;
        if drug.indications.contains(diagnosis) {
            continue;
        }
        let message = if drug.indications.is_empty() {
            format!("{} has no recorded indications", drug.name)
        } else {
            format!("{} is not indicated for {}", drug.name, disease.name)
        };
        out.push(finding(FindingKind::Indication, message, [drug.id.clone()]));
    }
    Ok(out)
}

/// One WARN finding per item whose drug was sent for this patient within
/// the last `window_days` days.
pub fn check_duplicate(
    items: &[PrescriptionItem],
    recent_prescriptions: &[(DrugId, DateTime<Utc>)],
    as_of: DateTime<Utc>,
    window_days: u32,
    registry: &Registry,
) -> Vec<ValidationFinding> {
    let window_start = as_of - Duration::days(i64::from(window_days));
    let mut out = Vec::new();
    for item in items {
        let latest = recent_prescriptions
            .iter()
            .filter(|(drug, sent)| drug == &item.drug_id && *sent >= window_start)
            .map(|(_, sent)| *sent)
            .max();
        if let Some(sent) = latest {
            out.push(finding(
                FindingKind::Duplicate,
                format!(
                    "{} was already prescribed on {}",
                    registry.drug_name(&item.drug_id),
                    sent.format("%Y-%m-%d")
                ),
                [item.drug_id.clone()],
            ));
        }
    }
    out
}

/// Runs all four checks. Findings come back grouped by kind in the order
/// allergy, interaction, indication, duplicate.
pub fn validate(
    diagnosis: &DiseaseId,
    items: &[PrescriptionItem],
    context: &PatientClinicalContext,
    formulary: &Formulary,
    window_days: u32,
) -> Result<Vec<ValidationFinding>> {
    let registry = &formulary.registry;
    let mut out = check_allergy(items, &context.allergies, registry)?;
    out.extend(check_interactions(
        items,
        &context.active_medications,
        &formulary.interactions,
        registry,
    ));
    out.extend(check_indication(items, diagnosis, registry)?);
    out.extend(check_duplicate(
        items,
        &context.recent_prescriptions,
        context.as_of,
        window_days,
        registry,
    ));
    Ok(out)
}

/// Active drugs indicated for `diagnosis`, sorted by name. Feeds the
/// selection menu on the compose screen.
pub fn suggest_drugs(diagnosis: &DiseaseId, registry: &Registry) -> Result<Vec<Drug>> {
    if registry.disease(diagnosis).is_none() {
        return Err(Error::UnknownDisease(diagnosis.to_string()));
    }
    let mut out: Vec<Drug> = registry
        .drugs()
        .filter(|d| d.active && d.indications.contains(diagnosis))
        .cloned()
        .collect();
    out.sort_by(|a, b| a.name.to_lowercase().cmp(&b.name.to_lowercase()).then_with(|| a.name.cmp(&b.name)));
    Ok(out)
}

pub fn has_block(findings: &[ValidationFinding]) -> bool {
    findings.iter().any(|f| f.severity == FindingSeverity::Block)
}
