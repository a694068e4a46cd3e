//! Random screening scenarios and a deliberately naive reference
//! implementation of the four clinical checks.

use std::collections::{BTreeSet, HashSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rxtropic_core::domain::*;
use rxtropic_core::ids::*;
use rxtropic_core::rules::{self, Formulary, InteractionTable, PatientClinicalContext, Registry};

pub const WINDOW_DAYS: u32 = 30;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub diseases: Vec<Disease>,
    pub drugs: Vec<Drug>,
    pub rules: Vec<InteractionRule>,
    pub patient: Patient,
    pub history: Vec<Prescription>,
    pub diagnosis: DiseaseId,
    pub items: Vec<PrescriptionItem>,
    pub as_of: DateTime<Utc>,
}

/// (kind, severity, subjects): what a finding means, without its wording.
pub type Key = (FindingKind, FindingSeverity, Vec<DrugId>);

pub fn key(f: &ValidationFinding) -> Key {
    (f.kind, f.severity, f.subject_drug_ids.iter().cloned().collect())
}

pub fn keys(findings: &[ValidationFinding]) -> Vec<Key> {
    let mut out: Vec<Key> = findings.iter().map(key).collect();
    out.sort();
    out
}

fn pick_codes(rng: &mut ChaCha8Rng, pool: &[String], max: usize) -> BTreeSet<String> {
    let n = rng.random_range(0..=max);
    pool.choose_multiple(rng, n).cloned().collect()
}

pub fn scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let as_of = Utc.with_ymd_and_hms(2026, 6, 1, 12, 0, 0).unwrap();

    let diseases: Vec<Disease> = (0..rng.random_range(1..=5))
        .map(|i| Disease { id: format!("dis{i}").into(), name: format!("Disease {i}"), description: String::new() })
        .collect();
    let codes: Vec<String> = (0..15).map(|i| format!("s{i}")).collect();

    let n_drugs = rng.random_range(1..=50);
    let drugs: Vec<Drug> = (0..n_drugs)
        .map(|i| Drug {
            id: format!("drug{i:02}").into(),
            name: format!("Drug{i:02}"),
            pharmaceutical_class: String::new(),
            generic_description: String::new(),
            indications: diseases
                .iter()
                .filter(|_| rng.random_bool(0.3))
                .map(|d| d.id.clone())
                .collect(),
            adverse_reactions: String::new(),
            strength: String::new(),
            substance_codes: pick_codes(&mut rng, &codes, 2),
            active: rng.random_bool(0.9),
        })
        .collect();

    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    if n_drugs > 1 {
        for r in 0..rng.random_range(0..=n_drugs * 2) {
            let a = rng.random_range(0..n_drugs);
            let b = rng.random_range(0..n_drugs);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            rules.push(InteractionRule {
                id: format!("rule{r}").into(),
                drug_pair: DrugPair::new(drugs[a].id.clone(), drugs[b].id.clone()),
                severity: *[InteractionSeverity::Major, InteractionSeverity::Moderate, InteractionSeverity::Minor]
                    .choose(&mut rng)
                    .unwrap(),
                note: String::new(),
            });
        }
    }

    // Allergies mix substance codes with drug names, in arbitrary case.
    let mut allergy_pool = codes.clone();
    allergy_pool.extend(drugs.iter().map(|d| d.name.clone()));
    let allergies: BTreeSet<String> = pick_codes(&mut rng, &allergy_pool, 10)
        .into_iter()
        .map(|a| if rng.random_bool(0.5) { a.to_uppercase() } else { a })
        .collect();
    let patient = Patient {
        id: "patient".into(),
        full_name: "Random Patient".into(),
        date_of_birth: chrono::NaiveDate::from_ymd_opt(1980, 1, 1).unwrap(),
        sex: Sex::F,
        allergies,
        active: true,
    };

    let statuses = PrescriptionStatus::ALL;
    let mut history = Vec::new();
    for h in 0..rng.random_range(0..=20) {
        let status = *statuses.choose(&mut rng).unwrap();
        let created = as_of - Duration::minutes(rng.random_range(0..=90 * 24 * 60));
        let sent = (status != PrescriptionStatus::Draft)
            .then(|| created + Duration::minutes(rng.random_range(0..=60)))
            .filter(|s| *s <= as_of)
            .or((status != PrescriptionStatus::Draft).then_some(created));
        // A cancelled prescription may or may not have been sent first.
        let sent = if status == PrescriptionStatus::Cancelled && rng.random_bool(0.5) { None } else { sent };
        let dispensed = (status == PrescriptionStatus::Dispensed)
            .then(|| sent.unwrap() + Duration::minutes(rng.random_range(0..=60)))
            .map(|d| d.min(as_of));
        let mut ids: Vec<usize> = (0..n_drugs).collect();
        ids.shuffle(&mut rng);
        let items = ids
            .into_iter()
            .take(rng.random_range(1..=3.min(n_drugs)))
            .map(|i| PrescriptionItem {
                drug_id: drugs[i].id.clone(),
                dose: "1".into(),
                frequency: "daily".into(),
                duration_days: rng.random_range(1..=40),
                instructions: String::new(),
            })
            .collect();
        history.push(Prescription {
            id: format!("hist{h}").into(),
            // Now and then a record for someone else slips in.
            patient_id: if rng.random_bool(0.1) { "other".into() } else { patient.id.clone() },
            prescriber_id: "doc".into(),
            diagnosis: diseases[0].id.clone(),
            items,
            status,
            overrides: Vec::new(),
            created_at: created,
            sent_at: sent,
            acknowledged_at: None,
            dispensed_at: dispensed,
            cancelled_at: None,
            pharmacist_id: None,
        });
    }

    let mut ids: Vec<usize> = (0..n_drugs).collect();
    ids.shuffle(&mut rng);
    let items = ids
        .into_iter()
        .take(rng.random_range(1..=6.min(n_drugs)))
        .map(|i| PrescriptionItem {
            drug_id: drugs[i].id.clone(),
            dose: "1".into(),
            frequency: "daily".into(),
            duration_days: 5,
            instructions: String::new(),
        })
        .collect();
    let diagnosis = diseases.choose(&mut rng).unwrap().id.clone();

    Scenario { diseases, drugs, rules, patient, history, diagnosis, items, as_of }
}

/// The engine, fed through its public pieces.
pub fn engine(s: &Scenario) -> Vec<ValidationFinding> {
    let formulary = Formulary {
        registry: Registry::new(s.drugs.clone(), s.diseases.clone()),
        interactions: InteractionTable::new(s.rules.clone()),
    };
    let context = PatientClinicalContext::assemble(&s.patient, &s.history, s.as_of, WINDOW_DAYS);
    rules::validate(&s.diagnosis, &s.items, &context, &formulary, WINDOW_DAYS).unwrap()
}

/// Nested loops over the raw scenario. Shares nothing with the engine but
/// the domain types.
pub fn oracle(s: &Scenario) -> Vec<Key> {
    let drug = |id: &DrugId| s.drugs.iter().find(|d| &d.id == id).unwrap();
    let mine: Vec<&Prescription> = s.history.iter().filter(|rx| rx.patient_id == s.patient.id).collect();
    let mut out = Vec::new();

    for item in &s.items {
        let d = drug(&item.drug_id);
        let mut tags: Vec<String> = d.substance_codes.iter().map(|c| c.to_lowercase()).collect();
        tags.push(d.name.to_lowercase());
        let mut hit = false;
        for allergy in &s.patient.allergies {
            for tag in &tags {
                if allergy.trim().to_lowercase() == *tag {
                    hit = true;
                }
            }
        }
        if hit {
            out.push((FindingKind::Allergy, FindingSeverity::Block, vec![item.drug_id.clone()]));
        }
    }

    let mut active: Vec<DrugId> = Vec::new();
    for rx in &mine {
        for it in &rx.items {
            let counts = match rx.status {
                PrescriptionStatus::Sent | PrescriptionStatus::Acknowledged => true,
                PrescriptionStatus::Dispensed => {
                    let ends = rx.dispensed_at.unwrap() + Duration::days(it.duration_days as i64);
                    ends >= s.as_of
                }
                _ => false,
            };
            if counts && !active.contains(&it.drug_id) {
                active.push(it.drug_id.clone());
            }
        }
    }
    let new: Vec<DrugId> = s.items.iter().map(|i| i.drug_id.clone()).collect();
    let mut pool = new.clone();
    for a in &active {
        if !pool.contains(a) {
            pool.push(a.clone());
        }
    }
    for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            if !new.contains(&pool[i]) && !new.contains(&pool[j]) {
                continue;
            }
            let exists = s.rules.iter().any(|r| {
                let (a, b) = (r.drug_pair.first(), r.drug_pair.second());
                (a == &pool[i] && b == &pool[j]) || (a == &pool[j] && b == &pool[i])
            });
            if exists {
                let mut subjects = vec![pool[i].clone(), pool[j].clone()];
                subjects.sort();
                out.push((FindingKind::Interaction, FindingSeverity::Warn, subjects));
            }
        }
    }

    for item in &s.items {
        if !drug(&item.drug_id).indications.contains(&s.diagnosis) {
            out.push((FindingKind::Indication, FindingSeverity::Warn, vec![item.drug_id.clone()]));
        }
    }

    let window = WINDOW_DAYS as i64 * 24 * 3600;
    for item in &s.items {
        let mut dup = false;
        for rx in &mine {
            if rx.status == PrescriptionStatus::Cancelled {
                continue;
            }
            let Some(sent) = rx.sent_at else { continue };
            if (s.as_of - sent).num_seconds() <= window && rx.items.iter().any(|it| it.drug_id == item.drug_id) {
                dup = true;
            }
        }
        if dup {
            out.push((FindingKind::Duplicate, FindingSeverity::Warn, vec![item.drug_id.clone()]));
        }
    }

    out.sort();
    out
}

/// Kinds appear grouped in the documented order.
pub fn ordered_by_kind(findings: &[ValidationFinding]) -> bool {
    findings.windows(2).all(|w| w[0].kind <= w[1].kind)
}
