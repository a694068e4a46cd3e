//! Operator tasks that run against a store directly, without a session:
//! bootstrapping the first administrator, seeding reference data and
//! exporting the audit log and reference data.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::auth::PasswordHasher;
use crate::clock::Clock;
use crate::domain::*;
use crate::fixture::{DiseaseEntry, DrugEntry, Fixture, PatientEntry, RuleEntry};
use crate::ids::{AccountId, DiseaseId, DrugId, PatientId, RuleId};
use crate::store::{AuditEvent, ListFilter, Reader, Record, Store, Tx, SYSTEM_ACTOR};
use crate::{Error, Result};

/// Creates the first administrator. Fails once any administrator exists.
pub fn bootstrap_admin(
    store: &Store,
    clock: &dyn Clock,
    hasher: &PasswordHasher,
    full_name: &str,
    license_number: &str,
    password: &str,
) -> Result<AccountId> {
    PasswordHasher::check_strength(password)?;
    if has_admin(&store.snapshot()?)? {
        return Err(Error::AlreadyBootstrapped);
    }
    let account = PractitionerAccount {
        id: AccountId::new(),
        full_name: full_name.trim().to_owned(),
        role: Role::Administrator,
        license_number: license_number.trim().to_owned(),
        password_digest: hasher.digest(password)?,
        active: true,
        created_at: clock.now(),
    };
    store.write(|tx| {
        // Checked again under the write lock in case of a concurrent call.
        if has_admin(tx)? {
            return Err(Error::AlreadyBootstrapped);
        }
        tx.put(&account)?;
        tx.append_audit(
            AuditEvent::new(account.created_at, SYSTEM_ACTOR, "practitioner.bootstrap", "practitioner", account.id.as_str())
                .detail(json!({ "license_number": account.license_number })),
        )?;
        Ok(account.id.clone())
    })
}

fn has_admin<R: Reader>(reader: &R) -> Result<bool> {
    Ok(reader
        .list::<PractitionerAccount>(&ListFilter::default())?
        .iter()
        .any(|a| a.role == Role::Administrator))
}

/// What one kind of record went through during a seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub created: usize,
    pub updated: usize,
    pub unchanged: usize,
}

impl KindCounts {
    fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Created => self.created += 1,
            Outcome::Updated => self.updated += 1,
            Outcome::Unchanged => self.unchanged += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.created + self.updated + self.unchanged
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedReport {
    pub diseases: KindCounts,
    pub drugs: KindCounts,
    pub rules: KindCounts,
    pub patients: KindCounts,
}

impl SeedReport {
    pub fn changed(&self) -> bool {
        [self.diseases, self.drugs, self.rules, self.patients]
            .iter()
            .any(|k| k.created + k.updated > 0)
    }
}

impl fmt::Display for SeedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (kind, c) in [
            ("diseases", self.diseases),
            ("drugs", self.drugs),
            ("rules", self.rules),
            ("patients", self.patients),
        ] {
            writeln!(f, "{kind}: {} created, {} updated, {} unchanged", c.created, c.updated, c.unchanged)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Created,
    Updated,
    Unchanged,
}

fn upsert<T: Record + PartialEq>(tx: &mut Tx, existing: Option<T>, wanted: T) -> Result<Outcome> {
    match existing {
        Some(old) if old == wanted => Ok(Outcome::Unchanged),
        Some(_) => tx.put(&wanted).map(|_| Outcome::Updated),
        None => tx.put(&wanted).map(|_| Outcome::Created),
    }
}

/// Loads a fixture in one transaction, upserting by natural key: disease and
/// drug names, the drug pair of a rule, and a patient's name plus date of
/// birth. Seeding the same fixture twice leaves the store unchanged, and
/// only a seed that changed something is audited.
///
/// Names a fixture refers to may be declared in the fixture itself or
/// already exist in the store.
pub fn seed(store: &Store, clock: &dyn Clock, fixture: &Fixture) -> Result<SeedReport> {
    store.write(|tx| {
        let mut report = SeedReport::default();
        let all = ListFilter::default();

        let mut disease_ids: HashMap<String, DiseaseId> = HashMap::new();
        for d in tx.list::<Disease>(&all)? {
            disease_ids.insert(name_key(&d.name), d.id);
        }
        for entry in &fixture.diseases {
            let existing = tx.find_unique::<Disease>(&name_key(&entry.name))?;
            let wanted = Disease {
                id: existing.as_ref().map_or_else(DiseaseId::new, |d| d.id.clone()),
                name: entry.name.clone(),
                description: entry.description.clone(),
            };
            disease_ids.insert(name_key(&wanted.name), wanted.id.clone());
            report.diseases.record(upsert(tx, existing, wanted)?);
        }

        let mut drug_ids: HashMap<String, DrugId> = HashMap::new();
        for d in tx.list::<Drug>(&all)? {
            drug_ids.insert(name_key(&d.name), d.id);
        }
        for entry in &fixture.drugs {
            let mut indications = std::collections::BTreeSet::new();
            for name in &entry.indications {
                let id = disease_ids.get(&name_key(name)).ok_or_else(|| {
                    Error::Reference(format!("drug {} cites undeclared disease {name}", entry.name))
                })?;
                indications.insert(id.clone());
            }
            let existing = tx.find_unique::<Drug>(&name_key(&entry.name))?;
            let wanted = Drug {
                id: existing.as_ref().map_or_else(DrugId::new, |d| d.id.clone()),
                name: entry.name.clone(),
                pharmaceutical_class: entry.pharmaceutical_class.clone(),
                generic_description: entry.generic_description.clone(),
                indications,
                adverse_reactions: entry.adverse_reactions.clone(),
                strength: entry.strength.clone(),
                substance_codes: entry.substance_codes.clone(),
                active: true,
            };
            drug_ids.insert(name_key(&wanted.name), wanted.id.clone());
            report.drugs.record(upsert(tx, existing, wanted)?);
        }

        for entry in &fixture.rules {
            let lookup = |name: &str| {
                drug_ids.get(&name_key(name)).cloned().ok_or_else(|| {
                    Error::Reference(format!("rule for {} and {} cites undeclared drug {name}", entry.drug_a, entry.drug_b))
                })
            };
            let pair = DrugPair::new(lookup(&entry.drug_a)?, lookup(&entry.drug_b)?);
            let existing = tx.find_unique::<InteractionRule>(&pair.key())?;
            let wanted = InteractionRule {
                id: existing.as_ref().map_or_else(RuleId::new, |r| r.id.clone()),
                drug_pair: pair,
                severity: entry.severity,
                note: entry.note.clone(),
            };
            report.rules.record(upsert(tx, existing, wanted)?);
        }

        let mut patients: HashMap<(String, chrono::NaiveDate), Patient> = HashMap::new();
        for p in tx.list::<Patient>(&all)? {
            patients.insert((name_key(&p.full_name), p.date_of_birth), p);
        }
        for entry in &fixture.patients {
            let existing = patients.get(&(name_key(&entry.full_name), entry.date_of_birth)).cloned();
            let wanted = Patient {
                id: existing.as_ref().map_or_else(PatientId::new, |p| p.id.clone()),
                full_name: entry.full_name.clone(),
                date_of_birth: entry.date_of_birth,
                sex: entry.sex,
                allergies: entry.allergies.clone(),
                active: true,
            };
            report.patients.record(upsert(tx, existing, wanted)?);
        }

        if report.changed() {
            tx.append_audit(
                AuditEvent::new(clock.now(), SYSTEM_ACTOR, "fixture.seed", "fixture", "seed")
                    .detail(serde_json::to_value(&report)?),
            )?;
        }
        Ok(report)
    })
}

/// Writes the audit log as JSON lines in sequence order.
pub fn export_audit(store: &Store, out: &mut impl Write) -> Result<usize> {
    let entries = store.audit_scan(None)?;
    for entry in &entries {
        serde_json::to_writer(&mut *out, entry)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(entries.len())
}

/// The store's reference data as a fixture, sorted by name so the output is
/// stable. Interaction rules name their drugs in alphabetical order.
pub fn export_fixture(store: &Store) -> Result<Fixture> {
    let snapshot = store.snapshot()?;
    let all = ListFilter::default();

    let mut diseases: Vec<Disease> = snapshot.list(&all)?;
    diseases.sort_by_cached_key(|d| name_key(&d.name));
    let disease_names: HashMap<&DiseaseId, &str> = diseases.iter().map(|d| (&d.id, d.name.as_str())).collect();

    let mut drugs: Vec<Drug> = snapshot.list(&all)?;
    drugs.sort_by_cached_key(|d| name_key(&d.name));
    let drug_names: HashMap<&DrugId, &str> = drugs.iter().map(|d| (&d.id, d.name.as_str())).collect();

    let mut rules: BTreeMap<(String, String), RuleEntry> = BTreeMap::new();
    for rule in snapshot.list::<InteractionRule>(&all)? {
        let mut names = [
            drug_names.get(rule.drug_pair.first()).copied().unwrap_or_default().to_owned(),
            drug_names.get(rule.drug_pair.second()).copied().unwrap_or_default().to_owned(),
        ];
        names.sort_by_cached_key(|n| name_key(n));
        let [drug_a, drug_b] = names;
        rules.insert(
            (name_key(&drug_a), name_key(&drug_b)),
            RuleEntry { drug_a, drug_b, severity: rule.severity, note: rule.note },
        );
    }

    let mut patients: Vec<Patient> = snapshot.list(&all)?;
    patients.sort_by_cached_key(|p| (name_key(&p.full_name), p.date_of_birth));

    Ok(Fixture {
        diseases: diseases
            .iter()
            .map(|d| DiseaseEntry { name: d.name.clone(), description: d.description.clone() })
            .collect(),
        drugs: drugs
            .iter()
            .map(|d| DrugEntry {
                name: d.name.clone(),
                pharmaceutical_class: d.pharmaceutical_class.clone(),
                generic_description: d.generic_description.clone(),
                indications: d
                    .indications
                    .iter()
                    .filter_map(|id| disease_names.get(id).map(|n| (*n).to_owned()))
                    .collect(),
                adverse_reactions: d.adverse_reactions.clone(),
                strength: d.strength.clone(),
                substance_codes: d.substance_codes.clone(),
            })
            .collect(),
        rules: rules.into_values().collect(),
        patients: patients
            .into_iter()
            .map(|p| PatientEntry {
                full_name: p.full_name,
                date_of_birth: p.date_of_birth,
                sex: p.sex,
                allergies: p.allergies,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::HashCost;
    use crate::clock::ManualClock;
    use crate::fixture::{default_fixture, parse};

    #[test]
    fn seed_is_idempotent() {
        let store = Store::in_memory().unwrap();
        let clock = ManualClock::default();
        let first = seed(&store, &clock, &default_fixture()).unwrap();
        assert_eq!(first.diseases.created, 3);
        let audit = store.audit_scan(None).unwrap().len();
        let second = seed(&store, &clock, &default_fixture()).unwrap();
        assert!(!second.changed());
        assert_eq!(second.drugs.unchanged, first.drugs.created);
        assert_eq!(store.audit_scan(None).unwrap().len(), audit);
    }

    #[test]
    fn undeclared_disease_is_a_reference_error() {
        let store = Store::in_memory().unwrap();
        let fx = parse("DISEASE|Malaria|\nDRUG|X|c|d|Malaria,Dengue|a|s|x\n").unwrap();
        let err = seed(&store, &ManualClock::default(), &fx).unwrap_err();
        assert_eq!(err.code(), "REFERENCE_ERROR");
        assert!(store.list::<Disease>(&ListFilter::default()).unwrap().is_empty());
    }

    #[test]
    fn bootstrap_only_once() {
        let store = Store::in_memory().unwrap();
        let clock = ManualClock::default();
        let hasher = PasswordHasher::new(HashCost::Minimal);
        assert_eq!(
            bootstrap_admin(&store, &clock, &hasher, "A", "ADM-1", "short").unwrap_err().code(),
            "WEAK_PASSWORD"
        );
        bootstrap_admin(&store, &clock, &hasher, "A", "ADM-1", "long enough").unwrap();
        assert_eq!(
            bootstrap_admin(&store, &clock, &hasher, "B", "ADM-2", "long enough").unwrap_err().code(),
            "ALREADY_BOOTSTRAPPED"
        );
    }
}
