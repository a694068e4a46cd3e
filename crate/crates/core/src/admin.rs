//! Registry maintenance: practitioners, patients, drugs, diseases and
//! interaction rules.
//!
//! Practitioners, patients and drugs are never removed, only deactivated.
//! Diseases and interaction rules may be deleted, diseases only while
//! nothing refers to them. Every successful call writes exactly one audit
//! entry.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::auth::{Actor, Auth, PasswordHasher, Permission};
use crate::clock::Clock;
use crate::domain::*;
use crate::ids::{AccountId, DiseaseId, DrugId, PatientId, RuleId};
use crate::store::{AuditEvent, ListFilter, Reader, Record, Store, Tx};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewPractitioner {
    pub full_name: String,
    pub role: Role,
    pub license_number: String,
    pub password: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PractitionerUpdate {
    #[serde(default)]
    pub full_name: Option<String>,
    #[serde(default)]
    pub active: Option<bool>,
    /// Administrative password reset.
    #[serde(default)]
    pub password: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatientInput {
    pub full_name: String,
    pub date_of_birth: NaiveDate,
    pub sex: Sex,
    #[serde(default)]
    pub allergies: BTreeSet<String>,
    /// Ignored on create.
    #[serde(default)]
    pub active: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiseaseInput {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DrugInput {
    pub name: String,
    #[serde(default)]
    pub pharmaceutical_class: String,
    #[serde(default)]
    pub generic_description: String,
    #[serde(default)]
    pub indications: BTreeSet<DiseaseId>,
    #[serde(default)]
    pub adverse_reactions: String,
    #[serde(default)]
    pub strength: String,
    #[serde(default)]
    pub substance_codes: BTreeSet<String>,
    /// Ignored on create.
    #[serde(default)]
    pub active: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionInput {
    pub drug_a: DrugId,
    pub drug_b: DrugId,
    pub severity: InteractionSeverity,
    #[serde(default)]
    pub note: String,
}

fn codes(raw: &BTreeSet<String>) -> BTreeSet<String> {
    raw.iter().map(|c| normalize_code(c)).filter(|c| !c.is_empty()).collect()
}

pub struct Admin {
    store: Store,
    clock: Arc<dyn Clock>,
    auth: Arc<Auth>,
}

impl std::fmt::Debug for Admin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Admin").finish_non_exhaustive()
    }
}

impl Admin {
    pub fn new(store: Store, clock: Arc<dyn Clock>, auth: Arc<Auth>) -> Self {
        Self { store, clock, auth }
    }

    fn save<T: Record>(&self, tx: &mut Tx, actor: &Actor, action: &str, record: &T, detail: serde_json::Value) -> Result<()> {
        tx.put(record)?;
        tx.append_audit(
            AuditEvent::new(self.clock.now(), actor.account_id.as_str(), action, T::KIND, record.id()).detail(detail),
        )?;
        Ok(())
    }

    fn list_sorted<T: Record>(&self, filter: &ListFilter, key: impl Fn(&T) -> String) -> Result<Vec<T>> {
        let mut all: Vec<T> = self.store.list(filter)?;
        all.sort_by_cached_key(|r| (key(r), r.id().to_owned()));
        Ok(all)
    }

    // -- practitioners -------------------------------------------------

    pub fn create_practitioner(&self, actor: &Actor, input: NewPractitioner) -> Result<PractitionerView> {
        actor.require(Permission::ManageUsers)?;
        PasswordHasher::check_strength(&input.password)?;
        let account = PractitionerAccount {
            id: AccountId::new(),
            full_name: input.full_name.trim().to_owned(),
            role: input.role,
            license_number: input.license_number.trim().to_owned(),
            password_digest: self.auth.hasher().digest(&input.password)?,
            active: true,
            created_at: self.clock.now(),
        };
        self.store.write(|tx| {
            self.save(tx, actor, "practitioner.create", &account, json!({
                "role": account.role,
                "license_number": account.license_number,
            }))
        })?;
        Ok(PractitionerView::from(&account))
    }

    pub fn update_practitioner(&self, actor: &Actor, id: &AccountId, update: PractitionerUpdate) -> Result<PractitionerView> {
        actor.require(Permission::ManageUsers)?;
        let digest = match &update.password {
            Some(p) => {
                PasswordHasher::check_strength(p)?;
                Some(self.auth.hasher().digest(p)?)
            }
            None => None,
        };
        let account = self.store.write(|tx| {
            let mut account: PractitionerAccount = tx.require(id.as_str())?;
            if let Some(name) = &update.full_name {
                account.full_name = name.trim().to_owned();
            }
            if update.active == Some(false) && account.active {
                Self::ensure_not_last_admin(tx, &account)?;
            }
            if let Some(active) = update.active {
                account.active = active;
            }
            if let Some(d) = digest {
                account.password_digest = d;
            }
            self.save(tx, actor, "practitioner.update", &account, json!({
                "full_name": update.full_name,
                "active": update.active,
                "password_reset": update.password.is_some(),
            }))?;
            Ok(account)
        })?;
        if !account.active || update.password.is_some() {
            self.auth.revoke_account(&account.id, None);
        }
        Ok(PractitionerView::from(&account))
    }

    pub fn deactivate_practitioner(&self, actor: &Actor, id: &AccountId) -> Result<PractitionerView> {
        actor.require(Permission::ManageUsers)?;
        let account = self.store.write(|tx| {
            let mut account: PractitionerAccount = tx.require(id.as_str())?;
            if account.active {
                Self::ensure_not_last_admin(tx, &account)?;
            }
            account.active = false;
            self.save(tx, actor, "practitioner.deactivate", &account, serde_json::Value::Null)?;
            Ok(account)
        })?;
        self.auth.revoke_account(&account.id, None);
        Ok(PractitionerView::from(&account))
    }

    fn ensure_not_last_admin(tx: &Tx, account: &PractitionerAccount) -> Result<()> {
        if account.role != Role::Administrator {
            return Ok(());
        }
        let others = tx
            .list::<PractitionerAccount>(&ListFilter::active(true))?
            .into_iter()
            .filter(|a| a.role == Role::Administrator && a.id != account.id)
            .count();
        if others == 0 {
            return Err(Error::Conflict("cannot deactivate the last active administrator".into()));
        }
        Ok(())
    }

    pub fn get_practitioner(&self, actor: &Actor, id: &AccountId) -> Result<PractitionerView> {
        actor.require(Permission::ManageUsers)?;
        let account: PractitionerAccount = self.store.snapshot()?.require(id.as_str())?;
        Ok(PractitionerView::from(&account))
    }

    pub fn list_practitioners(&self, actor: &Actor, filter: &ListFilter) -> Result<Vec<PractitionerView>> {
        actor.require(Permission::ManageUsers)?;
        let all = self.list_sorted::<PractitionerAccount>(filter, |a| name_key(&a.license_number))?;
        Ok(all.iter().map(PractitionerView::from).collect())
    }

    // -- patients -------------------------------------------------------

    pub fn create_patient(&self, actor: &Actor, input: PatientInput) -> Result<Patient> {
        actor.require(Permission::ManagePatients)?;
        let patient = Patient {
            id: PatientId::new(),
            full_name: input.full_name.trim().to_owned(),
            date_of_birth: input.date_of_birth,
            sex: input.sex,
            allergies: codes(&input.allergies),
            active: true,
        };
        self.store.write(|tx| self.save(tx, actor, "patient.create", &patient, json!({ "allergies": patient.allergies })))?;
        Ok(patient)
    }

    pub fn update_patient(&self, actor: &Actor, id: &PatientId, input: PatientInput) -> Result<Patient> {
        actor.require(Permission::ManagePatients)?;
        self.store.write(|tx| {
            let old: Patient = tx.require(id.as_str())?;
            let patient = Patient {
                id: old.id,
                full_name: input.full_name.trim().to_owned(),
                date_of_birth: input.date_of_birth,
                sex: input.sex,
                allergies: codes(&input.allergies),
                active: input.active.unwrap_or(old.active),
            };
            self.save(tx, actor, "patient.update", &patient, json!({ "allergies": patient.allergies }))?;
            Ok(patient)
        })
    }

    pub fn deactivate_patient(&self, actor: &Actor, id: &PatientId) -> Result<Patient> {
        actor.require(Permission::ManagePatients)?;
        self.store.write(|tx| {
            let mut patient: Patient = tx.require(id.as_str())?;
            patient.active = false;
            self.save(tx, actor, "patient.deactivate", &patient, serde_json::Value::Null)?;
            Ok(patient)
        })
    }

    pub fn get_patient(&self, actor: &Actor, id: &PatientId) -> Result<Patient> {
        actor.require(Permission::ManagePatients)?;
        self.store.snapshot()?.require(id.as_str())
    }

    pub fn list_patients(&self, actor: &Actor, filter: &ListFilter) -> Result<Vec<Patient>> {
        actor.require(Permission::ManagePatients)?;
        self.list_sorted::<Patient>(filter, |p| name_key(&p.full_name))
    }

    // -- diseases -------------------------------------------------------

    pub fn create_disease(&self, actor: &Actor, input: DiseaseInput) -> Result<Disease> {
        actor.require(Permission::ManageDiseases)?;
        let disease = Disease {
            id: DiseaseId::new(),
            name: input.name.trim().to_owned(),
            description: input.description,
        };
        self.store.write(|tx| self.save(tx, actor, "disease.create", &disease, json!({ "name": disease.name })))?;
        Ok(disease)
    }

    pub fn update_disease(&self, actor: &Actor, id: &DiseaseId, input: DiseaseInput) -> Result<Disease> {
        actor.require(Permission::ManageDiseases)?;
        self.store.write(|tx| {
            let old: Disease = tx.require(id.as_str())?;
            let disease = Disease { id: old.id, name: input.name.trim().to_owned(), description: input.description };
            self.save(tx, actor, "disease.update", &disease, json!({ "name": disease.name }))?;
            Ok(disease)
        })
    }

    /// Fails with `CONFLICT` while a drug or prescription refers to it.
    pub fn delete_disease(&self, actor: &Actor, id: &DiseaseId) -> Result<Disease> {
        actor.require(Permission::ManageDiseases)?;
        self.store.write(|tx| {
            let disease: Disease = tx.require(id.as_str())?;
            let all = ListFilter::default();
            if tx.list::<Drug>(&all)?.iter().any(|d| d.indications.contains(id)) {
                return Err(Error::Conflict(format!("disease {} is an indication of a drug", disease.name)));
            }
            if tx.list::<Prescription>(&all)?.iter().any(|rx| &rx.diagnosis == id) {
                return Err(Error::Conflict(format!("disease {} is a prescription diagnosis", disease.name)));
            }
            tx.delete::<Disease>(id.as_str())?;
            tx.append_audit(
                AuditEvent::new(self.clock.now(), actor.account_id.as_str(), "disease.delete", Disease::KIND, id.as_str())
                    .detail(json!({ "name": disease.name })),
            )?;
            Ok(disease)
        })
    }

    pub fn get_disease(&self, actor: &Actor, id: &DiseaseId) -> Result<Disease> {
        actor.require(Permission::ManageDiseases)?;
        self.store.snapshot()?.require(id.as_str())
    }

    pub fn list_diseases(&self, actor: &Actor, filter: &ListFilter) -> Result<Vec<Disease>> {
        actor.require(Permission::ManageDiseases)?;
        self.list_sorted::<Disease>(filter, |d| name_key(&d.name))
    }

    // -- drugs ----------------------------------------------------------

    fn drug_from(id: DrugId, input: DrugInput, active: bool) -> Drug {
        Drug {
            id,
            name: input.name.trim().to_owned(),
            pharmaceutical_class: input.pharmaceutical_class,
            generic_description: input.generic_description,
            indications: input.indications,
            adverse_reactions: input.adverse_reactions,
            strength: input.strength,
            substance_codes: codes(&input.substance_codes),
            active,
        }
    }

    pub fn create_drug(&self, actor: &Actor, input: DrugInput) -> Result<Drug> {
        actor.require(Permission::ManageDrugs)?;
        let drug = Self::drug_from(DrugId::new(), input, true);
        self.store.write(|tx| self.save(tx, actor, "drug.create", &drug, json!({ "name": drug.name })))?;
        Ok(drug)
    }

    pub fn update_drug(&self, actor: &Actor, id: &DrugId, input: DrugInput) -> Result<Drug> {
        actor.require(Permission::ManageDrugs)?;
        self.store.write(|tx| {
            let old: Drug = tx.require(id.as_str())?;
            let active = input.active.unwrap_or(old.active);
            let drug = Self::drug_from(old.id, input, active);
            self.save(tx, actor, "drug.update", &drug, json!({ "name": drug.name, "active": drug.active }))?;
            Ok(drug)
        })
    }

    pub fn deactivate_drug(&self, actor: &Actor, id: &DrugId) -> Result<Drug> {
        actor.require(Permission::ManageDrugs)?;
        self.store.write(|tx| {
            let mut drug: Drug = tx.require(id.as_str())?;
            drug.active = false;
            self.save(tx, actor, "drug.deactivate", &drug, serde_json::Value::Null)?;
            Ok(drug)
        })
    }

    pub fn get_drug(&self, actor: &Actor, id: &DrugId) -> Result<Drug> {
        actor.require(Permission::ManageDrugs)?;
        self.store.snapshot()?.require(id.as_str())
    }

    pub fn list_drugs(&self, actor: &Actor, filter: &ListFilter) -> Result<Vec<Drug>> {
        actor.require(Permission::ManageDrugs)?;
        self.list_sorted::<Drug>(filter, |d| name_key(&d.name))
    }

    // -- interaction rules ---------------------------------------------

    pub fn create_interaction(&self, actor: &Actor, input: InteractionInput) -> Result<InteractionRule> {
        actor.require(Permission::ManageInteractions)?;
        let rule = InteractionRule {
            id: RuleId::new(),
            drug_pair: DrugPair::new(input.drug_a, input.drug_b),
            severity: input.severity,
            note: input.note,
        };
        self.store.write(|tx| {
            self.save(tx, actor, "interaction.create", &rule, json!({
                "drug_pair": rule.drug_pair,
                "severity": rule.severity,
            }))
        })?;
        Ok(rule)
    }

    pub fn update_interaction(&self, actor: &Actor, id: &RuleId, input: InteractionInput) -> Result<InteractionRule> {
        actor.require(Permission::ManageInteractions)?;
        self.store.write(|tx| {
            let old: InteractionRule = tx.require(id.as_str())?;
            let rule = InteractionRule {
                id: old.id,
                drug_pair: DrugPair::new(input.drug_a, input.drug_b),
                severity: input.severity,
                note: input.note,
            };
            self.save(tx, actor, "interaction.update", &rule, json!({
                "drug_pair": rule.drug_pair,
                "severity": rule.severity,
            }))?;
            Ok(rule)
        })
    }

    pub fn delete_interaction(&self, actor: &Actor, id: &RuleId) -> Result<InteractionRule> {
        actor.require(Permission::ManageInteractions)?;
        self.store.write(|tx| {
            let rule: InteractionRule = tx.require(id.as_str())?;
            tx.delete::<InteractionRule>(id.as_str())?;
            tx.append_audit(
                AuditEvent::new(
                    self.clock.now(),
                    actor.account_id.as_str(),
                    "interaction.delete",
                    InteractionRule::KIND,
                    id.as_str(),
                )
                .detail(json!({ "drug_pair": rule.drug_pair })),
            )?;
            Ok(rule)
        })
    }

    pub fn get_interaction(&self, actor: &Actor, id: &RuleId) -> Result<InteractionRule> {
        actor.require(Permission::ManageInteractions)?;
        self.store.snapshot()?.require(id.as_str())
    }

    pub fn list_interactions(&self, actor: &Actor) -> Result<Vec<InteractionRule>> {
        actor.require(Permission::ManageInteractions)?;
        self.list_sorted::<InteractionRule>(&ListFilter::default(), |r| r.drug_pair.key())
    }

    /// Full audit trail, optionally for one entity. Administrators only.
    pub fn audit(&self, actor: &Actor, entity_id: Option<&str>) -> Result<Vec<crate::store::AuditEntry>> {
        actor.require(Permission::ManageUsers)?;
        self.store.audit_scan(entity_id)
    }

    /// When the latest audit entry was written, if any.
    pub fn last_activity(&self) -> Result<Option<DateTime<Utc>>> {
        Ok(self.store.audit_scan(None)?.last().map(|e| e.at))
    }
}
