#![allow(dead_code)]

pub mod golden;
pub mod oracle;

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rxtropic_core::admin::{NewPractitioner, PatientInput};
use rxtropic_core::auth::{Actor, HashCost, PasswordHasher};
use rxtropic_core::clock::ManualClock;
use rxtropic_core::domain::*;
use rxtropic_core::ids::*;
use rxtropic_core::store::{ListFilter, Reader, Store};
use rxtropic_core::{fixture, tooling, Service, ServiceConfig};

pub const PASSWORD: &str = "correct horse battery";

/// A seeded in-memory deployment with one admin, two doctors and two
/// pharmacists already logged in.
pub struct World {
    pub svc: Service,
    pub clock: Arc<ManualClock>,
    pub admin: Actor,
    pub doctor: Actor,
    pub doctor2: Actor,
    pub pharmacist: Actor,
    pub pharmacist2: Actor,
}

impl World {
    pub fn new() -> Self {
        Self::with_store(Store::in_memory().unwrap())
    }

    pub fn with_store(store: Store) -> Self {
        let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap()));
        let svc = Service::new(
            store,
            ServiceConfig { hash_cost: HashCost::Minimal, clock: clock.clone(), ..ServiceConfig::default() },
        );
        let hasher = PasswordHasher::new(HashCost::Minimal);
        let admin_id =
            tooling::bootstrap_admin(&svc.store, clock.as_ref(), &hasher, "Ada Admin", "ADM-1", PASSWORD).unwrap();
        tooling::seed(&svc.store, clock.as_ref(), &fixture::default_fixture()).unwrap();
        let admin = Actor::new(admin_id, Role::Administrator);
        let make = |name: &str, role: Role, license: &str| {
            let view = svc
                .admin
                .create_practitioner(
                    &admin,
                    NewPractitioner {
                        full_name: name.into(),
                        role,
                        license_number: license.into(),
                        password: PASSWORD.into(),
                    },
                )
                .unwrap();
            Actor::new(view.id, role)
        };
        let doctor = make("Dr Okonkwo", Role::Doctor, "MD-100");
        let doctor2 = make("Dr Adeyemi", Role::Doctor, "MD-200");
        let pharmacist = make("Ph Nwosu", Role::Pharmacist, "PH-100");
        let pharmacist2 = make("Ph Balogun", Role::Pharmacist, "PH-200");
        Self { svc, clock, admin, doctor, doctor2, pharmacist, pharmacist2 }
    }

    pub fn drug(&self, name: &str) -> DrugId {
        let key = name_key(name);
        self.svc.store.snapshot().unwrap().find_unique::<Drug>(&key).unwrap().expect(name).id
    }

    pub fn disease(&self, name: &str) -> DiseaseId {
        let key = name_key(name);
        self.svc.store.snapshot().unwrap().find_unique::<Disease>(&key).unwrap().expect(name).id
    }

    pub fn patient(&self, name: &str) -> PatientId {
        self.svc
            .store
            .list::<Patient>(&Default::default())
            .unwrap()
            .into_iter()
            .find(|p| p.full_name == name)
            .expect(name)
            .id
    }

    pub fn new_patient(&self, name: &str, allergies: &[&str]) -> PatientId {
        self.svc
            .admin
            .create_patient(
                &self.admin,
                PatientInput {
                    full_name: name.into(),
                    date_of_birth: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
                    sex: Sex::Other,
                    allergies: allergies.iter().map(|s| s.to_string()).collect(),
                    active: None,
                },
            )
            .unwrap()
            .id
    }

    pub fn tick(&self) {
        self.clock.advance(Duration::minutes(1));
    }

    /// Composes and sends a clean malaria prescription for a fresh patient.
    pub fn sent_rx(&self) -> PrescriptionId {
        let patient = self.new_patient(&format!("Patient {}", new_id()), &[]);
        let rx = self
            .svc
            .workflow
            .compose(&self.doctor, &patient, &self.disease("Malaria"), vec![item(self.drug("Artesunate"))])
            .unwrap();
        self.tick();
        self.svc.workflow.send(&self.doctor, &rx.id, &[]).unwrap();
        rx.id
    }
}

pub fn item(drug: DrugId) -> PrescriptionItem {
    PrescriptionItem {
        drug_id: drug,
        dose: "1 tablet".into(),
        frequency: "twice daily".into(),
        duration_days: 3,
        instructions: "after meals".into(),
    }
}

/// Every record in the store plus the audit log, as JSON keyed by kind and
/// id. Two dumps are equal exactly when the stored state is.
pub fn dump(store: &Store) -> BTreeMap<String, serde_json::Value> {
    let all = ListFilter::default();
    let mut out = BTreeMap::new();
    macro_rules! take {
        ($($t:ty),*) => {$(
            for r in store.list::<$t>(&all).unwrap() {
                out.insert(format!("{}/{}", stringify!($t), r.id), serde_json::to_value(&r).unwrap());
            }
        )*};
    }
    take!(Disease, Drug, InteractionRule, Patient, PractitionerAccount, Prescription);
    out.insert("audit".into(), serde_json::to_value(store.audit_scan(None).unwrap()).unwrap());
    out
}
