mod support;

use std::collections::BTreeSet;
use std::sync::{Arc, Barrier};
use std::thread;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;
use rxtropic_core::domain::*;
use rxtropic_core::ids::*;
use rxtropic_core::store::{AuditEvent, ListFilter, Reader, Store};
use serde_json::json;

fn at() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 2, 1, 8, 0, 0).unwrap()
}

fn account(license: &str, role: Role) -> PractitionerAccount {
    PractitionerAccount {
        id: AccountId::new(),
        full_name: format!("Holder of {license}"),
        role,
        license_number: license.into(),
        password_digest: PasswordDigest::from_phc("$argon2id$fake".into()),
        active: true,
        created_at: at(),
    }
}

fn patient(name: &str) -> Patient {
    Patient {
        id: PatientId::new(),
        full_name: name.into(),
        date_of_birth: NaiveDate::from_ymd_opt(1999, 9, 9).unwrap(),
        sex: Sex::M,
        allergies: BTreeSet::new(),
        active: true,
    }
}

fn disease(name: &str) -> Disease {
    Disease { id: DiseaseId::new(), name: name.into(), description: String::new() }
}

fn drug(name: &str) -> Drug {
    Drug {
        id: DrugId::new(),
        name: name.into(),
        pharmaceutical_class: String::new(),
        generic_description: String::new(),
        indications: BTreeSet::new(),
        adverse_reactions: String::new(),
        strength: String::new(),
        substance_codes: BTreeSet::new(),
        active: true,
    }
}

/// Doctor, patient, disease, drug and a SENT prescription tying them together.
fn sent_prescription(store: &Store) -> Prescription {
    let doctor = account(&format!("MD-{}", new_id()), Role::Doctor);
    let p = patient("P");
    let d = disease(&format!("Disease {}", new_id()));
    let x = drug(&format!("Drug {}", new_id()));
    let rx = Prescription {
        id: PrescriptionId::new(),
        patient_id: p.id.clone(),
        prescriber_id: doctor.id.clone(),
        diagnosis: d.id.clone(),
        items: vec![support::item(x.id.clone())],
        status: PrescriptionStatus::Sent,
        overrides: vec![],
        created_at: at(),
        sent_at: Some(at()),
        acknowledged_at: None,
        dispensed_at: None,
        cancelled_at: None,
        pharmacist_id: None,
    };
    store
        .write(|tx| {
            tx.put(&doctor)?;
            tx.put(&p)?;
            tx.put(&d)?;
            tx.put(&x)?;
            tx.put(&rx)
        })
        .unwrap();
    rx
}

fn pharmacists(store: &Store, n: usize) -> Vec<PractitionerAccount> {
    let all: Vec<_> = (0..n).map(|i| account(&format!("PH-{i}-{}", new_id()), Role::Pharmacist)).collect();
    store.write(|tx| all.iter().try_for_each(|a| tx.put(a))).unwrap();
    all
}

fn ack_event(rx: &PrescriptionId, who: &AccountId) -> AuditEvent {
    AuditEvent::new(at(), who.as_str(), "prescription.acknowledge", "prescription", rx.as_str())
}

#[test]
fn put_then_get_round_trips() {
    let store = Store::in_memory().unwrap();
    let rx = sent_prescription(&store);
    assert_eq!(store.get::<Prescription>(rx.id.as_str()).unwrap(), Some(rx));
    assert_eq!(store.get::<Patient>("missing").unwrap(), None);
    assert_eq!(store.snapshot().unwrap().require::<Patient>("missing").unwrap_err().code(), "NOT_FOUND");
}

#[test]
fn unique_keys_are_case_insensitive() {
    let store = Store::in_memory().unwrap();
    store.put(&account("MD-1", Role::Doctor)).unwrap();
    let err = store.put(&account("md-1", Role::Doctor)).unwrap_err();
    assert_eq!(err.code(), "UNIQUE_VIOLATION");

    store.put(&disease("Malaria")).unwrap();
    assert_eq!(store.put(&disease("MALARIA")).unwrap_err().code(), "UNIQUE_VIOLATION");
    let mut renamed = drug("Quinine");
    store.put(&renamed).unwrap();
    assert_eq!(store.put(&drug("quinine")).unwrap_err().code(), "UNIQUE_VIOLATION");

    // Renaming frees the old key.
    renamed.name = "Quinine sulfate".into();
    store.put(&renamed).unwrap();
    store.put(&drug("Quinine")).unwrap();
}

#[test]
fn interaction_pairs_are_unique_in_either_order() {
    let store = Store::in_memory().unwrap();
    let (a, b) = (drug("A"), drug("B"));
    store.put(&a).unwrap();
    store.put(&b).unwrap();
    let rule = |x: &Drug, y: &Drug| InteractionRule {
        id: RuleId::new(),
        drug_pair: DrugPair::new(x.id.clone(), y.id.clone()),
        severity: InteractionSeverity::Minor,
        note: String::new(),
    };
    store.put(&rule(&a, &b)).unwrap();
    assert_eq!(store.put(&rule(&b, &a)).unwrap_err().code(), "UNIQUE_VIOLATION");
    assert_eq!(store.put(&rule(&a, &a)).unwrap_err().code(), "VALIDATION");
}

#[test]
fn references_are_checked() {
    let store = Store::in_memory().unwrap();
    let mut d = drug("X");
    d.indications.insert("no-such-disease".into());
    assert_eq!(store.put(&d).unwrap_err().code(), "VALIDATION");

    // A prescriber must be a doctor.
    let rx = sent_prescription(&store);
    let pharmacist = account("PH-9", Role::Pharmacist);
    store.put(&pharmacist).unwrap();
    let forged = Prescription { prescriber_id: pharmacist.id, ..rx };
    assert_eq!(store.put(&forged).unwrap_err().code(), "VALIDATION");
}

#[test]
fn list_filters() {
    let store = Store::in_memory().unwrap();
    let rx = sent_prescription(&store);
    let mut other = sent_prescription(&store);
    other.status = PrescriptionStatus::Cancelled;
    other.cancelled_at = Some(at());
    store.put(&other).unwrap();

    let sent: Vec<Prescription> = store.list(&ListFilter::status(PrescriptionStatus::Sent)).unwrap();
    assert_eq!(sent, [rx]);

    let mut old = patient("Old Timer");
    old.active = false;
    store.put(&old).unwrap();
    store.put(&patient("Timothy")).unwrap();
    let named: Vec<Patient> = store.list(&ListFilter::name("TIM")).unwrap();
    assert_eq!(named.len(), 2);
    let active = ListFilter { active: Some(true), ..ListFilter::name("tim") };
    assert_eq!(store.list::<Patient>(&active).unwrap().len(), 1);
}

#[test]
fn transition_semantics() {
    let store = Store::in_memory().unwrap();
    let rx = sent_prescription(&store);
    let ph = &pharmacists(&store, 1)[0];
    let ack = |s: &Store| {
        s.transition(&rx.id, PrescriptionStatus::Sent, PrescriptionStatus::Acknowledged, ack_event(&rx.id, &ph.id), |r| {
            r.acknowledged_at = Some(at());
            r.pharmacist_id = Some(ph.id.clone());
            Ok(())
        })
    };
    assert_eq!(ack(&store).unwrap().status, PrescriptionStatus::Acknowledged);
    assert_eq!(ack(&store).unwrap_err().code(), "CONFLICT");

    let before = store.audit_scan(None).unwrap();
    let illegal =
        store.transition(&rx.id, PrescriptionStatus::Draft, PrescriptionStatus::Dispensed, ack_event(&rx.id, &ph.id), |_| {
            panic!("mutator must not run")
        });
    assert_eq!(illegal.unwrap_err().code(), "WRONG_STATE");
    let missing = store.transition(
        &"nope".into(),
        PrescriptionStatus::Sent,
        PrescriptionStatus::Cancelled,
        ack_event(&rx.id, &ph.id),
        |_| Ok(()),
    );
    assert_eq!(missing.unwrap_err().code(), "NOT_FOUND");
    assert_eq!(store.audit_scan(None).unwrap(), before);
}

#[test]
fn failed_transactions_leave_no_trace() {
    let store = Store::in_memory().unwrap();
    let before = store.audit_scan(None).unwrap();
    let result: rxtropic_core::Result<()> = store.write(|tx| {
        tx.put(&disease("Typhoid"))?;
        tx.append_audit(AuditEvent::new(at(), "x", "disease.create", "disease", "d"))?;
        Err(rxtropic_core::Error::Conflict("changed my mind".into()))
    });
    assert!(result.is_err());
    assert!(store.list::<Disease>(&ListFilter::default()).unwrap().is_empty());
    assert_eq!(store.audit_scan(None).unwrap(), before);
}

#[test]
fn concurrent_acknowledgements_have_one_winner() {
    let store = Store::in_memory().unwrap();
    let crew = pharmacists(&store, 16);
    for _ in 0..20 {
        let rx = sent_prescription(&store);
        let barrier = Arc::new(Barrier::new(crew.len()));
        let handles: Vec<_> = crew
            .iter()
            .map(|ph| {
                let (store, barrier, id, ph) = (store.clone(), barrier.clone(), rx.id.clone(), ph.id.clone());
                thread::spawn(move || {
                    barrier.wait();
                    store.transition(
                        &id,
                        PrescriptionStatus::Sent,
                        PrescriptionStatus::Acknowledged,
                        ack_event(&id, &ph),
                        |r| {
                            r.acknowledged_at = Some(at());
                            r.pharmacist_id = Some(ph.clone());
                            Ok(())
                        },
                    )
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
        assert!(results.iter().filter_map(|r| r.as_ref().err()).all(|e| e.code() == "CONFLICT"));
        assert_eq!(store.audit_scan(Some(rx.id.as_str())).unwrap().len(), 1);
    }
}

#[test]
fn concurrent_appends_are_gap_free() {
    let store = Store::in_memory().unwrap();
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let store = store.clone();
            thread::spawn(move || {
                for i in 0..50 {
                    store
                        .audit_append(
                            AuditEvent::new(at(), "t", "test.append", "thread", format!("{t}")).detail(json!({ "i": i })),
                        )
                        .unwrap();
                }
            })
        })
        .collect();
    handles.into_iter().for_each(|h| h.join().unwrap());
    let seqs: Vec<u64> = store.audit_scan(None).unwrap().iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=400).collect::<Vec<_>>());
    assert_eq!(store.audit_scan(Some("3")).unwrap().len(), 50);
    assert!(store.audit_scan(Some("unknown")).unwrap().is_empty());
}

#[test]
fn snapshots_are_isolated() {
    let store = Store::in_memory().unwrap();
    let empty = store.snapshot().unwrap();
    assert!(empty.list::<Drug>(&ListFilter::default()).unwrap().is_empty());
    assert!(empty.audit_scan(None).unwrap().is_empty());

    let mut d = drug("Isoniazid");
    store.put(&d).unwrap();
    let snap = store.snapshot().unwrap();
    d.strength = "300mg".into();
    store.put(&d).unwrap();
    store.put(&drug("Ethambutol")).unwrap();

    let first: Drug = snap.require(d.id.as_str()).unwrap();
    let second: Drug = snap.require(d.id.as_str()).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.strength, "");
    assert_eq!(snap.list::<Drug>(&ListFilter::default()).unwrap().len(), 1);
    assert!(empty.list::<Drug>(&ListFilter::default()).unwrap().is_empty());
}

#[test]
fn data_survives_reopening() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rx.redb");
    let rx = {
        let store = Store::open(&path).unwrap();
        let rx = sent_prescription(&store);
        for i in 0..3 {
            store.audit_append(AuditEvent::new(at(), "t", "test.append", "x", format!("{i}"))).unwrap();
        }
        rx
    };
    let store = Store::open(&path).unwrap();
    assert_eq!(store.get::<Prescription>(rx.id.as_str()).unwrap(), Some(rx));
    let seqs: Vec<u64> = store.audit_scan(None).unwrap().iter().map(|e| e.seq).collect();
    assert_eq!(seqs, [1, 2, 3]);
}

#[test]
fn a_held_store_cannot_be_opened_twice() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rx.redb");
    let _held = Store::open(&path).unwrap();
    let err = Store::open(&path).unwrap_err();
    assert_eq!(err.code(), "STORAGE");
}

fn arb_patient() -> impl Strategy<Value = Patient> {
    (
        "[A-Za-z ]{1,30}",
        0i64..30_000,
        prop_oneof![Just(Sex::M), Just(Sex::F), Just(Sex::Other)],
        proptest::collection::btree_set("[a-z0-9-]{1,12}", 0..6),
        any::<bool>(),
    )
        .prop_filter_map("blank name", |(name, days, sex, allergies, active)| {
            (!name.trim().is_empty()).then(|| Patient {
                id: PatientId::new(),
                full_name: name,
                date_of_birth: NaiveDate::from_ymd_opt(1940, 1, 1).unwrap() + chrono::Duration::days(days),
                sex,
                allergies,
                active,
            })
        })
}

fn arb_drug() -> impl Strategy<Value = Drug> {
    (
        "[A-Za-z][A-Za-z0-9 -]{0,20}",
        ".{0,40}",
        ".{0,40}",
        proptest::collection::btree_set("[a-z0-9]{1,8}", 0..4),
        any::<bool>(),
    )
        .prop_map(|(name, class, reactions, codes, active)| Drug {
            pharmaceutical_class: class,
            adverse_reactions: reactions,
            substance_codes: codes,
            active,
            ..drug(&name)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patients_round_trip(p in arb_patient()) {
        let store = Store::in_memory().unwrap();
        store.put(&p).unwrap();
        prop_assert_eq!(store.get::<Patient>(p.id.as_str()).unwrap(), Some(p));
    }

    #[test]
    fn drugs_round_trip(d in arb_drug()) {
        let store = Store::in_memory().unwrap();
        store.put(&d).unwrap();
        prop_assert_eq!(store.get::<Drug>(d.id.as_str()).unwrap(), Some(d));
    }

    #[test]
    fn diseases_round_trip(name in "[A-Za-z][A-Za-z ]{0,20}", description in ".{0,60}") {
        let store = Store::in_memory().unwrap();
        let d = Disease { description, ..disease(&name) };
        store.put(&d).unwrap();
        prop_assert_eq!(store.get::<Disease>(d.id.as_str()).unwrap(), Some(d));
    }

    #[test]
    fn accounts_round_trip(license in "[A-Z]{2}-[0-9]{1,6}", role in prop_oneof![Just(Role::Administrator), Just(Role::Doctor), Just(Role::Pharmacist)]) {
        let store = Store::in_memory().unwrap();
        let a = account(&license, role);
        store.put(&a).unwrap();
        prop_assert_eq!(store.get::<PractitionerAccount>(a.id.as_str()).unwrap(), Some(a));
    }
}

#[test]
fn prescriptions_are_found_by_patient() {
    let store = Store::in_memory().unwrap();
    let a = sent_prescription(&store);
    let b = sent_prescription(&store);
    let mut again = a.clone();
    again.id = PrescriptionId::new();
    store.put(&again).unwrap();
    store.put(&again).unwrap();

    let snap = store.snapshot().unwrap();
    let mut ids: Vec<_> = snap.prescriptions_for_patient(&a.patient_id).unwrap().into_iter().map(|r| r.id).collect();
    ids.sort();
    let mut want = vec![a.id.clone(), again.id.clone()];
    want.sort();
    assert_eq!(ids, want);
    assert_eq!(snap.prescriptions_for_patient(&b.patient_id).unwrap(), [b]);
    assert!(snap.prescriptions_for_patient(&PatientId::new()).unwrap().is_empty());
}
