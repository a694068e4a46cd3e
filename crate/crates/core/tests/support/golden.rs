//! Three hand-written prescriptions with fixed ids, and the print-outs they
//! must produce.

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rxtropic_core::domain::*;
use rxtropic_core::ids::*;
use rxtropic_core::store::Store;

pub const PRINTED_AT: (i32, u32, u32, u32, u32, u32) = (2026, 4, 2, 8, 30, 0);

pub const CASES: [(&str, &str); 3] = [
    ("0a1b2c3d4e5f60718293a4b5c6d7e8f9", "malaria_sent.txt"),
    ("5f0e1d2c3b4a59687766554433221100", "typhoid_acknowledged.txt"),
    ("ffeeddccbbaa99887766554433221100", "tuberculosis_dispensed.txt"),
];

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

pub fn printed_at() -> DateTime<Utc> {
    let (y, mo, d, h, mi, s) = PRINTED_AT;
    Utc.with_ymd_and_hms(y, mo, d, h, mi, s).unwrap()
}

fn t(day: u32, hour: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 4, day, hour, 0, 0).unwrap()
}

fn doctor(id: &str, name: &str, license: &str) -> PractitionerAccount {
    PractitionerAccount {
        id: id.into(),
        full_name: name.into(),
        role: Role::Doctor,
        license_number: license.into(),
        password_digest: PasswordDigest::from_phc("$argon2id$unused".into()),
        active: true,
        created_at: t(1, 0),
    }
}

fn patient(id: &str, name: &str, dob: (i32, u32, u32)) -> Patient {
    Patient {
        id: id.into(),
        full_name: name.into(),
        date_of_birth: NaiveDate::from_ymd_opt(dob.0, dob.1, dob.2).unwrap(),
        sex: Sex::Other,
        allergies: BTreeSet::new(),
        active: true,
    }
}

fn drug(id: &str, name: &str, indication: &str) -> Drug {
    Drug {
        id: id.into(),
        name: name.into(),
        pharmaceutical_class: String::new(),
        generic_description: String::new(),
        indications: [DiseaseId::from(indication)].into(),
        adverse_reactions: String::new(),
        strength: String::new(),
        substance_codes: BTreeSet::new(),
        active: true,
    }
}

fn line(drug: &str, dose: &str, frequency: &str, days: u32, instructions: &str) -> PrescriptionItem {
    PrescriptionItem {
        drug_id: drug.into(),
        dose: dose.into(),
        frequency: frequency.into(),
        duration_days: days,
        instructions: instructions.into(),
    }
}

/// Puts the golden records into `store`. The pharmacist who handled the
/// later two has id `ph-golden`.
pub fn load(store: &Store) {
    let pharmacist = PractitionerAccount {
        id: "ph-golden".into(),
        full_name: "Ph Golden".into(),
        role: Role::Pharmacist,
        license_number: "PH-GOLDEN".into(),
        ..doctor("x", "x", "x")
    };
    let base = |id: &str, patient: &str, prescriber: &str, diagnosis: &str, items| Prescription {
        id: id.into(),
        patient_id: patient.into(),
        prescriber_id: prescriber.into(),
        diagnosis: diagnosis.into(),
        items,
        status: PrescriptionStatus::Sent,
        overrides: vec![],
        created_at: t(1, 9),
        sent_at: Some(t(1, 10)),
        acknowledged_at: None,
        dispensed_at: None,
        cancelled_at: None,
        pharmacist_id: None,
    };
    let malaria = base(CASES[0].0, "pt-tunde", "dr-amaka", "dx-malaria", vec![line(
        "rx-al",
        "4 tablets",
        "twice daily",
        3,
        "take with fatty food",
    )]);
    let typhoid = Prescription {
        status: PrescriptionStatus::Acknowledged,
        acknowledged_at: Some(t(1, 11)),
        pharmacist_id: Some(pharmacist.id.clone()),
        ..base(CASES[1].0, "pt-adaeze", "dr-amaka", "dx-typhoid", vec![
            line("rx-cro", "2 g", "once daily", 10, "IV infusion over 30 minutes"),
            line("rx-pcm", "1 g", "every 6 hours", 5, "as needed for fever"),
        ])
    };
    let tb = Prescription {
        status: PrescriptionStatus::Dispensed,
        acknowledged_at: Some(t(1, 11)),
        dispensed_at: Some(t(1, 12)),
        pharmacist_id: Some(pharmacist.id.clone()),
        ..base(CASES[2].0, "pt-emile", "dr-ifeoma", "dx-tb", vec![
            line("rx-inh", "300 mg", "once daily", 180, "on an empty stomach"),
            line("rx-rif", "600 mg", "once daily", 180, "on an empty stomach"),
            line("rx-emb", "1200 mg", "once daily", 60, ""),
        ])
    };
    store
        .write(|tx| {
            for d in [
                Disease { id: "dx-malaria".into(), name: "Malaria".into(), description: String::new() },
                Disease { id: "dx-typhoid".into(), name: "Typhoid".into(), description: String::new() },
                Disease { id: "dx-tb".into(), name: "Tuberculosis".into(), description: String::new() },
            ] {
                tx.put(&d)?;
            }
            for d in [
                drug("rx-al", "Artemether-Lumefantrine", "dx-malaria"),
                drug("rx-cro", "Ceftriaxone", "dx-typhoid"),
                drug("rx-pcm", "Paracetamol", "dx-typhoid"),
                drug("rx-inh", "Isoniazid", "dx-tb"),
                drug("rx-rif", "Rifampicin", "dx-tb"),
                drug("rx-emb", "Ethambutol", "dx-tb"),
            ] {
                tx.put(&d)?;
            }
            tx.put(&doctor("dr-amaka", "Dr Amaka Okonkwo", "MD-100"))?;
            tx.put(&doctor("dr-ifeoma", "Dr Ifeoma Nwachukwu", "MD/2291"))?;
            tx.put(&pharmacist)?;
            tx.put(&patient("pt-tunde", "Tunde Bello", (1972, 11, 30)))?;
            tx.put(&patient("pt-adaeze", "Adaeze Okafor", (1986, 4, 12)))?;
            tx.put(&patient("pt-emile", "Émile Ndiaye", (1995, 2, 14)))?;
            tx.put(&malaria)?;
            tx.put(&typhoid)?;
            tx.put(&tb)
        })
        .unwrap();
}

/// Drops the PRINTED line, which is the only part allowed to differ.
pub fn without_timestamp(text: &str) -> String {
    text.split_inclusive('\n').filter(|l| !l.starts_with("PRINTED: ")).collect()
}
