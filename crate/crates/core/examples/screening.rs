//! Screens a draft prescription against the seeded demo formulary without
//! touching the workflow: allergy, interaction, indication and duplicate
//! checks all run on plain values.

use chrono::{TimeZone, Utc};
use rxtropic_core::domain::{name_key, Disease, Drug, Patient, PrescriptionItem};
use rxtropic_core::rules::{self, Formulary, PatientClinicalContext, DEFAULT_DUPLICATE_WINDOW_DAYS};
use rxtropic_core::store::{ListFilter, Reader, Store};
use rxtropic_core::{clock::ManualClock, fixture, tooling};

pub fn run_example() -> rxtropic_core::Result<()> {
    let store = Store::in_memory()?;
    tooling::seed(&store, &ManualClock::default(), &fixture::default_fixture())?;
    let snap = store.snapshot()?;
    let formulary = Formulary::load(&snap)?;

    let drug = |name: &str| snap.find_unique::<Drug>(&name_key(name)).map(|d| d.unwrap().id);
    let malaria = snap.find_unique::<Disease>(&name_key("Malaria"))?.unwrap().id;
    let patient = snap
        .list::<Patient>(&ListFilter::name("Adaeze"))?
        .pop()
        .expect("seeded patient");
    println!("patient {} allergies {:?}", patient.full_name, patient.allergies);

    let items: Vec<PrescriptionItem> = ["Quinine", "Ciprofloxacin"]
        .into_iter()
        .map(|name| {
            Ok(PrescriptionItem {
                drug_id: drug(name)?,
                dose: "1 tablet".into(),
                frequency: "every 8 hours".into(),
                duration_days: 7,
                instructions: String::new(),
            })
        })
        .collect::<rxtropic_core::Result<_>>()?;

    let as_of = Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap();
    let context = PatientClinicalContext::assemble(&patient, &[], as_of, DEFAULT_DUPLICATE_WINDOW_DAYS);
    let findings = rules::validate(&malaria, &items, &context, &formulary, DEFAULT_DUPLICATE_WINDOW_DAYS)?;
    for f in &findings {
        println!("{:<11} {:<5} {}", f.kind.as_str(), format!("{:?}", f.severity).to_uppercase(), f.message);
    }
    assert!(rules::has_block(&findings), "quinine allergy must block");

    println!("suggested for malaria:");
    for d in rules::suggest_drugs(&malaria, &formulary.registry)? {
        println!("  {} ({})", d.name, d.strength);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
