//! A doctor composes a typhoid prescription, clears the warnings with
//! override reasons, sends it, and a pharmacist acknowledges, dispenses and
//! prints it.

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use rxtropic_core::admin::NewPractitioner;
use rxtropic_core::auth::HashCost;
use rxtropic_core::clock::ManualClock;
use rxtropic_core::domain::{name_key, Disease, Drug, Patient, PrescriptionItem, Role};
use rxtropic_core::store::{ListFilter, Reader, Store};
use rxtropic_core::workflow::OverrideRequest;
use rxtropic_core::{fixture, tooling, Error, Service, ServiceConfig};

pub fn run_example() -> rxtropic_core::Result<()> {
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap()));
    let svc = Service::new(
        Store::in_memory()?,
        ServiceConfig { clock: clock.clone(), hash_cost: HashCost::Minimal, ..Default::default() },
    );
    tooling::bootstrap_admin(&svc.store, clock.as_ref(), svc.auth.hasher(), "Site Admin", "ADM-1", "admin password")?;
    tooling::seed(&svc.store, clock.as_ref(), &fixture::default_fixture())?;
    let admin = svc.auth.authenticate(&svc.auth.login("ADM-1", "admin password")?.token)?;
    for (name, role, license) in [("Dr Okonkwo", Role::Doctor, "MD-100"), ("Ph Nwosu", Role::Pharmacist, "PH-100")] {
        svc.admin.create_practitioner(
            &admin,
            NewPractitioner { full_name: name.into(), role, license_number: license.into(), password: "s3cret pass".into() },
        )?;
    }
    let doctor = svc.auth.authenticate(&svc.auth.login("MD-100", "s3cret pass")?.token)?;
    let pharmacist = svc.auth.authenticate(&svc.auth.login("PH-100", "s3cret pass")?.token)?;

    let snap = svc.store.snapshot()?;
    let drug = |name: &str| snap.find_unique::<Drug>(&name_key(name)).map(|d| d.unwrap().id);
    let typhoid = snap.find_unique::<Disease>(&name_key("Typhoid"))?.unwrap().id;
    let tunde = snap.list::<Patient>(&ListFilter::name("Tunde"))?.pop().unwrap().id;
    let (cipro, quinine) = (drug("Ciprofloxacin")?, drug("Quinine")?);
    drop(snap);

    let item = |drug_id, dose: &str, days| PrescriptionItem {
        drug_id,
        dose: dose.into(),
        frequency: "twice daily".into(),
        duration_days: days,
        instructions: "with water".into(),
    };
    // Quinine is off-label for typhoid and interacts with ciprofloxacin.
    let rx = svc.workflow.compose(
        &doctor,
        &tunde,
        &typhoid,
        vec![item(cipro, "500mg", 7), item(quinine, "600mg", 3)],
    )?;
    for f in svc.workflow.preview_findings(&doctor, &rx.id)? {
        println!("finding: {} {}", f.kind.as_str(), f.message);
    }

    let warnings = match svc.workflow.send(&doctor, &rx.id, &[]) {
        Err(Error::OverridesRequired(found)) => found,
        other => panic!("expected overrides to be required, got {other:?}"),
    };
    let overrides: Vec<_> = warnings
        .iter()
        .map(|f| OverrideRequest::new(f.kind, "discussed with patient; monitoring QT"))
        .collect();
    clock.advance(Duration::minutes(5));
    let sent = svc.workflow.send(&doctor, &rx.id, &overrides)?;
    println!("{} is {} with {} override(s)", sent.id, sent.status, sent.overrides.len());

    clock.advance(Duration::minutes(30));
    svc.workflow.acknowledge(&pharmacist, &rx.id)?;
    clock.advance(Duration::minutes(10));
    let done = svc.workflow.dispense(&pharmacist, &rx.id)?;
    println!("{} is {}\n", done.id, done.status);
    print!("{}", svc.workflow.print_copy(&pharmacist, &rx.id)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
