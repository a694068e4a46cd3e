//! Two pharmacists work the pending queue. It is ordered oldest first, and
//! a prescription can be acknowledged by only one of them.

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use rxtropic_core::admin::NewPractitioner;
use rxtropic_core::auth::HashCost;
use rxtropic_core::clock::ManualClock;
use rxtropic_core::domain::{name_key, Disease, Drug, Patient, PrescriptionItem, Role};
use rxtropic_core::store::{ListFilter, Reader, Store};
use rxtropic_core::{fixture, tooling, Service, ServiceConfig};

pub fn run_example() -> rxtropic_core::Result<()> {
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 2, 8, 0, 0).unwrap()));
    let svc = Service::new(
        Store::in_memory()?,
        ServiceConfig { clock: clock.clone(), hash_cost: HashCost::Minimal, ..Default::default() },
    );
    tooling::bootstrap_admin(&svc.store, clock.as_ref(), svc.auth.hasher(), "Site Admin", "ADM-1", "admin password")?;
    tooling::seed(&svc.store, clock.as_ref(), &fixture::default_fixture())?;
    let admin = svc.auth.authenticate(&svc.auth.login("ADM-1", "admin password")?.token)?;
    let mut staff = Vec::new();
    for (name, role, license) in [
        ("Dr Okonkwo", Role::Doctor, "MD-100"),
        ("Ph Nwosu", Role::Pharmacist, "PH-100"),
        ("Ph Balogun", Role::Pharmacist, "PH-200"),
    ] {
        svc.admin.create_practitioner(
            &admin,
            NewPractitioner { full_name: name.into(), role, license_number: license.into(), password: "s3cret pass".into() },
        )?;
        staff.push(svc.auth.authenticate(&svc.auth.login(license, "s3cret pass")?.token)?);
    }
    let (doctor, nwosu, balogun) = (&staff[0], &staff[1], &staff[2]);

    let snap = svc.store.snapshot()?;
    let patients = snap.list::<Patient>(&ListFilter::default())?;
    let tb = snap.find_unique::<Disease>(&name_key("Tuberculosis"))?.unwrap().id;
    let ethambutol = snap.find_unique::<Drug>(&name_key("Ethambutol"))?.unwrap().id;
    drop(snap);

    for p in &patients {
        let rx = svc.workflow.compose(
            doctor,
            &p.id,
            &tb,
            vec![PrescriptionItem {
                drug_id: ethambutol.clone(),
                dose: "800mg".into(),
                frequency: "once daily".into(),
                duration_days: 60,
                instructions: String::new(),
            }],
        )?;
        clock.advance(Duration::minutes(7));
        svc.workflow.send(doctor, &rx.id, &[])?;
    }

    let queue = svc.workflow.list_pending(nwosu)?;
    for row in &queue {
        println!("{}  {}  {:<14} {}", row.sent_at.unwrap().format("%H:%M"), row.status, row.patient_name, row.diagnosis_name);
    }

    let first = &queue[0].id;
    svc.workflow.acknowledge(nwosu, first)?;
    let err = svc.workflow.acknowledge(balogun, first).unwrap_err();
    println!("second acknowledge: {} ({})", err.code(), err);
    let err = svc.workflow.dispense(balogun, first).unwrap_err();
    println!("other pharmacist dispensing: {}", err.code());
    svc.workflow.dispense(nwosu, first)?;

    let left = svc.workflow.list_pending(balogun)?;
    println!("{} left in the queue, {} of them acknowledged", left.len(), left.iter().filter(|r| r.pharmacist_id.is_some()).count());
    assert_eq!(left.len(), queue.len() - 1);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
