//! Every mutation leaves one entry in the audit log. This walks a
//! prescription through cancellation and prints its trail, then exports the
//! whole log as JSON lines.

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use rxtropic_core::admin::NewPractitioner;
use rxtropic_core::auth::HashCost;
use rxtropic_core::clock::ManualClock;
use rxtropic_core::domain::{name_key, Disease, Drug, Patient, PrescriptionItem, Role};
use rxtropic_core::store::{ListFilter, Reader, Store};
use rxtropic_core::{fixture, tooling, Service, ServiceConfig};

pub fn run_example() -> rxtropic_core::Result<()> {
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 3, 10, 0, 0).unwrap()));
    let svc = Service::new(
        Store::in_memory()?,
        ServiceConfig { clock: clock.clone(), hash_cost: HashCost::Minimal, ..Default::default() },
    );
    tooling::bootstrap_admin(&svc.store, clock.as_ref(), svc.auth.hasher(), "Site Admin", "ADM-1", "admin password")?;
    tooling::seed(&svc.store, clock.as_ref(), &fixture::default_fixture())?;
    let admin = svc.auth.authenticate(&svc.auth.login("ADM-1", "admin password")?.token)?;
    svc.admin.create_practitioner(
        &admin,
        NewPractitioner {
            full_name: "Dr Okonkwo".into(),
            role: Role::Doctor,
            license_number: "MD-100".into(),
            password: "s3cret pass".into(),
        },
    )?;
    let doctor = svc.auth.authenticate(&svc.auth.login("MD-100", "s3cret pass")?.token)?;

    let snap = svc.store.snapshot()?;
    let grace = snap.list::<Patient>(&ListFilter::name("Grace"))?.pop().unwrap().id;
    let malaria = snap.find_unique::<Disease>(&name_key("Malaria"))?.unwrap().id;
    let artesunate = snap.find_unique::<Drug>(&name_key("Artesunate"))?.unwrap().id;
    drop(snap);

    let rx = svc.workflow.compose(
        &doctor,
        &grace,
        &malaria,
        vec![PrescriptionItem {
            drug_id: artesunate,
            dose: "200mg".into(),
            frequency: "once daily".into(),
            duration_days: 3,
            instructions: String::new(),
        }],
    )?;
    clock.advance(Duration::minutes(2));
    svc.workflow.send(&doctor, &rx.id, &[])?;
    clock.advance(Duration::minutes(20));
    svc.workflow.cancel(&doctor, &rx.id, "patient vomiting; switching to IV")?;

    for e in svc.admin.audit(&admin, Some(rx.id.as_str()))? {
        println!("#{:<3} {} {:<22} {}", e.seq, e.at.format("%H:%M"), e.action, e.detail);
    }

    let mut out = Vec::new();
    let n = tooling::export_audit(&svc.store, &mut out)?;
    println!("\nexported {n} entries; the first one:");
    println!("{}", String::from_utf8_lossy(&out).lines().next().unwrap_or_default());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
