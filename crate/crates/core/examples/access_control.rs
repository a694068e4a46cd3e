//! Logins, sessions and the role/permission matrix.

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use rxtropic_core::admin::NewPractitioner;
use rxtropic_core::auth::{allows, HashCost, Permission};
use rxtropic_core::clock::ManualClock;
use rxtropic_core::domain::Role;
use rxtropic_core::store::Store;
use rxtropic_core::{tooling, Service, ServiceConfig};

pub fn run_example() -> rxtropic_core::Result<()> {
    print!("{:<20}", "");
    for role in Role::ALL {
        print!("{:<15}", role.as_str());
    }
    println!();
    for p in Permission::ALL {
        print!("{:<20}", p.as_str());
        for role in Role::ALL {
            print!("{:<15}", if allows(role, p) { "yes" } else { "-" });
        }
        println!();
    }
    println!();

    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 1, 7, 0, 0).unwrap()));
    let svc = Service::new(
        Store::in_memory()?,
        ServiceConfig {
            clock: clock.clone(),
            hash_cost: HashCost::Minimal,
            session_ttl: Duration::hours(1),
            ..Default::default()
        },
    );
    tooling::bootstrap_admin(&svc.store, clock.as_ref(), svc.auth.hasher(), "Site Admin", "ADM-1", "admin password")?;
    let admin = svc.auth.authenticate(&svc.auth.login("ADM-1", "admin password")?.token)?;
    svc.admin.create_practitioner(
        &admin,
        NewPractitioner {
            full_name: "Ph Nwosu".into(),
            role: Role::Pharmacist,
            license_number: "PH-100".into(),
            password: "s3cret pass".into(),
        },
    )?;

    // A wrong password and an unknown license look the same to the caller.
    let wrong = svc.auth.login("PH-100", "guess").unwrap_err();
    let unknown = svc.auth.login("PH-999", "guess").unwrap_err();
    println!("bad logins: {} / {}", wrong.code(), unknown.code());
    assert_eq!(wrong.to_string(), unknown.to_string());

    let session = svc.auth.login("PH-100", "s3cret pass")?;
    println!("pharmacist session expires {}", session.expires_at);
    let denied = svc.auth.authorize(&session.token, Permission::ComposeRx).unwrap_err();
    println!("pharmacist composing: {denied}");
    svc.auth.authorize(&session.token, Permission::DispenseRx)?;

    clock.advance(Duration::minutes(61));
    println!("after an hour: {}", svc.auth.authenticate(&session.token).unwrap_err().code());

    let again = svc.auth.login("PH-100", "s3cret pass")?;
    svc.auth.logout(&again.token)?;
    println!("after logout: {}", svc.auth.authenticate(&again.token).unwrap_err().code());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
