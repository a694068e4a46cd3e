//! Runs every example so they cannot rot.

#[path = "../examples/access_control.rs"]
mod access_control;
#[path = "../examples/audit_trail.rs"]
mod audit_trail;
#[path = "../examples/pharmacy_queue.rs"]
mod pharmacy_queue;
#[path = "../examples/prescription_lifecycle.rs"]
mod prescription_lifecycle;
#[path = "../examples/screening.rs"]
mod screening;
#[path = "../examples/seed_fixture.rs"]
mod seed_fixture;

#[test]
fn access_control_runs() {
    access_control::run_example().unwrap();
}

#[test]
fn audit_trail_runs() {
    audit_trail::run_example().unwrap();
}

#[test]
fn pharmacy_queue_runs() {
    pharmacy_queue::run_example().unwrap();
}

#[test]
fn prescription_lifecycle_runs() {
    prescription_lifecycle::run_example().unwrap();
}

#[test]
fn screening_runs() {
    screening::run_example().unwrap();
}

#[test]
fn seed_fixture_runs() {
    seed_fixture::run_example().unwrap();
}
