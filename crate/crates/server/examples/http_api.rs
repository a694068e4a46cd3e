//! Serves the HTTP API from an in-memory store and walks a prescription
//! through it with a plain HTTP client: log in, look up a patient, compose,
//! check findings, send, then acknowledge and print from the pharmacy side.

use std::sync::Arc;

use reqwest::blocking::Client;
use rxtropic_core::admin::NewPractitioner;
use rxtropic_core::auth::HashCost;
use rxtropic_core::clock::SystemClock;
use rxtropic_core::domain::Role;
use rxtropic_core::store::Store;
use rxtropic_core::{fixture, tooling, Service, ServiceConfig};
use serde_json::{json, Value};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

fn setup() -> rxtropic_core::Result<Service> {
    let svc = Service::new(
        Store::in_memory()?,
        ServiceConfig { clock: Arc::new(SystemClock), hash_cost: HashCost::Minimal, ..Default::default() },
    );
    tooling::bootstrap_admin(&svc.store, &SystemClock, svc.auth.hasher(), "Site Admin", "ADM-1", "admin password")?;
    tooling::seed(&svc.store, &SystemClock, &fixture::default_fixture())?;
    let admin = svc.auth.authenticate(&svc.auth.login("ADM-1", "admin password")?.token)?;
    for (name, role, license) in [("Dr Okonkwo", Role::Doctor, "MD-100"), ("Ph Nwosu", Role::Pharmacist, "PH-100")] {
        svc.admin.create_practitioner(
            &admin,
            NewPractitioner { full_name: name.into(), role, license_number: license.into(), password: "s3cret pass".into() },
        )?;
    }
    Ok(svc)
}

struct Api {
    http: Client,
    base: String,
    token: String,
}

impl Api {
    fn login(base: &str, license: &str) -> Result<Self, BoxError> {
        let http = Client::new();
        let body: Value = http
            .post(format!("{base}/v1/login"))
            .json(&json!({"license_number": license, "password": "s3cret pass"}))
            .send()?
            .error_for_status()?
            .json()?;
        Ok(Self { http, base: base.into(), token: body["token"].as_str().unwrap_or_default().into() })
    }

    fn get(&self, path: &str) -> Result<Value, BoxError> {
        Ok(self.http.get(format!("{}{path}", self.base)).bearer_auth(&self.token).send()?.json()?)
    }

    fn post(&self, path: &str, body: Value) -> Result<(u16, Value), BoxError> {
        let resp = self.http.post(format!("{}{path}", self.base)).bearer_auth(&self.token).json(&body).send()?;
        Ok((resp.status().as_u16(), resp.json()?))
    }
}

fn find<'a>(list: &'a Value, field: &str, value: &str) -> &'a str {
    list.as_array()
        .and_then(|l| l.iter().find(|v| v[field] == value))
        .and_then(|v| v["id"].as_str())
        .unwrap_or_default()
}

fn walkthrough(base: &str) -> Result<(), BoxError> {
    let doctor = Api::login(base, "MD-100")?;
    let pharmacist = Api::login(base, "PH-100")?;

    let tunde = doctor.get("/v1/patients?q=tunde")?;
    let tunde = find(&tunde, "full_name", "Tunde Bello").to_owned();
    let malaria = find(&doctor.get("/v1/diseases")?, "name", "Malaria").to_owned();
    let suggested = doctor.get(&format!("/v1/diseases/{malaria}/suggested-drugs"))?;
    let names: Vec<&str> = suggested.as_array().into_iter().flatten().filter_map(|d| d["name"].as_str()).collect();
    println!("suggested for malaria: {}", names.join(", "));

    let line = json!({
        "drug_id": find(&suggested, "name", "Artesunate"),
        "dose": "120mg",
        "frequency": "once daily",
        "duration_days": 3,
        "instructions": "after meals",
    });
    let (status, rx) = doctor.post("/v1/prescriptions", json!({"patient_id": tunde, "diagnosis": malaria, "items": [line]}))?;
    let id = rx["id"].as_str().unwrap_or_default().to_owned();
    println!("compose -> {status} {}", rx["status"]);
    println!("findings: {}", doctor.get(&format!("/v1/prescriptions/{id}/findings"))?);
    let (status, rx) = doctor.post(&format!("/v1/prescriptions/{id}/send"), json!({}))?;
    println!("send -> {status} {}", rx["status"]);

    let pending = pharmacist.get("/v1/pharmacy/pending")?;
    println!("pending: {} prescription(s)", pending.as_array().map_or(0, Vec::len));
    let (status, rx) = pharmacist.post(&format!("/v1/prescriptions/{id}/acknowledge"), json!(null))?;
    println!("acknowledge -> {status} {}", rx["status"]);
    let (status, err) = doctor.post(&format!("/v1/prescriptions/{id}/cancel"), json!({"reason": "too late"}))?;
    println!("cancel after acknowledge -> {status} {}", err["code"]);

    let text = pharmacist
        .http
        .get(format!("{base}/v1/prescriptions/{id}/print"))
        .bearer_auth(&pharmacist.token)
        .send()?
        .text()?;
    println!("\n{text}");
    Ok(())
}

pub fn run_example() -> Result<(), BoxError> {
    let app = rxtropic_server::router(setup()?, None);
    let runtime = tokio::runtime::Runtime::new()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = runtime.spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    let result = walkthrough(&base);
    let _ = stop.send(());
    runtime.block_on(server)??;
    result
}

#[allow(dead_code)]
fn main() -> Result<(), BoxError> {
    run_example()
}
