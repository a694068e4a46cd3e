#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

use std::thread::JoinHandle;

use reqwest::blocking::Client as Http;
use reqwest::Method;
use rxtropic_core::Service;
use serde_json::Value;
use support::{World, PASSWORD};

/// The API served from a background runtime on an ephemeral port.
pub struct TestServer {
    pub base: String,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(svc: Service) -> Self {
        Self::start_with_ui(svc, None)
    }

    pub fn start_with_ui(svc: Service, ui_dir: Option<std::path::PathBuf>) -> Self {
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let (ready, addr) = std::sync::mpsc::channel();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                ready.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, rxtropic_server::router(svc, ui_dir))
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let addr = addr.recv().unwrap();
        Self { base: format!("http://{addr}"), stop: Some(stop), thread: Some(thread) }
    }

    pub fn client(&self) -> Client {
        Client { http: Http::new(), base: self.base.clone(), token: None }
    }

    /// A client logged in over HTTP.
    pub fn login(&self, license: &str) -> Client {
        let mut c = self.client();
        let (status, body) = c.post("/v1/login", serde_json::json!({"license_number": license, "password": PASSWORD}));
        assert_eq!(status, 200, "{body}");
        c.token = Some(body["token"].as_str().unwrap().to_owned());
        c
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// A seeded world behind a running server, with one client per seeded
/// account.
pub struct Deployment {
    pub world: World,
    pub server: TestServer,
    pub anon: Client,
    pub admin: Client,
    pub doctor: Client,
    pub doctor2: Client,
    pub pharmacist: Client,
    pub pharmacist2: Client,
}

impl Deployment {
    pub fn new() -> Self {
        let world = World::new();
        let server = TestServer::start(world.svc.clone());
        Self {
            anon: server.client(),
            admin: server.login("ADM-1"),
            doctor: server.login("MD-100"),
            doctor2: server.login("MD-200"),
            pharmacist: server.login("PH-100"),
            pharmacist2: server.login("PH-200"),
            world,
            server,
        }
    }
}

#[derive(Clone)]
pub struct Client {
    pub http: Http,
    pub base: String,
    pub token: Option<String>,
}

impl Client {
    pub fn with_token(&self, token: &str) -> Client {
        Client { token: Some(token.to_owned()), ..self.clone() }
    }

    /// Sends raw bytes; returns the status and the body text.
    pub fn raw(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> (u16, String) {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.header("content-type", "application/json").body(b);
        }
        let resp = req.send().unwrap();
        let status = resp.status().as_u16();
        (status, resp.text().unwrap())
    }

    pub fn call(&self, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let (status, text) = self.raw(method, path, body.map(|b| serde_json::to_vec(&b).unwrap()));
        let value = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) };
        (status, value)
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        self.call(Method::GET, path, None)
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::POST, path, Some(body))
    }

    pub fn put(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::PUT, path, Some(body))
    }

    pub fn delete(&self, path: &str) -> (u16, Value) {
        self.call(Method::DELETE, path, None)
    }
}

/// Finds the id of the record whose `field` equals `value` in a JSON list.
pub fn id_where(list: &Value, field: &str, value: &str) -> String {
    list.as_array()
        .unwrap()
        .iter()
        .find(|v| v[field] == value)
        .unwrap_or_else(|| panic!("no {field}={value} in {list}"))["id"]
        .as_str()
        .unwrap()
        .to_owned()
}
