//! The versioned JSON API.
//!
//! Every handler authenticates the bearer token and checks the route's
//! permission before it looks at the path, query or body, so a caller
//! without the right role never learns whether their input was well formed.
//! Work that touches the store or hashes passwords runs on the blocking pool.

use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use rxtropic_core::admin::{DiseaseInput, DrugInput, InteractionInput, NewPractitioner, PatientInput, PractitionerUpdate};
use rxtropic_core::auth::{Actor, Permission};
use rxtropic_core::domain::{PrescriptionItem, Role, ValidationFinding};
use rxtropic_core::ids::{AccountId, DiseaseId, PatientId, PrescriptionId};
use rxtropic_core::store::ListFilter;
use rxtropic_core::workflow::OverrideRequest;
use rxtropic_core::{Error, Service};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub findings: Option<Vec<ValidationFinding>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

/// The fixed code to status table.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "UNAUTHENTICATED" | "INVALID_CREDENTIALS" => StatusCode::UNAUTHORIZED,
        "FORBIDDEN" | "NOT_PRESCRIBER" | "NOT_ACKNOWLEDGING_PHARMACIST" => StatusCode::FORBIDDEN,
        "NOT_FOUND" | "UNKNOWN_PATIENT" | "UNKNOWN_DISEASE" | "UNKNOWN_DRUG" => StatusCode::NOT_FOUND,
        "CONFLICT" | "WRONG_STATE" | "BLOCKED" | "OVERRIDES_REQUIRED" | "UNIQUE_VIOLATION"
        | "ALREADY_BOOTSTRAPPED" => StatusCode::CONFLICT,
        "VALIDATION" | "WEAK_PASSWORD" | "PARSE_ERROR" | "REFERENCE_ERROR" => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let code = err.code();
        let status = status_for(code);
        if status.is_server_error() {
            tracing::error!(code, "{err}");
        }
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: err.to_string(),
                findings: err.findings().map(<[_]>::to_vec),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
struct AppState {
    svc: Service,
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim().to_owned())
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> rxtropic_core::Result<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => result.map_err(ApiError::from),
        Err(join) => Err(Error::Storage(format!("worker failed: {join}")).into()),
    }
}

/// Authorizes the caller for `permission`, then runs `f` off the async pool.
async fn guarded<T, F>(state: &AppState, headers: &HeaderMap, permission: Permission, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service, &Actor) -> rxtropic_core::Result<T> + Send + 'static,
{
    let token = bearer(headers).ok_or(Error::Unauthenticated)?;
    let svc = state.svc.clone();
    blocking(move || {
        let actor = svc.auth.authorize(&token, permission)?;
        f(&svc, &actor)
    })
    .await
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> rxtropic_core::Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::Validation(vec![format!("request body: {e}")]))
}

/// Like [`parse`], but an empty body means the default value.
fn parse_or_default<T: DeserializeOwned + Default>(body: &[u8]) -> rxtropic_core::Result<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse(body)
    }
}

#[derive(Debug, Default, Deserialize)]
struct ListQuery {
    q: Option<String>,
    active: Option<bool>,
    entity: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

impl ListQuery {
    fn from_uri(uri: &Uri) -> rxtropic_core::Result<Self> {
        Query::<Self>::try_from_uri(uri)
            .map(|q| q.0)
            .map_err(|e| Error::Validation(vec![e.body_text()]))
    }

    fn filter(&self) -> ListFilter {
        ListFilter { name_contains: self.q.clone(), active: self.active, status: None }
    }

    fn page<T>(&self, items: Vec<T>) -> Vec<T> {
        items
            .into_iter()
            .skip(self.offset.unwrap_or(0))
            .take(self.limit.unwrap_or(usize::MAX))
            .collect()
    }
}

/// Routes under `/v1` plus `/healthz`. With `ui_dir`, anything else is
/// served from that directory.
pub fn router(svc: Service, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/login", post(login))
        .route("/logout", post(logout))
        .route("/password", post(change_password))
        .route("/session", get(session))
        .route("/admin/practitioners", get(list_practitioners).post(create_practitioner))
        .route(
            "/admin/practitioners/{id}",
            get(get_practitioner).put(update_practitioner).delete(deactivate_practitioner),
        )
        .route("/admin/patients", get(list_patients).post(create_patient))
        .route("/admin/patients/{id}", get(get_patient).put(update_patient).delete(deactivate_patient))
        .route("/admin/drugs", get(list_drugs).post(create_drug))
        .route("/admin/drugs/{id}", get(get_drug).put(update_drug).delete(deactivate_drug))
        .route("/admin/diseases", get(list_diseases).post(create_disease))
        .route("/admin/diseases/{id}", get(get_disease).put(update_disease).delete(delete_disease))
        .route("/admin/interactions", get(list_interactions).post(create_interaction))
        .route(
            "/admin/interactions/{id}",
            get(get_interaction).put(update_interaction).delete(delete_interaction),
        )
        .route("/patients", get(search_patients))
        .route("/patients/{id}/record", get(patient_record))
        .route("/drugs", get(search_drugs))
        .route("/drugs/{id}", get(drug_detail))
        .route("/diseases", get(diseases))
        .route("/diseases/{id}/suggested-drugs", get(suggested_drugs))
        .route("/prescriptions", post(compose))
        .route("/prescriptions/{id}", get(get_prescription).put(edit_draft))
        .route("/prescriptions/{id}/findings", get(preview_findings))
        .route("/prescriptions/{id}/send", post(send))
        .route("/prescriptions/{id}/cancel", post(cancel))
        .route("/prescriptions/{id}/acknowledge", post(acknowledge))
        .route("/prescriptions/{id}/dispense", post(dispense))
        .route("/prescriptions/{id}/print", get(print))
        .route("/pharmacy/pending", get(pending))
        .route("/audit", get(audit))
        .fallback(any(not_found));

    let app = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .nest("/v1", api)
        .with_state(AppState { svc });
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(any(not_found)),
    }
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        body: ErrorBody { code: "NOT_FOUND".into(), message: format!("no route for {}", uri.path()), findings: None },
    }
}

// auth

#[derive(Deserialize)]
struct LoginBody {
    license_number: String,
    password: String,
}

#[derive(Serialize)]
struct LoginReply {
    token: String,
    role: Role,
    account_id: AccountId,
    expires_at: DateTime<Utc>,
}

async fn login(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<LoginReply>> {
    let svc = s.svc.clone();
    blocking(move || {
        let LoginBody { license_number, password } = parse(&body)?;
        let session = svc.auth.login(&license_number, &password)?;
        Ok(Json(LoginReply {
            token: session.token,
            role: session.role,
            account_id: session.account_id,
            expires_at: session.expires_at,
        }))
    })
    .await
}

async fn logout(State(s): State<AppState>, headers: HeaderMap) -> ApiResult<StatusCode> {
    let token = bearer(&headers).ok_or(Error::Unauthenticated)?;
    let svc = s.svc.clone();
    blocking(move || {
        svc.auth.authenticate(&token)?;
        svc.auth.logout(&token)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct PasswordBody {
    old_password: String,
    new_password: String,
}

async fn change_password(State(s): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<StatusCode> {
    let token = bearer(&headers).ok_or(Error::Unauthenticated)?;
    let svc = s.svc.clone();
    blocking(move || {
        svc.auth.authenticate(&token)?;
        let b: PasswordBody = parse(&body)?;
        svc.auth.change_password(&token, &b.old_password, &b.new_password)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize)]
struct SessionReply {
    account_id: AccountId,
    role: Role,
    permissions: Vec<Permission>,
}

async fn session(State(s): State<AppState>, headers: HeaderMap) -> ApiResult<Json<SessionReply>> {
    let token = bearer(&headers).ok_or(Error::Unauthenticated)?;
    let svc = s.svc.clone();
    blocking(move || {
        let actor = svc.auth.authenticate(&token)?;
        Ok(Json(SessionReply {
            permissions: Permission::ALL.into_iter().filter(|&p| actor.can(p)).collect(),
            account_id: actor.account_id,
            role: actor.role,
        }))
    })
    .await
}

// admin

/// One registry kind: list, create, get, replace and remove.
macro_rules! crud {
    ($perm:expr, $id:ty,
     $list:ident => |$ls:ident, $la:ident, $lq:ident| $list_body:expr,
     $create:ident($input:ty) => $create_fn:ident,
     $get:ident => $get_fn:ident,
     $update:ident($update_input:ty) => $update_fn:ident,
     $remove:ident => $remove_fn:ident) => {
        async fn $list(State(s): State<AppState>, headers: HeaderMap, uri: Uri) -> ApiResult<Response> {
            guarded(&s, &headers, $perm, move |$ls, $la| {
                let $lq = ListQuery::from_uri(&uri)?;
                let items = $list_body?;
                Ok(Json($lq.page(items)).into_response())
            })
            .await
        }

        async fn $create(State(s): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
            guarded(&s, &headers, $perm, move |svc, actor| {
                let input: $input = parse(&body)?;
                Ok((StatusCode::CREATED, Json(svc.admin.$create_fn(actor, input)?)).into_response())
            })
            .await
        }

        async fn $get(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
            guarded(&s, &headers, $perm, move |svc, actor| {
                Ok(Json(svc.admin.$get_fn(actor, &<$id>::from(id))?).into_response())
            })
            .await
        }

        async fn $update(
            State(s): State<AppState>,
            headers: HeaderMap,
            Path(id): Path<String>,
            body: Bytes,
        ) -> ApiResult<Response> {
            guarded(&s, &headers, $perm, move |svc, actor| {
                let input: $update_input = parse(&body)?;
                Ok(Json(svc.admin.$update_fn(actor, &<$id>::from(id), input)?).into_response())
            })
            .await
        }

        async fn $remove(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
            guarded(&s, &headers, $perm, move |svc, actor| {
                Ok(Json(svc.admin.$remove_fn(actor, &<$id>::from(id))?).into_response())
            })
            .await
        }
    };
}

crud!(Permission::ManageUsers, AccountId,
    list_practitioners => |svc, actor, q| svc.admin.list_practitioners(actor, &q.filter()),
    create_practitioner(NewPractitioner) => create_practitioner,
    get_practitioner => get_practitioner,
    update_practitioner(PractitionerUpdate) => update_practitioner,
    deactivate_practitioner => deactivate_practitioner);

crud!(Permission::ManagePatients, PatientId,
    list_patients => |svc, actor, q| svc.admin.list_patients(actor, &q.filter()),
    create_patient(PatientInput) => create_patient,
    get_patient => get_patient,
    update_patient(PatientInput) => update_patient,
    deactivate_patient => deactivate_patient);

crud!(Permission::ManageDrugs, rxtropic_core::ids::DrugId,
    list_drugs => |svc, actor, q| svc.admin.list_drugs(actor, &q.filter()),
    create_drug(DrugInput) => create_drug,
    get_drug => get_drug,
    update_drug(DrugInput) => update_drug,
    deactivate_drug => deactivate_drug);

crud!(Permission::ManageDiseases, DiseaseId,
    list_diseases => |svc, actor, q| svc.admin.list_diseases(actor, &q.filter()),
    create_disease(DiseaseInput) => create_disease,
    get_disease => get_disease,
    update_disease(DiseaseInput) => update_disease,
    delete_disease => delete_disease);

crud!(Permission::ManageInteractions, rxtropic_core::ids::RuleId,
    list_interactions => |svc, actor, _q| svc.admin.list_interactions(actor),
    create_interaction(InteractionInput) => create_interaction,
    get_interaction => get_interaction,
    update_interaction(InteractionInput) => update_interaction,
    delete_interaction => delete_interaction);

async fn audit(State(s): State<AppState>, headers: HeaderMap, uri: Uri) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ManageUsers, move |svc, actor| {
        let q = ListQuery::from_uri(&uri)?;
        let entries = svc.admin.audit(actor, q.entity.as_deref())?;
        Ok(Json(q.page(entries)).into_response())
    })
    .await
}

// catalog

async fn search_patients(State(s): State<AppState>, headers: HeaderMap, uri: Uri) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewPatientRecord, move |svc, actor| {
        let q = ListQuery::from_uri(&uri)?;
        let found = svc.catalog.search_patients(actor, q.q.as_deref().unwrap_or(""))?;
        Ok(Json(q.page(found)).into_response())
    })
    .await
}

async fn patient_record(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewPatientRecord, move |svc, actor| {
        Ok(Json(svc.catalog.patient_record(actor, &id.into())?).into_response())
    })
    .await
}

async fn search_drugs(State(s): State<AppState>, headers: HeaderMap, uri: Uri) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewDrugDetail, move |svc, actor| {
        let q = ListQuery::from_uri(&uri)?;
        let found = svc.catalog.search_drugs(actor, q.q.as_deref().unwrap_or(""))?;
        Ok(Json(q.page(found)).into_response())
    })
    .await
}

async fn drug_detail(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewDrugDetail, move |svc, actor| {
        Ok(Json(svc.catalog.drug(actor, &id.into())?).into_response())
    })
    .await
}

async fn diseases(State(s): State<AppState>, headers: HeaderMap) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewDrugDetail, move |svc, actor| {
        Ok(Json(svc.catalog.diseases(actor)?).into_response())
    })
    .await
}

async fn suggested_drugs(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ComposeRx, move |svc, actor| {
        Ok(Json(svc.catalog.suggested_drugs(actor, &id.into())?).into_response())
    })
    .await
}

// prescriptions

#[derive(Deserialize)]
struct ComposeBody {
    patient_id: PatientId,
    diagnosis: DiseaseId,
    items: Vec<PrescriptionItem>,
}

#[derive(Deserialize)]
struct EditBody {
    diagnosis: DiseaseId,
    items: Vec<PrescriptionItem>,
}

#[derive(Default, Deserialize)]
struct SendBody {
    #[serde(default)]
    overrides: Vec<OverrideRequest>,
}

#[derive(Default, Deserialize)]
struct CancelBody {
    #[serde(default)]
    reason: String,
}

async fn compose(State(s): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ComposeRx, move |svc, actor| {
        let b: ComposeBody = parse(&body)?;
        let rx = svc.workflow.compose(actor, &b.patient_id, &b.diagnosis, b.items)?;
        Ok((StatusCode::CREATED, Json(rx)).into_response())
    })
    .await
}

async fn get_prescription(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ViewPatientRecord, move |svc, actor| {
        Ok(Json(svc.workflow.get(actor, &id.into())?).into_response())
    })
    .await
}

async fn edit_draft(
    State(s): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ComposeRx, move |svc, actor| {
        let b: EditBody = parse(&body)?;
        Ok(Json(svc.workflow.edit_draft(actor, &id.into(), b.items, &b.diagnosis)?).into_response())
    })
    .await
}

async fn preview_findings(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ComposeRx, move |svc, actor| {
        Ok(Json(svc.workflow.preview_findings(actor, &id.into())?).into_response())
    })
    .await
}

async fn send(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::SendRx, move |svc, actor| {
        let b: SendBody = parse_or_default(&body)?;
        Ok(Json(svc.workflow.send(actor, &id.into(), &b.overrides)?).into_response())
    })
    .await
}

async fn cancel(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::CancelRx, move |svc, actor| {
        let b: CancelBody = parse_or_default(&body)?;
        Ok(Json(svc.workflow.cancel(actor, &id.into(), &b.reason)?).into_response())
    })
    .await
}

async fn acknowledge(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::AcknowledgeRx, move |svc, actor| {
        Ok(Json(svc.workflow.acknowledge(actor, &PrescriptionId::from(id))?).into_response())
    })
    .await
}

async fn dispense(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::DispenseRx, move |svc, actor| {
        Ok(Json(svc.workflow.dispense(actor, &PrescriptionId::from(id))?).into_response())
    })
    .await
}

async fn print(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::PrintRx, move |svc, actor| {
        let text = svc.workflow.print_copy(actor, &id.into())?;
        Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
    })
    .await
}

async fn pending(State(s): State<AppState>, headers: HeaderMap, uri: Uri) -> ApiResult<Response> {
    guarded(&s, &headers, Permission::ListPending, move |svc, actor| {
        let q = ListQuery::from_uri(&uri)?;
        Ok(Json(q.page(svc.workflow.list_pending(actor)?)).into_response())
    })
    .await
}
