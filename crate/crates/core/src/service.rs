use std::sync::Arc;

use chrono::Duration;

use crate::admin::Admin;
use crate::auth::{Auth, HashCost, PasswordHasher, DEFAULT_SESSION_TTL};
use crate::catalog::Catalog;
use crate::clock::{Clock, SystemClock};
use crate::rules::DEFAULT_DUPLICATE_WINDOW_DAYS;
use crate::store::Store;
use crate::workflow::Workflow;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub session_ttl: Duration,
    pub duplicate_window_days: u32,
    pub hash_cost: HashCost,
    pub clock: Arc<dyn Clock>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            session_ttl: DEFAULT_SESSION_TTL,
            duplicate_window_days: DEFAULT_DUPLICATE_WINDOW_DAYS,
            hash_cost: HashCost::default(),
            clock: Arc::new(SystemClock),
        }
    }
}

/// Every module wired to one store and one clock.
#[derive(Debug, Clone)]
pub struct Service {
    pub store: Store,
    pub clock: Arc<dyn Clock>,
    pub auth: Arc<Auth>,
    pub admin: Arc<Admin>,
    pub catalog: Catalog,
    pub workflow: Workflow,
}

impl Service {
    pub fn new(store: Store, config: ServiceConfig) -> Self {
        let clock = config.clock;
        let hasher = Arc::new(PasswordHasher::new(config.hash_cost));
        let auth = Arc::new(Auth::new(store.clone(), clock.clone(), hasher, config.session_ttl));
        Self {
            admin: Arc::new(Admin::new(store.clone(), clock.clone(), auth.clone())),
            catalog: Catalog::new(store.clone(), clock.clone(), config.duplicate_window_days),
            workflow: Workflow::new(store.clone(), clock.clone(), config.duplicate_window_days),
            auth,
            clock,
            store,
        }
    }
}
