//! Login, sessions and the role/permission matrix.
//!
//! Users log in with their license number and password and get back an
//! opaque bearer token. Every other operation starts with
//! [`Auth::authorize`], which turns a token and the permission the
//! operation needs into an [`Actor`].

use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::RwLock;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clock::Clock;
use crate::domain::{name_key, PasswordDigest, PractitionerAccount, Role};
use crate::ids::AccountId;
use crate::store::{AuditEvent, Reader, Store, SYSTEM_ACTOR};
use crate::{Error, Result};

mod password;
mod permission;

pub use password::{HashCost, PasswordHasher, MIN_PASSWORD_LEN};
pub use permission::{allows, Permission};

/// One shift.
pub const DEFAULT_SESSION_TTL: Duration = Duration::hours(8);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// 256 random bits, hex encoded.
    pub token: String,
    pub account_id: AccountId,
    pub role: Role,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

/// The authenticated caller of an operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub account_id: AccountId,
    pub role: Role,
}

impl Actor {
    pub fn new(account_id: AccountId, role: Role) -> Self {
        Self { account_id, role }
    }

    pub fn can(&self, permission: Permission) -> bool {
        allows(self.role, permission)
    }

    pub fn require(&self, permission: Permission) -> Result<()> {
        if self.can(permission) {
            Ok(())
        } else {
            Err(Error::Forbidden(permission))
        }
    }
}

fn new_token() -> String {
    let bytes: [u8; 32] = rand::rng().random();
    hex::encode(bytes)
}

pub struct Auth {
    store: Store,
    clock: Arc<dyn Clock>,
    hasher: Arc<PasswordHasher>,
    ttl: Duration,
    sessions: RwLock<HashMap<String, Session>>,
    // Verified against when the license is unknown so that the response
    // time does not reveal whether an account exists.
    decoy: PasswordDigest,
}

impl std::fmt::Debug for Auth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Auth")
            .field("ttl", &self.ttl)
            .field("live_sessions", &self.sessions.read().len())
            .finish_non_exhaustive()
    }
}

impl Auth {
    pub fn new(store: Store, clock: Arc<dyn Clock>, hasher: Arc<PasswordHasher>, ttl: Duration) -> Self {
        let decoy = hasher.digest(&new_token()).expect("hashing a random token");
        Self {
            store,
            clock,
            hasher,
            ttl,
            sessions: RwLock::new(HashMap::new()),
            decoy,
        }
    }

    pub fn hasher(&self) -> &PasswordHasher {
        &self.hasher
    }

    /// Every failure is reported as `INVALID_CREDENTIALS`; the audit log
    /// keeps the actual cause.
    pub fn login(&self, license_number: &str, password: &str) -> Result<Session> {
        let now = self.clock.now();
        let account = self
            .store
            .snapshot()?
            .find_unique::<PractitionerAccount>(&name_key(license_number))?;

        let verdict = match &account {
            None => {
                self.hasher.verify(&self.decoy, password);
                Err("unknown_license")
            }
            Some(a) => {
                let password_ok = self.hasher.verify(&a.password_digest, password);
                if !a.active {
                    Err("inactive_account")
                } else if !password_ok {
                    Err("wrong_password")
                } else {
                    Ok(a)
                }
            }
        };

        match verdict {
            Ok(a) => {
                let session = Session {
                    token: new_token(),
                    account_id: a.id.clone(),
                    role: a.role,
                    issued_at: now,
                    expires_at: now + self.ttl,
                };
                self.store.audit_append(
                    AuditEvent::new(now, a.id.as_str(), "auth.login", "practitioner", a.id.as_str())
                        .detail(json!({ "role": a.role })),
                )?;
                let mut sessions = self.sessions.write();
                sessions.retain(|_, s| s.expires_at > now);
                sessions.insert(session.token.clone(), session.clone());
                Ok(session)
            }
            Err(cause) => {
                let (actor, entity) = match &account {
                    Some(a) => (a.id.to_string(), a.id.to_string()),
                    None => (SYSTEM_ACTOR.to_string(), license_number.to_string()),
                };
                self.store.audit_append(
                    AuditEvent::new(now, actor, "auth.login_failed", "practitioner", entity)
                        .detail(json!({ "cause": cause })),
                )?;
                Err(Error::InvalidCredentials)
            }
        }
    }

    /// Invalidates `token`. Unknown and already revoked tokens are fine.
    pub fn logout(&self, token: &str) -> Result<()> {
        let removed = self.sessions.write().remove(token);
        if let Some(s) = removed {
            self.store.audit_append(AuditEvent::new(
                self.clock.now(),
                s.account_id.as_str(),
                "auth.logout",
                "practitioner",
                s.account_id.as_str(),
            ))?;
        }
        Ok(())
    }

    /// The caller behind a live token, without any permission check.
    pub fn authenticate(&self, token: &str) -> Result<Actor> {
        let now = self.clock.now();
        let sessions = self.sessions.read();
        match sessions.get(token) {
            Some(s) if s.expires_at > now => Ok(Actor::new(s.account_id.clone(), s.role)),
            _ => Err(Error::Unauthenticated),
        }
    }

    pub fn authorize(&self, token: &str, permission: Permission) -> Result<Actor> {
        let actor = self.authenticate(token)?;
        actor.require(permission)?;
        Ok(actor)
    }

    /// Replaces the caller's password and ends all of their other sessions.
    pub fn change_password(&self, token: &str, old: &str, new: &str) -> Result<()> {
        let actor = self.authenticate(token)?;
        PasswordHasher::check_strength(new)?;
        let now = self.clock.now();
        self.store.write(|tx| {
            let mut account: PractitionerAccount = tx.require(actor.account_id.as_str())?;
            if !self.hasher.verify(&account.password_digest, old) {
                return Err(Error::InvalidCredentials);
            }
            account.password_digest = self.hasher.digest(new)?;
            tx.put(&account)?;
            tx.append_audit(AuditEvent::new(
                now,
                account.id.as_str(),
                "auth.change_password",
                "practitioner",
                account.id.as_str(),
            ))?;
            Ok(())
        })?;
        self.revoke_account(&actor.account_id, Some(token));
        Ok(())
    }

    /// Ends every session of `account`, except `keep` if given. Returns how
    /// many were ended.
    pub fn revoke_account(&self, account: &AccountId, keep: Option<&str>) -> usize {
        let mut sessions = self.sessions.write();
        let before = sessions.len();
        sessions.retain(|token, s| &s.account_id != account || Some(token.as_str()) == keep);
        before - sessions.len()
    }

    pub fn live_sessions(&self) -> usize {
        let now = self.clock.now();
        self.sessions.read().values().filter(|s| s.expires_at > now).count()
    }
}
