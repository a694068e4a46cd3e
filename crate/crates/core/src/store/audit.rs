use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Actor recorded for operator tooling and other non-user actions.
pub const SYSTEM_ACTOR: &str = "SYSTEM";

/// One line of the append-only audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Global, gap-free, strictly increasing. The first entry is 1.
    pub seq: u64,
    pub at: DateTime<Utc>,
    /// Account id, or [`SYSTEM_ACTOR`].
    pub actor: String,
    /// Dotted verb such as `prescription.send`.
    pub action: String,
    pub entity_kind: String,
    pub entity_id: String,
    pub detail: Value,
}

/// An audit entry that has not been assigned a sequence number yet.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditEvent {
    pub at: DateTime<Utc>,
    pub actor: String,
    pub action: String,
    pub entity_kind: String,
    pub entity_id: String,
    pub detail: Value,
}

impl AuditEvent {
    pub fn new(
        at: DateTime<Utc>,
        actor: impl Into<String>,
        action: impl Into<String>,
        entity_kind: impl Into<String>,
        entity_id: impl Into<String>,
    ) -> Self {
        Self {
            at,
            actor: actor.into(),
            action: action.into(),
            entity_kind: entity_kind.into(),
            entity_id: entity_id.into(),
            detail: Value::Null,
        }
    }

    pub fn detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub(crate) fn into_entry(self, seq: u64) -> AuditEntry {
        AuditEntry {
            seq,
            at: self.at,
            actor: self.actor,
            action: self.action,
            entity_kind: self.entity_kind,
            entity_id: self.entity_id,
            detail: self.detail,
        }
    }
}
