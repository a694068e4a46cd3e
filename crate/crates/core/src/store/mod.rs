//! Durable record storage and the audit log.
//!
//! Backed by a single-file [redb] database. Every public write happens in one
//! serializable write transaction, and reads go through MVCC snapshots that
//! never block writers. Records are stored as JSON under their id; unique
//! natural keys (license numbers, drug and disease names, interaction pairs)
//! have their own index tables.
//!
//! Audit sequence numbers are assigned inside the write transaction as
//! `last + 1`, so the log is gap-free at rest no matter how writers
//! interleave.

use std::path::Path;
use std::sync::Arc;

use redb::{
    Database, ReadTransaction, ReadableDatabase, ReadableTable, TableDefinition, WriteTransaction,
};

use crate::domain::{Prescription, PrescriptionStatus};
use crate::ids::{PatientId, PrescriptionId};
use crate::{Error, Result};

mod audit;
mod record;

pub use audit::{AuditEntry, AuditEvent, SYSTEM_ACTOR};
pub use record::{ListFilter, Record};

pub type RecordTable = TableDefinition<'static, &'static str, &'static [u8]>;
pub type IndexTable = TableDefinition<'static, &'static str, &'static str>;
type AuditTable = TableDefinition<'static, u64, &'static [u8]>;

pub(crate) mod tables {
    use super::*;

    pub const PRACTITIONERS: RecordTable = TableDefinition::new("practitioners");
    pub const PATIENTS: RecordTable = TableDefinition::new("patients");
    pub const DRUGS: RecordTable = TableDefinition::new("drugs");
    pub const DISEASES: RecordTable = TableDefinition::new("diseases");
    pub const INTERACTIONS: RecordTable = TableDefinition::new("interactions");
    pub const PRESCRIPTIONS: RecordTable = TableDefinition::new("prescriptions");

    pub const LICENSE_INDEX: IndexTable = TableDefinition::new("idx_license");
    pub const DRUG_NAME_INDEX: IndexTable = TableDefinition::new("idx_drug_name");
    pub const DISEASE_NAME_INDEX: IndexTable = TableDefinition::new("idx_disease_name");
    pub const PAIR_INDEX: IndexTable = TableDefinition::new("idx_interaction_pair");
    pub const RX_BY_PATIENT: IndexTable = TableDefinition::new("idx_rx_patient");

    pub const AUDIT: AuditTable = TableDefinition::new("audit");

    pub const RECORDS: [RecordTable; 6] = [PRACTITIONERS, PATIENTS, DRUGS, DISEASES, INTERACTIONS, PRESCRIPTIONS];
    pub const INDEXES: [IndexTable; 5] = [LICENSE_INDEX, DRUG_NAME_INDEX, DISEASE_NAME_INDEX, PAIR_INDEX, RX_BY_PATIENT];
}

macro_rules! storage_errors {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for Error {
            fn from(e: $ty) -> Self {
                Error::Storage(redb::Error::from(e).to_string())
            }
        })*
    };
}

storage_errors!(
    redb::Error,
    redb::TransactionError,
    redb::TableError,
    redb::StorageError,
    redb::CommitError,
);

impl From<redb::DatabaseError> for Error {
    fn from(e: redb::DatabaseError) -> Self {
        match e {
            redb::DatabaseError::DatabaseAlreadyOpen => {
                Error::Storage("store is already held by another process".into())
            }
            other => Error::Storage(redb::Error::from(other).to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Storage(format!("corrupt record: {e}"))
    }
}

fn decode<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Read access shared by snapshots and write transactions.
pub trait Reader {
    #[doc(hidden)]
    fn raw_get(&self, table: RecordTable, key: &str) -> Result<Option<Vec<u8>>>;
    #[doc(hidden)]
    fn raw_values(&self, table: RecordTable) -> Result<Vec<Vec<u8>>>;
    #[doc(hidden)]
    fn raw_index(&self, index: IndexTable, key: &str) -> Result<Option<String>>;
    #[doc(hidden)]
    fn raw_group(&self, index: IndexTable, group: &str) -> Result<Vec<String>>;
    #[doc(hidden)]
    fn raw_audit(&self) -> Result<Vec<Vec<u8>>>;
    #[doc(hidden)]
    fn last_audit_seq(&self) -> Result<u64>;

    fn get<T: Record>(&self, id: &str) -> Result<Option<T>>
    where
        Self: Sized,
    {
        self.raw_get(T::TABLE, id)?.map(|b| decode(&b)).transpose()
    }

    /// Like [`Reader::get`] but absence is an error.
    fn require<T: Record>(&self, id: &str) -> Result<T>
    where
        Self: Sized,
    {
        self.get(id)?.ok_or_else(|| Error::NotFound { kind: T::KIND, id: id.to_owned() })
    }

    fn list<T: Record>(&self, filter: &ListFilter) -> Result<Vec<T>>
    where
        Self: Sized,
    {
        let mut out = Vec::new();
        for bytes in self.raw_values(T::TABLE)? {
            let rec: T = decode(&bytes)?;
            if rec.matches(filter) {
                out.push(rec);
            }
        }
        Ok(out)
    }

    /// Looks a record up by its unique natural key (already in key form).
    fn find_unique<T: Record>(&self, key: &str) -> Result<Option<T>>
    where
        Self: Sized,
    {
        let Some(index) = T::INDEX else { return Ok(None) };
        match self.raw_index(index, key)? {
            Some(id) => self.get(&id),
            None => Ok(None),
        }
    }

    fn prescriptions_for_patient(&self, patient: &PatientId) -> Result<Vec<Prescription>>
    where
        Self: Sized,
    {
        let mut out = Vec::new();
        for id in self.raw_group(tables::RX_BY_PATIENT, patient.as_str())? {
            out.push(self.require(&id)?);
        }
        Ok(out)
    }

    /// Audit entries in sequence order, optionally only those about one entity.
    fn audit_scan(&self, entity_id: Option<&str>) -> Result<Vec<AuditEntry>>
    where
        Self: Sized,
    {
        let mut out = Vec::new();
        for bytes in self.raw_audit()? {
            let entry: AuditEntry = decode(&bytes)?;
            if entity_id.is_none_or(|id| entry.entity_id == id) {
                out.push(entry);
            }
        }
        Ok(out)
    }
}

fn table_get(t: &impl ReadableTable<&'static str, &'static [u8]>, key: &str) -> Result<Option<Vec<u8>>> {
    Ok(t.get(key)?.map(|g| g.value().to_vec()))
}

fn table_values(t: &impl ReadableTable<&'static str, &'static [u8]>) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for row in t.iter()? {
        let (_, v) = row?;
        out.push(v.value().to_vec());
    }
    Ok(out)
}

fn index_get(t: &impl ReadableTable<&'static str, &'static str>, key: &str) -> Result<Option<String>> {
    Ok(t.get(key)?.map(|g| g.value().to_owned()))
}

fn group_key(group: &str, id: &str) -> String {
    format!("{group}\u{1f}{id}")
}

fn index_group(t: &impl ReadableTable<&'static str, &'static str>, group: &str) -> Result<Vec<String>> {
    let lo = format!("{group}\u{1f}");
    let hi = format!("{group}\u{20}");
    let mut out = Vec::new();
    for row in t.range(lo.as_str()..hi.as_str())? {
        let (_, v) = row?;
        out.push(v.value().to_owned());
    }
    Ok(out)
}

fn audit_values(t: &impl ReadableTable<u64, &'static [u8]>) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for row in t.iter()? {
        let (_, v) = row?;
        out.push(v.value().to_vec());
    }
    Ok(out)
}

fn audit_last(t: &impl ReadableTable<u64, &'static [u8]>) -> Result<u64> {
    Ok(t.last()?.map(|(k, _)| k.value()).unwrap_or(0))
}

/// A read-only, transaction-consistent view of the store.
pub struct Snapshot {
    txn: ReadTransaction,
}

impl Reader for Snapshot {
    fn raw_get(&self, table: RecordTable, key: &str) -> Result<Option<Vec<u8>>> {
        table_get(&self.txn.open_table(table)?, key)
    }

    fn raw_values(&self, table: RecordTable) -> Result<Vec<Vec<u8>>> {
        table_values(&self.txn.open_table(table)?)
    }

    fn raw_index(&self, index: IndexTable, key: &str) -> Result<Option<String>> {
        index_get(&self.txn.open_table(index)?, key)
    }

    fn raw_group(&self, index: IndexTable, group: &str) -> Result<Vec<String>> {
        index_group(&self.txn.open_table(index)?, group)
    }

    fn raw_audit(&self) -> Result<Vec<Vec<u8>>> {
        audit_values(&self.txn.open_table(tables::AUDIT)?)
    }

    fn last_audit_seq(&self) -> Result<u64> {
        audit_last(&self.txn.open_table(tables::AUDIT)?)
    }
}

/// An open write transaction. Obtained through [`Store::write`]; committed
/// when the closure returns `Ok`, discarded otherwise.
pub struct Tx {
    txn: WriteTransaction,
}

impl Reader for Tx {
    fn raw_get(&self, table: RecordTable, key: &str) -> Result<Option<Vec<u8>>> {
        table_get(&self.txn.open_table(table)?, key)
    }

    fn raw_values(&self, table: RecordTable) -> Result<Vec<Vec<u8>>> {
        table_values(&self.txn.open_table(table)?)
    }

    fn raw_index(&self, index: IndexTable, key: &str) -> Result<Option<String>> {
        index_get(&self.txn.open_table(index)?, key)
    }

    fn raw_group(&self, index: IndexTable, group: &str) -> Result<Vec<String>> {
        index_group(&self.txn.open_table(index)?, group)
    }

    fn raw_audit(&self) -> Result<Vec<Vec<u8>>> {
        audit_values(&self.txn.open_table(tables::AUDIT)?)
    }

    fn last_audit_seq(&self) -> Result<u64> {
        audit_last(&self.txn.open_table(tables::AUDIT)?)
    }
}

impl Tx {
    /// Inserts or replaces a record after checking its invariants and
    /// unique key.
    pub fn put<T: Record>(&mut self, record: &T) -> Result<()> {
        let mut violations = record.violations();
        violations.extend(record.reference_violations(self)?);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        let id = record.id();
        if let (Some(index), Some(key)) = (T::INDEX, record.unique_key()) {
            if let Some(owner) = self.raw_index(index, &key)? {
                if owner != id {
                    return Err(Error::UniqueViolation(record.describe_unique()));
                }
            }
            let previous_key = self.get::<T>(id)?.and_then(|old| old.unique_key());
            let mut table = self.txn.open_table(index)?;
            if let Some(old_key) = previous_key.filter(|k| *k != key) {
                table.remove(old_key.as_str())?;
            }
            table.insert(key.as_str(), id)?;
        }
        if let Some(index) = T::GROUP {
            let previous = self.get::<T>(id)?.and_then(|old| old.group_key());
            let mut table = self.txn.open_table(index)?;
            if let Some(old) = previous {
                table.remove(group_key(&old, id).as_str())?;
            }
            if let Some(group) = record.group_key() {
                table.insert(group_key(&group, id).as_str(), id)?;
            }
        }

        let bytes = serde_json::to_vec(record)?;
        self.txn.open_table(T::TABLE)?.insert(id, bytes.as_slice())?;
        Ok(())
    }

    /// Removes a record outright. Returns whether it existed.
    pub fn delete<T: Record>(&mut self, id: &str) -> Result<bool> {
        let Some(old) = self.get::<T>(id)? else { return Ok(false) };
        if let (Some(index), Some(key)) = (T::INDEX, old.unique_key()) {
            self.txn.open_table(index)?.remove(key.as_str())?;
        }
        if let (Some(index), Some(group)) = (T::GROUP, old.group_key()) {
            self.txn.open_table(index)?.remove(group_key(&group, id).as_str())?;
        }
        self.txn.open_table(T::TABLE)?.remove(id)?;
        Ok(true)
    }

    pub fn append_audit(&mut self, event: AuditEvent) -> Result<AuditEntry> {
        let seq = self.last_audit_seq()? + 1;
        let entry = event.into_entry(seq);
        let bytes = serde_json::to_vec(&entry)?;
        self.txn.open_table(tables::AUDIT)?.insert(seq, bytes.as_slice())?;
        Ok(entry)
    }

    /// Compare-and-set status change. The edge is checked before anything
    /// is read; the stored status must equal `expected` or the call fails
    /// with `CONFLICT`. On success the mutator's changes, the new status and
    /// `audit` are written together.
    pub fn transition<F>(
        &mut self,
        id: &PrescriptionId,
        expected: PrescriptionStatus,
        next: PrescriptionStatus,
        audit: AuditEvent,
        mutate: F,
    ) -> Result<Prescription>
    where
        F: FnOnce(&mut Prescription) -> Result<()>,
    {
        if !expected.can_transition_to(next) {
            return Err(Error::WrongState(format!("{expected} -> {next} is not a legal transition")));
        }
        let mut rx: Prescription = self.require(id.as_str())?;
        if rx.status != expected {
            return Err(Error::Conflict(format!(
                "prescription {id} is {}, expected {expected}",
                rx.status
            )));
        }
        mutate(&mut rx)?;
        rx.status = next;
        self.put(&rx)?;
        self.append_audit(audit)?;
        Ok(rx)
    }
}

/// Handle to the embedded store. Cheap to clone; all clones share one
/// database.
#[derive(Clone)]
pub struct Store {
    db: Arc<Database>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").finish_non_exhaustive()
    }
}

impl Store {
    /// Opens the store at `path`, creating it if needed. Fails if another
    /// process holds it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::init(Database::create(path)?)
    }

    /// A throwaway store that lives only in memory.
    pub fn in_memory() -> Result<Self> {
        let db = Database::builder().create_with_backend(redb::backends::InMemoryBackend::new())?;
        Self::init(db)
    }

    fn init(db: Database) -> Result<Self> {
        let txn = db.begin_write()?;
        for t in tables::RECORDS {
            txn.open_table(t)?;
        }
        for t in tables::INDEXES {
            txn.open_table(t)?;
        }
        txn.open_table(tables::AUDIT)?;
        txn.commit()?;
        Ok(Self { db: Arc::new(db) })
    }

    /// Runs `f` inside one serializable write transaction.
    pub fn write<R>(&self, f: impl FnOnce(&mut Tx) -> Result<R>) -> Result<R> {
        let mut tx = Tx { txn: self.db.begin_write()? };
        match f(&mut tx) {
            Ok(value) => {
                tx.txn.commit()?;
                Ok(value)
            }
            Err(e) => {
                tx.txn.abort()?;
                Err(e)
            }
        }
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        Ok(Snapshot { txn: self.db.begin_read()? })
    }

    pub fn put<T: Record>(&self, record: &T) -> Result<()> {
        self.write(|tx| tx.put(record))
    }

    pub fn get<T: Record>(&self, id: &str) -> Result<Option<T>> {
        self.snapshot()?.get(id)
    }

    pub fn list<T: Record>(&self, filter: &ListFilter) -> Result<Vec<T>> {
        self.snapshot()?.list(filter)
    }

    pub fn transition<F>(
        &self,
        id: &PrescriptionId,
        expected: PrescriptionStatus,
        next: PrescriptionStatus,
        audit: AuditEvent,
        mutate: F,
    ) -> Result<Prescription>
    where
        F: FnOnce(&mut Prescription) -> Result<()>,
    {
        if !expected.can_transition_to(next) {
            return Err(Error::WrongState(format!("{expected} -> {next} is not a legal transition")));
        }
        self.write(|tx| tx.transition(id, expected, next, audit, mutate))
    }

    pub fn audit_append(&self, event: AuditEvent) -> Result<AuditEntry> {
        self.write(|tx| tx.append_audit(event))
    }

    pub fn audit_scan(&self, entity_id: Option<&str>) -> Result<Vec<AuditEntry>> {
        self.snapshot()?.audit_scan(entity_id)
    }
}
