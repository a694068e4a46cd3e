//! Shared domain types.
//!
//! Everything here is a plain value: cloning is cheap enough, nothing holds a
//! lock, and the only way a record changes is by writing a new version
//! through [`crate::store`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::{AccountId, DiseaseId, DrugId, PatientId, PrescriptionId, RuleId};

mod validate;

pub use validate::{validate_entity, Validate};

/// Canonical form for substance and allergy codes: trimmed and lowercased.
pub fn normalize_code(code: &str) -> String {
    code.trim().to_lowercase()
}

/// Canonical form for names that must be unique regardless of case.
pub fn name_key(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Administrator,
    Doctor,
    Pharmacist,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Administrator, Role::Doctor, Role::Pharmacist];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Administrator => "ADMINISTRATOR",
            Role::Doctor => "DOCTOR",
            Role::Pharmacist => "PHARMACIST",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

/// A PHC-format password digest. Never holds plaintext; `Debug` is redacted
/// so digests do not end up in logs either.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PasswordDigest(String);

impl PasswordDigest {
    pub fn from_phc(phc: String) -> Self {
        Self(phc)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for PasswordDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PasswordDigest(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PractitionerAccount {
    pub id: AccountId,
    pub full_name: String,
    pub role: Role,
    /// Login username. Unique across all accounts, ignoring case.
    pub license_number: String,
    pub password_digest: PasswordDigest,
    pub active: bool,
    pub created_at: DateTime<Utc>,
}

/// What callers outside the store get to see of an account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PractitionerView {
    pub id: AccountId,
    pub full_name: String,
    pub role: Role,
    pub license_number: String,
    pub active: bool,
    pub created_at: DateTime<Utc>,
}

impl From<&PractitionerAccount> for PractitionerView {
    fn from(a: &PractitionerAccount) -> Self {
        Self {
            id: a.id.clone(),
            full_name: a.full_name.clone(),
            role: a.role,
            license_number: a.license_number.clone(),
            active: a.active,
            created_at: a.created_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sex {
    M,
    F,
    Other,
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M" => Ok(Sex::M),
            "F" => Ok(Sex::F),
            "OTHER" => Ok(Sex::Other),
            _ => Err(format!("unknown sex {s:?}")),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::M => "M",
            Sex::F => "F",
            Sex::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub id: PatientId,
    pub full_name: String,
    pub date_of_birth: NaiveDate,
    pub sex: Sex,
    /// Substance codes in canonical form (see [`normalize_code`]).
    pub allergies: BTreeSet<String>,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disease {
    pub id: DiseaseId,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drug {
    pub id: DrugId,
    pub name: String,
    pub pharmaceutical_class: String,
    pub generic_description: String,
    pub indications: BTreeSet<DiseaseId>,
    pub adverse_reactions: String,
    /// Free-form, e.g. "20mg/120mg tablet".
    pub strength: String,
    /// Substance codes the allergy check matches against, maintained by
    /// administrators. The normalized drug name is always implied as well.
    #[serde(default)]
    pub substance_codes: BTreeSet<String>,
    pub active: bool,
}

impl Drug {
    /// Every code an allergy could match: the explicit substance codes plus
    /// the drug's own normalized name.
    pub fn allergen_codes(&self) -> BTreeSet<String> {
        let mut codes: BTreeSet<String> =
            self.substance_codes.iter().map(|c| normalize_code(c)).collect();
        codes.insert(normalize_code(&self.name));
        codes
    }
}

/// An unordered pair of drugs. Stored with the smaller id first so that
/// `DrugPair::new(a, b) == DrugPair::new(b, a)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DrugPair {
    low: DrugId,
    high: DrugId,
}

impl DrugPair {
    pub fn new(a: DrugId, b: DrugId) -> Self {
        if a <= b {
            Self { low: a, high: b }
        } else {
            Self { low: b, high: a }
        }
    }

    pub fn first(&self) -> &DrugId {
        &self.low
    }

    pub fn second(&self) -> &DrugId {
        &self.high
    }

    pub fn contains(&self, id: &DrugId) -> bool {
        &self.low == id || &self.high == id
    }

    pub fn is_degenerate(&self) -> bool {
        self.low == self.high
    }

    /// Key used by the uniqueness index.
    pub fn key(&self) -> String {
        format!("{}:{}", self.low, self.high)
    }
}

impl Serialize for DrugPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [&self.low, &self.high].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DrugPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [a, b] = <[DrugId; 2]>::deserialize(deserializer)?;
        Ok(DrugPair::new(a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InteractionSeverity {
    Major,
    Moderate,
    Minor,
}

impl InteractionSeverity {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionSeverity::Major => "MAJOR",
            InteractionSeverity::Moderate => "MODERATE",
            InteractionSeverity::Minor => "MINOR",
        }
    }
}

impl fmt::Display for InteractionSeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionSeverity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MAJOR" => Ok(Self::Major),
            "MODERATE" => Ok(Self::Moderate),
            "MINOR" => Ok(Self::Minor),
            _ => Err(format!("unknown severity {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRule {
    pub id: RuleId,
    pub drug_pair: DrugPair,
    pub severity: InteractionSeverity,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrescriptionItem {
    pub drug_id: DrugId,
    pub dose: String,
    pub frequency: String,
    pub duration_days: u32,
    #[serde(default)]
    pub instructions: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrescriptionStatus {
    Draft,
    Sent,
    Acknowledged,
    Dispensed,
    Cancelled,
}

impl PrescriptionStatus {
    pub const ALL: [PrescriptionStatus; 5] = [
        PrescriptionStatus::Draft,
        PrescriptionStatus::Sent,
        PrescriptionStatus::Acknowledged,
        PrescriptionStatus::Dispensed,
        PrescriptionStatus::Cancelled,
    ];

    /// The complete transition relation.
    pub const EDGES: [(PrescriptionStatus, PrescriptionStatus); 5] = [
        (PrescriptionStatus::Draft, PrescriptionStatus::Sent),
        (PrescriptionStatus::Draft, PrescriptionStatus::Cancelled),
        (PrescriptionStatus::Sent, PrescriptionStatus::Acknowledged),
        (PrescriptionStatus::Sent, PrescriptionStatus::Cancelled),
        (PrescriptionStatus::Acknowledged, PrescriptionStatus::Dispensed),
    ];

    pub fn can_transition_to(self, next: PrescriptionStatus) -> bool {
        Self::EDGES.contains(&(self, next))
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, PrescriptionStatus::Dispensed | PrescriptionStatus::Cancelled)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrescriptionStatus::Draft => "DRAFT",
            PrescriptionStatus::Sent => "SENT",
            PrescriptionStatus::Acknowledged => "ACKNOWLEDGED",
            PrescriptionStatus::Dispensed => "DISPENSED",
            PrescriptionStatus::Cancelled => "CANCELLED",
        }
    }
}

impl fmt::Display for PrescriptionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrescriptionStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prescription {
    pub id: PrescriptionId,
    pub patient_id: PatientId,
    pub prescriber_id: AccountId,
    pub diagnosis: DiseaseId,
    pub items: Vec<PrescriptionItem>,
    pub status: PrescriptionStatus,
    #[serde(default)]
    pub overrides: Vec<OverrideRecord>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub sent_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub acknowledged_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub dispensed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub cancelled_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub pharmacist_id: Option<AccountId>,
}

impl Prescription {
    pub fn drug_ids(&self) -> impl Iterator<Item = &DrugId> {
        self.items.iter().map(|i| &i.drug_id)
    }

    /// Latest lifecycle timestamp recorded so far.
    pub fn last_event_at(&self) -> DateTime<Utc> {
        [self.sent_at, self.acknowledged_at, self.dispensed_at, self.cancelled_at]
            .into_iter()
            .flatten()
            .fold(self.created_at, DateTime::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    Allergy,
    Interaction,
    Indication,
    Duplicate,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::Allergy => "ALLERGY",
            FindingKind::Interaction => "INTERACTION",
            FindingKind::Indication => "INDICATION",
            FindingKind::Duplicate => "DUPLICATE",
        }
    }
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingSeverity {
    /// Cannot be overridden.
    Block,
    /// Needs a recorded override reason before sending.
    Warn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFinding {
    pub kind: FindingKind,
    pub severity: FindingSeverity,
    pub message: String,
    pub subject_drug_ids: BTreeSet<DrugId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverrideRecord {
    pub finding_kind: FindingKind,
    pub reason: String,
    pub actor_id: AccountId,
    pub at: DateTime<Utc>,
}
