//! The line-oriented fixture format used to seed and export reference data.
//!
//! ```text
//! # comment
//! DISEASE|name|description
//! DRUG|name|class|generic description|indication,...|adverse reactions|strength|substance code,...
//! RULE|drug name|drug name|MAJOR|note
//! PATIENT|full name|YYYY-MM-DD|M|allergy code,...
//! ```
//!
//! Records refer to each other by name, never by id. Fields are trimmed;
//! list fields are comma separated and may be empty. There is no escaping,
//! so [`format`] replaces `|`, `,` (inside list items) and line breaks in
//! exported values with spaces.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{name_key, normalize_code, InteractionSeverity, Sex};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseEntry {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrugEntry {
    pub name: String,
    pub pharmaceutical_class: String,
    pub generic_description: String,
    /// Disease names.
    pub indications: BTreeSet<String>,
    pub adverse_reactions: String,
    pub strength: String,
    pub substance_codes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub drug_a: String,
    pub drug_b: String,
    pub severity: InteractionSeverity,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientEntry {
    pub full_name: String,
    pub date_of_birth: NaiveDate,
    pub sex: Sex,
    pub allergies: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub diseases: Vec<DiseaseEntry>,
    pub drugs: Vec<DrugEntry>,
    pub rules: Vec<RuleEntry>,
    pub patients: Vec<PatientEntry>,
}

/// The fixture shipped with the crate: the three diseases plus a small demo
/// formulary and demo patients. Demo data, not medical guidance.
pub const DEFAULT_FIXTURE: &str = include_str!("../fixtures/default.fixture");

pub fn default_fixture() -> Fixture {
    parse(DEFAULT_FIXTURE).expect("bundled fixture parses")
}

fn list(field: &str) -> BTreeSet<String> {
    field.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect()
}

fn codes(field: &str) -> BTreeSet<String> {
    field.split(',').map(normalize_code).filter(|s| !s.is_empty()).collect()
}

pub fn parse(text: &str) -> Result<Fixture> {
    let mut fx = Fixture::default();
    let mut disease_names = HashSet::new();
    let mut drug_names = HashSet::new();
    let mut pairs = HashSet::new();
    let mut patients = HashSet::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let err = |message: String| Error::Parse { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('|').map(str::trim).collect();
        let expect = |n: usize| {
            if fields.len() == n {
                Ok(())
            } else {
                Err(err(format!("{} record needs {} fields, found {}", fields[0], n, fields.len())))
            }
        };
        let nonempty = |what: &str, value: &str| {
            if value.is_empty() {
                Err(err(format!("{what} must not be empty")))
            } else {
                Ok(value.to_owned())
            }
        };
        match fields[0] {
            "DISEASE" => {
                expect(3)?;
                let name = nonempty("disease name", fields[1])?;
                if !disease_names.insert(name_key(&name)) {
                    return Err(err(format!("disease {name} declared twice")));
                }
                fx.diseases.push(DiseaseEntry { name, description: fields[2].to_owned() });
            }
            "DRUG" => {
                expect(8)?;
                let name = nonempty("drug name", fields[1])?;
                if !drug_names.insert(name_key(&name)) {
                    return Err(err(format!("drug {name} declared twice")));
                }
                fx.drugs.push(DrugEntry {
                    name,
                    pharmaceutical_class: fields[2].to_owned(),
                    generic_description: fields[3].to_owned(),
                    indications: list(fields[4]),
                    adverse_reactions: fields[5].to_owned(),
                    strength: fields[6].to_owned(),
                    substance_codes: codes(fields[7]),
                });
            }
            "RULE" => {
                expect(5)?;
                let drug_a = nonempty("first drug", fields[1])?;
                let drug_b = nonempty("second drug", fields[2])?;
                let (ka, kb) = (name_key(&drug_a), name_key(&drug_b));
                if ka == kb {
                    return Err(err("pair drugs must be distinct".into()));
                }
                if !pairs.insert(if ka < kb { (ka, kb) } else { (kb, ka) }) {
                    return Err(err(format!("rule for {drug_a} and {drug_b} declared twice")));
                }
                let severity = fields[3].parse().map_err(|_| err(format!("unknown severity {:?}", fields[3])))?;
                fx.rules.push(RuleEntry { drug_a, drug_b, severity, note: fields[4].to_owned() });
            }
            "PATIENT" => {
                expect(5)?;
                let full_name = nonempty("patient name", fields[1])?;
                let date_of_birth = NaiveDate::parse_from_str(fields[2], "%Y-%m-%d")
                    .map_err(|_| err(format!("bad date {:?}, expected YYYY-MM-DD", fields[2])))?;
                if !patients.insert((name_key(&full_name), date_of_birth)) {
                    return Err(err(format!("patient {full_name} declared twice")));
                }
                let sex = fields[3].parse().map_err(|_| err(format!("unknown sex {:?}", fields[3])))?;
                fx.patients.push(PatientEntry { full_name, date_of_birth, sex, allergies: codes(fields[4]) });
            }
            other => return Err(err(format!("unknown record kind {other:?}"))),
        }
    }
    Ok(fx)
}

fn clean(s: &str) -> String {
    s.replace(['|', '\r', '\n'], " ").trim().to_owned()
}

fn join(items: &BTreeSet<String>) -> String {
    items.iter().map(|s| clean(s).replace(',', " ")).collect::<Vec<_>>().join(",")
}

/// Renders a fixture. Records are written in kind order and, within a kind,
/// in the order given.
pub fn format(fx: &Fixture) -> String {
    let mut out = String::new();
    for d in &fx.diseases {
        let _ = writeln!(out, "DISEASE|{}|{}", clean(&d.name), clean(&d.description));
    }
    for d in &fx.drugs {
        let _ = writeln!(
            out,
            "DRUG|{}|{}|{}|{}|{}|{}|{}",
            clean(&d.name),
            clean(&d.pharmaceutical_class),
            clean(&d.generic_description),
            join(&d.indications),
            clean(&d.adverse_reactions),
            clean(&d.strength),
            join(&d.substance_codes)
        );
    }
    for r in &fx.rules {
        let _ = writeln!(out, "RULE|{}|{}|{}|{}", clean(&r.drug_a), clean(&r.drug_b), r.severity, clean(&r.note));
    }
    for p in &fx.patients {
        let _ = writeln!(
            out,
            "PATIENT|{}|{}|{}|{}",
            clean(&p.full_name),
            p.date_of_birth.format("%Y-%m-%d"),
            p.sex,
            join(&p.allergies)
        );
    }
    out
}
