use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Permission {
    ManageUsers,
    ManageDrugs,
    ManageDiseases,
    ManagePatients,
    ManageInteractions,
    ViewPatientRecord,
    ViewDrugDetail,
    ComposeRx,
    SendRx,
    CancelRx,
    ListPending,
    AcknowledgeRx,
    DispenseRx,
    PrintRx,
}

impl Permission {
    pub const ALL: [Permission; 14] = [
        Permission::ManageUsers,
        Permission::ManageDrugs,
        Permission::ManageDiseases,
        Permission::ManagePatients,
        Permission::ManageInteractions,
        Permission::ViewPatientRecord,
        Permission::ViewDrugDetail,
        Permission::ComposeRx,
        Permission::SendRx,
        Permission::CancelRx,
        Permission::ListPending,
        Permission::AcknowledgeRx,
        Permission::DispenseRx,
        Permission::PrintRx,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Permission::ManageUsers => "MANAGE_USERS",
            Permission::ManageDrugs => "MANAGE_DRUGS",
            Permission::ManageDiseases => "MANAGE_DISEASES",
            Permission::ManagePatients => "MANAGE_PATIENTS",
            Permission::ManageInteractions => "MANAGE_INTERACTIONS",
            Permission::ViewPatientRecord => "VIEW_PATIENT_RECORD",
            Permission::ViewDrugDetail => "VIEW_DRUG_DETAIL",
            Permission::ComposeRx => "COMPOSE_RX",
            Permission::SendRx => "SEND_RX",
            Permission::CancelRx => "CANCEL_RX",
            Permission::ListPending => "LIST_PENDING",
            Permission::AcknowledgeRx => "ACKNOWLEDGE_RX",
            Permission::DispenseRx => "DISPENSE_RX",
            Permission::PrintRx => "PRINT_RX",
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Permission {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Permission::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown permission {s:?}"))
    }
}

/// The fixed role/permission matrix. Total over every pair.
pub fn allows(role: Role, permission: Permission) -> bool {
    use Permission::*;

    match role {
        Role::Administrator => matches!(
            permission,
            ManageUsers
                | ManageDrugs
                | ManageDiseases
                | ManagePatients
                | ManageInteractions
                | ViewPatientRecord
                | ViewDrugDetail
        ),
        // Physicians also maintain the formulary.
        Role::Doctor => matches!(
            permission,
            ViewPatientRecord | ViewDrugDetail | ComposeRx | SendRx | CancelRx | ManageDrugs
        ),
        Role::Pharmacist => matches!(
            permission,
            ListPending | AcknowledgeRx | DispenseRx | PrintRx | ViewDrugDetail | ViewPatientRecord
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allowed_counts_per_role() {
        let count = |r| Permission::ALL.iter().filter(|&&p| allows(r, p)).count();
        assert_eq!(count(Role::Administrator), 7);
        assert_eq!(count(Role::Doctor), 6);
        assert_eq!(count(Role::Pharmacist), 6);
    }

    #[test]
    fn names_round_trip() {
        for p in Permission::ALL {
            assert_eq!(p.as_str().parse::<Permission>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.as_str()));
        }
    }
}
