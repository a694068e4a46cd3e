use argon2::password_hash::phc::PasswordHash;
use argon2::password_hash::{PasswordHasher as _, PasswordVerifier as _};
use argon2::{Algorithm, Argon2, Params, Version};

use crate::domain::PasswordDigest;
use crate::{Error, Result};

pub const MIN_PASSWORD_LEN: usize = 8;

/// Argon2id work factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashCost {
    /// The library's recommended defaults. Use this in production.
    #[default]
    Standard,
    /// Minimal memory and a single pass. Only for tests and demos where
    /// thousands of accounts are created.
    Minimal,
}

/// Salted, memory-hard password digests (Argon2id, PHC string format).
#[derive(Debug, Clone)]
pub struct PasswordHasher {
    params: Params,
}

impl PasswordHasher {
    pub fn new(cost: HashCost) -> Self {
        let params = match cost {
            HashCost::Standard => Params::default(),
            HashCost::Minimal => Params::new(Params::MIN_M_COST, 1, 1, None).expect("valid argon2 params"),
        };
        Self { params }
    }

    fn argon2(&self) -> Argon2<'static> {
        Argon2::new(Algorithm::Argon2id, Version::V0x13, self.params.clone())
    }

    pub fn check_strength(password: &str) -> Result<()> {
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(Error::WeakPassword { min: MIN_PASSWORD_LEN });
        }
        Ok(())
    }

    /// Digests a password with a fresh random salt, so two calls on the same
    /// input never produce the same digest.
    pub fn digest(&self, password: &str) -> Result<PasswordDigest> {
        let hash = self
            .argon2()
            .hash_password(password.as_bytes())
            .map_err(|e| Error::Storage(format!("password hashing failed: {e}")))?;
        Ok(PasswordDigest::from_phc(hash.to_string()))
    }

    pub fn verify(&self, digest: &PasswordDigest, password: &str) -> bool {
        match PasswordHash::new(digest.as_str()) {
            Ok(parsed) => self.argon2().verify_password(password.as_bytes(), &parsed).is_ok(),
            Err(_) => false,
        }
    }
}
