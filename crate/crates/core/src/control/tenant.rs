use serde::{Deserialize, Serialize};

pub const FIRST_UID: u32 = 2000;
pub const HOME_ROOT: &str = "/archive/home/";

/// A registered user: the uploaded public key plus the unix account and
/// archive home created for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tenant {
    pub name: String,
    pub ssh_pubkey: String,
    pub home_path: String,
    pub uid: u32,
}

impl Tenant {
    pub fn new(name: &str, ssh_pubkey: &str, uid: u32) -> Self {
        Self {
            name: name.to_string(),
            ssh_pubkey: ssh_pubkey.to_string(),
            home_path: format!("{HOME_ROOT}{name}"),
            uid,
        }
    }
}

/// `[a-z][a-z0-9_-]{1,31}`
pub fn valid_name(name: &str) -> bool {
    let bytes = name.as_bytes();
    (2..=32).contains(&bytes.len())
        && bytes[0].is_ascii_lowercase()
        && bytes[1..]
            .iter()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_' || *b == b'-')
}
