//! Opaque client tokens and the role each one claims.

use std::fmt;

use earpiece_core::show::{PerformerId, RoleKind};
use serde::{Deserialize, Serialize};

/// What a token may do within its session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientRole {
    /// Runs the session: roster, state changes, scenes, exports.
    Host,
    /// A rostered person. Controllers steer lines, Cyborgs and Puppets
    /// receive them, Free-will Humans only see scene changes.
    Member { performer: PerformerId, role: RoleKind },
    /// One audience device; the seat number is its public name on ballots.
    Audience { seat: u64 },
}

impl ClientRole {
    pub fn member_role(&self) -> Option<RoleKind> {
        match self {
            ClientRole::Member { role, .. } => Some(*role),
            _ => None,
        }
    }

    pub fn performer(&self) -> Option<&str> {
        match self {
            ClientRole::Member { performer, .. } => Some(performer),
            _ => None,
        }
    }

    pub fn is(&self, kind: RoleKind) -> bool {
        self.member_role() == Some(kind)
    }

    pub fn is_host(&self) -> bool {
        matches!(self, ClientRole::Host)
    }

    pub fn is_audience(&self) -> bool {
        matches!(self, ClientRole::Audience { .. })
    }

    /// Host or either controller.
    pub fn steers(&self) -> bool {
        self.is_host() || self.is(RoleKind::CeoController) || self.is(RoleKind::PuppetMaster)
    }
}

impl fmt::Display for ClientRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClientRole::Host => f.write_str("host"),
            ClientRole::Member { performer, .. } => write!(f, "member `{performer}`"),
            ClientRole::Audience { seat } => write!(f, "audience seat {seat}"),
        }
    }
}

/// Source of fresh tokens and session ids.
#[derive(Debug, Clone)]
pub enum TokenIssuer {
    /// Random v4 UUIDs, for live servers.
    Random,
    /// Reproducible tokens for demos and tests.
    Seeded { seed: u64, counter: u64 },
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TokenIssuer {
    pub fn seeded(seed: u64) -> Self {
        TokenIssuer::Seeded { seed, counter: 0 }
    }

    pub fn next_token(&mut self) -> String {
        match self {
            TokenIssuer::Random => uuid::Uuid::new_v4().simple().to_string(),
            TokenIssuer::Seeded { seed, counter } => {
                *counter += 1;
                let a = splitmix64(*seed ^ counter.wrapping_mul(0xD6E8_FEB8_6659_FD93));
                let b = splitmix64(a);
                format!("{a:016x}{b:016x}")
            }
        }
    }

    /// An independent issuer for one session.
    pub fn fork(&mut self) -> Self {
        match self {
            TokenIssuer::Random => TokenIssuer::Random,
            TokenIssuer::Seeded { .. } => {
                let token = self.next_token();
                TokenIssuer::seeded(u64::from_str_radix(&token[..16], 16).expect("hex token"))
            }
        }
    }

    pub fn next_session_id(&mut self) -> String {
        let token = self.next_token();
        format!("s-{}", &token[..12])
    }
}
