//! Deterministic seed derivation.
//!
//! A stream seed is `master ⊕ H(n, replicate, role)`, where H is the first
//! eight bytes (little endian) of SHA-256 over a fixed tag, n, the replicate
//! index and the role name. Every random quantity of a run comes from one of
//! these streams, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Simulated data sets.
    Data,
    /// Markov chain seeds.
    Mcmc,
    /// Covariate samples for Hellinger integrals.
    Hellinger,
    /// Exact posterior draws of the baselines.
    Posterior,
}

impl Role {
    pub fn tag(self) -> &'static str {
        match self {
            Role::Data => "data",
            Role::Mcmc => "mcmc",
            Role::Hellinger => "hellinger",
            Role::Posterior => "posterior",
        }
    }
}

/// The 64-bit seed for (n, replicate, role) under `master`.
pub fn derive_seed(master: u64, n: u64, replicate: u64, role: Role) -> u64 {
    let mut h = Sha256::new();
    h.update(b"bvs-seed-v1");
    h.update(n.to_le_bytes());
    h.update(replicate.to_le_bytes());
    h.update(role.tag().as_bytes());
    let d = h.finalize();
    master ^ u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

/// Stream for a replicate that is not tied to a grid point.
pub fn seed_stream(master: u64, replicate: u64, role: Role) -> ChaCha20Rng {
    seed_stream_at(master, 0, replicate, role)
}

/// Stream for replicate `replicate` at grid point `n`.
pub fn seed_stream_at(master: u64, n: u64, replicate: u64, role: Role) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(master, n, replicate, role))
}
