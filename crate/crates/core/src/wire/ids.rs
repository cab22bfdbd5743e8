use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest legal WAMP id (2^53, the largest integer a JSON double holds exactly).
pub const MAX_ID: u64 = 1 << 53;

/// A WAMP id: request, session, subscription or publication identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Id(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("id {0} outside [1, 2^53]")]
pub struct IdError(pub u64);

impl Id {
    pub fn new(value: u64) -> Result<Self, IdError> {
        if (1..=MAX_ID).contains(&value) {
            Ok(Id(value))
        } else {
            Err(IdError(value))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Id {
    type Error = IdError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Id::new(value)
    }
}

impl From<Id> for u64 {
    fn from(id: Id) -> u64 {
        id.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Deterministic source of uniformly distributed WAMP ids.
///
/// Two generators built from the same seed yield the same sequence.
#[derive(Debug, Clone)]
pub struct IdGenerator {
    rng: ChaCha8Rng,
}

impl IdGenerator {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Draws the next id, uniform over [1, 2^53].
    pub fn new_id(&mut self) -> Id {
        Id(self.rng.random_range(1..=MAX_ID))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_draw_in_range() {
        let v = IdGenerator::from_seed(42).new_id().get();
        assert!((1..=MAX_ID).contains(&v));
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = IdGenerator::from_seed(42);
        let mut b = IdGenerator::from_seed(42);
        for _ in 0..100 {
            assert_eq!(a.new_id(), b.new_id());
        }
    }

    #[test]
    fn hundred_thousand_draws_stay_in_range() {
        let mut gen = IdGenerator::from_seed(7);
        let outside = (0..100_000)
            .map(|_| gen.new_id().get())
            .filter(|v| !(1..=MAX_ID).contains(v))
            .count();
        assert_eq!(outside, 0);
    }

    #[test]
    fn id_bounds() {
        assert!(Id::new(0).is_err());
        assert!(Id::new(1).is_ok());
        assert!(Id::new(MAX_ID).is_ok());
        assert_eq!(Id::new(MAX_ID + 1), Err(IdError(MAX_ID + 1)));
    }
}
