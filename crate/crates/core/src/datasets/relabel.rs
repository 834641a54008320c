//! Binary relabelings of multi-class image datasets.
//!
//! Each rule maps raw class ids to +1 / -1 and must cover both classes.
//! The built-in rules follow the customary even/odd groupings:
//!
//! - `mnist`, `emnist-digits`: even digits positive;
//! - `fashion-mnist`: T-shirt/top, Pullover, Coat, Shirt, Bag positive
//!   (the even raw ids), the rest negative;
//! - `emnist-letters`: letters with even zero-based alphabet ordinal
//!   (a, c, e, ...) positive — raw labels run 1..=26;
//! - `emnist-balanced`: 47 classes; digits split by digit parity,
//!   uppercase by alphabet-ordinal parity, and the lowercase subset by
//!   parity of its position within the lowercase segment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A named total map from raw class ids to binary labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelabelRule {
    name: String,
    map: BTreeMap<u8, i8>,
}

impl RelabelRule {
    /// Build a custom rule. Errors if the map is empty, contains a
    /// value outside {-1, +1}, or misses one of the two classes.
    pub fn new(name: impl Into<String>, map: BTreeMap<u8, i8>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::InvalidArgument("empty relabel map".into()));
        }
        if let Some((&id, &v)) = map.iter().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::InvalidArgument(format!(
                "relabel map sends class {id} to {v}, not +1/-1"
            )));
        }
        let has_pos = map.values().any(|&v| v == 1);
        let has_neg = map.values().any(|&v| v == -1);
        if !has_pos || !has_neg {
            return Err(Error::MissingClass(
                "relabel map must produce both +1 and -1".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            map,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Apply the rule; errors on any id the map does not cover.
    pub fn relabel(&self, labels: &[u8]) -> Result<Vec<i8>> {
        labels
            .iter()
            .map(|&id| {
                self.map.get(&id).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "class id {id} not covered by relabel rule {:?}",
                        self.name
                    ))
                })
            })
            .collect()
    }

    fn from_parity(name: &str, ids: impl Iterator<Item = (u8, usize)>) -> Self {
        let map = ids
            .map(|(id, ordinal)| (id, if ordinal % 2 == 0 { 1 } else { -1 }))
            .collect();
        Self::new(name, map).expect("built-in rule is valid")
    }

    /// Digits 0-9, even digits positive.
    pub fn mnist() -> Self {
        Self::from_parity("mnist", (0..10).map(|d| (d, d as usize)))
    }

    /// Same digit split as [`RelabelRule::mnist`].
    pub fn emnist_digits() -> Self {
        Self::from_parity("emnist-digits", (0..10).map(|d| (d, d as usize)))
    }

    /// Fashion-MNIST: positives are T-shirt/top (0), Pullover (2),
    /// Coat (4), Shirt (6), Bag (8).
    pub fn fashion_mnist() -> Self {
        Self::from_parity("fashion-mnist", (0..10).map(|d| (d, d as usize)))
    }

    /// EMNIST-Letters: raw labels 1..=26; even alphabet ordinal
    /// (a=0, b=1, ...) positive.
    pub fn emnist_letters() -> Self {
        Self::from_parity("emnist-letters", (1..=26).map(|l| (l, (l - 1) as usize)))
    }

    /// EMNIST-Balanced: ids 0-9 digits, 10-35 uppercase, 36-46 the
    /// lowercase subset; each segment split by its own ordinal parity.
    pub fn emnist_balanced() -> Self {
        let ids = (0..47u8).map(|id| {
            let ordinal = match id {
                0..=9 => id as usize,
                10..=35 => (id - 10) as usize,
                _ => (id - 36) as usize,
            };
            (id, ordinal)
        });
        Self::from_parity("emnist-balanced", ids)
    }

    /// Look up a built-in rule by its CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "mnist" => Ok(Self::mnist()),
            "emnist-digits" => Ok(Self::emnist_digits()),
            "fashion-mnist" => Ok(Self::fashion_mnist()),
            "emnist-letters" => Ok(Self::emnist_letters()),
            "emnist-balanced" => Ok(Self::emnist_balanced()),
            other => Err(Error::Parse(format!(
                "unknown relabel rule {other:?}; expected mnist|emnist-digits|fashion-mnist|emnist-letters|emnist-balanced"
            ))),
        }
    }
}
