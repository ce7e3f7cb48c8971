//! Integer sequences backing tail sets and cofinite families.
//!
//! Every sequence is strictly increasing in absolute value with nonzero
//! terms, which makes membership decidable by a finite scan. A sequence may
//! also carry a growth certificate `|x_{k+1}| ≥ r·|x_k|` (r ≥ 2) from some
//! index on; the decomposition search uses it to bound indices.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::serde_util;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("unknown sequence {0:?} (builtins: powersN, fibonacci, factorials)")]
    Unknown(String),
    #[error("powers need a base of at least 2, got {0}")]
    BadBase(u64),
    #[error("sequence {name:?}: term {index} is zero")]
    ZeroTerm { name: String, index: usize },
    #[error("sequence {name:?}: |x_{next}| does not exceed |x_{index}|")]
    NotIncreasing {
        name: String,
        index: usize,
        next: usize,
    },
    #[error("sequence {name:?}: growth certificate fails at index {index} (|x_{{k+1}}| < 2|x_k|)")]
    GrowthFails { name: String, index: usize },
}

/// A registered integer sequence `x_0, x_1, …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sequence {
    /// `base^k`.
    Powers { base: u64 },
    /// `1, 2, 3, 5, 8, …` (Fibonacci numbers from F₂, so terms strictly increase).
    Fibonacci,
    /// `(k+1)!`: `1, 2, 6, 24, …`.
    Factorials,
    /// A user-supplied finite list. `growth_from` declares the index from which
    /// consecutive terms at least double; it is checked on construction.
    Explicit {
        name: String,
        values: Vec<BigInt>,
        growth_from: Option<usize>,
    },
}

#[derive(Serialize, Deserialize)]
struct ExplicitDoc {
    name: String,
    #[serde(with = "serde_util::bigint_vec")]
    values: Vec<BigInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    growth_from: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SequenceRepr {
    Name(String),
    Explicit(ExplicitDoc),
}

impl Serialize for Sequence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Sequence::Explicit {
                name,
                values,
                growth_from,
            } => ExplicitDoc {
                name: name.clone(),
                values: values.clone(),
                growth_from: *growth_from,
            }
            .serialize(s),
            other => s.serialize_str(&other.name()),
        }
    }
}

impl<'de> Deserialize<'de> for Sequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SequenceRepr::deserialize(d)? {
            SequenceRepr::Name(n) => Sequence::builtin(&n).map_err(serde::de::Error::custom),
            SequenceRepr::Explicit(doc) => {
                Sequence::explicit(doc.name, doc.values, doc.growth_from)
                    .map_err(serde::de::Error::custom)
            }
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Sequence {
    pub fn powers(base: u64) -> Result<Self, SequenceError> {
        if base < 2 {
            return Err(SequenceError::BadBase(base));
        }
        Ok(Sequence::Powers { base })
    }

    pub fn builtin(name: &str) -> Result<Self, SequenceError> {
        match name {
            "fibonacci" => Ok(Sequence::Fibonacci),
            "factorials" => Ok(Sequence::Factorials),
            _ => match name
                .strip_prefix("powers")
                .and_then(|b| b.parse::<u64>().ok())
            {
                Some(base) => Sequence::powers(base),
                None => Err(SequenceError::Unknown(name.to_string())),
            },
        }
    }

    pub fn explicit(
        name: String,
        values: Vec<BigInt>,
        growth_from: Option<usize>,
    ) -> Result<Self, SequenceError> {
        for (i, v) in values.iter().enumerate() {
            if v.is_zero() {
                return Err(SequenceError::ZeroTerm { name, index: i });
            }
        }
        for i in 1..values.len() {
            if values[i].abs() <= values[i - 1].abs() {
                return Err(SequenceError::NotIncreasing {
                    name,
                    index: i - 1,
                    next: i,
                });
            }
        }
        if let Some(from) = growth_from {
            for i in from..values.len().saturating_sub(1) {
                if values[i + 1].abs() < values[i].abs() * 2 {
                    return Err(SequenceError::GrowthFails { name, index: i });
                }
            }
        }
        Ok(Sequence::Explicit {
            name,
            values,
            growth_from,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Sequence::Powers { base } => format!("powers{base}"),
            Sequence::Fibonacci => "fibonacci".to_string(),
            Sequence::Factorials => "factorials".to_string(),
            Sequence::Explicit { name, .. } => name.clone(),
        }
    }

    /// Number of terms, `None` for infinite sequences.
    pub fn term_count(&self) -> Option<usize> {
        match self {
            Sequence::Explicit { values, .. } => Some(values.len()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.term_count().is_some()
    }

    pub fn value(&self, k: usize) -> Option<BigInt> {
        match self {
            Sequence::Powers { base } => Some(num_traits::pow(BigInt::from(*base), k)),
            Sequence::Fibonacci => {
                let (mut a, mut b) = (BigInt::one(), BigInt::from(2));
                for _ in 0..k {
                    let next = &a + &b;
                    a = std::mem::replace(&mut b, next);
                }
                Some(a)
            }
            Sequence::Factorials => Some((2..=k as u64 + 1).fold(BigInt::one(), |acc, i| acc * i)),
            Sequence::Explicit { values, .. } => values.get(k).cloned(),
        }
    }

    /// Terms `(k, x_k)` with `|x_k| ≤ bound`, in index order.
    pub fn terms_up_to_abs(&self, bound: &BigInt) -> Vec<(usize, BigInt)> {
        let mut out = Vec::new();
        let mut k = 0;
        while let Some(v) = self.value(k) {
            if v.abs() > *bound {
                break;
            }
            out.push((k, v));
            k += 1;
        }
        out
    }

    /// Terms `x_0..=x_last` (truncated at the end of a finite sequence).
    pub fn terms_up_to_index(&self, last: usize) -> Vec<BigInt> {
        (0..=last).map_while(|k| self.value(k)).collect()
    }

    /// The index `k` with `x_k = v`, if any.
    pub fn index_of(&self, v: &BigInt) -> Option<usize> {
        let target = v.abs();
        let mut k = 0;
        while let Some(x) = self.value(k) {
            let ax = x.abs();
            if ax > target {
                return None;
            }
            if x == *v {
                return Some(k);
            }
            k += 1;
        }
        None
    }

    /// A ratio `r ≥ 2` with `|x_{k+1}| ≥ r·|x_k|` for all `k ≥ from`, if certified.
    pub fn growth_ratio(&self, from: usize) -> Option<u64> {
        match self {
            Sequence::Powers { base } => Some(*base),
            Sequence::Factorials => Some(from as u64 + 2),
            Sequence::Fibonacci => None,
            Sequence::Explicit {
                values,
                growth_from,
                ..
            } => {
                let start = (*growth_from)?.max(from);
                let ratio = (start..values.len().saturating_sub(1))
                    .map(|i| {
                        (values[i + 1].abs() / values[i].abs())
                            .try_into()
                            .unwrap_or(u64::MAX)
                    })
                    .min()
                    .unwrap_or(u64::MAX);
                (ratio >= 2).then_some(ratio)
            }
        }
    }

    /// `gcd { x_k : k ≥ t }`; zero when the tail is empty.
    pub fn tail_divisor(&self, t: usize) -> BigInt {
        match self {
            Sequence::Powers { base } => num_traits::pow(BigInt::from(*base), t),
            Sequence::Factorials => self.value(t).expect("infinite"),
            Sequence::Fibonacci => BigInt::one(),
            Sequence::Explicit { values, .. } => values
                .iter()
                .skip(t)
                .fold(BigInt::zero(), |acc, v| acc.gcd(v)),
        }
    }
}

/// Name → sequence lookup used when loading configurations. Builtins are
/// always available; user sequences are registered once at load time.
#[derive(Clone, Debug, Default)]
pub struct SequenceRegistry {
    user: BTreeMap<String, Sequence>,
}

impl SequenceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, seq: Sequence) {
        self.user.insert(seq.name(), seq);
    }

    pub fn resolve(&self, name: &str) -> Result<Sequence, SequenceError> {
        match self.user.get(name) {
            Some(s) => Ok(s.clone()),
            None => Sequence::builtin(name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn builtin_values() {
        let p3 = Sequence::builtin("powers3").unwrap();
        assert_eq!(
            p3.terms_up_to_index(4),
            vec![big(1), big(3), big(9), big(27), big(81)]
        );
        let fib = Sequence::Fibonacci;
        assert_eq!(
            fib.terms_up_to_index(5),
            vec![big(1), big(2), big(3), big(5), big(8), big(13)]
        );
        let fact = Sequence::Factorials;
        assert_eq!(
            fact.terms_up_to_index(3),
            vec![big(1), big(2), big(6), big(24)]
        );
        assert!(Sequence::builtin("powers1").is_err());
        assert!(Sequence::builtin("primes").is_err());
    }

    #[test]
    fn index_lookup() {
        let p3 = Sequence::powers(3).unwrap();
        assert_eq!(p3.index_of(&big(27)), Some(3));
        assert_eq!(p3.index_of(&big(-27)), None);
        assert_eq!(p3.index_of(&big(28)), None);
        assert_eq!(p3.terms_up_to_abs(&big(10)).len(), 3);
    }

    #[test]
    fn divisors_and_growth() {
        let p3 = Sequence::powers(3).unwrap();
        assert_eq!(p3.tail_divisor(2), big(9));
        assert_eq!(p3.growth_ratio(0), Some(3));
        assert_eq!(Sequence::Factorials.tail_divisor(3), big(24));
        assert_eq!(Sequence::Factorials.growth_ratio(3), Some(5));
        assert_eq!(Sequence::Fibonacci.growth_ratio(0), None);
        assert_eq!(Sequence::Fibonacci.tail_divisor(4), big(1));
    }

    #[test]
    fn explicit_validation() {
        let ok = Sequence::explicit("s".into(), vec![big(1), big(-3), big(7), big(20)], Some(1))
            .unwrap();
        assert_eq!(ok.growth_ratio(0), Some(2));
        assert_eq!(ok.tail_divisor(2), big(1));
        assert!(Sequence::explicit("s".into(), vec![big(1), big(0)], None).is_err());
        assert!(Sequence::explicit("s".into(), vec![big(2), big(-2)], None).is_err());
        assert!(Sequence::explicit("s".into(), vec![big(2), big(3)], Some(0)).is_err());
    }

    #[test]
    fn json_forms() {
        let p: Sequence = serde_json::from_str("\"powers3\"").unwrap();
        assert_eq!(p, Sequence::Powers { base: 3 });
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"powers3\"");
        let e: Sequence =
            serde_json::from_str(r#"{"name":"mine","values":[1,2,5],"growth_from":0}"#).unwrap();
        assert_eq!(e.term_count(), Some(3));
        let mut reg = SequenceRegistry::new();
        reg.register(e.clone());
        assert_eq!(reg.resolve("mine").unwrap(), e);
        assert_eq!(reg.resolve("factorials").unwrap(), Sequence::Factorials);
    }
}
