//! Ambient groups and their elements.
//!
//! Abelian groups (integers, truncated products `ℤ/1 × … × ℤ/N`, rationals)
//! are written additively; free groups and finite groups given by a Cayley
//! table are written multiplicatively. Every operation goes through
//! [`AmbientGroup`] so that element/group mismatches are caught in one place.

use std::fmt;
use std::num::NonZeroI32;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serde_util;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("element {element} does not belong to {group}")]
    NotInGroup { element: String, group: String },
    #[error("cayley table is not square: row {row} has {len} entries, expected {order}")]
    NotSquare {
        row: usize,
        len: usize,
        order: usize,
    },
    #[error("cayley table is empty")]
    EmptyTable,
    #[error("cayley table entry {value} at ({row}, {col}) is out of range for order {order}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: usize,
        order: usize,
    },
    #[error("cayley table has no two-sided identity")]
    NoIdentity,
    #[error("element {0} has no two-sided inverse")]
    MissingInverse(usize),
    #[error("cayley table is not associative: ({0}*{1})*{2} != {0}*({1}*{2})")]
    NotAssociative(usize, usize, usize),
    #[error("cayley table declares order {declared} but has {actual} rows")]
    OrderMismatch { declared: usize, actual: usize },
    #[error("expected {expected} names, got {actual}")]
    NameCount { expected: usize, actual: usize },
    #[error("product group ℤ/1 × … × ℤ/N needs N ≥ 1")]
    EmptyProduct,
    #[error("generator index {0} is outside the free group's alphabet")]
    UnknownGenerator(usize),
}

/// One letter of a free-group word: generator `i` is stored as `i + 1`,
/// its inverse as `-(i + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(NonZeroI32);

impl Letter {
    pub fn gen(index: usize) -> Self {
        Letter(NonZeroI32::new(index as i32 + 1).expect("nonzero"))
    }

    pub fn inv(index: usize) -> Self {
        Letter(NonZeroI32::new(-(index as i32 + 1)).expect("nonzero"))
    }

    pub fn generator(self) -> usize {
        (self.0.get().unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0.get() < 0
    }

    pub fn inverse(self) -> Self {
        Letter(NonZeroI32::new(-self.0.get()).expect("nonzero"))
    }

    pub fn raw(self) -> i32 {
        self.0.get()
    }
}

/// A freely reduced word. Construction always reduces, so no value of this
/// type contains an adjacent letter/inverse pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Letter>", into = "Vec<Letter>")]
pub struct Word(Vec<Letter>);

impl From<Vec<Letter>> for Word {
    fn from(letters: Vec<Letter>) -> Self {
        Word::from_letters(letters)
    }
}

impl From<Word> for Vec<Letter> {
    fn from(w: Word) -> Self {
        w.0
    }
}

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out = Word::empty();
        for l in letters {
            out.push(l);
        }
        out
    }

    /// Appends a letter, cancelling it against the last one if they are inverse.
    pub fn push(&mut self, letter: Letter) {
        if self.0.last() == Some(&letter.inverse()) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.clone();
        for &l in &other.0 {
            out.push(l);
        }
        out
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.generator()).max()
    }

    /// Renders with the given generator names; `x^-1` style for inverses.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "e".to_string();
        }
        self.0
            .iter()
            .map(|l| {
                let name = names
                    .get(l.generator())
                    .cloned()
                    .unwrap_or_else(|| format!("g{}", l.generator()));
                if l.is_inverse() {
                    format!("{name}^-1")
                } else {
                    name
                }
            })
            .collect::<Vec<_>>()
            .join("·")
    }
}

/// A finite group given by its multiplication table, validated on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CayleyDocument", into = "CayleyDocument")]
pub struct CayleyTable {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
    names: Vec<String>,
}

/// The on-disk form: `{"order": n, "table": [[...]], "names": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CayleyDocument {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl TryFrom<CayleyDocument> for CayleyTable {
    type Error = GroupError;

    fn try_from(doc: CayleyDocument) -> Result<Self, GroupError> {
        if doc.table.len() != doc.order {
            return Err(GroupError::OrderMismatch {
                declared: doc.order,
                actual: doc.table.len(),
            });
        }
        CayleyTable::new(doc.table, doc.names)
    }
}

impl From<CayleyTable> for CayleyDocument {
    fn from(t: CayleyTable) -> Self {
        CayleyDocument {
            order: t.order(),
            table: t.table,
            names: t.names,
        }
    }
}

impl CayleyTable {
    /// Validates the table as a group: closure, associativity (full triple
    /// loop), a two-sided identity, and two-sided inverses.
    pub fn new(table: Vec<Vec<usize>>, names: Vec<String>) -> Result<Self, GroupError> {
        let order = table.len();
        if order == 0 {
            return Err(GroupError::EmptyTable);
        }
        for (row, entries) in table.iter().enumerate() {
            if entries.len() != order {
                return Err(GroupError::NotSquare {
                    row,
                    len: entries.len(),
                    order,
                });
            }
            for (col, &value) in entries.iter().enumerate() {
                if value >= order {
                    return Err(GroupError::EntryOutOfRange {
                        row,
                        col,
                        value,
                        order,
                    });
                }
            }
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or(GroupError::NoIdentity)?;
        let mut inverses = Vec::with_capacity(order);
        for (x, row) in table.iter().enumerate() {
            let inv = (0..order)
                .find(|&y| row[y] == identity && table[y][x] == identity)
                .ok_or(GroupError::MissingInverse(x))?;
            inverses.push(inv);
        }
        for a in 0..order {
            for b in 0..order {
                let ab = table[a][b];
                for c in 0..order {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(GroupError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        let names = if names.is_empty() {
            (0..order).map(|i| i.to_string()).collect()
        } else if names.len() != order {
            return Err(GroupError::NameCount {
                expected: order,
                actual: names.len(),
            });
        } else {
            names
        };
        Ok(CayleyTable {
            table,
            identity,
            inverses,
            names,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str::<CayleyTable>(text).map_err(|e| e.to_string())
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }
}

/// The group a set, element, or family lives in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientGroup {
    Integers,
    /// `∏_{n=1..N} ℤ/nℤ`; coordinate 1 is the trivial group and stays zero.
    ProductMod {
        n: usize,
    },
    Rationals,
    Free {
        generators: Vec<String>,
    },
    Cayley {
        table: Arc<CayleyTable>,
    },
}

/// A value in one of the supported ambient groups.
///
/// JSON form is externally tagged (`{"int": 5}`, `{"residues": [0,1,2]}`,
/// `{"rational": "7/8"}`, `{"word": [1,-2]}`, `{"cayley": 3}`); bare numbers
/// and numeric strings are also accepted as integers, `"p/q"` as rationals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "ElementRepr")]
pub enum GroupElement {
    Int(#[serde(with = "serde_util::bigint")] BigInt),
    /// Coordinate `n` (1-based) is stored at index `n - 1` and lies in `0..n`.
    Residues(Vec<u64>),
    Rational(#[serde(with = "serde_util::rational")] BigRational),
    Word(Word),
    Cayley(usize),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum TaggedElement {
    Int(#[serde(with = "serde_util::bigint")] BigInt),
    Residues(Vec<u64>),
    Rational(#[serde(with = "serde_util::rational")] BigRational),
    Word(Word),
    Cayley(usize),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ElementRepr {
    Tagged(TaggedElement),
    Int(i64),
    Text(String),
}

impl TryFrom<ElementRepr> for GroupElement {
    type Error = String;

    fn try_from(r: ElementRepr) -> Result<Self, String> {
        Ok(match r {
            ElementRepr::Tagged(TaggedElement::Int(v)) => GroupElement::Int(v),
            ElementRepr::Tagged(TaggedElement::Residues(v)) => GroupElement::Residues(v),
            ElementRepr::Tagged(TaggedElement::Rational(v)) => GroupElement::Rational(v),
            ElementRepr::Tagged(TaggedElement::Word(v)) => GroupElement::Word(v),
            ElementRepr::Tagged(TaggedElement::Cayley(v)) => GroupElement::Cayley(v),
            ElementRepr::Int(v) => GroupElement::Int(v.into()),
            ElementRepr::Text(t) if t.contains('/') => GroupElement::Rational(
                serde_util::parse_rational(&t).ok_or_else(|| format!("invalid rational {t:?}"))?,
            ),
            ElementRepr::Text(t) => GroupElement::Int(
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|_| format!("invalid element {t:?}"))?,
            ),
        })
    }
}

impl GroupElement {
    pub fn int<T: Into<BigInt>>(v: T) -> Self {
        GroupElement::Int(v.into())
    }

    pub fn rational(n: i64, d: i64) -> Self {
        GroupElement::Rational(BigRational::new(n.into(), d.into()))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            GroupElement::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&Word> {
        match self {
            GroupElement::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(v) => write!(f, "{v}"),
            GroupElement::Residues(r) => {
                let parts: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Rational(q) => f.write_str(&serde_util::format_rational(q)),
            GroupElement::Word(w) => {
                let names = ["x".to_string(), "y".to_string()];
                f.write_str(&w.display_with(&names))
            }
            GroupElement::Cayley(i) => write!(f, "#{i}"),
        }
    }
}

impl fmt::Display for AmbientGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientGroup::Integers => f.write_str("ℤ"),
            AmbientGroup::ProductMod { n } => write!(f, "∏_{{k≤{n}}} ℤ/k"),
            AmbientGroup::Rationals => f.write_str("ℚ"),
            AmbientGroup::Free { generators } => write!(f, "F⟨{}⟩", generators.join(",")),
            AmbientGroup::Cayley { table } => write!(f, "Cayley group of order {}", table.order()),
        }
    }
}

impl AmbientGroup {
    pub fn product_mod(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::EmptyProduct);
        }
        Ok(AmbientGroup::ProductMod { n })
    }

    pub fn free_xy() -> Self {
        AmbientGroup::Free {
            generators: vec!["x".into(), "y".into()],
        }
    }

    pub fn cayley(table: CayleyTable) -> Self {
        AmbientGroup::Cayley {
            table: Arc::new(table),
        }
    }

    /// Parses and validates a Cayley table document.
    pub fn load_cayley(text: &str) -> Result<Self, String> {
        CayleyTable::from_json(text).map(AmbientGroup::cayley)
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            AmbientGroup::Integers | AmbientGroup::ProductMod { .. } | AmbientGroup::Rationals => {
                true
            }
            AmbientGroup::Free { generators } => generators.len() <= 1,
            AmbientGroup::Cayley { table } => table.is_abelian(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            AmbientGroup::Integers => GroupElement::Int(BigInt::zero()),
            AmbientGroup::ProductMod { n } => GroupElement::Residues(vec![0; *n]),
            AmbientGroup::Rationals => GroupElement::Rational(BigRational::zero()),
            AmbientGroup::Free { .. } => GroupElement::Word(Word::empty()),
            AmbientGroup::Cayley { table } => GroupElement::Cayley(table.identity()),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    fn reject(&self, g: &GroupElement) -> GroupError {
        GroupError::NotInGroup {
            element: g.to_string(),
            group: self.to_string(),
        }
    }

    /// Checks that `g` is a well-formed element of this group.
    pub fn check(&self, g: &GroupElement) -> Result<(), GroupError> {
        let ok = match (self, g) {
            (AmbientGroup::Integers, GroupElement::Int(_)) => true,
            (AmbientGroup::Rationals, GroupElement::Rational(_)) => true,
            (AmbientGroup::ProductMod { n }, GroupElement::Residues(r)) => {
                r.len() == *n && r.iter().enumerate().all(|(i, &x)| x < (i as u64 + 1))
            }
            (AmbientGroup::Free { generators }, GroupElement::Word(w)) => {
                w.is_reduced() && w.max_generator().is_none_or(|m| m < generators.len())
            }
            (AmbientGroup::Cayley { table }, GroupElement::Cayley(i)) => *i < table.order(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.reject(g))
        }
    }

    pub fn contains_element(&self, g: &GroupElement) -> bool {
        self.check(g).is_ok()
    }

    /// The group law: `a + b` for abelian variants, `a·b` (freely reduced)
    /// for words and Cayley indices.
    pub fn op(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.op_unchecked(a, b))
    }

    pub(crate) fn op_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (self, a, b) {
            (_, GroupElement::Int(x), GroupElement::Int(y)) => GroupElement::Int(x + y),
            (_, GroupElement::Rational(x), GroupElement::Rational(y)) => {
                GroupElement::Rational(x + y)
            }
            (_, GroupElement::Residues(x), GroupElement::Residues(y)) => GroupElement::Residues(
                x.iter()
                    .zip(y)
                    .enumerate()
                    .map(|(i, (p, q))| (p + q) % (i as u64 + 1))
                    .collect(),
            ),
            (_, GroupElement::Word(x), GroupElement::Word(y)) => GroupElement::Word(x.concat(y)),
            (AmbientGroup::Cayley { table }, GroupElement::Cayley(x), GroupElement::Cayley(y)) => {
                GroupElement::Cayley(table.mul(*x, *y))
            }
            _ => unreachable!("operands checked against the ambient group"),
        }
    }

    /// Inverse (negation in the abelian variants).
    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(self.neg_unchecked(a))
    }

    pub(crate) fn neg_unchecked(&self, a: &GroupElement) -> GroupElement {
        match (self, a) {
            (_, GroupElement::Int(x)) => GroupElement::Int(-x),
            (_, GroupElement::Rational(x)) => GroupElement::Rational(-x),
            (_, GroupElement::Residues(x)) => GroupElement::Residues(
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let m = i as u64 + 1;
                        (m - v % m) % m
                    })
                    .collect(),
            ),
            (_, GroupElement::Word(w)) => GroupElement::Word(w.inverse()),
            (AmbientGroup::Cayley { table }, GroupElement::Cayley(i)) => {
                GroupElement::Cayley(table.inverse(*i))
            }
            _ => unreachable!("operand checked against the ambient group"),
        }
    }

    /// `a - b`, i.e. `a · b⁻¹`.
    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        let nb = self.neg(b)?;
        self.op(a, &nb)
    }

    /// `g·s·g⁻¹`; the identity map on abelian groups.
    pub fn conjugate(
        &self,
        g: &GroupElement,
        s: &GroupElement,
    ) -> Result<GroupElement, GroupError> {
        self.check(g)?;
        self.check(s)?;
        if matches!(
            self,
            AmbientGroup::Integers | AmbientGroup::ProductMod { .. } | AmbientGroup::Rationals
        ) {
            return Ok(s.clone());
        }
        let gs = self.op_unchecked(g, s);
        Ok(self.op_unchecked(&gs, &self.neg_unchecked(g)))
    }

    /// Folds the group law over `items` left to right.
    pub fn product<'a, I>(&self, items: I) -> Result<GroupElement, GroupError>
    where
        I: IntoIterator<Item = &'a GroupElement>,
    {
        let mut acc = self.identity();
        for x in items {
            acc = self.op(&acc, x)?;
        }
        Ok(acc)
    }

    /// All elements, for finite ambient groups, in a fixed order.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        match self {
            AmbientGroup::Cayley { table } => {
                Some((0..table.order()).map(GroupElement::Cayley).collect())
            }
            AmbientGroup::ProductMod { n } => {
                let mut out = vec![Vec::new()];
                for c in 1..=*n as u64 {
                    out = out
                        .into_iter()
                        .flat_map(|prefix: Vec<u64>| {
                            (0..c).map(move |v| {
                                let mut p = prefix.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect();
                }
                Some(out.into_iter().map(GroupElement::Residues).collect())
            }
            _ => None,
        }
    }

    /// Element display that knows generator and Cayley names.
    pub fn display(&self, g: &GroupElement) -> String {
        match (self, g) {
            (AmbientGroup::Free { generators }, GroupElement::Word(w)) => {
                w.display_with(generators)
            }
            (AmbientGroup::Cayley { table }, GroupElement::Cayley(i)) => table
                .names()
                .get(*i)
                .cloned()
                .unwrap_or_else(|| i.to_string()),
            _ => g.to_string(),
        }
    }

    /// Builds a free-group element from generator names and `^-1` suffixes,
    /// e.g. `"x y x^-1 y^-1"` or `"xyXY"` (uppercase = inverse, single-letter
    /// generators only).
    pub fn parse_word(&self, text: &str) -> Result<GroupElement, GroupError> {
        let AmbientGroup::Free { generators } = self else {
            return Err(GroupError::NotInGroup {
                element: text.to_string(),
                group: self.to_string(),
            });
        };
        let lookup = |name: &str| {
            generators
                .iter()
                .position(|g| g == name)
                .ok_or_else(|| GroupError::NotInGroup {
                    element: name.to_string(),
                    group: self.to_string(),
                })
        };
        let mut letters = Vec::new();
        let tokens: Vec<&str> = text
            .split(|c: char| c.is_whitespace() || c == '·' || c == '*')
            .filter(|t| !t.is_empty())
            .collect();
        for tok in tokens {
            if let Some(base) = tok.strip_suffix("^-1") {
                letters.push(Letter::inv(lookup(base)?));
            } else if generators.iter().any(|g| g == tok) {
                letters.push(Letter::gen(lookup(tok)?));
            } else {
                for ch in tok.chars() {
                    let lower = ch.to_lowercase().to_string();
                    let idx = lookup(&lower)?;
                    letters.push(if ch.is_uppercase() {
                        Letter::inv(idx)
                    } else {
                        Letter::gen(idx)
                    });
                }
            }
        }
        Ok(GroupElement::Word(Word::from_letters(letters)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> AmbientGroup {
        AmbientGroup::cayley(CayleyTable::new(vec![vec![0, 1], vec![1, 0]], vec![]).unwrap())
    }

    #[test]
    fn integer_addition() {
        let g = AmbientGroup::Integers;
        assert_eq!(
            g.op(&GroupElement::int(3), &GroupElement::int(4)).unwrap(),
            GroupElement::int(7)
        );
        assert_eq!(g.neg(&GroupElement::int(5)).unwrap(), GroupElement::int(-5));
    }

    #[test]
    fn free_reduction_cancels_middle_pair() {
        let f = AmbientGroup::free_xy();
        let a = f.parse_word("x y^-1").unwrap();
        let b = f.parse_word("y x").unwrap();
        assert_eq!(f.op(&a, &b).unwrap(), f.parse_word("x x").unwrap());
        assert_eq!(
            f.neg(&f.parse_word("xy").unwrap()).unwrap(),
            f.parse_word("y^-1 x^-1").unwrap()
        );
    }

    #[test]
    fn product_mod_is_coordinatewise() {
        let g = AmbientGroup::product_mod(3).unwrap();
        let a = GroupElement::Residues(vec![0, 1, 2]);
        assert_eq!(g.op(&a, &a).unwrap(), GroupElement::Residues(vec![0, 0, 1]));
        assert_eq!(g.neg(&a).unwrap(), GroupElement::Residues(vec![0, 1, 1]));
        assert!(g.check(&GroupElement::Residues(vec![0, 2, 0])).is_err());
        assert!(AmbientGroup::product_mod(0).is_err());
    }

    #[test]
    fn conjugation() {
        let f = AmbientGroup::free_xy();
        let x = f.parse_word("x").unwrap();
        let y = f.parse_word("y").unwrap();
        assert_eq!(
            f.conjugate(&x, &y).unwrap(),
            f.parse_word("x y x^-1").unwrap()
        );
        let xx = f.parse_word("xx").unwrap();
        assert_eq!(f.conjugate(&x, &xx).unwrap(), xx);
        let z = AmbientGroup::Integers;
        assert_eq!(
            z.conjugate(&GroupElement::int(7), &GroupElement::int(3))
                .unwrap(),
            GroupElement::int(3)
        );
    }

    #[test]
    fn cayley_identity_inverse() {
        let g = z2();
        assert_eq!(g.identity(), GroupElement::Cayley(0));
        assert_eq!(
            g.neg(&GroupElement::Cayley(0)).unwrap(),
            GroupElement::Cayley(0)
        );
        assert_eq!(
            g.neg(&GroupElement::Cayley(1)).unwrap(),
            GroupElement::Cayley(1)
        );
    }

    #[test]
    fn cayley_rejects_non_groups() {
        assert!(CayleyTable::new(vec![vec![0, 1], vec![0, 1]], vec![]).is_err());
        assert!(matches!(
            CayleyTable::new(vec![vec![0, 1]], vec![]),
            Err(GroupError::NotSquare { .. })
        ));
        assert!(matches!(
            CayleyTable::new(vec![vec![0, 2], vec![1, 0]], vec![]),
            Err(GroupError::EntryOutOfRange { .. })
        ));
        // Latin square with identity 0 that is not associative.
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(
            CayleyTable::new(loop5, vec![]),
            Err(GroupError::NotAssociative(..))
        ));
    }

    #[test]
    fn cayley_document_round_trip() {
        let doc = r#"{"order": 2, "table": [[0,1],[1,0]], "names": ["e","a"]}"#;
        let g = AmbientGroup::load_cayley(doc).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: AmbientGroup = serde_json::from_str(&text).unwrap();
        assert_eq!(g, back);
        assert!(AmbientGroup::load_cayley(r#"{"order": 3, "table": [[0,1],[1,0]]}"#).is_err());
    }

    #[test]
    fn element_json_forms() {
        let e = GroupElement::int(-27);
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"int":-27}"#);
        let big: GroupElement =
            serde_json::from_str(r#"{"int":"123456789012345678901234567890"}"#).unwrap();
        assert_eq!(big.to_string(), "123456789012345678901234567890");
        let q = GroupElement::rational(7, 8);
        assert_eq!(serde_json::to_string(&q).unwrap(), r#"{"rational":"7/8"}"#);
        let w: GroupElement = serde_json::from_str(r#"{"word":[1,2,-2,-1,2]}"#).unwrap();
        assert_eq!(w, GroupElement::Word(Word::from_letters([Letter::gen(1)])));
        let bare: Vec<GroupElement> = serde_json::from_str(r#"[5, "-12", "3/6"]"#).unwrap();
        assert_eq!(
            bare,
            vec![
                GroupElement::int(5),
                GroupElement::int(-12),
                GroupElement::rational(1, 2)
            ]
        );
    }
}
