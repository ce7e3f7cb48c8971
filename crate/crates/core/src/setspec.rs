//! Exact finite descriptions of subsets of an ambient group.
//!
//! Five representations cover every set the constructions need: explicit
//! finite sets, unions of residue classes in ℤ, coordinate boxes in the
//! truncated product `∏ ℤ/n`, symmetric open intervals in ℚ, and tails of a
//! registered integer sequence. On top of them sit the star closure
//! `S* = S ∪ {0} ∪ −S`, sumsets, n-fold star sums, and the prefix-sum
//! membership solver that every criterion reduces to.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{AmbientGroup, GroupElement, GroupError};
use crate::sequence::Sequence;
use crate::serde_util;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("residue set modulus must be positive, got {0}")]
    BadModulus(BigInt),
    #[error("residue {residue} is outside 0..{modulus}")]
    ResidueOutOfRange { residue: BigInt, modulus: BigInt },
    #[error("box over ℤ/1×…×ℤ/{n} constrains {prefix} coordinates")]
    BoxTooLong { n: usize, prefix: usize },
    #[error("box coordinate {coord}: allowed set must contain 0, lie in 0..{coord} and be closed under negation")]
    BoxNotSymmetric { coord: usize },
    #[error("interval radius must be positive")]
    BadRadius,
    #[error("sets live in different groups: {0} vs {1}")]
    AmbientMismatch(String, String),
    #[error("unsupported operation {op} for {left} and {right}")]
    Unsupported {
        op: &'static str,
        left: &'static str,
        right: &'static str,
    },
    #[error("explicit enumeration exceeded the budget of {0} elements")]
    EnumerationBudget(usize),
}

/// Enumeration limits for searches that cannot be decided in closed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Cap on the size of any intermediate state table.
    pub max_states: usize,
    /// Largest sequence index tried for tail summands when no growth bound applies.
    pub max_tail_index: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_states: 200_000,
            max_tail_index: 24,
        }
    }
}

/// An explicit finite subset of any ambient group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FiniteDoc", into = "FiniteDoc")]
pub struct FiniteSet {
    group: AmbientGroup,
    elements: BTreeSet<GroupElement>,
}

#[derive(Clone, Serialize, Deserialize)]
struct FiniteDoc {
    #[serde(default = "integers")]
    group: AmbientGroup,
    elements: Vec<GroupElement>,
}

fn integers() -> AmbientGroup {
    AmbientGroup::Integers
}

impl TryFrom<FiniteDoc> for FiniteSet {
    type Error = SetError;
    fn try_from(d: FiniteDoc) -> Result<Self, SetError> {
        FiniteSet::new(d.group, d.elements)
    }
}

impl From<FiniteSet> for FiniteDoc {
    fn from(f: FiniteSet) -> Self {
        FiniteDoc {
            group: f.group,
            elements: f.elements.into_iter().collect(),
        }
    }
}

impl FiniteSet {
    pub fn new<I: IntoIterator<Item = GroupElement>>(
        group: AmbientGroup,
        elements: I,
    ) -> Result<Self, SetError> {
        let elements: BTreeSet<GroupElement> = elements.into_iter().collect();
        for e in &elements {
            group.check(e)?;
        }
        Ok(FiniteSet { group, elements })
    }

    pub fn integers<I: IntoIterator<Item = i64>>(values: I) -> Self {
        FiniteSet {
            group: AmbientGroup::Integers,
            elements: values.into_iter().map(GroupElement::int).collect(),
        }
    }

    pub fn group(&self) -> &AmbientGroup {
        &self.group
    }

    pub fn elements(&self) -> &BTreeSet<GroupElement> {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// `{x ∈ ℤ : x mod M ∈ R}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ResidueDoc", into = "ResidueDoc")]
pub struct ResidueSet {
    modulus: BigInt,
    residues: BTreeSet<BigInt>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ResidueDoc {
    #[serde(with = "serde_util::bigint")]
    modulus: BigInt,
    #[serde(with = "serde_util::bigint_vec")]
    residues: Vec<BigInt>,
}

impl TryFrom<ResidueDoc> for ResidueSet {
    type Error = SetError;
    fn try_from(d: ResidueDoc) -> Result<Self, SetError> {
        ResidueSet::new(d.modulus, d.residues)
    }
}

impl From<ResidueSet> for ResidueDoc {
    fn from(r: ResidueSet) -> Self {
        ResidueDoc {
            modulus: r.modulus,
            residues: r.residues.into_iter().collect(),
        }
    }
}

impl ResidueSet {
    pub fn new<M: Into<BigInt>, I: IntoIterator<Item = BigInt>>(
        modulus: M,
        residues: I,
    ) -> Result<Self, SetError> {
        let modulus = modulus.into();
        if !modulus.is_positive() {
            return Err(SetError::BadModulus(modulus));
        }
        let mut set = BTreeSet::new();
        for r in residues {
            if r.is_negative() || r >= modulus {
                return Err(SetError::ResidueOutOfRange {
                    residue: r,
                    modulus,
                });
            }
            set.insert(r);
        }
        Ok(ResidueSet {
            modulus,
            residues: set,
        })
    }

    /// Convenience constructor for small moduli.
    pub fn small(modulus: u64, residues: &[u64]) -> Result<Self, SetError> {
        ResidueSet::new(
            BigInt::from(modulus),
            residues.iter().map(|&r| BigInt::from(r)),
        )
    }

    /// Builds from arbitrary integers, reducing each modulo `modulus`.
    pub fn from_classes<I: IntoIterator<Item = BigInt>>(
        modulus: BigInt,
        classes: I,
    ) -> Result<Self, SetError> {
        if !modulus.is_positive() {
            return Err(SetError::BadModulus(modulus));
        }
        let residues = classes.into_iter().map(|c| c.mod_floor(&modulus)).collect();
        Ok(ResidueSet { modulus, residues })
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn residues(&self) -> &BTreeSet<BigInt> {
        &self.residues
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        self.residues.contains(&x.mod_floor(&self.modulus))
    }

    /// True when every class is present, i.e. the set is all of ℤ.
    pub fn is_full(&self) -> bool {
        BigInt::from(self.residues.len()) == self.modulus
    }

    /// The same set described modulo `multiple` (a multiple of the modulus).
    pub fn lift(&self, multiple: &BigInt) -> Result<ResidueSet, SetError> {
        let factor = multiple / &self.modulus;
        if &(&factor * &self.modulus) != multiple || !factor.is_positive() {
            return Err(SetError::BadModulus(multiple.clone()));
        }
        let steps = factor
            .to_usize()
            .ok_or(SetError::EnumerationBudget(usize::MAX))?;
        let mut out = BTreeSet::new();
        for r in &self.residues {
            for t in 0..steps {
                out.insert(r + &self.modulus * t);
            }
        }
        Ok(ResidueSet {
            modulus: multiple.clone(),
            residues: out,
        })
    }

    fn negated(&self) -> BTreeSet<BigInt> {
        self.residues
            .iter()
            .map(|r| (-r).mod_floor(&self.modulus))
            .collect()
    }
}

/// Elements of `∏_{c=1..N} ℤ/c` whose first `m` coordinates lie in the given
/// allowed sets; coordinates after `m` are unconstrained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BoxDoc", into = "BoxDoc")]
pub struct BoxSet {
    n: usize,
    allowed: Vec<BTreeSet<u64>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct BoxDoc {
    n: usize,
    allowed: Vec<Vec<u64>>,
}

impl TryFrom<BoxDoc> for BoxSet {
    type Error = SetError;
    fn try_from(d: BoxDoc) -> Result<Self, SetError> {
        BoxSet::new(
            d.n,
            d.allowed
                .into_iter()
                .map(|v| v.into_iter().collect())
                .collect(),
        )
    }
}

impl From<BoxSet> for BoxDoc {
    fn from(b: BoxSet) -> Self {
        BoxDoc {
            n: b.n,
            allowed: b
                .allowed
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        }
    }
}

impl BoxSet {
    /// Rejects coordinate sets that miss 0 or are not closed under negation.
    pub fn new(n: usize, allowed: Vec<BTreeSet<u64>>) -> Result<Self, SetError> {
        if n == 0 {
            return Err(GroupError::EmptyProduct.into());
        }
        if allowed.len() > n {
            return Err(SetError::BoxTooLong {
                n,
                prefix: allowed.len(),
            });
        }
        for (i, set) in allowed.iter().enumerate() {
            let c = i as u64 + 1;
            let ok = set.contains(&0) && set.iter().all(|&v| v < c && set.contains(&((c - v) % c)));
            if !ok {
                return Err(SetError::BoxNotSymmetric { coord: i + 1 });
            }
        }
        Ok(BoxSet { n, allowed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prefix(&self) -> usize {
        self.allowed.len()
    }

    /// Allowed values at 1-based coordinate `c` (all of `0..c` past the prefix).
    pub fn allowed_at(&self, c: usize) -> BTreeSet<u64> {
        match self.allowed.get(c - 1) {
            Some(s) => s.clone(),
            None => (0..c as u64).collect(),
        }
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        v.len() == self.n && self.allowed.iter().zip(v).all(|(s, x)| s.contains(x))
    }
}

/// The open interval `(−ε, ε)` in ℚ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntervalDoc", into = "IntervalDoc")]
pub struct SymmetricInterval {
    radius: BigRational,
}

#[derive(Clone, Serialize, Deserialize)]
struct IntervalDoc {
    #[serde(with = "serde_util::rational")]
    epsilon: BigRational,
}

impl TryFrom<IntervalDoc> for SymmetricInterval {
    type Error = SetError;
    fn try_from(d: IntervalDoc) -> Result<Self, SetError> {
        SymmetricInterval::new(d.epsilon)
    }
}

impl From<SymmetricInterval> for IntervalDoc {
    fn from(i: SymmetricInterval) -> Self {
        IntervalDoc { epsilon: i.radius }
    }
}

impl SymmetricInterval {
    pub fn new(radius: BigRational) -> Result<Self, SetError> {
        if !radius.is_positive() {
            return Err(SetError::BadRadius);
        }
        Ok(SymmetricInterval { radius })
    }

    pub fn radius(&self) -> &BigRational {
        &self.radius
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        q.abs() < self.radius
    }
}

/// `{x_k : k ≥ start, k ∉ excluded}` for a registered sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailSet {
    pub sequence: Sequence,
    pub start: usize,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub excluded: BTreeSet<usize>,
}

impl TailSet {
    pub fn new(sequence: Sequence, start: usize) -> Self {
        TailSet {
            sequence,
            start,
            excluded: BTreeSet::new(),
        }
    }

    pub fn includes_index(&self, k: usize) -> bool {
        k >= self.start
            && !self.excluded.contains(&k)
            && self.sequence.term_count().is_none_or(|n| k < n)
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        self.sequence
            .index_of(x)
            .is_some_and(|k| self.includes_index(k))
    }

    /// Member values with index `≤ last`.
    pub fn values_up_to_index(&self, last: usize) -> Vec<BigInt> {
        self.sequence
            .terms_up_to_index(last)
            .into_iter()
            .enumerate()
            .filter(|(k, _)| self.includes_index(*k))
            .map(|(_, v)| v)
            .collect()
    }

    /// A modulus `d` with every member divisible by `d` (0 for an empty tail).
    pub fn divisor(&self) -> BigInt {
        match &self.sequence {
            Sequence::Explicit { values, .. } => values
                .iter()
                .enumerate()
                .filter(|(k, _)| self.includes_index(*k))
                .fold(BigInt::zero(), |acc, (_, v)| acc.gcd(v)),
            s => s.tail_divisor(self.start),
        }
    }
}

/// A subset of an ambient group in one of the exact representations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Finite(FiniteSet),
    Residue(ResidueSet),
    Box(BoxSet),
    Interval(SymmetricInterval),
    Tail(TailSet),
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Finite(s) => {
                let parts: Vec<String> = s.elements.iter().map(|e| s.group.display(e)).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            SetSpec::Residue(r) => {
                let parts: Vec<String> = r.residues.iter().map(|x| x.to_string()).collect();
                write!(f, "{{{}}} mod {}", parts.join(","), r.modulus)
            }
            SetSpec::Box(b) => write!(f, "box(N={}, m={})", b.n, b.prefix()),
            SetSpec::Interval(i) => {
                write!(f, "(-{0}, {0})", serde_util::format_rational(&i.radius))
            }
            SetSpec::Tail(t) => {
                write!(f, "{}[k≥{}]", t.sequence, t.start)?;
                if !t.excluded.is_empty() {
                    write!(f, "∖{:?}", t.excluded)?;
                }
                Ok(())
            }
        }
    }
}

impl SetSpec {
    pub fn residue(modulus: u64, residues: &[u64]) -> Result<Self, SetError> {
        ResidueSet::small(modulus, residues).map(SetSpec::Residue)
    }

    pub fn finite_ints<I: IntoIterator<Item = i64>>(values: I) -> Self {
        SetSpec::Finite(FiniteSet::integers(values))
    }

    pub fn interval(num: i64, den: i64) -> Result<Self, SetError> {
        SymmetricInterval::new(BigRational::new(num.into(), den.into())).map(SetSpec::Interval)
    }

    pub fn tail(sequence: Sequence, start: usize) -> Self {
        SetSpec::Tail(TailSet::new(sequence, start))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SetSpec::Finite(_) => "finite",
            SetSpec::Residue(_) => "residue",
            SetSpec::Box(_) => "box",
            SetSpec::Interval(_) => "interval",
            SetSpec::Tail(_) => "tail",
        }
    }

    pub fn ambient(&self) -> AmbientGroup {
        match self {
            SetSpec::Finite(f) => f.group.clone(),
            SetSpec::Residue(_) | SetSpec::Tail(_) => AmbientGroup::Integers,
            SetSpec::Box(b) => AmbientGroup::ProductMod { n: b.n },
            SetSpec::Interval(_) => AmbientGroup::Rationals,
        }
    }

    /// Exact membership.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (SetSpec::Finite(f), _) => f.elements.contains(g),
            (SetSpec::Residue(r), GroupElement::Int(x)) => r.contains(x),
            (SetSpec::Box(b), GroupElement::Residues(v)) => b.contains(v),
            (SetSpec::Interval(i), GroupElement::Rational(q)) => i.contains(q),
            (SetSpec::Tail(t), GroupElement::Int(x)) => t.contains(x),
            _ => false,
        }
    }

    /// Materializes the set when it is finite (finite sets and tails of finite sequences).
    pub fn enumerate(&self) -> Option<Vec<GroupElement>> {
        match self {
            SetSpec::Finite(f) => Some(f.elements.iter().cloned().collect()),
            SetSpec::Tail(t) => {
                let n = t.sequence.term_count()?;
                Some(
                    t.values_up_to_index(n.saturating_sub(1))
                        .into_iter()
                        .filter(|_| n > 0)
                        .map(GroupElement::Int)
                        .collect(),
                )
            }
            SetSpec::Residue(r) if r.residues.is_empty() => Some(Vec::new()),
            SetSpec::Box(b) => {
                let all = AmbientGroup::ProductMod { n: b.n }.elements()?;
                Some(all.into_iter().filter(|e| self.contains(e)).collect())
            }
            _ => None,
        }
    }
}

/// A star-closed set: `S ∪ {e} ∪ S⁻¹`.
///
/// `set` is the underlying representation. When `symmetric` is set it is
/// already closed under negation; otherwise membership also tests `−g`.
/// `adjoin_identity` adds the single identity element when the
/// representation cannot hold it on its own (e.g. a residue set without the
/// class 0, where adding the class would add all of `Mℤ`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSet {
    pub set: SetSpec,
    pub symmetric: bool,
    pub adjoin_identity: bool,
}

impl StarSet {
    pub fn contains(&self, g: &GroupElement) -> bool {
        let group = self.set.ambient();
        if !group.contains_element(g) {
            return false;
        }
        if self.adjoin_identity && group.is_identity(g) {
            return true;
        }
        if self.set.contains(g) {
            return true;
        }
        !self.symmetric && self.set.contains(&group.neg_unchecked(g))
    }

    pub fn ambient(&self) -> AmbientGroup {
        self.set.ambient()
    }

    /// Explicit elements when the star set is finite.
    pub fn enumerate(&self) -> Option<Vec<GroupElement>> {
        let group = self.set.ambient();
        let base = self.set.enumerate()?;
        let mut out: BTreeSet<GroupElement> = base.iter().cloned().collect();
        if !self.symmetric {
            out.extend(base.iter().map(|x| group.neg_unchecked(x)));
        }
        if self.adjoin_identity || !self.symmetric {
            out.insert(group.identity());
        }
        Some(out.into_iter().collect())
    }
}

/// `S* = S ∪ {0} ∪ −S` (multiplicatively `S ∪ {e} ∪ S⁻¹`).
pub fn star(s: &SetSpec) -> StarSet {
    match s {
        SetSpec::Finite(f) => {
            let mut elements = f.elements.clone();
            elements.insert(f.group.identity());
            for x in &f.elements {
                elements.insert(f.group.neg_unchecked(x));
            }
            StarSet {
                set: SetSpec::Finite(FiniteSet {
                    group: f.group.clone(),
                    elements,
                }),
                symmetric: true,
                adjoin_identity: false,
            }
        }
        SetSpec::Residue(r) => {
            let mut residues = r.residues.clone();
            residues.extend(r.negated());
            let has_zero = residues.contains(&BigInt::zero());
            StarSet {
                set: SetSpec::Residue(ResidueSet {
                    modulus: r.modulus.clone(),
                    residues,
                }),
                symmetric: true,
                adjoin_identity: !has_zero,
            }
        }
        SetSpec::Box(_) | SetSpec::Interval(_) => StarSet {
            set: s.clone(),
            symmetric: true,
            adjoin_identity: false,
        },
        SetSpec::Tail(_) => StarSet {
            set: s.clone(),
            symmetric: false,
            adjoin_identity: true,
        },
    }
}

fn mismatch(a: &SetSpec, b: &SetSpec) -> SetError {
    SetError::AmbientMismatch(a.ambient().to_string(), b.ambient().to_string())
}

fn residue_sum(a: &ResidueSet, b: &ResidueSet) -> ResidueSet {
    let m = a.modulus.gcd(&b.modulus);
    let mr = &m;
    let residues = a
        .residues
        .iter()
        .flat_map(|x| b.residues.iter().map(move |y| (x + y).mod_floor(mr)))
        .collect();
    ResidueSet {
        modulus: m,
        residues,
    }
}

fn box_sum(a: &BoxSet, b: &BoxSet) -> BoxSet {
    let prefix = a.prefix().min(b.prefix());
    let allowed = (0..prefix)
        .map(|i| {
            let c = i as u64 + 1;
            a.allowed[i]
                .iter()
                .flat_map(|x| b.allowed[i].iter().map(move |y| (x + y) % c))
                .collect()
        })
        .collect();
    BoxSet { n: a.n, allowed }
}

fn finite_product(a: &FiniteSet, b: &FiniteSet, budget: usize) -> Result<FiniteSet, SetError> {
    let mut out = BTreeSet::new();
    for x in &a.elements {
        for y in &b.elements {
            out.insert(a.group.op_unchecked(x, y));
            if out.len() > budget {
                return Err(SetError::EnumerationBudget(budget));
            }
        }
    }
    Ok(FiniteSet {
        group: a.group.clone(),
        elements: out,
    })
}

const DEFAULT_ENUMERATION: usize = 1 << 20;

/// Exact sumset `A + B` (ordered product `A·B` for finite sets in nonabelian groups).
///
/// Residue classes combine as `class(a, M₁) + class(b, M₂) = class(a+b, gcd(M₁, M₂))`.
pub fn sumset(a: &SetSpec, b: &SetSpec) -> Result<SetSpec, SetError> {
    if a.ambient() != b.ambient() {
        return Err(mismatch(a, b));
    }
    match (a, b) {
        (SetSpec::Finite(x), SetSpec::Finite(y)) => {
            finite_product(x, y, DEFAULT_ENUMERATION).map(SetSpec::Finite)
        }
        (SetSpec::Residue(x), SetSpec::Residue(y)) => Ok(SetSpec::Residue(residue_sum(x, y))),
        (SetSpec::Box(x), SetSpec::Box(y)) => Ok(SetSpec::Box(box_sum(x, y))),
        (SetSpec::Interval(x), SetSpec::Interval(y)) => Ok(SetSpec::Interval(SymmetricInterval {
            radius: &x.radius + &y.radius,
        })),
        (SetSpec::Finite(f), SetSpec::Residue(r)) | (SetSpec::Residue(r), SetSpec::Finite(f)) => {
            let shifts: Vec<BigInt> = f
                .elements
                .iter()
                .filter_map(|e| e.as_int().cloned())
                .collect();
            let residues = shifts
                .iter()
                .flat_map(|s| {
                    r.residues
                        .iter()
                        .map(move |x| (x + s).mod_floor(&r.modulus))
                })
                .collect();
            Ok(SetSpec::Residue(ResidueSet {
                modulus: r.modulus.clone(),
                residues,
            }))
        }
        _ => Err(SetError::Unsupported {
            op: "sumset",
            left: a.kind(),
            right: b.kind(),
        }),
    }
}

/// Sum of two star sets, keeping track of an adjoined identity:
/// `(X ∪ {0}) + (Y ∪ {0}) = (X+Y) ∪ X ∪ Y ∪ {0}`.
fn star_sum(x: &StarSet, y: &StarSet, budget: usize) -> Result<StarSet, SetError> {
    if !x.symmetric || !y.symmetric {
        return Err(SetError::Unsupported {
            op: "star_sum",
            left: x.set.kind(),
            right: y.set.kind(),
        });
    }
    let core = match (&x.set, &y.set) {
        (SetSpec::Finite(a), SetSpec::Finite(b)) => SetSpec::Finite(finite_product(a, b, budget)?),
        _ => sumset(&x.set, &y.set)?,
    };
    let mut set = core;
    if y.adjoin_identity {
        set = union(&set, &x.set)?;
    }
    if x.adjoin_identity {
        set = union(&set, &y.set)?;
    }
    let adjoin = x.adjoin_identity && y.adjoin_identity && !set.contains(&set.ambient().identity());
    Ok(StarSet {
        set,
        symmetric: true,
        adjoin_identity: adjoin,
    })
}

/// Union where the result stays in one representation.
pub fn union(a: &SetSpec, b: &SetSpec) -> Result<SetSpec, SetError> {
    match (a, b) {
        (SetSpec::Finite(x), SetSpec::Finite(y)) => {
            let mut elements = x.elements.clone();
            elements.extend(y.elements.iter().cloned());
            Ok(SetSpec::Finite(FiniteSet {
                group: x.group.clone(),
                elements,
            }))
        }
        (SetSpec::Residue(x), SetSpec::Residue(y)) => {
            let l = x.modulus.lcm(&y.modulus);
            let mut lx = x.lift(&l)?;
            lx.residues.extend(y.lift(&l)?.residues);
            Ok(SetSpec::Residue(lx))
        }
        (SetSpec::Interval(x), SetSpec::Interval(y)) => Ok(SetSpec::Interval(SymmetricInterval {
            radius: x.radius.clone().max(y.radius.clone()),
        })),
        (SetSpec::Residue(r), SetSpec::Finite(f)) | (SetSpec::Finite(f), SetSpec::Residue(r))
            if f.elements
                .iter()
                .all(|e| e.as_int().is_some_and(|v| r.contains(v))) =>
        {
            Ok(SetSpec::Residue(r.clone()))
        }
        _ => Err(SetError::Unsupported {
            op: "union",
            left: a.kind(),
            right: b.kind(),
        }),
    }
}

/// `n·S* = S* + … + S*` (`(S*)ⁿ` for finite sets in nonabelian groups).
pub fn n_fold_star(s: &SetSpec, n: usize) -> Result<StarSet, SetError> {
    n_fold_star_with_budget(s, n, DEFAULT_ENUMERATION)
}

pub fn n_fold_star_with_budget(s: &SetSpec, n: usize, budget: usize) -> Result<StarSet, SetError> {
    let base = star(s);
    if n == 0 {
        let group = s.ambient();
        let id = group.identity();
        return Ok(StarSet {
            set: SetSpec::Finite(FiniteSet {
                group,
                elements: [id].into_iter().collect(),
            }),
            symmetric: true,
            adjoin_identity: false,
        });
    }
    if matches!(s, SetSpec::Tail(_)) && !base.set.enumerate().is_some() {
        return Err(SetError::Unsupported {
            op: "n_fold_star",
            left: "tail",
            right: "tail",
        });
    }
    let base = match s {
        SetSpec::Tail(_) => {
            let elements = base.enumerate().expect("finite tail");
            StarSet {
                set: SetSpec::Finite(FiniteSet {
                    group: AmbientGroup::Integers,
                    elements: elements.into_iter().collect(),
                }),
                symmetric: true,
                adjoin_identity: false,
            }
        }
        _ => base,
    };
    let mut acc = base.clone();
    for _ in 1..n {
        acc = star_sum(&acc, &base, budget)?;
    }
    Ok(acc)
}

/// Exact `A ⊆ B` for the representation pairs where it is decidable.
pub fn is_subset(a: &SetSpec, b: &SetSpec) -> Result<bool, SetError> {
    if a.ambient() != b.ambient() {
        return Err(mismatch(a, b));
    }
    if let Some(elems) = a.enumerate() {
        if elems.len() <= DEFAULT_ENUMERATION {
            return Ok(elems.iter().all(|e| b.contains(e)));
        }
    }
    match (a, b) {
        (SetSpec::Residue(x), SetSpec::Residue(y)) => {
            let l = x.modulus.lcm(&y.modulus);
            let lx = x.lift(&l)?;
            Ok(lx.residues.iter().all(|r| y.contains(r)))
        }
        // A nonempty union of classes is infinite.
        (SetSpec::Residue(_), SetSpec::Finite(_)) => Ok(false),
        (SetSpec::Interval(x), SetSpec::Interval(y)) => Ok(x.radius <= y.radius),
        (SetSpec::Box(x), SetSpec::Box(y)) => {
            Ok((1..=x.n).all(|c| x.allowed_at(c).is_subset(&y.allowed_at(c))))
        }
        (SetSpec::Tail(x), SetSpec::Tail(y)) if x.sequence == y.sequence => Ok(x.start >= y.start
            && y.excluded
                .iter()
                .all(|k| *k < x.start || x.excluded.contains(k))),
        _ => Err(SetError::Unsupported {
            op: "is_subset",
            left: a.kind(),
            right: b.kind(),
        }),
    }
}

/// Exact intersection for boxes, residue sets, and finite sets.
pub fn intersect(a: &SetSpec, b: &SetSpec) -> Result<SetSpec, SetError> {
    if a.ambient() != b.ambient() {
        return Err(mismatch(a, b));
    }
    match (a, b) {
        (SetSpec::Finite(f), other) | (other, SetSpec::Finite(f)) => {
            Ok(SetSpec::Finite(FiniteSet {
                group: f.group.clone(),
                elements: f
                    .elements
                    .iter()
                    .filter(|e| other.contains(e))
                    .cloned()
                    .collect(),
            }))
        }
        (SetSpec::Box(x), SetSpec::Box(y)) => {
            let prefix = x.prefix().max(y.prefix());
            let allowed = (1..=prefix)
                .map(|c| {
                    x.allowed_at(c)
                        .intersection(&y.allowed_at(c))
                        .cloned()
                        .collect()
                })
                .collect();
            Ok(SetSpec::Box(BoxSet { n: x.n, allowed }))
        }
        (SetSpec::Residue(x), SetSpec::Residue(y)) => {
            let l = x.modulus.lcm(&y.modulus);
            let lx = x.lift(&l)?;
            let residues = lx.residues.into_iter().filter(|r| y.contains(r)).collect();
            Ok(SetSpec::Residue(ResidueSet {
                modulus: l,
                residues,
            }))
        }
        (SetSpec::Interval(x), SetSpec::Interval(y)) => Ok(SetSpec::Interval(SymmetricInterval {
            radius: x.radius.clone().min(y.radius.clone()),
        })),
        _ => Err(SetError::Unsupported {
            op: "intersect",
            left: a.kind(),
            right: b.kind(),
        }),
    }
}

/// An explicit decomposition `target = s₀ + … + s_{n−1}` with `sᵢ ∈ setsᵢ*`
/// (an ordered product in nonabelian groups).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionWitness {
    pub group: AmbientGroup,
    pub target: GroupElement,
    pub summands: Vec<GroupElement>,
    pub sets: Vec<SetSpec>,
}

impl DecompositionWitness {
    /// Re-verifies membership of each summand and the total using only the
    /// group law and set membership.
    pub fn recheck(&self) -> Result<(), String> {
        if self.summands.len() != self.sets.len() {
            return Err(format!(
                "{} summands for {} sets",
                self.summands.len(),
                self.sets.len()
            ));
        }
        for (i, (s, set)) in self.summands.iter().zip(&self.sets).enumerate() {
            if set.ambient() != self.group {
                return Err(format!("set {i} lives in {}", set.ambient()));
            }
            if !star(set).contains(s) {
                return Err(format!(
                    "summand {i} = {} is not in ({set})*",
                    self.group.display(s)
                ));
            }
        }
        let total = self
            .group
            .product(self.summands.iter())
            .map_err(|e| e.to_string())?;
        if total != self.target {
            return Err(format!(
                "summands total {} instead of {}",
                self.group.display(&total),
                self.group.display(&self.target)
            ));
        }
        Ok(())
    }
}

/// How a "no" answer was established. Every variant is a proof, not a budget
/// statement; budget exhaustion is reported as [`Membership::Unknown`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ExclusionProof {
    /// Exhaustive over exactly represented sets.
    Exact,
    /// Tail summands over-approximated by residues modulo the listed numbers.
    ResidueAbstraction {
        #[serde(with = "serde_util::bigint_vec")]
        divisors: Vec<BigInt>,
    },
    /// Exhaustive search up to a growth-certificate bound on tail terms.
    ExhaustiveCutoff {
        #[serde(with = "serde_util::bigint")]
        max_abs: BigInt,
    },
}

impl ExclusionProof {
    fn rank(&self) -> u8 {
        match self {
            ExclusionProof::Exact => 0,
            ExclusionProof::ExhaustiveCutoff { .. } => 1,
            ExclusionProof::ResidueAbstraction { .. } => 2,
        }
    }

    fn combine(self, other: ExclusionProof) -> ExclusionProof {
        match (self, other) {
            (
                ExclusionProof::ExhaustiveCutoff { max_abs: a },
                ExclusionProof::ExhaustiveCutoff { max_abs: b },
            ) => ExclusionProof::ExhaustiveCutoff { max_abs: a.max(b) },
            (
                ExclusionProof::ResidueAbstraction { divisors: a },
                ExclusionProof::ResidueAbstraction { .. },
            ) => ExclusionProof::ResidueAbstraction { divisors: a },
            (a, b) => {
                if a.rank() >= b.rank() {
                    a
                } else {
                    b
                }
            }
        }
    }
}

/// Three-valued answer of a membership search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum Membership {
    Yes { witness: DecompositionWitness },
    No { proof: ExclusionProof },
    Unknown { reason: String },
}

impl Membership {
    pub fn is_yes(&self) -> bool {
        matches!(self, Membership::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Membership::No { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Membership::Unknown { .. })
    }
}

/// Decides `g ∈ S₀* + ⋯ + S_{n−1}*` (ordered product for nonabelian groups).
///
/// Exact whenever every member is finite, a residue set, a box, or an
/// interval. Tails of infinite sequences are handled by a divisibility
/// over-approximation (sound "no"), a growth-certificate index bound (sound
/// "no" when the ratio exceeds the number of tail summands minus one), and
/// otherwise a budgeted search that can only answer "yes" or "unknown".
/// Every "yes" carries a witness that has been re-checked before returning.
pub fn prefix_sum_membership(
    group: &AmbientGroup,
    g: &GroupElement,
    chain: &[SetSpec],
    budget: &SearchBudget,
) -> Result<Membership, SetError> {
    group.check(g)?;
    for s in chain {
        if &s.ambient() != group {
            return Err(SetError::AmbientMismatch(
                group.to_string(),
                s.ambient().to_string(),
            ));
        }
    }
    let stars: Vec<StarSet> = chain.iter().map(star).collect();
    let answer = solve(group, g, &stars, budget)?;
    let answer = match answer {
        Solved::Yes(summands) => {
            let witness = DecompositionWitness {
                group: group.clone(),
                target: g.clone(),
                summands,
                sets: chain.to_vec(),
            };
            if let Err(e) = witness.recheck() {
                return Ok(Membership::Unknown {
                    reason: format!("internal witness failed recheck: {e}"),
                });
            }
            Membership::Yes { witness }
        }
        Solved::No(proof) => Membership::No { proof },
        Solved::Unknown(reason) => Membership::Unknown { reason },
    };
    Ok(answer)
}

enum Solved<T> {
    Yes(T),
    No(ExclusionProof),
    Unknown(String),
}

fn solve(
    group: &AmbientGroup,
    g: &GroupElement,
    stars: &[StarSet],
    budget: &SearchBudget,
) -> Result<Solved<Vec<GroupElement>>, SetError> {
    let finite: Vec<Option<Vec<GroupElement>>> = stars.iter().map(|s| s.enumerate()).collect();
    if finite.iter().all(|f| f.is_some()) {
        let slots: Vec<Vec<GroupElement>> = finite.into_iter().map(|f| f.unwrap()).collect();
        return Ok(ordered_finite_search(group, g, &slots, budget));
    }
    if !group.is_abelian() {
        return Ok(Solved::Unknown(
            "non-finite member in a nonabelian product".into(),
        ));
    }
    // Abelian from here on: finite members first, structured members after.
    let finite_idx: Vec<usize> = (0..stars.len()).filter(|&i| finite[i].is_some()).collect();
    let structured_idx: Vec<usize> = (0..stars.len()).filter(|&i| finite[i].is_none()).collect();
    let finite_slots: Vec<Vec<GroupElement>> = finite_idx
        .iter()
        .map(|&i| finite[i].clone().unwrap())
        .collect();
    let Some(partials) = finite_sums(group, &finite_slots, budget) else {
        return Ok(Solved::Unknown(format!(
            "finite part exceeds {} states",
            budget.max_states
        )));
    };
    let structured: Vec<&StarSet> = structured_idx.iter().map(|&i| &stars[i]).collect();
    let mut proof: Option<ExclusionProof> = None;
    let mut unknown: Option<String> = None;
    for (f, choice) in &partials {
        let rest = group.op_unchecked(g, &group.neg_unchecked(f));
        match solve_structured(group, &rest, &structured, budget)? {
            Solved::Yes(values) => {
                let mut summands = vec![group.identity(); stars.len()];
                for (slot, v) in finite_idx.iter().zip(choice) {
                    summands[*slot] = v.clone();
                }
                for (slot, v) in structured_idx.iter().zip(values) {
                    summands[*slot] = v;
                }
                return Ok(Solved::Yes(summands));
            }
            Solved::No(p) => proof = Some(proof.map_or(p.clone(), |q| q.combine(p))),
            Solved::Unknown(r) => unknown = unknown.or(Some(r)),
        }
    }
    Ok(match unknown {
        Some(r) => Solved::Unknown(r),
        None => Solved::No(proof.unwrap_or(ExclusionProof::Exact)),
    })
}

/// Layered search over ordered products of finite sets, keeping one
/// back-pointer per reachable element.
fn ordered_finite_search(
    group: &AmbientGroup,
    g: &GroupElement,
    slots: &[Vec<GroupElement>],
    budget: &SearchBudget,
) -> Solved<Vec<GroupElement>> {
    let mut layers: Vec<BTreeMap<GroupElement, (GroupElement, GroupElement)>> =
        Vec::with_capacity(slots.len());
    let mut frontier: BTreeSet<GroupElement> = [group.identity()].into_iter().collect();
    for slot in slots {
        let mut next: BTreeMap<GroupElement, (GroupElement, GroupElement)> = BTreeMap::new();
        for p in &frontier {
            for s in slot {
                let q = group.op_unchecked(p, s);
                next.entry(q).or_insert_with(|| (p.clone(), s.clone()));
            }
            if next.len() > budget.max_states {
                return Solved::Unknown(format!(
                    "product enumeration exceeds {} states",
                    budget.max_states
                ));
            }
        }
        frontier = next.keys().cloned().collect();
        layers.push(next);
    }
    if !frontier.contains(g) {
        return Solved::No(ExclusionProof::Exact);
    }
    let mut summands = Vec::with_capacity(slots.len());
    let mut cur = g.clone();
    for layer in layers.iter().rev() {
        let (prev, s) = layer[&cur].clone();
        summands.push(s);
        cur = prev;
    }
    summands.reverse();
    Solved::Yes(summands)
}

/// All sums of one element from each finite slot, each with one choice vector.
fn finite_sums(
    group: &AmbientGroup,
    slots: &[Vec<GroupElement>],
    budget: &SearchBudget,
) -> Option<BTreeMap<GroupElement, Vec<GroupElement>>> {
    let mut acc: BTreeMap<GroupElement, Vec<GroupElement>> =
        [(group.identity(), Vec::new())].into_iter().collect();
    for slot in slots {
        let mut next = BTreeMap::new();
        for (p, choice) in &acc {
            for s in slot {
                next.entry(group.op_unchecked(p, s)).or_insert_with(|| {
                    let mut c = choice.clone();
                    c.push(s.clone());
                    c
                });
            }
            if next.len() > budget.max_states {
                return None;
            }
        }
        acc = next;
    }
    Some(acc)
}

fn solve_structured(
    group: &AmbientGroup,
    target: &GroupElement,
    slots: &[&StarSet],
    budget: &SearchBudget,
) -> Result<Solved<Vec<GroupElement>>, SetError> {
    if slots.is_empty() {
        return Ok(if group.is_identity(target) {
            Solved::Yes(Vec::new())
        } else {
            Solved::No(ExclusionProof::Exact)
        });
    }
    match (group, target) {
        (AmbientGroup::Integers, GroupElement::Int(t)) => Ok(solve_integers(t, slots, budget)),
        (AmbientGroup::Rationals, GroupElement::Rational(t)) => {
            let mut radii = Vec::new();
            for s in slots {
                match &s.set {
                    SetSpec::Interval(i) => radii.push(i.radius.clone()),
                    other => {
                        return Err(SetError::Unsupported {
                            op: "prefix_sum",
                            left: "interval",
                            right: other.kind(),
                        })
                    }
                }
            }
            let total: BigRational = radii.iter().cloned().sum();
            if t.abs() < total {
                // Split proportionally: |t·εᵢ/E| < εᵢ.
                let parts = radii
                    .iter()
                    .map(|r| GroupElement::Rational(t * r / &total))
                    .collect();
                Ok(Solved::Yes(parts))
            } else {
                Ok(Solved::No(ExclusionProof::Exact))
            }
        }
        (AmbientGroup::ProductMod { n }, GroupElement::Residues(t)) => {
            let mut boxes = Vec::new();
            for s in slots {
                match &s.set {
                    SetSpec::Box(b) => boxes.push(b),
                    other => {
                        return Err(SetError::Unsupported {
                            op: "prefix_sum",
                            left: "box",
                            right: other.kind(),
                        })
                    }
                }
            }
            Ok(solve_boxes(*n, t, &boxes))
        }
        _ => Err(SetError::Unsupported {
            op: "prefix_sum",
            left: "structured",
            right: "mixed",
        }),
    }
}

fn solve_boxes(n: usize, target: &[u64], boxes: &[&BoxSet]) -> Solved<Vec<GroupElement>> {
    let mut summands = vec![vec![0u64; n]; boxes.len()];
    for c in 1..=n {
        let m = c as u64;
        // reach[v] = back-pointer (previous residue, chosen value) per layer.
        let mut layers: Vec<BTreeMap<u64, (u64, u64)>> = Vec::new();
        let mut frontier: BTreeSet<u64> = [0].into_iter().collect();
        for b in boxes {
            let allowed = b.allowed_at(c);
            let mut next = BTreeMap::new();
            for &p in &frontier {
                for &a in &allowed {
                    next.entry((p + a) % m).or_insert((p, a));
                }
            }
            frontier = next.keys().copied().collect();
            layers.push(next);
        }
        let want = target[c - 1] % m;
        if !frontier.contains(&want) {
            return Solved::No(ExclusionProof::Exact);
        }
        let mut cur = want;
        for (i, layer) in layers.iter().enumerate().rev() {
            let (prev, a) = layer[&cur];
            summands[i][c - 1] = a;
            cur = prev;
        }
    }
    Solved::Yes(summands.into_iter().map(GroupElement::Residues).collect())
}

/// One residue-class summand: classes `classes` modulo `modulus`, plus the
/// bare integer 0 when `zero_alone` is set.
#[derive(Clone, Debug)]
struct ClassSlot {
    modulus: BigInt,
    classes: Vec<BigInt>,
    zero_alone: bool,
}

/// Decides `t ∈ Σ slots` exactly. States are `(d, v)`: `d` the gcd of the
/// moduli used so far (0 while none is used) and `v` the partial sum mod `d`.
/// Returns one integer summand per slot.
fn class_search(
    t: &BigInt,
    slots: &[ClassSlot],
    budget: &SearchBudget,
) -> Option<Option<Vec<BigInt>>> {
    type Key = (BigInt, BigInt);
    let mut layers: Vec<BTreeMap<Key, (Key, Option<BigInt>)>> = Vec::new();
    let mut frontier: BTreeSet<Key> = [(BigInt::zero(), BigInt::zero())].into_iter().collect();
    for slot in slots {
        let mut next: BTreeMap<Key, (Key, Option<BigInt>)> = BTreeMap::new();
        for key in &frontier {
            let (d, v) = key;
            if slot.zero_alone {
                next.entry(key.clone()).or_insert((key.clone(), None));
            }
            let nd = d.gcd(&slot.modulus);
            for r in &slot.classes {
                let nv = (v + r).mod_floor(&nd);
                next.entry((nd.clone(), nv))
                    .or_insert((key.clone(), Some(r.clone())));
            }
        }
        if next.len() > budget.max_states {
            return None;
        }
        frontier = next.keys().cloned().collect();
        layers.push(next);
    }
    let accept = frontier.iter().find(|(d, v)| {
        if d.is_zero() {
            v == t
        } else {
            (t - v).mod_floor(d).is_zero()
        }
    });
    let Some(end) = accept.cloned() else {
        return Some(None);
    };
    let mut choices: Vec<Option<BigInt>> = Vec::with_capacity(slots.len());
    let mut cur = end;
    for layer in layers.iter().rev() {
        let (prev, choice) = layer[&cur].clone();
        choices.push(choice);
        cur = prev;
    }
    choices.reverse();
    // Lift the chosen classes to integers: sᵢ = rᵢ + yᵢ·Mᵢ with Σ yᵢ·Mᵢ = t − Σ rᵢ.
    let used: Vec<usize> = (0..slots.len()).filter(|&i| choices[i].is_some()).collect();
    let base: BigInt = choices.iter().flatten().sum();
    let gap = t - &base;
    let mut values: Vec<BigInt> = choices
        .iter()
        .map(|c| c.clone().unwrap_or_else(BigInt::zero))
        .collect();
    if used.is_empty() {
        debug_assert!(gap.is_zero());
        return Some(Some(values));
    }
    let moduli: Vec<BigInt> = used.iter().map(|&i| slots[i].modulus.clone()).collect();
    let (d, coeffs) = bezout(&moduli);
    let scale = &gap / &d;
    for (k, &i) in used.iter().enumerate() {
        values[i] += &coeffs[k] * &scale * &moduli[k];
    }
    Some(Some(values))
}

/// Returns `(d, c)` with `d = gcd(m)` and `Σ cᵢ·mᵢ = d`.
fn bezout(m: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut d = m[0].clone();
    let mut coeffs = vec![BigInt::one()];
    for mi in &m[1..] {
        let e = d.extended_gcd(mi);
        for c in coeffs.iter_mut() {
            *c *= &e.x;
        }
        coeffs.push(e.y);
        d = e.gcd;
    }
    if d.is_negative() {
        d = -d;
        for c in coeffs.iter_mut() {
            *c = -c.clone();
        }
    }
    (d, coeffs)
}

fn residue_slot(s: &StarSet) -> Option<ClassSlot> {
    match &s.set {
        SetSpec::Residue(r) => Some(ClassSlot {
            modulus: r.modulus.clone(),
            classes: r.residues.iter().cloned().collect(),
            zero_alone: s.adjoin_identity,
        }),
        _ => None,
    }
}

fn solve_integers(
    t: &BigInt,
    slots: &[&StarSet],
    budget: &SearchBudget,
) -> Solved<Vec<GroupElement>> {
    let mut residue_pos = Vec::new();
    let mut residue_slots = Vec::new();
    let mut tail_pos = Vec::new();
    let mut tails: Vec<&TailSet> = Vec::new();
    for (i, s) in slots.iter().enumerate() {
        if let Some(c) = residue_slot(s) {
            residue_pos.push(i);
            residue_slots.push(c);
        } else if let SetSpec::Tail(tail) = &s.set {
            tail_pos.push(i);
            tails.push(tail);
        } else {
            return Solved::Unknown(format!("{} member in an integer chain", s.set.kind()));
        }
    }
    let assemble = |res: Vec<BigInt>, tl: Vec<BigInt>| {
        let mut out = vec![GroupElement::int(0); slots.len()];
        for (p, v) in residue_pos.iter().zip(res) {
            out[*p] = GroupElement::Int(v);
        }
        for (p, v) in tail_pos.iter().zip(tl) {
            out[*p] = GroupElement::Int(v);
        }
        out
    };
    if tails.is_empty() {
        return match class_search(t, &residue_slots, budget) {
            None => Solved::Unknown(format!(
                "residue search exceeds {} states",
                budget.max_states
            )),
            Some(None) => Solved::No(ExclusionProof::Exact),
            Some(Some(v)) => Solved::Yes(assemble(v, Vec::new())),
        };
    }

    // Over-approximate each tail by the multiples of its divisor.
    let divisors: Vec<BigInt> = tails.iter().map(|t| t.divisor()).collect();
    let mut abstracted = residue_slots.clone();
    for d in &divisors {
        if d.is_zero() {
            // Empty tail: its star set is {0}.
            abstracted.push(ClassSlot {
                modulus: BigInt::one(),
                classes: Vec::new(),
                zero_alone: true,
            });
        } else {
            abstracted.push(ClassSlot {
                modulus: d.clone(),
                classes: vec![BigInt::zero()],
                zero_alone: false,
            });
        }
    }
    if let Some(None) = class_search(t, &abstracted, budget) {
        return Solved::No(ExclusionProof::ResidueAbstraction { divisors });
    }
    if let Some(m) = refined_abstraction(t, &residue_slots, &tails, budget) {
        return Solved::No(ExclusionProof::ResidueAbstraction { divisors: vec![m] });
    }

    let cutoff = if residue_slots.is_empty() {
        growth_cutoff(t, &tails)
    } else {
        None
    };
    let (last_index, bound) = match &cutoff {
        Some((k, b)) => (*k, Some(b.clone())),
        None => (budget.max_tail_index, None),
    };
    // Deepen the largest admitted tail index so small decompositions are found cheaply.
    let first = tails
        .iter()
        .map(|x| x.start)
        .min()
        .unwrap_or(0)
        .min(last_index);
    let mut searched = None;
    for last in first..=last_index {
        match tail_round(t, &tails, &residue_slots, last, bound.as_ref(), budget) {
            Ok(Some((res, tl))) => return Solved::Yes(assemble(res, tl)),
            Ok(None) => searched = Some(last),
            Err(reason) => {
                let done = searched.map_or("none".to_string(), |l| format!("≤ {l}"));
                return Solved::Unknown(format!("{reason}; tail indices {done} exhausted"));
            }
        }
    }
    match cutoff {
        Some((_, max_abs)) => Solved::No(ExclusionProof::ExhaustiveCutoff { max_abs }),
        None => Solved::Unknown(format!("no decomposition with tail indices ≤ {last_index}")),
    }
}

type TailHit = (Vec<BigInt>, Vec<BigInt>);

/// One deepening round: tail summands are `0` or `±x_k` with `k ≤ last`.
fn tail_round(
    t: &BigInt,
    tails: &[&TailSet],
    residue_slots: &[ClassSlot],
    last: usize,
    bound: Option<&BigInt>,
    budget: &SearchBudget,
) -> Result<Option<TailHit>, String> {
    let mut layers: Vec<BTreeMap<BigInt, (BigInt, BigInt)>> = Vec::new();
    let mut frontier: BTreeSet<BigInt> = [BigInt::zero()].into_iter().collect();
    for tail in tails {
        let mut options = vec![BigInt::zero()];
        for v in tail.values_up_to_index(last) {
            options.push(-&v);
            options.push(v);
        }
        let mut next = BTreeMap::new();
        for p in &frontier {
            for o in &options {
                let q = p + o;
                if let Some(b) = bound {
                    // Partial sums of a reduced decomposition stay within n·X.
                    if q.abs() > b * BigInt::from(tails.len() as u64) + t.abs() {
                        continue;
                    }
                }
                next.entry(q).or_insert((p.clone(), o.clone()));
            }
            if next.len() > budget.max_states {
                return Err(format!(
                    "tail enumeration exceeds {} states",
                    budget.max_states
                ));
            }
        }
        frontier = next.keys().cloned().collect();
        layers.push(next);
    }
    let unwind = |end: &BigInt| {
        let mut values = Vec::with_capacity(tails.len());
        let mut cur = end.clone();
        for layer in layers.iter().rev() {
            let (prev, o) = layer[&cur].clone();
            values.push(o);
            cur = prev;
        }
        values.reverse();
        values
    };
    if residue_slots.is_empty() {
        return Ok(frontier.contains(t).then(|| (Vec::new(), unwind(t))));
    }
    let mut sums: Vec<&BigInt> = frontier.iter().collect();
    sums.sort_by_key(|s| s.abs());
    for s in sums {
        match class_search(&(t - s), residue_slots, budget) {
            Some(Some(v)) => return Ok(Some((v, unwind(s)))),
            Some(None) => {}
            None => {
                return Err(format!(
                    "residue search exceeds {} states",
                    budget.max_states
                ))
            }
        }
    }
    Ok(None)
}

/// Tries cut indices `T`: with `M` dividing every tail term of index `≥ T`,
/// each tail star lies in `{0} ∪ {±x_j mod M : start ≤ j < T}` modulo `M`.
/// Returns the first `M` for which `t` misses the abstracted sum.
fn refined_abstraction(
    t: &BigInt,
    residue_slots: &[ClassSlot],
    tails: &[&TailSet],
    budget: &SearchBudget,
) -> Option<BigInt> {
    // Each class layer holds up to M states per divisor; keep M well inside the budget.
    let limit = BigInt::from(budget.max_states / 32);
    let last_start = tails.iter().map(|x| x.start).max()?;
    for cut in 1..=(last_start + 6).min(budget.max_tail_index) {
        let m = tails.iter().fold(BigInt::zero(), |acc, x| {
            acc.gcd(&x.sequence.tail_divisor(cut))
        });
        if m <= BigInt::one() {
            continue;
        }
        if m > limit {
            break;
        }
        let mut slots = residue_slots.to_vec();
        for x in tails {
            let mut classes: BTreeSet<BigInt> = [BigInt::zero()].into_iter().collect();
            for j in x.start..cut {
                if x.excluded.contains(&j) {
                    continue;
                }
                let Some(v) = x.sequence.value(j) else { break };
                classes.insert(v.mod_floor(&m));
                classes.insert((-v).mod_floor(&m));
            }
            slots.push(ClassSlot {
                modulus: m.clone(),
                classes: classes.into_iter().collect(),
                zero_alone: false,
            });
        }
        if let Some(None) = class_search(t, &slots, budget) {
            return Some(m);
        }
    }
    None
}

/// Sound index bound for decomposing `t` into `n` tail terms of one sequence.
///
/// Cancelling pairs `±x_k` can be replaced by zeros, so some decomposition
/// (if any exists) has a top term `x_K` of one sign. If the sequence grows by
/// a ratio `r ≥ 2` from index `c` on and `K > c`, every other term has
/// absolute value at most `|x_K|/r`, so `|t| ≥ |x_K|·(1 − (n−1)/r)`. With
/// `r > n − 1` this bounds `|x_K| ≤ r|t|/(r − n + 1)`; for `K ≤ c` the bound
/// is `|x_c|`. Returns the last index to enumerate and the value bound.
fn growth_cutoff(t: &BigInt, tails: &[&TailSet]) -> Option<(usize, BigInt)> {
    let seq = &tails[0].sequence;
    if tails.iter().any(|x| &x.sequence != seq) {
        return None;
    }
    let n = tails.len() as u64;
    let (c, r) = (0..64usize).find_map(|c| match seq.growth_ratio(c) {
        Some(r) if r >= 2 && r > n - 1 => Some((c, r)),
        _ => None,
    })?;
    let xc = seq.value(c).map(|v| v.abs()).unwrap_or_else(BigInt::zero);
    let ratio_bound = BigInt::from(r) * t.abs() / BigInt::from(r - (n - 1));
    let max_abs = xc.max(ratio_bound);
    let last = seq
        .terms_up_to_abs(&max_abs)
        .last()
        .map(|(k, _)| *k)
        .unwrap_or(0);
    Some((last, max_abs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> GroupElement {
        GroupElement::int(v)
    }

    fn residues(s: &SetSpec) -> Vec<i64> {
        match s {
            SetSpec::Residue(r) => r.residues.iter().map(|x| x.try_into().unwrap()).collect(),
            _ => panic!("not a residue set"),
        }
    }

    #[test]
    fn star_of_residue_set() {
        let s = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        let st = star(&s);
        assert_eq!(st.set, s);
        assert!(!st.adjoin_identity);
        // Without the zero class only the single integer 0 is added.
        let odd = star(&SetSpec::residue(3, &[1]).unwrap());
        assert_eq!(residues(&odd.set), vec![1, 2]);
        assert!(odd.contains(&int(0)));
        assert!(!odd.contains(&int(3)));
        assert!(odd.contains(&int(-1)));
    }

    #[test]
    fn star_of_finite_and_interval() {
        let st = star(&SetSpec::finite_ints([2]));
        assert_eq!(st.set, SetSpec::finite_ints([-2, 0, 2]));
        let i = SetSpec::interval(1, 1).unwrap();
        assert_eq!(star(&i).set, i);
        let empty = star(&SetSpec::Finite(FiniteSet::integers([])));
        assert_eq!(empty.enumerate().unwrap(), vec![int(0)]);
    }

    #[test]
    fn tail_star_membership() {
        let p3 = Sequence::powers(3).unwrap();
        let st = star(&SetSpec::tail(p3, 2));
        assert!(st.contains(&int(-27)));
        assert!(st.contains(&int(9)));
        assert!(st.contains(&int(0)));
        assert!(!st.contains(&int(3)));
        assert!(!st.contains(&int(10)));
    }

    #[test]
    fn residue_sumsets() {
        let a = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        assert_eq!(residues(&sumset(&a, &a).unwrap()), vec![0, 1, 4, 5, 8]);
        let b = SetSpec::residue(9, &[4]).unwrap();
        let c = SetSpec::residue(27, &[13]).unwrap();
        let s = sumset(&b, &c).unwrap();
        assert_eq!(s, SetSpec::residue(9, &[8]).unwrap());
        let shifted = sumset(
            &SetSpec::finite_ints([1, 2]),
            &SetSpec::residue(9, &[0]).unwrap(),
        )
        .unwrap();
        assert_eq!(residues(&shifted), vec![1, 2]);
    }

    #[test]
    fn interval_sumset() {
        let s = sumset(
            &SetSpec::interval(1, 1).unwrap(),
            &SetSpec::interval(1, 4).unwrap(),
        )
        .unwrap();
        assert_eq!(s, SetSpec::interval(5, 4).unwrap());
        assert!(!s.contains(&GroupElement::rational(5, 4)));
        assert!(s.contains(&GroupElement::rational(6, 5)));
    }

    #[test]
    fn unsupported_pairs() {
        let t = SetSpec::tail(Sequence::powers(3).unwrap(), 0);
        assert!(matches!(sumset(&t, &t), Err(SetError::Unsupported { .. })));
        assert!(matches!(
            sumset(
                &SetSpec::finite_ints([1]),
                &SetSpec::interval(1, 1).unwrap()
            ),
            Err(SetError::AmbientMismatch(..))
        ));
        assert!(n_fold_star(&t, 2).is_err());
    }

    #[test]
    fn n_fold_examples() {
        let a = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        assert_eq!(n_fold_star(&a, 1).unwrap(), star(&a));
        assert_eq!(
            residues(&n_fold_star(&a, 2).unwrap().set),
            vec![0, 1, 4, 5, 8]
        );
        let one = SetSpec::finite_ints([1]);
        assert_eq!(
            n_fold_star(&one, 3).unwrap().set,
            SetSpec::finite_ints(-3..=3)
        );
        // Residue set without the zero class: 2·({1,2} mod 3 ∪ {0}) = ℤ ∖ … ∪ {0}.
        let odd = SetSpec::residue(3, &[1]).unwrap();
        let two = n_fold_star(&odd, 2).unwrap();
        assert!(two.contains(&int(3)));
        assert!(two.contains(&int(1)));
    }

    #[test]
    fn box_validation_and_sum() {
        let coord = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
        assert!(BoxSet::new(3, vec![coord(&[0]), coord(&[1])]).is_err());
        assert!(BoxSet::new(
            4,
            vec![
                coord(&[0]),
                coord(&[0, 1]),
                coord(&[0, 1, 2]),
                coord(&[0, 1])
            ]
        )
        .is_err());
        let a = BoxSet::new(
            4,
            vec![
                coord(&[0]),
                coord(&[0, 1]),
                coord(&[0, 1, 2]),
                coord(&[0, 1, 3]),
            ],
        )
        .unwrap();
        let b = BoxSet::new(4, vec![coord(&[0]), coord(&[0, 1])]).unwrap();
        let s = box_sum(&a, &b);
        assert_eq!(s.prefix(), 2);
        let aa = box_sum(&a, &a);
        assert_eq!(aa.allowed_at(4), coord(&[0, 1, 2, 3]));
    }

    #[test]
    fn subset_checks() {
        let s2 = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        let s3 = SetSpec::residue(27, &[0, 13, 14]).unwrap();
        assert!(is_subset(&s3, &s2).unwrap());
        assert!(!is_subset(&s2, &s3).unwrap());
        assert!(is_subset(&SetSpec::finite_ints([9, 13]), &s2).unwrap());
        assert!(!is_subset(&s2, &SetSpec::finite_ints([0])).unwrap());
        let p3 = Sequence::powers(3).unwrap();
        let mut a = TailSet::new(p3.clone(), 0);
        a.excluded.insert(1);
        a.excluded.insert(2);
        let mut b = TailSet::new(p3, 0);
        b.excluded.insert(1);
        assert!(is_subset(&SetSpec::Tail(a.clone()), &SetSpec::Tail(b.clone())).unwrap());
        assert!(!is_subset(&SetSpec::Tail(b), &SetSpec::Tail(a)).unwrap());
    }

    #[test]
    fn prefix_sum_examples() {
        let z = AmbientGroup::Integers;
        let b = SearchBudget::default();
        let s2 = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        match prefix_sum_membership(&z, &int(0), &[s2.clone(), s2.clone()], &b).unwrap() {
            Membership::Yes { witness } => assert!(witness.summands.iter().all(|s| s == &int(0))),
            other => panic!("{other:?}"),
        }
        assert!(prefix_sum_membership(&z, &int(0), &[], &b)
            .unwrap()
            .is_yes());
        assert!(prefix_sum_membership(&z, &int(1), &[], &b).unwrap().is_no());
        let two = prefix_sum_membership(&z, &int(1), &[s2.clone(), s2.clone()], &b).unwrap();
        assert!(two.is_yes(), "{two:?}");
        let one = prefix_sum_membership(&z, &int(1), &[s2], &b).unwrap();
        assert_eq!(
            one,
            Membership::No {
                proof: ExclusionProof::Exact
            }
        );
    }

    #[test]
    fn prefix_sum_on_tails() {
        let z = AmbientGroup::Integers;
        let b = SearchBudget::default();
        let p3 = Sequence::powers(3).unwrap();
        let t1 = SetSpec::tail(p3.clone(), 1);
        let t0 = SetSpec::tail(p3.clone(), 0);
        // Tail from 1 is inside 3ℤ.
        let no =
            prefix_sum_membership(&z, &int(1), &[t1.clone(), t1.clone(), t1.clone()], &b).unwrap();
        assert!(matches!(
            no,
            Membership::No {
                proof: ExclusionProof::ResidueAbstraction { .. }
            }
        ));
        // 5 ∉ X* + X* for X = {3^k}: 5 ≡ 5 mod 27 is not a sum of two of 0, ±1, ±3, ±9.
        let five = prefix_sum_membership(&z, &int(5), &[t0.clone(), t0.clone()], &b).unwrap();
        assert!(
            matches!(
                five,
                Membership::No {
                    proof: ExclusionProof::ResidueAbstraction { .. }
                }
            ),
            "{five:?}"
        );
        // Coprime terms defeat the residue abstraction; a finite list is searched exactly.
        let vals = [1, 3, 10, 31, 97, 301].map(BigInt::from).to_vec();
        let coprime = SetSpec::tail(
            Sequence::explicit("coprime".into(), vals, Some(0)).unwrap(),
            0,
        );
        let no5 = prefix_sum_membership(&z, &int(5), &[coprime.clone(), coprime], &b).unwrap();
        assert!(
            matches!(
                no5,
                Membership::No {
                    proof: ExclusionProof::Exact
                }
            ),
            "{no5:?}"
        );
        // 4 = 1 + 3 must still be found.
        assert!(
            prefix_sum_membership(&z, &int(4), &[t0.clone(), t0.clone()], &b)
                .unwrap()
                .is_yes()
        );
        let eight = prefix_sum_membership(&z, &int(8), &[t0.clone(), t0.clone()], &b).unwrap();
        assert!(eight.is_yes());
        // Fibonacci tails carry no certificate: misses stay unknown.
        let fib = SetSpec::tail(Sequence::Fibonacci, 0);
        let u = prefix_sum_membership(&z, &int(1000003), std::slice::from_ref(&fib), &b).unwrap();
        assert!(u.is_unknown() || u.is_yes(), "{u:?}");
    }

    #[test]
    fn refined_tail_abstraction() {
        let p3 = Sequence::powers(3).unwrap();
        let chain: Vec<SetSpec> = [0, 2, 2, 3]
            .iter()
            .map(|&k| SetSpec::tail(p3.clone(), k))
            .collect();
        let m = prefix_sum_membership(
            &AmbientGroup::Integers,
            &GroupElement::int(2),
            &chain,
            &SearchBudget::default(),
        )
        .unwrap();
        assert!(
            matches!(
                m,
                Membership::No {
                    proof: ExclusionProof::ResidueAbstraction { .. }
                }
            ),
            "{m:?}"
        );
        let m = prefix_sum_membership(
            &AmbientGroup::Integers,
            &GroupElement::int(10),
            &chain,
            &SearchBudget::default(),
        )
        .unwrap();
        assert!(m.is_yes(), "{m:?}");
    }

    #[test]
    fn prefix_sum_mixed_residue_and_tail() {
        let z = AmbientGroup::Integers;
        let b = SearchBudget::default();
        let r = SetSpec::residue(9, &[0]).unwrap();
        let t = SetSpec::tail(Sequence::powers(2).unwrap(), 0);
        // 5 = 9·1 + (−4): needs the tail term −4.
        let m = prefix_sum_membership(&z, &int(5), &[r, t], &b).unwrap();
        assert!(m.is_yes(), "{m:?}");
    }

    #[test]
    fn prefix_sum_rationals_and_boxes() {
        let q = AmbientGroup::Rationals;
        let b = SearchBudget::default();
        let s0 = SetSpec::interval(1, 1).unwrap();
        let s1 = SetSpec::interval(1, 4).unwrap();
        let one = GroupElement::rational(1, 1);
        assert!(
            prefix_sum_membership(&q, &one, std::slice::from_ref(&s0), &b)
                .unwrap()
                .is_no()
        );
        assert!(prefix_sum_membership(&q, &one, &[s0, s1], &b)
            .unwrap()
            .is_yes());
        let pm = AmbientGroup::product_mod(4).unwrap();
        let coord = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
        let bx = SetSpec::Box(
            BoxSet::new(
                4,
                vec![
                    coord(&[0]),
                    coord(&[0, 1]),
                    coord(&[0, 1, 2]),
                    coord(&[0, 1, 3]),
                ],
            )
            .unwrap(),
        );
        let g = GroupElement::Residues(vec![0, 0, 0, 2]);
        assert!(
            prefix_sum_membership(&pm, &g, std::slice::from_ref(&bx), &b)
                .unwrap()
                .is_no()
        );
        assert!(prefix_sum_membership(&pm, &g, &[bx.clone(), bx], &b)
            .unwrap()
            .is_yes());
    }

    #[test]
    fn bezout_identity() {
        let m = [BigInt::from(9), BigInt::from(27), BigInt::from(6)];
        let (d, c) = bezout(&m);
        assert_eq!(d, BigInt::from(3));
        let s: BigInt = c.iter().zip(&m).map(|(a, b)| a * b).sum();
        assert_eq!(s, d);
    }

    #[test]
    fn json_round_trip() {
        let docs = [
            r#"{"kind":"residue","modulus":9,"residues":[0,4,5]}"#,
            r#"{"kind":"interval","epsilon":"1/4"}"#,
            r#"{"kind":"tail","sequence":"powers3","start":2}"#,
            r#"{"kind":"box","n":3,"allowed":[[0],[0,1]]}"#,
            r#"{"kind":"finite","group":{"kind":"integers"},"elements":[{"int":-2},{"int":0}]}"#,
        ];
        for d in docs {
            let s: SetSpec = serde_json::from_str(d).unwrap();
            assert_eq!(serde_json::to_string(&s).unwrap(), d);
        }
        assert!(serde_json::from_str::<SetSpec>(
            r#"{"kind":"residue","modulus":9,"residues":[9]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<SetSpec>(r#"{"kind":"interval","epsilon":"0"}"#).is_err());
    }
}
