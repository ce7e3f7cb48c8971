//! Neighborhood products over a dense index order, conjugation closure, and
//! the Fibonacci automorphism of the free group on `x, y`.
//!
//! The dense order is realized as the dyadic rationals `m/2^i` in `(0, 1)`.
//! An assignment gives every index of lowest-terms level `i` the same set
//! `T_i`, and only levels `1..=K` are materialized.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::groups::{AmbientGroup, GroupElement, GroupError, Letter, Word};
use crate::report::{claim_id, Claim, Status, VerificationReport};
use crate::setspec::{
    is_subset, n_fold_star_with_budget, star, SearchBudget, SetError, SetSpec, StarSet,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NonabError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("{0}/2^{1} is not a dyadic index in (0, 1)")]
    BadIndex(u64, u32),
    #[error("assignment is missing level {0}")]
    MissingLevel(u32),
    #[error("assignment has no levels")]
    EmptyAssignment,
    #[error("sets must be finite to enumerate products, got {0}")]
    NotFinite(&'static str),
    #[error("sets live in different groups")]
    MixedGroups,
    #[error("tower fails at level {level}: {reason}")]
    Tower { level: usize, reason: String },
    #[error("reduction level j = {j} outside 1..={max}")]
    BadLevel { j: u32, max: u32 },
    #[error("embedding images overlap: σ must map entirely below τ")]
    Overlap,
    #[error("embedding offset {offset} is not below 2^{shift}")]
    BadEmbedding { shift: u32, offset: u64 },
    #[error("embedding shift {shift} leaves no levels of a depth-{k} assignment")]
    ShiftTooLarge { shift: u32, k: u32 },
    #[error("conjugator list must be nonempty and contain the identity")]
    MissingIdentity,
    #[error("probe must not be the identity")]
    IdentityProbe,
    #[error("word uses generator {0}, only x and y are allowed")]
    ForeignGenerator(usize),
    #[error("product enumeration exceeds {0} states")]
    Budget(usize),
}

/// `m/2^level` in lowest terms, `0 < m < 2^level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u64, u32)", into = "(u64, u32)")]
pub struct DyadicIndex {
    m: u64,
    level: u32,
}

impl TryFrom<(u64, u32)> for DyadicIndex {
    type Error = NonabError;
    fn try_from((m, level): (u64, u32)) -> Result<Self, NonabError> {
        DyadicIndex::new(m, level)
    }
}

impl From<DyadicIndex> for (u64, u32) {
    fn from(q: DyadicIndex) -> Self {
        (q.m, q.level)
    }
}

impl DyadicIndex {
    /// Reduces `m/2^level` to lowest terms.
    pub fn new(m: u64, level: u32) -> Result<Self, NonabError> {
        if level == 0 || level > 62 || m == 0 || m >= 1 << level {
            return Err(NonabError::BadIndex(m, level));
        }
        let tz = m.trailing_zeros().min(level);
        Ok(DyadicIndex {
            m: m >> tz,
            level: level - tz,
        })
    }

    pub fn half() -> Self {
        DyadicIndex { m: 1, level: 1 }
    }

    pub fn numerator(self) -> u64 {
        self.m
    }

    pub fn level(self) -> u32 {
        self.level
    }

    /// All indices with level at most `k`, in increasing order.
    pub fn all_up_to(k: u32) -> Vec<DyadicIndex> {
        (1..1u64 << k)
            .map(|m| DyadicIndex::new(m, k).expect("in range"))
            .collect()
    }

    /// The order-reversing map `q ↦ 1 − q`; it preserves levels.
    pub fn reflect(self) -> Self {
        DyadicIndex {
            m: (1 << self.level) - self.m,
            level: self.level,
        }
    }
}

impl Ord for DyadicIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.level.max(other.level);
        (self.m << (l - self.level)).cmp(&(other.m << (l - other.level)))
    }
}

impl PartialOrd for DyadicIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m, 1u64 << self.level)
    }
}

/// The order embedding `q ↦ (q + offset)/2^shift`, whose image is the
/// interval `(offset/2^shift, (offset+1)/2^shift)`. It raises levels by `shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub shift: u32,
    pub offset: u64,
}

impl Embedding {
    pub fn new(shift: u32, offset: u64) -> Result<Self, NonabError> {
        if shift == 0 || shift > 30 || offset >= 1 << shift {
            return Err(NonabError::BadEmbedding { shift, offset });
        }
        Ok(Embedding { shift, offset })
    }

    pub fn apply(self, q: DyadicIndex) -> DyadicIndex {
        DyadicIndex::new(q.m + (self.offset << q.level), q.level + self.shift)
            .expect("image stays in (0, 1)")
    }

    /// True when every image point of `self` is below every image point of `other`.
    pub fn entirely_below(self, other: Embedding) -> bool {
        let l = self.shift.max(other.shift);
        ((self.offset + 1) << (l - self.shift)) <= other.offset << (l - other.shift)
    }
}

/// Level `i ↦ T_i` for `i = 1..=K`; index `q` of level `i` gets `T_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentDoc", into = "AssignmentDoc")]
pub struct DyadicAssignment {
    group: AmbientGroup,
    levels: Vec<SetSpec>,
    stars: Vec<Vec<GroupElement>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct AssignmentDoc {
    levels: BTreeMap<u32, SetSpec>,
}

impl TryFrom<AssignmentDoc> for DyadicAssignment {
    type Error = NonabError;
    fn try_from(doc: AssignmentDoc) -> Result<Self, NonabError> {
        let k = doc.levels.keys().max().copied().unwrap_or(0);
        let mut levels = Vec::new();
        for i in 1..=k {
            levels.push(
                doc.levels
                    .get(&i)
                    .cloned()
                    .ok_or(NonabError::MissingLevel(i))?,
            );
        }
        DyadicAssignment::new(levels)
    }
}

impl From<DyadicAssignment> for AssignmentDoc {
    fn from(a: DyadicAssignment) -> Self {
        AssignmentDoc {
            levels: a
                .levels
                .into_iter()
                .enumerate()
                .map(|(i, s)| (i as u32 + 1, s))
                .collect(),
        }
    }
}

fn finite_star(s: &SetSpec) -> Result<Vec<GroupElement>, NonabError> {
    star(s).enumerate().ok_or(NonabError::NotFinite(s.kind()))
}

impl DyadicAssignment {
    /// `levels[i-1]` is `T_i`. Sets must be finite and share one group.
    pub fn new(levels: Vec<SetSpec>) -> Result<Self, NonabError> {
        let group = levels.first().ok_or(NonabError::EmptyAssignment)?.ambient();
        let mut stars = Vec::new();
        for s in &levels {
            if s.ambient() != group {
                return Err(NonabError::MixedGroups);
            }
            stars.push(finite_star(s)?);
        }
        Ok(DyadicAssignment {
            group,
            levels,
            stars,
        })
    }

    /// `S_q = T_i` for `q` of level `i ≤ K`, from a tower `T_0 ⊇ … ⊇ T_K`.
    pub fn from_tower(t: &TowerChain) -> Result<Self, NonabError> {
        DyadicAssignment::new(t.sets[1..].to_vec())
    }

    pub fn group(&self) -> &AmbientGroup {
        &self.group
    }

    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn set_at(&self, level: u32) -> &SetSpec {
        &self.levels[level as usize - 1]
    }

    fn star_at(&self, level: u32) -> &[GroupElement] {
        &self.stars[level as usize - 1]
    }

    pub fn indices(&self) -> Vec<DyadicIndex> {
        DyadicIndex::all_up_to(self.max_level())
    }

    /// `q ↦ S_{e(q)}`: level `i` gets `T_{i+shift}`.
    pub fn compose(&self, e: Embedding) -> Result<Self, NonabError> {
        let k = self.max_level();
        if e.shift >= k {
            return Err(NonabError::ShiftTooLarge { shift: e.shift, k });
        }
        Ok(DyadicAssignment {
            group: self.group.clone(),
            levels: self.levels[e.shift as usize..].to_vec(),
            stars: self.stars[e.shift as usize..].to_vec(),
        })
    }
}

/// `g = s₀ s₁ ⋯ s_n` with `s_i ∈ S*_{q_i}` and `q₀ < q₁ < ⋯ < q_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UqWitness {
    pub target: GroupElement,
    pub indices: Vec<DyadicIndex>,
    pub factors: Vec<GroupElement>,
}

impl UqWitness {
    pub fn check(&self, a: &DyadicAssignment) -> Result<(), String> {
        if self.indices.len() != self.factors.len() {
            return Err("index and factor counts differ".into());
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err("indices are not strictly increasing".into());
        }
        for (q, s) in self.indices.iter().zip(&self.factors) {
            if q.level() > a.max_level() {
                return Err(format!("index {q} is above the materialized levels"));
            }
            if !star(a.set_at(q.level())).contains(s) {
                return Err(format!("factor {} is not in S*_{q}", a.group().display(s)));
            }
        }
        let total = a
            .group()
            .product(self.factors.iter())
            .map_err(|e| e.to_string())?;
        if total != self.target {
            return Err(format!("factors multiply to {}", a.group().display(&total)));
        }
        Ok(())
    }

    /// The witness for `g⁻¹`: factors inverted, indices reflected, order reversed.
    pub fn inverse(&self, group: &AmbientGroup) -> UqWitness {
        UqWitness {
            target: group.neg_unchecked(&self.target),
            indices: self.indices.iter().rev().map(|q| q.reflect()).collect(),
            factors: self
                .factors
                .iter()
                .rev()
                .map(|s| group.neg_unchecked(s))
                .collect(),
        }
    }

    /// Concatenation; valid when every index of `self` is below every index of `other`.
    pub fn concat(&self, other: &UqWitness, group: &AmbientGroup) -> UqWitness {
        UqWitness {
            target: group.op_unchecked(&self.target, &other.target),
            indices: self.indices.iter().chain(&other.indices).copied().collect(),
            factors: self.factors.iter().chain(&other.factors).cloned().collect(),
        }
    }

    pub fn map_indices(&self, e: Embedding) -> UqWitness {
        UqWitness {
            target: self.target.clone(),
            indices: self.indices.iter().map(|q| e.apply(*q)).collect(),
            factors: self.factors.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum UqMembership {
    Yes {
        witness: UqWitness,
    },
    /// Exhaustive over every increasing index sequence of levels `≤ K`
    /// (finite groups only).
    No,
    Unknown {
        reason: String,
    },
}

impl UqMembership {
    pub fn is_yes(&self) -> bool {
        matches!(self, UqMembership::Yes { .. })
    }
}

/// Shortest witness for every element reachable as an increasing product
/// of at most `depth` factors, using indices in `indices` (sorted).
fn reachable(
    a: &DyadicAssignment,
    indices: &[DyadicIndex],
    depth: usize,
    budget: &SearchBudget,
) -> Result<BTreeMap<GroupElement, UqWitness>, NonabError> {
    let group = a.group();
    let id = group.identity();
    let mut states: BTreeMap<GroupElement, UqWitness> = BTreeMap::new();
    states.insert(
        id.clone(),
        UqWitness {
            target: id,
            indices: Vec::new(),
            factors: Vec::new(),
        },
    );
    for &q in indices {
        let snapshot: Vec<UqWitness> = states
            .values()
            .filter(|w| w.indices.len() < depth)
            .cloned()
            .collect();
        for w in snapshot {
            for s in a.star_at(q.level()) {
                let v = group.op_unchecked(&w.target, s);
                let better = states
                    .get(&v)
                    .is_none_or(|old| old.indices.len() > w.indices.len() + 1);
                if better {
                    let mut nw = w.clone();
                    nw.target = v.clone();
                    nw.indices.push(q);
                    nw.factors.push(s.clone());
                    states.insert(v, nw);
                }
            }
            if states.len() > budget.max_states {
                return Err(NonabError::Budget(budget.max_states));
            }
        }
    }
    Ok(states)
}

/// Decides `g ∈ S*_{q₀} ⋯ S*_{q_n}` for some `q₀ < ⋯ < q_n` of level `≤ K`
/// and `n + 1 ≤ depth`.
///
/// For finite groups a miss is re-run without the length cap; if `g` is
/// still unreachable the answer is an exhaustive "no" relative to the
/// materialized levels.
pub fn uq_membership(
    g: &GroupElement,
    a: &DyadicAssignment,
    depth: usize,
    budget: &SearchBudget,
) -> Result<UqMembership, NonabError> {
    a.group().check(g)?;
    let indices = a.indices();
    let states = match reachable(a, &indices, depth, budget) {
        Ok(s) => s,
        Err(NonabError::Budget(n)) => {
            return Ok(UqMembership::Unknown {
                reason: format!("more than {n} reachable products"),
            })
        }
        Err(e) => return Err(e),
    };
    if let Some(w) = states.get(g) {
        return Ok(UqMembership::Yes { witness: w.clone() });
    }
    if matches!(a.group(), AmbientGroup::Cayley { .. }) {
        let all = reachable(a, &indices, usize::MAX, budget)?;
        return Ok(match all.get(g) {
            None => UqMembership::No,
            Some(w) => UqMembership::Unknown {
                reason: format!("needs {} factors, above the depth {depth}", w.indices.len()),
            },
        });
    }
    Ok(UqMembership::Unknown {
        reason: format!("not reached with at most {depth} factors"),
    })
}

/// The star closure `S ∪ {e} ∪ S⁻¹` of a finite set in a nonabelian group.
pub fn star_mult(s: &SetSpec) -> Result<StarSet, NonabError> {
    match s {
        SetSpec::Finite(_) => Ok(star(s)),
        other => Err(NonabError::NotFinite(other.kind())),
    }
}

/// Checks `U(A∘σ) · U(A∘τ) ⊆ U(A)` on all products of at most `depth` factors.
pub fn check_uu(
    a: &DyadicAssignment,
    sigma: Embedding,
    tau: Embedding,
    depth: usize,
    budget: &SearchBudget,
) -> Result<VerificationReport, NonabError> {
    if !sigma.entirely_below(tau) {
        return Err(NonabError::Overlap);
    }
    let group = a.group();
    let left = a.compose(sigma)?;
    let right = a.compose(tau)?;
    let lu = reachable(&left, &left.indices(), depth, budget)?;
    let ru = reachable(&right, &right.indices(), depth, budget)?;
    let mut pairs = 0;
    let mut failures = Vec::new();
    for u in lu.values() {
        let u = u.map_indices(sigma);
        for v in ru.values() {
            let v = v.map_indices(tau);
            pairs += 1;
            let w = u.concat(&v, group);
            if let Err(e) = w.check(a) {
                failures.push(format!(
                    "{}·{}: {e}",
                    group.display(&u.target),
                    group.display(&v.target)
                ));
                continue;
            }
            if !uq_membership(&w.target, a, 2 * depth, budget)?.is_yes() {
                failures.push(format!("{} not found in U(A)", group.display(&w.target)));
            }
        }
    }
    let status = if failures.is_empty() {
        Status::Verified
    } else {
        Status::Refuted
    };
    let mut claim = Claim::new("uu", "U(A∘σ)·U(A∘τ) ⊆ U(A)", status)
        .with_evidence(json!({ "left": lu.len(), "right": ru.len(), "pairs": pairs }));
    if !failures.is_empty() {
        claim = claim.with_detail(failures.join("; "));
    }
    Ok(VerificationReport::new("check-uu", vec![claim])
        .with_params(json!({ "sigma": sigma, "tau": tau, "depth": depth })))
}

/// Every increasing product of at most `depth` factors with indices in `indices`.
pub fn all_witnesses(
    a: &DyadicAssignment,
    indices: &[DyadicIndex],
    depth: usize,
    budget: &SearchBudget,
) -> Result<Vec<UqWitness>, NonabError> {
    let group = a.group();
    let id = group.identity();
    let mut out = vec![UqWitness {
        target: id,
        indices: Vec::new(),
        factors: Vec::new(),
    }];
    let mut frontier = out.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for &q in indices
                .iter()
                .filter(|q| w.indices.last().is_none_or(|l| *q > l))
            {
                for s in a.star_at(q.level()) {
                    let mut nw = w.clone();
                    nw.target = group.op_unchecked(&w.target, s);
                    nw.indices.push(q);
                    nw.factors.push(s.clone());
                    next.push(nw);
                }
            }
            if out.len() + next.len() > budget.max_states.saturating_mul(8) {
                return Err(NonabError::Budget(budget.max_states.saturating_mul(8)));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// Outcome of an exhaustive property run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRun {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyRun {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For every witness of `g ∈ U(A)`, the reflected witness places `g⁻¹` in `U(A)`.
pub fn check_inverse_closure(
    a: &DyadicAssignment,
    depth: usize,
    budget: &SearchBudget,
) -> Result<PropertyRun, NonabError> {
    let mut run = PropertyRun::default();
    for w in all_witnesses(a, &a.indices(), depth, budget)? {
        run.checked += 1;
        let inv = w.inverse(a.group());
        if let Err(e) = inv.check(a) {
            run.failures
                .push(format!("inverse of {}: {e}", a.group().display(&w.target)));
        }
    }
    Ok(run)
}

/// For every witness `x ∈ U(A)` with last index `q` and every `u` reachable
/// from indices above `q`, the concatenated witness places `x·u` in `U(A)`.
pub fn check_translation(
    a: &DyadicAssignment,
    depth: usize,
    budget: &SearchBudget,
) -> Result<PropertyRun, NonabError> {
    let indices = a.indices();
    let mut above: BTreeMap<Option<DyadicIndex>, Vec<UqWitness>> = BTreeMap::new();
    let mut run = PropertyRun::default();
    for x in all_witnesses(a, &indices, depth, budget)? {
        let last = x.indices.last().copied();
        if let std::collections::btree_map::Entry::Vacant(e) = above.entry(last) {
            let upper: Vec<DyadicIndex> = indices
                .iter()
                .copied()
                .filter(|q| last.is_none_or(|l| *q > l))
                .collect();
            e.insert(reachable(a, &upper, depth, budget)?.into_values().collect());
        }
        for u in &above[&last] {
            run.checked += 1;
            let w = x.concat(u, a.group());
            if let Err(e) = w.check(a) {
                run.failures.push(format!(
                    "{}·{}: {e}",
                    a.group().display(&x.target),
                    a.group().display(&u.target)
                ));
            }
        }
    }
    Ok(run)
}

fn star_subset(x: &StarSet, y: &StarSet) -> Result<bool, NonabError> {
    if let Some(elems) = x.enumerate() {
        return Ok(elems.iter().all(|e| y.contains(e)));
    }
    if !x.symmetric || !y.symmetric {
        return Err(NonabError::NotFinite("tail"));
    }
    let id = x.ambient().identity();
    Ok(is_subset(&x.set, &y.set)? && (!x.adjoin_identity || y.contains(&id)))
}

/// `T₀ ⊇ T₁ ⊇ ⋯ ⊇ T_K` with `T_i* T_i* T_i* ⊆ T_{i−1}*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TowerDoc", into = "TowerDoc")]
pub struct TowerChain {
    sets: Vec<SetSpec>,
}

#[derive(Clone, Serialize, Deserialize)]
struct TowerDoc {
    levels: BTreeMap<u32, SetSpec>,
}

impl TryFrom<TowerDoc> for TowerChain {
    type Error = NonabError;
    fn try_from(doc: TowerDoc) -> Result<Self, NonabError> {
        let k = doc
            .levels
            .keys()
            .max()
            .copied()
            .ok_or(NonabError::EmptyAssignment)?;
        let sets = (0..=k)
            .map(|i| {
                doc.levels
                    .get(&i)
                    .cloned()
                    .ok_or(NonabError::MissingLevel(i))
            })
            .collect::<Result<_, _>>()?;
        TowerChain::new(sets)
    }
}

impl From<TowerChain> for TowerDoc {
    fn from(t: TowerChain) -> Self {
        TowerDoc {
            levels: t
                .sets
                .into_iter()
                .enumerate()
                .map(|(i, s)| (i as u32, s))
                .collect(),
        }
    }
}

const TOWER_ENUMERATION: usize = 1 << 16;

impl TowerChain {
    /// Verifies containment and the triple-product condition at every level.
    pub fn new(sets: Vec<SetSpec>) -> Result<Self, NonabError> {
        if sets.len() < 2 {
            return Err(NonabError::EmptyAssignment);
        }
        let group = sets[0].ambient();
        for (i, s) in sets.iter().enumerate() {
            if s.ambient() != group {
                return Err(NonabError::MixedGroups);
            }
            if i == 0 {
                continue;
            }
            if !star_subset(&star(s), &star(&sets[i - 1]))? {
                return Err(NonabError::Tower {
                    level: i,
                    reason: format!("T_{i} ⊄ T_{}", i - 1),
                });
            }
            let triple = n_fold_star_with_budget(s, 3, TOWER_ENUMERATION)?;
            if !star_subset(&triple, &star(&sets[i - 1]))? {
                return Err(NonabError::Tower {
                    level: i,
                    reason: format!("T_{i}·T_{i}·T_{i} ⊄ T_{}", i - 1),
                });
            }
        }
        Ok(TowerChain { sets })
    }

    pub fn k(&self) -> u32 {
        self.sets.len() as u32 - 1
    }

    pub fn set(&self, i: u32) -> &SetSpec {
        &self.sets[i as usize]
    }
}

/// One step of the middle-thirds collapse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ReductionStep {
    /// Indices of the finest level move from `T_from` to the larger `T_to`.
    Promote {
        indices: Vec<DyadicIndex>,
        from: u32,
        to: u32,
    },
    /// `T_label T_label T_label ⊆ T_{label−1}` at a flanked triple; the
    /// merged factor sits at the middle index.
    Merge {
        left: DyadicIndex,
        middle: DyadicIndex,
        right: DyadicIndex,
        label: u32,
    },
}

/// Certificate that the product over all `m/2^j` in order lies in `T₀`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionCertificate {
    pub j: u32,
    pub initial: Vec<(DyadicIndex, u32)>,
    pub steps: Vec<ReductionStep>,
    /// The single remaining factor: index `1/2` with its label (always 0).
    pub last: (DyadicIndex, u32),
    /// Inclusions used, each checked exactly: `(i, T_i ⊆ T_{i−1}, T_i³ ⊆ T_{i−1})`.
    pub inclusions: Vec<(u32, bool, bool)>,
}

impl ReductionCertificate {
    pub fn verified(&self) -> bool {
        self.last == (DyadicIndex::half(), 0) && self.inclusions.iter().all(|(_, a, b)| *a && *b)
    }
}

/// Collapses the product over `{m/2^j : 0 < m < 2^j}` to the single index
/// `1/2` carrying `T₀`.
///
/// Index `m/2^j` starts with label `level(m/2^j)`, except that level `K+1`
/// (allowed for `j = K+1`) starts directly at `T_K`. Each round promotes the
/// finest indices one level, then merges every (finest, middle, finest)
/// triple into its middle index with the next coarser label.
pub fn s_in_u_reduce(t: &TowerChain, j: u32) -> Result<ReductionCertificate, NonabError> {
    let k = t.k();
    if j == 0 || j > k + 1 {
        return Err(NonabError::BadLevel { j, max: k + 1 });
    }
    let mut entries: Vec<(DyadicIndex, u32)> = DyadicIndex::all_up_to(j)
        .into_iter()
        .map(|q| (q, q.level().min(k)))
        .collect();
    let initial = entries.clone();
    let mut steps = Vec::new();
    for r in (1..=j).rev() {
        // Promote the finest indices (level r) if they still carry T_r.
        let finest: Vec<DyadicIndex> = entries
            .iter()
            .filter(|(q, l)| q.level() == r && *l == r)
            .map(|(q, _)| *q)
            .collect();
        if !finest.is_empty() {
            steps.push(ReductionStep::Promote {
                indices: finest,
                from: r,
                to: r - 1,
            });
            for e in entries.iter_mut().filter(|(q, _)| q.level() == r) {
                e.1 = r - 1;
            }
        }
        if r == 1 {
            break;
        }
        // Merge (level r, level r−1, level r) triples, all carrying T_{r−1}.
        let mut next = Vec::new();
        let mut i = 0;
        while i < entries.len() {
            let (q, _) = entries[i];
            if q.level() == r {
                let (mid, ml) = entries[i + 1];
                let (right, _) = entries[i + 2];
                debug_assert_eq!((mid.level(), ml), (r - 1, r - 1));
                steps.push(ReductionStep::Merge {
                    left: q,
                    middle: mid,
                    right,
                    label: r - 1,
                });
                next.push((mid, r - 2));
                i += 3;
            } else {
                next.push(entries[i]);
                i += 1;
            }
        }
        entries = next;
    }
    let last = entries[0];
    let mut inclusions = Vec::new();
    for i in 1..=k {
        let ti = star(t.set(i));
        let prev = star(t.set(i - 1));
        let contained = star_subset(&ti, &prev)?;
        let triple = star_subset(
            &n_fold_star_with_budget(t.set(i), 3, TOWER_ENUMERATION)?,
            &prev,
        )?;
        inclusions.push((i, contained, triple));
    }
    Ok(ReductionCertificate {
        j,
        initial,
        steps,
        last,
        inclusions,
    })
}

/// Replaces each member `S` by `⋃_{g ∈ C} g S g⁻¹`.
pub fn fg_closure(
    family: &[SetSpec],
    conjugators: &[GroupElement],
) -> Result<Vec<SetSpec>, NonabError> {
    let Some(first) = family.first() else {
        return Ok(Vec::new());
    };
    let group = first.ambient();
    if !conjugators.iter().any(|c| group.is_identity(c)) {
        return Err(NonabError::MissingIdentity);
    }
    let mut out = Vec::new();
    for s in family {
        let SetSpec::Finite(f) = s else {
            return Err(NonabError::NotFinite(s.kind()));
        };
        if f.group() != &group {
            return Err(NonabError::MixedGroups);
        }
        let mut elems: BTreeSet<GroupElement> = BTreeSet::new();
        for c in conjugators {
            for x in f.elements() {
                elems.insert(group.conjugate(c, x)?);
            }
        }
        let closed = SetSpec::Finite(crate::setspec::FiniteSet::new(group.clone(), elems)?);
        debug_assert!(is_subset(s, &closed).unwrap_or(false));
        out.push(closed);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum NonabCupcap {
    Found { index: usize, member: SetSpec },
    NotFoundUpTo { depth: usize },
}

/// First of the first `depth` members `S` with `g ∉ (S*)^n`.
pub fn cupcap_check_nonab(
    g: &GroupElement,
    n: usize,
    family: &[SetSpec],
    depth: usize,
) -> Result<NonabCupcap, NonabError> {
    let Some(first) = family.first() else {
        return Ok(NonabCupcap::NotFoundUpTo { depth: 0 });
    };
    let group = first.ambient();
    group.check(g)?;
    if group.is_identity(g) {
        return Err(NonabError::IdentityProbe);
    }
    let depth = depth.min(family.len());
    for (index, s) in family[..depth].iter().enumerate() {
        if !matches!(s, SetSpec::Finite(_)) {
            return Err(NonabError::NotFinite(s.kind()));
        }
        if !n_fold_star_with_budget(s, n, TOWER_ENUMERATION)?.contains(g) {
            return Ok(NonabCupcap::Found {
                index,
                member: s.clone(),
            });
        }
    }
    Ok(NonabCupcap::NotFoundUpTo { depth })
}

fn x() -> Word {
    Word::from_letters([Letter::gen(0)])
}

fn y() -> Word {
    Word::from_letters([Letter::gen(1)])
}

/// `[x, y] = x y x⁻¹ y⁻¹`.
pub fn commutator_xy() -> Word {
    commutator(&x(), &y())
}

pub fn commutator(a: &Word, b: &Word) -> Word {
    a.concat(b).concat(&a.inverse()).concat(&b.inverse())
}

/// The endomorphism `x ↦ y`, `y ↦ xy`.
pub fn phi_apply(w: &Word) -> Result<Word, NonabError> {
    let mut out = Word::empty();
    for &l in w.letters() {
        let image = match l.generator() {
            0 => y(),
            1 => x().concat(&y()),
            other => return Err(NonabError::ForeignGenerator(other)),
        };
        let image = if l.is_inverse() {
            image.inverse()
        } else {
            image
        };
        out = out.concat(&image);
    }
    Ok(out)
}

pub fn phi_iterate(w: &Word, n: usize) -> Result<Word, NonabError> {
    let mut cur = w.clone();
    for _ in 0..n {
        cur = phi_apply(&cur)?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibWord {
    pub n: usize,
    pub word: Word,
}

/// `F₀ = 0`, `F₁ = 1`, `F_{n+1} = F_n + F_{n−1}`.
pub fn fibonacci_number(n: usize) -> usize {
    let (mut a, mut b) = (0usize, 1usize);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// `f₀ = x`, `f₁ = y`, `f_{n+1} = f_{n−1} f_n`.
pub fn fib_word(n: usize) -> FibWord {
    let (mut a, mut b) = (x(), y());
    for _ in 0..n {
        let next = a.concat(&b);
        a = std::mem::replace(&mut b, next);
    }
    FibWord { n, word: a }
}

/// For each `i ≤ n`: `f_i = φⁱ(x)` has length `F_{i+1}`, and
/// `φⁱ([x,y]) = [φⁱ(x), φⁱ⁺¹(x)]`, which is `[x,y]` for even `i` and
/// `[x,y]⁻¹` for odd `i`.
pub fn verify_fib_identity(n: usize) -> Result<VerificationReport, NonabError> {
    let names = ["x".to_string(), "y".to_string()];
    let c = commutator_xy();
    let mut claims = Vec::new();
    for i in 0..=n {
        let lhs = phi_iterate(&c, i)?;
        let fi = phi_iterate(&x(), i)?;
        let fj = phi_apply(&fi)?;
        let rhs = commutator(&fi, &fj);
        let expected = if i % 2 == 0 { c.clone() } else { c.inverse() };
        let fib = fib_word(i).word;
        let ok = lhs == rhs && lhs == expected && fib == fi && fib.len() == fibonacci_number(i + 1);
        claims.push(
            Claim::new(
                claim_id("phi", &[i as i64]),
                format!(
                    "φ^{i}([x,y]) = [φ^{i}(x), φ^{}(x)] = {}",
                    i + 1,
                    expected.display_with(&names)
                ),
                if ok {
                    Status::Verified
                } else {
                    Status::Refuted
                },
            )
            .with_evidence(json!({
                "lhs": lhs.display_with(&names),
                "rhs": rhs.display_with(&names),
                "f_len": fib.len(),
            })),
        );
    }
    Ok(VerificationReport::new("fibonacci", claims).with_params(json!({ "n": n })))
}

/// Both sides of the conjugation redistribution identity
/// `(g'₀g₀)⋯(g'_ng_n)(g₀⋯g_n)⁻¹ = ∏ h_i g'_i h_i⁻¹` with `h_i = g₀⋯g_{i−1}`.
pub fn conjugation_redistribution(gs: &[Word], primes: &[Word]) -> (Word, Word) {
    let mut lhs = Word::empty();
    let mut prefix = Word::empty();
    let mut rhs = Word::empty();
    for (g, gp) in gs.iter().zip(primes) {
        lhs = lhs.concat(gp).concat(g);
        rhs = rhs.concat(&prefix).concat(gp).concat(&prefix.inverse());
        prefix = prefix.concat(g);
    }
    (lhs.concat(&prefix.inverse()), rhs)
}
