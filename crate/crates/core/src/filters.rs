//! Downward-directed set families and the Hausdorff criteria built on them.
//!
//! A family is presented either as a decreasing chain `S(0) ⊇ S(1) ⊇ …`,
//! as the cofinite filter on a registered sequence (members `X ∖ finite`),
//! or as an explicit finite list. Every quantifier over the family becomes a
//! scan over its first `depth` members, so answers are three-valued.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::examples::{product_set, sqrt_set, ExampleError};
use crate::groups::{AmbientGroup, GroupElement};
use crate::report::{claim_id, Claim, ExclusionRecord, Status, VerificationReport};
use crate::sequence::Sequence;
use crate::setspec::{
    is_subset, prefix_sum_membership, star, ExclusionProof, Membership, SearchBudget, SetError,
    SetSpec, SymmetricInterval, TailSet,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Example(#[from] ExampleError),
    #[error("probe must not be the identity")]
    IdentityProbe,
    #[error("explicit family has only {len} members, index {index} requested")]
    NoSuchMember { index: usize, len: usize },
    #[error("family has no members")]
    EmptyFamily,
    #[error("no member of the family lies below both arguments")]
    NoLowerBound,
    #[error("set is not a member of this family: {0}")]
    NotAMember(String),
    #[error("{0} must be positive")]
    ZeroBudget(&'static str),
    #[error("point {index} is not in the star set")]
    PointOutsideStar { index: usize },
}

fn three() -> u64 {
    3
}

fn seven() -> i64 {
    7
}

/// Generators of decreasing chains. Member `k` of each chain is listed below.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum ChainGenerator {
    /// Member `k` is `S(k+1)`: zero and the square roots of `a` modulo `p^{k+1}`.
    #[serde(rename = "sqrt7")]
    Sqrt {
        #[serde(default = "three")]
        p: u64,
        #[serde(default = "seven")]
        a: i64,
    },
    /// Member `k` is the box `S(min(k+1, n))` in `∏_{c≤n} ℤ/c`.
    Product { n: usize },
    /// Member `k` is `(−2^{−k}, 2^{−k})` in ℚ.
    Interval,
    /// Member `k` is `sets[min(k, len−1)]`.
    Sets { sets: Vec<SetSpec> },
}

/// A downward-directed family of subsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterFamily {
    Chain(ChainGenerator),
    /// Cofinite filter on the sequence: member `k` is `{x_j : j ≥ k}`.
    Cofinite {
        sequence: Sequence,
    },
    Explicit {
        sets: Vec<SetSpec>,
    },
}

impl FilterFamily {
    pub fn sqrt7() -> Self {
        FilterFamily::Chain(ChainGenerator::Sqrt { p: 3, a: 7 })
    }

    pub fn cofinite(sequence: Sequence) -> Self {
        FilterFamily::Cofinite { sequence }
    }

    pub fn ambient(&self) -> Result<AmbientGroup, FilterError> {
        Ok(match self {
            FilterFamily::Chain(ChainGenerator::Sqrt { .. }) | FilterFamily::Cofinite { .. } => {
                AmbientGroup::Integers
            }
            FilterFamily::Chain(ChainGenerator::Product { n }) => {
                AmbientGroup::product_mod(*n).map_err(SetError::from)?
            }
            FilterFamily::Chain(ChainGenerator::Interval) => AmbientGroup::Rationals,
            FilterFamily::Chain(ChainGenerator::Sets { sets })
            | FilterFamily::Explicit { sets } => {
                sets.first().ok_or(FilterError::EmptyFamily)?.ambient()
            }
        })
    }

    /// Number of members, `None` for infinite presentations.
    pub fn len(&self) -> Option<usize> {
        match self {
            FilterFamily::Explicit { sets } => Some(sets.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Member `k` in enumeration order.
    pub fn member(&self, k: usize) -> Result<SetSpec, FilterError> {
        match self {
            FilterFamily::Chain(ChainGenerator::Sqrt { p, a }) => {
                let level = u32::try_from(k + 1).map_err(|_| FilterError::NoSuchMember {
                    index: k,
                    len: u32::MAX as usize,
                })?;
                Ok(sqrt_set(&BigInt::from(*a), *p, level)?)
            }
            FilterFamily::Chain(ChainGenerator::Product { n }) => {
                Ok(product_set(*n, (k + 1).min(*n))?)
            }
            FilterFamily::Chain(ChainGenerator::Interval) => {
                let eps = BigRational::new(BigInt::one(), BigInt::one() << k);
                Ok(SetSpec::Interval(SymmetricInterval::new(eps)?))
            }
            FilterFamily::Chain(ChainGenerator::Sets { sets }) => sets
                .get(k.min(sets.len().saturating_sub(1)))
                .cloned()
                .ok_or(FilterError::EmptyFamily),
            FilterFamily::Cofinite { sequence } => {
                Ok(SetSpec::Tail(TailSet::new(sequence.clone(), k)))
            }
            FilterFamily::Explicit { sets } => {
                sets.get(k).cloned().ok_or(FilterError::NoSuchMember {
                    index: k,
                    len: sets.len(),
                })
            }
        }
    }

    /// Members `0..depth`, truncated for finite families.
    pub fn members(&self, depth: usize) -> Result<Vec<SetSpec>, FilterError> {
        let n = self.len().map_or(depth, |l| l.min(depth));
        (0..n).map(|k| self.member(k)).collect()
    }

    /// Human-readable name of member `k`.
    pub fn label(&self, k: usize) -> String {
        match self {
            FilterFamily::Chain(ChainGenerator::Sqrt { .. }) => format!("S({})", k + 1),
            FilterFamily::Chain(ChainGenerator::Product { n }) => format!("S({})", (k + 1).min(*n)),
            FilterFamily::Chain(ChainGenerator::Interval) => format!("(-2^-{k}, 2^-{k})"),
            FilterFamily::Chain(ChainGenerator::Sets { .. }) | FilterFamily::Explicit { .. } => {
                format!("S{k}")
            }
            FilterFamily::Cofinite { sequence } => format!("{sequence}[k≥{k}]"),
        }
    }

    /// A member contained in both arguments: the deeper one for chains,
    /// the union of removals for cofinite families, and a searched member
    /// for explicit families.
    pub fn lower_bound(&self, a: &SetSpec, b: &SetSpec) -> Result<SetSpec, FilterError> {
        match self {
            FilterFamily::Cofinite { sequence } => {
                let (SetSpec::Tail(x), SetSpec::Tail(y)) = (a, b) else {
                    return Err(FilterError::NotAMember(format!("{a} / {b}")));
                };
                if &x.sequence != sequence || &y.sequence != sequence {
                    return Err(FilterError::NotAMember(format!("{a} / {b}")));
                }
                let start = x.start.max(y.start);
                let excluded = x
                    .excluded
                    .iter()
                    .chain(&y.excluded)
                    .copied()
                    .filter(|k| *k >= start)
                    .collect();
                Ok(SetSpec::Tail(TailSet {
                    sequence: sequence.clone(),
                    start,
                    excluded,
                }))
            }
            FilterFamily::Explicit { sets } => {
                for c in sets {
                    if is_subset(c, a)? && is_subset(c, b)? {
                        return Ok(c.clone());
                    }
                }
                Err(FilterError::NoLowerBound)
            }
            FilterFamily::Chain(_) => {
                const SEARCH: usize = 64;
                let find = |s: &SetSpec| -> Result<usize, FilterError> {
                    for k in 0..SEARCH {
                        if &self.member(k)? == s {
                            return Ok(k);
                        }
                    }
                    Err(FilterError::NotAMember(s.to_string()))
                };
                let k = find(a)?.max(find(b)?);
                self.member(k)
            }
        }
    }
}

/// Outcome of [`check_directed`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Directedness {
    Directed,
    /// Members `i` and `j` have no common lower bound in the family.
    NotDirected {
        pair: (usize, usize),
    },
}

/// Exhaustive check that every pair of members has a member below both.
pub fn check_directed(sets: &[SetSpec]) -> Result<Directedness, FilterError> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let mut found = false;
            for c in sets {
                if is_subset(c, &sets[i])? && is_subset(c, &sets[j])? {
                    found = true;
                    break;
                }
            }
            if !found {
                return Ok(Directedness::NotDirected { pair: (i, j) });
            }
        }
    }
    Ok(Directedness::Directed)
}

/// Outcome of [`cupcap_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CupcapOutcome {
    /// Member `index` satisfies `g ∉ n·S*`.
    Found {
        index: usize,
        member: SetSpec,
        proof: ExclusionProof,
    },
    /// No member among the first `depth` excludes `g`; `unknown` of them
    /// could not be decided within budget.
    NotFoundUpTo { depth: usize, unknown: usize },
}

impl CupcapOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, CupcapOutcome::Found { .. })
    }
}

/// Searches the first `depth` members for `S` with `g ∉ n·S*`.
pub fn cupcap_check(
    g: &GroupElement,
    n: usize,
    family: &FilterFamily,
    depth: usize,
    budget: &SearchBudget,
) -> Result<CupcapOutcome, FilterError> {
    let group = family.ambient()?;
    if group.is_identity(g) {
        return Err(FilterError::IdentityProbe);
    }
    if n == 0 {
        return Err(FilterError::ZeroBudget("n"));
    }
    let mut unknown = 0;
    let members = family.members(depth)?;
    for (index, member) in members.iter().enumerate() {
        match prefix_sum_membership(&group, g, &vec![member.clone(); n], budget)? {
            Membership::No { proof } => {
                return Ok(CupcapOutcome::Found {
                    index,
                    member: member.clone(),
                    proof,
                })
            }
            Membership::Unknown { .. } => unknown += 1,
            Membership::Yes { .. } => {}
        }
    }
    Ok(CupcapOutcome::NotFoundUpTo {
        depth: members.len(),
        unknown,
    })
}

/// A family of points indexed by an ω-chain (position `j` is deeper than
/// every `i < j`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedPoints {
    pub group: AmbientGroup,
    pub points: Vec<GroupElement>,
}

impl IndexedPoints {
    pub fn new(group: AmbientGroup, points: Vec<GroupElement>) -> Self {
        IndexedPoints { group, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn restrict(&self, positions: &[usize]) -> IndexedPoints {
        IndexedPoints {
            group: self.group.clone(),
            points: positions.iter().map(|&p| self.points[p].clone()).collect(),
        }
    }
}

/// Per-member result of a convergence check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberConvergence {
    pub index: usize,
    pub status: Status,
    /// First position from which every sampled point is within the member.
    pub from: Option<usize>,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub status: Status,
    pub members: Vec<MemberConvergence>,
}

const CONVERGENCE_BLOCKS: usize = 4;

/// Sampled strong convergence of `pts` to `x` along the family.
///
/// For each of the first `depth` members `S`, the sample passes when some
/// position in its first half has every later point satisfying
/// `x_j − x ∈ S*`. A member fails when every one of the final four blocks
/// of the sample contains a violation. Anything else is inconclusive.
pub fn strong_convergence_check(
    family: &FilterFamily,
    pts: &IndexedPoints,
    x: &GroupElement,
    depth: usize,
) -> Result<ConvergenceReport, FilterError> {
    if pts.is_empty() {
        return Ok(ConvergenceReport {
            status: Status::Unknown,
            members: Vec::new(),
        });
    }
    let group = &pts.group;
    let len = pts.len();
    let diffs: Vec<GroupElement> = pts
        .points
        .iter()
        .map(|p| group.sub(p, x))
        .collect::<Result<_, _>>()
        .map_err(SetError::from)?;
    let mut members = Vec::new();
    for (index, member) in family.members(depth)?.iter().enumerate() {
        let st = star(member);
        let bad: Vec<bool> = diffs.iter().map(|d| !st.contains(d)).collect();
        let violations = bad.iter().filter(|b| **b).count();
        let from = match bad.iter().rposition(|b| *b) {
            None => Some(0),
            Some(last) if last + 1 < len => Some(last + 1),
            Some(_) => None,
        };
        let block = (len / CONVERGENCE_BLOCKS).max(1);
        let cofinal = len >= CONVERGENCE_BLOCKS
            && (0..CONVERGENCE_BLOCKS).all(|b| {
                let end = len - b * block;
                bad[end.saturating_sub(block)..end].iter().any(|v| *v)
            });
        let status = match from {
            Some(f) if f <= len / 2 => Status::Verified,
            _ if cofinal => Status::Refuted,
            _ => Status::Unknown,
        };
        members.push(MemberConvergence {
            index,
            status,
            from,
            violations,
        });
    }
    let status = members
        .iter()
        .fold(Status::Verified, |acc, m| acc.combine(m.status));
    Ok(ConvergenceReport { status, members })
}

/// Output of [`frequent_value_selector`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum Selection {
    /// `value` occurs frequently; `positions` is the cofinal subfamily where it occurs.
    Frequent {
        value: GroupElement,
        positions: Vec<usize>,
    },
    /// No value recurs: the limit is the identity along all positions.
    Fallback {
        value: GroupElement,
        positions: Vec<usize>,
    },
}

impl Selection {
    pub fn value(&self) -> &GroupElement {
        match self {
            Selection::Frequent { value, .. } | Selection::Fallback { value, .. } => value,
        }
    }

    pub fn positions(&self) -> &[usize] {
        match self {
            Selection::Frequent { positions, .. } | Selection::Fallback { positions, .. } => {
                positions
            }
        }
    }
}

/// The frequent-value dichotomy on a finite sample.
///
/// A value counts as occurring frequently when it appears at least twice
/// among the last `window` points. The most frequent such value wins (ties
/// broken by the element order); otherwise the identity is returned with
/// every position.
pub fn frequent_value_selector(
    s: &SetSpec,
    pts: &IndexedPoints,
    window: usize,
) -> Result<Selection, FilterError> {
    if window == 0 {
        return Err(FilterError::ZeroBudget("window"));
    }
    let st = star(s);
    if let Some(index) = pts.points.iter().position(|p| !st.contains(p)) {
        return Err(FilterError::PointOutsideStar { index });
    }
    let start = pts.len().saturating_sub(window);
    let mut counts: BTreeMap<&GroupElement, usize> = BTreeMap::new();
    for p in &pts.points[start..] {
        *counts.entry(p).or_default() += 1;
    }
    let best = counts
        .iter()
        .filter(|(_, c)| **c >= 2)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(v, _)| (*v).clone());
    Ok(match best {
        Some(value) => {
            let positions = (0..pts.len()).filter(|&i| pts.points[i] == value).collect();
            Selection::Frequent { value, positions }
        }
        None => Selection::Fallback {
            value: pts.group.identity(),
            positions: (0..pts.len()).collect(),
        },
    })
}

/// One step of a separating sequence: the chosen member and the proof that
/// `g` is outside the sum of the prefix ending here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationStep {
    pub index: usize,
    pub label: String,
    pub member: SetSpec,
    pub proof: ExclusionProof,
}

/// `g ∉ S₀* + ⋯ + S_n*` for every prefix of `steps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub group: AmbientGroup,
    pub target: GroupElement,
    pub steps: Vec<SeparationStep>,
}

impl SeparationCertificate {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn sets(&self) -> Vec<SetSpec> {
        self.steps.iter().map(|s| s.member.clone()).collect()
    }

    /// One exclusion record per prefix.
    pub fn exclusions(&self) -> Vec<ExclusionRecord> {
        (1..=self.steps.len())
            .map(|n| ExclusionRecord {
                group: self.group.clone(),
                target: self.target.clone(),
                sets: self.steps[..n].iter().map(|s| s.member.clone()).collect(),
                proof: self.steps[n - 1].proof.clone(),
            })
            .collect()
    }

    /// Re-decides every prefix from scratch.
    pub fn recheck(&self, budget: &SearchBudget) -> Result<(), String> {
        for (i, x) in self.exclusions().iter().enumerate() {
            x.recheck(budget).map_err(|e| format!("step {i}: {e}"))?;
        }
        Ok(())
    }
}

/// A candidate that could not extend the prefix, and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockedCandidate {
    pub index: usize,
    pub label: String,
    pub membership: Membership,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SeparationOutcome {
    Certificate(SeparationCertificate),
    Stuck {
        prefix: SeparationCertificate,
        step: usize,
        blocked: Vec<BlockedCandidate>,
    },
}

impl SeparationOutcome {
    pub fn certificate(&self) -> Option<&SeparationCertificate> {
        match self {
            SeparationOutcome::Certificate(c) => Some(c),
            SeparationOutcome::Stuck { .. } => None,
        }
    }
}

/// Greedy construction of `S₀, S₁, …` with `g ∉ S₀* + ⋯ + S_n*` at every step.
///
/// Each step takes the first of the first `depth` members (in family order)
/// for which the extended prefix provably excludes `g`.
pub fn separating_sequence(
    g: &GroupElement,
    family: &FilterFamily,
    max_len: usize,
    depth: usize,
    budget: &SearchBudget,
) -> Result<SeparationOutcome, FilterError> {
    let group = family.ambient()?;
    if group.is_identity(g) {
        return Err(FilterError::IdentityProbe);
    }
    let members = family.members(depth)?;
    let mut cert = SeparationCertificate {
        group: group.clone(),
        target: g.clone(),
        steps: Vec::new(),
    };
    let mut chain: Vec<SetSpec> = Vec::new();
    for step in 0..max_len {
        let mut blocked = Vec::new();
        let mut chosen = None;
        for (index, member) in members.iter().enumerate() {
            chain.push(member.clone());
            let m = prefix_sum_membership(&group, g, &chain, budget)?;
            chain.pop();
            match m {
                Membership::No { proof } => {
                    chosen = Some(SeparationStep {
                        index,
                        label: family.label(index),
                        member: member.clone(),
                        proof,
                    });
                    break;
                }
                membership => blocked.push(BlockedCandidate {
                    index,
                    label: family.label(index),
                    membership,
                }),
            }
        }
        match chosen {
            Some(s) => {
                chain.push(s.member.clone());
                cert.steps.push(s);
            }
            None => {
                return Ok(SeparationOutcome::Stuck {
                    prefix: cert,
                    step,
                    blocked,
                })
            }
        }
    }
    Ok(SeparationOutcome::Certificate(cert))
}

/// Search limits for [`hausdorff_verdict`]. Missing fields take defaults.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HausdorffBudget {
    pub n_max: usize,
    pub depth: usize,
    pub max_len: usize,
    pub search: SearchBudget,
}

impl Default for HausdorffBudget {
    fn default() -> Self {
        HausdorffBudget {
            n_max: 3,
            depth: 8,
            max_len: 5,
            search: SearchBudget::default(),
        }
    }
}

pub const VERDICT_CONSISTENT: &str = "consistent-with-hausdorff";
pub const VERDICT_GAP: &str = "necessary-holds/construction-sticks";
pub const VERDICT_UNRESOLVED: &str = "unresolved";

/// Runs the necessary condition and the separating construction on each
/// probe and aggregates them.
///
/// Claims per probe: `cupcap n` for `n ≤ n_max` (verified when a member
/// excludes `g` from `n·S*`, unknown otherwise) and `separation` (verified
/// with a certificate of length `max_len`, refuted when every candidate is
/// blocked by a re-checked witness, unknown otherwise).
pub fn hausdorff_verdict(
    family: &FilterFamily,
    probes: &[GroupElement],
    budget: &HausdorffBudget,
) -> Result<VerificationReport, FilterError> {
    for (name, v) in [
        ("n_max", budget.n_max),
        ("depth", budget.depth),
        ("max_len", budget.max_len),
    ] {
        if v == 0 {
            return Err(FilterError::ZeroBudget(name));
        }
    }
    let group = family.ambient()?;
    for g in probes {
        group.check(g).map_err(SetError::from)?;
        if group.is_identity(g) {
            return Err(FilterError::IdentityProbe);
        }
    }
    let mut claims = Vec::new();
    let mut cupcap_all = true;
    let mut sep_all = true;
    let mut stuck_any = false;
    for (pi, g) in probes.iter().enumerate() {
        let shown = group.display(g);
        for n in 1..=budget.n_max {
            let id = claim_id("probe", &[pi as i64, 0, n as i64]);
            let statement = format!("some member S has {shown} ∉ {n}·S*");
            let claim = match cupcap_check(g, n, family, budget.depth, &budget.search)? {
                CupcapOutcome::Found {
                    index,
                    member,
                    proof,
                } => {
                    let record = ExclusionRecord {
                        group: group.clone(),
                        target: g.clone(),
                        sets: vec![member; n],
                        proof,
                    };
                    Claim::new(id, statement, Status::Verified)
                        .with_detail(format!("member {}", family.label(index)))
                        .with_exclusions(vec![record])
                }
                CupcapOutcome::NotFoundUpTo { depth, unknown } => {
                    cupcap_all = false;
                    Claim::new(id, statement, Status::Unknown).with_detail(format!(
                        "none of the first {depth} members ({unknown} undecided)"
                    ))
                }
            };
            claims.push(claim);
        }
        let id = claim_id("probe", &[pi as i64, 1, 0]);
        let statement = format!(
            "{shown} is separated by {} members chosen among the first {}",
            budget.max_len, budget.depth
        );
        let claim =
            match separating_sequence(g, family, budget.max_len, budget.depth, &budget.search)? {
                SeparationOutcome::Certificate(cert) => {
                    let labels: Vec<&str> = cert.steps.iter().map(|s| s.label.as_str()).collect();
                    Claim::new(id, statement, Status::Verified)
                        .with_detail(labels.join(", "))
                        .with_exclusions(cert.exclusions())
                }
                SeparationOutcome::Stuck {
                    prefix,
                    step,
                    blocked,
                } => {
                    sep_all = false;
                    let witnesses: Vec<_> = blocked
                        .iter()
                        .filter_map(|b| match &b.membership {
                            Membership::Yes { witness } => Some(witness.clone()),
                            _ => None,
                        })
                        .collect();
                    let exact = witnesses.len() == blocked.len();
                    stuck_any |= exact;
                    let status = if exact {
                        Status::Refuted
                    } else {
                        Status::Unknown
                    };
                    Claim::new(id, statement, status)
                        .with_detail(format!(
                            "stuck at step {step}: every candidate admits a decomposition"
                        ))
                        .with_exclusions(prefix.exclusions())
                        .with_witnesses(witnesses)
                }
            };
        claims.push(claim);
    }
    let verdict = match (cupcap_all, sep_all, stuck_any) {
        (true, true, _) => VERDICT_CONSISTENT,
        (true, false, true) => VERDICT_GAP,
        _ => VERDICT_UNRESOLVED,
    };
    let mut report = VerificationReport::new("hausdorff", claims)
        .with_verdict(verdict)
        .with_budgets(budget.search.clone())
        .with_params(json!({
            "family": family,
            "probes": probes,
            "n_max": budget.n_max,
            "depth": budget.depth,
            "max_len": budget.max_len,
        }));
    if verdict == VERDICT_GAP {
        report = report.with_note(
            "the necessary condition holds for every probe, but the prefix-sum neighborhoods do not separate them",
        );
    }
    Ok(report)
}

/// First `k < depth` with `S(k) ⊄ S(k−1)`, checked exactly.
pub fn check_chain_decreasing(
    family: &FilterFamily,
    depth: usize,
) -> Result<Option<usize>, FilterError> {
    let members = family.members(depth)?;
    for k in 1..members.len() {
        if !is_subset(&members[k], &members[k - 1])? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> GroupElement {
        GroupElement::int(v)
    }

    fn powers3() -> FilterFamily {
        FilterFamily::cofinite(Sequence::powers(3).unwrap())
    }

    #[test]
    fn family_json() {
        let f: FilterFamily =
            serde_json::from_str(r#"{"kind":"chain","generator":"sqrt7"}"#).unwrap();
        assert_eq!(f, FilterFamily::sqrt7());
        let f: FilterFamily =
            serde_json::from_str(r#"{"kind":"cofinite","sequence":"powers3"}"#).unwrap();
        assert_eq!(f, powers3());
        let f: FilterFamily =
            serde_json::from_str(r#"{"kind":"chain","generator":"product","n":6}"#).unwrap();
        assert_eq!(f.member(9).unwrap(), product_set(6, 6).unwrap());
        let f: FilterFamily = serde_json::from_str(
            r#"{"kind":"explicit","sets":[{"kind":"finite","elements":[0]}]}"#,
        )
        .unwrap();
        assert_eq!(f.len(), Some(1));
        let back: FilterFamily =
            serde_json::from_str(&serde_json::to_string(&FilterFamily::sqrt7()).unwrap()).unwrap();
        assert_eq!(back, FilterFamily::sqrt7());
    }

    #[test]
    fn directedness() {
        let chain = vec![
            SetSpec::finite_ints([1, 2, 3]),
            SetSpec::finite_ints([1, 2]),
            SetSpec::finite_ints([1]),
        ];
        assert_eq!(check_directed(&chain).unwrap(), Directedness::Directed);
        let apart = vec![SetSpec::finite_ints([1]), SetSpec::finite_ints([2])];
        assert_eq!(
            check_directed(&apart).unwrap(),
            Directedness::NotDirected { pair: (0, 1) }
        );
        let sq = FilterFamily::sqrt7().members(3).unwrap();
        assert_eq!(check_directed(&sq).unwrap(), Directedness::Directed);
        assert_eq!(
            check_chain_decreasing(&FilterFamily::sqrt7(), 6).unwrap(),
            None
        );
    }

    #[test]
    fn lower_bounds() {
        let f = FilterFamily::sqrt7();
        let lb = f
            .lower_bound(&f.member(1).unwrap(), &f.member(4).unwrap())
            .unwrap();
        assert_eq!(lb, f.member(4).unwrap());
        let p3 = Sequence::powers(3).unwrap();
        let c = powers3();
        let mut a = TailSet::new(p3.clone(), 0);
        a.excluded.insert(1);
        let mut b = TailSet::new(p3.clone(), 0);
        b.excluded.insert(2);
        let SetSpec::Tail(lb) = c.lower_bound(&SetSpec::Tail(a), &SetSpec::Tail(b)).unwrap() else {
            panic!()
        };
        assert_eq!(lb.excluded.into_iter().collect::<Vec<_>>(), vec![1, 2]);
        let big = SetSpec::finite_ints([1, 2]);
        let small = SetSpec::finite_ints([1]);
        let e = FilterFamily::Explicit {
            sets: vec![big.clone(), small.clone()],
        };
        assert_eq!(e.lower_bound(&big, &small).unwrap(), small);
    }

    #[test]
    fn cupcap_examples() {
        let b = SearchBudget::default();
        let f = FilterFamily::sqrt7();
        match cupcap_check(&int(1), 1, &f, 5, &b).unwrap() {
            CupcapOutcome::Found { index, .. } => assert_eq!(f.label(index), "S(2)"),
            other => panic!("{other:?}"),
        }
        match cupcap_check(&int(7), 2, &f, 8, &b).unwrap() {
            CupcapOutcome::Found { index, .. } => assert!(index < 4),
            other => panic!("{other:?}"),
        }
        match cupcap_check(&int(5), 2, &powers3(), 5, &b).unwrap() {
            CupcapOutcome::Found { member, .. } => {
                assert!(!crate::setspec::n_fold_star(&SetSpec::finite_ints([0]), 1)
                    .unwrap()
                    .contains(&int(5)));
                assert!(matches!(member, SetSpec::Tail(_)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            cupcap_check(&int(0), 1, &f, 3, &b),
            Err(FilterError::IdentityProbe)
        );
    }

    #[test]
    fn convergence_examples() {
        let z = AmbientGroup::Integers;
        let constant = IndexedPoints::new(z.clone(), vec![int(4); 20]);
        assert_eq!(
            strong_convergence_check(&powers3(), &constant, &int(4), 5)
                .unwrap()
                .status,
            Status::Verified
        );
        let pts = IndexedPoints::new(
            z.clone(),
            (0..30)
                .map(|j| GroupElement::Int(num_traits::pow(BigInt::from(3), j)))
                .collect(),
        );
        assert_eq!(
            strong_convergence_check(&powers3(), &pts, &int(0), 10)
                .unwrap()
                .status,
            Status::Verified
        );
        let alt = IndexedPoints::new(
            z,
            (0..20)
                .map(|j| int(if j % 2 == 0 { 1 } else { -1 }))
                .collect(),
        );
        let zero = FilterFamily::Chain(ChainGenerator::Sets {
            sets: vec![SetSpec::finite_ints([0])],
        });
        assert_eq!(
            strong_convergence_check(&zero, &alt, &int(0), 3)
                .unwrap()
                .status,
            Status::Refuted
        );
    }

    #[test]
    fn selector_examples() {
        let z = AmbientGroup::Integers;
        let s = SetSpec::tail(Sequence::powers(3).unwrap(), 0);
        let c = IndexedPoints::new(z.clone(), vec![int(9); 10]);
        let sel = frequent_value_selector(&s, &c, 4).unwrap();
        assert_eq!(
            sel,
            Selection::Frequent {
                value: int(9),
                positions: (0..10).collect()
            }
        );
        let distinct = IndexedPoints::new(
            z.clone(),
            (0..10)
                .map(|j| GroupElement::Int(num_traits::pow(BigInt::from(3), j)))
                .collect(),
        );
        assert!(matches!(
            frequent_value_selector(&s, &distinct, 4).unwrap(),
            Selection::Fallback { .. }
        ));
        let mixed = IndexedPoints::new(
            z.clone(),
            (0..12)
                .map(|j| {
                    if j % 2 == 0 {
                        int(3)
                    } else {
                        GroupElement::Int(num_traits::pow(BigInt::from(3), j + 2))
                    }
                })
                .collect(),
        );
        let sel = frequent_value_selector(&s, &mixed, 4).unwrap();
        assert_eq!(sel.value(), &int(3));
        assert_eq!(sel.positions(), &[0, 2, 4, 6, 8, 10]);
        let outside = IndexedPoints::new(z, vec![int(2)]);
        assert!(frequent_value_selector(&s, &outside, 1).is_err());
    }

    #[test]
    fn separation_examples() {
        let b = SearchBudget::default();
        match separating_sequence(&int(1), &FilterFamily::sqrt7(), 5, 6, &b).unwrap() {
            SeparationOutcome::Stuck {
                prefix,
                step,
                blocked,
            } => {
                assert_eq!(step, 1);
                assert_eq!(prefix.steps[0].label, "S(2)");
                assert_eq!(blocked.len(), 6);
                assert!(blocked.iter().all(|c| c.membership.is_yes()));
            }
            other => panic!("{other:?}"),
        }
        let out = separating_sequence(&int(1), &powers3(), 5, 6, &b).unwrap();
        let cert = out.certificate().expect("certificate");
        assert_eq!(cert.len(), 5);
        assert!(cert.recheck(&b).is_ok());
        assert_eq!(
            separating_sequence(&int(0), &powers3(), 5, 6, &b),
            Err(FilterError::IdentityProbe)
        );
    }

    #[test]
    fn verdicts() {
        let probes: Vec<GroupElement> = (1..=10).map(int).collect();
        let budget = HausdorffBudget {
            n_max: 2,
            depth: 6,
            max_len: 3,
            search: SearchBudget::default(),
        };
        let r = hausdorff_verdict(&FilterFamily::sqrt7(), &probes, &budget).unwrap();
        assert_eq!(r.verdict.as_deref(), Some(VERDICT_GAP));
        let r = hausdorff_verdict(&powers3(), &probes, &budget).unwrap();
        assert_eq!(r.verdict.as_deref(), Some(VERDICT_CONSISTENT));
        assert!(r.recheck().ok());
        let zero = FilterFamily::Explicit {
            sets: vec![SetSpec::finite_ints([0])],
        };
        let r = hausdorff_verdict(&zero, &probes, &budget).unwrap();
        assert_eq!(r.verdict.as_deref(), Some(VERDICT_CONSISTENT));
        assert_eq!(
            hausdorff_verdict(&zero, &[int(0)], &budget),
            Err(FilterError::IdentityProbe)
        );
    }
}
