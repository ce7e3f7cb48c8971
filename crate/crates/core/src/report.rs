//! Verification reports: three-valued claim lists with re-checkable evidence.
//!
//! A report body is deterministic for identical inputs. Wall time and other
//! run metadata live in [`RunMetadata`], written next to the report rather
//! than inside it.

use serde::{Deserialize, Serialize};

use crate::groups::{AmbientGroup, GroupElement};
use crate::setspec::{
    prefix_sum_membership, DecompositionWitness, ExclusionProof, Membership, SearchBudget, SetSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Refuted,
    Unknown,
}

impl Status {
    /// Refuted dominates unknown, which dominates verified.
    pub fn combine(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Refuted, _) | (_, Refuted) => Refuted,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => Verified,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Refuted => "refuted",
            Status::Unknown => "unknown",
        }
    }
}

/// A recorded "no" answer that `recheck` reproduces from scratch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionRecord {
    pub group: AmbientGroup,
    pub target: GroupElement,
    pub sets: Vec<SetSpec>,
    pub proof: ExclusionProof,
}

impl ExclusionRecord {
    pub fn recheck(&self, budget: &SearchBudget) -> Result<(), String> {
        match prefix_sum_membership(&self.group, &self.target, &self.sets, budget) {
            Ok(Membership::No { .. }) => Ok(()),
            Ok(Membership::Yes { witness }) => Err(format!(
                "{} is a sum after all: {:?}",
                self.group.display(&self.target),
                witness
                    .summands
                    .iter()
                    .map(|s| self.group.display(s))
                    .collect::<Vec<_>>()
            )),
            Ok(Membership::Unknown { reason }) => {
                Err(format!("exclusion no longer decided: {reason}"))
            }
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<DecompositionWitness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<ExclusionRecord>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub evidence: serde_json::Value,
}

impl Claim {
    pub fn new(id: impl Into<String>, statement: impl Into<String>, status: Status) -> Self {
        Claim {
            id: id.into(),
            statement: statement.into(),
            status,
            detail: None,
            witnesses: Vec::new(),
            exclusions: Vec::new(),
            evidence: serde_json::Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn with_witnesses(mut self, witnesses: Vec<DecompositionWitness>) -> Self {
        self.witnesses = witnesses;
        self
    }

    pub fn with_exclusions(mut self, exclusions: Vec<ExclusionRecord>) -> Self {
        self.exclusions = exclusions;
        self
    }

    pub fn with_evidence(mut self, evidence: serde_json::Value) -> Self {
        self.evidence = evidence;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub claim: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<SearchBudget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub claims: Vec<Claim>,
}

impl VerificationReport {
    /// Sorts claims by id and derives the overall status.
    pub fn new(claim: impl Into<String>, mut claims: Vec<Claim>) -> Self {
        claims.sort_by(|a, b| a.id.cmp(&b.id));
        let status = claims
            .iter()
            .fold(Status::Verified, |acc, c| acc.combine(c.status));
        VerificationReport {
            schema: SCHEMA_VERSION,
            claim: claim.into(),
            status,
            verdict: None,
            params: serde_json::Value::Null,
            budgets: None,
            notes: Vec::new(),
            claims,
        }
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_budgets(mut self, budgets: SearchBudget) -> Self {
        self.budgets = Some(budgets);
        self
    }

    pub fn with_verdict(mut self, verdict: impl Into<String>) -> Self {
        self.verdict = Some(verdict.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Concatenates reports, prefixing each claim id with its part name.
    pub fn merge(claim: impl Into<String>, parts: Vec<(String, VerificationReport)>) -> Self {
        let mut claims = Vec::new();
        let mut params = serde_json::Map::new();
        let mut notes = Vec::new();
        let mut budgets = None;
        for (prefix, r) in parts {
            for mut c in r.claims {
                c.id = format!("{prefix}/{}", c.id);
                claims.push(c);
            }
            if !r.params.is_null() {
                params.insert(prefix.clone(), r.params);
            }
            notes.extend(r.notes.into_iter().map(|n| format!("{prefix}: {n}")));
            budgets = budgets.or(r.budgets);
        }
        let mut merged =
            VerificationReport::new(claim, claims).with_params(serde_json::Value::Object(params));
        merged.notes = notes;
        merged.budgets = budgets;
        merged
    }

    pub fn count(&self, status: Status) -> usize {
        self.claims.iter().filter(|c| c.status == status).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Plain-text rendering: one line per claim.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} [{}]\n", self.claim, self.status.as_str());
        if let Some(v) = &self.verdict {
            out.push_str(&format!("verdict: {v}\n"));
        }
        for c in &self.claims {
            out.push_str(&format!(
                "{:<9} {}  {}",
                c.status.as_str(),
                c.id,
                c.statement
            ));
            if let Some(d) = &c.detail {
                out.push_str(&format!("  ({d})"));
            }
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str(&format!(
            "{} verified, {} refuted, {} unknown\n",
            self.count(Status::Verified),
            self.count(Status::Refuted),
            self.count(Status::Unknown)
        ));
        out
    }

    /// Re-verifies every embedded witness and exclusion from scratch.
    pub fn recheck(&self) -> RecheckSummary {
        let budget = self.budgets.clone().unwrap_or_default();
        let mut summary = RecheckSummary::default();
        if self.schema != SCHEMA_VERSION {
            summary
                .failures
                .push(format!("unsupported schema {}", self.schema));
        }
        let derived = self
            .claims
            .iter()
            .fold(Status::Verified, |acc, c| acc.combine(c.status));
        if derived != self.status {
            summary.failures.push(format!(
                "overall status {} does not match claims ({})",
                self.status.as_str(),
                derived.as_str()
            ));
        }
        for c in &self.claims {
            for (i, w) in c.witnesses.iter().enumerate() {
                summary.witnesses += 1;
                if let Err(e) = w.recheck() {
                    summary.failures.push(format!("{} witness {i}: {e}", c.id));
                }
            }
            for (i, x) in c.exclusions.iter().enumerate() {
                summary.exclusions += 1;
                if let Err(e) = x.recheck(&budget) {
                    summary
                        .failures
                        .push(format!("{} exclusion {i}: {e}", c.id));
                }
            }
        }
        summary
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecheckSummary {
    pub witnesses: usize,
    pub exclusions: usize,
    pub failures: Vec<String>,
}

impl RecheckSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run metadata kept out of the deterministic report body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema: u32,
    pub command: Vec<String>,
    pub wall_time_ms: u128,
    pub version: String,
}

/// Zero-padded claim id so lexicographic order matches numeric order.
pub fn claim_id(prefix: &str, parts: &[i64]) -> String {
    let mut id = prefix.to_string();
    for p in parts {
        let sign = if *p < 0 { 'm' } else { 'p' };
        id.push_str(&format!("/{sign}{:06}", p.unsigned_abs()));
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setspec::SetSpec;

    #[test]
    fn status_combination() {
        use Status::*;
        assert_eq!(Verified.combine(Unknown), Unknown);
        assert_eq!(Unknown.combine(Refuted), Refuted);
        assert_eq!(Verified.combine(Verified), Verified);
    }

    #[test]
    fn claims_sorted_and_status_derived() {
        let r = VerificationReport::new(
            "demo",
            vec![
                Claim::new("b", "second", Status::Unknown),
                Claim::new("a", "first", Status::Verified),
            ],
        );
        assert_eq!(r.claims[0].id, "a");
        assert_eq!(r.status, Status::Unknown);
        let text = r.to_text();
        assert!(text.contains("1 verified, 0 refuted, 1 unknown"));
    }

    #[test]
    fn claim_ids_sort_numerically() {
        let mut ids = [
            claim_id("g", &[10, 2]),
            claim_id("g", &[9, 3]),
            claim_id("g", &[-1, 1]),
        ];
        ids.sort();
        assert_eq!(ids[0], claim_id("g", &[-1, 1]));
        assert_eq!(ids[1], claim_id("g", &[9, 3]));
    }

    #[test]
    fn recheck_catches_tampering() {
        let s = SetSpec::residue(9, &[0, 4, 5]).unwrap();
        let z = AmbientGroup::Integers;
        let w = DecompositionWitness {
            group: z.clone(),
            target: GroupElement::int(1),
            summands: vec![GroupElement::int(5), GroupElement::int(-4)],
            sets: vec![s.clone(), s.clone()],
        };
        let x = ExclusionRecord {
            group: z,
            target: GroupElement::int(1),
            sets: vec![s],
            proof: ExclusionProof::Exact,
        };
        let claim = Claim::new("c", "demo", Status::Verified)
            .with_witnesses(vec![w.clone()])
            .with_exclusions(vec![x]);
        let report = VerificationReport::new("demo", vec![claim]);
        let summary = report.recheck();
        assert!(summary.ok(), "{:?}", summary.failures);
        assert_eq!((summary.witnesses, summary.exclusions), (1, 1));

        let mut bad = report.clone();
        bad.claims[0].witnesses[0].summands[1] = GroupElement::int(-3);
        assert!(!bad.recheck().ok());
        let mut bad = report;
        bad.claims[0].exclusions[0].target = GroupElement::int(4);
        assert!(!bad.recheck().ok());
    }

    #[test]
    fn merge_prefixes_ids() {
        let a = VerificationReport::new("a", vec![Claim::new("x", "x", Status::Verified)])
            .with_params(serde_json::json!({"k": 1}));
        let b = VerificationReport::new("b", vec![Claim::new("x", "x", Status::Unknown)])
            .with_note("hm");
        let m = VerificationReport::merge("ab", vec![("a".into(), a), ("b".into(), b)]);
        assert_eq!(
            m.claims.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
            vec!["a/x", "b/x"]
        );
        assert_eq!(m.status, Status::Unknown);
        assert_eq!(m.params["a"]["k"], 1);
        assert_eq!(m.notes, vec!["b: hm".to_string()]);
    }

    #[test]
    fn json_round_trip() {
        let report = VerificationReport::new("demo", vec![Claim::new("a", "x", Status::Verified)])
            .with_verdict("ok");
        let back = VerificationReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }
}
