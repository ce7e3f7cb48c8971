//! Certified reproductions of the three counterexample families:
//! the 3-adic square-root-of-7 chain in ℤ, the coordinate boxes in a
//! (truncated) countable product of cyclic groups, and the shrinking
//! intervals in ℚ.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::groups::{AmbientGroup, GroupElement};
use crate::report::{claim_id, Claim, ExclusionRecord, Status, VerificationReport};
use crate::setspec::{
    intersect, n_fold_star, prefix_sum_membership, sumset, BoxSet, DecompositionWitness,
    Membership, ResidueSet, SearchBudget, SetError, SetSpec, SymmetricInterval,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExampleError {
    #[error("p = {0} must be an odd prime")]
    BadPrime(u64),
    #[error("p = {p} divides a = {a}")]
    PrimeDividesTarget { p: u64, a: BigInt },
    #[error("{a} is not a quadratic residue mod {p}")]
    NotResidue { a: BigInt, p: u64 },
    #[error("level k must be at least 1")]
    ZeroLevel,
    #[error("g must be nonzero")]
    ZeroProbe,
    #[error("n must be at least 1")]
    ZeroMultiple,
    #[error("expected {expected} indices, got {got}")]
    ListLength { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// A square root of `a` modulo `p^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselWitness {
    pub p: u64,
    #[serde(with = "crate::serde_util::bigint")]
    pub a: BigInt,
    pub k: u32,
    #[serde(with = "crate::serde_util::bigint")]
    pub modulus: BigInt,
    #[serde(with = "crate::serde_util::bigint")]
    pub root: BigInt,
}

impl HenselWitness {
    /// `root² ≡ a (mod p^k)` and `p ∤ 2·root`.
    pub fn check(&self) -> bool {
        let unit = !(&self.root * 2u32)
            .mod_floor(&BigInt::from(self.p))
            .is_zero();
        unit && (&self.root * &self.root - &self.a)
            .mod_floor(&self.modulus)
            .is_zero()
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

/// Inverse of `x` modulo `m`, if it exists.
pub fn mod_inverse(x: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = x.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

/// Square roots of `a` modulo `p, p², …, p^k` by Newton lifting.
///
/// The level-1 root is `min(r, p − r)`; each later root is the unique lift of
/// the previous one, so the whole chain is reproducible.
pub fn hensel_chain(a: &BigInt, p: u64, k: u32) -> Result<Vec<HenselWitness>, ExampleError> {
    if p == 2 || !is_prime(p) {
        return Err(ExampleError::BadPrime(p));
    }
    if k == 0 {
        return Err(ExampleError::ZeroLevel);
    }
    let pb = BigInt::from(p);
    if a.mod_floor(&pb).is_zero() {
        return Err(ExampleError::PrimeDividesTarget { p, a: a.clone() });
    }
    let a1 = a.mod_floor(&pb).to_u64().expect("residue below p");
    let r = (1..p)
        .find(|r| (r * r) % p == a1)
        .ok_or_else(|| ExampleError::NotResidue { a: a.clone(), p })?;
    let mut root = BigInt::from(r.min(p - r));
    let mut modulus = pb.clone();
    let mut out = vec![HenselWitness {
        p,
        a: a.clone(),
        k: 1,
        modulus: modulus.clone(),
        root: root.clone(),
    }];
    for level in 2..=k {
        modulus *= &pb;
        let inv = mod_inverse(&(&root * 2u32), &modulus).expect("2c is a unit");
        root = (&root - (&root * &root - a) * inv).mod_floor(&modulus);
        out.push(HenselWitness {
            p,
            a: a.clone(),
            k: level,
            modulus: modulus.clone(),
            root: root.clone(),
        });
    }
    Ok(out)
}

pub fn hensel_sqrt(a: &BigInt, p: u64, k: u32) -> Result<HenselWitness, ExampleError> {
    Ok(hensel_chain(a, p, k)?.pop().expect("k ≥ 1"))
}

/// `S(k) = {x : x ≡ 0 or x ≡ ±√a (mod p^k)}`.
pub fn sqrt_set(a: &BigInt, p: u64, k: u32) -> Result<SetSpec, ExampleError> {
    let w = hensel_sqrt(a, p, k)?;
    let other = &w.modulus - &w.root;
    Ok(SetSpec::Residue(ResidueSet::new(
        w.modulus,
        [BigInt::zero(), w.root, other],
    )?))
}

pub fn sqrt7_set(k: u32) -> Result<SetSpec, ExampleError> {
    sqrt_set(&BigInt::from(7), 3, k)
}

fn three_adic_valuation(x: &BigInt) -> u32 {
    let three = BigInt::from(3);
    let mut x = x.clone();
    let mut v = 0;
    while !x.is_zero() && x.mod_floor(&three).is_zero() {
        x /= &three;
        v += 1;
    }
    v
}

/// Smallest `k` with `3^k` dividing none of `g² − 7m²`, `0 ≤ m ≤ n`.
pub fn sqrt7_level(g: &BigInt, n: usize) -> u32 {
    (0..=n)
        .map(|m| three_adic_valuation(&(g * g - BigInt::from(7 * m * m))))
        .max()
        .unwrap_or(0)
        + 1
}

/// Smallest `k` with `3^k > max(g², 7n²)`.
pub fn sqrt7_bound_level(g: &BigInt, n: usize) -> u32 {
    let target = (g * g).max(BigInt::from(7 * n * n));
    let mut k = 0;
    let mut pow = BigInt::one();
    while pow <= target {
        pow *= 3;
        k += 1;
    }
    k
}

fn exclusion(
    group: &AmbientGroup,
    g: &GroupElement,
    sets: Vec<SetSpec>,
    budget: &SearchBudget,
) -> Result<Result<ExclusionRecord, Membership>, ExampleError> {
    match prefix_sum_membership(group, g, &sets, budget)? {
        Membership::No { proof } => Ok(Ok(ExclusionRecord {
            group: group.clone(),
            target: g.clone(),
            sets,
            proof,
        })),
        other => Ok(Err(other)),
    }
}

/// One claim: `g ∉ n·S(k)*` for the level `k` read off from `g² − 7m²`,
/// plus the same at the coarser bound `3^k > max(g², 7n²)`.
pub fn sqrt7_necessary_claim(g: &BigInt, n: usize) -> Result<Claim, ExampleError> {
    if g.is_zero() {
        return Err(ExampleError::ZeroProbe);
    }
    if n == 0 {
        return Err(ExampleError::ZeroMultiple);
    }
    let budget = SearchBudget::default();
    let z = AmbientGroup::Integers;
    let ge = GroupElement::Int(g.clone());
    let k = sqrt7_level(g, n);
    let kb = sqrt7_bound_level(g, n);
    let mut exclusions = Vec::new();
    let mut problems = Vec::new();
    for level in [k, kb] {
        let set = sqrt7_set(level)?;
        match exclusion(&z, &ge, vec![set; n], &budget)? {
            Ok(x) => exclusions.push(x),
            Err(m) => problems.push(format!("level {level}: {m:?}")),
        }
    }
    if k > kb {
        problems.push(format!("level {k} exceeds the bound level {kb}"));
    }
    if kb == k {
        exclusions.pop();
    }
    let status = if problems.is_empty() {
        Status::Verified
    } else {
        Status::Refuted
    };
    let values: Vec<String> = (0..=n)
        .map(|m| (g * g - BigInt::from(7 * m * m)).to_string())
        .collect();
    let mut claim = Claim::new(
        claim_id(
            "sqrt7-necessary",
            &[g.to_i64().unwrap_or(i64::MAX), n as i64],
        ),
        format!("{g} ∉ {n}·S({k})*"),
        status,
    )
    .with_exclusions(exclusions)
    .with_evidence(json!({ "k": k, "bound_k": kb, "g2_minus_7m2": values }));
    if !problems.is_empty() {
        claim = claim.with_detail(problems.join("; "));
    }
    Ok(claim)
}

pub fn verify_sqrt7_necessary(g: &BigInt, n: usize) -> Result<VerificationReport, ExampleError> {
    let claim = sqrt7_necessary_claim(g, n)?;
    Ok(VerificationReport::new("sqrt7-necessary", vec![claim])
        .with_params(json!({ "g": g.to_string(), "n": n })))
}

/// One claim per `(|g|, n)` with `1 ≤ |g| ≤ gmax`, `1 ≤ n ≤ nmax`; each
/// carries exclusions for both `g` and `−g`.
pub fn verify_sqrt7_necessary_range(
    gmax: u64,
    nmax: usize,
) -> Result<VerificationReport, ExampleError> {
    if gmax == 0 || nmax == 0 {
        return Err(ExampleError::BadParam(
            "gmax and nmax must be positive".into(),
        ));
    }
    let mut claims = Vec::new();
    for a in 1..=gmax as i64 {
        for n in 1..=nmax {
            let pos = sqrt7_necessary_claim(&BigInt::from(a), n)?;
            let neg = sqrt7_necessary_claim(&BigInt::from(-a), n)?;
            let mut claim = pos.clone();
            claim.statement = format!("±{}", pos.statement);
            claim.status = pos.status.combine(neg.status);
            claim.exclusions.extend(neg.exclusions);
            if let Some(d) = neg.detail {
                claim.detail = Some(match claim.detail {
                    Some(p) => format!("{p}; -{a}: {d}"),
                    None => format!("-{a}: {d}"),
                });
            }
            claims.push(claim);
        }
    }
    Ok(VerificationReport::new("sqrt7-necessary", claims)
        .with_params(json!({ "gmax": gmax, "nmax": nmax }))
        .with_budgets(SearchBudget::default()))
}

/// Whether `S(m₀)* + S(m₁)* + ⋯` is all of ℤ, by exact residue-class sums.
/// Returns the modulus of the summed set and whether every class is present.
pub fn sqrt7_sum_covers(m0: u32, ms: &[u32]) -> Result<(BigInt, bool), ExampleError> {
    let mut acc = sqrt7_set(m0)?;
    for &m in ms {
        acc = sumset(&acc, &sqrt7_set(m)?)?;
    }
    match acc {
        SetSpec::Residue(r) => Ok((r.modulus().clone(), r.is_full())),
        _ => unreachable!("residue sums stay residue sets"),
    }
}

/// The explicit decomposition of `g` into `S(m₀)* + S(m₁)* + … + S(m_{3^{m₀}})*`.
///
/// With `c` the canonical root mod `3^{m₀}` and `h ≡ g·c⁻¹`, the first `h`
/// summands after the corrector are roots `cᵢ ≡ c (mod 3^{m₀})` and the rest
/// are 0; the corrector `g − Σ cᵢ` is a multiple of `3^{m₀}`.
pub fn sqrt7_witness(
    m0: u32,
    ms: &[u32],
    g: &BigInt,
) -> Result<DecompositionWitness, ExampleError> {
    let slots = 3usize.pow(m0);
    if ms.len() != slots {
        return Err(ExampleError::ListLength {
            expected: slots,
            got: ms.len(),
        });
    }
    let seven = BigInt::from(7);
    let base = hensel_sqrt(&seven, 3, m0)?;
    let inv = mod_inverse(&base.root, &base.modulus).expect("root is a unit");
    let h = (g * inv)
        .mod_floor(&base.modulus)
        .to_usize()
        .expect("h < 3^m0");
    let mut summands = vec![GroupElement::int(0)];
    let mut sets = vec![sqrt7_set(m0)?];
    let mut total = BigInt::zero();
    for (i, &m) in ms.iter().enumerate() {
        // Levels below m₀ hold every lift of the level-m₀ root.
        let ci = if m >= m0 {
            hensel_sqrt(&seven, 3, m)?.root
        } else {
            base.root.clone()
        };
        let s = if i < h { ci } else { BigInt::zero() };
        total += &s;
        summands.push(GroupElement::Int(s));
        sets.push(sqrt7_set(m)?);
    }
    summands[0] = GroupElement::Int(g - total);
    Ok(DecompositionWitness {
        group: AmbientGroup::Integers,
        target: GroupElement::Int(g.clone()),
        summands,
        sets,
    })
}

pub fn verify_sqrt7_u_full(
    m0: u32,
    ms: &[u32],
    samples: &[BigInt],
) -> Result<VerificationReport, ExampleError> {
    if m0 == 0 {
        return Err(ExampleError::ZeroLevel);
    }
    let slots = 3usize.pow(m0);
    if ms.len() != slots {
        return Err(ExampleError::ListLength {
            expected: slots,
            got: ms.len(),
        });
    }
    let (modulus, full) = sqrt7_sum_covers(m0, ms)?;
    let top = ms.iter().copied().chain([m0]).max().unwrap();
    let mut claims = vec![Claim::new(
        "sum-is-z",
        format!("S({m0})* + Σ S(mᵢ)* covers every class mod 3^{top}"),
        if full {
            Status::Verified
        } else {
            Status::Refuted
        },
    )
    .with_evidence(json!({ "summed_modulus": modulus.to_string() }))];
    for g in samples {
        let w = sqrt7_witness(m0, ms, g)?;
        let status = if w.recheck().is_ok() {
            Status::Verified
        } else {
            Status::Refuted
        };
        claims.push(
            Claim::new(
                claim_id("witness", &[g.to_i64().unwrap_or(i64::MAX)]),
                format!("{g} decomposes"),
                status,
            )
            .with_witnesses(vec![w]),
        );
    }
    Ok(VerificationReport::new("sqrt7-u-full", claims).with_params(json!({ "m0": m0, "ms": ms })))
}

/// Box over `∏_{c≤N} ℤ/c` with coordinates `1..m` in the image of `{−1, 0, 1}`.
pub fn product_set(n: usize, m: usize) -> Result<SetSpec, ExampleError> {
    if m == 0 || m > n {
        return Err(ExampleError::BadParam(format!(
            "need 1 ≤ m ≤ N, got m = {m}, N = {n}"
        )));
    }
    let allowed = (1..=m as u64)
        .map(|c| [0, 1 % c, (c - 1) % c].into_iter().collect())
        .collect();
    Ok(SetSpec::Box(BoxSet::new(n, allowed)?))
}

/// `{x mod c : |x| ≤ bound}`.
fn small_residues(c: u64, bound: u64) -> BTreeSet<u64> {
    (0..=bound).flat_map(|x| [x % c, (c - x % c) % c]).collect()
}

/// The decomposition of `g` into `S(m₀)* + S(m₁)* + ⋯ + S(m_{m₀})*`: the
/// `S(m₀)` summand carries the coordinates past `m₀`, and summand `i` puts a
/// 1 in coordinate `c ≤ m₀` whenever `i ≤ g_c`.
pub fn product_witness(
    n: usize,
    m0: usize,
    ms: &[usize],
    g: &[u64],
) -> Result<DecompositionWitness, ExampleError> {
    if ms.len() != m0 {
        return Err(ExampleError::ListLength {
            expected: m0,
            got: ms.len(),
        });
    }
    let group = AmbientGroup::product_mod(n).map_err(SetError::from)?;
    let ge = GroupElement::Residues(g.to_vec());
    group.check(&ge).map_err(SetError::from)?;
    let mut first = vec![0u64; n];
    first[m0..].copy_from_slice(&g[m0..]);
    let mut summands = vec![GroupElement::Residues(first)];
    let mut sets = vec![product_set(n, m0)?];
    for (i, &m) in ms.iter().enumerate() {
        let s: Vec<u64> = (0..n)
            .map(|c| u64::from(c < m0 && (i as u64) < g[c]))
            .collect();
        summands.push(GroupElement::Residues(s));
        sets.push(product_set(n, m)?);
    }
    Ok(DecompositionWitness {
        group,
        target: ge,
        summands,
        sets,
    })
}

pub fn verify_product_sum_full(
    n: usize,
    m0: usize,
    ms: &[usize],
    samples: &[Vec<u64>],
) -> Result<VerificationReport, ExampleError> {
    if ms.len() != m0 {
        return Err(ExampleError::ListLength {
            expected: m0,
            got: ms.len(),
        });
    }
    let mut acc = product_set(n, m0)?;
    for &m in ms {
        acc = sumset(&acc, &product_set(n, m)?)?;
    }
    let full = match &acc {
        SetSpec::Box(b) => (1..=n).all(|c| b.allowed_at(c).len() == c),
        _ => false,
    };
    let mut claims = vec![Claim::new(
        "sum-is-g",
        format!("S({m0})* + Σ S(mᵢ)* is all of the truncated product (N = {n})"),
        if full {
            Status::Verified
        } else {
            Status::Refuted
        },
    )];
    for (j, g) in samples.iter().enumerate() {
        let w = product_witness(n, m0, ms, g)?;
        let status = if w.recheck().is_ok() {
            Status::Verified
        } else {
            Status::Refuted
        };
        claims.push(
            Claim::new(
                claim_id("witness", &[j as i64]),
                format!("{g:?} decomposes"),
                status,
            )
            .with_witnesses(vec![w]),
        );
    }
    Ok(VerificationReport::new("product-sum-full", claims)
        .with_params(json!({ "N": n, "m0": m0, "ms": ms })))
}

/// Result of intersecting `n·S(m)*` over `m ≤ N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductUnionSmall {
    pub intersection: SetSpec,
    pub matches_small_box: bool,
    /// An element of the truncated product outside the intersection.
    pub exhibit: Option<Vec<u64>>,
    /// True when the intersection is the whole truncated group, which the
    /// infinite product never allows.
    pub truncation_artifact: bool,
}

pub fn product_union_small(n: usize, k: usize) -> Result<ProductUnionSmall, ExampleError> {
    if n == 0 || k == 0 {
        return Err(ExampleError::BadParam("N and n must be positive".into()));
    }
    let mut acc: Option<SetSpec> = None;
    for m in 1..=n {
        let nk = n_fold_star(&product_set(n, m)?, k)?.set;
        acc = Some(match acc {
            None => nk,
            Some(a) => intersect(&a, &nk)?,
        });
    }
    let intersection = acc.expect("N ≥ 1");
    let SetSpec::Box(b) = &intersection else {
        unreachable!("box algebra stays in boxes")
    };
    let matches_small_box = (1..=n).all(|c| b.allowed_at(c) == small_residues(c as u64, k as u64));
    let exhibit = (1..=n).find_map(|c| {
        let allowed = b.allowed_at(c);
        (0..c as u64).find(|v| !allowed.contains(v)).map(|v| {
            let mut e = vec![0u64; n];
            e[c - 1] = v;
            e
        })
    });
    let truncation_artifact = exhibit.is_none();
    Ok(ProductUnionSmall {
        intersection,
        matches_small_box,
        exhibit,
        truncation_artifact,
    })
}

pub fn verify_product_union_small(n: usize, k: usize) -> Result<VerificationReport, ExampleError> {
    let r = product_union_small(n, k)?;
    let mut claims = vec![Claim::new(
        "small-box",
        format!("∩ {k}·S(m)* over m ≤ {n} is the box of residues of integers with |x| ≤ {k}"),
        if r.matches_small_box {
            Status::Verified
        } else {
            Status::Refuted
        },
    )];
    let proper = Claim::new(
        "proper",
        "the intersection is a proper subset of the truncated product",
        match r.exhibit {
            Some(_) => Status::Verified,
            None => Status::Unknown,
        },
    )
    .with_evidence(json!({ "exhibit": r.exhibit, "truncation_artifact": r.truncation_artifact }));
    claims.push(match r.truncation_artifact {
        true => {
            proper.with_detail("truncation artifact: every residue mod c ≤ N is small at this N")
        }
        false => proper,
    });
    Ok(VerificationReport::new("product-union-small", claims)
        .with_params(json!({ "N": n, "n": k })))
}

/// `1 ∉ (−1, 1)` but `1 ∈ (−1, 1) + (−ε, ε)` for every `ε = 2^{−i}`, `i ≤ steps`.
pub fn verify_interval_example(steps: u32) -> Result<VerificationReport, ExampleError> {
    let q = AmbientGroup::Rationals;
    let one = BigRational::one();
    let g = GroupElement::Rational(one.clone());
    let s0 = SetSpec::Interval(SymmetricInterval::new(one.clone())?);
    let budget = SearchBudget::default();
    let mut claims = Vec::new();
    let base = exclusion(&q, &g, vec![s0.clone()], &budget)?;
    claims.push(match base {
        Ok(x) => Claim::new("base", "1 ∉ (−1, 1)", Status::Verified).with_exclusions(vec![x]),
        Err(_) => Claim::new("base", "1 ∉ (−1, 1)", Status::Refuted),
    });
    for i in 0..=steps {
        let eps = BigRational::new(BigInt::one(), BigInt::one() << i);
        let half = &eps / BigRational::from_integer(2.into());
        let w = DecompositionWitness {
            group: q.clone(),
            target: g.clone(),
            summands: vec![
                GroupElement::Rational(&one - &half),
                GroupElement::Rational(half),
            ],
            sets: vec![
                s0.clone(),
                SetSpec::Interval(SymmetricInterval::new(eps.clone())?),
            ],
        };
        let status = if w.recheck().is_ok() {
            Status::Verified
        } else {
            Status::Refuted
        };
        claims.push(
            Claim::new(
                claim_id("eps", &[i as i64]),
                format!("1 ∈ (−1, 1) + (−2^-{i}, 2^-{i})"),
                status,
            )
            .with_witnesses(vec![w]),
        );
    }
    Ok(VerificationReport::new("interval", claims).with_params(json!({ "steps": steps })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn hensel_small_levels() {
        let roots: Vec<BigInt> = hensel_chain(&big(7), 3, 3)
            .unwrap()
            .into_iter()
            .map(|w| w.root)
            .collect();
        assert_eq!(roots, vec![big(1), big(4), big(13)]);
        assert!(matches!(
            hensel_sqrt(&big(2), 3, 1),
            Err(ExampleError::NotResidue { .. })
        ));
        assert!(matches!(
            hensel_sqrt(&big(7), 3, 0),
            Err(ExampleError::ZeroLevel)
        ));
        assert!(matches!(
            hensel_sqrt(&big(7), 9, 2),
            Err(ExampleError::BadPrime(9))
        ));
        assert!(matches!(
            hensel_sqrt(&big(6), 3, 2),
            Err(ExampleError::PrimeDividesTarget { .. })
        ));
        let w = hensel_sqrt(&big(2), 7, 5).unwrap();
        assert!(w.check());
    }

    #[test]
    fn sqrt7_sets() {
        assert_eq!(
            sqrt7_set(1).unwrap(),
            SetSpec::residue(3, &[0, 1, 2]).unwrap()
        );
        assert_eq!(
            sqrt7_set(2).unwrap(),
            SetSpec::residue(9, &[0, 4, 5]).unwrap()
        );
        assert_eq!(
            sqrt7_set(3).unwrap(),
            SetSpec::residue(27, &[0, 13, 14]).unwrap()
        );
    }

    #[test]
    fn sqrt7_levels() {
        assert_eq!(sqrt7_level(&big(1), 1), 2);
        assert_eq!(sqrt7_level(&big(3), 2), 3);
        assert_eq!(sqrt7_level(&big(7), 2), 2);
        assert_eq!(sqrt7_bound_level(&big(7), 2), 4);
    }

    #[test]
    fn necessary_claims() {
        let r = verify_sqrt7_necessary(&big(1), 1).unwrap();
        assert_eq!(r.status, Status::Verified);
        assert_eq!(r.claims[0].evidence["k"], 2);
        let r = verify_sqrt7_necessary(&big(3), 2).unwrap();
        assert_eq!(r.status, Status::Verified);
        assert!(r.recheck().ok());
        assert!(matches!(
            verify_sqrt7_necessary(&big(0), 1),
            Err(ExampleError::ZeroProbe)
        ));
    }

    #[test]
    fn u_full_witnesses() {
        let w = sqrt7_witness(2, &[2; 9], &big(1)).unwrap();
        let values: Vec<i64> = w
            .summands
            .iter()
            .map(|s| s.as_int().unwrap().try_into().unwrap())
            .collect();
        assert_eq!(values, vec![-27, 4, 4, 4, 4, 4, 4, 4, 0, 0]);
        assert!(w.recheck().is_ok());
        let mut ms = vec![3; 9];
        ms[0] = 3;
        let w = sqrt7_witness(2, &ms, &big(5)).unwrap();
        assert_eq!(w.summands[1], GroupElement::int(13));
        assert_eq!(
            w.summands
                .iter()
                .filter(|s| **s == GroupElement::int(13))
                .count(),
            8
        );
        assert!(w.recheck().is_ok());
        let r = verify_sqrt7_u_full(1, &[4, 1, 2], &[big(-5), big(11)]).unwrap();
        assert_eq!(r.status, Status::Verified);
        assert!(verify_sqrt7_u_full(2, &[2; 8], &[]).is_err());
    }

    #[test]
    fn product_sets() {
        let coords = |s: &SetSpec, c: usize| match s {
            SetSpec::Box(b) => b.allowed_at(c).into_iter().collect::<Vec<_>>(),
            _ => panic!(),
        };
        let s = product_set(3, 1).unwrap();
        assert_eq!(coords(&s, 1), vec![0]);
        assert_eq!(coords(&s, 3), vec![0, 1, 2]);
        assert_eq!(coords(&product_set(4, 3).unwrap(), 3), vec![0, 1, 2]);
        assert_eq!(coords(&product_set(4, 4).unwrap(), 4), vec![0, 1, 3]);
        assert!(product_set(3, 4).is_err());
    }

    #[test]
    fn product_witness_examples() {
        let w = product_witness(6, 2, &[3, 6], &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(w.summands.len(), 3);
        assert!(w.recheck().is_ok());
        let w = product_witness(6, 2, &[2, 2], &[0; 6]).unwrap();
        assert!(w
            .summands
            .iter()
            .all(|s| s == &GroupElement::Residues(vec![0; 6])));
        let r = verify_product_sum_full(6, 3, &[1, 4, 6], &[vec![0, 1, 2, 3, 4, 5]]).unwrap();
        assert_eq!(r.status, Status::Verified);
    }

    #[test]
    fn product_union_examples() {
        let r = product_union_small(6, 1).unwrap();
        assert!(r.matches_small_box);
        assert_eq!(r.exhibit, Some(vec![0, 0, 0, 2, 0, 0]));
        let r2 = product_union_small(6, 2).unwrap();
        let SetSpec::Box(b) = &r2.intersection else {
            panic!()
        };
        assert_eq!(
            b.allowed_at(6).into_iter().collect::<Vec<_>>(),
            vec![0, 1, 2, 4, 5]
        );
        assert!(product_union_small(6, 6).unwrap().truncation_artifact);
        assert_eq!(
            verify_product_union_small(6, 6).unwrap().status,
            Status::Unknown
        );
    }

    #[test]
    fn interval_example() {
        let r = verify_interval_example(10).unwrap();
        assert_eq!(r.status, Status::Verified);
        assert_eq!(r.claims.len(), 12);
        let eps2 = r
            .claims
            .iter()
            .find(|c| c.id == claim_id("eps", &[2]))
            .unwrap();
        assert_eq!(eps2.witnesses[0].summands[0], GroupElement::rational(7, 8));
        assert!(r.recheck().ok());
    }

    #[test]
    fn necessary_range_pairs_signs() {
        let r = verify_sqrt7_necessary_range(3, 2).unwrap();
        assert_eq!(r.claims.len(), 6);
        assert_eq!(r.status, Status::Verified);
        assert!(r.claims.iter().all(|c| c.exclusions.len() >= 2));
        assert!(r.recheck().ok());
        assert!(verify_sqrt7_necessary_range(0, 5).is_err());
    }
}
