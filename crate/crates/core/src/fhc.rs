//! Frequent Hypercyclicity Criterion construction for weighted shifts on
//! `ℓ^p`: a dense sequence `x_k`, scalars `a_k`, indices `n_k`, the vector
//! `x = Σ a_k S^{n_k} x_k` and its two-sided orbit family.

use crate::error::{Error, Result};
use crate::scalar::real;
use crate::series;
use crate::shift::{apply_right_inverse, apply_shift, WeightSequence};
use crate::space::{fnorm, SpaceFamily, SpaceSpec, TruncatedVector};
use serde::Serialize;

fn zigzag(rank: i64) -> i64 {
    if rank % 2 == 1 {
        (rank + 1) / 2
    } else {
        -rank / 2
    }
}

fn zigzag_rank(m: i64) -> i64 {
    if m > 0 {
        2 * m - 1
    } else {
        -2 * m
    }
}

/// Numerator tuples of length `s` with `max |m_i| = big`, last entry
/// nonzero and (for `q > 0`) some odd entry, in zigzag-lexicographic order.
fn class_members(s: usize, q: u32, big: i64) -> Vec<Vec<i64>> {
    if s == 0 {
        return if q == 0 && big == 0 { vec![vec![]] } else { vec![] };
    }
    if big == 0 {
        return vec![];
    }
    let base = 2 * big + 1;
    let mut ranks = vec![0i64; s];
    let mut out = Vec::new();
    loop {
        let m: Vec<i64> = ranks.iter().map(|r| zigzag(*r)).collect();
        let ok = m[s - 1] != 0
            && m.iter().map(|x| x.abs()).max() == Some(big)
            && (q == 0 || m.iter().any(|x| x % 2 != 0));
        if ok {
            out.push(m);
        }
        let mut i = s;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            ranks[i] += 1;
            if ranks[i] < base {
                break;
            }
            ranks[i] = 0;
        }
    }
}

/// Classes of complexity `c = s + q + M` in enumeration order.
fn classes(c: i64) -> impl Iterator<Item = (usize, u32, i64)> {
    (0..=c).flat_map(move |s| (0..=(c - s)).map(move |q| (s as usize, q as u32, c - s - q)))
}

fn to_vector(m: &[i64], q: u32) -> TruncatedVector {
    if m.is_empty() {
        return TruncatedVector::zeros(0, 0);
    }
    let scale = 0.5f64.powi(q as i32);
    let coeffs: Vec<f64> = m.iter().map(|x| *x as f64 * scale).collect();
    TruncatedVector::from_real(0, &coeffs).expect("finite dyadic coefficients")
}

/// `index`-th finite-support dyadic vector (1-based): ordered by support
/// length plus dyadic level plus largest numerator, then by support
/// length, then level, then zigzag-lexicographically (0, 1, -1, 2, -2, …).
pub fn enumerate_dense(space: &SpaceSpec, index: u64) -> Result<TruncatedVector> {
    if !matches!(space.family(), SpaceFamily::Lp { .. }) {
        return Err(Error::InvalidArgument("dense enumeration is defined on ℓ^p".into()));
    }
    if index == 0 {
        return Err(Error::InvalidArgument("enumeration is 1-based".into()));
    }
    let mut remaining = index - 1;
    for c in 0.. {
        for (s, q, big) in classes(c) {
            let members = class_members(s, q, big);
            if (remaining as usize) < members.len() {
                return Ok(to_vector(&members[remaining as usize], q));
            }
            remaining -= members.len() as u64;
        }
    }
    unreachable!()
}

/// Inverse of [`enumerate_dense`] for real dyadic vectors supported in `ℕ`.
pub fn dense_rank(v: &TruncatedVector) -> Option<u64> {
    let t = v.trimmed();
    if t.is_zero() {
        return Some(1);
    }
    if t.lo() < 0 || t.coeffs().iter().any(|c| c.im != 0.0) {
        return None;
    }
    let s = (t.hi() + 1) as usize;
    let mut q = 0u32;
    let nums = loop {
        let scale = 2f64.powi(q as i32);
        let m: Vec<f64> = (0..s as i64).map(|n| t.get(n).re * scale).collect();
        if m.iter().all(|x| x.fract() == 0.0) {
            break m.into_iter().map(|x| x as i64).collect::<Vec<i64>>();
        }
        q += 1;
        if q > 60 {
            return None;
        }
    };
    let big = nums.iter().map(|x| x.abs()).max().unwrap();
    let c = s as i64 + q as i64 + big;
    let mut rank = 0u64;
    for cc in 0..c {
        rank += classes(cc).map(|(s, q, b)| class_members(s, q, b).len() as u64).sum::<u64>();
    }
    for (s2, q2, b2) in classes(c) {
        let members = class_members(s2, q2, b2);
        if (s2, q2) == (s, q) {
            let key: Vec<i64> = nums.iter().map(|x| zigzag_rank(*x)).collect();
            let pos = members.iter().position(|m| m.iter().map(|x| zigzag_rank(*x)).collect::<Vec<_>>() == key)?;
            return Some(rank + pos as u64 + 1);
        }
        rank += members.len() as u64;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AChoice {
    pub a: f64,
    /// `Σ_{n≥0} ‖S^n x_k‖`, including a comparison-test remainder.
    pub s_sum: f64,
    /// `Σ_{n≥0} ‖T^n x_k‖` (finite: `T^n x_k = 0` past the support).
    pub t_sum: f64,
}

fn lp_only(space: &SpaceSpec) -> Result<()> {
    match space.family() {
        SpaceFamily::Lp { .. } => Ok(()),
        _ => Err(Error::InvalidArgument("the criterion construction is implemented on ℓ^p".into())),
    }
}

/// `a_k = min(1, 2^{-k} / max(Σ‖S^n x_k‖, Σ‖T^n x_k‖))`.
pub fn choose_a(space: &SpaceSpec, w: &WeightSequence, x: &TruncatedVector, k: u32, horizon: i64) -> Result<AChoice> {
    lp_only(space)?;
    if w.is_bilateral() {
        return Err(Error::InvalidArgument("the criterion construction uses a unilateral shift".into()));
    }
    let x = x.trimmed();
    if x.is_zero() {
        return Ok(AChoice { a: 1.0, s_sum: 0.0, t_sum: 0.0 });
    }
    let mut t_sum = 0.0;
    let mut v = x.clone();
    while !v.is_zero() {
        t_sum += fnorm(space, &v)?;
        v = apply_shift(w, &v, 1)?.trimmed();
    }
    let mut logs = Vec::with_capacity(horizon as usize + 1);
    let mut v = x.clone();
    for _ in 0..=horizon {
        logs.push(fnorm(space, &v)?.ln());
        v = apply_right_inverse(w, &v, 1)?;
    }
    let rem = series::remainder_bound(&logs, 0).ok_or_else(|| {
        Error::CertificateUnavailable(format!("Σ‖S^n x‖ has no convergent comparison up to n = {horizon}"))
    })?;
    let s_sum = logs.iter().map(|l| l.exp()).sum::<f64>() + rem.bound;
    let a = (0.5f64.powi(k as i32) / s_sum.max(t_sum)).min(1.0);
    Ok(AChoice { a, s_sum, t_sum })
}

/// One inequality of the construction ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub k: u32,
    pub l: u32,
    pub inequality: &'static str,
    pub lhs: f64,
    pub bound: f64,
    pub strict: bool,
}

impl LedgerRow {
    pub fn holds(&self) -> bool {
        if self.strict {
            self.lhs < self.bound
        } else {
            self.lhs <= self.bound
        }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FhcBlock {
    pub k: u32,
    pub enumeration_index: u64,
    #[serde(skip)]
    pub x_k: TruncatedVector,
    pub a: AChoice,
    pub n_k: i64,
    /// Enumeration indices skipped because a series diverged.
    pub skipped: Vec<u64>,
}

/// `a_j S^{n_j} x_j`.
fn block_term(w: &WeightSequence, b: &FhcBlock) -> Result<TruncatedVector> {
    Ok(apply_right_inverse(w, &b.x_k, b.n_k)?.scaled(real(b.a.a)))
}

fn approximation_rows(space: &SpaceSpec, w: &WeightSequence, blocks: &[FhcBlock], k: u32) -> Result<Vec<LedgerRow>> {
    let mut sum = TruncatedVector::zeros(0, 0);
    for b in blocks {
        sum = sum.add(&block_term(w, b)?);
    }
    blocks
        .iter()
        .map(|bl| {
            let image = apply_shift(w, &sum, bl.n_k)?.scaled(real(1.0 / bl.a.a));
            Ok(LedgerRow {
                k,
                l: bl.k,
                inequality: "approximation",
                lhs: fnorm(space, &image.sub(&bl.x_k))?,
                bound: 0.5f64.powi(bl.k as i32),
                strict: true,
            })
        })
        .collect()
}

/// Smallest `n_k > n_{k-1}` meeting the scale bound and every approximation bound.
pub fn choose_n(
    space: &SpaceSpec,
    w: &WeightSequence,
    previous: &[FhcBlock],
    candidate: &FhcBlock,
    n_horizon: i64,
) -> Result<(i64, Vec<LedgerRow>)> {
    let start = previous.last().map_or(1, |b| b.n_k + 1);
    let k = candidate.k;
    let mut last_failure = String::new();
    for n in start..=n_horizon {
        let mut trial = previous.to_vec();
        let mut c = candidate.clone();
        c.n_k = n;
        let scale = LedgerRow {
            k,
            l: k,
            inequality: "scale",
            lhs: fnorm(space, &block_term(w, &c)?)?,
            bound: 0.5f64.powi(k as i32),
            strict: false,
        };
        if !scale.holds() {
            last_failure = format!("‖a_k S^n x_k‖ = {:.4e} > 2^-{k} at n = {n}", scale.lhs);
            continue;
        }
        trial.push(c);
        let rows = approximation_rows(space, w, &trial, k)?;
        if let Some(bad) = rows.iter().find(|r| !r.holds()) {
            last_failure = format!("approximation for l = {}: {:.4e} ≥ {:.4e} at n = {n}", bad.l, bad.lhs, bad.bound);
            continue;
        }
        let mut all = vec![scale];
        all.extend(rows);
        return Ok((n, all));
    }
    Err(Error::HorizonExhausted { horizon: n_horizon, reason: last_failure })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhcOptions {
    /// Horizon for the `Σ‖S^n x_k‖` comparison test.
    pub series_horizon: i64,
    /// Hard limit for the `n_k` search.
    pub n_horizon: i64,
    /// Consecutive enumeration indices that may be skipped.
    pub max_skips: usize,
}

impl Default for FhcOptions {
    fn default() -> Self {
        Self { series_horizon: 400, n_horizon: 10_000, max_skips: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FhcConstruction {
    space: SpaceSpec,
    weights: WeightSequence,
    blocks: Vec<FhcBlock>,
    x: TruncatedVector,
    ledger: Vec<LedgerRow>,
}

impl FhcConstruction {
    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn blocks(&self) -> &[FhcBlock] {
        &self.blocks
    }

    pub fn x(&self) -> &TruncatedVector {
        &self.x
    }

    /// Inequalities recorded while building, plus the final approximation
    /// check with all blocks present (`k = K + 1`... reported as `k = K`).
    pub fn ledger(&self) -> &[LedgerRow] {
        &self.ledger
    }

    pub fn all_hold(&self) -> bool {
        self.ledger.iter().all(LedgerRow::holds)
    }

    /// `u_n = Σ_k a_k S^{n_k+n} x_k` for `n ≥ 1`, `u_n = T^{-n} x` for `n ≤ 0`.
    pub fn u(&self, n: i64) -> Result<TruncatedVector> {
        if n <= 0 {
            return apply_shift(&self.weights, &self.x, -n);
        }
        let mut out = TruncatedVector::zeros(0, 0);
        for b in &self.blocks {
            out = out.add(&apply_right_inverse(&self.weights, &b.x_k, b.n_k + n)?.scaled(real(b.a.a)));
        }
        Ok(out)
    }

    /// `(Σ_{n≥0} ‖T^n x‖, Σ_{n≥1} ‖u_n‖ majorant, Σ_k 2^{1-k})`.
    pub fn convergence_majorants(&self) -> Result<(f64, f64, f64)> {
        let mut forward = 0.0;
        let mut v = self.x.trimmed();
        while !v.is_zero() {
            forward += fnorm(&self.space, &v)?;
            v = apply_shift(&self.weights, &v, 1)?.trimmed();
        }
        let backward: f64 = self.blocks.iter().map(|b| b.a.a * b.a.s_sum).sum();
        let reference: f64 = self.blocks.iter().map(|b| 2.0 * 0.5f64.powi(b.k as i32)).sum();
        Ok((forward, backward, reference))
    }
}

/// Runs the construction for `k = 1..=blocks`.
pub fn assemble(space: &SpaceSpec, w: &WeightSequence, blocks: u32, opts: FhcOptions) -> Result<FhcConstruction> {
    lp_only(space)?;
    if blocks == 0 {
        return Err(Error::InvalidArgument("need at least one block".into()));
    }
    let mut built: Vec<FhcBlock> = Vec::new();
    let mut ledger = Vec::new();
    let mut index = 0u64;
    for k in 1..=blocks {
        let mut skipped = Vec::new();
        let (x_k, a) = loop {
            index += 1;
            let x_k = enumerate_dense(space, index)?;
            match choose_a(space, w, &x_k, k, opts.series_horizon) {
                Ok(a) => break (x_k, a),
                Err(Error::CertificateUnavailable(_)) if skipped.len() < opts.max_skips => skipped.push(index),
                Err(e) => return Err(e),
            }
        };
        let candidate = FhcBlock { k, enumeration_index: index, x_k, a, n_k: 0, skipped };
        let (n_k, rows) = choose_n(space, w, &built, &candidate, opts.n_horizon)?;
        built.push(FhcBlock { n_k, ..candidate });
        ledger.extend(rows);
    }
    let final_rows = approximation_rows(space, w, &built, blocks)?;
    ledger.extend(final_rows);
    let mut x = TruncatedVector::zeros(0, 0);
    for b in &built {
        x = x.add(&block_term(w, b)?);
    }
    Ok(FhcConstruction { space: space.clone(), weights: w.clone(), blocks: built, x, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::distance;
    use proptest::prelude::*;

    fn l2() -> SpaceSpec {
        SpaceSpec::lp(2.0).unwrap()
    }

    #[test]
    fn enumeration_start() {
        assert!(enumerate_dense(&l2(), 1).unwrap().is_zero());
        assert_eq!(enumerate_dense(&l2(), 2).unwrap(), TruncatedVector::unit(0));
        assert_eq!(enumerate_dense(&l2(), 3).unwrap(), TruncatedVector::from_real(0, &[-1.0]).unwrap());
        assert!(enumerate_dense(&SpaceSpec::c0(), 1).is_err());
    }

    #[test]
    fn enumeration_is_injective_on_prefix() {
        let mut seen = std::collections::HashSet::new();
        for i in 1..=400 {
            let v = enumerate_dense(&l2(), i).unwrap().trimmed();
            let key: Vec<u64> = v.coeffs().iter().map(|c| c.re.to_bits()).collect();
            assert!(seen.insert((v.lo(), key)), "duplicate at {i}");
            assert_eq!(dense_rank(&v), Some(i));
        }
    }

    #[test]
    fn choose_a_examples() {
        let w = WeightSequence::constant(2.0).unwrap();
        let zero = choose_a(&l2(), &w, &TruncatedVector::zeros(0, 0), 3, 200).unwrap();
        assert_eq!(zero.a, 1.0);
        let a = choose_a(&l2(), &w, &TruncatedVector::unit(0), 3, 200).unwrap();
        assert!((a.s_sum - 2.0).abs() < 1e-12);
        assert_eq!(a.t_sum, 1.0);
        assert!((a.a - 0.125 / 2.0).abs() < 1e-15);
        let double = choose_a(&l2(), &w, &TruncatedVector::unit(0).scaled(real(2.0)), 3, 200).unwrap();
        assert!((double.a - a.a / 2.0).abs() < 1e-15);
        let ones = WeightSequence::constant(1.0).unwrap();
        assert!(matches!(choose_a(&l2(), &ones, &TruncatedVector::unit(0), 1, 200), Err(Error::CertificateUnavailable(_))));
    }

    #[test]
    fn choose_n_examples() {
        let w = WeightSequence::constant(2.0).unwrap();
        let x = TruncatedVector::unit(0);
        let a = choose_a(&l2(), &w, &x, 1, 200).unwrap();
        assert!((a.a - 0.25).abs() < 1e-15);
        let c = FhcBlock { k: 1, enumeration_index: 2, x_k: x, a, n_k: 0, skipped: vec![] };
        let (n, rows) = choose_n(&l2(), &w, &[], &c, 100).unwrap();
        assert_eq!(n, 1);
        assert!(rows.iter().all(|r| r.holds()));
        let approx = rows.iter().find(|r| r.inequality == "approximation").unwrap();
        assert_eq!(approx.lhs, 0.0);

        let zero = FhcBlock { k: 2, enumeration_index: 1, x_k: TruncatedVector::zeros(0, 0), a: AChoice { a: 1.0, s_sum: 0.0, t_sum: 0.0 }, n_k: 0, skipped: vec![] };
        let prev = FhcBlock { n_k: 1, ..c };
        let (n, _) = choose_n(&l2(), &w, &[prev], &zero, 100).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn rolewicz_construction() {
        let w = WeightSequence::constant(2.0).unwrap();
        let c = assemble(&l2(), &w, 5, FhcOptions::default()).unwrap();
        assert!(c.all_hold());
        assert!(c.ledger().iter().all(|r| r.slack() > 0.0 || (r.inequality == "scale" && r.slack() >= 0.0)));
        assert_eq!(c.u(0).unwrap(), c.x().clone());
        for n in -3..=3 {
            let image = apply_shift(&w, &c.u(n).unwrap(), 1).unwrap();
            let d = distance(&l2(), &image, &c.u(n - 1).unwrap()).unwrap();
            let scale = fnorm(&l2(), &c.u(n - 1).unwrap()).unwrap().max(1e-300);
            assert!(d <= 1e-10 * scale.max(1.0));
        }
        let (forward, backward, reference) = c.convergence_majorants().unwrap();
        assert!(forward <= reference && backward <= reference);
        let ns: Vec<i64> = c.blocks().iter().map(|b| b.n_k).collect();
        assert!(ns.windows(2).all(|p| p[1] > p[0]));
    }

    proptest! {
        #[test]
        fn rank_inverts_enumeration(m in proptest::collection::vec(-3i64..=3, 1..4), q in 0u32..3) {
            let v = to_vector(&m, q);
            if let Some(r) = dense_rank(&v) {
                prop_assert_eq!(enumerate_dense(&l2(), r).unwrap().trimmed(), v.trimmed());
            }
        }
    }
}
