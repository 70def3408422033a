//! Weighted shifts, their weight products `β_n`, polynomials of a shift,
//! and certificates for the series conditions on `Σ e_n / β_n`.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar, SignedLogScalar, ZERO};
use crate::series::{self, RemainderBound, Verdict};
use crate::space::{self, SpaceFamily, SpaceSpec, TruncatedVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the weights `w_n` (or, for `PowerLog`, the products `β_n`) are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightRule {
    /// `w_n = value` for every `n`.
    Constant { value: f64 },
    /// `w_n = n` (unilateral only).
    Linear,
    /// Explicit weights with a default for unlisted indices.
    Table { entries: Vec<(i64, f64)>, default: f64 },
    /// `β_n = log(n)^a · n^b` for `n ≥ 2` and `β_1 = 1`; `w_n = β_n / β_{n-1}`.
    PowerLog { a: f64, b: f64 },
    /// `w_n = upper` for `n ≥ 1` and `w_n = lower` for `n ≤ 0`.
    Split { upper: f64, lower: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    rule: WeightRule,
    table: BTreeMap<i64, f64>,
    bilateral: bool,
}

fn nonzero(x: f64, index: i64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::ZeroWeight { index })
    } else {
        Ok(x)
    }
}

impl WeightSequence {
    pub fn new(rule: WeightRule, bilateral: bool) -> Result<Self> {
        let mut table = BTreeMap::new();
        match &rule {
            WeightRule::Constant { value } => {
                nonzero(*value, 1)?;
            }
            WeightRule::Linear | WeightRule::PowerLog { .. } if bilateral => {
                return Err(Error::InvalidArgument("linear and power-log weights are unilateral".into()));
            }
            WeightRule::Linear => {}
            WeightRule::PowerLog { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidArgument("power-log exponents must be finite".into()));
                }
            }
            WeightRule::Table { entries, default } => {
                nonzero(*default, i64::MAX)?;
                for &(n, w) in entries {
                    if !bilateral && n < 1 {
                        return Err(Error::InvalidArgument(format!("unilateral weight index {n} < 1")));
                    }
                    table.insert(n, nonzero(w, n)?);
                }
            }
            WeightRule::Split { upper, lower } => {
                nonzero(*upper, 1)?;
                nonzero(*lower, 0)?;
            }
        }
        Ok(Self { rule, table, bilateral })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(WeightRule::Constant { value }, false)
    }

    pub fn linear() -> Self {
        Self::new(WeightRule::Linear, false).expect("linear weights are valid")
    }

    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    pub fn is_bilateral(&self) -> bool {
        self.bilateral
    }

    pub fn as_bilateral(&self) -> Result<Self> {
        Self::new(self.rule.clone(), true)
    }

    fn check_index(&self, n: i64) -> Result<()> {
        if !self.bilateral && n < 0 {
            return Err(Error::InvalidArgument(format!("index {n} < 0 for a unilateral shift")));
        }
        Ok(())
    }

    /// The weight `w_n` (`n ≥ 1` for unilateral shifts).
    pub fn weight(&self, n: i64) -> Result<f64> {
        if !self.bilateral && n < 1 {
            return Err(Error::InvalidArgument(format!("unilateral weights start at n = 1, got {n}")));
        }
        let w = match &self.rule {
            WeightRule::Constant { value } => *value,
            WeightRule::Linear => n as f64,
            WeightRule::Table { default, .. } => *self.table.get(&n).unwrap_or(default),
            WeightRule::PowerLog { .. } => (self.log_beta(n)?.log_mag - self.log_beta(n - 1)?.log_mag).exp(),
            WeightRule::Split { upper, lower } => {
                if n >= 1 {
                    *upper
                } else {
                    *lower
                }
            }
        };
        nonzero(w, n)
    }

    /// `β_n` in log domain, with `β_0 = 1` and `β_n = β_{n-1} w_n` for all `n`.
    pub fn log_beta(&self, n: i64) -> Result<SignedLogScalar> {
        self.check_index(n)?;
        if n == 0 {
            return Ok(SignedLogScalar::one());
        }
        match &self.rule {
            WeightRule::Constant { value } => Ok(SignedLogScalar::from_real(*value).powi(n)),
            WeightRule::Split { upper, lower } => Ok(if n > 0 {
                SignedLogScalar::from_real(*upper).powi(n)
            } else {
                SignedLogScalar::from_real(*lower).powi(n)
            }),
            WeightRule::PowerLog { a, b } => {
                if n == 1 {
                    return Ok(SignedLogScalar::one());
                }
                let x = n as f64;
                Ok(SignedLogScalar::from_log(a * x.ln().ln() + b * x.ln(), real(1.0)))
            }
            WeightRule::Linear | WeightRule::Table { .. } => {
                let mut acc = SignedLogScalar::one();
                if n > 0 {
                    for k in 1..=n {
                        acc = acc * SignedLogScalar::from_real(self.weight(k)?);
                    }
                } else {
                    for k in (n + 1)..=0 {
                        acc = acc / SignedLogScalar::from_real(self.weight(k)?);
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `β_n` for every `n` in `[lo, hi]`, computed in one sweep.
    pub fn log_beta_table(&self, lo: i64, hi: i64) -> Result<Vec<SignedLogScalar>> {
        self.check_index(lo)?;
        match self.rule {
            WeightRule::Linear | WeightRule::Table { .. } => {}
            _ => return (lo..=hi).map(|n| self.log_beta(n)).collect(),
        }
        let mut out = vec![SignedLogScalar::one(); (hi - lo + 1).max(0) as usize];
        let mut acc = SignedLogScalar::one();
        for n in 0..=hi.max(0) {
            if n > 0 {
                acc = acc * SignedLogScalar::from_real(self.weight(n)?);
            }
            if n >= lo && n <= hi {
                out[(n - lo) as usize] = acc;
            }
        }
        acc = SignedLogScalar::one();
        for n in (lo.min(0)..0).rev() {
            acc = acc / SignedLogScalar::from_real(self.weight(n + 1)?);
            if n >= lo && n <= hi {
                out[(n - lo) as usize] = acc;
            }
        }
        Ok(out)
    }

    /// `β_n / β_{n-m} = w_{n-m+1} ⋯ w_n`.
    pub fn shift_factor(&self, n: i64, m: i64) -> Result<Scalar> {
        if m <= 64 {
            let mut f = 1.0;
            for k in (n - m + 1)..=n {
                f *= self.weight(k)?;
            }
            if f.is_finite() {
                return Ok(real(f));
            }
        }
        Ok((self.log_beta(n)? / self.log_beta(n - m)?).to_scalar())
    }
}

/// `T^m v` for the weighted shift `T e_n = w_n e_{n-1}`.
pub fn apply_shift(w: &WeightSequence, v: &TruncatedVector, m: i64) -> Result<TruncatedVector> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!("shift power must be ≥ 0, got {m}")));
    }
    if !w.is_bilateral() && v.lo() < 0 {
        return Err(Error::InvalidWindow { lo: v.lo(), hi: v.hi(), context: "a unilateral shift".into() });
    }
    if m == 0 {
        return Ok(v.clone());
    }
    let floor = if w.is_bilateral() { i64::MIN } else { 0 };
    let lo = (v.lo() - m).max(floor);
    let hi = v.hi() - m;
    if hi < lo {
        return Ok(TruncatedVector::zeros(0, 0));
    }
    let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
    for j in lo..=hi {
        let c = v.get(j + m);
        coeffs.push(if c == ZERO { ZERO } else { c * w.shift_factor(j + m, m)? });
    }
    TruncatedVector::new(lo, coeffs)
}

/// `S^m v` for the right inverse `S e_n = e_{n+1} / w_{n+1}` (unilateral).
pub fn apply_right_inverse(w: &WeightSequence, v: &TruncatedVector, m: i64) -> Result<TruncatedVector> {
    if m < 0 || v.lo() < 0 {
        return Err(Error::InvalidArgument("right inverse needs m ≥ 0 and a window in ℕ".into()));
    }
    let mut coeffs = Vec::with_capacity(v.len());
    for (n, c) in v.iter() {
        coeffs.push(if c == ZERO { ZERO } else { c / w.shift_factor(n + m, m)? });
    }
    TruncatedVector::new(v.lo() + m, coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    /// `a_1, …, a_d` of `P(z) = Σ_{k≥1} a_k z^k`.
    pub coefficients: Vec<f64>,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        match coefficients.first() {
            None => Err(Error::InvalidArgument("polynomial needs degree ≥ 1".into())),
            Some(a1) if *a1 == 0.0 => Err(Error::InvalidArgument("a_1 must be nonzero".into())),
            _ if coefficients.iter().any(|a| !a.is_finite()) => {
                Err(Error::InvalidArgument("polynomial coefficients must be finite".into()))
            }
            _ => Ok(Self { coefficients }),
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    /// `a_k` for `k ≥ 1`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.coefficients.get(k - 1).copied().unwrap_or(0.0)
        }
    }
}

/// `P(T) v = Σ_k a_k T^k v`.
pub fn apply_poly_shift(w: &WeightSequence, poly: &PolynomialSpec, v: &TruncatedVector) -> Result<TruncatedVector> {
    if w.is_bilateral() {
        return Err(Error::InvalidArgument("polynomials are applied to unilateral shifts".into()));
    }
    let mut out = TruncatedVector::zeros(v.lo().max(0), v.lo().max(0));
    for (k, &a) in poly.coefficients.iter().enumerate() {
        if a != 0.0 {
            out = out.add_scaled(real(a), &apply_shift(w, v, k as i64 + 1)?);
        }
    }
    Ok(out)
}

/// Columns `u_0, …, u_N` with `P(T) u_n = u_{n-1}` and `supp u_n ⊆ {0..n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBasis {
    columns: Vec<TruncatedVector>,
    max_residual: f64,
}

impl PolynomialBasis {
    pub fn columns(&self) -> &[TruncatedVector] {
        &self.columns
    }

    pub fn column(&self, n: usize) -> Option<&TruncatedVector> {
        self.columns.get(n)
    }

    /// `β_{j,n}`, the coefficient of `e_j` in `u_n`.
    pub fn coefficient(&self, j: usize, n: usize) -> Scalar {
        self.columns.get(n).map(|u| u.get(j as i64)).unwrap_or(ZERO)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }
}

pub const BASIS_RESIDUAL_TOLERANCE: f64 = 1e-10;

fn sup(v: &TruncatedVector) -> f64 {
    v.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Solves `P(T) u_n = u_{n-1}` top-down; the free coefficient `β_{0,n}` is 0.
pub fn polynomial_basis(w: &WeightSequence, poly: &PolynomialSpec, n_max: usize) -> Result<PolynomialBasis> {
    if w.is_bilateral() {
        return Err(Error::InvalidArgument("polynomial basis needs a unilateral shift".into()));
    }
    let a1 = poly.coeff(1);
    if a1 == 0.0 {
        return Err(Error::InvalidArgument("a_1 must be nonzero".into()));
    }
    let d = poly.degree();
    let mut columns: Vec<TruncatedVector> = vec![TruncatedVector::unit(0)];
    let mut max_residual = 0.0f64;
    for n in 1..=n_max {
        let prev = &columns[n - 1];
        let mut b = vec![ZERO; n + 1];
        b[n] = prev.get(n as i64 - 1) / (a1 * w.weight(n as i64)?);
        for i in (0..n.saturating_sub(1)).rev() {
            // component i of P(T) u_n: Σ_k a_k b_{i+k} β_{i+k}/β_i
            let mut rhs = prev.get(i as i64);
            for k in 2..=d {
                if i + k <= n && poly.coeff(k) != 0.0 {
                    rhs -= poly.coeff(k) * b[i + k] * w.shift_factor((i + k) as i64, k as i64)?;
                }
            }
            b[i + 1] = rhs / (a1 * w.weight(i as i64 + 1)?);
        }
        let u = TruncatedVector::new(0, b)?;
        let image = apply_poly_shift(w, poly, &u)?;
        let residual = sup(&image.sub(prev)) / sup(prev).max(f64::MIN_POSITIVE);
        if residual > BASIS_RESIDUAL_TOLERANCE || !residual.is_finite() {
            return Err(Error::Residual { column: n, residual, tolerance: BASIS_RESIDUAL_TOLERANCE });
        }
        max_residual = max_residual.max(residual);
        columns.push(u);
    }
    Ok(PolynomialBasis { columns, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `Σ e_n / β_n`
    Plain,
    /// `Σ_{|n| ≥ 2} √log|n| e_n / β_n`
    SqrtLog,
}

/// One side (`n ≥ 0` or `n < 0`) at one radius (function spaces) of a series check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSide {
    pub side: &'static str,
    pub radius: Option<f64>,
    pub verdict: Verdict,
    pub partial_sum: f64,
    pub tail_estimate: f64,
    pub remainder: Option<RemainderBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCertificate {
    pub verdict: Verdict,
    pub kind: SeriesKind,
    pub horizon: i64,
    pub tail_estimates: Vec<f64>,
    pub sides: Vec<SeriesSide>,
    pub witness: Option<String>,
}

/// `ln t_n` for the series term at index `n`.
pub fn log_term(w: &WeightSequence, kind: SeriesKind, n: i64) -> Result<f64> {
    let lb = w.log_beta(n)?.log_mag;
    Ok(match kind {
        SeriesKind::Plain => -lb,
        SeriesKind::SqrtLog => {
            if n.abs() < 2 {
                f64::NEG_INFINITY
            } else {
                0.5 * (n.abs() as f64).ln().ln() - lb
            }
        }
    })
}

fn log_terms_side(w: &WeightSequence, kind: SeriesKind, horizon: i64, negative: bool) -> Result<Vec<f64>> {
    if negative {
        let table = w.log_beta_table(-horizon, -1)?;
        (1..=horizon)
            .map(|a| {
                let lb = table[(horizon - a) as usize].log_mag;
                Ok(match kind {
                    SeriesKind::Plain => -lb,
                    SeriesKind::SqrtLog if a < 2 => f64::NEG_INFINITY,
                    SeriesKind::SqrtLog => 0.5 * (a as f64).ln().ln() - lb,
                })
            })
            .collect()
    } else {
        let table = w.log_beta_table(0, horizon)?;
        Ok((0..=horizon)
            .map(|n| {
                let lb = table[n as usize].log_mag;
                match kind {
                    SeriesKind::Plain => -lb,
                    SeriesKind::SqrtLog if n < 2 => f64::NEG_INFINITY,
                    SeriesKind::SqrtLog => 0.5 * (n as f64).ln().ln() - lb,
                }
            })
            .collect())
    }
}

fn c0_side(log_terms: &[f64], first: i64, tol: f64, name: &'static str) -> (SeriesSide, Option<String>) {
    let len = log_terms.len();
    let q3 = len / 2;
    let q4 = 3 * len / 4;
    let terms: Vec<f64> = log_terms.iter().map(|l| l.exp()).collect();
    let max_q3 = terms[q3..q4].iter().copied().fold(0.0, f64::max);
    let max_q4 = terms[q4..].iter().copied().fold(0.0, f64::max);
    let min_q3 = terms[q3..q4].iter().copied().fold(f64::INFINITY, f64::min);
    let min_q4 = terms[q4..].iter().copied().fold(f64::INFINITY, f64::min);
    let (verdict, witness) = if max_q4 <= tol && max_q4 <= max_q3 {
        (Verdict::Pass, None)
    } else if min_q4 > tol && min_q4 >= min_q3 {
        let w = format!(
            "terms stay ≥ {min_q4:.6e} on [{}, {}] without decreasing",
            first + q3 as i64,
            first + len as i64 - 1
        );
        (Verdict::Fail, Some(w))
    } else {
        (Verdict::Inconclusive, None)
    };
    let side = SeriesSide {
        side: name,
        radius: None,
        verdict,
        partial_sum: terms.iter().copied().fold(0.0, f64::max),
        tail_estimate: max_q4,
        remainder: None,
    };
    (side, witness)
}

/// Certifies (or refutes) unconditional convergence of `Σ t_n e_n` in `space`
/// by absolute tails, which coincide with unconditional convergence for the
/// disjointly supported terms in scope.
pub fn check_series_condition(
    space: &SpaceSpec,
    w: &WeightSequence,
    kind: SeriesKind,
    horizon: i64,
    tol: f64,
) -> Result<SeriesCertificate> {
    if horizon < 16 {
        return Err(Error::InvalidArgument(format!("series horizon must be ≥ 16, got {horizon}")));
    }
    if w.is_bilateral() && space.is_function_space() {
        return Err(Error::InvalidArgument("bilateral shifts live on ℓ^p or c₀".into()));
    }
    let mut sides_terms = vec![("n>=0", 0i64, log_terms_side(w, kind, horizon, false)?)];
    if w.is_bilateral() {
        sides_terms.push(("n<0", 1, log_terms_side(w, kind, horizon, true)?));
    }
    let mut sides = Vec::new();
    let mut witness = None;
    let mut verdict = Verdict::Pass;
    for (name, first, terms) in sides_terms {
        match space.family() {
            SpaceFamily::Lp { p } => {
                let powered: Vec<f64> = terms.iter().map(|l| p * l).collect();
                let a = series::assess(&powered, first, tol);
                verdict = verdict.and(a.verdict);
                witness = witness.or(a.witness);
                sides.push(SeriesSide {
                    side: name,
                    radius: None,
                    verdict: a.verdict,
                    partial_sum: a.partial_sum,
                    tail_estimate: a.remainder.map(|r| r.bound).unwrap_or(f64::INFINITY),
                    remainder: a.remainder,
                });
            }
            SpaceFamily::C0 => {
                let (side, w_) = c0_side(&terms, first, tol, name);
                verdict = verdict.and(side.verdict);
                witness = witness.or(w_);
                sides.push(side);
            }
            SpaceFamily::EntireFunctions { radii } | SpaceFamily::DiskFunctions { radii, .. } => {
                for &r in radii {
                    let weighted: Vec<f64> =
                        terms.iter().enumerate().map(|(i, l)| l + (first + i as i64) as f64 * r.ln()).collect();
                    let a = series::assess(&weighted, first, tol);
                    verdict = verdict.and(a.verdict);
                    witness = witness.or(a.witness);
                    sides.push(SeriesSide {
                        side: name,
                        radius: Some(r),
                        verdict: a.verdict,
                        partial_sum: a.partial_sum,
                        tail_estimate: a.remainder.map(|r| r.bound).unwrap_or(f64::INFINITY),
                        remainder: a.remainder,
                    });
                }
            }
        }
    }
    let tail_estimates = sides.iter().map(|s| s.tail_estimate).collect();
    Ok(SeriesCertificate { verdict, kind, horizon, tail_estimates, sides, witness })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaoticityOptions {
    /// `H(ℂ)`: the last root must exceed this value.
    pub growth_threshold: f64,
    /// `H(D(0,R))`: slack allowed above `1/R`.
    pub tol: f64,
}

impl Default for ChaoticityOptions {
    fn default() -> Self {
        Self { growth_threshold: 10.0, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaoticityCertificate {
    pub verdict: Verdict,
    /// `|β_n|^{1/n}` for `H(ℂ)`, `|β_n|^{-1/n}` for the disk, `n = 1..=horizon`.
    pub roots: Vec<f64>,
    /// Always false: this is a trend at the horizon, not a statement about the limit.
    pub limit_certified: bool,
    pub note: String,
}

/// Horizon-limited trend check of the chaoticity criteria for weighted
/// shifts on `H(ℂ)` (`|β_n|^{1/n} → ∞`) and `H(D(0,R))`
/// (`limsup |β_n|^{-1/n} ≤ 1/R`).
pub fn chaoticity_criterion(
    space: &SpaceSpec,
    w: &WeightSequence,
    horizon: i64,
    opts: ChaoticityOptions,
) -> Result<ChaoticityCertificate> {
    if horizon < 4 {
        return Err(Error::InvalidArgument("chaoticity horizon must be ≥ 4".into()));
    }
    let table = w.log_beta_table(0, horizon)?;
    let quartile = (3 * horizon / 4) as usize;
    match space.family() {
        SpaceFamily::EntireFunctions { .. } => {
            let roots: Vec<f64> = (1..=horizon).map(|n| (table[n as usize].log_mag / n as f64).exp()).collect();
            let tail = &roots[quartile.saturating_sub(1)..];
            let increasing = tail.windows(2).all(|p| p[1] > p[0]);
            let last = *roots.last().unwrap();
            let verdict = if increasing && last > opts.growth_threshold { Verdict::Pass } else { Verdict::Fail };
            Ok(ChaoticityCertificate {
                verdict,
                roots,
                limit_certified: false,
                note: format!(
                    "|β_n|^(1/n) strictly increasing on the last quartile: {increasing}; value at n={horizon}: {last:.6}; threshold {}",
                    opts.growth_threshold
                ),
            })
        }
        SpaceFamily::DiskFunctions { radius, .. } => {
            let roots: Vec<f64> = (1..=horizon).map(|n| (-table[n as usize].log_mag / n as f64).exp()).collect();
            let worst = roots[quartile.saturating_sub(1)..].iter().copied().fold(0.0, f64::max);
            let bound = 1.0 / radius + opts.tol;
            let verdict = if worst <= bound { Verdict::Pass } else { Verdict::Fail };
            Ok(ChaoticityCertificate {
                verdict,
                roots,
                limit_certified: false,
                note: format!("max |β_n|^(-1/n) on the last quartile = {worst:.6} vs 1/R + tol = {bound:.6}"),
            })
        }
        _ => Err(Error::InvalidArgument("chaoticity criterion applies to H(C) and H(D(0,R))".into())),
    }
}

/// Sup-norm distance, used by residual checks.
pub fn sup_distance(u: &TruncatedVector, v: &TruncatedVector) -> f64 {
    sup(&u.sub(v))
}

/// Relative residual `‖T u_n - u_{n-1}‖ / ‖u_{n-1}‖` in the given space.
pub fn relative_residual(space: &SpaceSpec, image: &TruncatedVector, expected: &TruncatedVector) -> Result<f64> {
    let d = space::distance(space, image, expected)?;
    let scale = space::fnorm(space, expected)?;
    Ok(if scale == 0.0 { d } else { d / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ONE;
    use proptest::prelude::*;

    fn remark_weights() -> WeightSequence {
        WeightSequence::new(WeightRule::Split { upper: 2.0, lower: 0.5 }, true).unwrap()
    }

    fn counterexample(p: f64) -> WeightSequence {
        WeightSequence::new(WeightRule::PowerLog { a: 0.5 + 1.0 / p, b: 1.0 / p }, false).unwrap()
    }

    #[test]
    fn log_beta_examples() {
        let lin = WeightSequence::linear();
        let b5 = lin.log_beta(5).unwrap();
        assert!((b5.log_mag - 120f64.ln()).abs() < 1e-14);
        assert_eq!(b5.phase, ONE);
        for w in [lin.clone(), WeightSequence::constant(-3.0).unwrap(), remark_weights()] {
            assert_eq!(w.log_beta(0).unwrap(), SignedLogScalar::one());
        }
        let b = remark_weights().log_beta(-3).unwrap().to_scalar();
        assert!((b.re - 8.0).abs() < 1e-12);
        assert!(lin.log_beta(-1).is_err());
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(WeightSequence::constant(0.0).is_err());
        let t = WeightRule::Table { entries: vec![(3, 0.0)], default: 1.0 };
        assert!(matches!(WeightSequence::new(t, false), Err(Error::ZeroWeight { index: 3 })));
    }

    #[test]
    fn table_matches_pointwise_beta() {
        let t = WeightRule::Table { entries: vec![(-2, 3.0), (0, -0.5), (2, 4.0)], default: 1.5 };
        let w = WeightSequence::new(t, true).unwrap();
        let table = w.log_beta_table(-6, 6).unwrap();
        for (i, n) in (-6..=6).enumerate() {
            let b = w.log_beta(n).unwrap();
            assert!((table[i].log_mag - b.log_mag).abs() < 1e-13);
            assert!((table[i].phase - b.phase).norm() < 1e-15);
        }
    }

    #[test]
    fn shift_examples() {
        let w = WeightSequence::new(WeightRule::Table { entries: vec![(1, 3.0)], default: 1.0 }, false).unwrap();
        let out = apply_shift(&w, &TruncatedVector::unit(1), 1).unwrap();
        assert_eq!(out.get(0), real(3.0));
        let zero = apply_shift(&w, &TruncatedVector::unit(0), 1).unwrap();
        assert!(zero.is_zero());
        let lin = WeightSequence::linear();
        let v = TruncatedVector::unit(5).scaled(real(1.0 / 120.0));
        let out = apply_shift(&lin, &v, 2).unwrap();
        assert!((out.get(3) - real(1.0 / 6.0)).norm() < 1e-16);
    }

    #[test]
    fn right_inverse_is_a_right_inverse() {
        let w = WeightSequence::constant(2.0).unwrap();
        let x = TruncatedVector::from_real(0, &[1.0, -0.5, 0.25]).unwrap();
        for m in 0..6 {
            let back = apply_shift(&w, &apply_right_inverse(&w, &x, m).unwrap(), m).unwrap();
            assert!(sup_distance(&back, &x) < 1e-15);
        }
    }

    #[test]
    fn polynomial_basis_examples() {
        let ones = WeightSequence::constant(1.0).unwrap();
        let p = PolynomialSpec::new(vec![1.0, 1.0]).unwrap();
        let basis = polynomial_basis(&ones, &p, 2).unwrap();
        assert_eq!(basis.column(0).unwrap(), &TruncatedVector::unit(0));
        assert_eq!(basis.column(1).unwrap().trimmed(), TruncatedVector::unit(1));
        assert_eq!(basis.column(2).unwrap().trimmed(), TruncatedVector::from_real(1, &[-1.0, 1.0]).unwrap());
        let image = apply_poly_shift(&ones, &p, basis.column(2).unwrap()).unwrap();
        assert!(sup_distance(&image, basis.column(1).unwrap()) < 1e-15);

        let two_z = PolynomialSpec::new(vec![2.0]).unwrap();
        let basis = polynomial_basis(&ones, &two_z, 6).unwrap();
        for n in 0..=6 {
            assert_eq!(basis.coefficient(n, n), real(0.5f64.powi(n as i32)));
        }
        assert!(PolynomialSpec::new(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn polynomial_identity_reproduces_backward_orbit() {
        let lin = WeightSequence::linear();
        let z = PolynomialSpec::new(vec![1.0]).unwrap();
        let basis = polynomial_basis(&lin, &z, 30).unwrap();
        for n in 0..=30 {
            let expected = lin.log_beta(n as i64).unwrap().recip().to_scalar();
            let got = basis.coefficient(n, n);
            assert!((got - expected).norm() <= 1e-12 * expected.norm());
            assert_eq!(basis.column(n).unwrap().trimmed().lo(), n as i64);
        }
    }

    #[test]
    fn poly_shift_examples() {
        let ones = WeightSequence::constant(1.0).unwrap();
        let p = PolynomialSpec::new(vec![1.0, 1.0]).unwrap();
        let out = apply_poly_shift(&ones, &p, &TruncatedVector::unit(2)).unwrap();
        assert_eq!(out.trimmed(), TruncatedVector::from_real(0, &[1.0, 1.0]).unwrap());
        assert!(apply_poly_shift(&ones, &p, &TruncatedVector::zeros(0, 3)).unwrap().is_zero());
    }

    #[test]
    fn series_condition_examples() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let rolewicz = WeightSequence::constant(2.0).unwrap();
        let c = check_series_condition(&l2, &rolewicz, SeriesKind::Plain, 64, 1e-12).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        // tail Σ_{n>64} 4^{-n} = 4^{-64}/3
        assert!((c.tail_estimates[0] - 4f64.powi(-64) / 3.0).abs() < 1e-45);

        let bad = counterexample(2.0);
        let c = check_series_condition(&l2, &bad, SeriesKind::SqrtLog, 100_000, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.witness.is_some());

        let h = SpaceSpec::entire();
        let c = check_series_condition(&h, &WeightSequence::linear(), SeriesKind::SqrtLog, 500, 1e-12).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
    }

    #[test]
    fn bilateral_remark_passes_in_l2() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let c = check_series_condition(&l2, &remark_weights(), SeriesKind::Plain, 40, 1e-20).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.sides.len(), 2);
        for s in &c.sides {
            assert!((s.tail_estimate - 4f64.powi(-40) / 3.0).abs() < 1e-36);
        }
    }

    #[test]
    fn c0_condition() {
        let c0 = SpaceSpec::c0();
        let ok = check_series_condition(&c0, &WeightSequence::constant(1.5).unwrap(), SeriesKind::Plain, 200, 1e-9).unwrap();
        assert_eq!(ok.verdict, Verdict::Pass);
        let bad = check_series_condition(&c0, &WeightSequence::constant(1.0).unwrap(), SeriesKind::Plain, 200, 1e-9).unwrap();
        assert_eq!(bad.verdict, Verdict::Fail);
    }

    #[test]
    fn chaoticity_examples() {
        let h = SpaceSpec::entire();
        let c = chaoticity_criterion(&h, &WeightSequence::linear(), 500, ChaoticityOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(!c.limit_certified);
        // (500!)^{1/500} ≈ 500/e
        assert!((c.roots[499] - 500.0 / std::f64::consts::E).abs() < 2.0);
        let c = chaoticity_criterion(&h, &WeightSequence::constant(2.0).unwrap(), 500, ChaoticityOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.roots.iter().all(|r| (r - 2.0).abs() < 1e-12));
        let d = SpaceSpec::disk(1.0).unwrap();
        let c = chaoticity_criterion(&d, &WeightSequence::constant(1.0).unwrap(), 200, ChaoticityOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(chaoticity_criterion(&SpaceSpec::c0(), &WeightSequence::linear(), 50, ChaoticityOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn semigroup(coeffs in proptest::collection::vec(-3.0f64..3.0, 1..20), m1 in 0i64..6, m2 in 0i64..6,
                     lo in -5i64..5, bilateral in any::<bool>()) {
            let w = if bilateral { remark_weights() } else { WeightSequence::linear() };
            let lo = if bilateral { lo } else { lo.abs() };
            let v = TruncatedVector::from_real(lo, &coeffs).unwrap();
            let once = apply_shift(&w, &v, m1 + m2).unwrap();
            let twice = apply_shift(&w, &apply_shift(&w, &v, m1).unwrap(), m2).unwrap();
            let scale = sup(&once).max(1e-300);
            prop_assert!(sup_distance(&once, &twice) <= 1e-14 * scale);
        }

        #[test]
        fn beta_telescoping(n in -60i64..400, m in 1i64..12, which in 0usize..3) {
            let w = match which {
                0 => WeightSequence::linear(),
                1 => remark_weights(),
                _ => WeightSequence::new(WeightRule::Table { entries: vec![(-3, 0.25), (1, -2.0), (7, 9.0)], default: 1.1 }, true).unwrap(),
            };
            let n = if w.is_bilateral() { n } else { n.abs() + m };
            let diff = w.log_beta(n).unwrap().log_mag - w.log_beta(n - m).unwrap().log_mag;
            let direct: f64 = ((n - m + 1)..=n).map(|k| w.weight(k).unwrap().abs().ln()).sum();
            prop_assert!((diff - direct).abs() <= 1e-12 * (1.0 + w.log_beta(n).unwrap().log_mag.abs()));
        }
    }
}
