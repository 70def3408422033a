//! Coefficient laws: the piecewise-constant annulus density, Gaussian,
//! bounded uniform and tabulated-tail families, with exact tails, samplers
//! and the tail-sum and subgaussian certificates.

use crate::delta::{DeltaSequence, Divergence};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::{Scalar, ScalarField};
use crate::series::{self, Verdict};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use libm::erfc;
use std::f64::consts::{LN_2, PI};

/// Thresholds materialized for the annulus density; beyond this many
/// annuli the remaining mass `2^{-k-1}` is below the smallest subnormal.
pub const MAX_ANNULI: usize = 1100;

/// `ρ = Σ_k 2^{-k-1}/m_k · 1_{U_k}` with `U_0 = B(0,δ_0)` and
/// `U_k = B(0,δ_k) \ B(0,δ_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySpec {
    thresholds: Vec<f64>,
    field: ScalarField,
    source: DeltaSequence,
    /// True when preprocessing left the input thresholds unchanged.
    verbatim: bool,
    dropped: Vec<usize>,
}

impl DensitySpec {
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn source(&self) -> &DeltaSequence {
        &self.source
    }

    pub fn is_verbatim(&self) -> bool {
        self.verbatim
    }

    /// Input indices removed by the strict-increase preprocessing.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// `δ_k`, continuing linearly past the materialized thresholds.
    pub fn threshold(&self, k: usize) -> f64 {
        let t = &self.thresholds;
        if k < t.len() {
            return t[k];
        }
        let last = t.len() - 1;
        let step = if last == 0 { t[0] } else { t[last] - t[last - 1] };
        t[last] + step * (k - last) as f64
    }

    fn inner(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.threshold(k - 1)
        }
    }

    /// Lebesgue measure `m_k` of `U_k`.
    pub fn annulus_mass(&self, k: usize) -> f64 {
        let (a, b) = (self.inner(k), self.threshold(k));
        match self.field {
            ScalarField::Real => 2.0 * (b - a),
            ScalarField::Complex => PI * (b * b - a * a),
        }
    }

    /// Density value `2^{-k-1}/m_k` on `U_k`.
    pub fn height(&self, k: usize) -> f64 {
        0.5f64.powi(k as i32 + 1) / self.annulus_mass(k)
    }

    /// Index `k` with `δ_{k-1} ≤ t < δ_k`.
    fn annulus_of(&self, t: f64) -> usize {
        let t_len = self.thresholds.len();
        let k = self.thresholds.partition_point(|d| *d <= t);
        if k < t_len {
            return k;
        }
        let mut k = t_len;
        while self.threshold(k) <= t {
            k += 1;
        }
        k
    }

    fn log_tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = self.annulus_of(t);
        let (a, b) = (self.inner(k), self.threshold(k));
        let frac = match self.field {
            ScalarField::Real => (b - t) / (b - a),
            ScalarField::Complex => (b * b - t * t) / (b * b - a * a),
        };
        -((k + 1) as f64) * LN_2 + frac.ln_1p()
    }

    fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let k = self.annulus_of(t);
        let (a, b) = (self.inner(k), self.threshold(k));
        let frac = match self.field {
            ScalarField::Real => (b - t) / (b - a),
            ScalarField::Complex => (b * b - t * t) / (b * b - a * a),
        };
        0.5f64.powi(k as i32 + 1) * (1.0 + frac)
    }

    fn sample_one(&self, rng: &mut SimRng) -> Scalar {
        let u: f64 = 1.0 - rng.random::<f64>();
        let k = (-u.log2()).floor().max(0.0) as usize;
        let (a, b) = (self.inner(k), self.threshold(k));
        let v: f64 = rng.random();
        match self.field {
            ScalarField::Real => {
                let r = a + v * (b - a);
                Complex64::new(if rng.random::<bool>() { r } else { -r }, 0.0)
            }
            ScalarField::Complex => {
                let r = (a * a + v * (b * b - a * a)).sqrt();
                Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
            }
        }
    }
}

fn strictly_increasing_positive(v: &[f64]) -> bool {
    v.first().is_some_and(|x| *x > 0.0) && v.windows(2).all(|p| p[1] > p[0])
}

/// Annulus density whose tails at the (preprocessed) thresholds are `2^{-(n+1)}`.
pub fn build_annulus_density(deltas: &DeltaSequence, field: ScalarField) -> Result<DensitySpec> {
    match deltas.divergence() {
        Divergence::Certified(_) => {}
        Divergence::Bounded(w) | Divergence::Unknown(w) => return Err(Error::DivergenceRequired { witness: w }),
    }
    let raw = deltas.natural_values(MAX_ANNULI)?;
    let mut inf_tail = raw.clone();
    for i in (0..inf_tail.len().saturating_sub(1)).rev() {
        inf_tail[i] = inf_tail[i].min(inf_tail[i + 1]);
    }
    let (thresholds, verbatim, dropped) = if strictly_increasing_positive(&inf_tail) {
        let verbatim = inf_tail == raw;
        (inf_tail, verbatim, Vec::new())
    } else {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (i, d) in inf_tail.iter().enumerate() {
            let p = d - 1.0 / (i as f64 + 1.0);
            if p > 0.0 && kept.last().is_none_or(|l| p > *l) {
                kept.push(p);
            } else {
                dropped.push(i);
            }
        }
        (kept, false, dropped)
    };
    if thresholds.len() < 2 {
        return Err(Error::DivergenceRequired { witness: "fewer than two usable thresholds after preprocessing".into() });
    }
    Ok(DensitySpec { thresholds, field, source: deltas.clone(), verbatim, dropped })
}

/// Point on the tail curve `(t, P(|X| ≥ t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailKnot {
    pub t: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Annulus(DensitySpec),
    /// Real `N(mean, variance)`, or circular complex with `E|X|² = variance`.
    Gaussian { mean: f64, variance: f64, field: ScalarField },
    /// Uniform on `[-bound, bound]` or on the disk of radius `bound`.
    UniformBounded { bound: f64, field: ScalarField },
    /// Tail table, log-linear between knots and past the last one; the
    /// modulus is drawn by inverting the table, the sign or angle uniformly.
    CustomTail { knots: Vec<TailKnot>, field: ScalarField },
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, variance: f64, field: ScalarField) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidArgument("gaussian needs finite mean and positive variance".into()));
        }
        if field == ScalarField::Complex && mean != 0.0 {
            return Err(Error::InvalidArgument("complex gaussian must be centred".into()));
        }
        Ok(Self::Gaussian { mean, variance, field })
    }

    pub fn standard_gaussian() -> Self {
        Self::Gaussian { mean: 0.0, variance: 1.0, field: ScalarField::Real }
    }

    pub fn uniform(bound: f64, field: ScalarField) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidArgument("uniform bound must be positive".into()));
        }
        Ok(Self::UniformBounded { bound, field })
    }

    pub fn custom_tail(knots: Vec<TailKnot>, field: ScalarField) -> Result<Self> {
        let ok = knots.len() >= 2
            && knots[0].t == 0.0
            && knots[0].prob == 1.0
            && knots.windows(2).all(|w| w[1].t > w[0].t && w[1].prob <= w[0].prob)
            && knots.iter().all(|k| k.prob > 0.0 && k.t.is_finite());
        let n = knots.len();
        if !ok || knots[n - 1].prob >= knots[n - 2].prob {
            return Err(Error::InvalidArgument(
                "tail table must start at (0, 1), increase in t, be positive and non-increasing, and end strictly decreasing".into(),
            ));
        }
        Ok(Self::CustomTail { knots, field })
    }

    pub fn field(&self) -> ScalarField {
        match self {
            Self::Annulus(d) => d.field,
            Self::Gaussian { field, .. } | Self::UniformBounded { field, .. } | Self::CustomTail { field, .. } => *field,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Annulus(_) => "annulus",
            Self::Gaussian { .. } => "gaussian",
            Self::UniformBounded { .. } => "uniform",
            Self::CustomTail { .. } => "custom_tail",
        }
    }

    pub fn has_full_support(&self) -> bool {
        !matches!(self, Self::UniformBounded { .. })
    }

    /// `ln P(|X| ≥ t)`, accurate far into the tail.
    pub fn log_tail_prob(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Annulus(d) => d.log_tail(t),
            Self::Gaussian { mean, variance, field } => {
                let s = variance.sqrt();
                match field {
                    ScalarField::Complex => -t * t / variance,
                    ScalarField::Real => {
                        let hi = (t - mean) / (s * std::f64::consts::SQRT_2);
                        let lo = (t + mean) / (s * std::f64::consts::SQRT_2);
                        let p = 0.5 * (erfc(hi) + erfc(lo));
                        if p > 1e-280 {
                            p.ln()
                        } else {
                            let x = hi.min(lo);
                            log_erfc_asymptotic(x) - LN_2 + (1.0 + (log_erfc_asymptotic(hi.max(lo)) - log_erfc_asymptotic(x)).exp()).ln()
                        }
                    }
                }
            }
            Self::UniformBounded { bound, field } => {
                let r = t / bound;
                if r >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    match field {
                        ScalarField::Real => (-r).ln_1p(),
                        ScalarField::Complex => (-r * r).ln_1p(),
                    }
                }
            }
            Self::CustomTail { knots, .. } => {
                let i = knots.partition_point(|k| k.t <= t).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                let slope = (b.prob.ln() - a.prob.ln()) / (b.t - a.t);
                a.prob.ln() + slope * (t - a.t)
            }
        }
    }

    /// Exact `P(|X| ≥ t)`.
    pub fn tail_prob(&self, t: f64) -> f64 {
        if let Self::Annulus(d) = self {
            return d.tail(t);
        }
        self.log_tail_prob(t).exp().min(1.0)
    }

    fn sample_modulus_from_table(knots: &[TailKnot], u: f64) -> f64 {
        let lu = u.ln();
        let n = knots.len();
        let i = knots.partition_point(|k| k.prob > u).clamp(1, n - 1);
        let (a, b) = (knots[i - 1], knots[i]);
        let slope = (b.prob.ln() - a.prob.ln()) / (b.t - a.t);
        if slope == 0.0 {
            return a.t;
        }
        a.t + (lu - a.prob.ln()) / slope
    }

    pub fn sample_one(&self, rng: &mut SimRng) -> Scalar {
        match self {
            Self::Annulus(d) => d.sample_one(rng),
            Self::Gaussian { mean, variance, field } => match field {
                ScalarField::Real => {
                    let z: f64 = StandardNormal.sample(rng);
                    Complex64::new(mean + variance.sqrt() * z, 0.0)
                }
                ScalarField::Complex => {
                    let s = (variance / 2.0).sqrt();
                    let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
                    Complex64::new(s * a, s * b)
                }
            },
            Self::UniformBounded { bound, field } => match field {
                ScalarField::Real => Complex64::new(bound * (2.0 * rng.random::<f64>() - 1.0), 0.0),
                ScalarField::Complex => {
                    Complex64::from_polar(bound * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>())
                }
            },
            Self::CustomTail { knots, field } => {
                let u = 1.0 - rng.random::<f64>();
                let r = Self::sample_modulus_from_table(knots, u);
                match field {
                    ScalarField::Real => Complex64::new(if rng.random::<bool>() { r } else { -r }, 0.0),
                    ScalarField::Complex => Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>()),
                }
            }
        }
    }

    /// `count` i.i.d. draws.
    pub fn sample(&self, rng: &mut SimRng, count: usize) -> Vec<Scalar> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }
}

/// `ln erfc(x)` for large `x` from the asymptotic series.
fn log_erfc_asymptotic(x: f64) -> f64 {
    let x2 = x * x;
    -x2 - (x * PI.sqrt()).ln() + (1.0 - 0.5 / x2 + 0.75 / (x2 * x2)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgaussianParams {
    pub k: f64,
    pub tau: f64,
}

/// Grid on which `P(|X| > t) ≤ K e^{-t²/τ²}` is validated.
pub fn subgaussian_grid() -> Vec<f64> {
    (0..=2000).map(|i| i as f64 * 0.01).chain((1..=80).map(|i| 20.0 + i as f64 * 0.5)).collect()
}

impl SubgaussianParams {
    /// Checks the bound against `dist`'s exact tail on the validation grid.
    pub fn validated(dist: &DistributionSpec, k: f64, tau: f64) -> Result<Self> {
        if !(k > 0.0 && tau > 0.0) {
            return Err(Error::InvalidArgument("K and τ must be positive".into()));
        }
        for t in subgaussian_grid() {
            let lhs = dist.log_tail_prob(t);
            let rhs = k.ln() - t * t / (tau * tau);
            if lhs > rhs + 1e-12 * rhs.abs().max(1.0) {
                return Err(Error::CertificateFailed(format!(
                    "P(|X| ≥ {t}) = {:.6e} exceeds K e^(-t²/τ²) = {:.6e}",
                    lhs.exp(),
                    rhs.exp()
                )));
            }
        }
        Ok(Self { k, tau })
    }

    /// Closed-form parameters for the standard families.
    pub fn for_distribution(dist: &DistributionSpec) -> Option<Self> {
        let (k, tau) = match dist {
            DistributionSpec::Gaussian { mean, variance, field } if *mean == 0.0 => match field {
                ScalarField::Real => (2.0, (2.0 * variance).sqrt()),
                ScalarField::Complex => (1.0, variance.sqrt()),
            },
            // 1 - r ≤ e·e^{-r²} on [0,1] for both fields
            DistributionSpec::UniformBounded { bound, .. } => (std::f64::consts::E, *bound),
            _ => return None,
        };
        Self::validated(dist, k, tau).ok()
    }
}

/// `Σ_{n≥2} n^{-s}` by direct summation plus an Euler–Maclaurin tail.
pub fn zeta_minus_one(s: f64) -> f64 {
    if s <= 1.0 {
        return f64::INFINITY;
    }
    const CUT: u32 = 2000;
    let head: f64 = (2..=CUT).rev().map(|n| (n as f64).powf(-s)).sum();
    let n = CUT as f64;
    let tail = n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    head + tail
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgaussianCertificate {
    pub exponent: f64,
    /// `2K Σ_{n≥2} n^{-c²/τ²}`; infinite when the exponent is ≤ 1.
    pub series_bound: f64,
    pub verdict: Verdict,
}

/// With `δ_n = c√log|n|`, `Σ_{|n|≥2} P(|X| ≥ δ_n) ≤ 2K Σ_{n≥2} n^{-c²/τ²}`.
pub fn subgaussian_certificate(params: SubgaussianParams, c: f64) -> Result<SubgaussianCertificate> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    let exponent = c * c / (params.tau * params.tau);
    let pass = exponent > 1.0;
    Ok(SubgaussianCertificate {
        exponent,
        series_bound: if pass { 2.0 * params.k * zeta_minus_one(exponent) } else { f64::INFINITY },
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSumCertificate {
    pub partial_sum: f64,
    pub tail_bound: Option<f64>,
    pub method: String,
    pub horizon: usize,
    pub verdict: Verdict,
    pub witness: Option<String>,
}

impl TailSumCertificate {
    pub fn total(&self) -> Option<f64> {
        self.tail_bound.map(|b| self.partial_sum + b)
    }
}

/// Certificate for `Σ_n P(|X| ≥ δ_n) < ∞` over `n ∈ ℕ` or `ℤ`.
pub fn tail_sum(dist: &DistributionSpec, deltas: &DeltaSequence, horizon: usize, tol: f64) -> Result<TailSumCertificate> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("tail-sum horizon must be ≥ 1".into()));
    }
    let horizon = deltas.available_horizon().map_or(horizon, |h| h.min(horizon));
    let values = deltas.natural_values(horizon)?;
    let sides = if deltas.is_integer_indexed() { 2.0 } else { 1.0 };
    let log_terms: Vec<f64> = values.iter().map(|d| dist.log_tail_prob(*d)).collect();
    let partial_sum = log_terms
        .iter()
        .enumerate()
        .map(|(n, l)| if n == 0 { l.exp() } else { sides * l.exp() })
        .sum();

    let mut method = String::new();
    let mut bound = None;
    if let DistributionSpec::Annulus(d) = dist {
        if d.verbatim && d.source() == deltas {
            method = "annulus telescoping".into();
            bound = Some(sides * 0.5f64.powi(horizon as i32 + 1));
        }
    }
    if bound.is_none() {
        if let (Some(c), Some(p)) = (deltas.sqrt_log_scale(), SubgaussianParams::for_distribution(dist)) {
            let s = c * c / (p.tau * p.tau);
            if s > 1.0 {
                method = format!("subgaussian: K={} τ={:.6} exponent {s:.6}", p.k, p.tau);
                let h = horizon as f64;
                bound = Some(sides * p.k * h.powf(1.0 - s) / (s - 1.0));
            }
        }
    }
    if bound.is_none() {
        if let DistributionSpec::UniformBounded { bound: b, .. } = dist {
            if deltas.is_monotone_rule() && values[horizon] >= *b {
                method = "bounded support exceeded by non-decreasing thresholds".into();
                bound = Some(0.0);
            }
        }
    }
    if bound.is_none() {
        if let Some(r) = series::remainder_bound(&log_terms, 0) {
            method = format!("comparison: {:?}", r.comparison);
            bound = Some(sides * r.bound);
        }
    }

    let mut witness = None;
    if bound.is_none() {
        if let Divergence::Bounded(w) = deltas.divergence() {
            let m = values.iter().copied().fold(0.0, f64::max);
            let p = dist.tail_prob(m);
            if p > 0.0 {
                witness = Some(format!("{w}; P(|X| ≥ {m:.6}) = {p:.6e} > 0 on infinitely many terms"));
            }
        }
        if witness.is_none() {
            witness = series::divergence_witness(&log_terms, 0);
        }
    }
    let verdict = match (bound, &witness) {
        (Some(b), _) if b < tol => Verdict::Pass,
        (None, Some(_)) => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    if method.is_empty() {
        method = "none".into();
    }
    Ok(TailSumCertificate { partial_sum, tail_bound: bound, method, horizon, verdict, witness })
}

/// Two-sided Kolmogorov–Smirnov statistic of `|X|` draws against the exact CDF.
pub fn ks_statistic_modulus(dist: &DistributionSpec, draws: &[Scalar]) -> f64 {
    let mut m: Vec<f64> = draws.iter().map(|x| x.norm()).collect();
    m.sort_by(f64::total_cmp);
    let n = m.len() as f64;
    m.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = 1.0 - dist.tail_prob(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
