//! Backward-orbit families `u_n` (`T u_n = u_{n-1}`), random vectors
//! `v = Σ X_n u_n` on a finite window, exact orbits by stream reindexing,
//! and the ball-probability product lower bound.

use crate::delta::{majorant_tails, DeltaSequence, Side};
use crate::distributions::{tail_sum, DistributionSpec};
use crate::error::{Error, Result};
use crate::fhc::FhcConstruction;
use crate::rng::{rng_from_seed, substream};
use crate::scalar::{Scalar, ZERO};
use crate::series::Verdict;
use crate::shift::{apply_poly_shift, apply_shift, polynomial_basis, PolynomialBasis, PolynomialSpec, WeightSequence};
use crate::space::{distance, SpaceSpec, TruncatedVector};
use rayon::prelude::*;
use serde::Serialize;

/// Series-condition status attached to a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateGate {
    Checked(Verdict),
    /// The check was skipped on purpose; recorded in provenance.
    Waived,
}

impl CertificateGate {
    fn admit(self) -> Result<Self> {
        match self {
            CertificateGate::Checked(Verdict::Fail) => Err(Error::CertificateFailed(
                "series condition failed; waive it explicitly to build the family anyway".into(),
            )),
            g => Ok(g),
        }
    }
}

#[derive(Debug, Clone)]
pub enum UFamilyKind {
    UnilateralShift(WeightSequence),
    BilateralShift(WeightSequence),
    PolynomialShift { weights: WeightSequence, poly: PolynomialSpec, basis: PolynomialBasis },
    FhcCriterion(Box<FhcConstruction>),
    /// `u_n = 0` for every `n`.
    Zero,
}

#[derive(Debug, Clone)]
pub struct UFamily {
    kind: UFamilyKind,
    gate: CertificateGate,
}

impl UFamily {
    pub fn unilateral(w: WeightSequence, gate: CertificateGate) -> Result<Self> {
        if w.is_bilateral() {
            return Err(Error::InvalidArgument("unilateral family needs unilateral weights".into()));
        }
        Ok(Self { kind: UFamilyKind::UnilateralShift(w), gate: gate.admit()? })
    }

    pub fn bilateral(w: WeightSequence, gate: CertificateGate) -> Result<Self> {
        if !w.is_bilateral() {
            return Err(Error::InvalidArgument("bilateral family needs bilateral weights".into()));
        }
        Ok(Self { kind: UFamilyKind::BilateralShift(w), gate: gate.admit()? })
    }

    pub fn polynomial(w: WeightSequence, poly: PolynomialSpec, n_max: usize, gate: CertificateGate) -> Result<Self> {
        let basis = polynomial_basis(&w, &poly, n_max)?;
        Ok(Self { kind: UFamilyKind::PolynomialShift { weights: w, poly, basis }, gate: gate.admit()? })
    }

    pub fn fhc(construction: FhcConstruction, gate: CertificateGate) -> Result<Self> {
        Ok(Self { kind: UFamilyKind::FhcCriterion(Box::new(construction)), gate: gate.admit()? })
    }

    pub fn zero() -> Self {
        Self { kind: UFamilyKind::Zero, gate: CertificateGate::Waived }
    }

    pub fn kind(&self) -> &UFamilyKind {
        &self.kind
    }

    pub fn gate(&self) -> CertificateGate {
        self.gate
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            UFamilyKind::UnilateralShift(_) => "unilateral_shift",
            UFamilyKind::BilateralShift(_) => "bilateral_shift",
            UFamilyKind::PolynomialShift { .. } => "polynomial_shift",
            UFamilyKind::FhcCriterion(_) => "fhc_criterion",
            UFamilyKind::Zero => "zero",
        }
    }

    /// Families indexed over all of `ℤ`.
    pub fn is_bilateral(&self) -> bool {
        matches!(self.kind, UFamilyKind::BilateralShift(_) | UFamilyKind::FhcCriterion(_))
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, UFamilyKind::UnilateralShift(_) | UFamilyKind::BilateralShift(_) | UFamilyKind::Zero)
    }

    /// `ln |c_n|` when `u_n = c_n e_n`; `None` for non-diagonal families.
    pub fn diagonal_log_scale(&self, n: i64) -> Result<Option<f64>> {
        Ok(match &self.kind {
            UFamilyKind::UnilateralShift(_) if n < 0 => Some(f64::NEG_INFINITY),
            UFamilyKind::UnilateralShift(w) | UFamilyKind::BilateralShift(w) => Some(-w.log_beta(n)?.log_mag),
            UFamilyKind::Zero => Some(f64::NEG_INFINITY),
            _ => None,
        })
    }

    /// `c_n` with `u_n = c_n e_n` for diagonal families.
    pub fn diagonal_scale(&self, n: i64) -> Result<Option<Scalar>> {
        Ok(match &self.kind {
            UFamilyKind::UnilateralShift(_) if n < 0 => Some(ZERO),
            UFamilyKind::UnilateralShift(w) | UFamilyKind::BilateralShift(w) => Some(w.log_beta(n)?.recip().to_scalar()),
            UFamilyKind::Zero => Some(ZERO),
            _ => None,
        })
    }

    /// Diagonal scales over `[lo, hi]` in one pass.
    pub fn diagonal_scales(&self, lo: i64, hi: i64) -> Result<Option<Vec<Scalar>>> {
        Ok(match &self.kind {
            UFamilyKind::UnilateralShift(w) | UFamilyKind::BilateralShift(w) => {
                let start = if w.is_bilateral() { lo } else { lo.max(0) };
                let mut out = vec![ZERO; (hi - lo + 1) as usize];
                if start <= hi {
                    for (i, b) in w.log_beta_table(start, hi)?.into_iter().enumerate() {
                        out[(start - lo) as usize + i] = b.recip().to_scalar();
                    }
                }
                Some(out)
            }
            UFamilyKind::Zero => Some(vec![ZERO; (hi - lo + 1) as usize]),
            _ => None,
        })
    }

    /// Largest `n ≤ n_max` whose diagonal scale is still representable.
    pub fn effective_window(&self, n_max: i64) -> Result<i64> {
        match self.diagonal_scales(0, n_max)? {
            Some(s) => Ok(s.iter().rposition(|c| *c != ZERO).map_or(0, |i| i as i64)),
            None => Ok(n_max),
        }
    }

    pub fn u(&self, n: i64) -> Result<TruncatedVector> {
        match &self.kind {
            UFamilyKind::UnilateralShift(_) if n < 0 => Ok(TruncatedVector::zeros(0, 0)),
            UFamilyKind::UnilateralShift(_) | UFamilyKind::BilateralShift(_) => {
                let c = self.diagonal_scale(n)?.unwrap();
                Ok(TruncatedVector::unit(n).scaled(c))
            }
            UFamilyKind::PolynomialShift { basis, .. } => {
                if n < 0 {
                    return Ok(TruncatedVector::zeros(0, 0));
                }
                basis.column(n as usize).cloned().ok_or(Error::HorizonExhausted {
                    horizon: basis.len() as i64 - 1,
                    reason: "polynomial basis built up to here".into(),
                })
            }
            UFamilyKind::FhcCriterion(c) => c.u(n),
            UFamilyKind::Zero => Ok(TruncatedVector::zeros(0, 0)),
        }
    }

    /// `A^m v` for the operator the family inverts (`T`, or `P(T)`).
    pub fn apply_operator(&self, v: &TruncatedVector, m: i64) -> Result<TruncatedVector> {
        match &self.kind {
            UFamilyKind::UnilateralShift(w) | UFamilyKind::BilateralShift(w) => apply_shift(w, v, m),
            UFamilyKind::PolynomialShift { weights, poly, .. } => {
                let mut out = v.clone();
                for _ in 0..m {
                    out = apply_poly_shift(weights, poly, &out)?;
                }
                Ok(out)
            }
            UFamilyKind::FhcCriterion(c) => apply_shift(c.weights(), v, m),
            UFamilyKind::Zero => Ok(TruncatedVector::zeros(0, 0)),
        }
    }

    /// Coefficient window `[lo, hi]` for truncation parameter `n`.
    pub fn window(&self, n: i64) -> (i64, i64) {
        if self.is_bilateral() {
            (-n, n)
        } else {
            (0, n)
        }
    }

    /// `Σ_{lo ≤ n ≤ hi} c_n u_n` for coefficients indexed from `lo`.
    pub fn combine(&self, lo: i64, coeffs: &[Scalar]) -> Result<TruncatedVector> {
        let hi = lo + coeffs.len() as i64 - 1;
        if let Some(scales) = self.diagonal_scales(lo, hi)? {
            let c: Vec<Scalar> = coeffs.iter().zip(&scales).map(|(x, s)| x * s).collect();
            return TruncatedVector::new(lo, c);
        }
        let mut out = TruncatedVector::zeros(lo.max(0), lo.max(0));
        for (i, x) in coeffs.iter().enumerate() {
            if *x != ZERO {
                out = out.add_scaled(*x, &self.u(lo + i as i64)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RandomVectorSample {
    pub seed: u64,
    pub n_window: i64,
    /// First index of the stream.
    pub lo: i64,
    /// `X_n` for `n = lo..=lo + len - 1`.
    pub stream: Vec<Scalar>,
    pub assembled: TruncatedVector,
    /// Majorant bound on the discarded `Σ_{|n|>N} δ_n u_n`.
    pub tail_certificate: Option<f64>,
}

impl RandomVectorSample {
    pub fn hi(&self) -> i64 {
        self.lo + self.stream.len() as i64 - 1
    }

    pub fn x(&self, n: i64) -> Option<Scalar> {
        if n < self.lo || n > self.hi() {
            None
        } else {
            Some(self.stream[(n - self.lo) as usize])
        }
    }
}

/// Majorant tail norm of `Σ_{|n|>N} δ_n |u_n|`, both sides for bilateral families.
pub fn delta_tail_majorant(space: &SpaceSpec, family: &UFamily, deltas: &DeltaSequence, n: i64) -> Result<Option<f64>> {
    let reach = (4 * n).max(n + 64) as usize;
    let values = deltas.natural_values(reach)?;
    if values.len() < n as usize + 9 {
        return Ok(None);
    }
    let sides: &[Side] = if family.is_bilateral() { &[Side::Plus, Side::Minus] } else { &[Side::Plus] };
    let mut total = 0.0;
    let slice = if family.is_diagonal() { &values[..] } else { &values[..values.len().min(2 * n as usize + 1)] };
    for &side in sides {
        match majorant_tails(space, family, slice, side) {
            Ok((tails, _)) => total += tails[n as usize],
            Err(Error::CertificateUnavailable(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(total))
}

/// Draws `X_n` i.i.d. on the family's window and assembles `v`.
pub fn sample_vector(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    n: i64,
    deltas: Option<&DeltaSequence>,
    seed: u64,
) -> Result<RandomVectorSample> {
    if n < 1 {
        return Err(Error::InvalidArgument("window must be ≥ 1".into()));
    }
    let (lo, hi) = family.window(n);
    let mut rng = rng_from_seed(seed);
    let stream = dist.sample(&mut rng, (hi - lo + 1) as usize);
    let assembled = family.combine(lo, &stream)?;
    let tail_certificate = match deltas {
        Some(d) => delta_tail_majorant(space, family, d, n)?,
        None => None,
    };
    Ok(RandomVectorSample { seed, n_window: n, lo, stream, assembled, tail_certificate })
}

/// `A^m v = Σ_j X_{j+m} u_j` over the shifted window, without applying `A`.
pub fn orbit_coefficients(family: &UFamily, sample: &RandomVectorSample, m: i64) -> Result<TruncatedVector> {
    if m < 0 || m > sample.n_window {
        return Err(Error::OrbitHorizonExceeded { step: m, max: sample.n_window });
    }
    if m == 0 {
        return Ok(sample.assembled.clone());
    }
    let lo = if family.is_bilateral() { sample.lo - m } else { 0 };
    let hi = sample.hi() - m;
    let coeffs: Vec<Scalar> = (lo..=hi).map(|j| sample.x(j + m).unwrap_or(ZERO)).collect();
    family.combine(lo, &coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallBound {
    pub n_window: i64,
    pub tail_majorant: f64,
    pub pb_estimate: f64,
    pub pb_stderr: f64,
    pub log_product: f64,
    pub product_factor: f64,
    pub lower_bound: f64,
    pub log_lower_bound: f64,
    pub reps: usize,
}

/// `Σ_{n>N} ln(1 - P(|X| ≥ δ_n))` (both sides on `ℤ`) with the remainder
/// past the tail-sum horizon bounded by `-R/(1 - p_max)`.
pub fn log_product_factor(dist: &DistributionSpec, deltas: &DeltaSequence, n: i64, horizon: usize) -> Result<f64> {
    let values = deltas.natural_values(horizon)?;
    let sides = if deltas.is_integer_indexed() { 2.0 } else { 1.0 };
    let mut log = 0.0;
    let mut p_max: f64 = 0.0;
    for d in values.iter().skip(n as usize + 1) {
        let p = dist.tail_prob(*d);
        p_max = p_max.max(p);
        log += sides * (-p).ln_1p();
    }
    let cert = tail_sum(dist, deltas, values.len() - 1, f64::INFINITY)?;
    let remainder = cert.tail_bound.ok_or_else(|| {
        Error::CertificateFailed(format!("no remainder bound for Σ P(|X| ≥ δ_n): {}", cert.witness.unwrap_or_default()))
    })?;
    if remainder > 0.0 {
        if p_max >= 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log -= remainder / (1.0 - p_max.max(remainder.min(0.5)));
    }
    Ok(log)
}

/// Lower bound `P(B) · Π_{|n|>N} (1 - P(|X| ≥ δ_n))` on `P(‖v - y‖ < η)`,
/// where `N ≥ n_min` makes the `δ`-majorant tail smaller than `η/2`.
#[allow(clippy::too_many_arguments)]
pub fn ball_probability_lower_bound(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    deltas: &DeltaSequence,
    target: &TruncatedVector,
    eta: f64,
    n_min: i64,
    horizon: i64,
    mc_reps: usize,
    seed: u64,
) -> Result<BallBound> {
    if !(eta > 0.0) || mc_reps == 0 {
        return Err(Error::InvalidArgument("η > 0 and at least one replica required".into()));
    }
    let mut chosen = None;
    for n in n_min.max(1)..=horizon {
        if let Some(t) = delta_tail_majorant(space, family, deltas, n)? {
            if t < eta / 2.0 {
                chosen = Some((n, t));
                break;
            }
        }
    }
    let (n, tail_majorant) = chosen.ok_or_else(|| Error::HorizonExhausted {
        horizon,
        reason: format!("δ-majorant tail never drops below η/2 = {}", eta / 2.0),
    })?;
    let (lo, hi) = family.window(n);
    let len = (hi - lo + 1) as usize;
    let hits: Vec<bool> = (0..mc_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, "ball-window", i);
            let x = dist.sample(&mut rng, len);
            let v = family.combine(lo, &x)?;
            Ok(distance(space, &v, target)? < eta / 2.0)
        })
        .collect::<Result<Vec<bool>>>()?;
    let pb = hits.iter().filter(|h| **h).count() as f64 / mc_reps as f64;
    let pb_stderr = (pb * (1.0 - pb) / mc_reps as f64).sqrt();
    let log_product = log_product_factor(dist, deltas, n, (n as usize + 2000).max(4 * n as usize))?;
    let product_factor = log_product.exp();
    Ok(BallBound {
        n_window: n,
        tail_majorant,
        pb_estimate: pb,
        pb_stderr,
        log_product,
        product_factor,
        lower_bound: pb * product_factor,
        log_lower_bound: pb.ln() + log_product,
        reps: mc_reps,
    })
}

/// Direct estimate of `P(‖v - y‖ < η)` from `reps` vectors on window `n`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_ball_probability(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    target: &TruncatedVector,
    eta: f64,
    n: i64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (lo, hi) = family.window(n);
    let len = (hi - lo + 1) as usize;
    let hits = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, "ball-direct", i);
            let v = family.combine(lo, &dist.sample(&mut rng, len))?;
            Ok(distance(space, &v, target)? < eta)
        })
        .collect::<Result<Vec<bool>>>()?;
    let p = hits.iter().filter(|h| **h).count() as f64 / reps as f64;
    Ok((p, (p * (1.0 - p) / reps as f64).sqrt()))
}

/// Records `(n, X_n, assembled coefficient)` for export.
pub fn sample_rows(sample: &RandomVectorSample) -> Vec<(i64, Scalar, Scalar)> {
    (sample.lo..=sample.hi()).map(|n| (n, sample.x(n).unwrap(), sample.assembled.get(n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delta::DeltaRule;
    use crate::distributions::build_annulus_density;
    use crate::scalar::{real, ScalarField};
    use crate::shift::WeightRule;
    use crate::space::fnorm;

    fn remark() -> UFamily {
        let w = WeightSequence::new(WeightRule::Split { upper: 2.0, lower: 0.5 }, true).unwrap();
        UFamily::bilateral(w, CertificateGate::Checked(Verdict::Pass)).unwrap()
    }

    fn factorial_family() -> UFamily {
        UFamily::unilateral(WeightSequence::linear(), CertificateGate::Waived).unwrap()
    }

    #[test]
    fn family_examples() {
        let f = factorial_family();
        assert!((f.u(3).unwrap().get(3) - real(1.0 / 6.0)).norm() < 1e-16);
        assert_eq!(f.u(3).unwrap().lo(), 3);
        assert!(f.u(-2).unwrap().is_zero());
        let ones = WeightSequence::constant(1.0).unwrap();
        let p = PolynomialSpec::new(vec![1.0, 1.0]).unwrap();
        let poly = UFamily::polynomial(ones, p, 5, CertificateGate::Waived).unwrap();
        assert_eq!(poly.u(2).unwrap().trimmed(), TruncatedVector::from_real(1, &[-1.0, 1.0]).unwrap());
        assert!(UFamily::unilateral(WeightSequence::linear(), CertificateGate::Checked(Verdict::Fail)).is_err());
        assert_eq!(f.effective_window(400).unwrap(), 177);
    }

    #[test]
    fn backward_orbit_relation() {
        for f in [factorial_family(), remark()] {
            let lo = if f.is_bilateral() { -10 } else { 1 };
            for n in lo..=10 {
                let image = f.apply_operator(&f.u(n).unwrap(), 1).unwrap();
                let expected = f.u(n - 1).unwrap();
                assert!((image.sub(&expected)).coeffs().iter().all(|c| c.norm() <= 1e-15 * (1.0 + expected.get(n - 1).norm())));
            }
        }
        assert!(factorial_family().apply_operator(&factorial_family().u(0).unwrap(), 1).unwrap().is_zero());
    }

    #[test]
    fn zero_family_assembles_zero() {
        let s = sample_vector(&SpaceSpec::lp(2.0).unwrap(), &UFamily::zero(), &DistributionSpec::standard_gaussian(), 20, None, 1).unwrap();
        assert!(s.assembled.is_zero());
    }

    #[test]
    fn assembled_matches_stream() {
        let f = factorial_family();
        let s = sample_vector(&SpaceSpec::entire(), &f, &DistributionSpec::standard_gaussian(), 50, None, 9).unwrap();
        let mut fact = 1.0f64;
        for n in 0..=50 {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = s.x(n).unwrap() / fact;
            assert!((s.assembled.get(n) - expected).norm() <= 1e-12 * expected.norm().max(1e-300));
        }
        assert_eq!(s.seed, 9);
        assert!(s.tail_certificate.is_none());
    }

    #[test]
    fn bilateral_tail_certificate() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let deltas = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 1.0 }, true).unwrap();
        let nat = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 1.0 }, false).unwrap();
        let dist = DistributionSpec::Annulus(build_annulus_density(&nat, ScalarField::Real).unwrap());
        let s = sample_vector(&l2, &remark(), &dist, 40, Some(&deltas), 2).unwrap();
        let bound: f64 = 2.0 * (41..400).map(|n| (n as f64 + 1.0) * 0.5f64.powi(n)).sum::<f64>();
        let cert = s.tail_certificate.unwrap();
        assert!(cert > 0.0 && cert <= bound);
    }

    #[test]
    fn orbit_matches_repeated_shift() {
        let f = factorial_family();
        let s = sample_vector(&SpaceSpec::entire(), &f, &DistributionSpec::standard_gaussian(), 100, None, 4).unwrap();
        assert_eq!(orbit_coefficients(&f, &s, 0).unwrap(), s.assembled);
        let o3 = orbit_coefficients(&f, &s, 3).unwrap();
        let mut fact = 1.0f64;
        for j in 0..=20 {
            if j > 0 {
                fact *= j as f64;
            }
            let expected = s.x(j + 3).unwrap() / fact;
            assert!((o3.get(j) - expected).norm() <= 1e-12 * expected.norm());
        }
        assert!(matches!(orbit_coefficients(&f, &s, 101), Err(Error::OrbitHorizonExceeded { .. })));
    }

    #[test]
    fn product_factor_oracle() {
        let nat = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 1.0 }, false).unwrap();
        let dist = DistributionSpec::Annulus(build_annulus_density(&nat, ScalarField::Real).unwrap());
        let log = log_product_factor(&dist, &nat, 3, 2000).unwrap();
        let oracle: f64 = (4..1100).map(|n| (-(0.5f64.powi(n + 1))).ln_1p()).sum();
        assert!((log - oracle).abs() < 1e-12);
        let empty = log_product_factor(&dist, &nat, 5000, 2000).unwrap();
        assert!(empty.exp() > 0.0);
    }

    #[test]
    fn ball_bound_positive() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let f = UFamily::unilateral(WeightSequence::constant(2.0).unwrap(), CertificateGate::Waived).unwrap();
        let nat = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 1.0 }, false).unwrap();
        let dist = DistributionSpec::Annulus(build_annulus_density(&nat, ScalarField::Real).unwrap());
        let target = TruncatedVector::zeros(0, 0);
        let b = ball_probability_lower_bound(&l2, &f, &dist, &nat, &target, 2.0, 1, 200, 2000, 7).unwrap();
        assert!(b.pb_estimate > 0.0 && b.lower_bound > 0.0 && b.product_factor > 0.0);
        assert!(b.tail_majorant < 1.0);
        let (p, _) = empirical_ball_probability(&l2, &f, &dist, &target, 2.0, 60, 2000, 8).unwrap();
        assert!(p >= b.lower_bound - 3.0 * b.pb_stderr);
        let _ = fnorm(&l2, &target).unwrap();
    }
}
