//! Concrete sequence and function spaces and their F-norms.
//!
//! Four families are supported: `ℓ^p` (`1 ≤ p < ∞`), `c₀`, the entire
//! functions `H(ℂ)` and the holomorphic functions `H(D(0,R))` on a disk. The
//! function spaces are seen through their Taylor coefficients and measured
//! with the coefficient majorants `q_r(f) = Σ |c_n| r^n` over a finite radius
//! grid, combined into the bounded F-norm `Σ_k 2^{-k-1} q_k / (1 + q_k)`.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarField, ZERO};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceFamily {
    Lp { p: f64 },
    C0,
    EntireFunctions { radii: Vec<f64> },
    DiskFunctions { radius: f64, radii: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct SpaceSpec {
    family: SpaceFamily,
    scalar_field: ScalarField,
}

/// Flat config representation (`family`, `p`, `R`, `radii`, `scalar_field`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceRepr {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub scalar_field: ScalarField,
}

impl TryFrom<SpaceRepr> for SpaceSpec {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        let reject = |key: &str| {
            Error::InvalidArgument(format!("key `{key}` is not used by family `{}`", r.family))
        };
        let spec = match r.family.as_str() {
            "lp" => {
                if r.radius.is_some() {
                    return Err(reject("R"));
                }
                if r.radii.is_some() {
                    return Err(reject("radii"));
                }
                let p = r.p.ok_or_else(|| Error::InvalidArgument("family `lp` needs `p`".into()))?;
                SpaceSpec::lp(p)?
            }
            "c0" => {
                if r.p.is_some() {
                    return Err(reject("p"));
                }
                if r.radius.is_some() || r.radii.is_some() {
                    return Err(reject("R/radii"));
                }
                SpaceSpec::c0()
            }
            "entire" => {
                if r.p.is_some() || r.radius.is_some() {
                    return Err(reject("p/R"));
                }
                match r.radii {
                    Some(radii) => SpaceSpec::entire_with_radii(radii)?,
                    None => SpaceSpec::entire(),
                }
            }
            "disk" => {
                if r.p.is_some() {
                    return Err(reject("p"));
                }
                let big_r = r
                    .radius
                    .ok_or_else(|| Error::InvalidArgument("family `disk` needs `R`".into()))?;
                match r.radii {
                    Some(radii) => SpaceSpec::disk_with_radii(big_r, radii)?,
                    None => SpaceSpec::disk(big_r)?,
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown space family `{other}` (expected lp, c0, entire or disk)"
                )))
            }
        };
        Ok(spec.with_field(r.scalar_field))
    }
}

impl From<SpaceSpec> for SpaceRepr {
    fn from(s: SpaceSpec) -> Self {
        let (family, p, radius, radii) = match s.family {
            SpaceFamily::Lp { p } => ("lp", Some(p), None, None),
            SpaceFamily::C0 => ("c0", None, None, None),
            SpaceFamily::EntireFunctions { radii } => ("entire", None, None, Some(radii)),
            SpaceFamily::DiskFunctions { radius, radii } => ("disk", None, Some(radius), Some(radii)),
        };
        SpaceRepr { family: family.to_string(), p, radius, radii, scalar_field: s.scalar_field }
    }
}

fn check_radii(radii: &[f64], bound: Option<f64>) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("radius grid must be non-empty".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radius grid must be strictly increasing".into()));
    }
    if let Some(big_r) = bound {
        if radii.iter().any(|r| *r >= big_r) {
            return Err(Error::InvalidArgument(format!("disk radii must be < R = {big_r}")));
        }
    }
    Ok(())
}

impl SpaceSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!("ℓ^p requires 1 ≤ p < ∞, got p = {p}")));
        }
        Ok(Self { family: SpaceFamily::Lp { p }, scalar_field: ScalarField::Real })
    }

    pub fn c0() -> Self {
        Self { family: SpaceFamily::C0, scalar_field: ScalarField::Real }
    }

    /// `H(ℂ)` with the default grid `{1, 2, …, 8}`.
    pub fn entire() -> Self {
        let radii = (1..=8).map(f64::from).collect();
        Self { family: SpaceFamily::EntireFunctions { radii }, scalar_field: ScalarField::Real }
    }

    pub fn entire_with_radii(radii: Vec<f64>) -> Result<Self> {
        check_radii(&radii, None)?;
        Ok(Self { family: SpaceFamily::EntireFunctions { radii }, scalar_field: ScalarField::Real })
    }

    /// `H(D(0,R))` with the default grid `{R(1 - 2^{-k})}_{k=1..8}`.
    pub fn disk(radius: f64) -> Result<Self> {
        let radii = (1..=8).map(|k| radius * (1.0 - 0.5f64.powi(k))).collect();
        Self::disk_with_radii(radius, radii)
    }

    pub fn disk_with_radii(radius: f64, radii: Vec<f64>) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("disk radius must be positive, got {radius}")));
        }
        check_radii(&radii, Some(radius))?;
        Ok(Self { family: SpaceFamily::DiskFunctions { radius, radii }, scalar_field: ScalarField::Real })
    }

    pub fn with_field(mut self, field: ScalarField) -> Self {
        self.scalar_field = field;
        self
    }

    pub fn family(&self) -> &SpaceFamily {
        &self.family
    }

    pub fn scalar_field(&self) -> ScalarField {
        self.scalar_field
    }

    pub fn is_function_space(&self) -> bool {
        matches!(self.family, SpaceFamily::EntireFunctions { .. } | SpaceFamily::DiskFunctions { .. })
    }

    pub fn allows_negative_indices(&self) -> bool {
        !self.is_function_space()
    }

    /// Radius grid for the function spaces, empty otherwise.
    pub fn radii(&self) -> &[f64] {
        match &self.family {
            SpaceFamily::EntireFunctions { radii } | SpaceFamily::DiskFunctions { radii, .. } => radii,
            _ => &[],
        }
    }

    pub fn check_window(&self, lo: i64, hi: i64) -> Result<()> {
        if lo < 0 && !self.allows_negative_indices() {
            return Err(Error::InvalidWindow {
                lo,
                hi,
                context: "a function space (indices must be ≥ 0)".into(),
            });
        }
        Ok(())
    }

    pub(crate) fn accumulator(&self) -> NormAccumulator<'_> {
        NormAccumulator::new(self)
    }
}

/// Coefficients on the integer window `[lo, hi]` against the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVector {
    lo: i64,
    coeffs: Vec<Scalar>,
}

impl TruncatedVector {
    pub fn new(lo: i64, coeffs: Vec<Scalar>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("a truncated vector needs at least one coefficient".into()));
        }
        if let Some(j) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index: lo + j as i64 });
        }
        Ok(Self { lo, coeffs })
    }

    pub fn from_real(lo: i64, coeffs: &[f64]) -> Result<Self> {
        Self::new(lo, coeffs.iter().map(|&x| Scalar::new(x, 0.0)).collect())
    }

    /// Sparse constructor from `(index, value)` pairs; repeated indices add up.
    pub fn from_pairs(pairs: &[(i64, Scalar)]) -> Result<Self> {
        if pairs.is_empty() {
            return Ok(Self::zeros(0, 0));
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut v = Self::zeros(lo, hi);
        for &(n, c) in pairs {
            v.coeffs[(n - lo) as usize] += c;
        }
        Self::new(v.lo, v.coeffs)
    }

    pub fn zeros(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo, "empty window");
        Self { lo, coeffs: vec![ZERO; (hi - lo + 1) as usize] }
    }

    pub fn unit(n: i64) -> Self {
        Self { lo: n, coeffs: vec![Scalar::new(1.0, 0.0)] }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of `e_n`; zero outside the window.
    pub fn get(&self, n: i64) -> Scalar {
        if n < self.lo || n > self.hi() {
            return ZERO;
        }
        self.coeffs[(n - self.lo) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Scalar)> + '_ {
        self.coeffs.iter().enumerate().map(move |(j, &c)| (self.lo + j as i64, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_abs_index(&self) -> i64 {
        self.lo.abs().max(self.hi().abs())
    }

    /// Smallest window holding every nonzero coefficient (`[lo, lo]` if zero).
    pub fn trimmed(&self) -> Self {
        let first = self.coeffs.iter().position(|c| *c != ZERO);
        let last = self.coeffs.iter().rposition(|c| *c != ZERO);
        match (first, last) {
            (Some(a), Some(b)) => Self { lo: self.lo + a as i64, coeffs: self.coeffs[a..=b].to_vec() },
            _ => Self::zeros(self.lo, self.lo),
        }
    }

    pub fn scaled(&self, alpha: Scalar) -> Self {
        Self { lo: self.lo, coeffs: self.coeffs.iter().map(|c| c * alpha).collect() }
    }

    /// `self + alpha * other` on the union window.
    pub fn add_scaled(&self, alpha: Scalar, other: &Self) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi).map(|n| self.get(n) + alpha * other.get(n)).collect();
        Self { lo, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(Scalar::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(Scalar::new(-1.0, 0.0), other)
    }

    /// Keeps only the coefficients with `|n| > cutoff`.
    pub fn tail(&self, cutoff: i64) -> Self {
        let coeffs = self.iter().map(|(n, c)| if n.abs() > cutoff { c } else { ZERO }).collect();
        Self { lo: self.lo, coeffs }
    }

    /// Coefficientwise absolute values (the nonnegative majorant).
    pub fn abs(&self) -> Self {
        Self { lo: self.lo, coeffs: self.coeffs.iter().map(|c| Scalar::new(c.norm(), 0.0)).collect() }
    }
}

fn bounded_ratio(q: f64) -> f64 {
    if q.is_infinite() {
        1.0
    } else {
        q / (1.0 + q)
    }
}

/// `m · r^n` without spurious overflow or `inf · 0`.
#[inline]
pub(crate) fn weighted_modulus(m: f64, r: f64, n: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let p = r.powi(n as i32);
    if p.is_finite() && p > 0.0 && n.abs() < i32::MAX as i64 {
        m * p
    } else {
        (m.ln() + n as f64 * r.ln()).exp()
    }
}

/// Streaming evaluator of the F-norm from `(index, modulus)` pairs.
pub(crate) struct NormAccumulator<'a> {
    space: &'a SpaceSpec,
    scale: f64,
    ssq: f64,
    q: Vec<f64>,
}

impl<'a> NormAccumulator<'a> {
    fn new(space: &'a SpaceSpec) -> Self {
        Self { space, scale: 0.0, ssq: 1.0, q: vec![0.0; space.radii().len()] }
    }

    #[inline]
    pub fn push(&mut self, n: i64, m: f64) {
        if m == 0.0 {
            return;
        }
        match &self.space.family {
            SpaceFamily::Lp { p } => {
                if m > self.scale {
                    self.ssq = self.ssq * (self.scale / m).powf(*p) + 1.0;
                    self.scale = m;
                } else {
                    self.ssq += (m / self.scale).powf(*p);
                }
            }
            SpaceFamily::C0 => self.scale = self.scale.max(m),
            SpaceFamily::EntireFunctions { radii } | SpaceFamily::DiskFunctions { radii, .. } => {
                for (q, &r) in self.q.iter_mut().zip(radii) {
                    *q += weighted_modulus(m, r, n);
                }
            }
        }
    }

    pub fn finish(&self) -> f64 {
        match &self.space.family {
            SpaceFamily::Lp { p } => {
                if self.scale == 0.0 {
                    0.0
                } else {
                    self.scale * self.ssq.powf(1.0 / p)
                }
            }
            SpaceFamily::C0 => self.scale,
            _ => combine_seminorms(&self.q),
        }
    }
}

/// `Σ_k 2^{-k-1} q_k / (1 + q_k)`.
pub fn combine_seminorms(q: &[f64]) -> f64 {
    q.iter().enumerate().map(|(k, &q)| 0.5f64.powi(k as i32 + 1) * bounded_ratio(q)).sum()
}

fn validate(space: &SpaceSpec, v: &TruncatedVector) -> Result<()> {
    space.check_window(v.lo(), v.hi())?;
    if let Some(j) = v.coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite { index: v.lo + j as i64 });
    }
    Ok(())
}

/// F-norm of a truncated vector (a genuine norm for `ℓ^p` and `c₀`).
pub fn fnorm(space: &SpaceSpec, v: &TruncatedVector) -> Result<f64> {
    validate(space, v)?;
    let mut acc = space.accumulator();
    for (n, c) in v.iter() {
        acc.push(n, c.norm());
    }
    Ok(acc.finish())
}

/// `Σ |c_n| r^n`, the computable majorant of the sup-seminorm on `|z| = r`.
pub fn seminorm_majorant(space: &SpaceSpec, v: &TruncatedVector, r: f64) -> Result<f64> {
    match space.family() {
        SpaceFamily::EntireFunctions { .. } => {}
        SpaceFamily::DiskFunctions { radius, .. } => {
            if r >= *radius {
                return Err(Error::InvalidArgument(format!("r = {r} must be < R = {radius}")));
            }
        }
        _ => return Err(Error::InvalidArgument("seminorm majorants exist only on function spaces".into())),
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    validate(space, v)?;
    Ok(v.iter().map(|(n, c)| weighted_modulus(c.norm(), r, n)).sum())
}

/// `fnorm(u - v)` after zero-padding both windows to their union.
pub fn distance(space: &SpaceSpec, u: &TruncatedVector, v: &TruncatedVector) -> Result<f64> {
    validate(space, u)?;
    validate(space, v)?;
    let mut acc = space.accumulator();
    for n in u.lo().min(v.lo())..=u.hi().max(v.hi()) {
        acc.push(n, (u.get(n) - v.get(n)).norm());
    }
    Ok(acc.finish())
}

/// F-norm of the part of `v` supported on `|n| > cutoff`.
pub fn tail_norm(space: &SpaceSpec, v: &TruncatedVector, cutoff: i64) -> Result<f64> {
    fnorm(space, &v.tail(cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l2() -> SpaceSpec {
        SpaceSpec::lp(2.0).unwrap()
    }

    #[test]
    fn unit_and_pythagorean_norms() {
        assert_eq!(fnorm(&l2(), &TruncatedVector::unit(0)).unwrap(), 1.0);
        let v = TruncatedVector::from_pairs(&[(2, 3.0.into()), (7, 4.0.into())]).unwrap();
        assert!((fnorm(&l2(), &v).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn entire_fnorm_hand_value() {
        let space = SpaceSpec::entire_with_radii(vec![1.0, 2.0]).unwrap();
        let v = TruncatedVector::unit(3);
        let expected = 0.5 * 0.5 + 0.25 * (8.0 / 9.0);
        assert!((fnorm(&space, &v).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.47222).abs() < 1e-5);
    }

    #[test]
    fn majorant_examples() {
        let h = SpaceSpec::entire();
        assert_eq!(seminorm_majorant(&h, &TruncatedVector::unit(0), 5.0).unwrap(), 1.0);
        assert_eq!(seminorm_majorant(&h, &TruncatedVector::unit(3), 2.0).unwrap(), 8.0);
        let d = SpaceSpec::disk(1.0).unwrap();
        let v = TruncatedVector::from_real(0, &[1.0, 1.0]).unwrap();
        assert_eq!(seminorm_majorant(&d, &v, 0.5).unwrap(), 1.5);
        assert!(seminorm_majorant(&d, &v, 1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let v = TruncatedVector::from_real(-2, &[1.0, -3.0, 0.5]).unwrap();
        assert_eq!(distance(&l2(), &v, &v).unwrap(), 0.0);
        let d = distance(&l2(), &TruncatedVector::unit(0), &TruncatedVector::unit(1)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let a = TruncatedVector::unit(3).scaled(2.0.into());
        let b = TruncatedVector::unit(3).scaled(5.0.into());
        assert_eq!(distance(&SpaceSpec::c0(), &a, &b).unwrap(), 3.0);
    }

    #[test]
    fn tail_norm_examples() {
        let v = TruncatedVector::from_pairs(&[(0, 1.0.into()), (5, 1.0.into())]).unwrap();
        assert_eq!(tail_norm(&l2(), &v, 3).unwrap(), 1.0);
        assert_eq!(tail_norm(&l2(), &TruncatedVector::unit(0), 0).unwrap(), 0.0);
        let h = SpaceSpec::entire_with_radii(vec![1.0]).unwrap();
        let w = TruncatedVector::from_pairs(&[(2, 1.0.into()), (9, 1.0.into())]).unwrap();
        let got = tail_norm(&h, &w, 5).unwrap();
        // q_1 of the n = 9 monomial is 1, so the F-norm is 2^{-1} · 1/2.
        assert_eq!(got, 0.25);
        assert_eq!(got, fnorm(&h, &TruncatedVector::unit(9)).unwrap());
    }

    #[test]
    fn invalid_inputs() {
        assert!(SpaceSpec::lp(0.5).is_err());
        assert!(SpaceSpec::entire_with_radii(vec![2.0, 1.0]).is_err());
        assert!(SpaceSpec::disk_with_radii(1.0, vec![0.5, 1.0]).is_err());
        let h = SpaceSpec::entire();
        assert!(matches!(fnorm(&h, &TruncatedVector::unit(-1)), Err(Error::InvalidWindow { .. })));
        assert!(TruncatedVector::from_real(0, &[f64::NAN]).is_err());
    }

    #[test]
    fn fnorm_zero_iff_zero_vector() {
        for space in [l2(), SpaceSpec::c0(), SpaceSpec::entire(), SpaceSpec::disk(2.0).unwrap()] {
            assert_eq!(fnorm(&space, &TruncatedVector::zeros(0, 6)).unwrap(), 0.0);
            assert!(fnorm(&space, &TruncatedVector::unit(4).scaled(1e-300.into())).unwrap() > 0.0);
        }
    }

    #[test]
    fn repr_roundtrip_and_rejections() {
        let s = SpaceSpec::disk(1.0).unwrap();
        let r: SpaceRepr = s.clone().into();
        assert_eq!(SpaceSpec::try_from(r).unwrap(), s);
        let bad = SpaceRepr { family: "lp".into(), p: Some(0.5), radius: None, radii: None, scalar_field: ScalarField::Real };
        assert!(SpaceSpec::try_from(bad).is_err());
    }

    fn spaces() -> Vec<SpaceSpec> {
        vec![
            SpaceSpec::lp(1.0).unwrap(),
            l2(),
            SpaceSpec::lp(3.5).unwrap(),
            SpaceSpec::c0(),
            SpaceSpec::entire(),
            SpaceSpec::disk(1.5).unwrap(),
        ]
    }

    fn vec_strategy() -> impl Strategy<Value = TruncatedVector> {
        proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..12)
            .prop_map(|c| TruncatedVector::new(0, c.into_iter().map(|(a, b)| Scalar::new(a, b)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn triangle_inequality(u in vec_strategy(), v in vec_strategy()) {
            for s in spaces() {
                let lhs = fnorm(&s, &u.add(&v)).unwrap();
                let rhs = fnorm(&s, &u).unwrap() + fnorm(&s, &v).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn subhomogeneity(v in vec_strategy(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let alpha = Scalar::new(a, b);
            for s in spaces() {
                let lhs = fnorm(&s, &v.scaled(alpha)).unwrap();
                let rhs = (1.0 + alpha.norm()) * fnorm(&s, &v).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }

        #[test]
        fn tail_vanishes_past_window(v in vec_strategy(), extra in 0i64..5) {
            for s in spaces() {
                prop_assert_eq!(tail_norm(&s, &v, v.max_abs_index() + extra).unwrap(), 0.0);
            }
        }

        #[test]
        fn lp_disjoint_sum_is_p_mix(a in proptest::collection::vec(-9i32..9, 1..6),
                                     b in proptest::collection::vec(-9i32..9, 1..6),
                                     p in 1u32..4) {
            let s = SpaceSpec::lp(p as f64).unwrap();
            let ua = TruncatedVector::from_real(0, &a.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
            let ub = TruncatedVector::from_real(10, &b.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap();
            let mix = (fnorm(&s, &ua).unwrap().powi(p as i32) + fnorm(&s, &ub).unwrap().powi(p as i32)).powf(1.0 / p as f64);
            let whole = fnorm(&s, &ua.add(&ub)).unwrap();
            prop_assert!((whole - mix).abs() <= 1e-12 * (1.0 + mix));
        }
    }
}
