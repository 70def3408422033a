//! Threshold sequences `δ_n`: user-given closed forms and tables, the
//! block staircase `δ_n = √k |ε_n|` and the two-sided minimum.

use crate::error::{Error, Result};
use crate::random_vectors::UFamily;
use crate::series;
use crate::space::{combine_seminorms, SpaceFamily, SpaceSpec, TruncatedVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// No values past the table.
    #[default]
    Stop,
    /// Repeat the last value.
    HoldLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaRule {
    /// `δ_{|n|} = values[|n|]`.
    Table {
        values: Vec<f64>,
        #[serde(default)]
        extension: Extension,
    },
    /// `δ_n = a + b|n|`.
    Linear { a: f64, b: f64 },
    /// `δ_n = c √log max(|n|, 2)`.
    SqrtLog { c: f64 },
    Constant { value: f64 },
    #[serde(skip)]
    Staircase(StaircaseRecord),
    #[serde(skip)]
    SymmetricMin { plus: Box<DeltaSequence>, minus: Box<DeltaSequence> },
}

impl DeltaRule {
    pub fn table(values: Vec<f64>) -> Self {
        Self::Table { values, extension: Extension::Stop }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    UserGiven,
    DeltaBuilder,
    Symmetrized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Certified(String),
    Bounded(String),
    Unknown(String),
}

impl Divergence {
    pub fn is_certified(&self) -> bool {
        matches!(self, Divergence::Certified(_))
    }

    pub fn message(&self) -> &str {
        match self {
            Divergence::Certified(s) | Divergence::Bounded(s) | Divergence::Unknown(s) => s,
        }
    }
}

/// Positive thresholds on `ℕ` or, symmetrically in `|n|`, on `ℤ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSequence {
    rule: DeltaRule,
    integer_indexed: bool,
    provenance: Provenance,
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive and finite, got {x}")))
    }
}

impl DeltaSequence {
    pub fn user(rule: DeltaRule, integer_indexed: bool) -> Result<Self> {
        match &rule {
            DeltaRule::Table { values, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidArgument("threshold table is empty".into()));
                }
                for v in values {
                    positive(*v, "threshold")?;
                }
            }
            DeltaRule::Linear { a, b } => {
                positive(*a, "intercept")?;
                if !(*b >= 0.0 && b.is_finite()) {
                    return Err(Error::InvalidArgument("slope must be ≥ 0".into()));
                }
            }
            DeltaRule::SqrtLog { c } => positive(*c, "scale")?,
            DeltaRule::Constant { value } => positive(*value, "threshold")?,
            DeltaRule::Staircase(_) | DeltaRule::SymmetricMin { .. } => {
                return Err(Error::InvalidArgument("staircase and symmetric thresholds are built, not given".into()))
            }
        }
        Ok(Self { rule, integer_indexed, provenance: Provenance::UserGiven })
    }

    pub fn rule(&self) -> &DeltaRule {
        &self.rule
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_integer_indexed(&self) -> bool {
        self.integer_indexed
    }

    pub fn staircase(&self) -> Option<&StaircaseRecord> {
        match &self.rule {
            DeltaRule::Staircase(r) => Some(r),
            _ => None,
        }
    }

    /// Last index with a stored value, or `None` when defined everywhere.
    pub fn available_horizon(&self) -> Option<usize> {
        match &self.rule {
            DeltaRule::Table { values, extension: Extension::Stop } => Some(values.len() - 1),
            DeltaRule::Staircase(r) if !r.vanished => Some(r.horizon as usize),
            DeltaRule::SymmetricMin { plus: a, minus: b } => match (a.available_horizon(), b.available_horizon()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
            _ => None,
        }
    }

    pub fn value(&self, n: i64) -> Result<f64> {
        if n < 0 && !self.integer_indexed {
            return Err(Error::InvalidArgument(format!("threshold index {n} < 0 on ℕ")));
        }
        let m = n.unsigned_abs() as usize;
        match &self.rule {
            DeltaRule::Table { values, extension } => match values.get(m) {
                Some(v) => Ok(*v),
                None if *extension == Extension::HoldLast => Ok(*values.last().unwrap()),
                None => Err(Error::HorizonExhausted {
                    horizon: values.len() as i64 - 1,
                    reason: "threshold table has no extension".into(),
                }),
            },
            DeltaRule::Linear { a, b } => Ok(a + b * m as f64),
            DeltaRule::SqrtLog { c } => Ok(c * (m.max(2) as f64).ln().sqrt()),
            DeltaRule::Constant { value } => Ok(*value),
            DeltaRule::Staircase(r) => r.value(m as i64),
            DeltaRule::SymmetricMin { plus: a, minus: b } => Ok(a.value(m as i64)?.min(b.value(m as i64)?)),
        }
    }

    /// `δ_0, …, δ_{n_max}`, shortened to the stored horizon if there is one.
    pub fn natural_values(&self, n_max: usize) -> Result<Vec<f64>> {
        let last = self.available_horizon().map_or(n_max, |h| h.min(n_max));
        (0..=last as i64).map(|n| self.value(n)).collect()
    }

    /// `c` when `δ_n = c √log|n|` for all large `|n|`.
    pub fn sqrt_log_scale(&self) -> Option<f64> {
        match &self.rule {
            DeltaRule::SqrtLog { c } => Some(*c),
            DeltaRule::SymmetricMin { plus: a, minus: b } => Some(a.sqrt_log_scale()?.min(b.sqrt_log_scale()?)),
            _ => None,
        }
    }

    /// True for closed forms that are non-decreasing in `|n|`.
    pub fn is_monotone_rule(&self) -> bool {
        match &self.rule {
            DeltaRule::Linear { .. } | DeltaRule::SqrtLog { .. } | DeltaRule::Constant { .. } => true,
            DeltaRule::SymmetricMin { plus: a, minus: b } => a.is_monotone_rule() && b.is_monotone_rule(),
            _ => false,
        }
    }

    /// Whether `δ_n → ∞`: exact for closed forms, a quartile trend of the
    /// tail infimum for stored values.
    pub fn divergence(&self) -> Divergence {
        match &self.rule {
            DeltaRule::Linear { b, .. } if *b > 0.0 => Divergence::Certified("linear growth".into()),
            DeltaRule::Linear { a, .. } => Divergence::Bounded(format!("δ_n = {a} for all n")),
            DeltaRule::SqrtLog { .. } => Divergence::Certified("√log growth".into()),
            DeltaRule::Constant { value } => Divergence::Bounded(format!("δ_n = {value} for all n")),
            DeltaRule::Table { values, extension: Extension::HoldLast } => {
                Divergence::Bounded(format!("δ_n = {} past the table", values.last().unwrap()))
            }
            DeltaRule::Table { values, .. } => tail_trend(values),
            DeltaRule::Staircase(r) => {
                if r.vanished {
                    Divergence::Bounded(format!("ε vanishes past index {}, so δ_n = 0 there", r.last_nonzero()))
                } else {
                    let values: Vec<f64> = (0..=r.horizon).map(|n| r.value(n).unwrap_or(0.0)).collect();
                    tail_trend(&values)
                }
            }
            DeltaRule::SymmetricMin { plus: a, minus: b } => match (a.divergence(), b.divergence()) {
                (Divergence::Certified(x), Divergence::Certified(y)) => {
                    Divergence::Certified(format!("min of divergent sequences ({x}; {y})"))
                }
                (Divergence::Bounded(x), _) | (_, Divergence::Bounded(x)) => Divergence::Bounded(x),
                (Divergence::Unknown(x), _) | (_, Divergence::Unknown(x)) => Divergence::Unknown(x),
            },
        }
    }
}

/// Strict increase of the tail infimum `inf_{m ≥ n} δ_m` at 16 evenly spaced
/// checkpoints. The infimum is non-decreasing by construction, so a bounded
/// subsequence shows up as a flat stretch between some pair of checkpoints.
fn tail_trend(values: &[f64]) -> Divergence {
    const MARKS: usize = 16;
    let len = values.len();
    if len < 2 * MARKS {
        return Divergence::Unknown(format!("only {len} stored thresholds"));
    }
    let mut inf_tail = values.to_vec();
    for i in (0..len - 1).rev() {
        inf_tail[i] = inf_tail[i].min(inf_tail[i + 1]);
    }
    let marks: Vec<usize> = (1..MARKS).map(|j| j * len / MARKS).chain([len - 1]).collect();
    let at: Vec<f64> = marks.iter().map(|&i| inf_tail[i]).collect();
    match at.windows(2).position(|w| w[1] <= w[0]) {
        None => Divergence::Certified(format!(
            "tail infimum strictly increasing at {MARKS} checkpoints from n = {} ({:.4e}) to n = {} ({:.4e})",
            marks[0],
            at[0],
            len - 1,
            at[MARKS - 1]
        )),
        Some(j) => Divergence::Unknown(format!(
            "tail infimum flat between n = {} and n = {} (value {:.4e})",
            marks[j],
            marks[j + 1],
            at[j + 1]
        )),
    }
}

/// `ε_n` for the staircase builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsRule {
    Table { values: Vec<f64> },
    /// `scale · ratio^n`
    Geometric { scale: f64, ratio: f64 },
    /// `scale · max(n, 1)^exponent`
    Power { scale: f64, exponent: f64 },
    /// `a + b n`
    Affine { a: f64, b: f64 },
}

impl EpsRule {
    pub fn value(&self, n: i64) -> f64 {
        match self {
            EpsRule::Table { values } => values.get(n as usize).copied().unwrap_or(0.0),
            EpsRule::Geometric { scale, ratio } => scale * ratio.powi(n as i32),
            EpsRule::Power { scale, exponent } => scale * (n.max(1) as f64).powf(*exponent),
            EpsRule::Affine { a, b } => a + b * n as f64,
        }
    }

    fn log_abs(&self, n: i64) -> f64 {
        match self {
            EpsRule::Geometric { scale, ratio } => scale.abs().ln() + n as f64 * ratio.abs().ln(),
            EpsRule::Power { scale, exponent } => scale.abs().ln() + exponent * (n.max(1) as f64).ln(),
            _ => self.value(n).abs().ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// Block data of `δ_n = √k |ε_n|` for `N_k < n ≤ N_{k+1}`, with block 1
/// also covering `n ≤ N_1` and the last block open-ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseRecord {
    /// `N_1 < N_2 < …`
    pub cutoffs: Vec<i64>,
    /// Majorant tail norm past `N_k`, each ≤ `1/k²`.
    pub block_tail_bounds: Vec<f64>,
    pub eps_abs: Vec<f64>,
    pub horizon: i64,
    /// The majorant tail is exactly zero past the last cutoff.
    pub vanished: bool,
    /// Remainders past the horizon come from a comparison test (diagonal
    /// families) rather than the finite window alone.
    pub remainder_certified: bool,
    pub side: Side,
}

impl StaircaseRecord {
    /// Block index `k` of `n`.
    pub fn block(&self, n: i64) -> usize {
        self.cutoffs.iter().skip(1).take_while(|c| **c < n).count() + 1
    }

    pub fn value(&self, n: i64) -> Result<f64> {
        if n > self.horizon {
            if self.vanished {
                return Ok(0.0);
            }
            return Err(Error::HorizonExhausted { horizon: self.horizon, reason: "staircase built up to here".into() });
        }
        Ok((self.block(n) as f64).sqrt() * self.eps_abs[n as usize])
    }

    fn last_nonzero(&self) -> usize {
        self.eps_abs.iter().rposition(|e| *e != 0.0).unwrap_or(0)
    }

    /// CSV rows `(k, N_k, tail bound)`.
    pub fn rows(&self) -> Vec<(usize, i64, f64)> {
        self.cutoffs.iter().zip(&self.block_tail_bounds).enumerate().map(|(i, (n, t))| (i + 1, *n, *t)).collect()
    }
}

/// Norm of `Σ_{n>N} a_n |u_n|` for every cutoff `N = 0..=horizon`, the last
/// entry being the remainder past the horizon.
pub fn majorant_tails(
    space: &SpaceSpec,
    family: &UFamily,
    coeff_abs: &[f64],
    side: Side,
) -> Result<(Vec<f64>, bool)> {
    let horizon = coeff_abs.len() - 1;
    let signed = |n: usize| match side {
        Side::Plus => n as i64,
        Side::Minus => -(n as i64),
    };
    let diagonal: Option<Vec<f64>> = (0..=horizon)
        .map(|n| family.diagonal_log_scale(signed(n)).map(|o| o.map(|s| coeff_abs[n].ln() + s)))
        .collect::<Result<Vec<Option<f64>>>>()?
        .into_iter()
        .collect();
    match diagonal {
        Some(log_a) => diagonal_tails(space, &log_a).map(|t| (t, true)),
        None => {
            let mut acc = TruncatedVector::zeros(0, 0);
            let mut tails = vec![0.0; horizon + 1];
            for n in (1..=horizon).rev() {
                tails[n] = crate::space::fnorm(space, &acc)?;
                if coeff_abs[n] != 0.0 {
                    acc = acc.add_scaled(crate::scalar::real(coeff_abs[n]), &family.u(signed(n))?.abs());
                }
            }
            tails[0] = crate::space::fnorm(space, &acc)?;
            Ok((tails, false))
        }
    }
}

fn unavailable() -> Error {
    Error::CertificateUnavailable("no convergent comparison for the majorant series past the horizon".into())
}

fn diagonal_tails(space: &SpaceSpec, log_a: &[f64]) -> Result<Vec<f64>> {
    let h = log_a.len();
    let suffix = |terms: &[f64], remainder: f64| -> Vec<f64> {
        let mut out = vec![0.0; h];
        let mut acc = remainder;
        for n in (0..h).rev() {
            out[n] = acc;
            acc += terms[n];
        }
        out
    };
    match space.family() {
        SpaceFamily::Lp { p } => {
            let lp: Vec<f64> = log_a.iter().map(|l| p * l).collect();
            let r = series::remainder_bound(&lp, 0).ok_or_else(unavailable)?;
            let terms: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            Ok(suffix(&terms, r.bound).into_iter().map(|s| s.powf(1.0 / p)).collect())
        }
        SpaceFamily::C0 => {
            let r = series::remainder_bound(log_a, 0).ok_or_else(unavailable)?;
            let mut out = vec![0.0; h];
            let mut acc = r.bound;
            for n in (0..h).rev() {
                out[n] = acc;
                acc = acc.max(log_a[n].exp());
            }
            Ok(out)
        }
        SpaceFamily::EntireFunctions { radii } | SpaceFamily::DiskFunctions { radii, .. } => {
            let mut per_radius = Vec::new();
            for &r in radii {
                let lr: Vec<f64> = log_a.iter().enumerate().map(|(n, l)| l + n as f64 * r.ln()).collect();
                let rem = series::remainder_bound(&lr, 0).ok_or_else(unavailable)?;
                let terms: Vec<f64> = lr.iter().map(|l| l.exp()).collect();
                per_radius.push(suffix(&terms, rem.bound));
            }
            Ok((0..h)
                .map(|n| combine_seminorms(&per_radius.iter().map(|q| q[n]).collect::<Vec<_>>()))
                .collect())
        }
    }
}

/// Greedy staircase: `N_k` is the smallest index past `N_{k-1}` whose
/// majorant tail is at most `1/k²`; `δ_n = √k |ε_n|` on block `k`.
pub fn build_delta(
    space: &SpaceSpec,
    eps: &EpsRule,
    family: &UFamily,
    side: Side,
    horizon: i64,
) -> Result<(DeltaSequence, StaircaseRecord)> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("builder horizon must be ≥ 1".into()));
    }
    if side == Side::Minus && !family.is_bilateral() {
        return Err(Error::InvalidArgument("negative side needs a bilateral family".into()));
    }
    let eps_abs: Vec<f64> = (0..=horizon).map(|n| eps.value(n).abs()).collect();
    if eps_abs.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite { index: eps_abs.iter().position(|e| !e.is_finite()).unwrap() as i64 });
    }
    let log_eps: Vec<f64> = (0..=horizon).map(|n| if eps_abs[n as usize] == 0.0 { f64::NEG_INFINITY } else { eps.log_abs(n) }).collect();
    let coeff: Vec<f64> = log_eps.iter().map(|l| l.exp()).collect();
    let (tails, remainder_certified) = majorant_tails(space, family, &coeff, side)?;
    let tail_after = |n: i64| tails[n as usize];

    let mut cutoffs = Vec::new();
    let mut bounds = Vec::new();
    let mut next = 0i64;
    let mut vanished = false;
    for k in 1usize.. {
        let target = 1.0 / (k * k) as f64;
        let found = (next..=horizon).find(|&n| tail_after(n) <= target);
        match found {
            Some(n) => {
                cutoffs.push(n);
                bounds.push(tail_after(n));
                if tail_after(n) == 0.0 {
                    vanished = true;
                    break;
                }
                next = n + 1;
                if next > horizon {
                    break;
                }
            }
            None if k == 1 => {
                return Err(Error::HorizonExhausted {
                    horizon,
                    reason: format!("no N_1 with majorant tail ≤ 1 (tail at horizon {:.4e})", tail_after(horizon)),
                })
            }
            None => break,
        }
    }
    let record = StaircaseRecord {
        cutoffs,
        block_tail_bounds: bounds,
        eps_abs,
        horizon,
        vanished,
        remainder_certified,
        side,
    };
    let seq = DeltaSequence { rule: DeltaRule::Staircase(record.clone()), integer_indexed: false, provenance: Provenance::DeltaBuilder };
    Ok((seq, record))
}

/// `min(δ⁺_{|n|}, δ⁻_{|n|})` on `ℤ`.
pub fn symmetrize_delta(plus: &DeltaSequence, minus: &DeltaSequence) -> Result<DeltaSequence> {
    for (name, d) in [("positive-side", plus), ("negative-side", minus)] {
        if d.integer_indexed {
            return Err(Error::InvalidArgument(format!("{name} thresholds must be indexed by ℕ")));
        }
        if let Divergence::Bounded(w) | Divergence::Unknown(w) = d.divergence() {
            return Err(Error::DivergenceRequired { witness: format!("{name} thresholds: {w}") });
        }
    }
    Ok(DeltaSequence {
        rule: DeltaRule::SymmetricMin { plus: Box::new(plus.clone()), minus: Box::new(minus.clone()) },
        integer_indexed: true,
        provenance: Provenance::Symmetrized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_vectors::{CertificateGate, UFamily};
    use crate::shift::WeightSequence;

    fn canonical() -> UFamily {
        UFamily::unilateral(WeightSequence::constant(1.0).unwrap(), CertificateGate::Waived).unwrap()
    }

    #[test]
    fn geometric_eps_on_l1() {
        let l1 = SpaceSpec::lp(1.0).unwrap();
        let eps = EpsRule::Geometric { scale: 1.0, ratio: 0.5 };
        let (delta, rec) = build_delta(&l1, &eps, &canonical(), Side::Plus, 60).unwrap();
        assert_eq!(rec.cutoffs[..3], [0, 2, 4]);
        assert!(rec.cutoffs.windows(2).all(|w| w[1] > w[0]));
        for (k, b) in rec.block_tail_bounds.iter().enumerate() {
            assert!(*b <= 1.0 / ((k + 1) * (k + 1)) as f64);
        }
        for n in 0..=60 {
            let ratio = eps.value(n) / delta.value(n).unwrap();
            assert_eq!(ratio, 1.0 / (rec.block(n) as f64).sqrt());
        }
        assert!(!delta.divergence().is_certified());
    }

    #[test]
    fn finite_support_single_block() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let eps = EpsRule::Table { values: vec![1.0; 6] };
        let (delta, rec) = build_delta(&l2, &eps, &canonical(), Side::Plus, 40).unwrap();
        assert!(rec.vanished);
        assert_eq!(rec.cutoffs, vec![4, 5]);
        for n in 0..6 {
            assert_eq!(delta.value(n).unwrap(), 1.0);
        }
        assert_eq!(delta.value(100).unwrap(), 0.0);
    }

    #[test]
    fn power_eps_tail_small() {
        let l2 = SpaceSpec::lp(2.0).unwrap();
        let eps = EpsRule::Power { scale: 1.0, exponent: -2.0 };
        let (delta, rec) = build_delta(&l2, &eps, &canonical(), Side::Plus, 4000).unwrap();
        // oracle: direct tail of Σ δ_n e_n past the horizon with the last block's scale
        let k = rec.cutoffs.len() as f64;
        let tail: f64 = (4001..4_000_000u64).map(|n| k * (n as f64).powi(-4)).sum::<f64>().sqrt();
        assert!(tail < 1e-3);
        assert!(delta.value(4000).unwrap() > 0.0);
    }

    #[test]
    fn symmetrize_examples() {
        let plus = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 1.0 }, false).unwrap();
        let minus = DeltaSequence::user(DeltaRule::Linear { a: 1.0, b: 2.0 }, false).unwrap();
        let s = symmetrize_delta(&plus, &minus).unwrap();
        for n in -20..=20 {
            assert_eq!(s.value(n).unwrap(), n.abs() as f64 + 1.0);
        }
        let same = symmetrize_delta(&plus, &plus).unwrap();
        assert_eq!(same.value(7).unwrap(), plus.value(7).unwrap());
        let flat = DeltaSequence::user(DeltaRule::Constant { value: 2.0 }, false).unwrap();
        assert!(matches!(symmetrize_delta(&plus, &flat), Err(Error::DivergenceRequired { .. })));
    }

    #[test]
    fn table_divergence_trend() {
        let up = DeltaSequence::user(DeltaRule::table((1..=40).map(|n| n as f64).collect()), false).unwrap();
        assert!(up.divergence().is_certified());
        let flat = DeltaSequence::user(DeltaRule::table(vec![1.0; 40]), false).unwrap();
        assert!(!flat.divergence().is_certified());
        assert!(up.value(40).is_err());
    }
}
