//! Visit frequencies along exact orbits, lower-density sweeps with a
//! Birkhoff time-versus-space comparison, and Monte-Carlo mixing estimates.
//!
//! Exactness of the invariant measure is not estimated: for invertible
//! operators such as the bilateral shift with weights 2 and 1/2 it fails.

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::random_vectors::{orbit_coefficients, RandomVectorSample, UFamily};
use crate::rng::{derive_seed, rng_from_seed, substream};
use crate::scalar::{Scalar, ZERO};
use crate::space::{combine_seminorms, distance, SpaceFamily, SpaceSpec, TruncatedVector};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetBall {
    pub center: TruncatedVector,
    pub radius: f64,
}

impl TargetBall {
    pub fn new(center: TruncatedVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

/// Distance to a fixed center for vectors given on a fixed window `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct WindowMetric {
    space: SpaceSpec,
    lo: i64,
    center: Vec<Scalar>,
    /// `r^j` per radius for function spaces.
    powers: Vec<Vec<f64>>,
    /// Center mass outside the window, per radius (function spaces), as
    /// `Σ|y|^p` (ℓ^p) or `max|y|` (c₀).
    outside: Vec<f64>,
}

impl WindowMetric {
    pub fn new(space: &SpaceSpec, center: &TruncatedVector, lo: i64, hi: i64) -> Self {
        let inside = |n: i64| n >= lo && n <= hi;
        let c: Vec<Scalar> = (lo..=hi).map(|n| center.get(n)).collect();
        let outside_terms: Vec<(i64, f64)> = center.iter().filter(|(n, _)| !inside(*n)).map(|(n, y)| (n, y.norm())).collect();
        let (powers, outside) = match space.family() {
            SpaceFamily::Lp { p } => (vec![], vec![outside_terms.iter().map(|(_, m)| m.powf(*p)).sum()]),
            SpaceFamily::C0 => (vec![], vec![outside_terms.iter().map(|(_, m)| *m).fold(0.0, f64::max)]),
            SpaceFamily::EntireFunctions { radii } | SpaceFamily::DiskFunctions { radii, .. } => {
                let powers = radii.iter().map(|r| (lo..=hi).map(|j| r.powi(j as i32)).collect()).collect();
                let outside = radii.iter().map(|r| outside_terms.iter().map(|(n, m)| m * r.powi(*n as i32)).sum()).collect();
                (powers, outside)
            }
        };
        Self { space: space.clone(), lo, center: c, powers, outside }
    }

    /// Distance from `Σ_i coeffs[i] e_{lo+i}` to the center.
    pub fn distance(&self, coeffs: &[Scalar]) -> f64 {
        let diffs = coeffs.iter().zip(&self.center).map(|(c, y)| (c - y).norm());
        match self.space.family() {
            SpaceFamily::Lp { p } => {
                let s: f64 = diffs.map(|d| if *p == 1.0 { d } else { d.powf(*p) }).sum::<f64>() + self.outside[0];
                s.powf(1.0 / p)
            }
            SpaceFamily::C0 => diffs.fold(self.outside[0], f64::max),
            _ => {
                let d: Vec<f64> = diffs.collect();
                let q: Vec<f64> = self
                    .powers
                    .iter()
                    .zip(&self.outside)
                    .map(|(pw, o)| d.iter().zip(pw).map(|(a, b)| a * b).sum::<f64>() + o)
                    .collect();
                combine_seminorms(&q)
            }
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }
}

/// Orbit points `A^m v` restricted to the index range where the family's
/// diagonal scales are nonzero; `None` for non-diagonal families.
struct DiagonalOrbit {
    lo: i64,
    scales: Vec<Scalar>,
}

impl DiagonalOrbit {
    fn new(family: &UFamily, sample_lo: i64, sample_hi: i64, n_orbit: i64) -> Result<Option<Self>> {
        let lo = if family.is_bilateral() { sample_lo - n_orbit } else { 0 };
        let hi = sample_hi;
        let Some(scales) = family.diagonal_scales(lo, hi)? else { return Ok(None) };
        let first = scales.iter().position(|s| *s != ZERO);
        let last = scales.iter().rposition(|s| *s != ZERO);
        Ok(Some(match (first, last) {
            (Some(a), Some(b)) => Self { lo: lo + a as i64, scales: scales[a..=b].to_vec() },
            _ => Self { lo: 0, scales: vec![ZERO] },
        }))
    }

    fn hi(&self) -> i64 {
        self.lo + self.scales.len() as i64 - 1
    }

    /// Coefficients of `A^m v` on `[self.lo, self.hi]`.
    fn point(&self, sample: &RandomVectorSample, m: i64, out: &mut Vec<Scalar>) {
        out.clear();
        out.extend(self.scales.iter().enumerate().map(|(i, s)| match sample.x(self.lo + i as i64 + m) {
            Some(x) => x * s,
            None => ZERO,
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub seed: u64,
    pub n_orbit: i64,
    #[serde(skip)]
    pub hits: Vec<bool>,
    /// Hits within the sample's tail certificate of the ball boundary.
    #[serde(skip)]
    pub ambiguous: Vec<bool>,
    #[serde(skip)]
    pub running: Vec<f64>,
    pub hit_count: usize,
    pub ambiguous_count: usize,
    /// Minimum running frequency over the trailing half of the orbit.
    pub liminf_proxy: f64,
    /// Final running frequency `|{n ≤ N: hit}| / (N + 1)`.
    pub time_average: f64,
}

fn report(seed: u64, n_orbit: i64, hits: Vec<bool>, ambiguous: Vec<bool>) -> FrequencyReport {
    let mut running = Vec::with_capacity(hits.len());
    let mut count = 0usize;
    for (i, h) in hits.iter().enumerate() {
        count += *h as usize;
        running.push(count as f64 / (i + 1) as f64);
    }
    let half = running.len() / 2;
    let liminf_proxy = running[half..].iter().copied().fold(f64::INFINITY, f64::min);
    FrequencyReport {
        seed,
        n_orbit,
        hit_count: count,
        ambiguous_count: ambiguous.iter().filter(|a| **a).count(),
        time_average: *running.last().unwrap(),
        hits,
        ambiguous,
        running,
        liminf_proxy,
    }
}

/// Visit statistics of `A^n v`, `n = 0..=n_orbit`, for several balls at once.
pub fn visit_frequencies(
    space: &SpaceSpec,
    family: &UFamily,
    sample: &RandomVectorSample,
    balls: &[TargetBall],
    n_orbit: i64,
) -> Result<Vec<FrequencyReport>> {
    if n_orbit < 0 || n_orbit > sample.n_window {
        return Err(Error::OrbitHorizonExceeded { step: n_orbit, max: sample.n_window });
    }
    let margin = sample.tail_certificate.unwrap_or(0.0);
    let steps = n_orbit as usize + 1;
    let mut hits = vec![Vec::with_capacity(steps); balls.len()];
    let mut ambiguous = vec![Vec::with_capacity(steps); balls.len()];
    let mut record = |b: usize, d: f64| {
        let r = balls[b].radius;
        hits[b].push(d < r);
        ambiguous[b].push((d - r).abs() <= margin);
    };
    match DiagonalOrbit::new(family, sample.lo, sample.hi(), n_orbit)? {
        Some(orbit) => {
            let metrics: Vec<WindowMetric> =
                balls.iter().map(|b| WindowMetric::new(space, &b.center, orbit.lo, orbit.hi())).collect();
            let mut buf = Vec::new();
            for m in 0..=n_orbit {
                orbit.point(sample, m, &mut buf);
                for (b, metric) in metrics.iter().enumerate() {
                    record(b, metric.distance(&buf));
                }
            }
        }
        None => {
            for m in 0..=n_orbit {
                let point = orbit_coefficients(family, sample, m)?;
                for (b, ball) in balls.iter().enumerate() {
                    record(b, distance(space, &point, &ball.center)?);
                }
            }
        }
    }
    Ok(hits.into_iter().zip(ambiguous).map(|(h, a)| report(sample.seed, n_orbit, h, a)).collect())
}

pub fn visit_frequency(
    space: &SpaceSpec,
    family: &UFamily,
    sample: &RandomVectorSample,
    ball: &TargetBall,
    n_orbit: i64,
) -> Result<FrequencyReport> {
    Ok(visit_frequencies(space, family, sample, std::slice::from_ref(ball), n_orbit)?.remove(0))
}

/// Whether `v = Σ_{window} X_n u_n` lies in each ball, for `reps`
/// independent vectors.
fn space_average(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    balls: &[TargetBall],
    n_window: i64,
    reps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = family.window(n_window);
    let hi = if family.is_diagonal() && !family.is_bilateral() { family.effective_window(hi)? } else { hi };
    let len = (hi - lo + 1) as usize;
    let scales = family.diagonal_scales(lo, hi)?;
    let metrics: Vec<WindowMetric> = balls.iter().map(|b| WindowMetric::new(space, &b.center, lo, hi)).collect();
    let inside: Vec<Vec<bool>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, "space-average", i);
            let x = dist.sample(&mut rng, len);
            match &scales {
                Some(s) => {
                    let v: Vec<Scalar> = x.iter().zip(s).map(|(a, b)| a * b).collect();
                    Ok(metrics.iter().zip(balls).map(|(m, b)| m.distance(&v) < b.radius).collect())
                }
                None => {
                    let v = family.combine(lo, &x)?;
                    balls.iter().map(|b| Ok(distance(space, &v, &b.center)? < b.radius)).collect()
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..balls.len())
        .map(|b| {
            let p = inside.iter().filter(|r| r[b]).count() as f64 / reps as f64;
            (p, (p * (1.0 - p) / reps as f64).sqrt())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSummary {
    pub ball: usize,
    pub mean_liminf_proxy: f64,
    pub min_liminf_proxy: f64,
    pub mean_time_average: f64,
    pub time_average_stderr: f64,
    pub p_hat: f64,
    pub p_hat_stderr: f64,
    pub combined_stderr: f64,
    /// `|mean time average - P̂| / combined stderr`.
    pub birkhoff_z: f64,
    /// `|mean liminf proxy - P̂| / combined stderr`, the stderr using the
    /// spread of the proxies.
    pub proxy_z: f64,
    pub ambiguous_hits: usize,
}

fn z_score(gap: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        gap / stderr
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Attached to mixing reports for bilateral families.
pub const EXACTNESS_NOTE: &str =
    "exactness is not estimated; an invertible operator such as the bilateral shift with weights 2 and 1/2 cannot carry an exact measure";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub summaries: Vec<BallSummary>,
    /// `[replica][ball]`
    pub replicas: Vec<Vec<FrequencyReport>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub n_window: i64,
    pub n_orbit: i64,
    pub replicas: usize,
    /// Independent vectors for the space average `P̂(v ∈ O)`.
    pub space_reps: usize,
    pub seed: u64,
}

/// Lower-density proxies across independent replicas, plus the Birkhoff
/// comparison of time averages with `P̂(v ∈ O)`.
pub fn lower_density_sweep(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    balls: &[TargetBall],
    cfg: SweepConfig,
) -> Result<SweepReport> {
    if balls.is_empty() || cfg.replicas == 0 {
        return Err(Error::InvalidArgument("need at least one ball and one replica".into()));
    }
    let replicas: Vec<Vec<FrequencyReport>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(cfg.seed, "replica", r);
            let sample = crate::random_vectors::sample_vector(space, family, dist, cfg.n_window, None, seed)?;
            visit_frequencies(space, family, &sample, balls, cfg.n_orbit)
        })
        .collect::<Result<Vec<_>>>()?;
    let space_avg = space_average(space, family, dist, balls, cfg.n_window, cfg.space_reps, cfg.seed)?;
    let rcount = cfg.replicas as f64;
    let summaries = (0..balls.len())
        .map(|b| {
            let proxies: Vec<f64> = replicas.iter().map(|r| r[b].liminf_proxy).collect();
            let times: Vec<f64> = replicas.iter().map(|r| r[b].time_average).collect();
            let mean_t = times.iter().sum::<f64>() / rcount;
            let var_t = if cfg.replicas > 1 {
                times.iter().map(|t| (t - mean_t).powi(2)).sum::<f64>() / (rcount - 1.0)
            } else {
                0.0
            };
            let (p, p_se) = space_avg[b];
            let combined = (var_t / rcount + p_se * p_se).sqrt();
            let gap = (mean_t - p).abs();
            let mean_p = proxies.iter().sum::<f64>() / rcount;
            let var_p = if cfg.replicas > 1 {
                proxies.iter().map(|t| (t - mean_p).powi(2)).sum::<f64>() / (rcount - 1.0)
            } else {
                0.0
            };
            let combined_p = (var_p / rcount + p_se * p_se).sqrt();
            BallSummary {
                ball: b,
                mean_liminf_proxy: mean_p,
                min_liminf_proxy: proxies.iter().copied().fold(f64::INFINITY, f64::min),
                mean_time_average: mean_t,
                time_average_stderr: (var_t / rcount).sqrt(),
                p_hat: p,
                p_hat_stderr: p_se,
                combined_stderr: combined,
                birkhoff_z: z_score(gap, combined),
                proxy_z: z_score((mean_p - p).abs(), combined_p),
                ambiguous_hits: replicas.iter().map(|r| r[b].ambiguous_count).sum(),
            }
        })
        .collect();
    Ok(SweepReport { summaries, replicas })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingRow {
    pub n: i64,
    pub joint: f64,
    /// `P̂(A^n v ∈ A)`
    pub p_a: f64,
    /// `P̂(v ∈ B)`
    pub p_b: f64,
    pub product: f64,
    pub difference: f64,
    pub stderr: f64,
    /// The coefficient windows of `v` and `A^n v` are disjoint.
    pub structurally_independent: bool,
}

/// `P̂(A^n v ∈ A, v ∈ B) - P̂(A^n v ∈ A) P̂(v ∈ B)` over `reps` independent
/// vectors. `A^n v` is read on the same coefficient window as `v`, using
/// the stream shifted by `n`.
#[allow(clippy::too_many_arguments)]
pub fn mixing_correlation(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    a: &TargetBall,
    b: &TargetBall,
    n_grid: &[i64],
    reps: usize,
    n_window: i64,
    seed: u64,
) -> Result<Vec<MixingRow>> {
    if reps < 2 || n_grid.iter().any(|n| *n < 0) {
        return Err(Error::InvalidArgument("mixing needs ≥ 2 replicas and n ≥ 0".into()));
    }
    let (lo, hi) = family.window(n_window);
    let width = (hi - lo + 1) as usize;
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let stream_len = width + n_max as usize;
    let scales = family.diagonal_scales(lo, hi)?;
    let metric_a = WindowMetric::new(space, &a.center, lo, hi);
    let metric_b = WindowMetric::new(space, &b.center, lo, hi);
    let point = |x: &[Scalar]| -> Result<Vec<Scalar>> {
        match &scales {
            Some(s) => Ok(x.iter().zip(s).map(|(c, d)| c * d).collect()),
            None => {
                let v = family.combine(lo, x)?;
                Ok((lo..=hi).map(|n| v.get(n)).collect())
            }
        }
    };
    // per replica: (v ∈ B, [A^n v ∈ A for n in grid])
    let draws: Vec<(bool, Vec<bool>)> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, "mixing", i);
            let x = dist.sample(&mut rng, stream_len);
            let in_b = metric_b.distance(&point(&x[..width])?) < b.radius;
            let in_a = n_grid
                .iter()
                .map(|&n| Ok(metric_a.distance(&point(&x[n as usize..n as usize + width])?) < a.radius))
                .collect::<Result<Vec<bool>>>()?;
            Ok((in_b, in_a))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = reps as f64;
    let p_b = draws.iter().filter(|d| d.0).count() as f64 / m;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let p_a = draws.iter().filter(|d| d.1[g]).count() as f64 / m;
            let joint = draws.iter().filter(|d| d.0 && d.1[g]).count() as f64 / m;
            let ds: Vec<f64> = draws
                .iter()
                .map(|d| {
                    let (ia, ib) = (d.1[g] as u8 as f64, d.0 as u8 as f64);
                    ia * ib - p_b * ia - p_a * ib
                })
                .collect();
            let mean = ds.iter().sum::<f64>() / m;
            let var = ds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            MixingRow {
                n,
                joint,
                p_a,
                p_b,
                product: p_a * p_b,
                difference: joint - p_a * p_b,
                stderr: (var / m).sqrt(),
                structurally_independent: n > hi - lo,
            }
        })
        .collect())
}

/// Fresh-orbit recomputation of a single hit, for determinism checks.
pub fn hit_from_scratch(
    space: &SpaceSpec,
    family: &UFamily,
    dist: &DistributionSpec,
    n_window: i64,
    seed: u64,
    ball: &TargetBall,
    m: i64,
) -> Result<bool> {
    let (lo, hi) = family.window(n_window);
    let x = dist.sample(&mut rng_from_seed(seed), (hi - lo + 1) as usize);
    let sample = RandomVectorSample {
        seed,
        n_window,
        lo,
        assembled: family.combine(lo, &x)?,
        stream: x,
        tail_certificate: None,
    };
    Ok(distance(space, &orbit_coefficients(family, &sample, m)?, &ball.center)? < ball.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_vectors::{sample_vector, CertificateGate};
    use crate::scalar::real;
    use crate::shift::{WeightRule, WeightSequence};

    fn d_operator() -> UFamily {
        UFamily::unilateral(WeightSequence::linear(), CertificateGate::Waived).unwrap()
    }

    fn rolewicz() -> UFamily {
        UFamily::unilateral(WeightSequence::constant(2.0).unwrap(), CertificateGate::Waived).unwrap()
    }

    fn remark() -> UFamily {
        let w = WeightSequence::new(WeightRule::Split { upper: 2.0, lower: 0.5 }, true).unwrap();
        UFamily::bilateral(w, CertificateGate::Waived).unwrap()
    }

    #[test]
    fn window_metric_matches_space_distance() {
        let center = TruncatedVector::from_real(0, &[1.0, 1.0]).unwrap();
        let v = TruncatedVector::from_real(0, &[0.3, -0.2, 0.5, 0.0, 1e-3]).unwrap();
        for space in [SpaceSpec::entire(), SpaceSpec::lp(2.0).unwrap(), SpaceSpec::lp(1.0).unwrap(), SpaceSpec::c0(), SpaceSpec::disk(2.0).unwrap()] {
            let m = WindowMetric::new(&space, &center, 0, 4);
            let d = m.distance(v.coeffs());
            let oracle = distance(&space, &v, &center).unwrap();
            assert!((d - oracle).abs() <= 1e-14 * oracle.max(1.0), "{space:?}");
        }
        let shifted = WindowMetric::new(&SpaceSpec::lp(2.0).unwrap(), &center, 1, 4);
        let oracle = distance(&SpaceSpec::lp(2.0).unwrap(), &v.tail(0), &center).unwrap();
        assert!((shifted.distance(&v.coeffs()[1..]) - oracle).abs() < 1e-14);
    }

    #[test]
    fn huge_ball_is_everything() {
        let space = SpaceSpec::entire();
        let s = sample_vector(&space, &d_operator(), &DistributionSpec::standard_gaussian(), 300, None, 1).unwrap();
        let ball = TargetBall::new(TruncatedVector::zeros(0, 0), 1e9).unwrap();
        let r = visit_frequency(&space, &d_operator(), &s, &ball, 200).unwrap();
        assert_eq!(r.liminf_proxy, 1.0);
        assert_eq!(r.hit_count, 201);
    }

    #[test]
    fn far_ball_is_never_hit() {
        let space = SpaceSpec::lp(2.0).unwrap();
        let s = sample_vector(&space, &rolewicz(), &DistributionSpec::standard_gaussian(), 300, None, 1).unwrap();
        let ball = TargetBall::new(TruncatedVector::unit(0).scaled(real(1e6)), 1e-3).unwrap();
        let r = visit_frequency(&space, &rolewicz(), &s, &ball, 200).unwrap();
        assert_eq!(r.hit_count, 0);
        assert_eq!(r.liminf_proxy, 0.0);
    }

    #[test]
    fn streamed_hits_match_fresh_orbits() {
        let space = SpaceSpec::lp(2.0).unwrap();
        let dist = DistributionSpec::standard_gaussian();
        let ball = TargetBall::new(TruncatedVector::unit(0), 1.0).unwrap();
        let s = sample_vector(&space, &rolewicz(), &dist, 120, None, 77).unwrap();
        let r = visit_frequency(&space, &rolewicz(), &s, &ball, 100).unwrap();
        for m in [0, 1, 17, 50, 99] {
            assert_eq!(r.hits[m as usize], hit_from_scratch(&space, &rolewicz(), &dist, 120, 77, &ball, m).unwrap());
        }
        let again = visit_frequency(&space, &rolewicz(), &s, &ball, 100).unwrap();
        assert_eq!(r, again);
        assert!(visit_frequency(&space, &rolewicz(), &s, &ball, 121).is_err());
    }

    #[test]
    fn proxy_bounded_by_running_max() {
        let space = SpaceSpec::lp(2.0).unwrap();
        let s = sample_vector(&space, &rolewicz(), &DistributionSpec::standard_gaussian(), 500, None, 3).unwrap();
        let ball = TargetBall::new(TruncatedVector::zeros(0, 0), 1.5).unwrap();
        let r = visit_frequency(&space, &rolewicz(), &s, &ball, 400).unwrap();
        let max = r.running.iter().copied().fold(0.0, f64::max);
        assert!(r.liminf_proxy >= 0.0 && r.liminf_proxy <= max);
    }

    #[test]
    fn sweep_trivial_ball() {
        let space = SpaceSpec::lp(2.0).unwrap();
        let ball = TargetBall::new(TruncatedVector::zeros(0, 0), 1e9).unwrap();
        let cfg = SweepConfig { n_window: 80, n_orbit: 60, replicas: 3, space_reps: 200, seed: 5 };
        let r = lower_density_sweep(&space, &rolewicz(), &DistributionSpec::standard_gaussian(), &[ball], cfg).unwrap();
        assert_eq!(r.summaries[0].min_liminf_proxy, 1.0);
        assert_eq!(r.summaries[0].p_hat, 1.0);
    }

    #[test]
    fn mixing_identity_at_zero() {
        let space = SpaceSpec::lp(2.0).unwrap();
        let ball = TargetBall::new(TruncatedVector::zeros(0, 0), 1.2).unwrap();
        let rows = mixing_correlation(&space, &remark(), &DistributionSpec::standard_gaussian(), &ball, &ball, &[0, 70], 4000, 30, 9).unwrap();
        assert_eq!(rows[0].joint, rows[0].p_a);
        assert!((rows[0].difference - (rows[0].p_a - rows[0].p_a * rows[0].p_a)).abs() < 1e-15);
        assert!(rows[1].structurally_independent && !rows[0].structurally_independent);
        assert!(rows[1].difference.abs() <= 4.0 * rows[1].stderr);
    }
}
