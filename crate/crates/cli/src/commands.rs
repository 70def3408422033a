//! One function per CLI command. CSV schemas are listed in the README.

use crate::runner::{Command, Ctx, RunError};
use hyperorbit_core::distributions::{tail_sum, DistributionSpec};
use hyperorbit_core::dynamics::{lower_density_sweep, mixing_correlation, SweepConfig, TargetBall, EXACTNESS_NOTE};
use hyperorbit_core::export::{fmt_f64, fmt_opt, fmt_scalar, Series, Table};
use hyperorbit_core::random_vectors::{ball_probability_lower_bound, empirical_ball_probability, sample_rows, sample_vector};
use hyperorbit_core::shift::{chaoticity_criterion, check_series_condition, polynomial_basis, ChaoticityOptions};
use hyperorbit_core::Verdict;

macro_rules! proceed {
    ($step:expr) => {
        match $step? {
            Ok(v) => v,
            Err(crate::runner::Halt) => return Ok(()),
        }
    };
}

pub fn dispatch(ctx: &mut Ctx, command: Command) -> Result<(), RunError> {
    match command {
        Command::DensityCheck => density_check(ctx),
        Command::SeriesCheck => series_check(ctx),
        Command::DeltaBuild => delta_build(ctx),
        Command::Sample => sample(ctx),
        Command::LowerDensity => lower_density(ctx),
        Command::Mixing => mixing(ctx),
        Command::BallBound => ball_bound(ctx),
        Command::FhcBuild => fhc_build(ctx),
        Command::PolyBasis => poly_basis(ctx),
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

fn targets(ctx: &Ctx, command: &str) -> Result<Vec<TargetBall>, RunError> {
    if ctx.cfg.targets.is_empty() {
        return Err(RunError::Config(format!("{command} needs at least one [[targets]] entry")));
    }
    ctx.cfg.targets.iter().map(|t| Ok(TargetBall::new(t.center_vector()?, t.radius)?)).collect()
}

/// Annulus-density table and the tail-sum certificate of the density
/// against its own thresholds.
fn tail_sum_step(ctx: &mut Ctx, dist: &DistributionSpec, deltas: &hyperorbit_core::delta::DeltaSequence) -> Result<(), RunError> {
    let cert = tail_sum(dist, deltas, ctx.horizon as usize, ctx.cfg.run.tol)?;
    let mut t = Table::new(["partial_sum", "tail_bound", "total", "method", "horizon", "verdict"]);
    t.push(vec![
        fmt_f64(cert.partial_sum),
        fmt_opt(cert.tail_bound),
        fmt_opt(cert.total()),
        cert.method.clone(),
        s(cert.horizon),
        s(cert.verdict),
    ]);
    ctx.write_csv("tail_sum.csv", &t)?;
    ctx.value("tail_sum_total", cert.total());
    ctx.certify("tail_sum", cert.verdict, cert.witness.clone().unwrap_or(cert.method));
    Ok(())
}

fn density_check(ctx: &mut Ctx) -> Result<(), RunError> {
    let (deltas, _) = ctx.deltas(None)?.ok_or_else(|| RunError::Config("density-check needs a [deltas] section".into()))?;
    let dist = match &ctx.cfg.distribution {
        crate::config::DistributionConfig::Annulus { .. } => proceed!(ctx.distribution(Some(&deltas))),
        other => {
            let field = other.field();
            match hyperorbit_core::distributions::build_annulus_density(&deltas, field) {
                Ok(d) => {
                    ctx.certify("divergence", Verdict::Pass, deltas.divergence().message().to_string());
                    DistributionSpec::Annulus(d)
                }
                Err(hyperorbit_core::Error::DivergenceRequired { witness }) => {
                    ctx.certify("divergence", Verdict::Fail, witness);
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let DistributionSpec::Annulus(density) = &dist else { unreachable!() };
    let mut t = Table::new(["k", "outer_threshold", "annulus_mass", "height"]);
    for k in 0..density.thresholds().len() {
        t.push(vec![s(k), fmt_f64(density.threshold(k)), fmt_f64(density.annulus_mass(k)), fmt_f64(density.height(k))]);
    }
    ctx.write_csv("density.csv", &t)?;
    if !density.dropped().is_empty() {
        ctx.note(format!("{} thresholds dropped to restore strict increase", density.dropped().len()));
    }
    tail_sum_step(ctx, &dist, &deltas)
}

fn series_check(ctx: &mut Ctx) -> Result<(), RunError> {
    let w = ctx.weights()?;
    let mut t = Table::new(["kind", "side", "radius", "verdict", "partial_sum", "tail_estimate", "remainder_bound", "comparison"]);
    let mut tails = Vec::new();
    for kind in ctx.cfg.run.series_kinds.clone() {
        let cert = check_series_condition(ctx.space(), &w, kind, ctx.horizon, ctx.cfg.run.tol)?;
        let name = match kind {
            hyperorbit_core::shift::SeriesKind::Plain => "plain",
            hyperorbit_core::shift::SeriesKind::SqrtLog => "sqrt_log",
        };
        for side in &cert.sides {
            t.push(vec![
                name.into(),
                side.side.into(),
                fmt_opt(side.radius),
                s(side.verdict),
                fmt_f64(side.partial_sum),
                fmt_f64(side.tail_estimate),
                fmt_opt(side.remainder.map(|r| r.bound)),
                side.remainder.map(|r| format!("{:?}", r.comparison)).unwrap_or_default(),
            ]);
        }
        let detail = match &cert.witness {
            Some(w) => format!("divergence witness: {w}"),
            None => format!("horizon {}", cert.horizon),
        };
        if let Some(wit) = &cert.witness {
            ctx.value(&format!("series_{name}_witness"), wit);
        }
        tails.push(Series {
            label: name.into(),
            points: cert.tail_estimates.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
        });
        ctx.certify(&format!("series_{name}"), cert.verdict, detail);
    }
    ctx.write_csv("series.csv", &t)?;
    if ctx.space().is_function_space() && !ctx.bilateral() {
        let cert = chaoticity_criterion(ctx.space(), &w, ctx.horizon, ChaoticityOptions::default())?;
        let mut c = Table::new(["n", "root"]);
        for (i, r) in cert.roots.iter().enumerate() {
            c.push(vec![s(i + 1), fmt_f64(*r)]);
        }
        ctx.write_csv("chaoticity.csv", &c)?;
        ctx.certify("chaoticity", cert.verdict, cert.note.clone());
    }
    ctx.write_plot("series.svg", "tail estimates", "index", "tail", &tails)
}

fn delta_build(ctx: &mut Ctx) -> Result<(), RunError> {
    if !matches!(ctx.cfg.deltas, Some(crate::config::DeltaConfig::Builder { .. } | crate::config::DeltaConfig::Symmetrized { .. })) {
        return Err(RunError::Config("delta-build needs [deltas] with source = \"builder\" or \"symmetrized\"".into()));
    }
    let family = proceed!(ctx.family());
    let (deltas, records) = ctx.deltas(Some(&family))?.expect("checked above");
    let mut t = Table::new(["side", "k", "cutoff", "block_tail_bound"]);
    let mut bounds_ok = true;
    for rec in &records {
        for (k, n, b) in rec.rows() {
            bounds_ok &= b <= 1.0 / (k * k) as f64;
            t.push(vec![format!("{:?}", rec.side).to_lowercase(), s(k), s(n), fmt_f64(b)]);
        }
    }
    ctx.write_csv("staircase.csv", &t)?;
    ctx.certify("staircase_bounds", if bounds_ok { Verdict::Pass } else { Verdict::Fail }, "block tail bounds ≤ 1/k²");
    if records.iter().any(|r| !r.remainder_certified) {
        ctx.note("majorant tails past the builder horizon come from the finite window only");
    }
    let rec = &records[0];
    let mut d = Table::new(["n", "eps_abs", "delta"]);
    for n in 0..=rec.horizon {
        d.push(vec![s(n), fmt_f64(rec.eps_abs[n as usize]), fmt_f64(deltas.value(n)?)]);
    }
    ctx.write_csv("deltas.csv", &d)?;
    let dist = proceed!(ctx.distribution(Some(&deltas)));
    if let DistributionSpec::Annulus(_) = dist {
        tail_sum_step(ctx, &dist, &deltas)?;
    } else {
        match hyperorbit_core::distributions::build_annulus_density(&deltas, dist.field()) {
            Ok(density) => {
                ctx.certify("divergence", Verdict::Pass, deltas.divergence().message().to_string());
                tail_sum_step(ctx, &DistributionSpec::Annulus(density), &deltas)?;
            }
            Err(hyperorbit_core::Error::DivergenceRequired { witness }) => {
                let verdict = match deltas.divergence() {
                    hyperorbit_core::delta::Divergence::Bounded(_) => Verdict::Fail,
                    _ => Verdict::Inconclusive,
                };
                ctx.certify("divergence", verdict, witness);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn sample(ctx: &mut Ctx) -> Result<(), RunError> {
    let family = proceed!(ctx.family());
    let deltas = ctx.deltas(Some(&family))?.map(|d| d.0);
    let dist = proceed!(ctx.distribution(deltas.as_ref()));
    let sample = sample_vector(ctx.space(), &family, &dist, ctx.cfg.run.n_window, deltas.as_ref(), ctx.seed)?;
    let mut t = Table::new(["n", "x_re", "x_im", "coeff_re", "coeff_im"]);
    for (n, x, c) in sample_rows(&sample) {
        let [xr, xi] = fmt_scalar(x);
        let [cr, ci] = fmt_scalar(c);
        t.push(vec![s(n), xr, xi, cr, ci]);
    }
    ctx.write_csv("samples.csv", &t)?;
    ctx.value("distribution", dist.name());
    ctx.value("n_window", sample.n_window);
    if deltas.is_some() {
        match sample.tail_certificate {
            Some(b) => ctx.certify("tail_certificate", Verdict::Pass, format!("δ-majorant tail past the window ≤ {b:e}")),
            None => ctx.certify("tail_certificate", Verdict::Inconclusive, "no δ-majorant tail bound"),
        }
    }
    Ok(())
}

fn lower_density(ctx: &mut Ctx) -> Result<(), RunError> {
    let balls = targets(ctx, "lower-density")?;
    let family = proceed!(ctx.family());
    let deltas = ctx.deltas(Some(&family))?.map(|d| d.0);
    let dist = proceed!(ctx.distribution(deltas.as_ref()));
    let r = &ctx.cfg.run;
    let cfg = SweepConfig { n_window: r.n_window, n_orbit: r.n_orbit, replicas: r.replicas, space_reps: r.space_reps, seed: ctx.seed };
    let report = lower_density_sweep(ctx.space(), &family, &dist, &balls, cfg)?;
    let mut t = Table::new([
        "ball",
        "mean_liminf_proxy",
        "min_liminf_proxy",
        "mean_time_average",
        "time_average_stderr",
        "p_hat",
        "p_hat_stderr",
        "combined_stderr",
        "birkhoff_z",
        "proxy_z",
        "ambiguous_hits",
    ]);
    for b in &report.summaries {
        t.push(vec![
            s(b.ball),
            fmt_f64(b.mean_liminf_proxy),
            fmt_f64(b.min_liminf_proxy),
            fmt_f64(b.mean_time_average),
            fmt_f64(b.time_average_stderr),
            fmt_f64(b.p_hat),
            fmt_f64(b.p_hat_stderr),
            fmt_f64(b.combined_stderr),
            fmt_f64(b.birkhoff_z),
            fmt_f64(b.proxy_z),
            s(b.ambiguous_hits),
        ]);
    }
    ctx.write_csv("balls.csv", &t)?;
    let mut rep = Table::new(["replica", "ball", "seed", "liminf_proxy", "time_average", "hit_count"]);
    for (i, per) in report.replicas.iter().enumerate() {
        for (b, f) in per.iter().enumerate() {
            rep.push(vec![s(i), s(b), s(f.seed), fmt_f64(f.liminf_proxy), fmt_f64(f.time_average), s(f.hit_count)]);
        }
    }
    ctx.write_csv("replicas.csv", &rep)?;
    let first = &report.replicas[0];
    let mut headers = vec!["n".to_string()];
    headers.extend((0..first.len()).map(|b| format!("running_{b}")));
    let mut run = Table::new(headers);
    for n in 0..first[0].running.len() {
        let mut row = vec![s(n)];
        row.extend(first.iter().map(|f| fmt_f64(f.running[n])));
        run.push(row);
    }
    ctx.write_csv("running.csv", &run)?;
    let min_proxy = report.summaries.iter().map(|b| b.min_liminf_proxy).fold(f64::INFINITY, f64::min);
    let max_z = report.summaries.iter().map(|b| b.birkhoff_z).fold(0.0, f64::max);
    ctx.value("min_liminf_proxy", min_proxy);
    ctx.value("max_birkhoff_z", max_z);
    ctx.certify(
        "liminf_positive",
        if min_proxy > 0.0 { Verdict::Pass } else { Verdict::Fail },
        format!("minimum liminf proxy over balls and replicas: {min_proxy}"),
    );
    ctx.certify(
        "birkhoff",
        if max_z < 5.0 { Verdict::Pass } else { Verdict::Fail },
        format!("max |time average - P̂| / combined stderr = {max_z:.3}"),
    );
    let series: Vec<Series> = first
        .iter()
        .enumerate()
        .map(|(b, f)| Series { label: format!("ball {b}"), points: f.running.iter().enumerate().map(|(n, v)| (n as f64, *v)).collect() })
        .collect();
    ctx.write_plot("running.svg", "running visit frequency (replica 0)", "n", "frequency", &series)
}

fn mixing(ctx: &mut Ctx) -> Result<(), RunError> {
    let balls = targets(ctx, "mixing")?;
    let m = ctx.cfg.mixing.clone().ok_or_else(|| RunError::Config("mixing needs a [mixing] section".into()))?;
    let family = proceed!(ctx.family());
    let deltas = ctx.deltas(Some(&family))?.map(|d| d.0);
    let dist = proceed!(ctx.distribution(deltas.as_ref()));
    let rows = mixing_correlation(ctx.space(), &family, &dist, &balls[m.a], &balls[m.b], &m.n_grid, m.reps, m.window, ctx.seed)?;
    let mut t = Table::new(["n", "joint", "p_a", "p_b", "product", "difference", "stderr", "structurally_independent"]);
    for r in &rows {
        t.push(vec![
            s(r.n),
            fmt_f64(r.joint),
            fmt_f64(r.p_a),
            fmt_f64(r.p_b),
            fmt_f64(r.product),
            fmt_f64(r.difference),
            fmt_f64(r.stderr),
            s(r.structurally_independent),
        ]);
    }
    ctx.write_csv("mixing.csv", &t)?;
    if family.is_bilateral() {
        ctx.note(EXACTNESS_NOTE);
    }
    let independent: Vec<_> = rows.iter().filter(|r| r.structurally_independent).collect();
    if !independent.is_empty() {
        let ok = independent.iter().all(|r| r.difference.abs() <= 3.0 * r.stderr);
        ctx.certify(
            "structural_independence",
            if ok { Verdict::Pass } else { Verdict::Fail },
            format!("|difference| ≤ 3 stderr at {} structurally independent n", independent.len()),
        );
    }
    let peak = rows.iter().max_by(|a, b| a.difference.abs().total_cmp(&b.difference.abs())).map(|r| r.n);
    ctx.value("peak_n", peak);
    ctx.write_plot(
        "mixing.svg",
        "mixing difference",
        "n",
        "joint - product",
        &[Series { label: "difference".into(), points: rows.iter().map(|r| (r.n as f64, r.difference)).collect() }],
    )
}

fn ball_bound(ctx: &mut Ctx) -> Result<(), RunError> {
    let balls = targets(ctx, "ball-bound")?;
    let family = proceed!(ctx.family());
    let (deltas, _) = ctx.deltas(Some(&family))?.ok_or_else(|| RunError::Config("ball-bound needs a [deltas] section".into()))?;
    let dist = proceed!(ctx.distribution(Some(&deltas)));
    let mut t = Table::new([
        "ball",
        "n_window",
        "tail_majorant",
        "pb_estimate",
        "pb_stderr",
        "product_factor",
        "lower_bound",
        "log_lower_bound",
        "empirical",
        "empirical_stderr",
    ]);
    let mut ok = true;
    let r = ctx.cfg.run.clone();
    for (i, ball) in balls.iter().enumerate() {
        let seed = hyperorbit_core::rng::derive_seed(ctx.seed, "ball", i as u64);
        let b = ball_probability_lower_bound(
            ctx.space(),
            &family,
            &dist,
            &deltas,
            &ball.center,
            ball.radius,
            r.n_window,
            ctx.horizon,
            r.mc_reps,
            seed,
        )?;
        let (p, se) = empirical_ball_probability(ctx.space(), &family, &dist, &ball.center, ball.radius, b.n_window.max(r.n_window), r.space_reps, seed)?;
        ok &= p >= b.lower_bound - 3.0 * (se * se + b.pb_stderr * b.pb_stderr * b.product_factor * b.product_factor).sqrt();
        t.push(vec![
            s(i),
            s(b.n_window),
            fmt_f64(b.tail_majorant),
            fmt_f64(b.pb_estimate),
            fmt_f64(b.pb_stderr),
            fmt_f64(b.product_factor),
            fmt_f64(b.lower_bound),
            fmt_f64(b.log_lower_bound),
            fmt_f64(p),
            fmt_f64(se),
        ]);
    }
    ctx.write_csv("ball_bound.csv", &t)?;
    ctx.certify(
        "ball_bound",
        if ok { Verdict::Pass } else { Verdict::Fail },
        "empirical ball probability ≥ lower bound - 3 combined stderr on every ball",
    );
    Ok(())
}

fn fhc_build(ctx: &mut Ctx) -> Result<(), RunError> {
    let w = ctx.weights()?;
    let c = ctx.fhc(&w)?;
    let mut blocks = Table::new(["k", "enumeration_index", "a", "n", "skipped"]);
    for b in c.blocks() {
        blocks.push(vec![s(b.k), s(b.enumeration_index), fmt_f64(b.a.a), s(b.n_k), s(b.skipped.len())]);
    }
    ctx.write_csv("blocks.csv", &blocks)?;
    let mut ledger = Table::new(["k", "l", "inequality", "lhs", "bound", "strict", "holds", "slack"]);
    for r in c.ledger() {
        ledger.push(vec![
            s(r.k),
            s(r.l),
            r.inequality.into(),
            fmt_f64(r.lhs),
            fmt_f64(r.bound),
            s(r.strict),
            s(r.holds()),
            fmt_f64(r.slack()),
        ]);
    }
    ctx.write_csv("ledger.csv", &ledger)?;
    let (forward, backward, reference) = c.convergence_majorants()?;
    ctx.value("forward_majorant", forward);
    ctx.value("backward_majorant", backward);
    ctx.value("reference_bound", reference);
    let failing = c.ledger().iter().filter(|r| !r.holds()).count();
    ctx.certify(
        "fhc_ledger",
        if failing == 0 { Verdict::Pass } else { Verdict::Fail },
        format!("{} rows, {failing} failing", c.ledger().len()),
    );
    Ok(())
}

fn poly_basis(ctx: &mut Ctx) -> Result<(), RunError> {
    let p = ctx.cfg.polynomial.clone().ok_or_else(|| RunError::Config("poly-basis needs a [polynomial] section".into()))?;
    let w = ctx.weights()?;
    match polynomial_basis(&w, &p.spec()?, p.n_max) {
        Ok(basis) => {
            let mut t = Table::new(["n", "j", "re", "im"]);
            for (n, col) in basis.columns().iter().enumerate() {
                for (j, c) in col.iter() {
                    let [re, im] = fmt_scalar(c);
                    t.push(vec![s(n), s(j), re, im]);
                }
            }
            ctx.write_csv("basis.csv", &t)?;
            ctx.value("max_residual", basis.max_residual());
            ctx.certify("basis_residual", Verdict::Pass, format!("max relative residual {:e}", basis.max_residual()));
        }
        Err(hyperorbit_core::Error::Residual { column, residual, tolerance }) => {
            ctx.certify("basis_residual", Verdict::Fail, format!("column {column}: residual {residual:e} > {tolerance:e}"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
