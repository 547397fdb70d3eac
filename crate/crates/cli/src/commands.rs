use mdode::analysis::{convergence_study, jump_map_study, write_metric_csv, MetricRow};
use mdode::jumpmap::{phi_explicit_ramp, phi_solve, random_bound_trials};
use mdode::limit::{solve_limit, LimitOptions};
use mdode::mollifier::{classify_regime_with, sigma_delta_limit};
use mdode::scheme::Scheme;
use mdode::{JumpMeasure, SigmaG, Verdict};

use crate::config::{Config, ConfigError, FieldKind};
use crate::error::CliError;
use crate::output::{num, OutDir};

/// Grid of levels at which `phi` is tabulated by `jumpmap`.
const PHI_LEVELS: usize = 100;

pub fn solve_scheme(cfg: &Config, out: &OutDir) -> Result<String, CliError> {
    let (field, _) = cfg.field()?;
    let driver = cfg.driver()?;
    let profile = cfg.profile()?;
    let x0 = cfg.x0()?;
    let mut last = None;
    for (n, h) in cfg.schedule()?.entries() {
        let scheme = Scheme::with_options(field, driver, profile, n, h, cfg.scheme_options())?;
        let path = scheme.solve_grid(|_| x0, cfg.run.n_offsets)?;
        out.write(&format!("scheme_n{n}.csv"), |w| path.write_csv(w))?;
        last = Some((n, path.final_value()));
    }
    let (n, x) = last.expect("schedules are never empty");
    Ok(format!(
        "solve-scheme: {} meshes written to {}; x(b) = {} at n = {n}",
        cfg.schedule()?.len(),
        out.root().display(),
        num(x)
    ))
}

pub fn solve_limit_cmd(cfg: &Config, out: &OutDir) -> Result<String, CliError> {
    let (field, _) = cfg.field()?;
    let driver = cfg.driver()?;
    let (sigma, source) = resolve_sigma(cfg)?;
    let mu = JumpMeasure::from_sigma(&sigma);
    let path = solve_limit(
        field,
        driver,
        &mu,
        cfg.x0()?,
        &cfg.run.sample_times,
        LimitOptions::default(),
    )?;
    out.write("limit.csv", |w| path.write_csv(w))?;
    Ok(format!(
        "solve-limit: x(b) = {} under {source}, residual {:.3e} (tolerance {:.3e})",
        num(path.final_value()),
        path.residual(field, driver),
        path.residual_tolerance()
    ))
}

pub fn sigma(cfg: &Config, out: &OutDir) -> Result<String, CliError> {
    let profile = cfg.profile()?;
    let sched = cfg.regime_schedule()?;
    let opts = cfg.classify_options();
    let mut rows = Vec::new();
    for &delta in &opts.deltas {
        for &u in &opts.probes {
            rows.push(sigma_delta_limit(profile, sched, delta, u)?);
        }
    }
    out.write("sigma.csv", |w| {
        writeln!(w, "delta,u,value,cauchy_tail,converged")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                num(r.delta),
                num(r.u),
                num(r.value),
                num(r.cauchy_tail),
                r.converged as u8
            )?;
        }
        Ok(())
    })?;
    let settled = rows.iter().filter(|r| r.converged).count();
    Ok(format!(
        "sigma: {settled} of {} probes converged over {} meshes",
        rows.len(),
        sched.len()
    ))
}

pub fn classify(cfg: &Config, out: &OutDir) -> Result<String, CliError> {
    let profile = cfg.profile()?;
    let sched = cfg.regime_schedule()?;
    let report = classify_regime_with(profile, sched, &cfg.classify_options())?;
    out.write("evidence.csv", |w| {
        writeln!(w, "delta,u,n,h_n,value")?;
        for e in &report.evidence {
            writeln!(
                w,
                "{},{},{},{},{}",
                num(e.delta),
                num(e.u),
                e.n,
                num(e.h),
                num(e.value)
            )?;
        }
        Ok(())
    })?;
    out.write("classify.txt", |w| {
        writeln!(w, "regime: {}", report.verdict)?;
        if let Verdict::GeneralSigma(s) = &report.verdict {
            writeln!(w, "intervals: {}", format_intervals(s))?;
        }
        writeln!(w, "converged: {}", report.converged)?;
        writeln!(w, "spread: {}", num(report.spread))?;
        writeln!(w, "u,estimate")?;
        for (u, e) in report.probes.iter().zip(&report.estimates) {
            writeln!(w, "{},{}", num(*u), num(*e))?;
        }
        Ok(())
    })?;
    Ok(match &report.verdict {
        Verdict::GeneralSigma(s) => format!("regime: GeneralSigma {}", format_intervals(s)),
        v => format!("regime: {v}"),
    })
}

pub fn study(cfg: &Config, out: &OutDir) -> Result<String, CliError> {
    let (field, _) = cfg.field()?;
    let (sigma, source) = resolve_sigma(cfg)?;
    let table = convergence_study(
        field,
        cfg.driver()?,
        cfg.profile()?,
        cfg.schedule()?,
        &JumpMeasure::from_sigma(&sigma),
        cfg.x0()?,
        &cfg.study_options(),
    )?;
    out.write("study.csv", |w| write_metric_csv(&table.metric_rows(), w))?;
    let last = table.rows.last().expect("studies have at least three rows");
    Ok(format!(
        "study: relative L1 error {:.3e} at n = {} under {source}; decreasing: {}",
        last.relative, last.n, table.decreasing
    ))
}

pub fn jumpmap(cfg: &Config, out: &OutDir, seed: Option<u64>) -> Result<String, CliError> {
    let (field, kind) = cfg.field()?;
    let driver = cfg.driver()?;
    let x0 = cfg.x0()?;
    let zeta = match cfg.run.zeta {
        Some(z) => z,
        None => driver
            .jumps()
            .first()
            .map(|j| j.epoch)
            .ok_or_else(|| ConfigError {
                file: cfg.file.clone(),
                path: "run.zeta".into(),
                line: None,
                message: "the driver has no jumps; give the epoch to study".into(),
            })?,
    };
    let size = driver.jump_at(zeta);
    let (sigma, source) = resolve_sigma(cfg)?;
    let mu = JumpMeasure::from_sigma(&sigma);

    let rows = jump_map_study(
        field,
        driver,
        zeta,
        cfg.profile()?,
        cfg.schedule()?,
        &mu,
        x0,
        cfg.run.n_offsets,
    )?;
    let metrics: Vec<MetricRow> = rows
        .iter()
        .flat_map(|r| {
            [
                MetricRow::new(r.n, r.h, "target", r.target),
                MetricRow::new(r.n, r.h, "mean_value", r.mean_value),
                MetricRow::new(r.n, r.h, "mean_gap", r.mean_gap),
            ]
        })
        .collect();
    out.write("jumpmap.csv", |w| write_metric_csv(&metrics, w))?;

    // Along the jump the frozen field is the scaled field at the epoch.
    let z = field.frozen(zeta, size);
    let levels: Vec<f64> = (0..=PHI_LEVELS)
        .map(|i| i as f64 / PHI_LEVELS as f64)
        .collect();
    let phi: Vec<f64> = levels.iter().map(|&u| phi_solve(&z, x0, u, &mu)).collect();
    out.write("phi.csv", |w| {
        writeln!(w, "u,phi")?;
        for (u, p) in levels.iter().zip(&phi) {
            writeln!(w, "{},{}", num(*u), num(*p))?;
        }
        Ok(())
    })?;

    let mut summary = format!(
        "jumpmap: phi = {} at zeta = {zeta} under {source}; mean gap {:.3e} at n = {}",
        num(phi[PHI_LEVELS]),
        rows.last().map_or(f64::NAN, |r| r.mean_gap),
        rows.last().map_or(0, |r| r.n),
    );

    // The closed form covers a unit jump starting at the ramp's reference state.
    if let FieldKind::Ramp { level, eps, x_ref } = *kind {
        if size == 1.0 && x0 == x_ref {
            if let Ok(oracle) = levels
                .iter()
                .map(|&u| phi_explicit_ramp(&sigma, level, eps, x0, u))
                .collect::<mdode::Result<Vec<f64>>>()
            {
                let worst = phi
                    .iter()
                    .zip(&oracle)
                    .map(|(p, o)| (p - o).abs())
                    .fold(0.0, f64::max);
                out.write("oracle.csv", |w| {
                    writeln!(w, "u,phi,oracle,gap")?;
                    for ((u, p), o) in levels.iter().zip(&phi).zip(&oracle) {
                        writeln!(
                            w,
                            "{},{},{},{}",
                            num(*u),
                            num(*p),
                            num(*o),
                            num((p - o).abs())
                        )?;
                    }
                    Ok(())
                })?;
                summary.push_str(&format!("; oracle gap {worst:.3e}"));
            }
        }
    }

    if let Some(seed) = seed {
        let trials = random_bound_trials(seed, cfg.run.trials);
        out.write("bounds.csv", |w| {
            writeln!(w, "seed,trials,checks,violations,min_slack")?;
            writeln!(
                w,
                "{seed},{},{},{},{}",
                trials.trials,
                trials.checks,
                trials.violations.len(),
                num(trials.min_slack)
            )
        })?;
        summary.push_str(&format!(
            "; {} bound violations in {} trials",
            trials.violations.len(),
            trials.trials
        ));
    }
    Ok(summary)
}

/// The configured `sigma`, or the one implied by the schedule's regime.
fn resolve_sigma(cfg: &Config) -> Result<(SigmaG, String), CliError> {
    if let Some(s) = &cfg.sigma {
        return Ok((s.clone(), format!("sigma {}", format_intervals(s))));
    }
    let profile = cfg.profile()?;
    let report = classify_regime_with(profile, cfg.regime_schedule()?, &cfg.classify_options())?;
    let sigma = match &report.verdict {
        Verdict::Flow => SigmaG::identity(),
        Verdict::Ito => SigmaG::full(),
        Verdict::GeneralSigma(s) => s.clone(),
        v => {
            return Err(ConfigError {
                file: cfg.file.clone(),
                path: "sigma.intervals".into(),
                line: None,
                message: format!(
                    "the schedule has no usable jump limit (regime {v}); set it explicitly"
                ),
            }
            .into())
        }
    };
    Ok((sigma, format!("the {} regime", report.verdict)))
}

fn format_intervals(s: &SigmaG) -> String {
    let parts: Vec<String> = s
        .intervals()
        .iter()
        .map(|(a, b)| format!("({a}, {b}]"))
        .collect();
    format!("[{}]", parts.join(", "))
}
