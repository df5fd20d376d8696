//! The subcommands. Each takes a resolved [`RunConfig`] and returns the
//! files it wrote.

use std::path::PathBuf;

use pdirac_core::critical::{dual_fountain_sequence, fountain_sequence, global_minimize, mountain_pass, ps_diagnostic, CriticalPoint};
use pdirac_core::eigen::{ls_sequence, min_eigen};
use pdirac_core::io::fmt_f64;
use pdirac_core::{critical_exponent, default_eps, Error};
use serde_json::json;

use crate::config::{Method, RunConfig};
use crate::output::Emitter;
use crate::verify::{self, Check, Suite};
use crate::CliError;

fn eps_used(config: &RunConfig) -> f64 {
    config.eps.unwrap_or_else(|| default_eps(config.p))
}

/// Turns a solver error into a CLI failure, writing its trace (if any)
/// next to the other outputs.
fn solver_failure(em: &mut Emitter, name: &str, err: Error) -> CliError {
    match err {
        Error::NonConvergence { what, reason, trace } => {
            let mut files = Vec::new();
            if let Ok(path) = em.trace(&format!("trace_{name}.csv"), &trace) {
                files.push(path);
            }
            CliError::Solver { message: format!("{what} did not converge: {reason}"), trace_files: files }
        }
        other => other.into(),
    }
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let setup = config.setup()?;
    let entries = setup.dirac.dirac_spectrum(config.spectrum.count)?;
    let rows: Vec<Vec<String>> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                fmt_f64(e.eigenvalue),
                fmt_f64(e.eigenvalue.abs()),
                e.multiplicity.to_string(),
                e.level.to_string(),
                e.mode.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "),
            ]
        })
        .collect();
    let mut em = Emitter::new(config)?;
    em.csv("spectrum.csv", &["index", "eigenvalue", "magnitude", "multiplicity", "level", "mode"], &rows)?;
    em.finish("spectrum", config, eps_used(config))
}

/// `eigen.csv` holds the Galerkin/deflation sequence; `eigen_restarts.csv`
/// the individual restarts of the full-space first eigenpair.
pub fn cmd_eigen(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let setup = config.setup()?;
    let op = &setup.dirac;
    let mut em = Emitter::new(config)?;
    let first = min_eigen(op, &config.eigen).map_err(|e| solver_failure(&mut em, "min_eigen", e))?;
    let pairs = ls_sequence(op, &config.eigen, config.eigen.deflation_count).map_err(|e| solver_failure(&mut em, "ls_sequence", e))?;
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .enumerate()
        .map(|(i, pr)| vec![(i + 1).to_string(), fmt_f64(pr.lambda), fmt_f64(pr.residual), pr.iterations.to_string(), pr.seed.to_string()])
        .collect();
    em.csv("eigen.csv", &["index", "lambda", "residual", "iterations", "seed"], &rows)?;
    let rows: Vec<Vec<String>> = first
        .restarts
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                fmt_f64(r.lambda),
                fmt_f64(r.residual),
                r.iterations.to_string(),
                r.converged.to_string(),
                (r.seed == first.seed).to_string(),
            ]
        })
        .collect();
    em.csv("eigen_restarts.csv", &["seed", "lambda", "residual", "iterations", "converged", "selected"], &rows)?;
    if let Some(format) = config.output.dump_fields {
        em.field("eigen_first", &first.field, format)?;
        for (i, pr) in pairs.iter().enumerate() {
            em.field(&format!("eigen_{}", i + 1), &pr.field, format)?;
        }
    }
    if pairs.len() < config.eigen.deflation_count {
        let files = em.finish("eigen", config, eps_used(config))?;
        return Err(CliError::Solver {
            message: format!("ls_sequence returned {} of {} pairs", pairs.len(), config.eigen.deflation_count),
            trace_files: files,
        });
    }
    em.finish("eigen", config, eps_used(config))
}

fn point_row(cp: &CriticalPoint) -> Vec<String> {
    vec![
        cp.kind.name().to_string(),
        cp.kind.k().map(|k| k.to_string()).unwrap_or_default(),
        fmt_f64(cp.value),
        fmt_f64(cp.grad_residual),
        fmt_f64(cp.nehari_defect),
        cp.iterations.to_string(),
        cp.seed.to_string(),
    ]
}

pub fn cmd_solve(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let setup = config.setup()?;
    let energy = config.energy(&setup.dirac)?;
    let mut em = Emitter::new(config)?;
    let name = match config.method {
        Method::MountainPass => "mountain_pass",
        Method::GlobalMinimize => "global_minimize",
        Method::Fountain => "fountain",
        Method::DualFountain => "dual_fountain",
    };
    let kmax = config.solve.galerkin_k;
    let (points, failures) = match config.method {
        Method::MountainPass => (vec![mountain_pass(&energy, &config.solve).map_err(|e| solver_failure(&mut em, name, e))?], Vec::new()),
        Method::GlobalMinimize => {
            (vec![global_minimize(&energy, &config.solve).map_err(|e| solver_failure(&mut em, name, e))?], Vec::new())
        }
        Method::Fountain => {
            let s = fountain_sequence(&energy, &config.solve, kmax)?;
            (s.points, s.failures)
        }
        Method::DualFountain => {
            let s = dual_fountain_sequence(&energy, &config.solve, kmax)?;
            (s.points, s.failures)
        }
    };
    let rows: Vec<Vec<String>> = points.iter().map(point_row).collect();
    em.csv("solve.csv", &["kind", "k", "value", "grad_residual", "nehari_defect", "iterations", "seed"], &rows)?;
    let mut diagnostics = Vec::new();
    for (i, cp) in points.iter().enumerate() {
        let stem = match cp.kind.k() {
            Some(k) => format!("{}_{k}", cp.kind.name()),
            None => format!("{}_{}", cp.kind.name(), i + 1),
        };
        diagnostics.push(json!({
            "point": stem,
            "rim": cp.rim,
            "weak_form_defect": cp.weak_form_defect(&energy, 50, config.seed)?,
            "galerkin_dimension": cp.space.as_ref().map(|s| s.len()),
            "palais_smale": ps_diagnostic(&cp.trace),
        }));
        em.trace(&format!("trace_{stem}.csv"), &cp.trace)?;
        if let Some(format) = config.output.dump_fields {
            em.field(&stem, &cp.field, format)?;
        }
    }
    let values: Vec<f64> = points.iter().map(|c| c.value).collect();
    em.json(
        "solve_diagnostics.json",
        &json!({
            "config_hash": em.hash(),
            "method": name,
            "eps": eps_used(config),
            "points": diagnostics,
            "nondecreasing": values.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs().max(w[1].abs())),
        }),
    )?;
    if failures.is_empty() {
        return em.finish("solve", config, eps_used(config));
    }
    let rows: Vec<Vec<String>> = failures.iter().map(|(k, why)| vec![k.to_string(), why.clone()]).collect();
    em.csv("solve_failures.csv", &["k", "reason"], &rows)?;
    let files = em.finish("solve", config, eps_used(config))?;
    Err(CliError::Solver { message: format!("{name}: {} of {kmax} levels failed", failures.len()), trace_files: files })
}

/// Runs `suite`, writes `verify.csv` and returns the checks; the caller
/// maps failures to the exit code.
pub fn cmd_verify(config: &RunConfig, suite: Suite) -> Result<(Vec<PathBuf>, Vec<Check>), CliError> {
    let checks = verify::run(suite, config)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.suite.to_string(),
                c.name.clone(),
                fmt_f64(c.value),
                c.relation.to_string(),
                fmt_f64(c.bound),
                if c.pass { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    let mut em = Emitter::new(config)?;
    em.csv("verify.csv", &["suite", "check", "value", "relation", "bound", "result"], &rows)?;
    Ok((em.finish("verify", config, eps_used(config))?, checks))
}

/// Model facts that need no solver: lowest levels, growth-condition report
/// and the constant branch.
pub fn cmd_report(config: &RunConfig) -> Result<(Vec<PathBuf>, serde_json::Value), CliError> {
    let setup = config.setup()?;
    let op = &setup.dirac;
    let energy = config.energy(op)?;
    let m = op.m();
    let levels: Vec<_> = op.distinct_levels(5).into_iter().map(|(mag, mult)| json!({ "magnitude": mag, "multiplicity": mult })).collect();
    let p_star = critical_exponent(config.p, m);
    let report = json!({
        "config_hash": config.hash(),
        "model": config.model,
        "spinor_dim": op.spinor_dim(),
        "singular": op.is_singular(),
        "min_momentum": op.min_momentum(),
        "levels": levels,
        "p": config.p,
        "eps": eps_used(config),
        "p_star": p_star.is_finite().then_some(p_star),
        "nonlinearity": config.nonlinearity,
        "classification": energy.classification(),
        "constant_branch": energy.constant_branch_amplitude().map(|a| json!({
            "amplitude": a,
            "value": energy.constant_branch_value(),
        })),
    });
    let mut em = Emitter::new(config)?;
    em.json("report.json", &report)?;
    Ok((em.finish("report", config, eps_used(config))?, report))
}
