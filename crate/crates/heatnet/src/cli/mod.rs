//! Configuration parsing, subcommand dispatch, parallel sweep orchestration
//! and deterministic CSV/JSON output.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::floquet_solver;
use crate::metrics::{self, MapTemplate, PointStatus};
use crate::oracle;
use crate::report::CurrentsReport;
use crate::static_solver;

use config::{parse_config, InstabilityPolicy, RunConfig};
use output::{fmt_float, gnuplot_heatmap, write_csv, write_json, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "config_parse",
            CliError::Validation(_) => "validation",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable error report for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

impl From<static_solver::SolverError> for CliError {
    fn from(e: static_solver::SolverError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<oracle::OracleError> for CliError {
    fn from(e: oracle::OracleError) -> Self {
        CliError::Solver(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    StaticCurrents,
    DrivenCurrents,
    RectificationMap,
    QuasiRectificationMap,
    TransistorDynamic,
    TransistorStatic,
    OracleCheck,
    StabilityMap,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::StaticCurrents => "static-currents",
            Subcommand::DrivenCurrents => "driven-currents",
            Subcommand::RectificationMap => "rectification-map",
            Subcommand::QuasiRectificationMap => "quasi-rectification-map",
            Subcommand::TransistorDynamic => "transistor-dynamic",
            Subcommand::TransistorStatic => "transistor-static",
            Subcommand::OracleCheck => "oracle-check",
            Subcommand::StabilityMap => "stability-map",
        }
    }

    fn file_stem(&self) -> String {
        self.name().replace('-', "_")
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub subcommand: Subcommand,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub tolerance: Option<f64>,
    pub emit_gnuplot: bool,
}

/// Entry point used by the binary: reads the config, applies environment
/// overrides and flag overrides, then dispatches inside a bounded worker
/// pool. Outputs are deterministic for a fixed configuration regardless of
/// the worker count.
pub fn run(opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&opts.config_path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", opts.config_path.display())))?;
    let mut cfg = parse_config(&text, std::env::vars())?;
    if let Some(tol) = opts.tolerance {
        cfg.solver.quad_rel_tol = tol;
    }
    if let Some(w) = opts.workers {
        cfg.solver.workers = Some(w);
    }
    if let Some(dir) = &opts.out_dir {
        cfg.output.dir = dir.display().to_string();
    }

    let out_dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;

    match cfg.solver.workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Solver(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(opts, &cfg, &out_dir))
        }
        _ => dispatch(opts, &cfg, &out_dir),
    }
}

fn dispatch(opts: &RunOptions, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match opts.subcommand {
        Subcommand::StaticCurrents => run_static_currents(opts, cfg, out_dir),
        Subcommand::DrivenCurrents => run_driven_currents(opts, cfg, out_dir),
        Subcommand::RectificationMap | Subcommand::QuasiRectificationMap => {
            run_rectification_map(opts, cfg, out_dir)
        }
        Subcommand::TransistorDynamic => run_transistor_dynamic(opts, cfg, out_dir),
        Subcommand::TransistorStatic => run_transistor_static(opts, cfg, out_dir),
        Subcommand::OracleCheck => run_oracle_check(opts, cfg, out_dir),
        Subcommand::StabilityMap => run_stability_map(opts, cfg, out_dir),
    }
}

fn base_metadata(table: &mut Table, cfg: &RunConfig, sub: Subcommand) {
    table.meta("subcommand", sub.name());
    table.meta("config_hash", cfg.hash());
    table.meta("solver_version", env!("CARGO_PKG_VERSION"));
    table.meta("quad_rel_tol", fmt_float(cfg.solver.quad_rel_tol, 6));
}

fn currents_rows(table: &mut Table, report: &CurrentsReport) {
    for b in &report.baths {
        table.push(vec![
            (b.bath as i64).into(),
            (b.node as i64).into(),
            b.temperature.into(),
            b.heat.into(),
            b.work_local.into(),
            b.quasi.into(),
        ]);
    }
}

fn currents_json(cfg: &RunConfig, sub: Subcommand, report: &CurrentsReport) -> serde_json::Value {
    json!({
        "subcommand": sub.name(),
        "config_hash": cfg.hash(),
        "solver_version": env!("CARGO_PKG_VERSION"),
        "report": report,
    })
}

fn run_static_currents(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let model = cfg.build_model()?;
    if model.network().is_driven() {
        return Err(CliError::Validation(
            "static-currents needs a static model (drop drive/omega_d or use driven-currents)"
                .into(),
        ));
    }
    let report = static_solver::static_currents_with_tol(&model, cfg.solver.quad_rel_tol)?;

    let mut outputs = Vec::new();
    let mut table = Table::new(
        vec!["bath", "node", "temperature", "heat", "work_local", "quasi"],
        cfg.output.precision,
    );
    base_metadata(&mut table, cfg, opts.subcommand);
    table.meta("first_law_residual", fmt_float(report.first_law_residual, 6));
    table.meta("quad_error", fmt_float(report.quad_error, 6));
    table.meta("tail_bound", fmt_float(report.tail_bound, 6));
    currents_rows(&mut table, &report);
    outputs.push(emit(out_dir, opts.subcommand, &table, None)?);

    if cfg.output.formats.iter().any(|f| f == "json") {
        let path = out_dir.join(format!("{}.json", opts.subcommand.file_stem()));
        write_json(&path, &currents_json(cfg, opts.subcommand, &report))?;
        outputs.push(path);
    }
    Ok(outputs)
}

fn run_driven_currents(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let model = cfg.build_model()?;
    if !model.network().is_driven() {
        return Err(CliError::Validation("driven-currents needs a driven model".into()));
    }
    let stability = floquet_solver::stability_check(&model)?;
    if !stability.is_stable() {
        return Err(CliError::Solver(format!(
            "model is parametrically unstable (worst multiplier {}, worst condition {:.3e})",
            stability.worst_multiplier, stability.worst_condition
        )));
    }
    let report = floquet_solver::averaged_currents_with_tol(
        &model,
        cfg.solver.k_order,
        cfg.solver.quad_rel_tol,
    )?;

    let mut outputs = Vec::new();
    let mut table = Table::new(
        vec!["bath", "node", "temperature", "heat", "work_local", "quasi"],
        cfg.output.precision,
    );
    base_metadata(&mut table, cfg, opts.subcommand);
    table.meta("work_total", fmt_float(report.work_total, 12));
    table.meta("first_law_residual", fmt_float(report.first_law_residual, 6));
    table.meta("k_order", report.k_order.map_or("none".into(), |k| k.to_string()));
    currents_rows(&mut table, &report);
    outputs.push(emit(out_dir, opts.subcommand, &table, None)?);

    if cfg.output.formats.iter().any(|f| f == "json") {
        let path = out_dir.join(format!("{}.json", opts.subcommand.file_stem()));
        let mut value = currents_json(cfg, opts.subcommand, &report);
        value["stability"] = serde_json::to_value(&stability).unwrap();
        write_json(&path, &value)?;
        outputs.push(path);
    }
    Ok(outputs)
}

/// Two-axis sweep lattice in listed-axis order (row-major).
fn two_axis_grid(cfg: &RunConfig) -> Result<(Vec<(f64, f64)>, (usize, usize), bool), CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("this subcommand needs a sweep section".into()))?;
    if sweep.axes.len() != 2 {
        return Err(CliError::Validation("expected exactly two sweep axes".into()));
    }
    let paths: Vec<&str> = sweep.axes.iter().map(|a| a.path.as_str()).collect();
    let omega_first = match (paths[0], paths[1]) {
        ("model.omega_d", "model.c0") => true,
        ("model.c0", "model.omega_d") => false,
        _ => {
            return Err(CliError::Validation(
                "map sweeps support the axes model.omega_d and model.c0".into(),
            ))
        }
    };
    let a0 = &sweep.axes[0];
    let a1 = &sweep.axes[1];
    let v0 = metrics::linspace(a0.start, a0.stop, a0.count);
    let v1 = metrics::linspace(a1.start, a1.stop, a1.count);
    let mut grid = Vec::with_capacity(v0.len() * v1.len());
    for &x0 in &v0 {
        for &x1 in &v1 {
            let (wd, c0) = if omega_first { (x0, x1) } else { (x1, x0) };
            grid.push((wd, c0));
        }
    }
    Ok((grid, (a0.count, a1.count), omega_first))
}

fn map_template(cfg: &RunConfig) -> Result<MapTemplate, CliError> {
    // the base model carries the c0 = 0 potential; omega_d is replaced per
    // grid point, so any positive placeholder works
    let base = cfg.build_model_at(Some(0.0), Some(1.0))?;
    if !base.network().is_driven() {
        return Err(CliError::Validation(
            "map sweeps need a driven model (set model.drive)".into(),
        ));
    }
    let mut template = MapTemplate::new(base)?;
    if let Some(p) = &cfg.model.coupling_pattern {
        let n = cfg.model.masses.len();
        if p.len() != n * n {
            return Err(CliError::Validation("coupling_pattern has the wrong size".into()));
        }
        template.coupling_pattern = nalgebra::DMatrix::from_row_slice(n, n, p);
    }
    Ok(template)
}

fn progress(done: usize, total: usize) {
    if total >= 20 && done % (total / 20).max(1) == 0 {
        eprintln!("progress: {done}/{total}");
    }
}

fn run_rectification_map(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let template = map_template(cfg)?;
    let (grid, dims, omega_first) = two_axis_grid(cfg)?;
    let total = grid.len();
    let counter = std::sync::atomic::AtomicUsize::new(0);

    let points: Vec<metrics::RectificationPoint> = grid
        .par_iter()
        .map(|&(wd, c0)| {
            let p = metrics::rectification_point(
                &template,
                wd,
                c0,
                cfg.solver.k_order,
                cfg.solver.quad_rel_tol,
            );
            let done = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(done, total);
            p
        })
        .collect();

    if cfg.solver.instability_policy == InstabilityPolicy::Error {
        if let Some(p) = points.iter().find(|p| p.status == PointStatus::Unstable) {
            return Err(CliError::Solver(format!(
                "unstable grid point at omega_d = {}, c0 = {}",
                p.omega_d, p.c0
            )));
        }
    }

    let quasi = opts.subcommand == Subcommand::QuasiRectificationMap;
    let columns = if quasi {
        vec!["omega_d", "c0", "qq_fwd", "qq_rev", "r_quasi", "stable", "reason"]
    } else {
        vec!["omega_d", "c0", "q_fwd", "q_rev", "r_full", "r_quasi", "stable", "reason"]
    };
    let mut table = Table::new(columns, cfg.output.precision);
    base_metadata(&mut table, cfg, opts.subcommand);
    table.meta("grid", format!("{}x{}", dims.0, dims.1));
    table.meta("axis_order", if omega_first { "omega_d,c0" } else { "c0,omega_d" });
    for p in &points {
        let row = if quasi {
            vec![
                p.omega_d.into(),
                p.c0.into(),
                p.qq_fwd.into(),
                p.qq_rev.into(),
                p.r_quasi.into(),
                p.stable.into(),
                p.status.as_str().into(),
            ]
        } else {
            vec![
                p.omega_d.into(),
                p.c0.into(),
                p.q_fwd.into(),
                p.q_rev.into(),
                p.r_full.into(),
                p.r_quasi.into(),
                p.stable.into(),
                p.status.as_str().into(),
            ]
        };
        table.push(row);
    }
    let gnuplot = opts.emit_gnuplot.then(|| {
        gnuplot_heatmap(
            &format!("{}.csv", opts.subcommand.file_stem()),
            "omega_d",
            "c0",
            5,
            if quasi { "quasi-current rectification" } else { "rectification coefficient" },
        )
    });
    Ok(vec![emit(out_dir, opts.subcommand, &table, gnuplot)?])
}

fn one_axis(cfg: &RunConfig, expected_path: &str) -> Result<Vec<f64>, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("this subcommand needs a sweep section".into()))?;
    if sweep.axes.len() != 1 || sweep.axes[0].path != expected_path {
        return Err(CliError::Validation(format!(
            "expected exactly one sweep axis over {expected_path}"
        )));
    }
    let a = &sweep.axes[0];
    Ok(metrics::linspace(a.start, a.stop, a.count))
}

fn run_transistor_dynamic(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let omegas = one_axis(cfg, "model.omega_d")?;
    let total = omegas.len();
    let counter = std::sync::atomic::AtomicUsize::new(0);

    type DynRow = (f64, Result<(CurrentsReport, metrics::AmplificationPoint), String>);
    let rows: Vec<DynRow> = omegas
        .par_iter()
        .map(|&wd| {
            let result = (|| {
                let model = cfg.build_model_at(None, Some(wd)).map_err(|e| e.to_string())?;
                let stab = floquet_solver::stability_check(&model).map_err(|e| e.to_string())?;
                if !stab.is_stable() {
                    return Err("unstable".to_string());
                }
                let report = floquet_solver::averaged_currents_with_tol(
                    &model,
                    cfg.solver.k_order,
                    cfg.solver.quad_rel_tol,
                )
                .map_err(|e| e.to_string())?;
                let amp = metrics::amplification_dynamic(
                    &model,
                    wd,
                    1e-3 * wd,
                    cfg.solver.k_order,
                    cfg.solver.quad_rel_tol,
                )
                .map_err(|e| match e {
                    static_solver::SolverError::TransistorUndefined => "undefined".to_string(),
                    other => other.to_string(),
                })?;
                Ok((report, amp))
            })();
            let done = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(done, total);
            (wd, result)
        })
        .collect();

    let mut table = Table::new(
        vec!["omega_d", "w_dot", "q1", "q2", "a1", "a2", "residual", "defined", "reason"],
        cfg.output.precision,
    );
    base_metadata(&mut table, cfg, opts.subcommand);
    for (wd, row) in &rows {
        match row {
            Ok((report, amp)) => table.push(vec![
                (*wd).into(),
                report.work_total.into(),
                report.heat(0).into(),
                report.heat(1).into(),
                amp.a1.into(),
                amp.a2.into(),
                amp.residual.into(),
                true.into(),
                "ok".into(),
            ]),
            Err(reason) => table.push(vec![
                (*wd).into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
                reason.as_str().into(),
            ]),
        }
    }
    Ok(vec![emit(out_dir, opts.subcommand, &table, None)?])
}

fn run_transistor_static(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let t3s = one_axis(cfg, "baths.2.temperature")?;
    if cfg.baths.len() != 3 {
        return Err(CliError::Validation("transistor-static needs exactly three baths".into()));
    }
    let base = cfg.build_model()?;
    if base.network().is_driven() {
        return Err(CliError::Validation("transistor-static needs a static model".into()));
    }
    let total = t3s.len();
    let counter = std::sync::atomic::AtomicUsize::new(0);

    let rows: Vec<(f64, Result<metrics::AmplificationPoint, String>)> = t3s
        .par_iter()
        .map(|&t3| {
            let result = (|| {
                let mut baths = base.baths().to_vec();
                baths[2].temperature = t3;
                let model = crate::model::Model::new(base.network().clone(), baths)
                    .map_err(|e| e.to_string())?;
                metrics::amplification_static(&model, t3, 1e-3 * t3, cfg.solver.quad_rel_tol)
                    .map_err(|e| match e {
                        static_solver::SolverError::TransistorUndefined => "undefined".to_string(),
                        other => other.to_string(),
                    })
            })();
            let done = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(done, total);
            (t3, result)
        })
        .collect();

    let mut table = Table::new(
        vec!["t3", "q3", "a1", "a2", "residual", "defined", "reason"],
        cfg.output.precision,
    );
    base_metadata(&mut table, cfg, opts.subcommand);
    for (t3, row) in &rows {
        match row {
            Ok(amp) => table.push(vec![
                (*t3).into(),
                amp.e_dot.into(),
                amp.a1.into(),
                amp.a2.into(),
                amp.residual.into(),
                true.into(),
                "ok".into(),
            ]),
            Err(reason) => table.push(vec![
                (*t3).into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
                reason.as_str().into(),
            ]),
        }
    }
    Ok(vec![emit(out_dir, opts.subcommand, &table, None)?])
}

fn run_oracle_check(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let model = cfg.build_model()?;
    let spectral = if model.network().is_driven() {
        floquet_solver::averaged_currents_with_tol(
            &model,
            cfg.solver.k_order,
            cfg.solver.quad_rel_tol,
        )?
    } else {
        static_solver::static_currents_with_tol(&model, cfg.solver.quad_rel_tol)?
    };
    let settings = cfg.oracle_settings(&model);
    let cmp = oracle::oracle_compare(&model, &spectral, &settings)?;

    let path = out_dir.join("oracle_check.json");
    write_json(
        &path,
        &json!({
            "subcommand": opts.subcommand.name(),
            "config_hash": cfg.hash(),
            "solver_version": env!("CARGO_PKG_VERSION"),
            "settings": {
                "m_modes": settings.m_modes,
                "omega_max": settings.omega_max,
                "dt": settings.dt,
                "transient": settings.transient,
                "window": settings.window,
            },
            "deviation_vs_spectral": cmp.dev_spectral,
            "deviation_between_definitions": cmp.dev_definitions,
            "window_variation": cmp.window_variation,
            "inconclusive": cmp.inconclusive,
            "oracle_heat_commutator": cmp.oracle.q_commutator,
            "oracle_heat_bath_energy": cmp.oracle.q_bath_energy,
            "oracle_work": cmp.oracle.work,
            "spectral_heat": cmp.spectral_heat,
            "spectral_work": cmp.spectral_work,
        }),
    )?;
    Ok(vec![path])
}

fn run_stability_map(
    opts: &RunOptions,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let template = map_template(cfg)?;
    let (grid, dims, _) = two_axis_grid(cfg)?;
    let total = grid.len();
    let counter = std::sync::atomic::AtomicUsize::new(0);

    let rows: Vec<(f64, f64, Option<crate::report::StabilityReport>)> = grid
        .par_iter()
        .map(|&(wd, c0)| {
            let rep = template
                .at(c0, wd)
                .ok()
                .and_then(|m| floquet_solver::stability_check(&m).ok());
            let done = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(done, total);
            (wd, c0, rep)
        })
        .collect();

    let mut table = Table::new(
        vec!["omega_d", "c0", "stable", "worst_multiplier", "worst_condition"],
        cfg.output.precision,
    );
    base_metadata(&mut table, cfg, opts.subcommand);
    table.meta("grid", format!("{}x{}", dims.0, dims.1));
    for (wd, c0, rep) in &rows {
        match rep {
            Some(r) => table.push(vec![
                (*wd).into(),
                (*c0).into(),
                r.is_stable().into(),
                r.worst_multiplier.into(),
                r.worst_condition.into(),
            ]),
            None => table.push(vec![
                (*wd).into(),
                (*c0).into(),
                false.into(),
                f64::NAN.into(),
                f64::NAN.into(),
            ]),
        }
    }
    Ok(vec![emit(out_dir, opts.subcommand, &table, None)?])
}

fn emit(
    out_dir: &Path,
    sub: Subcommand,
    table: &Table,
    gnuplot: Option<String>,
) -> Result<PathBuf, CliError> {
    let csv_path = out_dir.join(format!("{}.csv", sub.file_stem()));
    write_csv(&csv_path, table)?;
    if let Some(script) = gnuplot {
        let gp_path = out_dir.join(format!("{}.gp", sub.file_stem()));
        std::fs::write(&gp_path, script)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", gp_path.display())))?;
    }
    Ok(csv_path)
}
