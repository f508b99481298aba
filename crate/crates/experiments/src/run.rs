use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ehcr_core::{
    gap, generate_scenario, run_simulation, solve_instant, solve_oracle, OracleConfig, Scenario, SimConfig, SimSolver,
    SolveError, SolveReport,
};
use serde::Serialize;

use crate::spec::{ExperimentKind, ExperimentSpec, OutputFormat, SolverChoice};
use crate::table::{Cell, Table};

/// Rows produced so far plus whatever stopped the run.
#[derive(Debug)]
pub struct RunOutput {
    pub table: Table,
    /// Grid points left out on purpose, with the reason.
    pub skipped: Vec<String>,
    pub error: Option<anyhow::Error>,
}

impl RunOutput {
    fn new(headers: Vec<String>) -> Self {
        Self { table: Table::new(headers), skipped: Vec::new(), error: None }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    version: &'a str,
    status: &'a str,
    error: Option<String>,
    rows: usize,
    skipped: &'a [String],
    output: String,
    spec: &'a ExperimentSpec,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Runs `spec`, writes the result file and its manifest, and returns the
/// output path. The manifest is written even when the run fails part way.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<PathBuf> {
    spec.validate()?;
    let out = spec.output_path();
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let (body, rows, skipped, error) = if spec.kind == ExperimentKind::Generate {
        match scenario_for(spec, spec.seeds[0], spec.k[0], spec.n[0]) {
            Ok(s) => (s.to_json() + "\n", 1, Vec::new(), None),
            Err(e) => (String::new(), 0, Vec::new(), Some(e)),
        }
    } else {
        let run = run_table(spec);
        let body = match spec.output_format() {
            OutputFormat::Csv => run.table.to_csv()?,
            OutputFormat::Json => run.table.to_json()?,
        };
        (body, run.table.rows.len(), run.skipped, run.error)
    };
    std::fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;

    let manifest = Manifest {
        kind: spec.kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        status: if error.is_some() { "failed" } else { "ok" },
        error: error.as_ref().map(|e| format!("{e:#}")),
        rows,
        skipped: &skipped,
        output: out.display().to_string(),
        spec,
    };
    let mpath = manifest_path(&out);
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", mpath.display()))?;
    match error {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Reads the spec back out of a manifest.
pub fn spec_from_manifest(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let spec = value.get("spec").ok_or_else(|| anyhow!("{} has no spec", path.display()))?;
    Ok(serde_json::from_value(spec.clone())?)
}

/// Runs every table-producing experiment without touching the filesystem.
pub fn run_table(spec: &ExperimentSpec) -> RunOutput {
    if let Err(e) = spec.validate() {
        let mut out = RunOutput::new(Vec::new());
        out.error = Some(e);
        return out;
    }
    match spec.kind {
        ExperimentKind::EtaSweep => eta_sweep(spec),
        ExperimentKind::KnScaling => kn_scaling(spec),
        ExperimentKind::MinrateEtaSurface => surface(spec),
        ExperimentKind::InstantVsOracle => instant_vs_oracle(spec),
        ExperimentKind::Timing => timing(spec),
        ExperimentKind::Simulate => simulate(spec),
        ExperimentKind::Generate => {
            let mut out = RunOutput::new(Vec::new());
            out.error = Some(anyhow!("generate produces a scenario, not a table"));
            out
        }
    }
}

fn scenario_for(spec: &ExperimentSpec, seed: u64, k: usize, n: usize) -> Result<Scenario> {
    // a loaded scenario keeps its own weights; sweeps override them per point
    if let Some(s) = &spec.scenario {
        return Ok(s.clone());
    }
    let mut s = generate_scenario(seed, k, n, spec.m, &spec.params)?;
    s.min_rate_coeff = spec.min_rate_coeff[0];
    if spec.params.eta_per_device.is_none() {
        s.set_eta(spec.eta[0]);
    }
    s.validate()?;
    Ok(s)
}

/// The `(seed, K, N)` combinations to run; a loaded scenario collapses the
/// grid to its own shape.
fn instances(spec: &ExperimentSpec) -> Vec<(u64, usize, usize)> {
    if let Some(s) = &spec.scenario {
        return vec![(spec.seeds[0], s.num_devices(), s.num_channels())];
    }
    let mut out = Vec::new();
    for &seed in &spec.seeds {
        for &k in &spec.k {
            for &n in &spec.n {
                out.push((seed, k, n));
            }
        }
    }
    out
}

fn oracle_config(spec: &ExperimentSpec) -> OracleConfig {
    spec.oracle
}

/// Solves with the chosen solver. An infeasible heuristic run still yields
/// its best-effort report.
fn solve(spec: &ExperimentSpec, s: &Scenario, solver: SolverChoice) -> Result<SolveReport, SolveError> {
    match solver {
        SolverChoice::Instant => match solve_instant(s) {
            Ok(sol) => Ok(sol.report),
            Err(SolveError::InfeasibleScenario(sol)) => Ok(sol.report),
            Err(e) => Err(e),
        },
        SolverChoice::Oracle => solve_oracle(s, &oracle_config(spec)).map(|sol| sol.report),
    }
}

fn keys(eta: Option<f64>, k: usize, n: usize, seed: u64) -> Vec<Cell> {
    vec![eta.into(), k.into(), n.into(), seed.into()]
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn violated(report: &SolveReport) -> Cell {
    let ids: Vec<String> = report.feasibility.violated().map(|c| format!("{:?}", c.id)).collect();
    Cell::Text(ids.join(";"))
}

/// Stops the run after an infeasible instance unless the caller treats
/// infeasibility as data.
fn note_infeasible(out: &mut RunOutput, what: String) {
    if out.error.is_none() {
        out.error = Some(anyhow!("infeasible scenario: {what}"));
    }
}

fn eta_sweep(spec: &ExperimentSpec) -> RunOutput {
    let (seed, k, n) = instances(spec)[0];
    let mut cols = headers(&["eta", "K", "N", "seed"]);
    for field in ["rate", "ee", "se", "tail", "mu"] {
        cols.extend((0..k).map(|u| format!("{field}_{u}")));
    }
    cols.extend(headers(&["total", "total_ee", "total_se", "feasible", "violated"]));
    let mut out = RunOutput::new(cols);
    let base = match scenario_for(spec, seed, k, n) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    for &eta in &spec.eta {
        let mut s = base.clone();
        s.set_eta(eta);
        let r = match solve(spec, &s, spec.solver) {
            Ok(r) => r,
            Err(e) => {
                out.error = Some(anyhow!(e).context(format!("eta={eta}")));
                return out;
            }
        };
        let mut row = keys(Some(eta), k, n, seed);
        row.extend(r.rates.iter().map(|&v| Cell::from(v)));
        row.extend(r.objective.ee_per_user.iter().map(|&v| Cell::from(v)));
        row.extend(r.objective.se_per_user.iter().map(|&v| Cell::from(v)));
        row.extend(r.tail_probability.iter().map(|&v| Cell::from(v)));
        row.extend(r.mu.iter().map(|&v| Cell::from(v)));
        row.extend([
            r.total().into(),
            r.total_ee().into(),
            r.objective.total_se().into(),
            r.feasibility.feasible.into(),
            violated(&r),
        ]);
        out.table.push(row);
        if !r.feasibility.feasible {
            note_infeasible(&mut out, format!("eta={eta}: {}", r.feasibility.summary()));
            return out;
        }
    }
    out
}

fn kn_scaling(spec: &ExperimentSpec) -> RunOutput {
    let mut out = RunOutput::new(headers(&[
        "eta", "K", "N", "seed", "solver", "total", "total_ee", "total_se", "feasible", "violated",
    ]));
    for (seed, k, n) in instances(spec) {
        if spec.solver == SolverChoice::Oracle && !spec.oracle_fits(k, n) {
            let note = format!("K={k} N={n} seed={seed}: exceeds the oracle cap");
            if !out.skipped.contains(&note) {
                out.skipped.push(note);
            }
            continue;
        }
        let s = match scenario_for(spec, seed, k, n) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        let mut row = keys(Some(spec.eta[0]), k, n, seed);
        row.push(Cell::Text(solver_name(spec.solver).into()));
        match solve(spec, &s, spec.solver) {
            Ok(r) => {
                row.extend([
                    r.total().into(),
                    r.total_ee().into(),
                    r.objective.total_se().into(),
                    r.feasibility.feasible.into(),
                    violated(&r),
                ]);
                if !r.feasibility.feasible {
                    note_infeasible(&mut out, format!("K={k} N={n} seed={seed}"));
                }
            }
            Err(SolveError::NoFeasibleSolution { .. }) => {
                row.extend([Cell::Empty, Cell::Empty, Cell::Empty, false.into(), Cell::Empty]);
                note_infeasible(&mut out, format!("K={k} N={n} seed={seed}"));
            }
            Err(e) => {
                out.error = Some(e.into());
                return out;
            }
        }
        out.table.push(row);
    }
    out
}

fn solver_name(s: SolverChoice) -> &'static str {
    match s {
        SolverChoice::Instant => "instant",
        SolverChoice::Oracle => "oracle",
    }
}

/// Objective over (min-rate, eta); infeasible points are recorded, not fatal.
fn surface(spec: &ExperimentSpec) -> RunOutput {
    let mut out = RunOutput::new(headers(&[
        "eta",
        "K",
        "N",
        "seed",
        "min_rate_coeff",
        "total",
        "total_ee",
        "total_se",
        "feasible",
        "violated",
    ]));
    for (seed, k, n) in instances(spec) {
        let base = match scenario_for(spec, seed, k, n) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        for &coeff in &spec.min_rate_coeff {
            for &eta in &spec.eta {
                let mut s = base.clone();
                s.min_rate_coeff = coeff;
                s.set_eta(eta);
                let mut row = keys(Some(eta), k, n, seed);
                row.push(coeff.into());
                match solve(spec, &s, spec.solver) {
                    Ok(r) => row.extend([
                        r.total().into(),
                        r.total_ee().into(),
                        r.objective.total_se().into(),
                        r.feasibility.feasible.into(),
                        violated(&r),
                    ]),
                    Err(SolveError::NoFeasibleSolution { .. }) => {
                        row.extend([Cell::Empty, Cell::Empty, Cell::Empty, false.into(), Cell::Empty])
                    }
                    Err(e) => {
                        out.error = Some(e.into());
                        return out;
                    }
                }
                out.table.push(row);
            }
        }
    }
    out
}

fn instant_vs_oracle(spec: &ExperimentSpec) -> RunOutput {
    let mut out = RunOutput::new(headers(&[
        "eta",
        "K",
        "N",
        "seed",
        "instant_total",
        "oracle_total",
        "gap_pct",
        "instant_ee",
        "oracle_ee",
        "ee_ratio",
        "grid_tolerance_pct",
        "assignments",
        "instant_feasible",
    ]));
    for (seed, k, n) in instances(spec) {
        let base = match scenario_for(spec, seed, k, n) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        for &eta in &spec.eta {
            let mut s = base.clone();
            s.set_eta(eta);
            let step = (|| -> Result<Vec<Cell>, SolveError> {
                let i = solve(spec, &s, SolverChoice::Instant)?;
                let mut row = keys(Some(eta), k, n, seed);
                match solve_oracle(&s, &oracle_config(spec)) {
                    Ok(o) => {
                        let o = o.report;
                        row.extend([
                            i.total().into(),
                            o.total().into(),
                            gap(&i, &o)?.into(),
                            i.total_ee().into(),
                            o.total_ee().into(),
                            (i.total_ee() / o.total_ee()).into(),
                            o.grid_tolerance_pct.into(),
                            o.assignments_enumerated.into(),
                        ]);
                    }
                    Err(SolveError::NoFeasibleSolution { enumerated }) => row.extend([
                        i.total().into(),
                        Cell::Empty,
                        Cell::Empty,
                        i.total_ee().into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        enumerated.into(),
                    ]),
                    Err(e) => return Err(e),
                }
                row.push(i.feasibility.feasible.into());
                Ok(row)
            })();
            match step {
                Ok(row) => {
                    let feasible = row.last().and_then(Cell::as_bool) == Some(true);
                    out.table.push(row);
                    if !feasible {
                        note_infeasible(&mut out, format!("K={k} N={n} seed={seed} eta={eta}"));
                    }
                }
                Err(e) => {
                    out.error = Some(anyhow!(e).context(format!("K={k} N={n} seed={seed} eta={eta}")));
                    return out;
                }
            }
        }
    }
    out
}

/// Wall-clock per solver and size. Oracle columns stay empty above the cap.
fn timing(spec: &ExperimentSpec) -> RunOutput {
    let mut out = RunOutput::new(headers(&[
        "eta",
        "K",
        "N",
        "seed",
        "instant_s",
        "oracle_s",
        "oracle_over_instant",
        "instant_total",
        "oracle_total",
    ]));
    for (seed, k, n) in instances(spec) {
        let s = match scenario_for(spec, seed, k, n) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        let t0 = Instant::now();
        let i = match solve(spec, &s, SolverChoice::Instant) {
            Ok(r) => r,
            Err(e) => {
                out.error = Some(e.into());
                return out;
            }
        };
        let instant_s = t0.elapsed().as_secs_f64();
        let mut row = keys(Some(spec.eta[0]), k, n, seed);
        row.push(instant_s.into());
        if spec.oracle_fits(k, n) {
            let t0 = Instant::now();
            let o = solve_oracle(&s, &oracle_config(spec));
            let oracle_s = t0.elapsed().as_secs_f64();
            row.extend([oracle_s.into(), (oracle_s / instant_s).into(), i.total().into()]);
            row.push(o.ok().map(|o| o.report.total()).into());
        } else {
            out.skipped.push(format!("K={k} N={n} seed={seed}: oracle above the cap"));
            row.extend([Cell::Empty, Cell::Empty, i.total().into(), Cell::Empty]);
        }
        out.table.push(row);
    }
    out
}

fn simulate(spec: &ExperimentSpec) -> RunOutput {
    let mut out = RunOutput::new(headers(&[
        "eta",
        "K",
        "N",
        "seed",
        "slot",
        "device",
        "dormant",
        "harvest_rate",
        "mu",
        "channels",
        "e_res_start",
        "e_har",
        "e_tr",
        "e_sen",
        "e_res_end",
        "rate",
        "buffer_bits",
        "delivered_bits",
        "objective",
        "feasible",
        "error",
    ]));
    let (seed, k, n) = instances(spec)[0];
    let result = (|| -> Result<_> {
        let s = scenario_for(spec, seed, k, n)?;
        let cfg = SimConfig {
            slots: spec.slots,
            seed,
            harvest_model: spec.harvest_model,
            regenerate_buffers: true,
            solver: match spec.solver {
                SolverChoice::Instant => SimSolver::Instant,
                SolverChoice::Oracle => {
                    if !spec.oracle_fits(s.num_devices(), s.num_channels()) {
                        bail!("oracle request exceeds the cap of {} assignments", spec.oracle.max_assignments);
                    }
                    SimSolver::Oracle(oracle_config(spec))
                }
            },
        };
        Ok((s.num_devices(), s.num_channels(), run_simulation(&s, &cfg)?))
    })();
    let (k, n, records) = match result {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    for r in &records {
        for d in &r.devices {
            let dormant = d.dormant.map_or(String::new(), |x| format!("{x:?}"));
            out.table.push(vec![
                spec.eta[0].into(),
                k.into(),
                n.into(),
                seed.into(),
                r.slot.into(),
                d.device.into(),
                Cell::Text(dormant),
                d.harvest_rate.into(),
                d.mu.into(),
                d.channels.into(),
                d.e_res_start.into(),
                d.e_har.into(),
                d.e_tr.into(),
                d.e_sen.into(),
                d.e_res_end.into(),
                d.rate.into(),
                d.buffer_bits.into(),
                d.delivered_bits.into(),
                r.objective.into(),
                r.feasible.into(),
                r.error.clone().into(),
            ]);
        }
    }
    out
}
