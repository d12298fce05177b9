//! The subcommands as library functions: each returns its manifest and exit
//! code, and writes its files under the output directory.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use aniflow_core::anisotropy::{check_structure, default_directions, verify_decay, ConstantsReport, StructureReport};
use aniflow_core::estimates::{check_assumptions, AssumptionReport};
use aniflow_core::evolve::{run, BcMode, BoundaryData, FlowState, Trajectory};
use aniflow_core::geometry::Grid;
use aniflow_core::translator::{epsilon_scheme, lambda_from_flow, oracle_1d, Method, TranslatorSolution};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::output::{estimates_csv, trajectory_csv, write_atomic, write_json};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorRecord {
    pub method: Method,
    pub lambda: f64,
    pub residual: f64,
    pub osc_sequence: Vec<f64>,
    pub lambda_sequence: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl From<&TranslatorSolution> for TranslatorRecord {
    fn from(s: &TranslatorSolution) -> Self {
        Self {
            method: s.method,
            lambda: s.lambda,
            residual: s.residual,
            osc_sequence: s.osc_sequence.clone(),
            lambda_sequence: s.lambda_sequence.clone(),
            epsilons: s.epsilons.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub nodes: usize,
    pub resolution: Vec<usize>,
    pub delta_min: f64,
}

impl GridInfo {
    fn of(grid: &Grid) -> Self {
        let resolution = match grid {
            Grid::Interval(g) => vec![g.n],
            Grid::Polar(g) => vec![g.n_r, g.n_theta],
        };
        Self {
            nodes: grid.node_count(),
            resolution,
            delta_min: grid.delta_min(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub records: usize,
    pub final_time: f64,
    pub steady_time: Option<f64>,
    pub a0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub lambda_hat_final: f64,
    pub sup_grad_max: f64,
    pub eigmin_b_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub code_version: String,
    pub scenario: Scenario,
    pub grid: Option<GridInfo>,
    pub compatibility: Option<(f64, f64)>,
    pub assumptions: Option<AssumptionReport>,
    pub structure: Option<StructureReport>,
    pub constants: Option<ConstantsReport>,
    pub run: Option<RunSummary>,
    pub translator: Vec<TranslatorRecord>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub wall_clock_seconds: f64,
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: &Scenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.clone(),
            grid: None,
            compatibility: None,
            assumptions: None,
            structure: None,
            constants: None,
            run: None,
            translator: Vec::new(),
            verdicts: BTreeMap::new(),
            wall_clock_seconds: 0.0,
            error: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.verdicts.values().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) if e.kind == "config" => EXIT_CONFIG,
            Some(_) => EXIT_FAILED,
            None if self.all_pass() => EXIT_OK,
            None => EXIT_FAILED,
        }
    }

    pub fn lambda(&self, method: Method) -> Option<f64> {
        self.translator.iter().find(|t| t.method == method).map(|t| t.lambda)
    }
}

/// Projected initial state ready to run, plus the compatibility residual
/// before and after projection.
pub fn prepare(scenario: &Scenario) -> Result<(FlowState, (f64, f64))> {
    let grid = scenario.grid()?;
    let field = scenario.initial_field(&grid)?;
    let mut state = FlowState::new(scenario.model()?, scenario.domain()?, grid, scenario.bc(), field)?;
    let compat = state.project_initial(scenario.solver.cfl_safety, scenario.initial.project_steps)?;
    Ok((state, compat))
}

pub fn assumptions(scenario: &Scenario, compat: Option<(f64, f64)>) -> Result<AssumptionReport> {
    Ok(check_assumptions(
        &scenario.model()?,
        &scenario.domain()?,
        &scenario.bc(),
        &scenario.grid()?,
        compat,
        scenario.thresholds,
    ))
}

/// Everything `evolve` computes, kept in memory.
pub struct Evolution {
    pub state: FlowState,
    pub trajectory: Trajectory,
    pub compatibility: (f64, f64),
    pub assumptions: AssumptionReport,
}

pub fn evolve(scenario: &Scenario) -> Result<Evolution> {
    let (mut state, compatibility) = prepare(scenario)?;
    let assumptions = assumptions(scenario, Some(compatibility))?;
    let trajectory = run(&mut state, &scenario.solver, &scenario.diagnostics)?;
    Ok(Evolution {
        state,
        trajectory,
        compatibility,
        assumptions,
    })
}

/// Zero flux through the boundary: right angle everywhere or `phi = 0`.
fn zero_flux(scenario: &Scenario) -> bool {
    let target = match scenario.bc.mode {
        BcMode::ContactAngle => std::f64::consts::FRAC_PI_2,
        BcMode::Neumann => 0.0,
    };
    let close = |x: f64| (x - target).abs() < 1e-12;
    match &scenario.bc.data {
        BoundaryData::Fourier { constant, cos, sin } => {
            close(*constant) && cos.iter().chain(sin).all(|c| *c == 0.0)
        }
        BoundaryData::Endpoints { left, right } => close(*left) && close(*right),
    }
}

/// Property checks on a finished run.
pub fn run_verdicts(scenario: &Scenario, ev: &Evolution) -> BTreeMap<String, Verdict> {
    let mut out = BTreeMap::new();
    let recs = &ev.trajectory.records;
    let first = &recs[0];
    let worst = recs.iter().map(|r| r.sup_ut - first.sup_ut).fold(f64::NEG_INFINITY, f64::max);
    out.insert(
        "ut_max_principle".into(),
        Verdict::new(worst <= 1e-8, format!("max_t sup|u_t| - sup|u_t|(0) = {worst:.3e}")),
    );
    let end = recs.last().map(|r| r.time).unwrap_or(0.0);
    let quarter = 0.25 * end;
    let early = recs.iter().filter(|r| r.time <= quarter).map(|r| r.sup_grad).fold(0.0, f64::max);
    let late = recs.iter().filter(|r| r.time >= quarter).map(|r| r.sup_grad).fold(0.0, f64::max);
    out.insert(
        "gradient_bounded".into(),
        Verdict::new(late <= 1.05 * early, format!("late {late:.6e} vs early {early:.6e}")),
    );
    if zero_flux(scenario) {
        let lam = recs.last().map(|r| r.lambda_hat).unwrap_or(f64::NAN);
        out.insert("lambda_zero".into(), Verdict::new(lam.abs() < 1e-6, format!("lambda_hat = {lam:.3e}")));
    }
    if scenario.diagnostics.enabled {
        let k0 = ev.state.domain.k0;
        let a0 = ev.trajectory.a0;
        if scenario.bc.mode == BcMode::Neumann && a0 > 0.0 && a0 < 2.0 * k0 {
            let hits = recs.iter().filter(|r| r.psi_argmax_boundary).count();
            out.insert(
                "psi_interior".into(),
                Verdict::new(hits == 0, format!("{hits} of {} records with boundary argmax", recs.len())),
            );
        }
        let rho = recs.iter().filter(|r| !r.rho_bounds_hold).count();
        out.insert("rho_bounds".into(), Verdict::new(rho == 0, format!("{rho} records violate the rho bounds")));
        if ev.assumptions.small_data() {
            let m = eigmin(&ev.trajectory);
            out.insert(
                "b_semidefinite".into(),
                Verdict::new(m.map_or(true, |m| m >= -1e-8), format!("min eigenvalue {m:?}")),
            );
        }
    }
    out
}

fn eigmin(t: &Trajectory) -> Option<f64> {
    t.records
        .iter()
        .map(|r| r.eigmin_b)
        .filter(|x| !x.is_nan())
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
}

fn summary(t: &Trajectory, state: &FlowState) -> RunSummary {
    RunSummary {
        steps: t.steps,
        records: t.records.len(),
        final_time: state.time(),
        steady_time: t.steady_time,
        a0: t.a0,
        dt_min: t.dt_range.0,
        dt_max: t.dt_range.1,
        lambda_hat_final: t.last().map(|r| r.lambda_hat).unwrap_or(f64::NAN),
        sup_grad_max: t.records.iter().map(|r| r.sup_grad).fold(0.0, f64::max),
        eigmin_b_min: eigmin(t),
    }
}

fn fail(manifest: &mut RunManifest, kind: &str, err: &anyhow::Error) {
    manifest.error = Some(ErrorRecord {
        kind: kind.into(),
        message: format!("{err:#}"),
    });
}

fn finish(mut manifest: RunManifest, start: Instant, out: &Path) -> Result<RunManifest> {
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn cmd_verify(scenario: &Scenario, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("verify", scenario);
    let model = match scenario.model() {
        Ok(m) => m,
        Err(e) => {
            fail(&mut manifest, "config", &e);
            return finish(manifest, start, out);
        }
    };
    match check_structure(&model, scenario.verify.samples, scenario.seed) {
        Ok(structure) => {
            let verdict = match structure.verdict() {
                Ok(()) => Verdict::new(true, "all identities within tolerance"),
                Err(e) => Verdict::new(false, format!("{e:?}")),
            };
            manifest.verdicts.insert("identities".into(), verdict);
            manifest.structure = Some(structure);
        }
        Err(e) => {
            fail(&mut manifest, "runtime", &e.into());
            return finish(manifest, start, out);
        }
    }
    let dirs = default_directions(model.dim(), scenario.verify.directions);
    match verify_decay(&model, &dirs, &scenario.verify.s_grid) {
        Ok(constants) => {
            write_json(&out.join("constants.json"), &constants)?;
            for fit in &constants.slope_fits {
                manifest.verdicts.insert(
                    format!("slope_{}", fit.quantity),
                    Verdict::new(fit.holds, format!("fitted {:.4} target {:.1}", fit.fitted, fit.target)),
                );
            }
            manifest.constants = Some(constants);
        }
        Err(e) => {
            manifest.verdicts.insert("decay".into(), Verdict::new(false, format!("{e:?}")));
        }
    }
    finish(manifest, start, out)
}

pub fn cmd_evolve(scenario: &Scenario, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("evolve", scenario);
    match scenario.grid() {
        Ok(g) => manifest.grid = Some(GridInfo::of(&g)),
        Err(e) => {
            fail(&mut manifest, "config", &e);
            return finish(manifest, start, out);
        }
    }
    match evolve(scenario) {
        Ok(ev) => {
            write_atomic(&out.join("trajectory.csv"), trajectory_csv(&ev.trajectory.records).as_bytes())?;
            write_atomic(&out.join("estimates.csv"), estimates_csv(&ev.trajectory.records).as_bytes())?;
            manifest.verdicts = run_verdicts(scenario, &ev);
            if let Ok(sol) = lambda_from_flow(&ev.trajectory, &ev.state) {
                manifest.translator.push(TranslatorRecord::from(&sol));
            }
            manifest.run = Some(summary(&ev.trajectory, &ev.state));
            manifest.compatibility = Some(ev.compatibility);
            manifest.assumptions = Some(ev.assumptions);
        }
        Err(e) => fail(&mut manifest, "runtime", &e),
    }
    finish(manifest, start, out)
}

/// Relative difference with the `1e-6` floor used for vanishing speeds.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn cmd_translator(scenario: &Scenario, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("translator", scenario);
    let result = (|| -> Result<()> {
        let grid = scenario.grid()?;
        manifest.grid = Some(GridInfo::of(&grid));
        for method in &scenario.translator.methods {
            let sol = match method {
                Method::ParabolicAverage => {
                    let ev = evolve(scenario)?;
                    write_atomic(&out.join("trajectory.csv"), trajectory_csv(&ev.trajectory.records).as_bytes())?;
                    manifest.verdicts.extend(run_verdicts(scenario, &ev));
                    manifest.run = Some(summary(&ev.trajectory, &ev.state));
                    manifest.compatibility = Some(ev.compatibility);
                    manifest.assumptions = Some(ev.assumptions);
                    lambda_from_flow(&ev.trajectory, &ev.state)?
                }
                Method::EpsilonScheme => epsilon_scheme(
                    &scenario.model()?,
                    &scenario.domain()?,
                    &scenario.bc(),
                    &grid,
                    &scenario.translator.epsilon,
                )?,
                Method::Oracle1D => {
                    if scenario.dim() != 1 {
                        continue;
                    }
                    oracle_1d(
                        &scenario.model()?,
                        &scenario.bc(),
                        scenario.domain()?.size(),
                        scenario.translator.oracle_nodes,
                    )?
                }
            };
            manifest.translator.push(TranslatorRecord::from(&sol));
        }
        Ok(())
    })();
    if let Err(e) = result {
        fail(&mut manifest, "runtime", &e);
        return finish(manifest, start, out);
    }
    let flow = manifest.lambda(Method::ParabolicAverage);
    let eps = manifest.lambda(Method::EpsilonScheme);
    if let (Some(a), Some(b)) = (flow, eps) {
        let gap = relative_gap(a, b);
        manifest
            .verdicts
            .insert("methods_agree".into(), Verdict::new(gap < 1e-2, format!("relative gap {gap:.3e}")));
    }
    if let Some(oracle) = manifest.lambda(Method::Oracle1D) {
        let worst = [flow, eps].into_iter().flatten().map(|l| relative_gap(l, oracle)).fold(0.0, f64::max);
        manifest
            .verdicts
            .insert("oracle_agree".into(), Verdict::new(worst < 5e-3, format!("worst relative gap {worst:.3e}")));
    }
    if let Some(t) = manifest.translator.iter().find(|t| t.method == Method::EpsilonScheme) {
        let flat = t.osc_sequence.iter().all(|o| *o < 1e-12);
        let shrinking = t.osc_sequence.windows(2).all(|p| p[1] < p[0]);
        manifest.verdicts.insert(
            "osc_decreasing".into(),
            Verdict::new(flat || shrinking, format!("{:?}", t.osc_sequence)),
        );
    }
    finish(manifest, start, out)
}

/// A base scenario and one dotted parameter to vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `evolve`, `translator` or `verify`.
    pub command: String,
    /// Dotted path into the scenario, e.g. `anisotropy.beta`.
    pub parameter: String,
    pub values: Vec<f64>,
    pub base: toml::Table,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }

    /// The scenario for `values[index]`.
    pub fn scenario(&self, index: usize) -> Result<Scenario> {
        let mut table = self.base.clone();
        let keys: Vec<&str> = self.parameter.split('.').collect();
        let (last, parents) = keys.split_last().context("empty sweep parameter")?;
        let mut node = &mut table;
        for k in parents {
            node = node
                .get_mut(*k)
                .and_then(|v| v.as_table_mut())
                .with_context(|| format!("sweep parameter section `{k}` not found"))?;
        }
        node.insert(last.to_string(), toml::Value::Float(self.values[index]));
        let name = table.get("name").and_then(|v| v.as_str()).unwrap_or("sweep").to_string();
        table.insert("name".into(), toml::Value::String(format!("{name}_{index}")));
        Ok(toml::Value::Table(table).try_into()?)
    }
}

pub fn cmd_sweep(config: &SweepConfig, out: &Path) -> Result<Vec<RunManifest>> {
    let mut manifests = Vec::with_capacity(config.values.len());
    let mut csv = String::from("index,value,exit_code,lambda,epsilon2,eigmin_b_min,sup_grad_max\n");
    for i in 0..config.values.len() {
        let scenario = config.scenario(i)?;
        let dir = out.join(&scenario.name);
        let m = match config.command.as_str() {
            "evolve" => cmd_evolve(&scenario, &dir)?,
            "translator" => cmd_translator(&scenario, &dir)?,
            "verify" => cmd_verify(&scenario, &dir)?,
            other => bail!("unknown sweep command `{other}`"),
        };
        let lambda = m
            .lambda(Method::EpsilonScheme)
            .or(m.lambda(Method::ParabolicAverage))
            .unwrap_or(f64::NAN);
        let eps2 = m
            .assumptions
            .as_ref()
            .map(|a| a.epsilon2_measured)
            .or(m.constants.as_ref().map(|c| c.epsilon2))
            .unwrap_or(f64::NAN);
        let run = m.run.as_ref();
        let row = [
            config.values[i],
            lambda,
            eps2,
            run.and_then(|r| r.eigmin_b_min).unwrap_or(f64::NAN),
            run.map(|r| r.sup_grad_max).unwrap_or(f64::NAN),
        ];
        let cells: Vec<String> = row.iter().map(|x| crate::output::fmt_e12(*x)).collect();
        csv.push_str(&format!("{i},{},{},{}\n", cells[0], m.exit_code(), cells[1..].join(",")));
        manifests.push(m);
    }
    write_atomic(&out.join("summary.csv"), csv.as_bytes())?;
    write_json(&out.join("sweep.json"), &manifests)?;
    Ok(manifests)
}
