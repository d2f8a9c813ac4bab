//! Experiment pipeline: certify gains, simulate, verify, write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::controller::{
    check_theorem1, check_theorem2, suggest_gains, Check, FeasibilityReport, Gains, Target, Theorem,
};
use crate::error::{Error, Result};
use crate::friction::FrictionModel;
use crate::functionals::sampling::scale_to_value;
use crate::functionals::{clf_v, functional_u, u_level};
use crate::harness::config::{ExperimentConfig, GainPlan};
use crate::harness::verify::{
    prop2_epsilon_limit, verify_decay, verify_lemma1, verify_lemma2, verify_lemma34, verify_prop1,
    verify_prop2, VerificationResult,
};
use crate::solver::{
    make_initial, simulate, write_fields, write_trajectory_csv, SolverConfig, Termination,
    Trajectory,
};
use crate::state::{Grid, LiquidState, PhysicalParams, TankState};

/// Largest relative drift of `∫h dx` accepted along a run.
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-12;

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success = 0,
    RuntimeFailure = 1,
    ConfigError = 2,
    CheckFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// The more severe of two statuses; a config error outranks a check
    /// failure, which outranks a runtime failure.
    pub fn worst(self, other: ExitStatus) -> ExitStatus {
        let rank = |s: ExitStatus| match s {
            ExitStatus::Success => 0,
            ExitStatus::RuntimeFailure => 1,
            ExitStatus::CheckFailure => 2,
            ExitStatus::ConfigError => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }

    fn of_error(e: &Error) -> ExitStatus {
        match e {
            Error::InvalidParameter { .. } | Error::Domain(_) => ExitStatus::ConfigError,
            Error::AssumptionHNotSatisfied(_) | Error::Infeasible(_) => ExitStatus::CheckFailure,
            _ => ExitStatus::RuntimeFailure,
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Treat warnings as failures.
    pub strict: bool,
}

impl RunOptions {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(o) = &self.out {
            config.output.dir = o.clone();
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub messages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    #[serde(skip)]
    pub report: Option<FeasibilityReport>,
    #[serde(skip)]
    pub verifications: Vec<VerificationResult>,
}

impl RunOutcome {
    fn new() -> Self {
        RunOutcome {
            status: ExitStatus::Success,
            messages: Vec::new(),
            artifacts: Vec::new(),
            report: None,
            verifications: Vec::new(),
        }
    }

    fn fail(mut self, status: ExitStatus, msg: impl Into<String>) -> Self {
        self.status = self.status.worst(status);
        self.messages.push(msg.into());
        self
    }

    fn note_failure(&mut self, status: ExitStatus, msg: impl Into<String>) {
        self.status = self.status.worst(status);
        self.messages.push(msg.into());
    }
}

/// Certified (or merely validated) gains of a config.
#[derive(Debug, Clone)]
pub struct Certification {
    pub gains: Gains,
    pub report: Option<FeasibilityReport>,
}

/// Suggests or checks gains as the config requests. Infeasible
/// suggestions are errors; failed checks are in the report.
pub fn certify(config: &ExperimentConfig) -> Result<Certification> {
    let params = config.params()?;
    let friction = config.friction_model()?;
    match config.gains.plan()? {
        GainPlan::Suggest { target, hints } => {
            let s = suggest_gains(target, &friction, &params, &hints)?;
            Ok(Certification {
                gains: s.gains,
                report: Some(s.report),
            })
        }
        GainPlan::Explicit { gains, certify } => {
            let report = match certify {
                None => None,
                Some((Target::Theorem1 { omega }, r)) => {
                    Some(check_theorem1(&gains, omega, r, &friction, &params)?)
                }
                Some((Target::Theorem2 { omega1, omega2 }, r)) => Some(check_theorem2(
                    &gains, omega1, omega2, r, &friction, &params,
                )?),
            };
            Ok(Certification { gains, report })
        }
    }
}

/// Initial state of a config, rescaled into the certified sublevel set
/// when `level_fraction` is set.
pub fn initial_state(
    config: &ExperimentConfig,
    cert: &Certification,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<(TankState, LiquidState)> {
    let (tank, state) = make_initial(&config.initial.spec(), params, grid)?;
    let (Some(fraction), Some(report)) = (config.initial.level_fraction, &cert.report) else {
        return Ok((tank, state));
    };
    let fp = cert.gains.functional_params()?;
    if report.theorem == Theorem::Theorem2 {
        let target = fraction * u_level(report.r, &fp);
        scale_to_value(&tank, &state, target, params, grid, |t, s| {
            functional_u(t, s, params, &fp, grid)
        })
    } else {
        let target = fraction * report.r;
        scale_to_value(&tank, &state, target, params, grid, |t, s| {
            clf_v(t, s, params, &fp, grid)
        })
    }
}

fn write_json(path: &Path, value: &impl Serialize, out: &mut RunOutcome) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Domain(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text).map_err(|e| Error::Domain(format!("writing {}: {e}", path.display())))?;
    out.artifacts.push(path.to_path_buf());
    Ok(())
}

#[derive(Serialize)]
struct FailedSuggestion<'a> {
    pass: bool,
    error: &'a str,
}

/// Which stages of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Gains only.
    Gains,
    /// Gains and the sampled checks; simulates only if a trajectory check
    /// is requested.
    Verify,
    /// Everything.
    Simulate,
}

/// Loads a config file and runs it; unreadable or invalid configs give
/// [`ExitStatus::ConfigError`].
pub fn run_file(path: &Path, stage: Stage, opts: &RunOptions) -> RunOutcome {
    match ExperimentConfig::load(path) {
        Ok(c) => run(c, stage, opts),
        Err(e) => RunOutcome::new().fail(ExitStatus::ConfigError, e.to_string()),
    }
}

/// Runs the pipeline: certify gains and write `feasibility.json`, simulate
/// and write `trajectory.csv`, run the requested checks and write
/// `verification.json`. The status is success iff every check passes.
pub fn run(mut config: ExperimentConfig, stage: Stage, opts: &RunOptions) -> RunOutcome {
    opts.apply(&mut config);
    let mut out = RunOutcome::new();
    if let Err(e) = config.validate() {
        return out.fail(ExitStatus::ConfigError, e.to_string());
    }
    match pipeline(&config, stage, opts, &mut out) {
        Ok(()) => out,
        Err(e) => out.fail(ExitStatus::of_error(&e), e.to_string()),
    }
}

fn pipeline(
    config: &ExperimentConfig,
    stage: Stage,
    opts: &RunOptions,
    out: &mut RunOutcome,
) -> Result<()> {
    macro_rules! tri {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => return Err(e),
            }
        };
    }
    let dir = config.output.dir.clone();
    tri!(fs::create_dir_all(&dir)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", dir.display()))));
    let hash = config.hash();
    let params = tri!(config.params());
    let friction = tri!(config.friction_model());

    let cert = match certify(config) {
        Ok(c) => c,
        Err(e) => {
            let msg = e.to_string();
            let failed = FailedSuggestion {
                pass: false,
                error: &msg,
            };
            tri!(write_json(&dir.join("feasibility.json"), &failed, out));
            return Err(e);
        }
    };
    if let Some(report) = &cert.report {
        tri!(write_json(&dir.join("feasibility.json"), report, out));
        if !report.pass {
            let failed: Vec<&str> = report.failed_checks().map(|c| c.name.as_str()).collect();
            let mut msg = format!("gain certificate failed: {}", failed.join(", "));
            for n in &report.notes {
                msg.push_str("; ");
                msg.push_str(n);
            }
            out.note_failure(ExitStatus::CheckFailure, msg);
        }
        out.report = Some(report.clone());
    }
    if stage == Stage::Gains {
        return Ok(());
    }

    let v = &config.verify;
    let fp = tri!(cert.gains.functional_params());
    let seed = config.seed;
    let mut results = Vec::new();
    if v.lemma1 || v.prop2 || v.lemma34 || v.prop1 {
        let grid = tri!(Grid::for_params(v.grid_n, &params));
        if v.lemma1 {
            results.push(tri!(verify_lemma1(v.samples, seed, &params, &fp, &grid)));
        }
        if v.prop1 {
            results.push(tri!(verify_prop1(v.samples, seed, params.length())));
        }
        if v.prop2 {
            let eps = 0.1 * prop2_epsilon_limit(&params);
            results.push(tri!(verify_prop2(
                v.samples, seed, eps, &params, &fp, &grid
            )));
        }
        if v.lemma34 {
            results.push(tri!(verify_lemma34(v.samples, seed, &params, &fp, &grid)));
        }
    }

    let needs_traj = stage == Stage::Simulate || v.lemma2 || v.decay;
    if needs_traj {
        let grid = tri!(Grid::for_params(config.solver.n, &params));
        let (tank0, state0) = tri!(initial_state(config, &cert, &params, &grid));
        let traj = tri!(simulate(
            &tank0,
            &state0,
            &cert.gains,
            &friction,
            &params,
            &config.solver
        ));
        let csv_path = dir.join("trajectory.csv");
        let file = tri!(fs::File::create(&csv_path)
            .map_err(|e| Error::Domain(format!("cannot create {}: {e}", csv_path.display()))));
        tri!(write_trajectory_csv(&traj, std::io::BufWriter::new(file)));
        out.artifacts.push(csv_path);
        if config.output.fields {
            tri!(write_fields(&traj, &dir.join("fields")));
            out.artifacts.push(dir.join("fields"));
        }
        results.push(mass_check(&traj, &params));
        match &traj.termination {
            Termination::Completed => {}
            Termination::Spill { t, margin } => out.note_failure(
                ExitStatus::CheckFailure,
                format!("spill at t = {t}: wall level exceeds H_max by {}", -margin),
            ),
            other => out.note_failure(
                ExitStatus::RuntimeFailure,
                format!("run stopped early: {other:?}"),
            ),
        }
        if opts.strict && !traj.warnings.is_empty() {
            out.note_failure(
                ExitStatus::CheckFailure,
                format!("warnings under --strict: {}", traj.warnings.join("; ")),
            );
        } else {
            out.messages.extend(traj.warnings.iter().cloned());
        }
        if v.lemma2 {
            results.push(tri!(verify_lemma2(
                &traj,
                &params,
                &friction,
                v.lemma2_tolerance
            )));
        }
        if v.decay {
            if let Some(report) = &cert.report {
                results.push(tri!(verify_decay(&traj, report, &params)));
            }
        }
    }

    let results: Vec<VerificationResult> = results
        .into_iter()
        .map(|r| {
            let r = r.with_config_hash(hash.clone());
            if r.provenance.seed.is_none() {
                r.with_seed(seed)
            } else {
                r
            }
        })
        .collect();
    for r in &results {
        if !r.pass {
            out.note_failure(
                ExitStatus::CheckFailure,
                format!(
                    "check {} failed (worst margin {:e})",
                    r.name, r.worst_margin
                ),
            );
        }
        if opts.strict && !r.notes.is_empty() && r.pass {
            out.note_failure(
                ExitStatus::CheckFailure,
                format!(
                    "check {} has notes under --strict: {}",
                    r.name,
                    r.notes.join("; ")
                ),
            );
        }
    }
    if !results.is_empty() {
        tri!(write_json(&dir.join("verification.json"), &results, out));
    }
    out.verifications = results;
    Ok(())
}

/// Relative drift of `∫h dx` against the configured mass.
pub fn mass_check(traj: &Trajectory, params: &PhysicalParams) -> VerificationResult {
    let drift = traj.max_mass_drift(params);
    VerificationResult {
        name: "mass_conservation".into(),
        samples: traj.len(),
        worst_margin: MASS_DRIFT_TOLERANCE - drift,
        pass: drift <= MASS_DRIFT_TOLERANCE,
        clauses: vec![Check::non_strict(
            "relative_mass_drift",
            MASS_DRIFT_TOLERANCE,
            drift,
        )],
        notes: Vec::new(),
        provenance: crate::harness::verify::Provenance {
            seed: None,
            config_hash: None,
            parameters: serde_json::json!({ "mass": params.mass(), "grid_n": traj.grid.n() }),
        },
    }
}

/// Outcome of one friction model in a robustness suite.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessEntry {
    pub friction: String,
    /// The certificate re-checked under this model.
    pub report: FeasibilityReport,
    pub decay: VerificationResult,
    pub mass: VerificationResult,
}

/// Runs one certified gain set against several friction models in
/// parallel. Each model must satisfy the certificate's friction bound; the
/// certificate is re-checked under each model, and the trajectory from the
/// same initial state must pass the decay checks of the original report.
pub fn robustness_suite(
    report: &FeasibilityReport,
    models: &[FrictionModel],
    initial: (&TankState, &LiquidState),
    params: &PhysicalParams,
    solver: &SolverConfig,
) -> Result<Vec<RobustnessEntry>> {
    models
        .par_iter()
        .map(|m| {
            let recheck = match (report.theorem, report.omega, report.omega1, report.omega2) {
                (Theorem::Theorem2, _, Some(w1), Some(w2)) => {
                    check_theorem2(&report.gains, w1, w2, report.r, m, params)?
                }
                (_, Some(w), _, _) => check_theorem1(&report.gains, w, report.r, m, params)?,
                _ => return Err(Error::Precondition("report lacks its level floor".into())),
            };
            let traj = simulate(initial.0, initial.1, &report.gains, m, params, solver)?;
            Ok(RobustnessEntry {
                friction: format!("{m:?}"),
                report: recheck,
                decay: verify_decay(&traj, report, params)?,
                mass: mass_check(&traj, params),
            })
        })
        .collect()
}

/// One entry of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub run: usize,
    pub value: serde_json::Value,
    pub dir: PathBuf,
    pub status: ExitStatus,
    pub messages: Vec<String>,
}

/// Sets the dotted `path` (e.g. `physical.mu`) of a config to `value`.
pub fn with_parameter(
    config: &ExperimentConfig,
    path: &str,
    value: serde_json::Value,
) -> Result<ExperimentConfig> {
    let mut tree = serde_json::to_value(config).map_err(|e| Error::Domain(e.to_string()))?;
    let mut node = &mut tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Domain(format!("{path}: {part} is not inside a section")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value.clone());
            break;
        }
        node = obj
            .get_mut(*part)
            .filter(|v| !v.is_null())
            .ok_or_else(|| Error::Domain(format!("{path}: no section {part}")))?;
    }
    let c: ExperimentConfig =
        serde_json::from_value(tree).map_err(|e| Error::Domain(format!("{path}: {e}")))?;
    c.validate()?;
    Ok(c)
}

/// Parses a sweep value: a number if it parses as one, a string otherwise.
pub fn parse_value(text: &str) -> serde_json::Value {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        return serde_json::json!(i);
    }
    if let Ok(x) = t.parse::<f64>() {
        return serde_json::json!(x);
    }
    match t {
        "true" => serde_json::json!(true),
        "false" => serde_json::json!(false),
        _ => serde_json::json!(t),
    }
}

/// Runs the config once per value of `path`, concurrently, each in its own
/// `run_<i>` directory under the output directory. Writes `sweep.json`.
pub fn sweep(
    config: &ExperimentConfig,
    path: &str,
    values: &[serde_json::Value],
    jobs: Option<usize>,
    opts: &RunOptions,
) -> Result<(ExitStatus, Vec<SweepEntry>)> {
    let mut base = config.clone();
    opts.apply(&mut base);
    let root = base.output.dir.clone();
    fs::create_dir_all(&root)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", root.display())))?;
    let mut configs = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let mut c = with_parameter(&base, path, v.clone())?;
        c.output.dir = root.join(format!("run_{i:03}"));
        configs.push(c);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let run_opts = RunOptions {
        out: None,
        seed: None,
        strict: opts.strict,
    };
    let entries: Vec<SweepEntry> = pool.install(|| {
        configs
            .into_par_iter()
            .zip(values.par_iter())
            .enumerate()
            .map(|(i, (c, v))| {
                let dir = c.output.dir.clone();
                let o = run(c, Stage::Simulate, &run_opts);
                SweepEntry {
                    run: i,
                    value: v.clone(),
                    dir,
                    status: o.status,
                    messages: o.messages,
                }
            })
            .collect()
    });
    let status = entries
        .iter()
        .fold(ExitStatus::Success, |s, e| s.worst(e.status));
    let text =
        serde_json::to_string_pretty(&serde_json::json!({ "parameter": path, "runs": entries }))
            .map_err(|e| Error::Domain(e.to_string()))?;
    fs::write(root.join("sweep.json"), text).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((status, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(dir: &Path) -> String {
        format!(
            "seed = 1\n[physical]\nmu = 0.1\nlength = 1.0\nmass = 0.5\nh_max = 1.0\n[solver]\nn = 33\nt_end = 0.05\noutput_every = 0.01\n[output]\ndir = {:?}\n",
            dir.display().to_string()
        )
    }

    #[test]
    fn explicit_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{}[initial]\nkind = \"sloshing\"\nlevel_amp = 0.01\n",
            base(dir.path())
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let o = run(c, Stage::Simulate, &RunOptions::default());
        assert_eq!(o.status, ExitStatus::Success, "{:?}", o.messages);
        assert!(dir.path().join("trajectory.csv").exists());
        assert!(dir.path().join("verification.json").exists());
    }

    #[test]
    fn assumption_h_failure_exits_with_check_failure() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{}[friction]\nmodel = \"const_abs_v\"\ncf = 0.1\n[gains]\nmode = \"suggest\"\ntheorem = \"theorem1\"\nomega = 0.4\n",
            base(dir.path())
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let o = run(c, Stage::Gains, &RunOptions::default());
        assert_eq!(o.status, ExitStatus::CheckFailure);
        assert!(
            o.messages
                .iter()
                .any(|m| m.contains("Assumption (H) not satisfied")),
            "{:?}",
            o.messages
        );
        let report = fs::read_to_string(dir.path().join("feasibility.json")).unwrap();
        assert!(report.contains("Assumption (H) not satisfied"));
    }

    #[test]
    fn explicit_theorem1_check_reports_assumption_h() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{}[friction]\nmodel = \"const_abs_v\"\ncf = 0.1\n[gains]\ntheorem = \"theorem1\"\nomega = 0.4\nr = 1e-4\n",
            base(dir.path())
        );
        let o = run(
            ExperimentConfig::from_toml(&text).unwrap(),
            Stage::Gains,
            &RunOptions::default(),
        );
        assert_eq!(o.status, ExitStatus::CheckFailure);
        let report = fs::read_to_string(dir.path().join("feasibility.json")).unwrap();
        assert!(report.contains("Assumption (H) not satisfied"));
    }

    #[test]
    fn invalid_config_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(
            &path,
            base(dir.path()).replace("h_max = 1.0", "h_max = 0.3"),
        )
        .unwrap();
        let o = run_file(&path, Stage::Simulate, &RunOptions::default());
        assert_eq!(o.status, ExitStatus::ConfigError);
        assert!(o.messages[0].contains("h_max"), "{:?}", o.messages);
    }

    #[test]
    fn status_ordering() {
        use ExitStatus::*;
        assert_eq!(Success.worst(RuntimeFailure), RuntimeFailure);
        assert_eq!(RuntimeFailure.worst(CheckFailure), CheckFailure);
        assert_eq!(ConfigError.worst(CheckFailure), ConfigError);
        assert_eq!(CheckFailure.code(), 3);
    }

    #[test]
    fn sweep_partitions_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig::from_toml(&base(dir.path())).unwrap();
        let values: Vec<_> = ["0.05", "0.1", "0.2"]
            .iter()
            .map(|v| parse_value(v))
            .collect();
        let (status, entries) =
            sweep(&c, "physical.mu", &values, Some(2), &RunOptions::default()).unwrap();
        assert_eq!(status, ExitStatus::Success);
        assert_eq!(entries.len(), 3);
        for e in &entries {
            assert!(e.dir.join("trajectory.csv").exists());
        }
        assert!(dir.path().join("sweep.json").exists());
        assert!(with_parameter(&c, "physical.nope", parse_value("1")).is_err());
        assert!(with_parameter(&c, "friction.c", parse_value("1")).is_err());
    }
}
