//! Run configuration, pipelines and artifact export for the command line.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::geometry::{self, zoo, Body, Shape};
use crate::penalty::{self, PenaltyParams};
use crate::saddle::{self, seeds, SolverOptions};
use crate::trajectory::{self, BilliardTrajectory, TrajectoryKind};
use crate::variational::{self, BodyEntry, MuStrategy, Relations, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Shoot,
    Brake,
    Verify,
    Inequalities,
    Geom,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Shoot => "shoot",
            Mode::Brake => "brake",
            Mode::Verify => "verify",
            Mode::Inequalities => "inequalities",
            Mode::Geom => "geom",
        }
    }
}

/// Geometric `ε` schedule `start·ratioᵏ`, `k = 0..steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub start: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            start: 0.1,
            ratio: 0.25,
            steps: 13,
        }
    }
}

impl std::str::FromStr for ScheduleSpec {
    type Err = Error;

    /// Parses `start:ratio:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("schedule must look like start:ratio:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(ScheduleSpec {
            start: parts[0].parse().map_err(|_| bad())?,
            ratio: parts[1].parse().map_err(|_| bad())?,
            steps: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

impl ScheduleSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::Config("empty epsilon schedule".into()));
        }
        saddle::geometric_schedule(self.start, self.ratio, self.steps).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    /// Zoo names or paths to JSON body files.
    pub bodies: Vec<String>,
    pub out: PathBuf,
    pub nodes: usize,
    /// Defaults to the per-body rule in [`penalty::default_delta`].
    pub delta: Option<f64>,
    pub schedule: ScheduleSpec,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to the seed curve.
    pub perturbation: f64,
    /// Seed chords are pulled toward their midpoint by this factor.
    pub shrink: f64,
    /// Bounce count and rotation number for shooting.
    pub k: usize,
    pub j: usize,
    /// Trajectory file for `verify`.
    pub trajectory: Option<PathBuf>,
    /// Reflection tolerance for `verify`.
    pub tolerance: f64,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Geom,
            bodies: vec!["disc".into()],
            out: PathBuf::from("out"),
            nodes: 256,
            delta: None,
            schedule: ScheduleSpec::default(),
            seed: 0,
            perturbation: 0.0,
            shrink: 0.9,
            k: 3,
            j: 1,
            trajectory: None,
            tolerance: 1e-3,
            svg: false,
        }
    }
}

/// A file holding several runs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub runs: Vec<RunConfig>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The runs behind the acceptance suite, writing below `out`.
    pub fn acceptance(out: &Path) -> Self {
        let base = RunConfig {
            out: out.to_path_buf(),
            ..RunConfig::default()
        };
        let mut runs = vec![
            RunConfig {
                mode: Mode::Solve,
                bodies: vec!["disc".into(), "ellipse".into()],
                svg: true,
                ..base.clone()
            },
            RunConfig {
                mode: Mode::Brake,
                bodies: vec!["disc".into()],
                svg: true,
                ..base.clone()
            },
        ];
        for (k, j) in [(2, 1), (3, 1), (4, 1), (5, 1), (5, 2)] {
            runs.push(RunConfig {
                mode: Mode::Shoot,
                k,
                j,
                ..base.clone()
            });
        }
        runs.push(RunConfig {
            mode: Mode::Inequalities,
            bodies: zoo::planar().into_iter().map(|(n, _)| n.to_string()).collect(),
            ..base.clone()
        });
        runs.push(RunConfig {
            mode: Mode::Geom,
            bodies: zoo::planar().into_iter().map(|(n, _)| n.to_string()).collect(),
            ..base
        });
        SuiteConfig { runs }
    }
}

/// Exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    CheckFailed,
    ConfigError,
    SolverFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::CheckFailed => 1,
            Status::ConfigError => 2,
            Status::SolverFailure => 3,
        }
    }

    pub fn of_error(err: &Error) -> Status {
        match err {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => Status::ConfigError,
            Error::IncompleteReport(_) => Status::CheckFailed,
            _ => Status::SolverFailure,
        }
    }

    /// The most severe of two statuses.
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Pass => 0,
            Status::CheckFailed => 1,
            Status::SolverFailure => 2,
            Status::ConfigError => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// One checked or reported quantity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub passes: Option<bool>,
    pub note: String,
}

impl SummaryRow {
    fn info(quantity: impl Into<String>, value: f64) -> Self {
        SummaryRow {
            quantity: quantity.into(),
            value,
            reference: None,
            tolerance: None,
            passes: None,
            note: String::new(),
        }
    }

    fn near(quantity: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        SummaryRow {
            reference: Some(reference),
            tolerance: Some(tolerance),
            passes: Some((value - reference).abs() <= tolerance),
            ..SummaryRow::info(quantity, value)
        }
    }

    fn at_most(quantity: impl Into<String>, value: f64, bound: f64) -> Self {
        SummaryRow {
            reference: Some(bound),
            passes: Some(value <= bound),
            note: "upper bound".into(),
            ..SummaryRow::info(quantity, value)
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub label: String,
    pub seed: u64,
    pub status: Status,
    pub rows: Vec<SummaryRow>,
    pub error: Option<String>,
}

/// Resolves a zoo name or a JSON body file.
pub fn load_body(spec: &str) -> Result<(String, Body)> {
    if let Some(body) = zoo::by_name(spec) {
        return Ok((spec.to_string(), body));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!("{spec:?} is neither a zoo body nor an existing file")));
    }
    let text = fs::read_to_string(path)?;
    let body: Body = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
    let label = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((label, body))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn ball_radius(body: &Body) -> Option<f64> {
    match body.shape() {
        Shape::Ball { radius, .. } => Some(*radius),
        _ => None,
    }
}

fn finish(dir: &Path, config: &RunConfig, label: String, rows: Vec<SummaryRow>) -> Result<RunSummary> {
    let failed = rows.iter().any(|r| r.passes == Some(false));
    let summary = RunSummary {
        mode: config.mode,
        label,
        seed: config.seed,
        status: if failed { Status::CheckFailed } else { Status::Pass },
        rows,
        error: None,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn penalty_pipeline(config: &RunConfig, name: &str, body: &Body, dir: &Path) -> Result<Vec<SummaryRow>> {
    let brake = config.mode == Mode::Brake;
    let schedule = config.schedule.values()?;
    let radius = geometry::inradius(body)?.radius;
    let delta = match config.delta {
        Some(d) => d,
        None => penalty::default_delta(body)?,
    };
    PenaltyParams::new(delta, schedule[0])?
        .validate_for(body, radius)
        .map_err(|e| Error::Config(e.to_string()))?;
    let chord = exact::bouncing_ball_orbits(body)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoCandidates(format!("no double-normal chord on {name}")))?;
    let mut seed = if brake {
        seeds::brake_chord(&chord.start, &chord.end, config.nodes, config.shrink)?
    } else {
        seeds::chord_loop(&chord.start, &chord.end, config.nodes, config.shrink)?
    };
    if config.perturbation > 0.0 {
        seed = seeds::perturbed(&seed, config.perturbation, config.seed)?;
    }
    let trace = saddle::continue_to_zero(&seed, body, delta, &schedule, &SolverOptions::default())?;
    let mut lines = fs::File::create(dir.join("trace.jsonl"))?;
    for step in &trace.steps {
        writeln!(lines, "{}", serde_json::to_string(step)?)?;
    }
    let last = &trace.last().record;
    last.curve.write_csv(fs::File::create(dir.join("curve.csv"))?)?;
    let bounces = trajectory::detect_bounces(&trace, body, &Default::default());
    let bounces = match (bounces, brake) {
        (Err(Error::NoBounces), true) => Vec::new(),
        (b, _) => b?,
    };
    let traj = trajectory::assemble(last, &bounces, body, &Default::default())?;
    let report = trajectory::verify_reflection(&traj, body, variational::PENALTY_REFLECTION_TOLERANCE)?;
    write_json(&dir.join("trajectory.json"), &traj)?;
    write_json(&dir.join("reflection.json"), &report)?;
    if config.svg && body.dim() == 2 {
        fs::write(dir.join("trajectory.svg"), trajectory::render_svg(body, &traj)?)?;
    }
    let n = body.dim() as f64;
    let chord_length = (&chord.end - &chord.start).norm();
    let (length_name, reference) = if brake {
        ("mu_B", chord_length)
    } else {
        ("mu_P", 2.0 * chord_length)
    };
    let max_identity = trace.records().map(|r| r.identity_defect()).fold(0.0, f64::max);
    let bounce_limit = if brake { n - 1.0 } else { n + 1.0 };
    let mut rows = vec![
        SummaryRow::near(length_name, traj.total_length, reference, 1e-2).with_note("double-normal chord"),
        SummaryRow::at_most(
            "potential_integral / energy",
            last.potential_integral / last.energy_value,
            1e-3,
        ),
        SummaryRow::at_most("identity defect (max over steps)", max_identity, 1e-8),
        SummaryRow::at_most("bounces", bounces.len() as f64, bounce_limit),
        SummaryRow::at_most("reflection residual", report.max_residual, report.tolerance),
        SummaryRow::at_most("straightness", traj.straightness, 1e-2),
        SummaryRow::info("final epsilon", last.epsilon),
        SummaryRow::info("morse index", last.morse_index as f64),
        SummaryRow::info("near-zero eigenvalues", last.near_zero as f64),
    ];
    if brake {
        rows.push(SummaryRow::at_most(length_name, traj.total_length, 2.0 * n * radius).with_note("2n·inradius"));
    } else {
        rows.push(SummaryRow::at_most("-mu_P", -traj.total_length, -4.0 * radius + 1e-3).with_note("4·inradius"));
    }
    Ok(rows)
}

fn shoot_pipeline(config: &RunConfig, body: &Body, dir: &Path) -> Result<Vec<SummaryRow>> {
    let seed = exact::star_seed(config.k, config.j, 0.1);
    let poly = exact::shoot_periodic(body, config.k, &seed)?;
    let traj = BilliardTrajectory::from_polygon(&poly)?;
    let report = trajectory::verify_reflection(&traj, body, variational::EXACT_REFLECTION_TOLERANCE)?;
    let membership = variational::in_p_plus(&poly.points, body)?;
    write_json(&dir.join("polygon.json"), &poly)?;
    write_json(&dir.join("trajectory.json"), &traj)?;
    write_json(&dir.join("reflection.json"), &report)?;
    if config.svg && body.dim() == 2 {
        fs::write(dir.join("trajectory.svg"), trajectory::render_svg(body, &traj)?)?;
    }
    let mut rows = vec![
        SummaryRow::at_most("reflection residual", report.max_residual, report.tolerance),
        SummaryRow {
            passes: Some(membership.member),
            note: format!("{} directions", membership.directions),
            ..SummaryRow::info("no translate fits inside (margin)", membership.margin)
        },
    ];
    rows.push(match ball_radius(body) {
        Some(r) => SummaryRow::near("length", poly.length(), variational::mu_p_ball(r, config.k, config.j)?, 1e-8)
            .with_note("2kr·sin(πj/k)"),
        None => SummaryRow::info("length", poly.length()),
    });
    Ok(rows)
}

fn verify_pipeline(config: &RunConfig, body: &Body, dir: &Path) -> Result<Vec<SummaryRow>> {
    let path = config
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::Config("verify needs a trajectory file".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let traj: BilliardTrajectory = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let report = trajectory::verify_reflection(&traj, body, config.tolerance)?;
    write_json(&dir.join("reflection.json"), &report)?;
    let mut rows = vec![SummaryRow::at_most("reflection residual", report.max_residual, config.tolerance)];
    if report.grazing {
        rows.push(SummaryRow {
            passes: Some(false),
            ..SummaryRow::info("grazing bounce", 1.0)
        });
    }
    if traj.kind == TrajectoryKind::Periodic {
        let normals = traj.bounce_normals(body)?;
        let cert = variational::p_plus_certificate(&traj.bounce_points, body, &normals)?;
        write_json(&dir.join("certificate.json"), &cert)?;
        rows.push(SummaryRow {
            passes: Some(cert.certificate().is_some()),
            ..SummaryRow::info("support certificate from bounce normals", normals.len() as f64)
        });
    }
    Ok(rows)
}

fn geom_rows(body: &Body) -> Result<Vec<SummaryRow>> {
    let r = geometry::inradius(body)?;
    let w = geometry::width(body)?;
    let d = geometry::diameter_direction(body)?;
    Ok(vec![
        SummaryRow::info("inradius", r.radius),
        SummaryRow::info("width", w.width),
        SummaryRow::info("diameter", d.width),
        SummaryRow::info("min curvature radius", body.min_curvature_radius()),
        SummaryRow::info("default delta", penalty::default_delta(body)?),
        SummaryRow::at_most("2·inradius − width", 2.0 * r.radius - w.width, 1e-7),
    ])
}

/// Detects Minkowski-sum triples and nested pairs among the entries from
/// their support functions.
pub fn detect_relations(entries: &[BodyEntry]) -> Result<Relations> {
    let dirs: Vec<geometry::Point> = (0..360)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 360.0;
            geometry::point(&[t.cos(), t.sin()])
        })
        .collect();
    let supports: Vec<Option<Vec<f64>>> = entries
        .iter()
        .map(|e| {
            (e.body.dim() == 2)
                .then(|| dirs.iter().map(|u| e.body.support(u)).collect::<Result<Vec<f64>>>())
                .transpose()
        })
        .collect::<Result<_>>()?;
    let mut rel = Relations::default();
    let m = entries.len();
    for a in 0..m {
        for b in 0..m {
            let (Some(ha), Some(hb)) = (&supports[a], &supports[b]) else {
                continue;
            };
            if a != b && ha.iter().zip(hb).all(|(x, y)| *x <= *y + 1e-9) && ha != hb {
                rel.nested.push((a, b));
            }
            if a >= b {
                continue;
            }
            for (s, hs) in supports.iter().enumerate() {
                let Some(hs) = hs else { continue };
                if s != a && s != b && hs.iter().zip(ha.iter().zip(hb)).all(|(z, (x, y))| (z - x - y).abs() <= 1e-9 * (1.0 + z.abs())) {
                    rel.sums.push((a, b, s));
                }
            }
        }
    }
    Ok(rel)
}

fn inequality_pipeline(bodies: &[(String, Body)], dir: &Path) -> Result<Vec<SummaryRow>> {
    let strategy = MuStrategy::default();
    let entries = bodies
        .par_iter()
        .map(|(name, body)| BodyEntry::build(name, body.clone(), &strategy))
        .collect::<Result<Vec<_>>>()?;
    let relations = detect_relations(&entries)?;
    let reports = variational::check_inequalities(&entries, &relations, &Default::default())?;
    variational::write_reports_csv(&reports, fs::File::create(dir.join("inequalities.csv"))?)?;
    write_json(&dir.join("inequalities.json"), &reports)?;
    write_json(&dir.join("estimates.json"), &entries)?;
    let mut rows: Vec<SummaryRow> = entries
        .iter()
        .filter_map(|e| e.mu_p.as_ref().map(|m| (e, m)))
        .map(|(e, m)| SummaryRow::info(format!("mu_P {}", e.name), m.value).with_note(m.method.to_string()))
        .collect();
    rows.extend(reports.iter().map(|r| SummaryRow {
        quantity: format!("{} [{}]", r.name, r.subject),
        value: r.slack,
        reference: Some(0.0),
        tolerance: None,
        passes: Some(r.verdict != Verdict::Fails && r.witness_ok != Some(false)),
        note: r.verdict.to_string(),
    }));
    Ok(rows)
}

fn run_inner(config: &RunConfig) -> Result<Vec<RunSummary>> {
    if config.bodies.is_empty() {
        return Err(Error::Config("no bodies given".into()));
    }
    if config.nodes < crate::loopspace::MIN_NODES {
        return Err(Error::Config(format!("need at least {} nodes", crate::loopspace::MIN_NODES)));
    }
    if matches!(config.mode, Mode::Solve | Mode::Brake) {
        config.schedule.values()?;
    }
    let bodies = config.bodies.iter().map(|b| load_body(b)).collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&config.out)?;
    if config.mode == Mode::Inequalities {
        let label = format!("inequalities-{}", bodies.len());
        let dir = config.out.join(&label);
        fs::create_dir_all(&dir)?;
        return Ok(vec![run_guarded(config, &dir, label, || inequality_pipeline(&bodies, &dir))?]);
    }
    bodies
        .par_iter()
        .map(|(name, body)| {
            let label = match config.mode {
                Mode::Shoot => format!("shoot-{}-k{}-j{}", sanitize(name), config.k, config.j),
                m => format!("{}-{}", m.as_str(), sanitize(name)),
            };
            let dir = config.out.join(&label);
            fs::create_dir_all(&dir)?;
            run_guarded(config, &dir, label, || match config.mode {
                Mode::Solve | Mode::Brake => penalty_pipeline(config, name, body, &dir),
                Mode::Shoot => shoot_pipeline(config, body, &dir),
                Mode::Verify => verify_pipeline(config, body, &dir),
                Mode::Geom => geom_rows(body),
                Mode::Inequalities => unreachable!("handled above"),
            })
        })
        .collect()
}

/// Runs a pipeline; solver errors become a failed summary with diagnostics.
fn run_guarded(
    config: &RunConfig,
    dir: &Path,
    label: String,
    pipeline: impl FnOnce() -> Result<Vec<SummaryRow>>,
) -> Result<RunSummary> {
    match pipeline() {
        Ok(rows) => finish(dir, config, label, rows),
        Err(e) if Status::of_error(&e) == Status::ConfigError => Err(e),
        Err(e) => {
            let summary = RunSummary {
                mode: config.mode,
                label,
                seed: config.seed,
                status: Status::of_error(&e),
                rows: Vec::new(),
                error: Some(e.to_string()),
            };
            write_json(&dir.join("summary.json"), &summary)?;
            Ok(summary)
        }
    }
}

/// Executes one run and returns its overall status with the summaries.
pub fn run(config: &RunConfig) -> (Status, Vec<RunSummary>) {
    match run_inner(config) {
        Ok(summaries) => {
            let status = summaries.iter().fold(Status::Pass, |s, r| s.worst(r.status));
            (status, summaries)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (Status::of_error(&e), Vec::new())
        }
    }
}

/// Executes every run of a suite in order.
pub fn run_suite(suite: &SuiteConfig) -> (Status, Vec<RunSummary>) {
    let mut status = Status::Pass;
    let mut all = Vec::new();
    for config in &suite.runs {
        let (s, summaries) = run(config);
        status = status.worst(s);
        all.extend(summaries);
    }
    (status, all)
}

/// Human-readable tables from every `summary.json` below `dir`.
pub fn report(dir: &Path) -> Result<String> {
    let mut paths = Vec::new();
    if dir.join("summary.json").exists() {
        paths.push(dir.join("summary.json"));
    }
    if dir.is_dir() {
        for entry in fs::read_dir(dir)? {
            let p = entry?.path().join("summary.json");
            if p.exists() {
                paths.push(p);
            }
        }
    }
    if paths.is_empty() {
        return Err(Error::IncompleteReport(format!("no run summaries below {}", dir.display())));
    }
    paths.sort();
    let mut out = String::new();
    for p in paths {
        let summary: RunSummary = serde_json::from_str(&fs::read_to_string(&p)?)?;
        let _ = writeln!(out, "## {} ({}, seed {}): {:?}", summary.label, summary.mode.as_str(), summary.seed, summary.status);
        if let Some(e) = &summary.error {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(out, "| quantity | value | reference | tolerance | status | note |");
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for r in &summary.rows {
            let fmt = |x: Option<f64>| x.map_or("".to_string(), |v| format!("{v:.6}"));
            let status = match r.passes {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "",
            };
            let _ = writeln!(
                out,
                "| {} | {:.6} | {} | {} | {} | {} |",
                r.quantity,
                r.value,
                fmt(r.reference),
                r.tolerance.map_or("".to_string(), |t| format!("{t:.0e}")),
                status,
                r.note
            );
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_parsing() {
        let s: ScheduleSpec = "0.1:0.5:13".parse().unwrap();
        assert_eq!(s.values().unwrap().len(), 13);
        assert!("0.1:0.5".parse::<ScheduleSpec>().is_err());
        let empty: ScheduleSpec = "0.1:0.5:0".parse().unwrap();
        assert!(matches!(empty.values(), Err(Error::Config(_))));
    }

    #[test]
    fn empty_schedule_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            mode: Mode::Solve,
            out: dir.path().to_path_buf(),
            schedule: ScheduleSpec {
                start: 0.1,
                ratio: 0.5,
                steps: 0,
            },
            ..RunConfig::default()
        };
        assert_eq!(run(&config).0, Status::ConfigError);
    }

    #[test]
    fn shoot_disc_triangle() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            mode: Mode::Shoot,
            out: dir.path().to_path_buf(),
            k: 3,
            j: 1,
            ..RunConfig::default()
        };
        let (status, summaries) = run(&config);
        assert_eq!(status, Status::Pass);
        let length = summaries[0].rows.iter().find(|r| r.quantity == "length").unwrap();
        assert!((length.value - 27f64.sqrt()).abs() < 1e-8);
        assert!(report(dir.path()).unwrap().contains("shoot-disc-k3-j1"));
    }

    #[test]
    fn empty_directory_is_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(dir.path()), Err(Error::IncompleteReport(_))));
    }

    #[test]
    fn relations_found_from_supports() {
        let strategy = MuStrategy::default();
        let entries: Vec<BodyEntry> = ["disc", "ellipse", "ellipse+disc"]
            .iter()
            .map(|n| BodyEntry::build(n, zoo::by_name(n).unwrap(), &strategy).unwrap())
            .collect();
        let rel = detect_relations(&entries).unwrap();
        assert_eq!(rel.sums, vec![(0, 1, 2)]);
        assert!(rel.nested.contains(&(0, 1)) && rel.nested.contains(&(1, 2)));
    }
}
