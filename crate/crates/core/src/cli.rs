//! Command-line front end.
//!
//! Every subcommand reads a parameter file (`--params`, flat JSON) or a
//! scenario file (`--scenario`). Single tables go to stdout or `--out`;
//! subcommands producing several artifacts write them into `--out-dir` and
//! print a JSON summary on stdout.
//!
//! Exit codes: 0 success, 1 malformed input, 2 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{self, QssaDiagnostics};
use crate::error::{Error, Result};
use crate::integrate::{self, CompareMode, IntegratorConfig, Trajectory};
use crate::io;
use crate::manifold::{self, ManifoldCurve};
use crate::model::{self, ParameterFamily, RateParameters, State};
use crate::phase_plane;
use crate::poincare;
use crate::reductions::{self, ReducedKind};

/// Everything a run needs besides the subcommand options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: RateParameters,
    #[serde(default = "origin")]
    pub initial: State,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub grid_smax: Option<f64>,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub family: Option<ParameterFamily>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn origin() -> State {
    State::new(0.0, 0.0)
}

fn default_t_end() -> f64 {
    50.0
}

fn default_eps_list() -> Vec<f64> {
    vec![0.02, 0.04, 0.08]
}

fn default_seed() -> u64 {
    42
}

impl Scenario {
    pub fn new(params: RateParameters) -> Self {
        Self {
            params,
            initial: origin(),
            t_end: default_t_end(),
            grid_smax: None,
            eps_list: default_eps_list(),
            family: None,
            seed: default_seed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end = {} must be positive", self.t_end)));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::InvalidInput(format!("eps = {e} outside (0, 1]")));
        }
        if let Some(m) = self.grid_smax.filter(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidInput(format!("grid_smax = {m} must be positive")));
        }
        if !(self.initial.s.is_finite() && self.initial.c.is_finite()) {
            return Err(Error::InvalidInput("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Parser, Debug)]
#[command(name = "qssa-lab", version, about = "Open Michaelis-Menten reaction: simulation, reductions and phase-plane analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Rate parameters as flat JSON.
    #[arg(long, conflicts_with = "scenario")]
    params: Option<PathBuf>,
    /// Scenario JSON (params plus run settings).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
}

impl TolArgs {
    fn config(&self) -> Result<IntegratorConfig> {
        let cfg = IntegratorConfig { max_steps: self.max_steps, ..IntegratorConfig::with_tolerances(self.rtol, self.atol) };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the full model and, optionally, reduced equations.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Output times, uniform on [0, t_end].
        #[arg(long, default_value_t = 501)]
        samples: usize,
        /// Reduced model to integrate alongside (repeatable).
        #[arg(long = "reduction")]
        reductions: Vec<ReducedKind>,
        /// Add pointwise and sup-norm errors in s for every reduction.
        #[arg(long)]
        compare: bool,
        /// Time window `a:b` for the sup-norm.
        #[arg(long)]
        window: Option<String>,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slow manifold by fixed-point iteration of the invariance equation.
    Manifold {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        smax: Option<f64>,
        #[arg(long, default_value_t = manifold::DEFAULT_GRID_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// Emit one step from the vertical initial function instead.
        #[arg(long)]
        vertical: bool,
        /// TFPV family for an error study along its ray (uses the scenario eps list).
        #[arg(long)]
        family: Option<ParameterFamily>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Reduced right-hand sides and manifolds on a grid.
    Reduce {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long = "kind")]
        kinds: Vec<ReducedKind>,
        #[arg(long)]
        smax: Option<f64>,
        #[arg(long, default_value_t = 301)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Small parameters and validity diagnostics as JSON.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nullclines, wedge inflow check and divergence sampling.
    Phase {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        smax: Option<f64>,
        #[arg(long, default_value_t = 501)]
        points: usize,
        #[arg(long, default_value_t = 1000)]
        wedge_samples: usize,
        #[arg(long, default_value_t = 1000)]
        divergence_samples: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Stationary points at infinity and the distinguished trajectory.
    Poincare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = poincare::DEFAULT_OFFSET)]
        offset: f64,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Diagnostics over the Cartesian product of parameter axes.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        /// `name=start:stop:step`, name one of k0, eT, k1, km1, k2 (repeatable).
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, env = "QSSA_LAB_JOBS")]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Datasets behind the standard figures.
    Figures {
        which: FigureId,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FigureId {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    All,
}

/// Run with process arguments (`argv[0]` is the program name).
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run_cli`], writing to the given streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn load(input: &InputArgs) -> Result<Scenario> {
    match (&input.params, &input.scenario) {
        (Some(p), None) => Ok(Scenario::new(RateParameters::from_json(&read_file(p)?)?)),
        (None, Some(s)) => Scenario::from_json(&read_file(s)?),
        _ => Err(Error::InvalidInput("exactly one of --params or --scenario is required".into())),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.files.push(path.display().to_string());
        Ok(())
    }
}

fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidInput(format!("expected a:b, got '{text}'"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(b > a) {
        return Err(bad());
    }
    Ok((a, b))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {n}")));
    }
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate { input, s0, c0, t_end, samples, reductions, compare, window, tol, out: path } => {
            let mut sc = load(&input)?;
            if let Some(s0) = s0 {
                sc.initial.s = s0;
            }
            if let Some(c0) = c0 {
                sc.initial.c = c0;
            }
            if let Some(t) = t_end {
                sc.t_end = t;
            }
            sc.validate()?;
            let window = window.as_deref().map(parse_range).transpose()?;
            let text = simulate_table(&sc, samples, &reductions, compare, window, &tol.config()?)?;
            emit(out, path.as_deref(), &text)
        }
        Command::Manifold { input, smax, points, tol, max_iter, vertical, family, out_dir } => {
            let sc = load(&input)?;
            let summary = manifold_run(&sc, smax, points, tol, max_iter, vertical, family.or(sc.family), &out_dir)?;
            emit(out, None, &to_json_pretty(&summary))
        }
        Command::Reduce { input, kinds, smax, points, out: path } => {
            let sc = load(&input)?;
            let text = reduce_table(&sc, &kinds, smax, points)?;
            emit(out, path.as_deref(), &text)
        }
        Command::Diagnose { input, out: path } => {
            let sc = load(&input)?;
            let d = diagnostics::qssa_diagnostics(&sc.params)?;
            emit(out, path.as_deref(), &to_json_pretty(&d))
        }
        Command::Phase { input, smax, points, wedge_samples, divergence_samples, out_dir } => {
            let sc = load(&input)?;
            let mut dir = OutDir::new(&out_dir)?;
            phase_run(&sc, smax, points, wedge_samples, divergence_samples, &mut dir, "")?;
            emit(out, None, &to_json_pretty(&json!({ "files": dir.files })))
        }
        Command::Poincare { input, offset, tol, out_dir } => {
            let sc = load(&input)?;
            let mut dir = OutDir::new(&out_dir)?;
            let summary = poincare_run(&sc.params, offset, &tol.config()?, &mut dir)?;
            emit(out, None, &to_json_pretty(&summary))
        }
        Command::Sweep { input, axes, jobs, out: path } => {
            let sc = load(&input)?;
            let text = sweep_table(&sc.params, &axes, jobs)?;
            emit(out, path.as_deref(), &text)
        }
        Command::Figures { which, out_dir } => {
            let mut dir = OutDir::new(&out_dir)?;
            let all = which == FigureId::All;
            if all || which == FigureId::Fig1a {
                figure_1(&mut dir, "fig1a", 2.5, 50.0)?;
            }
            if all || which == FigureId::Fig1b {
                figure_1(&mut dir, "fig1b", 3.5, 30.0)?;
            }
            if all || which == FigureId::Fig2 {
                figure_2(&mut dir)?;
            }
            if all || which == FigureId::Fig3 {
                figure_3(&mut dir)?;
            }
            emit(out, None, &to_json_pretty(&json!({ "files": dir.files })))
        }
    }
}

fn integrate_reduced(
    red: &reductions::ReducedModel,
    s0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<1>> {
    integrate::integrate(|_, x: &[f64; 1]| [red.rhs_s(x[0])], [s0], (0.0, t_end), cfg, None)?.require_complete()
}

fn simulate_table(
    sc: &Scenario,
    samples: usize,
    kinds: &[ReducedKind],
    compare: bool,
    window: Option<(f64, f64)>,
    cfg: &IntegratorConfig,
) -> Result<String> {
    let p = &sc.params;
    let grid = linspace(0.0, sc.t_end, samples)?;
    let cfg = IntegratorConfig { dense_grid: Some(grid.clone()), ..cfg.clone() };
    let full = integrate::simulate(p, sc.initial, sc.t_end, &cfg, None)?.require_complete()?;

    let mut header: Vec<String> = vec!["t".into(), "s".into(), "c".into()];
    let mut columns: Vec<Vec<f64>> = vec![full.times.clone(), full.component(0), full.component(1)];
    for kind in kinds {
        let red = reductions::reduced_model(p, *kind)?;
        let s0 = red.map_initial(sc.initial.s, sc.initial.c)?;
        let traj = integrate_reduced(&red, s0, sc.t_end, &cfg)?;
        let s_red = traj.component(0);
        header.push(format!("s_{kind}"));
        header.push(format!("c_{kind}"));
        columns.push(s_red.clone());
        columns.push(s_red.iter().map(|s| red.manifold_c(*s)).collect());
        if compare {
            let sup = integrate::compare_trajectories(&full, &traj, CompareMode::SupNormS, window)?;
            header.push(format!("err_{kind}"));
            header.push(format!("sup_err_{kind}"));
            columns.push(full.states.iter().zip(&s_red).map(|(x, s)| (x[0] - s).abs()).collect());
            columns.push(vec![sup; s_red.len()]);
        }
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..full.len()).map(|i| columns.iter().map(|col| col[i]).collect());
    Ok(io::write_table(&refs, rows))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifoldSummary {
    files: Vec<String>,
    iterations: usize,
    converged: bool,
    sup_deltas: Vec<f64>,
    anchor_s: Option<f64>,
    converged_points: usize,
    residual_sup: Option<f64>,
    axis_crossing: Option<f64>,
    ray: Vec<manifold::RayPoint>,
}

fn s_max_for(sc: &Scenario, smax: Option<f64>) -> Result<f64> {
    match smax.or(sc.grid_smax) {
        Some(m) if m > 0.0 && m.is_finite() => Ok(m),
        Some(m) => Err(Error::InvalidInput(format!("smax = {m} must be positive"))),
        None => manifold::default_s_max(&sc.params),
    }
}

#[allow(clippy::too_many_arguments)]
fn manifold_run(
    sc: &Scenario,
    smax: Option<f64>,
    points: usize,
    tol: f64,
    max_iter: usize,
    vertical: bool,
    family: Option<ParameterFamily>,
    out_dir: &Path,
) -> Result<ManifoldSummary> {
    let p = &sc.params;
    let grid = manifold::uniform_grid(s_max_for(sc, smax)?, points)?;
    let mut dir = OutDir::new(out_dir)?;
    let mut summary = ManifoldSummary {
        files: Vec::new(),
        iterations: 0,
        converged: false,
        sup_deltas: Vec::new(),
        anchor_s: None,
        converged_points: 0,
        residual_sup: None,
        axis_crossing: None,
        ray: Vec::new(),
    };
    let curve: ManifoldCurve = if vertical {
        summary.iterations = 1;
        manifold::fraser_step_vertical(p, &grid)?.with_residual(p)
    } else {
        let (curve, report) = manifold::slow_manifold(p, &grid, tol, max_iter)?;
        summary.iterations = report.iterates.len() - 1;
        summary.converged = report.converged;
        summary.sup_deltas = report.sup_deltas.clone();
        summary.anchor_s = report.anchor_s;
        summary.converged_points = report.fraser_converged.iter().filter(|b| **b).count();
        curve.with_residual(p)
    };
    summary.residual_sup = curve.residual_sup;
    summary.axis_crossing = curve.axis_crossing();
    dir.write("manifold.csv", &curve.to_csv())?;

    if let Some(family) = family {
        if !family.is_tfpv() {
            return Err(Error::InvalidInput(format!("{family:?} is not a TFPV family")));
        }
        summary.ray = sc
            .eps_list
            .iter()
            .map(|eps| manifold::ray_errors(p, family, *eps, &grid, tol, max_iter))
            .collect::<Result<_>>()?;
        let rows = summary.ray.iter().map(|r| vec![r.eps, r.sup_leading, r.sup_series]);
        dir.write("ray.csv", &io::write_table(&["eps", "sup_leading", "sup_series"], rows))?;
    }
    summary.files = dir.files.clone();
    dir.write("manifold_report.json", &to_json_pretty(&summary))?;
    summary.files = dir.files;
    Ok(summary)
}

fn reduce_table(sc: &Scenario, kinds: &[ReducedKind], smax: Option<f64>, points: usize) -> Result<String> {
    let p = &sc.params;
    let models: Vec<_> = if kinds.is_empty() {
        ReducedKind::ALL.iter().filter_map(|k| reductions::reduced_model(p, *k).ok()).collect()
    } else {
        kinds.iter().map(|k| reductions::reduced_model(p, *k)).collect::<Result<_>>()?
    };
    let grid = linspace(0.0, s_max_for(sc, smax)?, points)?;
    let mut header = vec!["s".to_string()];
    for m in &models {
        header.push(format!("ds_{}", m.kind));
        header.push(format!("c_{}", m.kind));
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.iter().map(|s| {
        let mut row = vec![*s];
        for m in &models {
            row.push(m.rhs_s(*s));
            row.push(m.manifold_c(*s));
        }
        row
    });
    Ok(io::write_table(&refs, rows))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DivergenceCheck {
    seed: u64,
    points: usize,
    max_divergence: f64,
    all_negative: bool,
}

/// Largest divergence at `n` seeded points of `[0, s_max] x [0, eT]`.
fn divergence_check(p: &RateParameters, s_max: f64, n: usize, seed: u64) -> DivergenceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_divergence = f64::NEG_INFINITY;
    for _ in 0..n {
        let x = State::new(rng.gen_range(0.0..=s_max), rng.gen_range(0.0..=p.e_t));
        max_divergence = max_divergence.max(phase_plane::divergence(p, x));
    }
    DivergenceCheck { seed, points: n, max_divergence, all_negative: max_divergence < 0.0 }
}

fn phase_run(
    sc: &Scenario,
    smax: Option<f64>,
    points: usize,
    wedge_samples: usize,
    divergence_samples: usize,
    dir: &mut OutDir,
    prefix: &str,
) -> Result<()> {
    let p = &sc.params;
    let nc = phase_plane::nullclines(p)?;
    let s_max = s_max_for(sc, smax)?;
    let grid = linspace(0.0, s_max, points)?;
    let rows = grid.iter().map(|s| vec![*s, nc.n_c(*s), nc.n_s(*s)]);
    dir.write(&format!("{prefix}nullclines.csv"), &io::write_table(&["s", "Nc", "Ns"], rows))?;

    let wedge = phase_plane::wedge_inflow_check(p, wedge_samples, phase_plane::default_wedge_range(p)?)?;
    let report = json!({
        "params": p,
        "s_tilde": nc.s_tilde,
        "equilibrium": model::equilibrium(p)?,
        "wedge": wedge,
        "divergence": divergence_check(p, s_max, divergence_samples, sc.seed),
    });
    dir.write(&format!("{prefix}wedge.json"), &to_json_pretty(&report))
}

fn poincare_run(p: &RateParameters, offset: f64, cfg: &IntegratorConfig, dir: &mut OutDir) -> Result<serde_json::Value> {
    let class = poincare::classify_infinity(p)?;
    dir.write("infinity.json", &to_json_pretty(&class))?;
    let mut summary = json!({
        "p1": class.p1.label,
        "p2": class.p2.label,
        "p3": class.p3.label,
        "p2_signs_disagree": class.p2_sign_check.signs_disagree,
    });
    match poincare::distinguished_trajectory(p, cfg, offset) {
        Ok(d) => {
            dir.write("distinguished.csv", &d.plane.to_csv(&["t", "s", "c"]))?;
            dir.write("distinguished_chart.csv", &d.chart.to_csv(&["t", "x2", "x3"]))?;
            summary["case"] = json!(d.case);
            summary["endpoint"] = json!(d.endpoint);
            summary["tail_max_deviation"] = json!(d.tail_max_deviation);
        }
        Err(Error::DegenerateFamily(msg)) => {
            summary["distinguished"] = json!(format!("skipped: {msg}"));
        }
        Err(e) => return Err(e),
    }
    summary["files"] = json!(dir.files);
    Ok(summary)
}

const AXIS_NAMES: [&str; 5] = ["k0", "eT", "k1", "km1", "k2"];

fn parse_axis(text: &str) -> Result<(usize, Vec<f64>)> {
    let bad = |why: &str| Error::InvalidInput(format!("axis '{text}': {why}"));
    let (name, range) = text.split_once('=').ok_or_else(|| bad("expected name=start:stop:step"))?;
    let idx = AXIS_NAMES.iter().position(|n| *n == name.trim()).ok_or_else(|| bad("unknown parameter"))?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("non-numeric bound")))
        .collect::<Result<_>>()?;
    let [a, b, step] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    if !(step > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
        return Err(bad("need step > 0 and stop >= start"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        return Err(bad("too many points"));
    }
    Ok((idx, (0..n).map(|i| a + step * i as f64).collect()))
}

fn set_component(p: &RateParameters, idx: usize, v: f64) -> Result<RateParameters> {
    let mut c = [p.k0, p.e_t, p.k1, p.km1, p.k2];
    c[idx] = v;
    RateParameters::new(c[0], c[1], c[2], c[3], c[4])
}

fn sweep_points(base: &RateParameters, axes: &[(usize, Vec<f64>)]) -> Result<Vec<RateParameters>> {
    let mut points = vec![*base];
    for (idx, values) in axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for v in values {
                next.push(set_component(p, *idx, *v)?);
            }
        }
        points = next;
    }
    Ok(points)
}

const SWEEP_HEADER: [&str; 13] =
    ["k0", "eT", "k1", "km1", "k2", "eps_c", "tau0", "eps_star", "eps_o", "alpha", "delta0", "delta_m", "verdict"];

fn sweep_row(p: &RateParameters, d: &QssaDiagnostics) -> Vec<String> {
    let mut row: Vec<String> = [p.k0, p.e_t, p.k1, p.km1, p.k2, d.eps_c, d.tau0, d.eps_star, d.eps_o, d.alpha, d.delta0]
        .iter()
        .map(|v| io::fmt_f64(*v))
        .collect();
    row.push(d.delta_m.map(io::fmt_f64).unwrap_or_default());
    row.push(format!("{:?}", d.verdict));
    row
}

fn sweep_table(base: &RateParameters, axes: &[String], jobs: Option<usize>) -> Result<String> {
    let axes: Vec<_> = axes.iter().map(|a| parse_axis(a)).collect::<Result<_>>()?;
    let points = sweep_points(base, &axes)?;
    let jobs = match jobs {
        Some(0) => return Err(Error::InvalidInput("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<Result<QssaDiagnostics>> =
        pool.install(|| points.par_iter().map(diagnostics::qssa_diagnostics).collect());

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for (p, r) in points.iter().zip(results) {
        w.write_record(sweep_row(p, &r?)).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

/// Initial conditions for the trajectory figures: `s0` in {0, 15, 30}, `c0` in {0, eT}.
pub const FIGURE_1_STARTS: [(f64, f64); 6] = [(0.0, 0.0), (15.0, 0.0), (30.0, 0.0), (0.0, 1.0), (15.0, 1.0), (30.0, 1.0)];

fn figure_params(k0: f64) -> RateParameters {
    RateParameters::new(k0, 1.0, 1.0, 1.0, 3.0).expect("valid constants")
}

fn figure_1(dir: &mut OutDir, name: &str, k0: f64, t_end: f64) -> Result<()> {
    let p = figure_params(k0);
    let cfg = IntegratorConfig { dense_grid: Some(linspace(0.0, t_end, 1001)?), ..IntegratorConfig::with_tolerances(1e-10, 1e-12) };
    for (i, (s0, c0)) in FIGURE_1_STARTS.iter().enumerate() {
        let traj = integrate::simulate(&p, State::new(*s0, *c0), t_end, &cfg, None)?.require_complete()?;
        dir.write(&format!("{name}_traj{i}.csv"), &traj.to_csv(&["t", "s", "c"]))?;
    }
    let nc = phase_plane::nullclines(&p)?;
    let rows = linspace(0.0, 30.0, 301)?.into_iter().map(|s| vec![s, nc.n_c(s)]);
    dir.write(&format!("{name}_sqssa.csv"), &io::write_table(&["s", "c"], rows))?;
    let meta = json!({
        "params": p,
        "t_end": t_end,
        "initial_conditions": FIGURE_1_STARTS.iter().map(|(s, c)| State::new(*s, *c)).collect::<Vec<_>>(),
        "initial_condition_grid": "s0 in {0, 15, 30} x c0 in {0, eT}, inside [0,30] x [0,1.4]",
        "equilibrium": model::equilibrium(&p)?,
    });
    dir.write(&format!("{name}.json"), &to_json_pretty(&meta))
}

fn figure_2(dir: &mut OutDir) -> Result<()> {
    for (prefix, k0) in [("fig2_upper_", 3.5), ("fig2_lower_", 2.5)] {
        let mut sc = Scenario::new(figure_params(k0));
        sc.grid_smax = Some(60.0);
        phase_run(&sc, None, 601, 1000, 1000, dir, prefix)?;
    }
    Ok(())
}

/// Number of iterate columns written for the iteration figure.
pub const FIGURE_3_ITERATES: usize = 6;

fn figure_3(dir: &mut OutDir) -> Result<()> {
    let p = figure_params(2.5);
    let grid = manifold::uniform_grid(30.0, 301)?;
    let (_, report) = manifold::slow_manifold(&p, &grid, 1e-10, FIGURE_3_ITERATES)?;
    let nc = phase_plane::nullclines(&p)?;
    let its = &report.iterates;
    let mut header = vec!["s".to_string(), "sqssa".to_string()];
    header.extend((1..its.len()).map(|i| format!("C{i}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.iter().enumerate().map(|(j, s)| {
        let mut row = vec![*s, nc.n_c(*s)];
        row.extend(its[1..].iter().map(|c| c.c_values[j]));
        row
    });
    dir.write("fig3_iterates.csv", &io::write_table(&refs, rows))?;
    let sup_deltas = |from: f64| -> Vec<f64> {
        its.windows(2)
            .map(|w| {
                grid.iter()
                    .zip(w[0].c_values.iter().zip(&w[1].c_values))
                    .filter(|(s, _)| **s >= from)
                    .fold(0.0, |m: f64, (_, (a, b))| m.max((a - b).abs()))
            })
            .collect()
    };
    // near the s-axis the iterates stop converging after a few steps
    let meta = json!({
        "params": p,
        "equilibrium": model::equilibrium(&p)?,
        "initial_function": "C0 = 0",
        "sup_deltas": sup_deltas(0.0),
        "s_tilde": nc.s_tilde,
        "sup_deltas_from_s_tilde": sup_deltas(nc.s_tilde),
    });
    dir.write("fig3.json", &to_json_pretty(&meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let (idx, v) = parse_axis("k0=0.1:3.5:0.1").unwrap();
        assert_eq!(idx, 0);
        assert_eq!(v.len(), 35);
        assert!(parse_axis("kx=0:1:0.5").is_err());
        assert!(parse_axis("k0=1:0:0.5").is_err());
        assert!(parse_axis("k0=0:1").is_err());
    }

    #[test]
    fn scenario_defaults() {
        let sc = Scenario::from_json(r#"{"params":{"k0":2.5,"eT":1.0,"k1":1.0,"km1":1.0,"k2":3.0}}"#).unwrap();
        assert_eq!(sc.seed, 42);
        assert_eq!(sc.t_end, 50.0);
        assert!(Scenario::from_json(r#"{"params":{"k0":2.5,"eT":1.0,"k1":1.0,"km1":1.0,"k2":3.0},"t_end":-1}"#).is_err());
        assert!(Scenario::from_json(r#"{"params":{"k0":2.5,"eT":1.0,"k1":1.0,"km1":1.0,"k2":3.0},"eps_list":[2.0]}"#).is_err());
    }

    #[test]
    fn bad_arguments_exit_one() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run_cli_with(["qssa-lab", "nope"], &mut out, &mut err), 1);
        assert_eq!(run_cli_with(["qssa-lab", "diagnose"], &mut out, &mut err), 1);
        assert_eq!(run_cli_with(["qssa-lab", "--help"], &mut out, &mut err), 0);
    }

    #[test]
    fn sweep_points_are_ordered() {
        let base = figure_params(2.5);
        let axes = vec![parse_axis("k0=1:2:1").unwrap(), parse_axis("k2=3:4:1").unwrap()];
        let pts = sweep_points(&base, &axes).unwrap();
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p.k0, p.k2)).collect();
        assert_eq!(pairs, vec![(1.0, 3.0), (1.0, 4.0), (2.0, 3.0), (2.0, 4.0)]);
    }
}
