//! The subcommands.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use slagwall::bundles::{self, BundleError, BundleParams, PhaseCase};
use slagwall::construction::{self, ConstructionError, ConstructionParams};
use slagwall::flow::{self, ExperimentConfig, FlowConfig, FlowState, RunOutcome};
use slagwall::levelset::{self, fmt_f64, HarmonicLevelSet, PlanePoint, TraceConfig, Window};
use slagwall::stability::{self, DEFAULT_EPSILON};
use slagwall::Complex64;

use crate::svg::{bounding_window, Plot, Style, PALETTE};
use crate::Failure;

pub const PARAMS_HELP: &str = "\
Output: `key = value` lines, or with --csv one header line
`n,m,theta,c,q,a,p,ratio,same_component,k,kq,kap` and one row.
k, kq, kap are empty when no admissible scaling exists within --max-den.";

pub const LEVELSET_HELP: &str = "\
Files: NAME.csv (component,x,y), NAME_tangents.csv (component,x,y of
vertical tangents), NAME.svg. Floats carry 17 significant digits.";

pub const WALL_HELP: &str = "\
Files: NAME.csv with b,ReZ1,ImZ1,ReZ2,ImZ2,lambda1,lambda2,verdict and,
with --bridgeland (n = 3), ReZG1,ImZG1,ReZG2,ImZG2. Verdicts are Stable,
Wall, Unstable, or OutOfRegime outside |b - 1| < epsilon.";

pub const FLOW_HELP: &str = "\
Files (b > 1): NAME_log.csv (t,x_c,y_c,max_speed,barrier_ok),
NAME_snapshot_KKKK.csv (x,y), NAME.svg.
Files (b < 1): NAME_log.csv (t,distance,max_speed), NAME_snapshot_KKKK.csv, NAME.svg.
A run stopped by a singularity keeps its last valid state and exits with 3.";

pub const BUNDLE_HELP: &str = "\
Files: NAME.csv (x,y along the branch from b+iq' through 0 to b+iq), NAME.svg.
Exits with 4 when the branch leaves the trace window before x = b.";

/// Where output files go. The directory is created on first write.
#[derive(Debug, Clone)]
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self, Failure> {
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write `contents` to `name` inside the output directory.
    pub fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        let io = |source| Failure::Io { path: path.clone(), source };
        std::fs::create_dir_all(&self.dir).map_err(|source| Failure::Io { path: self.dir.clone(), source })?;
        std::fs::write(&path, contents).map_err(io)?;
        Ok(path)
    }

    fn write_points(&self, name: &str, points: &[PlanePoint]) -> Result<PathBuf, Failure> {
        let mut buf = Vec::new();
        levelset::write_points_csv(&mut buf, points.iter().copied()).expect("writing to memory");
        self.write(name, &buf)
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|source| Failure::Io { path: PathBuf::from("<stdout>"), source })?
    };
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn construction_failure(e: ConstructionError) -> Failure {
    Failure::NoSolution(e.to_string())
}

/// The phase argument and how to interpret it.
#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    /// Dimension n ≥ 2.
    #[arg(long)]
    pub n: u32,
    /// Phase angle θ̂ (radians unless --degrees).
    #[arg(long, group = "phase")]
    pub theta: Option<f64>,
    /// Boundary parameter p in (−tan(π/n), tan(π/n)) \ {0}.
    #[arg(long, group = "phase")]
    pub p: Option<f64>,
    /// Critical-level branch m; chosen automatically when absent.
    #[arg(long)]
    pub m: Option<i32>,
    /// Read angles in degrees.
    #[arg(long)]
    pub degrees: bool,
}

impl PhaseArgs {
    fn solve(&self) -> Result<ConstructionParams, Failure> {
        if self.n < 2 {
            return Err(usage(format!("--n must be at least 2, got {}", self.n)));
        }
        let theta = match (self.theta, self.p) {
            (Some(t), None) => angle(t, self.degrees),
            (None, Some(p)) => construction::theta_from_p(self.n, p).map_err(construction_failure)?,
            _ => return Err(usage("exactly one of --theta and --p is required")),
        };
        if !theta.is_finite() {
            return Err(usage("θ̂ must be finite"));
        }
        let params = match (self.m, self.p) {
            (Some(m), _) => ConstructionParams::with_branch(self.n, theta, m),
            (None, Some(p)) => ConstructionParams::from_p(self.n, p),
            (None, None) => ConstructionParams::from_theta(self.n, theta),
        };
        params.map_err(construction_failure)
    }
}

fn angle(value: f64, degrees: bool) -> f64 {
    if degrees {
        value.to_radians()
    } else {
        value
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("{what}: cannot parse {s:?} as a number"))))
        .collect()
}

fn parse_window(text: &str) -> Result<Window, Failure> {
    let v = parse_list(text, "--window")?;
    if v.len() != 4 || !(v[0] < v[1]) || !(v[2] < v[3]) {
        return Err(usage(format!("--window expects x_min,x_max,y_min,y_max with min < max, got {text:?}")));
    }
    Ok(Window::new(v[0], v[1], v[2], v[3]))
}

// ---------------------------------------------------------------------------
// params

#[derive(Debug, Clone, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Denominator bound for the admissible scaling.
    #[arg(long, default_value_t = construction::DEFAULT_MAX_DENOMINATOR)]
    pub max_den: u64,
    /// Print one CSV row instead of `key = value` lines.
    #[arg(long)]
    pub csv: bool,
}

pub fn params(args: &ParamsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = args.phase.solve()?;
    let same = construction::verify_same_component(&p).map_err(construction_failure)?;
    let adm = construction::find_admissible_k(&p, args.max_den);
    let residual = p.residuals().iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let (k, kq, kap) = match adm {
        Some(s) => (fmt_f64(s.k), s.kq.to_string(), s.kap.to_string()),
        None => (String::new(), String::new(), String::new()),
    };
    if args.csv {
        say!(out, "n,m,theta,c,q,a,p,ratio,same_component,k,kq,kap");
        say!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.m_branch,
            fmt_f64(p.theta_hat),
            fmt_f64(p.c),
            fmt_f64(p.q),
            fmt_f64(p.a),
            fmt_f64(p.p),
            fmt_f64(p.ratio()),
            same,
            k,
            kq,
            kap
        );
        return Ok(());
    }
    say!(out, "n = {}", p.n);
    say!(out, "m = {}", p.m_branch);
    say!(out, "theta = {}", fmt_f64(p.theta_hat));
    say!(out, "c = {}", fmt_f64(p.c));
    say!(out, "q = {}", fmt_f64(p.q));
    say!(out, "a = {}", fmt_f64(p.a));
    say!(out, "p = {}", fmt_f64(p.p));
    say!(out, "ratio = {}", fmt_f64(p.ratio()));
    say!(out, "same_component = {same}");
    say!(out, "max_residual = {}", fmt_f64(residual));
    match adm {
        Some(s) => {
            say!(out, "admissible = true");
            say!(out, "k = {k}");
            say!(out, "kq = {kq}");
            say!(out, "kap = {kap}");
            say!(out, "max_denominator = {}", s.denominator_bound);
        }
        None => {
            say!(out, "admissible = false");
            say!(out, "max_denominator = {}", args.max_den);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// levelset

#[derive(Debug, Clone, Args)]
pub struct LevelsetArgs {
    /// Degree n ≥ 1.
    #[arg(long)]
    pub n: u32,
    /// Phase angle θ̂ (radians unless --degrees).
    #[arg(long)]
    pub theta: f64,
    /// Level c; defaults to the construction level with --construction.
    #[arg(long)]
    pub c: Option<f64>,
    /// Use the construction level for (n, θ̂) and draw x = 1 and x = a.
    #[arg(long)]
    pub construction: bool,
    /// x_min,x_max,y_min,y_max.
    #[arg(long, default_value = "-3,3,-3,3", allow_hyphen_values = true)]
    pub window: String,
    /// Seeding lattice size per axis.
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    /// Predictor step; defaults to 1/500 of the window diagonal.
    #[arg(long)]
    pub step: Option<f64>,
    /// Extra vertical reference lines, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vline: Vec<f64>,
    /// File name stem.
    #[arg(long, default_value = "levelset")]
    pub name: String,
    /// Read angles in degrees.
    #[arg(long)]
    pub degrees: bool,
}

/// One traced component as reported by `levelset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub points: usize,
    pub closed: bool,
    pub vertical_tangents: Vec<PlanePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelsetSummary {
    pub components: Vec<ComponentSummary>,
    /// For each reference line, the vertical tangents lying on it.
    pub lines: Vec<(f64, Vec<PlanePoint>)>,
    pub files: Vec<PathBuf>,
}

/// Vertical tangents closer than this to a reference line lie on it.
pub const LINE_TOL: f64 = 1e-6;

pub fn levelset(args: &LevelsetArgs, output: &Output, out: &mut dyn Write) -> Result<LevelsetSummary, Failure> {
    if args.n < 1 {
        return Err(usage("--n must be at least 1"));
    }
    let theta = angle(args.theta, args.degrees);
    let window = parse_window(&args.window)?;
    let mut lines = args.vline.clone();
    let c = match (args.c, args.construction) {
        (Some(c), false) => c,
        (None, true) | (Some(_), true) => {
            if args.n < 2 {
                return Err(usage("--construction needs n ≥ 2"));
            }
            let p = ConstructionParams::from_theta(args.n, theta).map_err(construction_failure)?;
            lines.extend([1.0, p.a]);
            if let Some(c) = args.c {
                if (c - p.c).abs() > 1e-12 * p.c.abs().max(1.0) {
                    return Err(usage(format!("--c {c} disagrees with the construction level {}", p.c)));
                }
            }
            p.c
        }
        (None, false) => return Err(usage("--c is required without --construction")),
    };
    if args.grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let diag = (window.x_max - window.x_min).hypot(window.y_max - window.y_min);
    let step = args.step.unwrap_or(diag / 500.0);
    if !(step > 0.0) {
        return Err(usage("--step must be positive"));
    }
    let spec = HarmonicLevelSet::new(args.n, theta, c);
    let cfg = TraceConfig::with_step(step);
    let branches = levelset::trace_all_components(&spec, &window, args.grid, &cfg);

    let mut csv = String::from("component,x,y\n");
    let mut tangents = String::from("component,x,y\n");
    let mut components = Vec::with_capacity(branches.len());
    for (i, b) in branches.iter().enumerate() {
        for p in &b.points {
            csv.push_str(&format!("{i},{},{}\n", fmt_f64(p.x), fmt_f64(p.y)));
        }
        let vt: Vec<PlanePoint> = b.vertical_tangent_points.iter().map(|&k| b.points[k]).collect();
        for p in &vt {
            tangents.push_str(&format!("{i},{},{}\n", fmt_f64(p.x), fmt_f64(p.y)));
        }
        components.push(ComponentSummary { points: b.points.len(), closed: b.is_closed, vertical_tangents: vt });
    }
    let line_hits: Vec<(f64, Vec<PlanePoint>)> = lines
        .iter()
        .map(|&x0| {
            let hits = components
                .iter()
                .flat_map(|c| c.vertical_tangents.iter().copied())
                .filter(|p| (p.x - x0).abs() <= LINE_TOL * x0.abs().max(1.0))
                .collect();
            (x0, hits)
        })
        .collect();

    let mut plot = Plot::new(format!("Im e^(-i·{theta:.4}) z^{} = {c:.6}", args.n), window);
    let reach = 2.0 * diag;
    for k in 0..2 * args.n {
        let phi = (theta + k as f64 * PI) / args.n as f64;
        let end = PlanePoint::new(reach * phi.cos(), reach * phi.sin());
        plot.polyline(&[PlanePoint::new(0.0, 0.0), end], Style::dashed("#999"));
    }
    for (i, b) in branches.iter().enumerate() {
        let mut pts = b.points.clone();
        if b.is_closed && !pts.is_empty() {
            pts.push(pts[0]);
        }
        plot.polyline(&pts, Style::solid(PALETTE[i % PALETTE.len()]));
    }
    for c in &components {
        for p in &c.vertical_tangents {
            plot.marker(*p);
        }
    }
    for &x0 in &lines {
        plot.vline(x0, format!("x = {}", trim_float(x0)));
    }

    let files = vec![
        output.write(&format!("{}.csv", args.name), csv.as_bytes())?,
        output.write(&format!("{}_tangents.csv", args.name), tangents.as_bytes())?,
        output.write(&format!("{}.svg", args.name), plot.render().as_bytes())?,
    ];

    say!(out, "n = {}, theta = {}, c = {}", args.n, fmt_f64(theta), fmt_f64(c));
    say!(out, "components = {}", components.len());
    for (i, comp) in components.iter().enumerate() {
        say!(
            out,
            "component {i}: {} points, {}, {} vertical tangent(s)",
            comp.points,
            if comp.closed { "closed" } else { "open" },
            comp.vertical_tangents.len()
        );
        for p in &comp.vertical_tangents {
            say!(out, "  vertical tangent at ({}, {})", fmt_f64(p.x), fmt_f64(p.y));
        }
    }
    for (x0, hits) in &line_hits {
        if hits.is_empty() {
            say!(out, "x = {}: no vertical tangent", trim_float(*x0));
        } else {
            let ys: Vec<String> = hits.iter().map(|p| fmt_f64(p.y)).collect();
            say!(out, "x = {}: vertical tangent at y = {}", trim_float(*x0), ys.join(", "));
        }
    }
    for f in &files {
        say!(out, "wrote {}", f.display());
    }
    Ok(LevelsetSummary { components, lines: line_hits, files })
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

// ---------------------------------------------------------------------------
// wall

#[derive(Debug, Clone, Args)]
pub struct WallArgs {
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Explicit b values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "b_range")]
    pub b: Vec<f64>,
    /// b_min,b_max,count for an evenly spaced scan [default: 0.9,1.1,21].
    #[arg(long)]
    pub b_range: Option<String>,
    /// Half-width of the classification window around b = 1.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Append the threefold charges (n = 3 only).
    #[arg(long)]
    pub bridgeland: bool,
    /// File name stem.
    #[arg(long, default_value = "wall")]
    pub name: String,
}

pub fn wall(args: &WallArgs, output: &Output, out: &mut dyn Write) -> Result<(), Failure> {
    let p = args.phase.solve()?;
    if args.bridgeland && p.n != 3 {
        return Err(usage("--bridgeland needs n = 3"));
    }
    let bs = if !args.b.is_empty() {
        args.b.clone()
    } else {
        let spec = args.b_range.as_deref().unwrap_or("0.9,1.1,21");
        let v = parse_list(spec, "--b-range")?;
        if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
            return Err(usage(format!("--b-range expects b_min,b_max,count, got {spec:?}")));
        }
        let count = v[2] as usize;
        if count == 1 {
            vec![v[0]]
        } else {
            (0..count).map(|i| v[0] + (v[1] - v[0]) * i as f64 / (count - 1) as f64).collect()
        }
    };
    if let Some(b) = bs.iter().find(|b| !(**b > 0.0 && **b < p.a)) {
        return Err(usage(format!("b = {b} must lie in (0, a) with a = {}", p.a)));
    }
    let rows = stability::wall_scan(&p, &bs, args.epsilon, args.bridgeland).map_err(|e| Failure::NoSolution(e.to_string()))?;
    let mut buf = Vec::new();
    stability::write_wall_csv(&mut buf, &rows).expect("writing to memory");
    let path = output.write(&format!("{}.csv", args.name), &buf)?;

    say!(out, "n = {}, theta = {}, a = {}, p = {}", p.n, fmt_f64(p.theta_hat), fmt_f64(p.a), fmt_f64(p.p));
    for r in &rows {
        let v = r.verdict.map_or_else(|| "OutOfRegime".to_string(), |v| v.to_string());
        say!(out, "b = {}: {v}", fmt_f64(r.b));
    }
    say!(out, "wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// flow

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Inner end of the momentum interval; b > 1 runs the unstable
    /// experiment, b < 1 the stable relaxation.
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Number of curve points.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// The run stops once the maximal speed falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub speed_tol: f64,
    /// Steps between log rows.
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
    /// Steps between curve snapshots; 0 keeps the first and last only.
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    /// Normal perturbation of the section in the stable regime.
    #[arg(long, default_value_t = 0.02)]
    pub amplitude: f64,
    /// File name stem.
    #[arg(long, default_value = "flow")]
    pub name: String,
}

pub fn flow(args: &FlowArgs, output: &Output, out: &mut dyn Write) -> Result<(), Failure> {
    let p = args.phase.solve()?;
    if !(args.b > 0.0 && args.b < p.a) || args.b == 1.0 {
        return Err(usage(format!("--b must lie in (0, a) \\ {{1}} with a = {}, got {}", p.a, args.b)));
    }
    if !(args.t_max >= 0.0) || !(args.dt > 0.0) || args.grid < 8 {
        return Err(usage("--t-max ≥ 0, --dt > 0 and --grid ≥ 8 are required"));
    }
    let cfg = ExperimentConfig {
        flow: FlowConfig { dt: args.dt, grid: args.grid, ..FlowConfig::default() },
        t_max: args.t_max,
        speed_tol: args.speed_tol,
        log_every: args.log_every.max(1),
        snapshot_every: args.snapshot_every,
        ..ExperimentConfig::default()
    };
    let flow_failure = |e: flow::FlowError| Failure::NoSolution(e.to_string());
    say!(out, "n = {}, theta = {}, a = {}, b = {}", p.n, fmt_f64(p.theta_hat), fmt_f64(p.a), fmt_f64(args.b));

    let outcome = if args.b > 1.0 {
        let report = flow::unstable_limit_experiment(&p, args.b, &cfg).map_err(flow_failure)?;
        let mut buf = Vec::new();
        flow::write_flow_log_csv(&mut buf, &report.log).expect("writing to memory");
        let mut files = vec![output.write(&format!("{}_log.csv", args.name), &buf)?];
        for (k, s) in report.snapshots.iter().enumerate() {
            files.push(output.write_points(&format!("{}_snapshot_{k:04}.csv", args.name), &s.curve)?);
        }
        let mut plot = flow_plot(&format!("unstable run, b = {}", args.b), &report.initial, &report.final_state);
        plot.polyline(&report.upper.arc, Style::dashed("#2ca02c"));
        plot.polyline(&report.lower.arc, Style::dashed("#2ca02c"));
        plot.vline(args.b, format!("x = {}", trim_float(args.b)));
        plot.marker(report.target);
        files.push(output.write(&format!("{}.svg", args.name), plot.render().as_bytes())?);

        say!(out, "regime = unstable");
        say!(out, "outcome = {}", report.outcome);
        say!(out, "t = {}", fmt_f64(report.final_state.t));
        say!(out, "h = {}", fmt_f64(report.h));
        say!(out, "velocity_always_negative = {}", report.velocity_always_negative());
        say!(out, "x_c_non_increasing = {}", report.x_c_non_increasing(cfg.transient, 1e-12));
        say!(out, "max_barrier_violation = {}", fmt_f64(report.max_barrier_violation));
        say!(out, "upper_distance = {}", fmt_f64(report.upper_distance));
        say!(out, "lower_distance = {}", fmt_f64(report.lower_distance));
        say!(out, "limit_point = {}, {}", fmt_f64(report.limit_point.x), fmt_f64(report.limit_point.y));
        say!(out, "target = {}, {}", fmt_f64(report.target.x), fmt_f64(report.target.y));
        for f in &files {
            say!(out, "wrote {}", f.display());
        }
        report.outcome
    } else {
        let report = flow::stable_relaxation(&p, args.b, args.amplitude, &cfg).map_err(flow_failure)?;
        let mut log = String::from("t,distance,max_speed\n");
        for (t, d, s) in &report.log {
            log.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*d), fmt_f64(*s)));
        }
        let mut files = vec![output.write(&format!("{}_log.csv", args.name), log.as_bytes())?];
        files.push(output.write_points(&format!("{}_snapshot_0000.csv", args.name), &report.initial.curve)?);
        if report.final_state != report.initial {
            files.push(output.write_points(&format!("{}_snapshot_0001.csv", args.name), &report.final_state.curve)?);
        }
        let mut plot = flow_plot(&format!("stable run, b = {}", args.b), &report.initial, &report.final_state);
        plot.polyline(&report.target.curve, Style::dashed("#2ca02c"));
        files.push(output.write(&format!("{}.svg", args.name), plot.render().as_bytes())?);

        let (d0, d1) = (report.log[0].1, report.log[report.log.len() - 1].1);
        say!(out, "regime = stable");
        say!(out, "outcome = {}", report.outcome);
        say!(out, "t = {}", fmt_f64(report.final_state.t));
        say!(out, "initial_distance = {}", fmt_f64(d0));
        say!(out, "final_distance = {}", fmt_f64(d1));
        for f in &files {
            say!(out, "wrote {}", f.display());
        }
        report.outcome
    };
    match outcome {
        RunOutcome::BlowUp { .. } | RunOutcome::SelfIntersection { .. } => Err(Failure::FlowAborted(outcome.to_string())),
        _ => Ok(()),
    }
}

fn flow_plot(title: &str, initial: &FlowState, last: &FlowState) -> Plot {
    let window = bounding_window(initial.curve.iter().chain(last.curve.iter()).copied());
    let mut plot = Plot::new(title, window);
    plot.polyline(&initial.curve, Style::dashed("#888"));
    plot.polyline(&last.curve, Style::solid(PALETTE[0]));
    plot
}

// ---------------------------------------------------------------------------
// bundle

#[derive(Debug, Clone, Args)]
pub struct BundleArgs {
    /// Fibre rank parameter r ≥ 0.
    #[arg(long)]
    pub r: u32,
    /// Base dimension m ≥ 1.
    #[arg(long)]
    pub m: u32,
    /// ξ as re,im with re > 0.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: String,
    /// Momentum interval end b > 0.
    #[arg(long)]
    pub b: f64,
    /// Phase θ̂; defaults to the smallest non-negative vertical choice.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Read angles in degrees.
    #[arg(long)]
    pub degrees: bool,
    /// Denominator bound of the commensurability report.
    #[arg(long, default_value_t = 1000)]
    pub max_den: u64,
    /// Step of the ξ₁ finite difference.
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    /// File name stem.
    #[arg(long, default_value = "bundle")]
    pub name: String,
}

/// What `bundle` found.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSummary {
    pub theta_family: Vec<f64>,
    pub theta: f64,
    pub q: f64,
    pub q_prime: f64,
    pub signs: (i8, i8),
    pub expected: (i8, i8),
}

/// Distance of `ϑ₁` from the non-generic set below which a warning is printed.
pub const NON_GENERIC_WARN: f64 = 1e-6;

fn sign_str(s: i8) -> &'static str {
    match s {
        1 => "+1",
        -1 => "-1",
        _ => "0",
    }
}

pub fn bundle(args: &BundleArgs, output: &Output, out: &mut dyn Write) -> Result<BundleSummary, Failure> {
    let xi = parse_list(&args.xi, "--xi")?;
    if xi.len() != 2 {
        return Err(usage(format!("--xi expects re,im, got {:?}", args.xi)));
    }
    let xi = Complex64::new(xi[0], xi[1]);
    let theta = args.theta.map(|t| angle(t, args.degrees)).unwrap_or_else(|| bundles::default_vertical_theta(args.m, args.r, xi.arg()));
    let params = BundleParams::new(args.r, args.m, xi, args.b, theta).map_err(|e| usage(e.to_string()))?;
    let family = bundles::vertical_branch_thetas(args.m, args.r, params.psi());
    let bi = bundles::boundary_intersections(&params, args.max_den).map_err(|e| match e {
        BundleError::BranchEscapesWindow { .. } => Failure::BranchEscapes(e.to_string()),
        other => Failure::NoSolution(other.to_string()),
    })?;
    let signs = (
        bundles::arg_monotonicity(&params, bi.q, args.h),
        bundles::arg_monotonicity(&params, bi.q_prime, args.h),
    );
    let case = params.phase_case();
    let expected = case.expected_signs();

    let points = bi.branch.points();
    let csv_path = output.write_points(&format!("{}.csv", args.name), &points)?;
    let mut window_pts = points.clone();
    window_pts.push(PlanePoint::new(0.0, 0.0));
    let mut plot = Plot::new(format!("r = {}, m = {}, ξ = {}", args.r, args.m, args.xi), bounding_window(window_pts));
    plot.polyline(&points, Style::solid(PALETTE[0]));
    plot.vline(args.b, format!("x = {}", trim_float(args.b)));
    plot.marker(PlanePoint::new(args.b, bi.q));
    plot.marker(PlanePoint::new(args.b, bi.q_prime));
    plot.marker(PlanePoint::new(0.0, 0.0));
    let svg_path = output.write(&format!("{}.svg", args.name), plot.render().as_bytes())?;

    let c = &bi.commensurability;
    let frac = |r: Option<(i64, u64)>| r.map_or_else(|| "none".to_string(), |(a, b)| format!("{a}/{b}"));
    say!(out, "{params}");
    say!(out, "fano = {}", params.is_fano());
    say!(out, "even_parity = {}", params.has_even_parity());
    say!(out, "small_window = {}", params.in_small_window());
    let fam: Vec<String> = family.iter().map(|t| fmt_f64(*t)).collect();
    say!(out, "theta_family = {}", fam.join(", "));
    say!(out, "theta = {}", fmt_f64(theta));
    say!(out, "upper_phase = {}", fmt_f64(params.upper_phase()));
    say!(out, "lower_phase = {}", fmt_f64(params.lower_phase()));
    if params.non_generic_distance() < NON_GENERIC_WARN {
        say!(out, "warning = upper phase is within {NON_GENERIC_WARN:e} of an odd multiple of π (non-generic)");
    }
    say!(out, "q = {}", fmt_f64(bi.q));
    say!(out, "q_prime = {}", fmt_f64(bi.q_prime));
    say!(
        out,
        "q_over_q_prime = {} (nearest {}, rational = {})",
        fmt_f64(c.q_over_q_prime),
        frac(c.q_over_q_prime_nearest),
        c.q_over_q_prime_rational
    );
    match c.q_over_xi2 {
        Some(r) => say!(out, "q_over_xi2 = {} (nearest {}, rational = {})", fmt_f64(r), frac(c.q_over_xi2_nearest), c.q_over_xi2_rational),
        None => say!(out, "q_over_xi2 = undefined (xi2 = 0)"),
    }
    say!(out, "phase_case = {}", match case {
        PhaseCase::LowerHalf => "lower half plane",
        PhaseCase::UpperHalf => "upper half plane",
    });
    say!(out, "signs = {}, {}", sign_str(signs.0), sign_str(signs.1));
    say!(out, "expected_signs = {}, {}", sign_str(expected.0), sign_str(expected.1));
    say!(out, "pattern_holds = {}", signs == expected);
    say!(out, "wrote {}", csv_path.display());
    say!(out, "wrote {}", svg_path.display());
    Ok(BundleSummary { theta_family: family, theta, q: bi.q, q_prime: bi.q_prime, signs, expected })
}
