//! Subcommand implementations: argument resolution (flags override a JSON
//! config file), computation dispatch, and artifact emission.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use fraclab_core::continuation::{self, BranchOptions};
use fraclab_core::extension::{
    extend, geometric_levels, normal_derivative, normal_derivative_levels, pde_residual,
};
use fraclab_core::grid::{DomainKind, Grid1D, Parity};
use fraclab_core::groundstate::{self, SolveOptions};
use fraclab_core::op::{FracOp, Sector};
use fraclab_core::picone::kernel_gap;
use fraclab_core::spectrum::{alignment, morse_index, weighted_eigs};
use fraclab_core::FracError;

use crate::output::{self, json_number};
use crate::verify;

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Fractional-Laplacian ground states, weighted spectra, Picone audits, extensions and continuation on the interval and the line"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve a positive ground state and emit the profile with its certificates
    Solve(SolveArgs),
    /// Weighted eigenvalues of the linearization in a parity sector
    Spectrum(SpectrumArgs),
    /// Audit the antisymmetric Picone identity over seeded draws
    Picone(PiconeArgs),
    /// Lift a trace to the weighted half plane and check its calculus
    Extend(ExtendArgs),
    /// Trace the ground-state branch in the nonlinearity exponent
    Branch(BranchArgs),
    /// Run the acceptance criteria and emit a machine-readable report
    Verify(VerifyArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute(_) => 2,
            CliError::VerifyFailed(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("configuration error: {m}"),
            CliError::Compute(m) => format!("computation error: {m}"),
            CliError::VerifyFailed(n) => format!("verification failed on {n} criterion(s)"),
        }
    }
}

fn compute_err(e: FracError) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Directory for emitted files
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Emit csv, json, or both
    #[arg(long, default_value = "both")]
    pub format: String,
    /// Also write SVG plots
    #[arg(long)]
    pub plot: bool,
}

impl OutputArgs {
    fn want_csv(&self) -> bool {
        self.format == "csv" || self.format == "both"
    }
    fn want_json(&self) -> bool {
        self.format == "json" || self.format == "both"
    }
    fn validate(&self) -> Result<(), CliError> {
        if !["csv", "json", "both"].contains(&self.format.as_str()) {
            return Err(CliError::Config(format!(
                "unknown format '{}' (expected csv, json, or both)",
                self.format
            )));
        }
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory: {e}")))
    }
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ProblemFile {
    domain: Option<String>,
    s: Option<f64>,
    lambda: Option<f64>,
    p: Option<f64>,
    n: Option<usize>,
    l: Option<f64>,
    seed: Option<u64>,
    sector: Option<String>,
    k: Option<usize>,
    draws: Option<usize>,
    trace: Option<String>,
    p_start: Option<f64>,
    p_end: Option<f64>,
}

fn load_config(path: &Option<PathBuf>) -> Result<ProblemFile, CliError> {
    match path {
        None => Ok(ProblemFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {p:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid config {p:?}: {e}")))
        }
    }
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    /// ball (the unit interval) or line (truncated real line)
    #[arg(long)]
    pub domain: Option<String>,
    /// Fractional order in (0, 1)
    #[arg(long)]
    pub s: Option<f64>,
    /// Zero-order coefficient (ball); line solves use 1 unless overridden
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Nonlinearity exponent
    #[arg(long)]
    pub p: Option<f64>,
    /// Node count (odd, >= 9)
    #[arg(long)]
    pub n: Option<usize>,
    /// Half width of the line truncation
    #[arg(long)]
    pub l: Option<f64>,
    /// RNG seed for randomized operations
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with defaults; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

struct Problem {
    domain: DomainKind,
    s: f64,
    lambda: f64,
    p: f64,
    n: usize,
    l: f64,
    seed: u64,
    grid: Grid1D,
}

impl ProblemArgs {
    fn resolve(&self) -> Result<(Problem, ProblemFile), CliError> {
        let file = load_config(&self.config)?;
        let domain_str = self
            .domain
            .clone()
            .or(file.domain.clone())
            .unwrap_or_else(|| "ball".into());
        let domain = match domain_str.as_str() {
            "ball" => DomainKind::Ball,
            "line" => DomainKind::Line,
            other => {
                return Err(CliError::Config(format!(
                    "unknown domain '{other}' (expected ball or line)"
                )))
            }
        };
        let s = self.s.or(file.s).unwrap_or(0.5);
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::Config(format!(
                "order s = {s} violates the admissible range (0, 1)"
            )));
        }
        let lambda = self.lambda.or(file.lambda).unwrap_or(match domain {
            DomainKind::Ball => 0.0,
            DomainKind::Line => 1.0,
        });
        let p = self.p.or(file.p).unwrap_or(2.0);
        let cap = continuation::critical_exponent(s)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(p > 1.0 && p < cap) {
            return Err(CliError::Config(format!(
                "exponent p = {p} violates the subcritical range (1, {cap})"
            )));
        }
        if domain == DomainKind::Line && !(lambda > 0.0) {
            return Err(CliError::Config(format!(
                "line solves need lambda > 0, got {lambda}"
            )));
        }
        let n = self.n.or(file.n).unwrap_or(1025);
        let l = self.l.or(file.l).unwrap_or(50.0);
        let grid = match domain {
            DomainKind::Ball => Grid1D::ball(n),
            DomainKind::Line => Grid1D::line(l, n),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        let seed = self.seed.or(file.seed).unwrap_or(1);
        Ok((Problem { domain, s, lambda, p, n, l, seed, grid }, file))
    }
}

fn problem_json(p: &Problem) -> serde_json::Value {
    json!({
        "domain": match p.domain { DomainKind::Ball => "ball", DomainKind::Line => "line" },
        "s": json_number(p.s),
        "lambda": json_number(p.lambda),
        "p": json_number(p.p),
        "n": p.n,
        "l": json_number(p.l),
        "seed": p.seed,
        "tool_version": output::TOOL_VERSION,
    })
}

fn describe(p: &Problem, cmd: &str) -> String {
    format!(
        "{cmd} domain={} s={} lambda={} p={} n={}",
        match p.domain {
            DomainKind::Ball => "ball",
            DomainKind::Line => "line",
        },
        p.s,
        p.lambda,
        p.p,
        p.n
    )
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    args.output.validate()?;
    let (prob, _) = args.problem.resolve()?;
    let op = FracOp::assemble(prob.grid, prob.s).map_err(compute_err)?;
    let state = groundstate::solve_with(&op, prob.lambda, prob.p, &SolveOptions::default())
        .map_err(compute_err)?;
    let grid = state.u.grid();
    if args.output.want_csv() {
        output::write_csv(
            &args.output.out_dir.join("solve_solution.csv"),
            &describe(&prob, "solve"),
            &["x", "u"],
            (0..grid.len()).map(|i| vec![grid.node(i), state.u.values()[i]]),
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.want_json() {
        let summary = json!({
            "problem": problem_json(&prob),
            "residual": json_number(state.residual_norm),
            "u0": json_number(state.peak()),
            "psi_boundary": state.psi_boundary.map(json_number),
            "newton_iters": state.newton_iters,
            "decay_exponent": state.decay_exponent.map(json_number),
            "truncation_flag": state.truncation_flag,
        });
        output::write_json(&args.output.out_dir.join("solve_summary.json"), &summary)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.plot {
        let xs = grid.nodes();
        output::svg_line_plot(
            &args.output.out_dir.join("solve_profile.svg"),
            &describe(&prob, "solve"),
            &xs,
            &[("u", state.u.values())],
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// even, odd, or full
    #[arg(long)]
    pub sector: Option<String>,
    /// Number of eigenvalues
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    args.output.validate()?;
    let (prob, file) = args.problem.resolve()?;
    let sector_str = args
        .sector
        .clone()
        .or(file.sector)
        .unwrap_or_else(|| "full".into());
    let sector = match sector_str.as_str() {
        "even" => Sector::Even,
        "odd" => Sector::Odd,
        "full" => Sector::Full,
        other => {
            return Err(CliError::Config(format!(
                "unknown sector '{other}' (expected even, odd, or full)"
            )))
        }
    };
    let k = args.k.or(file.k).unwrap_or(3);
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let op = FracOp::assemble(prob.grid, prob.s).map_err(compute_err)?;
    let state = groundstate::solve_with(&op, prob.lambda, prob.p, &SolveOptions::default())
        .map_err(compute_err)?;
    let spec = weighted_eigs(&op, &state, sector, k).map_err(compute_err)?;
    if args.output.want_csv() {
        output::write_csv(
            &args.output.out_dir.join("spectrum_eigenvalues.csv"),
            &format!("{} sector={sector_str} k={k}", describe(&prob, "spectrum")),
            &["k", "lambda"],
            spec.pairs
                .iter()
                .enumerate()
                .map(|(i, pair)| vec![(i + 1) as f64, pair.value]),
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.want_json() {
        let align0 = alignment(&state, &spec.pairs[0].vector, &state.u).unwrap_or(f64::NAN);
        let morse = if sector == Sector::Full {
            morse_index(&spec, prob.p).ok()
        } else {
            None
        };
        let summary = json!({
            "problem": problem_json(&prob),
            "sector": sector_str,
            "eigenvalues": spec.pairs.iter().map(|p| json_number(p.value)).collect::<Vec<_>>(),
            "gap_to_p": json_number(spec.pairs[0].value - prob.p),
            "first_alignment_with_state": json_number(align0),
            "morse_index": morse,
        });
        output::write_json(&args.output.out_dir.join("spectrum_summary.json"), &summary)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.plot {
        let grid = state.u.grid();
        let xs = grid.nodes();
        let series: Vec<(String, Vec<f64>)> = spec
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("w{}", i + 1), p.vector.values().to_vec()))
            .collect();
        let refs: Vec<(&str, &[f64])> = series
            .iter()
            .map(|(n, v)| (n.as_str(), v.as_slice()))
            .collect();
        output::svg_line_plot(
            &args.output.out_dir.join("spectrum_eigenfunctions.svg"),
            &format!("{} sector={sector_str}", describe(&prob, "spectrum")),
            &xs,
            &refs,
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PiconeArgs {
    /// Number of randomized admissible draws
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_picone(args: &PiconeArgs) -> Result<(), CliError> {
    args.output.validate()?;
    let file = load_config(&args.config)?;
    let draws = args.draws.or(file.draws).unwrap_or(50);
    let seed = args.seed.or(file.seed).unwrap_or(20240811);
    let suite = verify::picone_suite(draws, seed).map_err(compute_err)?;
    if args.output.want_csv() {
        output::write_csv(
            &args.output.out_dir.join("picone_draws.csv"),
            &format!("picone draws={draws} seed={seed}"),
            &["draw", "lhs", "rhs", "residual", "h_min"],
            suite.iter().enumerate().map(|(i, d)| {
                vec![i as f64, d.report.lhs, d.report.rhs, d.report.residual, d.report.h_min]
            }),
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    let worst_rel = suite
        .iter()
        .filter(|d| d.tight)
        .map(|d| d.report.residual / d.report.scale.max(1e-300))
        .fold(0.0f64, f64::max);
    let h_min = suite.iter().map(|d| d.report.h_min).fold(f64::INFINITY, f64::min);
    if args.output.want_json() {
        let summary = json!({
            "draws": draws,
            "seed": seed,
            "worst_relative_residual": json_number(worst_rel),
            "kernel_min": json_number(h_min),
            "tool_version": output::TOOL_VERSION,
        });
        output::write_json(&args.output.out_dir.join("picone_summary.json"), &summary)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.plot {
        // kernel-gap heatmap over the quadrant
        let m = 160;
        let xs: Vec<f64> = (1..=m).map(|i| 0.05 * i as f64).collect();
        let mut rows = Vec::new();
        for j in 1..=m {
            let y = 0.05 * j as f64;
            rows.push(
                xs.iter()
                    .map(|&x| {
                        if (x - y).abs() < 1e-9 {
                            0.0
                        } else {
                            kernel_gap(x, y, 0.5).unwrap_or(0.0).min(5.0)
                        }
                    })
                    .collect::<Vec<f64>>(),
            );
        }
        let ts_axis: Vec<f64> = (1..=m).map(|j| 0.05 * j as f64).collect();
        output::svg_heatmap(
            &args.output.out_dir.join("picone_kernel.svg"),
            "reflection-difference kernel gap (s = 1/2, clipped at 5)",
            &xs,
            &ts_axis,
            &rows,
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExtendArgs {
    /// lorentzian, torsion, or groundstate
    #[arg(long)]
    pub trace: Option<String>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_extend(args: &ExtendArgs) -> Result<(), CliError> {
    args.output.validate()?;
    let (prob, file) = args.problem.resolve()?;
    let trace_name = args
        .trace
        .clone()
        .or(file.trace)
        .unwrap_or_else(|| "lorentzian".into());
    let (trace, op) = match trace_name.as_str() {
        "lorentzian" => {
            let grid = Grid1D::line(prob.l.max(60.0), prob.n.max(4097))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let op = FracOp::assemble(grid, prob.s).map_err(compute_err)?;
            (
                grid.sample(|x| 1.0 / (1.0 + x * x), Parity::Even)
                    .map_err(compute_err)?,
                op,
            )
        }
        "torsion" => {
            let grid = Grid1D::ball(prob.n).map_err(|e| CliError::Config(e.to_string()))?;
            let op = FracOp::assemble(grid, prob.s).map_err(compute_err)?;
            (
                grid.sample(|x| (1.0 - x * x).max(0.0).powf(prob.s), Parity::Even)
                    .map_err(compute_err)?,
                op,
            )
        }
        "groundstate" => {
            let op = FracOp::assemble(prob.grid, prob.s).map_err(compute_err)?;
            let state =
                groundstate::solve_with(&op, prob.lambda, prob.p, &SolveOptions::default())
                    .map_err(compute_err)?;
            (state.u, op)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown trace '{other}' (expected lorentzian, torsion, or groundstate)"
            )))
        }
    };
    let grid = *trace.grid();
    let window = match grid.kind() {
        DomainKind::Ball => 8.0,
        DomainKind::Line => grid.half_width().min(8.0),
    };
    let step = (2.0 * window / 320.0).max(grid.spacing());
    let kmax = (window / step) as i64;
    let xs: Vec<f64> = (-kmax..=kmax).map(|k| k as f64 * step).collect();
    let ts_levels = geometric_levels(1e-4, 30.0, 0.7);
    let field = extend(&trace, prob.s, &xs, &ts_levels).map_err(compute_err)?;

    // divergence residual on a uniform interior box
    let box_ts: Vec<f64> = (0..=100).map(|k| 0.1 + 0.049 * k as f64).collect();
    let box_field = extend(&trace, prob.s, &xs, &box_ts).map_err(compute_err)?;
    let residual = pde_residual(&box_field).map_err(compute_err)?;

    // weighted normal derivative against the operator, on an interior window
    // where the reference does not degenerate
    let nd_window = match grid.kind() {
        DomainKind::Ball => 0.9,
        DomainKind::Line => 3.0,
    };
    let nd_ts = normal_derivative_levels(grid.spacing());
    let nd_xs: Vec<f64> = grid
        .nodes()
        .into_iter()
        .filter(|x| x.abs() <= nd_window)
        .collect();
    let nd_field = extend(&trace, prob.s, &nd_xs, &nd_ts).map_err(compute_err)?;
    let nd = normal_derivative(&nd_field, prob.s).map_err(compute_err)?;
    let av = op.apply(&trace).map_err(compute_err)?;
    let d_s = fraclab_core::special::extension_constant(prob.s).map_err(compute_err)?;
    let mut nd_sup = 0.0f64;
    let mut ref_sup = 0.0f64;
    for (k, &x) in nd_xs.iter().enumerate() {
        let i = ((x + grid.half_width()) / grid.spacing()).round() as usize;
        nd_sup = nd_sup.max((d_s * nd.limit[k] - av.values()[i]).abs());
        ref_sup = ref_sup.max(av.values()[i].abs());
    }

    if args.output.want_csv() {
        output::write_csv(
            &args.output.out_dir.join("extend_field.csv"),
            &format!("extend trace={trace_name} s={}", prob.s),
            &["x", "t", "w"],
            field.ts.iter().enumerate().flat_map(|(j, &t)| {
                let row = &field.values[j];
                field
                    .xs
                    .iter()
                    .zip(row.iter())
                    .map(move |(&x, &w)| vec![x, t, w])
                    .collect::<Vec<_>>()
            }),
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.want_json() {
        let summary = json!({
            "problem": problem_json(&prob),
            "trace": trace_name,
            "pde_residual": json_number(residual),
            "field_max": json_number(field.max_abs()),
            "normal_derivative_consistency": json_number(nd_sup / ref_sup.max(1e-300)),
            "normal_derivative_stability": json_number(nd.stability),
        });
        output::write_json(&args.output.out_dir.join("extend_summary.json"), &summary)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.plot {
        output::svg_heatmap(
            &args.output.out_dir.join("extend_field.svg"),
            &format!("extension field, trace={trace_name}, s={}", prob.s),
            &field.xs,
            &field.ts,
            &field.values,
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct BranchArgs {
    #[arg(long)]
    pub p_start: Option<f64>,
    #[arg(long)]
    pub p_end: Option<f64>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_branch(args: &BranchArgs) -> Result<(), CliError> {
    args.output.validate()?;
    let (prob, file) = args.problem.resolve()?;
    let p_start = args.p_start.or(file.p_start).unwrap_or(1.2);
    let p_end = args.p_end.or(file.p_end).unwrap_or(4.0);
    if prob.domain != DomainKind::Ball {
        return Err(CliError::Config("branch sweeps run on the ball domain".into()));
    }
    let branch = continuation::trace_branch(
        prob.s,
        prob.lambda,
        p_start,
        p_end,
        prob.grid,
        &BranchOptions::default(),
    )
    .map_err(|e| match e {
        FracError::InvalidParameter(m) => CliError::Config(m),
        other => CliError::Compute(other.to_string()),
    })?;
    if args.output.want_csv() {
        output::write_csv(
            &args.output.out_dir.join("branch_points.csv"),
            &format!("branch s={} lambda={} p=[{p_start},{p_end}]", prob.s, prob.lambda),
            &["p", "u0", "psi1", "lambda1", "lambda2", "odd_gap", "even_gap"],
            branch.points.iter().map(|pt| {
                vec![
                    pt.p,
                    pt.state.peak(),
                    pt.state.psi_boundary.unwrap_or(f64::NAN),
                    pt.lambda1,
                    pt.lambda2_full,
                    pt.odd_gap,
                    pt.even_gap,
                ]
            }),
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.want_json() {
        let diag = continuation::bound_diagnostic(&branch).map_err(compute_err)?;
        let summary = json!({
            "problem": problem_json(&prob),
            "p_start": json_number(p_start),
            "p_end": json_number(p_end),
            "points": branch.points.len(),
            "complete": branch.complete(),
            "failure_at": branch.failure_at.map(json_number),
            "bifurcation_at": branch.bifurcation_at.map(json_number),
            "accepted": branch.stats.accepted,
            "halvings": branch.stats.halvings,
            "doublings": branch.stats.doublings,
            "sup_ratio": json_number(diag.sup_ratio),
            "lower_bound_margin": json_number(diag.lower_bound_margin),
            "rescaled_peak_ok": diag.rescaled_peak_ok,
        });
        output::write_json(&args.output.out_dir.join("branch_summary.json"), &summary)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if args.output.plot {
        let ps: Vec<f64> = branch.points.iter().map(|pt| pt.p).collect();
        let u0: Vec<f64> = branch.points.iter().map(|pt| pt.state.peak()).collect();
        let l2: Vec<f64> = branch.points.iter().map(|pt| pt.lambda2_full).collect();
        let odd: Vec<f64> = branch.points.iter().map(|pt| pt.odd_gap).collect();
        output::svg_line_plot(
            &args.output.out_dir.join("branch_diagram.svg"),
            &format!("branch s={} lambda={}", prob.s, prob.lambda),
            &ps,
            &[("u(0)", &u0), ("Lambda_2", &l2), ("odd gap", &odd)],
        )
        .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    if !branch.complete() {
        return Err(CliError::Compute(format!(
            "branch terminated early at p = {:.4}",
            branch.failure_at.unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run only criteria whose name contains this pattern (or a numeric id)
    #[arg(long)]
    pub only: Option<String>,
    /// Multiplies every tolerance; 0 forces failure
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    args.output.validate()?;
    if args.tolerance_scale < 0.0 {
        return Err(CliError::Config("tolerance scale must be nonnegative".into()));
    }
    let report = verify::run_verify(args.only.as_deref(), args.tolerance_scale, false);
    if report.results.is_empty() {
        return Err(CliError::Config(format!(
            "no criterion matches '{}'",
            args.only.clone().unwrap_or_default()
        )));
    }
    let value = json!({
        "tool_version": output::TOOL_VERSION,
        "tolerance_scale": json_number(args.tolerance_scale),
        "all_passed": report.all_passed,
        "criteria": report
            .results
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "name": r.name,
                    "passed": r.passed,
                    "details": r.details,
                })
            })
            .collect::<Vec<_>>(),
    });
    output::write_json(&args.output.out_dir.join("verify_report.json"), &value)
        .map_err(|e| CliError::Compute(e.to_string()))?;
    if !report.all_passed {
        let failures = report.results.iter().filter(|r| !r.passed).count();
        return Err(CliError::VerifyFailed(failures));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Picone(a) => cmd_picone(a),
        Command::Extend(a) => cmd_extend(a),
        Command::Branch(a) => cmd_branch(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Honor the thread cap from the environment before any parallel work runs.
pub fn init_threads() {
    if let Ok(value) = std::env::var("FRACLAB_THREADS") {
        if let Ok(k) = value.parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}
