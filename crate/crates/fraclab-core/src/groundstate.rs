//! Damped-Newton solvers for the positive even ground states on the interval
//! and the truncated line, with residual certification and multistart
//! uniqueness probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{FracError, Result};
use crate::extension::frac_boundary_derivative;
use crate::grid::{DomainKind, Grid1D, GridFunction, Parity};
use crate::op::{FracOp, Sector};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Sup-norm residual target over interior nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial guess on the full grid (even); defaults to the scaled first
    /// Dirichlet eigenfunction.
    pub initial: Option<GridFunction>,
    /// Zero-order coefficient for line solves (the standard normalization
    /// fixes it to 1 by scaling).
    pub lambda_line: f64,
    /// Re-solve on a doubled domain and flag the state if u(0) moves by more
    /// than `truncation_tol` (line only).
    pub check_truncation: bool,
    pub truncation_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            initial: None,
            lambda_line: 1.0,
            check_truncation: false,
            truncation_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub u: GridFunction,
    pub s: f64,
    pub lambda: f64,
    pub p: f64,
    pub domain_kind: DomainKind,
    pub residual_norm: f64,
    /// Fractional boundary derivative at x = 1 (ball solves only).
    pub psi_boundary: Option<f64>,
    pub newton_iters: usize,
    /// Set when doubling the line truncation moved u(0) beyond tolerance.
    pub truncation_flag: bool,
    /// Measured algebraic decay exponent of the tail (line solves only).
    pub decay_exponent: Option<f64>,
}

impl GroundState {
    pub fn peak(&self) -> f64 {
        self.u.values()[self.u.grid().mid()]
    }

    /// Profile rescaled by its own peak: v(x) = u(x / b^((p-1)/(2s))) / b with
    /// b the sup norm, so v(0) = 1 exactly.
    pub fn rescaled_profile(&self) -> GridFunction {
        let b = self.peak();
        let stretch = b.powf((self.p - 1.0) / (2.0 * self.s));
        let grid = *self.u.grid();
        let values = (0..grid.len())
            .map(|i| self.u.eval(grid.node(i) / stretch) / b)
            .collect();
        let mut out = GridFunction::new(grid, values, Parity::Even).expect("even by symmetry");
        out.symmetrize();
        out
    }
}

/// Admissible exponent check: p must be subcritical for the order s.
pub fn check_subcritical(s: f64, p: f64) -> Result<()> {
    if !(p > 1.0) {
        return Err(FracError::InvalidParameter(format!(
            "nonlinearity exponent must exceed 1, got {p}"
        )));
    }
    let cap = crate::continuation::critical_exponent(s)?;
    if p >= cap {
        return Err(FracError::InvalidParameter(format!(
            "p = {p} is not subcritical for s = {s} (cap {cap})"
        )));
    }
    Ok(())
}

/// Solve the Dirichlet problem on the interval: (-Delta)^s u + lambda u = u^p,
/// u > 0 inside, u = 0 outside.
pub fn solve_ball(s: f64, lambda: f64, p: f64, grid: Grid1D, opts: &SolveOptions) -> Result<GroundState> {
    if grid.kind() != DomainKind::Ball {
        return Err(FracError::InvalidParameter("solve_ball needs a ball grid".into()));
    }
    check_subcritical(s, p)?;
    let op = FracOp::assemble(grid, s)?;
    solve_with(&op, lambda, p, opts)
}

/// Solve the line problem on the truncated domain with the standard
/// normalization (the zero-order coefficient defaults to 1).
pub fn solve_line(s: f64, p: f64, grid: Grid1D, opts: &SolveOptions) -> Result<GroundState> {
    if grid.kind() != DomainKind::Line {
        return Err(FracError::InvalidParameter("solve_line needs a line grid".into()));
    }
    check_subcritical(s, p)?;
    let op = FracOp::assemble(grid, s)?;
    solve_with(&op, opts.lambda_line, p, opts)
}

/// Shared driver; `lambda` is the zero-order coefficient on either domain.
pub fn solve_with(op: &FracOp, lambda: f64, p: f64, opts: &SolveOptions) -> Result<GroundState> {
    match solve_once(op, lambda, p, opts) {
        Ok(state) => Ok(state),
        Err(FracError::NonConvergence { .. })
            if opts.initial.is_none() && lambda != 0.0 && op.grid().kind() == DomainKind::Ball =>
        {
            // warm-started homotopy in the zero-order coefficient; the
            // one-mode amplitude guess only lands in the Newton basin for
            // moderate lambda
            let mut current = solve_once(op, 0.0, p, opts)?;
            let mut reached = 0.0;
            let mut step = lambda / 4.0;
            while reached != lambda {
                let next = if (lambda - reached).abs() <= step.abs() {
                    lambda
                } else {
                    reached + step
                };
                let warm = SolveOptions {
                    initial: Some(current.u.clone()),
                    check_truncation: false,
                    ..opts.clone()
                };
                match solve_once(op, next, p, &warm) {
                    Ok(state) => {
                        current = state;
                        reached = next;
                    }
                    Err(e) => {
                        step *= 0.5;
                        if step.abs() < 1e-3 {
                            return Err(e);
                        }
                    }
                }
            }
            Ok(current)
        }
        Err(e) => Err(e),
    }
}

fn solve_once(op: &FracOp, lambda: f64, p: f64, opts: &SolveOptions) -> Result<GroundState> {
    let grid = *op.grid();
    let s = op.order();
    if lambda < 0.0 {
        let (l1, _) = op.dirichlet_ground_pair()?;
        if lambda <= -l1 + 1e-6 {
            return Err(FracError::InvalidParameter(format!(
                "lambda = {lambda} must exceed -lambda_1 = {:.6} (with margin)",
                -l1
            )));
        }
    }
    let sys = op.sector_system(Sector::Even);
    let m = sys.indices.len();

    let mut y = nalgebra::DVector::<f64>::zeros(m);
    match &opts.initial {
        Some(g0) => {
            if *g0.grid() != grid {
                return Err(FracError::GridMismatch("initial guess grid".into()));
            }
            for (r, &i) in sys.indices.iter().enumerate() {
                y[r] = g0.values()[i];
            }
        }
        None => {
            let g0 = default_initial(op, lambda, p)?;
            for (r, &i) in sys.indices.iter().enumerate() {
                y[r] = g0.values()[i];
            }
        }
    }

    let (y, iters) = newton_even(&sys.matrix, lambda, p, y, opts)?;

    // positivity is a hard contract: touching zero inside means the iteration
    // escaped the positive cone
    if y.iter().any(|&v| v <= 0.0) {
        return Err(FracError::NonConvergence {
            iterations: iters,
            residual: f64::NAN,
            last_iterate: y.iter().copied().collect(),
        });
    }

    let coeffs: Vec<f64> = y.iter().copied().collect();
    let u = op.unfold(&sys, &coeffs);

    // full-grid residual certificate, recomputed through the unfolded path
    let residual_norm = residual_with(op, &u, lambda, p)?;
    if !(residual_norm <= opts.tol.max(1e-9)) {
        return Err(FracError::NonConvergence {
            iterations: iters,
            residual: residual_norm,
            last_iterate: u.values().to_vec(),
        });
    }

    let psi_boundary = match grid.kind() {
        DomainKind::Ball => Some(frac_boundary_derivative(&u, s)?.psi_right),
        DomainKind::Line => None,
    };

    let decay_exponent = match grid.kind() {
        DomainKind::Line => Some(measure_decay(&u)),
        DomainKind::Ball => None,
    };

    let mut truncation_flag = false;
    if opts.check_truncation && grid.kind() == DomainKind::Line {
        let wide = Grid1D::line(2.0 * grid.half_width(), 2 * grid.len() - 1)?;
        let wide_op = FracOp::assemble(wide, s)?;
        let mut wide_opts = opts.clone();
        wide_opts.check_truncation = false;
        wide_opts.initial = None;
        if let Ok(state) = solve_with(&wide_op, lambda, p, &wide_opts) {
            let u0 = u.values()[grid.mid()];
            let shift = (state.peak() - u0).abs() / u0.abs().max(1e-300);
            truncation_flag = shift > opts.truncation_tol;
        }
    }

    Ok(GroundState {
        u,
        s,
        lambda,
        p,
        domain_kind: grid.kind(),
        residual_norm,
        psi_boundary,
        newton_iters: iters,
        truncation_flag,
        decay_exponent,
    })
}

/// Default initial guess. On the interval: the first Dirichlet eigenfunction
/// scaled by the one-mode balance amplitude. On the line: a localized bump
/// with the solitary wave's algebraic decay |x|^(-1-2s) and the zero-order
/// amplitude/width scaling (a broad eigenfunction of the truncated box leads
/// Newton toward the spurious box-filling state instead).
pub fn default_initial(op: &FracOp, lambda: f64, p: f64) -> Result<GridFunction> {
    let grid = *op.grid();
    match grid.kind() {
        DomainKind::Ball => {
            let (l1, e1) = op.dirichlet_ground_pair()?;
            let amp = (l1 + lambda).powf(1.0 / (p - 1.0));
            let mut g = e1;
            for v in g.values_mut() {
                *v *= amp;
            }
            Ok(g)
        }
        DomainKind::Line => {
            if !(lambda > 0.0) {
                return Err(FracError::InvalidParameter(
                    "line solves need a positive zero-order coefficient".into(),
                ));
            }
            let s = op.order();
            let amp = (2.0 * lambda).powf(1.0 / (p - 1.0));
            let width = lambda.powf(-1.0 / (2.0 * s));
            let expo = (1.0 + 2.0 * s) / 2.0;
            let mut g = grid.sample(
                |x| {
                    let z = x / width;
                    amp * (1.0 + z * z).powf(-expo)
                },
                Parity::Even,
            )?;
            // honor the exterior condition at the truncation boundary
            let n = grid.len();
            g.values_mut()[0] = 0.0;
            g.values_mut()[n - 1] = 0.0;
            Ok(g)
        }
    }
}

fn newton_even(
    a: &nalgebra::DMatrix<f64>,
    lambda: f64,
    p: f64,
    mut y: nalgebra::DVector<f64>,
    opts: &SolveOptions,
) -> Result<(nalgebra::DVector<f64>, usize)> {
    let m = y.len();
    let f_of = |z: &nalgebra::DVector<f64>| -> nalgebra::DVector<f64> {
        let mut f = a * z;
        for i in 0..m {
            f[i] += lambda * z[i] - z[i].max(0.0).powf(p);
        }
        f
    };
    let mut f = f_of(&y);
    let mut merit = f.norm_squared();
    for iter in 0..opts.max_iter {
        if f.amax() <= opts.tol {
            return Ok((y, iter));
        }
        let mut jac = a.clone();
        for i in 0..m {
            jac[(i, i)] += lambda - p * y[i].max(0.0).powf(p - 1.0);
        }
        let lu = jac.lu();
        let step = lu.solve(&(-&f)).ok_or(FracError::NonConvergence {
            iterations: iter,
            residual: f.amax(),
            last_iterate: y.iter().copied().collect(),
        })?;
        // Armijo backtracking on the squared residual; the trial is clipped
        // at zero for merit evaluation only, the accepted step is not.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &y + t * &step;
            let clipped = trial.map(|v| v.max(0.0));
            let f_trial = f_of(&clipped);
            let m_trial = f_trial.norm_squared();
            if m_trial <= (1.0 - 1e-4 * t) * merit {
                y = trial;
                f = f_of(&y);
                merit = f.norm_squared();
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(FracError::NonConvergence {
                iterations: iter,
                residual: f.amax(),
                last_iterate: y.iter().copied().collect(),
            });
        }
    }
    if f.amax() <= opts.tol {
        let iters = opts.max_iter;
        return Ok((y, iters));
    }
    Err(FracError::NonConvergence {
        iterations: opts.max_iter,
        residual: f.amax(),
        last_iterate: y.iter().copied().collect(),
    })
}

/// Recompute the interior sup-norm residual of the semilinear equation from
/// scratch for a given profile.
pub fn residual_with(op: &FracOp, u: &GridFunction, lambda: f64, p: f64) -> Result<f64> {
    let au = op.apply(u)?;
    let grid = u.grid();
    let mut worst = 0.0f64;
    for i in grid.interior() {
        let ui = u.values()[i];
        let r = au.values()[i] + lambda * ui - ui.max(0.0).powf(p);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Recompute a state's residual certificate from scratch (operator included).
pub fn residual(state: &GroundState) -> Result<f64> {
    let op = FracOp::assemble(*state.u.grid(), state.s)?;
    residual_with(&op, &state.u, state.lambda, state.p)
}

/// Measured tail decay exponent: log-ratio of u between 0.4 L and 0.8 L.
fn measure_decay(u: &GridFunction) -> f64 {
    let l = u.grid().half_width();
    let (a, b) = (u.eval(0.4 * l), u.eval(0.8 * l));
    if a <= 0.0 || b <= 0.0 {
        return f64::NAN;
    }
    (a / b).ln() / 2f64.ln()
}

#[derive(Debug)]
pub struct MultistartOutcome {
    pub states: Vec<GroundState>,
    pub nonconverged: usize,
    pub total_starts: usize,
}

/// Run Newton from randomized positive perturbations of the default initial
/// guess and deduplicate the converged solutions by relative L2 distance.
pub fn multistart(
    s: f64,
    lambda: f64,
    p: f64,
    grid: Grid1D,
    n_starts: usize,
    seed: u64,
) -> Result<MultistartOutcome> {
    let op = FracOp::assemble(grid, s)?;
    check_subcritical(s, p)?;
    let base = default_initial(&op, lambda, p)?;
    let mid = grid.mid();
    let n = grid.len();

    let runs: Vec<Result<GroundState>> = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let mut guess = vec![0.0; n];
            if k == 0 {
                guess.copy_from_slice(base.values());
                guess[0] = 0.0;
                guess[n - 1] = 0.0;
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
                let amp = rng.random_range(0.3..3.0);
                for i in mid..n - 1 {
                    let jitter = 1.0 + 0.5 * rng.random_range(-1.0..1.0);
                    let v = amp * base.values()[i] * jitter;
                    guess[i] = v;
                    guess[n - 1 - i] = v;
                }
            }
            let initial = GridFunction::new(grid, guess, Parity::Even)?;
            let opts = SolveOptions { initial: Some(initial), ..SolveOptions::default() };
            solve_with(&op, lambda, p, &opts)
        })
        .collect();

    let mut states: Vec<GroundState> = Vec::new();
    let mut nonconverged = 0usize;
    for run in runs {
        match run {
            Ok(state) => {
                let duplicate = states.iter().any(|prev| {
                    let diff: f64 = prev
                        .u
                        .values()
                        .iter()
                        .zip(state.u.values())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                        * grid.spacing().sqrt();
                    diff / prev.u.norm_l2().max(1.0) <= 1e-6
                });
                if !duplicate {
                    states.push(state);
                }
            }
            Err(_) => nonconverged += 1,
        }
    }
    Ok(MultistartOutcome { states, nonconverged, total_starts: n_starts })
}
