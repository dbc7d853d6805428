//! Continuation of the ground-state branch in the nonlinearity exponent,
//! with spectral-gap monitoring and uniform-bound diagnostics.

use crate::error::{FracError, Result};
use crate::grid::{DomainKind, Grid1D, GridFunction, Parity};
use crate::groundstate::{self, GroundState, SolveOptions};
use crate::op::{FracOp, Sector};
use crate::spectrum::weighted_eigs;

/// Supremal admissible nonlinearity exponent for order s: one less than the
/// critical Sobolev exponent, infinite once 2s >= 1.
pub fn critical_exponent(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(FracError::InvalidParameter(format!(
            "fractional order s must lie in (0,1), got {s}"
        )));
    }
    if 2.0 * s >= 1.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(2.0 / (1.0 - 2.0 * s) - 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct BranchOptions {
    pub dp_init: f64,
    pub dp_min: f64,
    pub dp_max: f64,
    /// A corrector converging within this many Newton steps counts as fast.
    pub fast_steps: usize,
    /// Eigenvalues per sector recorded at each accepted point.
    pub eig_count: usize,
    /// Normalized distance |Lambda_k - p| below which the corrector's
    /// linearization is declared numerically singular.
    pub bifurcation_threshold: f64,
    /// Cap on p_end when the critical exponent is infinite.
    pub p_cap: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            dp_init: 0.05,
            dp_min: 1e-4,
            dp_max: 0.2,
            fast_steps: 8,
            eig_count: 4,
            bifurcation_threshold: 1e-4,
            p_cap: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub p: f64,
    pub state: GroundState,
    pub lambda1: f64,
    pub lambda2_full: f64,
    pub odd_gap: f64,
    /// min over even eigenvalues beyond the first of (Lambda_k - p).
    pub even_gap: f64,
    /// min over recorded full-sector eigenvalues of |Lambda_k - p|.
    pub min_distance_to_p: f64,
}

#[derive(Debug, Clone)]
pub struct StepStats {
    pub accepted: usize,
    pub halvings: usize,
    pub doublings: usize,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub s: f64,
    pub lambda: f64,
    pub domain_kind: DomainKind,
    pub points: Vec<BranchPoint>,
    /// Set to the exponent where the linearization came within the
    /// bifurcation threshold of singular, if that ever happened.
    pub bifurcation_at: Option<f64>,
    /// Set when the corrector failed and the branch is partial.
    pub failure_at: Option<f64>,
    pub stats: StepStats,
}

impl Branch {
    pub fn complete(&self) -> bool {
        self.failure_at.is_none()
    }
}

fn analyze_point(
    op: &FracOp,
    state: &GroundState,
    opts: &BranchOptions,
) -> Result<BranchPoint> {
    // TODO: cache the folded sector matrices across branch points; they
    // depend only on (grid, s), not on p
    let even = weighted_eigs(op, state, Sector::Even, opts.eig_count)?;
    let odd = weighted_eigs(op, state, Sector::Odd, opts.eig_count.min(3))?;
    let p = state.p;
    let mut full: Vec<f64> = even.values().into_iter().chain(odd.values()).collect();
    full.sort_by(f64::total_cmp);
    let lambda1 = full[0];
    let lambda2_full = full[1];
    let odd_gap = odd.values()[0] - p;
    let even_gap = even
        .values()
        .iter()
        .skip(1)
        .map(|v| v - p)
        .fold(f64::INFINITY, f64::min);
    let min_distance_to_p = full
        .iter()
        .map(|v| (v - p).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(BranchPoint {
        p,
        state: state.clone(),
        lambda1,
        lambda2_full,
        odd_gap,
        even_gap,
        min_distance_to_p,
    })
}

/// Sweep the ground-state branch from p_start to p_end with a secant
/// predictor and damped-Newton corrector, recording the spectral gaps at
/// every accepted point.
pub fn trace_branch(
    s: f64,
    lambda: f64,
    p_start: f64,
    p_end: f64,
    grid: Grid1D,
    opts: &BranchOptions,
) -> Result<Branch> {
    let cap = critical_exponent(s)?.min(opts.p_cap);
    if !(p_start > 1.0) || p_end < p_start || p_end > cap {
        return Err(FracError::InvalidParameter(format!(
            "need 1 < p_start <= p_end <= {cap}, got [{p_start}, {p_end}]"
        )));
    }
    let op = FracOp::assemble(grid, s)?;
    let solve_opts = SolveOptions { max_iter: 30, ..SolveOptions::default() };
    let first = groundstate::solve_with(&op, lambda, p_start, &solve_opts)?;
    let mut points = vec![analyze_point(&op, &first, opts)?];
    let mut stats = StepStats { accepted: 1, halvings: 0, doublings: 0 };
    let mut bifurcation_at =
        (points[0].min_distance_to_p < opts.bifurcation_threshold).then_some(p_start);
    let mut failure_at = None;

    if p_start == p_end {
        return Ok(Branch {
            s,
            lambda,
            domain_kind: grid.kind(),
            points,
            bifurcation_at,
            failure_at,
            stats,
        });
    }

    let corrector_opts = SolveOptions { max_iter: opts.fast_steps, ..SolveOptions::default() };
    let mut dp = opts.dp_init.min(p_end - p_start);
    let mut prev: Option<(f64, GridFunction)> = None;
    let mut fast_streak = 0usize;
    let mut p_current = p_start;

    while p_current < p_end {
        let p_next = (p_current + dp).min(p_end);
        let current = &points.last().expect("nonempty").state;
        // secant predictor in p
        let guess = match &prev {
            Some((p_prev, u_prev)) => {
                let ratio = (p_next - p_current) / (p_current - p_prev);
                let mut vals = current.u.values().to_vec();
                for (v, (c, q)) in vals
                    .iter_mut()
                    .zip(current.u.values().iter().zip(u_prev.values()))
                {
                    *v = c + ratio * (c - q);
                }
                GridFunction::new(grid, vals, Parity::Even)?
            }
            None => current.u.clone(),
        };
        let attempt = groundstate::solve_with(
            &op,
            lambda,
            p_next,
            &SolveOptions { initial: Some(guess), ..corrector_opts.clone() },
        );
        match attempt {
            Ok(state) => {
                prev = Some((p_current, points.last().unwrap().state.u.clone()));
                let point = analyze_point(&op, &state, opts)?;
                if bifurcation_at.is_none()
                    && point.min_distance_to_p < opts.bifurcation_threshold
                {
                    bifurcation_at = Some(p_next);
                }
                points.push(point);
                stats.accepted += 1;
                p_current = p_next;
                fast_streak += 1;
                if fast_streak >= 3 && dp < opts.dp_max {
                    dp = (2.0 * dp).min(opts.dp_max);
                    stats.doublings += 1;
                    fast_streak = 0;
                }
            }
            Err(_) => {
                fast_streak = 0;
                dp *= 0.5;
                stats.halvings += 1;
                if dp < opts.dp_min {
                    failure_at = Some(p_next);
                    break;
                }
            }
        }
    }

    Ok(Branch {
        s,
        lambda,
        domain_kind: grid.kind(),
        points,
        bifurcation_at,
        failure_at,
        stats,
    })
}

/// Deduplicated count of distinct positive solutions found by the multistart
/// probe.
pub fn uniqueness_probe(
    s: f64,
    lambda: f64,
    p: f64,
    grid: Grid1D,
    n_starts: usize,
    seed: u64,
) -> Result<usize> {
    if n_starts == 0 {
        return Ok(0);
    }
    let outcome = groundstate::multistart(s, lambda, p, grid, n_starts, seed)?;
    Ok(outcome.states.len())
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Ratio of the largest to the median sup norm along the branch.
    pub sup_ratio: f64,
    /// Same ratio after removing the forced amplitude scaling
    /// (lambda_1 + lambda)^(1/(p-1)); the raw sup norm legitimately spans
    /// decades as p approaches 1.
    pub normalized_sup_ratio: f64,
    pub bounded: bool,
    /// Coercivity display min(1, 1 + lambda/lambda_1) [u]^2 <= int u^(p+1)
    /// at every point (within quadrature slack; equality at lambda = 0).
    pub lower_bound_ok: bool,
    /// Worst relative margin of the display across the branch.
    pub lower_bound_margin: f64,
    /// Subcritical mass floor min over the branch of (int u^(2*s))^((p-1)/2*s),
    /// only populated when the critical exponent is finite.
    pub critical_mass_floor: Option<f64>,
    /// v(0) = 1 for the peak-rescaled profile at every point.
    pub rescaled_peak_ok: bool,
}

/// Uniform-bound diagnostics along a branch: no sup-norm blow-up, the
/// Poincare-Sobolev lower-bound display, and the exactness of the peak
/// rescaling.
pub fn bound_diagnostic(branch: &Branch) -> Result<BoundReport> {
    if branch.points.is_empty() {
        return Err(FracError::InsufficientData("empty branch".into()));
    }
    let grid = *branch.points[0].state.u.grid();
    let op = FracOp::assemble(grid, branch.s)?;
    let (l1, _) = op.dirichlet_ground_pair()?;
    let coercivity = 1f64.min(1.0 + branch.lambda / l1);

    let mut sups: Vec<f64> = branch.points.iter().map(|pt| pt.state.peak()).collect();
    sups.sort_by(f64::total_cmp);
    let median = sups[sups.len() / 2];
    let sup_ratio = sups[sups.len() - 1] / median;
    let mut normalized: Vec<f64> = branch
        .points
        .iter()
        .map(|pt| pt.state.peak() / (l1 + branch.lambda).powf(1.0 / (pt.p - 1.0)))
        .collect();
    normalized.sort_by(f64::total_cmp);
    let normalized_sup_ratio = normalized[normalized.len() - 1] / normalized[normalized.len() / 2];

    let crit = critical_exponent(branch.s)?;
    let mut lower_bound_margin = f64::INFINITY;
    let mut mass_floor = f64::INFINITY;
    let mut rescaled_peak_ok = true;
    for pt in &branch.points {
        let u = &pt.state.u;
        let energy = op.bilinear(u, u)?;
        let u_pp1 = u.map(|v| v.max(0.0).powf(pt.p + 1.0)).integrate();
        // at lambda = 0 the display is an equality for exact solutions, so
        // the margin is zero up to quadrature differences
        lower_bound_margin =
            lower_bound_margin.min((u_pp1 - coercivity * energy) / u_pp1.max(1e-300));
        if crit.is_finite() {
            let two_star = crit + 1.0;
            let mass = u.map(|v| v.max(0.0).powf(two_star)).integrate();
            mass_floor = mass_floor.min(mass.powf((pt.p - 1.0) / two_star));
        }
        if pt.state.rescaled_profile().values()[grid.mid()] != 1.0 {
            rescaled_peak_ok = false;
        }
    }

    Ok(BoundReport {
        sup_ratio,
        normalized_sup_ratio,
        bounded: normalized_sup_ratio <= 10.0,
        lower_bound_ok: lower_bound_margin >= -1e-6,
        lower_bound_margin,
        critical_mass_floor: crit.is_finite().then_some(mass_floor),
        rescaled_peak_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponent_values() {
        assert!((critical_exponent(0.25).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(critical_exponent(0.5).unwrap(), f64::INFINITY);
        assert_eq!(critical_exponent(0.75).unwrap(), f64::INFINITY);
        assert!(critical_exponent(1.2).is_err());
    }

    #[test]
    fn probe_with_no_starts_counts_zero() {
        let grid = Grid1D::ball(129).unwrap();
        assert_eq!(uniqueness_probe(0.5, 0.0, 2.0, grid, 0, 1).unwrap(), 0);
    }

    #[test]
    fn single_point_branch() {
        let grid = Grid1D::ball(257).unwrap();
        let branch =
            trace_branch(0.5, 0.0, 2.0, 2.0, grid, &BranchOptions::default()).unwrap();
        assert_eq!(branch.points.len(), 1);
        assert!(branch.complete());
        assert!((branch.points[0].lambda1 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn short_sweep_tracks_gaps_and_continuity() {
        let grid = Grid1D::ball(257).unwrap();
        let branch =
            trace_branch(0.5, 0.0, 1.6, 2.4, grid, &BranchOptions::default()).unwrap();
        assert!(branch.complete());
        assert!(branch.points.len() >= 4);
        assert!(branch.bifurcation_at.is_none());
        let mut last_p = 0.0;
        for pt in &branch.points {
            assert!(pt.p > last_p, "p must increase along the branch");
            last_p = pt.p;
            assert!((pt.lambda1 - 1.0).abs() < 5e-3, "Lambda_1 = {}", pt.lambda1);
            assert!(pt.lambda2_full - pt.p > 0.0);
            assert!(pt.odd_gap > 0.0);
            assert!(pt.min_distance_to_p > 1e-4);
            assert!(pt.state.residual_norm <= 1e-9);
        }
        // no jumps: consecutive profiles stay close relative to the step
        for w in branch.points.windows(2) {
            let diff: f64 = w[0]
                .state
                .u
                .values()
                .iter()
                .zip(w[1].state.u.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dp = w[1].p - w[0].p;
            assert!(diff <= 5.0 * dp, "jump {diff} over dp {dp}");
        }

        let report = bound_diagnostic(&branch).unwrap();
        assert!(report.bounded);
        assert!(report.lower_bound_ok, "margin {}", report.lower_bound_margin);
        assert!(report.rescaled_peak_ok);
    }

    #[test]
    fn subcritical_mass_floor_reported_for_small_s() {
        let grid = Grid1D::ball(257).unwrap();
        let branch =
            trace_branch(0.25, 1.0, 1.8, 2.2, grid, &BranchOptions::default()).unwrap();
        assert!(branch.complete());
        let report = bound_diagnostic(&branch).unwrap();
        let floor = report.critical_mass_floor.unwrap();
        assert!(floor > 0.0);
    }

    #[test]
    fn branch_rejects_supercritical_targets() {
        let grid = Grid1D::ball(129).unwrap();
        assert!(trace_branch(0.25, 0.0, 1.5, 3.5, grid, &BranchOptions::default()).is_err());
        let empty = bound_diagnostic(&Branch {
            s: 0.5,
            lambda: 0.0,
            domain_kind: DomainKind::Ball,
            points: vec![],
            bifurcation_at: None,
            failure_at: None,
            stats: StepStats { accepted: 0, halvings: 0, doublings: 0 },
        });
        assert!(empty.is_err());
    }
}
