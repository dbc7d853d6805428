//! Weighted linearized eigenproblems in parity sectors: nondegeneracy gaps,
//! the translation-constrained gap on the line, Morse index, and the
//! derivative-positivity check.

use nalgebra::{DMatrix, DVector};

use crate::error::{FracError, Result};
use crate::grid::{DomainKind, GridFunction, Parity};
use crate::groundstate::GroundState;
use crate::op::{FracOp, Sector};

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub sector: Sector,
    pub vector: GridFunction,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub sector: Sector,
    pub pairs: Vec<Eigenpair>,
    pub s: f64,
    pub lambda: f64,
    pub p: f64,
}

impl SpectrumResult {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// The k smallest eigenvalues of the linearized weighted problem
/// (-Delta)^s w + lambda w = Lambda u^(p-1) w restricted to a parity sector,
/// with eigenvectors normalized against the weight: int u^(p-1) w^2 = 1.
pub fn weighted_eigs(
    op: &FracOp,
    state: &GroundState,
    sector: Sector,
    k: usize,
) -> Result<SpectrumResult> {
    if op.grid() != state.u.grid() {
        return Err(FracError::GridMismatch("state and operator grids differ".into()));
    }
    if k == 0 {
        return Err(FracError::InvalidParameter("need k >= 1 eigenvalues".into()));
    }
    let grid = *op.grid();
    let h = grid.spacing();
    let sys = op.sector_system(sector);
    let m = sys.indices.len();
    if k > m {
        return Err(FracError::InvalidParameter(format!(
            "requested {k} eigenvalues from a sector of dimension {m}"
        )));
    }
    let lambda = state.lambda;
    let pexp = state.p;

    // weight u^(p-1) at the sector's representative nodes; strictly positive
    // inside for a certified state
    let weight: Vec<f64> = sys
        .indices
        .iter()
        .map(|&i| state.u.values()[i].max(0.0).powf(pexp - 1.0))
        .collect();
    if weight.iter().any(|&w| !(w > 0.0)) {
        return Err(FracError::PreconditionFailed(
            "the weight u^(p-1) must be positive at interior nodes".into(),
        ));
    }

    // symmetric-definite reduction with D = sqrt(mult * weight)
    let d: Vec<f64> = (0..m).map(|r| (sys.mult[r] * weight[r]).sqrt()).collect();
    let mut c = DMatrix::<f64>::zeros(m, m);
    for r in 0..m {
        for q in 0..m {
            let b = sys.mult[r] * (sys.matrix[(r, q)] + if r == q { lambda } else { 0.0 });
            c[(r, q)] = b / (d[r] * d[q]);
        }
    }
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut pairs = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut coeffs: Vec<f64> = (0..m).map(|r| eig.eigenvectors[(r, idx)] / d[r]).collect();
        // normalize int u^(p-1) w^2 = h sum mult weight w^2 = 1
        let mass: f64 = (0..m)
            .map(|r| sys.mult[r] * weight[r] * coeffs[r] * coeffs[r])
            .sum::<f64>()
            * h;
        let scale = 1.0 / mass.sqrt();
        // deterministic sign: largest-magnitude coefficient positive
        let mut lead = 0usize;
        for r in 1..m {
            if coeffs[r].abs() > coeffs[lead].abs() {
                lead = r;
            }
        }
        let sign = if coeffs[lead] < 0.0 { -1.0 } else { 1.0 };
        for c in &mut coeffs {
            *c *= scale * sign;
        }
        pairs.push(Eigenpair {
            value: eig.eigenvalues[idx],
            sector,
            vector: op.unfold(&sys, &coeffs),
        });
    }
    Ok(SpectrumResult { sector, pairs, s: state.s, lambda, p: pexp })
}

/// Weighted pairing int u^(p-1) a b with the uniform quadrature matched to
/// the eigensolver's mass matrix.
pub fn weighted_dot(state: &GroundState, a: &GridFunction, b: &GridFunction) -> Result<f64> {
    a.same_grid(b)?;
    a.same_grid(&state.u)?;
    let h = a.grid().spacing();
    let p = state.p;
    Ok(h * a
        .values()
        .iter()
        .zip(b.values())
        .zip(state.u.values())
        .map(|((x, y), u)| x * y * u.max(0.0).powf(p - 1.0))
        .sum::<f64>())
}

/// Normalized weighted alignment |<a, b>_w| / (|a|_w |b|_w).
pub fn alignment(state: &GroundState, a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let ab = weighted_dot(state, a, b)?;
    let aa = weighted_dot(state, a, a)?;
    let bb = weighted_dot(state, b, b)?;
    Ok(ab.abs() / (aa * bb).sqrt())
}

/// Margin of the odd (antisymmetric) sector over the nonlinearity exponent:
/// min odd-sector eigenvalue minus p.
pub fn nonradial_gap(spec: &SpectrumResult) -> Result<f64> {
    if spec.sector != Sector::Odd {
        return Err(FracError::InvalidParameter(
            "the antisymmetric gap is defined on the odd sector".into(),
        ));
    }
    let min = spec
        .pairs
        .first()
        .ok_or_else(|| FracError::InsufficientData("empty spectrum".into()))?;
    Ok(min.value - spec.p)
}

/// Minimum of the Rayleigh quotient over odd functions orthogonal (in the
/// weighted pairing) to the translation mode u', minus p. The constraint is
/// enforced exactly by deflating the u' direction from the reduced problem.
pub fn constrained_gap(op: &FracOp, state: &GroundState) -> Result<(f64, GridFunction)> {
    if state.domain_kind != DomainKind::Line {
        return Err(FracError::InvalidParameter(
            "the constrained gap is posed on the line".into(),
        ));
    }
    let grid = *op.grid();
    let h = grid.spacing();
    let sys = op.sector_system(Sector::Odd);
    let m = sys.indices.len();
    let pexp = state.p;
    let lambda = state.lambda;
    let weight: Vec<f64> = sys
        .indices
        .iter()
        .map(|&i| state.u.values()[i].max(0.0).powf(pexp - 1.0))
        .collect();
    let d: Vec<f64> = (0..m).map(|r| (sys.mult[r] * weight[r]).sqrt()).collect();
    let mut c = DMatrix::<f64>::zeros(m, m);
    for r in 0..m {
        for q in 0..m {
            let b = sys.mult[r] * (sys.matrix[(r, q)] + if r == q { lambda } else { 0.0 });
            c[(r, q)] = b / (d[r] * d[q]);
        }
    }
    let c = 0.5 * (&c + c.transpose());

    // translation direction in reduced coordinates
    let du = state.u.derivative();
    let mut z = DVector::<f64>::zeros(m);
    for (r, &i) in sys.indices.iter().enumerate() {
        z[r] = du.values()[i] * d[r];
    }
    let z = &z / z.norm();

    // Householder basis of the orthogonal complement of z
    let mut hh = z.clone();
    hh[0] += if z[0] >= 0.0 { 1.0 } else { -1.0 };
    let hh = &hh / hh.norm();
    // Q = I - 2 hh hh^T maps e1 to -/+ z; columns 2..m span z-perp
    let mut q = DMatrix::<f64>::zeros(m, m - 1);
    for col in 1..m {
        for row in 0..m {
            let e = if row == col { 1.0 } else { 0.0 };
            q[(row, col - 1)] = e - 2.0 * hh[row] * hh[col];
        }
    }
    let reduced = q.transpose() * &c * &q;
    let reduced = 0.5 * (&reduced + reduced.transpose());
    let eig = reduced.symmetric_eigen();
    let mut best = 0;
    for i in 1..m - 1 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let lam_min = eig.eigenvalues[best];
    let y = &q * eig.eigenvectors.column(best);
    let mut coeffs: Vec<f64> = (0..m).map(|r| y[r] / d[r]).collect();
    let mass: f64 = (0..m)
        .map(|r| sys.mult[r] * weight[r] * coeffs[r] * coeffs[r])
        .sum::<f64>()
        * h;
    let scale = 1.0 / mass.sqrt();
    for cc in &mut coeffs {
        *cc *= scale;
    }
    let minimizer = op.unfold(&sys, &coeffs);
    Ok((lam_min - pexp, minimizer))
}

/// Morse index: the number of full-sector eigenvalues strictly below p.
/// Eigenvalues within 1e-3 of p are treated as sitting at p (the discrete
/// translation mode on the line lands a hair to either side) and do not
/// count. `spec` must contain enough eigenvalues to see past p.
pub fn morse_index(spec: &SpectrumResult, p: f64) -> Result<usize> {
    if spec.sector != Sector::Full {
        return Err(FracError::InvalidParameter(
            "the Morse index counts full-sector eigenvalues".into(),
        ));
    }
    let values = spec.values();
    let last = values
        .last()
        .ok_or_else(|| FracError::InsufficientData("empty spectrum".into()))?;
    if *last < p + 1e-6 {
        return Err(FracError::InsufficientData(format!(
            "spectrum only reaches {last}, below the threshold p = {p}"
        )));
    }
    Ok(values.iter().filter(|&&v| v < p - 1e-3).count())
}

#[derive(Debug, Clone)]
pub struct HopfReport {
    pub passed: bool,
    /// Minimum of -u'(x) over interior nodes with x > h (ball: excluding the
    /// outermost two cells where the derivative blows up).
    pub min_derivative: f64,
    /// Minimum of -u'(x)/x over 0 < x <= 0.1 L.
    pub min_ratio: f64,
    /// Limit of -u'(x)/x at the origin, an estimate of -u''(0).
    pub curvature_at_origin: f64,
}

/// Positivity of v = -u' on the right half domain together with a linear
/// lower bound through the origin.
pub fn hopf_check(state: &GroundState) -> Result<HopfReport> {
    if state.u.parity() != Parity::Even {
        return Err(FracError::PreconditionFailed(
            "the derivative check needs a converged even state".into(),
        ));
    }
    if !(state.residual_norm <= 1e-6) {
        return Err(FracError::PreconditionFailed(
            "the derivative check needs a residual-certified state".into(),
        ));
    }
    let grid = *state.u.grid();
    let v = state.u.derivative().map(|t| -t);
    let h = grid.spacing();
    let l = grid.half_width();
    let skip_outer = match state.domain_kind {
        DomainKind::Ball => 2,
        DomainKind::Line => 0,
    };
    let mut min_derivative = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for i in grid.mid() + 1..grid.len() - 1 - skip_outer {
        let x = grid.node(i);
        if x > h {
            min_derivative = min_derivative.min(v.values()[i]);
        }
        if x > 0.0 && x <= 0.1 * l {
            min_ratio = min_ratio.min(v.values()[i] / x);
        }
    }
    // least-squares fit v = c1 x + c3 x^3 near the origin; c1 estimates the
    // curvature -u''(0) without dividing point noise by h
    let window = (0.2 * l).min(0.25).max(4.0 * h);
    let (mut a11, mut a13, mut a33, mut r1, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in grid.mid() + 1..grid.len() - 1 {
        let x = grid.node(i);
        if x <= window {
            let x3 = x * x * x;
            a11 += x * x;
            a13 += x * x3;
            a33 += x3 * x3;
            r1 += x * v.values()[i];
            r3 += x3 * v.values()[i];
        }
    }
    let det = a11 * a33 - a13 * a13;
    let curvature_at_origin = if det.abs() > 1e-30 {
        (r1 * a33 - r3 * a13) / det
    } else {
        f64::NAN
    };
    let threshold = 1e-8 * state.u.max_abs() / l;
    Ok(HopfReport {
        passed: min_derivative > 0.0 && min_ratio > threshold,
        min_derivative,
        min_ratio,
        curvature_at_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::groundstate::{solve_ball, solve_line, SolveOptions};

    fn ball_state(s: f64, lambda: f64, p: f64, n: usize) -> (FracOp, GroundState) {
        let grid = Grid1D::ball(n).unwrap();
        let op = FracOp::assemble(grid, s).unwrap();
        let state = solve_ball(s, lambda, p, grid, &SolveOptions::default()).unwrap();
        (op, state)
    }

    #[test]
    fn first_eigenvalue_is_one_with_eigenvector_u() {
        let (op, state) = ball_state(0.5, 0.0, 2.0, 1025);
        let spec = weighted_eigs(&op, &state, Sector::Full, 3).unwrap();
        assert!((spec.pairs[0].value - 1.0).abs() <= 5e-3, "L1 = {}", spec.pairs[0].value);
        let align = alignment(&state, &spec.pairs[0].vector, &state.u).unwrap();
        assert!(align >= 0.999, "alignment {align}");
        // simple and signless
        assert!(spec.pairs[1].value - spec.pairs[0].value > 0.0);
        let w1 = &spec.pairs[0].vector;
        let sign = w1.values()[op.grid().mid()].signum();
        for i in op.grid().interior() {
            assert!(sign * w1.values()[i] >= -1e-10 * w1.max_abs());
        }
    }

    #[test]
    fn sectors_merge_into_full_spectrum() {
        let (op, state) = ball_state(0.5, 0.5, 2.0, 257);
        let k = 6;
        let full = weighted_eigs(&op, &state, Sector::Full, 2 * k).unwrap();
        let even = weighted_eigs(&op, &state, Sector::Even, k).unwrap();
        let odd = weighted_eigs(&op, &state, Sector::Odd, k).unwrap();
        let mut merged: Vec<f64> = even
            .values()
            .into_iter()
            .chain(odd.values())
            .collect();
        merged.sort_by(f64::total_cmp);
        for (a, b) in full.values().iter().take(k).zip(merged.iter().take(k)) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
        // sector parity is honored
        assert_eq!(even.pairs[0].vector.parity(), Parity::Even);
        assert_eq!(odd.pairs[0].vector.parity(), Parity::Odd);
    }

    #[test]
    fn rayleigh_quotients_are_consistent() {
        let (op, state) = ball_state(0.6, 1.0, 2.5, 257);
        let spec = weighted_eigs(&op, &state, Sector::Full, 5).unwrap();
        for pair in &spec.pairs {
            let w = &pair.vector;
            let num = op.bilinear(w, w).unwrap()
                + state.lambda * w.dot_uniform(w).unwrap();
            let den = weighted_dot(&state, w, w).unwrap();
            assert!(
                (num / den - pair.value).abs() <= 1e-8 * (1.0 + pair.value.abs()),
                "Rayleigh {} vs {}",
                num / den,
                pair.value
            );
            assert!((den - 1.0).abs() <= 1e-8);
            assert!(pair.value > 0.0);
        }
        // weighted orthogonality across distinct eigenvalues
        let d01 = weighted_dot(&state, &spec.pairs[0].vector, &spec.pairs[1].vector).unwrap();
        assert!(d01.abs() <= 1e-8);
    }

    #[test]
    fn odd_sector_exceeds_p_on_the_ball() {
        for &(s, p) in &[(0.25, 1.5), (0.5, 2.0), (0.75, 3.0)] {
            let (op, state) = ball_state(s, 0.0, p, 513);
            let odd = weighted_eigs(&op, &state, Sector::Odd, 1).unwrap();
            let gap = nonradial_gap(&odd).unwrap();
            assert!(gap > 0.0, "s={s} p={p}: gap {gap}");
        }
    }

    #[test]
    fn line_translation_mode_sits_at_p() {
        let grid = Grid1D::line(60.0, 2049).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let state = solve_line(0.5, 2.0, grid, &SolveOptions::default()).unwrap();
        let odd = weighted_eigs(&op, &state, Sector::Odd, 2).unwrap();
        let lam = odd.pairs[0].value;
        assert!((lam - 2.0).abs() <= 5e-3, "odd eigenvalue {lam}");
        let du = state.u.derivative();
        let align = alignment(&state, &odd.pairs[0].vector, &du).unwrap();
        assert!(align >= 0.999, "alignment {align}");

        // removing the translation direction opens a strict gap
        let (gap, minimizer) = constrained_gap(&op, &state).unwrap();
        assert!(gap > 0.0, "constrained gap {gap}");
        let constraint = weighted_dot(&state, &minimizer, &du).unwrap();
        assert!(constraint.abs() <= 1e-10, "constraint residual {constraint}");
    }

    #[test]
    fn morse_index_counts_one_for_ground_states() {
        let (op, state) = ball_state(0.5, 0.0, 2.0, 513);
        let spec = weighted_eigs(&op, &state, Sector::Full, 8).unwrap();
        assert_eq!(morse_index(&spec, 2.0).unwrap(), 1);
        assert_eq!(morse_index(&spec, 0.5).unwrap(), 0);
        let short = weighted_eigs(&op, &state, Sector::Full, 1).unwrap();
        assert!(morse_index(&short, 2.0).is_err());
    }

    #[test]
    fn morse_index_on_the_line_excludes_the_translation_mode() {
        let grid = Grid1D::line(60.0, 1025).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let state = solve_line(0.5, 2.0, grid, &SolveOptions::default()).unwrap();
        let spec = weighted_eigs(&op, &state, Sector::Full, 8).unwrap();
        // only the first (even) eigenvalue sits below p; the odd eigenvalue
        // at p is excluded by the band
        assert_eq!(morse_index(&spec, 2.0).unwrap(), 1);
    }

    #[test]
    fn hopf_check_passes_for_solitons_and_ball_states() {
        let grid = Grid1D::line(60.0, 4097).unwrap();
        let state = solve_line(0.5, 2.0, grid, &SolveOptions::default()).unwrap();
        let report = hopf_check(&state).unwrap();
        assert!(report.passed);
        // Benjamin-Ono closed form: -u''(0) = 4
        assert!(
            (report.curvature_at_origin - 4.0).abs() < 0.08,
            "curvature {}",
            report.curvature_at_origin
        );

        let (_, bstate) = ball_state(0.5, 0.0, 2.0, 513);
        assert!(hopf_check(&bstate).unwrap().passed);
    }

    #[test]
    fn hopf_check_rejects_unconverged_states() {
        let grid = Grid1D::ball(129).unwrap();
        let u = grid.sample(|x| (1.0 - x * x).max(0.0), Parity::Even).unwrap();
        let fake = GroundState {
            u,
            s: 0.5,
            lambda: 0.0,
            p: 2.0,
            domain_kind: DomainKind::Ball,
            residual_norm: 1.0,
            psi_boundary: None,
            newton_iters: 0,
            truncation_flag: false,
            decay_exponent: None,
        };
        assert!(hopf_check(&fake).is_err());
    }

    #[test]
    fn eig_request_bounds_are_checked() {
        let (op, state) = ball_state(0.5, 0.0, 2.0, 129);
        assert!(weighted_eigs(&op, &state, Sector::Full, 0).is_err());
        assert!(weighted_eigs(&op, &state, Sector::Full, 10_000).is_err());
    }
}
