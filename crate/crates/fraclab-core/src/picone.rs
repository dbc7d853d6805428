//! Numerical audit of the antisymmetric Picone-type identity: the quadratic
//! form of an odd compactly supported function against a positive odd
//! reference equals a manifestly nonnegative double integral over the
//! quadrant with the reflection-difference kernel.

use crate::error::{FracError, Result};
use crate::grid::{DomainKind, Grid1D, GridFunction, Parity};
use crate::op::FracOp;
use crate::special::mollifier;

/// Reflection-difference kernel factor |x-y|^(-1-2s) - (x+y)^(-1-2s) for
/// x, y > 0; strictly positive off the diagonal.
pub fn kernel_gap(x: f64, y: f64, s: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(FracError::InvalidParameter(
            "the kernel gap is defined on the open quadrant".into(),
        ));
    }
    if x == y {
        return Err(FracError::InvalidParameter(
            "singular input x = y; the diagonal is handled by the cell rule".into(),
        ));
    }
    let e = -(1.0 + 2.0 * s);
    Ok((x - y).abs().powf(e) - (x + y).powf(e))
}

/// Interior cutoff on the interval: 0 within distance 1/k of the boundary,
/// 1 at distance 2/k and beyond, cubic smoothstep between.
pub fn build_cutoff(k: usize, grid: &Grid1D) -> Result<GridFunction> {
    if grid.kind() != DomainKind::Ball {
        return Err(FracError::InvalidParameter("cutoffs are built on ball grids".into()));
    }
    if k == 0 {
        return Err(FracError::InvalidParameter("cutoff level must be >= 1".into()));
    }
    grid.sample(|x| 1.0 - mollifier(k as f64 * (1.0 - x.abs())), Parity::Even)
}

#[derive(Debug, Clone)]
pub struct PiconeOptions {
    /// Bound on |w/v| over the support of w; exceeding it is treated as a
    /// violated continuity hypothesis rather than a numerical failure.
    pub ratio_cap: f64,
    /// Cutoff level used to compactify w, recorded in the report.
    pub cutoff_level: Option<usize>,
}

impl Default for PiconeOptions {
    fn default() -> Self {
        Self { ratio_cap: 1e6, cutoff_level: None }
    }
}

#[derive(Debug, Clone)]
pub struct PiconeReport {
    /// Energy side: bilinear(w, w) - int V w^2.
    pub lhs: f64,
    /// Quadrant side: double sum of the kernel H plus the diagonal cell rule.
    pub rhs: f64,
    pub residual: f64,
    /// Minimum discrete kernel value encountered (nonnegativity witness).
    pub h_min: f64,
    pub cutoff_level: Option<usize>,
    /// Scale for relative comparisons: max(|lhs|, energy of w).
    pub scale: f64,
}

/// Evaluate both sides of the identity by independent code paths: the left
/// side through the operator matrix, the right side by a direct double sum
/// over the quadrant with the diagonal cells excluded and compensated by the
/// same closed-form singular-cell rule the operator assembly uses.
pub fn picone_residual(
    op: &FracOp,
    w: &GridFunction,
    v: &GridFunction,
    vpot: &GridFunction,
    opts: &PiconeOptions,
) -> Result<PiconeReport> {
    w.same_grid(v)?;
    w.same_grid(vpot)?;
    if *w.grid() != *op.grid() {
        return Err(FracError::GridMismatch("operator grid".into()));
    }
    if w.parity() != Parity::Odd {
        return Err(FracError::PreconditionFailed(
            "w must be odd under the reflection".into(),
        ));
    }
    if v.parity() != Parity::Odd {
        return Err(FracError::PreconditionFailed(
            "the reference v must be odd under the reflection".into(),
        ));
    }
    let grid = *w.grid();
    let n = grid.len();
    let h = grid.spacing();
    let c_s = op.normalization();

    // compact support inside the domain
    let wmax = w.max_abs();
    if w.values()[0].abs() > 0.0
        || w.values()[n - 1].abs() > 0.0
        || w.values()[1].abs() > 1e-14 * wmax
        || w.values()[n - 2].abs() > 1e-14 * wmax
    {
        return Err(FracError::PreconditionFailed(
            "w must be compactly supported in the interior (apply a cutoff)".into(),
        ));
    }

    // hypothesis checks on the quadrant
    let mid = grid.mid();
    let vmax = v.max_abs();
    for i in mid + 1..n {
        if v.values()[i] < -1e-13 * vmax {
            return Err(FracError::PreconditionFailed(format!(
                "v must be nonnegative on the half line x > 0; v({:.4}) = {:.3e}",
                grid.node(i),
                v.values()[i]
            )));
        }
        if w.values()[i] != 0.0 {
            if !(v.values()[i] > 0.0) {
                return Err(FracError::PreconditionFailed(format!(
                    "v must be positive on the support of w for x > 0; v({:.4}) = {:.3e}",
                    grid.node(i),
                    v.values()[i]
                )));
            }
            if (w.values()[i] / v.values()[i]).abs() > opts.ratio_cap {
                return Err(FracError::PreconditionFailed(format!(
                    "|w/v| = {:.3e} at x = {:.4} exceeds the continuity cap {:.1e}",
                    (w.values()[i] / v.values()[i]).abs(),
                    grid.node(i),
                    opts.ratio_cap
                )));
            }
        }
    }

    // left side through the operator route
    let mut vw2 = 0.0;
    for i in 0..n {
        vw2 += vpot.values()[i] * w.values()[i] * w.values()[i];
    }
    let lhs = op.bilinear(w, w)? - h * vw2;

    // right side: direct double sum over the quadrant. The pair weights are
    // the hat-integrated kernel gap at lags (j-i) and (i+j) with the same
    // closed-form singular cell as the assembly (excluded diagonal: the
    // zero-difference terms vanish identically).
    let g: Vec<f64> = (0..n)
        .map(|i| {
            if w.values()[i] != 0.0 {
                w.values()[i] / v.values()[i]
            } else {
                0.0
            }
        })
        .collect();
    let mut rhs = 0.0;
    let mut h_min = f64::INFINITY;
    for i in mid + 1..n - 1 {
        let vi = v.values()[i];
        for j in i + 1..n - 1 {
            if g[i] == 0.0 && g[j] == 0.0 {
                continue;
            }
            let gap = op.lag_weight(j - i) - op.lag_weight(i + j - 2 * mid);
            let dg = g[i] - g[j];
            let hij = c_s * vi * v.values()[j] * dg * dg * gap;
            if hij != 0.0 {
                h_min = h_min.min(hij);
            }
            rhs += 2.0 * h * hij;
        }
    }
    if !h_min.is_finite() {
        h_min = 0.0;
    }

    let energy = op.bilinear(w, w)?;
    Ok(PiconeReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        h_min,
        cutoff_level: opts.cutoff_level,
        scale: lhs.abs().max(energy.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_gap_values() {
        let g = kernel_gap(1.0, 2.0, 0.5).unwrap();
        assert!((g - 8.0 / 9.0).abs() < 1e-14);
        assert!(kernel_gap(1.0, 1.0, 0.5).is_err());
        assert!(kernel_gap(-1.0, 2.0, 0.5).is_err());
        // near-singular but finite and positive
        let near = kernel_gap(1.0, 1.0 + 1e-8, 0.5).unwrap();
        assert!(near > 1e10 && near.is_finite());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: f64 = rng.random_range(1e-3..5.0);
            let y: f64 = rng.random_range(1e-3..5.0);
            if (x - y).abs() > 1e-12 {
                assert!(kernel_gap(x, y, rng.random_range(0.05..0.95)).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn cutoff_profile_and_energy_convergence() {
        let grid = Grid1D::ball(1025).unwrap();
        let z4 = build_cutoff(4, &grid).unwrap();
        let at = |x: f64| z4.eval(x);
        assert_eq!(at(0.0), 1.0);
        assert_eq!(at(0.8), 0.0); // k(1-|x|) = 0.8 <= 1
        let midband = at(0.625); // k(1-|x|) = 1.5, inside the ramp
        assert!(midband > 0.0 && midband < 1.0);
        assert!(build_cutoff(0, &grid).is_err());

        // cutoff energies converge to the full energy as the cutoff sharpens
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let w = grid
            .sample(|x| x * (1.0 - x * x).max(0.0), Parity::Odd)
            .unwrap();
        let full = op.bilinear(&w, &w).unwrap();
        let mut errs = Vec::new();
        for k in [4usize, 8, 16, 32] {
            let zk = build_cutoff(k, &grid).unwrap();
            let wk = GridFunction::new(
                grid,
                w.values()
                    .iter()
                    .zip(zk.values())
                    .map(|(a, b)| a * b)
                    .collect(),
                Parity::Odd,
            )
            .unwrap();
            let e = op.bilinear(&wk, &wk).unwrap();
            errs.push((e - full).abs() / full);
        }
        assert!(errs[3] < errs[0], "{errs:?}");
        assert!(errs[3] < 0.05, "{errs:?}");
    }

    #[test]
    fn pointwise_algebraic_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let wx: f64 = rng.random_range(-2.0..2.0);
            let wy: f64 = rng.random_range(-2.0..2.0);
            let vx: f64 = rng.random_range(0.1..3.0);
            let vy: f64 = rng.random_range(0.1..3.0);
            let left = (wx - wy) * (wx - wy) - wx * wx * (vx - vy) / vx
                + wy * wy * (vx - vy) / vy;
            let right = vx * vy * (wx / vx - wy / vy) * (wx / vx - wy / vy);
            assert!((left - right).abs() <= 1e-12 * (1.0 + left.abs() + right.abs()));
        }
    }

    #[test]
    fn proportional_pair_drives_both_sides_to_zero() {
        let grid = Grid1D::ball(513).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        // compactly supported positive-on-right odd reference
        let zk = build_cutoff(4, &grid).unwrap();
        let v = grid
            .sample(|x| x * (2.0 - x * x).exp(), Parity::Odd)
            .unwrap();
        let v = GridFunction::new(
            grid,
            v.values().iter().zip(zk.values()).map(|(a, b)| a * b).collect(),
            Parity::Odd,
        )
        .unwrap();
        // exact discrete potential of v on its support
        let av = op.apply(&v).unwrap();
        let vpot = GridFunction::new(
            grid,
            v.values()
                .iter()
                .zip(av.values())
                .map(|(vi, avi)| if *vi != 0.0 { avi / vi } else { 0.0 })
                .collect(),
            Parity::None,
        )
        .unwrap();
        let w = GridFunction::new(
            grid,
            v.values().iter().map(|t| 0.73 * t).collect(),
            Parity::Odd,
        )
        .unwrap();
        let report = picone_residual(&op, &w, &v, &vpot, &PiconeOptions::default()).unwrap();
        let wnorm = op.bilinear(&w, &w).unwrap();
        assert!(report.lhs.abs() <= 1e-10 * wnorm, "lhs {}", report.lhs);
        assert!(report.rhs.abs() <= 1e-10 * wnorm, "rhs {}", report.rhs);
        assert!(report.h_min >= -1e-12 * (1.0 + report.lhs.abs()));
    }

    #[test]
    fn identity_holds_for_soliton_reference() {
        // closed-form reference on the line: u = 2/(1+x^2), v = -u',
        // V = 2u - 1, and w a cutoff odd polynomial-Gaussian
        let grid = Grid1D::line(30.0, 4097).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let v = grid
            .sample(|x| 4.0 * x / (1.0 + x * x) / (1.0 + x * x), Parity::Odd)
            .unwrap();
        let vpot = grid
            .sample(|x| 4.0 / (1.0 + x * x) - 1.0, Parity::Even)
            .unwrap();
        let r = 10.0;
        let w = grid
            .sample(
                |x| mollifier(x.abs() / r) * x * (-0.08 * x * x).exp(),
                Parity::Odd,
            )
            .unwrap();
        let report = picone_residual(&op, &w, &v, &vpot, &PiconeOptions::default()).unwrap();
        assert!(report.rhs >= -1e-12 * report.scale);
        assert!(
            report.residual <= 1e-3 * report.scale,
            "lhs {} rhs {} residual {} scale {}",
            report.lhs,
            report.rhs,
            report.residual,
            report.scale
        );
    }

    #[test]
    fn hypothesis_violations_are_named() {
        let grid = Grid1D::ball(257).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let zk = build_cutoff(4, &grid).unwrap();
        let cut = |f: &GridFunction| {
            GridFunction::new(
                grid,
                f.values().iter().zip(zk.values()).map(|(a, b)| a * b).collect(),
                f.parity(),
            )
            .unwrap()
        };
        let wodd = cut(&grid.sample(|x| x * (1.0 - x * x).max(0.0), Parity::Odd).unwrap());
        let veven = grid.sample(|x| (1.0 - x * x).max(0.0), Parity::Even).unwrap();
        let vodd = grid.sample(|x| x, Parity::Odd).unwrap();
        let vpot = grid.zeros();

        // even w rejected
        assert!(matches!(
            picone_residual(&op, &veven, &vodd, &vpot, &PiconeOptions::default()),
            Err(FracError::PreconditionFailed(_))
        ));
        // even v rejected
        assert!(matches!(
            picone_residual(&op, &wodd, &veven, &vpot, &PiconeOptions::default()),
            Err(FracError::PreconditionFailed(_))
        ));
        // v vanishing on supp w rejected
        let vbad = cut(&grid.sample(|x| x * (0.25 - x * x), Parity::Odd).unwrap());
        assert!(matches!(
            picone_residual(&op, &wodd, &vbad, &vpot, &PiconeOptions::default()),
            Err(FracError::PreconditionFailed(_))
        ));
        // ratio cap
        let tiny_v = GridFunction::new(
            grid,
            wodd.values().iter().map(|t| t * 1e-9).collect(),
            Parity::Odd,
        )
        .unwrap();
        let opts = PiconeOptions { ratio_cap: 1e6, cutoff_level: None };
        assert!(matches!(
            picone_residual(&op, &wodd, &tiny_v, &vpot, &opts),
            Err(FracError::PreconditionFailed(_))
        ));
        // non-compact support rejected
        let wide = grid.sample(|x| x, Parity::Odd).unwrap();
        assert!(matches!(
            picone_residual(&op, &wide, &vodd, &vpot, &PiconeOptions::default()),
            Err(FracError::PreconditionFailed(_))
        ));
    }
}
