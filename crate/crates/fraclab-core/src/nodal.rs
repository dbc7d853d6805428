//! Nodal-domain analysis of extension fields on the closed half plane:
//! flood-fill labeling of the sign regions, per-domain weighted energies and
//! trace integrals.

use std::collections::VecDeque;

use crate::error::{FracError, Result};
use crate::extension::ExtensionField;

#[derive(Debug, Clone)]
pub struct NodalDomain {
    pub sign: f64,
    /// Weighted Dirichlet energy int t^(1-2s) |grad W|^2 over the domain.
    pub energy: f64,
    /// Nodes of the t = 0 row belonging to the domain.
    pub trace_nodes: usize,
    pub trace_measure: f64,
    /// int coeff * w^2 over the trace set, with the caller's coefficient.
    pub trace_integral: f64,
}

#[derive(Debug, Clone)]
pub struct NodalDecomposition {
    /// Label per node, row-major with the trace row first; 0 marks the
    /// zero-set buffer, domains are numbered from 1 in discovery order.
    pub labels: Vec<Vec<usize>>,
    pub domains: Vec<NodalDomain>,
    pub threshold: f64,
}

impl NodalDecomposition {
    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }
}

/// Label the connected components of {|W| > threshold} on the closed half
/// plane (4-connectivity, trace row included) and accumulate per-domain
/// energies and trace integrals. `coeff` supplies the trace-side coefficient
/// per x target.
pub fn nodal_decompose(
    field: &ExtensionField,
    threshold_rel: f64,
    coeff: &[f64],
) -> Result<NodalDecomposition> {
    let nx = field.xs.len();
    if coeff.len() != nx {
        return Err(FracError::GridMismatch(
            "coefficient vector length must match the x targets".into(),
        ));
    }
    if nx < 2 {
        return Err(FracError::InsufficientData("need at least two x targets".into()));
    }
    let rows = field.rows();
    let threshold = threshold_rel * field.max_abs();
    let sign_at = |row: usize, i: usize| -> i8 {
        let v = field.value(i, row);
        if v > threshold {
            1
        } else if v < -threshold {
            -1
        } else {
            0
        }
    };

    let mut labels = vec![vec![0usize; nx]; rows];
    let mut signs: Vec<f64> = Vec::new();
    for row in 0..rows {
        for i in 0..nx {
            if labels[row][i] != 0 || sign_at(row, i) == 0 {
                continue;
            }
            let id = signs.len() + 1;
            let sgn = sign_at(row, i);
            signs.push(sgn as f64);
            let mut queue = VecDeque::new();
            labels[row][i] = id;
            queue.push_back((row, i));
            while let Some((r, c)) = queue.pop_front() {
                let visit = |rr: usize, cc: usize, labels: &mut Vec<Vec<usize>>,
                                 queue: &mut VecDeque<(usize, usize)>| {
                    if labels[rr][cc] == 0 && sign_at(rr, cc) == sgn {
                        labels[rr][cc] = id;
                        queue.push_back((rr, cc));
                    }
                };
                if r > 0 {
                    visit(r - 1, c, &mut labels, &mut queue);
                }
                if r + 1 < rows {
                    visit(r + 1, c, &mut labels, &mut queue);
                }
                if c > 0 {
                    visit(r, c - 1, &mut labels, &mut queue);
                }
                if c + 1 < nx {
                    visit(r, c + 1, &mut labels, &mut queue);
                }
            }
        }
    }

    let hx = field.xs[1] - field.xs[0];
    let s = field.s;
    let mut domains: Vec<NodalDomain> = signs
        .iter()
        .map(|&sign| NodalDomain {
            sign,
            energy: 0.0,
            trace_nodes: 0,
            trace_measure: 0.0,
            trace_integral: 0.0,
        })
        .collect();

    // cell-wise energy; a cell contributes when all four corners carry the
    // same domain (cells straddling the zero set form the buffer)
    let level = |row: usize| if row == 0 { 0.0 } else { field.ts[row - 1] };
    for row in 0..rows - 1 {
        let (t0, t1) = (level(row), level(row + 1));
        let dt = t1 - t0;
        // closed-form layer weight int_{t0}^{t1} t^(1-2s) dt
        let e = 2.0 - 2.0 * s;
        let wt = (t1.powf(e) - t0.powf(e)) / e;
        for i in 0..nx - 1 {
            let id = labels[row][i];
            if id == 0
                || labels[row][i + 1] != id
                || labels[row + 1][i] != id
                || labels[row + 1][i + 1] != id
            {
                continue;
            }
            let w00 = field.value(i, row);
            let w10 = field.value(i + 1, row);
            let w01 = field.value(i, row + 1);
            let w11 = field.value(i + 1, row + 1);
            let dx = 0.5 * ((w10 - w00) + (w11 - w01)) / hx;
            let dtv = 0.5 * ((w01 - w00) + (w11 - w10)) / dt;
            domains[id - 1].energy += (dx * dx + dtv * dtv) * wt * hx;
        }
    }

    for i in 0..nx {
        let id = labels[0][i];
        if id != 0 {
            let d = &mut domains[id - 1];
            d.trace_nodes += 1;
            d.trace_measure += hx;
            let w = field.trace[i];
            d.trace_integral += coeff[i] * w * w * hx;
        }
    }

    Ok(NodalDecomposition { labels, domains, threshold })
}

/// Sign behavior of the field in shrinking relative neighborhoods of the
/// point (1, 0); used as a diagnostic for boundary sign changes.
pub fn corner_sign_report(field: &ExtensionField, radii: &[f64]) -> Vec<(f64, bool, bool)> {
    let threshold = 1e-10 * field.max_abs();
    radii
        .iter()
        .map(|&rho| {
            let mut has_pos = false;
            let mut has_neg = false;
            for (j, row) in std::iter::once(&field.trace).chain(field.values.iter()).enumerate() {
                let t = if j == 0 { 0.0 } else { field.ts[j - 1] };
                for (i, &x) in field.xs.iter().enumerate() {
                    let dist = ((x - 1.0) * (x - 1.0) + t * t).sqrt();
                    if dist <= rho {
                        if row[i] > threshold {
                            has_pos = true;
                        }
                        if row[i] < -threshold {
                            has_neg = true;
                        }
                    }
                }
            }
            (rho, has_pos, has_neg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{extend, geometric_levels};
    use crate::grid::{Grid1D, GridFunction, Parity};

    #[test]
    fn positive_trace_yields_single_domain() {
        let grid = Grid1D::ball(257).unwrap();
        let v = grid
            .sample(|x| (1.0 - x * x).max(0.0).sqrt(), Parity::Even)
            .unwrap();
        let xs: Vec<f64> = (-80..=80).map(|k| 0.05 * k as f64).collect();
        let ts = geometric_levels(1e-3, 8.0, 0.6);
        let field = extend(&v, 0.5, &xs, &ts).unwrap();
        let coeff = vec![1.0; xs.len()];
        let dec = nodal_decompose(&field, 1e-8, &coeff).unwrap();
        assert_eq!(dec.domain_count(), 1);
        assert!(dec.domains[0].sign > 0.0);
        assert!(dec.domains[0].trace_nodes > 0);
    }

    #[test]
    fn odd_trace_yields_two_domains_split_by_the_axis() {
        let grid = Grid1D::ball(257).unwrap();
        let v = grid
            .sample(|x| x * (1.0 - x * x).max(0.0), Parity::Odd)
            .unwrap();
        let xs: Vec<f64> = (-100..=100).map(|k| 0.04 * k as f64).collect();
        let ts = geometric_levels(1e-3, 8.0, 0.6);
        let field = extend(&v, 0.5, &xs, &ts).unwrap();
        let coeff = vec![1.0; xs.len()];
        let dec = nodal_decompose(&field, 1e-8, &coeff).unwrap();
        assert_eq!(dec.domain_count(), 2);
        let signs: Vec<f64> = dec.domains.iter().map(|d| d.sign).collect();
        assert!(signs.contains(&1.0) && signs.contains(&-1.0));
        for d in &dec.domains {
            assert!(d.trace_nodes > 0, "nodal domain with empty trace");
            assert!(d.energy > 0.0);
        }
    }

    #[test]
    fn energy_identity_for_exact_eigenpair_of_the_operator() {
        // exact relation: total weighted energy = (1/d_s) * energy pairing of
        // the trace; checked through the nodal accounting at s = 1/2 where
        // the constant is 1
        let grid = Grid1D::ball(513).unwrap();
        let op = crate::op::FracOp::assemble(grid, 0.5).unwrap();
        let v = grid
            .sample(|x| (1.0 - x * x).max(0.0).sqrt(), Parity::Even)
            .unwrap();
        let xs: Vec<f64> = (-1600..=1600).map(|k| 0.005 * k as f64).collect();
        let ts = geometric_levels(5e-4, 30.0, 0.7);
        let field = extend(&v, 0.5, &xs, &ts).unwrap();
        let coeff = vec![1.0; xs.len()];
        let dec = nodal_decompose(&field, 1e-8, &coeff).unwrap();
        assert_eq!(dec.domain_count(), 1);
        let total_energy: f64 = dec.domains.iter().map(|d| d.energy).sum();
        // (-Delta)^(1/2) of the torsion function is 1, so the pairing is
        // int v dx = pi/2
        let pairing = std::f64::consts::PI / 2.0;
        assert!(
            (total_energy - pairing).abs() / pairing < 0.05,
            "energy {total_energy} vs pairing {pairing}"
        );
        let bil = op.bilinear(&v, &v).unwrap();
        assert!((bil - pairing).abs() / pairing < 0.01, "bilinear {bil}");
    }

    #[test]
    fn eigenfunction_sign_changes_are_mesh_stable() {
        use crate::groundstate::{solve_with, SolveOptions};
        use crate::op::{FracOp, Sector};
        use crate::spectrum::weighted_eigs;
        let mut counts = Vec::new();
        for n in [513usize, 1025] {
            let grid = Grid1D::ball(n).unwrap();
            let op = FracOp::assemble(grid, 0.5).unwrap();
            let state = solve_with(&op, 0.5, 2.0, &SolveOptions::default()).unwrap();
            let even = weighted_eigs(&op, &state, Sector::Even, 3).unwrap();
            let odd = weighted_eigs(&op, &state, Sector::Odd, 2).unwrap();
            let per_grid: Vec<usize> = even
                .pairs
                .iter()
                .chain(odd.pairs.iter())
                .map(|p| p.vector.sign_changes_right(1e-8 * p.vector.max_abs()))
                .collect();
            counts.push(per_grid);
        }
        assert_eq!(counts[0], counts[1], "sign-change counts moved under refinement");
        // the first eigenfunction has none, the second even one has exactly one
        assert_eq!(counts[0][0], 0);
        assert_eq!(counts[0][1], 1);
    }

    #[test]
    fn corner_diagnostic_on_boundary_matched_surrogate() {
        // synthesize an even function with vanishing fractional boundary
        // derivative by subtracting the psi-matched multiple of the state;
        // the corner report is informational for such surrogates
        use crate::extension::frac_boundary_derivative;
        use crate::groundstate::{solve_with, SolveOptions};
        use crate::op::{FracOp, Sector};
        use crate::spectrum::weighted_eigs;
        let grid = Grid1D::ball(1025).unwrap();
        let op = FracOp::assemble(grid, 0.5).unwrap();
        let state = solve_with(&op, 0.0, 2.0, &SolveOptions::default()).unwrap();
        let even = weighted_eigs(&op, &state, Sector::Even, 2).unwrap();
        let w2 = &even.pairs[1].vector;
        let psi_w = frac_boundary_derivative(w2, 0.5).unwrap().psi_right;
        let psi_u = frac_boundary_derivative(&state.u, 0.5).unwrap().psi_right;
        let ratio = psi_w / psi_u;
        let surrogate = GridFunction::new(
            grid,
            w2.values()
                .iter()
                .zip(state.u.values())
                .map(|(w, u)| w - ratio * u)
                .collect(),
            Parity::Even,
        )
        .unwrap();
        let fit = frac_boundary_derivative(&surrogate, 0.5).unwrap();
        assert!(
            fit.psi_right.abs() <= 0.05 * psi_w.abs(),
            "surrogate boundary derivative {} not matched away",
            fit.psi_right
        );
        let xs: Vec<f64> = (-360..=360).map(|k| 0.005 * k as f64).collect();
        let ts = geometric_levels(1e-3, 1.0, 0.6);
        let field = extend(&surrogate, 0.5, &xs, &ts).unwrap();
        let report = corner_sign_report(&field, &[0.4, 0.2, 0.1]);
        assert_eq!(report.len(), 3);
    }

    #[test]
    fn corner_report_distinguishes_sign_structure() {
        let grid = Grid1D::ball(513).unwrap();
        // trace flipping sign just inside the right endpoint
        let flip = grid
            .sample(|x| (x - 0.99) * (1.0 - x * x).max(0.0), Parity::None)
            .unwrap();
        let xs: Vec<f64> = (-300..=300).map(|k| 0.005 * k as f64).collect();
        let ts = geometric_levels(1e-3, 0.5, 0.5);
        let field = extend(&flip, 0.5, &xs, &ts).unwrap();
        for (rho, has_pos, has_neg) in corner_sign_report(&field, &[0.1, 0.03]) {
            assert!(has_pos && has_neg, "rho={rho} misses the sign change");
        }
        // one-signed trace: no negative values near the corner
        let pos = grid
            .sample(|x| (1.0 - x * x).max(0.0), Parity::Even)
            .unwrap();
        let field = extend(&pos, 0.5, &xs, &ts).unwrap();
        for (_, has_pos, has_neg) in corner_sign_report(&field, &[0.1, 0.03]) {
            assert!(has_pos);
            assert!(!has_neg);
        }
    }
}
