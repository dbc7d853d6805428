//! Uniform symmetric 1D grids and grid functions with exact parity handling.
//!
//! All functions carry an implicit zero extension outside [-L, L]; the node
//! count is odd so that x = 0 is a node and reflection is an exact involution
//! on indices.

use crate::error::{FracError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// The unit interval (-1, 1) with zero Dirichlet exterior condition.
    Ball,
    /// A truncation of the real line to (-L, L).
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    n: usize,
    h: f64,
    kind: DomainKind,
}

impl Grid1D {
    pub fn ball(n: usize) -> Result<Self> {
        Self::new(1.0, n, DomainKind::Ball)
    }

    pub fn line(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width, n, DomainKind::Line)
    }

    fn new(half_width: f64, n: usize, kind: DomainKind) -> Result<Self> {
        if n < 9 || n % 2 == 0 {
            return Err(FracError::InvalidParameter(format!(
                "node count must be odd and >= 9, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(FracError::InvalidParameter(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if kind == DomainKind::Ball && half_width != 1.0 {
            return Err(FracError::InvalidParameter(
                "ball grids have half width exactly 1".into(),
            ));
        }
        let mid = (n - 1) / 2;
        let h = half_width / mid as f64;
        Ok(Self { half_width, n, h, kind })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Index of the node at x = 0.
    pub fn mid(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Coordinate of node i; node(i) == -node(n-1-i) holds bitwise.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.mid() as f64) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Mirror index of the reflection x -> -x.
    pub fn reflect(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    /// Interior node indices (both boundary nodes carry the Dirichlet value 0).
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n - 1
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction { grid: *self, values: vec![0.0; self.n], parity: Parity::Even }
    }

    /// Sample a function of x at the nodes, tagging the stated parity after
    /// verifying it holds.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F, parity: Parity) -> Result<GridFunction> {
        let values: Vec<f64> = (0..self.n).map(|i| f(self.node(i))).collect();
        GridFunction::new(*self, values, parity)
    }
}

#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
    parity: Parity,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FracError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let f = Self { grid, values, parity };
        f.check_parity()?;
        Ok(f)
    }

    fn check_parity(&self) -> Result<()> {
        let n = self.grid.len();
        let tol = 1e-12 * (1.0 + self.max_abs());
        for i in 0..n / 2 {
            let (a, b) = (self.values[i], self.values[n - 1 - i]);
            let ok = match self.parity {
                Parity::Even => (a - b).abs() <= tol,
                Parity::Odd => (a + b).abs() <= tol,
                Parity::None => true,
            };
            if !ok {
                return Err(FracError::InvalidParameter(format!(
                    "values do not have {:?} parity at node pair ({i}, {})",
                    self.parity,
                    n - 1 - i
                )));
            }
        }
        if self.parity == Parity::Odd && self.values[self.grid.mid()].abs() > tol {
            return Err(FracError::InvalidParameter(
                "odd function must vanish at x = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn set_parity(&mut self, parity: Parity) -> Result<()> {
        self.parity = parity;
        self.check_parity()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Value at x by linear interpolation, zero outside [-L, L].
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.grid.half_width();
        if x <= -l || x >= l {
            return 0.0;
        }
        let pos = (x + l) / self.grid.spacing();
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Quadrature over the domain by composite Simpson (the node count is
    /// odd, so the interval count is even).
    pub fn integrate(&self) -> f64 {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let mut acc = self.values[0] + self.values[n - 1];
        for i in 1..n - 1 {
            acc += self.values[i] * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// Uniform-weight pairing h * sum(u v), the discrete L2 product matched
    /// to the operator's energy pairing.
    pub fn dot_uniform(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        let h = self.grid.spacing();
        Ok(h * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(FracError::GridMismatch(
                "functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise map, parity downgraded to None unless preserved by the
    /// caller via set_parity.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            parity: Parity::None,
        }
    }

    /// Centered derivative: fourth order in the interior, second order
    /// one-sided at the ends. Even functions map to odd ones and vice versa.
    pub fn derivative(&self) -> GridFunction {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[1] = (v[2] - v[0]) / (2.0 * h);
        for i in 2..n - 2 {
            d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
        }
        d[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        let parity = match self.parity {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        };
        let mut out = GridFunction { grid: self.grid, values: d, parity };
        // parity can be off by rounding at the fold; symmetrize exactly
        if parity != Parity::None {
            out.symmetrize();
        }
        out
    }

    /// Project exactly onto the stored parity sector.
    pub fn symmetrize(&mut self) {
        let n = self.grid.len();
        match self.parity {
            Parity::Even => {
                for i in 0..n / 2 {
                    let avg = 0.5 * (self.values[i] + self.values[n - 1 - i]);
                    self.values[i] = avg;
                    self.values[n - 1 - i] = avg;
                }
            }
            Parity::Odd => {
                for i in 0..n / 2 {
                    let half = 0.5 * (self.values[i] - self.values[n - 1 - i]);
                    self.values[i] = half;
                    self.values[n - 1 - i] = -half;
                }
                self.values[self.grid.mid()] = 0.0;
            }
            Parity::None => {}
        }
    }

    /// Discrete L2 norm with uniform weights.
    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Count sign changes over 0 < x < L, ignoring values below the noise
    /// threshold.
    pub fn sign_changes_right(&self, threshold: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for i in self.grid.mid() + 1..self.grid.len() - 1 {
            let v = self.values[i];
            if v.abs() <= threshold {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }
}
