//! Points, uniform grids and sampled grid functions in dimension 1 or 2.

use num_complex::Complex64;

use crate::{Error, Result};

/// A point in R^d with d ∈ {1, 2}. The second coordinate is unused for d = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: usize,
}

impl Point {
    pub fn d1(x: f64) -> Self {
        Point { coords: [x, 0.0], dim: 1 }
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Point { coords: [x, y], dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point {
            coords: [
                self.coords[0] - other.coords[0],
                self.coords[1] - other.coords[1],
            ],
            dim: self.dim,
        }
    }

    pub fn translate(&self, offset: &Point) -> Point {
        Point {
            coords: [
                self.coords[0] + offset.coords[0],
                self.coords[1] + offset.coords[1],
            ],
            dim: self.dim,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

/// A uniform 1D grid `start + i*step` for `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// `n` points spanning `[lo, hi]` inclusive of both endpoints.
    pub fn endpoints(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "grid needs n >= 2 and hi > lo (got n={n}, lo={lo}, hi={hi})"
            )));
        }
        Ok(UniformGrid {
            start: lo,
            step: (hi - lo) / (n - 1) as f64,
            len: n,
        })
    }

    /// `n` cell midpoints of a uniform partition of `[lo, hi]`.
    pub fn midpoints(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 1 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "grid needs n >= 1 and hi > lo (got n={n}, lo={lo}, hi={hi})"
            )));
        }
        let h = (hi - lo) / n as f64;
        Ok(UniformGrid {
            start: lo + 0.5 * h,
            step: h,
            len: n,
        })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn points_d1(&self) -> Vec<Point> {
        (0..self.len).map(|i| Point::d1(self.point(i))).collect()
    }
}

/// A dense complex-valued function sampled on a uniform grid over an
/// axis-aligned box; d = 1 stores `shape[1] = 1`. Samples are row-major
/// (`index = i0 * shape[1] + i1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    origin: [f64; 2],
    step: [f64; 2],
    shape: [usize; 2],
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new_1d(grid: UniformGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len {
            return Err(Error::LengthMismatch("samples vs grid length"));
        }
        if grid.len < 2 {
            return Err(Error::InvalidParameter("need >= 2 samples per axis".into()));
        }
        if !samples.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(GridFunction {
            dim: 1,
            origin: [grid.start, 0.0],
            step: [grid.step, 1.0],
            shape: [grid.len, 1],
            samples,
        })
    }

    pub fn new_2d(gx: UniformGrid, gy: UniformGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != gx.len * gy.len {
            return Err(Error::LengthMismatch("samples vs grid shape"));
        }
        if gx.len < 2 || gy.len < 2 {
            return Err(Error::InvalidParameter("need >= 2 samples per axis".into()));
        }
        if !samples.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(GridFunction {
            dim: 2,
            origin: [gx.start, gy.start],
            step: [gx.step, gy.step],
            shape: [gx.len, gy.len],
            samples,
        })
    }

    pub fn from_fn_1d(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = (0..grid.len).map(|i| f(grid.point(i))).collect();
        Self::new_1d(grid, samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn step(&self) -> &[f64] {
        &self.step[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Volume of one grid cell (h for d=1, hx*hy for d=2).
    pub fn cell_volume(&self) -> f64 {
        self.step[..self.dim].iter().product()
    }

    pub fn axis_grid(&self, axis: usize) -> UniformGrid {
        UniformGrid {
            start: self.origin[axis],
            step: self.step[axis],
            len: self.shape[axis],
        }
    }

    pub fn point_at(&self, index: usize) -> Point {
        let (i0, i1) = (index / self.shape[1], index % self.shape[1]);
        let x = self.origin[0] + i0 as f64 * self.step[0];
        if self.dim == 1 {
            Point::d1(x)
        } else {
            Point::d2(x, self.origin[1] + i1 as f64 * self.step[1])
        }
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        (
            self.origin[axis],
            self.origin[axis] + (self.shape[axis] - 1) as f64 * self.step[axis],
        )
    }

    /// Multilinear interpolation; errors outside the sampled box.
    pub fn value_at(&self, p: &Point) -> Result<Complex64> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch);
        }
        let mut idx = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for axis in 0..self.dim {
            let t = (p.coord(axis) - self.origin[axis]) / self.step[axis];
            let tol = 1e-9;
            if t < -tol || t > (self.shape[axis] - 1) as f64 + tol {
                return Err(Error::OutOfDomain);
            }
            let t = t.clamp(0.0, (self.shape[axis] - 1) as f64);
            let i = (t.floor() as usize).min(self.shape[axis] - 2);
            idx[axis] = i;
            frac[axis] = t - i as f64;
        }
        if self.dim == 1 {
            let a = self.samples[idx[0]];
            let b = self.samples[idx[0] + 1];
            Ok(a + (b - a) * frac[0])
        } else {
            let at = |i: usize, j: usize| self.samples[i * self.shape[1] + j];
            let (i, j) = (idx[0], idx[1]);
            let (fx, fy) = (frac[0], frac[1]);
            let top = at(i, j) + (at(i + 1, j) - at(i, j)) * fx;
            let bot = at(i, j + 1) + (at(i + 1, j + 1) - at(i, j + 1)) * fx;
            Ok(top + (bot - top) * fy)
        }
    }

    /// Discrete L1 norm (Riemann-sum approximation of ∫|f|).
    pub fn l1_norm(&self) -> f64 {
        self.cell_volume() * self.samples.iter().map(|v| v.norm()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction {
            samples: self.samples.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints() {
        let g = UniformGrid::endpoints(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn uniform_grid_midpoints() {
        let g = UniformGrid::midpoints(0.0, 1.0, 4).unwrap();
        assert_eq!(g.values(), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn point_distance_345() {
        let a = Point::d2(0.0, 0.0);
        let b = Point::d2(3.0, 4.0);
        assert_eq!(a.dist(&b), 5.0);
    }

    #[test]
    fn interpolation_1d_linear() {
        let g = UniformGrid::endpoints(0.0, 1.0, 3).unwrap();
        let f = GridFunction::from_fn_1d(g, |x| Complex64::new(2.0 * x, 0.0)).unwrap();
        let v = f.value_at(&Point::d1(0.3)).unwrap();
        assert!((v.re - 0.6).abs() < 1e-12);
        assert!(f.value_at(&Point::d1(1.5)).is_err());
    }

    #[test]
    fn interpolation_2d_bilinear() {
        let gx = UniformGrid::endpoints(0.0, 1.0, 2).unwrap();
        let gy = UniformGrid::endpoints(0.0, 1.0, 2).unwrap();
        // f(x,y) = x + 10y at the four corners.
        let samples = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(10.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(11.0, 0.0),
        ];
        let f = GridFunction::new_2d(gx, gy, samples).unwrap();
        let v = f.value_at(&Point::d2(0.25, 0.5)).unwrap();
        assert!((v.re - 5.25).abs() < 1e-12);
    }

    #[test]
    fn l1_norm_riemann() {
        let g = UniformGrid::midpoints(0.0, 1.0, 100).unwrap();
        let f = GridFunction::from_fn_1d(g, |_| Complex64::new(-2.0, 0.0)).unwrap();
        assert!((f.l1_norm() - 2.0).abs() < 1e-12);
    }
}
