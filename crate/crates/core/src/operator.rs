//! The forward imaging operator `Af(x,t_q) = ∫ PSF(x−y) I(y,t_q) f(y) dy`,
//! its adjoint, the composed imaging kernel, the Riemann-sum discrete kernel,
//! and the general encode/decode pipeline.

use num_complex::Complex64;
use rand::Rng;
use std::io::Write;

use crate::grid::{GridFunction, Point, UniformGrid};
use crate::measures::{DiscreteMeasure, NoiseBound};
use crate::optics::{psf_autocorrelation, AutocorrOptions, IlluminationSequence, Psf};
use crate::{Error, Result};

/// Uniform camera sampling of the box [−R, R]^d with `per_axis` midpoint
/// samples per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraGrid {
    pub half_width: f64,
    pub per_axis: usize,
    pub dim: usize,
}

impl CameraGrid {
    pub fn new(half_width: f64, per_axis: usize, dim: usize) -> Result<Self> {
        if !(half_width >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "camera half-width must be >= 1, got {half_width}"
            )));
        }
        if per_axis < 2 || !(dim == 1 || dim == 2) {
            return Err(Error::InvalidParameter(
                "camera needs per_axis >= 2 and dim in {1,2}".into(),
            ));
        }
        Ok(CameraGrid {
            half_width,
            per_axis,
            dim,
        })
    }

    pub fn axis(&self) -> UniformGrid {
        // midpoints of a uniform partition of [−R, R]
        let h = 2.0 * self.half_width / self.per_axis as f64;
        UniformGrid {
            start: -self.half_width + 0.5 * h,
            step: h,
            len: self.per_axis,
        }
    }

    pub fn n_pixels(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * self.half_width / self.per_axis as f64).powi(self.dim as i32)
    }

    pub fn points(&self) -> Vec<Point> {
        let ax = self.axis();
        if self.dim == 1 {
            ax.points_d1()
        } else {
            let mut pts = Vec::with_capacity(self.n_pixels());
            for i in 0..ax.len {
                for j in 0..ax.len {
                    pts.push(Point::d2(ax.point(i), ax.point(j)));
                }
            }
            pts
        }
    }
}

/// N camera frames, one per illumination pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    pub camera: CameraGrid,
    pub frames: Vec<Vec<Complex64>>,
}

impl ImageStack {
    pub fn new(camera: CameraGrid, frames: Vec<Vec<Complex64>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidParameter("empty image stack".into()));
        }
        if frames.iter().any(|f| f.len() != camera.n_pixels()) {
            return Err(Error::LengthMismatch("frame size vs camera grid"));
        }
        Ok(ImageStack { camera, frames })
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn zeros(camera: CameraGrid, n_frames: usize) -> Self {
        ImageStack {
            camera,
            frames: vec![vec![Complex64::new(0.0, 0.0); camera.n_pixels()]; n_frames],
        }
    }

    pub fn add(&self, other: &ImageStack) -> Result<ImageStack> {
        if self.camera != other.camera || self.n_frames() != other.n_frames() {
            return Err(Error::LengthMismatch("stack shapes differ"));
        }
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(ImageStack {
            camera: self.camera,
            frames,
        })
    }

    /// Discrete L1 norm of one frame.
    pub fn frame_l1(&self, q: usize) -> f64 {
        self.camera.cell_volume() * self.frames[q].iter().map(|v| v.norm()).sum::<f64>()
    }

    /// `(1/N) Σ_q h^d Σ_x a_q(x) conj(b_q(x))` — the inner product used by
    /// the duality checks.
    pub fn inner(&self, other: &ImageStack) -> Result<Complex64> {
        if self.camera != other.camera || self.n_frames() != other.n_frames() {
            return Err(Error::LengthMismatch("stack shapes differ"));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.frames.iter().zip(&other.frames) {
            for (x, y) in a.iter().zip(b) {
                acc += x * y.conj();
            }
        }
        Ok(acc * self.camera.cell_volume() / self.n_frames() as f64)
    }

    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for f in &self.frames {
            acc += f.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        (acc * self.camera.cell_volume() / self.n_frames() as f64).sqrt()
    }

    /// Write one frame as CSV `x1[,x2],re,im`.
    pub fn frame_to_csv<W: Write>(&self, q: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.camera.dim == 1 {
            w.write_record(["x1", "re", "im"])?;
        } else {
            w.write_record(["x1", "x2", "re", "im"])?;
        }
        for (p, v) in self.camera.points().iter().zip(&self.frames[q]) {
            let mut rec: Vec<String> = p.coords().iter().map(|c| format!("{c:.17e}")).collect();
            rec.push(format!("{:.17e}", v.re));
            rec.push(format!("{:.17e}", v.im));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Source argument of the forward operator.
#[derive(Debug, Clone)]
pub enum Source<'a> {
    Measure(&'a DiscreteMeasure),
    Grid(&'a GridFunction),
}

fn psf_at(psf: &Psf, u: &Point) -> Result<f64> {
    // sampled PSFs are compactly supported: outside their domain they are zero
    match psf.evaluate(u) {
        Err(Error::OutOfDomain) => Ok(0.0),
        other => other,
    }
}

fn in_unit_box(p: &Point) -> bool {
    p.coords().iter().all(|&c| (-1e-12..=1.0 + 1e-12).contains(&c))
}

/// Forward operator: frame q at pixel x is `∫ PSF(x−y) I(y,t_q) f(y) dy`
/// (an exact atom sum for discrete measures, midpoint quadrature for grid
/// sources).
pub fn forward(
    f: &Source,
    seq: &IlluminationSequence,
    psf: &Psf,
    camera: &CameraGrid,
) -> Result<ImageStack> {
    let pixels = camera.points();
    let mut frames = Vec::with_capacity(seq.len());
    match f {
        Source::Measure(mu) => {
            if mu.dim() != camera.dim {
                return Err(Error::DimensionMismatch);
            }
            if !mu.locations().iter().all(in_unit_box) {
                return Err(Error::SupportViolation);
            }
            for q in 0..seq.len() {
                let weights: Vec<Complex64> = mu
                    .locations()
                    .iter()
                    .zip(mu.amplitudes())
                    .map(|(y, a)| Ok(a * seq.evaluate(q, y)?))
                    .collect::<Result<_>>()?;
                let mut frame = Vec::with_capacity(pixels.len());
                for x in &pixels {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (y, w) in mu.locations().iter().zip(&weights) {
                        acc += w * psf_at(psf, &x.sub(y))?;
                    }
                    frame.push(acc);
                }
                frames.push(frame);
            }
        }
        Source::Grid(g) => {
            if g.dim() != camera.dim {
                return Err(Error::DimensionMismatch);
            }
            for axis in 0..g.dim() {
                let (lo, hi) = g.bounds(axis);
                if lo < -1e-12 || hi > 1.0 + 1e-12 {
                    return Err(Error::SupportViolation);
                }
            }
            let vol = g.cell_volume();
            for q in 0..seq.len() {
                let weights: Vec<Complex64> = (0..g.len())
                    .map(|i| {
                        let y = g.point_at(i);
                        Ok(g.samples()[i] * seq.evaluate(q, &y)? * vol)
                    })
                    .collect::<Result<_>>()?;
                let mut frame = Vec::with_capacity(pixels.len());
                for x in &pixels {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, w) in weights.iter().enumerate() {
                        if w.norm_sqr() != 0.0 {
                            acc += w * psf_at(psf, &x.sub(&g.point_at(i)))?;
                        }
                    }
                    frame.push(acc);
                }
                frames.push(frame);
            }
        }
    }
    ImageStack::new(*camera, frames)
}

/// Adjoint applied at arbitrary evaluation points:
/// `A*g(y) = (1/N) Σ_q ∫ conj(I(y,t_q) PSF(x−y)) g(x,t_q) dx`.
pub fn adjoint_at_points(
    images: &ImageStack,
    seq: &IlluminationSequence,
    psf: &Psf,
    ys: &[Point],
) -> Result<Vec<Complex64>> {
    adjoint_with_patterns(images, &|q, y| seq.evaluate(q, y), psf, ys)
}

/// Adjoint with a caller-supplied pattern evaluator (used by the perturbed-
/// pattern stability audit, where the assumed patterns differ from the ones
/// that produced the data).
pub fn adjoint_with_patterns(
    images: &ImageStack,
    pattern: &dyn Fn(usize, &Point) -> Result<Complex64>,
    psf: &Psf,
    ys: &[Point],
) -> Result<Vec<Complex64>> {
    let pixels = images.camera.points();
    let vol = images.camera.cell_volume();
    let n = images.n_frames() as f64;
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let mut acc = Complex64::new(0.0, 0.0);
        // x-integral is shared across frames only through the frame data, so
        // accumulate conj(PSF(x−y)) g_q(x) per frame.
        let mut psf_row = Vec::with_capacity(pixels.len());
        for x in &pixels {
            psf_row.push(psf_at(psf, &x.sub(y))?);
        }
        for (q, frame) in images.frames.iter().enumerate() {
            let mut xint = Complex64::new(0.0, 0.0);
            for (k, v) in frame.iter().enumerate() {
                xint += v * psf_row[k];
            }
            acc += pattern(q, y)?.conj() * xint;
        }
        out.push(acc * vol / n);
    }
    Ok(out)
}

/// Adjoint sampled on a uniform 1D grid, wrapped as a [`GridFunction`].
pub fn adjoint(
    images: &ImageStack,
    seq: &IlluminationSequence,
    psf: &Psf,
    y_grid: UniformGrid,
) -> Result<GridFunction> {
    if images.camera.dim != 1 {
        return Err(Error::InvalidParameter(
            "grid-wrapped adjoint is 1D; use adjoint_at_points for 2D".into(),
        ));
    }
    let vals = adjoint_at_points(images, seq, psf, &y_grid.points_d1())?;
    GridFunction::new_1d(y_grid, vals)
}

/// Dense kernel matrix G(z_i, y_j) on explicit point lists.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub z_points: Vec<Point>,
    pub y_points: Vec<Point>,
    /// Row-major: `values[i * y_points.len() + j] = G(z_i, y_j)`.
    pub values: Vec<Complex64>,
}

impl KernelMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.y_points.len() + j]
    }

    /// max |G(z,y) − conj(G(y,z))| over equal grids.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.z_points.len().min(self.y_points.len());
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["z".to_string()];
        for y in &self.y_points {
            header.push(format!("{:.9e}", y.coord(0)));
        }
        w.write_record(&header)?;
        for (i, z) in self.z_points.iter().enumerate() {
            let mut rec = vec![format!("{:.9e}", z.coord(0))];
            for j in 0..self.y_points.len() {
                let v = self.get(i, j);
                rec.push(format!("{:.9e}{:+.9e}i", v.re, v.im));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The composed kernel `G(z,y) = f_ILF(z,y) · f_PSF(z−y)` assembled from the
/// optics-module factors (independent of the forward/adjoint code path).
pub fn imaging_kernel(
    seq: &IlluminationSequence,
    psf: &Psf,
    z_points: &[Point],
    y_points: &[Point],
    opts: &AutocorrOptions,
) -> Result<KernelMatrix> {
    if z_points.is_empty() || y_points.is_empty() {
        return Err(Error::InvalidParameter("empty kernel grid".into()));
    }
    let dim = z_points[0].dim();
    let mut eff_opts = *opts;
    eff_opts.dim = Some(dim);
    // Cache the radial autocorrelation over the distinct lag distances.
    let mut lags: Vec<f64> = Vec::new();
    let mut lag_index = std::collections::HashMap::new();
    let mut pair_lag = Vec::with_capacity(z_points.len() * y_points.len());
    for z in z_points {
        for y in y_points {
            let u = z.dist(y);
            let key = (u / 1e-12).round() as i64;
            let idx = *lag_index.entry(key).or_insert_with(|| {
                lags.push(u);
                lags.len() - 1
            });
            pair_lag.push(idx);
        }
    }
    let fpsf = psf_autocorrelation(psf, &lags, &eff_opts)?;
    let mut values = Vec::with_capacity(pair_lag.len());
    let mut k = 0;
    for z in z_points {
        for y in y_points {
            let filf = seq.correlation(z, y)?;
            values.push(filf * fpsf[pair_lag[k]]);
            k += 1;
        }
    }
    Ok(KernelMatrix {
        z_points: z_points.to_vec(),
        y_points: y_points.to_vec(),
        values,
    })
}

/// Riemann-sum kernel over left-endpoint camera samples:
/// `W(z,y) = (1/N) Σ_q conj(I(z,t_q)) I(y,t_q) · (1/M^d) Σ_j PSF(x_j−z) PSF(x_j−y)`
/// with `x_j` the left endpoints of a uniform partition of [−R,R]^d.
pub fn discrete_kernel(
    seq: &IlluminationSequence,
    psf: &Psf,
    z_points: &[Point],
    y_points: &[Point],
    m: usize,
    r: f64,
) -> Result<KernelMatrix> {
    if m < 2 {
        return Err(Error::InvalidParameter("need M >= 2".into()));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter("need R >= 1".into()));
    }
    if z_points.is_empty() || y_points.is_empty() {
        return Err(Error::InvalidParameter("empty kernel grid".into()));
    }
    let dim = z_points[0].dim();
    let h = 2.0 * r / m as f64;
    let axis: Vec<f64> = (0..m).map(|j| -r + j as f64 * h).collect();
    let samples: Vec<Point> = if dim == 1 {
        axis.iter().map(|&x| Point::d1(x)).collect()
    } else {
        let mut pts = Vec::with_capacity(m * m);
        for &a in &axis {
            for &b in &axis {
                pts.push(Point::d2(a, b));
            }
        }
        pts
    };
    let inv = 1.0 / samples.len() as f64;
    let mut values = Vec::with_capacity(z_points.len() * y_points.len());
    for z in z_points {
        let kz: Vec<f64> = samples
            .iter()
            .map(|x| psf_at(psf, &x.sub(z)))
            .collect::<Result<_>>()?;
        for y in y_points {
            let mut xsum = 0.0;
            for (x, &a) in samples.iter().zip(&kz) {
                if a != 0.0 {
                    xsum += a * psf_at(psf, &x.sub(y))?;
                }
            }
            values.push(seq.correlation(z, y)? * (xsum * inv));
        }
    }
    Ok(KernelMatrix {
        z_points: z_points.to_vec(),
        y_points: y_points.to_vec(),
        values,
    })
}

/// Named bounded pointwise maps for the general decoder; restricting to a
/// registry keeps CLI runs reproducible from plain config files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointwiseMap {
    Identity,
    Conj,
    /// v^k for 2 ≤ k ≤ 5
    Power(u32),
    /// clamp re and im into [lo, hi]
    Clamp { lo: f64, hi: f64 },
}

impl PointwiseMap {
    pub fn cube() -> Self {
        PointwiseMap::Power(3)
    }

    pub fn from_key(key: &str) -> Result<Self> {
        match key {
            "identity" => Ok(PointwiseMap::Identity),
            "conj" => Ok(PointwiseMap::Conj),
            "square" => Ok(PointwiseMap::Power(2)),
            "cube" => Ok(PointwiseMap::Power(3)),
            "power4" => Ok(PointwiseMap::Power(4)),
            "power5" => Ok(PointwiseMap::Power(5)),
            "clamp" => Ok(PointwiseMap::Clamp { lo: -1.0, hi: 1.0 }),
            other => Err(Error::Parse(format!("unknown pointwise map `{other}`"))),
        }
    }

    pub fn apply(&self, v: Complex64) -> Result<Complex64> {
        let out = match self {
            PointwiseMap::Identity => v,
            PointwiseMap::Conj => v.conj(),
            PointwiseMap::Power(k) => {
                if !(2..=5).contains(k) {
                    return Err(Error::InvalidParameter("power must be in 2..=5".into()));
                }
                v.powu(*k)
            }
            PointwiseMap::Clamp { lo, hi } => {
                Complex64::new(v.re.clamp(*lo, *hi), v.im.clamp(*lo, *hi))
            }
        };
        if out.re.is_finite() && out.im.is_finite() {
            Ok(out)
        } else {
            Err(Error::MapOverflow)
        }
    }
}

/// General decoder of the encode/decode pipeline:
/// `Dg(z) = (1/N) Σ_q g1(I(z,t_q)) · ∫ g2(PSF(x−z)) g(x,t_q) dx`.
/// With `g1 = g2 = conj` (or identity for real patterns/PSFs) this is the
/// adjoint applied to the stack.
pub fn general_decode(
    images: &ImageStack,
    seq: &IlluminationSequence,
    psf: &Psf,
    g1: PointwiseMap,
    g2: PointwiseMap,
    zs: &[Point],
) -> Result<Vec<Complex64>> {
    if images.n_frames() != seq.len() {
        return Err(Error::LengthMismatch("stack frames vs patterns"));
    }
    let pixels = images.camera.points();
    let vol = images.camera.cell_volume();
    let n = images.n_frames() as f64;
    let mut out = Vec::with_capacity(zs.len());
    for z in zs {
        let mut w = Vec::with_capacity(pixels.len());
        for x in &pixels {
            w.push(g2.apply(Complex64::new(psf_at(psf, &x.sub(z))?, 0.0))?);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, frame) in images.frames.iter().enumerate() {
            let mut xint = Complex64::new(0.0, 0.0);
            for (k, v) in frame.iter().enumerate() {
                xint += v * w[k];
            }
            acc += g1.apply(seq.evaluate(q, z)?)? * xint;
        }
        out.push(acc * vol / n);
    }
    Ok(out)
}

/// Deterministic-bound noise models; both scale every frame to discrete
/// L1 norm exactly `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// i.i.d. uniform [−1, 1] real samples per pixel
    UniformBounded,
    /// `sin(freq·x1 + phase)` — concentrates the budget near one frequency
    WorstCaseSine { freq: f64, phase: f64 },
}

/// Generate per-frame noise with discrete L1 norm equal to `bound.sigma()`.
pub fn generate_noise(
    camera: &CameraGrid,
    n_frames: usize,
    bound: &NoiseBound,
    mode: NoiseMode,
    rng: &mut impl Rng,
) -> Vec<Vec<Complex64>> {
    let sigma = bound.sigma();
    let pixels = camera.points();
    let vol = camera.cell_volume();
    (0..n_frames)
        .map(|_| {
            let mut raw: Vec<f64> = match mode {
                NoiseMode::UniformBounded => {
                    (0..pixels.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
                NoiseMode::WorstCaseSine { freq, phase } => pixels
                    .iter()
                    .map(|p| (freq * p.coord(0) + phase).sin())
                    .collect(),
            };
            let l1 = vol * raw.iter().map(|v| v.abs()).sum::<f64>();
            let scale = if l1 > 0.0 { sigma / l1 } else { 0.0 };
            raw.iter_mut().for_each(|v| *v *= scale);
            raw.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
        })
        .collect()
}

/// Add bounded noise to a stack; the perturbation of every frame has discrete
/// L1 norm exactly `bound.sigma()` (or is zero when sigma = 0).
pub fn add_noise(
    images: &ImageStack,
    bound: &NoiseBound,
    mode: NoiseMode,
    rng: &mut impl Rng,
) -> Result<ImageStack> {
    if bound.sigma() == 0.0 {
        return Ok(images.clone());
    }
    let noise = generate_noise(&images.camera, images.n_frames(), bound, mode, rng);
    images.add(&ImageStack::new(images.camera, noise)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn delta(y: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![Point::d1(y)], vec![c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn forward_sifting_property() {
        let psf = Psf::sinc(PI).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let camera = CameraGrid::new(4.0, 64, 1).unwrap();
        let mu = delta(0.5);
        let stack = forward(&Source::Measure(&mu), &seq, &psf, &camera).unwrap();
        for (x, v) in camera.points().iter().zip(&stack.frames[0]) {
            let want = psf.eval1(x.coord(0) - 0.5).unwrap();
            assert!((v.re - want).abs() < 1e-12 && v.im == 0.0);
        }
    }

    #[test]
    fn forward_plane_wave_modulation() {
        let psf = Psf::gaussian(0.2).unwrap();
        let omega = 3.0;
        let seq = IlluminationSequence::new(vec![crate::optics::Pattern::PlaneWave {
            direction: Point::d1(1.0),
            omega,
        }])
        .unwrap();
        let camera = CameraGrid::new(2.0, 32, 1).unwrap();
        let y0 = 0.4;
        let stack = forward(&Source::Measure(&delta(y0)), &seq, &psf, &camera).unwrap();
        for (x, v) in camera.points().iter().zip(&stack.frames[0]) {
            let want =
                Complex64::from_polar(1.0, omega * y0) * psf.eval1(x.coord(0) - y0).unwrap();
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_superposition() {
        let psf = Psf::sinc(PI).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let camera = CameraGrid::new(4.0, 48, 1).unwrap();
        let mu = DiscreteMeasure::new(
            vec![Point::d1(0.2), Point::d1(0.8)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let both = forward(&Source::Measure(&mu), &seq, &psf, &camera).unwrap();
        let a = forward(&Source::Measure(&delta(0.2)), &seq, &psf, &camera).unwrap();
        let b = forward(&Source::Measure(&delta(0.8)), &seq, &psf, &camera).unwrap();
        for k in 0..camera.n_pixels() {
            let want = a.frames[0][k] + b.frames[0][k];
            assert!((both.frames[0][k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_outside_support() {
        let psf = Psf::sinc(PI).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let camera = CameraGrid::new(2.0, 16, 1).unwrap();
        let mu = delta(1.5);
        assert!(matches!(
            forward(&Source::Measure(&mu), &seq, &psf, &camera),
            Err(Error::SupportViolation)
        ));
    }

    #[test]
    fn adjoint_of_zero_stack() {
        let psf = Psf::sinc(PI).unwrap();
        let seq = IlluminationSequence::sim_pair(PI).unwrap();
        let camera = CameraGrid::new(2.0, 32, 1).unwrap();
        let stack = ImageStack::zeros(camera, 2);
        let grid = UniformGrid::endpoints(0.0, 1.0, 9).unwrap();
        let out = adjoint(&stack, &seq, &psf, grid).unwrap();
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn adjoint_forward_matches_imaging_kernel() {
        // A*A δ_{y0} evaluated at z equals G(z, y0), two independent paths.
        let omega = PI;
        let psf = Psf::sinc(omega).unwrap();
        let seq = IlluminationSequence::sim_pair(omega).unwrap();
        // camera large enough that the x-integral approximates the full line
        let camera = CameraGrid::new(64.0, 4096, 1).unwrap();
        let y0 = 0.5;
        let stack = forward(&Source::Measure(&delta(y0)), &seq, &psf, &camera).unwrap();
        let zs: Vec<Point> = [0.2, 0.45, 0.5, 0.8].iter().map(|&z| Point::d1(z)).collect();
        let got = adjoint_at_points(&stack, &seq, &psf, &zs).unwrap();
        let kernel = imaging_kernel(
            &seq,
            &psf,
            &zs,
            &[Point::d1(y0)],
            &AutocorrOptions {
                half_width: Some(64.0),
                steps: 1 << 13,
                ..Default::default()
            },
        )
        .unwrap();
        for (i, v) in got.iter().enumerate() {
            let want = kernel.get(i, 0);
            assert!(
                (v - want).norm() < 2e-2 * want.norm().max(1.0),
                "z={}: got {v}, kernel {want}",
                zs[i].coord(0)
            );
        }
    }

    #[test]
    fn kernel_product_form_sim() {
        let omega = PI;
        let psf = Psf::sinc(omega).unwrap();
        let seq = IlluminationSequence::sim_pair(omega).unwrap();
        let zs: Vec<Point> = [0.1, 0.4, 0.9].iter().map(|&z| Point::d1(z)).collect();
        let ys: Vec<Point> = [0.0, 0.5].iter().map(|&y| Point::d1(y)).collect();
        let opts = AutocorrOptions {
            half_width: Some(400.0 / omega),
            steps: 1 << 14,
            ..Default::default()
        };
        let kernel = imaging_kernel(&seq, &psf, &zs, &ys, &opts).unwrap();
        for (i, z) in zs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let u = z.coord(0) - y.coord(0);
                let want = (omega * u).cos() * PI * (omega * u).sin() / u;
                let got = kernel.get(i, j);
                assert!(
                    (got.re - want).abs() < 5e-3 * PI * omega && got.im.abs() < 1e-12,
                    "u={u}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn kernel_constant_illumination_equals_autocorrelation() {
        let psf = Psf::gaussian(0.3).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let zs: Vec<Point> = (0..5).map(|i| Point::d1(i as f64 * 0.25)).collect();
        let kernel = imaging_kernel(&seq, &psf, &zs, &zs, &AutocorrOptions::default()).unwrap();
        assert!(kernel.hermitian_defect() < 1e-12);
        for i in 0..zs.len() {
            // diagonal equals zero-lag autocorrelation = w√π
            assert!((kernel.get(i, i).re - 0.3 * PI.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn discrete_kernel_positive_diagonal() {
        let psf = Psf::gaussian(0.2).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let zs = [Point::d1(0.3), Point::d1(0.7)];
        let w = discrete_kernel(&seq, &psf, &zs, &zs, 256, 4.0).unwrap();
        assert!(w.get(0, 0).re > 0.0 && w.get(1, 1).re > 0.0);
    }

    #[test]
    fn discrete_kernel_converges_to_imaging_kernel() {
        let psf = Psf::gaussian(0.2).unwrap();
        let seq = IlluminationSequence::constant(1.0).unwrap();
        let zs: Vec<Point> = [0.0, 0.25, 0.6, 1.0].iter().map(|&z| Point::d1(z)).collect();
        let r = 8.0;
        let w = discrete_kernel(&seq, &psf, &zs, &zs, 4096, r).unwrap();
        let g = imaging_kernel(&seq, &psf, &zs, &zs, &AutocorrOptions::default()).unwrap();
        for i in 0..zs.len() {
            for j in 0..zs.len() {
                let scaled = w.get(i, j) * 2.0 * r;
                let want = g.get(i, j);
                assert!(
                    (scaled - want).norm() <= 1e-3 * want.norm().max(1e-3),
                    "W(2R)={scaled} vs G={want}"
                );
            }
        }
    }

    #[test]
    fn duality_inner_products_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psf = Psf::sinc(PI).unwrap();
        let seq = IlluminationSequence::sim_pair(PI).unwrap();
        let camera = CameraGrid::new(4.0, 128, 1).unwrap();
        let mu = DiscreteMeasure::new(
            vec![Point::d1(0.3), Point::d1(0.8)],
            vec![c(1.0, -0.5), c(0.7, 0.2)],
        )
        .unwrap();
        let af = forward(&Source::Measure(&mu), &seq, &psf, &camera).unwrap();
        let g = ImageStack::new(
            camera,
            (0..2)
                .map(|_| {
                    (0..camera.n_pixels())
                        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let lhs = af.inner(&g).unwrap();
        let astar = adjoint_at_points(&g, &seq, &psf, mu.locations()).unwrap();
        let rhs: Complex64 = mu
            .amplitudes()
            .iter()
            .zip(&astar)
            .map(|(a, v)| a * v.conj())
            .sum();
        assert!((lhs - rhs).norm() < 1e-10 * (af.norm() * g.norm()));
    }

    #[test]
    fn decode_identity_matches_adjoint_for_real_patterns() {
        let psf = Psf::gaussian(0.2).unwrap();
        let seq = IlluminationSequence::translated_sweep(
            Psf::gaussian(0.3).unwrap(),
            -2.0,
            2.0,
            9,
        )
        .unwrap();
        let camera = CameraGrid::new(2.0, 64, 1).unwrap();
        let stack = forward(&Source::Measure(&delta(0.5)), &seq, &psf, &camera).unwrap();
        let zs: Vec<Point> = (0..7).map(|i| Point::d1(i as f64 / 6.0)).collect();
        let dec = general_decode(
            &stack,
            &seq,
            &psf,
            PointwiseMap::Identity,
            PointwiseMap::Identity,
            &zs,
        )
        .unwrap();
        let adj = adjoint_at_points(&stack, &seq, &psf, &zs).unwrap();
        for (a, b) in dec.iter().zip(&adj) {
            assert!((a - b).norm() < 1e-12);
        }
        // conj maps agree as well for real patterns and real PSFs
        let dec_conj = general_decode(
            &stack,
            &seq,
            &psf,
            PointwiseMap::Conj,
            PointwiseMap::Conj,
            &zs,
        )
        .unwrap();
        for (a, b) in dec_conj.iter().zip(&adj) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_l1_budget_exact() {
        let camera = CameraGrid::new(2.0, 128, 1).unwrap();
        let stack = ImageStack::zeros(camera, 3);
        let sigma = 0.37;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let noisy = add_noise(
            &stack,
            &NoiseBound::new(sigma).unwrap(),
            NoiseMode::UniformBounded,
            &mut rng,
        )
        .unwrap();
        for q in 0..3 {
            assert!((noisy.frame_l1(q) - sigma).abs() < 1e-12);
        }
        // sigma = 0 leaves the stack untouched
        let same = add_noise(
            &stack,
            &NoiseBound::new(0.0).unwrap(),
            NoiseMode::UniformBounded,
            &mut rng,
        )
        .unwrap();
        assert_eq!(same, stack);
    }

    #[test]
    fn worst_case_sine_dft_peak_bounded() {
        let camera = CameraGrid::new(4.0, 512, 1).unwrap();
        let sigma = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frames = generate_noise(
            &camera,
            1,
            &NoiseBound::new(sigma).unwrap(),
            NoiseMode::WorstCaseSine {
                freq: 2.0 * PI,
                phase: 0.3,
            },
            &mut rng,
        );
        let ax = camera.axis();
        let freqs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
        let spec = crate::numerics::nudft_uniform(ax.start, ax.step, &frames[0], &freqs);
        let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        // |DFT| ≤ discrete L1 norm = sigma
        assert!(peak <= sigma + 1e-12);
        assert!((camera.cell_volume() * frames[0].iter().map(|v| v.norm()).sum::<f64>() - sigma).abs() < 1e-12);
    }
}
