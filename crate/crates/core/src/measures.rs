//! Discrete point-source measures μ = Σ_j a_j δ_{y_j} and their Fourier
//! transforms, plus the noise-level wrapper used by the stability audits.

use num_complex::Complex64;
use std::io::{Read, Write};

use crate::{Error, Point, Result};

/// Two locations closer than this (per coordinate distance) are rejected as
/// duplicates at construction time.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    locations: Vec<Point>,
    amplitudes: Vec<Complex64>,
    positive: bool,
}

impl DiscreteMeasure {
    pub fn new(locations: Vec<Point>, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::build(locations, amplitudes, false)
    }

    /// Constructor that additionally checks every amplitude is real and > 0
    /// and sets the positivity flag.
    pub fn new_positive(locations: Vec<Point>, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::build(locations, amplitudes, true)
    }

    fn build(locations: Vec<Point>, amplitudes: Vec<Complex64>, positive: bool) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if locations.len() != amplitudes.len() {
            return Err(Error::LengthMismatch("locations vs amplitudes"));
        }
        let dim = locations[0].dim();
        if !locations.iter().all(|p| p.dim() == dim && p.is_finite()) {
            return Err(Error::DimensionMismatch);
        }
        for (j, a) in amplitudes.iter().enumerate() {
            if a.norm() == 0.0 {
                return Err(Error::ZeroAmplitude(j));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite amplitude {j}")));
            }
            if positive && !(a.im == 0.0 && a.re > 0.0) {
                return Err(Error::PositivityViolated(j));
            }
        }
        for i in 0..locations.len() {
            for j in (i + 1)..locations.len() {
                if locations[i].dist(&locations[j]) < DEDUP_TOL {
                    return Err(Error::DuplicateLocations(DEDUP_TOL));
                }
            }
        }
        Ok(DiscreteMeasure {
            locations,
            amplitudes,
            positive,
        })
    }

    pub fn dim(&self) -> usize {
        self.locations[0].dim()
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty measures
    }

    pub fn locations(&self) -> &[Point] {
        &self.locations
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// F[μ](ξ) = Σ_j a_j e^{i y_j·ξ} for each frequency point.
    pub fn fourier(&self, xi_grid: &[Point]) -> Result<Vec<Complex64>> {
        if xi_grid.is_empty() {
            return Err(Error::InvalidParameter("empty frequency grid".into()));
        }
        if xi_grid.iter().any(|xi| xi.dim() != self.dim()) {
            return Err(Error::DimensionMismatch);
        }
        Ok(xi_grid
            .iter()
            .map(|xi| {
                self.locations
                    .iter()
                    .zip(&self.amplitudes)
                    .map(|(y, a)| a * Complex64::from_polar(1.0, y.dot(xi)))
                    .sum()
            })
            .collect())
    }

    /// 1D convenience wrapper over [`fourier`](Self::fourier).
    pub fn fourier_1d(&self, xi_grid: &[f64]) -> Result<Vec<Complex64>> {
        let pts: Vec<Point> = xi_grid.iter().map(|&x| Point::d1(x)).collect();
        self.fourier(&pts)
    }

    /// Minimum pairwise Euclidean distance between source locations.
    pub fn min_separation(&self) -> Result<f64> {
        if self.locations.len() < 2 {
            return Err(Error::SeparationUndefined);
        }
        let mut best = f64::INFINITY;
        for i in 0..self.locations.len() {
            for j in (i + 1)..self.locations.len() {
                best = best.min(self.locations[i].dist(&self.locations[j]));
            }
        }
        Ok(best)
    }

    /// min_j |a_j|, the smallest amplitude modulus m_min.
    pub fn min_amplitude(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sum_abs_amplitudes(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).sum()
    }

    /// Serialize as CSV with header `y1[,y2],re,im`.
    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.dim() == 1 {
            w.write_record(["y1", "re", "im"])?;
        } else {
            w.write_record(["y1", "y2", "re", "im"])?;
        }
        for (p, a) in self.locations.iter().zip(&self.amplitudes) {
            let mut rec: Vec<String> = p.coords().iter().map(|c| format!("{c:.17e}")).collect();
            rec.push(format!("{:.17e}", a.re));
            rec.push(format!("{:.17e}", a.im));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let dim = match headers.len() {
            3 => 1,
            4 => 2,
            n => {
                return Err(Error::Parse(format!(
                    "expected 3 or 4 columns (y1[,y2],re,im), got {n}"
                )))
            }
        };
        let mut locations = Vec::new();
        let mut amplitudes = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("short record".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad float: {e}")))
            };
            if dim == 1 {
                locations.push(Point::d1(field(0)?));
                amplitudes.push(Complex64::new(field(1)?, field(2)?));
            } else {
                locations.push(Point::d2(field(0)?, field(1)?));
                amplitudes.push(Complex64::new(field(2)?, field(3)?));
            }
        }
        Self::new(locations, amplitudes)
    }
}

/// A deterministic noise budget σ ≥ 0 (L1 or sup sense depending on context).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBound {
    sigma: f64,
}

impl NoiseBound {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(NoiseBound { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}
