//! Sampled complex wavefields and real-valued image grids.
//!
//! Samples are stored row-major. A field is an immutable value once built;
//! algorithms create new fields rather than mutating shared ones.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_shape, Error, Result};

/// Real-valued image on a `rows x cols` grid (amplitude, phase, intensity).
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Complex wavefield sampled on a square-pixel grid of side `pitch` meters.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    rows: usize,
    cols: usize,
    pitch: f64,
    samples: Vec<Complex64>,
}

impl WaveField {
    pub fn new(rows: usize, cols: usize, pitch: f64, samples: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "field dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::InvalidParameter(format!("pitch must be positive, got {pitch}")));
        }
        if samples.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: samples.len(),
            });
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self {
            rows,
            cols,
            pitch,
            samples,
        })
    }

    /// Builds a field whose invariants the caller already guarantees.
    pub(crate) fn from_parts(rows: usize, cols: usize, pitch: f64, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), rows * cols);
        Self {
            rows,
            cols,
            pitch,
            samples,
        }
    }

    pub fn filled(rows: usize, cols: usize, pitch: f64, value: Complex64) -> Result<Self> {
        Self::new(rows, cols, pitch, vec![value; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize, pitch: f64) -> Result<Self> {
        Self::filled(rows, cols, pitch, Complex64::new(0.0, 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.samples[row * self.cols + col]
    }

    /// New field on the same grid with samples mapped elementwise.
    pub(crate) fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(
            self.rows,
            self.cols,
            self.pitch,
            self.samples.iter().map(|&s| f(s)).collect(),
        )
    }

    pub fn amplitude(&self) -> RealGrid {
        RealGrid {
            rows: self.rows,
            cols: self.cols,
            data: self.samples.iter().map(|s| s.norm()).collect(),
        }
    }

    /// Principal-value phase in (-pi, pi].
    pub fn phase(&self) -> RealGrid {
        RealGrid {
            rows: self.rows,
            cols: self.cols,
            data: self.samples.iter().map(|s| principal_arg(*s)).collect(),
        }
    }

    /// `a * exp(j * phi)` elementwise; amplitudes must be nonnegative.
    pub fn compose(amplitude: &RealGrid, phase: &RealGrid, pitch: f64) -> Result<Self> {
        check_shape(amplitude.shape(), phase.shape())?;
        if let Some((index, &value)) = amplitude.data.iter().enumerate().find(|(_, a)| **a < 0.0) {
            return Err(Error::NegativeAmplitude { index, value });
        }
        let samples = amplitude
            .data
            .iter()
            .zip(&phase.data)
            .map(|(&a, &phi)| Complex64::from_polar(a, phi))
            .collect();
        Self::new(amplitude.rows, amplitude.cols, pitch, samples)
    }

    /// Squared l2 norm over all samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// `<self, other> = sum conj(self[k]) * other[k]`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        check_shape(self.shape(), other.shape())?;
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum())
    }

    /// Field multiplied by a complex constant.
    pub fn scaled(&self, factor: Complex64) -> Self {
        self.map(|s| s * factor)
    }

    /// Largest elementwise distance `|self[k] - other[k]|`.
    pub fn max_abs_diff(&self, other: &WaveField) -> Result<f64> {
        check_shape(self.shape(), other.shape())?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Argument in (-pi, pi]; `atan2` yields -pi for a negative real with a -0.0
/// imaginary part, which is folded onto +pi.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -PI {
        y += two_pi;
    } else if y > PI {
        y -= two_pi;
    }
    y
}

/// Phase-only chessboard object `exp(j * pi * (w - 1/2))` built from
/// `tile x tile` squares, with `w = 1` in the top-left tile.
pub fn make_chessboard_object(rows: usize, cols: usize, tile: usize, pitch: f64) -> Result<WaveField> {
    if tile == 0 || rows == 0 || cols == 0 || !rows.is_multiple_of(tile) || !cols.is_multiple_of(tile) {
        return Err(Error::NotDivisible { rows, cols, tile });
    }
    let mut samples = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let white = (i / tile + j / tile).is_multiple_of(2);
            // exp(+-j pi/2) written exactly.
            samples.push(if white {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, -1.0)
            });
        }
    }
    WaveField::new(rows, cols, pitch, samples)
}

/// Binary chessboard mask (`1.0` where the object phase is `+pi/2`).
pub fn chessboard_mask(rows: usize, cols: usize, tile: usize) -> Result<RealGrid> {
    if tile == 0 || rows == 0 || cols == 0 || !rows.is_multiple_of(tile) || !cols.is_multiple_of(tile) {
        return Err(Error::NotDivisible { rows, cols, tile });
    }
    RealGrid::from_fn(rows, cols, |i, j| (i / tile + j / tile).is_multiple_of(2) as u8 as f64)
}
