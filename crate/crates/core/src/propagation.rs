//! Angular-spectrum free-space propagation.
//!
//! The operator `A_z` is diagonal in the unitary DFT basis:
//! `A_z u = IDFT(H_z * DFT(u))` with
//! `H_z(f) = exp(i 2pi/lambda z sqrt(1 - (lambda fx)^2 - (lambda fy)^2))`
//! on propagating frequencies and zero on evanescent ones. The grid is
//! periodic; no padding is applied.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_shape, Error, Result};
use crate::fft::Fft2;
use crate::field::WaveField;
use crate::setup::OpticalSetup;

/// Per-frequency multipliers of one propagation distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    rows: usize,
    cols: usize,
    distance: f64,
    values: Vec<Complex64>,
}

impl TransferFunction {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Number of frequencies outside the propagating circle.
    pub fn evanescent_count(&self) -> usize {
        self.values.iter().filter(|h| h.norm_sqr() == 0.0).count()
    }
}

/// Signed wrap-around index: 0, 1, ..., n/2 - 1, -n/2, ..., -1 (for even n).
fn signed_index(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

pub fn make_transfer(setup: &OpticalSetup, z: f64) -> Result<TransferFunction> {
    setup.validate()?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "propagation distance must be nonnegative, got {z}"
        )));
    }
    let (rows, cols) = setup.shape();
    let lambda = setup.wavelength;
    let k = 2.0 * PI / lambda;
    let mut values = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        let fx = signed_index(m, rows) / (rows as f64 * setup.pitch);
        for n in 0..cols {
            let fy = signed_index(n, cols) / (cols as f64 * setup.pitch);
            let arg = 1.0 - (lambda * fx).powi(2) - (lambda * fy).powi(2);
            let h = if arg >= 0.0 {
                if z == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, k * z * arg.sqrt())
                }
            } else {
                Complex64::new(0.0, 0.0)
            };
            values.push(h);
        }
    }
    Ok(TransferFunction {
        rows,
        cols,
        distance: z,
        values,
    })
}

/// Transfer functions for every plane of a setup, in plane order.
pub fn make_transfers(setup: &OpticalSetup) -> Result<Vec<TransferFunction>> {
    setup.distances().into_iter().map(|z| make_transfer(setup, z)).collect()
}

/// Applies forward and adjoint propagation on one grid shape, reusing the FFT
/// plans across calls.
#[derive(Clone, Debug)]
pub struct Propagator {
    fft: Fft2,
}

impl Propagator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            fft: Fft2::new(rows, cols),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.fft.shape()
    }

    /// Unitary DFT of the field samples.
    pub fn spectrum(&self, field: &WaveField) -> Result<Vec<Complex64>> {
        check_shape(self.shape(), field.shape())?;
        let mut buf = field.samples().to_vec();
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    /// Field whose unitary DFT is `spectrum`.
    pub fn from_spectrum(&self, mut spectrum: Vec<Complex64>, pitch: f64) -> Result<WaveField> {
        let (rows, cols) = self.shape();
        if spectrum.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: spectrum.len(),
            });
        }
        self.fft.inverse(&mut spectrum);
        Ok(WaveField::from_parts(rows, cols, pitch, spectrum))
    }

    pub fn forward(&self, field: &WaveField, tf: &TransferFunction) -> Result<WaveField> {
        self.apply(field, tf, false)
    }

    pub fn adjoint(&self, field: &WaveField, tf: &TransferFunction) -> Result<WaveField> {
        self.apply(field, tf, true)
    }

    fn apply(&self, field: &WaveField, tf: &TransferFunction, conjugate: bool) -> Result<WaveField> {
        check_shape(field.shape(), tf.shape())?;
        let mut spec = self.spectrum(field)?;
        for (s, h) in spec.iter_mut().zip(&tf.values) {
            *s *= if conjugate { h.conj() } else { *h };
        }
        self.from_spectrum(spec, field.pitch())
    }
}

/// One-shot forward propagation; plans a fresh FFT. Use [`Propagator`] in loops.
pub fn propagate_forward(field: &WaveField, tf: &TransferFunction) -> Result<WaveField> {
    check_shape(field.shape(), tf.shape())?;
    Propagator::new(field.rows(), field.cols()).forward(field, tf)
}

/// One-shot adjoint propagation (multiplies by `conj(H)`).
pub fn propagate_adjoint(field: &WaveField, tf: &TransferFunction) -> Result<WaveField> {
    check_shape(field.shape(), tf.shape())?;
    Propagator::new(field.rows(), field.cols()).adjoint(field, tf)
}
