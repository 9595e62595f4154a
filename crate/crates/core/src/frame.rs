//! Overcomplete block-DCT frame for real images.
//!
//! Analysis cuts the image into `block x block` patches at stride `step`
//! (the last origin in each direction is clamped to the image edge) and takes
//! the orthonormal 2-D DCT-II of each patch. Synthesis inverts every patch,
//! overlap-adds, and divides by the per-pixel patch count, so
//! `synthesize(analyze(x)) == x` up to rounding.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{check_shape, Error, Result};
use crate::field::RealGrid;

/// Geometry tag carried by spectra so they are only synthesized by a
/// matching frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrameGeometry {
    pub rows: usize,
    pub cols: usize,
    pub block: usize,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumVector {
    coefficients: Vec<f64>,
    geometry: FrameGeometry,
}

impl SpectrumVector {
    pub fn new(coefficients: Vec<f64>, geometry: FrameGeometry) -> Self {
        Self { coefficients, geometry }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Coefficients per block (`block^2`); index 0 of each block is DC.
    pub fn block_len(&self) -> usize {
        self.geometry.block * self.geometry.block
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// Count of nonzero non-DC coefficients.
    pub fn nonzero_ac(&self) -> usize {
        let b = self.block_len();
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(i, c)| i % b != 0 && **c != 0.0)
            .count()
    }
}

/// Scalar soft threshold `sign(u) * max(|u| - tau, 0)`.
pub fn shrink(u: f64, tau: f64) -> f64 {
    let m = u.abs() - tau;
    if m > 0.0 {
        m.copysign(u)
    } else {
        0.0
    }
}

/// Elementwise soft thresholding of a spectrum. With `exempt_dc` the first
/// coefficient of every block passes through unchanged.
pub fn soft_threshold(theta: &SpectrumVector, tau: f64, exempt_dc: bool) -> Result<SpectrumVector> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be finite and nonnegative, got {tau}"
        )));
    }
    let b = theta.block_len();
    let coefficients = theta
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| if exempt_dc && i % b == 0 { c } else { shrink(c, tau) })
        .collect();
    Ok(SpectrumVector {
        coefficients,
        geometry: theta.geometry,
    })
}

/// Orthonormal DCT-II matrix, row `k` is basis vector `k`.
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for k in 0..n {
        let alpha = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for i in 0..n {
            c[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    c
}

/// Block origins `0, s, 2s, ...` with the last one clamped to `len - block`.
fn block_origins(len: usize, block: usize, step: usize) -> Vec<usize> {
    let last = len - block;
    let mut origins: Vec<usize> = (0..=last).step_by(step).collect();
    if *origins.last().unwrap() != last {
        origins.push(last);
    }
    origins
}

/// Analysis/synthesis pair of the block-DCT frame for one image size.
#[derive(Clone, Debug)]
pub struct FrameOperator {
    geometry: FrameGeometry,
    exempt_dc: bool,
    basis: Vec<f64>,
    row_origins: Vec<usize>,
    col_origins: Vec<usize>,
    coverage: Vec<f64>,
}

impl FrameOperator {
    pub fn new(rows: usize, cols: usize, block: usize, step: usize) -> Result<Self> {
        if block == 0 || step == 0 || step > block || block > rows.min(cols) {
            return Err(Error::InvalidParameter(format!(
                "frame needs 1 <= step <= block <= min(rows, cols); got block={block}, step={step} on {rows}x{cols}"
            )));
        }
        let row_origins = block_origins(rows, block, step);
        let col_origins = block_origins(cols, block, step);
        let mut coverage = vec![0.0; rows * cols];
        for &r0 in &row_origins {
            for &c0 in &col_origins {
                for i in r0..r0 + block {
                    for v in &mut coverage[i * cols + c0..i * cols + c0 + block] {
                        *v += 1.0;
                    }
                }
            }
        }
        Ok(Self {
            geometry: FrameGeometry {
                rows,
                cols,
                block,
                step,
            },
            exempt_dc: true,
            basis: dct_matrix(block),
            row_origins,
            col_origins,
            coverage,
        })
    }

    /// Sets whether block DC coefficients bypass shrinkage (default `true`).
    pub fn with_dc_exemption(mut self, exempt: bool) -> Self {
        self.exempt_dc = exempt;
        self
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn exempt_dc(&self) -> bool {
        self.exempt_dc
    }

    pub fn num_blocks(&self) -> usize {
        self.row_origins.len() * self.col_origins.len()
    }

    /// Spectrum length `m = num_blocks * block^2`.
    pub fn spectrum_len(&self) -> usize {
        self.num_blocks() * self.geometry.block * self.geometry.block
    }

    /// Number of blocks covering each pixel, row-major.
    pub fn coverage(&self) -> &[f64] {
        &self.coverage
    }

    fn origins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_origins
            .iter()
            .flat_map(move |&r| self.col_origins.iter().map(move |&c| (r, c)))
    }

    /// `Y = C X C^T` for one block.
    fn forward_block(&self, x: &[f64], out: &mut [f64]) {
        let b = self.geometry.block;
        let c = &self.basis;
        let mut tmp = vec![0.0; b * b];
        for k in 0..b {
            for j in 0..b {
                tmp[k * b + j] = (0..b).map(|i| c[k * b + i] * x[i * b + j]).sum();
            }
        }
        for k in 0..b {
            for l in 0..b {
                out[k * b + l] = (0..b).map(|j| tmp[k * b + j] * c[l * b + j]).sum();
            }
        }
    }

    /// `X = C^T Y C` for one block.
    fn inverse_block(&self, y: &[f64], out: &mut [f64]) {
        let b = self.geometry.block;
        let c = &self.basis;
        let mut tmp = vec![0.0; b * b];
        for i in 0..b {
            for l in 0..b {
                tmp[i * b + l] = (0..b).map(|k| c[k * b + i] * y[k * b + l]).sum();
            }
        }
        for i in 0..b {
            for j in 0..b {
                out[i * b + j] = (0..b).map(|l| tmp[i * b + l] * c[l * b + j]).sum();
            }
        }
    }

    pub fn analyze(&self, x: &RealGrid) -> Result<SpectrumVector> {
        let g = self.geometry;
        check_shape((g.rows, g.cols), x.shape())?;
        let b = g.block;
        let origins: Vec<(usize, usize)> = self.origins().collect();
        let mut coefficients = vec![0.0; self.spectrum_len()];
        coefficients
            .par_chunks_mut(b * b)
            .zip(origins.par_iter())
            .for_each(|(out, &(r0, c0))| {
                let mut patch = vec![0.0; b * b];
                for i in 0..b {
                    patch[i * b..(i + 1) * b].copy_from_slice(&x.row(r0 + i)[c0..c0 + b]);
                }
                self.forward_block(&patch, out);
            });
        Ok(SpectrumVector {
            coefficients,
            geometry: g,
        })
    }

    pub fn synthesize(&self, theta: &SpectrumVector) -> Result<RealGrid> {
        let g = self.geometry;
        if theta.geometry != g {
            return Err(Error::InvalidParameter(format!(
                "spectrum geometry {:?} does not match frame {:?}",
                theta.geometry, g
            )));
        }
        if theta.len() != self.spectrum_len() {
            return Err(Error::LengthMismatch {
                expected: self.spectrum_len(),
                found: theta.len(),
            });
        }
        let b = g.block;
        let patches: Vec<Vec<f64>> = theta
            .coefficients
            .par_chunks(b * b)
            .map(|y| {
                let mut patch = vec![0.0; b * b];
                self.inverse_block(y, &mut patch);
                patch
            })
            .collect();
        // Accumulate in block-scan order so the sum does not depend on scheduling.
        let mut acc = vec![0.0; g.rows * g.cols];
        for (patch, (r0, c0)) in patches.iter().zip(self.origins()) {
            for i in 0..b {
                let dst = &mut acc[(r0 + i) * g.cols + c0..(r0 + i) * g.cols + c0 + b];
                for (d, s) in dst.iter_mut().zip(&patch[i * b..(i + 1) * b]) {
                    *d += s;
                }
            }
        }
        for (a, w) in acc.iter_mut().zip(&self.coverage) {
            *a /= w;
        }
        RealGrid::new(g.rows, g.cols, acc)
    }

    /// Soft thresholding with this frame's DC policy.
    pub fn soft_threshold(&self, theta: &SpectrumVector, tau: f64) -> Result<SpectrumVector> {
        soft_threshold(theta, tau, self.exempt_dc)
    }

    /// `synthesize(soft_threshold(analyze(x), tau)) - x`, evaluated as the
    /// synthesis of the coefficient change. Exactly zero when nothing shrinks.
    pub fn shrinkage_correction(&self, x: &RealGrid, tau: f64) -> Result<RealGrid> {
        let theta = self.analyze(x)?;
        let shrunk = self.soft_threshold(&theta, tau)?;
        let delta = shrunk
            .coefficients()
            .iter()
            .zip(theta.coefficients())
            .map(|(s, t)| s - t)
            .collect();
        self.synthesize(&SpectrumVector::new(delta, theta.geometry()))
    }

    /// `synthesize(soft_threshold(analyze(x), tau))`.
    pub fn denoise(&self, x: &RealGrid, tau: f64) -> Result<RealGrid> {
        let correction = self.shrinkage_correction(x, tau)?;
        let data = x.data().iter().zip(correction.data()).map(|(a, c)| a + c).collect();
        RealGrid::new(x.rows(), x.cols(), data)
    }
}
