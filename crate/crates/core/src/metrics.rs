//! Reconstruction error metrics.

use num_complex::Complex64;

use crate::error::{check_shape, Result};
use crate::field::{principal_arg, wrap_phase, RealGrid, WaveField};

/// Root-mean-square difference over all pixels.
pub fn rmse(estimate: &RealGrid, reference: &RealGrid) -> Result<f64> {
    check_shape(reference.shape(), estimate.shape())?;
    let n = estimate.data().len() as f64;
    let sum: f64 = estimate
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / n).sqrt())
}

/// Errors of a reconstructed field against ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldErrors {
    /// Phase RMSE on wrapped differences after global phase alignment.
    pub phase_rmse: f64,
    pub amplitude_rmse: f64,
    /// Phase RMSE on wrapped differences without alignment.
    pub phase_rmse_raw: f64,
    /// Constant added to the estimate's phase before comparison.
    pub global_phase: f64,
}

/// Phase and amplitude RMSE, with the estimate first rotated by the single
/// global phase constant that minimizes the wrapped phase RMSE.
///
/// The constant starts at the angle of `<estimate, reference>` and is refined
/// by a few circular-mean steps on the wrapped residuals.
pub fn rmse_phase_aligned(estimate: &WaveField, reference: &WaveField) -> Result<FieldErrors> {
    check_shape(reference.shape(), estimate.shape())?;
    let amplitude_rmse = rmse(&estimate.amplitude(), &reference.amplitude())?;

    let diffs: Vec<f64> = estimate
        .samples()
        .iter()
        .zip(reference.samples())
        .map(|(e, r)| principal_arg(r * e.conj()))
        .collect();
    let n = diffs.len() as f64;
    let phase_rms = |c: f64| -> f64 { (diffs.iter().map(|d| wrap_phase(d - c).powi(2)).sum::<f64>() / n).sqrt() };

    let ip = estimate.inner(reference)?;
    let mut c = if ip.norm() > 0.0 { principal_arg(ip) } else { 0.0 };
    let mut best = phase_rms(c);
    for _ in 0..8 {
        let step = diffs.iter().map(|d| wrap_phase(d - c)).sum::<f64>() / n;
        if step.abs() < 1e-15 {
            break;
        }
        let trial = wrap_phase(c + step);
        let value = phase_rms(trial);
        if value >= best {
            break;
        }
        c = trial;
        best = value;
    }

    Ok(FieldErrors {
        phase_rmse: best,
        amplitude_rmse,
        phase_rmse_raw: phase_rms(0.0),
        global_phase: c,
    })
}

/// Estimate rotated by `exp(j * c)`; used to align reconstructions for display.
pub fn align_global_phase(estimate: &WaveField, errors: &FieldErrors) -> WaveField {
    estimate.scaled(Complex64::from_polar(1.0, errors.global_phase))
}
