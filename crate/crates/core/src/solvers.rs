//! Inner solvers of the augmented-Lagrangian iteration: the per-pixel
//! observation fit, the multiplier step, and the object update.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_shape, Error, Result};
use crate::field::{RealGrid, WaveField};
use crate::propagation::{Propagator, TransferFunction};

/// Weights and step sizes of the AL / D-AL iterations. Per-plane vectors are
/// indexed by plane (0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoParams {
    /// Amplitude spectrum weight.
    pub tau_a: f64,
    /// Phase spectrum weight.
    pub tau_phi: f64,
    /// Penalty on `u_r - A_r u0`.
    pub gamma_r: Vec<f64>,
    pub gamma_a: f64,
    pub gamma_phi: f64,
    /// Splitting weight on `u0 - v0`.
    pub xi: f64,
    /// Multiplier step sizes.
    pub alpha_r: Vec<f64>,
    /// Noise standard deviation of each plane.
    pub sigma_r: Vec<f64>,
    pub iterations: usize,
}

impl AlgoParams {
    /// Defaults: `gamma_r = 1/sigma_r`, `gamma_a = gamma_phi = xi = alpha_r = 1`,
    /// `tau_a = tau_phi = 0.01`.
    pub fn with_defaults(sigma_r: Vec<f64>, iterations: usize) -> Self {
        let k = sigma_r.len();
        Self {
            tau_a: 0.01,
            tau_phi: 0.01,
            gamma_r: sigma_r.iter().map(|s| 1.0 / s).collect(),
            gamma_a: 1.0,
            gamma_phi: 1.0,
            xi: 1.0,
            alpha_r: vec![1.0; k],
            sigma_r,
            iterations,
        }
    }

    pub fn num_planes(&self) -> usize {
        self.sigma_r.len()
    }

    /// Per-plane object-update weight `1 / (sigma_r^2 gamma_r)`.
    pub fn plane_weight(&self, r: usize) -> f64 {
        1.0 / (self.sigma_r[r] * self.sigma_r[r] * self.gamma_r[r])
    }

    pub fn validate(&self, num_planes: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        for (name, v) in [
            ("gamma_r", &self.gamma_r),
            ("alpha_r", &self.alpha_r),
            ("sigma_r", &self.sigma_r),
        ] {
            if v.len() != num_planes {
                return bad(format!("{name} has {} entries for {num_planes} planes", v.len()));
            }
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(self.tau_a.is_finite() && self.tau_a >= 0.0 && self.tau_phi.is_finite() && self.tau_phi >= 0.0) {
            return bad(format!(
                "tau must be nonnegative, got {} / {}",
                self.tau_a, self.tau_phi
            ));
        }
        if !self.gamma_r.iter().all(|&g| positive(g)) {
            return bad(format!("gamma_r must be positive, got {:?}", self.gamma_r));
        }
        if !self.sigma_r.iter().all(|&s| positive(s)) {
            return bad(format!("sigma_r must be positive, got {:?}", self.sigma_r));
        }
        if !self.alpha_r.iter().all(|&a| a.is_finite() && a >= 0.0) {
            return bad(format!("alpha_r must be nonnegative, got {:?}", self.alpha_r));
        }
        if !(positive(self.gamma_a) && positive(self.gamma_phi) && positive(self.xi)) {
            return bad(format!(
                "gamma_a, gamma_phi, xi must be positive, got {}, {}, {}",
                self.gamma_a, self.gamma_phi, self.xi
            ));
        }
        Ok(())
    }
}

/// `(1/2)(o - a^2)^2 + (1/gamma)(a - m)^2`, the pixel objective restricted to
/// the direction of `p` (`m = |p|`).
pub fn pixel_objective(o: f64, a: f64, m: f64, gamma: f64) -> f64 {
    let r = o - a * a;
    0.5 * r * r + (a - m) * (a - m) / gamma
}

/// Real roots of the depressed cubic `x^3 + p x + q = 0`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        // One real root. Pick the sign that avoids cancellation in t + sqrt(disc).
        let t = -q / 2.0;
        let s = disc.sqrt();
        let w = (t + if t >= 0.0 { s } else { -s }).cbrt();
        if w == 0.0 {
            vec![0.0]
        } else {
            vec![w - p / (3.0 * w)]
        }
    } else if p == 0.0 {
        vec![0.0]
    } else {
        // Three real roots (p < 0).
        let r = (-p / 3.0).sqrt();
        let arg = (1.5 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    }
}

/// Nonnegative amplitude minimizing [`pixel_objective`].
///
/// Stationary points solve `gamma a^3 + (1 - gamma o) a - m = 0`. All real
/// nonnegative roots (Newton-polished) and `a = 0` are scored; the smallest
/// objective wins, ties going to the smaller amplitude.
pub fn fit_amplitude(o: f64, m: f64, gamma: f64) -> f64 {
    let cubic = |a: f64| gamma * a * a * a + (1.0 - gamma * o) * a - m;
    let slope = |a: f64| 3.0 * gamma * a * a + 1.0 - gamma * o;

    let mut candidates = vec![0.0];
    for root in depressed_cubic_roots((1.0 - gamma * o) / gamma, -m / gamma) {
        if !root.is_finite() {
            continue;
        }
        let mut a = root.max(0.0);
        for _ in 0..3 {
            let d = slope(a);
            if d == 0.0 {
                break;
            }
            let next = a - cubic(a) / d;
            if !next.is_finite() || next < 0.0 || cubic(next).abs() >= cubic(a).abs() {
                break;
            }
            a = next;
        }
        candidates.push(a);
    }

    // Safeguard: Newton from the upper bound on the global minimizer.
    let mut a = o.max(0.0).sqrt().max(m);
    for _ in 0..60 {
        let d = slope(a);
        if d <= 0.0 {
            break;
        }
        let next = a - cubic(a) / d;
        if !(next.is_finite() && next >= 0.0) || (next - a).abs() <= 1e-15 * a.max(1.0) {
            break;
        }
        a = next;
    }
    candidates.push(a);

    let mut best = (pixel_objective(o, 0.0, m, gamma), 0.0);
    for &a in &candidates {
        let f = pixel_objective(o, a, m, gamma);
        if f < best.0 || (f == best.0 && a < best.1) {
            best = (f, a);
        }
    }
    best.1
}

/// Minimizer over `u` of `(1/2)(o - |u|^2)^2 + (1/gamma)|u - p|^2`.
///
/// The result has the phase of `p`; for `p = 0` it is real and nonnegative.
pub fn fit_observation_pixel(o: f64, p: Complex64, gamma: f64) -> Result<Complex64> {
    if !(o.is_finite() && p.re.is_finite() && p.im.is_finite() && gamma.is_finite()) {
        return Err(Error::NonFinite("pixel fit input"));
    }
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(fit_pixel(o, p, gamma, Complex64::new(1.0, 0.0)))
}

/// `fallback` supplies the direction when `p == 0`.
fn fit_pixel(o: f64, p: Complex64, gamma: f64, fallback: Complex64) -> Complex64 {
    let m = p.norm();
    let a = fit_amplitude(o, m, gamma);
    if m > 0.0 {
        p * (a / m)
    } else {
        let fm = fallback.norm();
        if fm > 0.0 {
            fallback * (a / fm)
        } else {
            Complex64::new(a, 0.0)
        }
    }
}

/// Applies the pixel fit with `p = u_half - lambda` at every pixel.
///
/// Where `p` vanishes the phase is taken from `u_half`, or 0 if that is zero too.
pub fn fit_observation_plane(
    observed: &RealGrid,
    u_half: &WaveField,
    lambda: &WaveField,
    gamma: f64,
) -> Result<WaveField> {
    check_shape(u_half.shape(), observed.shape())?;
    check_shape(u_half.shape(), lambda.shape())?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if observed.data().iter().any(|o| !o.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    let samples: Vec<Complex64> = observed
        .data()
        .par_iter()
        .zip(u_half.samples().par_iter().zip(lambda.samples()))
        .map(|(&o, (&h, &l))| fit_pixel(o, h - l, gamma, h))
        .collect();
    Ok(WaveField::from_parts(
        u_half.rows(),
        u_half.cols(),
        u_half.pitch(),
        samples,
    ))
}

/// `lambda + alpha (u_next - u_half)`.
pub fn lagrange_update(lambda: &WaveField, u_next: &WaveField, u_half: &WaveField, alpha: f64) -> Result<WaveField> {
    check_shape(lambda.shape(), u_next.shape())?;
    check_shape(lambda.shape(), u_half.shape())?;
    let samples = lambda
        .samples()
        .iter()
        .zip(u_next.samples().iter().zip(u_half.samples()))
        .map(|(&l, (&n, &h))| l + (n - h) * alpha)
        .collect();
    WaveField::new(lambda.rows(), lambda.cols(), lambda.pitch(), samples)
}

/// Per-frequency denominator `sum_r w_r |H_r|^2 + 1/xi` of the object update.
pub fn object_update_denominator(transfers: &[TransferFunction], params: &AlgoParams) -> Result<Vec<f64>> {
    let first = transfers
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one plane required".into()))?;
    params.validate(transfers.len())?;
    let mut den = vec![1.0 / params.xi; first.values().len()];
    for (r, tf) in transfers.iter().enumerate() {
        check_shape(first.shape(), tf.shape())?;
        let w = params.plane_weight(r);
        for (d, h) in den.iter_mut().zip(tf.values()) {
            *d += w * h.norm_sqr();
        }
    }
    Ok(den)
}

/// Regularized least-squares object update
/// `(sum w_r A_r^H A_r + I/xi)^-1 (sum w_r A_r^H (u_r + lambda_r) + v0/xi)`,
/// solved exactly per frequency since every `A_r` is diagonal in the DFT basis.
pub fn object_update(
    propagator: &Propagator,
    planes: &[WaveField],
    lambdas: &[WaveField],
    v0: &WaveField,
    transfers: &[TransferFunction],
    params: &AlgoParams,
) -> Result<WaveField> {
    let k = transfers.len();
    for len in [planes.len(), lambdas.len()] {
        if len != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: len,
            });
        }
    }
    check_shape(propagator.shape(), v0.shape())?;
    for ((u, l), tf) in planes.iter().zip(lambdas).zip(transfers) {
        check_shape(v0.shape(), u.shape())?;
        check_shape(v0.shape(), l.shape())?;
        check_shape(v0.shape(), tf.shape())?;
    }
    let den = object_update_denominator(transfers, params)?;

    let spectra: Vec<Vec<Complex64>> = planes
        .par_iter()
        .zip(lambdas.par_iter())
        .map(|(u, l)| {
            let sum: Vec<Complex64> = u.samples().iter().zip(l.samples()).map(|(a, b)| a + b).collect();
            let field = WaveField::from_parts(u.rows(), u.cols(), u.pitch(), sum);
            propagator.spectrum(&field)
        })
        .collect::<Result<_>>()?;

    let mut num: Vec<Complex64> = propagator.spectrum(v0)?.into_iter().map(|s| s / params.xi).collect();
    for (r, (spec, tf)) in spectra.iter().zip(transfers).enumerate() {
        let w = params.plane_weight(r);
        for ((n, s), h) in num.iter_mut().zip(spec).zip(tf.values()) {
            *n += h.conj() * s * w;
        }
    }
    for (n, d) in num.iter_mut().zip(&den) {
        *n /= d;
    }
    propagator.from_spectrum(num, v0.pitch())
}
