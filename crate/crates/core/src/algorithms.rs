//! End-to-end reconstruction loops: SBMIR-FB, AL and D-AL.
//!
//! One D-AL iteration, starting from the object estimate `u0`:
//!
//! 1. `theta_a = Sh(Phi_a |u0|)`, `theta_phi = Sh(Phi_phi arg u0)`
//! 2. `v0 = Psi_a theta_a * exp(j Psi_phi theta_phi)`
//! 3. `u_r' = A_r v0` for every plane
//! 4. `u_r = G(o_r, u_r', lambda_r)`
//! 5. `lambda_r += alpha_r (u_r - u_r')`
//! 6. `u0 = object_update(u_r, lambda_r (before step 5), v0)`
//!
//! AL is the same loop with steps 1-2 replaced by `v0 = u0`.
//!
//! The reported reconstruction is `v0` built from the latest `u0`: the
//! sparse synthesis for D-AL, `u0` itself for AL and SBMIR-FB.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_shape, Error, Result};
use crate::field::WaveField;
use crate::frame::FrameOperator;
use crate::metrics::rmse_phase_aligned;
use crate::observe::ObservationStack;
use crate::propagation::{make_transfer, Propagator, TransferFunction};
use crate::setup::OpticalSetup;
use crate::solvers::{fit_observation_plane, lagrange_update, object_update, AlgoParams};

/// Separate frames for the amplitude and the phase images.
#[derive(Clone, Debug)]
pub struct FramePair {
    pub amplitude: FrameOperator,
    pub phase: FrameOperator,
}

impl FramePair {
    /// The same block-DCT geometry for amplitude and phase.
    pub fn uniform(rows: usize, cols: usize, block: usize, step: usize, exempt_dc: bool) -> Result<Self> {
        let f = FrameOperator::new(rows, cols, block, step)?.with_dc_exemption(exempt_dc);
        Ok(Self {
            amplitude: f.clone(),
            phase: f,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Present only when ground truth is known.
    pub phase_rmse: Option<f64>,
    pub amplitude_rmse: Option<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct ReconstructionState {
    pub u0: WaveField,
    pub lambdas: Vec<WaveField>,
    /// Splitting field derived from the current `u0`; this is the reconstruction.
    pub v0: WaveField,
    /// One record per completed iteration plus the starting point.
    pub trace: Vec<TraceRecord>,
}

impl ReconstructionState {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |t| t.iteration)
    }

    pub fn estimate(&self) -> &WaveField {
        &self.v0
    }
}

/// Observations bound to their propagation operators, plus optional ground
/// truth used only for the RMSE trace.
pub struct Problem<'a> {
    obs: &'a ObservationStack,
    pitch: f64,
    propagator: Propagator,
    transfers: Vec<TransferFunction>,
    truth: Option<WaveField>,
}

impl<'a> Problem<'a> {
    /// Plane distances come from the observation stack; wavelength and pitch
    /// from `setup`.
    pub fn new(obs: &'a ObservationStack, setup: &OpticalSetup) -> Result<Self> {
        setup.validate()?;
        check_shape(setup.shape(), obs.shape())?;
        if obs.num_planes() != setup.num_planes {
            return Err(Error::LengthMismatch {
                expected: setup.num_planes,
                found: obs.num_planes(),
            });
        }
        let transfers = obs
            .distances()
            .iter()
            .map(|&z| make_transfer(setup, z))
            .collect::<Result<_>>()?;
        Ok(Self {
            obs,
            pitch: setup.pitch,
            propagator: Propagator::new(setup.rows, setup.cols),
            transfers,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: WaveField) -> Result<Self> {
        check_shape(self.obs.shape(), truth.shape())?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn observations(&self) -> &ObservationStack {
        self.obs
    }

    pub fn transfers(&self) -> &[TransferFunction] {
        &self.transfers
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// `u0 = init`, zero multipliers, `v0 = init`, empty trace.
    pub fn initial_state(&self, init: &WaveField) -> Result<ReconstructionState> {
        check_shape(self.obs.shape(), init.shape())?;
        let zero = WaveField::zeros(init.rows(), init.cols(), init.pitch())?;
        Ok(ReconstructionState {
            u0: init.clone(),
            lambdas: vec![zero; self.transfers.len()],
            v0: init.clone(),
            trace: Vec::new(),
        })
    }

    /// Unit amplitude, zero phase.
    pub fn default_init(&self) -> WaveField {
        let (rows, cols) = self.obs.shape();
        WaveField::from_parts(rows, cols, self.pitch, vec![Complex64::new(1.0, 0.0); rows * cols])
    }

    /// `sum_r 1/(2 sigma_r^2) ||o_r - |A_r u0|^2||^2 + tau_a |Phi_a a0|_1 + tau_phi |Phi_phi phi0|_1`.
    ///
    /// Without frames only the fidelity term is evaluated.
    pub fn evaluate_objective(
        &self,
        u0: &WaveField,
        sigmas: &[f64],
        tau_a: f64,
        tau_phi: f64,
        frames: Option<&FramePair>,
    ) -> Result<f64> {
        check_shape(self.obs.shape(), u0.shape())?;
        if sigmas.len() != self.transfers.len() {
            return Err(Error::LengthMismatch {
                expected: self.transfers.len(),
                found: sigmas.len(),
            });
        }
        let fidelity: f64 = self
            .transfers
            .par_iter()
            .zip(self.obs.planes().par_iter())
            .zip(sigmas.par_iter())
            .map(|((tf, o), &sigma)| {
                let ur = self.propagator.forward(u0, tf)?;
                let sq: f64 = ur
                    .samples()
                    .iter()
                    .zip(o.data())
                    .map(|(u, o)| (o - u.norm_sqr()).powi(2))
                    .sum();
                Ok(sq / (2.0 * sigma * sigma))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .sum();
        let penalty = match frames {
            Some(f) => {
                tau_a * f.amplitude.analyze(&u0.amplitude())?.l1_norm()
                    + tau_phi * f.phase.analyze(&u0.phase())?.l1_norm()
            }
            None => 0.0,
        };
        Ok(fidelity + penalty)
    }

    fn record(&self, state: &mut ReconstructionState, iteration: usize, objective: f64) -> Result<()> {
        let (phase_rmse, amplitude_rmse) = match &self.truth {
            Some(t) => {
                let e = rmse_phase_aligned(&state.v0, t)?;
                (Some(e.phase_rmse), Some(e.amplitude_rmse))
            }
            None => (None, None),
        };
        state.trace.push(TraceRecord {
            iteration,
            phase_rmse,
            amplitude_rmse,
            objective,
        });
        Ok(())
    }

    fn next_iteration(state: &ReconstructionState) -> usize {
        state.trace.last().map_or(0, |t| t.iteration + 1)
    }

    /// `Psi_a Sh(Phi_a |u0|) * exp(j Psi_phi Sh(Phi_phi arg u0))`.
    ///
    /// The synthesized amplitude is used as is, sign included. Both factors are
    /// applied as corrections to `u0`, so a shrinkage that changes nothing
    /// returns `u0` unchanged.
    pub fn sparse_estimate(&self, u0: &WaveField, frames: &FramePair, params: &AlgoParams) -> Result<WaveField> {
        let fa = &frames.amplitude;
        let fp = &frames.phase;
        let (da, dp) = rayon::join(
            || fa.shrinkage_correction(&u0.amplitude(), params.tau_a * params.gamma_a),
            || fp.shrinkage_correction(&u0.phase(), params.tau_phi * params.gamma_phi),
        );
        let (da, dp) = (da?, dp?);
        let samples = u0
            .samples()
            .iter()
            .zip(da.data().iter().zip(dp.data()))
            .map(|(&u, (&a, &p))| {
                let m = u.norm();
                let rotation = Complex64::from_polar(1.0, p);
                if m > 0.0 {
                    (u + u / m * a) * rotation
                } else {
                    rotation * a
                }
            })
            .collect();
        WaveField::new(u0.rows(), u0.cols(), u0.pitch(), samples)
    }

    /// Steps 3-6 of the iteration, using the splitting field in `state.v0`.
    fn lagrangian_step(&self, state: &mut ReconstructionState, params: &AlgoParams) -> Result<()> {
        let v0 = &state.v0;
        let updates: Vec<(WaveField, WaveField)> = (0..self.transfers.len())
            .into_par_iter()
            .map(|r| {
                let half = self.propagator.forward(v0, &self.transfers[r])?;
                let fitted = fit_observation_plane(&self.obs.planes()[r], &half, &state.lambdas[r], params.gamma_r[r])?;
                let lambda = lagrange_update(&state.lambdas[r], &fitted, &half, params.alpha_r[r])?;
                Ok((fitted, lambda))
            })
            .collect::<Result<_>>()?;
        let (planes, lambdas): (Vec<_>, Vec<_>) = updates.into_iter().unzip();
        let u0 = object_update(&self.propagator, &planes, &state.lambdas, v0, &self.transfers, params)?;
        if u0.samples().iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite("object estimate"));
        }
        state.u0 = u0;
        state.lambdas = lambdas;
        Ok(())
    }

    /// One AL iteration (`v0 = u0`).
    pub fn al_step(&self, state: &mut ReconstructionState, params: &AlgoParams) -> Result<()> {
        state.v0 = state.u0.clone();
        self.lagrangian_step(state, params)?;
        state.v0 = state.u0.clone();
        Ok(())
    }

    /// One D-AL iteration; leaves the sparse estimate of the new `u0` in `state.v0`.
    pub fn dal_step(&self, state: &mut ReconstructionState, frames: &FramePair, params: &AlgoParams) -> Result<()> {
        state.v0 = self.sparse_estimate(&state.u0, frames, params)?;
        self.lagrangian_step(state, params)?;
        state.v0 = self.sparse_estimate(&state.u0, frames, params)?;
        Ok(())
    }

    fn check_params(&self, params: &AlgoParams, frames: Option<&FramePair>) -> Result<()> {
        params.validate(self.transfers.len())?;
        if let Some(f) = frames {
            let (rows, cols) = self.obs.shape();
            for g in [f.amplitude.geometry(), f.phase.geometry()] {
                check_shape((rows, cols), (g.rows, g.cols))?;
            }
        }
        Ok(())
    }

    /// Runs `iterations` AL steps on `state`, recording the trace. `scoring`
    /// frames, when given, add the sparsity terms to the traced objective.
    pub fn continue_al(
        &self,
        state: &mut ReconstructionState,
        params: &AlgoParams,
        iterations: usize,
        scoring: Option<&FramePair>,
    ) -> Result<()> {
        self.check_params(params, scoring)?;
        let objective =
            |u: &WaveField| self.evaluate_objective(u, &params.sigma_r, params.tau_a, params.tau_phi, scoring);
        state.v0 = state.u0.clone();
        if state.trace.is_empty() {
            let obj = objective(&state.v0)?;
            self.record(state, 0, obj)?;
        }
        for _ in 0..iterations {
            self.al_step(state, params)?;
            let it = Self::next_iteration(state);
            let obj = objective(&state.v0)?;
            self.record(state, it, obj)?;
        }
        Ok(())
    }

    pub fn continue_dal(
        &self,
        state: &mut ReconstructionState,
        frames: &FramePair,
        params: &AlgoParams,
        iterations: usize,
    ) -> Result<()> {
        self.check_params(params, Some(frames))?;
        let objective =
            |u: &WaveField| self.evaluate_objective(u, &params.sigma_r, params.tau_a, params.tau_phi, Some(frames));
        state.v0 = self.sparse_estimate(&state.u0, frames, params)?;
        if state.trace.is_empty() {
            let obj = objective(&state.v0)?;
            self.record(state, 0, obj)?;
        }
        for _ in 0..iterations {
            self.dal_step(state, frames, params)?;
            let it = Self::next_iteration(state);
            let obj = objective(&state.v0)?;
            self.record(state, it, obj)?;
        }
        Ok(())
    }

    /// AL from `init` with zero multipliers for `params.iterations` steps.
    pub fn run_al(&self, init: &WaveField, params: &AlgoParams) -> Result<ReconstructionState> {
        let mut state = self.initial_state(init)?;
        self.continue_al(&mut state, params, params.iterations, None)?;
        Ok(state)
    }

    /// D-AL from `init` with zero multipliers for `params.iterations` steps.
    pub fn run_dal(&self, init: &WaveField, frames: &FramePair, params: &AlgoParams) -> Result<ReconstructionState> {
        let mut state = self.initial_state(init)?;
        self.continue_dal(&mut state, frames, params, params.iterations)?;
        Ok(state)
    }

    /// AL warm start for `warm.iterations` steps followed by
    /// `dal.iterations` D-AL steps. Multipliers carry over unless
    /// `reset_multipliers` is set.
    pub fn run_al_then_dal(
        &self,
        init: &WaveField,
        frames: &FramePair,
        warm: &AlgoParams,
        dal: &AlgoParams,
        reset_multipliers: bool,
    ) -> Result<ReconstructionState> {
        let mut state = self.initial_state(init)?;
        self.continue_al(&mut state, warm, warm.iterations, Some(frames))?;
        if reset_multipliers {
            for l in &mut state.lambdas {
                *l = WaveField::zeros(l.rows(), l.cols(), l.pitch())?;
            }
        }
        self.continue_dal(&mut state, frames, dal, dal.iterations)?;
        Ok(state)
    }

    /// Noise levels used to weight the SBMIR objective trace; noiseless
    /// planes get unit weight.
    fn sbmir_sigmas(&self) -> Vec<f64> {
        self.obs
            .sigmas()
            .iter()
            .map(|&s| if s > 0.0 { s } else { 1.0 })
            .collect()
    }

    /// One SBMIR-FB iteration: magnitude replacement on every plane, then
    /// the average of the back-propagated planes.
    pub fn sbmir_step(&self, u0: &WaveField) -> Result<WaveField> {
        let back: Vec<WaveField> = self
            .transfers
            .par_iter()
            .zip(self.obs.planes().par_iter())
            .map(|(tf, o)| {
                let ur = self.propagator.forward(u0, tf)?;
                let replaced = ur
                    .samples()
                    .iter()
                    .zip(o.data())
                    .map(|(u, &o)| {
                        let m = o.max(0.0).sqrt();
                        let n = u.norm();
                        if n > 0.0 {
                            u * (m / n)
                        } else {
                            Complex64::new(m, 0.0)
                        }
                    })
                    .collect();
                self.propagator
                    .adjoint(&WaveField::from_parts(ur.rows(), ur.cols(), ur.pitch(), replaced), tf)
            })
            .collect::<Result<_>>()?;
        let k = back.len() as f64;
        let mut acc = vec![Complex64::new(0.0, 0.0); u0.len()];
        for b in &back {
            for (a, s) in acc.iter_mut().zip(b.samples()) {
                *a += s;
            }
        }
        WaveField::new(
            u0.rows(),
            u0.cols(),
            u0.pitch(),
            acc.into_iter().map(|a| a / k).collect(),
        )
    }

    pub fn run_sbmir_fb(&self, init: &WaveField, iterations: usize) -> Result<ReconstructionState> {
        let sigmas = self.sbmir_sigmas();
        let mut state = self.initial_state(init)?;
        let obj = self.evaluate_objective(&state.u0, &sigmas, 0.0, 0.0, None)?;
        self.record(&mut state, 0, obj)?;
        for it in 1..=iterations {
            state.u0 = self.sbmir_step(&state.u0)?;
            state.v0 = state.u0.clone();
            let obj = self.evaluate_objective(&state.u0, &sigmas, 0.0, 0.0, None)?;
            self.record(&mut state, it, obj)?;
        }
        Ok(state)
    }
}
