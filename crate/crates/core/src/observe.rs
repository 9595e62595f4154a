//! Intensity observations `o_r = |A_r u0|^2 + noise`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_shape, Error, Result};
use crate::field::{RealGrid, WaveField};
use crate::propagation::{make_transfers, Propagator};
use crate::setup::OpticalSetup;

/// `K` intensity planes with their noise levels and distances.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationStack {
    planes: Vec<RealGrid>,
    sigmas: Vec<f64>,
    distances: Vec<f64>,
    seed: Option<u64>,
}

impl ObservationStack {
    pub fn new(planes: Vec<RealGrid>, sigmas: Vec<f64>, distances: Vec<f64>) -> Result<Self> {
        let k = planes.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "observation stack needs at least one plane".into(),
            ));
        }
        for len in [sigmas.len(), distances.len()] {
            if len != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: len,
                });
            }
        }
        for p in &planes[1..] {
            check_shape(planes[0].shape(), p.shape())?;
        }
        if planes.iter().any(|p| p.data().iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("observation planes"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise levels must be nonnegative, got {sigmas:?}"
            )));
        }
        if distances.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "distances must be nonnegative, got {distances:?}"
            )));
        }
        if distances.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "distances must be strictly increasing, got {distances:?}"
            )));
        }
        Ok(Self {
            planes,
            sigmas,
            distances,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn num_planes(&self) -> usize {
        self.planes.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.planes[0].shape()
    }

    pub fn planes(&self) -> &[RealGrid] {
        &self.planes
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Seed of the noise generator, when the stack was simulated.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Propagates `u0` to every plane of `setup` and records noisy intensities.
///
/// Noise is i.i.d. `N(0, sigma^2)` drawn from a ChaCha8 stream seeded with
/// `seed`, consumed plane by plane in row-major order.
pub fn simulate_observations(u0: &WaveField, setup: &OpticalSetup, sigma: f64, seed: u64) -> Result<ObservationStack> {
    setup.validate()?;
    check_shape(setup.shape(), u0.shape())?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if setup.num_planes > 1 && setup.delta_z == 0.0 {
        return Err(Error::InvalidParameter("several planes need delta_z > 0".into()));
    }
    let prop = Propagator::new(setup.rows, setup.cols);
    let transfers = make_transfers(setup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut planes = Vec::with_capacity(transfers.len());
    for tf in &transfers {
        let ur = prop.forward(u0, tf)?;
        let data = ur
            .samples()
            .iter()
            .map(|s| {
                let clean = s.norm_sqr();
                if sigma > 0.0 {
                    clean + normal.sample(&mut rng)
                } else {
                    clean
                }
            })
            .collect();
        planes.push(RealGrid::new(setup.rows, setup.cols, data)?);
    }
    Ok(ObservationStack::new(planes, vec![sigma; transfers.len()], setup.distances())?.with_seed(seed))
}
