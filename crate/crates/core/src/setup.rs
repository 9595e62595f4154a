use crate::error::{Error, Result};

/// Multi-plane recording geometry: plane `r` (1-based) sits at
/// `z1 + (r - 1) * delta_z` from the object.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalSetup {
    pub wavelength: f64,
    pub pitch: f64,
    pub z1: f64,
    pub delta_z: f64,
    pub num_planes: usize,
    pub rows: usize,
    pub cols: usize,
}

impl OpticalSetup {
    pub fn new(
        wavelength: f64,
        pitch: f64,
        z1: f64,
        delta_z: f64,
        num_planes: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let setup = Self {
            wavelength,
            pitch,
            z1,
            delta_z,
            num_planes,
            rows,
            cols,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("wavelength", self.wavelength)?;
        positive("pitch", self.pitch)?;
        if !(self.z1.is_finite() && self.z1 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "z1 must be nonnegative, got {}",
                self.z1
            )));
        }
        if !(self.delta_z.is_finite() && self.delta_z >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_z must be nonnegative, got {}",
                self.delta_z
            )));
        }
        if self.num_planes == 0 {
            return Err(Error::InvalidParameter("num_planes must be at least 1".into()));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid must be non-empty, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// In-focus distance `rows * pitch^2 / wavelength`.
    pub fn in_focus_distance(&self) -> f64 {
        self.rows as f64 * self.pitch * self.pitch / self.wavelength
    }

    /// Distance of plane `r`, counted from 1.
    pub fn plane_distance(&self, r: usize) -> f64 {
        assert!(
            r >= 1 && r <= self.num_planes,
            "plane index {r} out of 1..={}",
            self.num_planes
        );
        self.z1 + (r - 1) as f64 * self.delta_z
    }

    pub fn distances(&self) -> Vec<f64> {
        (1..=self.num_planes).map(|r| self.plane_distance(r)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}
