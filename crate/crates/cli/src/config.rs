//! Experiment configuration: flat `key = value` lines, `#` starts a comment.
//!
//! Every key is optional and falls back to the chessboard experiment defaults
//! (see [`ExperimentConfig::default`]). Unknown and repeated keys are errors.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use phaseret::{AlgoParams, FramePair, OpticalSetup};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Sbmir,
    Al,
    Dal,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sbmir => "sbmir",
            Algorithm::Al => "al",
            Algorithm::Dal => "dal",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sbmir" => Ok(Algorithm::Sbmir),
            "al" => Ok(Algorithm::Al),
            "dal" => Ok(Algorithm::Dal),
            other => Err(format!("unknown algorithm {other:?} (expected sbmir, al or dal)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Starting object for the reconstruction loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitSpec {
    /// Unit amplitude, zero phase.
    Flat,
    /// The ground-truth field (requires `--truth`).
    Truth,
    /// A `WF01` field file.
    File(PathBuf),
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "" => Err("empty init".into()),
            "flat" => Ok(InitSpec::Flat),
            "truth" => Ok(InitSpec::Truth),
            path => Ok(InitSpec::File(PathBuf::from(path))),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Flat => f.write_str("flat"),
            InitSpec::Truth => f.write_str("truth"),
            InitSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub rows: usize,
    pub cols: usize,
    /// Meters.
    pub wavelength: f64,
    /// Pixel side, meters.
    pub pitch: f64,
    /// Distance to the first plane; when absent, `z1_over_zf` times the in-focus distance.
    pub z1: Option<f64>,
    pub z1_over_zf: f64,
    pub delta_z: f64,
    pub num_planes: usize,
    pub tile: usize,
    /// Ground-truth field file used instead of the chessboard.
    pub object_file: Option<PathBuf>,
    pub init: InitSpec,
    pub sigma: f64,
    pub seed: u64,
    /// Noise level assumed for planes recorded with `sigma = 0`.
    pub sigma_floor: f64,
    pub algorithm: Algorithm,
    /// Iterations of a single SBMIR-FB or AL run.
    pub iterations: usize,
    pub warm_iterations: usize,
    pub dal_iterations: usize,
    pub tau_a: f64,
    pub tau_phi: f64,
    /// Defaults to `1 / sigma_r` per plane.
    pub gamma_r: Option<f64>,
    pub gamma_a: f64,
    pub gamma_phi: f64,
    pub xi: f64,
    pub alpha: f64,
    pub reset_multipliers: bool,
    pub block: usize,
    pub step: usize,
    pub dc_exempt: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            wavelength: 532e-9,
            pitch: 6.7e-6,
            z1: None,
            z1_over_zf: 2.0,
            delta_z: 2e-3,
            num_planes: 5,
            tile: 16,
            object_file: None,
            init: InitSpec::Flat,
            sigma: 0.05,
            seed: 1,
            sigma_floor: 0.01,
            algorithm: Algorithm::Dal,
            iterations: 100,
            warm_iterations: 50,
            dal_iterations: 50,
            tau_a: 0.1,
            tau_phi: 0.1,
            gamma_r: None,
            gamma_a: 1.0,
            gamma_phi: 1.0,
            xi: 10.0,
            alpha: 1.0,
            reset_multipliers: false,
            block: 8,
            step: 4,
            dc_exempt: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("bad value {value:?} for {key}: expected true or false")),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Line {
                line,
                message: format!("expected `key = value`, found {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Line {
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, value)
                .map_err(|message| ConfigError::Line { line, message })?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "rows" => self.rows = parse_value(key, v)?,
            "cols" => self.cols = parse_value(key, v)?,
            "wavelength" => self.wavelength = parse_value(key, v)?,
            "pitch" => self.pitch = parse_value(key, v)?,
            "z1" => self.z1 = Some(parse_value(key, v)?),
            "z1_over_zf" => self.z1_over_zf = parse_value(key, v)?,
            "delta_z" => self.delta_z = parse_value(key, v)?,
            "num_planes" => self.num_planes = parse_value(key, v)?,
            "tile" => self.tile = parse_value(key, v)?,
            "object_file" => self.object_file = Some(PathBuf::from(v)),
            "init" => self.init = parse_value(key, v)?,
            "sigma" => self.sigma = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "sigma_floor" => self.sigma_floor = parse_value(key, v)?,
            "algorithm" => self.algorithm = parse_value(key, v)?,
            "iterations" => self.iterations = parse_value(key, v)?,
            "warm_iterations" => self.warm_iterations = parse_value(key, v)?,
            "dal_iterations" => self.dal_iterations = parse_value(key, v)?,
            "tau_a" => self.tau_a = parse_value(key, v)?,
            "tau_phi" => self.tau_phi = parse_value(key, v)?,
            "gamma_r" => self.gamma_r = Some(parse_value(key, v)?),
            "gamma_a" => self.gamma_a = parse_value(key, v)?,
            "gamma_phi" => self.gamma_phi = parse_value(key, v)?,
            "xi" => self.xi = parse_value(key, v)?,
            "alpha" => self.alpha = parse_value(key, v)?,
            "reset_multipliers" => self.reset_multipliers = parse_bool(key, v)?,
            "block" => self.block = parse_value(key, v)?,
            "step" => self.step = parse_value(key, v)?,
            "dc_exempt" => self.dc_exempt = parse_bool(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.setup().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (name, v) in [
            ("z1_over_zf", self.z1_over_zf),
            ("sigma", self.sigma),
            ("tau_a", self.tau_a),
            ("tau_phi", self.tau_phi),
            ("alpha", self.alpha),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be nonnegative, got {v}"));
            }
        }
        for (name, v) in [
            ("sigma_floor", self.sigma_floor),
            ("gamma_a", self.gamma_a),
            ("gamma_phi", self.gamma_phi),
            ("xi", self.xi),
            ("gamma_r", self.gamma_r.unwrap_or(1.0)),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.num_planes > 1 && self.delta_z <= 0.0 {
            return invalid("delta_z must be positive with several planes".into());
        }
        if self.object_file.is_none()
            && (self.tile == 0 || !self.rows.is_multiple_of(self.tile) || !self.cols.is_multiple_of(self.tile))
        {
            return invalid(format!(
                "tile {} does not divide {}x{}",
                self.tile, self.rows, self.cols
            ));
        }
        if self.step == 0 || self.step > self.block || self.block > self.rows.min(self.cols) {
            return invalid(format!(
                "frame needs 1 <= step <= block <= min(rows, cols), got block={} step={}",
                self.block, self.step
            ));
        }
        Ok(())
    }

    /// Serializes every field so that `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("rows", &self.rows);
        kv("cols", &self.cols);
        kv("wavelength", &self.wavelength);
        kv("pitch", &self.pitch);
        if let Some(z1) = self.z1 {
            kv("z1", &z1);
        }
        kv("z1_over_zf", &self.z1_over_zf);
        kv("delta_z", &self.delta_z);
        kv("num_planes", &self.num_planes);
        kv("tile", &self.tile);
        if let Some(p) = &self.object_file {
            kv("object_file", &p.display());
        }
        kv("init", &self.init);
        kv("sigma", &self.sigma);
        kv("seed", &self.seed);
        kv("sigma_floor", &self.sigma_floor);
        kv("algorithm", &self.algorithm);
        kv("iterations", &self.iterations);
        kv("warm_iterations", &self.warm_iterations);
        kv("dal_iterations", &self.dal_iterations);
        kv("tau_a", &self.tau_a);
        kv("tau_phi", &self.tau_phi);
        if let Some(g) = self.gamma_r {
            kv("gamma_r", &g);
        }
        kv("gamma_a", &self.gamma_a);
        kv("gamma_phi", &self.gamma_phi);
        kv("xi", &self.xi);
        kv("alpha", &self.alpha);
        kv("reset_multipliers", &self.reset_multipliers);
        kv("block", &self.block);
        kv("step", &self.step);
        kv("dc_exempt", &self.dc_exempt);
        kv("output_dir", &self.output_dir.display());
        s
    }

    pub fn setup(&self) -> phaseret::Result<OpticalSetup> {
        let mut setup = OpticalSetup::new(
            self.wavelength,
            self.pitch,
            0.0,
            self.delta_z,
            self.num_planes,
            self.rows,
            self.cols,
        )?;
        setup.z1 = self.z1.unwrap_or(self.z1_over_zf * setup.in_focus_distance());
        setup.validate()?;
        Ok(setup)
    }

    /// Solver parameters for the given per-plane noise levels; zero levels
    /// are replaced by `sigma_floor`.
    pub fn params(&self, sigmas: &[f64], iterations: usize) -> AlgoParams {
        let sigma_r: Vec<f64> = sigmas
            .iter()
            .map(|&s| if s > 0.0 { s } else { self.sigma_floor })
            .collect();
        let mut p = AlgoParams::with_defaults(sigma_r, iterations);
        if let Some(g) = self.gamma_r {
            p.gamma_r = vec![g; sigmas.len()];
        }
        p.tau_a = self.tau_a;
        p.tau_phi = self.tau_phi;
        p.gamma_a = self.gamma_a;
        p.gamma_phi = self.gamma_phi;
        p.xi = self.xi;
        p.alpha_r = vec![self.alpha; sigmas.len()];
        p
    }

    pub fn frames(&self) -> phaseret::Result<FramePair> {
        FramePair::uniform(self.rows, self.cols, self.block, self.step, self.dc_exempt)
    }
}
