#![allow(dead_code)]

use num_complex::Complex64;
use phaseret::{OpticalSetup, WaveField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WAVELENGTH: f64 = 532e-9;
pub const PITCH: f64 = 6.7e-6;

pub fn setup(rows: usize, cols: usize, num_planes: usize) -> OpticalSetup {
    let mut s = OpticalSetup::new(WAVELENGTH, PITCH, 0.0, 2e-3, num_planes, rows, cols).unwrap();
    s.z1 = 2.0 * s.in_focus_distance();
    s
}

pub fn random_field(seed: u64, rows: usize, cols: usize) -> WaveField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..rows * cols)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    WaveField::new(rows, cols, PITCH, samples).unwrap()
}

pub fn rel_diff(a: &WaveField, b: &WaveField) -> f64 {
    let num: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    (num / b.energy().max(f64::MIN_POSITIVE)).sqrt()
}
