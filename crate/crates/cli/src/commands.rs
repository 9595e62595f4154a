use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use phaseret::io::{read_field, read_observations, write_field, write_observations};
use phaseret::metrics::align_global_phase;
use phaseret::{
    make_chessboard_object, rmse_phase_aligned, simulate_observations, ObservationStack, Problem, ReconstructionState,
    WaveField,
};

use crate::config::{Algorithm, ExperimentConfig, InitSpec};
use crate::render::{amplitude_levels, columns_csv, phase_levels, trace_csv, write_pgm};

pub const OBSERVATIONS_FILE: &str = "observations.ob";
pub const TRUTH_FILE: &str = "truth.wf";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn load_field(path: &Path, what: &str) -> Result<WaveField> {
    read_field(path).with_context(|| format!("cannot read {what} {}", path.display()))
}

fn ground_truth(cfg: &ExperimentConfig) -> Result<WaveField> {
    let truth = match &cfg.object_file {
        Some(p) => load_field(p, "object file")?,
        None => make_chessboard_object(cfg.rows, cfg.cols, cfg.tile, cfg.pitch)?,
    };
    if truth.shape() != (cfg.rows, cfg.cols) {
        bail!(
            "object is {}x{} but the configuration expects {}x{}",
            truth.rows(),
            truth.cols(),
            cfg.rows,
            cfg.cols
        );
    }
    Ok(truth)
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let setup = cfg.setup()?;
    let truth = ground_truth(cfg)?;
    let obs = simulate_observations(&truth, &setup, cfg.sigma, cfg.seed)?;
    create_dir(out)?;
    let obs_path = out.join(OBSERVATIONS_FILE);
    let truth_path = out.join(TRUTH_FILE);
    write_observations(&obs, &obs_path)?;
    write_field(&truth, &truth_path)?;

    println!(
        "grid {}x{}, pitch {:e} m, wavelength {:e} m, in-focus distance {:.6e} m",
        cfg.rows,
        cfg.cols,
        cfg.pitch,
        cfg.wavelength,
        setup.in_focus_distance()
    );
    for (r, (z, plane)) in obs.distances().iter().zip(obs.planes()).enumerate() {
        let mean = plane.data().iter().sum::<f64>() / plane.data().len() as f64;
        println!("plane {}: z = {:.6e} m, mean intensity {:.6}", r + 1, z, mean);
    }
    println!("noise: sigma = {}, seed = {}", cfg.sigma, cfg.seed);
    println!("wrote {} and {}", obs_path.display(), truth_path.display());
    Ok(())
}

fn initial_field(cfg: &ExperimentConfig, problem: &Problem, truth: Option<&WaveField>) -> Result<WaveField> {
    let init = match &cfg.init {
        InitSpec::Flat => problem.default_init(),
        InitSpec::Truth => match truth {
            Some(t) => t.clone(),
            None => bail!("init = truth needs a ground-truth field (--truth)"),
        },
        InitSpec::File(p) => load_field(p, "initial field")?,
    };
    if init.shape() != problem.observations().shape() {
        bail!(
            "initial field is {}x{}, observations are {:?}",
            init.rows(),
            init.cols(),
            problem.observations().shape()
        );
    }
    Ok(init)
}

fn run_algorithm(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    problem: &Problem,
    init: &WaveField,
    baseline_iterations: usize,
) -> Result<ReconstructionState> {
    let sigmas = problem.observations().sigmas();
    let state = match algorithm {
        Algorithm::Sbmir => problem.run_sbmir_fb(init, baseline_iterations)?,
        Algorithm::Al => problem.run_al(init, &cfg.params(sigmas, baseline_iterations))?,
        Algorithm::Dal => {
            let frames = cfg.frames()?;
            let warm = cfg.params(sigmas, cfg.warm_iterations);
            let dal = cfg.params(sigmas, cfg.dal_iterations);
            problem.run_al_then_dal(init, &frames, &warm, &dal, cfg.reset_multipliers)?
        }
    };
    Ok(state)
}

fn load_problem_inputs(
    cfg: &ExperimentConfig,
    observations: &Path,
    truth: Option<&Path>,
) -> Result<(ObservationStack, Option<WaveField>)> {
    let obs = read_observations(observations)
        .with_context(|| format!("cannot read observations {}", observations.display()))?;
    if obs.shape() != (cfg.rows, cfg.cols) {
        bail!(
            "observations are {}x{} but the configuration expects {}x{}",
            obs.shape().0,
            obs.shape().1,
            cfg.rows,
            cfg.cols
        );
    }
    if obs.num_planes() != cfg.num_planes {
        bail!(
            "observations hold {} planes but the configuration expects {}",
            obs.num_planes(),
            cfg.num_planes
        );
    }
    let truth = match truth {
        Some(p) => {
            let t = load_field(p, "ground truth")?;
            if t.shape() != obs.shape() {
                bail!(
                    "ground truth is {}x{}, observations are {:?}",
                    t.rows(),
                    t.cols(),
                    obs.shape()
                );
            }
            Some(t)
        }
        None => None,
    };
    Ok((obs, truth))
}

fn write_renders(out: &Path, stem: &str, field: &WaveField) -> Result<()> {
    let (rows, cols) = field.shape();
    write_pgm(
        &out.join(format!("{stem}_amplitude.pgm")),
        rows,
        cols,
        &amplitude_levels(&field.amplitude()),
    )?;
    write_pgm(
        &out.join(format!("{stem}_phase.pgm")),
        rows,
        cols,
        &phase_levels(&field.phase()),
    )?;
    Ok(())
}

/// Field aligned to the truth's global phase when truth is known.
fn display_field(field: &WaveField, truth: Option<&WaveField>) -> Result<WaveField> {
    Ok(match truth {
        Some(t) => align_global_phase(field, &rmse_phase_aligned(field, t)?),
        None => field.clone(),
    })
}

pub fn reconstruct(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    observations: &Path,
    truth_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let setup = cfg.setup()?;
    let (obs, truth) = load_problem_inputs(cfg, observations, truth_path)?;
    let mut problem = Problem::new(&obs, &setup)?;
    if let Some(t) = &truth {
        problem = problem.with_truth(t.clone())?;
    }
    let init = initial_field(cfg, &problem, truth.as_ref())?;
    let started = Instant::now();
    let state = run_algorithm(cfg, algorithm, &problem, &init, cfg.iterations)?;
    let elapsed = started.elapsed();

    create_dir(out)?;
    let stem = algorithm.name();
    let estimate = state.estimate();
    write_field(estimate, out.join(format!("{stem}_reconstruction.wf")))?;
    fs::write(
        out.join(format!("{stem}_trace.csv")),
        trace_csv(&state.trace, truth.is_some()),
    )?;
    write_renders(out, stem, &display_field(estimate, truth.as_ref())?)?;

    let last = state.trace.last().expect("trace holds the starting point");
    print!(
        "{stem}: {} iterations in {:.2?}, objective {:.6e}",
        last.iteration, elapsed, last.objective
    );
    if let (Some(p), Some(a)) = (last.phase_rmse, last.amplitude_rmse) {
        print!(", phase RMSE {p:.4}, amplitude RMSE {a:.4}");
    }
    println!();
    Ok(())
}

pub fn compare(cfg: &ExperimentConfig, observations: &Path, truth_path: Option<&Path>, out: &Path) -> Result<()> {
    let Some(truth_path) = truth_path else {
        bail!("compare needs a ground-truth field (--truth)");
    };
    let setup = cfg.setup()?;
    let (obs, truth) = load_problem_inputs(cfg, observations, Some(truth_path))?;
    let truth = truth.expect("truth was requested");
    let problem = Problem::new(&obs, &setup)?.with_truth(truth.clone())?;
    let init = initial_field(cfg, &problem, Some(&truth))?;
    let budget = cfg.warm_iterations + cfg.dal_iterations;
    create_dir(out)?;

    let mid = cfg.rows / 2;
    let truth_phase = truth.phase().row(mid).to_vec();
    let truth_amp = truth.amplitude().row(mid).to_vec();
    let mut phase_rows: Vec<(&str, Vec<f64>)> = vec![("truth", truth_phase)];
    let mut amp_rows: Vec<(&str, Vec<f64>)> = vec![("truth", truth_amp)];

    let mut report = String::from("algorithm,iterations,phase_rmse,amplitude_rmse,phase_rmse_unaligned,objective\n");
    println!(
        "{:<8} {:>10} {:>12} {:>16} {:>14}",
        "algorithm", "iterations", "phase RMSE", "amplitude RMSE", "objective"
    );
    for algorithm in [Algorithm::Sbmir, Algorithm::Al, Algorithm::Dal] {
        let state = run_algorithm(cfg, algorithm, &problem, &init, budget)?;
        let estimate = state.estimate();
        let errors = rmse_phase_aligned(estimate, &truth)?;
        let last = state.trace.last().expect("trace holds the starting point");
        println!(
            "{:<8} {:>10} {:>12.4} {:>16.4} {:>14.6e}",
            algorithm.name(),
            last.iteration,
            errors.phase_rmse,
            errors.amplitude_rmse,
            last.objective
        );
        report.push_str(&format!(
            "{},{},{},{},{},{}\n",
            algorithm.name(),
            last.iteration,
            errors.phase_rmse,
            errors.amplitude_rmse,
            errors.phase_rmse_raw,
            last.objective
        ));

        let aligned = align_global_phase(estimate, &errors);
        phase_rows.push((algorithm.name(), aligned.phase().row(mid).to_vec()));
        amp_rows.push((algorithm.name(), aligned.amplitude().row(mid).to_vec()));
        fs::write(
            out.join(format!("compare_{}_trace.csv", algorithm.name())),
            trace_csv(&state.trace, true),
        )?;
        write_field(
            estimate,
            out.join(format!("compare_{}_reconstruction.wf", algorithm.name())),
        )?;
        write_renders(out, &format!("compare_{}", algorithm.name()), &aligned)?;
    }
    fs::write(out.join("compare_report.csv"), report)?;
    let as_series = |rows: &[(&'static str, Vec<f64>)]| -> String {
        let series: Vec<(&str, &[f64])> = rows.iter().map(|(n, v)| (*n, v.as_slice())).collect();
        columns_csv("col", &series)
    };
    fs::write(out.join("cross_section_phase.csv"), as_series(&phase_rows))?;
    fs::write(out.join("cross_section_amplitude.csv"), as_series(&amp_rows))?;
    println!("wrote report and cross-sections (row {mid}) to {}", out.display());
    Ok(())
}

pub fn render(field_path: &Path, truth_path: Option<&Path>, out: &Path) -> Result<()> {
    let field = load_field(field_path, "field")?;
    let truth = match truth_path {
        Some(p) => {
            let t = load_field(p, "ground truth")?;
            if t.shape() != field.shape() {
                bail!(
                    "ground truth is {}x{}, field is {}x{}",
                    t.rows(),
                    t.cols(),
                    field.rows(),
                    field.cols()
                );
            }
            Some(t)
        }
        None => None,
    };
    create_dir(out)?;
    let stem = field_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into());
    write_renders(out, &stem, &display_field(&field, truth.as_ref())?)?;
    println!(
        "wrote {} and {}",
        out.join(format!("{stem}_amplitude.pgm")).display(),
        out.join(format!("{stem}_phase.pgm")).display()
    );
    Ok(())
}
