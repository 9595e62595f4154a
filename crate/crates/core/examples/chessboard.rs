//! Chessboard comparison of SBMIR-FB, AL and AL + D-AL on the 128x128 setup.
//!
//! Parameters can be overridden with environment variables, e.g.
//! `TAU_A=0.2 TAU_PHI=0.3 cargo run --release --example chessboard`.

use std::env;
use std::time::Instant;

use phaseret::{
    make_chessboard_object, rmse_phase_aligned, simulate_observations, AlgoParams, FramePair, OpticalSetup, Problem,
};

fn var(name: &str, default: f64) -> f64 {
    env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() -> phaseret::Result<()> {
    let n = 128;
    let mut setup = OpticalSetup::new(532e-9, 6.7e-6, 0.0, 2e-3, 5, n, n)?;
    setup.z1 = 2.0 * setup.in_focus_distance();
    let truth = make_chessboard_object(n, n, 16, setup.pitch)?;
    let sigma = var("SIGMA", 0.05);
    let obs = simulate_observations(&truth, &setup, sigma, var("SEED", 1.0) as u64)?;
    let problem = Problem::new(&obs, &setup)?.with_truth(truth.clone())?;
    let init = problem.default_init();

    let mut params = AlgoParams::with_defaults(vec![sigma; 5], 100);
    params.gamma_r = vec![var("GAMMA_R", 1.0 / sigma); 5];
    params.xi = var("XI", 10.0);
    params.alpha_r = vec![var("ALPHA", 1.0); 5];
    params.tau_a = var("TAU_A", 0.1);
    params.tau_phi = var("TAU_PHI", 0.1);
    let block = var("BLOCK", 8.0) as usize;
    let step = var("STEP", 4.0) as usize;
    let frames = FramePair::uniform(n, n, block, step, true)?;

    let t = Instant::now();
    let sb = problem.run_sbmir_fb(&init, 100)?;
    let al = problem.run_al(&init, &params)?;
    let mut warm = params.clone();
    warm.iterations = 50;
    let mut dal = params.clone();
    dal.iterations = 50;
    dal.xi = var("DAL_XI", params.xi);
    dal.gamma_r = vec![var("DAL_GAMMA_R", params.gamma_r[0]); 5];
    let d = problem.run_al_then_dal(&init, &frames, &warm, &dal, false)?;
    for (name, st) in [("SBMIR-FB", &sb), ("AL", &al), ("D-AL", &d)] {
        let e = rmse_phase_aligned(st.estimate(), &truth)?;
        println!(
            "{name:>9}: phase {:.4} amplitude {:.4} objective {:.4e}",
            e.phase_rmse,
            e.amplitude_rmse,
            st.trace.last().unwrap().objective
        );
    }
    if env::var("TRACE").is_ok() {
        for t in &d.trace {
            println!(
                "{} {:.4} {:.4} {:.4e}",
                t.iteration,
                t.phase_rmse.unwrap(),
                t.amplitude_rmse.unwrap(),
                t.objective
            );
        }
    }
    println!("elapsed {:.2?}", t.elapsed());
    Ok(())
}
