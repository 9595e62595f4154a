//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p phaseret --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use phaseret::frame::shrink;
use phaseret::solvers::object_update;
use phaseret::{
    fit_observation_pixel, make_chessboard_object, make_transfer, propagate_adjoint, propagate_forward,
    rmse_phase_aligned, simulate_observations, AlgoParams, FrameOperator, FramePair, ObservationStack, OpticalSetup,
    Problem, Propagator, RealGrid, SpectrumVector, WaveField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WAVELENGTH: f64 = 532e-9;
const PITCH: f64 = 6.7e-6;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_setup(n: usize, num_planes: usize) -> OpticalSetup {
    let mut s = OpticalSetup::new(WAVELENGTH, PITCH, 0.0, 2e-3, num_planes, n, n).unwrap();
    s.z1 = 2.0 * s.in_focus_distance();
    s
}

fn random_field(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> WaveField {
    let samples = (0..rows * cols)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    WaveField::new(rows, cols, PITCH, samples).unwrap()
}

fn comparison() -> Outcome {
    let n = 128;
    let sigma = 0.05;
    let setup = reference_setup(n, 5);
    let truth = make_chessboard_object(n, n, 16, PITCH).unwrap();
    let obs = simulate_observations(&truth, &setup, sigma, 1).unwrap();
    let problem = Problem::new(&obs, &setup).unwrap().with_truth(truth.clone()).unwrap();
    let init = problem.default_init();

    let mut params = AlgoParams::with_defaults(vec![sigma; 5], 100);
    params.xi = 10.0;
    params.tau_a = 0.1;
    params.tau_phi = 0.1;
    let frames = FramePair::uniform(n, n, 8, 4, true).unwrap();
    let mut warm = params.clone();
    warm.iterations = 50;
    let mut dal = params.clone();
    dal.iterations = 50;

    let sb = problem.run_sbmir_fb(&init, 100).unwrap();
    let al = problem.run_al(&init, &params).unwrap();
    let d = problem.run_al_then_dal(&init, &frames, &warm, &dal, false).unwrap();

    let e_sb = rmse_phase_aligned(sb.estimate(), &truth).unwrap();
    let e_al = rmse_phase_aligned(al.estimate(), &truth).unwrap();
    let e_d = rmse_phase_aligned(d.estimate(), &truth).unwrap();
    let warm_objective = d.trace[50].objective;
    let final_objective = d.trace.last().unwrap().objective;

    let ordering = e_d.phase_rmse < e_al.phase_rmse && e_al.phase_rmse < e_sb.phase_rmse;
    let phase_gate = e_d.phase_rmse <= 0.5 * e_al.phase_rmse;
    let amp_gate = e_d.amplitude_rmse <= 0.5 * e_al.amplitude_rmse;
    let descent = final_objective <= warm_objective;
    check(
        ordering && phase_gate && amp_gate && descent,
        format!(
            "phase RMSE D-AL {:.4} / AL {:.4} / SBMIR-FB {:.4}; amplitude RMSE D-AL {:.4} / AL {:.4}; \
             objective warm {:.4e} -> final {:.4e}",
            e_d.phase_rmse,
            e_al.phase_rmse,
            e_sb.phase_rmse,
            e_d.amplitude_rmse,
            e_al.amplitude_rmse,
            warm_objective,
            final_objective
        ),
    )
}

fn fixed_points() -> Outcome {
    let n = 128;
    let setup = reference_setup(n, 5);
    let truth = make_chessboard_object(n, n, 16, PITCH).unwrap();
    let obs = simulate_observations(&truth, &setup, 0.0, 0).unwrap();
    let problem = Problem::new(&obs, &setup).unwrap();
    let mut params = AlgoParams::with_defaults(vec![1.0; 5], 10);
    params.tau_a = 0.0;
    params.tau_phi = 0.0;
    let frames = FramePair::uniform(n, n, 8, 4, true).unwrap();

    let worst = |trace_fields: Vec<WaveField>| -> f64 {
        trace_fields
            .iter()
            .map(|f| rmse_phase_aligned(f, &truth).unwrap().phase_rmse)
            .fold(0.0, f64::max)
    };

    let mut sb = Vec::new();
    let mut u = truth.clone();
    for _ in 0..10 {
        u = problem.sbmir_step(&u).unwrap();
        sb.push(u.clone());
    }
    let mut al = Vec::new();
    let mut state = problem.initial_state(&truth).unwrap();
    for _ in 0..10 {
        problem.al_step(&mut state, &params).unwrap();
        al.push(state.estimate().clone());
    }
    let mut dal = Vec::new();
    let mut state = problem.initial_state(&truth).unwrap();
    state.v0 = problem.sparse_estimate(&state.u0, &frames, &params).unwrap();
    for _ in 0..10 {
        problem.dal_step(&mut state, &frames, &params).unwrap();
        dal.push(state.estimate().clone());
    }
    let (w_sb, w_al, w_dal) = (worst(sb), worst(al), worst(dal));
    check(
        w_sb < 1e-8 && w_al < 1e-8 && w_dal < 1e-8,
        format!("max phase RMSE over 10 iterations: SBMIR-FB {w_sb:.2e}, AL {w_al:.2e}, D-AL {w_dal:.2e}"),
    )
}

fn dal_al_equivalence() -> Outcome {
    let n = 32;
    let setup = reference_setup(n, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let object = random_field(&mut rng, n, n);
    let obs = simulate_observations(&object, &setup, 0.05, 4).unwrap();
    let problem = Problem::new(&obs, &setup).unwrap();
    let mut params = AlgoParams::with_defaults(vec![0.05; 3], 20);
    params.tau_a = 0.0;
    params.tau_phi = 0.0;
    let frames = FramePair::uniform(n, n, 8, 4, true).unwrap();
    let init = random_field(&mut rng, n, n);

    let mut al = problem.initial_state(&init).unwrap();
    let mut dal = problem.initial_state(&init).unwrap();
    dal.v0 = problem.sparse_estimate(&dal.u0, &frames, &params).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        problem.al_step(&mut al, &params).unwrap();
        problem.dal_step(&mut dal, &frames, &params).unwrap();
        worst = worst.max(al.u0.max_abs_diff(&dal.u0).unwrap());
    }
    check(
        worst <= 1e-12,
        format!("max |u0_AL - u0_DAL| over 20 iterations {worst:.2e}"),
    )
}

fn propagation_oracle() -> Outcome {
    let n = 64;
    let setup = reference_setup(n, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (z1, z2) = (setup.z1, 3.7e-3);
    let h1 = make_transfer(&setup, z1).unwrap();
    let h2 = make_transfer(&setup, z2).unwrap();
    let h12 = make_transfer(&setup, z1 + z2).unwrap();
    let (mut adj, mut unit, mut semi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..5 {
        let u = random_field(&mut rng, n, n);
        let v = random_field(&mut rng, n, n);
        let au = propagate_forward(&u, &h1).unwrap();
        let ahv = propagate_adjoint(&v, &h1).unwrap();
        let scale = (u.energy() * v.energy()).sqrt();
        adj = adj.max((v.inner(&au).unwrap() - ahv.inner(&u).unwrap()).norm() / scale);
        unit = unit.max((au.energy().sqrt() - u.energy().sqrt()).abs() / u.energy().sqrt());
        let two_step = propagate_forward(&propagate_forward(&u, &h1).unwrap(), &h2).unwrap();
        let one_step = propagate_forward(&u, &h12).unwrap();
        let diff: f64 = two_step
            .samples()
            .iter()
            .zip(one_step.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        semi = semi.max((diff / one_step.energy()).sqrt());
    }
    check(
        adj <= 1e-10 && unit <= 1e-10 && semi <= 1e-10,
        format!("relative errors: adjoint {adj:.2e}, unitarity {unit:.2e}, semigroup {semi:.2e}"),
    )
}

fn pixel_objective(o: f64, u: Complex64, p: Complex64, gamma: f64) -> f64 {
    0.5 * (o - u.norm_sqr()).powi(2) + (u - p).norm_sqr() / gamma
}

fn g_operator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid: Vec<f64> = (0..=50_000).map(|i| i as f64 * 1e-4).collect();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let o = rng.random_range(-0.5..4.0);
        let p = Complex64::from_polar(rng.random_range(0.0..3.0), rng.random_range(-PI..PI));
        let gamma = 10f64.powf(rng.random_range(-1.0..2.5));
        let u = fit_observation_pixel(o, p, gamma).unwrap();
        let got = pixel_objective(o, u, p, gamma);
        let m = p.norm();
        let best = grid
            .iter()
            .map(|&a| 0.5 * (o - a * a).powi(2) + (a - m).powi(2) / gamma)
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(got - best);
    }
    check(
        worst <= 1e-6,
        format!("max (objective - grid minimum) over 1000 problems {worst:.2e}"),
    )
}

/// Unitary 2-D DFT matrix (row-major pixel order) built from its definition.
fn dft_matrix(n: usize) -> Vec<Vec<Complex64>> {
    let nn = n * n;
    let s = 1.0 / n as f64;
    let mut f = vec![vec![Complex64::new(0.0, 0.0); nn]; nn];
    for (k, row) in f.iter_mut().enumerate() {
        let (kr, kc) = (k / n, k % n);
        for (x, entry) in row.iter_mut().enumerate() {
            let (xr, xc) = (x / n, x % n);
            let angle = -2.0 * PI * ((kr * xr + kc * xc) as f64) / n as f64;
            *entry = Complex64::from_polar(s, angle);
        }
    }
    f
}

fn transfer_diag(n: usize, z: f64) -> Vec<Complex64> {
    let centered = |m: usize| {
        if m < n.div_ceil(2) {
            m as f64
        } else {
            m as f64 - n as f64
        }
    };
    (0..n * n)
        .map(|k| {
            let fx = centered(k % n) / (n as f64 * PITCH);
            let fy = centered(k / n) / (n as f64 * PITCH);
            let arg = 1.0 - (WAVELENGTH * fx).powi(2) - (WAVELENGTH * fy).powi(2);
            if arg < 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, 2.0 * PI / WAVELENGTH * z * arg.sqrt())
            }
        })
        .collect()
}

fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn adjoint(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].conj()).collect()).collect()
}

fn mat_vec(a: &[Vec<Complex64>], x: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        let pivot_b = b[col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            b[row] -= factor * pivot_b;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let s: Complex64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn object_update_oracle() -> Outcome {
    let n = 8;
    let nn = n * n;
    let mut setup = reference_setup(n, 2);
    setup.delta_z = 1.3e-3;
    let distances = setup.distances();
    let transfers: Vec<_> = distances.iter().map(|&z| make_transfer(&setup, z).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let planes = [random_field(&mut rng, n, n), random_field(&mut rng, n, n)];
    let lambdas = [random_field(&mut rng, n, n), random_field(&mut rng, n, n)];
    let v0 = random_field(&mut rng, n, n);
    let mut params = AlgoParams::with_defaults(vec![0.05, 0.08], 1);
    params.gamma_r = vec![3.0, 0.7];
    params.xi = 2.5;

    let got = object_update(&Propagator::new(n, n), &planes, &lambdas, &v0, &transfers, &params).unwrap();

    let f = dft_matrix(n);
    let fh = adjoint(&f);
    let mut lhs = vec![vec![Complex64::new(0.0, 0.0); nn]; nn];
    let mut rhs: Vec<Complex64> = v0.samples().iter().map(|v| v / params.xi).collect();
    for (i, row) in lhs.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0 / params.xi, 0.0);
    }
    for r in 0..2 {
        let h = transfer_diag(n, distances[r]);
        let dh: Vec<Vec<Complex64>> = f
            .iter()
            .zip(&h)
            .map(|(row, hk)| row.iter().map(|x| x * hk).collect())
            .collect();
        let a = mat_mul(&fh, &dh);
        let ah = adjoint(&a);
        let w = 1.0 / (params.sigma_r[r].powi(2) * params.gamma_r[r]);
        let aha = mat_mul(&ah, &a);
        for i in 0..nn {
            for j in 0..nn {
                lhs[i][j] += aha[i][j] * w;
            }
        }
        let target: Vec<Complex64> = planes[r]
            .samples()
            .iter()
            .zip(lambdas[r].samples())
            .map(|(u, l)| u + l)
            .collect();
        for (acc, v) in rhs.iter_mut().zip(mat_vec(&ah, &target)) {
            *acc += v * w;
        }
    }
    let want = solve(lhs, rhs);
    let err: f64 = got
        .samples()
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm: f64 = want.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    let rel = err / norm;
    check(rel <= 1e-8, format!("relative difference from dense solve {rel:.2e}"))
}

fn frame_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (block, step) in [(8, 8), (8, 4), (16, 8)] {
        for size in (8..=128).step_by(8).filter(|&s| s >= block) {
            let op = FrameOperator::new(size, size, block, step).unwrap();
            let x = RealGrid::from_fn(size, size, |_, _| rng.random_range(-2.0..2.0)).unwrap();
            let y = op.synthesize(&op.analyze(&x).unwrap()).unwrap();
            let diff = x
                .data()
                .iter()
                .zip(y.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(diff);
            cases += 1;
        }
    }
    let mut expansive = 0;
    for _ in 0..2000 {
        let tau = rng.random_range(0.0..1.0);
        let u: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d_in: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
        let d_out: f64 = u
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (shrink(a, tau) - shrink(b, tau)).powi(2))
            .sum();
        if d_out > d_in {
            expansive += 1;
        }
    }
    let examples = shrink(0.5, 0.2) == 0.3 && shrink(-0.1, 0.2) == 0.0 && {
        let op = FrameOperator::new(16, 16, 8, 4).unwrap().with_dc_exemption(false);
        let theta = SpectrumVector::new(
            (0..op.spectrum_len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            op.geometry(),
        );
        op.soft_threshold(&theta, 0.0).unwrap().coefficients() == theta.coefficients()
    };
    check(
        worst <= 1e-12 && expansive == 0 && examples,
        format!(
            "left-inverse max error {worst:.2e} over {cases} geometries; {expansive} expansive shrink pairs; \
             threshold examples {}",
            if examples { "exact" } else { "wrong" }
        ),
    )
}

fn noise_statistics() -> Outcome {
    let n = 128;
    let sigma = 0.05;
    let setup = reference_setup(n, 5);
    let truth = make_chessboard_object(n, n, 16, PITCH).unwrap();
    let clean: ObservationStack = simulate_observations(&truth, &setup, 0.0, 0).unwrap();
    let noisy = simulate_observations(&truth, &setup, sigma, 2024).unwrap();
    let eps: Vec<f64> = noisy
        .planes()
        .iter()
        .zip(clean.planes())
        .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect::<Vec<_>>())
        .collect();
    let count = eps.len() as f64;
    let mean = eps.iter().sum::<f64>() / count;
    let std = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt();
    let mean_bound = 3.0 * sigma / count.sqrt();
    check(
        mean.abs() <= mean_bound && (std - sigma).abs() <= 0.05 * sigma,
        format!("n = {count}, mean {mean:.2e} (bound {mean_bound:.2e}), std {std:.5}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 chessboard comparison", comparison),
        ("2 fixed points", fixed_points),
        ("3 D-AL/AL equivalence at tau = 0", dal_al_equivalence),
        ("4 propagation oracle", propagation_oracle),
        ("5 G-operator oracle", g_operator_oracle),
        ("6 object-update oracle", object_update_oracle),
        ("7 frame suite", frame_suite),
        ("8 noise statistics", noise_statistics),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
