//! Built-in verification suite: every release criterion of the laboratory,
//! each with its tolerance pinned in code, runnable as a whole (`run_all`)
//! or one criterion at a time.
//!
//! The criteria cross-check independent computation routes: propagated
//! phases against closed-form oracles, overlap-product geometric phases
//! against frame holonomies, effective-generator diagonalization against the
//! analytic tilt, and the gauge/superposition/resonance claims against
//! seeded randomized probes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::time::Instant;

use crate::error::Result;
use crate::gauge::{
    nonlinear_residual, parallel_transport_representative, rephase_frame, rephase_trajectory,
    GaugeFunction, SplitMix64,
};
use crate::hamiltonian::{
    analytic_solution, analytic_w_frame, diagonalizing_tilt, eigen_frame, frame_row, Branch,
    HamiltonianSpec,
};
use crate::phase::{aa_phase, berry_phase, dynamical_phase};
use crate::propagator::{check_cyclic, propagate};
use crate::scenario::{run_scenario, Analysis, GridSpec, InitialState, Scenario};
use crate::state::{wrap_angle, TimeGrid, Trajectory};
use crate::superpose::{
    nonlinear_superposition_test, resonance_check, resonant_mu_b, superpose, SuperpositionSpec,
};
use crate::wframe::{build_w_frame, effective_hamiltonian, reconstruct_amplitude};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub results: Vec<CriterionResult>,
    pub total_seconds: f64,
    pub all_pass: bool,
}

impl VerifySummary {
    /// One line per criterion plus a footer, for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!(
                "[{}] #{:<2} {:<46} {:>7.2}s  {}\n",
                if r.pass { "PASS" } else { "FAIL" },
                r.id,
                r.title,
                r.seconds,
                r.detail
            ));
        }
        out.push_str(&format!(
            "{} criteria, {:.1}s total: {}\n",
            self.results.len(),
            self.total_seconds,
            if self.all_pass { "ALL PASS" } else { "FAILURES PRESENT" }
        ));
        out
    }
}

pub const CRITERION_TITLES: [(u32, &str); 13] = [
    (1, "static-family geometric phase vs oracle"),
    (2, "static-family total phase is pi"),
    (3, "rotating-family geometric phase vs oracle"),
    (4, "effective-generator diagonalization"),
    (5, "phase decomposition identity"),
    (6, "adiabatic limit: gap linear in drive rate"),
    (7, "extreme non-adiabatic limit: trivial phase"),
    (8, "gauge-invariance fuzzing"),
    (9, "parallel-transport representative"),
    (10, "superposition dichotomy"),
    (11, "two-branch resonance"),
    (12, "unitarity and convergence order"),
    (13, "suite wall-clock budget"),
];

fn run_timed(
    id: u32,
    title: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (pass, detail) = match body() {
        Ok(outcome) => outcome,
        Err(err) => (false, format!("error: {err}")),
    };
    CriterionResult {
        id,
        title,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Run criteria 1-12, then synthesize 13 from the measured wall time.
pub fn run_all() -> VerifySummary {
    let start = Instant::now();
    let mut results: Vec<CriterionResult> = (1..=12).map(run_criterion).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let others_pass = results.iter().all(|r| r.pass);
    results.push(CriterionResult {
        id: 13,
        title: CRITERION_TITLES[12].1,
        pass: elapsed <= 60.0 && others_pass,
        detail: format!("criteria 1-12 in {elapsed:.1}s (budget 60s)"),
        seconds: 0.0,
    });
    let total_seconds = start.elapsed().as_secs_f64();
    let all_pass = results.iter().all(|r| r.pass);
    VerifySummary {
        results,
        total_seconds,
        all_pass,
    }
}

pub fn run_criterion(id: u32) -> CriterionResult {
    let title = CRITERION_TITLES
        .iter()
        .find(|(n, _)| *n == id)
        .map(|(_, t)| *t)
        .unwrap_or("unknown criterion");
    match id {
        1 => run_timed(1, title, criterion_static_aa),
        2 => run_timed(2, title, criterion_static_total),
        3 => run_timed(3, title, criterion_rotating_aa),
        4 => run_timed(4, title, criterion_effective_diagonalization),
        5 => run_timed(5, title, criterion_decomposition),
        6 => run_timed(6, title, criterion_adiabatic_limit),
        7 => run_timed(7, title, criterion_extreme_nonadiabatic),
        8 => run_timed(8, title, criterion_gauge_fuzz),
        9 => run_timed(9, title, criterion_parallel_transport),
        10 => run_timed(10, title, criterion_superposition_dichotomy),
        11 => run_timed(11, title, criterion_resonance),
        12 => run_timed(12, title, criterion_unitarity_convergence),
        13 => {
            // meaningful only inside run_all; standalone it reports the
            // budget definition
            run_timed(13, title, || {
                Ok((true, "evaluated by run_all over criteria 1-12".into()))
            })
        }
        other => CriterionResult {
            id: other,
            title: "unknown criterion",
            pass: false,
            detail: format!("no criterion #{other}"),
            seconds: 0.0,
        },
    }
}

const STATIC_THETAS: [f64; 8] = [
    0.0,
    FRAC_PI_6,
    FRAC_PI_4,
    FRAC_PI_3,
    FRAC_PI_2,
    2.0 * FRAC_PI_3,
    5.0 * FRAC_PI_6,
    PI,
];

fn static_trajectory(theta: f64, steps: usize) -> Result<(HamiltonianSpec, Trajectory)> {
    let spec = HamiltonianSpec::static_spin(1.0, theta)?;
    let grid = TimeGrid::from_duration(PI, steps)?;
    let traj = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0)?, &grid)?;
    Ok((spec, traj))
}

fn rotating_trajectory(
    mu_b: f64,
    omega: f64,
    theta: f64,
    steps: usize,
) -> Result<(HamiltonianSpec, Trajectory)> {
    let spec = HamiltonianSpec::rotating_spin(mu_b, omega, theta)?;
    let grid = TimeGrid::from_duration(TAU / omega, steps)?;
    let traj = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0)?, &grid)?;
    Ok((spec, traj))
}

/// Criterion 1: |wrap(beta - pi(1 - cos theta))| <= 1e-6 over the theta ladder,
/// mu_b = 1, N = 20000, under 1 s per point.
fn criterion_static_aa() -> Result<(bool, String)> {
    let mut worst_diff: f64 = 0.0;
    let mut worst_time: f64 = 0.0;
    for theta in STATIC_THETAS {
        let point = Instant::now();
        let (_, traj) = static_trajectory(theta, 20_000)?;
        let verdict = check_cyclic(&traj, None)?;
        let beta = aa_phase(&traj, &verdict)?;
        let oracle = PI * (1.0 - theta.cos());
        worst_diff = worst_diff.max(wrap_angle(beta - oracle).abs());
        worst_time = worst_time.max(point.elapsed().as_secs_f64());
    }
    let pass = worst_diff <= 1e-6 && worst_time < 1.0;
    Ok((
        pass,
        format!("max |wrap(beta - oracle)| {worst_diff:.2e} (tol 1e-6); slowest point {worst_time:.3}s"),
    ))
}

/// Criterion 2: |wrap(phi - pi)| <= 1e-8 for every theta in the ladder.
fn criterion_static_total() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for theta in STATIC_THETAS {
        let (_, traj) = static_trajectory(theta, 20_000)?;
        let verdict = check_cyclic(&traj, None)?;
        let phi = verdict.total_phase.ok_or(crate::error::Error::NotCyclic {
            overlap_magnitude: verdict.overlap_magnitude,
        })?;
        worst = worst.max(wrap_angle(phi - PI).abs());
    }
    Ok((worst <= 1e-8, format!("max |wrap(phi - pi)| {worst:.2e} (tol 1e-8)")))
}

const ROTATING_GRID: [(f64, f64); 9] = [
    (FRAC_PI_6, 0.1),
    (FRAC_PI_6, 1.0),
    (FRAC_PI_6, 10.0),
    (FRAC_PI_3, 0.1),
    (FRAC_PI_3, 1.0),
    (FRAC_PI_3, 10.0),
    (FRAC_PI_2, 0.1),
    (FRAC_PI_2, 1.0),
    (FRAC_PI_2, 10.0),
];

/// Criterion 3: |wrap(beta - pi(1 + cos(theta - alpha)))| <= 1e-5 over the
/// theta x omega grid, mu_b = 1, N = 40000.
fn criterion_rotating_aa() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (theta, omega) in ROTATING_GRID {
        let (_, traj) = rotating_trajectory(1.0, omega, theta, 40_000)?;
        let verdict = check_cyclic(&traj, None)?;
        let beta = aa_phase(&traj, &verdict)?;
        let alpha = diagonalizing_tilt(1.0, omega, theta)?;
        let oracle = PI * (1.0 + (theta - alpha).cos());
        worst = worst.max(wrap_angle(beta - oracle).abs());
    }
    Ok((worst <= 1e-5, format!("max |wrap(beta - oracle)| {worst:.2e} (tol 1e-5)")))
}

/// Criterion 4: Analytic-tilt frames diagonalize the effective generator: rotating
/// off-diagonals <= 1e-8 mu_b with diagonals matching the closed form within
/// 1e-8; static off-diagonals <= 1e-8. N = 40000.
fn criterion_effective_diagonalization() -> Result<(bool, String)> {
    let mut worst_offdiag: f64 = 0.0;
    let mut worst_diag: f64 = 0.0;
    let mu_b = 1.0;
    let omega = 1.0;
    for theta in [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2] {
        let spec = HamiltonianSpec::rotating_spin(mu_b, omega, theta)?;
        let grid = TimeGrid::from_duration(TAU / omega, 40_000)?;
        let frame = analytic_w_frame(&spec, &grid)?;
        let track = effective_hamiltonian(&frame, &spec)?;
        worst_offdiag = worst_offdiag.max(track.max_offdiagonal());
        let alpha = diagonalizing_tilt(mu_b, omega, theta)?;
        let want = [
            -mu_b * alpha.cos() - 0.5 * omega * (1.0 + (theta - alpha).cos()),
            mu_b * alpha.cos() - 0.5 * omega * (1.0 - (theta - alpha).cos()),
        ];
        for (n, want_n) in want.iter().enumerate() {
            for v in track.diagonal(n) {
                worst_diag = worst_diag.max((v - want_n).abs());
            }
        }
    }
    for theta in [FRAC_PI_3, 2.0 * FRAC_PI_3] {
        let spec = HamiltonianSpec::static_spin(mu_b, theta)?;
        let grid = TimeGrid::from_duration(PI / mu_b, 40_000)?;
        let frame = analytic_w_frame(&spec, &grid)?;
        let track = effective_hamiltonian(&frame, &spec)?;
        worst_offdiag = worst_offdiag.max(track.max_offdiagonal());
        for (n, want_n) in [-mu_b, mu_b].iter().enumerate() {
            for v in track.diagonal(n) {
                worst_diag = worst_diag.max((v - want_n).abs());
            }
        }
    }
    let pass = worst_offdiag <= 1e-8 * mu_b && worst_diag <= 1e-8;
    Ok((
        pass,
        format!("max offdiag {worst_offdiag:.2e}, max diagonal error {worst_diag:.2e} (tol 1e-8)"),
    ))
}

/// Criterion 5: |wrap(phi - beta + D)| <= 1e-7 on every cyclic scenario of criteria
/// 1 and 3, with phi, beta, D from independent code paths.
fn criterion_decomposition() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for theta in STATIC_THETAS {
        let (spec, traj) = static_trajectory(theta, 20_000)?;
        let verdict = check_cyclic(&traj, None)?;
        let beta = aa_phase(&traj, &verdict)?;
        let d = dynamical_phase(&traj, &spec)?;
        let phi = verdict.total_phase.expect("cyclic");
        worst = worst.max(wrap_angle(phi - beta + d).abs());
    }
    for (theta, omega) in ROTATING_GRID {
        let (spec, traj) = rotating_trajectory(1.0, omega, theta, 40_000)?;
        let verdict = check_cyclic(&traj, None)?;
        let beta = aa_phase(&traj, &verdict)?;
        let d = dynamical_phase(&traj, &spec)?;
        let phi = verdict.total_phase.expect("cyclic");
        worst = worst.max(wrap_angle(phi - beta + d).abs());
    }
    Ok((worst <= 1e-7, format!("max |wrap(phi - beta + D)| {worst:.2e} (tol 1e-7)")))
}

/// Criterion 6: Slow drive: |beta - gamma| at omega = 0.01 over its value at
/// omega = 0.02 lies in [0.4, 0.6] (the gap is linear in the drive rate).
fn criterion_adiabatic_limit() -> Result<(bool, String)> {
    let theta = FRAC_PI_3;
    let mut gaps = Vec::new();
    for (omega, steps) in [(0.01, 2_000_000usize), (0.02, 1_000_000usize)] {
        let (spec, traj) = rotating_trajectory(1.0, omega, theta, steps)?;
        let verdict = check_cyclic(&traj, None)?;
        let beta = aa_phase(&traj, &verdict)?;
        // gamma from the eigenframe of the same parameter loop (its own
        // grid: the holonomy depends only on the loop)
        let gamma_grid = TimeGrid::from_duration(TAU / omega, 100_000)?;
        let frame = eigen_frame(&spec, &gamma_grid, None)?;
        let gamma = berry_phase(&spec, &frame, 0)?;
        gaps.push(wrap_angle(beta - gamma).abs());
    }
    let ratio = gaps[0] / gaps[1];
    let pass = (0.4..=0.6).contains(&ratio);
    Ok((
        pass,
        format!(
            "|beta-gamma| = {:.6e} at omega 0.01, {:.6e} at 0.02; ratio {ratio:.4} (window [0.4, 0.6])",
            gaps[0], gaps[1]
        ),
    ))
}

/// Criterion 7: Fast drive omega = 1e3 mu_b, theta = pi/3: |wrap(beta)| <= 0.02.
fn criterion_extreme_nonadiabatic() -> Result<(bool, String)> {
    let (_, traj) = rotating_trajectory(1.0, 1_000.0, FRAC_PI_3, 200_000)?;
    let verdict = check_cyclic(&traj, None)?;
    let beta = aa_phase(&traj, &verdict)?;
    Ok((
        wrap_angle(beta).abs() <= 0.02,
        format!("|wrap(beta)| {:.2e} (tol 2e-2)", wrap_angle(beta).abs()),
    ))
}

/// Criterion 8: 100 seeded loop-closed rephasings leave beta and gamma fixed to 1e-8;
/// 100 unconstrained frame rephasings move the reconstruction by exactly one
/// constant phase (deviation <= 1e-9).
fn criterion_gauge_fuzz() -> Result<(bool, String)> {
    let mut worst_beta: f64 = 0.0;
    let mut worst_gamma: f64 = 0.0;
    let mut worst_covariance: f64 = 0.0;
    let scenarios: Vec<(HamiltonianSpec, Trajectory)> = vec![
        static_trajectory(FRAC_PI_3, 20_000)?,
        rotating_trajectory(1.0, 1.0, FRAC_PI_3, 20_000)?,
    ];
    for (scenario_idx, (spec, traj)) in scenarios.iter().enumerate() {
        let seed_base = 0xACCE_5500 + (scenario_idx as u64) * 0x1_0000;
        let grid = traj.grid();
        let verdict = check_cyclic(traj, None)?;
        let beta = aa_phase(traj, &verdict)?;
        for i in 0..100u64 {
            let gauge = GaugeFunction::random_periodic(grid, seed_base + i);
            let rephased = rephase_trajectory(traj, &gauge);
            let rverdict = check_cyclic(&rephased, None)?;
            worst_beta = worst_beta.max(wrap_angle(aa_phase(&rephased, &rverdict)? - beta).abs());
        }

        let frame = eigen_frame(spec, grid, None)?;
        let gamma = berry_phase(spec, &frame, 0)?;
        for i in 0..100u64 {
            let gauges: Vec<GaugeFunction> = (0..2)
                .map(|n| GaugeFunction::random_periodic(grid, seed_base + 0x100 + i + (n << 32)))
                .collect();
            let scrambled = crate::hamiltonian::EigenFrame {
                frame: rephase_frame(&frame.frame, &gauges)?,
                energies: frame.energies.clone(),
            };
            worst_gamma =
                worst_gamma.max(wrap_angle(berry_phase(spec, &scrambled, 0)? - gamma).abs());
        }

        let wframe = build_w_frame(traj, &verdict)?;
        let baseline = reconstruct_amplitude(&wframe, spec)?;
        for i in 0..100u64 {
            let gauges: Vec<GaugeFunction> = (0..2)
                .map(|n| {
                    GaugeFunction::random_unconstrained(grid, seed_base + 0x200 + i + (n << 32))
                })
                .collect();
            let alpha0 = gauges[0].sample_nodes(grid)[0];
            let rebuilt = reconstruct_amplitude(&rephase_frame(&wframe, &gauges)?, spec)?;
            for (a, b) in rebuilt.states().iter().zip(baseline.states()) {
                worst_covariance =
                    worst_covariance.max(a.max_componentwise_distance(&b.rephased(alpha0)));
            }
        }
    }
    let pass = worst_beta <= 1e-8 && worst_gamma <= 1e-8 && worst_covariance <= 1e-9;
    Ok((
        pass,
        format!(
            "beta shift {worst_beta:.2e}, gamma shift {worst_gamma:.2e} (tol 1e-8); reconstruction covariance {worst_covariance:.2e} (tol 1e-9)"
        ),
    ))
}

/// Criterion 9: The transported representative solves the norm-preserving nonlinear
/// equation to 1e-6 at default resolution, and transporting a rephased
/// trajectory equals rephasing the transport by alpha(0), to 1e-10.
fn criterion_parallel_transport() -> Result<(bool, String)> {
    let mut worst_residual: f64 = 0.0;
    let mut worst_covariance: f64 = 0.0;
    let scenarios: Vec<(HamiltonianSpec, Trajectory)> = vec![
        static_trajectory(FRAC_PI_3, 20_000)?,
        rotating_trajectory(1.0, 1.0, FRAC_PI_3, 40_000)?,
    ];
    for (i, (spec, traj)) in scenarios.iter().enumerate() {
        let bar = parallel_transport_representative(traj)?;
        worst_residual = worst_residual.max(nonlinear_residual(&bar, spec)?);

        let gauge = GaugeFunction::random_unconstrained(traj.grid(), 0x9a + i as u64);
        let alpha0 = gauge.sample_nodes(traj.grid())[0];
        let via_gauge = parallel_transport_representative(&rephase_trajectory(traj, &gauge))?;
        for (a, b) in via_gauge.states().iter().zip(bar.states()) {
            worst_covariance = worst_covariance.max(a.max_componentwise_distance(&b.rephased(alpha0)));
        }
    }
    let pass = worst_residual <= 1e-6 && worst_covariance <= 1e-10;
    Ok((
        pass,
        format!(
            "nonlinear residual {worst_residual:.2e} (tol 1e-6); covariance {worst_covariance:.2e} (tol 1e-10)"
        ),
    ))
}

/// Criterion 10: Superposed representatives: theta = pi/3 (expectation gap 1) leaves a
/// transverse residual >= 1e-3; theta = pi/2 (gap < 1e-12) stays <= 1e-5.
fn criterion_superposition_dichotomy() -> Result<(bool, String)> {
    let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
    let run = |theta: f64| -> Result<(f64, f64)> {
        let spec = HamiltonianSpec::static_spin(1.0, theta)?;
        let grid = TimeGrid::from_duration(PI, 20_000)?;
        let plus = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0)?, &grid)?;
        let minus = propagate(&spec, &frame_row(&spec, Branch::Minus, 0.0)?, &grid)?;
        let report = nonlinear_superposition_test(&plus, &minus, &s, &spec)?;
        Ok((report.condition_gap, report.residual))
    };
    let (gap_broken, residual_broken) = run(FRAC_PI_3)?;
    let (gap_intact, residual_intact) = run(FRAC_PI_2)?;
    let min_coeff = s.c1.norm().min(s.c2.norm());
    let bound_constant = if gap_broken > 0.0 {
        residual_broken / (gap_broken * min_coeff)
    } else {
        f64::NAN
    };
    let pass = (gap_broken - 1.0).abs() < 1e-9
        && residual_broken >= 1e-3
        && gap_intact < 1e-12
        && residual_intact <= 1e-5;
    Ok((
        pass,
        format!(
            "gap 1 -> residual {residual_broken:.2e} (>= 1e-3, empirical bound constant {bound_constant:.3}); gap {gap_intact:.1e} -> residual {residual_intact:.2e} (<= 1e-5)"
        ),
    ))
}

/// Criterion 11: Three constructed resonances give cyclic two-branch superpositions
/// (overlap >= 1 - 1e-6); 17 seeded generic draws stay non-cyclic with
/// overlap < 1 - 1e-3.
fn criterion_resonance() -> Result<(bool, String)> {
    let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
    let omega = 1.0;
    let run = |mu_b: f64, theta: f64| -> Result<f64> {
        let spec = HamiltonianSpec::rotating_spin(mu_b, omega, theta)?;
        let grid = TimeGrid::from_duration(TAU / omega, 40_000)?;
        let plus = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0)?, &grid)?;
        let minus = propagate(&spec, &frame_row(&spec, Branch::Minus, 0.0)?, &grid)?;
        let sum = superpose(&plus, &minus, &s)?;
        Ok(check_cyclic(&sum, None)?.overlap_magnitude)
    };

    let mut detail = String::new();
    let mut pass = true;
    for m in [2u32, 3, 4] {
        let theta = FRAC_PI_3;
        let mu_b = resonant_mu_b(omega, theta, m)?;
        let sanity = resonance_check(
            &HamiltonianSpec::rotating_spin(mu_b, omega, theta)?,
            TAU / omega,
        )?;
        let overlap = run(mu_b, theta)?;
        pass &= sanity.is_resonant(1e-9) && overlap >= 1.0 - 1e-6;
        detail.push_str(&format!("m={m}: overlap deficit {:.1e}; ", 1.0 - overlap));
    }

    let mut rng = SplitMix64::new(0xC11);
    let mut generic_worst: f64 = 0.0;
    let mut draws = 0;
    let mut attempts = 0;
    while draws < 17 && attempts < 10_000 {
        attempts += 1;
        let mu_b = rng.uniform(0.3, 3.0);
        let theta = rng.uniform(0.3, 2.8);
        let spec = HamiltonianSpec::rotating_spin(mu_b, omega, theta)?;
        let resonance = resonance_check(&spec, TAU / omega)?;
        // keep genuinely generic points: away from any resonance
        if resonance.m_residual < 0.05 || resonance.m_residual > 0.45 {
            continue;
        }
        let overlap = run(mu_b, theta)?;
        pass &= overlap < 1.0 - 1e-3;
        generic_worst = generic_worst.max(overlap);
        draws += 1;
    }
    pass &= draws == 17;
    detail.push_str(&format!(
        "{draws} generic draws, max overlap {generic_worst:.6} (must be < {:.6})",
        1.0 - 1e-3
    ));
    Ok((pass, detail))
}

/// Criterion 12: Norm drift <= 1e-9 over 1e5 steps; the propagated state error against
/// the closed forms shrinks ~4x per step halving for the driven family, and
/// sits at rounding level for the static family (its stepper is exact).
fn criterion_unitarity_convergence() -> Result<(bool, String)> {
    // drift
    let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3)?;
    let grid = TimeGrid::from_duration(TAU, 100_000)?;
    let traj = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0)?, &grid)?;
    let drift = traj
        .states()
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max);

    // convergence order on the driven family
    let mut worst_ratio_low = f64::INFINITY;
    let mut worst_ratio_high: f64 = 0.0;
    for theta in [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2] {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, theta)?;
        let mut errors = Vec::new();
        for steps in [2_000usize, 4_000, 8_000] {
            let grid = TimeGrid::from_duration(TAU, steps)?;
            let traj = propagate(&spec, &analytic_solution(&spec, Branch::Plus, 0.0)?, &grid)?;
            let err = grid
                .nodes()
                .enumerate()
                .map(|(k, t)| {
                    let exact = analytic_solution(&spec, Branch::Plus, t).expect("builtin");
                    traj.state(k).max_componentwise_distance(&exact)
                })
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            worst_ratio_low = worst_ratio_low.min(ratio);
            worst_ratio_high = worst_ratio_high.max(ratio);
        }
    }

    // static family: the midpoint exponential of a constant generator is the
    // exact flow, so the only error is rounding
    let mut static_error: f64 = 0.0;
    for theta in [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2] {
        let spec = HamiltonianSpec::static_spin(1.0, theta)?;
        let grid = TimeGrid::from_duration(PI, 2_000)?;
        let traj = propagate(&spec, &analytic_solution(&spec, Branch::Plus, 0.0)?, &grid)?;
        for (k, t) in grid.nodes().enumerate() {
            let exact = analytic_solution(&spec, Branch::Plus, t)?;
            static_error = static_error.max(traj.state(k).max_componentwise_distance(&exact));
        }
    }

    let pass = drift <= 1e-9
        && worst_ratio_low >= 3.0
        && worst_ratio_high <= 5.0
        && static_error <= 1e-10;
    Ok((
        pass,
        format!(
            "drift {drift:.2e} over 1e5 steps (tol 1e-9); halving ratios in [{worst_ratio_low:.2}, {worst_ratio_high:.2}] (window [3, 5]); static exactness {static_error:.2e}"
        ),
    ))
}

/// Mutation probe used by tests: a scenario with a deliberately coarse grid
/// must trip the decomposition-residual gate rather than silently pass.
pub fn decomposition_residual_at(steps: usize) -> Result<f64> {
    let scenario = Scenario {
        model: "rotating_spin".into(),
        params: [
            ("mu_b".to_string(), 1.0),
            ("omega".to_string(), 1.0),
            ("theta".to_string(), FRAC_PI_3),
        ]
        .into_iter()
        .collect(),
        custom_path: None,
        grid: GridSpec {
            t_end: None,
            steps: Some(steps),
        },
        initial: InitialState::Tag("w_plus".into()),
        analyses: vec![Analysis::Phases],
        seed: None,
    };
    let report = run_scenario(&scenario, std::path::Path::new("."))?;
    Ok(report
        .phases
        .map(|p| p.decomposition_residual)
        .unwrap_or(f64::NAN))
}
