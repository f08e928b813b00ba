//! Both gauge actions of the theory: per-node rephasing of trajectories
//! (the time-dependent equivalence class on amplitudes) and per-track
//! rephasing of frames (the hidden local symmetry on bases), plus the
//! parallel-transport representative and its nonlinear-equation residual.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::state::{raw_inner, FrameTrajectory, TimeGrid, Trajectory};

/// Smooth real gauge profile alpha(t) on an interval: constant + linear
/// drift + truncated Fourier series. The linear term covers non-periodic
/// profiles like alpha(t) = t; loop-closed profiles have zero drift.
#[derive(Debug, Clone)]
pub struct GaugeFunction {
    t_start: f64,
    t_end: f64,
    constant: f64,
    slope: f64,
    /// (cos, sin) coefficients of mode k+1 at frequency 2 pi (k+1) / duration.
    modes: Vec<(f64, f64)>,
}

impl GaugeFunction {
    pub fn new(
        grid: &TimeGrid,
        constant: f64,
        slope: f64,
        modes: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            t_start: grid.t_start(),
            t_end: grid.t_end(),
            constant,
            slope,
            modes,
        }
    }

    pub fn zero(grid: &TimeGrid) -> Self {
        Self::new(grid, 0.0, 0.0, Vec::new())
    }

    pub fn constant(grid: &TimeGrid, value: f64) -> Self {
        Self::new(grid, value, 0.0, Vec::new())
    }

    /// alpha(t) = t.
    pub fn linear(grid: &TimeGrid) -> Self {
        Self::new(grid, 0.0, 1.0, Vec::new())
    }

    /// Loop-closed random profile: 8 Fourier modes, coefficients uniform in
    /// [-1, 1], no drift. Deterministic in the seed.
    pub fn random_periodic(grid: &TimeGrid, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let modes = (0..8)
            .map(|_| (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        Self::new(grid, rng.uniform(-1.0, 1.0), 0.0, modes)
    }

    /// Unconstrained random profile: the loop-closed modes plus a uniform
    /// drift term, so alpha(t_end) != alpha(t_start) in general.
    pub fn random_unconstrained(grid: &TimeGrid, seed: u64) -> Self {
        let mut base = Self::random_periodic(grid, seed);
        let mut rng = SplitMix64::new(seed ^ 0xa076_1d64_78bd_642f);
        base.slope = rng.uniform(-1.0, 1.0);
        base
    }

    pub fn is_periodic(&self) -> bool {
        (self.slope * (self.t_end - self.t_start)).abs() < 1e-12
    }

    pub fn eval(&self, t: f64) -> f64 {
        let duration = self.t_end - self.t_start;
        let x = std::f64::consts::TAU * (t - self.t_start) / duration;
        let mut value = self.constant + self.slope * (t - self.t_start);
        for (k, (c, s)) in self.modes.iter().enumerate() {
            let arg = (k + 1) as f64 * x;
            value += c * arg.cos() + s * arg.sin();
        }
        value
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let duration = self.t_end - self.t_start;
        let base = std::f64::consts::TAU / duration;
        let x = base * (t - self.t_start);
        let mut value = self.slope;
        for (k, (c, s)) in self.modes.iter().enumerate() {
            let freq = (k + 1) as f64 * base;
            let arg = (k + 1) as f64 * x;
            value += freq * (-c * arg.sin() + s * arg.cos());
        }
        value
    }

    /// Values at every grid node. Periodic profiles reuse the first value at
    /// the last node so loop closure is exact, not merely to rounding.
    pub fn sample_nodes(&self, grid: &TimeGrid) -> Vec<f64> {
        let mut values: Vec<f64> = grid.nodes().map(|t| self.eval(t)).collect();
        if self.is_periodic() {
            values[grid.steps()] = values[0];
        }
        values
    }
}

/// Minimal deterministic generator for reproducible fuzzing.
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let x = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * x
    }
}

/// states[k] -> e^{i alpha(t_k)} states[k].
pub fn rephase_trajectory(traj: &Trajectory, gauge: &GaugeFunction) -> Trajectory {
    let phases = gauge.sample_nodes(traj.grid());
    let states = traj
        .states()
        .iter()
        .zip(&phases)
        .map(|(s, phase)| s.rephased(*phase))
        .collect();
    Trajectory::new(*traj.grid(), states, traj.spec_id().map(str::to_owned))
        .expect("rephasing preserves shape")
}

/// Row n of the frame picks up its own phase profile alpha_n(t);
/// orthonormality is untouched.
pub fn rephase_frame(frame: &FrameTrajectory, gauges: &[GaugeFunction]) -> Result<FrameTrajectory> {
    if gauges.len() != frame.dim() {
        return Err(Error::DimensionMismatch {
            left: frame.dim(),
            right: gauges.len(),
        });
    }
    let grid = frame.grid();
    let samples: Vec<Vec<f64>> = gauges.iter().map(|g| g.sample_nodes(grid)).collect();
    let vectors = (0..grid.n_nodes())
        .map(|k| {
            (0..frame.dim())
                .map(|n| frame.vector(k, n).rephased(samples[n][k]))
                .collect()
        })
        .collect();
    FrameTrajectory::new(*grid, vectors)
}

/// The representative with every consecutive overlap real-positive:
/// psi_bar(t_k) = e^{i Phi_k} psi(t_k), Phi_k = -sum_{j<k} arg<psi_j|psi_{j+1}>,
/// the discrete accumulation of the connection integral.
///
/// Idempotent, and covariant under per-node rephasing: the representative of
/// e^{i alpha(t)} psi equals e^{i alpha(0)} times the representative of psi.
pub fn parallel_transport_representative(traj: &Trajectory) -> Result<Trajectory> {
    let states = traj.states();
    let mut out = Vec::with_capacity(states.len());
    out.push(states[0].clone());
    let mut accumulated = 0.0;
    for (node, pair) in states.windows(2).enumerate() {
        let ov = raw_inner(pair[0].amplitudes(), pair[1].amplitudes());
        let magnitude = ov.norm();
        if magnitude <= crate::state::OVERLAP_FLOOR {
            return Err(Error::UnderResolvedTrack {
                node,
                magnitude,
            });
        }
        accumulated -= ov.arg();
        out.push(pair[1].rephased(accumulated));
    }
    Trajectory::new(*traj.grid(), out, traj.spec_id().map(str::to_owned))
}

/// Max central-difference residual of the norm-preserving nonlinear equation
/// i d/dt psi = [H - <psi|H|psi>] psi over interior nodes.
///
/// Small only when the input is (the parallel transport of) a true solution;
/// an extra time-dependent phase alpha(t) shows up as its full rate.
pub fn nonlinear_residual(bar_traj: &Trajectory, spec: &HamiltonianSpec) -> Result<f64> {
    central_difference_residual(bar_traj, spec, true)
}

pub(crate) fn central_difference_residual(
    traj: &Trajectory,
    spec: &HamiltonianSpec,
    subtract_expectation: bool,
) -> Result<f64> {
    let grid = traj.grid();
    if grid.n_nodes() < 3 {
        return Err(Error::TooFewNodes {
            nodes: grid.n_nodes(),
            needed: 3,
        });
    }
    let dt = grid.dt();
    let mut worst: f64 = 0.0;
    for k in 1..grid.steps() {
        let h = spec.evaluate(grid.node(k))?;
        let psi = traj.state(k).amplitudes();
        let prev = traj.state(k - 1).amplitudes();
        let next = traj.state(k + 1).amplitudes();
        let mut target = h.mul_vec(psi);
        if subtract_expectation {
            let expectation = raw_inner(psi, &target).re / traj.state(k).norm().powi(2);
            for (t, p) in target.iter_mut().zip(psi) {
                *t -= expectation * p;
            }
        }
        let residual_sq: f64 = (0..psi.len())
            .map(|i| {
                let deriv = Complex64::new(0.0, 1.0) * (next[i] - prev[i]) / (2.0 * dt);
                (deriv - target[i]).norm_sqr()
            })
            .sum();
        worst = worst.max(residual_sq.sqrt());
    }
    Ok(worst)
}

/// Max entrywise distance between the projector |psi><psi| before and after
/// rephasing. A pure per-node phase cannot move it.
pub fn density_invariance(traj: &Trajectory, gauge: &GaugeFunction) -> f64 {
    let rephased = rephase_trajectory(traj, gauge);
    let mut worst: f64 = 0.0;
    for (a, b) in traj.states().iter().zip(rephased.states()) {
        let av = a.amplitudes();
        let bv = b.amplitudes();
        for i in 0..av.len() {
            for j in 0..av.len() {
                let rho_a = av[i] * av[j].conj();
                let rho_b = bv[i] * bv[j].conj();
                worst = worst.max((rho_a - rho_b).norm());
            }
        }
    }
    worst
}
