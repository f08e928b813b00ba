//! Total, dynamical, and geometric phase extraction from trajectories and
//! frames, plus the decomposition identity tying them together.
//!
//! All geometric quantities are computed in overlap-product (Bargmann) form:
//! sums of args of consecutive overlaps. Per-node rephasings telescope out of
//! those sums exactly, so gauge invariance holds in finite precision instead
//! of up to discretization error.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{eigen_frame, EigenFrame, HamiltonianSpec};
use crate::propagator::CyclicityVerdict;
use crate::state::{inner_product, wrap_angle, ComplexState, Trajectory, OVERLAP_FLOOR};

/// Phase decomposition of one cyclic evolution: total phi, dynamical D,
/// geometric beta (and Berry gamma when an eigenframe over a closed
/// parameter loop exists), with phi = beta - D as the consistency residual.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// arg<psi(0)|psi(T)> in (-pi, pi].
    pub total_phase: f64,
    /// integral of <psi|H|psi> dt, unwrapped.
    pub dynamical: f64,
    /// Cyclic geometric phase, principal value.
    pub aa_phase: f64,
    /// Unwrapped companion of `aa_phase`, relative to the principal total
    /// phase; meaningful modulo 2 pi.
    pub aa_phase_unwrapped: Option<f64>,
    /// Eigentrack holonomy, principal value, when defined.
    pub berry_phase: Option<f64>,
    pub berry_phase_unwrapped: Option<f64>,
    /// |wrap(phi - beta + D)|.
    pub decomposition_residual: f64,
}

/// Sum of arg<u(t_k)|u(t_{k+1})> along a track.
///
/// Errors when a consecutive overlap magnitude drops to the overlap floor:
/// the track is too coarsely sampled for its own motion.
pub(crate) fn sum_overlap_args<'a, I>(track: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a ComplexState>,
{
    let mut iter = track.into_iter();
    let mut prev = match iter.next() {
        Some(s) => s,
        None => return Err(Error::TooFewNodes { nodes: 0, needed: 2 }),
    };
    let mut sum = 0.0;
    for (node, curr) in iter.enumerate() {
        let ov = inner_product(prev, curr)?;
        let magnitude = ov.norm();
        if magnitude <= OVERLAP_FLOOR {
            return Err(Error::UnderResolvedTrack { node, magnitude });
        }
        sum += ov.arg();
        prev = curr;
    }
    Ok(sum)
}

/// Discrete line integral of the connection <u|i d/dt u> along a track:
/// -sum_k arg<u(t_k)|u(t_{k+1})>. Second-order accurate in the grid step.
pub fn connection_integral<'a, I>(track: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a ComplexState>,
{
    sum_overlap_args(track).map(|s| -s)
}

/// Composite-trapezoid integral of <psi(t_k)|H(t_k)|psi(t_k)> over the grid.
///
/// Sign convention fixed once: D is the raw integral, so phi = beta - D.
pub fn dynamical_phase(traj: &Trajectory, spec: &HamiltonianSpec) -> Result<f64> {
    let grid = traj.grid();
    let dt = grid.dt();
    let mut sum = 0.0;
    for (k, t) in grid.nodes().enumerate() {
        let h = spec.evaluate(t)?;
        let psi = traj.state(k).amplitudes();
        let hv = h.mul_vec(psi);
        let expectation = crate::state::raw_inner(psi, &hv).re;
        let weight = if k == 0 || k == grid.steps() { 0.5 } else { 1.0 };
        sum += weight * expectation;
    }
    Ok(sum * dt)
}

/// Cyclic geometric phase beta = wrap(phi - sum_k arg<psi(t_k)|psi(t_{k+1})>),
/// the overlap-product form of the connection integral of the periodic
/// representative e^{-i phi t / T} psi(t).
///
/// Invariant, exactly, under any per-node rephasing whose endpoint values
/// agree: such phases telescope out of the sum and cancel in phi.
pub fn aa_phase(traj: &Trajectory, verdict: &CyclicityVerdict) -> Result<f64> {
    aa_phase_full(traj, verdict).map(|(wrapped, _)| wrapped)
}

/// Wrapped and unwrapped forms of the cyclic geometric phase. The unwrapped
/// value uses the principal-branch total phase, so it is itself defined
/// modulo 2 pi; acceptance contracts compare the wrapped value only.
pub fn aa_phase_full(traj: &Trajectory, verdict: &CyclicityVerdict) -> Result<(f64, f64)> {
    let total = match verdict.total_phase {
        Some(phi) if verdict.is_cyclic => phi,
        _ => {
            return Err(Error::NotCyclic {
                overlap_magnitude: verdict.overlap_magnitude,
            })
        }
    };
    let args = sum_overlap_args(traj.states())?;
    let unwrapped = total - args;
    Ok((wrap_angle(unwrapped), unwrapped))
}

/// Holonomy of one eigenvector track around a closed parameter loop:
/// gamma_n = -arg prod_k <v_n(t_k)|v_n(t_{k+1})>, product closed by the
/// (t_N -> t_0) pair. The product form is per-node-phase invariant to
/// machine precision.
pub fn berry_phase(
    spec: &HamiltonianSpec,
    frame: &EigenFrame,
    track_index: usize,
) -> Result<f64> {
    let grid = frame.frame.grid();
    let h_start = spec.evaluate(grid.t_start())?;
    let h_end = spec.evaluate(grid.t_end())?;
    let deviation = h_start.max_entry_distance(&h_end);
    if deviation > 1e-12 {
        return Err(Error::OpenParameterLoop { deviation });
    }

    let track: Vec<&ComplexState> = frame.frame.track(track_index).collect();
    let mut product = Complex64::new(1.0, 0.0);
    for pair in track.windows(2) {
        let ov = inner_product(pair[0], pair[1])?;
        let magnitude = ov.norm();
        if magnitude <= OVERLAP_FLOOR {
            return Err(Error::UnderResolvedTrack {
                node: 0,
                magnitude,
            });
        }
        product *= ov / magnitude;
    }
    let closure = inner_product(track[track.len() - 1], track[0])?;
    let magnitude = closure.norm();
    if magnitude <= OVERLAP_FLOOR {
        return Err(Error::UnderResolvedTrack {
            node: track.len() - 1,
            magnitude,
        });
    }
    product *= closure / magnitude;
    Ok(-product.arg())
}

/// Assemble the full decomposition for a cyclic trajectory.
///
/// The Berry entry is filled only when the generator traces a closed
/// parameter loop and its eigenframe is non-degenerate on the grid; the
/// reported track is the one dominating the initial state.
pub fn phase_report(
    traj: &Trajectory,
    spec: &HamiltonianSpec,
    verdict: &CyclicityVerdict,
) -> Result<PhaseReport> {
    let total = match verdict.total_phase {
        Some(phi) if verdict.is_cyclic => phi,
        _ => {
            return Err(Error::NotCyclic {
                overlap_magnitude: verdict.overlap_magnitude,
            })
        }
    };
    let dynamical = dynamical_phase(traj, spec)?;
    let (aa, aa_unwrapped) = aa_phase_full(traj, verdict)?;

    let berry = berry_for_dominant_track(traj, spec);

    Ok(PhaseReport {
        total_phase: total,
        dynamical,
        aa_phase: aa,
        aa_phase_unwrapped: Some(aa_unwrapped),
        berry_phase: berry.map(wrap_angle),
        berry_phase_unwrapped: berry,
        decomposition_residual: wrap_angle(total - aa + dynamical).abs(),
    })
}

fn berry_for_dominant_track(traj: &Trajectory, spec: &HamiltonianSpec) -> Option<f64> {
    let grid = traj.grid();
    let h_start = spec.evaluate(grid.t_start()).ok()?;
    let h_end = spec.evaluate(grid.t_end()).ok()?;
    if h_start.max_entry_distance(&h_end) > 1e-12 {
        return None;
    }
    let frame = eigen_frame(spec, grid, None).ok()?;
    let initial = traj.first();
    let track = (0..spec.dim()).max_by(|&a, &b| {
        let ov_a = inner_product(frame.frame.vector(0, a), initial)
            .map(|z| z.norm())
            .unwrap_or(0.0);
        let ov_b = inner_product(frame.frame.vector(0, b), initial)
            .map(|z| z.norm())
            .unwrap_or(0.0);
        ov_a.partial_cmp(&ov_b).expect("finite overlaps")
    })?;
    // unwrapped via the plain arg sum (no per-step wrap ambiguity at sane
    // resolutions), wrapped value identical to the closed product form
    berry_phase(spec, &frame, track).ok()
}

/// Gauge-covariant integrated overlap for noncyclic processes:
/// exp(i C_k) <psi(0)|psi(t_k)> with C_k the partial connection integral.
/// For cyclic trajectories at k = N its argument equals the geometric phase.
pub fn pancharatnam_overlap(traj: &Trajectory, t_index: usize) -> Result<Complex64> {
    if t_index >= traj.grid().n_nodes() {
        return Err(Error::TooFewNodes {
            nodes: traj.grid().n_nodes(),
            needed: t_index + 1,
        });
    }
    let partial = sum_overlap_args(&traj.states()[..=t_index])?;
    let endpoint = inner_product(traj.first(), traj.state(t_index))?;
    Ok(Complex64::from_polar(1.0, -partial) * endpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{
        analytic_solution, closed_form_phases, diagonalizing_tilt, eigenvector_row, frame_row,
        Branch, CustomSpec,
    };
    use crate::linalg::CMatrix;
    use crate::propagator::{check_cyclic, propagate};
    use crate::state::TimeGrid;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

    fn static_traj(theta: f64, steps: usize) -> (HamiltonianSpec, Trajectory) {
        let spec = HamiltonianSpec::static_spin(1.0, theta).unwrap();
        let initial = frame_row(&spec, Branch::Plus, 0.0).unwrap();
        let grid = TimeGrid::from_duration(PI, steps).unwrap();
        let traj = propagate(&spec, &initial, &grid).unwrap();
        (spec, traj)
    }

    #[test]
    fn connection_integral_constant_track_is_zero() {
        let s = ComplexState::normalized(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ])
        .unwrap();
        let track = vec![s.clone(), s.clone(), s];
        assert_eq!(connection_integral(&track).unwrap(), 0.0);
    }

    #[test]
    fn connection_integral_rotating_eigentrack() {
        // one period of the instantaneous eigenvector: pi (1 + cos theta)
        let theta = FRAC_PI_3;
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, theta).unwrap();
        let grid = TimeGrid::from_duration(TAU, 40_000).unwrap();
        let track: Vec<ComplexState> = grid
            .nodes()
            .map(|t| eigenvector_row(&spec, Branch::Plus, t).unwrap())
            .collect();
        let got = connection_integral(&track).unwrap();
        assert!((got - PI * (1.0 + theta.cos())).abs() < 2e-6);
    }

    #[test]
    fn connection_integral_static_frame_track() {
        let theta = FRAC_PI_3;
        let spec = HamiltonianSpec::static_spin(1.0, theta).unwrap();
        let grid = TimeGrid::from_duration(PI, 20_000).unwrap();
        let track: Vec<ComplexState> = grid
            .nodes()
            .map(|t| frame_row(&spec, Branch::Plus, t).unwrap())
            .collect();
        let got = connection_integral(&track).unwrap();
        assert!((got - PI * (1.0 - theta.cos())).abs() < 2e-6);
    }

    #[test]
    fn connection_integral_refuses_orthogonal_neighbors() {
        let e0 = ComplexState::normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let e1 = ComplexState::normalized(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let track = vec![e0, e1];
        assert!(matches!(
            connection_integral(&track),
            Err(Error::UnderResolvedTrack { .. })
        ));
    }

    #[test]
    fn dynamical_phase_static_and_zero() {
        let (spec, traj) = static_traj(FRAC_PI_3, 20_000);
        let d = dynamical_phase(&traj, &spec).unwrap();
        assert!((d + FRAC_PI_2).abs() < 1e-7, "D = {d}");

        let z = CMatrix::zeros(2);
        let zero = HamiltonianSpec::custom(
            CustomSpec::new(vec![(0.0, z.clone()), (10.0, z)]).unwrap(),
        );
        let s = ComplexState::normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let grid = TimeGrid::from_duration(5.0, 100).unwrap();
        let traj = propagate(&zero, &s, &grid).unwrap();
        assert_eq!(dynamical_phase(&traj, &zero).unwrap(), 0.0);
    }

    #[test]
    fn dynamical_phase_rotating_matches_tilt_oracle() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let initial = frame_row(&spec, Branch::Plus, 0.0).unwrap();
        let grid = TimeGrid::from_duration(TAU, 40_000).unwrap();
        let traj = propagate(&spec, &initial, &grid).unwrap();
        let alpha = diagonalizing_tilt(1.0, 1.0, FRAC_PI_3).unwrap();
        let d = dynamical_phase(&traj, &spec).unwrap();
        assert!((d + TAU * alpha.cos()).abs() < 1e-7, "D = {d}");
        assert!((d + 5.9371).abs() < 1e-3);
    }

    #[test]
    fn aa_phase_static_oracle() {
        for (theta, want) in [
            (FRAC_PI_3, FRAC_PI_2),
            (0.0, 0.0),
            (PI, 0.0), // wrap(2 pi)
        ] {
            let (_, traj) = static_traj(theta, 20_000);
            let verdict = check_cyclic(&traj, None).unwrap();
            let beta = aa_phase(&traj, &verdict).unwrap();
            assert!(
                wrap_angle(beta - want).abs() < 1e-6,
                "theta = {theta}: beta = {beta}, want {want}"
            );
        }
    }

    #[test]
    fn aa_phase_rotating_oracle() {
        let theta = FRAC_PI_3;
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, theta).unwrap();
        let initial = frame_row(&spec, Branch::Plus, 0.0).unwrap();
        let grid = TimeGrid::from_duration(TAU, 40_000).unwrap();
        let traj = propagate(&spec, &initial, &grid).unwrap();
        let verdict = check_cyclic(&traj, None).unwrap();
        let beta = aa_phase(&traj, &verdict).unwrap();
        let alpha = diagonalizing_tilt(1.0, 1.0, theta).unwrap();
        let want = wrap_angle(PI * (1.0 + (theta - alpha).cos()));
        assert!((beta - want).abs() < 1e-5);
        assert!((beta + 0.76677).abs() < 1e-3);
    }

    #[test]
    fn aa_phase_requires_cyclicity() {
        let (_, traj) = static_traj(FRAC_PI_3, 1000);
        let open = Trajectory::new(
            TimeGrid::from_duration(PI / 2.0, 500).unwrap(),
            traj.states()[..501].to_vec(),
            None,
        )
        .unwrap();
        let verdict = check_cyclic(&open, None).unwrap();
        assert!(matches!(
            aa_phase(&open, &verdict),
            Err(Error::NotCyclic { .. })
        ));
    }

    #[test]
    fn aa_phase_invariant_under_loop_closed_rephasing() {
        let (_, traj) = static_traj(FRAC_PI_3, 5_000);
        let verdict = check_cyclic(&traj, None).unwrap();
        let beta = aa_phase(&traj, &verdict).unwrap();

        // alpha(t) = sin(2 pi t / T): closed loop, O(1) amplitude
        let grid = *traj.grid();
        let rephased: Vec<ComplexState> = grid
            .nodes()
            .zip(traj.states())
            .map(|(t, s)| s.rephased((TAU * t / grid.duration()).sin()))
            .collect();
        let rtraj = Trajectory::new(grid, rephased, None).unwrap();
        let rverdict = check_cyclic(&rtraj, None).unwrap();
        let rbeta = aa_phase(&rtraj, &rverdict).unwrap();
        assert!((beta - rbeta).abs() < 1e-10, "shift {}", (beta - rbeta).abs());
    }

    #[test]
    fn berry_phase_rotating_tracks() {
        let theta = FRAC_PI_3;
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, theta).unwrap();
        let grid = TimeGrid::from_duration(TAU, 4_000).unwrap();
        let frame = eigen_frame(&spec, &grid, None).unwrap();
        let gamma0 = berry_phase(&spec, &frame, 0).unwrap();
        assert!(
            (gamma0 - wrap_angle(PI * (1.0 + theta.cos()))).abs() < 1e-5,
            "gamma = {gamma0}"
        );

        let equator = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_2).unwrap();
        let frame = eigen_frame(&equator, &grid, None).unwrap();
        let gamma = berry_phase(&equator, &frame, 0).unwrap();
        assert!(wrap_angle(gamma - PI).abs() < 1e-5, "gamma = {gamma}");
    }

    #[test]
    fn berry_phase_static_constant_frame_is_zero() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let grid = TimeGrid::from_duration(PI, 1_000).unwrap();
        let frame = eigen_frame(&spec, &grid, None).unwrap();
        assert_eq!(berry_phase(&spec, &frame, 0).unwrap(), 0.0);
    }

    #[test]
    fn berry_phase_product_form_is_rephasing_invariant() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let grid = TimeGrid::from_duration(TAU, 2_000).unwrap();
        let frame = eigen_frame(&spec, &grid, None).unwrap();
        let gamma = berry_phase(&spec, &frame, 0).unwrap();

        // scramble every node phase with a deterministic generator
        let mut seed = 0x2545f4914f6cdd1du64;
        let vectors: Vec<Vec<ComplexState>> = (0..grid.n_nodes())
            .map(|k| {
                (0..2)
                    .map(|n| {
                        seed ^= seed << 13;
                        seed ^= seed >> 7;
                        seed ^= seed << 17;
                        let phase = (seed as f64 / u64::MAX as f64) * TAU;
                        frame.frame.vector(k, n).rephased(phase)
                    })
                    .collect()
            })
            .collect();
        let scrambled = EigenFrame {
            frame: crate::state::FrameTrajectory::new(grid, vectors).unwrap(),
            energies: frame.energies.clone(),
        };
        let gamma2 = berry_phase(&spec, &scrambled, 0).unwrap();
        assert!((gamma - gamma2).abs() < 1e-12, "shift {}", (gamma - gamma2).abs());
    }

    #[test]
    fn berry_phase_refuses_open_loop() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let grid = TimeGrid::from_duration(TAU / 2.0, 500).unwrap();
        let frame = eigen_frame(&spec, &grid, None).unwrap();
        assert!(matches!(
            berry_phase(&spec, &frame, 0),
            Err(Error::OpenParameterLoop { .. })
        ));
    }

    #[test]
    fn phase_report_static_decomposition() {
        let (spec, traj) = static_traj(FRAC_PI_3, 20_000);
        let verdict = check_cyclic(&traj, None).unwrap();
        let report = phase_report(&traj, &spec, &verdict).unwrap();
        assert!(wrap_angle(report.total_phase - PI).abs() < 1e-8);
        assert!((report.dynamical + FRAC_PI_2).abs() < 1e-7);
        assert!((report.aa_phase - FRAC_PI_2).abs() < 1e-6);
        assert!(report.decomposition_residual < 1e-7);
        assert_eq!(report.berry_phase, Some(0.0));
    }

    #[test]
    fn phase_report_adiabatic_gap_scale() {
        // slow drive: |beta - gamma| ~ 0.0117 at omega = 0.01
        let spec = HamiltonianSpec::rotating_spin(1.0, 0.01, FRAC_PI_3).unwrap();
        let oracle = closed_form_phases(&spec, Branch::Plus).unwrap();
        let gap = wrap_angle(
            oracle.aa_phase_unwrapped.unwrap() - oracle.berry_phase_unwrapped.unwrap(),
        )
        .abs();
        assert!((gap - 0.0117368).abs() < 1e-6, "gap {gap}");
    }

    #[test]
    fn pancharatnam_endpoints() {
        let (_, traj) = static_traj(FRAC_PI_3, 10_000);
        let start = pancharatnam_overlap(&traj, 0).unwrap();
        assert!((start - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        let n = traj.grid().steps();
        let end = pancharatnam_overlap(&traj, n).unwrap();
        assert!((end.norm() - 1.0).abs() < 1e-10);
        assert!((end.arg() - FRAC_PI_2).abs() < 1e-6, "arg {}", end.arg());

        let z = CMatrix::zeros(2);
        let zero = HamiltonianSpec::custom(
            CustomSpec::new(vec![(0.0, z.clone()), (10.0, z)]).unwrap(),
        );
        let s = ComplexState::normalized(vec![
            Complex64::new(0.8, 0.0),
            Complex64::new(0.6, 0.0),
        ])
        .unwrap();
        let grid = TimeGrid::from_duration(4.0, 64).unwrap();
        let stationary = propagate(&zero, &s, &grid).unwrap();
        for k in [0, 17, 64] {
            let z = pancharatnam_overlap(&stationary, k).unwrap();
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn decomposition_identity_across_models() {
        // phi, beta, D come from three different code paths; the wrapped
        // combination must vanish to quadrature accuracy
        let cases: Vec<(HamiltonianSpec, f64, usize)> = vec![
            (HamiltonianSpec::static_spin(1.0, 2.0).unwrap(), PI, 20_000),
            (
                HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap(),
                TAU,
                40_000,
            ),
            (
                HamiltonianSpec::rotating_spin(1.0, 10.0, FRAC_PI_2).unwrap(),
                TAU / 10.0,
                40_000,
            ),
        ];
        for (spec, t_end, steps) in cases {
            let initial = frame_row(&spec, Branch::Plus, 0.0).unwrap();
            let grid = TimeGrid::from_duration(t_end, steps).unwrap();
            let traj = propagate(&spec, &initial, &grid).unwrap();
            let verdict = check_cyclic(&traj, None).unwrap();
            let report = phase_report(&traj, &spec, &verdict).unwrap();
            assert!(
                report.decomposition_residual <= 1e-7,
                "{}: residual {:.3e}",
                spec.id(),
                report.decomposition_residual
            );
        }
    }

    #[test]
    fn analytic_solution_matches_propagation() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let initial = analytic_solution(&spec, Branch::Plus, 0.0).unwrap();
        let grid = TimeGrid::from_duration(TAU, 40_000).unwrap();
        let traj = propagate(&spec, &initial, &grid).unwrap();
        for (k, t) in grid.nodes().enumerate().step_by(4321) {
            let exact = analytic_solution(&spec, Branch::Plus, t).unwrap();
            assert!(traj.state(k).max_componentwise_distance(&exact) < 1e-7);
        }
    }
}
