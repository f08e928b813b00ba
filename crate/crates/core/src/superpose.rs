//! Superposition experiments: linearity of the Schroedinger flow, the
//! failure of superposition for parallel-transported representatives, the
//! endpoint interference observable, resonance of two-branch superpositions,
//! and the pointwise-vs-integrated adiabatic interference conditions.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{central_difference_residual, parallel_transport_representative};
use crate::hamiltonian::{diagonalizing_tilt, energy_tracks, HamiltonianSpec};
use crate::state::{inner_product, raw_inner, ComplexState, TimeGrid, Trajectory};

/// Coefficients of a two-branch superposition; |c1|^2 + |c2|^2 = 1.
#[derive(Debug, Clone, Copy)]
pub struct SuperpositionSpec {
    pub c1: Complex64,
    pub c2: Complex64,
}

impl SuperpositionSpec {
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm_sq = c1.norm_sqr() + c2.norm_sqr();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: format!("|c1|^2 + |c2|^2 = {norm_sq}, must be 1"),
            });
        }
        Ok(Self { c1, c2 })
    }

    /// Real mixing angle: (cos(Theta/2), sin(Theta/2)).
    pub fn mixing_angle(theta: f64) -> Self {
        Self {
            c1: Complex64::new((theta / 2.0).cos(), 0.0),
            c2: Complex64::new((theta / 2.0).sin(), 0.0),
        }
    }
}

/// Nodewise c1 psi1 + c2 psi2 with no renormalization; the unit norm is
/// asserted instead, because constituents that start orthogonal and share
/// one unitary evolution stay orthogonal.
pub fn superpose(
    t1: &Trajectory,
    t2: &Trajectory,
    spec: &SuperpositionSpec,
) -> Result<Trajectory> {
    t1.compatible_with(t2)?;
    let initial_overlap = inner_product(t1.first(), t2.first())?.norm();
    if initial_overlap > 1e-9 {
        return Err(Error::InvalidParameter {
            name: "constituents",
            reason: format!(
                "must be orthogonal at t_start (overlap magnitude {initial_overlap:.3e})"
            ),
        });
    }
    let states = t1
        .states()
        .iter()
        .zip(t2.states())
        .map(|(a, b)| {
            let raw: Vec<Complex64> = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| spec.c1 * x + spec.c2 * y)
                .collect();
            ComplexState::try_unit(raw, 1e-9)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(*t1.grid(), states, t1.spec_id().map(str::to_owned))
}

/// Max central-difference residual of the linear equation i d/dt psi = H psi.
pub fn linear_residual(traj: &Trajectory, spec: &HamiltonianSpec) -> Result<f64> {
    central_difference_residual(traj, spec, false)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonlinearSuperpositionReport {
    /// max over nodes of |<psi1|H|psi1> - <psi2|H|psi2>|.
    pub condition_gap: f64,
    /// Ray-transverse defect of the nonlinear equation on the superposed
    /// representative (see [`ray_residual`]).
    pub residual: f64,
}

/// Superpose the parallel-transported representatives of two solutions and
/// measure how far the result is from solving the norm-preserving nonlinear
/// equation.
///
/// Equal expectation values <psi_1|H|psi_1> = <psi_2|H|psi_2> at every time
/// are necessary for the superposed representative to track a solution ray;
/// the returned residual vanishes (to grid error) exactly in that case and
/// grows linearly with the gap otherwise.
pub fn nonlinear_superposition_test(
    t1: &Trajectory,
    t2: &Trajectory,
    s: &SuperpositionSpec,
    spec: &HamiltonianSpec,
) -> Result<NonlinearSuperpositionReport> {
    t1.compatible_with(t2)?;
    let grid = t1.grid();
    let mut condition_gap: f64 = 0.0;
    for (k, t) in grid.nodes().enumerate() {
        let h = spec.evaluate(t)?;
        let e1 = raw_inner(t1.state(k).amplitudes(), &h.mul_vec(t1.state(k).amplitudes())).re;
        let e2 = raw_inner(t2.state(k).amplitudes(), &h.mul_vec(t2.state(k).amplitudes())).re;
        condition_gap = condition_gap.max((e1 - e2).abs());
    }

    let bar1 = parallel_transport_representative(t1)?;
    let bar2 = parallel_transport_representative(t2)?;
    let superposed = superpose(&bar1, &bar2, s)?;
    let residual = ray_residual(&superposed, spec)?;
    Ok(NonlinearSuperpositionReport {
        condition_gap,
        residual,
    })
}

/// Central-difference defect of i d/dt psi = [H - <psi|H|psi>] psi measured
/// transverse to the state ray: the component of the defect along psi itself
/// is a pure global phase rate, which the constant-rescaling symmetry of the
/// equation makes unobservable, so only the transverse part signals a broken
/// superposition.
pub fn ray_residual(traj: &Trajectory, spec: &HamiltonianSpec) -> Result<f64> {
    let grid = traj.grid();
    if grid.n_nodes() < 3 {
        return Err(Error::TooFewNodes {
            nodes: grid.n_nodes(),
            needed: 3,
        });
    }
    let dt = grid.dt();
    let i_unit = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for k in 1..grid.steps() {
        let h = spec.evaluate(grid.node(k))?;
        let psi = traj.state(k).amplitudes();
        let prev = traj.state(k - 1).amplitudes();
        let next = traj.state(k + 1).amplitudes();
        let h_psi = h.mul_vec(psi);
        let norm_sq: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        let expectation = raw_inner(psi, &h_psi).re / norm_sq;
        let defect: Vec<Complex64> = (0..psi.len())
            .map(|i| {
                let deriv = i_unit * (next[i] - prev[i]) / (2.0 * dt);
                deriv - (h_psi[i] - expectation * psi[i])
            })
            .collect();
        let along = raw_inner(psi, &defect) / norm_sq;
        let transverse_sq: f64 = defect
            .iter()
            .zip(psi)
            .map(|(r, p)| (r - along * p).norm_sqr())
            .sum();
        worst = worst.max(transverse_sq.sqrt());
    }
    Ok(worst)
}

/// ||a + b||^2, which for unit states equals 2 + 2 Re<a|b>.
pub fn interference_intensity(a: &ComplexState, b: &ComplexState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x + y).norm_sqr())
        .sum())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResonanceReport {
    /// Distance of T omega / 2 pi from the nearest integer.
    pub n_residual: f64,
    /// Distance of T (2 mu_b cos(alpha) + omega cos(theta - alpha)) / 2 pi
    /// from the nearest integer.
    pub m_residual: f64,
}

impl ResonanceReport {
    /// Both residuals inside tolerance: a two-branch superposition over T is
    /// cyclic up to a phase exactly then.
    pub fn is_resonant(&self, tol: f64) -> bool {
        self.n_residual < tol && self.m_residual < tol
    }
}

/// Evaluate the two integer conditions controlling cyclicity of a two-branch
/// superposition of the rotating family over a window T.
pub fn resonance_check(spec: &HamiltonianSpec, window: f64) -> Result<ResonanceReport> {
    let (mu_b, omega, theta) = match (spec.mu_b(), spec.omega(), spec.theta()) {
        (Some(mu_b), Some(omega), Some(theta)) => (mu_b, omega, theta),
        _ => {
            return Err(Error::NoClosedFormOracle {
                family: spec.family().to_string(),
            })
        }
    };
    if !(window > 0.0) {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("must be positive (got {window})"),
        });
    }
    let alpha = diagonalizing_tilt(mu_b, omega, theta)?;
    let n_value = window * omega / std::f64::consts::TAU;
    let m_value =
        window * (2.0 * mu_b * alpha.cos() + omega * (theta - alpha).cos()) / std::f64::consts::TAU;
    Ok(ResonanceReport {
        n_residual: (n_value - n_value.round()).abs(),
        m_residual: (m_value - m_value.round()).abs(),
    })
}

/// Solve for the field strength putting the rotating family exactly on the
/// m-th resonance at its natural period (n = 1): bisection on the monotone
/// branch-splitting 2 mu_b cos(alpha) + omega cos(theta - alpha) = m omega.
pub fn resonant_mu_b(omega: f64, theta: f64, m: u32) -> Result<f64> {
    let target = m as f64 * omega;
    let split = |mu_b: f64| -> Result<f64> {
        let alpha = diagonalizing_tilt(mu_b, omega, theta)?;
        Ok(2.0 * mu_b * alpha.cos() + omega * (theta - alpha).cos())
    };
    let mut lo = 1e-9 * omega;
    let mut hi = omega.max(1.0);
    while split(hi)? < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParameter {
                name: "m",
                reason: "resonance target unreachable".into(),
            });
        }
    }
    if split(lo)? > target {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("splitting exceeds target {target} already at mu_b -> 0"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if split(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdiabaticConditions {
    /// max over nodes |E_a(t) - E_b(t)|.
    pub pointwise_gap: f64,
    /// |int E_a dt - int E_b dt| over the grid.
    pub integrated_gap: f64,
    /// The stronger requirement: energies agree at every time.
    pub pointwise_holds: bool,
    /// The weaker requirement: only the accumulated dynamical phases agree.
    pub integrated_holds: bool,
}

/// Compare two eigenvalue tracks pointwise and in integral.
///
/// Pointwise equality is sufficient for interference between the two
/// adiabatic branches to show the geometric phase alone; equal integrated
/// energies are already enough. Tracks are continued through exact crossings
/// by eigenvector overlap.
pub fn adiabatic_interference_conditions(
    spec: &HamiltonianSpec,
    grid: &TimeGrid,
    track_a: usize,
    track_b: usize,
    tol: f64,
) -> Result<AdiabaticConditions> {
    let tracks = energy_tracks(spec, grid)?;
    if track_a >= tracks.len() || track_b >= tracks.len() {
        return Err(Error::InvalidParameter {
            name: "track",
            reason: format!(
                "track indices ({track_a}, {track_b}) out of range for {} tracks",
                tracks.len()
            ),
        });
    }
    let ea = &tracks[track_a];
    let eb = &tracks[track_b];
    let pointwise_gap = ea
        .iter()
        .zip(eb)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let dt = grid.dt();
    let trapz = |track: &[f64]| -> f64 {
        let inner: f64 = track[1..track.len() - 1].iter().sum();
        dt * (inner + 0.5 * (track[0] + track[track.len() - 1]))
    };
    let integrated_gap = (trapz(ea) - trapz(eb)).abs();
    Ok(AdiabaticConditions {
        pointwise_gap,
        integrated_gap,
        pointwise_holds: pointwise_gap <= tol,
        integrated_holds: integrated_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{analytic_solution, frame_row, Branch, CustomSpec};
    use crate::linalg::CMatrix;
    use crate::propagator::{check_cyclic, propagate};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

    fn branch_pair(spec: &HamiltonianSpec, t_end: f64, steps: usize) -> (Trajectory, Trajectory) {
        let grid = TimeGrid::from_duration(t_end, steps).unwrap();
        let plus = propagate(spec, &frame_row(spec, Branch::Plus, 0.0).unwrap(), &grid).unwrap();
        let minus =
            propagate(spec, &frame_row(spec, Branch::Minus, 0.0).unwrap(), &grid).unwrap();
        (plus, minus)
    }

    #[test]
    fn trivial_coefficients_return_first_branch() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, PI, 500);
        let s = SuperpositionSpec::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let out = superpose(&plus, &minus, &s).unwrap();
        for (a, b) in out.states().iter().zip(plus.states()) {
            assert_eq!(a.max_componentwise_distance(b), 0.0);
        }
    }

    #[test]
    fn superposition_norm_is_automatic() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, PI, 5_000);
        let s = SuperpositionSpec::mixing_angle(1.1);
        let out = superpose(&plus, &minus, &s).unwrap();
        for state in out.states() {
            assert!((state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn superposition_rejects_non_orthogonal_constituents() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, _) = branch_pair(&spec, PI, 200);
        let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
        assert!(superpose(&plus, &plus, &s).is_err());
    }

    #[test]
    fn linearity_of_the_flow() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, TAU, 20_000);
        let r1 = linear_residual(&plus, &spec).unwrap();
        let r2 = linear_residual(&minus, &spec).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "branch residuals {r1:.3e}, {r2:.3e}");
        let s = SuperpositionSpec::mixing_angle(0.9);
        let sum = superpose(&plus, &minus, &s).unwrap();
        let rs = linear_residual(&sum, &spec).unwrap();
        assert!(rs <= r1.max(r2) + 1e-12, "superposition residual {rs:.3e}");
    }

    #[test]
    fn time_dependent_rephasing_breaks_the_linear_equation() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, _) = branch_pair(&spec, PI, 5_000);
        let grid = *plus.grid();
        let states: Vec<ComplexState> = grid
            .nodes()
            .zip(plus.states())
            .map(|(t, s)| s.rephased((TAU * t / grid.duration()).sin()))
            .collect();
        let wiggled = Trajectory::new(grid, states, None).unwrap();
        let res = linear_residual(&wiggled, &spec).unwrap();
        let expect = TAU / grid.duration(); // max |d/dt alpha|
        assert!(
            (res - expect).abs() < 0.05 * expect,
            "residual {res} vs rate {expect}"
        );
    }

    #[test]
    fn nonlinear_dichotomy_static_family() {
        // theta = pi/3: expectations differ by 2 mu_b cos(theta) = 1
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, PI, 20_000);
        let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
        let report = nonlinear_superposition_test(&plus, &minus, &s, &spec).unwrap();
        assert!((report.condition_gap - 1.0).abs() < 1e-9);
        assert!(report.residual >= 1e-3, "residual {:.3e}", report.residual);
        // transverse defect is gap * |c1 c2| for this family
        assert!((report.residual - 0.5).abs() < 1e-3);

        // theta = pi/2: both expectations vanish, superposition survives
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_2).unwrap();
        let (plus, minus) = branch_pair(&spec, PI, 20_000);
        let report = nonlinear_superposition_test(&plus, &minus, &s, &spec).unwrap();
        assert!(report.condition_gap < 1e-12);
        assert!(report.residual <= 1e-5, "residual {:.3e}", report.residual);
    }

    #[test]
    fn single_branch_representative_always_solves() {
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, PI, 20_000);
        let s = SuperpositionSpec::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let report = nonlinear_superposition_test(&plus, &minus, &s, &spec).unwrap();
        assert!(report.residual < 1e-6, "residual {:.3e}", report.residual);
    }

    #[test]
    fn dichotomy_is_monotone_in_the_gap() {
        // Spearman rank correlation across a theta sweep
        let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
        let mut points = Vec::new();
        for i in 1..=9 {
            let theta = FRAC_PI_2 * i as f64 / 9.0;
            let spec = HamiltonianSpec::static_spin(1.0, theta).unwrap();
            let (plus, minus) = branch_pair(&spec, PI, 4_000);
            let report = nonlinear_superposition_test(&plus, &minus, &s, &spec).unwrap();
            points.push((report.condition_gap, report.residual));
        }
        let spearman = spearman(&points);
        assert!(spearman > 0.95, "Spearman {spearman}: {points:?}");
    }

    fn spearman(points: &[(f64, f64)]) -> f64 {
        let rank = |values: Vec<f64>| -> Vec<f64> {
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            let mut ranks = vec![0.0; values.len()];
            for (r, &i) in order.iter().enumerate() {
                ranks[i] = r as f64;
            }
            ranks
        };
        let xr = rank(points.iter().map(|p| p.0).collect());
        let yr = rank(points.iter().map(|p| p.1).collect());
        let n = points.len() as f64;
        let mean = (n - 1.0) / 2.0;
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for (x, y) in xr.iter().zip(&yr) {
            num += (x - mean) * (y - mean);
            dx += (x - mean).powi(2);
            dy += (y - mean).powi(2);
        }
        num / (dx * dy).sqrt()
    }

    #[test]
    fn interference_limits_and_cyclic_consistency() {
        let a = ComplexState::normalized(vec![
            Complex64::new(0.6, 0.2),
            Complex64::new(-0.3, 0.7),
        ])
        .unwrap();
        assert!((interference_intensity(&a, &a).unwrap() - 4.0).abs() < 1e-12);
        let b = a.rephased(PI);
        assert!(interference_intensity(&a, &b).unwrap() < 1e-12);

        // endpoint interference of a cyclic trajectory equals 2 + 2 cos(phi)
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let grid = TimeGrid::from_duration(TAU, 40_000).unwrap();
        let traj = propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0).unwrap(), &grid).unwrap();
        let verdict = check_cyclic(&traj, None).unwrap();
        let measured = interference_intensity(traj.first(), traj.last()).unwrap();
        let predicted = 2.0 + 2.0 * verdict.total_phase.unwrap().cos();
        assert!((measured - predicted).abs() < 1e-8);
        assert!((measured - 2.8841).abs() < 1e-3);
    }

    #[test]
    fn static_endpoint_interference_vanishes_for_every_tilt() {
        for theta in [0.0, FRAC_PI_3, 1.9, PI] {
            let spec = HamiltonianSpec::static_spin(1.0, theta).unwrap();
            let grid = TimeGrid::from_duration(PI, 2_000).unwrap();
            let traj =
                propagate(&spec, &frame_row(&spec, Branch::Plus, 0.0).unwrap(), &grid).unwrap();
            let intensity = interference_intensity(traj.first(), traj.last()).unwrap();
            assert!(intensity < 1e-10, "theta {theta}: intensity {intensity:.3e}");
        }
    }

    #[test]
    fn resonance_generic_point_value() {
        // (mu_b, omega, theta) = (1, 1, pi/3): branch splitting is sqrt(7),
        // so the m-condition misses the nearest integer by 3 - sqrt(7)
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let report = resonance_check(&spec, TAU).unwrap();
        assert!(report.n_residual < 1e-12);
        assert!((report.m_residual - (3.0 - 7f64.sqrt())).abs() < 1e-12);
        assert!(!report.is_resonant(1e-3));
    }

    #[test]
    fn constructed_resonance_makes_superposition_cyclic() {
        let (omega, theta) = (1.0, FRAC_PI_3);
        let mu_b = resonant_mu_b(omega, theta, 3).unwrap();
        let spec = HamiltonianSpec::rotating_spin(mu_b, omega, theta).unwrap();
        let report = resonance_check(&spec, TAU).unwrap();
        assert!(report.is_resonant(1e-9), "{report:?}");

        let (plus, minus) = branch_pair(&spec, TAU, 40_000);
        let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
        let sum = superpose(&plus, &minus, &s).unwrap();
        let verdict = check_cyclic(&sum, None).unwrap();
        assert!(verdict.is_cyclic, "overlap {}", verdict.overlap_magnitude);
        assert!(verdict.overlap_magnitude >= 1.0 - 1e-6);
    }

    #[test]
    fn generic_superposition_is_not_cyclic() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, TAU, 10_000);
        let s = SuperpositionSpec::mixing_angle(FRAC_PI_2);
        let sum = superpose(&plus, &minus, &s).unwrap();
        let verdict = check_cyclic(&sum, None).unwrap();
        assert!(!verdict.is_cyclic);
        assert!(verdict.overlap_magnitude < 1.0 - 1e-3);
        // |overlap| = |cos(pi m_value)| for equal weights
        let m_res = resonance_check(&spec, TAU).unwrap().m_residual;
        assert!((verdict.overlap_magnitude - (PI * m_res).cos().abs()) < 1e-6);
    }

    #[test]
    fn single_branch_is_cyclic_regardless_of_resonance() {
        let spec = HamiltonianSpec::rotating_spin(1.0, 1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, TAU, 10_000);
        let s = SuperpositionSpec::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let sum = superpose(&plus, &minus, &s).unwrap();
        let verdict = check_cyclic(&sum, None).unwrap();
        assert!(verdict.is_cyclic);
    }

    #[test]
    fn adiabatic_conditions_static_and_crossing() {
        // static: pointwise gap 2 mu_b, integrated gap 2 mu_b T, neither holds
        let spec = HamiltonianSpec::static_spin(1.0, FRAC_PI_3).unwrap();
        let grid = TimeGrid::from_duration(PI, 2_000).unwrap();
        let c = adiabatic_interference_conditions(&spec, &grid, 0, 1, 1e-8).unwrap();
        assert!((c.pointwise_gap - 2.0).abs() < 1e-12);
        assert!((c.integrated_gap - 2.0 * PI).abs() < 1e-9);
        assert!(!c.pointwise_holds && !c.integrated_holds);

        // antisymmetric crossing pair: E_a = -E_b = sin(2 pi t / T)
        let m = |x: f64| {
            CMatrix::from_rows(vec![
                vec![Complex64::new(x, 0.0), Complex64::new(0.0, 0.0)],
                vec![Complex64::new(0.0, 0.0), Complex64::new(-x, 0.0)],
            ])
            .unwrap()
        };
        let samples: Vec<(f64, CMatrix)> = (0..=400)
            .map(|k| {
                let t = k as f64 / 400.0;
                (t, m((TAU * t).sin()))
            })
            .collect();
        let spec = HamiltonianSpec::custom(CustomSpec::new(samples).unwrap());
        let grid = TimeGrid::from_duration(1.0, 400).unwrap();
        let c = adiabatic_interference_conditions(&spec, &grid, 0, 1, 1e-8).unwrap();
        assert!((c.pointwise_gap - 2.0).abs() < 1e-9, "pointwise {}", c.pointwise_gap);
        assert!(c.integrated_gap < 1e-9, "integrated {}", c.integrated_gap);
        assert!(!c.pointwise_holds && c.integrated_holds);

        // degenerate doublet: both gaps zero
        let flat = CMatrix::from_rows(vec![
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.7, 0.0)],
        ])
        .unwrap();
        let spec = HamiltonianSpec::custom(
            CustomSpec::new(vec![(0.0, flat.clone()), (1.0, flat)]).unwrap(),
        );
        let c = adiabatic_interference_conditions(&spec, &grid, 0, 1, 1e-8).unwrap();
        assert!(c.pointwise_gap < 1e-12 && c.integrated_gap < 1e-12);
        assert!(c.pointwise_holds && c.integrated_holds);
    }

    #[test]
    fn rotating_superposition_solves_linear_equation() {
        let mu_b = resonant_mu_b(1.0, FRAC_PI_3, 2).unwrap();
        let spec = HamiltonianSpec::rotating_spin(mu_b, 1.0, FRAC_PI_3).unwrap();
        let (plus, minus) = branch_pair(&spec, TAU, 20_000);
        // sanity: the branches themselves match the closed forms
        for (traj, branch) in [(&plus, Branch::Plus), (&minus, Branch::Minus)] {
            let exact = analytic_solution(&spec, branch, TAU).unwrap();
            assert!(traj.last().max_componentwise_distance(&exact) < 1e-6);
        }
        let s = SuperpositionSpec::mixing_angle(1.3);
        let sum = superpose(&plus, &minus, &s).unwrap();
        assert!(linear_residual(&sum, &spec).unwrap() < 1e-6);
    }
}
