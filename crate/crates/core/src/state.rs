//! Elementary complex-vector states, time grids, and the trajectory/frame
//! containers shared by every other module.
//!
//! Conventions (fixed once, used everywhere): hbar = 1, all phases in
//! radians, principal value in (-pi, pi].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Threshold below which a pairwise overlap carries no usable phase.
pub const OVERLAP_FLOOR: f64 = 1e-12;

/// Wrap an angle to the principal branch (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = x.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Unit-norm complex vector of dimension d >= 2.
///
/// Houses every state-like object in the crate: Schroedinger amplitudes,
/// periodic representatives, parallel-transport representatives, and the
/// individual rows of moving frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexState {
    amplitudes: Vec<Complex64>,
}

impl ComplexState {
    /// Build a state from raw amplitudes, rescaling to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: amplitudes.len(),
            });
        }
        let norm = norm_of(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { amplitudes })
    }

    /// Accept amplitudes that are already unit-norm within `tolerance`,
    /// without rescaling. Used where the norm itself is part of a contract
    /// (e.g. superpositions of orthogonal solutions).
    pub fn try_unit(amplitudes: Vec<Complex64>, tolerance: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: amplitudes.len(),
            });
        }
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::NormDrift { norm, tolerance });
        }
        Ok(Self { amplitudes })
    }

    /// Internal constructor for vectors that are unit-norm by construction
    /// (unitary images, phase multiples, orthonormalization outputs).
    pub(crate) fn unit_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// The state multiplied by the unit phase e^{i phase}.
    pub fn rephased(&self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Euclidean distance max_k |a_k - b_k| (componentwise).
    pub fn max_componentwise_distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Hermitian pairing sum_k conj(a_k) b_k.
pub fn inner_product(a: &ComplexState, b: &ComplexState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(raw_inner(a.amplitudes(), b.amplitudes()))
}

pub(crate) fn raw_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_of(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative phase arg<a|b> in (-pi, pi].
///
/// Refuses when the overlap magnitude is at or below [`OVERLAP_FLOOR`]:
/// a near-orthogonal pair has no well-defined relative phase.
pub fn arg_overlap(a: &ComplexState, b: &ComplexState) -> Result<f64> {
    let ov = inner_product(a, b)?;
    let magnitude = ov.norm();
    if magnitude <= OVERLAP_FLOOR {
        return Err(Error::VanishingOverlap { magnitude });
    }
    Ok(ov.arg())
}

/// Polarization vector (<sigma_x>, <sigma_y>, <sigma_z>) of a two-level state.
///
/// Invariant under any rephasing of the state, which is exactly why the
/// polarization measurement cannot see the difference between conventional
/// and time-dependently rephased representatives.
pub fn bloch_vector(s: &ComplexState) -> Result<[f64; 3]> {
    if s.dim() != 2 {
        return Err(Error::NotTwoLevel { dim: s.dim() });
    }
    let a = s.amplitudes()[0];
    let b = s.amplitudes()[1];
    let cross = a.conj() * b;
    Ok([2.0 * cross.re, 2.0 * cross.im, a.norm_sqr() - b.norm_sqr()])
}

/// Uniform partition of [t_start, t_end] into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidGrid {
                reason: format!("need t_end > t_start (got [{t_start}, {t_end}])"),
            });
        }
        if steps < 2 {
            return Err(Error::InvalidGrid {
                reason: format!("need at least 2 steps (got {steps})"),
            });
        }
        Ok(Self {
            t_start,
            t_end,
            steps,
        })
    }

    /// Grid over [0, t_end].
    pub fn from_duration(t_end: f64, steps: usize) -> Result<Self> {
        Self::new(0.0, t_end, steps)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.duration() / self.steps as f64
    }

    /// Node t_k = t_start + k (t_end - t_start) / N, k = 0..=N.
    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        self.t_start + (k as f64) * self.dt()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.node(k))
    }

    pub fn n_nodes(&self) -> usize {
        self.steps + 1
    }
}

/// One state per grid node, with the identifier of the generating model.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<ComplexState>,
    spec_id: Option<String>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<ComplexState>, spec_id: Option<String>) -> Result<Self> {
        if states.len() != grid.n_nodes() {
            return Err(Error::InvalidGrid {
                reason: format!(
                    "trajectory holds {} states for a grid with {} nodes",
                    states.len(),
                    grid.n_nodes()
                ),
            });
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.dim(),
            });
        }
        Ok(Self {
            grid,
            states,
            spec_id,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[ComplexState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &ComplexState {
        &self.states[k]
    }

    pub fn first(&self) -> &ComplexState {
        &self.states[0]
    }

    pub fn last(&self) -> &ComplexState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn spec_id(&self) -> Option<&str> {
        self.spec_id.as_deref()
    }

    /// Same grid and dimension check used by pairwise operations.
    pub fn compatible_with(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// d orthonormal states per grid node: a moving basis of the whole space.
///
/// `vectors[k][n]` is basis row n at node k.
#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    grid: TimeGrid,
    vectors: Vec<Vec<ComplexState>>,
}

impl FrameTrajectory {
    /// Orthonormality is enforced at construction: max |<w_n|w_m> - delta_nm|
    /// over every node must stay below 1e-12.
    pub fn new(grid: TimeGrid, vectors: Vec<Vec<ComplexState>>) -> Result<Self> {
        if vectors.len() != grid.n_nodes() {
            return Err(Error::InvalidGrid {
                reason: format!(
                    "frame holds {} nodes for a grid with {}",
                    vectors.len(),
                    grid.n_nodes()
                ),
            });
        }
        let d = vectors[0].len();
        for node in &vectors {
            if node.len() != d || node.iter().any(|v| v.dim() != d) {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: node.len(),
                });
            }
        }
        let frame = Self { grid, vectors };
        let err = frame.orthonormality_error();
        if err > 1e-12 {
            return Err(Error::InvalidGrid {
                reason: format!("frame rows not orthonormal (deviation {err:.3e})"),
            });
        }
        Ok(frame)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn node(&self, k: usize) -> &[ComplexState] {
        &self.vectors[k]
    }

    pub fn vector(&self, k: usize, row: usize) -> &ComplexState {
        &self.vectors[k][row]
    }

    /// All nodes of one row, in time order.
    pub fn track(&self, row: usize) -> impl Iterator<Item = &ComplexState> + '_ {
        self.vectors.iter().map(move |node| &node[row])
    }

    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for node in &self.vectors {
            for n in 0..d {
                for m in n..d {
                    let ov = raw_inner(node[n].amplitudes(), node[m].amplitudes());
                    let target = if n == m { 1.0 } else { 0.0 };
                    worst = worst.max((ov - target).norm());
                }
            }
        }
        worst
    }

    /// Max componentwise distance between the first and last node, rowwise.
    pub fn periodicity_error(&self) -> f64 {
        let first = &self.vectors[0];
        let last = self.vectors.last().expect("frame is never empty");
        first
            .iter()
            .zip(last)
            .map(|(a, b)| a.max_componentwise_distance(b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalized_rescales_and_checks_dimension() {
        let s = ComplexState::normalized(vec![c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!(ComplexState::normalized(vec![c(1.0, 0.0)]).is_err());
        assert!(ComplexState::normalized(vec![c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn inner_product_identity_and_orthogonality() {
        let e0 = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e1 = ComplexState::normalized(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(inner_product(&e0, &e0).unwrap(), c(1.0, 0.0));
        assert_eq!(inner_product(&e0, &e1).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_product_conjugate_symmetry() {
        let a = ComplexState::normalized(vec![c(0.3, 0.4), c(-0.2, 0.7)]).unwrap();
        let b = ComplexState::normalized(vec![c(0.1, -0.9), c(0.5, 0.2)]).unwrap();
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-15);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let a = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(
            inner_product(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    // Eigenvector columns of the general two-level parameterization are
    // orthonormal by construction.
    #[test]
    fn general_basis_columns_orthogonal() {
        let theta = FRAC_PI_3;
        let phi = 0.0;
        let v_plus = ComplexState::normalized(vec![
            Complex64::from_polar((theta / 2.0).cos(), -phi),
            c((theta / 2.0).sin(), 0.0),
        ])
        .unwrap();
        let v_minus = ComplexState::normalized(vec![
            Complex64::from_polar((theta / 2.0).sin(), -phi),
            c(-(theta / 2.0).cos(), 0.0),
        ])
        .unwrap();
        assert!(inner_product(&v_plus, &v_minus).unwrap().norm() < 1e-15);
    }

    #[test]
    fn bloch_vector_poles_and_tilted() {
        let north = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(bloch_vector(&north).unwrap(), [0.0, 0.0, 1.0]);

        let theta = FRAC_PI_3;
        let phi = FRAC_PI_4;
        let v_plus = ComplexState::normalized(vec![
            Complex64::from_polar((theta / 2.0).cos(), -phi),
            c((theta / 2.0).sin(), 0.0),
        ])
        .unwrap();
        let n = bloch_vector(&v_plus).unwrap();
        let expect = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        for (got, want) in n.iter().zip(expect) {
            assert!((got - want).abs() < 1e-14, "got {got}, want {want}");
        }
        let v_minus = ComplexState::normalized(vec![
            Complex64::from_polar((theta / 2.0).sin(), -phi),
            c(-(theta / 2.0).cos(), 0.0),
        ])
        .unwrap();
        let m = bloch_vector(&v_minus).unwrap();
        for (got, want) in m.iter().zip(expect) {
            assert!((got + want).abs() < 1e-14);
        }
        // unit Euclidean norm
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bloch_vector_requires_two_levels() {
        let s = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(bloch_vector(&s), Err(Error::NotTwoLevel { dim: 3 })));
    }

    #[test]
    fn arg_overlap_cases() {
        let a = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = a.rephased(PI / 4.0);
        assert!((arg_overlap(&a, &b).unwrap() - PI / 4.0).abs() < 1e-15);
        assert_eq!(arg_overlap(&a, &a).unwrap(), 0.0);

        // (1+i)/sqrt(2) carries phase pi/4
        let d = ComplexState::normalized(vec![c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!((arg_overlap(&a, &d).unwrap() - PI / 4.0).abs() < 1e-15);

        let e1 = ComplexState::normalized(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            arg_overlap(&a, &e1),
            Err(Error::VanishingOverlap { .. })
        ));
    }

    #[test]
    fn wrap_angle_principal_branch() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(2.0 * PI)).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn grid_nodes_uniform_and_increasing() {
        let g = TimeGrid::new(0.0, PI, 1000).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes.len(), 1001);
        assert_eq!(nodes[0], 0.0);
        assert!((nodes[1000] - PI).abs() < 1e-14);
        let dt = g.dt();
        for w in nodes.windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) - dt).abs() < 1e-14 * PI);
        }
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn trajectory_length_must_match_grid() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let s = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(Trajectory::new(g, vec![s.clone(); 3], None).is_ok());
        assert!(Trajectory::new(g, vec![s; 2], None).is_err());
    }

    #[test]
    fn frame_rejects_non_orthonormal_rows() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let e0 = ComplexState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e1 = ComplexState::normalized(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let ok = FrameTrajectory::new(g, vec![vec![e0.clone(), e1.clone()]; 3]);
        assert!(ok.is_ok());
        let bad = FrameTrajectory::new(g, vec![vec![e0.clone(), e0.clone()]; 3]);
        assert!(bad.is_err());
    }
}
