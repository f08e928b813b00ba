//! Periodic comoving frames: a moving orthonormal basis whose first row is
//! the cyclic representative of a trajectory, the effective generator seen
//! from that frame, and the amplitude reconstruction that inverts it.
//!
//! Row 0 of a built frame is e^{-i phi t / T} psi(t) and is fixed by the
//! trajectory; the remaining rows are one admissible smooth periodic
//! completion of the orthogonal complement. Holonomy of row 0 is
//! completion-independent, rows >= 1 are not (their wrapped holonomy is).

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::linalg::{unitary_eig, CMatrix};
use crate::phase::connection_integral;
use crate::propagator::CyclicityVerdict;
use crate::state::{norm_of, raw_inner, ComplexState, FrameTrajectory, TimeGrid, Trajectory};

/// Per-node matrix of the generator expressed in a moving frame:
/// Heff_nm(t_k) = <w_n|H|w_m> - <w_n| i d/dt w_m>.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonianTrack {
    grid: TimeGrid,
    matrices: Vec<CMatrix>,
}

impl EffectiveHamiltonianTrack {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// Largest off-diagonal magnitude over every node.
    pub fn max_offdiagonal(&self) -> f64 {
        let d = self.matrices[0].dim();
        let mut worst: f64 = 0.0;
        for m in &self.matrices {
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        worst = worst.max(m[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }

    /// Real diagonal entry n over the grid.
    pub fn diagonal(&self, n: usize) -> Vec<f64> {
        self.matrices.iter().map(|m| m[(n, n)].re).collect()
    }

    /// Max Hermiticity deviation over interior nodes.
    pub fn max_interior_hermiticity_error(&self) -> f64 {
        self.matrices[1..self.matrices.len().saturating_sub(1)]
            .iter()
            .map(CMatrix::hermiticity_error)
            .fold(0.0, f64::max)
    }
}

/// Build the periodic frame of a cyclic trajectory.
///
/// Row 0 is e^{-i phi (t - t_start) / T} psi(t). The complement starts as the
/// standard basis orthonormalized against row 0, is continued node to node by
/// projecting the previous complement onto the new orthogonal complement
/// (keeping each consecutive overlap real-positive), and the endpoint
/// mismatch is closed by one constant unitary rotation of the complement
/// distributed as exp((t/T) log closure), so every row is periodic.
pub fn build_w_frame(traj: &Trajectory, verdict: &CyclicityVerdict) -> Result<FrameTrajectory> {
    let phi = match verdict.total_phase {
        Some(phi) if verdict.is_cyclic => phi,
        _ => {
            return Err(Error::NotCyclic {
                overlap_magnitude: verdict.overlap_magnitude,
            })
        }
    };
    let grid = *traj.grid();
    let d = traj.dim();
    let duration = grid.duration();
    let n_nodes = grid.n_nodes();

    // Row 0: the periodic representative. Renormalized: the input states
    // carry the propagator's rounding-level norm drift, and frame rows are
    // held to a tighter orthonormality budget than trajectories.
    let row0: Vec<ComplexState> = grid
        .nodes()
        .zip(traj.states())
        .map(|(t, s)| {
            let phase = Complex64::from_polar(1.0, -phi * (t - grid.t_start()) / duration);
            let norm = s.norm();
            ComplexState::unit_unchecked(
                s.amplitudes().iter().map(|a| a * phase / norm).collect(),
            )
        })
        .collect();

    if d == 1 {
        unreachable!("states have dimension >= 2");
    }

    // Complement seed at the first node: standard basis vectors
    // orthonormalized against row 0, most-parallel one dropped.
    let mut complement: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(n_nodes);
    let seed = orthonormal_complement_seed(row0[0].amplitudes(), d);
    complement.push(seed);

    for k in 1..n_nodes {
        let w1 = row0[k].amplitudes();
        let prev = &complement[k - 1];
        let mut node: Vec<Vec<Complex64>> = Vec::with_capacity(d - 1);
        for (slot, prev_vec) in prev.iter().enumerate() {
            // project off row 0 and the complement rows already built here
            let mut v = prev_vec.clone();
            project_out(&mut v, w1);
            for built in &node {
                project_out(&mut v, built);
            }
            let norm = norm_of(&v);
            if norm < 0.5 {
                return Err(Error::FrameContinuationBreakdown {
                    node: k,
                    overlap: norm,
                });
            }
            for x in v.iter_mut() {
                *x /= norm;
            }
            // consecutive overlap real-positive
            let ov = raw_inner(prev_vec, &v);
            if ov.norm() < 0.5 {
                return Err(Error::FrameContinuationBreakdown {
                    node: k,
                    overlap: ov.norm(),
                });
            }
            let phase = ov / ov.norm();
            for x in v.iter_mut() {
                *x *= phase.conj();
            }
            let _ = slot;
            node.push(v);
        }
        complement.push(node);
    }

    // Endpoint closure: a constant unitary rotating the final complement
    // frame onto the initial one, spread uniformly over the loop.
    let m = d - 1;
    let mut closure = CMatrix::zeros(m);
    for n in 0..m {
        for c in 0..m {
            closure[(n, c)] = raw_inner(&complement[n_nodes - 1][n], &complement[0][c]);
        }
    }
    orthonormalize_columns(&mut closure)?;
    let (angles, axes) = unitary_eig(&closure)?;

    let vectors: Vec<Vec<ComplexState>> = (0..n_nodes)
        .map(|k| {
            let frac = (grid.node(k) - grid.t_start()) / duration;
            // A(t) = sum_j e^{i angle_j frac} |axis_j><axis_j|
            let mut node_rows = Vec::with_capacity(d);
            node_rows.push(row0[k].clone());
            for n in 0..m {
                let mut out = vec![Complex64::new(0.0, 0.0); d];
                for (angle, axis) in angles.iter().zip(&axes) {
                    // coefficient of column n in this eigenprojector
                    let coeff = Complex64::from_polar(1.0, angle * frac) * axis[n].conj();
                    for (row_idx, out_x) in out.iter_mut().enumerate() {
                        let mut mixed = Complex64::new(0.0, 0.0);
                        for (mm, axis_m) in axis.iter().enumerate() {
                            mixed += complement[k][mm][row_idx] * axis_m;
                        }
                        *out_x += mixed * coeff;
                    }
                }
                // rounding cleanup only; the rotation is unitary
                let norm = norm_of(&out);
                for x in out.iter_mut() {
                    *x /= norm;
                }
                node_rows.push(ComplexState::unit_unchecked(out));
            }
            node_rows
        })
        .collect();

    FrameTrajectory::new(grid, vectors)
}

fn orthonormal_complement_seed(w1: &[Complex64], d: usize) -> Vec<Vec<Complex64>> {
    let mut seed: Vec<Vec<Complex64>> = Vec::with_capacity(d - 1);
    for j in 0..d {
        if seed.len() == d - 1 {
            break;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[j] = Complex64::new(1.0, 0.0);
        project_out(&mut v, w1);
        for built in &seed {
            project_out(&mut v, built);
        }
        let norm = norm_of(&v);
        if norm < 1e-6 {
            continue; // basis vector nearly parallel to the span so far
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        seed.push(v);
    }
    debug_assert_eq!(seed.len(), d - 1);
    seed
}

fn project_out(v: &mut [Complex64], onto: &[Complex64]) {
    let coeff = raw_inner(onto, v);
    for (x, o) in v.iter_mut().zip(onto) {
        *x -= coeff * o;
    }
}

fn orthonormalize_columns(m: &mut CMatrix) -> Result<()> {
    let d = m.dim();
    for c in 0..d {
        for prev in 0..c {
            let mut coeff = Complex64::new(0.0, 0.0);
            for r in 0..d {
                coeff += m[(r, prev)].conj() * m[(r, c)];
            }
            for r in 0..d {
                let sub = coeff * m[(r, prev)];
                m[(r, c)] -= sub;
            }
        }
        let norm: f64 = (0..d).map(|r| m[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            return Err(Error::Diagonalization {
                reason: "closure matrix is rank-deficient".into(),
            });
        }
        for r in 0..d {
            m[(r, c)] /= norm;
        }
    }
    Ok(())
}

/// Heff_nm(t_k) = <w_n|H(t_k)|w_m> - <w_n| i d/dt w_m>, with the derivative
/// by central differences and periodic wrap-around at the endpoints.
pub fn effective_hamiltonian(
    frame: &FrameTrajectory,
    spec: &HamiltonianSpec,
) -> Result<EffectiveHamiltonianTrack> {
    let grid = *frame.grid();
    let d = frame.dim();
    if spec.dim() != d {
        return Err(Error::DimensionMismatch {
            left: spec.dim(),
            right: d,
        });
    }
    let n = grid.steps();
    let dt = grid.dt();
    let i_unit = Complex64::new(0.0, 1.0);
    let mut matrices = Vec::with_capacity(grid.n_nodes());
    for k in 0..=n {
        let h = spec.evaluate(grid.node(k))?;
        // periodic neighbors: node N is identified with node 0
        let (before, after) = if k == 0 || k == n {
            (n - 1, 1)
        } else {
            (k - 1, k + 1)
        };
        let mut heff = CMatrix::zeros(d);
        for m in 0..d {
            let hw = h.mul_vec(frame.vector(k, m).amplitudes());
            let wa = frame.vector(after, m).amplitudes();
            let wb = frame.vector(before, m).amplitudes();
            let deriv: Vec<Complex64> = wa
                .iter()
                .zip(wb)
                .map(|(a, b)| i_unit * (a - b) / (2.0 * dt))
                .collect();
            for row in 0..d {
                let wn = frame.vector(k, row).amplitudes();
                heff[(row, m)] = raw_inner(wn, &hw) - raw_inner(wn, &deriv);
            }
        }
        matrices.push(heff);
    }
    Ok(EffectiveHamiltonianTrack { grid, matrices })
}

/// Rebuild the amplitude from frame data and the generator alone:
/// psi(t) = w_0(t) exp{-i int_0^t [<w_0|H|w_0> - <w_0| i d/dt w_0>] dt}.
///
/// The expectation part integrates by trapezoid; the connection part
/// accumulates overlap args, so per-node rephasings of the frame shift the
/// result by exactly the constant e^{i alpha_0(t_start)} and nothing else.
pub fn reconstruct_amplitude(
    frame: &FrameTrajectory,
    spec: &HamiltonianSpec,
) -> Result<Trajectory> {
    let grid = *frame.grid();
    if spec.dim() != frame.dim() {
        return Err(Error::DimensionMismatch {
            left: spec.dim(),
            right: frame.dim(),
        });
    }
    let dt = grid.dt();
    let row0: Vec<&ComplexState> = frame.track(0).collect();
    let expectations: Vec<f64> = (0..grid.n_nodes())
        .map(|k| {
            let h = spec.evaluate(grid.node(k))?;
            let w = row0[k].amplitudes();
            Ok(raw_inner(w, &h.mul_vec(w)).re)
        })
        .collect::<Result<_>>()?;

    let mut states = Vec::with_capacity(grid.n_nodes());
    states.push(row0[0].clone());
    let mut accumulated = 0.0;
    for k in 0..grid.steps() {
        let ov = raw_inner(row0[k].amplitudes(), row0[k + 1].amplitudes());
        let magnitude = ov.norm();
        if magnitude <= crate::state::OVERLAP_FLOOR {
            return Err(Error::UnderResolvedTrack {
                node: k,
                magnitude,
            });
        }
        accumulated += 0.5 * dt * (expectations[k] + expectations[k + 1]) + ov.arg();
        states.push(row0[k + 1].rephased(-accumulated));
    }
    Trajectory::new(grid, states, Some(spec.id()))
}

/// Connection integral of one frame row around the (periodic) loop.
pub fn frame_holonomy(frame: &FrameTrajectory, track_index: usize) -> Result<f64> {
    connection_integral(frame.track(track_index))
}

/// CSV export: node time, then row-major frame entries as re/im columns
/// (`w{row}_{component}_re`, `w{row}_{component}_im`).
pub fn write_frame_csv<W: Write>(frame: &FrameTrajectory, out: &mut W) -> std::io::Result<()> {
    let d = frame.dim();
    let mut header = String::from("t");
    for row in 0..d {
        for comp in 0..d {
            header.push_str(&format!(",w{row}_{comp}_re,w{row}_{comp}_im"));
        }
    }
    writeln!(out, "{header}")?;
    for (k, t) in frame.grid().nodes().enumerate() {
        let mut line = format!("{t:.17e}");
        for row in 0..d {
            for amp in frame.vector(k, row).amplitudes() {
                line.push_str(&format!(",{:.17e},{:.17e}", amp.re, amp.im));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
