//! Small dense complex linear algebra: just enough for d-level generators.
//!
//! Dimensions here are tiny (d is 2 in every built-in model), so the
//! implementations favor robustness over asymptotics: cyclic Jacobi for
//! Hermitian eigenproblems, closed-form Pauli exponentials for d = 2.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: "rows must form a square matrix".into(),
            });
        }
        Ok(Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Max entrywise |M - M^dag|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M^dag) / 2.
    pub fn hermitized(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self[(i, j)] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..self.dim {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Max entrywise distance to another matrix.
    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Spectral-norm upper bound via the Frobenius norm; cheap and adequate
    /// for step-size heuristics.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending with the
/// matching orthonormal eigenvectors as columns.
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// vectors[n] is the eigenvector for values[n].
    pub vectors: Vec<Vec<Complex64>>,
}

/// Cyclic Jacobi diagonalization for Hermitian matrices.
///
/// Converges quadratically; for the d = 2 case a single rotation is exact.
pub fn eigh(matrix: &CMatrix) -> Result<HermitianEig> {
    let herm_err = matrix.hermiticity_error();
    if herm_err > 1e-10 {
        return Err(Error::NonHermitian {
            max_deviation: herm_err,
        });
    }
    let d = matrix.dim();
    let mut a = matrix.hermitized();
    let mut v = CMatrix::identity(d);

    let scale = a.frobenius_norm().max(1e-300);
    let tol = scale * 1e-15;
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.norm() <= tol * 1e-2 {
                    continue;
                }
                // Unitary 2x2 rotation annihilating the (p, q) entry:
                // diagonalize [[app, apq], [conj(apq), aqq]].
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let abs = apq.norm();
                let phase = apq / abs; // e^{i arg}
                let angle = 0.5 * (2.0 * abs).atan2(app - aqq);
                let cos = angle.cos();
                let sin = angle.sin();
                // Columns p, q of A and V rotate by [[c, -s e^{i phi}], [s e^{-i phi}, c]].
                for r in 0..d {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * cos + arq * sin * phase.conj();
                    a[(r, q)] = -arp * sin * phase + arq * cos;
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * cos + vrq * sin * phase.conj();
                    v[(r, q)] = -vrp * sin * phase + vrq * cos;
                }
                for r in 0..d {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = apr * cos + aqr * sin * phase;
                    a[(q, r)] = -apr * sin * phase.conj() + aqr * cos;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite"));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..d).map(|r| v[(r, col)]).collect())
        .collect();
    Ok(HermitianEig { values, vectors })
}

/// exp(-i H dt) applied through the eigenbasis of Hermitian H.
pub fn expi_hermitian(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    if h.dim() == 2 {
        return Ok(expi_two_level(h, dt));
    }
    let eig = eigh(h)?;
    let d = h.dim();
    let mut out = CMatrix::zeros(d);
    for (lambda, vec) in eig.values.iter().zip(&eig.vectors) {
        let phase = Complex64::from_polar(1.0, -lambda * dt);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += phase * vec[i] * vec[j].conj();
            }
        }
    }
    Ok(out)
}

/// Closed-form exponential for a 2x2 Hermitian generator via its Pauli
/// decomposition H = a0 I + a.sigma:
/// exp(-i H dt) = e^{-i a0 dt} [cos(|a| dt) I - i sin(|a| dt) (a_hat . sigma)].
fn expi_two_level(h: &CMatrix, dt: f64) -> CMatrix {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let ax = 0.5 * (h[(0, 1)].re + h[(1, 0)].re);
    let ay = 0.5 * (h[(1, 0)].im - h[(0, 1)].im);
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let (cos_r, sinc) = if r * dt.abs() < 1e-300 {
        (1.0, dt)
    } else {
        ((r * dt).cos(), (r * dt).sin() / r)
    };
    let global = Complex64::from_polar(1.0, -a0 * dt);
    let i = Complex64::new(0.0, 1.0);
    let mut u = CMatrix::zeros(2);
    u[(0, 0)] = global * (Complex64::new(cos_r, 0.0) - i * sinc * az);
    u[(0, 1)] = global * (-i * sinc * Complex64::new(ax, -ay));
    u[(1, 0)] = global * (-i * sinc * Complex64::new(ax, ay));
    u[(1, 1)] = global * (Complex64::new(cos_r, 0.0) + i * sinc * az);
    u
}

/// Eigendecomposition of a unitary matrix: U = V diag(e^{i lambda}) V^dag.
///
/// A unitary is normal, so it is simultaneously diagonalizable with the
/// commuting Hermitian pair (U + U^dag)/2 and (U - U^dag)/(2i); degenerate
/// blocks of the first are split by the second.
pub fn unitary_eig(u: &CMatrix) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let d = u.dim();
    let re_part = u.add(&u.adjoint()).scale(Complex64::new(0.5, 0.0));
    let im_part = u
        .sub(&u.adjoint())
        .scale(Complex64::new(0.0, -0.5));
    let first = eigh(&re_part)?;

    // Group near-degenerate eigenvalues of the real part and diagonalize the
    // imaginary part inside each group.
    let mut vectors: Vec<Vec<Complex64>> = first.vectors.clone();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (first.values[end] - first.values[start]).abs() < 1e-8 {
            end += 1;
        }
        if end - start > 1 {
            let block: Vec<Vec<Complex64>> = vectors[start..end].to_vec();
            let m = end - start;
            let mut sub = CMatrix::zeros(m);
            for a in 0..m {
                let ima = im_part.mul_vec(&block[a]);
                for b in 0..m {
                    sub[(b, a)] = crate::state::raw_inner(&block[b], &ima);
                }
            }
            let sub_eig = eigh(&sub)?;
            for (slot, coeffs) in sub_eig.vectors.iter().enumerate() {
                let mut combined = vec![Complex64::new(0.0, 0.0); d];
                for (c, basis_vec) in coeffs.iter().zip(&block) {
                    for (out, x) in combined.iter_mut().zip(basis_vec) {
                        *out += c * x;
                    }
                }
                vectors[start + slot] = combined;
            }
        }
        start = end;
    }

    let mut angles = Vec::with_capacity(d);
    for vec in &vectors {
        let uv = u.mul_vec(vec);
        let lambda = crate::state::raw_inner(vec, &uv);
        angles.push(lambda.arg());
    }

    // Verify the reconstruction; a failure here means the input was far from
    // unitary.
    let mut recon = CMatrix::zeros(d);
    for (angle, vec) in angles.iter().zip(&vectors) {
        let phase = Complex64::from_polar(1.0, *angle);
        for i in 0..d {
            for j in 0..d {
                recon[(i, j)] += phase * vec[i] * vec[j].conj();
            }
        }
    }
    let err = recon.max_entry_distance(u);
    if err > 1e-8 {
        return Err(Error::Diagonalization {
            reason: format!("unitary reconstruction error {err:.3e}"),
        });
    }
    Ok((angles, vectors))
}
