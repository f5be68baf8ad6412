//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot element and then applies
//! a real Givens rotation, so the combined 2x2 transform is unitary. Rotations
//! only touch pairs with a non-zero coupling, which keeps symmetry blocks of
//! the input intact even when eigenvalues are degenerate across blocks.

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Relative Hermiticity defect above which input is rejected.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Convergence threshold on the off-diagonal norm, relative to the Frobenius norm.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition with eigenvalues sorted ascending and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub sweeps: usize,
}

impl Eigen {
    /// ‖H V − V Λ‖_F / ‖H‖_F (absolute when H is zero).
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let hv = h * &self.vectors;
        let vl = &self.vectors * &CMatrix::from_real_diagonal(&self.values);
        let r = (&hv - &vl).frobenius_norm();
        let norm = h.frobenius_norm();
        if norm > 0.0 {
            r / norm
        } else {
            r
        }
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a Hermitian matrix.
pub fn eigh(h: &CMatrix) -> Result<Eigen> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::ContractViolation(format!(
            "matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    let n = h.dim();
    // Symmetrize so the diagonal is exactly real and the pair (i,j)/(j,i) consistent.
    let mut a = CMatrix::zeros(n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let norm = a.frobenius_norm();
    let tol = OFF_DIAGONAL_TOLERANCE * norm;

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(Eigen {
        values,
        vectors,
        sweeps,
    })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let c = a[(p, q)];
    let mag = c.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    let phase = (c / mag).conj(); // e^{-iφ}

    // U restricted to (p, q): [[cs, sn], [-phase*sn, phase*cs]]
    let u_pp = Complex64::new(cs, 0.0);
    let u_pq = Complex64::new(sn, 0.0);
    let u_qp = -phase * sn;
    let u_qq = phase * cs;

    let n = a.dim();
    // A <- A U (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    // A <- U† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}
