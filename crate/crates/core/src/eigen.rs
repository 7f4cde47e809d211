//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.

use num_complex::Complex64 as C64;

use crate::matrix::{ComplexMatrix, HermitianMatrix};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;
/// Sweeps stop once the off-diagonal Frobenius norm falls below this fraction of ‖M‖.
const REL_TOL: f64 = 1e-12;
/// Relative tolerance for deciding that two eigenvector components tie in magnitude.
const PHASE_TIE_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
///
/// Each eigenvector is normalised so that its largest-magnitude component is
/// real and positive; among components whose magnitudes agree within a
/// relative 1e-10, the lowest index wins.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn component(&self, i: usize, k: usize) -> C64 {
        self.vectors[(i, k)]
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)].conj())
                    .sum();
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
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

/// Diagonalises a Hermitian matrix.
pub fn eigh(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = REL_TOL * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || scale == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut max_mag = 0.0f64;
        for i in 0..n {
            max_mag = max_mag.max(v[(i, k)].norm());
        }
        let lead = (0..n)
            .find(|&i| v[(i, k)].norm() >= max_mag * (1.0 - PHASE_TIE_TOL))
            .unwrap_or(0);
        let z = v[(lead, k)];
        let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)] * phase;
        }
        vectors[(lead, col)] = C64::new(vectors[(lead, col)].re, 0.0);
    }

    Ok(EigenDecomposition { values, vectors })
}

/// Annihilates `a[p][q]` with a unitary rotation in the (p, q) plane and
/// accumulates it into `v`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Off-diagonal element far below the diagonal gap: its rotation would underflow.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to (p, q): [[c, s·e^{iφ}], [−s, c·e^{iφ}]]·diag(1, e^{−iφ}) folded
    // so that column updates read: col_p' = c·col_p − s·e^{−iφ}·col_q,
    // col_q' = s·e^{iφ}·col_p + c·col_q.
    let n = a.rows();
    let sp = phase * s; // s·e^{iφ}
    let sm = phase.conj() * s; // s·e^{−iφ}

    // A ← A U
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * sm;
        a[(k, q)] = akp * sp + akq * c;
    }
    // A ← U† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * sp;
        a[(q, k)] = apk * sm + aqk * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * sm;
        v[(k, q)] = vkp * sp + vkq * c;
    }
}
