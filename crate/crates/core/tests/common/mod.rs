#![allow(dead_code)]

use phonon_antenna::matrix::ComplexMatrix;
use phonon_antenna::C64;

/// exp(A) for a small dense real matrix: scaling and squaring around a
/// 24-term Taylor series.
pub fn expm_real(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..=24 {
        term = mul(&term, &b);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = mul(&result, &result);
    }
    result
}

pub fn expm_complex(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let norm = (0..n).map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a.scale_real(0.5f64.powi(s));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=24 {
        term = (&term * &b).scale_real(1.0 / k as f64);
        result = &result + &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Purely electronic sink problem on {sink, sites}: −i[H, ρ] + Γ D[|0⟩⟨k|]ρ,
/// assembled as a (n+1)²×(n+1)² superoperator acting on row-major vec(ρ).
pub fn electronic_superoperator(h_el: &[Vec<f64>], sink_level: usize, gamma: f64, conv: f64) -> ComplexMatrix {
    let m = h_el.len();
    let dim = m * m;
    let mut h = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = C64::new(h_el[i][j] * conv, 0.0);
        }
    }
    let mut l = ComplexMatrix::zeros(m, m);
    l[(0, sink_level)] = C64::new(1.0, 0.0);
    let ld = l.adjoint();
    let ldl = &ld * &l;
    let mut sup = ComplexMatrix::zeros(dim, dim);
    for a in 0..m {
        for b in 0..m {
            let mut e = ComplexMatrix::zeros(m, m);
            e[(a, b)] = C64::new(1.0, 0.0);
            let comm = (&(&h * &e) - &(&e * &h)).scale(C64::new(0.0, -1.0));
            let jump = &(&l * &e) * &ld;
            let anti = (&(&ldl * &e) + &(&e * &ldl)).scale_real(0.5);
            let out = &comm + &(&jump - &anti).scale_real(gamma);
            for i in 0..m {
                for j in 0..m {
                    sup[(i * m + j, a * m + b)] = out[(i, j)];
                }
            }
        }
    }
    sup
}
