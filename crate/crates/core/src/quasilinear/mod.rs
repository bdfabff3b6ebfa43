//! The quasi-linear system `A(U)U_x + B(U)U_y = 0` obtained from the
//! harmonic balances once `Ω` is eliminated.
//!
//! Every balance is linear in the derivative slots `(U_x, U_y)` with
//! coefficients depending only on `U`, so the matrices are extracted
//! column by column from [`stacked_residual`] instead of being written out.
//!
//! Equation order: the real `k = 0` balance; the real then imaginary part of
//! each `k = 1..N-1`; the top constraint last.

mod certificate;
mod spectrum;

pub use certificate::{egorov_certificate, harmonic_identity_defect, EgorovCertificate, FluxGrid, IdentityDefect};
pub use spectrum::{
    matrix_spectrum, pencil_spectrum, spectrum, Classification, SpectrumDiagnostics, SpectrumOptions,
    SpectrumReport,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ansatz::{harmonic_equation, omega_from_coefficients};
use crate::fields::{ComplexJet, Jet};
use crate::{Error, Result, LAMBDA_FLOOR};

/// `U = (Λ, u_0, …, u_{N-1}, v_1, …, v_{N-1})`, `2N` components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    degree: usize,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Argument("degree must be at least 1".into()));
        }
        if values.len() != 2 * degree {
            return Err(Error::Argument(format!(
                "state of degree {degree} has {} components, got {}",
                2 * degree,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("state components must be finite".into()));
        }
        check_state_lambda(values[0])?;
        Ok(Self { degree, values })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        2 * self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda(&self) -> f64 {
        self.values[0]
    }

    pub fn u(&self, k: usize) -> f64 {
        self.values[1 + k]
    }

    /// `v_k`, `1 ≤ k ≤ N-1`.
    pub fn v(&self, k: usize) -> f64 {
        self.values[self.degree + k]
    }
}

fn check_state_lambda(lam: f64) -> Result<()> {
    if lam > LAMBDA_FLOOR {
        Ok(())
    } else {
        Err(Error::Domain(format!("state has Λ = {lam:e}, below the floor {LAMBDA_FLOOR:e}")))
    }
}

fn slot_jet(idx: usize, u: &StateVector, ux: &[f64], uy: &[f64]) -> Jet {
    Jet::new(u.values[idx], ux[idx], uy[idx])
}

/// Residuals of the `2N` balances with the derivative slots filled by
/// `ux`, `uy` (free inputs, not tied to any field).
pub fn stacked_residual(u: &StateVector, ux: &[f64], uy: &[f64]) -> Result<Vec<f64>> {
    let n = u.degree;
    let dim = u.dim();
    if ux.len() != dim || uy.len() != dim {
        return Err(Error::Argument(format!(
            "derivative slots must have {dim} components, got {} and {}",
            ux.len(),
            uy.len()
        )));
    }
    let lam = slot_jet(0, u, ux, uy);
    let real = |k: usize| -> Jet {
        if k < n {
            slot_jet(1 + k, u, ux, uy)
        } else {
            lam.powf(n as f64 / 2.0)
        }
    };
    let imag = |k: usize| -> Jet {
        if k == 0 || k >= n {
            Jet::ZERO
        } else {
            slot_jet(n + k, u, ux, uy)
        }
    };
    let coeff = |m: i64| -> ComplexJet {
        let k = m.unsigned_abs() as usize;
        if k > n {
            return ComplexJet::ZERO;
        }
        let a = ComplexJet::from_parts(real(k), imag(k));
        if m < 0 {
            a.conj()
        } else {
            a
        }
    };
    let top_u = real(n - 1);
    let top_v = imag(n - 1);
    let omega = omega_from_coefficients(n, lam, top_u, top_v);

    let mut out = Vec::with_capacity(dim);
    out.push(harmonic_equation(0, &coeff, lam, omega).0.re);
    for k in 1..n {
        let e = harmonic_equation(k as i64, &coeff, lam, omega).0;
        out.push(e.re);
        out.push(e.im);
    }
    let nf = n as f64;
    out.push(
        2.0 * lam.v * (top_u.dx + top_v.dy) - (nf - 1.0) * (top_v.v * lam.dy + top_u.v * lam.dx),
    );
    Ok(out)
}

/// `A`, `B` of the assembled system at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub degree: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn apply(&self, ux: &[f64], uy: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(ux) + &self.b * DVector::from_column_slice(uy)
    }

    /// Matrices acting on the derivatives of the rescaled state
    /// `W = (Λ, f_0, …, f_{N-1}, g_1, …, g_{N-1})`: `A J⁻¹`, `B J⁻¹` with
    /// `J = ∂W/∂U`.
    pub fn in_rescaled_coordinates(&self, u: &StateVector) -> Result<SystemMatrices> {
        let jac = rescaling_jacobian(u);
        let inv = jac
            .try_inverse()
            .ok_or_else(|| Error::Domain("rescaling Jacobian is singular".into()))?;
        Ok(SystemMatrices {
            degree: self.degree,
            a: &self.a * &inv,
            b: &self.b * &inv,
        })
    }
}

/// Column `j` of `A` is the residual with `U_x = e_j, U_y = 0`; likewise for
/// `B`. Exact because the residual is linear in the slots.
pub fn assemble(u: &StateVector) -> Result<SystemMatrices> {
    let dim = u.dim();
    let zero = vec![0.0; dim];
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        a.set_column(j, &DVector::from_vec(stacked_residual(u, &e, &zero)?));
        b.set_column(j, &DVector::from_vec(stacked_residual(u, &zero, &e)?));
        e[j] = 0.0;
    }
    Ok(SystemMatrices {
        degree: u.degree,
        a,
        b,
    })
}

/// `∂W/∂U` for `f_k = u_k Λ^{-k/2}`, `g_k = v_k Λ^{-k/2}`.
pub fn rescaling_jacobian(u: &StateVector) -> DMatrix<f64> {
    let n = u.degree;
    let lam = u.lambda();
    let mut jac = DMatrix::zeros(u.dim(), u.dim());
    jac[(0, 0)] = 1.0;
    let mut fill = |row: usize, value: f64, k: usize| {
        let h = k as f64 / 2.0;
        jac[(row, 0)] = -h * value * lam.powf(-h - 1.0);
        jac[(row, row)] = lam.powf(-h);
    };
    for k in 0..n {
        fill(1 + k, u.u(k), k);
    }
    for k in 1..n {
        fill(n + k, u.v(k), k);
    }
    jac
}

/// Matrix of the geodesic system `U_t + A(U)U_x = 0` for coefficients
/// `a_0, …, a_n` with `a_n = 1` (and `a_{n-1} = g`): subdiagonal `a_{n-1}`,
/// last column `(i+1) a_{i+1} - (n-i+1) a_{i-1}` in row `i` (with `a_{-1} = 0`),
/// zeros elsewhere.
pub fn geodesic_matrix(n: usize, a: &[f64]) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::Argument(format!("geodesic matrix needs n >= 2, got {n}")));
    }
    if a.len() != n + 1 {
        return Err(Error::Argument(format!(
            "need a_0..a_n ({} values), got {}",
            n + 1,
            a.len()
        )));
    }
    if a[n] != 1.0 {
        return Err(Error::Argument(format!("a_n must equal 1, got {}", a[n])));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            m[(i, i - 1)] = a[n - 1];
        }
        let below = if i == 0 { 0.0 } else { a[i - 1] };
        m[(i, n - 1)] = (i + 1) as f64 * a[i + 1] - (n - i + 1) as f64 * below;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_in_derivatives() {
        for n in 1..=4 {
            let vals: Vec<f64> = (0..2 * n).map(|i| 1.0 + 0.1 * i as f64).collect();
            let u = StateVector::new(n, vals).unwrap();
            let z = vec![0.0; 2 * n];
            assert!(stacked_residual(&u, &z, &z).unwrap().iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn degree_one_rows() {
        let u = StateVector::new(1, vec![1.0, 0.3]).unwrap();
        let m = assemble(&u).unwrap();
        assert_eq!(m.a[(1, 1)], 2.0);
        assert_eq!(m.a[(1, 0)], 0.0);
        assert!((m.a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(m.b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn state_validation() {
        assert!(StateVector::new(2, vec![1.0, 0.0, 0.0]).is_err());
        assert!(matches!(StateVector::new(1, vec![0.0, 1.0]), Err(Error::Domain(_))));
        let u = StateVector::new(1, vec![1.0, 0.0]).unwrap();
        assert!(stacked_residual(&u, &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let m = geodesic_matrix(2, &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0]));
        let a = [0.1, 0.2, 0.3, 1.0];
        let m = geodesic_matrix(3, &a).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0, 0.0, 0.2, //
                0.3, 0.0, 2.0 * 0.3 - 3.0 * 0.1, //
                0.0, 0.3, 3.0 * 1.0 - 2.0 * 0.2,
            ],
        );
        assert!((m - expected).abs().max() < 1e-15);
        assert!(geodesic_matrix(1, &[0.0, 1.0]).is_err());
        assert!(geodesic_matrix(2, &[0.0, 1.0]).is_err());
        assert!(geodesic_matrix(2, &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn geodesic_entries_affine_in_coefficients() {
        let n = 5;
        let base: Vec<f64> = vec![0.3, -0.2, 0.7, 0.1, 0.4, 1.0];
        for k in 0..n {
            let h = 0.37;
            let at = |s: f64| {
                let mut a = base.clone();
                a[k] += s * h;
                geodesic_matrix(n, &a).unwrap()
            };
            let second = at(1.0) - at(0.0) * 2.0 + at(-1.0);
            assert!(second.abs().max() < 1e-14);
        }
    }
}
