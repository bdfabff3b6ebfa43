//! Eigenvalues of the pencil `det(B - λA) = 0` and hyperbolicity.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;

use super::SystemMatrices;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Eigenvalues closer than this times the spectral radius count as equal;
    /// imaginary parts below it count as zero.
    pub distinct_tol: f64,
    /// Condition number above which a matrix is treated as singular.
    pub singular_cond: f64,
    /// `A⁻¹B` is used directly when `cond(A)` is below this.
    pub inverse_cond: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            distinct_tol: 1e-9,
            singular_cond: 1e12,
            inverse_cond: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    #[serde(rename = "hyperbolic")]
    Hyperbolic,
    #[serde(rename = "degenerate")]
    Degenerate,
    #[serde(rename = "elliptic/mixed")]
    EllipticMixed,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Hyperbolic => "hyperbolic",
            Classification::Degenerate => "degenerate",
            Classification::EllipticMixed => "elliptic/mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumDiagnostics {
    pub cond_a: f64,
    pub cond_b: f64,
    /// `inverse` (A⁻¹B), `shift_invert` (shifted pencil), or `none`.
    pub route: &'static str,
    pub shift: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Finite eigenvalues sorted by real then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub infinite_count: usize,
    pub classification: Classification,
    pub diagnostics: SpectrumDiagnostics,
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn eigenvalues(m: DMatrix<f64>) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

fn sort(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn classify(eigs: &[Complex64], both_singular: bool, tol_rel: f64) -> Classification {
    if both_singular || eigs.is_empty() {
        return Classification::Degenerate;
    }
    let radius = eigs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let tol = tol_rel * radius;
    if eigs.iter().any(|z| z.im.abs() > tol) {
        return Classification::EllipticMixed;
    }
    let mut re: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    if re.windows(2).any(|w| w[1] - w[0] <= tol) {
        Classification::Degenerate
    } else {
        Classification::Hyperbolic
    }
}

/// Shifts tried for `B - σA`, in units of `‖B‖/‖A‖`.
const SHIFTS: [f64; 6] = [0.5772156649, -1.3247179572, 2.6854520011, -0.3036630028, 1.6180339887, -4.6692016091];

/// Eigenvalues of `det(B - λA) = 0`. When `A` is well conditioned they are
/// those of `A⁻¹B`. Otherwise the pencil is shifted: with `C = B - σA`
/// nonsingular, `λ = σ + 1/μ` for the eigenvalues `μ` of `C⁻¹A`, and `μ = 0`
/// marks an infinite eigenvalue. Singular `A` and `B` together classify as
/// degenerate without error.
pub fn pencil_spectrum(a: &DMatrix<f64>, b: &DMatrix<f64>, opts: &SpectrumOptions) -> SpectrumReport {
    let cond_a = condition(a);
    let cond_b = condition(b);
    let both_singular = cond_a >= opts.singular_cond && cond_b >= opts.singular_cond;
    let mut diag = SpectrumDiagnostics {
        cond_a,
        cond_b,
        route: "none",
        shift: None,
        note: None,
    };
    let mut infinite_count = 0;
    let mut eigs: Vec<Complex64> = Vec::new();

    if cond_a < opts.inverse_cond {
        let m = a.clone().lu().solve(b).expect("well-conditioned A");
        match eigenvalues(m) {
            Some(e) => {
                eigs = e;
                diag.route = "inverse";
            }
            None => diag.note = Some("Schur iteration did not converge".into()),
        }
    } else {
        let na = a.norm();
        let scale = if na > 0.0 { b.norm().max(1.0) / na } else { 1.0 };
        let best = SHIFTS
            .iter()
            .map(|s| {
                let sigma = s * scale;
                let c = b - a * sigma;
                (sigma, condition(&c), c)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((sigma, cond_c, c)) if cond_c < opts.singular_cond => {
                let m = c.lu().solve(a).expect("nonsingular shifted pencil");
                match eigenvalues(m) {
                    Some(mu) => {
                        let mu_max = mu.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                        for z in mu {
                            if z.norm() <= 1e-12 * mu_max.max(f64::MIN_POSITIVE) {
                                infinite_count += 1;
                            } else {
                                eigs.push(sigma + 1.0 / z);
                            }
                        }
                        diag.route = "shift_invert";
                        diag.shift = Some(sigma);
                    }
                    None => diag.note = Some("Schur iteration did not converge".into()),
                }
            }
            _ => diag.note = Some("singular pencil: det(B - λA) vanishes identically".into()),
        }
    }
    if both_singular && diag.note.is_none() {
        diag.note = Some("A and B are both numerically singular".into());
    }
    sort(&mut eigs);
    let classification = classify(&eigs, both_singular, opts.distinct_tol);
    SpectrumReport {
        eigenvalues: eigs,
        infinite_count,
        classification,
        diagnostics: diag,
    }
}

/// Eigenvalues of a square matrix (the pencil `(I, M)`).
pub fn matrix_spectrum(m: &DMatrix<f64>, opts: &SpectrumOptions) -> SpectrumReport {
    pencil_spectrum(&DMatrix::identity(m.nrows(), m.ncols()), m, opts)
}

pub fn spectrum(matrices: &SystemMatrices, opts: &SpectrumOptions) -> SpectrumReport {
    pencil_spectrum(&matrices.a, &matrices.b, opts)
}
