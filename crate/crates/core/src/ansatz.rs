//! Fourier first-integral ansatz `F = Σ_{|k| ≤ N} a_k(x, y) e^{ikφ}` and the
//! identities it must satisfy.
//!
//! Coefficients are stored for `k ≥ 0` only, as real parts `u_k` and
//! imaginary parts `v_k`; negative harmonics are the complex conjugates, so
//! `F` is real by construction and `v_0 ≡ 0`. The top coefficient is
//! normalized to `a_N = Λ^{N/2}`.
//!
//! Every check returns a [`ResidualReport`] over a [`SamplingGrid`]. All
//! derivatives come from the exact first derivatives of the input fields;
//! derivatives of products (the conservation-law fluxes, the rescaled
//! coefficients) are expanded by the product and chain rules.

use num_complex::Complex64;

use crate::fields::{Axis, ComplexJet, Field, FieldDerivative, Jet, SamplingGrid, ScalarMap, TorusGeometry};
use crate::flow::{MagneticSystem, Observable};
use crate::report::{sweep_grid, ResidualReport, TermSum};
use crate::{check_lambda, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct Ansatz {
    degree: usize,
    lambda: Field,
    /// `u[k]`, `k = 0..=N`
    u: Vec<Field>,
    /// `v[k]`, `k = 0..=N`; `v[0]` is the zero field
    v: Vec<Field>,
    normalized: bool,
}

fn check_lambda_on_grid(lambda: &Field) -> Result<()> {
    let grid = SamplingGrid::default();
    for (x, y) in grid.points(lambda.geometry()) {
        check_lambda(lambda.eval(x, y), x, y)?;
    }
    Ok(())
}

impl Ansatz {
    /// Ansatz of degree `N = u_lower.len()` with `u_0..u_{N-1}` and
    /// `v_1..v_{N-1}` given; the top coefficient is set to `a_N = Λ^{N/2}`.
    pub fn new(lambda: Field, u_lower: Vec<Field>, v_upper: Vec<Field>) -> Result<Self> {
        let n = u_lower.len();
        if n == 0 {
            return Err(Error::Argument("degree must be at least 1".into()));
        }
        if v_upper.len() + 1 != n {
            return Err(Error::Argument(format!(
                "degree {n} needs {} imaginary parts v_1..v_{{N-1}}, got {}",
                n - 1,
                v_upper.len()
            )));
        }
        check_lambda_on_grid(&lambda)?;
        let geometry = lambda.geometry();
        let mut u = u_lower;
        u.push(lambda.powf(n as f64 / 2.0));
        let mut v = Vec::with_capacity(n + 1);
        v.push(Field::zero(geometry));
        v.extend(v_upper);
        v.push(Field::zero(geometry));
        Ok(Self {
            degree: n,
            lambda,
            u,
            v,
            normalized: true,
        })
    }

    /// Ansatz with every coefficient supplied, including the top one, and no
    /// normalization. `u` holds `u_0..u_N`, `v_upper` holds `v_1..v_N`.
    pub fn from_raw(lambda: Field, u: Vec<Field>, v_upper: Vec<Field>) -> Result<Self> {
        if u.len() < 2 || v_upper.len() + 1 != u.len() {
            return Err(Error::Argument(format!(
                "raw ansatz needs u_0..u_N and v_1..v_N, got {} and {}",
                u.len(),
                v_upper.len()
            )));
        }
        check_lambda_on_grid(&lambda)?;
        let mut v = Vec::with_capacity(u.len());
        v.push(Field::zero(lambda.geometry()));
        v.extend(v_upper);
        Ok(Self {
            degree: u.len() - 1,
            lambda,
            u,
            v,
            normalized: false,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lambda(&self) -> &Field {
        &self.lambda
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.lambda.geometry()
    }

    pub fn u(&self, k: usize) -> &Field {
        &self.u[k]
    }

    pub fn v(&self, k: usize) -> &Field {
        &self.v[k]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_periodic(&self) -> bool {
        self.lambda.is_periodic()
            && self.u.iter().all(Field::is_periodic)
            && self.v.iter().all(Field::is_periodic)
    }

    /// Same ansatz with `u_k` and `v_k` replaced (the top coefficient keeps
    /// its normalization only if `k < N`).
    pub fn with_coefficient(&self, k: usize, u: Field, v: Field) -> Result<Self> {
        if k > self.degree {
            return Err(Error::Argument(format!("harmonic {k} exceeds degree {}", self.degree)));
        }
        if k == 0 && v.as_trig().is_none_or(|p| !p.modes().is_empty()) {
            return Err(Error::Argument("a_0 is real: v_0 must be the zero field".into()));
        }
        let mut out = self.clone();
        out.u[k] = u;
        out.v[k] = v;
        if k == self.degree {
            out.normalized = false;
        }
        Ok(out)
    }

    /// `a_k` with its gradient; zero for `|k| > N`, conjugated for `k < 0`.
    pub fn coefficient_jet(&self, k: i64, x: f64, y: f64) -> ComplexJet {
        let idx = k.unsigned_abs() as usize;
        if idx > self.degree {
            return ComplexJet::ZERO;
        }
        let a = ComplexJet::from_parts(self.u[idx].jet(x, y), self.v[idx].jet(x, y));
        if k < 0 {
            a.conj()
        } else {
            a
        }
    }

    /// `F = a_0 + 2 Σ_{k≥1} (u_k cos kφ - v_k sin kφ)`.
    pub fn eval_f(&self, x: f64, y: f64, phi: f64) -> f64 {
        let mut f = self.u[0].eval(x, y);
        for k in 1..=self.degree {
            let (s, c) = (k as f64 * phi).sin_cos();
            f += 2.0 * (self.u[k].eval(x, y) * c - self.v[k].eval(x, y) * s);
        }
        f
    }

    /// `F` as a flow observable.
    pub fn first_integral(&self) -> Observable {
        let a = self.clone();
        Observable::new("F", move |s| a.eval_f(s.x, s.y, s.phi))
    }

    fn caveat(&self, report: &mut ResidualReport) {
        if !self.is_periodic() {
            report.periodicity_caveat = true;
            report.notes.push("non-periodic input: grid checks are local to one fundamental domain".into());
        }
    }
}

/// Left-hand side of the `e^{ikφ}` balance of the stationarity condition,
/// given coefficient jets `a(m)` (with `a(-m) = conj(a(m))` and `a(m) = 0`
/// above the degree), `Λ` and the value of `Ω`.
pub fn harmonic_equation(k: i64, a: &dyn Fn(i64) -> ComplexJet, lam: Jet, omega: f64) -> (Complex64, f64) {
    let alpha = lam.dy / (2.0 * lam.v);
    let beta = lam.dx / (2.0 * lam.v);
    let (am, ap, ak) = (a(k - 1), a(k + 1), a(k));
    let (km, kp) = ((k - 1) as f64, (k + 1) as f64);
    let terms = [
        alpha * (I * km * am.v + I * kp * ap.v) / 2.0,
        -beta * (I * km * am.v - I * kp * ap.v) / (2.0 * I),
        (am.dx + ap.dx) / 2.0,
        (am.dy - ap.dy) / (2.0 * I),
        -I * (k as f64) * omega * ak.v / lam.v.sqrt(),
    ];
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.norm()));
    (terms.iter().sum(), scale)
}

/// Magnetic field from the unrescaled top pair `(u_{N-1}, v_{N-1})`:
/// `Ω = [(N-1)(Λ_y u - Λ_x v) + 2Λ(v_x - u_y)] / (4N Λ^{(N+1)/2})`.
pub fn omega_from_coefficients(n: usize, lam: Jet, u: Jet, v: Jet) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) * (lam.dy * u.v - lam.dx * v.v) + 2.0 * lam.v * (v.dx - u.dy))
        / (4.0 * nf * lam.v.powf((nf + 1.0) / 2.0))
}

/// Magnetic field from the rescaled top pair: `Ω = (g_x - f_y) / (2N)`.
pub fn omega_from_rescaled(n: usize, f: Jet, g: Jet) -> f64 {
    (g.dx - f.dy) / (2.0 * n as f64)
}

/// Stationarity residual of `F` at `(x, y, φ)`:
/// `F_x cos φ + F_y sin φ + F_φ (Λ_y cos φ/(2Λ) - Λ_x sin φ/(2Λ) - Ω/√Λ)`.
pub fn stationarity_at(ansatz: &Ansatz, omega: f64, x: f64, y: f64, phi: f64) -> TermSum {
    let lam = ansatz.lambda.jet(x, y);
    let jets: Vec<(Jet, Jet)> = (0..=ansatz.degree)
        .map(|k| (ansatz.u[k].jet(x, y), ansatz.v[k].jet(x, y)))
        .collect();
    stationarity_from_jets(&jets, lam, omega, phi)
}

fn stationarity_from_jets(jets: &[(Jet, Jet)], lam: Jet, omega: f64, phi: f64) -> TermSum {
    let (mut fx, mut fy, mut fphi) = (jets[0].0.dx, jets[0].0.dy, 0.0);
    for (k, (u, v)) in jets.iter().enumerate().skip(1) {
        let kf = k as f64;
        let (s, c) = (kf * phi).sin_cos();
        fx += 2.0 * (u.dx * c - v.dx * s);
        fy += 2.0 * (u.dy * c - v.dy * s);
        fphi += -2.0 * kf * (u.v * s + v.v * c);
    }
    let (s, c) = phi.sin_cos();
    TermSum::of(&[
        fx * c,
        fy * s,
        fphi * lam.dy * c / (2.0 * lam.v),
        -fphi * lam.dx * s / (2.0 * lam.v),
        -fphi * omega / lam.v.sqrt(),
    ])
}

/// Residual norms of the stationarity condition over the grid × `phi_samples`
/// equispaced angles (default `4N + 4`).
pub fn residual_stationarity(
    ansatz: &Ansatz,
    omega: &dyn ScalarMap,
    grid: &SamplingGrid,
    phi_samples: Option<usize>,
) -> ResidualReport {
    let m = phi_samples.unwrap_or(4 * ansatz.degree + 4).max(1);
    let phis: Vec<f64> = (0..m)
        .map(|i| std::f64::consts::TAU * i as f64 / m as f64)
        .collect();
    let acc = sweep_grid(grid, ansatz.geometry(), 1, |x, y, acc| {
        let lam = ansatz.lambda.jet(x, y);
        let om = omega.value(x, y);
        let jets: Vec<(Jet, Jet)> = (0..=ansatz.degree)
            .map(|k| (ansatz.u[k].jet(x, y), ansatz.v[k].jet(x, y)))
            .collect();
        for &phi in &phis {
            acc[0].push(stationarity_from_jets(&jets, lam, om, phi));
        }
    });
    let mut report = ResidualReport {
        entries: vec![acc[0].finish("stationarity")],
        ..Default::default()
    };
    ansatz.caveat(&mut report);
    report
}

fn check_harmonic(ansatz: &Ansatz, k: usize) -> Result<()> {
    if k > ansatz.degree + 1 {
        Err(Error::Argument(format!(
            "harmonic {k} out of range 0..={}",
            ansatz.degree + 1
        )))
    } else {
        Ok(())
    }
}

/// Complex residual of harmonic `k` at one point, with its term scale.
pub fn harmonic_residual_at(
    ansatz: &Ansatz,
    omega: &dyn ScalarMap,
    k: usize,
    x: f64,
    y: f64,
) -> Result<(Complex64, f64)> {
    check_harmonic(ansatz, k)?;
    let lam = ansatz.lambda.jet(x, y);
    let a = |m: i64| ansatz.coefficient_jet(m, x, y);
    Ok(harmonic_equation(k as i64, &a, lam, omega.value(x, y)))
}

fn harmonic_labels(k: usize) -> Vec<String> {
    if k == 0 {
        vec!["harmonic[k=0]".to_string()]
    } else {
        vec![format!("harmonic[k={k}].re"), format!("harmonic[k={k}].im")]
    }
}

/// Residual norms of harmonic `k` (`0 ≤ k ≤ N+1`). The `k = 0` balance is
/// real and reported once; other harmonics report real and imaginary parts.
pub fn residual_harmonic(
    ansatz: &Ansatz,
    omega: &dyn ScalarMap,
    k: usize,
    grid: &SamplingGrid,
) -> Result<ResidualReport> {
    check_harmonic(ansatz, k)?;
    let labels = harmonic_labels(k);
    let acc = sweep_grid(grid, ansatz.geometry(), labels.len(), |x, y, acc| {
        let (e, scale) = harmonic_residual_at(ansatz, omega, k, x, y).expect("k checked");
        acc[0].push(TermSum::new(e.re, scale));
        if k > 0 {
            acc[1].push(TermSum::new(e.im, scale));
        }
    });
    let mut report = ResidualReport {
        entries: labels.into_iter().zip(&acc).map(|(l, a)| a.finish(l)).collect(),
        ..Default::default()
    };
    ansatz.caveat(&mut report);
    Ok(report)
}

/// All harmonics `k = 0..=N+1`.
pub fn residual_all_harmonics(ansatz: &Ansatz, omega: &dyn ScalarMap, grid: &SamplingGrid) -> ResidualReport {
    let mut report = ResidualReport::default();
    for k in 0..=ansatz.degree + 1 {
        report.extend(residual_harmonic(ansatz, omega, k, grid).expect("k in range"));
    }
    report
}

/// `Ω` evaluated from the unrescaled ansatz.
#[derive(Debug, Clone)]
pub struct OmegaRaw {
    degree: usize,
    lambda: Field,
    u: Field,
    v: Field,
}

impl ScalarMap for OmegaRaw {
    fn value(&self, x: f64, y: f64) -> f64 {
        omega_from_coefficients(self.degree, self.lambda.jet(x, y), self.u.jet(x, y), self.v.jet(x, y))
    }
}

pub fn omega_raw(ansatz: &Ansatz) -> Result<OmegaRaw> {
    check_lambda_on_grid(&ansatz.lambda)?;
    let n = ansatz.degree;
    Ok(OmegaRaw {
        degree: n,
        lambda: ansatz.lambda.clone(),
        u: ansatz.u[n - 1].clone(),
        v: ansatz.v[n - 1].clone(),
    })
}

/// `Ω` evaluated from the rescaled top pair.
#[derive(Debug, Clone)]
pub struct OmegaRescaled {
    degree: usize,
    f: Field,
    g: Field,
}

impl ScalarMap for OmegaRescaled {
    fn value(&self, x: f64, y: f64) -> f64 {
        omega_from_rescaled(self.degree, self.f.jet(x, y), self.g.jet(x, y))
    }
}

pub fn omega_rescaled(rescaled: &RescaledAnsatz) -> OmegaRescaled {
    let n = rescaled.degree;
    OmegaRescaled {
        degree: n,
        f: rescaled.f[n - 1].clone(),
        g: rescaled.g[n - 1].clone(),
    }
}

/// Coefficients `f_k = u_k Λ^{-k/2}`, `g_k = v_k Λ^{-k/2}` for `k = 0..=N`.
#[derive(Debug, Clone)]
pub struct RescaledAnsatz {
    degree: usize,
    lambda: Field,
    f: Vec<Field>,
    g: Vec<Field>,
}

impl RescaledAnsatz {
    /// Rescaled ansatz with `f_0..f_{N-1}` and `g_1..g_{N-1}` given and the
    /// normalized top `f_N = 1`, `g_N = 0`.
    pub fn new(lambda: Field, f_lower: Vec<Field>, g_upper: Vec<Field>) -> Result<Self> {
        let n = f_lower.len();
        if n == 0 || g_upper.len() + 1 != n {
            return Err(Error::Argument(format!(
                "rescaled ansatz needs f_0..f_{{N-1}} and g_1..g_{{N-1}}, got {} and {}",
                n,
                g_upper.len()
            )));
        }
        check_lambda_on_grid(&lambda)?;
        let geometry = lambda.geometry();
        let mut f = f_lower;
        f.push(Field::constant(1.0, geometry));
        let mut g = vec![Field::zero(geometry)];
        g.extend(g_upper);
        g.push(Field::zero(geometry));
        Ok(Self {
            degree: n,
            lambda,
            f,
            g,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lambda(&self) -> &Field {
        &self.lambda
    }

    pub fn f(&self, k: usize) -> &Field {
        &self.f[k]
    }

    pub fn g(&self, k: usize) -> &Field {
        &self.g[k]
    }

    pub fn is_periodic(&self) -> bool {
        self.lambda.is_periodic() && self.f.iter().chain(&self.g).all(Field::is_periodic)
    }

    /// `(f_{N-2}, g_{N-2})` at a point. For `N = 1` these come from the
    /// conjugate mirror `a_{-1} = conj(a_1)`: `f_{-1} = f_1 Λ`, `g_{-1} = -g_1 Λ`.
    pub fn lower_pair(&self, x: f64, y: f64) -> (Jet, Jet) {
        if self.degree >= 2 {
            (self.f[self.degree - 2].jet(x, y), self.g[self.degree - 2].jet(x, y))
        } else {
            let lam = self.lambda.jet(x, y);
            (self.f[1].jet(x, y) * lam, -(self.g[1].jet(x, y) * lam))
        }
    }

    /// Inputs of the conservation laws at a point.
    pub fn conservation_inputs(&self, x: f64, y: f64) -> ConservationInputs {
        let n = self.degree;
        let (f2, g2) = self.lower_pair(x, y);
        ConservationInputs {
            n,
            f: self.f[n - 1].jet(x, y),
            g: self.g[n - 1].jet(x, y),
            f2,
            g2,
            lambda: self.lambda.jet(x, y),
        }
    }

    fn caveat(&self, report: &mut ResidualReport) {
        if !self.is_periodic() {
            report.periodicity_caveat = true;
            report.notes.push("non-periodic input: grid checks are local to one fundamental domain".into());
        }
        if self.degree == 1 {
            report.notes.push(N1_NOTE.into());
        }
    }

    /// Norms of `(f_{N-1})_x + (g_{N-1})_y`.
    pub fn constraint_residual(&self, grid: &SamplingGrid) -> ResidualReport {
        let n = self.degree;
        let acc = sweep_grid(grid, self.lambda.geometry(), 1, |x, y, acc| {
            acc[0].push(divergence(self.f[n - 1].jet(x, y), self.g[n - 1].jet(x, y)));
        });
        let mut report = ResidualReport {
            entries: vec![acc[0].finish("constraint_rescaled")],
            ..Default::default()
        };
        self.caveat(&mut report);
        report
    }
}

pub const N1_NOTE: &str =
    "N=1 degenerate: f_{N-2}, g_{N-2} taken from the conjugate mirror a_{-1} = conj(a_1)";

pub fn rescale(ansatz: &Ansatz) -> Result<RescaledAnsatz> {
    check_lambda_on_grid(&ansatz.lambda)?;
    let factor = |k: usize| ansatz.lambda.powf(-(k as f64) / 2.0);
    let f = (0..=ansatz.degree).map(|k| &ansatz.u[k] * &factor(k)).collect();
    let g = (0..=ansatz.degree).map(|k| &ansatz.v[k] * &factor(k)).collect();
    Ok(RescaledAnsatz {
        degree: ansatz.degree,
        lambda: ansatz.lambda.clone(),
        f,
        g,
    })
}

/// Inverse of [`rescale`]: `u_k = f_k Λ^{k/2}`, `v_k = g_k Λ^{k/2}`.
pub fn unrescale(rescaled: &RescaledAnsatz) -> Result<Ansatz> {
    check_lambda_on_grid(&rescaled.lambda)?;
    let factor = |k: usize| rescaled.lambda.powf(k as f64 / 2.0);
    let u = (0..=rescaled.degree).map(|k| &rescaled.f[k] * &factor(k)).collect();
    let v = (1..=rescaled.degree).map(|k| &rescaled.g[k] * &factor(k)).collect();
    Ansatz::from_raw(rescaled.lambda.clone(), u, v)
}

fn divergence(f: Jet, g: Jet) -> TermSum {
    TermSum::of(&[f.dx, g.dy])
}

/// Both forms of the top constraint at a point:
/// `2Λ((u_{N-1})_x + (v_{N-1})_y) - (N-1)(v_{N-1}Λ_y + u_{N-1}Λ_x)` and
/// `(f_{N-1})_x + (g_{N-1})_y`. The first equals the second times `2Λ^{(N+1)/2}`.
pub fn constraint_forms_at(ansatz: &Ansatz, rescaled: &RescaledAnsatz, x: f64, y: f64) -> (TermSum, TermSum) {
    let n = ansatz.degree;
    let nf = n as f64;
    let lam = ansatz.lambda.jet(x, y);
    let u = ansatz.u[n - 1].jet(x, y);
    let v = ansatz.v[n - 1].jet(x, y);
    let raw = TermSum::of(&[
        2.0 * lam.v * u.dx,
        2.0 * lam.v * v.dy,
        -(nf - 1.0) * v.v * lam.dy,
        -(nf - 1.0) * u.v * lam.dx,
    ]);
    let rescaled = divergence(rescaled.f[n - 1].jet(x, y), rescaled.g[n - 1].jet(x, y));
    (raw, rescaled)
}

/// Norms of both constraint forms, labelled `constraint_raw` and `constraint_rescaled`.
pub fn constraint_residual(ansatz: &Ansatz, grid: &SamplingGrid) -> Result<ResidualReport> {
    let rescaled = rescale(ansatz)?;
    let acc = sweep_grid(grid, ansatz.geometry(), 2, |x, y, acc| {
        let (raw, resc) = constraint_forms_at(ansatz, &rescaled, x, y);
        acc[0].push(raw);
        acc[1].push(resc);
    });
    let mut report = ResidualReport {
        entries: vec![acc[0].finish("constraint_raw"), acc[1].finish("constraint_rescaled")],
        ..Default::default()
    };
    ansatz.caveat(&mut report);
    Ok(report)
}

/// Pointwise data entering the two conservation laws: `f = f_{N-1}`,
/// `g = g_{N-1}`, `f2 = f_{N-2}`, `g2 = g_{N-2}` and `Λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationInputs {
    pub n: usize,
    pub f: Jet,
    pub g: Jet,
    pub f2: Jet,
    pub g2: Jet,
    pub lambda: Jet,
}

/// Global signs relating the conservation laws to the `k = N-1` displays:
/// `law₁ = s₁·display₁ + (N-1) g·div`, `law₂ = s₂·display₂ + (N-1) f·div`,
/// where `div = f_x + g_y`.
pub const CONSERVATION_SIGNS: [f64; 2] = [1.0, -1.0];

impl ConservationInputs {
    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Flux triple `(R, G, H)` with `R_x + G_y = 0` and `R_y + H_x = 0`:
    /// `R = (N-1) f g - N g2`,
    /// `G = (N-1)/2 (g² - f²) - N²Λ + N f2`,
    /// `H = (N-1)/2 (f² - g²) - N²Λ - N f2`.
    pub fn fluxes(&self) -> (f64, f64, f64) {
        let n = self.nf();
        let (f, g) = (self.f.v, self.g.v);
        let half = (n - 1.0) / 2.0;
        (
            (n - 1.0) * f * g - n * self.g2.v,
            half * (g * g - f * f) - n * n * self.lambda.v + n * self.f2.v,
            half * (f * f - g * g) - n * n * self.lambda.v - n * self.f2.v,
        )
    }

    /// `R_x + G_y` and `R_y + H_x`, expanded onto first derivatives.
    pub fn laws(&self) -> [TermSum; 2] {
        let n = self.nf();
        let m = n - 1.0;
        let (f, g, f2, g2, l) = (self.f, self.g, self.f2, self.g2, self.lambda);
        [
            TermSum::of(&[
                m * f.dx * g.v,
                m * f.v * g.dx,
                -n * g2.dx,
                m * g.v * g.dy,
                -m * f.v * f.dy,
                -n * n * l.dy,
                n * f2.dy,
            ]),
            TermSum::of(&[
                m * f.dy * g.v,
                m * f.v * g.dy,
                -n * g2.dy,
                m * f.v * f.dx,
                -m * g.v * g.dx,
                -n * n * l.dx,
                -n * f2.dx,
            ]),
        ]
    }

    /// The two real equations of the `k = N-1` harmonic in rescaled form:
    /// `(N-1) f (g_x - f_y) + N((f2)_y - (g2)_x - NΛ_y)` and
    /// `(N-1) g (g_x - f_y) + N((f2)_x + (g2)_y + NΛ_x)`.
    pub fn displays(&self) -> [TermSum; 2] {
        let n = self.nf();
        let m = n - 1.0;
        let (f, g, f2, g2, l) = (self.f, self.g, self.f2, self.g2, self.lambda);
        [
            TermSum::of(&[
                m * f.v * g.dx,
                -m * f.v * f.dy,
                n * f2.dy,
                -n * g2.dx,
                -n * n * l.dy,
            ]),
            TermSum::of(&[
                m * g.v * g.dx,
                -m * g.v * f.dy,
                n * f2.dx,
                n * g2.dy,
                n * n * l.dx,
            ]),
        ]
    }

    pub fn divergence(&self) -> f64 {
        self.f.dx + self.g.dy
    }
}

/// Norms of both conservation laws, labelled `conservation_1` and `conservation_2`.
pub fn conservation_residuals(rescaled: &RescaledAnsatz, grid: &SamplingGrid) -> ResidualReport {
    let acc = sweep_grid(grid, rescaled.lambda.geometry(), 2, |x, y, acc| {
        let [a, b] = rescaled.conservation_inputs(x, y).laws();
        acc[0].push(a);
        acc[1].push(b);
    });
    let mut report = ResidualReport {
        entries: vec![acc[0].finish("conservation_1"), acc[1].finish("conservation_2")],
        ..Default::default()
    };
    rescaled.caveat(&mut report);
    report
}

fn check_y_only(field: &Field, what: &str) -> Result<()> {
    let grid = SamplingGrid::default();
    for (x, y) in grid.points(field.geometry()) {
        let j = field.jet(x, y);
        if j.dx.abs() > 1e-12 * (1.0 + j.v.abs()) {
            return Err(Error::Argument(format!(
                "{what} must depend on y only, but d/dx = {:e} at ({x}, {y})",
                j.dx
            )));
        }
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Power of a field by repeated products (exact for negative bases).
fn int_power(field: &Field, e: usize) -> Field {
    let mut out = Field::constant(1.0, field.geometry());
    for _ in 0..e {
        out = &out * field;
    }
    out
}

/// Degree-`N` ansatz `F = (2A(y) + 2√Λ cos φ)^N` for profiles `Λ(y)`, `A(y)`,
/// together with the magnetic system `Ω = -A'(y)` that conserves it.
///
/// The `e^{ikφ}` coefficient of the power is
/// `u_k = Σ_j C(N, j) C(j, (j+k)/2) (2A)^{N-j} Λ^{j/2}` over `j ≥ k`,
/// `j ≡ k (mod 2)`; all `v_k` vanish and `u_N = Λ^{N/2}`.
pub fn build_power_family(lambda_profile: &Field, a_profile: &Field, n: usize) -> Result<(Ansatz, MagneticSystem)> {
    if n == 0 {
        return Err(Error::Argument("degree must be at least 1".into()));
    }
    check_y_only(lambda_profile, "conformal factor profile")?;
    check_y_only(a_profile, "A profile")?;
    check_lambda_on_grid(lambda_profile)?;
    let geometry = lambda_profile.geometry();
    let two_a = a_profile.scaled(2.0);
    let u_lower: Vec<Field> = (0..n)
        .map(|k| {
            let mut acc = Field::zero(geometry);
            for j in (k..=n).step_by(2) {
                let c = binomial(n, j) * binomial(j, (j + k) / 2);
                let term = &int_power(&two_a, n - j) * &lambda_profile.powf(j as f64 / 2.0);
                acc = &acc + &term.scaled(c);
            }
            acc
        })
        .collect();
    let v_upper = vec![Field::zero(geometry); n - 1];
    let ansatz = Ansatz::new(lambda_profile.clone(), u_lower, v_upper)?;
    let system = match a_profile.as_trig() {
        Some(p) => MagneticSystem::with_field(
            lambda_profile.clone(),
            Field::from_trig(p.derivative(Axis::Y)).scaled(-1.0),
        )?,
        None => MagneticSystem::new(
            lambda_profile.clone(),
            std::sync::Arc::new(FieldDerivative::new(a_profile.clone(), Axis::Y, -1.0)),
        )?,
    };
    Ok((ansatz, system))
}

/// Degree-one family: `u_0 = 2A(y)`, `u_1 = √Λ`, `v_1 = 0`, `Ω = -A'(y)`, so
/// `F = 2√Λ cos φ + 2A(y)`.
pub fn build_linear_family(lambda_profile: &Field, a_profile: &Field) -> Result<(Ansatz, MagneticSystem)> {
    build_power_family(lambda_profile, a_profile, 1)
}
