//! Egorov certificate: the constraint and the two conservation laws
//! `R_x + G_y = 0`, `R_y + H_x = 0` checked on a grid.

use serde::Serialize;

use crate::ansatz::{omega_rescaled, unrescale, RescaledAnsatz, CONSERVATION_SIGNS};
use crate::fields::{SamplingGrid, ScalarMap};
use crate::report::{sweep_grid, ResidualReport, TermSum};
use crate::Result;

/// Grid values of the fluxes, row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxGrid {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgorovCertificate {
    pub degree: usize,
    pub tau: f64,
    /// All three residual sup-norms are below `tau`.
    pub certified: bool,
    /// Entries `constraint_rescaled`, `conservation_1`, `conservation_2`.
    pub residuals: ResidualReport,
    pub fluxes: FluxGrid,
    /// `N = 1`: the lower pair comes from the conjugate mirror.
    pub degenerate_n1: bool,
}

pub fn egorov_certificate(rescaled: &RescaledAnsatz, grid: &SamplingGrid, tau: f64) -> EgorovCertificate {
    let geometry = rescaled.lambda().geometry();
    let mut residuals = rescaled.constraint_residual(grid);
    residuals.extend(crate::ansatz::conservation_residuals(rescaled, grid));
    let mut seen = std::collections::BTreeSet::new();
    residuals.notes.retain(|n| seen.insert(n.clone()));

    let x: Vec<f64> = (0..grid.nx).map(|i| grid.x_node(i, geometry)).collect();
    let y: Vec<f64> = (0..grid.ny).map(|j| grid.y_node(j, geometry)).collect();
    let size = grid.nx * grid.ny;
    let (mut r, mut g, mut h) = (Vec::with_capacity(size), Vec::with_capacity(size), Vec::with_capacity(size));
    for (px, py) in grid.points(geometry) {
        let (fr, fg, fh) = rescaled.conservation_inputs(px, py).fluxes();
        r.push(fr);
        g.push(fg);
        h.push(fh);
    }
    EgorovCertificate {
        degree: rescaled.degree(),
        tau,
        certified: residuals.passes(tau),
        residuals,
        fluxes: FluxGrid {
            nx: grid.nx,
            ny: grid.ny,
            x,
            y,
            r,
            g,
            h,
        },
        degenerate_n1: rescaled.degree() == 1,
    }
}

/// Sup-norms of the differences in the identities linking the conservation
/// laws to the `k = N-1` harmonic balance:
///
/// * `law_i - s_i·display_i - (N-1)·(g, f)_i·div` (`law`)
/// * `display_1 + c·Im E_{N-1}` and `display_2 - c·Re E_{N-1}` with
///   `c = 2N / Λ^{(N-2)/2}` and `Ω` from the rescaled top pair (`harmonic`)
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityDefect {
    pub law: [f64; 2],
    pub harmonic: [f64; 2],
}

impl IdentityDefect {
    pub fn max(&self) -> f64 {
        self.law.iter().chain(&self.harmonic).fold(0.0f64, |m, v| m.max(*v))
    }
}

pub fn harmonic_identity_defect(rescaled: &RescaledAnsatz, grid: &SamplingGrid) -> Result<IdentityDefect> {
    let n = rescaled.degree();
    let nf = n as f64;
    let ansatz = unrescale(rescaled)?;
    let omega = omega_rescaled(rescaled);
    let geometry = rescaled.lambda().geometry();
    let acc = sweep_grid(grid, geometry, 4, |x, y, acc| {
        let inp = rescaled.conservation_inputs(x, y);
        let laws = inp.laws();
        let displays = inp.displays();
        let div = inp.divergence();
        let weights = [inp.g.v, inp.f.v];
        for i in 0..2 {
            let expected = CONSERVATION_SIGNS[i] * displays[i].value + (nf - 1.0) * weights[i] * div;
            acc[i].push(TermSum::new(laws[i].value - expected, laws[i].scale));
        }
        let lam = inp.lambda.v;
        let c = 2.0 * nf / lam.powf((nf - 2.0) / 2.0);
        let a = |m: i64| ansatz.coefficient_jet(m, x, y);
        let (e, _) = crate::ansatz::harmonic_equation(n as i64 - 1, &a, inp.lambda, omega.value(x, y));
        acc[2].push(TermSum::new(displays[0].value + c * e.im, displays[0].scale));
        acc[3].push(TermSum::new(displays[1].value - c * e.re, displays[1].scale));
    });
    let e: Vec<_> = acc.iter().map(|a| a.finish("")).collect();
    Ok(IdentityDefect {
        law: [e[0].sup, e[1].sup],
        harmonic: [e[2].sup, e[3].sup],
    })
}
