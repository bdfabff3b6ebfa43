//! Residual norms over sampling grids.

use rayon::prelude::*;
use serde::Serialize;

use crate::fields::{SamplingGrid, TorusGeometry};

/// One pointwise evaluation of an equation: its value and the largest
/// magnitude among the terms it was summed from.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermSum {
    pub value: f64,
    pub scale: f64,
}

impl TermSum {
    pub fn new(value: f64, scale: f64) -> Self {
        Self { value, scale }
    }

    /// Sum of real terms, tracking the largest term magnitude.
    pub fn of(terms: &[f64]) -> Self {
        let value = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        Self { value, scale }
    }

    pub fn relative(&self) -> f64 {
        self.value.abs() / (1.0 + self.scale)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NormAccumulator {
    sup: f64,
    sum_sq: f64,
    rel_sup: f64,
    rel_sum_sq: f64,
    count: usize,
}

impl NormAccumulator {
    pub fn push(&mut self, t: TermSum) {
        let a = t.value.abs();
        let r = t.relative();
        // NaN must not hide behind max()
        self.sup = if a.is_nan() { f64::NAN } else { self.sup.max(a) };
        self.rel_sup = if r.is_nan() { f64::NAN } else { self.rel_sup.max(r) };
        self.sum_sq += a * a;
        self.rel_sum_sq += r * r;
        self.count += 1;
    }

    pub fn merge(mut self, o: NormAccumulator) -> NormAccumulator {
        self.sup = if o.sup.is_nan() { o.sup } else { self.sup.max(o.sup) };
        self.rel_sup = if o.rel_sup.is_nan() { o.rel_sup } else { self.rel_sup.max(o.rel_sup) };
        self.sum_sq += o.sum_sq;
        self.rel_sum_sq += o.rel_sum_sq;
        self.count += o.count;
        self
    }

    pub fn finish(&self, label: impl Into<String>) -> ResidualEntry {
        let n = self.count.max(1) as f64;
        ResidualEntry {
            label: label.into(),
            sup: self.sup,
            l2: (self.sum_sq / n).sqrt(),
            rel_sup: self.rel_sup,
            rel_l2: (self.rel_sum_sq / n).sqrt(),
            samples: self.count,
        }
    }
}

/// Norms of one equation's residual. `l2` is the root mean square over the
/// samples; `rel_*` divide each pointwise residual by one plus its largest term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub label: String,
    pub sup: f64,
    pub l2: f64,
    pub rel_sup: f64,
    pub rel_l2: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
    /// Some input is not globally periodic, so grid checks are local only.
    pub periodicity_caveat: bool,
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn entry(&self, label: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Largest raw sup-norm across entries (NaN if any entry is NaN).
    pub fn max_sup(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, e| {
            if e.sup.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(e.sup)
            }
        })
    }

    pub fn max_rel_sup(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, e| m.max(e.rel_sup))
    }

    /// True when every entry's sup-norm is below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        let m = self.max_sup();
        m.is_finite() && m < tol
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.entries.extend(other.entries);
        self.periodicity_caveat |= other.periodicity_caveat;
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
    }
}

/// Visit every grid node and reduce per-equation norms. `eval` pushes any
/// number of samples per node into the `eqs` accumulators. Rows are
/// processed in parallel.
pub fn sweep_grid<F>(
    grid: &SamplingGrid,
    geometry: TorusGeometry,
    eqs: usize,
    eval: F,
) -> Vec<NormAccumulator>
where
    F: Fn(f64, f64, &mut [NormAccumulator]) + Sync,
{
    (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            let y = grid.y_node(j, geometry);
            let mut acc = vec![NormAccumulator::default(); eqs];
            for i in 0..grid.nx {
                eval(grid.x_node(i, geometry), y, &mut acc);
            }
            acc
        })
        .reduce(
            || vec![NormAccumulator::default(); eqs],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        )
}
