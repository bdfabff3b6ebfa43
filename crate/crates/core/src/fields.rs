//! Smooth scalar fields on the 2-torus.
//!
//! A [`Field`] evaluates a real function of `(x, y)` together with its exact
//! first partial derivatives. Two leaf backends exist: trigonometric
//! polynomials ([`TrigPoly`]) whose derivatives are taken spectrally, and
//! closed-form analytic rules ([`AnalyticRule`]) that carry their own
//! derivative formulas. Sums, products and real powers of fields are
//! differentiated by the product and chain rules, so every composite field
//! keeps exact first derivatives.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fundamental domain `[0, period_x) × [0, period_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    pub period_x: f64,
    pub period_y: f64,
}

impl TorusGeometry {
    pub fn new(period_x: f64, period_y: f64) -> Result<Self> {
        if !(period_x > 0.0 && period_x.is_finite() && period_y > 0.0 && period_y.is_finite()) {
            return Err(Error::Argument(format!(
                "torus periods must be positive and finite, got ({period_x}, {period_y})"
            )));
        }
        Ok(Self { period_x, period_y })
    }

    /// Wave numbers `(2π m / Lx, 2π n / Ly)` of mode `(m, n)`.
    pub fn wave_numbers(&self, m: i32, n: i32) -> (f64, f64) {
        (TAU * m as f64 / self.period_x, TAU * n as f64 / self.period_y)
    }

    /// Reduce a point to the fundamental domain.
    pub fn wrap(&self, x: f64, y: f64) -> (f64, f64) {
        (x.rem_euclid(self.period_x), y.rem_euclid(self.period_y))
    }
}

impl Default for TorusGeometry {
    fn default() -> Self {
        Self {
            period_x: TAU,
            period_y: TAU,
        }
    }
}

/// Value and gradient of a scalar at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        dx: 0.0,
        dy: 0.0,
    };

    pub fn new(v: f64, dx: f64, dy: f64) -> Self {
        Self { v, dx, dy }
    }

    pub fn constant(v: f64) -> Self {
        Self { v, dx: 0.0, dy: 0.0 }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.v, s * self.dx, s * self.dy)
    }

    /// `self^e` on the positive real branch.
    pub fn powf(self, e: f64) -> Self {
        if e == 0.0 {
            return Self::constant(1.0);
        }
        let p = self.v.powf(e);
        let d = e * self.v.powf(e - 1.0);
        Self::new(p, d * self.dx, d * self.dy)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.dx + o.dx, self.dy + o.dy)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.dx - o.dx, self.dy - o.dy)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.dx * o.v + self.v * o.dx,
            self.dy * o.v + self.v * o.dy,
        )
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Complex value and gradient, used for the harmonic coefficients `a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexJet {
    pub v: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
}

impl ComplexJet {
    pub const ZERO: ComplexJet = ComplexJet {
        v: Complex64::new(0.0, 0.0),
        dx: Complex64::new(0.0, 0.0),
        dy: Complex64::new(0.0, 0.0),
    };

    pub fn from_parts(re: Jet, im: Jet) -> Self {
        Self {
            v: Complex64::new(re.v, im.v),
            dx: Complex64::new(re.dx, im.dx),
            dy: Complex64::new(re.dy, im.dy),
        }
    }

    pub fn conj(self) -> Self {
        Self {
            v: self.v.conj(),
            dx: self.dx.conj(),
            dy: self.dy.conj(),
        }
    }
}

/// Anything that can be evaluated pointwise. Fields implement it, and so do
/// value-only evaluators such as the magnetic field derived from an ansatz.
pub trait ScalarMap: Send + Sync {
    fn value(&self, x: f64, y: f64) -> f64;
}

impl<F> ScalarMap for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// One Fourier mode, as serialized in coefficient tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoeff {
    pub m: i32,
    pub n: i32,
    pub re: f64,
    pub im: f64,
}

impl ModeCoeff {
    pub fn new(m: i32, n: i32, re: f64, im: f64) -> Self {
        Self { m, n, re, im }
    }
}

const CONJUGATE_TOL: f64 = 1e-12;

/// Real trigonometric polynomial with a conjugate-complete mode table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    modes: Vec<(i32, i32, Complex64)>,
    geometry: TorusGeometry,
}

impl TrigPoly {
    /// Builds the polynomial from a table, completing missing conjugate modes.
    pub fn new(table: &[ModeCoeff], geometry: TorusGeometry) -> Result<Self> {
        let mut given: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        for c in table {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Construction(format!(
                    "non-finite coefficient at mode ({}, {})",
                    c.m, c.n
                )));
            }
            if given
                .insert((c.m, c.n), Complex64::new(c.re, c.im))
                .is_some()
            {
                return Err(Error::Construction(format!(
                    "mode ({}, {}) listed twice",
                    c.m, c.n
                )));
            }
        }
        let mut full = given.clone();
        for (&(m, n), &c) in &given {
            let tol = CONJUGATE_TOL * (1.0 + c.norm());
            match given.get(&(-m, -n)) {
                Some(&mirror) => {
                    if (mirror - c.conj()).norm() > tol {
                        return Err(Error::Construction(format!(
                            "modes ({m}, {n}) and ({}, {}) are not complex conjugates",
                            -m, -n
                        )));
                    }
                }
                None => {
                    full.insert((-m, -n), c.conj());
                }
            }
        }
        let modes = full
            .into_iter()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|((m, n), c)| (m, n, c))
            .collect();
        Ok(Self { modes, geometry })
    }

    pub fn constant(value: f64, geometry: TorusGeometry) -> Self {
        let modes = if value == 0.0 {
            Vec::new()
        } else {
            vec![(0, 0, Complex64::new(value, 0.0))]
        };
        Self { modes, geometry }
    }

    pub fn modes(&self) -> &[(i32, i32, Complex64)] {
        &self.modes
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    /// Complex trigonometric sum. Its imaginary part vanishes up to roundoff.
    pub fn eval_complex(&self, x: f64, y: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|&(m, n, c)| {
                let (kx, ky) = self.geometry.wave_numbers(m, n);
                c * Complex64::from_polar(1.0, kx * x + ky * y)
            })
            .sum()
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        let mut out = Jet::ZERO;
        for &(m, n, c) in &self.modes {
            let (kx, ky) = self.geometry.wave_numbers(m, n);
            let e = c * Complex64::from_polar(1.0, kx * x + ky * y);
            // d/dx e^{i kx x} = i kx e^{...}; Re(i z) = -Im(z)
            out.v += e.re;
            out.dx -= kx * e.im;
            out.dy -= ky * e.im;
        }
        out
    }

    /// Spectral derivative as a new polynomial.
    pub fn derivative(&self, axis: Axis) -> TrigPoly {
        let modes = self
            .modes
            .iter()
            .filter_map(|&(m, n, c)| {
                let (kx, ky) = self.geometry.wave_numbers(m, n);
                let k = match axis {
                    Axis::X => kx,
                    Axis::Y => ky,
                };
                (k != 0.0).then(|| (m, n, c * Complex64::new(0.0, k)))
            })
            .collect();
        TrigPoly {
            modes,
            geometry: self.geometry,
        }
    }

    fn merged(&self, other: &TrigPoly, scale_other: f64) -> TrigPoly {
        let mut acc: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        for &(m, n, c) in &self.modes {
            *acc.entry((m, n)).or_default() += c;
        }
        for &(m, n, c) in &other.modes {
            *acc.entry((m, n)).or_default() += c * scale_other;
        }
        TrigPoly {
            modes: acc
                .into_iter()
                .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                .map(|((m, n), c)| (m, n, c))
                .collect(),
            geometry: self.geometry,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

type PointFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Closed-form field with explicit derivative rules.
#[derive(Clone)]
pub struct AnalyticRule {
    name: String,
    periodic: bool,
    value: PointFn,
    dx: PointFn,
    dy: PointFn,
}

impl AnalyticRule {
    pub fn new<V, X, Y>(name: impl Into<String>, periodic: bool, value: V, dx: X, dy: Y) -> Self
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        X: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        Y: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            periodic,
            value: Arc::new(value),
            dx: Arc::new(dx),
            dy: Arc::new(dy),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for AnalyticRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticRule")
            .field("name", &self.name)
            .field("periodic", &self.periodic)
            .finish()
    }
}

#[derive(Debug)]
enum Node {
    Trig(TrigPoly),
    Analytic(AnalyticRule),
    Sum(Field, Field),
    Product(Field, Field),
    Scaled(f64, Field),
    Power(Field, f64),
}

/// Which leaf representation a field reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    TrigPoly,
    Analytic,
}

/// Immutable smooth scalar field on the torus. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Field {
    node: Arc<Node>,
    geometry: TorusGeometry,
}

impl Field {
    /// Trigonometric field from a coefficient table.
    pub fn trig(table: &[ModeCoeff], geometry: TorusGeometry) -> Result<Self> {
        Ok(Self::from_trig(TrigPoly::new(table, geometry)?))
    }

    pub fn from_trig(poly: TrigPoly) -> Self {
        let geometry = poly.geometry();
        Self {
            node: Arc::new(Node::Trig(poly)),
            geometry,
        }
    }

    pub fn analytic(rule: AnalyticRule, geometry: TorusGeometry) -> Self {
        Self {
            node: Arc::new(Node::Analytic(rule)),
            geometry,
        }
    }

    pub fn constant(value: f64, geometry: TorusGeometry) -> Self {
        Self::from_trig(TrigPoly::constant(value, geometry))
    }

    pub fn zero(geometry: TorusGeometry) -> Self {
        Self::constant(0.0, geometry)
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    pub fn backend(&self) -> Backend {
        match &*self.node {
            Node::Trig(_) => Backend::TrigPoly,
            _ => Backend::Analytic,
        }
    }

    pub fn as_trig(&self) -> Option<&TrigPoly> {
        match &*self.node {
            Node::Trig(p) => Some(p),
            _ => None,
        }
    }

    /// True when the represented function is known to be doubly periodic.
    pub fn is_periodic(&self) -> bool {
        match &*self.node {
            Node::Trig(_) => true,
            Node::Analytic(r) => r.periodic,
            Node::Sum(a, b) | Node::Product(a, b) => a.is_periodic() && b.is_periodic(),
            Node::Scaled(_, a) | Node::Power(a, _) => a.is_periodic(),
        }
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match &*self.node {
            Node::Trig(p) => p.jet(x, y),
            Node::Analytic(r) => Jet::new((r.value)(x, y), (r.dx)(x, y), (r.dy)(x, y)),
            Node::Sum(a, b) => a.jet(x, y) + b.jet(x, y),
            Node::Product(a, b) => a.jet(x, y) * b.jet(x, y),
            Node::Scaled(s, a) => a.jet(x, y).scale(*s),
            Node::Power(a, e) => a.jet(x, y).powf(*e),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &*self.node {
            Node::Trig(p) => p.jet(x, y).v,
            Node::Analytic(r) => (r.value)(x, y),
            _ => self.jet(x, y).v,
        }
    }

    pub fn d_dx(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).dx
    }

    pub fn d_dy(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).dy
    }

    /// `self^e` (positive real branch), differentiated by the chain rule.
    pub fn powf(&self, e: f64) -> Field {
        if e == 0.0 {
            return Field::constant(1.0, self.geometry);
        }
        if e == 1.0 {
            return self.clone();
        }
        Field {
            node: Arc::new(Node::Power(self.clone(), e)),
            geometry: self.geometry,
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        if let Node::Trig(p) = &*self.node {
            let zero = TrigPoly::constant(0.0, self.geometry);
            return Field::from_trig(zero.merged(p, s));
        }
        Field {
            node: Arc::new(Node::Scaled(s, self.clone())),
            geometry: self.geometry,
        }
    }

    pub fn min_on_grid(&self, grid: &SamplingGrid) -> f64 {
        grid.points(self.geometry)
            .map(|(x, y)| self.eval(x, y))
            .fold(f64::INFINITY, f64::min)
    }
}

impl ScalarMap for Field {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, o: &Field) -> Field {
        if let (Node::Trig(a), Node::Trig(b)) = (&*self.node, &*o.node) {
            return Field::from_trig(a.merged(b, 1.0));
        }
        Field {
            node: Arc::new(Node::Sum(self.clone(), o.clone())),
            geometry: self.geometry,
        }
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, o: &Field) -> Field {
        self + &o.scaled(-1.0)
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, o: &Field) -> Field {
        Field {
            node: Arc::new(Node::Product(self.clone(), o.clone())),
            geometry: self.geometry,
        }
    }
}

/// Derivative of a field as a value-only map, e.g. `Ω = -A'(y)`.
#[derive(Debug, Clone)]
pub struct FieldDerivative {
    field: Field,
    axis: Axis,
    factor: f64,
}

impl FieldDerivative {
    pub fn new(field: Field, axis: Axis, factor: f64) -> Self {
        Self {
            field,
            axis,
            factor,
        }
    }
}

impl ScalarMap for FieldDerivative {
    fn value(&self, x: f64, y: f64) -> f64 {
        let j = self.field.jet(x, y);
        self.factor
            * match self.axis {
                Axis::X => j.dx,
                Axis::Y => j.dy,
            }
    }
}

/// Uniform tensor grid over one fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub nx: usize,
    pub ny: usize,
}

impl SamplingGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Argument(format!(
                "grid needs at least 4 points per axis, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_node(&self, i: usize, geometry: TorusGeometry) -> f64 {
        geometry.period_x * i as f64 / self.nx as f64
    }

    pub fn y_node(&self, j: usize, geometry: TorusGeometry) -> f64 {
        geometry.period_y * j as f64 / self.ny as f64
    }

    /// Nodes in row-major order (`y` outer, `x` inner).
    pub fn points(&self, geometry: TorusGeometry) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| {
            let y = self.y_node(j, geometry);
            (0..self.nx).map(move |i| (self.x_node(i, geometry), y))
        })
    }
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self { nx: 64, ny: 64 }
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &["constant", "linear", "exp_cos_x", "exp_cos_y"];

/// Registered closed-form fields.
///
/// * `constant {value}`
/// * `linear {a, bx, by}`: `a + bx·x + by·y`, periodic only when `bx = by = 0`
/// * `exp_cos_x {scale, amp}` / `exp_cos_y {scale, amp}`: `scale·exp(amp·cos(2πx/Lx))`
pub fn preset(name: &str, params: &BTreeMap<String, f64>, geometry: TorusGeometry) -> Result<Field> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    for key in params.keys() {
        let allowed: &[&str] = match name {
            "constant" => &["value"],
            "linear" => &["a", "bx", "by"],
            "exp_cos_x" | "exp_cos_y" => &["scale", "amp"],
            _ => &[],
        };
        if !allowed.contains(&key.as_str()) && PRESET_NAMES.contains(&name) {
            return Err(Error::Argument(format!(
                "preset `{name}` has no parameter `{key}`"
            )));
        }
    }
    match name {
        "constant" => Ok(Field::constant(get("value", 0.0), geometry)),
        "linear" => {
            let (a, bx, by) = (get("a", 0.0), get("bx", 0.0), get("by", 0.0));
            let periodic = bx == 0.0 && by == 0.0;
            Ok(Field::analytic(
                AnalyticRule::new(
                    "linear",
                    periodic,
                    move |x, y| a + bx * x + by * y,
                    move |_, _| bx,
                    move |_, _| by,
                ),
                geometry,
            ))
        }
        "exp_cos_x" | "exp_cos_y" => {
            let (scale, amp) = (get("scale", 1.0), get("amp", 1.0));
            let along_x = name == "exp_cos_x";
            let k = if along_x {
                TAU / geometry.period_x
            } else {
                TAU / geometry.period_y
            };
            let arg = move |x: f64, y: f64| if along_x { x } else { y };
            let value = move |x: f64, y: f64| scale * (amp * (k * arg(x, y)).cos()).exp();
            let deriv = move |x: f64, y: f64| -amp * k * (k * arg(x, y)).sin() * value(x, y);
            let (dx, dy): (PointFn, PointFn) = if along_x {
                (Arc::new(deriv), Arc::new(|_, _| 0.0))
            } else {
                (Arc::new(|_, _| 0.0), Arc::new(deriv))
            };
            Ok(Field::analytic(
                AnalyticRule {
                    name: name.to_string(),
                    periodic: true,
                    value: Arc::new(value),
                    dx,
                    dy,
                },
                geometry,
            ))
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Random real trigonometric polynomial with at most `max_modes` independent
/// modes, wave numbers in `[-max_wave, max_wave]` and amplitudes up to
/// `amplitude`, shifted by `offset`.
pub fn random_trig<R: Rng + ?Sized>(
    rng: &mut R,
    max_modes: usize,
    max_wave: i32,
    amplitude: f64,
    offset: f64,
    geometry: TorusGeometry,
) -> Field {
    let mut table: BTreeMap<(i32, i32), ModeCoeff> = BTreeMap::new();
    let count = rng.gen_range(1..=max_modes.max(1));
    for _ in 0..1000 {
        if table.len() >= count {
            break;
        }
        let m = rng.gen_range(-max_wave..=max_wave);
        let n = rng.gen_range(-max_wave..=max_wave);
        // one representative per ± pair; the mean is set by `offset`
        if (m, n) == (0, 0) || table.contains_key(&(-m, -n)) || table.contains_key(&(m, n)) {
            continue;
        }
        let re = rng.gen_range(-amplitude..=amplitude) / 2.0;
        let im = rng.gen_range(-amplitude..=amplitude) / 2.0;
        table.insert((m, n), ModeCoeff::new(m, n, re, im));
    }
    let mut modes: Vec<ModeCoeff> = table.into_values().collect();
    if offset != 0.0 {
        modes.push(ModeCoeff::new(0, 0, offset, 0.0));
    }
    Field::trig(&modes, geometry).expect("random table is conjugate consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn geom() -> TorusGeometry {
        TorusGeometry::default()
    }

    fn cos_x() -> Field {
        Field::trig(
            &[ModeCoeff::new(1, 0, 0.5, 0.0), ModeCoeff::new(-1, 0, 0.5, 0.0)],
            geom(),
        )
        .unwrap()
    }

    #[test]
    fn constant_table() {
        let f = Field::trig(&[ModeCoeff::new(0, 0, 2.0, 0.0)], geom()).unwrap();
        assert_eq!(f.eval(0.3, -1.7), 2.0);
        assert_eq!(f.d_dx(0.3, -1.7), 0.0);
    }

    #[test]
    fn cosine_from_euler_identity() {
        let f = cos_x();
        assert!((f.eval(0.0, 0.4) - 1.0).abs() < 1e-15);
        assert!((f.eval(TAU, 0.4) - 1.0).abs() < 1e-15);
        assert!(f.d_dx(0.0, 0.0).abs() < 1e-15);
        assert!((f.d_dx(FRAC_PI_2, 0.0) + 1.0).abs() < 1e-15);
        assert!((f.eval(PI / 3.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_conjugate_is_completed() {
        let f = Field::trig(&[ModeCoeff::new(0, 1, 0.0, -0.5)], geom()).unwrap();
        // -0.5i e^{iy} + 0.5i e^{-iy} = sin y
        for &y in &[0.0, 0.7, 2.0] {
            assert!((f.eval(0.0, y) - y.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn inconsistent_conjugates_rejected() {
        let err = Field::trig(
            &[ModeCoeff::new(1, 2, 0.5, 0.1), ModeCoeff::new(-1, -2, 0.5, 0.1)],
            geom(),
        );
        assert!(matches!(err, Err(Error::Construction(_))));
        let err = Field::trig(&[ModeCoeff::new(0, 0, 1.0, 0.3)], geom());
        assert!(matches!(err, Err(Error::Construction(_))));
    }

    #[test]
    fn analytic_linear_preset() {
        let mut p = BTreeMap::new();
        p.insert("by".to_string(), -1.0);
        let f = preset("linear", &p, geom()).unwrap();
        assert_eq!(f.eval(1.0, 3.0), -3.0);
        assert!(!f.is_periodic());
        assert!(matches!(
            preset("nope", &p, geom()),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn exp_cos_preset_derivative_matches_fd() {
        let mut p = BTreeMap::new();
        p.insert("amp".to_string(), 0.4);
        let f = preset("exp_cos_y", &p, geom()).unwrap();
        let h = 1e-5;
        let (x, y) = (0.3, 1.1);
        let fd = (f.eval(x, y + h) - f.eval(x, y - h)) / (2.0 * h);
        assert!((fd - f.d_dy(x, y)).abs() < 1e-8);
        assert_eq!(f.d_dx(x, y), 0.0);
    }

    #[test]
    fn composite_chain_rule() {
        let lam = &Field::constant(2.0, geom()) + &cos_x();
        let r = lam.powf(-0.5);
        let (x, y) = (0.9f64, 0.0);
        let l = 2.0 + x.cos();
        assert!((r.eval(x, y) - l.powf(-0.5)).abs() < 1e-15);
        assert!((r.d_dx(x, y) - 0.5 * l.powf(-1.5) * x.sin()).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_small() {
        assert!(SamplingGrid::new(3, 10).is_err());
        let g = SamplingGrid::new(4, 5).unwrap();
        assert_eq!(g.points(geom()).count(), 20);
    }

    #[test]
    fn random_field_imaginary_part_vanishes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let f = random_trig(&mut rng, 5, 3, 1.0, 0.5, geom());
            let p = f.as_trig().unwrap();
            for &(x, y) in &[(0.1, 0.2), (3.0, -1.0), (5.5, 4.4)] {
                let z = p.eval_complex(x, y);
                assert!(z.im.abs() < 1e-14);
                assert!((z.re - f.eval(x, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn spectral_derivative_field() {
        let f = Field::trig(&[ModeCoeff::new(0, 1, 0.0, -0.5)], geom()).unwrap();
        let d = Field::from_trig(f.as_trig().unwrap().derivative(Axis::Y));
        assert!((d.eval(0.0, 0.4) - 0.4f64.cos()).abs() < 1e-15);
    }
}
