#![allow(dead_code)]

use magtorus::ansatz::RescaledAnsatz;
use magtorus::fields::{random_trig, Axis, ModeCoeff};
use magtorus::{Ansatz, Field, TorusGeometry};
use rand::Rng;

pub fn geom() -> TorusGeometry {
    TorusGeometry::default()
}

pub fn trig(t: &[(i32, i32, f64, f64)]) -> Field {
    let modes: Vec<ModeCoeff> = t.iter().map(|&(m, n, re, im)| ModeCoeff::new(m, n, re, im)).collect();
    Field::trig(&modes, geom()).unwrap()
}

/// Random positive conformal factor, bounded away from zero.
pub fn random_lambda<R: Rng>(rng: &mut R) -> Field {
    random_trig(rng, 4, 2, 0.3, 2.0, geom())
}

pub fn random_field<R: Rng>(rng: &mut R) -> Field {
    let offset = rng.gen_range(-0.5..0.5);
    random_trig(rng, 4, 2, 0.5, offset, geom())
}

/// Generic normalized ansatz of degree `n` with random trig coefficients.
pub fn random_ansatz<R: Rng>(rng: &mut R, n: usize) -> Ansatz {
    let lambda = random_lambda(rng);
    let u = (0..n).map(|_| random_field(rng)).collect();
    let v = (1..n).map(|_| random_field(rng)).collect();
    Ansatz::new(lambda, u, v).unwrap()
}

/// Rescaled ansatz whose top pair is `(ψ_y, -ψ_x)` for a random stream
/// function `ψ`, so `(f_{N-1})_x + (g_{N-1})_y` vanishes identically. For
/// `N = 1` the stream function depends on `y` only.
pub fn stream_rescaled<R: Rng>(rng: &mut R, n: usize) -> RescaledAnsatz {
    let lambda = random_lambda(rng);
    let psi = if n == 1 {
        let a = rng.gen_range(-0.5..0.5);
        let b = rng.gen_range(-0.5..0.5);
        trig(&[(0, 1, a, b), (0, -1, a, -b), (0, 2, b, 0.1), (0, -2, b, -0.1)])
    } else {
        random_field(rng)
    };
    let p = psi.as_trig().unwrap();
    let f_top = Field::from_trig(p.derivative(Axis::Y));
    let g_top = Field::from_trig(p.derivative(Axis::X)).scaled(-1.0);
    let mut f: Vec<Field> = (0..n - 1).map(|_| random_field(rng)).collect();
    f.push(f_top);
    let mut g: Vec<Field> = (1..n - 1).map(|_| random_field(rng)).collect();
    if n >= 2 {
        g.push(g_top);
    }
    RescaledAnsatz::new(lambda, f, g).unwrap()
}
