#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampled_modal::{design_feedback, discrete_margin, h_tail_for, Mode, Operator, Sector, State, System};

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn sector() -> Sector {
    Sector::new(1.5, 0.5, 1.0).unwrap()
}

/// Random system with `n_unstable` unstable modes stabilized by pole placement and
/// stable modes inside the sector, carrying a small feedback component.
pub fn random_system(r: &mut ChaCha8Rng, n: usize, n_unstable: usize) -> System {
    let s = sector();
    let mut modes = Vec::with_capacity(n);
    let mut ims: Vec<f64> = Vec::new();
    let mut fresh_im = |r: &mut ChaCha8Rng, lo: f64, hi: f64| loop {
        let v: f64 = r.random_range(lo..hi);
        if ims.iter().all(|w| (w - v).abs() > 1e-3) {
            ims.push(v);
            return v;
        }
    };
    for _ in 0..n_unstable.min(n) {
        let im = fresh_im(r, -4.0, 4.0);
        let lam = c(r.random_range(0.1..0.8), im);
        modes.push(Mode::new(lam, c(r.random_range(0.5..1.0), r.random_range(-0.3..0.3)), c(0.0, 0.0)));
    }
    while modes.len() < n {
        let im = fresh_im(r, -20.0, 20.0);
        let edge = -s.upsilon / im.abs().powf(s.alpha);
        let lam = c(edge - r.random_range(0.0..1.5), im);
        let b = c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let f = c(r.random_range(-0.05..0.05), r.random_range(-0.05..0.05));
        modes.push(Mode::new(lam, b, f));
    }
    let sys = System::new(modes, s, 1.0, 1.0).unwrap();
    if n_unstable == 0 {
        return sys;
    }
    let targets: Vec<C> = (0..n_unstable.min(n))
        .map(|k| c(-1.0 - 0.3 * k as f64, r.random_range(-3.0..3.0)))
        .collect();
    let design = design_feedback(&sys, &targets).unwrap();
    let mut f = sys.f();
    for (&idx, &v) in design.unstable_indices.iter().zip(&design.f_plus) {
        f[idx] = v;
    }
    sys.with_feedback(&f).unwrap()
}

/// Random system whose sampled operator is certified at a random `tau`.
pub fn certified(r: &mut ChaCha8Rng, n_max: usize) -> (System, Operator) {
    loop {
        let n = r.random_range(2..=n_max);
        let nu = r.random_range(0..=2.min(n - 1));
        let sys = random_system(r, n, nu);
        let tau = r.random_range(0.05..0.4);
        let op = Operator::new(&sys, tau).unwrap();
        if let Ok(m) = discrete_margin(&op, 256, h_tail_for(&sys, tau)) {
            if m.certifies_exterior() && m.eps_d > 1e-3 {
                return (sys, op);
            }
        }
    }
}

pub fn random_state(r: &mut ChaCha8Rng, n: usize) -> State {
    State::new((0..n).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect())
}

pub fn dense_delta(op: &Operator) -> DMatrix<C> {
    let n = op.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { op.diag()[i] } else { c(0.0, 0.0) };
        d + op.s_vec()[i] * op.f_vec()[j]
    })
}

pub fn dense_closed_loop(sys: &System) -> DMatrix<C> {
    let n = sys.len();
    let l: Vec<C> = sys.lambdas().collect();
    let (b, f) = (sys.b(), sys.f());
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { l[i] } else { c(0.0, 0.0) };
        d + b[i] * f[j]
    })
}

pub fn dense_solve(m: &DMatrix<C>, z: C, x: &[C]) -> DVector<C> {
    let n = m.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { z } else { c(0.0, 0.0) }) - m;
    a.lu().solve(&DVector::from_column_slice(x)).expect("dense solve")
}

pub fn rel_err(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Random point with `lo < |z| <= hi`.
pub fn annulus(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> C {
    let rad = r.random_range(lo..hi);
    let rad = if rad <= lo { hi } else { rad };
    C::from_polar(rad, r.random_range(0.0..std::f64::consts::TAU))
}
