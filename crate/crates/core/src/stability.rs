//! Numerical certificates for sampled-data stability.
//!
//! Margins are grid certificates: every report carries the grid it was
//! computed on and the tail deduction, so "certified >= eps" and "sampled
//! >= eps" stay distinguishable downstream.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modal::{classify_eigenvalue, SectorClass, TruncatedSystem};
use crate::operator::{transfer_g, transfer_h, SampledOperator};
use crate::scalar::{cone, cx, Cx, Scalar};
use crate::{DISCRETE_MARGIN_REFINE_TOL, MAX_CIRCLE_NODES, MIN_CIRCLE_NODES};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpectrumSplit {
    /// `Re lambda > 0`.
    pub unstable_indices: Vec<usize>,
    /// `C_{-omega}` minus the sector; contains every unstable and on-axis mode.
    pub bad_region_indices: Vec<usize>,
    /// The stable tail: everything outside the bad region.
    pub stable_indices: Vec<usize>,
}

/// In modal coordinates the spectral projection onto the unstable part is
/// coordinate selection, so no contour integral is needed.
pub fn split_spectrum<T: Scalar>(sys: &TruncatedSystem<T>) -> SpectrumSplit {
    let mut split = SpectrumSplit::default();
    for (n, l) in sys.lambdas().enumerate() {
        if l.re > T::zero() {
            split.unstable_indices.push(n);
        }
        match classify_eigenvalue(l, &sys.sector) {
            SectorClass::StableSector => split.stable_indices.push(n),
            SectorClass::BadRegion | SectorClass::OnAxis => split.bad_region_indices.push(n),
        }
    }
    split
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMargin<T: Scalar> {
    /// `min (|1 - G| - tail)` over the grid, the probes and the point at infinity.
    pub eps_c: T,
    pub raw_min: T,
    pub argmin: Cx<T>,
    /// Largest tail bound deducted; 0 when unavailable.
    pub tail_bound: T,
    /// Tail data was missing so the margin covers the truncation only.
    pub truncation_only: bool,
    pub points: usize,
    /// Grid points moved off a pole.
    pub nudged: usize,
}

const POLE_NUDGE: f64 = 1e-9;

pub fn continuous_margin<T: Scalar>(
    sys: &TruncatedSystem<T>,
    axis_grid: &[T],
    half_plane_probes: &[Cx<T>],
) -> Result<ContinuousMargin<T>> {
    if let Some(p) = half_plane_probes.iter().find(|p| p.re < T::zero()) {
        return Err(Error::InvalidParameter(format!("probe {p} is outside the closed right half-plane")));
    }
    // point at infinity: G -> 0
    let mut best = ContinuousMargin {
        eps_c: T::one(),
        raw_min: T::one(),
        argmin: cx(T::zero(), T::infinity()),
        tail_bound: T::zero(),
        truncation_only: false,
        points: 1,
        nudged: 0,
    };
    let points = axis_grid.iter().map(|&w| cx(T::zero(), w)).chain(half_plane_probes.iter().copied());
    for mut lambda in points {
        let mut attempts = 0;
        let g = loop {
            match transfer_g(lambda, sys) {
                Ok(v) => break v,
                Err(Error::PoleHit(_)) if attempts < 8 => {
                    attempts += 1;
                    lambda.im = lambda.im + T::lit(POLE_NUDGE) * (T::one() + lambda.im.abs());
                }
                Err(e) => return Err(e),
            }
        };
        if attempts > 0 {
            best.nudged += 1;
        }
        best.points += 1;
        let tail = match g.tail_bound {
            Some(t) => t,
            None => {
                best.truncation_only = true;
                T::zero()
            }
        };
        best.tail_bound = best.tail_bound.max(tail);
        let raw = (cone::<T>() - g.value).norm();
        if raw - tail < best.eps_c {
            best.eps_c = raw - tail;
            best.argmin = lambda;
        }
        best.raw_min = best.raw_min.min(raw);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMargin<T: Scalar> {
    /// `min (|1 - H_tau(e^{i theta})| - tail)` on the final circle grid.
    pub eps_d: T,
    pub raw_min: T,
    pub argmin_theta: T,
    pub tail_bound: T,
    pub truncation_only: bool,
    pub nodes_used: usize,
    /// Decrease of the minimum at the last doubling.
    pub last_change: T,
    pub converged: bool,
    /// Zeros of `1 - H_tau` in `|z| > 1` from the argument principle.
    pub exterior_zeros: i64,
    /// Poles of `H_tau` in `|z| > 1` (coupled modes with `|d_n| > 1`).
    pub exterior_poles: usize,
    /// Largest argument increment between neighbouring nodes; the winding count
    /// is trustworthy when this stays well below pi.
    pub max_arg_step: T,
}

impl<T: Scalar> DiscreteMargin<T> {
    /// Positive margin with no closed-loop eigenvalue outside the unit disk.
    pub fn certifies_exterior(&self) -> bool {
        self.eps_d > T::zero() && self.exterior_zeros == 0 && self.max_arg_step < T::lit(PI / 2.0)
    }
}

pub fn discrete_margin<T: Scalar>(
    op: &SampledOperator<T>,
    circle_nodes: usize,
    h_tail: Option<T>,
) -> Result<DiscreteMargin<T>> {
    if circle_nodes < MIN_CIRCLE_NODES {
        return Err(Error::InvalidParameter(format!("circle_nodes must be >= {MIN_CIRCLE_NODES}")));
    }
    let mut exterior_poles = 0;
    for &(n, _) in op.coupling() {
        let r = op.diag()[n].norm();
        if (r - T::one()).abs() < T::lit(2.0 * crate::POLE_REL_TOL) {
            return Err(Error::PoleOnCircle(n));
        }
        if r > T::one() {
            exterior_poles += 1;
        }
    }
    let (tail, truncation_only) = match h_tail {
        Some(t) => (t, false),
        None => (T::zero(), op.has_feedback()),
    };
    let eval = |j: usize, n: usize| -> Result<Cx<T>> {
        let theta = T::lit(2.0 * PI * j as f64 / n as f64);
        let z = Cx::from_polar(T::one(), theta);
        Ok(cone::<T>() - transfer_h(op, z, None)?.value)
    };

    let mut n = circle_nodes;
    let mut values = (0..n).map(|j| eval(j, n)).collect::<Result<Vec<_>>>()?;
    let argmin_of = |v: &[Cx<T>]| {
        v.iter()
            .enumerate()
            .fold((T::infinity(), 0usize), |(m, a), (j, c)| if c.norm() < m { (c.norm(), j) } else { (m, a) })
    };
    let (mut min, mut arg) = argmin_of(&values);
    let mut last_change = T::infinity();
    let mut converged = false;
    while n < MAX_CIRCLE_NODES {
        let m = 2 * n;
        let odd = (0..n).map(|j| eval(2 * j + 1, m)).collect::<Result<Vec<_>>>()?;
        let mut merged = Vec::with_capacity(m);
        for (e, o) in values.iter().zip(&odd) {
            merged.push(*e);
            merged.push(*o);
        }
        values = merged;
        n = m;
        let (new_min, new_arg) = argmin_of(&values);
        last_change = min - new_min;
        min = new_min;
        arg = new_arg;
        if last_change < T::lit(DISCRETE_MARGIN_REFINE_TOL) {
            converged = true;
            break;
        }
    }

    // argument principle on the exterior: zeros - poles = -winding(theta increasing)
    let mut winding = T::zero();
    let mut max_step = T::zero();
    for j in 0..n {
        let a = values[j];
        let b = values[(j + 1) % n];
        let step = (b / a).arg();
        max_step = max_step.max(step.abs());
        winding = winding + step;
    }
    let wind = (winding / T::lit(2.0 * PI)).round().to_i64().unwrap_or(i64::MAX);
    Ok(DiscreteMargin {
        eps_d: min - tail,
        raw_min: min,
        argmin_theta: T::lit(2.0 * PI * arg as f64 / n as f64),
        tail_bound: tail,
        truncation_only,
        nodes_used: n,
        last_change,
        converged,
        exterior_zeros: exterior_poles as i64 - wind,
        exterior_poles,
        max_arg_step: max_step,
    })
}

/// Minimum of `|1 - H_tau(z)| - tail` over arbitrary exterior sample points.
pub fn exterior_min<T: Scalar>(op: &SampledOperator<T>, h_tail: Option<T>, samples: &[Cx<T>]) -> Result<T> {
    let tail = h_tail.unwrap_or(T::zero());
    let mut min = T::infinity();
    for &z in samples {
        let h = transfer_h(op, z, None)?;
        min = min.min((cone::<T>() - h.value).norm() - tail);
    }
    Ok(min)
}

/// `M_1 = sup |(1 - e^lambda)/lambda|` over `-1 <= Re lambda <= 0`, `|Im lambda| <= pi`,
/// sampled on a 2001 x 2001 grid together with the limit value 1 at the origin.
pub fn holomorphic_bound_m1() -> f64 {
    static M1: OnceLock<f64> = OnceLock::new();
    *M1.get_or_init(|| {
        const GRID: usize = 2001;
        let mut best = 1.0f64;
        for i in 0..GRID {
            let re = -1.0 + i as f64 / (GRID - 1) as f64;
            for j in 0..GRID {
                let im = -PI + 2.0 * PI * j as f64 / (GRID - 1) as f64;
                let l = Complex64::new(re, im);
                if l.norm() == 0.0 {
                    continue;
                }
                let g = ((Complex64::new(1.0, 0.0) - l.exp()) / l).norm();
                best = best.max(g);
            }
        }
        best
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants<T: Scalar> {
    /// `min |lambda_n|` over the stable tail.
    pub kappa: T,
    /// `min |lambda_n|` over every mode.
    pub kappa_all: T,
    pub m1: T,
    pub upsilon1: T,
    pub upsilon2: T,
    pub upsilon0: T,
    pub alpha_tilde: T,
    pub c1: T,
    pub tau: T,
}

/// Distance between the sampled bad-region eigenvalues and the circle band `1 <= |z| < r1`.
///
/// Returns `(c1, r1)`. `r1` sits halfway to the nearest sampled unstable
/// eigenvalue; both are infinite when the bad region is empty.
pub fn sampling_gap<T: Scalar>(sys: &TruncatedSystem<T>, tau: T) -> (T, T) {
    let split = split_spectrum(sys);
    let radii: Vec<T> = split
        .bad_region_indices
        .iter()
        .map(|&n| sys.modes()[n].lambda.scale(tau).exp().norm())
        .collect();
    let outer = radii.iter().copied().filter(|&r| r > T::one()).fold(T::infinity(), T::min);
    let r1 = if outer.is_finite() { T::one() + (outer - T::one()) / T::lit(2.0) } else { T::infinity() };
    let c1 = radii
        .iter()
        .map(|&r| if r > T::one() { r - r1 } else { T::one() - r })
        .fold(T::infinity(), T::min);
    (c1, r1)
}

pub fn gamma_constants<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau: T,
    alpha_tilde: T,
    c1: T,
) -> Result<BoundConstants<T>> {
    let sector = sys.sector;
    if !(alpha_tilde >= sector.alpha) {
        return Err(Error::InvalidParameter(format!("alpha_tilde {alpha_tilde} < alpha {}", sector.alpha)));
    }
    if !(tau > T::zero()) || !(c1 > T::zero()) {
        return Err(Error::InvalidParameter("tau and c1 must be positive".into()));
    }
    let split = split_spectrum(sys);
    let kappa = split
        .stable_indices
        .iter()
        .map(|&n| sys.modes()[n].lambda.norm())
        .fold(T::infinity(), T::min);
    if !kappa.is_finite() {
        return Err(Error::EmptyStableTail);
    }
    let kappa_all = sys.lambdas().map(|l| l.norm()).fold(T::infinity(), T::min);
    let m1 = T::lit(holomorphic_bound_m1());
    let e = T::lit(E);
    let one_minus = T::one() - T::lit((-1f64).exp());
    let upsilon1 = (T::lit(2.0) / (one_minus * kappa)).max(e * m1 / sector.omega);
    let upsilon2 = e * m1 / (sector.upsilon * kappa.powf(alpha_tilde - sector.alpha));
    let ka = kappa_all.powf(sector.alpha);
    let upsilon0 = (T::one() / (c1 * ka))
        .max(T::one() / (one_minus * ka))
        .max(e / (tau * sector.omega * ka))
        .max(e / (tau * sector.upsilon));
    Ok(BoundConstants { kappa, kappa_all, m1, upsilon1, upsilon2, upsilon0, alpha_tilde, c1, tau })
}

/// Tail bound on `|H_tau(z)|` from the discarded modes, valid for `|z| >= 1`.
///
/// Uses the per-mode bound with `alpha_tilde = beta + gamma` and Cauchy-Schwarz.
pub fn h_tail_bound<T: Scalar>(sys: &TruncatedSystem<T>, constants: &BoundConstants<T>) -> Option<T> {
    let t = &sys.tails;
    if !sys.tail_in_sector || sys.beta + sys.gamma < sys.sector.alpha {
        return None;
    }
    if (constants.alpha_tilde - (sys.beta + sys.gamma)).abs() > T::lit(1e-12) {
        return None;
    }
    let plain = (t.b_sq? * t.f_sq?).sqrt();
    let weighted = (t.b_beta_sq? * t.f_gamma_sq?).sqrt();
    Some(constants.upsilon1 * plain + constants.upsilon2 * weighted)
}

/// H-tail bound for `sys` at any sampling period, `None` when it cannot be certified.
pub fn h_tail_for<T: Scalar>(sys: &TruncatedSystem<T>, tau: T) -> Option<T> {
    let t = &sys.tails;
    let zero = Some(T::zero());
    if t.f_sq == zero && t.f_gamma_sq == zero || t.b_sq == zero && t.b_beta_sq == zero {
        return zero;
    }
    let alpha_tilde = sys.beta + sys.gamma;
    let (c1, _) = sampling_gap(sys, tau);
    let c1 = if c1.is_finite() { c1 } else { T::one() };
    let constants = gamma_constants(sys, tau, alpha_tilde, c1).ok()?;
    h_tail_bound(sys, &constants)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBoundCheck<T: Scalar> {
    /// `max (LHS - RHS)`; any positive value is a bug.
    pub max_violation: T,
    pub worst_mode: usize,
    pub worst_z: Cx<T>,
    pub evaluated: usize,
}

fn mode_bound_gap<T: Scalar>(lambda: Cx<T>, tau: T, z: Cx<T>, c: &BoundConstants<T>) -> T {
    let d = lambda.scale(tau).exp();
    let lhs = ((cone::<T>() - d) / (z - d)).norm() / lambda.norm();
    let rhs = c.upsilon1.max(c.upsilon2 * lambda.norm().powf(c.alpha_tilde));
    lhs - rhs
}

/// Checks the per-mode bound on explicit `(mode, z)` pairs. Modes outside the
/// stable tail and points inside the unit disk are rejected.
pub fn verify_mode_bound_pairs<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau: T,
    pairs: &[(usize, Cx<T>)],
    constants: &BoundConstants<T>,
) -> Result<ModeBoundCheck<T>> {
    let split = split_spectrum(sys);
    let mut stable = vec![false; sys.len()];
    for &n in &split.stable_indices {
        stable[n] = true;
    }
    let mut out = ModeBoundCheck {
        max_violation: T::neg_infinity(),
        worst_mode: 0,
        worst_z: cone(),
        evaluated: 0,
    };
    for &(n, z) in pairs {
        if n >= sys.len() || !stable[n] {
            return Err(Error::InvalidParameter(format!("mode {n} is not in the stable tail")));
        }
        if z.norm() < T::one() {
            return Err(Error::InvalidParameter(format!("sample {z} lies inside the unit disk")));
        }
        let gap = mode_bound_gap(sys.modes()[n].lambda, tau, z, constants);
        out.evaluated += 1;
        if gap > out.max_violation {
            out.max_violation = gap;
            out.worst_mode = n;
            out.worst_z = z;
        }
    }
    Ok(out)
}

/// Every stable-tail mode against every sample.
pub fn verify_mode_bound<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau: T,
    z_samples: &[Cx<T>],
    constants: &BoundConstants<T>,
) -> Result<ModeBoundCheck<T>> {
    let pairs: Vec<_> = split_spectrum(sys)
        .stable_indices
        .iter()
        .flat_map(|&n| z_samples.iter().map(move |&z| (n, z)))
        .collect();
    verify_mode_bound_pairs(sys, tau, &pairs, constants)
}

/// `tau (lambda_n - lambda_m)` avoids `2 pi i l`, `l != 0`, for every pair of unstable modes.
pub fn check_nonresonance<T: Scalar>(sys: &TruncatedSystem<T>, tau: T) -> bool {
    let unstable: Vec<Cx<T>> = split_spectrum(sys)
        .unstable_indices
        .iter()
        .map(|&n| sys.modes()[n].lambda)
        .collect();
    if unstable.len() < 2 {
        return true;
    }
    let mut max_gap = T::zero();
    for (i, a) in unstable.iter().enumerate() {
        for b in &unstable[i + 1..] {
            max_gap = max_gap.max((*a - *b).norm());
        }
    }
    let two_pi = T::lit(2.0 * PI);
    let l_max = (tau * max_gap / two_pi).ceil().to_i64().unwrap_or(0) + 1;
    let tol = T::lit(1e-9) * (T::one() + tau * max_gap);
    for (i, a) in unstable.iter().enumerate() {
        for b in &unstable[i + 1..] {
            let w = (*a - *b).scale(tau);
            for l in -l_max..=l_max {
                if l == 0 {
                    continue;
                }
                let hit = w - cx(T::zero(), two_pi * T::lit(l as f64));
                if hit.norm() <= tol {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackDesign<T: Scalar> {
    pub unstable_indices: Vec<usize>,
    /// Feedback coefficients on the unstable modes, in `unstable_indices` order.
    pub f_plus: Vec<Cx<T>>,
    /// Full-length feedback vector, zero outside the unstable modes.
    pub full_f: Vec<Cx<T>>,
    pub closed_loop_eigenvalues: Vec<Cx<T>>,
    /// Largest distance between a target and its matched closed-loop eigenvalue.
    pub max_target_error: T,
    /// 1-norm condition number of the Cauchy matrix.
    pub cauchy_condition: T,
    pub ill_conditioned: bool,
    pub hurwitz: bool,
}

const CAUCHY_CONDITION_WARN: f64 = 1e8;

fn to_c64<T: Scalar>(c: Cx<T>) -> Complex64 {
    Complex64::new(c.re.as_f64(), c.im.as_f64())
}

fn from_c64<T: Scalar>(c: Complex64) -> Cx<T> {
    cx(T::lit(c.re), T::lit(c.im))
}

fn closed_under_conjugation(v: &[Complex64]) -> bool {
    let tol = 1e-12;
    v.iter().all(|a| v.iter().any(|b| (a.conj() - b).norm() <= tol * (1.0 + a.norm())))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Places the unstable part of the spectrum at `target_poles`.
///
/// `det(sI - diag(lambda) - b f^T) = prod(s - lambda_i) (1 - sum b_i f_i / (s - lambda_i))`,
/// so the products `g_i = b_i f_i` solve the Cauchy system
/// `sum_i g_i / (mu_j - lambda_i) = 1` for every target `mu_j`.
pub fn design_feedback<T: Scalar>(sys: &TruncatedSystem<T>, target_poles: &[Cx<T>]) -> Result<FeedbackDesign<T>> {
    let unstable = split_spectrum(sys).unstable_indices;
    let m = unstable.len();
    if target_poles.len() != m {
        return Err(Error::SizeMismatch(format!("{} targets for {m} unstable modes", target_poles.len())));
    }
    let mut full_f = vec![Cx::new(T::zero(), T::zero()); sys.len()];
    if m == 0 {
        return Ok(FeedbackDesign {
            unstable_indices: unstable,
            f_plus: vec![],
            full_f,
            closed_loop_eigenvalues: vec![],
            max_target_error: T::zero(),
            cauchy_condition: T::one(),
            ill_conditioned: false,
            hurwitz: true,
        });
    }
    let lam: Vec<Complex64> = unstable.iter().map(|&n| to_c64(sys.modes()[n].lambda)).collect();
    let b: Vec<Complex64> = unstable.iter().map(|&n| to_c64(sys.modes()[n].b_coeff)).collect();
    let mu: Vec<Complex64> = target_poles.iter().map(|&t| to_c64(t)).collect();
    if let Some(i) = b.iter().position(|c| c.norm() == 0.0) {
        return Err(Error::Uncontrollable(unstable[i]));
    }
    if let Some(t) = mu.iter().find(|t| t.re >= 0.0) {
        return Err(Error::InvalidParameter(format!("target {t} is not in the open left half-plane")));
    }
    if closed_under_conjugation(&lam) && !closed_under_conjugation(&mu) {
        return Err(Error::InvalidParameter("targets must be closed under conjugation".into()));
    }
    for (j, a) in mu.iter().enumerate() {
        if mu[..j].iter().any(|b| (a - b).norm() == 0.0) {
            return Err(Error::SingularDesign(format!("repeated target {a}")));
        }
        if lam.iter().any(|l| (a - l).norm() == 0.0) {
            return Err(Error::SingularDesign(format!("target {a} equals an open-loop eigenvalue")));
        }
    }
    let cauchy = DMatrix::from_fn(m, m, |j, i| Complex64::new(1.0, 0.0) / (mu[j] - lam[i]));
    let inverse = cauchy
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign("Cauchy matrix not invertible".into()))?;
    let condition = one_norm(&cauchy) * one_norm(&inverse);
    let ones = nalgebra::DVector::from_element(m, Complex64::new(1.0, 0.0));
    let g = &inverse * ones;
    let f_plus: Vec<Complex64> = g.iter().zip(&b).map(|(gi, bi)| gi / bi).collect();

    let closed = DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { lam[i] } else { Complex64::new(0.0, 0.0) };
        diag + b[i] * f_plus[j]
    });
    let eigs: Vec<Complex64> = closed
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::SingularDesign("closed-loop eigenvalue computation failed".into()))?
        .iter()
        .copied()
        .collect();
    let mut used = vec![false; m];
    let mut max_err = 0.0f64;
    for t in &mu {
        let (k, d) = eigs
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, e)| (k, (e - t).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        used[k] = true;
        max_err = max_err.max(d);
    }
    for (&n, fi) in unstable.iter().zip(&f_plus) {
        full_f[n] = from_c64(*fi);
    }
    Ok(FeedbackDesign {
        unstable_indices: unstable,
        f_plus: f_plus.iter().map(|&c| from_c64(c)).collect(),
        full_f,
        hurwitz: eigs.iter().all(|e| e.re < 0.0),
        closed_loop_eigenvalues: eigs.iter().map(|&c| from_c64(c)).collect(),
        max_target_error: T::lit(max_err),
        cauchy_condition: T::lit(condition),
        ill_conditioned: condition > CAUCHY_CONDITION_WARN,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauRow<T: Scalar> {
    pub tau: T,
    pub margin: DiscreteMargin<T>,
    pub nonresonant: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauStarReport<T: Scalar> {
    pub floor: T,
    pub rows: Vec<TauRow<T>>,
    /// Largest grid value of the passing prefix; an estimate, not a bound.
    pub tau_star_estimate: Option<T>,
}

pub fn estimate_tau_star<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau_grid: &[T],
    eps_d_floor: T,
    circle_nodes: usize,
) -> Result<TauStarReport<T>> {
    if tau_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("tau grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(tau_grid.len());
    let mut prefix_open = true;
    let mut tau_star = None;
    for &tau in tau_grid {
        let op = SampledOperator::new(sys, tau)?;
        let margin = discrete_margin(&op, circle_nodes, h_tail_for(sys, tau))?;
        let nonresonant = check_nonresonance(sys, tau);
        let pass = margin.eps_d >= eps_d_floor && nonresonant && margin.certifies_exterior();
        if prefix_open && pass {
            tau_star = Some(tau);
        } else {
            prefix_open = false;
        }
        rows.push(TauRow { tau, margin, nonresonant, pass });
    }
    Ok(TauStarReport { floor: eps_d_floor, rows, tau_star_estimate: tau_star })
}

/// Summary of the margin certificates for one `(system, tau)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport<T: Scalar> {
    pub eps_c: T,
    pub eps_d: T,
    pub tau: T,
    pub nonresonant: bool,
    pub tau_star_estimate: Option<T>,
    pub axis_points: usize,
    pub circle_nodes: usize,
    pub truncation_only: bool,
}

impl<T: Scalar> MarginReport<T> {
    pub fn new(
        cont: &ContinuousMargin<T>,
        disc: &DiscreteMargin<T>,
        tau: T,
        nonresonant: bool,
        tau_star_estimate: Option<T>,
    ) -> Self {
        Self {
            eps_c: cont.eps_c,
            eps_d: disc.eps_d,
            tau,
            nonresonant,
            tau_star_estimate,
            axis_points: cont.points,
            circle_nodes: disc.nodes_used,
            truncation_only: cont.truncation_only || disc.truncation_only,
        }
    }
}
