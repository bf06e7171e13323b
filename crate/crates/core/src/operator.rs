//! Exact modal application of the semigroup, the sampled input map, the
//! feedback functional and the discretized operator `Delta(tau) = T(tau) + S(tau) F`.
//!
//! `Delta(tau)` is diagonal plus rank one, so one step, one resolvent solve
//! and one transfer-function evaluation all cost O(N).

use crate::error::{Error, Result};
use crate::modal::TruncatedSystem;
use crate::scalar::{cone, czero, near_pole, phi1, Cx, Scalar};
use crate::state::StateVec;
use crate::SMW_DENOMINATOR_TOL;

pub fn apply_semigroup<T: Scalar>(t: T, x: &StateVec<T>, sys: &TruncatedSystem<T>) -> Result<StateVec<T>> {
    if !(t >= T::zero()) {
        return Err(Error::NegativeTime(t.as_f64()));
    }
    x.check_len(sys.len())?;
    let coeffs = sys.lambdas().zip(x.coeffs()).map(|(l, &xn)| (l.scale(t)).exp() * xn).collect();
    Ok(StateVec::new(coeffs))
}

/// `S(tau)u = int_0^tau T(s) b u ds`, with the limit `tau b_n u` at `lambda_n = 0`.
pub fn apply_input_map<T: Scalar>(tau: T, u: Cx<T>, sys: &TruncatedSystem<T>) -> Result<StateVec<T>> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let coeffs = sys.modes().iter().map(|m| m.b_coeff * phi1(tau, m.lambda) * u).collect();
    Ok(StateVec::new(coeffs))
}

/// `Fx = sum_n x_n f_n`; `f_n` already stores `<phi_n, f>`, so no conjugation.
pub fn apply_feedback<T: Scalar>(x: &StateVec<T>, sys: &TruncatedSystem<T>) -> Result<Cx<T>> {
    x.check_len(sys.len())?;
    Ok(sys
        .modes()
        .iter()
        .zip(x.coeffs())
        .fold(czero(), |acc, (m, &xn)| acc + xn * m.f_coeff))
}

/// `Delta(tau)` in modal coordinates: `diag(d) + s f^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledOperator<T: Scalar> {
    tau: T,
    diag: Vec<Cx<T>>,
    s_vec: Vec<Cx<T>>,
    f_vec: Vec<Cx<T>>,
    /// `(n, f_n s_n)` for every mode that actually enters `H_tau`.
    coupling: Vec<(usize, Cx<T>)>,
}

impl<T: Scalar> SampledOperator<T> {
    pub fn new(sys: &TruncatedSystem<T>, tau: T) -> Result<Self> {
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let diag = sys.lambdas().map(|l| l.scale(tau).exp()).collect();
        let s_vec = sys.modes().iter().map(|m| m.b_coeff * phi1(tau, m.lambda)).collect();
        Self::from_parts(tau, diag, s_vec, sys.f())
    }

    /// Direct construction from `d`, `s`, `f`; used for adjoints and test fixtures.
    pub fn from_parts(tau: T, diag: Vec<Cx<T>>, s_vec: Vec<Cx<T>>, f_vec: Vec<Cx<T>>) -> Result<Self> {
        let n = diag.len();
        for v in [&s_vec, &f_vec] {
            if v.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: v.len() });
            }
        }
        let coupling = s_vec
            .iter()
            .zip(&f_vec)
            .enumerate()
            .map(|(i, (&s, &f))| (i, f * s))
            .filter(|(_, c)| c.norm_sqr() > T::zero())
            .collect();
        Ok(Self { tau, diag, s_vec, f_vec, coupling })
    }

    /// `Delta^* = diag(conj d) + conj(f) conj(s)^T`.
    pub fn adjoint(&self) -> Self {
        let conj = |v: &[Cx<T>]| v.iter().map(|c| c.conj()).collect::<Vec<_>>();
        Self::from_parts(self.tau, conj(&self.diag), conj(&self.f_vec), conj(&self.s_vec))
            .expect("adjoint preserves lengths")
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[Cx<T>] {
        &self.diag
    }

    pub fn s_vec(&self) -> &[Cx<T>] {
        &self.s_vec
    }

    pub fn f_vec(&self) -> &[Cx<T>] {
        &self.f_vec
    }

    pub fn has_feedback(&self) -> bool {
        !self.coupling.is_empty()
    }

    pub(crate) fn coupling(&self) -> &[(usize, Cx<T>)] {
        &self.coupling
    }

    fn dot_f(&self, x: &[Cx<T>]) -> Cx<T> {
        self.f_vec.iter().zip(x).fold(czero(), |acc, (&f, &xn)| acc + f * xn)
    }
}

pub fn apply_delta<T: Scalar>(op: &SampledOperator<T>, x: &StateVec<T>) -> Result<StateVec<T>> {
    x.check_len(op.len())?;
    let fx = op.dot_f(x.coeffs());
    let coeffs = op
        .diag
        .iter()
        .zip(&op.s_vec)
        .zip(x.coeffs())
        .map(|((&d, &s), &xn)| d * xn + s * fx)
        .collect();
    Ok(StateVec::new(coeffs))
}

/// Streaming orbit `x_{k+1} = Delta x_k`.
///
/// Holds exactly one state; each step is one fused pass that produces the
/// next state, its norm and the next feedback value.
#[derive(Debug, Clone)]
pub struct Orbit<'a, T: Scalar> {
    op: &'a SampledOperator<T>,
    state: Vec<Cx<T>>,
    fx: Cx<T>,
    norm: T,
    k: usize,
    k_max: usize,
}

impl<'a, T: Scalar> Orbit<'a, T> {
    pub fn new(op: &'a SampledOperator<T>, x0: &StateVec<T>, k_max: usize) -> Result<Self> {
        x0.check_len(op.len())?;
        Ok(Self {
            op,
            fx: op.dot_f(x0.coeffs()),
            norm: x0.norm(),
            state: x0.coeffs().to_vec(),
            k: 0,
            k_max,
        })
    }

    /// Index of the state currently held.
    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn state(&self) -> StateVec<T> {
        StateVec::new(self.state.clone())
    }

    pub fn state_coeffs(&self) -> &[Cx<T>] {
        &self.state
    }

    pub fn feedback_value(&self) -> Cx<T> {
        self.fx
    }

    fn advance(&mut self) {
        let fx = self.fx;
        let mut next_fx = czero();
        let mut norm_sq = T::zero();
        for (((xn, &d), &s), &f) in self.state.iter_mut().zip(&self.op.diag).zip(&self.op.s_vec).zip(&self.op.f_vec) {
            let y = d * *xn + s * fx;
            *xn = y;
            next_fx += f * y;
            norm_sq = norm_sq + y.norm_sqr();
        }
        self.fx = next_fx;
        self.norm = norm_sq.sqrt();
        self.k += 1;
    }
}

impl<T: Scalar> Iterator for Orbit<'_, T> {
    /// `(k, ||x_k||)`
    type Item = (usize, T);

    fn next(&mut self) -> Option<(usize, T)> {
        if self.k > self.k_max {
            return None;
        }
        if self.k == self.k_max {
            let out = (self.k, self.norm);
            self.k += 1;
            return Some(out);
        }
        let out = (self.k, self.norm);
        self.advance();
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord<T: Scalar> {
    /// `||x_k||` for `k = 0..=K`.
    pub norms: Vec<T>,
    /// `(k, x_k)` for every `k` divisible by the requested stride.
    pub states: Vec<(usize, StateVec<T>)>,
}

/// Runs `k_max` steps. States are kept only when `state_stride` is given.
pub fn delta_orbit<T: Scalar>(
    op: &SampledOperator<T>,
    x0: &StateVec<T>,
    k_max: usize,
    state_stride: Option<usize>,
) -> Result<OrbitRecord<T>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("orbit length must be >= 1".into()));
    }
    let mut orbit = Orbit::new(op, x0, k_max)?;
    let mut norms = Vec::with_capacity(k_max + 1);
    let mut states = Vec::new();
    loop {
        let k = orbit.step_index();
        if let Some(stride) = state_stride {
            if stride > 0 && k % stride == 0 && k <= k_max {
                states.push((k, orbit.state()));
            }
        }
        match orbit.next() {
            Some((_, n)) => norms.push(n),
            None => break,
        }
    }
    Ok(OrbitRecord { norms, states })
}

/// Transfer-function value together with a certified bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferValue<T: Scalar> {
    pub value: Cx<T>,
    /// `None` when no rigorous bound is available at this point.
    pub tail_bound: Option<T>,
}

/// Tail bound for `G` on the closed right half-plane from `|lambda - lambda_n| >= |Re lambda_n|`.
pub fn g_tail_bound<T: Scalar>(sys: &TruncatedSystem<T>) -> Option<T> {
    Some((sys.tails.b_re_sq? * sys.tails.f_re_sq?).sqrt())
}

/// `G(lambda) = sum b_n f_n / (lambda - lambda_n)`.
pub fn transfer_g<T: Scalar>(lambda: Cx<T>, sys: &TruncatedSystem<T>) -> Result<TransferValue<T>> {
    let mut value = czero();
    for (n, m) in sys.modes().iter().enumerate() {
        let bf = m.b_coeff * m.f_coeff;
        if bf.norm_sqr() == T::zero() {
            continue;
        }
        if near_pole(lambda, m.lambda) {
            return Err(Error::PoleHit(n));
        }
        value += bf / (lambda - m.lambda);
    }
    let tail_bound = if lambda.re >= T::zero() { g_tail_bound(sys) } else { None };
    Ok(TransferValue { value, tail_bound })
}

/// `H_tau(z) = F (zI - T(tau))^{-1} S(tau) = sum f_n s_n / (z - d_n)`.
///
/// `h_tail` is the `z`-independent tail bound valid on `|z| >= 1`.
pub fn transfer_h<T: Scalar>(op: &SampledOperator<T>, z: Cx<T>, h_tail: Option<T>) -> Result<TransferValue<T>> {
    let mut value = czero();
    for &(n, c) in op.coupling() {
        let d = op.diag[n];
        if near_pole(z, d) {
            return Err(Error::PoleHit(n));
        }
        value += c / (z - d);
    }
    let tail_bound = if z.norm() >= T::one() { h_tail } else { None };
    Ok(TransferValue { value, tail_bound })
}

pub fn resolvent_t<T: Scalar>(op: &SampledOperator<T>, z: Cx<T>, x: &StateVec<T>) -> Result<StateVec<T>> {
    x.check_len(op.len())?;
    let mut out = Vec::with_capacity(op.len());
    for (n, (&d, &xn)) in op.diag.iter().zip(x.coeffs()).enumerate() {
        if near_pole(z, d) {
            return Err(Error::PoleHit(n));
        }
        out.push(xn / (z - d));
    }
    Ok(StateVec::new(out))
}

/// Scalars of the rank-one correction at `z`: `(f . R_T x, 1 - H_tau(z))`.
fn smw_scalars<T: Scalar>(op: &SampledOperator<T>, z: Cx<T>, x: &[Cx<T>]) -> Result<(Cx<T>, Cx<T>)> {
    let mut f_rx = czero();
    let mut h = czero();
    for (n, (((&d, &s), &f), &xn)) in op.diag.iter().zip(&op.s_vec).zip(&op.f_vec).zip(x).enumerate() {
        if near_pole(z, d) {
            return Err(Error::PoleHit(n));
        }
        let inv = (z - d).inv();
        f_rx += f * xn * inv;
        h += f * s * inv;
    }
    let denom = cone::<T>() - h;
    if denom.norm() <= T::lit(SMW_DENOMINATOR_TOL) {
        return Err(Error::SingularFeedbackDenominator(denom.norm().as_f64()));
    }
    Ok((f_rx, denom))
}

/// `R(z, Delta) x = R_T x + R_T s (f . R_T x) / (1 - H_tau(z))`.
pub fn resolvent_delta<T: Scalar>(op: &SampledOperator<T>, z: Cx<T>, x: &StateVec<T>) -> Result<StateVec<T>> {
    x.check_len(op.len())?;
    let (f_rx, denom) = smw_scalars(op, z, x.coeffs())?;
    let c = f_rx / denom;
    let coeffs = op
        .diag
        .iter()
        .zip(&op.s_vec)
        .zip(x.coeffs())
        .map(|((&d, &s), &xn)| (xn + s * c) / (z - d))
        .collect();
    Ok(StateVec::new(coeffs))
}

/// `||R(z, Delta) x||^2` without materializing the resolvent vector.
pub fn resolvent_delta_norm_sqr<T: Scalar>(op: &SampledOperator<T>, z: Cx<T>, x: &StateVec<T>) -> Result<T> {
    x.check_len(op.len())?;
    let (f_rx, denom) = smw_scalars(op, z, x.coeffs())?;
    let c = f_rx / denom;
    Ok(op
        .diag
        .iter()
        .zip(&op.s_vec)
        .zip(x.coeffs())
        .fold(T::zero(), |acc, ((&d, &s), &xn)| acc + ((xn + s * c) / (z - d)).norm_sqr()))
}

/// Spectral radius estimate from the geometric growth of a power-iteration orbit.
///
/// Uses `(||x_K|| / ||x_{K/2}||)^{2/K}` so the transient of the first half is discarded.
pub fn spectral_radius_estimate<T: Scalar>(op: &SampledOperator<T>, iters: usize) -> T {
    let n = op.len();
    if n == 0 {
        return T::zero();
    }
    let iters = iters.max(8);
    // deterministic start with every mode excited
    let start: Vec<Cx<T>> = (0..n)
        .map(|i| Cx::new(T::one(), T::lit(0.37 * (i as f64 + 1.0)).sin()))
        .collect();
    let mut x = StateVec::new(start);
    let scale = x.norm();
    x = x.scale(Cx::new(scale.recip(), T::zero()));
    let half = iters / 2;
    let mut log_norm = T::zero();
    let mut log_half = T::zero();
    for k in 1..=iters {
        x = apply_delta(op, &x).expect("lengths match");
        let nrm = x.norm();
        if nrm == T::zero() {
            return T::zero();
        }
        log_norm = log_norm + nrm.ln();
        x = x.scale(Cx::new(nrm.recip(), T::zero()));
        if k == half {
            log_half = log_norm;
        }
    }
    ((log_norm - log_half) / T::lit((iters - half) as f64)).exp()
}
