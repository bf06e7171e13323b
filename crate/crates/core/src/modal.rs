//! Modal representation of a Riesz-spectral system with rank-one input and
//! feedback, the eigenvalue sector geometry, graph norms, and the assumption
//! audit.
//!
//! Everything is expressed in modal coordinates with unit frame constants:
//! a state is the coefficient sequence `x_n = <x, psi_n>`, the generator acts
//! as `x_n -> lambda_n x_n`, the input vector is `b_n = <b, psi_n>` and the
//! feedback functional is `Fx = sum x_n f_n` with `f_n = <phi_n, f>`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};
use crate::state::StateVec;

/// One modal channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTriple<T: Scalar> {
    pub lambda: Cx<T>,
    pub b_coeff: Cx<T>,
    pub f_coeff: Cx<T>,
}

impl<T: Scalar> ModeTriple<T> {
    pub fn new(lambda: Cx<T>, b_coeff: Cx<T>, f_coeff: Cx<T>) -> Self {
        Self { lambda, b_coeff, f_coeff }
    }

    fn is_finite(&self) -> bool {
        [self.lambda, self.b_coeff, self.f_coeff]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Sector parameters `(alpha, upsilon, omega)`.
///
/// `Omega_{alpha,upsilon} = { lambda not real : Re lambda <= -upsilon / |Im lambda|^alpha }`
/// and `C_{-omega} = { Re lambda > -omega }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorParams<T: Scalar> {
    pub alpha: T,
    pub upsilon: T,
    pub omega: T,
}

impl<T: Scalar> SectorParams<T> {
    pub fn new(alpha: T, upsilon: T, omega: T) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("upsilon", upsilon), ("omega", omega)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("sector {name} must be positive, got {v}")));
            }
        }
        Ok(Self { alpha, upsilon, omega })
    }

    /// Membership in `Omega_{alpha,upsilon}`; the boundary belongs to the set.
    pub fn in_omega(&self, lambda: Cx<T>) -> bool {
        if lambda.im == T::zero() {
            return false;
        }
        lambda.re <= -self.upsilon / lambda.im.abs().powf(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectorClass {
    /// In `C_{-omega}` but outside `Omega_{alpha,upsilon}`: only finitely many allowed.
    BadRegion,
    StableSector,
    OnAxis,
}

pub fn classify_eigenvalue<T: Scalar>(lambda: Cx<T>, sector: &SectorParams<T>) -> SectorClass {
    if lambda.re == T::zero() {
        SectorClass::OnAxis
    } else if lambda.re > -sector.omega && !sector.in_omega(lambda) {
        SectorClass::BadRegion
    } else {
        SectorClass::StableSector
    }
}

/// Norms of the discarded modes `n > N_trunc`, supplied by a generator.
///
/// `None` means the generator could not bound that sum; consumers then fall
/// back to truncation-only results and say so.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailData<T: Scalar> {
    /// `sum |b_n|^2`
    pub b_sq: Option<T>,
    /// `sum |f_n|^2`
    pub f_sq: Option<T>,
    /// `sum |lambda_n|^{2 beta} |b_n|^2`
    pub b_beta_sq: Option<T>,
    /// `sum |lambda_n|^{2 gamma} |f_n|^2`
    pub f_gamma_sq: Option<T>,
    /// `sum |b_n|^2 / |Re lambda_n|`
    pub b_re_sq: Option<T>,
    /// `sum |f_n|^2 / |Re lambda_n|`
    pub f_re_sq: Option<T>,
}

impl<T: Scalar> TailData<T> {
    /// The truncation is the whole system.
    pub fn exact() -> Self {
        let z = Some(T::zero());
        Self { b_sq: z, f_sq: z, b_beta_sq: z, f_gamma_sq: z, b_re_sq: z, f_re_sq: z }
    }

    pub fn unknown() -> Self {
        Self::default()
    }

    pub fn is_complete(&self) -> bool {
        [self.b_sq, self.f_sq, self.b_beta_sq, self.f_gamma_sq, self.b_re_sq, self.f_re_sq]
            .iter()
            .all(Option::is_some)
    }

    /// Replace the feedback-side tails, keeping the input side.
    pub fn with_f_tails(mut self, other: &TailData<T>) -> Self {
        self.f_sq = other.f_sq;
        self.f_gamma_sq = other.f_gamma_sq;
        self.f_re_sq = other.f_re_sq;
        self
    }
}

/// Finite modal family plus the metadata needed to reason about the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSystem<T: Scalar> {
    modes: Vec<ModeTriple<T>>,
    pub sector: SectorParams<T>,
    pub beta: T,
    pub gamma: T,
    pub tails: TailData<T>,
    /// The source asserts that every discarded eigenvalue lies in
    /// `Omega_{alpha,upsilon}` or in `Re lambda <= -omega`.
    pub tail_in_sector: bool,
}

impl<T: Scalar> TruncatedSystem<T> {
    /// Builds a system whose truncation is complete (no discarded modes).
    pub fn new(modes: Vec<ModeTriple<T>>, sector: SectorParams<T>, beta: T, gamma: T) -> Result<Self> {
        if !(beta >= T::zero() && gamma >= T::zero()) {
            return Err(Error::InvalidParameter(format!("beta, gamma must be >= 0, got {beta}, {gamma}")));
        }
        if let Some(i) = modes.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        check_simple_spectrum(&modes)?;
        Ok(Self { modes, sector, beta, gamma, tails: TailData::exact(), tail_in_sector: true })
    }

    pub fn with_tails(mut self, tails: TailData<T>, tail_in_sector: bool) -> Self {
        self.tails = tails;
        self.tail_in_sector = tail_in_sector;
        self
    }

    /// Replace every feedback coefficient `f_n`.
    pub fn with_feedback(mut self, f: &[Cx<T>]) -> Result<Self> {
        if f.len() != self.modes.len() {
            return Err(Error::LengthMismatch { expected: self.modes.len(), got: f.len() });
        }
        for (i, (m, &fi)) in self.modes.iter_mut().zip(f).enumerate() {
            if !(fi.re.is_finite() && fi.im.is_finite()) {
                return Err(Error::NonFinite(i));
            }
            m.f_coeff = fi;
        }
        Ok(self)
    }

    pub fn modes(&self) -> &[ModeTriple<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> impl Iterator<Item = Cx<T>> + '_ {
        self.modes.iter().map(|m| m.lambda)
    }

    pub fn b(&self) -> Vec<Cx<T>> {
        self.modes.iter().map(|m| m.b_coeff).collect()
    }

    pub fn f(&self) -> Vec<Cx<T>> {
        self.modes.iter().map(|m| m.f_coeff).collect()
    }

    pub fn has_feedback(&self) -> bool {
        self.modes.iter().any(|m| m.f_coeff.norm_sqr() > T::zero())
    }
}

fn check_simple_spectrum<T: Scalar>(modes: &[ModeTriple<T>]) -> Result<()> {
    let mut idx: Vec<usize> = (0..modes.len()).collect();
    let key = |i: usize| (modes[i].lambda.re, modes[i].lambda.im);
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.partial_cmp(&kb.0)
            .unwrap_or(Ordering::Equal)
            .then(ka.1.partial_cmp(&kb.1).unwrap_or(Ordering::Equal))
    });
    for w in idx.windows(2) {
        if modes[w[0]].lambda == modes[w[1]].lambda {
            return Err(Error::DuplicateEigenvalue(w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

/// Which alternative of the coupling-exponent condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingBranch {
    /// `beta, gamma` nonnegative integers with `beta + gamma >= alpha`.
    Integer,
    /// `beta + gamma > alpha`.
    Strict,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<T: Scalar> {
    pub a1_count_in_bad_region: usize,
    pub a1_indices: Vec<usize>,
    pub a2_min_axis_distance: T,
    pub a2_argmin: usize,
    pub a4_beta_norm: T,
    pub a4_gamma_norm: T,
    pub a4_branch: CouplingBranch,
    /// Tail sums were unavailable and the D-norms cover the truncation only.
    pub truncation_only: bool,
    pub a1: Verdict,
    pub a2: Verdict,
    /// Closed-loop polynomial stability is never decided here.
    pub a3: Verdict,
    pub a4: Verdict,
}

impl<T: Scalar> AssumptionReport<T> {
    pub fn all_decidable_pass(&self) -> bool {
        self.a1 != Verdict::Fail && self.a2 == Verdict::Pass && self.a4 == Verdict::Pass
    }
}

pub fn coupling_branch<T: Scalar>(alpha: T, beta: T, gamma: T) -> CouplingBranch {
    let is_int = |v: T| v >= T::zero() && v.fract() == T::zero();
    if is_int(beta) && is_int(gamma) && beta + gamma >= alpha {
        CouplingBranch::Integer
    } else if beta + gamma > alpha {
        CouplingBranch::Strict
    } else {
        CouplingBranch::Neither
    }
}

pub fn audit_assumptions<T: Scalar>(sys: &TruncatedSystem<T>) -> Result<AssumptionReport<T>> {
    if sys.is_empty() {
        return Err(Error::EmptySystem);
    }
    let mut a1_indices = Vec::new();
    let mut min_re = T::infinity();
    let mut argmin = 0;
    let mut beta_sq = T::zero();
    let mut gamma_sq = T::zero();
    for (n, m) in sys.modes.iter().enumerate() {
        if classify_eigenvalue(m.lambda, &sys.sector) == SectorClass::BadRegion {
            a1_indices.push(n);
        }
        let d = m.lambda.re.abs();
        if d < min_re {
            min_re = d;
            argmin = n;
        }
        let mag = m.lambda.norm();
        beta_sq = beta_sq + mag.powf(T::lit(2.0) * sys.beta) * m.b_coeff.norm_sqr();
        gamma_sq = gamma_sq + mag.powf(T::lit(2.0) * sys.gamma) * m.f_coeff.norm_sqr();
    }
    let truncation_only = sys.tails.b_beta_sq.is_none() || sys.tails.f_gamma_sq.is_none();
    let a4_beta_norm = (beta_sq + sys.tails.b_beta_sq.unwrap_or(T::zero())).sqrt();
    let a4_gamma_norm = (gamma_sq + sys.tails.f_gamma_sq.unwrap_or(T::zero())).sqrt();
    let a4_branch = coupling_branch(sys.sector.alpha, sys.beta, sys.gamma);
    let a4 = if a4_branch == CouplingBranch::Neither || !a4_beta_norm.is_finite() || !a4_gamma_norm.is_finite() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(AssumptionReport {
        a1_count_in_bad_region: a1_indices.len(),
        a1_indices,
        a2_min_axis_distance: min_re,
        a2_argmin: argmin,
        a4_beta_norm,
        a4_gamma_norm,
        a4_branch,
        truncation_only,
        a1: if sys.tail_in_sector { Verdict::Pass } else { Verdict::Unknown },
        a2: if min_re > T::zero() { Verdict::Pass } else { Verdict::Fail },
        a3: Verdict::Unknown,
        a4,
    })
}

/// Graph norm `sqrt(sum |lambda_n|^{2 delta} |x_n|^2)`.
pub fn dnorm<T: Scalar>(x: &StateVec<T>, delta: T, sys: &TruncatedSystem<T>) -> Result<T> {
    x.check_len(sys.len())?;
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    let two_delta = T::lit(2.0) * delta;
    let s = sys
        .modes
        .iter()
        .zip(x.coeffs())
        .fold(T::zero(), |acc, (m, xn)| {
            let w = if delta == T::zero() { T::one() } else { m.lambda.norm().powf(two_delta) };
            acc + w * xn.norm_sqr()
        });
    Ok(s.sqrt())
}

/// Coefficient-wise `(-lambda_n)^{-delta} x_n` on the principal branch.
pub fn fractional_apply<T: Scalar>(x: &StateVec<T>, delta: T, sys: &TruncatedSystem<T>) -> Result<StateVec<T>> {
    x.check_len(sys.len())?;
    if let Some(i) = sys.modes.iter().position(|m| m.lambda.re >= T::zero()) {
        return Err(Error::UnstableMode(i));
    }
    let coeffs = sys
        .modes
        .iter()
        .zip(x.coeffs())
        .map(|(m, &xn)| xn * (-m.lambda).powf(-delta))
        .collect();
    Ok(StateVec::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cx, czero};
    use proptest::prelude::*;

    fn sector(a: f64, u: f64, w: f64) -> SectorParams<f64> {
        SectorParams::new(a, u, w).unwrap()
    }

    fn single(lambda: Cx<f64>, b: f64) -> TruncatedSystem<f64> {
        TruncatedSystem::new(
            vec![ModeTriple::new(lambda, cx(b, 0.0), czero())],
            sector(1.0, 1.0, 2.0),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let s = sector(1.0, 1.0, 2.0);
        assert_eq!(classify_eigenvalue(cx(-1.0, 0.0), &s), SectorClass::BadRegion);
        assert_eq!(classify_eigenvalue(cx(-1.0, 10.0), &s), SectorClass::StableSector);
        assert_eq!(classify_eigenvalue(cx(-0.01, 10.0), &s), SectorClass::BadRegion);
        assert_eq!(classify_eigenvalue(cx(0.0, 3.0), &s), SectorClass::OnAxis);
        assert_eq!(classify_eigenvalue(cx(-3.0, 0.0), &s), SectorClass::StableSector);
        // boundary point Re = -upsilon/|Im|^alpha is in the sector
        assert_eq!(classify_eigenvalue(cx(-0.1, 10.0), &s), SectorClass::StableSector);
    }

    #[test]
    fn audit_single_mode() {
        let r = audit_assumptions(&single(cx(-1.0, 0.0), 1.0)).unwrap();
        assert_eq!(r.a1_count_in_bad_region, 1);
        assert_eq!(r.a2_min_axis_distance, 1.0);
        assert_eq!(r.a4_beta_norm, 1.0);
        assert_eq!(r.a3, Verdict::Unknown);
        assert_eq!(r.a4_branch, CouplingBranch::Integer);
    }

    #[test]
    fn audit_polynomial_family() {
        let modes = (1..=100)
            .map(|n| {
                let n = n as f64;
                ModeTriple::new(cx(-1.0 / (n * n), n), cx(1.0 / n, 0.0), czero())
            })
            .collect();
        let sys = TruncatedSystem::new(modes, sector(2.0, 1.0, 1.0), 0.0, 3.0).unwrap();
        let r = audit_assumptions(&sys).unwrap();
        assert_eq!(r.a1_count_in_bad_region, 0);
        assert!((r.a2_min_axis_distance - 1e-4).abs() < 1e-18);
        assert_eq!(r.a2, Verdict::Pass);
    }

    #[test]
    fn audit_axis_eigenvalue_fails_a2() {
        let sys = TruncatedSystem::new(
            vec![
                ModeTriple::new(cx(-1.0, 1.0), cx(1.0, 0.0), czero()),
                ModeTriple::new(cx(0.0, 3.0), cx(1.0, 0.0), czero()),
            ],
            sector(1.0, 1.0, 2.0),
            1.0,
            1.0,
        )
        .unwrap();
        let r = audit_assumptions(&sys).unwrap();
        assert_eq!(r.a2_min_axis_distance, 0.0);
        assert_eq!(r.a2, Verdict::Fail);
        assert!(!r.all_decidable_pass());
    }

    #[test]
    fn audit_rejects_empty_and_duplicates() {
        let empty = TruncatedSystem::<f64>::new(vec![], sector(1.0, 1.0, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(audit_assumptions(&empty), Err(Error::EmptySystem));
        let m = ModeTriple::new(cx(-1.0, 1.0), cx(1.0, 0.0), czero());
        let dup = TruncatedSystem::new(vec![m, m], sector(1.0, 1.0, 1.0), 1.0, 1.0);
        assert_eq!(dup, Err(Error::DuplicateEigenvalue(0, 1)));
    }

    #[test]
    fn coupling_branches() {
        assert_eq!(coupling_branch(2.0, 1.0, 1.0), CouplingBranch::Integer);
        assert_eq!(coupling_branch(2.0, 0.5, 1.5), CouplingBranch::Neither);
        assert_eq!(coupling_branch(2.0, 0.5, 1.6), CouplingBranch::Strict);
    }

    #[test]
    fn dnorm_examples() {
        let s1 = single(cx(-2.0, 0.0), 0.0);
        let x = StateVec::from_real(&[1.0]);
        assert_eq!(dnorm(&x, 0.0, &s1).unwrap(), 1.0);
        assert!((dnorm(&x, 1.0, &s1).unwrap() - 2.0).abs() < 1e-15);
        let s2 = TruncatedSystem::new(
            vec![
                ModeTriple::new(cx(-1.0, 1.0), czero(), czero()),
                ModeTriple::new(cx(-2.0, 0.0), czero(), czero()),
            ],
            sector(1.0, 1.0, 1.0),
            0.0,
            0.0,
        )
        .unwrap();
        let x2 = StateVec::from_real(&[1.0, 1.0]);
        let expected = (2f64.sqrt() + 2.0).sqrt();
        assert!((dnorm(&x2, 0.5, &s2).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.848).abs() < 1e-3);
        assert!(matches!(dnorm(&x, 0.0, &s2), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn fractional_apply_examples() {
        let x = StateVec::from_real(&[1.0]);
        let y = fractional_apply(&x, 1.0, &single(cx(-1.0, 0.0), 0.0)).unwrap();
        assert!((y[0] - cx(1.0, 0.0)).norm() < 1e-15);
        let y = fractional_apply(&x, 0.5, &single(cx(-4.0, 0.0), 0.0)).unwrap();
        assert!((y[0] - cx(0.5, 0.0)).norm() < 1e-15);
        let x2 = StateVec::from_real(&[2.0]);
        let y = fractional_apply(&x2, 1.0, &single(cx(-1.0, 1.0), 0.0)).unwrap();
        assert!((y[0] - cx(1.0, 1.0)).norm() < 1e-14);
        let bad = single(cx(0.5, 1.0), 0.0);
        assert_eq!(fractional_apply(&x, 1.0, &bad), Err(Error::UnstableMode(0)));
    }

    fn arb_lambda() -> impl Strategy<Value = (f64, f64)> {
        (-5.0f64..5.0, -20.0f64..20.0)
    }

    proptest! {
        #[test]
        fn classification_conjugate_symmetric((re, im) in arb_lambda(), a in 0.5f64..3.0, u in 0.1f64..3.0, w in 0.1f64..3.0) {
            let s = sector(a, u, w);
            let l = cx(re, im);
            prop_assert_eq!(classify_eigenvalue(l, &s), classify_eigenvalue(l.conj(), &s));
            let axis = classify_eigenvalue(cx(0.0, im), &s);
            prop_assert_eq!(axis, SectorClass::OnAxis);
        }

        #[test]
        fn dnorm_monotone_in_delta(
            data in prop::collection::vec(((1.0f64..10.0), (-10.0f64..10.0), (-3.0f64..3.0)), 1..12),
            d1 in 0.0f64..2.0, d2 in 0.0f64..2.0,
        ) {
            let modes: Vec<_> = data.iter().enumerate()
                .map(|(i, &(mag, im, _))| ModeTriple::new(cx(-mag - i as f64, im), czero(), czero()))
                .collect();
            let sys = TruncatedSystem::new(modes, sector(1.0, 1.0, 1.0), 0.0, 0.0).unwrap();
            let x = StateVec::from_real(&data.iter().map(|d| d.2).collect::<Vec<_>>());
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(dnorm(&x, lo, &sys).unwrap() <= dnorm(&x, hi, &sys).unwrap() * (1.0 + 1e-14));
        }

        #[test]
        fn fractional_powers_compose(
            data in prop::collection::vec(((0.01f64..10.0), (-30.0f64..30.0)), 1..10),
            d1 in -1.0f64..1.0, d2 in -1.0f64..1.0,
        ) {
            let modes: Vec<_> = data.iter().enumerate()
                .map(|(i, &(re, im))| ModeTriple::new(cx(-re, im + 100.0 * i as f64), czero(), czero()))
                .collect();
            let sys = TruncatedSystem::new(modes, sector(1.0, 1.0, 1.0), 0.0, 0.0).unwrap();
            let x = StateVec::new(vec![cx(1.0, -0.5); data.len()]);
            let once = fractional_apply(&fractional_apply(&x, d2, &sys).unwrap(), d1, &sys).unwrap();
            let direct = fractional_apply(&x, d1 + d2, &sys).unwrap();
            for i in 0..x.len() {
                let rel = (once[i] - direct[i]).norm() / direct[i].norm();
                prop_assert!(rel < 1e-12, "rel {}", rel);
            }
        }
    }
}
