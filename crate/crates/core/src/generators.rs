//! Parametric system families with closed-form tail bounds.
//!
//! Tail sums over the discarded modes `n > N` are bounded with the integral
//! test, `sum_{n>N} n^{-p} <= N^{1-p} / (p - 1)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::modal::{audit_assumptions, ModeTriple, SectorParams, TailData, TruncatedSystem, Verdict};
use crate::scalar::{cx, czero, Cx, Scalar};
use crate::state::StateVec;

/// Coefficient rule `scale * n^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw<T: Scalar> {
    pub scale: T,
    pub q: T,
}

impl<T: Scalar> PowerLaw<T> {
    pub fn new(scale: T, q: T) -> Self {
        Self { scale, q }
    }

    pub fn zero() -> Self {
        Self { scale: T::zero(), q: T::one() }
    }

    pub fn at(&self, n: usize) -> T {
        self.scale * T::lit(n as f64).powf(-self.q)
    }
}

/// `scale^2 * K * sum_{n>N} n^{-2q + 2w}` for the weight exponent `w`,
/// `None` when the integral test diverges.
fn law_tail<T: Scalar>(law: &PowerLaw<T>, n: usize, weight: T, factor: T) -> Option<T> {
    if law.scale == T::zero() {
        return Some(T::zero());
    }
    let p = T::lit(2.0) * law.q - T::lit(2.0) * weight;
    if !(p > T::one()) {
        return None;
    }
    let nn = T::lit(n as f64);
    Some(factor * law.scale * law.scale * nn.powf(T::one() - p) / (p - T::one()))
}

/// Tails of a coefficient law when `|lambda_n| <= mag * n * sqrt(c)` and
/// `|Re lambda_n| = re_scale * n^{-alpha}` for `n > N`.
fn tails_for_law<T: Scalar>(
    law: &PowerLaw<T>,
    n: usize,
    coupling: T,
    alpha: T,
    mag: T,
    c_n: T,
    re_scale: T,
    what: &str,
) -> Result<(Option<T>, Option<T>, Option<T>)> {
    let plain = law_tail(law, n, T::zero(), T::one())
        .ok_or_else(|| Error::DivergentCoupling(format!("{what} is not square summable")))?;
    let weighted_factor = (mag * mag * c_n).powf(coupling);
    let weighted = law_tail(law, n, coupling, weighted_factor).ok_or_else(|| {
        Error::DivergentCoupling(format!("sum |lambda_n|^(2*{coupling}) |{what}_n|^2 diverges"))
    })?;
    let re = law_tail(law, n, alpha / T::lit(2.0), T::one() / re_scale);
    Ok((Some(plain), Some(weighted), re))
}

fn check_audit<T: Scalar>(sys: TruncatedSystem<T>) -> Result<TruncatedSystem<T>> {
    let report = audit_assumptions(&sys)?;
    if report.a2 == Verdict::Fail {
        return Err(Error::InvalidParameter(format!(
            "mode {} lies on the imaginary axis",
            report.a2_argmin
        )));
    }
    if report.a4 == Verdict::Fail {
        return Err(Error::InvalidParameter("coupling exponents violate the summability condition".into()));
    }
    if report.a1 == Verdict::Fail {
        return Err(Error::InvalidParameter("tail leaves the sector".into()));
    }
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams<T: Scalar> {
    pub alpha: T,
    pub upsilon_scale: T,
    pub n: usize,
    pub b_law: PowerLaw<T>,
    pub f_law: PowerLaw<T>,
    pub sector: SectorParams<T>,
    pub beta: T,
    pub gamma: T,
}

/// `lambda_n = -upsilon_scale / n^alpha + i n`, `n = 1..=N`.
pub fn generate_synthetic<T: Scalar>(p: &SyntheticParams<T>) -> Result<TruncatedSystem<T>> {
    if !(p.alpha > T::zero()) || p.n == 0 || !(p.upsilon_scale > T::zero()) {
        return Err(Error::InvalidParameter("synthetic family needs alpha > 0, N >= 1, scale > 0".into()));
    }
    let modes = (1..=p.n)
        .map(|k| {
            let nk = T::lit(k as f64);
            ModeTriple::new(cx(-p.upsilon_scale / nk.powf(p.alpha), nk), cx(p.b_law.at(k), T::zero()), cx(p.f_law.at(k), T::zero()))
        })
        .collect();
    let nn = T::lit(p.n as f64);
    let c_n = T::one() + p.upsilon_scale * p.upsilon_scale / nn.powf(T::lit(2.0) * p.alpha + T::lit(2.0));
    let (b_sq, b_beta_sq, b_re_sq) =
        tails_for_law(&p.b_law, p.n, p.beta, p.alpha, T::one(), c_n, p.upsilon_scale, "b")?;
    let (f_sq, f_gamma_sq, f_re_sq) =
        tails_for_law(&p.f_law, p.n, p.gamma, p.alpha, T::one(), c_n, p.upsilon_scale, "f")?;
    let tails = TailData { b_sq, f_sq, b_beta_sq, f_gamma_sq, b_re_sq, f_re_sq };
    // tail modes share the decay constant, so they sit in the sector iff the scale does
    let in_sector = p.upsilon_scale >= p.sector.upsilon && p.alpha <= p.sector.alpha;
    if !in_sector {
        return Err(Error::InvalidParameter(format!(
            "tail modes leave the sector: scale {} below upsilon {}",
            p.upsilon_scale, p.sector.upsilon
        )));
    }
    let sys = TruncatedSystem::new(modes, p.sector, p.beta, p.gamma)?.with_tails(tails, true);
    check_audit(sys)
}

/// Input coefficients of the undamped wave family.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveInput<T: Scalar> {
    /// `b0_n = scale * n^{-q}` for all `n`; tails bounded in closed form.
    Law(PowerLaw<T>),
    /// Sine-series coefficients `b0_1..b0_N`; zero beyond.
    Coefficients(Vec<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraMode<T: Scalar> {
    pub lambda: Cx<T>,
    pub b: Cx<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveParams<T: Scalar> {
    pub n_pairs: usize,
    pub upsilon: T,
    pub alpha: T,
    pub omega: T,
    pub b0: WaveInput<T>,
    /// Modes placed ahead of the wave pairs, typically the unstable part.
    pub extra_modes: Vec<ExtraMode<T>>,
    /// Feedback on the stable wave modes, `f_{+-n} = f2_n / sqrt 2`.
    pub f2: PowerLaw<T>,
    pub beta: T,
    pub gamma: T,
}

/// Modeled perturbed-wave spectrum `lambda_{+-n} = -upsilon / (n pi)^alpha +- i n pi`.
///
/// Mode order: the extra modes, then `+1, -1, +2, -2, ...`. The pair `+-n`
/// splits `b0_n` evenly, `b_{+-n} = b0_n / sqrt 2`.
pub fn generate_wave<T: Scalar>(p: &WaveParams<T>) -> Result<TruncatedSystem<T>> {
    if p.n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
    }
    let sector = SectorParams::new(p.alpha, p.upsilon, p.omega)?;
    let pi = T::lit(PI);
    let half = T::lit(FRAC_1_SQRT_2);
    let b0 = |k: usize| match &p.b0 {
        WaveInput::Law(l) => l.at(k),
        WaveInput::Coefficients(c) => c.get(k - 1).copied().unwrap_or(T::zero()),
    };
    if let WaveInput::Coefficients(c) = &p.b0 {
        if c.len() != p.n_pairs {
            return Err(Error::LengthMismatch { expected: p.n_pairs, got: c.len() });
        }
    }
    let mut modes: Vec<ModeTriple<T>> =
        p.extra_modes.iter().map(|m| ModeTriple::new(m.lambda, m.b, czero())).collect();
    for k in 1..=p.n_pairs {
        let w = T::lit(k as f64) * pi;
        let re = -p.upsilon / w.powf(p.alpha);
        let b = cx(b0(k) * half, T::zero());
        let f = cx(p.f2.at(k) * half, T::zero());
        modes.push(ModeTriple::new(cx(re, w), b, f));
        modes.push(ModeTriple::new(cx(re, -w), b, f));
    }
    let nn = T::lit(p.n_pairs as f64);
    let c_n = T::one() + p.upsilon * p.upsilon / (nn * pi).powf(T::lit(2.0) * p.alpha + T::lit(2.0));
    let re_scale = p.upsilon / pi.powf(p.alpha);
    let (b_sq, b_beta_sq, b_re_sq) = match &p.b0 {
        WaveInput::Law(l) => tails_for_law(l, p.n_pairs, p.beta, p.alpha, pi, c_n, re_scale, "b")?,
        WaveInput::Coefficients(_) => (Some(T::zero()), Some(T::zero()), Some(T::zero())),
    };
    let (f_sq, f_gamma_sq, f_re_sq) = tails_for_law(&p.f2, p.n_pairs, p.gamma, p.alpha, pi, c_n, re_scale, "f")?;
    let tails = TailData { b_sq, f_sq, b_beta_sq, f_gamma_sq, b_re_sq, f_re_sq };
    let sys = TruncatedSystem::new(modes, sector, p.beta, p.gamma)?.with_tails(tails, true);
    check_audit(sys)
}

/// Explicit mode list; without tails the list is the whole system.
pub fn generate_explicit<T: Scalar>(
    modes: Vec<ModeTriple<T>>,
    sector: SectorParams<T>,
    beta: T,
    gamma: T,
    tails: Option<(TailData<T>, bool)>,
) -> Result<TruncatedSystem<T>> {
    let sys = TruncatedSystem::new(modes, sector, beta, gamma)?;
    Ok(match tails {
        Some((t, in_sector)) => sys.with_tails(t, in_sector),
        None => sys,
    })
}

/// Initial-state rule `scale * n^{-q} * log(n + 1)^{-log_power}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialLaw<T: Scalar> {
    pub scale: T,
    pub q: T,
    pub log_power: T,
}

impl<T: Scalar> InitialLaw<T> {
    pub fn at(&self, n: usize) -> T {
        let nn = T::lit(n as f64);
        self.scale * nn.powf(-self.q) * (nn + T::one()).ln().powf(-self.log_power)
    }

    /// `(sup delta, attained)` for `x0 in D^delta` when `|lambda_n| ~ n`.
    pub fn delta_class(&self) -> (T, bool) {
        let d = self.q - T::lit(0.5);
        (d, T::lit(2.0) * self.log_power > T::one())
    }
}

pub fn synthetic_state<T: Scalar>(n: usize, law: &InitialLaw<T>) -> StateVec<T> {
    StateVec::new((1..=n).map(|k| cx(law.at(k), T::zero())).collect())
}

/// Layout matching [`generate_wave`]; each extra mode starts at `extra_value`.
pub fn wave_state<T: Scalar>(n_extra: usize, n_pairs: usize, law: &InitialLaw<T>, extra_value: T) -> StateVec<T> {
    let half = T::lit(FRAC_1_SQRT_2);
    let mut v = vec![cx(extra_value, T::zero()); n_extra];
    for k in 1..=n_pairs {
        let c = cx(law.at(k) * half, T::zero());
        v.push(c);
        v.push(c);
    }
    StateVec::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::{audit_assumptions, SectorClass};
    use crate::classify_eigenvalue;

    fn synth(n: usize, q: f64, beta: f64) -> SyntheticParams<f64> {
        SyntheticParams {
            alpha: 2.0,
            upsilon_scale: 1.0,
            n,
            b_law: PowerLaw::new(1.0, q),
            f_law: PowerLaw::zero(),
            sector: SectorParams::new(2.0, 1.0, 2.0).unwrap(),
            beta,
            gamma: 1.0,
        }
    }

    #[test]
    fn synthetic_spectrum() {
        let sys = generate_synthetic(&synth(3, 2.1, 1.0)).unwrap();
        let l: Vec<_> = sys.lambdas().collect();
        assert_eq!(l[0], cx(-1.0, 1.0));
        assert_eq!(l[1], cx(-0.25, 2.0));
        assert!((l[2] - cx(-1.0 / 9.0, 3.0)).norm() < 1e-16);
    }

    #[test]
    fn synthetic_divergent_coupling() {
        assert!(matches!(generate_synthetic(&synth(10, 1.0, 1.0)), Err(Error::DivergentCoupling(_))));
    }

    #[test]
    fn synthetic_tail_bounds_dominate_partial_sums() {
        let n = 50;
        let sys = generate_synthetic(&synth(n, 2.1, 1.0)).unwrap();
        // closed form is an upper bound on a long explicit continuation of the tail
        let explicit: f64 = (n + 1..200_000)
            .map(|k| {
                let k = k as f64;
                let lam = cx(-1.0 / (k * k), k);
                lam.norm_sqr() * k.powf(-4.2)
            })
            .sum();
        let bound = sys.tails.b_beta_sq.unwrap();
        let closed = (n as f64).powf(-1.2) / 1.2;
        assert!(explicit <= bound);
        assert!(bound <= closed * 1.0001);
        let re_explicit: f64 = (n + 1..200_000).map(|k| (k as f64).powf(2.0 - 4.2)).sum();
        assert!(re_explicit <= sys.tails.b_re_sq.unwrap());
        let slow = generate_synthetic(&SyntheticParams { beta: 0.5, gamma: 2.0, ..synth(n, 1.45, 0.5) }).unwrap();
        assert!(slow.tails.b_re_sq.is_none());
    }

    #[test]
    fn wave_spectrum_and_audit() {
        let p = WaveParams {
            n_pairs: 1,
            upsilon: 1.0,
            alpha: 2.0,
            omega: 1.0,
            b0: WaveInput::Coefficients(vec![1.0]),
            extra_modes: vec![],
            f2: PowerLaw::zero(),
            beta: 1.0,
            gamma: 1.0,
        };
        let sys = generate_wave(&p).unwrap();
        let l: Vec<_> = sys.lambdas().collect();
        let re = -1.0 / (PI * PI);
        assert_eq!(l, vec![cx(re, PI), cx(re, -PI)]);
        let big = WaveParams { n_pairs: 40, b0: WaveInput::Law(PowerLaw::new(1.0, 2.0)), ..p };
        let sys = generate_wave(&big).unwrap();
        let rep = audit_assumptions(&sys).unwrap();
        assert_eq!(rep.a1_count_in_bad_region, 0);
        let expect = 1.0 / (40.0 * PI).powi(2);
        assert!((rep.a2_min_axis_distance - expect).abs() < 1e-15);
        let l: Vec<_> = sys.lambdas().collect();
        for pair in l.chunks(2) {
            assert_eq!(pair[0], pair[1].conj());
        }
        assert!(l.iter().all(|&z| classify_eigenvalue(z, &sys.sector) == SectorClass::StableSector));
    }

    #[test]
    fn wave_with_unstable_extra_modes() {
        let p = WaveParams {
            n_pairs: 5,
            upsilon: 0.1,
            alpha: 2.0,
            omega: 1.0,
            b0: WaveInput::Law(PowerLaw::new(1.0, 2.0)),
            extra_modes: vec![
                ExtraMode { lambda: cx(0.5, 1.0), b: cx(1.0, 0.0) },
                ExtraMode { lambda: cx(0.5, -1.0), b: cx(1.0, 0.0) },
            ],
            f2: PowerLaw::zero(),
            beta: 1.0,
            gamma: 1.0,
        };
        let sys = generate_wave(&p).unwrap();
        assert_eq!(sys.len(), 12);
        let rep = audit_assumptions(&sys).unwrap();
        assert_eq!(rep.a1_indices, vec![0, 1]);
        let x = wave_state(2, 5, &InitialLaw { scale: 1.0, q: 1.5, log_power: 0.75 }, 1.0);
        assert_eq!(x.len(), 12);
    }

    #[test]
    fn delta_class_of_initial_law() {
        let law = InitialLaw { scale: 1.0, q: 1.5, log_power: 0.75 };
        assert_eq!(law.delta_class(), (1.0, true));
        let law = InitialLaw { scale: 1.0f64, q: 1.55, log_power: 0.0 };
        let (d, attained) = law.delta_class();
        assert!((d - 1.05).abs() < 1e-12 && !attained);
    }
}
