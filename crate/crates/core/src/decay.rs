//! Continuous-time simulation of the sampled loop and decay-law fits.

use crate::error::{Error, Result};
use crate::modal::TruncatedSystem;
use crate::operator::{Orbit, SampledOperator};
use crate::scalar::{phi1, Cx, Scalar};
use crate::state::StateVec;

/// Which sampling intervals have their intersample points recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recording {
    All,
    /// Roughly `per_decade` recorded intervals per decade of `t`; sample norms
    /// are still kept for every `k`.
    LogSpaced { per_decade: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions<T: Scalar> {
    /// Output points per sampling interval, the sample instant included.
    pub substeps: usize,
    pub recording: Recording,
    /// Smoothness class of the initial state, carried as metadata.
    pub x0_delta_class: Option<T>,
}

impl<T: Scalar> SimulationOptions<T> {
    pub fn new(substeps: usize) -> Self {
        Self { substeps, recording: Recording::All, x0_delta_class: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar> {
    pub tau: T,
    pub times: Vec<T>,
    pub norms: Vec<T>,
    /// `||x(k tau)||` for every `k = 0..=K`.
    pub sample_norms: Vec<T>,
    pub x0_delta_class: Option<T>,
    /// The rate statement needs `delta <= 1` or `beta >= alpha`.
    pub outside_hypotheses: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn sample_times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.sample_norms.len()).map(move |k| self.tau * T::lit(k as f64))
    }
}

/// `u(t) = F x(k tau)` on `[k tau, (k+1) tau)`; between samples
/// `x(k tau + s) = T(s) x_k + S(s) u_k` exactly.
pub fn simulate_closed_loop<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau: T,
    x0: &StateVec<T>,
    t_end: T,
    options: SimulationOptions<T>,
) -> Result<Trajectory<T>> {
    if options.substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    if !(t_end >= tau) {
        return Err(Error::InvalidParameter(format!("t_end {t_end} shorter than tau {tau}")));
    }
    let op = SampledOperator::new(sys, tau)?;
    x0.check_len(sys.len())?;
    let k_max = (t_end / tau).floor().to_usize().unwrap_or(0).max(1);

    let m = options.substeps;
    let offsets: Vec<T> = (1..m).map(|j| tau * T::lit(j as f64 / m as f64)).collect();
    let decay: Vec<Vec<Cx<T>>> =
        offsets.iter().map(|&s| sys.lambdas().map(|l| l.scale(s).exp()).collect()).collect();
    let input: Vec<Vec<Cx<T>>> = offsets
        .iter()
        .map(|&s| sys.modes().iter().map(|md| md.b_coeff * phi1(s, md.lambda)).collect())
        .collect();

    let mut next_log = T::zero();
    let log_step = match options.recording {
        Recording::All => None,
        Recording::LogSpaced { per_decade } => Some(T::lit(10f64.ln() / per_decade.max(1) as f64)),
    };

    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut sample_norms = Vec::with_capacity(k_max + 1);
    let mut orbit = Orbit::new(&op, x0, k_max)?;
    loop {
        let k = orbit.step_index();
        let t_k = tau * T::lit(k as f64);
        let record = match log_step {
            None => true,
            Some(step) => {
                let t_next = tau * T::lit((k + 1) as f64);
                if k == 0 || t_next.ln() >= next_log {
                    while next_log <= t_next.ln() {
                        next_log = next_log + step;
                    }
                    true
                } else {
                    false
                }
            }
        };
        let (xs, u) = (orbit.state_coeffs().to_vec(), orbit.feedback_value());
        let Some((_, norm)) = orbit.next() else { break };
        sample_norms.push(norm);
        if !record {
            continue;
        }
        times.push(t_k);
        norms.push(norm);
        if k == k_max {
            break;
        }
        for (j, &s) in offsets.iter().enumerate() {
            let n2 = xs
                .iter()
                .zip(&decay[j])
                .zip(&input[j])
                .fold(T::zero(), |acc, ((&x, &e), &g)| acc + (e * x + g * u).norm_sqr());
            times.push(t_k + s);
            norms.push(n2.sqrt());
        }
    }
    let outside = options
        .x0_delta_class
        .is_some_and(|d| d > T::one() && sys.beta < sys.sector.alpha);
    Ok(Trajectory { tau, times, norms, sample_norms, x0_delta_class: options.x0_delta_class, outside_hypotheses: outside })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel<T: Scalar> {
    /// `log ||x|| = log A - p log t`, `p` free.
    PurePower,
    /// `log ||x|| = log A - (1/2) log t + (1/2) log log t`.
    PowerSqrtLog,
    /// `log ||x|| = log A - p log t` with `p` given.
    FixedPower(T),
}

impl<T: Scalar> DecayModel<T> {
    pub fn name(&self) -> String {
        match self {
            DecayModel::PurePower => "power".into(),
            DecayModel::PowerSqrtLog => "powerlog".into(),
            DecayModel::FixedPower(p) => format!("power_fixed_{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWindow<T: Scalar> {
    /// Last fraction of the log-time span of the positive times.
    Fraction(T),
    Range(T, T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T: Scalar> {
    pub model: DecayModel<T>,
    pub exponent: T,
    pub amplitude: T,
    pub fit_window: (T, T),
    /// Weighted rms of the log-space residual.
    pub rms_residual: T,
    pub points: usize,
    /// Points of the window dropped because the norm was exactly 0.
    pub excluded_zero: usize,
    pub non_decaying: bool,
}

pub const MIN_FIT_POINTS: usize = 30;

/// Weighted least squares in `(log t, log ||x||)`. Each point carries the
/// trapezoid weight of its log-time cell, so uniformly spaced samples do not
/// overweight the late window.
pub fn fit_decay_points<T: Scalar>(
    times: &[T],
    norms: &[T],
    model: DecayModel<T>,
    window: FitWindow<T>,
) -> Result<DecayFit<T>> {
    if times.len() != norms.len() {
        return Err(Error::LengthMismatch { expected: times.len(), got: norms.len() });
    }
    let positive: Vec<f64> = times.iter().map(|t| t.as_f64()).filter(|&t| t > 0.0).collect();
    let (lo, hi) = match window {
        FitWindow::Range(a, b) => (a.as_f64(), b.as_f64()),
        FitWindow::Fraction(f) => {
            let (Some(&first), Some(&last)) = (positive.first(), positive.last()) else {
                return Err(Error::InsufficientData { got: 0, need: MIN_FIT_POINTS });
            };
            let (a, b) = (first.ln(), last.ln());
            ((b - f.as_f64() * (b - a)).exp(), last)
        }
    };
    let needs_loglog = matches!(model, DecayModel::PowerSqrtLog);
    let mut excluded = 0;
    let mut pts = Vec::new();
    for (&t, &y) in times.iter().zip(norms) {
        let t = t.as_f64();
        if t <= 0.0 || t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12) || (needs_loglog && t <= 1.0) {
            continue;
        }
        let y = y.as_f64();
        if y == 0.0 {
            excluded += 1;
            continue;
        }
        pts.push((t.ln(), y.ln()));
    }
    if pts.is_empty() && excluded > 0 {
        return Err(Error::ZeroNorms);
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { got: pts.len(), need: MIN_FIT_POINTS });
    }
    let n = pts.len();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { pts[i].0 - pts[i - 1].0 } else { 0.0 };
            let right = if i + 1 < n { pts[i + 1].0 - pts[i].0 } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let wsum: f64 = weights.iter().sum();
    let weights: Vec<f64> = if wsum > 0.0 { weights } else { vec![1.0; n] };
    let wsum: f64 = weights.iter().sum();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pts.iter().zip(&weights).map(|(p, w)| w * f(p)).sum::<f64>() / wsum;

    let (p, c, resid): (f64, f64, Box<dyn Fn(&(f64, f64)) -> f64>) = match model {
        DecayModel::PurePower => {
            let mx = mean(&|p| p.0);
            let my = mean(&|p| p.1);
            let sxx = mean(&|p| (p.0 - mx).powi(2));
            let sxy = mean(&|p| (p.0 - mx) * (p.1 - my));
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let c = my - slope * mx;
            (-slope, c, Box::new(move |q: &(f64, f64)| q.1 - (c + slope * q.0)))
        }
        DecayModel::FixedPower(pf) => {
            let pf = pf.as_f64();
            let c = mean(&|q| q.1 + pf * q.0);
            (pf, c, Box::new(move |q: &(f64, f64)| q.1 - (c - pf * q.0)))
        }
        DecayModel::PowerSqrtLog => {
            let shape = |l: f64| -0.5 * l + 0.5 * l.ln();
            let c = mean(&|q| q.1 - shape(q.0));
            (0.5, c, Box::new(move |q: &(f64, f64)| q.1 - (c + shape(q.0))))
        }
    };
    let rms = mean(&|q| resid(q).powi(2)).sqrt();
    Ok(DecayFit {
        model,
        exponent: T::lit(p),
        amplitude: T::lit(c.exp()),
        fit_window: (T::lit(pts[0].0.exp()), T::lit(pts[n - 1].0.exp())),
        rms_residual: T::lit(rms),
        points: n,
        excluded_zero: excluded,
        non_decaying: p < 0.02,
    })
}

pub fn fit_decay<T: Scalar>(traj: &Trajectory<T>, model: DecayModel<T>, window: FitWindow<T>) -> Result<DecayFit<T>> {
    fit_decay_points(&traj.times, &traj.norms, model, window)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T: Scalar> {
    /// Fit of `||x(k tau)||` against `k`.
    pub sampled: DecayFit<T>,
    /// Fit of the full trajectory against `t`.
    pub continuous: DecayFit<T>,
    pub exponent_gap: T,
    pub agree: bool,
}

pub const EQUIVALENCE_TOL: f64 = 0.02;

/// Compares the decay exponent of the sampled sequence with that of the
/// continuous trajectory over the same time span.
pub fn equivalence_check<T: Scalar>(
    sys: &TruncatedSystem<T>,
    tau: T,
    x0: &StateVec<T>,
    k_max: usize,
    substeps: usize,
) -> Result<EquivalenceReport<T>> {
    let t_end = tau * T::lit(k_max as f64);
    let traj = simulate_closed_loop(sys, tau, x0, t_end, SimulationOptions::new(substeps))?;
    let ks: Vec<T> = (0..traj.sample_norms.len()).map(|k| T::lit(k as f64)).collect();
    let half = T::lit(0.5);
    let lo = tau * T::lit(k_max as f64).powf(half);
    let sampled = fit_decay_points(&ks, &traj.sample_norms, DecayModel::PurePower, FitWindow::Range(lo / tau, ks[ks.len() - 1]))?;
    let continuous = fit_decay(&traj, DecayModel::PurePower, FitWindow::Range(lo, t_end))?;
    let gap = (sampled.exponent - continuous.exponent).abs();
    Ok(EquivalenceReport { sampled, continuous, exponent_gap: gap, agree: gap <= T::lit(EQUIVALENCE_TOL) })
}
