//! Circle integrals of the sampled resolvent.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{resolvent_delta, resolvent_delta_norm_sqr, spectral_radius_estimate, Orbit, SampledOperator};
use crate::scalar::{cx, czero, Cx, Scalar};
use crate::state::StateVec;

/// Weight applied to the circle integral before letting `r -> 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling<T: Scalar> {
    /// `r - 1`.
    Raw,
    /// `(r - 1)^{1 - 2 delta}`, `0 < delta < 1/2`.
    Power(T),
    /// `|log(r - 1)|^{-1}`.
    Log,
}

impl<T: Scalar> Scaling<T> {
    /// Picks the weight for the decay order `delta`; `delta = 1/2` selects [`Scaling::Log`].
    pub fn for_delta(delta: T) -> Result<Self> {
        let half = T::lit(0.5);
        if (delta - half).abs() <= T::lit(1e-12) {
            Ok(Scaling::Log)
        } else if delta > T::zero() && delta < half {
            Ok(Scaling::Power(delta))
        } else {
            Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1/2]")))
        }
    }

    pub fn delta(&self) -> T {
        match *self {
            Scaling::Raw => T::zero(),
            Scaling::Power(d) => d,
            Scaling::Log => T::lit(0.5),
        }
    }

    pub fn eval(&self, r: T) -> T {
        let h = r - T::one();
        match *self {
            Scaling::Raw => h,
            Scaling::Power(d) => h.powf(T::one() - T::lit(2.0) * d),
            Scaling::Log => h.ln().abs().recip(),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated<T: Scalar> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Compensated<T> {
    fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry = self.carry + ((self.sum - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

fn node<T: Scalar>(r: T, j: usize, nodes: usize) -> Cx<T> {
    Cx::from_polar(r, T::lit(2.0 * PI * j as f64 / nodes as f64))
}

/// Trapezoid rule for `int_0^{2 pi} ||R(r e^{i theta}, Delta) x||^2 d theta`.
///
/// With `adjoint` the operator is replaced by its conjugate transpose.
pub fn circle_integral<T: Scalar>(
    op: &SampledOperator<T>,
    r: T,
    x: &StateVec<T>,
    nodes: usize,
    adjoint: bool,
) -> Result<T> {
    if !(r > T::one()) {
        return Err(Error::InvalidParameter(format!("radius {r} must exceed 1")));
    }
    if nodes == 0 {
        return Err(Error::InvalidParameter("nodes must be positive".into()));
    }
    let adj;
    let op = if adjoint {
        adj = op.adjoint();
        &adj
    } else {
        op
    };
    let mut acc = Compensated::default();
    for j in 0..nodes {
        acc.add(resolvent_delta_norm_sqr(op, node(r, j, nodes), x)?);
    }
    Ok(acc.value() * T::lit(2.0 * PI / nodes as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow<T: Scalar> {
    pub r: T,
    pub raw_integral: T,
    pub scaled_value: T,
    pub nodes: usize,
    pub adjoint: bool,
}

/// Node count as a function of `r`: the integrand has peaks of width about `r - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePolicy {
    pub base: usize,
    /// Nodes per unit of `1 / (r - 1)`.
    pub per_inverse_gap: f64,
    pub cap: usize,
}

impl Default for NodePolicy {
    fn default() -> Self {
        Self { base: 1024, per_inverse_gap: 32.0, cap: 1 << 22 }
    }
}

impl NodePolicy {
    pub fn fixed(nodes: usize) -> Self {
        Self { base: nodes, per_inverse_gap: 0.0, cap: nodes }
    }

    pub fn nodes_for(&self, r: f64) -> usize {
        let want = (self.per_inverse_gap / (r - 1.0)).ceil();
        let want = if want.is_finite() { want as usize } else { self.cap };
        want.max(self.base).next_power_of_two().min(self.cap.max(self.base))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport<T: Scalar> {
    pub scaling: Scaling<T>,
    pub rows: Vec<ScanRow<T>>,
    /// Least-squares slope of `log scaled` against `log(r - 1)`.
    pub slope: T,
    pub tolerance: T,
}

impl<T: Scalar> ScanReport<T> {
    pub fn last_scaled(&self) -> T {
        self.rows.last().map_or(T::zero(), |r| r.scaled_value)
    }

    /// Last scaled value below tolerance and still shrinking towards `r = 1`.
    pub fn trends_to_zero(&self) -> bool {
        self.last_scaled() < self.tolerance && self.slope > T::zero()
    }
}

pub const DEFAULT_SCAN_TOL: f64 = 1e-3;

/// `r_j = 1 + 2^{-j}`, `j = 1..=j_max`.
pub fn default_r_sequence<T: Scalar>(j_max: u32) -> Vec<T> {
    (1..=j_max).map(|j| T::one() + T::lit(0.5f64.powi(j as i32))).collect()
}

fn loglog_slope<T: Scalar>(rows: &[ScanRow<T>]) -> T {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.scaled_value > T::zero())
        .map(|r| ((r.r - T::one()).as_f64().ln(), r.scaled_value.as_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return T::zero();
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        T::zero()
    } else {
        T::lit(sxy / sxx)
    }
}

pub fn scaled_scan<T: Scalar>(
    op: &SampledOperator<T>,
    x: &StateVec<T>,
    scaling: Scaling<T>,
    r_sequence: &[T],
    nodes: NodePolicy,
    adjoint: bool,
    tolerance: T,
) -> Result<ScanReport<T>> {
    if r_sequence.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidParameter("r sequence must be strictly descending".into()));
    }
    if let Some(&r) = r_sequence.last() {
        if r < T::one() + T::lit(1e-6) {
            return Err(Error::InvalidParameter(format!("radius {r} closer to 1 than 1e-6")));
        }
    }
    let mut rows = Vec::with_capacity(r_sequence.len());
    for &r in r_sequence {
        let n = nodes.nodes_for(r.as_f64());
        let raw = circle_integral(op, r, x, n, adjoint)?;
        rows.push(ScanRow { r, raw_integral: raw, scaled_value: scaling.eval(r) * raw, nodes: n, adjoint });
    }
    let slope = loglog_slope(&rows);
    Ok(ScanReport { scaling, rows, slope, tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalResult<T: Scalar> {
    /// `|quadrature / (2 pi) - series|`.
    pub residual: T,
    pub quadrature: T,
    pub series: T,
    pub k_max: usize,
    pub radius_estimate: T,
}

const PARSEVAL_TAIL_TOL: f64 = 1e-12;
const PARSEVAL_MAX_TERMS: usize = 10_000_000;

/// Compares the circle integral against the orbit series
/// `sum_k ||Delta^k x||^2 / r^{2(k+1)}`.
///
/// Without `k_max` the series is cut where the geometric tail bound
/// `sup_k ||Delta^k x||^2 r^{-2K} / (r^2 - 1)` drops below `1e-12`.
pub fn parseval_check<T: Scalar>(
    op: &SampledOperator<T>,
    r: T,
    x: &StateVec<T>,
    nodes: usize,
    k_max: Option<usize>,
) -> Result<ParsevalResult<T>> {
    let rho = spectral_radius_estimate(op, 400);
    if rho + T::lit(0.01) >= r {
        return Err(Error::SeriesDivergence { radius: rho.as_f64(), r: r.as_f64() });
    }
    let quadrature = circle_integral(op, r, x, nodes, false)?;
    let r2 = r * r;
    let mut series = Compensated::default();
    let mut sup = T::zero();
    let mut weight = r2.recip();
    let limit = k_max.unwrap_or(PARSEVAL_MAX_TERMS);
    let mut used = 0;
    for (k, norm) in Orbit::new(op, x, limit)? {
        let n2 = norm * norm;
        series.add(n2 * weight);
        sup = sup.max(n2);
        used = k;
        weight = weight / r2;
        if k_max.is_none() && sup * weight * r2 / (r2 - T::one()) < T::lit(PARSEVAL_TAIL_TOL) {
            break;
        }
    }
    if k_max.is_none() && used >= PARSEVAL_MAX_TERMS {
        return Err(Error::SeriesDivergence { radius: rho.as_f64(), r: r.as_f64() });
    }
    let quad = quadrature / T::lit(2.0 * PI);
    Ok(ParsevalResult {
        residual: (quad - series.value()).abs(),
        quadrature: quad,
        series: series.value(),
        k_max: used,
        radius_estimate: rho,
    })
}

/// `Delta^k x = (r^{k+1} / 2 pi) int e^{i theta (k+1)} R(r e^{i theta}, Delta) x d theta`
/// evaluated with the trapezoid rule.
pub fn contour_power<T: Scalar>(
    op: &SampledOperator<T>,
    x: &StateVec<T>,
    k: usize,
    r: T,
    nodes: usize,
) -> Result<StateVec<T>> {
    if nodes == 0 || !(r > T::zero()) {
        return Err(Error::InvalidParameter("contour needs r > 0 and nodes > 0".into()));
    }
    let mut acc = vec![czero::<T>(); op.len()];
    for j in 0..nodes {
        let z = node(r, j, nodes);
        let phase = Cx::from_polar(T::one(), T::lit(2.0 * PI * ((j * (k + 1)) % nodes) as f64 / nodes as f64));
        let rz = resolvent_delta(op, z, x)?;
        for (a, v) in acc.iter_mut().zip(rz.coeffs()) {
            *a += phase * *v;
        }
    }
    let factor = cx(r.powi(k as i32 + 1) / T::lit(nodes as f64), T::zero());
    Ok(StateVec::new(acc.into_iter().map(|a| a * factor).collect()))
}
