//! audit -> margins -> tau* -> simulate -> fit, plus the resolvent scan.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use sampled_modal::decay::{DecayModel, FitWindow, Recording, SimulationOptions, Trajectory};
use sampled_modal::modal::Verdict;
use sampled_modal::resolvent::{NodePolicy, Scaling};
use sampled_modal::stability::{sampling_gap, FeedbackDesign};
use sampled_modal::{
    audit_assumptions, check_nonresonance, continuous_margin, default_r_sequence, design_feedback, discrete_margin,
    estimate_tau_star, exterior_min, fit_decay_points, gamma_constants, generate_explicit, generate_synthetic,
    generate_wave, h_tail_for, scaled_scan, simulate_closed_loop, split_spectrum, synthetic_state, verify_mode_bound,
    wave_state, ExtraMode, InitialLaw, Mode, Operator, PowerLaw, Sector, State, SyntheticParams, System, WaveInput,
    WaveParams, DISCRETE_MARGIN_REFINE_TOL,
};

use crate::config::{parse_grid, Config, FeedbackConfig, GeneratorConfig, Pair, SamplingConfig, ScanConfig};
use crate::error::{CliError, StageExt};
use crate::report::*;

fn cx(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// System, initial state and feedback design built from a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sys: System,
    pub x0: State,
    pub x0_delta: (f64, bool),
    pub design: Option<FeedbackDesign<f64>>,
    pub generator: String,
    pub modeled_spectrum: bool,
}

pub fn prepare(cfg: &Config) -> Result<Prepared, CliError> {
    let sector = Sector::new(cfg.sector.alpha, cfg.sector.upsilon, cfg.sector.omega).stage("generator")?;
    let (beta, gamma) = (cfg.coupling.beta, cfg.coupling.gamma);
    let law = InitialLaw { scale: cfg.simulation.x0.scale, q: cfg.simulation.x0.q, log_power: cfg.simulation.x0.log_power };
    let (sys, x0, name, modeled) = match &cfg.generator {
        GeneratorConfig::Explicit { modes } => {
            let modes: Vec<Mode> = modes.iter().map(|m| Mode::new(cx(m.lambda), cx(m.b), cx(m.f))).collect();
            let n = modes.len();
            let sys = generate_explicit(modes, sector, beta, gamma, None).stage("generator")?;
            (sys, synthetic_state(n, &law), "explicit", false)
        }
        GeneratorConfig::SyntheticPolynomial { n_trunc, alpha, upsilon_scale, b_law, f_law } => {
            let sys = generate_synthetic(&SyntheticParams {
                alpha: *alpha,
                upsilon_scale: *upsilon_scale,
                n: *n_trunc,
                b_law: PowerLaw::new(b_law.scale, b_law.q),
                f_law: PowerLaw::new(f_law.scale, f_law.q),
                sector,
                beta,
                gamma,
            })
            .stage("generator")?;
            (sys, synthetic_state(*n_trunc, &law), "synthetic_polynomial", false)
        }
        GeneratorConfig::WavePerturbed { n_pairs, upsilon, alpha, b0_law, b0_coeffs, extra_modes, f2_law } => {
            let b0 = match (b0_law, b0_coeffs) {
                (Some(l), _) => WaveInput::Law(PowerLaw::new(l.scale, l.q)),
                (None, Some(c)) => WaveInput::Coefficients(c.clone()),
                (None, None) => return Err(CliError::Config("wave generator needs b0".into())),
            };
            let sys = generate_wave(&WaveParams {
                n_pairs: *n_pairs,
                upsilon: *upsilon,
                alpha: *alpha,
                omega: cfg.sector.omega,
                b0,
                extra_modes: extra_modes.iter().map(|m| ExtraMode { lambda: cx(m.lambda), b: cx(m.b) }).collect(),
                f2: PowerLaw::new(f2_law.scale, f2_law.q),
                beta,
                gamma,
            })
            .stage("generator")?;
            let x0 = wave_state(extra_modes.len(), *n_pairs, &law, cfg.simulation.x0.extra);
            (sys, x0, "wave_perturbed", true)
        }
    };
    let (sys, design) = match &cfg.feedback {
        FeedbackConfig::Given => (sys, None),
        FeedbackConfig::Designed { targets } => {
            let targets: Vec<Complex64> = targets.iter().map(|&t| cx(t)).collect();
            let d = design_feedback(&sys, &targets).stage("feedback")?;
            let mut f = sys.f();
            for (&i, &v) in d.unstable_indices.iter().zip(&d.f_plus) {
                f[i] = v;
            }
            (sys.with_feedback(&f).stage("feedback")?, Some(d))
        }
    };
    Ok(Prepared { sys, x0, x0_delta: law.delta_class(), design, generator: name.into(), modeled_spectrum: modeled })
}

pub fn audit_stage(sys: &System) -> Result<(AuditSection, bool), CliError> {
    let a = audit_assumptions(sys).stage("audit")?;
    let v = |v: Verdict| format!("{v:?}").to_lowercase();
    let ok = a.all_decidable_pass();
    Ok((
        AuditSection {
            a1: v(a.a1),
            a1_count_in_bad_region: a.a1_count_in_bad_region,
            a2: v(a.a2),
            a2_min_axis_distance: a.a2_min_axis_distance,
            a2_argmin: a.a2_argmin,
            a3: v(a.a3),
            a4: v(a.a4),
            a4_branch: format!("{:?}", a.a4_branch).to_lowercase(),
            a4_beta_norm: a.a4_beta_norm,
            a4_gamma_norm: a.a4_gamma_norm,
            truncation_only: a.truncation_only,
        },
        ok,
    ))
}

pub fn continuous_stage(sys: &System, s: &SamplingConfig) -> Result<ContinuousSection, CliError> {
    let wmax = s
        .axis_max
        .unwrap_or_else(|| 1.5 * sys.lambdas().map(|l| l.im.abs()).fold(0.0, f64::max) + 10.0);
    let m = s.axis_points.max(2);
    let grid: Vec<f64> = (0..m).map(|k| -wmax + 2.0 * wmax * k as f64 / (m - 1) as f64).collect();
    let mut probes = Vec::new();
    for re in [0.05, 0.25, 0.5, 1.0, 2.0, 4.0] {
        for k in -16..=16 {
            probes.push(Complex64::new(re, 0.5 * k as f64));
        }
    }
    let c = continuous_margin(sys, &grid, &probes).stage("continuous margin")?;
    Ok(ContinuousSection {
        eps_c: c.eps_c,
        raw_min: c.raw_min,
        argmin: pair(c.argmin),
        tail_bound: c.tail_bound,
        truncation_only: c.truncation_only,
        axis_points: m,
        axis_max: wmax,
        probes: probes.len(),
        nudged: c.nudged,
    })
}

pub fn tau_star_stage(sys: &System, grid: &[f64], floor: f64, nodes: usize) -> Result<TauStarSection, CliError> {
    let r = estimate_tau_star(sys, grid, floor, nodes).stage("tau star")?;
    Ok(TauStarSection {
        floor,
        tau_star_estimate: r.tau_star_estimate,
        rows: r
            .rows
            .iter()
            .map(|row| MarginRow {
                tau: row.tau,
                eps_d: row.margin.eps_d,
                nonresonant: row.nonresonant,
                exterior_zeros: row.margin.exterior_zeros,
                nodes: row.margin.nodes_used,
                pass: row.pass,
            })
            .collect(),
    })
}

fn mode_bound_samples() -> Vec<Complex64> {
    let mut zs = Vec::new();
    for rad in [1.0, 1.25, 1.5, 2.0] {
        for k in 0..64 {
            zs.push(Complex64::from_polar(rad, TAU * (k as f64 + 0.5) / 64.0));
        }
    }
    zs
}

pub fn discrete_stage(sys: &System, tau: f64, nodes: usize) -> Result<DiscreteSection, CliError> {
    let op = Operator::new(sys, tau).stage("discrete margin")?;
    let m = discrete_margin(&op, nodes, h_tail_for(sys, tau)).stage("discrete margin")?;
    let (c1, _) = sampling_gap(sys, tau);
    let constants = match gamma_constants(sys, tau, sys.beta + sys.gamma, if c1.is_finite() { c1 } else { 1.0 }) {
        Ok(k) => {
            let check = verify_mode_bound(sys, tau, &mode_bound_samples(), &k).stage("mode bound")?;
            Some(ConstantsSection {
                kappa: k.kappa,
                kappa_all: k.kappa_all,
                m1: k.m1,
                upsilon0: k.upsilon0,
                upsilon1: k.upsilon1,
                upsilon2: k.upsilon2,
                alpha_tilde: k.alpha_tilde,
                mode_bound_max_violation: check.max_violation,
                mode_bound_pairs: check.evaluated,
            })
        }
        Err(_) => None,
    };
    Ok(DiscreteSection {
        tau,
        eps_d: m.eps_d,
        raw_min: m.raw_min,
        argmin_theta: m.argmin_theta,
        tail_bound: m.tail_bound,
        truncation_only: m.truncation_only,
        nodes_used: m.nodes_used,
        last_change: m.last_change,
        converged: m.converged,
        exterior_zeros: m.exterior_zeros,
        exterior_poles: m.exterior_poles,
        nonresonant: check_nonresonance(sys, tau),
        constants,
    })
}

/// Random points with `1 < |z| <= 2`.
pub fn exterior_points(rng: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let r = 2.0 - rng.random_range(0.0..1.0);
            Complex64::from_polar(r, rng.random_range(0.0..TAU))
        })
        .collect()
}

pub fn exterior_stage(
    sys: &System,
    disc: &DiscreteSection,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ExteriorSection, CliError> {
    let op = Operator::new(sys, disc.tau).stage("exterior scan")?;
    let zs = exterior_points(rng, samples);
    let min = exterior_min(&op, Some(disc.tail_bound), &zs).stage("exterior scan")?;
    let tol = DISCRETE_MARGIN_REFINE_TOL + disc.last_change.max(0.0);
    Ok(ExteriorSection {
        tau: disc.tau,
        samples,
        min_value: min,
        certified: disc.eps_d,
        grid_tolerance: tol,
        pass: min >= disc.eps_d - tol,
    })
}

pub fn simulate_stage(
    prep: &Prepared,
    tau: f64,
    t_end: f64,
    substeps: usize,
    per_decade: usize,
) -> Result<(TrajectorySection, Trajectory<f64>), CliError> {
    let recording = if per_decade == 0 { Recording::All } else { Recording::LogSpaced { per_decade } };
    let opts = SimulationOptions { substeps, recording, x0_delta_class: Some(prep.x0_delta.0) };
    let traj = simulate_closed_loop(&prep.sys, tau, &prep.x0, t_end, opts).stage("simulate")?;
    Ok((
        TrajectorySection {
            tau,
            t_end,
            substeps,
            points: traj.times.len(),
            samples: traj.sample_norms.len(),
            x0_delta_class: prep.x0_delta.0,
            x0_delta_attained: prep.x0_delta.1,
            outside_hypotheses: traj.outside_hypotheses,
        },
        traj,
    ))
}

pub fn fit_row(times: &[f64], norms: &[f64], model: DecayModel<f64>, window: FitWindow<f64>) -> Result<FitRow, CliError> {
    let f = fit_decay_points(times, norms, model, window).stage("fit")?;
    Ok(FitRow {
        model: model.name(),
        exponent: f.exponent,
        residual: f.rms_residual,
        amplitude: f.amplitude,
        window: [f.fit_window.0, f.fit_window.1],
        points: f.points,
        non_decaying: f.non_decaying,
    })
}

/// Free power law, the square-root-log law and the power law pinned at 1/2.
pub fn fit_stage(times: &[f64], norms: &[f64], window: FitWindow<f64>) -> Result<Vec<FitRow>, CliError> {
    [DecayModel::PurePower, DecayModel::PowerSqrtLog, DecayModel::FixedPower(0.5)]
        .into_iter()
        .map(|m| fit_row(times, norms, m, window))
        .collect()
}

pub fn scan_stage(sys: &System, x0: &State, tau: f64, scans: &ScanConfig) -> Result<ScanSection, CliError> {
    let op = Operator::new(sys, tau).stage("resolvent scan")?;
    let scaling = if scans.delta == 0.0 { Scaling::Raw } else { Scaling::for_delta(scans.delta).stage("resolvent scan")? };
    let rep = scaled_scan(
        &op,
        x0,
        scaling,
        &default_r_sequence(scans.j_max),
        NodePolicy::default(),
        scans.adjoint,
        scans.tolerance,
    )
    .stage("resolvent scan")?;
    Ok(ScanSection {
        tau,
        delta: scans.delta,
        scaling: format!("{scaling:?}").to_lowercase(),
        adjoint: scans.adjoint,
        slope: rep.slope,
        last_scaled: rep.last_scaled(),
        tolerance: rep.tolerance,
        trends_to_zero: rep.trends_to_zero(),
        rows: rep
            .rows
            .iter()
            .map(|r| ScanRowOut { r: r.r, raw: r.raw_integral, scaled: r.scaled_value, nodes: r.nodes })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Request {
    Audit,
    Margins,
    TauStar,
    Simulate,
    ResolventScan,
    Full,
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub tau_grid: Option<String>,
    pub t_end: Option<f64>,
    pub substeps: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) -> Result<(), CliError> {
        if let Some(t) = self.tau {
            cfg.sampling.tau = Some(t);
        }
        if let Some(g) = &self.tau_grid {
            parse_grid(g)?;
            cfg.sampling.tau_grid = g.clone();
        }
        if let Some(t) = self.t_end {
            cfg.simulation.t_end = t;
        }
        if let Some(s) = self.substeps {
            cfg.simulation.substeps = s;
        }
        if let Some(d) = self.delta {
            cfg.scans.delta = d;
        }
        if let Some(s) = self.seed {
            cfg.scans.seed = s;
        }
        Ok(())
    }
}

pub fn config_hash(cfg: &Config) -> String {
    hex::encode(Sha256::digest(cfg.canonical().as_bytes()))
}

fn pick_tau(cfg: &Config, tau_star: Option<f64>) -> Option<f64> {
    cfg.sampling.tau.or_else(|| tau_star.map(|t| cfg.sampling.tau_fraction * t))
}

pub fn run_pipeline(cfg: &Config, request: Request) -> Result<RunReport, CliError> {
    let prep = prepare(cfg)?;
    let sys = &prep.sys;
    let (audit, audit_ok) = audit_stage(sys)?;
    let mut report = RunReport {
        provenance: Provenance {
            config_sha256: config_hash(cfg),
            config: cfg.canonical(),
            seed: cfg.scans.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            generator: prep.generator.clone(),
            modeled_spectrum: prep.modeled_spectrum,
        },
        system: SystemSummary {
            modes: sys.len(),
            unstable: split_spectrum(sys).unstable_indices,
            beta: sys.beta,
            gamma: sys.gamma,
            tails_complete: sys.tails.is_complete(),
            tail_in_sector: sys.tail_in_sector,
        },
        feedback: prep.design.as_ref().map(|d| FeedbackSection {
            unstable_indices: d.unstable_indices.clone(),
            f_plus: d.f_plus.iter().map(|&c| pair(c)).collect(),
            closed_loop_eigenvalues: d.closed_loop_eigenvalues.iter().map(|&c| pair(c)).collect(),
            max_target_error: d.max_target_error,
            cauchy_condition: d.cauchy_condition,
            ill_conditioned: d.ill_conditioned,
            hurwitz: d.hurwitz,
        }),
        audit: audit.clone(),
        continuous: None,
        tau_star: None,
        discrete: None,
        exterior: None,
        scan: None,
        trajectory: None,
        fits: Vec::new(),
        certificates: Vec::new(),
        trajectory_points: Vec::new(),
    };
    report.certify("audit", audit_ok, format!("a1={} a2={} a4={}", audit.a1, audit.a2, audit.a4));
    if !audit_ok || request == Request::Audit {
        return Ok(report);
    }

    let needs_margins = matches!(request, Request::Margins | Request::TauStar | Request::Full)
        || cfg.sampling.tau.is_none();
    let mut tau_star = None;
    if needs_margins {
        let cont = continuous_stage(sys, &cfg.sampling)?;
        report.certify("eps_c", cont.eps_c > 0.0, format!("eps_c = {:.6e}", cont.eps_c));
        let floor = cfg.sampling.eps_d_floor.unwrap_or(cont.eps_c / 2.0);
        report.continuous = Some(cont);
        let grid = parse_grid(&cfg.sampling.tau_grid)?;
        let ts = tau_star_stage(sys, &grid, floor, cfg.sampling.circle_nodes)?;
        tau_star = ts.tau_star_estimate;
        match request {
            Request::Margins => {
                let all = ts.rows.iter().all(|r| r.pass);
                report.certify("margins", all, format!("{} of {} grid points pass", ts.rows.iter().filter(|r| r.pass).count(), ts.rows.len()));
            }
            _ => report.certify("tau_star", tau_star.is_some(), format!("tau* = {tau_star:?}")),
        }
        report.tau_star = Some(ts);
    }
    if matches!(request, Request::Margins | Request::TauStar) {
        return Ok(report);
    }

    let Some(tau) = pick_tau(cfg, tau_star) else {
        return Ok(report);
    };

    let disc = discrete_stage(sys, tau, cfg.sampling.circle_nodes)?;
    if request == Request::Full {
        let floor = report.tau_star.as_ref().map_or(0.0, |t| t.floor);
        let ok = disc.eps_d >= floor && disc.nonresonant && disc.exterior_zeros == 0;
        report.certify("discrete_margin", ok, format!("eps_d = {:.6e} at tau = {tau}", disc.eps_d));
        if let Some(k) = &disc.constants {
            report.certify("mode_bound", k.mode_bound_max_violation <= 0.0, format!("max violation {:.3e}", k.mode_bound_max_violation));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.scans.seed);
        let ext = exterior_stage(sys, &disc, cfg.scans.exterior_samples, &mut rng)?;
        report.certify("exterior_scan", ext.pass, format!("min {:.6e} over {} points", ext.min_value, ext.samples));
        report.exterior = Some(ext);
    }
    report.discrete = Some(disc);

    if matches!(request, Request::Simulate | Request::Full) {
        let s = &cfg.simulation;
        let (section, traj) = simulate_stage(&prep, tau, s.t_end, s.substeps, s.per_decade)?;
        report.fits = fit_stage(&traj.times, &traj.norms, FitWindow::Range(s.fit_window[0], s.fit_window[1]))?;
        report.trajectory_points = traj.times.iter().copied().zip(traj.norms.iter().copied()).collect();
        report.trajectory = Some(section);
    }
    if matches!(request, Request::ResolventScan | Request::Full) {
        let scan = scan_stage(sys, &prep.x0, tau, &cfg.scans)?;
        if request == Request::ResolventScan {
            report.certify("resolvent_scan", scan.trends_to_zero, format!("slope {:.3}, last {:.3e}", scan.slope, scan.last_scaled));
        }
        report.scan = Some(scan);
    }
    Ok(report)
}
