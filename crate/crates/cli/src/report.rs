//! Serializable run report and the output sink.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub config: String,
    pub seed: u64,
    pub version: String,
    pub generator: String,
    /// The wave spectrum is a stand-in family, not an exact operator.
    pub modeled_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub modes: usize,
    pub unstable: Vec<usize>,
    pub beta: f64,
    pub gamma: f64,
    pub tails_complete: bool,
    pub tail_in_sector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSection {
    pub a1: String,
    pub a1_count_in_bad_region: usize,
    pub a2: String,
    pub a2_min_axis_distance: f64,
    pub a2_argmin: usize,
    pub a3: String,
    pub a4: String,
    pub a4_branch: String,
    pub a4_beta_norm: f64,
    pub a4_gamma_norm: f64,
    pub truncation_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackSection {
    pub unstable_indices: Vec<usize>,
    pub f_plus: Vec<[f64; 2]>,
    pub closed_loop_eigenvalues: Vec<[f64; 2]>,
    pub max_target_error: f64,
    pub cauchy_condition: f64,
    pub ill_conditioned: bool,
    pub hurwitz: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousSection {
    pub eps_c: f64,
    pub raw_min: f64,
    pub argmin: [f64; 2],
    pub tail_bound: f64,
    pub truncation_only: bool,
    pub axis_points: usize,
    pub axis_max: f64,
    pub probes: usize,
    pub nudged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRow {
    pub tau: f64,
    pub eps_d: f64,
    pub nonresonant: bool,
    pub exterior_zeros: i64,
    pub nodes: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauStarSection {
    pub floor: f64,
    pub tau_star_estimate: Option<f64>,
    pub rows: Vec<MarginRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsSection {
    pub kappa: f64,
    pub kappa_all: f64,
    pub m1: f64,
    pub upsilon0: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub alpha_tilde: f64,
    pub mode_bound_max_violation: f64,
    pub mode_bound_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSection {
    pub tau: f64,
    pub eps_d: f64,
    pub raw_min: f64,
    pub argmin_theta: f64,
    pub tail_bound: f64,
    pub truncation_only: bool,
    pub nodes_used: usize,
    pub last_change: f64,
    pub converged: bool,
    pub exterior_zeros: i64,
    pub exterior_poles: usize,
    pub nonresonant: bool,
    pub constants: Option<ConstantsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExteriorSection {
    pub tau: f64,
    pub samples: usize,
    pub min_value: f64,
    pub certified: f64,
    pub grid_tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRowOut {
    pub r: f64,
    pub raw: f64,
    pub scaled: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSection {
    pub tau: f64,
    pub delta: f64,
    pub scaling: String,
    pub adjoint: bool,
    pub slope: f64,
    pub last_scaled: f64,
    pub tolerance: f64,
    pub trends_to_zero: bool,
    pub rows: Vec<ScanRowOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySection {
    pub tau: f64,
    pub t_end: f64,
    pub substeps: usize,
    pub points: usize,
    pub samples: usize,
    pub x0_delta_class: f64,
    pub x0_delta_attained: bool,
    pub outside_hypotheses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub model: String,
    pub exponent: f64,
    pub residual: f64,
    pub amplitude: f64,
    pub window: [f64; 2],
    pub points: usize,
    pub non_decaying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub system: SystemSummary,
    pub audit: AuditSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<TauStarSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exterior: Option<ExteriorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySection>,
    pub fits: Vec<FitRow>,
    pub certificates: Vec<Certificate>,
    /// `(t, ||x(t)||)`, written to its own table.
    #[serde(skip)]
    pub trajectory_points: Vec<(f64, f64)>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }

    pub fn certify(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.certificates.push(Certificate { name: name.into(), pass, detail: detail.into() });
    }
}

/// Single writer for every output file of a run.
#[derive(Debug, Clone)]
pub struct OutputSink {
    dir: PathBuf,
}

impl OutputSink {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("report serializes");
        fs::write(&p, text + "\n").map_err(|e| CliError::Io(p.display().to_string(), e))?;
        Ok(p)
    }

    pub fn write_table(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::Io(p.display().to_string(), e))?;
        Ok(p)
    }

    /// Report plus every table the report has data for.
    pub fn write_run(&self, report: &RunReport) -> Result<(), CliError> {
        self.write_json("report.json", report)?;
        if let Some(ts) = &report.tau_star {
            let rows: Vec<_> = ts
                .rows
                .iter()
                .map(|r| vec![fmt(r.tau), fmt(r.eps_d), r.nonresonant.to_string()])
                .collect();
            self.write_table("margins.csv", &["tau", "eps_d", "nonresonant"], &rows)?;
        }
        if let Some(scan) = &report.scan {
            let rows: Vec<_> = scan
                .rows
                .iter()
                .map(|r| vec![fmt(r.r), fmt(r.raw), fmt(r.scaled), r.nodes.to_string()])
                .collect();
            self.write_table("scan.csv", &["r", "raw", "scaled", "nodes"], &rows)?;
        }
        if !report.trajectory_points.is_empty() {
            let rows: Vec<_> = report.trajectory_points.iter().map(|(t, n)| vec![fmt(*t), fmt(*n)]).collect();
            self.write_table("trajectory.csv", &["t", "norm"], &rows)?;
        }
        if !report.fits.is_empty() {
            let rows: Vec<_> = report
                .fits
                .iter()
                .map(|f| vec![f.model.clone(), fmt(f.exponent), fmt(f.residual)])
                .collect();
            self.write_table("fits.csv", &["model", "exponent", "residual"], &rows)?;
        }
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a `(t, norm)` table.
pub fn read_trajectory(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Csv(format!("{}: missing column '{name}'", path.display())))
    };
    let (ti, ni) = (col("t")?, col("norm")?);
    let (mut t, mut n) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| CliError::Csv(format!("{}: bad number in row {:?}", path.display(), rec)))
        };
        t.push(parse(ti)?);
        n.push(parse(ni)?);
    }
    Ok((t, n))
}
