//! The four scenarios: relaxation, classification, stability map and
//! temperature sweep.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::model::{
    characteristic_speed, classify_points, make_general_t, make_modified_t0, make_nelson,
    ClassificationSummary, PdeSystem, TypeTag,
};
use crate::scheme::{run_about, Boundary, DiagnosticSample, FieldState, RunReport, RunStatus};
use crate::stability::{gamma_polygon, StabilityMap, STABILITY_TOL};
use crate::thermo::EffectiveQuantities;

use super::config::{write_config, ScenarioConfig};
use super::output::{
    create_dir, diagnostics_csv, fmt_f64, relaxation_plot_script, snapshot_csv,
    stability_plot_script, write_file, write_json,
};
use super::HarnessError;

/// Extrema below this fraction of the peak `|v − v∞|` are ignored.
pub const TWO_HUMP_FLOOR: f64 = 1e-3;

/// Runs the configured system from its initial bump, recording snapshots at
/// [`ScenarioConfig::relaxation_times`]. Nothing is written.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let sys = cfg.pde_system();
    let init = cfg.initial_field();
    Ok(run_about(&sys, &init, &cfg.solver, &cfg.relaxation_times(), cfg.background())?)
}

/// One contiguous same-sign excursion of `v − v∞` above the amplitude floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lobe {
    pub first: usize,
    pub last: usize,
    /// Position and signed value of the lobe's extremum.
    pub q: f64,
    pub value: f64,
    /// Whether the lobe touches a far-field boundary node.
    pub touches_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoHump {
    pub t: f64,
    pub amplitude: f64,
    pub lobes: Vec<Lobe>,
    /// Exactly two interior lobes of opposite sign.
    pub detected: bool,
}

/// Sign analysis of `v − v∞` at the first step `t = τ`.
pub fn report_two_hump(report: &RunReport) -> Result<TwoHump, HarnessError> {
    let tau = report
        .snapshots
        .first()
        .map(|s| s.grid.tau)
        .ok_or(HarnessError::MissingSnapshot(f64::NAN))?;
    let t = report.snapshots[0].t + tau;
    let snap = report.snapshot_at(t).ok_or(HarnessError::MissingSnapshot(t))?;
    two_hump_profile(snap, report.reference.v)
}

fn two_hump_profile(field: &FieldState, v_inf: f64) -> Result<TwoHump, HarnessError> {
    let d: Vec<f64> = field.v.iter().map(|v| v - v_inf).collect();
    let amplitude = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if amplitude < 1e-12 {
        return Err(HarnessError::InsufficientAmplitude { max: amplitude });
    }
    let floor = TWO_HUMP_FLOOR * amplitude;
    let sign = |x: f64| if x > floor { 1 } else if x < -floor { -1 } else { 0 };
    let n = d.len();
    let far = field.grid.boundary == Boundary::FarField;

    let mut runs: Vec<(usize, usize, i32)> = Vec::new();
    let mut k = 0;
    while k < n {
        let s = sign(d[k]);
        if s == 0 {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < n && sign(d[k + 1]) == s {
            k += 1;
        }
        runs.push((start, k, s));
        k += 1;
    }
    // A periodic lobe may straddle the seam.
    if !far && runs.len() > 1 {
        let (f0, _, fs) = runs[0];
        let (_, ll, ls) = runs[runs.len() - 1];
        if f0 == 0 && ll == n - 1 && fs == ls {
            let (_, first_last, _) = runs.remove(0);
            let tail = runs.last_mut().expect("at least one run remains");
            tail.1 = first_last;
        }
    }

    let lobes: Vec<Lobe> = runs
        .into_iter()
        .map(|(first, last, _)| {
            let span = if last >= first { last - first + 1 } else { n - first + last + 1 };
            let (kmax, value) = (0..span)
                .map(|j| (first + j) % n)
                .map(|k| (k, d[k]))
                .fold((first, 0.0f64), |best, cur| if cur.1.abs() > best.1.abs() { cur } else { best });
            Lobe {
                first,
                last,
                q: field.grid.node(kmax),
                value,
                touches_boundary: far && (first == 0 || last == n - 1),
            }
        })
        .collect();
    let detected = lobes.len() == 2
        && lobes.iter().all(|l| !l.touches_boundary)
        && lobes[0].value.signum() != lobes[1].value.signum();
    Ok(TwoHump {
        t: field.t,
        amplitude,
        lobes,
        detected,
    })
}

#[derive(Debug, Clone)]
pub struct RelaxationOutcome {
    pub report: RunReport,
    pub two_hump: Option<TwoHump>,
    pub files: Vec<PathBuf>,
}

impl RelaxationOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.status.exit_code()
    }
}

/// Runs the relaxation scenario and writes snapshots, diagnostics, a summary
/// and a plot script into `out_dir`.
pub fn run_relaxation(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RelaxationOutcome, HarnessError> {
    let report = simulate(cfg)?;
    let two_hump = report_two_hump(&report).ok();
    create_dir(out_dir)?;

    let mut files = vec![write_file(&out_dir.join("config.txt"), &write_config(cfg))?];
    let mut listed = Vec::with_capacity(report.snapshots.len());
    for (idx, snap) in report.snapshots.iter().enumerate() {
        let name = format!("snapshot_{idx:02}.csv");
        files.push(write_file(&out_dir.join(&name), &snapshot_csv(snap))?);
        listed.push((name, snap.t));
    }
    files.push(write_file(&out_dir.join("diagnostics.csv"), &diagnostics_csv(&report.diagnostics))?);
    files.push(write_file(&out_dir.join("plot.gp"), &relaxation_plot_script(&listed))?);

    let reference = report.reference;
    let panels: Vec<_> = report
        .snapshots
        .iter()
        .zip(&listed)
        .map(|(snap, (file, t))| {
            let d = DiagnosticSample::measure(snap, reference, 0, 0);
            json!({ "file": file, "t": t, "max_du": d.max_du, "max_dv": d.max_dv, "centroid": d.centroid })
        })
        .collect();
    let summary = json!({
        "system": report.system,
        "status": report.status.as_str(),
        "exit_code": report.status.exit_code(),
        "failure": report.failure,
        "steps_taken": report.steps_taken,
        "max_picard_iterations": report.max_picard_iterations,
        "max_relative_residual": report.max_relative_residual,
        "h": cfg.h(),
        "tau": cfg.tau(),
        "gamma": cfg.grid.gamma,
        "xi": cfg.xi(),
        "thermo": EffectiveQuantities::evaluate(&cfg.thermo)?,
        "snapshots": panels,
        "two_hump": two_hump,
    });
    files.push(write_json(&out_dir.join("summary.json"), &summary)?);
    Ok(RelaxationOutcome { report, two_hump, files })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemClassification {
    pub system: String,
    pub xi: Option<f64>,
    pub summary: ClassificationSummary,
    pub uniform_type: Option<TypeTag>,
    /// Range of the characteristic speed `u + v`, for parabolic systems.
    pub speed_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub t: f64,
    pub systems: Vec<SystemClassification>,
}

fn builtin_systems(xi: f64) -> Vec<PdeSystem> {
    vec![
        make_nelson(),
        make_modified_t0(),
        make_general_t(xi).expect("configs always yield Ξ_T >= 1"),
    ]
}

/// Classifies the configured initial field under all three systems.
pub fn classification_report(cfg: &ScenarioConfig) -> Result<ClassificationReport, HarnessError> {
    cfg.validate()?;
    let field = cfg.initial_field();
    let systems = builtin_systems(cfg.xi())
        .iter()
        .map(|sys| {
            let fc = classify_points(sys, field.t, field.states());
            let uniform_type = fc.summary.uniform_type();
            let speed_range = (uniform_type == Some(TypeTag::Parabolic))
                .then(|| {
                    field.states().try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
                        characteristic_speed(sys, s).map(|c| (lo.min(c), hi.max(c)))
                    })
                })
                .transpose()
                .map_err(crate::error::SolverError::from)?;
            Ok(SystemClassification {
                system: sys.name().to_owned(),
                xi: sys.xi(),
                summary: fc.summary,
                uniform_type,
                speed_range,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(ClassificationReport { t: field.t, systems })
}

/// Writes `classification.json` and a per-node `classification.csv`.
pub fn run_classification_report(
    cfg: &ScenarioConfig,
    out_dir: &Path,
) -> Result<(ClassificationReport, Vec<PathBuf>), HarnessError> {
    let report = classification_report(cfg)?;
    create_dir(out_dir)?;
    let field = cfg.initial_field();
    let per_system: Vec<Vec<f64>> = builtin_systems(cfg.xi())
        .iter()
        .map(|sys| {
            classify_points(sys, field.t, field.states())
                .points
                .iter()
                .map(|c| c.discriminant)
                .collect()
        })
        .collect();
    let mut csv = String::from(
        "q,u,v,nelson_discriminant,modified_t0_discriminant,general_t_discriminant,characteristic_speed\n",
    );
    for (k, (q, s)) in field.states().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(q),
            fmt_f64(s.u),
            fmt_f64(s.v),
            fmt_f64(per_system[0][k]),
            fmt_f64(per_system[1][k]),
            fmt_f64(per_system[2][k]),
            fmt_f64(s.u + s.v),
        ));
    }
    let files = vec![
        write_file(&out_dir.join("classification.csv"), &csv)?,
        write_json(&out_dir.join("classification.json"), &report)?,
    ];
    Ok((report, files))
}

#[derive(Debug, Clone)]
pub struct StabilityMapOutcome {
    pub map: StabilityMap,
    pub files: Vec<PathBuf>,
}

/// Evaluates `max|η|` over `a_gamma × θ` and samples the boundary curve.
pub fn run_stability_map(
    a_gamma: &[f64],
    n_theta: usize,
    curve_samples: usize,
    out_dir: &Path,
) -> Result<StabilityMapOutcome, HarnessError> {
    let map = StabilityMap::compute(a_gamma, n_theta)?;
    create_dir(out_dir)?;
    let mut csv = String::from("a_gamma,theta,max_modulus,stable\n");
    for (i, &ag) in map.a_gamma.iter().enumerate() {
        for (j, &th) in map.theta.iter().enumerate() {
            let m = map.max_modulus[i * map.theta.len() + j];
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(ag),
                fmt_f64(th),
                fmt_f64(m),
                m <= 1.0 + STABILITY_TOL
            ));
        }
    }
    let mut curve = String::from("phi,r,s\n");
    for p in gamma_polygon(curve_samples) {
        curve.push_str(&format!("{},{},{}\n", fmt_f64(p.phi), fmt_f64(p.r), fmt_f64(p.s)));
    }
    let summary = json!({
        "a_gamma": map.a_gamma,
        "n_theta": n_theta,
        "all_stable": map.all_stable(),
        "worst_modulus": map.worst(),
    });
    let files = vec![
        write_file(&out_dir.join("stability_map.csv"), &csv)?,
        write_file(&out_dir.join("gamma_curve.csv"), &curve)?,
        write_json(&out_dir.join("summary.json"), &summary)?,
        write_file(&out_dir.join("plot.gp"), &stability_plot_script())?,
    ];
    Ok(StabilityMapOutcome { map, files })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub temperature: f64,
    pub xi: f64,
    pub upsilon: f64,
    pub d_eff: f64,
    pub status: RunStatus,
    pub steps_taken: usize,
    pub halving_time: Option<f64>,
    pub final_max_du: f64,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub entries: Vec<SweepEntry>,
    pub files: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        worst_status(self.entries.iter().map(|e| e.status)).exit_code()
    }
}

/// First time at which `max|u − u∞|` falls to half its initial value.
pub fn halving_time(diagnostics: &[DiagnosticSample]) -> Option<f64> {
    let first = diagnostics.first()?;
    diagnostics
        .iter()
        .skip(1)
        .find(|d| d.max_du <= 0.5 * first.max_du)
        .map(|d| d.t)
}

/// `Diverged` outranks `IterationFailed`, which outranks `Completed`.
pub fn worst_status(statuses: impl IntoIterator<Item = RunStatus>) -> RunStatus {
    let rank = |s: RunStatus| match s {
        RunStatus::Completed => 0,
        RunStatus::IterationFailed => 1,
        RunStatus::Diverged => 2,
    };
    statuses
        .into_iter()
        .max_by_key(|&s| rank(s))
        .unwrap_or(RunStatus::Completed)
}

/// Runs the warm-vacuum system at each temperature (concurrently), writing
/// each run into `T_<index>/` and a `sweep.csv` table.
pub fn run_temperature_sweep(
    cfg: &ScenarioConfig,
    temperatures: &[f64],
    out_dir: &Path,
) -> Result<SweepOutcome, HarnessError> {
    create_dir(out_dir)?;
    let entries = temperatures
        .par_iter()
        .enumerate()
        .map(|(idx, &temperature)| {
            let mut run_cfg = cfg.clone();
            run_cfg.system = crate::model::SystemLabel::GeneralT;
            run_cfg.thermo.temperature = temperature;
            let eff = EffectiveQuantities::evaluate(&run_cfg.thermo)?;
            let dir = out_dir.join(format!("T_{idx:02}"));
            let outcome = run_relaxation(&run_cfg, &dir)?;
            let report = &outcome.report;
            Ok(SweepEntry {
                temperature,
                xi: eff.xi,
                upsilon: eff.upsilon,
                d_eff: eff.diffusion,
                status: report.status,
                steps_taken: report.steps_taken,
                halving_time: halving_time(&report.diagnostics),
                final_max_du: report.diagnostics.last().map_or(f64::NAN, |d| d.max_du),
                dir,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut csv = String::from("temperature,xi,upsilon,d_eff,status,steps_taken,halving_time,final_max_du\n");
    for e in &entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(e.temperature),
            fmt_f64(e.xi),
            fmt_f64(e.upsilon),
            fmt_f64(e.d_eff),
            e.status.as_str(),
            e.steps_taken,
            e.halving_time.map(fmt_f64).unwrap_or_default(),
            fmt_f64(e.final_max_du),
        ));
    }
    let files = vec![write_file(&out_dir.join("sweep.csv"), &csv)?];
    Ok(SweepOutcome { entries, files })
}
