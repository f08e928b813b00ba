//! Scenario ingestion, execution, report assembly, and the CSV/JSON
//! serialization contracts used by the command-line front end.
//!
//! A scenario is a JSON document naming a model family, its parameters, a
//! grid, an initial state, and a list of analyses. Reports echo every
//! resolved default (grid, seed, tolerances) so that any phase value in them
//! can be reproduced bit for bit from the report alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{rephase_frame, rephase_trajectory, GaugeFunction};
use crate::hamiltonian::{
    closed_form_interference, closed_form_interference_unsigned, closed_form_phases, eigen_frame,
    frame_row, signed_solid_angle, Branch, CustomSpec, HamiltonianSpec,
};
use crate::phase::{aa_phase, berry_phase, phase_report, PhaseReport};
use crate::propagator::{check_cyclic, propagate, CyclicityVerdict, DEFAULT_CYCLIC_TOL};
use crate::state::{wrap_angle, ComplexState, TimeGrid, Trajectory};
use crate::superpose::{
    interference_intensity, nonlinear_superposition_test, resonance_check, superpose,
    SuperpositionSpec,
};
use crate::wframe::{build_w_frame, effective_hamiltonian, frame_holonomy, reconstruct_amplitude};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_FUZZ_COUNT: u32 = 100;

/// One requested analysis, with its per-analysis options.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    /// Phase decomposition with oracle comparison rows.
    Phases,
    /// Periodic frame construction, effective generator, reconstruction.
    Frame,
    /// Two-branch superposition: linearity, nonlinear dichotomy.
    Superpose {
        #[serde(skip_serializing_if = "Option::is_none")]
        coefficients: Option<[[f64; 2]; 2]>,
    },
    /// Endpoint interference, exact vs unsigned-solid-angle convention.
    Interfere,
    /// Integer resonance conditions for two-branch cyclicity.
    Resonance,
    /// Seeded random-rephasing invariance checks.
    GaugeFuzz {
        #[serde(skip_serializing_if = "Option::is_none")]
        count: Option<u32>,
    },
}

/// Initial state: a named construction at t = 0, or explicit amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialState {
    Tag(String),
    Custom { custom: Vec<[f64; 2]> },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Tag("w_plus".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// The on-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_path: Option<String>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

fn scenario_err(message: impl Into<String>) -> Error {
    Error::Scenario {
        message: message.into(),
    }
}

/// Scenario with every default resolved, ready to execute.
pub struct ResolvedScenario {
    pub spec: HamiltonianSpec,
    pub grid: TimeGrid,
    pub initial: ComplexState,
    pub branch: Option<Branch>,
    pub analyses: Vec<Analysis>,
    pub seed: u64,
}

/// Validate a scenario and resolve defaults. `base_dir` anchors relative
/// custom-Hamiltonian paths.
pub fn resolve(scenario: &Scenario, base_dir: &Path) -> Result<ResolvedScenario> {
    let get = |name: &str| -> Result<f64> {
        scenario.params.get(name).copied().ok_or_else(|| {
            scenario_err(format!(
                "params.{name}: required for model `{}`",
                scenario.model
            ))
        })
    };
    let spec = match scenario.model.as_str() {
        "static_spin" => HamiltonianSpec::static_spin(get("mu_b")?, get("theta")?)
            .map_err(|e| scenario_err(format!("params: {e}")))?,
        "rotating_spin" => {
            HamiltonianSpec::rotating_spin(get("mu_b")?, get("omega")?, get("theta")?)
                .map_err(|e| scenario_err(format!("params: {e}")))?
        }
        "custom" => {
            let rel = scenario
                .custom_path
                .as_deref()
                .ok_or_else(|| scenario_err("custom_path: required for model `custom`"))?;
            let path = base_dir.join(rel);
            HamiltonianSpec::custom(
                CustomSpec::from_file(&path)
                    .map_err(|e| scenario_err(format!("custom_path `{rel}`: {e}")))?,
            )
        }
        other => {
            return Err(scenario_err(format!(
                "model: unknown family `{other}` (expected static_spin, rotating_spin, custom)"
            )))
        }
    };

    let t_end = scenario.grid.t_end.unwrap_or_else(|| spec.natural_period());
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(scenario_err(format!(
            "grid.t_end: must be positive (got {t_end})"
        )));
    }
    let steps = scenario
        .grid
        .steps
        .unwrap_or_else(|| spec.default_steps(t_end));
    if steps < 100 {
        return Err(scenario_err(format!(
            "grid.steps: must be at least 100 (got {steps})"
        )));
    }
    let grid =
        TimeGrid::from_duration(t_end, steps).map_err(|e| scenario_err(format!("grid: {e}")))?;

    let (initial, branch) = match &scenario.initial {
        InitialState::Tag(tag) => {
            if !spec.is_builtin() {
                return Err(scenario_err(format!(
                    "initial: named state `{tag}` requires a built-in family; pass explicit amplitudes"
                )));
            }
            match tag.as_str() {
                "w_plus" => (frame_row(&spec, Branch::Plus, 0.0)?, Some(Branch::Plus)),
                "w_minus" => (frame_row(&spec, Branch::Minus, 0.0)?, Some(Branch::Minus)),
                "v_plus" => (
                    crate::hamiltonian::eigenvector_row(&spec, Branch::Plus, 0.0)?,
                    None,
                ),
                "v_minus" => (
                    crate::hamiltonian::eigenvector_row(&spec, Branch::Minus, 0.0)?,
                    None,
                ),
                other => {
                    return Err(scenario_err(format!(
                        "initial: unknown tag `{other}` (expected w_plus, w_minus, v_plus, v_minus, or custom amplitudes)"
                    )))
                }
            }
        }
        InitialState::Custom { custom } => {
            if custom.len() != spec.dim() {
                return Err(scenario_err(format!(
                    "initial.custom: {} amplitudes for dimension {}",
                    custom.len(),
                    spec.dim()
                )));
            }
            let raw: Vec<Complex64> = custom
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(scenario_err(format!(
                    "initial.custom: amplitudes must be normalized within 1e-9 (norm {norm})"
                )));
            }
            (
                ComplexState::normalized(raw)
                    .map_err(|e| scenario_err(format!("initial.custom: {e}")))?,
                None,
            )
        }
    };

    let analyses = if scenario.analyses.is_empty() {
        vec![Analysis::Phases]
    } else {
        scenario.analyses.clone()
    };

    Ok(ResolvedScenario {
        spec,
        grid,
        initial,
        branch,
        analyses,
        seed: scenario.seed.unwrap_or(DEFAULT_SEED),
    })
}

// ---------------------------------------------------------------------------
// Report structure
// ---------------------------------------------------------------------------

/// Numeric-vs-oracle comparison. Rows without an oracle value (custom
/// families) report the numeric side only and cannot fail.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub quantity: String,
    pub numeric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_diff: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleRow {
    /// Angular comparison: the difference is wrapped to the principal branch.
    fn compared(quantity: &str, numeric: f64, analytic: f64, tolerance: f64) -> Self {
        let abs_diff = wrap_angle(numeric - analytic).abs();
        Self {
            quantity: quantity.into(),
            numeric,
            analytic: Some(analytic),
            abs_diff: Some(abs_diff),
            tolerance,
            pass: abs_diff <= tolerance,
        }
    }

    /// Plain comparison for non-angular quantities.
    fn compared_plain(quantity: &str, numeric: f64, analytic: f64, tolerance: f64) -> Self {
        let abs_diff = (numeric - analytic).abs();
        Self {
            quantity: quantity.into(),
            numeric,
            analytic: Some(analytic),
            abs_diff: Some(abs_diff),
            tolerance,
            pass: abs_diff <= tolerance,
        }
    }

    fn numeric_only(quantity: &str, numeric: f64) -> Self {
        Self {
            quantity: quantity.into(),
            numeric,
            analytic: None,
            abs_diff: None,
            tolerance: f64::INFINITY,
            pass: true,
        }
    }
}

/// A bound that must hold on its own (no oracle counterpart).
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualRow {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Defaults and tolerances echoed for reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDefaults {
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub cyclic_tol: f64,
    pub fuzz_count: u32,
    pub oracle_tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub defaults: ReportDefaults,
    pub spec_id: String,
    pub cyclicity: CyclicityVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseReport>,
    pub oracle_rows: Vec<OracleRow>,
    pub residual_rows: Vec<ResidualRow>,
    pub verdicts: Vec<VerdictRow>,
    pub overall_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix_ms: Option<u128>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Family-dependent comparison tolerances for scenario reports (the
/// verification suite pins its own per-criterion thresholds).
fn oracle_tolerances(spec: &HamiltonianSpec) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    let (aa_tol, total_tol) = match spec.family() {
        "static_spin" => (1e-6, 1e-8),
        _ => (1e-5, 1e-6),
    };
    map.insert("aa_phase".into(), aa_tol);
    map.insert("total_phase".into(), total_tol);
    map.insert("dynamical".into(), 1e-6);
    map.insert("berry_phase".into(), 1e-5);
    map.insert("decomposition_residual".into(), 1e-7);
    map.insert("interference".into(), 1e-8);
    map
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Run every requested analysis of a scenario. Deterministic for a fixed
/// scenario document (including its seed).
pub fn run_scenario(scenario: &Scenario, base_dir: &Path) -> Result<Report> {
    let resolved = resolve(scenario, base_dir)?;
    let tolerances = oracle_tolerances(&resolved.spec);
    let traj = propagate(&resolved.spec, &resolved.initial, &resolved.grid)?;
    let verdict = check_cyclic(&traj, None)?;

    let mut report = Report {
        scenario: scenario.clone(),
        defaults: ReportDefaults {
            t_end: resolved.grid.t_end(),
            steps: resolved.grid.steps(),
            seed: resolved.seed,
            cyclic_tol: DEFAULT_CYCLIC_TOL,
            fuzz_count: DEFAULT_FUZZ_COUNT,
            oracle_tolerances: tolerances.clone(),
        },
        spec_id: resolved.spec.id(),
        cyclicity: verdict,
        phases: None,
        oracle_rows: Vec::new(),
        residual_rows: Vec::new(),
        verdicts: Vec::new(),
        overall_pass: true,
        timestamp_unix_ms: None,
    };
    let tol = |name: &str| tolerances[name];

    for analysis in &resolved.analyses {
        match analysis {
            Analysis::Phases => run_phases(&resolved, &traj, &verdict, &tol, &mut report)?,
            Analysis::Frame => run_frame(&resolved, &traj, &verdict, &mut report)?,
            Analysis::Superpose { coefficients } => {
                run_superpose(&resolved, *coefficients, &mut report)?
            }
            Analysis::Interfere => run_interfere(&resolved, &traj, &verdict, &tol, &mut report)?,
            Analysis::Resonance => run_resonance(&resolved, &mut report)?,
            Analysis::GaugeFuzz { count } => run_gauge_fuzz(
                &resolved,
                &traj,
                &verdict,
                count.unwrap_or(DEFAULT_FUZZ_COUNT),
                &mut report,
            )?,
        }
    }

    report.overall_pass = report.oracle_rows.iter().all(|r| r.pass)
        && report.residual_rows.iter().all(|r| r.pass)
        && report.verdicts.iter().all(|r| r.pass);
    Ok(report)
}

fn run_phases(
    resolved: &ResolvedScenario,
    traj: &Trajectory,
    verdict: &CyclicityVerdict,
    tol: &impl Fn(&str) -> f64,
    report: &mut Report,
) -> Result<()> {
    let phases = phase_report(traj, &resolved.spec, verdict)?;
    report.residual_rows.push(ResidualRow::new(
        "decomposition_residual",
        phases.decomposition_residual,
        tol("decomposition_residual"),
    ));

    match resolved.branch {
        Some(branch) if resolved.spec.is_builtin() => {
            let oracle = closed_form_phases(&resolved.spec, branch)?;
            report.oracle_rows.push(OracleRow::compared(
                "total_phase",
                phases.total_phase,
                oracle.total_phase,
                tol("total_phase"),
            ));
            report.oracle_rows.push(OracleRow::compared_plain(
                "dynamical",
                phases.dynamical,
                oracle.dynamical,
                tol("dynamical"),
            ));
            report.oracle_rows.push(OracleRow::compared(
                "aa_phase",
                phases.aa_phase,
                oracle.aa_phase,
                tol("aa_phase"),
            ));
            if let (Some(numeric), Some(analytic)) = (phases.berry_phase, oracle.berry_phase) {
                report.oracle_rows.push(OracleRow::compared(
                    "berry_phase",
                    numeric,
                    analytic,
                    tol("berry_phase"),
                ));
            }
            report.oracle_rows.push(OracleRow::numeric_only(
                "signed_solid_angle",
                signed_solid_angle(&resolved.spec, branch)?,
            ));
        }
        _ => {
            report
                .oracle_rows
                .push(OracleRow::numeric_only("total_phase", phases.total_phase));
            report
                .oracle_rows
                .push(OracleRow::numeric_only("dynamical", phases.dynamical));
            report
                .oracle_rows
                .push(OracleRow::numeric_only("aa_phase", phases.aa_phase));
        }
    }
    report.phases = Some(phases);
    Ok(())
}

fn run_frame(
    resolved: &ResolvedScenario,
    traj: &Trajectory,
    verdict: &CyclicityVerdict,
    report: &mut Report,
) -> Result<()> {
    let frame = build_w_frame(traj, verdict)?;
    report.residual_rows.push(ResidualRow::new(
        "frame_periodicity",
        frame.periodicity_error(),
        1e-8,
    ));

    let beta = aa_phase(traj, verdict)?;
    let holonomy = wrap_angle(frame_holonomy(&frame, 0)?);
    report
        .oracle_rows
        .push(OracleRow::compared("frame_holonomy_row0", holonomy, beta, 1e-7));

    let rebuilt = reconstruct_amplitude(&frame, &resolved.spec)?;
    let reconstruction_error = rebuilt
        .states()
        .iter()
        .zip(traj.states())
        .map(|(a, b)| a.max_componentwise_distance(b))
        .fold(0.0, f64::max);
    report.residual_rows.push(ResidualRow::new(
        "frame_reconstruction",
        reconstruction_error,
        1e-6,
    ));

    let track = effective_hamiltonian(&frame, &resolved.spec)?;
    report.residual_rows.push(ResidualRow::new(
        "effective_offdiagonal",
        track.max_offdiagonal(),
        1e-5,
    ));
    Ok(())
}

fn run_superpose(
    resolved: &ResolvedScenario,
    coefficients: Option<[[f64; 2]; 2]>,
    report: &mut Report,
) -> Result<()> {
    if !resolved.spec.is_builtin() {
        return Err(scenario_err(
            "analyses.superpose: requires a built-in family (two closed-form branches)",
        ));
    }
    let s = match coefficients {
        Some([[a, b], [c, d]]) => SuperpositionSpec::new(Complex64::new(a, b), Complex64::new(c, d))
            .map_err(|e| scenario_err(format!("analyses.superpose.coefficients: {e}")))?,
        None => SuperpositionSpec::mixing_angle(std::f64::consts::FRAC_PI_2),
    };
    let plus = propagate(
        &resolved.spec,
        &frame_row(&resolved.spec, Branch::Plus, 0.0)?,
        &resolved.grid,
    )?;
    let minus = propagate(
        &resolved.spec,
        &frame_row(&resolved.spec, Branch::Minus, 0.0)?,
        &resolved.grid,
    )?;

    let linear = crate::superpose::linear_residual(&superpose(&plus, &minus, &s)?, &resolved.spec)?;
    report
        .residual_rows
        .push(ResidualRow::new("superposition_linear_residual", linear, 1e-5));

    let nonlinear = nonlinear_superposition_test(&plus, &minus, &s, &resolved.spec)?;
    report.oracle_rows.push(OracleRow::numeric_only(
        "superposition_condition_gap",
        nonlinear.condition_gap,
    ));
    report.oracle_rows.push(OracleRow::numeric_only(
        "superposition_nonlinear_residual",
        nonlinear.residual,
    ));
    let consistent = if nonlinear.condition_gap < 1e-10 {
        nonlinear.residual <= 1e-5
    } else {
        let min_coeff = s.c1.norm().min(s.c2.norm());
        nonlinear.residual >= 0.1 * nonlinear.condition_gap * min_coeff
    };
    report.verdicts.push(VerdictRow {
        name: "superposition_dichotomy".into(),
        pass: consistent,
        detail: format!(
            "gap {:.3e}, transverse residual {:.3e}",
            nonlinear.condition_gap, nonlinear.residual
        ),
    });
    Ok(())
}

fn run_interfere(
    resolved: &ResolvedScenario,
    traj: &Trajectory,
    verdict: &CyclicityVerdict,
    tol: &impl Fn(&str) -> f64,
    report: &mut Report,
) -> Result<()> {
    let measured = interference_intensity(traj.first(), traj.last())?;
    if let Some(phi) = verdict.total_phase {
        report.oracle_rows.push(OracleRow::compared_plain(
            "interference_vs_total_phase",
            measured,
            2.0 + 2.0 * phi.cos(),
            tol("interference"),
        ));
    }
    if let Some(branch) = resolved.branch {
        if resolved.spec.is_builtin() {
            let exact = closed_form_interference(&resolved.spec, branch)?;
            let unsigned = closed_form_interference_unsigned(&resolved.spec, branch)?;
            report.oracle_rows.push(OracleRow::compared_plain(
                "interference_vs_closed_form",
                measured,
                exact,
                1e-6,
            ));
            report.oracle_rows.push(OracleRow::numeric_only(
                "interference_unsigned_convention",
                unsigned,
            ));
            report.oracle_rows.push(OracleRow::numeric_only(
                "interference_convention_discrepancy",
                (exact - unsigned).abs(),
            ));
        }
    }
    Ok(())
}

fn run_resonance(resolved: &ResolvedScenario, report: &mut Report) -> Result<()> {
    let window = resolved.grid.duration();
    let resonance = resonance_check(&resolved.spec, window)?;
    report.oracle_rows.push(OracleRow::numeric_only(
        "resonance_n_residual",
        resonance.n_residual,
    ));
    report.oracle_rows.push(OracleRow::numeric_only(
        "resonance_m_residual",
        resonance.m_residual,
    ));

    let s = SuperpositionSpec::mixing_angle(std::f64::consts::FRAC_PI_2);
    let plus = propagate(
        &resolved.spec,
        &frame_row(&resolved.spec, Branch::Plus, 0.0)?,
        &resolved.grid,
    )?;
    let minus = propagate(
        &resolved.spec,
        &frame_row(&resolved.spec, Branch::Minus, 0.0)?,
        &resolved.grid,
    )?;
    let sum = superpose(&plus, &minus, &s)?;
    let sum_verdict = check_cyclic(&sum, None)?;
    let predicted = resonance.is_resonant(1e-6);
    report.verdicts.push(VerdictRow {
        name: "resonance_cyclicity".into(),
        pass: predicted == sum_verdict.is_cyclic,
        detail: format!(
            "integer residuals ({:.3e}, {:.3e}) predict cyclic = {predicted}; endpoint overlap {:.12}",
            resonance.n_residual, resonance.m_residual, sum_verdict.overlap_magnitude
        ),
    });
    Ok(())
}

fn run_gauge_fuzz(
    resolved: &ResolvedScenario,
    traj: &Trajectory,
    verdict: &CyclicityVerdict,
    count: u32,
    report: &mut Report,
) -> Result<()> {
    let beta = aa_phase(traj, verdict)?;
    let grid = traj.grid();

    // loop-closed rephasings of the trajectory: geometric phase frozen
    let mut worst_beta: f64 = 0.0;
    for i in 0..count {
        let gauge = GaugeFunction::random_periodic(grid, resolved.seed.wrapping_add(i as u64));
        let rephased = rephase_trajectory(traj, &gauge);
        let rverdict = check_cyclic(&rephased, None)?;
        let rbeta = aa_phase(&rephased, &rverdict)?;
        worst_beta = worst_beta.max(wrap_angle(rbeta - beta).abs());
    }
    report
        .residual_rows
        .push(ResidualRow::new("gauge_fuzz_aa_shift", worst_beta, 1e-8));

    // loop-closed rephasings of the eigenframe: holonomy frozen
    if let Ok(frame) = eigen_frame(&resolved.spec, grid, None) {
        if let Ok(gamma) = berry_phase(&resolved.spec, &frame, 0) {
            let mut worst_gamma: f64 = 0.0;
            for i in 0..count {
                let gauges: Vec<GaugeFunction> = (0..resolved.spec.dim())
                    .map(|n| {
                        GaugeFunction::random_periodic(
                            grid,
                            resolved
                                .seed
                                .wrapping_add(0x1000 + i as u64)
                                .wrapping_add((n as u64) << 32),
                        )
                    })
                    .collect();
                let rephased = rephase_frame(&frame.frame, &gauges)?;
                let scrambled = crate::hamiltonian::EigenFrame {
                    frame: rephased,
                    energies: frame.energies.clone(),
                };
                let rgamma = berry_phase(&resolved.spec, &scrambled, 0)?;
                worst_gamma = worst_gamma.max(wrap_angle(rgamma - gamma).abs());
            }
            report.residual_rows.push(ResidualRow::new(
                "gauge_fuzz_berry_shift",
                worst_gamma,
                1e-8,
            ));
        }
    }

    // unconstrained frame rephasings: reconstruction moves by one constant
    // phase e^{i alpha_0(t_start)} only
    let frame = build_w_frame(traj, verdict)?;
    let baseline = reconstruct_amplitude(&frame, &resolved.spec)?;
    let mut worst_covariance: f64 = 0.0;
    for i in 0..count {
        let gauges: Vec<GaugeFunction> = (0..resolved.spec.dim())
            .map(|n| {
                GaugeFunction::random_unconstrained(
                    grid,
                    resolved
                        .seed
                        .wrapping_add(0x2000 + i as u64)
                        .wrapping_add((n as u64) << 32),
                )
            })
            .collect();
        let alpha0 = gauges[0].sample_nodes(grid)[0];
        let rebuilt = reconstruct_amplitude(&rephase_frame(&frame, &gauges)?, &resolved.spec)?;
        for (a, b) in rebuilt.states().iter().zip(baseline.states()) {
            worst_covariance =
                worst_covariance.max(a.max_componentwise_distance(&b.rephased(alpha0)));
        }
    }
    report.residual_rows.push(ResidualRow::new(
        "gauge_fuzz_reconstruction_covariance",
        worst_covariance,
        1e-9,
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps and CSV serialization
// ---------------------------------------------------------------------------

pub const SWEEP_HEADER: &[&str] = &[
    "axis",
    "value",
    "model",
    "mu_b",
    "omega",
    "theta",
    "steps",
    "t_end",
    "cyclic",
    "overlap_magnitude",
    "total_phase",
    "dynamical",
    "aa_phase",
    "aa_analytic",
    "berry_phase",
    "berry_analytic",
    "decomposition_residual",
    "condition_gap",
    "nonlinear_residual",
    "pass",
    "error",
];

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }
}

fn fmt(value: f64) -> String {
    format!("{value:.12e}")
}

/// Run the template scenario once per axis value, one row per value.
/// Row failures land in the `error` column without aborting the sweep.
pub fn run_sweep(
    template: &Scenario,
    axis: &str,
    values: &[f64],
    base_dir: &Path,
) -> Result<SweepTable> {
    let allowed: &[&str] = match template.model.as_str() {
        "static_spin" => &["mu_b", "theta"],
        "rotating_spin" => &["mu_b", "omega", "theta"],
        other => {
            return Err(scenario_err(format!(
                "sweep: model `{other}` has no sweepable real parameters"
            )))
        }
    };
    if !allowed.contains(&axis) {
        return Err(scenario_err(format!(
            "sweep: axis `{axis}` is not a real parameter of `{}` (expected one of {allowed:?})",
            template.model
        )));
    }

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut scenario = template.clone();
        scenario.params.insert(axis.to_string(), value);
        let row = match run_scenario(&scenario, base_dir) {
            Ok(report) => sweep_row(axis, value, &scenario, &report),
            Err(err) => {
                let mut row = vec![String::new(); SWEEP_HEADER.len()];
                row[0] = axis.to_string();
                row[1] = fmt(value);
                row[2] = scenario.model.clone();
                row[19] = "false".into();
                row[20] = err.to_string().replace(',', ";");
                row
            }
        };
        rows.push(row);
    }
    Ok(SweepTable {
        header: SWEEP_HEADER.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

fn sweep_row(axis: &str, value: f64, scenario: &Scenario, report: &Report) -> Vec<String> {
    let param = |name: &str| {
        scenario
            .params
            .get(name)
            .map(|v| fmt(*v))
            .unwrap_or_default()
    };
    let oracle = |name: &str| {
        report
            .oracle_rows
            .iter()
            .find(|r| r.quantity == name)
            .map(|r| (fmt(r.numeric), r.analytic.map(fmt).unwrap_or_default()))
            .unwrap_or_default()
    };
    let (aa_numeric, aa_analytic) = oracle("aa_phase");
    let (berry_numeric, berry_analytic) = oracle("berry_phase");
    let (total_numeric, _) = oracle("total_phase");
    let (gap_numeric, _) = oracle("superposition_condition_gap");
    let (nl_numeric, _) = oracle("superposition_nonlinear_residual");

    vec![
        axis.to_string(),
        fmt(value),
        scenario.model.clone(),
        param("mu_b"),
        param("omega"),
        param("theta"),
        report.defaults.steps.to_string(),
        fmt(report.defaults.t_end),
        report.cyclicity.is_cyclic.to_string(),
        fmt(report.cyclicity.overlap_magnitude),
        total_numeric,
        report
            .phases
            .as_ref()
            .map(|p| fmt(p.dynamical))
            .unwrap_or_default(),
        aa_numeric,
        aa_analytic,
        berry_numeric,
        berry_analytic,
        report
            .phases
            .as_ref()
            .map(|p| fmt(p.decomposition_residual))
            .unwrap_or_default(),
        gap_numeric,
        nl_numeric,
        report.overall_pass.to_string(),
        String::new(),
    ]
}

/// Trajectory CSV: node time then re/im pairs per component.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: &mut W) -> std::io::Result<()> {
    let d = traj.dim();
    let mut header = String::from("t");
    for comp in 0..d {
        header.push_str(&format!(",psi_{comp}_re,psi_{comp}_im"));
    }
    writeln!(out, "{header}")?;
    for (k, t) in traj.grid().nodes().enumerate() {
        let mut line = format!("{t:.17e}");
        for amp in traj.state(k).amplitudes() {
            line.push_str(&format!(",{:.17e},{:.17e}", amp.re, amp.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
