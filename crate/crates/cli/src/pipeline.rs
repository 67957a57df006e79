//! amplitudes → bound states → evolution → diagnostics → oracle comparison.

use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use scatter1d::amplitudes::{amplitude_table, identity_report, BranchSheet, IdentityReport};
use scatter1d::bound_states::{bound_spectrum, default_gamma_max, BoundSpectrum};
use scatter1d::evolve::{
    evolve_free, evolve_transmitted_compact, evolve_transmitted_left, evolve_transmitted_long_form,
    free_transmission_series, transmission_series, Evolution, Form, FrameReport, Side,
};
use scatter1d::fd_oracle::{compare, evolve_grid, Comparison};

use crate::output::{self, BoundRow};
use crate::scenario::{OracleSection, Output, Scenario};
use crate::RunError;

/// Largest accepted relative gap between the two bound-state residues.
pub const RESIDUE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub kind: &'static str,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRun {
    pub t: f64,
    pub norm: f64,
    pub absorbed: f64,
}

/// Values chosen at run time rather than read from the scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub threshold_momentum: f64,
    pub series_times: usize,
    pub frame_points: usize,
    pub oracle_window: Option<(f64, f64)>,
    pub compare_region: Option<(f64, f64)>,
    pub residue_tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySummary {
    pub checked: usize,
    pub max_residual: f64,
    pub at_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// The scenario with every default filled in.
    pub scenario: Scenario,
    pub resolved: Resolved,
    pub files: Vec<FileEntry>,
    pub amplitude_identities: Option<IdentitySummary>,
    pub bound_states: Option<Vec<BoundRow>>,
    pub frame_reports: Vec<FrameReport>,
    pub oracle_runs: Vec<OracleRun>,
    pub comparisons: Vec<Comparison>,
    pub warnings: Vec<String>,
    pub tolerance_failures: Vec<String>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.tolerance_failures.is_empty()
    }
}

struct Writer<'a> {
    root: &'a Path,
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn path(&mut self, kind: &'static str, rel: String, t: Option<f64>) -> PathBuf {
        let p = self.root.join(&rel);
        self.files.push(FileEntry { kind, path: rel, t });
        p
    }
}

/// Runs everything the scenario requests and writes the results below `out`.
pub fn run(scenario: &Scenario, command: &str, out: &Path) -> Result<Manifest, RunError> {
    scenario.validate()?;
    let outputs = scenario.resolved_outputs();
    let wants = |o: Output| outputs.contains(&o);
    let oracle = scenario.oracle_plan();
    let (spec, params, packet) = (&scenario.potential, &scenario.params, &scenario.packet);

    let mut resolved_scenario = scenario.clone();
    resolved_scenario.outputs = Some(outputs.clone());
    resolved_scenario.oracle = oracle;
    let mut search = scenario.bound_states;
    search.gamma_max.get_or_insert_with(|| default_gamma_max(spec, params));
    resolved_scenario.bound_states = search;

    std::fs::create_dir_all(out).map_err(|source| RunError::Write { path: out.into(), source })?;
    let mut w = Writer { root: out, files: vec![] };
    let mut failures = vec![];
    let mut warnings = vec![];

    let mut amplitude_identities = None;
    if wants(Output::Amplitudes) {
        let grid = &scenario.amplitudes;
        let ps = grid.momenta()?;
        info!("amplitudes at {} momenta", ps.len());
        let rows = amplitude_table(spec, params, &ps, grid.sheet)?;
        let checks: Vec<Option<IdentityReport>> = match grid.sheet {
            BranchSheet::AboveCut => ps.iter().map(|&p| identity_report(spec, params, p).map(Some)).collect::<Result<_, _>>()?,
            BranchSheet::BelowCut => vec![None; ps.len()],
        };
        let path = w.path("amplitudes", "amplitudes.csv".into(), None);
        output::write_amplitudes(output::create(&path)?, &rows, &checks)?;
        let worst = checks.iter().flatten().map(|c| (c.max_residual(), c.p)).fold((0.0, f64::NAN), |a, b| {
            if b.0 > a.0 {
                b
            } else {
                a
            }
        });
        if worst.0 > grid.identity_tolerance {
            failures.push(format!("identity residual {:.3e} at p = {} exceeds {:.1e}", worst.0, worst.1, grid.identity_tolerance));
        }
        amplitude_identities =
            Some(IdentitySummary { checked: checks.iter().flatten().count(), max_residual: worst.0, at_p: worst.1 });
    }

    let needs_frames = wants(Output::Frames) || scenario.compare;
    let needs_spectrum = wants(Output::BoundStates) || needs_frames || wants(Output::TimeSeries);
    let spectrum: Option<BoundSpectrum> = if needs_spectrum { Some(bound_spectrum(spec, params, &search)?) } else { None };
    let mut bound_states = None;
    if let Some(sp) = &spectrum {
        let rows: Vec<BoundRow> = sp.states.iter().map(BoundRow::from).collect();
        for r in &rows {
            if r.residue_relative_difference > RESIDUE_TOLERANCE {
                failures.push(format!(
                    "bound state gamma = {}: residues differ by {:.3e}",
                    r.gamma, r.residue_relative_difference
                ));
            }
            if r.unreliable {
                warnings.push(format!("bound state gamma = {} is too close to threshold to trust", r.gamma));
            }
        }
        if wants(Output::BoundStates) {
            let path = w.path("bound_states", "bound_states.json".into(), None);
            output::write_json(&path, &rows)?;
        }
        bound_states = Some(rows);
    }

    let cfg = scenario.evolution.config();
    let mut evolution: Option<Evolution> = None;
    if needs_frames && !cfg.times.is_empty() {
        let sp = spectrum.as_ref().expect("spectrum computed for frames");
        let ev = if spec.is_free() {
            evolve_free(params, packet, &cfg)?
        } else {
            match (cfg.side, scenario.evolution.form) {
                (Side::TransmittedRight, Form::Compact) => evolve_transmitted_compact(spec, params, packet, sp, &cfg)?,
                (Side::TransmittedRight, Form::Long) => evolve_transmitted_long_form(spec, params, packet, sp, &cfg)?,
                (Side::TransmittedLeft, form) => evolve_transmitted_left(spec, params, packet, sp, &cfg, form)?,
            }
        };
        for r in &ev.reports {
            if let Some(e) = r.error_estimate {
                if e > cfg.momentum.warn_above {
                    warnings.push(format!("t = {}: momentum quadrature error estimate {:.2e}", r.t, e));
                }
            }
        }
        if wants(Output::Frames) {
            for (k, f) in ev.frames.iter().enumerate() {
                let path = w.path("frame", format!("frames/frame_{k:03}.csv"), Some(f.t));
                output::write_frame(&path, f)?;
            }
        }
        evolution = Some(ev);
    }

    let mut series_times = 0;
    if wants(Output::TimeSeries) {
        let section = scenario.series.as_ref().expect("validated");
        let times = section.times.resolve()?;
        series_times = times.len();
        info!("transmission series at {} times", times.len());
        let records = if spec.is_free() {
            free_transmission_series(params, packet, &times, &section.quadrature)?
        } else {
            let sp = spectrum.as_ref().expect("spectrum computed for the series");
            transmission_series(spec, params, packet, sp, cfg.side, &times, &section.quadrature)?
        };
        let path = w.path("time_series", "series.csv".into(), None);
        output::write_series(&path, &records)?;
    }

    let mut oracle_runs = vec![];
    let mut comparisons = vec![];
    let mut oracle_window = None;
    let mut compare_region = None;
    if let Some(OracleSection { grid, window, tolerance }) = oracle {
        let window = window.unwrap_or_else(|| grid.interior());
        oracle_window = Some(window);
        info!("grid oracle on [{}, {}] with dx = {}, dt = {}", grid.x_min, grid.x_max, grid.dx, grid.dt);
        let frames = evolve_grid(spec, params, packet, &grid, &cfg.times)?;
        for (k, f) in frames.iter().enumerate() {
            oracle_runs.push(OracleRun { t: f.t, norm: f.norm, absorbed: f.absorbed });
            if wants(Output::OracleFrames) {
                let path = w.path("oracle_frame", format!("oracle/frame_{k:03}.csv"), Some(f.t));
                output::write_grid_frame(&path, f, window.0, window.1)?;
            }
        }
        if scenario.compare {
            let region = (cfg.x_grid.start, cfg.x_grid.last());
            compare_region = Some(region);
            let spectral = evolution.as_ref().map(|e| e.frames.as_slice()).unwrap_or(&[]);
            for (g, s) in frames.iter().zip(spectral) {
                let c = compare(g, s, region.0, region.1)?;
                if !(c.relative_l2 <= tolerance) {
                    failures.push(format!(
                        "t = {}: relative L2 difference to the grid oracle {:.3e} exceeds {:.1e}",
                        c.t, c.relative_l2, tolerance
                    ));
                }
                comparisons.push(c);
            }
            let path = w.path("comparison", "comparison.csv".into(), None);
            output::write_rows(&path, &comparisons)?;
        }
    }

    for m in &warnings {
        warn!("{m}");
    }
    let manifest = Manifest {
        tool: "scatter1d",
        version: env!("CARGO_PKG_VERSION"),
        command: command.into(),
        scenario: resolved_scenario,
        resolved: Resolved {
            threshold_momentum: spec.threshold_momentum(params),
            series_times,
            frame_points: cfg.x_grid.len(),
            oracle_window,
            compare_region,
            residue_tolerance: RESIDUE_TOLERANCE,
        },
        files: w.files,
        amplitude_identities,
        bound_states,
        frame_reports: evolution.map(|e| e.reports).unwrap_or_default(),
        oracle_runs,
        comparisons,
        warnings,
        tolerance_failures: failures,
    };
    output::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
