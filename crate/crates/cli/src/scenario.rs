//! Scenario files and the built-in figure presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scatter1d::amplitudes::BranchSheet;
use scatter1d::bound_states::BoundStateSearch;
use scatter1d::evolve::{EvolutionConfig, Form, MomentumConfig, SeriesConfig, Side, XGrid};
use scatter1d::fd_oracle::GridConfig;
use scatter1d::{Error, PacketSpec, PhysicsParams, PotentialSpec, Result};

use crate::RunError;

/// Artifacts a run can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Frames,
    TimeSeries,
    Amplitudes,
    BoundStates,
    OracleFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub potential: PotentialSpec,
    pub packet: PacketSpec,
    #[serde(default)]
    pub params: PhysicsParams,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub series: Option<SeriesSection>,
    /// `None` resolves to frames, the time series when configured, and the bound-state report.
    #[serde(default)]
    pub outputs: Option<Vec<Output>>,
    #[serde(default)]
    pub amplitudes: AmplitudeGrid,
    #[serde(default)]
    pub bound_states: BoundStateSearch,
    /// Run the grid oracle and compare it with the spectral frames.
    #[serde(default)]
    pub compare: bool,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default)]
    pub momentum: MomentumConfig,
    pub x_grid: XGrid,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub side: Side,
    #[serde(default)]
    pub form: Form,
}

impl EvolutionSection {
    pub fn config(&self) -> EvolutionConfig {
        EvolutionConfig { momentum: self.momentum, x_grid: self.x_grid, times: self.times.clone(), side: self.side }
    }
}

/// Either an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range(TimeRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            TimeGrid::List(v) => Ok(v.clone()),
            TimeGrid::Range(r) => {
                if !(r.step > 0.0 && r.stop >= r.start && r.start.is_finite() && r.stop.is_finite()) {
                    return Err(Error::InvalidParams(format!("time range needs start <= stop and step > 0, got {r:?}")));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                Ok((0..=n).map(|k| r.start + r.step * k as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    pub times: TimeGrid,
    #[serde(default)]
    pub quadrature: SeriesConfig,
}

/// `count` equispaced momenta from `p_min` to `p_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub count: usize,
    pub sheet: BranchSheet,
    /// Identity residuals above this count as a tolerance failure.
    pub identity_tolerance: f64,
}

impl Default for AmplitudeGrid {
    fn default() -> Self {
        Self { p_min: -5.0, p_max: 5.0, count: 200, sheet: BranchSheet::AboveCut, identity_tolerance: 1e-11 }
    }
}

impl AmplitudeGrid {
    pub fn momenta(&self) -> Result<Vec<f64>> {
        if !(self.p_min.is_finite() && self.p_max.is_finite() && self.p_max >= self.p_min && self.count >= 1) {
            return Err(Error::InvalidParams(format!("momentum grid needs p_min <= p_max and count >= 1, got {self:?}")));
        }
        if self.count == 1 {
            return Ok(vec![self.p_min]);
        }
        let h = (self.p_max - self.p_min) / (self.count - 1) as f64;
        let ps: Vec<f64> = (0..self.count).map(|k| self.p_min + h * k as f64).collect();
        if ps.iter().any(|&p| p == 0.0) {
            return Err(Error::Precondition("momentum grid contains p = 0, where the amplitudes are degenerate".into()));
        }
        Ok(ps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub grid: GridConfig,
    /// Region written to the oracle frames; `None` uses the absorption-free interior.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Largest accepted relative L2 difference against the spectral frames.
    #[serde(default = "default_compare_tolerance")]
    pub tolerance: f64,
}

fn default_compare_tolerance() -> f64 {
    1e-3
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { grid: GridConfig::default(), window: None, tolerance: default_compare_tolerance() }
    }
}

impl Scenario {
    /// Parses a scenario, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Read { path: path.into(), source })?;
        Ok(Self::from_json(&text)?)
    }

    pub fn resolved_outputs(&self) -> Vec<Output> {
        match &self.outputs {
            Some(v) => v.clone(),
            None => {
                let mut v = vec![Output::Frames];
                if self.series.is_some() {
                    v.push(Output::TimeSeries);
                }
                v.push(Output::BoundStates);
                v
            }
        }
    }

    /// Every check that needs no heavy computation.
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.params.validate()?;
        self.packet.validate()?;
        self.evolution.config().validate()?;
        let outputs = self.resolved_outputs();
        if let Some(s) = &self.series {
            s.times.resolve()?;
        } else if outputs.contains(&Output::TimeSeries) {
            return Err(Error::InvalidParams("time_series requested without a series section".into()));
        }
        if outputs.contains(&Output::Amplitudes) {
            self.amplitudes.momenta()?;
        }
        let free = self.potential.is_free();
        let (spec, packet, grid) = (&self.potential, &self.packet, &self.evolution.x_grid);
        match self.evolution.side {
            Side::TransmittedRight => {
                if packet.b > spec.c {
                    return Err(Error::Precondition(format!(
                        "packet end b = {} exceeds the support start c = {}",
                        packet.b, spec.c
                    )));
                }
                if !free && grid.start < spec.d {
                    return Err(Error::Precondition(format!(
                        "x grid starts at {} < d = {}; the transmitted form holds right of the support",
                        grid.start, spec.d
                    )));
                }
            }
            Side::TransmittedLeft => {
                if packet.a < spec.d {
                    return Err(Error::Precondition(format!(
                        "packet start a = {} is below the support end d = {}",
                        packet.a, spec.d
                    )));
                }
                if !free && grid.last() > spec.c {
                    return Err(Error::Precondition(format!("x grid ends at {} > c = {}", grid.last(), spec.c)));
                }
            }
        }
        if let Some(oracle) = self.oracle_plan() {
            oracle.grid.validate()?;
            if !(oracle.tolerance > 0.0) {
                return Err(Error::InvalidParams("oracle tolerance must be positive".into()));
            }
            if let Some((lo, hi)) = oracle.window {
                if !(lo < hi) {
                    return Err(Error::InvalidParams(format!("oracle window [{lo}, {hi}] is empty")));
                }
            }
            if self.compare {
                check_alignment(&oracle.grid, grid)?;
            }
        }
        Ok(())
    }

    /// The oracle settings if this scenario runs the oracle at all.
    pub fn oracle_plan(&self) -> Option<OracleSection> {
        if self.compare || self.resolved_outputs().contains(&Output::OracleFrames) {
            Some(self.oracle.unwrap_or_default())
        } else {
            None
        }
    }
}

/// Spectral sample points must be oracle nodes for a pointwise comparison.
fn check_alignment(oracle: &GridConfig, x: &XGrid) -> Result<()> {
    let near_int = |u: f64| (u - u.round()).abs() < 1e-6;
    let offset = (x.start - oracle.x_min) / oracle.dx;
    if !near_int(offset) || !near_int(x.step / oracle.dx) {
        return Err(Error::Precondition(format!(
            "spectral grid (start {}, step {}) does not fall on oracle nodes (x_min {}, dx {})",
            x.start, x.step, oracle.x_min, oracle.dx
        )));
    }
    let (lo, hi) = oracle.interior();
    if x.start < lo || x.last() > hi {
        return Err(Error::Precondition(format!(
            "spectral grid [{}, {}] leaves the absorption-free region [{lo}, {hi}]",
            x.start,
            x.last()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

const WELL_A: f64 = -2.01;
const WELL_B: f64 = -0.01;
const BOOST: f64 = 0.5;
const SPIKE: f64 = -0.125;

/// The figure reproductions in atomic units.
pub fn preset(fig: Figure) -> Scenario {
    let long_series = || SeriesSection {
        times: TimeGrid::Range(TimeRange { start: 0.0, stop: 80.0, step: 0.5 }),
        quadrature: SeriesConfig::default(),
    };
    let snapshot = |x_grid: XGrid, times: Vec<f64>| EvolutionSection {
        momentum: MomentumConfig::default(),
        x_grid,
        times,
        side: Side::TransmittedRight,
        form: Form::Compact,
    };
    let base = |label: &str, potential: PotentialSpec, boost: f64| Scenario {
        label: label.into(),
        potential,
        packet: PacketSpec::box_sine(WELL_A, WELL_B, boost),
        params: PhysicsParams::default(),
        evolution: snapshot(XGrid::new(0.0, 120.0, 0.05), vec![]),
        series: None,
        outputs: None,
        amplitudes: AmplitudeGrid::default(),
        bound_states: BoundStateSearch::default(),
        compare: false,
        oracle: None,
    };
    match fig {
        Figure::Fig2 => Scenario {
            series: Some(long_series()),
            outputs: Some(vec![Output::TimeSeries]),
            ..base("fig2", PotentialSpec::free(), 0.0)
        },
        Figure::Fig3 => Scenario {
            series: Some(long_series()),
            outputs: Some(vec![Output::TimeSeries, Output::BoundStates]),
            ..base("fig3", PotentialSpec::delta_step(SPIKE, 0.0), BOOST)
        },
        Figure::Fig4 => Scenario {
            evolution: snapshot(XGrid::new(0.0, 15.0, 0.01), vec![5.0]),
            outputs: Some(vec![Output::Frames, Output::OracleFrames, Output::BoundStates]),
            compare: true,
            oracle: Some(OracleSection {
                grid: GridConfig { x_min: -60.0, x_max: 60.0, absorbing_margin: 15.0, ..GridConfig::default() },
                window: Some((-10.0, 15.0)),
                tolerance: default_compare_tolerance(),
            }),
            ..base("fig4", PotentialSpec::delta_step(SPIKE, 1.0), BOOST)
        },
        Figure::Fig5 => Scenario {
            evolution: snapshot(XGrid::new(0.0, 4.0, 0.005), vec![5.0]),
            outputs: Some(vec![Output::Frames]),
            ..base("fig5", PotentialSpec::delta_step(SPIKE, 1.0), BOOST)
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "label": "t",
            "potential": {"c": 0.0, "d": 0.0, "v0": 1.0, "deltas": [[0.0, -0.125]]},
            "packet": {"a": -2.01, "b": -0.01, "boost": 0.5},
            "evolution": {"x_grid": {"start": 0.0, "stop": 1.0, "step": 0.1}, "times": [1.0]}
        })
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let mut v = minimal();
        v["evolution"]["momentum"] = serde_json::json!({"p_maxx": 3.0});
        match Scenario::from_json(&v.to_string()) {
            Err(Error::Schema { path, message }) => {
                assert_eq!(path, "evolution.momentum.p_maxx");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_json(&minimal().to_string()).unwrap();
        assert_eq!(s.params, PhysicsParams::default());
        assert_eq!(s.evolution.momentum, MomentumConfig::default());
        assert_eq!(s.resolved_outputs(), vec![Output::Frames, Output::BoundStates]);
        s.validate().unwrap();
    }

    #[test]
    fn packet_overlapping_the_support_is_rejected() {
        let mut v = minimal();
        v["packet"]["b"] = serde_json::json!(0.5);
        let s = Scenario::from_json(&v.to_string()).unwrap();
        assert!(matches!(s.validate(), Err(Error::Precondition(_))));
    }

    #[test]
    fn time_ranges_include_the_end() {
        let g: TimeGrid = serde_json::from_str(r#"{"start": 0, "stop": 80, "step": 0.5}"#).unwrap();
        let t = g.resolve().unwrap();
        assert_eq!(t.len(), 161);
        assert_eq!(*t.last().unwrap(), 80.0);
        let l: TimeGrid = serde_json::from_str("[1, 2.5]").unwrap();
        assert_eq!(l.resolve().unwrap(), vec![1.0, 2.5]);
    }

    #[test]
    fn misaligned_comparison_grid_is_rejected() {
        let mut v = minimal();
        v["compare"] = serde_json::json!(true);
        v["evolution"]["x_grid"] = serde_json::json!({"start": 0.0013, "stop": 1.0, "step": 0.01});
        let s = Scenario::from_json(&v.to_string()).unwrap();
        assert!(matches!(s.validate(), Err(Error::Precondition(_))));
    }

    #[test]
    fn presets_carry_the_figure_parameters() {
        for fig in [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5] {
            let s = preset(fig);
            s.validate().unwrap();
            assert_eq!((s.packet.a, s.packet.b), (-2.01, -0.01));
            assert_eq!(s.params, PhysicsParams { m: 1.0, hbar: 1.0 });
            // round trip through JSON, as written to the manifest
            let back = Scenario::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
            assert_eq!(back, s);
        }
        assert_eq!(preset(Figure::Fig2).packet.boost, 0.0);
        assert!(preset(Figure::Fig2).potential.is_free());
        let f3 = preset(Figure::Fig3);
        assert_eq!((f3.packet.boost, f3.potential.v0, f3.potential.deltas[0].strength), (0.5, 0.0, -0.125));
        let f4 = preset(Figure::Fig4);
        assert_eq!((f4.potential.v0, f4.potential.deltas[0].strength), (1.0, -0.125));
        assert_eq!(f4.evolution.times, vec![5.0]);
        assert_eq!(preset(Figure::Fig5).potential, f4.potential);
    }
}
