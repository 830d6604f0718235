//! Parameter sweeps producing normalized-load curves per caching mode.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::planner::{CachingMode, SolveReport, SolverStatus};
use crate::scenario::{Scenario, SweepParameter};
use crate::simulator::{run_replications, summarize, UpdateMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Load versus station density, with and without updates.
    Density,
    /// Load versus Weibull shape.
    Shape,
    /// Load versus update frequency for two update costs.
    UpdateFreq,
    /// Load versus update cost, analytical and simulated.
    UpdateCost,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [Self::Density, Self::Shape, Self::UpdateFreq, Self::UpdateCost];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Shape => "shape",
            Self::UpdateFreq => "updatefreq",
            Self::UpdateCost => "updatecost",
        }
    }

    pub fn parameter(&self) -> SweepParameter {
        match self {
            Self::Density => SweepParameter::Density,
            Self::Shape => SweepParameter::WeibullShape,
            Self::UpdateFreq => SweepParameter::UpdateFrequency,
            Self::UpdateCost => SweepParameter::CCache,
        }
    }

    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Self::Density => (1..=10).map(|k| 10.0 * k as f64).collect(),
            Self::Shape => (1..=10).map(|k| 0.1 * k as f64).collect(),
            Self::UpdateFreq => vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            Self::UpdateCost => vec![0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2],
        }
    }

    /// Curves drawn by this figure.
    pub fn series(&self) -> Vec<Series> {
        let static_curve = Series::analytical("static", CachingMode::Static, vec![]);
        let dynamic = |suffix: &str, overrides: Vec<(SweepParameter, f64)>| {
            [CachingMode::Ttl, CachingMode::Fttl, CachingMode::Sttl]
                .into_iter()
                .map(|m| Series::analytical(&format!("{}{suffix}", m.name()), m, overrides.clone()))
                .collect::<Vec<_>>()
        };
        match self {
            Self::Density => {
                let mut s = vec![
                    Series::analytical("ttl_f0", CachingMode::Ttl, vec![(SweepParameter::UpdateFrequency, 0.0)]),
                    static_curve,
                ];
                s.extend(dynamic("", vec![]));
                s
            }
            Self::Shape => {
                let mut s = vec![static_curve];
                s.extend(dynamic("", vec![]));
                s
            }
            Self::UpdateFreq => {
                let mut s = vec![static_curve];
                s.extend(dynamic("_c0", vec![(SweepParameter::CCache, 0.0)]));
                s.extend(dynamic("_c0.001", vec![(SweepParameter::CCache, 1e-3)]));
                s
            }
            Self::UpdateCost => {
                let mut s = vec![static_curve];
                s.extend(dynamic("", vec![]));
                for mode in [CachingMode::Sttl, CachingMode::Ttl] {
                    for update in [UpdateMode::Synchronous, UpdateMode::Asynchronous] {
                        let tag = match update {
                            UpdateMode::Synchronous => "sync",
                            UpdateMode::Asynchronous => "async",
                        };
                        s.push(Series {
                            name: format!("{}_{tag}", mode.name()),
                            mode,
                            overrides: vec![],
                            simulate: Some(update),
                        });
                    }
                }
                s
            }
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| invalid("figure", format!("unknown figure `{s}` (density, shape, updatefreq, updatecost)")))
    }
}

/// One curve: the optimal `mode` policy's normalized load, evaluated
/// analytically or simulated under `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub mode: CachingMode,
    pub overrides: Vec<(SweepParameter, f64)>,
    pub simulate: Option<UpdateMode>,
}

impl Series {
    fn analytical(name: &str, mode: CachingMode, overrides: Vec<(SweepParameter, f64)>) -> Self {
        Self {
            name: name.to_string(),
            mode,
            overrides,
            simulate: None,
        }
    }

    /// Simulated curves add a `_hw` column with the 95% half-width.
    pub fn columns(&self) -> Vec<String> {
        match self.simulate {
            None => vec![self.name.clone()],
            Some(_) => vec![self.name.clone(), format!("{}_hw", self.name)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub x: f64,
    pub values: Vec<f64>,
    /// Solves that stopped short of proven optimality.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub figure: FigureId,
    pub x_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<FigureRow>,
}

impl FigureData {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.values[c]).collect())
    }

    pub fn has_warnings(&self) -> bool {
        self.rows.iter().any(|r| !r.warnings.is_empty())
    }
}

/// Sweep values: the scenario's `[sweep]` when it targets the figure's
/// parameter, the figure's defaults otherwise.
pub fn sweep_values(scenario: &Scenario, figure: FigureId) -> Vec<f64> {
    match &scenario.sweep {
        Some(s) if s.parameter == figure.parameter() => s.values.clone(),
        _ => figure.default_values(),
    }
}

/// Solves `mode` on a scenario.
pub fn solve_scenario(scenario: &Scenario, mode: CachingMode) -> Result<SolveReport> {
    let model = scenario.build()?;
    scenario.planner()?.solve(&model.instance()?, mode)
}

fn apply(scenario: &Scenario, overrides: &[(SweepParameter, f64)]) -> Result<Scenario> {
    overrides
        .iter()
        .try_fold(scenario.clone(), |s, &(p, v)| s.with_parameter(p, v))
}

fn point(scenario: &Scenario, series: &[Series], x_name: &str, x: f64) -> Result<FigureRow> {
    let mut solved: Vec<(CachingMode, Vec<(SweepParameter, f64)>, SolveReport)> = Vec::new();
    let mut values = Vec::new();
    let mut warnings = Vec::new();
    for s in series {
        let sc = apply(scenario, &s.overrides)?;
        let cached = solved
            .iter()
            .find(|(m, o, _)| *m == s.mode && *o == s.overrides)
            .map(|(_, _, r)| r.clone());
        let report = match cached {
            Some(r) => r,
            None => {
                let r = solve_scenario(&sc, s.mode)?;
                if let SolverStatus::Feasible { gap } = r.solver_status {
                    warnings.push(format!("{} at {x_name} = {x}: gap {gap:.2e}", s.name));
                }
                solved.push((s.mode, s.overrides.clone(), r.clone()));
                r
            }
        };
        match s.simulate {
            None => values.push(report.loads.w_normalized),
            Some(update) => {
                let mut sim = sc.clone();
                sim.simulation.update_mode = update;
                let model = sim.build()?;
                let config = sim.sim_config(&model, report.policy.clone())?;
                let results = run_replications(&config, &sim.replication_seeds())?;
                let summary = summarize(&results).ok_or_else(|| Error::Internal("no replications".into()))?;
                values.push(summary.mean.w_normalized);
                values.push(summary.half_widths.w_normalized);
            }
        }
    }
    Ok(FigureRow { x, values, warnings })
}

/// Runs a figure sweep. Points are solved independently and in parallel;
/// rows follow `values`.
pub fn run_figure(scenario: &Scenario, figure: FigureId, values: &[f64]) -> Result<FigureData> {
    let series = figure.series();
    let parameter = figure.parameter();
    let x_name = parameter.name().to_string();
    let rows = values
        .par_iter()
        .map(|&x| {
            let sc = scenario.with_parameter(parameter, x)?;
            point(&sc, &series, &x_name, x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureData {
        figure,
        x_name,
        columns: series.iter().flat_map(|s| s.columns()).collect(),
        rows,
    })
}
