//! Scenario documents: a TOML description of a network, its demand, the
//! solver settings and the simulation settings.
//!
//! Every field has a default, so an empty document describes the reference
//! setup: 100 unit-size files with Zipf(0.7) popularity and Weibull(0.6)
//! inter-request times at 100 requests per hour, 100 stations of range
//! 100 m in a macro cell of radius 800 m, cache size 10, six updates per hour
//! over a one hour window, `c_mbs = 1` and free small-cell downloads.
//!
//! ```toml
//! [catalog]
//! n_files = 100
//! zipf_alpha = 0.7
//! aggregate_rate = 100.0   # requests per hour
//! weibull_shape = 0.6      # 1 gives Poisson requests
//! file_size = 1.0          # or `sizes = [...]`, one per file
//!
//! [coverage]
//! n_sbs = 100
//! r_sbs = 100.0            # metres
//! r_mbs = 800.0
//! # truncation = 150       # largest b kept in the Poisson pmf
//! # gamma = [0.2, 0.5, 0.3]  # explicit coverage probabilities instead
//!
//! [grid]
//! update_frequency = 6.0   # per hour, 0 for static caching
//! window = 1.0             # hours
//!
//! [costs]
//! c_mbs = 1.0
//! c_sbs = 0.0
//! c_cache = 0.0
//!
//! [cache]
//! capacity = 10.0
//!
//! [solver]
//! formulation = "segments" # or "epigraph", "tangent"
//! step_model = "choice"    # or "indicator"
//! gap_tol = 1e-4
//! time_limit_s = 120.0
//! max_denominator = 64
//!
//! [simulation]
//! target_requests = 1e5    # or `horizon` in hours
//! warmup_fraction = 0.1
//! replications = 20
//! seed = 1
//! update_mode = "synchronous"
//! coverage_mode = "analytical"
//! batches = 20
//!
//! [sweep]
//! parameter = "density"    # see `SweepParameter`
//! values = [10.0, 30.0, 50.0]
//! ```

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::{coverage_from_geometry, CoverageDistribution, NetworkGeometry};
use crate::demand::{compute_demand_tables, Catalog, DemandTables, InterRequestDistribution, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::mds::DEFAULT_MAX_DENOMINATOR;
use crate::planner::{CachingPolicy, CostModel, Formulation, Instance, Planner, PlannerOptions, StepModel};
use crate::simulator::{CoverageMode, SimConfig, UpdateMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSection {
    pub n_files: usize,
    pub zipf_alpha: f64,
    pub aggregate_rate: f64,
    pub weibull_shape: f64,
    pub file_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<f64>>,
}

impl Default for CatalogSection {
    fn default() -> Self {
        Self {
            n_files: 100,
            zipf_alpha: 0.7,
            aggregate_rate: 100.0,
            weibull_shape: 0.6,
            file_size: 1.0,
            sizes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    pub n_sbs: usize,
    pub r_sbs: f64,
    pub r_mbs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

impl Default for CoverageSection {
    fn default() -> Self {
        Self {
            n_sbs: 100,
            r_sbs: 100.0,
            r_mbs: 800.0,
            truncation: None,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub update_frequency: f64,
    pub window: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            update_frequency: 6.0,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub c_mbs: f64,
    pub c_sbs: f64,
    pub c_cache: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        Self {
            c_mbs: 1.0,
            c_sbs: 0.0,
            c_cache: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub capacity: f64,
}

impl Default for CacheSection {
    fn default() -> Self {
        Self { capacity: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub formulation: Formulation,
    pub step_model: StepModel,
    pub gap_tol: f64,
    pub node_limit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
    pub max_denominator: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            formulation: Formulation::default(),
            step_model: StepModel::default(),
            gap_tol: 1e-4,
            node_limit: 1_000_000,
            time_limit_s: Some(120.0),
            max_denominator: DEFAULT_MAX_DENOMINATOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Hours; when absent the horizon follows from `target_requests`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Expected post-warmup requests.
    pub target_requests: f64,
    pub warmup_fraction: f64,
    pub replications: usize,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub coverage_mode: CoverageMode,
    pub batches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_seed: Option<u64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            horizon: None,
            target_requests: 1e5,
            warmup_fraction: 0.1,
            replications: 20,
            seed: 1,
            update_mode: UpdateMode::Synchronous,
            coverage_mode: CoverageMode::Analytical,
            batches: 20,
            layout_seed: None,
        }
    }
}

/// Scenario quantities a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Stations per square kilometre; sets `n_sbs` in the macro cell.
    Density,
    NSbs,
    RSbs,
    WeibullShape,
    ZipfAlpha,
    UpdateFrequency,
    CCache,
    Capacity,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::NSbs => "n_sbs",
            Self::RSbs => "r_sbs",
            Self::WeibullShape => "weibull_shape",
            Self::ZipfAlpha => "zipf_alpha",
            Self::UpdateFrequency => "update_frequency",
            Self::CCache => "c_cache",
            Self::Capacity => "capacity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub catalog: CatalogSection,
    pub coverage: CoverageSection,
    pub grid: GridSection,
    pub costs: CostSection,
    pub cache: CacheSection,
    pub solver: SolverSection,
    pub simulation: SimulationSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Prefixes the field of a parameter error with its section.
fn in_section(section: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{section}.{field}"),
            reason,
        },
        other => other,
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be positive and finite")))
    }
}

/// Everything needed to solve and simulate one scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub catalog: Catalog,
    pub grid: TimeGrid,
    pub tables: DemandTables,
    pub coverage: CoverageDistribution,
    pub geometry: Option<NetworkGeometry>,
    pub costs: CostModel,
    pub capacity: f64,
}

impl Model {
    pub fn instance(&self) -> Result<Instance<'_>> {
        Instance::new(&self.catalog, &self.tables, &self.coverage, self.costs, self.capacity)
    }
}

impl Scenario {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter {
            field: "document".into(),
            reason: e.to_string().trim_end().to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Parses a document after applying `section.key=value` overrides, with
    /// values in TOML syntax (`"0.5"`, `"[1.0, 2.0]"`, `"\"async\""`; bare
    /// words are taken as strings).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Self::from_toml_str(text);
        }
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::InvalidParameter {
            field: "document".into(),
            reason: e.to_string().trim_end().to_string(),
        })?;
        for item in overrides {
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| invalid("override", format!("`{item}` is not of the form section.key=value")))?;
            let path = path.trim();
            let raw = raw.trim();
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let keys: Vec<&str> = path.split('.').collect();
            let (last, sections) = keys.split_last().expect("split yields at least one key");
            let mut table = &mut doc;
            for key in sections {
                table = table
                    .entry(key.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| invalid(path, format!("`{key}` is not a section")))?;
            }
            table.insert(last.to_string(), value);
        }
        let scenario: Self = doc.try_into().map_err(|e: toml::de::Error| Error::InvalidParameter {
            field: "override".into(),
            reason: e.to_string().trim_end().to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Canonical TOML form; every default is written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())?;
        self.solver_options()?;
        self.validate_simulation()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "need at least one value"));
            }
            for &v in &sweep.values {
                self.with_parameter(sweep.parameter, v)?.build()?;
            }
        }
        Ok(())
    }

    fn validate_simulation(&self) -> Result<()> {
        let s = &self.simulation;
        if let Some(h) = s.horizon {
            positive("simulation.horizon", h)?;
        } else {
            positive("simulation.target_requests", s.target_requests)?;
        }
        if !(0.0..1.0).contains(&s.warmup_fraction) {
            return Err(invalid(
                "simulation.warmup_fraction",
                format!("{} must lie in [0, 1)", s.warmup_fraction),
            ));
        }
        if s.replications == 0 {
            return Err(invalid("simulation.replications", "need at least one replication"));
        }
        if s.batches < 2 {
            return Err(invalid("simulation.batches", "need at least two batches"));
        }
        if s.coverage_mode == CoverageMode::Geometric && self.coverage.gamma.is_some() {
            return Err(invalid(
                "simulation.coverage_mode",
                "geometric coverage needs a geometry, not explicit gamma",
            ));
        }
        Ok(())
    }

    pub fn build_catalog(&self) -> Result<Catalog> {
        let c = &self.catalog;
        let sizes = match &c.sizes {
            Some(sizes) => {
                if sizes.len() != c.n_files {
                    return Err(invalid(
                        "catalog.sizes",
                        format!("{} sizes for n_files = {}", sizes.len(), c.n_files),
                    ));
                }
                sizes.clone()
            }
            None => {
                positive("catalog.file_size", c.file_size)?;
                vec![c.file_size; c.n_files]
            }
        };
        if !(c.weibull_shape > 0.0 && c.weibull_shape <= 1.0) {
            return Err(invalid(
                "catalog.weibull_shape",
                format!("{} must lie in (0, 1]", c.weibull_shape),
            ));
        }
        let shape = c.weibull_shape;
        Catalog::zipf_with(sizes, c.zipf_alpha, c.aggregate_rate, |rate| {
            if shape == 1.0 {
                InterRequestDistribution::exponential(rate)
            } else {
                InterRequestDistribution::weibull(shape, rate)
            }
        })
        .map_err(in_section("catalog"))
    }

    pub fn build_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_frequency(self.grid.update_frequency, self.grid.window).map_err(in_section("grid"))
    }

    /// `None` when the coverage probabilities are given explicitly.
    pub fn build_geometry(&self) -> Result<Option<NetworkGeometry>> {
        let c = &self.coverage;
        if c.gamma.is_some() {
            return Ok(None);
        }
        NetworkGeometry::new(c.n_sbs, c.r_sbs, c.r_mbs)
            .map(Some)
            .map_err(in_section("coverage"))
    }

    pub fn build_coverage(&self) -> Result<CoverageDistribution> {
        let c = &self.coverage;
        if let Some(gamma) = &c.gamma {
            if c.n_sbs == 0 {
                return Err(invalid("coverage.n_sbs", "at least one small base station is required"));
            }
            return CoverageDistribution::explicit(gamma.clone())
                .map(|d| d.with_n_sbs(c.n_sbs))
                .map_err(in_section("coverage"));
        }
        let geometry = self.build_geometry()?.expect("geometry without explicit gamma");
        let truncation = c.truncation.unwrap_or_else(|| geometry.default_truncation());
        coverage_from_geometry(&geometry, truncation).map_err(|e| match e {
            Error::Truncation { .. } => invalid("coverage.truncation", e.to_string()),
            other => in_section("coverage")(other),
        })
    }

    pub fn build_costs(&self) -> Result<CostModel> {
        CostModel::new(self.costs.c_mbs, self.costs.c_sbs, self.costs.c_cache).map_err(in_section("costs"))
    }

    pub fn build(&self) -> Result<Model> {
        let catalog = self.build_catalog()?;
        let grid = self.build_grid()?;
        let coverage = self.build_coverage()?;
        let geometry = self.build_geometry()?;
        let costs = self.build_costs()?;
        let capacity = self.cache.capacity;
        if !(capacity >= 0.0 && capacity.is_finite()) {
            return Err(invalid("cache.capacity", format!("{capacity} must be finite and non-negative")));
        }
        let tables = compute_demand_tables(&catalog, &grid);
        Ok(Model {
            catalog,
            grid,
            tables,
            coverage,
            geometry,
            costs,
            capacity,
        })
    }

    pub fn solver_options(&self) -> Result<PlannerOptions> {
        let s = &self.solver;
        if !(s.gap_tol >= 0.0 && s.gap_tol.is_finite()) {
            return Err(invalid("solver.gap_tol", format!("{} must be >= 0", s.gap_tol)));
        }
        if s.max_denominator == 0 {
            return Err(invalid("solver.max_denominator", "must be at least 1"));
        }
        let time_limit = match s.time_limit_s {
            Some(t) => {
                positive("solver.time_limit_s", t)?;
                Some(Duration::from_secs_f64(t))
            }
            None => None,
        };
        Ok(PlannerOptions {
            formulation: s.formulation,
            step_model: s.step_model,
            gap_tol: s.gap_tol,
            node_limit: s.node_limit,
            time_limit,
        })
    }

    pub fn planner(&self) -> Result<Planner> {
        Ok(Planner::new(self.solver_options()?))
    }

    /// Copy of the scenario with one sweep parameter set.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut s = self.clone();
        let field = parameter.name();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.is_finite() {
                Ok(v.round() as usize)
            } else {
                Err(invalid(field, format!("{v} must be a non-negative number")))
            }
        };
        match parameter {
            SweepParameter::Density => {
                let area_km2 = std::f64::consts::PI * s.coverage.r_mbs * s.coverage.r_mbs / 1e6;
                s.coverage.n_sbs = count(value * area_km2)?;
            }
            SweepParameter::NSbs => s.coverage.n_sbs = count(value)?,
            SweepParameter::RSbs => s.coverage.r_sbs = value,
            SweepParameter::WeibullShape => s.catalog.weibull_shape = value,
            SweepParameter::ZipfAlpha => s.catalog.zipf_alpha = value,
            SweepParameter::UpdateFrequency => s.grid.update_frequency = value,
            SweepParameter::CCache => s.costs.c_cache = value,
            SweepParameter::Capacity => s.cache.capacity = value,
        }
        // a swept geometry needs the default truncation for that point
        if matches!(parameter, SweepParameter::Density | SweepParameter::NSbs | SweepParameter::RSbs) {
            s.coverage.truncation = None;
        }
        Ok(s)
    }

    /// Simulation setup for `policy` on this scenario.
    pub fn sim_config(&self, model: &Model, policy: CachingPolicy) -> Result<SimConfig> {
        self.validate_simulation()?;
        let s = &self.simulation;
        let horizon = match s.horizon {
            Some(h) => h,
            None => SimConfig::horizon_for_requests(&model.catalog, s.target_requests, s.warmup_fraction),
        };
        let config = SimConfig {
            catalog: model.catalog.clone(),
            grid: model.grid,
            coverage: model.coverage.clone(),
            geometry: model.geometry,
            costs: model.costs,
            policy,
            horizon,
            warmup: s.warmup_fraction * horizon,
            seed: s.seed,
            update_mode: s.update_mode,
            coverage_mode: s.coverage_mode,
            batches: s.batches,
            layout_seed: s.layout_seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Seeds of the configured replications.
    pub fn replication_seeds(&self) -> Vec<u64> {
        let base = self.simulation.seed;
        (0..self.simulation.replications as u64).map(|r| base.wrapping_add(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_setup() {
        let s = Scenario::from_toml_str("").unwrap();
        assert_eq!(s, Scenario::default());
        let m = s.build().unwrap();
        assert_eq!(m.catalog.n_files(), 100);
        assert_eq!(m.grid.n_updates(), 6);
        assert!((m.grid.period() - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.coverage.mean() - 1.5625).abs() < 1e-6);
        assert_eq!(m.coverage.n_sbs(), 100);
        assert_eq!(m.capacity, 10.0);
        assert!((m.catalog.aggregate_rate() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = "[catalog]\nn_files = 5\nsizes = [1.0, 2.0, 1.0, 1.0, 3.0]\n[sweep]\nparameter = \"c_cache\"\nvalues = [0.0, 0.1]\n";
        let s = Scenario::from_toml_str(text).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.hash(), again.hash());
        assert_ne!(s.hash(), Scenario::default().hash());
        assert_eq!(s.hash().len(), 64);
    }

    fn field_of(text: &str) -> String {
        match Scenario::from_toml_str(text).unwrap_err() {
            Error::InvalidParameter { field, .. } => field,
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("[catalog]\nzipf_alpha = -1.0\n"), "catalog.zipf_alpha");
        assert_eq!(field_of("[catalog]\nweibull_shape = 1.5\n"), "catalog.weibull_shape");
        assert_eq!(field_of("[catalog]\nn_files = 2\nsizes = [1.0]\n"), "catalog.sizes");
        assert_eq!(field_of("[coverage]\nr_sbs = 900.0\n"), "coverage.r_mbs");
        assert_eq!(field_of("[coverage]\ntruncation = 2\n"), "coverage.truncation");
        assert_eq!(field_of("[grid]\nupdate_frequency = -1.0\n"), "grid.update_frequency");
        assert_eq!(field_of("[costs]\nc_mbs = -1.0\n"), "costs.c_mbs");
        assert_eq!(field_of("[cache]\ncapacity = -1.0\n"), "cache.capacity");
        assert_eq!(field_of("[solver]\ngap_tol = -1.0\n"), "solver.gap_tol");
        assert_eq!(field_of("[simulation]\nwarmup_fraction = 1.0\n"), "simulation.warmup_fraction");
        assert_eq!(field_of("[sweep]\nparameter = \"weibull_shape\"\nvalues = [0.5, 2.0]\n"), "catalog.weibull_shape");
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = Scenario::from_toml_str("[catalog]\nn_files = 3\nnfiles = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nfiles"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn overrides_set_nested_keys() {
        let o = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let s = Scenario::from_toml_with_overrides(
            "[catalog]\nn_files = 4\n",
            &o(&["catalog.zipf_alpha=0", "simulation.update_mode=asynchronous", "cache.capacity = 2.5"]),
        )
        .unwrap();
        assert_eq!(s.catalog.n_files, 4);
        assert_eq!(s.catalog.zipf_alpha, 0.0);
        assert_eq!(s.simulation.update_mode, UpdateMode::Asynchronous);
        assert_eq!(s.cache.capacity, 2.5);
        assert!(Scenario::from_toml_with_overrides("", &o(&["catalog.zipf_alpha"])).is_err());
        assert!(Scenario::from_toml_with_overrides("", &o(&["catalog.bogus=1"])).is_err());
    }

    #[test]
    fn density_sets_station_count() {
        let s = Scenario::default().with_parameter(SweepParameter::Density, 50.0).unwrap();
        // pi * 0.64 km^2 * 50 = 100.5
        assert_eq!(s.coverage.n_sbs, 101);
        let s = Scenario::default().with_parameter(SweepParameter::UpdateFrequency, 0.0).unwrap();
        assert!(s.build().unwrap().grid.is_static());
    }

    #[test]
    fn explicit_gamma_skips_geometry() {
        let s = Scenario::from_toml_str("[coverage]\nn_sbs = 3\ngamma = [0.2, 0.5, 0.3]\n").unwrap();
        let m = s.build().unwrap();
        assert!(m.geometry.is_none());
        assert_eq!(m.coverage.gamma(), &[0.2, 0.5, 0.3]);
        assert_eq!(m.coverage.n_sbs(), 3);
        assert!(Scenario::from_toml_str(
            "[coverage]\ngamma = [0.5, 0.5]\n[simulation]\ncoverage_mode = \"geometric\"\n"
        )
        .is_err());
    }

    #[test]
    fn simulation_horizon_follows_request_target() {
        let s = Scenario::default();
        let m = s.build().unwrap();
        let c = s.sim_config(&m, CachingPolicy::zero(crate::CachingMode::Sttl, 100, 7)).unwrap();
        let expected = (c.horizon - c.warmup) * 100.0;
        assert!((expected - 1e5).abs() < 1e-6);
        assert_eq!(s.replication_seeds().len(), 20);
    }
}
