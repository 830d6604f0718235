//! Discrete-event simulation of renewal requests against coded caches.
//!
//! Every file has its own renewal request process. On a request the user
//! sees `b` small stations (drawn from the coverage distribution, or
//! counted around a random position in a sampled station layout), the
//! stations' cached fraction is read off the policy for the slot elapsed
//! since the last request, and the rest of the file comes from the macro
//! station.
//!
//! Synchronous updates refill all `B` stations to `mu_{i,0}` on every
//! request for file `i`. Asynchronous updates keep one timer per station
//! and file; only the stations within range of the requesting user serve
//! and refill. Packets held by different stations are assumed distinct, so
//! a user collects `min(1, sum_l mu_{i, j_l})` of the file.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::warn;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::coverage::{CoverageDistribution, NetworkGeometry};
use crate::demand::{sample_interarrival, Catalog, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::planner::{CachingPolicy, CostModel, LoadBreakdown};

/// Fewer expected post-warmup requests than this triggers a warning.
pub const MIN_EXPECTED_REQUESTS: f64 = 1e4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    #[default]
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMode {
    /// `b` drawn from the coverage distribution.
    #[default]
    Analytical,
    /// `b` counted in a sampled station layout.
    Geometric,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub catalog: Catalog,
    pub grid: TimeGrid,
    pub coverage: CoverageDistribution,
    /// Needed for geometric coverage.
    pub geometry: Option<NetworkGeometry>,
    pub costs: CostModel,
    pub policy: CachingPolicy,
    /// Hours, warmup included.
    pub horizon: f64,
    /// Hours discarded at the start.
    pub warmup: f64,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub coverage_mode: CoverageMode,
    /// Number of batches for the batch-means confidence intervals.
    pub batches: usize,
    /// Reuse one station layout (drawn from this seed) across replications
    /// instead of drawing a new one per run.
    pub layout_seed: Option<u64>,
}

impl SimConfig {
    /// Horizon giving `requests` expected post-warmup requests when the
    /// first `warmup_fraction` of the run is discarded.
    pub fn horizon_for_requests(catalog: &Catalog, requests: f64, warmup_fraction: f64) -> f64 {
        let rate: f64 = catalog.rates().iter().sum();
        requests / rate / (1.0 - warmup_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("{} must be positive", self.horizon)));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(invalid("warmup", format!("{} must lie in [0, horizon)", self.warmup)));
        }
        if self.batches < 2 {
            return Err(invalid("batches", "need at least two batches"));
        }
        self.policy
            .validate_structure(self.catalog.n_files(), self.grid.n_slots())?;
        if self.coverage_mode == CoverageMode::Geometric && self.geometry.is_none() {
            return Err(invalid("geometry", "geometric coverage needs a network geometry"));
        }
        if self.update_mode == UpdateMode::Asynchronous && self.n_sbs() == 0 {
            return Err(invalid("n_sbs", "asynchronous updates need at least one station"));
        }
        Ok(())
    }

    fn n_sbs(&self) -> usize {
        match (self.coverage_mode, &self.geometry) {
            (CoverageMode::Geometric, Some(g)) => g.n_sbs,
            _ => self.coverage.n_sbs(),
        }
    }
}

/// Per-quantity 95% confidence half-widths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfWidths {
    pub r_sbs: f64,
    pub r_mbs: f64,
    pub r_cache: f64,
    pub w: f64,
    pub w_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Rates over the measured (post-warmup) period.
    pub loads: LoadBreakdown,
    pub half_widths: HalfWidths,
    pub per_file_requests: Vec<u64>,
    pub requests: u64,
    /// Requested data over the measured period.
    pub requested: f64,
    /// Every simulated request, warmup included.
    pub events: u64,
    pub measured_time: f64,
    pub seed: u64,
}

#[derive(Clone, Copy)]
struct Event {
    time: f64,
    file: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // min-heap on time, ties by file index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.file.cmp(&self.file))
    }
}

/// Station positions (metres, MBS at the origin).
#[derive(Debug, Clone)]
pub struct Layout {
    pub stations: Vec<(f64, f64)>,
}

fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    (r * phi.cos(), r * phi.sin())
}

impl Layout {
    /// Poisson point process with the geometry's density over the disk of
    /// radius `r_mbs + r_sbs`, so users near the edge see no deficit.
    pub fn sample<R: Rng + ?Sized>(geom: &NetworkGeometry, rng: &mut R) -> Self {
        let outer = geom.r_mbs + geom.r_sbs;
        let mean = geom.density() * std::f64::consts::PI * outer * outer;
        let count = if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let stations = (0..count).map(|_| uniform_in_disk(outer, rng)).collect();
        Self { stations }
    }

    /// Indices of stations within `range` of `user`.
    pub fn in_range(&self, user: (f64, f64), range: f64, out: &mut Vec<usize>) {
        out.clear();
        let r2 = range * range;
        for (l, &(x, y)) in self.stations.iter().enumerate() {
            let (dx, dy) = (x - user.0, y - user.1);
            if dx * dx + dy * dy <= r2 {
                out.push(l);
            }
        }
    }
}

/// Number of stations within range of a uniformly placed user, in a freshly
/// sampled layout.
pub fn sample_user_coverage<R: Rng + ?Sized>(geometry: &NetworkGeometry, rng: &mut R) -> usize {
    let layout = Layout::sample(geometry, rng);
    let user = uniform_in_disk(geometry.r_mbs, rng);
    let mut found = Vec::new();
    layout.in_range(user, geometry.r_sbs, &mut found);
    found.len()
}

fn sample_b<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    pick_b(cumulative, rng.random())
}

fn pick_b(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

struct Totals {
    sbs: Vec<f64>,
    mbs: Vec<f64>,
    cache: Vec<f64>,
}

impl Totals {
    fn new(batches: usize) -> Self {
        Self {
            sbs: vec![0.0; batches],
            mbs: vec![0.0; batches],
            cache: vec![0.0; batches],
        }
    }
}

/// Runs one replication.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let measured = config.horizon - config.warmup;
    let rate: f64 = config.catalog.rates().iter().sum();
    if rate * measured < MIN_EXPECTED_REQUESTS {
        warn!(
            "only {:.0} requests expected after warmup; estimates will be noisy",
            rate * measured
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.catalog.n_files();
    let dists = config.catalog.distributions();
    let sizes = config.catalog.sizes();
    let mu = &config.policy.mu;
    let grid = config.grid;

    let layout = match (config.coverage_mode, &config.geometry) {
        (CoverageMode::Geometric, Some(g)) => Some(match config.layout_seed {
            Some(s) => Layout::sample(g, &mut ChaCha8Rng::seed_from_u64(s)),
            None => Layout::sample(g, &mut rng),
        }),
        _ => None,
    };
    let n_sbs = match &layout {
        Some(l) if config.update_mode == UpdateMode::Asynchronous => l.stations.len(),
        _ => config.n_sbs(),
    };
    let mut cumulative: Vec<f64> = config
        .coverage
        .gamma()
        .iter()
        .scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        })
        .collect();
    // truncated tail mass goes to the largest count
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }

    // time of the last request per file, and per station and file
    let mut last_request = vec![f64::NEG_INFINITY; n];
    let mut last_served = match config.update_mode {
        UpdateMode::Asynchronous => vec![f64::NEG_INFINITY; n_sbs * n],
        UpdateMode::Synchronous => Vec::new(),
    };

    let mut queue = BinaryHeap::with_capacity(n);
    for (file, d) in dists.iter().enumerate() {
        queue.push(Event {
            time: sample_interarrival(d, &mut rng),
            file,
        });
    }

    let batch_len = measured / config.batches as f64;
    let mut totals = Totals::new(config.batches);
    let mut per_file = vec![0u64; n];
    let mut requests = 0u64;
    let mut events = 0u64;
    let mut requested = 0.0;
    let mut in_range = Vec::new();
    let geom = config.geometry;

    while let Some(Event { time, file }) = queue.pop() {
        if time >= config.horizon {
            break;
        }
        events += 1;
        let s = sizes[file];
        let row = &mu[file];

        let (from_sbs, update) = match config.update_mode {
            UpdateMode::Synchronous => {
                let b = match (&layout, geom) {
                    (Some(l), Some(g)) => {
                        l.in_range(uniform_in_disk(g.r_mbs, &mut rng), g.r_sbs, &mut in_range);
                        in_range.len()
                    }
                    _ => sample_b(&cumulative, &mut rng),
                };
                let j = grid.slot(time - last_request[file]);
                let m = row[j];
                (s * (b as f64 * m).min(1.0), n_sbs as f64 * s * (row[0] - m))
            }
            UpdateMode::Asynchronous => {
                match (&layout, geom) {
                    (Some(l), Some(g)) => {
                        l.in_range(uniform_in_disk(g.r_mbs, &mut rng), g.r_sbs, &mut in_range)
                    }
                    _ => {
                        let b = sample_b(&cumulative, &mut rng).min(n_sbs);
                        in_range.clear();
                        in_range.extend(sample_indices(&mut rng, n_sbs, b).iter());
                    }
                }
                let mut held = 0.0;
                let mut refill = 0.0;
                for &l in &in_range {
                    let slot = &mut last_served[l * n + file];
                    let m = row[grid.slot(time - *slot)];
                    held += m;
                    refill += row[0] - m;
                    *slot = time;
                }
                (s * held.min(1.0), s * refill)
            }
        };
        last_request[file] = time;

        if time >= config.warmup {
            let batch = (((time - config.warmup) / batch_len) as usize).min(config.batches - 1);
            totals.sbs[batch] += from_sbs;
            totals.mbs[batch] += s - from_sbs;
            totals.cache[batch] += update;
            per_file[file] += 1;
            requests += 1;
            requested += s;
        }
        queue.push(Event {
            time: time + sample_interarrival(&dists[file], &mut rng),
            file,
        });
    }

    let omega = config.catalog.aggregate_rate();
    let costs = config.costs;
    let per_batch = |i: usize| -> [f64; 5] {
        let (s, m, c) = (totals.sbs[i] / batch_len, totals.mbs[i] / batch_len, totals.cache[i] / batch_len);
        let w = costs.c_mbs * m + costs.c_sbs * s + costs.c_cache * c;
        [s, m, c, w, w / omega]
    };
    let rows: Vec<[f64; 5]> = (0..config.batches).map(per_batch).collect();
    let mut mean = [0.0; 5];
    for r in &rows {
        for q in 0..5 {
            mean[q] += r[q] / config.batches as f64;
        }
    }
    let nb = config.batches as f64;
    let t = StudentsT::new(0.0, 1.0, nb - 1.0)
        .map_err(|e| Error::Internal(e.to_string()))?
        .inverse_cdf(0.975);
    let mut half = [0.0; 5];
    for q in 0..5 {
        let var = rows.iter().map(|r| (r[q] - mean[q]).powi(2)).sum::<f64>() / (nb - 1.0);
        half[q] = t * (var / nb).sqrt();
    }
    Ok(SimResult {
        loads: LoadBreakdown {
            r_sbs: mean[0],
            r_mbs: mean[1],
            r_cache: mean[2],
            w: mean[3],
            w_normalized: mean[4],
        },
        half_widths: HalfWidths {
            r_sbs: half[0],
            r_mbs: half[1],
            r_cache: half[2],
            w: half[3],
            w_normalized: half[4],
        },
        per_file_requests: per_file,
        requests,
        requested,
        events,
        measured_time: measured,
        seed: config.seed,
    })
}

/// Runs one replication per seed in parallel; results follow `seeds`.
pub fn run_replications(config: &SimConfig, seeds: &[u64]) -> Result<Vec<SimResult>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.seed = seed;
            run(&c)
        })
        .collect()
}

/// Mean across replications with a Student-t 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub mean: LoadBreakdown,
    pub half_widths: HalfWidths,
    pub replications: usize,
}

pub fn summarize(results: &[SimResult]) -> Option<ReplicationSummary> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let pick = |f: fn(&LoadBreakdown) -> f64| -> (f64, f64) {
        let m = results.iter().map(|r| f(&r.loads)).sum::<f64>() / n;
        if results.len() < 2 {
            return (m, f64::NAN);
        }
        let var = results.iter().map(|r| (f(&r.loads) - m).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (m, t * (var / n).sqrt())
    };
    let (s, hs) = pick(|l| l.r_sbs);
    let (m, hm) = pick(|l| l.r_mbs);
    let (c, hc) = pick(|l| l.r_cache);
    let (w, hw) = pick(|l| l.w);
    let (wn, hwn) = pick(|l| l.w_normalized);
    Some(ReplicationSummary {
        mean: LoadBreakdown {
            r_sbs: s,
            r_mbs: m,
            r_cache: c,
            w,
            w_normalized: wn,
        },
        half_widths: HalfWidths {
            r_sbs: hs,
            r_mbs: hm,
            r_cache: hc,
            w: hw,
            w_normalized: hwn,
        },
        replications: results.len(),
    })
}
