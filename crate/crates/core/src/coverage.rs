//! Number of small base stations within range of a user, and the coverage
//! utility `g(mu) = E[min{1, mu Y}]` it induces.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest tail mass a truncated Poisson coverage distribution may drop.
pub const MAX_TAIL_MASS: f64 = 1e-9;

/// Deployment geometry: `n_sbs` stations dropped in the macro cell of radius
/// `r_mbs`, each serving users within `r_sbs` (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub n_sbs: usize,
    pub r_sbs: f64,
    pub r_mbs: f64,
}

impl NetworkGeometry {
    pub fn new(n_sbs: usize, r_sbs: f64, r_mbs: f64) -> Result<Self> {
        if n_sbs == 0 {
            return Err(invalid("n_sbs", "at least one small base station is required"));
        }
        if !(r_sbs > 0.0 && r_mbs.is_finite()) {
            return Err(invalid("r_sbs", format!("{r_sbs} must be positive")));
        }
        if !(r_sbs < r_mbs) {
            return Err(invalid("r_mbs", format!("{r_mbs} must exceed r_sbs = {r_sbs}")));
        }
        Ok(Self { n_sbs, r_sbs, r_mbs })
    }

    /// Mean number of stations in range, `B (r_sbs / r_mbs)^2`.
    pub fn lambda(&self) -> f64 {
        let ratio = self.r_sbs / self.r_mbs;
        self.n_sbs as f64 * ratio * ratio
    }

    /// Station density per square meter.
    pub fn density(&self) -> f64 {
        self.n_sbs as f64 / (std::f64::consts::PI * self.r_mbs * self.r_mbs)
    }

    /// Station density per square kilometer.
    pub fn density_per_km2(&self) -> f64 {
        self.density() * 1e6
    }

    pub fn default_truncation(&self) -> usize {
        default_truncation(self.n_sbs, self.lambda())
    }
}

/// `max(B, ceil(lambda + 12 sqrt(lambda) + 30))`.
pub fn default_truncation(n_sbs: usize, lambda: f64) -> usize {
    let bound = (lambda + 12.0 * lambda.sqrt() + 30.0).ceil() as usize;
    n_sbs.max(bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoverageSource {
    Explicit,
    PoissonPpp { lambda: f64, truncation: usize },
}

/// Probabilities `gamma[b]` that a user is within range of exactly `b`
/// stations, together with the number of stations in the area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageDistribution {
    gamma: Vec<f64>,
    source: CoverageSource,
    n_sbs: usize,
}

impl CoverageDistribution {
    /// Explicit distribution over `b = 0..gamma.len()`. The station count
    /// defaults to the largest `b`.
    pub fn explicit(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(invalid("gamma", "empty coverage distribution"));
        }
        if let Some(b) = gamma.iter().position(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(invalid("gamma", format!("gamma[{b}] = {} is not a probability", gamma[b])));
        }
        let total: f64 = gamma.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("gamma", format!("probabilities sum to {total}, expected 1")));
        }
        let n_sbs = (gamma.len() - 1).max(1);
        Ok(Self {
            gamma,
            source: CoverageSource::Explicit,
            n_sbs,
        })
    }

    /// A user served by exactly one cache.
    pub fn single_cache() -> Self {
        Self {
            gamma: vec![0.0, 1.0],
            source: CoverageSource::Explicit,
            n_sbs: 1,
        }
    }

    /// Poisson pmf truncated at `truncation`, unrenormalized.
    pub fn poisson(lambda: f64, truncation: usize, n_sbs: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} must be positive")));
        }
        let gamma = poisson_pmf(lambda, truncation);
        let tail_mass = 1.0 - gamma.iter().sum::<f64>();
        if tail_mass >= MAX_TAIL_MASS {
            let mut required = truncation;
            let mut mass: f64 = gamma.iter().sum();
            let mut term = *gamma.last().unwrap_or(&(-lambda).exp());
            while 1.0 - mass >= MAX_TAIL_MASS {
                required += 1;
                term *= lambda / required as f64;
                mass += term;
                if term == 0.0 {
                    break;
                }
            }
            return Err(Error::Truncation {
                tail_mass,
                required,
            });
        }
        Ok(Self {
            gamma,
            source: CoverageSource::PoissonPpp { lambda, truncation },
            n_sbs,
        })
    }

    /// Overrides the number of stations in the area.
    pub fn with_n_sbs(mut self, n_sbs: usize) -> Self {
        self.n_sbs = n_sbs;
        self
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn source(&self) -> CoverageSource {
        self.source
    }

    pub fn n_sbs(&self) -> usize {
        self.n_sbs
    }

    pub fn max_b(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.gamma.iter().enumerate().map(|(b, g)| b as f64 * g).sum()
    }

    /// `Pr(Y <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let upto = (y.floor() as usize).min(self.max_b());
        self.gamma[..=upto].iter().sum()
    }

    /// `g(mu) = sum_b gamma_b min{1, b mu}` for `mu` in `[0, 1]`.
    pub fn utility(&self, mu: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Domain(format!("utility evaluated at mu = {mu} outside [0, 1]")));
        }
        Ok(self.utility_unchecked(mu))
    }

    pub(crate) fn utility_unchecked(&self, mu: f64) -> f64 {
        self.gamma
            .iter()
            .enumerate()
            .map(|(b, g)| g * (b as f64 * mu).min(1.0))
            .sum()
    }

    /// Piecewise-linear description of `g`.
    pub fn breakpoints(&self) -> PiecewiseLinear {
        utility_breakpoints(self)
    }
}

fn poisson_pmf(lambda: f64, truncation: usize) -> Vec<f64> {
    let mut gamma = Vec::with_capacity(truncation + 1);
    // Work in log space so that large lambda does not underflow e^-lambda.
    let mut log_term = -lambda;
    gamma.push(log_term.exp());
    for b in 1..=truncation {
        log_term += lambda.ln() - (b as f64).ln();
        gamma.push(log_term.exp());
    }
    gamma
}

/// Poisson coverage for a deployment geometry.
pub fn coverage_from_geometry(geom: &NetworkGeometry, truncation: usize) -> Result<CoverageDistribution> {
    CoverageDistribution::poisson(geom.lambda(), truncation, geom.n_sbs)
}

/// `g(mu)`; see [`CoverageDistribution::utility`].
pub fn utility(cov: &CoverageDistribution, mu: f64) -> Result<f64> {
    cov.utility(mu)
}

/// `Q(k, lambda)` for integer `k >= 1`, i.e. the Poisson CDF at `k - 1`,
/// accumulated term by term from `Q(1, lambda) = e^-lambda`.
pub fn regularized_gamma_q(k: u64, lambda: f64) -> f64 {
    poisson_head(k, lambda).0
}

/// Returns `(Q(k, lambda), e^-lambda lambda^(k-1) / (k-1)!)`.
fn poisson_head(k: u64, lambda: f64) -> (f64, f64) {
    assert!(k >= 1, "Q(k, lambda) needs k >= 1");
    if lambda == 0.0 {
        return (1.0, if k == 1 { 1.0 } else { 0.0 });
    }
    let mut term = (-lambda).exp();
    let mut sum = term;
    let mut i = 1u64;
    while i < k {
        term *= lambda / i as f64;
        if term == 0.0 && i as f64 > lambda {
            // Remaining terms underflow; the head sum is complete.
            return (sum.min(1.0), 0.0);
        }
        sum += term;
        i += 1;
    }
    (sum.min(1.0), term)
}

/// `E[min{1, mu Y}]` for `Y ~ Poisson(lambda)` in closed form:
/// `1 + (lambda mu - 1) Q(m, lambda) - e^-lambda lambda^m mu / Gamma(m)`
/// with `m = ceil(1/mu)`. Returns 0 at `mu = 0` by continuity.
pub fn utility_poisson_closed_form(lambda: f64, mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [0, 1]")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be non-negative")));
    }
    if mu == 0.0 || lambda == 0.0 {
        return Ok(0.0);
    }
    let inv = (1.0 / mu).ceil();
    let m = if inv >= u64::MAX as f64 { u64::MAX } else { inv as u64 };
    let (q, last_pmf) = poisson_head(m, lambda);
    // e^-lambda lambda^m / (m-1)! = lambda * pmf(m - 1)
    Ok(1.0 + (lambda * mu - 1.0) * q - lambda * last_pmf * mu)
}

/// One linear piece `[start, end]` of the utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPiece {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
    pub value_at_start: f64,
}

impl LinearPiece {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Concave piecewise-linear function on `[0, 1]` with non-increasing slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pieces: Vec<LinearPiece>,
}

impl PiecewiseLinear {
    pub fn pieces(&self) -> &[LinearPiece] {
        &self.pieces
    }

    /// Right ends of the pieces, ascending (`0` excluded, `1` included).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.end).collect()
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.slope).collect()
    }

    pub fn evaluate(&self, mu: f64) -> f64 {
        let idx = self
            .pieces
            .partition_point(|p| p.end < mu)
            .min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        p.value_at_start + p.slope * (mu - p.start)
    }

    /// Value at `mu = 1`.
    pub fn full_value(&self) -> f64 {
        self.evaluate(1.0)
    }

    /// Merges neighbouring pieces whose slopes agree within `rel_tol`
    /// (relative to the largest slope). The merged piece keeps the slope of
    /// its first member, so the result never exceeds the original function
    /// by more than `rel_tol * max_slope`.
    pub fn merged(&self, rel_tol: f64) -> Self {
        let scale = self.pieces.first().map(|p| p.slope.abs()).unwrap_or(0.0);
        let mut pieces: Vec<LinearPiece> = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            match pieces.last_mut() {
                Some(last) if (last.slope - p.slope).abs() <= rel_tol * scale => {
                    last.end = p.end;
                }
                _ => pieces.push(*p),
            }
        }
        let mut value = 0.0;
        for p in &mut pieces {
            p.value_at_start = value;
            value += p.slope * p.length();
        }
        Self { pieces }
    }
}

/// Breakpoints of `g` sit at `mu = 1/b` for every `b >= 1` with
/// `gamma_b > 0`; on the piece ending at `1/b` the slope is
/// `sum_{b' <= b} b' gamma_b'`.
pub fn utility_breakpoints(cov: &CoverageDistribution) -> PiecewiseLinear {
    let support: Vec<usize> = cov
        .gamma()
        .iter()
        .enumerate()
        .filter(|(b, g)| *b >= 1 && **g > 0.0)
        .map(|(b, _)| b)
        .collect();
    let mut pieces = Vec::with_capacity(support.len() + 1);
    if support.is_empty() {
        pieces.push(LinearPiece {
            start: 0.0,
            end: 1.0,
            slope: 0.0,
            value_at_start: 0.0,
        });
        return PiecewiseLinear { pieces };
    }
    // prefix[k] = sum of b gamma_b over the k smallest support points
    let mut prefix = Vec::with_capacity(support.len() + 1);
    prefix.push(0.0);
    for &b in &support {
        let last = *prefix.last().unwrap();
        prefix.push(last + b as f64 * cov.gamma()[b]);
    }
    let mut start = 0.0;
    let mut value = 0.0;
    for (rank, &b) in support.iter().enumerate().rev() {
        let end = 1.0 / b as f64;
        let slope = prefix[rank + 1];
        pieces.push(LinearPiece {
            start,
            end,
            slope,
            value_at_start: value,
        });
        value = cov.utility_unchecked(end);
        start = end;
    }
    if start < 1.0 {
        pieces.push(LinearPiece {
            start,
            end: 1.0,
            slope: 0.0,
            value_at_start: value,
        });
    }
    PiecewiseLinear { pieces }
}
