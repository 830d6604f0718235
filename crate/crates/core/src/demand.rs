//! Per-file renewal request processes and the slot tables derived from them.
//!
//! Time is measured in hours throughout. For a file with inter-request time
//! `X` and a grid of `K` update slots of length `T`, slot `j < K` covers
//! `[jT, (j+1)T)` and slot `K` covers `[KT, inf)`. The tables hold
//!
//! * `F[i][j]`, the probability that the next request for file `i` lands in slot `j`;
//! * `A[i][j]`, the expected time the inter-request interval spends in slot `j`,
//!   i.e. the integral of the survival function over the slot.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Absolute tolerance used for each finite `A` cell.
const CELL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Exponential,
    Weibull,
}

/// Inter-request time distribution of one file, parametrized by its rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterRequestDistribution {
    kind: DistributionKind,
    shape: f64,
    rate: f64,
    scale: f64,
}

impl InterRequestDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self {
            kind: DistributionKind::Exponential,
            shape: 1.0,
            rate,
            scale: 1.0 / rate,
        })
    }

    /// Weibull with shape in `(0, 1]`, which keeps the hazard non-increasing.
    pub fn weibull(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape <= 1.0) {
            return Err(invalid(
                "weibull_shape",
                format!("{shape} is outside (0, 1]; use `weibull_exploratory` for increasing hazards"),
            ));
        }
        Self::weibull_exploratory(shape, rate)
    }

    /// Weibull without the decreasing-hazard restriction. Tables built from
    /// such distributions may disable the single-cache greedy solver.
    pub fn weibull_exploratory(shape: f64, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(invalid("weibull_shape", format!("{shape} must be positive")));
        }
        let scale = if shape == 1.0 {
            1.0 / rate
        } else {
            1.0 / (rate * gamma(1.0 + 1.0 / shape))
        };
        Ok(Self {
            kind: DistributionKind::Weibull,
            shape,
            rate,
            scale,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Request rate `1 / E[X]`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn has_decreasing_hazard(&self) -> bool {
        self.shape <= 1.0
    }

    fn exponent(&self, t: f64) -> f64 {
        match self.kind {
            DistributionKind::Exponential => self.rate * t,
            DistributionKind::Weibull => (t / self.scale).powf(self.shape),
        }
    }

    /// `Pr(X > t)` for `t >= 0`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        (-self.exponent(t)).exp()
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("cdf evaluated at negative time {t}")));
        }
        if t == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(-(-self.exponent(t)).exp_m1())
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let e = -(-u).ln_1p();
        match self.kind {
            DistributionKind::Exponential => e / self.rate,
            DistributionKind::Weibull => self.scale * e.powf(1.0 / self.shape),
        }
    }

    /// Integral of the survival function over `[lo, hi]`.
    fn survival_integral(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            DistributionKind::Exponential => {
                ((-self.rate * lo).exp() - (-self.rate * hi).exp()) / self.rate
            }
            DistributionKind::Weibull => quadrature::integrate(|t| self.survival(t), lo, hi, CELL_TOL),
        }
    }

    /// Integral of the survival function over `[lo, inf)`.
    fn survival_tail(&self, lo: f64) -> f64 {
        match self.kind {
            DistributionKind::Exponential => (-self.rate * lo).exp() / self.rate,
            DistributionKind::Weibull => {
                quadrature::integrate_to_infinity(|t| self.survival(t), lo, CELL_TOL)
            }
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(invalid("rate", format!("{rate} must be positive and finite")))
    }
}

/// `F_X(t)`; errors on negative `t`.
pub fn cdf(dist: &InterRequestDistribution, t: f64) -> Result<f64> {
    dist.cdf(t)
}

/// Draws one inter-request time by inverting the CDF at a uniform draw.
pub fn sample_interarrival<R: Rng + ?Sized>(dist: &InterRequestDistribution, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    dist.quantile(u)
}

/// Zipf popularity masses `p_i = i^-alpha / sum_l l^-alpha`.
pub fn zipf_popularity(n_files: usize, alpha: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n_files).map(|i| (i as f64).powf(-alpha)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// The file library together with each file's request process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    sizes: Vec<f64>,
    zipf_alpha: f64,
    aggregate_rate: f64,
    per_file: Vec<InterRequestDistribution>,
}

impl Catalog {
    /// Zipf-popular library where every file shares the Weibull shape
    /// (`shape == 1` yields exponential inter-request times).
    pub fn zipf(
        sizes: Vec<f64>,
        zipf_alpha: f64,
        aggregate_rate: f64,
        shape: f64,
    ) -> Result<Self> {
        Self::zipf_with(sizes, zipf_alpha, aggregate_rate, |rate| {
            if shape == 1.0 {
                InterRequestDistribution::exponential(rate)
            } else {
                InterRequestDistribution::weibull(shape, rate)
            }
        })
    }

    /// Zipf-popular library with a caller-chosen distribution family.
    pub fn zipf_with<F>(sizes: Vec<f64>, zipf_alpha: f64, aggregate_rate: f64, make: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<InterRequestDistribution>,
    {
        if sizes.is_empty() {
            return Err(invalid("n_files", "library must hold at least one file"));
        }
        if !(zipf_alpha >= 0.0 && zipf_alpha.is_finite()) {
            return Err(invalid("zipf_alpha", format!("{zipf_alpha} must be >= 0")));
        }
        check_rate(aggregate_rate).map_err(|_| {
            invalid("aggregate_rate", format!("{aggregate_rate} must be positive"))
        })?;
        let per_file = zipf_popularity(sizes.len(), zipf_alpha)
            .into_iter()
            .map(|p| make(p * aggregate_rate))
            .collect::<Result<Vec<_>>>()?;
        Self::validate_sizes(&sizes)?;
        Ok(Self {
            sizes,
            zipf_alpha,
            aggregate_rate,
            per_file,
        })
    }

    /// Library with explicit per-file distributions. The aggregate rate is
    /// the sum of the per-file rates; `zipf_alpha` is recorded as NaN.
    pub fn explicit(sizes: Vec<f64>, per_file: Vec<InterRequestDistribution>) -> Result<Self> {
        if sizes.len() != per_file.len() || sizes.is_empty() {
            return Err(Error::Dimension(format!(
                "{} sizes for {} distributions",
                sizes.len(),
                per_file.len()
            )));
        }
        Self::validate_sizes(&sizes)?;
        let aggregate_rate = per_file.iter().map(|d| d.rate()).sum();
        Ok(Self {
            sizes,
            zipf_alpha: f64::NAN,
            aggregate_rate,
            per_file,
        })
    }

    fn validate_sizes(sizes: &[f64]) -> Result<()> {
        match sizes.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            Some(i) => Err(invalid("sizes", format!("size of file {} must be positive", i + 1))),
            None => Ok(()),
        }
    }

    pub fn n_files(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn zipf_alpha(&self) -> f64 {
        self.zipf_alpha
    }

    pub fn aggregate_rate(&self) -> f64 {
        self.aggregate_rate
    }

    pub fn distributions(&self) -> &[InterRequestDistribution] {
        &self.per_file
    }

    pub fn rates(&self) -> Vec<f64> {
        self.per_file.iter().map(|d| d.rate()).collect()
    }

    pub fn popularity(&self) -> Vec<f64> {
        self.per_file
            .iter()
            .map(|d| d.rate() / self.aggregate_rate)
            .collect()
    }

    /// `sum_i omega_i s_i`, the total requested data rate.
    pub fn requested_rate(&self) -> f64 {
        self.per_file
            .iter()
            .zip(&self.sizes)
            .map(|(d, s)| d.rate() * s)
            .sum()
    }
}

/// Update period `T` and number of updates `K` within the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    period: f64,
    n_updates: usize,
}

impl TimeGrid {
    pub fn new(period: f64, n_updates: usize) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid("period", format!("{period} must be positive")));
        }
        Ok(Self { period, n_updates })
    }

    /// `K = 0`: cache contents never change.
    pub fn static_caching() -> Self {
        Self {
            period: 1.0,
            n_updates: 0,
        }
    }

    /// Grid from an update frequency `f` (per hour) and a window length
    /// (hours); `K = round(f * window)`. `f = 0` gives static caching.
    pub fn from_frequency(frequency: f64, window: f64) -> Result<Self> {
        if frequency == 0.0 {
            return Ok(Self::static_caching());
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(invalid("update_frequency", format!("{frequency} must be >= 0")));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(invalid("window", format!("{window} must be positive")));
        }
        let k = (frequency * window).round();
        if k < 1.0 {
            return Err(invalid(
                "update_frequency",
                format!("f * window = {} rounds to zero updates", frequency * window),
            ));
        }
        Self::new(1.0 / frequency, k as usize)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_updates(&self) -> usize {
        self.n_updates
    }

    pub fn n_slots(&self) -> usize {
        self.n_updates + 1
    }

    pub fn frequency(&self) -> f64 {
        if self.n_updates == 0 {
            0.0
        } else {
            1.0 / self.period
        }
    }

    pub fn window(&self) -> f64 {
        self.n_updates as f64 * self.period
    }

    pub fn is_static(&self) -> bool {
        self.n_updates == 0
    }

    /// Slot index for an elapsed time: `min(floor(t / T), K)`.
    pub fn slot(&self, elapsed: f64) -> usize {
        if self.n_updates == 0 || !elapsed.is_finite() {
            return self.n_updates;
        }
        let j = (elapsed / self.period).floor();
        if j >= self.n_updates as f64 {
            self.n_updates
        } else {
            j.max(0.0) as usize
        }
    }
}

/// Slot probabilities `F`, occupancies `A` and their ratio, one row per file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandTables {
    pub f: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub hazard_ratio: Vec<Vec<f64>>,
    grid: TimeGrid,
    hazard_monotone: bool,
}

impl DemandTables {
    pub fn n_files(&self) -> usize {
        self.f.len()
    }

    pub fn n_slots(&self) -> usize {
        self.grid.n_slots()
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Whether every row of `F/A` is non-increasing (within 1e-12 relative).
    pub fn hazard_monotone(&self) -> bool {
        self.hazard_monotone
    }
}

/// Builds `F`, `A` and `F/A` for every file of the catalog.
///
/// Exponential cells are integrated in closed form. Weibull cells use
/// adaptive quadrature, and the tail cell is the mean minus the finite cells
/// unless that difference is too small to be trusted, in which case the tail
/// integral is evaluated directly.
pub fn compute_demand_tables(catalog: &Catalog, grid: &TimeGrid) -> DemandTables {
    let k = grid.n_updates();
    let period = grid.period();
    let mut f = Vec::with_capacity(catalog.n_files());
    let mut a = Vec::with_capacity(catalog.n_files());
    let mut hazard_ratio = Vec::with_capacity(catalog.n_files());
    let mut hazard_monotone = true;

    for dist in catalog.distributions() {
        let mean = dist.mean();
        let mut f_row = Vec::with_capacity(k + 1);
        let mut a_row = Vec::with_capacity(k + 1);
        if k == 0 {
            f_row.push(1.0);
            a_row.push(mean);
        } else {
            let mut prev_survival = 1.0;
            for j in 0..k {
                let hi = (j + 1) as f64 * period;
                let s = dist.survival(hi);
                f_row.push(prev_survival - s);
                prev_survival = s;
                a_row.push(dist.survival_integral(j as f64 * period, hi));
            }
            f_row.push(prev_survival);
            let finite: f64 = a_row.iter().sum();
            let by_difference = mean - finite;
            let tail = if by_difference > 1e-6 * mean {
                by_difference
            } else {
                dist.survival_tail(k as f64 * period)
            };
            a_row.push(tail.max(f64::MIN_POSITIVE));
        }
        let ratio: Vec<f64> = f_row.iter().zip(&a_row).map(|(f, a)| f / a).collect();
        if ratio
            .windows(2)
            .any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-300)
        {
            hazard_monotone = false;
        }
        f.push(f_row);
        a.push(a_row);
        hazard_ratio.push(ratio);
    }

    DemandTables {
        f,
        a,
        hazard_ratio,
        grid: *grid,
        hazard_monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma_lr;

    #[test]
    fn cdf_examples() {
        let e = InterRequestDistribution::exponential(1.0).unwrap();
        assert_eq!(cdf(&e, 0.0).unwrap(), 0.0);
        let w = InterRequestDistribution::weibull(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(cdf(&w, 0.5).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        let w = InterRequestDistribution::weibull(0.6, 1.0).unwrap();
        assert_eq!(cdf(&w, f64::INFINITY).unwrap(), 1.0);
        assert!(cdf(&w, 1e6).unwrap() > 1.0 - 1e-12);
        assert!(matches!(cdf(&w, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn weibull_rejects_increasing_hazard() {
        assert!(InterRequestDistribution::weibull(1.5, 1.0).is_err());
        assert!(InterRequestDistribution::weibull(0.0, 1.0).is_err());
        assert!(InterRequestDistribution::weibull_exploratory(1.5, 1.0).is_ok());
        assert!(InterRequestDistribution::exponential(0.0).is_err());
    }

    #[test]
    fn exponential_is_unit_shape_weibull() {
        let e = InterRequestDistribution::exponential(3.0).unwrap();
        let w = InterRequestDistribution::weibull(1.0, 3.0).unwrap();
        for t in [0.0, 0.01, 0.3, 1.0, 7.5, 40.0] {
            assert!((e.cdf(t).unwrap() - w.cdf(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_unit_grid() {
        let cat = Catalog::explicit(vec![1.0], vec![InterRequestDistribution::exponential(1.0).unwrap()])
            .unwrap();
        let t = compute_demand_tables(&cat, &TimeGrid::new(1.0, 1).unwrap());
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(t.f[0][0], 1.0 - e1, epsilon = 1e-14);
        assert_abs_diff_eq!(t.f[0][1], e1, epsilon = 1e-14);
        assert_abs_diff_eq!(t.a[0][0], 1.0 - e1, epsilon = 1e-14);
        assert_abs_diff_eq!(t.a[0][1], e1, epsilon = 1e-14);
    }

    #[test]
    fn static_grid_tables() {
        let cat = Catalog::zipf(vec![1.0; 5], 0.7, 100.0, 0.6).unwrap();
        let t = compute_demand_tables(&cat, &TimeGrid::static_caching());
        for (i, rate) in cat.rates().iter().enumerate() {
            assert_eq!(t.f[i], vec![1.0]);
            assert_abs_diff_eq!(t.a[i][0], 1.0 / rate, epsilon = 1e-9);
        }
    }

    #[test]
    fn weibull_cells_match_incomplete_gamma() {
        // Integral of exp(-(t/b)^a) over [x1, x2] is
        // b Gamma(1 + 1/a) [P(1/a, (x2/b)^a) - P(1/a, (x1/b)^a)] = [..] / omega.
        let shape = 0.6;
        let rate = 1.0;
        let cat = Catalog::explicit(
            vec![1.0],
            vec![InterRequestDistribution::weibull(shape, rate).unwrap()],
        )
        .unwrap();
        let grid = TimeGrid::new(1.0 / 6.0, 6).unwrap();
        let t = compute_demand_tables(&cat, &grid);
        let d = cat.distributions()[0];
        let p = |x: f64| if x == 0.0 { 0.0 } else { gamma_lr(1.0 / shape, (x / d.scale()).powf(shape)) };
        let mut total_f = 0.0;
        let mut total_a = 0.0;
        for j in 0..=6 {
            let lo = j as f64 / 6.0;
            let expected = if j < 6 {
                (p(lo + 1.0 / 6.0) - p(lo)) / rate
            } else {
                (1.0 - p(lo)) / rate
            };
            assert!((t.a[0][j] - expected).abs() < 1e-10, "cell {j}: {} vs {expected}", t.a[0][j]);
            total_f += t.f[0][j];
            total_a += t.a[0][j];
        }
        assert_abs_diff_eq!(total_f, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(total_a, 1.0, epsilon = 1e-8);
        assert!(t.hazard_monotone());
    }

    #[test]
    fn unit_shape_weibull_tables_match_exponential() {
        let sizes = vec![1.0; 4];
        let exp = Catalog::zipf_with(sizes.clone(), 0.5, 10.0, InterRequestDistribution::exponential)
            .unwrap();
        let wei = Catalog::zipf_with(sizes, 0.5, 10.0, |r| InterRequestDistribution::weibull(1.0, r))
            .unwrap();
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let te = compute_demand_tables(&exp, &grid);
        let tw = compute_demand_tables(&wei, &grid);
        for i in 0..4 {
            for j in 0..5 {
                assert!((te.f[i][j] - tw.f[i][j]).abs() < 1e-10);
                assert!((te.a[i][j] - tw.a[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exponential_hazard_ratio_is_rate_for_fine_grid() {
        let cat = Catalog::explicit(vec![1.0], vec![InterRequestDistribution::exponential(2.5).unwrap()])
            .unwrap();
        let t = compute_demand_tables(&cat, &TimeGrid::new(1e-3, 50).unwrap());
        for r in &t.hazard_ratio[0] {
            assert!((r - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn increasing_hazard_is_flagged() {
        let cat = Catalog::explicit(
            vec![1.0],
            vec![InterRequestDistribution::weibull_exploratory(2.0, 1.0).unwrap()],
        )
        .unwrap();
        let t = compute_demand_tables(&cat, &TimeGrid::new(0.5, 4).unwrap());
        assert!(!t.hazard_monotone());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = InterRequestDistribution::weibull(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(d.quantile(1.0 - (-1.0f64).exp()), 1.0, epsilon = 1e-12);
        assert_eq!(d.quantile(0.0), 0.0);
    }

    #[test]
    fn sample_mean_matches_rate() {
        let d = InterRequestDistribution::weibull(0.6, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_interarrival(&d, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn zipf_rates_sum_to_aggregate() {
        let cat = Catalog::zipf(vec![1.0; 100], 0.7, 100.0, 0.6).unwrap();
        let p: f64 = cat.popularity().iter().sum();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cat.rates().iter().sum::<f64>(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn slot_indexing_is_left_closed_and_clamped() {
        let g = TimeGrid::new(0.5, 3).unwrap();
        assert_eq!(g.slot(0.0), 0);
        assert_eq!(g.slot(0.4999), 0);
        assert_eq!(g.slot(0.5), 1);
        assert_eq!(g.slot(1.5), 3);
        assert_eq!(g.slot(100.0), 3);
        assert_eq!(g.slot(f64::INFINITY), 3);
        let g = TimeGrid::from_frequency(6.0, 1.0).unwrap();
        assert_eq!(g.n_updates(), 6);
        assert!((g.period() - 1.0 / 6.0).abs() < 1e-15);
        assert!(TimeGrid::from_frequency(0.0, 1.0).unwrap().is_static());
    }
}
