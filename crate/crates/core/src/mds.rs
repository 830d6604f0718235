//! MDS code parameters for a cached policy row.
//!
//! A row `mu_{i,0} >= ... >= mu_{i,K}` is first quantized to rationals with
//! bounded denominators. With `k` the least common multiple of the
//! denominators, every station stores `m_j = k mu_{i,j}` coded packets in
//! slot `j`, and an `(n, k)` code with `n = B k mu_{i,0}` gives each of the
//! `B` stations distinct packets.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::planner::CachingPolicy;

pub const DEFAULT_MAX_DENOMINATOR: u64 = 64;

/// Best rational approximation of `x` in `[0, 1]` with denominator at most
/// `max_den`, from the continued-fraction convergents and semiconvergents.
pub fn best_rational(x: f64, max_den: u64) -> Ratio<u64> {
    if x <= 0.0 {
        return Ratio::new(0, 1);
    }
    if x >= 1.0 {
        return Ratio::new(1, 1);
    }
    // convergents p/q with p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    loop {
        let a = r.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let q2 = match a.checked_mul(q1).and_then(|v| v.checked_add(q0)) {
            Some(q) => q,
            None => break,
        };
        if q2 > max_den {
            // largest semiconvergent that fits, compared with the last convergent
            let t = (max_den - q0) / q1;
            let (ps, qs) = (p0 + t * p1, q0 + t * q1);
            let semi = (ps as f64 / qs as f64 - x).abs();
            let conv = (p1 as f64 / q1 as f64 - x).abs();
            if t > 0 && semi < conv {
                return Ratio::new(ps, qs);
            }
            return Ratio::new(p1, q1);
        }
        let p2 = a * p1 + p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - r.floor();
        if frac < 1e-15 || (p1 as f64 / q1 as f64 - x).abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    Ratio::new(p1, q1)
}

/// Quantizes a monotone row to rationals with denominators at most
/// `max_denominator`. Exact zeros stay zero; if rounding makes an entry
/// exceed its predecessor it is lowered to the predecessor.
pub fn quantize_policy_row(mu_row: &[f64], max_denominator: u64) -> Result<Vec<Ratio<u64>>> {
    if max_denominator == 0 {
        return Err(invalid("max_denominator", "must be at least 1"));
    }
    let mut out: Vec<Ratio<u64>> = Vec::with_capacity(mu_row.len());
    for &m in mu_row {
        let mut q = if m == 0.0 {
            Ratio::new(0, 1)
        } else {
            best_rational(m, max_denominator)
        };
        if let Some(prev) = out.last() {
            if q > *prev {
                q = *prev;
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// Code parameters of one file. A file that is never cached has `k = 0`
/// and `n = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub k: u64,
    pub n: u64,
    /// Coded packets each station holds in slot `j`.
    pub per_slot_counts: Vec<u64>,
    /// File size divided by `k`.
    pub packet_size: f64,
}

impl CodeParams {
    pub fn is_cached(&self) -> bool {
        self.k > 0
    }

    /// `m_j / k` per slot.
    pub fn fractions(&self) -> Vec<Ratio<u64>> {
        self.per_slot_counts
            .iter()
            .map(|&m| if self.k == 0 { Ratio::new(0, 1) } else { Ratio::new(m, self.k) })
            .collect()
    }

    /// Whether a user within range of `b` stations decodes in slot `j`.
    pub fn decodable(&self, b: u64, slot: usize) -> bool {
        self.k > 0 && b.saturating_mul(self.per_slot_counts[slot]) >= self.k
    }
}

/// `k` is the smallest integer making every `k mu_j` integral.
pub fn derive_code_params(mu_row: &[Ratio<u64>], n_sbs: u64, file_size: f64) -> Result<CodeParams> {
    if mu_row.windows(2).any(|w| w[1] > w[0]) || mu_row.iter().any(|m| *m > Ratio::new(1, 1)) {
        return Err(Error::PolicyInvariant("row must be non-increasing within [0, 1]".into()));
    }
    let overflow = || Error::Domain("code length does not fit in 64 bits".into());
    let mut k: u64 = 1;
    let mut any = false;
    for m in mu_row.iter().filter(|m| **m > Ratio::new(0, 1)) {
        any = true;
        let d = *m.denom();
        let g = k.gcd(&d);
        k = (k / g).checked_mul(d).ok_or_else(overflow)?;
    }
    if !any {
        return Ok(CodeParams {
            k: 0,
            n: 0,
            per_slot_counts: vec![0; mu_row.len()],
            packet_size: 0.0,
        });
    }
    let counts: Vec<u64> = mu_row.iter().map(|m| k / m.denom() * m.numer()).collect();
    let n = n_sbs.checked_mul(counts[0]).ok_or_else(overflow)?;
    Ok(CodeParams {
        k,
        n,
        per_slot_counts: counts,
        packet_size: file_size / k as f64,
    })
}

/// Quantized policy rows and their code parameters, one entry per file.
pub fn policy_code_params(
    policy: &CachingPolicy,
    n_sbs: u64,
    sizes: &[f64],
    max_denominator: u64,
) -> Result<Vec<(Vec<Ratio<u64>>, CodeParams)>> {
    if sizes.len() != policy.n_files() {
        return Err(Error::Dimension(format!(
            "{} sizes for {} policy rows",
            sizes.len(),
            policy.n_files()
        )));
    }
    policy
        .mu
        .iter()
        .zip(sizes)
        .map(|(row, &s)| {
            let q = quantize_policy_row(row, max_denominator)?;
            let params = derive_code_params(&q, n_sbs, s)?;
            Ok((q, params))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn quantizes_to_small_denominators() {
        let q = quantize_policy_row(&[1.0, 0.6667, 0.3333, 0.0], 3).unwrap();
        assert_eq!(q, vec![r(1, 1), r(2, 3), r(1, 3), r(0, 1)]);
        assert_eq!(quantize_policy_row(&[0.0; 4], 64).unwrap(), vec![r(0, 1); 4]);
        assert_eq!(quantize_policy_row(&[0.5], 64).unwrap(), vec![r(1, 2)]);
    }

    #[test]
    fn best_rational_uses_semiconvergents() {
        // pi - 3 has convergents 1/7, 15/106; 14/99 is a better fit below 106
        assert_eq!(best_rational(std::f64::consts::PI - 3.0, 100), r(14, 99));
        assert_eq!(best_rational(0.3, 10), r(3, 10));
        assert_eq!(best_rational(0.01, 64), r(1, 64));
        assert_eq!(best_rational(0.001, 64), r(0, 1));
    }

    #[test]
    fn repairs_monotonicity_downwards() {
        let q = quantize_policy_row(&[0.5, 0.4999], 2).unwrap();
        assert_eq!(q, vec![r(1, 2), r(1, 2)]);
        // an increase is lowered to the previous entry
        let q = quantize_policy_row(&[0.3, 0.45], 3).unwrap();
        assert_eq!(q, vec![r(1, 3), r(1, 3)]);
    }

    #[test]
    fn code_params_of_worked_example() {
        let row = [r(1, 1), r(2, 3), r(2, 3), r(2, 3), r(2, 3), r(1, 3), r(0, 1)];
        let p = derive_code_params(&row, 3, 1.0).unwrap();
        assert_eq!(p.k, 3);
        assert_eq!(p.n, 9);
        assert_eq!(p.per_slot_counts, vec![3, 2, 2, 2, 2, 1, 0]);
    }

    #[test]
    fn code_params_small_cases() {
        let p = derive_code_params(&[r(1, 2)], 2, 4.0).unwrap();
        assert_eq!((p.k, p.n, p.per_slot_counts.clone()), (2, 2, vec![1]));
        assert_eq!(p.packet_size, 2.0);
        let p = derive_code_params(&[r(1, 1)], 1, 1.0).unwrap();
        assert_eq!((p.k, p.n), (1, 1));
        let p = derive_code_params(&[r(0, 1), r(0, 1)], 5, 1.0).unwrap();
        assert!(!p.is_cached());
        assert_eq!(p.n, 0);
    }

    #[test]
    fn rejects_increasing_rows() {
        assert!(derive_code_params(&[r(1, 3), r(1, 2)], 2, 1.0).is_err());
    }

    fn monotone_row() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, 1..8).prop_map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
    }

    proptest! {
        #[test]
        fn best_rational_is_nearest_fraction(x in 0.0f64..1.0, den in 1u64..=64) {
            let q = best_rational(x, den);
            let err = (*q.numer() as f64 / *q.denom() as f64 - x).abs();
            for d in 1..=den {
                let n = (x * d as f64).round();
                prop_assert!(err <= (n / d as f64 - x).abs() + 1e-15);
            }
        }

        #[test]
        fn quantized_rows_are_monotone_and_close(row in monotone_row(), den in 1u64..=64) {
            let q = quantize_policy_row(&row, den).unwrap();
            for w in q.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            for (x, qx) in row.iter().zip(&q) {
                prop_assert!(*qx.denom() <= den);
                if *x == 0.0 {
                    prop_assert_eq!(*qx, r(0, 1));
                }
            }
        }

        #[test]
        fn counts_reconstruct_row_and_decodability_matches(row in monotone_row(), den in 1u64..=16, b_sbs in 1u64..50) {
            let q = quantize_policy_row(&row, den).unwrap();
            let p = derive_code_params(&q, b_sbs, 1.0).unwrap();
            if p.is_cached() {
                prop_assert_eq!(p.fractions(), q.clone());
                prop_assert!(p.per_slot_counts[0] <= p.k);
                prop_assert!(p.n <= b_sbs * p.k);
                prop_assert_eq!(p.n, b_sbs * p.per_slot_counts[0]);
                for (j, m) in q.iter().enumerate() {
                    for b in 0..6u64 {
                        let by_rational = Ratio::from_integer(b) * m >= Ratio::from_integer(1);
                        prop_assert_eq!(p.decodable(b, j), by_rational);
                    }
                }
                // k is the least such multiplier
                for smaller in 1..p.k.min(500) {
                    let integral = q.iter().all(|m| (Ratio::from_integer(smaller) * m).is_integer());
                    prop_assert!(!integral);
                }
            } else {
                prop_assert!(q.iter().all(|m| *m == r(0, 1)));
            }
        }
    }
}
