//! Normalized product moments `E(∏ Λ_R(Wψ_i(x)+1)² | x ∈ B) / (W ln R/φ(W))^m`
//! over integer boxes.

use rand::Rng;
use serde::Serialize;

use super::forms::structural_violation;
use super::sampling::{exhaustive_mean, sample_mean, Estimate, EXHAUSTIVE_LIMIT};
use crate::measures::{lambda_r_direct, Params};
use crate::sieve::FactorTable;
use crate::{Error, Result};

const MAX_BOX_DIM: usize = 8;

/// Integer affine forms evaluated on integers (not reduced mod M).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerForms {
    pub coeffs: Vec<Vec<i64>>,
    pub offsets: Vec<i64>,
}

impl IntegerForms {
    pub fn new(coeffs: Vec<Vec<i64>>, offsets: Vec<i64>) -> Self {
        Self { coeffs, offsets }
    }

    /// The single form `ψ(x) = x`.
    pub fn identity() -> Self {
        Self::new(vec![vec![1]], vec![0])
    }

    /// `x` and `x + r` in the variables `(x, r)`.
    pub fn pair() -> Self {
        Self::new(vec![vec![1, 0], vec![1, 1]], vec![0, 0])
    }

    fn m(&self) -> usize {
        self.coeffs.len()
    }

    fn t(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    fn eval(&self, i: usize, x: &[i64]) -> i64 {
        self.offsets[i] + self.coeffs[i].iter().zip(x).map(|(c, v)| c * v).sum::<i64>()
    }

    /// Least and greatest value of form `i` on the box.
    fn range_on(&self, i: usize, bx: &[(i64, i64)]) -> (i128, i128) {
        let (mut lo, mut hi) = (self.offsets[i] as i128, self.offsets[i] as i128);
        for (&c, &(a, b)) in self.coeffs[i].iter().zip(bx) {
            let (p, q) = (c as i128 * a as i128, c as i128 * b as i128);
            lo += p.min(q);
            hi += p.max(q);
        }
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GyOutcome {
    /// Estimate of the normalized moment; tends to 1 in the asymptotic regime.
    pub ratio: Estimate,
    /// `(W ln R/φ(W))^m`.
    pub normalization: f64,
    pub shortest_interval: u64,
    /// Whether every interval is at least `R^{10m}` long.
    pub hypothesis_met: bool,
    pub warnings: Vec<String>,
}

/// Estimates the normalized Goldston–Yıldırım moment for `forms` over the box
/// `bx` (inclusive integer intervals).
///
/// Boxes of at most [`EXHAUSTIVE_LIMIT`] points are summed exactly; larger
/// ones are sampled. A box shorter than `R^{10m}` is recorded as a warning.
pub fn gy_product_ratio(
    params: &Params,
    forms: &IntegerForms,
    bx: &[(i64, i64)],
    samples: u64,
    seed: u64,
    table: &FactorTable,
) -> Result<GyOutcome> {
    let (m, t) = (forms.m(), forms.t());
    if m == 0 || t == 0 || forms.offsets.len() != m || forms.coeffs.iter().any(|r| r.len() != t) {
        return Err(Error::Domain("forms must be a non-empty m×t array with m offsets".into()));
    }
    if t > MAX_BOX_DIM {
        return Err(Error::Domain(format!("t = {t} exceeds {MAX_BOX_DIM} variables")));
    }
    if bx.len() != t || bx.iter().any(|&(a, b)| a > b) {
        return Err(Error::Domain(format!("box must hold {t} non-empty intervals")));
    }
    // |L_ij| ≤ √w / 2
    for (i, row) in forms.coeffs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if 4 * (c as i128) * (c as i128) > params.w as i128 {
                return Err(Error::Domain(format!(
                    "coefficient L[{i}][{j}] = {c} exceeds √w/2 for w = {}",
                    params.w
                )));
            }
        }
    }
    let rows: Vec<Vec<i128>> = forms
        .coeffs
        .iter()
        .map(|r| r.iter().map(|&c| c as i128).collect())
        .collect();
    if let Some(v) = structural_violation(&rows) {
        return Err(v.into());
    }
    for i in 0..m {
        let (lo, hi) = forms.range_on(i, bx);
        if lo < 0 || (params.primorial as i128) * hi + 1 >= 1i128 << 63 {
            return Err(Error::Domain(format!(
                "form {i} ranges over [{lo}, {hi}]; W·ψ+1 must stay in [1, 2^63)"
            )));
        }
    }
    if params.truncation.floor() as u64 > table.limit() {
        return Err(Error::Config(format!(
            "factor table limit {} below R = {}",
            table.limit(),
            params.truncation
        )));
    }

    let normalization = (params.log_r() / params.w_trick_scale()).powi(m as i32);
    let shortest_interval = bx.iter().map(|&(a, b)| (b - a) as u64 + 1).min().unwrap_or(0);
    let required = params.truncation.powf(10.0 * m as f64);
    let hypothesis_met = shortest_interval as f64 >= required;
    let mut warnings = Vec::new();
    if !hypothesis_met {
        warnings.push(format!(
            "box-below-R^10m: shortest interval {shortest_interval} < R^{} = {required:.3e}",
            10 * m
        ));
    }

    let lens: Vec<u64> = bx.iter().map(|&(a, b)| (b - a) as u64 + 1).collect();
    let size = lens
        .iter()
        .try_fold(1u128, |acc, &l| acc.checked_mul(l as u128))
        .unwrap_or(u128::MAX);
    let r = params.truncation;
    let w = params.primorial;
    let moment = |x: &[i64]| -> f64 {
        (0..m)
            .map(|i| {
                let theta = w * forms.eval(i, x) as u64 + 1;
                let l = lambda_r_direct(theta, r, table);
                l * l
            })
            .product::<f64>()
            / normalization
    };

    let ratio = if size <= EXHAUSTIVE_LIMIT as u128 {
        exhaustive_mean(size as u64, seed, |mut idx| {
            let mut x = [0i64; MAX_BOX_DIM];
            for (j, &(a, _)) in bx.iter().enumerate() {
                x[j] = a + (idx % lens[j]) as i64;
                idx /= lens[j];
            }
            moment(&x[..t])
        })
    } else {
        if samples == 0 {
            return Err(Error::Domain("samples must be positive".into()));
        }
        sample_mean(samples, seed, |rng| {
            let mut x = [0i64; MAX_BOX_DIM];
            for (j, &(a, b)) in bx.iter().enumerate() {
                x[j] = rng.gen_range(a..=b);
            }
            moment(&x[..t])
        })
    };
    Ok(GyOutcome {
        ratio,
        normalization,
        shortest_interval,
        hypothesis_met,
        warnings,
    })
}
