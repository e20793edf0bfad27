//! Shifted-product correlations of `ν` and the weight `τ` that dominates them.
//!
//! For `n ≠ 0`, `τ(n) = A · ∏_{p | n} (1 + p^{-1/2})^C`; at zero,
//! `τ(0) = exp(C0 · m · ln N / ln ln N)` absorbs tuples with repeated shifts.
//! Differences of shifts are read through the representatives of `Z_M` in
//! `(−M/2, M/2]`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::measures::WindowFn;
use crate::report::{CheckRecord, Verdict};
use crate::sieve::FactorTable;
use crate::{Error, Result};

const LHS_CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauConfig {
    pub m: usize,
    /// `A ≥ 1`.
    pub prefactor: f64,
    /// `C ≥ 0`, the exponent on each prime factor.
    pub exponent: f64,
    /// Constant in the exponent of `τ(0)`.
    pub zero_constant: f64,
}

impl TauConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            prefactor: 1.0,
            exponent: 1.0,
            zero_constant: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config(format!("τ needs m ≥ 2, got {}", self.m)));
        }
        if !(self.prefactor >= 1.0 && self.prefactor.is_finite()) {
            return Err(Error::Config(format!("τ prefactor A = {} must be ≥ 1", self.prefactor)));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::Config(format!("τ exponent C = {} must be ≥ 0", self.exponent)));
        }
        if !(self.zero_constant > 0.0 && self.zero_constant.is_finite()) {
            return Err(Error::Config(format!(
                "τ(0) constant = {} must be positive",
                self.zero_constant
            )));
        }
        Ok(())
    }
}

/// `τ(0) = exp(C0 · m · ln N / ln ln N)`.
pub fn tau_zero(n_start: u64, cfg: &TauConfig) -> f64 {
    let ln_n = (n_start as f64).ln();
    (cfg.zero_constant * cfg.m as f64 * ln_n / ln_n.ln()).exp()
}

fn prime_product(n: u64, exponent: f64, table: &FactorTable) -> Result<f64> {
    Ok(table
        .distinct_prime_factors(n)?
        .into_iter()
        .map(|p| (1.0 + (p as f64).powf(-0.5)).powf(exponent))
        .product())
}

/// `τ(n)` for `n ≠ 0`.
pub fn tau_weight(n: i64, cfg: &TauConfig, table: &FactorTable) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("finite τ branch needs n ≠ 0; use tau_zero".into()));
    }
    Ok(cfg.prefactor * prime_product(n.unsigned_abs(), cfg.exponent, table)?)
}

/// `E(τ^q(n) | 0 < |n| ≤ modulus)`.
pub fn tau_moment(q: f64, cfg: &TauConfig, modulus: u64, table: &FactorTable) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("moment order q = {q} must be ≥ 1")));
    }
    if modulus == 0 {
        return Err(Error::Domain("empty moment range".into()));
    }
    let chunk = 1u64 << 14;
    let partial: Vec<Result<f64>> = (0..modulus.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut s = 0.0;
            for n in c * chunk + 1..=((c + 1) * chunk).min(modulus) {
                s += prime_product(n, cfg.exponent * q, table)?;
            }
            Ok(s)
        })
        .collect();
    let mut sum = 0.0;
    for p in partial {
        sum += p?;
    }
    // τ(−n) = τ(n), so the symmetric range has the same mean.
    Ok(cfg.prefactor.powf(q) * sum / modulus as f64)
}

/// Exact `E(∏_i ν(x + h_i) | x ∈ Z_M)`, shifts read as residues mod M.
pub fn correlation_lhs(nu: &WindowFn, shifts: &[u64]) -> f64 {
    let m = nu.len();
    let values = nu.values();
    let shifts: Vec<usize> = shifts.iter().map(|&h| (h % m as u64) as usize).collect();
    let partial: Vec<f64> = (0..m.div_ceil(LHS_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = 0.0;
            for i in c * LHS_CHUNK..((c + 1) * LHS_CHUNK).min(m) {
                let mut prod = 1.0;
                for &h in &shifts {
                    let j = i + h;
                    prod *= values[if j >= m { j - m } else { j }];
                }
                s += prod;
            }
            s
        })
        .collect();
    partial.iter().sum::<f64>() / m as f64
}

/// `h_i − h_j` as an integer in `(−M/2, M/2]`.
fn signed_difference(a: u64, b: u64, modulus: u64) -> i64 {
    let d = (a % modulus + modulus - b % modulus) % modulus;
    if d <= modulus / 2 {
        d as i64
    } else {
        d as i64 - modulus as i64
    }
}

/// Pairwise structure of a shift tuple: `Σ_{i<j, h_i ≠ h_j} ∏_{p | h_i − h_j}
/// (1+p^{-1/2})^C` (prefactor excluded) and the number of equal pairs.
fn pair_structure(shifts: &[u64], cfg: &TauConfig, modulus: u64, table: &FactorTable) -> Result<(f64, usize, f64)> {
    let mut finite = 0.0;
    let mut equal = 0;
    let mut largest: f64 = 0.0;
    for i in 0..shifts.len() {
        for j in i + 1..shifts.len() {
            let d = signed_difference(shifts[i], shifts[j], modulus);
            if d == 0 {
                equal += 1;
            } else {
                let v = prime_product(d.unsigned_abs(), cfg.exponent, table)?;
                largest = largest.max(v);
                finite += v;
            }
        }
    }
    Ok((finite, equal, largest))
}

/// Shift tuples for the correlation check. One in four repeats a shift, two
/// in four cluster within the support width, the rest are uniform.
pub fn sample_shift_tuples(nu: &WindowFn, m: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<u64>> {
    let modulus = nu.params().modulus;
    let width = (nu.params().support_len() as u64).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|i| {
            let h0 = rng.gen_range(0..modulus);
            let mut tuple: Vec<u64> = match i % 4 {
                3 => (0..m).map(|_| rng.gen_range(0..modulus)).collect(),
                _ => std::iter::once(h0)
                    .chain((1..m).map(|_| (h0 + rng.gen_range(0..width)) % modulus))
                    .collect(),
            };
            if i % 4 == 0 {
                let j = rng.gen_range(1..m);
                tuple[j] = tuple[0];
            }
            tuple
        })
        .collect()
}

/// Smallest power-of-two prefactor `A ≥ 1` for which every tuple satisfies
/// `LHS ≤ Σ_{i<j} τ(h_i − h_j)`; returns `cfg` with that prefactor.
pub fn calibrate_prefactor(nu: &WindowFn, cfg: &TauConfig, tuples: &[Vec<u64>], table: &FactorTable) -> Result<TauConfig> {
    cfg.validate()?;
    let tau0 = tau_zero(nu.params().n_start, cfg);
    let modulus = nu.params().modulus;
    let mut needed: f64 = 1.0;
    for shifts in tuples {
        let lhs = correlation_lhs(nu, shifts);
        let (finite, equal, _) = pair_structure(shifts, cfg, modulus, table)?;
        let rest = lhs - equal as f64 * tau0;
        if rest > 0.0 {
            if finite == 0.0 {
                return Err(Error::Config(format!(
                    "τ(0) = {tau0:.3e} cannot dominate a tuple whose shifts all coincide (LHS = {lhs})"
                )));
            }
            needed = needed.max(rest / finite);
        }
    }
    let mut prefactor = 1.0;
    while prefactor < needed {
        prefactor *= 2.0;
    }
    Ok(TauConfig { prefactor, ..*cfg })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftRecord {
    pub shifts: Vec<u64>,
    pub lhs: f64,
    pub tau_sum: f64,
    pub ratio: f64,
    pub repeated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub config: TauConfig,
    pub tau_zero: f64,
    pub sup_norm: f64,
    pub tuples: usize,
    pub repeated_tuples: usize,
    pub max_ratio: f64,
    pub max_ratio_repeated: f64,
    /// Largest finite `τ` value met while bounding the tuples.
    pub max_finite_tau: f64,
    /// `LHS ≤ ‖ν‖_∞^m` on every repeated-shift tuple.
    pub repeated_within_sup_norm: bool,
    /// `‖ν‖_∞^m ≤ τ(0)`.
    pub sup_norm_within_tau_zero: bool,
    /// `τ(0)` dominates every finite `τ` value used.
    pub tau_zero_dominates: bool,
    pub bounded: bool,
    #[serde(skip)]
    pub records: Vec<ShiftRecord>,
}

impl CorrelationReport {
    pub fn to_checks(&self, prefix: &str) -> Vec<CheckRecord> {
        vec![
            CheckRecord::new(format!("{prefix}max_ratio"), self.max_ratio, Verdict::soft(self.bounded))
                .with_tolerance("<= 1")
                .with_note(format!(
                    "m = {}, A = {}, C = {}, {} tuples ({} repeated)",
                    self.config.m, self.config.prefactor, self.config.exponent, self.tuples, self.repeated_tuples
                )),
            CheckRecord::new(
                format!("{prefix}repeated_within_sup_norm"),
                self.max_ratio_repeated,
                Verdict::hard(self.repeated_within_sup_norm),
            )
            .with_note(format!("sup norm {}", self.sup_norm)),
            CheckRecord::new(
                format!("{prefix}sup_norm_within_tau_zero"),
                self.sup_norm.powi(self.config.m as i32),
                Verdict::soft(self.sup_norm_within_tau_zero),
            )
            .with_tolerance(format!("<= tau(0) = {:e}", self.tau_zero)),
            CheckRecord::new(
                format!("{prefix}tau_zero_dominates"),
                self.max_finite_tau,
                Verdict::soft(self.tau_zero_dominates),
            )
            .with_tolerance(format!("<= tau(0) = {:e}", self.tau_zero)),
        ]
    }
}

/// Compares `E(∏ ν(x+h_i))` with `Σ_{i<j} τ(h_i − h_j)` on fresh tuples drawn
/// from stream 1 of `seed` (calibration conventionally uses stream 0).
pub fn correlation_check(
    nu: &WindowFn,
    cfg: &TauConfig,
    shift_samples: usize,
    seed: u64,
    table: &FactorTable,
) -> Result<CorrelationReport> {
    cfg.validate()?;
    let params = nu.params();
    let tau0 = tau_zero(params.n_start, cfg);
    let sup_norm = nu.max();
    let sup_m = sup_norm.powi(cfg.m as i32);
    let tuples = sample_shift_tuples(nu, cfg.m, shift_samples, seed, 1);

    let mut records = Vec::with_capacity(tuples.len());
    let mut max_finite_tau: f64 = 0.0;
    for shifts in tuples {
        let lhs = correlation_lhs(nu, &shifts);
        let (finite, equal, largest) = pair_structure(&shifts, cfg, params.modulus, table)?;
        max_finite_tau = max_finite_tau.max(cfg.prefactor * largest);
        let tau_sum = cfg.prefactor * finite + equal as f64 * tau0;
        records.push(ShiftRecord {
            shifts,
            lhs,
            tau_sum,
            ratio: lhs / tau_sum,
            repeated: equal > 0,
        });
    }

    let max_of = |f: &dyn Fn(&&ShiftRecord) -> bool| {
        records.iter().filter(f).map(|r| r.ratio).fold(0.0, f64::max)
    };
    let max_ratio = max_of(&|_| true);
    let max_ratio_repeated = max_of(&|r| r.repeated);
    let slack = 1e-12 * sup_m.max(1.0);
    let repeated_within_sup_norm = records
        .iter()
        .filter(|r| r.repeated)
        .all(|r| r.lhs <= sup_m + slack);

    Ok(CorrelationReport {
        config: *cfg,
        tau_zero: tau0,
        sup_norm,
        tuples: records.len(),
        repeated_tuples: records.iter().filter(|r| r.repeated).count(),
        max_ratio,
        max_ratio_repeated,
        max_finite_tau,
        repeated_within_sup_norm,
        sup_norm_within_tau_zero: sup_m <= tau0,
        tau_zero_dominates: max_finite_tau <= tau0,
        bounded: max_ratio <= 1.0,
        records,
    })
}
