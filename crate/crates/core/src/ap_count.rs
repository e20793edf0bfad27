//! Exact k-term progression expectations over `Z_M`.
//!
//! `E(f(x) f(x+r) ⋯ f(x+(k−1)r) | x, r ∈ Z_M)` only receives contributions
//! from pairs `(x, r)` whose first two terms lie in the support of `f`, so the
//! sum runs over ordered pairs of support elements and probes the remaining
//! `k − 2` terms in a flat membership array. The `r = 0` diagonal is added
//! separately.
//!
//! Each non-degenerate pair is also classified against the integer support
//! interval: reading `r` as its representative `r'` in `(−M/2, M/2]`, the
//! pair is a genuine integer progression when every `x + i·r'` stays inside
//! `[support_lo, support_hi]`, and wrapped otherwise.

use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::measures::{f_window, Params, WindowFn};
use crate::sieve::PrimeWindow;
use crate::{Error, Result};

/// Largest modulus accepted by [`brute_force_ap_expectation`].
pub const BRUTE_FORCE_LIMIT: u64 = 5000;

const PAIR_CHUNK: usize = 64;

/// Indices of a window with a positive value.
#[derive(Clone, Debug)]
pub struct SupportIndex {
    indices: Vec<u32>,
    member: Vec<bool>,
}

impl SupportIndex {
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.member.get(i).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn support_of(wf: &WindowFn) -> SupportIndex {
    let member: Vec<bool> = wf.values().iter().map(|&v| v > 0.0).collect();
    let indices = member
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b)
        .map(|(i, _)| i as u32)
        .collect();
    SupportIndex { indices, member }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApReport {
    pub k: u32,
    /// `(1/M²) Σ_{x,r} ∏_{i<k} f(x + i r)`.
    pub expectation: f64,
    pub support_size: u64,
    /// Pairs `(x, r)` with every term in the support, including `r = 0`.
    pub pair_count_total: u64,
    pub pair_count_nondegenerate: u64,
    /// Non-degenerate pairs that leave the support interval as integers.
    pub wrapped_count: u64,
    /// Increasing integer progressions inside the support interval.
    pub integer_ap_count: u64,
    /// `M² / ln^k N`.
    pub density_reference: f64,
}

impl ApReport {
    /// Ordered-pair identities that every report satisfies.
    pub fn is_consistent(&self) -> bool {
        self.pair_count_total == self.pair_count_nondegenerate + self.support_size
            && self.pair_count_nondegenerate == 2 * self.integer_ap_count + self.wrapped_count
    }

    /// `integer_ap_count / (M² / ln^k N)`.
    pub fn density_ratio(&self) -> f64 {
        self.integer_ap_count as f64 / self.density_reference
    }
}

/// Classification of a non-degenerate modular progression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProgressionKind {
    /// Terms `x, x+r', …` are consecutive integers of an AP inside the
    /// support interval.
    Integer { signed_difference: i64 },
    Wrapped,
}

/// Classifies the pair `(x, r)` (window indices) for `params`.
pub fn wrap_analysis(x: usize, r: u64, k: u32, params: &Params) -> ProgressionKind {
    let modulus = params.modulus;
    let r = r % modulus;
    let signed = if r <= modulus / 2 {
        r as i64
    } else {
        r as i64 - modulus as i64
    };
    let lo = (params.support_lo - params.n_start) as i64;
    let hi = (params.support_hi - params.n_start) as i64;
    let genuine = (0..k as i64).all(|i| (lo..=hi).contains(&(x as i64 + i * signed)));
    if genuine {
        ProgressionKind::Integer { signed_difference: signed }
    } else {
        ProgressionKind::Wrapped
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    sum: f64,
    pairs: u64,
    wrapped: u64,
    increasing: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            sum: self.sum + o.sum,
            pairs: self.pairs + o.pairs,
            wrapped: self.wrapped + o.wrapped,
            increasing: self.increasing + o.increasing,
        }
    }
}

/// Visits every non-degenerate `(x, r)` with all `k` terms in the support of
/// `wf`, passing the product of the values. Sharded by the first element;
/// shard results are merged in order.
fn scan_pairs(wf: &WindowFn, k: u32, support: &SupportIndex) -> Tally {
    let m = wf.len() as u64;
    let values = wf.values();
    let params = wf.params();
    let idx = support.indices();
    let shards: Vec<Tally> = idx
        .par_chunks(PAIR_CHUNK)
        .map(|chunk| {
            let mut t = Tally::default();
            for &a in chunk {
                let a = a as u64;
                for &b in idx {
                    let b = b as u64;
                    if a == b {
                        continue;
                    }
                    let r = (b + m - a) % m;
                    let mut prod = values[a as usize] * values[b as usize];
                    let mut pos = b;
                    let mut ok = true;
                    for _ in 2..k {
                        pos += r;
                        if pos >= m {
                            pos -= m;
                        }
                        if !support.contains(pos as usize) {
                            ok = false;
                            break;
                        }
                        prod *= values[pos as usize];
                    }
                    if !ok {
                        continue;
                    }
                    t.sum += prod;
                    t.pairs += 1;
                    match wrap_analysis(a as usize, r, k, params) {
                        ProgressionKind::Integer { signed_difference } if signed_difference > 0 => {
                            t.increasing += 1
                        }
                        ProgressionKind::Integer { .. } => {}
                        ProgressionKind::Wrapped => t.wrapped += 1,
                    }
                }
            }
            t
        })
        .collect();
    shards.into_iter().fold(Tally::default(), Tally::merge)
}

/// Exact k-term progression expectation of `wf`, with pair counts and the
/// integer/wrapped split.
pub fn ap_expectation(wf: &WindowFn, k: u32) -> Result<ApReport> {
    if k < 3 {
        return Err(Error::Domain(format!("k = {k} must be at least 3")));
    }
    let support = support_of(wf);
    let tally = scan_pairs(wf, k, &support);
    let diagonal: f64 = support
        .indices()
        .iter()
        .map(|&a| wf.values()[a as usize].powi(k as i32))
        .sum();
    let params = wf.params();
    let m = params.modulus as f64;
    Ok(ApReport {
        k,
        expectation: (tally.sum + diagonal) / (m * m),
        support_size: support.len() as u64,
        pair_count_total: tally.pairs + support.len() as u64,
        pair_count_nondegenerate: tally.pairs,
        wrapped_count: tally.wrapped,
        integer_ap_count: tally.increasing,
        density_reference: m * m / (params.n_start as f64).ln().powi(k as i32),
    })
}

/// Direct double loop over all `(x, r) ∈ Z_M²`.
pub fn brute_force_ap_expectation(wf: &WindowFn, k: u32) -> Result<f64> {
    let m = wf.len();
    if m as u64 > BRUTE_FORCE_LIMIT {
        return Err(Error::Domain(format!(
            "brute force refused for M = {m} > {BRUTE_FORCE_LIMIT}"
        )));
    }
    let values = wf.values();
    let mut sum = 0.0;
    for x in 0..m {
        for r in 0..m {
            let mut prod = 1.0;
            for i in 0..k as usize {
                prod *= values[(x + i * r) % m];
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
    }
    Ok(sum / (m as f64 * m as f64))
}

/// Counts k-term progressions among the `n` in the support with `Wn+1` prime,
/// via the `f` window.
pub fn prime_ap_report(params: &Params, k: u32, primality: &PrimeWindow) -> Result<ApReport> {
    let f = f_window(params, primality)?;
    ap_expectation(&f, k)
}

/// Writes `x,r,terms…` for every increasing integer progression, `x` and the
/// terms as representatives `n`.
pub fn write_progressions<W: io::Write>(wf: &WindowFn, k: u32, mut out: W) -> io::Result<u64> {
    let params = wf.params();
    let support = support_of(wf);
    let m = wf.len() as u64;
    let mut written = 0;
    for &a in support.indices() {
        for &b in support.indices() {
            if b <= a {
                continue;
            }
            let r = (b - a) as u64;
            let all_in = (2..k as u64).all(|i| support.contains(((a as u64 + i * r) % m) as usize));
            if !all_in {
                continue;
            }
            if let ProgressionKind::Integer { signed_difference } = wrap_analysis(a as usize, r, k, params) {
                let x = params.n_start + a as u64;
                write!(out, "{x},{signed_difference}")?;
                for i in 0..k as u64 {
                    write!(out, ",{}", x + i * signed_difference as u64)?;
                }
                writeln!(out)?;
                written += 1;
            }
        }
    }
    Ok(written)
}
