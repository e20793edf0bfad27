//! Experiment parameters and the window functions over `Z_M`.
//!
//! `Z_M` is represented by the integers `N, N+1, …, N+M−1`; a [`WindowFn`]
//! stores one value per representative, index `i` standing for `n = N+i`.
//! The support interval `[N+εM, N+2εM]` carries the prime density `f` and the
//! two-piece majorant `ν`; outside it `f = 0` and `ν = 1`.

use std::fmt::{self, Write as _};
use std::io;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sieve::{self, FactorTable, PrimeWindow};
use crate::{Error, Result};

/// Largest modulus accepted; a window of this size holds 800 MB of `f64`.
pub const MAX_MODULUS: u64 = 100_000_000;

const MAX_K: u32 = 20;
const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constants exactly as in the construction: `ε = ε_k`, `R = M^{1/(k 2^{k+4})}`.
    Literal,
    /// User-chosen support fraction and truncation exponent.
    Exploratory,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Literal => "literal",
            Mode::Exploratory => "exploratory",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Mode::Literal),
            "exploratory" => Ok(Mode::Exploratory),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Default support fraction in exploratory mode.
pub const DEFAULT_EPS: f64 = 0.1;
/// Default truncation exponent in exploratory mode.
pub const DEFAULT_R_EXPONENT: f64 = 0.1;

/// Unresolved configuration, as supplied by a user.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub n_start: u64,
    pub modulus: u64,
    pub k: u32,
    pub w: u64,
    pub mode: Mode,
    /// Exploratory only; defaults to [`DEFAULT_EPS`].
    pub eps: Option<f64>,
    /// Exploratory only; defaults to [`DEFAULT_R_EXPONENT`].
    pub r_exponent: Option<f64>,
    /// Exploratory only: replaces `[N+εM, N+2εM]` by an explicit interval.
    pub support: Option<(u64, u64)>,
}

impl ParamSpec {
    pub fn exploratory(n_start: u64, modulus: u64, k: u32, w: u64) -> Self {
        Self {
            n_start,
            modulus,
            k,
            w,
            mode: Mode::Exploratory,
            eps: None,
            r_exponent: None,
            support: None,
        }
    }

    pub fn literal(n_start: u64, modulus: u64, k: u32, w: u64) -> Self {
        Self {
            mode: Mode::Literal,
            ..Self::exploratory(n_start, modulus, k, w)
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_r_exponent(mut self, r_exponent: f64) -> Self {
        self.r_exponent = Some(r_exponent);
        self
    }

    pub fn with_support(mut self, lo: u64, hi: u64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    pub fn resolve(&self) -> Result<Params> {
        resolve_params(self)
    }
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n_start: u64,
    #[serde(rename = "M")]
    pub modulus: u64,
    pub k: u32,
    pub w: u64,
    #[serde(rename = "W")]
    pub primorial: u64,
    #[serde(rename = "phi_W")]
    pub totient: u64,
    pub eps: f64,
    pub support_lo: u64,
    pub support_hi: u64,
    #[serde(rename = "R")]
    pub truncation: f64,
    #[serde(rename = "R_exponent")]
    pub r_exponent: f64,
    pub mode: Mode,
    /// Support narrower than two integers (or empty).
    pub degenerate_support: bool,
}

/// `ε_k = 1/(2^k (k+4)!)`.
pub fn literal_eps(k: u32) -> f64 {
    1.0 / literal_eps_denominator(k) as f64
}

fn literal_eps_denominator(k: u32) -> u128 {
    let fact: u128 = (1..=(k as u128 + 4)).product();
    (1u128 << k) * fact
}

/// `1/(k·2^{k+4})`, the exponent with `R = M^{…}` in literal mode.
pub fn literal_r_exponent(k: u32) -> f64 {
    1.0 / (k as f64 * 2f64.powi(k as i32 + 4))
}

/// Validates a [`ParamSpec`] and derives `W`, `φ(W)`, `ε`, `R` and the support.
pub fn resolve_params(spec: &ParamSpec) -> Result<Params> {
    let ParamSpec {
        n_start,
        modulus,
        k,
        w,
        mode,
        ..
    } = *spec;

    if !(3..=MAX_K).contains(&k) {
        return Err(Error::Config(format!("k = {k} outside [3, {MAX_K}]")));
    }
    if !(3..=MAX_MODULUS).contains(&modulus) {
        return Err(Error::Config(format!(
            "M = {modulus} outside [3, {MAX_MODULUS}]"
        )));
    }
    if !sieve::is_prime_by_trial_division(modulus) {
        return Err(Error::Config(format!("M must be prime (got {modulus})")));
    }
    if modulus > n_start {
        return Err(Error::Config(format!(
            "M = {modulus} exceeds N = {n_start}"
        )));
    }
    let pw = sieve::primorial(w)?;
    let top = (pw.value as u128) * ((n_start as u128) + (modulus as u128)) + 1;
    if top >= 1u128 << 63 {
        return Err(Error::Config(format!(
            "W·(N+M)+1 = {top} does not fit below 2^63"
        )));
    }

    let (eps, r_exponent, lo_off, hi_off) = match mode {
        Mode::Literal => {
            if spec.eps.is_some() || spec.r_exponent.is_some() || spec.support.is_some() {
                return Err(Error::Config(
                    "eps, r_exponent and support overrides are exploratory-only".into(),
                ));
            }
            let d = literal_eps_denominator(k);
            let m = modulus as u128;
            let lo = m.div_ceil(d) as u64;
            let hi = (2 * m / d) as u64;
            (literal_eps(k), literal_r_exponent(k), lo, hi)
        }
        Mode::Exploratory => {
            let eps = spec.eps.unwrap_or(DEFAULT_EPS);
            let r_exponent = spec.r_exponent.unwrap_or(DEFAULT_R_EXPONENT);
            if !(eps > 0.0 && 2.0 * eps < 0.5) {
                return Err(Error::Config(format!(
                    "eps = {eps} must satisfy 0 < 2·eps < 1/2"
                )));
            }
            if !(r_exponent > 0.0 && r_exponent < 0.25) {
                return Err(Error::Config(format!(
                    "r_exponent = {r_exponent} must lie in (0, 1/4)"
                )));
            }
            let (lo, hi) = match spec.support {
                Some((lo, hi)) => {
                    if lo > hi || lo < n_start || hi >= n_start + modulus {
                        return Err(Error::Config(format!(
                            "support [{lo}, {hi}] not inside [{n_start}, {})",
                            n_start + modulus
                        )));
                    }
                    (lo - n_start, hi - n_start)
                }
                None => {
                    let m = modulus as f64;
                    ((eps * m).ceil() as u64, (2.0 * eps * m).floor() as u64)
                }
            };
            (eps, r_exponent, lo, hi)
        }
    };

    let truncation = (modulus as f64).powf(r_exponent);
    let width = match spec.support {
        Some(_) => (hi_off + 1).saturating_sub(lo_off) as f64,
        None => eps * modulus as f64,
    };

    Ok(Params {
        n_start,
        modulus,
        k,
        w,
        primorial: pw.value,
        totient: pw.totient,
        eps,
        support_lo: n_start + lo_off,
        support_hi: n_start + hi_off,
        truncation,
        r_exponent,
        mode,
        degenerate_support: width < 2.0 || hi_off < lo_off,
    })
}

impl Params {
    pub fn len(&self) -> usize {
        self.modulus as usize
    }

    /// Window index of the representative `n`, if `N ≤ n < N+M`.
    pub fn index_of(&self, n: u64) -> Option<usize> {
        (n >= self.n_start && n - self.n_start < self.modulus).then(|| (n - self.n_start) as usize)
    }

    /// Window index of the residue class of `residue` (mod M).
    pub fn index_of_residue(&self, residue: u64) -> usize {
        let m = self.modulus;
        ((residue % m + m - self.n_start % m) % m) as usize
    }

    pub fn in_support(&self, n: u64) -> bool {
        (self.support_lo..=self.support_hi).contains(&n)
    }

    /// Support as window indices; empty when degenerate.
    pub fn support_indices(&self) -> RangeInclusive<usize> {
        (self.support_lo - self.n_start) as usize..=(self.support_hi - self.n_start) as usize
    }

    pub fn support_len(&self) -> usize {
        self.support_indices().count()
    }

    /// `φ(W)/W`.
    pub fn w_trick_scale(&self) -> f64 {
        self.totient as f64 / self.primorial as f64
    }

    /// `k^{-1} 2^{-k-5}`, the factor turning `Λ̃` into `f`.
    pub fn f_scale(&self) -> f64 {
        1.0 / (self.k as f64 * 2f64.powi(self.k as i32 + 5))
    }

    pub fn log_r(&self) -> f64 {
        self.truncation.ln()
    }

    /// `W·n + 1`.
    pub fn tricked(&self, n: u64) -> u64 {
        self.primorial * n + 1
    }

    /// Factor table limit needed to sieve `Wn+1` over the whole window and to
    /// enumerate divisors up to `R`.
    pub fn required_table_limit(&self) -> u64 {
        let top = self.tricked(self.n_start + self.modulus - 1);
        (top.isqrt() + 1).max(self.truncation.floor() as u64).max(2)
    }

    /// Warnings attached to every report built from these parameters.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.degenerate_support {
            out.push(format!(
                "degenerate-support: eps·M = {:.4} leaves support [{}, {}]",
                self.eps * self.modulus as f64,
                self.support_lo,
                self.support_hi
            ));
        }
        if self.truncation < 2.0 {
            out.push(format!(
                "trivial-truncation: R = {:.6} < 2, so Λ_R ≡ ln R",
                self.truncation
            ));
        }
        out
    }

    /// Compact `key=value` listing used in CSV headers.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "N={} M={} k={} w={} W={} phi_W={} eps={} support_lo={} support_hi={} R={} R_exponent={} mode={}",
            self.n_start,
            self.modulus,
            self.k,
            self.w,
            self.primorial,
            self.totient,
            self.eps,
            self.support_lo,
            self.support_hi,
            self.truncation,
            self.r_exponent,
            self.mode
        );
        s
    }
}

/// One real value per representative of `Z_M`.
///
/// `f` and `ν` are non-negative; the raw divisor-sum window `Λ_R(Wn+1)` may
/// take negative values.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowFn {
    params: Params,
    values: Vec<f64>,
}

impl WindowFn {
    pub fn new(params: Params, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.len() {
            return Err(Error::Domain(format!(
                "window has {} values, expected M = {}",
                values.len(),
                params.modulus
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Self { params, values })
    }

    pub fn constant(params: Params, value: f64) -> Self {
        let values = vec![value; params.len()];
        Self { params, values }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the representative `n`.
    pub fn at(&self, n: u64) -> Option<f64> {
        self.params.index_of(n).map(|i| self.values[i])
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes `# params: …` followed by one `n,value` line per representative.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# params: {}", self.params.to_kv_string())?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.params.n_start + i as u64, v)?;
        }
        Ok(())
    }
}

/// Primality of `Wn+1` for every `n` in the support.
pub fn support_primality(params: &Params, table: &FactorTable) -> Result<PrimeWindow> {
    if params.support_hi < params.support_lo {
        return sieve::primes_in_range(2, 2, table);
    }
    sieve::primes_in_range(
        params.tricked(params.support_lo),
        params.tricked(params.support_hi),
        table,
    )
}

/// Primality of `Wn+1` for every representative `N ≤ n < N+M`.
pub fn window_primality(params: &Params, table: &FactorTable) -> Result<PrimeWindow> {
    sieve::primes_in_range(
        params.tricked(params.n_start),
        params.tricked(params.n_start + params.modulus - 1),
        table,
    )
}

/// `Λ̃(n) = φ(W)/W · ln(Wn+1)` when `Wn+1` is prime, else 0.
pub fn w_tricked_lambda(n: u64, params: &Params, primality: &PrimeWindow) -> Result<f64> {
    if params.index_of(n).is_none() {
        return Err(Error::Domain(format!(
            "n = {n} outside [{}, {})",
            params.n_start,
            params.n_start + params.modulus
        )));
    }
    let q = params.tricked(n);
    match primality.is_prime(q) {
        Some(true) => Ok(params.w_trick_scale() * (q as f64).ln()),
        Some(false) => Ok(0.0),
        None => Err(Error::Domain(format!(
            "primality window [{}, {}] does not cover W·n+1 = {q}",
            primality.lo(),
            primality.hi()
        ))),
    }
}

/// `f(n) = k^{-1} 2^{-k-5} Λ̃(n)` on the support, 0 elsewhere.
pub fn f_window(params: &Params, primality: &PrimeWindow) -> Result<WindowFn> {
    let mut values = vec![0.0; params.len()];
    let scale = params.f_scale();
    if params.support_lo <= params.support_hi {
        for i in params.support_indices() {
            let n = params.n_start + i as u64;
            values[i] = scale * w_tricked_lambda(n, params, primality)?;
        }
    }
    WindowFn::new(params.clone(), values)
}

/// Visits every squarefree `d ≤ bound` built from `primes` (ascending), with
/// its Möbius sign.
pub fn for_each_squarefree(primes: &[u64], bound: u64, mut visit: impl FnMut(u64, i8)) {
    fn rec(primes: &[u64], bound: u64, d: u64, mu: i8, visit: &mut impl FnMut(u64, i8)) {
        visit(d, mu);
        for (j, &p) in primes.iter().enumerate() {
            match d.checked_mul(p) {
                Some(e) if e <= bound => rec(&primes[j + 1..], bound, e, -mu, visit),
                _ => break,
            }
        }
    }
    if bound >= 1 {
        rec(primes, bound, 1, 1, &mut visit);
    }
}

/// `Λ_R(n) = Σ_{d | n, d ≤ R} μ(d) ln(R/d)`, evaluated from the prime
/// factorization of `n`.
///
/// # Panics
///
/// If `n = 0`, or the table cannot supply the primes of `n` up to `R`.
pub fn lambda_r_direct(n: u64, truncation: f64, table: &FactorTable) -> f64 {
    assert!(n >= 1, "Λ_R is defined for n ≥ 1");
    let bound = truncation.floor() as u64;
    let primes = table.small_prime_factors(n, bound);
    let mut acc = 0.0;
    for_each_squarefree(&primes, bound, |d, mu| {
        acc += mu as f64 * (truncation / d as f64).ln();
    });
    acc
}

/// Divisors taking part in the batched sieve: squarefree `d ≤ R` coprime to
/// `W`, the residue class of `n` with `d | Wn+1`, and the weight `μ(d) ln(R/d)`.
fn sieving_divisors(primorial: u64, truncation: f64, table: &FactorTable) -> Result<Vec<(u64, u64, f64)>> {
    let bound = truncation.floor() as u64;
    if bound > table.limit() {
        return Err(Error::Config(format!(
            "factor table limit {} below R = {truncation}",
            table.limit()
        )));
    }
    // p | W never divides Wn+1, so only primes coprime to W generate divisors.
    let primes: Vec<u64> = table
        .primes_up_to(bound)
        .iter()
        .map(|&p| p as u64)
        .filter(|&p| primorial % p != 0)
        .collect();
    let mut out = Vec::new();
    let mut err = None;
    for_each_squarefree(&primes, bound, |d, mu| {
        let class = if d == 1 {
            0
        } else {
            match sieve::mod_inverse(primorial % d, d) {
                Ok(inv) => (d - inv) % d,
                Err(e) => {
                    err.get_or_insert(e);
                    0
                }
            }
        };
        out.push((d, class, mu as f64 * (truncation / d as f64).ln()));
    });
    match err {
        Some(e) => Err(e),
        None => {
            out.sort_unstable_by_key(|&(d, _, _)| d);
            Ok(out)
        }
    }
}

/// Batched `Λ_R(W·n + 1)` for `n = start, …, start+len−1`.
///
/// Each divisor `d` adds its weight along the single residue class
/// `n ≡ −W⁻¹ (mod d)`. The index range is processed in fixed chunks, so the
/// output is identical for any thread count.
pub fn truncated_divisor_window(
    start: u64,
    len: usize,
    primorial: u64,
    truncation: f64,
    table: &FactorTable,
) -> Result<Vec<f64>> {
    let divisors = sieving_divisors(primorial, truncation, table)?;
    let mut values = vec![0.0; len];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let chunk_start = start + (c * CHUNK) as u64;
            for &(d, class, weight) in &divisors {
                let first = ((class + d - chunk_start % d) % d) as usize;
                for v in chunk.iter_mut().skip(first).step_by(d as usize) {
                    *v += weight;
                }
            }
        });
    Ok(values)
}

/// `Λ_R(Wn+1)` for every representative `n`.
pub fn lambda_r_window(params: &Params, table: &FactorTable) -> Result<WindowFn> {
    let values = truncated_divisor_window(
        params.n_start,
        params.len(),
        params.primorial,
        params.truncation,
        table,
    )?;
    WindowFn::new(params.clone(), values)
}

/// The majorant: `ν(n) = φ(W)/W · Λ_R(Wn+1)² / ln R` on the support, 1 elsewhere.
pub fn nu_window(params: &Params, table: &FactorTable) -> Result<WindowFn> {
    if params.truncation <= 1.0 {
        return Err(Error::Config(format!(
            "R = {} must exceed 1 so that ln R > 0",
            params.truncation
        )));
    }
    let mut values = vec![1.0; params.len()];
    if params.support_lo <= params.support_hi {
        let support = params.support_indices();
        let lo = *support.start();
        let lambdas = truncated_divisor_window(
            params.support_lo,
            params.support_len(),
            params.primorial,
            params.truncation,
            table,
        )?;
        let scale = params.w_trick_scale() / params.log_r();
        for (v, l) in values[lo..].iter_mut().zip(&lambdas) {
            *v = scale * l * l;
        }
    }
    WindowFn::new(params.clone(), values)
}
