//! Affine forms `ψ_i(x) = Σ_j L_ij x_j + b_i` over `Z_M` with rational
//! coefficients, and the expectation `E(∏_i ν(ψ_i(x)) | x ∈ Z_M^t)`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use super::sampling::{exhaustive_mean, sample_mean, Estimate, EXHAUSTIVE_LIMIT};
use crate::measures::WindowFn;
use crate::sieve::mod_inverse;
use crate::{Error, Result};

/// Upper bound on the number of variables a system may use.
pub const MAX_VARIABLES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormViolation {
    #[error("system has no forms")]
    Empty,
    #[error("row {row} has {len} coefficients, expected {t}")]
    Ragged { row: usize, len: usize, t: usize },
    #[error("zero tuple in row {0}")]
    ZeroTuple(usize),
    #[error("rows {0} and {1} are proportional")]
    Proportional(usize, usize),
    #[error("coefficient {value} at ({row}, {col}) exceeds bound {bound}")]
    CoefficientBound {
        row: usize,
        col: usize,
        value: String,
        bound: i64,
    },
    #[error("m = {m} exceeds m0 = {m0}")]
    TooManyForms { m: usize, m0: usize },
    #[error("t = {t} exceeds t0 = {t0}")]
    TooManyVariables { t: usize, t0: usize },
    #[error("modulus {modulus} must exceed L0 = {bound}")]
    ModulusTooSmall { modulus: u64, bound: i64 },
    #[error("denominator {den} is not invertible modulo {modulus}")]
    NotInvertible { den: i64, modulus: u64 },
    #[error("zero denominator")]
    ZeroDenominator,
}

/// A rational number in lowest terms with positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self, FormViolation> {
        if den == 0 {
            return Err(FormViolation::ZeroDenominator);
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Ok(Self {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    /// `num · den⁻¹ (mod modulus)`.
    pub fn embed(self, modulus: u64) -> Result<u64, FormViolation> {
        let m = modulus as i128;
        let den = (self.den as i128).rem_euclid(m) as u64;
        let inv = mod_inverse(den, modulus).map_err(|_| FormViolation::NotInvertible {
            den: self.den,
            modulus,
        })?;
        let num = (self.num as i128).rem_euclid(m) as u128;
        Ok((num * inv as u128 % modulus as u128) as u64)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The `(m0, t0, L0)` level of a linear-forms condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FormLevel {
    pub m0: usize,
    pub t0: usize,
    pub l0: i64,
}

impl FormLevel {
    /// `(k·2^{k−1}, 3k−4, k)`, the level the majorant must satisfy for k-term
    /// progressions.
    pub fn for_k(k: u32) -> Self {
        Self {
            m0: k as usize * (1usize << (k - 1)),
            t0: 3 * k as usize - 4,
            l0: k as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFormSystem {
    coeffs: Vec<Vec<Rational>>,
    offsets: Vec<u64>,
    modulus: u64,
    embedded: Vec<Vec<u64>>,
}

impl LinearFormSystem {
    /// Builds the system and embeds its coefficients into `Z_M`.
    ///
    /// Only shape and invertibility are checked here; the structural
    /// conditions live in [`validate_form_system`].
    pub fn new(coeffs: Vec<Vec<Rational>>, offsets: Vec<i64>, modulus: u64) -> Result<Self, FormViolation> {
        let t = coeffs.first().map(Vec::len).ok_or(FormViolation::Empty)?;
        if let Some((row, r)) = coeffs.iter().enumerate().find(|(_, r)| r.len() != t) {
            return Err(FormViolation::Ragged { row, len: r.len(), t });
        }
        if t == 0 || offsets.len() != coeffs.len() {
            return Err(FormViolation::Ragged {
                row: 0,
                len: offsets.len(),
                t: coeffs.len(),
            });
        }
        if t > MAX_VARIABLES {
            return Err(FormViolation::TooManyVariables { t, t0: MAX_VARIABLES });
        }
        let embedded = coeffs
            .iter()
            .map(|row| row.iter().map(|c| c.embed(modulus)).collect())
            .collect::<Result<Vec<Vec<u64>>, _>>()?;
        let offsets = offsets
            .iter()
            .map(|&b| (b as i128).rem_euclid(modulus as i128) as u64)
            .collect();
        Ok(Self {
            coeffs,
            offsets,
            modulus,
            embedded,
        })
    }

    /// Integer-coefficient convenience constructor.
    pub fn from_integers(coeffs: &[Vec<i64>], offsets: Vec<i64>, modulus: u64) -> Result<Self, FormViolation> {
        let coeffs = coeffs
            .iter()
            .map(|row| row.iter().map(|&c| Rational::integer(c)).collect())
            .collect();
        Self::new(coeffs, offsets, modulus)
    }

    /// `ψ_i(x, r) = x + (i−1) r` for `i = 1..=k`.
    pub fn arithmetic_progression(k: u32, modulus: u64) -> Result<Self, FormViolation> {
        let rows: Vec<Vec<i64>> = (0..k as i64).map(|i| vec![1, i]).collect();
        Self::from_integers(&rows, vec![0; k as usize], modulus)
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn t(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[Vec<Rational>] {
        &self.coeffs
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn embedded(&self) -> &[Vec<u64>] {
        &self.embedded
    }

    /// `ψ_i(x) mod M` for residues `x`.
    pub fn eval(&self, i: usize, x: &[u64]) -> u64 {
        let m = self.modulus as u128;
        let mut acc = self.offsets[i] as u128;
        for (&e, &xj) in self.embedded[i].iter().zip(x) {
            acc = (acc + e as u128 * xj as u128) % m;
        }
        acc as u64
    }
}

/// Scales each rational row to integers by the lcm of its denominators.
fn integer_rows(coeffs: &[Vec<Rational>]) -> Vec<Vec<i128>> {
    coeffs
        .iter()
        .map(|row| {
            let l = row
                .iter()
                .fold(1u64, |l, c| l / gcd(l, c.den as u64) * c.den as u64) as i128;
            row.iter().map(|c| c.num as i128 * (l / c.den as i128)).collect()
        })
        .collect()
}

/// Zero rows and pairwise proportional rows, via exact 2×2 minors.
pub(crate) fn structural_violation(rows: &[Vec<i128>]) -> Option<FormViolation> {
    if let Some(i) = rows.iter().position(|r| r.iter().all(|&c| c == 0)) {
        return Some(FormViolation::ZeroTuple(i));
    }
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            let (ra, rb) = (&rows[a], &rows[b]);
            let t = ra.len();
            let proportional = (0..t).all(|j| (j + 1..t).all(|l| ra[j] * rb[l] == ra[l] * rb[j]));
            if proportional {
                return Some(FormViolation::Proportional(a, b));
            }
        }
    }
    None
}

/// Checks the structural requirements of an `(m0, t0, L0)` linear-forms
/// condition: size limits, coefficient heights, non-zero and pairwise
/// non-proportional coefficient tuples, and `M > L0`.
pub fn validate_form_system(sys: &LinearFormSystem, level: FormLevel) -> Result<(), FormViolation> {
    if sys.m() > level.m0 {
        return Err(FormViolation::TooManyForms { m: sys.m(), m0: level.m0 });
    }
    if sys.t() > level.t0 {
        return Err(FormViolation::TooManyVariables { t: sys.t(), t0: level.t0 });
    }
    if sys.modulus as i128 <= level.l0 as i128 {
        return Err(FormViolation::ModulusTooSmall {
            modulus: sys.modulus,
            bound: level.l0,
        });
    }
    for (row, r) in sys.coeffs.iter().enumerate() {
        for (col, c) in r.iter().enumerate() {
            if c.num.abs() > level.l0 || c.den > level.l0 {
                return Err(FormViolation::CoefficientBound {
                    row,
                    col,
                    value: format!("{}/{}", c.num, c.den),
                    bound: level.l0,
                });
            }
        }
    }
    match structural_violation(&integer_rows(&sys.coeffs)) {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

fn check_inputs(nu: &WindowFn, sys: &LinearFormSystem) -> Result<()> {
    if sys.modulus != nu.params().modulus {
        return Err(Error::Domain(format!(
            "system modulus {} differs from window modulus {}",
            sys.modulus,
            nu.params().modulus
        )));
    }
    Ok(())
}

fn product_at(nu: &WindowFn, sys: &LinearFormSystem, x: &[u64]) -> f64 {
    let params = nu.params();
    let values = nu.values();
    (0..sys.m())
        .map(|i| values[params.index_of_residue(sys.eval(i, x))])
        .product()
}

/// Exhaustive when `M^t ≤` [`EXHAUSTIVE_LIMIT`], otherwise `samples` uniform
/// draws from `Z_M^t`.
pub fn lf_expectation(nu: &WindowFn, sys: &LinearFormSystem, samples: u64, seed: u64) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let m = sys.modulus as u128;
    let total = m.checked_pow(sys.t() as u32).unwrap_or(u128::MAX);
    if total <= EXHAUSTIVE_LIMIT as u128 {
        lf_expectation_exhaustive(nu, sys, seed)
    } else {
        lf_expectation_sampled(nu, sys, samples, seed)
    }
}

/// Monte-Carlo estimate regardless of instance size.
pub fn lf_expectation_sampled(nu: &WindowFn, sys: &LinearFormSystem, samples: u64, seed: u64) -> Result<Estimate> {
    check_inputs(nu, sys)?;
    if samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let t = sys.t();
    let m = sys.modulus;
    Ok(sample_mean(samples, seed, |rng| {
        let mut x = [0u64; MAX_VARIABLES];
        for xj in x.iter_mut().take(t) {
            *xj = rng.gen_range(0..m);
        }
        product_at(nu, sys, &x[..t])
    }))
}

/// Exact average over all of `Z_M^t`.
pub fn lf_expectation_exhaustive(nu: &WindowFn, sys: &LinearFormSystem, seed: u64) -> Result<Estimate> {
    check_inputs(nu, sys)?;
    let t = sys.t();
    let m = sys.modulus;
    let total = (m as u128)
        .checked_pow(t as u32)
        .filter(|&n| n <= u64::MAX as u128)
        .ok_or_else(|| Error::Domain(format!("M^t = {m}^{t} too large to enumerate")))? as u64;
    Ok(exhaustive_mean(total, seed, |mut idx| {
        let mut x = [0u64; MAX_VARIABLES];
        for xj in x.iter_mut().take(t) {
            *xj = idx % m;
            idx /= m;
        }
        product_at(nu, sys, &x[..t])
    }))
}
