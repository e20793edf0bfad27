//! Number-theoretic substrate.
//!
//! A linear (smallest-prime-factor) sieve yields primality, the Möbius
//! function and factorizations from a single pass. Primality of large
//! integers, such as `Wn+1` across a window, comes from a segmented sieve of
//! Eratosthenes driven by the base primes of a [`FactorTable`].

use rayon::prelude::*;

use crate::{BitSet, Error, Result};

/// Largest table the sieve will allocate.
pub const MAX_TABLE_LIMIT: u64 = 100_000_000;

const SEGMENT_LEN: usize = 1 << 18;

/// Smallest prime factors, Möbius values and primality for `1..=limit`.
#[derive(Clone, Debug)]
pub struct FactorTable {
    limit: u64,
    spf: Vec<u32>,
    mobius: Vec<i8>,
    prime_flags: BitSet,
    primes: Vec<u32>,
}

/// Runs the linear sieve up to `limit`.
pub fn build_factor_table(limit: u64) -> Result<FactorTable> {
    if !(2..=MAX_TABLE_LIMIT).contains(&limit) {
        return Err(Error::Config(format!(
            "factor table limit {limit} outside [2, {MAX_TABLE_LIMIT}]"
        )));
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    let mut mobius = vec![0i8; n + 1];
    let mut prime_flags = BitSet::new(n + 1);
    let mut primes: Vec<u32> = Vec::with_capacity(approx_prime_count(limit));
    mobius[1] = 1;

    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            mobius[i] = -1;
            prime_flags.set(i);
            primes.push(i as u32);
        }
        let si = spf[i];
        let mi = mobius[i];
        for &p in &primes {
            let j = i * p as usize;
            if p > si || j > n {
                break;
            }
            spf[j] = p;
            mobius[j] = if p == si { 0 } else { -mi };
        }
    }

    Ok(FactorTable {
        limit,
        spf,
        mobius,
        prime_flags,
        primes,
    })
}

fn approx_prime_count(limit: u64) -> usize {
    let x = limit as f64;
    (1.3 * x / x.ln().max(1.0)) as usize + 16
}

impl FactorTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Least prime dividing `n`, for `2 ≤ n ≤ limit`.
    pub fn spf(&self, n: u64) -> u64 {
        assert!((2..=self.limit).contains(&n), "spf({n}) outside table");
        self.spf[n as usize] as u64
    }

    pub fn mobius(&self, n: u64) -> i8 {
        assert!((1..=self.limit).contains(&n), "mobius({n}) outside table");
        self.mobius[n as usize]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n <= self.limit && self.prime_flags.get(n as usize)
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn primes_up_to(&self, bound: u64) -> &[u32] {
        let end = self.primes.partition_point(|&p| (p as u64) <= bound);
        &self.primes[..end]
    }

    pub fn prime_count(&self) -> usize {
        self.primes.len()
    }

    /// Distinct prime factors of `n`, ascending.
    ///
    /// Uses the spf chain inside the table and trial division by the table's
    /// primes beyond it; the latter needs `limit² ≥ n`.
    pub fn distinct_prime_factors(&self, n: u64) -> Result<Vec<u64>> {
        if n == 0 {
            return Err(Error::Domain("0 has no factorization".into()));
        }
        let mut out = Vec::new();
        if n <= self.limit {
            let mut x = n;
            while x > 1 {
                let p = self.spf[x as usize] as u64;
                out.push(p);
                while x % p == 0 {
                    x /= p;
                }
            }
            return Ok(out);
        }
        if (self.limit as u128) * (self.limit as u128) < n as u128 {
            return Err(Error::Config(format!(
                "factor table limit {} too small to factor {n}",
                self.limit
            )));
        }
        let mut x = n;
        for &p in &self.primes {
            let p = p as u64;
            if p * p > x {
                break;
            }
            if x % p == 0 {
                out.push(p);
                while x % p == 0 {
                    x /= p;
                }
            }
        }
        if x > 1 {
            out.push(x);
        }
        Ok(out)
    }

    /// Distinct prime factors of `n` that do not exceed `bound`.
    ///
    /// Only primes up to `min(bound, √n)` are trial-divided when `n` lies
    /// beyond the table, so the table must reach that far.
    pub fn small_prime_factors(&self, n: u64, bound: u64) -> Vec<u64> {
        assert!(n >= 1);
        if n <= self.limit {
            let mut out = self.distinct_prime_factors(n).expect("inside table");
            out.retain(|&p| p <= bound);
            return out;
        }
        let cap = bound.min(n.isqrt());
        assert!(
            cap <= self.limit,
            "factor table limit {} below trial bound {cap}",
            self.limit
        );
        let mut out = Vec::new();
        let mut x = n;
        for &p in self.primes_up_to(cap) {
            let p = p as u64;
            if x % p == 0 {
                out.push(p);
                while x % p == 0 {
                    x /= p;
                }
            }
        }
        // Whatever remains has no prime factor ≤ cap; it is a single prime
        // exactly when it could still be ≤ bound.
        if x > 1 && x <= bound {
            out.push(x);
        }
        out
    }
}

/// Exact primality flags for the integers `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeWindow {
    lo: u64,
    hi: u64,
    flags: BitSet,
}

impl PrimeWindow {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn covers(&self, n: u64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    /// `None` when `n` lies outside the window.
    pub fn is_prime(&self, n: u64) -> Option<bool> {
        self.covers(n).then(|| self.flags.get((n - self.lo) as usize))
    }

    pub fn count(&self) -> usize {
        self.flags.count_ones()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.flags.iter_ones().map(move |i| self.lo + i as u64)
    }
}

/// Segmented sieve of `lo..=hi` using the base primes of `base`.
///
/// Segments are sieved in parallel and concatenated; the result does not
/// depend on the number of worker threads.
pub fn primes_in_range(lo: u64, hi: u64, base: &FactorTable) -> Result<PrimeWindow> {
    if lo < 2 || hi < lo {
        return Err(Error::Domain(format!("invalid range [{lo}, {hi}]")));
    }
    if (base.limit as u128) * (base.limit as u128) < hi as u128 {
        return Err(Error::Config(format!(
            "base table limit {} too small for hi = {hi}",
            base.limit
        )));
    }
    let len = (hi - lo + 1) as usize;
    let sieving_primes = base.primes_up_to(hi.isqrt());
    let segments = len.div_ceil(SEGMENT_LEN);

    let words: Vec<u64> = (0..segments)
        .into_par_iter()
        .flat_map_iter(|s| {
            let seg_lo = lo + (s * SEGMENT_LEN) as u64;
            let seg_len = SEGMENT_LEN.min(len - s * SEGMENT_LEN);
            sieve_segment(seg_lo, seg_len, sieving_primes)
        })
        .collect();

    Ok(PrimeWindow {
        lo,
        hi,
        flags: BitSet::from_words(words, len),
    })
}

fn sieve_segment(seg_lo: u64, seg_len: usize, primes: &[u32]) -> Vec<u64> {
    let mut composite = vec![false; seg_len];
    let seg_hi = seg_lo + seg_len as u64 - 1;
    for &p in primes {
        let p = p as u64;
        if p * p > seg_hi {
            break;
        }
        let first = (p * p).max(seg_lo.div_ceil(p) * p);
        let mut m = first;
        while m <= seg_hi {
            composite[(m - seg_lo) as usize] = true;
            m += p;
        }
    }
    let mut words = vec![0u64; seg_len.div_ceil(64)];
    for (i, &c) in composite.iter().enumerate() {
        if !c && seg_lo + i as u64 >= 2 {
            words[i >> 6] |= 1 << (i & 63);
        }
    }
    words
}

/// `W = ∏_{p ≤ w} p` together with Euler's `φ(W) = ∏ (p − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Primorial {
    pub value: u64,
    pub totient: u64,
}

pub fn primorial(w: u64) -> Result<Primorial> {
    if !(2..=50).contains(&w) {
        return Err(Error::Config(format!("w = {w} outside [2, 50]")));
    }
    let (mut value, mut totient) = (1u64, 1u64);
    for p in (2..=w).filter(|&p| is_prime_by_trial_division(p)) {
        value *= p;
        totient *= p - 1;
    }
    Ok(Primorial { value, totient })
}

/// Inverse of `a` modulo `modulus` via the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::Domain(format!("modulus {modulus} < 2")));
    }
    let a = a % modulus;
    if a == 0 {
        return Err(Error::Domain(format!("0 has no inverse modulo {modulus}")));
    }
    let (mut r0, mut r1) = (modulus as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(Error::Domain(format!(
            "{a} is not invertible modulo {modulus}"
        )));
    }
    Ok(t0.rem_euclid(modulus as i128) as u64)
}

/// Deterministic primality by trial division over `6j ± 1`.
pub fn is_prime_by_trial_division(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_spf(n: u64) -> u64 {
        (2..=n).find(|d| n % d == 0).unwrap()
    }

    fn trial_mobius(mut n: u64) -> i8 {
        let mut sign = 1i8;
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                n /= d;
                if n % d == 0 {
                    return 0;
                }
                sign = -sign;
            }
            d += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }

    #[test]
    fn small_table_values() {
        let t = build_factor_table(10).unwrap();
        assert_eq!(t.mobius(1), 1);
        assert_eq!(t.mobius(2), -1);
        assert_eq!(t.mobius(4), 0);
        assert_eq!(t.mobius(6), 1);
        assert_eq!(t.spf(9), 3);
        assert_eq!(t.spf(7), 7);
        assert!(!t.is_prime(1));
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn table_matches_trial_division() {
        let t = build_factor_table(5000).unwrap();
        for n in 2..=5000u64 {
            assert_eq!(t.spf(n), trial_spf(n), "spf({n})");
            assert_eq!(t.mobius(n), trial_mobius(n), "mu({n})");
            assert_eq!(t.is_prime(n), trial_spf(n) == n);
        }
    }

    #[test]
    fn mobius_sums_vanish_off_one() {
        let t = build_factor_table(3000).unwrap();
        for n in 1..=3000u64 {
            let s: i32 = (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| t.mobius(d) as i32)
                .sum();
            assert_eq!(s, (n == 1) as i32, "n = {n}");
        }
    }

    #[test]
    fn limit_guard() {
        assert!(matches!(build_factor_table(1), Err(Error::Config(_))));
        assert!(build_factor_table(MAX_TABLE_LIMIT + 1).is_err());
    }

    #[test]
    fn windows_small() {
        let t = build_factor_table(100).unwrap();
        let w = primes_in_range(10, 20, &t).unwrap();
        assert_eq!(w.primes().collect::<Vec<_>>(), vec![11, 13, 17, 19]);
        let w = primes_in_range(2, 2, &t).unwrap();
        assert_eq!(w.primes().collect::<Vec<_>>(), vec![2]);
        assert_eq!(w.is_prime(3), None);
    }

    #[test]
    fn window_after_one_million() {
        let t = build_factor_table(2000).unwrap();
        let w = primes_in_range(1_000_000, 1_000_100, &t).unwrap();
        assert_eq!(
            w.primes().collect::<Vec<_>>(),
            vec![1000003, 1000033, 1000037, 1000039, 1000081, 1000099]
        );
    }

    #[test]
    fn window_spanning_segments() {
        let t = build_factor_table(1000).unwrap();
        let lo = 3;
        let hi = 3 * SEGMENT_LEN as u64 + 17;
        let w = primes_in_range(lo, hi, &t).unwrap();
        let table = build_factor_table(hi).unwrap();
        let expect: Vec<u64> = table.primes().iter().map(|&p| p as u64).filter(|&p| p >= lo).collect();
        assert_eq!(w.primes().collect::<Vec<_>>(), expect);
    }

    #[test]
    fn window_needs_large_enough_base() {
        let t = build_factor_table(10).unwrap();
        assert!(matches!(primes_in_range(50, 200, &t), Err(Error::Config(_))));
        assert!(primes_in_range(20, 10, &t).is_err());
    }

    #[test]
    fn primorial_values() {
        assert_eq!(primorial(2).unwrap(), Primorial { value: 2, totient: 1 });
        assert_eq!(primorial(5).unwrap(), Primorial { value: 30, totient: 8 });
        assert_eq!(primorial(7).unwrap(), Primorial { value: 210, totient: 48 });
        assert_eq!(primorial(50).unwrap().value, 614_889_782_588_491_410);
        assert!(primorial(1).is_err());
        assert!(primorial(51).is_err());
    }

    #[test]
    fn primorial_totient_counts_coprime_residues() {
        for w in [2, 3, 5, 7, 11] {
            let p = primorial(w).unwrap();
            let coprime = (1..=p.value).filter(|&a| gcd(a, p.value) == 1).count() as u64;
            assert_eq!(coprime, p.totient, "w = {w}");
        }
    }

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    #[test]
    fn inverses() {
        assert_eq!(mod_inverse(2, 7).unwrap(), 4);
        assert_eq!(mod_inverse(1, 1_000_003).unwrap(), 1);
        let brute = (1..13).find(|x| 10 * x % 13 == 1).unwrap();
        assert_eq!(mod_inverse(10, 13).unwrap(), brute);
        assert!(matches!(mod_inverse(0, 7), Err(Error::Domain(_))));
        assert!(matches!(mod_inverse(14, 7), Err(Error::Domain(_))));
        assert!(mod_inverse(4, 8).is_err());
    }

    #[test]
    fn factors_beyond_table() {
        let t = build_factor_table(5000).unwrap();
        assert_eq!(t.distinct_prime_factors(2 * 2 * 3 * 997 * 991).unwrap(), vec![2, 3, 991, 997]);
        assert_eq!(t.distinct_prime_factors(999_983).unwrap(), vec![999_983]);
        assert_eq!(t.distinct_prime_factors(24_999_983).unwrap().len(), 1);
        assert!(t.distinct_prime_factors(1_000_003 * 1_000_033).is_err());
        assert!(t.distinct_prime_factors(0).is_err());
        assert_eq!(t.small_prime_factors(30 * 1_000_003, 5), vec![2, 3, 5]);
        assert_eq!(t.small_prime_factors(7 * 1_000_003, 5), Vec::<u64>::new());
        // 91 = 7·13 beyond a tiny table: cofactor 13 is reported since 13 ≤ bound.
        let tiny = build_factor_table(10).unwrap();
        assert_eq!(tiny.small_prime_factors(91, 20), vec![7, 13]);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(a in 1u64..1_000_003) {
            let m = 1_000_003u64;
            let x = mod_inverse(a, m).unwrap();
            prop_assert_eq!((a as u128 * x as u128 % m as u128) as u64, 1);
        }

        #[test]
        fn window_agrees_with_trial_division(lo in 2u64..50_000_000, span in 0u64..2000) {
            let t = build_factor_table(8000).unwrap();
            let w = primes_in_range(lo, lo + span, &t).unwrap();
            for n in (lo..=lo + span).step_by(7) {
                prop_assert_eq!(w.is_prime(n), Some(is_prime_by_trial_division(n)));
            }
        }
    }
}
