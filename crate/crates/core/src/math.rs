//! Small numerical utilities shared across the crate: compensated summation,
//! stable log-factorials, and grid generation.

/// Kahan–Babuška compensated accumulator.
///
/// The big reductions in this crate (grid norms, parity sums, Poisson tails)
/// run over up to ~10^5 terms; naive summation would cost ~n·ε relative error,
/// which is visible against the 1e-12 norm-conservation tolerances. Kahan
/// keeps the error at ~2ε independent of term count.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// ln(n!) = Σ_{k=2..n} ln k, compensated.
///
/// All factorial uses in this crate have integer arguments, so a cumulative
/// log sum is both simpler and more accurate than a general log-gamma: the
/// absolute error stays ~1e-13 even at n = 400 (where ln n! ≈ 2000), which is
/// what keeps exp(·) amplitude composites accurate to ~1e-13 relative.
pub fn ln_factorial(n: usize) -> f64 {
    let mut acc = KahanSum::new();
    for k in 2..=n {
        acc.add((k as f64).ln());
    }
    acc.value()
}

/// Table of ln(k!) for k = 0..=max, built in one compensated pass.
///
/// Grid constructors call this once per state so the per-amplitude cost is a
/// table lookup rather than an O(n) loop.
pub fn ln_factorial_table(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = KahanSum::new();
    table.push(0.0);
    for k in 1..=max {
        acc.add((k as f64).ln());
        table.push(acc.value());
    }
    table
}

/// `n` evenly spaced points from `a` to `b` inclusive (`n >= 2`).
///
/// Computed as a weighted average of the endpoints so that the endpoints are
/// exact and a symmetric range like [-π, π] contains an exact 0.0 when `n` is
/// odd — several removable-singularity code paths key off exact zeros.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = i as f64;
            (a * (last - w) + b * w) / last
        })
        .collect()
}

// Reference values keep every digit their generating script printed,
// even where fewer would round-trip.
#[allow(clippy::excessive_precision)]
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        // 1.0 followed by many tiny terms that naive f64 summation drops.
        let tiny = 1e-17;
        let n = 100_000;
        let mut kahan = KahanSum::new();
        kahan.add(1.0);
        let mut naive = 1.0f64;
        for _ in 0..n {
            kahan.add(tiny);
            naive += tiny;
        }
        let exact = 1.0 + tiny * n as f64;
        assert!((kahan.value() - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > 1e-13); // the failure mode Kahan exists for
    }

    #[test]
    fn ln_factorial_small_values_exact() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        let cases = [(2usize, 2.0f64), (5, 120.0), (10, 3_628_800.0)];
        for (n, fact) in cases {
            assert!((ln_factorial(n) - fact.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_factorial_large_argument_accuracy() {
        // ln(400!) from 40-digit arithmetic.
        let reference = 2000.5006979832413891;
        assert!((ln_factorial(400) - reference).abs() < 1e-10);
        let table = ln_factorial_table(400);
        assert_eq!(table.len(), 401);
        assert_eq!(table[400], ln_factorial(400));
    }

    #[test]
    fn linspace_endpoints_and_symmetry() {
        let g = linspace(-std::f64::consts::PI, std::f64::consts::PI, 33);
        assert_eq!(g.len(), 33);
        assert_eq!(g[0], -std::f64::consts::PI);
        assert_eq!(g[32], std::f64::consts::PI);
        assert_eq!(g[16], 0.0); // exact zero at the midpoint of a symmetric odd grid
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
