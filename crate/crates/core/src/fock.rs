//! Truncated two-mode Fock space: coherent amplitude grids, cutoff selection,
//! and inner products.
//!
//! A pure state of modes A and B lives on the grid c_{n,m} = ⟨n,m|ψ⟩ with
//! 0 ≤ n,m ≤ cutoff. Product coherent states |α_a, α_b⟩ have
//!
//! ```text
//! c_{n,m} = exp(-(|α_a|² + |α_b|²)/2) · α_a^n α_b^m / √(n! m!)
//! ```
//!
//! Amplitudes are evaluated in the log domain so that grids stay accurate for
//! mean photon numbers of several hundred, where α^n/√n! overflows long before
//! the amplitude itself becomes interesting.

use num_complex::Complex64;
use thiserror::Error;

use crate::math::{ln_factorial_table, KahanSum};

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("mean photon number must be finite and >= 0, got {0}")]
    InvalidNbar(f64),
    #[error("tail tolerance must lie strictly between 0 and 1, got {0}")]
    InvalidTailTol(f64),
    #[error("phase must be finite, got {0}")]
    InvalidPhi(f64),
    #[error("coherent amplitude must be finite, got {0}")]
    NonFiniteAmplitude(Complex64),
    #[error("amplitude grid has {got} entries, expected {want} for cutoff {cutoff}")]
    GridShape {
        cutoff: usize,
        want: usize,
        got: usize,
    },
    #[error("cutoff mismatch between states: {0} vs {1}")]
    CutoffMismatch(usize, usize),
}

/// Smallest per-mode cutoff K such that a Poisson(n̄/2) photon-number
/// distribution has upper-tail mass beyond K strictly below `tail_tol`.
///
/// n̄/2 is the per-mode mean of the balanced two-mode states this crate
/// works with; callers holding all power in one mode (mean n̄ in a single
/// mode) should ask for `choose_cutoff(2·n̄, ·)`.
///
/// The tail is accumulated right-to-left (ascending magnitudes) from a point
/// ~20 standard deviations past the mean, so the comparison against
/// `tail_tol` is reliable down to the smallest tolerances of interest.
pub fn choose_cutoff(nbar: f64, tail_tol: f64) -> Result<usize, FockError> {
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(FockError::InvalidNbar(nbar));
    }
    if !tail_tol.is_finite() || tail_tol <= 0.0 || tail_tol >= 1.0 {
        return Err(FockError::InvalidTailTol(tail_tol));
    }
    let lambda = nbar / 2.0;
    if lambda == 0.0 {
        return Ok(0); // vacuum: zero tail beyond K = 0
    }
    let ln_lambda = lambda.ln();
    let mut margin = 20.0 * lambda.sqrt() + 30.0;
    loop {
        let k_max = (lambda + margin).ceil() as usize;
        let ln_fact = ln_factorial_table(k_max);
        // tails[k] = Σ_{j>k} pmf(j), built by a reverse scan.
        let mut tails = vec![0.0f64; k_max + 1];
        let mut acc = KahanSum::new();
        for k in (0..=k_max).rev() {
            tails[k] = acc.value();
            acc.add((-lambda + k as f64 * ln_lambda - ln_fact[k]).exp());
        }
        if let Some(k) = tails.iter().position(|&t| t < tail_tol) {
            return Ok(k);
        }
        margin *= 2.0; // tolerance tighter than the scanned window: widen and retry
    }
}

/// Source-side experiment parameters: input power, accumulated phase, and the
/// projector order N used by the N-photon detection scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub nbar: f64,
    pub phi: f64,
    pub order: usize,
}

impl SourceParams {
    pub fn new(nbar: f64, phi: f64, order: usize) -> Result<Self, FockError> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(FockError::InvalidNbar(nbar));
        }
        if !phi.is_finite() {
            return Err(FockError::InvalidPhi(phi));
        }
        Ok(Self { nbar, phi, order })
    }

    /// Input coherent amplitude α = √n̄ (real by convention).
    pub fn alpha(&self) -> f64 {
        self.nbar.sqrt()
    }
}

/// Pure state of two bosonic modes on a square truncated Fock grid.
///
/// States built from product coherent inputs keep their mode amplitudes as a
/// label; linear-optics transforms update the label when they act on it
/// exactly (the 2×2 fast path) and drop it otherwise.
#[derive(Debug, Clone)]
pub struct TwoModeFockState {
    cutoff: usize,
    amps: Vec<Complex64>,
    coherent: Option<[Complex64; 2]>,
}

impl TwoModeFockState {
    /// Wrap an explicit amplitude grid (row-major, index n·(cutoff+1)+m).
    pub fn from_grid(cutoff: usize, amps: Vec<Complex64>) -> Result<Self, FockError> {
        let want = (cutoff + 1) * (cutoff + 1);
        if amps.len() != want {
            return Err(FockError::GridShape {
                cutoff,
                want,
                got: amps.len(),
            });
        }
        Ok(Self {
            cutoff,
            amps,
            coherent: None,
        })
    }

    pub(crate) fn from_parts(
        cutoff: usize,
        amps: Vec<Complex64>,
        coherent: Option<[Complex64; 2]>,
    ) -> Self {
        debug_assert_eq!(amps.len(), (cutoff + 1) * (cutoff + 1));
        Self {
            cutoff,
            amps,
            coherent,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[inline]
    pub fn amp(&self, n: usize, m: usize) -> Complex64 {
        self.amps[n * (self.cutoff + 1) + m]
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    /// Product-coherent mode amplitudes (α_a, α_b), when this state is known
    /// to be product coherent.
    pub fn coherent_label(&self) -> Option<(Complex64, Complex64)> {
        self.coherent.map(|c| (c[0], c[1]))
    }

    /// Drop the product-coherent label, forcing downstream transforms onto
    /// the generic Fock-space path. Used to cross-validate the fast path.
    pub fn without_coherent_label(mut self) -> Self {
        self.coherent = None;
        self
    }

    /// Σ |c_{n,m}|², compensated.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = KahanSum::new();
        for a in &self.amps {
            acc.add(a.norm_sqr());
        }
        acc.value()
    }

    /// Truncation deficit 1 − Σ|c|², clamped below at 0 so that rounding on
    /// an effectively untruncated state never reports a negative deficit.
    pub fn norm_deficit(&self) -> f64 {
        (1.0 - self.norm_sq()).max(0.0)
    }

    /// Mean photon number in mode A, Σ n |c_{n,m}|².
    pub fn mean_photons_a(&self) -> f64 {
        let k = self.cutoff + 1;
        let mut acc = KahanSum::new();
        for n in 0..k {
            for m in 0..k {
                acc.add(n as f64 * self.amps[n * k + m].norm_sqr());
            }
        }
        acc.value()
    }

    /// Mean photon number in mode B, Σ m |c_{n,m}|².
    pub fn mean_photons_b(&self) -> f64 {
        let k = self.cutoff + 1;
        let mut acc = KahanSum::new();
        for n in 0..k {
            for m in 0..k {
                acc.add(m as f64 * self.amps[n * k + m].norm_sqr());
            }
        }
        acc.value()
    }
}

/// Single-mode coherent amplitude column v_n = e^{-r²/2} α^n / √n!, evaluated
/// in the log domain: |v_n| = exp(n·ln r − r²/2 − ln(n!)/2), arg v_n = n·θ.
fn coherent_column(alpha: Complex64, cutoff: usize, ln_fact: &[f64]) -> Vec<Complex64> {
    let r = alpha.norm();
    let mut col = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    if r == 0.0 {
        col[0] = Complex64::new(1.0, 0.0);
        return col;
    }
    let theta = alpha.arg();
    let ln_r = r.ln();
    let half_r2 = 0.5 * r * r;
    for (n, slot) in col.iter_mut().enumerate() {
        let magnitude = (n as f64 * ln_r - half_r2 - 0.5 * ln_fact[n]).exp();
        *slot = Complex64::from_polar(magnitude, n as f64 * theta);
    }
    col
}

/// Product coherent state |α_a, α_b⟩ on a (cutoff+1)² grid.
///
/// The truncation deficit equals the product of two Poisson upper tails; with
/// a cutoff from [`choose_cutoff`] at tolerance t, each mode contributes at
/// most t, so callers wanting a total deficit below t should budget t/2 per
/// mode (see `probe_state` in the optics module).
pub fn make_two_mode_coherent(
    alpha_a: Complex64,
    alpha_b: Complex64,
    cutoff: usize,
) -> Result<TwoModeFockState, FockError> {
    for alpha in [alpha_a, alpha_b] {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(FockError::NonFiniteAmplitude(alpha));
        }
    }
    let ln_fact = ln_factorial_table(cutoff);
    let col_a = coherent_column(alpha_a, cutoff, &ln_fact);
    let col_b = coherent_column(alpha_b, cutoff, &ln_fact);
    let k = cutoff + 1;
    let mut amps = vec![Complex64::new(0.0, 0.0); k * k];
    for n in 0..k {
        let va = col_a[n];
        for m in 0..k {
            amps[n * k + m] = va * col_b[m];
        }
    }
    Ok(TwoModeFockState::from_parts(
        cutoff,
        amps,
        Some([alpha_a, alpha_b]),
    ))
}

/// ⟨a|b⟩ = Σ conj(a_{n,m}) b_{n,m}. Errors on mismatched grids.
pub fn inner_product(a: &TwoModeFockState, b: &TwoModeFockState) -> Result<Complex64, FockError> {
    if a.cutoff != b.cutoff {
        return Err(FockError::CutoffMismatch(a.cutoff, b.cutoff));
    }
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (x, y) in a.amps.iter().zip(&b.amps) {
        let term = x.conj() * y;
        re.add(term.re);
        im.add(term.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}
