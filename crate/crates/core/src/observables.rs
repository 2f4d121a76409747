//! The four detection schemes, evaluated directly on truncated Fock grids:
//! expectation, second moment, variance, phase derivative, and the
//! error-propagation sensitivity Δφ² = variance / (∂⟨·⟩/∂φ)².
//!
//! Every operator here acts on O(K²) amplitude pairs with a hard-coded index
//! pattern — no (K+1)²×(K+1)² matrix is ever materialized, which is what
//! keeps n̄ = 100 (K ≈ 200 grids) cheap. This module is the brute-force
//! numeric oracle the closed forms in [`crate::analytic`] are validated
//! against.

use thiserror::Error;

use crate::fock::{FockError, SourceParams, TwoModeFockState};
use crate::math::KahanSum;
use crate::optics::{interferometer_input, mzi_transform, probe_state};

/// Default bound on the truncation tail mass of constructed states.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Default finite-difference step (radians) for phase derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Derivatives smaller than this are treated as stationary: the
/// error-propagation sensitivity is reported as undefined rather than as an
/// astronomically large (and numerically meaningless) quotient.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("projector order {order} exceeds the grid cutoff {cutoff}")]
    OrderBeyondCutoff { order: usize, cutoff: usize },
    #[error("finite-difference step must be finite and positive, got {0}")]
    InvalidStep(f64),
}

/// The four detection schemes.
///
/// * `NoonProjector(N)` — the order-N path-entanglement projector
///   |N,0⟩⟨0,N| + |0,N⟩⟨N,0| (for N = 0 it degenerates to 2|0,0⟩⟨0,0|).
/// * `NuSum` — the sum of `NoonProjector(N)` over every order N; its square
///   is Σ_N (|N,0⟩⟨N,0| + |0,N⟩⟨0,N|) + 2|0,0⟩⟨0,0| — the doubled vacuum
///   term is easy to drop by accident and is pinned by a dense-matrix
///   regression test.
/// * `MuSum` — the two-mode exchange operator Σ_{M,M'} |M',M⟩⟨M,M'|;
///   Hermitian and squaring to the identity.
/// * `ParityA` — photon-number parity of mode A, Σ (−1)^n |n,m⟩⟨n,m|.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionScheme {
    NoonProjector(usize),
    NuSum,
    MuSum,
    ParityA,
}

impl DetectionScheme {
    /// Short identifier used in CLI flags and CSV metadata.
    pub fn label(&self) -> &'static str {
        match self {
            DetectionScheme::NoonProjector(_) => "noon",
            DetectionScheme::NuSum => "nu",
            DetectionScheme::MuSum => "mu",
            DetectionScheme::ParityA => "parity",
        }
    }
}

/// One full phase-measurement characterization at a working point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub mean: f64,
    /// ⟨d²⟩ − ⟨d⟩², clamped to 0 against rounding; never meaningfully
    /// negative for the operators here.
    pub variance: f64,
    pub dmean_dphi: f64,
    /// Δφ² = variance / dmean_dphi²; `None` at stationary points
    /// (|dmean_dphi| < [`DERIVATIVE_FLOOR`]), where error propagation is
    /// undefined.
    pub sensitivity_sq: Option<f64>,
}

/// Tolerances threaded through state construction and differentiation.
#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    pub tail_tol: f64,
    pub fd_step: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            tail_tol: DEFAULT_TAIL_TOL,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

fn check_order(s: &TwoModeFockState, scheme: DetectionScheme) -> Result<(), ObservablesError> {
    if let DetectionScheme::NoonProjector(order) = scheme {
        if order > s.cutoff() {
            return Err(ObservablesError::OrderBeyondCutoff {
                order,
                cutoff: s.cutoff(),
            });
        }
    }
    Ok(())
}

/// ⟨d⟩ by structural summation over the amplitude grid.
pub fn expectation(s: &TwoModeFockState, scheme: DetectionScheme) -> Result<f64, ObservablesError> {
    check_order(s, scheme)?;
    let k = s.cutoff();
    Ok(match scheme {
        DetectionScheme::NoonProjector(order) => {
            2.0 * (s.amp(order, 0).conj() * s.amp(0, order)).re
        }
        DetectionScheme::NuSum => {
            let mut acc = KahanSum::new();
            for order in 0..=k {
                acc.add(2.0 * (s.amp(order, 0).conj() * s.amp(0, order)).re);
            }
            acc.value()
        }
        DetectionScheme::MuSum => {
            // Σ_{M,M'} conj(c_{M',M})·c_{M,M'}: real because the (M,M') and
            // (M',M) terms are complex conjugates, so summing real parts is
            // exact; an imaginary-part accumulator guards the claim.
            let mut re = KahanSum::new();
            let mut im = KahanSum::new();
            for mp in 0..=k {
                for m in 0..=k {
                    let term = s.amp(mp, m).conj() * s.amp(m, mp);
                    re.add(term.re);
                    im.add(term.im);
                }
            }
            debug_assert!(im.value().abs() < 1e-10, "exchange sum must be real");
            re.value()
        }
        DetectionScheme::ParityA => {
            let mut acc = KahanSum::new();
            for n in 0..=k {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                for m in 0..=k {
                    acc.add(sign * s.amp(n, m).norm_sqr());
                }
            }
            acc.value()
        }
    })
}

/// ⟨d²⟩ from the exact operator square, not from sampling:
///
/// * NoonProjector(N)² = |N,0⟩⟨N,0| + |0,N⟩⟨0,N| for N ≥ 1, and
///   4|0,0⟩⟨0,0| for N = 0;
/// * NuSum² = Σ_N (|N,0⟩⟨N,0| + |0,N⟩⟨0,N|) + 2|0,0⟩⟨0,0| — the cross
///   terms between different orders vanish, but the N = 0 projector is
///   2|0,0⟩⟨0,0| and squares to four times the vacuum projector;
/// * MuSum² = ParityA² = identity, so ⟨d²⟩ is the (≈1) state norm.
pub fn second_moment(
    s: &TwoModeFockState,
    scheme: DetectionScheme,
) -> Result<f64, ObservablesError> {
    check_order(s, scheme)?;
    let k = s.cutoff();
    Ok(match scheme {
        DetectionScheme::NoonProjector(0) => 4.0 * s.amp(0, 0).norm_sqr(),
        DetectionScheme::NoonProjector(order) => {
            s.amp(order, 0).norm_sqr() + s.amp(0, order).norm_sqr()
        }
        DetectionScheme::NuSum => {
            let mut acc = KahanSum::new();
            for order in 0..=k {
                acc.add(s.amp(order, 0).norm_sqr());
                acc.add(s.amp(0, order).norm_sqr());
            }
            acc.add(2.0 * s.amp(0, 0).norm_sqr());
            acc.value()
        }
        DetectionScheme::MuSum | DetectionScheme::ParityA => s.norm_sq(),
    })
}

/// ⟨d²⟩ − ⟨d⟩², clamped to 0 against rounding.
pub fn variance(s: &TwoModeFockState, scheme: DetectionScheme) -> Result<f64, ObservablesError> {
    let mean = expectation(s, scheme)?;
    let second = second_moment(s, scheme)?;
    let var = second - mean * mean;
    debug_assert!(var > -1e-12, "variance {var} below the rounding floor");
    Ok(var.max(0.0))
}

/// State a scheme is evaluated on at a working point (n̄, φ): the three
/// projective schemes measure the internal probe state (after the input
/// splitter and phase), while parity is detected at the interferometer
/// output, where the exchange/parity identity makes it phase sensitive.
pub fn scheme_state(
    params: &SourceParams,
    scheme: DetectionScheme,
    tail_tol: f64,
) -> Result<TwoModeFockState, FockError> {
    match scheme {
        DetectionScheme::ParityA => Ok(mzi_transform(
            &interferometer_input(params, tail_tol)?,
            params.phi,
        )),
        _ => probe_state(params, tail_tol),
    }
}

fn expectation_at(
    params: &SourceParams,
    scheme: DetectionScheme,
    tail_tol: f64,
) -> Result<f64, ObservablesError> {
    expectation(&scheme_state(params, scheme, tail_tol)?, scheme)
}

fn dmean_dphi_with(
    params: &SourceParams,
    scheme: DetectionScheme,
    h: f64,
    tail_tol: f64,
) -> Result<f64, ObservablesError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(ObservablesError::InvalidStep(h));
    }
    // Central difference at steps h and h/2 with one Richardson
    // extrapolation: (4·D(h/2) − D(h))/3 cancels the O(h²) error term.
    let central = |step: f64| -> Result<f64, ObservablesError> {
        let plus = SourceParams::new(params.nbar, params.phi + step, params.order)?;
        let minus = SourceParams::new(params.nbar, params.phi - step, params.order)?;
        Ok(
            (expectation_at(&plus, scheme, tail_tol)? - expectation_at(&minus, scheme, tail_tol)?)
                / (2.0 * step),
        )
    };
    let d_h = central(h)?;
    let d_half = central(h / 2.0)?;
    Ok((4.0 * d_half - d_h) / 3.0)
}

/// Finite-difference phase derivative of ⟨d⟩ over freshly constructed
/// states, independent of any closed-form derivative it may be compared to.
pub fn dmean_dphi(
    params: &SourceParams,
    scheme: DetectionScheme,
    h: f64,
) -> Result<f64, ObservablesError> {
    dmean_dphi_with(params, scheme, h, DEFAULT_TAIL_TOL)
}

/// Full measurement characterization with default tolerances.
pub fn measure(
    params: &SourceParams,
    scheme: DetectionScheme,
) -> Result<MeasurementRecord, ObservablesError> {
    measure_with(params, scheme, MeasureOptions::default())
}

/// Full measurement characterization: mean, variance, phase derivative, and
/// error-propagation sensitivity (undefined at stationary points).
pub fn measure_with(
    params: &SourceParams,
    scheme: DetectionScheme,
    opts: MeasureOptions,
) -> Result<MeasurementRecord, ObservablesError> {
    let state = scheme_state(params, scheme, opts.tail_tol)?;
    let mean = expectation(&state, scheme)?;
    let var = variance(&state, scheme)?;
    let d = dmean_dphi_with(params, scheme, opts.fd_step, opts.tail_tol)?;
    let sensitivity_sq = if d.abs() < DERIVATIVE_FLOOR {
        None
    } else {
        Some(var / (d * d))
    };
    Ok(MeasurementRecord {
        mean,
        variance: var,
        dmean_dphi: d,
        sensitivity_sq,
    })
}
