//! Shot-level simulation of the exchange-scheme parity measurement.
//!
//! Each detector click is a Bernoulli draw on the even-parity probability
//! `p(phi) = (1 + exp(-2 nbar sin^2(phi/2))) / 2`, so a finite-shot record
//! carries binomial noise.  Inverting the fringe on the recorded even
//! fraction gives a phase estimate; repeating over independent trials gives
//! an empirical per-shot phase deviation that can be compared against the
//! closed-form error-propagation prediction.
//!
//! All randomness flows from explicit seeds through ChaCha8 streams, so
//! every result here is bit-reproducible; trials are parallelized with a
//! per-trial seed derived by a SplitMix64-style mix, never by sharing one
//! stream across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{mu_expectation, mu_sensitivity_sq};

/// Failures of shot generation or fringe inversion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("mean photon number must be positive and finite, got {0}")]
    InvalidNbar(f64),
    #[error("need at least one shot")]
    NoShots,
    #[error("even fraction {0} is not above 1/2; the fringe side is lost")]
    FringeSideLost(f64),
    #[error("inferred sin^2(phi/2) = {0} exceeds 1; counts are inconsistent with the fringe")]
    AmplitudeOutOfRange(f64),
    #[error("phase {0} is too close to a fringe-stationary point to calibrate")]
    DegeneratePhase(f64),
    #[error("estimator needs at least 2 trials, got {0}")]
    NotEnoughTrials(u64),
    #[error("{failed} of {trials} trials failed fringe inversion (more than 1%)")]
    TooManyFailedTrials { failed: u64, trials: u64 },
}

/// Which side of the (even) fringe the true phase sits on.  The even-count
/// record is insensitive to the sign of the phase, so inversion needs the
/// sign as prior knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    NonNegative,
    Negative,
}

impl Branch {
    /// Branch matching the sign of a known true phase.
    pub fn from_phase(phi: f64) -> Self {
        if phi < 0.0 {
            Branch::Negative
        } else {
            Branch::NonNegative
        }
    }
}

/// A fixed-phase shot sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotExperiment {
    pub nbar: f64,
    pub phi_true: f64,
    pub shots: u64,
    pub seed: u64,
}

/// Probability of an even-parity click at the dark port,
/// `(1 + exp(-2 nbar sin^2(phi/2))) / 2`, always in `(1/2, 1]`.
pub fn parity_even_probability(nbar: f64, phi: f64) -> f64 {
    0.5 * (1.0 + mu_expectation(nbar, phi))
}

/// Draws the shot record, returning `(even, odd)` click counts.
///
/// The stream is `ChaCha8` seeded with `seed`; identical experiments give
/// identical counts.  At `phi = 0` the even probability is exactly 1, and
/// every draw lands even.
pub fn run_shots(exp: &ShotExperiment) -> Result<(u64, u64), MonteCarloError> {
    if !(exp.nbar.is_finite() && exp.nbar > 0.0) {
        return Err(MonteCarloError::InvalidNbar(exp.nbar));
    }
    if exp.shots == 0 {
        return Err(MonteCarloError::NoShots);
    }
    let p = parity_even_probability(exp.nbar, exp.phi_true);
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    let mut even = 0u64;
    for _ in 0..exp.shots {
        // gen::<f64>() is uniform on [0, 1), so p = 1 succeeds surely.
        if rng.gen::<f64>() < p {
            even += 1;
        }
    }
    Ok((even, exp.shots - even))
}

/// Inverts the fringe on an exact even-click probability.
///
/// Returns the phase magnitude on the chosen [`Branch`].  Errors when the
/// probability does not sit strictly on the upper half of the fringe or
/// implies `sin^2(phi/2) > 1`.
pub fn estimate_phase_from_probability(
    p_even: f64,
    nbar: f64,
    branch: Branch,
) -> Result<f64, MonteCarloError> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(MonteCarloError::InvalidNbar(nbar));
    }
    // Negated comparison on purpose: a NaN probability must also land here.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(p_even > 0.5) {
        return Err(MonteCarloError::FringeSideLost(p_even));
    }
    if p_even >= 1.0 {
        // The fringe peak: exactly zero phase, either branch.
        return Ok(0.0);
    }
    let u = -(2.0 * p_even - 1.0).ln() / (2.0 * nbar);
    if u > 1.0 {
        return Err(MonteCarloError::AmplitudeOutOfRange(u));
    }
    let magnitude = 2.0 * u.sqrt().asin();
    Ok(match branch {
        Branch::NonNegative => magnitude,
        Branch::Negative => -magnitude,
    })
}

/// Inverts the fringe on recorded click counts.
pub fn estimate_phase(
    even: u64,
    odd: u64,
    nbar: f64,
    branch: Branch,
) -> Result<f64, MonteCarloError> {
    let total = even + odd;
    if total == 0 {
        return Err(MonteCarloError::NoShots);
    }
    estimate_phase_from_probability(even as f64 / total as f64, nbar, branch)
}

/// Result of a repeated-trial calibration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityEstimate {
    pub nbar: f64,
    pub phi_true: f64,
    pub shots: u64,
    pub trials: u64,
    /// Trials whose fringe inversion failed (excluded from the statistics).
    pub failed_trials: u64,
    /// Sample standard deviation of the phase estimates, scaled by
    /// `sqrt(shots)`: the empirical single-shot phase deviation.
    pub dphi_per_shot: f64,
    /// Closed-form error-propagation prediction, `sqrt(var/slope^2)`.
    pub dphi_predicted: f64,
}

fn mix_seed(master: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over a golden-ratio-striped index; decorrelates
    // the per-trial ChaCha streams while staying reproducible.
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Repeats the shot experiment `trials` times and compares the spread of
/// the phase estimates against the closed-form sensitivity.
///
/// Phases within `1e-6` of a fringe-stationary point (`sin(phi) ~ 0`,
/// including zero) are rejected: the estimator variance diverges there and
/// no finite shot budget calibrates it.  Errors if more than 1% of trials
/// fail inversion.
pub fn empirical_sensitivity(
    nbar: f64,
    phi_true: f64,
    shots: u64,
    trials: u64,
    seed: u64,
) -> Result<SensitivityEstimate, MonteCarloError> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(MonteCarloError::InvalidNbar(nbar));
    }
    if shots == 0 {
        return Err(MonteCarloError::NoShots);
    }
    if trials < 2 {
        return Err(MonteCarloError::NotEnoughTrials(trials));
    }
    if phi_true.sin().abs() < 1e-6 {
        return Err(MonteCarloError::DegeneratePhase(phi_true));
    }
    let branch = Branch::from_phase(phi_true);

    let estimates: Vec<Result<f64, MonteCarloError>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let exp = ShotExperiment {
                nbar,
                phi_true,
                shots,
                seed: mix_seed(seed, trial),
            };
            let (even, odd) = run_shots(&exp)?;
            estimate_phase(even, odd, nbar, branch)
        })
        .collect();

    let good: Vec<f64> = estimates
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let failed = trials - good.len() as u64;
    if failed as f64 > 0.01 * trials as f64 || good.len() < 2 {
        return Err(MonteCarloError::TooManyFailedTrials { failed, trials });
    }

    let n = good.len() as f64;
    let mean = good.iter().sum::<f64>() / n;
    let var = good.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let dphi_per_shot = var.sqrt() * (shots as f64).sqrt();

    Ok(SensitivityEstimate {
        nbar,
        phi_true,
        shots,
        trials,
        failed_trials: failed,
        dphi_per_shot,
        dphi_predicted: mu_sensitivity_sq(nbar, phi_true).sqrt(),
    })
}
