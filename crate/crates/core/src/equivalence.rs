//! Cross-route identity between the exchange observable and dark-port parity.
//!
//! The library computes the same physical signal two independent ways:
//!
//! * **Left side** — the exchange-observable expectation on the split
//!   coherent probe, built directly from closed-form coherent amplitudes.
//! * **Right side** — mode-`A` photon-number parity at the interferometer
//!   output, where the input grid is stripped of its coherent label so the
//!   transform runs through the generic per-block recurrence with no
//!   coherent-state shortcuts.
//!
//! The two expectations agree point by point; their difference is a tight
//! end-to-end probe of the splitter recurrence, the phase convention, and
//! the truncation policy all at once.  [`check_identity_flipped`] wires the
//! interferometer in the opposite port convention and is expected to
//! *disagree* — a negative control showing the check has teeth.

use rayon::prelude::*;

use crate::fock::SourceParams;
use crate::observables::{expectation, DetectionScheme, ObservablesError};
use crate::optics::{interferometer_input, mzi_transform, mzi_transform_flipped, probe_state};

/// One point of the identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub nbar: f64,
    pub phi: f64,
    /// Exchange-observable expectation on the split coherent probe.
    pub lhs_mu: f64,
    /// Parity expectation on the generic-route interferometer output.
    pub rhs_parity: f64,
    pub abs_diff: f64,
}

fn check_with(
    nbar: f64,
    phi: f64,
    tail_tol: f64,
    transform: fn(&crate::fock::TwoModeFockState, f64) -> crate::fock::TwoModeFockState,
) -> Result<EquivalenceReport, ObservablesError> {
    let params = SourceParams::new(nbar, phi, 0)?;
    let probe = probe_state(&params, tail_tol)?;
    let lhs_mu = expectation(&probe, DetectionScheme::MuSum)?;

    // Dropping the label forces the full Fock-grid route.
    let input = interferometer_input(&params, tail_tol)?.without_coherent_label();
    let output = transform(&input, phi);
    let rhs_parity = expectation(&output, DetectionScheme::ParityA)?;

    Ok(EquivalenceReport {
        nbar,
        phi,
        lhs_mu,
        rhs_parity,
        abs_diff: (lhs_mu - rhs_parity).abs(),
    })
}

/// Evaluates both routes at one `(nbar, phi)` point.
pub fn check_identity(
    nbar: f64,
    phi: f64,
    tail_tol: f64,
) -> Result<EquivalenceReport, ObservablesError> {
    check_with(nbar, phi, tail_tol, mzi_transform)
}

/// Same check against the opposite-port interferometer convention.
///
/// The identity does not hold there (the parity side becomes the bright
/// port), so large differences are the expected outcome.
pub fn check_identity_flipped(
    nbar: f64,
    phi: f64,
    tail_tol: f64,
) -> Result<EquivalenceReport, ObservablesError> {
    check_with(nbar, phi, tail_tol, mzi_transform_flipped)
}

/// Runs [`check_identity`] over the cartesian grid `nbars x phis`,
/// in parallel, preserving grid order (outer loop over `nbars`).
pub fn sweep_identity(
    nbars: &[f64],
    phis: &[f64],
    tail_tol: f64,
    flip_convention: bool,
) -> Result<Vec<EquivalenceReport>, ObservablesError> {
    let points: Vec<(f64, f64)> = nbars
        .iter()
        .flat_map(|&n| phis.iter().map(move |&p| (n, p)))
        .collect();
    points
        .par_iter()
        .map(|&(nbar, phi)| {
            if flip_convention {
                check_identity_flipped(nbar, phi, tail_tol)
            } else {
                check_identity(nbar, phi, tail_tol)
            }
        })
        .collect()
}

/// Largest pointwise difference in a sweep; `0.0` for an empty slice.
pub fn max_abs_diff(reports: &[EquivalenceReport]) -> f64 {
    reports.iter().fold(0.0, |acc, r| acc.max(r.abs_diff))
}

// Reference values keep every digit their generating script printed,
// even where fewer would round-trip.
#[allow(clippy::excessive_precision)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::linspace;
    use std::f64::consts::PI;

    const TAIL_TOL: f64 = 1e-12;

    #[test]
    fn both_routes_give_unity_at_zero_phase() {
        let r = check_identity(4.0, 0.0, TAIL_TOL).unwrap();
        assert!((r.lhs_mu - 1.0).abs() < 1e-11, "lhs {}", r.lhs_mu);
        assert!((r.rhs_parity - 1.0).abs() < 1e-11, "rhs {}", r.rhs_parity);
        assert!(r.abs_diff < 1e-11);
    }

    #[test]
    fn identity_holds_at_large_photon_number() {
        let r = check_identity(100.0, 0.1, TAIL_TOL).unwrap();
        let want = 0.6067833492179677;
        assert!((r.lhs_mu - want).abs() < 1e-11, "lhs {}", r.lhs_mu);
        assert!((r.rhs_parity - want).abs() < 1e-11, "rhs {}", r.rhs_parity);
        assert!(r.abs_diff < 1e-10, "diff {}", r.abs_diff);
    }

    #[test]
    fn identity_matches_closed_form_at_third_pi() {
        // 2 * 4 * sin^2(pi/6) = 2, so both routes land on e^{-2}.
        let r = check_identity(4.0, PI / 3.0, TAIL_TOL).unwrap();
        let want = 0.13533528323661269;
        assert!((r.lhs_mu - want).abs() < 1e-12, "lhs {}", r.lhs_mu);
        assert!((r.rhs_parity - want).abs() < 1e-12, "rhs {}", r.rhs_parity);
        assert!(r.abs_diff < 1e-10);
    }

    #[test]
    fn sweep_stays_tight_and_ordered() {
        let nbars = [1.0, 4.0, 20.0];
        let phis = linspace(-PI, PI, 9);
        let reports = sweep_identity(&nbars, &phis, TAIL_TOL, false).unwrap();
        assert_eq!(reports.len(), 27);
        assert!(
            max_abs_diff(&reports) < 1e-9,
            "max {}",
            max_abs_diff(&reports)
        );
        // Parallel execution must not disturb grid order.
        for (k, r) in reports.iter().enumerate() {
            assert_eq!(r.nbar, nbars[k / 9]);
            assert_eq!(r.phi, phis[k % 9]);
        }
    }

    #[test]
    fn flipped_convention_breaks_the_identity() {
        // At phi = 0 the flipped chain sends all light to the parity port's
        // partner, so the right side collapses to e^{-2 nbar} while the left
        // side stays at 1.
        let r = check_identity_flipped(1.0, 0.0, TAIL_TOL).unwrap();
        assert!(
            (r.rhs_parity - (-2.0f64).exp()).abs() < 1e-10,
            "rhs {}",
            r.rhs_parity
        );
        assert!(r.abs_diff > 0.5, "flip control too small: {}", r.abs_diff);
    }

    #[test]
    fn max_abs_diff_of_empty_sweep_is_zero() {
        assert_eq!(max_abs_diff(&[]), 0.0);
    }
}
