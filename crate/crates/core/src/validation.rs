//! Batch cross-validation of the numerical route against the closed forms.
//!
//! Two suites cover the whole stack:
//!
//! * the **oracle suite** measures mean, variance, and squared sensitivity
//!   numerically for every detection scheme over a standard parameter grid
//!   and compares each against its closed form;
//! * the **identity suite** runs the exchange/parity cross-route check of
//!   [`crate::equivalence`] over the same grid.
//!
//! Tolerances scale with the requested truncation tail: a looser grid is
//! entitled to looser agreement, but never looser than the floors that
//! represent finite-difference and rounding noise at tight truncation.
//! Sensitivity comparisons are gated on the fringe slope so that points
//! where the finite-difference derivative is pure noise are skipped rather
//! than spuriously compared; a minimum-comparison count guards the suites
//! against passing vacuously.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::analytic;
use crate::equivalence::{max_abs_diff, sweep_identity};
use crate::fock::SourceParams;
use crate::math::linspace;
use crate::observables::{measure_with, DetectionScheme, MeasureOptions, ObservablesError};

/// Absolute tolerance floor for means and variances.
pub const MEAN_ABS_FLOOR: f64 = 1e-12;
/// Mean/variance absolute tolerance grows as `MEAN_ABS_SCALE * tail_tol`:
/// truncating the grid at tail mass `t` perturbs bounded-observable
/// moments by a small multiple of `t`.
pub const MEAN_ABS_SCALE: f64 = 5.0;
/// Relative tolerance floor for means and variances.
pub const MEAN_REL_FLOOR: f64 = 1e-8;
/// Relative mean/variance tolerance grows as `MEAN_REL_SCALE * tail_tol`.
pub const MEAN_REL_SCALE: f64 = 50.0;

/// Absolute tolerance floor for squared sensitivities.
pub const SENS_ABS_FLOOR: f64 = 1e-12;
/// Squared-sensitivity absolute tolerance scale on `tail_tol`.
pub const SENS_ABS_SCALE: f64 = 5.0;
/// Relative tolerance floor for squared sensitivities (finite-difference
/// noise dominates at tight truncation).
pub const SENS_REL_FLOOR: f64 = 1e-8;
/// Squared-sensitivity relative tolerance scale: the quotient of two
/// truncation-perturbed quantities amplifies the tail error.
pub const SENS_REL_SCALE: f64 = 1e3;

/// Identity-suite absolute tolerance, `max(1e-9, 4 * tail_tol)`.
pub const IDENTITY_ABS_FLOOR: f64 = 1e-9;
pub const IDENTITY_ABS_SCALE: f64 = 4.0;

/// Sensitivities are compared only where the numerical fringe slope
/// exceeds this.  A central difference with step `h` carries an absolute
/// noise floor around `eps / h ~ 1e-12` from rounding in the four stencil
/// evaluations; the slope must clear that floor by enough decades for the
/// squared-sensitivity quotient to support [`SENS_REL_FLOOR`].
pub const SENS_DERIV_FLOOR: f64 = 5e-4;

/// The oracle suite must make at least this many sensitivity comparisons,
/// so slope gating can never silence the whole suite.
pub const MIN_SENS_COMPARISONS: usize = 120;

/// Mean photon numbers of the standard validation grid.
pub fn standard_nbars() -> [f64; 4] {
    [1.0, 4.0, 20.0, 100.0]
}

/// Phases of the standard validation grid: 33 points across `[-pi, pi]`,
/// symmetric and containing exact zero.
pub fn standard_phis() -> Vec<f64> {
    linspace(-PI, PI, 33)
}

/// `(absolute, relative)` tolerance for mean and variance comparisons.
pub fn mean_tolerances(tail_tol: f64) -> (f64, f64) {
    (
        MEAN_ABS_FLOOR.max(MEAN_ABS_SCALE * tail_tol),
        MEAN_REL_FLOOR.max(MEAN_REL_SCALE * tail_tol),
    )
}

/// `(absolute, relative)` tolerance for squared-sensitivity comparisons.
pub fn sens_tolerances(tail_tol: f64) -> (f64, f64) {
    (
        SENS_ABS_FLOOR.max(SENS_ABS_SCALE * tail_tol),
        SENS_REL_FLOOR.max(SENS_REL_SCALE * tail_tol),
    )
}

/// Absolute tolerance for the cross-route identity.
pub fn identity_tolerance(tail_tol: f64) -> f64 {
    IDENTITY_ABS_FLOOR.max(IDENTITY_ABS_SCALE * tail_tol)
}

/// Outcome of one validation suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    /// Comparisons actually made.
    pub points_checked: usize,
    /// Sensitivity comparisons among them (equals `points_checked` for the
    /// identity suite).
    pub sens_points: usize,
    /// Largest absolute difference seen over all comparisons.
    pub worst_abs_diff: f64,
    /// Human-readable description of every failed comparison.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A comparison passes if it meets either the absolute or the relative
/// tolerance.
fn within(got: f64, want: f64, abs_tol: f64, rel_tol: f64) -> bool {
    let abs = (got - want).abs();
    if abs <= abs_tol {
        return true;
    }
    abs <= rel_tol * want.abs()
}

struct PointOutcome {
    comparisons: usize,
    sens_compared: usize,
    worst_abs: f64,
    failures: Vec<String>,
}

fn compare_point(
    nbar: f64,
    phi: f64,
    scheme: DetectionScheme,
    opts: MeasureOptions,
) -> Result<PointOutcome, ObservablesError> {
    let order = match scheme {
        DetectionScheme::NoonProjector(n) => n,
        _ => 0,
    };
    let params = SourceParams::new(nbar, phi, order)?;
    let record = match measure_with(&params, scheme, opts) {
        Ok(r) => r,
        // At loose truncation the order-resolved projector can lie beyond
        // the grid entirely (its weight there is far below the tail
        // tolerance); such points have nothing numerical to compare.
        Err(ObservablesError::OrderBeyondCutoff { .. }) => {
            return Ok(PointOutcome {
                comparisons: 0,
                sens_compared: 0,
                worst_abs: 0.0,
                failures: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };

    let (mean_a, var_a, sens_a) = match scheme {
        DetectionScheme::NoonProjector(n) => (
            analytic::noon_expectation(nbar, n, phi),
            analytic::noon_variance(nbar, n, phi),
            analytic::noon_sensitivity_sq(nbar, n, phi),
        ),
        DetectionScheme::NuSum => (
            analytic::nu_expectation(nbar, phi, false),
            analytic::nu_variance(nbar, phi),
            analytic::nu_sensitivity_sq(nbar, phi),
        ),
        DetectionScheme::MuSum => (
            analytic::mu_expectation(nbar, phi),
            analytic::mu_variance(nbar, phi),
            Some(analytic::mu_sensitivity_sq(nbar, phi)),
        ),
        DetectionScheme::ParityA => unreachable!("parity is validated by the identity suite"),
    };

    let (mean_abs, mean_rel) = mean_tolerances(opts.tail_tol);
    let (sens_abs, sens_rel) = sens_tolerances(opts.tail_tol);
    let mut out = PointOutcome {
        comparisons: 0,
        sens_compared: 0,
        worst_abs: 0.0,
        failures: Vec::new(),
    };
    let check = |quantity: &str,
                 got: f64,
                 want: f64,
                 abs_tol: f64,
                 rel_tol: f64,
                 out: &mut PointOutcome| {
        out.comparisons += 1;
        out.worst_abs = out.worst_abs.max((got - want).abs());
        if !within(got, want, abs_tol, rel_tol) {
            out.failures.push(format!(
                "{} {quantity} at nbar={nbar}, phi={phi:+.6}: numeric {got:e} vs closed form {want:e}",
                scheme.label()
            ));
        }
    };

    check("mean", record.mean, mean_a, mean_abs, mean_rel, &mut out);
    check(
        "variance",
        record.variance,
        var_a,
        mean_abs,
        mean_rel,
        &mut out,
    );

    // Compare sensitivities only where both routes define them and the
    // fringe slope is resolvable above finite-difference noise.
    if let (Some(got), Some(want)) = (record.sensitivity_sq, sens_a) {
        if record.dmean_dphi.abs() >= SENS_DERIV_FLOOR {
            out.sens_compared += 1;
            check("sens_sq", got, want, sens_abs, sens_rel, &mut out);
        }
    }
    Ok(out)
}

/// Measures every scheme over the standard grid and checks each mean,
/// variance, and (slope-gated) squared sensitivity against its closed form.
///
/// The projector order for the order-resolved scheme tracks the grid as
/// `order = round(nbar)`.
pub fn run_oracle_suite(tail_tol: f64, fd_step: f64) -> Result<SuiteReport, ObservablesError> {
    let opts = MeasureOptions { tail_tol, fd_step };
    let phis = standard_phis();
    let mut points: Vec<(f64, f64, DetectionScheme)> = Vec::new();
    for &nbar in &standard_nbars() {
        let order = nbar.round() as usize;
        for &phi in &phis {
            points.push((nbar, phi, DetectionScheme::NoonProjector(order)));
            points.push((nbar, phi, DetectionScheme::NuSum));
            points.push((nbar, phi, DetectionScheme::MuSum));
        }
    }

    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|&(nbar, phi, scheme)| compare_point(nbar, phi, scheme, opts))
        .collect::<Result<_, _>>()?;

    let mut report = SuiteReport {
        name: "oracle-agreement",
        points_checked: 0,
        sens_points: 0,
        worst_abs_diff: 0.0,
        failures: Vec::new(),
    };
    for o in outcomes {
        report.points_checked += o.comparisons;
        report.sens_points += o.sens_compared;
        report.worst_abs_diff = report.worst_abs_diff.max(o.worst_abs);
        report.failures.extend(o.failures);
    }
    if report.sens_points < MIN_SENS_COMPARISONS {
        report.failures.push(format!(
            "only {} sensitivity comparisons were made (floor {}); the slope gate is miscalibrated",
            report.sens_points, MIN_SENS_COMPARISONS
        ));
    }
    Ok(report)
}

/// Runs the exchange/parity cross-route identity over the standard grid.
///
/// With `flip_convention` the interferometer is wired in the opposite port
/// convention; the identity then fails by design, and the report records
/// the (large) differences.
pub fn run_identity_suite(
    tail_tol: f64,
    flip_convention: bool,
) -> Result<SuiteReport, ObservablesError> {
    let phis = standard_phis();
    let reports = sweep_identity(&standard_nbars(), &phis, tail_tol, flip_convention)?;
    let tol = identity_tolerance(tail_tol);
    let failures = reports
        .iter()
        .filter(|r| r.abs_diff > tol)
        .map(|r| {
            format!(
                "identity at nbar={}, phi={:+.6}: mu {:e} vs parity {:e} (diff {:e} > {tol:e})",
                r.nbar, r.phi, r.lhs_mu, r.rhs_parity, r.abs_diff
            )
        })
        .collect();
    Ok(SuiteReport {
        name: if flip_convention {
            "identity-flipped"
        } else {
            "identity"
        },
        points_checked: reports.len(),
        sens_points: reports.len(),
        worst_abs_diff: max_abs_diff(&reports),
        failures,
    })
}

/// Runs both suites in their standard configuration.
pub fn run_all(tail_tol: f64, fd_step: f64) -> Result<Vec<SuiteReport>, ObservablesError> {
    Ok(vec![
        run_oracle_suite(tail_tol, fd_step)?,
        run_identity_suite(tail_tol, false)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{DEFAULT_FD_STEP, DEFAULT_TAIL_TOL};

    #[test]
    fn tolerances_scale_with_tail_tol_above_the_floors() {
        // Below the floors the tolerances stop shrinking...
        assert_eq!(mean_tolerances(0.0), (MEAN_ABS_FLOOR, MEAN_REL_FLOOR));
        assert_eq!(sens_tolerances(0.0), (SENS_ABS_FLOOR, SENS_REL_FLOOR));
        assert_eq!(identity_tolerance(1e-12), IDENTITY_ABS_FLOOR);
        // ...and above them they track the tail tolerance linearly.
        let (abs, rel) = mean_tolerances(1e-6);
        assert!((abs - 5e-6).abs() < 1e-18 && (rel - 5e-5).abs() < 1e-17);
        let (abs, rel) = sens_tolerances(1e-3);
        assert!((abs - 5e-3).abs() < 1e-15 && (rel - 1.0).abs() < 1e-12);
        assert!((identity_tolerance(1e-6) - 4e-6).abs() < 1e-18);
    }

    #[test]
    fn standard_grid_is_symmetric_and_contains_zero() {
        let phis = standard_phis();
        assert_eq!(phis.len(), 33);
        assert_eq!(phis[16], 0.0);
        assert_eq!(phis[0], -phis[32]);
    }

    #[test]
    fn oracle_suite_passes_at_default_tolerances() {
        let report = run_oracle_suite(DEFAULT_TAIL_TOL, DEFAULT_FD_STEP).unwrap();
        assert!(
            report.passed(),
            "oracle suite failed:\n{}",
            report.failures.join("\n")
        );
        // 4 nbar x 33 phi x 3 schemes, mean + variance each, plus gated
        // sensitivity points.
        assert_eq!(report.points_checked, 4 * 33 * 3 * 2 + report.sens_points);
        assert!(report.sens_points >= MIN_SENS_COMPARISONS);
    }

    #[test]
    fn oracle_suite_passes_at_loose_tolerances() {
        for tail_tol in [1e-3, 1e-6] {
            let report = run_oracle_suite(tail_tol, DEFAULT_FD_STEP).unwrap();
            assert!(
                report.passed(),
                "oracle suite failed at tail_tol={tail_tol}:\n{}",
                report.failures.join("\n")
            );
        }
    }

    #[test]
    fn identity_suite_passes_and_flip_fails() {
        let ok = run_identity_suite(DEFAULT_TAIL_TOL, false).unwrap();
        assert!(ok.passed(), "identity failed:\n{}", ok.failures.join("\n"));
        assert_eq!(ok.points_checked, 132);
        assert!(ok.worst_abs_diff < 1e-9, "worst {}", ok.worst_abs_diff);

        let flipped = run_identity_suite(DEFAULT_TAIL_TOL, true).unwrap();
        assert!(!flipped.passed(), "flipped identity unexpectedly held");
        assert!(
            flipped.worst_abs_diff > 0.1,
            "flip control too weak: {}",
            flipped.worst_abs_diff
        );
    }
}
