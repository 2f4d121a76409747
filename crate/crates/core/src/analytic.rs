//! Closed-form reference expressions for the three detection schemes.
//!
//! Everything here is a pure function of the source parameters — no Fock
//! grids are built.  These formulas are the cross-check targets for the
//! numerical route in [`crate::observables`]: expectation values, variances,
//! and phase sensitivities for the order-resolved projector, the summed
//! projector, and the exchange observable, plus the shot-noise and
//! Heisenberg reference curves.
//!
//! Quantities that grow like `exp(nbar)` are evaluated in the log domain so
//! they stay finite well past `nbar = 100` (the order-resolved sensitivity
//! is representable up to roughly `nbar = 400`).

use crate::math::ln_factorial;

/// Phase magnitude below which [`mu_sensitivity_sq`] switches from the
/// closed form to its Taylor series.  The direct expression loses relative
/// accuracy near the origin to `expm1(x)/x^2` cancellation in float
/// arithmetic; the two branches agree to ~1e-13 at the switch point.
pub const MU_SERIES_SWITCH: f64 = 1e-3;

/// Peak amplitude of the order-`order` interferogram on a split coherent
/// state with mean photon number `nbar`:
/// `2 e^{-nbar} (nbar/2)^order / order!`.
///
/// The fringe oscillates between `±peak`, so this is also the quoted
/// fringe visibility for the order-resolved scheme.
pub fn noon_visibility(nbar: f64, order: usize) -> f64 {
    ln_noon_visibility(nbar, order).exp()
}

fn ln_noon_visibility(nbar: f64, order: usize) -> f64 {
    let n = order as f64;
    // Avoid 0 * ln(0) = NaN at order 0.
    let power = if order == 0 {
        0.0
    } else {
        n * (nbar / 2.0).ln()
    };
    std::f64::consts::LN_2 - nbar + power - ln_factorial(order)
}

/// Expectation of the order-`order` projector sum on the split coherent
/// probe: `2 e^{-nbar} (nbar/2)^order cos(order * phi) / order!`.
pub fn noon_expectation(nbar: f64, order: usize, phi: f64) -> f64 {
    noon_visibility(nbar, order) * (order as f64 * phi).cos()
}

/// Variance of the order-`order` projector sum on the split coherent probe.
///
/// For `order >= 1` the second moment equals the peak amplitude itself;
/// order 0 picks up a doubled vacuum contribution.
pub fn noon_variance(nbar: f64, order: usize, phi: f64) -> f64 {
    let peak = noon_visibility(nbar, order);
    let second = if order == 0 { 2.0 * peak } else { peak };
    second - noon_expectation(nbar, order, phi).powi(2)
}

/// Squared phase sensitivity of the order-`order` scheme,
/// `var / (d<mean>/dphi)^2`, in closed form.
///
/// Returns `None` where the error-propagation quotient is undefined:
/// at `order = 0` (the signal carries no phase dependence), at `nbar = 0`
/// (no photons), and wherever `sin(order * phi)` vanishes exactly (the
/// stationary points of the fringe).  The large `e^{nbar}` factor is kept
/// in the log domain, so the result is finite up to roughly `nbar = 400`
/// at `order = round(nbar)`.
pub fn noon_sensitivity_sq(nbar: f64, order: usize, phi: f64) -> Option<f64> {
    if order == 0 || nbar == 0.0 {
        return None;
    }
    let n = order as f64;
    let s = (n * phi).sin();
    if s == 0.0 {
        return None;
    }
    let c = (n * phi).cos();
    // 1/peak = exp(n ln 2 + nbar + ln n!) / (2 nbar^n); keep it logarithmic.
    let ln_inv_peak_num = n * std::f64::consts::LN_2 + nbar + ln_factorial(order);
    let inv_peak_scaled = (ln_inv_peak_num - n * nbar.ln()).exp();
    Some((inv_peak_scaled - 2.0 * c * c) / (2.0 * n * n * s * s))
}

/// Best-case squared sensitivity of the order-resolved scheme at its
/// operating point `order = nbar`, `phi = pi / (2 nbar)`, together with the
/// Stirling approximation used for scaling arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalNoonSensitivity {
    /// `2^nbar e^{nbar} nbar! / (2 nbar^nbar nbar^2)`, evaluated in the
    /// log domain.
    pub exact: f64,
    /// Stirling form `sqrt(pi/2) 2^nbar / nbar^{3/2}`.
    pub stirling: f64,
}

/// Evaluates [`OptimalNoonSensitivity`] for integer `nbar >= 1`.
pub fn noon_sensitivity_optimal(nbar: usize) -> OptimalNoonSensitivity {
    assert!(nbar >= 1, "optimal operating point needs nbar >= 1");
    let n = nbar as f64;
    let ln_exact = n * std::f64::consts::LN_2 + n + ln_factorial(nbar)
        - std::f64::consts::LN_2
        - n * n.ln()
        - 2.0 * n.ln();
    let ln_stirling =
        0.5 * (std::f64::consts::PI / 2.0).ln() + n * std::f64::consts::LN_2 - 1.5 * n.ln();
    OptimalNoonSensitivity {
        exact: ln_exact.exp(),
        stirling: ln_stirling.exp(),
    }
}

/// Mean photon number that maximizes [`noon_visibility`] at fixed `order`,
/// located by golden-section search on the log of the visibility.
///
/// The visibility is unimodal in `nbar` with its maximum at `nbar = order`;
/// the search brackets `[eps, 2 * order + 10]` and converges the bracket
/// below 1e-9.
pub fn optimal_nbar_for_order(order: usize) -> f64 {
    let ln_vis = |nbar: f64| ln_noon_visibility(nbar, order);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (f64::EPSILON, 2.0 * order as f64 + 10.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (ln_vis(x1), ln_vis(x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ln_vis(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ln_vis(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Expectation of the summed projector on the split coherent probe.
///
/// With `approx = false` this is the exact resummation
/// `2 exp(-nbar + (nbar/2) cos phi) cos((nbar/2) sin phi)`; with
/// `approx = true` it is the small-phase fringe `2 e^{-nbar/2} cos(nbar phi / 2)`,
/// whose period shrinks like `1/nbar`.
pub fn nu_expectation(nbar: f64, phi: f64, approx: bool) -> f64 {
    if approx {
        2.0 * (-nbar / 2.0).exp() * (nbar * phi / 2.0).cos()
    } else {
        2.0 * (-nbar + (nbar / 2.0) * phi.cos()).exp() * ((nbar / 2.0) * phi.sin()).cos()
    }
}

/// Variance of the summed projector on the split coherent probe.
///
/// The second moment `2 e^{-nbar/2} + 2 e^{-nbar}` is phase-independent;
/// the doubled `e^{-nbar}` piece is the vacuum term of the squared operator.
pub fn nu_variance(nbar: f64, phi: f64) -> f64 {
    let second = 2.0 * (-nbar / 2.0).exp() + 2.0 * (-nbar).exp();
    second - nu_expectation(nbar, phi, false).powi(2)
}

/// Squared phase sensitivity of the summed-projector scheme in closed form.
///
/// Returns `None` wherever `sin(phi + (nbar/2) sin phi)` vanishes exactly
/// (the fringe is stationary there, which includes `phi = 0`).  The bracket
/// is arranged as a sum of three non-negative terms
/// (`expm1` twice plus a half-angle sine), so there is no cancellation at
/// small phase; the dominant `exp(nbar (3/2 - cos phi))` term keeps the
/// result representable up to roughly `nbar = 280`.
pub fn nu_sensitivity_sq(nbar: f64, phi: f64) -> Option<f64> {
    let psi = (phi + (nbar / 2.0) * phi.sin()).sin();
    if psi == 0.0 {
        return None;
    }
    let c = phi.cos();
    let half = (nbar * phi.sin() / 2.0).sin();
    let bracket = (nbar * (1.0 - c)).exp_m1() + (nbar * (1.5 - c)).exp_m1() + 2.0 * half * half;
    Some(2.0 / (nbar * nbar * psi * psi) * bracket)
}

/// Closed-form estimate of the summed-projector scheme's best squared
/// sensitivity, `16 pi e^{nbar/2} / (2 nbar + pi)^2`.
///
/// This expression is a stationary-phase estimate whose prefactor is only
/// asymptotic: against the true minimum of [`nu_sensitivity_sq`] over phase
/// it runs high by a factor approaching `pi` (about 2.93 at `nbar = 20`).
/// It is kept as the quoted reference curve; comparisons against the exact
/// sweep should expect that offset.
pub fn nu_sensitivity_min(nbar: f64) -> f64 {
    let two_nbar_pi = 2.0 * nbar + std::f64::consts::PI;
    16.0 * std::f64::consts::PI * (nbar / 2.0).exp() / (two_nbar_pi * two_nbar_pi)
}

/// Expectation of the exchange observable on the split coherent probe:
/// `exp(-2 nbar sin^2(phi/2))`.
pub fn mu_expectation(nbar: f64, phi: f64) -> f64 {
    let s = (phi / 2.0).sin();
    (-2.0 * nbar * s * s).exp()
}

/// Small-angle Gaussian approximation to [`mu_expectation`],
/// `exp(-nbar phi^2 / 2)`.
pub fn mu_small_angle(nbar: f64, phi: f64) -> f64 {
    (-nbar * phi * phi / 2.0).exp()
}

/// Variance of the exchange observable on the split coherent probe.
///
/// The observable squares to the identity, so
/// `var = 1 - mean^2 = -expm1(-4 nbar sin^2(phi/2))`.
pub fn mu_variance(nbar: f64, phi: f64) -> f64 {
    let s = (phi / 2.0).sin();
    -(-4.0 * nbar * s * s).exp_m1()
}

/// Squared phase sensitivity of the exchange scheme,
/// `expm1(4 nbar sin^2(phi/2)) / (nbar sin phi)^2`.
///
/// Defined for every phase; at the fringe origin it attains the shot-noise
/// limit `1/nbar` and it diverges at `phi = ±pi` where the fringe is
/// stationary.  Below [`MU_SERIES_SWITCH`] the Taylor series
/// `(1/nbar) [1 + phi^2 (nbar/2 + 1/4) + phi^4 (nbar^2/6 + nbar/12 + 1/24)]`
/// is used to avoid cancellation.
pub fn mu_sensitivity_sq(nbar: f64, phi: f64) -> f64 {
    if phi.abs() <= MU_SERIES_SWITCH {
        let p2 = phi * phi;
        (1.0 / nbar)
            * (1.0
                + p2 * (nbar / 2.0 + 0.25)
                + p2 * p2 * (nbar * nbar / 6.0 + nbar / 12.0 + 1.0 / 24.0))
    } else {
        let s = (phi / 2.0).sin();
        let d = nbar * phi.sin();
        (4.0 * nbar * s * s).exp_m1() / (d * d)
    }
}

/// Reference curves every scheme is plotted against.
pub struct ReferenceCurves;

impl ReferenceCurves {
    /// Shot-noise-limited squared sensitivity, `1 / nbar`.
    pub fn snl_sq(nbar: f64) -> f64 {
        1.0 / nbar
    }

    /// Heisenberg-limited squared sensitivity, `1 / nbar^2`.
    pub fn hl_sq(nbar: f64) -> f64 {
        1.0 / (nbar * nbar)
    }

    /// Classical interferometer fringe, `(1 + cos phi) / 2`.
    pub fn classical_fringe(phi: f64) -> f64 {
        0.5 * (1.0 + phi.cos())
    }
}

// Reference values keep every digit their generating script printed,
// even where fewer would round-trip.
#[allow(clippy::excessive_precision)]
#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
        let denom = want.abs().max(f64::MIN_POSITIVE);
        let rel = ((got - want) / denom).abs();
        assert!(
            rel <= tol,
            "{what}: got {got:e}, want {want:e}, rel err {rel:e} > {tol:e}"
        );
    }

    #[test]
    fn noon_expectation_matches_frozen_values() {
        // Peak of the nbar = 10, order = 10 fringe.
        assert_rel(
            noon_expectation(10.0, 10, 0.0),
            2.443555385178385e-4,
            1e-13,
            "noon(10,10,0)",
        );
        assert_rel(
            noon_expectation(4.0, 4, PI / 16.0),
            1.7268149946650641e-2,
            1e-13,
            "noon(4,4,pi/16)",
        );
        // Order 0 reduces to twice the two-mode vacuum weight, phase-free.
        assert_rel(
            noon_expectation(4.0, 0, 0.9),
            2.0 * (-4.0f64).exp(),
            1e-14,
            "noon order 0",
        );
        assert_eq!(
            noon_expectation(4.0, 0, 0.9),
            noon_expectation(4.0, 0, -2.3)
        );
    }

    #[test]
    fn noon_fringe_has_period_two_pi_over_order() {
        for k in 1..=4 {
            let phi = 0.23;
            let shifted = phi + 2.0 * PI / 4.0 * k as f64;
            assert_rel(
                noon_expectation(6.0, 4, shifted),
                noon_expectation(6.0, 4, phi),
                1e-12,
                "period",
            );
        }
    }

    #[test]
    fn noon_variance_is_peak_minus_mean_squared() {
        let peak = noon_visibility(5.0, 5);
        let phi = 0.31;
        let mean = noon_expectation(5.0, 5, phi);
        assert_rel(
            noon_variance(5.0, 5, phi),
            peak - mean * mean,
            1e-14,
            "variance",
        );
        // Order 0: second moment doubles.
        let peak0 = noon_visibility(5.0, 0);
        assert_rel(
            noon_variance(5.0, 0, 0.0),
            2.0 * peak0 - peak0 * peak0,
            1e-14,
            "variance order 0",
        );
    }

    #[test]
    fn noon_sensitivity_matches_frozen_values() {
        // nbar = order = 2 at the half-fringe point equals e^2 / 4.
        assert_rel(
            noon_sensitivity_sq(2.0, 2, PI / 4.0).unwrap(),
            1.8472640247326626,
            1e-12,
            "noon sens (2,2,pi/4)",
        );
        // Log-domain evaluation stays finite deep in the exponential regime.
        assert_rel(
            noon_sensitivity_sq(100.0, 100, PI / 200.0).unwrap(),
            1.5900889361820152e27,
            1e-10,
            "noon sens (100,100,pi/200)",
        );
    }

    #[test]
    fn noon_sensitivity_is_undefined_at_stationary_points() {
        assert_eq!(noon_sensitivity_sq(4.0, 4, 0.0), None);
        assert_eq!(noon_sensitivity_sq(4.0, 0, 0.3), None);
        assert_eq!(noon_sensitivity_sq(0.0, 3, 0.3), None);
        // Stationarity is tested on the exact float zero only: sin(order*phi)
        // at phi = pi/order is ~1e-16, not 0.0, and the quotient is defined.
        assert!(noon_sensitivity_sq(4.0, 4, PI / 4.0).is_some());
    }

    #[test]
    fn optimal_sensitivity_matches_frozen_values() {
        assert_rel(noon_sensitivity_optimal(1).exact, E, 1e-12, "optimal(1)");
        assert_rel(
            noon_sensitivity_optimal(10).exact,
            40.92397520701164,
            1e-12,
            "optimal(10)",
        );
        assert_rel(
            noon_sensitivity_optimal(20).exact,
            14754.492227623634,
            1e-12,
            "optimal(20)",
        );
        // The operating-point substitution is consistent with the general form.
        for n in [2usize, 5, 10, 20] {
            let sub = noon_sensitivity_sq(n as f64, n, PI / (2.0 * n as f64)).unwrap();
            assert_rel(
                sub,
                noon_sensitivity_optimal(n).exact,
                1e-11,
                "substitution",
            );
        }
    }

    #[test]
    fn stirling_form_tracks_exact_optimum() {
        let ratios = [
            (10usize, 0.9917040395560615),
            (20, 0.9958423473771196),
            (30, 0.9972261792398857),
        ];
        for (n, want) in ratios {
            let o = noon_sensitivity_optimal(n);
            assert_rel(o.stirling / o.exact, want, 1e-10, "stirling ratio");
        }
        for n in 10..=30 {
            let o = noon_sensitivity_optimal(n);
            let ratio = o.stirling / o.exact;
            assert!(
                (0.95..=1.05).contains(&ratio),
                "ratio {ratio} out of band at {n}"
            );
        }
    }

    #[test]
    fn optimal_nbar_search_finds_the_order() {
        for order in [1usize, 3, 10, 40] {
            let x = optimal_nbar_for_order(order);
            assert!(
                (x - order as f64).abs() < 1e-6,
                "argmax for order {order} came out {x}"
            );
        }
        // Strict unimodality around the maximum.
        assert!(noon_visibility(8.0, 10) < noon_visibility(10.0, 10));
        assert!(noon_visibility(12.0, 10) < noon_visibility(10.0, 10));
    }

    #[test]
    fn nu_expectation_matches_frozen_values() {
        assert_rel(
            nu_expectation(20.0, 0.0, false),
            9.079985952496970e-5,
            1e-13,
            "nu(20,0)",
        );
        assert_rel(
            nu_expectation(4.0, PI / 8.0, false),
            0.16762397608332519,
            1e-13,
            "nu exact (4,pi/8)",
        );
        assert_rel(
            nu_expectation(4.0, PI / 8.0, true),
            0.19139299302082185,
            1e-13,
            "nu approx (4,pi/8)",
        );
        assert_rel(
            nu_expectation(4.0, 0.3, false),
            0.20554832559090874,
            1e-13,
            "nu exact (4,0.3)",
        );
        // The two forms coincide at the origin.
        assert_rel(
            nu_expectation(7.0, 0.0, true),
            nu_expectation(7.0, 0.0, false),
            1e-15,
            "origin agreement",
        );
    }

    #[test]
    fn nu_variance_has_phase_free_second_moment() {
        let second = |phi: f64| nu_variance(4.0, phi) + nu_expectation(4.0, phi, false).powi(2);
        assert_rel(second(0.0), 0.30730184425069374, 1e-13, "nu second moment");
        assert_rel(second(1.1), second(0.0), 1e-13, "phase independence");
    }

    #[test]
    fn nu_sensitivity_matches_frozen_values() {
        assert_rel(
            nu_sensitivity_sq(4.0, PI / 8.0).unwrap(),
            1.5395576495815030,
            1e-10,
            "nu sens (4,pi/8)",
        );
        assert_rel(
            nu_sensitivity_sq(20.0, PI / 40.0).unwrap(),
            202.86164931151303,
            1e-10,
            "nu sens (20,pi/40)",
        );
        assert_eq!(nu_sensitivity_sq(4.0, 0.0), None);
    }

    #[test]
    fn nu_minimum_estimate_runs_a_pi_factor_high() {
        // The quoted closed-form minimum is asymptotic; at nbar = 20 it sits
        // a factor ~2.93 (tending to pi) above the true swept minimum near
        // phi = pi / (2 nbar).  Freeze that ratio so the offset is tracked.
        assert_rel(
            nu_sensitivity_min(1.0),
            3.1348860808481865,
            1e-12,
            "nu min (1)",
        );
        assert_rel(
            nu_sensitivity_min(20.0),
            594.8703549816745,
            1e-12,
            "nu min (20)",
        );
        let ratio = nu_sensitivity_min(20.0) / nu_sensitivity_sq(20.0, PI / 40.0).unwrap();
        assert_rel(ratio, 2.9323943534945604, 1e-10, "estimate / exact ratio");
    }

    #[test]
    fn mu_expectation_matches_frozen_values() {
        assert_rel(
            mu_expectation(100.0, 0.1),
            0.6067833492179677,
            1e-13,
            "mu(100,0.1)",
        );
        assert_rel(
            mu_small_angle(100.0, 0.1),
            0.6065306597126334,
            1e-13,
            "gauss(100,0.1)",
        );
        // The Gaussian form is within 0.1% at nbar phi^2 ~ 1.
        let rel_gap = (mu_small_angle(100.0, 0.1) / mu_expectation(100.0, 0.1) - 1.0).abs();
        assert!(rel_gap < 1e-3, "gap {rel_gap}");
        assert_rel(
            mu_small_angle(100.0, 0.05),
            0.8824969025845954,
            1e-13,
            "gauss(100,0.05)",
        );
        assert_rel(
            mu_expectation(100.0, 0.05),
            0.8825198826589050,
            1e-13,
            "mu(100,0.05)",
        );
        // Even and 2*pi-periodic.
        assert_eq!(mu_expectation(9.0, 0.4), mu_expectation(9.0, -0.4));
        assert_rel(
            mu_expectation(9.0, 0.4 + 2.0 * PI),
            mu_expectation(9.0, 0.4),
            1e-12,
            "periodicity",
        );
    }

    #[test]
    fn mu_variance_complements_mean_squared() {
        for phi in [0.0, 0.01, 0.4, 2.0] {
            let m = mu_expectation(30.0, phi);
            assert_rel(mu_variance(30.0, phi), 1.0 - m * m, 1e-13, "1 - mean^2");
        }
    }

    #[test]
    fn mu_sensitivity_matches_frozen_values() {
        assert_rel(
            mu_sensitivity_sq(1.0, PI / 2.0),
            6.389056098930650,
            1e-12,
            "mu sens (1,pi/2) = e^2 - 1",
        );
        assert_rel(
            mu_sensitivity_sq(100.0, 0.3),
            8.673443792017037,
            1e-12,
            "mu sens (100,0.3)",
        );
        assert_rel(
            mu_sensitivity_sq(100.0, 0.02),
            0.010203707037743481,
            1e-12,
            "mu sens (100,0.02)",
        );
        // Shot-noise limit attained at the origin.
        assert_rel(
            mu_sensitivity_sq(100.0, 0.0),
            0.01,
            1e-14,
            "origin = 1/nbar",
        );
    }

    #[test]
    fn mu_sensitivity_series_meets_direct_branch() {
        for nbar in [1.0, 4.0, 20.0, 100.0] {
            let phi = MU_SERIES_SWITCH;
            let series = mu_sensitivity_sq(nbar, phi);
            let s = (phi / 2.0f64).sin();
            let d = nbar * phi.sin();
            let direct = (4.0 * nbar * s * s).exp_m1() / (d * d);
            assert_rel(series, direct, 1e-9, "branch continuity");
            // Just above the switch the public function takes the direct branch.
            assert_rel(
                mu_sensitivity_sq(nbar, phi * (1.0 + 1e-7)),
                direct,
                1e-6,
                "direct side",
            );
        }
    }

    #[test]
    fn mu_sensitivity_never_beats_shot_noise() {
        for nbar in [1.0, 4.0, 20.0, 100.0] {
            let mut prev = mu_sensitivity_sq(nbar, 0.0);
            for k in 1..=40 {
                let phi = k as f64 * (PI / 2.0) / 40.0;
                let sens = mu_sensitivity_sq(nbar, phi);
                assert!(
                    sens >= ReferenceCurves::snl_sq(nbar) * (1.0 - 1e-12),
                    "sens {sens} below SNL at nbar={nbar}, phi={phi}"
                );
                assert!(sens >= prev, "not monotone at nbar={nbar}, phi={phi}");
                prev = sens;
            }
        }
    }

    #[test]
    fn reference_curves_behave() {
        assert_eq!(ReferenceCurves::snl_sq(100.0), 0.01);
        assert_eq!(ReferenceCurves::hl_sq(100.0), 1e-4);
        assert_rel(
            ReferenceCurves::classical_fringe(0.0),
            1.0,
            1e-15,
            "fringe max",
        );
        assert!(ReferenceCurves::classical_fringe(PI) < 1e-15);
        for nbar in [1.0, 2.0, 10.0, 400.0] {
            assert!(ReferenceCurves::hl_sq(nbar) <= ReferenceCurves::snl_sq(nbar));
        }
    }
}
