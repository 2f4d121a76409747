//! Interferometer optics: 50–50 beam splitter, mode-A phase shifter, mode
//! swap, and the composite Mach–Zehnder transform, acting on truncated
//! two-mode Fock states.
//!
//! Convention: the splitter is the real involutive mode map
//! (â†, b̂†) → ((â† + b̂†)/√2, (â† − b̂†)/√2) — the Hadamard matrix — and the
//! composite interferometer applies splitter · phase · splitter and then
//! exchanges the output ports, so that mode A is the dark port at φ = 0 and
//! carries amplitude i·α·e^{iφ/2}·sin(φ/2) for input |α, 0⟩. This
//! orientation is exactly what makes the exchange/parity identity checked by
//! the equivalence module hold; the variant without the port exchange is
//! kept as a negative control. One consequence of the dark-port orientation
//! is that phases do not compose additively — see
//! [`mzi_transform`] for the actual composition law.

use num_complex::Complex64;

use crate::fock::{
    choose_cutoff, make_two_mode_coherent, FockError, SourceParams, TwoModeFockState,
};

/// Identifier of the fixed optical phase/port convention, recorded in every
/// CSV header so output files are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpticsConvention {
    name: &'static str,
}

impl OpticsConvention {
    pub fn name(&self) -> &'static str {
        self.name
    }
}

/// The single supported convention: Hadamard splitter, output ports
/// exchanged so that A is dark at φ = 0.
pub const CONVENTION: OpticsConvention = OpticsConvention {
    name: "hadamard-dark-a",
};

/// 2×2 mode matrix S: coherent labels transform as α ↦ S·α, creation
/// operators as â† ↦ S₀₀â† + S₁₀b̂†, b̂† ↦ S₀₁â† + S₁₁b̂†.
type ModeMatrix = [[Complex64; 2]; 2];

fn hadamard() -> ModeMatrix {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Full interferometer mode matrix: swap · H · diag(e^{iφ}, 1) · H, which
/// expands to ½·[[e^{iφ}−1, e^{iφ}+1], [e^{iφ}+1, e^{iφ}−1]].
fn mzi_mode_matrix(phi: f64) -> ModeMatrix {
    let a = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    let d = (a - one) * 0.5;
    let s = (a + one) * 0.5;
    [[d, s], [s, d]]
}

/// Negative-control variant without the output-port exchange (mode A is the
/// bright port at φ = 0). This variant composes additively in φ but breaks
/// the exchange/parity identity.
fn mzi_mode_matrix_flipped(phi: f64) -> ModeMatrix {
    let a = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    let d = (a - one) * 0.5;
    let s = (a + one) * 0.5;
    [[s, d], [d, s]]
}

/// Apply a mode matrix block-by-block over total photon number T. Within
/// block T the unitary is the T-fold symmetric power of S, built from block
/// T−1 by a two-term recurrence (append one photon to an input mode, route
/// it through S). Blocks are evaluated exactly, so states supported on
/// n + m ≤ cutoff transform unitarily with no truncation loss; mass on
/// blocks crossing the square grid boundary is clipped there.
fn apply_mode_matrix_generic(s: &TwoModeFockState, sm: &ModeMatrix) -> TwoModeFockState {
    let k = s.cutoff();
    let kk = k + 1;
    let zero = Complex64::new(0.0, 0.0);
    let amps = s.amps();
    let mut out = vec![zero; kk * kk];
    out[0] = amps[0];

    // Highest occupied total photon number; higher blocks stay zero.
    let mut t_support = 0;
    for n in 0..kk {
        for m in 0..kk {
            if amps[n * kk + m] != zero {
                t_support = t_support.max(n + m);
            }
        }
    }

    let sqrt_t: Vec<f64> = (0..=t_support).map(|i| (i as f64).sqrt()).collect();

    // w_prev: block-(t−1) matrix, row-major t×t, entry (p, n) = ⟨p, t−1−p|Û|n, t−1−n⟩.
    let mut w_prev: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    let mut w_cur: Vec<Complex64> = Vec::new();
    for t in 1..=t_support {
        w_cur.clear();
        w_cur.resize((t + 1) * (t + 1), zero);
        for p in 0..=t {
            // Input |0, t⟩ is |0, t−1⟩ with one photon appended to mode B.
            let mut acc = zero;
            if p >= 1 {
                acc += sm[0][1] * sqrt_t[p] * w_prev[(p - 1) * t];
            }
            if p < t {
                acc += sm[1][1] * sqrt_t[t - p] * w_prev[p * t];
            }
            w_cur[p * (t + 1)] = acc / sqrt_t[t];
            // Input |n, t−n⟩, n ≥ 1, is |n−1, t−n⟩ with one photon appended
            // to mode A.
            for n in 1..=t {
                let mut acc = zero;
                if p >= 1 {
                    acc += sm[0][0] * sqrt_t[p] * w_prev[(p - 1) * t + (n - 1)];
                }
                if p < t {
                    acc += sm[1][0] * sqrt_t[t - p] * w_prev[p * t + (n - 1)];
                }
                w_cur[p * (t + 1) + n] = acc / sqrt_t[n];
            }
        }

        // Contract the block matrix with the in-grid slice of the input block.
        let n_lo = t.saturating_sub(k);
        let n_hi = t.min(k);
        let any_input = (n_lo..=n_hi).any(|n| amps[n * kk + (t - n)] != zero);
        if any_input {
            for p in n_lo..=n_hi {
                let mut acc = zero;
                for n in n_lo..=n_hi {
                    acc += w_cur[p * (t + 1) + n] * amps[n * kk + (t - n)];
                }
                out[p * kk + (t - p)] = acc;
            }
        }
        std::mem::swap(&mut w_prev, &mut w_cur);
    }
    TwoModeFockState::from_parts(k, out, None)
}

fn apply_mode_matrix(s: &TwoModeFockState, sm: &ModeMatrix) -> TwoModeFockState {
    if let Some((a, b)) = s.coherent_label() {
        // Product coherent states stay product coherent under linear optics;
        // transform the labels and rebuild the grid exactly.
        let a2 = sm[0][0] * a + sm[0][1] * b;
        let b2 = sm[1][0] * a + sm[1][1] * b;
        make_two_mode_coherent(a2, b2, s.cutoff())
            .expect("transformed coherent amplitudes stay finite")
    } else {
        apply_mode_matrix_generic(s, sm)
    }
}

/// 50–50 beam splitter: coherent labels map to ((α_a+α_b)/√2, (α_a−α_b)/√2).
pub fn beam_splitter_50_50(s: &TwoModeFockState) -> TwoModeFockState {
    apply_mode_matrix(s, &hadamard())
}

/// Phase shifter on mode A: c_{n,m} → e^{inφ} c_{n,m}. Exactly norm
/// preserving; coherent labels map to (e^{iφ}α_a, α_b).
pub fn phase_shift_mode_a(s: &TwoModeFockState, phi: f64) -> TwoModeFockState {
    let k = s.cutoff();
    let kk = k + 1;
    let mut amps = s.amps().to_vec();
    for n in 0..kk {
        let rot = Complex64::from_polar(1.0, n as f64 * phi);
        for m in 0..kk {
            amps[n * kk + m] *= rot;
        }
    }
    let label = s
        .coherent_label()
        .map(|(a, b)| [a * Complex64::from_polar(1.0, phi), b]);
    TwoModeFockState::from_parts(k, amps, label)
}

/// Exchange the two modes: c_{n,m} → c_{m,n}.
pub fn swap_modes(s: &TwoModeFockState) -> TwoModeFockState {
    let k = s.cutoff();
    let kk = k + 1;
    let amps = s.amps();
    let mut out = vec![Complex64::new(0.0, 0.0); kk * kk];
    for n in 0..kk {
        for m in 0..kk {
            out[m * kk + n] = amps[n * kk + m];
        }
    }
    let label = s.coherent_label().map(|(a, b)| [b, a]);
    TwoModeFockState::from_parts(k, out, label)
}

/// Full Mach–Zehnder transform under the fixed convention (dark port A):
/// equivalent to splitter → phase φ on A → splitter → port exchange, applied
/// here as a single composed mode matrix.
///
/// Input |α, 0⟩ yields mode amplitudes (i·α·e^{iφ/2}·sin(φ/2),
/// α·e^{iφ/2}·cos(φ/2)), i.e. output powers n̄·sin²(φ/2) and n̄·cos²(φ/2).
///
/// Composition: because of the port exchange, phases do not add directly;
/// instead mzi(φ₂) ∘ mzi(φ₁) = Π_total · mzi(φ₁+φ₂+π), where Π_total flips
/// the sign of every odd-total-photon-number amplitude (both mode labels
/// negated). The variant without the exchange, [`mzi_transform_flipped`],
/// composes additively but has mode A bright at φ = 0 and fails the
/// exchange/parity identity.
pub fn mzi_transform(s: &TwoModeFockState, phi: f64) -> TwoModeFockState {
    apply_mode_matrix(s, &mzi_mode_matrix(phi))
}

/// Negative-control interferometer without the output-port exchange; mode A
/// is the bright port at φ = 0.
pub fn mzi_transform_flipped(s: &TwoModeFockState, phi: f64) -> TwoModeFockState {
    apply_mode_matrix(s, &mzi_mode_matrix_flipped(phi))
}

/// State inside the interferometer after the input splitter and phase
/// accumulation: |e^{iφ}√(n̄/2), √(n̄/2)⟩. This is the state the direct
/// (non-parity) detection schemes measure.
///
/// Cutoff policy: `choose_cutoff(n̄, tail_tol/2)`, budgeting half the
/// tolerance per mode so the two-mode truncation deficit stays below
/// `tail_tol`.
pub fn probe_state(params: &SourceParams, tail_tol: f64) -> Result<TwoModeFockState, FockError> {
    let cutoff = choose_cutoff(params.nbar, tail_tol / 2.0)?;
    let r = (params.nbar / 2.0).sqrt();
    make_two_mode_coherent(
        Complex64::from_polar(r, params.phi),
        Complex64::new(r, 0.0),
        cutoff,
    )
}

/// Laser input |α, 0⟩ with α = √n̄, for feeding [`mzi_transform`].
///
/// Cutoff policy: `choose_cutoff(2n̄, tail_tol/2)` — all the power sits in
/// one mode here, and downstream interferometer outputs can concentrate up
/// to the full n̄ in either mode, so the per-mode Poisson parameter to cover
/// is n̄ rather than n̄/2. Total photon number is conserved by the
/// interferometer and this state is supported on n + m ≤ cutoff, so the
/// whole transform chain is exactly unitary on the truncated grid.
pub fn interferometer_input(
    params: &SourceParams,
    tail_tol: f64,
) -> Result<TwoModeFockState, FockError> {
    let cutoff = choose_cutoff(2.0 * params.nbar, tail_tol / 2.0)?;
    make_two_mode_coherent(
        Complex64::new(params.alpha(), 0.0),
        Complex64::new(0.0, 0.0),
        cutoff,
    )
}
