//! Exact algebra on coherent-state dyads.
//!
//! A [`CoherentDyad`] is a weighted outer product `c·|a⟩⟨b|` of two
//! unit-normalized coherent states, the unit in which every probe-field
//! computation here is carried out: rotations and photon loss map a coherent
//! dyad to another coherent dyad times a scalar, so a handful of complex
//! numbers track the whole infinite-dimensional mode exactly.
//!
//! Conventions fixed once for the whole crate:
//! - displacement phase `D(δ)|a⟩ = e^{i·Im(δ·ā)}|a+δ⟩` (symmetric ordering);
//! - quadrature `X̂ = (a + a†)/2`, so a coherent state's X-distribution is
//!   Gaussian with mean `Re a` and variance 1/4.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap for Fock indices accepted by [`fock_amplitude`].
pub const DEFAULT_FOCK_LIMIT: usize = 1024;

/// `√(2/π)`, the peak value of the diagonal homodyne kernel.
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// A weighted coherent-state outer product `coeff·|ket_amp⟩⟨bra_amp|`.
///
/// Both coherent states are unit-normalized; `coeff` carries all weight and
/// phase. For dyads descending from a normalized physical state through the
/// maps in this crate, `|coeff| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentDyad {
    pub coeff: Complex64,
    pub ket_amp: Complex64,
    pub bra_amp: Complex64,
}

impl CoherentDyad {
    pub fn new(coeff: Complex64, ket_amp: Complex64, bra_amp: Complex64) -> Self {
        Self {
            coeff,
            ket_amp,
            bra_amp,
        }
    }

    /// The projector `|amp⟩⟨amp|` with unit coefficient.
    pub fn projector(amp: Complex64) -> Self {
        Self::new(Complex64::new(1.0, 0.0), amp, amp)
    }

    /// Phase-space rotation `|a⟩⟨b| → |a·e^{iθ_ket}⟩⟨b·e^{iθ_bra}|`.
    ///
    /// This is the conditional Kerr action: a Fock state `|n⟩` in the signal
    /// mode rotates the probe by `e^{inθ}`. The coefficient is untouched.
    pub fn rotated(&self, theta_ket: f64, theta_bra: f64) -> Self {
        Self {
            coeff: self.coeff,
            ket_amp: self.ket_amp * Complex64::cis(theta_ket),
            bra_amp: self.bra_amp * Complex64::cis(theta_bra),
        }
    }

    /// Displacement of both sides by `δ`, with the `e^{i·Im(δ·ā)}` phase
    /// convention applied to ket and (conjugated) bra. `|coeff|` is preserved.
    pub fn displaced(&self, delta: Complex64) -> Self {
        let ket_phase = (delta * self.ket_amp.conj()).im;
        let bra_phase = (delta * self.bra_amp.conj()).im;
        Self {
            coeff: self.coeff * Complex64::cis(ket_phase - bra_phase),
            ket_amp: self.ket_amp + delta,
            bra_amp: self.bra_amp + delta,
        }
    }

    /// Trace of the dyad as an operator: `coeff·⟨bra|ket⟩`.
    pub fn trace(&self) -> Complex64 {
        self.coeff * overlap(self.ket_amp, self.bra_amp)
    }
}

/// Coherent-state overlap `⟨b|a⟩ = exp(−|a|²/2 − |b|²/2 + b̄·a)`.
///
/// The real part of the exponent is evaluated as `−|a−b|²/2`, which is the
/// same quantity without the cancellation between `|a|²+|b|²` and `Re(b̄a)`.
pub fn overlap(a: Complex64, b: Complex64) -> Complex64 {
    let re = -0.5 * (a - b).norm_sqr();
    let im = (a * b.conj()).im;
    Complex64::new(re, im).exp()
}

/// Fock amplitude `⟨n|a⟩ = e^{−|a|²/2}·aⁿ/√(n!)` with the default index cap.
pub fn fock_amplitude(a: Complex64, n: usize) -> Result<Complex64> {
    fock_amplitude_with_limit(a, n, DEFAULT_FOCK_LIMIT)
}

/// Fock amplitude with an explicit truncation limit.
///
/// Evaluated through the log-Gamma function so that indices far beyond the
/// factorial-overflow point (n ≈ 170) stay finite.
pub fn fock_amplitude_with_limit(a: Complex64, n: usize, limit: usize) -> Result<Complex64> {
    if n > limit {
        return Err(Error::FockLimit { n, limit });
    }
    let r = a.norm();
    if r == 0.0 {
        return Ok(if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let nf = n as f64;
    let log_mag = -0.5 * r * r + nf * r.ln() - 0.5 * libm::lgamma(nf + 1.0);
    Ok(log_mag.exp() * Complex64::cis(nf * a.arg()))
}

/// Homodyne kernel `⟨X|a⟩⟨b|X⟩` for the quadrature `X̂ = (a + a†)/2`.
///
/// For `a = b` real this is the Gaussian density `N(a, 1/4)` evaluated at `X`;
/// integrated over all `X` it reproduces `overlap(a, b)` for any pair.
///
/// The exponent is assembled in a form with no large cancelling terms
/// (`m = (a + b̄)/2` is the complex midpoint):
/// real part `−2(X − Re m)² − (Re(a−b))²/2`, imaginary part
/// `Im(a·b̄) + 4(X − Re m)·Im m`. The naive product of `⟨X|a⟩` and `⟨b|X⟩`
/// overflows for well-separated dyads even though the kernel itself is tame.
pub fn homodyne_kernel(x: f64, a: Complex64, b: Complex64) -> Complex64 {
    let m_re = 0.5 * (a.re + b.re);
    let m_im = 0.5 * (a.im - b.im);
    let d = x - m_re;
    let re_diff = a.re - b.re;
    let re_exp = -2.0 * d * d - 0.5 * re_diff * re_diff;
    let im_exp = (a * b.conj()).im + 4.0 * d * m_im;
    SQRT_2_OVER_PI * Complex64::new(re_exp, im_exp).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Plain-sum Fock-basis overlap, the brute-force oracle for `overlap`.
    fn overlap_by_fock_sum(a: Complex64, b: Complex64, n_terms: usize) -> Complex64 {
        (0..=n_terms)
            .map(|n| {
                fock_amplitude_with_limit(a, n, n_terms).unwrap()
                    * fock_amplitude_with_limit(b, n, n_terms).unwrap().conj()
            })
            .sum()
    }

    /// Composite Simpson quadrature of the kernel over [lo, hi].
    fn kernel_integral(a: Complex64, b: Complex64, lo: f64, hi: f64, n: usize) -> Complex64 {
        let n = if n.is_multiple_of(2) { n } else { n + 1 };
        let h = (hi - lo) / n as f64;
        let mut sum = homodyne_kernel(lo, a, b) + homodyne_kernel(hi, a, b);
        for i in 1..n {
            let w = if !i.is_multiple_of(2) { 4.0 } else { 2.0 };
            sum += w * homodyne_kernel(lo + i as f64 * h, a, b);
        }
        sum * (h / 3.0)
    }

    #[test]
    fn overlap_of_state_with_itself_is_one() {
        for a in [c(0.0, 0.0), c(2.0, 0.0), c(-1.3, 2.4), c(0.0, 7.0)] {
            let o = overlap(a, a);
            assert!((o - 1.0).norm() < 1e-15, "overlap(a,a) = {o}");
        }
    }

    #[test]
    fn vacuum_overlap_magnitude() {
        let o = overlap(Complex64::new(0.0, 0.0), c(2.0, 0.0));
        assert!((o.norm() - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn overlap_matches_brute_force_fock_sum() {
        // |⟨2|2i⟩| = e^{-4}; 40 Fock terms leave a ~1e-30 tail at |a| = 2.
        let a = 2.0 * I;
        let b = c(2.0, 0.0);
        let closed = overlap(a, b);
        let summed = overlap_by_fock_sum(a, b, 40);
        assert!((closed.norm() - (-4.0f64).exp()).abs() < 1e-12);
        assert!((closed - summed).norm() < 1e-12, "closed {closed} vs sum {summed}");
    }

    #[test]
    fn rotation_identity_and_conditional_kerr_action() {
        let d = CoherentDyad::projector(c(1.7, 0.0));
        let same = d.rotated(0.0, 0.0);
        assert_eq!(d, same);

        // U_K|H⟩|α⟩ = |H⟩|αe^{iθ}⟩: ket side only.
        let theta = 0.3;
        let r = d.rotated(theta, 0.0);
        assert!((r.ket_amp - c(1.7, 0.0) * Complex64::cis(theta)).norm() < 1e-15);
        assert_eq!(r.bra_amp, d.bra_amp);
        assert_eq!(r.coeff, d.coeff);
    }

    #[test]
    fn rotation_composes() {
        let d = CoherentDyad::new(c(0.5, 0.2), c(1.0, -2.0), c(0.3, 0.0));
        let theta = 0.8124;
        let two_half = d.rotated(theta / 2.0, 0.0).rotated(theta / 2.0, 0.0);
        let once = d.rotated(theta, 0.0);
        assert!((two_half.ket_amp - once.ket_amp).norm() < 1e-14);
    }

    #[test]
    fn displacement_to_vacuum_and_back() {
        let alpha = c(3.0, 1.0);
        let d = CoherentDyad::projector(alpha);
        let centered = d.displaced(-alpha);
        assert!(centered.ket_amp.norm() < 1e-15);
        assert!(centered.bra_amp.norm() < 1e-15);
        assert!((centered.coeff.norm() - 1.0).abs() < 1e-15);

        let delta = c(-0.4, 2.2);
        let back = CoherentDyad::projector(c(0.0, 0.0))
            .displaced(delta)
            .displaced(-delta);
        assert!((back.coeff - 1.0).norm() < 1e-14);
        assert!(back.ket_amp.norm() < 1e-15);
    }

    #[test]
    fn displaced_ket_amplitude_matches_overlap_route() {
        // |⟨0|D(−α)|αe^{iθ}⟩| must equal |⟨α|αe^{iθ}⟩|, both in closed form
        // and against the truncated Fock sum.
        let alpha = 2.0;
        let theta = 0.7;
        let rotated = c(alpha, 0.0) * Complex64::cis(theta);
        let d = CoherentDyad::projector(rotated).displaced(c(-alpha, 0.0));
        assert!((d.ket_amp - (rotated - alpha)).norm() < 1e-14);

        let via_disp = (d.coeff * fock_amplitude(d.ket_amp, 0).unwrap()).norm();
        let via_overlap = overlap(rotated, c(alpha, 0.0)).norm();
        let via_sum = overlap_by_fock_sum(rotated, c(alpha, 0.0), 60).norm();
        assert!((via_disp - via_overlap).abs() < 1e-12);
        assert!((via_overlap - via_sum).abs() < 1e-10);
    }

    #[test]
    fn fock_amplitude_ground_cases() {
        assert_eq!(
            fock_amplitude(c(0.0, 0.0), 0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        // Poisson mass at n = 0 for |a| = π is e^{−π²}.
        let p = fock_amplitude(c(std::f64::consts::PI, 0.0), 0)
            .unwrap()
            .norm_sqr();
        assert!((p - (-std::f64::consts::PI.powi(2)).exp()).abs() < 1e-18);
    }

    #[test]
    fn fock_amplitudes_sum_to_unit_norm() {
        let total: f64 = (0..=60)
            .map(|n| fock_amplitude(c(3.0, 0.0), n).unwrap().norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "sum = {total}");
    }

    #[test]
    fn fock_amplitude_recurrence() {
        let a = c(1.4, -0.9);
        for n in 1..=40usize {
            let prev = fock_amplitude(a, n - 1).unwrap();
            let cur = fock_amplitude(a, n).unwrap();
            let expected = a / (n as f64).sqrt() * prev;
            assert!(
                (cur - expected).norm() <= 1e-12 * cur.norm().max(1e-300),
                "recurrence broken at n = {n}"
            );
        }
    }

    #[test]
    fn fock_amplitude_rejects_beyond_limit() {
        assert!(matches!(
            fock_amplitude(c(1.0, 0.0), DEFAULT_FOCK_LIMIT + 1),
            Err(Error::FockLimit { .. })
        ));
        assert!(fock_amplitude_with_limit(c(1.0, 0.0), 2000, 4000).is_ok());
    }

    #[test]
    fn kernel_peak_is_quarter_variance_gaussian() {
        let alpha = c(1.25, 0.0);
        let peak = homodyne_kernel(1.25, alpha, alpha);
        assert!((peak.re - SQRT_2_OVER_PI).abs() < 1e-14);
        assert!(peak.im.abs() < 1e-14);
    }

    #[test]
    fn kernel_integrates_to_overlap() {
        // Diagonal: normalization.
        let alpha = c(2.0, 0.0);
        let total = kernel_integral(alpha, alpha, -6.0, 10.0, 4000);
        assert!((total - 1.0).norm() < 1e-10);

        // Off-diagonal: ∫⟨X|1⟩⟨0|X⟩ dX = ⟨0|1⟩ = e^{−1/2}.
        let got = kernel_integral(c(1.0, 0.0), c(0.0, 0.0), -8.0, 9.0, 4000);
        assert!((got.re - (-0.5f64).exp()).abs() < 1e-8);
        assert!(got.im.abs() < 1e-10);

        // Complex pair well inside the |a|,|b| ≤ 10 working window.
        let a = c(3.0, 4.0);
        let b = c(-2.0, 1.5);
        let got = kernel_integral(a, b, -9.5, 11.5, 8000);
        assert!((got - overlap(a, b)).norm() < 1e-8);
    }
}
