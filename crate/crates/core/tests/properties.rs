//! Property tests for the algebraic invariants of the dyad calculus and the
//! loss channel.

use num_complex::Complex64;
use proptest::prelude::*;

use kerr_parity::channel::{
    coherence_closed_form, pure_loss_dyad, traverse_medium, ChannelParams,
};
use kerr_parity::coherent::{fock_amplitude, homodyne_kernel, overlap, CoherentDyad};
use kerr_parity::gate::{distance_for_theta, theta_for_distance, Detection};

fn amp(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Simpson quadrature of the kernel over a window wide enough for both
/// amplitudes.
fn kernel_integral(a: Complex64, b: Complex64) -> Complex64 {
    let center = 0.5 * (a.re + b.re);
    let spread = (a.re - b.re).abs() * 0.5 + 8.0;
    let (lo, hi) = (center - spread, center + spread);
    let n = 6000;
    let h = (hi - lo) / n as f64;
    let mut sum = homodyne_kernel(lo, a, b) + homodyne_kernel(hi, a, b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * homodyne_kernel(lo + i as f64 * h, a, b);
    }
    sum * (h / 3.0)
}

proptest! {
    #[test]
    fn overlap_is_conjugate_symmetric(
        ar in -5.0..5.0f64, ai in -5.0..5.0f64,
        br in -5.0..5.0f64, bi in -5.0..5.0f64,
    ) {
        let a = amp(ar, ai);
        let b = amp(br, bi);
        let lhs = overlap(a, b);
        let rhs = overlap(b, a).conj();
        prop_assert!((lhs - rhs).norm() <= 1e-14 * lhs.norm().max(1e-30));
        prop_assert!(lhs.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn rotation_and_displacement_preserve_weight(
        cr in -1.0..1.0f64, ci in -1.0..1.0f64,
        kr in -4.0..4.0f64, ki in -4.0..4.0f64,
        br in -4.0..4.0f64, bi in -4.0..4.0f64,
        tk in -6.3..6.3f64, tb in -6.3..6.3f64,
        dr in -3.0..3.0f64, di in -3.0..3.0f64,
    ) {
        let d = CoherentDyad::new(amp(cr, ci), amp(kr, ki), amp(br, bi));
        let w = d.coeff.norm();
        prop_assert!((d.rotated(tk, tb).coeff.norm() - w).abs() <= 1e-14);
        prop_assert!((d.displaced(amp(dr, di)).coeff.norm() - w).abs() <= 1e-14 * w.max(1.0));
    }

    #[test]
    fn kernel_integral_equals_overlap(
        ar in -3.0..3.0f64, ai in -3.0..3.0f64,
        br in -3.0..3.0f64, bi in -3.0..3.0f64,
    ) {
        let a = amp(ar, ai);
        let b = amp(br, bi);
        let quad = kernel_integral(a, b);
        let closed = overlap(a, b);
        prop_assert!(
            (quad - closed).norm() <= 1e-8,
            "quadrature {quad} vs overlap {closed}"
        );
    }

    #[test]
    fn fock_amplitude_recurrence_holds(
        ar in -3.0..3.0f64, ai in -3.0..3.0f64, n in 1usize..60,
    ) {
        prop_assume!(ar.abs() + ai.abs() > 1e-3);
        let a = amp(ar, ai);
        let prev = fock_amplitude(a, n - 1).unwrap();
        let cur = fock_amplitude(a, n).unwrap();
        let expected = a / (n as f64).sqrt() * prev;
        prop_assert!((cur - expected).norm() <= 1e-12 * cur.norm().max(1e-300));
    }

    #[test]
    fn loss_map_is_contractive_and_trace_preserving(
        kr in -3.0..3.0f64, ki in -3.0..3.0f64,
        br in -3.0..3.0f64, bi in -3.0..3.0f64,
        gamma_t in 0.0..5.0f64,
    ) {
        let diag = CoherentDyad::projector(amp(kr, ki));
        let out = pure_loss_dyad(&diag, gamma_t).unwrap();
        prop_assert!((out.coeff.norm() - 1.0).abs() <= 1e-14);

        let cross = CoherentDyad::new(amp(1.0, 0.0), amp(kr, ki), amp(br, bi));
        let out = pure_loss_dyad(&cross, gamma_t).unwrap();
        prop_assert!(out.coeff.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn stepper_equals_closed_form_sum(
        alpha in 0.1..3.0f64,
        theta in 0.01..1.0f64,
        log_cog in -1.0..1.0f64,
        steps in 16usize..2048,
    ) {
        // The product of per-step factors and the summed exponent are the
        // same algebra at any common step size.
        let cog = 10.0f64.powf(log_cog);
        let p = ChannelParams::new(alpha, theta, cog, theta / steps as f64).unwrap();
        let d = CoherentDyad::projector(amp(alpha, 0.0));
        let stepped = traverse_medium(&d, theta, 0.0, &p).unwrap();
        let closed = coherence_closed_form(&p).unwrap();
        prop_assert!(
            (stepped.coeff - closed).norm() <= 1e-10,
            "stepper {} vs closed {}",
            stepped.coeff,
            closed
        );
        prop_assert!(closed.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn detection_geometry_round_trips(
        alpha in 1.0..1e4f64,
        frac in 0.01..1.99f64,
    ) {
        for det in [Detection::Homodyne, Detection::Pnr] {
            let d = frac * alpha;
            let theta = theta_for_distance(alpha, d, det).unwrap();
            let back = distance_for_theta(alpha, theta, det);
            prop_assert!((back - d).abs() <= 1e-11 * d.max(1.0));
        }
    }
}
