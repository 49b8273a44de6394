//! Independent verification in a truncated Fock space.
//!
//! The rest of the crate never leaves the coherent-dyad manifold; this module
//! deliberately does. A dyad is expanded into an explicit `(n_max+1)²` matrix
//! and pushed through fourth-order explicit integration of the simultaneous
//! conditional-Kerr + photon-loss generator
//!
//! ```text
//! dO/ds = i·θ̇_ket·n̂O − i·θ̇_bra·On̂ + γ̇·(aOa† − ½n̂O − ½On̂)
//! ```
//!
//! so the closed-form channel results can be checked against a route that
//! shares none of their algebra. Amplitudes are restricted to a few photons
//! (the cost is O(n_max²) per step); the large-α regime is cross-checked by
//! the continuum formula instead.

use num_complex::Complex64;

use crate::coherent::{fock_amplitude_with_limit, CoherentDyad};
use crate::error::{Error, Result};

/// Dense operator on a Fock space truncated at `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    n_max: usize,
    data: Vec<Complex64>,
}

impl FockOperator {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            n_max,
            data: vec![Complex64::new(0.0, 0.0); (n_max + 1) * (n_max + 1)],
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim() + n]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        let d = self.dim();
        self.data[m * d + n] = value;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}

/// Truncation level adequate for a coherent amplitude `a`:
/// `⌈|a|² + 8|a| + 20⌉` keeps the dyad's tail mass below ~1e−10.
pub fn required_n_max(amp: f64) -> usize {
    (amp.abs().powi(2) + 8.0 * amp.abs() + 20.0).ceil() as usize
}

/// Expand a coherent dyad into Fock matrix elements
/// `O_mn = coeff·⟨m|ket⟩·⟨bra|n⟩`.
pub fn dyad_to_fock(d: &CoherentDyad, n_max: usize) -> Result<FockOperator> {
    let need = required_n_max(d.ket_amp.norm()).max(required_n_max(d.bra_amp.norm()));
    if n_max < need {
        return Err(Error::InvalidParam(format!(
            "n_max = {n_max} below the required truncation {need}"
        )));
    }
    let dim = n_max + 1;
    let mut ket = Vec::with_capacity(dim);
    let mut bra = Vec::with_capacity(dim);
    for n in 0..dim {
        ket.push(fock_amplitude_with_limit(d.ket_amp, n, n_max)?);
        bra.push(fock_amplitude_with_limit(d.bra_amp, n, n_max)?);
    }
    let mut op = FockOperator::zeros(n_max);
    for (m, ket_m) in ket.iter().enumerate() {
        let row = d.coeff * ket_m;
        for (n, bra_n) in bra.iter().enumerate() {
            op.set(m, n, row * bra_n.conj());
        }
    }
    Ok(op)
}

fn rhs(
    op: &[Complex64],
    dim: usize,
    theta_ket: f64,
    theta_bra: f64,
    gamma_t: f64,
    out: &mut [Complex64],
) {
    for m in 0..dim {
        for n in 0..dim {
            let idx = m * dim + n;
            let mut v = Complex64::new(0.0, theta_ket * m as f64 - theta_bra * n as f64)
                * op[idx]
                - gamma_t * 0.5 * (m + n) as f64 * op[idx];
            if m + 1 < dim && n + 1 < dim {
                let jump = ((m + 1) as f64 * (n + 1) as f64).sqrt();
                v += gamma_t * jump * op[(m + 1) * dim + n + 1];
            }
            out[idx] = v;
        }
    }
}

/// Integrate the joint Kerr + loss generator over the transit with classic
/// RK4 in `steps` equal steps. `theta_ket`/`theta_bra` are the total signed
/// rotations and `gamma_t` the total loss exposure; all three ramp linearly
/// in the integration parameter. `gamma_t = 0` reproduces a pure rotation.
pub fn evolve_dyad_oracle(
    op: &FockOperator,
    theta_ket: f64,
    theta_bra: f64,
    gamma_t: f64,
    steps: usize,
) -> Result<FockOperator> {
    if gamma_t < 0.0 || !gamma_t.is_finite() {
        return Err(Error::InvalidParam(format!("gamma_t = {gamma_t}")));
    }
    if steps == 0 {
        return Err(Error::InvalidParam("steps = 0".into()));
    }
    let dim = op.dim();
    let h = 1.0 / steps as f64;
    let len = dim * dim;
    let mut y = op.data.clone();
    let zero = Complex64::new(0.0, 0.0);
    let mut scratch = vec![zero; len];
    let mut k1 = vec![zero; len];
    let mut k2 = vec![zero; len];
    let mut k3 = vec![zero; len];
    let mut k4 = vec![zero; len];
    for _ in 0..steps {
        rhs(&y, dim, theta_ket, theta_bra, gamma_t, &mut k1);
        for i in 0..len {
            scratch[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(&scratch, dim, theta_ket, theta_bra, gamma_t, &mut k2);
        for i in 0..len {
            scratch[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(&scratch, dim, theta_ket, theta_bra, gamma_t, &mut k3);
        for i in 0..len {
            scratch[i] = y[i] + h * k3[i];
        }
        rhs(&scratch, dim, theta_ket, theta_bra, gamma_t, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let evolved = FockOperator { n_max: op.n_max, data: y };
    // Loss only moves population downward, so the top level is populated only
    // if the initial truncation was too tight to begin with.
    let edge = evolved.get(op.n_max, op.n_max).norm();
    if edge > 1e-8 {
        return Err(Error::Truncation { tail: edge });
    }
    Ok(evolved)
}

/// Extracted dyad coefficient and structure residual.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceExtract {
    /// `tr(O·|v⟩⟨u|)`, exact when `O = 𝒞|u⟩⟨v|`.
    pub coherence: Complex64,
    /// Frobenius norm of `O − 𝒞|u⟩⟨v|`.
    pub residual: f64,
}

fn extract_raw(op: &FockOperator, u: Complex64, v: Complex64) -> Result<CoherenceExtract> {
    let dim = op.dim();
    let mut fu = Vec::with_capacity(dim);
    let mut fv = Vec::with_capacity(dim);
    for n in 0..dim {
        fu.push(fock_amplitude_with_limit(u, n, op.n_max)?);
        fv.push(fock_amplitude_with_limit(v, n, op.n_max)?);
    }
    let mut coherence = Complex64::new(0.0, 0.0);
    for (m, fu_m) in fu.iter().enumerate() {
        for (n, fv_n) in fv.iter().enumerate() {
            coherence += op.get(m, n) * fv_n * fu_m.conj();
        }
    }
    let mut residual_sqr = 0.0;
    for (m, fu_m) in fu.iter().enumerate() {
        for (n, fv_n) in fv.iter().enumerate() {
            let ideal = coherence * fu_m * fv_n.conj();
            residual_sqr += (op.get(m, n) - ideal).norm_sqr();
        }
    }
    Ok(CoherenceExtract {
        coherence,
        residual: residual_sqr.sqrt(),
    })
}

/// Read the scalar 𝒞 out of an operator expected to be `𝒞·|u⟩⟨v|` (unit
/// coherent states) and measure how far it is from that form. A residual
/// above 1e−6 falsifies the coherent-dyad-preservation claim and is an error.
pub fn extract_coherence(op: &FockOperator, u: Complex64, v: Complex64) -> Result<CoherenceExtract> {
    let extract = extract_raw(op, u, v)?;
    if extract.residual > 1e-6 {
        return Err(Error::StructureResidual {
            residual: extract.residual,
        });
    }
    Ok(extract)
}

/// Result of an adaptive oracle run for the rotating-ket cross dyad.
#[derive(Debug, Clone, Copy)]
pub struct OracleRun {
    pub coherence: Complex64,
    pub residual: f64,
    pub steps: usize,
    pub n_max: usize,
}

/// Evolve `|α⟩⟨α|` with the ket rotating by `θ` while both sides decay
/// (`γt = θ/(χ/γ)`), then extract 𝒞 at the known endpoint amplitudes.
///
/// Step count starts above the RK4 stability bound for the loss generator and
/// doubles until the extracted 𝒞 moves by less than 1e−8.
pub fn oracle_coherence(alpha0: f64, theta: f64, chi_over_gamma: f64) -> Result<OracleRun> {
    if !chi_over_gamma.is_finite() || chi_over_gamma <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "chi_over_gamma = {chi_over_gamma}"
        )));
    }
    if !(0.0..=4.0).contains(&alpha0) {
        return Err(Error::InvalidParam(format!(
            "alpha0 = {alpha0}: the Fock oracle is restricted to alpha ≤ 4 \
             (O(n_max²) per step); use the continuum formula for large amplitudes"
        )));
    }
    let gamma_t = theta / chi_over_gamma;
    let n_max = required_n_max(alpha0);
    let initial = dyad_to_fock(
        &CoherentDyad::projector(Complex64::new(alpha0, 0.0)),
        n_max,
    )?;
    let amp_end = alpha0 * (-0.5 * gamma_t).exp();
    let u = Complex64::new(amp_end, 0.0) * Complex64::cis(theta);
    let v = Complex64::new(amp_end, 0.0);

    // |λ|·h ≲ 2.8 keeps RK4 stable; the stiffest eigenvalue is ~γt·n_max.
    let stability = (gamma_t + theta.abs()) * n_max as f64 / 2.0;
    let mut steps = 128usize;
    while (steps as f64) < stability {
        steps *= 2;
    }
    // Double until the extracted 𝒞 settles to 1e−8 and the whole operator is
    // within 1e−7 of dyad form (intermediate rungs may carry larger RK4
    // truncation residuals; only the converged result is judged).
    let mut prev = extract_raw(
        &evolve_dyad_oracle(&initial, theta, 0.0, gamma_t, steps)?,
        u,
        v,
    )?;
    loop {
        steps *= 2;
        if steps > 1 << 18 {
            return Err(Error::InvalidParam(
                "oracle failed to converge to 1e-8".into(),
            ));
        }
        let cur = extract_raw(
            &evolve_dyad_oracle(&initial, theta, 0.0, gamma_t, steps)?,
            u,
            v,
        )?;
        if (cur.coherence - prev.coherence).norm() < 1e-8 && cur.residual < 1e-7 {
            if cur.residual > 1e-6 {
                return Err(Error::StructureResidual {
                    residual: cur.residual,
                });
            }
            return Ok(OracleRun {
                coherence: cur.coherence,
                residual: cur.residual,
                steps,
                n_max,
            });
        }
        prev = cur;
    }
}
