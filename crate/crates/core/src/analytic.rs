//! Closed-form heralded-state fidelities for the canonical `|n0n0…⟩` event.
//!
//! Everything is a rational function of `η` and `t = (1+η)/2 + N`.

use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

pub use crate::states::state_fidelity_k;

/// Largest `k` accepted by the closed forms.
pub const K_MAX: usize = 64;
pub const DEFAULT_K_MAX: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwapFidelityResult {
    pub k: usize,
    pub n: usize,
    /// Heralding probability of the canonical pattern.
    pub k0: f64,
    pub k0_f: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

impl SwapFidelityResult {
    /// From the heralding weight `K₀` and `K₀F`.
    pub fn from_parts(k: usize, n: usize, k0: f64, k0_f: f64) -> Self {
        Self::new(k, n, k0, k0_f)
    }

    fn new(k: usize, n: usize, k0: f64, k0_f: f64) -> Self {
        let fidelity = k0_f / k0;
        Self { k, n, k0, k0_f, fidelity, infidelity: 1.0 - fidelity }
    }
}

/// Per-bin weights of the vacuum (`α₀₀`) and occupied (`α₁₁`) branches.
fn alphas(t: f64, eta: f64) -> (f64, f64) {
    let a00 = (t - 1.0) / t.powi(3);
    let a11 = (t - eta) * (t * t + 2.0 * eta - t * (1.0 + eta)) / t.powi(5);
    (a00, a11)
}

/// `|ge⟩⟨ge|` weight per bin.
fn diag_weight(t: f64, eta: f64) -> f64 {
    (3.0 * eta + 2.0 * t * (t - eta - 1.0)) / (2.0 * t.powi(4))
}

/// `|ge⟩⟨eg|` weight per bin.
fn coherence_weight(t: f64, eta: f64) -> f64 {
    eta / (2.0 * t.powi(4))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > K_MAX {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={K_MAX}, got {k}")));
    }
    Ok(())
}

/// Elements of the unnormalized heralded state over `{gg, ge, eg, ee}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoComponents {
    pub k: usize,
    /// `(α₀₀ α₁₁)^{k/2}`; the even-`k` value of `4ρ₁₁`.
    pub rho11_factor: f64,
    pub rho11: f64,
    pub rho44: f64,
    pub rho22: f64,
    pub rho23: f64,
    /// `ρ₂₃/ρ₃₃`.
    pub coherence_ratio: f64,
    /// Fidelity to `Φ⁺` within the `{ge, eg}` subspace.
    pub subspace_fidelity: f64,
}

impl RhoComponents {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho44 + 2.0 * self.rho22
    }
}

pub fn rho_components(p: ChannelParams, k: usize) -> Result<RhoComponents> {
    check_k(k)?;
    let (t, eta) = (p.t(), p.eta());
    let (a00, a11) = alphas(t, eta);
    let (hi, lo) = (k.div_ceil(2) as i32, (k / 2) as i32);
    let ratio = (eta / (2.0 * t * (t - eta - 1.0) + 3.0 * eta)).powi(k as i32);
    Ok(RhoComponents {
        k,
        rho11_factor: (a00 * a11).powf(k as f64 / 2.0),
        rho11: 0.25 * a11.powi(hi) * a00.powi(lo),
        rho44: 0.25 * a11.powi(lo) * a00.powi(hi),
        rho22: 0.25 * diag_weight(t, eta).powi(k as i32),
        rho23: 0.25 * coherence_weight(t, eta).powi(k as i32),
        coherence_ratio: ratio,
        subspace_fidelity: 0.5 + 0.5 * ratio,
    })
}

/// Single-photon encoding over `k` bins.
pub fn swap_fidelity_k(p: ChannelParams, k: usize) -> Result<SwapFidelityResult> {
    check_k(k)?;
    let (t, eta) = (p.t(), p.eta());
    let b = (t - 1.0) * (t - eta) * (t * t + 2.0 * eta - t * (1.0 + eta)) / t.powi(8);
    let c = diag_weight(t, eta);
    let ki = k as i32;
    let k0 = if k % 2 == 0 {
        0.5 * b.powi(ki / 2) + 0.5 * c.powi(ki)
    } else {
        let odd = (2.0 * t.powi(3) - 2.0 * eta * eta - 2.0 * t * t * (1.0 + eta)
            + t * eta * (3.0 + eta))
            / t.powi(5);
        0.25 * b.powi(ki / 2) * odd + 0.5 * c.powi(ki)
    };
    let k0_f = 0.25 * c.powi(ki) + 0.25 * coherence_weight(t, eta).powi(ki);
    Ok(SwapFidelityResult::new(k, 1, k0, k0_f))
}

/// Single photon, two bins, written out.
pub fn swap_fidelity_n1(p: ChannelParams) -> SwapFidelityResult {
    let (t, eta) = (p.t(), p.eta());
    let t8 = t.powi(8);
    let q = 3.0 * eta + 2.0 * t * (t - 1.0 - eta);
    let tr = (t - 1.0) * (t - eta) * (t * t + 2.0 * eta - t * (1.0 + eta)) / (2.0 * t8)
        + 0.5 * (q / (2.0 * t.powi(4))).powi(2);
    let trf = (q * q + eta * eta) / (16.0 * t8);
    SwapFidelityResult::new(2, 1, tr, trf)
}

/// Two photons, two bins.
pub fn swap_fidelity_n2(p: ChannelParams) -> SwapFidelityResult {
    let (t, e) = (p.t(), p.eta());
    let (t1, t2, t3, t4) = (t - 1.0, t * t, t.powi(3), t.powi(4));
    let tr = 32.0 * t1.powi(4) * t4 - 128.0 * (t - 2.0) * t1.powi(3) * t3 * e
        + 16.0 * t1 * t1 * t2 * (43.0 + 12.0 * (t - 4.0) * t) * e * e
        - 16.0 * t1 * t * (-47.0 + 2.0 * t * (43.0 + 4.0 * (t - 6.0) * t)) * e.powi(3)
        + (289.0 + 16.0 * t * (-47.0 + t * (43.0 + 2.0 * (t - 8.0) * t))) * e.powi(4);
    let trf = 8.0 * t1.powi(4) * t4 - 32.0 * (t - 2.0) * t1.powi(3) * t3 * e
        + 12.0 * t1 * t1 * t2 * (2.0 * t - 5.0) * (2.0 * t - 3.0) * e * e
        - 8.0 * (t - 2.0) * t1 * t * (13.0 + 4.0 * (t - 4.0) * t) * e.powi(3)
        + (85.0 + 4.0 * (t - 4.0) * t * (13.0 + 2.0 * (t - 4.0) * t)) * e.powi(4);
    let norm = 32.0 * t.powi(12);
    SwapFidelityResult::new(2, 2, tr / norm, trf / norm)
}

/// Dispatches on `(k, n)`; `n = 2` exists for `k = 2` only.
pub fn swap_fidelity(p: ChannelParams, k: usize, n: usize) -> Result<SwapFidelityResult> {
    match (k, n) {
        (_, 1) => swap_fidelity_k(p, k),
        (2, 2) => Ok(swap_fidelity_n2(p)),
        _ => Err(Error::InvalidParameter(format!(
            "no closed form for k = {k}, n = {n}"
        ))),
    }
}

/// `k` in `1..=k_max` maximizing the single-photon swap fidelity; ties go to
/// the smaller `k`.
pub fn optimal_k(p: ChannelParams, k_max: usize) -> Result<SwapFidelityResult> {
    check_k(k_max)?;
    let mut best = swap_fidelity_k(p, 1)?;
    for k in 2..=k_max {
        let r = swap_fidelity_k(p, k)?;
        if r.fidelity > best.fidelity {
            best = r;
        }
    }
    Ok(best)
}
