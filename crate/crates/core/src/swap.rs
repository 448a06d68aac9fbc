//! Midpoint Bell measurement: a 50/50 beam splitter per time bin, photon
//! counting at both output ports, and the two-qubit state it heralds.
//!
//! The heralded state is computed in Fock space bin by bin. For bin `i` with
//! counts `(c_A, c_B)` the detection vector is `vᵢ = U†|c_A c_B⟩`, and every
//! qubit-indexed element of the unnormalized heralded matrix is a product over
//! bins of `vᵢ† (Aᵢ[a,a'] ⊗ Bᵢ[b,b']) vᵢ`.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::analytic::SwapFidelityResult;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::fock::{self, laguerre, MultiModeOperator, TruncationConfig};
use crate::states::{channel_output, HybridDensity, QubitTimeBinSpec};

/// Below this heralding probability a pattern is treated as impossible.
pub const IMPOSSIBLE_EVENT_TOL: f64 = 1e-15;

/// Photon counts `(A_i, B_i)` per time bin.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DetectionPattern {
    counts: Vec<(usize, usize)>,
}

impl DetectionPattern {
    pub fn new(counts: Vec<(usize, usize)>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("a pattern needs at least one time bin".into()));
        }
        Ok(Self { counts })
    }

    /// From `A_1, B_1, A_2, B_2, …`.
    pub fn from_flat(flat: &[usize]) -> Result<Self> {
        if flat.is_empty() || flat.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "expected an even, non-zero number of counts, got {}",
                flat.len()
            )));
        }
        Self::new(flat.chunks(2).map(|c| (c[0], c[1])).collect())
    }

    /// `|1010…⟩`: one photon at port A in every bin.
    pub fn canonical(k: usize) -> Self {
        Self { counts: vec![(1, 0); k] }
    }

    /// `|n0n0⟩` for the two-bin `n`-photon encoding.
    pub fn canonical_for(spec: QubitTimeBinSpec) -> Self {
        Self { counts: vec![(spec.n(), 0); spec.k()] }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[(usize, usize)] {
        &self.counts
    }

    pub fn total_photons(&self) -> usize {
        self.counts.iter().map(|(a, b)| a + b).sum()
    }

    pub fn flat(&self) -> Vec<usize> {
        self.counts.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// Every pattern with one photon per bin.
    pub fn single_photon_patterns(k: usize) -> Vec<Self> {
        (0..1usize << k)
            .map(|mask| Self {
                counts: (0..k)
                    .map(|bin| if mask >> (k - 1 - bin) & 1 == 0 { (1, 0) } else { (0, 1) })
                    .collect(),
            })
            .collect()
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.flat().iter().map(|c| c.to_string()).collect();
        write!(f, "|{}⟩", parts.join(""))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum HeraldClass {
    PhiPlus,
    PhiMinus,
    PsiIndistinct,
    Invalid,
}

impl fmt::Display for HeraldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HeraldClass::PhiPlus => "PhiPlus",
            HeraldClass::PhiMinus => "PhiMinus",
            HeraldClass::PsiIndistinct => "PsiIndistinct",
            HeraldClass::Invalid => "Invalid",
        };
        f.write_str(s)
    }
}

/// Running parities `(P₁, P₂)` after each bin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityTrace {
    pub steps: Vec<(i8, i8)>,
}

impl ParityTrace {
    pub fn result(&self) -> (i8, i8) {
        self.steps.last().copied().unwrap_or((1, 1))
    }

    pub fn class(&self) -> HeraldClass {
        let (p1, p2) = self.result();
        if p1 == p2 {
            HeraldClass::PhiPlus
        } else {
            HeraldClass::PhiMinus
        }
    }
}

/// Parity bookkeeping for one-photon-per-bin patterns: a photon at port B
/// flips `P₂` in an odd-numbered bin and `P₁` in an even-numbered bin.
/// `None` if some bin is not `(1,0)` or `(0,1)`.
pub fn single_photon_parity(pattern: &DetectionPattern) -> Option<ParityTrace> {
    let (mut p1, mut p2) = (1i8, 1i8);
    let mut steps = Vec::with_capacity(pattern.k());
    for (bin, &counts) in pattern.counts.iter().enumerate() {
        match counts {
            (1, 0) => {}
            (0, 1) if bin % 2 == 0 => p2 = -p2,
            (0, 1) => p1 = -p1,
            _ => return None,
        }
        steps.push((p1, p2));
    }
    Some(ParityTrace { steps })
}

/// Both photons of each odd-numbered (or each even-numbered) bin bunched at
/// one port, every other bin empty: the `|EE⟩`/`|LL⟩` components.
fn is_bunched(pattern: &DetectionPattern, photons_per_bin: usize) -> bool {
    let pair = 2 * photons_per_bin;
    [0usize, 1].iter().any(|&parity| {
        pattern.counts.iter().enumerate().all(|(bin, &(a, b))| {
            if bin % 2 == parity {
                a + b == pair && (a == 0 || b == 0)
            } else {
                a == 0 && b == 0
            }
        })
    })
}

/// Classifies a single-photon (`n = 1`) detection pattern.
pub fn classify_single_photon(pattern: &DetectionPattern) -> HeraldClass {
    if let Some(trace) = single_photon_parity(pattern) {
        return trace.class();
    }
    if is_bunched(pattern, 1) {
        return HeraldClass::PsiIndistinct;
    }
    HeraldClass::Invalid
}

/// Detection events for the two-bin, two-photon encoding, as
/// `[A_1, B_1, A_2, B_2]`.
pub const TWO_PHOTON_TABLE: [([usize; 4], HeraldClass); 15] = [
    ([2, 0, 2, 0], HeraldClass::PhiPlus),
    ([0, 2, 0, 2], HeraldClass::PhiPlus),
    ([0, 2, 2, 0], HeraldClass::PhiPlus),
    ([2, 0, 0, 2], HeraldClass::PhiPlus),
    ([1, 1, 1, 1], HeraldClass::PhiPlus),
    ([2, 0, 1, 1], HeraldClass::PhiMinus),
    ([0, 2, 1, 1], HeraldClass::PhiMinus),
    ([1, 1, 2, 0], HeraldClass::PhiMinus),
    ([1, 1, 0, 2], HeraldClass::PhiMinus),
    ([4, 0, 0, 0], HeraldClass::PsiIndistinct),
    ([0, 4, 0, 0], HeraldClass::PsiIndistinct),
    ([2, 2, 0, 0], HeraldClass::PsiIndistinct),
    ([0, 0, 4, 0], HeraldClass::PsiIndistinct),
    ([0, 0, 0, 4], HeraldClass::PsiIndistinct),
    ([0, 0, 2, 2], HeraldClass::PsiIndistinct),
];

/// Exact lookup in [`TWO_PHOTON_TABLE`]; anything else, including any
/// pattern with `k != 2`, is `Invalid`.
pub fn classify_two_photon(pattern: &DetectionPattern) -> HeraldClass {
    let flat = pattern.flat();
    TWO_PHOTON_TABLE
        .iter()
        .find(|(row, _)| flat.as_slice() == row.as_slice())
        .map_or(HeraldClass::Invalid, |&(_, class)| class)
}

/// Dispatches on the encoding photon number.
pub fn classify(pattern: &DetectionPattern, n: usize) -> HeraldClass {
    match n {
        1 => classify_single_photon(pattern),
        2 if pattern.k() == 2 => classify_two_photon(pattern),
        _ => HeraldClass::Invalid,
    }
}

/// Two-qubit Bell states over `{gg, ge, eg, ee}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bell {
    /// `(|ge⟩ + |eg⟩)/√2`
    PhiPlus,
    /// `(|ge⟩ − |eg⟩)/√2`
    PhiMinus,
    /// `(|gg⟩ + |ee⟩)/√2`
    PsiPlus,
    /// `(|gg⟩ − |ee⟩)/√2`
    PsiMinus,
}

impl Bell {
    pub fn vector(self) -> Array1<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Array1::zeros(4);
        let (i, j, sign) = match self {
            Bell::PhiPlus => (1, 2, 1.0),
            Bell::PhiMinus => (1, 2, -1.0),
            Bell::PsiPlus => (0, 3, 1.0),
            Bell::PsiMinus => (0, 3, -1.0),
        };
        v[i] = C64::from(s);
        v[j] = C64::from(sign * s);
        v
    }
}

/// Normalized two-qubit state heralded by a detection pattern.
#[derive(Clone, Debug)]
pub struct HeraldedState {
    /// 4×4 over `{gg, ge, eg, ee}`, Alice's qubit first.
    pub rho: Array2<C64>,
    pub success_probability: f64,
    pub fidelity_phi_plus: f64,
}

impl HeraldedState {
    pub fn fidelity(&self, bell: Bell) -> f64 {
        let v = bell.vector();
        let rv = self.rho.dot(&v);
        v.iter().zip(rv.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    /// The heralded matrix before normalization; its trace is the success
    /// probability.
    pub fn unnormalized(&self) -> Array2<C64> {
        self.rho.mapv(|x| x * self.success_probability)
    }
}

/// `U†|c_A c_B⟩` as a `d × d` amplitude grid indexed `[A count, B count]`.
fn detection_amplitudes(
    u_dagger: &Array2<C64>,
    counts: (usize, usize),
    d: usize,
) -> Result<Array2<C64>> {
    let idx = fock::number_index(&[counts.0, counts.1], &[d, d])?;
    let col = u_dagger.column(idx);
    Ok(Array2::from_shape_fn((d, d), |(a, b)| col[a * d + b]))
}

/// `v† (X ⊗ Y) v` for `v` given as a grid: `Σ conj(V) ∘ (X V Yᵀ)`.
fn sandwich(v: &Array2<C64>, x: &Array2<C64>, y: &Array2<C64>) -> C64 {
    let xvy = x.dot(v).dot(&y.t());
    v.iter().zip(xvy.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Heralded state from the two channel-output states, for an arbitrary
/// pattern. Patterns outside the classification tables are allowed.
pub fn herald(
    alice: &HybridDensity,
    bob: &HybridDensity,
    pattern: &DetectionPattern,
) -> Result<HeraldedState> {
    let k = pattern.k();
    if alice.k() != k || bob.k() != k {
        return Err(Error::InvalidParameter(format!(
            "pattern has {k} bins but the states have {} and {}",
            alice.k(),
            bob.k()
        )));
    }
    let d = alice.d_sys();
    if bob.d_sys() != d {
        return Err(Error::InvalidParameter("Alice and Bob use different cutoffs".into()));
    }
    if let Some(&(a, b)) = pattern.counts.iter().find(|&&(a, b)| a + b >= d) {
        return Err(Error::Truncation(format!(
            "bin with counts ({a}, {b}) needs d_sys > {}, have {d}",
            a + b
        )));
    }
    let u_dagger = fock::beam_splitter_unitary(d)?.dagger();
    let mut weights = Array2::<C64>::from_elem((4, 4), C64::new(alice.prefactor() * bob.prefactor(), 0.0));
    for (bin, &counts) in pattern.counts.iter().enumerate() {
        let v = detection_amplitudes(u_dagger.matrix(), counts, d)?;
        for a in 0..2 {
            for ap in 0..2 {
                for b in 0..2 {
                    for bp in 0..2 {
                        let x = alice.block(bin, a, ap).matrix();
                        let y = bob.block(bin, b, bp).matrix();
                        weights[[2 * a + b, 2 * ap + bp]] *= sandwich(&v, x, y);
                    }
                }
            }
        }
    }
    let probability = weights.diag().iter().map(|x| x.re).sum::<f64>();
    if !(probability > IMPOSSIBLE_EVENT_TOL) {
        return Err(Error::ImpossibleEvent { probability });
    }
    let rho = weights.mapv(|x| x / probability);
    let mut state = HeraldedState { rho, success_probability: probability, fidelity_phi_plus: 0.0 };
    state.fidelity_phi_plus = state.fidelity(Bell::PhiPlus);
    Ok(state)
}

/// Alice and Bob each send the `spec` state through their own channel; the
/// midpoint detects `pattern`.
pub fn heralded_state(
    p_a: ChannelParams,
    p_b: ChannelParams,
    spec: QubitTimeBinSpec,
    pattern: &DetectionPattern,
    cfg: TruncationConfig,
) -> Result<HeraldedState> {
    if pattern.k() != spec.k() {
        return Err(Error::InvalidParameter(format!(
            "pattern has {} bins, state has {}",
            pattern.k(),
            spec.k()
        )));
    }
    let alice = channel_output(spec, p_a, cfg)?;
    let bob = if p_b == p_a { alice.clone() } else { channel_output(spec, p_b, cfg)? };
    herald(&alice, &bob, pattern)
}

/// Largest `k` the Fock-space oracle is asked to handle.
pub const ORACLE_K_MAX: usize = 6;

/// Cutoffs for oracle runs: `d_sys = n + 3`, environment grown to the
/// channel's thermal occupation.
pub fn oracle_config(p: ChannelParams, n: usize) -> TruncationConfig {
    TruncationConfig::for_encoding(n).fitted_to(p.nbar())
}

/// Oracle counterpart of the closed forms: identical channels on both sides,
/// canonical `|n0n0…⟩` pattern.
pub fn swap_fidelity_oracle(
    p: ChannelParams,
    spec: QubitTimeBinSpec,
    cfg: TruncationConfig,
) -> Result<SwapFidelityResult> {
    if spec.k() > ORACLE_K_MAX {
        return Err(Error::Intractable(format!(
            "k = {} exceeds the oracle limit k <= {ORACLE_K_MAX}; use the analytic method",
            spec.k()
        )));
    }
    let st = heralded_state(p, p, spec, &DetectionPattern::canonical_for(spec), cfg)?;
    let k0 = st.success_probability;
    Ok(SwapFidelityResult::from_parts(spec.k(), spec.n(), k0, k0 * st.fidelity_phi_plus))
}

/// Measurement operator `M̂ = U†|n⟩⟨n|U` of one bin.
pub fn bin_measurement_operator(counts: (usize, usize), d: usize) -> Result<MultiModeOperator> {
    let u = fock::beam_splitter_unitary(d)?;
    let proj = fock::number_projector(&[counts.0, counts.1], &[d, d])?;
    u.dagger().conjugate(&proj)
}

/// Closed-form characteristic function of `M̂` for one-photon-per-bin
/// patterns, with `xis = [ξ_{A1}, ξ_{B1}, ξ_{A2}, …]`.
///
/// A click at port A projects onto the mode `(a_A + a_B)/√2`, a click at
/// port B onto `(a_A − a_B)/√2`.
pub fn chi_measurement(pattern: &DetectionPattern, xis: &[C64]) -> Result<C64> {
    if xis.len() != 2 * pattern.k() {
        return Err(Error::InvalidParameter(format!(
            "need {} displacement arguments, got {}",
            2 * pattern.k(),
            xis.len()
        )));
    }
    let mut value = C64::new(1.0, 0.0);
    let mut gaussian = 0.0;
    for (&counts, xi) in pattern.counts.iter().zip(xis.chunks(2)) {
        let (xa, xb) = (xi[0], xi[1]);
        let mixed = match counts {
            (1, 0) => xa + xb,
            (0, 1) => xa - xb,
            other => {
                return Err(Error::UnsupportedPattern(format!(
                    "closed-form measurement characteristic needs (1,0) or (0,1) per bin, got {other:?}"
                )))
            }
        };
        value *= laguerre(1, 0.5 * mixed.norm_sqr());
        gaussian += xa.norm_sqr() + xb.norm_sqr();
    }
    Ok(value * (-0.5 * gaussian).exp())
}
