//! Qubit–time-bin entangled states and their images under a thermal-loss
//! channel, stored per time bin.
//!
//! The k-bin state is `(|g⟩|101…⟩ + |e⟩|010…⟩)/√2`: odd-numbered bins carry
//! the photons of the `g` branch. For `k = 2` the occupied bin may hold `n`
//! photons, `(|g⟩|n0⟩ + |e⟩|0n⟩)/√2`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::channel::{ChannelParams, ThermalLossDilation};
use crate::error::{Error, Result};
use crate::fock::{self, kron, ModeOperator, MultiModeOperator, TruncationConfig};

/// Qubit index: 0 is `g`, 1 is `e`.
pub type Qubit = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QubitTimeBinSpec {
    k: usize,
    n: usize,
}

impl QubitTimeBinSpec {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("need at least one time bin".into()));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("need at least one photon per occupied bin".into()));
        }
        if n > 1 && k != 2 {
            return Err(Error::InvalidParameter(format!(
                "{n}-photon encodings are defined for two time bins only, got k = {k}"
            )));
        }
        Ok(Self { k, n })
    }

    pub fn single_photon(k: usize) -> Result<Self> {
        Self::new(k, 1)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Photons in bin `bin` (0-based) of the branch tied to `qubit`.
    pub fn occupation(&self, qubit: Qubit, bin: usize) -> usize {
        let odd_numbered = bin % 2 == 0;
        if odd_numbered == (qubit == 0) {
            self.n
        } else {
            0
        }
    }
}

/// `ρ = prefactor · Σ_{q,q'} |q⟩⟨q'| ⊗ (⊗ᵢ Bᵢ[q][q'])`.
#[derive(Clone, Debug)]
pub struct HybridDensity {
    blocks: Vec<[[ModeOperator; 2]; 2]>,
    prefactor: f64,
    /// Largest population any block lost to the `d_sys` cutoff.
    pub cropped_trace: f64,
}

impl HybridDensity {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn block(&self, bin: usize, q: Qubit, qp: Qubit) -> &ModeOperator {
        &self.blocks[bin][q][qp]
    }

    pub fn d_sys(&self) -> usize {
        self.blocks[0][0][0].dim()
    }

    /// `prefactor · Πᵢ Tr(Bᵢ[q][q'])`, the qubit-reduced density element.
    pub fn qubit_element(&self, q: Qubit, qp: Qubit) -> C64 {
        self.blocks.iter().map(|b| b[q][qp].trace()).product::<C64>() * self.prefactor
    }

    /// `Tr(self · other)` by per-bin contraction.
    pub fn overlap(&self, other: &HybridDensity) -> Result<C64> {
        if self.k() != other.k() {
            return Err(Error::InvalidParameter(format!(
                "bin counts differ: {} vs {}",
                self.k(),
                other.k()
            )));
        }
        let mut total = C64::new(0.0, 0.0);
        for q in 0..2 {
            for qp in 0..2 {
                let term: C64 = self
                    .blocks
                    .iter()
                    .zip(&other.blocks)
                    .map(|(a, b)| a[q][qp].trace_product(&b[qp][q]))
                    .product();
                total += term;
            }
        }
        Ok(total * self.prefactor * other.prefactor)
    }

    /// Full operator on qubit ⊗ bins, qubit first. Exponential in `k`.
    pub fn assemble(&self) -> MultiModeOperator {
        let d = self.d_sys();
        let bins_dim = d.pow(self.k() as u32);
        let mut mat = Array2::<C64>::zeros((2 * bins_dim, 2 * bins_dim));
        for q in 0..2 {
            for qp in 0..2 {
                let mut acc = Array2::<C64>::eye(1);
                for b in &self.blocks {
                    acc = kron(&acc, b[q][qp].matrix());
                }
                mat.slice_mut(ndarray::s![
                    q * bins_dim..(q + 1) * bins_dim,
                    qp * bins_dim..(qp + 1) * bins_dim
                ])
                .assign(&acc.mapv(|x| x * self.prefactor));
            }
        }
        let mut dims = vec![2];
        dims.extend(std::iter::repeat(d).take(self.k()));
        MultiModeOperator::new(dims, mat).expect("dimensions are consistent by construction")
    }
}

/// `|ψ_k⟩⟨ψ_k|` with `d` Fock levels per bin.
pub fn ideal_state(spec: QubitTimeBinSpec, d: usize) -> Result<HybridDensity> {
    if d < spec.n + 1 {
        return Err(Error::CutoffViolation { n: spec.n, d });
    }
    let blocks = (0..spec.k)
        .map(|bin| -> Result<[[ModeOperator; 2]; 2]> {
            let op = |q, qp| fock::fock_operator(spec.occupation(q, bin), spec.occupation(qp, bin), d);
            Ok([[op(0, 0)?, op(0, 1)?], [op(1, 0)?, op(1, 1)?]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HybridDensity { blocks, prefactor: 0.5, cropped_trace: 0.0 })
}

/// Image of the ideal state when every bin passes through `p`. Each block is
/// the single-mode channel image of the matching ideal block.
pub fn channel_output(
    spec: QubitTimeBinSpec,
    p: ChannelParams,
    cfg: TruncationConfig,
) -> Result<HybridDensity> {
    cfg.check_encoding(spec.n)?;
    let dilation = ThermalLossDilation::new(p, cfg)?;
    let d = cfg.d_sys;
    // only |a⟩⟨b| with a, b ∈ {0, n} occur
    let levels = [0, spec.n];
    let mut images = Vec::with_capacity(4);
    let mut cropped: f64 = 0.0;
    for &a in &levels {
        for &b in &levels {
            let image = dilation.apply(&fock::fock_operator(a, b, d)?)?;
            cropped = cropped.max(image.cropped_trace.abs());
            images.push(((a, b), image.op));
        }
    }
    let lookup = |a: usize, b: usize| -> ModeOperator {
        images.iter().find(|(key, _)| *key == (a, b)).map(|(_, op)| op.clone()).unwrap()
    };
    let blocks = (0..spec.k)
        .map(|bin| {
            let op = |q, qp| lookup(spec.occupation(q, bin), spec.occupation(qp, bin));
            [[op(0, 0), op(0, 1)], [op(1, 0), op(1, 1)]]
        })
        .collect();
    Ok(HybridDensity { blocks, prefactor: 0.5, cropped_trace: cropped })
}

/// Closed-form `Tr(ρ_out ρ_in)` for single-photon k-bin states, with
/// `t = (1 + η)/2 + N`.
pub fn state_fidelity_analytic(spec: QubitTimeBinSpec, p: ChannelParams) -> Result<f64> {
    if spec.n != 1 {
        return Err(Error::InvalidParameter(format!(
            "closed-form state fidelity covers n = 1 only, got n = {}",
            spec.n
        )));
    }
    Ok(state_fidelity_k(p, spec.k))
}

/// The odd/even-k closed form behind [`state_fidelity_analytic`].
pub fn state_fidelity_k(p: ChannelParams, k: usize) -> f64 {
    let eta = p.eta();
    let t = p.t();
    let base = (t * t + 2.0 * eta - t * (1.0 + eta)) / t.powi(4);
    let coherence = eta.powf(k as f64 / 2.0) / (2.0 * t.powi(2 * k as i32));
    if k % 2 == 1 {
        let l = (k / 2) as i32;
        base.powi(l) * (2.0 * t * t + 2.0 * eta - t * (1.0 + eta)) / (4.0 * t.powi(3)) + coherence
    } else {
        0.5 * base.powi((k / 2) as i32) + coherence
    }
}

/// Oracle fidelity: the ideal and channel-output states contracted bin by bin.
pub fn state_fidelity_oracle(
    spec: QubitTimeBinSpec,
    p: ChannelParams,
    cfg: TruncationConfig,
) -> Result<f64> {
    let out = channel_output(spec, p, cfg)?;
    let ideal = ideal_state(spec, cfg.d_sys)?;
    Ok(out.overlap(&ideal)?.re)
}
