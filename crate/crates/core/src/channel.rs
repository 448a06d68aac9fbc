//! The Gaussian thermal-loss channel `N_{η,N}`, its transducer
//! parametrization, and two ways of applying it: in closed form on
//! characteristic functions, and as a truncated Fock-space dilation.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{self, ModeOperator, MultiModeOperator, TruncationConfig};

/// Slack allowed on `N >= (1 - η)/2` for round-off.
pub const PHYSICALITY_TOL: f64 = 1e-12;

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Channel with transmissivity `eta` and mixed-in noise `noise` (the `N` of
/// `N_{η,N}`). `(eta, noise)` is canonical; `nbar` and `t` are derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelParams {
    eta: f64,
    #[serde(rename = "N")]
    noise: f64,
}

impl ChannelParams {
    /// Validated constructor: `η ∈ [0, 1]`, `N >= (1 − η)/2`, and `N = 0`
    /// when `η = 1`.
    pub fn new(eta: f64, noise: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {eta}")));
        }
        if !noise.is_finite() || noise < 0.0 {
            return Err(Error::InvalidParameter(format!("N must be >= 0, got {noise}")));
        }
        let margin = noise - (1.0 - eta) / 2.0;
        if margin < -PHYSICALITY_TOL {
            return Err(Error::Unphysical { margin });
        }
        if eta == 1.0 && noise > PHYSICALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "eta = 1 is the identity channel and requires N = 0, got {noise}"
            )));
        }
        Ok(Self { eta, noise: noise.max((1.0 - eta) / 2.0) })
    }

    /// Thermal-loss channel with environment occupation `nbar`:
    /// `N = (1 − η)(n̄ + 1/2)`.
    pub fn thermal_loss(eta: f64, nbar: f64) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(Error::InvalidParameter(format!("nbar must be >= 0, got {nbar}")));
        }
        Self::new(eta, (1.0 - eta) * (nbar + 0.5))
    }

    pub fn pure_loss(eta: f64) -> Result<Self> {
        Self::thermal_loss(eta, 0.0)
    }

    pub fn identity() -> Self {
        Self { eta: 1.0, noise: 0.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Environment occupation `n̄ = N/(1 − η) − 1/2`. The identity channel
    /// has no environment and reports zero.
    pub fn nbar(&self) -> f64 {
        if self.eta >= 1.0 {
            return 0.0;
        }
        (self.noise / (1.0 - self.eta) - 0.5).max(0.0)
    }

    /// `t = (1 + η)/2 + N = 1 + (1 − η) n̄ >= 1`.
    pub fn t(&self) -> f64 {
        (1.0 + self.eta) / 2.0 + self.noise
    }

    pub fn is_identity(&self) -> bool {
        self.eta >= 1.0
    }
}

/// Physical knobs of a cavity electro-optic transducer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransducerParams {
    /// Microwave extraction efficiency ζ_m.
    pub zeta_m: f64,
    /// Optical extraction efficiency ζ_o.
    pub zeta_o: f64,
    /// Cooperativity.
    pub cooperativity: f64,
    /// Microwave thermal occupation n̄_th.
    pub nth: f64,
}

/// External and intrinsic loss rates of one transducer cavity, in any
/// common unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRates {
    pub external: f64,
    pub intrinsic: f64,
}

impl LossRates {
    /// `γ_c / (γ_c + γ_i)`.
    pub fn extraction_efficiency(&self) -> Result<f64> {
        if !(self.external > 0.0 && self.intrinsic > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loss rates must be positive, got {self:?}"
            )));
        }
        Ok(self.external / (self.external + self.intrinsic))
    }
}

impl TransducerParams {
    pub fn new(zeta_m: f64, zeta_o: f64, cooperativity: f64, nth: f64) -> Result<Self> {
        let params = Self { zeta_m, zeta_o, cooperativity, nth };
        params.validate()?;
        Ok(params)
    }

    /// Builds ζ_m and ζ_o from raw microwave and optical loss rates.
    pub fn from_loss_rates(
        microwave: LossRates,
        optical: LossRates,
        cooperativity: f64,
        nth: f64,
    ) -> Result<Self> {
        Self::new(
            microwave.extraction_efficiency()?,
            optical.extraction_efficiency()?,
            cooperativity,
            nth,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, z) in [("zeta_m", self.zeta_m), ("zeta_o", self.zeta_o)] {
            if !(0.0..=1.0).contains(&z) {
                problems.push(format!("{name} must lie in [0, 1], got {z}"));
            }
        }
        if !(self.cooperativity >= 0.0) || !self.cooperativity.is_finite() {
            problems.push(format!("C must be >= 0, got {}", self.cooperativity));
        }
        if !(self.nth >= 0.0) || !self.nth.is_finite() {
            problems.push(format!("nth must be >= 0, got {}", self.nth));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

/// Channel produced by a transducer, with its physicality margin
/// `N − (1 − η)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransducerChannel {
    pub eta: f64,
    #[serde(rename = "N")]
    pub noise: f64,
    pub margin: f64,
    pub physical: bool,
}

impl TransducerChannel {
    pub fn params(&self) -> Result<ChannelParams> {
        if !self.physical {
            return Err(Error::Unphysical { margin: self.margin });
        }
        ChannelParams::new(self.eta, self.noise)
    }
}

/// Raw transducer map, reporting (never clamping) unphysical results.
pub fn transducer_map(p: &TransducerParams) -> Result<TransducerChannel> {
    p.validate()?;
    let c = p.cooperativity;
    let denom = (1.0 + c) * (1.0 + c);
    let eta = p.zeta_m * p.zeta_o * 4.0 * c / denom;
    let noise =
        0.5 + 2.0 * c * p.zeta_o * (2.0 * (1.0 - p.zeta_m) * p.nth - p.zeta_m) / denom;
    let margin = noise - (1.0 - eta) / 2.0;
    Ok(TransducerChannel { eta, noise, margin, physical: margin >= -PHYSICALITY_TOL })
}

/// Transducer parameters to channel parameters; unphysical results are an
/// error carrying the violation margin.
pub fn transducer_to_channel(p: &TransducerParams) -> Result<ChannelParams> {
    transducer_map(p)?.params()
}

/// Bose–Einstein occupation `1/(exp(hν/k_B T) − 1)`.
pub fn bose_einstein(frequency_hz: f64, temperature_k: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !(temperature_k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency and temperature must be positive, got {frequency_hz} Hz, {temperature_k} K"
        )));
    }
    let x = PLANCK * frequency_hz / (BOLTZMANN * temperature_k);
    Ok(1.0 / x.exp_m1())
}

/// Closed-form channel action on a characteristic function:
/// `ξ ↦ χ_in(√η ξ) e^{−N|ξ|²}`.
pub fn apply_channel_closed_form<F>(chi_in: F, p: ChannelParams) -> impl Fn(C64) -> C64
where
    F: Fn(C64) -> C64,
{
    let scale = p.eta.sqrt();
    move |xi: C64| chi_in(xi * scale) * (-p.noise * xi.norm_sqr()).exp()
}

/// Single-mode image of an operator under a thermal-loss channel, with the
/// population lost to the `d_sys` cutoff.
#[derive(Clone, Debug)]
pub struct ChannelImage {
    pub op: ModeOperator,
    pub cropped_trace: f64,
}

/// Dilation of `N_{η,N}`: the system meets a thermal mode with occupation
/// `n̄` on a mixing unitary of transmissivity `η`, and the environment is
/// traced out.
///
/// Both modes are padded to `d_sys + d_env − 1` levels so that every
/// photon-number block reachable from the inputs is exact; the output keeps
/// levels `0..d_sys`.
#[derive(Clone, Debug)]
pub struct ThermalLossDilation {
    params: ChannelParams,
    cfg: TruncationConfig,
    joint_dim: usize,
    unitary: Option<MultiModeOperator>,
    env: Vec<f64>,
}

impl ThermalLossDilation {
    pub fn new(p: ChannelParams, cfg: TruncationConfig) -> Result<Self> {
        cfg.validate()?;
        let joint_dim = cfg.d_sys + cfg.d_env - 1;
        if p.is_identity() {
            return Ok(Self { params: p, cfg, joint_dim, unitary: None, env: vec![] });
        }
        let nbar = p.nbar();
        cfg.check_thermal_tail(nbar)?;
        let thermal = fock::thermal_state(nbar, cfg.d_env)?;
        let env = thermal.rho.matrix().diag().iter().map(|x| x.re).collect();
        let theta = p.eta.sqrt().acos();
        let unitary = fock::mixing_unitary(joint_dim, joint_dim, theta)?;
        Ok(Self { params: p, cfg, joint_dim, unitary: Some(unitary), env })
    }

    pub fn params(&self) -> ChannelParams {
        self.params
    }

    pub fn apply(&self, op: &ModeOperator) -> Result<ChannelImage> {
        let d_sys = self.cfg.d_sys;
        if op.dim() > d_sys {
            return Err(Error::Truncation(format!(
                "input has {} levels, more than d_sys = {}",
                op.dim(),
                d_sys
            )));
        }
        let Some(unitary) = &self.unitary else {
            let out = op.padded(d_sys);
            return Ok(ChannelImage { cropped_trace: 0.0, op: out });
        };
        let w = self.joint_dim;
        let u = unitary.matrix();
        let x = op.padded(w);
        let xm = x.matrix();
        let mut out = ndarray::Array2::<C64>::zeros((d_sys, d_sys));
        // U (X ⊗ τ) U† with diagonal τ; only the columns of U with system
        // index < dim(op) and environment index < d_env contribute.
        let src = op.dim();
        for (e, &pe) in self.env.iter().enumerate() {
            if pe == 0.0 {
                continue;
            }
            // M[r, i] = Σ_j U[r, (j, e)] X[j, i]
            let mut m = ndarray::Array2::<C64>::zeros((w * w, src));
            for r in 0..w * w {
                for j in 0..src {
                    let uj = u[[r, j * w + e]];
                    if uj.norm_sqr() == 0.0 {
                        continue;
                    }
                    for i in 0..src {
                        m[[r, i]] += uj * xm[[j, i]];
                    }
                }
            }
            // out[s, s'] += p_e Σ_env Σ_i M[(s, f), i] conj(U[(s', f), (i, e)])
            for s in 0..d_sys {
                for sp in 0..d_sys {
                    let mut acc = C64::new(0.0, 0.0);
                    for f in 0..w {
                        let r = s * w + f;
                        let rp = sp * w + f;
                        for i in 0..src {
                            acc += m[[r, i]] * u[[rp, i * w + e]].conj();
                        }
                    }
                    out[[s, sp]] += acc * pe;
                }
            }
        }
        let image = ModeOperator::new(out)?;
        let cropped_trace = (op.trace() - image.trace()).re;
        Ok(ChannelImage { op: image, cropped_trace })
    }
}

/// Applies the channel to a single-mode operator through its dilation.
pub fn apply_channel_oracle(
    rho: &ModeOperator,
    p: ChannelParams,
    cfg: TruncationConfig,
) -> Result<ModeOperator> {
    Ok(ThermalLossDilation::new(p, cfg)?.apply(rho)?.op)
}
