//! Parameter sweeps over one or two axes, written as CSV with a JSON sidecar.
//!
//! A config is one JSON document:
//!
//! ```json
//! {
//!   "name": "fig4b",
//!   "quantity": "swap_infidelity",
//!   "axes": [
//!     {"name": "eta", "values": [0.6, 0.8]},
//!     {"name": "k", "min": 1, "max": 10, "steps": 10}
//!   ],
//!   "fixed": {"nbar": 0.1},
//!   "method": "analytic",
//!   "output": "fig4b.csv"
//! }
//! ```
//!
//! Unknown keys are rejected, and every violation is reported at once.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analytic::{self, K_MAX};
use crate::channel::{transducer_to_channel, ChannelParams, TransducerParams};
use crate::error::{Error, Result};
use crate::states::{state_fidelity_analytic, state_fidelity_oracle, QubitTimeBinSpec};
use crate::swap::{oracle_config, swap_fidelity_oracle, ORACLE_K_MAX};

pub const CSV_HEADER: &str = "axis1,axis2,quantity,value,method";
pub const DEFAULT_NTH: f64 = 0.1;
pub const PRESETS: [&str; 6] = ["fig2a", "fig2b", "fig4a", "fig4b", "fig5a", "fig5b"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    StateFidelity,
    SwapFidelity,
    SwapInfidelity,
    FidelityRatioN1N2,
    OptimalK,
}

impl Quantity {
    const ALL: [(&'static str, Quantity); 5] = [
        ("state_fidelity", Quantity::StateFidelity),
        ("swap_fidelity", Quantity::SwapFidelity),
        ("swap_infidelity", Quantity::SwapInfidelity),
        ("fidelity_ratio_n1_n2", Quantity::FidelityRatioN1N2),
        ("optimal_k", Quantity::OptimalK),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, q)| *q == self).map(|(s, _)| *s).unwrap_or("?")
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, q)| *q)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Oracle,
    Both,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Method::Analytic),
            "oracle" => Some(Method::Oracle),
            "both" => Some(Method::Both),
            _ => None,
        }
    }

    fn concrete(self) -> &'static [Method] {
        match self {
            Method::Analytic => &[Method::Analytic],
            Method::Oracle => &[Method::Oracle],
            Method::Both => &[Method::Analytic, Method::Oracle],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Oracle => "oracle",
            Method::Both => "both",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AxisName {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "nbar")]
    Nbar,
    /// Added noise `N`.
    #[serde(rename = "N")]
    Noise,
    #[serde(rename = "C")]
    Cooperativity,
    #[serde(rename = "zeta")]
    Zeta,
    #[serde(rename = "k")]
    K,
    /// Photons per occupied bin.
    #[serde(rename = "n")]
    Photons,
}

impl AxisName {
    const ALL: [(&'static str, AxisName); 7] = [
        ("eta", AxisName::Eta),
        ("nbar", AxisName::Nbar),
        ("N", AxisName::Noise),
        ("C", AxisName::Cooperativity),
        ("zeta", AxisName::Zeta),
        ("k", AxisName::K),
        ("n", AxisName::Photons),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, a)| *a == self).map(|(s, _)| *s).unwrap_or("?")
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, a)| *a)
    }

    /// Domain check for a single value; `None` if fine.
    fn domain_error(self, v: f64) -> Option<String> {
        let ok = match self {
            AxisName::Eta | AxisName::Zeta => (0.0..=1.0).contains(&v),
            AxisName::Nbar | AxisName::Noise | AxisName::Cooperativity => v >= 0.0 && v.is_finite(),
            AxisName::K => v.fract() == 0.0 && (1.0..=K_MAX as f64).contains(&v),
            AxisName::Photons => v == 1.0 || v == 2.0,
        };
        (!ok).then(|| {
            let domain = match self {
                AxisName::Eta | AxisName::Zeta => "[0, 1]".to_string(),
                AxisName::Nbar | AxisName::Noise | AxisName::Cooperativity => "[0, inf)".into(),
                AxisName::K => format!("integers 1..={K_MAX}"),
                AxisName::Photons => "{1, 2}".into(),
            };
            format!("{} = {v} is outside {domain}", self.name())
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisRange {
    Linear { min: f64, max: f64, steps: usize },
    Values { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: AxisName,
    #[serde(flatten)]
    pub range: AxisRange,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, steps: usize) -> Self {
        Self { name, range: AxisRange::Linear { min, max, steps } }
    }

    pub fn values(name: AxisName, values: Vec<f64>) -> Self {
        Self { name, range: AxisRange::Values { values } }
    }

    pub fn points(&self) -> Vec<f64> {
        match &self.range {
            AxisRange::Values { values } => values.clone(),
            AxisRange::Linear { min, max, steps } => match *steps {
                0 => Vec::new(),
                1 => vec![*min],
                s => (0..s)
                    .map(|i| if i + 1 == s { *max } else { min + (max - min) * i as f64 / (s - 1) as f64 })
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(usize),
    /// `"opt"`: the fidelity-maximizing `k` up to `k_max`.
    Optimal(#[serde(serialize_with = "ser_opt")] ()),
}

fn ser_opt<S: serde::Serializer>(_: &(), s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("opt")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(rename = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(rename = "C")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cooperativity: Option<f64>,
    /// Sets both extraction efficiencies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_o: Option<f64>,
    pub nth: f64,
    pub k: KChoice,
    pub n: usize,
    pub k_max: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            eta: None,
            nbar: None,
            noise: None,
            cooperativity: None,
            zeta: None,
            zeta_m: None,
            zeta_o: None,
            nth: DEFAULT_NTH,
            k: KChoice::Fixed(2),
            n: 1,
            k_max: analytic::DEFAULT_K_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub name: String,
    pub quantity: Vec<Quantity>,
    pub axes: Vec<Axis>,
    pub fixed: FixedParams,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn number(v: &Value, what: &str, errs: &mut Vec<String>) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            errs.push(format!("{what}: expected a number, got {v}"));
            None
        }
    }
}

fn count(v: &Value, what: &str, errs: &mut Vec<String>) -> Option<usize> {
    match v.as_u64() {
        Some(x) => Some(x as usize),
        None => {
            errs.push(format!("{what}: expected a non-negative integer, got {v}"));
            None
        }
    }
}

fn unknown_keys(obj: &Map<String, Value>, allowed: &[&str], ctx: &str, errs: &mut Vec<String>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            errs.push(format!("{ctx}: unknown key `{key}`"));
        }
    }
}

fn parse_axis(v: &Value, i: usize, errs: &mut Vec<String>) -> Option<Axis> {
    let ctx = format!("axes[{i}]");
    let Some(obj) = v.as_object() else {
        errs.push(format!("{ctx}: expected an object"));
        return None;
    };
    unknown_keys(obj, &["name", "min", "max", "steps", "values"], &ctx, errs);
    let name = match obj.get("name").and_then(Value::as_str) {
        Some(s) => AxisName::parse(s).or_else(|| {
            errs.push(format!("{ctx}: unknown axis `{s}` (expected eta, nbar, N, C, zeta, k or n)"));
            None
        }),
        None => {
            errs.push(format!("{ctx}: missing string `name`"));
            None
        }
    };
    let range = match (obj.get("values"), obj.get("min"), obj.get("max"), obj.get("steps")) {
        (Some(values), None, None, None) => match values.as_array() {
            Some(arr) if !arr.is_empty() => {
                let xs: Vec<f64> = arr
                    .iter()
                    .enumerate()
                    .filter_map(|(j, x)| number(x, &format!("{ctx}.values[{j}]"), errs))
                    .collect();
                (xs.len() == arr.len()).then_some(AxisRange::Values { values: xs })
            }
            _ => {
                errs.push(format!("{ctx}: `values` must be a non-empty list"));
                None
            }
        },
        (None, Some(min), Some(max), Some(steps)) => {
            let min = number(min, &format!("{ctx}.min"), errs);
            let max = number(max, &format!("{ctx}.max"), errs);
            let steps = count(steps, &format!("{ctx}.steps"), errs);
            match (min, max, steps) {
                (Some(min), Some(max), Some(steps)) => {
                    if steps == 0 {
                        errs.push(format!("{ctx}: `steps` must be at least 1"));
                    }
                    if min > max {
                        errs.push(format!("{ctx}: min {min} exceeds max {max}"));
                    }
                    Some(AxisRange::Linear { min, max, steps })
                }
                _ => None,
            }
        }
        _ => {
            errs.push(format!("{ctx}: give either `values` or all of `min`, `max`, `steps`"));
            None
        }
    };
    let axis = Axis { name: name?, range: range? };
    for v in axis.points() {
        if let Some(e) = axis.name.domain_error(v) {
            errs.push(format!("{ctx}: {e}"));
            break;
        }
    }
    Some(axis)
}

fn parse_fixed(v: &Value, errs: &mut Vec<String>) -> FixedParams {
    let mut fixed = FixedParams::default();
    let Some(obj) = v.as_object() else {
        errs.push("fixed: expected an object".into());
        return fixed;
    };
    unknown_keys(
        obj,
        &["eta", "nbar", "N", "C", "zeta", "zeta_m", "zeta_o", "nth", "k", "n", "k_max"],
        "fixed",
        errs,
    );
    let real = |key: &str, axis: Option<AxisName>, errs: &mut Vec<String>| -> Option<f64> {
        let x = number(obj.get(key)?, &format!("fixed.{key}"), errs)?;
        let axis = axis.unwrap_or(AxisName::Zeta);
        if let Some(e) = axis.domain_error(x) {
            errs.push(format!("fixed.{key}: {e}"));
        }
        Some(x)
    };
    fixed.eta = real("eta", Some(AxisName::Eta), errs);
    fixed.nbar = real("nbar", Some(AxisName::Nbar), errs);
    fixed.noise = real("N", Some(AxisName::Noise), errs);
    fixed.cooperativity = real("C", Some(AxisName::Cooperativity), errs);
    fixed.zeta = real("zeta", None, errs);
    fixed.zeta_m = real("zeta_m", None, errs);
    fixed.zeta_o = real("zeta_o", None, errs);
    if let Some(nth) = real("nth", Some(AxisName::Nbar), errs) {
        fixed.nth = nth;
    }
    match obj.get("k") {
        None => {}
        Some(Value::String(s)) if s == "opt" => fixed.k = KChoice::Optimal(()),
        Some(k) => {
            if let Some(k) = count(k, "fixed.k (or \"opt\")", errs) {
                if let Some(e) = AxisName::K.domain_error(k as f64) {
                    errs.push(format!("fixed.k: {e}"));
                }
                fixed.k = KChoice::Fixed(k);
            }
        }
    }
    if let Some(n) = obj.get("n").and_then(|n| count(n, "fixed.n", errs)) {
        if let Some(e) = AxisName::Photons.domain_error(n as f64) {
            errs.push(format!("fixed.n: {e}"));
        }
        fixed.n = n;
    }
    if let Some(km) = obj.get("k_max").and_then(|n| count(n, "fixed.k_max", errs)) {
        if let Some(e) = AxisName::K.domain_error(km as f64) {
            errs.push(format!("fixed.k_max: {e}"));
        }
        fixed.k_max = km;
    }
    fixed
}

impl SweepConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Config(vec![format!("malformed JSON: {e}")]))?;
        Self::from_value(&v)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::from_json_str(&s)?;
        if cfg.name.is_empty() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let mut errs = Vec::new();
        let Some(obj) = v.as_object() else {
            return Err(Error::Config(vec!["config must be a JSON object".into()]));
        };
        unknown_keys(obj, &["name", "quantity", "axes", "fixed", "method", "output"], "config", &mut errs);

        let name = match obj.get("name") {
            None => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                errs.push(format!("name: expected a string, got {other}"));
                String::new()
            }
        };

        let quantity_values: Vec<&Value> = match obj.get("quantity") {
            Some(Value::Array(xs)) => xs.iter().collect(),
            Some(x) => vec![x],
            None => {
                errs.push("missing `quantity`".into());
                vec![]
            }
        };
        let mut quantity = Vec::new();
        for q in quantity_values {
            match q.as_str().and_then(Quantity::parse) {
                Some(q) if !quantity.contains(&q) => quantity.push(q),
                Some(q) => errs.push(format!("quantity `{q}` listed twice")),
                None => errs.push(format!(
                    "unknown quantity {q} (expected state_fidelity, swap_fidelity, swap_infidelity, fidelity_ratio_n1_n2 or optimal_k)"
                )),
            }
        }
        if obj.get("quantity").is_some_and(|q| q.as_array().is_some_and(Vec::is_empty)) {
            errs.push("`quantity` list is empty".into());
        }

        let axes: Vec<Axis> = match obj.get("axes") {
            Some(Value::Array(xs)) => {
                if xs.is_empty() || xs.len() > 2 {
                    errs.push(format!("`axes` must hold one or two axes, got {}", xs.len()));
                }
                xs.iter().enumerate().filter_map(|(i, a)| parse_axis(a, i, &mut errs)).collect()
            }
            Some(_) => {
                errs.push("`axes` must be a list".into());
                vec![]
            }
            None => {
                errs.push("missing `axes`".into());
                vec![]
            }
        };
        if axes.len() == 2 && axes[0].name == axes[1].name {
            errs.push(format!("axis `{}` appears twice", axes[0].name.name()));
        }

        let fixed = obj.get("fixed").map(|f| parse_fixed(f, &mut errs)).unwrap_or_default();

        let method = match obj.get("method") {
            None => Method::Analytic,
            Some(m) => m.as_str().and_then(Method::parse).unwrap_or_else(|| {
                errs.push(format!("unknown method {m} (expected analytic, oracle or both)"));
                Method::Analytic
            }),
        };

        let output = match obj.get("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => {
                errs.push(format!("output: expected a path string, got {other}"));
                None
            }
        };

        let cfg = SweepConfig { name, quantity, axes, fixed, method, output };
        cfg.check_semantics(&mut errs);
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errs))
        }
    }

    fn has(&self, axis: AxisName) -> bool {
        self.axes.iter().any(|a| a.name == axis)
    }

    fn axis_max(&self, axis: AxisName) -> Option<f64> {
        self.axes
            .iter()
            .find(|a| a.name == axis)
            .map(|a| a.points().into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Cross-field rules, appended to `errs`.
    fn check_semantics(&self, errs: &mut Vec<String>) {
        let f = &self.fixed;
        let fixed_values = [
            (AxisName::Eta, f.eta),
            (AxisName::Nbar, f.nbar),
            (AxisName::Noise, f.noise),
            (AxisName::Cooperativity, f.cooperativity),
            (AxisName::Zeta, f.zeta),
        ];
        for (axis, value) in fixed_values {
            if self.has(axis) && value.is_some() {
                errs.push(format!("`{}` is both an axis and a fixed parameter", axis.name()));
            }
        }

        let eta = self.has(AxisName::Eta) || f.eta.is_some();
        let nbar = self.has(AxisName::Nbar) || f.nbar.is_some();
        let noise = self.has(AxisName::Noise) || f.noise.is_some();
        let coop = self.has(AxisName::Cooperativity) || f.cooperativity.is_some();
        let zeta = self.has(AxisName::Zeta) || f.zeta.is_some();
        let zeta_pair = f.zeta_m.is_some() && f.zeta_o.is_some();
        let transducer = coop || zeta || f.zeta_m.is_some() || f.zeta_o.is_some();
        if transducer {
            if eta || nbar || noise {
                errs.push("give the channel either as (eta, nbar | N) or as (C, zeta | zeta_m + zeta_o), not both".into());
            }
            if !coop {
                errs.push("transducer channel needs `C`".into());
            }
            if zeta && (f.zeta_m.is_some() || f.zeta_o.is_some()) {
                errs.push("give either `zeta` or `zeta_m` + `zeta_o`".into());
            } else if !zeta && !zeta_pair {
                errs.push("transducer channel needs `zeta` or both `zeta_m` and `zeta_o`".into());
            }
        } else {
            if !eta {
                errs.push("channel needs `eta` (or a transducer description via `C` and `zeta`)".into());
            }
            match (nbar, noise) {
                (true, true) => errs.push("give either `nbar` or `N`, not both".into()),
                (false, false) => errs.push("channel needs `nbar` or `N`".into()),
                _ => {}
            }
        }

        let k_axis = self.has(AxisName::K);
        let n_axis = self.has(AxisName::Photons);
        let optimal = matches!(f.k, KChoice::Optimal(()));
        if k_axis && optimal {
            errs.push("`k` is an axis, so fixed.k = \"opt\" has no effect".into());
        }
        if f.k_max < 1 {
            errs.push("fixed.k_max must be at least 1".into());
        }
        let oracle = self.method != Method::Analytic;
        for &q in &self.quantity {
            match q {
                Quantity::OptimalK if oracle => {
                    errs.push("optimal_k is only available with method = analytic".into())
                }
                Quantity::FidelityRatioN1N2 if k_axis || n_axis => errs.push(
                    "fidelity_ratio_n1_n2 is defined at k = 2 and compares n = 1 with n = 2; drop the k and n axes".into(),
                ),
                Quantity::StateFidelity if (f.n == 2 || n_axis) && self.method != Method::Oracle => {
                    errs.push("state_fidelity has a closed form for n = 1 only".into())
                }
                _ => {}
            }
            let two_photon = q != Quantity::FidelityRatioN1N2 && (f.n == 2 || n_axis);
            if two_photon && q != Quantity::StateFidelity {
                let ks_ok = if k_axis {
                    self.axes.iter().find(|a| a.name == AxisName::K).is_some_and(|a| a.points().iter().all(|&k| k == 2.0))
                } else {
                    f.k == KChoice::Fixed(2)
                };
                if !ks_ok {
                    errs.push(format!("{q} with n = 2 requires k = 2"));
                }
            }
        }
        if oracle {
            let k_hi = self.axis_max(AxisName::K).map(|k| k as usize).or(match f.k {
                KChoice::Fixed(k) => Some(k),
                KChoice::Optimal(()) => None,
            });
            match k_hi {
                None => errs.push("k = \"opt\" cannot be evaluated by the oracle".into()),
                Some(k) if k > ORACLE_K_MAX => errs.push(format!(
                    "oracle method needs k <= {ORACLE_K_MAX}, config reaches k = {k}"
                )),
                _ => {}
            }
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }

    /// SHA-256 of the canonical config serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().to_string().as_bytes()))
    }
}

/// ζ ∈ [0.5, 1] × C ∈ [0.05, 2] on a 60 × 60 grid.
fn transducer_axes() -> Vec<Axis> {
    vec![
        Axis::linear(AxisName::Zeta, 0.5, 1.0, 60),
        Axis::linear(AxisName::Cooperativity, 0.05, 2.0, 60),
    ]
}

/// Built-in figure configurations.
pub fn preset(name: &str) -> Result<SweepConfig> {
    let base = |quantity: Vec<Quantity>, axes: Vec<Axis>, fixed: FixedParams| SweepConfig {
        name: name.to_string(),
        quantity,
        axes,
        fixed,
        method: Method::Analytic,
        output: Some(PathBuf::from(format!("{name}.csv"))),
    };
    let transducer = |k: KChoice| FixedParams { k, nth: DEFAULT_NTH, ..FixedParams::default() };
    let cfg = match name {
        "fig2a" => base(vec![Quantity::StateFidelity], transducer_axes(), transducer(KChoice::Fixed(2))),
        "fig2b" => base(vec![Quantity::StateFidelity], transducer_axes(), transducer(KChoice::Fixed(4))),
        "fig4a" => base(
            vec![Quantity::FidelityRatioN1N2, Quantity::SwapFidelity],
            vec![Axis::linear(AxisName::Eta, 0.3, 1.0, 71), Axis::linear(AxisName::Nbar, 0.0, 0.3, 61)],
            FixedParams { k: KChoice::Fixed(2), n: 2, ..FixedParams::default() },
        ),
        "fig4b" => base(
            vec![Quantity::SwapInfidelity],
            vec![
                Axis::values(AxisName::Eta, vec![0.6, 0.8]),
                Axis::linear(AxisName::K, 1.0, 10.0, 10),
            ],
            FixedParams { nbar: Some(0.1), ..FixedParams::default() },
        ),
        "fig5a" => base(vec![Quantity::SwapInfidelity], transducer_axes(), transducer(KChoice::Fixed(1))),
        "fig5b" => base(
            vec![Quantity::SwapInfidelity, Quantity::OptimalK],
            transducer_axes(),
            transducer(KChoice::Optimal(())),
        ),
        other => {
            return Err(Error::Config(vec![format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )]))
        }
    };
    // presets must pass the same validation as user configs
    let mut errs = Vec::new();
    cfg.check_semantics(&mut errs);
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

/// One evaluated grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub quantity: Quantity,
    pub value: f64,
    pub method: Method,
}

#[derive(Clone, Copy, Debug)]
struct Point {
    eta: Option<f64>,
    nbar: Option<f64>,
    noise: Option<f64>,
    coop: Option<f64>,
    zeta: Option<f64>,
    k: KChoice,
    n: usize,
}

impl Point {
    fn new(cfg: &SweepConfig, coords: &[(AxisName, f64)]) -> Self {
        let f = &cfg.fixed;
        let mut p = Point {
            eta: f.eta,
            nbar: f.nbar,
            noise: f.noise,
            coop: f.cooperativity,
            zeta: f.zeta,
            k: f.k,
            n: f.n,
        };
        for &(axis, v) in coords {
            match axis {
                AxisName::Eta => p.eta = Some(v),
                AxisName::Nbar => p.nbar = Some(v),
                AxisName::Noise => p.noise = Some(v),
                AxisName::Cooperativity => p.coop = Some(v),
                AxisName::Zeta => p.zeta = Some(v),
                AxisName::K => p.k = KChoice::Fixed(v as usize),
                AxisName::Photons => p.n = v as usize,
            }
        }
        p
    }

    fn channel(&self, f: &FixedParams) -> Result<ChannelParams> {
        if let Some(c) = self.coop {
            let (zm, zo) = match self.zeta {
                Some(z) => (z, z),
                None => (f.zeta_m.unwrap_or(1.0), f.zeta_o.unwrap_or(1.0)),
            };
            return transducer_to_channel(&TransducerParams::new(zm, zo, c, f.nth)?);
        }
        let eta = self.eta.ok_or_else(|| Error::InvalidParameter("missing eta".into()))?;
        match (self.nbar, self.noise) {
            (Some(nbar), _) => ChannelParams::thermal_loss(eta, nbar),
            (None, Some(n)) => ChannelParams::new(eta, n),
            (None, None) => Err(Error::InvalidParameter("missing nbar or N".into())),
        }
    }
}

/// Swap fidelity at `(k, n)` by one method.
fn swap_fidelity(p: ChannelParams, k: KChoice, n: usize, k_max: usize, method: Method) -> Result<f64> {
    match (k, method) {
        (KChoice::Optimal(()), _) => Ok(analytic::optimal_k(p, k_max)?.fidelity),
        (KChoice::Fixed(k), Method::Oracle) => {
            let spec = QubitTimeBinSpec::new(k, n)?;
            Ok(swap_fidelity_oracle(p, spec, oracle_config(p, n))?.fidelity)
        }
        (KChoice::Fixed(k), _) => Ok(analytic::swap_fidelity(p, k, n)?.fidelity),
    }
}

fn evaluate(q: Quantity, point: &Point, f: &FixedParams, method: Method) -> Result<f64> {
    let p = point.channel(f)?;
    match q {
        Quantity::StateFidelity => {
            let k = match point.k {
                KChoice::Fixed(k) => k,
                KChoice::Optimal(()) => {
                    return Err(Error::InvalidParameter("state fidelity needs a fixed k".into()))
                }
            };
            let spec = QubitTimeBinSpec::new(k, point.n)?;
            match method {
                Method::Oracle => state_fidelity_oracle(spec, p, oracle_config(p, point.n)),
                _ => state_fidelity_analytic(spec, p),
            }
        }
        Quantity::SwapFidelity => swap_fidelity(p, point.k, point.n, f.k_max, method),
        Quantity::SwapInfidelity => Ok(1.0 - swap_fidelity(p, point.k, point.n, f.k_max, method)?),
        Quantity::FidelityRatioN1N2 => {
            let k2 = KChoice::Fixed(2);
            Ok(swap_fidelity(p, k2, 1, f.k_max, method)? / swap_fidelity(p, k2, 2, f.k_max, method)?)
        }
        Quantity::OptimalK => Ok(analytic::optimal_k(p, f.k_max)?.k as f64),
    }
}

/// Evaluates every grid point in parallel; rows come back in row-major axis
/// order, then quantity order, then method order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let first = cfg.axes.first().ok_or_else(|| Error::Config(vec!["no axes".into()]))?;
    let xs = first.points();
    let ys: Vec<Option<f64>> = match cfg.axes.get(1) {
        Some(a) => a.points().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let grid: Vec<(f64, Option<f64>)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let cells: Vec<Result<Vec<Row>>> = grid
        .par_iter()
        .map(|&(x, y)| {
            let mut coords = vec![(first.name, x)];
            if let (Some(axis), Some(y)) = (cfg.axes.get(1), y) {
                coords.push((axis.name, y));
            }
            let point = Point::new(cfg, &coords);
            let mut rows = Vec::new();
            for &q in &cfg.quantity {
                for &m in cfg.method.concrete() {
                    let value = evaluate(q, &point, &cfg.fixed, m)?;
                    rows.push(Row { axis1: x, axis2: y, quantity: q, value, method: m });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::with_capacity(cells.len() * cfg.quantity.len());
    for cell in cells {
        rows.extend(cell?);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[Row], w: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameter(format!("CSV write failed: {e}"));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for r in rows {
        out.write_record([
            r.axis1.to_string(),
            r.axis2.map(|y| y.to_string()).unwrap_or_default(),
            r.quantity.name().to_string(),
            r.value.to_string(),
            r.method.name().to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| Error::InvalidParameter(format!("CSV write failed: {e}")))?;
    Ok(())
}

/// Sidecar path: `fig4b.csv` → `fig4b.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn metadata(cfg: &SweepConfig, rows: usize) -> Value {
    json!({
        "name": cfg.name,
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": cfg.hash(),
        "config": cfg.to_json(),
        "rows": rows,
        "columns": CSV_HEADER.split(',').collect::<Vec<_>>(),
        "axes": cfg.axes.iter().map(|a| a.name.name()).collect::<Vec<_>>(),
        "tolerances": {
            "physicality": crate::channel::PHYSICALITY_TOL,
            "thermal_tail": crate::fock::TruncationConfig::DEFAULT_TAIL_TOL,
            "impossible_event": crate::swap::IMPOSSIBLE_EVENT_TOL,
            "oracle_k_max": ORACLE_K_MAX,
        },
    })
}

/// Runs the sweep and writes the CSV plus its sidecar; returns the row count.
pub fn write_outputs(cfg: &SweepConfig, csv_path: &Path) -> Result<usize> {
    let rows = run_sweep(cfg)?;
    let io = |e: std::io::Error| Error::InvalidParameter(format!("{}: {e}", csv_path.display()));
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    write_csv(&rows, fs::File::create(csv_path).map_err(io)?)?;
    let meta = serde_json::to_string_pretty(&metadata(cfg, rows.len()))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    fs::write(meta_path(csv_path), meta + "\n").map_err(io)?;
    Ok(rows.len())
}
