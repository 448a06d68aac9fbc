//! `tbswap`: single evaluations, classification queries and figure sweeps.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 unphysical parameters,
//! 3 intractable oracle request.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tbswap::analytic;
use tbswap::channel::{bose_einstein, transducer_map, ChannelParams, TransducerParams};
use tbswap::states::{state_fidelity_analytic, state_fidelity_oracle, QubitTimeBinSpec};
use tbswap::swap::{self, classify, single_photon_parity, DetectionPattern, HeraldClass, ORACLE_K_MAX};
use tbswap::sweep::{self, SweepConfig};
use tbswap::Error;

#[derive(Parser, Debug)]
#[command(name = "tbswap", version, about = "Time-bin entanglement swapping through thermal-loss channels")]
struct Cli {
    /// Output file (sweep CSV, or JSON for other commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Built-in sweep configuration (fig2a, fig2b, fig4a, fig4b, fig5a, fig5b).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Map transducer parameters to a thermal-loss channel.
    Transducer(TransducerArgs),
    /// State or swap fidelity at one channel setting.
    Fidelity {
        kind: Kind,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
        method: MethodArg,
    },
    /// Classify a detection pattern.
    Classify {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// 2k comma-separated counts: A1,B1,A2,B2,...
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        pattern: Vec<usize>,
    },
    /// Run a parameter sweep from a JSON config or a preset.
    Sweep {
        config: Option<PathBuf>,
    },
    /// Number of time bins maximizing the swap fidelity.
    OptimalK {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = analytic::DEFAULT_K_MAX)]
        k_max: usize,
    },
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("thermal").required(true).args(["nth", "temp"])))]
struct TransducerArgs {
    #[arg(long = "zeta-m")]
    zeta_m: f64,
    #[arg(long = "zeta-o")]
    zeta_o: f64,
    /// Cooperativity.
    #[arg(long = "C")]
    cooperativity: f64,
    /// Thermal occupation of the mechanical bath.
    #[arg(long)]
    nth: Option<f64>,
    /// Bath temperature in kelvin (with --freq).
    #[arg(long, requires = "freq")]
    temp: Option<f64>,
    /// Mode frequency in hertz (with --temp).
    #[arg(long, requires = "temp")]
    freq: Option<f64>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("channel_noise").required(true).args(["nbar", "noise"])))]
struct ChannelArgs {
    #[arg(long)]
    eta: f64,
    /// Thermal occupation of the channel environment.
    #[arg(long)]
    nbar: Option<f64>,
    /// Added noise N.
    #[arg(long = "N")]
    noise: Option<f64>,
}

impl ChannelArgs {
    fn params(&self) -> tbswap::Result<ChannelParams> {
        match (self.nbar, self.noise) {
            (Some(nbar), _) => ChannelParams::thermal_loss(self.eta, nbar),
            (None, Some(n)) => ChannelParams::new(self.eta, n),
            (None, None) => unreachable!("clap enforces the channel_noise group"),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    State,
    Swap,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum MethodArg {
    Analytic,
    Oracle,
    Both,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Unphysical { .. } | Error::InvalidParameter(_) => 2,
            Error::Intractable(_) | Error::Truncation(_) => 3,
            _ => 1,
        };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

fn usage(msg: String) -> Failure {
    Failure { code: 1, err: anyhow!(msg) }
}

fn emit(cli: &Cli, value: &Value, text: String) -> Result<(), Failure> {
    if let Some(path) = &cli.out {
        let body = serde_json::to_string_pretty(value).context("serializing output")? + "\n";
        std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(value).context("serializing output")?);
    } else {
        println!("{text}");
    }
    Ok(())
}

fn cmd_transducer(cli: &Cli, a: &TransducerArgs) -> Result<(), Failure> {
    let nth = match (a.nth, a.temp, a.freq) {
        (Some(nth), _, _) => nth,
        (None, Some(t), Some(f)) => bose_einstein(f, t)?,
        _ => return Err(usage("give --nth or both --temp and --freq".into())),
    };
    let params = TransducerParams::new(a.zeta_m, a.zeta_o, a.cooperativity, nth)?;
    let ch = transducer_map(&params)?;
    let nbar = ch.params().map(|p| p.nbar()).ok();
    let value = json!({
        "zeta_m": a.zeta_m,
        "zeta_o": a.zeta_o,
        "C": a.cooperativity,
        "nth": nth,
        "eta": ch.eta,
        "N": ch.noise,
        "nbar": nbar,
        "physical": ch.physical,
        "margin": ch.margin,
    });
    // the verdict is always JSON
    println!("{}", serde_json::to_string_pretty(&value).context("serializing output")?);
    if let Some(path) = &cli.out {
        std::fs::write(path, value.to_string() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if !ch.physical {
        return Err(Error::Unphysical { margin: ch.margin }.into());
    }
    Ok(())
}

fn cmd_fidelity(
    cli: &Cli,
    kind: Kind,
    channel: &ChannelArgs,
    k: usize,
    n: usize,
    method: MethodArg,
) -> Result<(), Failure> {
    let p = channel.params()?;
    let spec = QubitTimeBinSpec::new(k, n)?;
    if method != MethodArg::Analytic && k > ORACLE_K_MAX {
        return Err(Error::Intractable(format!(
            "k = {k} exceeds the oracle limit k <= {ORACLE_K_MAX}; rerun with --method analytic"
        ))
        .into());
    }
    let cfg = swap::oracle_config(p, n);
    let mut value = json!({
        "kind": match kind { Kind::State => "state", Kind::Swap => "swap" },
        "eta": p.eta(),
        "N": p.noise(),
        "nbar": p.nbar(),
        "k": k,
        "n": n,
    });
    let mut lines = Vec::new();
    let mut fidelities = Vec::new();
    let run_analytic = method != MethodArg::Oracle;
    let run_oracle = method != MethodArg::Analytic;
    for (label, enabled) in [("analytic", run_analytic), ("oracle", run_oracle)] {
        if !enabled {
            continue;
        }
        let oracle = label == "oracle";
        let entry = match kind {
            Kind::State => {
                let f = if oracle { state_fidelity_oracle(spec, p, cfg)? } else { state_fidelity_analytic(spec, p)? };
                json!({ "fidelity": f, "infidelity": 1.0 - f })
            }
            Kind::Swap => {
                let r = if oracle { swap::swap_fidelity_oracle(p, spec, cfg)? } else { analytic::swap_fidelity(p, k, n)? };
                json!({ "fidelity": r.fidelity, "infidelity": r.infidelity, "K0": r.k0 })
            }
        };
        let f = entry["fidelity"].as_f64().unwrap_or(f64::NAN);
        let mut line = format!("{label}: fidelity = {f:.10}  infidelity = {:.4e}", 1.0 - f);
        if let Some(k0) = entry.get("K0").and_then(Value::as_f64) {
            line += &format!("  K0 = {k0:.6e}");
        }
        lines.push(line);
        fidelities.push(f);
        value[label] = entry;
    }
    if let [a, o] = fidelities[..] {
        value["delta"] = json!((a - o).abs());
        lines.push(format!("delta = {:.3e}", (a - o).abs()));
    }
    emit(cli, &value, lines.join("\n"))
}

fn cmd_classify(cli: &Cli, k: usize, n: usize, flat: &[usize]) -> Result<(), Failure> {
    if flat.len() != 2 * k {
        return Err(usage(format!("--pattern needs 2k = {} counts, got {}", 2 * k, flat.len())));
    }
    if !(1..=2).contains(&n) {
        return Err(usage(format!("--n must be 1 or 2, got {n}")));
    }
    let pattern = DetectionPattern::from_flat(flat).map_err(|e| usage(e.to_string()))?;
    let class = classify(&pattern, n);
    let trace = match class {
        HeraldClass::PhiPlus | HeraldClass::PhiMinus if n == 1 => single_photon_parity(&pattern),
        _ => None,
    };
    let mut text = class.to_string();
    if let Some(t) = &trace {
        let steps: Vec<String> = t.steps.iter().map(|(p1, p2)| format!("({p1:+},{p2:+})")).collect();
        text += &format!("\nparity trace (P1,P2): {}", steps.join(" -> "));
    }
    let value = json!({
        "pattern": flat,
        "k": k,
        "n": n,
        "class": class,
        "parity_trace": trace.map(|t| t.steps),
    });
    emit(cli, &value, text)
}

fn cmd_sweep(cli: &Cli, config: Option<&PathBuf>) -> Result<(), Failure> {
    let cfg = match (config, &cli.preset) {
        (Some(path), None) => SweepConfig::from_path(path)?,
        (None, Some(name)) => sweep::preset(name)?,
        (Some(_), Some(_)) => return Err(usage("give a config file or --preset, not both".into())),
        (None, None) => return Err(usage("sweep needs a config file or --preset <name>".into())),
    };
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", if cfg.name.is_empty() { "sweep" } else { &cfg.name })));
    let rows = sweep::write_outputs(&cfg, &path)?;
    let meta = sweep::meta_path(&path);
    if cli.json {
        let v = json!({ "csv": path, "meta": meta, "rows": rows, "config_sha256": cfg.hash() });
        println!("{}", serde_json::to_string_pretty(&v).context("serializing output")?);
    } else {
        println!("wrote {rows} rows to {} (metadata: {})", path.display(), meta.display());
    }
    Ok(())
}

fn cmd_optimal_k(cli: &Cli, channel: &ChannelArgs, k_max: usize) -> Result<(), Failure> {
    let p = channel.params()?;
    let best = analytic::optimal_k(p, k_max)?;
    let baseline = analytic::swap_fidelity_k(p, 1)?;
    let value = json!({
        "eta": p.eta(),
        "N": p.noise(),
        "nbar": p.nbar(),
        "k_max": k_max,
        "k_opt": best.k,
        "fidelity": best.fidelity,
        "infidelity": best.infidelity,
        "K0": best.k0,
        "infidelity_k1": baseline.infidelity,
    });
    let text = format!(
        "k* = {}  fidelity = {:.6}  infidelity = {:.4e}  (k = 1: {:.4e})",
        best.k, best.fidelity, best.infidelity, baseline.infidelity
    );
    emit(cli, &value, text)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TBSWAP_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("TBSWAP_THREADS must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(usage("TBSWAP_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: 1, err: e.into() })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    if cli.preset.is_some() && !matches!(cli.command, Command::Sweep { .. }) {
        return Err(usage("--preset only applies to `sweep`".into()));
    }
    match &cli.command {
        Command::Transducer(a) => cmd_transducer(cli, a),
        Command::Fidelity { kind, channel, k, n, method } => cmd_fidelity(cli, *kind, channel, *k, *n, *method),
        Command::Classify { k, n, pattern } => cmd_classify(cli, *k, *n, pattern),
        Command::Sweep { config } => cmd_sweep(cli, config.as_ref()),
        Command::OptimalK { channel, k_max } => cmd_optimal_k(cli, channel, *k_max),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
