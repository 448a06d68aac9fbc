//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print under
//! `cargo test`; exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use tbswap::analytic::{optimal_k, rho_components, swap_fidelity_k, swap_fidelity_n2, DEFAULT_K_MAX};
use tbswap::channel::{bose_einstein, transducer_to_channel, ChannelParams, TransducerParams};
use tbswap::fock::TruncationConfig;
use tbswap::states::{state_fidelity_analytic, state_fidelity_k, state_fidelity_oracle, QubitTimeBinSpec};
use tbswap::swap::{
    classify_single_photon, classify_two_photon, heralded_state, swap_fidelity_oracle, DetectionPattern,
    HeraldClass, TWO_PHOTON_TABLE,
};
use tbswap::sweep::{preset, run_sweep, Quantity, Row};

type Outcome = Result<String, String>;

fn ch(eta: f64, nbar: f64) -> ChannelParams {
    ChannelParams::thermal_loss(eta, nbar).expect("physical test channel")
}

fn within(label: &str, value: f64, target: f64, tol: f64, fails: &mut Vec<String>) -> String {
    let s = format!("{label}={value:.4}");
    if !((value - target).abs() <= tol) {
        fails.push(format!("{label}={value:.6} not within {tol} of {target}"));
    }
    s
}

fn verdict(parts: Vec<String>, fails: Vec<String>) -> Outcome {
    if fails.is_empty() {
        Ok(parts.join(", "))
    } else {
        Err(fails.join("; "))
    }
}

fn criterion_1() -> Outcome {
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    let (a, b) = (ch(0.6, 0.1), ch(0.8, 0.1));
    let f = |p, k| swap_fidelity_k(p, k).map(|r| r.fidelity).map_err(|e| e.to_string());
    parts.push(within("F(0.6;k=1)", f(a, 1)?, 0.66, 0.01, &mut fails));
    parts.push(within("F(0.6;k=4)", f(a, 4)?, 0.89, 0.01, &mut fails));
    parts.push(within("F(0.8;k=1)", f(b, 1)?, 0.80, 0.01, &mut fails));
    parts.push(within("F(0.8;k=3)", f(b, 3)?, 0.98, 0.01, &mut fails));
    for k_max in [16, DEFAULT_K_MAX] {
        let ka = optimal_k(a, k_max).map_err(|e| e.to_string())?.k;
        let kb = optimal_k(b, k_max).map_err(|e| e.to_string())?.k;
        if (ka, kb) != (4, 3) {
            fails.push(format!("optimal_k(k_max={k_max}) = ({ka}, {kb}), expected (4, 3)"));
        }
        parts.push(format!("k*(k_max={k_max})=({ka},{kb})"));
    }
    verdict(parts, fails)
}

fn criterion_2() -> Outcome {
    let tp = TransducerParams::new(0.9, 0.9, 0.65, 0.1).map_err(|e| e.to_string())?;
    let p = transducer_to_channel(&tp).map_err(|e| e.to_string())?;
    let inf1 = swap_fidelity_k(p, 1).map_err(|e| e.to_string())?.infidelity;
    let best = optimal_k(p, DEFAULT_K_MAX).map_err(|e| e.to_string())?;
    let mut fails = Vec::new();
    let parts = vec![
        format!("eta={:.4}, N={:.4}", p.eta(), p.noise()),
        within("1-F(k=1)", inf1, 0.2, 0.05, &mut fails),
        format!("1-F(k*={})={:.3e}", best.k, best.infidelity),
    ];
    if best.infidelity > 2e-2 {
        fails.push(format!("infidelity at k* = {:.4e} exceeds 2e-2", best.infidelity));
    }
    verdict(parts, fails)
}

fn rows_by_point(rows: &[Row], q: Quantity) -> HashMap<(u64, u64), f64> {
    rows.iter()
        .filter(|r| r.quantity == q)
        .map(|r| ((r.axis1.to_bits(), r.axis2.unwrap_or(f64::NAN).to_bits()), r.value))
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let base = run_sweep(&preset("fig5a").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let opt = run_sweep(&preset("fig5b").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let inf1 = rows_by_point(&base, Quantity::SwapInfidelity);
    let infk = rows_by_point(&opt, Quantity::SwapInfidelity);
    let in_factor = |x: f64, target: f64| x >= target / 1.5 && x <= target * 1.5;
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (from, to) in [(0.25, 0.02), (0.1, 5e-3)] {
        let hit = inf1
            .iter()
            .filter_map(|(key, &a)| infk.get(key).map(|&b| (a, b)))
            .filter(|&(a, b)| in_factor(a, from) && in_factor(b, to))
            .min_by(|x, y| {
                let dist = |(a, b): (f64, f64)| (a / from).ln().abs() + (b / to).ln().abs();
                dist(*x).total_cmp(&dist(*y))
            });
        match hit {
            Some((a, b)) => parts.push(format!("{from}->{to}: found {a:.3}->{b:.2e}")),
            None => fails.push(format!("no grid point improves from ~{from} to ~{to}")),
        }
    }
    if inf1.len() != 3600 || infk.len() != 3600 {
        fails.push(format!("grid sizes {} / {}, expected 3600", inf1.len(), infk.len()));
    }
    if elapsed >= 60.0 {
        fails.push(format!("grid took {elapsed:.1}s (limit 60s)"));
    }
    parts.push(format!("{elapsed:.2}s"));
    verdict(parts, fails)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut worst_f: f64 = 0.0;
    let mut worst_k0: f64 = 0.0;
    let mut cases = Vec::new();
    for k in 1..=4 {
        for nbar in [0.0, 0.1] {
            for eta in [0.5, 0.8] {
                cases.push((k, 1, eta, nbar));
            }
        }
    }
    cases.push((2, 2, 0.8, 0.05));
    let mut fails = Vec::new();
    for &(k, n, eta, nbar) in &cases {
        let p = ch(eta, nbar);
        let spec = QubitTimeBinSpec::new(k, n).map_err(|e| e.to_string())?;
        let cfg = TruncationConfig::new(n + 3, 8).map_err(|e| e.to_string())?;
        let oracle = swap_fidelity_oracle(p, spec, cfg).map_err(|e| e.to_string())?;
        let closed = if n == 1 { swap_fidelity_k(p, k).map_err(|e| e.to_string())? } else { swap_fidelity_n2(p) };
        let (df, dk) = ((closed.fidelity - oracle.fidelity).abs(), (closed.k0 - oracle.k0).abs());
        worst_f = worst_f.max(df);
        worst_k0 = worst_k0.max(dk);
        if df >= 1e-5 || dk >= 1e-5 {
            fails.push(format!("(k={k}, n={n}, eta={eta}, nbar={nbar}): |dF|={df:.2e}, |dK0|={dk:.2e}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        fails.push(format!("took {elapsed:.1}s (limit 300s)"));
    }
    verdict(
        vec![format!(
            "{} cases, max|dF|={worst_f:.2e}, max|dK0|={worst_k0:.2e}, d_sys<=5, d_env=8, {elapsed:.2}s",
            cases.len()
        )],
        fails,
    )
}

fn criterion_5() -> Outcome {
    let mut fails = Vec::new();
    let id = ChannelParams::identity();
    let cfg = TruncationConfig::new(4, 8).map_err(|e| e.to_string())?;
    for k in 1..=4 {
        let spec = QubitTimeBinSpec::single_photon(k).map_err(|e| e.to_string())?;
        let fs = state_fidelity_analytic(spec, id).map_err(|e| e.to_string())?;
        let fs_o = state_fidelity_oracle(spec, id, cfg).map_err(|e| e.to_string())?;
        let sw = swap_fidelity_k(id, k).map_err(|e| e.to_string())?;
        let sw_o = swap_fidelity_oracle(id, spec, cfg).map_err(|e| e.to_string())?;
        let prob = 0.5f64.powi(k as i32 + 1);
        for (label, v, target) in [
            ("state F", fs, 1.0),
            ("state F (oracle)", fs_o, 1.0),
            ("swap F", sw.fidelity, 1.0),
            ("swap F (oracle)", sw_o.fidelity, 1.0),
            ("K0", sw.k0, prob),
            ("K0 (oracle)", sw_o.k0, prob),
        ] {
            if (v - target).abs() > 1e-9 {
                fails.push(format!("identity k={k}: {label}={v} != {target}"));
            }
        }
    }
    // pure loss, k >= 2: for k = 1 the occupied branch survives as [rho]11
    let mut worst_rho: f64 = 0.0;
    for eta in [0.3, 0.7] {
        let p = ChannelParams::pure_loss(eta).map_err(|e| e.to_string())?;
        for k in 2..=4 {
            let spec = QubitTimeBinSpec::single_photon(k).map_err(|e| e.to_string())?;
            let st = heralded_state(p, p, spec, &DetectionPattern::canonical(k), cfg).map_err(|e| e.to_string())?;
            let closed = swap_fidelity_k(p, k).map_err(|e| e.to_string())?.fidelity;
            let comps = rho_components(p, k).map_err(|e| e.to_string())?;
            let (r11, r44) = (st.rho[[0, 0]].norm(), st.rho[[3, 3]].norm());
            worst_rho = worst_rho.max(r11).max(r44).max(comps.rho11).max(comps.rho44);
            if (st.fidelity_phi_plus - 1.0).abs() > 1e-9 || (closed - 1.0).abs() > 1e-9 {
                fails.push(format!("pure loss eta={eta} k={k}: F={} / {closed}", st.fidelity_phi_plus));
            }
            if r11.max(r44).max(comps.rho11).max(comps.rho44) > 1e-10 {
                fails.push(format!("pure loss eta={eta} k={k}: rho11={r11:.2e}, rho44={r44:.2e}"));
            }
        }
    }
    verdict(
        vec![format!("identity k=1..4 exact; pure loss k=2..4 F=1, max rho11/rho44={worst_rho:.1e}")],
        fails,
    )
}

// --- brute-force creation-operator expansion for criterion 6 ---

type Poly = HashMap<Vec<usize>, f64>;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Multiplies `poly` by the linear form `Σ_j coeffs[j] c_j†`.
fn multiply(poly: &Poly, coeffs: &[(usize, f64)]) -> Poly {
    let mut out = Poly::new();
    for (mono, &c) in poly {
        for &(j, w) in coeffs {
            let mut m = mono.clone();
            m[j] += 1;
            *out.entry(m).or_insert(0.0) += c * w;
        }
    }
    out
}

/// Output amplitudes for one qubit branch pair. Input creation operators of
/// bin `i` map as `a_A† → (c_A† + c_B†)/√2`, `a_B† → (c_A† − c_B†)/√2`.
fn branch_amplitudes(spec: QubitTimeBinSpec, qa: usize, qb: usize) -> HashMap<Vec<usize>, f64> {
    let k = spec.k();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut poly: Poly = HashMap::from([(vec![0; 2 * k], 1.0)]);
    let mut norm = 1.0;
    for bin in 0..k {
        let (na, nb) = (spec.occupation(qa, bin), spec.occupation(qb, bin));
        for _ in 0..na {
            poly = multiply(&poly, &[(2 * bin, s), (2 * bin + 1, s)]);
        }
        for _ in 0..nb {
            poly = multiply(&poly, &[(2 * bin, s), (2 * bin + 1, -s)]);
        }
        norm /= (factorial(na) * factorial(nb)).sqrt();
    }
    poly.into_iter()
        .map(|(m, c)| {
            let amp = c * norm * m.iter().map(|&x| factorial(x)).product::<f64>().sqrt();
            (m, amp)
        })
        .filter(|(_, a)| a.abs() > 1e-12)
        .collect()
}

/// Heralded-state class from the brute-force amplitudes over `{gg, ge, eg, ee}`.
fn brute_force_class(amps: &[HashMap<Vec<usize>, f64>; 4], pattern: &[usize]) -> HeraldClass {
    let v: Vec<f64> = amps.iter().map(|m| m.get(pattern).copied().unwrap_or(0.0)).collect();
    let nz = |i: usize| v[i].abs() > 1e-12;
    match (nz(0) || nz(3), nz(1) || nz(2)) {
        (false, false) => HeraldClass::Invalid,
        (true, false) => HeraldClass::PsiIndistinct,
        (false, true) if nz(1) && nz(2) && (v[1].abs() - v[2].abs()).abs() < 1e-12 => {
            if v[1] * v[2] > 0.0 {
                HeraldClass::PhiPlus
            } else {
                HeraldClass::PhiMinus
            }
        }
        _ => HeraldClass::Invalid,
    }
}

fn all_amplitudes(spec: QubitTimeBinSpec) -> [HashMap<Vec<usize>, f64>; 4] {
    [
        branch_amplitudes(spec, 0, 0),
        branch_amplitudes(spec, 0, 1),
        branch_amplitudes(spec, 1, 0),
        branch_amplitudes(spec, 1, 1),
    ]
}

/// Every pattern over `modes` modes with total photon number `total`.
fn compositions(total: usize, modes: usize) -> Vec<Vec<usize>> {
    if modes == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, modes - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn criterion_6() -> Outcome {
    use HeraldClass::*;
    let mut fails = Vec::new();
    let table_one: [([usize; 4], HeraldClass); 8] = [
        ([1, 0, 1, 0], PhiPlus),
        ([0, 1, 0, 1], PhiPlus),
        ([0, 1, 1, 0], PhiMinus),
        ([1, 0, 0, 1], PhiMinus),
        ([2, 0, 0, 0], PsiIndistinct),
        ([0, 2, 0, 0], PsiIndistinct),
        ([0, 0, 2, 0], PsiIndistinct),
        ([0, 0, 0, 2], PsiIndistinct),
    ];
    for (row, class) in table_one {
        let got = classify_single_photon(&DetectionPattern::from_flat(&row).map_err(|e| e.to_string())?);
        if got != class {
            fails.push(format!("Table I {row:?}: {got}, expected {class}"));
        }
    }
    let table_two: [([usize; 4], HeraldClass); 15] = [
        ([2, 0, 2, 0], PhiPlus),
        ([0, 2, 0, 2], PhiPlus),
        ([0, 2, 2, 0], PhiPlus),
        ([2, 0, 0, 2], PhiPlus),
        ([1, 1, 1, 1], PhiPlus),
        ([2, 0, 1, 1], PhiMinus),
        ([0, 2, 1, 1], PhiMinus),
        ([1, 1, 2, 0], PhiMinus),
        ([1, 1, 0, 2], PhiMinus),
        ([4, 0, 0, 0], PsiIndistinct),
        ([0, 4, 0, 0], PsiIndistinct),
        ([2, 2, 0, 0], PsiIndistinct),
        ([0, 0, 4, 0], PsiIndistinct),
        ([0, 0, 0, 4], PsiIndistinct),
        ([0, 0, 2, 2], PsiIndistinct),
    ];
    for (row, class) in table_two {
        let got = classify_two_photon(&DetectionPattern::from_flat(&row).map_err(|e| e.to_string())?);
        if got != class {
            fails.push(format!("Table II {row:?}: {got}, expected {class}"));
        }
    }
    if TWO_PHOTON_TABLE.len() != table_two.len() {
        fails.push(format!("library table has {} rows", TWO_PHOTON_TABLE.len()));
    }
    // the "+1" row: anything outside the table
    let outside = classify_two_photon(&DetectionPattern::from_flat(&[3, 1, 0, 0]).map_err(|e| e.to_string())?);
    if outside != Invalid {
        fails.push(format!("[3,1,0,0] classified {outside}, expected Invalid"));
    }

    // parity rule against the expansion of the beam-splitter output
    let mut parity_checked = 0;
    for k in 1..=5 {
        let spec = QubitTimeBinSpec::single_photon(k).map_err(|e| e.to_string())?;
        let amps = all_amplitudes(spec);
        for pattern in DetectionPattern::single_photon_patterns(k) {
            let brute = brute_force_class(&amps, &pattern.flat());
            let rule = classify_single_photon(&pattern);
            parity_checked += 1;
            if brute != rule {
                fails.push(format!("k={k} {pattern}: parity rule {rule}, expansion {brute}"));
            }
        }
    }
    // every pattern of Table I/II size, against the same expansion
    let mut exhaustive = 0;
    for (spec, totals) in [
        (QubitTimeBinSpec::single_photon(2).map_err(|e| e.to_string())?, vec![2]),
        (QubitTimeBinSpec::new(2, 2).map_err(|e| e.to_string())?, vec![4]),
    ] {
        let amps = all_amplitudes(spec);
        for total in totals {
            for pattern in compositions(total, 4) {
                let brute = brute_force_class(&amps, &pattern);
                let dp = DetectionPattern::from_flat(&pattern).map_err(|e| e.to_string())?;
                let rule = if spec.n() == 1 { classify_single_photon(&dp) } else { classify_two_photon(&dp) };
                exhaustive += 1;
                if brute != rule {
                    fails.push(format!("n={} {pattern:?}: table {rule}, expansion {brute}", spec.n()));
                }
            }
        }
    }
    verdict(
        vec![format!(
            "Table I 8/8, Table II 15+1, parity vs expansion {parity_checked} patterns (k<=5), {exhaustive} exhaustive k=2 patterns"
        )],
        fails,
    )
}

fn criterion_7() -> Outcome {
    let rows = run_sweep(&preset("fig4a").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let ratio = rows_by_point(&rows, Quantity::FidelityRatioN1N2);
    let f2 = rows_by_point(&rows, Quantity::SwapFidelity);
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut fails = Vec::new();
    for (key, &f) in &f2 {
        if f > 0.5 {
            let r = ratio[key];
            checked += 1;
            worst = worst.min(r);
            if r < 1.0 - 1e-9 {
                fails.push(format!(
                    "eta={}, nbar={}: ratio {r}",
                    f64::from_bits(key.0),
                    f64::from_bits(key.1)
                ));
            }
        }
    }
    if checked == 0 {
        fails.push("no grid point has F(n=2) > 0.5".into());
    }
    verdict(vec![format!("{checked}/{} points with F(n=2)>0.5, min ratio {worst:.12}", f2.len())], fails)
}

fn criterion_8() -> Outcome {
    let mut fails = Vec::new();
    let a = bose_einstein(9e9, 0.18).map_err(|e| e.to_string())?;
    let b = bose_einstein(5e9, 0.1).map_err(|e| e.to_string())?;
    let parts = vec![
        within("n(9GHz,180mK)", a, 0.100, 0.005, &mut fails),
        within("n(5GHz,100mK)", b, 0.1, 0.02, &mut fails),
    ];
    verdict(parts, fails)
}

fn criterion_9() -> Outcome {
    let mut fails = Vec::new();
    let mut worst_11: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for eta in [0.5, 0.7, 0.9] {
        for nbar in [0.05, 0.1] {
            for k in 1..=3 {
                let p = ch(eta, nbar);
                let spec = QubitTimeBinSpec::single_photon(k).map_err(|e| e.to_string())?;
                let cfg = TruncationConfig::for_encoding(1).fitted_to(nbar);
                let st = heralded_state(p, p, spec, &DetectionPattern::canonical(k), cfg).map_err(|e| e.to_string())?;
                let raw = st.unnormalized();
                let c = rho_components(p, k).map_err(|e| e.to_string())?;
                let d11 = (raw[[0, 0]].re - c.rho11).abs();
                let ratio = (raw[[1, 2]] / raw[[2, 2]]).re;
                let dr = (ratio - c.coherence_ratio).abs();
                worst_11 = worst_11.max(d11);
                worst_ratio = worst_ratio.max(dr);
                if d11 >= 1e-6 || dr >= 1e-6 {
                    fails.push(format!("(eta={eta}, nbar={nbar}, k={k}): d11={d11:.2e}, dratio={dr:.2e}"));
                }
                if k % 2 == 0 && (c.rho11 - 0.25 * c.rho11_factor).abs() > 1e-15 {
                    fails.push(format!("rho11_factor inconsistent at k={k}"));
                }
            }
        }
    }
    // the printed 1/2 + 1/2 x^k form: monotone approach to 1/2
    let p = ch(0.6, 0.1);
    let seq: Vec<f64> = (1..=64)
        .map(|k| rho_components(p, k).map(|c| c.subspace_fidelity))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if !seq.windows(2).all(|w| w[1] < w[0] && w[1] > 0.5) {
        fails.push("1/2 + 1/2 x^k is not strictly decreasing towards 1/2".into());
    }
    let tail = seq[63] - 0.5;
    verdict(
        vec![format!(
            "18 points, max|d rho11|={worst_11:.1e}, max|d ratio|={worst_ratio:.1e}; 1/2+1/2x^k decreasing, k=64 gap {tail:.1e}"
        )],
        fails,
    )
}

fn criterion_10() -> Outcome {
    let mut fails = Vec::new();
    for (eta, nbar) in [(0.6, 0.1), (0.8, 0.05), (0.3, 0.3), (0.95, 0.01), (0.5, 0.0)] {
        let p = ch(eta, nbar);
        let f: Vec<f64> = (1..=32).map(|k| state_fidelity_k(p, k)).collect();
        if let Some(k) = f.windows(2).position(|w| w[1] >= w[0]) {
            fails.push(format!("(eta={eta}, nbar={nbar}): F({}) >= F({})", k + 2, k + 1));
        }
    }
    let id = ChannelParams::identity();
    for k in 1..=8 {
        let f = state_fidelity_k(id, k);
        if f != 1.0 {
            fails.push(format!("identity k={k}: F={f:.17}"));
        }
    }
    verdict(vec!["strictly decreasing k=1..32 on 5 channels; identity F==1.0 for k<=8".into()], fails)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("time-bin landmarks and optimal k", criterion_1),
        ("transducer infidelity 0.2 -> 1e-2", criterion_2),
        ("(zeta, C) grid improvements", criterion_3),
        ("closed form vs Fock oracle", criterion_4),
        ("identity and pure-loss exactness", criterion_5),
        ("classification tables and parity rule", criterion_6),
        ("single- vs two-photon ratio", criterion_7),
        ("thermal calibration", criterion_8),
        ("heralded-state components", criterion_9),
        ("state fidelity in k", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
