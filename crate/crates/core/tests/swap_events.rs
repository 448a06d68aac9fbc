use tbswap::channel::ChannelParams;
use tbswap::fock::TruncationConfig;
use tbswap::states::QubitTimeBinSpec;
use tbswap::swap::{classify_single_photon, heralded_state, Bell, DetectionPattern, HeraldClass};
use tbswap::Error;

/// Every pattern whose per-bin photon number fits under the cutoff.
fn all_patterns(k: usize, d: usize) -> Vec<DetectionPattern> {
    let per_bin: Vec<(usize, usize)> = (0..d).flat_map(|a| (0..d - a).map(move |b| (a, b))).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<(usize, usize)>| {
                per_bin.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(|c| DetectionPattern::new(c).unwrap()).collect()
}

fn probability(p: ChannelParams, spec: QubitTimeBinSpec, pattern: &DetectionPattern, cfg: TruncationConfig) -> f64 {
    match heralded_state(p, p, spec, pattern, cfg) {
        Ok(st) => st.success_probability,
        Err(Error::ImpossibleEvent { .. }) => 0.0,
        Err(e) => panic!("{pattern}: {e}"),
    }
}

#[test]
fn probabilities_sum_to_one() {
    let spec = QubitTimeBinSpec::single_photon(2).unwrap();
    let id = ChannelParams::identity();
    let cfg = TruncationConfig::new(4, 8).unwrap();
    let total: f64 = all_patterns(2, 4).iter().map(|pat| probability(id, spec, pat, cfg)).sum();
    assert!((total - 1.0).abs() < 1e-12, "identity total {total}");

    let noisy = ChannelParams::thermal_loss(0.6, 0.1).unwrap();
    // bins with more than d - 1 photons in total are left out of the sum
    let cfg = TruncationConfig::new(8, 10).unwrap();
    let total: f64 = all_patterns(2, 8).iter().map(|pat| probability(noisy, spec, pat, cfg)).sum();
    assert!((total - 1.0).abs() < 1e-6, "noisy total {total}");
}

#[test]
fn identity_events_split_evenly() {
    let id = ChannelParams::identity();
    let cfg = TruncationConfig::new(4, 8).unwrap();
    for k in 1..=4 {
        let spec = QubitTimeBinSpec::single_photon(k).unwrap();
        let mut total = 0.0;
        for pat in DetectionPattern::single_photon_patterns(k) {
            let st = heralded_state(id, id, spec, &pat, cfg).unwrap();
            assert!((st.success_probability - 0.5f64.powi(k as i32 + 1)).abs() < 1e-12, "{pat}");
            let target = match classify_single_photon(&pat) {
                HeraldClass::PhiPlus => Bell::PhiPlus,
                HeraldClass::PhiMinus => Bell::PhiMinus,
                other => panic!("{pat} classified {other}"),
            };
            assert!((st.fidelity(target) - 1.0).abs() < 1e-12, "{pat}");
            total += st.success_probability;
        }
        assert!((total - 0.5).abs() < 1e-12);
    }
}

#[test]
fn noisy_events_of_one_class_are_equivalent() {
    let p = ChannelParams::thermal_loss(0.7, 0.08).unwrap();
    let cfg = TruncationConfig::for_encoding(1).fitted_to(p.nbar());
    for k in 2..=3 {
        let spec = QubitTimeBinSpec::single_photon(k).unwrap();
        let canonical = heralded_state(p, p, spec, &DetectionPattern::canonical(k), cfg).unwrap();
        for pat in DetectionPattern::single_photon_patterns(k) {
            let st = heralded_state(p, p, spec, &pat, cfg).unwrap();
            let bell = match classify_single_photon(&pat) {
                HeraldClass::PhiPlus => Bell::PhiPlus,
                _ => Bell::PhiMinus,
            };
            assert!((st.fidelity(bell) - canonical.fidelity_phi_plus).abs() < 1e-9, "{pat}");
            assert!((st.success_probability - canonical.success_probability).abs() < 1e-12, "{pat}");
        }
    }
}

#[test]
fn two_photon_table_events_herald_their_class() {
    let spec = QubitTimeBinSpec::new(2, 2).unwrap();
    let id = ChannelParams::identity();
    let cfg = TruncationConfig::new(5, 8).unwrap();
    for (flat, class) in tbswap::swap::TWO_PHOTON_TABLE {
        let pat = DetectionPattern::from_flat(&flat).unwrap();
        let st = heralded_state(id, id, spec, &pat, cfg).unwrap();
        match class {
            HeraldClass::PhiPlus => assert!((st.fidelity(Bell::PhiPlus) - 1.0).abs() < 1e-12, "{pat}"),
            HeraldClass::PhiMinus => assert!((st.fidelity(Bell::PhiMinus) - 1.0).abs() < 1e-12, "{pat}"),
            _ => {
                let pop = st.rho[[0, 0]].re + st.rho[[3, 3]].re;
                assert!((pop - 1.0).abs() < 1e-12, "{pat}: Ψ events populate gg/ee only");
            }
        }
    }
}
