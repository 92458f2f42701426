use moddev_core::exact::{exact_tail, llr_distribution, EnumerationBudget, TailKind};
use moddev_core::hypotest::{bind_thresholds, ThresholdPolicy};
use moddev_core::montecarlo::{
    estimate_tail, resolve_tilt, tilted_log_pmf, McConfig, Tilt, TiltedSampler,
};
use moddev_core::types::{Hypothesis, HypothesisPair, Pmf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binary_fixture() -> HypothesisPair {
    HypothesisPair::uniform_priors(
        Pmf::new(vec![0.5, 0.5]).unwrap(),
        Pmf::new(vec![0.25, 0.75]).unwrap(),
    )
    .unwrap()
}

fn ternary_fixture() -> HypothesisPair {
    HypothesisPair::uniform_priors(
        Pmf::new(vec![0.2, 0.5, 0.3]).unwrap(),
        Pmf::new(vec![0.5, 0.2, 0.3]).unwrap(),
    )
    .unwrap()
}

#[test]
fn tilted_log_weight_matches_per_symbol_sum() {
    let hyp = ternary_fixture();
    for under in [Hypothesis::H1, Hypothesis::H2] {
        for t in [0.0, 0.3, 0.8] {
            let sampler = TiltedSampler::new(&hyp, under, t).unwrap();
            let log_pt = tilted_log_pmf(&hyp, t).unwrap();
            let p = hyp.pmf(under);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..200 {
                let seq = sampler.draw_sequence(&mut rng, 40);
                let direct: f64 = seq.iter().map(|&x| p.get(x).ln() - log_pt[x]).sum();
                let mut counts = vec![0u64; 3];
                seq.iter().for_each(|&x| counts[x] += 1);
                assert!((sampler.log_weight(&counts) - direct).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn replications_are_unbiased() {
    let hyp = ternary_fixture();
    let n = 20;
    let threshold = -2.0;
    let dist = llr_distribution(&hyp, Hypothesis::H1, n, EnumerationBudget::default()).unwrap();
    let exact = exact_tail(&dist, TailKind::LeqThreshold, threshold).exp();

    let estimates: Vec<f64> = (0..50)
        .map(|seed| {
            let cfg = McConfig {
                samples: 4000,
                seed,
                streams: 2,
                tilt: Tilt::Auto,
            };
            estimate_tail(
                &hyp,
                Hypothesis::H1,
                n,
                TailKind::LeqThreshold,
                threshold,
                &cfg,
            )
            .unwrap()
            .log_p_hat
            .exp()
        })
        .collect();
    let m = estimates.iter().sum::<f64>() / 50.0;
    let sd = (estimates.iter().map(|e| (e - m).powi(2)).sum::<f64>() / 49.0).sqrt();
    let se_mean = sd / 50f64.sqrt();
    assert!(
        (m - exact).abs() <= 4.0 * se_mean,
        "mean {m} exact {exact} se {se_mean}"
    );
}

#[test]
fn rare_tail_under_auto_tilt() {
    let hyp = binary_fixture();
    let n = 100;
    let policy = ThresholdPolicy::Moderate {
        eta: 0.75,
        eps1: 0.7,
        eps2: 0.1,
    };
    let t = bind_thresholds(&policy, &hyp, n).unwrap();
    let dist = llr_distribution(&hyp, Hypothesis::H1, n, EnumerationBudget::default()).unwrap();
    let exact = exact_tail(&dist, TailKind::LeqThreshold, t.hi_total());
    assert!((exact.exp() - 1.608e-5).abs() < 1e-8);

    let cfg = McConfig {
        samples: 100_000,
        seed: 2024,
        streams: 8,
        tilt: Tilt::Auto,
    };
    let est = estimate_tail(
        &hyp,
        Hypothesis::H1,
        n,
        TailKind::LeqThreshold,
        t.hi_total(),
        &cfg,
    )
    .unwrap();
    let z = (1.0 - (exact - est.log_p_hat).exp()) / est.std_err;
    assert!(z.abs() <= 3.0, "z = {z}, {est:?}");
    assert!(
        est.effective_sample_size >= 0.1 * est.samples_used as f64,
        "{est:?}"
    );
    let tilt = resolve_tilt(
        &hyp,
        Hypothesis::H1,
        n,
        TailKind::LeqThreshold,
        t.hi_total(),
        Tilt::Auto,
    )
    .unwrap();
    assert!(tilt > 0.0 && tilt < 1.0);
}

#[test]
fn h2_side_estimates_track_exact() {
    let hyp = ternary_fixture();
    let n = 60;
    let dist = llr_distribution(&hyp, Hypothesis::H2, n, EnumerationBudget::default()).unwrap();
    let threshold = 3.0;
    let exact = exact_tail(&dist, TailKind::GeqThreshold, threshold);
    for tilt in [Tilt::Auto, Tilt::None, Tilt::Manual(0.5)] {
        let cfg = McConfig {
            samples: 50_000,
            seed: 77,
            streams: 3,
            tilt,
        };
        let est = estimate_tail(
            &hyp,
            Hypothesis::H2,
            n,
            TailKind::GeqThreshold,
            threshold,
            &cfg,
        )
        .unwrap();
        let z = (1.0 - (exact - est.log_p_hat).exp()) / est.std_err;
        assert!(z.abs() <= 4.0, "{tilt:?}: z = {z}, exact {exact}, {est:?}");
    }
}
