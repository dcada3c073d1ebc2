use dynhd::data::{projection_gain, split, synth_blobs, Fractions, NormMode, NormalizationSpec};
use dynhd::hdc::{bundle, cosine_similarity, Hypervector};
use dynhd::learner::{train, Mode, TrainConfig};
use dynhd::rng;
use dynhd::robustness::{noise_sweep, NoiseGrid, SweepTarget};

#[test]
fn bundle_remembers_members() {
    let mut r = rng::stream(21, "bundle");
    let wins = (0..100)
        .filter(|_| {
            let a = Hypervector::random_bipolar(10_000, &mut r);
            let b = Hypervector::random_bipolar(10_000, &mut r);
            let fresh = Hypervector::random_bipolar(10_000, &mut r);
            let s = bundle(&[a.as_slice(), b.as_slice()]).unwrap();
            cosine_similarity(s.as_slice(), a.as_slice()).unwrap() > cosine_similarity(s.as_slice(), fresh.as_slice()).unwrap()
        })
        .count();
    assert!(wins >= 99, "{wins}/100");
}

#[test]
fn noise_loss_grows_with_error_rate() {
    let ds = synth_blobs(10, 4, 250, 5.0, 3).unwrap();
    let (tr, _, te) = split(&ds, Fractions::new(0.8, 0.0, 0.2).unwrap(), true, 3).unwrap();
    let spec = NormalizationSpec::fit(&tr, NormMode::Zscore).unwrap().with_gain(projection_gain(10));
    let (tr, te) = (spec.apply(&tr).unwrap(), spec.apply(&te).unwrap());
    let cfg = TrainConfig {
        dim: 512,
        mode: Mode::Dynamic,
        max_iters: 10,
        seed: 3,
        ..TrainConfig::default()
    };
    let t = train(&cfg, &tr, None).unwrap();
    let target = SweepTarget {
        encoded: t.encoder.encode_batch(&te.features).unwrap(),
        model: t.model,
        labels: te.labels.clone(),
    };
    let rates = vec![0.0, 1.0, 5.0, 10.0, 20.0, 40.0];
    let grid = NoiseGrid {
        dims: vec![512],
        bits: vec![1, 8],
        rates: rates.clone(),
    };
    let cells = noise_sweep(&[target], &grid, 30, 7).unwrap();
    for bits in [1u8, 8] {
        let losses: Vec<f64> = rates
            .iter()
            .map(|&r| cells.iter().find(|c| c.bits == bits && c.rate == r).unwrap().mean_loss)
            .collect();
        assert_eq!(losses[0], 0.0);
        for w in losses.windows(2) {
            assert!(w[1] >= w[0] - 0.5, "{bits}-bit losses {losses:?}");
        }
    }
}
