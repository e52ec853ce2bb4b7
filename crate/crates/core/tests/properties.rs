use proptest::prelude::*;

use permbp::automorphism::PermutationElement;
use permbp::decoder::{decode, decode_legacy, DecoderConfig, DecoderParams, LegacyWeights};
use permbp::harness::preset;
use permbp::hessian::probe_run;
use permbp::reference::bp_decode;
use permbp::train::TrainConfig;
use permbp::{build_bch_code, build_bch_code_circulant};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn llrs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-12.0f64..12.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legacy_with_unit_weights_is_sigmoid_of_bp(llr in llrs(15), layers in 1usize..6) {
        let code = build_bch_code(4, 1).unwrap();
        let config = DecoderConfig::new(1, layers);
        let legacy = LegacyWeights::constant(&code, 1.0);
        let out = decode_legacy(Some(&legacy), &config, &code, layers, &llr).unwrap();
        let bp = bp_decode(&code, &llr, layers, config.llr_clip).unwrap();
        for (a, b) in out.iter().zip(&bp.marginals[layers - 1]) {
            prop_assert!((a - sigmoid(*b)).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_shift_commutes_with_decoding(llr in llrs(15), shift in 1usize..15, w in 0.1f64..2.0) {
        // circulant H has every cyclic shift as a graph automorphism, so tied
        // constant weights keep the decoder equivariant
        let code = build_bch_code_circulant(4, 2).unwrap();
        let params = DecoderParams::constant(&code, w);
        let config = DecoderConfig::new(2, 2);
        let id = vec![PermutationElement::identity(15); 2];
        let mut pi = PermutationElement::identity(15);
        for _ in 0..shift {
            pi = pi.compose(&PermutationElement::cyclic_shift(15));
        }
        let plain = decode(&params, &config, &code, &id, &llr).unwrap();
        let moved = decode(&params, &config, &code, &id, &pi.apply(&llr)).unwrap();
        for (a, b) in pi.apply(plain.final_output()).iter().zip(moved.final_output()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn syndrome_is_linear(a in proptest::collection::vec(0u8..2, 31), b in proptest::collection::vec(0u8..2, 31)) {
        let code = build_bch_code(5, 2).unwrap();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let sa = code.syndrome(&a).unwrap();
        let sb = code.syndrome(&b).unwrap();
        let expected: Vec<u8> = sa.iter().zip(&sb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(code.syndrome(&sum).unwrap(), expected);
    }
}

fn small_probe() -> (permbp::harness::ExperimentConfig, TrainConfig, TrainConfig) {
    let mut cfg = preset("bch15_11").unwrap();
    cfg.decoder = DecoderConfig::new(2, 2);
    cfg.train.epochs = 3;
    cfg.train.validation.frames_per_snr = 50;
    cfg.train.validation.every = 1;
    let no = TrainConfig {
        lambda: 0.0,
        ..cfg.train.clone()
    };
    let with = TrainConfig {
        lambda: 100.0,
        ..cfg.train.clone()
    };
    (cfg, no, with)
}

#[test]
fn probe_reports_are_reproducible() {
    let (cfg, no, with) = small_probe();
    let code = cfg.build_code().unwrap();
    let res = cfg.build_reservoir(&code).unwrap();
    let a = probe_run(&code, &cfg.decoder, &no, &with, &res, &[0, 2], 5).unwrap();
    let b = probe_run(&code, &cfg.decoder, &no, &with, &res, &[0, 2], 5).unwrap();
    for (x, y) in [(&a.without_l2, &b.without_l2), (&a.with_l2, &b.with_l2)] {
        assert_eq!(x.probe_loss, y.probe_loss);
        assert_eq!(x.weights, y.weights);
        let ex: Vec<_> = x.spectra.iter().map(|s| s.eigenvalues.clone()).collect();
        let ey: Vec<_> = y.spectra.iter().map(|s| s.eigenvalues.clone()).collect();
        assert_eq!(ex, ey);
    }
}

#[test]
fn penalty_raises_positive_ratio_after_one_epoch() {
    let (cfg, no, with) = small_probe();
    let code = cfg.build_code().unwrap();
    let res = cfg.build_reservoir(&code).unwrap();
    let r = probe_run(&code, &cfg.decoder, &no, &with, &res, &[1], 5).unwrap();
    let (a, b) = (&r.without_l2.spectra[0], &r.with_l2.spectra[0]);
    assert_eq!((a.epoch, b.epoch), (1, 1));
    assert!(b.positive_ratio > a.positive_ratio, "{} vs {}", b.positive_ratio, a.positive_ratio);
    assert!(b.condition_number < a.condition_number);
}
