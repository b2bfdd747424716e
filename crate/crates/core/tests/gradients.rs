use commlearn::codes::{build_tanner, builtin_matrix, BinaryMatrix, Encoder, TannerGraph};
use commlearn::grad::{decoder_backward, finite_diff_check, Differentiable};
use commlearn::rng::seeded;
use commlearn::train::{
    frame_batch, loss_and_adjoints, DataSource, DecoderObjective, LossConfig, LossFunction,
};
use commlearn::wbp::{decode_with_trace, WeightMode, WeightSet};
use rand::Rng;

fn bch15() -> TannerGraph {
    build_tanner(&builtin_matrix("bch-15-7").unwrap()).unwrap()
}

fn randomize(w: &mut WeightSet, seed: u64) {
    let mut rng = seeded(seed, 9);
    for x in w.channel_values_mut() {
        *x = rng.random_range(0.5..1.5);
    }
    for x in w.message_values_mut() {
        *x = rng.random_range(0.5..1.5);
    }
}

fn check(graph: &TannerGraph, w: WeightSet, train_damping: bool, loss: LossConfig, frames: usize) {
    let encoder = Encoder::new(&graph.to_matrix());
    let data = frame_batch(&encoder, DataSource::RandomCodewords, (1.0, 4.0), 5, frames).unwrap();
    let obj = DecoderObjective {
        graph,
        template: w.clone(),
        train_damping,
        frames: &data,
        loss,
    };
    let params = w.to_params(train_damping);
    let n = obj.num_params();
    let mut rng = seeded(3, 3);
    let mut probe: Vec<usize> = (0..20.min(n)).map(|_| rng.random_range(0..n)).collect();
    if train_damping {
        probe.push(n - 1);
    }
    let report = finite_diff_check(&obj, &params, 1e-6, Some(&probe)).unwrap();
    assert!(report.passes(1e-4), "{report:?}");
    assert!(!report.checked.is_empty());
}

const MULTI: LossConfig = LossConfig {
    function: LossFunction::Modified,
    multi: true,
};

#[test]
fn fully_weighted_multi_loss_matches_finite_differences() {
    let g = bch15();
    let mut w = WeightSet::new(WeightMode::FullyWeighted, false, 5, &g).with_damping(0.8);
    randomize(&mut w, 1);
    check(&g, w, true, MULTI, 4);
}

#[test]
fn simple_scaled_shared_untied_matches_finite_differences() {
    let g = bch15();
    let mut w = WeightSet::new(WeightMode::SimpleScaled, true, 6, &g)
        .with_per_iteration_damping(0.6)
        .with_untied_output();
    randomize(&mut w, 2);
    check(&g, w, true, MULTI, 3);
    let ce = LossConfig {
        function: LossFunction::CrossEntropy,
        multi: false,
    };
    let mut w = WeightSet::new(WeightMode::SimpleScaled, false, 4, &g).with_damping(0.9);
    randomize(&mut w, 4);
    check(&g, w, true, ce, 3);
}

#[test]
fn linear_loss_gives_llr() {
    // H = [1 1], llr = (3, 0): s_0 = w_ch * 3 + w_msg * 0
    let g = build_tanner(&BinaryMatrix::from_rows(&[vec![1, 1]]).unwrap()).unwrap();
    let w = WeightSet::new(WeightMode::SimpleScaled, false, 1, &g);
    let llr = [3.0, 0.0];
    let (_, trace) = decode_with_trace(&llr, &g, &w).unwrap();
    let grad = decoder_backward(&llr, &g, &w, &trace, &[vec![1.0, 0.0]], false).unwrap();
    assert_eq!(grad.values(), &[3.0, 0.0]);
}

#[test]
fn damping_gradient_carries_sigmoid_slope() {
    let g = bch15();
    let w = WeightSet::plain(3, &g, 0.5);
    let encoder = Encoder::new(&g.to_matrix());
    let f = &frame_batch(&encoder, DataSource::RandomCodewords, (2.0, 2.0), 1, 1).unwrap()[0];
    let (state, trace) = decode_with_trace(&f.llr, &g, &w).unwrap();
    let (_, adj) = loss_and_adjoints(&state.output_llrs, &f.bits, MULTI).unwrap();
    let d_logit = decoder_backward(&f.llr, &g, &w, &trace, &adj, true).unwrap();
    // the raw d/dgamma is recovered by undoing the 0.25 factor
    let obj_raw = {
        let h = 1e-6;
        let mut lo = w.clone();
        lo.set_damping(0.5 - h);
        let mut hi = w.clone();
        hi.set_damping(0.5 + h);
        let val = |w: &WeightSet| {
            let (s, _) = decode_with_trace(&f.llr, &g, w).unwrap();
            loss_and_adjoints(&s.output_llrs, &f.bits, MULTI).unwrap().0
        };
        (val(&hi) - val(&lo)) / (2.0 * h)
    };
    let rel = (d_logit.values()[0] / 0.25 - obj_raw).abs() / obj_raw.abs().max(1e-8);
    assert!(rel < 1e-5, "{} vs {}", d_logit.values()[0] / 0.25, obj_raw);
}

#[test]
fn saturated_damping_has_vanishing_gradient() {
    let g = bch15();
    let w = WeightSet::plain(3, &g, 1.0);
    let encoder = Encoder::new(&g.to_matrix());
    let f = &frame_batch(&encoder, DataSource::RandomCodewords, (2.0, 2.0), 1, 1).unwrap()[0];
    let (state, trace) = decode_with_trace(&f.llr, &g, &w).unwrap();
    let (_, adj) = loss_and_adjoints(&state.output_llrs, &f.bits, MULTI).unwrap();
    let d = decoder_backward(&f.llr, &g, &w, &trace, &adj, true).unwrap();
    assert_eq!(d.values(), &[0.0]);
}

#[test]
fn backward_is_linear_in_output_adjoints() {
    let g = build_tanner(&builtin_matrix("bch-63-36-cr").unwrap()).unwrap();
    let mut w = WeightSet::new(WeightMode::FullyWeighted, false, 20, &g).with_damping(0.7);
    randomize(&mut w, 7);
    let encoder = Encoder::new(&g.to_matrix());
    let f = &frame_batch(&encoder, DataSource::RandomCodewords, (3.0, 3.0), 2, 1).unwrap()[0];
    let (state, trace) = decode_with_trace(&f.llr, &g, &w).unwrap();
    let (_, a1) = loss_and_adjoints(&state.output_llrs, &f.bits, MULTI).unwrap();
    let ce = LossConfig {
        function: LossFunction::CrossEntropy,
        multi: true,
    };
    let (_, a2) = loss_and_adjoints(&state.output_llrs, &f.bits, ce).unwrap();
    let (a, b) = (0.3, -1.7);
    let mix: Vec<Vec<f64>> = a1
        .iter()
        .zip(&a2)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
        .collect();
    let g1 = decoder_backward(&f.llr, &g, &w, &trace, &a1, true).unwrap();
    let g2 = decoder_backward(&f.llr, &g, &w, &trace, &a2, true).unwrap();
    let gm = decoder_backward(&f.llr, &g, &w, &trace, &mix, true).unwrap();
    for i in 0..gm.len() {
        let expect = a * g1.values()[i] + b * g2.values()[i];
        assert!((gm.values()[i] - expect).abs() <= 1e-12, "{i}");
    }
}
