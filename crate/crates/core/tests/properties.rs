mod common;

use std::sync::OnceLock;

use avgwave_core::applications::{self, SampleSet};
use avgwave_core::graph::WeightedGraph;
use avgwave_core::transform::{analyze_averages, read_pyramid, write_pyramid, PyramidHeader, WaveletPyramid};
use proptest::prelude::*;

use common::{max_abs, max_abs_diff, pipeline, random_graph, Pipeline};

const N: usize = 120;

fn fixture() -> &'static (WeightedGraph, Pipeline) {
    static FIXTURE: OnceLock<(WeightedGraph, Pipeline)> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let graph = random_graph(N, N / 2, true, 42);
        let p = pipeline(&graph, 1, 42);
        (graph, p)
    })
}

fn signal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, N)
}

fn close(a: &[f64], b: &[f64], scale: f64) -> bool {
    max_abs_diff(a, b) <= 1e-8 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reconstruction_is_exact(f in signal()) {
        let (g, p) = fixture();
        let back = p.transform.inverse(&p.transform.forward(&f, g).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&back, &f) <= 1e-8 * max_abs(&f));
    }

    #[test]
    fn forward_is_linear(f in signal(), h in signal(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (g, p) = fixture();
        let combo: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let lhs = p.transform.forward(&combo, g).unwrap();
        let pf = p.transform.forward(&f, g).unwrap();
        let ph = p.transform.forward(&h, g).unwrap();
        let rhs: Vec<f64> = pf.alpha.iter().zip(&ph.alpha).map(|(x, y)| a * x + b * y).collect();
        let scale = max_abs(&pf.alpha).max(max_abs(&ph.alpha)) * (a.abs() + b.abs());
        prop_assert!(close(&lhs.alpha, &rhs, scale));
        prop_assert!((lhs.root_beta - (a * pf.root_beta + b * ph.root_beta)).abs() <= 1e-8 * scale.max(1.0));
    }

    #[test]
    fn shift_only_moves_the_root(f in signal(), c in -100.0f64..100.0) {
        let (g, p) = fixture();
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        let a = p.transform.forward(&f, g).unwrap();
        let b = p.transform.forward(&shifted, g).unwrap();
        prop_assert!(close(&a.alpha, &b.alpha, max_abs(&a.alpha) + c.abs()));
        prop_assert!((b.root_beta - a.root_beta - c).abs() <= 1e-8 * (1.0 + c.abs()));
    }

    #[test]
    fn coefficients_sum_to_zero_per_parent(f in signal()) {
        let (g, p) = fixture();
        let pyramid = p.transform.forward(&f, g).unwrap();
        prop_assert!(pyramid.zero_sum_residual(&p.tree) <= 1e-8);
        for node in p.tree.nodes().iter().filter(|n| n.children.len() == 1) {
            prop_assert_eq!(pyramid.alpha[node.children[0]], 0.0);
        }
    }

    #[test]
    fn averages_satisfy_two_scale_relation(f in signal()) {
        let (g, p) = fixture();
        let averages = analyze_averages(&f, &p.tree, g).unwrap();
        prop_assert!(averages.two_scale_residual(&p.tree) <= 1e-10);
        let rebuilt = p.transform.inverse_averages(&p.transform.forward(&f, g).unwrap()).unwrap();
        prop_assert!(close(&rebuilt.beta, &averages.beta, max_abs(&f)));
    }

    #[test]
    fn denoise_is_idempotent_and_linear(f in signal(), h in signal(), cutoff in 0usize..7) {
        let (g, p) = fixture();
        let once = applications::denoise_with(&p.transform, g, &f, cutoff).unwrap();
        let twice = applications::denoise_with(&p.transform, g, &once, cutoff).unwrap();
        prop_assert!(close(&once, &twice, max_abs(&f)));
        let sum: Vec<f64> = f.iter().zip(&h).map(|(x, y)| x + y).collect();
        let dh = applications::denoise_with(&p.transform, g, &h, cutoff).unwrap();
        let ds = applications::denoise_with(&p.transform, g, &sum, cutoff).unwrap();
        let expected: Vec<f64> = once.iter().zip(dh.iter()).map(|(x, y)| x + y).collect();
        prop_assert!(close(&ds, &expected, max_abs(&sum)));
    }

    #[test]
    fn full_sampling_regression_recovers_signal(f in signal()) {
        let (g, p) = fixture();
        let samples = SampleSet::new(f.iter().copied().enumerate().collect(), N).unwrap();
        let estimate = applications::regress_with(&p.transform, g, &samples).unwrap();
        prop_assert!(close(&estimate, &f, max_abs(&f)));
    }

    #[test]
    fn pyramid_files_round_trip(root in -1e6f64..1e6, alpha in prop::collection::vec(-1e3f64..1e3, 1..64)) {
        let mut values = alpha;
        values[0] = 0.0;
        let pyramid = WaveletPyramid { root_beta: root, alpha: values };
        let header = PyramidHeader {
            graph_hash: "g".into(),
            tree_hash: "t".into(),
            p: 2.5,
            n_eigs: 7,
            moments: 1,
            ridge: None,
        };
        let mut buf = Vec::new();
        write_pyramid(&pyramid, &header, &mut buf).unwrap();
        let (back, back_header) = read_pyramid(buf.as_slice()).unwrap();
        prop_assert_eq!(back, pyramid);
        prop_assert_eq!(back_header, header);
    }
}

#[test]
fn zeroing_everything_leaves_the_mean() {
    let (g, p) = fixture();
    let f: Vec<f64> = (0..N).map(|i| (i as f64).sqrt()).collect();
    let out = applications::denoise_with(&p.transform, g, &f, 0).unwrap();
    let mean = g.weighted_average(&f, &(0..N).collect::<Vec<_>>()).unwrap();
    assert!(out.iter().all(|v| (v - mean).abs() < 1e-12));
    let same = applications::denoise_with(&p.transform, g, &f, p.tree.l_max()).unwrap();
    assert!(max_abs_diff(&same, &f) <= 1e-8 * max_abs(&f));
}

#[test]
fn single_sample_regression_is_constant() {
    let (g, p) = fixture();
    let samples = SampleSet::new(vec![(17, -4.5)], N).unwrap();
    let estimate = applications::regress_with(&p.transform, g, &samples).unwrap();
    assert!(estimate.iter().all(|&v| v == -4.5));
}
