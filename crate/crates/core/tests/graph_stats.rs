mod common;

use common::chi_square_pvalue;
use pccurve::GraphSpec;

/// Maximum-likelihood (Clauset) exponent of the degree tail above `k_min`.
fn tail_exponent(degrees: &[usize], k_min: usize) -> f64 {
    let tail: Vec<f64> = degrees
        .iter()
        .filter(|&&k| k >= k_min)
        .map(|&k| k as f64)
        .collect();
    let lo = k_min as f64 - 0.5;
    1.0 + tail.len() as f64 / tail.iter().map(|k| (k / lo).ln()).sum::<f64>()
}

#[test]
fn static_model_tail_matches_exponent() {
    // Weight exponent 0.5 gives a degree exponent of 1 + 1/0.5 = 3.
    let mut degrees = Vec::new();
    for seed in 0..5 {
        degrees.extend(
            GraphSpec::ba_static(10_000, 6.0, 0.5, seed)
                .generate()
                .unwrap()
                .degrees(),
        );
    }
    let gamma = tail_exponent(&degrees, 12);
    assert!((2.5..=3.5).contains(&gamma), "gamma = {gamma}");
}

#[test]
fn static_model_without_weights_matches_er_degrees() {
    let n = 2000;
    let mut ba = [0u64; 12];
    let mut er = [0u64; 12];
    for seed in 0..10 {
        for (hist, spec) in [
            (&mut ba, GraphSpec::ba_static(n, 6.0, 0.0, seed)),
            (&mut er, GraphSpec::er(n, 6.0, seed)),
        ] {
            for k in spec.generate().unwrap().degrees() {
                hist[k.min(11)] += 1;
            }
        }
    }
    // Two-sample comparison via the pooled expected counts; low bins merged.
    let merge = |h: &[u64; 12]| {
        let mut v = vec![h[..3].iter().sum::<u64>()];
        v.extend_from_slice(&h[3..]);
        v
    };
    let (ba, er) = (merge(&ba), merge(&er));
    let expected: Vec<f64> = ba
        .iter()
        .zip(&er)
        .map(|(a, b)| (a + b) as f64 / 2.0)
        .collect();
    let p = chi_square_pvalue(&ba, &expected);
    assert!(p > 0.001, "p = {p}, ba {ba:?}, er {er:?}");
}

#[test]
fn er_degrees_average_to_target() {
    let g = GraphSpec::er(3000, 8.0, 4).generate().unwrap();
    let mean = 2.0 * g.edge_count() as f64 / 3000.0;
    assert!((mean - 8.0).abs() < 0.25, "{mean}");
}
