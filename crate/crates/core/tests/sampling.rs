mod common;

use bnrisk::data::{build_default_generator, summarize, Dataset};
use bnrisk::inference::{ancestral_sample, marginal};
use common::random_network;

#[test]
fn empirical_marginals_converge() {
    let spec = build_default_generator(3);
    let n = 100_000;
    let data = spec.simulate(n);
    let summary = summarize(&data);
    for v in spec.network.variables() {
        let exact = marginal(&spec.network, &v.name).unwrap();
        for (s, p) in exact.states.iter().zip(&exact.probabilities) {
            let got = summary.percentage(&v.name, s).unwrap() / 100.0;
            assert!((got - p).abs() < 0.01, "{}={s}: {got} vs {p}", v.name);
        }
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let net = random_network(5, 6, 3);
    let a = ancestral_sample(&net, 500, 9);
    let b = ancestral_sample(&net, 500, 9);
    let c = ancestral_sample(&net, 500, 10);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let da = Dataset::from_sample_batch(&net, &a);
    assert_eq!(da.to_csv(), Dataset::from_sample_batch(&net, &b).to_csv());
}
