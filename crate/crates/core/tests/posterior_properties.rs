use protest::dist::{classification_dissimilarity, ParametricCdf, StepCdf};
use protest::epsilon::epsilon_from_prior;
use protest::samplers::{dp_posterior_draws, draw_rng, pt_posterior_draws, DpSpec, InfimumDrawSet, PtSpec};

#[test]
fn dp_posterior_tracks_the_empirical_cdf() {
    let n01 = ParametricCdf::normal(0.0, 1.0).unwrap();
    let mut rng = draw_rng(11, 0);
    let data: Vec<f64> = (0..500).map(|_| n01.sample(&mut rng)).collect();
    let spec = DpSpec::new(1.0, n01);
    let draws = dp_posterior_draws(&data, &spec, 400, 3).unwrap();
    let emp = StepCdf::empirical(&data).unwrap();
    for p in [0.25, 0.5, 0.75] {
        let q = emp.quantile(p).unwrap();
        let mean = draws.iter().map(|d| d.eval(q)).sum::<f64>() / draws.len() as f64;
        assert!((mean - emp.eval(q)).abs() < 0.05, "at {q}: {mean} vs {}", emp.eval(q));
    }
}

#[test]
fn polya_tree_prior_threshold() {
    // prior draws of the centered classification dissimilarity between two
    // independent trees, median per c, most restrictive across c
    let centering = ParametricCdf::normal(0.0, 1.0).unwrap();
    let mut medians = Vec::new();
    for c in [1.0, 4.0, 7.0, 10.0] {
        let spec = PtSpec {
            hyper_c: c,
            depth: 12,
            centering,
        };
        let pairs = pt_posterior_draws(&[], &[], &spec, 4000, 2024).unwrap();
        let values = pairs
            .iter()
            .map(|(x, y)| classification_dissimilarity(x, y).map(|d| d - 0.5))
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let set = InfimumDrawSet::new(values, 2024).unwrap();
        medians.push(epsilon_from_prior(&set, 0.5).unwrap());
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    let eps = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((eps - 0.0657).abs() <= 0.01, "{eps}");
}
