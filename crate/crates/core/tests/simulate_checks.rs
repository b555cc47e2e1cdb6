use stochnewton_core::model::sigmoid;
use stochnewton_core::rng::stream_rng;
use stochnewton_core::simulate::{gen_observation, paper_theta, recode_labels, to_rademacher, DesignSpec, Simulator};
use stochnewton_core::Parameters;

#[test]
fn generator_is_calibrated_by_decile() {
    let theta = paper_theta();
    let sim = Simulator::new(theta.clone(), DesignSpec::uniform(10).unwrap(), stream_rng(31, 0)).unwrap();
    let mut draws: Vec<(f64, f64)> = sim.take(100_000).map(|o| (sigmoid(theta.linear_predictor(o.phi()).unwrap()), o.y())).collect();
    draws.sort_by(|a, b| a.0.total_cmp(&b.0));
    for bin in draws.chunks(draws.len() / 10) {
        let n = bin.len() as f64;
        let p_mean = bin.iter().map(|d| d.0).sum::<f64>() / n;
        let y_mean = bin.iter().map(|d| d.1).sum::<f64>() / n;
        let var = bin.iter().map(|d| d.0 * (1.0 - d.0)).sum::<f64>() / (n * n);
        let se = var.sqrt().max(1e-12);
        assert!((y_mean - p_mean).abs() <= 3.0 * se, "bin mean {p_mean}: observed {y_mean}, se {se}");
    }
}

#[test]
fn fair_and_saturated_models() {
    let design = DesignSpec::uniform(3).unwrap();
    let mut rng = stream_rng(32, 0);
    let zero = Parameters::zeros(4);
    let mean = (0..100_000).map(|_| gen_observation(&zero, &design, &mut rng).unwrap().y()).sum::<f64>() / 1e5;
    assert!((mean - 0.5).abs() < 0.01);
    let sure = Parameters::new(vec![50.0, 0.0, 0.0, 0.0]).unwrap();
    assert!((0..10_000).all(|_| gen_observation(&sure, &design, &mut rng).unwrap().y() == 1.0));
}

#[test]
fn rademacher_round_trip_preserves_order() {
    let sim = Simulator::new(paper_theta(), DesignSpec::uniform(10).unwrap(), stream_rng(33, 0)).unwrap();
    let original: Vec<_> = sim.take(100).collect();
    let rows = original.iter().map(|o| (o.covariates().to_vec(), to_rademacher(o.y())));
    let back: Vec<_> = recode_labels(rows).collect::<Result<_, _>>().unwrap();
    assert_eq!(back, original);
}

#[test]
fn bad_rademacher_label_names_its_row() {
    let rows = vec![(vec![0.1], 1.0), (vec![0.2], -1.0), (vec![0.3], 0.0)];
    let out: Vec<_> = recode_labels(rows).collect();
    assert!(out[0].is_ok() && out[1].is_ok());
    assert_eq!(out[2].as_ref().unwrap_err().step(), Some(3));
}
