use approx::assert_relative_eq;
use stochnewton_core::estimators::{fit_stream, truncation_weight, StepSchedule};
use stochnewton_core::linalg::{dist_sq, SquareMatrix};
use stochnewton_core::rng::{stream_rng, uniform};
use stochnewton_core::simulate::{DesignSpec, Simulator};
use stochnewton_core::{EstimatorConfig, EstimatorState, Observation, Parameters, TruncationConfig};

fn easy_theta() -> Parameters {
    Parameters::new(vec![0.0, 1.0, -1.0]).unwrap()
}

fn easy_stream(seed: u64) -> Simulator<DesignSpec, stochnewton_core::rng::StreamRng> {
    Simulator::new(easy_theta(), DesignSpec::uniform(2).unwrap(), stream_rng(seed, 0)).unwrap()
}

#[test]
fn tsn_inverse_matches_explicit_weighted_sum() {
    // A large floor makes the truncation branch fire on most steps.
    for trunc in [TruncationConfig::default(), TruncationConfig::new(0.3, 0.2).unwrap()] {
        let mut state = EstimatorState::zeros(EstimatorConfig::Tsn(trunc), 3);
        let mut s = SquareMatrix::identity(3);
        for obs in easy_stream(11).take(300) {
            let n = state.n() + 1;
            let alpha = truncation_weight(state.theta(), obs.phi(), n, &trunc).unwrap();
            assert!(alpha >= trunc.floor(n));
            s.add_scaled_outer(alpha, obs.phi()).unwrap();
            state.step(&obs).unwrap();
        }
        let implied = state.accumulator().unwrap().accumulated().unwrap();
        let gap = implied.sub(&s).unwrap().frobenius_norm() / s.frobenius_norm();
        assert!(gap < 1e-10, "relative gap {gap}");
    }
}

#[test]
fn truncation_floor_holds_at_every_step() {
    let trunc = TruncationConfig::default();
    let far = Parameters::new(vec![40.0, -40.0, 40.0]).unwrap();
    for (k, obs) in easy_stream(12).take(2000).enumerate() {
        let n = k as u64 + 1;
        let a = truncation_weight(&far, obs.phi(), n, &trunc).unwrap();
        let raw = stochnewton_core::model::alpha_weight(&far, obs.phi()).unwrap();
        assert!(a >= trunc.floor(n));
        if raw >= trunc.floor(n) {
            assert_eq!(a, raw);
        }
    }
}

#[test]
fn asgd_average_is_the_exact_mean_of_iterates() {
    let schedule = StepSchedule::new(2.0, 0.66).unwrap();
    let mut sgd = EstimatorState::zeros(EstimatorConfig::Sgd(schedule), 3);
    let mut asgd = EstimatorState::zeros(EstimatorConfig::Asgd(schedule), 3);
    let mut sum = [0.0; 3];
    for obs in easy_stream(13).take(100) {
        sgd.step(&obs).unwrap();
        asgd.step(&obs).unwrap();
        assert_eq!(sgd.theta(), asgd.theta());
        for (s, t) in sum.iter_mut().zip(sgd.theta().iter()) {
            *s += t;
        }
    }
    for (bar, s) in asgd.theta_bar().unwrap().iter().zip(sum) {
        assert_relative_eq!(*bar, s / 100.0, epsilon = 1e-12);
    }
}

#[test]
fn rls_is_the_ridge_solution_on_noiseless_data() {
    let target = [0.7, -1.3, 2.1];
    let mut rng = stream_rng(14, 0);
    let mut state = EstimatorState::zeros(EstimatorConfig::Rls, 3);
    let mut gram = nalgebra::DMatrix::<f64>::identity(3, 3);
    let mut moment = nalgebra::DVector::<f64>::zeros(3);
    let mut errors = Vec::new();
    for k in 1..=500 {
        let phi = vec![1.0, uniform(&mut rng, 0.0, 1.0), uniform(&mut rng, 0.0, 1.0)];
        let y: f64 = target.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let v = nalgebra::DVector::from_column_slice(&phi);
        gram += &v * v.transpose();
        moment += &v * y;
        state.step(&Observation::regression(phi, y).unwrap()).unwrap();
        if k % 50 == 0 {
            let ridge = gram.clone().lu().solve(&moment).unwrap();
            for (a, b) in state.theta().iter().zip(ridge.iter()) {
                assert_relative_eq!(*a, *b, epsilon = 1e-10);
            }
            errors.push(dist_sq(state.theta(), &target).sqrt());
        }
    }
    // the identity prior leaves an O(1/n) bias, so the error only decreases
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
}

#[test]
fn tsn_is_consistent_on_the_easy_model() {
    let theta = easy_theta();
    let mut state = EstimatorState::zeros(EstimatorConfig::Tsn(TruncationConfig::default()), 3);
    let mut early = None;
    for obs in easy_stream(15).take(100_000) {
        state.step(&obs).unwrap();
        if state.n() == 1000 {
            early = Some(dist_sq(state.theta(), &theta));
        }
    }
    let late = dist_sq(state.theta(), &theta);
    assert!(late < early.unwrap() / 10.0, "{late} vs {early:?}");
}

#[test]
fn replaying_a_stream_is_bit_identical() {
    let cfg = EstimatorConfig::Tsn(TruncationConfig::default());
    let a = fit_stream(cfg, Parameters::zeros(3), easy_stream(16).take(2000), None).unwrap();
    let b = fit_stream(cfg, Parameters::zeros(3), easy_stream(16).take(2000), None).unwrap();
    assert_eq!(a.state, b.state);
}

#[test]
fn tsn_and_sn_stay_close_with_tiny_floor() {
    let obs: Vec<_> = easy_stream(17).take(5000).collect();
    let theta = easy_theta();
    let tsn = fit_stream(EstimatorConfig::Tsn(TruncationConfig::default()), Parameters::zeros(3), &obs, None).unwrap();
    let sn = fit_stream(EstimatorConfig::Sn, Parameters::zeros(3), &obs, None).unwrap();
    let gap = dist_sq(tsn.state.theta(), sn.state.theta());
    let err = dist_sq(sn.state.theta(), &theta);
    assert!(gap < err, "gap {gap}, error {err}");
}
