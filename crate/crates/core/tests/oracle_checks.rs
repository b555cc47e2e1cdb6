use approx::assert_relative_eq;
use stochnewton_core::exec::Executor;
use stochnewton_core::linalg::{symmetric_eigenvalues, SquareMatrix};
use stochnewton_core::oracle::{hessian_eigen_table, mc_gradient, mc_hessian, mc_hessian_with, mc_objective};
use stochnewton_core::rng::{stream_rng, uniform};
use stochnewton_core::simulate::{DesignSpec, InterceptOnly};
use stochnewton_core::Parameters;

/// Runs jobs in reverse order to shake out any dependence on scheduling.
struct Reversed;

impl Executor for Reversed {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<(usize, T)> = (0..count).rev().map(|i| (i, f(i))).collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, t)| t).collect()
    }
}

fn easy() -> (Parameters, DesignSpec) {
    (Parameters::new(vec![0.0, 1.0, -1.0]).unwrap(), DesignSpec::uniform(2).unwrap())
}

fn shifted(h: &Parameters, dir: &[f64], eps: f64) -> Parameters {
    Parameters::new(h.iter().zip(dir).map(|(a, b)| a + eps * b).collect()).unwrap()
}

#[test]
fn scalar_objective_value() {
    let v = mc_objective(&Parameters::new(vec![1.0]).unwrap(), &Parameters::zeros(1), &InterceptOnly, 10, 0).unwrap();
    assert_relative_eq!(v.value, (1.0 + 1f64.exp()).ln() - 0.5, max_relative = 1e-15);
    assert_relative_eq!(v.value, 0.813262, epsilon = 1e-6);
}

#[test]
fn gradient_matches_finite_differences_of_objective() {
    let (theta, design) = easy();
    let h = Parameters::new(vec![0.4, -0.3, 0.8]).unwrap();
    let g = mc_gradient(&h, &theta, &design, 100_000, 9).unwrap().value;
    let eps = 1e-4;
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let up = mc_objective(&shifted(&h, &e, eps), &theta, &design, 100_000, 9).unwrap().value;
        let down = mc_objective(&shifted(&h, &e, -eps), &theta, &design, 100_000, 9).unwrap().value;
        assert_relative_eq!(g[i], (up - down) / (2.0 * eps), epsilon = 1e-5);
    }
}

#[test]
fn hessian_matches_directional_difference_of_gradient() {
    let (theta, design) = easy();
    let n = 1_000_000;
    let hess = mc_hessian(&theta, &design, n, 21).unwrap().value;
    let mut rng = stream_rng(22, 0);
    for _ in 0..3 {
        let dir: Vec<f64> = (0..3).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
        let eps = 1e-4;
        let up = mc_gradient(&shifted(&theta, &dir, eps), &theta, &design, n, 21).unwrap().value;
        let down = mc_gradient(&shifted(&theta, &dir, -eps), &theta, &design, n, 21).unwrap().value;
        let hv = hess.mul_vec(&dir).unwrap();
        for (fd, exact) in up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * eps)).zip(&hv) {
            assert_relative_eq!(fd, *exact, max_relative = 2e-4);
        }
    }
}

#[test]
fn objective_is_minimized_at_the_truth() {
    let (theta, design) = easy();
    let at_truth = mc_objective(&theta, &theta, &design, 100_000, 4).unwrap().value;
    let mut rng = stream_rng(23, 0);
    for _ in 0..20 {
        let h = Parameters::new((0..3).map(|_| uniform(&mut rng, -3.0, 3.0)).collect()).unwrap();
        // with common samples each conditional gap is a Bernoulli divergence, hence ≥ 0
        assert!(mc_objective(&h, &theta, &design, 100_000, 4).unwrap().value >= at_truth);
    }
}

#[test]
fn hessian_is_positive_semidefinite() {
    let mut rng = stream_rng(24, 0);
    for d in [1, 3, 6] {
        let design = DesignSpec::uniform(d).unwrap();
        let h = Parameters::new((0..=d).map(|_| uniform(&mut rng, -20.0, 20.0)).collect()).unwrap();
        let m = mc_hessian(&h, &design, 20_000, 5).unwrap().value;
        let eig = symmetric_eigenvalues(&m).unwrap();
        assert!(*eig.last().unwrap() >= -1e-12, "{eig:?}");
    }
}

#[test]
fn estimates_do_not_depend_on_scheduling() {
    let (theta, design) = easy();
    let n = 5 * (1 << 16) + 123;
    let a = mc_hessian(&theta, &design, n, 6).unwrap();
    let b = mc_hessian_with(&Reversed, &theta, &design, n, 6).unwrap();
    let c = mc_hessian(&theta, &design, n, 6).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a.value, mc_hessian(&theta, &design, n, 7).unwrap().value);
}

#[test]
fn eigen_table_is_descending_and_matches_hessian() {
    let (theta, design) = easy();
    let table = hessian_eigen_table(&theta, &design, 200_000, 8).unwrap();
    let m: SquareMatrix = mc_hessian(&theta, &design, 200_000, 8).unwrap().value;
    assert_eq!(table, symmetric_eigenvalues(&m).unwrap());
    assert!(table.windows(2).all(|w| w[0] >= w[1]));
    assert!(table.iter().all(|&v| v > 0.0));
}
