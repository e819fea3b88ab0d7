use afbf::linalg::{dot, SymMatrix};
use afbf::operators::{check_lipschitz_model, check_resolvent_bound, OperatorTriple};
use afbf::problems::svm::{build_svm_qcqp, min_eigenvalue_estimate, sigma_grid};
use afbf::problems::{
    gen_linear_fractional, gen_quadratic_fractional, gen_synthetic_qcqp, Constraint, Instance,
    QcqpInstance, SvmDataset, SyntheticQcqp,
};
use afbf::solver::{solve, RunStatus, SolverConfig};
use afbf::verification::polyhedral_projection;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, dim: usize, spread: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-spread..spread)).collect()
}

fn nearby_pair(t: &dyn OperatorTriple, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let z1 = t.project(&random_point(rng, t.dim(), 3.0));
    let scale = 10f64.powf(rng.random_range(-4.0..1.0));
    let shift = random_point(rng, t.dim(), scale);
    let z2 = t.project(&z1.iter().zip(&shift).map(|(a, b)| a + b).collect::<Vec<_>>());
    (z1, z2)
}

#[test]
fn qcqp_model_holds_on_ten_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for seed in 0..10 {
        let inst = gen_synthetic_qcqp(&SyntheticQcqp::new(15, 15, 3), seed).unwrap();
        let t = inst.encode().unwrap();
        let check = check_lipschitz_model(&t, || nearby_pair(&t, &mut rng), 200).unwrap();
        assert!(check.worst_ratio <= 1.0, "seed {seed}: {}", check.worst_ratio);
    }
}

#[test]
fn fractional_models_hold_on_ten_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for seed in 0..10 {
        let lin = gen_linear_fractional(12, 1.0 + seed as f64, seed).unwrap();
        let t = lin.encode().unwrap();
        let check = check_lipschitz_model(&t, || nearby_pair(&t, &mut rng), 200).unwrap();
        assert!(check.worst_ratio <= 1.0, "linear seed {seed}: {}", check.worst_ratio);

        let quad = gen_quadratic_fractional(8, seed).unwrap();
        let t = quad.encode().unwrap();
        let check = check_lipschitz_model(&t, || nearby_pair(&t, &mut rng), 200).unwrap();
        assert!(check.worst_ratio <= 1.0, "quadratic seed {seed}: {}", check.worst_ratio);
    }
}

#[test]
fn resolvent_bound_for_normal_cones() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let inst = gen_synthetic_qcqp(&SyntheticQcqp::new(10, 10, 2), 4).unwrap();
    let t = inst.encode().unwrap();
    let dim = t.dim();
    let check = check_resolvent_bound(
        &t,
        || {
            let g = 10f64.powf(rng.random_range(-3.0..0.0));
            (random_point(&mut rng, dim, 2.0), random_point(&mut rng, dim, 2.0), g)
        },
        500,
    )
    .unwrap();
    assert!(check.worst_ratio <= 1.0 + 1e-12, "{}", check.worst_ratio);
}

fn box_instance(n: usize, m_bar: usize, m: usize, upper: Option<f64>) -> QcqpInstance {
    QcqpInstance {
        n,
        m_bar,
        q0: SymMatrix::zeros(n),
        b: vec![0.0; n],
        constraints: (0..m)
            .map(|_| Constraint {
                q: None,
                l: vec![1.0; n],
                r: 1.0,
            })
            .collect(),
        nonneg_primal: true,
        free_indices: vec![n - 1],
        upper_bound: upper,
        start: None,
    }
}

/// Halfspace description `{w : aᵢᵀw ≤ cᵢ}` of the QCQP domain.
fn qcqp_halfspaces(inst: &QcqpInstance) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dim = inst.dim();
    let unit = |i: usize, s: f64| {
        let mut v = vec![0.0; dim];
        v[i] = s;
        v
    };
    let (mut a, mut c) = (Vec::new(), Vec::new());
    for (i, (lo, hi)) in inst.bounds().into_iter().enumerate() {
        if lo.is_finite() {
            a.push(unit(i, -1.0));
            c.push(-lo);
        }
        if hi.is_finite() {
            a.push(unit(i, 1.0));
            c.push(hi);
        }
    }
    for i in inst.n..inst.n + inst.m_bar {
        a.push(unit(i, -1.0));
        c.push(0.0);
    }
    (a, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn qcqp_projection_matches_polyhedral_oracle(
        w in prop::collection::vec(-5.0f64..5.0, 7),
        upper in prop::option::of(0.5f64..3.0),
    ) {
        let inst = box_instance(4, 2, 3, upper);
        let (a, c) = qcqp_halfspaces(&inst);
        let expected = polyhedral_projection(&w, &a, &c).unwrap();
        let got = inst.project(&w);
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-9, "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn halfspace_projection_matches_polyhedral_oracle(
        seed in 0u64..1000,
        w in prop::collection::vec(-5.0f64..5.0, 5),
    ) {
        let inst = gen_linear_fractional(5, 1.0, seed).unwrap();
        let neg_d: Vec<f64> = inst.d.iter().map(|v| -v).collect();
        let expected = polyhedral_projection(&w, &[neg_d], &[0.0]).unwrap();
        let got = inst.project(&w);
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-9);
        }
        prop_assert!(dot(&inst.d, &got) >= -1e-12);
    }
}

#[test]
fn svm_kernel_constraints_have_unit_trace() {
    let data = SvmDataset::toy_separable();
    let svm = build_svm_qcqp(&data, &sigma_grid(4, 0.1, 10.0).unwrap(), 1.0).unwrap();
    let n = svm.instance.n;
    for (i, c) in svm.instance.constraints.iter().take(4).enumerate() {
        let q = c.q.as_ref().unwrap();
        let trace: f64 = (0..n).map(|j| q.get(j, j)).sum();
        assert!((trace - 1.0).abs() <= 1e-12, "kernel {i}: trace {trace}");
        assert_eq!(q.get(n - 1, n - 1), 0.0);
        let dense: Vec<f64> = (0..n * n).map(|k| q.get(k / n, k % n)).collect();
        assert!(min_eigenvalue_estimate(n, &dense) >= -1e-8);
    }
    let eq = svm.instance.constraints.last().unwrap();
    assert!(eq.q.is_none());
    assert_eq!(&eq.l[..n - 1], &data.labels[..]);
}

#[test]
fn four_point_svm_separates() {
    let data = SvmDataset::new(
        vec![vec![1.0, 1.0], vec![2.0, 1.5], vec![-1.0, -1.0], vec![-1.5, -2.0]],
        vec![1.0, 1.0, -1.0, -1.0],
    )
    .unwrap();
    let svm = build_svm_qcqp(&data, &[0.5, 2.0], 1.0).unwrap();
    let t = svm.instance.encode().unwrap();
    let cfg = SolverConfig {
        tol_residual: 1e-8,
        max_iters: 1_000_000,
        ..SolverConfig::default()
    };
    let r = solve(&t, svm.instance.start.as_ref().unwrap(), &cfg, None).unwrap();
    assert_eq!(r.status, RunStatus::Converged);
    let model = svm.model(&data, &r.final_x);
    assert_eq!(model.accuracy(&data), Some(1.0));
    assert!(svm.kernel_duals(&r.final_x).iter().all(|&y| y >= 0.0));
}

#[test]
fn strongly_convex_instances_have_positive_curvature() {
    let spec = SyntheticQcqp::new(30, 10, 2).strongly_convex(true);
    let inst = gen_synthetic_qcqp(&spec, 6).unwrap();
    let n = inst.n;
    let mut mats = vec![&inst.q0];
    mats.extend(inst.constraints.iter().filter_map(|c| c.q.as_ref()));
    for q in mats {
        let dense: Vec<f64> = (0..n * n).map(|k| q.get(k / n, k % n)).collect();
        let lam = min_eigenvalue_estimate(n, &dense);
        // p < n makes RᵀR singular, so the shift is the whole margin
        let shift = 1e-3 * (q.spectral_norm() / (1.0 + 1e-3));
        assert!(lam >= shift * (1.0 - 1e-6), "λ_min = {lam}, shift {shift}");
    }
}

#[test]
fn instances_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("afbf-encoders-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cases = [
        Instance::Qcqp(gen_synthetic_qcqp(&SyntheticQcqp::new(12, 8, 2), 3).unwrap()),
        Instance::Fractional(gen_quadratic_fractional(6, 3).unwrap()),
        Instance::Fractional(gen_linear_fractional(6, 10.0, 3).unwrap()),
    ];
    for (i, inst) in cases.iter().enumerate() {
        let path = dir.join(format!("{i}.json"));
        inst.save(&path).unwrap();
        assert_eq!(&Instance::load(&path).unwrap(), inst);
    }
    std::fs::remove_dir_all(&dir).ok();
}
