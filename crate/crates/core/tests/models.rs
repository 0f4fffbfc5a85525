//! Model families against hand-derived or independently computed answers.

mod common;

use pcsflow_core::models::{
    predict, train, train_grid, GridConfig, ModelFamily, ModelSpec, RidgeModel, Targets, Task,
};
use pcsflow_core::tabular::{Cell, Dataset, Dtype, Role};
use rand::Rng;

fn numeric(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|x| Cell::Numeric(*x)).collect()
}

fn labels(v: &[&str]) -> Vec<Cell> {
    v.iter().map(|s| Cell::category(*s)).collect()
}

#[test]
fn logistic_gradient_matches_central_differences() {
    for seed in 0..5 {
        let err = common::logistic_gradient_error(seed, 1e-5);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

/// Gaussian elimination with partial pivoting on the augmented system.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (b[i] - (i + 1..n).map(|k| a[i][k] * x[k]).sum::<f64>()) / a[i][i];
    }
    x
}

#[test]
fn ridge_matches_augmented_normal_equations() {
    let mut r = common::rng(3);
    for _ in 0..10 {
        let (n, p, lambda) = (9, 3, 0.7);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| r.gen_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        // Design with a leading ones column; the intercept is not penalized.
        let d: Vec<Vec<f64>> = x
            .iter()
            .map(|row| std::iter::once(1.0).chain(row.iter().copied()).collect())
            .collect();
        let mut a = vec![vec![0.0; p + 1]; p + 1];
        let mut b = vec![0.0; p + 1];
        for (row, yi) in d.iter().zip(&y) {
            for i in 0..=p {
                b[i] += row[i] * yi;
                for j in 0..=p {
                    a[i][j] += row[i] * row[j];
                }
            }
        }
        for (i, row) in a.iter_mut().enumerate().skip(1) {
            row[i] += lambda;
        }
        let want = gauss_solve(a, b);
        let got = RidgeModel::fit(&x, &y, lambda).unwrap();
        assert!((got.intercept - want[0]).abs() < 1e-9);
        for j in 0..p {
            assert!((got.coefficients[j] - want[j + 1]).abs() < 1e-9);
        }
    }
}

#[test]
fn collinear_unpenalized_fit_is_singular() {
    let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
    assert!(RidgeModel::fit(&x, &y, 0.0).is_err());
    assert!(RidgeModel::fit(&x, &y, 0.1).is_ok());
}

fn toy() -> Dataset {
    Dataset::from_columns(
        "toy",
        vec![
            (
                "x",
                Dtype::Numeric,
                numeric(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 2.5, 11.5]),
            ),
            (
                "y",
                Dtype::Categorical,
                labels(&["a", "a", "a", "b", "b", "b", "a", "b"]),
            ),
        ],
    )
    .unwrap()
    .with_role("y", Role::Target)
    .unwrap()
}

#[test]
fn every_classifier_separates_two_clusters() {
    let ds = toy();
    for spec in pcsflow_core::models::default_zoo(Task::Classification) {
        let m = train(&ds, "y", &spec, 0).unwrap();
        let p = predict(&m, &ds).unwrap();
        let Targets::Labels(l) = p.values else {
            panic!("labels expected")
        };
        if spec.id == "majority_baseline" {
            // 4-4 tie goes to the lexicographically smallest label.
            assert!(l.iter().all(|v| v == "a"));
        } else {
            assert_eq!(l, ["a", "a", "a", "b", "b", "b", "a", "b"], "{}", spec.id);
        }
    }
}

#[test]
fn knn_one_neighbour_tie_goes_to_earlier_row() {
    let ds = Dataset::from_columns(
        "t",
        vec![
            ("x", Dtype::Numeric, numeric(&[0.0, 2.0, 5.0])),
            ("y", Dtype::Numeric, numeric(&[10.0, 20.0, 30.0])),
        ],
    )
    .unwrap();
    let spec = ModelSpec::new("knn_1", Task::Regression, ModelFamily::Knn { k: 1 });
    let m = train(&ds, "y", &spec, 0).unwrap();
    let q = Dataset::from_columns("q", vec![("x", Dtype::Numeric, numeric(&[1.0]))]).unwrap();
    assert_eq!(predict(&m, &q).unwrap().values, Targets::Values(vec![10.0]));
}

#[test]
fn tree_respects_depth_and_min_leaf() {
    let ds = toy();
    let spec = ModelSpec::new(
        "stump",
        Task::Classification,
        ModelFamily::DecisionTree {
            max_depth: 1,
            min_leaf: 1,
        },
    );
    let m = train(&ds, "y", &spec, 0).unwrap();
    let pcsflow_core::models::Learned::Tree(t) = &m.learned else {
        panic!()
    };
    assert_eq!(t.depth(), 1);
    // Midpoint between 3 and 10.
    let pcsflow_core::models::Node::Split { threshold, .. } = &t.root else {
        panic!()
    };
    assert_eq!(*threshold, 6.5);
    let wide = ModelSpec::new(
        "t",
        Task::Classification,
        ModelFamily::DecisionTree {
            max_depth: 3,
            min_leaf: 5,
        },
    );
    let m = train(&ds, "y", &wide, 0).unwrap();
    let pcsflow_core::models::Learned::Tree(t) = &m.learned else {
        panic!()
    };
    assert_eq!(t.depth(), 0, "no split leaves 5 rows on both sides of 8");
}

#[test]
fn grid_records_failures_and_is_sorted() {
    let a = toy().with_id("d_b");
    let b = toy().with_id("d_a");
    let specs = vec![
        ModelSpec::new("knn_3", Task::Classification, ModelFamily::Knn { k: 3 }),
        ModelSpec::new(
            "ridge",
            Task::Regression,
            ModelFamily::LinearRegression { lambda: 1.0 },
        ),
    ];
    let fits = train_grid(
        &[a, b],
        &specs,
        "y",
        &GridConfig::new(Task::Classification, 1),
    );
    let keys: Vec<(&str, &str)> = fits
        .iter()
        .map(|f| (f.dataset_id.as_str(), f.model_id.as_str()))
        .collect();
    assert_eq!(
        keys,
        [
            ("d_a", "knn_3"),
            ("d_a", "ridge"),
            ("d_b", "knn_3"),
            ("d_b", "ridge")
        ]
    );
    assert!(fits
        .iter()
        .filter(|f| f.model_id == "ridge")
        .all(|f| f.error.is_some()));
    assert!(fits
        .iter()
        .filter(|f| f.model_id == "knn_3")
        .all(|f| f.nps.is_some()));
}
