//! Brute-force references for the library operations. Each oracle is written
//! from the operation's definition, sharing no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pcsflow_core::mltools::{apply, OpDescriptor};
use pcsflow_core::tabular::{Cell, Dataset, Dtype};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

fn num_col(ds: &Dataset, name: &str) -> Vec<Option<f64>> {
    ds.numeric_column(ds.column_index(name).expect("column present"))
}

fn text_col(ds: &Dataset, name: &str) -> Vec<String> {
    ds.cells(ds.column_index(name).expect("column present"))
        .map(Cell::render)
        .collect()
}

fn random_values(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| (r.gen_range(-50.0..50.0f64) * 100.0).round() / 100.0)
        .collect()
}

fn numeric(name: &str, v: &[Option<f64>]) -> (String, Dtype, Vec<Cell>) {
    (
        name.into(),
        Dtype::Numeric,
        v.iter()
            .map(|x| x.map_or(Cell::Missing, Cell::Numeric))
            .collect(),
    )
}

fn build(cols: Vec<(String, Dtype, Vec<Cell>)>) -> Dataset {
    Dataset::from_columns(
        "fixture",
        cols.iter()
            .map(|(n, d, c)| (n.as_str(), *d, c.clone()))
            .collect(),
    )
    .unwrap()
}

// ---- reference statistics -------------------------------------------------

/// Linear-interpolation quantile by direct sort: position p·(n−1).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = p * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pop_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Mutual information (nats) by enumerating every cell of the contingency
/// table, empty cells included.
pub fn mi_contingency(x: &[String], y: &[String]) -> f64 {
    let n = x.len() as f64;
    let xs: BTreeSet<&String> = x.iter().collect();
    let ys: BTreeSet<&String> = y.iter().collect();
    let mut total = 0.0;
    for a in &xs {
        for b in &ys {
            let nab = x.iter().zip(y).filter(|(p, q)| p == a && q == b).count() as f64;
            if nab == 0.0 {
                continue;
            }
            let na = x.iter().filter(|p| p == a).count() as f64;
            let nb = y.iter().filter(|q| q == b).count() as f64;
            total += nab / n * ((nab * n) / (na * nb)).ln();
        }
    }
    total
}

fn sse_of(values: &[f64], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|c| {
            let members: Vec<f64> = values
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(v, _)| *v)
                .collect();
            if members.is_empty() {
                0.0
            } else {
                let m = mean(&members);
                members.iter().map(|v| (v - m) * (v - m)).sum()
            }
        })
        .sum()
}

/// Minimum within-cluster SSE over all k^n labelings.
pub fn kmeans_exhaustive_sse(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        best = best.min(sse_of(values, &labels, k));
    }
    best
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns pairs
/// sorted by descending eigenvalue; vectors are unit-norm columns.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let p = a.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if a[i][j].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (aki, akj) = (a[k][i], a[k][j]);
                    a[k][i] = c * aki - s * akj;
                    a[k][j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let (aik, ajk) = (a[i][k], a[j][k]);
                    a[i][k] = c * aik - s * ajk;
                    a[j][k] = s * aik + c * ajk;
                }
                for row in v.iter_mut() {
                    let (vi, vj) = (row[i], row[j]);
                    row[i] = c * vi - s * vj;
                    row[j] = s * vi + c * vj;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..p)
        .map(|k| (a[k][k], v.iter().map(|r| r[k]).collect()))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    pairs
}

// ---- per-operation checks ---------------------------------------------------

type Check = Result<(), String>;

fn expect(cond: bool, what: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn run(ds: &Dataset, d: OpDescriptor) -> Result<Dataset, String> {
    apply(ds, &d).map(|a| a.dataset).map_err(|e| e.to_string())
}

/// Mean, median, mode and KNN fills.
pub fn check_fill_missing(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=10);
    let b = random_values(&mut r, n);
    let c = random_values(&mut r, n);
    let mut a: Vec<Option<f64>> = random_values(&mut r, n)
        .into_iter()
        .map(|v| Some((v / 10.0).round()))
        .collect();
    let holes: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.3)).take(n - 3).collect();
    for &h in &holes {
        a[h] = None;
    }
    let b_opt: Vec<Option<f64>> = b.iter().copied().map(Some).collect();
    let c_opt: Vec<Option<f64>> = c.iter().copied().map(Some).collect();
    let ds = build(vec![
        numeric("a", &a),
        numeric("b", &b_opt),
        numeric("c", &c_opt),
    ]);
    let observed: Vec<f64> = a.iter().flatten().copied().collect();

    let mut sorted = observed.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    };
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in &observed {
        *counts.entry(*v as i64).or_default() += 1;
    }
    let top = *counts.values().max().unwrap();
    let mode = *counts.iter().find(|(_, &c)| c == top).unwrap().0 as f64;

    for (strategy, expected) in [
        ("mean", mean(&observed)),
        ("median", median),
        ("mode", mode),
    ] {
        let out = run(
            &ds,
            OpDescriptor::new("fill_missing", &["a"]).param("strategy", strategy),
        )?;
        for (i, v) in num_col(&out, "a").iter().enumerate() {
            let want = a[i].unwrap_or(expected);
            expect(v.is_some_and(|v| close(v, want)), || {
                format!("fill {strategy} row {i}: {v:?} vs {want}")
            })?;
        }
    }

    // KNN over standardized b and c.
    let k = 2;
    let z = |v: &[f64]| {
        let (mu, sd) = (mean(v), pop_var(v).sqrt());
        v.iter()
            .map(|x| if sd > 0.0 { (x - mu) / sd } else { x - mu })
            .collect::<Vec<f64>>()
    };
    let (zb, zc) = (z(&b), z(&c));
    let out = run(
        &ds,
        OpDescriptor::new("fill_missing", &["a"])
            .param("strategy", "knn")
            .param("k", k),
    )?;
    let got = num_col(&out, "a");
    for &h in &holes {
        let mut donors: Vec<(f64, usize)> = (0..n)
            .filter(|&i| a[i].is_some())
            .map(|i| ((zb[i] - zb[h]).powi(2) + (zc[i] - zc[h]).powi(2), i))
            .collect();
        donors.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        let want = donors
            .iter()
            .take(k)
            .map(|&(_, i)| a[i].unwrap())
            .sum::<f64>()
            / k.min(donors.len()) as f64;
        expect(got[h].is_some_and(|v| close(v, want)), || {
            format!("knn row {h}: {:?} vs {want}", got[h])
        })?;
    }
    Ok(())
}

/// IQR clipping with quartiles by direct sort; z-score row removal.
pub fn check_handle_outliers(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=10);
    let mut x = random_values(&mut r, n);
    x[r.gen_range(0..n)] = 900.0;
    let ds = build(vec![numeric(
        "x",
        &x.iter().copied().map(Some).collect::<Vec<_>>(),
    )]);
    let (q1, q3) = (quantile(&x, 0.25), quantile(&x, 0.75));
    let (lo, hi) = (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
    let out = run(
        &ds,
        OpDescriptor::new("handle_outliers", &["x"]).param("method", "iqr"),
    )?;
    for (i, v) in num_col(&out, "x").iter().enumerate() {
        let want = x[i].clamp(lo, hi);
        expect(v.is_some_and(|v| close(v, want)), || {
            format!("iqr row {i}: {v:?} vs {want}")
        })?;
    }

    let (mu, sd) = (mean(&x), pop_var(&x).sqrt());
    let t = 1.5;
    let kept: Vec<f64> = x
        .iter()
        .copied()
        .filter(|v| (v - mu).abs() <= t * sd)
        .collect();
    let out = run(
        &ds,
        OpDescriptor::new("handle_outliers", &["x"])
            .param("method", "zscore")
            .param("threshold", t)
            .param("action", "remove_row"),
    )?;
    let got: Vec<f64> = num_col(&out, "x").into_iter().flatten().collect();
    expect(got == kept, || {
        format!("zscore kept {got:?}, expected {kept:?}")
    })
}

fn random_categories(r: &mut ChaCha8Rng, n: usize, pool: &[&str]) -> Vec<String> {
    (0..n)
        .map(|_| pool[r.gen_range(0..pool.len())].to_string())
        .collect()
}

fn categorical(name: &str, v: &[String]) -> (String, Dtype, Vec<Cell>) {
    (
        name.into(),
        Dtype::Categorical,
        v.iter().map(|s| Cell::category(s.as_str())).collect(),
    )
}

/// Label codes, one-hot indicators and frequencies, all exact.
pub fn check_encode_categorical(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=10);
    let cats = random_categories(&mut r, n, &["red", "green", "blue", "amber"]);
    let other = random_values(&mut r, n);
    let ds = build(vec![
        numeric("v", &other.iter().copied().map(Some).collect::<Vec<_>>()),
        categorical("c", &cats),
    ]);
    let levels: Vec<&String> = cats.iter().collect::<BTreeSet<_>>().into_iter().collect();

    let out = run(
        &ds,
        OpDescriptor::new("encode_categorical", &["c"]).param("scheme", "label"),
    )?;
    let want: Vec<Option<f64>> = cats
        .iter()
        .map(|c| Some(levels.iter().position(|l| *l == c).unwrap() as f64))
        .collect();
    expect(num_col(&out, "c") == want, || "label codes differ".into())?;

    let out = run(
        &ds,
        OpDescriptor::new("encode_categorical", &["c"]).param("scheme", "frequency"),
    )?;
    let want: Vec<Option<f64>> = cats
        .iter()
        .map(|c| Some(cats.iter().filter(|d| *d == c).count() as f64 / n as f64))
        .collect();
    expect(num_col(&out, "c") == want, || "frequencies differ".into())?;

    let out = run(
        &ds,
        OpDescriptor::new("encode_categorical", &["c"]).param("scheme", "one_hot"),
    )?;
    let mut names = vec!["v".to_string()];
    names.extend(levels.iter().map(|l| format!("c={l}")));
    expect(out.column_names() == names, || {
        format!("one-hot columns {:?}", out.column_names())
    })?;
    for l in &levels {
        let want: Vec<Option<f64>> = cats
            .iter()
            .map(|c| Some(f64::from(u8::from(c == *l))))
            .collect();
        expect(num_col(&out, &format!("c={l}")) == want, || {
            format!("indicator c={l} differs")
        })?;
    }
    Ok(())
}

/// Variance, missing-fraction and greedy pairwise-correlation removal.
pub fn check_remove_columns(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(6..=10);
    let base = random_values(&mut r, n);
    let cols: Vec<(String, Vec<f64>)> = vec![
        ("a".into(), base.clone()),
        (
            "b".into(),
            base.iter()
                .map(|v| 2.0 * v + r.gen_range(-1.0..1.0))
                .collect(),
        ),
        ("c".into(), random_values(&mut r, n)),
        (
            "d".into(),
            (0..n)
                .map(|i| 3.0 + if i == 0 { 0.01 } else { 0.0 })
                .collect(),
        ),
        (
            "e".into(),
            base.iter().map(|v| -v + r.gen_range(-30.0..30.0)).collect(),
        ),
    ];
    let ds = build(
        cols.iter()
            .map(|(name, v)| numeric(name, &v.iter().copied().map(Some).collect::<Vec<_>>()))
            .collect(),
    );
    let names: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();

    let survivors = |out: &Dataset| out.column_names();

    let t = 0.5;
    let out = run(
        &ds,
        OpDescriptor::new("remove_columns", &names)
            .param("criterion", "variance")
            .param("threshold", t),
    )?;
    let want: Vec<String> = cols
        .iter()
        .filter(|(_, v)| pop_var(v) >= t)
        .map(|(n, _)| n.clone())
        .collect();
    expect(survivors(&out) == want, || {
        format!("variance kept {:?}, expected {want:?}", survivors(&out))
    })?;

    let t = 0.8;
    let out = run(
        &ds,
        OpDescriptor::new("remove_columns", &names)
            .param("criterion", "correlation")
            .param("threshold", t),
    )?;
    let mut dropped = vec![false; cols.len()];
    for j in 0..cols.len() {
        for i in 0..j {
            if !dropped[i] && pearson(&cols[i].1, &cols[j].1).is_some_and(|r| r.abs() > t) {
                dropped[j] = true;
                break;
            }
        }
    }
    let want: Vec<String> = cols
        .iter()
        .zip(&dropped)
        .filter(|(_, d)| !**d)
        .map(|((n, _), _)| n.clone())
        .collect();
    expect(survivors(&out) == want, || {
        format!("correlation kept {:?}, expected {want:?}", survivors(&out))
    })?;

    let mut holes = cols[2].1.iter().map(|v| Some(*v)).collect::<Vec<_>>();
    let k = r.gen_range(1..n);
    holes.iter_mut().take(k).for_each(|h| *h = None);
    let ds2 = build(vec![
        numeric("h", &holes),
        numeric(
            "a",
            &cols[0].1.iter().copied().map(Some).collect::<Vec<_>>(),
        ),
    ]);
    let t = 0.3;
    let out = run(
        &ds2,
        OpDescriptor::new("remove_columns", &["h", "a"])
            .param("criterion", "missing_fraction")
            .param("threshold", t),
    )?;
    let keep_h = (k as f64 / n as f64) <= t;
    expect(out.column_index("h").is_some() == keep_h, || {
        format!("missing fraction {k}/{n} at {t}")
    })
}

/// log1p, min-max and standard scaling.
pub fn check_transform_features(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=10);
    let x: Vec<f64> = random_values(&mut r, n).into_iter().map(f64::abs).collect();
    let ds = build(vec![numeric(
        "x",
        &x.iter().copied().map(Some).collect::<Vec<_>>(),
    )]);
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let (mu, sd) = (mean(&x), pop_var(&x).sqrt());
    let cases: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("log1p", Box::new(|v: f64| (1.0 + v).ln())),
        ("minmax", Box::new(move |v| (v - lo) / (hi - lo))),
        ("standard", Box::new(move |v| (v - mu) / sd)),
    ];
    for (name, f) in cases {
        let out = run(
            &ds,
            OpDescriptor::new("transform_features", &["x"]).param("transform", name),
        )?;
        for (i, v) in num_col(&out, "x").iter().enumerate() {
            let want = f(x[i]);
            expect(v.is_some_and(|v| close(v, want)), || {
                format!("{name} row {i}: {v:?} vs {want}")
            })?;
        }
    }
    Ok(())
}

fn bin_index(label: &str) -> usize {
    label
        .strip_prefix("bin_")
        .and_then(|s| s.parse().ok())
        .expect("bin label")
}

/// k-means bins against exhaustive search; equal-width and quantile bins
/// against directly computed edges.
pub fn check_discretize_features(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=8);
    let x = random_values(&mut r, n);
    let ds = build(vec![numeric(
        "x",
        &x.iter().copied().map(Some).collect::<Vec<_>>(),
    )]);
    let k = 3;

    let out = run(
        &ds,
        OpDescriptor::new("discretize_features", &["x"])
            .param("method", "kmeans")
            .param("bins", k),
    )?;
    let labels: Vec<usize> = text_col(&out, "x").iter().map(|l| bin_index(l)).collect();
    let best = kmeans_exhaustive_sse(&x, k);
    let got = sse_of(&x, &labels, k);
    expect((got - best).abs() <= 1e-9 * (1.0 + best), || {
        format!("kmeans sse {got} vs optimum {best}")
    })?;
    let centres: Vec<f64> = (0..k)
        .map(|c| {
            mean(
                &x.iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(v, _)| *v)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    expect(centres.windows(2).all(|w| w[0] < w[1]), || {
        format!("bins not ordered by centre: {centres:?}")
    })?;

    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let width = (hi - lo) / k as f64;
    let out = run(
        &ds,
        OpDescriptor::new("discretize_features", &["x"])
            .param("method", "equal_width")
            .param("bins", k),
    )?;
    for (i, l) in text_col(&out, "x").iter().enumerate() {
        let want = (1..k).filter(|&e| lo + e as f64 * width <= x[i]).count();
        expect(bin_index(l) == want, || {
            format!("equal-width row {i}: {l} vs bin_{want}")
        })?;
    }

    let out = run(
        &ds,
        OpDescriptor::new("discretize_features", &["x"])
            .param("method", "quantile")
            .param("bins", k),
    )?;
    for (i, l) in text_col(&out, "x").iter().enumerate() {
        let want = (1..k)
            .filter(|&e| quantile(&x, e as f64 / k as f64) <= x[i])
            .count();
        expect(bin_index(l) == want, || {
            format!("quantile row {i}: {l} vs bin_{want}")
        })?;
    }
    Ok(())
}

/// Mutual-information ranking against contingency-table enumeration, and
/// variance selection.
pub fn check_select_features(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(6..=10);
    let y = random_categories(&mut r, n, &["p", "q", "s"]);
    let f1: Vec<String> = y
        .iter()
        .map(|v| {
            if r.gen_bool(0.8) {
                v.clone()
            } else {
                "z".into()
            }
        })
        .collect();
    let f2 = random_categories(&mut r, n, &["u", "v"]);
    let f3 = random_categories(&mut r, n, &["u", "v", "w", "x"]);
    let feats = [("f1", &f1), ("f2", &f2), ("f3", &f3)];
    let mut cols: Vec<_> = feats.iter().map(|(name, v)| categorical(name, v)).collect();
    cols.push(categorical("y", &y));
    let ds = build(cols);

    let mi: Vec<f64> = feats.iter().map(|(_, v)| mi_contingency(v, &y)).collect();
    for ((name, v), want) in feats.iter().zip(&mi) {
        let got = pcsflow_core::mltools::mutual_information(v, &y);
        expect((got - want).abs() <= 1e-12, || {
            format!("MI({name}; y) {got} vs {want}")
        })?;
    }
    let mut ranked: Vec<usize> = (0..3).collect();
    ranked.sort_by(|&a, &b| mi[b].partial_cmp(&mi[a]).unwrap());
    if (mi[ranked[0]] - mi[ranked[1]]).abs() > 1e-9 {
        let out = run(
            &ds,
            OpDescriptor::new("select_features", &["f1", "f2", "f3"])
                .param("method", "mutual_info")
                .param("top", 1usize)
                .param("target", "y"),
        )?;
        let kept: Vec<String> = out
            .column_names()
            .into_iter()
            .filter(|c| c.starts_with('f'))
            .collect();
        let want = feats[ranked[0]].0;
        expect(kept == [want], || {
            format!("mutual_info kept {kept:?}, expected {want}")
        })?;
    }

    let a = random_values(&mut r, n);
    let b: Vec<f64> = a.iter().map(|v| v / 100.0).collect();
    let num = build(vec![
        numeric("a", &a.iter().copied().map(Some).collect::<Vec<_>>()),
        numeric("b", &b.iter().copied().map(Some).collect::<Vec<_>>()),
        numeric("t", &a.iter().copied().map(Some).collect::<Vec<_>>()),
    ]);
    let tau = pop_var(&b) * 1.5;
    let out = run(
        &num,
        OpDescriptor::new("select_features", &["a", "b"])
            .param("method", "variance")
            .param("threshold", tau)
            .param("target", "t"),
    )?;
    let want: Vec<&str> = [("a", &a), ("b", &b)]
        .iter()
        .filter(|(_, v)| pop_var(v) > tau)
        .map(|(n, _)| *n)
        .collect();
    let kept: Vec<String> = out
        .column_names()
        .into_iter()
        .filter(|c| c != "t")
        .collect();
    expect(kept == want, || {
        format!("variance selection kept {kept:?}, expected {want:?}")
    })
}

/// Degree-2 and degree-3 terms by explicit enumeration of index multisets.
pub fn check_polynomial_features(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(5..=10);
    let names = ["a", "b", "c"];
    let data: Vec<Vec<f64>> = (0..3).map(|_| random_values(&mut r, n)).collect();
    let ds = build(
        names
            .iter()
            .zip(&data)
            .map(|(nm, v)| numeric(nm, &v.iter().copied().map(Some).collect::<Vec<_>>()))
            .collect(),
    );
    for degree in [2usize, 3] {
        for interactions_only in [false, true] {
            let mut terms: Vec<Vec<usize>> = Vec::new();
            for d in 2..=degree {
                // All non-decreasing index tuples of length d.
                for code in 0..3usize.pow(d as u32) {
                    let idx: Vec<usize> = (0..d)
                        .map(|p| code / 3usize.pow((d - 1 - p) as u32) % 3)
                        .collect();
                    let ok = idx.windows(2).all(|w| {
                        if interactions_only {
                            w[0] < w[1]
                        } else {
                            w[0] <= w[1]
                        }
                    });
                    if ok {
                        terms.push(idx);
                    }
                }
            }
            let out = run(
                &ds,
                OpDescriptor::new("create_polynomial_features", &names)
                    .param("degree", degree)
                    .param("interactions_only", interactions_only),
            )?;
            expect(out.n_cols() == 3 + terms.len(), || {
                format!("degree {degree}: {} columns", out.n_cols())
            })?;
            for (t, idx) in terms.iter().enumerate() {
                let col = out.numeric_column(3 + t);
                for row in 0..n {
                    let want: f64 = idx.iter().map(|&i| data[i][row]).product();
                    expect(col[row].is_some_and(|v| close(v, want)), || {
                        format!("term {idx:?} row {row}: {:?} vs {want}", col[row])
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Component scores against a Jacobi eigen-solver on the 1/n covariance.
pub fn check_reduce_dimensions(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(6..=10);
    let p = 3;
    let a = random_values(&mut r, n);
    let data: Vec<Vec<f64>> = vec![
        a.clone(),
        a.iter()
            .map(|v| 0.5 * v + r.gen_range(-10.0..10.0))
            .collect(),
        random_values(&mut r, n),
    ];
    let names = ["x", "y", "z"];
    let ds = build(
        names
            .iter()
            .zip(&data)
            .map(|(nm, v)| numeric(nm, &v.iter().copied().map(Some).collect::<Vec<_>>()))
            .collect(),
    );
    let means: Vec<f64> = data.iter().map(|c| mean(c)).collect();
    let cov: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    (0..n)
                        .map(|k| (data[i][k] - means[i]) * (data[j][k] - means[j]))
                        .sum::<f64>()
                        / n as f64
                })
                .collect()
        })
        .collect();
    let eig = jacobi_eigen(cov);
    if eig
        .windows(2)
        .any(|w| (w[0].0 - w[1].0).abs() < 1e-6 * (1.0 + w[0].0.abs()))
    {
        return Ok(()); // degenerate spectrum: axes not unique
    }
    let q = 2;
    let out = run(
        &ds,
        OpDescriptor::new("reduce_dimensions", &names).param("n_components", q),
    )?;
    expect(out.column_names() == ["pc_1", "pc_2"], || {
        format!("columns {:?}", out.column_names())
    })?;
    for (c, (_, w)) in eig.iter().take(q).enumerate() {
        // Same sign convention: largest-magnitude loading positive.
        let lead = (0..p).fold(0, |b, i| if w[i].abs() > w[b].abs() { i } else { b });
        let s = if w[lead] < 0.0 { -1.0 } else { 1.0 };
        let got = out.numeric_column(c);
        for k in 0..n {
            let want: f64 = (0..p).map(|i| s * w[i] * (data[i][k] - means[i])).sum();
            expect(got[k].is_some_and(|v| close(v, want)), || {
                format!("pc_{} row {k}: {:?} vs {want}", c + 1, got[k])
            })?;
        }
    }
    Ok(())
}

pub const OP_CHECKS: [(&str, fn(u64) -> Check); 9] = [
    ("fill_missing", check_fill_missing),
    ("handle_outliers", check_handle_outliers),
    ("encode_categorical", check_encode_categorical),
    ("remove_columns", check_remove_columns),
    ("transform_features", check_transform_features),
    ("discretize_features", check_discretize_features),
    ("select_features", check_select_features),
    ("create_polynomial_features", check_polynomial_features),
    ("reduce_dimensions", check_reduce_dimensions),
];

/// Largest relative error between the analytic logistic gradient and a
/// central difference with step `h`, at one random parameter point.
pub fn logistic_gradient_error(seed: u64, h: f64) -> f64 {
    use pcsflow_core::models::logistic_loss_grad;
    let mut r = rng(seed);
    let (n, p) = (12, 3);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| r.gen_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|_| f64::from(u8::from(r.gen_bool(0.5))))
        .collect();
    let params: Vec<f64> = (0..=p).map(|_| r.gen_range(-1.5..1.5)).collect();
    let lambda = 0.1;
    let (_, grad) = logistic_loss_grad(&x, &y, &params, lambda);
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut up = params.clone();
        let mut down = params.clone();
        up[i] += h;
        down[i] -= h;
        let numeric = (logistic_loss_grad(&x, &y, &up, lambda).0
            - logistic_loss_grad(&x, &y, &down, lambda).0)
            / (2.0 * h);
        let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
