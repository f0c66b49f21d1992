#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskaverse::harness::random_set_cover;
use riskaverse::model::{ExplicitDistribution, FacilityLocationInstance, FlBudgets, Scenario, SetCoverInstance};
use riskaverse::simplex::{LpProblem, Relation};

pub type Fixture = (SetCoverInstance<f64>, ExplicitDistribution<f64>);

pub fn t1() -> Fixture {
    let ids = vec!["e1".to_string(), "e2".to_string()];
    let sets = vec![("S1".into(), vec![0], 1.0), ("S2".into(), vec![1], 1.0), ("S3".into(), vec![0, 1], 1.5)];
    let inst = SetCoverInstance::new(ids, sets, 2.0, 1.5).unwrap();
    let w2 = vec![2.0, 2.0, 3.0];
    let dist = ExplicitDistribution::new(vec![
        (Scenario::new(vec![0], w2.clone(), None), 0.5),
        (Scenario::new(vec![0, 1], w2.clone(), None), 0.3),
        (Scenario::new(vec![], w2, None), 0.2),
    ])
    .unwrap();
    (inst, dist)
}

/// T1 plus ten random instances with `m ≤ 8` sets and at most 10 scenarios.
pub fn cover_fixtures() -> Vec<Fixture> {
    let mut out = vec![t1()];
    for seed in 1..=10u64 {
        let m = 3 + (seed as usize % 6);
        let n = 3 + (seed as usize % 4);
        let k = 3 + (seed as usize % 8);
        out.push(random_set_cover(m, n, k, seed).unwrap());
    }
    out
}

/// Random FL instance on points in the unit square.
pub fn random_fl(nf: usize, nc: usize, k: usize, budget: f64, seed: u64) -> (FacilityLocationInstance<f64>, ExplicitDistribution<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..nf + nc).map(|_| (r.gen::<f64>(), r.gen::<f64>())).collect();
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let metric: Vec<Vec<f64>> = pts.iter().map(|&a| pts.iter().map(|&b| d(a, b)).collect()).collect();
    let f1: Vec<f64> = (0..nf).map(|_| r.gen_range(0.2..1.0)).collect();
    let facilities = (0..nf).map(|i| (format!("f{i}"), f1[i])).collect();
    let clients = (0..nc).map(|j| format!("c{j}")).collect();
    let inst = FacilityLocationInstance::new(facilities, clients, metric, 2.0, FlBudgets::total_only(budget)).unwrap();
    let raw: Vec<f64> = (0..k).map(|_| r.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let entries = raw
        .iter()
        .map(|&q| {
            let active: Vec<usize> = (0..nc).filter(|_| r.gen_bool(0.6)).collect();
            let w2 = f1.iter().map(|&f| f * r.gen_range(1.0..2.0)).collect();
            (Scenario::new(active, w2, None), q / total)
        })
        .collect();
    (inst, ExplicitDistribution::new(entries).unwrap())
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Optimum of a bounded LP by enumerating every basic point: each choice of
/// `n` tight constraints among rows and finite bounds. `None` if infeasible.
pub fn vertex_enumeration(p: &LpProblem<f64>) -> Option<f64> {
    let n = p.n_vars();
    let mut cons: Vec<(Vec<f64>, f64, bool)> = Vec::new(); // (a, b, equality) meaning a·x ≤ b or = b
    for row in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        match row.rel {
            Relation::Le => cons.push((a, row.rhs, false)),
            Relation::Ge => cons.push((a.iter().map(|v| -v).collect(), -row.rhs, false)),
            Relation::Eq => cons.push((a, row.rhs, true)),
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        if p.lower[j].is_finite() {
            e[j] = -1.0;
            cons.push((e.clone(), -p.lower[j], false));
        }
        if p.upper[j].is_finite() {
            e[j] = 1.0;
            cons.push((e, p.upper[j], false));
        }
    }
    let feasible = |x: &[f64]| {
        cons.iter().all(|(a, b, eq)| {
            let v: f64 = a.iter().zip(x).map(|(u, w)| u * w).sum();
            if *eq {
                (v - b).abs() <= 1e-9
            } else {
                v <= b + 1e-9
            }
        })
    };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(cons.len(), n, 0, &mut pick, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v: f64 = p.objective.iter().zip(&x).map(|(c, w)| c * w).sum();
                if best.map_or(true, |bv| v < bv) {
                    best = Some(v);
                }
            }
        }
    });
    best
}

fn choose(total: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..total {
        pick.push(i);
        choose(total, k, i + 1, pick, f);
        pick.pop();
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                for k in c..n {
                    a[i][k] -= f * a[c][k];
                }
                b[i] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Random LP with `n ≤ 3` boxed variables and up to 4 rows; most rows hold
/// at a random point of the box, so most instances are feasible.
pub fn random_lp(r: &mut ChaCha8Rng) -> LpProblem<f64> {
    let n = r.gen_range(1..=3);
    let mut p = LpProblem::new(0);
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = if r.gen_bool(0.3) { -r.gen_range(0..3) as f64 } else { 0.0 };
        let hi = lo + r.gen_range(1..5) as f64;
        p.add_var(r.gen_range(-5..=5) as f64, lo, hi);
        x0.push(r.gen_range(lo..=hi));
    }
    for _ in 0..r.gen_range(0..=4) {
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(-3..=3) as f64).collect();
        let at: f64 = a.iter().zip(&x0).map(|(u, v)| u * v).sum();
        let rel = match r.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = if r.gen_bool(0.85) {
            match rel {
                Relation::Eq => at,
                Relation::Ge => (at - r.gen_range(0.0..2.0)).floor(),
                Relation::Le => (at + r.gen_range(0.0..2.0)).ceil(),
            }
        } else {
            r.gen_range(-4..=6) as f64
        };
        p.add_row(a.into_iter().enumerate(), rel, rhs);
    }
    p
}
