use riskaverse::harness::{coin_experiment, coin_threshold, fl_grid, lb1, lower_bound_demo, multicut, random_set_cover};
use riskaverse::model::document::{facility_document, from_document, set_cover_document, Instance};
use riskaverse::model::RiskParams;

#[test]
fn lb1_layout() {
    let (inst, dist) = lb1::<f64>(12.0, 0.1, 0.02, 0.06).unwrap();
    assert_eq!(inst.members, vec![vec![0], vec![1], vec![2]]);
    assert_eq!(inst.lambda, 1.0);
    let p: Vec<f64> = dist.entries().iter().map(|(_, p)| *p).collect();
    assert!((p[0] - 0.86).abs() < 1e-12 && (p[1] - 0.08).abs() < 1e-12 && (p[2] - 0.06).abs() < 1e-12);
    assert_eq!(dist.entries()[2].0.active, vec![1, 2]);
    // κ above ρ clamps the big scenario away
    let (_, d) = lb1::<f64>(12.0, 0.1, 0.2, 0.0).unwrap();
    assert_eq!(d.entries()[1].1, 0.0);
    assert!(lb1::<f64>(0.0, 0.1, 0.02, 0.0).is_err());
}

#[test]
fn generated_documents_are_stable() {
    let a = random_set_cover::<f64>(7, 6, 5, 3).unwrap();
    let b = random_set_cover::<f64>(7, 6, 5, 3).unwrap();
    let ja = serde_json::to_string(&set_cover_document(&a.0, &a.1)).unwrap();
    let jb = serde_json::to_string(&set_cover_document(&b.0, &b.1)).unwrap();
    assert_eq!(ja, jb);
    let c = random_set_cover::<f64>(7, 6, 5, 4).unwrap();
    assert_ne!(ja, serde_json::to_string(&set_cover_document(&c.0, &c.1)).unwrap());
}

#[test]
fn set_cover_round_trip() {
    let (inst, dist) = random_set_cover::<f64>(5, 4, 3, 9).unwrap();
    let loaded = from_document::<f64>(set_cover_document(&inst, &dist)).unwrap();
    let Instance::SetCover(back) = loaded.instance else { panic!("wrong type") };
    assert_eq!(back.members, inst.members);
    assert_eq!(back.w1, inst.w1);
    assert_eq!(back.budget, inst.budget);
    assert_eq!(loaded.oracle.support(), Some(&dist));
}

#[test]
fn grid_round_trip() {
    let (inst, dist) = fl_grid::<f64>(2, 2, 3, 5).unwrap();
    assert_eq!(inst.n_facilities(), 4);
    assert_eq!(inst.cost[0][3], 2.0);
    assert_eq!(dist.len(), 3);
    let loaded = from_document::<f64>(facility_document(&inst, &dist)).unwrap();
    let Instance::Facility(back) = loaded.instance else { panic!("wrong type") };
    assert_eq!(back.cost, inst.cost);
    assert_eq!(back.f1, inst.f1);
    assert_eq!(back.budgets, inst.budgets);
    assert!(fl_grid::<f64>(0, 2, 1, 1).is_err());
}

#[test]
fn multicut_shapes() {
    let (star, d) = multicut::<f64>(5, true, 4, 1).unwrap();
    assert_eq!(star.m(), 4);
    assert_eq!(d.len(), 4);
    let (path, _) = multicut::<f64>(6, false, 2, 1).unwrap();
    assert_eq!(path.m(), 5);
    assert!(multicut::<f64>(2, true, 1, 1).is_err());
}

#[test]
fn coin_rule_errors() {
    assert_eq!(coin_threshold(0.05, 0.25).ceil() as usize, 6);
    let t = coin_experiment(0.05, 0.25, 0.02, 4000, &[0, 2, 40], 3).unwrap();
    assert!(t.rows.iter().all(|r| r.error_low == 0.0));
    // with no tosses the rule always answers "low"
    assert_eq!(t.rows[0].error_high, 1.0);
    // far fewer tosses than the threshold miss δ
    let exact = (1.0f64 - 0.12).powi(2);
    assert!((t.rows[1].error_high - exact).abs() < 0.03);
    assert!(t.rows[1].worst() > 0.25);
    assert!(t.rows[2].worst() < 0.25);
    assert!(coin_experiment(0.3, 0.25, 0.02, 10, &[1], 1).is_err());
}

#[test]
fn one_sample_cannot_separate_the_arms() {
    let p = RiskParams::new(12.0, 0.1, 0.1, 0.05, 0.1);
    let demo = lower_bound_demo::<f64>(12.0, &p, Some(1), 1000, 2).unwrap();
    assert!(demo.confusion.unwrap() >= 0.25, "{:?}", demo.confusion);
    assert!(demo.low.pair < 0.5);
}
