//! Throwaway scratch binary for empirical checks. Not part of the crate.

use fdia_core::dataset::Dataset;
use fdia_core::estimation::{bdd_report, estimate_state, EstimationOptions, ResidualForm};
use fdia_core::grid::resolve_case;
use fdia_core::powerflow::MeasurementModel;

fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

fn main() {
    let case = resolve_case("ieee14").unwrap();
    let model = MeasurementModel::standard(&case);
    for preset in ["cautious", "balanced", "aggressive"] {
        let ds = Dataset::load(format!("/tmp/bench/{preset}").as_ref()).unwrap();
        let labels = ds.labels().unwrap().to_vec();
        let (mut pos_s, mut neg_s) = (Vec::new(), Vec::new());
        let (mut pos_p, mut neg_p) = (Vec::new(), Vec::new());
        for t in 0..ds.t_count() {
            let z = ds.measurement(t);
            let est = estimate_state(&model, &z, None, EstimationOptions::default()).unwrap();
            let sq = bdd_report(&model, &z, &est.state, 3.0, ResidualForm::Sqrt).unwrap();
            let pp = bdd_report(&model, &z, &est.state, 1.05, ResidualForm::Paper).unwrap();
            if labels[t] == 1 {
                pos_s.push(sq.max_normalized);
                pos_p.push(pp.max_normalized);
            } else {
                neg_s.push(sq.max_normalized);
                neg_p.push(pp.max_normalized);
            }
        }
        println!(
            "{preset:10} AUC sqrt = {:.4}   AUC paper = {:.4}   (pos {}, neg {})",
            auc(&pos_s, &neg_s),
            auc(&pos_p, &neg_p),
            pos_s.len(),
            neg_s.len()
        );
        let med = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        println!(
            "           paper-form medians: attacked {:.3e}  honest {:.3e}",
            med(&mut pos_p),
            med(&mut neg_p)
        );
    }
}
