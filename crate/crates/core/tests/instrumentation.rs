//! Operation-count bound for the incremental evaluator: failure impact
//! touches only windows at and after the failure window, and recomputes at
//! most the affected paths. This file holds a single test so the global
//! search counter sees no traffic from unrelated suites.

use std::collections::BTreeSet;

use conres_core::failure::{evaluate_failure, FailureEvent, FailureKind};
use conres_core::routing::instrument;
use conres_core::satb::rank_critical;
use conres_core::testkit::random_instance;

#[test]
fn incremental_evaluation_recomputes_only_affected_pairs() {
    for seed in 0..40u64 {
        let inst = random_instance(seed);
        let table = inst.graphs[0].table().clone();
        let sats = table.satellites();
        if sats.is_empty() {
            continue;
        }
        let baseline = rank_critical(&inst.graphs, &inst.demand).unwrap();
        let failed: BTreeSet<usize> = sats
            .iter()
            .copied()
            .step_by(3)
            .take(2)
            .collect();
        if failed.is_empty() {
            continue;
        }
        let t_f = 60.0 * ((seed % 4) as f64);
        let event = FailureEvent {
            t_f,
            failed: failed.clone(),
            kind: FailureKind::Explicit,
        };

        // Expected searches: |X_F| per window at or after the failure
        // window, where X_F is the union of the failed nodes' path lists.
        let windows: Vec<_> = inst.graphs.iter().map(|g| g.window).collect();
        let window_f = conres_core::failure::window_of(&windows, t_f).unwrap();
        let expected: usize = (window_f..inst.graphs.len())
            .map(|w| {
                let mut x_f = BTreeSet::new();
                for &f in &failed {
                    x_f.extend(baseline.path_index.pairs_for(f, w).iter().copied());
                }
                x_f.len()
            })
            .sum();

        instrument::reset();
        let report = evaluate_failure(&inst.graphs, &inst.demand, &baseline, &event).unwrap();
        let searches = instrument::searches();
        assert_eq!(
            searches, expected,
            "seed {seed}: recomputed {searches} pairs, affected set totals {expected}"
        );
        assert_eq!(report.affected_paths.len(), expected);
    }
}
