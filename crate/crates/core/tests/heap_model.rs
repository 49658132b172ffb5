use proptest::prelude::*;

use gcds::heap::{
    classify_prefix, format_trace, gen_trace, parse_trace, HeapGraph, HeapTracker, MutOp, NodeId, TraceClass,
};

fn bfs(g: &HeapGraph) -> Vec<bool> {
    let mut seen = vec![false; g.next_id().index()];
    let mut stack = vec![NodeId::ROOT];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for (y, _) in g.successors(x) {
            if !seen[y.index()] {
                seen[y.index()] = true;
                stack.push(y);
            }
        }
    }
    seen
}

#[test]
fn text_format_round_trips() {
    let t = gen_trace(TraceClass::General, 20, 120, 3).unwrap();
    assert_eq!(parse_trace(&format_trace(&t)).unwrap(), t);
}

#[test]
fn parse_reports_line_numbers() {
    let e = parse_trace("A\nI 0 1\nX\n").unwrap_err();
    assert_eq!(e.line, 3);
}

#[test]
fn hand_written_cycle_is_general() {
    let t = parse_trace("A\nA\nI 1 2\nI 2 1\nD 0 2\nD 0 1\n").unwrap();
    assert_eq!(classify_prefix(&t).unwrap(), TraceClass::General);
    let g = HeapGraph::replay(&t).unwrap();
    assert_eq!(g.reachable_set().len(), 1);
}

#[test]
fn invalid_delete_is_rejected() {
    let t = [MutOp::Allocate, MutOp::delete(1, 1)];
    assert_eq!(classify_prefix(&t).unwrap_err().0, 1);
}

proptest! {
    #[test]
    fn generated_traces_stay_in_class(seed in any::<u64>(), which in 0usize..4, n in 1usize..40) {
        let class = [
            TraceClass::General,
            TraceClass::AllReachable,
            TraceClass::AcyclicAllReachable,
            TraceClass::SparseAcyclicAllReachable(2),
        ][which];
        let t = gen_trace(class, n, 5 * n, seed).unwrap();
        prop_assert_eq!(t.iter().filter(|op| **op == MutOp::Allocate).count(), n);
        prop_assert!(classify_prefix(&t).unwrap().implies(class));
        prop_assert_eq!(gen_trace(class, n, 5 * n, seed).unwrap(), t);
    }

    #[test]
    fn tracker_matches_search(seed in any::<u64>()) {
        let t = gen_trace(TraceClass::General, 25, 200, seed).unwrap();
        let mut tr = HeapTracker::new();
        for op in &t {
            tr.apply(op).unwrap();
            let want = bfs(tr.graph());
            for (v, &r) in want.iter().enumerate() {
                prop_assert_eq!(tr.is_reachable(NodeId(v as u32)), r);
            }
        }
    }
}
