//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gcds::backend::BackendKind;
use gcds::clock::StepCounter;
use gcds::ett::{EttForest, NaiveForest};
use gcds::fit::power_law;
use gcds::fuzz::{fuzz, FuzzConfig, FuzzReport, ViolationKind};
use gcds::heap::{gen_trace, gen_trace_with, GenConstraints, MutOp, NodeId, OpKind, TraceClass};
use gcds::immediate::Immediate;
use gcds::metrics::{run_trace, Delay, Timeline};
use gcds::reductions::selftest::{
    calibrate_lprds, drds_agreement, layered_sizes, lprds_agreement, Agreement, GcdsFactory,
};
use gcds::reductions::{Drds, LprdsFromGcds};
use gcds::workloads::{baker, dense_dag, list, run_capped, sparse_acyclic, thrashing, Thrashing};
use gcds::Gcds;

const FUZZ_TRIALS: usize = 1000;
const FUZZ_SEED: u64 = 42;
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(120);
const LEAK_STEPS: usize = 10_000;
const RC_SIZES: [usize; 3] = [1 << 8, 1 << 10, 1 << 12];
const RC_SPREAD: f64 = 1.5;
const ACYCLIC_EXPONENTS: std::ops::RangeInclusive<u32> = 8..=14;
const ACYCLIC_C_BAND: f64 = 0.5;
const SAAR_C: f64 = 32.0;
const LIST_N: usize = 4096;
const LIST_RATIO: f64 = 100.0;
const SWEEP_DELETES: usize = 10_000;
const DENSE_KS: [usize; 3] = [16, 32, 64];
const DENSE_C: u64 = 4;
const DENSE_RATIO: f64 = 4.0;
const DRDS_GRAPHS: usize = 500;
const DRDS_N: usize = 40;
const DRDS_OPS: usize = 200;
const DRDS_MIN_QUERIES: u64 = 10_000;
const LAYERED_MAX: usize = 8;
const LAYERED_UPDATES: usize = 200;
const THRASH_N: usize = 8192;
const THRASH_RATIO: f64 = 50.0;
const BAKER_EXPONENTS: std::ops::RangeInclusive<u32> = 8..=12;
const BAKER_C: f64 = 4.0;
const BAKER_SLOPE: (f64, f64) = (0.85, 1.15);
const FOREST_OPS: usize = 100_000;
const FOREST_NODES: usize = 64;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn corpus() -> (FuzzReport, Duration) {
    let t = Instant::now();
    let rep = fuzz(
        &[BackendKind::Rc, BackendKind::Ms, BackendKind::Ett { cursor: true }, BackendKind::Drds],
        &FuzzConfig::new(TraceClass::General, FUZZ_TRIALS, FUZZ_SEED),
    );
    (rep, t.elapsed())
}

fn c1(rep: &FuzzReport, took: Duration) -> Outcome {
    let unsound = rep.soundness_violations();
    let failed = rep
        .violations
        .iter()
        .filter(|v| matches!(v.kind, ViolationKind::Failed(_)))
        .count();
    ensure(
        unsound == 0 && failed == 0 && took < FUZZ_TIME_LIMIT,
        format!("{} traces, {} ops, {unsound} unsound frees, {failed} errors, {took:.1?}", rep.trials, rep.ops),
    )
}

fn c2(rep: &FuzzReport) -> Outcome {
    let lag = rep.lag_violations();
    let delays: Vec<String> = rep
        .summaries
        .iter()
        .filter(|s| s.backend.is_immediate())
        .map(|s| format!("{}={}", s.backend, s.worst_delay))
        .collect();
    let all_one = rep
        .summaries
        .iter()
        .filter(|s| s.backend.is_immediate())
        .all(|s| s.worst_delay <= Delay::Bounded(1));
    ensure(lag == 0 && all_one, format!("{lag} lagging ops; delays {}", delays.join(" ")))
}

fn c3() -> Outcome {
    let mut t = vec![
        MutOp::Allocate,
        MutOp::Allocate,
        MutOp::insert(1, 2),
        MutOp::insert(2, 1),
        MutOp::delete(0, 2),
        MutOp::delete(0, 1),
    ];
    t.extend(std::iter::repeat_n(MutOp::Step, LEAK_STEPS));
    let r = run_trace(&mut BackendKind::Rc.build(2), &t).map_err(|e| e.to_string())?;
    ensure(
        r.frees.is_empty() && r.delay() == Delay::Unbounded,
        format!("{} frees after {LEAK_STEPS} steps, delay {}", r.frees.len(), r.delay()),
    )
}

fn c4() -> Outcome {
    let mut pauses = Vec::new();
    for n in RC_SIZES {
        let t = gen_trace(TraceClass::AllReachable, n, 6 * n, 7).map_err(|e| e.to_string())?;
        let r = run_trace(&mut BackendKind::Rc.build(n), &t).map_err(|e| e.to_string())?;
        pauses.push(r.max_pause() as f64);
    }
    let spread = gcds::fit::spread(&pauses);
    ensure(spread <= RC_SPREAD, format!("max pauses {pauses:?}, spread {spread:.2}"))
}

fn c5() -> Outcome {
    let mut cs = Vec::new();
    let mut saar = Vec::new();
    for e in ACYCLIC_EXPONENTS {
        let n = 1usize << e;
        let t = sparse_acyclic(n, 2, 11).map_err(|e| e.to_string())?;
        let r = run_trace(&mut Immediate::new(), &t).map_err(|e| e.to_string())?;
        let c = (0..t.len())
            .filter(|&i| r.kinds[i] == OpKind::Delete)
            .map(|i| r.per_op_steps[i] as f64 / ((r.deltas[i] + 1) as f64 * e as f64))
            .fold(0.0, f64::max);
        cs.push(c);
        let t = gen_trace(TraceClass::SparseAcyclicAllReachable(2), n, 4 * n, 11).map_err(|e| e.to_string())?;
        let r = run_trace(&mut Immediate::new(), &t).map_err(|e| e.to_string())?;
        saar.push(r.max_pause() as f64 / e as f64);
    }
    let mean = cs.iter().sum::<f64>() / cs.len() as f64;
    let stable = cs
        .iter()
        .all(|&c| c >= (1.0 - ACYCLIC_C_BAND) * mean && c <= (1.0 + ACYCLIC_C_BAND) * mean);
    let bounded = saar.iter().all(|&c| c <= SAAR_C);
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.1}")).collect::<Vec<_>>().join(",");
    ensure(
        stable && bounded,
        format!("C per n [{}] mean {mean:.1}; all-reachable pause/log n [{}] <= {SAAR_C}", fmt(&cs), fmt(&saar)),
    )
}

fn c6() -> Outcome {
    let w = list(LIST_N);
    let ms = run_trace(&mut BackendKind::Ms.build(LIST_N), &w.trace).map_err(|e| e.to_string())?;
    let ett = run_trace(&mut Immediate::new(), &w.trace).map_err(|e| e.to_string())?;
    let ratio = ms.total_steps() as f64 / ett.total_steps() as f64;
    ensure(
        ratio >= LIST_RATIO,
        format!("ms {} steps, ett {} steps, ratio {ratio:.1}", ms.total_steps(), ett.total_steps()),
    )
}

fn c7() -> Outcome {
    let c = GenConstraints {
        all_reachable: false,
        acyclic: true,
        max_outdeg: None,
    };
    let (mut seen, mut worst, mut over, mut seed) = (0usize, 0u32, 0usize, 0u64);
    while seen < SWEEP_DELETES {
        let t = gen_trace_with(c, 200, 1500, seed).map_err(|e| e.to_string())?;
        seed += 1;
        let mut g = Immediate::new();
        for op in &t {
            g.apply(op).map_err(|e| e.to_string())?;
            g.drain_free_list();
            if let MutOp::Delete(..) = op {
                let s = g.last_delete().sweeps;
                if s > 0 {
                    seen += 1;
                    worst = worst.max(s);
                    over += (s > 2) as usize;
                }
            }
        }
    }
    ensure(over == 0, format!("{seen} sweeping deletes, max {worst} sweeps, {over} above two"))
}

fn examinations(k: usize, cursor: bool) -> Result<Vec<(u64, u64)>, String> {
    let w = dense_dag(k);
    let tl = Timeline::of(&w.trace).map_err(|e| e.to_string())?;
    let mut g = Immediate::with_cursor(cursor);
    let mut out = Vec::new();
    for (i, op) in w.trace.iter().enumerate() {
        g.apply(op).map_err(|e| e.to_string())?;
        g.drain_free_list();
        if let MutOp::Delete(..) = op {
            out.push((g.last_delete().examined, tl.deltas[i]));
        }
    }
    Ok(out)
}

fn c8() -> Outcome {
    let mut ratios = Vec::new();
    let mut bounded = true;
    for k in DENSE_KS {
        let on = examinations(k, true)?;
        let off = examinations(k, false)?;
        bounded &= on.iter().all(|&(x, d)| x <= DENSE_C * (d + 1));
        let (x_on, d) = *on.last().unwrap();
        let (x_off, _) = *off.last().unwrap();
        ratios.push((k, x_on as f64 / (d + 1) as f64, x_off as f64 / x_on as f64));
    }
    let growing = ratios.windows(2).all(|w| w[1].2 > w[0].2);
    let last = ratios.last().unwrap().2;
    let detail = ratios
        .iter()
        .map(|(k, per, r)| format!("k={k}: on/(D+1)={per:.2} off/on={r:.2}"))
        .collect::<Vec<_>>()
        .join("; ");
    ensure(bounded && growing && last >= DENSE_RATIO, detail)
}

type Factory = Box<dyn Fn() -> Box<dyn Gcds> + Sync>;

fn immediate_factories() -> [(&'static str, Factory); 3] {
    [BackendKind::Ms, BackendKind::Ett { cursor: true }, BackendKind::Drds].map(|b| {
        let f: Factory = Box::new(move || b.build(4 * DRDS_N) as Box<dyn Gcds>);
        (match b {
            BackendKind::Ms => "ms",
            BackendKind::Drds => "drds",
            _ => "ett",
        }, f)
    })
}

fn summarize(parts: &[(&str, Agreement)]) -> (bool, String) {
    let ok = parts.iter().all(|(_, a)| a.is_perfect());
    let s = parts
        .iter()
        .map(|(n, a)| format!("{n} {}/{} agree, {} impure", a.agreed, a.queries, a.impure))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, s)
}

fn c9() -> Outcome {
    let mut parts = Vec::new();
    for (name, make) in immediate_factories() {
        let a = drds_agreement(&*make, DRDS_N, DRDS_GRAPHS, DRDS_OPS, 1).map_err(|e| e.to_string())?;
        parts.push((name, a));
    }
    let (ok, s) = summarize(&parts);
    let enough = parts.iter().all(|(_, a)| a.queries >= DRDS_MIN_QUERIES && a.graphs == DRDS_GRAPHS);
    ensure(ok && enough, s)
}

fn fig9(make: GcdsFactory) -> Result<(bool, bool), String> {
    let v = |l: u32, k: u32| (l - 1) * 3 + (k - 1);
    let layers = (0..9).map(|x| x / 3).collect();
    let budget = calibrate_lprds(make, 3, 3, 77);
    let mut r = LprdsFromGcds::new(make(), layers, budget, 1);
    for (a, b) in [
        (v(1, 1), v(2, 1)),
        (v(2, 1), v(3, 2)),
        (v(1, 2), v(2, 3)),
        (v(2, 3), v(3, 3)),
        (v(1, 3), v(2, 2)),
        (v(2, 2), v(3, 1)),
    ] {
        r.insert(a, b).map_err(|e| e.to_string())?;
    }
    let reaches = r.connected(v(1, 1), v(3, 2)).map_err(|e| e.to_string())?;
    let misses = r.connected(v(1, 1), v(3, 1)).map_err(|e| e.to_string())?;
    Ok((reaches, misses))
}

fn c10() -> Outcome {
    let mut parts = Vec::new();
    let mut figs = true;
    for (name, make) in immediate_factories() {
        let a = lprds_agreement(&*make, &layered_sizes(LAYERED_MAX, LAYERED_UPDATES), 3)
            .map_err(|e| e.to_string())?;
        parts.push((name, a));
        figs &= fig9(&*make)? == (true, false);
    }
    let (ok, s) = summarize(&parts);
    ensure(ok && figs, format!("{s}; worked example answers {}", if figs { "match" } else { "differ" }))
}

fn c11() -> Outcome {
    let mut t = vec![MutOp::Allocate; 5];
    t.extend([
        MutOp::insert(1, 2),
        MutOp::delete(0, 2),
        MutOp::insert(1, 3),
        MutOp::delete(0, 3),
        MutOp::insert(1, 4),
        MutOp::delete(0, 4),
        MutOp::insert(3, 5),
        MutOp::delete(0, 5),
        MutOp::insert(5, 3),
        MutOp::insert(0, 4),
        MutOp::insert(4, 3),
    ]);
    let mut g = Immediate::new();
    for op in &t {
        g.apply(op).map_err(|e| e.to_string())?;
    }
    g.drain_free_list();
    g.delete(NodeId::ROOT, NodeId(1)).map_err(|e| e.to_string())?;
    let mut freed = g.drain_free_list();
    freed.sort_unstable();
    let p = |v: u32| g.forest().parent_of(NodeId(v));
    let parents = (p(4), p(3), p(5));
    ensure(
        freed == [NodeId(1), NodeId(2)] && parents == (Some(NodeId::ROOT), Some(NodeId(4)), Some(NodeId(3))),
        format!("freed {freed:?}, parents of n3,n2,n4 {parents:?}"),
    )
}

fn c12() -> Outcome {
    let w = thrashing(Thrashing::new(THRASH_N));
    let cap = w.cap.unwrap();
    let ms = run_capped(&mut BackendKind::Ms.build(THRASH_N), &w, 64).map_err(|e| e.to_string())?;
    let ett = run_capped(&mut Immediate::new(), &w, 64).map_err(|e| e.to_string())?;
    let ratio = ms.measured_max_pause() as f64 / ett.measured_max_pause() as f64;
    ensure(
        ratio >= THRASH_RATIO && ms.peak_live <= cap && ett.peak_live <= cap,
        format!(
            "stage-2 max pause ms {} ett {}, ratio {ratio:.0}, peak live {}/{} of cap {cap}",
            ms.measured_max_pause(),
            ett.measured_max_pause(),
            ms.peak_live,
            ett.peak_live
        ),
    )
}

fn c13() -> Outcome {
    let mut ms_points = Vec::new();
    let mut ett_ok = true;
    let mut per_log = Vec::new();
    for e in BAKER_EXPONENTS {
        let n = 1usize << e;
        let w = baker(n);
        let ms = run_capped(&mut BackendKind::Ms.build(n), &w, 64).map_err(|e| e.to_string())?;
        let ett = run_capped(&mut Immediate::new(), &w, 64).map_err(|e| e.to_string())?;
        ms_points.push((n as f64, ms.measured_max_pause() as f64));
        let c = ett.measured_max_pause() as f64 / e as f64;
        per_log.push(format!("{c:.1}"));
        ett_ok &= c <= BAKER_C && ett.record.delay() == Delay::Bounded(1);
    }
    let (k, _) = power_law(&ms_points);
    ensure(
        ett_ok && k >= BAKER_SLOPE.0 && k <= BAKER_SLOPE.1,
        format!("ett pause/log n [{}] <= {BAKER_C}; ms pause exponent {k:.3}", per_log.join(",")),
    )
}

fn c14() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut clk = StepCounter::new();
    let mut f = EttForest::new();
    let mut o = NaiveForest::new();
    for _ in 0..FOREST_NODES {
        f.singleton(&mut clk);
        o.singleton();
    }
    let mut queries = 0u64;
    for i in 0..FOREST_OPS {
        let a = NodeId(rng.gen_range(0..FOREST_NODES as u32));
        let b = NodeId(rng.gen_range(0..FOREST_NODES as u32));
        let agree = match rng.gen_range(0..5) {
            0 => f.join(a, b, &mut clk) == o.join(a, b),
            1 => f.cut(a, &mut clk) == o.cut(a),
            2 => {
                queries += 1;
                f.path(a, b, &mut clk) == o.path(a, b)
            }
            3 => {
                queries += 1;
                f.parent(a, &mut clk) == o.parent(a)
            }
            _ => {
                queries += 1;
                f.next(a, &mut clk) == o.next(a)
            }
        };
        if !agree {
            return Err(format!("disagreement at op {i}"));
        }
        f.check_invariants().map_err(|e| format!("op {i}: {e}"))?;
    }
    Ok(format!("{FOREST_OPS} ops, {queries} queries agree, tours valid throughout"))
}

fn main() -> ExitCode {
    let (rep, took) = corpus();
    let checks: Vec<(u32, Box<dyn Fn() -> Outcome + Sync>)> = vec![
        (1, Box::new(|| c1(&rep, took))),
        (2, Box::new(|| c2(&rep))),
        (3, Box::new(c3)),
        (4, Box::new(c4)),
        (5, Box::new(c5)),
        (6, Box::new(c6)),
        (7, Box::new(c7)),
        (8, Box::new(c8)),
        (9, Box::new(c9)),
        (10, Box::new(c10)),
        (11, Box::new(c11)),
        (12, Box::new(c12)),
        (13, Box::new(c13)),
        (14, Box::new(c14)),
    ];
    let results: Vec<(u32, Outcome)> = std::thread::scope(|s| {
        let handles: Vec<_> = checks
            .iter()
            .map(|(id, f)| (*id, s.spawn(f)))
            .collect();
        handles
            .into_iter()
            .map(|(id, h)| (id, h.join().unwrap_or_else(|_| Err("panicked".into()))))
            .collect()
    });
    let mut failed = 0;
    for (id, r) in results {
        match r {
            Ok(d) => println!("PASS criterion {id}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {id}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
