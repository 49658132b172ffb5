use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gcds::backend::BackendKind;
use gcds::fuzz::{fuzz, FuzzConfig, ViolationKind};
use gcds::heap::{classify_prefix, format_trace, gen_trace, parse_trace, TraceClass};
use gcds::metrics::{run_trace, MetricsRecord, RunError};
use gcds::reductions::selftest::{drds_agreement, layered_sizes, lprds_agreement, Agreement};
use gcds::workloads::{node_count, run_capped, CapError, Workload, WorkloadName, WorkloadSpec};
use gcds::Gcds;

const EXIT_ERROR: u8 = 1;
const EXIT_SOUNDNESS: u8 = 2;
const EXIT_DELAY: u8 = 3;
const EXIT_DISAGREE: u8 = 4;

#[derive(Parser)]
#[command(name = "gcds", version, about = "Garbage collection data structure laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one backend on a workload and write per-op metrics as CSV.
    Run {
        #[arg(long)]
        backend: BackendKind,
        #[arg(long, default_value = "list")]
        workload: WorkloadName,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Allocation cap enforced by inserting steps.
        #[arg(long)]
        cap: Option<usize>,
        /// Use cyclic temporaries in the thrashing workload.
        #[arg(long)]
        cyclic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable the per-node search cursor of the ett backend.
        #[arg(long)]
        no_cursor: bool,
        /// Read the trace from a text file instead of a named workload.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Consecutive steps to wait for a free before giving up.
        #[arg(long, default_value_t = 1000)]
        max_wait: usize,
    },
    /// Differential fuzzing against the reachability oracle.
    Fuzz {
        #[arg(long, value_delimiter = ',', default_value = "rc,ms,ett,drds")]
        backends: Vec<BackendKind>,
        #[arg(long, default_value = "general")]
        class: TraceClass,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        max_nodes: usize,
        #[arg(long, default_value_t = 2000)]
        max_ops: usize,
    },
    /// Self-test a reduction against naive search.
    Reduce {
        which: Reduction,
        #[arg(long, default_value = "ett")]
        backend: BackendKind,
        /// Vertex count for drds; largest layer count and width for lprds.
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        graphs: usize,
        #[arg(long, default_value_t = 200)]
        ops: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a random trace of a class in the text format.
    Gen {
        #[arg(long, default_value = "general")]
        class: TraceClass,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Reduction {
    Drds,
    Lprds,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Run {
            backend,
            workload,
            n,
            cap,
            cyclic,
            seed,
            out,
            no_cursor,
            trace,
            max_wait,
        } => {
            let backend = match (backend, no_cursor) {
                (BackendKind::Ett { .. }, true) => BackendKind::Ett { cursor: false },
                (b, _) => b,
            };
            let w = match trace {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    Workload {
                        trace: parse_trace(&text)?,
                        cap,
                        measure_from: 0,
                    }
                }
                None => WorkloadSpec {
                    name: workload,
                    n,
                    cap,
                    cyclic,
                    seed,
                }
                .build()?,
            };
            run(backend, &w, max_wait, out)
        }
        Cmd::Fuzz {
            backends,
            class,
            trials,
            seed,
            max_nodes,
            max_ops,
        } => {
            if backends.is_empty() {
                bail!("need at least one backend");
            }
            let cfg = FuzzConfig {
                max_nodes,
                max_ops,
                ..FuzzConfig::new(class, trials, seed)
            };
            Ok(report_fuzz(&backends, &cfg))
        }
        Cmd::Reduce {
            which,
            backend,
            n,
            graphs,
            ops,
            seed,
        } => reduce(which, backend, n, graphs, ops, seed),
        Cmd::Gen { class, n, len, seed } => {
            let t = gen_trace(class, n, len.unwrap_or(6 * n), seed)?;
            io::stdout().write_all(format_trace(&t).as_bytes())?;
            Ok(0)
        }
    }
}

fn write_csv(rec: &MetricsRecord, class: Option<TraceClass>, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => {
            let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            rec.write_csv(&mut w, class)?;
            w.flush()?;
        }
        None => rec.write_csv(io::stdout().lock(), class)?,
    }
    Ok(())
}

fn run(backend: BackendKind, w: &Workload, max_wait: usize, out: Option<PathBuf>) -> Result<u8> {
    let class = classify_prefix(&w.trace).ok();
    let mut g = backend.build(node_count(&w.trace) + 1);
    let (rec, stage) = if w.cap.is_some() {
        match run_capped(&mut g, w, max_wait) {
            Ok(r) => {
                let stage = r.measured_max_pause();
                (r.record, Some(stage))
            }
            Err(CapError::Run(e)) => return Ok(run_failure(&e)),
            Err(e @ CapError::OutOfMemory { .. }) => {
                eprintln!("{}: {e}", g.name());
                return Ok(EXIT_ERROR);
            }
        }
    } else {
        match run_trace(&mut g, &w.trace) {
            Ok(r) => (r, None),
            Err(e) => return Ok(run_failure(&e)),
        }
    };
    write_csv(&rec, class, out)?;
    eprintln!(
        "{}: {} ops, max pause {}, total {}, delay {}, first delay {}",
        g.name(),
        rec.per_op_steps.len(),
        rec.max_pause(),
        rec.total_steps(),
        rec.delay(),
        rec.first_delay()
    );
    if let Some(s) = stage {
        eprintln!("{}: measured-phase max pause {s}", g.name());
    }
    Ok(0)
}

fn run_failure(e: &RunError) -> u8 {
    eprintln!("{e}");
    if e.is_soundness() {
        EXIT_SOUNDNESS
    } else {
        EXIT_ERROR
    }
}

fn report_fuzz(backends: &[BackendKind], cfg: &FuzzConfig) -> u8 {
    let rep = fuzz(backends, cfg);
    println!("{} trials, {} ops, class {}", rep.trials, rep.ops, cfg.class);
    for s in &rep.summaries {
        let bad = rep.violations.iter().filter(|v| v.backend == s.backend).count();
        println!(
            "{:<14} max_pause={:<8} delay={:<10} violations={bad}",
            s.backend, s.max_pause, s.worst_delay
        );
    }
    for v in rep.violations.iter().take(10) {
        let what = match &v.kind {
            ViolationKind::Soundness(e) | ViolationKind::Failed(e) => e.to_string(),
            ViolationKind::Lag { op } => format!("fell behind the oracle at op {op}"),
        };
        println!("trial {} {}: {what}", v.trial, v.backend);
    }
    if rep.soundness_violations() > 0 {
        EXIT_SOUNDNESS
    } else if rep.lag_violations() > 0 {
        EXIT_DELAY
    } else if !rep.is_clean() {
        EXIT_ERROR
    } else {
        0
    }
}

fn reduce(which: Reduction, backend: BackendKind, n: usize, graphs: usize, ops: usize, seed: u64) -> Result<u8> {
    if !backend.is_immediate() {
        bail!("the reductions need a backend that frees immediately; `{backend}` does not");
    }
    let make = move || backend.build(n * n + 2 * n + 8) as Box<dyn Gcds>;
    let a: Agreement = match which {
        Reduction::Drds => {
            if n < 2 {
                bail!("need at least two vertices");
            }
            drds_agreement(&make, n, graphs, ops, seed)?
        }
        Reduction::Lprds => lprds_agreement(&make, &layered_sizes(n.clamp(1, 12), ops), seed)?,
    };
    println!(
        "{} graphs, {} queries, {} agree, {} reach, {} changed state",
        a.graphs, a.queries, a.agreed, a.reaches, a.impure
    );
    Ok(if a.is_perfect() { 0 } else { EXIT_DISAGREE })
}
