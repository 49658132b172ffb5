//! Differential fuzzing of backends against the oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::backend::BackendKind;
use crate::heap::{gen_trace, MutOp, TraceClass};
use crate::metrics::{run_with_timeline, Delay, RunError, Timeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub class: TraceClass,
    pub trials: usize,
    pub seed: u64,
    pub max_nodes: usize,
    pub max_ops: usize,
}

impl FuzzConfig {
    pub fn new(class: TraceClass, trials: usize, seed: u64) -> Self {
        Self {
            class,
            trials,
            seed,
            max_nodes: 300,
            max_ops: 2000,
        }
    }
}

/// Trial `i` of a fuzz campaign.
pub fn trial_trace(cfg: &FuzzConfig, i: usize) -> Vec<MutOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
    let n = rng.gen_range(1..=cfg.max_nodes);
    let len = rng.gen_range(n..=cfg.max_ops.max(n));
    gen_trace(cfg.class, n, len, rng.gen()).expect("fuzz sizes are feasible")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Freed something reachable, or freed twice.
    Soundness(RunError),
    /// A backend meant to free immediately fell behind the oracle.
    Lag { op: usize },
    Failed(RunError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub trial: usize,
    pub backend: BackendKind,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendSummary {
    pub backend: BackendKind,
    pub max_pause: u64,
    pub worst_delay: Delay,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FuzzReport {
    pub trials: usize,
    pub ops: u64,
    pub summaries: Vec<BackendSummary>,
    pub violations: Vec<Violation>,
}

impl FuzzReport {
    pub fn soundness_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v.kind, ViolationKind::Soundness(_)))
            .count()
    }

    pub fn lag_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v.kind, ViolationKind::Lag { .. }))
            .count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Run every backend on `cfg.trials` generated traces. Soundness is checked
/// for all backends, exact immediate collection for those that claim it.
pub fn fuzz(backends: &[BackendKind], cfg: &FuzzConfig) -> FuzzReport {
    let per_trial: Vec<_> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trace = trial_trace(cfg, trial);
            let tl = Timeline::of(&trace).expect("generated traces are valid");
            let mut out = Vec::new();
            for &b in backends {
                let mut g = b.build(trace.len());
                let r = match run_with_timeline(&mut g, &trace, &tl) {
                    Ok(rec) => {
                        let lag = if b.is_immediate() { rec.first_lag() } else { None };
                        Ok((rec.max_pause(), rec.delay(), lag))
                    }
                    Err(e) => Err(e),
                };
                out.push((b, r));
            }
            (trial, trace.len() as u64, out)
        })
        .collect();

    let mut rep = FuzzReport {
        trials: cfg.trials,
        summaries: backends
            .iter()
            .map(|&backend| BackendSummary {
                backend,
                max_pause: 0,
                worst_delay: Delay::Bounded(0),
                runs: 0,
            })
            .collect(),
        ..Default::default()
    };
    for (trial, ops, results) in per_trial {
        rep.ops += ops;
        for (k, (backend, r)) in results.into_iter().enumerate() {
            let s = &mut rep.summaries[k];
            s.runs += 1;
            match r {
                Ok((pause, delay, lag)) => {
                    s.max_pause = s.max_pause.max(pause);
                    s.worst_delay = s.worst_delay.max(delay);
                    if let Some(op) = lag {
                        rep.violations.push(Violation {
                            trial,
                            backend,
                            kind: ViolationKind::Lag { op },
                        });
                    }
                }
                Err(e) => {
                    let kind = if e.is_soundness() {
                        ViolationKind::Soundness(e)
                    } else {
                        ViolationKind::Failed(e)
                    };
                    rep.violations.push(Violation { trial, backend, kind });
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broken_backend_is_caught() {
        let cfg = FuzzConfig {
            max_nodes: 30,
            max_ops: 200,
            ..FuzzConfig::new(TraceClass::General, 20, 1)
        };
        let rep = fuzz(&[BackendKind::Ett { cursor: true }, BackendKind::Broken], &cfg);
        assert!(rep.soundness_violations() > 0);
        assert!(rep.violations.iter().all(|v| v.backend == BackendKind::Broken));
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = FuzzConfig::new(TraceClass::AllReachable, 3, 9);
        assert_eq!(trial_trace(&cfg, 2), trial_trace(&cfg, 2));
    }
}
