//! Monte Carlo certificates, audits and report assembly.
//!
//! Trial `t` of an experiment draws from the substream `(seed, label, t)`, and
//! per-trial results are collected in trial order before being reduced, so
//! every report is a pure function of its seed regardless of thread count.

pub mod appendix_a;
pub mod audit;
pub mod certify;
pub mod experiments;
pub mod pipeline;
pub mod report;
pub mod stats;

pub use appendix_a::{view_equivalence_appendix_a, EquivalenceReport, Simulator};
pub use audit::{audit_suite, dp_audit, AuditVerdict, NeighborPair};
pub use certify::{awec_trial_log, estimate_accuracy, estimate_awec, estimate_wec, AwecCertificate, WecCertificate};
pub use experiments::{a_tilde_experiment, b_tilde_experiment, gl_decode_experiment, AttackReport};
pub use pipeline::{pipeline_report, PipelineConfig, PipelineReport};
pub use stats::{clopper_pearson, EstimateReport, CONFIDENCE};

use crate::error::Result;
use crate::stream::RandomStream;
use rayon::prelude::*;

/// Runs `trials` independent trials in parallel and returns their results in trial order.
pub fn run_trials<T, F>(seed: u64, label: &str, trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> Result<T> + Sync,
{
    let root = RandomStream::from_seed(seed).derive(label);
    (0..trials).into_par_iter().map(|t| f(t, &mut root.derive_indexed("trial", t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn trial_results_do_not_depend_on_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_trials(3, "x", 500, |_, s| Ok(s.next_u64())).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
