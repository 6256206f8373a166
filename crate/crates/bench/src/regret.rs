//! Empirical regret of the sampled learners and of their combination.
//!
//! The best fixed hypothesis in hindsight is not computable online; it is
//! approximated per kernel by running passive-aggressive updates for several
//! epochs over the same stream and then freezing the result. Regret is the
//! online cumulative hinge loss minus the frozen classifier's cumulative hinge
//! loss over the same prefix. The combination is compared against the best
//! frozen kernel at each checkpoint.

use bomkc::classifier::{hinge, KernelClassifier};
use bomkc::dataset::{Dataset, Instance};
use bomkc::learners::pa_step;
use bomkc::multi_kernel::{Algorithm, MultiKernel};
use bomkc::prng::{Purpose, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::metrics::checkpoint_rounds;

pub const COMBINED: &str = "combined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub round: u64,
    /// Kernel label, or `combined`.
    pub series: String,
    pub online_loss: f64,
    pub comparator_loss: f64,
    pub regret: f64,
    /// `online_loss / sqrt(round)`.
    pub loss_per_sqrt_t: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub epochs: usize,
    pub rows: Vec<RegretRow>,
}

impl RegretReport {
    /// Rows of one series at the last checkpoint.
    pub fn final_row(&self, series: &str) -> Option<&RegretRow> {
        self.rows.iter().rev().find(|r| r.series == series)
    }
}

fn frozen_pa(kernel: &KernelClassifier, stream: &[&Instance], eta: f64, epochs: usize) -> KernelClassifier {
    let mut f = KernelClassifier::with_normalization(kernel.kernel, kernel.normalized);
    let mut round = 0;
    for _ in 0..epochs {
        for inst in stream {
            round += 1;
            pa_step(&mut f, inst, eta, round);
        }
    }
    f
}

/// SPA combination run on the permutation for `seed`; the comparator uses
/// `epochs` passes of PA with the configured `eta`.
pub fn empirical_regret_report(data: &Dataset, cfg: &RunConfig, seed: u64, epochs: usize) -> Result<RegretReport> {
    let mut report = RegretReport { epochs, rows: Vec::new() };
    if data.is_empty() {
        return Ok(report);
    }
    let order = RngStream::for_kernel(seed, 0, Purpose::Permute).permutation(data.len());
    let stream: Vec<&Instance> = order.iter().map(|&i| &data.instances[i]).collect();
    let mut model = MultiKernel::new(Algorithm::Spa, &cfg.kernels, cfg.params.clone(), seed)?;
    let m = model.kernels();
    let marks = checkpoint_rounds(stream.len() as u64, cfg.checkpoints);

    // online losses at checkpoints
    let mut online = vec![0.0; m];
    let mut combined = 0.0;
    let mut online_at = Vec::with_capacity(marks.len());
    let mut next = marks.iter().peekable();
    for (t, inst) in stream.iter().enumerate() {
        let out = model.round(inst);
        combined += out.combined_loss;
        for (acc, &mg) in online.iter_mut().zip(model.last_margins()) {
            *acc += hinge(mg, inst.y());
        }
        if next.next_if_eq(&&(t as u64 + 1)).is_some() {
            online_at.push((online.clone(), combined));
        }
    }

    // frozen comparator losses at the same checkpoints
    let comparator_at: Vec<Vec<f64>> = model
        .learners()
        .par_iter()
        .map(|l| {
            let f = frozen_pa(&l.classifier, &stream, cfg.params.spa.eta, epochs);
            let mut acc = 0.0;
            let mut at = Vec::with_capacity(marks.len());
            let mut next = marks.iter().peekable();
            for (t, inst) in stream.iter().enumerate() {
                acc += hinge(f.margin(&inst.features), inst.y());
                if next.next_if_eq(&&(t as u64 + 1)).is_some() {
                    at.push(acc);
                }
            }
            at
        })
        .collect();

    let labels: Vec<String> = cfg.kernels.iter().map(|k| k.label()).collect();
    for (c, &round) in marks.iter().enumerate() {
        let sqrt_t = (round as f64).sqrt();
        let (ref per_kernel, comb) = online_at[c];
        for i in 0..m {
            let cmp = comparator_at[i][c];
            report.rows.push(RegretRow {
                round,
                series: labels[i].clone(),
                online_loss: per_kernel[i],
                comparator_loss: cmp,
                regret: per_kernel[i] - cmp,
                loss_per_sqrt_t: per_kernel[i] / sqrt_t,
            });
        }
        let best = (0..m).map(|i| comparator_at[i][c]).fold(f64::INFINITY, f64::min);
        report.rows.push(RegretRow {
            round,
            series: COMBINED.to_string(),
            online_loss: comb,
            comparator_loss: best,
            regret: comb - best,
            loss_per_sqrt_t: comb / sqrt_t,
        });
    }
    Ok(report)
}
