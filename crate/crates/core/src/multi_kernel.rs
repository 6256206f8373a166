//! Hedge-weighted combination of per-kernel learners.
//!
//! [`MultiKernel`] runs one round of the online protocol: predict with the
//! current combination weights, reveal the label, update the per-kernel
//! learners (all of them, or a sampled subset), then discount each kernel's
//! Hedge weight by `gamma^loss` and renormalize. Weights are kept as natural
//! logarithms so that long runs with large losses neither underflow nor
//! overflow.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::{combine, hinge, predict_label, CombinedClassifier, DotCache};
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::learners::{Learner, SpaParams, StepOutcome, UpdateRule};
use crate::prng::{Purpose, RngStream};

/// Log-domain Hedge weights with discount `gamma` and smoothing `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    log_w: Vec<f64>,
    pub gamma: f64,
    pub delta: f64,
}

impl HedgeState {
    /// `w_i = 1/m` for every kernel.
    pub fn uniform(m: usize, gamma: f64, delta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("kernel pool is empty"));
        }
        Self::from_log_weights(vec![-(m as f64).ln(); m], gamma, delta)
    }

    pub fn from_log_weights(log_w: Vec<f64>, gamma: f64, delta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0,1), got {delta}")));
        }
        if log_w.is_empty() || log_w.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("log weights must be finite and nonempty"));
        }
        Ok(HedgeState { log_w, gamma, delta })
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    fn max_log(&self) -> f64 {
        self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(1 - delta) w_i / max_j w_j + delta`, evaluated in the log domain.
    pub fn sampling_prob(&self, i: usize) -> f64 {
        self.sampling_prob_with(i, self.delta)
    }

    pub fn sampling_prob_with(&self, i: usize, delta: f64) -> f64 {
        let ratio = (self.log_w[i] - self.max_log()).exp();
        // written so that the leading kernel gets exactly 1
        1.0 - (1.0 - delta) * (1.0 - ratio)
    }

    /// `w_i <- w_i * gamma^{loss_i}` for every kernel.
    pub fn update(&mut self, losses: &[f64]) {
        let lg = self.gamma.ln();
        for (w, &l) in self.log_w.iter_mut().zip(losses) {
            debug_assert!(l >= 0.0 && l.is_finite());
            *w += l * lg;
        }
    }

    /// Discounts only the kernels with `mask[i]` set.
    pub fn update_masked(&mut self, losses: &[f64], mask: &[bool]) {
        let lg = self.gamma.ln();
        for ((w, &l), &on) in self.log_w.iter_mut().zip(losses).zip(mask) {
            if on {
                *w += l * lg;
            }
        }
    }

    /// Combination weights `theta_i = w_i / sum_j w_j` (log-sum-exp).
    pub fn theta(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.log_w.len()];
        self.theta_into(&mut out);
        out
    }

    pub fn theta_into(&self, out: &mut [f64]) {
        let mx = self.max_log();
        let mut z = 0.0;
        for (o, &w) in out.iter_mut().zip(&self.log_w) {
            *o = (w - mx).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
        }
    }
}

/// Multi-kernel algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Sparse passive-aggressive learners, Hedge combination with sampled kernels.
    Spa,
    /// Kernel perceptrons, fixed uniform combination.
    OmkcU,
    /// Kernel perceptrons, Hedge combination, every kernel updated.
    OmkcDd,
    /// Kernel perceptrons, Hedge combination, sampled kernel updates.
    OmkcSd,
    /// Budget learners, every kernel updated, Hedge combination.
    Rbp,
    Forgetron,
    Bogd,
    Bpas,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Spa,
        Algorithm::OmkcU,
        Algorithm::OmkcDd,
        Algorithm::OmkcSd,
        Algorithm::Rbp,
        Algorithm::Forgetron,
        Algorithm::Bogd,
        Algorithm::Bpas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Spa => "spa",
            Algorithm::OmkcU => "omkc-u",
            Algorithm::OmkcDd => "omkc-dd",
            Algorithm::OmkcSd => "omkc-sd",
            Algorithm::Rbp => "rbp",
            Algorithm::Forgetron => "forgetron",
            Algorithm::Bogd => "bogd",
            Algorithm::Bpas => "bpas",
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Algorithm::Rbp | Algorithm::Forgetron | Algorithm::Bogd | Algorithm::Bpas)
    }

    /// Whether kernel updates are gated by the Hedge-derived coin `c_i`.
    pub fn samples_kernels(&self) -> bool {
        matches!(self, Algorithm::Spa | Algorithm::OmkcSd)
    }

    pub fn default_hedge_loss(&self) -> HedgeLoss {
        match self {
            Algorithm::OmkcU | Algorithm::OmkcDd | Algorithm::OmkcSd => HedgeLoss::Mistake,
            _ => HedgeLoss::Hinge,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::param(format!("unknown algorithm `{s}`")))
    }
}

/// Loss fed to the Hedge discount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedgeLoss {
    Hinge,
    /// 0/1 indicator of a per-kernel prediction mistake.
    Mistake,
}

impl std::str::FromStr for HedgeLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(HedgeLoss::Hinge),
            "mistake" => Ok(HedgeLoss::Mistake),
            _ => Err(Error::param(format!("unknown hedge loss `{s}`"))),
        }
    }
}

/// Hyperparameters of one multi-kernel run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiKernelParams {
    pub spa: SpaParams,
    pub gamma: f64,
    pub delta: f64,
    /// Per-kernel SV cap for the budget algorithms.
    pub budget: Option<usize>,
    pub forgetron_shrink: f64,
    pub bogd_step: f64,
    pub bogd_lambda: f64,
    pub bpas_c: f64,
    /// Overrides the algorithm's default Hedge loss.
    pub hedge_loss: Option<HedgeLoss>,
    /// Discount only the kernels whose coin came up (ablation).
    pub conditional_hedge: bool,
    pub normalize_kernels: bool,
}

impl Default for MultiKernelParams {
    fn default() -> Self {
        MultiKernelParams {
            spa: SpaParams::default(),
            gamma: 0.99,
            delta: 0.001,
            budget: None,
            forgetron_shrink: 0.9,
            bogd_step: 0.1,
            bogd_lambda: 1e-3,
            bpas_c: 0.1,
            hedge_loss: None,
            conditional_hedge: false,
            normalize_kernels: false,
        }
    }
}

impl MultiKernelParams {
    pub fn rule_for(&self, algorithm: Algorithm) -> Result<UpdateRule> {
        let budget = || self.budget.ok_or_else(|| Error::param(format!("algorithm `{algorithm}` needs a budget")));
        Ok(match algorithm {
            Algorithm::Spa => UpdateRule::Spa(self.spa),
            Algorithm::OmkcU | Algorithm::OmkcDd | Algorithm::OmkcSd => UpdateRule::Perceptron,
            Algorithm::Rbp => UpdateRule::Rbp { budget: budget()? },
            Algorithm::Forgetron => UpdateRule::Forgetron { budget: budget()?, shrink: self.forgetron_shrink },
            Algorithm::Bogd => UpdateRule::Bogd { budget: budget()?, step: self.bogd_step, lambda: self.bogd_lambda },
            Algorithm::Bpas => UpdateRule::Bpas { budget: budget()?, c: self.bpas_c },
        })
    }
}

/// Smoothing schedule `delta_t` as a function of the 1-based round.
pub type DeltaSchedule = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Result of one online round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub prediction: i8,
    pub mistake: bool,
    pub combined_margin: f64,
    /// Hinge loss of the combined classifier.
    pub combined_loss: f64,
}

pub struct MultiKernel {
    pub algorithm: Algorithm,
    pub params: MultiKernelParams,
    learners: Vec<Learner>,
    hedge: HedgeState,
    theta: Vec<f64>,
    select_rngs: Vec<RngStream>,
    delta_schedule: Option<DeltaSchedule>,
    hedge_loss: HedgeLoss,
    cache: DotCache,
    round: u64,
    margins: Vec<f64>,
    losses: Vec<f64>,
    selected: Vec<bool>,
    outcomes: Vec<StepOutcome>,
}

impl fmt::Debug for MultiKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiKernel")
            .field("algorithm", &self.algorithm)
            .field("round", &self.round)
            .field("theta", &self.theta)
            .field("sv_counts", &self.sv_counts())
            .finish()
    }
}

impl MultiKernel {
    /// `f_1^i = 0`, `w_1^i = theta_1^i = 1/m`.
    pub fn new(algorithm: Algorithm, pool: &[KernelSpec], params: MultiKernelParams, seed: u64) -> Result<Self> {
        let m = pool.len();
        let hedge = HedgeState::uniform(m, params.gamma, params.delta)?;
        let rule = params.rule_for(algorithm)?;
        let learners = pool
            .iter()
            .enumerate()
            .map(|(i, k)| Learner::new(rule, *k, params.normalize_kernels, seed, i))
            .collect::<Result<Vec<_>>>()?;
        let select_rngs = (0..m).map(|i| RngStream::for_kernel(seed, i, Purpose::Select)).collect();
        Ok(MultiKernel {
            algorithm,
            hedge_loss: params.hedge_loss.unwrap_or(algorithm.default_hedge_loss()),
            params,
            learners,
            theta: hedge.theta(),
            hedge,
            select_rngs,
            delta_schedule: None,
            cache: DotCache::new(),
            round: 0,
            margins: vec![0.0; m],
            losses: vec![0.0; m],
            selected: vec![false; m],
            outcomes: vec![StepOutcome::default(); m],
        })
    }

    pub fn with_delta_schedule(mut self, schedule: DeltaSchedule) -> Self {
        self.delta_schedule = Some(schedule);
        self
    }

    pub fn kernels(&self) -> usize {
        self.learners.len()
    }

    pub fn learners(&self) -> &[Learner] {
        &self.learners
    }

    pub fn hedge(&self) -> &HedgeState {
        &self.hedge
    }

    /// Weights used for the next prediction.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn round_index(&self) -> u64 {
        self.round
    }

    pub fn sv_counts(&self) -> Vec<usize> {
        self.learners.iter().map(|l| l.classifier.len()).collect()
    }

    pub fn total_svs(&self) -> usize {
        self.learners.iter().map(|l| l.classifier.len()).sum()
    }

    /// Per-kernel hinge losses of the last round, at the pre-update classifiers.
    pub fn last_losses(&self) -> &[f64] {
        &self.losses
    }

    /// Per-kernel margins of the last round, before the update.
    pub fn last_margins(&self) -> &[f64] {
        &self.margins
    }

    /// Which kernels drew `c_i = 1` in the last round (all, for deterministic algorithms).
    pub fn last_selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn last_outcomes(&self) -> &[StepOutcome] {
        &self.outcomes
    }

    /// Margin of the current combination without learning.
    pub fn predict_margin(&mut self, inst: &Instance) -> f64 {
        self.cache.begin(&inst.features);
        let cache = &mut self.cache;
        combine(&self.theta, self.learners.iter().map(|l| l.classifier.margin_cached(cache)))
    }

    pub fn combined_classifier(&self) -> CombinedClassifier {
        CombinedClassifier::new(self.learners.iter().map(|l| l.classifier.clone()).collect(), self.theta.clone())
            .expect("theta stays on the simplex")
    }

    /// One round: predict, receive the label, update learners and weights.
    pub fn round(&mut self, inst: &Instance) -> RoundOutcome {
        self.round += 1;
        let t = self.round;
        let y = inst.y();
        self.cache.begin(&inst.features);
        for (m, l) in self.margins.iter_mut().zip(&self.learners) {
            *m = l.classifier.margin_cached(&mut self.cache);
        }
        let combined_margin = combine(&self.theta, self.margins.iter().copied());
        let prediction = predict_label(combined_margin);

        for (i, &m) in self.margins.iter().enumerate() {
            self.losses[i] = match self.hedge_loss {
                HedgeLoss::Hinge => hinge(m, y),
                HedgeLoss::Mistake => f64::from(u8::from(predict_label(m) != inst.label())),
            };
        }

        let delta = match &self.delta_schedule {
            Some(f) => f(t),
            None => self.hedge.delta,
        };
        for i in 0..self.learners.len() {
            let selected = if self.algorithm.samples_kernels() {
                let p = self.hedge.sampling_prob_with(i, delta);
                self.select_rngs[i].bernoulli(p).expect("sampling probability in [delta, 1]")
            } else {
                true
            };
            self.selected[i] = selected;
            self.outcomes[i] = if selected {
                self.learners[i].apply(inst, self.margins[i], &mut self.cache, t)
            } else {
                StepOutcome { margin: self.margins[i], loss: hinge(self.margins[i], y), ..Default::default() }
            };
        }

        if self.params.conditional_hedge && self.algorithm.samples_kernels() {
            self.hedge.update_masked(&self.losses, &self.selected);
        } else {
            self.hedge.update(&self.losses);
        }
        if self.algorithm != Algorithm::OmkcU {
            self.hedge.theta_into(&mut self.theta);
        }

        RoundOutcome {
            prediction,
            mistake: prediction != inst.label(),
            combined_margin,
            combined_loss: hinge(combined_margin, y),
        }
    }
}
