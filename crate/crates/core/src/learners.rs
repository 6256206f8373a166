//! Per-kernel online update rules.
//!
//! Every rule is written as an `*_apply` function that receives the margin
//! `f(x_t)` already evaluated (the multi-kernel loop computes it once for
//! prediction and the Hedge loss) together with a [`DotCache`] loaded with
//! `x_t`. The `*_step` wrappers evaluate the margin themselves and are the
//! entry points for single-kernel use.

use serde::{Deserialize, Serialize};

use crate::classifier::{hinge, DotCache, KernelClassifier};
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::prng::{Purpose, RngStream};

/// Aggressiveness `eta` and sampling parameters `alpha <= beta` of SPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaParams {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SpaParams {
    fn default() -> Self {
        SpaParams { eta: 0.1, alpha: 1.0, beta: 3.0 }
    }
}

impl SpaParams {
    pub fn new(eta: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = SpaParams { eta, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.alpha > 0.0) || !(self.beta >= self.alpha) {
            return Err(Error::param(format!(
                "SPA needs eta > 0 and beta >= alpha > 0 (eta={}, alpha={}, beta={})",
                self.eta, self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Update probability `min(alpha, loss) / beta`; zero when the loss is.
    pub fn rho(&self, loss: f64) -> f64 {
        if loss > 0.0 {
            self.alpha.min(loss) / self.beta
        } else {
            0.0
        }
    }
}

/// What one learner did with one instance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub margin: f64,
    pub loss: f64,
    /// SPA update probability; 1 for deterministic rules that fired.
    pub rho: f64,
    /// Whether the update coin came up (deterministic rules: trigger fired).
    pub z: bool,
    /// Step size; the stored coefficient is `tau * y`.
    pub tau: f64,
    /// Whether a support vector was added.
    pub updated: bool,
    /// `k(x,x) = 0` with a pending update.
    pub degenerate: bool,
    /// Number of support vectors evicted.
    pub evicted: u32,
}

/// Selects the update rule and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UpdateRule {
    Pa { eta: f64 },
    Spa(SpaParams),
    Perceptron,
    Rbp { budget: usize },
    Forgetron { budget: usize, shrink: f64 },
    Bogd { budget: usize, step: f64, lambda: f64 },
    Bpas { budget: usize, c: f64 },
}

impl UpdateRule {
    pub fn validate(&self) -> Result<()> {
        let bad_budget = |b: usize| if b == 0 { Err(Error::param("budget must be at least 1")) } else { Ok(()) };
        match *self {
            UpdateRule::Pa { eta } if !(eta > 0.0) => Err(Error::param("PA needs eta > 0")),
            UpdateRule::Spa(p) => p.validate(),
            UpdateRule::Rbp { budget } => bad_budget(budget),
            UpdateRule::Forgetron { budget, shrink } => {
                bad_budget(budget)?;
                if !(shrink > 0.0 && shrink <= 1.0) {
                    return Err(Error::param("forgetron shrink must lie in (0,1]"));
                }
                Ok(())
            }
            UpdateRule::Bogd { budget, step, lambda } => {
                bad_budget(budget)?;
                if !(step > 0.0) || !(lambda >= 0.0) {
                    return Err(Error::param("BOGD needs step > 0 and lambda >= 0"));
                }
                Ok(())
            }
            UpdateRule::Bpas { budget, c } => {
                bad_budget(budget)?;
                if !(c > 0.0) {
                    return Err(Error::param("BPAS needs C > 0"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn budget(&self) -> Option<usize> {
        match *self {
            UpdateRule::Rbp { budget }
            | UpdateRule::Forgetron { budget, .. }
            | UpdateRule::Bogd { budget, .. }
            | UpdateRule::Bpas { budget, .. } => Some(budget),
            _ => None,
        }
    }
}

fn loaded(inst: &Instance) -> DotCache {
    let mut cache = DotCache::new();
    cache.begin(&inst.features);
    cache
}

fn push(c: &mut KernelClassifier, inst: &Instance, coef: f64, round: u64) {
    c.add_sv(inst.features.clone(), inst.id, coef, round);
}

/// Passive-aggressive step with `tau = min(eta, loss / k(x,x))`.
pub fn pa_apply(c: &mut KernelClassifier, inst: &Instance, margin: f64, eta: f64, round: u64) -> StepOutcome {
    let loss = hinge(margin, inst.y());
    let mut out = StepOutcome { margin, loss, ..Default::default() };
    if loss <= 0.0 {
        return out;
    }
    let kxx = c.self_similarity(&inst.features);
    if kxx <= 0.0 {
        out.degenerate = true;
        return out;
    }
    let tau = eta.min(loss / kxx);
    push(c, inst, tau * inst.y(), round);
    out.rho = 1.0;
    out.z = true;
    out.tau = tau;
    out.updated = true;
    out
}

pub fn pa_step(c: &mut KernelClassifier, inst: &Instance, eta: f64, round: u64) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    pa_apply(c, inst, margin, eta, round)
}

/// Sparse passive-aggressive step: update with probability
/// `rho = min(alpha, loss) / beta`, step `tau = min(eta / rho, loss / k(x,x))`.
pub fn spa_apply(
    c: &mut KernelClassifier,
    inst: &Instance,
    margin: f64,
    p: &SpaParams,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let loss = hinge(margin, inst.y());
    let rho = p.rho(loss);
    let mut out = StepOutcome { margin, loss, rho, ..Default::default() };
    if rho <= 0.0 {
        return out;
    }
    out.z = rng.bernoulli(rho).expect("rho lies in [0, alpha/beta]");
    if !out.z {
        return out;
    }
    let kxx = c.self_similarity(&inst.features);
    let tau = if kxx > 0.0 {
        (p.eta / rho).min(loss / kxx)
    } else {
        out.degenerate = true;
        p.eta / rho
    };
    debug_assert!(tau >= 0.0 && tau <= p.eta / rho);
    debug_assert!(kxx <= 0.0 || tau * kxx <= loss * (1.0 + 1e-12));
    out.tau = tau;
    if tau > 0.0 {
        push(c, inst, tau * inst.y(), round);
        out.updated = true;
    }
    out
}

pub fn spa_step(
    c: &mut KernelClassifier,
    inst: &Instance,
    p: &SpaParams,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    spa_apply(c, inst, margin, p, rng, round)
}

fn perceptron_trigger(margin: f64, inst: &Instance) -> StepOutcome {
    StepOutcome { margin, loss: hinge(margin, inst.y()), z: inst.y() * margin <= 0.0, ..Default::default() }
}

fn fire(mut out: StepOutcome, c: &mut KernelClassifier, inst: &Instance, round: u64) -> StepOutcome {
    push(c, inst, inst.y(), round);
    out.rho = 1.0;
    out.tau = 1.0;
    out.updated = true;
    out
}

/// Kernel perceptron: add `y k(x, .)` whenever `y f(x) <= 0`.
pub fn perceptron_apply(c: &mut KernelClassifier, inst: &Instance, margin: f64, round: u64) -> StepOutcome {
    let out = perceptron_trigger(margin, inst);
    if out.z {
        fire(out, c, inst, round)
    } else {
        out
    }
}

pub fn perceptron_step(c: &mut KernelClassifier, inst: &Instance, round: u64) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    perceptron_apply(c, inst, margin, round)
}

/// Random budget perceptron: on overflow evict a uniformly chosen SV first.
pub fn rbp_apply(
    c: &mut KernelClassifier,
    inst: &Instance,
    margin: f64,
    budget: usize,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let mut out = perceptron_trigger(margin, inst);
    if !out.z {
        return out;
    }
    if c.len() >= budget {
        let r = rng.index(c.len());
        c.remove_sv(r);
        out.evicted = 1;
    }
    let out = fire(out, c, inst, round);
    debug_assert!(c.len() <= budget);
    out
}

pub fn rbp_step(
    c: &mut KernelClassifier,
    inst: &Instance,
    budget: usize,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    rbp_apply(c, inst, margin, budget, rng, round)
}

/// Forgetron-style budget perceptron: on overflow shrink every coefficient,
/// then drop the oldest SV.
pub fn forgetron_apply(
    c: &mut KernelClassifier,
    inst: &Instance,
    margin: f64,
    budget: usize,
    shrink: f64,
    round: u64,
) -> StepOutcome {
    let mut out = perceptron_trigger(margin, inst);
    if !out.z {
        return out;
    }
    if c.len() >= budget {
        c.scale_coefs(shrink);
        c.remove_oldest();
        out.evicted = 1;
    }
    let out = fire(out, c, inst, round);
    debug_assert!(c.len() <= budget);
    out
}

pub fn forgetron_step(
    c: &mut KernelClassifier,
    inst: &Instance,
    budget: usize,
    shrink: f64,
    round: u64,
) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    forgetron_apply(c, inst, margin, budget, shrink, round)
}

/// Budgeted online gradient descent on the regularized hinge loss.
///
/// Each round shrinks all coefficients by `1 - step * lambda`; a positive
/// loss adds `step * y k(x, .)`. A full budget evicts one SV uniformly at
/// random and rescales the survivors by `B / (B - 1)`, which keeps the
/// expected function unchanged.
#[allow(clippy::too_many_arguments)]
pub fn bogd_apply(
    c: &mut KernelClassifier,
    inst: &Instance,
    margin: f64,
    budget: usize,
    step: f64,
    lambda: f64,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let loss = hinge(margin, inst.y());
    let mut out = StepOutcome { margin, loss, ..Default::default() };
    if lambda > 0.0 {
        c.scale_coefs(1.0 - step * lambda);
    }
    if loss <= 0.0 {
        return out;
    }
    out.z = true;
    if c.len() >= budget {
        evict_unbiased(c, budget, rng);
        out.evicted = 1;
    }
    push(c, inst, step * inst.y(), round);
    out.rho = 1.0;
    out.tau = step;
    out.updated = true;
    debug_assert!(c.len() <= budget);
    out
}

/// Uniform eviction followed by the `B/(B-1)` survivor rescale (none at `B = 1`).
pub(crate) fn evict_unbiased(c: &mut KernelClassifier, budget: usize, rng: &mut RngStream) {
    let r = rng.index(c.len());
    c.remove_sv(r);
    if budget > 1 {
        c.scale_coefs(budget as f64 / (budget as f64 - 1.0));
    }
}

#[allow(clippy::too_many_arguments)]
pub fn bogd_step(
    c: &mut KernelClassifier,
    inst: &Instance,
    budget: usize,
    step: f64,
    lambda: f64,
    rng: &mut RngStream,
    round: u64,
) -> StepOutcome {
    let margin = c.margin_cached(&mut loaded(inst));
    bogd_apply(c, inst, margin, budget, step, lambda, rng, round)
}

/// Replacement cost of candidate `r` in the budget passive-aggressive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpasCandidate {
    pub index: usize,
    pub tau: f64,
    /// `1/2 ||f_r + tau y k(x,.) - f||^2 + C loss(f_r + tau y k(x,.))`.
    pub score: f64,
}

/// Scores every candidate removal. `row[r] = k(x_r, x_t)`, `kxx = k(x_t, x_t) > 0`.
pub fn bpas_candidates(
    c: &KernelClassifier,
    row: &[f64],
    margin: f64,
    y: f64,
    kxx: f64,
    cap: f64,
) -> Vec<BpasCandidate> {
    c.svs()
        .iter()
        .zip(row)
        .enumerate()
        .map(|(index, (sv, &krt))| {
            let m_r = margin - sv.coef * krt;
            let tau = cap.min(hinge(m_r, y) / kxx);
            let krr = c.self_similarity(&sv.point);
            // ||tau y k(x_t,.) - coef_r k(x_r,.)||^2
            let dist = tau * tau * kxx + sv.coef * sv.coef * krr - 2.0 * tau * y * sv.coef * krt;
            let new_loss = hinge(m_r + tau * y * kxx, y);
            BpasCandidate { index, tau, score: 0.5 * dist.max(0.0) + cap * new_loss }
        })
        .collect()
}

/// Budget passive-aggressive (simple variant): below budget behaves as PA
/// with `eta = C`; at budget replaces the SV whose removal-plus-PA-step
/// scores lowest, ties to the lowest index.
pub fn bpas_apply(
    c: &mut KernelClassifier,
    inst: &Instance,
    margin: f64,
    budget: usize,
    cap: f64,
    cache: &mut DotCache,
    round: u64,
) -> StepOutcome {
    if c.len() < budget {
        return pa_apply(c, inst, margin, cap, round);
    }
    let y = inst.y();
    let loss = hinge(margin, y);
    let mut out = StepOutcome { margin, loss, ..Default::default() };
    if loss <= 0.0 {
        return out;
    }
    let kxx = c.self_similarity(&inst.features);
    if kxx <= 0.0 {
        out.degenerate = true;
        return out;
    }
    let row = c.kernel_row(cache);
    let best = bpas_candidates(c, &row, margin, y, kxx, cap)
        .into_iter()
        .fold(None::<BpasCandidate>, |best, cand| match best {
            Some(b) if b.score <= cand.score => Some(b),
            _ => Some(cand),
        })
        .expect("budget >= 1 means at least one candidate");
    c.remove_sv(best.index);
    push(c, inst, best.tau * y, round);
    out.z = true;
    out.rho = 1.0;
    out.tau = best.tau;
    out.updated = true;
    out.evicted = 1;
    debug_assert!(c.len() <= budget);
    out
}

pub fn bpas_step(c: &mut KernelClassifier, inst: &Instance, budget: usize, cap: f64, round: u64) -> StepOutcome {
    let mut cache = loaded(inst);
    let margin = c.margin_cached(&mut cache);
    bpas_apply(c, inst, margin, budget, cap, &mut cache, round)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerStats {
    /// Rounds in which the update coin / trigger fired.
    pub fired: u64,
    /// Support vectors added.
    pub added: u64,
    pub evicted: u64,
    pub degenerate: u64,
}

/// One kernel's classifier together with its rule and private random streams.
#[derive(Debug, Clone)]
pub struct Learner {
    pub rule: UpdateRule,
    pub classifier: KernelClassifier,
    pub stats: LearnerStats,
    sample_rng: RngStream,
    evict_rng: RngStream,
}

impl Learner {
    pub fn new(rule: UpdateRule, kernel: KernelSpec, normalized: bool, seed: u64, kernel_index: usize) -> Result<Self> {
        rule.validate()?;
        kernel.validate()?;
        Ok(Learner {
            rule,
            classifier: KernelClassifier::with_normalization(kernel, normalized),
            stats: LearnerStats::default(),
            sample_rng: RngStream::for_kernel(seed, kernel_index, Purpose::Sample),
            evict_rng: RngStream::for_kernel(seed, kernel_index, Purpose::Evict),
        })
    }

    /// Applies the rule given the margin on the instance loaded in `cache`.
    pub fn apply(&mut self, inst: &Instance, margin: f64, cache: &mut DotCache, round: u64) -> StepOutcome {
        let c = &mut self.classifier;
        let out = match self.rule {
            UpdateRule::Pa { eta } => pa_apply(c, inst, margin, eta, round),
            UpdateRule::Spa(ref p) => spa_apply(c, inst, margin, p, &mut self.sample_rng, round),
            UpdateRule::Perceptron => perceptron_apply(c, inst, margin, round),
            UpdateRule::Rbp { budget } => rbp_apply(c, inst, margin, budget, &mut self.evict_rng, round),
            UpdateRule::Forgetron { budget, shrink } => forgetron_apply(c, inst, margin, budget, shrink, round),
            UpdateRule::Bogd { budget, step, lambda } => {
                bogd_apply(c, inst, margin, budget, step, lambda, &mut self.evict_rng, round)
            }
            UpdateRule::Bpas { budget, c: cap } => bpas_apply(c, inst, margin, budget, cap, cache, round),
        };
        self.stats.fired += u64::from(out.z);
        self.stats.added += u64::from(out.updated);
        self.stats.evicted += u64::from(out.evicted);
        self.stats.degenerate += u64::from(out.degenerate);
        if let Some(b) = self.rule.budget() {
            assert!(self.classifier.len() <= b, "budget {b} exceeded");
        }
        out
    }

    /// Evaluates the margin and applies the rule.
    pub fn step(&mut self, inst: &Instance, round: u64) -> StepOutcome {
        let mut cache = loaded(inst);
        let margin = self.classifier.margin_cached(&mut cache);
        self.apply(inst, margin, &mut cache, round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SparseVector;
    use std::sync::Arc;

    fn inst(id: usize, xs: &[f64], y: i8) -> Instance {
        Instance::new(id, SparseVector::from_dense(xs), y).unwrap()
    }

    fn rbf(s: f64) -> KernelClassifier {
        KernelClassifier::new(KernelSpec::Gaussian { sigma: s })
    }

    #[test]
    fn pa_first_step() {
        let mut c = rbf(1.0);
        let x = inst(0, &[1.0, 2.0], 1);
        let out = pa_step(&mut c, &x, 0.1, 1);
        assert_eq!(out.loss, 1.0);
        assert_eq!(out.tau, 0.1);
        assert!((c.margin(&x.features) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pa_passive_when_no_loss() {
        let mut c = rbf(1.0);
        let x = inst(0, &[1.0], 1);
        c.add_sv(x.features.clone(), 0, 2.0, 0);
        let out = pa_step(&mut c, &x, 0.1, 1);
        assert!(!out.updated);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn pa_degenerate_zero_instance() {
        let mut c = KernelClassifier::new(KernelSpec::Polynomial { degree: 2 });
        let x = Instance::new(0, SparseVector::zero(), 1).unwrap();
        let out = pa_step(&mut c, &x, 0.1, 1);
        assert!(out.degenerate && !out.updated);
        assert!(c.is_empty());
    }

    #[test]
    fn spa_first_step_with_default_params() {
        let p = SpaParams::default();
        assert!((p.rho(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.rho(2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.rho(0.0), 0.0);
        let x = inst(0, &[0.5], -1);
        let mut rng = RngStream::new(1, 1);
        loop {
            let mut c = rbf(1.0);
            let out = spa_step(&mut c, &x, &p, &mut rng, 1);
            if out.z {
                assert!((out.tau - 0.3f64.min(1.0)).abs() < 1e-12);
                assert!((c.margin(&x.features) + 0.3).abs() < 1e-12);
                break;
            }
            assert!(c.is_empty());
            assert_eq!(out.tau, 0.0);
        }
    }

    #[test]
    fn spa_no_draw_when_loss_zero() {
        let p = SpaParams::default();
        let x = inst(0, &[0.5], 1);
        let mut c = rbf(1.0);
        c.add_sv(x.features.clone(), 0, 5.0, 0);
        let mut rng = RngStream::new(2, 2);
        let before = rng.clone().next_u64();
        let out = spa_step(&mut c, &x, &p, &mut rng, 1);
        assert_eq!((out.rho, out.z, out.tau), (0.0, false, 0.0));
        assert_eq!(rng.next_u64(), before, "no draw consumed");
    }

    #[test]
    fn spa_degenerate_uses_eta_over_rho() {
        let p = SpaParams::default();
        let x = Instance::new(0, SparseVector::zero(), 1).unwrap();
        let mut c = KernelClassifier::new(KernelSpec::Polynomial { degree: 1 });
        let mut rng = RngStream::new(0, 0);
        for _ in 0..200 {
            let out = spa_step(&mut c, &x, &p, &mut rng, 1);
            if out.z {
                assert!(out.degenerate);
                assert!((out.tau - 0.3).abs() < 1e-12);
                return;
            }
        }
        panic!("coin never fired");
    }

    #[test]
    fn perceptron_rules() {
        let mut c = rbf(1.0);
        let x = inst(0, &[1.0], 1);
        let out = perceptron_step(&mut c, &x, 1);
        assert!(out.updated, "margin 0 triggers");
        assert_eq!(c.margin(&x.features), 1.0);
        let out = perceptron_step(&mut c, &x, 2);
        assert!(!out.updated);
        let z = inst(1, &[3.0], -1);
        let before = c.margin(&z.features);
        perceptron_step(&mut c, &z, 3);
        assert!((c.margin(&z.features) - (before - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rbp_respects_budget() {
        let mut c = rbf(0.1);
        let mut rng = RngStream::new(3, 3);
        for k in 0..3 {
            let x = inst(k, &[10.0 * k as f64], if k % 2 == 0 { 1 } else { -1 });
            rbp_step(&mut c, &x, 2, &mut rng, k as u64);
        }
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn rbp_eviction_is_uniform() {
        let mut rng = RngStream::new(9, 9);
        let mut counts = [0usize; 3];
        let trials = 60_000;
        for _ in 0..trials {
            let mut c = rbf(0.1);
            for k in 0..3 {
                c.add_sv(Arc::new(SparseVector::from_dense(&[100.0 * k as f64])), k, 1.0, 0);
            }
            let x = inst(7, &[-50.0], -1);
            rbp_step(&mut c, &x, 3, &mut rng, 1);
            let survivors: Vec<usize> = c.svs().iter().map(|s| s.id).collect();
            let gone = (0..3).find(|k| !survivors.contains(k)).unwrap();
            counts[gone] += 1;
        }
        // chi-square with 2 degrees of freedom, 0.1% critical value
        let e = trials as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 13.82, "{counts:?} chi2 {chi2}");
    }

    #[test]
    fn forgetron_keeps_newest_and_shrinks() {
        let mut c = rbf(0.1);
        let a = inst(0, &[0.0], 1);
        let b = inst(1, &[50.0], -1);
        forgetron_step(&mut c, &a, 1, 0.9, 1);
        forgetron_step(&mut c, &b, 1, 0.9, 2);
        assert_eq!(c.len(), 1);
        assert_eq!(c.svs()[0].id, 1);
        assert_eq!(c.svs()[0].coef, -1.0);

        let mut c = rbf(0.1);
        for k in 0..3 {
            c.add_sv(Arc::new(SparseVector::from_dense(&[10.0 * k as f64])), k, 0.5 + k as f64, 0);
        }
        let x = inst(5, &[-40.0], -1);
        forgetron_step(&mut c, &x, 3, 0.5, 1);
        let coefs: Vec<f64> = c.svs().iter().map(|s| s.coef).collect();
        assert_eq!(coefs, vec![1.5 * 0.5, 2.5 * 0.5, -1.0]);

        let mut c = rbf(0.1);
        c.add_sv(Arc::new(SparseVector::from_dense(&[10.0])), 0, 0.7, 0);
        forgetron_step(&mut c, &x, 1, 1.0, 1);
        assert_eq!(c.svs().iter().map(|s| s.coef).collect::<Vec<_>>(), vec![-1.0]);
    }

    #[test]
    fn bogd_first_step_and_regularization() {
        let mut c = rbf(1.0);
        let mut rng = RngStream::new(0, 0);
        let x = inst(0, &[1.0], -1);
        bogd_step(&mut c, &x, 5, 0.1, 0.0, &mut rng, 1);
        assert_eq!(c.svs()[0].coef, -0.1);

        let mut c = rbf(1.0);
        c.add_sv(Arc::new(SparseVector::from_dense(&[0.0])), 0, 4.0, 0);
        let far = inst(1, &[0.0], 1); // loss 0 after margin 4
        bogd_step(&mut c, &far, 5, 0.1, 0.01, &mut rng, 1);
        assert_eq!(c.svs()[0].coef, 4.0 * (1.0 - 0.1 * 0.01));
    }

    #[test]
    fn bpas_reduces_to_pa_below_budget() {
        let xs: Vec<Instance> = (0..20)
            .map(|k| inst(k, &[(k as f64 * 0.7).sin(), (k as f64).cos()], if k % 3 == 0 { 1 } else { -1 }))
            .collect();
        let (mut a, mut b) = (rbf(0.5), rbf(0.5));
        for (r, x) in xs.iter().enumerate() {
            let oa = pa_step(&mut a, x, 0.1, r as u64);
            let ob = bpas_step(&mut b, x, 1000, 0.1, r as u64);
            assert_eq!(oa, ob);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn bpas_budget_one_far_sv() {
        let mut c = rbf(1.0);
        c.add_sv(Arc::new(SparseVector::from_dense(&[100.0])), 0, 0.4, 0);
        let x = inst(1, &[0.0], 1);
        let row = vec![c.k(&c.svs()[0].point, &x.features)];
        assert!(row[0] < 1e-300);
        let cands = bpas_candidates(&c, &row, 0.0, 1.0, 1.0, 0.1);
        // removal costs 1/2 coef^2 plus the PA step (tau = 0.1) and its residual loss
        let expect = 0.5 * (0.1 * 0.1 + 0.4 * 0.4) + 0.1 * 0.9;
        assert!((cands[0].score - expect).abs() < 1e-12);
        bpas_step(&mut c, &x, 1, 0.1, 1);
        assert_eq!(c.len(), 1);
        assert_eq!(c.svs()[0].id, 1);
        assert!((c.svs()[0].coef - 0.1).abs() < 1e-15);
    }

    #[test]
    fn learner_validates_rule() {
        let k = KernelSpec::Gaussian { sigma: 1.0 };
        assert!(Learner::new(UpdateRule::Rbp { budget: 0 }, k, false, 0, 0).is_err());
        assert!(Learner::new(UpdateRule::Spa(SpaParams { eta: 0.1, alpha: 2.0, beta: 1.0 }), k, false, 0, 0).is_err());
        assert!(Learner::new(UpdateRule::Forgetron { budget: 3, shrink: 1.5 }, k, false, 0, 0).is_err());
        assert!(Learner::new(UpdateRule::Bpas { budget: 3, c: 0.1 }, k, false, 0, 0).is_ok());
    }
}
