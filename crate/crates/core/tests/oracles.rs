//! Update rules checked against independent numeric oracles.

use std::sync::Arc;

use bomkc::classifier::{hinge, KernelClassifier};
use bomkc::dataset::{Instance, SparseVector};
use bomkc::kernels::{gram, KernelSpec};
use bomkc::learners::{bogd_step, bpas_step, pa_step, spa_step, SpaParams};
use bomkc::prng::RngStream;
use proptest::prelude::*;

fn inst(id: usize, xs: &[f64], y: i8) -> Instance {
    Instance::new(id, SparseVector::from_dense(xs), y).unwrap()
}

/// Golden-section minimizer of a convex function on `[lo, hi]`.
fn argmin(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pa_step_minimizes_proximal_objective(
        xs in prop::collection::vec(-2.0f64..2.0, 2),
        svs in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 2), -1.0f64..1.0), 0..4),
        pos in any::<bool>(),
        eta in 0.01f64..3.0,
        degree in 1u32..4,
        gaussian in any::<bool>(),
    ) {
        let kernel = if gaussian { KernelSpec::Gaussian { sigma: 0.7 } } else { KernelSpec::Polynomial { degree } };
        let mut c = KernelClassifier::new(kernel);
        for (i, (p, coef)) in svs.iter().enumerate() {
            c.add_sv(Arc::new(SparseVector::from_dense(p)), i + 1, *coef, 0);
        }
        let x = inst(0, &xs, if pos { 1 } else { -1 });
        let y = x.y();
        let m = c.margin(&x.features);
        let kxx = c.self_similarity(&x.features);
        prop_assume!(kxx > 1e-6);
        let before = c.len();
        pa_step(&mut c, &x, eta, 1);
        let coef = if c.len() > before { c.svs().back().unwrap().coef } else { 0.0 };
        // f = f_t + a k(x,.): ||f - f_t||^2 = a^2 kxx
        let obj = |a: f64| 0.5 * a * a * kxx + eta * hinge(m + a * kxx, y);
        let bound = 1.0 + eta + 1.0 / kxx;
        let oracle = argmin(obj, -bound, bound);
        prop_assert!((coef - oracle).abs() <= 1e-5, "coef {} oracle {}", coef, oracle);
    }
}

#[test]
fn spa_coefficient_is_unbiased_for_pa() {
    // loss 1, rho = 1/3, eta / rho = 0.3 < loss / kxx = 1: E[coef] = eta
    let x = inst(0, &[0.5, -0.5], 1);
    let kernel = KernelSpec::Gaussian { sigma: 1.0 };
    let p = SpaParams::default();
    let mut rng = RngStream::new(77, 3);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let mut c = KernelClassifier::new(kernel);
        spa_step(&mut c, &x, &p, &mut rng, 1);
        let coef = c.svs().front().map_or(0.0, |s| s.coef);
        sum += coef;
        sq += coef * coef;
    }
    let mean = sum / n as f64;
    let sd = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 0.1).abs() < 4.0 * sd, "mean {mean} sd {sd}");
}

#[test]
fn bogd_eviction_preserves_expected_margin() {
    let kernel = KernelSpec::Gaussian { sigma: 1.5 };
    let budget = 4;
    let pts = [[0.0, 0.0], [1.0, 0.5], [-0.7, 1.2], [0.3, -1.4]];
    let coefs = [0.4, -0.3, 0.25, 0.6];
    let mut base = KernelClassifier::new(kernel);
    for (i, (p, &c)) in pts.iter().zip(&coefs).enumerate() {
        base.add_sv(Arc::new(SparseVector::from_dense(p)), i + 1, c, 0);
    }
    let x = inst(10, &[2.0, 2.0], -1);
    let probe = SparseVector::from_dense(&[0.2, 0.1]);
    let (step, lambda) = (0.1, 0.01);
    // expectation: shrunk old expansion plus the new term
    let expected = (1.0 - step * lambda) * base.margin(&probe) + step * x.y() * kernel.eval(&x.features, &probe);

    let mut rng = RngStream::new(5, 9);
    let n = 10_000;
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let mut c = base.clone();
        let out = bogd_step(&mut c, &x, budget, step, lambda, &mut rng, 1);
        assert_eq!(out.evicted, 1);
        assert_eq!(c.len(), budget);
        vals.push(c.margin(&probe));
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0) / n as f64).sqrt();
    assert!((mean - expected).abs() < 4.0 * sd, "mean {mean} expected {expected} sd {sd}");
}

/// Replacement choice recomputed from the full Gram matrix over the stored
/// points and the new instance.
fn bpas_oracle(c: &KernelClassifier, x: &Instance, cap: f64) -> (usize, f64) {
    let mut points: Vec<SparseVector> = c.svs().iter().map(|s| (*s.point).clone()).collect();
    points.push((*x.features).clone());
    let g = gram(&c.kernel, &points);
    let n = c.len();
    let t = n;
    let coefs: Vec<f64> = c.svs().iter().map(|s| s.coef).collect();
    let y = x.y();
    let mut best = (usize::MAX, f64::INFINITY, 0.0);
    for r in 0..n {
        let m_r: f64 = (0..n).filter(|&j| j != r).map(|j| coefs[j] * g[j][t]).sum();
        let tau = cap.min(hinge(m_r, y) / g[t][t]);
        // difference vector a: -coef_r at r, tau y at t
        let mut a = vec![0.0; n + 1];
        a[r] = -coefs[r];
        a[t] = tau * y;
        let mut norm = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                norm += a[i] * a[j] * g[i][j];
            }
        }
        let score = 0.5 * norm + cap * hinge(m_r + tau * y * g[t][t], y);
        if score < best.1 - 1e-12 {
            best = (r, score, tau);
        }
    }
    (best.0, best.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bpas_matches_gram_oracle(
        svs in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 2), -1.0f64..1.0), 1..6),
        xs in prop::collection::vec(-2.0f64..2.0, 2),
        pos in any::<bool>(),
        cap in 0.05f64..2.0,
    ) {
        let kernel = KernelSpec::Gaussian { sigma: 0.8 };
        let mut c = KernelClassifier::new(kernel);
        for (i, (p, coef)) in svs.iter().enumerate() {
            c.add_sv(Arc::new(SparseVector::from_dense(p)), i + 1, *coef, i as u64);
        }
        let x = inst(100, &xs, if pos { 1 } else { -1 });
        prop_assume!(hinge(c.margin(&x.features), x.y()) > 0.0);
        let (r, tau) = bpas_oracle(&c, &x, cap);
        let before: Vec<usize> = c.svs().iter().map(|s| s.id).collect();
        let budget = c.len();
        bpas_step(&mut c, &x, budget, cap, 9);
        let after: Vec<usize> = c.svs().iter().map(|s| s.id).collect();
        let removed: Vec<usize> = before.iter().copied().filter(|id| !after.contains(id)).collect();
        prop_assert_eq!(removed, vec![before[r]]);
        let new = c.svs().back().unwrap();
        prop_assert_eq!(new.id, 100);
        prop_assert!((new.coef - tau * x.y()).abs() < 1e-12);
    }
}
