//! Kernel-expansion classifiers `f(x) = sum_j c_j k(x_j, x)`, hinge loss and
//! the theta-weighted combination across kernels.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::SparseVector;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub coef: f64,
    pub point: Arc<SparseVector>,
    /// Identity of the source instance; keys the per-round dot cache.
    pub id: usize,
    pub arrival_round: u64,
}

/// Inner products between the current instance and stored points, memoized
/// by instance id so that every kernel in the pool shares one evaluation.
#[derive(Debug, Default)]
pub struct DotCache {
    dense: Vec<f64>,
    touched: Vec<u32>,
    stamps: Vec<u64>,
    values: Vec<f64>,
    stamp: u64,
    x_norm: f64,
}

impl DotCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scatters `x` and invalidates all memoized products.
    pub fn begin(&mut self, x: &SparseVector) {
        for &i in &self.touched {
            self.dense[i as usize] = 0.0;
        }
        self.touched.clear();
        let need = x.max_index() as usize + 1;
        if self.dense.len() < need {
            self.dense.resize(need, 0.0);
        }
        for &(i, v) in x.entries() {
            self.dense[i as usize] = v;
            self.touched.push(i);
        }
        self.stamp += 1;
        self.x_norm = x.sq_norm();
    }

    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    pub fn dot(&mut self, id: usize, point: &SparseVector) -> f64 {
        if id >= self.stamps.len() {
            let n = (id + 1).max(self.stamps.len() * 2);
            self.stamps.resize(n, 0);
            self.values.resize(n, 0.0);
        }
        if self.stamps[id] == self.stamp {
            return self.values[id];
        }
        let d = point.dot_dense(&self.dense);
        self.stamps[id] = self.stamp;
        self.values[id] = d;
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelClassifier {
    pub kernel: KernelSpec,
    /// Evaluate `k / sqrt(k(x,x) k(y,y))` instead of the raw kernel.
    pub normalized: bool,
    svs: VecDeque<SupportVector>,
}

impl KernelClassifier {
    pub fn new(kernel: KernelSpec) -> Self {
        KernelClassifier { kernel, normalized: false, svs: VecDeque::new() }
    }

    pub fn with_normalization(kernel: KernelSpec, normalized: bool) -> Self {
        KernelClassifier { kernel, normalized, svs: VecDeque::new() }
    }

    pub fn svs(&self) -> &VecDeque<SupportVector> {
        &self.svs
    }

    pub fn len(&self) -> usize {
        self.svs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.svs.is_empty()
    }

    #[inline]
    pub fn k_parts(&self, dot: f64, na: f64, nb: f64) -> f64 {
        if self.normalized {
            self.kernel.normalized_from_parts(dot, na, nb)
        } else {
            self.kernel.from_parts(dot, na, nb)
        }
    }

    pub fn k(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        self.k_parts(a.dot(b), a.sq_norm(), b.sq_norm())
    }

    /// `k(x, x)` under this classifier's kernel.
    pub fn self_similarity(&self, x: &SparseVector) -> f64 {
        if self.normalized {
            if self.kernel.self_similarity(x) > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.kernel.self_similarity(x)
        }
    }

    /// `f(x)`; zero for an empty expansion.
    pub fn margin(&self, x: &SparseVector) -> f64 {
        self.svs.iter().map(|sv| sv.coef * self.k(&sv.point, x)).sum()
    }

    /// Calls `f(sv, k(x_sv, x))` for every stored point, `x` being the
    /// instance loaded into `cache`.
    #[inline]
    fn for_each_k(&self, cache: &mut DotCache, mut f: impl FnMut(&SupportVector, f64)) {
        let nx = cache.x_norm();
        match self.kernel {
            // normalization leaves Gaussian values unchanged
            KernelSpec::Gaussian { sigma } => {
                let scale = -0.5 / (sigma * sigma);
                for sv in &self.svs {
                    let d2 = (sv.point.sq_norm() + nx - 2.0 * cache.dot(sv.id, &sv.point)).max(0.0);
                    let arg = d2 * scale;
                    // exp underflows to exactly zero below this
                    f(sv, if arg > -746.0 { arg.exp() } else { 0.0 });
                }
            }
            KernelSpec::Polynomial { .. } => {
                for sv in &self.svs {
                    let dot = cache.dot(sv.id, &sv.point);
                    f(sv, self.k_parts(dot, sv.point.sq_norm(), nx));
                }
            }
        }
    }

    /// `f(x)` for the instance loaded into `cache`.
    pub fn margin_cached(&self, cache: &mut DotCache) -> f64 {
        let mut acc = 0.0;
        self.for_each_k(cache, |sv, k| {
            if k != 0.0 {
                acc += sv.coef * k;
            }
        });
        acc
    }

    /// Kernel row `k(x_j, x)` over stored points, in storage order.
    pub fn kernel_row(&self, cache: &mut DotCache) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.svs.len());
        self.for_each_k(cache, |_, k| row.push(k));
        row
    }

    /// Appends `coef * k(x, .)`. Callers skip zero coefficients.
    pub fn add_sv(&mut self, point: Arc<SparseVector>, id: usize, coef: f64, round: u64) {
        debug_assert!(coef.is_finite(), "non-finite coefficient {coef}");
        if let Some(last) = self.svs.back() {
            debug_assert!(last.arrival_round <= round);
        }
        self.svs.push_back(SupportVector { coef, point, id, arrival_round: round });
    }

    pub fn remove_sv(&mut self, index: usize) -> SupportVector {
        self.svs.remove(index).expect("support vector index in range")
    }

    pub fn remove_oldest(&mut self) -> Option<SupportVector> {
        self.svs.pop_front()
    }

    pub fn scale_coefs(&mut self, factor: f64) {
        for sv in &mut self.svs {
            sv.coef *= factor;
        }
    }

    /// `||f||^2_H = c^T K c`, by explicit double sum.
    pub fn sq_rkhs_norm(&self) -> f64 {
        let mut acc = 0.0;
        for a in &self.svs {
            for b in &self.svs {
                acc += a.coef * b.coef * self.k(&a.point, &b.point);
            }
        }
        acc
    }

    pub fn snapshot(&self) -> ClassifierSnapshot {
        ClassifierSnapshot {
            version: SNAPSHOT_VERSION,
            kernel: self.kernel,
            normalized: self.normalized,
            svs: self
                .svs
                .iter()
                .map(|sv| SvRecord {
                    coef: sv.coef,
                    id: sv.id,
                    arrival_round: sv.arrival_round,
                    entries: sv.point.entries().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(s: ClassifierSnapshot) -> Result<Self> {
        if s.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported snapshot version {}", s.version)));
        }
        s.kernel.validate()?;
        let mut c = KernelClassifier::with_normalization(s.kernel, s.normalized);
        for r in s.svs {
            let point = SparseVector::new(r.entries).map_err(|e| Error::Snapshot(e.to_string()))?;
            c.add_sv(Arc::new(point), r.id, r.coef, r.arrival_round);
        }
        Ok(c)
    }
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// JSON snapshot of one kernel expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSnapshot {
    pub version: u32,
    pub kernel: KernelSpec,
    pub normalized: bool,
    pub svs: Vec<SvRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvRecord {
    pub coef: f64,
    pub id: usize,
    pub arrival_round: u64,
    pub entries: Vec<(u32, f64)>,
}

/// `max(0, 1 - y * margin)`.
#[inline]
pub fn hinge(margin: f64, y: f64) -> f64 {
    (1.0 - y * margin).max(0.0)
}

/// Sign with the tie broken towards `+1`.
#[inline]
pub fn predict_label(margin: f64) -> i8 {
    if margin >= 0.0 {
        1
    } else {
        -1
    }
}

/// Per-kernel classifiers combined with simplex weights `theta`.
#[derive(Debug, Clone)]
pub struct CombinedClassifier {
    pub components: Vec<KernelClassifier>,
    pub theta: Vec<f64>,
}

impl CombinedClassifier {
    pub fn new(components: Vec<KernelClassifier>, theta: Vec<f64>) -> Result<Self> {
        if components.len() != theta.len() {
            return Err(Error::param("one theta weight per component is required"));
        }
        let sum: f64 = theta.iter().sum();
        if theta.iter().any(|&t| !(t >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("theta must lie on the simplex (sum {sum})")));
        }
        Ok(CombinedClassifier { components, theta })
    }

    pub fn combined_margin(&self, x: &SparseVector) -> f64 {
        combine(&self.theta, self.components.iter().map(|c| c.margin(x)))
    }

    pub fn predict(&self, x: &SparseVector) -> i8 {
        predict_label(self.combined_margin(x))
    }
}

/// `sum_i theta_i * margin_i`.
pub fn combine(theta: &[f64], margins: impl IntoIterator<Item = f64>) -> f64 {
    theta.iter().zip(margins).map(|(t, m)| t * m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(xs: &[f64]) -> Arc<SparseVector> {
        Arc::new(SparseVector::from_dense(xs))
    }

    fn rbf() -> KernelSpec {
        KernelSpec::Gaussian { sigma: 1.0 }
    }

    #[test]
    fn empty_margin_is_zero() {
        let c = KernelClassifier::new(rbf());
        assert_eq!(c.margin(&SparseVector::from_dense(&[1.0, 2.0])), 0.0);
    }

    #[test]
    fn single_sv_at_probe() {
        let mut c = KernelClassifier::new(rbf());
        let x = pt(&[0.5, -1.0]);
        c.add_sv(x.clone(), 0, 0.3, 1);
        assert_eq!(c.margin(&x), 0.3);
    }

    #[test]
    fn two_svs_match_scalar_oracle() {
        let mut c = KernelClassifier::new(rbf());
        c.add_sv(pt(&[0.0, 0.0]), 0, 0.7, 1);
        c.add_sv(pt(&[1.0, 2.0]), 1, -0.4, 2);
        let probe = SparseVector::from_dense(&[0.5, 0.5]);
        // independent scalar route: explicit squared distances
        let d1: f64 = 0.5 * 0.5 + 0.5 * 0.5;
        let d2: f64 = 0.5 * 0.5 + 1.5 * 1.5;
        let expect = 0.7 * (-d1 / 2.0).exp() - 0.4 * (-d2 / 2.0).exp();
        assert!((c.margin(&probe) - expect).abs() < 1e-14);
        let mut cache = DotCache::new();
        cache.begin(&probe);
        assert!((c.margin_cached(&mut cache) - expect).abs() < 1e-14);
    }

    #[test]
    fn hinge_values() {
        assert_eq!(hinge(1.0, 1.0), 0.0);
        assert_eq!(hinge(0.0, 1.0), 1.0);
        assert_eq!(hinge(-0.5, 1.0), 1.5);
        assert_eq!(hinge(-2.0, -1.0), 0.0);
    }

    #[test]
    fn combined_margin_cases() {
        let x = SparseVector::from_dense(&[1.0]);
        let empty =
            CombinedClassifier::new(vec![KernelClassifier::new(rbf()), KernelClassifier::new(rbf())], vec![0.5, 0.5])
                .unwrap();
        assert_eq!(empty.combined_margin(&x), 0.0);
        assert_eq!(empty.predict(&x), 1);

        assert_eq!(combine(&[1.0, 0.0, 0.0], [2.0, 5.0, -7.0]), 2.0);
        assert_eq!(combine(&[0.5, 0.5], [1.0, -3.0]), -1.0);
        assert!(CombinedClassifier::new(vec![KernelClassifier::new(rbf())], vec![0.9]).is_err());
    }

    #[test]
    fn add_sv_behaviour() {
        let mut c = KernelClassifier::new(rbf());
        let x = pt(&[2.0, 1.0]);
        let before = c.margin(&x);
        c.add_sv(x.clone(), 3, 0.25, 1);
        assert_eq!(c.margin(&x), before + 0.25);
        for k in 0..4 {
            c.add_sv(pt(&[k as f64]), 10 + k, 1.0, 2);
        }
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut c = KernelClassifier::new(KernelSpec::Polynomial { degree: 2 });
        c.add_sv(pt(&[1.0, 0.0, 3.0]), 4, 0.125, 7);
        let json = serde_json::to_string(&c.snapshot()).unwrap();
        let back = KernelClassifier::from_snapshot(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, c);
        let mut bad = c.snapshot();
        bad.version = 99;
        assert!(KernelClassifier::from_snapshot(bad).is_err());
    }

    fn arb_point() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 3)
    }

    proptest! {
        #[test]
        fn margin_linear_in_coefs(
            pts in prop::collection::vec((arb_point(), -2.0f64..2.0), 1..6),
            probe in arb_point(),
        ) {
            let mut c = KernelClassifier::new(rbf());
            for (i, (p, coef)) in pts.iter().enumerate() {
                c.add_sv(pt(p), i, *coef, i as u64);
            }
            let x = SparseVector::from_dense(&probe);
            let m = c.margin(&x);
            c.scale_coefs(2.0);
            prop_assert_eq!(c.margin(&x), 2.0 * m);
        }

        #[test]
        fn hinge_is_one_lipschitz(a in -10.0f64..10.0, b in -10.0f64..10.0, pos in any::<bool>()) {
            let y = if pos { 1.0 } else { -1.0 };
            prop_assert!((hinge(a, y) - hinge(b, y)).abs() <= (a - b).abs() + 4.0 * f64::EPSILON * (1.0 + a.abs() + b.abs()));
        }

        #[test]
        fn one_hot_theta_selects_component(i in 0usize..3, probe in arb_point()) {
            let comps: Vec<KernelClassifier> = (0..3)
                .map(|k| {
                    let mut c = KernelClassifier::new(KernelSpec::Gaussian { sigma: 0.5 + k as f64 });
                    c.add_sv(pt(&[k as f64, 1.0, -1.0]), k, 0.3 * (k as f64 + 1.0), 1);
                    c
                })
                .collect();
            let mut theta = vec![0.0; 3];
            theta[i] = 1.0;
            let cc = CombinedClassifier::new(comps.clone(), theta).unwrap();
            let x = SparseVector::from_dense(&probe);
            prop_assert_eq!(cc.combined_margin(&x), comps[i].margin(&x));
        }
    }
}
