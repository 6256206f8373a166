//! Kernel functions over sparse vectors and the default 16-kernel pool.

use serde::{Deserialize, Serialize};

use crate::dataset::SparseVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `(<x, y>)^degree`, no bias term.
    Polynomial { degree: u32 },
    /// `exp(-||x - y||^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree } if degree == 0 => Err(Error::param("polynomial degree must be positive")),
            KernelSpec::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::param(format!("gaussian sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from the inner product and both squared norms.
    ///
    /// The squared distance is `na + nb - 2 dot`, clamped at zero against
    /// cancellation.
    #[inline]
    pub fn from_parts(&self, dot: f64, na: f64, nb: f64) -> f64 {
        match *self {
            KernelSpec::Polynomial { degree } => dot.powi(degree as i32),
            KernelSpec::Gaussian { sigma } => {
                let d2 = (na + nb - 2.0 * dot).max(0.0);
                (d2 * (-0.5 / (sigma * sigma))).exp()
            }
        }
    }

    /// Kernel value divided by `sqrt(k(x,x) k(y,y))`; zero when either
    /// self-similarity vanishes.
    #[inline]
    pub fn normalized_from_parts(&self, dot: f64, na: f64, nb: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { .. } => self.from_parts(dot, na, nb),
            KernelSpec::Polynomial { .. } => {
                let denom = (self.self_from_norm(na) * self.self_from_norm(nb)).sqrt();
                if denom > 0.0 {
                    self.from_parts(dot, na, nb) / denom
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn self_from_norm(&self, sq_norm: f64) -> f64 {
        match *self {
            KernelSpec::Polynomial { degree } => sq_norm.powi(degree as i32),
            KernelSpec::Gaussian { .. } => 1.0,
        }
    }

    pub fn eval(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        self.from_parts(x.dot(y), x.sq_norm(), y.sq_norm())
    }

    /// `eval(x, x)`: exactly 1 for Gaussian kernels, `<x,x>^p` for polynomial.
    pub fn self_similarity(&self, x: &SparseVector) -> f64 {
        self.self_from_norm(x.sq_norm())
    }

    pub fn label(&self) -> String {
        match *self {
            KernelSpec::Polynomial { degree } => format!("poly{degree}"),
            KernelSpec::Gaussian { sigma } => format!("rbf{}", sigma.log2().round() as i64),
        }
    }
}

/// Parses `polyD`, `rbfE` (width `2^E`) or `gauss:S` (width `S`).
impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("unrecognized kernel `{s}`"));
        let spec = if let Some(d) = s.strip_prefix("poly") {
            KernelSpec::Polynomial { degree: d.parse().map_err(|_| bad())? }
        } else if let Some(e) = s.strip_prefix("rbf") {
            let e: i32 = e.parse().map_err(|_| bad())?;
            KernelSpec::Gaussian { sigma: 2f64.powi(e) }
        } else if let Some(w) = s.strip_prefix("gauss:") {
            KernelSpec::Gaussian { sigma: w.parse().map_err(|_| bad())? }
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Polynomial degrees 1..=3 followed by Gaussian widths 2^-6 ..= 2^6.
pub fn default_pool() -> Vec<KernelSpec> {
    let poly = (1..=3).map(|degree| KernelSpec::Polynomial { degree });
    let rbf = (-6..=6).map(|e| KernelSpec::Gaussian { sigma: 2f64.powi(e) });
    poly.chain(rbf).collect()
}

/// Gram matrix of `kernel` over `points`.
pub fn gram(kernel: &KernelSpec, points: &[SparseVector]) -> Vec<Vec<f64>> {
    points.iter().map(|a| points.iter().map(|b| kernel.eval(a, b)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> SparseVector {
        SparseVector::from_dense(xs)
    }

    #[test]
    fn direct_formulas() {
        let g = KernelSpec::Gaussian { sigma: 1.0 };
        let k = g.eval(&v(&[0.0]), &v(&[2.0]));
        assert!((k - (-2.0f64).exp()).abs() < 1e-15);
        assert!((k - 0.135335).abs() < 1e-6);

        let p2 = KernelSpec::Polynomial { degree: 2 };
        assert_eq!(p2.eval(&v(&[1.0, 1.0]), &v(&[1.0, 2.0])), 9.0);

        for s in [0.01, 1.0, 50.0] {
            let g = KernelSpec::Gaussian { sigma: s };
            let x = v(&[0.3, -1.7, 4.0]);
            assert_eq!(g.eval(&x, &x), 1.0);
        }
    }

    #[test]
    fn self_similarity_cases() {
        let x = v(&[2.0, 0.0]);
        assert_eq!(KernelSpec::Gaussian { sigma: 0.5 }.self_similarity(&x), 1.0);
        assert_eq!(KernelSpec::Polynomial { degree: 1 }.self_similarity(&x), 4.0);
        assert_eq!(KernelSpec::Polynomial { degree: 3 }.self_similarity(&SparseVector::zero()), 0.0);
    }

    #[test]
    fn pool_layout() {
        let pool = default_pool();
        assert_eq!(pool.len(), 16);
        assert_eq!(pool[0], KernelSpec::Polynomial { degree: 1 });
        assert_eq!(pool[3], KernelSpec::Gaussian { sigma: 0.015625 });
        assert_eq!(pool[15], KernelSpec::Gaussian { sigma: 64.0 });
        for k in &pool {
            k.validate().unwrap();
        }
    }

    #[test]
    fn labels_parse_back() {
        for k in default_pool() {
            assert_eq!(k.label().parse::<KernelSpec>().unwrap(), k);
        }
        assert_eq!("gauss:0.5".parse::<KernelSpec>().unwrap(), KernelSpec::Gaussian { sigma: 0.5 });
        for bad in ["poly0", "rbf", "gauss:-1", "linear"] {
            assert!(bad.parse::<KernelSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::Polynomial { degree: 0 }.validate().is_err());
        assert!(KernelSpec::Gaussian { sigma: 0.0 }.validate().is_err());
        assert!(KernelSpec::Gaussian { sigma: -1.0 }.validate().is_err());
    }

    #[test]
    fn normalized_polynomial_has_unit_diagonal() {
        let p = KernelSpec::Polynomial { degree: 3 };
        let x = v(&[3.0, -2.0]);
        let k = p.normalized_from_parts(x.sq_norm(), x.sq_norm(), x.sq_norm());
        assert!((k - 1.0).abs() < 1e-12);
        assert_eq!(p.normalized_from_parts(0.0, 0.0, 1.0), 0.0);
    }

    fn leading_minors(m: &[Vec<f64>]) -> Vec<f64> {
        // determinant of each leading block by Gaussian elimination
        (1..=m.len())
            .map(|k| {
                let mut a: Vec<Vec<f64>> = m[..k].iter().map(|r| r[..k].to_vec()).collect();
                let mut det = 1.0;
                for c in 0..k {
                    let piv = (c..k).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
                    if a[piv][c] == 0.0 {
                        return 0.0;
                    }
                    if piv != c {
                        a.swap(piv, c);
                        det = -det;
                    }
                    det *= a[c][c];
                    for r in c + 1..k {
                        let f = a[r][c] / a[c][c];
                        for cc in c..k {
                            a[r][cc] -= f * a[c][cc];
                        }
                    }
                }
                det
            })
            .collect()
    }

    fn arb_vec() -> impl Strategy<Value = SparseVector> {
        prop::collection::btree_map(1u32..12, -3.0f64..3.0, 0..6)
            .prop_map(|m| SparseVector::new(m.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn symmetric(x in arb_vec(), y in arb_vec(), p in 1u32..4, e in -6i32..7) {
            let poly = KernelSpec::Polynomial { degree: p };
            let rbf = KernelSpec::Gaussian { sigma: 2f64.powi(e) };
            prop_assert_eq!(poly.eval(&x, &y), poly.eval(&y, &x));
            prop_assert_eq!(rbf.eval(&x, &y), rbf.eval(&y, &x));
        }

        #[test]
        fn gaussian_range(x in arb_vec(), y in arb_vec(), e in 0i32..7) {
            let k = KernelSpec::Gaussian { sigma: 2f64.powi(e) }.eval(&x, &y);
            prop_assert!(k > 0.0 && k <= 1.0);
        }

        #[test]
        fn gaussian_gram_is_psd(pts in prop::collection::vec(arb_vec(), 1..6), e in -1i32..4) {
            let k = KernelSpec::Gaussian { sigma: 2f64.powi(e) };
            for m in leading_minors(&gram(&k, &pts)) {
                prop_assert!(m >= -1e-8, "minor {}", m);
            }
        }
    }
}
