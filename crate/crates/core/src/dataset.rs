//! Sparse instances, LIBSVM text parsing and seeded instance streams.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use flate2::read::MultiGzDecoder;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::prng::RngStream;

/// Sparse feature vector with 1-based, strictly increasing indices and no
/// stored zeros. The squared norm is cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
    sq_norm: f64,
}

impl SparseVector {
    /// Builds a vector from `(index, value)` pairs, dropping zeros.
    /// Indices must be positive and strictly increasing.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut prev = 0u32;
        for &(idx, val) in &entries {
            if idx == 0 || idx <= prev {
                return Err(Error::param(format!(
                    "feature index {idx} is not positive and strictly increasing (previous {prev})"
                )));
            }
            if !val.is_finite() {
                return Err(Error::param(format!("feature {idx} has non-finite value {val}")));
            }
            prev = idx;
        }
        let entries: Vec<(u32, f64)> = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        let sq_norm = entries.iter().map(|&(_, v)| v * v).sum();
        Ok(SparseVector { entries, sq_norm })
    }

    /// Dense constructor: position `i` becomes index `i + 1`.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values.iter().enumerate().map(|(i, &v)| (i as u32 + 1, v)).collect();
        // indices are increasing by construction
        Self::new(entries).expect("dense values must be finite")
    }

    pub fn zero() -> Self {
        SparseVector { entries: Vec::new(), sq_norm: 0.0 }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    /// Largest stored index, 0 for the zero vector.
    pub fn max_index(&self) -> u32 {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    /// Value at a 1-based index.
    pub fn get(&self, idx: u32) -> f64 {
        self.entries.binary_search_by_key(&idx, |&(i, _)| i).map_or(0.0, |pos| self.entries[pos].1)
    }

    /// Merge-based sparse dot product.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Dot product against a dense scatter of another vector
    /// (`dense[idx]` holds the value at 1-based index `idx`).
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense.get(i as usize).map_or(0.0, |d| v * d)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Position in the source dataset; used as the support-vector identity.
    pub id: usize,
    pub features: Arc<SparseVector>,
    label: i8,
}

impl Instance {
    pub fn new(id: usize, features: SparseVector, label: i8) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::param(format!("label must be -1 or +1, got {label}")));
        }
        Ok(Instance { id, features: Arc::new(features), label })
    }

    pub fn label(&self) -> i8 {
        self.label
    }

    /// Label as a real number, `-1.0` or `+1.0`.
    pub fn y(&self) -> f64 {
        f64::from(self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub dim: u32,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Self {
        let dim = instances.iter().map(|i| i.features.max_index()).max().unwrap_or(0);
        Dataset { name: name.into(), dim, instances }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Serializes back to LIBSVM text with labels written as `+1` / `-1`.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            out.push_str(if inst.label > 0 { "+1" } else { "-1" });
            for &(i, v) in inst.features.entries() {
                // `{:?}` prints the shortest string that round-trips exactly
                let _ = write!(out, " {i}:{v:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Seeded subsample keeping `round(fraction * T)` instances in source order.
    pub fn subsample(&self, fraction: f64, rng: &mut RngStream) -> Result<Dataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::param(format!("subsample fraction {fraction} outside (0,1]")));
        }
        let keep = ((self.len() as f64) * fraction).round() as usize;
        Ok(self.subsample_count(keep, rng))
    }

    /// Seeded subsample of `min(keep, T)` instances in source order, renumbered from 0.
    pub fn subsample_count(&self, keep: usize, rng: &mut RngStream) -> Dataset {
        let mut picked = rng.permutation(self.len());
        picked.truncate(keep);
        picked.sort_unstable();
        let instances = picked
            .into_iter()
            .enumerate()
            .map(|(new_id, old)| Instance { id: new_id, ..self.instances[old].clone() })
            .collect();
        Dataset::new(self.name.clone(), instances)
    }

    /// Per-feature min-max scaling to `[0, 1]` (off unless requested).
    /// Features that are constant map to zero.
    pub fn scale_min_max(&self) -> Dataset {
        let d = self.dim as usize + 1;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut seen = vec![0usize; d];
        for inst in &self.instances {
            for &(i, v) in inst.features.entries() {
                let i = i as usize;
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
                seen[i] += 1;
            }
        }
        // an implicit zero in some row takes part in the range
        let n = self.instances.len();
        for i in 0..d {
            if seen[i] < n {
                lo[i] = lo[i].min(0.0);
                hi[i] = hi[i].max(0.0);
            }
        }
        let scale = |i: usize, v: f64| {
            let span = hi[i] - lo[i];
            if span > 0.0 {
                (v - lo[i]) / span
            } else {
                0.0
            }
        };
        // features whose implicit zeros no longer map to zero
        let fill: Vec<u32> = (0..d).filter(|&i| seen[i] > 0 && seen[i] < n && lo[i] < 0.0).map(|i| i as u32).collect();
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let mut entries: Vec<(u32, f64)> =
                    inst.features.entries().iter().map(|&(i, v)| (i, scale(i as usize, v))).collect();
                let present = entries.len();
                for &i in &fill {
                    if entries[..present].binary_search_by_key(&i, |e| e.0).is_err() {
                        entries.push((i, scale(i as usize, 0.0)));
                    }
                }
                entries.sort_unstable_by_key(|e| e.0);
                Instance {
                    id: inst.id,
                    features: Arc::new(SparseVector::new(entries).expect("indices unchanged")),
                    label: inst.label,
                }
            })
            .collect();
        Dataset { name: self.name.clone(), dim: self.dim, instances }
    }
}

/// Two-class label mapping: the larger raw value becomes `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMap {
    pub negative: f64,
    pub positive: f64,
}

impl LabelMap {
    pub fn map(&self, raw: f64) -> Option<i8> {
        if raw == self.positive {
            Some(1)
        } else if raw == self.negative {
            Some(-1)
        } else {
            None
        }
    }
}

/// Maps two distinct raw labels onto `{-1, +1}`, larger value to `+1`.
///
/// Files whose labels are already a subset of `{-1, +1}` (a single-class
/// chunk, say) keep the identity mapping.
pub fn normalize_labels(raw: &[f64]) -> Result<LabelMap> {
    let mut distinct: Vec<f64> = Vec::new();
    for &r in raw {
        if !distinct.contains(&r) {
            distinct.push(r);
            if distinct.len() > 2 {
                break;
            }
        }
    }
    if distinct.iter().all(|&r| r == 1.0 || r == -1.0) {
        return Ok(LabelMap { negative: -1.0, positive: 1.0 });
    }
    if distinct.len() != 2 {
        return Err(Error::UnsupportedTask(format!(
            "binary classification needs exactly two distinct labels, found {}{}",
            if distinct.len() > 2 { "more than " } else { "" },
            distinct.len().min(2)
        )));
    }
    let (a, b) = (distinct[0], distinct[1]);
    Ok(LabelMap { negative: a.min(b), positive: a.max(b) })
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<(f64, SparseVector)>> {
    let body = line.split('#').next().unwrap_or("");
    let mut tokens = body.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let err = |message: String| Error::Parse { line: lineno, message };
    let label: f64 = label_tok.parse().map_err(|_| err(format!("label `{label_tok}` is not a number")))?;
    if !label.is_finite() {
        return Err(err(format!("label `{label_tok}` is not finite")));
    }
    let mut entries = Vec::new();
    let mut prev = 0u32;
    for tok in tokens {
        let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("token `{tok}` is not index:value")))?;
        let idx: u32 = idx.parse().map_err(|_| err(format!("feature index `{idx}` is not a positive integer")))?;
        let val: f64 = val.parse().map_err(|_| err(format!("feature value `{val}` is not a number")))?;
        if idx == 0 {
            return Err(err("feature indices are 1-based".into()));
        }
        if idx <= prev {
            return Err(err(format!("feature index {idx} does not follow {prev}")));
        }
        if !val.is_finite() {
            return Err(err(format!("feature {idx} has non-finite value")));
        }
        prev = idx;
        entries.push((idx, val));
    }
    let v = SparseVector::new(entries).map_err(|e| err(e.to_string()))?;
    Ok(Some((label, v)))
}

/// Parses LIBSVM text: one `<label> <idx>:<val> ...` record per nonempty line.
pub fn parse_libsvm<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
    let mut raw = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io { path: name.into(), source })?;
        if let Some(rec) = parse_line(&line, i + 1)? {
            raw.push(rec);
        }
    }
    let labels: Vec<f64> = raw.iter().map(|(l, _)| *l).collect();
    let map = normalize_labels(&labels)?;
    let instances = raw
        .into_iter()
        .enumerate()
        .map(|(id, (l, v))| Instance {
            id,
            features: Arc::new(v),
            label: map.map(l).expect("label map covers every raw label"),
        })
        .collect();
    Ok(Dataset::new(name, instances))
}

pub fn parse_libsvm_str(text: &str, name: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), name)
}

/// Loads a LIBSVM file; a `.gz` extension selects gzip decompression.
/// The dataset is named after the file stem.
pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let reader: Box<dyn Read> = if gz { Box::new(MultiGzDecoder::new(file)) } else { Box::new(file) };
    let stem = path.file_name().and_then(|s| s.to_str()).unwrap_or("dataset");
    let name = stem.strip_suffix(".gz").unwrap_or(stem);
    let mut ds = parse_libsvm(BufReader::new(reader), name)?;
    ds.name = name.to_string();
    Ok(ds)
}

/// Iterates the dataset in the given order without copying features.
pub fn permuted_view<'a>(
    d: &'a Dataset,
    order: &'a [usize],
) -> Result<impl ExactSizeIterator<Item = &'a Instance> + 'a> {
    if order.len() != d.len() {
        return Err(Error::param(format!("ordering has length {} but dataset has {} instances", order.len(), d.len())));
    }
    let mut seen = vec![false; d.len()];
    for &i in order {
        if i >= d.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::param(format!("ordering is not a permutation (index {i})")));
        }
    }
    Ok(order.iter().map(move |&i| &d.instances[i]))
}

/// Two unit-variance Gaussian blobs centred at `±(separation/2)·e_1`,
/// emitted alternately `+1, -1, +1, ...`.
pub fn synth_two_blobs(n_per_class: usize, separation: f64, dim: usize, rng: &mut RngStream) -> Result<Dataset> {
    if n_per_class == 0 || dim == 0 || !(separation >= 0.0) {
        return Err(Error::param("synth_two_blobs needs n_per_class >= 1, dim >= 1, separation >= 0"));
    }
    let mut instances = Vec::with_capacity(2 * n_per_class);
    for k in 0..2 * n_per_class {
        let label: i8 = if k % 2 == 0 { 1 } else { -1 };
        let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng.inner())).collect();
        x[0] += f64::from(label) * separation / 2.0;
        instances.push(Instance::new(k, SparseVector::from_dense(&x), label)?);
    }
    Ok(Dataset::new(format!("blobs-sep{separation}-d{dim}"), instances))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_basic_line() {
        let d = parse_libsvm_str("+1 1:0.5 3:-2", "t").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.dim, 3);
        assert_eq!(d.instances[0].label(), 1);
        assert_eq!(d.instances[0].features.entries(), &[(1, 0.5), (3, -2.0)]);
    }

    #[test]
    fn zero_one_labels_map_to_signs() {
        let d = parse_libsvm_str("0 2:1\n1 1:1\n", "t").unwrap();
        assert_eq!(d.instances[0].label(), -1);
        assert_eq!(d.instances[1].label(), 1);
    }

    #[test]
    fn bad_value_names_line() {
        match parse_libsvm_str("1 3:a", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_libsvm_str("1 1:1\n\n-1 3:1 2:1", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_dataset() {
        let d = parse_libsvm_str("", "t").unwrap();
        assert!(d.is_empty());
        assert_eq!(d.dim, 0);
    }

    #[test]
    fn zero_values_are_dropped_and_comments_ignored() {
        let d = parse_libsvm_str("-1 1:0 2:3 # note\n", "t").unwrap();
        assert_eq!(d.instances[0].features.entries(), &[(2, 3.0)]);
    }

    #[test]
    fn label_rules() {
        let id = normalize_labels(&[-1.0, 1.0, 1.0]).unwrap();
        assert_eq!((id.map(-1.0), id.map(1.0)), (Some(-1), Some(1)));
        let zo = normalize_labels(&[1.0, 0.0]).unwrap();
        assert_eq!((zo.map(0.0), zo.map(1.0)), (Some(-1), Some(1)));
        let two = normalize_labels(&[2.0, 4.0]).unwrap();
        assert_eq!((two.map(2.0), two.map(4.0)), (Some(-1), Some(1)));
        assert!(matches!(normalize_labels(&[1.0, 2.0, 3.0]), Err(Error::UnsupportedTask(_))));
        assert!(matches!(normalize_labels(&[3.0]), Err(Error::UnsupportedTask(_))));
    }

    #[test]
    fn permuted_view_orders() {
        let d = parse_libsvm_str("1 1:1\n-1 1:2\n1 1:3\n", "t").unwrap();
        let ids: Vec<usize> = permuted_view(&d, &[0, 1, 2]).unwrap().map(|i| i.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        let ids: Vec<usize> = permuted_view(&d, &[2, 1, 0]).unwrap().map(|i| i.id).collect();
        assert_eq!(ids, vec![2, 1, 0]);
        assert!(permuted_view(&d, &[0, 1]).is_err());
        assert!(permuted_view(&d, &[0, 0, 1]).is_err());
    }

    #[test]
    fn permuted_view_preserves_label_multiset() {
        let mut rng = RngStream::new(4, 0);
        let d = synth_two_blobs(50, 1.0, 3, &mut rng).unwrap();
        let order = rng.permutation(d.len());
        let mut a: Vec<i8> = permuted_view(&d, &order).unwrap().map(|i| i.label()).collect();
        let mut b: Vec<i8> = d.instances.iter().map(|i| i.label()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn blobs_minimum_size() {
        let d = synth_two_blobs(1, 2.0, 4, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim, 4);
    }

    #[test]
    fn subsample_and_scale() {
        let mut rng = RngStream::new(1, 0);
        let d = synth_two_blobs(50, 3.0, 2, &mut rng).unwrap();
        let s = d.subsample(0.2, &mut rng).unwrap();
        assert_eq!(s.len(), 20);
        let scaled = d.scale_min_max();
        for inst in &scaled.instances {
            for &(_, v) in inst.features.entries() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn scale_uses_true_range_of_dense_features() {
        let d = parse_libsvm_str("+1 1:19 2:3\n-1 1:75\n+1 1:47 2:-1\n", "t").unwrap();
        let s = d.scale_min_max();
        let col = |k: u32| s.instances.iter().map(|x| x.features.get(k)).collect::<Vec<_>>();
        assert_eq!(col(1), vec![0.0, 1.0, 0.5]);
        // feature 2 is missing from one row, so zero joins its range
        assert_eq!(col(2), vec![1.0, 0.25, 0.0]);
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let a = SparseVector::new(vec![(1, 2.0), (4, -1.0), (7, 0.5)]).unwrap();
        let b = SparseVector::new(vec![(2, 3.0), (4, 2.0), (7, 4.0)]).unwrap();
        assert_eq!(a.dot(&b), -2.0 + 2.0);
        let mut dense = vec![0.0; 8];
        for &(i, v) in b.entries() {
            dense[i as usize] = v;
        }
        assert_eq!(a.dot_dense(&dense), a.dot(&b));
        assert_eq!(a.sq_norm(), 4.0 + 1.0 + 0.25);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let row = (any::<bool>(), prop::collection::btree_map(1u32..40, -1e6f64..1e6, 0..8));
        prop::collection::vec(row, 0..20).prop_map(|rows| {
            let instances = rows
                .into_iter()
                .enumerate()
                .map(|(id, (pos, m))| {
                    let v = SparseVector::new(m.into_iter().collect()).unwrap();
                    Instance::new(id, v, if pos { 1 } else { -1 }).unwrap()
                })
                .collect();
            Dataset::new("p", instances)
        })
    }

    proptest! {
        #[test]
        fn libsvm_text_round_trips(d in arb_dataset()) {
            let back = parse_libsvm_str(&d.to_libsvm(), "p").unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
