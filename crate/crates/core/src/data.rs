//! Tabular datasets, sensitive-group partitions, seeded splits and a
//! synthetic biased-data generator.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

/// A categorical column kept alongside the feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveColumn {
    pub name: String,
    pub values: Vec<String>,
}

/// Binary classification data: a dense row-major feature matrix, 0/1 labels
/// and one or more categorical sensitive columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    width: usize,
    labels: Vec<u8>,
    sensitive: Vec<SensitiveColumn>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        sensitive: Vec<SensitiveColumn>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::data(format!("dataset needs at least 2 rows, got {n}")));
        }
        if features.len() != n {
            return Err(Error::data("feature row count differs from label count"));
        }
        let width = features[0].len();
        if width == 0 {
            return Err(Error::data("dataset has no feature columns"));
        }
        if features.iter().any(|r| r.len() != width) {
            return Err(Error::data("ragged feature rows"));
        }
        if column_names.len() != width {
            return Err(Error::data("column name count differs from feature width"));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::data("labels must be 0 or 1"));
        }
        if sensitive.is_empty() {
            return Err(Error::data("at least one sensitive column is required"));
        }
        if sensitive.iter().any(|c| c.values.len() != n) {
            return Err(Error::data("sensitive column length differs from row count"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite feature value"));
        }
        Ok(Self {
            features: features.into_iter().flatten().collect(),
            width,
            labels,
            sensitive,
            column_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.width)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sensitive(&self) -> &[SensitiveColumn] {
        &self.sensitive
    }

    pub fn sensitive_column(&self, name: &str) -> Option<&SensitiveColumn> {
        self.sensitive.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Rows in the order given by `indices`.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            width: self.width,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sensitive: self
                .sensitive
                .iter()
                .map(|c| SensitiveColumn {
                    name: c.name.clone(),
                    values: indices.iter().map(|&i| c.values[i].clone()).collect(),
                })
                .collect(),
            column_names: self.column_names.clone(),
        }
    }

    /// Appends one indicator column per observed value of every sensitive
    /// column, named `attr=value`.
    pub fn append_sensitive_one_hot(&mut self) {
        let mut extra_names = Vec::new();
        let mut extra_cols: Vec<Vec<f64>> = Vec::new();
        for col in &self.sensitive {
            let levels: BTreeSet<&str> = col.values.iter().map(String::as_str).collect();
            for level in levels {
                extra_names.push(format!("{}={}", col.name, level));
                extra_cols.push(
                    col.values
                        .iter()
                        .map(|v| if v == level { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
        if extra_cols.is_empty() {
            return;
        }
        let new_width = self.width + extra_cols.len();
        let mut features = Vec::with_capacity(self.len() * new_width);
        for i in 0..self.len() {
            features.extend_from_slice(self.row(i));
            features.extend(extra_cols.iter().map(|c| c[i]));
        }
        self.features = features;
        self.width = new_width;
        self.column_names.extend(extra_names);
    }

    fn is_sensitive_indicator(&self, name: &str) -> bool {
        self.sensitive
            .iter()
            .any(|c| name.strip_prefix(c.name.as_str()).is_some_and(|r| r.starts_with('=')))
    }

    /// Writes the dataset as CSV: non-sensitive feature columns, the label
    /// column, then the raw sensitive columns. Sensitive indicator columns
    /// are omitted because loading recreates them.
    pub fn write_csv<W: Write>(&self, writer: W, label_col: &str) -> Result<()> {
        let keep: Vec<usize> = (0..self.width)
            .filter(|&j| !self.is_sensitive_indicator(&self.column_names[j]))
            .collect();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = keep.iter().map(|&j| self.column_names[j].as_str()).collect();
        header.push(label_col);
        header.extend(self.sensitive.iter().map(|c| c.name.as_str()));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let row = self.row(i);
            let mut rec: Vec<String> = keep.iter().map(|&j| format!("{:?}", row[j])).collect();
            rec.push(self.labels[i].to_string());
            rec.extend(self.sensitive.iter().map(|c| c.values[i].clone()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>, label_col: &str) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), label_col)
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub label_col: String,
    pub sensitive_cols: Vec<String>,
    /// Thresholds for continuous sensitive columns, ascending.
    pub buckets: BTreeMap<String, Vec<f64>>,
    /// Keep sensitive attributes out of the feature matrix.
    pub drop_sensitive: bool,
}

impl LoadOptions {
    pub fn new(label_col: &str, sensitive_cols: &[&str]) -> Self {
        Self {
            label_col: label_col.to_string(),
            sensitive_cols: sensitive_cols.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }
}

fn is_missing(v: &str) -> bool {
    matches!(v.trim(), "" | "?" | "NA" | "na" | "N/A" | "nan" | "NaN" | "null")
}

/// Label of the bucket `value` falls into for ascending `thresholds`.
pub fn bucket_label(value: f64, thresholds: &[f64]) -> String {
    match thresholds.iter().position(|&t| value < t) {
        Some(0) => format!("<{}", thresholds[0]),
        Some(k) => format!("{}..{}", thresholds[k - 1], thresholds[k]),
        None => format!(">={}", thresholds[thresholds.len() - 1]),
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::config(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    load_csv_reader(file, opts)
}

/// Parses a header-first CSV. Numeric columns become features, other
/// non-sensitive columns are one-hot encoded, sensitive columns are kept
/// categorically (and, unless dropped, one-hot encoded at the end).
pub fn load_csv_reader<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("missing column `{name}`")))
    };
    let label_idx = find(&opts.label_col)?;
    if opts.sensitive_cols.is_empty() {
        return Err(Error::config("at least one sensitive column must be named"));
    }
    let sens_idx = opts
        .sensitive_cols
        .iter()
        .map(|s| find(s))
        .collect::<Result<Vec<_>>>()?;
    for name in opts.buckets.keys() {
        if !opts.sensitive_cols.contains(name) {
            return Err(Error::config(format!("bucket thresholds for non-sensitive column `{name}`")));
        }
    }

    let mut records: Vec<Vec<String>> = Vec::new();
    let mut rejected = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::data(format!("row {}: {e}", line + 2)))?;
        if rec.len() != header.len() {
            return Err(Error::data(format!("row {} is ragged", line + 2)));
        }
        let rec: Vec<String> = rec.iter().map(|v| v.trim().to_string()).collect();
        if is_missing(&rec[label_idx]) || sens_idx.iter().any(|&j| is_missing(&rec[j])) {
            rejected += 1;
            continue;
        }
        records.push(rec);
    }
    if rejected > 0 {
        warn!("rejected {rejected} rows with missing label or sensitive value");
    }

    let labels = records
        .iter()
        .enumerate()
        .map(|(i, r)| match r[label_idx].parse::<f64>() {
            Ok(v) if v == 0.0 => Ok(0u8),
            Ok(v) if v == 1.0 => Ok(1u8),
            _ => Err(Error::data(format!(
                "row {}: label `{}` is not 0 or 1",
                i + 2,
                r[label_idx]
            ))),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sensitive = Vec::new();
    for (name, &j) in opts.sensitive_cols.iter().zip(&sens_idx) {
        let values = match opts.buckets.get(name) {
            Some(th) => records
                .iter()
                .map(|r| {
                    r[j].parse::<f64>().map(|v| bucket_label(v, th)).map_err(|_| {
                        Error::data(format!("sensitive `{name}` value `{}` is not numeric", r[j]))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => records.iter().map(|r| r[j].clone()).collect(),
        };
        sensitive.push(SensitiveColumn { name: name.clone(), values });
    }

    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == label_idx || sens_idx.contains(&j) {
            continue;
        }
        let raw: Vec<&str> = records.iter().map(|r| r[j].as_str()).collect();
        let parsed: Vec<Option<f64>> = raw
            .iter()
            .map(|v| if is_missing(v) { None } else { v.parse::<f64>().ok() })
            .collect();
        let numeric = raw
            .iter()
            .zip(&parsed)
            .all(|(v, p)| is_missing(v) || p.is_some_and(f64::is_finite));
        if numeric {
            let present: Vec<f64> = parsed.iter().flatten().copied().collect();
            let mean = if present.is_empty() {
                0.0
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            };
            names.push(name.clone());
            cols.push(parsed.iter().map(|p| p.unwrap_or(mean)).collect());
        } else {
            let levels: BTreeSet<&str> = raw.iter().copied().filter(|v| !is_missing(v)).collect();
            for level in levels {
                names.push(format!("{name}={level}"));
                cols.push(raw.iter().map(|v| if *v == level { 1.0 } else { 0.0 }).collect());
            }
        }
    }
    let n = records.len();
    if n < 2 {
        return Err(Error::data(format!("dataset needs at least 2 usable rows, got {n}")));
    }
    let mut ds = if cols.is_empty() {
        // Only sensitive columns carry information; they must then be features.
        if opts.drop_sensitive {
            return Err(Error::data("no feature columns left after dropping sensitive attributes"));
        }
        Dataset {
            features: Vec::new(),
            width: 0,
            labels,
            sensitive,
            column_names: Vec::new(),
        }
    } else {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Dataset::new(rows, labels, sensitive, names)?
    };
    if !opts.drop_sensitive {
        ds.append_sensitive_one_hot();
    }
    Ok(ds)
}

/// Joint sensitive-attribute groups plus the binary privileged split.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    group_sizes: Vec<usize>,
    group_keys: Vec<Vec<String>>,
    privileged: Vec<bool>,
    /// Cross-product cells with no members, reported and excluded.
    pub dropped: Vec<Vec<String>>,
}

impl GroupPartition {
    /// Builds a partition directly from per-sample group ids and a per-group
    /// privileged flag.
    pub fn from_assignments(group_of: Vec<usize>, privileged: Vec<bool>) -> Result<Self> {
        let k = privileged.len();
        if group_of.iter().any(|&g| g >= k) {
            return Err(Error::data("group id out of range"));
        }
        let mut group_sizes = vec![0usize; k];
        for &g in &group_of {
            group_sizes[g] += 1;
        }
        if group_sizes.contains(&0) {
            return Err(Error::data("every group needs at least one member"));
        }
        Ok(Self {
            group_keys: (0..k).map(|g| vec![g.to_string()]).collect(),
            group_of,
            group_sizes,
            privileged,
            dropped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_keys(&self) -> &[Vec<String>] {
        &self.group_keys
    }

    pub fn group_is_privileged(&self, g: usize) -> bool {
        self.privileged[g]
    }

    /// Binary side of sample `i`: `true` for the privileged group g1.
    pub fn is_privileged(&self, i: usize) -> bool {
        self.privileged[self.group_of[i]]
    }

    /// The same grouping with the g1/g2 designation swapped.
    pub fn swapped(&self) -> Self {
        Self {
            privileged: self.privileged.iter().map(|p| !p).collect(),
            ..self.clone()
        }
    }
}

/// Groups samples by the joint category of `attrs`; samples matching every
/// entry of `privileged_values` form the privileged side.
pub fn make_groups(ds: &Dataset, attrs: &[&str], privileged_values: &[&str]) -> Result<GroupPartition> {
    if attrs.is_empty() {
        return Err(Error::config("no sensitive attributes selected"));
    }
    if attrs.len() != privileged_values.len() {
        return Err(Error::config("need exactly one privileged value per attribute"));
    }
    let cols = attrs
        .iter()
        .map(|a| {
            ds.sensitive_column(a)
                .ok_or_else(|| Error::config(format!("unknown sensitive attribute `{a}`")))
        })
        .collect::<Result<Vec<_>>>()?;

    let levels: Vec<Vec<String>> = cols
        .iter()
        .map(|c| {
            c.values
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new()];
    for lv in &levels {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                lv.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }

    let keys: Vec<Vec<String>> = (0..ds.len())
        .map(|i| cols.iter().map(|c| c.values[i].clone()).collect())
        .collect();
    let mut counts: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
    for k in &keys {
        *counts.entry(k).or_default() += 1;
    }
    let mut dropped = Vec::new();
    let mut group_keys = Vec::new();
    for cell in cells {
        if counts.contains_key(&cell) {
            group_keys.push(cell);
        } else {
            warn!("group {cell:?} has no members and is dropped");
            dropped.push(cell);
        }
    }
    let index: BTreeMap<&Vec<String>, usize> =
        group_keys.iter().enumerate().map(|(g, k)| (k, g)).collect();
    let group_of: Vec<usize> = keys.iter().map(|k| index[k]).collect();
    let mut group_sizes = vec![0usize; group_keys.len()];
    for &g in &group_of {
        group_sizes[g] += 1;
    }
    let privileged: Vec<bool> = group_keys
        .iter()
        .map(|k| k.iter().zip(privileged_values).all(|(v, p)| v == p))
        .collect();
    if !privileged.iter().any(|&p| p) || privileged.iter().all(|&p| p) {
        warn!("privileged split leaves one side empty");
    }
    Ok(GroupPartition {
        group_of,
        group_sizes,
        group_keys,
        privileged,
        dropped,
    })
}

/// Split ratios and seed. Part names default to train/validation/test or
/// train/validation/ensemble/test.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub ratios: Vec<f64>,
    pub seed: u64,
    pub part_names: Vec<String>,
}

impl SplitSpec {
    pub fn new(ratios: Vec<f64>, seed: u64) -> Result<Self> {
        if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::config("split ratios must be positive"));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split ratios sum to {sum}, expected 1")));
        }
        let part_names = match ratios.len() {
            3 => vec!["train", "validation", "test"],
            4 => vec!["train", "validation", "ensemble", "test"],
            _ => vec![],
        };
        let part_names = if part_names.is_empty() {
            (0..ratios.len()).map(|k| format!("part{k}")).collect()
        } else {
            part_names.into_iter().map(String::from).collect()
        };
        Ok(Self { ratios, seed, part_names })
    }

    /// Normalises relative weights such as `5:1.25:1.25:2.5`.
    pub fn from_weights(weights: &[f64], seed: u64) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::config("split weights must be positive"));
        }
        Self::new(weights.iter().map(|w| w / sum).collect(), seed)
    }

    /// Floor-rounded part sizes with the remainder added to the first part.
    pub fn sizes(&self, n: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = self
            .ratios
            .iter()
            .map(|r| (r * n as f64 + 1e-9).floor() as usize)
            .collect();
        let assigned: usize = sizes.iter().sum();
        sizes[0] += n - assigned;
        sizes
    }
}

/// Index sets of a label-stratified seeded split.
pub fn split_indices(labels: &[u8], spec: &SplitSpec) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    let sizes = spec.sizes(n);
    if let Some(k) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::data(format!(
            "split part `{}` would be empty for n={n}",
            spec.part_names[k]
        )));
    }
    let mut rng = seed::rng(spec.seed);
    // Shuffle within each class, then interleave classes by relative rank so
    // any contiguous chunk carries near-global class proportions.
    let mut keyed: Vec<(f64, u8, usize)> = Vec::with_capacity(n);
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let m = idx.len() as f64;
        keyed.extend(
            idx.into_iter()
                .enumerate()
                .map(|(r, i)| ((r as f64 + 0.5) / m, class, i)),
        );
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let order: Vec<usize> = keyed.into_iter().map(|(_, _, i)| i).collect();
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        parts.push(order[start..start + s].to_vec());
        start += s;
    }
    Ok(parts)
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Vec<Dataset>> {
    Ok(split_indices(ds.labels(), spec)?
        .iter()
        .map(|idx| ds.subset(idx))
        .collect())
}

/// Synthetic data with a binary sensitive column `group` (`A` privileged,
/// `B` unprivileged). Positive-label rates are `0.5 + bias/2` for A and
/// `0.5 - bias/2` for B; every feature carries label signal of decreasing
/// strength plus a weak group shift.
pub fn synth_biased(n: usize, d: usize, bias: f64, seed: u64) -> Result<Dataset> {
    if n < 20 {
        return Err(Error::config("synth_biased needs n >= 20"));
    }
    if d < 2 {
        return Err(Error::config("synth_biased needs d >= 2"));
    }
    if !(0.0..=1.0).contains(&bias) {
        return Err(Error::config("bias must lie in [0, 1]"));
    }
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for _ in 0..n {
        let privileged = rng.random_bool(0.5);
        let rate = if privileged { 0.5 + bias / 2.0 } else { 0.5 - bias / 2.0 };
        let y = rng.random_bool(rate);
        let ys = if y { 1.0 } else { -1.0 };
        let gs = if privileged { 1.0 } else { -1.0 };
        let row: Vec<f64> = (0..d)
            .map(|j| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                ys / (1.0 + j as f64) + 0.3 * gs + noise
            })
            .collect();
        rows.push(row);
        labels.push(u8::from(y));
        groups.push(if privileged { "A" } else { "B" }.to_string());
    }
    Dataset::new(
        rows,
        labels,
        vec![SensitiveColumn { name: "group".into(), values: groups }],
        (0..d).map(|j| format!("x{j}")).collect(),
    )
}

/// Per-column z-scoring fitted on one dataset and applied to others.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Self {
        let n = ds.len() as f64;
        let w = ds.width();
        let mut mean = vec![0.0; w];
        for row in ds.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; w];
        for row in ds.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, ds: &mut Dataset) {
        for row in ds.features.chunks_exact_mut(ds.width) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "x,color,sex,y\n1.5,red,M,0\n2.0,blue,F,1\n,red,F,1\n4.0,green,M,0\n";

    fn small() -> Dataset {
        load_csv_reader(SMALL.as_bytes(), &LoadOptions::new("y", &["sex"])).unwrap()
    }

    #[test]
    fn loads_and_encodes_columns() {
        let ds = small();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.labels(), &[0, 1, 1, 0]);
        assert_eq!(
            ds.column_names(),
            &["x", "color=blue", "color=green", "color=red", "sex=F", "sex=M"]
        );
        // missing numeric imputed with the mean of 1.5, 2.0, 4.0
        assert!((ds.row(2)[0] - 2.5).abs() < 1e-12);
        assert_eq!(ds.row(0), &[1.5, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn missing_label_column_is_config_error() {
        let err = load_csv_reader(SMALL.as_bytes(), &LoadOptions::new("target", &["sex"])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_binary_label_is_data_error() {
        let csv = "x,s,y\n1,a,0\n2,b,2\n";
        let err = load_csv_reader(csv.as_bytes(), &LoadOptions::new("y", &["s"])).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn ragged_rows_are_data_error() {
        let csv = "x,s,y\n1,a,0\n2,b\n";
        let err = load_csv_reader(csv.as_bytes(), &LoadOptions::new("y", &["s"])).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn rows_missing_sensitive_value_are_rejected() {
        let csv = "x,s,y\n1,a,0\n2,,1\n3,b,1\n";
        let ds = load_csv_reader(csv.as_bytes(), &LoadOptions::new("y", &["s"])).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn drop_sensitive_keeps_them_out_of_features() {
        let mut opts = LoadOptions::new("y", &["sex"]);
        opts.drop_sensitive = true;
        let ds = load_csv_reader(SMALL.as_bytes(), &opts).unwrap();
        assert!(ds.column_names().iter().all(|c| !c.starts_with("sex")));
        assert_eq!(ds.sensitive()[0].values, vec!["M", "F", "F", "M"]);
    }

    #[test]
    fn buckets_continuous_sensitive_attribute() {
        let csv = "x,age,y\n1,20,0\n2,30,1\n3,50,1\n";
        let mut opts = LoadOptions::new("y", &["age"]);
        opts.buckets.insert("age".into(), vec![25.0, 40.0]);
        let ds = load_csv_reader(csv.as_bytes(), &opts).unwrap();
        assert_eq!(ds.sensitive()[0].values, vec!["<25", "25..40", ">=40"]);
    }

    #[test]
    fn binary_sensitive_gives_two_groups_of_two() {
        let ds = small();
        let part = make_groups(&ds, &["sex"], &["M"]).unwrap();
        assert_eq!(part.n_groups(), 2);
        let mut sizes = part.group_sizes().to_vec();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2]);
        assert!(part.is_privileged(0));
        assert!(!part.is_privileged(1));
    }

    #[test]
    fn cross_product_groups_and_privileged_side() {
        let sex = ["M", "F", "M", "F", "M", "F"];
        let age = ["old", "old", "young", "young", "old", "young"];
        let ds = Dataset::new(
            vec![vec![0.0]; 6],
            vec![0, 1, 0, 1, 0, 1],
            vec![
                SensitiveColumn { name: "sex".into(), values: sex.iter().map(|s| s.to_string()).collect() },
                SensitiveColumn { name: "age".into(), values: age.iter().map(|s| s.to_string()).collect() },
            ],
            vec!["x".into()],
        )
        .unwrap();
        let part = make_groups(&ds, &["sex", "age"], &["M", "old"]).unwrap();
        assert_eq!(part.n_groups(), 4);
        assert_eq!(part.group_sizes().iter().sum::<usize>(), 6);
        assert!(part.is_privileged(0)); // (M, old)
        assert!(!part.is_privileged(1)); // (F, old)
        assert!(!part.is_privileged(2)); // (M, young)
    }

    #[test]
    fn empty_cross_product_cells_are_dropped() {
        let ds = Dataset::new(
            vec![vec![0.0]; 2],
            vec![0, 1],
            vec![
                SensitiveColumn { name: "a".into(), values: vec!["x".into(), "y".into()] },
                SensitiveColumn { name: "b".into(), values: vec!["p".into(), "q".into()] },
            ],
            vec!["f".into()],
        )
        .unwrap();
        let part = make_groups(&ds, &["a", "b"], &["x", "p"]).unwrap();
        assert_eq!(part.n_groups(), 2);
        assert_eq!(part.dropped.len(), 2);
    }

    #[test]
    fn unknown_attribute_is_config_error() {
        let err = make_groups(&small(), &["race"], &["w"]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec::new(vec![0.6, 0.2, 0.2], 7).unwrap();
        assert_eq!(spec.sizes(10), vec![6, 2, 2]);
        let spec = SplitSpec::from_weights(&[5.0, 1.25, 1.25, 2.5], 7).unwrap();
        assert_eq!(spec.sizes(8), vec![4, 1, 1, 2]);
        assert_eq!(spec.part_names, vec!["train", "validation", "ensemble", "test"]);
    }

    #[test]
    fn split_is_deterministic_and_covers_everything() {
        let ds = synth_biased(50, 2, 0.2, 1).unwrap();
        let spec = SplitSpec::new(vec![0.6, 0.2, 0.2], 7).unwrap();
        let a = split_indices(ds.labels(), &spec).unwrap();
        let b = split_indices(ds.labels(), &spec).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.concat();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_empty_part() {
        let spec = SplitSpec::new(vec![0.9, 0.05, 0.05], 0).unwrap();
        assert!(matches!(split_indices(&[0, 1, 0, 1, 0], &spec), Err(Error::Data(_))));
    }

    #[test]
    fn ratios_must_sum_to_one() {
        assert!(SplitSpec::new(vec![0.5, 0.2], 0).is_err());
    }

    fn label_gap(ds: &Dataset) -> f64 {
        let g = &ds.sensitive()[0].values;
        let (mut pa, mut na, mut pb, mut nb) = (0.0, 0.0, 0.0, 0.0);
        for (y, s) in ds.labels().iter().zip(g) {
            if s == "A" {
                na += 1.0;
                pa += f64::from(*y);
            } else {
                nb += 1.0;
                pb += f64::from(*y);
            }
        }
        pa / na - pb / nb
    }

    #[test]
    fn synthetic_label_gap_tracks_bias() {
        assert!(label_gap(&synth_biased(10_000, 3, 0.0, 11).unwrap()).abs() < 0.05);
        let gap = label_gap(&synth_biased(10_000, 3, 0.4, 11).unwrap());
        assert!((gap - 0.4).abs() < 0.05, "gap {gap}");
    }

    #[test]
    fn synthetic_is_seed_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        synth_biased(100, 3, 0.3, 5).unwrap().write_csv(&mut a, "y").unwrap();
        synth_biased(100, 3, 0.3, 5).unwrap().write_csv(&mut b, "y").unwrap();
        assert_eq!(a, b);
        assert!(synth_biased(10, 3, 0.3, 5).is_err());
    }

    #[test]
    fn standardizer_centres_columns() {
        let mut ds = synth_biased(200, 3, 0.3, 2).unwrap();
        Standardizer::fit(&ds).apply(&mut ds);
        let mean: f64 = ds.rows().map(|r| r[0]).sum::<f64>() / 200.0;
        assert!(mean.abs() < 1e-12);
    }
}
