//! CSV dataset intake, min-max normalization, and deterministic k-folds.
//!
//! The loader accepts RFC-4180-style CSV (comma delimiter, optional
//! header, UTF-8, '.' decimal point) with one label column selected by
//! name or zero-based index. Feature cells must be numeric and finite;
//! categorical features are expected to be pre-encoded upstream. Labels
//! map to contiguous class indices in first-appearance order.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Numeric feature table with encoded class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// rows = samples, cols = input features; all finite.
    pub features: Array2<f64>,
    /// One class index per row, each in [0, n_classes).
    pub labels: Vec<usize>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Extract the given rows as an owned (features, labels) pair.
    pub fn rows(&self, indices: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let x = self.features.select(Axis(0), indices);
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }
}

/// Deterministic fold assignment: `assignments[row] = fold index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Row indices outside and inside the given fold, ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        assert!(fold < self.k, "fold index out of range");
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Label column selector: by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    Io { path: String, detail: String },
    EmptyFile,
    /// Row's cell count disagrees with the first row. Lines are 1-based
    /// file lines (header included).
    RaggedRow { line: u64, expected: usize, got: usize },
    /// Feature cell failed to parse as a finite number.
    NonNumericCell { line: u64, column: usize, value: String },
    LabelColumnOutOfRange { requested: String, columns: usize },
    /// Name-based label selection needs a header row.
    LabelNeedsHeader,
    /// Fewer than two distinct classes, or fewer rows than classes.
    DegenerateClasses { rows: usize, classes: usize },
    KOutOfRange { k: usize, rows: usize },
    Csv { detail: String },
}

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataError::Io { path, detail } => write!(f, "cannot read {}: {}", path, detail),
            DataError::EmptyFile => write!(f, "file contains no data rows"),
            DataError::RaggedRow { line, expected, got } => {
                write!(f, "line {}: expected {} cells, found {}", line, expected, got)
            }
            DataError::NonNumericCell { line, column, value } => write!(
                f,
                "line {}, column {}: `{}` is not a finite number",
                line, column, value
            ),
            DataError::LabelColumnOutOfRange { requested, columns } => {
                write!(f, "label column `{}` not found among {} columns", requested, columns)
            }
            DataError::LabelNeedsHeader => {
                write!(f, "label selection by name requires a header row")
            }
            DataError::DegenerateClasses { rows, classes } => write!(
                f,
                "need at least 2 classes and rows >= classes, found {} rows / {} classes",
                rows, classes
            ),
            DataError::KOutOfRange { k, rows } => {
                write!(f, "k={} folds out of range for {} rows", k, rows)
            }
            DataError::Csv { detail } => write!(f, "csv parse error: {}", detail),
        }
    }
}

impl std::error::Error for DataError {}

/// Load a CSV file into a [`Dataset`]. The dataset name is the file stem.
pub fn load_csv(path: &Path, label: &LabelColumn, has_header: bool) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_csv(file, &name, label, has_header)
}

/// Parse CSV from any reader; see [`load_csv`].
pub fn read_csv<R: std::io::Read>(
    reader: R,
    name: &str,
    label: &LabelColumn,
    has_header: bool,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(reader);

    let label_idx; // zero-based position of the label column
    let mut width: Option<usize> = None;
    if has_header {
        let headers = rdr.headers().map_err(|e| DataError::Csv { detail: e.to_string() })?;
        if headers.is_empty() {
            return Err(DataError::EmptyFile);
        }
        width = Some(headers.len());
        label_idx = match label {
            LabelColumn::Name(n) => headers.iter().position(|h| h == n).ok_or_else(|| {
                DataError::LabelColumnOutOfRange { requested: n.clone(), columns: headers.len() }
            })?,
            LabelColumn::Index(i) => *i,
        };
    } else {
        label_idx = match label {
            LabelColumn::Name(_) => return Err(DataError::LabelNeedsHeader),
            LabelColumn::Index(i) => *i,
        };
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut class_map: HashMap<String, usize> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| DataError::Csv { detail: e.to_string() })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DataError::RaggedRow { line, expected, got: record.len() });
        }
        if label_idx >= expected {
            return Err(DataError::LabelColumnOutOfRange {
                requested: label_idx.to_string(),
                columns: expected,
            });
        }

        let mut row = Vec::with_capacity(expected - 1);
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                let next = class_map.len();
                let class = *class_map.entry(cell.trim().to_string()).or_insert(next);
                labels.push(class);
            } else {
                let parsed = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
                match parsed {
                    Some(v) => row.push(v),
                    None => {
                        return Err(DataError::NonNumericCell {
                            line,
                            column: col,
                            value: cell.to_string(),
                        })
                    }
                }
            }
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(DataError::EmptyFile);
    }
    let n_features = rows[0].len();
    let n_classes = class_map.len();
    if n_classes < 2 || rows.len() < n_classes {
        return Err(DataError::DegenerateClasses { rows: rows.len(), classes: n_classes });
    }

    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((labels.len(), n_features), flat)
        .expect("row widths validated above");
    Ok(Dataset { name: name.to_string(), features, labels, n_features, n_classes })
}

/// Assign every row to one of k folds with sizes differing by at most 1.
/// The shuffle is driven only by the seed.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    let rows = ds.n_rows();
    if k < 2 || k > rows {
        return Err(DataError::KOutOfRange { k, rows });
    }
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut assignments = vec![0usize; rows];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Per-feature min-max statistics, fit on the training partition only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

pub fn normalize_fit(train_rows: &Array2<f64>) -> NormStats {
    assert!(train_rows.nrows() > 0, "cannot fit statistics on an empty partition");
    let cols = train_rows.ncols();
    let mut mins = vec![f64::INFINITY; cols];
    let mut maxs = vec![f64::NEG_INFINITY; cols];
    for row in train_rows.axis_iter(Axis(0)) {
        for (c, &v) in row.iter().enumerate() {
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    NormStats { mins, maxs }
}

/// Map each feature through the fitted linear [0,1] rescale. Values
/// outside the fitted range extrapolate (no clamping); constant features
/// map to 0.
pub fn normalize_apply(stats: &NormStats, rows: &Array2<f64>) -> Array2<f64> {
    assert_eq!(rows.ncols(), stats.mins.len(), "statistics width must match the rows");
    let mut out = rows.clone();
    for mut row in out.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            let span = stats.maxs[c] - stats.mins[c];
            *v = if span == 0.0 { 0.0 } else { (*v - stats.mins[c]) / span };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn load_str(text: &str, label: &LabelColumn, has_header: bool) -> Result<Dataset, DataError> {
        read_csv(text.as_bytes(), "test", label, has_header)
    }

    #[test]
    fn loads_header_csv_with_first_appearance_labels() {
        let ds = load_str("a,b,y\n0,1,cat\n1,0,dog\n1,1,cat\n", &LabelColumn::Name("y".into()), true)
            .unwrap();
        assert_eq!(ds.n_features, 2);
        assert_eq!(ds.n_classes, 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features, array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn label_column_by_index_without_header() {
        let ds = load_str("1,5.5,0\n0,2.5,1\n1,3.5,0\n", &LabelColumn::Index(2), false).unwrap();
        assert_eq!(ds.n_features, 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn label_column_in_the_middle_keeps_feature_order() {
        let ds = load_str("a,y,b\n7,x,9\n8,z,10\n", &LabelColumn::Name("y".into()), true).unwrap();
        assert_eq!(ds.features, array![[7.0, 9.0], [8.0, 10.0]]);
    }

    #[test]
    fn ragged_row_names_the_line() {
        let err =
            load_str("a,b,y\n1,2,x\n3,4\n5,6,x\n", &LabelColumn::Name("y".into()), true).unwrap_err();
        assert_eq!(err, DataError::RaggedRow { line: 3, expected: 3, got: 2 });
    }

    #[test]
    fn non_numeric_cell_names_line_and_column() {
        let err = load_str("a,b,y\n1,2,x\n3,oops,y\n", &LabelColumn::Name("y".into()), true)
            .unwrap_err();
        assert_eq!(err, DataError::NonNumericCell { line: 3, column: 1, value: "oops".into() });
    }

    #[test]
    fn non_finite_cells_are_rejected() {
        let err =
            load_str("a,y\ninf,x\n2,y\n", &LabelColumn::Name("y".into()), true).unwrap_err();
        assert!(matches!(err, DataError::NonNumericCell { line: 2, column: 0, .. }));
    }

    #[test]
    fn empty_and_headers_only_files_are_rejected() {
        assert_eq!(load_str("", &LabelColumn::Index(0), false).unwrap_err(), DataError::EmptyFile);
        assert_eq!(
            load_str("a,b,y\n", &LabelColumn::Name("y".into()), true).unwrap_err(),
            DataError::EmptyFile
        );
    }

    #[test]
    fn missing_label_column_is_reported() {
        let err = load_str("a,b\n1,2\n", &LabelColumn::Name("y".into()), true).unwrap_err();
        assert_eq!(err, DataError::LabelColumnOutOfRange { requested: "y".into(), columns: 2 });
        let err = load_str("1,2\n3,4\n", &LabelColumn::Index(5), false).unwrap_err();
        assert!(matches!(err, DataError::LabelColumnOutOfRange { .. }));
    }

    #[test]
    fn name_selection_requires_header() {
        let err = load_str("1,2\n", &LabelColumn::Name("y".into()), false).unwrap_err();
        assert_eq!(err, DataError::LabelNeedsHeader);
    }

    #[test]
    fn single_class_is_degenerate() {
        let err = load_str("a,y\n1,x\n2,x\n", &LabelColumn::Name("y".into()), true).unwrap_err();
        assert!(matches!(err, DataError::DegenerateClasses { classes: 1, .. }));
    }

    #[test]
    fn loader_reads_its_own_file_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "f0,f1,label\n0.5,1.5,a\n1.5,0.5,b\n").unwrap();
        let ds = load_csv(&path, &LabelColumn::Name("label".into()), true).unwrap();
        assert_eq!(ds.name, "tiny");
        assert_eq!(ds.n_rows(), 2);
    }

    fn dummy(rows: usize) -> Dataset {
        Dataset {
            name: "dummy".into(),
            features: Array2::zeros((rows, 1)),
            labels: (0..rows).map(|i| i % 2).collect(),
            n_features: 1,
            n_classes: 2,
        }
    }

    #[test]
    fn even_split_sizes() {
        let plan = make_folds(&dummy(10), 5, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
    }

    #[test]
    fn remainder_spreads_across_folds() {
        let plan = make_folds(&dummy(11), 5, 1).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn folds_are_deterministic_in_seed() {
        let ds = dummy(37);
        assert_eq!(make_folds(&ds, 7, 9).unwrap(), make_folds(&ds, 7, 9).unwrap());
        assert_ne!(
            make_folds(&ds, 7, 9).unwrap().assignments,
            make_folds(&ds, 7, 10).unwrap().assignments
        );
    }

    #[test]
    fn k_bounds_are_enforced() {
        let ds = dummy(10);
        assert!(matches!(make_folds(&ds, 1, 0).unwrap_err(), DataError::KOutOfRange { .. }));
        assert!(matches!(make_folds(&ds, 11, 0).unwrap_err(), DataError::KOutOfRange { .. }));
        assert!(make_folds(&ds, 10, 0).is_ok());
    }

    #[test]
    fn split_partitions_rows() {
        let plan = make_folds(&dummy(23), 4, 5).unwrap();
        for fold in 0..4 {
            let (train, test) = plan.split(fold);
            assert_eq!(train.len() + test.len(), 23);
            let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..23).collect::<Vec<_>>());
        }
    }

    #[test]
    fn normalize_maps_fit_range_to_unit_interval() {
        let train = array![[2.0], [4.0], [6.0]];
        let stats = normalize_fit(&train);
        let out = normalize_apply(&stats, &train);
        assert_eq!(out, array![[0.0], [0.5], [1.0]]);
    }

    #[test]
    fn constant_features_map_to_zero() {
        let train = array![[5.0, 1.0], [5.0, 3.0]];
        let stats = normalize_fit(&train);
        let out = normalize_apply(&stats, &train);
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.0]);
        assert_eq!(out.column(1).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn unseen_values_extrapolate_without_clamping() {
        let stats = normalize_fit(&array![[2.0], [6.0]]);
        let out = normalize_apply(&stats, &array![[8.0], [0.0]]);
        assert_eq!(out, array![[1.5], [-0.5]]);
    }

    proptest! {
        #[test]
        fn fold_partition_property(rows in 4usize..200, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= rows);
            let plan = make_folds(&dummy(rows), k, seed).unwrap();
            // every row in exactly one fold
            prop_assert_eq!(plan.assignments.len(), rows);
            prop_assert!(plan.assignments.iter().all(|&f| f < k));
            // sizes differ by at most one
            let sizes = plan.fold_sizes();
            let min = sizes.iter().min().unwrap();
            let max = sizes.iter().max().unwrap();
            prop_assert!(max - min <= 1);
        }

        #[test]
        fn normalization_bounds_training_rows(
            vals in proptest::collection::vec(-1e6f64..1e6, 2..40),
        ) {
            let rows = Array2::from_shape_vec((vals.len(), 1), vals).unwrap();
            let stats = normalize_fit(&rows);
            let out = normalize_apply(&stats, &rows);
            prop_assert!(out.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }
}
