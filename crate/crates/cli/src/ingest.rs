//! CSV ingestion: integer-coded discrete tables with a header row, a
//! configurable missing-value token, and either most-frequent imputation or
//! row elimination for missing cells.

use std::path::Path;

use assocmine::data::Attribute;
use assocmine::Dataset;

use crate::error::CliError;

/// How a CSV file is turned into a [`Dataset`].
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Class column name; the resulting dataset is labelled when set.
    pub class: Option<String>,
    /// Cell token marking a missing value.
    pub missing_token: String,
    /// Drop rows containing missing cells instead of imputing them.
    pub drop_missing: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { class: None, missing_token: "?".into(), drop_missing: false }
    }
}

/// Reads a CSV file into a [`Dataset`].
///
/// The header row names the attributes. Cells must be nonnegative integer
/// state codes or the missing token. Missing cells are imputed with the
/// column's most frequent observed value (ties broken toward the smallest
/// code) unless `drop_missing` eliminates their rows instead. Declared
/// cardinalities are inferred as the maximum observed code plus one.
///
/// Rejected inputs: non-integer cells (reported with data row and column),
/// columns that are entirely missing, columns that are constant after
/// missing-value treatment, and structurally malformed CSV.
pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::runtime(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(CliError::parse(format!("{}: empty header row", path.display())));
    }

    // Row-major staging; `None` marks a missing cell.
    let mut rows: Vec<Vec<Option<u32>>> = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let data_row = index + 1;
        let record =
            record.map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(names.len());
        for (col, cell) in record.iter().enumerate() {
            if cell == options.missing_token {
                row.push(None);
            } else {
                let value: u32 = cell.parse().map_err(|_| {
                    CliError::parse(format!(
                        "{}: data row {data_row}, column '{}': cannot parse '{cell}' as a \
                         nonnegative integer state code",
                        path.display(),
                        names.get(col).map(String::as_str).unwrap_or("?")
                    ))
                })?;
                row.push(Some(value));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(format!("{}: no data rows", path.display())));
    }

    let all_missing: Vec<&str> = (0..names.len())
        .filter(|&c| rows.iter().all(|row| row[c].is_none()))
        .map(|c| names[c].as_str())
        .collect();
    if !all_missing.is_empty() {
        return Err(CliError::parse(format!(
            "{}: column(s) entirely missing: {}",
            path.display(),
            all_missing.join(", ")
        )));
    }

    if options.drop_missing {
        rows.retain(|row| row.iter().all(Option::is_some));
        if rows.is_empty() {
            return Err(CliError::parse(format!(
                "{}: every row contains missing values",
                path.display()
            )));
        }
    }

    // Column-major codes with per-column imputation of the remaining gaps.
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(names.len());
    for c in 0..names.len() {
        let fill = most_frequent(rows.iter().filter_map(|row| row[c]));
        columns.push(rows.iter().map(|row| row[c].unwrap_or(fill)).collect());
    }

    let constant: Vec<String> = columns
        .iter()
        .zip(&names)
        .filter(|(col, _)| col.iter().all(|&v| v == col[0]))
        .map(|(_, name)| name.clone())
        .collect();
    if !constant.is_empty() {
        return Err(assocmine::Error::ConstantAttributes(constant).into());
    }

    let attributes: Vec<Attribute> = names
        .iter()
        .zip(&columns)
        .map(|(name, col)| Attribute {
            name: name.clone(),
            states: col.iter().copied().max().unwrap_or(0) + 1,
        })
        .collect();

    let class_index = match &options.class {
        None => None,
        Some(class) => Some(names.iter().position(|n| n == class).ok_or_else(|| {
            CliError::config(format!(
                "class column '{class}' not found; available columns: {}",
                names.join(", ")
            ))
        })?),
    };

    Dataset::new(attributes, columns, class_index)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

/// Most frequent value of a non-empty iterator, ties toward the smallest.
fn most_frequent(values: impl Iterator<Item = u32>) -> u32 {
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0u64) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(v, _)| v)
        .expect("imputation source column must have at least one observed value")
}

/// Writes a dataset back to CSV: header of attribute names, one row of state
/// codes per sample. Inverse of [`ingest_csv`] whenever every declared state
/// is observed and no cell is missing.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let names: Vec<&str> =
        (0..ds.attribute_count()).map(|a| ds.attribute(a).name.as_str()).collect();
    writer
        .write_record(&names)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    for row in 0..ds.n() {
        let record: Vec<String> =
            (0..ds.attribute_count()).map(|a| ds.column(a)[row].to_string()).collect();
        writer
            .write_record(&record)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }
    writer.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn missing_cells_impute_the_most_frequent_value() {
        let file = write_csv("A,B\n0,1\n1,0\n?,1\n1,0\n1,1\n");
        let ds = ingest_csv(file.path(), &IngestOptions::default()).unwrap();
        assert_eq!(ds.column(0), &[0, 1, 1, 1, 1]);
        assert_eq!(ds.attribute(0).states, 2);
    }

    #[test]
    fn imputation_ties_break_toward_the_smallest_code() {
        let file = write_csv("A,B\n0,0\n0,1\n1,0\n1,1\n?,0\n2,1\n2,0\n");
        let ds = ingest_csv(file.path(), &IngestOptions::default()).unwrap();
        // Column A observes 0, 0, 1, 1, 2, 2 — a three-way tie — so the
        // missing cell becomes 0.
        assert_eq!(ds.column(0)[4], 0);
    }

    #[test]
    fn drop_missing_eliminates_rows_instead() {
        let file = write_csv("A,B\n0,1\n?,0\n1,?\n1,0\n0,0\n");
        let options = IngestOptions { drop_missing: true, ..Default::default() };
        let ds = ingest_csv(file.path(), &options).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.column(0), &[0, 1, 0]);
        assert_eq!(ds.column(1), &[1, 0, 0]);
    }

    #[test]
    fn missing_token_is_configurable() {
        let file = write_csv("A,B\n0,1\nNA,0\n1,1\n1,0\n");
        let options = IngestOptions { missing_token: "NA".into(), ..Default::default() };
        let ds = ingest_csv(file.path(), &options).unwrap();
        assert_eq!(ds.column(0), &[0, 1, 1, 1]);
        // With the default token, "NA" is a parse error rather than missing.
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Parse(_)), "{err}");
    }

    #[test]
    fn non_integer_cells_report_row_and_column() {
        let file = write_csv("A,B\n0,1\n1,zero\n");
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::Parse(_)), "{msg}");
        assert!(msg.contains("data row 2") && msg.contains("column 'B'"), "{msg}");
        assert!(msg.contains("zero"), "{msg}");
    }

    #[test]
    fn constant_columns_are_rejected_by_name() {
        let file = write_csv("A,K,B\n0,3,1\n1,3,0\n0,3,1\n");
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Parse(_)), "{err}");
        assert!(err.to_string().contains('K'), "{err}");
        // A column constant only after imputation is rejected too.
        let file = write_csv("A,K\n0,2\n1,?\n0,2\n1,2\n");
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        assert!(err.to_string().contains('K'), "{err}");
    }

    #[test]
    fn entirely_missing_columns_are_rejected() {
        let file = write_csv("A,B\n0,?\n1,?\n");
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Parse(_)), "{err}");
        assert!(err.to_string().contains("entirely missing"), "{err}");
        assert!(err.to_string().contains('B'), "{err}");
    }

    #[test]
    fn class_column_is_resolved_by_name() {
        let file = write_csv("A,pheno\n0,1\n1,0\n1,1\n");
        let options = IngestOptions { class: Some("pheno".into()), ..Default::default() };
        let ds = ingest_csv(file.path(), &options).unwrap();
        assert_eq!(ds.class_index(), Some(1));
        let options = IngestOptions { class: Some("missing".into()), ..Default::default() };
        let err = ingest_csv(file.path(), &options).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err}");
        assert!(err.to_string().contains("A, pheno"), "{err}");
    }

    #[test]
    fn states_are_max_observed_code_plus_one() {
        let file = write_csv("A,B\n0,4\n3,0\n1,2\n");
        let ds = ingest_csv(file.path(), &IngestOptions::default()).unwrap();
        assert_eq!(ds.attribute(0).states, 4);
        assert_eq!(ds.attribute(1).states, 5);
    }

    #[test]
    fn generated_data_round_trips_through_csv() {
        let gen = assocmine::synth::generate("sup_exp1", None, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset_csv(&gen.dataset, &path).unwrap();
        let options = IngestOptions { class: Some("C".into()), ..Default::default() };
        let back = ingest_csv(&path, &options).unwrap();
        assert_eq!(back.n(), gen.dataset.n());
        assert_eq!(back.attribute_count(), gen.dataset.attribute_count());
        assert_eq!(back.class_index(), gen.dataset.class_index());
        for a in 0..back.attribute_count() {
            assert_eq!(back.attribute(a), gen.dataset.attribute(a));
            assert_eq!(back.column(a), gen.dataset.column(a));
        }
    }

    #[test]
    fn unreadable_files_are_runtime_errors() {
        let err = ingest_csv(Path::new("/nonexistent/data.csv"), &IngestOptions::default())
            .unwrap_err();
        assert!(matches!(err, CliError::Runtime(_)), "{err}");
    }

    #[test]
    fn ragged_rows_are_parse_errors() {
        let file = write_csv("A,B\n0,1\n1\n");
        let err = ingest_csv(file.path(), &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Parse(_)), "{err}");
    }
}
