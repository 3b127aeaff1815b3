//! Aggregation of run records into result-class percentages, and the
//! report files written next to `records.jsonl`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ResultClass;
use crate::experiment::ExperimentRecord;

pub const RECORDS_CSV: &str = "records.csv";
pub const TABLE_CSV: &str = "table.csv";
pub const ARE_HIST_CSV: &str = "are_hist.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const DIAGNOSTICS_JSONL: &str = "diagnostics.jsonl";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no classified records to aggregate")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// A percentage held as an integer number of hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hundredths(pub u64);

impl Hundredths {
    /// `100 * count / total` rounded half to even at two decimals.
    pub fn percent(count: usize, total: usize) -> Self {
        assert!(total > 0, "percentage of an empty total");
        let num = count as u128 * 10_000;
        let den = total as u128;
        let (q, r) = (num / den, num % den);
        let up = match (2 * r).cmp(&den) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => q % 2 == 1,
            std::cmp::Ordering::Less => false,
        };
        Hundredths((q + up as u128) as u64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl std::fmt::Display for Hundredths {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelColumn {
    pub model_tag: String,
    /// Classified records, the percentage denominator.
    pub total: usize,
    /// Transport failures, left out of the denominator.
    pub excluded: usize,
    pub counts: BTreeMap<ResultClass, usize>,
}

impl ModelColumn {
    pub fn count(&self, class: ResultClass) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn class_count(&self, class_name: &str) -> usize {
        self.counts.iter().filter(|(c, _)| c.class_name() == class_name).map(|(_, n)| n).sum()
    }
}

/// One table row. `subclass` is `Total` for class totals and empty for the
/// equivalent-domain row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub model_tag: String,
    pub class: String,
    pub subclass: String,
    pub count: usize,
    pub percent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateTable {
    /// Sorted by model tag.
    pub models: Vec<ModelColumn>,
}

/// Class and subclass rows in table order, with a total after each class
/// that has subclasses.
pub fn row_layout() -> Vec<(&'static str, Option<ResultClass>)> {
    let mut out = Vec::new();
    for class in ResultClass::CLASS_NAMES {
        let members: Vec<ResultClass> = ResultClass::ALL.into_iter().filter(|c| c.class_name() == class).collect();
        if members.len() == 1 && members[0].subclass_name().is_none() {
            out.push((class, Some(members[0])));
            continue;
        }
        out.extend(members.into_iter().map(|c| (class, Some(c))));
        out.push((class, None));
    }
    out
}

impl AggregateTable {
    pub fn column(&self, model_tag: &str) -> Option<&ModelColumn> {
        self.models.iter().find(|m| m.model_tag == model_tag)
    }

    /// Long-format rows. Class totals are percentages of the class count,
    /// not sums of rounded subclass percentages.
    pub fn rows(&self) -> Vec<TableRow> {
        let mut out = Vec::new();
        for m in &self.models {
            for (class, member) in row_layout() {
                let (subclass, count) = match member {
                    Some(c) => (c.subclass_name().unwrap_or("").to_string(), m.count(c)),
                    None => ("Total".to_string(), m.class_count(class)),
                };
                out.push(TableRow {
                    model_tag: m.model_tag.clone(),
                    class: class.to_string(),
                    subclass,
                    count,
                    percent: Hundredths::percent(count, m.total).to_string(),
                });
            }
        }
        out
    }
}

/// Counts classes per model. Transport failures are counted separately.
pub fn aggregate(records: &[ExperimentRecord]) -> Result<AggregateTable, ReportError> {
    let mut models: BTreeMap<&str, ModelColumn> = BTreeMap::new();
    for r in records {
        let col = models.entry(&r.model_tag).or_insert_with(|| ModelColumn {
            model_tag: r.model_tag.clone(),
            total: 0,
            excluded: 0,
            counts: BTreeMap::new(),
        });
        match r.result {
            Some(c) => {
                col.total += 1;
                *col.counts.entry(c).or_insert(0) += 1;
            }
            None => col.excluded += 1,
        }
    }
    let models: Vec<ModelColumn> = models.into_values().filter(|m| m.total > 0).collect();
    if models.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    Ok(AggregateTable { models })
}

#[derive(Debug, Serialize)]
struct CsvRecord<'a> {
    prompt_id: &'a str,
    model_tag: &'a str,
    domain: &'a str,
    action: &'a str,
    description_class: &'a str,
    seed: u64,
    result_class: &'a str,
    subclass: &'a str,
    are: Option<usize>,
    wall_time_ms: u64,
}

/// `(class, subclass)` columns for a record; transport failures get
/// `Transport`.
pub fn record_labels(r: &ExperimentRecord) -> (&'static str, &'static str) {
    match r.result {
        Some(c) => (c.class_name(), c.subclass_name().unwrap_or("")),
        None => ("Transport", "EndpointError"),
    }
}

#[derive(Debug, Serialize)]
struct Diagnostic<'a> {
    prompt_id: &'a str,
    model_tag: &'a str,
    result: String,
    prompt_key: &'a str,
    context: Vec<String>,
    diagnostics: &'a str,
    response: &'a str,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ReportError> {
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv { path: path.to_path_buf(), source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

/// Writes records.csv, table.csv, are_hist.csv, summary.txt and
/// diagnostics.jsonl into `outdir`. Returns the paths written.
pub fn emit_reports(
    table: &AggregateTable,
    records: &[ExperimentRecord],
    outdir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(outdir).map_err(io_err(outdir))?;
    let mut written = Vec::new();

    let path = outdir.join(RECORDS_CSV);
    let mut w = csv_writer(&path)?;
    for r in records {
        let (class, subclass) = record_labels(r);
        w.serialize(CsvRecord {
            prompt_id: &r.prompt_id,
            model_tag: &r.model_tag,
            domain: &r.domain,
            action: &r.action,
            description_class: r.description_class.name(),
            seed: r.seed,
            result_class: class,
            subclass,
            are: r.are,
            wall_time_ms: r.wall_time_ms,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    let path = outdir.join(TABLE_CSV);
    let mut w = csv_writer(&path)?;
    for row in table.rows() {
        w.serialize(row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    let path = outdir.join(ARE_HIST_CSV);
    let mut w = csv_writer(&path)?;
    w.write_record(["model_tag", "are", "Semantic", "Diff", "Equiv"]).map_err(csv_err(&path))?;
    for (model, bins) in are_histogram(records) {
        for (are, [s, d, e]) in bins {
            w.write_record([model.clone(), are.to_string(), s.to_string(), d.to_string(), e.to_string()])
                .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    let path = outdir.join(SUMMARY_TXT);
    std::fs::write(&path, summary(table)).map_err(io_err(&path))?;
    written.push(path);

    let path = outdir.join(DIAGNOSTICS_JSONL);
    let mut text = String::new();
    for r in records {
        let d = Diagnostic {
            prompt_id: &r.prompt_id,
            model_tag: &r.model_tag,
            result: r.result.map_or_else(|| "Transport".to_string(), |c| c.to_string()),
            prompt_key: &r.prompt_key,
            context: r.context.iter().map(ToString::to_string).collect(),
            diagnostics: &r.diagnostics,
            response: &r.response,
        };
        text.push_str(&serde_json::to_string(&d).expect("diagnostics serialize"));
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

/// Per model, ARE value to counts of (Semantic, Diff, Equiv) records.
pub fn are_histogram(records: &[ExperimentRecord]) -> BTreeMap<String, BTreeMap<usize, [usize; 3]>> {
    let mut out: BTreeMap<String, BTreeMap<usize, [usize; 3]>> = BTreeMap::new();
    for r in records {
        let (Some(class), Some(are)) = (r.result, r.are) else { continue };
        let slot = match class {
            ResultClass::Syntax(_) => continue,
            ResultClass::Semantic(_) => 0,
            ResultClass::Diff(_) => 1,
            ResultClass::Equiv => 2,
        };
        out.entry(r.model_tag.clone()).or_default().entry(are).or_insert([0; 3])[slot] += 1;
    }
    out
}

/// Plain-text table with one column per model.
pub fn summary(table: &AggregateTable) -> String {
    let mut out = String::new();
    let width = table.models.iter().map(|m| m.model_tag.len()).max().unwrap_or(0).max(8);
    write!(out, "{:<10} {:<9}", "class", "subclass").unwrap();
    for m in &table.models {
        write!(out, " {:>width$}", m.model_tag).unwrap();
    }
    out.push('\n');
    for (class, member) in row_layout() {
        let sub = match member {
            Some(c) => c.subclass_name().unwrap_or(""),
            None => "Total",
        };
        write!(out, "{class:<10} {sub:<9}").unwrap();
        for m in &table.models {
            let count = member.map_or_else(|| m.class_count(class), |c| m.count(c));
            write!(out, " {:>width$}", Hundredths::percent(count, m.total).to_string()).unwrap();
        }
        out.push('\n');
    }
    write!(out, "{:<20}", "prompts").unwrap();
    for m in &table.models {
        write!(out, " {:>width$}", m.total).unwrap();
    }
    out.push('\n');
    write!(out, "{:<20}", "transport failures").unwrap();
    for m in &table.models {
        write!(out, " {:>width$}", m.excluded).unwrap();
    }
    out.push('\n');
    out
}
