//! CSV run records: `#` metadata lines, a header row, then data rows.

use thiserror::Error;

use crate::config::ExperimentConfig;

/// Rows produced by a command, plus scalar results for the metadata block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub results: Vec<(String, String)>,
    /// Set when the run completed but the tested property did not hold.
    pub failure: Option<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }
}

/// Shortest form that parses back to the same `f64`, in exponent
/// notation for very small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn render(config: &ExperimentConfig, table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut out = Vec::new();
    let mut meta = vec![
        format!("qal {}", qal_core::VERSION),
        format!("command = {}", config.command),
    ];
    meta.extend(config.echo());
    meta.extend(table.results.iter().map(|(k, v)| format!("result {k} = {v}")));
    if let Some(f) = &table.failure {
        meta.push(format!("failure = {f}"));
    }
    for line in meta {
        out.extend_from_slice(b"# ");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// A parsed run record.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    /// Metadata lines without the leading `# `.
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("record has no header row")]
    NoHeader,
}

impl CsvRecord {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Value of a `result key = value` metadata line.
    pub fn result(&self, key: &str) -> Option<&str> {
        let prefix = format!("result {key} = ");
        self.meta.iter().find_map(|m| m.strip_prefix(prefix.as_str()))
    }

    /// Values of one column parsed as reals.
    pub fn reals(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r.get(c)?.parse().ok()).collect()
    }
}

pub fn parse_record(text: &str) -> Result<CsvRecord, ReadError> {
    let mut meta = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        match line.strip_prefix('#') {
            Some(rest) => {
                meta.push(rest.trim_start_matches(' ').trim_end_matches(['\n', '\r']).to_string());
                body_start += line.len();
            }
            None => break,
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(&text.as_bytes()[body_start..]);
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r?.iter().map(str::to_string).collect(),
        None => return Err(ReadError::NoHeader),
    };
    let rows = records
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()?;
    Ok(CsvRecord { meta, header, rows })
}
