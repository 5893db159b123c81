use std::fs;
use std::path::Path;

use super::VectorError;

/// Decimals used for every floating-point CSV cell.
pub const CSV_DECIMALS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum CsvValue {
    Number(f64),
    Integer(i64),
    Text(String),
    Empty,
}

impl CsvValue {
    fn render(&self) -> String {
        match self {
            CsvValue::Number(v) => format!("{:.*}", CSV_DECIMALS, v),
            CsvValue::Integer(v) => v.to_string(),
            CsvValue::Text(s) => s.clone(),
            CsvValue::Empty => String::new(),
        }
    }
}

impl From<f64> for CsvValue {
    fn from(v: f64) -> Self {
        CsvValue::Number(v)
    }
}

impl From<Option<f64>> for CsvValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(CsvValue::Empty, CsvValue::Number)
    }
}

impl From<usize> for CsvValue {
    fn from(v: usize) -> Self {
        CsvValue::Integer(v as i64)
    }
}

impl From<&str> for CsvValue {
    fn from(v: &str) -> Self {
        CsvValue::Text(v.to_string())
    }
}

impl From<String> for CsvValue {
    fn from(v: String) -> Self {
        CsvValue::Text(v)
    }
}

/// A row type with a fixed column set.
pub trait CsvRecord {
    fn header() -> Vec<&'static str>;
    fn values(&self) -> Vec<CsvValue>;
}

pub fn csv_table_string<R: CsvRecord>(rows: &[R]) -> Result<String, VectorError> {
    let header = R::header();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| VectorError::Csv(e.to_string());
    writer.write_record(&header).map_err(err)?;
    for row in rows {
        let values = row.values();
        if values.len() != header.len() {
            return Err(VectorError::Csv(format!(
                "row has {} fields, header has {}",
                values.len(),
                header.len()
            )));
        }
        writer.write_record(values.iter().map(CsvValue::render)).map_err(err)?;
    }
    let bytes = writer.into_inner().map_err(|e| VectorError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| VectorError::Csv(e.to_string()))
}

/// Comma-separated, `.` decimals, LF endings, header row first.
pub fn write_csv_table<R: CsvRecord>(rows: &[R], path: impl AsRef<Path>) -> Result<(), VectorError> {
    let text = csv_table_string(rows)?;
    fs::write(path, text)?;
    Ok(())
}

/// Header and raw string cells of a CSV file.
pub fn read_csv_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>), VectorError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| VectorError::Csv(e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| VectorError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| VectorError::Csv(e.to_string()))?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pair(&'static str, f64);

    impl CsvRecord for Pair {
        fn header() -> Vec<&'static str> {
            vec!["name", "value"]
        }
        fn values(&self) -> Vec<CsvValue> {
            vec![self.0.into(), self.1.into()]
        }
    }

    #[test]
    fn header_only_for_no_rows() {
        assert_eq!(csv_table_string::<Pair>(&[]).unwrap(), "name,value\n");
    }

    #[test]
    fn fixed_precision_and_quoting() {
        let s = csv_table_string(&[Pair("a,b", 1.0 / 3.0), Pair("c", -2.0)]).unwrap();
        assert_eq!(s, "name,value\n\"a,b\",0.333333\nc,-2.000000\n");
    }
}
