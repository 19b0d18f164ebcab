//! CSV ingestion: `t_ms,v0,...,v(n-1)` rows into a built store.
//!
//! The header line is optional; it is recognized by a non-numeric first
//! field. Ingestion is a single pass and independent of any query that
//! may run later: the transform happens once per recording.

use std::io::BufRead;

use zebra_core::quant::QuantizationConfig;
use zebra_core::store::{Store, StoreBuilder, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} comma-separated fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: field {field} (`{text}`) is not a valid number")]
    BadNumber {
        line: usize,
        field: usize,
        text: String,
    },
    #[error("line {line}: timestamp {next} does not increase over previous timestamp {prev}")]
    NonMonotonic { line: usize, prev: i64, next: i64 },
    #[error("line {line}: {source}")]
    BadSample {
        line: usize,
        #[source]
        source: StoreError,
    },
}

/// Parse and index a CSV stream. Returns the sealed store.
pub fn ingest_csv<R: BufRead>(
    reader: R,
    config: QuantizationConfig,
) -> Result<Store, IngestError> {
    let dims = config.dims();
    let mut builder = StoreBuilder::new(config);
    let mut values = vec![0.0f64; dims];
    let mut first_data_line = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let t_text = fields.next().unwrap().trim();
        if first_data_line && t_text.parse::<i64>().is_err() {
            // Optional header row.
            first_data_line = false;
            continue;
        }
        first_data_line = false;

        let t_ms: i64 = t_text.parse().map_err(|_| IngestError::BadNumber {
            line: line_no,
            field: 0,
            text: t_text.to_string(),
        })?;
        let mut got = 0;
        for (d, field) in fields.enumerate() {
            if d < dims {
                let text = field.trim();
                values[d] = text.parse().map_err(|_| IngestError::BadNumber {
                    line: line_no,
                    field: d + 1,
                    text: text.to_string(),
                })?;
            }
            got += 1;
        }
        if got != dims {
            return Err(IngestError::FieldCount {
                line: line_no,
                expected: dims + 1,
                got: got + 1,
            });
        }

        builder.push(t_ms, &values).map_err(|e| match e {
            StoreError::NonMonotonicTimestamp { prev, next } => IngestError::NonMonotonic {
                line: line_no,
                prev,
                next,
            },
            other => IngestError::BadSample {
                line: line_no,
                source: other,
            },
        })?;
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn cfg() -> QuantizationConfig {
        QuantizationConfig::uniform(2, -12.0, 12.0, 16).unwrap()
    }

    #[test]
    fn ingests_with_and_without_header() {
        let with = "t_ms,v0,v1\n0,-1.5,0.25\n10,-1.0,0.5\n";
        let without = "0,-1.5,0.25\n10,-1.0,0.5\n";
        let a = ingest_csv(Cursor::new(with), cfg()).unwrap();
        let b = ingest_csv(Cursor::new(without), cfg()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a.sample(0).values, &[-1.5, 0.25]);
    }

    #[test]
    fn empty_stream_builds_empty_store() {
        let store = ingest_csv(Cursor::new(""), cfg()).unwrap();
        assert_eq!(store.len(), 0);
        store.audit().unwrap();
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "0,-1.5,0.25\n10,oops,0.5\n";
        match ingest_csv(Cursor::new(text), cfg()) {
            Err(IngestError::BadNumber { line: 2, field: 1, text }) => {
                assert_eq!(text, "oops");
            }
            other => panic!("unexpected: {other:?}"),
        }

        let text = "0,-1.5\n";
        match ingest_csv(Cursor::new(text), cfg()) {
            Err(IngestError::FieldCount { line: 1, expected: 3, got: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_timestamps_name_both() {
        let text = "100,0,0\n90,0,0\n";
        match ingest_csv(Cursor::new(text), cfg()) {
            Err(IngestError::NonMonotonic { line: 2, prev: 100, next: 90 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn ten_thousand_rows_index_is_complete_and_sorted() {
        let mut text = String::from("t_ms,v0,v1\n");
        for i in 0..10_000i64 {
            let v0 = ((i * 31) % 240) as f64 / 10.0 - 12.0;
            let v1 = ((i * 17) % 240) as f64 / 10.0 - 12.0;
            text.push_str(&format!("{},{},{}\n", i * 10, v0, v1));
        }
        let store = ingest_csv(Cursor::new(text), cfg()).unwrap();
        assert_eq!(store.len(), 10_000);
        let index: Vec<_> = store.raw_index().to_vec();
        assert!(index.windows(2).all(|w| w[0] <= w[1]));
        store.audit().unwrap();
    }
}
