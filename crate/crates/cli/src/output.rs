//! Row output as CSV with a header, or one JSON object per line.

use std::io::Write;

use serde::Serialize;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub enum RowWriter<W: Write> {
    Csv(Box<csv::Writer<W>>),
    Json(W),
}

impl<W: Write> RowWriter<W> {
    pub fn new(format: Format, out: W) -> Self {
        match format {
            Format::Csv => RowWriter::Csv(Box::new(csv::Writer::from_writer(out))),
            Format::Json => RowWriter::Json(out),
        }
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<(), HarnessError> {
        match self {
            RowWriter::Csv(w) => {
                w.serialize(row).map_err(csv_error)?;
                w.flush()?;
            }
            RowWriter::Json(w) => {
                serde_json::to_writer(&mut *w, row)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<W, HarnessError> {
        match self {
            RowWriter::Csv(w) => w.into_inner().map_err(|e| HarnessError::Io(e.into_error())),
            RowWriter::Json(mut w) => {
                w.flush()?;
                Ok(w)
            }
        }
    }
}

fn csv_error(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

/// All rows rendered into a string.
pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, HarnessError> {
    let mut w = RowWriter::new(format, Vec::new());
    for r in rows {
        w.write(r)?;
    }
    Ok(String::from_utf8(w.finish()?).expect("csv and json output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        step: usize,
        value: f64,
    }

    #[test]
    fn csv_has_header() {
        let rows = [
            Row {
                step: 1,
                value: 0.5,
            },
            Row {
                step: 2,
                value: 1e-7,
            },
        ];
        assert_eq!(
            render(&rows, Format::Csv).unwrap(),
            "step,value\n1,0.5\n2,1e-7\n"
        );
    }

    #[test]
    fn json_lines() {
        let rows = [Row {
            step: 1,
            value: 0.5,
        }];
        assert_eq!(
            render(&rows, Format::Json).unwrap(),
            "{\"step\":1,\"value\":0.5}\n"
        );
    }
}
