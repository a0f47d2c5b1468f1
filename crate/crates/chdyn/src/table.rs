//! `diagnostics.csv`: header row, then one record per row in `%.17g`.

use std::io::{Read, Write};
use std::path::Path;

use chdyn_core::diagnostics::DiagnosticRecord;

use crate::error::AppError;
use crate::format::g17;

pub struct CsvSink<W: Write> {
    w: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> Result<Self, AppError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(inner);
        w.write_record(DiagnosticRecord::COLUMNS).map_err(csv_err)?;
        Ok(Self { w })
    }

    pub fn push(&mut self, r: &DiagnosticRecord) -> Result<(), AppError> {
        self.w.write_record(r.to_array().iter().map(|x| g17(*x))).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<W, AppError> {
        self.w.flush()?;
        self.w.into_inner().map_err(|e| AppError::Io(e.into_error()))
    }
}

pub fn write_records(path: &Path, rows: &[DiagnosticRecord]) -> Result<(), AppError> {
    let mut sink = CsvSink::new(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    for r in rows {
        sink.push(r)?;
    }
    sink.finish()?;
    Ok(())
}

pub fn parse_records(input: impl Read) -> Result<Vec<DiagnosticRecord>, AppError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(DiagnosticRecord::COLUMNS.iter().copied()) {
        return Err(AppError::Input(format!(
            "unexpected header {:?}, want {:?}",
            header.iter().collect::<Vec<_>>(),
            DiagnosticRecord::COLUMNS
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut a = [0.0; 12];
        for (k, field) in rec.iter().enumerate() {
            a[k] = field
                .trim()
                .parse()
                .map_err(|_| AppError::Input(format!("row {}: bad number {field:?}", line + 2)))?;
        }
        out.push(DiagnosticRecord::from_array(a));
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticRecord>, AppError> {
    let f = std::fs::File::open(path).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
    parse_records(std::io::BufReader::new(f))
}

fn csv_err(e: csv::Error) -> AppError {
    AppError::Input(format!("csv: {e}"))
}
