//! CSV reading and writing. All floats are written with 17 significant
//! digits so files round-trip exactly; missing case counts are empty
//! fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pompkit_core::{Error, Result, SimulatedPath, TimeSeries};

/// 17 significant digits; round-trips any finite f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes `data.csv` (time, cases; missing encoded as an empty field).
pub fn write_data(path: &Path, data: &TimeSeries) -> Result<()> {
    let mut w = CsvWriter::create(path, &["time", "cases"])?;
    for i in 0..data.len() {
        let cases = data.value(i).map(|y| y.to_string()).unwrap_or_default();
        w.row(&[fmt_f64(data.time(i)), cases])?;
    }
    w.finish()
}

/// Writes `states.csv` (time, one column per compartment, incidence).
pub fn write_states(path: &Path, compartments: &[String], sim: &SimulatedPath) -> Result<()> {
    let mut header: Vec<&str> = vec!["time"];
    for c in compartments {
        header.push(c);
    }
    header.push("H");
    let mut w = CsvWriter::create(path, &header)?;
    for (t, state) in sim.times.iter().zip(&sim.states) {
        let mut row = vec![fmt_f64(*t)];
        row.extend(state.counts.iter().map(|c| fmt_f64(*c)));
        row.push(fmt_f64(state.incidence));
        w.row(&row)?;
    }
    w.finish()
}

/// Reads a case-count series; parse failures name the data row.
pub fn read_data(path: &Path) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if headers.len() < 2 || &headers[0] != "time" || &headers[1] != "cases" {
            return Err(Error::Data(format!(
                "{}: expected header `time,cases`, got `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is line 1
        let record = record.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let time: f64 = record
            .get(0)
            .ok_or_else(|| Error::Data(format!("row {row}: missing time")))?
            .parse()
            .map_err(|e| Error::Data(format!("row {row}: bad time: {e}")))?;
        let cases_field = record.get(1).unwrap_or("");
        let cases = if cases_field.is_empty() {
            None
        } else {
            Some(
                cases_field
                    .parse::<u64>()
                    .map_err(|e| Error::Data(format!("row {row}: bad case count: {e}")))?,
            )
        };
        times.push(time);
        values.push(cases);
    }
    TimeSeries::new(times, values)
}
