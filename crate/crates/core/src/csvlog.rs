//! CSV trajectory logs.
//!
//! Columns: `t`, `q1..qn`, `dq1..dqn`, the wrench (`Fx,Fy,tau_z` for the
//! full model, `Fx` for the planar one), then `qm*`/`dqm*` when noise was
//! active and `Fwx,Fwy` when wind was configured. Values are written with
//! 17 significant digits, so they re-parse to the logged `f64` exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::SimLog;

/// Wrench channel names for a model with `n_inputs` inputs.
pub fn channel_names(n_inputs: usize) -> Vec<String> {
    match n_inputs {
        3 => vec!["Fx".into(), "Fy".into(), "tau_z".into()],
        1 => vec!["Fx".into()],
        n => (1..=n).map(|i| format!("u{i}")).collect(),
    }
}

pub fn header(log: &SimLog) -> Vec<String> {
    let n = log.q.first().map_or(0, |q| q.len());
    let m = log.u.first().map_or(0, |u| u.len());
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("q{i}")));
    h.extend((1..=n).map(|i| format!("dq{i}")));
    h.extend(channel_names(m));
    if log.measured.is_some() {
        h.extend((1..=n).map(|i| format!("qm{i}")));
        h.extend((1..=n).map(|i| format!("dqm{i}")));
    }
    if log.wind.is_some() {
        h.extend(["Fwx".to_string(), "Fwy".to_string()]);
    }
    h
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e.to_string()),
        kind => Error::Parse { line, reason: format!("{kind:?}") },
    }
}

pub fn write_log<W: Write>(log: &SimLog, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(log)).map_err(csv_error)?;
    let mut row: Vec<String> = Vec::new();
    for k in 0..log.len() {
        row.clear();
        let mut push = |v: f64| row.push(format!("{v:.16e}"));
        push(log.t[k]);
        log.q[k].iter().copied().for_each(&mut push);
        log.dq[k].iter().copied().for_each(&mut push);
        log.u[k].iter().copied().for_each(&mut push);
        if let Some((qm, dqm)) = &log.measured {
            qm[k].iter().copied().for_each(&mut push);
            dqm[k].iter().copied().for_each(&mut push);
        }
        if let Some(wind) = &log.wind {
            wind[k].iter().copied().for_each(&mut push);
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log_file(log: &SimLog, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_log(log, std::io::BufWriter::new(file))
}

/// A log read back as named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLog {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvLog {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(&self.columns[i])
    }

    pub fn time(&self) -> &[f64] {
        &self.columns[0]
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

pub fn read_log<R: Read>(input: R) -> Result<CsvLog> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse { line: Some(1), reason: "first column must be `t`".into() });
    }
    let mut columns = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize);
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v = field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                reason: format!("`{field}`: {e}"),
            })?;
            col.push(v);
        }
    }
    if columns[0].windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parse { line: None, reason: "time column is not strictly increasing".into() });
    }
    Ok(CsvLog { header, columns })
}

pub fn read_log_file(path: impl AsRef<Path>) -> Result<CsvLog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_log(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn sample() -> SimLog {
        let v = |a: &[f64]| DVector::from_column_slice(a);
        SimLog {
            t: vec![0.0, 1e-3],
            q: vec![v(&[0.1, -0.2]), v(&[0.1 + 1e-17, std::f64::consts::PI])],
            dq: vec![v(&[0.0, 1.0 / 3.0]), v(&[-2.5e-300, 7.0])],
            u: vec![v(&[1.0]), v(&[-0.3])],
            measured: None,
            wind: Some(vec![[8.1, 8.1], [0.0, 0.0]]),
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(header(&sample()).join(","), "t,q1,q2,dq1,dq2,Fx,Fwx,Fwy");
    }

    #[test]
    fn round_trip_is_exact() {
        let log = sample();
        let mut buf = Vec::new();
        write_log(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        let back = read_log(&buf[..]).unwrap();
        assert_eq!(back.column("q2").unwrap(), &[-0.2, std::f64::consts::PI]);
        assert_eq!(back.column("dq1").unwrap(), &[0.0, -2.5e-300]);
        assert_eq!(back.column("dq2").unwrap()[0], 1.0 / 3.0);
        assert_eq!(back.column("Fwy").unwrap(), &[8.1, 0.0]);
    }

    #[test]
    fn rejects_non_monotone_time() {
        let text = "t,q1\n0.0,1.0\n0.0,2.0\n";
        assert!(read_log(text.as_bytes()).is_err());
    }
}
