use std::io::{Read, Write};

use danm_core::Method;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const RUNTIME_HEADER: [&str; 5] = ["n", "method", "wall_seconds", "iterations", "converged"];
pub const MSE_HEADER: [&str; 5] = ["snr_db", "method", "mse", "trials", "excluded"];

/// One timed solve. A capped record has no wall time and was never run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRecord {
    pub n: usize,
    pub method: Method,
    pub wall_seconds: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub capped: bool,
}

impl RuntimeRecord {
    pub fn timed(n: usize, method: Method, wall_seconds: f64, iterations: usize, converged: bool) -> Self {
        Self { n, method, wall_seconds: Some(wall_seconds.max(0.0)), iterations, converged, capped: false }
    }

    pub fn capped(n: usize) -> Self {
        Self { n, method: Method::Vectorized, wall_seconds: None, iterations: 0, converged: false, capped: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRecord {
    pub snr_db: f64,
    pub method: Method,
    /// Mean over included trials; NaN if every trial was excluded.
    pub mse: f64,
    pub trials: usize,
    pub excluded: usize,
}

/// Writes runtime records; capped rows leave `wall_seconds` empty and put
/// `capped` in the `converged` column.
pub fn write_runtime_csv<W: Write>(records: &[RuntimeRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RUNTIME_HEADER)?;
    for r in records {
        out.write_record([
            r.n.to_string(),
            r.method.to_string(),
            r.wall_seconds.map(|t| t.to_string()).unwrap_or_default(),
            r.iterations.to_string(),
            if r.capped { "capped".to_string() } else { r.converged.to_string() },
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mse_csv<W: Write>(records: &[MseRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MSE_HEADER)?;
    for r in records {
        out.write_record([
            r.snr_db.to_string(),
            r.method.to_string(),
            r.mse.to_string(),
            r.trials.to_string(),
            r.excluded.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, want: &[&str; 5]) -> Result<()> {
    let got = rdr.headers()?.clone();
    if got.iter().ne(want.iter().copied()) {
        return Err(BenchError::Invalid(format!("unexpected CSV header {:?}, want {}", got, want.join(","))));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| BenchError::Invalid(format!("line {}: cannot parse column {i} value '{raw}'", rec.position().map_or(0, |p| p.line()))))
}

pub fn read_runtime_csv<R: Read>(r: R) -> Result<Vec<RuntimeRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &RUNTIME_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let n: usize = field(&rec, 0)?;
        let method: Method = field(&rec, 1)?;
        if &rec[4] == "capped" {
            out.push(RuntimeRecord::capped(n));
            continue;
        }
        out.push(RuntimeRecord::timed(n, method, field(&rec, 2)?, field(&rec, 3)?, field(&rec, 4)?));
    }
    Ok(out)
}

pub fn read_mse_csv<R: Read>(r: R) -> Result<Vec<MseRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &MSE_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(MseRecord {
            snr_db: field(&rec, 0)?,
            method: field(&rec, 1)?,
            mse: field(&rec, 2)?,
            trials: field(&rec, 3)?,
            excluded: field(&rec, 4)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runtime_round_trip() {
        let recs = vec![
            RuntimeRecord::timed(8, Method::Decoupled, 0.012, 120, true),
            RuntimeRecord::timed(8, Method::Vectorized, 0.25, 200, false),
            RuntimeRecord::capped(32),
        ];
        let mut buf = Vec::new();
        write_runtime_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "n,method,wall_seconds,iterations,converged\n8,decoupled,0.012,120,true\n8,vectorized,0.25,200,false\n32,vectorized,,0,capped\n"
        );
        assert_eq!(read_runtime_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn mse_round_trip() {
        let recs = vec![MseRecord { snr_db: 10.0, method: Method::Vectorized, mse: 1.5e-6, trials: 20, excluded: 1 }];
        let mut buf = Vec::new();
        write_mse_csv(&recs, &mut buf).unwrap();
        assert!(buf.starts_with(b"snr_db,method,mse,trials,excluded\n10,vectorized,0.0000015,20,1\n"));
        assert_eq!(read_mse_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_mse_csv("a,b,c,d,e\n".as_bytes()).is_err());
    }
}
