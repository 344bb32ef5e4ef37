//! CSV formats for driver paths and solutions.
//!
//! Driver paths: `t,z1,...,zd,is_jump`. Solutions: `t,x1..xd,k1..kd,kvar`.
//! Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use crate::driver::{GridPath, Interp, Jump};
use crate::error::{Error, Result};
use crate::schemes::SchemeOutput;
use crate::skorokhod::SkorokhodSolution;
use crate::Point;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn path_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=d).map(|i| format!("z{i}")));
    h.push("is_jump".into());
    h
}

pub fn write_path_csv<W: Write>(z: &GridPath, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(path_header(z.dim())).map_err(csv_err)?;
    let mut jumps = z.jumps().iter().map(|j| j.index).peekable();
    for (i, (t, v)) in z.times().iter().zip(z.values()).enumerate() {
        let is_jump = if jumps.peek() == Some(&i) {
            jumps.next();
            "1"
        } else {
            "0"
        };
        let mut rec = vec![t.to_string()];
        rec.extend(v.iter().map(|x| x.to_string()));
        rec.push(is_jump.into());
        wr.write_record(rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a driver path. Rows flagged `is_jump = 1` record the full
/// increment into that row as the jump; the path is read as a step path.
pub fn read_path_csv<R: Read>(r: R) -> Result<GridPath> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
    if header.len() < 3 {
        return Err(Error::Parse(format!("header too short: {header:?}")));
    }
    let d = header.len() - 2;
    if header != path_header(d) {
        return Err(Error::Parse(format!("expected header {:?}, got {header:?}", path_header(d).join(","))));
    }
    let mut times = Vec::new();
    let mut values: Vec<Point> = Vec::new();
    let mut jumps = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != d + 2 {
            return Err(Error::Parse(format!("row {}: expected {} fields, got {}", row + 1, d + 2, rec.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", row + 1)));
        let t = num(&rec[0])?;
        let v = Point::from_iterator(d, (1..=d).map(|i| num(&rec[i])).collect::<Result<Vec<_>>>()?);
        let flag = &rec[d + 1];
        let is_jump = match flag {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("row {}: is_jump must be 0 or 1, got {other:?}", row + 1))),
        };
        if is_jump {
            let prev = values.last().ok_or_else(|| Error::Parse("first row cannot be a jump".into()))?;
            jumps.push(Jump { index: times.len(), size: &v - prev });
        }
        times.push(t);
        values.push(v);
    }
    if times.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    GridPath::new(times, values, Interp::CadlagStep, jumps).map_err(|e| Error::Parse(e.to_string()))
}

pub fn solution_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=d).map(|i| format!("x{i}")));
    h.extend((1..=d).map(|i| format!("k{i}")));
    h.push("kvar".into());
    h
}

fn write_xk<W: Write>(x: &GridPath, k: &GridPath, kvar: &[f64], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(solution_header(x.dim())).map_err(csv_err)?;
    for (i, t) in x.times().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(x.values()[i].iter().map(|v| v.to_string()));
        rec.extend(k.values()[i].iter().map(|v| v.to_string()));
        rec.push(kvar[i].to_string());
        wr.write_record(rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_solution_csv<W: Write>(sol: &SkorokhodSolution, w: W) -> Result<()> {
    write_xk(&sol.x, &sol.k, &sol.k_variation, w)
}

pub fn write_output_csv<W: Write>(out: &SchemeOutput, w: W) -> Result<()> {
    write_xk(&out.x, &out.k, &out.k_variation, w)
}
