//! CSV emission. Numbers carry 12 significant digits and rows end in LF.

use std::io::Write;
use std::path::Path;

use hxreg::{Profile, RegulatorParams, Sample, SimTrace, Snapshot};

use crate::CliError;

/// Shortest rendering of `v` to 12 significant digits, switching to
/// exponent form outside `[1e-5, 1e12)`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    s
}

pub fn trace_header(exo_dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "y", "ym", "yr", "e", "d", "u_ff", "eps"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=exo_dim).map(|j| format!("w_{j}")));
    h.extend((1..=exo_dim).map(|j| format!("rw_{j}")));
    h
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_trace_to<W: Write>(trace: &SimTrace, w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(trace_header(trace.exo_dim()))?;
    for k in 0..trace.len() {
        let fixed = [trace.times[k], trace.y[k], trace.y_m[k], trace.y_r[k], trace.e[k], trace.d[k], trace.u_ff[k], trace.eps[k]];
        let row = fixed
            .iter()
            .chain(&trace.w[k])
            .chain(&trace.r_w[k])
            .map(|v| format_sig(*v));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace(trace: &SimTrace, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_trace_to(trace, std::io::BufWriter::new(file)).map_err(io(path))
}

/// Reads a trace written by [`write_trace`]; `e` is taken from the file.
pub fn read_trace(path: &Path) -> Result<SimTrace, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(io(path))?;
    let header = rdr.headers().map_err(io(path))?.clone();
    let n = header.len().saturating_sub(8) / 2;
    if header.iter().collect::<Vec<_>>() != trace_header(n) {
        return Err(CliError::Io(format!("{}: unexpected header", path.display())));
    }
    let mut trace = SimTrace::with_capacity(n, 0);
    for rec in rdr.records() {
        let rec = rec.map_err(io(path))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Io(format!("{}: {e}", path.display()))))
            .collect::<Result<_, _>>()?;
        trace.push(Sample {
            t: v[0],
            y: v[1],
            y_m: v[2],
            y_r: v[3],
            d: v[5],
            u_ff: v[6],
            eps: v[7],
            w: &v[8..8 + n],
            r_w: &v[8 + n..],
        });
        *trace.e.last_mut().expect("just pushed") = v[4];
    }
    Ok(trace)
}

fn write_columns(path: &Path, header: Vec<String>, columns: &[&[f64]]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = writer(std::io::BufWriter::new(file));
    out.write_record(header).map_err(io(path))?;
    let rows = columns.first().map_or(0, |c| c.len());
    for k in 0..rows {
        out.write_record(columns.iter().map(|c| format_sig(c[k]))).map_err(io(path))?;
    }
    out.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Columns `z, Pi_1..Pi_n, Pi0_1..Pi0_n, k`.
pub fn write_profiles(params: &RegulatorParams, path: &Path) -> Result<(), CliError> {
    let z: Vec<f64> = params.k_profile.grid().points().collect();
    let n = params.pi.len();
    let mut header = vec!["z".to_string()];
    header.extend((1..=n).map(|j| format!("Pi_{j}")));
    header.extend((1..=n).map(|j| format!("Pi0_{j}")));
    header.push("k".into());
    let mut cols: Vec<&[f64]> = vec![&z];
    cols.extend(params.pi.iter().map(Profile::values));
    cols.extend(params.pi0.iter().map(Profile::values));
    cols.push(params.k_profile.values());
    write_columns(path, header, &cols)
}

pub fn write_snapshot(snap: &Snapshot, path: &Path) -> Result<(), CliError> {
    let z: Vec<f64> = snap.x.grid().points().collect();
    write_columns(path, vec!["z".into(), "x".into()], &[&z, snap.x.values()])
}
