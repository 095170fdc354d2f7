//! `trace.csv`: one row per tick, `t,y_r,y_p,e,u_p,u_p_1..u_p_m,phi_1..phi_m`.
//! Values use 17 significant digits so parsing restores every f64 exactly.

use std::io::{Read, Write};

use bcast_core::simulator::SimTrace;

use crate::error::CliError;

pub fn header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "y_r", "y_p", "e", "u_p"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=m).map(|i| format!("u_p_{i}")));
    h.extend((1..=m).map(|i| format!("phi_{i}")));
    h
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("trace.csv: {e}"))
}

pub fn write_trace<W: Write>(trace: &SimTrace, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(trace.m())).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::with_capacity(5 + 2 * trace.m());
    for k in 0..trace.len() {
        row.clear();
        for v in [trace.t[k], trace.y_r[k], trace.y_p[k], trace.e[k], trace.u_p[k]] {
            row.push(format!("{v:.16e}"));
        }
        row.extend(trace.u_agents.iter().map(|c| format!("{:.16e}", c[k])));
        row.extend(trace.phi.iter().map(|c| format!("{:.16e}", c[k])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("trace.csv: {e}")))?;
    Ok(())
}

/// Parses a trace written by [`write_trace`]. `dt` is recovered from the
/// second row (`t[1] = dt` exactly).
pub fn read_trace<R: Read>(input: R) -> Result<SimTrace, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers().map_err(csv_err)?.clone();
    let cols = head.len();
    if cols < 5 || (cols - 5) % 2 != 0 {
        return Err(CliError::Runtime(format!("trace.csv: unexpected column count {cols}")));
    }
    let m = (cols - 5) / 2;
    if head.iter().ne(header(m).iter().map(String::as_str)) {
        return Err(CliError::Runtime("trace.csv: unexpected header".into()));
    }
    let mut trace = SimTrace {
        dt: 0.0,
        t: Vec::new(),
        y_r: Vec::new(),
        y_p: Vec::new(),
        e: Vec::new(),
        u_p: Vec::new(),
        u_agents: vec![Vec::new(); m],
        phi: vec![Vec::new(); m],
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Runtime(format!("trace.csv row {}: {e}", line + 2)))?;
        trace.t.push(v[0]);
        trace.y_r.push(v[1]);
        trace.y_p.push(v[2]);
        trace.e.push(v[3]);
        trace.u_p.push(v[4]);
        for i in 0..m {
            trace.u_agents[i].push(v[5 + i]);
            trace.phi[i].push(v[5 + m + i]);
        }
    }
    if trace.t.len() >= 2 {
        trace.dt = trace.t[1] - trace.t[0];
    }
    Ok(trace)
}
