use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Backend;
use crate::model::PhaseState;

pub const SNAPSHOT_MAGIC: &str = "RAFTSNAP 1";

pub fn snapshot_file_name(index: usize) -> String {
    format!("snap_{index:04}.txt")
}

/// Serialize a state. The time is not stored.
pub fn format_snapshot(backend: Backend, state: &PhaseState) -> String {
    let ns = state.phi.len();
    let nb = state.u.len();
    let mut out = String::with_capacity(80 * (ns + nb) + 64);
    out.push_str(SNAPSHOT_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "{backend} {ns} {nb}");
    for i in 0..ns {
        let _ = writeln!(
            out,
            "{i} {:.16e} {:.16e} {:.16e} {:.16e}",
            state.phi[i], state.v[i], state.mu[i], state.theta[i]
        );
    }
    for (j, u) in state.u.iter().enumerate() {
        let _ = writeln!(out, "{j} {u:.16e}");
    }
    out
}

pub fn write_snapshot(path: &Path, backend: Backend, state: &PhaseState) -> Result<()> {
    std::fs::write(path, format_snapshot(backend, state)).map_err(|e| Error::io(path, e))
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<(Backend, PhaseState)> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == SNAPSHOT_MAGIC => {}
        _ => return Err(err(1, format!("expected `{SNAPSHOT_MAGIC}`"))),
    }
    let (ln, header) = lines
        .next()
        .ok_or_else(|| err(2, "missing header".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(err(ln, "expected `backend n_surface n_bulk`".into()));
    }
    let backend: Backend = parts[0]
        .parse()
        .map_err(|e: Error| err(ln, e.to_string()))?;
    let ns: usize = parts[1]
        .parse()
        .map_err(|_| err(ln, format!("bad count `{}`", parts[1])))?;
    let nb: usize = parts[2]
        .parse()
        .map_err(|_| err(ln, format!("bad count `{}`", parts[2])))?;

    let mut state = PhaseState::zeros(ns, nb);
    let mut read_row = |expected_idx: usize, width: usize| -> Result<Vec<f64>> {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(0, "unexpected end of file".into()))?;
        let mut it = line.split_whitespace();
        let idx: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(ln, "missing index".into()))?;
        if idx != expected_idx {
            return Err(err(ln, format!("index {idx}, expected {expected_idx}")));
        }
        let vals: Vec<f64> = it
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| err(ln, format!("bad number `{s}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(err(
                ln,
                format!("expected {width} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };
    for i in 0..ns {
        let v = read_row(i, 4)?;
        state.phi[i] = v[0];
        state.v[i] = v[1];
        state.mu[i] = v[2];
        state.theta[i] = v[3];
    }
    for j in 0..nb {
        state.u[j] = read_row(j, 1)?[0];
    }
    if let Some((ln, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(ln, format!("trailing content `{l}`")));
    }
    Ok((backend, state))
}

pub fn read_snapshot(path: &Path) -> Result<(Backend, PhaseState)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}
