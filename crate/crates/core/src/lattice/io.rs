//! State snapshots: a one-line JSON header followed by either raw
//! little-endian `f64` data (`u` then `v`) or CSV rows.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LatticeState;
use crate::error::{Error, Result};
use crate::fft::coords;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    pub eps: f64,
    pub time: f64,
    pub layout: String,
}

const BINARY_LAYOUT: &str = "f64le:u,v:wrapped";

pub fn write_snapshot(path: impl AsRef<Path>, state: &LatticeState, time: f64) -> Result<()> {
    let header = SnapshotHeader {
        n: state.n,
        eps: state.eps,
        time,
        layout: BINARY_LAYOUT.into(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for x in state.u.iter().chain(&state.v) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(SnapshotHeader, LatticeState)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim())?;
    if header.layout != BINARY_LAYOUT {
        return Err(Error::Parse(format!(
            "unsupported layout {}",
            header.layout
        )));
    }
    let len = header.n.pow(3);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * len {
        return Err(Error::GridMismatch {
            expected: 16 * len,
            got: bytes.len(),
        });
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let state = LatticeState::new(header.n, vals[..len].to_vec(), vals[len..].to_vec())?;
    Ok((header, state))
}

pub fn write_snapshot_csv(path: impl AsRef<Path>, state: &LatticeState, time: f64) -> Result<()> {
    let header = SnapshotHeader {
        n: state.n,
        eps: state.eps,
        time,
        layout: "csv:g1,g2,g3,u,v".into(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# {}", serde_json::to_string(&header)?)?;
    writeln!(w, "g1,g2,g3,u,v")?;
    for i in 0..state.u.len() {
        let c = coords(i, state.n);
        writeln!(
            w,
            "{},{},{},{:e},{:e}",
            c[0], c[1], c[2], state.u[i], state.v[i]
        )?;
    }
    w.flush()?;
    Ok(())
}
