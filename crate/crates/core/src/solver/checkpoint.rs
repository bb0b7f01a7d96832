//! State dumps: a grid header followed by one value array per species.
//!
//! Binary layout (little endian): magic `FRCK`, `u32` version, `u32` dims,
//! `u32` points per axis, `f64` extent, `f64` time, `u32` species, then
//! `species * n^dims` `f64` values.

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::report::fmt_f64;
use crate::spectral::{make_grid, Field, Grid};

const MAGIC: &[u8; 4] = b"FRCK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

/// A state at a given time, sufficient to resume a run.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub time: f64,
    pub state: Vec<Field>,
}

fn format_err(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

impl Checkpoint {
    fn grid(&self) -> &Grid {
        self.state[0].grid()
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<(), CheckpointError> {
        let g = self.grid();
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(g.dims() as u32).to_le_bytes())?;
        out.write_all(&(g.points_per_axis() as u32).to_le_bytes())?;
        out.write_all(&g.extent().to_le_bytes())?;
        out.write_all(&self.time.to_le_bytes())?;
        out.write_all(&(self.state.len() as u32).to_le_bytes())?;
        for f in &self.state {
            for v in f.values() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(format_err("bad magic"));
        }
        let mut u32_buf = [0u8; 4];
        let mut f64_buf = [0u8; 8];
        let mut read_u32 = |input: &mut R| -> Result<u32, CheckpointError> {
            input.read_exact(&mut u32_buf)?;
            Ok(u32::from_le_bytes(u32_buf))
        };
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(format_err(format!("unsupported version {version}")));
        }
        let dims = read_u32(&mut input)? as usize;
        let n = read_u32(&mut input)? as usize;
        input.read_exact(&mut f64_buf)?;
        let extent = f64::from_le_bytes(f64_buf);
        input.read_exact(&mut f64_buf)?;
        let time = f64::from_le_bytes(f64_buf);
        let species = read_u32(&mut input)? as usize;
        let grid = make_grid(dims, extent, n).map_err(|e| format_err(e.to_string()))?;
        if species == 0 {
            return Err(format_err("no species"));
        }
        let mut state = Vec::with_capacity(species);
        for _ in 0..species {
            let mut values = vec![0.0; grid.len()];
            for v in values.iter_mut() {
                input.read_exact(&mut f64_buf)?;
                *v = f64::from_le_bytes(f64_buf);
            }
            state.push(Field::new(&grid, values).map_err(|e| format_err(e.to_string()))?);
        }
        Ok(Self { time, state })
    }

    /// CSV dump: a `# dims,points,extent,time,species` comment header, then
    /// a `node,u1,...,um` table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), CheckpointError> {
        let g = self.grid();
        writeln!(out, "# dims,points,extent,time,species")?;
        writeln!(
            out,
            "# {},{},{},{},{}",
            g.dims(),
            g.points_per_axis(),
            fmt_f64(g.extent()),
            fmt_f64(self.time),
            self.state.len()
        )?;
        let mut header = vec!["node".to_string()];
        header.extend((1..=self.state.len()).map(|i| format!("u{i}")));
        writeln!(out, "{}", header.join(","))?;
        for node in 0..g.len() {
            let mut row = vec![node.to_string()];
            row.extend(self.state.iter().map(|f| fmt_f64(f.values()[node])));
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, CheckpointError> {
        let mut lines = BufReader::new(input).lines();
        let mut next = || -> Result<String, CheckpointError> {
            lines.next().ok_or_else(|| format_err("truncated"))?.map_err(Into::into)
        };
        next()?;
        let meta = next()?;
        let parts: Vec<&str> = meta.trim_start_matches('#').trim().split(',').collect();
        if parts.len() != 5 {
            return Err(format_err("bad header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format_err(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| format_err(format!("bad integer {s:?}")));
        let grid = make_grid(int(parts[0])?, num(parts[2])?, int(parts[1])?)
            .map_err(|e| format_err(e.to_string()))?;
        let time = num(parts[3])?;
        let species = int(parts[4])?;
        next()?;
        let mut values = vec![vec![0.0; grid.len()]; species];
        for node in 0..grid.len() {
            let line = next()?;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != species + 1 || int(cols[0])? != node {
                return Err(format_err(format!("bad row for node {node}")));
            }
            for (i, c) in cols[1..].iter().enumerate() {
                values[i][node] = num(c)?;
            }
        }
        let state = values
            .into_iter()
            .map(|v| Field::new(&grid, v).map_err(|e| format_err(e.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Self { time, state })
    }
}
