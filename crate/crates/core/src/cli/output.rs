//! Artifact writers: CSV, plain PGM and JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::reconstruction::IndicatorGrid;

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Columns `x, y, W_picard, W_inf`; `W_inf` is empty when not computed.
pub fn write_indicator_csv<W: Write>(grid: &IndicatorGrid, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "W_picard", "W_inf"])?;
    for (i, p) in grid.grid.points().iter().enumerate() {
        let inf = grid
            .inf_values
            .as_ref()
            .map(|v| format!("{:e}", v[i]))
            .unwrap_or_default();
        wr.write_record([
            format!("{:e}", p[0]),
            format!("{:e}", p[1]),
            format!("{:e}", grid.picard_values[i]),
            inf,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Plain PGM heatmap of the Picard field, scaled linearly to `0..=255`,
/// top row at the largest `y`.
pub fn write_pgm<W: Write>(grid: &IndicatorGrid, mut w: W) -> Result<()> {
    let n = grid.grid.resolution();
    let v = &grid.picard_values;
    let hi = v.iter().cloned().fold(0.0f64, f64::max);
    if !(hi > 0.0) || !hi.is_finite() {
        return Err(Error::Segmentation("indicator field has no positive finite maximum".into()));
    }
    writeln!(w, "P2")?;
    writeln!(w, "{n} {n}")?;
    writeln!(w, "255")?;
    for row in (0..n).rev() {
        let line: Vec<String> = (0..n)
            .map(|col| ((v[row * n + col] / hi).clamp(0.0, 1.0) * 255.0).round().to_string())
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed plain PGM: `(width, height, maxval, pixels)`.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, u32, Vec<u32>)> {
    let bad = |m: &str| Error::Validation(format!("malformed PGM: {m}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut num = |what: &str| -> Result<u64> {
        tokens
            .next()
            .ok_or_else(|| bad(what))?
            .parse::<u64>()
            .map_err(|_| bad(what))
    };
    let width = num("width")? as usize;
    let height = num("height")? as usize;
    let maxval = num("maxval")? as u32;
    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let p = num("pixel")? as u32;
        if p > maxval {
            return Err(bad("pixel above maxval"));
        }
        pixels.push(p);
    }
    if tokens.next().is_some() {
        return Err(bad("trailing data"));
    }
    Ok((width, height, maxval, pixels))
}
