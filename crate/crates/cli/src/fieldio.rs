//! Binary field files: `HWLAB1`, `Lx Ly` (f64 LE), `Nx Ny` (u64 LE), then
//! `Nx*Ny` complex samples as interleaved f64 LE, row-major in x.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hwlab::{make_grid, Field};
use num_complex::Complex64;

pub const MAGIC: &[u8; 6] = b"HWLAB1";

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    encode(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let file = File::open(path).with_context(|| format!("cannot open field file {}", path.display()))?;
    decode(&mut BufReader::new(file)).with_context(|| format!("malformed field file {}", path.display()))
}

pub fn encode(w: &mut impl Write, field: &Field) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&g.lx().to_le_bytes())?;
    w.write_all(&g.ly().to_le_bytes())?;
    w.write_all(&(g.nx() as u64).to_le_bytes())?;
    w.write_all(&(g.ny() as u64).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read8(r: &mut impl Read) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).context("truncated header")?;
    Ok(b)
}

pub fn decode(r: &mut impl Read) -> Result<Field> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).context("truncated header")?;
    if &magic != MAGIC {
        bail!("bad magic {:?}, expected HWLAB1", String::from_utf8_lossy(&magic));
    }
    let lx = f64::from_le_bytes(read8(r)?);
    let ly = f64::from_le_bytes(read8(r)?);
    let nx = u64::from_le_bytes(read8(r)?) as usize;
    let ny = u64::from_le_bytes(read8(r)?) as usize;
    let grid = make_grid(lx, ly, nx, ny)?;

    let mut raw = vec![0u8; grid.len() * 16];
    r.read_exact(&mut raw)
        .with_context(|| format!("expected {} samples", grid.len()))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        bail!("trailing bytes after {} samples", grid.len());
    }
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(Field::from_values(grid, values)?)
}
