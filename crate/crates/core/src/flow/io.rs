use std::io::{Read, Write};

use super::solver::{variance_balance_check, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{FourierGrid, ScalarField};

/// Flat little-endian snapshot: `u32 d, u32 N, f64 L, f64 time`, then the
/// samples row-major as `f64`.
pub fn write_snapshot(out: &mut impl Write, field: &ScalarField, time: f64) -> Result<()> {
    let g = field.grid();
    out.write_all(&(g.dim() as u32).to_le_bytes())?;
    out.write_all(&(g.n() as u32).to_le_bytes())?;
    out.write_all(&g.length().to_le_bytes())?;
    out.write_all(&time.to_le_bytes())?;
    let mut payload = Vec::with_capacity(8 * g.len());
    for v in field.values() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&payload)?;
    Ok(())
}

pub fn read_snapshot(input: &mut impl Read) -> Result<(ScalarField, f64)> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b8)?;
    let length = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let time = f64::from_le_bytes(b8);
    let grid = FourierGrid::new(length, n, dim)?;
    let mut payload = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut payload)?;
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Io(format!("{} trailing bytes after snapshot", rest.len())));
    }
    Ok((ScalarField::new(&grid, values)?, time))
}

/// Diagnostics CSV `time,mean,variance,dissipation,residual`; the residual is
/// blank where the centred difference is unavailable.
pub fn write_diagnostics(out: &mut impl Write, traj: &Trajectory) -> Result<()> {
    writeln!(out, "time,mean,variance,dissipation,residual")?;
    let residual = variance_balance_check(traj).unwrap_or_default();
    let chi = traj.dissipation();
    for i in 0..traj.len() {
        write!(out, "{:.16e},{:.16e},{:.16e},{:.16e},", traj.times[i], traj.mean[i], traj.variance[i], chi[i])?;
        match i.checked_sub(1).and_then(|k| residual.get(k)) {
            Some(&(_, r)) if i + 1 < traj.len() => writeln!(out, "{r:.16e}")?,
            _ => writeln!(out)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{evolve, make_flow, FlowSpec, SimConfig};
    use crate::spectral::random_field;

    #[test]
    fn snapshot_roundtrip() {
        let g = FourierGrid::new(3.0, 16, 2).unwrap();
        let f = random_field(&g, 1, None, -1.0);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 0.25).unwrap();
        assert_eq!(buf.len(), 24 + 8 * g.len());
        let (back, t) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), &g);
        assert!(read_snapshot(&mut &buf[..100]).is_err());
    }

    #[test]
    fn diagnostics_rows() {
        let g = FourierGrid::new(1.0, 16, 2).unwrap();
        let flow = make_flow(&FlowSpec::zero(), &g).unwrap();
        let theta = random_field(&g, 1, Some((0.0, 20.0)), 0.0);
        let traj = evolve(&theta, &flow, &SimConfig::new(1e-3, 1e-2, 0.05), &mut []).unwrap();
        let mut buf = Vec::new();
        write_diagnostics(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 7);
        assert!(rows[1].ends_with(','));
        assert!(!rows[3].ends_with(','));
        assert!(rows[6].ends_with(','));
    }
}
