use std::io::Write;

use super::bands::BandSet;
use super::cover::BallCover;
use crate::error::Result;
use crate::spectral::FourierGrid;

fn header(out: &mut impl Write, dim: usize) -> Result<()> {
    let cols: Vec<String> = (1..=dim).map(|a| format!("m_{a}")).collect();
    writeln!(out, "{},l,j,value", cols.join(","))?;
    Ok(())
}

fn row(out: &mut impl Write, grid: &FourierGrid, idx: usize, band: i32, ball: i64, value: f64) -> Result<()> {
    let l = grid.lattice_index(idx);
    for c in &l[..grid.dim()] {
        write!(out, "{c},")?;
    }
    writeln!(out, "{band},{ball},{value:.16e}")?;
    Ok(())
}

/// Nonzero band multipliers as CSV rows `m_1..m_d, band, -1, value`.
pub fn write_band_multipliers(out: &mut impl Write, bands: &BandSet) -> Result<()> {
    header(out, bands.grid().dim())?;
    for band in bands.bands() {
        for (idx, &v) in bands.multiplier(band)?.iter().enumerate() {
            if v != 0.0 {
                row(out, bands.grid(), idx, band, -1, v)?;
            }
        }
    }
    Ok(())
}

/// Nonzero refined multipliers `φ_ℓψ_{ℓ,j}` as CSV rows.
pub fn write_cover_multipliers(out: &mut impl Write, cover: &BallCover) -> Result<()> {
    header(out, cover.grid().dim())?;
    let phi = cover.band_multiplier();
    for j in 0..cover.len() {
        for &(idx, psi) in cover.weights(j)? {
            let v = phi[idx] * psi;
            if v != 0.0 {
                row(out, cover.grid(), idx, cover.band(), j as i64, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_ball_cover, build_dyadic_family, DyadicProfile};
    use std::f64::consts::PI;

    #[test]
    fn csv_roundtrips_values() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let b = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        let mut buf = Vec::new();
        write_band_multipliers(&mut buf, &b).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "m_1,m_2,l,j,value");
        for line in lines.take(200) {
            let f: Vec<&str> = line.split(',').collect();
            let idx = g.flat_index(&[f[0].parse().unwrap(), f[1].parse().unwrap()]);
            let band: i32 = f[2].parse().unwrap();
            assert_eq!(f[3], "-1");
            let v: f64 = f[4].parse().unwrap();
            assert_eq!(v, b.multiplier(band).unwrap()[idx]);
        }

        let cover = build_ball_cover(&b, 2, 0.25).unwrap();
        let mut buf = Vec::new();
        write_cover_multipliers(&mut buf, &cover).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().count() > 1);
    }
}
