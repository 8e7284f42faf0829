//! Artifact serialization: wave snapshots as CSV, binary checkpoints, and
//! trajectory tables. All floats are written with 17 significant digits so a
//! round trip through text is bit-exact.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::bohm::{Trajectory, TrajectoryStatus};
use crate::error::{Error, Result};
use crate::evolution::CoveringWave;
use crate::factor::TopologicalFactor;
use crate::geometry::Geometry;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CWAVE01\0";
const DESCRIPTOR_LEN: usize = 64;

/// `{:.16e}` carries 17 significant digits: round-trip-exact for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn factor_summary(factor: &TopologicalFactor) -> String {
    match factor {
        TopologicalFactor::Character(c) => {
            let z = c.phases.first().copied().unwrap_or(Complex64::new(1.0, 0.0));
            format!("character beta={}", fmt_f64(z.arg()))
        }
        TopologicalFactor::UnitaryRep(rep) => format!("unitary-rep dim={}", rep.dim),
        TopologicalFactor::Section(s) => format!("section dim={}", s.dim()),
    }
}

/// Wave snapshot CSV: `r,theta,re,im[,re2,im2]` with a comment header
/// carrying time, norm and the factor parameters.
pub fn write_wave_csv<W: Write>(out: &mut W, psi: &CoveringWave) -> Result<()> {
    writeln!(
        out,
        "# time={} norm={} factor={}",
        fmt_f64(psi.time),
        fmt_f64(psi.norm()),
        factor_summary(&psi.factor)
    )?;
    let f = psi.fiber_dim;
    let mut header = String::from("r,theta");
    for s in 0..f {
        if s == 0 {
            header.push_str(",re,im");
        } else {
            header.push_str(&format!(",re{},im{}", s + 1, s + 1));
        }
    }
    writeln!(out, "{header}")?;
    let grid = &psi.grid;
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            let node = grid.idx(i, j);
            let mut line = format!("{},{}", fmt_f64(grid.r_nodes[i]), fmt_f64(grid.theta_nodes[j]));
            for s in 0..f {
                let z = psi.values[node * f + s];
                line.push_str(&format!(",{},{}", fmt_f64(z.re), fmt_f64(z.im)));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Binary checkpoint: 64-byte descriptor (magic, n_r, n_theta, fiber_dim as
/// little-endian u64, time as little-endian f64, zero padding) followed by
/// the node-major interleaved re/im doubles.
pub fn write_checkpoint<W: Write>(out: &mut W, psi: &CoveringWave) -> Result<()> {
    let mut descriptor = [0u8; DESCRIPTOR_LEN];
    descriptor[..8].copy_from_slice(CHECKPOINT_MAGIC);
    descriptor[8..16].copy_from_slice(&(psi.grid.n_r as u64).to_le_bytes());
    descriptor[16..24].copy_from_slice(&(psi.grid.n_theta as u64).to_le_bytes());
    descriptor[24..32].copy_from_slice(&(psi.fiber_dim as u64).to_le_bytes());
    descriptor[32..40].copy_from_slice(&psi.time.to_le_bytes());
    out.write_all(&descriptor)?;
    let mut buf = Vec::with_capacity(psi.values.len() * 16);
    for z in &psi.values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a checkpoint back into a wave over the given geometry and factor.
/// Dimensions must match the geometry's grid.
pub fn read_checkpoint<R: Read>(
    input: &mut R,
    geometry: Geometry,
    factor: TopologicalFactor,
) -> Result<CoveringWave> {
    let mut descriptor = [0u8; DESCRIPTOR_LEN];
    input.read_exact(&mut descriptor).map_err(|_| {
        Error::Checkpoint("file shorter than the 64-byte descriptor".into())
    })?;
    if &descriptor[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let u = |range: std::ops::Range<usize>| {
        u64::from_le_bytes(descriptor[range].try_into().unwrap()) as usize
    };
    let (n_r, n_theta, fiber_dim) = (u(8..16), u(16..24), u(24..32));
    let time = f64::from_le_bytes(descriptor[32..40].try_into().unwrap());

    let mut psi = CoveringWave::zero(geometry, factor)?;
    if n_r != psi.grid.n_r || n_theta != psi.grid.n_theta || fiber_dim != psi.fiber_dim {
        return Err(Error::Checkpoint(format!(
            "dimensions {n_r}x{n_theta}x{fiber_dim} do not match geometry {}x{}x{}",
            psi.grid.n_r, psi.grid.n_theta, psi.fiber_dim
        )));
    }
    let mut buf = vec![0u8; psi.values.len() * 16];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("truncated payload".into()))?;
    for (k, z) in psi.values.iter_mut().enumerate() {
        let re = f64::from_le_bytes(buf[k * 16..k * 16 + 8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[k * 16 + 8..k * 16 + 16].try_into().unwrap());
        *z = Complex64::new(re, im);
    }
    psi.time = time;
    Ok(psi)
}

pub fn status_label(status: TrajectoryStatus) -> &'static str {
    match status {
        TrajectoryStatus::Completed => "completed",
        TrajectoryStatus::HitNodalRegion => "hit_nodal_region",
        TrajectoryStatus::LeftDomain => "left_domain",
    }
}

/// Trajectory table: `traj_id,t,coord1,coord2,winding,status`, one row per
/// recorded sample.
pub fn write_trajectories_csv<W: Write>(out: &mut W, trajectories: &[Trajectory]) -> Result<()> {
    writeln!(out, "traj_id,t,coord1,coord2,winding,status")?;
    for (id, traj) in trajectories.iter().enumerate() {
        let label = status_label(traj.status);
        for s in &traj.samples {
            writeln!(
                out,
                "{id},{},{},{},{},{label}",
                fmt_f64(s.t),
                fmt_f64(s.r),
                fmt_f64(s.theta),
                s.winding
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn packet() -> CoveringWave {
        let g = Geometry::ring(1.0, 32);
        CoveringWave::gaussian_packet(
            g,
            TopologicalFactor::phase(PI / 3.0),
            (1.0, PI),
            (0.3, 0.5),
            (0.0, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut psi = packet();
        psi.time = 0.625;
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &psi).unwrap();
        assert_eq!(buf.len(), 64 + psi.values.len() * 16);
        let back = read_checkpoint(
            &mut buf.as_slice(),
            psi.geometry,
            psi.factor.clone(),
        )
        .unwrap();
        assert_eq!(back.time.to_bits(), psi.time.to_bits());
        for (a, b) in back.values.iter().zip(&psi.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let psi = packet();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &psi).unwrap();
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_checkpoint(&mut bad_magic.as_slice(), psi.geometry, psi.factor.clone()),
            Err(Error::Checkpoint(_))
        ));
        let truncated = &buf[..buf.len() - 8];
        assert!(matches!(
            read_checkpoint(&mut &truncated[..], psi.geometry, psi.factor.clone()),
            Err(Error::Checkpoint(_))
        ));
        let wrong_geom = Geometry::ring(1.0, 64);
        assert!(matches!(
            read_checkpoint(&mut buf.as_slice(), wrong_geom, psi.factor.clone()),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn wave_csv_shape_and_precision() {
        let psi = packet();
        let mut buf = Vec::new();
        write_wave_csv(&mut buf, &psi).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# time=") && lines[0].contains("norm="));
        assert_eq!(lines[1], "r,theta,re,im");
        assert_eq!(lines.len(), 2 + 32);
        // 17 significant digits round-trip exactly
        let first_re: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(first_re.to_bits(), psi.values[0].re.to_bits());
    }

    #[test]
    fn trajectory_csv_rows_match_samples() {
        use crate::bohm::integrate_trajectory;
        let psi = packet();
        let field = crate::bohm::VelocityField::from_wave(&psi).unwrap();
        let traj = integrate_trajectory(
            &field,
            &psi.geometry,
            crate::geometry::CoverPoint::new(1.0, PI, 0),
            0.0,
            0.1,
            1e-2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, std::slice::from_ref(&traj)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + traj.samples.len());
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
        assert!(text.trim_end().ends_with("completed"));
    }
}
