//! Deterministic text export: CSV writers for curves, traces, and grid
//! functions, plus a minimal OBJ writer for meshes.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips f64 exactly and makes identical inputs
//! produce byte-identical files.

use crate::film::{GridFunction, SurfaceMesh};
use crate::rod::FramedCurve;
use crate::topology::Polyline;
use crate::Result;
use std::io::Write;

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `s,x,y,z,tx,ty,tz,dx,dy,dz` — one row per curve sample.
pub fn write_framed_curve_csv(out: &mut dyn Write, c: &FramedCurve) -> std::io::Result<()> {
    writeln!(out, "s,x,y,z,tx,ty,tz,dx,dy,dz")?;
    for (i, s) in c.samples().iter().enumerate() {
        let arc = i as f64 * c.arc_step();
        let (x, t, d) = (s.x, s.t(), s.d());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt(arc),
            fmt(x.x),
            fmt(x.y),
            fmt(x.z),
            fmt(t.x),
            fmt(t.y),
            fmt(t.z),
            fmt(d.x),
            fmt(d.y),
            fmt(d.z)
        )?;
    }
    Ok(())
}

/// `x,y,z` rows; the closed flag travels in the experiment config, not here.
pub fn write_polyline_csv(out: &mut dyn Write, p: &Polyline) -> std::io::Result<()> {
    writeln!(out, "x,y,z")?;
    for v in p.points() {
        writeln!(out, "{},{},{}", fmt(v.x), fmt(v.y), fmt(v.z))?;
    }
    Ok(())
}

/// OBJ with `v` and 1-based `f` lines only.
pub fn write_obj(out: &mut dyn Write, mesh: &SurfaceMesh) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", fmt(v.x), fmt(v.y), fmt(v.z))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// Film/graph solver trace: `iter,objective,grad_norm,flag`.
pub fn write_solver_trace_csv(
    out: &mut dyn Write,
    rows: &[(usize, f64, f64, &str)],
) -> std::io::Result<()> {
    writeln!(out, "iter,objective,grad_norm,flag")?;
    for (it, obj, g, flag) in rows {
        writeln!(out, "{},{},{},{}", it, fmt(*obj), fmt(*g), flag)?;
    }
    Ok(())
}

/// Minimal-graph solution dump: `i,j,x,y,u`.
pub fn write_grid_csv(out: &mut dyn Write, g: &GridFunction) -> std::io::Result<()> {
    writeln!(out, "i,j,x,y,u")?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.xy(i, j);
            writeln!(out, "{},{},{},{},{}", i, j, fmt(x), fmt(y), fmt(g.at(i, j)))?;
        }
    }
    Ok(())
}

/// Write a file atomically-ish: build the bytes in memory, then one write.
pub fn write_file(path: &std::path::Path, build: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    build(&mut buf)?;
    std::fs::write(path, &buf)
        .map_err(|e| crate::Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{reconstruct_frame, RodConfig};
    use nalgebra::Point3;

    #[test]
    fn framed_curve_csv_shape() {
        let c = reconstruct_frame(&RodConfig::circle(1.0, 8).unwrap(), 16).unwrap();
        let mut buf = Vec::new();
        write_framed_curve_csv(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s,x,y,z,tx,ty,tz,dx,dy,dz");
        assert_eq!(lines.len(), 1 + 17);
        assert_eq!(lines[1].split(',').count(), 10);
        // 17 significant digits are present.
        assert!(lines[1].contains("e0") || lines[1].contains("e-"));
    }

    #[test]
    fn obj_is_one_based() {
        let m = SurfaceMesh::from_triangles(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_obj(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("f 1 2 3"));
        assert_eq!(text.lines().filter(|l| l.starts_with('v')).count(), 3);
    }

    #[test]
    fn identical_input_identical_bytes() {
        let c = reconstruct_frame(&RodConfig::circle(2.0, 12).unwrap(), 24).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_framed_curve_csv(&mut a, &c).unwrap();
        write_framed_curve_csv(&mut b, &c).unwrap();
        assert_eq!(a, b);
    }
}
