//! Structured-grid mesh export.

use super::SurfacePatch;
use crate::geometry::V3;
use std::io::{self, Write};

/// Chart positions on the `nu × nv` grid, row-major in v.
pub fn vertices(patch: &SurfacePatch, nu: usize, nv: usize) -> Vec<V3> {
    patch.grid(nu, nv).into_iter().map(|(u, v)| patch.point(u, v)).collect()
}

fn quads(nu: usize, nv: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..nv.saturating_sub(1)).flat_map(move |j| {
        (0..nu.saturating_sub(1)).map(move |i| {
            let a = j * nu + i;
            [a, a + 1, a + 1 + nu, a + nu]
        })
    })
}

/// Wavefront OBJ with quad faces.
pub fn write_obj<W: Write>(w: &mut W, verts: &[V3], nu: usize, nv: usize) -> io::Result<()> {
    for p in verts {
        writeln!(w, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
    }
    for q in quads(nu, nv) {
        writeln!(w, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1)?;
    }
    Ok(())
}

/// Binary little-endian PLY with float64 positions and an optional float64 `quality`.
pub fn write_ply<W: Write>(w: &mut W, verts: &[V3], nu: usize, nv: usize, quality: Option<&[f64]>) -> io::Result<()> {
    if let Some(q) = quality {
        assert_eq!(q.len(), verts.len(), "one quality value per vertex");
    }
    let nfaces = nu.saturating_sub(1) * nv.saturating_sub(1);
    write!(w, "ply\nformat binary_little_endian 1.0\nelement vertex {}\n", verts.len())?;
    write!(w, "property double x\nproperty double y\nproperty double z\n")?;
    if quality.is_some() {
        writeln!(w, "property double quality")?;
    }
    write!(w, "element face {nfaces}\nproperty list uchar int vertex_indices\nend_header\n")?;
    for (k, p) in verts.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            w.write_all(&c.to_le_bytes())?;
        }
        if let Some(q) = quality {
            w.write_all(&q[k].to_le_bytes())?;
        }
    }
    for q in quads(nu, nv) {
        w.write_all(&[4u8])?;
        for i in q {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    Ok(())
}
