use std::f64::consts::TAU;

use super::mesh::{BulkMesh, Point, SurfaceMesh};
use crate::error::{Error, Result};

/// Closed polygon on a circle of radius `radius` and the disk it bounds.
///
/// The disk has `n_radial` rings at equally spaced radii; ring `k` carries
/// roughly `n_surface·k/n_radial` vertices (at least six) and the outer ring
/// is exactly the surface polygon.
pub fn build_circle_disk(
    n_surface: usize,
    n_radial: usize,
    radius: f64,
) -> Result<(SurfaceMesh, BulkMesh)> {
    if n_surface < 8 {
        return Err(Error::invalid(format!(
            "n_surface = {n_surface}, need at least 8"
        )));
    }
    if n_radial < 2 {
        return Err(Error::invalid(format!(
            "n_radial = {n_radial}, need at least 2"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "radius = {radius}, need a positive finite value"
        )));
    }

    let surface = SurfaceMesh::circle(n_surface, radius);

    let ring_count = |k: usize| -> usize {
        if k == n_radial {
            n_surface
        } else {
            ((n_surface * k + n_radial - 1) / n_radial).max(6)
        }
    };

    let mut positions = vec![Point::zeros()];
    let mut ring_start = vec![0usize; n_radial + 1];
    for k in 1..=n_radial {
        ring_start[k] = positions.len();
        let r = radius * k as f64 / n_radial as f64;
        let m = ring_count(k);
        if k == n_radial {
            positions.extend_from_slice(surface.positions());
        } else {
            positions.extend((0..m).map(|j| {
                let a = TAU * j as f64 / m as f64;
                Point::new(r * a.cos(), r * a.sin(), 0.0)
            }));
        }
    }

    let mut cells = Vec::new();
    let m1 = ring_count(1);
    for j in 0..m1 {
        cells.push([
            0,
            ring_start[1] + j,
            ring_start[1] + (j + 1) % m1,
            usize::MAX,
        ]);
    }
    for k in 1..n_radial {
        let (na, nb) = (ring_count(k), ring_count(k + 1));
        let (sa, sb) = (ring_start[k], ring_start[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            if j == nb || (i < na && next_a <= next_b) {
                cells.push([sa + i % na, sa + (i + 1) % na, sb + j % nb, usize::MAX]);
                i += 1;
            } else {
                cells.push([sa + i % na, sb + (j + 1) % nb, sb + j % nb, usize::MAX]);
                j += 1;
            }
        }
    }

    let trace = (0..n_surface).map(|i| ring_start[n_radial] + i).collect();
    let bulk = BulkMesh::new(2, positions, cells, trace)?;
    Ok((surface, bulk))
}
