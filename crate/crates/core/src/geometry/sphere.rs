use std::collections::HashMap;

use super::mesh::{BulkMesh, Point, SurfaceMesh};
use crate::error::{Error, Result};

pub const MAX_REFINEMENT: u32 = 6;
pub const DEFAULT_SHELLS: usize = 3;

/// The twelve vertices of the icosahedron, normalized to the unit sphere.
pub fn icosahedron_vertices() -> Vec<Point> {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect()
}

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Unit icosphere: vertices and outward-oriented triangles.
pub fn icosphere(refinement: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut verts = icosahedron_vertices();
    let mut faces: Vec<[usize; 3]> = ICOSAHEDRON_FACES.to_vec();
    for _ in 0..refinement {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Unit icosphere and a tetrahedral ball with the default number of shells.
pub fn build_sphere_ball(refinement: u32) -> Result<(SurfaceMesh, BulkMesh)> {
    build_sphere_ball_with(refinement, DEFAULT_SHELLS, 1.0)
}

/// Icosphere of the given radius and a ball made of `shells` concentric
/// layers of prisms (each split into three tetrahedra) around a central fan.
pub fn build_sphere_ball_with(
    refinement: u32,
    shells: usize,
    radius: f64,
) -> Result<(SurfaceMesh, BulkMesh)> {
    if refinement > MAX_REFINEMENT {
        return Err(Error::invalid(format!(
            "refinement = {refinement}, supported range is 0..={MAX_REFINEMENT}"
        )));
    }
    if shells < 1 {
        return Err(Error::invalid("need at least one radial shell"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "radius = {radius}, need a positive finite value"
        )));
    }
    let (unit, faces) = icosphere(refinement);
    let surface_positions: Vec<Point> = unit.iter().map(|p| p * radius).collect();
    let surface = SurfaceMesh::sphere_from_triangles(surface_positions.clone(), &faces, radius)?;

    let nv = unit.len();
    let shell_index = |k: usize, i: usize| 1 + (k - 1) * nv + i;
    let mut positions = Vec::with_capacity(1 + shells * nv);
    positions.push(Point::zeros());
    for k in 1..=shells {
        if k == shells {
            positions.extend_from_slice(&surface_positions);
        } else {
            let r = radius * k as f64 / shells as f64;
            positions.extend(unit.iter().map(|p| p * r));
        }
    }

    let mut cells = Vec::with_capacity(faces.len() * (3 * shells - 2));
    for face in &faces {
        let mut s = *face;
        s.sort_unstable();
        let [a, b, c] = s.map(|i| shell_index(1, i));
        cells.push([0, a, b, c]);
        for k in 2..=shells {
            let [a, b, c] = s.map(|i| shell_index(k - 1, i));
            let [ua, ub, uc] = s.map(|i| shell_index(k, i));
            cells.push([a, b, c, uc]);
            cells.push([a, b, ub, uc]);
            cells.push([a, ua, ub, uc]);
        }
    }

    let trace = (0..nv).map(|i| shell_index(shells, i)).collect();
    let bulk = BulkMesh::new(3, positions, cells, trace)?;
    Ok((surface, bulk))
}
