use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub type Point = Vector3<f64>;

/// Which discrete surface a mesh represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Closed polygon approximating a circle, bounding a disk.
    Circle,
    /// Icosphere bounding a tetrahedralized ball.
    Sphere,
    /// Flat triangulated patch in the `z = 0` plane; used as a test fixture.
    Planar,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Circle => "circle",
            Backend::Sphere => "sphere",
            Backend::Planar => "planar",
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Backend::Circle),
            "sphere" => Ok(Backend::Sphere),
            "planar" => Ok(Backend::Planar),
            other => Err(Error::invalid(format!("unknown backend `{other}`"))),
        }
    }
}

/// A segment (two vertices) or triangle (three vertices) of a surface mesh,
/// with its measure and the gradients of the barycentric hat functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceElement {
    vertices: [usize; 3],
    count: usize,
    pub measure: f64,
    grads: [Point; 3],
    /// Unit normal for triangles; zero for segments.
    pub normal: Point,
    /// Orthonormal basis of the element tangent space (second entry unused for segments).
    pub tangents: [Point; 2],
}

impl SurfaceElement {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices[..self.count]
    }

    /// Gradients of the local hat functions, aligned with `vertices()`.
    pub fn hat_gradients(&self) -> &[Point] {
        &self.grads[..self.count]
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.count - 1
    }

    /// Elementwise tangential gradient of a nodal field.
    pub fn gradient(&self, field: &[f64]) -> Point {
        self.vertices()
            .iter()
            .zip(self.hat_gradients())
            .fold(Point::zeros(), |acc, (&v, g)| acc + g * field[v])
    }

    /// Mean of a nodal field over the element vertices.
    pub fn vertex_mean(&self, field: &[f64]) -> f64 {
        self.vertices().iter().map(|&v| field[v]).sum::<f64>() / self.count as f64
    }

    fn segment(a: usize, b: usize, pa: &Point, pb: &Point, measure: f64) -> Self {
        let t = (pb - pa).normalize();
        let g = t / measure;
        SurfaceElement {
            vertices: [a, b, usize::MAX],
            count: 2,
            measure,
            grads: [-g, g, Point::zeros()],
            normal: Point::zeros(),
            tangents: [t, Point::zeros()],
        }
    }

    fn triangle(ids: [usize; 3], p: [&Point; 3]) -> Result<Self> {
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let cross = e1.cross(&e2);
        let twice_area = cross.norm();
        if !(twice_area > 0.0) {
            return Err(Error::invalid(format!("degenerate triangle {ids:?}")));
        }
        let n = cross / twice_area;
        let grads = [
            n.cross(&(p[2] - p[1])) / twice_area,
            n.cross(&(p[0] - p[2])) / twice_area,
            n.cross(&(p[1] - p[0])) / twice_area,
        ];
        let t1 = e1.normalize();
        let t2 = n.cross(&t1);
        Ok(SurfaceElement {
            vertices: ids,
            count: 3,
            measure: 0.5 * twice_area,
            grads,
            normal: n,
            tangents: [t1, t2],
        })
    }
}

/// Discrete closed surface with lumped mass and stiffness operators.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    backend: Backend,
    positions: Vec<Point>,
    elements: Vec<SurfaceElement>,
    vertex_normals: Vec<Point>,
    mass: Vec<f64>,
    stiffness: CsrMatrix,
    area: f64,
    radius: f64,
}

impl SurfaceMesh {
    pub(crate) fn from_elements(
        backend: Backend,
        positions: Vec<Point>,
        elements: Vec<SurfaceElement>,
        vertex_normals: Vec<Point>,
        radius: f64,
    ) -> Self {
        let n = positions.len();
        let mut mass = vec![0.0; n];
        for e in &elements {
            let share = e.measure / e.vertices().len() as f64;
            for &v in e.vertices() {
                mass[v] += share;
            }
        }
        let area = elements.iter().map(|e| e.measure).sum();
        let stiffness = assemble_stiffness(n, &elements);
        SurfaceMesh {
            backend,
            positions,
            elements,
            vertex_normals,
            mass,
            stiffness,
            area,
            radius,
        }
    }

    /// Closed polygon of `n` vertices on a circle of the given radius. Segment
    /// measures use the arc length `2πR/n`, so the total length is exact.
    pub(crate) fn circle(n: usize, radius: f64) -> Self {
        let h = std::f64::consts::TAU * radius / n as f64;
        let positions: Vec<Point> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Point::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect();
        let elements = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                SurfaceElement::segment(i, j, &positions[i], &positions[j], h)
            })
            .collect();
        let normals = positions.iter().map(|p| p / radius).collect();
        Self::from_elements(Backend::Circle, positions, elements, normals, radius)
    }

    /// Triangulated surface from raw data. Vertices with `z ≠ 0` are allowed
    /// but the mesh is tagged planar and vertex normals are taken as `+z`.
    pub fn from_triangles(positions: Vec<Point>, triangles: &[[usize; 3]]) -> Result<Self> {
        let n = positions.len();
        let elements = triangles
            .iter()
            .map(|t| {
                if t.iter().any(|&v| v >= n) {
                    return Err(Error::invalid(format!(
                        "triangle {t:?} references a missing vertex"
                    )));
                }
                SurfaceElement::triangle(*t, [&positions[t[0]], &positions[t[1]], &positions[t[2]]])
            })
            .collect::<Result<Vec<_>>>()?;
        let normals = vec![Point::z(); n];
        Ok(Self::from_elements(
            Backend::Planar,
            positions,
            elements,
            normals,
            f64::NAN,
        ))
    }

    pub(crate) fn sphere_from_triangles(
        positions: Vec<Point>,
        triangles: &[[usize; 3]],
        radius: f64,
    ) -> Result<Self> {
        let elements = triangles
            .iter()
            .map(|t| {
                SurfaceElement::triangle(*t, [&positions[t[0]], &positions[t[1]], &positions[t[2]]])
            })
            .collect::<Result<Vec<_>>>()?;
        let normals = positions.iter().map(|p| p.normalize()).collect();
        Ok(Self::from_elements(
            Backend::Sphere,
            positions,
            elements,
            normals,
            radius,
        ))
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn elements(&self) -> &[SurfaceElement] {
        &self.elements
    }

    /// Unit normal to the surface at each vertex.
    pub fn vertex_normals(&self) -> &[Point] {
        &self.vertex_normals
    }

    /// Lumped (diagonal) mass matrix entries.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Radius of the circle or sphere; NaN for planar fixtures.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Per-triangle unit normals (empty for the circle backend).
    pub fn element_normals(&self) -> Vec<Point> {
        self.elements
            .iter()
            .filter(|e| e.intrinsic_dim() == 2)
            .map(|e| e.normal)
            .collect()
    }

    /// Mean edge length of the mesh.
    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for e in &self.elements {
            let v = e.vertices();
            if v.len() == 2 {
                total += e.measure;
                count += 1;
            } else {
                for k in 0..3 {
                    total += (self.positions[v[k]] - self.positions[v[(k + 1) % 3]]).norm();
                    count += 1;
                }
            }
        }
        total / count as f64
    }

    pub fn integrate(&self, field: &[f64]) -> f64 {
        crate::sparse::dot(&self.mass, field)
    }

    /// `∫ |∇_Γ f|²` evaluated through the stiffness quadratic form.
    pub fn dirichlet(&self, field: &[f64]) -> f64 {
        self.stiffness.quad_form(field)
    }

    /// `∫ f²` with lumped quadrature.
    pub fn l2_norm_sq(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.mass).map(|(f, m)| f * f * m).sum()
    }

    /// True when every edge has exactly two incident triangles with opposite
    /// orientation (or every vertex has exactly two incident segments).
    pub fn is_watertight(&self) -> bool {
        use std::collections::HashMap;
        match self.backend {
            Backend::Circle => {
                let mut deg = vec![0usize; self.num_vertices()];
                for e in &self.elements {
                    for &v in e.vertices() {
                        deg[v] += 1;
                    }
                }
                deg.iter().all(|&d| d == 2)
            }
            _ => {
                let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
                for e in &self.elements {
                    let v = e.vertices();
                    for k in 0..3 {
                        *directed.entry((v[k], v[(k + 1) % 3])).or_default() += 1;
                    }
                }
                directed
                    .iter()
                    .all(|(&(a, b), &c)| c == 1 && directed.get(&(b, a)) == Some(&1))
            }
        }
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .elements
            .iter()
            .flat_map(|e| {
                let v = e.vertices();
                let k = v.len();
                (0..if k == 2 { 1 } else { 3 }).map(move |i| {
                    let (a, b) = (v[i], v[(i + 1) % k]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Copy of the mesh with vertices relabeled: new index `perm[old]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_vertices();
        check_permutation(perm, n)?;
        let mut positions = vec![Point::zeros(); n];
        let mut normals = vec![Point::zeros(); n];
        for old in 0..n {
            positions[perm[old]] = self.positions[old];
            normals[perm[old]] = self.vertex_normals[old];
        }
        let elements = self
            .elements
            .iter()
            .map(|e| {
                let mut e = e.clone();
                for k in 0..e.count {
                    e.vertices[k] = perm[e.vertices[k]];
                }
                e
            })
            .collect();
        Ok(Self::from_elements(
            self.backend,
            positions,
            elements,
            normals,
            self.radius,
        ))
    }

    /// Copy of the mesh rigidly rotated by `rotation`.
    pub fn rotated(&self, rotation: &nalgebra::Rotation3<f64>) -> Result<Self> {
        let positions: Vec<Point> = self.positions.iter().map(|p| rotation * p).collect();
        match self.backend {
            Backend::Circle => Err(Error::Unsupported(
                "rigid rotation is only provided for triangulated surfaces".into(),
            )),
            Backend::Sphere => {
                let tris: Vec<[usize; 3]> = self
                    .elements
                    .iter()
                    .map(|e| [e.vertices[0], e.vertices[1], e.vertices[2]])
                    .collect();
                Self::sphere_from_triangles(positions, &tris, self.radius)
            }
            Backend::Planar => {
                let tris: Vec<[usize; 3]> = self
                    .elements
                    .iter()
                    .map(|e| [e.vertices[0], e.vertices[1], e.vertices[2]])
                    .collect();
                Self::from_triangles(positions, &tris)
            }
        }
    }

    pub(crate) fn check_len(&self, field: &[f64], what: &str) -> Result<()> {
        if field.len() != self.num_vertices() {
            return Err(Error::invalid(format!(
                "{what} has length {}, mesh has {} vertices",
                field.len(),
                self.num_vertices()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::invalid("permutation length mismatch"));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::invalid("not a permutation"));
        }
        seen[p] = true;
    }
    Ok(())
}

fn assemble_stiffness(n: usize, elements: &[SurfaceElement]) -> CsrMatrix {
    let triplets: Vec<(usize, usize, f64)> = elements
        .par_iter()
        .flat_map_iter(|e| {
            let v = e.vertices();
            let g = e.hat_gradients();
            let mut local = Vec::with_capacity(v.len() * v.len());
            for a in 0..v.len() {
                for b in 0..v.len() {
                    local.push((v[a], v[b], e.measure * g[a].dot(&g[b])));
                }
            }
            local.into_iter()
        })
        .collect();
    CsrMatrix::from_triplets(n, &triplets)
}

/// Simplicial mesh of the bulk domain (triangles in 2D, tetrahedra in 3D)
/// with a trace map from surface vertices to boundary vertices.
#[derive(Debug, Clone)]
pub struct BulkMesh {
    dim: usize,
    positions: Vec<Point>,
    cells: Vec<[usize; 4]>,
    mass: Vec<f64>,
    stiffness: CsrMatrix,
    volume: f64,
    trace: Vec<usize>,
}

impl BulkMesh {
    pub(crate) fn new(
        dim: usize,
        positions: Vec<Point>,
        cells: Vec<[usize; 4]>,
        trace: Vec<usize>,
    ) -> Result<Self> {
        let n = positions.len();
        let k = dim + 1;
        let local: Vec<(f64, Vec<(usize, usize, f64)>)> = cells
            .par_iter()
            .map(|cell| simplex_contribution(&positions, &cell[..k], dim))
            .collect::<Result<_>>()?;
        let mut mass = vec![0.0; n];
        let mut volume = 0.0;
        let mut triplets = Vec::with_capacity(cells.len() * k * k);
        for (cell, (vol, trip)) in cells.iter().zip(local) {
            volume += vol;
            for &v in &cell[..k] {
                mass[v] += vol / k as f64;
            }
            triplets.extend(trip);
        }
        Ok(BulkMesh {
            dim,
            positions,
            cells,
            mass,
            stiffness: CsrMatrix::from_triplets(n, &triplets),
            volume,
            trace,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Cell connectivity; only the first `dim + 1` entries of each cell are used.
    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `trace()[i]` is the bulk vertex coinciding with surface vertex `i`.
    pub fn trace(&self) -> &[usize] {
        &self.trace
    }

    pub fn integrate(&self, field: &[f64]) -> f64 {
        crate::sparse::dot(&self.mass, field)
    }

    /// Bulk field restricted to the surface vertices.
    pub fn trace_of(&self, field: &[f64]) -> Vec<f64> {
        self.trace.iter().map(|&b| field[b]).collect()
    }

    /// Largest distance between a surface vertex and its traced bulk vertex.
    pub fn trace_mismatch(&self, surface: &SurfaceMesh) -> f64 {
        surface
            .positions()
            .iter()
            .zip(&self.trace)
            .map(|(p, &b)| (p - self.positions[b]).norm())
            .fold(0.0, f64::max)
    }
}

fn simplex_contribution(
    positions: &[Point],
    verts: &[usize],
    dim: usize,
) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let x0 = positions[verts[0]];
    let jac = DMatrix::from_fn(dim, dim, |r, c| (positions[verts[c + 1]] - x0)[r]);
    let det = jac.determinant();
    let fact = if dim == 2 { 2.0 } else { 6.0 };
    let vol = det.abs() / fact;
    let inv = jac
        .try_inverse()
        .filter(|_| vol > 0.0)
        .ok_or_else(|| Error::invalid(format!("degenerate bulk cell {verts:?}")))?;
    // Rows of J⁻¹ are the gradients of λ_1..λ_d.
    let mut grads = vec![vec![0.0; dim]; dim + 1];
    for i in 0..dim {
        for r in 0..dim {
            grads[i + 1][r] = inv[(i, r)];
            grads[0][r] -= inv[(i, r)];
        }
    }
    let mut trip = Vec::with_capacity((dim + 1) * (dim + 1));
    for a in 0..=dim {
        for b in 0..=dim {
            let dot: f64 = (0..dim).map(|r| grads[a][r] * grads[b][r]).sum();
            trip.push((verts[a], verts[b], vol * dot));
        }
    }
    Ok((vol, trip))
}
