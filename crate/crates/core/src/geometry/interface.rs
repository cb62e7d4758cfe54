use std::collections::HashMap;
use std::f64::consts::TAU;

use super::mesh::{Backend, Point, SurfaceMesh};
use crate::error::{Error, Result};

/// Minimum number of points per component for curvature estimation.
pub const MIN_CURVATURE_POINTS: usize = 8;
/// Curvature fit half-width in units of the mean mesh edge length.
pub const CURVATURE_WINDOW_EDGES: f64 = 10.0;

/// A zero crossing of the piecewise linear interpolant on the edge `(a, b)`,
/// located at `(1 - s)·x_a + s·x_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePoint {
    pub position: Point,
    pub edge: (usize, usize),
    pub s: f64,
    /// Arc-length weight (1 for point interfaces on the circle).
    pub weight: f64,
    /// Unit normal within the tangent plane, pointing into `{φ > 0}`.
    pub normal: Point,
}

impl InterfacePoint {
    /// Linear interpolation of a nodal field at this point.
    pub fn interpolate(&self, field: &[f64]) -> f64 {
        (1.0 - self.s) * field[self.edge.0] + self.s * field[self.edge.1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceComponent {
    pub points: Vec<InterfacePoint>,
    pub closed: bool,
}

/// Zero level set of a nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurve {
    pub backend: Backend,
    pub components: Vec<InterfaceComponent>,
    /// Total length; the number of points for the circle backend.
    pub length: f64,
}

impl InterfaceCurve {
    pub fn is_empty(&self) -> bool {
        self.components.iter().all(|c| c.points.is_empty())
    }

    pub fn num_points(&self) -> usize {
        self.components.iter().map(|c| c.points.len()).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = &InterfacePoint> {
        self.components.iter().flat_map(|c| c.points.iter())
    }
}

fn crossing(mesh: &SurfaceMesh, phi: &[f64], a: usize, b: usize) -> (Point, f64) {
    let s = phi[a] / (phi[a] - phi[b]);
    let pa = mesh.positions()[a];
    let pb = mesh.positions()[b];
    (pa + (pb - pa) * s, s)
}

/// Extract the zero level set of `phi`; positive means `φ > 0`.
pub fn extract_interface(mesh: &SurfaceMesh, phi: &[f64]) -> Result<InterfaceCurve> {
    mesh.check_len(phi, "phi")?;
    let positive = |v: usize| phi[v] > 0.0;
    let empty = InterfaceCurve {
        backend: mesh.backend(),
        components: Vec::new(),
        length: 0.0,
    };
    let n = mesh.num_vertices();
    if (0..n).all(positive) || !(0..n).any(positive) {
        return Ok(empty);
    }
    match mesh.backend() {
        Backend::Circle => Ok(circle_interface(mesh, phi)),
        _ => Ok(triangle_interface(mesh, phi)),
    }
}

fn circle_interface(mesh: &SurfaceMesh, phi: &[f64]) -> InterfaceCurve {
    let n = mesh.num_vertices();
    let r = mesh.radius();
    let mut points = Vec::new();
    for a in 0..n {
        let b = (a + 1) % n;
        if (phi[a] > 0.0) == (phi[b] > 0.0) {
            continue;
        }
        let s = phi[a] / (phi[a] - phi[b]);
        let angle = TAU * (a as f64 + s) / n as f64;
        let tangent = Point::new(-angle.sin(), angle.cos(), 0.0);
        let normal = if phi[b] > 0.0 { tangent } else { -tangent };
        points.push(InterfacePoint {
            position: Point::new(r * angle.cos(), r * angle.sin(), 0.0),
            edge: (a, b),
            s,
            weight: 1.0,
            normal,
        });
    }
    let length = points.len() as f64;
    InterfaceCurve {
        backend: Backend::Circle,
        components: vec![InterfaceComponent {
            points,
            closed: false,
        }],
        length,
    }
}

fn triangle_interface(mesh: &SurfaceMesh, phi: &[f64]) -> InterfaceCurve {
    let positive = |v: usize| phi[v] > 0.0;
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    // Oriented segments keyed by their start edge, positive side on the left.
    let mut next: HashMap<(usize, usize), ((usize, usize), Point)> = HashMap::new();
    let mut has_incoming: HashMap<(usize, usize), bool> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for e in mesh.elements() {
        let v = e.vertices();
        let cut: Vec<(usize, usize)> = (0..3)
            .map(|k| (v[k], v[(k + 1) % 3]))
            .filter(|&(a, b)| positive(a) != positive(b))
            .collect();
        if cut.len() != 2 {
            continue;
        }
        // Walking the element counter-clockwise about its normal, the segment
        // starts on the edge left from the positive side; the positive
        // region then lies to the left of the segment.
        let p = mesh.positions();
        let ccw = (p[v[1]] - p[v[0]])
            .cross(&(p[v[2]] - p[v[0]]))
            .dot(&e.normal)
            > 0.0;
        let (mut start, mut end) = (key(cut[0].0, cut[0].1), key(cut[1].0, cut[1].1));
        let leaves_positive = positive(cut[0].0);
        if leaves_positive != ccw {
            std::mem::swap(&mut start, &mut end);
        }
        let nu = e.gradient(phi).normalize();
        next.insert(start, (end, nu));
        has_incoming.insert(end, true);
        order.push(start);
    }

    let mut visited: HashMap<(usize, usize), bool> = HashMap::new();
    let mut components = Vec::new();
    let mut length = 0.0;
    // Open chains (only possible on surfaces with boundary) start where no
    // segment ends; closed loops afterwards, in element order.
    let starts: Vec<(usize, usize)> = order
        .iter()
        .copied()
        .filter(|s| !has_incoming.contains_key(s))
        .chain(order.iter().copied())
        .collect();
    for start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut chain_edges = vec![start];
        let mut normals: Vec<Point> = Vec::new();
        let mut cur = start;
        let mut closed = false;
        visited.insert(cur, true);
        while let Some(&(nxt, nu)) = next.get(&cur) {
            normals.push(nu);
            if nxt == start {
                closed = true;
                break;
            }
            if visited.contains_key(&nxt) {
                break;
            }
            visited.insert(nxt, true);
            chain_edges.push(nxt);
            cur = nxt;
        }
        let pts: Vec<(Point, f64)> = chain_edges
            .iter()
            .map(|&(a, b)| crossing(mesh, phi, a, b))
            .collect();
        let m = pts.len();
        let seg_len = |i: usize| (pts[(i + 1) % m].0 - pts[i].0).norm();
        let n_seg = if closed { m } else { m.saturating_sub(1) };
        let comp_len: f64 = (0..n_seg).map(seg_len).sum();
        length += comp_len;
        let points = (0..m)
            .map(|i| {
                let before = if closed || i > 0 {
                    Some((i + m - 1) % m)
                } else {
                    None
                };
                let after = if closed || i + 1 < m { Some(i) } else { None };
                let mut weight = 0.0;
                let mut nu = Point::zeros();
                if let Some(j) = before.filter(|&j| j < normals.len()) {
                    weight += 0.5 * seg_len(j);
                    nu += normals[j];
                }
                if let Some(j) = after.filter(|&j| j < normals.len()) {
                    weight += 0.5 * seg_len(j);
                    nu += normals[j];
                }
                let (a, b) = chain_edges[i];
                let (position, s) = pts[i];
                let vn = vertex_normal_at(mesh, a, b, s);
                let nu = (nu - vn * nu.dot(&vn)).normalize();
                InterfacePoint {
                    position,
                    edge: (a, b),
                    s,
                    weight,
                    normal: nu,
                }
            })
            .collect();
        components.push(InterfaceComponent { points, closed });
    }
    InterfaceCurve {
        backend: mesh.backend(),
        components,
        length,
    }
}

fn vertex_normal_at(mesh: &SurfaceMesh, a: usize, b: usize, s: f64) -> Point {
    let n = mesh.vertex_normals();
    (n[a] * (1.0 - s) + n[b] * s).normalize()
}

/// Discrete geodesic curvature at every interface point, in component order.
///
/// A plane is fitted by weighted total least squares to the points within an
/// arc-length window; its section of the sphere is a small circle whose
/// geodesic curvature `d/(R·ρ)` is returned, positive when bending toward
/// `{φ > 0}`. The window spans about `CURVATURE_WINDOW_EDGES` mesh edges on
/// each side.
pub fn geodesic_curvature(mesh: &SurfaceMesh, curve: &InterfaceCurve) -> Result<Vec<f64>> {
    if mesh.backend() != Backend::Sphere || curve.backend != Backend::Sphere {
        return Err(Error::Unsupported(
            "geodesic curvature needs a curve on the sphere".into(),
        ));
    }
    let h = mesh.mean_edge_length();
    let mut out = Vec::with_capacity(curve.num_points());
    for comp in &curve.components {
        let m = comp.points.len();
        if m < MIN_CURVATURE_POINTS {
            return Err(Error::Unsupported(format!(
                "interface component has {m} points, need at least {MIN_CURVATURE_POINTS}"
            )));
        }
        let pos: Vec<Point> = comp.points.iter().map(|p| p.position).collect();
        let seg: Vec<f64> = (0..m).map(|i| (pos[(i + 1) % m] - pos[i]).norm()).collect();
        let n_seg = if comp.closed { m } else { m - 1 };
        let total: f64 = seg[..n_seg].iter().sum();
        let mean_seg = total / n_seg as f64;
        let half_width = (CURVATURE_WINDOW_EDGES * h)
            .max(4.0 * mean_seg)
            .min(if comp.closed {
                0.3 * total
            } else {
                0.5 * total
            });

        for i in 0..m {
            let mut samples = vec![(pos[i], 1.0)];
            for dir in [1isize, -1] {
                let mut arc = 0.0;
                let mut j = i as isize;
                for _ in 0..m {
                    let nj = j + dir;
                    if !comp.closed && (nj < 0 || nj >= m as isize) {
                        break;
                    }
                    let nj_w = nj.rem_euclid(m as isize) as usize;
                    let sj = if dir > 0 {
                        j.rem_euclid(m as isize) as usize
                    } else {
                        nj_w
                    };
                    arc += seg[sj];
                    if arc >= half_width {
                        break;
                    }
                    let r = arc / half_width;
                    samples.push((pos[nj_w], (1.0 - r * r).powi(2)));
                    j = nj;
                }
            }
            out.push(small_circle_curvature(
                &samples,
                pos[i],
                comp.points[i].normal,
            ));
        }
    }
    Ok(out)
}

fn small_circle_curvature(samples: &[(Point, f64)], p: Point, nu: Point) -> f64 {
    use nalgebra::Matrix3;
    let wsum: f64 = samples.iter().map(|s| s.1).sum();
    let centroid: Point = samples.iter().map(|(x, w)| x * *w).sum::<Point>() / wsum;
    let mut cov = Matrix3::zeros();
    for (x, w) in samples {
        let d = x - centroid;
        cov += d * d.transpose() * *w;
    }
    let eig = cov.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let n: Point = eig.eigenvectors.column(k).into();
    let center = n * n.dot(&centroid);
    let r = p.norm();
    let rho_sq = r * r - center.norm_squared();
    if rho_sq <= 0.0 {
        return f64::NAN;
    }
    let sign = (center - p).dot(&nu).signum();
    sign * center.norm() / (r * rho_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_circle_disk, build_sphere_ball};

    #[test]
    fn circle_crossings_are_even_and_oriented() {
        let (s, _) = build_circle_disk(64, 2, 1.0).unwrap();
        let phi: Vec<f64> = s.positions().iter().map(|p| p.y + 0.1).collect();
        let c = extract_interface(&s, &phi).unwrap();
        assert_eq!(c.num_points(), 2);
        assert_eq!(c.length, 2.0);
        for p in c.points() {
            // stepping along the normal increases φ
            let ahead = p.position + p.normal * 1e-3;
            assert!(ahead.y + 0.1 > 0.0);
        }
    }

    #[test]
    fn sphere_equator_is_one_closed_loop() {
        let (s, _) = build_sphere_ball(3).unwrap();
        let phi: Vec<f64> = s.positions().iter().map(|p| p.z + 0.01).collect();
        let c = extract_interface(&s, &phi).unwrap();
        assert_eq!(c.components.len(), 1);
        assert!(c.components[0].closed);
        let wsum: f64 = c.points().map(|p| p.weight).sum();
        assert!((wsum - c.length).abs() < 1e-12);
        for p in c.points() {
            assert!(p.normal.z > 0.9);
        }
    }

    #[test]
    fn curvature_on_circle_backend_is_unsupported() {
        let (s, _) = build_circle_disk(64, 2, 1.0).unwrap();
        let phi: Vec<f64> = s.positions().iter().map(|p| p.y).collect();
        let c = extract_interface(&s, &phi).unwrap();
        assert!(matches!(
            geodesic_curvature(&s, &c),
            Err(Error::Unsupported(_))
        ));
    }
}
