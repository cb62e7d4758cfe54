use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;

use super::mesh::{Backend, Point, SurfaceMesh};
use super::sphere::icosahedron_vertices;
use crate::error::{Error, Result};

/// Fraction of the minimal center separation used as chart radius.
pub const CHART_RADIUS_FACTOR: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
struct ChartPoint {
    vertex: usize,
    coord: [f64; 2],
    /// Ratio of chart measure to surface measure at this point.
    jacobian: f64,
    z: f64,
}

/// Geodesic normal-coordinate charts with a smooth partition of unity.
#[derive(Debug, Clone)]
pub struct ChartAtlas {
    backend: Backend,
    radius: f64,
    centers: Vec<Point>,
    charts: Vec<Vec<ChartPoint>>,
    /// Per vertex: `(chart, position in charts[chart])` for every chart covering it.
    membership: Vec<Vec<(usize, usize)>>,
    max_multiplicity: usize,
}

fn bump(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        let s = 1.0 - t * t;
        s * s
    }
}

impl ChartAtlas {
    /// Four charts on the circle, twelve (centered at the icosahedron
    /// vertices) on the sphere.
    pub fn build(mesh: &SurfaceMesh) -> Result<Self> {
        let big_r = mesh.radius();
        let (centers, separation) = match mesh.backend() {
            Backend::Circle => {
                let c: Vec<Point> = (0..4)
                    .map(|k| {
                        let a = k as f64 * FRAC_PI_2;
                        Point::new(big_r * a.cos(), big_r * a.sin(), 0.0)
                    })
                    .collect();
                (c, big_r * FRAC_PI_2)
            }
            Backend::Sphere => {
                let unit = icosahedron_vertices();
                let mut sep = f64::INFINITY;
                for i in 0..unit.len() {
                    for j in i + 1..unit.len() {
                        sep = sep.min(unit[i].dot(&unit[j]).clamp(-1.0, 1.0).acos());
                    }
                }
                (unit.iter().map(|p| p * big_r).collect(), sep * big_r)
            }
            Backend::Planar => {
                return Err(Error::Unsupported(
                    "charts are built for circle and sphere meshes only".into(),
                ))
            }
        };
        let radius = CHART_RADIUS_FACTOR * separation;
        let backend = mesh.backend();

        let mut charts: Vec<Vec<ChartPoint>> = centers
            .iter()
            .map(|c| {
                mesh.positions()
                    .iter()
                    .enumerate()
                    .filter_map(|(v, x)| {
                        let (coord, dist, jacobian) = log_map(backend, big_r, c, x);
                        (dist < radius).then(|| ChartPoint {
                            vertex: v,
                            coord,
                            jacobian,
                            z: bump(dist / radius),
                        })
                    })
                    .collect()
            })
            .collect();

        let n = mesh.num_vertices();
        let mut membership = vec![Vec::new(); n];
        for (i, chart) in charts.iter().enumerate() {
            for (k, cp) in chart.iter().enumerate() {
                membership[cp.vertex].push((i, k));
            }
        }
        let mut max_multiplicity = 0;
        for (v, charts_at) in membership.iter().enumerate() {
            let total: f64 = charts_at.iter().map(|&(i, k)| charts[i][k].z).sum();
            if !(total > 0.0) {
                return Err(Error::invalid(format!(
                    "vertex {v} is not covered by any chart"
                )));
            }
            for &(i, k) in charts_at {
                charts[i][k].z /= total;
            }
            max_multiplicity = max_multiplicity.max(charts_at.len());
        }
        log::debug!(
            "atlas: {} charts, radius {radius:.4}, max multiplicity {max_multiplicity}",
            centers.len()
        );
        Ok(ChartAtlas {
            backend,
            radius,
            centers,
            charts,
            membership,
            max_multiplicity,
        })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Chart radius `r`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn num_charts(&self) -> usize {
        self.centers.len()
    }

    /// Largest number of charts covering a single vertex.
    pub fn max_multiplicity(&self) -> usize {
        self.max_multiplicity
    }

    /// Partition-of-unity weights `(chart, z_i)` at a vertex.
    pub fn weights_at(&self, vertex: usize) -> Vec<(usize, f64)> {
        self.membership[vertex]
            .iter()
            .map(|&(i, k)| (i, self.charts[i][k].z))
            .collect()
    }

    /// Chart coordinates of a vertex, if it lies in the chart.
    pub fn coordinates(&self, chart: usize, vertex: usize) -> Option<[f64; 2]> {
        self.membership[vertex]
            .iter()
            .find(|&&(i, _)| i == chart)
            .map(|&(i, k)| self.charts[i][k].coord)
    }
}

/// Geodesic normal coordinates of `x` around `center`, its geodesic distance,
/// and the ratio of coordinate measure to surface measure.
fn log_map(backend: Backend, big_r: f64, center: &Point, x: &Point) -> ([f64; 2], f64, f64) {
    match backend {
        Backend::Circle => {
            let a = x.y.atan2(x.x) - center.y.atan2(center.x);
            let a = (a + TAU / 2.0).rem_euclid(TAU) - TAU / 2.0;
            ([big_r * a, 0.0], big_r * a.abs(), 1.0)
        }
        _ => {
            let p = center.normalize();
            let q = x.normalize();
            let c = p.dot(&q).clamp(-1.0, 1.0);
            let psi = c.acos();
            let w = q - p * c;
            let s = w.norm();
            let (e1, e2) = tangent_frame(&p);
            let coord = if s > 1e-15 {
                let d = big_r * psi / s;
                [d * w.dot(&e1), d * w.dot(&e2)]
            } else {
                [0.0, 0.0]
            };
            let jac = if psi > 1e-8 { psi / psi.sin() } else { 1.0 };
            (coord, big_r * psi, jac)
        }
    }
}

fn tangent_frame(p: &Point) -> (Point, Point) {
    let helper = if p.x.abs() < 0.9 {
        Point::x()
    } else {
        Point::y()
    };
    let e1 = (helper - p * p.dot(&helper)).normalize();
    let e2 = p.cross(&e1);
    (e1, e2)
}

/// Chart-wise mollification `T_η` with a quartic bump of radius `eta`.
///
/// The result is normalized by the mollified partition of unity, so
/// constants are reproduced exactly.
pub fn mollify(
    mesh: &SurfaceMesh,
    atlas: &ChartAtlas,
    field: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    mesh.check_len(field, "field")?;
    if atlas.membership.len() != mesh.num_vertices() {
        return Err(Error::invalid("atlas was built for a different mesh"));
    }
    if !(eta > 0.0 && eta < atlas.radius / 2.0) {
        return Err(Error::invalid(format!(
            "eta = {eta} outside (0, r/2) with r = {:.6}",
            atlas.radius
        )));
    }
    let eta_sq = eta * eta;
    let mass = mesh.mass();
    let out = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|p| {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(i, k) in &atlas.membership[p] {
                let chart = &atlas.charts[i];
                let y = chart[k].coord;
                for cp in chart {
                    let dx = cp.coord[0] - y[0];
                    let dy = cp.coord[1] - y[1];
                    let r2 = dx * dx + dy * dy;
                    if r2 >= eta_sq {
                        continue;
                    }
                    let s = 1.0 - r2 / eta_sq;
                    let w = s * s * cp.z * mass[cp.vertex] * cp.jacobian;
                    num += w * field[cp.vertex];
                    den += w;
                }
            }
            num / den
        })
        .collect();
    Ok(out)
}
