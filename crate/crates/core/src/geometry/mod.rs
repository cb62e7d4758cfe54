//! Discrete surfaces and bulks, surface differential operators, chart atlas
//! and mollification, and interface extraction.

mod atlas;
mod circle;
mod interface;
mod mesh;
mod operators;
mod sphere;

pub use atlas::{mollify, ChartAtlas, CHART_RADIUS_FACTOR};
pub use circle::build_circle_disk;
pub use interface::{
    extract_interface, geodesic_curvature, InterfaceComponent, InterfaceCurve, InterfacePoint,
    CURVATURE_WINDOW_EDGES, MIN_CURVATURE_POINTS,
};
pub use mesh::{Backend, BulkMesh, Point, SurfaceElement, SurfaceMesh};
pub use operators::{
    laplace_beltrami_apply, solve_surface_poisson, solve_surface_poisson_with, PoissonSolution,
    DEFAULT_POISSON_MAX_ITER, DEFAULT_POISSON_TOL,
};
pub use sphere::{
    build_sphere_ball, build_sphere_ball_with, icosahedron_vertices, icosphere, DEFAULT_SHELLS,
    MAX_REFINEMENT,
};
