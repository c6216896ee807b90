//! Geometric primitives: points, planar frames, polygons and simplex measures.

mod point;
mod polygon;
mod simplex;

pub use point::{Aabb, Coords, Point2, Point3};
pub use polygon::{
    dist_point_boundary, dist_point_polygon3, dist_point_segment, point_in_polygon, signed_area, LocalFrame,
    Polygon, Segment, PLANARITY_TOLERANCE,
};
pub use simplex::{
    aspect_ratio_tet, aspect_ratio_tri, circumcircle2, circumsphere3, dihedral_angles, tet_volume, triangle_angles,
    triangle_angles_all, triangle_area, triangle_circumball3, vector_angle, TET_EDGES,
};
