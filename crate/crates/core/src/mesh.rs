//! Simplicial meshes with node provenance.

use std::collections::HashSet;

use crate::engine::NodeTag;
use crate::geometry::{Coords, Point2, Point3};
use crate::Real;

/// Mesh whose cells are `N`-vertex simplices over nodes of type `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<P, const N: usize> {
    pub nodes: Vec<P>,
    pub tags: Vec<NodeTag>,
    pub global_ids: Vec<Option<u64>>,
    pub cells: Vec<[u32; N]>,
}

/// Triangles in a fracture's local frame.
pub type TriMesh2<T> = Mesh<Point2<T>, 3>;
/// Triangles embedded in 3D (the merged network mesh).
pub type TriMesh3<T> = Mesh<Point3<T>, 3>;
pub type TetMesh<T> = Mesh<Point3<T>, 4>;

impl<P, const N: usize> Default for Mesh<P, N> {
    fn default() -> Self {
        Mesh { nodes: Vec::new(), tags: Vec::new(), global_ids: Vec::new(), cells: Vec::new() }
    }
}

impl<P: Copy, const N: usize> Mesh<P, N> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, c: usize) -> [P; N] {
        self.cells[c].map(|i| self.nodes[i as usize])
    }

    /// Unique undirected edges as sorted index pairs.
    pub fn edges(&self) -> Vec<[u32; 2]> {
        let mut e: Vec<[u32; 2]> = Vec::with_capacity(self.cells.len() * N);
        for c in &self.cells {
            for i in 0..N {
                for j in i + 1..N {
                    let (a, b) = (c[i], c[j]);
                    e.push([a.min(b), a.max(b)]);
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn edge_set(&self) -> HashSet<[u32; 2]> {
        self.edges().into_iter().collect()
    }

    /// Longest edge of cell `c`.
    pub fn max_edge_length<T: Real>(&self, c: usize) -> T
    where
        P: Coords<T>,
    {
        let p = self.cell_points(c);
        let mut m = T::zero();
        for i in 0..N {
            for j in i + 1..N {
                m = m.max(p[i].dist(&p[j]));
            }
        }
        m
    }
}

impl<P: Copy> Mesh<P, 4> {
    /// Unique triangular faces as sorted index triples.
    pub fn faces(&self) -> Vec<[u32; 3]> {
        let mut f: Vec<[u32; 3]> = Vec::with_capacity(self.cells.len() * 4);
        for c in &self.cells {
            for skip in 0..4 {
                let mut t = [0u32; 3];
                let mut k = 0;
                for (i, &v) in c.iter().enumerate() {
                    if i != skip {
                        t[k] = v;
                        k += 1;
                    }
                }
                t.sort_unstable();
                f.push(t);
            }
        }
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_and_faces() {
        let m: TetMesh<f64> = Mesh {
            nodes: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
                Point3::new(1.0, 1.0, 1.0),
            ],
            tags: vec![NodeTag::Interior; 5],
            global_ids: vec![None; 5],
            cells: vec![[0, 1, 2, 3], [1, 2, 3, 4]],
        };
        assert_eq!(m.edges().len(), 9);
        assert_eq!(m.faces().len(), 7);
        assert!((m.max_edge_length::<f64>(0) - 2f64.sqrt()).abs() < 1e-15);
    }
}
