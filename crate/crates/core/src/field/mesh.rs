//! Radial depth of triangle meshes: `R(omega)` is the farthest hit along the
//! ray from the mesh center, found through a median-split BVH.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::SphericalField;
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub triangles: Vec<[Vec3; 3]>,
}

impl TriangleMesh {
    pub fn new(triangles: Vec<[Vec3; 3]>) -> Self {
        TriangleMesh { triangles }
    }

    pub fn from_indexed(vertices: &[Vec3], indices: &[[usize; 3]]) -> Self {
        TriangleMesh {
            triangles: indices
                .iter()
                .map(|t| [vertices[t[0]], vertices[t[1]], vertices[t[2]]])
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let mut sum = Vec3::ZERO;
        for t in &self.triangles {
            sum += t[0] + t[1] + t[2];
        }
        sum / (3 * self.triangles.len().max(1)) as f64
    }

    /// Axis-aligned cube with the given half extent, centered at the origin.
    pub fn cube(half: f64) -> Self {
        let v: Vec<Vec3> = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -half } else { half },
                    if i & 2 == 0 { -half } else { half },
                    if i & 4 == 0 { -half } else { half },
                )
            })
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let mut idx = Vec::new();
        for q in quads {
            idx.push([q[0], q[1], q[2]]);
            idx.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::from_indexed(&v, &idx)
    }

    pub fn write_stl(&self, path: &Path) -> Result<()> {
        let mut file =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let to32 = |v: Vec3| stl_io::Vector::new([v.x as f32, v.y as f32, v.z as f32]);
        let tris = self.triangles.iter().map(|t| stl_io::Triangle {
            normal: to32((t[1] - t[0]).cross(t[2] - t[0]).normalized()),
            vertices: [to32(t[0]), to32(t[1]), to32(t[2])],
        });
        stl_io::write_stl(&mut file, tris)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Reads a triangulated mesh from ASCII/binary STL or OBJ, by extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "stl" => {
            let file = File::open(path)
                .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
            let mut reader = BufReader::new(file);
            let mesh = stl_io::read_stl(&mut reader)
                .map_err(|e| Error::io(format!("reading STL {}", path.display()), e))?;
            let vertices: Vec<Vec3> = mesh
                .vertices
                .iter()
                .map(|v| Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64))
                .collect();
            let indices: Vec<[usize; 3]> = mesh.faces.iter().map(|f| f.vertices).collect();
            Ok(TriangleMesh::from_indexed(&vertices, &indices))
        }
        "obj" => {
            let options = tobj::LoadOptions {
                triangulate: true,
                single_index: true,
                ..Default::default()
            };
            let (models, _materials) = tobj::load_obj(path, &options)
                .map_err(|e| Error::InvalidInput(format!("reading OBJ {}: {e}", path.display())))?;
            let mut triangles = Vec::new();
            for model in models {
                let m = model.mesh;
                let vertex = |i: u32| {
                    let i = i as usize * 3;
                    Vec3::new(
                        m.positions[i] as f64,
                        m.positions[i + 1] as f64,
                        m.positions[i + 2] as f64,
                    )
                };
                for t in m.indices.chunks_exact(3) {
                    triangles.push([vertex(t[0]), vertex(t[1]), vertex(t[2])]);
                }
            }
            Ok(TriangleMesh::new(triangles))
        }
        _ => Err(Error::InvalidInput(format!(
            "unsupported mesh format {:?} (expected .stl or .obj)",
            path.display()
        ))),
    }
}

/// Icosahedron subdivided `subdivisions` times, vertices on the unit sphere.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    use std::collections::HashMap;
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
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
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalized());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::from_indexed(&verts, &faces)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: Vec3) {
        self.min = Vec3::new(
            self.min.x.min(p.x),
            self.min.y.min(p.y),
            self.min.z.min(p.z),
        );
        self.max = Vec3::new(
            self.max.x.max(p.x),
            self.max.y.max(p.y),
            self.max.z.max(p.z),
        );
    }

    /// Slab test; true when the ray (t >= 0) touches the box.
    fn hit(&self, origin: Vec3, inv_dir: Vec3) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let lo = (self.min[a] - origin[a]) * inv_dir[a];
            let hi = (self.max[a] - origin[a]) * inv_dir[a];
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            // NaN from 0 * inf means the ray lies in the slab plane; keep it.
            if lo.is_nan() || hi.is_nan() {
                continue;
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        t0 <= t1 * (1.0 + 1e-12) + 1e-12
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        count: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

const LEAF_SIZE: usize = 4;

/// Möller-Trumbore with inclusive edges. Returns `t` for hits with `t > 0`.
pub(crate) fn ray_triangle(origin: Vec3, dir: Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-18 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > 0.0).then_some(t)
}

/// Farthest-hit radial depth of a closed mesh around `center`.
#[derive(Debug)]
pub struct MeshRadialField {
    center: Vec3,
    triangles: Vec<[Vec3; 3]>,
    nodes: Vec<Node>,
    misses: AtomicUsize,
}

impl MeshRadialField {
    pub fn new(mesh: &TriangleMesh, center: Vec3) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::InvalidInput("mesh has no triangles".into()));
        }
        let mut triangles = mesh.triangles.clone();
        let mut nodes = Vec::new();
        build(&mut triangles, 0, mesh.len(), &mut nodes);
        Ok(MeshRadialField {
            center,
            triangles,
            nodes,
            misses: AtomicUsize::new(0),
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Number of evaluations that found no intersection.
    pub fn miss_count(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Farthest hit distance along `dir` from the center, via the BVH.
    pub fn farthest_hit(&self, dir: Vec3) -> Option<f64> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<f64> = None;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf {
                    bounds,
                    start,
                    count,
                } => {
                    if !bounds.hit(self.center, inv) {
                        continue;
                    }
                    for tri in &self.triangles[*start..start + count] {
                        if let Some(t) = ray_triangle(self.center, dir, tri) {
                            best = Some(best.map_or(t, |b| b.max(t)));
                        }
                    }
                }
                Node::Inner {
                    bounds,
                    left,
                    right,
                } => {
                    if bounds.hit(self.center, inv) {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }
}

fn build(tris: &mut [[Vec3; 3]], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Aabb::empty();
    let mut centroids = Aabb::empty();
    for t in &tris[start..end] {
        for v in t {
            bounds.grow(*v);
        }
        centroids.grow((t[0] + t[1] + t[2]) / 3.0);
    }
    let index = nodes.len();
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            start,
            count,
        });
        return index;
    }
    let extent = centroids.max - centroids.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let key = |t: &[Vec3; 3]| t[0][axis] + t[1][axis] + t[2][axis];
    let mid = start + count / 2;
    tris[start..end].select_nth_unstable_by(count / 2, |a, b| key(a).total_cmp(&key(b)));
    nodes.push(Node::Leaf {
        bounds,
        start,
        count: 0,
    });
    let left = build(tris, start, mid, nodes);
    let right = build(tris, mid, end, nodes);
    nodes[index] = Node::Inner {
        bounds,
        left,
        right,
    };
    index
}

impl SphericalField for MeshRadialField {
    fn eval(&self, d: Direction) -> f64 {
        match self.farthest_hit(d.vec()) {
            Some(t) => t,
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                0.0
            }
        }
    }
}

pub fn mesh_radial_field(mesh: &TriangleMesh, center: Vec3) -> Result<MeshRadialField> {
    MeshRadialField::new(mesh, center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fibonacci_directions;

    #[test]
    fn cube_distances() {
        let f = MeshRadialField::new(&TriangleMesh::cube(1.0), Vec3::ZERO).unwrap();
        assert!((f.eval(Direction::from_xyz(1.0, 0.0, 0.0).unwrap()) - 1.0).abs() < 1e-12);
        let diag = f.eval(Direction::from_xyz(1.0, 1.0, 1.0).unwrap());
        assert!((diag - 3f64.sqrt()).abs() < 1e-12, "{diag}");
        assert_eq!(f.miss_count(), 0);
    }

    #[test]
    fn icosphere_is_close_to_unit() {
        let mesh = icosphere(3);
        assert_eq!(mesh.len(), 20 * 64);
        let f = MeshRadialField::new(&mesh, Vec3::ZERO).unwrap();
        for d in fibonacci_directions(2000) {
            let r = f.eval(d);
            assert!((r - 1.0).abs() < 5e-3, "{r}");
        }
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(MeshRadialField::new(&TriangleMesh::default(), Vec3::ZERO).is_err());
    }

    #[test]
    fn miss_is_counted() {
        // A single triangle only covers a small solid angle.
        let mesh = TriangleMesh::new(vec![[
            Vec3::new(1.0, -0.1, -0.1),
            Vec3::new(1.0, 0.1, -0.1),
            Vec3::new(1.0, 0.0, 0.1),
        ]]);
        let f = MeshRadialField::new(&mesh, Vec3::ZERO).unwrap();
        assert_eq!(f.eval(Direction::from_xyz(-1.0, 0.0, 0.0).unwrap()), 0.0);
        assert_eq!(f.miss_count(), 1);
    }
}
