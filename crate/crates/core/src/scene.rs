//! Acoustic scene description: medium, triangulated boundary, source and receivers.
//!
//! Boundary normals always point into the room. Nothing in this module ever flips
//! an element; a mis-oriented mesh is reported and must be fixed at its source.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Point3;

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    /// Speed of sound in m/s.
    pub sound_speed: f64,
    /// Density in kg/m^3.
    pub density: f64,
}

impl Medium {
    pub fn new(sound_speed: f64, density: f64) -> Result<Self> {
        if !(sound_speed.is_finite() && sound_speed > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sound speed must be positive and finite, got {sound_speed}"
            )));
        }
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density must be positive and finite, got {density}"
            )));
        }
        Ok(Self {
            sound_speed,
            density,
        })
    }

    /// Characteristic impedance rho * c.
    pub fn characteristic_impedance(&self) -> f64 {
        self.density * self.sound_speed
    }
}

impl Default for Medium {
    /// Air at room temperature.
    fn default() -> Self {
        Self {
            sound_speed: 343.0,
            density: 1.21,
        }
    }
}

/// Locally reacting wall impedance in Pa s/m. Rigid walls are represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impedance {
    Finite(f64),
    Rigid,
}

impl Impedance {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_infinite() && value > 0.0 {
            return Ok(Impedance::Rigid);
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "impedance must be positive, got {value}"
            )));
        }
        Ok(Impedance::Finite(value))
    }

    /// rho / Z, exactly zero for rigid walls.
    pub fn density_ratio(&self, density: f64) -> f64 {
        match *self {
            Impedance::Finite(z) => density / z,
            Impedance::Rigid => 0.0,
        }
    }

    pub fn is_rigid(&self) -> bool {
        matches!(self, Impedance::Rigid)
    }
}

/// One flat triangular boundary element.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub vertices: [usize; 3],
    pub centroid: Point3,
    pub area: f64,
    /// Unit normal pointing into the room.
    pub normal: Point3,
    /// Longest edge length.
    pub diameter: f64,
    pub impedance: Impedance,
    pub group: String,
}

/// Input description of a triangle, before geometric quantities are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSpec {
    pub vertices: [usize; 3],
    pub impedance: Impedance,
    pub group: String,
}

/// Triangulated room boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    vertices: Vec<Point3>,
    elements: Vec<Element>,
    closed: bool,
}

impl BoundaryMesh {
    /// Builds a mesh from vertices and triangles. Normals follow the right-hand rule
    /// on the vertex order. Orientation is not checked here; see [`Self::check_orientation`].
    pub fn new(vertices: Vec<Point3>, triangles: Vec<TriangleSpec>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidParameter("mesh has no elements".into()));
        }
        let mut elements = Vec::with_capacity(triangles.len());
        for (index, tri) in triangles.into_iter().enumerate() {
            for &v in &tri.vertices {
                if v >= vertices.len() {
                    return Err(Error::VertexOutOfRange {
                        index,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
            }
            let [a, b, c] = tri.vertices.map(|v| vertices[v]);
            if !(a
                .iter()
                .chain(b.iter())
                .chain(c.iter())
                .all(|x| x.is_finite()))
            {
                return Err(Error::DegenerateElement {
                    index,
                    reason: "non-finite vertex coordinate".into(),
                });
            }
            let cross = (b - a).cross(&(c - a));
            let twice_area = cross.norm();
            let diameter = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            // collinear or repeated vertices
            if !(twice_area > 1e-12 * diameter * diameter) || diameter == 0.0 {
                return Err(Error::DegenerateElement {
                    index,
                    reason: format!("zero or near-zero area ({:e} m^2)", 0.5 * twice_area),
                });
            }
            elements.push(Element {
                vertices: tri.vertices,
                centroid: (a + b + c) / 3.0,
                area: 0.5 * twice_area,
                normal: cross / twice_area,
                diameter,
                impedance: tri.impedance,
                group: tri.group,
            });
        }
        let closed = edges_closed(&elements);
        Ok(Self {
            vertices,
            elements,
            closed,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn corners(&self, element: usize) -> [Point3; 3] {
        self.elements[element].vertices.map(|v| self.vertices[v])
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Volume enclosed by the mesh, signed by normal orientation. Inward normals give
    /// a negative value for a closed mesh.
    pub fn signed_volume(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let [a, b, c] = e.vertices.map(|v| self.vertices[v]);
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Median element diameter (longest edge).
    pub fn median_element_size(&self) -> f64 {
        let mut sizes: Vec<f64> = self.elements.iter().map(|e| e.diameter).collect();
        sizes.sort_by(f64::total_cmp);
        let n = sizes.len();
        if n % 2 == 1 {
            sizes[n / 2]
        } else {
            0.5 * (sizes[n / 2 - 1] + sizes[n / 2])
        }
    }

    pub fn max_element_size(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    /// Replaces every element's impedance through `f(element index, group)`.
    pub fn with_impedances<F>(mut self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &str) -> Result<Impedance>,
    {
        for (i, e) in self.elements.iter_mut().enumerate() {
            e.impedance = f(i, &e.group)?;
        }
        Ok(self)
    }

    /// Shortest distance from `point` to the boundary surface.
    pub fn distance_to(&self, point: &Point3) -> f64 {
        (0..self.elements.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                (closest_point_on_triangle(point, &a, &b, &c) - point).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks that every element normal points into the enclosed region: a point just
    /// in front of each centroid must classify as interior. Returns the first offender.
    pub fn check_orientation(&self) -> Result<()> {
        if !self.closed {
            return Err(Error::OpenMesh(
                "orientation can only be checked on a closed mesh".into(),
            ));
        }
        for (index, e) in self.elements.iter().enumerate() {
            let probe = e.centroid + e.normal * (1e-3 * e.diameter);
            let class = self.classify_point(&probe)?;
            if class.location != Location::Interior {
                return Err(Error::Orientation { index });
            }
        }
        Ok(())
    }

    /// Classifies a point as inside, outside, or on the boundary by ray parity, and
    /// returns the matching solid-angle weight (4 pi, 0, 2 pi).
    pub fn classify_point(&self, point: &Point3) -> Result<PointClass> {
        if !self.closed {
            return Err(Error::OpenMesh(
                "point classification requires a closed mesh".into(),
            ));
        }
        if self.distance_to(point) < ON_BOUNDARY_TOLERANCE {
            return Ok(PointClass::new(Location::OnBoundary));
        }
        // Fixed seed keeps the direction sequence, and therefore the result, reproducible.
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b0a_7d17);
        'retry: for _ in 0..64 {
            let dir = random_unit_vector(&mut rng);
            let mut hits = 0usize;
            for i in 0..self.elements.len() {
                let [a, b, c] = self.corners(i);
                match ray_triangle(point, &dir, &a, &b, &c) {
                    RayHit::Miss => {}
                    RayHit::Hit => hits += 1,
                    RayHit::Ambiguous => continue 'retry,
                }
            }
            let location = if hits % 2 == 1 {
                Location::Interior
            } else {
                Location::Exterior
            };
            return Ok(PointClass::new(location));
        }
        Err(Error::Validation(format!(
            "could not classify point {point:?}: every ray grazed the mesh"
        )))
    }
}

/// Points closer than this to the boundary are considered on it.
pub const ON_BOUNDARY_TOLERANCE: f64 = 1e-9;

fn edges_closed(elements: &[Element]) -> bool {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for e in elements {
        let [a, b, c] = e.vertices;
        for (p, q) in [(a, b), (b, c), (c, a)] {
            *counts.entry((p.min(q), p.max(q))).or_default() += 1;
        }
    }
    counts.values().all(|&n| n == 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Exterior,
    OnBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointClass {
    pub location: Location,
    /// Solid-angle weight w(r).
    pub weight: f64,
}

impl PointClass {
    fn new(location: Location) -> Self {
        let weight = match location {
            Location::Interior => 4.0 * PI,
            Location::OnBoundary => 2.0 * PI,
            Location::Exterior => 0.0,
        };
        Self { location, weight }
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

enum RayHit {
    Miss,
    Hit,
    Ambiguous,
}

/// Moller-Trumbore with explicit detection of grazing configurations.
fn ray_triangle(origin: &Point3, dir: &Point3, a: &Point3, b: &Point3, c: &Point3) -> RayHit {
    const EDGE_EPS: f64 = 1e-9;
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm();
    if det.abs() < 1e-12 * scale {
        // Ray parallel to the plane: only a problem if it lies in it.
        let dist = (origin - a).dot(&e1.cross(&e2)) / e1.cross(&e2).norm();
        return if dist.abs() < 1e-12 {
            RayHit::Ambiguous
        } else {
            RayHit::Miss
        };
    }
    let inv = 1.0 / det;
    let t_vec = origin - a;
    let u = t_vec.dot(&p) * inv;
    let q = t_vec.cross(&e1);
    let v = dir.dot(&q) * inv;
    let t = e2.dot(&q) * inv;
    if t < 0.0 {
        return RayHit::Miss;
    }
    let outside = u < -EDGE_EPS || v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS;
    if outside {
        return RayHit::Miss;
    }
    let near_edge = u < EDGE_EPS || v < EDGE_EPS || u + v > 1.0 - EDGE_EPS;
    if near_edge {
        RayHit::Ambiguous
    } else {
        RayHit::Hit
    }
}

/// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Face order used for the six shoebox impedances.
pub const SHOEBOX_FACES: [&str; 6] = ["x0", "x1", "y0", "y1", "z0", "z1"];

/// Closed axis-aligned box `[0,Lx]x[0,Ly]x[0,Lz]` with inward normals. Each face is
/// tiled with `ceil(L / target_edge)` quads per axis, each split into two triangles.
/// Impedances are given in [`SHOEBOX_FACES`] order.
pub fn make_shoebox(
    lengths: [f64; 3],
    target_edge: f64,
    face_impedances: [Impedance; 6],
) -> Result<BoundaryMesh> {
    for (axis, &l) in lengths.iter().enumerate() {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box dimension {axis} must be positive, got {l}"
            )));
        }
    }
    if !(target_edge.is_finite() && target_edge > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target edge must be positive, got {target_edge}"
        )));
    }
    let counts = lengths.map(|l| ((l / target_edge).ceil() as usize).max(1));

    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |ijk: [usize; 3]| -> usize {
        *index.entry(ijk).or_insert_with(|| {
            let p = Point3::new(
                lengths[0] * ijk[0] as f64 / counts[0] as f64,
                lengths[1] * ijk[1] as f64 / counts[1] as f64,
                lengths[2] * ijk[2] as f64 / counts[2] as f64,
            );
            vertices.push(p);
            vertices.len() - 1
        })
    };

    let mut triangles = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let face = 2 * axis + side;
            let fixed = side * counts[axis];
            // inward normal along +axis on the low face, -axis on the high face
            let inward = if side == 0 { 1.0 } else { -1.0 };
            for i in 0..counts[u] {
                for j in 0..counts[v] {
                    let lattice = |di: usize, dj: usize| {
                        let mut ijk = [0usize; 3];
                        ijk[axis] = fixed;
                        ijk[u] = i + di;
                        ijk[v] = j + dj;
                        ijk
                    };
                    let p00 = vertex(lattice(0, 0));
                    let p10 = vertex(lattice(1, 0));
                    let p11 = vertex(lattice(1, 1));
                    let p01 = vertex(lattice(0, 1));
                    // (u, v, axis) is right-handed, so u-then-v winding gives +axis normal.
                    let quads = if inward > 0.0 {
                        [[p00, p10, p11], [p00, p11, p01]]
                    } else {
                        [[p00, p11, p10], [p00, p01, p11]]
                    };
                    for tri in quads {
                        triangles.push(TriangleSpec {
                            vertices: tri,
                            impedance: face_impedances[face],
                            group: SHOEBOX_FACES[face].to_string(),
                        });
                    }
                }
            }
        }
    }
    BoundaryMesh::new(vertices, triangles)
}

/// Flat rectangular plate in the plane z = `height`, centred on the origin, with
/// normals along +z. The mesh is open; it is used for single-reflection studies.
pub fn make_plate(
    size: [f64; 2],
    height: f64,
    target_edge: f64,
    impedance: Impedance,
) -> Result<BoundaryMesh> {
    if !(size.iter().all(|l| l.is_finite() && *l > 0.0) && target_edge > 0.0) {
        return Err(Error::InvalidParameter(
            "plate size and target edge must be positive".into(),
        ));
    }
    let counts = size.map(|l| ((l / target_edge).ceil() as usize).max(1));
    let mut vertices = Vec::with_capacity((counts[0] + 1) * (counts[1] + 1));
    for i in 0..=counts[0] {
        for j in 0..=counts[1] {
            vertices.push(Point3::new(
                -0.5 * size[0] + size[0] * i as f64 / counts[0] as f64,
                -0.5 * size[1] + size[1] * j as f64 / counts[1] as f64,
                height,
            ));
        }
    }
    let id = |i: usize, j: usize| i * (counts[1] + 1) + j;
    let mut triangles = Vec::with_capacity(2 * counts[0] * counts[1]);
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for tri in [
                [id(i, j), id(i + 1, j), id(i + 1, j + 1)],
                [id(i, j), id(i + 1, j + 1), id(i, j + 1)],
            ] {
                triangles.push(TriangleSpec {
                    vertices: tri,
                    impedance,
                    group: "plate".into(),
                });
            }
        }
    }
    BoundaryMesh::new(vertices, triangles)
}

/// Complete acoustic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub mesh: BoundaryMesh,
    pub medium: Medium,
    pub source: Point3,
    pub receivers: Vec<Point3>,
}

impl Scene {
    pub fn new(
        mesh: BoundaryMesh,
        medium: Medium,
        source: Point3,
        receivers: Vec<Point3>,
    ) -> Result<Self> {
        if receivers.is_empty() {
            return Err(Error::InvalidParameter("scene has no receivers".into()));
        }
        Ok(Self {
            mesh,
            medium,
            source,
            receivers,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Warn when fewer elements than this fit in one wavelength.
    pub min_elements_per_wavelength: f64,
    /// Minimum allowed distance of source and receivers from the boundary.
    pub min_clearance: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            min_elements_per_wavelength: 4.0,
            min_clearance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDiagnostics {
    pub wavelength: f64,
    pub median_element_size: f64,
    pub elements_per_wavelength: f64,
    pub source_clearance: f64,
    pub receiver_clearances: Vec<f64>,
    pub closed: bool,
    pub warnings: Vec<String>,
}

/// Checks physical and numerical sanity of a scene at `max_frequency`. Resolution
/// problems are warnings; positions outside the room or too close to it are errors.
pub fn validate_scene(
    scene: &Scene,
    max_frequency: f64,
    options: &ValidationOptions,
) -> Result<SceneDiagnostics> {
    if !(max_frequency > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max frequency must be positive, got {max_frequency}"
        )));
    }
    let mesh = &scene.mesh;
    let check = |label: &str, p: &Point3| -> Result<f64> {
        if mesh.is_closed() {
            let class = mesh.classify_point(p)?;
            match class.location {
                Location::Interior => {}
                Location::OnBoundary => {
                    return Err(Error::Validation(format!(
                        "{label} {p:?} lies on the boundary"
                    )))
                }
                Location::Exterior => {
                    return Err(Error::Validation(format!(
                        "{label} {p:?} lies outside the room"
                    )))
                }
            }
        }
        let clearance = mesh.distance_to(p);
        if clearance < options.min_clearance {
            return Err(Error::Validation(format!(
                "{label} {p:?} is {clearance:e} m from the boundary (minimum {:e} m)",
                options.min_clearance
            )));
        }
        Ok(clearance)
    };
    let source_clearance = check("source", &scene.source)?;
    let receiver_clearances = scene
        .receivers
        .iter()
        .enumerate()
        .map(|(i, r)| check(&format!("receiver {i}"), r))
        .collect::<Result<Vec<_>>>()?;
    for (i, r) in scene.receivers.iter().enumerate() {
        if (r - scene.source).norm() == 0.0 {
            return Err(Error::Validation(format!(
                "receiver {i} coincides with the source"
            )));
        }
    }

    let wavelength = scene.medium.sound_speed / max_frequency;
    let median_element_size = mesh.median_element_size();
    let elements_per_wavelength = wavelength / median_element_size;
    let mut warnings = Vec::new();
    if elements_per_wavelength < options.min_elements_per_wavelength {
        warnings.push(format!(
            "mesh resolution {elements_per_wavelength:.2} elements per wavelength at {max_frequency} Hz \
             is below {:.1}",
            options.min_elements_per_wavelength
        ));
    }
    if !mesh.is_closed() {
        warnings.push("mesh is open; interior classification skipped".into());
    }
    Ok(SceneDiagnostics {
        wavelength,
        median_element_size,
        elements_per_wavelength,
        source_clearance,
        receiver_clearances,
        closed: mesh.is_closed(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rigid() -> [Impedance; 6] {
        [Impedance::Rigid; 6]
    }

    #[test]
    fn shoebox_tiling_counts_and_area() {
        let m = make_shoebox([1.0, 1.0, 1.0], 0.5, rigid()).unwrap();
        assert_eq!(m.len(), 48);
        assert!((m.total_area() - 6.0).abs() < 1e-12);
        assert!(m.is_closed());

        let m = make_shoebox([2.0, 1.5, 1.0], 0.25, rigid()).unwrap();
        assert_eq!(m.len(), 416);
        assert!((m.total_area() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn shoebox_normals_point_inward() {
        let m = make_shoebox([1.0, 1.0, 1.0], 1.0, rigid()).unwrap();
        assert_eq!(m.len(), 12);
        let center = Point3::new(0.5, 0.5, 0.5);
        for e in m.elements() {
            assert!(e.normal.dot(&(center - e.centroid)) > 0.0);
            assert!((e.normal.norm() - 1.0).abs() < 1e-12);
        }
        m.check_orientation().unwrap();
    }

    #[test]
    fn shoebox_signed_volume_witness() {
        let m = make_shoebox([2.0, 1.5, 1.0], 0.3, rigid()).unwrap();
        let v = m.signed_volume();
        assert!((v + 3.0).abs() < 1e-9 * 3.0, "signed volume {v}");
    }

    #[test]
    fn shoebox_face_impedances() {
        let mut z = rigid();
        z[3] = Impedance::Finite(415.0);
        let m = make_shoebox([1.0, 2.0, 1.0], 0.5, z).unwrap();
        for e in m.elements() {
            let on_y1 = (e.centroid.y - 2.0).abs() < 1e-12;
            assert_eq!(e.group == "y1", on_y1);
            assert_eq!(e.impedance == Impedance::Finite(415.0), on_y1);
        }
    }

    #[test]
    fn shoebox_rejects_bad_input() {
        assert!(make_shoebox([0.0, 1.0, 1.0], 0.5, rigid()).is_err());
        assert!(make_shoebox([1.0, 1.0, 1.0], -0.5, rigid()).is_err());
        let msg = make_shoebox([1.0, -2.0, 1.0], 0.5, rigid())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("dimension 1"));
    }

    #[test]
    fn classify_unit_cube() {
        let m = make_shoebox([1.0, 1.0, 1.0], 0.5, rigid()).unwrap();
        let c = m.classify_point(&Point3::new(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(c.location, Location::Interior);
        assert_eq!(c.weight, 4.0 * PI);
        let c = m.classify_point(&Point3::new(2.0, 2.0, 2.0)).unwrap();
        assert_eq!(c.location, Location::Exterior);
        assert_eq!(c.weight, 0.0);
        let c = m.classify_point(&Point3::new(0.5, 0.5, 0.0)).unwrap();
        assert_eq!(c.location, Location::OnBoundary);
        assert_eq!(c.weight, 2.0 * PI);
    }

    #[test]
    fn classify_requires_closed_mesh() {
        let plate = make_plate([1.0, 1.0], 0.0, 0.5, Impedance::Rigid).unwrap();
        assert!(!plate.is_closed());
        assert!(matches!(
            plate.classify_point(&Point3::new(0.0, 0.0, 1.0)),
            Err(Error::OpenMesh(_))
        ));
    }

    #[test]
    fn flipped_mesh_reports_first_element() {
        let m = make_shoebox([1.0, 1.0, 1.0], 0.5, rigid()).unwrap();
        let tris = m
            .elements()
            .iter()
            .map(|e| TriangleSpec {
                vertices: [e.vertices[0], e.vertices[2], e.vertices[1]],
                impedance: e.impedance,
                group: e.group.clone(),
            })
            .collect();
        let flipped = BoundaryMesh::new(m.vertices().to_vec(), tris).unwrap();
        assert_eq!(
            flipped.check_orientation(),
            Err(Error::Orientation { index: 0 })
        );
    }

    #[test]
    fn degenerate_triangle_rejected_with_index() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let tri = |vertices| TriangleSpec {
            vertices,
            impedance: Impedance::Rigid,
            group: "g".into(),
        };
        let err = BoundaryMesh::new(v, vec![tri([0, 1, 2]), tri([0, 1, 3])]).unwrap_err();
        assert!(matches!(err, Error::DegenerateElement { index: 1, .. }));
    }

    #[test]
    fn validate_resolution_and_positions() {
        let mesh = make_shoebox([2.0, 1.5, 1.0], 0.25, rigid()).unwrap();
        let scene = Scene::new(
            mesh.clone(),
            Medium::default(),
            Point3::new(0.5, 0.4, 0.3),
            vec![Point3::new(1.4, 1.1, 0.7)],
        )
        .unwrap();
        let d = validate_scene(&scene, 171.5, &ValidationOptions::default()).unwrap();
        assert!((d.wavelength - 2.0).abs() < 1e-12);
        assert!((d.median_element_size - 0.25 * 2f64.sqrt()).abs() < 1e-12);
        assert!((d.elements_per_wavelength - 2.0 / (0.25 * 2f64.sqrt())).abs() < 1e-9);
        assert!(d.warnings.is_empty());

        let corner = Scene::new(
            mesh.clone(),
            Medium::default(),
            Point3::new(0.0, 0.0, 0.0),
            vec![Point3::new(1.0, 1.0, 0.5)],
        )
        .unwrap();
        assert!(matches!(
            validate_scene(&corner, 100.0, &ValidationOptions::default()),
            Err(Error::Validation(_))
        ));

        let cube = make_shoebox([1.0, 1.0, 1.0], 0.5, rigid()).unwrap();
        let outside = Scene::new(
            cube,
            Medium::default(),
            Point3::new(0.5, 0.5, 0.5),
            vec![Point3::new(5.0, 5.0, 5.0)],
        )
        .unwrap();
        assert!(validate_scene(&outside, 100.0, &ValidationOptions::default()).is_err());
    }

    #[test]
    fn low_resolution_warns() {
        let mesh = make_shoebox([1.0, 1.0, 1.0], 0.5, rigid()).unwrap();
        let scene = Scene::new(
            mesh,
            Medium::default(),
            Point3::new(0.3, 0.4, 0.5),
            vec![Point3::new(0.7, 0.6, 0.5)],
        )
        .unwrap();
        let d = validate_scene(&scene, 1000.0, &ValidationOptions::default()).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn closest_point_cases() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let p = closest_point_on_triangle(&Point3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert!((p - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let p = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(p, a);
        let p = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((p - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
