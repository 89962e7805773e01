//! Galerkin assembly of the discrete operator set `{A, B, C, D}` at one Laplace point.
//!
//! Basis functions are orthonormal piecewise constants, `phi_n = |Gamma_n|^(-1/2)` on
//! element `n`, with test functions equal to basis functions. Every matrix entry is a
//! finite sum of quadrature nodes
//!
//! ```text
//! entry(s) = sum_i (s g_i + h_i) exp(-s tau_i)
//! ```
//!
//! where `(tau_i, g_i, h_i)` depend on geometry only. [`Assembler`] can keep these
//! nodes in memory so repeated assemblies at different `s` only redo the sum. Each
//! entry is summed in a fixed node order, so cached and uncached assemblies, and runs
//! with different thread counts, produce bit-identical matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{delay_factor, gh_from_geometry, propagation, LaplacePoint, SolidAngle};
use crate::quadrature::{subdivide, QuadratureRule};
use crate::scene::{closest_point_on_triangle, BoundaryMesh, Medium, Scene};
use crate::{CMatrix, CVector, Complex, Point3};

/// The discrete state-space operators at one Laplace point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub s: LaplacePoint,
    /// State transition, N x N.
    pub a: CMatrix,
    /// Source to boundary, N x 1.
    pub b: CVector,
    /// Boundary to receivers, M x N.
    pub c: CMatrix,
    /// Source to receivers (direct sound), M x 1.
    pub d: CVector,
}

impl OperatorSet {
    /// Builds an operator set from explicit matrices, checking dimensions.
    pub fn from_parts(
        s: LaplacePoint,
        a: CMatrix,
        b: CVector,
        c: CMatrix,
        d: CVector,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.ncols() != n || d.len() != c.nrows() {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}, C {}x{}, D {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.nrows(),
                c.ncols(),
                d.len()
            )));
        }
        Ok(Self { s, a, b, c, d })
    }

    /// Number of boundary unknowns.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of receivers.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }
}

/// Receives the leaf sub-pairs of near-field refinement.
type PairEmitter<'f> = dyn FnMut(&[Point3; 3], &[Point3; 3], &mut Vec<Node>) + 'f;

/// Geometry-only quadrature node. The contribution at `s` is `(s g + h) exp(-s tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    tau: f64,
    g: f64,
    h: f64,
}

#[inline]
fn accumulate(nodes: &[Node], s: LaplacePoint) -> Complex {
    let sv = s.value();
    let mut acc = Complex::new(0.0, 0.0);
    for node in nodes {
        acc += (sv * node.g + node.h) * delay_factor(s, node.tau);
    }
    acc
}

#[derive(Debug, Clone)]
struct ElementData {
    corners: [Point3; 3],
    centroid: Point3,
    normal: Point3,
    diameter: f64,
    /// |Gamma_n|^(-1/2)
    basis_norm: f64,
    /// rho / Z, zero for rigid elements
    density_ratio: f64,
    rigid: bool,
}

fn triangle_centroid(t: &[Point3; 3]) -> Point3 {
    (t[0] + t[1] + t[2]) / 3.0
}

fn triangle_diameter(t: &[Point3; 3]) -> f64 {
    (t[1] - t[0])
        .norm()
        .max((t[2] - t[1]).norm())
        .max((t[0] - t[2]).norm())
}

/// Flattened per-entry node lists.
#[derive(Debug, Clone, Default)]
struct NodeTable {
    offsets: Vec<usize>,
    nodes: Vec<Node>,
}

impl NodeTable {
    fn entry(&self, k: usize) -> &[Node] {
        &self.nodes[self.offsets[k]..self.offsets[k + 1]]
    }

    fn bytes(&self) -> usize {
        self.nodes.len() * std::mem::size_of::<Node>()
            + self.offsets.len() * std::mem::size_of::<usize>()
    }
}

#[derive(Debug, Clone, Default)]
struct GeometryCache {
    a: NodeTable,
    b: Option<NodeTable>,
    c: NodeTable,
}

/// Assembles operator sets for a fixed geometry at arbitrary Laplace points.
#[derive(Debug, Clone)]
pub struct Assembler<'a> {
    mesh: &'a BoundaryMesh,
    medium: Medium,
    source: Option<Point3>,
    receivers: &'a [Point3],
    quadrature: QuadratureRule,
    elements: Vec<ElementData>,
    cache: Option<GeometryCache>,
}

/// Default memory budget for the geometry cache.
pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

impl<'a> Assembler<'a> {
    /// Assembler for a full scene. Source and receivers must keep at least
    /// `min_clearance` from the boundary.
    pub fn new(scene: &'a Scene, quadrature: QuadratureRule) -> Result<Self> {
        Self::from_parts(
            &scene.mesh,
            scene.medium,
            Some(scene.source),
            &scene.receivers,
            quadrature,
        )
    }

    /// Assembler over borrowed pieces; `source` may be absent when only A and C are needed.
    pub fn from_parts(
        mesh: &'a BoundaryMesh,
        medium: Medium,
        source: Option<Point3>,
        receivers: &'a [Point3],
        quadrature: QuadratureRule,
    ) -> Result<Self> {
        let elements = mesh
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| ElementData {
                corners: mesh.corners(i),
                centroid: e.centroid,
                normal: e.normal,
                diameter: e.diameter,
                basis_norm: 1.0 / e.area.sqrt(),
                density_ratio: e.impedance.density_ratio(medium.density),
                rigid: e.impedance.is_rigid(),
            })
            .collect();
        let assembler = Self {
            mesh,
            medium,
            source,
            receivers,
            quadrature,
            elements,
            cache: None,
        };
        if let Some(u) = source {
            assembler.check_clearance("source", &u)?;
        }
        for (i, r) in receivers.iter().enumerate() {
            assembler.check_clearance(&format!("receiver {i}"), r)?;
            if let Some(u) = source {
                if *r == u {
                    return Err(Error::SingularEvaluation);
                }
            }
        }
        Ok(assembler)
    }

    fn check_clearance(&self, label: &str, p: &Point3) -> Result<()> {
        let d = self.mesh.distance_to(p);
        if d < MIN_CLEARANCE {
            return Err(Error::Validation(format!(
                "{label} is {d:e} m from the boundary; quadrature needs at least {MIN_CLEARANCE:e} m"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn m(&self) -> usize {
        self.receivers.len()
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// Precomputes all geometry-only node data if it fits in `max_bytes`. Returns
    /// whether the cache is active; results are identical either way.
    pub fn enable_cache(&mut self, max_bytes: usize) -> bool {
        if self.cache.is_some() {
            return true;
        }
        let n = self.n();
        let mut budget = Budget {
            max: max_bytes,
            used: 0,
        };
        let build = |count: usize, budget: &mut Budget, fill: &dyn Fn(usize, &mut Vec<Node>)| {
            let mut table = NodeTable {
                offsets: Vec::with_capacity(count + 1),
                nodes: Vec::new(),
            };
            table.offsets.push(0);
            for k in 0..count {
                fill(k, &mut table.nodes);
                table.offsets.push(table.nodes.len());
                if budget.used + table.bytes() > budget.max {
                    return None;
                }
            }
            budget.used += table.bytes();
            Some(table)
        };
        let Some(a) = build(n * n, &mut budget, &|k, out| {
            self.a_nodes(k / n, k % n, out)
        }) else {
            return false;
        };
        let b = match self.source {
            Some(u) => match build(n, &mut budget, &|k, out| self.b_nodes(k, &u, out)) {
                Some(t) => Some(t),
                None => return false,
            },
            None => None,
        };
        let Some(c) = build(self.m() * n, &mut budget, &|k, out| {
            self.c_nodes(&self.receivers[k / n], k % n, out)
        }) else {
            return false;
        };
        self.cache = Some(GeometryCache { a, b, c });
        true
    }

    pub fn disable_cache(&mut self) {
        self.cache = None;
    }

    /// All four operators at `s`.
    pub fn assemble(&self, s: LaplacePoint) -> Result<OperatorSet> {
        Ok(OperatorSet {
            s,
            a: self.assemble_a(s),
            b: self.assemble_b(s)?,
            c: self.assemble_c(s),
            d: self.assemble_d(s)?,
        })
    }

    pub fn assemble_a(&self, s: LaplacePoint) -> CMatrix {
        let n = self.n();
        let rows: Vec<Vec<Complex>> = (0..n)
            .into_par_iter()
            .map(|row| {
                let mut buf = Vec::new();
                (0..n)
                    .map(|col| match &self.cache {
                        Some(cache) => accumulate(cache.a.entry(row * n + col), s),
                        None => {
                            buf.clear();
                            self.a_nodes(row, col, &mut buf);
                            accumulate(&buf, s)
                        }
                    })
                    .collect()
            })
            .collect();
        CMatrix::from_fn(n, n, |i, j| rows[i][j])
    }

    pub fn assemble_b(&self, s: LaplacePoint) -> Result<CVector> {
        let u = self
            .source
            .ok_or_else(|| Error::InvalidParameter("no source position given".into()))?;
        let values: Vec<Complex> = (0..self.n())
            .into_par_iter()
            .map(|k| match self.cache.as_ref().and_then(|c| c.b.as_ref()) {
                Some(table) => accumulate(table.entry(k), s),
                None => {
                    let mut buf = Vec::new();
                    self.b_nodes(k, &u, &mut buf);
                    accumulate(&buf, s)
                }
            })
            .collect();
        Ok(CVector::from_vec(values))
    }

    pub fn assemble_c(&self, s: LaplacePoint) -> CMatrix {
        let n = self.n();
        let m = self.m();
        let values: Vec<Complex> = (0..m * n)
            .into_par_iter()
            .map(|k| match &self.cache {
                Some(cache) => accumulate(cache.c.entry(k), s),
                None => {
                    let mut buf = Vec::new();
                    self.c_nodes(&self.receivers[k / n], k % n, &mut buf);
                    accumulate(&buf, s)
                }
            })
            .collect();
        CMatrix::from_row_slice(m, n, &values)
    }

    pub fn assemble_d(&self, s: LaplacePoint) -> Result<CVector> {
        let u = self
            .source
            .ok_or_else(|| Error::InvalidParameter("no source position given".into()))?;
        assemble_d(self.receivers, &u, s, &self.medium)
    }

    fn is_near(&self, a: &[Point3; 3], b: &[Point3; 3]) -> bool {
        let dist = (triangle_centroid(a) - triangle_centroid(b)).norm();
        dist < self.quadrature.near_field_threshold * triangle_diameter(a).max(triangle_diameter(b))
    }

    /// Nodes of A(row, col): test element `row` (observation b), basis element `col`
    /// (integration point beta), boundary weight 2 pi.
    fn a_nodes(&self, row: usize, col: usize, out: &mut Vec<Node>) {
        let en = &self.elements[row];
        let ev = &self.elements[col];
        let scale = en.basis_norm * ev.basis_norm;
        let c = self.medium.sound_speed;
        let w = SolidAngle::Boundary.weight();

        if row == col {
            // Flat element: cos(theta) vanishes identically, only the impedance term is left.
            if ev.rigid {
                return;
            }
            for (b, wb) in self.quadrature.triangle.map(&en.corners) {
                self.quadrature
                    .polar
                    .for_each_node(&b, &ev.corners, |_, r, wbeta| {
                        let k = gh_from_geometry(r, 0.0, ev.density_ratio, c, w);
                        let weight = wb * wbeta * scale;
                        out.push(Node {
                            tau: r / c,
                            g: weight * k.g,
                            h: weight * k.h,
                        });
                    });
            }
            return;
        }

        let scale_len = en.diameter.max(ev.diameter);
        let coplanar = (en.normal - ev.normal).norm() < 1e-12
            && ev.normal.dot(&(en.centroid - ev.centroid)).abs() < 1e-12 * scale_len;
        if coplanar && ev.rigid {
            return;
        }
        let mut emit = |ta: &[Point3; 3], tb: &[Point3; 3], out: &mut Vec<Node>| {
            for (b, wb) in self.quadrature.triangle.map(ta) {
                for (beta, wbeta) in self.quadrature.triangle.map(tb) {
                    let d = b - beta;
                    let r = d.norm();
                    let cos = if coplanar { 0.0 } else { d.dot(&ev.normal) / r };
                    let k = gh_from_geometry(r, cos, ev.density_ratio, c, w);
                    let weight = wb * wbeta * scale;
                    out.push(Node {
                        tau: r / c,
                        g: weight * k.g,
                        h: weight * k.h,
                    });
                }
            }
        };
        self.refine_pair(&en.corners, &ev.corners, 0, &mut emit, out);
    }

    fn refine_pair(
        &self,
        a: &[Point3; 3],
        b: &[Point3; 3],
        level: usize,
        emit: &mut PairEmitter<'_>,
        out: &mut Vec<Node>,
    ) {
        if level >= self.quadrature.near_field_levels || !self.is_near(a, b) {
            emit(a, b, out);
            return;
        }
        let sa = subdivide(a);
        let sb = subdivide(b);
        for ta in &sa {
            for tb in &sb {
                self.refine_pair(ta, tb, level + 1, emit, out);
            }
        }
    }

    /// Single integral over element `elem` with a point singularity at `point` off the
    /// element; subdivides while the point is within the near-field radius.
    fn refine_single(
        &self,
        t: &[Point3; 3],
        point: &Point3,
        level: usize,
        emit: &mut dyn FnMut(&Point3, f64, &mut Vec<Node>),
        out: &mut Vec<Node>,
    ) {
        let near = (triangle_centroid(t) - point).norm()
            < self.quadrature.near_field_threshold * triangle_diameter(t);
        if level >= self.quadrature.near_field_levels || !near {
            for (x, w) in self.quadrature.triangle.map(t) {
                emit(&x, w, out);
            }
            return;
        }
        for sub in &subdivide(t) {
            self.refine_single(sub, point, level + 1, emit, out);
        }
    }

    fn b_nodes(&self, elem: usize, source: &Point3, out: &mut Vec<Node>) {
        let e = &self.elements[elem];
        let c = self.medium.sound_speed;
        let mut emit = |x: &Point3, w: f64, out: &mut Vec<Node>| {
            let r = (x - source).norm();
            out.push(Node {
                tau: r / c,
                g: 0.0,
                h: w * e.basis_norm * 2.0 / r,
            });
        };
        self.refine_single(&e.corners, source, 0, &mut emit, out);
    }

    fn c_nodes(&self, receiver: &Point3, elem: usize, out: &mut Vec<Node>) {
        let e = &self.elements[elem];
        let c = self.medium.sound_speed;
        let w = SolidAngle::Interior.weight();
        let mut emit = |beta: &Point3, wbeta: f64, out: &mut Vec<Node>| {
            let d = receiver - beta;
            let r = d.norm();
            let k = gh_from_geometry(r, d.dot(&e.normal) / r, e.density_ratio, c, w);
            let weight = wbeta * e.basis_norm;
            out.push(Node {
                tau: r / c,
                g: weight * k.g,
                h: weight * k.h,
            });
        };
        self.refine_single(&e.corners, receiver, 0, &mut emit, out);
    }

    /// Distance from a point to element `elem`.
    pub fn element_distance(&self, elem: usize, p: &Point3) -> f64 {
        let [a, b, c] = self.elements[elem].corners;
        (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
    }
}

struct Budget {
    max: usize,
    used: usize,
}

/// Source and receivers closer than this to the boundary are rejected by assembly.
pub const MIN_CLEARANCE: f64 = 1e-3;

/// State-transition matrix A(s).
pub fn assemble_a(
    mesh: &BoundaryMesh,
    medium: &Medium,
    s: LaplacePoint,
    quadrature: &QuadratureRule,
) -> Result<CMatrix> {
    Ok(Assembler::from_parts(mesh, *medium, None, &[], quadrature.clone())?.assemble_a(s))
}

/// Source column B(s).
pub fn assemble_b(
    mesh: &BoundaryMesh,
    source: &Point3,
    medium: &Medium,
    s: LaplacePoint,
    quadrature: &QuadratureRule,
) -> Result<CVector> {
    Assembler::from_parts(mesh, *medium, Some(*source), &[], quadrature.clone())?.assemble_b(s)
}

/// Measurement matrix C(s).
pub fn assemble_c(
    mesh: &BoundaryMesh,
    receivers: &[Point3],
    medium: &Medium,
    s: LaplacePoint,
    quadrature: &QuadratureRule,
) -> Result<CMatrix> {
    Ok(Assembler::from_parts(mesh, *medium, None, receivers, quadrature.clone())?.assemble_c(s))
}

/// Direct-sound column D(s), entry m = exp(-s R_m / c) / R_m.
pub fn assemble_d(
    receivers: &[Point3],
    source: &Point3,
    s: LaplacePoint,
    medium: &Medium,
) -> Result<CVector> {
    let values = receivers
        .iter()
        .map(|r| {
            let d = (r - source).norm();
            if d == 0.0 {
                return Err(Error::SingularEvaluation);
            }
            Ok(propagation(s, d, medium) / d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(values))
}

/// Operator set for a scene at `s`, without caching.
pub fn assemble_operator_set(
    scene: &Scene,
    s: LaplacePoint,
    quadrature: &QuadratureRule,
) -> Result<OperatorSet> {
    Assembler::new(scene, quadrature.clone())?.assemble(s)
}
