//! Quadrature on triangles: symmetric Gauss rules for regular integrands, collapsed
//! Gauss-Legendre products for higher degrees, and a polar rule that removes the
//! `1/R` singularity of self-interaction integrals.

use crate::error::{Error, Result};
use crate::Point3;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`.
///
/// Points are `(xi, eta)`, mapped as `a + xi (b - a) + eta (c - a)`. Weights sum to
/// the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Symmetric 12-point rule exact for polynomials of degree 6 (Dunavant).
    pub fn degree6() -> Self {
        let mut points = Vec::with_capacity(12);
        let mut weights = Vec::with_capacity(12);
        let mut orbit3 = |a: f64, w: f64| {
            let b = 0.5 * (1.0 - a);
            for p in [[a, b], [b, a], [b, b]] {
                points.push(p);
                weights.push(0.5 * w);
            }
        };
        orbit3(0.501426509658179, 0.116786275726379);
        orbit3(0.873821971016996, 0.050844906370207);
        let (a, b) = (0.053145049844817, 0.310352451033784);
        let c = 1.0 - a - b;
        for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
            points.push(p);
            weights.push(0.5 * 0.082851075618374);
        }
        Self {
            points,
            weights,
            degree: 6,
        }
    }

    /// Collapsed (Duffy) product of `n x n` Gauss-Legendre points, exact for
    /// polynomials of degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u = x[i];
                let v = x[j];
                points.push([u, v * (1.0 - u)]);
                weights.push(w[i] * w[j] * (1.0 - u));
            }
        }
        Self {
            points,
            weights,
            degree: 2 * n - 2,
        }
    }

    /// Cheapest available rule exact to at least `degree`.
    pub fn with_degree(degree: usize) -> Self {
        if degree <= 6 {
            Self::degree6()
        } else {
            Self::collapsed((degree + 3) / 2)
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and weights on triangle `corners`; weights sum to its area.
    pub fn map(&self, corners: &[Point3; 3]) -> impl Iterator<Item = (Point3, f64)> + '_ {
        let [a, b, c] = *corners;
        let jac = (b - a).cross(&(c - a)).norm();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&[xi, eta], &w)| (a + (b - a) * xi + (c - a) * eta, w * jac))
    }
}

/// Splits a triangle into four by its edge midpoints.
pub fn subdivide(t: &[Point3; 3]) -> [[Point3; 3]; 4] {
    let [a, b, c] = *t;
    let ab = (a + b) * 0.5;
    let bc = (b + c) * 0.5;
    let ca = (c + a) * 0.5;
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

/// Polar rule about a point lying in the plane of a triangle.
///
/// The triangle is split into three sub-triangles sharing the pole; each is integrated
/// in polar coordinates with `angular` Gauss points in angle and `radial` points in
/// radius. Weights include the `r` Jacobian, so a `1/R` integrand becomes smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRule {
    radial: (Vec<f64>, Vec<f64>),
    angular: (Vec<f64>, Vec<f64>),
}

impl PolarRule {
    pub fn new(radial: usize, angular: usize) -> Result<Self> {
        if radial == 0 || angular == 0 {
            return Err(Error::InvalidParameter(
                "polar rule needs at least one radial and one angular point".into(),
            ));
        }
        Ok(Self {
            radial: gauss_legendre(radial),
            angular: gauss_legendre(angular),
        })
    }

    pub fn radial_points(&self) -> usize {
        self.radial.0.len()
    }

    pub fn angular_points(&self) -> usize {
        self.angular.0.len()
    }

    /// Calls `f(point, distance_from_pole, weight)` for every node.
    pub fn for_each_node<F>(&self, pole: &Point3, corners: &[Point3; 3], mut f: F)
    where
        F: FnMut(&Point3, f64, f64),
    {
        for k in 0..3 {
            let p = corners[k];
            let q = corners[(k + 1) % 3];
            let edge = q - p;
            let edge_len = edge.norm();
            let along = edge / edge_len;
            let foot = p + along * (pole - p).dot(&along);
            let to_foot = foot - pole;
            let h = to_foot.norm();
            if h <= 1e-14 * edge_len {
                continue;
            }
            let e1 = to_foot / h;
            let e2 = along;
            let angle = |v: Point3| (v - pole).dot(&e2).atan2((v - pole).dot(&e1));
            let (t0, t1) = (angle(p), angle(q));
            let span = t1 - t0;
            for (&tn, &tw) in self.angular.0.iter().zip(&self.angular.1) {
                let theta = t0 + span * tn;
                let (sin, cos) = theta.sin_cos();
                let rho_max = h / cos;
                let dir = e1 * cos + e2 * sin;
                for (&rn, &rw) in self.radial.0.iter().zip(&self.radial.1) {
                    let r = rho_max * rn;
                    let w = tw * span.abs() * rw * rho_max * r;
                    f(&(pole + dir * r), r, w);
                }
            }
        }
    }
}

/// Quadrature configuration for operator assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Rule used on each element of a regular pair, and for single integrals.
    pub triangle: TriangleRule,
    /// Pairs whose centroid distance is below `near_field_threshold` times the larger
    /// element diameter are subdivided.
    pub near_field_threshold: f64,
    /// Maximum number of 4-way subdivision levels for near pairs.
    pub near_field_levels: usize,
    /// Rule used about each outer point of a self-interaction integral.
    pub polar: PolarRule,
}

impl QuadratureRule {
    pub fn new(
        degree: usize,
        near_field_threshold: f64,
        near_field_levels: usize,
        polar: (usize, usize),
    ) -> Result<Self> {
        if !(near_field_threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "near-field threshold must be non-negative, got {near_field_threshold}"
            )));
        }
        Ok(Self {
            triangle: TriangleRule::with_degree(degree),
            near_field_threshold,
            near_field_levels,
            polar: PolarRule::new(polar.0, polar.1)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.triangle.degree
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(6, 2.0, 2, (16, 16)).expect("default quadrature is valid")
    }
}
