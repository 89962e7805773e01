//! Reference models that share no code with the boundary solver: mirror images,
//! the shoebox image-source method, rigid-box modes and Monte-Carlo integration of
//! single operator entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::LaplacePoint;
use crate::response::{FrequencyGrid, ResponseMetadata, TransferFunction};
use crate::scene::{BoundaryMesh, Medium};
use crate::{CMatrix, Complex, Point3};

/// Plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Point3,
    pub normal: Point3,
}

impl Plane {
    pub fn new(point: Point3, normal: Point3) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidParameter(
                "plane normal must be non-zero".into(),
            ));
        }
        Ok(Self {
            point,
            normal: normal / len,
        })
    }

    /// The plane `coordinate[axis] = offset`.
    pub fn axis(axis: usize, offset: f64) -> Self {
        assert!(axis < 3, "axis index out of range");
        let mut point = Point3::zeros();
        point[axis] = offset;
        let mut normal = Point3::zeros();
        normal[axis] = 1.0;
        Self { point, normal }
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        (p - self.point).dot(&self.normal)
    }
}

/// Reflection of `point` across `plane`.
pub fn mirror_plane(point: &Point3, plane: &Plane) -> Point3 {
    // Axis-aligned planes are mirrored coordinate-wise so repeated mirrors are exact.
    if let Some(axis) = (0..3).find(|&i| plane.normal[i].abs() == 1.0) {
        let mut out = *point;
        out[axis] = 2.0 * plane.point[axis] - point[axis];
        return out;
    }
    point - plane.normal * (2.0 * plane.signed_distance(point))
}

/// One image of the source in a rectangular room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Point3,
    /// Product of the reflection coefficients met along the path.
    pub gain: f64,
    /// Total number of reflections.
    pub order: usize,
}

/// A single image-source contribution seen at a receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub distance: f64,
    /// Travel time, seconds.
    pub delay: f64,
    /// `gain / distance`.
    pub amplitude: f64,
    pub order: usize,
}

/// Image-source model of a rigid-walled or uniformly reflecting shoebox
/// `[0, Lx] x [0, Ly] x [0, Lz]`. Reflection coefficients follow the wall order
/// x0, x1, y0, y1, z0, z1.
#[derive(Debug, Clone, PartialEq)]
pub struct ShoeboxIsm {
    pub lengths: [f64; 3],
    pub source: Point3,
    pub reflection: [f64; 6],
    pub medium: Medium,
}

fn strictly_inside(lengths: &[f64; 3], p: &Point3) -> bool {
    (0..3).all(|i| p[i] > 0.0 && p[i] < lengths[i])
}

impl ShoeboxIsm {
    pub fn new(
        lengths: [f64; 3],
        source: Point3,
        reflection: [f64; 6],
        medium: Medium,
    ) -> Result<Self> {
        if !lengths.iter().all(|l| *l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid room size {lengths:?}"
            )));
        }
        if !strictly_inside(&lengths, &source) {
            return Err(Error::Validation(format!(
                "source {source:?} is not strictly inside the room"
            )));
        }
        Ok(Self {
            lengths,
            source,
            reflection,
            medium,
        })
    }

    /// All images with at most `max_order` reflections. Along each axis an image sits at
    /// `(1 - 2p) x + 2 m L`, reflected `|m - p|` times by the wall at 0 and `|m|` times
    /// by the wall at `L`.
    pub fn images(&self, max_order: usize) -> Vec<ImageSource> {
        let reach = max_order as i64 + 1;
        let axis_terms = |axis: usize| {
            let mut terms = Vec::new();
            for m in -reach..=reach {
                for p in 0..=1i64 {
                    let low = (m - p).unsigned_abs() as usize;
                    let high = m.unsigned_abs() as usize;
                    if low + high > max_order {
                        continue;
                    }
                    let coord = (1 - 2 * p) as f64 * self.source[axis]
                        + 2.0 * m as f64 * self.lengths[axis];
                    let gain = self.reflection[2 * axis].powi(low as i32)
                        * self.reflection[2 * axis + 1].powi(high as i32);
                    terms.push((coord, gain, low + high));
                }
            }
            terms
        };
        let (xs, ys, zs) = (axis_terms(0), axis_terms(1), axis_terms(2));
        let mut images = Vec::new();
        for &(x, gx, ox) in &xs {
            for &(y, gy, oy) in &ys {
                for &(z, gz, oz) in &zs {
                    let order = ox + oy + oz;
                    if order <= max_order {
                        images.push(ImageSource {
                            position: Point3::new(x, y, z),
                            gain: gx * gy * gz,
                            order,
                        });
                    }
                }
            }
        }
        images.sort_by(|a, b| {
            a.order.cmp(&b.order).then_with(|| {
                a.position
                    .iter()
                    .partial_cmp(b.position.iter())
                    .expect("finite coordinates")
            })
        });
        images
    }

    /// Arrivals at `receiver`, sorted by distance.
    pub fn arrivals(&self, receiver: &Point3, max_order: usize) -> Result<Vec<Arrival>> {
        if !strictly_inside(&self.lengths, receiver) {
            return Err(Error::Validation(format!(
                "receiver {receiver:?} is not strictly inside the room"
            )));
        }
        let mut out: Vec<Arrival> = self
            .images(max_order)
            .into_iter()
            .map(|img| {
                let distance = (receiver - img.position).norm();
                Arrival {
                    distance,
                    delay: distance / self.medium.sound_speed,
                    amplitude: img.gain / distance,
                    order: img.order,
                }
            })
            .collect();
        if out.iter().any(|a| a.distance == 0.0) {
            return Err(Error::SingularEvaluation);
        }
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        Ok(out)
    }

    /// `sum gain exp(-s R / c) / R` over all images.
    pub fn transfer_at(
        &self,
        receiver: &Point3,
        s: LaplacePoint,
        max_order: usize,
    ) -> Result<Complex> {
        Ok(sum_arrivals(&self.arrivals(receiver, max_order)?, s))
    }
}

fn sum_arrivals(arrivals: &[Arrival], s: LaplacePoint) -> Complex {
    arrivals
        .iter()
        .map(|a| (-s.value() * a.delay).exp() * a.amplitude)
        .sum()
}

/// Image-source transfer function on `grid`. Bins above `band_limit_hz` are zero;
/// bin 0 is the exact static sum.
pub fn ism_shoebox(
    room: &ShoeboxIsm,
    receivers: &[Point3],
    max_order: usize,
    grid: &FrequencyGrid,
    band_limit_hz: Option<f64>,
) -> Result<TransferFunction> {
    let top = band_limit_hz.unwrap_or(grid.nyquist());
    let mut values = CMatrix::zeros(receivers.len(), grid.bins());
    for (r, receiver) in receivers.iter().enumerate() {
        let arrivals = room.arrivals(receiver, max_order)?;
        for k in 0..grid.bins() {
            let f = grid.frequency(k);
            if f <= top {
                values[(r, k)] = sum_arrivals(&arrivals, LaplacePoint::from_frequency(f));
            }
        }
    }
    let metadata = ResponseMetadata {
        scene_hash: String::new(),
        method: "ism".into(),
        dc_frequency_hz: None,
        band_limit_hz,
    };
    let mut tf = TransferFunction::new(*grid, values, metadata)?;
    tf.enforce_real_edges();
    Ok(tf)
}

/// Eigenfrequency of a rigid box with its mode indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomMode {
    pub frequency: f64,
    pub indices: [usize; 3],
}

/// All rigid-box modes up to `f_max`, sorted by frequency then index.
pub fn rigid_box_modes(lengths: [f64; 3], medium: &Medium, f_max: f64) -> Result<Vec<RoomMode>> {
    if !(f_max > 0.0) || !lengths.iter().all(|l| *l > 0.0) {
        return Err(Error::InvalidParameter(
            "f_max and room lengths must be positive".into(),
        ));
    }
    let c = medium.sound_speed;
    let limit = lengths.map(|l| (2.0 * f_max * l / c).floor() as usize);
    let mut modes = Vec::new();
    for nx in 0..=limit[0] {
        for ny in 0..=limit[1] {
            for nz in 0..=limit[2] {
                if nx + ny + nz == 0 {
                    continue;
                }
                let idx = [nx, ny, nz];
                let sum: f64 = (0..3).map(|i| (idx[i] as f64 / lengths[i]).powi(2)).sum();
                let frequency = 0.5 * c * sum.sqrt();
                if frequency <= f_max {
                    modes.push(RoomMode {
                        frequency,
                        indices: idx,
                    });
                }
            }
        }
    }
    modes.sort_by(|a, b| {
        a.frequency
            .total_cmp(&b.frequency)
            .then(a.indices.cmp(&b.indices))
    });
    Ok(modes)
}

/// Result of a first-order specular reflection from an infinite rigid plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularReflection {
    pub value: Complex,
    /// Image-source to receiver distance.
    pub path_length: f64,
    /// Angle between the specular ray and the plane normal, radians.
    pub incidence: f64,
    /// Outside the high-frequency regime in which a plate acts as a mirror.
    pub grazing: bool,
}

/// Incidence beyond which a reflection is flagged as grazing.
pub const GRAZING_INCIDENCE: f64 = 80.0 * std::f64::consts::PI / 180.0;

/// `exp(-s R'/c) / R'` with `R'` the distance from the mirrored source to the receiver.
/// The grazing flag is set for incidence above 80 degrees or when source or receiver
/// is within `1/k` of the plane.
pub fn mirror_plane_first_order(
    source: &Point3,
    receiver: &Point3,
    plane: &Plane,
    s: LaplacePoint,
    medium: &Medium,
) -> Result<SpecularReflection> {
    let hs = plane.signed_distance(source);
    let hr = plane.signed_distance(receiver);
    if hs * hr <= 0.0 {
        return Err(Error::Validation(
            "source and receiver must lie strictly on the same side of the plane".into(),
        ));
    }
    let image = mirror_plane(source, plane);
    let path = receiver - image;
    let path_length = path.norm();
    let incidence = (path.dot(&plane.normal).abs() / path_length)
        .clamp(0.0, 1.0)
        .acos();
    let k = s.omega.abs() / medium.sound_speed;
    let grazing = incidence > GRAZING_INCIDENCE || k * hs.abs().min(hr.abs()) < 1.0;
    let value = if s.sigma == 0.0 && s.omega == 0.0 {
        Complex::new(1.0 / path_length, 0.0)
    } else {
        (-s.value() * path_length / medium.sound_speed).exp() / path_length
    };
    Ok(SpecularReflection {
        value,
        path_length,
        incidence,
        grazing,
    })
}

/// Integrand for [`monte_carlo_entry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McKernel {
    /// Constant 1; checks the sampler and normalisation.
    Unit,
    /// The boundary operator kernel (interaction entry or receiver entry).
    Operator,
}

/// What is being integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McTarget {
    /// Interaction entry between observation element `row` and source element `col`.
    ElementPair { row: usize, col: usize },
    /// Receiver entry of `element` seen from `point`.
    ElementPoint { element: usize, point: Point3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: Complex,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Combined standard error, `sqrt(se_re^2 + se_im^2)`.
    pub fn std_error(&self) -> f64 {
        self.std_error_re.hypot(self.std_error_im)
    }
}

/// Minimum sample count accepted by [`monte_carlo_entry`].
pub const MC_MIN_SAMPLES: usize = 10_000;
const MC_BLOCK: usize = 1 << 16;

fn sample_triangle(rng: &mut ChaCha8Rng, t: &[Point3; 3]) -> Point3 {
    let r1: f64 = rng.random::<f64>().sqrt();
    let r2: f64 = rng.random();
    t[0] * (1.0 - r1) + t[1] * (r1 * (1.0 - r2)) + t[2] * (r1 * r2)
}

fn triangle_area(t: &[Point3; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Monte-Carlo estimate of one operator entry with uniform sampling on the
/// triangle(s). Entries carry the orthonormal basis scaling `1/sqrt(area)` per
/// element; pair entries use solid angle 2π, receiver entries 4π. Blocks are seeded
/// from `seed` and their index, so the result is deterministic.
pub fn monte_carlo_entry(
    mesh: &BoundaryMesh,
    medium: &Medium,
    target: McTarget,
    kernel: McKernel,
    s: LaplacePoint,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let check = |i: usize| {
        if i >= mesh.len() {
            Err(Error::InvalidParameter(format!("element {i} out of range")))
        } else {
            Ok(())
        }
    };
    let c = medium.sound_speed;
    let sv = s.value();
    // (observation triangle or point, source triangle, normal, rho/Z, solid angle, area product)
    let (obs_tri, obs_point, src, w) = match target {
        McTarget::ElementPair { row, col } => {
            check(row)?;
            check(col)?;
            if row == col {
                return Err(Error::InvalidParameter(
                    "self-pairs have a singular kernel and are not sampled".into(),
                ));
            }
            (
                Some(mesh.corners(row)),
                None,
                col,
                2.0 * std::f64::consts::PI,
            )
        }
        McTarget::ElementPoint { element, point } => {
            check(element)?;
            (None, Some(point), element, 4.0 * std::f64::consts::PI)
        }
    };
    let src_tri = mesh.corners(src);
    let src_elem = &mesh.elements()[src];
    let normal = src_elem.normal;
    let ratio = src_elem.impedance.density_ratio(medium.density);
    let area_product = triangle_area(&src_tri) * obs_tri.as_ref().map_or(1.0, triangle_area);
    let scale = area_product.sqrt();

    let integrand = |r: &Point3, beta: &Point3| -> Complex {
        match kernel {
            McKernel::Unit => Complex::new(1.0, 0.0),
            McKernel::Operator => {
                let d = r - beta;
                let dist = d.norm();
                let cos = d.dot(&normal) / dist;
                let g = (cos / (c * dist) - ratio / dist) / w;
                let h = cos / (w * dist * dist);
                (sv * g + h) * (-sv * dist / c).exp()
            }
        }
    };

    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<[f64; 4]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = [0.0; 4];
            for _ in 0..count {
                let r = match (&obs_tri, &obs_point) {
                    (Some(t), _) => sample_triangle(&mut rng, t),
                    (None, Some(p)) => *p,
                    _ => unreachable!(),
                };
                let beta = sample_triangle(&mut rng, &src_tri);
                let v = integrand(&r, &beta) * scale;
                acc[0] += v.re;
                acc[1] += v.im;
                acc[2] += v.re * v.re;
                acc[3] += v.im * v.im;
            }
            acc
        })
        .collect();
    let total = partial.iter().fold([0.0; 4], |mut a, p| {
        (0..4).for_each(|i| a[i] += p[i]);
        a
    });
    let n = samples as f64;
    let mean = Complex::new(total[0] / n, total[1] / n);
    let var = |sum: f64, sq: f64| ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        value: mean,
        std_error_re: (var(total[0], total[2]) / n).sqrt(),
        std_error_im: (var(total[1], total[3]) / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{make_shoebox, Impedance, TriangleSpec};

    fn cube_ism(reflection: [f64; 6]) -> ShoeboxIsm {
        ShoeboxIsm::new(
            [1.0; 3],
            Point3::new(0.3, 0.4, 0.5),
            reflection,
            Medium::default(),
        )
        .unwrap()
    }

    #[test]
    fn mirror_examples() {
        let x0 = Plane::axis(0, 0.0);
        let p = Point3::new(0.3, 0.5, 0.5);
        assert_eq!(mirror_plane(&p, &x0), Point3::new(-0.3, 0.5, 0.5));
        let on = Point3::new(0.0, 0.2, 0.9);
        assert_eq!(mirror_plane(&on, &x0), on);
        let tilted = Plane::new(Point3::new(0.1, 0.0, 0.0), Point3::new(1.0, 1.0, 0.3)).unwrap();
        let back = mirror_plane(&mirror_plane(&p, &tilted), &tilted);
        assert!((back - p).norm() < 1e-15);
        assert_eq!(mirror_plane(&mirror_plane(&p, &x0), &x0), p);
    }

    #[test]
    fn order_zero_is_direct_path() {
        let room = cube_ism([1.0; 6]);
        let receiver = Point3::new(0.7, 0.6, 0.5);
        let images = room.images(0);
        assert_eq!(images.len(), 1);
        assert_eq!(images[0].position, room.source);
        assert_eq!(images[0].gain, 1.0);
        let s = LaplacePoint::from_frequency(250.0);
        let r = (receiver - room.source).norm();
        let expected = (-s.value() * r / 343.0).exp() / r;
        assert!((room.transfer_at(&receiver, s, 0).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn first_order_cube_arrivals() {
        let room = cube_ism([1.0; 6]);
        let receiver = Point3::new(0.7, 0.6, 0.5);
        let arrivals = room.arrivals(&receiver, 1).unwrap();
        assert_eq!(arrivals.len(), 7);
        assert_eq!(arrivals.iter().filter(|a| a.order == 1).count(), 6);
        let images = room.images(1);
        assert!(images
            .iter()
            .any(|i| i.position == Point3::new(-0.3, 0.4, 0.5)));
        let expected = (1.0f64 + 0.04).sqrt();
        assert!(arrivals
            .iter()
            .any(|a| (a.distance - expected).abs() < 1e-15));
    }

    #[test]
    fn image_counts_follow_lattice() {
        // Number of lattice images with at most n reflections: sum over k of 4k^2 + 2.
        let room = cube_ism([1.0; 6]);
        for n in 0..6usize {
            let expected: usize = (0..=n)
                .map(|k| if k == 0 { 1 } else { 4 * k * k + 2 })
                .sum();
            assert_eq!(room.images(n).len(), expected, "order {n}");
        }
    }

    #[test]
    fn zero_reflection_is_free_field() {
        let room = cube_ism([0.0; 6]);
        let receiver = Point3::new(0.7, 0.6, 0.5);
        let s = LaplacePoint::from_frequency(100.0);
        let free = room.transfer_at(&receiver, s, 0).unwrap();
        for order in [1, 3, 6] {
            assert_eq!(room.transfer_at(&receiver, s, order).unwrap(), free);
        }
    }

    #[test]
    fn unit_reflection_reciprocity() {
        let source = Point3::new(0.3, 0.4, 0.5);
        let receiver = Point3::new(0.7, 0.6, 0.45);
        let forward =
            ShoeboxIsm::new([1.0, 1.3, 0.9], source, [1.0; 6], Medium::default()).unwrap();
        let backward =
            ShoeboxIsm::new([1.0, 1.3, 0.9], receiver, [1.0; 6], Medium::default()).unwrap();
        let mut a: Vec<f64> = forward
            .arrivals(&receiver, 4)
            .unwrap()
            .iter()
            .map(|a| a.distance)
            .collect();
        let mut b: Vec<f64> = backward
            .arrivals(&source, 4)
            .unwrap()
            .iter()
            .map(|a| a.distance)
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 4.0 * f64::EPSILON * x, "{x} vs {y}");
        }
    }

    #[test]
    fn source_must_be_inside() {
        assert!(ShoeboxIsm::new(
            [1.0; 3],
            Point3::new(0.0, 0.5, 0.5),
            [1.0; 6],
            Medium::default()
        )
        .is_err());
    }

    #[test]
    fn ism_transfer_function_edges() {
        let room = cube_ism([0.9; 6]);
        let grid = FrequencyGrid::new(1000.0, 64).unwrap();
        let receiver = Point3::new(0.7, 0.6, 0.5);
        let tf = ism_shoebox(&room, &[receiver], 2, &grid, Some(400.0)).unwrap();
        assert_eq!(tf.metadata.method, "ism");
        let static_sum: f64 = room
            .arrivals(&receiver, 2)
            .unwrap()
            .iter()
            .map(|a| a.amplitude)
            .sum();
        assert!((tf.values[(0, 0)].re - static_sum).abs() < 1e-12);
        assert_eq!(tf.values[(0, 0)].im, 0.0);
        assert_eq!(tf.values[(0, 32)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn box_modes() {
        let medium = Medium::default();
        let modes = rigid_box_modes([2.0, 1.5, 1.0], &medium, 200.0).unwrap();
        assert_eq!(modes[0].indices, [1, 0, 0]);
        assert!((modes[0].frequency - 85.75).abs() < 1e-12);
        let cube = rigid_box_modes([1.0; 3], &medium, 172.0).unwrap();
        assert_eq!(cube.len(), 3);
        assert!(cube.iter().all(|m| (m.frequency - 171.5).abs() < 1e-12));
        assert!(rigid_box_modes([1.0; 3], &medium, 100.0)
            .unwrap()
            .is_empty());
        assert!(modes.windows(2).all(|w| w[0].frequency <= w[1].frequency));
    }

    #[test]
    fn specular_examples() {
        let medium = Medium::default();
        let plane = Plane::axis(2, 0.0);
        let src = Point3::new(0.0, 0.0, 1.0);
        let rcv = Point3::new(0.0, 0.0, 2.0);
        let s = LaplacePoint::from_frequency(300.0);
        let refl = mirror_plane_first_order(&src, &rcv, &plane, s, &medium).unwrap();
        assert_eq!(refl.path_length, 3.0);
        let expected = Complex::from_polar(1.0 / 3.0, -s.omega * 3.0 / 343.0);
        assert!((refl.value - expected).norm() < 1e-15);
        assert!(!refl.grazing);

        let dc = mirror_plane_first_order(&src, &rcv, &plane, LaplacePoint::new(0.0, 0.0), &medium)
            .unwrap();
        assert_eq!(dc.value, Complex::new(1.0 / 3.0, 0.0));

        let low = mirror_plane_first_order(
            &Point3::new(0.0, 0.0, 0.05),
            &Point3::new(5.0, 0.0, 0.05),
            &plane,
            s,
            &medium,
        )
        .unwrap();
        assert!(low.grazing);
        assert!(
            mirror_plane_first_order(&src, &Point3::new(0.0, 0.0, -1.0), &plane, s, &medium)
                .is_err()
        );
    }

    fn unit_square_pair(separation: f64) -> BoundaryMesh {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, separation),
            Point3::new(1.0, 0.0, separation),
            Point3::new(1.0, 1.0, separation),
            Point3::new(0.0, 1.0, separation),
        ];
        let t = |vertices: [usize; 3]| TriangleSpec {
            vertices,
            impedance: Impedance::Rigid,
            group: "patch".into(),
        };
        // bottom faces up, top faces down
        BoundaryMesh::new(
            v,
            vec![t([0, 1, 2]), t([0, 2, 3]), t([4, 6, 5]), t([4, 7, 6])],
        )
        .unwrap()
    }

    #[test]
    fn unit_kernel_gives_area_scaling() {
        let mesh = unit_square_pair(1.0);
        let est = monte_carlo_entry(
            &mesh,
            &Medium::default(),
            McTarget::ElementPair { row: 0, col: 2 },
            McKernel::Unit,
            LaplacePoint::new(0.0, 0.0),
            MC_MIN_SAMPLES,
            1,
        )
        .unwrap();
        assert!((est.value.re - 0.5).abs() < 1e-12);
        assert_eq!(est.std_error(), 0.0);
    }

    #[test]
    fn refuses_self_pair_and_few_samples() {
        let mesh = unit_square_pair(1.0);
        let medium = Medium::default();
        let s = LaplacePoint::new(0.0, 0.0);
        let pair = McTarget::ElementPair { row: 1, col: 1 };
        assert!(monte_carlo_entry(&mesh, &medium, pair, McKernel::Operator, s, 20_000, 0).is_err());
        let pair = McTarget::ElementPair { row: 0, col: 1 };
        assert!(monte_carlo_entry(&mesh, &medium, pair, McKernel::Operator, s, 100, 0).is_err());
    }

    #[test]
    fn standard_error_scaling_and_determinism() {
        let mesh = make_shoebox([1.0; 3], 0.5, [Impedance::Rigid; 6]).unwrap();
        let medium = Medium::default();
        let target = McTarget::ElementPair { row: 0, col: 20 };
        let s = LaplacePoint::from_frequency(100.0);
        let a =
            monte_carlo_entry(&mesh, &medium, target, McKernel::Operator, s, 200_000, 7).unwrap();
        let b =
            monte_carlo_entry(&mesh, &medium, target, McKernel::Operator, s, 400_000, 7).unwrap();
        let again =
            monte_carlo_entry(&mesh, &medium, target, McKernel::Operator, s, 200_000, 7).unwrap();
        assert_eq!(a, again);
        let ratio = a.std_error() / b.std_error();
        assert!((ratio - std::f64::consts::SQRT_2).abs() < 0.05, "{ratio}");
    }
}
