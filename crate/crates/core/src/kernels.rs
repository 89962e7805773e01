//! Pointwise Laplace-domain quantities of the boundary integral equation.
//!
//! The kernel linking a boundary density at `beta` to an observation point `r` is
//! `(s g + h) exp(-s R / c)` with
//!
//! ```text
//! g = ( cos(theta) / (c R) - rho / (R Z) ) / w
//! h =   cos(theta) / (R^2)                 / w
//! cos(theta) = (r - beta) . n / R
//! ```
//!
//! where `n` is the inward unit normal at `beta`, `Z` the wall impedance and `w` the
//! solid-angle weight of the observation point (4 pi inside the room, 2 pi on a smooth
//! part of the boundary).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scene::{Impedance, Medium};
use crate::{Complex, Point3};

/// Laplace variable `s = sigma + j omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePoint {
    pub sigma: f64,
    pub omega: f64,
}

impl LaplacePoint {
    pub fn new(sigma: f64, omega: f64) -> Self {
        Self { sigma, omega }
    }

    /// Point on the imaginary axis, `s = j 2 pi f`.
    pub fn from_frequency(hz: f64) -> Self {
        Self {
            sigma: 0.0,
            omega: 2.0 * PI * hz,
        }
    }

    pub fn value(&self) -> Complex {
        Complex::new(self.sigma, self.omega)
    }

    pub fn conj(&self) -> Self {
        Self {
            sigma: self.sigma,
            omega: -self.omega,
        }
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }
}

/// Solid-angle weight of an observation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolidAngle {
    /// Observation strictly inside the room, w = 4 pi.
    Interior,
    /// Observation on a smooth part of the boundary, w = 2 pi.
    Boundary,
}

impl SolidAngle {
    pub fn weight(self) -> f64 {
        match self {
            SolidAngle::Interior => 4.0 * PI,
            SolidAngle::Boundary => 2.0 * PI,
        }
    }
}

/// Coefficients multiplying the boundary pressure's time derivative (`g`) and value (`h`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub g: f64,
    pub h: f64,
}

impl KernelPair {
    /// `(s g + h) exp(-s R / c)`.
    pub fn laplace(&self, s: LaplacePoint, distance: f64, medium: &Medium) -> Complex {
        (s.value() * self.g + self.h) * propagation(s, distance, medium)
    }
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    (a - b).norm()
}

/// Direction cosine between `obs - src` and the normal at `src`.
pub fn cos_theta(obs: &Point3, src: &Point3, normal: &Point3) -> Result<f64> {
    let d = obs - src;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok((d.dot(normal) / r).clamp(-1.0, 1.0))
}

/// g/h coefficients for one observation/boundary point pair.
pub fn gh_coefficients(
    obs: &Point3,
    beta: &Point3,
    normal: &Point3,
    impedance: Impedance,
    medium: &Medium,
    solid_angle: SolidAngle,
) -> Result<KernelPair> {
    let r = distance(obs, beta);
    let cos = cos_theta(obs, beta, normal)?;
    Ok(gh_from_geometry(
        r,
        cos,
        impedance.density_ratio(medium.density),
        medium.sound_speed,
        solid_angle.weight(),
    ))
}

/// g/h from precomputed distance, cosine and `rho / Z` (zero for rigid walls).
#[inline]
pub fn gh_from_geometry(r: f64, cos: f64, density_ratio: f64, c: f64, w: f64) -> KernelPair {
    let inv_wr = 1.0 / (w * r);
    KernelPair {
        g: (cos / c - density_ratio) * inv_wr,
        h: cos * inv_wr / r,
    }
}

/// Propagation factor `exp(-s R / c)`.
#[inline]
pub fn propagation(s: LaplacePoint, r: f64, medium: &Medium) -> Complex {
    delay_factor(s, r / medium.sound_speed)
}

/// `exp(-s tau)` for a delay `tau` in seconds.
#[inline]
pub fn delay_factor(s: LaplacePoint, tau: f64) -> Complex {
    let phase = -s.omega * tau;
    let (sin, cos) = phase.sin_cos();
    let mag = if s.sigma == 0.0 {
        1.0
    } else {
        (-s.sigma * tau).exp()
    };
    Complex::new(mag * cos, mag * sin)
}

/// Source contribution to the boundary pressure, `(2 / R) exp(-s R / c)`.
pub fn incident_boundary(
    b: &Point3,
    source: &Point3,
    s: LaplacePoint,
    medium: &Medium,
) -> Result<Complex> {
    let r = distance(b, source);
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(propagation(s, r, medium) * (2.0 / r))
}

/// Direct sound at a receiver, `(1 / R) exp(-s R / c)`.
pub fn incident_receiver(
    r: &Point3,
    source: &Point3,
    s: LaplacePoint,
    medium: &Medium,
) -> Result<Complex> {
    let d = distance(r, source);
    if d == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(propagation(s, d, medium) * (1.0 / d))
}
