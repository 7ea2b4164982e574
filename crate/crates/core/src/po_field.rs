//! Physical-optics far field of a prime-focus paraboloid whose outer rim is
//! tiled with reconfigurable elements.
//!
//! Coordinates: the dish vertex is the origin, the axis of rotation is `+z`
//! and the surface is `z = ρ²/(4F)` with the feed at `(0, 0, F)` looking down
//! the axis. The feed is `y`-polarized and the co-pol direction follows
//! Ludwig's third definition for a `y`-polarized source.
//!
//! Every far-field quantity drops the common spherical factor `e^{-jβr}/r`,
//! so fields are reported in volts (field times distance) and gains are
//! independent of the observation radius.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{CVec3, Vec3};
use crate::weights::WeightVector;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Impedance of free space in ohms.
pub const ETA0: f64 = 376.730_313_668;

/// Reported in place of `10·log10(0)` for an exactly cancelled field.
pub const ZERO_FIELD_GAIN_DB: f64 = f64::NEG_INFINITY;

/// Inputs to [`ReflectorGeometry::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryParams {
    pub diameter_m: f64,
    pub rim_width_m: f64,
    pub f_over_d: f64,
    pub frequency_hz: f64,
    /// Element side length in wavelengths.
    pub element_side_wavelengths: f64,
    /// Fixed number of elements per ring. `None` packs each ring with
    /// `⌊2πρ/side⌋` elements.
    pub elements_per_ring: Option<usize>,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            diameter_m: 18.0,
            rim_width_m: 0.5,
            f_over_d: 0.4,
            frequency_hz: 1.5e9,
            element_side_wavelengths: 0.5,
            elements_per_ring: None,
        }
    }
}

/// One reconfigurable element on the rim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementSite {
    pub position: Vec3,
    /// Unit normal on the concave (feed) side.
    pub normal: Vec3,
    pub area_m2: f64,
    pub ring_index: usize,
    pub azimuth_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorGeometry {
    pub diameter_m: f64,
    pub rim_width_m: f64,
    pub focal_length_m: f64,
    pub frequency_hz: f64,
    pub element_side_m: f64,
    pub elements: Vec<ElementSite>,
    /// Feed half-angle to the outer rim.
    pub theta0_rad: f64,
    /// Feed half-angle to the fixed/reconfigurable boundary.
    pub theta1_rad: f64,
    /// Number of element rings and elements in each.
    pub ring_counts: Vec<usize>,
}

/// Builds the default tiling: rings of radial width `0.5λ`, each packed with
/// `⌊2πρ/0.5λ⌋` elements.
pub fn build_geometry(
    diameter_m: f64,
    rim_width_m: f64,
    f_over_d: f64,
    frequency_hz: f64,
) -> Result<ReflectorGeometry> {
    ReflectorGeometry::build(&GeometryParams {
        diameter_m,
        rim_width_m,
        f_over_d,
        frequency_hz,
        ..GeometryParams::default()
    })
}

impl ReflectorGeometry {
    pub fn build(p: &GeometryParams) -> Result<Self> {
        let positive = [
            ("diameter_m", p.diameter_m),
            ("rim_width_m", p.rim_width_m),
            ("f_over_d", p.f_over_d),
            ("frequency_hz", p.frequency_hz),
            ("element_side_wavelengths", p.element_side_wavelengths),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        let outer = p.diameter_m / 2.0;
        if p.rim_width_m >= outer {
            return Err(Error::InvalidGeometry(format!(
                "rim width {} m must be below the dish radius {} m",
                p.rim_width_m, outer
            )));
        }
        if p.elements_per_ring == Some(0) {
            return Err(Error::InvalidGeometry("elements_per_ring must be positive".into()));
        }

        let wavelength = SPEED_OF_LIGHT / p.frequency_hz;
        let side = p.element_side_wavelengths * wavelength;
        // A tiny slack keeps an exact fit (rim = k·side) from losing a ring to rounding.
        let ring_total = (p.rim_width_m / side * (1.0 + 1e-9)).floor() as usize;
        if ring_total == 0 {
            return Err(Error::InvalidGeometry(format!(
                "element side {side:.4} m exceeds the rim width {} m",
                p.rim_width_m
            )));
        }

        let focal = p.f_over_d * p.diameter_m;
        let inner = outer - p.rim_width_m;
        let ring_width = p.rim_width_m / ring_total as f64;

        let mut elements = Vec::new();
        let mut ring_counts = Vec::with_capacity(ring_total);
        for ring in 0..ring_total {
            let rho_a = inner + ring as f64 * ring_width;
            let rho_b = rho_a + ring_width;
            let rho = 0.5 * (rho_a + rho_b);
            let count = p
                .elements_per_ring
                .unwrap_or_else(|| (2.0 * PI * rho / side).floor() as usize);
            if count == 0 {
                return Err(Error::InvalidGeometry(format!("ring {ring} holds no elements")));
            }
            let area = paraboloid_band_area(focal, rho_a, rho_b) / count as f64;
            for k in 0..count {
                // Starting at +y keeps every ring mirror-symmetric under x -> -x.
                let phi = PI / 2.0 + 2.0 * PI * k as f64 / count as f64;
                let position = Vec3::new(rho * phi.cos(), rho * phi.sin(), rho * rho / (4.0 * focal));
                elements.push(ElementSite {
                    position,
                    normal: surface_normal(focal, position),
                    area_m2: area,
                    ring_index: ring,
                    azimuth_index: k,
                });
            }
            ring_counts.push(count);
        }

        Ok(Self {
            diameter_m: p.diameter_m,
            rim_width_m: p.rim_width_m,
            focal_length_m: focal,
            frequency_hz: p.frequency_hz,
            element_side_m: side,
            elements,
            theta0_rad: feed_angle(focal, outer),
            theta1_rad: feed_angle(focal, inner),
            ring_counts,
        })
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// β = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m()
    }

    /// ω = 2πf.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    pub fn focus(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.focal_length_m)
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn inner_rim_radius_m(&self) -> f64 {
        self.diameter_m / 2.0 - self.rim_width_m
    }

    /// Surface point seen from the feed at angle `theta_f` off the axis.
    pub fn surface_point(&self, theta_f: f64, phi: f64) -> Vec3 {
        let s = 2.0 * self.focal_length_m / (1.0 + theta_f.cos());
        self.focus() + feed_direction(theta_f, phi) * s
    }

    pub fn normal_at(&self, point: Vec3) -> Vec3 {
        surface_normal(self.focal_length_m, point)
    }
}

fn feed_angle(focal: f64, rho: f64) -> f64 {
    2.0 * (rho / (2.0 * focal)).atan()
}

fn feed_direction(theta_f: f64, phi: f64) -> Vec3 {
    Vec3::new(theta_f.sin() * phi.cos(), theta_f.sin() * phi.sin(), -theta_f.cos())
}

fn surface_normal(focal: f64, p: Vec3) -> Vec3 {
    Vec3::new(-p.x / (2.0 * focal), -p.y / (2.0 * focal), 1.0).normalized()
}

/// Exact area of the paraboloid between radial distances `a` and `b`.
pub fn paraboloid_band_area(focal: f64, a: f64, b: f64) -> f64 {
    let term = |rho: f64| (1.0 + (rho / (2.0 * focal)).powi(2)).powf(1.5);
    8.0 * PI * focal * focal / 3.0 * (term(b) - term(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedModel {
    pub i0: Complex64,
    pub q_exponent: f64,
}

impl FeedModel {
    pub fn new(i0: Complex64, q_exponent: f64) -> Result<Self> {
        if !(q_exponent.is_finite() && q_exponent > 0.0) {
            return Err(Error::InvalidFeed(format!("q must be positive, got {q_exponent}")));
        }
        if !(i0.re.is_finite() && i0.im.is_finite()) || i0 == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidFeed(format!("I0 must be finite and non-zero, got {i0}")));
        }
        Ok(Self { i0, q_exponent })
    }

    pub fn with_q(q_exponent: f64) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), q_exponent)
    }

    /// Power radiated by the `cos^q` feed into the forward hemisphere:
    /// `η₀|I₀|²/2 · 2π/(2q+1)`.
    pub fn radiated_power_w(&self) -> f64 {
        PI * ETA0 * self.i0.norm_sqr() / (2.0 * self.q_exponent + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldDirection {
    pub psi_rad: f64,
    pub phi_rad: f64,
}

impl FarFieldDirection {
    pub fn new(psi_rad: f64, phi_rad: f64) -> Result<Self> {
        if !(0.0..PI / 2.0).contains(&psi_rad) {
            return Err(Error::InvalidDirection(format!("psi {psi_rad} rad outside [0, pi/2)")));
        }
        if !(0.0..2.0 * PI).contains(&phi_rad) {
            return Err(Error::InvalidDirection(format!("phi {phi_rad} rad outside [0, 2pi)")));
        }
        Ok(Self { psi_rad, phi_rad })
    }

    /// Degrees in, with φ wrapped into `[0°, 360°)`.
    pub fn from_degrees(psi_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(psi_deg.to_radians(), phi_deg.rem_euclid(360.0).to_radians())
    }

    pub fn psi_deg(&self) -> f64 {
        self.psi_rad.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_rad.to_degrees()
    }
}

/// `r̂(ψ, φ) = sinψ cosφ x̂ + sinψ sinφ ŷ + cosψ ẑ`.
pub fn far_field_unit_vector(d: FarFieldDirection) -> Vec3 {
    let (sp, cp) = d.psi_rad.sin_cos();
    let (sf, cf) = d.phi_rad.sin_cos();
    Vec3::new(sp * cf, sp * sf, cp)
}

/// Ludwig-3 co-pol unit vector for a `y`-polarized source, `sinφ θ̂ + cosφ φ̂`.
pub fn co_pol_unit_vector(d: FarFieldDirection) -> Vec3 {
    let (sp, cp) = d.psi_rad.sin_cos();
    let (sf, cf) = d.phi_rad.sin_cos();
    let theta_hat = Vec3::new(cp * cf, cp * sf, -sp);
    let phi_hat = Vec3::new(-sf, cf, 0.0);
    theta_hat * sf + phi_hat * cf
}

/// Feed magnetic field `Hⁱ` at a point on the dish.
pub fn incident_magnetic_field(geometry: &ReflectorGeometry, feed: &FeedModel, surface_point: Vec3) -> Result<CVec3> {
    let to_point = surface_point - geometry.focus();
    let s = to_point.norm();
    let s_hat = to_point * (1.0 / s);
    let pol = Vec3::Y.cross(s_hat);
    let pol_norm = pol.norm();
    if pol_norm < 1e-12 {
        return Err(Error::PolarizationSingularity);
    }
    let cos_theta = (-s_hat.z).max(0.0);
    let beta = geometry.wavenumber();
    let amplitude = cos_theta.powf(feed.q_exponent) / s;
    let phasor = feed.i0 * Complex64::from_polar(amplitude, -beta * s);
    Ok(CVec3::from_real(pol * (1.0 / pol_norm), phasor))
}

/// PO surface current `J₀ = 2 n̂ × Hⁱ`.
fn po_current(geometry: &ReflectorGeometry, feed: &FeedModel, point: Vec3, normal: Vec3) -> Result<CVec3> {
    Ok(incident_magnetic_field(geometry, feed, point)?
        .cross_from_real(normal)
        .scale(2.0))
}

/// Resolution of the `(θ_f, φ′)` trapezoidal grid over the fixed dish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    /// Samples per wavelength of projected aperture, in both grid directions.
    pub samples_per_wavelength: f64,
    /// Multiplies the sample counts.
    pub refinement: f64,
    /// Largest acceptable change under 2x refinement, in dB.
    pub tolerance_db: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            samples_per_wavelength: 4.0,
            refinement: 1.0,
            tolerance_db: 0.01,
        }
    }
}

impl QuadratureSettings {
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            refinement: self.refinement * factor,
            ..*self
        }
    }
}

/// Surface currents with their area weights folded in, at fixed sample points.
#[derive(Debug, Clone, Default)]
struct CurrentSheet {
    positions: Vec<Vec3>,
    currents: Vec<CVec3>,
}

impl CurrentSheet {
    /// Trapezoidal samples over `θ_f ∈ [theta_a, theta_b]`, periodic in `φ′`.
    fn quadrature(
        geometry: &ReflectorGeometry,
        feed: &FeedModel,
        theta_a: f64,
        theta_b: f64,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        let lambda = geometry.wavelength_m();
        let rho_a = 2.0 * geometry.focal_length_m * (theta_a / 2.0).tan();
        let rho_b = 2.0 * geometry.focal_length_m * (theta_b / 2.0).tan();
        let density = settings.samples_per_wavelength * settings.refinement;
        let n_theta = ((density * (rho_b - rho_a) / lambda).ceil() as usize).max(8);
        let n_phi = ((density * 2.0 * PI * rho_b / lambda).ceil() as usize).max(16);
        let h_theta = (theta_b - theta_a) / n_theta as f64;
        let h_phi = 2.0 * PI / n_phi as f64;

        let mut sheet = CurrentSheet {
            positions: Vec::with_capacity((n_theta + 1) * n_phi),
            currents: Vec::with_capacity((n_theta + 1) * n_phi),
        };
        for i in 0..=n_theta {
            let theta = theta_a + i as f64 * h_theta;
            let end_weight = if i == 0 || i == n_theta { 0.5 } else { 1.0 };
            let s = 2.0 * geometry.focal_length_m / (1.0 + theta.cos());
            // ds = s² sinθ / cos(θ/2) dθ dφ′ on the paraboloid.
            let jacobian = s * s * theta.sin() / (theta / 2.0).cos();
            let weight = end_weight * h_theta * h_phi * jacobian;
            if weight == 0.0 {
                continue;
            }
            for k in 0..n_phi {
                let phi = PI / 2.0 + k as f64 * h_phi;
                let point = geometry.surface_point(theta, phi);
                let current = po_current(geometry, feed, point, geometry.normal_at(point))?;
                sheet.positions.push(point);
                sheet.currents.push(current.scale(weight));
            }
        }
        Ok(sheet)
    }

    fn elements(geometry: &ReflectorGeometry, feed: &FeedModel) -> Result<Self> {
        let mut sheet = CurrentSheet::default();
        for e in &geometry.elements {
            let current = po_current(geometry, feed, e.position, e.normal)?;
            sheet.positions.push(e.position);
            sheet.currents.push(current.scale(e.area_m2));
        }
        Ok(sheet)
    }

    /// Co-pol far-field contribution of each sample, in storage order.
    fn copol_terms<'a>(&'a self, beta: f64, d: FarFieldDirection) -> impl Iterator<Item = Complex64> + 'a {
        let r_hat = far_field_unit_vector(d);
        let e_co = co_pol_unit_vector(d);
        // -jωμ₀/(4π) = -jβη₀/(4π)
        let prefactor = Complex64::new(0.0, -beta * ETA0 / (4.0 * PI));
        self.positions.iter().zip(&self.currents).map(move |(p, j)| {
            let phase = Complex64::from_polar(1.0, beta * r_hat.dot(*p));
            prefactor * j.dot_real(e_co) * phase
        })
    }

    /// Sequential sum in storage order, so results never depend on threading.
    fn copol_sum(&self, beta: f64, d: FarFieldDirection) -> Complex64 {
        self.copol_terms(beta, d)
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t)
    }
}

/// Per-element co-pol field vector and fixed-dish field for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub direction: FarFieldDirection,
    /// `E_f^{s,co}` in volts (field times distance).
    pub fixed_copol: Complex64,
    /// `e_{ψ,φ}`, one entry per rim element.
    pub element_copol: Vec<Complex64>,
    pub q_exponent: f64,
    /// Feed power the gain is normalized by.
    pub feed_power_w: f64,
}

impl FieldVector {
    pub fn len(&self) -> usize {
        self.element_copol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_copol.is_empty()
    }

    /// `E_f + eᵀw` for quantized weights.
    pub fn total_field(&self, w: &WeightVector) -> Result<Complex64> {
        if w.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: w.len(),
            });
        }
        let table = w.phasor_table();
        Ok(self
            .element_copol
            .iter()
            .zip(w.phase_indices())
            .fold(self.fixed_copol, |acc, (e, &k)| acc + e * table[k as usize]))
    }

    /// `eᵀw` for arbitrary complex weights (no fixed-dish term).
    pub fn rim_field(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: w.len(),
            });
        }
        Ok(self
            .element_copol
            .iter()
            .zip(w)
            .fold(Complex64::new(0.0, 0.0), |acc, (e, w)| acc + e * w))
    }

    /// Gain in dBi of a total co-pol field given in volts.
    pub fn gain_of_field(&self, total: Complex64) -> f64 {
        let intensity = total.norm_sqr() / (2.0 * ETA0);
        let g = 4.0 * PI * intensity / self.feed_power_w;
        if g == 0.0 {
            ZERO_FIELD_GAIN_DB
        } else {
            10.0 * g.log10()
        }
    }

    /// Gain from a field observed at finite distance `radius_m`, i.e. with the
    /// spherical factor `e^{-jβr}/r` applied and then removed via `U = |E|²r²/(2η₀)`.
    pub fn gain_at_radius(&self, w: &WeightVector, beta: f64, radius_m: f64) -> Result<f64> {
        let field = self.total_field(w)? * Complex64::from_polar(1.0 / radius_m, -beta * radius_m);
        let intensity = field.norm_sqr() * radius_m * radius_m / (2.0 * ETA0);
        let g = 4.0 * PI * intensity / self.feed_power_w;
        Ok(if g == 0.0 { ZERO_FIELD_GAIN_DB } else { 10.0 * g.log10() })
    }
}

/// Gain in dBi toward `fieldvec.direction` with the given weights.
pub fn normalized_gain(fieldvec: &FieldVector, weights: &WeightVector) -> Result<f64> {
    Ok(fieldvec.gain_of_field(fieldvec.total_field(weights)?))
}

/// Precomputed surface currents for one geometry and feed, reusable across
/// directions.
#[derive(Debug, Clone)]
pub struct PatternModel {
    geometry: Arc<ReflectorGeometry>,
    feed: FeedModel,
    quadrature: QuadratureSettings,
    fixed: CurrentSheet,
    rim: CurrentSheet,
}

impl PatternModel {
    pub fn new(geometry: Arc<ReflectorGeometry>, feed: FeedModel, quadrature: QuadratureSettings) -> Result<Self> {
        let fixed = CurrentSheet::quadrature(&geometry, &feed, 0.0, geometry.theta1_rad, &quadrature)?;
        let rim = CurrentSheet::elements(&geometry, &feed)?;
        Ok(Self {
            geometry,
            feed,
            quadrature,
            fixed,
            rim,
        })
    }

    pub fn geometry(&self) -> &ReflectorGeometry {
        &self.geometry
    }

    pub fn feed(&self) -> &FeedModel {
        &self.feed
    }

    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quadrature
    }

    pub fn quadrature_points(&self) -> usize {
        self.fixed.positions.len()
    }

    /// `E_f^{s,co}` by trapezoidal quadrature over the fixed dish.
    pub fn fixed_dish_field(&self, d: FarFieldDirection) -> Complex64 {
        self.fixed.copol_sum(self.geometry.wavenumber(), d)
    }

    /// The rim annulus integrated as a continuous surface (all weights one),
    /// with the same quadrature as the fixed dish.
    pub fn continuous_rim_field(&self, d: FarFieldDirection) -> Result<Complex64> {
        let g = &self.geometry;
        let sheet = CurrentSheet::quadrature(g, &self.feed, g.theta1_rad, g.theta0_rad, &self.quadrature)?;
        Ok(sheet.copol_sum(g.wavenumber(), d))
    }

    pub fn field_vector(&self, d: FarFieldDirection) -> FieldVector {
        FieldVector {
            direction: d,
            fixed_copol: self.fixed_dish_field(d),
            element_copol: self.rim.copol_terms(self.geometry.wavenumber(), d).collect(),
            q_exponent: self.feed.q_exponent,
            feed_power_w: self.feed.radiated_power_w(),
        }
    }

    pub fn gain(&self, d: FarFieldDirection, w: &WeightVector) -> Result<f64> {
        normalized_gain(&self.field_vector(d), w)
    }

    /// Gain at each `ψ` of a sorted grid (radians) on the cut `phi_rad`.
    pub fn pattern_sweep(&self, w: &WeightVector, psi_grid: &[f64], phi_rad: f64) -> Result<Vec<(f64, f64)>> {
        if psi_grid.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidDirection("psi grid must be sorted ascending".into()));
        }
        if w.len() != self.geometry.element_count() {
            return Err(Error::DimensionMismatch {
                expected: self.geometry.element_count(),
                got: w.len(),
            });
        }
        psi_grid
            .par_iter()
            .map(|&psi| {
                let d = FarFieldDirection::new(psi, phi_rad)?;
                Ok((psi, self.gain(d, w)?))
            })
            .collect()
    }

    /// Fails when the fixed-dish field moves by more than the configured
    /// tolerance under a 2x finer grid.
    pub fn check_convergence(&self, d: FarFieldDirection) -> Result<f64> {
        let fine = CurrentSheet::quadrature(
            &self.geometry,
            &self.feed,
            0.0,
            self.geometry.theta1_rad,
            &self.quadrature.refined(2.0),
        )?;
        let coarse = self.fixed_dish_field(d).norm();
        let refined = fine.copol_sum(self.geometry.wavenumber(), d).norm();
        let change_db = (20.0 * (refined / coarse).log10()).abs();
        if change_db.is_nan() || change_db > self.quadrature.tolerance_db {
            return Err(Error::QuadratureNotConverged {
                change_db,
                tolerance_db: self.quadrature.tolerance_db,
            });
        }
        Ok(change_db)
    }
}

/// `E_f^{s,co}` at default resolution, checked against a 2x finer grid.
pub fn fixed_dish_field(
    geometry: &ReflectorGeometry,
    feed: &FeedModel,
    direction: FarFieldDirection,
) -> Result<Complex64> {
    let model = PatternModel::new(Arc::new(geometry.clone()), *feed, QuadratureSettings::default())?;
    model.check_convergence(direction)?;
    Ok(model.fixed_dish_field(direction))
}

pub fn element_field_vector(
    geometry: &ReflectorGeometry,
    feed: &FeedModel,
    direction: FarFieldDirection,
) -> Result<FieldVector> {
    let model = PatternModel::new(Arc::new(geometry.clone()), *feed, QuadratureSettings::default())?;
    model.check_convergence(direction)?;
    Ok(model.field_vector(direction))
}

pub fn pattern_sweep(
    geometry: &ReflectorGeometry,
    feed: &FeedModel,
    weights: &WeightVector,
    psi_grid: &[f64],
    phi_rad: f64,
) -> Result<Vec<(f64, f64)>> {
    let model = PatternModel::new(Arc::new(geometry.clone()), *feed, QuadratureSettings::default())?;
    model.pattern_sweep(weights, psi_grid, phi_rad)
}
