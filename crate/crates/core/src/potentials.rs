//! Radial repulsive interaction profiles, their N-dependent scalings, the smooth
//! cutoff `θ_R` and the annulus potential `U_R`.
//!
//! All potentials are nonnegative, radial and of finite range. Hard cores are carried
//! as a flag only; they have no pointwise values and the scattering solver treats them
//! as a boundary condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, sphere_area};

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    SquareWell,
    SmoothBump,
    CustomSamples,
}

/// JSON description of a potential: `{profile, w0, R0, hard_core, samples?}`.
///
/// Custom samples are `[r / R0, w / w0]` pairs in reduced units, so that scaling only
/// touches `w0` and `R0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub profile: ProfileKind,
    pub w0: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(default)]
    pub hard_core: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    SquareWell,
    SmoothBump,
    Samples(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct RadialPotential {
    shape: Shape,
    w0: f64,
    r0: f64,
    hard_core: bool,
}

/// `exp(1 - 1/(1 - t²))` on `|t| < 1`, zero elsewhere; peak value 1 at `t = 0`.
pub fn bump(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, C² in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

impl RadialPotential {
    pub fn square_well(w0: f64, r0: f64) -> Result<Self> {
        Self::new(Shape::SquareWell, w0, r0, false)
    }

    pub fn smooth_bump(w0: f64, r0: f64) -> Result<Self> {
        Self::new(Shape::SmoothBump, w0, r0, false)
    }

    pub fn hard_core(r0: f64) -> Result<Self> {
        Self::new(Shape::SquareWell, 0.0, r0, true)
    }

    /// The zero potential, represented as a square well of zero height.
    pub fn zero() -> Self {
        Self { shape: Shape::SquareWell, w0: 0.0, r0: 1.0, hard_core: false }
    }

    pub fn custom(samples: Vec<[f64; 2]>, w0: f64, r0: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("custom potential needs at least two samples".into()));
        }
        for pair in samples.windows(2) {
            if pair[1][0] <= pair[0][0] {
                return Err(Error::InvalidParameter("sample abscissae must increase".into()));
            }
        }
        if samples[0][0] < 0.0 || samples.last().unwrap()[0] > 1.0 {
            return Err(Error::InvalidParameter("sample abscissae must lie in [0, 1] (units of R0)".into()));
        }
        if samples.iter().any(|s| s[1] < 0.0) {
            return Err(Error::InvalidParameter("potential samples must be nonnegative".into()));
        }
        Self::new(Shape::Samples(samples), w0, r0, false)
    }

    fn new(shape: Shape, w0: f64, r0: f64, hard_core: bool) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidParameter(format!("range R0 must be positive, got {r0}")));
        }
        if !(w0 >= 0.0) || !w0.is_finite() {
            return Err(Error::InvalidParameter(format!("amplitude w0 must be nonnegative, got {w0}")));
        }
        Ok(Self { shape, w0, r0, hard_core })
    }

    pub fn amplitude(&self) -> f64 {
        self.w0
    }

    pub fn range(&self) -> f64 {
        self.r0
    }

    pub fn is_hard_core(&self) -> bool {
        self.hard_core
    }

    pub fn profile(&self) -> ProfileKind {
        match self.shape {
            Shape::SquareWell => ProfileKind::SquareWell,
            Shape::SmoothBump => ProfileKind::SmoothBump,
            Shape::Samples(_) => ProfileKind::CustomSamples,
        }
    }

    pub fn is_zero(&self) -> bool {
        !self.hard_core && self.w0 == 0.0
    }

    /// Pointwise value `w(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if self.hard_core {
            return Err(Error::HardCore);
        }
        Ok(self.value(r))
    }

    /// Pointwise value without the hard-core check; hard cores evaluate to zero.
    pub(crate) fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if self.hard_core || r > self.r0 {
            return 0.0;
        }
        let x = r / self.r0;
        self.w0
            * match &self.shape {
                Shape::SquareWell => 1.0,
                Shape::SmoothBump => bump(x),
                Shape::Samples(s) => interpolate(s, x),
            }
    }

    /// Points where the profile is not smooth, in absolute units, including 0 and R0.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        if let Shape::Samples(s) = &self.shape {
            b.extend(s.iter().map(|p| p[0] * self.r0).filter(|&r| r > 0.0 && r < self.r0));
        }
        b.push(self.r0);
        b
    }

    /// `A·w(λx)`: amplitude multiplied by `A`, range divided by `λ`.
    pub fn scaled(&self, amplitude_factor: f64, length_factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            w0: self.w0 * amplitude_factor,
            r0: self.r0 / length_factor,
            hard_core: self.hard_core,
        }
    }

    /// Gross-Pitaevskii scaling `w_N(x) = N² w(N x)`.
    pub fn scale_gp(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let nf = n as f64;
        Ok(self.scaled(nf * nf, nf))
    }

    /// `w_{β,N}(x) = N^{3β-1} w(N^β x)`.
    pub fn scale_beta(&self, n: usize, beta: f64) -> Result<Self> {
        self.scale_beta_dim(n, beta, 3)
    }

    /// Dimension-`d` analog `N^{dβ-1} w(N^β x)`, which keeps `∫w_{β,N} = ∫w / N` in `ℝ^d`.
    pub fn scale_beta_dim(&self, n: usize, beta: f64, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 1], got {beta}")));
        }
        let nf = n as f64;
        Ok(self.scaled(nf.powf(d as f64 * beta - 1.0), nf.powf(beta)))
    }

    /// `∫_{ℝ^d} w`.
    pub fn integral(&self, d: usize) -> Result<f64> {
        self.lp_norm_pow(1.0, d)
    }

    /// `‖w‖_{L^p(ℝ^d)}`.
    pub fn lp_norm(&self, p: f64, d: usize) -> Result<f64> {
        Ok(self.lp_norm_pow(p, d)?.powf(1.0 / p))
    }

    fn lp_norm_pow(&self, p: f64, d: usize) -> Result<f64> {
        if self.hard_core {
            return Err(Error::HardCore);
        }
        if self.w0 == 0.0 {
            return Ok(0.0);
        }
        if let Shape::SquareWell = self.shape {
            let ball = sphere_area(d) * self.r0.powi(d as i32) / d as f64;
            return Ok(self.w0.powf(p) * ball);
        }
        let dm1 = (d - 1) as i32;
        let v = integrate_pieces(
            |r| self.value(r).powf(p) * r.powi(dm1),
            &self.breakpoints(),
            QUAD_ABS * self.w0.powf(p) * self.r0.powi(d as i32),
            QUAD_REL,
        )?;
        Ok(sphere_area(d) * v)
    }
}

fn interpolate(s: &[[f64; 2]], x: f64) -> f64 {
    if x < s[0][0] {
        return s[0][1];
    }
    for pair in s.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if x <= b[0] {
            let t = (x - a[0]) / (b[0] - a[0]);
            return a[1] + t * (b[1] - a[1]);
        }
    }
    0.0
}

impl TryFrom<PotentialSpec> for RadialPotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        if spec.hard_core {
            return Self::hard_core(spec.r0);
        }
        match spec.profile {
            ProfileKind::SquareWell => Self::square_well(spec.w0, spec.r0),
            ProfileKind::SmoothBump => Self::smooth_bump(spec.w0, spec.r0),
            ProfileKind::CustomSamples => {
                let samples = spec
                    .samples
                    .ok_or_else(|| Error::InvalidParameter("custom_samples profile requires samples".into()))?;
                Self::custom(samples, spec.w0, spec.r0)
            }
        }
    }
}

impl From<RadialPotential> for PotentialSpec {
    fn from(p: RadialPotential) -> Self {
        let profile = p.profile();
        let samples = match p.shape {
            Shape::Samples(s) => Some(s),
            _ => None,
        };
        PotentialSpec { profile, w0: p.w0, r0: p.r0, hard_core: p.hard_core, samples }
    }
}

/// `θ_R(x) = θ(x / R)`: zero for `|x| <= R`, one for `|x| >= 2R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFunction {
    scale: f64,
}

impl CutoffFunction {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, r: f64) -> f64 {
        smoothstep(r.abs() / self.scale - 1.0)
    }
}

pub fn make_theta(r: f64) -> Result<CutoffFunction> {
    CutoffFunction::new(r)
}

/// `U_R(x) = R^{-d} U(x/R)`, a bump on the annulus `R/2 <= |x| <= R` with `∫U_R = 4πa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusPotential {
    scale: f64,
    a: f64,
    dim: usize,
    /// Peak of the unscaled profile `U`.
    peak: f64,
}

/// `∫_{ℝ^d}` of the unit-height annulus bump `bump(4(|x| - 3/4))`.
fn annulus_bump_mass(d: usize) -> f64 {
    let dm1 = (d - 1) as i32;
    let v = integrate_pieces(|r| bump(4.0 * (r - 0.75)) * r.powi(dm1), &[0.5, 0.75, 1.0], 1e-15, 1e-14)
        .expect("annulus bump quadrature");
    sphere_area(d) * v
}

impl AnnulusPotential {
    pub fn new(scale: f64, a: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("annulus scale R must be positive, got {scale}")));
        }
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("scattering length a must be positive, got {a}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3")));
        }
        let peak = 4.0 * std::f64::consts::PI * a / annulus_bump_mass(dim);
        Ok(Self { scale, a, dim, peak })
    }

    /// A zero annulus potential (`a = 0`), used to switch the Dyson term off.
    pub fn zero(scale: f64, dim: usize) -> Self {
        Self { scale, a: 0.0, dim, peak: 0.0 }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scattering_length(&self) -> f64 {
        self.a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = r.abs() / self.scale;
        self.peak * bump(4.0 * (x - 0.75)) / self.scale.powi(self.dim as i32)
    }

    /// `sup U_R`.
    pub fn sup(&self) -> f64 {
        self.peak / self.scale.powi(self.dim as i32)
    }

    /// `sup U · R^d / a`, the profile constant bounding `sup U_R <= c·a·R^{-d}`.
    pub fn profile_constant(&self) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            self.peak / self.a
        }
    }

    /// `∫ U_R` by radial quadrature (should equal `4πa`).
    pub fn mass(&self) -> f64 {
        let dm1 = (self.dim - 1) as i32;
        let r = self.scale;
        let v = integrate_pieces(|x| self.eval(x) * x.powi(dm1), &[0.5 * r, 0.75 * r, r], 1e-15, 1e-14)
            .expect("annulus mass quadrature");
        sphere_area(self.dim) * v
    }
}

/// The 3D annulus potential with mass `4πa`.
pub fn make_u(r: f64, a: f64) -> Result<AnnulusPotential> {
    AnnulusPotential::new(r, a, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use std::f64::consts::PI;

    #[test]
    fn square_well_values() {
        let w = RadialPotential::square_well(2.0, 1.0).unwrap();
        assert_eq!(w.eval(0.5).unwrap(), 2.0);
        assert_eq!(w.eval(1.5).unwrap(), 0.0);
    }

    #[test]
    fn bump_peak_and_continuity() {
        let w = RadialPotential::smooth_bump(1.0, 1.0).unwrap();
        assert_eq!(w.eval(0.0).unwrap(), 1.0);
        assert!(w.eval(1.0 - 1e-3).unwrap() < 1e-200);
        assert_eq!(w.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn hard_core_rejects_eval() {
        let w = RadialPotential::hard_core(1.0).unwrap();
        assert!(matches!(w.eval(0.5), Err(Error::HardCore)));
        assert!(matches!(w.integral(3), Err(Error::HardCore)));
    }

    #[test]
    fn gp_scaling() {
        let w = RadialPotential::square_well(2.0, 1.0).unwrap();
        assert_eq!(w.scale_gp(1).unwrap(), w);
        let w10 = w.scale_gp(10).unwrap();
        assert!((w10.amplitude() - 200.0).abs() < 1e-12);
        assert!((w10.range() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gp_scaling_mass_by_quadrature() {
        // independent oracle: plain radial quadrature of the pointwise values
        let w = RadialPotential::smooth_bump(1.3, 0.8).unwrap();
        let w5 = w.scale_gp(5).unwrap();
        let raw = |p: &RadialPotential| {
            4.0 * PI * integrate(|r| p.eval(r).unwrap() * r * r, 0.0, p.range(), 1e-14, 1e-13).unwrap()
        };
        assert!((raw(&w5) - raw(&w) / 5.0).abs() < 1e-10);
    }

    #[test]
    fn beta_scaling() {
        let w = RadialPotential::smooth_bump(2.0, 1.0).unwrap();
        assert_eq!(w.scale_beta(10, 1.0).unwrap(), w.scale_gp(10).unwrap());
        let w0 = w.scale_beta(4, 0.0).unwrap();
        assert!((w0.amplitude() - 0.5).abs() < 1e-15);
        assert_eq!(w0.range(), 1.0);
        let wb = w.scale_beta(8, 0.5).unwrap();
        assert!((wb.integral(3).unwrap() - w.integral(3).unwrap() / 8.0).abs() < 1e-10);
    }

    #[test]
    fn theta_plateaus() {
        let th = make_theta(0.3).unwrap();
        assert_eq!(th.eval(0.15), 0.0);
        assert_eq!(th.eval(0.9), 1.0);
        assert!(th.eval(0.45) > 0.0 && th.eval(0.45) < 1.0);
    }

    #[test]
    fn annulus_mass_and_support() {
        let u = make_u(0.1, 0.7).unwrap();
        assert!((u.mass() - 4.0 * PI * 0.7).abs() < 1e-10);
        assert_eq!(u.eval(0.025), 0.0);
        assert_eq!(u.eval(0.2), 0.0);
        assert!(u.eval(0.075) > 0.0);
        assert!((u.sup() - u.eval(0.075)).abs() < 1e-9 * u.sup());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_theta(0.0).is_err());
        assert!(make_u(-1.0, 1.0).is_err());
        assert!(make_u(1.0, 0.0).is_err());
        assert!(RadialPotential::square_well(-1.0, 1.0).is_err());
    }

    #[test]
    fn custom_samples_interpolate_and_serialize() {
        let w = RadialPotential::custom(vec![[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]], 4.0, 2.0).unwrap();
        assert!((w.eval(0.5).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(w.eval(2.5).unwrap(), 0.0);
        let json = serde_json::to_string(&w).unwrap();
        let back: RadialPotential = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        // triangle-ish cone: ∫ = 4π ∫ w r² dr, piecewise linear exact by quadrature
        let exact = 4.0 * PI * integrate(|r| w.eval(r).unwrap() * r * r, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((w.integral(3).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn spec_json_roundtrip() {
        let json = r#"{"profile":"square_well","w0":2.0,"R0":1.0,"hard_core":false}"#;
        let w: RadialPotential = serde_json::from_str(json).unwrap();
        assert_eq!(w, RadialPotential::square_well(2.0, 1.0).unwrap());
        let bad = r#"{"profile":"square_well","w0":2.0,"R0":1.0,"extra":1}"#;
        assert!(serde_json::from_str::<RadialPotential>(bad).is_err());
    }
}
