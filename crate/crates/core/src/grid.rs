//! Periodic sampling box and its spectral transform.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic `d`-dimensional box `[-L, L)^d` with `n` points per axis.
///
/// Points are stored row-major: axis 0 is the slowest index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "n")]
    pub points: usize,
    #[serde(default = "default_periodic")]
    pub periodic: bool,
}

fn default_periodic() -> bool {
    true
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        if !s.periodic {
            return Err(Error::InvalidParameter("only periodic boxes are supported".into()));
        }
        Grid::new(s.dim, s.half_width, s.points)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { dim: g.dim, half_width: g.half_width, points: g.points, periodic: true }
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("grid dimension {dim} not in 1..=3")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("box half-width {half_width} must be positive")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("points per axis {points} must be a power of two >= 2")));
        }
        Ok(Self { dim, half_width, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// Total number of grid points `n^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Largest momentum component on the lattice, `(π/L)·n/2`.
    pub fn max_momentum(&self) -> f64 {
        std::f64::consts::PI / self.half_width * (self.points / 2) as f64
    }

    /// Largest lattice momentum modulus, attained at the corner of the Brillouin box.
    pub fn max_momentum_norm(&self) -> f64 {
        self.max_momentum() * (self.dim as f64).sqrt()
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Integer wavenumber of FFT index `j`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &i| acc * self.points + i)
    }

    /// Position of a flat index; unused components are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Momentum of a flat index in spectral (FFT) ordering.
    pub fn momentum(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let dk = std::f64::consts::PI / self.half_width;
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = dk * self.wavenumber(idx[a]) as f64;
        }
        k
    }

    pub fn momentum_norm(&self, flat: usize) -> f64 {
        let k = self.momentum(flat);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }

    /// Periodic minimum-image representative of a displacement component.
    pub fn min_image(&self, dx: f64) -> f64 {
        let period = 2.0 * self.half_width;
        dx - period * (dx / period).round()
    }

    /// Minimum-image distance between two points of the box.
    pub fn distance(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        (0..self.dim).map(|a| self.min_image(x[a] - y[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// `L²` inner product `Σ conj(u) v Δx^d`.
    pub fn inner(&self, u: &[C64], v: &[C64]) -> C64 {
        crate::linalg::dot(u, v) * self.cell_volume()
    }

    pub fn norm(&self, u: &[C64]) -> f64 {
        (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    /// Rescales `u` to unit `L²` norm; returns the previous norm.
    pub fn normalize(&self, u: &mut [C64]) -> f64 {
        let nrm = self.norm(u);
        if nrm > 0.0 {
            for z in u.iter_mut() {
                *z /= nrm;
            }
        }
        nrm
    }

    /// `∫ f` by the grid rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_volume()
    }

    /// Whether a point lies in the outer 10% shell of the box.
    pub fn in_outer_shell(&self, flat: usize) -> bool {
        let x = self.point(flat);
        (0..self.dim).any(|a| x[a].abs() > 0.9 * self.half_width)
    }

    /// `L²` mass of `u` in the outer 10% shell.
    pub fn outer_shell_mass(&self, u: &[C64]) -> f64 {
        u.iter()
            .enumerate()
            .filter(|(i, _)| self.in_outer_shell(*i))
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * self.cell_volume()
    }

    /// Samples a function of position.
    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.point(i))).collect()
    }

    /// Samples a function of momentum in spectral ordering.
    pub fn sample_momentum<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.momentum(i))).collect()
    }
}

/// Multidimensional FFT on a [`Grid`], applied axis by axis.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let n = self.grid.points;
        let d = self.grid.dim;
        assert_eq!(data.len(), self.grid.len(), "grid function length mismatch");
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        if d == 1 {
            return;
        }
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..d - 1 {
            let stride = n.pow((d - 1 - axis) as u32);
            let outer = data.len() / (stride * n);
            for o in 0..outer {
                let base = o * stride * n;
                for inner in 0..stride {
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[base + inner + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        data[base + inner + j * stride] = *l;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.transform(&self.forward, data);
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(&self.inverse, data);
        let s = 1.0 / self.grid.len() as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    /// Applies a Fourier multiplier `m(k)` given in spectral ordering.
    pub fn apply_multiplier(&self, multiplier: &[f64], data: &mut [C64]) {
        self.forward(data);
        for (z, m) in data.iter_mut().zip(multiplier) {
            *z *= m;
        }
        self.inverse(data);
    }

    /// Periodic convolution `(f * g)(x) = ∫ f(x - y) g(y) dy` on the grid, where `f` is
    /// sampled at grid displacements (index 0 holds the displacement `-L`).
    pub fn convolve(&self, f: &[C64], g: &[C64]) -> Vec<C64> {
        let mut fh = self.centered_kernel(f);
        self.forward(&mut fh);
        let mut gh = g.to_vec();
        self.forward(&mut gh);
        for (a, b) in gh.iter_mut().zip(&fh) {
            *a *= b;
        }
        self.inverse(&mut gh);
        let dv = self.grid.cell_volume();
        for z in gh.iter_mut() {
            *z *= dv;
        }
        gh
    }

    /// Reorders a kernel sampled on the grid points so index 0 is the zero displacement.
    fn centered_kernel(&self, f: &[C64]) -> Vec<C64> {
        let n = self.grid.points;
        let half = n / 2;
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for (i, v) in f.iter().enumerate() {
            let idx = self.grid.multi_index(i);
            let mut shifted = [0usize; 3];
            for a in 0..self.grid.dim {
                shifted[a] = (idx[a] + n - half) % n;
            }
            out[self.grid.flat_index(&shifted[..self.grid.dim])] = *v;
        }
        out
    }
}
