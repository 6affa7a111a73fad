//! Uniform Cartesian grids and moment deposition.

use crate::error::{Error, Result};
use crate::kinematics::{energy, velocity};
use crate::model::{Mollifier, Particle, Position3};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

/// Refuse grids larger than this many nodes.
pub const MAX_GRID_NODES: usize = 8_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Position3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {spacing}")));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!("grid needs at least two nodes per axis, got {dims:?}")));
        }
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if n.is_none_or(|n| n > MAX_GRID_NODES) {
            return Err(Error::InvalidArgument(format!("grid {dims:?} exceeds {MAX_GRID_NODES} nodes")));
        }
        Ok(Self { origin: [origin.x, origin.y, origin.z], spacing, dims })
    }

    /// Smallest grid with nodes on `min + h ℤ³` covering the box.
    pub fn covering(min: &Position3, max: &Position3, spacing: f64) -> Result<Self> {
        let mut dims = [0; 3];
        for i in 0..3 {
            if !(max[i] >= min[i]) {
                return Err(Error::InvalidArgument("grid box must have max >= min".into()));
            }
            dims[i] = ((max[i] - min[i]) / spacing - 1e-9).ceil().max(1.0) as usize + 1;
        }
        Self::new(*min, spacing, dims)
    }

    pub fn origin(&self) -> Position3 {
        Vector3::from(self.origin)
    }

    pub fn max_corner(&self) -> Position3 {
        self.origin() + Vector3::new(
            (self.dims[0] - 1) as f64,
            (self.dims[1] - 1) as f64,
            (self.dims[2] - 1) as f64,
        ) * self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        [idx / (self.dims[1] * self.dims[2]), j, k]
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Position3 {
        self.origin() + Vector3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn point(&self, idx: usize) -> Position3 {
        let [i, j, k] = self.coords(idx);
        self.node(i, j, k)
    }

    pub fn points(&self) -> Vec<Position3> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        (0..3).any(|a| c[a] == 0 || c[a] + 1 == self.dims[a])
    }

    /// Whether the ball of radius `margin` about `x` lies inside the grid box.
    pub fn contains_ball(&self, x: &Position3, margin: f64) -> bool {
        let (lo, hi) = (self.origin(), self.max_corner());
        (0..3).all(|i| x[i] - margin >= lo[i] - 1e-12 && x[i] + margin <= hi[i] + 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridValues {
    Scalar(Vec<f64>),
    Vector(Vec<Vector3<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// `Σ w G`.
    Rho,
    /// `Σ |w| G`.
    RhoAbs,
    /// `Σ w W G`.
    H,
    /// `Σ |w| W G`.
    HAbs,
    /// `Σ w V G`.
    Current,
    E,
    B,
    Kbar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub quantity: Quantity,
    pub time: f64,
    pub values: GridValues,
}

impl GridField {
    pub fn scalar(spec: GridSpec, quantity: Quantity, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), spec.len())));
        }
        Ok(Self { spec, quantity, time, values: GridValues::Scalar(values) })
    }

    pub fn vector(spec: GridSpec, quantity: Quantity, time: f64, values: Vec<Vector3<f64>>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), spec.len())));
        }
        Ok(Self { spec, quantity, time, values: GridValues::Vector(values) })
    }

    pub fn as_scalar(&self) -> Option<&[f64]> {
        match &self.values {
            GridValues::Scalar(v) => Some(v),
            GridValues::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[Vector3<f64>]> {
        match &self.values {
            GridValues::Vector(v) => Some(v),
            GridValues::Scalar(_) => None,
        }
    }

    /// Pointwise magnitude.
    pub fn magnitudes(&self) -> Vec<f64> {
        match &self.values {
            GridValues::Scalar(v) => v.iter().map(|x| x.abs()).collect(),
            GridValues::Vector(v) => v.iter().map(|x| x.norm()).collect(),
        }
    }

    /// Largest magnitude over the nodes.
    pub fn max_abs(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// Largest magnitude on the boundary faces.
    pub fn boundary_max_abs(&self) -> f64 {
        self.magnitudes()
            .into_iter()
            .enumerate()
            .filter(|(i, _)| self.spec.is_boundary(*i))
            .fold(0.0, |m, (_, v)| m.max(v))
    }

    /// `Σ |f| h³`.
    pub fn l1(&self) -> f64 {
        self.magnitudes().iter().sum::<f64>() * self.spec.cell_volume()
    }

    /// `Σ |f|² h³`.
    pub fn l2_squared(&self) -> f64 {
        self.magnitudes().iter().map(|m| m * m).sum::<f64>() * self.spec.cell_volume()
    }

    /// Trilinear interpolation of a scalar field; zero outside the box.
    pub fn interpolate(&self, x: &Position3) -> Option<f64> {
        let v = self.as_scalar()?;
        Some(trilinear(&self.spec, v, x))
    }
}

pub(crate) fn trilinear(spec: &GridSpec, v: &[f64], x: &Position3) -> f64 {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let u = (x[a] - spec.origin[a]) / spec.spacing;
        let last = (spec.dims[a] - 1) as f64;
        if !(u >= 0.0 && u <= last) {
            return 0.0;
        }
        let b = (u.floor() as usize).min(spec.dims[a] - 2);
        base[a] = b;
        frac[a] = u - b as f64;
    }
    let mut acc = 0.0;
    for c in 0..8 {
        let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
        let w = [(di, 0), (dj, 1), (dk, 2)]
            .iter()
            .map(|&(d, a)| if d == 1 { frac[a] } else { 1.0 - frac[a] })
            .product::<f64>();
        if w != 0.0 {
            acc += w * v[spec.index(base[0] + di, base[1] + dj, base[2] + dk)];
        }
    }
    acc
}

/// Nodes within the mollifier cutoff of `x` and their weights `G(node − x) h³`,
/// rescaled so the weights sum to one: every particle deposits exactly its
/// weight, whatever the truncation and grid offset.
fn stencil(spec: &GridSpec, m: &Mollifier, x: &Position3) -> Vec<(usize, f64)> {
    let rc = m.cutoff_radius();
    let h = spec.spacing;
    let lo: Vec<usize> = (0..3)
        .map(|a| (((x[a] - rc - spec.origin[a]) / h).ceil().max(0.0)) as usize)
        .collect();
    let hi: Vec<usize> = (0..3)
        .map(|a| ((((x[a] + rc - spec.origin[a]) / h).floor()) as usize).min(spec.dims[a] - 1))
        .collect();
    let mut out = Vec::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let d = spec.node(i, j, k) - x;
                if d.norm() <= rc {
                    out.push((spec.index(i, j, k), m.value(&d)));
                }
            }
        }
    }
    let total: f64 = out.iter().map(|p| p.1).sum();
    if total > 0.0 {
        for p in &mut out {
            p.1 /= total;
        }
    }
    out
}

/// All deposited moments at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub rho: GridField,
    pub rho_abs: GridField,
    pub h: GridField,
    pub h_abs: GridField,
    pub current: GridField,
}

fn check_inside(particles: &[Particle], spec: &GridSpec, m: &Mollifier) -> Result<()> {
    for (k, p) in particles.iter().enumerate() {
        if !spec.contains_ball(&p.x, m.cutoff_radius()) {
            return Err(Error::OutsideGrid { particle: k });
        }
    }
    Ok(())
}

/// Deposit every moment in one pass. Stencils are built in parallel and
/// accumulated in particle order, so results do not depend on thread count.
pub fn deposit_moments(particles: &[Particle], spec: &GridSpec, m: &Mollifier, time: f64) -> Result<Moments> {
    check_inside(particles, spec, m)?;
    let stencils: Vec<Vec<(usize, f64)>> = particles.par_iter().map(|p| stencil(spec, m, &p.x)).collect();
    let n = spec.len();
    let inv_vol = 1.0 / spec.cell_volume();
    let (mut rho, mut rho_abs, mut h, mut h_abs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut j = vec![Vector3::zeros(); n];
    for (p, st) in particles.iter().zip(&stencils) {
        let w = energy(&p.p);
        let v = velocity(&p.p);
        for &(idx, g) in st {
            let g = g * inv_vol;
            rho[idx] += p.w * g;
            rho_abs[idx] += p.w.abs() * g;
            h[idx] += p.w * w * g;
            h_abs[idx] += p.w.abs() * w * g;
            j[idx] += v * (p.w * g);
        }
    }
    Ok(Moments {
        rho: GridField::scalar(*spec, Quantity::Rho, time, rho)?,
        rho_abs: GridField::scalar(*spec, Quantity::RhoAbs, time, rho_abs)?,
        h: GridField::scalar(*spec, Quantity::H, time, h)?,
        h_abs: GridField::scalar(*spec, Quantity::HAbs, time, h_abs)?,
        current: GridField::vector(*spec, Quantity::Current, time, j)?,
    })
}

/// Deposit one moment.
pub fn deposit(particles: &[Particle], quantity: Quantity, spec: &GridSpec, m: &Mollifier, time: f64) -> Result<GridField> {
    let all = deposit_moments(particles, spec, m, time)?;
    match quantity {
        Quantity::Rho => Ok(all.rho),
        Quantity::RhoAbs => Ok(all.rho_abs),
        Quantity::H => Ok(all.h),
        Quantity::HAbs => Ok(all.h_abs),
        Quantity::Current => Ok(all.current),
        q => Err(Error::InvalidArgument(format!("{q:?} is not a particle moment"))),
    }
}

/// Upper bound on the true supremum of a deposited blob sum given its grid
/// maximum: a Gaussian of width δ sampled at spacing h loses at most a factor
/// `exp(3h²/(8δ²))` between nodes.
pub fn sup_bound(grid_max: f64, spacing: f64, m: &Mollifier) -> f64 {
    grid_max * (3.0 * spacing * spacing / (8.0 * m.delta() * m.delta())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(x: Position3, w: f64) -> Vec<Particle> {
        vec![Particle::new(x, Vector3::new(0.3, 0.0, 0.0), w).unwrap()]
    }

    #[test]
    fn index_roundtrip_and_boundary() {
        let g = GridSpec::new(Vector3::zeros(), 0.5, [3, 4, 5]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(g.index(1, 1, 1)));
        assert!(GridSpec::new(Vector3::zeros(), 0.5, [1, 4, 5]).is_err());
    }

    #[test]
    fn covering_box_reaches_max() {
        let g = GridSpec::covering(&Vector3::new(-1.0, -1.0, -1.0), &Vector3::new(1.0, 0.95, 1.0), 0.1).unwrap();
        assert_eq!(g.dims, [21, 21, 21]);
        assert!(g.max_corner().y >= 0.95);
    }

    #[test]
    fn peak_density_of_unit_blob() {
        let g = GridSpec::covering(&Vector3::new(-6.0, -6.0, -6.0), &Vector3::new(6.0, 6.0, 6.0), 0.25).unwrap();
        let m = Mollifier::new(1.0).unwrap();
        let rho = deposit(&one(Vector3::zeros(), 2.0), Quantity::Rho, &g, &m, 0.0).unwrap();
        let peak = 2.0 * (2.0 * std::f64::consts::PI).powf(-1.5);
        assert!((rho.max_abs() - peak).abs() < 1e-4, "{}", rho.max_abs());
    }

    #[test]
    fn deposited_mass_is_exact() {
        let g = GridSpec::covering(&Vector3::new(-2.0, -2.0, -2.0), &Vector3::new(2.0, 2.0, 2.0), 0.1).unwrap();
        let m = Mollifier::new(0.2).unwrap();
        let p = one(Vector3::new(0.0137, -0.211, 0.05), -1.5);
        let mo = deposit_moments(&p, &g, &m, 0.0).unwrap();
        assert!((mo.rho.as_scalar().unwrap().iter().sum::<f64>() * g.cell_volume() + 1.5).abs() < 1e-13);
        assert!((mo.rho_abs.l1() - 1.5).abs() < 1e-13);
        let w = energy(&p[0].p);
        assert!((mo.h_abs.l1() - 1.5 * w).abs() < 1e-12);
    }

    #[test]
    fn outside_grid_rejected() {
        let g = GridSpec::covering(&Vector3::new(-1.0, -1.0, -1.0), &Vector3::new(1.0, 1.0, 1.0), 0.1).unwrap();
        let m = Mollifier::new(0.2).unwrap();
        let r = deposit(&one(Vector3::new(0.5, 0.0, 0.0), 1.0), Quantity::Rho, &g, &m, 0.0);
        assert_eq!(r, Err(Error::OutsideGrid { particle: 0 }));
    }

    #[test]
    fn trilinear_reproduces_linear_functions() {
        let g = GridSpec::new(Vector3::new(-1.0, 0.0, 0.5), 0.3, [5, 6, 7]).unwrap();
        let f = |x: &Position3| 1.0 + 2.0 * x.x - x.y + 0.5 * x.z;
        let v: Vec<f64> = g.points().iter().map(f).collect();
        let x = Vector3::new(-0.33, 0.71, 1.2);
        assert!((trilinear(&g, &v, &x) - f(&x)).abs() < 1e-13);
        assert_eq!(trilinear(&g, &v, &Vector3::new(5.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn sup_bound_covers_off_node_peak() {
        let h = 0.1;
        let m = Mollifier::new(0.2).unwrap();
        let g = GridSpec::covering(&Vector3::new(-1.2, -1.2, -1.2), &Vector3::new(1.2, 1.2, 1.2), h).unwrap();
        // Blob centred in the middle of a cell: worst case for the grid maximum.
        let x = Vector3::new(0.05, 0.05, 0.05);
        let rho = deposit(&one(x, 1.0), Quantity::Rho, &g, &m, 0.0).unwrap();
        assert!(sup_bound(rho.max_abs(), h, &m) >= m.peak() * (1.0 - 1e-12));
    }
}
