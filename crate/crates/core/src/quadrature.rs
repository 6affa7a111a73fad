//! One-dimensional Gauss rules and the product rule on the unit sphere.

use crate::error::{Error, Result};
use gauss_quad::legendre::GaussLegendre;
use nalgebra::Vector3;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Nodes and weights of a (possibly composite) rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_pairs(n: usize) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(n)
        .ok_or_else(|| Error::InvalidArgument("Gauss rule needs at least one node".into()))?;
    Ok(GaussLegendre::new(n).as_node_weight_pairs().to_vec())
}

impl GaussRule {
    /// Composite Gauss-Legendre with `n` nodes on each panel between consecutive breakpoints.
    pub fn composite(breaks: &[f64], n: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let base = legendre_pairs(n)?;
        let mut nodes = Vec::with_capacity(n * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for &(x, wt) in &base {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Plain Gauss-Legendre on `[a, b]`.
    pub fn legendre(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::composite(&[a, b], n)
    }

    /// `panels` equal panels on `[a, b]`, `n` nodes each.
    pub fn panels(a: f64, b: f64, panels: usize, n: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidArgument("need at least one panel".into()));
        }
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::composite(&breaks, n)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.pairs().map(|(x, w)| w * f(x)).sum()
    }
}

/// Breakpoints in `u = cos φ` that grade panels toward the pole `u = 1`, where
/// the light-cone weight `1/(1 − β u)` concentrates as β → 1.
pub const GRADED_POLAR_BREAKS: [f64; 8] = [-1.0, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99, 1.0];

/// Product rule on the unit sphere: Gauss-Legendre in `u = cos φ` times the
/// trapezoid rule in θ, with `ω = (cosθ sinφ, sinθ sinφ, cosφ)` in a frame
/// whose polar axis can be pointed at a feature of the integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    polar: GaussRule,
    n_theta: usize,
}

impl SphereRule {
    pub fn new(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_theta == 0 {
            return Err(Error::InvalidArgument("need at least one azimuthal node".into()));
        }
        Ok(Self {
            polar: GaussRule::legendre(-1.0, 1.0, n_phi)?,
            n_theta,
        })
    }

    /// Polar nodes on the graded panels of [`GRADED_POLAR_BREAKS`].
    pub fn graded(n_per_panel: usize, n_theta: usize) -> Result<Self> {
        if n_theta == 0 {
            return Err(Error::InvalidArgument("need at least one azimuthal node".into()));
        }
        Ok(Self {
            polar: GaussRule::composite(&GRADED_POLAR_BREAKS, n_per_panel)?,
            n_theta,
        })
    }

    pub fn n_polar(&self) -> usize {
        self.polar.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn polar_rule(&self) -> &GaussRule {
        &self.polar
    }

    /// Visit every node as `(θ, u = cosφ, weight)`; weights sum to 4π.
    pub fn for_each_angle(&self, mut f: impl FnMut(f64, f64, f64)) {
        let dtheta = 2.0 * PI / self.n_theta as f64;
        for (u, wu) in self.polar.pairs() {
            for j in 0..self.n_theta {
                f(j as f64 * dtheta, u, wu * dtheta);
            }
        }
    }

    /// `∫_{S²} f(ω) dω` with the polar axis along `axis` (any nonzero vector).
    pub fn integrate<const N: usize>(
        &self,
        axis: &Vector3<f64>,
        mut f: impl FnMut(&Vector3<f64>) -> [f64; N],
    ) -> [f64; N] {
        let (e1, e2, e3) = orthonormal_frame(axis);
        let mut acc = [0.0; N];
        self.for_each_angle(|theta, u, w| {
            let s = (1.0 - u * u).max(0.0).sqrt();
            let omega = e1 * (theta.cos() * s) + e2 * (theta.sin() * s) + e3 * u;
            let v = f(&omega);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        });
        acc
    }

    /// Spherical mean `(1/4π) ∫ f dω`.
    pub fn mean<const N: usize>(
        &self,
        axis: &Vector3<f64>,
        f: impl FnMut(&Vector3<f64>) -> [f64; N],
    ) -> [f64; N] {
        let mut v = self.integrate(axis, f);
        for x in &mut v {
            *x /= 4.0 * PI;
        }
        v
    }
}

/// Right-handed orthonormal frame `(e1, e2, e3)` with `e3 ∥ axis`. For `axis = ẑ`
/// this is the Cartesian frame, so angles keep their textbook meaning.
pub fn orthonormal_frame(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let n = axis.norm();
    let e3 = if n > 0.0 { axis / n } else { Vector3::z() };
    if (e3 - Vector3::z()).norm() < 1e-15 {
        return (Vector3::x(), Vector3::y(), Vector3::z());
    }
    let helper = if e3.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - e3 * helper.dot(&e3)).normalize();
    let e2 = e3.cross(&e1);
    (e1, e2, e3)
}
