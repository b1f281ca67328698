//! Activation operators as proximity operators of convex penalties.
//!
//! Every member of the catalog is `prox_phi` for a proper, lower
//! semicontinuous convex `phi` that is minimized at the origin, so each
//! activation is firmly nonexpansive and fixes 0. Each member also carries
//! its subdifferential in closed form, which lets [`Activation::subgradient_contains`]
//! decide inclusions `u in d(phi)(z)` exactly up to a caller tolerance.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Names of the catalog members, as used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Identity,
    Relu,
    SoftThreshold,
    Clip,
    Shrink,
    GroupSoftThreshold,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Identity,
        ActivationKind::Relu,
        ActivationKind::SoftThreshold,
        ActivationKind::Clip,
        ActivationKind::Shrink,
        ActivationKind::GroupSoftThreshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Relu => "relu",
            ActivationKind::SoftThreshold => "soft_threshold",
            ActivationKind::Clip => "clip",
            ActivationKind::Shrink => "shrink",
            ActivationKind::GroupSoftThreshold => "group_soft_threshold",
        }
    }

    pub fn takes_param(self) -> bool {
        !matches!(self, ActivationKind::Identity | ActivationKind::Relu)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation kind `{s}`")))
    }
}

/// A proximal activation `sigma = prox_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `phi = 0`.
    Identity,
    /// `phi` = indicator of the nonnegative orthant.
    Relu,
    /// `phi = lambda |x|_1`.
    SoftThreshold { lambda: f64 },
    /// `phi` = indicator of the box `[-c, c]^d`.
    Clip { bound: f64 },
    /// `phi = (lambda / 2) |x|^2`.
    Shrink { lambda: f64 },
    /// `phi = lambda |x|_2`; acts on the whole block, not coordinatewise.
    GroupSoftThreshold { lambda: f64 },
}

impl Activation {
    /// Builds a catalog member, validating the parameter.
    pub fn new(kind: ActivationKind, param: Option<f64>) -> Result<Self> {
        let param = if kind.takes_param() {
            let p = param.ok_or_else(|| {
                Error::InvalidArgument(format!("activation `{kind}` requires a parameter"))
            })?;
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "activation `{kind}` parameter must be positive and finite, got {p}"
                )));
            }
            p
        } else {
            if param.is_some() {
                return Err(Error::InvalidArgument(format!(
                    "activation `{kind}` takes no parameter"
                )));
            }
            0.0
        };
        Ok(match kind {
            ActivationKind::Identity => Activation::Identity,
            ActivationKind::Relu => Activation::Relu,
            ActivationKind::SoftThreshold => Activation::SoftThreshold { lambda: param },
            ActivationKind::Clip => Activation::Clip { bound: param },
            ActivationKind::Shrink => Activation::Shrink { lambda: param },
            ActivationKind::GroupSoftThreshold => Activation::GroupSoftThreshold { lambda: param },
        })
    }

    pub fn kind(&self) -> ActivationKind {
        match self {
            Activation::Identity => ActivationKind::Identity,
            Activation::Relu => ActivationKind::Relu,
            Activation::SoftThreshold { .. } => ActivationKind::SoftThreshold,
            Activation::Clip { .. } => ActivationKind::Clip,
            Activation::Shrink { .. } => ActivationKind::Shrink,
            Activation::GroupSoftThreshold { .. } => ActivationKind::GroupSoftThreshold,
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Activation::Identity | Activation::Relu => None,
            Activation::SoftThreshold { lambda }
            | Activation::Shrink { lambda }
            | Activation::GroupSoftThreshold { lambda } => Some(lambda),
            Activation::Clip { bound } => Some(bound),
        }
    }

    /// Whether the map acts independently on each coordinate.
    pub fn is_coordinatewise(&self) -> bool {
        !matches!(self, Activation::GroupSoftThreshold { .. })
    }

    /// `prox_phi(x) = argmin_y phi(y) + |x - y|^2 / 2`.
    pub fn prox(&self, x: &Vector) -> Vector {
        Vector::from_vec(self.prox_slice(x.as_slice()))
    }

    pub(crate) fn prox_slice(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Activation::Identity => x.to_vec(),
            Activation::Relu => x.iter().map(|v| v.max(0.0)).collect(),
            Activation::SoftThreshold { lambda } => x
                .iter()
                .map(|v| v.signum() * (v.abs() - lambda).max(0.0))
                .map(|v| if v == 0.0 { 0.0 } else { v })
                .collect(),
            Activation::Clip { bound } => x.iter().map(|v| v.clamp(-bound, bound)).collect(),
            Activation::Shrink { lambda } => x.iter().map(|v| v / (1.0 + lambda)).collect(),
            Activation::GroupSoftThreshold { lambda } => {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n <= lambda {
                    vec![0.0; x.len()]
                } else {
                    let factor = 1.0 - lambda / n;
                    x.iter().map(|v| factor * v).collect()
                }
            }
        }
    }

    /// `phi(x)`, with `f64::INFINITY` outside the domain of an indicator.
    pub fn phi(&self, x: &Vector) -> f64 {
        let x = x.as_slice();
        match *self {
            Activation::Identity => 0.0,
            Activation::Relu => {
                if x.iter().all(|v| *v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Activation::SoftThreshold { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Activation::Clip { bound } => {
                if x.iter().all(|v| v.abs() <= bound) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Activation::Shrink { lambda } => 0.5 * lambda * x.iter().map(|v| v * v).sum::<f64>(),
            Activation::GroupSoftThreshold { lambda } => {
                lambda * x.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        }
    }

    /// The subdifferential of `phi` at `z`.
    ///
    /// Coordinates within `domain_tol` of the domain of an indicator are
    /// projected onto it first; beyond that the set is empty.
    pub fn subdifferential(&self, z: &Vector, domain_tol: f64) -> SubgradientSet {
        let z = z.as_slice();
        let coordinatewise = |f: &dyn Fn(f64) -> Option<Interval>| -> SubgradientSet {
            z.iter()
                .map(|v| f(*v))
                .collect::<Option<Vec<_>>>()
                .map_or(SubgradientSet::Empty, SubgradientSet::Box)
        };
        match *self {
            Activation::Identity => coordinatewise(&|_| Some(Interval::point(0.0))),
            Activation::Relu => coordinatewise(&|v| {
                if v > 0.0 {
                    Some(Interval::point(0.0))
                } else if v >= -domain_tol {
                    Some(Interval::new(f64::NEG_INFINITY, 0.0))
                } else {
                    None
                }
            }),
            Activation::SoftThreshold { lambda } => coordinatewise(&|v| {
                Some(if v == 0.0 {
                    Interval::new(-lambda, lambda)
                } else {
                    Interval::point(lambda * v.signum())
                })
            }),
            Activation::Clip { bound } => coordinatewise(&|v| {
                if v.abs() < bound {
                    Some(Interval::point(0.0))
                } else if v.abs() > bound + domain_tol {
                    None
                } else if v > 0.0 {
                    Some(Interval::new(0.0, f64::INFINITY))
                } else {
                    Some(Interval::new(f64::NEG_INFINITY, 0.0))
                }
            }),
            Activation::Shrink { lambda } => coordinatewise(&|v| Some(Interval::point(lambda * v))),
            Activation::GroupSoftThreshold { lambda } => {
                let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n == 0.0 {
                    SubgradientSet::Ball { radius: lambda }
                } else {
                    SubgradientSet::Box(z.iter().map(|v| Interval::point(lambda * v / n)).collect())
                }
            }
        }
    }

    /// True iff the distance from `u` to `d(phi)(z)` is at most `tol`.
    ///
    /// Returns false when the subdifferential is empty or when `z` and `u`
    /// have different dimensions.
    pub fn subgradient_contains(&self, z: &Vector, u: &Vector, tol: f64) -> bool {
        if z.dim() != u.dim() {
            return false;
        }
        self.subdifferential(z, tol).distance(u) <= tol
    }

    /// Distance from `u` to `d(phi)(z)`; infinite when the set is empty.
    pub fn subgradient_distance(&self, z: &Vector, u: &Vector, domain_tol: f64) -> f64 {
        if z.dim() != u.dim() {
            return f64::INFINITY;
        }
        self.subdifferential(z, domain_tol).distance(u)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Closed interval of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper);
        Self { lower, upper }
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lower {
            self.lower - v
        } else if v > self.upper {
            v - self.upper
        } else {
            0.0
        }
    }
}

/// A subdifferential value in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgradientSet {
    /// The point lies outside `dom(phi)`.
    Empty,
    /// Cartesian product of per-coordinate intervals.
    Box(Vec<Interval>),
    /// Closed euclidean ball centred at the origin.
    Ball { radius: f64 },
}

impl SubgradientSet {
    /// Euclidean distance from `u` to the set.
    pub fn distance(&self, u: &Vector) -> f64 {
        match self {
            SubgradientSet::Empty => f64::INFINITY,
            SubgradientSet::Box(intervals) => {
                debug_assert_eq!(intervals.len(), u.dim());
                intervals
                    .iter()
                    .zip(u.as_slice())
                    .map(|(iv, v)| iv.distance(*v).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            SubgradientSet::Ball { radius } => (u.norm() - radius).max(0.0),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SubgradientSet::Empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn act(kind: ActivationKind, p: Option<f64>) -> Activation {
        Activation::new(kind, p).unwrap()
    }

    #[test]
    fn prox_examples() {
        assert_eq!(Activation::Relu.prox(&v(&[-1.0, 2.0])), v(&[0.0, 2.0]));
        let soft = act(ActivationKind::SoftThreshold, Some(0.5));
        assert_eq!(soft.prox(&v(&[2.0, -0.3])), v(&[1.5, 0.0]));
        let group = act(ActivationKind::GroupSoftThreshold, Some(1.0));
        let p = group.prox(&v(&[3.0, 4.0]));
        assert!((p[0] - 2.4).abs() < 1e-15 && (p[1] - 3.2).abs() < 1e-15);
    }

    /// Minimizes `lambda |y| + |x - y|^2 / 2` over the ray `y = t x / |x|` by
    /// bisection on the sign of a central-difference slope, independently of
    /// the closed form.
    #[test]
    fn group_prox_matches_ray_minimization() {
        let lambda = 1.0;
        let x = [3.0, 4.0];
        let xn = 5.0;
        let objective = |t: f64| {
            let y = [t * x[0] / xn, t * x[1] / xn];
            lambda * t.abs() + 0.5 * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
        };
        let h = 1e-6;
        let slope = |t: f64| (objective(t + h) - objective(t - h)) / (2.0 * h);
        let (mut a, mut b) = (h, xn);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if slope(mid) > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let t = 0.5 * (a + b);
        let oracle = [t * x[0] / xn, t * x[1] / xn];
        let p = act(ActivationKind::GroupSoftThreshold, Some(lambda)).prox(&v(&x));
        assert!((p[0] - oracle[0]).abs() < 1e-8 && (p[1] - oracle[1]).abs() < 1e-8);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(act(ActivationKind::Clip, Some(1.0)).phi(&v(&[2.0])), f64::INFINITY);
        assert_eq!(act(ActivationKind::Shrink, Some(2.0)).phi(&v(&[3.0])), 9.0);
        for kind in ActivationKind::ALL {
            let a = act(kind, kind.takes_param().then_some(0.7));
            assert_eq!(a.phi(&Vector::zeros(3)), 0.0, "{kind}");
            assert_eq!(a.prox(&Vector::zeros(3)), Vector::zeros(3), "{kind}");
        }
    }

    #[test]
    fn subgradient_examples() {
        assert!(Activation::Relu.subgradient_contains(&v(&[0.0]), &v(&[-5.0]), 0.0));
        let soft = act(ActivationKind::SoftThreshold, Some(0.5));
        assert!(!soft.subgradient_contains(&v(&[0.0]), &v(&[0.6]), 0.05));
        assert!(soft.subgradient_contains(&v(&[0.0]), &v(&[0.6]), 0.1 + 1e-12));
        let shrink = act(ActivationKind::Shrink, Some(1.0));
        assert!(shrink.subgradient_contains(&v(&[2.0]), &v(&[2.0]), 0.0));
    }

    #[test]
    fn empty_subdifferential_is_non_membership() {
        assert!(!Activation::Relu.subgradient_contains(&v(&[-1.0]), &v(&[0.0]), 1e-8));
        let clip = act(ActivationKind::Clip, Some(1.0));
        assert!(!clip.subgradient_contains(&v(&[1.5]), &v(&[1.0]), 1e-8));
        assert!(clip.subdifferential(&v(&[1.5]), 0.0).is_empty());
    }

    #[test]
    fn points_within_tolerance_of_domain_are_projected() {
        assert!(Activation::Relu.subgradient_contains(&v(&[-1e-12]), &v(&[-3.0]), 1e-10));
        let clip = act(ActivationKind::Clip, Some(1.0));
        assert!(clip.subgradient_contains(&v(&[1.0 + 1e-12]), &v(&[7.0]), 1e-10));
        assert!(clip.subgradient_contains(&v(&[-1.0]), &v(&[-7.0]), 0.0));
        assert!(!clip.subgradient_contains(&v(&[-1.0]), &v(&[7.0]), 0.0));
    }

    #[test]
    fn group_subdifferential_at_origin_is_ball() {
        let g = act(ActivationKind::GroupSoftThreshold, Some(2.0));
        assert!(g.subgradient_contains(&v(&[0.0, 0.0]), &v(&[1.2, 1.6]), 0.0));
        assert!(!g.subgradient_contains(&v(&[0.0, 0.0]), &v(&[3.0, 0.0]), 0.5));
        assert!(g.subgradient_contains(&v(&[0.0, 0.0]), &v(&[3.0, 0.0]), 1.0));
        assert!(g.subgradient_contains(&v(&[0.0, 5.0]), &v(&[0.0, 2.0]), 0.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(Activation::new(ActivationKind::SoftThreshold, Some(-1.0)).is_err());
        assert!(Activation::new(ActivationKind::Clip, Some(0.0)).is_err());
        assert!(Activation::new(ActivationKind::Shrink, None).is_err());
        assert!(Activation::new(ActivationKind::Relu, Some(1.0)).is_err());
        assert!("tanh".parse::<ActivationKind>().is_err());
        assert_eq!(
            "group_soft_threshold".parse::<ActivationKind>().unwrap(),
            ActivationKind::GroupSoftThreshold
        );
    }

    #[test]
    fn mismatched_dimensions_are_not_members() {
        assert!(!Activation::Identity.subgradient_contains(&v(&[0.0]), &v(&[0.0, 0.0]), 1.0));
    }
}
