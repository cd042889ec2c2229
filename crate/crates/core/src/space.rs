//! Bregman geometry over simple feasible sets.
//!
//! A [`ProxSetup`] bundles a feasible set `Q`, a norm, and a prox-function
//! `d` that is `σ`-strongly convex with respect to that norm and minimized
//! (with value zero) at the prox-center `x0`. Everything the methods need
//! from the geometry goes through this module: `d`, `∇d`, the Bregman
//! distance `ξ(z, x) = d(x) - d(z) - <∇d(z), x - z>`, the linearization
//! `l_d(z; x) = d(z) + <∇d(z), x - z>`, and an exact solver for
//!
//! ```text
//! min_{x in Q}  <s, x> + w Ψ(x) + β d(x)
//! ```
//!
//! Supported pairings are (free space, euclidean), (box, euclidean),
//! (ball, euclidean), (simplex, euclidean) and (simplex, entropy). An l1
//! composite term is accepted only with the euclidean geometry on free
//! space or a box.

use std::fmt;
use std::ops::Deref;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical slack used across the crate.
///
/// The inequalities being checked are exact; the slack only absorbs
/// floating-point error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute slack on certificate residuals.
    pub residual_abs: f64,
    /// Slack on certificate residuals relative to the magnitude of the terms.
    pub residual_rel: f64,
    /// Slack for algebraic identities.
    pub identity: f64,
    /// Constraint residual accepted for feasibility.
    pub feasibility: f64,
    /// Slack added to closed-form rate envelopes.
    pub envelope: f64,
    /// Relative slack when comparing a replayed quantity against a recorded one.
    pub replay: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_abs: 1e-9,
            residual_rel: 1e-9,
            identity: 1e-12,
            feasibility: 1e-10,
            envelope: 1e-8,
            replay: 1e-9,
        }
    }
}

impl Tolerances {
    /// Slack allowed for a residual whose terms have magnitude `scale`.
    pub fn residual_slack(&self, scale: f64) -> f64 {
        self.residual_abs + self.residual_rel * scale.abs()
    }

    /// Same tolerances with the absolute residual slack replaced.
    pub fn with_residual_abs(mut self, tol: f64) -> Self {
        self.residual_abs = tol;
        self
    }
}

macro_rules! vector_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Serialize, Deserialize)]
        #[serde(from = "Vec<f64>", into = "Vec<f64>")]
        pub struct $name(pub DVector<f64>);

        impl $name {
            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn from_slice(values: &[f64]) -> Self {
                Self(DVector::from_column_slice(values))
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn into_inner(self) -> DVector<f64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl Deref for $name {
            type Target = DVector<f64>;
            fn deref(&self) -> &DVector<f64> {
                &self.0
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(DVector::from_vec(v))
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(v: $name) -> Vec<f64> {
                v.0.as_slice().to_vec()
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_tuple(stringify!($name)).field(&self.0.as_slice()).finish()
            }
        }
    };
}

vector_newtype!(
    /// A point of the primal space `E`.
    Point
);
vector_newtype!(
    /// An element of the dual space `E*` (slopes, subgradients, aggregated linear terms).
    DualVector
);

impl DualVector {
    /// `<s, x>`.
    pub fn pair(&self, x: &Point) -> f64 {
        self.0.dot(&x.0)
    }
}

/// Primal norm attached to a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    L1,
}

impl Norm {
    pub fn primal(&self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::L2 => v.norm(),
            Norm::L1 => v.lp_norm(1),
        }
    }

    pub fn dual(&self, s: &DVector<f64>) -> f64 {
        match self {
            Norm::L2 => s.norm(),
            Norm::L1 => s.amax(),
        }
    }
}

/// Feasible set descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeasibleSet {
    Free,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex,
}

impl FeasibleSet {
    pub fn is_compact(&self) -> bool {
        !matches!(self, FeasibleSet::Free)
    }

    fn name(&self) -> &'static str {
        match self {
            FeasibleSet::Free => "free",
            FeasibleSet::Box { .. } => "box",
            FeasibleSet::Ball { .. } => "ball",
            FeasibleSet::Simplex => "simplex",
        }
    }
}

/// Prox-function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// `d(x) = ½‖x - x0‖₂²`, σ = 1 with respect to the l2 norm.
    Euclidean,
    /// `d(x) = ln n + Σ xᵢ ln xᵢ` on the simplex, σ = 1 with respect to the l1 norm.
    Entropy,
}

/// Composite term `Ψ` appearing in the structured class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompositeTerm {
    #[default]
    None,
    /// `Ψ(x) = weight · ‖x‖₁`.
    L1 { weight: f64 },
    /// The indicator of `Q`, already enforced by the feasible set; contributes zero.
    IndicatorAbsorbed,
}

impl CompositeTerm {
    /// `Ψ(x)`.
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            CompositeTerm::L1 { weight } => weight * x.lp_norm(1),
            _ => 0.0,
        }
    }

    /// Weight of the l1 term, zero when there is none.
    pub fn l1_weight(&self) -> f64 {
        match self {
            CompositeTerm::L1 { weight } => *weight,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CompositeTerm::L1 { weight } = self {
            if !weight.is_finite() || *weight < 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "l1 weight must be finite and nonnegative, got {weight}"
                )));
            }
        }
        Ok(())
    }
}

/// Serialized form of a [`ProxSetup`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupSpec {
    pub dim: usize,
    pub set: FeasibleSet,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

/// Feasible set, norm and prox-function, immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetupSpec", into = "SetupSpec")]
pub struct ProxSetup {
    dim: usize,
    set: FeasibleSet,
    geometry: Geometry,
    sigma: f64,
    x0: Point,
}

impl TryFrom<SetupSpec> for ProxSetup {
    type Error = Error;

    fn try_from(spec: SetupSpec) -> Result<Self> {
        ProxSetup::new(spec.dim, spec.set, spec.geometry, spec.x0.map(Point::from))
    }
}

impl From<ProxSetup> for SetupSpec {
    fn from(setup: ProxSetup) -> Self {
        SetupSpec {
            dim: setup.dim,
            set: setup.set,
            geometry: setup.geometry,
            x0: Some(setup.x0.into()),
        }
    }
}

const FEASIBILITY_TOL: f64 = 1e-10;

impl ProxSetup {
    /// Builds a setup, choosing the prox-center when `x0` is `None`: the origin
    /// projected onto the set for the euclidean geometry (the center for a
    /// ball), the uniform point for the simplex.
    pub fn new(dim: usize, set: FeasibleSet, geometry: Geometry, x0: Option<Point>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSetup("dimension must be positive".into()));
        }
        match &set {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(Error::InvalidSetup("box bounds must match the dimension".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u) {
                    return Err(Error::InvalidSetup("box bounds must be finite with lower <= upper".into()));
                }
            }
            FeasibleSet::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::InvalidSetup("ball center must match the dimension".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSetup(format!("ball radius must be positive, got {radius}")));
                }
            }
            FeasibleSet::Free | FeasibleSet::Simplex => {}
        }
        if geometry == Geometry::Entropy && set != FeasibleSet::Simplex {
            return Err(Error::InvalidSetup("entropy geometry requires the simplex".into()));
        }

        let uniform = || Point(DVector::from_element(dim, 1.0 / dim as f64));
        let x0 = match (geometry, x0) {
            (Geometry::Entropy, Some(x)) => {
                let u = uniform();
                if x.dim() != dim || (&x.0 - &u.0).amax() > FEASIBILITY_TOL {
                    return Err(Error::InvalidSetup(
                        "entropy prox-center is the uniform point and cannot be overridden".into(),
                    ));
                }
                u
            }
            (Geometry::Entropy, None) => uniform(),
            (Geometry::Euclidean, Some(x)) => x,
            (Geometry::Euclidean, None) => match &set {
                FeasibleSet::Free => Point::zeros(dim),
                FeasibleSet::Box { lower, upper } => Point(DVector::from_iterator(
                    dim,
                    lower.iter().zip(upper).map(|(l, u)| 0.0f64.clamp(*l, *u)),
                )),
                FeasibleSet::Ball { center, .. } => Point::from_slice(center),
                FeasibleSet::Simplex => uniform(),
            },
        };

        let setup = ProxSetup { dim, set, geometry, sigma: 1.0, x0 };
        setup.check_dim(&setup.x0)?;
        if !setup.x0.is_finite() {
            return Err(Error::InvalidSetup("prox-center must be finite".into()));
        }
        if !setup.contains(&setup.x0, FEASIBILITY_TOL) {
            return Err(Error::InvalidSetup("prox-center must lie in the feasible set".into()));
        }
        Ok(setup)
    }

    pub fn euclidean_free(dim: usize) -> Self {
        Self::new(dim, FeasibleSet::Free, Geometry::Euclidean, None).expect("valid free-space setup")
    }

    pub fn entropy_simplex(dim: usize) -> Self {
        Self::new(dim, FeasibleSet::Simplex, Geometry::Entropy, None).expect("valid simplex setup")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Strong-convexity parameter of `d`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Prox-center `x0 = argmin_Q d`.
    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn norm(&self) -> Norm {
        match self.geometry {
            Geometry::Euclidean => Norm::L2,
            Geometry::Entropy => Norm::L1,
        }
    }

    /// Short identifier used in traces and reports.
    pub fn id(&self) -> String {
        let geometry = match self.geometry {
            Geometry::Euclidean => "euclidean",
            Geometry::Entropy => "entropy",
        };
        format!("{}-{}-{}", self.set.name(), geometry, self.dim)
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// Whether `x` lies in `Q` up to a constraint residual of `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        x.dim() == self.dim && x.is_finite() && self.constraint_residual(x) <= tol
    }

    /// Largest constraint violation of `x`.
    pub fn constraint_residual(&self, x: &Point) -> f64 {
        match &self.set {
            FeasibleSet::Free => 0.0,
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                ((&x.0 - c).norm() - radius).max(0.0)
            }
            FeasibleSet::Simplex => {
                let neg = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
                neg.max((x.sum() - 1.0).abs())
            }
        }
    }

    /// Prox-function value `d(x)`. Entropy uses `0 ln 0 = 0`.
    pub fn d_value(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        match self.geometry {
            Geometry::Euclidean => Ok(0.5 * (&x.0 - &self.x0.0).norm_squared()),
            Geometry::Entropy => {
                if let Some(i) = x.iter().position(|v| *v < 0.0 || !v.is_finite()) {
                    return Err(Error::Infeasible(format!("negative entry at coordinate {i}")));
                }
                let ent: f64 = x.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum();
                Ok((self.dim as f64).ln() + ent)
            }
        }
    }

    /// Gradient `∇d(x)`. Undefined for the entropy at a zero entry.
    pub fn d_grad(&self, x: &Point) -> Result<DualVector> {
        self.check_dim(x)?;
        match self.geometry {
            Geometry::Euclidean => Ok(DualVector(&x.0 - &self.x0.0)),
            Geometry::Entropy => {
                if let Some(index) = x.iter().position(|v| v.is_nan() || *v <= 0.0) {
                    return Err(Error::BoundaryGradient { index });
                }
                Ok(DualVector(x.map(|v| 1.0 + v.ln())))
            }
        }
    }

    /// Bregman distance `ξ(z, x)`.
    pub fn bregman(&self, z: &Point, x: &Point) -> Result<f64> {
        match self.geometry {
            Geometry::Euclidean => {
                self.check_dim(z)?;
                self.check_dim(x)?;
                Ok(0.5 * (&x.0 - &z.0).norm_squared())
            }
            Geometry::Entropy => {
                // Σ xᵢ ln(xᵢ/zᵢ) - Σ xᵢ + Σ zᵢ, which reduces to KL on the simplex
                self.d_grad(z)?;
                self.check_dim(x)?;
                let mut acc = 0.0;
                for (xi, zi) in x.iter().zip(z.iter()) {
                    if *xi < 0.0 {
                        return Err(Error::Infeasible("negative entry".into()));
                    }
                    if *xi > 0.0 {
                        acc += xi * (xi / zi).ln();
                    }
                    acc += zi - xi;
                }
                Ok(acc)
            }
        }
    }

    /// Linearization `l_d(z; x) = d(z) + <∇d(z), x - z>`.
    pub fn l_d(&self, z: &Point, x: &Point) -> Result<f64> {
        let grad = self.d_grad(z)?;
        self.check_dim(x)?;
        Ok(self.d_value(z)? + grad.0.dot(&(&x.0 - &z.0)))
    }

    /// Primal norm of `v`.
    pub fn primal_norm(&self, v: &DVector<f64>) -> f64 {
        self.norm().primal(v)
    }

    /// Dual norm `‖s‖_*`.
    pub fn dual_norm(&self, s: &DualVector) -> Result<f64> {
        self.check_dim(s)?;
        Ok(self.norm().dual(s))
    }

    fn check_psi(&self, psi: &CompositeTerm, psi_weight: f64) -> Result<f64> {
        if !(psi_weight.is_finite() && psi_weight >= 0.0) {
            return Err(Error::UnsupportedSubproblem(format!(
                "composite weight must be finite and nonnegative, got {psi_weight}"
            )));
        }
        psi.validate()?;
        let l1 = psi.l1_weight() * psi_weight;
        if l1 > 0.0
            && !(self.geometry == Geometry::Euclidean
                && matches!(self.set, FeasibleSet::Free | FeasibleSet::Box { .. }))
        {
            return Err(Error::UnsupportedSubproblem(format!(
                "l1 composite term with {} geometry on {} set",
                match self.geometry {
                    Geometry::Euclidean => "euclidean",
                    Geometry::Entropy => "entropy",
                },
                self.set.name()
            )));
        }
        Ok(l1)
    }

    /// Unique minimizer over `Q` of `<s, x> + psi_weight·Ψ(x) + beta·d(x)`.
    pub fn prox_argmin(&self, s: &DualVector, beta: f64, psi: &CompositeTerm, psi_weight: f64) -> Result<Point> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::NonPositiveBeta(beta));
        }
        self.check_dim(s)?;
        let l1 = self.check_psi(psi, psi_weight)?;
        match self.geometry {
            Geometry::Entropy => {
                let logits = s.map(|v| -v / beta);
                let top = logits.max();
                let weights = logits.map(|v| (v - top).exp());
                let total = weights.sum();
                let z = Point(weights / total);
                if let Some(index) = z.iter().position(|v| v.is_nan() || *v <= 0.0) {
                    return Err(Error::BoundaryGradient { index });
                }
                Ok(z)
            }
            Geometry::Euclidean => {
                let mut u = &self.x0.0 - &s.0 / beta;
                let threshold = l1 / beta;
                if threshold > 0.0 {
                    u.apply(|v| *v = soft_threshold(*v, threshold));
                }
                Ok(Point(self.project(u)))
            }
        }
    }

    /// Euclidean projection onto `Q`.
    fn project(&self, mut u: DVector<f64>) -> DVector<f64> {
        match &self.set {
            FeasibleSet::Free => u,
            FeasibleSet::Box { lower, upper } => {
                for (v, (l, h)) in u.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *h);
                }
                u
            }
            FeasibleSet::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let offset = &u - &c;
                let dist = offset.norm();
                if dist <= *radius {
                    u
                } else {
                    c + offset * (radius / dist)
                }
            }
            FeasibleSet::Simplex => project_simplex(&u),
        }
    }

    /// Minimum over `Q` of `<a, x> + w‖x‖₁`, or `None` when the set is unbounded
    /// or the combination has no closed form here (sampled checks are used instead).
    pub fn min_affine_l1(&self, a: &DualVector, l1_weight: f64) -> Option<f64> {
        match &self.set {
            FeasibleSet::Free => None,
            FeasibleSet::Box { lower, upper } => Some(
                a.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(c, (l, h))| {
                        let at = |x: f64| c * x + l1_weight * x.abs();
                        let mut best = at(*l).min(at(*h));
                        if *l <= 0.0 && 0.0 <= *h {
                            best = best.min(0.0);
                        }
                        best
                    })
                    .sum(),
            ),
            FeasibleSet::Simplex if l1_weight == 0.0 => Some(a.min()),
            // ‖x‖₁ is identically one on the simplex
            FeasibleSet::Simplex => Some(a.min() + l1_weight),
            FeasibleSet::Ball { center, radius } if l1_weight == 0.0 => {
                let c = DVector::from_column_slice(center);
                Some(a.0.dot(&c) - radius * a.norm())
            }
            FeasibleSet::Ball { .. } => None,
        }
    }

    /// Draws a point of `Q`. On free space the draw is gaussian around `x0`
    /// with standard deviation `spread`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Point {
        let n = self.dim;
        match &self.set {
            FeasibleSet::Free => Point(DVector::from_fn(n, |i, _| {
                self.x0[i] + spread * Distribution::<f64>::sample(&StandardNormal, rng)
            })),
            FeasibleSet::Box { lower, upper } => Point(DVector::from_fn(n, |i, _| {
                let t: f64 = rng.random();
                lower[i] + t * (upper[i] - lower[i])
            })),
            FeasibleSet::Ball { center, radius } => {
                let dir = DVector::from_fn(n, |_, _| Distribution::<f64>::sample(&StandardNormal, rng));
                let norm = dir.norm().max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                Point(DVector::from_column_slice(center) + dir * (r / norm))
            }
            FeasibleSet::Simplex => {
                let e = DVector::from_fn(n, |_, _| Distribution::<f64>::sample(&Exp1, rng) + 1e-300);
                let total = e.sum();
                Point(e / total)
            }
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Euclidean projection onto the standard simplex (sort-based, stable order).
pub fn project_simplex(u: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = u.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    u.map(|v| (v - theta).max(0.0))
}
