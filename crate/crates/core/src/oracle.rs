//! Problem definitions and the lower convex approximation oracle.
//!
//! A query at `y` returns the data of `l_f(y; x) = value + <slope, x - y>`
//! (plus `Ψ(x)` for the composite variant). For every variant
//! `l_f(y; x) <= f(x)` on `Q`; the structured variants additionally satisfy
//! `f(x) <= l_f(y; x) + L(y)/2 ‖x - y‖² + δ(y)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{CompositeTerm, DualVector, FeasibleSet, Norm, Point, ProxSetup};

/// One answer of the first-order oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReply {
    /// `f̄(y)`; for the composite variant this is `f₀(y)` only.
    pub value: f64,
    /// `ḡ(y)`.
    pub slope: DualVector,
    /// `L(y)`; absent for the purely non-smooth variants.
    pub lipschitz: Option<f64>,
    /// `δ(y) >= 0`.
    pub delta: f64,
    /// Whether `l_f` carries the composite term `Ψ`.
    pub has_composite: bool,
}

/// `l_f(y; x)` from a reply, adding `Ψ(x)` when the reply is flagged composite.
pub fn lower_model_value(reply: &OracleReply, y: &Point, x: &Point, psi: &CompositeTerm) -> f64 {
    let affine = reply.value + reply.slope.0.dot(&(&x.0 - &y.0));
    if reply.has_composite {
        affine + psi.value(x)
    } else {
        affine
    }
}

/// Controlled inexactness on top of a smooth objective.
///
/// The oracle value at `y` is shifted down by `u·δ` with `u ∈ [0, 1]`
/// derived deterministically from `(seed, y)`; the slope is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inexactness {
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `f(x) = maxᵢ (<aᵢ, x> + bᵢ)` with rows `aᵢ`.
    MaxAffine { rows: DMatrix<f64>, offsets: DVector<f64> },
    /// `f(x) = ‖Ax - b‖₁`.
    L1Regression { a: DMatrix<f64>, b: DVector<f64> },
    /// `f(x) = ½ xᵀAx - <b, x>` with `A` symmetric positive semidefinite.
    Quadratic { a: DMatrix<f64>, b: DVector<f64> },
    /// `f(x) = ½‖Ax - b‖² + weight·‖x‖₁`.
    CompositeLasso { a: DMatrix<f64>, b: DVector<f64>, weight: f64 },
}

/// Reference information about an optimal solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimumInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    /// An upper bound `D >= d(x*)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_star_upper: Option<f64>,
}

impl OptimumInfo {
    /// `d(x*)` when `x*` is known, otherwise the declared upper bound.
    pub fn d_star(&self, setup: &ProxSetup) -> Option<f64> {
        match &self.x_star {
            Some(x) => setup.d_value(x).ok(),
            None => self.d_star_upper,
        }
    }
}

/// An optimization problem together with its oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    objective: Objective,
    lipschitz: Option<f64>,
    inexact: Option<Inexactness>,
    planted: Option<Point>,
    id: String,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidProblem(format!("{what} must be a non-empty rectangular matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem(format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn largest_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym.clone()).eigenvalues.max()
}

impl Problem {
    pub fn new(objective: Objective) -> Result<Self> {
        let (dim, id) = match &objective {
            Objective::MaxAffine { rows, offsets } => {
                if rows.nrows() != offsets.len() {
                    return Err(Error::InvalidProblem("one offset per affine piece is required".into()));
                }
                (rows.ncols(), "max_affine")
            }
            Objective::L1Regression { a, b } => {
                if a.nrows() != b.len() {
                    return Err(Error::InvalidProblem("A and b row counts differ".into()));
                }
                (a.ncols(), "l1_regression")
            }
            Objective::Quadratic { a, b } => {
                if !a.is_square() || a.nrows() != b.len() {
                    return Err(Error::InvalidProblem("quadratic needs square A matching b".into()));
                }
                let asym = (a - a.transpose()).amax();
                if asym > 1e-12 * (1.0 + a.amax()) {
                    return Err(Error::InvalidProblem("quadratic A must be symmetric".into()));
                }
                // PSD check: a tiny diagonal shift admits singular PSD matrices
                let shift = 1e-12 * (1.0 + a.amax());
                let shifted = a + DMatrix::identity(a.nrows(), a.nrows()) * shift;
                if shifted.cholesky().is_none() {
                    return Err(Error::InvalidProblem("quadratic A is not positive semidefinite".into()));
                }
                (a.ncols(), "quadratic")
            }
            Objective::CompositeLasso { a, b, weight } => {
                if a.nrows() != b.len() {
                    return Err(Error::InvalidProblem("A and b row counts differ".into()));
                }
                CompositeTerm::L1 { weight: *weight }.validate()?;
                (a.ncols(), "composite_lasso")
            }
        };
        let mut problem = Problem { objective, lipschitz: None, inexact: None, planted: None, id: format!("{id}-{dim}") };
        problem.lipschitz = problem.exact_lipschitz(Norm::L2);
        Ok(problem)
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Wraps a smooth variant with an inexact oracle of accuracy `delta`.
    pub fn with_inexactness(mut self, delta: f64, seed: u64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidProblem(format!("inexactness must be nonnegative, got {delta}")));
        }
        if !matches!(self.objective, Objective::Quadratic { .. } | Objective::CompositeLasso { .. }) {
            return Err(Error::InvalidProblem("inexact oracle requires a smooth variant".into()));
        }
        self.inexact = Some(Inexactness { delta, seed });
        Ok(self)
    }

    /// Overrides the declared Lipschitz constant of the gradient.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidProblem(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        if !self.is_structured() {
            return Err(Error::InvalidProblem("non-smooth variants carry no Lipschitz constant".into()));
        }
        self.lipschitz = Some(lipschitz);
        Ok(self)
    }

    /// Declares a known optimal point.
    pub fn with_planted_optimum(mut self, x_star: Point) -> Result<Self> {
        if x_star.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x_star.dim() });
        }
        self.planted = Some(x_star);
        Ok(self)
    }

    pub fn inexactness(&self) -> Option<Inexactness> {
        self.inexact
    }

    pub fn dim(&self) -> usize {
        match &self.objective {
            Objective::MaxAffine { rows, .. } => rows.ncols(),
            Objective::L1Regression { a, .. } | Objective::Quadratic { a, .. } | Objective::CompositeLasso { a, .. } => {
                a.ncols()
            }
        }
    }

    /// Whether the problem belongs to the structured class (known `L`).
    pub fn is_structured(&self) -> bool {
        matches!(self.objective, Objective::Quadratic { .. } | Objective::CompositeLasso { .. })
    }

    /// Whether `l_f` is affine and tangent at `y`, as the subgradient methods require.
    pub fn is_subgradient_compatible(&self) -> bool {
        self.inexact.is_none() && !matches!(self.objective, Objective::CompositeLasso { .. })
    }

    /// The composite term carried by `l_f`.
    pub fn composite(&self) -> CompositeTerm {
        match &self.objective {
            Objective::CompositeLasso { weight, .. } => CompositeTerm::L1 { weight: *weight },
            _ => CompositeTerm::None,
        }
    }

    /// Declared `L` of the smooth part.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Exact Lipschitz constant of the smooth part's gradient with respect to `norm`.
    pub fn exact_lipschitz(&self, norm: Norm) -> Option<f64> {
        let hessian = match &self.objective {
            Objective::Quadratic { a, .. } => a.clone(),
            Objective::CompositeLasso { a, .. } => a.transpose() * a,
            _ => return None,
        };
        let l = match norm {
            Norm::L2 => largest_eigenvalue(&hessian),
            // ‖Hv‖_∞ <= max|Hᵢⱼ| ‖v‖₁, attained at a basis vector
            Norm::L1 => hessian.amax(),
        };
        Some(l.max(f64::MIN_POSITIVE))
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Exact objective `f(x)` of the unperturbed problem (including `Ψ`).
    pub fn true_value(&self, x: &Point) -> f64 {
        match &self.objective {
            Objective::MaxAffine { rows, offsets } => (rows * &x.0 + offsets).max(),
            Objective::L1Regression { a, b } => (a * &x.0 - b).lp_norm(1),
            Objective::Quadratic { a, b } => 0.5 * x.0.dot(&(a * &x.0)) - b.dot(&x.0),
            Objective::CompositeLasso { a, b, weight } => {
                0.5 * (a * &x.0 - b).norm_squared() + weight * x.lp_norm(1)
            }
        }
    }

    /// Oracle query at `y`.
    pub fn query(&self, y: &Point) -> Result<OracleReply> {
        self.check_dim(y)?;
        if !y.is_finite() {
            return Err(Error::Infeasible("query point has non-finite entries".into()));
        }
        let mut reply = match &self.objective {
            Objective::MaxAffine { rows, offsets } => {
                let values = rows * &y.0 + offsets;
                // lowest index among the active pieces
                let mut best = 0;
                for (i, v) in values.iter().enumerate() {
                    if *v > values[best] {
                        best = i;
                    }
                }
                OracleReply {
                    value: values[best],
                    slope: DualVector(rows.row(best).transpose()),
                    lipschitz: None,
                    delta: 0.0,
                    has_composite: false,
                }
            }
            Objective::L1Regression { a, b } => {
                let residual = a * &y.0 - b;
                let signs = residual.map(|r| if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 });
                OracleReply {
                    value: residual.lp_norm(1),
                    slope: DualVector(a.transpose() * signs),
                    lipschitz: None,
                    delta: 0.0,
                    has_composite: false,
                }
            }
            Objective::Quadratic { a, b } => {
                let ay = a * &y.0;
                OracleReply {
                    value: 0.5 * y.0.dot(&ay) - b.dot(&y.0),
                    slope: DualVector(ay - b),
                    lipschitz: self.lipschitz,
                    delta: 0.0,
                    has_composite: false,
                }
            }
            Objective::CompositeLasso { a, b, .. } => {
                let residual = a * &y.0 - b;
                OracleReply {
                    value: 0.5 * residual.norm_squared(),
                    slope: DualVector(a.transpose() * residual),
                    lipschitz: self.lipschitz,
                    delta: 0.0,
                    has_composite: true,
                }
            }
        };
        if let Some(Inexactness { delta, seed }) = self.inexact {
            reply.value -= unit_hash(seed, y) * delta;
            reply.delta = delta;
        }
        Ok(reply)
    }

    /// Oracle query that also checks `y ∈ Q`.
    pub fn query_in(&self, setup: &ProxSetup, y: &Point, tol: f64) -> Result<OracleReply> {
        if !setup.contains(y, tol) {
            return Err(Error::Infeasible(format!(
                "query point violates the constraints by {:e}",
                setup.constraint_residual(y)
            )));
        }
        self.query(y)
    }

    /// Exact optimum where it is available at desk scale; empty otherwise.
    pub fn known_optimum(&self, setup: &ProxSetup) -> OptimumInfo {
        let x_star = self.planted.clone().or_else(|| self.solve_reference(setup));
        match x_star {
            Some(x) => {
                let f = self.true_value(&x);
                OptimumInfo { x_star: Some(x), f_star: Some(f), d_star_upper: None }
            }
            None => OptimumInfo::default(),
        }
    }

    fn solve_reference(&self, setup: &ProxSetup) -> Option<Point> {
        if setup.dim() != self.dim() {
            return None;
        }
        match (&self.objective, setup.set()) {
            (Objective::Quadratic { a, b }, FeasibleSet::Free) => {
                a.clone().cholesky().map(|c| Point(c.solve(b)))
            }
            (Objective::Quadratic { a, b }, FeasibleSet::Box { lower, upper }) => {
                coordinate_descent(a, b, 0.0, Some((lower, upper)))
            }
            (Objective::CompositeLasso { a, b, weight }, FeasibleSet::Free) => {
                coordinate_descent(&(a.transpose() * a), &(a.transpose() * b), *weight, None)
            }
            (Objective::CompositeLasso { a, b, weight }, FeasibleSet::Box { lower, upper }) => {
                coordinate_descent(&(a.transpose() * a), &(a.transpose() * b), *weight, Some((lower, upper)))
            }
            (Objective::MaxAffine { rows, offsets }, FeasibleSet::Simplex) => {
                max_affine_simplex_enumeration(rows, offsets, ENUMERATION_LIMIT)
            }
            _ => None,
        }
    }
}

/// Largest number of candidate vertices the simplex enumeration will visit.
pub const ENUMERATION_LIMIT: u64 = 200_000;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic value in `[0, 1]` derived from `(seed, y)`.
fn unit_hash(seed: u64, y: &Point) -> f64 {
    let h = y.iter().fold(splitmix(seed), |acc, v| splitmix(acc ^ v.to_bits()));
    (h >> 11) as f64 / ((1u64 << 53) - 1) as f64
}

/// Minimizes `½xᵀHx - <c, x> + w‖x‖₁` (optionally over a box) by cyclic
/// coordinate descent until a full sweep moves no coordinate by more than 1e-14.
fn coordinate_descent(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    weight: f64,
    bounds: Option<(&Vec<f64>, &Vec<f64>)>,
) -> Option<Point> {
    let n = c.len();
    if (0..n).any(|j| h[(j, j)].is_nan() || h[(j, j)] <= 0.0) {
        return None;
    }
    let mut x = DVector::zeros(n);
    if let Some((lower, upper)) = bounds {
        for j in 0..n {
            x[j] = 0.0f64.clamp(lower[j], upper[j]);
        }
    }
    let mut hx = h * &x;
    for _sweep in 0..2_000_000 {
        let mut largest = 0.0f64;
        for j in 0..n {
            let hjj = h[(j, j)];
            let partial = c[j] - (hx[j] - hjj * x[j]);
            let mut next = crate::space::soft_threshold(partial, weight) / hjj;
            if let Some((lower, upper)) = bounds {
                next = next.clamp(lower[j], upper[j]);
            }
            let step = next - x[j];
            if step != 0.0 {
                hx.axpy(step, &h.column(j).clone_owned(), 1.0);
                x[j] = next;
            }
            largest = largest.max(step.abs());
        }
        if largest <= 1e-14 * (1.0 + x.amax()) {
            return Some(Point(x));
        }
    }
    None
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exact minimizer of a max-affine function over the simplex by enumerating the
/// vertices of the epigraph LP `min t s.t. <aᵢ, x> + bᵢ <= t, x ∈ Δ`.
///
/// Each vertex has support `J` and active pieces `I` with `|I| = |J|`; there are
/// `C(n + m, n)` candidates. Returns `None` when that exceeds `limit`.
pub fn max_affine_simplex_enumeration(rows: &DMatrix<f64>, offsets: &DVector<f64>, limit: u64) -> Option<Point> {
    let (m, n) = rows.shape();
    if binomial((n + m) as u64, n as u64) > limit {
        return None;
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for q in 1..=m.min(n) {
        let pieces = combinations(m, q);
        for support in combinations(n, q) {
            for active in &pieces {
                // unknowns: x_J (q entries) and t
                let mut system = DMatrix::zeros(q + 1, q + 1);
                let mut rhs = DVector::zeros(q + 1);
                for (r, &i) in active.iter().enumerate() {
                    for (c, &j) in support.iter().enumerate() {
                        system[(r, c)] = rows[(i, j)];
                    }
                    system[(r, q)] = -1.0;
                    rhs[r] = -offsets[i];
                }
                for c in 0..q {
                    system[(q, c)] = 1.0;
                }
                rhs[q] = 1.0;
                let Some(sol) = system.lu().solve(&rhs) else { continue };
                if !sol.iter().all(|v| v.is_finite()) || sol.rows(0, q).iter().any(|v| *v < -1e-12) {
                    continue;
                }
                let mut x = DVector::zeros(n);
                for (c, &j) in support.iter().enumerate() {
                    x[j] = sol[c].max(0.0);
                }
                let total = x.sum();
                x /= total;
                let value = (rows * &x + offsets).max();
                if value > sol[q] + 1e-9 * (1.0 + sol[q].abs()) {
                    continue;
                }
                if best.as_ref().is_none_or(|(v, _)| value < *v) {
                    best = Some((value, x));
                }
            }
        }
    }
    best.map(|(_, x)| Point(x))
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    MaxAffine { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
    L1Regression { a: Vec<Vec<f64>>, b: Vec<f64> },
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64> },
    CompositeLasso { a: Vec<Vec<f64>>, b: Vec<f64>, weight: f64 },
}

/// JSON form of a [`Problem`]; dense matrices are row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inexact: Option<Inexactness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl TryFrom<ProblemSpec> for Problem {
    type Error = Error;

    fn try_from(spec: ProblemSpec) -> Result<Self> {
        let vector = |v: Vec<f64>| DVector::from_vec(v);
        let objective = match spec.objective {
            ObjectiveSpec::MaxAffine { rows, offsets } => {
                Objective::MaxAffine { rows: rows_to_matrix(&rows, "rows")?, offsets: vector(offsets) }
            }
            ObjectiveSpec::L1Regression { a, b } => Objective::L1Regression { a: rows_to_matrix(&a, "A")?, b: vector(b) },
            ObjectiveSpec::Quadratic { a, b } => Objective::Quadratic { a: rows_to_matrix(&a, "A")?, b: vector(b) },
            ObjectiveSpec::CompositeLasso { a, b, weight } => {
                Objective::CompositeLasso { a: rows_to_matrix(&a, "A")?, b: vector(b), weight }
            }
        };
        let mut problem = Problem::new(objective)?;
        if let Some(l) = spec.lipschitz {
            problem = problem.with_lipschitz(l)?;
        }
        if let Some(Inexactness { delta, seed }) = spec.inexact {
            problem = problem.with_inexactness(delta, seed)?;
        }
        if let Some(x) = spec.x_star {
            problem = problem.with_planted_optimum(Point::from(x))?;
        }
        if let Some(id) = spec.id {
            problem.id = id;
        }
        Ok(problem)
    }
}

impl From<&Problem> for ProblemSpec {
    fn from(problem: &Problem) -> Self {
        let vec = |v: &DVector<f64>| v.as_slice().to_vec();
        let objective = match &problem.objective {
            Objective::MaxAffine { rows, offsets } => {
                ObjectiveSpec::MaxAffine { rows: matrix_to_rows(rows), offsets: vec(offsets) }
            }
            Objective::L1Regression { a, b } => ObjectiveSpec::L1Regression { a: matrix_to_rows(a), b: vec(b) },
            Objective::Quadratic { a, b } => ObjectiveSpec::Quadratic { a: matrix_to_rows(a), b: vec(b) },
            Objective::CompositeLasso { a, b, weight } => {
                ObjectiveSpec::CompositeLasso { a: matrix_to_rows(a), b: vec(b), weight: *weight }
            }
        };
        ProblemSpec {
            objective,
            lipschitz: problem.lipschitz,
            inexact: problem.inexact,
            x_star: problem.planted.clone().map(Into::into),
            id: Some(problem.id.clone()),
        }
    }
}

impl Serialize for Problem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ProblemSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Problem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = ProblemSpec::deserialize(deserializer)?;
        Problem::try_from(spec).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// seeded generators

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MaxAffine,
    L1Regression,
    Quadratic,
    CompositeLasso,
}

/// Parameters of a seeded random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub variant: Variant,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of affine pieces (max_affine) or data rows (regression, lasso).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Condition number of the quadratic's Hessian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    /// l1 weight of the lasso.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Oracle inexactness δ for smooth variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl GeneratorSpec {
    pub fn new(variant: Variant, dim: usize, seed: u64) -> Self {
        GeneratorSpec { variant, dim, seed, rows: None, condition: None, weight: None, delta: None }
    }

    pub fn generate(&self) -> Result<Problem> {
        if self.dim == 0 {
            return Err(Error::InvalidProblem("dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let problem = match self.variant {
            Variant::MaxAffine => planted_max_affine(&mut rng, self.dim, self.rows.unwrap_or(10))?,
            Variant::L1Regression => {
                let m = self.rows.unwrap_or(2 * self.dim);
                let a = gaussian_matrix(&mut rng, m, self.dim);
                let b = gaussian_vector(&mut rng, m);
                Problem::new(Objective::L1Regression { a, b })?
            }
            Variant::Quadratic => random_quadratic(&mut rng, self.dim, self.condition.unwrap_or(100.0))?,
            Variant::CompositeLasso => {
                let m = self.rows.unwrap_or(self.dim);
                let a = gaussian_matrix(&mut rng, m, self.dim);
                let truth = DVector::from_fn(self.dim, |i, _| if i % 3 == 0 { 1.0 + i as f64 * 0.1 } else { 0.0 });
                let noise = gaussian_vector(&mut rng, m) * 0.1;
                let b = &a * truth + noise;
                Problem::new(Objective::CompositeLasso { a, b, weight: self.weight.unwrap_or(0.5) })?
            }
        };
        let mut problem = problem.with_id(format!("{}-n{}-s{}", variant_name(self.variant), self.dim, self.seed));
        if let Some(delta) = self.delta {
            problem = problem.with_inexactness(delta, self.seed)?;
        }
        Ok(problem)
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::MaxAffine => "max_affine",
        Variant::L1Regression => "l1_regression",
        Variant::Quadratic => "quadratic",
        Variant::CompositeLasso => "composite_lasso",
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Max-affine function over the simplex with a planted interior minimizer.
///
/// Multipliers `μ ∈ Δ_m` are drawn first and the last row is solved so that
/// `Σ μᵢ aᵢ = c·𝟙`; offsets make every piece active at `x*`. Then for every
/// simplex point `f(x) >= Σ μᵢ(<aᵢ,x> + bᵢ) = f(x*)`, so `x*` is optimal.
fn planted_max_affine(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<Problem> {
    if m < 2 {
        return Err(Error::InvalidProblem("max_affine needs at least two pieces".into()));
    }
    let mut x_star = DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>());
    x_star /= x_star.sum();
    let mut mu = DVector::from_fn(m, |_, _| 0.5 + rng.random::<f64>());
    mu /= mu.sum();
    let level: f64 = rng.sample(StandardNormal);
    let shift: f64 = rng.sample(StandardNormal);
    let mut rows = gaussian_matrix(rng, m, n);
    let partial = (0..m - 1).fold(DVector::zeros(n), |acc, i| acc + rows.row(i).transpose() * mu[i]);
    let last = (DVector::from_element(n, shift) - partial) / mu[m - 1];
    rows.set_row(m - 1, &last.transpose());
    let offsets = DVector::from_fn(m, |i, _| level - rows.row(i).dot(&x_star.transpose()));
    Problem::new(Objective::MaxAffine { rows, offsets })?.with_planted_optimum(Point(x_star))
}

/// Random quadratic `A = U diag(λ) Uᵀ` with eigenvalues log-spaced in `[1, condition]`.
fn random_quadratic(rng: &mut ChaCha8Rng, n: usize, condition: f64) -> Result<Problem> {
    if !(condition.is_finite() && condition >= 1.0) {
        return Err(Error::InvalidProblem(format!("condition number must be >= 1, got {condition}")));
    }
    let basis = gaussian_matrix(rng, n, n).qr().q();
    let eigen = DVector::from_fn(n, |i, _| {
        if n == 1 {
            condition
        } else {
            condition.powf(i as f64 / (n - 1) as f64)
        }
    });
    let a = &basis * DMatrix::from_diagonal(&eigen) * basis.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let b = gaussian_vector(rng, n);
    Problem::new(Objective::Quadratic { a, b })
}
