//! Direct transcriptions of classical methods, written without the
//! auxiliary-function machinery. They serve as cross-checks for the drivers.

use nalgebra::DVector;

use crate::error::Result;
use crate::oracle::Problem;
use crate::space::Point;

/// Test points, subproblem solutions and outputs of a reference run.
#[derive(Debug, Clone, Default)]
pub struct ReferencePath {
    pub x: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
}

fn slope(problem: &Problem, x: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(problem.query(&Point(x.clone()))?.slope.0)
}

/// Box bounds for [`projected_subgradient`]; `None` means free space.
pub type Bounds<'a> = Option<(&'a [f64], &'a [f64])>;

/// `x_{k+1} = P(x_k − λ_k g(x_k))` with `P` the clip onto the box.
pub fn projected_subgradient(
    problem: &Problem,
    bounds: Bounds<'_>,
    x0: &DVector<f64>,
    lambda: impl Fn(usize) -> f64,
    iters: usize,
) -> Result<Vec<DVector<f64>>> {
    let mut x = x0.clone();
    let mut path = Vec::with_capacity(iters);
    for k in 0..iters {
        path.push(x.clone());
        let g = slope(problem, &x)?;
        let mut next = &x - g * lambda(k);
        if let Some((lo, hi)) = bounds {
            for i in 0..next.len() {
                next[i] = next[i].max(lo[i]).min(hi[i]);
            }
        }
        x = next;
    }
    Ok(path)
}

/// `x_{k+1} = x_k − ∇f(x_k)/L`.
pub fn gradient_descent(problem: &Problem, x0: &DVector<f64>, lipschitz: f64, iters: usize) -> Result<Vec<DVector<f64>>> {
    let mut x = x0.clone();
    let mut path = Vec::with_capacity(iters);
    for _ in 0..iters {
        path.push(x.clone());
        let g = slope(problem, &x)?;
        x -= g / lipschitz;
    }
    Ok(path)
}

/// Solution map of the dual-averaging subproblem `argmin <s, x> + β d(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMap {
    /// `d = ½‖x − x0‖²` on free space: `x0 − s/β`.
    EuclideanFree,
    /// `d` = entropy on the simplex: `softmax(−s/β)`.
    EntropySimplex,
}

impl DualMap {
    fn apply(&self, x0: &DVector<f64>, s: &DVector<f64>, beta: f64) -> DVector<f64> {
        match self {
            DualMap::EuclideanFree => x0 - s / beta,
            DualMap::EntropySimplex => {
                let m = s.iter().fold(f64::INFINITY, |a, b| a.min(*b));
                let w = s.map(|v| (-(v - m) / beta).exp());
                let total = w.sum();
                w / total
            }
        }
    }
}

/// Double averaging: `z_k = argmin Σ_{i≤k} λᵢ<gᵢ, x> + β_k d(x)`,
/// `x_{k+1} = (1 − τ_k) x_k + τ_k z_k` with `τ_k = λ_{k+1}/S_{k+1}`.
pub fn double_averaging(
    problem: &Problem,
    map: DualMap,
    x0: &DVector<f64>,
    lambda: impl Fn(usize) -> f64,
    beta: impl Fn(usize) -> f64,
    iters: usize,
) -> Result<ReferencePath> {
    let mut path = ReferencePath::default();
    let mut x = x0.clone();
    let mut s = DVector::zeros(x0.len());
    let mut total = 0.0;
    for k in 0..iters {
        path.x.push(x.clone());
        path.xhat.push(x.clone());
        let lk = lambda(k);
        total += lk;
        s += slope(problem, &x)? * lk;
        let z = map.apply(x0, &s, beta(k));
        let next_lambda = lambda(k + 1);
        let tau = next_lambda / (total + next_lambda);
        x = &x * (1.0 - tau) + &z * tau;
        path.z.push(z);
    }
    Ok(path)
}

fn tseng_weights(iters: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    while w.len() < iters + 1 {
        let last: f64 = *w.last().unwrap();
        w.push((1.0 + (1.0 + 4.0 * last * last).sqrt()) / 2.0);
    }
    w
}

/// Tseng's second APG method on free space with `d = ½‖x − x0‖²`.
pub fn tseng_second(problem: &Problem, x0: &DVector<f64>, lipschitz: f64, iters: usize) -> Result<ReferencePath> {
    tseng(problem, x0, lipschitz, iters, false)
}

/// Tseng's third APG method on free space with `d = ½‖x − x0‖²`.
pub fn tseng_third(problem: &Problem, x0: &DVector<f64>, lipschitz: f64, iters: usize) -> Result<ReferencePath> {
    tseng(problem, x0, lipschitz, iters, true)
}

fn tseng(problem: &Problem, x0: &DVector<f64>, lipschitz: f64, iters: usize, dual: bool) -> Result<ReferencePath> {
    let lambda = tseng_weights(iters);
    let mut path = ReferencePath::default();
    let g0 = slope(problem, x0)?;
    let mut z = x0 - &g0 * (lambda[0] / lipschitz);
    let mut aggregate = g0 * lambda[0];
    let mut xhat = z.clone();
    let mut total = lambda[0];
    path.x.push(x0.clone());
    path.z.push(z.clone());
    path.xhat.push(xhat.clone());
    for k in 0..iters.saturating_sub(1) {
        total += lambda[k + 1];
        let tau = lambda[k + 1] / total;
        let x = &xhat * (1.0 - tau) + &z * tau;
        let g = slope(problem, &x)?;
        if dual {
            aggregate += &g * lambda[k + 1];
            z = x0 - &aggregate / lipschitz;
        } else {
            z -= g * (lambda[k + 1] / lipschitz);
        }
        xhat = &xhat * (1.0 - tau) + &z * tau;
        path.x.push(x);
        path.z.push(z.clone());
        path.xhat.push(xhat.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Objective;
    use nalgebra::DMatrix;

    #[test]
    fn tseng_weights_square_identity() {
        let w = tseng_weights(50);
        let mut s = 0.0;
        for l in &w {
            s += l;
            assert!((s - l * l).abs() < 1e-9 * s);
        }
    }

    #[test]
    fn one_dimensional_gradient_descent() {
        // f(x) = x² - 2x, minimized at 1
        let problem = Problem::new(Objective::Quadratic {
            a: DMatrix::from_element(1, 1, 2.0),
            b: DVector::from_element(1, 2.0),
        })
        .unwrap();
        let path = gradient_descent(&problem, &DVector::zeros(1), 2.0, 2).unwrap();
        assert_eq!(path[1][0], 1.0);
    }

    #[test]
    fn entropy_map_is_distribution() {
        let z = DualMap::EntropySimplex.apply(&DVector::from_element(3, 1.0 / 3.0), &DVector::from_vec(vec![1.0, 2.0, 3.0]), 0.5);
        assert!((z.sum() - 1.0).abs() < 1e-15);
        assert!(z[0] > z[1] && z[1] > z[2]);
    }
}
