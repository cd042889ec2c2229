//! Auxiliary functions `ψ_k` built by extended mirror-descent and dual-averaging updates.
//!
//! Both updates keep `ψ_k` in the closed form
//! `constant + <linear, x> + psi_weight·Ψ(x) + beta·d(x)`, so every
//! minimization is a single call to [`ProxSetup::prox_argmin`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{lower_model_value, OracleReply};
use crate::space::{CompositeTerm, DualVector, Point, ProxSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    /// Extended mirror-descent model: keeps only the newest linearization.
    Md,
    /// Dual-averaging model: accumulates all linearizations.
    Da,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxState {
    pub constant: f64,
    pub linear: DualVector,
    pub psi_weight: f64,
    pub beta: f64,
    pub minimizer: Point,
    pub min_value: f64,
    pub step_index: i64,
}

impl AuxState {
    /// `ψ₋₁ = β₋₁·d`, minimized at the prox-center with value zero.
    pub fn init(setup: &ProxSetup, beta_init: f64) -> Result<Self> {
        if !(beta_init.is_finite() && beta_init > 0.0) {
            return Err(Error::NonPositiveBeta(beta_init));
        }
        Ok(AuxState {
            constant: 0.0,
            linear: DualVector::zeros(setup.dim()),
            psi_weight: 0.0,
            beta: beta_init,
            minimizer: setup.x0().clone(),
            min_value: 0.0,
            step_index: -1,
        })
    }

    /// `ψ_k(x)` from the canonical fields.
    pub fn evaluate(&self, setup: &ProxSetup, psi: &CompositeTerm, x: &Point) -> Result<f64> {
        Ok(self.constant + self.linear.pair(x) + self.psi_weight * psi.value(x) + self.beta * setup.d_value(x)?)
    }

    /// `(z_k, min ψ_k)`.
    pub fn minimize(&self, setup: &ProxSetup, psi: &CompositeTerm) -> Result<(Point, f64)> {
        let z = setup.prox_argmin(&self.linear, self.beta, psi, self.psi_weight)?;
        let value = self.evaluate(setup, psi, &z)?;
        Ok((z, value))
    }

    fn check_step(&self, lambda: f64, beta_next: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::NonPositiveLambda(lambda));
        }
        if !(beta_next.is_finite() && beta_next > 0.0) {
            return Err(Error::NonPositiveBeta(beta_next));
        }
        if beta_next < self.beta {
            return Err(Error::DecreasingBeta { previous: self.beta, next: beta_next });
        }
        Ok(())
    }

    fn finish(mut self, setup: &ProxSetup, psi: &CompositeTerm) -> Result<Self> {
        let (z, value) = self.minimize(setup, psi)?;
        self.minimizer = z;
        self.min_value = value;
        Ok(self)
    }

    /// `ψ_{k+1} = min ψ_k + λ l_f(x_{k+1}; ·) + β_{k+1} d − β_k l_d(z_k; ·)`.
    pub fn update_md(
        &self,
        setup: &ProxSetup,
        psi: &CompositeTerm,
        reply: &OracleReply,
        x_next: &Point,
        lambda: f64,
        beta_next: f64,
    ) -> Result<Self> {
        self.check_step(lambda, beta_next)?;
        let z = &self.minimizer;
        let grad = setup.d_grad(z)?;
        let offset = setup.d_value(z)? - grad.pair(z);
        let next = AuxState {
            constant: self.min_value + lambda * (reply.value - reply.slope.pair(x_next)) - self.beta * offset,
            linear: DualVector(&reply.slope.0 * lambda - &grad.0 * self.beta),
            psi_weight: if reply.has_composite { lambda } else { 0.0 },
            beta: beta_next,
            minimizer: z.clone(),
            min_value: self.min_value,
            step_index: self.step_index + 1,
        };
        next.finish(setup, psi)
    }

    /// `ψ_{k+1} = ψ_k + λ l_f(x_{k+1}; ·) + (β_{k+1} − β_k) d`.
    pub fn update_da(
        &self,
        setup: &ProxSetup,
        psi: &CompositeTerm,
        reply: &OracleReply,
        x_next: &Point,
        lambda: f64,
        beta_next: f64,
    ) -> Result<Self> {
        self.check_step(lambda, beta_next)?;
        let next = AuxState {
            constant: self.constant + lambda * (reply.value - reply.slope.pair(x_next)),
            linear: DualVector(&self.linear.0 + &reply.slope.0 * lambda),
            psi_weight: self.psi_weight + if reply.has_composite { lambda } else { 0.0 },
            beta: beta_next,
            minimizer: self.minimizer.clone(),
            min_value: self.min_value,
            step_index: self.step_index + 1,
        };
        next.finish(setup, psi)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &self,
        choice: ModelChoice,
        setup: &ProxSetup,
        psi: &CompositeTerm,
        reply: &OracleReply,
        x_next: &Point,
        lambda: f64,
        beta_next: f64,
    ) -> Result<Self> {
        match choice {
            ModelChoice::Md => self.update_md(setup, psi, reply, x_next, lambda, beta_next),
            ModelChoice::Da => self.update_da(setup, psi, reply, x_next, lambda, beta_next),
        }
    }
}

/// One step of an update sequence, as consumed by [`check_property`].
#[derive(Debug, Clone)]
pub struct UpdateStep {
    pub reply: OracleReply,
    pub point: Point,
    pub lambda: f64,
    pub choice: ModelChoice,
}

/// Residuals of the three conditions defining admissible auxiliary functions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// `|min ψ₋₁| + ‖z₋₁ − x₀‖`.
    pub initial_residual: f64,
    /// Per step, the smallest sampled value of `ψ_{k+1}(x) − [min ψ_k + λ l_f + β_{k+1}d − β_k l_d(z_k;x)]`.
    pub growth_residuals: Vec<f64>,
    /// Per step, `min_x [Σλᵢ l_f(xᵢ;x) + β_k l_d(z_k;x)] − min ψ_k`.
    pub lower_residuals: Vec<f64>,
    /// Whether the lower residuals come from exact minimization (compact sets) or sampling.
    pub lower_exact: bool,
    pub pass: bool,
}

impl PropertyReport {
    pub fn worst(&self) -> f64 {
        self.growth_residuals
            .iter()
            .chain(&self.lower_residuals)
            .fold(-self.initial_residual, |a, b| a.min(*b))
    }
}

/// Checks the admissibility conditions on `states[0] = ψ₋₁, states[k+1] = ψ_k`.
pub fn check_property<R: Rng + ?Sized>(
    setup: &ProxSetup,
    psi: &CompositeTerm,
    states: &[AuxState],
    steps: &[UpdateStep],
    sample_count: usize,
    tol: f64,
    rng: &mut R,
) -> Result<PropertyReport> {
    if states.len() != steps.len() + 1 {
        return Err(Error::InvalidSetup("need one more state than steps".into()));
    }
    let first = &states[0];
    let initial_residual = first.min_value.abs() + (&first.minimizer.0 - &setup.x0().0).amax();
    let samples: Vec<Point> = (0..sample_count).map(|_| setup.sample(rng, 2.0)).collect();
    let mut report = PropertyReport { initial_residual, lower_exact: setup.set().is_compact(), ..Default::default() };

    // affine aggregate Σλᵢ l_f(xᵢ; x) = agg_const + <agg_linear, x> + agg_psi·Ψ(x)
    let mut agg_const = 0.0;
    let mut agg_linear = DualVector::zeros(setup.dim());
    let mut agg_psi = 0.0;
    for (k, step) in steps.iter().enumerate() {
        let (before, after) = (&states[k], &states[k + 1]);
        let mut worst = f64::INFINITY;
        for x in &samples {
            let model = before.min_value + step.lambda * lower_model_value(&step.reply, &step.point, x, psi)
                + after.beta * setup.d_value(x)?
                - before.beta * setup.l_d(&before.minimizer, x)?;
            worst = worst.min(after.evaluate(setup, psi, x)? - model);
        }
        report.growth_residuals.push(worst);

        agg_const += step.lambda * (step.reply.value - step.reply.slope.pair(&step.point));
        agg_linear.0 += &step.reply.slope.0 * step.lambda;
        if step.reply.has_composite {
            agg_psi += step.lambda;
        }
        let z = &after.minimizer;
        let grad = setup.d_grad(z)?;
        let constant = agg_const + after.beta * (setup.d_value(z)? - grad.pair(z));
        let linear = DualVector(&agg_linear.0 + &grad.0 * after.beta);
        let lower = match setup.min_affine_l1(&linear, agg_psi * psi.l1_weight()) {
            Some(m) => constant + m,
            None => {
                report.lower_exact = false;
                samples
                    .iter()
                    .chain(std::iter::once(z))
                    .map(|x| constant + linear.pair(x) + agg_psi * psi.value(x))
                    .fold(f64::INFINITY, f64::min)
            }
        };
        report.lower_residuals.push(lower - after.min_value);
    }
    report.pass = report.initial_residual <= tol
        && report.growth_residuals.iter().all(|r| *r >= -tol)
        && report.lower_residuals.iter().all(|r| *r >= -tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{GeneratorSpec, Problem, Variant};
    use crate::space::{FeasibleSet, Geometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reply(slope: &[f64], value: f64) -> OracleReply {
        OracleReply { value, slope: DualVector::from_slice(slope), lipschitz: None, delta: 0.0, has_composite: false }
    }

    #[test]
    fn init_examples() {
        let setup = ProxSetup::euclidean_free(3);
        let s = AuxState::init(&setup, 1.0).unwrap();
        assert_eq!(s.min_value, 0.0);
        assert_eq!(&s.minimizer, setup.x0());
        assert_eq!(s.step_index, -1);
        let ent = ProxSetup::entropy_simplex(4);
        let s = AuxState::init(&ent, 2.0).unwrap();
        assert_eq!(s.minimizer, Point::from_slice(&[0.25; 4]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = ent.sample(&mut rng, 1.0);
            assert!((s.evaluate(&ent, &CompositeTerm::None, &x).unwrap() - 2.0 * ent.d_value(&x).unwrap()).abs() < 1e-14);
        }
        assert!(matches!(AuxState::init(&setup, 0.0), Err(Error::NonPositiveBeta(_))));
    }

    #[test]
    fn md_step_from_init_is_subgradient_step() {
        let setup = ProxSetup::euclidean_free(2);
        let s = AuxState::init(&setup, 1.0).unwrap();
        let x = setup.x0().clone();
        let r = reply(&[3.0, -1.0], 2.0);
        let md = s.update_md(&setup, &CompositeTerm::None, &r, &x, 0.5, 1.0).unwrap();
        assert_eq!(md.minimizer, Point::from_slice(&[-1.5, 0.5]));
        let da = s.update_da(&setup, &CompositeTerm::None, &r, &x, 0.5, 1.0).unwrap();
        assert_eq!(da.minimizer, md.minimizer);
        assert!((da.min_value - md.min_value).abs() < 1e-15);
    }

    #[test]
    fn update_preconditions() {
        let setup = ProxSetup::euclidean_free(2);
        let s = AuxState::init(&setup, 2.0).unwrap();
        let x = setup.x0().clone();
        let r = reply(&[1.0, 1.0], 0.0);
        assert!(matches!(s.update_da(&setup, &CompositeTerm::None, &r, &x, 0.0, 2.0), Err(Error::NonPositiveLambda(_))));
        assert!(matches!(s.update_md(&setup, &CompositeTerm::None, &r, &x, 1.0, 1.0), Err(Error::DecreasingBeta { .. })));
    }

    #[test]
    fn one_da_step_closed_form() {
        let setup = ProxSetup::new(2, FeasibleSet::Free, Geometry::Euclidean, Some(Point::from_slice(&[1.0, 2.0]))).unwrap();
        let s = AuxState::init(&setup, 1.0).unwrap();
        let r = reply(&[2.0, 4.0], 1.0);
        let next = s.update_da(&setup, &CompositeTerm::None, &r, &Point::from_slice(&[0.0, 0.0]), 1.0, 4.0).unwrap();
        assert_eq!(next.minimizer, Point::from_slice(&[0.5, 1.0]));
    }

    #[test]
    fn entropy_minimizer_is_softmax() {
        let setup = ProxSetup::entropy_simplex(3);
        let s = AuxState::init(&setup, 1.0).unwrap();
        let x = setup.x0().clone();
        let next = s.update_da(&setup, &CompositeTerm::None, &reply(&[1.0, 0.0, -1.0], 0.0), &x, 1.0, 2.0).unwrap();
        let w: Vec<f64> = [-0.5f64, 0.0, 0.5].iter().map(|v| v.exp()).collect();
        let total: f64 = w.iter().sum();
        for (z, w) in next.minimizer.iter().zip(&w) {
            assert!((z - w / total).abs() < 1e-15);
        }
    }

    /// Runs a seeded sequence of updates at the current minimizers.
    fn sequence(problem: &Problem, setup: &ProxSetup, word: &[ModelChoice]) -> (Vec<AuxState>, Vec<UpdateStep>) {
        let psi = problem.composite();
        let mut states = vec![AuxState::init(setup, 1.0).unwrap()];
        let mut steps = Vec::new();
        for (k, choice) in word.iter().enumerate() {
            let current = states.last().unwrap();
            let point = current.minimizer.clone();
            let reply = problem.query(&point).unwrap();
            let lambda = 0.3 + 0.1 * (k % 4) as f64;
            let beta = 1.0 + 0.5 * k as f64;
            states.push(current.update(*choice, setup, &psi, &reply, &point, lambda, beta).unwrap());
            steps.push(UpdateStep { reply, point, lambda, choice: *choice });
        }
        (states, steps)
    }

    #[test]
    fn pure_da_matches_unrolled_sum() {
        let problem = GeneratorSpec::new(Variant::Quadratic, 4, 1).generate().unwrap();
        let setup = ProxSetup::euclidean_free(4);
        let (states, steps) = sequence(&problem, &setup, &[ModelChoice::Da; 10]);
        let last = states.last().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let x = setup.sample(&mut rng, 2.0);
            let unrolled: f64 = steps
                .iter()
                .map(|s| s.lambda * lower_model_value(&s.reply, &s.point, &x, &CompositeTerm::None))
                .sum::<f64>()
                + last.beta * setup.d_value(&x).unwrap();
            let direct = last.evaluate(&setup, &CompositeTerm::None, &x).unwrap();
            assert!((unrolled - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn md_representation_on_samples() {
        let problem = GeneratorSpec::new(Variant::Quadratic, 3, 2).generate().unwrap();
        let setup = ProxSetup::euclidean_free(3);
        let (states, steps) = sequence(&problem, &setup, &[ModelChoice::Md; 6]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 0..steps.len() {
            let (before, after, step) = (&states[k], &states[k + 1], &steps[k]);
            for _ in 0..100 {
                let x = setup.sample(&mut rng, 2.0);
                let formula = before.min_value
                    + step.lambda * lower_model_value(&step.reply, &step.point, &x, &CompositeTerm::None)
                    + after.beta * setup.d_value(&x).unwrap()
                    - before.beta * setup.l_d(&before.minimizer, &x).unwrap();
                let direct = after.evaluate(&setup, &CompositeTerm::None, &x).unwrap();
                assert!((formula - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn md_with_constant_beta_is_bregman_step() {
        let problem = GeneratorSpec::new(Variant::L1Regression, 3, 5).generate().unwrap();
        let setup = ProxSetup::euclidean_free(3);
        let psi = CompositeTerm::None;
        let mut state = AuxState::init(&setup, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let point = state.minimizer.clone();
            let reply = problem.query(&point).unwrap();
            let next = state.update_md(&setup, &psi, &reply, &point, 0.2, 1.0).unwrap();
            for _ in 0..50 {
                let x = setup.sample(&mut rng, 1.0);
                let lhs = next.evaluate(&setup, &psi, &x).unwrap() - state.min_value;
                let rhs = 0.2 * lower_model_value(&reply, &point, &x, &psi) + setup.bregman(&point, &x).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            }
            state = next;
        }
    }

    #[test]
    fn growth_from_strong_convexity() {
        let problem = GeneratorSpec::new(Variant::MaxAffine, 5, 3).generate().unwrap();
        let setup = ProxSetup::entropy_simplex(5);
        let word = [ModelChoice::Md, ModelChoice::Da, ModelChoice::Da, ModelChoice::Md, ModelChoice::Md];
        let (states, _) = sequence(&problem, &setup, &word);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for state in &states {
            for _ in 0..100 {
                let x = setup.sample(&mut rng, 1.0);
                let value = state.evaluate(&setup, &CompositeTerm::None, &x).unwrap();
                let floor = state.min_value + state.beta * setup.bregman(&state.minimizer, &x).unwrap();
                assert!(value >= floor - 1e-9);
            }
        }
    }

    #[test]
    fn property_holds_for_pure_and_mixed_runs() {
        let spec = GeneratorSpec { condition: Some(2.0), ..GeneratorSpec::new(Variant::Quadratic, 4, 6) };
        let problem = spec.generate().unwrap();
        let setup = ProxSetup::euclidean_free(4);
        let alternating: Vec<_> = (0..10).map(|k| if k % 2 == 0 { ModelChoice::Md } else { ModelChoice::Da }).collect();
        for word in [vec![ModelChoice::Da; 10], vec![ModelChoice::Md; 10], alternating] {
            let (states, steps) = sequence(&problem, &setup, &word);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let report = check_property(&setup, &CompositeTerm::None, &states, &steps, 200, 1e-9, &mut rng).unwrap();
            assert!(report.pass, "{report:?}");
            assert!(!report.lower_exact);
        }
    }

    #[test]
    fn property_exact_on_box_with_l1() {
        let mut spec = GeneratorSpec::new(Variant::CompositeLasso, 4, 3);
        spec.rows = Some(6);
        let problem = spec.generate().unwrap();
        let setup = ProxSetup::new(
            4,
            FeasibleSet::Box { lower: vec![-1.0; 4], upper: vec![2.0; 4] },
            Geometry::Euclidean,
            None,
        )
        .unwrap();
        let word = [ModelChoice::Md, ModelChoice::Da, ModelChoice::Da, ModelChoice::Md, ModelChoice::Da];
        let (states, steps) = sequence(&problem, &setup, &word);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let report = check_property(&setup, &problem.composite(), &states, &steps, 200, 1e-9, &mut rng).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.lower_exact);
        // MD updates meet the growth condition with equality
        for (step, r) in steps.iter().zip(&report.growth_residuals) {
            if step.choice == ModelChoice::Md {
                assert!(r.abs() <= 1e-9, "{r}");
            }
        }
    }

    #[test]
    fn state_json_round_trip() {
        let setup = ProxSetup::entropy_simplex(3);
        let s = AuxState::init(&setup, 1.5).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AuxState>(&json).unwrap(), s);
    }
}
