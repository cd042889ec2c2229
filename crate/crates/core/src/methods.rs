//! Method drivers: the two general subgradient methods, the classical gradient
//! method (CGM) and the fast gradient method (FGM), plus named presets.

use serde::{Deserialize, Serialize};

use crate::auxfunc::{AuxState, ModelChoice};
use crate::error::{Error, Result};
use crate::oracle::{OracleReply, Problem};
use crate::schedule::{LambdaRule, MixPolicy, Schedule};
use crate::space::{CompositeTerm, DualVector, Point, ProxSetup, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// Test point `x_k = z_{k−1}`; output the weighted average of test points.
    SubgradA,
    /// Test point and output are the weighted average of past minimizers.
    SubgradB,
    Cgm,
    Fgm,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::SubgradA => "subgrad_a",
            MethodKind::SubgradB => "subgrad_b",
            MethodKind::Cgm => "cgm",
            MethodKind::Fgm => "fgm",
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, MethodKind::Cgm | MethodKind::Fgm)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TerminationRule {
    /// Stop once `f(x̂_k) − f*` drops below this (needs a known optimum).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tolerance: Option<f64>,
    /// Stop at a zero subgradient (always on for weighted averages).
    #[serde(default)]
    pub stop_on_zero_subgradient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub method: MethodKind,
    pub schedule: Schedule,
    #[serde(default)]
    pub mix: MixPolicy,
    pub max_iters: usize,
    #[serde(default)]
    pub termination: TerminationRule,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(method: MethodKind, schedule: Schedule, mix: MixPolicy, max_iters: usize) -> Self {
        RunConfig { preset: None, method, schedule, mix, max_iters, termination: TerminationRule::default(), seed: 0 }
    }

    /// A preset's method, mix and default schedule.
    pub fn from_preset(name: &str, max_iters: usize) -> Result<Self> {
        let p = preset(name)?;
        Ok(RunConfig { preset: Some(name.to_string()), ..RunConfig::new(p.method, p.schedule, p.mix, max_iters) })
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn label(&self) -> String {
        self.preset.clone().unwrap_or_else(|| self.method.name().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    /// A zero subgradient was observed at `x_k`; no record exists for `k`.
    OptimalPoint { k: usize },
    GapReached { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Test point, where the oracle was queried.
    pub x: Point,
    /// Minimizer of `ψ_k`.
    pub z: Point,
    /// Approximate solution.
    pub xhat: Point,
    pub lambda: f64,
    pub beta: f64,
    /// `β_{k−1}`.
    pub beta_prev: f64,
    /// `S_k = Σ_{i≤k} λᵢ`.
    pub s: f64,
    /// Oracle reply at `x`.
    pub value: f64,
    pub slope: DualVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub delta: f64,
    pub grad_dual_norm: f64,
    /// Exact objective values.
    pub f_x: f64,
    pub f_z: f64,
    pub f_xhat: f64,
    pub min_psi: f64,
    pub c_k: f64,
    pub model: ModelChoice,
}

impl IterationRecord {
    pub fn reply(&self, has_composite: bool) -> OracleReply {
        OracleReply {
            value: self.value,
            slope: self.slope.clone(),
            lipschitz: self.lipschitz,
            delta: self.delta,
            has_composite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Configuration with the schedule's Lipschitz constant resolved.
    pub config: RunConfig,
    pub problem_id: String,
    pub setup_id: String,
    /// `β₋₁`.
    pub initial_beta: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl RunTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// A named combination of method, mixing policy and default schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub method: MethodKind,
    pub mix: MixPolicy,
    pub schedule: Schedule,
}

pub const PRESET_NAMES: &[&str] = &[
    "extended_mdm",
    "dam",
    "double_averaging",
    "mdm_classic",
    "primal_gradient",
    "dual_gradient",
    "fgm_md",
    "fgm_da",
    "tseng2",
    "tseng3",
];

pub fn preset(name: &str) -> Result<Preset> {
    use MethodKind::*;
    let simple = Schedule::SimpleAverages { gamma: 1.0 };
    let (method, mix, schedule) = match name {
        "extended_mdm" => (SubgradA, MixPolicy::PureMd, simple),
        "dam" => (SubgradA, MixPolicy::PureDa, simple),
        "double_averaging" => (SubgradB, MixPolicy::PureDa, simple),
        "mdm_classic" => (
            SubgradA,
            MixPolicy::PureMd,
            Schedule::MdmClassic { rule: LambdaRule::InverseSqrt { scale: 1.0 } },
        ),
        "primal_gradient" => (Cgm, MixPolicy::PureMd, Schedule::ClassicSmooth { lipschitz: None }),
        "dual_gradient" => (Cgm, MixPolicy::PureDa, Schedule::ClassicSmooth { lipschitz: None }),
        "fgm_md" => (Fgm, MixPolicy::PureMd, Schedule::FastSmooth { lipschitz: None }),
        "fgm_da" => (Fgm, MixPolicy::PureDa, Schedule::FastSmooth { lipschitz: None }),
        "tseng2" => (Fgm, MixPolicy::PureMd, Schedule::TsengLambda { lipschitz: None }),
        "tseng3" => (Fgm, MixPolicy::PureDa, Schedule::TsengLambda { lipschitz: None }),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(Preset { method, mix, schedule })
}

/// Shared inputs of one run.
struct Driver<'a> {
    problem: &'a Problem,
    setup: &'a ProxSetup,
    psi: CompositeTerm,
    schedule: Schedule,
    config: &'a RunConfig,
    sigma: f64,
    f_star: Option<f64>,
    feasibility: f64,
}

/// Slack on the step-condition comparison, relative to `L`.
const STEP_SLACK: f64 = 1e-10;

impl<'a> Driver<'a> {
    fn new(problem: &'a Problem, setup: &'a ProxSetup, config: &'a RunConfig) -> Result<Self> {
        if config.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if setup.dim() != problem.dim() {
            return Err(Error::DimensionMismatch { expected: setup.dim(), got: problem.dim() });
        }
        config.mix.validate()?;
        match config.method {
            MethodKind::SubgradA | MethodKind::SubgradB if !problem.is_subgradient_compatible() => {
                return Err(Error::MethodMismatch(format!(
                    "{} needs exact subgradients without a composite term",
                    config.method.name()
                )));
            }
            MethodKind::Cgm | MethodKind::Fgm if !problem.is_structured() => {
                return Err(Error::MethodMismatch(format!(
                    "{} needs a problem with a Lipschitz gradient",
                    config.method.name()
                )));
            }
            _ => {}
        }
        let schedule = if config.method.is_smooth() {
            config.schedule.resolve(problem.lipschitz())?
        } else {
            config.schedule.validate()?;
            config.schedule.clone()
        };
        if let Some(h) = schedule.horizon() {
            if h < config.max_iters {
                return Err(Error::InvalidSchedule(format!(
                    "schedule provides {h} steps, {} requested",
                    config.max_iters
                )));
            }
        }
        if matches!(config.method, MethodKind::SubgradB | MethodKind::Fgm) && schedule.needs_gradient_norm() {
            return Err(Error::MethodMismatch(format!(
                "{}: weighted averages need g at the test point before the test point exists",
                config.method.name()
            )));
        }
        let f_star = match config.termination.gap_tolerance {
            Some(_) => problem.known_optimum(setup).f_star,
            None => None,
        };
        Ok(Driver {
            problem,
            setup,
            psi: problem.composite(),
            schedule,
            config,
            sigma: setup.sigma(),
            f_star,
            feasibility: Tolerances::default().feasibility,
        })
    }

    fn query(&self, x: &Point) -> Result<(OracleReply, f64)> {
        let reply = self.problem.query_in(self.setup, x, self.feasibility)?;
        let norm = self.setup.dual_norm(&reply.slope)?;
        Ok((reply, norm))
    }

    /// `(λ_k, β_k)`, translating a zero weighted-averages subgradient into termination.
    fn params(&self, k: usize, norm: Option<f64>) -> Result<Option<(f64, f64)>> {
        if norm == Some(0.0) && (self.config.termination.stop_on_zero_subgradient || self.schedule.needs_gradient_norm()) {
            return Ok(None);
        }
        match self.schedule.next_params(k, norm, self.sigma) {
            Ok(p) => Ok(Some(p)),
            Err(Error::OptimalPointDetected { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn step_condition(&self, k: usize, lhs: f64, reply: &OracleReply) -> Result<()> {
        let lipschitz = reply
            .lipschitz
            .ok_or_else(|| Error::MethodMismatch("oracle reply carries no Lipschitz constant".into()))?;
        if lhs < lipschitz * (1.0 - STEP_SLACK) {
            return Err(Error::StepCondition { k, lhs, lipschitz });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        k: usize,
        x: Point,
        state: &AuxState,
        xhat: Point,
        (lambda, beta, beta_prev, s): (f64, f64, f64, f64),
        reply: OracleReply,
        grad_dual_norm: f64,
        c_k: f64,
        model: ModelChoice,
    ) -> IterationRecord {
        IterationRecord {
            k,
            f_x: self.problem.true_value(&x),
            f_z: self.problem.true_value(&state.minimizer),
            f_xhat: self.problem.true_value(&xhat),
            x,
            z: state.minimizer.clone(),
            xhat,
            lambda,
            beta,
            beta_prev,
            s,
            value: reply.value,
            slope: reply.slope,
            lipschitz: reply.lipschitz,
            delta: reply.delta,
            grad_dual_norm,
            min_psi: state.min_value,
            c_k,
            model,
        }
    }

    fn gap_reached(&self, record: &IterationRecord) -> bool {
        match (self.config.termination.gap_tolerance, self.f_star) {
            (Some(tol), Some(f_star)) => record.f_xhat - f_star <= tol,
            _ => false,
        }
    }

    fn trace(&self, initial_beta: f64, records: Vec<IterationRecord>, termination: Termination) -> RunTrace {
        let config = RunConfig { schedule: self.schedule.clone(), ..self.config.clone() };
        RunTrace {
            config,
            problem_id: self.problem.id().to_string(),
            setup_id: self.setup.id(),
            initial_beta,
            records,
            termination,
        }
    }
}

/// `a + t(b − a)`, the convex combination used by all running averages.
fn toward(a: &Point, b: &Point, t: f64) -> Point {
    Point(&a.0 + (&b.0 - &a.0) * t)
}

pub fn run(problem: &Problem, setup: &ProxSetup, config: &RunConfig) -> Result<RunTrace> {
    match config.method {
        MethodKind::SubgradA => run_subgradient_a(problem, setup, config),
        MethodKind::SubgradB => run_subgradient_b(problem, setup, config),
        MethodKind::Cgm => run_cgm(problem, setup, config),
        MethodKind::Fgm => run_fgm(problem, setup, config),
    }
}

pub fn run_subgradient_a(problem: &Problem, setup: &ProxSetup, config: &RunConfig) -> Result<RunTrace> {
    let driver = Driver::new(problem, setup, config)?;
    let sigma = driver.sigma;
    let initial_beta = driver.schedule.initial_beta(sigma)?;
    let mut state = AuxState::init(setup, initial_beta)?;
    let mut records = Vec::with_capacity(config.max_iters);
    let (mut s, mut c, mut beta_prev) = (0.0, 0.0, initial_beta);
    let mut xhat = setup.x0().clone();
    for k in 0..config.max_iters {
        let x = state.minimizer.clone();
        let (reply, norm) = driver.query(&x)?;
        let Some((lambda, beta)) = driver.params(k, Some(norm))? else {
            return Ok(driver.trace(initial_beta, records, Termination::OptimalPoint { k }));
        };
        s += lambda;
        xhat = toward(&xhat, &x, lambda / s);
        c += lambda * lambda * norm * norm / (2.0 * sigma * beta_prev);
        let model = config.mix.model_choice(k);
        state = state.update(model, setup, &driver.psi, &reply, &x, lambda, beta)?;
        let record = driver.record(k, x, &state, xhat.clone(), (lambda, beta, beta_prev, s), reply, norm, c, model);
        let done = driver.gap_reached(&record);
        records.push(record);
        if done {
            return Ok(driver.trace(initial_beta, records, Termination::GapReached { k }));
        }
        beta_prev = beta;
    }
    Ok(driver.trace(initial_beta, records, Termination::MaxIters))
}

pub fn run_subgradient_b(problem: &Problem, setup: &ProxSetup, config: &RunConfig) -> Result<RunTrace> {
    let driver = Driver::new(problem, setup, config)?;
    let sigma = driver.sigma;
    let initial_beta = driver.schedule.initial_beta(sigma)?;
    let mut state = AuxState::init(setup, initial_beta)?;
    let mut records = Vec::with_capacity(config.max_iters);
    let (mut s, mut c, mut beta_prev) = (0.0, 0.0, initial_beta);
    let mut x = setup.x0().clone();
    for k in 0..config.max_iters {
        let Some((lambda, beta)) = driver.params(k, None)? else { unreachable!("weighted averages are rejected") };
        s += lambda;
        x = toward(&x, &state.minimizer, lambda / s);
        let (reply, norm) = driver.query(&x)?;
        if norm == 0.0 && config.termination.stop_on_zero_subgradient {
            return Ok(driver.trace(initial_beta, records, Termination::OptimalPoint { k }));
        }
        c += lambda * lambda * norm * norm / (2.0 * sigma * beta_prev);
        let model = config.mix.model_choice(k);
        state = state.update(model, setup, &driver.psi, &reply, &x, lambda, beta)?;
        let record = driver.record(k, x.clone(), &state, x.clone(), (lambda, beta, beta_prev, s), reply, norm, c, model);
        let done = driver.gap_reached(&record);
        records.push(record);
        if done {
            return Ok(driver.trace(initial_beta, records, Termination::GapReached { k }));
        }
        beta_prev = beta;
    }
    Ok(driver.trace(initial_beta, records, Termination::MaxIters))
}

pub fn run_cgm(problem: &Problem, setup: &ProxSetup, config: &RunConfig) -> Result<RunTrace> {
    let driver = Driver::new(problem, setup, config)?;
    let sigma = driver.sigma;
    let initial_beta = driver.schedule.initial_beta(sigma)?;
    let mut state = AuxState::init(setup, initial_beta)?;
    let mut records = Vec::with_capacity(config.max_iters);
    let (mut s, mut c, mut beta_prev) = (0.0, 0.0, initial_beta);
    let mut xhat = setup.x0().clone();
    for k in 0..config.max_iters {
        let x = state.minimizer.clone();
        let (reply, norm) = driver.query(&x)?;
        let Some((lambda, beta)) = driver.params(k, Some(norm))? else {
            return Ok(driver.trace(initial_beta, records, Termination::OptimalPoint { k }));
        };
        driver.step_condition(k, sigma * beta_prev / lambda, &reply)?;
        s += lambda;
        c += lambda * reply.delta;
        let model = config.mix.model_choice(k);
        state = state.update(model, setup, &driver.psi, &reply, &x, lambda, beta)?;
        // the output averages the next test points z_i = x_{i+1}
        xhat = if k == 0 { state.minimizer.clone() } else { toward(&xhat, &state.minimizer, lambda / s) };
        let record = driver.record(k, x, &state, xhat.clone(), (lambda, beta, beta_prev, s), reply, norm, c, model);
        let done = driver.gap_reached(&record);
        records.push(record);
        if done {
            return Ok(driver.trace(initial_beta, records, Termination::GapReached { k }));
        }
        beta_prev = beta;
    }
    Ok(driver.trace(initial_beta, records, Termination::MaxIters))
}

pub fn run_fgm(problem: &Problem, setup: &ProxSetup, config: &RunConfig) -> Result<RunTrace> {
    let driver = Driver::new(problem, setup, config)?;
    let sigma = driver.sigma;
    let initial_beta = driver.schedule.initial_beta(sigma)?;
    let mut state = AuxState::init(setup, initial_beta)?;
    let mut records = Vec::with_capacity(config.max_iters);
    let (mut s, mut c, mut beta_prev) = (0.0, 0.0, initial_beta);
    let mut xhat = setup.x0().clone();
    for k in 0..config.max_iters {
        let Some((lambda, beta)) = driver.params(k, None)? else { unreachable!("weighted averages are rejected") };
        let s_next = s + lambda;
        let x = if k == 0 { setup.x0().clone() } else { toward(&xhat, &state.minimizer, lambda / s_next) };
        let (reply, norm) = driver.query(&x)?;
        if norm == 0.0 && config.termination.stop_on_zero_subgradient {
            return Ok(driver.trace(initial_beta, records, Termination::OptimalPoint { k }));
        }
        driver.step_condition(k, sigma * beta_prev * s_next / (lambda * lambda), &reply)?;
        c += s_next * reply.delta;
        let model = config.mix.model_choice(k);
        state = state.update(model, setup, &driver.psi, &reply, &x, lambda, beta)?;
        xhat = if k == 0 { state.minimizer.clone() } else { toward(&xhat, &state.minimizer, lambda / s_next) };
        s = s_next;
        let record = driver.record(k, x, &state, xhat.clone(), (lambda, beta, beta_prev, s), reply, norm, c, model);
        let done = driver.gap_reached(&record);
        records.push(record);
        if done {
            return Ok(driver.trace(initial_beta, records, Termination::GapReached { k }));
        }
        beta_prev = beta;
    }
    Ok(driver.trace(initial_beta, records, Termination::MaxIters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{GeneratorSpec, Objective, Variant};
    use crate::space::{FeasibleSet, Geometry};
    use nalgebra::{DMatrix, DVector};

    fn quadratic(n: usize, seed: u64) -> Problem {
        GeneratorSpec { condition: Some(50.0), ..GeneratorSpec::new(Variant::Quadratic, n, seed) }.generate().unwrap()
    }

    #[test]
    fn presets_map_to_triples() {
        let dam = preset("dam").unwrap();
        assert_eq!((dam.method, dam.mix), (MethodKind::SubgradA, MixPolicy::PureDa));
        let md = preset("extended_mdm").unwrap();
        assert_eq!((md.method, md.mix), (MethodKind::SubgradA, MixPolicy::PureMd));
        let t3 = preset("tseng3").unwrap();
        assert_eq!(
            (t3.method, t3.mix, t3.schedule),
            (MethodKind::Fgm, MixPolicy::PureDa, Schedule::TsengLambda { lipschitz: None })
        );
        for name in PRESET_NAMES {
            preset(name).unwrap();
        }
        assert!(matches!(preset("nesterov_hybrid"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn first_test_point_is_prox_center() {
        let problem = GeneratorSpec::new(Variant::MaxAffine, 4, 1).generate().unwrap();
        let setup = ProxSetup::entropy_simplex(4);
        for name in ["extended_mdm", "dam", "double_averaging"] {
            let trace = run(&problem, &setup, &RunConfig::from_preset(name, 1).unwrap()).unwrap();
            assert_eq!(&trace.records[0].x, setup.x0());
        }
    }

    #[test]
    fn subgrad_a_output_is_weighted_average() {
        let problem = GeneratorSpec::new(Variant::L1Regression, 5, 2).generate().unwrap();
        let setup = ProxSetup::euclidean_free(5);
        let config = RunConfig::new(
            MethodKind::SubgradA,
            Schedule::WeightedAverages { rho: 1.0 },
            MixPolicy::PureDa,
            60,
        );
        let trace = run(&problem, &setup, &config).unwrap();
        for (k, r) in trace.records.iter().enumerate() {
            let mut sum = DVector::zeros(5);
            let mut s = 0.0;
            for p in &trace.records[..=k] {
                sum += &p.x.0 * p.lambda;
                s += p.lambda;
            }
            assert!((sum / s - &r.xhat.0).amax() <= 1e-12);
            assert!((r.s - s).abs() <= 1e-12 * s);
        }
    }

    #[test]
    fn fgm_output_recursion() {
        let problem = quadratic(6, 3);
        let setup = ProxSetup::euclidean_free(6);
        let trace = run(&problem, &setup, &RunConfig::from_preset("fgm_da", 50).unwrap()).unwrap();
        for pair in trace.records.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            let expected = &prev.xhat.0 * ((cur.s - cur.lambda) / cur.s) + &cur.z.0 * (cur.lambda / cur.s);
            assert!((expected - &cur.xhat.0).amax() <= 1e-12);
        }
        assert_eq!(trace.records[0].xhat, trace.records[0].z);
    }

    #[test]
    fn cgm_primal_gradient_is_gradient_descent() {
        let problem = quadratic(5, 1);
        let setup = ProxSetup::euclidean_free(5);
        let l = problem.lipschitz().unwrap();
        let trace = run(&problem, &setup, &RunConfig::from_preset("primal_gradient", 100).unwrap()).unwrap();
        let Objective::Quadratic { a, b } = problem.objective() else { unreachable!() };
        let mut x = DVector::zeros(5);
        for r in &trace.records {
            assert!((&r.x.0 - &x).amax() <= 1e-12);
            x = &x - (a * &x - b) / l;
        }
    }

    #[test]
    fn monotone_data_and_feasibility() {
        let problem = GeneratorSpec::new(Variant::MaxAffine, 6, 4).generate().unwrap();
        for setup in [
            ProxSetup::entropy_simplex(6),
            ProxSetup::new(6, FeasibleSet::Simplex, Geometry::Euclidean, None).unwrap(),
        ] {
            for name in ["extended_mdm", "dam", "double_averaging", "mdm_classic"] {
                let trace = run(&problem, &setup, &RunConfig::from_preset(name, 200).unwrap()).unwrap();
                let mut prev: Option<&IterationRecord> = None;
                for r in &trace.records {
                    for p in [&r.x, &r.z, &r.xhat] {
                        assert!(setup.contains(p, 1e-10));
                    }
                    if let Some(q) = prev {
                        assert!(r.s > q.s && r.beta >= q.beta);
                    }
                    prev = Some(r);
                }
            }
        }
    }

    #[test]
    fn step_condition_violation_aborts() {
        let problem = quadratic(4, 2);
        let setup = ProxSetup::euclidean_free(4);
        let l = problem.lipschitz().unwrap();
        let config = RunConfig::from_preset("fgm_md", 20).unwrap().with_schedule(Schedule::FastSmooth { lipschitz: Some(l / 2.0) });
        // S_0/λ_0² = 2 covers the halved β at k = 0; S_1/λ_1² = 1.5 does not
        assert!(matches!(run(&problem, &setup, &config), Err(Error::StepCondition { k: 1, .. })));
        let cgm = RunConfig::from_preset("primal_gradient", 20).unwrap().with_schedule(Schedule::ClassicSmooth { lipschitz: Some(l / 2.0) });
        assert!(matches!(run(&problem, &setup, &cgm), Err(Error::StepCondition { k: 0, .. })));
    }

    #[test]
    fn method_problem_mismatch() {
        let smooth = quadratic(3, 1);
        let lasso = GeneratorSpec::new(Variant::CompositeLasso, 3, 1).generate().unwrap();
        let maxaff = GeneratorSpec::new(Variant::MaxAffine, 3, 1).generate().unwrap();
        let free = ProxSetup::euclidean_free(3);
        assert!(matches!(
            run(&lasso, &free, &RunConfig::from_preset("dam", 5).unwrap()),
            Err(Error::MethodMismatch(_))
        ));
        assert!(matches!(
            run(&maxaff, &free, &RunConfig::from_preset("fgm_md", 5).unwrap()),
            Err(Error::MethodMismatch(_))
        ));
        let weighted = RunConfig::from_preset("double_averaging", 5).unwrap().with_schedule(Schedule::WeightedAverages { rho: 1.0 });
        assert!(matches!(run(&maxaff, &free, &weighted), Err(Error::MethodMismatch(_))));
        // quadratics are fine for subgradient methods
        run(&smooth, &free, &RunConfig::from_preset("dam", 5).unwrap()).unwrap();
    }

    #[test]
    fn zero_subgradient_terminates_weighted_averages() {
        let problem = Problem::new(Objective::MaxAffine {
            rows: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]),
            offsets: DVector::from_vec(vec![1.0, 0.0]),
        })
        .unwrap();
        let setup = ProxSetup::euclidean_free(2);
        let config = RunConfig::new(MethodKind::SubgradA, Schedule::WeightedAverages { rho: 1.0 }, MixPolicy::PureMd, 10);
        let trace = run(&problem, &setup, &config).unwrap();
        assert_eq!(trace.termination, Termination::OptimalPoint { k: 0 });
        assert!(trace.records.is_empty());
    }

    #[test]
    fn gap_termination() {
        let problem = quadratic(4, 9);
        let setup = ProxSetup::euclidean_free(4);
        let mut config = RunConfig::from_preset("fgm_md", 5000).unwrap();
        config.termination.gap_tolerance = Some(1e-6);
        let trace = run(&problem, &setup, &config).unwrap();
        let Termination::GapReached { k } = trace.termination else { panic!("{:?}", trace.termination) };
        assert_eq!(trace.records.len(), k + 1);
        assert!(k < 5000);
    }

    #[test]
    fn trace_json_round_trip() {
        let problem = quadratic(3, 5);
        let setup = ProxSetup::euclidean_free(3);
        let trace = run(&problem, &setup, &RunConfig::from_preset("tseng3", 30).unwrap()).unwrap();
        let json = serde_json::to_string(&trace).unwrap();
        let back: RunTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, trace);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
