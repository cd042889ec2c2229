//! Self-check suites: geometry identities, admissibility under mixing, the
//! β̂ sequence, equivalence with classical recursions, rate envelopes and
//! mutation soundness. Each check yields a [`CheckOutcome`]; suites collect
//! them into a serializable [`SuiteReport`].

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auxfunc::{check_property, AuxState, UpdateStep};
use crate::certify::{certify, check_relation, compute_ck, mutate, Mutation, RateEnvelope, Relation};
use crate::error::{Error, Result};
use crate::methods::{run, MethodKind, RunConfig, RunTrace};
use crate::oracle::{GeneratorSpec, Objective, OptimumInfo, Problem, Variant};
use crate::reference::{self, DualMap};
use crate::schedule::{beta_hat, LambdaRule, MixPolicy, Schedule};
use crate::space::{CompositeTerm, FeasibleSet, Geometry, Point, ProxSetup, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    /// The quantity compared against its threshold (a residual, deviation or ratio).
    pub worst: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, pass: bool, worst: f64, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), pass, worst, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Bregman,
    Property,
    BetaHat,
    Equivalence,
    Rates,
    Mutation,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] =
        [Suite::Bregman, Suite::Property, Suite::BetaHat, Suite::Equivalence, Suite::Rates, Suite::Mutation];

    pub fn parse(name: &str) -> Result<Suite> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::Config(format!("unknown suite `{name}`")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Bregman => "bregman",
            Suite::Property => "property",
            Suite::BetaHat => "beta_hat",
            Suite::Equivalence => "equivalence",
            Suite::Rates => "rates",
            Suite::Mutation => "mutation",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<CheckOutcome>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport { suite, checks, pass }
    }
}

/// Knobs shared by the suites. `kmax` caps iteration counts (and the β̂ range).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub kmax: Option<usize>,
    pub tol: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, kmax: None, tol: Tolerances::default() }
    }
}

impl VerifyOptions {
    fn iters(&self, default: usize) -> usize {
        self.kmax.map_or(default, |k| k.clamp(1, default.max(1)))
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    if suite == Suite::All {
        return Suite::EACH.iter().map(|s| run_one(*s, opts)).collect();
    }
    Ok(vec![run_one(suite, opts)?])
}

fn run_one(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let (seed, tol) = (opts.seed, &opts.tol);
    let checks = match suite {
        Suite::Bregman => bregman_checks(seed, 500)?,
        Suite::Property => property_under_mixing(seed, 50, opts.iters(30), 200, 1e-9)?,
        Suite::BetaHat => {
            let bound = opts.kmax.unwrap_or(1_000_000);
            beta_hat_checks(bound.min(100_000), bound)?
        }
        Suite::Equivalence => equivalences(seed, opts.iters(500))?,
        Suite::Rates => {
            let mut all = certify_nonsmooth(seed, opts.iters(2000), tol)?;
            all.extend(optimal_constant(seed, opts.iters(2000), tol)?);
            all.extend(smooth_rates(seed, opts.iters(2000), tol)?);
            all.extend(inexact_rates(seed, opts.iters(5000), opts.iters(2000), tol)?);
            all.extend(boundedness(seed, opts.iters(2000))?);
            all
        }
        Suite::Mutation => vec![mutation_soundness(seed, 20, tol)?],
        Suite::All => unreachable!("expanded by run_suite"),
    };
    Ok(SuiteReport::new(suite, checks))
}

/// A problem, a setup, and what is known about the optimum.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: Problem,
    pub setup: ProxSetup,
    pub optimum: OptimumInfo,
}

impl Instance {
    pub fn new(problem: Problem, setup: ProxSetup) -> Self {
        let optimum = problem.known_optimum(&setup);
        Instance { problem, setup, optimum }
    }

    pub fn run(&self, config: &RunConfig) -> Result<RunTrace> {
        run(&self.problem, &self.setup, config)
    }

    pub fn x_star(&self) -> Result<&Point> {
        self.optimum.x_star.as_ref().ok_or_else(|| Error::MissingCertificateInput("x* is unknown".into()))
    }

    pub fn f_star(&self) -> Result<f64> {
        Ok(self.problem.true_value(self.x_star()?))
    }
}

/// Max of 10 affine pieces over the 20-dimensional simplex with entropy geometry.
pub fn nonsmooth_instance(seed: u64) -> Result<Instance> {
    let problem = GeneratorSpec { rows: Some(10), ..GeneratorSpec::new(Variant::MaxAffine, 20, seed) }.generate()?;
    Ok(Instance::new(problem, ProxSetup::entropy_simplex(20)))
}

/// Quadratic on free space with the given size, condition number and oracle inexactness.
pub fn quadratic_instance(dim: usize, condition: f64, delta: f64, seed: u64) -> Result<Instance> {
    let spec = GeneratorSpec {
        condition: Some(condition),
        delta: (delta > 0.0).then_some(delta),
        ..GeneratorSpec::new(Variant::Quadratic, dim, seed)
    };
    Ok(Instance::new(spec.generate()?, ProxSetup::euclidean_free(dim)))
}

fn unit_box(dim: usize, half_width: f64) -> Result<ProxSetup> {
    ProxSetup::new(
        dim,
        FeasibleSet::Box { lower: vec![-half_width; dim], upper: vec![half_width; dim] },
        Geometry::Euclidean,
        None,
    )
}

fn all_setups(dim: usize) -> Result<Vec<ProxSetup>> {
    Ok(vec![
        ProxSetup::euclidean_free(dim),
        unit_box(dim, 1.0)?,
        ProxSetup::new(dim, FeasibleSet::Ball { center: vec![0.5; dim], radius: 2.0 }, Geometry::Euclidean, None)?,
        ProxSetup::new(dim, FeasibleSet::Simplex, Geometry::Euclidean, None)?,
        ProxSetup::entropy_simplex(dim),
    ])
}

/// Three-point identity, strong convexity of `d` and optimality of the prox step.
pub fn bregman_checks(seed: u64, samples: usize) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for setup in all_setups(6)? {
        let sigma = setup.sigma();
        let (mut convexity, mut identity, mut prox) = (f64::INFINITY, 0.0f64, f64::INFINITY);
        for _ in 0..samples {
            let z = setup.sample(&mut rng, 1.0);
            let x = setup.sample(&mut rng, 1.0);
            let xi = setup.bregman(&z, &x)?;
            let dist = setup.primal_norm(&(&x.0 - &z.0));
            convexity = convexity.min(xi - 0.5 * sigma * dist * dist);
            identity = identity.max((xi - (setup.d_value(&x)? - setup.l_d(&z, &x)?)).abs());

            let s: DVector<f64> = DVector::from_fn(setup.dim(), |_, _| rng.random_range(-1.0..1.0));
            let s = s.into();
            let beta = rng.random_range(0.1..3.0);
            let p = setup.prox_argmin(&s, beta, &CompositeTerm::None, 0.0)?;
            let objective = |y: &Point| -> Result<f64> { Ok(crate::space::DualVector::pair(&s, y) + beta * setup.d_value(y)?) };
            prox = prox.min(objective(&x)? - objective(&p)?);
        }
        let id = setup.id();
        out.push(CheckOutcome::new(format!("{id}: ξ ≥ σ/2‖x−z‖²"), convexity >= -1e-12, convexity, ""));
        out.push(CheckOutcome::new(format!("{id}: ξ = d − l_d"), identity <= 1e-10, identity, ""));
        out.push(CheckOutcome::new(format!("{id}: prox step is minimal"), prox >= -1e-10, prox, ""));
    }
    Ok(out)
}

/// Replays the auxiliary functions of `trace`, returning `ψ₋₁, …, ψ_k` and the steps.
pub fn replay_states(trace: &RunTrace, problem: &Problem, setup: &ProxSetup) -> Result<(Vec<AuxState>, Vec<UpdateStep>)> {
    let psi = problem.composite();
    let composite = !matches!(psi, CompositeTerm::None);
    let mut states = vec![AuxState::init(setup, trace.initial_beta)?];
    let mut steps = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let step = UpdateStep { reply: r.reply(composite), point: r.x.clone(), lambda: r.lambda, choice: r.model };
        let next = states.last().expect("seeded").update(r.model, setup, &psi, &step.reply, &r.x, r.lambda, r.beta)?;
        states.push(next);
        steps.push(step);
    }
    Ok((states, steps))
}

/// Admissibility of mixed MD/DA sequences on three compact problem/setup pairs.
pub fn property_under_mixing(
    seed: u64,
    interleavings: usize,
    length: usize,
    samples: usize,
    tol: f64,
) -> Result<Vec<CheckOutcome>> {
    let max_affine = GeneratorSpec { rows: Some(10), ..GeneratorSpec::new(Variant::MaxAffine, 8, seed) }.generate()?;
    let l1 = GeneratorSpec::new(Variant::L1Regression, 6, seed).generate()?;
    let lasso = GeneratorSpec { rows: Some(6), ..GeneratorSpec::new(Variant::CompositeLasso, 6, seed) }.generate()?;
    let cases = [
        ("max_affine/entropy-simplex", max_affine, ProxSetup::entropy_simplex(8), MethodKind::SubgradA, Schedule::SimpleAverages { gamma: 1.0 }),
        ("l1_regression/box", l1, unit_box(6, 2.0)?, MethodKind::SubgradA, Schedule::SimpleAverages { gamma: 1.0 }),
        ("lasso/box", lasso, unit_box(6, 2.0)?, MethodKind::Cgm, Schedule::ClassicSmooth { lipschitz: None }),
    ];
    let mut out = Vec::new();
    for (name, problem, setup, method, schedule) in cases {
        let psi = problem.composite();
        let (mut growth, mut lower, mut exact) = (f64::INFINITY, f64::INFINITY, true);
        let mut passed = 0;
        for i in 0..interleavings {
            let mix = MixPolicy::SeededRandom { seed: seed.wrapping_mul(1000).wrapping_add(i as u64) };
            let trace = run(&problem, &setup, &RunConfig::new(method, schedule.clone(), mix, length))?;
            let (states, steps) = replay_states(&trace, &problem, &setup)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64) << 16);
            let report = check_property(&setup, &psi, &states, &steps, samples, tol, &mut rng)?;
            growth = report.growth_residuals.iter().copied().fold(growth, f64::min);
            lower = report.lower_residuals.iter().copied().fold(lower, f64::min);
            exact &= report.lower_exact;
            passed += usize::from(report.pass);
        }
        out.push(CheckOutcome::new(
            format!("{name}: growth condition"),
            growth >= -tol,
            growth,
            format!("{passed}/{interleavings} interleavings pass"),
        ));
        out.push(CheckOutcome::new(
            format!("{name}: lower-model condition"),
            lower >= -tol && exact,
            lower,
            if exact { "exact minimization" } else { "sampled" },
        ));
    }
    Ok(out)
}

/// Identity `β̂_k = Σ_{i=−1}^{k−1} 1/β̂ᵢ` up to `k_identity`, bounds
/// `√(2k+1) ≤ β̂_k ≤ 1/(1+√3) + √(2k+1)` up to `k_bound`.
pub fn beta_hat_checks(k_identity: usize, k_bound: usize) -> Result<Vec<CheckOutcome>> {
    let mut sum = 0.0;
    let mut identity = 0.0f64;
    let mut previous = beta_hat(-1)?;
    for k in 0..=k_identity as i64 {
        sum += 1.0 / previous;
        let b = beta_hat(k)?;
        identity = identity.max((b - sum).abs() / b);
        previous = b;
    }
    let upper_offset = 1.0 / (1.0 + 3f64.sqrt());
    let mut slack = f64::INFINITY;
    for k in 0..=k_bound as i64 {
        let b = beta_hat(k)?;
        let root = (2.0 * k as f64 + 1.0).sqrt();
        slack = slack.min(b - root).min(root + upper_offset - b);
    }
    Ok(vec![
        CheckOutcome::new("β̂ identity", identity <= 1e-9, identity, format!("k ≤ {k_identity}")),
        CheckOutcome::new("β̂ bounds", slack >= 0.0, slack, format!("k ≤ {k_bound}")),
    ])
}

fn max_deviation(a: &[&DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (*u - v).amax()).fold(0.0, f64::max)
}

/// Drivers against direct transcriptions of the classical recursions.
pub fn equivalences(seed: u64, iters: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let limit = 1e-10;
    let mut push = |name: &str, dev: f64| out.push(CheckOutcome::new(name, dev <= limit, dev, format!("{iters} iterations")));

    let l1 = GeneratorSpec::new(Variant::L1Regression, 10, seed).generate()?;
    let rule = LambdaRule::InverseSqrt { scale: 0.5 };
    let lambda = |k: usize| 0.5 / ((k + 1) as f64).sqrt();
    let mdm = RunConfig::new(MethodKind::SubgradA, Schedule::MdmClassic { rule }, MixPolicy::PureMd, iters);
    for (setup, bounds) in [(ProxSetup::euclidean_free(10), None), (unit_box(10, 0.5)?, Some((vec![-0.5; 10], vec![0.5; 10])))] {
        let trace = run(&l1, &setup, &mdm)?;
        let b = bounds.as_ref().map(|(l, h)| (l.as_slice(), h.as_slice()));
        let path = reference::projected_subgradient(&l1, b, &setup.x0().0, lambda, iters)?;
        let xs: Vec<_> = trace.records.iter().map(|r| &r.x.0).collect();
        push(&format!("mirror descent on {} = projected subgradient", setup.id()), max_deviation(&xs, &path));
    }

    let max_affine = GeneratorSpec { rows: Some(10), ..GeneratorSpec::new(Variant::MaxAffine, 10, seed) }.generate()?;
    let da = RunConfig::from_preset("double_averaging", iters)?;
    for (problem, setup, map) in [
        (&max_affine, ProxSetup::entropy_simplex(10), DualMap::EntropySimplex),
        (&l1, ProxSetup::euclidean_free(10), DualMap::EuclideanFree),
    ] {
        let trace = run(problem, &setup, &da)?;
        let beta = |k: usize| beta_hat(k as i64).expect("k >= 0");
        let path = reference::double_averaging(problem, map, &setup.x0().0, |_| 1.0, beta, iters)?;
        let xs: Vec<_> = trace.records.iter().map(|r| &r.x.0).collect();
        let zs: Vec<_> = trace.records.iter().map(|r| &r.z.0).collect();
        let dev = max_deviation(&xs, &path.x).max(max_deviation(&zs, &path.z));
        push(&format!("double averaging on {}", setup.id()), dev);
    }

    let quad = quadratic_instance(10, 100.0, 0.0, seed)?;
    let l = quad.problem.lipschitz().expect("quadratics carry L");
    for (preset, third) in [("tseng2", false), ("tseng3", true)] {
        let trace = quad.run(&RunConfig::from_preset(preset, iters)?)?;
        let x0 = &quad.setup.x0().0;
        let path = if third {
            reference::tseng_third(&quad.problem, x0, l, iters)?
        } else {
            reference::tseng_second(&quad.problem, x0, l, iters)?
        };
        let pick = |f: fn(&crate::methods::IterationRecord) -> &DVector<f64>| trace.records.iter().map(f).collect::<Vec<_>>();
        let dev = max_deviation(&pick(|r| &r.x.0), &path.x)
            .max(max_deviation(&pick(|r| &r.z.0), &path.z))
            .max(max_deviation(&pick(|r| &r.xhat.0), &path.xhat));
        let name = if third { "Tseng's third method" } else { "Tseng's second method" };
        push(&format!("{preset} = {name}"), dev);
    }
    Ok(out)
}

fn worst_relation(trace: &RunTrace, problem: &Problem, sigma: f64, which: Relation, tol: &Tolerances) -> Result<f64> {
    let ck = compute_ck(trace, sigma)?;
    Ok(check_relation(trace, problem, &ck, which, tol).into_iter().map(|(r, _)| r).fold(f64::INFINITY, f64::min))
}

/// Certificates for DAM and extended MDM with simple averages on the seeded max-affine instance.
pub fn certify_nonsmooth(seed: u64, iters: usize, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let inst = nonsmooth_instance(seed)?;
    let mut out = Vec::new();
    for name in ["dam", "extended_mdm"] {
        let trace = inst.run(&RunConfig::from_preset(name, iters)?)?;
        let cert = certify(&trace, &inst.problem, &inst.setup, &inst.optimum, None, tol)?;
        let rhat = worst_relation(&trace, &inst.problem, inst.setup.sigma(), Relation::RHat, tol)?;
        out.push(CheckOutcome::new(format!("{name}: R̂ residual"), rhat >= -1e-9, rhat, format!("k < {iters}")));
        let (bound_ok, bound_margin) = cert.rows.iter().fold((true, f64::INFINITY), |(ok, m), r| {
            let margin = r.bound.unwrap_or(f64::NAN) - r.gap.unwrap_or(f64::NAN);
            (ok && margin >= -1e-9, m.min(margin))
        });
        out.push(CheckOutcome::new(format!("{name}: bound ≥ gap"), bound_ok, bound_margin, ""));
        let env_margin = envelope_margin(&cert);
        out.push(CheckOutcome::new(
            format!("{name}: simple-averages envelope"),
            env_margin >= -tol.envelope && cert.envelope.is_some(),
            env_margin,
            "",
        ));
        out.push(CheckOutcome::new(
            format!("{name}: full certificate"),
            cert.pass,
            cert.worst_residual(),
            cert.consistency_failures.first().cloned().unwrap_or_default(),
        ));
    }
    Ok(out)
}

fn envelope_margin(cert: &crate::certify::Certificate) -> f64 {
    cert.rows
        .iter()
        .map(|r| r.envelope.unwrap_or(f64::NAN) - r.gap.unwrap_or(f64::NAN))
        .fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.min(b) })
}

/// `M = max_i ‖a_i‖_∞`, the dual-norm Lipschitz constant of a max-affine function under l1.
pub fn max_affine_m(problem: &Problem) -> Result<f64> {
    match problem.objective() {
        Objective::MaxAffine { rows, .. } => Ok(rows.amax()),
        _ => Err(Error::InvalidProblem("expected a max-affine objective".into())),
    }
}

/// Simple averages with `γ = M/(√2σR)` against `√2·M·R·(0.5+√(2k+1))/(k+1)`.
pub fn optimal_constant(seed: u64, iters: usize, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let inst = nonsmooth_instance(seed)?;
    let sigma = inst.setup.sigma();
    let m = max_affine_m(&inst.problem)?;
    let r = (inst.setup.d_value(inst.x_star()?)? / sigma).sqrt();
    let gamma = m / (2f64.sqrt() * sigma * r);
    let envelope = RateEnvelope::OptimalConstant { m, r };
    let mut out = Vec::new();
    for name in ["dam", "extended_mdm"] {
        let config = RunConfig::from_preset(name, iters)?.with_schedule(Schedule::SimpleAverages { gamma });
        let trace = inst.run(&config)?;
        let cert = certify(&trace, &inst.problem, &inst.setup, &inst.optimum, Some(envelope), tol)?;
        let margin = envelope_margin(&cert);
        out.push(CheckOutcome::new(
            format!("{name}: optimal-constant envelope"),
            margin >= -tol.envelope && cert.pass,
            margin,
            format!("γ = {gamma:.6}, M = {m:.6}, R = {r:.6}"),
        ));
    }
    Ok(out)
}

fn gap_at(trace: &RunTrace, inst: &Instance, k: usize) -> Result<f64> {
    let r = trace.records.get(k).ok_or_else(|| Error::Config(format!("trace has no record {k}")))?;
    Ok(inst.problem.true_value(&r.xhat) - inst.f_star()?)
}

fn envelope_check(name: &str, inst: &Instance, trace: &RunTrace, env: RateEnvelope, tol: &Tolerances) -> Result<CheckOutcome> {
    let cert = certify(trace, &inst.problem, &inst.setup, &inst.optimum, Some(env), tol)?;
    let margin = envelope_margin(&cert);
    let detail = cert.consistency_failures.first().cloned().unwrap_or_else(|| format!("{} iterations", trace.records.len()));
    Ok(CheckOutcome::new(name, margin >= -tol.envelope && cert.pass, margin, detail))
}

/// CGM and FGM rates on an ill-conditioned quadratic, and their ordering at k = 1000.
pub fn smooth_rates(seed: u64, iters: usize, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let inst = quadratic_instance(100, 1e3, 0.0, seed)?;
    let l = inst.problem.lipschitz().expect("quadratics carry L");
    let cgm = inst.run(&RunConfig::from_preset("primal_gradient", iters)?)?;
    let fgm = inst.run(&RunConfig::from_preset("fgm_md", iters)?)?;
    let mut out = vec![
        envelope_check("cgm: L l_d/(σ(k+1))", &inst, &cgm, RateEnvelope::Cgm { lipschitz: l, delta: 0.0 }, tol)?,
        envelope_check("fgm: 4L d(x*)/(σ(k+1)(k+2))", &inst, &fgm, RateEnvelope::FgmPrimal { lipschitz: l, delta: 0.0 }, tol)?,
    ];
    let k = 1000.min(iters - 1);
    let (g_cgm, g_fgm) = (gap_at(&cgm, &inst, k)?, gap_at(&fgm, &inst, k)?);
    let ratio = g_cgm / g_fgm.max(f64::MIN_POSITIVE);
    out.push(CheckOutcome::new(
        "fgm gap ≤ cgm gap / 10",
        ratio >= 10.0,
        ratio,
        format!("k = {k}: cgm {g_cgm:.3e}, fgm {g_fgm:.3e}"),
    ));
    Ok(out)
}

/// CGM and FGM with a δ-inexact oracle against the envelopes carrying δ.
pub fn inexact_rates(seed: u64, cgm_iters: usize, fgm_iters: usize, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let delta = 1e-3;
    let inst = quadratic_instance(50, 100.0, delta, seed)?;
    let l = inst.problem.lipschitz().expect("quadratics carry L");
    let cgm = inst.run(&RunConfig::from_preset("primal_gradient", cgm_iters)?)?;
    let fgm = inst.run(&RunConfig::from_preset("fgm_md", fgm_iters)?)?;
    Ok(vec![
        envelope_check("inexact cgm: L l_d/(σ(k+1)) + δ", &inst, &cgm, RateEnvelope::Cgm { lipschitz: l, delta }, tol)?,
        envelope_check(
            "inexact fgm: 4L l_d/(σ(k+1)(k+2)) + (k+3)δ/3",
            &inst,
            &fgm,
            RateEnvelope::Fgm { lipschitz: l, delta },
            tol,
        )?,
        envelope_check(
            "inexact fgm: 4L d(x*)/(σ(k+1)(k+2)) + (k+3)δ/3",
            &inst,
            &fgm,
            RateEnvelope::FgmPrimal { lipschitz: l, delta },
            tol,
        )?,
    ])
}

/// Largest `‖p − x*‖² − radius²` over the iterates. With simple averages the
/// squared radius after `k` is `2d(x*)/σ + M_k²/(σ²γ²)`; `x_k` and `x̂_k` lie
/// in the ball for `k − 1` (with `M_{−1} = 0`), `z_k` in the ball for `k`.
/// With weighted averages the squared radius is `(2d(x*) + ρ²)/σ`.
pub fn ball_excess(trace: &RunTrace, inst: &Instance) -> Result<f64> {
    let sigma = inst.setup.sigma();
    let x_star = inst.x_star()?;
    let d_star = inst.setup.d_value(x_star)?;
    let radius_sq: Box<dyn Fn(f64) -> f64> = match trace.config.schedule {
        Schedule::SimpleAverages { gamma } => Box::new(move |m: f64| 2.0 * d_star / sigma + m * m / (sigma * sigma * gamma * gamma)),
        Schedule::WeightedAverages { rho } => Box::new(move |_| (2.0 * d_star + rho * rho) / sigma),
        _ => return Err(Error::MethodMismatch("balls are defined for the averaging schedules".into())),
    };
    let dist_sq = |p: &Point| inst.setup.primal_norm(&(&p.0 - &x_star.0)).powi(2);
    let (mut m_prev, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for r in &trace.records {
        let m_k = m_prev.max(r.grad_dual_norm);
        excess = excess
            .max(dist_sq(&r.x) - radius_sq(m_prev))
            .max(dist_sq(&r.xhat) - radius_sq(m_prev))
            .max(dist_sq(&r.z) - radius_sq(m_k));
        m_prev = m_k;
    }
    Ok(excess)
}

/// Iterates of the nonsmooth certification runs stay in the balls.
pub fn boundedness(seed: u64, iters: usize) -> Result<Vec<CheckOutcome>> {
    let inst = nonsmooth_instance(seed)?;
    let mut out = Vec::new();
    for name in ["dam", "extended_mdm"] {
        let trace = inst.run(&RunConfig::from_preset(name, iters)?)?;
        let excess = ball_excess(&trace, &inst)?;
        out.push(CheckOutcome::new(format!("{name}: iterates in balls"), excess <= 1e-8, excess, ""));
    }
    let weighted = RunConfig::new(MethodKind::SubgradA, Schedule::WeightedAverages { rho: 1.0 }, MixPolicy::PureDa, iters);
    let trace = inst.run(&weighted)?;
    let excess = ball_excess(&trace, &inst)?;
    out.push(CheckOutcome::new("weighted averages: iterates in balls", excess <= 1e-8, excess, ""));
    Ok(out)
}

/// Seeded corruptions of passing traces, each of which must be rejected.
pub fn mutation_soundness(seed: u64, count: usize, tol: &Tolerances) -> Result<CheckOutcome> {
    let nonsmooth = nonsmooth_instance(seed)?;
    let quad = quadratic_instance(20, 100.0, 0.0, seed)?;
    let iters = 60;
    let pool = [
        (&nonsmooth, nonsmooth.run(&RunConfig::from_preset("dam", iters)?)?),
        (&nonsmooth, nonsmooth.run(&RunConfig::from_preset("extended_mdm", iters)?)?),
        (&nonsmooth, nonsmooth.run(&RunConfig::from_preset("double_averaging", iters)?)?),
        (&quad, quad.run(&RunConfig::from_preset("primal_gradient", iters)?)?),
        (&quad, quad.run(&RunConfig::from_preset("fgm_da", iters)?)?),
    ];
    for (inst, trace) in &pool {
        let cert = certify(trace, &inst.problem, &inst.setup, &inst.optimum, None, tol)?;
        if !cert.pass {
            return Ok(CheckOutcome::new("mutations caught", false, 0.0, "an unmodified trace failed certification"));
        }
    }
    let kinds = [Mutation::Lambda, Mutation::Beta, Mutation::Slope, Mutation::Minimizer];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut missed = Vec::new();
    for i in 0..count {
        let (inst, trace) = &pool[rng.random_range(0..pool.len())];
        let kind = kinds[i % kinds.len()];
        let k = rng.random_range(0..trace.records.len());
        let factor = if rng.random_bool(0.5) { 0.1 } else { -0.1 };
        let bad = mutate(trace, kind, k, factor);
        let cert = certify(&bad, &inst.problem, &inst.setup, &inst.optimum, None, tol)?;
        if cert.pass {
            missed.push(format!("{kind:?} at k = {k} of {}", trace.config.label()));
        }
    }
    let caught = count - missed.len();
    Ok(CheckOutcome::new(
        "mutations caught",
        missed.is_empty(),
        caught as f64,
        if missed.is_empty() { format!("{caught}/{count}") } else { missed.join("; ") },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_all(checks: &[CheckOutcome]) {
        for c in checks {
            assert!(c.pass, "{}: {} ({})", c.name, c.worst, c.detail);
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([&Suite::All]) {
            assert_eq!(Suite::parse(s.name()).unwrap(), *s);
        }
        assert!(Suite::parse("everything").is_err());
    }

    #[test]
    fn bregman_suite_passes() {
        assert_all(&bregman_checks(3, 100).unwrap());
    }

    #[test]
    fn short_beta_hat_range() {
        let checks = beta_hat_checks(1000, 5000).unwrap();
        assert_all(&checks);
        assert_eq!(beta_hat(2).unwrap(), 2.5);
    }

    #[test]
    fn small_equivalences() {
        assert_all(&equivalences(2, 60).unwrap());
    }

    #[test]
    fn small_property_suite() {
        assert_all(&property_under_mixing(4, 4, 12, 40, 1e-9).unwrap());
    }

    #[test]
    fn ball_radius_grows_with_m() {
        let inst = nonsmooth_instance(5).unwrap();
        let trace = inst.run(&RunConfig::from_preset("dam", 50).unwrap()).unwrap();
        assert!(ball_excess(&trace, &inst).unwrap() <= 1e-8);
        let tight = RunConfig::from_preset("dam", 50).unwrap().with_schedule(Schedule::SimpleAverages { gamma: 1e3 });
        let trace = inst.run(&tight).unwrap();
        assert!(ball_excess(&trace, &inst).unwrap() <= 1e-8);
    }
}
