//! Per-iteration certificates for recorded runs.
//!
//! Everything is recomputed from the trace and the problem: objective values
//! come from [`Problem::true_value`], `C_k` from its defining sum, and the
//! auxiliary functions are replayed from `ψ₋₁`. A trace whose data were
//! altered after the run therefore fails at least one check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auxfunc::AuxState;
use crate::error::{Error, Result};
use crate::methods::{MethodKind, RunTrace};
use crate::oracle::{OptimumInfo, Problem};
use crate::schedule::Schedule;
use crate::space::{CompositeTerm, Point, ProxSetup, Tolerances};

/// Which certificate inequality to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `S_k f(x̂_k) <= min ψ_k + C_k`.
    R,
    /// `Σ λᵢ f(xᵢ) <= min ψ_k + C_k`.
    RHat,
    /// `Σ λᵢ f(x_{i+1}) <= min ψ_k + C_k`, with `x_{i+1} = zᵢ`.
    RHatPrime,
}

/// The relations proven for each method.
pub fn relations_for(method: MethodKind) -> &'static [Relation] {
    match method {
        MethodKind::SubgradA => &[Relation::R, Relation::RHat],
        MethodKind::SubgradB | MethodKind::Fgm => &[Relation::R],
        MethodKind::Cgm => &[Relation::R, Relation::RHatPrime],
    }
}

/// `C_k = (1/2σ) Σ_{i≤k} λᵢ²/β_{i−1} ‖gᵢ‖_*²`.
pub fn compute_ck_nonsmooth(trace: &RunTrace, sigma: f64) -> Result<Vec<f64>> {
    let mut beta_prev = trace.initial_beta;
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        if !r.grad_dual_norm.is_finite() {
            return Err(Error::MissingCertificateInput(format!("subgradient norm at k = {}", r.k)));
        }
        sum += r.lambda * r.lambda * r.grad_dual_norm * r.grad_dual_norm / beta_prev;
        out.push(sum / (2.0 * sigma));
        beta_prev = r.beta;
    }
    Ok(out)
}

/// `C_k = Σ λᵢ δᵢ` (CGM) or `Σ Sᵢ δᵢ` (FGM).
pub fn compute_ck_structured(trace: &RunTrace) -> Result<Vec<f64>> {
    let weight_by_sum = match trace.config.method {
        MethodKind::Cgm => false,
        MethodKind::Fgm => true,
        other => {
            return Err(Error::MethodMismatch(format!("{} has no structured C_k", other.name())));
        }
    };
    let mut s = 0.0;
    let mut c = 0.0;
    Ok(trace
        .records
        .iter()
        .map(|r| {
            s += r.lambda;
            c += if weight_by_sum { s } else { r.lambda } * r.delta;
            c
        })
        .collect())
}

/// `C_k` by the formula matching the trace's method.
pub fn compute_ck(trace: &RunTrace, sigma: f64) -> Result<Vec<f64>> {
    if trace.config.method.is_smooth() {
        compute_ck_structured(trace)
    } else {
        compute_ck_nonsmooth(trace, sigma)
    }
}

/// `min ψ_k + C_k − LHS_k` per k, with the slack each residual is allowed.
pub fn check_relation(trace: &RunTrace, problem: &Problem, ck: &[f64], which: Relation, tol: &Tolerances) -> Vec<(f64, f64)> {
    let mut s = 0.0;
    let mut weighted = 0.0;
    trace
        .records
        .iter()
        .zip(ck)
        .map(|(r, c)| {
            s += r.lambda;
            let lhs = match which {
                Relation::R => s * problem.true_value(&r.xhat),
                Relation::RHat => {
                    weighted += r.lambda * problem.true_value(&r.x);
                    weighted
                }
                Relation::RHatPrime => {
                    weighted += r.lambda * problem.true_value(&r.z);
                    weighted
                }
            };
            let scale = r.min_psi.abs().max(lhs.abs()).max(c.abs());
            (r.min_psi + c - lhs, tol.residual_slack(scale))
        })
        .collect()
}

/// Bound of the form `(β_k l_d(z_k; x*) + C_k)/S_k`, or `(β_k D + C_k)/S_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub bound: f64,
    pub gap: f64,
    /// `l_d(z_k; x*)`, raw (it may be negative); absent under the D surrogate.
    pub l_d: Option<f64>,
    pub pass: bool,
}

pub fn check_bound(
    trace: &RunTrace,
    problem: &Problem,
    setup: &ProxSetup,
    ck: &[f64],
    optimum: &OptimumInfo,
    tol: &Tolerances,
) -> Result<Vec<BoundRow>> {
    let f_star = optimum_value(problem, optimum)?;
    let mut s = 0.0;
    trace
        .records
        .iter()
        .zip(ck)
        .map(|(r, c)| {
            s += r.lambda;
            let gap = problem.true_value(&r.xhat) - f_star;
            let (bound, l_d) = match (&optimum.x_star, optimum.d_star_upper) {
                (Some(x_star), _) => {
                    let l = setup.l_d(&r.z, x_star)?;
                    ((r.beta * l + c) / s, Some(l))
                }
                (None, Some(d)) => ((r.beta * d + c) / s, None),
                (None, None) => return Err(Error::MissingCertificateInput("neither x* nor D is known".into())),
            };
            let pass = bound - gap >= -tol.residual_slack(bound.abs().max(gap.abs()).max(f_star.abs()));
            Ok(BoundRow { bound, gap, l_d, pass })
        })
        .collect()
}

fn optimum_value(problem: &Problem, optimum: &OptimumInfo) -> Result<f64> {
    optimum
        .f_star
        .or_else(|| optimum.x_star.as_ref().map(|x| problem.true_value(x)))
        .ok_or_else(|| Error::MissingCertificateInput("optimal value is unknown".into()))
}

/// Closed-form rate envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateEnvelope {
    /// `(γ l_d(z_k;x*) + M_k²/(2σγ))·(0.5 + √(2k+1))/(k+1)`.
    SimpleAverages { gamma: f64 },
    /// `M_k/√σ·(l_d(z_k;x*)/ρ + ρ/2)·(0.5 + √(2k+1))/(k+1)`.
    WeightedAverages { rho: f64 },
    /// `√2·M·R·(0.5 + √(2k+1))/(k+1)` for `γ = M/(√2σR)`.
    OptimalConstant { m: f64, r: f64 },
    /// `L l_d(z_k;x*)/(σ(k+1)) + δ`.
    Cgm { lipschitz: f64, delta: f64 },
    /// `4L l_d(z_k;x*)/(σ(k+1)(k+2)) + (k+3)δ/3`.
    Fgm { lipschitz: f64, delta: f64 },
    /// As [`RateEnvelope::Fgm`] with `d(x*)` in place of `l_d(z_k;x*)`.
    FgmPrimal { lipschitz: f64, delta: f64 },
}

impl RateEnvelope {
    /// The envelope implied by the trace's schedule, when it has one.
    pub fn for_trace(trace: &RunTrace) -> Option<Self> {
        let delta = trace.records.iter().map(|r| r.delta).fold(0.0, f64::max);
        match (&trace.config.schedule, trace.config.method) {
            (Schedule::SimpleAverages { gamma }, MethodKind::SubgradA | MethodKind::SubgradB) => {
                Some(RateEnvelope::SimpleAverages { gamma: *gamma })
            }
            (Schedule::WeightedAverages { rho }, MethodKind::SubgradA) => Some(RateEnvelope::WeightedAverages { rho: *rho }),
            (Schedule::ClassicSmooth { lipschitz: Some(l) }, MethodKind::Cgm) => {
                Some(RateEnvelope::Cgm { lipschitz: *l, delta })
            }
            (Schedule::FastSmooth { lipschitz: Some(l) }, MethodKind::Fgm) => Some(RateEnvelope::Fgm { lipschitz: *l, delta }),
            _ => None,
        }
    }

    fn needs_x_star(&self) -> bool {
        !matches!(self, RateEnvelope::OptimalConstant { .. })
    }

    /// Envelope at iteration `k` given `l_d(z_k;x*)`, `d(x*)` and `M_k`.
    pub fn value(&self, k: usize, l_d: f64, d_star: f64, m_k: f64, sigma: f64) -> f64 {
        let kf = k as f64;
        let sqrt_rate = (0.5 + (2.0 * kf + 1.0).sqrt()) / (kf + 1.0);
        match *self {
            RateEnvelope::SimpleAverages { gamma } => (gamma * l_d + m_k * m_k / (2.0 * sigma * gamma)) * sqrt_rate,
            RateEnvelope::WeightedAverages { rho } => m_k / sigma.sqrt() * (l_d / rho + rho / 2.0) * sqrt_rate,
            RateEnvelope::OptimalConstant { m, r } => 2f64.sqrt() * m * r * sqrt_rate,
            RateEnvelope::Cgm { lipschitz, delta } => lipschitz * l_d / (sigma * (kf + 1.0)) + delta,
            RateEnvelope::Fgm { lipschitz, delta } => {
                4.0 * lipschitz * l_d / (sigma * (kf + 1.0) * (kf + 2.0)) + (kf + 3.0) * delta / 3.0
            }
            RateEnvelope::FgmPrimal { lipschitz, delta } => {
                4.0 * lipschitz * d_star / (sigma * (kf + 1.0) * (kf + 2.0)) + (kf + 3.0) * delta / 3.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub envelope: f64,
    pub gap: f64,
    /// `(1/S_k) Σ λᵢ f(xᵢ) − f*`, reported for the first subgradient method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_gap: Option<f64>,
    pub pass: bool,
}

pub fn check_rate(
    trace: &RunTrace,
    problem: &Problem,
    setup: &ProxSetup,
    envelope: &RateEnvelope,
    optimum: &OptimumInfo,
    tol: &Tolerances,
) -> Result<Vec<RateRow>> {
    let f_star = optimum_value(problem, optimum)?;
    let x_star = optimum.x_star.as_ref();
    if envelope.needs_x_star() && x_star.is_none() {
        return Err(Error::MissingCertificateInput("rate envelope needs x*".into()));
    }
    let d_star = match x_star {
        Some(x) => setup.d_value(x)?,
        None => optimum.d_star_upper.unwrap_or(f64::NAN),
    };
    let track_average = trace.config.method == MethodKind::SubgradA;
    let (mut m_k, mut s, mut weighted) = (0.0f64, 0.0, 0.0);
    let mut rows = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        m_k = m_k.max(r.grad_dual_norm);
        s += r.lambda;
        weighted += r.lambda * problem.true_value(&r.x);
        let l_d = match x_star {
            Some(x) => setup.l_d(&r.z, x)?,
            None => f64::NAN,
        };
        let env = envelope.value(r.k, l_d, d_star, m_k, setup.sigma());
        let gap = problem.true_value(&r.xhat) - f_star;
        let average_gap = track_average.then(|| weighted / s - f_star);
        let limit = env + tol.envelope;
        let pass = gap <= limit && average_gap.is_none_or(|a| a <= limit);
        rows.push(RateRow { envelope: env, gap, average_gap, pass });
    }
    Ok(rows)
}

/// `(σβ_{k−1}/λ_k or σβ_{k−1}S_k/λ_k², L(x_k), pass)` per k; empty for non-smooth methods.
pub fn check_step_conditions(trace: &RunTrace, sigma: f64) -> Vec<(f64, f64, bool)> {
    let mut s = 0.0;
    trace
        .records
        .iter()
        .filter_map(|r| {
            s += r.lambda;
            let lhs = match trace.config.method {
                MethodKind::Cgm => sigma * r.beta_prev / r.lambda,
                MethodKind::Fgm => sigma * r.beta_prev * s / (r.lambda * r.lambda),
                _ => return None,
            };
            let l = r.lipschitz.unwrap_or(f64::INFINITY);
            Some((lhs, l, lhs >= l * (1.0 - 1e-10)))
        })
        .collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn close_points(a: &Point, b: &Point, rel: f64) -> bool {
    a.dim() == b.dim() && (&a.0 - &b.0).amax() <= rel * (1.0 + a.amax().max(b.amax()))
}

/// Structural checks tying the trace to its configuration and problem.
/// Returns one message per violated check.
pub fn check_consistency(trace: &RunTrace, problem: &Problem, setup: &ProxSetup, tol: &Tolerances) -> Result<Vec<String>> {
    if trace.problem_id != problem.id() || trace.setup_id != setup.id() {
        return Ok(vec!["trace was produced for a different problem or setup".into()]);
    }
    let mut failures = Vec::new();
    let mut fail = |k: usize, what: &str| failures.push(format!("k = {k}: {what}"));
    let sigma = setup.sigma();
    let method = trace.config.method;
    let config = &trace.config;
    let psi = problem.composite();
    let composite = !matches!(psi, CompositeTerm::None);
    match config.schedule.initial_beta(sigma) {
        Ok(b) if close(b, trace.initial_beta, tol.replay) => {}
        _ => fail(0, "initial β does not match the schedule"),
    }

    let ck = compute_ck(trace, sigma)?;
    let mut replay = AuxState::init(setup, trace.initial_beta).ok();
    let (mut s, mut beta_prev) = (0.0, trace.initial_beta);
    let mut prev_z = setup.x0().clone();
    let mut prev_x = setup.x0().clone();
    let mut prev_xhat = setup.x0().clone();
    for (i, r) in trace.records.iter().enumerate() {
        let k = r.k;
        if k != i {
            fail(k, "iteration indices are not contiguous from 0");
        }
        if !(r.lambda.is_finite() && r.lambda > 0.0) {
            fail(k, "λ is not positive");
        }
        if !close(r.beta_prev, beta_prev, tol.identity) || r.beta < r.beta_prev {
            fail(k, "β sequence is inconsistent or decreasing");
        }
        match config.schedule.next_params(k, Some(r.grad_dual_norm), sigma) {
            Ok((l, b)) if close(l, r.lambda, tol.replay) && close(b, r.beta, tol.replay) => {}
            _ => fail(k, "(λ, β) do not follow the schedule"),
        }
        if config.mix.model_choice(k) != r.model {
            fail(k, "model choice does not follow the mixing policy");
        }
        s += r.lambda;
        if !close(s, r.s, tol.replay) {
            fail(k, "S_k is not the running sum of λ");
        }
        if !close(ck[i], r.c_k, tol.replay) {
            fail(k, "recorded C_k differs from its formula");
        }

        let expected_x = match method {
            MethodKind::SubgradA | MethodKind::Cgm => prev_z.clone(),
            MethodKind::SubgradB => Point(&prev_x.0 + (&prev_z.0 - &prev_x.0) * (r.lambda / s)),
            MethodKind::Fgm if k == 0 => setup.x0().clone(),
            MethodKind::Fgm => Point(&prev_xhat.0 + (&prev_z.0 - &prev_xhat.0) * (r.lambda / s)),
        };
        if !close_points(&expected_x, &r.x, tol.replay) {
            fail(k, "test point does not follow the method's rule");
        }
        let expected_xhat = match method {
            MethodKind::SubgradA if k == 0 => r.x.clone(),
            MethodKind::SubgradA => Point(&prev_xhat.0 + (&r.x.0 - &prev_xhat.0) * (r.lambda / s)),
            MethodKind::SubgradB => r.x.clone(),
            MethodKind::Cgm | MethodKind::Fgm if k == 0 => r.z.clone(),
            MethodKind::Cgm | MethodKind::Fgm => Point(&prev_xhat.0 + (&r.z.0 - &prev_xhat.0) * (r.lambda / s)),
        };
        if !close_points(&expected_xhat, &r.xhat, tol.replay) {
            fail(k, "approximate solution does not follow the averaging rule");
        }

        for (name, p) in [("x", &r.x), ("z", &r.z), ("x̂", &r.xhat)] {
            if !setup.contains(p, tol.feasibility) {
                fail(k, &format!("{name} is infeasible"));
            }
        }

        match problem.query(&r.x) {
            Ok(reply) => {
                let scale = reply.value.abs().max(reply.slope.amax());
                if !close(reply.value, r.value, tol.replay) || (&reply.slope.0 - &r.slope.0).amax() > tol.replay * (1.0 + scale) {
                    fail(k, "recorded oracle reply differs from a fresh query");
                }
                if reply.lipschitz != r.lipschitz || reply.delta != r.delta {
                    fail(k, "recorded L or δ differs from a fresh query");
                }
            }
            Err(_) => fail(k, "oracle query at the test point failed"),
        }
        match setup.dual_norm(&r.slope) {
            Ok(n) if close(n, r.grad_dual_norm, tol.identity) => {}
            _ => fail(k, "recorded subgradient norm differs from the slope"),
        }

        replay = replay.and_then(|state| {
            state.update(r.model, setup, &psi, &r.reply(composite), &r.x, r.lambda, r.beta).ok()
        });
        match &replay {
            Some(state) => {
                if !close_points(&state.minimizer, &r.z, tol.replay) || !close(state.min_value, r.min_psi, tol.replay) {
                    fail(k, "replayed auxiliary function disagrees with recorded z_k or min ψ_k");
                }
            }
            None => fail(k, "auxiliary function could not be replayed"),
        }

        beta_prev = r.beta;
        prev_z = r.z.clone();
        prev_x = r.x.clone();
        prev_xhat = r.xhat.clone();
    }
    Ok(failures)
}

/// Smallest value of `λ<g, x − z> + βξ(z, x) + λ²‖g‖²/(2σβ)` over recorded
/// steps, with `x` the test point and a few sampled points.
pub fn step_inequality_check(trace: &RunTrace, setup: &ProxSetup, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = setup.sigma();
    let mut worst = f64::INFINITY;
    for r in &trace.records {
        let g = &r.slope;
        let norm = setup.dual_norm(g)?;
        let mut points = vec![r.x.clone()];
        points.extend((0..samples).map(|_| setup.sample(&mut rng, 1.0)));
        for x in &points {
            let xi = match setup.bregman(&r.z, x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let value = r.lambda * g.0.dot(&(&x.0 - &r.z.0)) + r.beta * xi + r.lambda * r.lambda * norm * norm / (2.0 * sigma * r.beta);
            worst = worst.min(value);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub k: usize,
    pub c_k: f64,
    /// Residual of `S_k f(x̂_k) <= min ψ_k + C_k`.
    pub residual: f64,
    /// Residual of the method's alternative relation, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_alt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<f64>,
    pub step_condition: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub problem_id: String,
    pub setup_id: String,
    pub method: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<RateEnvelope>,
    pub rows: Vec<CertificateRow>,
    pub consistency_failures: Vec<String>,
    pub step_inequality: f64,
    pub pass: bool,
}

impl Certificate {
    pub fn failing_rows(&self) -> impl Iterator<Item = &CertificateRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn worst_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.residual.min(r.residual_alt.unwrap_or(f64::INFINITY)))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV rate table: `k,gap,bound,envelope,residual,pass`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "gap", "bound", "envelope", "residual", "pass"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                opt(r.gap),
                opt(r.bound),
                opt(r.envelope),
                r.residual.to_string(),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

// corrupted iterates can leave the domain of d; that is a failed certificate, not an error
fn evaluated<T>(rows: Result<Vec<T>>, failures: &mut Vec<String>) -> Option<Vec<T>> {
    rows.map_err(|e| failures.push(format!("certificate could not be evaluated: {e}"))).ok()
}

/// Runs every applicable check. Bounds and envelopes are included when the
/// optimum carries enough information; `envelope` overrides the schedule's default.
pub fn certify(
    trace: &RunTrace,
    problem: &Problem,
    setup: &ProxSetup,
    optimum: &OptimumInfo,
    envelope: Option<RateEnvelope>,
    tol: &Tolerances,
) -> Result<Certificate> {
    let sigma = setup.sigma();
    let ck = compute_ck(trace, sigma)?;
    let relations = relations_for(trace.config.method);
    let primary = check_relation(trace, problem, &ck, Relation::R, tol);
    let alternative = relations
        .iter()
        .find(|r| **r != Relation::R)
        .map(|which| check_relation(trace, problem, &ck, *which, tol));

    let has_f_star = optimum.f_star.is_some() || optimum.x_star.is_some();
    let mut consistency_failures = check_consistency(trace, problem, setup, tol)?;
    let bounds = if has_f_star && (optimum.x_star.is_some() || optimum.d_star_upper.is_some()) {
        evaluated(check_bound(trace, problem, setup, &ck, optimum, tol), &mut consistency_failures)
    } else {
        None
    };
    let envelope = envelope.or_else(|| RateEnvelope::for_trace(trace));
    let rates = match envelope {
        Some(env) if has_f_star && (optimum.x_star.is_some() || !env.needs_x_star()) => {
            evaluated(check_rate(trace, problem, setup, &env, optimum, tol), &mut consistency_failures)
        }
        _ => None,
    };
    let steps = check_step_conditions(trace, sigma);
    let step_inequality = step_inequality_check(trace, setup, 4, 0)?;

    let mut rows = Vec::with_capacity(trace.records.len());
    for (i, r) in trace.records.iter().enumerate() {
        let (residual, slack) = primary[i];
        let alt = alternative.as_ref().map(|a| a[i]);
        let bound = bounds.as_ref().map(|b| b[i]);
        let rate = rates.as_ref().map(|x| x[i]);
        let step_condition = steps.get(i).is_none_or(|s| s.2);
        let pass = residual >= -slack
            && alt.is_none_or(|(res, sl)| res >= -sl)
            && bound.is_none_or(|b| b.pass)
            && rate.is_none_or(|x| x.pass)
            && step_condition;
        rows.push(CertificateRow {
            k: r.k,
            c_k: ck[i],
            residual,
            residual_alt: alt.map(|a| a.0),
            bound: bound.map(|b| b.bound),
            gap: bound.map(|b| b.gap).or(rate.map(|x| x.gap)),
            envelope: rate.map(|x| x.envelope),
            step_condition,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass) && consistency_failures.is_empty() && step_inequality >= -tol.residual_abs;
    Ok(Certificate {
        problem_id: trace.problem_id.clone(),
        setup_id: trace.setup_id.clone(),
        method: trace.config.method,
        envelope,
        rows,
        consistency_failures,
        step_inequality,
        pass,
    })
}

/// Trace corruptions used to test that certificates are not vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Lambda,
    Beta,
    Slope,
    Minimizer,
    LambdaSign,
}

pub const MUTATIONS: [Mutation; 5] =
    [Mutation::Lambda, Mutation::Beta, Mutation::Slope, Mutation::Minimizer, Mutation::LambdaSign];

/// Copy of `trace` with record `k` corrupted by a relative perturbation `factor`.
pub fn mutate(trace: &RunTrace, kind: Mutation, k: usize, factor: f64) -> RunTrace {
    let mut out = trace.clone();
    let Some(r) = out.records.get_mut(k) else { return out };
    match kind {
        Mutation::Lambda => r.lambda *= 1.0 + factor,
        Mutation::Beta => r.beta *= 1.0 + factor,
        Mutation::Slope => r.slope.0 *= 1.0 + factor,
        Mutation::Minimizer => {
            let n = r.z.dim() as f64;
            let spread = r.z.amax().max(1.0 / n);
            r.z.0.iter_mut().enumerate().for_each(|(i, v)| {
                *v += factor * spread * if i % 2 == 0 { 1.0 } else { -1.0 };
            });
        }
        Mutation::LambdaSign => r.lambda = -r.lambda,
    }
    out
}
