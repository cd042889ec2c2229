//! Weight (λ) and scaling (β) parameter schedules and the MD/DA mixing policy.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auxfunc::ModelChoice;
use crate::error::{Error, Result};

thread_local! {
    // β̂_{k} lives at index k + 1
    static BETA_HAT: RefCell<Vec<f64>> = RefCell::new(vec![1.0, 1.0]);
    // λ_k of the Tseng recursion at index k
    static TSENG: RefCell<Vec<f64>> = RefCell::new(vec![1.0]);
}

/// The auxiliary sequence `β̂₋₁ = β̂₀ = 1`, `β̂_{k+1} = β̂_k + 1/β̂_k`.
pub fn beta_hat(k: i64) -> Result<f64> {
    if k < -1 {
        return Err(Error::InvalidSchedule(format!("β̂ is defined for k >= -1, got {k}")));
    }
    let index = (k + 1) as usize;
    Ok(BETA_HAT.with(|memo| {
        let mut memo = memo.borrow_mut();
        while memo.len() <= index {
            let last = *memo.last().expect("memo is seeded");
            memo.push(last + 1.0 / last);
        }
        memo[index]
    }))
}

/// `λ₀ = 1`, `λ_{k+1} = (1 + √(1 + 4λ_k²))/2`.
pub fn tseng_lambda(k: usize) -> f64 {
    TSENG.with(|memo| {
        let mut memo = memo.borrow_mut();
        while memo.len() <= k {
            let last = *memo.last().expect("memo is seeded");
            memo.push(0.5 * (1.0 + (1.0 + 4.0 * last * last).sqrt()));
        }
        memo[k]
    })
}

/// Rule for the weights of the classical mirror-descent schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    Constant { value: f64 },
    /// `λ_k = scale/√(k+1)`.
    InverseSqrt { scale: f64 },
    /// Explicit weights; runs may not exceed their length.
    List { values: Vec<f64> },
}

impl LambdaRule {
    fn lambda(&self, k: usize) -> Result<f64> {
        match self {
            LambdaRule::Constant { value } => Ok(*value),
            LambdaRule::InverseSqrt { scale } => Ok(scale / ((k + 1) as f64).sqrt()),
            LambdaRule::List { values } => values
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidSchedule(format!("weight list has no entry for k = {k}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `λ_k = 1`, `β_k = γβ̂_k`.
    SimpleAverages { gamma: f64 },
    /// `λ_k = 1/‖g_k‖_*`, `β_k = β̂_k/(ρ√σ)`.
    WeightedAverages { rho: f64 },
    /// `λ_k = 1`, `β_k = L/σ`.
    ClassicSmooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    /// `λ_k = (k+1)/2`, `β_k = L/σ`.
    FastSmooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    /// Tseng's weights with `β_k = L/σ`.
    TsengLambda {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    /// `β_k = 1` with weights from `rule`.
    MdmClassic { rule: LambdaRule },
    /// Explicit sequences; `betas[0]` is `β₋₁` and `betas[k+1]` is `β_k`.
    Custom { lambdas: Vec<f64>, betas: Vec<f64> },
}

fn positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(format!("{what} must be positive and finite, got {value}")))
    }
}

impl Schedule {
    /// Checks parameters; custom sequences are validated in full.
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::SimpleAverages { gamma } => positive(*gamma, "gamma"),
            Schedule::WeightedAverages { rho } => positive(*rho, "rho"),
            Schedule::ClassicSmooth { lipschitz } | Schedule::FastSmooth { lipschitz } | Schedule::TsengLambda { lipschitz } => {
                lipschitz.map_or(Ok(()), |l| positive(l, "Lipschitz constant"))
            }
            Schedule::MdmClassic { rule } => match rule {
                LambdaRule::Constant { value } => positive(*value, "lambda"),
                LambdaRule::InverseSqrt { scale } => positive(*scale, "lambda scale"),
                LambdaRule::List { values } => {
                    if values.is_empty() {
                        return Err(Error::InvalidSchedule("weight list is empty".into()));
                    }
                    values.iter().try_for_each(|v| positive(*v, "lambda"))
                }
            },
            Schedule::Custom { lambdas, betas } => {
                if lambdas.is_empty() || betas.len() != lambdas.len() + 1 {
                    return Err(Error::InvalidSchedule(
                        "custom schedule needs n weights and n + 1 scalings (starting at β₋₁)".into(),
                    ));
                }
                lambdas.iter().try_for_each(|v| positive(*v, "lambda"))?;
                betas.iter().try_for_each(|v| positive(*v, "beta"))?;
                for pair in betas.windows(2) {
                    if pair[1] < pair[0] {
                        return Err(Error::DecreasingBeta { previous: pair[0], next: pair[1] });
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `λ_k` needs `‖g_k‖_*`.
    pub fn needs_gradient_norm(&self) -> bool {
        matches!(self, Schedule::WeightedAverages { .. })
    }

    /// Largest iteration count the schedule can serve.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Schedule::Custom { lambdas, .. } => Some(lambdas.len()),
            Schedule::MdmClassic { rule: LambdaRule::List { values } } => Some(values.len()),
            _ => None,
        }
    }

    /// Fills a missing Lipschitz constant from the problem's declared one.
    pub fn resolve(&self, declared: Option<f64>) -> Result<Schedule> {
        self.validate()?;
        let fill = |l: &Option<f64>| -> Result<Option<f64>> {
            match l.or(declared) {
                Some(l) => Ok(Some(l)),
                None => Err(Error::InvalidSchedule("smooth schedule needs a Lipschitz constant".into())),
            }
        };
        Ok(match self {
            Schedule::ClassicSmooth { lipschitz } => Schedule::ClassicSmooth { lipschitz: fill(lipschitz)? },
            Schedule::FastSmooth { lipschitz } => Schedule::FastSmooth { lipschitz: fill(lipschitz)? },
            Schedule::TsengLambda { lipschitz } => Schedule::TsengLambda { lipschitz: fill(lipschitz)? },
            other => other.clone(),
        })
    }

    fn smooth_beta(lipschitz: &Option<f64>, sigma: f64) -> Result<f64> {
        lipschitz
            .map(|l| l / sigma)
            .ok_or_else(|| Error::InvalidSchedule("unresolved Lipschitz constant".into()))
    }

    /// `β_k` for `k >= -1`.
    pub fn beta(&self, k: i64, sigma: f64) -> Result<f64> {
        match self {
            Schedule::SimpleAverages { gamma } => Ok(gamma * beta_hat(k)?),
            Schedule::WeightedAverages { rho } => Ok(beta_hat(k)? / (rho * sigma.sqrt())),
            Schedule::ClassicSmooth { lipschitz } | Schedule::FastSmooth { lipschitz } | Schedule::TsengLambda { lipschitz } => {
                Self::smooth_beta(lipschitz, sigma)
            }
            Schedule::MdmClassic { .. } => Ok(1.0),
            Schedule::Custom { betas, .. } => betas
                .get((k + 1) as usize)
                .copied()
                .ok_or_else(|| Error::InvalidSchedule(format!("custom schedule has no β for k = {k}"))),
        }
    }

    /// `β₋₁`, the scaling of the initial auxiliary function.
    pub fn initial_beta(&self, sigma: f64) -> Result<f64> {
        self.beta(-1, sigma)
    }

    /// `(λ_k, β_k)`; weighted averages require `‖g_k‖_* > 0`.
    pub fn next_params(&self, k: usize, grad_dual_norm: Option<f64>, sigma: f64) -> Result<(f64, f64)> {
        let lambda = match self {
            Schedule::SimpleAverages { .. } | Schedule::ClassicSmooth { .. } => 1.0,
            Schedule::WeightedAverages { .. } => match grad_dual_norm {
                Some(g) if g > 0.0 => 1.0 / g,
                Some(_) => return Err(Error::OptimalPointDetected { k }),
                None => {
                    return Err(Error::InvalidSchedule("weighted averages need the subgradient norm".into()));
                }
            },
            Schedule::FastSmooth { .. } => (k as f64 + 1.0) / 2.0,
            Schedule::TsengLambda { .. } => tseng_lambda(k),
            Schedule::MdmClassic { rule } => rule.lambda(k)?,
            Schedule::Custom { lambdas, .. } => *lambdas
                .get(k)
                .ok_or_else(|| Error::InvalidSchedule(format!("custom schedule has no λ for k = {k}")))?,
        };
        Ok((lambda, self.beta(k as i64, sigma)?))
    }
}

/// Which auxiliary-function update to apply at each step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MixPolicy {
    #[default]
    PureMd,
    PureDa,
    /// Repeats `word` cyclically.
    Pattern { word: Vec<ModelChoice> },
    /// Independent fair coin per step, reproducible from `seed`.
    SeededRandom { seed: u64 },
}

impl MixPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixPolicy::Pattern { word } if word.is_empty() => Err(Error::InvalidSchedule("mix pattern is empty".into())),
            _ => Ok(()),
        }
    }

    pub fn model_choice(&self, k: usize) -> ModelChoice {
        match self {
            MixPolicy::PureMd => ModelChoice::Md,
            MixPolicy::PureDa => ModelChoice::Da,
            MixPolicy::Pattern { word } => word[k % word.len()],
            MixPolicy::SeededRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(k as u64);
                if rng.random_bool(0.5) {
                    ModelChoice::Md
                } else {
                    ModelChoice::Da
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_hat_unfolds() {
        assert_eq!(beta_hat(-1).unwrap(), 1.0);
        assert_eq!(beta_hat(0).unwrap(), 1.0);
        assert_eq!(beta_hat(1).unwrap(), 2.0);
        assert_eq!(beta_hat(2).unwrap(), 2.5);
        assert!((beta_hat(3).unwrap() - 2.9).abs() < 1e-15);
        assert!(beta_hat(-2).is_err());
    }

    #[test]
    fn beta_hat_identity_and_bound() {
        let mut sum = 0.0;
        for k in 0..=20_000i64 {
            sum += 1.0 / beta_hat(k - 1).unwrap();
            let b = beta_hat(k).unwrap();
            assert!((b - sum).abs() <= 1e-9 * b, "k = {k}");
            let root = (2.0 * k as f64 + 1.0).sqrt();
            assert!(root <= b && b <= 1.0 / (1.0 + 3f64.sqrt()) + root, "k = {k}");
        }
    }

    #[test]
    fn named_schedule_examples() {
        let simple = Schedule::SimpleAverages { gamma: 1.0 };
        assert_eq!(simple.next_params(2, None, 1.0).unwrap(), (1.0, 2.5));
        let fast = Schedule::FastSmooth { lipschitz: Some(4.0) };
        assert_eq!(fast.next_params(3, None, 1.0).unwrap(), (2.0, 4.0));
        assert_eq!(tseng_lambda(0), 1.0);
        assert!((tseng_lambda(1) - 1.618_033_988_749_895).abs() < 1e-15);
        let l2 = 0.5 * (1.0 + (1.0 + 4.0 * tseng_lambda(1).powi(2)).sqrt());
        assert_eq!(tseng_lambda(2), l2);
        assert!((l2 - 2.193_527).abs() < 1e-6);
    }

    #[test]
    fn tseng_weights_sum_to_square() {
        let mut s = 0.0;
        for k in 0..5000 {
            let l = tseng_lambda(k);
            s += l;
            assert!((s - l * l).abs() <= 1e-8 * s, "k = {k}");
        }
    }

    #[test]
    fn fast_smooth_step_ratio() {
        let mut s = 0.0;
        for k in 0..100usize {
            let (l, _) = Schedule::FastSmooth { lipschitz: Some(1.0) }.next_params(k, None, 1.0).unwrap();
            s += l;
            assert!((s / (l * l) - (k as f64 + 2.0) / (k as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_averages_detects_zero_subgradient() {
        let w = Schedule::WeightedAverages { rho: 2.0 };
        assert!(matches!(w.next_params(4, Some(0.0), 1.0), Err(Error::OptimalPointDetected { k: 4 })));
        assert_eq!(w.next_params(1, Some(4.0), 1.0).unwrap(), (0.25, 1.0));
        assert_eq!(w.initial_beta(1.0).unwrap(), 0.5);
    }

    #[test]
    fn custom_schedule_validation() {
        let bad = Schedule::Custom { lambdas: vec![1.0, 1.0], betas: vec![1.0, 2.0, 1.5] };
        assert!(matches!(bad.validate(), Err(Error::DecreasingBeta { .. })));
        let short = Schedule::Custom { lambdas: vec![1.0], betas: vec![1.0] };
        assert!(short.validate().is_err());
        let ok = Schedule::Custom { lambdas: vec![0.5, 1.0], betas: vec![1.0, 1.0, 3.0] };
        ok.validate().unwrap();
        assert_eq!(ok.initial_beta(1.0).unwrap(), 1.0);
        assert_eq!(ok.next_params(1, None, 1.0).unwrap(), (1.0, 3.0));
        assert!(ok.next_params(2, None, 1.0).is_err());
    }

    #[test]
    fn resolve_fills_lipschitz() {
        let s = Schedule::ClassicSmooth { lipschitz: None };
        assert!(s.resolve(None).is_err());
        assert_eq!(s.resolve(Some(3.0)).unwrap(), Schedule::ClassicSmooth { lipschitz: Some(3.0) });
        let pinned = Schedule::TsengLambda { lipschitz: Some(2.0) };
        assert_eq!(pinned.resolve(Some(3.0)).unwrap(), pinned);
    }

    #[test]
    fn mix_policies() {
        assert_eq!(MixPolicy::PureMd.model_choice(17), ModelChoice::Md);
        let alt = MixPolicy::Pattern { word: vec![ModelChoice::Md, ModelChoice::Da] };
        assert_eq!(alt.model_choice(3), ModelChoice::Da);
        assert_eq!(alt.model_choice(4), ModelChoice::Md);
        let random = MixPolicy::SeededRandom { seed: 7 };
        let word: Vec<_> = (0..10).map(|k| random.model_choice(k)).collect();
        assert_eq!(word, (0..10).map(|k| random.model_choice(k)).collect::<Vec<_>>());
        assert!(MixPolicy::Pattern { word: vec![] }.validate().is_err());
    }

    #[test]
    fn schedule_json_shape() {
        let s: Schedule = serde_json::from_str(r#"{"kind":"simple_averages","gamma":1.5}"#).unwrap();
        assert_eq!(s, Schedule::SimpleAverages { gamma: 1.5 });
        let m: MixPolicy = serde_json::from_str(r#"{"policy":"pattern","word":["md","da"]}"#).unwrap();
        assert_eq!(m, MixPolicy::Pattern { word: vec![ModelChoice::Md, ModelChoice::Da] });
        let c: Schedule =
            serde_json::from_str(r#"{"kind":"mdm_classic","rule":{"rule":"inverse_sqrt","scale":0.5}}"#).unwrap();
        assert_eq!(c.next_params(3, None, 1.0).unwrap(), (0.25, 1.0));
    }
}
