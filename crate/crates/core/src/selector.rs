//! Single-trial success model for the minimal solvers and the rule-based
//! solver choice built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::solvers::SolverKind;

/// Correspondence and depth density of the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Sparse correspondences, sparse depth.
    Scsd,
    /// Dense correspondences, sparse depth.
    Dcsd,
    /// Dense correspondences, dense depth.
    Dcdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SelectorError {
    #[error("dense inlier rate required in this setting")]
    MissingDenseRate,
    #[error("the data meets neither solver's minimum")]
    NoViableSolver,
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentProfile {
    lambda: f64,
    gamma: f64,
    lambda_d: Option<f64>,
    setting: Setting,
}

fn check_rate(r: f64) -> Result<f64, SelectorError> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(SelectorError::InvalidProfile("rates must lie in [0, 1]"))
    }
}

impl EnvironmentProfile {
    pub fn new(
        lambda: f64,
        gamma: f64,
        lambda_d: Option<f64>,
        setting: Setting,
    ) -> Result<Self, SelectorError> {
        check_rate(lambda)?;
        check_rate(gamma)?;
        if let Some(ld) = lambda_d {
            check_rate(ld)?;
        }
        match (setting, lambda_d) {
            (Setting::Scsd, Some(_)) => Err(SelectorError::InvalidProfile(
                "sparse setting has no dense rate",
            )),
            (Setting::Dcsd | Setting::Dcdd, None) => Err(SelectorError::MissingDenseRate),
            _ => Ok(Self {
                lambda,
                gamma,
                lambda_d,
                setting,
            }),
        }
    }

    pub fn scsd(lambda: f64, gamma: f64) -> Result<Self, SelectorError> {
        Self::new(lambda, gamma, None, Setting::Scsd)
    }

    pub fn dcsd(lambda: f64, gamma: f64, lambda_d: f64) -> Result<Self, SelectorError> {
        Self::new(lambda, gamma, Some(lambda_d), Setting::Dcsd)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda_d(&self) -> Option<f64> {
        self.lambda_d
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    /// Inlier rate of the correspondence that pairs with the depth match.
    fn partner_rate(&self) -> Result<f64, SelectorError> {
        match self.setting {
            Setting::Dcsd => self.lambda_d.ok_or(SelectorError::MissingDenseRate),
            // dense depth raises gamma; the partner is still a sparse match
            Setting::Scsd | Setting::Dcdd => Ok(self.lambda),
        }
    }
}

/// Probability that one random minimal sample is all-inlier with reliable depth.
pub fn trial_success_probability(
    profile: &EnvironmentProfile,
    solver: SolverKind,
) -> Result<f64, SelectorError> {
    let depth_match = profile.lambda * profile.gamma;
    Ok(match solver {
        SolverKind::OneP1DP | SolverKind::MC1P1DP => profile.partner_rate()? * depth_match,
        SolverKind::TwoDP => depth_match * depth_match,
    })
}

pub const MIN_EMPIRICAL_SAMPLES: usize = 1000;

/// Monte-Carlo estimate of [`trial_success_probability`] under the same
/// Bernoulli model.
///
/// Each sample draws four uniforms in a fixed order, so profiles evaluated
/// with the same seed share their random numbers.
pub fn empirical_trial_success(
    profile: &EnvironmentProfile,
    solver: SolverKind,
    n_samples: usize,
    seed: u64,
) -> Result<f64, SelectorError> {
    if n_samples < MIN_EMPIRICAL_SAMPLES {
        return Err(SelectorError::TooFewSamples {
            min: MIN_EMPIRICAL_SAMPLES,
            got: n_samples,
        });
    }
    let partner = profile.partner_rate()?;
    let (lambda, gamma) = (profile.lambda, profile.gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let u: [f64; 4] = rng.random();
        let first = u[0] < lambda && u[1] < gamma;
        let ok = match solver {
            SolverKind::OneP1DP | SolverKind::MC1P1DP => first && u[2] < partner,
            SolverKind::TwoDP => first && u[2] < lambda && u[3] < gamma,
        };
        hits += usize::from(ok);
    }
    Ok(hits as f64 / n_samples as f64)
}

/// What the selector sees of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionInput {
    pub reliable_dps: usize,
    /// All correspondences, with or without depth.
    pub total: usize,
    pub setting: Setting,
    /// Estimated sparse and dense inlier rates, when known.
    pub lambda_hat: Option<f64>,
    pub lambda_d_hat: Option<f64>,
}

impl SelectionInput {
    pub fn new(reliable_dps: usize, total: usize) -> Self {
        Self {
            reliable_dps,
            total,
            setting: Setting::Scsd,
            lambda_hat: None,
            lambda_d_hat: None,
        }
    }

    pub fn gamma_hat(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.reliable_dps as f64 / self.total as f64
        }
    }
}

pub trait SolverSelector {
    fn select(&self, input: &SelectionInput) -> Result<SolverKind, SelectorError>;
}

pub const DEFAULT_TAU: f64 = 0.6;

/// Picks 2DP once reliable depth is plentiful, 1P1DP otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleSelector {
    pub tau: f64,
}

impl Default for RuleSelector {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

impl SolverSelector for RuleSelector {
    fn select(&self, input: &SelectionInput) -> Result<SolverKind, SelectorError> {
        select_solver(input, self.tau)
    }
}

pub fn select_solver(input: &SelectionInput, tau: f64) -> Result<SolverKind, SelectorError> {
    let one_ok = input.reliable_dps >= 1 && input.total >= 2;
    let two_ok = input.reliable_dps >= 2;
    match (one_ok, two_ok) {
        (false, false) => return Err(SelectorError::NoViableSolver),
        (true, false) => return Ok(SolverKind::OneP1DP),
        (false, true) => return Ok(SolverKind::TwoDP),
        (true, true) => {}
    }
    let gamma = input.gamma_hat();
    if let (Setting::Dcsd, Some(lambda), Some(lambda_d)) =
        (input.setting, input.lambda_hat, input.lambda_d_hat)
    {
        let profile = EnvironmentProfile::dcsd(lambda, gamma, lambda_d)?;
        let one = trial_success_probability(&profile, SolverKind::OneP1DP)?;
        let two = trial_success_probability(&profile, SolverKind::TwoDP)?;
        // ties go to 2DP for its stronger constraints
        return Ok(if one > two {
            SolverKind::OneP1DP
        } else {
            SolverKind::TwoDP
        });
    }
    Ok(if gamma >= tau {
        SolverKind::TwoDP
    } else {
        SolverKind::OneP1DP
    })
}
