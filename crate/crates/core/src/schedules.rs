//! Closed-form schedules: exploration rate, learning rate, loss bound,
//! entering times and confidence level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{FoeError, Result};

/// An exact nonnegative rational exponent such as `3/4`.
///
/// Serialized as the string `"p/q"` (or `"p"` when `q = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u32,
    den: u32,
}

impl Rational {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(FoeError::InvalidParameter("rational with zero denominator".into()));
        }
        Ok(Rational { num, den })
    }

    pub const fn integer(n: u32) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = FoeError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FoeError::InvalidParameter(format!("cannot parse rational {s:?}"));
        match s.trim().split_once('/') {
            Some((n, d)) => {
                Rational::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?)
            }
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(n) => Ok(Rational::integer(n)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How the per-step loss bound `B_t` grows with the master clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossBoundRegime {
    /// `B_t = 1`.
    ConstantOne,
    /// `B_t = t^beta`.
    Power { beta: Rational },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_exploration")]
    pub exploration_exponent: Rational,
    #[serde(default = "default_learning")]
    pub learning_exponent: Rational,
    #[serde(default = "default_entering")]
    pub entering_exponent: u32,
    #[serde(default = "default_regime")]
    pub loss_bound_regime: LossBoundRegime,
    #[serde(default = "default_confidence")]
    pub confidence_exponent: Rational,
}

fn default_exploration() -> Rational {
    Rational { num: 1, den: 4 }
}
fn default_learning() -> Rational {
    Rational { num: 3, den: 4 }
}
fn default_entering() -> u32 {
    8
}
fn default_regime() -> LossBoundRegime {
    LossBoundRegime::ConstantOne
}
fn default_confidence() -> Rational {
    Rational::integer(2)
}

impl Default for ScheduleConfig {
    /// Bounded-loss setting: `gamma_t = t^{-1/4}`, `eta_t = t^{-3/4}`,
    /// `B_t = 1`, entering exponent 8, `delta_T = T^{-2}`.
    fn default() -> Self {
        ScheduleConfig {
            exploration_exponent: default_exploration(),
            learning_exponent: default_learning(),
            entering_exponent: default_entering(),
            loss_bound_regime: default_regime(),
            confidence_exponent: default_confidence(),
        }
    }
}

impl ScheduleConfig {
    /// Growing-loss setting used by the reactive wrapper: `B_t = t^{1/16}`
    /// (floored into block lengths) and entering exponent 16.
    pub fn reactive() -> Self {
        ScheduleConfig {
            entering_exponent: 16,
            loss_bound_regime: LossBoundRegime::Power { beta: Rational { num: 1, den: 16 } },
            ..ScheduleConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |r: Rational| r.num > 0 && r.num < r.den;
        if !open_unit(self.exploration_exponent) {
            return Err(FoeError::InvalidParameter(format!(
                "exploration exponent {} not in (0,1)",
                self.exploration_exponent
            )));
        }
        if !open_unit(self.learning_exponent) {
            return Err(FoeError::InvalidParameter(format!(
                "learning exponent {} not in (0,1)",
                self.learning_exponent
            )));
        }
        if self.entering_exponent < 1 {
            return Err(FoeError::InvalidParameter("entering exponent must be >= 1".into()));
        }
        if self.confidence_exponent.num == 0 {
            return Err(FoeError::InvalidParameter("confidence exponent must be positive".into()));
        }
        Ok(())
    }

    /// `gamma_t = t^{-exploration_exponent}`.
    pub fn exploration_rate(&self, t: u64) -> Result<f64> {
        Ok(clock(t)?.powf(-self.exploration_exponent.value()))
    }

    /// `eta_t = t^{-learning_exponent}`.
    pub fn learning_rate(&self, t: u64) -> Result<f64> {
        Ok(clock(t)?.powf(-self.learning_exponent.value()))
    }

    /// `B_t` before any flooring.
    pub fn loss_bound(&self, t: u64) -> Result<f64> {
        let t = clock(t)?;
        Ok(match self.loss_bound_regime {
            LossBoundRegime::ConstantOne => 1.0,
            LossBoundRegime::Power { beta } => t.powf(beta.value()),
        })
    }

    /// Number of basic steps in the block of master step `t`: `floor(B_t)`,
    /// never less than one.
    pub fn block_length(&self, t: u64) -> Result<u64> {
        Ok((self.loss_bound(t)?.floor() as u64).max(1))
    }

    /// `ceil((w / w_max)^{-alpha})`, saturating at `u64::MAX` for experts
    /// that can never enter.
    pub fn entering_time(&self, w: f64, w_max: f64) -> Result<u64> {
        entering_time(w, w_max, self.entering_exponent)
    }

    /// `delta_T = T^{-confidence_exponent}`.
    pub fn confidence(&self, horizon: u64) -> Result<f64> {
        if horizon < 2 {
            return Err(FoeError::InvalidParameter(format!(
                "confidence needs T >= 2, got {horizon}"
            )));
        }
        Ok((horizon as f64).powf(-self.confidence_exponent.value()))
    }
}

fn clock(t: u64) -> Result<f64> {
    if t == 0 {
        Err(FoeError::InvalidClock(t))
    } else {
        Ok(t as f64)
    }
}

pub fn entering_time(w: f64, w_max: f64, alpha: u32) -> Result<u64> {
    if !(w > 0.0 && w <= w_max && w_max <= 1.0 + 1e-9) {
        return Err(FoeError::InvalidParameter(format!(
            "entering time needs 0 < w <= w_max <= 1, got w = {w}, w_max = {w_max}"
        )));
    }
    let tau = (w / w_max).powi(-(alpha as i32)).ceil();
    if tau >= u64::MAX as f64 || !tau.is_finite() {
        Ok(u64::MAX)
    } else {
        Ok((tau as u64).max(1))
    }
}

/// `B_hat_t = B_t / (gamma_t * min active weight)`: the largest estimate
/// the master can ever assign at step `t`.
pub fn estimated_loss_bound(loss_bound: f64, gamma: f64, min_active_weight: Option<f64>) -> Result<f64> {
    let w = min_active_weight.ok_or_else(|| {
        FoeError::Contract("pool has no active expert; cannot bound estimated losses".into())
    })?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(FoeError::InvalidParameter(format!("exploration rate {gamma} not in (0,1]")));
    }
    if w.is_nan() || w <= 0.0 {
        return Err(FoeError::InvalidParameter(format!("min active weight {w} not positive")));
    }
    Ok(loss_bound / (gamma * w))
}
