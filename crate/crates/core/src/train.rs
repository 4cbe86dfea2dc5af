//! Configuration, traces and the gradient-descent loop shared by the
//! neural classifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, HEALTHY};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    /// Training mean squared error at which to stop.
    pub goal: f64,
    pub split: SplitRatios,
    pub max_fail: usize,
    /// Initial weights are uniform in `±init_scale/sqrt(fan_in)`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            epochs: 1000,
            learning_rate: 0.05,
            hidden: vec![20, 30],
            goal: 1e-5,
            split: SplitRatios::default(),
            max_fail: 6,
            init_scale: 0.25,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let r = self.split.as_array();
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::parameter(format!("split ratios {r:?} must be non-negative and sum to 1")));
        }
        if self.split.train <= 0.0 || self.split.val <= 0.0 {
            return Err(Error::parameter("train and validation ratios must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::parameter("hidden layer sizes must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::parameter("learning rate must be positive"));
        }
        if self.epochs == 0 || self.max_fail == 0 {
            return Err(Error::parameter("epochs and max_fail must be >= 1"));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::parameter("init_scale must be positive"));
        }
        if !(self.goal >= 0.0) {
            return Err(Error::parameter("goal must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Goal,
    EarlyStop,
    MaxEpochs,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Goal => "goal",
            StopReason::EarlyStop => "early-stop",
            StopReason::MaxEpochs => "max-epochs",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_error: f64,
    pub val_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    pub stop: StopReason,
    /// Epoch whose weights were kept (lowest validation error).
    pub best_epoch: usize,
    pub seconds: f64,
}

impl TrainingTrace {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }
}

/// Parameters trained by full-batch gradient descent. The gradient has
/// the same shape as the parameters.
pub(crate) trait Descent: Clone {
    type Data: ?Sized;

    fn loss(&self, data: &Self::Data) -> f64;

    fn loss_and_grad(&self, data: &Self::Data) -> (f64, Self);

    fn params_mut(&mut self) -> Vec<&mut f64>;

    fn params(&self) -> Vec<f64>;

    fn step(&mut self, grad: &Self, lr: f64) {
        for (p, g) in self.params_mut().into_iter().zip(grad.params()) {
            *p -= lr * g;
        }
    }
}

/// Runs the descent loop and returns the parameters with the lowest
/// validation error seen.
///
/// Each epoch evaluates the current parameters, then stops on the goal,
/// on `max_fail` consecutive rises of the validation error, or after the
/// last epoch; otherwise it takes one step.
pub(crate) fn descend<P: Descent>(
    mut params: P,
    train: &P::Data,
    val: &P::Data,
    cfg: &MlpConfig,
) -> Result<(P, TrainingTrace)> {
    let mut records = Vec::new();
    let mut best = (params.clone(), f64::INFINITY, 0usize);
    let mut previous: Option<f64> = None;
    let mut fails = 0;
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.epochs {
        let (train_error, grad) = params.loss_and_grad(train);
        let val_error = params.loss(val);
        if !train_error.is_finite() || !val_error.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        records.push(EpochRecord {
            epoch,
            train_error,
            val_error,
        });
        if val_error < best.1 {
            best = (params.clone(), val_error, epoch);
        }
        if train_error <= cfg.goal {
            stop = StopReason::Goal;
            break;
        }
        if previous.is_some_and(|p| val_error > p) {
            fails += 1;
        } else {
            fails = 0;
        }
        previous = Some(val_error);
        if fails >= cfg.max_fail {
            stop = StopReason::EarlyStop;
            break;
        }
        params.step(&grad, cfg.learning_rate);
    }
    log::debug!(
        "descent stopped after {} epochs ({stop}), best epoch {}",
        records.len(),
        best.2
    );
    Ok((
        best.0,
        TrainingTrace {
            epochs: records,
            stop,
            best_epoch: best.2,
            seconds: 0.0,
        },
    ))
}

/// Prediction counts keyed by (predicted, actual).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_healthy: usize,
    pub true_faulty: usize,
    pub false_healthy: usize,
    pub false_faulty: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_healthy + self.true_faulty + self.false_healthy + self.false_faulty
    }

    pub fn correct(&self) -> usize {
        self.true_healthy + self.true_faulty
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Percent correct.
    pub accuracy: f64,
    pub confusion: Confusion,
}

pub fn evaluate_predictions(predicted: &[u8], actual: &[u8]) -> Result<Evaluation> {
    if actual.is_empty() {
        return Err(Error::parameter("cannot evaluate on an empty test set"));
    }
    if predicted.len() != actual.len() {
        return Err(Error::Shape {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p == HEALTHY, a == HEALTHY) {
            (true, true) => c.true_healthy += 1,
            (false, false) => c.true_faulty += 1,
            (true, false) => c.false_healthy += 1,
            (false, true) => c.false_faulty += 1,
        }
    }
    Ok(Evaluation {
        accuracy: 100.0 * c.correct() as f64 / c.total() as f64,
        confusion: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar parameter with a scripted validation series.
    #[derive(Clone, Debug)]
    struct Scripted {
        step: f64,
    }

    impl Descent for Scripted {
        type Data = Vec<f64>;

        fn loss(&self, series: &Vec<f64>) -> f64 {
            series[self.step as usize]
        }

        fn loss_and_grad(&self, _: &Vec<f64>) -> (f64, Self) {
            (1.0, Scripted { step: -1.0 })
        }

        fn params_mut(&mut self) -> Vec<&mut f64> {
            vec![&mut self.step]
        }

        fn params(&self) -> Vec<f64> {
            vec![self.step]
        }
    }

    #[test]
    fn early_stop_restores_minimum() {
        let val = vec![5.0, 3.0, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 1.0, 1.0];
        let cfg = MlpConfig {
            learning_rate: 1.0,
            goal: 0.0,
            ..MlpConfig::default()
        };
        let (p, trace) = descend(Scripted { step: 0.0 }, &vec![], &val, &cfg).unwrap();
        assert_eq!(trace.stop, StopReason::EarlyStop);
        assert_eq!(trace.epochs.len(), 9);
        assert_eq!(trace.best_epoch, 3);
        assert_eq!(p.step, 2.0);
    }

    #[test]
    fn goal_stops_at_first_epoch() {
        let cfg = MlpConfig {
            goal: 2.0,
            ..MlpConfig::default()
        };
        let (_, trace) = descend(Scripted { step: 0.0 }, &vec![], &vec![1.0], &cfg).unwrap();
        assert_eq!(trace.stop, StopReason::Goal);
        assert_eq!(trace.epochs.len(), 1);
    }

    #[test]
    fn non_finite_error_names_epoch() {
        let cfg = MlpConfig {
            learning_rate: 1.0,
            goal: 0.0,
            ..MlpConfig::default()
        };
        let err = descend(Scripted { step: 0.0 }, &vec![], &vec![1.0, 0.5, f64::NAN], &cfg).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { epoch: 3 }));
    }

    #[test]
    fn confusion_counts() {
        let e = evaluate_predictions(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(e.accuracy, 50.0);
        assert_eq!(e.confusion.total(), 4);
        assert_eq!(e.confusion.false_healthy, 1);
        assert!(evaluate_predictions(&[], &[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MlpConfig::default().validate().is_ok());
        let bad = MlpConfig {
            split: SplitRatios {
                train: 0.7,
                val: 0.2,
                test: 0.2,
            },
            ..MlpConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MlpConfig {
            hidden: vec![0],
            ..MlpConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
