//! Backpropagation multilayer perceptron: tansig hidden layers, a single
//! logsig output scoring the healthy class, and full-batch gradient
//! descent on the mean squared error with validation early stopping.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::ratio_split;
use crate::layers::{backward, check_stack, forward, random_stack, read_layers, write_layers, Buffers, Lines};
use crate::rng::{derive_seed, seeded};
use crate::samples::{Samples, Scaler};
use crate::train::{descend, evaluate_predictions, Descent, Evaluation};
use crate::{Error, MlpConfig, Result, TrainingTrace};

pub use crate::layers::{logsig, tansig, Activation, Layer};

/// Score threshold for the healthy class.
pub const THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    /// Standardization expected by [`MlpModel::forward`], when known.
    pub scaler: Option<Scaler>,
    pub trace: Option<TrainingTrace>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<MlpModel> {
        if layers.is_empty() {
            return Err(Error::parameter("a network needs at least one layer"));
        }
        check_stack(&layers)?;
        if layers.last().map(|l| l.outputs) != Some(1) {
            return Err(Error::parameter("the output layer must have one neuron"));
        }
        Ok(MlpModel {
            layers,
            scaler: None,
            trace: None,
        })
    }

    /// Freshly initialized network for `inputs` features.
    pub fn init(inputs: usize, cfg: &MlpConfig) -> MlpModel {
        let mut rng = seeded(derive_seed(cfg.seed, &[0]));
        MlpModel {
            layers: random_stack(inputs, &cfg.hidden, Activation::Logsig, cfg.init_scale, &mut rng),
            scaler: None,
            trace: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.inputs() {
            return Err(Error::Shape {
                expected: self.inputs(),
                found: x.len(),
            });
        }
        let mut buf = Buffers::new(&self.layers);
        forward(&self.layers, x, &mut buf);
        Ok(buf.output()[0])
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.forward(x)? >= THRESHOLD))
    }

    pub fn predict_all(&self, data: &Samples) -> Result<Vec<u8>> {
        data.rows().iter().map(|r| self.predict(r)).collect()
    }

    pub fn evaluate(&self, test: &Samples) -> Result<Evaluation> {
        evaluate_predictions(&self.predict_all(test)?, test.labels())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    fn check_width(&self, data: &Samples) -> Result<()> {
        if data.width() != self.inputs() || data.is_empty() {
            return Err(Error::Shape {
                expected: self.inputs(),
                found: data.width(),
            });
        }
        Ok(())
    }

    /// Mean squared error over `data`.
    pub fn loss(&self, data: &Samples) -> Result<f64> {
        self.check_width(data)?;
        Ok(Stack(self.layers.clone()).loss(data))
    }

    /// Mean squared error and its backpropagated gradient, one layer of
    /// partial derivatives per model layer.
    pub fn gradient(&self, data: &Samples) -> Result<(f64, Vec<Layer>)> {
        self.check_width(data)?;
        let (loss, grad) = Stack(self.layers.clone()).loss_and_grad(data);
        Ok((loss, grad.0))
    }

    /// Plain-text model with 17 significant digits per weight.
    pub fn save(&self) -> String {
        let mut out = String::from("mlp 1\n");
        write_layers(&mut out, "", &self.layers);
        write_scaler(&mut out, self.scaler.as_ref());
        out
    }

    pub fn load(text: &str) -> Result<MlpModel> {
        let mut lines = Lines::new(text);
        lines.expect("mlp")?;
        let mut model = MlpModel::new(read_layers(&mut lines, "")?)?;
        model.scaler = read_scaler(&mut lines)?;
        Ok(model)
    }
}

pub(crate) fn write_scaler(out: &mut String, scaler: Option<&Scaler>) {
    use crate::layers::fmt_values;
    use std::fmt::Write as _;
    match scaler {
        None => out.push_str("scaler none\n"),
        Some(s) => {
            let _ = writeln!(out, "scaler {}", s.width());
            let _ = writeln!(out, "mean {}", fmt_values(&s.mean));
            let _ = writeln!(out, "std {}", fmt_values(&s.std));
            let flags: Vec<&str> = s.constant.iter().map(|&c| if c { "1" } else { "0" }).collect();
            let _ = writeln!(out, "constant {}", flags.join(" "));
        }
    }
}

pub(crate) fn read_scaler(lines: &mut Lines) -> Result<Option<Scaler>> {
    use crate::layers::parse_values;
    let head = lines.expect("scaler")?;
    if head == "none" {
        return Ok(None);
    }
    let width: usize = head
        .parse()
        .map_err(|_| Error::Config("model file: bad scaler width".into()))?;
    let mean = parse_values(lines.expect("mean")?)?;
    let std = parse_values(lines.expect("std")?)?;
    let constant: Vec<bool> = lines.expect("constant")?.split_whitespace().map(|s| s == "1").collect();
    if mean.len() != width || std.len() != width || constant.len() != width {
        return Err(Error::Config("model file: scaler lengths disagree".into()));
    }
    Ok(Some(Scaler { mean, std, constant }))
}

/// Layer stack under training.
#[derive(Clone, Debug)]
pub(crate) struct Stack(pub Vec<Layer>);

impl Descent for Stack {
    type Data = Samples;

    fn loss(&self, data: &Samples) -> f64 {
        let mut buf = Buffers::new(&self.0);
        let sum: f64 = data
            .rows()
            .iter()
            .zip(data.labels())
            .map(|(x, &t)| {
                forward(&self.0, x, &mut buf);
                (buf.output()[0] - f64::from(t)).powi(2)
            })
            .sum();
        sum / data.len() as f64
    }

    fn loss_and_grad(&self, data: &Samples) -> (f64, Stack) {
        let n = data.len() as f64;
        let mut grads: Vec<Layer> = self.0.iter().map(Layer::zeroed).collect();
        let mut buf = Buffers::new(&self.0);
        let mut sum = 0.0;
        for (x, &t) in data.rows().iter().zip(data.labels()) {
            forward(&self.0, x, &mut buf);
            let e = buf.output()[0] - f64::from(t);
            sum += e * e;
            backward(&self.0, &mut buf, &[2.0 * e / n], &mut grads);
        }
        (sum / n, Stack(grads))
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        self.0.iter_mut().flat_map(Layer::params_mut).collect()
    }

    fn params(&self) -> Vec<f64> {
        self.0.iter().flat_map(Layer::params).copied().collect()
    }
}

/// Trains on `data`, carving train/validation/test rows with the
/// configured ratios. Test rows are left unused.
pub fn train(data: &Samples, cfg: &MlpConfig) -> Result<MlpModel> {
    let (train_rows, val_rows) = split_rows(data.len(), cfg)?;
    train_with_split(&data.subset(&train_rows), &data.subset(&val_rows), cfg)
}

pub(crate) fn split_rows(n: usize, cfg: &MlpConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    cfg.validate()?;
    let mut groups = ratio_split(n, &cfg.split.as_array(), derive_seed(cfg.seed, &[1]))?;
    groups.truncate(2);
    let val = groups.pop().expect("validation group");
    let train = groups.pop().expect("training group");
    if train.is_empty() || val.is_empty() {
        return Err(Error::parameter(format!("{n} rows are too few to split")));
    }
    Ok((train, val))
}

pub fn train_with_split(train: &Samples, val: &Samples, cfg: &MlpConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::parameter("training and validation sets must be non-empty"));
    }
    if train.width() != val.width() {
        return Err(Error::Shape {
            expected: train.width(),
            found: val.width(),
        });
    }
    let start = Instant::now();
    let init = MlpModel::init(train.width(), cfg);
    let (Stack(layers), mut trace) = descend(Stack(init.layers), train, val, cfg)?;
    trace.seconds = start.elapsed().as_secs_f64();
    Ok(MlpModel {
        layers,
        scaler: None,
        trace: Some(trace),
    })
}
