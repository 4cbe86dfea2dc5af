//! Dense layers shared by the perceptron and the rough network.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tansig,
    Logsig,
    Purelin,
}

pub fn logsig(n: f64) -> f64 {
    1.0 / (1.0 + (-n).exp())
}

/// Hyperbolic tangent in the `2 / (1 + e^(-2n)) - 1` form.
pub fn tansig(n: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * n).exp()) - 1.0
}

impl Activation {
    pub fn apply(self, n: f64) -> f64 {
        match self {
            Activation::Tansig => tansig(n),
            Activation::Logsig => logsig(n),
            Activation::Purelin => n,
        }
    }

    /// Derivative expressed through the activation's own output.
    pub fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Tansig => 1.0 - a * a,
            Activation::Logsig => a * (1.0 - a),
            Activation::Purelin => 1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Tansig => "tansig",
            Activation::Logsig => "logsig",
            Activation::Purelin => "purelin",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Activation> {
        match tag {
            "tansig" => Some(Activation::Tansig),
            "logsig" => Some(Activation::Logsig),
            "purelin" => Some(Activation::Purelin),
            _ => None,
        }
    }
}

/// `a = f(W x + b)` with `W` stored row-major, `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Layer {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            activation,
        }
    }

    /// Uniform in `±scale/sqrt(inputs)`, biases included.
    pub(crate) fn random(inputs: usize, outputs: usize, activation: Activation, scale: f64, rng: &mut Rng) -> Layer {
        let r = scale / (inputs as f64).sqrt();
        let mut draw = |k: usize| (0..k).map(|_| rng.random_range(-r..=r)).collect::<Vec<f64>>();
        let weights = draw(inputs * outputs);
        let biases = draw(outputs);
        Layer {
            inputs,
            outputs,
            weights,
            biases,
            activation,
        }
    }

    pub fn net_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * self.inputs..(j + 1) * self.inputs];
            *o = self.biases[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        self.net_into(x, out);
        for o in out.iter_mut() {
            *o = self.activation.apply(*o);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    pub(crate) fn zeroed(&self) -> Layer {
        Layer::zeros(self.inputs, self.outputs, self.activation)
    }
}

/// `inputs -> hidden... -> 1`, tansig hidden layers.
pub(crate) fn random_stack(
    inputs: usize,
    hidden: &[usize],
    output: Activation,
    scale: f64,
    rng: &mut Rng,
) -> Vec<Layer> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut width = inputs;
    for &h in hidden {
        layers.push(Layer::random(width, h, Activation::Tansig, scale, rng));
        width = h;
    }
    layers.push(Layer::random(width, 1, output, scale, rng));
    layers
}

pub(crate) fn check_stack(layers: &[Layer]) -> Result<()> {
    for pair in layers.windows(2) {
        if pair[0].outputs != pair[1].inputs {
            return Err(Error::Shape {
                expected: pair[0].outputs,
                found: pair[1].inputs,
            });
        }
    }
    Ok(())
}

/// Activation buffers for one pass through a stack; `acts[0]` is the input.
pub(crate) struct Buffers {
    pub acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Buffers {
    pub fn new(layers: &[Layer]) -> Buffers {
        let mut acts = vec![vec![0.0; layers[0].inputs]];
        acts.extend(layers.iter().map(|l| vec![0.0; l.outputs]));
        let deltas = acts.clone();
        Buffers { acts, deltas }
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty stack")
    }

    /// Gradient w.r.t. the stack input, valid after [`backward`].
    pub fn input_gradient(&self) -> &[f64] {
        &self.deltas[0]
    }
}

pub(crate) fn forward(layers: &[Layer], x: &[f64], buf: &mut Buffers) {
    buf.acts[0].copy_from_slice(x);
    for (l, layer) in layers.iter().enumerate() {
        let (done, rest) = buf.acts.split_at_mut(l + 1);
        layer.forward_into(&done[l], &mut rest[0]);
    }
}

/// Accumulates into `grads` given `d_out = dE/d(output activations)`.
pub(crate) fn backward(layers: &[Layer], buf: &mut Buffers, d_out: &[f64], grads: &mut [Layer]) {
    let last = layers.len();
    buf.deltas[last].copy_from_slice(d_out);
    for l in (0..last).rev() {
        let layer = &layers[l];
        let (lower, upper) = buf.deltas.split_at_mut(l + 1);
        let delta = &mut upper[0];
        for (d, a) in delta.iter_mut().zip(&buf.acts[l + 1]) {
            *d *= layer.activation.slope(*a);
        }
        let input = &buf.acts[l];
        let g = &mut grads[l];
        for (j, d) in delta.iter().enumerate() {
            g.biases[j] += d;
            let row = &mut g.weights[j * layer.inputs..(j + 1) * layer.inputs];
            for (w, v) in row.iter_mut().zip(input) {
                *w += d * v;
            }
        }
        let prev = &mut lower[l];
        prev.iter_mut().for_each(|p| *p = 0.0);
        for (j, d) in delta.iter().enumerate() {
            let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
            for (p, w) in prev.iter_mut().zip(row) {
                *p += w * d;
            }
        }
    }
}

pub(crate) fn fmt_values(values: &[f64]) -> String {
    values.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub(crate) fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s}"))))
        .collect()
}

pub(crate) fn write_layers(out: &mut String, prefix: &str, layers: &[Layer]) {
    let _ = writeln!(out, "{prefix}layers {}", layers.len());
    for l in layers {
        let _ = writeln!(out, "layer {} {} {}", l.inputs, l.outputs, l.activation.tag());
        let _ = writeln!(out, "weights {}", fmt_values(&l.weights));
        let _ = writeln!(out, "biases {}", fmt_values(&l.biases));
    }
}

/// Line cursor over a saved model.
pub(crate) struct Lines<'a> {
    inner: std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Lines<'a> {
        fn keep(l: &&str) -> bool {
            !l.trim().is_empty()
        }
        Lines {
            inner: text.lines().filter(keep as fn(&&str) -> bool),
        }
    }

    /// Next line, which must start with `key`; returns the remainder.
    pub fn expect(&mut self, key: &str) -> Result<&'a str> {
        let line = self
            .inner
            .next()
            .ok_or_else(|| Error::Config(format!("model file ends before {key}")))?;
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        if head != key {
            return Err(Error::Config(format!("model file: expected {key}, found {head}")));
        }
        Ok(rest.trim())
    }

    pub fn expect_usize(&mut self, key: &str) -> Result<usize> {
        let rest = self.expect(key)?;
        rest.parse()
            .map_err(|_| Error::Config(format!("model file: bad count for {key}")))
    }
}

pub(crate) fn read_layers(lines: &mut Lines, prefix: &str) -> Result<Vec<Layer>> {
    let count = lines.expect_usize(&format!("{prefix}layers"))?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let head: Vec<&str> = lines.expect("layer")?.split_whitespace().collect();
        let bad = || Error::Config("model file: bad layer header".into());
        if head.len() != 3 {
            return Err(bad());
        }
        let inputs: usize = head[0].parse().map_err(|_| bad())?;
        let outputs: usize = head[1].parse().map_err(|_| bad())?;
        let activation = Activation::from_tag(head[2]).ok_or_else(bad)?;
        let weights = parse_values(lines.expect("weights")?)?;
        let biases = parse_values(lines.expect("biases")?)?;
        if weights.len() != inputs * outputs || biases.len() != outputs {
            return Err(bad());
        }
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            biases,
            activation,
        });
    }
    check_stack(&layers)?;
    Ok(layers)
}
