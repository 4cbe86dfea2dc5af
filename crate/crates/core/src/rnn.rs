//! Rough neural network: an input layer of paired upper/lower rough
//! neurons feeding a conventional tansig stack, trained like the
//! perceptron in [`crate::bpnn`].
//!
//! Each input row is a box `[x_lower, x_upper]`. The upper and lower
//! neurons of a pair see the upper and lower bounds; their activations are
//! reordered so the upper output is the larger one. The two output vectors
//! run through the same hidden stack separately and the output neuron
//! applies logsig to the mean of the two channel nets, so degenerate boxes
//! reproduce the point network exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bpnn::{self, read_scaler, split_rows, write_scaler, MlpModel, THRESHOLD};
use crate::dataset::CategoricalTable;
use crate::layers::{
    backward, check_stack, fmt_values, forward, logsig, parse_values, read_layers, write_layers, Activation, Buffers,
    Layer, Lines,
};
use crate::rng::{derive_seed, seeded};
use crate::samples::{IntervalSamples, Samples, Scaler};
use crate::train::{descend, evaluate_predictions, Descent, Evaluation};
use crate::{Error, MlpConfig, Result, TrainingTrace};

pub const NO_UNCERTAINTY: &str = "no-uncertainty";

/// Per attribute and category, the value range seen in fitting rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMap {
    cells: Vec<BTreeMap<u8, (f64, f64)>>,
}

fn check_aligned(cat: &CategoricalTable, values: &Samples) -> Result<()> {
    if cat.len() != values.len() {
        return Err(Error::Shape {
            expected: cat.len(),
            found: values.len(),
        });
    }
    if cat.width() != values.width() {
        return Err(Error::Shape {
            expected: cat.width(),
            found: values.width(),
        });
    }
    Ok(())
}

impl IntervalMap {
    pub fn fit(cat: &CategoricalTable, values: &Samples) -> Result<IntervalMap> {
        check_aligned(cat, values)?;
        let mut cells = vec![BTreeMap::new(); cat.width()];
        for (codes, row) in cat.rows().iter().zip(values.rows()) {
            for (j, (&code, &v)) in codes.iter().zip(row).enumerate() {
                let cell = cells[j].entry(code).or_insert((v, v));
                cell.0 = f64::min(cell.0, v);
                cell.1 = f64::max(cell.1, v);
            }
        }
        Ok(IntervalMap { cells })
    }

    /// Boxes for `values`; a value outside its fitted cell stretches the
    /// box to include it, an unseen cell gives a degenerate box.
    pub fn apply(&self, cat: &CategoricalTable, values: &Samples) -> Result<IntervalSamples> {
        check_aligned(cat, values)?;
        if cat.width() != self.cells.len() {
            return Err(Error::Shape {
                expected: self.cells.len(),
                found: cat.width(),
            });
        }
        let mut lower = Vec::with_capacity(values.len());
        let mut upper = Vec::with_capacity(values.len());
        for (codes, row) in cat.rows().iter().zip(values.rows()) {
            let (lo, up): (Vec<f64>, Vec<f64>) = codes
                .iter()
                .zip(row)
                .zip(&self.cells)
                .map(|((code, &v), cells)| match cells.get(code) {
                    Some(&(a, b)) => (a.min(v), b.max(v)),
                    None => (v, v),
                })
                .unzip();
            lower.push(lo);
            upper.push(up);
        }
        IntervalSamples::new(values.names().to_vec(), lower, upper, values.labels().to_vec())
    }
}

/// Boxes from the extremes of each value's discretization cell.
pub fn intervalize(cat: &CategoricalTable, values: &Samples) -> Result<IntervalSamples> {
    IntervalMap::fit(cat, values)?.apply(cat, values)
}

/// `(o_lower, o_upper)` as the min and max of the two activations.
pub fn rough_neuron_output(net_lower: f64, net_upper: f64, activation: Activation) -> (f64, f64) {
    let (gl, gu) = (activation.apply(net_lower), activation.apply(net_upper));
    (gl.min(gu), gl.max(gu))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connection {
    /// Each neuron sees only its own bound.
    #[default]
    Excitatory,
    /// Adds the opposite bound with a negative sign.
    Inhibitory,
    /// Adds the opposite bound with a free weight.
    Full,
}

impl Connection {
    fn cross_sign(self) -> Option<f64> {
        match self {
            Connection::Excitatory => None,
            Connection::Inhibitory => Some(-1.0),
            Connection::Full => Some(1.0),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Connection::Excitatory => "excitatory",
            Connection::Inhibitory => "inhibitory",
            Connection::Full => "full",
        }
    }

    fn from_tag(tag: &str) -> Option<Connection> {
        match tag {
            "excitatory" => Some(Connection::Excitatory),
            "inhibitory" => Some(Connection::Inhibitory),
            "full" => Some(Connection::Full),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughLayer {
    pub connection: Connection,
    /// Upper neurons from upper bounds.
    pub upper: Layer,
    /// Lower neurons from lower bounds.
    pub lower: Layer,
    /// Upper neurons from lower bounds, when cross-wired.
    pub upper_cross: Option<Vec<f64>>,
    /// Lower neurons from upper bounds, when cross-wired.
    pub lower_cross: Option<Vec<f64>>,
}

fn mat_vec_add(w: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
    let n = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        *o += scale * w[j * n..(j + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl RoughLayer {
    fn inputs(&self) -> usize {
        self.upper.inputs
    }

    fn outputs(&self) -> usize {
        self.upper.outputs
    }

    fn nets(&self, lo: &[f64], up: &[f64], net_l: &mut [f64], net_u: &mut [f64]) {
        self.upper.net_into(up, net_u);
        self.lower.net_into(lo, net_l);
        if let Some(s) = self.connection.cross_sign() {
            if let Some(w) = &self.upper_cross {
                mat_vec_add(w, lo, s, net_u);
            }
            if let Some(w) = &self.lower_cross {
                mat_vec_add(w, up, s, net_l);
            }
        }
    }

    fn zeroed(&self) -> RoughLayer {
        RoughLayer {
            connection: self.connection,
            upper: self.upper.zeroed(),
            lower: self.lower.zeroed(),
            upper_cross: self.upper_cross.as_ref().map(|w| vec![0.0; w.len()]),
            lower_cross: self.lower_cross.as_ref().map(|w| vec![0.0; w.len()]),
        }
    }

    fn is_finite(&self) -> bool {
        self.upper.is_finite()
            && self.lower.is_finite()
            && self.upper_cross.iter().chain(&self.lower_cross).flatten().all(|v| v.is_finite())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.upper
            .params()
            .chain(self.lower.params())
            .chain(self.upper_cross.iter().flatten())
            .chain(self.lower_cross.iter().flatten())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.upper
            .params_mut()
            .chain(self.lower.params_mut())
            .chain(self.upper_cross.iter_mut().flatten())
            .chain(self.lower_cross.iter_mut().flatten())
    }
}

/// Rough input layer plus the shared stack, which ends in a linear neuron.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct RnnParams {
    rough: RoughLayer,
    stack: Vec<Layer>,
}

struct RowBuffers {
    net_l: Vec<f64>,
    net_u: Vec<f64>,
    g_l: Vec<f64>,
    g_u: Vec<f64>,
    o_lo: Vec<f64>,
    o_up: Vec<f64>,
    chan_lo: Buffers,
    chan_up: Buffers,
}

impl RowBuffers {
    fn new(p: &RnnParams) -> RowBuffers {
        let h = p.rough.outputs();
        RowBuffers {
            net_l: vec![0.0; h],
            net_u: vec![0.0; h],
            g_l: vec![0.0; h],
            g_u: vec![0.0; h],
            o_lo: vec![0.0; h],
            o_up: vec![0.0; h],
            chan_lo: Buffers::new(&p.stack),
            chan_up: Buffers::new(&p.stack),
        }
    }
}

impl RnnParams {
    fn forward_row(&self, lo: &[f64], up: &[f64], b: &mut RowBuffers) -> f64 {
        self.rough.nets(lo, up, &mut b.net_l, &mut b.net_u);
        let act = self.rough.upper.activation;
        for j in 0..b.net_l.len() {
            b.g_l[j] = act.apply(b.net_l[j]);
            b.g_u[j] = act.apply(b.net_u[j]);
            b.o_lo[j] = b.g_l[j].min(b.g_u[j]);
            b.o_up[j] = b.g_l[j].max(b.g_u[j]);
        }
        forward(&self.stack, &b.o_lo, &mut b.chan_lo);
        forward(&self.stack, &b.o_up, &mut b.chan_up);
        logsig(0.5 * (b.chan_lo.output()[0] + b.chan_up.output()[0]))
    }

    fn backward_row(&self, lo: &[f64], up: &[f64], y: f64, d_out: f64, b: &mut RowBuffers, g: &mut RnnParams) {
        let dz = [0.5 * d_out * y * (1.0 - y)];
        backward(&self.stack, &mut b.chan_lo, &dz, &mut g.stack);
        backward(&self.stack, &mut b.chan_up, &dz, &mut g.stack);
        let act = self.rough.upper.activation;
        let (d_lo, d_up) = (b.chan_lo.input_gradient(), b.chan_up.input_gradient());
        let n = self.rough.inputs();
        let sign = self.rough.connection.cross_sign();
        for j in 0..self.rough.outputs() {
            // ties route the upper output's gradient to the upper neuron
            let (dg_u, dg_l) = if b.g_u[j] >= b.g_l[j] { (d_up[j], d_lo[j]) } else { (d_lo[j], d_up[j]) };
            let dn_u = dg_u * act.slope(b.g_u[j]);
            let dn_l = dg_l * act.slope(b.g_l[j]);
            g.rough.upper.biases[j] += dn_u;
            g.rough.lower.biases[j] += dn_l;
            let row = j * n..(j + 1) * n;
            for (w, &xu) in g.rough.upper.weights[row.clone()].iter_mut().zip(up) {
                *w += dn_u * xu;
            }
            for (w, &xl) in g.rough.lower.weights[row.clone()].iter_mut().zip(lo) {
                *w += dn_l * xl;
            }
            if let Some(s) = sign {
                if let Some(w) = g.rough.upper_cross.as_mut() {
                    for (w, &xl) in w[row.clone()].iter_mut().zip(lo) {
                        *w += s * dn_u * xl;
                    }
                }
                if let Some(w) = g.rough.lower_cross.as_mut() {
                    for (w, &xu) in w[row].iter_mut().zip(up) {
                        *w += s * dn_l * xu;
                    }
                }
            }
        }
    }

    fn zeroed(&self) -> RnnParams {
        RnnParams {
            rough: self.rough.zeroed(),
            stack: self.stack.iter().map(Layer::zeroed).collect(),
        }
    }
}

impl Descent for RnnParams {
    type Data = IntervalSamples;

    fn loss(&self, data: &IntervalSamples) -> f64 {
        let mut b = RowBuffers::new(self);
        let sum: f64 = (0..data.len())
            .map(|i| {
                let (lo, up) = data.row(i);
                (self.forward_row(lo, up, &mut b) - f64::from(data.labels()[i])).powi(2)
            })
            .sum();
        sum / data.len() as f64
    }

    fn loss_and_grad(&self, data: &IntervalSamples) -> (f64, RnnParams) {
        let n = data.len() as f64;
        let mut g = self.zeroed();
        let mut b = RowBuffers::new(self);
        let mut sum = 0.0;
        for i in 0..data.len() {
            let (lo, up) = data.row(i);
            let y = self.forward_row(lo, up, &mut b);
            let e = y - f64::from(data.labels()[i]);
            sum += e * e;
            self.backward_row(lo, up, y, 2.0 * e / n, &mut b, &mut g);
        }
        (sum / n, g)
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        self.rough
            .params_mut()
            .chain(self.stack.iter_mut().flat_map(Layer::params_mut))
            .collect()
    }

    fn params(&self) -> Vec<f64> {
        self.rough
            .params()
            .chain(self.stack.iter().flat_map(Layer::params))
            .copied()
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnOptions {
    pub connection: Connection,
    /// Rough neurons beyond the input layer; not supported.
    pub rough_hidden: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnModel {
    pub rough: RoughLayer,
    pub stack: Vec<Layer>,
    pub scaler: Option<Scaler>,
    pub trace: Option<TrainingTrace>,
    pub warnings: Vec<String>,
}

impl RnnModel {
    /// Point network seen as a rough network with identical channels.
    pub fn from_mlp(mlp: &MlpModel, connection: Connection) -> Result<RnnModel> {
        if mlp.layers.len() < 2 {
            return Err(Error::parameter("a rough network needs at least one hidden layer"));
        }
        let first = mlp.layers[0].clone();
        let cross = connection
            .cross_sign()
            .map(|_| vec![0.0; first.weights.len()]);
        let mut stack = mlp.layers[1..].to_vec();
        stack.last_mut().expect("output layer").activation = Activation::Purelin;
        Ok(RnnModel {
            rough: RoughLayer {
                connection,
                upper: first.clone(),
                lower: first,
                upper_cross: cross.clone(),
                lower_cross: cross,
            },
            stack,
            scaler: mlp.scaler.clone(),
            trace: mlp.trace.clone(),
            warnings: Vec::new(),
        })
    }

    fn params(&self) -> RnnParams {
        RnnParams {
            rough: self.rough.clone(),
            stack: self.stack.clone(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.rough.inputs()
    }

    pub fn forward(&self, lower: &[f64], upper: &[f64]) -> Result<f64> {
        for x in [lower, upper] {
            if x.len() != self.inputs() {
                return Err(Error::Shape {
                    expected: self.inputs(),
                    found: x.len(),
                });
            }
        }
        let p = self.params();
        Ok(p.forward_row(lower, upper, &mut RowBuffers::new(&p)))
    }

    /// Rough-neuron outputs `(o_lower, o_upper)` for one box.
    pub fn rough_outputs(&self, lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.params();
        let mut b = RowBuffers::new(&p);
        p.forward_row(lower, upper, &mut b);
        (b.o_lo, b.o_up)
    }

    pub fn predict_all(&self, data: &IntervalSamples) -> Result<Vec<u8>> {
        (0..data.len())
            .map(|i| {
                let (lo, up) = data.row(i);
                Ok(u8::from(self.forward(lo, up)? >= THRESHOLD))
            })
            .collect()
    }

    pub fn evaluate(&self, test: &IntervalSamples) -> Result<Evaluation> {
        evaluate_predictions(&self.predict_all(test)?, test.labels())
    }

    pub fn is_finite(&self) -> bool {
        self.rough.is_finite() && self.stack.iter().all(Layer::is_finite)
    }

    pub fn save(&self) -> String {
        let mut out = String::from("rnn 1\n");
        let r = &self.rough;
        let _ = writeln!(out, "connection {}", r.connection.tag());
        write_layers(&mut out, "upper_", std::slice::from_ref(&r.upper));
        write_layers(&mut out, "lower_", std::slice::from_ref(&r.lower));
        for (key, w) in [("upper_cross", &r.upper_cross), ("lower_cross", &r.lower_cross)] {
            match w {
                Some(w) => {
                    let _ = writeln!(out, "{key} {}", fmt_values(w));
                }
                None => {
                    let _ = writeln!(out, "{key} none");
                }
            }
        }
        write_layers(&mut out, "", &self.stack);
        write_scaler(&mut out, self.scaler.as_ref());
        out
    }

    pub fn load(text: &str) -> Result<RnnModel> {
        let bad = |what: &str| Error::Config(format!("model file: {what}"));
        let mut lines = Lines::new(text);
        lines.expect("rnn")?;
        let connection = Connection::from_tag(lines.expect("connection")?).ok_or_else(|| bad("connection"))?;
        let upper = read_layers(&mut lines, "upper_")?.pop().ok_or_else(|| bad("upper layer"))?;
        let lower = read_layers(&mut lines, "lower_")?.pop().ok_or_else(|| bad("lower layer"))?;
        let mut cross = Vec::new();
        for key in ["upper_cross", "lower_cross"] {
            let rest = lines.expect(key)?;
            cross.push(if rest == "none" { None } else { Some(parse_values(rest)?) });
        }
        let stack = read_layers(&mut lines, "")?;
        if upper.outputs != stack.first().map_or(0, |l| l.inputs) || upper.weights.len() != lower.weights.len() {
            return Err(bad("channel shapes disagree"));
        }
        let lower_cross = cross.pop().flatten();
        let upper_cross = cross.pop().flatten();
        Ok(RnnModel {
            rough: RoughLayer {
                connection,
                upper,
                lower,
                upper_cross,
                lower_cross,
            },
            stack,
            scaler: read_scaler(&mut lines)?,
            trace: None,
            warnings: Vec::new(),
        })
    }
}

fn check_options(cfg: &MlpConfig, opts: &RnnOptions) -> Result<()> {
    cfg.validate()?;
    if opts.rough_hidden {
        return Err(Error::Unimplemented("rough neurons in hidden layers".into()));
    }
    if cfg.hidden.is_empty() {
        return Err(Error::parameter("a rough network needs at least one hidden layer"));
    }
    Ok(())
}

/// Trains on boxes, splitting rows exactly as [`bpnn::train`] does.
pub fn train(data: &IntervalSamples, cfg: &MlpConfig, opts: &RnnOptions) -> Result<RnnModel> {
    check_options(cfg, opts)?;
    let (train_rows, val_rows) = split_rows(data.len(), cfg)?;
    train_with_split(&data.subset(&train_rows), &data.subset(&val_rows), cfg, opts)
}

pub fn train_with_split(
    train: &IntervalSamples,
    val: &IntervalSamples,
    cfg: &MlpConfig,
    opts: &RnnOptions,
) -> Result<RnnModel> {
    check_options(cfg, opts)?;
    if train.width() != val.width() {
        return Err(Error::Shape {
            expected: train.width(),
            found: val.width(),
        });
    }
    if train.is_degenerate() {
        let msg = format!("{NO_UNCERTAINTY}: every training interval is degenerate, the rough network reduces to the point network");
        log::warn!("{msg}");
        let mlp = bpnn::train_with_split(&train.midpoints(), &val.midpoints(), cfg)?;
        let mut model = RnnModel::from_mlp(&mlp, opts.connection)?;
        model.warnings.push(msg);
        return Ok(model);
    }
    let start = Instant::now();
    let point = MlpModel::init(train.width(), cfg);
    let mut init = RnnModel::from_mlp(&point, opts.connection)?;
    if opts.connection.cross_sign().is_some() {
        let mut rng = seeded(derive_seed(cfg.seed, &[2]));
        let scale = cfg.init_scale / (2.0 * train.width() as f64).sqrt();
        let fresh = |rng: &mut crate::rng::Rng| {
            use rand::Rng as _;
            (0..init.rough.upper.weights.len())
                .map(|_| rng.random_range(-scale..=scale))
                .collect::<Vec<f64>>()
        };
        init.rough.upper_cross = Some(fresh(&mut rng));
        init.rough.lower_cross = Some(fresh(&mut rng));
    }
    check_stack(&init.stack)?;
    let (params, mut trace) = descend(init.params(), train, val, cfg)?;
    trace.seconds = start.elapsed().as_secs_f64();
    Ok(RnnModel {
        rough: params.rough,
        stack: params.stack,
        scaler: None,
        trace: Some(trace),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::StopReason;
    use proptest::prelude::*;
    use rand::Rng;

    fn cat(rows: Vec<Vec<u8>>, n_labels: usize) -> CategoricalTable {
        CategoricalTable::from_rows(rows, vec![0; n_labels]).unwrap()
    }

    #[test]
    fn intervals_from_cells() {
        let c = cat(vec![vec![1], vec![1], vec![1], vec![2]], 4);
        let v = Samples::unnamed(vec![vec![-1.0], vec![0.0], vec![2.0], vec![5.0]], vec![0; 4]).unwrap();
        let boxes = intervalize(&c, &v).unwrap();
        for i in 0..3 {
            assert_eq!(boxes.row(i), (&[-1.0][..], &[2.0][..]));
        }
        assert_eq!(boxes.row(3), (&[5.0][..], &[5.0][..]));
        let constant = Samples::unnamed(vec![vec![3.0]; 4], vec![0; 4]).unwrap();
        assert!(intervalize(&c, &constant).unwrap().is_degenerate());
        let short = Samples::unnamed(vec![vec![1.0]], vec![0]).unwrap();
        assert!(matches!(intervalize(&c, &short), Err(Error::Shape { .. })));
    }

    #[test]
    fn fitted_map_stretches_to_new_values() {
        let c = cat(vec![vec![1], vec![1]], 2);
        let v = Samples::unnamed(vec![vec![0.0], vec![1.0]], vec![0, 0]).unwrap();
        let map = IntervalMap::fit(&c, &v).unwrap();
        let test_cat = cat(vec![vec![1], vec![3]], 2);
        let test = Samples::unnamed(vec![vec![4.0], vec![7.0]], vec![0, 0]).unwrap();
        let boxes = map.apply(&test_cat, &test).unwrap();
        assert_eq!(boxes.row(0), (&[0.0][..], &[4.0][..]));
        assert_eq!(boxes.row(1), (&[7.0][..], &[7.0][..]));
    }

    #[test]
    fn rough_neuron_examples() {
        assert_eq!(rough_neuron_output(0.0, 0.0, Activation::Tansig), (0.0, 0.0));
        let (lo, up) = rough_neuron_output(-1.0, 1.0, Activation::Tansig);
        assert!((lo + 0.761594).abs() < 1e-6 && (up - 0.761594).abs() < 1e-6);
        assert_eq!(rough_neuron_output(1.0, -1.0, Activation::Tansig), (lo, up));
    }

    fn random_model(inputs: usize, connection: Connection, seed: u64) -> RnnModel {
        let cfg = MlpConfig {
            hidden: vec![3, 2],
            init_scale: 2.0,
            seed,
            ..MlpConfig::default()
        };
        let mut m = RnnModel::from_mlp(&MlpModel::init(inputs, &cfg), connection).unwrap();
        let mut rng = seeded(seed ^ 0xabc);
        for p in m.rough.params_mut() {
            *p = rng.random_range(-2.0..2.0);
        }
        m.rough.upper_cross = connection.cross_sign().map(|_| (0..3 * inputs).map(|_| rng.random_range(-2.0..2.0)).collect());
        m.rough.lower_cross = connection.cross_sign().map(|_| (0..3 * inputs).map(|_| rng.random_range(-2.0..2.0)).collect());
        m
    }

    fn random_box(rng: &mut crate::rng::Rng, m: usize) -> (Vec<f64>, Vec<f64>) {
        let lo: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let up = lo.iter().map(|v| v + rng.random_range(0.0..1.5)).collect();
        (lo, up)
    }

    #[test]
    fn upper_output_dominates() {
        let mut rng = seeded(77);
        for draw in 0..10_000u64 {
            let connection = [Connection::Excitatory, Connection::Inhibitory, Connection::Full][(draw % 3) as usize];
            let model = random_model(3, connection, draw);
            let (lo, up) = random_box(&mut rng, 3);
            let (o_lo, o_up) = model.rough_outputs(&lo, &up);
            assert!(o_lo.iter().zip(&o_up).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn degenerate_boxes_match_the_point_network() {
        let cfg = MlpConfig {
            hidden: vec![4, 3],
            init_scale: 1.5,
            seed: 5,
            ..MlpConfig::default()
        };
        let mlp = MlpModel::init(3, &cfg);
        let rough = RnnModel::from_mlp(&mlp, Connection::Excitatory).unwrap();
        let mut rng = seeded(1);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = mlp.forward(&x).unwrap();
            let b = rough.forward(&x, &x).unwrap();
            assert!((a - b).abs() <= 1e-9);
        }
        // shrinking boxes to midpoints
        let (lo, up) = random_box(&mut rng, 3);
        let mid: Vec<f64> = lo.iter().zip(&up).map(|(a, b)| 0.5 * (a + b)).collect();
        assert!((rough.forward(&mid, &mid).unwrap() - mlp.forward(&mid).unwrap()).abs() <= 1e-9);
        assert!(matches!(rough.forward(&[0.0], &[0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn widening_separates_rough_outputs() {
        let mlp = MlpModel::new(vec![
            Layer {
                inputs: 1,
                outputs: 1,
                weights: vec![-1.3],
                biases: vec![0.2],
                activation: Activation::Tansig,
            },
            Layer {
                inputs: 1,
                outputs: 1,
                weights: vec![1.0],
                biases: vec![0.0],
                activation: Activation::Logsig,
            },
        ])
        .unwrap();
        let model = RnnModel::from_mlp(&mlp, Connection::Excitatory).unwrap();
        let mut previous = -1.0;
        for k in 0..50 {
            let half = k as f64 * 0.05;
            let (o_lo, o_up) = model.rough_outputs(&[0.3 - half], &[0.3 + half]);
            let spread = o_up[0] - o_lo[0];
            assert!(spread >= previous);
            previous = spread;
        }
        assert!(previous > 0.0);
    }

    fn box_data(seed: u64, n: usize, m: usize) -> IntervalSamples {
        let mut rng = seeded(seed);
        let (mut lower, mut upper, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        while labels.len() < n {
            let (lo, up) = random_box(&mut rng, m);
            if (lo[0] + up[0]).abs() < 0.4 {
                continue;
            }
            let label = u8::from(lo[0] + up[0] > 0.0);
            lower.push(lo);
            upper.push(up);
            labels.push(label);
        }
        IntervalSamples::new((0..m).map(|j| format!("x{j}")).collect(), lower, upper, labels).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_ties() {
        for (draw, connection) in [Connection::Excitatory, Connection::Inhibitory, Connection::Full]
            .into_iter()
            .cycle()
            .take(9)
            .enumerate()
        {
            let data = box_data(draw as u64, 5, 3);
            let params = random_model(3, connection, 40 + draw as u64).params();
            let mut b = RowBuffers::new(&params);
            let near_tie = (0..data.len()).any(|i| {
                let (lo, up) = data.row(i);
                params.forward_row(lo, up, &mut b);
                b.g_u.iter().zip(&b.g_l).any(|(u, l)| (u - l).abs() <= 1e-6)
            });
            assert!(!near_tie);
            let (_, grad) = params.loss_and_grad(&data);
            let h = 1e-5;
            for (k, g) in grad.params().iter().enumerate() {
                let mut plus = params.clone();
                *plus.params_mut()[k] += h;
                let mut minus = params.clone();
                *minus.params_mut()[k] -= h;
                let numeric = (plus.loss(&data) - minus.loss(&data)) / (2.0 * h);
                let gap = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8);
                assert!(gap <= 1e-4, "{connection:?} param {k}: {g} vs {numeric}");
            }
        }
    }

    #[test]
    fn degenerate_training_warns_and_matches_bpnn() {
        let mut rng = seeded(3);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| u8::from(r[0] > r[1])).collect();
        let points = Samples::unnamed(rows, labels).unwrap();
        let cfg = MlpConfig {
            epochs: 60,
            hidden: vec![5],
            seed: 11,
            ..MlpConfig::default()
        };
        let boxes = IntervalSamples::from_points(&points);
        let rough = train(&boxes, &cfg, &RnnOptions::default()).unwrap();
        assert!(rough.warnings.iter().any(|w| w.starts_with(NO_UNCERTAINTY)));
        let mlp = bpnn::train(&points, &cfg).unwrap();
        let a = rough.evaluate(&boxes).unwrap().accuracy;
        let b = mlp.evaluate(&points).unwrap().accuracy;
        assert!((a - b).abs() <= 1e-9);
        for (i, r) in points.rows().iter().enumerate().take(10) {
            let (lo, up) = boxes.row(i);
            assert!((rough.forward(lo, up).unwrap() - mlp.forward(r).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn separable_boxes_are_learned() {
        let data = box_data(21, 120, 2);
        let mut solved = 0;
        for seed in 0..10 {
            let cfg = MlpConfig {
                hidden: vec![6],
                learning_rate: 0.5,
                seed,
                ..MlpConfig::default()
            };
            let model = train_with_split(&data, &data, &cfg, &RnnOptions::default()).unwrap();
            assert!(model.is_finite());
            if model.evaluate(&data).unwrap().accuracy == 100.0 {
                solved += 1;
            }
        }
        assert!(solved >= 8, "solved {solved}/10");
    }

    #[test]
    fn rising_validation_stops_early() {
        let train_data = box_data(4, 40, 2);
        let val = IntervalSamples::new(
            train_data.names().to_vec(),
            train_data.lower().to_vec(),
            train_data.upper().to_vec(),
            train_data.labels().iter().map(|l| 1 - l).collect(),
        )
        .unwrap();
        let cfg = MlpConfig {
            hidden: vec![4],
            learning_rate: 0.5,
            ..MlpConfig::default()
        };
        let model = train_with_split(&train_data, &val, &cfg, &RnnOptions::default()).unwrap();
        let trace = model.trace.unwrap();
        assert_eq!(trace.stop, StopReason::EarlyStop);
        let min = trace.epochs.iter().map(|r| r.val_error).fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best().val_error, min);
    }

    #[test]
    fn hidden_rough_neurons_are_unimplemented() {
        let opts = RnnOptions {
            rough_hidden: true,
            ..RnnOptions::default()
        };
        let err = train(&box_data(1, 20, 2), &MlpConfig::default(), &opts).unwrap_err();
        assert!(matches!(err, Error::Unimplemented(_)));
    }

    #[test]
    fn deterministic_and_reloadable() {
        let data = box_data(6, 40, 2);
        let cfg = MlpConfig {
            epochs: 30,
            hidden: vec![3],
            ..MlpConfig::default()
        };
        for connection in [Connection::Excitatory, Connection::Full] {
            let opts = RnnOptions {
                connection,
                ..RnnOptions::default()
            };
            let a = train(&data, &cfg, &opts).unwrap();
            let b = train(&data, &cfg, &opts).unwrap();
            assert_eq!(a.rough, b.rough);
            let back = RnnModel::load(&a.save()).unwrap();
            assert_eq!(back.rough, a.rough);
            assert_eq!(back.stack, a.stack);
        }
    }

    // Nested binning: the coarse code of a value is its fine code halved.
    proptest! {
        #[test]
        fn refining_cells_never_widens(values in prop::collection::vec(-5.0f64..5.0, 2..30)) {
            let fine: Vec<Vec<u8>> = values.iter().map(|v| vec![((v + 5.0).floor() as u8).min(9)]).collect();
            let coarse: Vec<Vec<u8>> = fine.iter().map(|c| vec![c[0] / 2]).collect();
            let n = values.len();
            let s = Samples::unnamed(values.iter().map(|v| vec![*v]).collect(), vec![0; n]).unwrap();
            let f = intervalize(&cat(fine, n), &s).unwrap();
            let c = intervalize(&cat(coarse, n), &s).unwrap();
            for i in 0..n {
                let (fl, fu) = f.row(i);
                let (cl, cu) = c.row(i);
                prop_assert!(cl[0] <= fl[0] && fu[0] <= cu[0]);
                prop_assert!(fl[0] <= values[i] && values[i] <= fu[0]);
            }
        }
    }
}
