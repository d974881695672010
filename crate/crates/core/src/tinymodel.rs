//! Minimal feed-forward models: dense, 2-D convolution, and flatten layers
//! with identity, relu, or softmax activations.
//!
//! Model arithmetic is plain double precision — the approximate multiplier
//! is applied only inside the explanation pipelines, never to inference
//! itself. Alongside [`forward`](TinyModel::forward), the module provides
//! analytic [`input_gradient`](TinyModel::input_gradient)s (backpropagation
//! to the input layer) and a JSON file format (`schema_version` 1, weights
//! as nested arrays) for human-diffable fixtures.
//!
//! Supported shapes are deliberately small: dense layers act on vectors,
//! convolutions on single-channel 2-D grids with stride 1, odd kernel
//! sides, and zero "same" padding. A model must end in a vector, so grid
//! models finish with `flatten` (optionally followed by dense layers).

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Element-wise (or, for softmax, vector-wise) activation applied after a
/// layer's linear part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Softmax,
}

/// One layer of a [`TinyModel`]. Serialized with a `kind` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Layer {
    /// Fully connected: `y = act(weights * x + bias)`, weights are
    /// `out x in`.
    Dense {
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        activation: Activation,
    },
    /// Single-channel 2-D correlation with zero "same" padding and
    /// stride 1 (the field is kept in the schema and validated so that
    /// files asking for anything else are rejected loudly).
    Conv2d {
        kernel: Vec<Vec<f64>>,
        bias: f64,
        stride: i64,
        activation: Activation,
    },
    /// Reshape a grid to a vector in row-major order; no parameters.
    Flatten,
}

/// The JSON document: `schema_version` 1 plus the model description.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u64,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// Current (and only) model file schema version.
pub const MODEL_SCHEMA_VERSION: u64 = 1;

/// A validated feed-forward network. Immutable after construction, so
/// shared references are safe for concurrent evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TinyModel {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    output_dim: usize,
}

impl TinyModel {
    /// Validates layer shapes compose from `input_shape` to a final vector
    /// and that every parameter is finite.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.len() > 2 {
            return Err(Error::InvalidModel(format!(
                "input_shape must have 1 or 2 dimensions, got {}",
                input_shape.len()
            )));
        }
        if input_shape.contains(&0) {
            return Err(Error::InvalidModel(
                "input_shape has a zero dimension".into(),
            ));
        }
        let mut shape = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            shape = layer_output_shape(layer, &shape)
                .map_err(|e| Error::InvalidModel(format!("layer {i}: {e}")))?;
        }
        if shape.len() != 1 {
            return Err(Error::InvalidModel(
                "model must end in a vector (add a flatten layer)".into(),
            ));
        }
        Ok(TinyModel {
            input_shape,
            layers,
            output_dim: shape[0],
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    /// Flattened input length.
    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Double-precision forward pass over a flattened (row-major) input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut data = x.to_vec();
        let mut shape = self.input_shape.clone();
        for layer in &self.layers {
            let z = linear_part(layer, &data, &shape);
            data = activate(layer_activation(layer), &z);
            shape = layer_output_shape(layer, &shape).expect("shapes validated at construction");
        }
        Ok(data)
    }

    /// Analytic gradient of output `class_index` with respect to every
    /// input entry, computed by backpropagation. Relu uses subgradient 0
    /// at exactly 0.
    pub fn input_gradient(&self, x: &[f64], class_index: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if class_index >= self.output_dim {
            return Err(Error::ClassIndex {
                class: class_index,
                outputs: self.output_dim,
            });
        }

        // Forward, caching each layer's input, pre-activation, and output.
        let mut data = x.to_vec();
        let mut shape = self.input_shape.clone();
        let mut tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = linear_part(layer, &data, &shape);
            data = activate(layer_activation(layer), &z);
            tapes.push(Tape {
                pre: z,
                out: data.clone(),
                in_shape: shape.clone(),
            });
            shape = layer_output_shape(layer, &shape).expect("shapes validated at construction");
        }

        let mut grad = vec![0.0; self.output_dim];
        grad[class_index] = 1.0;
        for (layer, tape) in self.layers.iter().zip(&tapes).rev() {
            let dz = activation_backward(layer_activation(layer), &tape.pre, &tape.out, &grad);
            grad = linear_backward(layer, &dz, &tape.in_shape);
        }
        Ok(grad)
    }

    /// Smallest |pre-activation| feeding any relu, or infinity if the model
    /// has none. Gradient checks use this to stay away from relu kinks,
    /// where one-sided derivatives make finite differences meaningless.
    pub fn min_abs_relu_preactivation(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut data = x.to_vec();
        let mut shape = self.input_shape.clone();
        let mut min = f64::INFINITY;
        for layer in &self.layers {
            let z = linear_part(layer, &data, &shape);
            if layer_activation(layer) == Activation::Relu {
                for &v in &z {
                    min = min.min(v.abs());
                }
            }
            data = activate(layer_activation(layer), &z);
            shape = layer_output_shape(layer, &shape).expect("shapes validated at construction");
        }
        Ok(min)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} entries, model expects {}",
                x.len(),
                self.input_len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input entry"));
        }
        Ok(())
    }
}

/// Per-layer forward cache used by backpropagation.
struct Tape {
    pre: Vec<f64>,
    out: Vec<f64>,
    in_shape: Vec<usize>,
}

fn layer_activation(layer: &Layer) -> Activation {
    match layer {
        Layer::Dense { activation, .. } | Layer::Conv2d { activation, .. } => *activation,
        Layer::Flatten => Activation::Identity,
    }
}

/// Computes the layer's output shape from its input shape, validating all
/// parameters along the way. Error strings here get wrapped with the layer
/// index by the constructor.
fn layer_output_shape(layer: &Layer, shape: &[usize]) -> std::result::Result<Vec<usize>, String> {
    match layer {
        Layer::Dense {
            weights,
            bias,
            activation: _,
        } => {
            if shape.len() != 1 {
                return Err(format!(
                    "dense layer needs a vector input, got a {}-d shape",
                    shape.len()
                ));
            }
            let out = weights.len();
            if out == 0 {
                return Err("dense layer has no output rows".into());
            }
            for (r, row) in weights.iter().enumerate() {
                if row.len() != shape[0] {
                    return Err(format!(
                        "weight row {r} has {} entries, input has {}",
                        row.len(),
                        shape[0]
                    ));
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err(format!("non-finite weight in row {r}"));
                }
            }
            if bias.len() != out {
                return Err(format!("bias has {} entries for {out} outputs", bias.len()));
            }
            if bias.iter().any(|b| !b.is_finite()) {
                return Err("non-finite bias entry".into());
            }
            Ok(vec![out])
        }
        Layer::Conv2d {
            kernel,
            bias,
            stride,
            activation,
        } => {
            if shape.len() != 2 {
                return Err(format!(
                    "conv2d needs a 2-d input, got a {}-d shape",
                    shape.len()
                ));
            }
            if *stride != 1 {
                return Err(format!("unsupported conv stride {stride} (only 1)"));
            }
            let kh = kernel.len();
            if kh == 0 || kh % 2 == 0 {
                return Err(format!("kernel height {kh} must be odd and positive"));
            }
            let kw = kernel[0].len();
            if kw == 0 || kw % 2 == 0 {
                return Err(format!("kernel width {kw} must be odd and positive"));
            }
            for row in kernel {
                if row.len() != kw {
                    return Err("ragged kernel".into());
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err("non-finite kernel entry".into());
                }
            }
            if !bias.is_finite() {
                return Err("non-finite conv bias".into());
            }
            if *activation == Activation::Softmax {
                return Err("softmax is only supported on dense layers".into());
            }
            Ok(shape.to_vec())
        }
        Layer::Flatten => Ok(vec![shape.iter().product()]),
    }
}

/// The layer's linear part (before activation) on row-major data.
fn linear_part(layer: &Layer, x: &[f64], shape: &[usize]) -> Vec<f64> {
    match layer {
        Layer::Dense { weights, bias, .. } => weights
            .iter()
            .zip(bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect(),
        Layer::Conv2d { kernel, bias, .. } => {
            let (h, w) = (shape[0], shape[1]);
            let (kh, kw) = (kernel.len(), kernel[0].len());
            let (ch, cw) = ((kh / 2) as isize, (kw / 2) as isize);
            let mut out = vec![*bias; h * w];
            for i in 0..h as isize {
                for j in 0..w as isize {
                    let mut sum = 0.0;
                    for (a, krow) in kernel.iter().enumerate() {
                        for (b, &k) in krow.iter().enumerate() {
                            let (p, q) = (i + a as isize - ch, j + b as isize - cw);
                            if p >= 0 && p < h as isize && q >= 0 && q < w as isize {
                                sum += k * x[(p * w as isize + q) as usize];
                            }
                        }
                    }
                    out[(i * w as isize + j) as usize] += sum;
                }
            }
            out
        }
        Layer::Flatten => x.to_vec(),
    }
}

fn activate(act: Activation, z: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => z.to_vec(),
        Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
        Activation::Softmax => {
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.iter().map(|&e| e / sum).collect()
        }
    }
}

/// Gradient through the activation: maps d(output) to d(pre-activation).
fn activation_backward(act: Activation, pre: &[f64], out: &[f64], dout: &[f64]) -> Vec<f64> {
    match act {
        Activation::Identity => dout.to_vec(),
        Activation::Relu => pre
            .iter()
            .zip(dout)
            .map(|(&z, &d)| if z > 0.0 { d } else { 0.0 })
            .collect(),
        Activation::Softmax => {
            // dz_j = s_j * (dout_j - sum_k dout_k * s_k)
            let dot: f64 = dout.iter().zip(out).map(|(d, s)| d * s).sum();
            out.iter().zip(dout).map(|(&s, &d)| s * (d - dot)).collect()
        }
    }
}

/// Gradient through the linear part: maps d(pre-activation) to d(input).
fn linear_backward(layer: &Layer, dz: &[f64], in_shape: &[usize]) -> Vec<f64> {
    match layer {
        Layer::Dense { weights, .. } => {
            let mut dx = vec![0.0; in_shape[0]];
            for (row, &d) in weights.iter().zip(dz) {
                for (x, &w) in dx.iter_mut().zip(row) {
                    *x += w * d;
                }
            }
            dx
        }
        Layer::Conv2d { kernel, .. } => {
            // dz[i][j] depends on x[i+a-ch][j+b-cw] with weight k[a][b],
            // so dx[p][q] gathers k[a][b] * dz[p-a+ch][q-b+cw].
            let (h, w) = (in_shape[0], in_shape[1]);
            let (kh, kw) = (kernel.len(), kernel[0].len());
            let (ch, cw) = ((kh / 2) as isize, (kw / 2) as isize);
            let mut dx = vec![0.0; h * w];
            for p in 0..h as isize {
                for q in 0..w as isize {
                    let mut sum = 0.0;
                    for (a, krow) in kernel.iter().enumerate() {
                        for (b, &k) in krow.iter().enumerate() {
                            let (i, j) = (p - a as isize + ch, q - b as isize + cw);
                            if i >= 0 && i < h as isize && j >= 0 && j < w as isize {
                                sum += k * dz[(i * w as isize + j) as usize];
                            }
                        }
                    }
                    dx[(p * w as isize + q) as usize] = sum;
                }
            }
            dx
        }
        Layer::Flatten => dz.to_vec(),
    }
}

/// Parses a model from its JSON text. Checks the schema version before the
/// full parse so version errors are reported as such, not as field noise.
pub fn model_from_json(text: &str) -> Result<TinyModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ModelParse(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(MODEL_SCHEMA_VERSION) => {}
        Some(found) => return Err(Error::SchemaVersion { found }),
        None => {
            return Err(Error::ModelParse(
                "missing or non-integer schema_version".into(),
            ))
        }
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::ModelParse(e.to_string()))?;
    TinyModel::new(file.input_shape, file.layers)
}

/// Serializes a model to pretty-printed JSON (stable field order, trailing
/// newline) — the canonical form committed as fixtures.
pub fn model_to_json(m: &TinyModel) -> String {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        input_shape: m.input_shape.clone(),
        layers: m.layers.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    text.push('\n');
    text
}

pub fn load_model(path: &Path) -> Result<TinyModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}

pub fn save_model(m: &TinyModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(m))?;
    Ok(())
}
