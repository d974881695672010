//! Deterministic fixture models and inputs.
//!
//! The JSON files under `fixtures/` at the repository root are the
//! canonical serializations of the models built here; tests keep the files
//! and the generators from drifting apart. All weights are dyadic
//! rationals (multiples of 1/64), so every value is exact in f64, encodes
//! to bfloat16 without rounding, and survives JSON round-trips
//! bit-for-bit.
//!
//! The weight stream is a xorshift64 generator reduced to 7 bits, simple
//! enough to replicate in any language when regenerating golden outputs:
//! `s ^= s << 13; s ^= s >> 7; s ^= s << 17` (64-bit wrapping), then
//! `((s >> 33) & 127) - 64` sixty-fourths.

use crate::tinymodel::{Activation, Layer, TinyModel};

/// Deterministic stream of dyadic weights in `[-1, 63/64]`.
pub struct DyadicStream {
    state: u64,
}

impl DyadicStream {
    pub fn new(seed: u64) -> Self {
        DyadicStream {
            state: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1,
        }
    }

    pub fn next_weight(&mut self) -> f64 {
        self.state ^= self.state << 13;
        self.state ^= self.state >> 7;
        self.state ^= self.state << 17;
        (((self.state >> 33) & 127) as i64 - 64) as f64 / 64.0
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_weight()).collect()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows).map(|_| self.vector(cols)).collect()
    }
}

/// One dense layer computing `w . x` with hand-picked weights — the
/// gradient equals the weight row everywhere.
pub fn linear_3() -> TinyModel {
    TinyModel::new(
        vec![3],
        vec![Layer::Dense {
            weights: vec![vec![0.5, -0.25, 0.125]],
            bias: vec![0.0],
            activation: Activation::Identity,
        }],
    )
    .expect("fixture model is valid")
}

/// Three dense layers, 4 -> 8 -> 8 -> 2, relu hidden and softmax output.
pub fn mlp_4_8_2() -> TinyModel {
    let mut s = DyadicStream::new(1);
    let l1 = Layer::Dense {
        weights: s.matrix(8, 4),
        bias: s.vector(8),
        activation: Activation::Relu,
    };
    let l2 = Layer::Dense {
        weights: s.matrix(8, 8),
        bias: s.vector(8),
        activation: Activation::Relu,
    };
    let l3 = Layer::Dense {
        weights: s.matrix(2, 8),
        bias: s.vector(2),
        activation: Activation::Softmax,
    };
    TinyModel::new(vec![4], vec![l1, l2, l3]).expect("fixture model is valid")
}

/// A 4x4 grid model: 3x3 relu convolution, flatten, dense softmax head.
pub fn conv_4x4() -> TinyModel {
    let mut s = DyadicStream::new(2);
    let conv = Layer::Conv2d {
        kernel: s.matrix(3, 3),
        bias: s.next_weight(),
        stride: 1,
        activation: Activation::Relu,
    };
    let head = Layer::Dense {
        weights: s.matrix(3, 16),
        bias: s.vector(3),
        activation: Activation::Softmax,
    };
    TinyModel::new(vec![4, 4], vec![conv, Layer::Flatten, head]).expect("fixture model is valid")
}

/// Fixture input for [`mlp_4_8_2`] (and [`linear_3`], which shares length
/// 3 prefixes are not needed — it gets its own slice).
pub fn mlp_input() -> Vec<f64> {
    DyadicStream::new(3).vector(4)
}

/// Fixture input grid for [`conv_4x4`], row-major 4x4.
pub fn conv_input() -> Vec<f64> {
    DyadicStream::new(4).vector(16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tinymodel::{load_model, model_to_json};
    use rand::Rng;
    use std::path::PathBuf;

    fn fixtures_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .canonicalize()
            .expect("fixtures directory exists")
    }

    #[test]
    fn committed_files_match_generators() {
        for (name, model) in [
            ("linear_3.json", linear_3()),
            ("mlp_4_8_2.json", mlp_4_8_2()),
            ("conv_4x4.json", conv_4x4()),
        ] {
            let path = fixtures_dir().join(name);
            let on_disk = std::fs::read_to_string(&path).unwrap();
            assert_eq!(on_disk, model_to_json(&model), "{name} drifted");
            assert_eq!(load_model(&path).unwrap(), model, "{name} reload");
        }
    }

    #[test]
    fn canonical_mlp_serialization_hash_is_stable() {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(model_to_json(&mlp_4_8_2()).as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(
            hex, "b1b456723f3401d2edfe4a53bd0c7d232c1d625696741eddef5223cf52b7cf99",
            "canonical serialization changed"
        );
    }

    #[test]
    fn fixture_forward_outputs_match_goldens() {
        // Golden values computed with an independent NumPy implementation
        // of the same forward pass (fixtures/*_forward.json).
        #[derive(serde::Deserialize)]
        struct Golden {
            input: Vec<f64>,
            output: Vec<f64>,
        }
        for (model, model_input, golden_file) in [
            (mlp_4_8_2(), mlp_input(), "mlp_4_8_2_forward.json"),
            (conv_4x4(), conv_input(), "conv_4x4_forward.json"),
        ] {
            let text = std::fs::read_to_string(fixtures_dir().join(golden_file)).unwrap();
            let golden: Golden = serde_json::from_str(&text).unwrap();
            assert_eq!(golden.input, model_input, "{golden_file} input drifted");
            let out = model.forward(&golden.input).unwrap();
            assert_eq!(out.len(), golden.output.len());
            for (i, (&got, &want)) in out.iter().zip(&golden.output).enumerate() {
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{golden_file} output {i}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences_at_random_points() {
        let models = [linear_3(), mlp_4_8_2(), conv_4x4()];
        let mut rng = rng::stream(2024, rng::STREAM_INPUTS);
        for model in &models {
            let mut checked = 0;
            let mut attempts = 0;
            while checked < 20 {
                attempts += 1;
                assert!(attempts < 500, "could not find enough kink-free points");
                let x: Vec<f64> = (0..model.input_len())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                // Stay away from relu kinks where finite differences lie.
                if model.min_abs_relu_preactivation(&x).unwrap() < 1e-4 {
                    continue;
                }
                for class in 0..model.output_dim() {
                    let analytic = model.input_gradient(&x, class).unwrap();
                    for i in 0..x.len() {
                        let h = 1e-5;
                        let mut hi = x.clone();
                        let mut lo = x.clone();
                        hi[i] += h;
                        lo[i] -= h;
                        let fd = (model.forward(&hi).unwrap()[class]
                            - model.forward(&lo).unwrap()[class])
                            / (2.0 * h);
                        assert!(
                            (analytic[i] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                            "class {class} input {i}: analytic {} vs fd {fd}",
                            analytic[i]
                        );
                    }
                }
                checked += 1;
            }
        }
    }
}
