use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    None,
}

/// One layer of a feed-forward stack. Convolutions use zero padding of
/// `kernel / 2` on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Dense {
        width: usize,
        activation: Activation,
    },
}

/// Input dimensions plus layer stack; the last layer must be a dense layer
/// of width 10 without activation (softmax is applied by the loss).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// Channels, height, width.
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// Resolved tensor shapes of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LayerShape {
    Conv {
        in_c: usize,
        in_h: usize,
        in_w: usize,
        out_c: usize,
        out_h: usize,
        out_w: usize,
        k: usize,
        stride: usize,
        pad: usize,
        relu: bool,
    },
    Dense {
        inputs: usize,
        outputs: usize,
        relu: bool,
    },
}

impl LayerShape {
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerShape::Conv { in_c, k, .. } => in_c * k * k,
            LayerShape::Dense { inputs, .. } => inputs,
        }
    }

    pub fn weight_len(&self) -> usize {
        match *self {
            LayerShape::Conv { in_c, out_c, k, .. } => in_c * k * k * out_c,
            LayerShape::Dense { inputs, outputs, .. } => inputs * outputs,
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerShape::Conv { out_c, .. } => out_c,
            LayerShape::Dense { outputs, .. } => outputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerShape::Conv { out_c, out_h, out_w, .. } => out_c * out_h * out_w,
            LayerShape::Dense { outputs, .. } => outputs,
        }
    }

    pub fn relu(&self) -> bool {
        match *self {
            LayerShape::Conv { relu, .. } | LayerShape::Dense { relu, .. } => relu,
        }
    }
}

impl Architecture {
    /// Two stride-2 3×3 convolutions (16 and 32 channels), dense 128, dense 10.
    pub fn default_cnn(height: usize, width: usize) -> Self {
        Self {
            input: [1, height, width],
            layers: vec![
                LayerSpec::Conv {
                    out_channels: 16,
                    kernel: 3,
                    stride: 2,
                    activation: Activation::Relu,
                },
                LayerSpec::Conv {
                    out_channels: 32,
                    kernel: 3,
                    stride: 2,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    width: 128,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    width: CLASSES,
                    activation: Activation::None,
                },
            ],
        }
    }

    /// Flatten, one hidden ReLU layer, dense 10.
    pub fn mlp(height: usize, width: usize, hidden: usize) -> Self {
        Self {
            input: [1, height, width],
            layers: vec![
                LayerSpec::Dense {
                    width: hidden,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    width: CLASSES,
                    activation: Activation::None,
                },
            ],
        }
    }

    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }

    pub(crate) fn shapes(&self) -> Result<Vec<LayerShape>> {
        let [c, h, w] = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::Architecture(format!("input dims {:?} must be positive", self.input)));
        }
        match self.layers.last() {
            Some(LayerSpec::Dense {
                width: CLASSES,
                activation: Activation::None,
            }) => {}
            _ => {
                return Err(Error::Architecture(
                    "last layer must be dense of width 10 without activation".into(),
                ))
            }
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let (mut c, mut h, mut w) = (c, h, w);
        let mut flat = false;
        for (n, spec) in self.layers.iter().enumerate() {
            match *spec {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    stride,
                    activation,
                } => {
                    if flat {
                        return Err(Error::Architecture(format!("layer {n}: convolution after dense layer")));
                    }
                    if out_channels == 0 || kernel == 0 || stride == 0 {
                        return Err(Error::Architecture(format!("layer {n}: zero-sized convolution")));
                    }
                    let pad = kernel / 2;
                    if h + 2 * pad < kernel || w + 2 * pad < kernel {
                        return Err(Error::Architecture(format!(
                            "layer {n}: kernel {kernel} larger than padded input {h}x{w}"
                        )));
                    }
                    let out_h = (h + 2 * pad - kernel) / stride + 1;
                    let out_w = (w + 2 * pad - kernel) / stride + 1;
                    shapes.push(LayerShape::Conv {
                        in_c: c,
                        in_h: h,
                        in_w: w,
                        out_c: out_channels,
                        out_h,
                        out_w,
                        k: kernel,
                        stride,
                        pad,
                        relu: activation == Activation::Relu,
                    });
                    (c, h, w) = (out_channels, out_h, out_w);
                }
                LayerSpec::Dense { width, activation } => {
                    if width == 0 {
                        return Err(Error::Architecture(format!("layer {n}: zero-width dense layer")));
                    }
                    shapes.push(LayerShape::Dense {
                        inputs: c * h * w,
                        outputs: width,
                        relu: activation == Activation::Relu,
                    });
                    (c, h, w) = (width, 1, 1);
                    flat = true;
                }
            }
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cnn_shapes() {
        let s = Architecture::default_cnn(32, 32).shapes().unwrap();
        assert_eq!(s[0].output_len(), 16 * 16 * 16);
        assert_eq!(s[1].output_len(), 32 * 8 * 8);
        assert_eq!(s[2], LayerShape::Dense { inputs: 2048, outputs: 128, relu: true });
        assert_eq!(s[3].output_len(), 10);
    }

    #[test]
    fn rejects_bad_chains() {
        let mut a = Architecture::mlp(4, 4, 8);
        a.layers.pop();
        assert!(matches!(a.validate(), Err(Error::Architecture(_))));
        let a = Architecture {
            input: [1, 4, 4],
            layers: vec![
                LayerSpec::Dense { width: 8, activation: Activation::Relu },
                LayerSpec::Conv { out_channels: 2, kernel: 3, stride: 1, activation: Activation::Relu },
                LayerSpec::Dense { width: 10, activation: Activation::None },
            ],
        };
        assert!(a.validate().is_err());
    }

    #[test]
    fn dense_weight_count() {
        let a = Architecture {
            input: [1, 32, 32],
            layers: vec![
                LayerSpec::Dense { width: 256, activation: Activation::Relu },
                LayerSpec::Dense { width: 10, activation: Activation::None },
            ],
        };
        assert_eq!(a.shapes().unwrap()[0].weight_len(), 262144);
    }

    #[test]
    fn json_round_trip() {
        let a = Architecture::default_cnn(32, 32);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"type\":\"conv\""));
        assert_eq!(serde_json::from_str::<Architecture>(&s).unwrap(), a);
    }
}
