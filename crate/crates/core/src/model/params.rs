use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::{Real, Tensor};

/// Output normalization and loss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Row softmax with categorical cross-entropy.
    #[default]
    Multiclass,
    /// Element-wise sigmoid with binary cross-entropy.
    Multilabel,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiclass" => Ok(Mode::Multiclass),
            "multilabel" => Ok(Mode::Multilabel),
            other => Err(format!(
                "unknown mode {other:?} (expected multiclass or multilabel)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Multiclass => "multiclass",
            Mode::Multilabel => "multilabel",
        })
    }
}

/// How member node representations are pooled into a subgraph representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Weighted subgraph attention driven by the per-member weights.
    #[default]
    Attention,
    /// Unweighted sum of member representations (ablation).
    Sum,
}

/// Shape and behavior of a model, independent of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub num_nodes: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    pub mode: Mode,
    pub dropout_rate: f64,
    pub leaky_slope: f64,
    pub pooling: Pooling,
}

/// Parameters of one dual-attention message passing layer. Weights are stored
/// `in × out` so that row-major states multiply on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub w_node: Tensor<T>,
    pub b_node: Tensor<T>,
    pub w_edge: Tensor<T>,
    pub b_edge: Tensor<T>,
    pub context: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Two hidden fully connected ReLU layers followed by the output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<T> {
    pub hidden: [DenseLayer<T>; 2],
    pub output: DenseLayer<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub arch: Architecture,
    pub node_embeddings: Tensor<T>,
    pub layers: Vec<LayerParams<T>>,
    pub subgraph_context: Tensor<T>,
    pub head: HeadParams<T>,
}

fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, shape: &[usize], bound: f64) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64(rng.gen_range(-bound..=bound)))
        .collect();
    Tensor::new(shape, data).expect("finite init")
}

fn glorot<T: Real, R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor<T> {
    uniform(
        rng,
        &[fan_in, fan_out],
        (6.0 / (fan_in + fan_out) as f64).sqrt(),
    )
}

fn dense<T: Real, R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> DenseLayer<T> {
    DenseLayer {
        weight: glorot(rng, fan_in, fan_out),
        bias: Tensor::zeros(&[1, fan_out]),
    }
}

impl<T: Real> ModelParams<T> {
    /// Fresh parameters: embeddings and context vectors uniform in `±1/√d`,
    /// Glorot-uniform weight matrices, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        assert!(arch.num_layers >= 1 && arch.hidden_dim >= 1 && arch.num_classes >= 1);
        let d = arch.hidden_dim;
        let bound = 1.0 / (d as f64).sqrt();
        let node_embeddings = uniform(rng, &[arch.num_nodes, d], bound);
        let layers = (0..arch.num_layers)
            .map(|_| LayerParams {
                w_node: glorot(rng, d, d),
                b_node: Tensor::zeros(&[1, d]),
                w_edge: glorot(rng, d, d),
                b_edge: Tensor::zeros(&[1, d]),
                context: uniform(rng, &[1, d], bound),
            })
            .collect();
        let subgraph_context = uniform(rng, &[1, d], bound);
        let head = HeadParams {
            hidden: [dense(rng, d, d), dense(rng, d, d)],
            output: dense(rng, d, arch.num_classes),
        };
        Self {
            arch,
            node_embeddings,
            layers,
            subgraph_context,
            head,
        }
    }

    /// Parameter names in the canonical order shared by [`Self::tensors`] and checkpoints.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["node_embeddings".to_string()];
        for k in 0..self.layers.len() {
            for p in ["w_node", "b_node", "w_edge", "b_edge", "context"] {
                names.push(format!("layers.{k}.{p}"));
            }
        }
        names.push("subgraph_context".into());
        for p in [
            "hidden.0.weight",
            "hidden.0.bias",
            "hidden.1.weight",
            "hidden.1.bias",
        ] {
            names.push(format!("head.{p}"));
        }
        names.push("head.output.weight".into());
        names.push("head.output.bias".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = vec![&self.node_embeddings];
        for l in &self.layers {
            out.extend([&l.w_node, &l.b_node, &l.w_edge, &l.b_edge, &l.context]);
        }
        out.push(&self.subgraph_context);
        let [h0, h1] = &self.head.hidden;
        out.extend([&h0.weight, &h0.bias, &h1.weight, &h1.bias]);
        out.extend([&self.head.output.weight, &self.head.output.bias]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.node_embeddings];
        for l in &mut self.layers {
            out.extend([
                &mut l.w_node,
                &mut l.b_node,
                &mut l.w_edge,
                &mut l.b_edge,
                &mut l.context,
            ]);
        }
        out.push(&mut self.subgraph_context);
        let [h0, h1] = &mut self.head.hidden;
        out.extend([&mut h0.weight, &mut h0.bias, &mut h1.weight, &mut h1.bias]);
        out.extend([&mut self.head.output.weight, &mut self.head.output.bias]);
        out
    }

    /// Expected shape of every tensor, in canonical order.
    pub fn expected_shapes(arch: &Architecture) -> Vec<Vec<usize>> {
        let d = arch.hidden_dim;
        let mut out = vec![vec![arch.num_nodes, d]];
        for _ in 0..arch.num_layers {
            out.extend([vec![d, d], vec![1, d], vec![d, d], vec![1, d], vec![1, d]]);
        }
        out.push(vec![1, d]);
        out.extend([vec![d, d], vec![1, d], vec![d, d], vec![1, d]]);
        out.extend([vec![d, arch.num_classes], vec![1, arch.num_classes]]);
        out
    }

    /// Rebuilds from tensors in canonical order; `None` if count or shapes disagree.
    pub fn from_tensors(arch: Architecture, tensors: Vec<Tensor<T>>) -> Option<Self> {
        let shapes = Self::expected_shapes(&arch);
        if shapes.len() != tensors.len()
            || shapes
                .iter()
                .zip(&tensors)
                .any(|(s, t)| s.as_slice() != t.shape())
        {
            return None;
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().unwrap();
        let node_embeddings = next();
        let layers = (0..arch.num_layers)
            .map(|_| LayerParams {
                w_node: next(),
                b_node: next(),
                w_edge: next(),
                b_edge: next(),
                context: next(),
            })
            .collect();
        let subgraph_context = next();
        let h0 = DenseLayer {
            weight: next(),
            bias: next(),
        };
        let h1 = DenseLayer {
            weight: next(),
            bias: next(),
        };
        let output = DenseLayer {
            weight: next(),
            bias: next(),
        };
        Some(Self {
            arch,
            node_embeddings,
            layers,
            subgraph_context,
            head: HeadParams {
                hidden: [h0, h1],
                output,
            },
        })
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let tensors = self.tensors().into_iter().map(|t| t.cast()).collect();
        ModelParams::from_tensors(self.arch.clone(), tensors).expect("same shapes")
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
