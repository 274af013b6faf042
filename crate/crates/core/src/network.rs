//! ReLU feed-forward networks with exact rational weights.
//!
//! Weights come from a JSON file; decimal literals are converted to exact
//! rationals (`0.1` becomes `1/10`), never through a binary float. The
//! network is immutable after loading and all operations are pure.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::NetworkError;
use crate::rat::{self, Rat};
use crate::theory::{LinRel, LinSystem};

/// Activation applied after a layer's affine transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

/// One layer: `x ↦ f(W x + b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    /// Row-major weight matrix, `out_dim × in_dim`.
    pub weights: Vec<Vec<Rat>>,
    pub bias: Vec<Rat>,
    pub activation: Activation,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map(|r| r.len()).unwrap_or(0)
    }
}

/// A feed-forward network; the last layer is always linear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Sign tag of one ReLU neuron within an activation pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NeuronSign {
    /// Pre-activation >= 0 (identity branch).
    Active,
    /// Pre-activation <= 0 (zero branch).
    Inactive,
}

/// Per-ReLU sign tags in layer-then-index order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ActivationPattern(pub Vec<NeuronSign>);

impl ActivationPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An affine map `z ↦ A z + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<Rat>>,
    pub bias: Vec<Rat>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> AffineMap {
        let matrix = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { rat::one() } else { rat::zero() })
                    .collect()
            })
            .collect();
        AffineMap { matrix, bias: vec![rat::zero(); dim] }
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn apply(&self, z: &[Rat]) -> Vec<Rat> {
        self.matrix
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| crate::theory::dot(row, z) + b)
            .collect()
    }

    /// Row `i` as `(coefficients, constant)`.
    pub fn row(&self, i: usize) -> (&[Rat], &Rat) {
        (&self.matrix[i], &self.bias[i])
    }
}

impl Network {
    /// Input dimension `I`.
    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.in_dim()).unwrap_or(0)
    }

    /// Output dimension `O`.
    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(0)
    }

    /// Total number of ReLU neurons `N`.
    pub fn num_relus(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .map(|l| l.out_dim())
            .sum()
    }

    fn validate(&self) -> Result<(), NetworkError> {
        if self.layers.is_empty() {
            return Err(NetworkError::Schema("network has no layers".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(NetworkError::Dimension(format!("layer {} has no rows", k)));
            }
            let in_dim = layer.in_dim();
            if layer.weights.iter().any(|r| r.len() != in_dim) {
                return Err(NetworkError::Dimension(format!(
                    "layer {} has ragged weight rows",
                    k
                )));
            }
            if in_dim == 0 {
                return Err(NetworkError::Dimension(format!("layer {} has zero inputs", k)));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(NetworkError::Dimension(format!(
                    "layer {}: bias length {} != {} rows",
                    k,
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            if k > 0 && self.layers[k - 1].out_dim() != in_dim {
                return Err(NetworkError::Dimension(format!(
                    "layer {} expects {} inputs but layer {} emits {}",
                    k,
                    in_dim,
                    k - 1,
                    self.layers[k - 1].out_dim()
                )));
            }
        }
        if self.layers.last().unwrap().activation != Activation::Linear {
            return Err(NetworkError::Schema("last layer must be linear".into()));
        }
        Ok(())
    }

    /// Exact forward pass.
    pub fn evaluate(&self, z: &[Rat]) -> Vec<Rat> {
        assert_eq!(z.len(), self.input_dim(), "input arity mismatch");
        let mut x = z.to_vec();
        for layer in &self.layers {
            let mut next: Vec<Rat> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| crate::theory::dot(row, &x) + b)
                .collect();
            if layer.activation == Activation::Relu {
                for v in next.iter_mut() {
                    if *v < rat::zero() {
                        *v = rat::zero();
                    }
                }
            }
            x = next;
        }
        x
    }

    /// Activation pattern induced by an input. A pre-activation of exactly
    /// zero tags `Active`; ReLU is continuous, so the affine map of the
    /// pattern agrees with the network on cell boundaries either way.
    pub fn pattern(&self, z: &[Rat]) -> ActivationPattern {
        assert_eq!(z.len(), self.input_dim(), "input arity mismatch");
        let mut tags = Vec::with_capacity(self.num_relus());
        let mut x = z.to_vec();
        for layer in &self.layers {
            let mut next: Vec<Rat> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| crate::theory::dot(row, &x) + b)
                .collect();
            if layer.activation == Activation::Relu {
                for v in next.iter_mut() {
                    if *v >= rat::zero() {
                        tags.push(NeuronSign::Active);
                    } else {
                        tags.push(NeuronSign::Inactive);
                        *v = rat::zero();
                    }
                }
            }
            x = next;
        }
        ActivationPattern(tags)
    }

    /// The single affine map the network computes under a fixed activation
    /// pattern, together with the closed polyhedral cell of inputs that
    /// force the pattern (pre-activation >= 0 for active neurons, <= 0 for
    /// inactive ones, expressed affinely in the inputs by forward
    /// substitution).
    pub fn local_affine(&self, pat: &ActivationPattern, input_vars: &[String]) -> (AffineMap, LinSystem) {
        assert_eq!(pat.len(), self.num_relus(), "pattern length mismatch");
        assert_eq!(input_vars.len(), self.input_dim());
        let mut map = AffineMap::identity(self.input_dim());
        let mut cell = LinSystem::new(input_vars.to_vec());
        let mut tag_idx = 0;
        for layer in &self.layers {
            // Compose the affine layer: rows over the current map.
            let mut matrix = Vec::with_capacity(layer.out_dim());
            let mut bias = Vec::with_capacity(layer.out_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut new_row = vec![rat::zero(); map.in_dim()];
                let mut new_b = b.clone();
                for (w, (mrow, mb)) in row.iter().zip(map.matrix.iter().zip(&map.bias)) {
                    if w == &rat::zero() {
                        continue;
                    }
                    for (nr, m) in new_row.iter_mut().zip(mrow) {
                        *nr += w * m;
                    }
                    new_b += w * mb;
                }
                matrix.push(new_row);
                bias.push(new_b);
            }
            if layer.activation == Activation::Relu {
                for i in 0..matrix.len() {
                    let sign = pat.0[tag_idx];
                    tag_idx += 1;
                    // active: -(pre) <= 0 ; inactive: pre <= 0
                    match sign {
                        NeuronSign::Active => {
                            let coeffs: Vec<Rat> =
                                matrix[i].iter().map(|c| -c.clone()).collect();
                            cell.push(coeffs, LinRel::Le, bias[i].clone());
                        }
                        NeuronSign::Inactive => {
                            cell.push(matrix[i].clone(), LinRel::Le, -bias[i].clone());
                            // Zero branch: the neuron's output is 0.
                            for c in matrix[i].iter_mut() {
                                *c = rat::zero();
                            }
                            bias[i] = rat::zero();
                        }
                    }
                }
            }
            map = AffineMap { matrix, bias };
        }
        (map, cell)
    }
}

/// Parse and validate a network from JSON bytes.
///
/// Schema: `{"layers": [{"weights": [[...]], "bias": [...],
/// "activation": "relu"|"linear"}, ...]}` where numbers are decimals or
/// strings like `"1/3"`.
pub fn load_network(bytes: &[u8]) -> Result<Network, NetworkError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| NetworkError::Schema(e.to_string()))?;
    let layers_value = value
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| NetworkError::Schema("missing 'layers' array".into()))?;
    let mut layers = Vec::with_capacity(layers_value.len());
    for (k, lv) in layers_value.iter().enumerate() {
        let weights_value = lv
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| NetworkError::Schema(format!("layer {}: missing 'weights'", k)))?;
        let mut weights = Vec::with_capacity(weights_value.len());
        for row in weights_value {
            let row = row
                .as_array()
                .ok_or_else(|| NetworkError::Schema(format!("layer {}: weights must be rows", k)))?;
            let row: Result<Vec<Rat>, NetworkError> =
                row.iter().map(|v| number_to_rat(v, k)).collect();
            weights.push(row?);
        }
        let bias_value = lv
            .get("bias")
            .and_then(Value::as_array)
            .ok_or_else(|| NetworkError::Schema(format!("layer {}: missing 'bias'", k)))?;
        let bias: Result<Vec<Rat>, NetworkError> =
            bias_value.iter().map(|v| number_to_rat(v, k)).collect();
        let activation = match lv.get("activation").and_then(Value::as_str) {
            Some("relu") => Activation::Relu,
            Some("linear") => Activation::Linear,
            Some(other) => return Err(NetworkError::Activation(other.to_string())),
            None => return Err(NetworkError::Schema(format!("layer {}: missing 'activation'", k))),
        };
        layers.push(Layer { weights, bias: bias?, activation });
    }
    let net = Network { layers };
    net.validate()?;
    Ok(net)
}

fn number_to_rat(v: &Value, layer: usize) -> Result<Rat, NetworkError> {
    let text = match v {
        // serde_json's arbitrary-precision mode preserves the literal text,
        // so decimals convert exactly.
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => {
            return Err(NetworkError::Schema(format!(
                "layer {}: expected number, found {}",
                layer, other
            )))
        }
    };
    rat::parse_rat(&text).ok_or_else(|| {
        NetworkError::Schema(format!("layer {}: malformed number '{}'", layer, text))
    })
}

/// State map for evaluating formulas against a named input/output pair.
pub fn io_state(
    inputs: &[String],
    z: &[Rat],
    outputs: &[String],
    x: &[Rat],
) -> BTreeMap<String, Rat> {
    inputs
        .iter()
        .cloned()
        .zip(z.iter().cloned())
        .chain(outputs.iter().cloned().zip(x.iter().cloned()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    pub(crate) fn abs_net() -> Network {
        // Computes |z|: hidden ReLUs (z, -z), output sums them.
        Network {
            layers: vec![
                Layer {
                    weights: vec![vec![int(1)], vec![int(-1)]],
                    bias: vec![int(0), int(0)],
                    activation: Activation::Relu,
                },
                Layer {
                    weights: vec![vec![int(1), int(1)]],
                    bias: vec![int(0)],
                    activation: Activation::Linear,
                },
            ],
        }
    }

    fn identity_net() -> Network {
        Network {
            layers: vec![Layer {
                weights: vec![vec![int(1)]],
                bias: vec![int(0)],
                activation: Activation::Linear,
            }],
        }
    }

    #[test]
    fn loads_identity_and_abs() {
        let net = load_network(
            br#"{"layers":[{"weights":[[1]],"bias":[0],"activation":"linear"}]}"#,
        )
        .unwrap();
        assert_eq!(net.input_dim(), 1);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.num_relus(), 0);

        let net = load_network(
            br#"{"layers":[
                {"weights":[[1],[-1]],"bias":[0,0],"activation":"relu"},
                {"weights":[[1,1]],"bias":[0],"activation":"linear"}
            ]}"#,
        )
        .unwrap();
        assert_eq!(net, abs_net());
        assert_eq!(net.num_relus(), 2);
    }

    #[test]
    fn decimal_weights_are_exact() {
        let net = load_network(
            br#"{"layers":[{"weights":[[0.1,"1/3"]],"bias":[-0.25],"activation":"linear"}]}"#,
        )
        .unwrap();
        assert_eq!(net.layers[0].weights[0][0], frac(1, 10));
        assert_eq!(net.layers[0].weights[0][1], frac(1, 3));
        assert_eq!(net.layers[0].bias[0], frac(-1, 4));
    }

    #[test]
    fn rejects_relu_last_layer() {
        let err = load_network(
            br#"{"layers":[{"weights":[[1]],"bias":[0],"activation":"relu"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("last layer must be linear"));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = load_network(
            br#"{"layers":[
                {"weights":[[1],[2]],"bias":[0,0],"activation":"relu"},
                {"weights":[[1,2,3]],"bias":[0],"activation":"linear"}
            ]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Dimension(_)));
    }

    #[test]
    fn abs_forward_traces() {
        let net = abs_net();
        assert_eq!(net.evaluate(&[frac(1, 2)]), vec![frac(1, 2)]);
        assert_eq!(net.evaluate(&[int(-2)]), vec![int(2)]);
        assert_eq!(identity_net().evaluate(&[frac(-7, 3)]), vec![frac(-7, 3)]);
    }

    #[test]
    fn patterns_with_boundary_rule() {
        let net = abs_net();
        assert_eq!(
            net.pattern(&[frac(1, 2)]),
            ActivationPattern(vec![NeuronSign::Active, NeuronSign::Inactive])
        );
        // Zero pre-activations tag active on both neurons.
        assert_eq!(
            net.pattern(&[int(0)]),
            ActivationPattern(vec![NeuronSign::Active, NeuronSign::Active])
        );
        assert_eq!(identity_net().pattern(&[int(3)]), ActivationPattern(vec![]));
    }

    #[test]
    fn local_affine_cells() {
        let net = abs_net();
        let vars = vec!["z".to_string()];
        // (active, inactive) forces ω(z) = z on the cell z >= 0.
        let (map, cell) = net.local_affine(
            &ActivationPattern(vec![NeuronSign::Active, NeuronSign::Inactive]),
            &vars,
        );
        assert_eq!(map.apply(&[frac(3, 4)]), vec![frac(3, 4)]);
        assert!(cell.contains(&[int(1)]));
        assert!(cell.contains(&[int(0)]));
        assert!(!cell.contains(&[int(-1)]));
        // (inactive, active) forces ω(z) = -z on z <= 0.
        let (map, cell) = net.local_affine(
            &ActivationPattern(vec![NeuronSign::Inactive, NeuronSign::Active]),
            &vars,
        );
        assert_eq!(map.apply(&[int(-2)]), vec![int(2)]);
        assert!(cell.contains(&[int(-1)]));
        assert!(!cell.contains(&[int(2)]));
        // Identity net: empty pattern, whole space, identity map.
        let (map, cell) = identity_net().local_affine(&ActivationPattern(vec![]), &vars);
        assert_eq!(map.apply(&[int(9)]), vec![int(9)]);
        assert!(cell.rows.is_empty());
    }

    #[test]
    fn local_affine_consistency_on_samples() {
        use rand::{Rng, SeedableRng};
        // Random 2-4-3-1 network with small rational weights.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        let mut mk_layer = |rows: usize, cols: usize, act| Layer {
            weights: (0..rows)
                .map(|_| (0..cols).map(|_| frac(rng.gen_range(-8..=8), 4)).collect())
                .collect(),
            bias: (0..rows).map(|_| frac(rng.gen_range(-8..=8), 4)).collect(),
            activation: act,
        };
        let net = Network {
            layers: vec![
                mk_layer(4, 2, Activation::Relu),
                mk_layer(3, 4, Activation::Relu),
                mk_layer(1, 3, Activation::Linear),
            ],
        };
        let vars = vec!["a".to_string(), "b".to_string()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let z = vec![frac(rng.gen_range(-40..=40), 8), frac(rng.gen_range(-40..=40), 8)];
            let pat = net.pattern(&z);
            let (map, cell) = net.local_affine(&pat, &vars);
            // Exact agreement and cell membership of the inducing point.
            assert_eq!(map.apply(&z), net.evaluate(&z));
            assert!(cell.contains(&z));
        }
    }

    #[test]
    fn pattern_count_bounded() {
        use rand::{Rng, SeedableRng};
        let net = abs_net();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let z = vec![frac(rng.gen_range(-64..=64), 32)];
            seen.insert(net.pattern(&z));
        }
        assert!(seen.len() <= 1 << net.num_relus());
    }
}
