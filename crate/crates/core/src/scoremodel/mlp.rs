use ndarray::{Array2, ArrayView1, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use crate::diffkit::{self, DualValue, DualVar, Var};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Softplus,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "softplus" => Ok(Activation::Softplus),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Softplus => diffkit::softplus(x),
        }
    }

    fn apply_dual(self, x: DualValue) -> DualValue {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Softplus => x.softplus(),
        }
    }

    fn apply_tape(self, x: DualVar<'_>) -> DualVar<'_> {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Softplus => x.softplus(),
        }
    }
}

/// Architecture of the score network. Output width equals input width.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub output_dim: usize,
    pub seed: u64,
}

/// Location of one affine layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, activation: Activation, seed: u64) -> Self {
        MlpSpec {
            input_dim,
            hidden_dims,
            activation,
            output_dim: input_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.output_dim != self.input_dim {
            return Err(Error::Config(format!(
                "output_dim {} must equal input_dim {}",
                self.output_dim, self.input_dim
            )));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let widths: Vec<usize> = std::iter::once(self.input_dim)
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(self.output_dim))
            .collect();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let shape = LayerShape {
                    rows,
                    cols,
                    weight_offset: offset,
                    bias_offset: offset + rows * cols,
                };
                offset += rows * cols + rows;
                shape
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.rows * l.cols + l.rows).sum()
    }
}

/// Network weights, stored flat: for each layer, `W` row-major then `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    spec: MlpSpec,
    flat: Vec<f64>,
}

impl Params {
    pub fn from_flat(spec: MlpSpec, flat: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if flat.len() != spec.param_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.param_count(),
                got: flat.len(),
            });
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        Ok(Params { spec, flat })
    }

    /// Single affine layer `s(u) = W u + b`.
    pub fn linear(weights: Array2<f64>, bias: Vec<f64>) -> Result<Self> {
        let d = weights.nrows();
        if weights.ncols() != d || bias.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: weights.ncols().max(bias.len()),
            });
        }
        let spec = MlpSpec::new(d, vec![], Activation::Tanh, 0);
        let mut flat: Vec<f64> = weights.iter().copied().collect();
        flat.extend(bias);
        Params::from_flat(spec, flat)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    /// Weight matrix (`rows × cols`) and bias of each layer.
    pub fn layer_views(&self) -> Vec<(ArrayView2<'_, f64>, ArrayView1<'_, f64>)> {
        self.spec
            .layers()
            .into_iter()
            .map(|l| {
                let w = &self.flat[l.weight_offset..l.bias_offset];
                let b = &self.flat[l.bias_offset..l.bias_offset + l.rows];
                (
                    ArrayView2::from_shape((l.rows, l.cols), w).expect("layer shape"),
                    ArrayView1::from(b),
                )
            })
            .collect()
    }

    /// Zeroes the last layer, making the score identically zero.
    pub fn zero_output_layer(&mut self) {
        let last = *self.spec.layers().last().expect("at least one layer");
        self.flat[last.weight_offset..last.bias_offset + last.rows].fill(0.0);
    }
}

/// Weights `N(0, 1/fan_in)`, biases zero; deterministic in `spec.seed`.
pub fn init_params(spec: &MlpSpec) -> Result<Params> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Stream::ModelInit);
    let mut flat = vec![0.0; spec.param_count()];
    for l in spec.layers() {
        let scale = 1.0 / (l.cols as f64).sqrt();
        for w in &mut flat[l.weight_offset..l.bias_offset] {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w = z * scale;
        }
    }
    Params::from_flat(spec.clone(), flat)
}

fn check_dim(params: &Params, got: usize) -> Result<()> {
    if got != params.spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.spec.input_dim,
            got,
        });
    }
    Ok(())
}

/// The network output at `u`, an estimate of `∇_u log p(u)`.
pub fn score(params: &Params, u: &[f64]) -> Result<Vec<f64>> {
    check_dim(params, u.len())?;
    let layers = params.spec.layers();
    let last = layers.len() - 1;
    let mut h = u.to_vec();
    for (i, l) in layers.iter().enumerate() {
        let w = &params.flat[l.weight_offset..l.bias_offset];
        let b = &params.flat[l.bias_offset..l.bias_offset + l.rows];
        let mut out: Vec<f64> = b.to_vec();
        for (r, o) in out.iter_mut().enumerate() {
            let row = &w[r * l.cols..(r + 1) * l.cols];
            *o += row.iter().zip(&h).map(|(a, x)| a * x).sum::<f64>();
        }
        if i != last {
            out.iter_mut()
                .for_each(|x| *x = params.spec.activation.apply(*x));
        }
        h = out;
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteScore);
    }
    Ok(h)
}

/// `(s(u), J_s(u) v)` by forward-mode propagation.
pub fn score_jvp(params: &Params, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(params, u.len())?;
    let layers = params.spec.layers();
    let last = layers.len() - 1;
    let act = params.spec.activation;
    let (s, jv) = diffkit::jvp(
        |x| {
            let mut h = x.to_vec();
            for (i, l) in layers.iter().enumerate() {
                let w = &params.flat[l.weight_offset..l.bias_offset];
                let b = &params.flat[l.bias_offset..l.bias_offset + l.rows];
                h = diffkit::affine(w, b, &h);
                if i != last {
                    h.iter_mut().for_each(|x| *x = act.apply_dual(*x));
                }
            }
            h
        },
        u,
        v,
    )?;
    if s.iter().chain(&jv).any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteScore);
    }
    Ok((s, jv))
}

/// The network on a tape: `theta` is the flat `1 × P` parameter row and
/// `input` a batch of rows with their tangent directions.
pub fn tape_score<'t>(spec: &MlpSpec, theta: Var<'t>, input: DualVar<'t>) -> DualVar<'t> {
    let layers = spec.layers();
    let last = layers.len() - 1;
    let mut h = input;
    for (i, l) in layers.iter().enumerate() {
        let w = theta.slice(l.weight_offset, l.rows, l.cols);
        let b = theta.slice(l.bias_offset, 1, l.rows);
        h = h.affine(w, b);
        if i != last {
            h = spec.activation.apply_tape(h);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_is_deterministic() {
        let spec = MlpSpec::new(4, vec![8, 8], Activation::Tanh, 11);
        assert_eq!(init_params(&spec).unwrap(), init_params(&spec).unwrap());
        let other = MlpSpec { seed: 12, ..spec.clone() };
        assert_ne!(init_params(&spec).unwrap(), init_params(&other).unwrap());
    }

    #[test]
    fn biases_start_at_zero() {
        let spec = MlpSpec::new(3, vec![5], Activation::Softplus, 1);
        let p = init_params(&spec).unwrap();
        for (_, b) in p.layer_views() {
            assert!(b.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn no_hidden_layers_gives_a_linear_score() {
        let spec = MlpSpec::new(3, vec![], Activation::Tanh, 5);
        let p = init_params(&spec).unwrap();
        let a = score(&p, &[1.0, 2.0, 3.0]).unwrap();
        let b = score(&p, &[2.0, 4.0, 6.0]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn first_layer_variance_follows_fan_in() {
        let spec = MlpSpec::new(64, vec![64], Activation::Tanh, 3);
        let p = init_params(&spec).unwrap();
        let (w, _) = p.layer_views()[0];
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var * 64.0 - 1.0).abs() < 0.2, "variance {var}");
    }

    #[test]
    fn negative_identity_is_the_standard_normal_score() {
        let p = Params::linear(-Array2::eye(3), vec![0.0; 3]).unwrap();
        assert_eq!(score(&p, &[0.5, -1.0, 2.0]).unwrap(), vec![-0.5, 1.0, -2.0]);
        let (_, jv) = score_jvp(&p, &[0.5, -1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(jv, vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn swap_matrix_jvp() {
        let p = Params::linear(array![[0.0, 1.0], [1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let (_, jv) = score_jvp(&p, &[0.3, 0.4], &[1.0, 0.0]).unwrap();
        assert_eq!(jv, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_output_layer_silences_the_network() {
        let spec = MlpSpec::new(4, vec![6], Activation::Tanh, 2);
        let mut p = init_params(&spec).unwrap();
        p.zero_output_layer();
        assert_eq!(score(&p, &[1.0, -1.0, 0.5, 2.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let p = Params::linear(-Array2::eye(2), vec![0.0; 2]).unwrap();
        assert!(matches!(
            score(&p, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn output_width_must_match_input() {
        let mut spec = MlpSpec::new(3, vec![4], Activation::Tanh, 0);
        spec.output_dim = 2;
        assert!(init_params(&spec).is_err());
    }
}
