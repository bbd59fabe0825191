use crate::image::Image;
use crate::nn::{
    affine, affine_backward, conv2d, conv2d_backward, dropout, dropout_backward, he_normal, hinge_loss, pool,
    pool_backward, relu, relu_backward, sgd_step, DropoutMask, Mode, OptState, Parameter, PoolCache, PoolMode, Scalar,
    Tensor, DEFAULT_MARGIN,
};
use crate::rng::{self, Stream};
use crate::{Error, Result};

use super::spec::{LayerSpec, NetworkSpec};

#[derive(Debug, Clone)]
enum Layer<T> {
    Conv {
        weight: Parameter<T>,
        bias: Parameter<T>,
        stride: usize,
        pad: usize,
    },
    Pool {
        mode: PoolMode,
        window: usize,
        stride: usize,
    },
    Affine {
        weight: Parameter<T>,
        bias: Parameter<T>,
    },
    Relu,
    Dropout {
        p: f64,
    },
}

/// Per-layer values kept by a forward pass for the backward pass.
#[derive(Debug)]
enum Cache<T> {
    Input(Tensor<T>),
    Pool(PoolCache),
    Dropout(DropoutMask),
}

/// Record of one forward pass.
#[derive(Debug)]
pub struct Trace<T> {
    caches: Vec<Cache<T>>,
}

/// A built, trainable instance of a [`NetworkSpec`].
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetworkSpec,
    layers: Vec<Layer<T>>,
}

const INIT_KEY: u64 = 0x1417;
const CLASSIFIER: &str = "classifier";

impl<T: Scalar> Network<T> {
    /// Validates `spec` and allocates zero-valued parameters.
    pub fn zeroed(spec: &NetworkSpec) -> Result<Network<T>> {
        spec.validate()?;
        let shapes = spec.shapes()?;
        let mut prev = spec.input;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let (mut convs, mut fcs) = (0, 0);
        for (l, shape) in spec.layers.iter().zip(&shapes) {
            let pair = |name: String, w: &[usize], b: usize| {
                (
                    Parameter::new(format!("{name}.weight"), Tensor::zeros(w)),
                    Parameter::new(format!("{name}.bias"), Tensor::zeros(&[b])),
                )
            };
            layers.push(match *l {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    pad,
                } => {
                    convs += 1;
                    let (weight, bias) = pair(format!("conv{convs}"), &[filters, prev[0], kernel, kernel], filters);
                    Layer::Conv {
                        weight,
                        bias,
                        stride,
                        pad,
                    }
                }
                LayerSpec::Pool { mode, window, stride } => Layer::Pool { mode, window, stride },
                LayerSpec::Affine { width: out } | LayerSpec::Classifier { classes: out } => {
                    let name = if matches!(l, LayerSpec::Classifier { .. }) {
                        CLASSIFIER.to_string()
                    } else {
                        fcs += 1;
                        format!("fc{fcs}")
                    };
                    let (weight, bias) = pair(name, &[out, prev.iter().product()], out);
                    Layer::Affine { weight, bias }
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Dropout { p } => Layer::Dropout { p },
            });
            prev = *shape;
        }
        Ok(Network {
            spec: spec.clone(),
            layers,
        })
    }

    /// Builds the network with He-normal conv and hidden FC weights drawn
    /// from a stream seeded by `seed`. Biases and the classifier weights
    /// start at zero, so every initial score is 0.
    pub fn build(spec: &NetworkSpec, seed: u64) -> Result<Network<T>> {
        let mut net = Self::zeroed(spec)?;
        let mut rng = rng::stream(seed, &[INIT_KEY]);
        for p in net.parameters_mut() {
            if p.value.rank() > 1 && !p.name.starts_with(CLASSIFIER) {
                let fan_in = p.value.len() / p.value.shape()[0];
                p.value = he_normal(p.value.shape(), fan_in, &mut rng);
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        let mut out = Vec::new();
        for l in &self.layers {
            if let Layer::Conv { weight, bias, .. } | Layer::Affine { weight, bias } = l {
                out.push(weight);
                out.push(bias);
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            if let Layer::Conv { weight, bias, .. } | Layer::Affine { weight, bias } = l {
                out.push(weight);
                out.push(bias);
            }
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Copy of the network in another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |p: &Parameter<T>| {
            let mut q = Parameter::new(p.name.clone(), p.value.cast());
            q.grad = p.grad.cast();
            q
        };
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv {
                    weight,
                    bias,
                    stride,
                    pad,
                } => Layer::Conv {
                    weight: conv(weight),
                    bias: conv(bias),
                    stride: *stride,
                    pad: *pad,
                },
                Layer::Pool { mode, window, stride } => Layer::Pool {
                    mode: *mode,
                    window: *window,
                    stride: *stride,
                },
                Layer::Affine { weight, bias } => Layer::Affine {
                    weight: conv(weight),
                    bias: conv(bias),
                },
                Layer::Relu => Layer::Relu,
                Layer::Dropout { p } => Layer::Dropout { p: *p },
            })
            .collect();
        Network {
            spec: self.spec.clone(),
            layers,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let s = x.shape();
        if s.len() != 4 || s[1..] != self.spec.input {
            return Err(Error::ShapeMismatch(format!(
                "batch {:?} does not match network input {:?}",
                s, self.spec.input
            )));
        }
        Ok(())
    }

    /// Runs the stack on an `N×3×H×W` batch and returns `N×K` scores along
    /// with what the backward pass needs. Only train-mode dropout draws from
    /// `rng`.
    pub fn forward(&self, x: &Tensor<T>, mode: Mode, rng: &mut Stream) -> Result<(Tensor<T>, Trace<T>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for l in &self.layers {
            let (next, cache) = match l {
                Layer::Conv {
                    weight,
                    bias,
                    stride,
                    pad,
                } => (
                    conv2d(&cur, &weight.value, &bias.value, *stride, *pad)?,
                    Cache::Input(cur),
                ),
                Layer::Pool { mode, window, stride } => {
                    let (y, c) = pool(&cur, *mode, (*window, *window), *stride)?;
                    (y, Cache::Pool(c))
                }
                Layer::Affine { weight, bias } => (affine(&cur, &weight.value, &bias.value)?, Cache::Input(cur)),
                Layer::Relu => (relu(&cur), Cache::Input(cur)),
                Layer::Dropout { p } => {
                    let (y, m) = dropout(&cur, *p, mode, rng);
                    (y, Cache::Dropout(m))
                }
            };
            caches.push(cache);
            cur = next;
        }
        Ok((cur, Trace { caches }))
    }

    /// Eval-mode scores. Pure: touches no state and no randomness.
    pub fn scores(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for l in &self.layers {
            cur = match l {
                Layer::Conv {
                    weight,
                    bias,
                    stride,
                    pad,
                } => conv2d(&cur, &weight.value, &bias.value, *stride, *pad)?,
                Layer::Pool { mode, window, stride } => pool(&cur, *mode, (*window, *window), *stride)?.0,
                Layer::Affine { weight, bias } => affine(&cur, &weight.value, &bias.value)?,
                Layer::Relu => relu(&cur),
                Layer::Dropout { .. } => cur,
            };
        }
        Ok(cur)
    }

    /// Backpropagates `dscores`, adds parameter gradients into each
    /// parameter's `grad` and returns the gradient w.r.t. the input batch.
    pub fn backward(&mut self, trace: Trace<T>, dscores: &Tensor<T>) -> Result<Tensor<T>> {
        if trace.caches.len() != self.layers.len() {
            return Err(Error::ShapeMismatch("trace does not belong to this network".into()));
        }
        let mut grad = dscores.clone();
        for (l, cache) in self.layers.iter_mut().zip(trace.caches).rev() {
            grad = match (l, cache) {
                (
                    Layer::Conv {
                        weight,
                        bias,
                        stride,
                        pad,
                    },
                    Cache::Input(x),
                ) => {
                    let g = conv2d_backward(&x, &weight.value, &grad, *stride, *pad)?;
                    accumulate(&mut weight.grad, &g.weights);
                    accumulate(&mut bias.grad, &g.bias);
                    g.input
                }
                (Layer::Affine { weight, bias }, Cache::Input(x)) => {
                    let (dx, dw, db) = affine_backward(&x, &weight.value, &grad)?;
                    accumulate(&mut weight.grad, &dw);
                    accumulate(&mut bias.grad, &db);
                    dx
                }
                (Layer::Pool { .. }, Cache::Pool(c)) => pool_backward(&c, &grad)?,
                (Layer::Relu, Cache::Input(x)) => relu_backward(&x, &grad),
                (Layer::Dropout { .. }, Cache::Dropout(m)) => dropout_backward(&m, &grad),
                _ => return Err(Error::ShapeMismatch("trace does not belong to this network".into())),
            };
        }
        Ok(grad)
    }

    /// Train-mode forward, hinge loss and backward; gradients are added to
    /// the parameters' `grad`. Returns the loss.
    pub fn loss_and_grad(&mut self, x: &Tensor<T>, labels: &[usize], rng: &mut Stream) -> Result<T> {
        let (scores, trace) = self.forward(x, Mode::Train, rng)?;
        let (loss, dscores) = hinge_loss(&scores, labels, DEFAULT_MARGIN)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: 0,
                detail: format!("loss {loss:?}"),
            });
        }
        self.backward(trace, &dscores)?;
        Ok(loss)
    }

    /// Class id and scores for one `3×H×W` image.
    pub fn predict(&self, image: &Image) -> Result<(usize, Vec<f64>)> {
        let x = Tensor::from_f64(
            &[1, image.channels, image.height, image.width],
            &image.data.iter().map(|&v| v as f64).collect::<Vec<_>>(),
        )?;
        let s = self.scores(&x)?.to_f64_vec();
        Ok((argmax(&s), s))
    }

    /// Predicted class per row of an eval-mode batch.
    pub fn predict_batch(&self, x: &Tensor<T>) -> Result<Vec<usize>> {
        let s = self.scores(x)?;
        let k = self.spec.classes;
        Ok(s.to_f64_vec().chunks(k).map(argmax).collect())
    }
}

fn accumulate<T: Scalar>(into: &mut Tensor<T>, g: &Tensor<T>) {
    for (a, &b) in into.data_mut().iter_mut().zip(g.data()) {
        *a = *a + b;
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One optimizer update: forward in train mode, hinge loss, backward, SGD.
/// Returns the loss before the update.
pub fn train_step<T: Scalar>(
    net: &mut Network<T>,
    x: &Tensor<T>,
    labels: &[usize],
    opt: &mut OptState<T>,
    rng: &mut Stream,
) -> Result<T> {
    net.zero_grad();
    let loss = net.loss_and_grad(x, labels, rng)?;
    sgd_step(&mut net.parameters_mut(), opt)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetworkSpec, Preset};

    fn desk() -> NetworkSpec {
        NetworkSpec::from_preset(Preset::Desk)
    }

    fn batch(n: usize, seed: u64) -> Tensor<f32> {
        use rand::Rng;
        let mut r = rng::stream(seed, &[]);
        let len = n * 3 * 64 * 64;
        Tensor::from_vec(&[n, 3, 64, 64], (0..len).map(|_| r.random::<f32>()).collect()).unwrap()
    }

    #[test]
    fn build_is_deterministic_with_zero_biases() {
        let a = Network::<f32>::build(&desk(), 9).unwrap();
        let b = Network::<f32>::build(&desk(), 9).unwrap();
        for (p, q) in a.parameters().iter().zip(b.parameters()) {
            assert_eq!(p.value, q.value);
            if p.name.ends_with(".bias") {
                assert!(p.value.data().iter().all(|&v| v == 0.0));
            }
        }
        let c = Network::<f32>::build(&desk(), 10).unwrap();
        assert_ne!(a.parameters()[0].value, c.parameters()[0].value);
    }

    #[test]
    fn parameter_names() {
        let net = Network::<f32>::zeroed(&desk()).unwrap();
        let names: Vec<_> = net.parameters().iter().map(|p| p.name.clone()).collect();
        assert_eq!(names.len(), 22);
        assert_eq!(names[0], "conv1.weight");
        assert_eq!(names[20], "classifier.weight");
        assert_eq!(net.parameters()[20].value.shape(), &[5, 256]);
    }

    #[test]
    fn initial_scores_are_zero() {
        let net = Network::<f32>::build(&desk(), 4).unwrap();
        assert!(net.scores(&batch(2, 1)).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(net.parameters()[18].value.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn zero_classifier_gives_zero_scores() {
        let mut net = Network::<f32>::build(&desk(), 1).unwrap();
        for p in net
            .parameters_mut()
            .into_iter()
            .filter(|p| p.name.starts_with("classifier"))
        {
            p.value.fill(0.0);
        }
        let s = net.scores(&batch(2, 3)).unwrap();
        assert_eq!(s.shape(), &[2, 5]);
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eval_forward_matches_scores_and_is_repeatable() {
        let net = Network::<f32>::build(&desk(), 1).unwrap();
        let x = batch(3, 4);
        let mut r = rng::stream(0, &[]);
        let (a, _) = net.forward(&x, Mode::Eval, &mut r).unwrap();
        assert_eq!(a, net.scores(&x).unwrap());
        assert_eq!(net.scores(&x).unwrap(), net.scores(&x).unwrap());
        assert_eq!(rng::save_state(&r), rng::save_state(&rng::stream(0, &[])));
    }

    #[test]
    fn wrong_input_shape() {
        let net = Network::<f32>::build(&desk(), 1).unwrap();
        let x = Tensor::<f32>::zeros(&[1, 3, 32, 32]);
        assert!(matches!(net.scores(&x), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[0.1, 0.9, 0.2, 0.2, 0.1]), 1);
        assert_eq!(argmax(&[0.3; 5]), 0);
    }

    #[test]
    fn predict_agrees_with_forward() {
        let net = Network::<f32>::build(&desk(), 5).unwrap();
        let x = batch(1, 8);
        let img = Image::new(3, 64, 64, x.data().to_vec()).unwrap();
        let (class, scores) = net.predict(&img).unwrap();
        let s = net.scores(&x).unwrap().to_f64_vec();
        assert_eq!(scores, s);
        assert_eq!(class, argmax(&s));
    }

    #[test]
    fn zero_learning_rate_freezes() {
        let mut net = Network::<f32>::build(&desk(), 2).unwrap();
        let before: Vec<_> = net.parameters().iter().map(|p| p.value.clone()).collect();
        let mut opt = OptState::new(0.0, 0.0005, 0.9).unwrap();
        train_step(
            &mut net,
            &batch(4, 1),
            &[0, 1, 2, 3],
            &mut opt,
            &mut rng::stream(1, &[]),
        )
        .unwrap();
        for (p, b) in net.parameters().iter().zip(&before) {
            assert_eq!(&p.value, b);
        }
    }
}
