use super::{Scalar, Tensor};
use crate::{Error, Result};

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// SGD hyperparameters and per-parameter momentum buffers.
#[derive(Debug, Clone)]
pub struct OptState<T> {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub velocities: Vec<Tensor<T>>,
}

impl<T: Scalar> OptState<T> {
    pub fn new(learning_rate: f64, weight_decay: f64, momentum: f64) -> Result<Self> {
        let s = OptState {
            learning_rate,
            weight_decay,
            momentum,
            velocities: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        // η = 0 is allowed: it freezes parameters, which tests rely on
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight decay {}", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!("momentum {}", self.momentum)));
        }
        Ok(())
    }
}

/// One step of SGD with L2 weight decay and heavy-ball momentum:
/// `g' = g + λw; v ← μv + g'; w ← w − ηv`. Gradients are zeroed afterwards.
/// Velocity buffers are created on first use.
pub fn sgd_step<T: Scalar>(params: &mut [&mut Parameter<T>], state: &mut OptState<T>) -> Result<()> {
    for p in params.iter() {
        if !p.grad.all_finite() {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
    }
    if state.velocities.is_empty() {
        state.velocities = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
    }
    if state.velocities.len() != params.len()
        || state
            .velocities
            .iter()
            .zip(params.iter())
            .any(|(v, p)| v.shape() != p.value.shape())
    {
        return Err(Error::ShapeMismatch("velocity buffers do not match parameters".into()));
    }
    let (lr, wd, mu) = (
        T::of(state.learning_rate),
        T::of(state.weight_decay),
        T::of(state.momentum),
    );
    for (p, v) in params.iter_mut().zip(state.velocities.iter_mut()) {
        let Parameter { value, grad, .. } = &mut **p;
        for ((w, g), vel) in value.data_mut().iter_mut().zip(grad.data()).zip(v.data_mut()) {
            let g = *g + wd * *w;
            *vel = mu * *vel + g;
            *w = *w - lr * *vel;
        }
        p.zero_grad();
    }
    Ok(())
}
