use super::tensor::ParamTensor;
use crate::error::{Error, Result};

/// Dense affine layer `y = W x + b` with `W` of shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamTensor,
    pub bias: ParamTensor,
}

impl Linear {
    pub fn new(weight: ParamTensor, bias: ParamTensor) -> Result<Self> {
        if weight.shape().len() != 2 || bias.len() != weight.shape()[0] {
            return Err(Error::ContractViolation(format!(
                "linear layer weight {:?} and bias {:?} disagree",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Linear { weight, bias })
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Applies the layer to each `in_dim`-wide row of `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        linear_forward(x, &self.weight, &self.bias)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &[f64], grad_out: &[f64]) -> Result<Vec<f64>> {
        linear_backward(x, &mut self.weight, &mut self.bias, grad_out)
    }
}

pub fn linear_forward(x: &[f64], weight: &ParamTensor, bias: &ParamTensor) -> Result<Vec<f64>> {
    let (out_dim, in_dim) = dims(weight, bias)?;
    if x.len() % in_dim != 0 {
        return Err(Error::ContractViolation(format!(
            "linear input width must be a multiple of {in_dim}, got {} values",
            x.len()
        )));
    }
    let rows = x.len() / in_dim;
    let mut y = Vec::with_capacity(rows * out_dim);
    for row in x.chunks_exact(in_dim) {
        for (o, w) in weight.value.chunks_exact(in_dim).enumerate() {
            let dot: f64 = w.iter().zip(row).map(|(a, b)| a * b).sum();
            y.push(dot + bias.value[o]);
        }
    }
    Ok(y)
}

pub fn linear_backward(
    x: &[f64],
    weight: &mut ParamTensor,
    bias: &mut ParamTensor,
    grad_out: &[f64],
) -> Result<Vec<f64>> {
    let (out_dim, in_dim) = dims(weight, bias)?;
    if x.len() % in_dim != 0 || grad_out.len() != x.len() / in_dim * out_dim {
        return Err(Error::State(
            "linear backward: upstream gradient does not match the forward input".into(),
        ));
    }
    let mut grad_x = vec![0.0; x.len()];
    for ((row, g), gx) in x
        .chunks_exact(in_dim)
        .zip(grad_out.chunks_exact(out_dim))
        .zip(grad_x.chunks_exact_mut(in_dim))
    {
        for (o, &go) in g.iter().enumerate() {
            bias.grad[o] += go;
            if go == 0.0 {
                continue;
            }
            let range = o * in_dim..(o + 1) * in_dim;
            for ((gw, &xi), (gxi, &w)) in weight.grad[range.clone()]
                .iter_mut()
                .zip(row)
                .zip(gx.iter_mut().zip(&weight.value[range]))
            {
                *gw += go * xi;
                *gxi += go * w;
            }
        }
    }
    Ok(grad_x)
}

fn dims(weight: &ParamTensor, bias: &ParamTensor) -> Result<(usize, usize)> {
    match weight.shape() {
        &[out_dim, in_dim] if bias.len() == out_dim && in_dim > 0 => Ok((out_dim, in_dim)),
        shape => Err(Error::ContractViolation(format!(
            "linear weight shape {shape:?} incompatible with bias of {}",
            bias.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: Vec<f64>, b: Vec<f64>, out: usize, inp: usize) -> Linear {
        Linear::new(
            ParamTensor::from_values(&[out, inp], w).unwrap(),
            ParamTensor::from_values(&[out], b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        let id = layer(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, 2);
        assert_eq!(id.forward(&[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);

        let zero = layer(vec![0.0; 4], vec![1.0, 2.0], 2, 2);
        assert_eq!(zero.forward(&[3.0, -4.0]).unwrap(), vec![1.0, 2.0]);

        let l = layer(vec![1.0, 1.0, 0.0, 3.0], vec![0.0, 0.0], 2, 2);
        assert_eq!(l.forward(&[1.0, 2.0]).unwrap(), vec![3.0, 6.0]);
    }

    #[test]
    fn shape_mismatch() {
        let l = layer(vec![1.0; 6], vec![0.0; 2], 2, 3);
        assert!(matches!(l.forward(&[1.0, 2.0]), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn zero_upstream_leaves_grads() {
        let mut l = layer(vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.5], 2, 2);
        l.weight.grad = vec![0.1, 0.2, 0.3, 0.4];
        let before = l.clone();
        l.backward(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l, before);
    }
}
