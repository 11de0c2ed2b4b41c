use super::tensor::Tensor3;
use crate::error::{Error, Result};

pub fn leaky_relu(x: &Tensor3, slope: f64) -> Tensor3 {
    let mut y = x.clone();
    leaky_relu_in_place(y.data_mut(), slope);
    y
}

pub(crate) fn leaky_relu_in_place(values: &mut [f64], slope: f64) {
    for v in values {
        if *v < 0.0 {
            *v *= slope;
        }
    }
}

/// Multiplies `grad` by the derivative at the pre-activation `x`: 1 for
/// `x > 0`, `slope` otherwise (the slope is used at exactly 0).
pub fn leaky_relu_backward(x: &Tensor3, slope: f64, grad: &mut Tensor3) -> Result<()> {
    if x.shape() != grad.shape() {
        return Err(Error::State(format!(
            "leaky relu backward: gradient {:?} does not match forward input {:?}",
            grad.shape(),
            x.shape()
        )));
    }
    for (g, &xi) in grad.data_mut().iter_mut().zip(x.data()) {
        if xi <= 0.0 {
            *g *= slope;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor3 {
        Tensor3::from_vec(1, 1, 1, vec![v]).unwrap()
    }

    #[test]
    fn forward_examples() {
        assert_eq!(leaky_relu(&scalar(5.0), 0.01).data(), &[5.0]);
        assert_eq!(leaky_relu(&scalar(-100.0), 0.01).data(), &[-1.0]);
        assert_eq!(leaky_relu(&scalar(0.0), 0.01).data(), &[0.0]);
    }

    #[test]
    fn backward_examples() {
        let mut g = scalar(1.0);
        leaky_relu_backward(&scalar(-2.0), 0.01, &mut g).unwrap();
        assert_eq!(g.data(), &[0.01]);

        let mut g = scalar(1.0);
        leaky_relu_backward(&scalar(0.0), 0.01, &mut g).unwrap();
        assert_eq!(g.data(), &[0.01]);

        let mut g = scalar(3.0);
        leaky_relu_backward(&scalar(0.5), 0.01, &mut g).unwrap();
        assert_eq!(g.data(), &[3.0]);
    }
}
