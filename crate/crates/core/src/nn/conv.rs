use super::{join, xavier_bound, Module};
use crate::error::Result;
use crate::rng::SeededRng;
use crate::tensor::{Float, Param, Tensor};

/// 1D convolution layer over `[B, C_in, N]` inputs.
pub struct Conv1d<T: Float> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub stride: usize,
    pub padding: usize,
}

impl<T: Float> Conv1d<T> {
    pub fn new(
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let bound = xavier_bound(cin * kernel, cout * kernel);
        let w = rng.uniform_vec(cout * cin * kernel, -bound, bound);
        Conv1d {
            weight: Param::new(w, &[cout, cin, kernel]).expect("positive extents"),
            bias: Param::zeros(&[cout]),
            stride,
            padding,
        }
    }

    pub fn zeros(cin: usize, cout: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Conv1d {
            weight: Param::zeros(&[cout, cin, kernel]),
            bias: Param::zeros(&[cout]),
            stride,
            padding,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.conv1d(
            &self.weight.tensor(),
            Some(&self.bias.tensor()),
            self.stride,
            self.padding,
        )
    }
}

impl<T: Float> Module<T> for Conv1d<T> {
    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        out.push((join(prefix, "weight"), &self.weight));
        out.push((join(prefix, "bias"), &self.bias));
    }
}
