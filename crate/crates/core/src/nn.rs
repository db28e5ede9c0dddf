//! Parameter storage and the handful of building blocks shared by the
//! encoders. Everything runs in f64 on the CPU.

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DtiError, Result};

pub const DTYPE: DType = DType::F64;

pub fn device() -> Device {
    Device::Cpu
}

/// Named, seeded trainable parameters.
#[derive(Debug)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            vars: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn insert(&mut self, name: &str, shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        if self.vars.contains_key(name) {
            return Err(DtiError::Invalid(format!("parameter {name} registered twice")));
        }
        let t = Tensor::from_vec(data, shape, &device())?;
        let var = Var::from_tensor(&t)?;
        let handle = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        Ok(handle)
    }

    /// Glorot-uniform initialised `fan_in x fan_out` matrix.
    pub fn glorot(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<Tensor> {
        let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| self.rng.random_range(-limit..limit))
            .collect();
        self.insert(name, &[fan_in, fan_out], data)
    }

    /// Normal(0, std) initialised tensor.
    pub fn normal(&mut self, name: &str, shape: &[usize], std: f64) -> Result<Tensor> {
        use rand_distr::{Distribution, Normal};
        let n: usize = shape.iter().product();
        let dist = Normal::new(0.0, std).map_err(|e| DtiError::Invalid(e.to_string()))?;
        let data = (0..n).map(|_| dist.sample(&mut self.rng)).collect();
        self.insert(name, shape, data)
    }

    pub fn constant(&mut self, name: &str, shape: &[usize], value: f64) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        self.insert(name, shape, vec![value; n])
    }

    pub fn vars(&self) -> &BTreeMap<String, Var> {
        &self.vars
    }

    pub fn all_vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn num_parameters(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    /// Flat snapshot of every parameter, in name order.
    pub fn snapshot(&self) -> Result<BTreeMap<String, (Vec<usize>, Vec<f64>)>> {
        self.vars
            .iter()
            .map(|(k, v)| {
                let shape = v.dims().to_vec();
                let data = v.as_tensor().flatten_all()?.to_vec1::<f64>()?;
                Ok((k.clone(), (shape, data)))
            })
            .collect()
    }

    /// Overwrite parameters in place from a snapshot; names and shapes must
    /// match exactly.
    pub fn restore(&self, snapshot: &BTreeMap<String, (Vec<usize>, Vec<f64>)>) -> Result<()> {
        if snapshot.len() != self.vars.len() {
            return Err(DtiError::Integrity {
                entity: "checkpoint".into(),
                message: format!("{} tensors, model expects {}", snapshot.len(), self.vars.len()),
            });
        }
        for (name, var) in &self.vars {
            let (shape, data) = snapshot.get(name).ok_or_else(|| {
                DtiError::integrity("checkpoint", format!("missing tensor {name}"))
            })?;
            if shape.as_slice() != var.dims() {
                return Err(DtiError::integrity(
                    "checkpoint",
                    format!("shape mismatch for {name}: {shape:?} vs {:?}", var.dims()),
                ));
            }
            var.set(&Tensor::from_vec(data.clone(), shape.as_slice(), &device())?)?;
        }
        Ok(())
    }
}

/// Training/inference switch plus the dropout RNG.
pub struct ForwardCtx {
    pub train: bool,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ForwardCtx {
    pub fn eval() -> Self {
        ForwardCtx {
            train: false,
            seed: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn train(seed: u64) -> Self {
        ForwardCtx {
            train: true,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `(seed, stream position)` of the dropout generator.
    pub fn rng_state(&self) -> (u64, u128) {
        (self.seed, self.rng.get_word_pos())
    }

    pub fn resume(seed: u64, word_pos: u128) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(word_pos);
        ForwardCtx {
            train: true,
            seed,
            rng,
        }
    }

    /// Inverted dropout; identity at inference or when `p == 0`.
    pub fn dropout(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        if !self.train || p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 - p;
        let n = x.elem_count();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
        Ok(x.mul(&mask)?)
    }
}

/// `y = x W + b` with `W: in x out`. Accepts `(.., in)` inputs.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, bias: bool) -> Result<Self> {
        let weight = store.glorot(&format!("{name}.weight"), fan_in, fan_out)?;
        let bias = if bias {
            Some(store.constant(&format!("{name}.bias"), &[fan_out], 0.0)?)
        } else {
            None
        };
        Ok(Linear { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = match x.rank() {
            2 => x.matmul(&self.weight)?,
            _ => x.broadcast_matmul(&self.weight)?,
        };
        Ok(match &self.bias {
            Some(b) => y.broadcast_add(b)?,
            None => y,
        })
    }
}

/// Layer normalisation over the last dimension with learned affine.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(LayerNorm {
            gamma: store.constant(&format!("{name}.gamma"), &[dim], 1.0)?,
            beta: store.constant(&format!("{name}.beta"), &[dim], 0.0)?,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.gamma)?.broadcast_add(&self.beta)?)
    }
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::sigmoid(x)?)
}

/// Numerically stable softmax over the last dimension.
pub fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    let s = e.sum_keepdim(D::Minus1)?;
    Ok(e.broadcast_div(&s)?)
}

pub fn tensor2(rows: &[Vec<f64>], cols: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(rows.len() * cols);
    for r in rows {
        if r.len() != cols {
            return Err(DtiError::Dimension(format!("row of width {} expected {cols}", r.len())));
        }
        data.extend_from_slice(r);
    }
    Ok(Tensor::from_vec(data, (rows.len(), cols), &device())?)
}

pub fn to_rows(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    Ok(t.to_vec2::<f64>()?)
}
