use crate::error::{FdtnError, Result};

/// A named array of trainable scalars with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, value: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if value.len() != len {
            return Err(FdtnError::dims(
                format!("{len} values for shape {shape:?}"),
                format!("{}", value.len()),
            ));
        }
        Ok(ParamTensor {
            name: name.into(),
            shape,
            grad: vec![0.0; len],
            value,
        })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Handle to a tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Ordered collection of every trainable tensor of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    tensors: Vec<ParamTensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, tensor: ParamTensor) -> Result<ParamId> {
        if self.tensors.iter().any(|t| t.name == tensor.name) {
            return Err(FdtnError::InvalidArgument(format!(
                "duplicate parameter name {}",
                tensor.name
            )));
        }
        self.tensors.push(tensor);
        Ok(ParamId(self.tensors.len() - 1))
    }

    pub fn get(&self, id: ParamId) -> &ParamTensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamTensor {
        &mut self.tensors[id.0]
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.tensors[id.0].value
    }

    pub fn tensors(&self) -> &[ParamTensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [ParamTensor] {
        &mut self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(ParamTensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        for t in &mut self.tensors {
            t.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Fresh zeroed gradient buffers shaped like this set.
    pub fn grads(&self) -> Grads {
        Grads {
            bufs: self.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    /// Add `scale * grads` into each tensor's `grad`.
    pub fn accumulate(&mut self, grads: &Grads, scale: f64) {
        for (t, g) in self.tensors.iter_mut().zip(&grads.bufs) {
            t.grad.iter_mut().zip(g).for_each(|(a, b)| *a += scale * b);
        }
    }

    /// Replace values with those of `other`, matched by name and shape.
    pub fn load_from(&mut self, other: &ParamSet) -> Result<()> {
        if other.len() != self.len() {
            return Err(FdtnError::dims(
                format!("{} parameter tensors", self.len()),
                format!("{}", other.len()),
            ));
        }
        for t in &mut self.tensors {
            let src = other
                .tensors
                .iter()
                .find(|o| o.name == t.name)
                .ok_or_else(|| {
                    FdtnError::InvalidArgument(format!("missing parameter {}", t.name))
                })?;
            if src.shape != t.shape {
                return Err(FdtnError::dims(
                    format!("{} with shape {:?}", t.name, t.shape),
                    format!("{:?}", src.shape),
                ));
            }
            t.value.copy_from_slice(&src.value);
        }
        Ok(())
    }
}

/// Gradient buffers detached from the parameters, so independent shards can
/// accumulate without sharing state.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub(crate) bufs: Vec<Vec<f64>>,
}

impl Grads {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.bufs[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.bufs[id.0]
    }

    pub fn buffers(&self) -> &[Vec<f64>] {
        &self.bufs
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}
