use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

static NEXT_SET_ID: AtomicU64 = AtomicU64::new(1);

const MAGIC: &[u8; 4] = b"PSET";
const FORMAT_VERSION: u32 = 1;

/// Named trainable tensors. Iteration order is the lexicographic name order,
/// which is also the on-disk order.
#[derive(Clone, Debug)]
pub struct ParamSet {
    id: u64,
    params: BTreeMap<String, Tensor>,
}

impl PartialEq for ParamSet {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            id: NEXT_SET_ID.fetch_add(1, Ordering::Relaxed),
            params: BTreeMap::new(),
        }
    }

    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(Error::DuplicateParam(name));
        }
        self.params.insert(name, tensor.with_requires_grad(true));
        Ok(())
    }

    /// Inserts a `uniform(-scale, scale)` initialised tensor.
    pub fn init_uniform<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: Vec<usize>,
        scale: f64,
        rng: &mut R,
    ) -> Result<()> {
        self.insert(name, Tensor::uniform(shape, scale, rng))
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    /// Replaces the values of `name`; the shape must stay the same.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let slot = self
            .params
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))?;
        if slot.shape() != value.shape() {
            return Err(Error::ShapeMismatch {
                op: "param set",
                detail: format!("`{name}` is {:?}, got {:?}", slot.shape(), value.shape()),
            });
        }
        *slot = value.with_requires_grad(true);
        Ok(())
    }

    pub(crate) fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Writes the flat binary form: magic, version, count, then per
    /// parameter its name, rank, dims and little-endian values.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.params.len() as u32).to_le_bytes())?;
        for (name, t) in &self.params {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
            for &d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for &v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a parameter file".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let count = read_u32(r)?;
        let mut set = ParamSet::new();
        for _ in 0..count {
            let len = read_u32(r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
            let rank = read_u32(r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u64(r)? as usize);
            }
            let numel: usize = shape.iter().product();
            let mut data = Vec::with_capacity(numel);
            let mut buf = [0u8; 8];
            for _ in 0..numel {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            set.insert(name, Tensor::new(shape, data)?)?;
        }
        Ok(set)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Gradients keyed by parameter name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    grads: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, grad: Tensor) {
        self.grads.insert(name.into(), grad);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.grads.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.grads.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Euclidean norm over every gradient entry.
    pub fn global_norm(&self) -> f64 {
        self.grads
            .values()
            .flat_map(|t| t.data().iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}
