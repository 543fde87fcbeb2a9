//! Dense tensors, outer products and flattenings.
//!
//! Entries are stored row-major: the last factor varies fastest. A
//! flattening along a factor set `S` puts the multi-indices over `S` on the
//! rows and those over the complement on the columns, both in lexicographic
//! order of ascending factor index.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{format_rational, parse_rational, rational_to_f64, Arith, Field, Matrix, Rational};
use crate::trees::LeafSet;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return invalid("a tensor needs at least one factor");
    }
    if shape.contains(&0) {
        return invalid(format!("factor dimensions must be positive: {shape:?}"));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .map_or_else(|| invalid(format!("shape {shape:?} is too large")), Ok)
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Odometer over all multi-indices of `shape`, last index fastest.
fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; shape.len()];
    loop {
        f(&idx);
        let mut i = shape.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

impl<T: Clone> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return invalid(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            ));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of factors.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> &T {
        let s = strides(&self.shape);
        &self.data[index.iter().zip(&s).map(|(i, s)| i * s).sum::<usize>()]
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Move factor `i` to position `perm[i]`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("{perm:?} is not a permutation of {n} factors"));
        }
        let mut shape = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            shape[p] = self.shape[i];
        }
        let out_strides = strides(&shape);
        let moved: Vec<usize> = perm.iter().map(|&p| out_strides[p]).collect();
        let mut slots: Vec<Option<T>> = vec![None; self.len()];
        let mut lin = 0;
        for_each_index(&self.shape, |idx| {
            let target: usize = idx.iter().zip(&moved).map(|(i, s)| i * s).sum();
            slots[target] = Some(self.data[lin].clone());
            lin += 1;
        });
        Ok(DenseTensor {
            shape,
            data: slots.into_iter().map(|x| x.unwrap()).collect(),
        })
    }
}

impl<T: Field> DenseTensor<T> {
    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(DenseTensor {
            shape,
            data: vec![T::zero(); len],
        })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        for_each_index(&shape, |idx| data.push(f(idx)));
        Ok(DenseTensor { shape, data })
    }

    /// One-factor tensor.
    pub fn vector(v: Vec<T>) -> Result<Self> {
        Self::new(vec![v.len()], v)
    }

    /// Standard basis vector `e_i` of length `d`.
    pub fn unit(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return invalid(format!("unit vector index {i} out of range for dimension {d}"));
        }
        Self::from_fn(vec![d], |idx| if idx[0] == i { T::one() } else { T::zero() })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// `self += coef · other`, same shapes.
    pub fn add_scaled(&mut self, coef: &T, other: &Self) {
        assert_eq!(self.shape, other.shape, "add_scaled shape mismatch");
        if coef.is_zero() {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.clone() + coef.clone() * b.clone();
        }
    }

    pub fn scale(&self, coef: &T) -> Self {
        self.map(|x| x.clone() * coef.clone())
    }

    /// Tensor product of `parts`; `parts[p].1[i]` names the result factor
    /// that factor `i` of `parts[p].0` becomes. The factor lists must
    /// partition `0..n`.
    pub fn outer(parts: &[(&DenseTensor<T>, &[usize])]) -> Result<Self> {
        let n: usize = parts.iter().map(|(_, f)| f.len()).sum();
        let mut shape = vec![0; n];
        for (t, factors) in parts {
            if t.order() != factors.len() {
                return invalid(format!(
                    "tensor with {} factors assigned {} positions",
                    t.order(),
                    factors.len()
                ));
            }
            for (i, &f) in factors.iter().enumerate() {
                if f >= n || shape[f] != 0 {
                    return invalid(format!("factor assignment is not a partition of 0..{n}"));
                }
                shape[f] = t.shape[i];
            }
        }
        let out_strides = strides(&shape);
        let mut out = Self::zeros(shape)?;
        // Offsets of each part's entries within the result.
        let offsets: Vec<Vec<usize>> = parts
            .iter()
            .map(|(t, factors)| {
                let mut offs = Vec::with_capacity(t.len());
                for_each_index(&t.shape, |idx| {
                    offs.push(idx.iter().zip(*factors).map(|(i, &f)| i * out_strides[f]).sum())
                });
                offs
            })
            .collect();
        let mut acc: Vec<(usize, T)> = vec![(0, T::one())];
        for ((t, _), offs) in parts.iter().zip(&offsets) {
            let mut next = Vec::with_capacity(acc.len() * t.len());
            for (base, v) in &acc {
                for (x, &o) in t.data.iter().zip(offs) {
                    if !x.is_zero() {
                        next.push((base + o, v.clone() * x.clone()));
                    }
                }
            }
            acc = next;
        }
        for (pos, v) in acc {
            out.data[pos] = v;
        }
        Ok(out)
    }

    /// Tensor product of vectors, factor `i` from `vectors[i]`.
    pub fn outer_vectors(vectors: &[Vec<T>]) -> Result<Self> {
        let parts: Vec<DenseTensor<T>> = vectors
            .iter()
            .map(|v| Self::vector(v.clone()))
            .collect::<Result<_>>()?;
        let assignment: Vec<[usize; 1]> = (0..vectors.len()).map(|i| [i]).collect();
        let refs: Vec<(&DenseTensor<T>, &[usize])> = parts
            .iter()
            .zip(&assignment)
            .map(|(t, a)| (t, &a[..]))
            .collect();
        Self::outer(&refs)
    }

    /// The matrix of the contraction along the factors in `s`.
    pub fn flatten(&self, s: &LeafSet) -> Result<Matrix<T>> {
        let n = self.order();
        if s.universe() != n {
            return invalid(format!(
                "leaf set over {} factors used with a tensor of order {n}",
                s.universe()
            ));
        }
        let mut row_stride = vec![0; n];
        let mut col_stride = vec![0; n];
        let (mut rows, mut cols) = (1usize, 1usize);
        for f in (0..n).rev() {
            if s.contains(f) {
                row_stride[f] = rows;
                rows *= self.shape[f];
            } else {
                col_stride[f] = cols;
                cols *= self.shape[f];
            }
        }
        let mut data = vec![T::zero(); rows * cols];
        let mut lin = 0;
        for_each_index(&self.shape, |idx| {
            let mut r = 0;
            let mut c = 0;
            for f in 0..n {
                r += idx[f] * row_stride[f];
                c += idx[f] * col_stride[f];
            }
            data[r * cols + c] = self.data[lin].clone();
            lin += 1;
        });
        Ok(Matrix::new(rows, cols, data))
    }

    /// Dimension of the contraction `(⊗_{l∈s} V_l)* ⌟ t`.
    pub fn flattening_rank(&self, s: &LeafSet, tol: f64) -> Result<usize> {
        T::rank(&self.flatten(s)?, tol)
    }
}

impl DenseTensor<Rational> {
    pub fn to_float(&self) -> DenseTensor<f64> {
        self.map(rational_to_f64)
    }

    pub fn from_integers(shape: Vec<usize>, data: &[i64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&x| Rational::from_i64(x)).collect())
    }
}

/// A tensor of either scalar kind, as exchanged in JSON.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    Rational(DenseTensor<Rational>),
    Float(DenseTensor<f64>),
}

impl AnyTensor {
    pub fn arith(&self) -> Arith {
        match self {
            AnyTensor::Rational(_) => Arith::Rational,
            AnyTensor::Float(_) => Arith::Float,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            AnyTensor::Rational(t) => t.shape(),
            AnyTensor::Float(t) => t.shape(),
        }
    }

    /// Convert to the requested arithmetic. Floats convert to rationals
    /// exactly (every finite double is a dyadic rational).
    pub fn into_arith(self, arith: Arith) -> Result<AnyTensor> {
        Ok(match (self, arith) {
            (AnyTensor::Rational(t), Arith::Float) => AnyTensor::Float(t.to_float()),
            (AnyTensor::Float(t), Arith::Rational) => {
                let data = t
                    .data()
                    .iter()
                    .map(|&x| {
                        Rational::from_float(x)
                            .map_or_else(|| invalid(format!("non-finite entry {x}")), Ok)
                    })
                    .collect::<Result<Vec<_>>>()?;
                AnyTensor::Rational(DenseTensor::new(t.shape().to_vec(), data)?)
            }
            (t, _) => t,
        })
    }

    pub fn to_json(&self) -> TensorJson {
        match self {
            AnyTensor::Rational(t) => TensorJson {
                shape: t.shape().to_vec(),
                arith: Arith::Rational,
                entries: t
                    .data()
                    .iter()
                    .map(|x| serde_json::Value::String(format_rational(x)))
                    .collect(),
            },
            AnyTensor::Float(t) => TensorJson {
                shape: t.shape().to_vec(),
                arith: Arith::Float,
                entries: t.data().iter().map(|&x| serde_json::json!(x)).collect(),
            },
        }
    }

    pub fn from_json(j: &TensorJson) -> Result<Self> {
        match j.arith {
            Arith::Rational => {
                let data = j
                    .entries
                    .iter()
                    .map(|e| match e {
                        serde_json::Value::String(s) => parse_rational(s),
                        serde_json::Value::Number(n) if n.is_i64() => {
                            Ok(Rational::from_i64(n.as_i64().unwrap()))
                        }
                        other => invalid(format!("rational entry must be a string, got {other}")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyTensor::Rational(DenseTensor::new(j.shape.clone(), data)?))
            }
            Arith::Float => {
                let data = j
                    .entries
                    .iter()
                    .map(|e| {
                        e.as_f64()
                            .map_or_else(|| invalid(format!("float entry must be a number, got {e}")), Ok)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyTensor::Float(DenseTensor::new(j.shape.clone(), data)?))
            }
        }
    }
}

/// Wire form: `{"shape":[2,2], "arith":"rational", "entries":["1","-3/2",…]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorJson {
    pub shape: Vec<usize>,
    pub arith: Arith,
    pub entries: Vec<serde_json::Value>,
}

impl Serialize for AnyTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnyTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TensorJson::deserialize(d)?;
        AnyTensor::from_json(&j).map_err(serde::de::Error::custom)
    }
}

impl From<DenseTensor<Rational>> for AnyTensor {
    fn from(t: DenseTensor<Rational>) -> Self {
        AnyTensor::Rational(t)
    }
}

impl From<DenseTensor<f64>> for AnyTensor {
    fn from(t: DenseTensor<f64>) -> Self {
        AnyTensor::Float(t)
    }
}

impl<T: Field> DenseTensor<T> {
    /// Count of non-zero entries; handy in diagnostics.
    pub fn support_size(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }
}
