use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Weights {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}x{cols} array", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// i.i.d. uniform entries in `[-scale, scale]`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-scale..=scale)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `W [a; b]` without materializing the concatenation.
    pub fn matvec_concat(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(a.len() + b.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let (ra, rb) = row.split_at(a.len());
                ra.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() + rb.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Name and shape of one array inside a flattened parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// All learnable values of a bundle as one vector, with the layout that
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub layout: Vec<ArraySpec>,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { layout: self.layout.clone(), values }
    }
}

/// A bundle of named weight arrays in a fixed order.
pub trait Parametric {
    fn arrays(&self) -> Vec<(String, &Weights)>;
    fn arrays_mut(&mut self) -> Vec<&mut Weights>;

    fn layout(&self) -> Vec<ArraySpec> {
        self.arrays()
            .into_iter()
            .map(|(name, w)| ArraySpec { name, rows: w.rows(), cols: w.cols() })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.arrays().iter().map(|(_, w)| w.data().len()).sum()
    }

    fn to_param_vector(&self) -> ParamVector {
        let values = self.arrays().iter().flat_map(|(_, w)| w.data().iter().copied()).collect();
        ParamVector { layout: self.layout(), values }
    }

    fn load_param_vector(&mut self, params: &ParamVector) -> Result<()> {
        if params.layout != self.layout() {
            return Err(Error::Shape("parameter layout does not match this bundle".into()));
        }
        self.load_values(&params.values)
    }

    /// Overwrites every array from `values`, in layout order.
    fn load_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape(format!("{} values for {} parameters", values.len(), self.param_count())));
        }
        let mut offset = 0;
        for w in self.arrays_mut() {
            let len = w.data().len();
            w.data_mut().copy_from_slice(&values[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }
}
