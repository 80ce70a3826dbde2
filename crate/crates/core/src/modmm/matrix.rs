use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{center, scale_round};

/// Dense row-major integer matrix with entries centered modulo `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModMatrix {
    rows: usize,
    cols: usize,
    modulus: BigInt,
    data: Vec<BigInt>,
}

impl ModMatrix {
    pub fn new(rows: usize, cols: usize, modulus: BigInt, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        assert!(modulus >= BigInt::from(2), "modulus must be at least 2");
        let data = data.iter().map(|x| center(x, &modulus)).collect();
        ModMatrix { rows, cols, modulus, data }
    }

    /// Wraps entries that are already centered.
    pub(crate) fn from_centered(rows: usize, cols: usize, modulus: BigInt, data: Vec<BigInt>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        ModMatrix { rows, cols, modulus, data }
    }

    pub fn zeros(rows: usize, cols: usize, modulus: BigInt) -> Self {
        ModMatrix { rows, cols, modulus, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize, modulus: BigInt) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, modulus: BigInt, data: &[i64]) -> Self {
        Self::new(rows, cols, modulus, data.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, modulus: BigInt, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(center(&f(i, j), &modulus));
            }
        }
        ModMatrix { rows, cols, modulus, data }
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, modulus: BigInt, columns: &[Vec<BigInt>]) -> Self {
        let cols = columns.len();
        Self::from_fn(rows, cols, modulus, |i, j| columns[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn data(&self) -> &[BigInt] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = center(&v, &self.modulus);
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        ModMatrix { rows: self.cols, cols: self.rows, modulus: self.modulus.clone(), data }
    }

    /// `‖·‖∞` over the centered entries.
    pub fn max_abs(&self) -> BigInt {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn assert_same(&self, o: &Self) {
        assert_eq!(self.shape(), o.shape(), "matrix shape mismatch");
        assert_eq!(self.modulus, o.modulus, "matrix modulus mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.assert_same(o);
        let data = self.data.iter().zip(&o.data).map(|(x, y)| center(&(x + y), &self.modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: self.modulus.clone(), data }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.assert_same(o);
        let data = self.data.iter().zip(&o.data).map(|(x, y)| center(&(x - y), &self.modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: self.modulus.clone(), data }
    }

    pub fn neg(&self) -> Self {
        let data = self.data.iter().map(|x| center(&-x, &self.modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: self.modulus.clone(), data }
    }

    pub fn scalar_mul(&self, c: &BigInt) -> Self {
        let data = self.data.iter().map(|x| center(&(x * c), &self.modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: self.modulus.clone(), data }
    }

    /// Reinterprets the centered entries modulo another modulus.
    pub fn with_modulus(&self, modulus: &BigInt) -> Self {
        let data = self.data.iter().map(|x| center(x, modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: modulus.clone(), data }
    }

    /// Entrywise `⌊x·num/den⌉` reduced modulo `new_modulus`.
    pub fn scale_round(&self, num: &BigInt, den: &BigInt, new_modulus: &BigInt) -> Self {
        let data = self.data.iter().map(|x| center(&scale_round(x, num, den), new_modulus)).collect();
        ModMatrix { rows: self.rows, cols: self.cols, modulus: new_modulus.clone(), data }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut data = Vec::with_capacity(rows * cols);
        for i in r0..r0 + rows {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c0 + cols]);
        }
        ModMatrix { rows, cols, modulus: self.modulus.clone(), data }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = center(b.get(i, j), &self.modulus);
            }
        }
    }

    pub fn vstack(parts: &[Self]) -> Self {
        assert!(!parts.is_empty());
        let cols = parts[0].cols;
        let modulus = parts[0].modulus.clone();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            assert_eq!(p.cols, cols, "vstack column mismatch");
            assert_eq!(p.modulus, modulus, "vstack modulus mismatch");
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        ModMatrix { rows, cols, modulus, data }
    }

    pub fn hstack(parts: &[Self]) -> Self {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols, parts[0].modulus.clone());
        let mut c0 = 0;
        for p in parts {
            assert_eq!(p.rows, rows, "hstack row mismatch");
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        out
    }

    /// Entries as `i64` when every one fits.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.data.iter().map(|x| x.to_i64()).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// `‖self - o‖∞` with the difference centered.
    pub fn dist(&self, o: &Self) -> BigInt {
        self.sub(o).max_abs()
    }
}

/// Plain integer matrix used as input and output of the 53-bit kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IntMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> u64 {
        self.data.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }
}
