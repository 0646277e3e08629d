//! Sample ingestion, synthetic generation and reproducible random streams.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// An `n × k` matrix of finite observations (row-major) with per-axis
/// support bounds `(a_i, b_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    values: Vec<T>,
    n: usize,
    k: usize,
    bounds: Vec<(T, T)>,
}

impl<T: Real> Dataset<T> {
    /// Wraps row-major `values`; bounds default to `(-inf, +inf)`.
    pub fn new(values: Vec<T>, n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != n * k {
            return domain(format!(
                "expected {} values for a {n}x{k} dataset, got {}",
                n * k,
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!(
                "non-finite value at row {}, column {}",
                pos / k + 1,
                pos % k + 1
            ));
        }
        Ok(Self {
            values,
            n,
            k,
            bounds: vec![(T::neg_infinity(), T::infinity()); k],
        })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let k = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * k);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: k,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, rows.len(), k)
    }

    /// One-dimensional dataset from a slice of observations.
    pub fn from_column(values: &[T]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    /// Replaces the support bounds, checking every value lies in `(a_i, b_i]`.
    pub fn with_bounds(mut self, bounds: Vec<(T, T)>) -> Result<Self> {
        if bounds.len() != self.k {
            return domain(format!(
                "{} bounds given for a {}-dimensional dataset",
                bounds.len(),
                self.k
            ));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return domain(format!("axis {}: invalid bounds ({lo}, {hi}]", axis + 1));
            }
            if let Some(row) = (0..self.n).find(|&r| {
                let v = self.values[r * self.k + axis];
                v <= lo || v > hi
            }) {
                return domain(format!(
                    "value at row {}, column {} lies outside ({lo}, {hi}]",
                    row + 1,
                    axis + 1
                ));
            }
        }
        self.bounds = bounds;
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn get(&self, row: usize, axis: usize) -> T {
        self.values[row * self.k + axis]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.k)
    }

    pub fn column(&self, axis: usize) -> Vec<T> {
        self.rows().map(|r| r[axis]).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn project(&self, axes: &[usize]) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|&a| a >= self.k) {
            return domain(format!("projection axes {axes:?} invalid for k={}", self.k));
        }
        let mut values = Vec::with_capacity(self.n * axes.len());
        for r in self.rows() {
            values.extend(axes.iter().map(|&a| r[a]));
        }
        let bounds = axes.iter().map(|&a| self.bounds[a]).collect();
        Ok(Self {
            values,
            n: self.n,
            k: axes.len(),
            bounds,
        })
    }

    /// Writes the rows as headerless CSV. Values use the shortest
    /// representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for r in self.rows() {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Reads a CSV file of reals.
///
/// A single header row is recognised when none of the first line's cells
/// parse as a number. Row numbers in errors are 1-based file lines.
pub fn load_dataset<T: Real>(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Dataset<T>> {
    read_dataset(File::open(path)?, opts)
}

pub fn read_dataset<T: Real, R: Read>(input: R, opts: CsvOptions) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(opts.delimiter)
        .from_reader(input);

    let mut values: Vec<T> = Vec::new();
    let mut k = 0usize;
    let mut n = 0usize;
    let mut first = true;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 1);
        if first {
            first = false;
            if record.iter().all(|c| c.parse::<T>().is_err()) {
                continue;
            }
        }
        if k == 0 {
            k = record.len();
        } else if record.len() != k {
            return Err(Error::RaggedRow {
                row: line,
                expected: k,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            match cell.parse::<T>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        row: line,
                        col: col + 1,
                        text: cell.to_string(),
                    })
                }
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Dataset::new(values, n, k)
}

/// Seed plus stream index. Equal pairs reproduce the same sequence; distinct
/// stream indices select independent ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derives an independent stream for a sub-task of this stream.
    pub fn substream(&self, tag: u16) -> Self {
        Self {
            seed: self.seed,
            stream: (self.stream << 16) | u64::from(tag),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Covariance with entries `rho^|i-j|`.
pub fn ar_covariance(k: usize, rho: f64) -> Result<DMatrix<f64>> {
    if k == 0 {
        return domain("dimension must be at least 1");
    }
    if !(rho.abs() < 1.0) {
        return domain(format!("rho must lie in (-1, 1), got {rho}"));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

/// Draws `n` rows from `N(mean, cov)` as `L z` with `L` the lower Cholesky
/// factor. Draws are generated in `f64` and rounded to `T`.
pub fn sample_mvn<T: Real>(
    n: usize,
    mean: &[f64],
    cov: &DMatrix<f64>,
    rng: RngStream,
) -> Result<Dataset<T>> {
    let k = mean.len();
    if cov.nrows() != k || cov.ncols() != k {
        return domain(format!(
            "covariance is {}x{} but mean has length {k}",
            cov.nrows(),
            cov.ncols()
        ));
    }
    let l = cholesky_lower(cov)?;
    let mut gen = rng.rng();
    let mut z = vec![0.0f64; k];
    let mut values = Vec::with_capacity(n * k);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = gen.sample(StandardNormal);
        }
        for i in 0..k {
            let mut acc = mean[i];
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            values.push(T::lit(acc));
        }
    }
    Dataset::new(values, n, k)
}

/// Rows uniform on `(0, 1]^k`, with bounds set to `(0, 1]`.
pub fn sample_uniform<T: Real>(n: usize, k: usize, rng: RngStream) -> Result<Dataset<T>> {
    let mut gen = rng.rng();
    let values = (0..n * k)
        .map(|_| {
            // (0, 1]; rounding to f32 can never reach 0 from this side
            let u: f64 = 1.0 - gen.random::<f64>();
            T::lit(u)
        })
        .collect();
    Dataset::new(values, n, k)?.with_bounds(vec![(T::zero(), T::one()); k])
}

pub(crate) fn cholesky_lower(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let symmetric = (0..cov.nrows())
        .all(|i| (0..i).all(|j| (cov[(i, j)] - cov[(j, i)]).abs() <= 1e-12 * (1.0 + cov[(i, j)].abs())));
    if !symmetric || cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization);
    }
    let chol = nalgebra::Cholesky::new(cov.clone()).ok_or(Error::Factorization)?;
    let l = chol.l();
    if l.diagonal().iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::Factorization);
    }
    Ok(l)
}
