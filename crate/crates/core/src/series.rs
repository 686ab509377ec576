//! Sampled signals and collected reservoir states.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Uniformly sampled sequence of real vectors: `len()` samples of width
/// `width()`, spaced `dt` apart in dimensionless simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    dt: f64,
}

impl TimeSeries {
    /// Wrap an `L x D` matrix (rows are time steps) with sampling interval `dt`.
    pub fn new(data: DMatrix<f64>, dt: f64) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "time series needs at least one sample of width >= 1".into(),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { data, dt })
    }

    /// Width-1 series from a flat sample vector.
    pub fn from_scalars(values: Vec<f64>, dt: f64) -> Result<Self> {
        let n = values.len();
        Self::new(DMatrix::from_vec(n, 1, values), dt)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees len >= 1
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Sample at time index `k` as a column vector.
    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.data.row(k).transpose()
    }

    /// Scalar sample; panics unless `width() == 1`.
    pub fn scalar(&self, k: usize) -> f64 {
        assert_eq!(self.width(), 1, "scalar() requires a width-1 series");
        self.data[(k, 0)]
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Contiguous slice of time steps `[start, end)` as a new series.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "slice [{start}, {end}) out of range for length {}",
                self.len()
            )));
        }
        Ok(Self {
            data: self.data.rows(start, end - start).into_owned(),
            dt: self.dt,
        })
    }

    /// Single column as a width-1 series.
    pub fn column(&self, j: usize) -> Result<Self> {
        if j >= self.width() {
            return Err(Error::ShapeMismatch(format!(
                "column {j} out of range for width {}",
                self.width()
            )));
        }
        Ok(Self {
            data: self.data.column(j).into_owned().reshape_generic(
                nalgebra::Dyn(self.len()),
                nalgebra::Dyn(1),
            ),
            dt: self.dt,
        })
    }
}

/// Reservoir states collected row-per-time-step (`L x N`). Entries are
/// guaranteed finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    data: DMatrix<f64>,
}

impl StateMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "state matrix needs at least one row and one column".into(),
            ));
        }
        if let Some(((r, c), v)) = data
            .row_iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(c, &v)| ((r, c), v))
                    .collect::<Vec<_>>()
            })
            .find(|&(_, v)| !v.is_finite())
        {
            return Err(Error::NonFinite(format!("state[{r}][{c}] = {v}")));
        }
        Ok(Self { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, k: usize) -> DVector<f64> {
        self.data.row(k).transpose()
    }

    /// Rows `[start, end)` as a new state matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.rows() {
            return Err(Error::InvalidParameter(format!(
                "slice [{start}, {end}) out of range for {} rows",
                self.rows()
            )));
        }
        Ok(Self {
            data: self.data.rows(start, end - start).into_owned(),
        })
    }

    /// Column-concatenate several state matrices with equal row counts.
    pub fn hconcat(parts: &[StateMatrix]) -> Result<Self> {
        let rows = match parts.first() {
            Some(p) => p.rows(),
            None => return Err(Error::InvalidParameter("nothing to concatenate".into())),
        };
        if parts.iter().any(|p| p.rows() != rows) {
            return Err(Error::ShapeMismatch(
                "state matrices must share the row count to concatenate".into(),
            ));
        }
        let cols: usize = parts.iter().map(|p| p.cols()).sum();
        let mut data = DMatrix::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            data.columns_mut(at, p.cols()).copy_from(&p.data);
            at += p.cols();
        }
        Self::new(data)
    }
}
