//! Benchmark tasks and the evaluation protocol.
//!
//! Fixed benchmark definitions:
//!
//! * NARMA10: input u(k) i.i.d. uniform in [0, 0.5);
//!   y(k+1) = 0.3 y(k) + 0.05 y(k) sum_{i=0..9} y(k-i) + 1.5 u(k-9) u(k) + 0.1
//!   with zero initial history.
//! * Mackey-Glass: dx/dt = 0.2 x(t-17) / (1 + x(t-17)^10) - 0.1 x(t) from
//!   constant history 1.2, integrated with the delay-line Heun scheme, first
//!   1000 time units discarded, then subsampled.
//! * Memory capacity: i.i.d. uniform [-1, 1] input; per lag d a ridge readout
//!   reconstructs u(k-d); the capacity at lag d is the squared correlation
//!   between prediction and target on held-out data, summed over lags.
//!
//! Splits are always chronological: the test block starts right after the
//! train block, nothing is shuffled.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::delay::integrate_delayed;
use crate::error::{Error, Result};
use crate::readout::{nmse, predict, train_ridge, RidgeConfig};
use crate::rng::RandomSource;
use crate::series::{StateMatrix, TimeSeries};

/// Sampling step used when a task needs a Mackey-Glass series.
pub const MG_DT: f64 = 0.05;
/// Subsampling factor; together with [`MG_DT`] the series is sampled once per
/// time unit.
pub const MG_SUBSAMPLE: usize = 20;
/// Ridge strength used inside the memory-capacity protocol.
pub const MC_RIDGE_LAMBDA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Narma10,
    MackeyGlass { horizon: usize },
    MemoryCapacity { max_lag: usize },
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Narma10 => "narma10",
            TaskKind::MackeyGlass { .. } => "mackey_glass",
            TaskKind::MemoryCapacity { .. } => "memory_capacity",
        }
    }
}

/// A benchmark task with its data length and chronological split fractions.
#[derive(Debug, Clone, Copy)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub length: usize,
    pub train_frac: f64,
    pub test_frac: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidParameter("task length must be >= 2".into()));
        }
        for (name, f) in [("train_frac", self.train_frac), ("test_frac", self.test_frac)] {
            if !(f.is_finite() && f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {f}"
                )));
            }
        }
        if self.train_frac + self.test_frac > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(
                "train and test fractions must sum to at most 1".into(),
            ));
        }
        match self.kind {
            TaskKind::Narma10 if self.length < 20 => {
                Err(Error::InvalidParameter("narma10 needs length >= 20".into()))
            }
            TaskKind::MackeyGlass { horizon } if horizon == 0 => {
                Err(Error::InvalidParameter("prediction horizon must be >= 1".into()))
            }
            TaskKind::MemoryCapacity { max_lag } if max_lag == 0 => {
                Err(Error::InvalidParameter("max_lag must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Run the NARMA10 recurrence over a given input stream. Fails if the state
/// leaves [-10, 10].
pub fn narma10_targets(input: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; input.len()];
    for k in 0..input.len().saturating_sub(1) {
        let mut sum10 = 0.0;
        for i in 0..10 {
            if k >= i {
                sum10 += y[k - i];
            }
        }
        let u_lag = if k >= 9 { input[k - 9] } else { 0.0 };
        let next = 0.3 * y[k] + 0.05 * y[k] * sum10 + 1.5 * u_lag * input[k] + 0.1;
        if !next.is_finite() || next.abs() > 10.0 {
            return Err(Error::Diverged(format!("narma10 state at step {}", k + 1)));
        }
        y[k + 1] = next;
    }
    Ok(y)
}

/// Generate a NARMA10 (input, target) pair. A diverging draw is retried on
/// the next sub-stream, at most 10 times.
pub fn gen_narma10(length: usize, rng: &RandomSource) -> Result<(TimeSeries, TimeSeries)> {
    if length < 20 {
        return Err(Error::InvalidParameter("narma10 needs length >= 20".into()));
    }
    for attempt in 0..10 {
        let mut draw = rng.substream(&format!("narma10/attempt/{attempt}"));
        let input: Vec<f64> = (0..length).map(|_| draw.uniform_in(0.0, 0.5)).collect();
        match narma10_targets(&input) {
            Ok(targets) => {
                return Ok((
                    TimeSeries::from_scalars(input, 1.0)?,
                    TimeSeries::from_scalars(targets, 1.0)?,
                ));
            }
            Err(_) => continue,
        }
    }
    Err(Error::Diverged("narma10 diverged on 10 consecutive draws".into()))
}

/// Generate a Mackey-Glass series of `length` samples spaced `dt * subsample`
/// apart, after discarding a 1000-time-unit transient.
pub fn gen_mackey_glass(length: usize, dt: f64, subsample: usize) -> Result<TimeSeries> {
    if length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidParameter(format!("dt must lie in (0, 0.1], got {dt}")));
    }
    if subsample == 0 {
        return Err(Error::InvalidParameter("subsample must be >= 1".into()));
    }

    let transient = (1000.0 / dt).ceil() as usize;
    let steps = transient + length * subsample;
    let drive = vec![0.0; steps];
    let rhs = |x: f64, xd: f64, _j: f64| 0.2 * xd / (1.0 + xd.powi(10)) - 0.1 * x;
    let traj = integrate_delayed(rhs, 17.0, 1.2, &drive, dt)?;

    let values: Vec<f64> = (0..length)
        .map(|j| traj[transient + (j + 1) * subsample - 1])
        .collect();
    TimeSeries::from_scalars(values, dt * subsample as f64)
}

/// Row k holds the `taps` most recent inputs [u(k), u(k-1), ...], zero-padded
/// at the start. The linear baseline trains a ridge readout on these rows.
pub fn tapped_delay_states(input: &TimeSeries, taps: usize) -> Result<StateMatrix> {
    if input.width() != 1 {
        return Err(Error::ShapeMismatch("tapped delay line needs a width-1 input".into()));
    }
    if taps == 0 {
        return Err(Error::InvalidParameter("taps must be >= 1".into()));
    }
    let len = input.len();
    let mut data = DMatrix::zeros(len, taps);
    for k in 0..len {
        for j in 0..taps {
            if k >= j {
                data[(k, j)] = input.scalar(k - j);
            }
        }
    }
    StateMatrix::new(data)
}

fn population_corr_sq(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    ((cov * cov) / (va * vb)).min(1.0)
}

/// Chronological split: train rows first, test rows immediately after.
pub fn chronological_split(n: usize, train_frac: f64, test_frac: f64) -> Result<(Range<usize>, Range<usize>)> {
    let train = (n as f64 * train_frac).floor() as usize;
    let test = (n as f64 * test_frac).floor() as usize;
    if train == 0 {
        return Err(Error::InvalidParameter(format!(
            "train split covers 0 of {n} samples"
        )));
    }
    if test == 0 {
        return Err(Error::InvalidParameter(format!(
            "test split covers 0 of {n} samples"
        )));
    }
    let test_end = (train + test).min(n);
    Ok((0..train, train..test_end))
}

/// Memory capacity of a reservoir: per-lag squared correlation between a
/// trained linear reconstruction of u(k - d) and its true value on held-out
/// data, plus the total over lags 1..=max_lag.
///
/// The runner maps an input series to collected states, applying its own
/// washout at the start; remaining rows are aligned to the tail of the input.
pub fn memory_capacity<R>(
    mut runner: R,
    max_lag: usize,
    length: usize,
    rng: &RandomSource,
) -> Result<(Vec<f64>, f64)>
where
    R: FnMut(&TimeSeries) -> Result<StateMatrix>,
{
    if max_lag == 0 {
        return Err(Error::InvalidParameter("max_lag must be >= 1".into()));
    }
    let mut draw = rng.substream("mc/input");
    let input_values: Vec<f64> = (0..length).map(|_| draw.uniform_in(-1.0, 1.0)).collect();
    let input = TimeSeries::from_scalars(input_values.clone(), 1.0)?;

    let states = runner(&input)?;
    if states.rows() > length {
        return Err(Error::ShapeMismatch(format!(
            "runner returned {} rows for {} inputs",
            states.rows(),
            length
        )));
    }
    let offset = length - states.rows();

    if states.data().amax() <= 0.0 {
        return Err(Error::IllConditioned("state matrix is identically zero".into()));
    }

    // Keep rows whose lagged targets exist for every lag.
    let skip = max_lag.saturating_sub(offset);
    if skip >= states.rows() {
        return Err(Error::InvalidParameter(format!(
            "input length {length} too short for max_lag {max_lag}"
        )));
    }
    let kept = states.slice_rows(skip, states.rows())?;
    let n = kept.rows();
    let (train, test) = chronological_split(n, 0.7, 0.3)?;
    let train_states = kept.slice_rows(train.start, train.end)?;
    let test_states = kept.slice_rows(test.start, test.end)?;

    let cfg = RidgeConfig::new(MC_RIDGE_LAMBDA);
    let mut capacities = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let target_at = |row: usize| input_values[offset + skip + row - lag];
        let train_target = TimeSeries::from_scalars(train.clone().map(target_at).collect(), 1.0)?;
        let w = train_ridge(&train_states, &train_target, &cfg)?;
        let pred = predict(&w, &test_states)?;
        let pred_vals: Vec<f64> = (0..pred.len()).map(|k| pred.scalar(k)).collect();
        let test_target: Vec<f64> = test.clone().map(target_at).collect();
        capacities.push(population_corr_sq(&pred_vals, &test_target));
    }
    let total = capacities.iter().sum();
    Ok((capacities, total))
}

/// Reservoir description carried into result records.
#[derive(Debug, Clone)]
pub struct ReservoirInfo {
    pub label: String,
    pub n_nodes: usize,
}

/// One evaluation outcome with everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct MetricsRecord {
    pub task: String,
    pub reservoir: String,
    pub seed: u64,
    pub n_nodes: usize,
    pub lambda: f64,
    pub train_nmse: Option<f64>,
    pub test_nmse: Option<f64>,
    pub mc_total: Option<f64>,
}

/// Input series and aligned per-sample targets for a supervised task.
pub fn task_dataset(task: &TaskSpec, rng: &RandomSource) -> Result<(TimeSeries, TimeSeries)> {
    task.validate()?;
    match task.kind {
        TaskKind::Narma10 => gen_narma10(task.length, &rng.substream("task/data")),
        TaskKind::MackeyGlass { horizon } => {
            let series = gen_mackey_glass(task.length + horizon, MG_DT, MG_SUBSAMPLE)?;
            let input = series.slice_rows(0, task.length)?;
            let target = series.slice_rows(horizon, horizon + task.length)?;
            Ok((input, target))
        }
        TaskKind::MemoryCapacity { .. } => Err(Error::InvalidParameter(
            "memory capacity has no per-sample target series".into(),
        )),
    }
}

/// Train a ridge readout on the train split and report train/test NMSE (or the
/// memory capacity for that task kind). The same seed always yields the same
/// record.
pub fn evaluate<R>(
    task: &TaskSpec,
    mut runner: R,
    info: &ReservoirInfo,
    ridge: &RidgeConfig,
    seed: u64,
) -> Result<MetricsRecord>
where
    R: FnMut(&TimeSeries) -> Result<StateMatrix>,
{
    task.validate()?;
    let rng = RandomSource::new(seed);
    let mut record = MetricsRecord {
        task: task.kind.name().to_string(),
        reservoir: info.label.clone(),
        seed,
        n_nodes: info.n_nodes,
        lambda: ridge.lambda,
        train_nmse: None,
        test_nmse: None,
        mc_total: None,
    };

    if let TaskKind::MemoryCapacity { max_lag } = task.kind {
        let (_, total) = memory_capacity(runner, max_lag, task.length, &rng)?;
        record.lambda = MC_RIDGE_LAMBDA;
        record.mc_total = Some(total);
        return Ok(record);
    }

    let (input, target) = task_dataset(task, &rng)?;
    let states = runner(&input)?;
    if states.rows() > input.len() {
        return Err(Error::ShapeMismatch(format!(
            "runner returned {} rows for {} inputs",
            states.rows(),
            input.len()
        )));
    }
    let offset = input.len() - states.rows();
    let aligned = target.slice_rows(offset, target.len())?;

    let (train, test) = chronological_split(states.rows(), task.train_frac, task.test_frac)?;
    let train_states = states.slice_rows(train.start, train.end)?;
    let test_states = states.slice_rows(test.start, test.end)?;
    let train_target = aligned.slice_rows(train.start, train.end)?;
    let test_target = aligned.slice_rows(test.start, test.end)?;

    let w = train_ridge(&train_states, &train_target, ridge)?;
    record.train_nmse = Some(nmse(&predict(&w, &train_states)?, &train_target)?);
    record.test_nmse = Some(nmse(&predict(&w, &test_states)?, &test_target)?);
    Ok(record)
}
