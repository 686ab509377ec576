//! Output-layer training: y(t) = W_out [x(t); 1].
//!
//! The collected states are augmented with a constant-1 column so a target
//! offset can be absorbed; the augmentation is switchable via
//! [`RidgeConfig::fit_bias`]. Multi-output targets are trained per output on
//! the shared state matrix. Besides ridge regression there is an online LMS
//! variant and a greedy random-flip search over Boolean node weights.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::series::{StateMatrix, TimeSeries};

/// Alphabet of a Boolean readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BooleanAlphabet {
    /// Weights in {0, 1} (default).
    ZeroOne,
    /// Weights in {-1, +1}.
    PlusMinus,
}

impl BooleanAlphabet {
    fn values(self) -> (f64, f64) {
        match self {
            BooleanAlphabet::ZeroOne => (0.0, 1.0),
            BooleanAlphabet::PlusMinus => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutKind {
    Real,
    Boolean(BooleanAlphabet),
}

/// Trained readout: one row per output, N node weights plus a trailing bias
/// column. Boolean readouts restrict the node weights to their alphabet; the
/// bias stays real.
#[derive(Debug, Clone)]
pub struct ReadoutWeights {
    w_out: DMatrix<f64>,
    kind: ReadoutKind,
}

impl ReadoutWeights {
    pub fn new(w_out: DMatrix<f64>, kind: ReadoutKind) -> Result<Self> {
        if w_out.ncols() < 2 {
            return Err(Error::ShapeMismatch(
                "readout needs at least one node column plus the bias column".into(),
            ));
        }
        if w_out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("readout weight".into()));
        }
        if let ReadoutKind::Boolean(alphabet) = kind {
            let (lo, hi) = alphabet.values();
            let nodes = w_out.ncols() - 1;
            for r in 0..w_out.nrows() {
                for c in 0..nodes {
                    let v = w_out[(r, c)];
                    if v != lo && v != hi {
                        return Err(Error::InvalidParameter(format!(
                            "boolean weight [{r}][{c}] = {v} outside {{{lo}, {hi}}}"
                        )));
                    }
                }
            }
        }
        Ok(Self { w_out, kind })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w_out
    }

    pub fn kind(&self) -> ReadoutKind {
        self.kind
    }

    /// Number of outputs (rows).
    pub fn outputs(&self) -> usize {
        self.w_out.nrows()
    }

    /// Number of node weights (columns minus the bias).
    pub fn nodes(&self) -> usize {
        self.w_out.ncols() - 1
    }
}

/// Ridge regression settings.
#[derive(Debug, Clone, Copy)]
pub struct RidgeConfig {
    /// Regularization strength on the node weights (the bias is not penalized).
    pub lambda: f64,
    /// Append the constant-1 column. Off: the bias weight is fixed to zero.
    pub fit_bias: bool,
}

impl RidgeConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, fit_bias: true }
    }
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self::new(0.0)
    }
}

fn check_training_shapes(states: &StateMatrix, targets: &TimeSeries) -> Result<()> {
    if states.rows() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} state rows vs {} target samples",
            states.rows(),
            targets.len()
        )));
    }
    Ok(())
}

/// Solve (S'S + lambda*I_nodes) W = S'Y on the bias-augmented state matrix via
/// Cholesky. A singular system at lambda = 0 is reported as ill-conditioned.
pub fn train_ridge(
    states: &StateMatrix,
    targets: &TimeSeries,
    cfg: &RidgeConfig,
) -> Result<ReadoutWeights> {
    check_training_shapes(states, targets)?;
    if !cfg.lambda.is_finite() || cfg.lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {}",
            cfg.lambda
        )));
    }

    let n = states.cols();
    let rows = states.rows();
    let m = targets.width();
    let dim = if cfg.fit_bias { n + 1 } else { n };

    let mut design = DMatrix::zeros(rows, dim);
    design.columns_mut(0, n).copy_from(states.data());
    if cfg.fit_bias {
        design.column_mut(n).fill(1.0);
    }

    let mut gram = design.transpose() * &design;
    for i in 0..n {
        gram[(i, i)] += cfg.lambda;
    }
    let rhs = design.transpose() * targets.data();

    let solved = match nalgebra::Cholesky::new(gram) {
        Some(chol) => chol.solve(&rhs),
        None => {
            return Err(if cfg.lambda == 0.0 {
                Error::IllConditioned(
                    "normal equations are singular at lambda = 0; use lambda > 0".into(),
                )
            } else {
                Error::IllConditioned("normal equations failed to factorize".into())
            });
        }
    };

    let mut w_out = DMatrix::zeros(m, n + 1);
    for out in 0..m {
        for c in 0..dim {
            w_out[(out, c)] = solved[(c, out)];
        }
    }
    ReadoutWeights::new(w_out, ReadoutKind::Real)
}

/// Apply a readout to collected states: row k of the result is W_out [x(k); 1].
pub fn predict(w: &ReadoutWeights, states: &StateMatrix) -> Result<TimeSeries> {
    if w.nodes() != states.cols() {
        return Err(Error::ShapeMismatch(format!(
            "readout expects {} nodes, states have {}",
            w.nodes(),
            states.cols()
        )));
    }
    let rows = states.rows();
    let m = w.outputs();
    let n = w.nodes();
    let node_w = w.w_out.columns(0, n);
    let mut out = states.data() * node_w.transpose();
    for k in 0..rows {
        for o in 0..m {
            out[(k, o)] += w.w_out[(o, n)];
        }
    }
    TimeSeries::new(out, 1.0)
}

/// Mean squared error between a prediction and a target, over all entries.
pub fn mse(pred: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    if pred.len() != target.len() || pred.width() != target.width() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{} vs target {}x{}",
            pred.len(),
            pred.width(),
            target.len(),
            target.width()
        )));
    }
    let diff = pred.data() - target.data();
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / (diff.nrows() * diff.ncols()) as f64)
}

/// Mean squared error normalized by the population variance of the target.
pub fn nmse(pred: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    let err = mse(pred, target)?;
    let t = target.data();
    let count = (t.nrows() * t.ncols()) as f64;
    let mean = t.iter().sum::<f64>() / count;
    let var = t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(err / var)
}

/// Online least-mean-squares: per-sample update
/// w <- w + rate * (y - w'[x;1]) * [x;1], visiting samples in time order for
/// `passes` epochs.
pub fn train_online_lms(
    states: &StateMatrix,
    targets: &TimeSeries,
    rate: f64,
    passes: usize,
) -> Result<ReadoutWeights> {
    check_training_shapes(states, targets)?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be > 0, got {rate}")));
    }
    if passes == 0 {
        return Err(Error::InvalidParameter("passes must be >= 1".into()));
    }

    let n = states.cols();
    let m = targets.width();
    let rows = states.rows();
    let mut w = DMatrix::<f64>::zeros(m, n + 1);

    for epoch in 0..passes {
        for k in 0..rows {
            let x = states.row(k);
            for out in 0..m {
                let mut pred = w[(out, n)];
                for j in 0..n {
                    pred += w[(out, j)] * x[j];
                }
                let err = targets.data()[(k, out)] - pred;
                for j in 0..n {
                    w[(out, j)] += rate * err * x[j];
                }
                w[(out, n)] += rate * err;
            }
            let norm = w.norm();
            if !norm.is_finite() || norm > 1e12 {
                return Err(Error::Diverged(format!(
                    "LMS weights at epoch {epoch}, sample {k} (norm {norm:e})"
                )));
            }
        }
    }
    ReadoutWeights::new(w, ReadoutKind::Real)
}

/// Result of the greedy Boolean readout search.
#[derive(Debug, Clone)]
pub struct BooleanSearch {
    pub weights: ReadoutWeights,
    /// Training MSE achieved by the returned weights.
    pub mse: f64,
    /// Accepted MSE after each iteration (non-increasing), averaged over
    /// outputs.
    pub trace: Vec<f64>,
}

fn column_dot(states: &StateMatrix, j: usize, out: &mut DVector<f64>, factor: f64) {
    for k in 0..states.rows() {
        out[k] += factor * states.data()[(k, j)];
    }
}

fn bias_and_mse(projection: &DVector<f64>, target: &DVector<f64>) -> (f64, f64) {
    let rows = target.len() as f64;
    let bias = (target - projection).sum() / rows;
    let mut err = 0.0;
    for k in 0..target.len() {
        let d = projection[k] + bias - target[k];
        err += d * d;
    }
    (bias, err / rows)
}

/// Greedy random-flip search over Boolean node weights: each iteration flips
/// one uniformly chosen weight and keeps the flip iff the MSE (with the bias
/// refit in closed form) does not increase. Anytime: any iteration count
/// yields valid weights.
pub fn train_boolean_reinforce(
    states: &StateMatrix,
    targets: &TimeSeries,
    iterations: usize,
    rng: &mut RandomSource,
    alphabet: BooleanAlphabet,
) -> Result<BooleanSearch> {
    check_training_shapes(states, targets)?;
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }

    let n = states.cols();
    let m = targets.width();
    let (lo, hi) = alphabet.values();
    let mut w_out = DMatrix::zeros(m, n + 1);
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut total_mse = 0.0;

    for out in 0..m {
        let target = targets.data().column(out).into_owned();
        let mut weights: Vec<f64> = (0..n)
            .map(|_| if rng.uniform_01() < 0.5 { lo } else { hi })
            .collect();
        let mut projection = DVector::zeros(states.rows());
        for (j, &wj) in weights.iter().enumerate() {
            if wj != 0.0 {
                column_dot(states, j, &mut projection, wj);
            }
        }
        let (mut bias, mut err) = bias_and_mse(&projection, &target);
        let mut trace = Vec::with_capacity(iterations);

        for _ in 0..iterations {
            let j = (rng.next_u64() % n as u64) as usize;
            let old = weights[j];
            let new = if old == lo { hi } else { lo };
            let mut candidate = projection.clone();
            column_dot(states, j, &mut candidate, new - old);
            let (cand_bias, cand_err) = bias_and_mse(&candidate, &target);
            if cand_err <= err {
                weights[j] = new;
                projection = candidate;
                bias = cand_bias;
                err = cand_err;
            }
            trace.push(err);
        }

        for (j, &wj) in weights.iter().enumerate() {
            w_out[(out, j)] = wj;
        }
        w_out[(out, n)] = bias;
        total_mse += err;
        traces.push(trace);
    }

    let trace = (0..iterations)
        .map(|i| traces.iter().map(|t| t[i]).sum::<f64>() / m as f64)
        .collect();
    Ok(BooleanSearch {
        weights: ReadoutWeights::new(w_out, ReadoutKind::Boolean(alphabet))?,
        mse: total_mse / m as f64,
        trace,
    })
}
