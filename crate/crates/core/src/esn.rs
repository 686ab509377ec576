//! Discrete-time echo-state reservoir: x(t+1) = f(W_int x(t) + W_inj u(t+1) + b).
//!
//! Internal, injection and bias weights are drawn uniformly from [-1, 1] and
//! then scaled: W_int to a target spectral radius, W_inj by the input scaling,
//! b by the bias scale. Only the readout (see [`crate::readout`]) is ever
//! trained. There is no leak term and the initial state defaults to zeros.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::rng::RandomSource;
use crate::series::{StateMatrix, TimeSeries};

/// Node nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
    /// Ikeda-type intensity transfer, f(z) = sin(z)^2.
    SinSq,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
            Activation::SinSq => {
                let s = z.sin();
                s * s
            }
        }
    }
}

/// Hyperparameters of an echo-state reservoir.
#[derive(Debug, Clone, Copy)]
pub struct EsnParams {
    pub n_nodes: usize,
    pub spectral_radius_target: f64,
    pub input_scaling: f64,
    pub bias_scale: f64,
    pub input_dim: usize,
    pub activation: Activation,
}

impl EsnParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.input_dim == 0 {
            return Err(Error::InvalidParameter(
                "n_nodes and input_dim must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("spectral_radius_target", self.spectral_radius_target),
            ("input_scaling", self.input_scaling),
            ("bias_scale", self.bias_scale),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A built reservoir. Immutable after construction and safe to share.
#[derive(Debug, Clone)]
pub struct EsnReservoir {
    w_int: DMatrix<f64>,
    w_inj: DMatrix<f64>,
    bias: DVector<f64>,
    activation: Activation,
}

impl EsnReservoir {
    /// Assemble from explicit weights (used for handcrafted reservoirs).
    pub fn from_parts(
        w_int: DMatrix<f64>,
        w_inj: DMatrix<f64>,
        bias: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let n = w_int.nrows();
        if w_int.ncols() != n {
            return Err(Error::ShapeMismatch("w_int must be square".into()));
        }
        if w_inj.nrows() != n || bias.len() != n {
            return Err(Error::ShapeMismatch(
                "w_inj rows and bias length must match w_int".into(),
            ));
        }
        Ok(Self { w_int, w_inj, bias, activation })
    }

    pub fn n_nodes(&self) -> usize {
        self.w_int.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_inj.ncols()
    }

    pub fn w_int(&self) -> &DMatrix<f64> {
        &self.w_int
    }

    pub fn w_inj(&self) -> &DMatrix<f64> {
        &self.w_inj
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// All-zero initial state.
    pub fn zero_state(&self) -> DVector<f64> {
        DVector::zeros(self.n_nodes())
    }
}

fn draw_matrix(rng: &mut RandomSource, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    // Row-major draw order so the sequence is part of the public contract.
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.uniform_in(-1.0, 1.0) * scale).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

/// Build a reservoir: W_int uniform [-1,1] rescaled to the target spectral
/// radius, W_inj uniform [-1,1] times the input scaling, bias uniform [-1,1]
/// times the bias scale. Draw order: W_int row-major, then W_inj row-major,
/// then bias.
pub fn build_esn(params: &EsnParams, rng: &mut RandomSource) -> Result<EsnReservoir> {
    params.validate()?;
    let n = params.n_nodes;
    let rho = params.spectral_radius_target;

    let mut w_int = draw_matrix(rng, n, n, 1.0);
    if rho == 0.0 {
        w_int.fill(0.0);
    } else {
        let raw = spectral_radius(&w_int)?;
        if raw <= f64::EPSILON {
            return Err(Error::Construction(format!(
                "drawn matrix has spectral radius {raw}; cannot rescale to {rho}"
            )));
        }
        w_int *= rho / raw;
        let scaled = spectral_radius(&w_int)?;
        if (scaled - rho).abs() > 1e-6 {
            return Err(Error::Construction(format!(
                "rescaled spectral radius {scaled} misses target {rho}"
            )));
        }
    }

    let w_inj = draw_matrix(rng, n, params.input_dim, params.input_scaling);
    let bias_values = draw_matrix(rng, n, 1, params.bias_scale);
    let bias = bias_values.column(0).into_owned();

    EsnReservoir::from_parts(w_int, w_inj, bias, params.activation)
}

/// One state update: f(W_int x + W_inj u + b).
pub fn esn_step(r: &EsnReservoir, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != r.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "state width {} but reservoir has {} nodes",
            x.len(),
            r.n_nodes()
        )));
    }
    if u.len() != r.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input width {} but reservoir expects {}",
            u.len(),
            r.input_dim()
        )));
    }
    let mut z = &r.w_int * x;
    z += &r.w_inj * u;
    z += &r.bias;
    Ok(z.map(|v| r.activation.apply(v)))
}

/// Drive the reservoir through a whole input series from state `x0`,
/// discarding the first `washout` states. Row k of the result is the state
/// after consuming input sample `washout + k`.
pub fn esn_run(
    r: &EsnReservoir,
    input: &TimeSeries,
    x0: &DVector<f64>,
    washout: usize,
) -> Result<StateMatrix> {
    if input.width() != r.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input width {} but reservoir expects {}",
            input.width(),
            r.input_dim()
        )));
    }
    let len = input.len();
    if washout >= len {
        return Err(Error::InvalidParameter(format!(
            "washout {washout} must be smaller than input length {len}"
        )));
    }

    let n = r.n_nodes();
    let mut x = x0.clone();
    let mut states = DMatrix::zeros(len - washout, n);
    for k in 0..len {
        x = esn_step(r, &x, &input.sample(k))?;
        if k >= washout {
            states.row_mut(k - washout).copy_from(&x.transpose());
        }
    }
    StateMatrix::new(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_radius_dense;

    fn params(n: usize, rho: f64) -> EsnParams {
        EsnParams {
            n_nodes: n,
            spectral_radius_target: rho,
            input_scaling: 1.0,
            bias_scale: 0.5,
            input_dim: 1,
            activation: Activation::Tanh,
        }
    }

    #[test]
    fn zero_target_gives_zero_matrix() {
        let mut rng = RandomSource::new(1);
        let r = build_esn(&params(8, 0.0), &mut rng).unwrap();
        assert!(r.w_int().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_bias_scale_gives_zero_bias() {
        let mut rng = RandomSource::new(1);
        let mut p = params(8, 0.5);
        p.bias_scale = 0.0;
        let r = build_esn(&p, &mut rng).unwrap();
        assert!(r.bias().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectral_radius_hits_target() {
        let mut rng = RandomSource::new(3);
        let r = build_esn(&params(50, 0.9), &mut rng).unwrap();
        let measured = spectral_radius_dense(r.w_int()).unwrap();
        assert!((measured - 0.9).abs() < 1e-6, "measured {measured}");
    }

    #[test]
    fn zero_weights_fix_zero_state() {
        let r = EsnReservoir::from_parts(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 2),
            DVector::zeros(3),
            Activation::Tanh,
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.3, -0.7, 0.1]);
        let u = DVector::from_vec(vec![5.0, -2.0]);
        let y = esn_step(&r, &x, &u).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_injection_passes_input_through() {
        let r = EsnReservoir::from_parts(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            Activation::Identity,
        )
        .unwrap();
        let u = DVector::from_vec(vec![0.25, -1.5]);
        let y = esn_step(&r, &DVector::zeros(2), &u).unwrap();
        assert_eq!(y, u);
    }

    #[test]
    fn step_rejects_bad_shapes() {
        let mut rng = RandomSource::new(1);
        let r = build_esn(&params(4, 0.5), &mut rng).unwrap();
        let err = esn_step(&r, &DVector::zeros(3), &DVector::zeros(1)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
        let err = esn_step(&r, &DVector::zeros(4), &DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    // Direct scalar recurrence, coded independently of the matrix path.
    fn recurrence_oracle(
        w_int: &[[f64; 3]; 3],
        w_inj: &[f64; 3],
        bias: &[f64; 3],
        inputs: &[f64],
    ) -> Vec<[f64; 3]> {
        let mut x = [0.0f64; 3];
        let mut out = Vec::new();
        for &u in inputs {
            let mut next = [0.0f64; 3];
            for i in 0..3 {
                let mut z = bias[i] + w_inj[i] * u;
                for j in 0..3 {
                    z += w_int[i][j] * x[j];
                }
                next[i] = z.tanh();
            }
            x = next;
            out.push(x);
        }
        out
    }

    #[test]
    fn matches_handcrafted_recurrence() {
        let w_int = [[0.2, -0.1, 0.05], [0.3, 0.1, -0.2], [-0.15, 0.25, 0.1]];
        let w_inj = [0.8, -0.5, 0.3];
        let bias = [0.1, -0.2, 0.05];
        let inputs = [0.5, -0.3, 0.8, 0.1, -0.6];

        let r = EsnReservoir::from_parts(
            DMatrix::from_fn(3, 3, |i, j| w_int[i][j]),
            DMatrix::from_fn(3, 1, |i, _| w_inj[i]),
            DVector::from_fn(3, |i, _| bias[i]),
            Activation::Tanh,
        )
        .unwrap();
        let series = TimeSeries::from_scalars(inputs.to_vec(), 1.0).unwrap();
        let states = esn_run(&r, &series, &r.zero_state(), 0).unwrap();
        let expect = recurrence_oracle(&w_int, &w_inj, &bias, &inputs);
        for (k, row) in expect.iter().enumerate() {
            for i in 0..3 {
                assert!(
                    (states.data()[(k, i)] - row[i]).abs() < 1e-12,
                    "step {k} node {i}"
                );
            }
        }
    }

    #[test]
    fn washout_boundary_keeps_one_row() {
        let mut rng = RandomSource::new(5);
        let r = build_esn(&params(4, 0.8), &mut rng).unwrap();
        let input = TimeSeries::from_scalars(vec![0.1; 10], 1.0).unwrap();
        let states = esn_run(&r, &input, &r.zero_state(), 9).unwrap();
        assert_eq!(states.rows(), 1);
        assert!(esn_run(&r, &input, &r.zero_state(), 10).is_err());
    }

    #[test]
    fn run_equals_stacked_steps() {
        let mut rng = RandomSource::new(6);
        let r = build_esn(&params(3, 0.7), &mut rng).unwrap();
        let inputs = vec![0.2, -0.4, 0.6, 0.0];
        let series = TimeSeries::from_scalars(inputs.clone(), 1.0).unwrap();
        let states = esn_run(&r, &series, &r.zero_state(), 0).unwrap();

        let mut x = r.zero_state();
        for (k, &u) in inputs.iter().enumerate() {
            x = esn_step(&r, &x, &DVector::from_vec(vec![u])).unwrap();
            assert_eq!(states.row(k), x, "step {k}");
        }
    }

    #[test]
    fn tanh_states_stay_in_open_unit_interval() {
        let mut rng = RandomSource::new(9);
        let r = build_esn(&params(20, 0.9), &mut rng).unwrap();
        let mut input_rng = RandomSource::new(10);
        let input = TimeSeries::from_scalars(
            (0..200).map(|_| input_rng.uniform_in(-1.0, 1.0)).collect(),
            1.0,
        )
        .unwrap();
        let states = esn_run(&r, &input, &r.zero_state(), 0).unwrap();
        assert!(states.data().iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn fading_memory_under_identical_input() {
        let mut rng = RandomSource::new(12);
        let r = build_esn(&params(30, 0.9), &mut rng).unwrap();
        let mut input_rng = RandomSource::new(13);
        let input = TimeSeries::from_scalars(
            (0..500).map(|_| input_rng.uniform_in(-1.0, 1.0)).collect(),
            1.0,
        )
        .unwrap();
        let mut x0_rng = RandomSource::new(14);
        let a = DVector::from_fn(30, |_, _| x0_rng.uniform_in(-1.0, 1.0));
        let b = DVector::from_fn(30, |_, _| x0_rng.uniform_in(-1.0, 1.0));
        let sa = esn_run(&r, &input, &a, 0).unwrap();
        let sb = esn_run(&r, &input, &b, 0).unwrap();
        let last = sa.rows() - 1;
        let dist = (sa.row(last) - sb.row(last)).norm();
        assert!(dist < 1e-6, "distance {dist}");
    }

    #[test]
    fn deterministic_given_seed() {
        let build = || {
            let mut rng = RandomSource::new(21);
            let r = build_esn(&params(10, 0.8), &mut rng).unwrap();
            let input = TimeSeries::from_scalars(vec![0.3; 50], 1.0).unwrap();
            esn_run(&r, &input, &r.zero_state(), 0).unwrap()
        };
        assert_eq!(build().data(), build().data());
    }

    #[test]
    fn identity_activation_superposition() {
        let mut rng = RandomSource::new(30);
        let mut p = params(6, 0.5);
        p.activation = Activation::Identity;
        p.bias_scale = 0.0;
        p.input_dim = 2;
        let r = build_esn(&p, &mut rng).unwrap();

        let mut v = RandomSource::new(31);
        let x1 = DVector::from_fn(6, |_, _| v.uniform_in(-1.0, 1.0));
        let x2 = DVector::from_fn(6, |_, _| v.uniform_in(-1.0, 1.0));
        let u1 = DVector::from_fn(2, |_, _| v.uniform_in(-1.0, 1.0));
        let u2 = DVector::from_fn(2, |_, _| v.uniform_in(-1.0, 1.0));
        let (a, b) = (0.7, -1.3);

        let lhs = esn_step(&r, &(&x1 * a + &x2 * b), &(&u1 * a + &u2 * b)).unwrap();
        let rhs = esn_step(&r, &x1, &u1).unwrap() * a + esn_step(&r, &x2, &u2).unwrap() * b;
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
