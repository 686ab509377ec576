//! Delay-based reservoir: a single nonlinear node in a delayed feedback loop,
//! time-multiplexed into N virtual nodes.
//!
//! Each discrete input s(k) is held for an input period T = N*theta and
//! multiplied by a T-periodic step mask m(t); the masked drive
//! J(t) = gamma * m(t mod T) * s(k) feeds the node. The node is modelled as
//!
//!   eps * dx/dt = -x(t) + beta * sin^2( x(t - tau) + J(t) + phi0 )
//!
//! with constant pre-history, integrated by a fixed-step Heun scheme with
//! linear interpolation of the delayed term. Virtual node i of input k is the
//! state sampled at t = k*T + (i+1)*theta, i.e. at the end of the node's slot.
//!
//! The input period may be desynchronized from the delay by whole slots,
//! tau = T + d*theta. The feedback a node sees is then the slot emitted
//! exactly tau earlier on the delay line: node i of step k couples to node
//! (i - d) mod N of step k-1 (or of step k-2 when the shift wraps past the
//! start of the period). With d = 0 each node couples to itself. When the node
//! settles within a slot (eps << theta) this reduces to the discrete map
//!
//!   x_i(k) = beta * sin^2( x_fb + gamma * m_i * s(k) + phi0 )
//!
//! implemented by [`run_discrete_map`]; [`integrate_dde`] covers the transient
//! regime (eps comparable to theta) where neighbour coupling emerges from the
//! low-pass response itself.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::series::{StateMatrix, TimeSeries};

/// T-periodic step mask with one amplitude per virtual node.
#[derive(Debug, Clone)]
pub struct Mask {
    amplitudes: Vec<f64>,
    node_separation: f64,
}

impl Mask {
    pub fn new(amplitudes: Vec<f64>, node_separation: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("mask needs at least one step".into()));
        }
        if !(node_separation.is_finite() && node_separation > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "node separation must be positive, got {node_separation}"
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("mask amplitude".into()));
        }
        Ok(Self { amplitudes, node_separation })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 1 step
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn node_separation(&self) -> f64 {
        self.node_separation
    }

    /// Mask period T = N * theta.
    pub fn period(&self) -> f64 {
        self.amplitudes.len() as f64 * self.node_separation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// Amplitudes in {-1, +1}, equiprobable.
    Binary,
    /// Amplitudes uniform in [-1, 1).
    Uniform,
}

/// Draw a length-n mask with node separation theta.
pub fn make_mask(n: usize, kind: MaskKind, rng: &mut RandomSource, theta: f64) -> Result<Mask> {
    if n == 0 {
        return Err(Error::InvalidParameter("mask length must be >= 1".into()));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "node separation must be positive, got {theta}"
        )));
    }
    let amplitudes = (0..n)
        .map(|_| match kind {
            MaskKind::Binary => {
                if rng.uniform_01() < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            MaskKind::Uniform => rng.uniform_in(-1.0, 1.0),
        })
        .collect();
    Mask::new(amplitudes, theta)
}

/// Parameters of the delayed-feedback node and its multiplexing scheme.
///
/// The input period T = n_virtual * node_separation and the delay
/// tau = T + desync_shift * node_separation are derived, so the
/// synchronization invariant holds by construction.
#[derive(Debug, Clone, Copy)]
pub struct DelayParams {
    /// Node low-pass response time eps.
    pub response_time: f64,
    /// Feedback gain beta.
    pub feedback_gain: f64,
    /// Input gain gamma.
    pub input_gain: f64,
    /// Operating-point phase phi0 of the sin^2 transfer.
    pub phase_offset: f64,
    /// Number of virtual nodes N.
    pub n_virtual: usize,
    /// Node separation theta.
    pub node_separation: f64,
    /// Offset d between input period and delay, in whole theta slots.
    pub desync_shift: usize,
}

impl DelayParams {
    /// Transient-regime defaults: eps = theta/5, beta 0.9, gamma 0.5,
    /// phi0 = pi/4, d = 1.
    pub fn transient(n_virtual: usize, node_separation: f64) -> Self {
        Self {
            response_time: node_separation / 5.0,
            feedback_gain: 0.9,
            input_gain: 0.5,
            phase_offset: std::f64::consts::FRAC_PI_4,
            n_virtual,
            node_separation,
            desync_shift: 1,
        }
    }

    /// Settled-regime defaults: eps = theta/100, synchronized (d = 0).
    pub fn settled(n_virtual: usize, node_separation: f64) -> Self {
        Self {
            response_time: node_separation / 100.0,
            desync_shift: 0,
            ..Self::transient(n_virtual, node_separation)
        }
    }

    /// Input period T = N * theta.
    pub fn input_period(&self) -> f64 {
        self.n_virtual as f64 * self.node_separation
    }

    /// Delay tau = T + d * theta.
    pub fn delay_time(&self) -> f64 {
        (self.n_virtual + self.desync_shift) as f64 * self.node_separation
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_virtual == 0 {
            return Err(Error::InvalidParameter("n_virtual must be >= 1".into()));
        }
        for (name, v) in [
            ("response_time", self.response_time),
            ("node_separation", self.node_separation),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("feedback_gain", self.feedback_gain),
            ("input_gain", self.input_gain),
            ("phase_offset", self.phase_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Masked, held and oversampled drive J(t), piecewise constant on intervals of
/// length theta/oversample. Sample n applies on the interval ending at
/// (n+1)*dt.
#[derive(Debug, Clone)]
pub struct DriveSignal {
    series: TimeSeries,
    node_separation: f64,
    oversample: usize,
}

impl DriveSignal {
    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn node_separation(&self) -> f64 {
        self.node_separation
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn dt(&self) -> f64 {
        self.series.dt()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, n: usize) -> f64 {
        self.series.scalar(n)
    }
}

/// Hold each input sample for one mask period and multiply by the mask:
/// J(t) = gamma * m(t mod T) * s(k) on [k*T, (k+1)*T). `oversample` sub-samples
/// per theta slot (1 for the discrete map, >= 10 for DDE integration).
pub fn multiplex(
    input: &TimeSeries,
    mask: &Mask,
    gamma: f64,
    oversample: usize,
) -> Result<DriveSignal> {
    if input.width() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "delay reservoir input must be width 1, got {}",
            input.width()
        )));
    }
    if oversample == 0 {
        return Err(Error::InvalidParameter("oversample must be >= 1".into()));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be finite, got {gamma}")));
    }

    let n = mask.len();
    let dt = mask.node_separation() / oversample as f64;
    let mut values = Vec::with_capacity(input.len() * n * oversample);
    for k in 0..input.len() {
        let s = input.scalar(k);
        for &m in mask.amplitudes() {
            let v = gamma * m * s;
            values.extend(std::iter::repeat(v).take(oversample));
        }
    }
    Ok(DriveSignal {
        series: TimeSeries::from_scalars(values, dt)?,
        node_separation: mask.node_separation(),
        oversample,
    })
}

/// Fixed-step Heun integration of a scalar delay system
/// dx/dt = rhs(x(t), x(t - tau), J(t)) with constant pre-history
/// x(t <= 0) = history. The drive is piecewise constant: drive[n] applies on
/// the interval ending at (n+1)*h, and the returned trajectory holds x at
/// exactly those times. The delayed term is linearly interpolated between grid
/// points.
pub fn integrate_delayed<F>(
    rhs: F,
    tau: f64,
    history: f64,
    drive: &[f64],
    h: f64,
) -> Result<Vec<f64>>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    if !(tau.is_finite() && tau >= h) {
        return Err(Error::InvalidParameter(format!(
            "delay {tau} must be at least one step {h}"
        )));
    }
    if !history.is_finite() {
        return Err(Error::NonFinite("history".into()));
    }
    if drive.is_empty() {
        return Err(Error::InvalidParameter("drive must not be empty".into()));
    }

    let steps = drive.len();
    let tau_steps = tau / h;
    // grid[n] = x(n*h); grid[0] is the history value at t = 0.
    let mut grid = Vec::with_capacity(steps + 1);
    grid.push(history);

    let delayed = |grid: &[f64], n: f64| -> f64 {
        let s = n - tau_steps;
        if s <= 0.0 {
            return history;
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        if frac == 0.0 || i + 1 >= grid.len() {
            grid[i.min(grid.len() - 1)]
        } else {
            grid[i] * (1.0 - frac) + grid[i + 1] * frac
        }
    };

    for (n, &j) in drive.iter().enumerate() {
        let x = grid[n];
        let xd0 = delayed(&grid, n as f64);
        let k1 = rhs(x, xd0, j);
        let xd1 = delayed(&grid, (n + 1) as f64);
        let predictor = x + h * k1;
        let k2 = rhs(predictor, xd1, j);
        let next = x + 0.5 * h * (k1 + k2);
        if !next.is_finite() {
            return Err(Error::Diverged(format!(
                "state non-finite at t = {}",
                (n + 1) as f64 * h
            )));
        }
        grid.push(next);
    }

    grid.remove(0);
    Ok(grid)
}

/// Integrate the optoelectronic node
/// eps * dx/dt = -x + beta * sin^2(x(t-tau) + J(t) + phi0) over a drive
/// signal. Requires drive dt <= theta/10 and dt <= eps/2 (stability of the
/// explicit scheme).
pub fn integrate_dde(p: &DelayParams, drive: &DriveSignal, history: f64) -> Result<TimeSeries> {
    p.validate()?;
    let theta = p.node_separation;
    if (drive.node_separation() - theta).abs() > 1e-9 * theta {
        return Err(Error::InvalidParameter(format!(
            "drive node separation {} does not match params {}",
            drive.node_separation(),
            theta
        )));
    }
    let h = drive.dt();
    if h > theta / 10.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "drive dt {h} too coarse; need dt <= theta/10 = {}",
            theta / 10.0
        )));
    }
    let limit = p.response_time / 2.0;
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { step: h, limit });
    }

    let eps = p.response_time;
    let beta = p.feedback_gain;
    let phi0 = p.phase_offset;
    let rhs = move |x: f64, xd: f64, j: f64| -> f64 {
        let s = (xd + j + phi0).sin();
        (-x + beta * s * s) / eps
    };
    let values = integrate_delayed(rhs, p.delay_time(), history, drive.series().data().as_slice(), h)?;
    TimeSeries::from_scalars(values, h)
}

/// Read the virtual nodes out of a trajectory: row k, column i holds
/// x(k*T + (i+1)*theta), the state at the end of node i's slot in input
/// interval k. Returns exactly T/theta columns.
pub fn sample_nodes(
    trajectory: &TimeSeries,
    t_period: f64,
    theta: f64,
    n_inputs: usize,
) -> Result<StateMatrix> {
    if trajectory.width() != 1 {
        return Err(Error::ShapeMismatch("trajectory must be width 1".into()));
    }
    if n_inputs == 0 {
        return Err(Error::InvalidParameter("n_inputs must be >= 1".into()));
    }
    if !(theta > 0.0 && t_period > 0.0) {
        return Err(Error::InvalidParameter("period and theta must be positive".into()));
    }
    let dt = trajectory.dt();

    let per_slot_f = theta / dt;
    let per_slot = per_slot_f.round();
    if per_slot < 1.0 || (per_slot_f - per_slot).abs() > 1e-9 * per_slot_f {
        return Err(Error::InvalidParameter(format!(
            "theta {theta} is not an integer multiple of the trajectory dt {dt}"
        )));
    }
    let n_nodes_f = t_period / theta;
    let n_nodes = n_nodes_f.round();
    if n_nodes < 1.0 || (n_nodes_f - n_nodes).abs() > 1e-9 * n_nodes_f {
        return Err(Error::InvalidParameter(format!(
            "theta {theta} does not divide the input period {t_period}"
        )));
    }
    let per_slot = per_slot as usize;
    let n_nodes = n_nodes as usize;

    let needed = n_inputs * n_nodes * per_slot;
    if needed > trajectory.len() {
        return Err(Error::InvalidParameter(format!(
            "trajectory has {} samples but {} inputs x {} nodes need {}",
            trajectory.len(),
            n_inputs,
            n_nodes,
            needed
        )));
    }

    let mut states = DMatrix::zeros(n_inputs, n_nodes);
    for k in 0..n_inputs {
        for i in 0..n_nodes {
            let idx = (k * n_nodes + i + 1) * per_slot - 1;
            states[(k, i)] = trajectory.scalar(idx);
        }
    }
    StateMatrix::new(states)
}

/// Settled-regime reservoir as a discrete map. The feedback of node i at input
/// step k is the virtual node emitted exactly tau = (N + d)*theta earlier on
/// the delay line; states before the first input are zero.
pub fn run_discrete_map(
    p: &DelayParams,
    input: &TimeSeries,
    mask: &Mask,
) -> Result<StateMatrix> {
    p.validate()?;
    if mask.len() != p.n_virtual {
        return Err(Error::ShapeMismatch(format!(
            "mask has {} steps but params expect {} virtual nodes",
            mask.len(),
            p.n_virtual
        )));
    }
    if input.width() != 1 {
        return Err(Error::ShapeMismatch("delay reservoir input must be width 1".into()));
    }

    let n = p.n_virtual;
    let shift = (n + p.desync_shift) as isize;
    let beta = p.feedback_gain;
    let gamma = p.input_gain;
    let phi0 = p.phase_offset;
    let steps = input.len();

    let mut states = DMatrix::zeros(steps, n);
    for k in 0..steps {
        let s = input.scalar(k);
        for i in 0..n {
            let src = (k * n + i) as isize - shift;
            let feedback = if src < 0 {
                0.0
            } else {
                states[((src / n as isize) as usize, (src % n as isize) as usize)]
            };
            let z = (feedback + gamma * mask.amplitudes()[i] * s + phi0).sin();
            states[(k, i)] = beta * z * z;
        }
    }
    StateMatrix::new(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_input(len: usize, seed: u64) -> TimeSeries {
        let mut rng = RandomSource::new(seed);
        TimeSeries::from_scalars((0..len).map(|_| rng.uniform_in(-1.0, 1.0)).collect(), 1.0)
            .unwrap()
    }

    #[test]
    fn binary_mask_codomain() {
        let mut rng = RandomSource::new(1);
        let m = make_mask(4, MaskKind::Binary, &mut rng, 0.5).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.amplitudes().iter().all(|&a| a == 1.0 || a == -1.0));
    }

    #[test]
    fn mask_period_arithmetic() {
        let mut rng = RandomSource::new(2);
        let m = make_mask(400, MaskKind::Uniform, &mut rng, 0.02).unwrap();
        assert!((m.period() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn mask_determinism_and_errors() {
        let draw = || {
            let mut rng = RandomSource::new(3);
            make_mask(16, MaskKind::Uniform, &mut rng, 1.0).unwrap()
        };
        assert_eq!(draw().amplitudes(), draw().amplitudes());
        let mut rng = RandomSource::new(3);
        assert!(make_mask(0, MaskKind::Binary, &mut rng, 1.0).is_err());
        assert!(make_mask(4, MaskKind::Binary, &mut rng, 0.0).is_err());
    }

    #[test]
    fn multiplex_constant_input_repeats_mask() {
        let mask = Mask::new(vec![0.3, -0.7, 1.0], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![1.0, 1.0], 1.0).unwrap();
        let drive = multiplex(&input, &mask, 1.0, 1).unwrap();
        let got: Vec<f64> = (0..drive.len()).map(|n| drive.value(n)).collect();
        assert_eq!(got, vec![0.3, -0.7, 1.0, 0.3, -0.7, 1.0]);
    }

    #[test]
    fn multiplex_zero_input_is_zero() {
        let mask = Mask::new(vec![0.5, -1.0], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let drive = multiplex(&input, &mask, 2.0, 4).unwrap();
        assert!((0..drive.len()).all(|n| drive.value(n) == 0.0));
    }

    #[test]
    fn multiplex_slot_values_match_slotwise_oracle() {
        let mask = Mask::new(vec![0.5, -1.0], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![1.0, -2.0], 1.0).unwrap();
        let gamma = 2.0;
        let drive = multiplex(&input, &mask, gamma, 1).unwrap();
        let got: Vec<f64> = (0..drive.len()).map(|n| drive.value(n)).collect();
        assert_eq!(got, vec![1.0, -2.0, -2.0, 4.0]);

        // Slot-wise oracle over an oversampled drive.
        let os = 5;
        let drive = multiplex(&input, &mask, gamma, os).unwrap();
        for k in 0..input.len() {
            for (i, &m) in mask.amplitudes().iter().enumerate() {
                let expect = gamma * m * input.scalar(k);
                for sub in 0..os {
                    let idx = (k * mask.len() + i) * os + sub;
                    assert_eq!(drive.value(idx), expect, "slot ({k},{i})");
                }
            }
        }
    }

    #[test]
    fn dde_relaxes_exponentially_without_feedback() {
        let p = DelayParams {
            response_time: 1.0,
            feedback_gain: 0.0,
            input_gain: 0.0,
            phase_offset: 0.0,
            n_virtual: 2,
            node_separation: 1.0,
            desync_shift: 0,
        };
        let mask = Mask::new(vec![1.0, 1.0], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![0.0; 3], 1.0).unwrap();
        let drive = multiplex(&input, &mask, 0.0, 200).unwrap();
        let x0 = 0.8;
        let traj = integrate_dde(&p, &drive, x0).unwrap();
        for n in (19..traj.len()).step_by(20) {
            let t = (n + 1) as f64 * traj.dt();
            let exact = x0 * (-t / p.response_time).exp();
            let got = traj.scalar(n);
            assert!(
                (got - exact).abs() <= 1e-4 * exact.abs(),
                "t={t}: {got} vs {exact}"
            );
        }
    }

    // Scalar fixed-point solve, independent of the integrator.
    fn sin2_fixed_point(beta: f64, phi0: f64) -> f64 {
        let mut x = 0.0;
        for _ in 0..200 {
            let s = (x + phi0).sin();
            x = beta * s * s;
        }
        x
    }

    #[test]
    fn dde_converges_to_sin2_fixed_point() {
        let p = DelayParams {
            response_time: 0.05,
            feedback_gain: 0.9,
            input_gain: 0.0,
            phase_offset: std::f64::consts::FRAC_PI_4,
            n_virtual: 5,
            node_separation: 1.0,
            desync_shift: 0,
        };
        let mask = Mask::new(vec![1.0; 5], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![0.0; 12], 1.0).unwrap(); // 12 periods
        let drive = multiplex(&input, &mask, 0.0, 40).unwrap();
        let traj = integrate_dde(&p, &drive, 0.0).unwrap();
        let expect = sin2_fixed_point(0.9, std::f64::consts::FRAC_PI_4);
        let last = traj.scalar(traj.len() - 1);
        assert!((last - expect).abs() < 1e-6, "{last} vs {expect}");
    }

    #[test]
    fn dde_self_convergence_under_step_halving() {
        let n = 10;
        let theta = 1.0;
        let p = DelayParams::transient(n, theta);
        let mut rng = RandomSource::new(5);
        let mask = make_mask(n, MaskKind::Uniform, &mut rng, theta).unwrap();
        let input = uniform_input(20, 6);

        let coarse = {
            let drive = multiplex(&input, &mask, p.input_gain, 200).unwrap();
            integrate_dde(&p, &drive, 0.0).unwrap()
        };
        let fine = {
            let drive = multiplex(&input, &mask, p.input_gain, 400).unwrap();
            integrate_dde(&p, &drive, 0.0).unwrap()
        };
        // Common grid: every coarse point coincides with every second fine one.
        let mut sq = 0.0;
        for i in 0..coarse.len() {
            let d = coarse.scalar(i) - fine.scalar(2 * i + 1);
            sq += d * d;
        }
        let rms = (sq / coarse.len() as f64).sqrt();
        assert!(rms < 1e-5, "rms {rms}");
    }

    #[test]
    fn dde_step_stability_guard() {
        let mut p = DelayParams::transient(4, 1.0);
        p.response_time = 0.01; // eps/2 = 0.005 < dt = 0.1
        let mask = Mask::new(vec![1.0; 4], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![0.0; 2], 1.0).unwrap();
        let drive = multiplex(&input, &mask, 0.5, 10).unwrap();
        let err = integrate_dde(&p, &drive, 0.0).unwrap_err();
        assert!(matches!(err, Error::StepTooCoarse { .. }), "{err}");
    }

    #[test]
    fn integrator_reports_first_divergence_time() {
        // dx/dt = x^2 from x(0) = 2 blows up at t = 0.5.
        let drive = vec![0.0; 1000];
        let err = integrate_delayed(|x, _, _| x * x, 1.0, 2.0, &drive, 0.01).unwrap_err();
        match err {
            Error::Diverged(msg) => assert!(msg.contains("t ="), "{msg}"),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn sample_nodes_column_count_from_fig3_relation() {
        let dt = 0.02; // = theta, one sample per slot
        let n_samples = 3 * 400;
        let traj =
            TimeSeries::from_scalars(vec![1.0; n_samples], dt).unwrap();
        let states = sample_nodes(&traj, 8.0, 0.02, 3).unwrap();
        assert_eq!(states.cols(), 400);
        assert_eq!(states.rows(), 3);
    }

    #[test]
    fn sample_nodes_constant_and_ramp() {
        let theta = 0.5;
        let t_period = 2.0; // 4 nodes
        let os = 4;
        let dt = theta / os as f64;
        let len = 3 * 4 * os;
        let constant = TimeSeries::from_scalars(vec![2.5; len], dt).unwrap();
        let states = sample_nodes(&constant, t_period, theta, 3).unwrap();
        assert!(states.data().iter().all(|&v| v == 2.5));

        // Ramp x(t) = t on the trajectory grid (sample n is x((n+1) dt)).
        let ramp =
            TimeSeries::from_scalars((0..len).map(|n| (n + 1) as f64 * dt).collect(), dt).unwrap();
        let states = sample_nodes(&ramp, t_period, theta, 3).unwrap();
        for k in 0..3 {
            for i in 0..4 {
                let expect = k as f64 * t_period + (i + 1) as f64 * theta;
                assert!((states.data()[(k, i)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_nodes_coverage_shortfall() {
        let traj = TimeSeries::from_scalars(vec![0.0; 10], 1.0).unwrap();
        let err = sample_nodes(&traj, 4.0, 1.0, 3).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn map_without_feedback_is_memoryless() {
        // beta = 0 quenches the sin^2 output entirely: x = beta * sin^2(...).
        let mut p = DelayParams::transient(3, 1.0);
        p.feedback_gain = 0.0;
        let mask = Mask::new(vec![0.4, -0.2, 0.9], 1.0).unwrap();
        let input = uniform_input(5, 8);
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        assert!(states.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn map_zero_input_zero_phase_stays_at_zero() {
        let mut p = DelayParams::transient(4, 1.0);
        p.input_gain = 0.0;
        p.phase_offset = 0.0;
        let mask = Mask::new(vec![1.0; 4], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![3.0; 6], 1.0).unwrap();
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        assert!(states.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn map_matches_hand_unrolled_recurrence() {
        // N = 3, d = 1: node i at step k reads node i-1 of step k-1, and node
        // 0 wraps to node 2 of step k-2 (one full period plus one slot back).
        let p = DelayParams {
            response_time: 0.01,
            feedback_gain: 0.8,
            input_gain: 0.6,
            phase_offset: 0.3,
            n_virtual: 3,
            node_separation: 1.0,
            desync_shift: 1,
        };
        let m = [0.5, -1.0, 0.25];
        let mask = Mask::new(m.to_vec(), 1.0).unwrap();
        let s = [0.7, -0.4];
        let input = TimeSeries::from_scalars(s.to_vec(), 1.0).unwrap();
        let states = run_discrete_map(&p, &input, &mask).unwrap();

        let f = |fb: f64, mi: f64, sk: f64| {
            let z = (fb + 0.6 * mi * sk + 0.3).sin();
            0.8 * z * z
        };
        // k = 0: all sources are before the start, feedback 0.
        let x00 = f(0.0, m[0], s[0]);
        let x01 = f(0.0, m[1], s[0]);
        let x02 = f(0.0, m[2], s[0]);
        // k = 1: node 0 reads slot (1*3+0)-4 = -1 -> still zero history;
        // node 1 reads slot 0 = x00; node 2 reads slot 1 = x01.
        let x10 = f(0.0, m[0], s[1]);
        let x11 = f(x00, m[1], s[1]);
        let x12 = f(x01, m[2], s[1]);

        let expect = [[x00, x01, x02], [x10, x11, x12]];
        for k in 0..2 {
            for i in 0..3 {
                assert!(
                    (states.data()[(k, i)] - expect[k][i]).abs() < 1e-12,
                    "entry ({k},{i})"
                );
            }
        }
    }

    #[test]
    fn map_wrapped_feedback_reaches_two_steps_back() {
        // With d = 1 and 3 steps, node 0 of step 2 must read node 2 of step 0.
        let p = DelayParams {
            response_time: 0.01,
            feedback_gain: 1.0,
            input_gain: 0.0,
            phase_offset: 0.5,
            n_virtual: 3,
            node_separation: 1.0,
            desync_shift: 1,
        };
        let mask = Mask::new(vec![1.0; 3], 1.0).unwrap();
        let input = TimeSeries::from_scalars(vec![0.0; 3], 1.0).unwrap();
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        let f = |fb: f64| (fb + 0.5_f64).sin().powi(2);
        let x02 = f(0.0);
        let expect = f(x02);
        assert!((states.data()[(2, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn constant_mask_synchronized_nodes_are_identical() {
        let mut p = DelayParams::transient(6, 1.0);
        p.desync_shift = 0;
        let mask = Mask::new(vec![0.7; 6], 1.0).unwrap();
        let input = uniform_input(10, 9);
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        for k in 0..states.rows() {
            let first = states.data()[(k, 0)];
            for i in 1..states.cols() {
                assert_eq!(states.data()[(k, i)], first, "row {k}");
            }
        }
    }

    #[test]
    fn map_states_bounded_by_feedback_gain() {
        let p = DelayParams::transient(8, 1.0);
        let mut rng = RandomSource::new(10);
        let mask = make_mask(8, MaskKind::Uniform, &mut rng, 1.0).unwrap();
        let input = uniform_input(50, 11);
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        assert!(states.data().iter().all(|&v| v.abs() <= p.feedback_gain.abs()));
    }

    #[test]
    fn settled_dde_matches_discrete_map() {
        let n = 10;
        let theta = 1.0;
        let p = DelayParams::settled(n, theta);
        let mut rng = RandomSource::new(12);
        let mask = make_mask(n, MaskKind::Uniform, &mut rng, theta).unwrap();
        let input = uniform_input(30, 13);

        let map_states = run_discrete_map(&p, &input, &mask).unwrap();
        let drive = multiplex(&input, &mask, p.input_gain, 200).unwrap();
        let traj = integrate_dde(&p, &drive, 0.0).unwrap();
        let dde_states = sample_nodes(&traj, p.input_period(), theta, input.len()).unwrap();

        let diff = map_states.data() - dde_states.data();
        let rms = (diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64).sqrt();
        assert!(rms < 1e-2, "rms {rms}");
    }
}
