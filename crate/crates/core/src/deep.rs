//! Cascaded (deep) reservoirs and the offline-train / transfer-under-tolerance
//! experiment.
//!
//! Layers are feedforward only: layer i+1 is driven, step for step, by layer
//! i's state through a random coupling matrix (uniform [-1, 1] times the
//! coupling scale). ESN layers advance one discrete step per input sample;
//! delay layers advance one input period T per sample and contribute their N
//! virtual nodes, using the settled-regime map. The readout trains on the
//! column-concatenation of all layer states by default.

use nalgebra::DMatrix;

use crate::delay::{make_mask, run_discrete_map, DelayParams, Mask, MaskKind};
use crate::error::{Error, Result};
use crate::esn::{build_esn, esn_run, EsnParams, EsnReservoir};
use crate::readout::{nmse, predict, train_ridge, RidgeConfig};
use crate::rng::RandomSource;
use crate::series::{StateMatrix, TimeSeries};
use crate::tasks::{chronological_split, task_dataset, TaskSpec};

/// One layer descriptor in a cascade.
#[derive(Debug, Clone)]
pub enum LayerSpec {
    Esn(EsnParams),
    Delay { params: DelayParams, mask_kind: MaskKind },
}

impl LayerSpec {
    fn validate(&self) -> Result<()> {
        match self {
            LayerSpec::Esn(p) => p.validate(),
            LayerSpec::Delay { params, .. } => params.validate(),
        }
    }

    /// State width the layer contributes per step.
    pub fn width(&self) -> usize {
        match self {
            LayerSpec::Esn(p) => p.n_nodes,
            LayerSpec::Delay { params, .. } => params.n_virtual,
        }
    }

    /// Input width the layer consumes per step.
    pub fn input_dim(&self) -> usize {
        match self {
            LayerSpec::Esn(p) => p.input_dim,
            LayerSpec::Delay { .. } => 1,
        }
    }
}

/// Cascade description: ordered layers plus the inter-layer coupling scale.
/// Layer constructions and couplings draw from the sub-streams
/// `layer/<i>` and `coupling/<i>` of the build source.
#[derive(Debug, Clone)]
pub struct CascadeSpec {
    pub layers: Vec<LayerSpec>,
    pub coupling_scale: f64,
}

impl CascadeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Construction("cascade needs at least one layer".into()));
        }
        if !(self.coupling_scale.is_finite() && self.coupling_scale >= 0.0) {
            return Err(Error::Construction(format!(
                "coupling scale must be finite and >= 0, got {}",
                self.coupling_scale
            )));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        Ok(())
    }
}

/// A built cascade layer.
#[derive(Debug, Clone)]
pub enum Layer {
    Esn(EsnReservoir),
    Delay { params: DelayParams, mask: Mask },
}

impl Layer {
    pub fn width(&self) -> usize {
        match self {
            Layer::Esn(r) => r.n_nodes(),
            Layer::Delay { params, .. } => params.n_virtual,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Esn(r) => r.input_dim(),
            Layer::Delay { .. } => 1,
        }
    }
}

/// A built cascade: layers plus one coupling matrix per layer boundary,
/// shaped input_dim(i+1) x width(i).
#[derive(Debug, Clone)]
pub struct DeepReservoir {
    layers: Vec<Layer>,
    couplings: Vec<DMatrix<f64>>,
}

impl DeepReservoir {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn couplings(&self) -> &[DMatrix<f64>] {
        &self.couplings
    }

    /// Sum of layer widths, the width of the concatenated state matrix.
    pub fn total_width(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }
}

/// Build every layer and the random inter-layer couplings.
pub fn build_cascade(spec: &CascadeSpec, rng: &RandomSource) -> Result<DeepReservoir> {
    spec.validate()?;

    let mut layers = Vec::with_capacity(spec.layers.len());
    for (i, layer) in spec.layers.iter().enumerate() {
        let mut sub = rng.substream(&format!("layer/{i}"));
        layers.push(match layer {
            LayerSpec::Esn(p) => Layer::Esn(build_esn(p, &mut sub)?),
            LayerSpec::Delay { params, mask_kind } => Layer::Delay {
                params: *params,
                mask: make_mask(params.n_virtual, *mask_kind, &mut sub, params.node_separation)?,
            },
        });
    }

    let mut couplings = Vec::with_capacity(spec.layers.len().saturating_sub(1));
    for i in 0..spec.layers.len().saturating_sub(1) {
        let rows = spec.layers[i + 1].input_dim();
        let cols = spec.layers[i].width();
        let mut sub = rng.substream(&format!("coupling/{i}"));
        let values: Vec<f64> = (0..rows * cols)
            .map(|_| sub.uniform_in(-1.0, 1.0) * spec.coupling_scale)
            .collect();
        couplings.push(DMatrix::from_row_slice(rows, cols, &values));
    }

    Ok(DeepReservoir { layers, couplings })
}

fn run_layer(layer: &Layer, input: &TimeSeries) -> Result<StateMatrix> {
    match layer {
        Layer::Esn(r) => esn_run(r, input, &r.zero_state(), 0),
        Layer::Delay { params, mask } => run_discrete_map(params, input, mask),
    }
}

/// Drive the cascade through an input series. Returns the per-layer state
/// matrices and their column-concatenation, each with the first `washout`
/// rows discarded.
pub fn run_cascade(
    d: &DeepReservoir,
    input: &TimeSeries,
    washout: usize,
) -> Result<(Vec<StateMatrix>, StateMatrix)> {
    if washout >= input.len() {
        return Err(Error::InvalidParameter(format!(
            "washout {washout} must be smaller than input length {}",
            input.len()
        )));
    }

    let mut per_layer = Vec::with_capacity(d.layers.len());
    let mut current = input.clone();
    for (i, layer) in d.layers.iter().enumerate() {
        let states = run_layer(layer, &current)?;
        if i + 1 < d.layers.len() {
            let driven = states.data() * d.couplings[i].transpose();
            current = TimeSeries::new(driven, input.dt())?;
        }
        per_layer.push(states);
    }

    let trimmed: Vec<StateMatrix> = per_layer
        .iter()
        .map(|s| s.slice_rows(washout, s.rows()))
        .collect::<Result<_>>()?;
    let concat = StateMatrix::hconcat(&trimmed)?;
    Ok((trimmed, concat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// w -> w * (1 + sigma * g), g standard normal: relative tolerance.
    Multiplicative,
    /// w -> w + sigma * g: absolute tolerance.
    Additive,
}

/// Manufacturing-tolerance model applied to the inter-layer couplings.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn multiplicative(amplitude: f64) -> Self {
        Self { amplitude, mode: PerturbationMode::Multiplicative }
    }
}

/// Return a perturbed copy of the cascade; layers are untouched and the
/// original is left unmodified. One normal draw per coupling entry, coupling
/// by coupling in row-major order.
pub fn perturb_couplings(
    d: &DeepReservoir,
    p: &PerturbationSpec,
    rng: &mut RandomSource,
) -> Result<DeepReservoir> {
    if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation amplitude must be finite and >= 0, got {}",
            p.amplitude
        )));
    }
    let mut out = d.clone();
    for c in &mut out.couplings {
        for r in 0..c.nrows() {
            for j in 0..c.ncols() {
                let g = rng.standard_normal();
                let w = c[(r, j)];
                c[(r, j)] = match p.mode {
                    PerturbationMode::Multiplicative => w * (1.0 + p.amplitude * g),
                    PerturbationMode::Additive => w + p.amplitude * g,
                };
            }
        }
    }
    Ok(out)
}

/// One row of the tolerance experiment table.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceRow {
    pub sigma: f64,
    pub median_nmse: f64,
    pub n_seeds: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Train the readout on the unperturbed cascade, then evaluate that fixed
/// readout on perturbed copies: per sigma, `seeds` independent perturbation
/// draws, reporting the median test NMSE. Sub-streams used: `cascade/build`
/// for the cascade, `task/data` (via the task) for the data and
/// `perturb/<sigma index>/<seed index>` per cell.
pub fn tolerance_experiment(
    spec: &CascadeSpec,
    task: &TaskSpec,
    sigmas: &[f64],
    seeds: usize,
    ridge: &RidgeConfig,
    washout: usize,
    rng: &RandomSource,
) -> Result<Vec<ToleranceRow>> {
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter("sigma list must not be empty".into()));
    }
    if seeds == 0 {
        return Err(Error::InvalidParameter("seeds must be >= 1".into()));
    }

    let cascade = build_cascade(spec, &rng.substream("cascade/build"))?;
    let (input, target) = task_dataset(task, rng)?;
    let (_, states) = run_cascade(&cascade, &input, washout)?;
    let offset = input.len() - states.rows();
    let aligned = target.slice_rows(offset, target.len())?;
    let (train, test) = chronological_split(states.rows(), task.train_frac, task.test_frac)?;

    let w = train_ridge(
        &states.slice_rows(train.start, train.end)?,
        &aligned.slice_rows(train.start, train.end)?,
        ridge,
    )?;
    let test_target = aligned.slice_rows(test.start, test.end)?;

    let mut table = Vec::with_capacity(sigmas.len());
    for (si, &sigma) in sigmas.iter().enumerate() {
        let perturbation = PerturbationSpec::multiplicative(sigma);
        let mut errors = Vec::with_capacity(seeds);
        for seed_idx in 0..seeds {
            let mut cell_rng = rng.substream(&format!("perturb/{si}/{seed_idx}"));
            let perturbed = perturb_couplings(&cascade, &perturbation, &mut cell_rng)?;
            let (_, p_states) = run_cascade(&perturbed, &input, washout)?;
            let p_test = p_states.slice_rows(test.start, test.end)?;
            errors.push(nmse(&predict(&w, &p_test)?, &test_target)?);
        }
        table.push(ToleranceRow {
            sigma,
            median_nmse: median(&mut errors),
            n_seeds: seeds,
        });
    }
    Ok(table)
}
