//! Experiment execution and artifact writing.
//!
//! Every run writes its metrics CSV next to a `manifest.toml` holding the
//! fully resolved configuration, so any artifact can be reproduced by
//! re-running the subcommand on the manifest. Files are written to a
//! temporary name and renamed into place; seeds run in parallel but a single
//! writer emits each file.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use photonrc::deep::{build_cascade, run_cascade, tolerance_experiment, CascadeSpec, LayerSpec};
use photonrc::delay::{integrate_dde, make_mask, multiplex, run_discrete_map, sample_nodes};
use photonrc::esn::{build_esn, esn_run};
use photonrc::io::{
    write_metrics_csv, write_states_csv, write_tolerance_csv, write_trajectory_csv,
};
use photonrc::readout::RidgeConfig;
use photonrc::tasks::{evaluate, task_dataset, MetricsRecord, ReservoirInfo, TaskKind};
use photonrc::{Error, RandomSource, StateMatrix, TimeSeries};

use crate::config::{manifest_toml, Config};
use crate::CliError;

/// What a subcommand asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Esn,
    Delay,
    Cascade,
    MemoryCapacity,
    Narma,
    MackeyGlass,
    Tolerance,
    DumpStates,
}

impl Experiment {
    /// Config keys the subcommand pins down; a mismatch is a config error.
    fn check(&self, cfg: &Config) -> Result<(), CliError> {
        let expect = |key: &str, want: &str, got: &str| -> Result<(), CliError> {
            if got == want {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "subcommand requires {key} = \"{want}\" but config says \"{got}\""
                )))
            }
        };
        match self {
            Experiment::Esn => expect("reservoir", "esn", &cfg.reservoir),
            Experiment::Delay => expect("reservoir", "delay", &cfg.reservoir),
            Experiment::Cascade => expect("reservoir", "cascade", &cfg.reservoir),
            Experiment::MemoryCapacity => expect("task", "memory_capacity", &cfg.task),
            Experiment::Narma => expect("task", "narma10", &cfg.task),
            Experiment::MackeyGlass => expect("task", "mackey_glass", &cfg.task),
            Experiment::Tolerance => {
                expect("reservoir", "cascade", &cfg.reservoir)?;
                if cfg.task == "memory_capacity" {
                    return Err(CliError::Config(
                        "tolerance needs a supervised task (narma10 or mackey_glass)".into(),
                    ));
                }
                Ok(())
            }
            Experiment::DumpStates => Ok(()),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Other(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Other(format!("renaming into {}: {e}", path.display())))
}

fn write_manifest(cfg: &Config, out_dir: &Path) -> Result<(), CliError> {
    write_atomic(&out_dir.join("manifest.toml"), manifest_toml(cfg)?.as_bytes())
}

fn cascade_spec(cfg: &Config) -> Result<CascadeSpec, CliError> {
    let mut layers = Vec::with_capacity(cfg.cascade_nodes.len());
    let mut input_dim = 1usize;
    for &n in &cfg.cascade_nodes {
        layers.push(LayerSpec::Esn(cfg.esn_params(n, input_dim)?));
        input_dim = n;
    }
    Ok(CascadeSpec { layers, coupling_scale: cfg.cascade_coupling_scale })
}

fn reservoir_width(cfg: &Config) -> usize {
    match cfg.reservoir.as_str() {
        "esn" => cfg.esn_nodes,
        "delay" => cfg.delay_nodes,
        _ => cfg.cascade_nodes.iter().sum(),
    }
}

type Runner = Box<dyn FnMut(&TimeSeries) -> photonrc::Result<StateMatrix>>;

/// Reservoir closure for one seed. Stream labels: `reservoir/build` (ESN
/// weights), `delay/mask`, `cascade/build`.
fn build_runner(cfg: &Config, seed: u64) -> Result<Runner, CliError> {
    let washout = cfg.washout;
    match cfg.reservoir.as_str() {
        "esn" => {
            let params = cfg.esn_params(cfg.esn_nodes, 1)?;
            Ok(Box::new(move |input: &TimeSeries| {
                let mut rng = RandomSource::new(seed).substream("reservoir/build");
                let r = build_esn(&params, &mut rng)?;
                esn_run(&r, input, &r.zero_state(), washout)
            }))
        }
        "delay" => {
            let params = cfg.delay_params();
            let kind = cfg.mask_kind()?;
            let oversample = cfg.delay_oversample;
            let use_map = cfg.delay_regime == "map";
            Ok(Box::new(move |input: &TimeSeries| {
                let mut mask_rng = RandomSource::new(seed).substream("delay/mask");
                let mask = make_mask(params.n_virtual, kind, &mut mask_rng, params.node_separation)?;
                let states = if use_map {
                    run_discrete_map(&params, input, &mask)?
                } else {
                    let drive = multiplex(input, &mask, params.input_gain, oversample)?;
                    let traj = integrate_dde(&params, &drive, 0.0)?;
                    sample_nodes(&traj, params.input_period(), params.node_separation, input.len())?
                };
                if washout >= states.rows() {
                    return Err(Error::InvalidParameter(format!(
                        "washout {washout} leaves no rows of {}",
                        states.rows()
                    )));
                }
                states.slice_rows(washout, states.rows())
            }))
        }
        "cascade" => {
            let spec = cascade_spec(cfg)?;
            Ok(Box::new(move |input: &TimeSeries| {
                let cascade = build_cascade(&spec, &RandomSource::new(seed).substream("cascade/build"))?;
                Ok(run_cascade(&cascade, input, washout)?.1)
            }))
        }
        other => Err(CliError::Config(format!("unknown reservoir '{other}'"))),
    }
}

fn run_metrics(cfg: &Config, out_dir: &Path) -> Result<(), CliError> {
    let task = cfg.task_spec()?;
    let ridge = RidgeConfig { lambda: cfg.ridge_lambda, fit_bias: cfg.fit_bias };
    let info = ReservoirInfo {
        label: cfg.reservoir.clone(),
        n_nodes: reservoir_width(cfg),
    };

    let records: photonrc::Result<Vec<MetricsRecord>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let runner = build_runner(cfg, seed).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            evaluate(&task, runner, &info, &ridge, seed)
        })
        .collect();
    let records = records?;

    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &records)?;
    write_atomic(&out_dir.join("metrics.csv"), &buf)?;
    write_manifest(cfg, out_dir)?;

    for r in &records {
        match (r.test_nmse, r.mc_total) {
            (Some(nmse), _) => println!(
                "seed {}: train_nmse {:.6} test_nmse {:.6}",
                r.seed,
                r.train_nmse.unwrap_or(f64::NAN),
                nmse
            ),
            (None, Some(mc)) => println!("seed {}: mc_total {:.4}", r.seed, mc),
            _ => {}
        }
    }
    Ok(())
}

fn run_tolerance(cfg: &Config, out_dir: &Path) -> Result<(), CliError> {
    let spec = cascade_spec(cfg)?;
    let task = cfg.task_spec()?;
    let ridge = RidgeConfig { lambda: cfg.ridge_lambda, fit_bias: cfg.fit_bias };
    let rng = RandomSource::new(cfg.seeds[0]);
    let table = tolerance_experiment(
        &spec,
        &task,
        &cfg.tolerance_sigmas,
        cfg.tolerance_seeds,
        &ridge,
        cfg.washout,
        &rng,
    )?;

    let mut buf = Vec::new();
    write_tolerance_csv(&mut buf, &table)?;
    write_atomic(&out_dir.join("tolerance.csv"), &buf)?;
    write_manifest(cfg, out_dir)?;

    for row in &table {
        println!(
            "sigma {:.3}: median_nmse {:.6} over {} seeds",
            row.sigma, row.median_nmse, row.n_seeds
        );
    }
    Ok(())
}

/// The input series the configured task would feed the reservoir.
fn task_input(cfg: &Config, seed: u64) -> Result<TimeSeries, CliError> {
    let task = cfg.task_spec()?;
    let rng = RandomSource::new(seed);
    match task.kind {
        TaskKind::MemoryCapacity { .. } => {
            if cfg.length == 0 {
                return Err(CliError::Config("length must be >= 1".into()));
            }
            let mut draw = rng.substream("mc/input");
            let values = (0..cfg.length).map(|_| draw.uniform_in(-1.0, 1.0)).collect();
            Ok(TimeSeries::from_scalars(values, 1.0)?)
        }
        _ => Ok(task_dataset(&task, &rng)?.0),
    }
}

fn run_dump(cfg: &Config, out_dir: &Path) -> Result<(), CliError> {
    let seed = cfg.seeds[0];
    let input = task_input(cfg, seed)?;

    if cfg.dump_kind == "trajectory" {
        if cfg.reservoir != "delay" || cfg.delay_regime != "dde" {
            return Err(CliError::Config(
                "dump_kind = \"trajectory\" needs reservoir = \"delay\" and delay_regime = \"dde\""
                    .into(),
            ));
        }
        let params = cfg.delay_params();
        let mut mask_rng = RandomSource::new(seed).substream("delay/mask");
        let mask = make_mask(
            params.n_virtual,
            cfg.mask_kind()?,
            &mut mask_rng,
            params.node_separation,
        )?;
        let drive = multiplex(&input, &mask, params.input_gain, cfg.delay_oversample)?;
        let traj = integrate_dde(&params, &drive, 0.0)?;
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj)?;
        write_atomic(&out_dir.join("trajectory.csv"), &buf)?;
        write_manifest(cfg, out_dir)?;
        println!("wrote {} trajectory samples", traj.len());
        return Ok(());
    }

    let mut runner = build_runner(cfg, seed)?;
    let states = runner(&input)?;
    let mut buf = Vec::new();
    write_states_csv(&mut buf, &states)?;
    write_atomic(&out_dir.join("states.csv"), &buf)?;
    write_manifest(cfg, out_dir)?;
    println!("wrote {} x {} state matrix", states.rows(), states.cols());
    Ok(())
}

/// Run one experiment; artifacts land in `out_dir`.
pub fn execute(exp: Experiment, cfg: &Config, out_dir: &Path) -> Result<(), CliError> {
    exp.check(cfg)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Other(format!("creating {}: {e}", out_dir.display())))?;
    match exp {
        Experiment::Tolerance => run_tolerance(cfg, out_dir),
        Experiment::DumpStates => run_dump(cfg, out_dir),
        _ => run_metrics(cfg, out_dir),
    }
}
