use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hwlab::dynamics::{evolve, Equation, EvolveOptions, ModelParams, SplitOptions};
use hwlab::experiments::{
    run_critical_decoherence, run_decoherence, run_lemma1, run_norm_inflation, CriticalConfig,
    DecoherenceConfig, ExperimentReport, InflationConfig, Lemma1Config, ProfileSpec, Shape,
};
use hwlab::groundstate::{petviashvili, PetviashviliOptions};
use hwlab::spectral::sobolev_norm;
use hwlab::{make_grid, Field, SobolevIndex};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::fieldio::read_field;
use crate::store::RunStore;

#[derive(Debug, Parser)]
#[command(name = "hwlab", version, about = "Half-wave Schrodinger numerical laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the H^{s1,s2} norm of a stored field.
    Norms {
        field: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        s1: f64,
        #[arg(long, allow_negative_numbers = true)]
        s2: f64,
        #[arg(long)]
        homogeneous: bool,
    },
    /// Evolve an initial profile and store the checkpoints.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    Lemma1 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Norm inflation sweep.
    Inflate {
        #[arg(long)]
        config: PathBuf,
    },
    Decohere {
        #[arg(long)]
        config: PathBuf,
    },
    /// Standing-wave decoherence on the critical line.
    CriticalDecohere {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve for the ground state Q_beta and store it.
    Groundstate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 20.0)]
        lx: f64,
        #[arg(long, default_value_t = 20.0)]
        ly: f64,
        #[arg(long, default_value_t = 128)]
        nx: usize,
        #[arg(long, default_value_t = 128)]
        ny: usize,
    },
}

/// Outcome of a subcommand: whether every verdict passed.
pub type Passed = bool;

pub fn run(cli: Cli, store: &RunStore) -> Result<Passed> {
    match cli.command {
        Command::Norms {
            field,
            s1,
            s2,
            homogeneous,
        } => {
            let f = read_field(&field)?;
            let idx = if homogeneous {
                SobolevIndex::homogeneous(s1, s2)
            } else {
                SobolevIndex::inhomogeneous(s1, s2)
            };
            println!("{}", sobolev_norm(&f, idx)?);
            Ok(true)
        }
        Command::Simulate { config } => simulate(&config, store),
        Command::Lemma1 { config } => {
            let cfg: Lemma1Config = load_config(&config)?;
            let w = load_optional(&config, cfg.w_file.as_deref())?;
            persist(store, run_lemma1(&cfg, w.as_ref())?)
        }
        Command::Inflate { config } => {
            let cfg: InflationConfig = load_config(&config)?;
            let w = load_optional(&config, cfg.w_file.as_deref())?;
            persist(store, run_norm_inflation(&cfg, w.as_ref())?)
        }
        Command::Decohere { config } => {
            let cfg: DecoherenceConfig = load_config(&config)?;
            let w = load_optional(&config, cfg.w_file.as_deref())?;
            persist(store, run_decoherence(&cfg, w.as_ref())?)
        }
        Command::CriticalDecohere { config } => {
            let cfg: CriticalConfig = load_config(&config)?;
            let q1 = load_optional(&config, cfg.q1_file.as_deref())?;
            persist(store, run_critical_decoherence(&cfg, q1.as_ref())?)
        }
        Command::Groundstate {
            p,
            beta,
            tol,
            max_iter,
            lx,
            ly,
            nx,
            ny,
        } => {
            let grid = make_grid(lx, ly, nx, ny)?;
            let r = petviashvili(p, beta, grid, &PetviashviliOptions { tol, max_iter }, None)?;
            let mut run = store.create_run("groundstate")?;
            run.write_field("profile", &r.profile)?;
            let summary = json!({
                "p": p,
                "beta": beta,
                "tol": tol,
                "max_iter": max_iter,
                "lx": lx, "ly": ly, "nx": nx, "ny": ny,
                "residual": r.residual,
                "iterations": r.iterations,
                "stabilizer": r.stabilizer,
            });
            run.write_json("summary", &summary)?;
            let dir = run.finish()?;
            println!(
                "converged in {} iterations, residual {:.3e}, stabilizer {:.12}",
                r.iterations, r.residual, r.stabilizer
            );
            println!("stored {}", dir.display());
            Ok(true)
        }
    }
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
}

fn load_optional(config: &Path, file: Option<&str>) -> Result<Option<Field>> {
    let Some(file) = file else { return Ok(None) };
    let p = Path::new(file);
    let p = if p.is_relative() {
        config.parent().unwrap_or(Path::new(".")).join(p)
    } else {
        p.to_path_buf()
    };
    read_field(&p).map(Some)
}

fn persist(store: &RunStore, report: ExperimentReport) -> Result<Passed> {
    report.validate()?;
    let mut run = store.create_run(&report.experiment_id)?;
    run.write_report(&report)?;
    let dir = run.finish()?;
    for v in &report.verdicts {
        println!(
            "{} {}: measured {:.6e}, threshold {} = {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.measured,
            v.threshold_key,
            v.threshold
        );
    }
    for (name, e) in &report.fitted_exponents {
        println!("fit {name} = {e:.4}");
    }
    println!("stored {}", dir.display());
    Ok(report.passed())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub p: f64,
    pub mu: f64,
    pub nu: f64,
    pub a: f64,
    pub lambda: f64,
    pub v: f64,
    pub k: usize,
    pub equation: Equation,
    pub t_final: f64,
    pub dt: f64,
    pub checkpoints: Vec<f64>,
    pub dealias: bool,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub w_shape: Shape,
    pub w_amplitude: f64,
    pub w_width: f64,
    pub w_l2: Option<f64>,
    pub w_file: Option<String>,
    pub resolution_tol: f64,
    pub mass_tol: f64,
    pub energy_tol: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let m = ModelParams::default();
        let e = EvolveOptions::default();
        Self {
            p: m.p,
            mu: m.mu,
            nu: m.nu,
            a: m.a,
            lambda: m.lambda,
            v: m.v,
            k: m.k,
            equation: Equation::SmallDispersion,
            t_final: 1.0,
            dt: 0.01,
            checkpoints: Vec::new(),
            dealias: true,
            lx: 10.0,
            ly: 10.0,
            nx: 128,
            ny: 128,
            w_shape: Shape::Gaussian,
            w_amplitude: 1.0,
            w_width: 1.0,
            w_l2: None,
            w_file: None,
            resolution_tol: e.resolution_tol,
            mass_tol: e.mass_tol,
            energy_tol: e.energy_tol,
        }
    }
}

fn simulate(config: &Path, store: &RunStore) -> Result<Passed> {
    let cfg: SimulateConfig = load_config(config)?;
    let w = match load_optional(config, cfg.w_file.as_deref())? {
        Some(w) => w,
        None => ProfileSpec {
            shape: cfg.w_shape,
            amplitude: cfg.w_amplitude,
            width: cfg.w_width,
            l2: cfg.w_l2,
        }
        .build(make_grid(cfg.lx, cfg.ly, cfg.nx, cfg.ny)?)?,
    };
    let params = ModelParams {
        p: cfg.p,
        mu: cfg.mu,
        nu: cfg.nu,
        a: cfg.a,
        lambda: cfg.lambda,
        v: cfg.v,
        k: cfg.k,
    };
    let opts = EvolveOptions {
        equation: cfg.equation,
        split: SplitOptions {
            dealias: cfg.dealias,
            ..SplitOptions::default()
        },
        checkpoints: cfg.checkpoints.clone(),
        resolution_tol: cfg.resolution_tol,
        mass_tol: cfg.mass_tol,
        energy_tol: cfg.energy_tol,
    };
    let traj = evolve(&w.scale_re(cfg.a), cfg.t_final, cfg.dt, &params, &opts)?;

    let mut run = store.create_run("simulate")?;
    run.write_json("config", &cfg)?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        run.write_field(&format!("state_t{t}"), state)?;
    }
    let log = &traj.conservation_log;
    run.write_series("mass", &log.iter().map(|r| (r.time, r.mass)).collect::<Vec<_>>())?;
    run.write_series("energy", &log.iter().map(|r| (r.time, r.energy)).collect::<Vec<_>>())?;
    run.write_json(
        "summary",
        &json!({
            "times": traj.times,
            "mass_drift": traj.mass_drift(),
            "energy_drift": traj.energy_drift(),
        }),
    )?;
    let dir = run.finish()?;
    println!(
        "evolved to t = {}: mass drift {:.3e}, energy drift {:.3e}",
        cfg.t_final,
        traj.mass_drift(),
        traj.energy_drift()
    );
    println!("stored {}", dir.display());
    Ok(true)
}
