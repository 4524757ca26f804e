use std::path::PathBuf;

use clap::Args;
use returnlaw::model::{
    bose_density, model_density, model_density_tau, partition_sum, sample_bset_uniform, z_geometric_auto,
    z_geometric_closed, z_integral_bose, z_uniform_closed, GeometricTerms, GridSpacing, ModelError, ModelParams,
    ScalingLaw, TabulatedSampler, DEFAULT_GRID_CELLS,
};
use serde::{Deserialize, Serialize};

use crate::config::{is_false, Grid, Span};
use crate::error::{from_model, CliError, CliResult};
use crate::table::{self, Column, OutputFormat, Table};

/// Parameters shared by `simulate` and `sample`; `C`, `alpha` and `tau`
/// select the scaling-law density.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    /// Power n in X = (beta |Y - y|)^n [default: 4].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Location y of the mode [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Inverse spread beta [default: 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Lower multiplier bound [default: 0].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_min: Option<f64>,
    /// Upper multiplier bound [default: 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_max: Option<f64>,
    /// Scaling-law constant C.
    #[arg(long = "c")]
    #[serde(rename = "C", alias = "c", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Sampling period in seconds for the scaling law.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl ModelArgs {
    pub fn n(&self) -> f64 {
        self.n.unwrap_or(4.0)
    }

    pub fn y(&self) -> f64 {
        self.y.unwrap_or(0.0)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.b_min.unwrap_or(0.0), self.b_max.unwrap_or(1.0))
    }

    pub fn scaling(&self) -> Option<ScalingLaw> {
        match (self.c, self.alpha, self.tau) {
            (Some(c), Some(alpha), Some(tau)) => Some(ScalingLaw { c, alpha, tau }),
            _ => None,
        }
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        let (b_min, b_max) = self.bounds();
        ModelParams::new(self.n(), self.y(), self.beta(), b_min, b_max).map_err(from_model)
    }

    pub fn scaling_params(&self) -> CliResult<ModelParams> {
        let law = self
            .scaling()
            .ok_or_else(|| CliError::input("config", "the scaling-law form needs --c, --alpha and --tau"))?;
        ModelParams::with_scaling(self.n(), self.beta(), law).map_err(from_model)
    }

    /// `X = (beta |Y - y|)^n` for any nonzero `n`.
    pub fn x_of(&self, y: f64) -> f64 {
        (self.beta() * (y - self.y()).abs()).powf(self.n())
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// finite-sum, uniform, geometric, bose, integral, density or scaling.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    /// Grid of Y as lo:hi:steps.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<Grid>,
    /// Geometric spacing of the grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub log: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Number of multipliers J [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<u64>,
    /// Use infinitely many linear multipliers (geometric form).
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub infinite: bool,
    /// Spacing B of linear multipliers B_j = j B [default: 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_step: Option<f64>,
    /// Seed of the random multipliers [default: 0].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Evaluates the chosen form over the grid. Points outside the form's
/// domain are left out; their number is the second element.
pub fn simulate_table(args: &SimulateArgs) -> CliResult<(Table, usize)> {
    let form = args.form.as_deref().unwrap_or("uniform");
    let grid = args
        .y_grid
        .ok_or_else(|| CliError::input("config", "simulate needs --y-grid lo:hi:steps"))?;
    let ys = grid.points(args.log).map_err(|e| CliError::input("config", e))?;
    let m = &args.model;
    if !(m.n().is_finite() && m.n() != 0.0) {
        return Err(CliError::input("config", format!("n must be finite and nonzero, got {}", m.n())));
    }
    let (b_min, b_max) = m.bounds();
    let terms = args.terms.unwrap_or(1000);
    let step = args.b_step.unwrap_or(1.0);

    let eval: Box<dyn Fn(f64) -> Result<f64, ModelError>> = match form {
        "finite-sum" => {
            let count = usize::try_from(terms).map_err(|_| CliError::input("config", "too many terms"))?;
            let bset = sample_bset_uniform(count, b_min, b_max, args.seed.unwrap_or(0)).map_err(from_model)?;
            let scale = (b_max - b_min) / count as f64;
            Box::new(move |y| partition_sum(&bset, m.x_of(y)).map(|z| z * scale))
        }
        "uniform" => {
            z_uniform_closed(b_min, b_max, 1.0).map_err(from_model)?;
            Box::new(move |y| z_uniform_closed(b_min, b_max, m.x_of(y)))
        }
        "geometric" if args.infinite => Box::new(move |y| z_geometric_closed(step, m.x_of(y), GeometricTerms::Infinite)),
        "geometric" => Box::new(move |y| z_geometric_auto(step, m.x_of(y), terms)),
        "integral" => Box::new(move |y| z_integral_bose(b_min, b_max, m.x_of(y))),
        "bose" => {
            let (beta, y0) = (m.beta(), m.y());
            Box::new(move |y| bose_density(y, step, beta, y0))
        }
        "density" => {
            let p = m.params()?;
            Box::new(move |y| Ok(model_density(y, &p)))
        }
        "scaling" => {
            let p = m.scaling_params()?;
            Box::new(move |y| model_density_tau(y, &p))
        }
        other => return Err(CliError::input("config", format!("unknown form `{other}`"))),
    };

    let mut y_out = Vec::with_capacity(ys.len());
    let mut z_out = Vec::with_capacity(ys.len());
    let mut skipped = 0;
    for y in ys {
        match eval(y) {
            Ok(z) => {
                y_out.push(y);
                z_out.push(z);
            }
            Err(ModelError::InvalidParameter(msg)) => return Err(CliError::input("model", msg)),
            Err(_) => skipped += 1,
        }
    }
    let t = Table::new(vec!["y", "z"], vec![Column::Real(y_out), Column::Real(z_out)])
        .with_meta("form", form)
        .with_meta("y_grid", grid)
        .with_meta("log", args.log)
        .with_meta("model", m)
        .with_meta("terms", terms)
        .with_meta("skipped", skipped);
    Ok((t, skipped))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let (t, skipped) = simulate_table(args)?;
    if skipped > 0 {
        eprintln!("simulate: {skipped} grid points outside the domain were left out");
    }
    table::emit(&t, args.output.as_deref(), args.format.unwrap_or_default(), "model")?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Number of draws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Support lo:hi of the draws [default: y +- 50/beta].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Span>,
    /// Cells of the tabulated CDF [default: 2^18].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Draws from the scaling-law density when `C`, `alpha` and `tau` are
/// given, and from the plain model density otherwise.
pub fn sample_values(args: &SampleArgs) -> CliResult<Vec<f64>> {
    let m = &args.model;
    let count = args
        .count
        .ok_or_else(|| CliError::input("config", "sample needs --count"))?;
    let support = args.support.unwrap_or(Span {
        lo: m.y() - 50.0 / m.beta(),
        hi: m.y() + 50.0 / m.beta(),
    });
    let cells = args.cells.unwrap_or(DEFAULT_GRID_CELLS);
    let sampler = if m.scaling().is_some() {
        let p = m.scaling_params()?;
        TabulatedSampler::new(
            |y| model_density_tau(y, &p).unwrap_or(f64::NAN),
            support.lo,
            support.hi,
            cells,
            GridSpacing::Linear,
        )
    } else {
        let p = m.params()?;
        TabulatedSampler::new(|y| model_density(y, &p), support.lo, support.hi, cells, GridSpacing::Linear)
    }
    .map_err(from_model)?;
    Ok(sampler.sample(count, args.seed.unwrap_or(0)))
}

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    let values = sample_values(args)?;
    let t = Table::new(vec!["value"], vec![Column::Real(values)])
        .with_meta("model", &args.model)
        .with_meta("seed", args.seed.unwrap_or(0))
        .with_meta("support", args.support);
    table::emit(&t, args.output.as_deref(), args.format.unwrap_or_default(), "model")?;
    Ok(())
}
