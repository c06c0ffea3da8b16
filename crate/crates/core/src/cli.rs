//! Command-line front end: configuration layering, the four subcommands and
//! their CSV/JSON emitters.
//!
//! Commands are split into pure functions producing the file contents and a
//! thin layer that writes them, so output can be tested without touching disk.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coeffs::{classify_lindblad, kt_from_wc_over_2pikt, sample_coefficients, uniform_grid, PhysicalParams};
use crate::error::{Error, Result};
use crate::gaussian::{
    detect_squeezing_intervals, evolve_trajectory, oscillation_period, propagate, Frame, GaussianState, Quadrature,
};
use crate::wigner::{wigner_gaussian, GridSpec, WignerGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Vacuum,
    Coherent,
    #[default]
    Squeezed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Lab,
    Rotating,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Lab => Frame::Lab,
            FrameArg::Rotating => Frame::Rotating,
        }
    }
}

/// Fully resolved run configuration. Serialised as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub g: f64,
    pub r: f64,
    pub kt_over_wc: f64,
    pub state: StateKind,
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// Squeeze strength σ² = e^{−2s}; the narrow quadrature starts at σ²/2.
    pub sigma2: f64,
    pub phi: f64,
    pub tau_max: f64,
    pub steps: usize,
    pub frame: Frame,
    /// Half-width of a square grid in α units; when absent each grid covers
    /// `grid_sigmas` standard deviations of the evolved state.
    pub grid_half_width: Option<f64>,
    pub grid_sigmas: f64,
    pub nx: usize,
    pub ny: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Relative tolerance of the Δ_Γ quadrature.
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PhysicalParams::reference();
        Self {
            g: p.g,
            r: p.r,
            kt_over_wc: p.kt_over_wc,
            state: StateKind::Squeezed,
            alpha_re: 0.0,
            alpha_im: 0.0,
            sigma2: 0.1,
            phi: 0.0,
            tau_max: 1.0,
            steps: 2001,
            frame: Frame::Rotating,
            grid_half_width: None,
            grid_sigmas: 8.0,
            nx: 201,
            ny: 201,
            out: None,
            format: Format::Csv,
            tol: crate::coeffs::DEFAULT_TOL,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("r", self.r),
            ("kt_over_wc", self.kt_over_wc),
            ("alpha_re", self.alpha_re),
            ("alpha_im", self.alpha_im),
            ("sigma2", self.sigma2),
            ("phi", self.phi),
            ("tau_max", self.tau_max),
            ("grid_sigmas", self.grid_sigmas),
            ("tol", self.tol),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite, got {v}")));
        }
        self.params()?;
        if !(self.tau_max > 0.0) {
            return Err(Error::Config(format!("tau_max must be positive, got {}", self.tau_max)));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!("steps must be at least 2, got {}", self.steps)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.nx == 0 || self.ny == 0 || !(self.grid_sigmas > 0.0) {
            return Err(Error::Config("grid needs nx, ny >= 1 and grid_sigmas > 0".into()));
        }
        if let Some(h) = self.grid_half_width {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!("grid_half_width must be positive, got {h}")));
            }
        }
        self.initial_state()?;
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.g, self.r, self.kt_over_wc)
    }

    pub fn initial_state(&self) -> Result<GaussianState> {
        let alpha0 = Complex64::new(self.alpha_re, self.alpha_im);
        match self.state {
            StateKind::Vacuum => Ok(GaussianState::vacuum()),
            StateKind::Coherent => Ok(GaussianState::coherent(alpha0)),
            StateKind::Squeezed => GaussianState::squeezed_sigma2(alpha0, self.sigma2, self.phi),
        }
    }

    pub fn grid_for(&self, state: &GaussianState) -> Result<GridSpec> {
        match self.grid_half_width {
            Some(h) => GridSpec::square(h, self.nx),
            None => GridSpec::covering(state, self.grid_sigmas, self.nx, self.ny),
        }
        .map(|spec| GridSpec { ny: self.ny, ..spec })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qbm",
    version,
    about = "Non-Markovian damped oscillator: coefficients, moments and Wigner grids"
)]
#[command(args_conflicts_with_subcommands = false, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Δ, γ, Γ and Δ_Γ on [0, tau_max].
    Coeffs,
    /// Occupation, quadrature variances and means along a trajectory.
    Moments,
    /// Wigner grids of the evolved state, one file per time.
    Wigner {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.15, 0.3, 0.45])]
        taus: Vec<f64>,
    },
    /// Sign scan of Δ ± γ.
    Classify,
}

/// Flags shared by all subcommands; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Coupling strength.
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Cutoff over oscillator frequency, ω_c/ω₀.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Temperature as kT/ω_c.
    #[arg(long, global = true, conflicts_with = "wc_over_2pikt")]
    pub kt_over_wc: Option<f64>,
    /// Temperature as ω_c/(2π kT).
    #[arg(long = "wc-over-2pikt", global = true)]
    pub wc_over_2pikt: Option<f64>,
    /// End of the time window, in units of 1/ω_c.
    #[arg(long, global = true)]
    pub tau_max: Option<f64>,
    /// Number of time points, endpoints included.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output file (a directory for `wigner`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Initial state.
    #[arg(long, global = true)]
    pub state: Option<StateKind>,
    /// Initial displacement, real part.
    #[arg(long, global = true)]
    pub alpha_re: Option<f64>,
    /// Initial displacement, imaginary part.
    #[arg(long, global = true)]
    pub alpha_im: Option<f64>,
    /// Squeezing as σ² = e^{−2s}.
    #[arg(long, global = true, conflicts_with = "squeeze")]
    pub sigma2: Option<f64>,
    /// Squeeze parameter s, converted to sigma2 = e^{−2s}.
    #[arg(long, global = true)]
    pub squeeze: Option<f64>,
    /// Squeeze angle; 0 squeezes x.
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    /// Frame for reported moments and grids.
    #[arg(long, global = true)]
    pub frame: Option<FrameArg>,
    /// Square grid half-width in α units.
    #[arg(long, global = true)]
    pub grid_half_width: Option<f64>,
    /// Grid extent in standard deviations when no half-width is given.
    #[arg(long, global = true)]
    pub grid_sigmas: Option<f64>,
    /// Grid cells along x.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Grid cells along y.
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    /// Relative tolerance of the Δ_Γ quadrature.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

impl Overrides {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        apply!(
            g,
            r,
            kt_over_wc,
            tau_max,
            steps,
            format,
            state,
            alpha_re,
            alpha_im,
            sigma2,
            phi,
            nx,
            ny,
            tol,
            grid_sigmas
        );
        if let Some(w) = self.wc_over_2pikt {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!("wc-over-2pikt must be positive, got {w}")));
            }
            cfg.kt_over_wc = kt_from_wc_over_2pikt(w);
        }
        if let Some(s) = self.squeeze {
            cfg.sigma2 = (-2.0 * s).exp();
        }
        if let Some(f) = self.frame {
            cfg.frame = f.into();
        }
        if let Some(h) = self.grid_half_width {
            cfg.grid_half_width = Some(h);
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Shortest round-trip decimal form; negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn csv_line(values: &[f64]) -> String {
    let mut line = values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serialises");
    s.push('\n');
    s
}

fn intervals_json(intervals: &[(f64, f64)]) -> Value {
    Value::Array(intervals.iter().map(|&(a, b)| json!([clean(a), clean(b)])).collect())
}

pub fn coeffs_output(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let samples = sample_coefficients(&p, &uniform_grid(cfg.tau_max, cfg.steps), cfg.tol)?;
    Ok(match cfg.format {
        Format::Csv => {
            let mut out = String::from("tau,delta,gamma,big_gamma,delta_gamma\n");
            for s in &samples {
                out.push_str(&csv_line(&[s.tau, s.delta, s.gamma, s.big_gamma, s.delta_gamma]));
            }
            out
        }
        Format::Json => pretty(&json!({
            "version": VERSION,
            "params": p,
            "rows": samples.iter().map(|s| json!({
                "tau": clean(s.tau),
                "delta": clean(s.delta),
                "gamma": clean(s.gamma),
                "big_gamma": clean(s.big_gamma),
                "delta_gamma": clean(s.delta_gamma),
            })).collect::<Vec<_>>(),
        })),
    })
}

/// Moment table and JSON summary.
pub struct MomentsOutput {
    pub table: String,
    pub summary: String,
}

pub fn moments_output(cfg: &RunConfig) -> Result<MomentsOutput> {
    let p = cfg.params()?;
    let state0 = cfg.initial_state()?;
    let traj = evolve_trajectory(&state0, &p, cfg.tau_max, cfg.steps, cfg.tol)?;
    let states = traj.states_in(cfg.frame);

    let occupation: Vec<(f64, f64)> = traj.times.iter().copied().zip(traj.n_mean.iter().copied()).collect();
    let period = oscillation_period(&occupation);
    let summary = pretty(&json!({
        "version": VERSION,
        "params": p,
        "frame": cfg.frame,
        "initial_state": cfg.state,
        "n_points": traj.len(),
        "squeezing_intervals": {
            "x": intervals_json(&detect_squeezing_intervals(&traj, Quadrature::X, cfg.frame)),
            "y": intervals_json(&detect_squeezing_intervals(&traj, Quadrature::Y, cfg.frame)),
        },
        "n_mean_period": period.map(clean),
    }));

    let table = match cfg.format {
        Format::Csv => {
            let mut out = String::from("tau,n_mean,var_x,var_y,cov_xy,mean_x,mean_y\n");
            for ((tau, n), s) in traj.times.iter().zip(&traj.n_mean).zip(&states) {
                out.push_str(&csv_line(&[
                    *tau,
                    *n,
                    s.var_x(),
                    s.var_y(),
                    s.cov_xy(),
                    s.mean.x,
                    s.mean.y,
                ]));
            }
            out
        }
        Format::Json => pretty(&json!({
            "version": VERSION,
            "rows": traj.times.iter().zip(&traj.n_mean).zip(&states).map(|((tau, n), s)| json!({
                "tau": clean(*tau),
                "n_mean": clean(*n),
                "var_x": clean(s.var_x()),
                "var_y": clean(s.var_y()),
                "cov_xy": clean(s.cov_xy()),
                "mean_x": clean(s.mean.x),
                "mean_y": clean(s.mean.y),
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(MomentsOutput { table, summary })
}

pub fn grid_to_text(grid: &WignerGrid, format: Format) -> String {
    let s = &grid.spec;
    match format {
        Format::Csv => {
            let mut out = format!(
                "# {},{},{},{},{},{}\n",
                fmt_num(s.x_min),
                fmt_num(s.x_max),
                fmt_num(s.y_min),
                fmt_num(s.y_max),
                s.nx,
                s.ny
            );
            for row in grid.rows() {
                out.push_str(&csv_line(row));
            }
            out
        }
        Format::Json => pretty(&json!({
            "x_min": clean(s.x_min),
            "x_max": clean(s.x_max),
            "y_min": clean(s.y_min),
            "y_max": clean(s.y_max),
            "nx": s.nx,
            "ny": s.ny,
            "values": grid.rows().map(|row| row.iter().map(|&v| clean(v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })),
    }
}

pub fn wigner_file_name(tau: f64, format: Format) -> String {
    format!("wigner_tau_{}.{}", fmt_num(tau), format.extension())
}

/// Evolved Wigner grids in the configured frame, one per τ.
pub fn wigner_grids(cfg: &RunConfig, taus: &[f64]) -> Result<Vec<(f64, WignerGrid)>> {
    let p = cfg.params()?;
    let state0 = cfg.initial_state()?;
    taus.iter()
        .map(|&tau| {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::Config(format!("wigner times must be >= 0, got {tau}")));
            }
            let lab = propagate(&state0, &p, tau, cfg.tol)?;
            let state = match cfg.frame {
                Frame::Lab => lab,
                Frame::Rotating => lab.rotated(p.omega0() * tau),
            };
            let spec = cfg.grid_for(&state)?;
            Ok((tau, wigner_gaussian(&state, &spec)?))
        })
        .collect()
}

pub fn classify_output(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let c = classify_lindblad(&p, cfg.tau_max, cfg.steps)?;
    Ok(pretty(&json!({
        "version": VERSION,
        "params": p,
        "tau_max": cfg.tau_max,
        "n_samples": cfg.steps,
        "is_lindblad_type": c.is_lindblad_type,
        "delta_plus_gamma_negative": intervals_json(&c.delta_plus_gamma_negative),
        "delta_minus_gamma_negative": intervals_json(&c.delta_minus_gamma_negative),
    })))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// `moments.csv` → `moments.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    if cli.overrides.dump_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| Error::Config("no subcommand given (coeffs, moments, wigner, classify)".into()))?;
    let out = cfg.out.as_deref();
    match command {
        Command::Coeffs => emit(out, &coeffs_output(&cfg)?),
        Command::Moments => {
            let m = moments_output(&cfg)?;
            emit(out, &m.table)?;
            match out {
                Some(path) => write_file(&summary_path(path), &m.summary),
                None => {
                    eprint!("{}", m.summary);
                    Ok(())
                }
            }
        }
        Command::Wigner { taus } => {
            let dir = out.unwrap_or(Path::new("."));
            fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            for (tau, grid) in wigner_grids(&cfg, taus)? {
                let path = dir.join(wigner_file_name(tau, cfg.format));
                write_file(&path, &grid_to_text(&grid, cfg.format))?;
                log::info!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Classify => emit(out, &classify_output(&cfg)?),
    }
}
