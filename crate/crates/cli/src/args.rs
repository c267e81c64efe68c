use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "mdisp",
    version,
    about = "Dissipative boundary conditions for Maxwell-type operators"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random draw in the run.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Override a named tolerance, e.g. `--tol margin=1e-9`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Linear relations in a pivot space.
    #[command(subcommand)]
    Relation(RelationCmd),
    /// Spectral model surfaces and their Hodge bases.
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Impedance boundary operators.
    #[command(subcommand)]
    Impedance(ImpedanceCmd),
    /// One-dimensional Maxwell testbed.
    #[command(subcommand)]
    Maxwell1d(MaxwellCmd),
    /// Acceptance suites.
    Suite(SuiteArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationCmd {
    /// Classify a relation read from JSON.
    Check(RelationCheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RelationCheckArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// Random graph vectors drawn for the empirical margin.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Properties the relation must have; a missing one fails the run.
    #[arg(long, value_enum)]
    pub require: Vec<RelationProperty>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationProperty {
    Dissipative,
    MaximalDissipative,
    Accretive,
    Symmetric,
    Selfadjoint,
    Nonnegative,
    Operator,
}

#[derive(Debug, Args, Serialize)]
pub struct SurfaceArgs {
    /// sphere, torus, two_spheres or two_tori.
    #[arg(long, visible_alias = "model", default_value = "sphere")]
    pub surface: String,
    /// Truncation degree (`kmax` on tori).
    #[arg(long, visible_alias = "kmax", default_value_t = 4)]
    pub lmax: usize,
    #[arg(long, default_value_t = 3.0)]
    pub quad_factor: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceCmd {
    /// Mode counts, Betti numbers and the quadrature Gram residual.
    Info(SurfaceInfoArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SurfaceInfoArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Include the tangential basis tabulated at the quadrature nodes.
    #[arg(long)]
    pub tables: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpedanceCmd {
    /// Accretivity of `Mul_z` and m-dissipativity of the induced condition.
    Classify(ClassifyArgs),
    /// Friedrichs or Krein extension of a nonnegative impedance.
    Extend(ExtendArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// `const:a[+bi]`, `f-dev:EXPR[;EXPR]`, `cap:theta0=T`,
    /// `strip:x0=A,x1=B` or `random:s=S,seed=N[,truncation=M]`.
    #[arg(long)]
    pub z: String,
    /// Include matrices in the report.
    #[arg(long)]
    pub matrices: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionMethod {
    Friedrichs,
    Krein,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long)]
    pub z: String,
    #[arg(long, value_enum)]
    pub method: ExtensionMethod,
    /// `full`, `threshold:TAU` or `auto`.
    #[arg(long, default_value = "auto")]
    pub domain: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxwellCmd {
    /// Crank-Nicolson energy history as CSV.
    Evolve(EvolveArgs),
    /// Resolvent and spectral checks of the semi-discrete generator.
    Range(RangeArgs),
    /// Continuous and discrete Green identities.
    Green(GreenArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct MediumArgs {
    /// Permittivity: a constant, or `v0,v1,..@b1,..` for piecewise values.
    #[arg(long, default_value = "1")]
    pub eps: String,
    /// Permeability, same syntax as `--eps`.
    #[arg(long, default_value = "1")]
    pub mu: String,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    /// Summation-by-parts operator order (2 or 4).
    #[arg(long, default_value = "4")]
    pub sbp: String,
}

#[derive(Debug, Args, Serialize)]
pub struct BcArgs {
    /// Impedance at `x = 0`.
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<f64>,
    /// Impedance at `x = 1`.
    #[arg(long, allow_hyphen_values = true)]
    pub z1: Option<f64>,
    /// JSON file holding the 2×2 contraction `K`.
    #[arg(long = "K", visible_alias = "k-file", conflicts_with_all = ["z0", "z1"])]
    pub k: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub bc: BcArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// `gaussian:x0=X,w=W[,dir=standing|right|left]`.
    #[arg(long, default_value = "gaussian:x0=0.5,w=0.05")]
    pub pulse: String,
    /// Where to write the JSON report; standard error if omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RangeArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub bc: BcArgs,
    /// Number of resolvent sample points in the upper half-plane.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GreenArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub bc: BcArgs,
    /// trig1, trig2, poly1, interior or leontovich.
    #[arg(long, default_value = "trig1")]
    pub case: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SuiteArgs {
    /// duality, cayley, fk, maxwell1d or all.
    pub name: String,
}
