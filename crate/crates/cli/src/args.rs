use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "ecs-spectra", version, about = "Finite-temperature anyon operators and elliptic Calogero-Sutherland spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-check the elliptic kernels (b backends, V representations, offset, kernel identities).
    Elliptic(EllipticArgs),
    /// Regularized many-body identity: residual convergence in eps, theta identity, gradients.
    Identity(IdentityArgs),
    /// Closed-form correlators against truncated Fock-space brute force.
    Corr(CorrArgs),
    /// Exchange relation, commutator identity on random vertex data, crucial constraint.
    FockVerify(FockVerifyArgs),
    /// Commutator relations of the second-quantized Hamiltonian.
    HamiltonianVerify(HamiltonianArgs),
    /// Thermal trace identity for polynomial observables.
    Thermal(ThermalArgs),
    /// Eigenvalues of the recursion matrix on a momentum window.
    Spectrum(SpectrumArgs),
    /// Evaluate the Fourier coefficient table at a point.
    Fhat(FhatArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output file; the format follows the extension unless --format is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (falls back to ECS_SPECTRA_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    /// File of key=value lines; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Relative cut for truncating infinite sums.
    #[arg(long, default_value_t = 1e-16)]
    pub tail_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllipticCheck {
    BBackends,
    VReps,
    WpOffset,
    Del3,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct EllipticArgs {
    #[arg(long, value_enum, default_value_t = EllipticCheck::All)]
    pub check: EllipticCheck,
    /// Nome values; defaults depend on the check.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true)]
    pub eps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Number of r points for the backend and representation grids.
    #[arg(long, default_value_t = 32)]
    pub n_r: usize,
    /// Number of grid points for the kernel identities.
    #[arg(long, default_value_t = 64)]
    pub n_grid: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct IdentityArgs {
    #[arg(long = "N", default_value_t = 2)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    /// Strictly decreasing regulator values (eps = eps').
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "0.2,0.1,0.05,0.025")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub configs: usize,
    #[arg(long, default_value_t = 0.3)]
    pub min_gap: f64,
    #[arg(long, default_value_t = 1.0)]
    pub min_order: f64,
    /// Tolerance on the eps -> 0 extrapolation of the normalized residual;
    /// without it the extrapolated value is only reported.
    #[arg(long)]
    pub extrapolation_tol: Option<f64>,
    /// Random configurations for the theta identity (0 skips it).
    #[arg(long, default_value_t = 100)]
    pub theta_count: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub theta_tol: f64,
    /// Random points for the gradient checks (0 skips them).
    #[arg(long, default_value_t = 10)]
    pub gradient_count: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub gradient_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct CorrArgs {
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "1,1.4142135623730951")]
    pub nu: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Numbers of insertions; each must be even (equal numbers of +1 and -1 charges).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "2,4")]
    pub points: Vec<usize>,
    /// Random configurations per (nu, points) pair.
    #[arg(long, default_value_t = 2)]
    pub configs: usize,
    #[arg(long = "M", default_value_t = 12)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long = "L", default_value_t = 24)]
    #[serde(rename = "L")]
    pub l: usize,
    /// Winding cutoff; defaults to half the largest point count plus one.
    #[arg(long = "W")]
    #[serde(rename = "W")]
    pub w: Option<i32>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct FockVerifyArgs {
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.8)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long = "M", default_value_t = 10)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long = "L", default_value_t = 14)]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long, default_value_t = 2)]
    pub max_level: usize,
    /// Random vertex specs for the commutator identity.
    #[arg(long, default_value_t = 20)]
    pub specs: usize,
    #[arg(long, default_value_t = 3)]
    pub vertex_m: usize,
    #[arg(long, default_value_t = 9)]
    pub vertex_l: usize,
    #[arg(long, default_value_t = 3)]
    pub vertex_level: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub vertex_tol: f64,
    #[arg(long, default_value_t = 12)]
    pub crucial_m: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub crucial_tol: f64,
    /// Required ratio of the perturbed control defect to the tolerance.
    #[arg(long, default_value_t = 1e6)]
    pub control_factor: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct HamiltonianArgs {
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps_prime: f64,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "0.4,2.1")]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "1.7,-0.6")]
    pub y: Vec<f64>,
    #[arg(long = "M", default_value_t = 12)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long = "L", default_value_t = 20)]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long, default_value_t = 0.02)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub sq1_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub sq2_tol: f64,
    /// Required ratio of the random-representation control to the sq2 residual.
    #[arg(long, default_value_t = 100.0)]
    pub control_factor: f64,
    /// Also scan eps in {1, 0.5, 0.25} and fit the rest-term gap exponent.
    #[arg(long)]
    pub gap_scan: bool,
    #[arg(long, default_value_t = 0.25)]
    pub gap_band: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct ThermalArgs {
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "0.3,0.5")]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub max_mode: usize,
    #[arg(long, default_value_t = 4)]
    pub max_degree: u32,
    #[arg(long, default_value_t = 30)]
    pub m_max: u32,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Box,
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Literal,
    FourierV,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightArg {
    Nu,
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetArg {
    NPlusOne,
    NMinusOne,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct SpectrumArgs {
    #[arg(long = "N", default_value_t = 2)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, default_value_t = 8)]
    pub nmax: i64,
    /// Total momentum; all sectors when omitted.
    #[arg(long)]
    pub sector: Option<i64>,
    #[arg(long, value_enum, default_value_t = DomainArg::Box)]
    pub domain: DomainArg,
    #[arg(long, value_enum, default_value_t = BackendArg::FourierV)]
    pub backend: BackendArg,
    #[arg(long, value_enum, default_value_t = WeightArg::Mode)]
    pub weight: WeightArg,
    #[arg(long, value_enum, default_value_t = OffsetArg::NPlusOne)]
    pub offset: OffsetArg,
    /// Number of eigenvalues reported.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Keep window eigenvectors without a physical coefficient combination.
    #[arg(long)]
    pub no_filter: bool,
    /// Tolerance on the drift of the lowest eigenvalue between nmax and nmax - 1.
    #[arg(long, default_value_t = 1e-6)]
    pub drift_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FhatMethodArg {
    Contour,
    Eps,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct FhatArgs {
    /// Momentum vector.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, required = true)]
    pub n: Vec<i64>,
    /// Positions, one per particle.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = FhatMethodArg::Contour)]
    pub method: FhatMethodArg,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Contour shift for the contour method.
    #[arg(long, default_value_t = 0.8)]
    pub sigma: f64,
    /// Regulator sequence for the eps method.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_hyphen_values = true, default_value = "0.2,0.1,0.05,0.025")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
    /// Also check the recursion at this momentum by finite differences.
    #[arg(long)]
    pub theorem: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub theorem_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
