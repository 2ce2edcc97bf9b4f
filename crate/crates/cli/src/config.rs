//! Layered configuration: built-in defaults, then a TOML file, then flags.
//!
//! Every parameter set comes in two shapes: an all-`Option` struct that is
//! both the clap flag group and the TOML section, and a resolved struct with
//! every field filled in, which is echoed into every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

macro_rules! params {
    (
        $(#[$doc:meta])*
        $args:ident => $resolved:ident {
            $( $(#[$m:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Default, clap::Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $args {
            $( $(#[$m])* #[arg(long)] pub $field: Option<$ty>, )*
        }

        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct $resolved {
            $( pub $field: $ty, )*
        }

        impl $args {
            /// Flags win over the file, the file over the defaults.
            pub fn resolve(&self, file: Option<&$args>) -> $resolved {
                $resolved {
                    $( $field: self
                        .$field
                        .clone()
                        .or_else(|| file.and_then(|f| f.$field.clone()))
                        .unwrap_or_else(|| $default), )*
                }
            }
        }
    };
}

params! {
    /// One realization, raw or mollified.
    NoiseArgs => NoiseConfig {
        /// Half-width of the periodic box (the physical window is its middle half).
        half_width: f64 = 32.0,
        /// Grid points.
        n: usize = 4096,
        /// Mollifier width; 0 writes the raw noise.
        epsilon: f64 = 0.0,
    }
}

params! {
    /// Littlewood-Paley regularity scan over resolutions and replicas.
    BesovArgs => BesovConfig {
        #[arg(value_delimiter = ',')]
        resolutions: Vec<usize> = vec![1 << 12, 1 << 14, 1 << 16],
        /// Exponents to classify; empty means 1-H+0.1 and 1-H-0.2.
        #[arg(value_delimiter = ',')]
        kappas: Vec<f64> = vec![],
        replicas: usize = 20,
        half_width: f64 = 64.0,
        xi0: f64 = 6.0,
        sigma: f64 = 0.1,
        alpha: f64 = 0.05,
    }
}

params! {
    /// Mild-solution time stepping from u0 = 1.
    PdeArgs => PdeConfig {
        t: f64 = 0.25,
        dt: f64 = 2.5e-4,
        epsilon: f64 = 0.05,
        half_width: f64 = 8.0,
        n: usize = 4096,
        /// strang, lie or picard.
        scheme: String = "strang".into(),
        /// Keep every k-th step.
        record_every: usize = 100,
    }
}

params! {
    /// Principal eigenvalue on (-t, t).
    EigenArgs => EigenConfig {
        t: f64 = 1.0,
        /// Box spacing; 0 means 2t/4096.
        h: f64 = 0.0,
        epsilon: f64 = 1.0,
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        zero_noise: bool = false,
        /// auto, dense, lanczos or bisection.
        method: String = "bisection".into(),
    }
}

params! {
    /// Feynman-Kac estimate of u_t(x).
    FkArgs => FkConfig {
        /// naive, conditional or fixed_noise.
        variant: String = "conditional".into(),
        t: f64 = 0.25,
        x: f64 = 0.0,
        paths: usize = 1000,
        /// Noise realizations (naive only).
        noise: usize = 100,
        /// Path step; 0 means t/128.
        dt: f64 = 0.0,
        epsilon: f64 = 0.05,
        /// Sharp frequency cutoff (conditional only); 0 uses the field lattice with the mollifier.
        xi_cut: f64 = 0.0,
        half_width: f64 = 8.0,
        n: usize = 4096,
    }
}

params! {
    /// Maximize the variational energy E.
    VariationalArgs => VariationalConfig {
        half_width: f64 = 64.0,
        n: usize = 2048,
        /// Standard deviation of the Gaussian start.
        width: f64 = 1.0,
        max_iters: usize = 20_000,
        tol: f64 = 1e-13,
    }
}

params! {
    /// Growth-law sweep of lambda(Q_t).
    SweepArgs => SweepParams {
        #[arg(value_delimiter = ',')]
        t_list: Vec<f64> = [2.0, 2.5, 3.0, 3.5, 4.0].iter().map(|e| 10f64.powf(*e)).collect(),
        replicas: usize = 20,
        epsilon: f64 = 1.0,
        h: f64 = 0.125,
        max_refine: u32 = 3,
        /// independent or nested.
        mode: String = "independent".into(),
        method: String = "bisection".into(),
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        zero_noise: bool = false,
    }
}

params! {
    /// Lyapunov-to-eigenvalue ratio over a t-ladder.
    RatioArgs => RatioParams {
        #[arg(value_delimiter = ',')]
        t_list: Vec<f64> = vec![2.0, 5.0, 10.0],
        epsilon: f64 = 0.5,
        paths: usize = 10_000,
        dt: f64 = 1e-3,
        h: f64 = 0.05,
        #[arg(value_delimiter = ',')]
        band: Vec<f64> = vec![0.2, 2.0],
        confidence: f64 = 0.95,
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        zero_noise: bool = false,
    }
}

params! {
    /// Fit the growth law to a recorded sweep.
    FitArgs => FitParams {
        /// Sweep record (JSON) written by `rpam sweep`.
        input: PathBuf = PathBuf::new(),
        /// Variational energy; 0 computes it.
        energy: f64 = 0.0,
        resamples: usize = 2000,
        confidence: f64 = 0.95,
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalArgs {
    /// Hurst index, in (0, 1/2).
    #[arg(long = "H", global = true)]
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    /// Noise intensity.
    #[arg(long = "cH", global = true)]
    #[serde(rename = "cH")]
    pub c_h: Option<f64>,
    /// Global seed; every replica derives its own from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; without it the record goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// json, csv or bin.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Global {
    #[serde(rename = "H")]
    pub hurst: f64,
    #[serde(rename = "cH")]
    pub c_h: f64,
    pub seed: u64,
    /// Where results go is not part of the experiment, so it is not echoed.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

impl GlobalArgs {
    pub fn resolve(&self, file: Option<&GlobalArgs>) -> Result<Global, CliError> {
        let pick = |a: &Self| a.clone();
        let f = file.map(pick).unwrap_or_default();
        let format = match self.format.clone().or(f.format).as_deref().unwrap_or("json") {
            "json" => Format::Json,
            "csv" => Format::Csv,
            "bin" => Format::Bin,
            other => return Err(CliError::field("global.format", format!("expected json, csv or bin, got {other:?}"))),
        };
        Ok(Global {
            hurst: self.hurst.or(f.hurst).unwrap_or(0.3),
            c_h: self.c_h.or(f.c_h).unwrap_or(1.0),
            seed: self.seed.or(f.seed).unwrap_or(0),
            out: self.out.clone().or(f.out),
            format,
            threads: self.threads.or(f.threads).unwrap_or(0),
        })
    }

    /// Whether `H` was given at all (flag or file).
    pub fn hurst_given(&self, file: Option<&GlobalArgs>) -> bool {
        self.hurst.is_some() || file.is_some_and(|f| f.hurst.is_some())
    }
}

/// The `--config` file: a `[global]` table and one table per subcommand.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub global: Option<GlobalArgs>,
    pub noise: Option<NoiseArgs>,
    pub besov_scan: Option<BesovArgs>,
    pub pde: Option<PdeArgs>,
    pub eigen: Option<EigenArgs>,
    pub fk: Option<FkArgs>,
    pub variational: Option<VariationalArgs>,
    pub sweep: Option<SweepArgs>,
    pub ratio: Option<RatioArgs>,
    pub fit: Option<FitArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Parse a snake_case enum through its serde representation.
pub fn parse_enum<T: serde::de::DeserializeOwned>(field: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::field(field, format!("unknown value {value:?}")))
}
