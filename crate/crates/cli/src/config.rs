//! Sweep configuration: a JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use fermi_entropy::{KGrid, ModelParams, SelectionConfig, ZeroModePolicy, DEFAULT_MARGIN};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_per_dim: usize,
    #[serde(default = "default_true")]
    pub shifted: bool,
}

fn default_true() -> bool {
    true
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: OutputFormat::Csv }
    }
}

/// Everything a `scan` run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub dim: usize,
    pub l_values: Vec<usize>,
    /// Defaults to [`KGrid::default_for`] at the largest block.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub fit: SelectionConfig,
    #[serde(default)]
    pub zero_modes: ZeroModePolicy,
    /// Surface grid for the Widom comparison; per-dimension default when absent.
    #[serde(default)]
    pub widom_grid_n: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

/// Flag values that replace file settings when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambdas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub l_min: Option<usize>,
    pub l_max: Option<usize>,
    pub fit_l_min: Option<usize>,
    pub grid_n: Option<usize>,
    pub shifted: Option<bool>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub cache_dir: Option<PathBuf>,
    pub zero_modes: Option<ZeroModePolicy>,
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Starts from `base` (or an empty config) and applies the flags.
    pub fn resolve(base: Option<SweepConfig>, o: Overrides) -> Result<Self, String> {
        let mut cfg = base.unwrap_or_else(|| SweepConfig {
            lambdas: Vec::new(),
            gammas: vec![0.0],
            dim: 2,
            l_values: Vec::new(),
            grid: None,
            fit: SelectionConfig::default(),
            zero_modes: ZeroModePolicy::Reject,
            widom_grid_n: None,
            output: OutputConfig::default(),
            workers: 1,
            cache_dir: None,
        });
        if let Some(v) = o.lambdas {
            cfg.lambdas = v;
        }
        if let Some(v) = o.gammas {
            cfg.gammas = v;
        }
        if let Some(v) = o.dim {
            cfg.dim = v;
        }
        if o.l_min.is_some() || o.l_max.is_some() {
            let lo = o.l_min.or_else(|| cfg.l_values.first().copied()).unwrap_or(2);
            let hi = o.l_max.or_else(|| cfg.l_values.last().copied()).unwrap_or(lo);
            cfg.l_values = (lo..=hi).collect();
        }
        if let Some(v) = o.fit_l_min {
            cfg.fit.l_min = v;
        }
        if o.grid_n.is_some() || o.shifted.is_some() {
            let current = cfg.grid.unwrap_or_else(|| {
                let g = KGrid::default_for(cfg.dim, cfg.l_values.last().copied().unwrap_or(1));
                GridConfig { n_per_dim: g.n(), shifted: g.is_shifted() }
            });
            cfg.grid = Some(GridConfig {
                n_per_dim: o.grid_n.unwrap_or(current.n_per_dim),
                shifted: o.shifted.unwrap_or(current.shifted),
            });
        }
        if let Some(v) = o.workers {
            cfg.workers = v;
        }
        if let Some(v) = o.out_dir {
            cfg.output.dir = v;
        }
        if let Some(v) = o.format {
            cfg.output.format = v;
        }
        if let Some(v) = o.cache_dir {
            cfg.cache_dir = Some(v);
        }
        if let Some(v) = o.zero_modes {
            cfg.zero_modes = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lambdas.is_empty() {
            return Err("no lambda values given".into());
        }
        if self.gammas.is_empty() {
            return Err("no gamma values given".into());
        }
        if self.l_values.is_empty() {
            return Err("no block sizes given (l_values is empty)".into());
        }
        if self.l_values[0] < 1 {
            return Err("block sizes must be >= 1".into());
        }
        if self.l_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err("block sizes must be strictly ascending".into());
        }
        if self.workers < 1 {
            return Err("workers must be >= 1".into());
        }
        for &lambda in &self.lambdas {
            for &gamma in &self.gammas {
                ModelParams::new(lambda, gamma, self.dim).map_err(|e| e.to_string())?;
            }
        }
        let grid = self.kgrid()?;
        grid.point_count(self.dim).map_err(|e| e.to_string())?;
        let l_max = *self.l_values.last().expect("non-empty");
        if grid.n() < DEFAULT_MARGIN * l_max {
            return Err(format!(
                "grid of {} points per axis is too small for L = {l_max}: need at least {}",
                grid.n(),
                DEFAULT_MARGIN * l_max
            ));
        }
        Ok(())
    }

    pub fn kgrid(&self) -> Result<KGrid, String> {
        match self.grid {
            Some(g) => KGrid::new(g.n_per_dim, g.shifted).map_err(|e| e.to_string()),
            None => Ok(KGrid::default_for(self.dim, self.l_values.last().copied().unwrap_or(1))),
        }
    }

    pub fn widom_grid(&self) -> usize {
        self.widom_grid_n.unwrap_or(match self.dim {
            1 => 64,
            2 => 1024,
            _ => 128,
        })
    }

    /// Points in output order: ascending λ, then γ.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut lambdas = self.lambdas.clone();
        let mut gammas = self.gammas.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        lambdas.iter().flat_map(|&l| gammas.iter().map(move |&g| (l, g))).collect()
    }

    /// SHA-256 over the inputs that determine the results (not workers, paths or format).
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            points: Vec<(f64, f64)>,
            dim: usize,
            l_values: &'a [usize],
            grid: Option<KGrid>,
            fit: &'a SelectionConfig,
            zero_modes: ZeroModePolicy,
            widom_grid_n: usize,
        }
        let key = Key {
            points: self.points(),
            dim: self.dim,
            l_values: &self.l_values,
            grid: self.kgrid().ok(),
            fit: &self.fit,
            zero_modes: self.zero_modes,
            widom_grid_n: self.widom_grid(),
        };
        let bytes = serde_json::to_vec(&key).expect("plain data serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides() -> Overrides {
        Overrides { lambdas: Some(vec![1.0, 0.5]), l_max: Some(8), ..Default::default() }
    }

    #[test]
    fn flags_build_a_config() {
        let cfg = SweepConfig::resolve(None, overrides()).unwrap();
        assert_eq!(cfg.l_values, (2..=8).collect::<Vec<_>>());
        assert_eq!(cfg.points(), vec![(0.5, 0.0), (1.0, 0.0)]);
        assert_eq!(cfg.kgrid().unwrap().n(), 512);
    }

    #[test]
    fn flags_win_over_file() {
        let file: SweepConfig = serde_json::from_str(
            r#"{"lambdas":[0.3],"gammas":[0.0,1.0],"dim":2,"l_values":[4,6,8],"workers":2}"#,
        )
        .unwrap();
        let cfg = SweepConfig::resolve(Some(file), Overrides { workers: Some(3), grid_n: Some(128), ..Default::default() })
            .unwrap();
        assert_eq!(cfg.lambdas, vec![0.3]);
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.kgrid().unwrap().n(), 128);
        assert!(cfg.kgrid().unwrap().is_shifted());
    }

    #[test]
    fn rejects_bad_configs() {
        let empty_l = Overrides { lambdas: Some(vec![1.0]), ..Default::default() };
        assert!(SweepConfig::resolve(None, empty_l).unwrap_err().contains("l_values"));
        let bad_lambda = Overrides { lambdas: Some(vec![-1.0]), l_max: Some(4), ..Default::default() };
        assert!(SweepConfig::resolve(None, bad_lambda).unwrap_err().contains("lambda"));
        let margin = Overrides { grid_n: Some(64), l_max: Some(10), ..overrides() };
        assert!(SweepConfig::resolve(None, margin).unwrap_err().contains("too small"));
        let workers = Overrides { workers: Some(0), ..overrides() };
        assert!(SweepConfig::resolve(None, workers).is_err());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"lambdas":[1],"gammas":[0],"dim":2,"l_values":[2],"bogus":1}"#).is_err());
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let a = SweepConfig::resolve(None, overrides()).unwrap();
        let b = SweepConfig::resolve(None, Overrides { workers: Some(4), out_dir: Some("elsewhere".into()), ..overrides() })
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = SweepConfig::resolve(None, Overrides { l_max: Some(9), ..overrides() }).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
