//! Experiment configuration: `key=value` lines plus overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rpcq::{
    Crescent, Error, Gaussian, Kernel, Matern52, Measure, PeriodicSobolev, Result, SamplerConfig, SamplerKind,
    TensorProduct, UnitBox,
};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelChoice {
    Sobolev,
    Matern52,
    Gaussian,
}

impl KernelChoice {
    fn as_str(self) -> &'static str {
        match self {
            KernelChoice::Sobolev => "sobolev",
            KernelChoice::Matern52 => "matern52",
            KernelChoice::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainChoice {
    UnitBox,
    Crescent,
}

impl DomainChoice {
    fn as_str(self) -> &'static str {
        match self {
            DomainChoice::UnitBox => "box",
            DomainChoice::Crescent => "crescent",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelChoice,
    pub s: u32,
    pub dim: usize,
    pub bandwidth: f64,
    pub domain: DomainChoice,
    pub sampler: SamplerKind,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub trials_max: usize,
    pub proposal_cap: u64,
    pub mcmc_steps_factor: usize,
    /// When false, every time column is written as zero.
    pub timing: bool,
    /// Grid points per dimension for numeric embeddings.
    pub grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        ExperimentConfig {
            kernel: KernelChoice::Sobolev,
            s: 3,
            dim: 1,
            bandwidth: 2.0,
            domain: DomainChoice::UnitBox,
            sampler: SamplerKind::RpcOptimized,
            n_grid: vec![8, 16, 32, 64, 128],
            trials: 100,
            seed: 0,
            out: PathBuf::from("out"),
            trials_max: s.trials_max,
            proposal_cap: s.proposal_cap,
            mcmc_steps_factor: s.mcmc_steps_factor,
            timing: true,
            grid: 256,
        }
    }
}

pub const KEYS: [&str; 15] = [
    "kernel",
    "s",
    "dim",
    "bandwidth",
    "domain",
    "sampler",
    "n_grid",
    "trials",
    "seed",
    "out",
    "trials_max",
    "proposal_cap",
    "mcmc_steps_factor",
    "timing",
    "grid",
];

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("{key}: cannot parse {value:?}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|t| num(key, t.trim())).collect()
}

impl ExperimentConfig {
    /// Preset for the crescent demo.
    pub fn crescent() -> Self {
        ExperimentConfig {
            kernel: KernelChoice::Matern52,
            bandwidth: 2.0,
            dim: 2,
            domain: DomainChoice::Crescent,
            n_grid: vec![5, 10, 20, 50, 100],
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "kernel" => {
                self.kernel = match v {
                    "sobolev" => KernelChoice::Sobolev,
                    "matern52" => KernelChoice::Matern52,
                    "gaussian" => KernelChoice::Gaussian,
                    _ => return Err(bad("kernel", v)),
                }
            }
            "s" => self.s = num("s", v)?,
            "dim" => self.dim = num("dim", v)?,
            "bandwidth" => self.bandwidth = num("bandwidth", v)?,
            "domain" => {
                self.domain = match v {
                    "box" => DomainChoice::UnitBox,
                    "crescent" => DomainChoice::Crescent,
                    _ => return Err(bad("domain", v)),
                }
            }
            "sampler" => self.sampler = v.parse().map_err(|_| bad("sampler", v))?,
            "n_grid" => self.n_grid = parse_list("n_grid", v)?,
            "trials" => self.trials = num("trials", v)?,
            "seed" => self.seed = num("seed", v)?,
            "out" => self.out = PathBuf::from(v),
            "trials_max" => self.trials_max = num("trials_max", v)?,
            "proposal_cap" => self.proposal_cap = num("proposal_cap", v)?,
            "mcmc_steps_factor" => self.mcmc_steps_factor = num("mcmc_steps_factor", v)?,
            "timing" => {
                self.timing = match v {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(bad("timing", v)),
                }
            }
            "grid" => self.grid = num("grid", v)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Apply `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n_grid: empty".into()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("n_grid: must be positive and strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials: must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim: must be positive".into()));
        }
        if self.grid == 0 {
            return Err(Error::InvalidConfig("grid: must be positive".into()));
        }
        if self.domain == DomainChoice::Crescent && self.dim != 2 {
            return Err(Error::InvalidConfig("dim: crescent domain is two-dimensional".into()));
        }
        if self.domain == DomainChoice::Crescent && self.kernel == KernelChoice::Sobolev {
            return Err(Error::InvalidConfig("kernel: sobolev kernels live on the unit box".into()));
        }
        self.sampler_config(self.n_grid[0])
            .validate()
            .map_err(|e| Error::InvalidConfig(format!("trials_max/proposal_cap/mcmc_steps_factor: {e}")))?;
        self.build_kernel().map_err(|e| Error::InvalidConfig(format!("kernel: {e}")))?;
        Ok(())
    }

    pub fn sampler_config(&self, n: usize) -> SamplerConfig {
        SamplerConfig {
            n,
            trials_max: self.trials_max,
            proposal_cap: self.proposal_cap,
            mcmc_steps_factor: self.mcmc_steps_factor,
            seed: self.seed,
        }
    }

    pub fn build_kernel(&self) -> Result<Box<dyn Kernel>> {
        Ok(match self.kernel {
            KernelChoice::Sobolev if self.dim == 1 => Box::new(PeriodicSobolev::new(self.s)?),
            KernelChoice::Sobolev => Box::new(TensorProduct::new(PeriodicSobolev::new(self.s)?, self.dim)?),
            KernelChoice::Matern52 => Box::new(Matern52::new(self.bandwidth, self.dim)?),
            KernelChoice::Gaussian => Box::new(Gaussian::new(self.bandwidth, self.dim)?),
        })
    }

    pub fn build_measure(&self) -> Result<Box<dyn Measure>> {
        Ok(match self.domain {
            DomainChoice::UnitBox => Box::new(UnitBox::new(self.dim)?),
            DomainChoice::Crescent => Box::new(Crescent::new()),
        })
    }

    /// Every key except `out`, one `key=value` per line in a fixed order.
    pub fn canonical(&self) -> String {
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "kernel={}", self.kernel.as_str());
        let _ = writeln!(s, "s={}", self.s);
        let _ = writeln!(s, "dim={}", self.dim);
        let _ = writeln!(s, "bandwidth={}", self.bandwidth);
        let _ = writeln!(s, "domain={}", self.domain.as_str());
        let _ = writeln!(s, "sampler={}", self.sampler);
        let _ = writeln!(s, "n_grid={}", grid.join(","));
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "trials_max={}", self.trials_max);
        let _ = writeln!(s, "proposal_cap={}", self.proposal_cap);
        let _ = writeln!(s, "mcmc_steps_factor={}", self.mcmc_steps_factor);
        let _ = writeln!(s, "timing={}", if self.timing { "on" } else { "off" });
        let _ = writeln!(s, "grid={}", self.grid);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `#`-prefixed provenance lines for CSV output.
    pub fn provenance(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rpcq {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# config_hash={} seed={}", self.hash(), self.seed);
        let canonical = self.canonical();
        let joined: Vec<&str> = canonical.lines().collect();
        let _ = writeln!(s, "# {}", joined.join(" "));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_text_and_overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# comment\nkernel = matern52\n\ndim=2\nn_grid=4, 8,16\ntiming=off\n").unwrap();
        assert_eq!(c.kernel, KernelChoice::Matern52);
        assert_eq!(c.n_grid, vec![4, 8, 16]);
        assert!(!c.timing);
        c.validate().unwrap();
        let err = c.apply_text("colour=blue").unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn validation_names_the_key() {
        let mut c = ExperimentConfig::default();
        c.n_grid = vec![8, 8];
        assert!(c.validate().unwrap_err().to_string().contains("n_grid"));
        let mut c = ExperimentConfig::default();
        c.trials_max = 10;
        assert!(c.validate().unwrap_err().to_string().contains("trials_max"));
        let mut c = ExperimentConfig::default();
        c.s = 4;
        assert!(c.validate().unwrap_err().to_string().contains("kernel"));
        assert!(ExperimentConfig::crescent().validate().is_ok());
    }

    #[test]
    fn hash_ignores_out_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
