//! TOML schema for `simulate` and for device files.
//!
//! ```toml
//! [device]                     # optional, every key has a default
//! upload_bandwidth = 6e9
//! download_bandwidth = 6e9
//! duplex = true
//! compute_slots = 1
//! alloc_latency = 0.0
//! issue_latency = 0.0
//!
//! [[run]]
//! name = "uniform-4"
//! dependency = "none"          # none | read-only | read-after-write
//! elements = 4                 # linear domain, or `matrix = [rows, cols]`
//! tasks = 4
//! h2d_s = 4.0                  # single-stream stage times of the whole domain
//! kex_s = 4.0
//! d2h_s = 0.0
//! ```
//!
//! Optional run keys: `halo_radius` (read-only), `blocks = [r, c]`
//! (read-after-write), `shared_input_by_all`, `iterative_kernel`,
//! `iteration_count`, `kernel_dominated`, `h2d_inflation`, `streams`,
//! `max_streams` (default 8), `assignment` (`round-robin` | `block`).

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, DepKind, DependencyDescriptor, DeviceSpec, StageProfile};
use crate::partition::Domain;

pub const DEFAULT_MAX_STREAMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependencyName {
    #[default]
    None,
    ReadOnly,
    ReadAfterWrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentName {
    RoundRobin,
    Block,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub dependency: DependencyName,
    pub halo_radius: Option<usize>,
    pub blocks: Option<[usize; 2]>,
    #[serde(default)]
    pub shared_input_by_all: bool,
    #[serde(default)]
    pub iterative_kernel: bool,
    #[serde(default)]
    pub iteration_count: u64,
    #[serde(default)]
    pub kernel_dominated: bool,
    pub elements: Option<usize>,
    pub matrix: Option<[usize; 2]>,
    pub tasks: Option<usize>,
    pub h2d_s: f64,
    pub kex_s: f64,
    pub d2h_s: f64,
    pub h2d_inflation: Option<f64>,
    pub streams: Option<usize>,
    pub max_streams: Option<usize>,
    pub assignment: Option<AssignmentName>,
}

impl RunConfig {
    fn err(&self, message: &str) -> Error {
        Error::Config(format!("run `{}`: {message}", self.name))
    }

    pub fn descriptor(&self) -> Result<DependencyDescriptor> {
        let dep = match (self.dependency, self.halo_radius, self.blocks) {
            (DependencyName::None, None, None) => DepKind::None,
            (DependencyName::ReadOnly, Some(halo_radius), None) => DepKind::ReadOnly { halo_radius },
            (DependencyName::ReadAfterWrite, None, Some([r, c])) => DepKind::ReadAfterWrite { blocks: (r, c) },
            (DependencyName::ReadOnly, None, _) => return Err(self.err("read-only needs `halo_radius`")),
            (DependencyName::ReadAfterWrite, _, None) => return Err(self.err("read-after-write needs `blocks`")),
            _ => {
                return Err(self.err("`halo_radius` is only for read-only and `blocks` only for read-after-write"));
            }
        };
        Ok(DependencyDescriptor {
            shared_input_by_all: self.shared_input_by_all,
            iterative_kernel: self.iterative_kernel,
            iteration_count: self.iteration_count,
            dep,
            kernel_dominated: self.kernel_dominated,
        })
    }

    pub fn domain(&self) -> Result<Domain> {
        match (self.elements, self.matrix) {
            (Some(n), None) => Ok(Domain::Linear(n)),
            (None, Some([r, c])) => Ok(Domain::Matrix(r, c)),
            (Some(_), Some(_)) => Err(self.err("give either `elements` or `matrix`, not both")),
            (None, None) => Err(self.err("missing `elements` or `matrix`")),
        }
    }

    pub fn profile(&self) -> Result<StageProfile> {
        let p = StageProfile::new(self.h2d_s, self.kex_s, self.d2h_s);
        p.validate().map_err(|e| self.err(&e.to_string()))?;
        Ok(p)
    }

    pub fn max_streams(&self) -> usize {
        self.max_streams.unwrap_or(DEFAULT_MAX_STREAMS)
    }

    /// `None` means the layout's own mapping.
    pub fn assignment(&self) -> Option<Assignment> {
        self.assignment.map(|a| match a {
            AssignmentName::RoundRobin => Assignment::RoundRobin,
            AssignmentName::Block => Assignment::Block,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.descriptor()?;
        self.profile()?;
        if self.max_streams() == 0 || self.streams == Some(0) {
            return Err(self.err("stream counts must be >= 1"));
        }
        if let Some(f) = self.h2d_inflation {
            if !(f.is_finite() && f >= 1.0) {
                return Err(self.err("`h2d_inflation` must be >= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub device: DeviceSpec,
    #[serde(rename = "run")]
    pub runs: Vec<RunConfig>,
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.runs.is_empty() {
            return Err(Error::Config("no [[run]] sections".into()));
        }
        cfg.device.validate()?;
        for r in &cfg.runs {
            r.validate()?;
        }
        Ok(cfg)
    }
}

/// A device file holds the `[device]` keys at top level.
pub fn parse_device(text: &str) -> Result<DeviceSpec> {
    let d: DeviceSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    d.validate()?;
    Ok(d)
}
