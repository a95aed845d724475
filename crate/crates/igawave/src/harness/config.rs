use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Which experiment a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Pwave2d,
    Pwave3d,
    Elasticity2d,
}

impl ProblemKind {
    pub fn dims(&self) -> usize {
        match self {
            ProblemKind::Pwave2d | ProblemKind::Elasticity2d => 2,
            ProblemKind::Pwave3d => 3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Pwave2d => "pwave2d",
            ProblemKind::Pwave3d => "pwave3d",
            ProblemKind::Elasticity2d => "elasticity2d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pwave2d" => Ok(ProblemKind::Pwave2d),
            "pwave3d" => Ok(ProblemKind::Pwave3d),
            "elasticity2d" => Ok(ProblemKind::Elasticity2d),
            other => Err(Error::InvalidInput(format!(
                "unknown problem kind '{other}'"
            ))),
        }
    }
}

/// Initial displacement selector; initial velocity is zero in every case.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    Gaussian {
        center: Vec<f64>,
        width: f64,
    },
    /// Tensor cosine mode with integer wave numbers; the analytic standing
    /// wave used by the convergence studies.
    Mode {
        k: Vec<usize>,
    },
}

/// Everything a driver needs to run one experiment.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub kind: ProblemKind,
    /// Elements per direction.
    pub elements: Vec<usize>,
    pub degree: usize,
    pub tau: f64,
    pub steps: usize,
    pub rho: f64,
    pub mu: f64,
    pub lambda: f64,
    pub ic: InitialCondition,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Stabilization weight of the elastic energy-norm diagnostic.
    pub sigma: f64,
    pub out_dir: PathBuf,
    /// Allows full-scale meshes (more than 16 elements per direction).
    pub full: bool,
}

impl SimulationConfig {
    pub fn new(kind: ProblemKind) -> Self {
        let d = kind.dims();
        Self {
            kind,
            elements: vec![16; d],
            degree: 2,
            tau: 0.01,
            steps: 100,
            rho: 1.0,
            mu: 1.0,
            lambda: 1.0,
            ic: InitialCondition::Gaussian {
                center: vec![0.5; d],
                width: 0.2,
            },
            snapshot_every: 0,
            sigma: 0.25,
            out_dir: PathBuf::from("out"),
            full: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.kind.dims();
        if self.elements.len() != d {
            return Err(Error::InvalidInput(format!(
                "{} needs {d} element counts, got {:?}",
                self.kind.as_str(),
                self.elements
            )));
        }
        if self.elements.iter().any(|&e| e < 2) {
            return Err(Error::InvalidInput(format!(
                "element counts must be >= 2, got {:?}",
                self.elements
            )));
        }
        if self.degree < 1 {
            return Err(Error::InvalidInput("degree must be >= 1".into()));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if self.steps < 1 {
            return Err(Error::InvalidInput("step count must be >= 1".into()));
        }
        if [self.rho, self.mu, self.lambda].iter().any(|v| v.is_nan())
            || self.rho <= 0.0
            || self.mu <= 0.0
            || self.lambda < 0.0
        {
            return Err(Error::InvalidInput(format!(
                "material parameters out of range: rho={} mu={} lambda={}",
                self.rho, self.mu, self.lambda
            )));
        }
        match &self.ic {
            InitialCondition::Zero => {}
            InitialCondition::Gaussian { center, width } => {
                if center.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "gaussian center needs {d} coordinates, got {center:?}"
                    )));
                }
                if width.is_nan() || *width <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
            }
            InitialCondition::Mode { k } => {
                if k.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "mode needs {d} wave numbers, got {k:?}"
                    )));
                }
                if k.contains(&0) {
                    return Err(Error::InvalidInput("mode wave numbers must be >= 1".into()));
                }
                if self.kind == ProblemKind::Elasticity2d && k[0] != k[1] {
                    return Err(Error::InvalidInput(
                        "the elastic shear mode requires equal wave numbers".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The scale gate: meshes beyond 16 elements per direction are
    /// long-running and must be requested explicitly.
    pub fn check_scale_gate(&self) -> Result<()> {
        if !self.full && self.elements.iter().any(|&e| e > 16) {
            return Err(Error::InvalidInput(format!(
                "mesh {:?} exceeds the default scale; pass --full to run large meshes",
                self.elements
            )));
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_key_value(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = ProblemKind::parse(value)?,
            "elements" => self.elements = parse_usize_list(value)?,
            "degree" => self.degree = parse_scalar(key, value)?,
            "tau" => self.tau = parse_scalar(key, value)?,
            "steps" => self.steps = parse_scalar(key, value)?,
            "rho" => self.rho = parse_scalar(key, value)?,
            "mu" => self.mu = parse_scalar(key, value)?,
            "lambda" => self.lambda = parse_scalar(key, value)?,
            "ic" => match value {
                "zero" => self.ic = InitialCondition::Zero,
                "gaussian" => {
                    if !matches!(self.ic, InitialCondition::Gaussian { .. }) {
                        self.ic = InitialCondition::Gaussian {
                            center: vec![0.5; self.kind.dims()],
                            width: 0.2,
                        };
                    }
                }
                "mode" => {
                    if !matches!(self.ic, InitialCondition::Mode { .. }) {
                        self.ic = InitialCondition::Mode {
                            k: vec![1; self.kind.dims()],
                        };
                    }
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown initial condition '{other}'"
                    )))
                }
            },
            "center" => {
                let center = parse_f64_list(value)?;
                let width = match &self.ic {
                    InitialCondition::Gaussian { width, .. } => *width,
                    _ => 0.2,
                };
                self.ic = InitialCondition::Gaussian { center, width };
            }
            "width" => {
                let width = parse_scalar(key, value)?;
                let center = match &self.ic {
                    InitialCondition::Gaussian { center, .. } => center.clone(),
                    _ => vec![0.5; self.kind.dims()],
                };
                self.ic = InitialCondition::Gaussian { center, width };
            }
            "mode_k" => {
                self.ic = InitialCondition::Mode {
                    k: parse_usize_list(value)?,
                }
            }
            "snapshot_every" => self.snapshot_every = parse_scalar(key, value)?,
            "sigma" => self.sigma = parse_scalar(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "full" => {
                self.full = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "boolean expected for 'full', got '{other}'"
                        )))
                    }
                }
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Apply a flat `key=value` config file (UTF-8, '#' comments).
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.apply_key_value(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Machine-readable echo of every resolved field, for reproducibility.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind={}", self.kind.as_str());
        let _ = writeln!(s, "elements={}", join(&self.elements));
        let _ = writeln!(s, "degree={}", self.degree);
        let _ = writeln!(s, "tau={:.16e}", self.tau);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "rho={:.16e}", self.rho);
        let _ = writeln!(s, "mu={:.16e}", self.mu);
        let _ = writeln!(s, "lambda={:.16e}", self.lambda);
        match &self.ic {
            InitialCondition::Zero => {
                let _ = writeln!(s, "ic=zero");
            }
            InitialCondition::Gaussian { center, width } => {
                let _ = writeln!(s, "ic=gaussian");
                let centers: Vec<String> = center.iter().map(|c| format!("{c:.16e}")).collect();
                let _ = writeln!(s, "center={}", centers.join(","));
                let _ = writeln!(s, "width={width:.16e}");
            }
            InitialCondition::Mode { k } => {
                let _ = writeln!(s, "ic=mode");
                let _ = writeln!(s, "mode_k={}", join(k));
            }
        }
        let _ = writeln!(s, "forcing=zero");
        let _ = writeln!(s, "snapshot_every={}", self.snapshot_every);
        let _ = writeln!(s, "sigma={:.16e}", self.sigma);
        let _ = writeln!(s, "full={}", self.full);
        s
    }
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("cannot parse '{value}' for '{key}'")))
}

pub fn parse_usize_list(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("cannot parse list entry '{v}'")))
        })
        .collect()
}

pub fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("cannot parse list entry '{v}'")))
        })
        .collect()
}
