use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use semiclassical_core::lattice_field::{BoundaryData, FieldOptions, FieldPolynomial, FourierMode, Lattice};
use semiclassical_core::{
    HierarchyOptions, Monomial, Potential1D, PotentialND, SamplingBox, TimeGrid, TrajectoryOptions,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Oscillator,
    Field,
    Compare,
    Resum,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Oscillator => "oscillator",
            Command::Field => "field",
            Command::Compare => "compare",
            Command::Resum => "resum",
            Command::Validate => "validate",
        }
    }
}

/// Everything a run depends on. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(default)]
    pub oscillator: OscillatorSpec,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default)]
    pub resum: ResumSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "one")]
    pub mass: f64,
    pub omega: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        Self { half_width: 3.0, points_per_axis: 21 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSpec {
    pub hbar: f64,
    /// Hierarchy order `K`: profiles `a_0..a_K`, energies `e_0..e_{K-1}`.
    pub order: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub stencil: usize,
    pub regularity_tolerance: f64,
    /// Quantum numbers of excited states to build on the ground hierarchy.
    pub excited: Vec<u32>,
    pub excited_order: usize,
    /// N-D evaluation points.
    pub points: Vec<Vec<f64>>,
    /// Extra seeded points drawn uniformly from the validation box.
    pub random_points: usize,
    /// Central-difference step for the N-D gradient check; 0 disables it.
    pub fd_step: f64,
    pub time: Option<TimeSpec>,
    pub tolerance: f64,
    pub decay_tolerance: f64,
}

impl Default for OscillatorSpec {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            order: 6,
            half_width: 8.0,
            spacing: 0.1,
            stencil: 16,
            regularity_tolerance: 1e-2,
            excited: Vec::new(),
            excited_order: 3,
            points: Vec::new(),
            random_points: 0,
            fd_step: 1e-3,
            time: None,
            tolerance: 1e-14,
            decay_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticSpec {
    Exact,
    Float,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSpec {
    pub state: u32,
    /// Highest series index compared.
    pub order: usize,
    pub arithmetic: ArithmeticSpec,
    /// Spectrum levels listed in the diagonalization table.
    pub levels: usize,
    pub fd_size: usize,
    pub basis_size: usize,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            state: 0,
            order: 4,
            arithmetic: ArithmeticSpec::Exact,
            levels: 4,
            fd_size: 1001,
            basis_size: 160,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumMethodSpec {
    Pade,
    BorelPade,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResumSpec {
    pub state: u32,
    /// Number of series terms fed to the approximants.
    pub terms: usize,
    pub arithmetic: ArithmeticSpec,
    pub methods: Vec<ResumMethodSpec>,
    /// `[L, M]` pairs.
    pub approximants: Vec<[usize; 2]>,
    /// Values of ℏ at which the series is summed.
    pub hbar: Vec<f64>,
    pub fd_size: usize,
}

impl Default for ResumSpec {
    fn default() -> Self {
        Self {
            state: 0,
            terms: 10,
            arithmetic: ArithmeticSpec::Exact,
            methods: vec![ResumMethodSpec::Pade, ResumMethodSpec::BorelPade],
            approximants: vec![[5, 4], [4, 4]],
            hbar: vec![1.0],
            fd_size: 1001,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum TimeSpec {
    Uniform { horizon: f64, steps: usize },
    Stretched { steps: usize, min_step: f64, growth: f64 },
    Geometric { horizon: f64, min_step: f64, growth: f64 },
}

impl TimeSpec {
    pub fn build(&self) -> CliResult<TimeGrid> {
        let g = match *self {
            TimeSpec::Uniform { horizon, steps } => TimeGrid::uniform(horizon, steps),
            TimeSpec::Stretched { steps, min_step, growth } => TimeGrid::stretched(steps, min_step, growth),
            TimeSpec::Geometric { horizon, min_step, growth } => TimeGrid::geometric(horizon, min_step, growth),
        };
        Ok(g?)
    }

    fn check(&self) -> CliResult<()> {
        match *self {
            TimeSpec::Uniform { horizon, .. } => positive("time.horizon", horizon),
            TimeSpec::Stretched { min_step, growth, .. } => {
                positive("time.min_step", min_step)?;
                at_least_one("time.growth", growth)
            }
            TimeSpec::Geometric { horizon, min_step, growth } => {
                positive("time.horizon", horizon)?;
                positive("time.min_step", min_step)?;
                at_least_one("time.growth", growth)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub amplitude: f64,
    pub wavenumber: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default = "one_usize")]
    pub dim: usize,
    pub sites: usize,
    pub spacing: f64,
    /// `(power, coefficient)` pairs of the self-interaction `P`.
    pub polynomial: Vec<(u32, f64)>,
    pub time: TimeSpec,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    /// Explicit boundary values, row-major; overrides `modes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default = "default_field_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_cg_tolerance")]
    pub cg_tolerance: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
    #[serde(default = "default_max_cg")]
    pub max_cg: usize,
    #[serde(default = "default_decay")]
    pub decay_tolerance: f64,
    /// Seeded sites at which the gradient is checked against value differences.
    #[serde(default)]
    pub probes: usize,
    #[serde(default = "default_probe_step")]
    pub probe_step: f64,
    /// Amplitude multipliers of a virial sweep; empty skips it.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// `C` with `P(z) >= C z^2` for the Gaussian bound; `a_2` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<f64>,
    /// Also write the minimizer as a binary snapshot.
    #[serde(default)]
    pub snapshot: bool,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_field_tolerance() -> f64 {
    FieldOptions::default().tolerance
}
fn default_cg_tolerance() -> f64 {
    FieldOptions::default().cg_tolerance
}
fn default_max_newton() -> usize {
    FieldOptions::default().max_newton
}
fn default_max_cg() -> usize {
    FieldOptions::default().max_cg
}
fn default_decay() -> f64 {
    FieldOptions::default().decay_tolerance
}
fn default_probe_step() -> f64 {
    1e-3
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn at_least_one(name: &str, v: f64) -> CliResult<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be at least 1, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Check that the sections `command` needs are present and every tolerance is positive.
    pub fn check(&self, command: Command) -> CliResult<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        positive("validation.half_width", self.validation.half_width)?;
        if self.validation.points_per_axis < 2 {
            return Err(CliError::Config("validation.points_per_axis must be at least 2".into()));
        }
        let o = &self.oscillator;
        positive("oscillator.hbar", o.hbar)?;
        positive("oscillator.half_width", o.half_width)?;
        positive("oscillator.spacing", o.spacing)?;
        positive("oscillator.regularity_tolerance", o.regularity_tolerance)?;
        positive("oscillator.tolerance", o.tolerance)?;
        positive("oscillator.decay_tolerance", o.decay_tolerance)?;
        if o.fd_step < 0.0 {
            return Err(CliError::Config("oscillator.fd_step must be nonnegative".into()));
        }
        if let Some(t) = &o.time {
            t.check()?;
        }
        for (i, h) in self.resum.hbar.iter().enumerate() {
            positive(&format!("resum.hbar[{i}]"), *h)?;
        }
        match command {
            Command::Field => {
                let l = self.lattice.as_ref().ok_or_else(|| CliError::Config("`field` needs a [lattice] section".into()))?;
                positive("lattice.spacing", l.spacing)?;
                positive("lattice.tolerance", l.tolerance)?;
                positive("lattice.cg_tolerance", l.cg_tolerance)?;
                positive("lattice.decay_tolerance", l.decay_tolerance)?;
                positive("lattice.probe_step", l.probe_step)?;
                l.time.check()?;
            }
            _ => {
                if self.potential.is_none() {
                    return Err(CliError::Config(format!("`{}` needs a [potential] section", command.name())));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, seed included.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn potential(&self) -> CliResult<&PotentialSpec> {
        self.potential.as_ref().ok_or_else(|| CliError::Config("missing [potential] section".into()))
    }

    pub fn sampling(&self) -> SamplingBox {
        SamplingBox::cube(self.validation.half_width, self.validation.points_per_axis)
    }

    pub fn hierarchy_options(&self) -> HierarchyOptions {
        HierarchyOptions {
            stencil: self.oscillator.stencil,
            regularity_tolerance: self.oscillator.regularity_tolerance,
        }
    }

    pub fn trajectory_options(&self) -> TrajectoryOptions {
        TrajectoryOptions {
            tolerance: self.oscillator.tolerance,
            decay_tolerance: self.oscillator.decay_tolerance,
            ..TrajectoryOptions::default()
        }
    }
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn to_nd(&self) -> CliResult<PotentialND> {
        let terms = self.terms.iter().map(|t| Monomial::new(t.exponents.clone(), t.coeff)).collect();
        let v = PotentialND::new(self.mass, self.omega.clone(), terms)?;
        Ok(match &self.lambda {
            Some(l) => v.with_lambda(l.clone())?,
            None => v,
        })
    }

    pub fn to_1d(&self) -> CliResult<Potential1D> {
        if self.dim() != 1 {
            return Err(CliError::Config(format!("a one-dimensional potential is required, got {} frequencies", self.dim())));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match t.exponents.as_slice() {
                [p] => terms.push((*p, t.coeff)),
                _ => return Err(CliError::Config(format!("term exponents {:?} do not match one dimension", t.exponents))),
            }
        }
        let v = Potential1D::new(self.mass, self.omega[0], terms)?;
        Ok(match &self.lambda {
            Some(l) if l.len() == 1 => v.with_lambda(l[0])?,
            Some(l) => return Err(CliError::Config(format!("expected one lambda, got {}", l.len()))),
            None => v,
        })
    }
}

impl LatticeSpec {
    pub fn lattice(&self) -> CliResult<Lattice> {
        Ok(Lattice::new(self.dim, self.sites, self.spacing)?)
    }

    pub fn polynomial(&self) -> CliResult<FieldPolynomial> {
        Ok(FieldPolynomial::new(&self.polynomial)?)
    }

    pub fn boundary(&self) -> BoundaryData {
        match &self.values {
            Some(v) => BoundaryData::Values(v.clone()),
            None => BoundaryData::Modes(
                self.modes
                    .iter()
                    .map(|m| FourierMode { amplitude: m.amplitude, wavenumber: m.wavenumber.clone(), phase: m.phase })
                    .collect(),
            ),
        }
    }

    pub fn options(&self) -> FieldOptions {
        FieldOptions {
            tolerance: self.tolerance,
            max_newton: self.max_newton,
            cg_tolerance: self.cg_tolerance,
            max_cg: self.max_cg,
            decay_tolerance: self.decay_tolerance,
        }
    }
}
