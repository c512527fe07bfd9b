//! Run configuration: the JSON file, command-line overrides and the table of
//! defaults they fall back on.

use std::path::Path;

use perfhom::complex::{format_complex, parse_complex};
use perfhom::geometry::{BoundaryKind, DomainShape, DomainSpec, PerforationSpec};
use perfhom::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Complex number carried as an `re+imi` string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex(pub C64);

impl Serialize for Complex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_complex(self.0))
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_complex(&text).map(Complex).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    SinSin,
    Constant(Complex),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub extents: Vec<f64>,
    #[serde(default)]
    pub strip: bool,
}

/// Contents of a `--config` file. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub domain: Option<DomainConfig>,
    pub bc: Option<String>,
    pub alpha: Option<Complex>,
    pub dim: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub radius_override: Option<f64>,
    pub neumann_exponent: Option<f64>,
    pub h_far: Option<f64>,
    pub h_max: Option<f64>,
    pub h_ratio: Option<f64>,
    pub grading: Option<f64>,
    pub source: Option<SourceConfig>,
    pub compute_delta: Option<bool>,
    pub compute_lambda1: Option<bool>,
    pub compare_naive: Option<bool>,
    pub delta_tol: Option<f64>,
    pub eig_tol: Option<f64>,
    pub expm_tol: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub samples: Option<usize>,
    pub sources: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub strip_length: Option<f64>,
    pub cubes: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub base: Option<usize>,
    pub distances: Option<Vec<usize>>,
    pub r_trunc: Option<f64>,
    pub nodes: Option<usize>,
    pub inner_radius: Option<f64>,
    pub seed: Option<u64>,
    pub record_timing: Option<bool>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }
}

/// Effective parameters of a run. `Default` is the defaults table; the
/// manifest records the resolved values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effective {
    /// Box `[0,L₁]×[0,L₂]`; the strip commands use `strip_length × 1`.
    pub domain: DomainConfig,
    /// `dirichlet`, `neumann` or `robin`.
    pub bc: String,
    /// Robin coefficient.
    pub alpha: Complex,
    /// Dimension for the radial computations (`mu`, `capacity`, `corrector`).
    pub dim: usize,
    /// Single-ε commands.
    pub epsilon: f64,
    /// Sweeps.
    pub epsilons: Vec<f64>,
    pub radius_override: Option<f64>,
    /// Neumann radius rule `a = ε^p`.
    pub neumann_exponent: f64,
    /// Fixed far-field mesh size; overrides `min(h_max, h_ratio·ε)`.
    pub h_far: Option<f64>,
    pub h_max: f64,
    pub h_ratio: f64,
    /// Mesh size growth away from the holes.
    pub grading: f64,
    pub source: SourceConfig,
    pub compute_delta: bool,
    pub compute_lambda1: bool,
    /// Also report the defect against the limit without strange term.
    pub compare_naive: bool,
    /// Relative tolerance of the δ_ε operator-norm estimate.
    pub delta_tol: f64,
    pub eig_tol: f64,
    pub expm_tol: f64,
    /// Real-part window for spectra.
    pub window: [f64; 2],
    /// Gap margin.
    pub delta: f64,
    /// Shift of the decay problem `(−Δ + λ)u = f`.
    pub lambda: f64,
    /// Numerical-range sample size.
    pub samples: usize,
    /// Random sources per decay check.
    pub sources: usize,
    pub t_grid: Vec<f64>,
    /// Strip length; `None` picks 8 (decay, decompose) or 10 (interaction).
    pub strip_length: Option<f64>,
    /// Occupied cubes of the decomposition check.
    pub cubes: Vec<usize>,
    pub n: usize,
    /// Reference cube of the interaction check.
    pub base: usize,
    pub distances: Vec<usize>,
    /// Capacity truncation radius and node count.
    pub r_trunc: f64,
    pub nodes: usize,
    /// Corrector inner radius; `None` uses the scaling rule.
    pub inner_radius: Option<f64>,
    pub seed: u64,
    /// When false the `seconds` column is written as 0.
    pub record_timing: bool,
}

impl Default for Effective {
    fn default() -> Self {
        Self {
            domain: DomainConfig {
                extents: vec![1.0, 1.0],
                strip: false,
            },
            bc: "robin".into(),
            alpha: Complex(C64::new(1.0, 0.0)),
            dim: 2,
            epsilon: 0.125,
            epsilons: vec![0.25, 0.125, 0.0625],
            radius_override: None,
            neumann_exponent: perfhom::geometry::DEFAULT_NEUMANN_EXPONENT,
            h_far: None,
            h_max: 1.0 / 32.0,
            h_ratio: 0.5,
            grading: 1.3,
            source: SourceConfig::SinSin,
            compute_delta: true,
            compute_lambda1: true,
            compare_naive: true,
            delta_tol: 1e-3,
            eig_tol: 1e-9,
            expm_tol: 1e-6,
            window: [1.0, 30.0],
            delta: 0.2,
            lambda: 1.0,
            samples: 200,
            sources: 20,
            t_grid: (0..=10).map(|k| 0.5 * k as f64).collect(),
            strip_length: None,
            cubes: (1..=6).collect(),
            n: 3,
            base: 1,
            distances: (2..=8).collect(),
            r_trunc: 100.0,
            nodes: 2000,
            inner_radius: None,
            seed: 1,
            record_timing: true,
        }
    }
}

/// Command-line overrides; they win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub bc: Option<String>,
    pub alpha: Option<String>,
    pub dim: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub h_far: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

macro_rules! take {
    ($eff:ident, $cfg:ident, $($f:ident),*) => {
        $(if let Some(v) = $cfg.$f.clone() { $eff.$f = v; })*
    };
}

impl Effective {
    pub fn resolve(command: &str, cfg: &RunConfig, o: &Overrides) -> Result<Self, CliError> {
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(CliError::Validation(format!("config is for `{c}`, not `{command}`")));
            }
        }
        let mut e = Effective::default();
        if command == "capacity" {
            e.dim = 3;
        }
        take!(
            e, cfg, domain, bc, alpha, dim, epsilon, epsilons, neumann_exponent, h_max, h_ratio, grading, source,
            compute_delta, compute_lambda1, compare_naive, delta_tol, eig_tol, expm_tol, window, delta, lambda, samples,
            sources, t_grid, cubes, n, base, distances, r_trunc, nodes, seed, record_timing
        );
        e.radius_override = cfg.radius_override.or(e.radius_override);
        e.h_far = cfg.h_far.or(e.h_far);
        e.strip_length = cfg.strip_length.or(e.strip_length);
        e.inner_radius = cfg.inner_radius.or(e.inner_radius);
        if let Some(v) = &o.bc {
            e.bc = v.clone();
        }
        if let Some(v) = &o.alpha {
            e.alpha = Complex(parse_complex(v).map_err(|err| CliError::Validation(err.to_string()))?);
        }
        if let Some(v) = o.dim {
            e.dim = v;
        }
        if let Some(v) = &o.eps {
            if v.len() == 1 {
                e.epsilon = v[0];
            }
            e.epsilons = v.clone();
        }
        if o.h_far.is_some() {
            e.h_far = o.h_far;
        }
        if let Some(v) = o.lambda {
            e.lambda = v;
        }
        if let Some(v) = o.delta {
            e.delta = v;
        }
        if let Some(v) = o.n {
            e.n = v;
        }
        if let Some(v) = o.seed {
            e.seed = v;
        }
        e.validate(command)?;
        Ok(e)
    }

    pub fn boundary(&self) -> Result<BoundaryKind, CliError> {
        let bc = match self.bc.as_str() {
            "dirichlet" => BoundaryKind::Dirichlet,
            "neumann" => BoundaryKind::Neumann,
            "robin" => BoundaryKind::Robin(self.alpha.0),
            other => return Err(CliError::Validation(format!("unknown boundary condition `{other}`"))),
        };
        bc.validate().map_err(CliError::from_core)?;
        Ok(bc)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec, CliError> {
        let shape = if self.domain.strip { DomainShape::Strip } else { DomainShape::Rectangle };
        DomainSpec::new(self.domain.extents.clone(), shape).map_err(CliError::from_core)
    }

    pub fn strip_spec(&self, command: &str) -> Result<DomainSpec, CliError> {
        let default = if command == "interaction" { 10.0 } else { 8.0 };
        DomainSpec::strip(self.strip_length.unwrap_or(default), 1.0).map_err(CliError::from_core)
    }

    pub fn perforation(&self, domain: &DomainSpec, eps: f64) -> Result<PerforationSpec, CliError> {
        let mut spec = PerforationSpec::new(domain.clone(), eps, self.boundary()?)
            .and_then(|s| s.with_neumann_exponent(self.neumann_exponent))
            .map_err(CliError::from_core)?;
        if let Some(r) = self.radius_override {
            spec = spec.with_radius_override(r).map_err(CliError::from_core)?;
        }
        Ok(spec)
    }

    pub fn h_far_for(&self, eps: f64) -> f64 {
        self.h_far.unwrap_or(self.h_max.min(self.h_ratio * eps))
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self, command: &str) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        self.boundary()?;
        let positive = [
            ("h_max", self.h_max),
            ("h_ratio", self.h_ratio),
            ("delta_tol", self.delta_tol),
            ("eig_tol", self.eig_tol),
            ("expm_tol", self.expm_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if !(self.grading >= 1.0) {
            return bad(format!("grading must be at least 1, got {}", self.grading));
        }
        if let Some(h) = self.h_far {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("h_far must be positive, got {h}"));
            }
        }
        match command {
            "mu" | "corrector" => {
                if !(2..=3).contains(&self.dim) {
                    return bad(format!("dim must be 2 or 3, got {}", self.dim));
                }
                let list = if command == "mu" { &self.epsilons[..] } else { std::slice::from_ref(&self.epsilon) };
                if let Some(e) = list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                    return bad(format!("epsilon must lie in (0,1), got {e}"));
                }
            }
            "capacity" => {
                if self.dim < 3 {
                    return bad("capacity needs dim ≥ 3".into());
                }
                if !(self.r_trunc > 1.0) || self.nodes < 3 {
                    return bad("capacity needs r_trunc > 1 and at least 3 nodes".into());
                }
            }
            "resolvent-sweep" => {
                if self.epsilons.is_empty() {
                    return bad("epsilons must not be empty".into());
                }
                let domain = self.domain_spec()?;
                for &eps in &self.epsilons {
                    self.perforation(&domain, eps)?;
                }
            }
            "solve" | "spectrum" | "gap" | "numrange" | "semigroup" | "mesh-audit" => {
                self.perforation(&self.domain_spec()?, self.epsilon)?;
                if !(self.window[0] <= self.window[1]) {
                    return bad("window must be increasing".into());
                }
                if command == "numrange" && self.samples == 0 {
                    return bad("samples must be positive".into());
                }
                if command == "gap" && !(self.delta > 0.0) {
                    return bad("gap margin must be positive".into());
                }
                if command == "semigroup" {
                    if self.t_grid.is_empty()
                        || self.t_grid.iter().any(|t| !(*t >= 0.0))
                        || self.t_grid.windows(2).any(|w| w[1] <= w[0])
                    {
                        return bad("t_grid must be increasing and nonnegative".into());
                    }
                    if let BoundaryKind::Robin(a) = self.boundary()? {
                        if a.re <= 0.0 {
                            return bad("semigroup runs need Re α > 0".into());
                        }
                    }
                }
            }
            "decay" => {
                self.strip_spec(command)?;
                if !(self.lambda > 0.5) {
                    return bad(format!("decay estimates need λ > 1/2, got {}", self.lambda));
                }
            }
            "interaction" | "decompose" => {
                let strip = self.strip_spec(command)?;
                self.perforation(&strip, self.epsilon)?;
                let cubes = strip.extents[0].floor() as usize;
                if command == "interaction" {
                    if self.distances.iter().any(|&k| k == 0 || self.base + k >= cubes) || self.base >= cubes {
                        return bad(format!("interaction cubes must be distinct and inside 0..{cubes}"));
                    }
                } else {
                    if self.n <= 1 {
                        return bad("decomposition needs n > 1".into());
                    }
                    if self.cubes.iter().any(|&c| c >= cubes) {
                        return bad(format!("cubes must lie inside 0..{cubes}"));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"epsilon": 0.1, "epsilonn": 2}"#).unwrap_err();
        assert!(err.to_string().contains("epsilonn"));
    }

    #[test]
    fn complex_fields_use_the_string_form() {
        let cfg: RunConfig = serde_json::from_str(r#"{"alpha": "1 + 2i", "source": {"constant": "3-1i"}}"#).unwrap();
        assert_eq!(cfg.alpha, Some(Complex(C64::new(1.0, 2.0))));
        assert_eq!(cfg.source, Some(SourceConfig::Constant(Complex(C64::new(3.0, -1.0)))));
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpha": "1+2"}"#).is_err());
        assert_eq!(serde_json::to_string(&Complex(C64::new(1.0, -0.5))).unwrap(), "\"1-0.5i\"");
    }

    #[test]
    fn overrides_win_and_invalid_epsilon_fails() {
        let cfg: RunConfig = serde_json::from_str(r#"{"epsilons": [0.25, 0.125], "bc": "neumann"}"#).unwrap();
        let o = Overrides {
            bc: Some("robin".into()),
            alpha: Some("1+1i".into()),
            ..Default::default()
        };
        let e = Effective::resolve("resolvent-sweep", &cfg, &o).unwrap();
        assert_eq!(e.boundary().unwrap(), BoundaryKind::Robin(C64::new(1.0, 1.0)));
        assert_eq!(e.epsilons, vec![0.25, 0.125]);
        let bad: RunConfig = serde_json::from_str(r#"{"epsilons": [0.25, 1.5]}"#).unwrap();
        assert!(matches!(
            Effective::resolve("resolvent-sweep", &bad, &Overrides::default()),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn command_mismatch_is_rejected() {
        let cfg: RunConfig = serde_json::from_str(r#"{"command": "mu"}"#).unwrap();
        assert!(Effective::resolve("gap", &cfg, &Overrides::default()).is_err());
        assert_eq!(Effective::resolve("capacity", &RunConfig::default(), &Overrides::default()).unwrap().dim, 3);
    }
}
