//! Experiment specification: parsing, validation and the region/Hamiltonian
//! objects it resolves to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use lightcone::certify::{NBodyOptions, PowerLawOptions};
use lightcone::dispersion::{DecayLaw, HoppingTerm};
use lightcone::lattice::{PairInteraction, Sector, MANY_BODY_DIMENSION_CAP};
use lightcone::{DispersionRelation, LatticeBox, PropagationMethod, Potential, Region, Symbol};
use serde::{Deserialize, Serialize};

/// Kinetic part of the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionSpec {
    /// `t_0 = 2`, `t_{±1} = -1` on a chain.
    NearestNeighborChain,
    /// Strip defaults to the mass for the semi-relativistic symbol and to
    /// infinity otherwise.
    ClosedForm {
        dimension: usize,
        symbol: Symbol,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strip: Option<f64>,
    },
    Hopping {
        dimension: usize,
        terms: Vec<HoppingTerm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strip: Option<f64>,
    },
    DecayLaw { dimension: usize, law: DecayLaw },
}

impl DispersionSpec {
    pub fn build(&self) -> lightcone::Result<DispersionRelation> {
        match self {
            DispersionSpec::NearestNeighborChain => Ok(DispersionRelation::nearest_neighbor_chain()),
            DispersionSpec::ClosedForm { dimension, symbol, strip } => {
                let default = match symbol {
                    Symbol::SemiRelativistic { mass } => *mass,
                    _ => f64::INFINITY,
                };
                DispersionRelation::closed_form(*dimension, symbol.clone(), strip.unwrap_or(default))
            }
            DispersionSpec::Hopping { dimension, terms, strip } => {
                DispersionRelation::hopping(*dimension, terms.clone(), strip.unwrap_or(f64::INFINITY))
            }
            DispersionSpec::DecayLaw { dimension, law } => DispersionRelation::from_decay_law(*dimension, *law),
        }
    }
}

/// A region as an axis-aligned cuboid or an explicit site list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Interval(Vec<[i64; 2]>),
    Sites(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManyBodySpec {
    pub particles: usize,
    #[serde(default)]
    pub sector: Sector,
    #[serde(default)]
    pub interaction: PairInteraction,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

fn default_cap() -> usize {
    MANY_BODY_DIMENSION_CAP
}

/// Numerical settings of one certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    pub mu_points: usize,
    pub epsilon: f64,
    pub floor: f64,
    pub method: PropagationMethod,
    pub check_boundary: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let c = lightcone::CertificationConfig::default();
        Settings {
            times: c.times,
            mu_grid: None,
            mu_points: c.mu_points,
            epsilon: c.epsilon,
            floor: c.floor,
            method: c.method,
            check_boundary: c.check_boundary,
        }
    }
}

/// Initial state for the state and OTOC certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Random rank-`rank` density matrix on X (state light cone) or on the
    /// whole box (OTOC).
    RandomMixed {
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Pure state on a single site.
    Site { site: Vec<i64> },
    MaximallyMixed,
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::RandomMixed { rank: 2, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case", deny_unknown_fields)]
pub enum TheoremSpec {
    Mvb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        y: String,
        #[serde(default)]
        settings: Settings,
    },
    StateLightcone {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        y: String,
        #[serde(default)]
        state: StateSpec,
        #[serde(default)]
        settings: Settings,
    },
    Lca {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable_seed: Option<u64>,
        #[serde(default)]
        settings: Settings,
    },
    Lrb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        y: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable_seed: Option<u64>,
        #[serde(default)]
        settings: Settings,
    },
    Otoc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        y: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable_seed: Option<u64>,
        #[serde(default)]
        state: StateSpec,
        #[serde(default)]
        settings: Settings,
    },
    PowerMvb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        pairs: Vec<(String, String)>,
        #[serde(default)]
        options: PowerLawOptions,
        #[serde(default)]
        settings: Settings,
    },
    Nbody {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        x: String,
        y: String,
        #[serde(default)]
        options: NBodyOptions,
        #[serde(default)]
        settings: Settings,
    },
}

impl TheoremSpec {
    pub fn theorem(&self) -> lightcone::Theorem {
        use lightcone::Theorem;
        match self {
            TheoremSpec::Mvb { .. } => Theorem::Mvb,
            TheoremSpec::StateLightcone { .. } => Theorem::StateLightcone,
            TheoremSpec::Lca { .. } => Theorem::Lca,
            TheoremSpec::Lrb { .. } => Theorem::Lrb,
            TheoremSpec::Otoc { .. } => Theorem::Otoc,
            TheoremSpec::PowerMvb { .. } => Theorem::PowerMvb,
            TheoremSpec::Nbody { .. } => Theorem::Nbody,
        }
    }

    /// Output file stem; defaults to the theorem name.
    pub fn name(&self) -> String {
        let name = match self {
            TheoremSpec::Mvb { name, .. }
            | TheoremSpec::StateLightcone { name, .. }
            | TheoremSpec::Lca { name, .. }
            | TheoremSpec::Lrb { name, .. }
            | TheoremSpec::Otoc { name, .. }
            | TheoremSpec::PowerMvb { name, .. }
            | TheoremSpec::Nbody { name, .. } => name,
        };
        name.clone().unwrap_or_else(|| self.theorem().name().to_string())
    }

    pub fn settings(&self) -> &Settings {
        match self {
            TheoremSpec::Mvb { settings, .. }
            | TheoremSpec::StateLightcone { settings, .. }
            | TheoremSpec::Lca { settings, .. }
            | TheoremSpec::Lrb { settings, .. }
            | TheoremSpec::Otoc { settings, .. }
            | TheoremSpec::PowerMvb { settings, .. }
            | TheoremSpec::Nbody { settings, .. } => settings,
        }
    }

    /// Region names referenced by the entry, grouped into pairs that must be
    /// disjoint.
    fn region_pairs(&self) -> Vec<(&str, Option<&str>)> {
        match self {
            TheoremSpec::Lca { x, .. } => vec![(x.as_str(), None)],
            TheoremSpec::PowerMvb { pairs, .. } => pairs.iter().map(|(x, y)| (x.as_str(), Some(y.as_str()))).collect(),
            TheoremSpec::Mvb { x, y, .. }
            | TheoremSpec::StateLightcone { x, y, .. }
            | TheoremSpec::Lrb { x, y, .. }
            | TheoremSpec::Otoc { x, y, .. }
            | TheoremSpec::Nbody { x, y, .. } => vec![(x.as_str(), Some(y.as_str()))],
        }
    }
}

/// Settings of the `constants` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSpec {
    /// μ values for c(μ); `None` uses the default grid of the strip.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Differentiability orders for c̃ and M.
    pub m: Vec<usize>,
    /// Weight μ ∈ (0, 1) used in c̃.
    pub smooth_mu: f64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec { mu: None, m: vec![1, 2], smooth_mu: 0.5 }
    }
}

/// One experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dispersion: DispersionSpec,
    #[serde(rename = "box")]
    pub lattice: Vec<[i64; 2]>,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default)]
    pub regions: BTreeMap<String, RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub many_body: Option<ManyBodySpec>,
    pub theorems: Vec<TheoremSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("lightcone-out")
}

/// A specification problem, anchored at a line of the file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.path, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for SpecError {}

/// Line numbers of the spec text, for anchoring semantic errors.
struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    /// 1-based line of the `nth` occurrence of the JSON key `key`.
    fn key(&self, key: &str, nth: usize) -> Option<usize> {
        let needle = format!("\"{key}\"");
        let mut seen = 0;
        let mut from = 0;
        while let Some(pos) = self.text[from..].find(&needle) {
            let at = from + pos;
            from = at + needle.len();
            if self.text[from..].trim_start().starts_with(':') {
                if seen == nth {
                    return Some(self.text[..at].matches('\n').count() + 1);
                }
                seen += 1;
            }
        }
        None
    }

    /// Line of the `index`-th theorem entry.
    fn theorem(&self, index: usize) -> Option<usize> {
        let start = self.key("theorems", 0)?;
        let offset: usize = self.text.split_inclusive('\n').take(start - 1).map(str::len).sum();
        let sub = Locator { text: &self.text[offset..] };
        sub.key("theorem", index).map(|l| l + start - 1)
    }
}

/// A parsed and validated experiment with its resolved objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub path: String,
    pub dispersion: DispersionRelation,
    pub lattice: LatticeBox,
    pub regions: BTreeMap<String, Region>,
    /// Lines of the dispersion block and of each theorem entry, for
    /// anchoring run-time errors.
    pub dispersion_line: Option<usize>,
    pub theorem_lines: Vec<Option<usize>>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| SpecError {
            path: shown.clone(),
            line: None,
            column: None,
            message: format!("cannot read spec: {e}"),
        })?;
        Experiment::parse(&text, &shown)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, SpecError> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| SpecError {
            path: path.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })?;
        let loc = Locator { text };
        let err = |line: Option<usize>, message: String| SpecError { path: path.to_string(), line, column: None, message };

        if spec.theorems.is_empty() {
            return Err(err(loc.key("theorems", 0), "theorem list is empty".into()));
        }
        let dispersion = spec.dispersion.build().map_err(|e| err(loc.key("dispersion", 0), e.to_string()))?;
        let lattice = LatticeBox::new(spec.lattice.clone()).map_err(|e| err(loc.key("box", 0), e.to_string()))?;
        if dispersion.dimension() != lattice.dimension() {
            return Err(err(
                loc.key("dispersion", 0),
                format!("dispersion has dimension {} but the box has {}", dispersion.dimension(), lattice.dimension()),
            ));
        }
        spec.potential.sample(&lattice).map_err(|e| err(loc.key("potential", 0), e.to_string()))?;

        let mut regions = BTreeMap::new();
        for (name, r) in &spec.regions {
            let region = match r {
                RegionSpec::Interval(ranges) => Region::cuboid(name.clone(), &lattice, ranges),
                RegionSpec::Sites(sites) => Region::from_coords(name.clone(), &lattice, sites),
            }
            .map_err(|e| err(loc.key(name, 0), e.to_string()))?;
            if region.is_empty() {
                return Err(err(loc.key(name, 0), format!("region '{name}' is empty")));
            }
            regions.insert(name.clone(), region);
        }

        let theorem_lines: Vec<Option<usize>> = (0..spec.theorems.len()).map(|i| loc.theorem(i)).collect();
        let mut names = Vec::new();
        for (i, th) in spec.theorems.iter().enumerate() {
            let line = theorem_lines[i];
            let name = th.name();
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                return Err(err(line, format!("'{name}' is not a valid report name")));
            }
            if names.contains(&name) {
                return Err(err(line, format!("duplicate report name '{name}'; set distinct \"name\" fields")));
            }
            names.push(name);
            for (x, y) in th.region_pairs() {
                let rx = regions.get(x).ok_or_else(|| err(line, format!("unknown region '{x}'")))?;
                if let Some(y) = y {
                    let ry = regions.get(y).ok_or_else(|| err(line, format!("unknown region '{y}'")))?;
                    if rx.intersects(ry) {
                        return Err(err(line, format!("regions '{x}' and '{y}' overlap")));
                    }
                }
            }
            validate_settings(th.settings(), dispersion.strip()).map_err(|m| err(line, m))?;
            match th {
                TheoremSpec::Nbody { .. } if spec.many_body.is_none() => {
                    return Err(err(line, "nbody needs a \"many_body\" block".into()));
                }
                TheoremSpec::Lca { eta, .. } if !(*eta >= 1.0) => {
                    return Err(err(line, format!("eta = {eta} must be at least 1")));
                }
                TheoremSpec::StateLightcone { state: StateSpec::MaximallyMixed, .. } => {
                    return Err(err(line, "the state light cone needs a state supported in X".into()));
                }
                _ => {}
            }
        }
        if let Some(mb) = &spec.many_body {
            if mb.particles == 0 {
                return Err(err(loc.key("many_body", 0), "particle number must be at least 1".into()));
            }
        }
        if let Some(c) = &spec.constants {
            if let Some(mu) = &c.mu {
                if mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && *m < dispersion.strip())) {
                    return Err(err(loc.key("constants", 0), "constants μ values must lie in (0, strip)".into()));
                }
            }
            if !(c.smooth_mu > 0.0 && c.smooth_mu < 1.0) {
                return Err(err(loc.key("constants", 0), "smooth_mu must lie in (0, 1)".into()));
            }
        }
        let dispersion_line = loc.key("dispersion", 0);
        Ok(Experiment { spec, path: path.to_string(), dispersion, lattice, regions, dispersion_line, theorem_lines })
    }

    pub fn region(&self, name: &str) -> &Region {
        &self.regions[name]
    }
}

fn validate_settings(s: &Settings, strip: f64) -> Result<(), String> {
    if s.times.is_empty() {
        return Err("time grid is empty".into());
    }
    if s.times.iter().any(|t| !t.is_finite() || *t < 0.0) || s.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err("times must be non-negative and strictly increasing".into());
    }
    if let Some(grid) = &s.mu_grid {
        if grid.is_empty() {
            return Err("μ grid is empty".into());
        }
        if let Some(mu) = grid.iter().find(|m| !(**m > 0.0 && **m < strip)) {
            return Err(format!("μ = {mu} lies outside the strip (0, {strip})"));
        }
    } else if s.mu_points == 0 {
        return Err("mu_points must be positive".into());
    }
    if !(s.epsilon > 0.0 && s.epsilon < 1.0) {
        return Err("epsilon must lie in (0, 1)".into());
    }
    if !(s.floor > 0.0) {
        return Err("floor must be positive".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{
  "dispersion": { "kind": "nearest_neighbor_chain" },
  "box": [[-20, 20]],
  "regions": {
    "X": { "interval": [[-20, -5]] },
    "Y": { "interval": [[5, 20]] },
    "Z": { "interval": [[-6, 0]] }
  },
  "theorems": [
    { "theorem": "mvb", "x": "X", "y": "Y" },
    { "theorem": "lrb", "x": "X", "y": "Z" }
  ]
}"#;

    #[test]
    fn overlap_is_anchored_at_the_theorem_line() {
        let e = Experiment::parse(SPEC, "s.json").unwrap_err();
        assert_eq!(e.line, Some(11));
        assert!(e.message.contains("overlap"));
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let e = Experiment::parse("{\n  \"box\": [[0, 1]],\n  oops\n}", "s.json").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.column.is_some());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SPEC.replace("\"seed\"", "\"sed\"").replace("\"theorems\"", "\"sed\": 1, \"theorems\"");
        assert!(Experiment::parse(&text, "s.json").is_err());
    }

    #[test]
    fn semi_relativistic_strip_defaults_to_the_mass() {
        let d = DispersionSpec::ClosedForm { dimension: 1, symbol: Symbol::SemiRelativistic { mass: 2.0 }, strip: None };
        assert_eq!(d.build().unwrap().strip(), 2.0);
    }
}
