use std::path::Path;

use polarsym_core::functional::{ConstraintDensity, Coupling, Integrand};
use polarsym_core::grid::Grid;
use polarsym_core::minimize::{FlowOptions, Problem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub cells: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub p: f64,
    pub integrands: Vec<String>,
    pub coupling: String,
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub eta: Option<f64>,
    pub max_iters: Option<usize>,
    pub symmetrize_every: Option<usize>,
    pub stop_tol: Option<f64>,
    pub window: Option<usize>,
    pub divergence_floor: Option<f64>,
    pub jitter: Option<f64>,
    pub shift: Option<[i64; 2]>,
}

/// Problem configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub grid: GridSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub flow: FlowSection,
}

impl ProblemConfig {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn problem(&self) -> Result<Problem, polarsym_core::Error> {
        let grid = Grid::new(self.grid.dim, self.grid.cells, self.grid.extent)?;
        let integrands = self
            .problem
            .integrands
            .iter()
            .map(|s| Integrand::parse(s))
            .collect::<Result<_, _>>()?;
        let constraints = self
            .problem
            .constraints
            .iter()
            .map(|s| ConstraintDensity::parse(s))
            .collect::<Result<_, _>>()?;
        Problem::new(grid, self.problem.p, integrands, Coupling::parse(&self.problem.coupling)?, constraints)
    }

    pub fn flow(&self, seed: u64) -> FlowOptions {
        let d = FlowOptions::default();
        let f = &self.flow;
        FlowOptions {
            eta: f.eta.unwrap_or(d.eta),
            max_iters: f.max_iters.unwrap_or(d.max_iters),
            symmetrize_every: f.symmetrize_every.unwrap_or(d.symmetrize_every),
            stop_tol: f.stop_tol.unwrap_or(d.stop_tol),
            window: f.window.unwrap_or(d.window),
            divergence_floor: f.divergence_floor.unwrap_or(d.divergence_floor),
            seed,
            jitter: f.jitter.unwrap_or(d.jitter),
            shift: f.shift.unwrap_or(d.shift),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let text = r#"
[grid]
dim = 1
cells = 101
extent = 20.0

[problem]
p = 2.0
integrands = ["power:p=2"]
coupling = "powerpair:p=2,sigma=1,m=1"
constraints = ["power:p=2"]

[flow]
symmetrize_every = 5
"#;
        let cfg: ProblemConfig = toml::from_str(text).unwrap();
        let problem = cfg.problem().unwrap();
        assert_eq!(problem.components(), 1);
        assert_eq!(cfg.flow(9).symmetrize_every, 5);
        assert_eq!(cfg.flow(9).seed, 9);
        assert!(toml::from_str::<ProblemConfig>("[grid]\ndim=1\ncells=3\nextent=1\nbogus=1\n").is_err());
    }
}
