//! Run configuration: a TOML file whose every key has a default that
//! reproduces the built-in example profile.

use std::path::{Path, PathBuf};

use halfline::boundary_data::ProfileSpec;
use halfline::direct_scattering::OdeTol;
use halfline::quadrature::QuadTol;
use halfline::rhp_solver::GridOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub profile: ProfileConfig,
    pub grids: Grids,
    pub tolerances: Tolerances,
    pub rhp: RhpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    /// "example", "sech-tanh" or "table".
    pub name: String,
    /// Named parameters of a built-in profile.
    pub params: std::collections::BTreeMap<String, f64>,
    /// CSV with header `t,H,U`, relative to the config file.
    pub table: Option<PathBuf>,
    pub s0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Uniform k-grid size for `emit-transforms`, endpoints included.
    pub k_points: usize,
    /// k-points for `scan-gamma`, chosen outside the exclusion windows.
    pub scan_k_points: usize,
    /// ε sweep for `scan-gamma`, strictly decreasing.
    pub eps: Vec<f64>,
    /// [t_lo, t_hi] of the log-spaced `vacuum-boundary` grid.
    pub vacuum_t: [f64; 2],
    pub vacuum_points: usize,
    pub whitham_t: Vec<f64>,
    pub whitham_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub ode_step_factor: f64,
    pub quad_abs: f64,
    pub quad_rel: f64,
    pub newton: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhpConfig {
    pub x: f64,
    pub t: f64,
    pub eps: f64,
    pub nodes_per_panel: usize,
    pub levels: usize,
    pub ratio: f64,
    pub max_width: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            profile: ProfileConfig::default(),
            grids: Grids::default(),
            tolerances: Tolerances::default(),
            rhp: RhpConfig::default(),
        }
    }
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { name: "example".into(), params: Default::default(), table: None, s0: 0.0 }
    }
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            k_points: 201,
            scan_k_points: 15,
            eps: vec![0.2, 0.1, 0.05],
            vacuum_t: [1e-2, 80.0],
            vacuum_points: 40,
            whitham_t: vec![0.25, 0.75, 1.5, 3.0],
            whitham_x: vec![0.0, 0.05, 0.1, 0.15, 0.2],
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        let ode = OdeTol::default();
        Self {
            ode_rtol: ode.rtol,
            ode_atol: ode.atol,
            ode_step_factor: ode.step_factor,
            quad_abs: 1e-13,
            quad_rel: 1e-12,
            newton: 1e-10,
        }
    }
}

impl Default for RhpConfig {
    fn default() -> Self {
        let g = GridOptions::default();
        Self {
            x: 0.05,
            t: 1.0,
            eps: 0.2,
            nodes_per_panel: g.nodes_per_panel,
            levels: g.levels,
            ratio: g.ratio,
            max_width: g.max_width,
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub nodes: Option<usize>,
}

impl RunConfig {
    /// Parse TOML text; relative table paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(p) = &cfg.profile.table
            && p.is_relative()
        {
            cfg.profile.table = Some(base.join(p));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(e) = o.eps {
            self.grids.eps = vec![e];
            self.rhp.eps = e;
        }
        if let Some(t) = o.t {
            self.grids.whitham_t = vec![t];
            self.rhp.t = t;
        }
        if let Some(x) = o.x {
            self.grids.whitham_x = vec![x];
            self.rhp.x = x;
        }
        if let Some(n) = o.nodes {
            self.rhp.nodes_per_panel = n;
        }
    }

    /// Every tolerance positive, ε sweep strictly decreasing, grids non-empty.
    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        for (name, v) in [
            ("ode_rtol", t.ode_rtol),
            ("ode_atol", t.ode_atol),
            ("ode_step_factor", t.ode_step_factor),
            ("quad_abs", t.quad_abs),
            ("quad_rel", t.quad_rel),
            ("newton", t.newton),
            ("rhp.ratio", self.rhp.ratio),
            ("rhp.max_width", self.rhp.max_width),
            ("rhp.eps", self.rhp.eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        let g = &self.grids;
        if g.eps.is_empty() || g.whitham_t.is_empty() || g.whitham_x.is_empty() {
            return Err("grids must be non-empty".into());
        }
        if g.k_points < 2 || g.scan_k_points < 1 || g.vacuum_points < 1 {
            return Err("grids must be non-empty (k_points needs at least 2)".into());
        }
        if g.eps.iter().any(|&e| !(e > 0.0)) || g.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(format!("eps sweep must be positive and strictly decreasing, got {:?}", g.eps));
        }
        if !(g.vacuum_t[0] > 0.0 && g.vacuum_t[0] <= g.vacuum_t[1]) {
            return Err(format!("vacuum_t must satisfy 0 < lo <= hi, got {:?}", g.vacuum_t));
        }
        if !(self.rhp.ratio < 1.0) {
            return Err("rhp.ratio must be below 1".into());
        }
        if self.profile.name == "table" && self.profile.table.is_none() {
            return Err("profile 'table' needs a table path".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output
    /// directory does not affect results and is left out.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&RunConfig { output_dir: PathBuf::new(), ..self.clone() }).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn ode_tol(&self) -> OdeTol {
        let t = &self.tolerances;
        OdeTol { rtol: t.ode_rtol, atol: t.ode_atol, step_factor: t.ode_step_factor }
    }

    pub fn quad_tol(&self) -> QuadTol {
        QuadTol::new(self.tolerances.quad_abs, self.tolerances.quad_rel)
    }

    pub fn grid_options(&self) -> GridOptions {
        let r = &self.rhp;
        GridOptions { nodes_per_panel: r.nodes_per_panel, levels: r.levels, ratio: r.ratio, max_width: r.max_width }
    }

    /// The profile description; tables are read here.
    pub fn profile_spec(&self) -> Result<ProfileSpec, String> {
        let p = &self.profile;
        if p.name != "table" {
            let params = p.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
            return Ok(ProfileSpec::Builtin { name: p.name.clone(), params });
        }
        let path = p.table.as_ref().expect("validated");
        let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<[f64; 3]>() {
            rows.push(rec.map_err(|e| format!("{}: {e}", path.display()))?);
        }
        Ok(ProfileSpec::Table(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(RunConfig::from_toml("", Path::new(".")).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c = RunConfig::from_toml("[grids]\neps = [0.3, 0.2]\n[rhp]\nt = 2.0\n", Path::new(".")).unwrap();
        assert_eq!(c.grids.eps, vec![0.3, 0.2]);
        assert_eq!(c.rhp.t, 2.0);
        assert_eq!(c.grids.k_points, 201);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = Path::new(".");
        assert!(RunConfig::from_toml("[grids]\nbogus = 1\n", base).is_err());
        for text in [
            "[grids]\neps = [0.1, 0.2]\n",
            "[grids]\neps = []\n",
            "[grids]\nwhitham_x = []\n",
            "[tolerances]\node_rtol = 0.0\n",
            "[tolerances]\nnewton = -1e-8\n",
            "[profile]\nname = \"table\"\n",
        ] {
            let c = RunConfig::from_toml(text, base).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn table_path_resolves_against_config_dir() {
        let c = RunConfig::from_toml("[profile]\nname = \"table\"\ntable = \"h.csv\"\n", Path::new("/cfg")).unwrap();
        assert_eq!(c.profile.table, Some(PathBuf::from("/cfg/h.csv")));
    }

    #[test]
    fn overrides_and_hash() {
        let mut c = RunConfig::default();
        let h = c.hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, RunConfig::default().hash());
        c.apply(Overrides { eps: Some(0.3), t: None, x: Some(0.5), nodes: Some(24) });
        assert_eq!((c.grids.eps.clone(), c.rhp.eps, c.rhp.x, c.rhp.nodes_per_panel), (vec![0.3], 0.3, 0.5, 24));
        assert_eq!(c.grids.whitham_x, vec![0.5]);
        assert_ne!(c.hash(), h);
        let moved = RunConfig { output_dir: "elsewhere".into(), ..c.clone() };
        assert_eq!(moved.hash(), c.hash());
    }
}
