//! One function per subcommand. Each writes its artifacts under the
//! output directory and reports failures with their exit class.

use std::fs;
use std::path::{Path, PathBuf};

use halfline::acceptance;
use halfline::boundary_data::{BoundaryProfile, build_profile, default_validation_grid, validate_assumption};
use halfline::direct_scattering::{compare_gamma, default_compare_grid};
use halfline::gfunction::{BandPoint, GFunction, NewtonOptions};
use halfline::rhp_solver::RhpSolver;
use halfline::spectral_transforms::{SpectralTransforms, TransformTable};
use halfline::vacuum_domain::{log_grid, vacuum_curve};
use serde::Serialize;
use serde_json::{Value, json};

use crate::config::RunConfig;

/// Why a command failed; maps one-to-one onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Validation(String),
    Numerical(String),
    Acceptance(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Numerical(_) => 4,
            Failure::Acceptance(_) => 5,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (kind, msg) = match self {
            Failure::Io(m) => ("i/o error", m),
            Failure::Config(m) => ("config error", m),
            Failure::Validation(m) => ("validation failed", m),
            Failure::Numerical(m) => ("numerical failure", m),
            Failure::Acceptance(m) => ("acceptance failed", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl From<halfline::Error> for Failure {
    fn from(e: halfline::Error) -> Self {
        if e.is_numerical() { Failure::Numerical(e.to_string()) } else { Failure::Validation(e.to_string()) }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = Result<Vec<PathBuf>, Failure>;

/// Shortest round-trip form; switches to exponent notation for tiny values.
fn num(v: &f64) -> String {
    format!("{v:?}")
}

/// Shared state for one invocation.
pub struct Run {
    pub cfg: RunConfig,
    pub command: &'static str,
    hash: String,
}

impl Run {
    pub fn new(cfg: RunConfig, command: &'static str) -> Self {
        let hash = cfg.hash();
        Self { cfg, command, hash }
    }

    fn out(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.cfg.output_dir)
            .map_err(|e| Failure::Io(format!("{}: {e}", self.cfg.output_dir.display())))?;
        Ok(self.cfg.output_dir.join(name))
    }

    fn meta(&self, extra: Value) -> Value {
        let mut m = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": self.hash,
            "tolerances": self.cfg.tolerances,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
            m.extend(e);
        }
        m
    }

    fn write_json(&self, path: &Path, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }

    /// CSV file plus `<name>.meta.json` sidecar.
    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>], extra: Value) -> Outcome {
        let path = self.out(name)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        let side = self.out(&format!("{name}.meta.json"))?;
        self.write_json(&side, &self.meta(extra))?;
        Ok(vec![path, side])
    }

    fn profile(&self) -> Result<BoundaryProfile, Failure> {
        let spec = self.cfg.profile_spec().map_err(Failure::Config)?;
        Ok(build_profile(&spec, self.cfg.profile.s0)?)
    }

    /// Profile that has passed every admissibility clause, with its transforms.
    fn transforms(&self) -> Result<SpectralTransforms, Failure> {
        let p = self.profile()?;
        let report = validate_assumption(&p, &default_validation_grid(&p));
        if !report.all_pass() {
            let failed: Vec<_> = report.clauses.iter().filter(|c| !c.pass).map(|c| c.name).collect();
            return Err(Failure::Validation(format!("profile fails {failed:?}; run validate-data for details")));
        }
        let mut st = SpectralTransforms::new(p)?;
        st.tol = self.cfg.quad_tol();
        Ok(st)
    }

    pub fn validate_data(&self) -> Outcome {
        let p = self.profile()?;
        let grid = default_validation_grid(&p);
        let report = validate_assumption(&p, &grid);
        let path = self.out("validation.json")?;
        let meta = self.meta(json!({ "grid_points": grid.len() }));
        self.write_json(&path, &json!({ "meta": meta, "pass": report.all_pass(), "report": report }))?;
        if !report.all_pass() {
            let failed: Vec<_> = report.clauses.iter().filter(|c| !c.pass).map(|c| c.name).collect();
            return Err(Failure::Validation(format!("clauses {failed:?} fail, see {}", path.display())));
        }
        Ok(vec![path])
    }

    pub fn emit_transforms(&self) -> Outcome {
        let st = self.transforms()?;
        let table = TransformTable::build(&st, &TransformTable::uniform_grid(&st.crit, self.cfg.grids.k_points))?;
        let rows: Vec<Vec<String>> = (0..table.kgrid.len())
            .map(|i| {
                [table.kgrid[i], table.tau[i], table.phi[i], table.dphi[i], table.d2phi[i], table.ell[i]]
                    .iter()
                    .map(num)
                    .collect()
            })
            .collect();
        let c = &st.crit;
        let extra = json!({
            "S_inf": table.s_inf,
            "C_a": table.slopes.c_a,
            "C_b": table.slopes.c_b,
            "dtau_a": table.slopes.dtau_a,
            "dtau_b": table.slopes.dtau_b,
            "k_a": c.k_a,
            "k_b": c.k_b,
            "k0": st.profile.k0(),
            "kinf": st.profile.kinf(),
            "k_points": table.kgrid.len(),
            "exclusion_radius": table.exclusion_radius,
        });
        self.write_csv("transforms.csv", &["k", "tau", "phi", "dphi", "d2phi", "ell"], &rows, extra)
    }

    pub fn scan_gamma(&self) -> Outcome {
        let st = self.transforms()?;
        let kgrid = default_compare_grid(&st, self.cfg.grids.scan_k_points);
        let table = compare_gamma(&st, &kgrid, &self.cfg.grids.eps, self.cfg.ode_tol())?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                [r.k, r.eps, r.gamma0.0, r.gamma0.1, r.abs_err, r.det_defect].iter().map(num).collect()
            })
            .collect();
        let extra = json!({ "kgrid": kgrid, "eps": self.cfg.grids.eps, "max_err": table.max_err, "order": table.order });
        self.write_csv(
            "scan_gamma.csv",
            &["k", "eps", "re_gamma0", "im_gamma0", "abs_err_vs_tilde", "det_defect"],
            &rows,
            extra,
        )
    }

    pub fn vacuum_boundary(&self) -> Outcome {
        let st = self.transforms()?;
        let g = &self.cfg.grids;
        let table = TransformTable::build(&st, &TransformTable::uniform_grid(&st.crit, 301))?;
        let tgrid = log_grid(g.vacuum_t[0], g.vacuum_t[1], g.vacuum_points);
        let curve = vacuum_curve(&st, &table, &tgrid)?;
        let rows: Vec<Vec<String>> = (0..tgrid.len())
            .map(|i| [curve.tgrid[i], curve.x[i], curve.kstar[i], curve.x0[i], curve.xinf[i]].iter().map(num).collect())
            .collect();
        self.write_csv("vacuum_boundary.csv", &["t", "X", "kstar", "X0", "Xinf"], &rows, json!({ "t_points": tgrid.len() }))
    }

    pub fn whitham(&self) -> Outcome {
        let st = self.transforms()?;
        let mut g = GFunction::new(&st);
        g.tol = self.cfg.quad_tol();
        g.newton = NewtonOptions { tol: self.cfg.tolerances.newton, ..NewtonOptions::default() };
        let mut xs = self.cfg.grids.whitham_x.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for &t in &self.cfg.grids.whitham_t {
            match whitham_column(&g, t, &xs) {
                Ok((pts, stop)) => {
                    for (bp, sigma) in pts {
                        rows.push(vec![
                            num(&bp.x),
                            num(&bp.t),
                            num(&bp.alpha),
                            num(&bp.beta),
                            num(&bp.eta()),
                            num(&bp.u()),
                            num(&sigma),
                            bp.config.to_string(),
                            num(&bp.newton_residual),
                        ]);
                    }
                    if let Some(why) = stop {
                        skipped.push(json!({ "t": t, "reason": why }));
                    }
                }
                Err(e) => skipped.push(json!({ "t": t, "reason": e.to_string() })),
            }
        }
        let extra = json!({ "t_grid": self.cfg.grids.whitham_t, "x_grid": xs, "clipped": skipped });
        self.write_csv(
            "whitham.csv",
            &["x", "t", "alpha", "beta", "eta", "u", "sigma", "config", "newton_residual"],
            &rows,
            extra,
        )
    }

    pub fn solve_rhp(&self) -> Outcome {
        let st = self.transforms()?;
        let r = &self.cfg.rhp;
        let solver = RhpSolver::with_options(&st, self.cfg.grid_options())?;
        let sol = solver.solve(r.x, r.t, r.eps)?;
        let path = self.out("rhp.json")?;
        let meta = self.meta(json!({
            "x": r.x,
            "t": r.t,
            "eps": r.eps,
            "discretization": solver.disc,
        }));
        let value = json!({
            "q_re": sol.q.re,
            "q_im": sol.q.im,
            "eps_qx_re": sol.eps_qx.re,
            "eps_qx_im": sol.eps_qx.im,
            "jump_residual": sol.jump_residual,
            "cond_estimate": sol.cond_estimate,
            "det_defect": sol.det_defect,
            "meta": meta,
        });
        self.write_json(&path, &value)?;
        Ok(vec![path])
    }

    pub fn verify(&self) -> Outcome {
        let st = self.transforms()?;
        let mut results = Vec::new();
        for (id, ..) in acceptance::CRITERIA {
            let r = acceptance::run_criterion(&st, id).expect("listed criterion");
            println!("{r}");
            results.push(r);
        }
        // Wall-clock times go to stdout only so the report is reproducible.
        let criteria: Vec<Value> = results.iter().map(|r| json!(ReportRow::from(r))).collect();
        let all_pass = results.iter().all(|r| r.pass);
        let path = self.out("acceptance.json")?;
        self.write_json(&path, &json!({ "meta": self.meta(json!({})), "all_pass": all_pass, "criteria": criteria }))?;
        if !all_pass {
            let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
            return Err(Failure::Acceptance(format!("criteria {failed:?} fail, see {}", path.display())));
        }
        Ok(vec![path])
    }
}

#[derive(Serialize)]
struct ReportRow<'a> {
    id: u8,
    name: &'a str,
    pass: bool,
    detail: &'a str,
    limit_seconds: f64,
}

impl<'a> From<&'a acceptance::CriterionResult> for ReportRow<'a> {
    fn from(r: &'a acceptance::CriterionResult) -> Self {
        Self { id: r.id, name: r.name, pass: r.pass, detail: &r.detail, limit_seconds: r.limit_seconds }
    }
}

/// Points of one time column, each with its phase σ.
type Column = Vec<(BandPoint, f64)>;

/// Band endpoints along sorted `xs` at time `t`, each with the phase
/// σ = S(t) + ∫₀ˣ u. Continuation runs outward from x = 0 and stops at
/// the first failure, whose message is returned alongside.
fn whitham_column(g: &GFunction<'_>, t: f64, xs: &[f64]) -> halfline::Result<(Column, Option<String>)> {
    let seed = g.seed(t)?;
    let s = g.st.profile.phase_s(t)?;
    let split = xs.partition_point(|&x| x < 0.0);
    let mut out = Vec::with_capacity(xs.len());
    let mut stop = None;
    let mut left = Vec::new();
    for (dir_xs, sink) in [(xs[..split].iter().rev().copied().collect::<Vec<_>>(), &mut left), (xs[split..].to_vec(), &mut out)] {
        let mut cur = seed;
        let mut integral = 0.0;
        for x in dir_xs {
            match advance(g, cur, x) {
                Ok((next, du)) => {
                    cur = next;
                    integral += du;
                    sink.push((cur, s + integral));
                }
                Err(e) => {
                    stop = Some(format!("continuation stopped before x = {x}: {e}"));
                    break;
                }
            }
        }
    }
    left.reverse();
    left.extend(out);
    Ok((left, stop))
}

/// Continue from `from` to `x`, integrating u over the segment with
/// four-point Gauss nodes visited in order.
fn advance(g: &GFunction<'_>, from: BandPoint, x: f64) -> halfline::Result<(BandPoint, f64)> {
    if x == from.x {
        return Ok((from, 0.0));
    }
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let (mid, half) = (0.5 * (from.x + x), 0.5 * (x - from.x));
    let mut cur = from;
    let mut integral = 0.0;
    for (n, w) in NODES.iter().zip(WEIGHTS) {
        cur = g.continue_to(cur, mid + half * n)?;
        integral += half * w * cur.u();
    }
    Ok((g.continue_to(cur, x)?, integral))
}
