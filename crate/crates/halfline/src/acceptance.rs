//! The twelve acceptance checks, each timed against its budget.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::boundary_data::{default_validation_grid, validate_assumption};
use crate::direct_scattering::{OdeTol, compare_gamma, default_compare_grid, default_qii_grid, integrate_scattering, qii_scan};
use crate::error::Result;
use crate::gfunction::{Config, GFunction};
use crate::rhp_solver::{GridOptions, RhpSolver, boundary_recovery_suite};
use crate::spectral_transforms::{SpectralTransforms, TransformTable};
use crate::vacuum_domain::{in_vacuum, log_grid, vacuum_asymptotes, vacuum_boundary};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {:>8.2}s / {:>5.0}s  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

pub const CRITERIA: [(u8, &str, f64); 12] = [
    (1, "data validation", 5.0),
    (2, "unitarity", 120.0),
    (3, "reflection convergence", 600.0),
    (4, "second-quadrant bound", 300.0),
    (5, "transform identities", 60.0),
    (6, "moment conditions", 120.0),
    (7, "g-inequalities", 120.0),
    (8, "Whitham residuals", 120.0),
    (9, "vacuum boundary", 60.0),
    (10, "boundary recovery", 1800.0),
    (11, "NLS residual", 600.0),
    (12, "plane-wave coherence", 600.0),
];

/// Run one criterion by number.
pub fn run_criterion(st: &SpectralTransforms, id: u8) -> Option<CriterionResult> {
    let &(_, name, limit) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match id {
        1 => validation(st),
        2 => unitarity(st),
        3 => reflection_convergence(st),
        4 => quadrant_bound(st),
        5 => transform_identities(st),
        6 => moment_conditions(st),
        7 => inequalities(st),
        8 => whitham(st),
        9 => vacuum(st),
        10 => recovery(st),
        11 => nls(st),
        12 => coherence(st),
        _ => unreachable!(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (pass, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_time = seconds <= limit;
    if !in_time {
        detail.push_str(" (over time budget)");
    }
    Some(CriterionResult { id, name, pass: pass && in_time, detail, seconds, limit_seconds: limit })
}

pub fn run_all(st: &SpectralTransforms) -> AcceptanceReport {
    AcceptanceReport { results: CRITERIA.iter().filter_map(|c| run_criterion(st, c.0)).collect() }
}

type Outcome = Result<(bool, String)>;

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn validation(st: &SpectralTransforms) -> Outcome {
    let rep = validate_assumption(&st.profile, &default_validation_grid(&st.profile));
    let pass = rep.all_pass()
        && (0.49..=0.51).contains(&rep.h0_measured)
        && (1.99..=2.01).contains(&rep.u0_measured)
        && rep.critical_a == 1
        && rep.critical_b == 1;
    Ok((
        pass,
        format!(
            "clauses {}, h0 = {:.5}, U0 = {:.5}, critical points {}/{}",
            if rep.all_pass() { "ok" } else { "failing" },
            rep.h0_measured,
            rep.u0_measured,
            rep.critical_a,
            rep.critical_b
        ),
    ))
}

fn interior_grid(st: &SpectralTransforms, n: usize) -> Vec<f64> {
    let c = &st.crit;
    (0..n).map(|i| c.k_a + c.width() * (i as f64 + 0.5) / n as f64).collect()
}

fn unitarity(st: &SpectralTransforms) -> Outcome {
    let tol = OdeTol::default();
    let mut worst = 0.0f64;
    for k in interior_grid(st, 20) {
        let s = integrate_scattering(&st.profile, num_complex::Complex64::new(k, 0.0), 0.1, tol)?;
        worst = worst.max(s.det_defect);
    }
    Ok((worst <= 1e-6, format!("max ||A0|^2 - |B0|^2 - 1| = {worst:.2e}")))
}

fn reflection_convergence(st: &SpectralTransforms) -> Outcome {
    let grid = default_compare_grid(st, 15);
    let table = compare_gamma(st, &grid, &[0.2, 0.1, 0.05], OdeTol::default())?;
    let errs: Vec<f64> = table.max_err.iter().map(|p| p.1).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && (0.7..=1.3).contains(&table.order);
    Ok((pass, format!("max errors {}, order {:.3}", sci(&errs), table.order)))
}

fn quadrant_bound(st: &SpectralTransforms) -> Outcome {
    let grid = default_qii_grid(st, 0.2);
    let a = qii_scan(st, &grid, 0.1, 0.2, OdeTol::default())?;
    let b = qii_scan(st, &grid, 0.05, 0.2, OdeTol::default())?;
    let ratio = b.max_scaled / a.max_scaled;
    let min_a0 = a.min_abs_a0.min(b.min_abs_a0);
    let pass = grid.len() == 10 && (0.5..=2.0).contains(&ratio) && min_a0 > 0.5;
    Ok((
        pass,
        format!("constant {:.3} -> {:.3} (ratio {ratio:.3}), min |A0| = {min_a0:.4}", a.max_scaled, b.max_scaled),
    ))
}

fn transform_identities(st: &SpectralTransforms) -> Outcome {
    let c = &st.crit;
    let zero_ends = st.tau(c.k_a)? == 0.0 && st.tau(c.k_b)? == 0.0;
    let e = st.tau_prime_endpoints();
    // Richardson-extrapolated one-sided difference quotients.
    let h = 1e-3;
    let qa = |h: f64| -> Result<f64> { Ok(st.tau(c.k_a + h)? / h) };
    let slope_a = 2.0 * qa(0.5 * h)? - qa(h)?;
    let qb = |h: f64| -> Result<f64> { Ok(-st.tau(c.k_b - h)? / h) };
    let slope_b = 2.0 * qb(0.5 * h)? - qb(h)?;
    let rel_a = ((slope_a - e.dtau_a) / e.dtau_a).abs();
    let rel_b = ((slope_b - e.dtau_b) / e.dtau_b).abs();
    let phi_k0 = (st.phi(c.k0)? - 0.5 * st.profile.s0).abs();
    let table = TransformTable::build(st, &TransformTable::uniform_grid(c, 201))?;
    let max_dphi = table.dphi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h0 = st.profile.h0;
    let target = 16.0 * c.k0 / (h0 * h0);
    let d3 = st.d3phi_at_k0_by_differences(2e-3)?;
    let rel_d3 = ((d3 - target) / target).abs();
    let pass = zero_ends && rel_a <= 1e-5 && rel_b <= 1e-5 && phi_k0 <= 1e-8 && max_dphi <= 0.0 && rel_d3 <= 1e-3;
    Ok((
        pass,
        format!(
            "tau ends zero {zero_ends}, slope rel err {rel_a:.1e}/{rel_b:.1e}, |Phi(k0) - S0/2| = {phi_k0:.1e}, max Phi' = {max_dphi:.2e}, Phi''' = {d3:.4} vs {target:.4}"
        ),
    ))
}

/// Twenty log-spaced times on [0.1, 10] clear of the critical times.
pub fn moment_times(g: &GFunction<'_>) -> Vec<f64> {
    let c = &g.st.crit;
    log_grid(0.1, 10.0, 26)
        .into_iter()
        .filter(|&t| (t - c.t_a).abs() > g.time_margin() && (t - c.t_b).abs() > g.time_margin())
        .take(20)
        .collect()
}

fn moment_conditions(st: &SpectralTransforms) -> Outcome {
    let g = GFunction::new(st);
    let p = &st.profile;
    let times = moment_times(&g);
    let (mut worst_m, mut worst_i) = (0.0f64, 0.0f64);
    for &t in &times {
        let (a, b) = (p.a(t), p.b(t));
        let m = g.moments(a, b, 0.0, t, Config::at_time(st, t))?;
        worst_m = worst_m.max(m.m1.abs()).max(m.m2.abs());
        let i1 = 2.0 * PI * (a + b) * t;
        let i2 = 0.5 * PI * (3.0 * a * a + 2.0 * a * b + 3.0 * b * b) * t;
        worst_i = worst_i.max(((m.i1 - i1) / i1).abs()).max(((m.i2 - i2) / i2).abs());
    }
    let pass = times.len() == 20 && worst_m <= 1e-6 && worst_i <= 1e-6;
    Ok((pass, format!("{} times, max |m| = {worst_m:.2e}, max closed-form rel err = {worst_i:.2e}", times.len())))
}

fn inequalities(st: &SpectralTransforms) -> Outcome {
    let g = GFunction::new(st);
    let c = &st.crit;
    let kgrid: Vec<f64> = (1..=200).map(|i| c.k_a + c.width() * i as f64 / 201.0).collect();
    let mut pass = true;
    let mut configs = Vec::new();
    let mut parts = Vec::new();
    let mut worst_phi_b = 0.0f64;
    for t in [0.5, 2.0, 8.0] {
        let rep = g.check_inequalities(t, &kgrid)?;
        pass &= rep.pass();
        let config = Config::at_time(st, t);
        if !configs.contains(&config) {
            configs.push(config);
        }
        parts.push(format!("t={t}: {config} {}B/{}V/{}S {} viol", rep.band, rep.void, rep.saturated, rep.violations.len()));
        worst_phi_b = worst_phi_b.max((g.phi_b(t)? + 0.5 * st.profile.phase_s(t)?).abs());
    }
    pass &= configs.len() >= 2 && worst_phi_b <= 1e-8;
    Ok((pass, format!("{}; |phi_B + S/2| = {worst_phi_b:.1e}", parts.join(", "))))
}

fn whitham(st: &SpectralTransforms) -> Outcome {
    let g = GFunction::new(st);
    // h is bounded by the exclusion margin around t_b ≈ 1.049.
    let r1 = g.whitham_residual(0.05, 1.0, 0.01)?;
    let r2 = g.whitham_residual(0.05, 1.0, 0.005)?;
    let ratio = r1.norm() / r2.norm();
    Ok(((3.5..=4.5).contains(&ratio), format!("|r| = {:.3e} -> {:.3e}, ratio {ratio:.3}", r1.norm(), r2.norm())))
}

fn vacuum(st: &SpectralTransforms) -> Outcome {
    let table = TransformTable::build(st, &TransformTable::uniform_grid(&st.crit, 301))?;
    let t_small = 2.5e-3;
    let (x0, _) = vacuum_asymptotes(st, t_small);
    let small = vacuum_boundary(st, &table, t_small)?.x / x0;
    let small_ok = (small - 1.0).abs() <= 0.02;
    let large: Vec<(f64, f64)> = [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]
        .iter()
        .map(|&t| Ok((t, (vacuum_boundary(st, &table, t)?.x - vacuum_asymptotes(st, t).1).abs())))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = large.iter().map(|&(t, d)| d / t.ln()).collect();
    let bounded = large.iter().all(|&(_, d)| d < 1.0);
    let nonincreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    let mut duality = 0;
    let times = log_grid(1e-2, 80.0, 20);
    for &t in &times {
        let x = vacuum_boundary(st, &table, t)?.x;
        if in_vacuum(st, &table, x + 1e-6, t)?.inside && !in_vacuum(st, &table, x - 1e-6, t)?.inside {
            duality += 1;
        }
    }
    let pass = small_ok && bounded && nonincreasing && duality == times.len();
    Ok((
        pass,
        format!(
            "X/X0 at t=2.5e-3: {small:.4}; |X - Xinf|/log t on [20,80]: {ratios:.4?} (non-increasing {nonincreasing}, bounded {bounded}); duality {duality}/{}",
            times.len()
        ),
    ))
}

fn recovery(st: &SpectralTransforms) -> Outcome {
    let base = RhpSolver::with_options(st, GridOptions::default())?;
    let solver = RhpSolver::new(st, base.disc.refined()?)?;
    let tab = boundary_recovery_suite(&solver, &[0.5, 2.0], &[0.5, 1.0], &[0.4, 0.3, 0.2])?;
    let res = tab.rows.iter().map(|r| r.jump_residual).chain(tab.vacuum.iter().map(|r| r.jump_residual)).fold(0.0, f64::max);
    let det = tab.rows.iter().map(|r| r.det_defect).chain(tab.vacuum.iter().map(|r| r.det_defect)).fold(0.0, f64::max);
    let pass = tab.boundary_trend && tab.vacuum_trend && res < 1e-6 && det < 1e-8;
    let ed: Vec<f64> = tab.rows.iter().map(|r| r.e_d).collect();
    let en: Vec<f64> = tab.rows.iter().map(|r| r.e_n).collect();
    let vq: Vec<f64> = tab.vacuum.iter().map(|r| r.abs_q).collect();
    Ok((
        pass,
        format!("e_D {}, e_N {}, |q(x,0)| {}; max jump residual {res:.1e}, max det defect {det:.1e}", sci(&ed), sci(&en), sci(&vq)),
    ))
}

fn nls(st: &SpectralTransforms) -> Outcome {
    let solver = RhpSolver::with_options(st, GridOptions::default())?;
    let r1 = solver.nls_residual(0.05, 1.0, 0.3, 0.04)?;
    let r2 = solver.nls_residual(0.05, 1.0, 0.3, 0.02)?;
    let ratio = r1.residual / r2.residual;
    Ok(((3.5..=4.5).contains(&ratio), format!("residual {:.3e} -> {:.3e}, ratio {ratio:.3}", r1.residual, r2.residual)))
}

fn coherence(st: &SpectralTransforms) -> Outcome {
    let base = RhpSolver::with_options(st, GridOptions::default())?;
    let solver = RhpSolver::new(st, base.disc.refined()?)?;
    let g = GFunction::new(st);
    let mut errs = Vec::new();
    for eps in [0.4, 0.3, 0.2] {
        let w = g.plane_wave(0.05, 1.0, eps)?;
        errs.push((solver.q(0.05, 1.0, eps)? - w.q).norm());
    }
    let pass = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((pass, format!("|q - eta e^(i sigma/eps)| = {}", sci(&errs))))
}
