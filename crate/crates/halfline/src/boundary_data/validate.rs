//! Admissibility checks for boundary data.

use serde::Serialize;

use super::BoundaryProfile;

/// One checked clause.
#[derive(Debug, Clone, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub clauses: Vec<Clause>,
    /// min(U − 2H) over the grid.
    pub margin: f64,
    /// H(t)/√t at the smallest probe time.
    pub h0_measured: f64,
    /// U at the smallest probe time.
    pub u0_measured: f64,
    pub critical_a: usize,
    pub critical_b: usize,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

/// 10⁴ points: geometric on [1e−8, 1], uniform on (1, tmax_eff].
pub fn default_validation_grid(profile: &BoundaryProfile) -> Vec<f64> {
    let n_geo = 2000;
    let n_lin = 8000;
    let mut g: Vec<f64> = (0..n_geo).map(|i| 1e-8 * 1e8_f64.powf(i as f64 / (n_geo - 1) as f64)).collect();
    let end = profile.tmax_eff.max(2.0);
    g.extend((1..=n_lin).map(|i| 1.0 + (end - 1.0) * i as f64 / n_lin as f64));
    g
}

const MARGIN_FLOOR: f64 = 1e-9;
const FIT_REL: f64 = 1e-2;
const DECAY_TOL: f64 = 1e-6;
const DECAY_POWER: i32 = 4;

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for v in values {
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Check every admissibility clause on `grid`; failures are recorded in
/// the report, never raised.
pub fn validate_assumption(profile: &BoundaryProfile, grid: &[f64]) -> ValidationReport {
    let mut clauses = Vec::new();

    let neg = grid.iter().find(|&&t| !(profile.h(t) > 0.0));
    clauses.push(Clause {
        name: "H > 0",
        pass: neg.is_none(),
        detail: match neg {
            Some(t) => format!("H({t}) = {}", profile.h(*t)),
            None => "positive on grid".into(),
        },
    });

    let margin = grid.iter().map(|&t| profile.u(t) - 2.0 * profile.h(t)).fold(f64::INFINITY, f64::min);
    clauses.push(Clause {
        name: "U >= 2H + delta",
        pass: margin > MARGIN_FLOOR,
        detail: format!("margin {margin:.6e}"),
    });

    let probes: Vec<f64> = (1..=8).map(|j| 10f64.powi(-j)).collect();
    let h_ratio: Vec<f64> = probes.iter().map(|&t| profile.h(t) / t.sqrt()).collect();
    let h0_measured = h_ratio[7];
    let settled = (h_ratio[6] - h_ratio[7]).abs() <= FIT_REL * h0_measured.abs();
    let h_fit = profile.h0 > 0.0 && settled && (h0_measured - profile.h0).abs() <= FIT_REL * profile.h0;
    clauses.push(Clause {
        name: "H/sqrt(t) -> h0",
        pass: h_fit,
        detail: format!("measured {h0_measured:.8}, declared {}", profile.h0),
    });

    let u_vals: Vec<f64> = probes.iter().map(|&t| profile.u(t)).collect();
    let u0_measured = u_vals[7];
    let settled = (u_vals[6] - u_vals[7]).abs() <= FIT_REL * u0_measured.abs();
    let u_fit = profile.u0 > 0.0 && settled && (u0_measured - profile.u0).abs() <= FIT_REL * profile.u0;
    clauses.push(Clause {
        name: "U -> U0",
        pass: u_fit,
        detail: format!("measured {u0_measured:.8}, declared {}", profile.u0),
    });

    let tm = profile.tmax_eff;
    let w = (1.0 + tm).powi(DECAY_POWER);
    let hd = profile.h(tm).abs() * w;
    let ud = profile.du(tm).abs() * w;
    clauses.push(Clause {
        name: "decay",
        pass: hd < DECAY_TOL && ud < DECAY_TOL,
        detail: format!("|H|(1+t)^4 = {hd:.3e}, |U'|(1+t)^4 = {ud:.3e} at t = {tm:.4}"),
    });

    let critical_a = sign_changes(grid.iter().map(|&t| profile.da(t)));
    let critical_b = sign_changes(grid.iter().map(|&t| profile.db(t)));
    clauses.push(Clause {
        name: "one critical point of a",
        pass: critical_a == 1,
        detail: format!("{critical_a} sign changes of a'"),
    });
    clauses.push(Clause {
        name: "one critical point of b",
        pass: critical_b == 1,
        detail: format!("{critical_b} sign changes of b'"),
    });

    ValidationReport { clauses, margin, h0_measured, u0_measured, critical_a, critical_b }
}
