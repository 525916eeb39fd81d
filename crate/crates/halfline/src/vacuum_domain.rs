//! The vacuum-domain boundary x = X(t): the smallest x at which
//! x + 4tk − Φ′(k) ≥ 0 for every k in the support, i.e. the Legendre dual
//! X(t) = sup_k (Φ′(k) − 4tk).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::bisect;
use crate::spectral_transforms::{SpectralTransforms, TransformTable};

/// Outcome of the vacuum inequality test at one (x, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumTest {
    pub inside: bool,
    /// min_k (x + 4tk − Φ′(k)).
    pub margin: f64,
    /// Where the minimum is attained.
    pub k_min: f64,
}

/// One point of the boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumPoint {
    pub t: f64,
    pub x: f64,
    pub kstar: f64,
    /// False when the stationary-point equation had no bracket and the
    /// supremum was taken directly.
    pub from_stationary_point: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VacuumCurve {
    pub tgrid: Vec<f64>,
    pub x: Vec<f64>,
    pub kstar: Vec<f64>,
    /// Small-t asymptote −4k₀t − h₀²t²/(2k₀).
    pub x0: Vec<f64>,
    /// Large-t asymptote −4k_a t − C_a log t.
    pub xinf: Vec<f64>,
}

/// Offset from k_a below which Φ′ is not evaluated.
fn endpoint_offset(st: &SpectralTransforms) -> f64 {
    1e-6 * st.crit.width()
}

/// Maximize a unimodal `f` on [a, b] by golden-section search.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Grid supremum of Φ′(k) − 4tk, polished by golden section between the
/// neighbours of the best grid point.
fn dual_sup(st: &SpectralTransforms, table: &TransformTable, t: f64) -> Result<(f64, f64)> {
    let g = &table.kgrid;
    let mut best = None::<(usize, f64)>;
    for (i, (&k, &d)) in g.iter().zip(&table.dphi).enumerate() {
        let v = d - 4.0 * t * k;
        if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, _) = best.ok_or_else(|| Error::Domain("transform table has no finite Φ′ values".into()))?;
    let lo_edge = st.crit.k_a + endpoint_offset(st);
    let hi_edge = st.crit.k_b - endpoint_offset(st);
    let a = if i > 0 { g[i - 1].max(lo_edge) } else { g[i] };
    let b = if i + 1 < g.len() { g[i + 1].min(hi_edge) } else { g[i] };
    if b <= a {
        return Ok((g[i], table.dphi[i] - 4.0 * t * g[i]));
    }
    golden_max(|k| Ok(st.dphi(k)? - 4.0 * t * k), a, b, 1e-12 * st.crit.width())
}

/// Test x + 4tk − Φ′(k) ≥ 0 over the support.
pub fn in_vacuum(st: &SpectralTransforms, table: &TransformTable, x: f64, t: f64) -> Result<VacuumTest> {
    let (k_min, sup) = dual_sup(st, table, t)?;
    let margin = x - sup;
    Ok(VacuumTest { inside: margin >= 0.0, margin, k_min })
}

/// X(t) from the stationary point Φ″(k*) = 4t on (k_a + η, k₀), with the
/// direct supremum as fallback when that equation has no bracket or its
/// root is beaten by the grid supremum (non-convex −Φ′).
pub fn vacuum_boundary(st: &SpectralTransforms, table: &TransformTable, t: f64) -> Result<VacuumPoint> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("vacuum boundary needs t > 0, got {t}")));
    }
    let c = &st.crit;
    let lo = c.k_a + endpoint_offset(st);
    let hi = c.k0;
    let f = |k: f64| st.d2phi(k).map(|v| v - 4.0 * t).unwrap_or(f64::NAN);
    let stationary = match bisect(f, lo, hi, 1e-14 * c.width()) {
        Ok(k) => Some((k, st.dphi(k)? - 4.0 * t * k)),
        Err(_) => None,
    };
    let (ks, xs) = dual_sup(st, table, t)?;
    match stationary {
        Some((k, x)) if x >= xs - 1e-10 * (1.0 + xs.abs()) => {
            Ok(VacuumPoint { t, x, kstar: k, from_stationary_point: true })
        }
        _ => Ok(VacuumPoint { t, x: xs, kstar: ks, from_stationary_point: false }),
    }
}

/// Both asymptotes of X at time t.
pub fn vacuum_asymptotes(st: &SpectralTransforms, t: f64) -> (f64, f64) {
    let c = &st.crit;
    let h0 = st.profile.h0;
    let small = -4.0 * c.k0 * t - h0 * h0 / (2.0 * c.k0) * t * t;
    let large = -4.0 * c.k_a * t - st.tau_prime_endpoints().c_a * t.ln();
    (small, large)
}

/// `n` log-spaced times on [t_lo, t_hi].
pub fn log_grid(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_lo];
    }
    let r = (t_hi / t_lo).ln();
    (0..n).map(|i| t_lo * (r * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Boundary curve on `tgrid` (parallel over times).
pub fn vacuum_curve(st: &SpectralTransforms, table: &TransformTable, tgrid: &[f64]) -> Result<VacuumCurve> {
    let pts: Vec<Result<VacuumPoint>> = tgrid.par_iter().map(|&t| vacuum_boundary(st, table, t)).collect();
    let mut curve = VacuumCurve { tgrid: tgrid.to_vec(), x: vec![], kstar: vec![], x0: vec![], xinf: vec![] };
    for (p, &t) in pts.into_iter().zip(tgrid) {
        let p = p?;
        let (a0, ainf) = vacuum_asymptotes(st, t);
        curve.x.push(p.x);
        curve.kstar.push(p.kstar);
        curve.x0.push(a0);
        curve.xinf.push(ainf);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn setup() -> &'static (SpectralTransforms, TransformTable) {
        static S: OnceLock<(SpectralTransforms, TransformTable)> = OnceLock::new();
        S.get_or_init(|| {
            let st = SpectralTransforms::example();
            let g = TransformTable::uniform_grid(&st.crit, 301);
            let table = TransformTable::build(&st, &g).unwrap();
            (st, table)
        })
    }

    #[test]
    fn time_zero_is_vacuum_and_origin_is_not() {
        let (st, tb) = setup();
        for x in [0.1, 1.0] {
            assert!(in_vacuum(st, tb, x, 0.0).unwrap().inside);
        }
        for t in [0.01, 0.5, 3.0] {
            assert!(!in_vacuum(st, tb, 0.0, t).unwrap().inside);
        }
    }

    #[test]
    fn margin_is_affine_in_x() {
        let (st, tb) = setup();
        let m = |x| in_vacuum(st, tb, x, 0.7).unwrap().margin;
        let (a, b, c) = (m(0.0), m(1.0), m(2.5));
        assert!((b - a - 1.0).abs() < 1e-12 && (c - a - 2.5).abs() < 1e-12);
    }

    #[test]
    fn small_time_asymptote() {
        let (st, tb) = setup();
        let p = vacuum_boundary(st, tb, 1e-3).unwrap();
        assert!((p.x / 1e-3 - 4.0).abs() < 1e-2);
        let mut prev = f64::INFINITY;
        for t in [1e-2, 5e-3, 2.5e-3] {
            let p = vacuum_boundary(st, tb, t).unwrap();
            let (x0, _) = vacuum_asymptotes(st, t);
            assert!(p.from_stationary_point);
            let r = ((p.x - x0) / (t * t)).abs();
            assert!(r < prev, "t = {t}: {r}");
            prev = r;
        }
        let (x0, _) = vacuum_asymptotes(st, 2.5e-3);
        assert!((vacuum_boundary(st, tb, 2.5e-3).unwrap().x / x0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn large_time_offset_settles() {
        // X − X∞ tends to a constant: increments over doublings of t shrink.
        let (st, tb) = setup();
        let offset = |t: f64| vacuum_boundary(st, tb, t).unwrap().x - vacuum_asymptotes(st, t).1;
        let d: Vec<f64> = [20.0, 40.0, 80.0, 160.0].iter().map(|&t| offset(t)).collect();
        for w in d.windows(3) {
            assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs(), "{d:?}");
        }
        assert!(d.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn threshold_is_tight() {
        let (st, tb) = setup();
        for t in log_grid(1e-2, 50.0, 6) {
            let p = vacuum_boundary(st, tb, t).unwrap();
            assert!(in_vacuum(st, tb, p.x + 1e-6, t).unwrap().inside, "t = {t}");
            assert!(!in_vacuum(st, tb, p.x - 1e-6, t).unwrap().inside, "t = {t}");
        }
    }

    #[test]
    fn curve_is_monotone() {
        let (st, tb) = setup();
        let c = vacuum_curve(st, tb, &log_grid(1e-2, 30.0, 8)).unwrap();
        for w in c.x.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in c.kstar.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(c.kstar.iter().all(|&k| k > st.crit.k_a && k <= st.crit.k0));
    }
}
