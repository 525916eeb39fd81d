//! Dirichlet data shapes (H, U) and the assembled [`BoundaryProfile`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{QuadTol, integrate};

/// The pair (H, U) with first derivatives.
pub trait ProfileShape: Send + Sync + fmt::Debug {
    fn h(&self, t: f64) -> f64;
    fn dh(&self, t: f64) -> f64;
    fn u(&self, t: f64) -> f64;
    fn du(&self, t: f64) -> f64;
    /// Last time at which the shape is defined.
    fn t_end(&self) -> f64 {
        f64::INFINITY
    }
}

/// H(t) = amp·√t·sech t, U(t) = u0 − (u0 − uinf)·tanh t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechTanh {
    pub amp: f64,
    pub u0: f64,
    pub uinf: f64,
}

impl ProfileShape for SechTanh {
    fn h(&self, t: f64) -> f64 {
        self.amp * t.sqrt() / t.cosh()
    }
    fn dh(&self, t: f64) -> f64 {
        let s = 1.0 / t.cosh();
        self.amp * s * (0.5 / t.sqrt() - t.sqrt() * t.tanh())
    }
    fn u(&self, t: f64) -> f64 {
        self.u0 - (self.u0 - self.uinf) * t.tanh()
    }
    fn du(&self, t: f64) -> f64 {
        let s = 1.0 / t.cosh();
        -(self.u0 - self.uinf) * s * s
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape given by arbitrary closures.
#[derive(Clone)]
pub struct FnShape {
    pub h: ScalarFn,
    pub dh: ScalarFn,
    pub u: ScalarFn,
    pub du: ScalarFn,
}

impl fmt::Debug for FnShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnShape")
    }
}

impl ProfileShape for FnShape {
    fn h(&self, t: f64) -> f64 {
        (self.h)(t)
    }
    fn dh(&self, t: f64) -> f64 {
        (self.dh)(t)
    }
    fn u(&self, t: f64) -> f64 {
        (self.u)(t)
    }
    fn du(&self, t: f64) -> f64 {
        (self.du)(t)
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::InsufficientSamples);
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTable(i + 1));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if del[i - 1] * del[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], del[0], del[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        Ok(Self { x, y, d })
    }

    fn locate(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    pub fn value_and_slope(&self, t: f64) -> (f64, f64) {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dh00 = 6.0 * s * (s - 1.0);
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = -dh00;
        let dh11 = s * (3.0 * s - 2.0);
        let dv = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
        (v, dv)
    }

    pub fn first(&self) -> (f64, f64) {
        (self.x[0], self.y[0])
    }

    pub fn last(&self) -> (f64, f64) {
        (self.x[self.x.len() - 1], self.y[self.y.len() - 1])
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Sampled (t, H, U) table. H is interpolated as √t·g(t) with g monotone
/// cubic, so the t^{1/2} onset is represented exactly; below the first
/// sample g and U are held at their first values.
#[derive(Debug, Clone)]
pub struct TableShape {
    g: Pchip,
    u: Pchip,
}

impl TableShape {
    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        if rows.len() < 4 {
            return Err(Error::InsufficientSamples);
        }
        for (i, r) in rows.iter().enumerate() {
            if r[1] < 0.0 {
                return Err(Error::NegativeSample { row: i, field: "H" });
            }
            if r[2] < 0.0 {
                return Err(Error::NegativeSample { row: i, field: "U" });
            }
        }
        if let Some(i) = rows.windows(2).position(|w| w[1][0] <= w[0][0]) {
            return Err(Error::NonMonotoneTable(i + 1));
        }
        if !(rows[0][0] > 0.0 && rows[0][0] < 1e-3) {
            return Err(Error::LateTableStart(rows[0][0]));
        }
        let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let g: Vec<f64> = rows.iter().map(|r| r[1] / r[0].sqrt()).collect();
        let u: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        Ok(Self { g: Pchip::new(t.clone(), g)?, u: Pchip::new(t, u)? })
    }

    fn g_at(&self, t: f64) -> (f64, f64) {
        let (t0, g0) = self.g.first();
        let (t1, g1) = self.g.last();
        if t <= t0 {
            (g0, 0.0)
        } else if t >= t1 {
            (g1, 0.0)
        } else {
            self.g.value_and_slope(t)
        }
    }

    fn u_at(&self, t: f64) -> (f64, f64) {
        let (t0, u0) = self.u.first();
        let (t1, u1) = self.u.last();
        if t <= t0 {
            (u0, 0.0)
        } else if t >= t1 {
            (u1, 0.0)
        } else {
            self.u.value_and_slope(t)
        }
    }
}

impl ProfileShape for TableShape {
    fn h(&self, t: f64) -> f64 {
        t.max(0.0).sqrt() * self.g_at(t).0
    }
    fn dh(&self, t: f64) -> f64 {
        let (g, dg) = self.g_at(t);
        g / (2.0 * t.sqrt()) + t.sqrt() * dg
    }
    fn u(&self, t: f64) -> f64 {
        self.u_at(t).0
    }
    fn du(&self, t: f64) -> f64 {
        self.u_at(t).1
    }
    fn t_end(&self) -> f64 {
        self.g.last().0
    }
}

/// Description of a profile to build.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    /// Built-in closed form by name: "example" or "sech-tanh" with
    /// parameters `amp`, `u0`, `uinf`.
    Builtin { name: String, params: Vec<(String, f64)> },
    /// Sampled rows (t, H, U).
    Table(Vec<[f64; 3]>),
}

impl ProfileSpec {
    pub fn example() -> Self {
        ProfileSpec::Builtin { name: "example".into(), params: Vec::new() }
    }
}

/// Admissible Dirichlet data with its local parameters.
#[derive(Clone, Debug)]
pub struct BoundaryProfile {
    shape: Arc<dyn ProfileShape>,
    /// Phase constant S(0).
    pub s0: f64,
    /// Coefficient of t^{1/2} in H near 0.
    pub h0: f64,
    /// U(0⁺).
    pub u0: f64,
    /// U(+∞).
    pub uinf: f64,
    /// Time beyond which H is negligible for the scattering problem.
    pub tmax_eff: f64,
}

const TMAX_CAP: f64 = 1e4;

impl BoundaryProfile {
    /// Assemble a profile; local parameters not supplied are estimated
    /// from the shape.
    pub fn new(shape: Arc<dyn ProfileShape>, s0: f64, h0: Option<f64>, u0: Option<f64>, uinf: Option<f64>) -> Self {
        let t_end = shape.t_end();
        let h0 = h0.unwrap_or_else(|| {
            let t = 1e-10;
            shape.h(t) / t.sqrt()
        });
        let u0 = u0.unwrap_or_else(|| shape.u(1e-12));
        let uinf = uinf.unwrap_or_else(|| shape.u(t_end.min(TMAX_CAP)));
        let mut p = Self { shape, s0, h0, u0, uinf, tmax_eff: t_end.min(TMAX_CAP) };
        p.tmax_eff = p.find_tmax_eff();
        p
    }

    /// Built-in example: H = ½√t sech t, U = 2 − ½ tanh t.
    pub fn example() -> Self {
        let shape = SechTanh { amp: 0.5, u0: 2.0, uinf: 1.5 };
        Self::new(Arc::new(shape), 0.0, Some(0.5), Some(2.0), Some(1.5))
    }

    pub fn shape(&self) -> &Arc<dyn ProfileShape> {
        &self.shape
    }

    pub fn with_s0(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    fn find_tmax_eff(&self) -> f64 {
        let cap = self.shape.t_end().min(TMAX_CAP);
        // |k_a| + U0 is bounded by max(U/2 + H) + U0 over the early range.
        let mut scale = self.u0;
        let mut t = 1e-6;
        while t < cap.min(50.0) {
            scale = scale.max(self.u(t) / 2.0 + self.h(t));
            t *= 1.2;
        }
        let bound = scale + self.u0;
        let small = |t: f64| self.h(t).abs() * bound < 1e-12;
        let mut t = 1.0;
        while t < cap {
            if small(t) && small(1.5 * t) && small(2.0 * t) {
                // Tighten to the first crossing.
                let mut lo = t / 1.25;
                let mut hi = t;
                if small(lo) {
                    return t;
                }
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    if small(m) {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                return hi;
            }
            t *= 1.25;
        }
        cap
    }

    pub fn h(&self, t: f64) -> f64 {
        self.shape.h(t)
    }
    pub fn dh(&self, t: f64) -> f64 {
        self.shape.dh(t)
    }
    pub fn u(&self, t: f64) -> f64 {
        self.shape.u(t)
    }
    pub fn du(&self, t: f64) -> f64 {
        self.shape.du(t)
    }

    /// 𝔞(t) = −U/2 − H.
    pub fn a(&self, t: f64) -> f64 {
        -0.5 * self.u(t) - self.h(t)
    }
    /// 𝔟(t) = −U/2 + H.
    pub fn b(&self, t: f64) -> f64 {
        -0.5 * self.u(t) + self.h(t)
    }
    pub fn da(&self, t: f64) -> f64 {
        -0.5 * self.du(t) - self.dh(t)
    }
    pub fn db(&self, t: f64) -> f64 {
        -0.5 * self.du(t) + self.dh(t)
    }

    /// k₀ = −U₀/2.
    pub fn k0(&self) -> f64 {
        -0.5 * self.u0
    }
    /// k_∞ = −U_∞/2.
    pub fn kinf(&self) -> f64 {
        -0.5 * self.uinf
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let end = self.shape.t_end();
        if t > end {
            return Err(Error::Extrapolation { t, end });
        }
        Ok(())
    }

    /// The Riemann-invariant curves (𝔞(t), 𝔟(t)).
    pub fn invariant_curves(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("invariant curves need t > 0, got {t}")));
        }
        self.check_time(t)?;
        Ok((self.a(t), self.b(t)))
    }

    /// S′(t) = −U² − 2H².
    pub fn ds(&self, t: f64) -> f64 {
        let u = self.u(t);
        let h = self.h(t);
        -(u * u + 2.0 * h * h)
    }

    /// S(t) = S(0) − ∫₀ᵗ (U² + 2H²).
    pub fn phase_s(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("phase needs t ≥ 0, got {t}")));
        }
        self.check_time(t)?;
        let splits: Vec<f64> = (1..).map(|j| j as f64).take_while(|&s| s < t).collect();
        let v = crate::quadrature::integrate_split(|s| -self.ds(s), 0.0, t, &splits, QuadTol::new(1e-14, 1e-14))?;
        Ok(self.s0 - v)
    }

    /// S_∞ = lim (S(t) + U_∞² t).
    pub fn s_inf(&self) -> Result<f64> {
        let ui2 = self.uinf * self.uinf;
        let end = self.tmax_eff;
        let mut total = 0.0;
        let mut a = 0.0;
        while a < end {
            let b = (a + 2.0).min(end);
            total += integrate(|s| -self.ds(s) - ui2, a, b, QuadTol::new(1e-15, 1e-14))?;
            a = b;
        }
        Ok(self.s0 - total)
    }

    /// Semiclassical Neumann value Q₀ᴺ(t) = i·U(t)·H(t)·e^{iS(t)/ε}.
    pub fn dn_map(&self, t: f64, eps: f64) -> Result<Complex64> {
        if !(t > 0.0 && eps > 0.0) {
            return Err(Error::Domain(format!("dn_map needs t > 0 and ε > 0, got t = {t}, ε = {eps}")));
        }
        let s = self.phase_s(t)?;
        Ok(Complex64::new(0.0, self.u(t) * self.h(t)) * Complex64::from_polar(1.0, s / eps))
    }

    /// Dirichlet value H(t)·e^{iS(t)/ε}.
    pub fn dirichlet(&self, t: f64, eps: f64) -> Result<Complex64> {
        let s = self.phase_s(t)?;
        Ok(Complex64::from_polar(self.h(t), s / eps))
    }
}

/// Build a profile from a [`ProfileSpec`] with phase constant `s0`.
pub fn build_profile(spec: &ProfileSpec, s0: f64) -> Result<BoundaryProfile> {
    match spec {
        ProfileSpec::Builtin { name, params } => {
            let get = |key: &str, default: f64| {
                params.iter().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default)
            };
            match name.as_str() {
                "example" => Ok(BoundaryProfile::example().with_s0(s0)),
                "sech-tanh" => {
                    let shape = SechTanh { amp: get("amp", 0.5), u0: get("u0", 2.0), uinf: get("uinf", 1.5) };
                    Ok(BoundaryProfile::new(Arc::new(shape), s0, Some(shape.amp), Some(shape.u0), Some(shape.uinf)))
                }
                other => Err(Error::UnknownProfile(other.to_string())),
            }
        }
        ProfileSpec::Table(rows) => {
            let shape = TableShape::from_rows(rows)?;
            Ok(BoundaryProfile::new(Arc::new(shape), s0, None, None, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn example_constants() {
        let p = BoundaryProfile::example();
        assert_eq!((p.h0, p.u0, p.uinf), (0.5, 2.0, 1.5));
        assert_eq!(p.k0(), -1.0);
        assert_eq!(p.kinf(), -0.75);
        assert_eq!(p.s0, 0.0);
    }

    #[test]
    fn invariant_curve_limits() {
        let p = BoundaryProfile::example();
        let (a, b) = p.invariant_curves(1e-14).unwrap();
        assert!((a + 1.0).abs() < 1e-6 && (b + 1.0).abs() < 1e-6);
        let (a, b) = p.invariant_curves(60.0).unwrap();
        assert!((a + 0.75).abs() < 1e-12 && (b + 0.75).abs() < 1e-12);
        assert!(p.invariant_curves(0.0).is_err());
        for t in [0.1, 0.7, 3.0] {
            let (a, b) = p.invariant_curves(t).unwrap();
            assert_relative_eq!(b - a, 2.0 * p.h(t), epsilon = 1e-15);
            assert_relative_eq!(a + b, -p.u(t), epsilon = 1e-15);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let p = BoundaryProfile::example();
        for t in [0.05, 0.4, 1.3, 6.0] {
            let h = 1e-6;
            assert_relative_eq!(p.dh(t), (p.h(t + h) - p.h(t - h)) / (2.0 * h), epsilon = 1e-7);
            assert_relative_eq!(p.du(t), (p.u(t + h) - p.u(t - h)) / (2.0 * h), epsilon = 1e-7);
        }
    }

    #[test]
    fn phase_has_expected_slope_at_origin() {
        let p = BoundaryProfile::example();
        assert_eq!(p.phase_s(0.0).unwrap(), 0.0);
        let h = 1e-6;
        let slope = p.phase_s(h).unwrap() / h;
        assert!((slope + 4.0).abs() < 1e-4);
    }

    #[test]
    fn phase_derivative_matches_integrand() {
        let p = BoundaryProfile::example();
        // Deterministic pseudo-random times.
        let mut x = 0.123_f64;
        for _ in 0..100 {
            x = (x * 7.31 + 0.417).fract();
            let t = 0.01 + 9.0 * x;
            let h = 1e-4;
            let fd = (p.phase_s(t + h).unwrap() - p.phase_s(t - h).unwrap()) / (2.0 * h);
            assert!((fd - p.ds(t)).abs() < 1e-8, "t = {t}: {fd} vs {}", p.ds(t));
        }
    }

    #[test]
    fn dn_map_identities() {
        let p = BoundaryProfile::example();
        for t in [0.3, 1.0, 4.0] {
            let eps = 0.1;
            let n = p.dn_map(t, eps).unwrap();
            let d = p.dirichlet(t, eps).unwrap();
            let ratio = n / d;
            assert!((ratio - Complex64::new(0.0, p.u(t))).norm() < 1e-12);
            assert_relative_eq!(n.norm(), p.u(t) * p.h(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn stored_u_recovered_from_phase() {
        let p = BoundaryProfile::example();
        for t in [0.2, 0.9, 2.5, 7.0] {
            let h = 1e-4;
            let ds = (p.phase_s(t + h).unwrap() - p.phase_s(t - h).unwrap()) / (2.0 * h);
            let u = (-ds - 2.0 * p.h(t).powi(2)).sqrt();
            assert!((u - p.u(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn tmax_eff_meets_decay_target() {
        let p = BoundaryProfile::example();
        assert!(p.h(p.tmax_eff) * (1.2 + 2.0) < 1e-12);
        assert!(p.tmax_eff > 25.0 && p.tmax_eff < 40.0);
    }

    #[test]
    fn s_inf_is_limit_of_shifted_phase() {
        let p = BoundaryProfile::example();
        let s_inf = p.s_inf().unwrap();
        let t = p.tmax_eff;
        let shifted = p.phase_s(t).unwrap() + p.uinf * p.uinf * t;
        assert!((shifted - s_inf).abs() < 1e-8);
    }

    fn sampled_rows(n: usize) -> Vec<[f64; 3]> {
        let p = BoundaryProfile::example();
        let mut rows = Vec::new();
        for i in 0..n {
            let t = 1e-4 * (1.0e6_f64).powf(i as f64 / (n - 1) as f64);
            rows.push([t, p.h(t), p.u(t)]);
        }
        rows
    }

    #[test]
    fn table_profile_reproduces_samples() {
        let rows = sampled_rows(400);
        let p = build_profile(&ProfileSpec::Table(rows.clone()), 0.0).unwrap();
        for r in rows.iter().step_by(37) {
            assert_relative_eq!(p.h(r[0]), r[1], epsilon = 1e-14, max_relative = 1e-12);
            assert_relative_eq!(p.u(r[0]), r[2], epsilon = 1e-14);
        }
        assert!((p.h0 - 0.5).abs() < 1e-3);
        assert!((p.u0 - 2.0).abs() < 1e-3);
        let ex = BoundaryProfile::example();
        for t in [0.01, 0.3, 2.0, 10.0] {
            assert!((p.h(t) - ex.h(t)).abs() < 1e-4, "t={t}");
        }
    }

    #[test]
    fn table_errors() {
        let rows = sampled_rows(3);
        let e = build_profile(&ProfileSpec::Table(rows), 0.0).unwrap_err();
        assert_eq!(e.to_string(), "insufficient samples for interpolation");
        let mut rows = sampled_rows(10);
        rows.swap(3, 4);
        assert!(matches!(build_profile(&ProfileSpec::Table(rows), 0.0), Err(Error::NonMonotoneTable(_))));
        let mut rows = sampled_rows(10);
        rows[5][1] = -1.0;
        assert!(matches!(build_profile(&ProfileSpec::Table(rows), 0.0), Err(Error::NegativeSample { .. })));
        let rows = sampled_rows(10);
        let p = build_profile(&ProfileSpec::Table(rows), 0.0).unwrap();
        assert!(matches!(p.phase_s(1e4), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        let spec = ProfileSpec::Builtin { name: "gaussian".into(), params: vec![] };
        assert!(matches!(build_profile(&spec, 0.0), Err(Error::UnknownProfile(_))));
    }

    #[test]
    fn scaling_u_rescales_k0() {
        for c in [0.5, 1.0, 3.0] {
            let spec = ProfileSpec::Builtin {
                name: "sech-tanh".into(),
                params: vec![("u0".into(), 2.0 * c), ("uinf".into(), 1.5 * c)],
            };
            let p = build_profile(&spec, 0.0).unwrap();
            assert_relative_eq!(p.k0(), -c * 2.0 / 2.0, epsilon = 1e-15);
        }
    }
}
