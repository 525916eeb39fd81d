//! Genus-zero complex phase: the moment conditions fixing one band
//! [α, β] ⊂ (k_a, k_b), their continuation in x, the band/void/saturated
//! inequalities at x = 0, and the modulated plane wave they describe.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary_data::{LevelGaps, turning_points};
use crate::error::{Error, Result};
use crate::quadrature::{QuadTol, gauss_legendre, integrate, integrate_split};
use crate::spectral_transforms::SpectralTransforms;

/// Type of the two gaps flanking the band, left then right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Config {
    #[serde(rename = "VBV")]
    Vbv,
    #[serde(rename = "VBS")]
    Vbs,
    #[serde(rename = "SBV")]
    Sbv,
    #[serde(rename = "SBS")]
    Sbs,
}

impl Config {
    /// From the slopes of the invariant curves: a left void needs 𝔞
    /// decreasing, a right void needs 𝔟 increasing.
    pub fn from_slopes(da: f64, db: f64) -> Self {
        match (da < 0.0, db > 0.0) {
            (true, true) => Config::Vbv,
            (true, false) => Config::Vbs,
            (false, true) => Config::Sbv,
            (false, false) => Config::Sbs,
        }
    }

    pub fn at_time(st: &SpectralTransforms, t: f64) -> Self {
        Self::from_slopes(st.profile.da(t), st.profile.db(t))
    }

    pub fn left_saturated(self) -> bool {
        matches!(self, Config::Sbv | Config::Sbs)
    }

    pub fn right_saturated(self) -> bool {
        matches!(self, Config::Vbs | Config::Sbs)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Config::Vbv => "VBV",
            Config::Vbs => "VBS",
            Config::Sbv => "SBV",
            Config::Sbs => "SBS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub x: f64,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub config: Config,
    pub newton_residual: f64,
}

impl BandPoint {
    pub fn eta(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }
    pub fn u(&self) -> f64 {
        -(self.alpha + self.beta)
    }
}

/// Moment residuals with the two band integrals they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative step of the difference Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 30, fd_step: 1e-6 }
    }
}

type Jac = [[f64; 2]; 2];

type Memo = RefCell<HashMap<u64, f64>>;

fn memo(cache: &Memo, at: f64, f: impl FnOnce() -> f64) -> f64 {
    *cache.borrow_mut().entry(at.to_bits()).or_insert_with(f)
}

/// The genus-zero machinery for one profile.
#[derive(Debug, Clone)]
pub struct GFunction<'a> {
    pub st: &'a SpectralTransforms,
    pub tol: QuadTol,
    pub newton: NewtonOptions,
    /// τ′ node values next to k_a and k_b.
    edges: OnceLock<[[f64; 3]; 2]>,
}

/// Relative distances (in units of the support width) inside which τ′ is
/// not taken from the Leibniz form.
const EDGE_GUARD: f64 = 1e-4;
const KINF_GUARD: f64 = 2e-6;

impl<'a> GFunction<'a> {
    pub fn new(st: &'a SpectralTransforms) -> Self {
        Self { st, tol: QuadTol::new(1e-13, 1e-12), newton: NewtonOptions::default(), edges: OnceLock::new() }
    }

    /// τ′ where it is needed by the saturated-gap integrals. The Leibniz
    /// form loses accuracy as the turning points coalesce, so near k_a and
    /// k_b it is replaced by the quadratic through the closed-form endpoint
    /// slope and two interior values; next to k_∞ it is frozen one-sided.
    fn tau_prime(&self, k: f64) -> Result<f64> {
        let c = &self.st.crit;
        let w = c.width();
        let d = (k - c.kinf).abs();
        if d < KINF_GUARD * w {
            return self.st.dtau(c.kinf + (k - c.kinf).signum() * KINF_GUARD * w);
        }
        let (da, db) = (k - c.k_a, c.k_b - k);
        let edge = EDGE_GUARD * w;
        if da < edge || db < edge {
            let e = self.edges.get_or_init(|| {
                let slopes = self.st.tau_prime_endpoints();
                let f = |k: f64| self.st.dtau(k).unwrap_or(f64::NAN);
                [
                    [slopes.dtau_a, f(c.k_a + edge), f(c.k_a + 2.0 * edge)],
                    [slopes.dtau_b, f(c.k_b - edge), f(c.k_b - 2.0 * edge)],
                ]
            });
            let (v, s) = if da < edge { (e[0], da / edge) } else { (e[1], db / edge) };
            // Newton form on nodes 0, 1, 2.
            let d1 = v[1] - v[0];
            let d2 = 0.5 * (v[2] - 2.0 * v[1] + v[0]);
            return Ok(v[0] + s * d1 + s * (s - 1.0) * d2);
        }
        self.st.dtau(k)
    }

    /// Points where τ′ or Φ′ lose smoothness.
    fn breaks(&self) -> [f64; 2] {
        [self.st.crit.k0, self.st.crit.kinf]
    }

    /// I₁ and I₂ for the band [α, β] in configuration `config`:
    /// ∫_S τ′k^{p−1}/r dk + ∫_α^β Φ′k^{p−1}/√((k − α)(β − k)) dk.
    pub fn band_integrals(&self, alpha: f64, beta: f64, config: Config) -> Result<(f64, f64)> {
        let c = &self.st.crit;
        if !(alpha > c.k_a && beta < c.k_b && beta - alpha >= 1e-8) {
            return Err(Error::Domain(format!(
                "band [{alpha}, {beta}] must satisfy k_a < α < β < k_b with β − α ≥ 1e−8"
            )));
        }
        let mut out = [0.0; 2];
        // The k¹ pass revisits most of the k⁰ abscissae.
        let (band, left, right) = <(Memo, Memo, Memo)>::default();
        // Band: k = mid − half·cos θ absorbs both inverse square roots.
        let mid = 0.5 * (alpha + beta);
        let half = 0.5 * (beta - alpha);
        let theta_of = |k: f64| ((mid - k) / half).clamp(-1.0, 1.0).acos();
        let cuts: Vec<f64> = self.breaks().iter().map(|&k| theta_of(k)).collect();
        for (p, slot) in out.iter_mut().enumerate() {
            *slot += integrate_split(
                |th| {
                    let k = mid - half * th.cos();
                    memo(&band, th, || self.st.dphi(k).unwrap_or(f64::NAN)) * k.powi(p as i32)
                },
                0.0,
                PI,
                &cuts,
                self.tol,
            )?;
        }
        // Saturated gaps: k = edge ± w·s² removes the square root at the band edge.
        if config.left_saturated() {
            let w = alpha - c.k_a;
            let cuts: Vec<f64> = self.breaks().iter().filter(|&&k| k < alpha).map(|&k| ((alpha - k) / w).sqrt()).collect();
            for (p, slot) in out.iter_mut().enumerate() {
                *slot -= integrate_split(
                    |s| {
                        let k = alpha - w * s * s;
                        memo(&left, s, || self.tau_prime(k).unwrap_or(f64::NAN)) * k.powi(p as i32) * 2.0 * w.sqrt() / (beta - k).sqrt()
                    },
                    0.0,
                    1.0,
                    &cuts,
                    self.tol,
                )?;
            }
        }
        if config.right_saturated() {
            let w = c.k_b - beta;
            let cuts: Vec<f64> = self.breaks().iter().filter(|&&k| k > beta).map(|&k| ((k - beta) / w).sqrt()).collect();
            for (p, slot) in out.iter_mut().enumerate() {
                *slot += integrate_split(
                    |s| {
                        let k = beta + w * s * s;
                        memo(&right, s, || self.tau_prime(k).unwrap_or(f64::NAN)) * k.powi(p as i32) * 2.0 * w.sqrt() / (k - alpha).sqrt()
                    },
                    0.0,
                    1.0,
                    &cuts,
                    self.tol,
                )?;
            }
        }
        if !(out[0].is_finite() && out[1].is_finite()) {
            return Err(Error::Quadrature(format!("non-finite band integral for [{alpha}, {beta}]")));
        }
        Ok((out[0], out[1]))
    }

    /// m₁ = I₁ − π(x + 2(α+β)t), m₂ = I₂ − (π/2)((α+β)x + (3α² + 2αβ + 3β²)t).
    pub fn moments(&self, alpha: f64, beta: f64, x: f64, t: f64, config: Config) -> Result<Moments> {
        let (i1, i2) = self.band_integrals(alpha, beta, config)?;
        let s = alpha + beta;
        let q = 3.0 * alpha * alpha + 2.0 * alpha * beta + 3.0 * beta * beta;
        Ok(Moments { m1: i1 - PI * (x + 2.0 * s * t), m2: i2 - 0.5 * PI * (s * x + q * t), i1, i2 })
    }

    /// Central-difference Jacobian [[m₁α, m₁β], [m₂α, m₂β]].
    pub fn jacobian(&self, alpha: f64, beta: f64, x: f64, t: f64, config: Config) -> Result<[[f64; 2]; 2]> {
        let h = self.newton.fd_step * self.st.crit.width();
        let d = |da: f64, db: f64| -> Result<(f64, f64)> {
            let p = self.moments(alpha + da, beta + db, x, t, config)?;
            let m = self.moments(alpha - da, beta - db, x, t, config)?;
            Ok(((p.m1 - m.m1) / (2.0 * h), (p.m2 - m.m2) / (2.0 * h)))
        };
        let (m1a, m2a) = d(h, 0.0)?;
        let (m1b, m2b) = d(0.0, h)?;
        Ok([[m1a, m1b], [m2a, m2b]])
    }

    /// Excluded neighbourhoods of t_a and t_b, where the Jacobian degenerates.
    pub fn time_margin(&self) -> f64 {
        0.05 * (self.st.crit.t_b - self.st.crit.t_a).abs()
    }

    /// The x = 0 solution (𝔞(t), 𝔟(t)) with its configuration.
    pub fn seed(&self, t: f64) -> Result<BandPoint> {
        let (ta, tb) = (self.st.crit.t_a, self.st.crit.t_b);
        if !(t > 0.0) || (t - ta).abs() < self.time_margin() || (t - tb).abs() < self.time_margin() {
            return Err(Error::Domain(format!("t = {t} is zero or too close to t_a = {ta:.6} / t_b = {tb:.6}")));
        }
        let p = &self.st.profile;
        let config = Config::at_time(self.st, t);
        let (alpha, beta) = (p.a(t), p.b(t));
        let m = self.moments(alpha, beta, 0.0, t, config)?;
        Ok(BandPoint { x: 0.0, t, alpha, beta, config, newton_residual: m.m1.abs().max(m.m2.abs()) })
    }

    /// Damped Newton on (m₁, m₂) = 0 at (x, t) from `guess`.
    pub fn newton(&self, guess: (f64, f64), x: f64, t: f64, config: Config) -> Result<BandPoint> {
        self.chord_newton(guess, x, t, config, None).map(|(bp, _)| bp)
    }

    /// Newton with an optional starting Jacobian, refreshed whenever the
    /// residual fails to drop by a factor of four. Returns the last
    /// Jacobian used so continuation can reuse it.
    fn chord_newton(&self, guess: (f64, f64), x: f64, t: f64, config: Config, jac: Option<Jac>) -> Result<(BandPoint, Jac)> {
        let c = &self.st.crit;
        let (mut a, mut b) = guess;
        let mut m = self.moments(a, b, x, t, config)?;
        let norm = |m: &Moments| m.m1.abs().max(m.m2.abs());
        let mut j = match jac {
            Some(j) => j,
            None => self.jacobian(a, b, x, t, config)?,
        };
        let mut fresh = jac.is_none();
        for _ in 0..self.newton.max_iter {
            if norm(&m) <= self.newton.tol {
                return Ok((BandPoint { x, t, alpha: a, beta: b, config, newton_residual: norm(&m) }, j));
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det.abs() > 1e-14) {
                return Err(Error::Newton(format!("singular Jacobian at (x, t) = ({x}, {t})")));
            }
            let da = -(j[1][1] * m.m1 - j[0][1] * m.m2) / det;
            let db = -(-j[1][0] * m.m1 + j[0][0] * m.m2) / det;
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda >= 1e-6 {
                let (na, nb) = (a + lambda * da, b + lambda * db);
                let ok = na > c.k_a && nb < c.k_b && nb - na > 1e-8;
                if ok && let Ok(nm) = self.moments(na, nb, x, t, config)
                    && norm(&nm) < norm(&m)
                {
                    let slow = norm(&nm) > 0.25 * norm(&m);
                    a = na;
                    b = nb;
                    m = nm;
                    accepted = true;
                    if slow && !fresh {
                        j = self.jacobian(a, b, x, t, config)?;
                        fresh = true;
                    }
                    break;
                }
                if !fresh {
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                if fresh {
                    return Err(Error::Newton(format!("line search stalled at (x, t) = ({x}, {t})")));
                }
                j = self.jacobian(a, b, x, t, config)?;
                fresh = true;
            }
        }
        if norm(&m) <= self.newton.tol {
            return Ok((BandPoint { x, t, alpha: a, beta: b, config, newton_residual: norm(&m) }, j));
        }
        Err(Error::Newton(format!("no convergence at (x, t) = ({x}, {t}), residual {:.3e}", norm(&m))))
    }

    /// (α_x, β_x) from implicit differentiation, ∂m/∂x = (−π, −(π/2)(α+β)).
    fn tangent(bp: &BandPoint, j: &Jac) -> (f64, f64) {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let r1 = PI;
        let r2 = 0.5 * PI * (bp.alpha + bp.beta);
        ((j[1][1] * r1 - j[0][1] * r2) / det, (-j[1][0] * r1 + j[0][0] * r2) / det)
    }

    /// (α_x, β_x) at a solution.
    pub fn slopes_in_x(&self, bp: &BandPoint) -> Result<(f64, f64)> {
        let j = self.jacobian(bp.alpha, bp.beta, bp.x, bp.t, bp.config)?;
        Ok(Self::tangent(bp, &j))
    }

    /// Continue `from` in x to `x_target` with tangent prediction and
    /// adaptive steps.
    pub fn continue_to(&self, from: BandPoint, x_target: f64) -> Result<BandPoint> {
        let mut cur = from;
        let mut jac = self.jacobian(cur.alpha, cur.beta, cur.x, cur.t, cur.config)?;
        let mut step = 1e-3 * self.st.crit.width();
        let cap = 0.05;
        let mut successes = 0;
        while (x_target - cur.x).abs() > 1e-15 {
            let dir = (x_target - cur.x).signum();
            let dx = dir * step.min((x_target - cur.x).abs());
            let (ax, bx) = Self::tangent(&cur, &jac);
            let guess = (cur.alpha + ax * dx, cur.beta + bx * dx);
            match self.chord_newton(guess, cur.x + dx, cur.t, cur.config, Some(jac)) {
                Ok((next, j)) => {
                    cur = next;
                    jac = j;
                    successes += 1;
                    if successes == 3 {
                        step = (2.0 * step).min(cap);
                        successes = 0;
                    }
                }
                Err(e) => {
                    step *= 0.5;
                    successes = 0;
                    jac = self.jacobian(cur.alpha, cur.beta, cur.x, cur.t, cur.config)?;
                    if step < 1e-8 {
                        return Err(Error::Newton(format!("continuation stalled near x = {}: {e}", cur.x)));
                    }
                }
            }
        }
        Ok(cur)
    }

    /// (α, β) at (x, t), continued from the x = 0 seed.
    pub fn band_endpoints(&self, x: f64, t: f64) -> Result<BandPoint> {
        let seed = self.seed(t)?;
        if x == 0.0 {
            return Ok(seed);
        }
        self.continue_to(seed, x)
    }

    /// Δ(k; t), φ′(k; t) and φ_B(t) at x = 0.
    pub fn delta_and_phi(&self, k: f64, t: f64) -> Result<DeltaPhi> {
        let p = &self.st.profile;
        let c = &self.st.crit;
        let tp = turning_points(p, c, k)?;
        let gaps = LevelGaps::new(p, c, k, tp.t_minus, tp.t_plus);
        let region = if t < tp.t_minus {
            Region::Void
        } else if t > tp.t_plus {
            Region::Saturated
        } else {
            Region::Band
        };
        // r(k; s) with the sign fixed by which side of the band k lies on.
        let phi_integrand = |s: f64| {
            let (ag, bg) = (gaps.a_gap(s), gaps.b_gap(s));
            let prod = ag * bg;
            if prod <= 0.0 {
                return 0.0;
            }
            let r = if ag > 0.0 { -prod.sqrt() } else { prod.sqrt() };
            let h = p.h(s);
            (4.0 * k * k + 2.0 * p.u(s) * k - 2.0 * h * h) / r
        };
        let band_integrand = |s: f64| (p.u(s) - 2.0 * k) * gaps.product(s).max(0.0).sqrt();
        let (delta, dphi) = match region {
            Region::Band => {
                let span = (t - tp.t_minus).sqrt();
                let d = integrate(|v| band_integrand(tp.t_minus + v * v) * 2.0 * v, 0.0, span, self.tol)?;
                (d, 0.0)
            }
            Region::Void => {
                let span = (tp.t_minus - t).sqrt();
                let v = integrate(|v| phi_integrand(tp.t_minus - v * v) * 2.0 * v, 0.0, span, self.tol)?;
                (0.0, -v)
            }
            Region::Saturated => {
                let span = (t - tp.t_plus).sqrt();
                let v = integrate(|v| phi_integrand(tp.t_plus + v * v) * 2.0 * v, 0.0, span, self.tol)?;
                (self.st.tau(k)?, v)
            }
        };
        Ok(DeltaPhi { region, delta, dphi, phi_b: self.phi_b(t)? })
    }

    /// φ_B(t) by integrating φ_B′ = (3𝔞² + 2𝔞𝔟 + 3𝔟²)/4 from φ_B(0) = −S(0)/2.
    pub fn phi_b(&self, t: f64) -> Result<f64> {
        let p = &self.st.profile;
        let v = integrate_split(
            |s| {
                let (a, b) = (p.a(s), p.b(s));
                0.25 * (3.0 * a * a + 2.0 * a * b + 3.0 * b * b)
            },
            0.0,
            t,
            &[1.0, 4.0, 16.0],
            self.tol,
        )?;
        Ok(-0.5 * p.s0 + v)
    }

    /// Band, void and saturated-region inequalities at x = 0.
    pub fn check_inequalities(&self, t: f64, kgrid: &[f64]) -> Result<InequalityReport> {
        let p = &self.st.profile;
        let (a, b) = (p.a(t), p.b(t));
        let rows: Vec<Result<Option<(f64, DeltaPhi, f64)>>> = kgrid
            .par_iter()
            .map(|&k| {
                if !self.st.crit.contains(k) || (k - a).abs() < 1e-9 || (k - b).abs() < 1e-9 {
                    return Ok(None);
                }
                let d = self.delta_and_phi(k, t)?;
                let tau = self.st.tau(k)?;
                Ok(Some((k, d, tau)))
            })
            .collect();
        let mut rep = InequalityReport { t, config: Some(Config::at_time(self.st, t)), ..Default::default() };
        for r in rows {
            let Some((k, d, tau)) = r? else { continue };
            let (ok, what) = match d.region {
                Region::Band => {
                    rep.band += 1;
                    (d.delta > 0.0 && d.delta < tau, "0 < Δ < τ")
                }
                Region::Void => {
                    rep.void += 1;
                    (d.dphi > 0.0, "φ′ > 0")
                }
                Region::Saturated => {
                    rep.saturated += 1;
                    (d.dphi < 0.0, "φ′ < 0")
                }
            };
            if !ok {
                rep.violations.push(format!("k = {k:.6}: {what} fails (Δ = {:.3e}, τ = {tau:.3e}, φ′ = {:.3e})", d.delta, d.dphi));
            }
        }
        Ok(rep)
    }

    /// Central-difference residuals of the Riemann-invariant system at
    /// (x, t) with spacing h, plus its (η, u) form.
    pub fn whitham_residual(&self, x: f64, t: f64, h: f64) -> Result<WhithamResidual> {
        let stencil = [(x, t), (x + h, t), (x - h, t), (x, t + h), (x, t - h)];
        let pts: Vec<Result<BandPoint>> = stencil.par_iter().map(|&(x, t)| self.band_endpoints(x, t)).collect();
        let pts: Vec<BandPoint> = pts.into_iter().collect::<Result<_>>()?;
        let [c, xp, xm, tp, tm] = [pts[0], pts[1], pts[2], pts[3], pts[4]];
        if pts.iter().any(|q| q.config != c.config) {
            return Err(Error::Domain("stencil straddles a configuration change".into()));
        }
        let dx = |f: fn(&BandPoint) -> f64| (f(&xp) - f(&xm)) / (2.0 * h);
        let dt = |f: fn(&BandPoint) -> f64| (f(&tp) - f(&tm)) / (2.0 * h);
        let (a, b) = (c.alpha, c.beta);
        let r_alpha = dt(|q| q.alpha) - (3.0 * a + b) * dx(|q| q.alpha);
        let r_beta = dt(|q| q.beta) - (a + 3.0 * b) * dx(|q| q.beta);
        let (eta, u) = (c.eta(), c.u());
        let r_eta = dt(|q| q.eta()) + 2.0 * u * dx(|q| q.eta()) + eta * dx(|q| q.u());
        let r_u = dt(|q| q.u()) + 4.0 * eta * dx(|q| q.eta()) + 2.0 * u * dx(|q| q.u());
        Ok(WhithamResidual { x, t, h, r_alpha, r_beta, r_eta, r_u, alpha: a, beta: b })
    }

    /// η e^{iσ/ε} with σ = S(t) + ∫₀ˣ u dx′ (Gauss rule along the continuation).
    pub fn plane_wave(&self, x: f64, t: f64, eps: f64) -> Result<PlaneWave> {
        let p = &self.st.profile;
        let seed = self.seed(t)?;
        let mut sigma = p.phase_s(t)?;
        let mut end = seed;
        if x != 0.0 {
            let (nodes, weights) = gauss_legendre(12);
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            order.sort_by(|&i, &j| nodes[i].total_cmp(&nodes[j]));
            let mut cur = seed;
            let mut integral = 0.0;
            for i in order {
                let xi = 0.5 * x * (nodes[i] + 1.0);
                cur = self.continue_to(cur, xi)?;
                integral += 0.5 * x * weights[i] * cur.u();
            }
            end = self.continue_to(cur, x)?;
            sigma += integral;
        }
        let eta = end.eta();
        Ok(PlaneWave { q: Complex64::from_polar(eta, sigma / eps), eta, u: end.u(), sigma, band: end })
    }
}

/// Which part of the x = 0 structure k belongs to at time t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Void,
    Band,
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaPhi {
    pub region: Region,
    /// 0 in voids, τ in saturated regions.
    pub delta: f64,
    /// 0 in the band.
    pub dphi: f64,
    pub phi_b: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InequalityReport {
    pub t: f64,
    pub config: Option<Config>,
    pub band: usize,
    pub void: usize,
    pub saturated: usize,
    pub violations: Vec<String>,
}

impl InequalityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhithamResidual {
    pub x: f64,
    pub t: f64,
    pub h: f64,
    pub r_alpha: f64,
    pub r_beta: f64,
    pub r_eta: f64,
    pub r_u: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl WhithamResidual {
    pub fn norm(&self) -> f64 {
        self.r_alpha.hypot(self.r_beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneWave {
    #[serde(skip)]
    pub q: Complex64,
    pub eta: f64,
    pub u: f64,
    pub sigma: f64,
    pub band: BandPoint,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st() -> &'static SpectralTransforms {
        static S: OnceLock<SpectralTransforms> = OnceLock::new();
        S.get_or_init(SpectralTransforms::example)
    }

    fn times() -> Vec<f64> {
        let g = GFunction::new(st());
        let c = &st().crit;
        crate::vacuum_domain::log_grid(0.1, 10.0, 26)
            .into_iter()
            .filter(|&t| (t - c.t_a).abs() > g.time_margin() && (t - c.t_b).abs() > g.time_margin())
            .take(20)
            .collect()
    }

    #[test]
    fn invariant_curves_solve_moments_at_origin() {
        let g = GFunction::new(st());
        let ts = times();
        assert_eq!(ts.len(), 20);
        for t in ts {
            let b = g.seed(t).unwrap();
            assert!(b.newton_residual < 1e-10, "t = {t}: {}", b.newton_residual);
            // Closed forms of the two band integrals.
            let m = g.moments(b.alpha, b.beta, 0.0, t, b.config).unwrap();
            let (a, bb) = (b.alpha, b.beta);
            let i1 = 2.0 * PI * (a + bb) * t;
            let i2 = 0.5 * PI * (3.0 * a * a + 2.0 * a * bb + 3.0 * bb * bb) * t;
            assert!(((m.i1 - i1) / i1).abs() < 1e-9 && ((m.i2 - i2) / i2).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn guarded_tau_prime_matches_leibniz_form() {
        let g = GFunction::new(st());
        let c = &st().crit;
        for k in [c.k_a + 0.5 * EDGE_GUARD * c.width(), c.k_b - 0.3 * EDGE_GUARD * c.width()] {
            assert!((g.tau_prime(k).unwrap() - st().dtau(k).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn configurations_of_example() {
        let s = st();
        assert_eq!(Config::at_time(s, 0.2), Config::Vbv);
        assert_eq!(Config::at_time(s, 0.5), Config::Sbv);
        assert_eq!(Config::at_time(s, 1.0), Config::Sbv);
        assert_eq!(Config::at_time(s, 2.0), Config::Sbs);
        assert_eq!(Config::at_time(s, 8.0), Config::Sbs);
    }

    #[test]
    fn rejects_times_near_critical_points() {
        let g = GFunction::new(st());
        assert!(g.seed(st().crit.t_a + 0.01).is_err());
        assert!(g.seed(st().crit.t_b - 0.01).is_err());
        assert!(g.seed(0.0).is_err());
    }

    #[test]
    fn jacobian_identities() {
        // ∂m₂/∂α = m₁/2 + α ∂m₁/∂α and likewise in β; at a solution
        // det J = (β − α) ∂m₁/∂α ∂m₁/∂β.
        let g = GFunction::new(st());
        for t in [0.3, 1.0, 3.0] {
            let b = g.seed(t).unwrap();
            for (da, db) in [(0.0, 0.0), (0.01, -0.02)] {
                let (a, bb) = (b.alpha + da, b.beta + db);
                let m = g.moments(a, bb, 0.0, t, b.config).unwrap();
                let j = g.jacobian(a, bb, 0.0, t, b.config).unwrap();
                let scale = j[0][0].abs().max(j[0][1].abs());
                assert!((j[1][0] - (0.5 * m.m1 + a * j[0][0])).abs() < 1e-6 * scale, "t = {t}");
                assert!((j[1][1] - (0.5 * m.m1 + bb * j[0][1])).abs() < 1e-6 * scale, "t = {t}");
            }
            let j = g.jacobian(b.alpha, b.beta, 0.0, t, b.config).unwrap();
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let pred = (b.beta - b.alpha) * j[0][0] * j[0][1];
            assert!((det - pred).abs() < 1e-6 * pred.abs(), "t = {t}: {det} vs {pred}");
        }
    }

    #[test]
    fn x_slopes_match_invariant_curve_speeds() {
        // At x = 0, α_t = 𝔞′(t) must equal (3α + β) α_x.
        let g = GFunction::new(st());
        let p = &st().profile;
        for t in [0.3, 1.0, 3.0] {
            let b = g.seed(t).unwrap();
            let (ax, bx) = g.slopes_in_x(&b).unwrap();
            assert!((p.da(t) - (3.0 * b.alpha + b.beta) * ax).abs() < 1e-6, "t = {t}");
            assert!((p.db(t) - (b.alpha + 3.0 * b.beta) * bx).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn continuation_round_trip() {
        let g = GFunction::new(st());
        let seed = g.seed(2.0).unwrap();
        let out = g.continue_to(seed, 0.1).unwrap();
        assert!(out.newton_residual <= 1e-10);
        let back = g.continue_to(out, 0.0).unwrap();
        assert!((back.alpha - seed.alpha).abs() < 1e-8 && (back.beta - seed.beta).abs() < 1e-8);
    }

    #[test]
    fn whitham_residual_is_second_order() {
        let g = GFunction::new(st());
        let r1 = g.whitham_residual(0.05, 1.0, 0.01).unwrap();
        let r2 = g.whitham_residual(0.05, 1.0, 0.005).unwrap();
        let ratio = r1.norm() / r2.norm();
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        // The (η, u) form is a fixed linear recombination.
        for r in [r1, r2] {
            assert!((r.r_eta - 0.5 * (r.r_beta - r.r_alpha)).abs() < 1e-10);
            assert!((r.r_u + r.r_alpha + r.r_beta).abs() < 1e-10);
        }
    }

    #[test]
    fn inequalities_hold_at_x_zero() {
        let g = GFunction::new(st());
        let c = &st().crit;
        let kg: Vec<f64> = (1..=200).map(|i| c.k_a + c.width() * i as f64 / 201.0).collect();
        for t in [1.0, 2.0] {
            let r = g.check_inequalities(t, &kg).unwrap();
            assert!(r.pass(), "{:?}", r.violations);
            assert!(r.band > 0 && r.saturated > 0);
        }
        let r = g.check_inequalities(0.2, &kg).unwrap();
        assert!(r.pass() && r.void > 0 && r.saturated == 0);
    }

    #[test]
    fn delta_grows_to_tau_across_the_band() {
        let g = GFunction::new(st());
        let k = -0.8;
        let tp = turning_points(&st().profile, &st().crit, k).unwrap();
        let mut prev = 0.0;
        for i in 1..10 {
            let t = tp.t_minus + (tp.t_plus - tp.t_minus) * i as f64 / 10.0;
            let d = g.delta_and_phi(k, t).unwrap();
            assert_eq!(d.region, Region::Band);
            assert!(d.delta > prev);
            prev = d.delta;
        }
        let end = g.delta_and_phi(k, tp.t_plus - 1e-9).unwrap().delta;
        assert!((end - st().tau(k).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn band_phase_is_half_the_boundary_phase() {
        let g = GFunction::new(st());
        for t in [0.3, 1.0, 4.0] {
            let s = st().profile.phase_s(t).unwrap();
            assert!((g.phi_b(t).unwrap() + 0.5 * s).abs() < 1e-8);
        }
    }

    #[test]
    fn plane_wave_reproduces_boundary_data() {
        let g = GFunction::new(st());
        let p = &st().profile;
        let t = 2.0;
        let w = g.plane_wave(0.0, t, 0.1).unwrap();
        assert!((w.eta - p.h(t)).abs() < 1e-12 && (w.u - p.u(t)).abs() < 1e-12);
        let w = g.plane_wave(0.02, t, 0.1).unwrap();
        let mid = g.band_endpoints(0.01, t).unwrap();
        assert!((w.sigma - p.phase_s(t).unwrap() - 0.02 * mid.u()).abs() < 1e-6);
        assert!((w.q.norm() - w.eta).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn moments_are_affine_in_x(da in -0.05f64..0.05, db in -0.03f64..0.0, x in -0.5f64..0.5) {
            let g = GFunction::new(st());
            let b = g.seed(1.0).unwrap();
            let (a, bb) = (b.alpha + da, b.beta + db);
            let m0 = g.moments(a, bb, 0.0, 1.0, b.config).unwrap();
            let m = g.moments(a, bb, x, 1.0, b.config).unwrap();
            prop_assert!((m.m1 - m0.m1 + PI * x).abs() < 1e-12);
            prop_assert!((m.m2 - m0.m2 + 0.5 * PI * (a + bb) * x).abs() < 1e-12);
        }

        #[test]
        fn config_sides_follow_slopes(da in -1.0f64..1.0, db in -1.0f64..1.0) {
            let c = Config::from_slopes(da, db);
            prop_assert_eq!(c.left_saturated(), da >= 0.0);
            prop_assert_eq!(c.right_saturated(), db <= 0.0);
        }
    }
}
