//! The ε-independent spectral functions of the boundary data: the
//! amplitude exponent τ, the phase Φ and its derivatives, the
//! phase correction ℓ, and the model reflection coefficient built from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary_data::{BoundaryProfile, CriticalStructure, LevelGaps, critical_structure, turning_points};
use crate::error::{Error, Result};
use crate::quadrature::{QuadTol, integrate, integrate_split};

/// Evaluator for the spectral functions of one profile.
#[derive(Debug, Clone)]
pub struct SpectralTransforms {
    pub profile: BoundaryProfile,
    pub crit: CriticalStructure,
    pub tol: QuadTol,
    /// Half-width of the windows around k₀ and k_∞ excluded from ℓ and
    /// from the asymptotic scattering pair.
    pub exclusion_radius: f64,
}

/// Φ with three derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiDerivatives {
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
    pub d3phi: f64,
}

/// Endpoint slopes of τ and the logarithmic coefficients of Φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointSlopes {
    pub dtau_a: f64,
    pub dtau_b: f64,
    pub c_a: f64,
    pub c_b: f64,
}

/// Leading-order scattering pair at real k. Moduli overflow quickly, so
/// the common factor e^{τ/ε} is kept separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPair {
    pub a0: Complex64,
    pub b0: Complex64,
    pub log_modulus: f64,
}

impl AsymptoticPair {
    /// B₀*/A₀*.
    pub fn gamma(&self) -> Complex64 {
        (self.b0 / self.a0).conj()
    }
}

/// sgn((k − k₀)(k + k₀)).
fn sign_k0(k: f64, k0: f64) -> f64 {
    let s = (k - k0) * (k + k0);
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl SpectralTransforms {
    pub fn new(profile: BoundaryProfile) -> Result<Self> {
        let crit = critical_structure(&profile)?;
        Ok(Self::with_structure(profile, crit))
    }

    pub fn with_structure(profile: BoundaryProfile, crit: CriticalStructure) -> Self {
        let exclusion_radius = 0.02 * crit.width();
        Self { profile, crit, tol: QuadTol::new(1e-13, 1e-12), exclusion_radius }
    }

    pub fn example() -> Self {
        Self::new(BoundaryProfile::example()).expect("example profile is admissible")
    }

    /// True when k is at least `exclusion_radius` from k₀ and k_∞.
    pub fn outside_windows(&self, k: f64) -> bool {
        (k - self.crit.k0).abs() >= self.exclusion_radius && (k - self.crit.kinf).abs() >= self.exclusion_radius
    }

    /// Integrate `f(t)` over [t₋, t₊] with t = c − h·cos θ, which removes
    /// inverse and direct square-root behaviour at both turning points.
    fn between_turning_points(&self, t_minus: f64, t_plus: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let c = 0.5 * (t_minus + t_plus);
        let h = 0.5 * (t_plus - t_minus);
        integrate(|th| f(c - h * th.cos()) * h * th.sin(), 0.0, PI, self.tol)
    }

    /// Integrate over [0, t₋]. With `w` = t₊ − t₋ finite, t = t₋ − w·sinh²v
    /// turns the factor 1/√((t₋ − t)(t₊ − t)) into a constant, which keeps
    /// the rule accurate when the turning points nearly coalesce; otherwise
    /// t = t₋(1 − cos θ)/2.
    fn before_turning_point(&self, t_minus: f64, w: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        if t_minus <= 0.0 {
            return Ok(0.0);
        }
        if w.is_finite() && w > 0.0 {
            let vmax = (t_minus / w).sqrt().asinh();
            return integrate(
                |v| {
                    let s = v.sinh();
                    f((t_minus - w * s * s).max(0.0)) * 2.0 * w * s * v.cosh()
                },
                0.0,
                vmax,
                self.tol,
            );
        }
        let h = 0.5 * t_minus;
        integrate(|th| f(h * (1.0 - th.cos())) * h * th.sin(), 0.0, PI, self.tol)
    }

    fn turning(&self, k: f64) -> Result<(f64, f64)> {
        let tp = turning_points(&self.profile, &self.crit, k)?;
        if !tp.t_plus.is_finite() {
            return Err(Error::Domain(format!("t+ diverges at k = {k}")));
        }
        Ok((tp.t_minus, tp.t_plus))
    }

    /// τ(k) = ∫_{t₋}^{t₊} (U − 2k)√((k − 𝔞)(𝔟 − k)) dt, zero outside (k_a, k_b).
    pub fn tau(&self, k: f64) -> Result<f64> {
        if k <= self.crit.k_a || k >= self.crit.k_b {
            return Ok(0.0);
        }
        if (k - self.crit.k_a).abs() <= 1e-12 || (k - self.crit.k_b).abs() <= 1e-12 {
            return Ok(0.0);
        }
        let p = &self.profile;
        let (tm, tp) = self.turning(k)?;
        let gaps = LevelGaps::new(p, &self.crit, k, tm, tp);
        self.between_turning_points(tm, tp, |t| {
            let r2 = gaps.product(t).max(0.0);
            (p.u(t) - 2.0 * k) * r2.sqrt()
        })
    }

    /// τ′(k) by differentiation under the integral sign.
    pub fn dtau(&self, k: f64) -> Result<f64> {
        if !self.crit.contains(k) {
            return Err(Error::Domain(format!("τ′ requested outside the support at k = {k}")));
        }
        let p = &self.profile;
        let (tm, tp) = self.turning(k)?;
        let gaps = LevelGaps::new(p, &self.crit, k, tm, tp);
        self.between_turning_points(tm, tp, |t| {
            let r2 = gaps.product(t);
            if r2 <= 0.0 {
                return 0.0;
            }
            let u = p.u(t);
            (-2.0 * r2 - 0.5 * (u - 2.0 * k) * (u + 2.0 * k)) / r2.sqrt()
        })
    }

    /// Closed-form slopes of τ at the support endpoints.
    pub fn tau_prime_endpoints(&self) -> EndpointSlopes {
        let p = &self.profile;
        let c = &self.crit;
        let dtau_a = 0.5 * PI * (p.u(c.t_a) - 2.0 * c.k_a) * (p.b(c.t_a) - c.k_a).sqrt() / (0.5 * c.curv_a).sqrt();
        let dtau_b = -0.5 * PI * (p.u(c.t_b) - 2.0 * c.k_b) * (c.k_b - p.a(c.t_b)).sqrt() / (-0.5 * c.curv_b).sqrt();
        EndpointSlopes { dtau_a, dtau_b, c_a: dtau_a / (2.0 * PI), c_b: -dtau_b / (2.0 * PI) }
    }

    /// Turning points extended to the closed support (both equal to the
    /// extremum time at an endpoint). t₊ may be infinite.
    fn turning_closed(&self, k: f64) -> Result<(f64, f64)> {
        let c = &self.crit;
        if k == c.k_a {
            Ok((c.t_a, c.t_a))
        } else if k == c.k_b {
            Ok((c.t_b, c.t_b))
        } else {
            let tp = turning_points(&self.profile, c, k)?;
            Ok((tp.t_minus, tp.t_plus))
        }
    }

    fn check_closed(&self, k: f64) -> Result<()> {
        if !(k >= self.crit.k_a && k <= self.crit.k_b) {
            return Err(Error::Domain(format!("Φ requested outside [{}, {}] at k = {k}", self.crit.k_a, self.crit.k_b)));
        }
        Ok(())
    }

    /// Φ(k) = S(0)/2 + sgn(k² − k₀²)∫₀^{t₋}(U − 2k)√((k − 𝔞)(k − 𝔟)) dt.
    pub fn phi(&self, k: f64) -> Result<f64> {
        self.check_closed(k)?;
        let p = &self.profile;
        let s = sign_k0(k, self.crit.k0);
        if s == 0.0 {
            return Ok(0.5 * p.s0);
        }
        let (tm, tp) = self.turning_closed(k)?;
        let gaps = LevelGaps::new(p, &self.crit, k, tm, tp);
        let v = self.before_turning_point(tm, tp - tm, |t| {
            let r2 = (-gaps.product(t)).max(0.0);
            (p.u(t) - 2.0 * k) * r2.sqrt()
        })?;
        Ok(0.5 * p.s0 + s * v)
    }

    /// Φ′(k) = −sgn(k² − k₀²)∫₀^{t₋}(4k² + 2Uk − 2H²)/√((k − 𝔞)(k − 𝔟)) dt.
    pub fn dphi(&self, k: f64) -> Result<f64> {
        if !self.crit.contains(k) {
            return Err(Error::Domain(format!("Φ′ requested outside the open support at k = {k}")));
        }
        let p = &self.profile;
        let s = sign_k0(k, self.crit.k0);
        if s == 0.0 {
            return Ok(0.0);
        }
        let tp = turning_points(p, &self.crit, k)?;
        let gaps = LevelGaps::new(p, &self.crit, k, tp.t_minus, tp.t_plus);
        let v = self.before_turning_point(tp.t_minus, tp.t_plus - tp.t_minus, |t| {
            let r2 = -gaps.product(t);
            if r2 <= 0.0 {
                return 0.0;
            }
            let h = p.h(t);
            (4.0 * k * k + 2.0 * p.u(t) * k - 2.0 * h * h) / r2.sqrt()
        })?;
        Ok(-s * v)
    }

    /// Difference step for Φ″ and Φ‴: small, and never straddling k₀ or
    /// an endpoint.
    fn fd_step(&self, k: f64) -> f64 {
        let c = &self.crit;
        let mut h = 1e-3 * c.width();
        let d0 = (k - c.k0).abs();
        if d0 > 0.0 {
            h = h.min(0.25 * d0);
        }
        h.min(0.25 * (k - c.k_a)).min(0.25 * (c.k_b - k))
    }

    /// Φ″ by Richardson-extrapolated central differences of Φ′.
    pub fn d2phi(&self, k: f64) -> Result<f64> {
        let c = &self.crit;
        if k == c.k0 {
            return Ok(0.0);
        }
        let h = self.fd_step(k);
        let d = |h: f64| -> Result<f64> { Ok((self.dphi(k + h)? - self.dphi(k - h)?) / (2.0 * h)) };
        let (d1, d2) = (d(h)?, d(0.5 * h)?);
        Ok((4.0 * d2 - d1) / 3.0)
    }

    /// Φ‴ by Richardson-extrapolated second differences of Φ′; the
    /// closed form 16k₀/h₀² at k₀ itself.
    pub fn d3phi(&self, k: f64) -> Result<f64> {
        let c = &self.crit;
        if k == c.k0 {
            return Ok(16.0 * c.k0 / (self.profile.h0 * self.profile.h0));
        }
        let h = self.fd_step(k);
        let f0 = self.dphi(k)?;
        let d = |h: f64| -> Result<f64> { Ok((self.dphi(k + h)? - 2.0 * f0 + self.dphi(k - h)?) / (h * h)) };
        let (d1, d2) = (d(h)?, d(0.5 * h)?);
        Ok((4.0 * d2 - d1) / 3.0)
    }

    pub fn phi_cap(&self, k: f64) -> Result<PhiDerivatives> {
        Ok(PhiDerivatives { phi: self.phi(k)?, dphi: self.dphi(k)?, d2phi: self.d2phi(k)?, d3phi: self.d3phi(k)? })
    }

    /// Symmetric second-difference quotient (Φ′(k₀ + h) + Φ′(k₀ − h))/h²,
    /// Richardson-extrapolated; an independent estimate of Φ‴(k₀).
    pub fn d3phi_at_k0_by_differences(&self, h: f64) -> Result<f64> {
        let k0 = self.crit.k0;
        let q = |h: f64| -> Result<f64> { Ok((self.dphi(k0 + h)? + self.dphi(k0 - h)?) / (h * h)) };
        let (q1, q2) = (q(h)?, q(0.5 * h)?);
        Ok((4.0 * q2 - q1) / 3.0)
    }

    /// ℓ(k) = ∫_{t₊}^∞ [(U − 2k)√((k − 𝔞)(k − 𝔟)) − 2|k² − k_∞²|] dt − 2|k² − k_∞²| t₊.
    pub fn ell(&self, k: f64) -> Result<f64> {
        let c = &self.crit;
        if !(k >= c.k_a && k <= c.k_b) {
            return Err(Error::Domain(format!("ℓ requested outside the support at k = {k}")));
        }
        if (k - c.kinf).abs() < self.exclusion_radius {
            return Err(Error::Domain(format!("ℓ requested within the k_∞ window at k = {k}")));
        }
        let p = &self.profile;
        let t_plus = if k == c.k_a {
            c.t_a
        } else if k == c.k_b {
            c.t_b
        } else {
            self.turning(k)?.1
        };
        let end = p.tmax_eff;
        if t_plus >= end {
            return Err(Error::Domain(format!("t+ = {t_plus} exceeds the decay horizon at k = {k}")));
        }
        let lim = 2.0 * (k * k - c.kinf * c.kinf).abs();
        let g = |t: f64| {
            let r2 = ((k - p.a(t)) * (k - p.b(t))).max(0.0);
            (p.u(t) - 2.0 * k) * r2.sqrt() - lim
        };
        // t = t₊ + s² near the turning point, plain t further out.
        let near = (t_plus + 1.0).min(end);
        let head = integrate(|s| 2.0 * s * g(t_plus + s * s), 0.0, (near - t_plus).sqrt(), self.tol)?;
        let splits: Vec<f64> = (1..).map(|j| near + 2.0 * j as f64).take_while(|&s| s < end).collect();
        let tail = integrate_split(g, near, end, &splits, self.tol)?;
        Ok(head + tail - lim * t_plus)
    }

    pub fn ell_and_s_inf(&self, k: f64) -> Result<(f64, f64)> {
        Ok((self.ell(k)?, self.profile.s_inf()?))
    }

    /// Γ̃(k) at ε.
    pub fn gamma_tilde(&self, k: f64, eps: f64) -> Result<Complex64> {
        if !self.crit.contains(k) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(gamma_from(self.tau(k)?, self.phi(k)?, eps))
    }

    /// Leading-order (A₀, B₀) at real k outside the exclusion windows.
    pub fn asymptotic_scattering(&self, k: f64, eps: f64) -> Result<AsymptoticPair> {
        if !self.crit.contains(k) || !self.outside_windows(k) {
            return Err(Error::Domain(format!("asymptotic pair needs k inside the support and outside the windows, got {k}")));
        }
        let tau = self.tau(k)?;
        let phi = self.phi(k)?;
        let ell = self.ell(k)?;
        let s_inf = self.profile.s_inf()?;
        let sgn = if k * k > self.crit.kinf * self.crit.kinf { 1.0 } else { -1.0 };
        let common = -(ell * sgn - 0.5 * s_inf) / eps;
        let a0 = -Complex64::from_polar(1.0, common - phi / eps);
        let b0 = -Complex64::from_polar(1.0, common + phi / eps);
        let m = (tau / eps).exp();
        Ok(AsymptoticPair { a0: a0 * m, b0: b0 * m, log_modulus: tau / eps })
    }
}

/// Γ̃ from its exponents: √(1 − e^{−2τ/ε})·e^{−2iΦ/ε}.
pub fn gamma_from(tau: f64, phi: f64, eps: f64) -> Complex64 {
    let amp = (-(-2.0 * tau / eps).exp_m1()).max(0.0).sqrt();
    Complex64::from_polar(amp, -2.0 * phi / eps)
}

/// Sampled transforms on a k-grid.
#[derive(Debug, Clone, Serialize)]
pub struct TransformTable {
    pub kgrid: Vec<f64>,
    pub tau: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    /// NaN inside the k_∞ window.
    pub ell: Vec<f64>,
    pub s_inf: f64,
    pub exclusion_radius: f64,
    pub slopes: EndpointSlopes,
}

impl TransformTable {
    /// Uniform grid with `n` points including both support endpoints.
    pub fn uniform_grid(crit: &CriticalStructure, n: usize) -> Vec<f64> {
        assert!(n >= 2);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    crit.k_b
                } else {
                    crit.k_a + crit.width() * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Evaluate all transforms on `kgrid` (parallel over grid points).
    /// At the support endpoints τ = 0, Φ′ = −∞ and Φ″ is NaN.
    pub fn build(st: &SpectralTransforms, kgrid: &[f64]) -> Result<Self> {
        let c = st.crit;
        let rows: Vec<Result<[f64; 6]>> = kgrid
            .par_iter()
            .map(|&k| {
                let tau = st.tau(k)?;
                let phi = st.phi(k)?;
                let interior = c.contains(k) && (k - c.k_a) > 1e-12 && (c.k_b - k) > 1e-12;
                let (dphi, d2phi) =
                    if interior { (st.dphi(k)?, st.d2phi(k)?) } else { (f64::NEG_INFINITY, f64::NAN) };
                let ell = if (k - c.kinf).abs() >= st.exclusion_radius { st.ell(k)? } else { f64::NAN };
                Ok([k, tau, phi, dphi, d2phi, ell])
            })
            .collect();
        let mut t = TransformTable {
            kgrid: Vec::with_capacity(kgrid.len()),
            tau: Vec::new(),
            phi: Vec::new(),
            dphi: Vec::new(),
            d2phi: Vec::new(),
            ell: Vec::new(),
            s_inf: st.profile.s_inf()?,
            exclusion_radius: st.exclusion_radius,
            slopes: st.tau_prime_endpoints(),
        };
        for r in rows {
            let r = r?;
            t.kgrid.push(r[0]);
            t.tau.push(r[1]);
            t.phi.push(r[2]);
            t.dphi.push(r[3]);
            t.d2phi.push(r[4]);
            t.ell.push(r[5]);
        }
        Ok(t)
    }
}
