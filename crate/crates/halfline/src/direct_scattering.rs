//! Exact (finite-ε) direct scattering for the temporal Lax equation.
//!
//! The first column (f₁, f₂) of the normalised solution is carried in
//! Riccati form: ρ = f₂/f₁ and L = log f₁, plus ν = log(1 − |ρ|²) for real k.
//! This representation never overflows, and it keeps 1 − |ρ|² meaningful
//! when it falls far below machine precision, where |f₁|² and |f₂|²
//! agree to more than 16 digits.

use num_complex::Complex64;
use ode_solvers::{Dop853, OutputType, SVector, System};
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary_data::BoundaryProfile;
use crate::error::{Error, Result};
use crate::spectral_transforms::SpectralTransforms;

// The last component carries s itself: ode_solvers 0.6.2 evaluates the
// final Dop853 stage at the wrong abscissa, which only an autonomous
// system is immune to.
type State = SVector<f64, 8>;

/// ODE controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeTol {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on steps is `step_factor·ε/(1 + |k|²)`.
    pub step_factor: f64,
}

impl Default for OdeTol {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, step_factor: 0.2 }
    }
}

/// Result of one backward integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringSample {
    pub k_re: f64,
    pub k_im: f64,
    pub eps: f64,
    /// log A₀ for real k. For complex k it is the log of the analytic
    /// function A₀(k*)*.
    pub log_a0: (f64, f64),
    /// B₀/A₀ for real k (B₀(k*)*/A₀(k*)* otherwise, conjugated back).
    pub ratio: (f64, f64),
    /// Γ₀ = B₀*/A₀*.
    pub gamma0: (f64, f64),
    /// log(1 − |Γ₀|²) carried along the integration (real k only).
    pub log_unitarity: f64,
    /// ||A₀|² − |B₀|² − 1| for real k, 0 for complex k.
    pub det_defect: f64,
    pub trunc_t: f64,
}

impl ScatteringSample {
    pub fn gamma0(&self) -> Complex64 {
        Complex64::new(self.gamma0.0, self.gamma0.1)
    }

    pub fn log_a0(&self) -> Complex64 {
        Complex64::new(self.log_a0.0, self.log_a0.1)
    }

    pub fn a0(&self) -> Complex64 {
        self.log_a0().exp()
    }

    pub fn b0(&self) -> Complex64 {
        self.a0() * Complex64::new(self.ratio.0, self.ratio.1)
    }
}

struct Riccati<'a> {
    profile: &'a BoundaryProfile,
    k: Complex64,
    eps: f64,
    /// √(truncation time).
    root_end: f64,
}

impl Riccati<'_> {
    /// (iα, β) with the coefficient matrix [[iα, β], [β, −iα]].
    fn coefficients(&self, t: f64) -> (Complex64, Complex64) {
        let h = self.profile.h(t);
        let u = self.profile.u(t);
        let k = self.k;
        let i_alpha = Complex64::new(0.0, 0.5) * (u * u - 4.0 * k * k);
        let beta = h * (2.0 * k - u);
        (i_alpha, beta)
    }
}

impl System<f64, State> for Riccati<'_> {
    // Independent variable s = √t_end − √t: forward in s is backward in t,
    // and the √t onset of H becomes smooth.
    fn system(&self, _s: f64, y: &State, dy: &mut State) {
        let s = y[5];
        let sigma = (self.root_end - s).max(0.0);
        let t = sigma * sigma;
        let (i_alpha, beta) = self.coefficients(t);
        let rho = Complex64::new(y[0], y[1]);
        let d_rho = (beta - 2.0 * i_alpha * rho - beta * rho * rho) / self.eps;
        let d_l = (i_alpha + beta * rho) / self.eps;
        let d_nu = -2.0 * (beta * rho).re / self.eps;
        let j = -2.0 * sigma;
        dy[0] = j * d_rho.re;
        dy[1] = j * d_rho.im;
        dy[2] = j * d_l.re;
        dy[3] = j * d_l.im;
        dy[4] = j * d_nu;
        dy[5] = 1.0;
        // ψ = ρ/√(1 − |ρ|²) keeps 1 − |Γ₀|² = 1/(1 + |ψ|²) resolvable long
        // after |ρ| rounds to 1 (real k only, where α and β are real).
        if self.k.im == 0.0 {
            let psi = Complex64::new(y[6], y[7]);
            let q = psi.norm().hypot(1.0);
            let i = Complex64::new(0.0, 1.0);
            let d_psi = (beta * q - 2.0 * i_alpha * psi - i * beta * psi * psi.im / q) / self.eps;
            dy[6] = j * d_psi.re;
            dy[7] = j * d_psi.im;
        } else {
            dy[6] = 0.0;
            dy[7] = 0.0;
        }
    }
}

/// Integrate the Lax equation backward from `trunc_t` to 0 at spectral
/// parameter k (Im k² ≤ 0).
pub fn integrate_scattering_from(
    profile: &BoundaryProfile,
    k: Complex64,
    eps: f64,
    trunc_t: f64,
    tol: OdeTol,
) -> Result<ScatteringSample> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    if (k * k).im > 1e-14 {
        return Err(Error::Domain(format!("need Im k² ≤ 0, got k = {k}")));
    }
    let s_end = profile.phase_s(trunc_t)?;
    let l0 = Complex64::new(0.0, -1.0) * (4.0 * k * k * trunc_t + s_end) / (2.0 * eps);
    let y0 = State::from([0.0, 0.0, l0.re, l0.im, 0.0, 0.0, 0.0, 0.0]);
    let root_end = trunc_t.sqrt();
    // The step bound in t maps to h/(2√t) ≥ h/(2√t_end) in the new variable.
    let h_max = tol.step_factor * eps / (1.0 + k.norm_sqr()) / (2.0 * root_end);
    let sys = Riccati { profile, k, eps, root_end };
    let n_max = ((root_end / h_max) * 20.0).max(1e5).min(u32::MAX as f64) as u32;
    let mut solver = Dop853::from_param(
        sys,
        0.0,
        root_end,
        root_end,
        y0,
        tol.rtol,
        tol.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        h_max,
        0.0,
        n_max,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| Error::Integration(format!("{e} at k = {k}, ε = {eps}")))?;
    let y = solver
        .y_out()
        .last()
        .copied()
        .ok_or_else(|| Error::Integration("solver produced no output".into()))?;
    let rho = Complex64::new(y[0], y[1]);
    let log_f1 = Complex64::new(y[2], y[3]);
    let nu = y[4];
    let s0 = profile.s0;
    // A₀(k*)* = e^{iS₀/(2ε)} f₁(0), B₀(k*)* = e^{−iS₀/(2ε)} f₂(0).
    let log_d0 = log_f1 + Complex64::new(0.0, s0 / (2.0 * eps));
    let gamma = rho * Complex64::from_polar(1.0, -s0 / eps);
    let real = k.im == 0.0;
    let (log_a0, ratio) = if real { (log_d0.conj(), gamma.conj()) } else { (log_d0, gamma) };
    // |A₀|² − |B₀|² = |A₀|²/(1 + |ψ|²). The carried ν cancels 2 Re log f₁
    // identically under any Runge–Kutta step, so it cannot serve as a check.
    let psi = Complex64::new(y[6], y[7]);
    let det_defect = if real { (2.0 * log_f1.re - psi.norm_sqr().ln_1p()).exp_m1().abs() } else { 0.0 };
    Ok(ScatteringSample {
        k_re: k.re,
        k_im: k.im,
        eps,
        log_a0: (log_a0.re, log_a0.im),
        ratio: (ratio.re, ratio.im),
        gamma0: (gamma.re, gamma.im),
        log_unitarity: if real { nu } else { f64::NAN },
        det_defect,
        trunc_t,
    })
}

/// [`integrate_scattering_from`] with the profile's decay horizon.
pub fn integrate_scattering(profile: &BoundaryProfile, k: Complex64, eps: f64, tol: OdeTol) -> Result<ScatteringSample> {
    integrate_scattering_from(profile, k, eps, profile.tmax_eff, tol)
}

/// Γ₀(k) for real k.
pub fn gamma0(profile: &BoundaryProfile, k: f64, eps: f64, tol: OdeTol) -> Result<Complex64> {
    Ok(integrate_scattering(profile, Complex64::new(k, 0.0), eps, tol)?.gamma0())
}

/// One (k, ε) row of the Γ₀ versus Γ̃ comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaError {
    pub k: f64,
    pub eps: f64,
    pub gamma0: (f64, f64),
    pub abs_err: f64,
    /// |(1 − |Γ₀|²)e^{2τ/ε} − 1|.
    pub modulus_err: f64,
    /// |arg(Γ₀ e^{2iΦ/ε})|.
    pub phase_err: f64,
    pub det_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<GammaError>,
    /// (ε, max |Γ₀ − Γ̃| over the grid) in sweep order.
    pub max_err: Vec<(f64, f64)>,
    /// Least-squares slope of log max-error against log ε.
    pub order: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Compare exact Γ₀ with the model Γ̃ on `kgrid` for each ε (parallel
/// over the grid, rows in input order).
pub fn compare_gamma(st: &SpectralTransforms, kgrid: &[f64], eps_list: &[f64], tol: OdeTol) -> Result<ErrorTable> {
    let jobs: Vec<(f64, f64)> = eps_list.iter().flat_map(|&e| kgrid.iter().map(move |&k| (k, e))).collect();
    let model: Vec<(f64, f64)> = kgrid.par_iter().map(|&k| Ok((st.tau(k)?, st.phi(k)?))).collect::<Result<_>>()?;
    let rows: Vec<GammaError> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(k, eps))| {
            let (tau, phi) = model[i % kgrid.len()];
            let s = integrate_scattering(&st.profile, Complex64::new(k, 0.0), eps, tol)?;
            let g0 = s.gamma0();
            let gt = crate::spectral_transforms::gamma_from(tau, phi, eps);
            let phase = (g0 * Complex64::from_polar(1.0, 2.0 * phi / eps)).arg().abs();
            Ok(GammaError {
                k,
                eps,
                gamma0: s.gamma0,
                abs_err: (g0 - gt).norm(),
                modulus_err: (s.log_unitarity + 2.0 * tau / eps).exp_m1().abs(),
                phase_err: phase,
                det_defect: s.det_defect,
            })
        })
        .collect::<Result<_>>()?;
    let max_err: Vec<(f64, f64)> = eps_list
        .iter()
        .map(|&e| (e, rows.iter().filter(|r| r.eps == e).map(|r| r.abs_err).fold(0.0, f64::max)))
        .collect();
    let order = if max_err.len() >= 2 { loglog_slope(&max_err) } else { f64::NAN };
    Ok(ErrorTable { rows, max_err, order })
}

/// Default comparison grid: `n` points uniformly spread over the support
/// minus endpoint neighbourhoods of width 0.05·(k_b − k_a), nudged out
/// of the k₀ and k_∞ windows.
pub fn default_compare_grid(st: &SpectralTransforms, n: usize) -> Vec<f64> {
    let c = &st.crit;
    let lo = c.k_a + 0.05 * c.width();
    let hi = c.k_b - 0.05 * c.width();
    let mut grid = Vec::with_capacity(n);
    let mut m = n;
    while grid.len() < n {
        grid = (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .filter(|&k| st.outside_windows(k))
            .collect();
        m += 1;
    }
    grid.truncate(n);
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub k_re: f64,
    pub k_im: f64,
    pub abs_gamma0: f64,
    /// |Γ₀|(1 + |k|³)/√ε.
    pub scaled: f64,
    pub abs_a0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub eps: f64,
    pub points: Vec<BoundPoint>,
    pub max_scaled: f64,
    pub min_abs_a0: f64,
}

/// Ten points of the closed set {π/2 ≤ arg k ≤ π} minus the δ-strip over
/// the support.
pub fn default_qii_grid(st: &SpectralTransforms, delta: f64) -> Vec<Complex64> {
    let c = &st.crit;
    let mut g = vec![
        Complex64::new(c.k_a - delta, 0.0),
        Complex64::new(c.k_a - delta - 0.5, 0.0),
        Complex64::new(c.k_a - delta - 1.5, 0.0),
        Complex64::new(c.k_b + delta, 0.0),
        Complex64::new(-1.0, delta),
        Complex64::new(-0.5, 2.0 * delta),
        Complex64::new(-1.5, 1.0),
        Complex64::new(-0.1, 1.0),
        Complex64::new(0.0, 2.0),
        Complex64::new(-2.0, 2.0),
    ];
    g.retain(|k| k.re <= 0.0);
    g
}

/// Check that `k` lies in the set for `delta`.
pub fn in_qii(st: &SpectralTransforms, k: Complex64, delta: f64) -> bool {
    let c = &st.crit;
    k.re <= 0.0 && k.im >= 0.0 && (k.re <= c.k_a - delta || k.re >= c.k_b + delta || k.im >= delta)
}

/// Scan |Γ₀| and |A₀| over points of the second-quadrant region.
pub fn qii_scan(st: &SpectralTransforms, kgrid: &[Complex64], eps: f64, delta: f64, tol: OdeTol) -> Result<BoundReport> {
    if let Some(k) = kgrid.iter().find(|&&k| !in_qii(st, k, delta)) {
        return Err(Error::Domain(format!("k = {k} is outside the scan region for δ = {delta}")));
    }
    let points: Vec<BoundPoint> = kgrid
        .par_iter()
        .map(|&k| {
            let s = integrate_scattering(&st.profile, k, eps, tol)?;
            let g = s.gamma0().norm();
            Ok(BoundPoint {
                k_re: k.re,
                k_im: k.im,
                abs_gamma0: g,
                scaled: g * (1.0 + k.norm().powi(3)) / eps.sqrt(),
                abs_a0: s.log_a0().re.exp(),
            })
        })
        .collect::<Result<_>>()?;
    let max_scaled = points.iter().map(|p| p.scaled).fold(0.0, f64::max);
    let min_abs_a0 = points.iter().map(|p| p.abs_a0).fold(f64::INFINITY, f64::min);
    Ok(BoundReport { eps, points, max_scaled, min_abs_a0 })
}
