//! Direct numerical solution of the model Riemann–Hilbert problem on the
//! support [k_a, k_b]: M̃ = I + C[u] with a 2×2 density u collocated at
//! Gauss nodes on graded panels, Cauchy integrals by Legendre-Q product
//! integration, and a dense LU solve.

use std::f64::consts::PI;

use faer::Mat;
use faer::linalg::solvers::Solve;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, legendre_p, legendre_q};
use crate::spectral_transforms::{SpectralTransforms, gamma_from};

type C2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IDENTITY: C2 = [[ONE, ZERO], [ZERO, ONE]];

fn mat_mul(a: &C2, b: &C2) -> C2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_sub(a: &C2, b: &C2) -> C2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

fn mat_norm(a: &C2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn det(a: &C2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Source of the jump datum: the exponents (τ, Φ) of Γ̃ on its support.
pub trait ReflectionData: Sync {
    fn support(&self) -> (f64, f64);
    /// Interior points where Γ̃ loses smoothness.
    fn breaks(&self) -> Vec<f64>;
    fn exponents(&self, k: f64) -> Result<(f64, f64)>;
}

impl ReflectionData for SpectralTransforms {
    fn support(&self) -> (f64, f64) {
        (self.crit.k_a, self.crit.k_b)
    }
    fn breaks(&self) -> Vec<f64> {
        vec![self.crit.k0, self.crit.kinf]
    }
    fn exponents(&self, k: f64) -> Result<(f64, f64)> {
        Ok((self.tau(k)?, self.phi(k)?))
    }
}

/// Γ̃ ≡ 0 on a given interval, as produced by vanishing amplitude data.
#[derive(Debug, Clone, Copy)]
pub struct NoReflection {
    pub lo: f64,
    pub hi: f64,
}

impl ReflectionData for NoReflection {
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }
    fn exponents(&self, _k: f64) -> Result<(f64, f64)> {
        Ok((0.0, 0.0))
    }
}

/// J(k) = [[1 − |Γ̃|², −Γ̃* e^{−2iθ/ε}], [Γ̃ e^{2iθ/ε}, 1]] with θ = kx + 2k²t.
pub fn build_jump(gamma: Complex64, k: f64, x: f64, t: f64, eps: f64) -> C2 {
    let e = Complex64::from_polar(1.0, 2.0 * (k * x + 2.0 * k * k * t) / eps);
    [[ONE - gamma.norm_sqr(), -gamma.conj() / e], [gamma * e, ONE]]
}

/// Panel layout controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptions {
    pub nodes_per_panel: usize,
    /// Geometric refinement levels toward each support endpoint.
    pub levels: usize,
    pub ratio: f64,
    /// Panels wider than this are split evenly.
    pub max_width: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { nodes_per_panel: 16, levels: 16, ratio: 0.3, max_width: 0.07 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RhpDiscretization {
    pub panels: Vec<(f64, f64)>,
    pub nodes_per_panel: usize,
    pub total_nodes: usize,
    /// Panels graded geometrically toward the support endpoints.
    pub mapped: bool,
    #[serde(skip)]
    nodes: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
    #[serde(skip)]
    ref_nodes: Vec<f64>,
    #[serde(skip)]
    ref_weights: Vec<f64>,
}

impl RhpDiscretization {
    pub fn new(panels: Vec<(f64, f64)>, nodes_per_panel: usize, mapped: bool) -> Result<Self> {
        if nodes_per_panel < 16 {
            return Err(Error::Domain(format!("nodes_per_panel must be at least 16, got {nodes_per_panel}")));
        }
        if panels.is_empty() || panels.iter().any(|&(a, b)| !(b > a)) {
            return Err(Error::Domain("panels must be non-empty increasing intervals".into()));
        }
        if panels.windows(2).any(|w| w[0].1 != w[1].0) {
            return Err(Error::Domain("panels must tile an interval without gaps or overlap".into()));
        }
        let (rn, rw) = gauss_legendre(nodes_per_panel);
        let mut nodes = Vec::with_capacity(panels.len() * nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for &(a, b) in &panels {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            nodes.extend(rn.iter().map(|s| c + h * s));
            weights.extend(rw.iter().map(|w| h * w));
        }
        Ok(Self { total_nodes: nodes.len(), panels, nodes_per_panel, mapped, nodes, weights, ref_nodes: rn, ref_weights: rw })
    }

    /// Panels split at `breaks`, graded toward both ends, then capped in width.
    pub fn graded(lo: f64, hi: f64, breaks: &[f64], opts: GridOptions) -> Result<Self> {
        let mut pts = vec![lo, hi];
        pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let n = pts.len() - 1;
        let mut coarse = Vec::new();
        for i in 0..n {
            let (a, b) = (pts[i], pts[i + 1]);
            let w = b - a;
            let mut cuts = vec![a, b];
            if i == 0 {
                cuts.extend((1..=opts.levels).map(|l| a + w * opts.ratio.powi(l as i32)));
            }
            if i == n - 1 {
                cuts.extend((1..=opts.levels).map(|l| b - w * opts.ratio.powi(l as i32)));
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            coarse.extend(cuts.windows(2).map(|c| (c[0], c[1])));
        }
        let mut panels = Vec::new();
        for (a, b) in coarse {
            let m = ((b - a) / opts.max_width).ceil().max(1.0) as usize;
            let edges: Vec<f64> = (0..=m).map(|j| if j == m { b } else { a + (b - a) * j as f64 / m as f64 }).collect();
            panels.extend(edges.windows(2).map(|e| (e[0], e[1])));
        }
        Self::new(panels, opts.nodes_per_panel, opts.levels > 0)
    }

    /// Same panels with twice the nodes on each.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.panels.clone(), 2 * self.nodes_per_panel, self.mapped)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node count needed to resolve e^{2iθ/ε} on the support.
    pub fn required_nodes(lo: f64, hi: f64, x: f64, t: f64, eps: f64) -> usize {
        let slope = (x + 4.0 * lo * t).abs().max((x + 4.0 * hi * t).abs());
        (8.0 * (hi - lo) * slope / (PI * eps)).ceil() as usize
    }

    pub fn resolves(&self, x: f64, t: f64, eps: f64) -> bool {
        let (lo, hi) = (self.panels[0].0, self.panels[self.panels.len() - 1].1);
        self.total_nodes >= Self::required_nodes(lo, hi, x, t, eps)
    }

    fn panel_of(&self, k: f64) -> Option<usize> {
        self.panels.iter().position(|&(a, b)| k >= a && k <= b)
    }

    /// Row r with (1/2πi)∫ u(s)/(s − z) ds ≈ Σ_j r_j u_j; on the contour
    /// this is the principal value.
    fn cauchy_row(&self, z: Complex64) -> Vec<Complex64> {
        let n = self.nodes_per_panel;
        let mut row = vec![ZERO; self.total_nodes];
        for (p, &(a, b)) in self.panels.iter().enumerate() {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            let zeta = (z - c) / h;
            let out = &mut row[p * n..(p + 1) * n];
            if (zeta - 1.0).norm() + (zeta + 1.0).norm() < 4.0 {
                let q = legendre_q(zeta, n);
                for (j, o) in out.iter_mut().enumerate() {
                    let pj = legendre_p(self.ref_nodes[j], n);
                    let s: Complex64 = (0..n).map(|m| (2 * m + 1) as f64 * pj[m] * q[m]).sum();
                    *o = -self.ref_weights[j] * s;
                }
            } else {
                for (j, o) in out.iter_mut().enumerate() {
                    let idx = p * n + j;
                    *o = self.weights[idx] / (self.nodes[idx] - z);
                }
            }
        }
        let scale = Complex64::new(0.0, 2.0 * PI).inv();
        row.iter_mut().for_each(|r| *r *= scale);
        row
    }

    /// Interpolation weights ℓ_j(k) of the panel polynomial through its nodes.
    fn interp_row(&self, p: usize, k: f64) -> Vec<f64> {
        let n = self.nodes_per_panel;
        let (a, b) = self.panels[p];
        let s = (2.0 * k - a - b) / (b - a);
        let ps = legendre_p(s, n);
        (0..n)
            .map(|j| {
                let pj = legendre_p(self.ref_nodes[j], n);
                self.ref_weights[j] * (0..n).map(|m| 0.5 * (2 * m + 1) as f64 * pj[m] * ps[m]).sum::<f64>()
            })
            .collect()
    }
}

/// Solver state reusable across (x, t, ε): the boundary Cauchy matrix and
/// the jump exponents at nodes and residual probes.
pub struct RhpSolver<'a, R: ReflectionData> {
    pub data: &'a R,
    pub disc: RhpDiscretization,
    /// Boundary values from the minus side, C₋ = PV − ½.
    cminus: Mat<Complex64>,
    node_exponents: Vec<(f64, f64)>,
    probes: Vec<f64>,
    probe_exponents: Vec<(f64, f64)>,
    /// Off-contour points for the unit-determinant check.
    pub det_probes: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhpSolution {
    pub x: f64,
    pub t: f64,
    pub eps: f64,
    /// u_j at the nodes, row-major 2×2.
    #[serde(skip)]
    pub density: Vec<C2>,
    #[serde(skip)]
    pub m1: C2,
    #[serde(skip)]
    pub m2: C2,
    #[serde(skip)]
    pub q: Complex64,
    #[serde(skip)]
    pub eps_qx: Complex64,
    pub jump_residual: f64,
    pub cond_estimate: f64,
    /// max |det M̃ − 1| over the off-contour probes.
    pub det_defect: f64,
}

impl RhpSolution {
    /// q read off the (2,1) entry, which Schwarz symmetry ties to the (1,2) one.
    pub fn q_from_lower(&self) -> Complex64 {
        Complex64::new(0.0, 2.0) * self.m1[1][0].conj()
    }
}

impl<'a, R: ReflectionData> RhpSolver<'a, R> {
    pub fn new(data: &'a R, disc: RhpDiscretization) -> Result<Self> {
        let n = disc.total_nodes;
        let rows: Vec<Vec<Complex64>> = disc.nodes.par_iter().map(|&k| disc.cauchy_row(Complex64::new(k, 0.0))).collect();
        let cminus = Mat::from_fn(n, n, |i, j| if i == j { rows[i][j] - 0.5 } else { rows[i][j] });
        let node_exponents = disc.nodes.par_iter().map(|&k| data.exponents(k)).collect::<Result<Vec<_>>>()?;
        // One probe per panel between its two middle nodes.
        let m = disc.nodes_per_panel / 2;
        let probes: Vec<f64> = (0..disc.panels.len())
            .map(|p| {
                let i = p * disc.nodes_per_panel + m;
                0.5 * (disc.nodes[i - 1] + disc.nodes[i])
            })
            .collect();
        let probe_exponents = probes.par_iter().map(|&k| data.exponents(k)).collect::<Result<Vec<_>>>()?;
        let (lo, hi) = data.support();
        let w = hi - lo;
        let det_probes = (0..10)
            .map(|i| {
                let f = (i as f64 + 0.5) / 10.0;
                let im = if i % 2 == 0 { 0.05 } else { -0.2 } * w;
                Complex64::new(lo + f * w, im)
            })
            .collect();
        Ok(Self { data, disc, cminus, node_exponents, probes, probe_exponents, det_probes })
    }

    /// Solver on the default graded discretization of the data's support.
    pub fn with_options(data: &'a R, opts: GridOptions) -> Result<Self> {
        let (lo, hi) = data.support();
        Self::new(data, RhpDiscretization::graded(lo, hi, &data.breaks(), opts)?)
    }

    pub fn probes(&self) -> &[f64] {
        &self.probes
    }

    fn jump_at(&self, k: f64, (tau, phi): (f64, f64), x: f64, t: f64, eps: f64) -> C2 {
        build_jump(gamma_from(tau, phi, eps), k, x, t, eps)
    }

    /// Solve for the density at (x, t, ε).
    pub fn solve(&self, x: f64, t: f64, eps: f64) -> Result<RhpSolution> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("ε must be positive, got {eps}")));
        }
        let n = self.disc.total_nodes;
        let w: Vec<C2> = self
            .disc
            .nodes
            .iter()
            .zip(&self.node_exponents)
            .map(|(&k, &e)| mat_sub(&self.jump_at(k, e, x, t, eps), &IDENTITY))
            .collect();
        // Each row of u solves u_i − Σ_j C₋_ij u_j W_i = W_i (row of W_i);
        // unknowns ordered (node, column).
        let a = Mat::from_fn(2 * n, 2 * n, |r, c| {
            let (i, ci) = (r / 2, r % 2);
            let (j, dj) = (c / 2, c % 2);
            let diag = if r == c { ONE } else { ZERO };
            diag - self.cminus[(i, j)] * w[i][dj][ci]
        });
        let rhs = Mat::from_fn(2 * n, 2, |r, row| w[r / 2][row][r % 2]);
        let lu = a.partial_piv_lu();
        let sol = lu.solve(&rhs);
        let density: Vec<C2> = (0..n)
            .map(|i| [[sol[(2 * i, 0)], sol[(2 * i + 1, 0)]], [sol[(2 * i, 1)], sol[(2 * i + 1, 1)]]])
            .collect();
        if density.iter().flatten().flatten().any(|z| !z.is_finite()) {
            return Err(Error::LinearAlgebra(format!("singular collocation system at (x, t, ε) = ({x}, {t}, {eps})")));
        }
        let cond_estimate = norm1(&a) * inverse_norm1_estimate(&lu, 2 * n);
        let mut m1 = [[ZERO; 2]; 2];
        let mut m2 = [[ZERO; 2]; 2];
        let scale = -Complex64::new(0.0, 2.0 * PI).inv();
        for ((u, &wt), &k) in density.iter().zip(&self.disc.weights).zip(&self.disc.nodes) {
            for r in 0..2 {
                for c in 0..2 {
                    m1[r][c] += scale * wt * u[r][c];
                    m2[r][c] += scale * wt * k * u[r][c];
                }
            }
        }
        let q = Complex64::new(0.0, 2.0) * m1[0][1];
        let eps_qx = 4.0 * m2[0][1] - 4.0 * m1[0][1] * m1[1][1];
        let mut sol = RhpSolution {
            x,
            t,
            eps,
            density,
            m1,
            m2,
            q,
            eps_qx,
            jump_residual: 0.0,
            cond_estimate,
            det_defect: 0.0,
        };
        sol.jump_residual = self.residual_at(&sol, &self.probes, &self.probe_exponents);
        sol.det_defect = self.det_probes.iter().map(|&z| (det(&self.evaluate(&sol, z)) - 1.0).norm()).fold(0.0, f64::max);
        Ok(sol)
    }

    /// M̃(z) off the contour.
    pub fn evaluate(&self, sol: &RhpSolution, z: Complex64) -> C2 {
        let row = self.disc.cauchy_row(z);
        let mut m = IDENTITY;
        for (r, u) in row.iter().zip(&sol.density) {
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += r * u[i][j];
                }
            }
        }
        m
    }

    /// Boundary values M̃₊, M̃₋ at a contour point, with the density
    /// interpolated on the panel containing k.
    fn boundary_values(&self, sol: &RhpSolution, k: f64) -> Option<(C2, C2)> {
        let p = self.disc.panel_of(k)?;
        let n = self.disc.nodes_per_panel;
        let row = self.disc.cauchy_row(Complex64::new(k, 0.0));
        let interp = self.disc.interp_row(p, k);
        let mut pv = [[ZERO; 2]; 2];
        for (r, u) in row.iter().zip(&sol.density) {
            for i in 0..2 {
                for j in 0..2 {
                    pv[i][j] += r * u[i][j];
                }
            }
        }
        let mut uk = [[ZERO; 2]; 2];
        for (l, u) in interp.iter().zip(&sol.density[p * n..(p + 1) * n]) {
            for i in 0..2 {
                for j in 0..2 {
                    uk[i][j] += l * u[i][j];
                }
            }
        }
        let mut plus = IDENTITY;
        let mut minus = IDENTITY;
        for i in 0..2 {
            for j in 0..2 {
                plus[i][j] += pv[i][j] + 0.5 * uk[i][j];
                minus[i][j] += pv[i][j] - 0.5 * uk[i][j];
            }
        }
        Some((plus, minus))
    }

    fn residual_at(&self, sol: &RhpSolution, probes: &[f64], exps: &[(f64, f64)]) -> f64 {
        probes
            .iter()
            .zip(exps)
            .filter_map(|(&k, &e)| {
                let (plus, minus) = self.boundary_values(sol, k)?;
                let j = self.jump_at(k, e, sol.x, sol.t, sol.eps);
                Some(mat_norm(&mat_sub(&plus, &mat_mul(&minus, &j))))
            })
            .fold(0.0, f64::max)
    }

    /// max ‖M̃₊ − M̃₋J‖ over `probes`, which should avoid the nodes.
    pub fn jump_residual(&self, sol: &RhpSolution, probes: &[f64]) -> Result<f64> {
        let exps = probes.iter().map(|&k| self.data.exponents(k)).collect::<Result<Vec<_>>>()?;
        Ok(self.residual_at(sol, probes, &exps))
    }

    /// q̃ at (x, t, ε).
    pub fn q(&self, x: f64, t: f64, eps: f64) -> Result<Complex64> {
        Ok(self.solve(x, t, eps)?.q)
    }

    /// Defocusing NLS residual |iεq_t + ε²q_xx − 2|q|²q| by central
    /// differences with spacing h, and the x-derivative from the same
    /// stencil for comparison with the moment formula.
    pub fn nls_residual(&self, x: f64, t: f64, eps: f64, h: f64) -> Result<NlsResidual> {
        let pts = [(x, t), (x + h, t), (x - h, t), (x, t + h), (x, t - h)];
        let sols = pts.par_iter().map(|&(x, t)| self.solve(x, t, eps)).collect::<Result<Vec<_>>>()?;
        let q: Vec<Complex64> = sols.iter().map(|s| s.q).collect();
        let qt = (q[3] - q[4]) / (2.0 * h);
        let qx = (q[1] - q[2]) / (2.0 * h);
        let qxx = (q[1] - 2.0 * q[0] + q[2]) / (h * h);
        let i = Complex64::new(0.0, 1.0);
        let r = i * eps * qt + eps * eps * qxx - 2.0 * q[0].norm_sqr() * q[0];
        Ok(NlsResidual { h, residual: r.norm(), qx_mismatch: (eps * qx - sols[0].eps_qx).norm() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlsResidual {
    pub h: f64,
    pub residual: f64,
    /// |ε·(central difference of q) − ε q_x from the moments|.
    pub qx_mismatch: f64,
}

fn norm1(a: &Mat<Complex64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager's estimate of ‖A⁻¹‖₁ from a factorization.
fn inverse_norm1_estimate(lu: &faer::linalg::solvers::PartialPivLu<Complex64>, n: usize) -> f64 {
    let mut x = Mat::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    for iter in 0..5 {
        let y = lu.solve(&x);
        let norm: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
        if iter > 0 && norm <= est {
            break;
        }
        est = norm;
        let xi = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() > 0.0 { v / v.norm() } else { ONE }
        });
        let mut z = xi.clone();
        lu.solve_adjoint_in_place(&mut z);
        let (j, zmax) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let zx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if iter > 0 && zmax <= zx {
            break;
        }
        x = Mat::from_fn(n, 1, |i, _| if i == j { ONE } else { ZERO });
    }
    est
}

/// One row of the boundary-recovery sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub t: f64,
    pub eps: f64,
    /// |q̃(0, t) − H e^{iS/ε}|.
    pub e_d: f64,
    /// |εq̃_x(0, t) − iUH e^{iS/ε}|.
    pub e_n: f64,
    pub jump_residual: f64,
    pub det_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumRow {
    pub x: f64,
    pub eps: f64,
    pub abs_q: f64,
    pub jump_residual: f64,
    pub det_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryTable {
    pub rows: Vec<RecoveryRow>,
    pub vacuum: Vec<VacuumRow>,
    /// e_D and e_N strictly decrease along the ε list at every t.
    pub boundary_trend: bool,
    /// |q̃(x, 0)| strictly decreases along the ε list at every x.
    pub vacuum_trend: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Dirichlet and Neumann recovery at x = 0 and decay of |q̃(x, 0)| over
/// the ε list, all from solves on the refined discretization.
pub fn boundary_recovery_suite(
    solver: &RhpSolver<'_, SpectralTransforms>,
    tlist: &[f64],
    xlist: &[f64],
    eps_list: &[f64],
) -> Result<RecoveryTable> {
    let p = &solver.data.profile;
    let mut rows = Vec::new();
    for &t in tlist {
        let s = p.phase_s(t)?;
        for &eps in eps_list {
            let sol = solver.solve(0.0, t, eps)?;
            let qd = Complex64::from_polar(p.h(t), s / eps);
            let qn = Complex64::new(0.0, p.u(t)) * qd;
            rows.push(RecoveryRow {
                t,
                eps,
                e_d: (sol.q - qd).norm(),
                e_n: (sol.eps_qx - qn).norm(),
                jump_residual: sol.jump_residual,
                det_defect: sol.det_defect,
            });
        }
    }
    let mut vacuum = Vec::new();
    for &x in xlist {
        for &eps in eps_list {
            let sol = solver.solve(x, 0.0, eps)?;
            vacuum.push(VacuumRow { x, eps, abs_q: sol.q.norm(), jump_residual: sol.jump_residual, det_defect: sol.det_defect });
        }
    }
    let ne = eps_list.len();
    let boundary_trend = rows.chunks(ne).all(|c| {
        strictly_decreasing(&c.iter().map(|r| r.e_d).collect::<Vec<_>>())
            && strictly_decreasing(&c.iter().map(|r| r.e_n).collect::<Vec<_>>())
    });
    let vacuum_trend = vacuum.chunks(ne).all(|c| strictly_decreasing(&c.iter().map(|r| r.abs_q).collect::<Vec<_>>()));
    Ok(RecoveryTable { rows, vacuum, boundary_trend, vacuum_trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn st() -> &'static SpectralTransforms {
        static S: OnceLock<SpectralTransforms> = OnceLock::new();
        S.get_or_init(SpectralTransforms::example)
    }

    fn solver() -> &'static RhpSolver<'static, SpectralTransforms> {
        static S: OnceLock<RhpSolver<'static, SpectralTransforms>> = OnceLock::new();
        S.get_or_init(|| RhpSolver::with_options(st(), GridOptions::default()).unwrap())
    }

    #[test]
    fn discretization_checks() {
        assert!(RhpDiscretization::new(vec![(0.0, 1.0)], 8, false).is_err());
        assert!(RhpDiscretization::new(vec![(0.0, 1.0), (1.5, 2.0)], 16, false).is_err());
        let d = &solver().disc;
        let (lo, hi) = st().support();
        assert_eq!(d.panels[0].0, lo);
        assert_eq!(d.panels.last().unwrap().1, hi);
        assert!(d.panels.windows(2).all(|w| w[0].1 == w[1].0));
        for b in st().breaks() {
            assert!(d.panels.iter().any(|p| p.0 == b));
        }
        let total: f64 = d.weights().iter().sum();
        assert!((total - (hi - lo)).abs() < 1e-13);
        assert!(d.resolves(0.0, 1.0, 0.2));
        assert!(!d.resolves(0.0, 200.0, 0.05));
    }

    #[test]
    fn cauchy_transform_of_constant() {
        // (1/2πi)∫_a^b ds/(s − z) = (1/2πi) log((b − z)/(a − z)).
        let d = &solver().disc;
        let (lo, hi) = st().support();
        let ones = vec![ONE; d.total_nodes];
        for z in [Complex64::new(-0.8, 0.3), Complex64::new(-1.19, -1e-3), Complex64::new(-0.486, 1e-6), Complex64::new(0.5, 0.0)] {
            let row = d.cauchy_row(z);
            let got: Complex64 = row.iter().zip(&ones).map(|(r, u)| r * u).sum();
            let exact = ((hi - z) / (lo - z)).ln() / Complex64::new(0.0, 2.0 * PI);
            assert!((got - exact).norm() < 1e-12, "z = {z}: {got} vs {exact}");
        }
        // On the contour the row gives the principal value.
        let k = -0.9;
        let got: Complex64 = d.cauchy_row(Complex64::new(k, 0.0)).iter().sum();
        let pv = ((hi - k) / (k - lo)).ln() / Complex64::new(0.0, 2.0 * PI);
        assert!((got - pv).norm() < 1e-12);
    }

    #[test]
    fn no_reflection_gives_zero_potential() {
        let data = NoReflection { lo: -1.0, hi: 0.5 };
        let s = RhpSolver::with_options(&data, GridOptions::default()).unwrap();
        let sol = s.solve(0.3, 0.7, 0.2).unwrap();
        assert_eq!(sol.q, ZERO);
        assert_eq!(sol.jump_residual, 0.0);
        assert!(sol.density.iter().flatten().flatten().all(|z| *z == ZERO));
        assert_eq!(s.nls_residual(0.3, 0.7, 0.2, 0.01).unwrap().residual, 0.0);
    }

    #[test]
    fn example_solve_is_accurate() {
        let s = solver();
        let sol = s.solve(0.0, 1.0, 0.3).unwrap();
        assert!(sol.jump_residual < 1e-7, "{}", sol.jump_residual);
        assert!(sol.det_defect < 1e-8);
        assert!((sol.q - sol.q_from_lower()).norm() < 1e-8);
        assert!(sol.cond_estimate.is_finite() && sol.cond_estimate >= 1.0);
        let fine = RhpSolver::new(st(), s.disc.refined().unwrap()).unwrap();
        let sol2 = fine.solve(0.0, 1.0, 0.3).unwrap();
        assert!((sol.q - sol2.q).norm() < 1e-6);
        assert!(sol2.jump_residual < sol.jump_residual);
        // Fewer nodes per oscillation at smaller ε.
        assert!(s.solve(0.0, 1.0, 0.15).unwrap().jump_residual > sol.jump_residual);
    }

    #[test]
    fn moment_derivative_matches_differences() {
        let s = solver();
        let r1 = s.nls_residual(0.05, 1.0, 0.3, 0.04).unwrap();
        let r2 = s.nls_residual(0.05, 1.0, 0.3, 0.02).unwrap();
        assert!((3.5..=4.5).contains(&(r1.residual / r2.residual)));
        assert!((3.5..=4.5).contains(&(r1.qx_mismatch / r2.qx_mismatch)));
    }

    proptest! {
        #[test]
        fn jump_has_unit_determinant_and_positive_real_part(
            re in -1.0f64..1.0, im in -1.0f64..1.0, k in -2.0f64..2.0,
            x in -1.0f64..1.0, t in 0.0f64..3.0, eps in 0.05f64..1.0,
        ) {
            let g = Complex64::new(re, im);
            prop_assume!(g.norm() < 1.0);
            let j = build_jump(g, k, x, t, eps);
            prop_assert!((det(&j) - 1.0).norm() < 1e-14);
            // Hermitian part [[a, b], [b*, c]] with a, c real.
            let a = 2.0 * j[0][0].re;
            let c = 2.0 * j[1][1].re;
            let b = j[0][1] + j[1][0].conj();
            prop_assert!(a >= -1e-15 && c >= -1e-15 && a * c - b.norm_sqr() >= -1e-14);
        }
    }

    #[test]
    fn zero_reflection_jump_is_identity() {
        assert_eq!(build_jump(ZERO, -0.7, 0.4, 1.2, 0.1), IDENTITY);
    }
}
