//! Extrema of the invariant curves and WKB turning points.

use serde::Serialize;

use super::BoundaryProfile;
use crate::error::{Error, Result};
use crate::roots::{bisect, bisect_scan};

/// Constants fixed by the extrema of 𝔞 and 𝔟.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalStructure {
    /// Minimiser of 𝔞.
    pub t_a: f64,
    /// Maximiser of 𝔟.
    pub t_b: f64,
    pub k_a: f64,
    pub k_b: f64,
    pub k0: f64,
    pub kinf: f64,
    /// 𝔞″(t_a) > 0.
    pub curv_a: f64,
    /// 𝔟″(t_b) < 0.
    pub curv_b: f64,
}

impl CriticalStructure {
    pub fn width(&self) -> f64 {
        self.k_b - self.k_a
    }

    /// True when k lies strictly inside the support (k_a, k_b).
    pub fn contains(&self, k: f64) -> bool {
        k > self.k_a && k < self.k_b
    }
}

const ROOT_XTOL: f64 = 1e-13;

fn scan_grid(end: f64) -> Vec<f64> {
    let n = 4000;
    let mut g: Vec<f64> = (0..n).map(|i| 1e-10 * 1e10_f64.powf(i as f64 / (n - 1) as f64)).collect();
    let mut t = 1.0;
    while t < end {
        t += 0.01 * t.max(1.0);
        g.push(t.min(end));
    }
    g
}

/// Locate the extrema of 𝔞 and 𝔟 by bracketed root finding on their
/// analytic derivatives.
pub fn critical_structure(profile: &BoundaryProfile) -> Result<CriticalStructure> {
    let grid = scan_grid(profile.tmax_eff);
    let t_a = bisect_scan(|t| profile.da(t), &grid, ROOT_XTOL).map_err(|_| Error::NoCriticalPoint("a'"))?;
    let t_b = bisect_scan(|t| profile.db(t), &grid, ROOT_XTOL).map_err(|_| Error::NoCriticalPoint("b'"))?;
    let d = |f: &dyn Fn(f64) -> f64, t: f64| {
        let h = 1e-5 * t.max(1e-3);
        (f(t + h) - f(t - h)) / (2.0 * h)
    };
    let curv_a = d(&|t| profile.da(t), t_a);
    let curv_b = d(&|t| profile.db(t), t_b);
    Ok(CriticalStructure {
        t_a,
        t_b,
        k_a: profile.a(t_a),
        k_b: profile.b(t_b),
        k0: profile.k0(),
        kinf: profile.kinf(),
        curv_a,
        curv_b,
    })
}

/// λ²(t; k) = (2k − U)²(k − 𝔞)(𝔟 − k), positive between the turning points.
pub fn lambda_squared(profile: &BoundaryProfile, t: f64, k: f64) -> f64 {
    let c = 2.0 * k - profile.u(t);
    c * c * (k - profile.a(t)) * (profile.b(t) - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoints {
    pub t_minus: f64,
    /// `f64::INFINITY` when k = k_∞ or the root lies beyond the search cap.
    pub t_plus: f64,
}

const T_PLUS_CAP: f64 = 1e4;

/// The two simple zeros of λ²(·; k) for k_a < k < k_b.
pub fn turning_points(profile: &BoundaryProfile, crit: &CriticalStructure, k: f64) -> Result<TurningPoints> {
    if !(k > crit.k_a + 1e-12 && k < crit.k_b - 1e-12) {
        return Err(Error::Domain(format!(
            "turning points need k in ({}, {}) away from the endpoints, got {k}",
            crit.k_a, crit.k_b
        )));
    }
    let t_minus = if k == crit.k0 {
        0.0
    } else if k > crit.k0 {
        bisect(|t| profile.b(t) - k, 0.0, crit.t_b, 0.0)?
    } else {
        bisect(|t| profile.a(t) - k, 0.0, crit.t_a, 0.0)?
    };
    let t_plus = if k == crit.kinf {
        f64::INFINITY
    } else {
        let (start, g): (f64, Box<dyn Fn(f64) -> f64>) = if k > crit.kinf {
            (crit.t_b, Box::new(|t| profile.b(t) - k))
        } else {
            (crit.t_a, Box::new(|t| profile.a(t) - k))
        };
        let s0 = g(start);
        let mut lo = start;
        let mut hi = 2.0 * start.max(0.5);
        loop {
            if g(hi).signum() != s0.signum() {
                break bisect(&g, lo, hi, ROOT_XTOL)?;
            }
            if hi >= T_PLUS_CAP {
                break f64::INFINITY;
            }
            lo = hi;
            hi = (2.0 * hi).min(T_PLUS_CAP);
        }
    };
    Ok(TurningPoints { t_minus, t_plus })
}

/// Which invariant curve crosses level k at a turning point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    A,
    B,
}

/// Cancellation-free evaluation of 𝔞(t) − k and 𝔟(t) − k near the
/// turning points of a fixed k. Close to a root the difference is the
/// integral of the derivative from the root (4-point Gauss rule), which
/// keeps the relative accuracy that plain subtraction loses there.
#[derive(Debug, Clone, Copy)]
pub struct LevelGaps<'a> {
    profile: &'a BoundaryProfile,
    k: f64,
    roots: [(f64, Branch, f64); 2],
}

const GL4_X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

impl<'a> LevelGaps<'a> {
    /// `t_minus`, `t_plus` are the turning points at level `k` (t₊ may be
    /// infinite), with the curve crossing at each.
    pub fn new(profile: &'a BoundaryProfile, crit: &CriticalStructure, k: f64, t_minus: f64, t_plus: f64) -> Self {
        let bm = if k < crit.k0 { Branch::A } else { Branch::B };
        let bp = if k < crit.kinf { Branch::A } else { Branch::B };
        let sep = t_plus - t_minus;
        let rm = 0.05 * t_minus.min(sep);
        let rp = if t_plus.is_finite() { 0.05 * sep.min(t_plus) } else { 0.0 };
        Self { profile, k, roots: [(t_minus, bm, rm), (t_plus, bp, rp)] }
    }

    fn near(&self, t: f64, branch: Branch, deriv: impl Fn(f64) -> f64) -> Option<f64> {
        for &(root, b, radius) in &self.roots {
            if b == branch && radius > 0.0 && (t - root).abs() < radius {
                let half = 0.5 * (t - root);
                let mid = 0.5 * (t + root);
                let s: f64 = GL4_X.iter().zip(GL4_W).map(|(x, w)| w * deriv(mid + half * x)).sum();
                return Some(s * half);
            }
        }
        None
    }

    /// 𝔞(t) − k.
    pub fn a_gap(&self, t: f64) -> f64 {
        let p = self.profile;
        self.near(t, Branch::A, |s| p.da(s)).unwrap_or_else(|| p.a(t) - self.k)
    }

    /// 𝔟(t) − k.
    pub fn b_gap(&self, t: f64) -> f64 {
        let p = self.profile;
        self.near(t, Branch::B, |s| p.db(s)).unwrap_or_else(|| p.b(t) - self.k)
    }

    /// (k − 𝔞)(𝔟 − k): positive between the turning points, negative outside.
    pub fn product(&self, t: f64) -> f64 {
        -self.a_gap(t) * self.b_gap(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup() -> (BoundaryProfile, CriticalStructure) {
        let p = BoundaryProfile::example();
        let c = critical_structure(&p).unwrap();
        (p, c)
    }

    #[test]
    fn example_geometry() {
        let (p, c) = setup();
        assert!(c.k_a < c.k0 && c.k0 < c.k_b && c.k_b < 0.0);
        assert!(c.k_a < c.kinf && c.kinf < c.k_b);
        assert!(c.curv_a > 0.0 && c.curv_b < 0.0);
        // Global extremum on a grid.
        for i in 1..20_000 {
            let t = i as f64 * 0.001;
            assert!(p.a(t) >= c.k_a - 1e-15);
            assert!(p.b(t) <= c.k_b + 1e-15);
        }
        assert!((c.t_a - 0.45603121356).abs() < 1e-9);
        assert!((c.t_b - 1.04888378150).abs() < 1e-9);
        assert!((c.k_a + 1.19863479344).abs() < 1e-10);
        assert!((c.k_b + 0.48508856020).abs() < 1e-10);
    }

    #[test]
    fn turning_points_are_zeros_of_lambda_squared() {
        let (p, c) = setup();
        for j in 1..40 {
            let k = c.k_a + c.width() * j as f64 / 40.0;
            if (k - c.kinf).abs() < 1e-3 {
                continue;
            }
            let tp = turning_points(&p, &c, k).unwrap();
            assert!(tp.t_minus < tp.t_plus);
            assert!(lambda_squared(&p, tp.t_minus, k).abs() < 1e-9);
            assert!(lambda_squared(&p, tp.t_plus, k).abs() < 1e-9);
            let mid = 0.5 * (tp.t_minus + tp.t_plus);
            assert!(lambda_squared(&p, mid, k) > 0.0);
        }
    }

    #[test]
    fn limits_at_k0_and_kinf() {
        let (p, c) = setup();
        let near = turning_points(&p, &c, c.k0 + 1e-8).unwrap();
        assert!(near.t_minus < 1e-14);
        assert_eq!(turning_points(&p, &c, c.k0).unwrap().t_minus, 0.0);
        let far = turning_points(&p, &c, c.kinf + 1e-9).unwrap();
        assert!(far.t_plus > 15.0);
        assert!(turning_points(&p, &c, c.kinf).unwrap().t_plus.is_infinite());
    }

    #[test]
    fn level_gaps_agree_with_subtraction_away_from_roots() {
        let (p, c) = setup();
        for k in [-1.15, -0.9, -0.6] {
            let tp = turning_points(&p, &c, k).unwrap();
            let g = LevelGaps::new(&p, &c, k, tp.t_minus, tp.t_plus);
            for f in [0.97, 0.99, 1.01, 1.03] {
                for t in [tp.t_minus * f, tp.t_plus * f] {
                    assert!((g.a_gap(t) - (p.a(t) - k)).abs() < 1e-13);
                    assert!((g.b_gap(t) - (p.b(t) - k)).abs() < 1e-13);
                }
            }
        }
        // Near coalescence the product keeps its sign right next to the root.
        let k = c.k_a + 1e-9;
        let tp = turning_points(&p, &c, k).unwrap();
        let g = LevelGaps::new(&p, &c, k, tp.t_minus, tp.t_plus);
        let w = tp.t_plus - tp.t_minus;
        for j in 1..12 {
            let d = w * 10f64.powi(-j);
            assert!(g.product(tp.t_minus - d) < 0.0);
            assert!(g.product(tp.t_minus + d) > 0.0);
        }
    }

    #[test]
    fn rejects_outside_support() {
        let (p, c) = setup();
        assert!(turning_points(&p, &c, c.k_a).is_err());
        assert!(turning_points(&p, &c, c.k_b + 0.1).is_err());
        assert!(turning_points(&p, &c, c.k_b - 1e-13).is_err());
    }

    proptest! {
        #[test]
        fn lambda_squared_sign_structure(frac in 0.01f64..0.99, s in 0.02f64..0.98) {
            let (p, c) = setup();
            let k = c.k_a + c.width() * frac;
            prop_assume!((k - c.kinf).abs() > 1e-3 && (k - c.k0).abs() > 1e-6);
            let tp = turning_points(&p, &c, k).unwrap();
            let inside = tp.t_minus + s * (tp.t_plus.min(60.0) - tp.t_minus);
            prop_assert!(lambda_squared(&p, inside, k) > 0.0);
            let before = tp.t_minus * s;
            if tp.t_minus > 1e-6 {
                prop_assert!(lambda_squared(&p, before, k) < 0.0);
            }
            let after = tp.t_plus * (1.0 + s);
            if tp.t_plus < 20.0 {
                prop_assert!(lambda_squared(&p, after, k) < 0.0);
            }
        }
    }
}
