//! Gauss–Legendre rules, Legendre function evaluation and a global
//! adaptive Gauss–Kronrod integrator.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl QuadTol {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }
}

impl Default for QuadTol {
    fn default() -> Self {
        Self::new(1e-13, 1e-12)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1],
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut z = theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// P_0(x), ..., P_{m-1}(x).
pub fn legendre_p(x: f64, m: usize) -> Vec<f64> {
    let mut p = vec![0.0; m];
    if m == 0 {
        return p;
    }
    p[0] = 1.0;
    if m > 1 {
        p[1] = x;
    }
    for k in 1..m.saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

/// Legendre functions of the second kind Q_0(z), ..., Q_{m-1}(z).
///
/// For real `z` strictly inside (-1, 1) the principal-value branch
/// Q_0 = ½ log((1+z)/(1-z)) is used; elsewhere Q_0 = ½[log(z+1) - log(z-1)].
/// These satisfy ∫_{-1}^{1} P_m(s)/(s - z) ds = -2 Q_m(z).
pub fn legendre_q(z: Complex64, m: usize) -> Vec<Complex64> {
    let mut q = vec![Complex64::new(0.0, 0.0); m];
    if m == 0 {
        return q;
    }
    let on_cut = z.im == 0.0 && z.re.abs() < 1.0;
    let q0 = if on_cut {
        Complex64::new(0.5 * ((1.0 + z.re) / (1.0 - z.re)).ln(), 0.0)
    } else {
        0.5 * ((z + 1.0).ln() - (z - 1.0).ln())
    };
    let rho = (z + (z - 1.0).sqrt() * (z + 1.0).sqrt()).norm();
    if on_cut || rho < 1.3 {
        q[0] = q0;
        if m > 1 {
            q[1] = z * q0 - 1.0;
        }
        for k in 1..m - 1 {
            let kf = k as f64;
            q[k + 1] = ((2.0 * kf + 1.0) * z * q[k] - kf * q[k - 1]) / (kf + 1.0);
        }
        return q;
    }
    // Miller backward recurrence, normalized by Q_0.
    let extra = (40.0 / rho.ln()).ceil() as usize + 10;
    let top = m + extra;
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in (1..=top).rev() {
        let kf = k as f64;
        let prev = ((2.0 * kf + 1.0) * z * cur - (kf + 1.0) * next) / kf;
        next = cur;
        cur = prev;
        if k - 1 < m {
            buf[k - 1] = cur;
        }
        if cur.norm() > 1e200 {
            let s = 1e-200;
            cur *= s;
            next *= s;
            for b in buf.iter_mut() {
                *b *= s;
            }
        }
    }
    let scale = q0 / buf[0];
    for (qk, bk) in q.iter_mut().zip(buf) {
        *qk = bk * scale;
    }
    q
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, item) in fv.iter_mut().enumerate() {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        *item = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let habs = h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    let res_asc = res_asc * habs;
    let res_abs = res_abs * habs;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k * h, err)
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = kronrod15(&mut f, a, b);
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1usize;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if count >= tol.max_intervals {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) || (seg.b - seg.a).abs() < 1e-15 * seg.a.abs().max(seg.b.abs()) {
            // Interval exhausted by round-off; keep it and stop refining.
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod15(&mut f, seg.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, seg.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite integrand on [{}, {}]", seg.a, seg.b)));
        }
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut sum = 0.0;
    let mut err = 0.0;
    for s in heap.iter() {
        sum += s.value;
        err += s.err;
    }
    let target = tol.abs.max(tol.rel * sum.abs());
    if err > 1e3 * target && err > 1e-9 * sum.abs().max(1.0) {
        return Err(Error::Quadrature(format!(
            "estimated error {err:.3e} exceeds target {target:.3e} on [{a}, {b}]"
        )));
    }
    Ok(sum)
}

/// [`integrate`] over [a, b] split at the interior `points`.
pub fn integrate_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    points: &[f64],
    tol: QuadTol,
) -> Result<f64> {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = points.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    let mut sum = 0.0;
    for w in edges.windows(2) {
        sum += integrate(&mut f, w[0], w[1], tol)?;
    }
    Ok(sign * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        for deg in 0..32 {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {deg}: {s} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn kronrod_handles_endpoint_singularity() {
        let v = integrate(|t: f64| t.sqrt().ln(), 0.0, 1.0, QuadTol::default()).unwrap();
        assert_relative_eq!(v, -0.5, epsilon = 1e-12);
        let v = integrate(|t: f64| 1.0 / t.sqrt(), 0.0, 4.0, QuadTol::new(1e-12, 1e-12)).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate_split(|t: f64| t.exp(), 1.0, 0.0, &[0.3], QuadTol::default()).unwrap();
        assert_relative_eq!(v, 1.0 - std::f64::consts::E, epsilon = 1e-13);
    }

    fn cauchy_by_rule(m: usize, z: Complex64) -> Complex64 {
        // Dense Gauss sum is accurate when z is far from the interval.
        let (x, w) = gauss_legendre(200);
        x.iter()
            .zip(&w)
            .map(|(&s, &ws)| ws * legendre_p(s, m + 1)[m] / (s - z))
            .sum()
    }

    #[test]
    fn legendre_q_matches_cauchy_integrals_off_interval() {
        for &z in &[Complex64::new(1.7, 0.0), Complex64::new(0.2, 0.9), Complex64::new(-3.0, 0.4), Complex64::new(0.3, 0.25)] {
            let q = legendre_q(z, 16);
            for m in [0usize, 1, 5, 15] {
                let direct = cauchy_by_rule(m, z);
                assert!((direct + 2.0 * q[m]).norm() < 1e-9, "z={z} m={m}: {} vs {}", direct, -2.0 * q[m]);
            }
        }
    }

    #[test]
    fn legendre_q_principal_value_on_cut() {
        // PV ∫ s/(s-x) ds = 2 + x log((1-x)/(1+x)) = -2 Q_1(x).
        let x = 0.37;
        let q = legendre_q(Complex64::new(x, 0.0), 3);
        let pv = 2.0 + x * ((1.0 - x) / (1.0 + x)).ln();
        assert_relative_eq!(-2.0 * q[1].re, pv, epsilon = 1e-14);
    }
}
