//! Quadrature rules used throughout the crate.
//!
//! * [`gauss_kronrod`]: globally adaptive G7/K15 bisection for finite intervals.
//! * [`GaussLegendre`]: fixed rules on `[0, 1]`, used for face averages inside
//!   the solver where the same nodes must be reused for residual and Jacobian.
//! * [`periodic_trapezoid`]: spectrally accurate for smooth periodic integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {value}, error {error} after {intervals} intervals")]
    NotConverged {
        value: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
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
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite(x))
        }
    };
    let fc = eval(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = eval(c - dx)? + eval(c + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kronrod * hw, ((kronrod - gauss) * hw).abs()))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`. Returns `(value, error)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), QuadError> {
    const MAX_SEGMENTS: usize = 2000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (value, error) = gk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, total_err));
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(QuadError::NotConverged {
                value: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted floating point resolution
            return Err(QuadError::NotConverged {
                value: total,
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let (v1, e1) = gk15(&f, seg.a, mid)?;
        let (v2, e2) = gk15(&f, mid, seg.b)?;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // Recompute the sum occasionally to stop drift from the running update.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// A Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `order`-point rule by Newton iteration on the Legendre
    /// polynomial roots.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map from [-1, 1] to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[order - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[order - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 8-point rule.
    pub fn eight() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    pub fn integrate_unit<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Trapezoidal rule with `nodes` equispaced samples over one period `[lo, hi)`.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, nodes: usize) -> f64 {
    let h = (hi - lo) / nodes as f64;
    (0..nodes).map(|i| f(lo + i as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let (v, _) = gauss_kronrod(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn gk_endpoint_singularity() {
        // integral of x^-1/2 over (0, 1) is 2
        let (v, _) = gauss_kronrod(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn gk_reports_non_finite() {
        let r = gauss_kronrod(|x| 1.0 / (x - 0.5), 0.0, 1.0, 1e-12, 0.0);
        assert!(matches!(r, Err(QuadError::NonFinite(_)) | Err(QuadError::NotConverged { .. })));
    }

    #[test]
    fn legendre_rule_exact_to_degree() {
        let gl = GaussLegendre::new(8);
        assert!((gl.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // exact for degree 15 on [0, 1]
        let v = gl.integrate_unit(|t| t.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
        let v = GaussLegendre::new(3).integrate_unit(|t| t.powi(5));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_spectral_on_periodic() {
        let exact = 2.0 * std::f64::consts::PI / (3.0f64).sqrt(); // int 1/(2+sin)
        let v = periodic_trapezoid(|x| 1.0 / (2.0 + x.sin()), -std::f64::consts::PI, std::f64::consts::PI, 64);
        assert!((v - exact).abs() < 1e-14);
    }
}
