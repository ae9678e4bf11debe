//! Face-centred difference operators on the periodic grid.
//!
//! Face `i` sits between cells `i` and `i + 1`. The solver flux and every
//! monitored functional use these same operators; the discrete energy
//! identity only closes when both sides see identical differences.

use crate::params::MobilityAveraging;
use crate::quad::GaussLegendre;

#[inline]
pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Heights around face `i`: `[h_{i-1}, h_i, h_{i+1}, h_{i+2}]`.
#[inline]
pub(crate) fn face_window(h: &[f64], i: usize) -> [f64; 4] {
    let n = h.len();
    let i = i as isize;
    [h[wrap(i - 1, n)], h[wrap(i, n)], h[wrap(i + 1, n)], h[wrap(i + 2, n)]]
}

/// First difference `(h_{i+1} - h_i) / dx`.
#[inline]
pub fn hx(w: &[f64; 4], dx: f64) -> f64 {
    (w[2] - w[1]) / dx
}

/// Average of the two neighbouring cell second differences.
#[inline]
pub fn hxx(w: &[f64; 4], dx: f64) -> f64 {
    ((w[3] - w[2]) - (w[1] - w[0])) / (2.0 * dx * dx)
}

/// Third difference `(h_{i+2} - 3 h_{i+1} + 3 h_i - h_{i-1}) / dx^3`.
#[inline]
pub fn hxxx(w: &[f64; 4], dx: f64) -> f64 {
    ((w[3] - w[0]) - 3.0 * (w[2] - w[1])) / (dx * dx * dx)
}

/// Midpoint height at the face.
#[inline]
pub fn h_face(w: &[f64; 4]) -> f64 {
    0.5 * (w[1] + w[2])
}

/// A face value together with its partial derivatives with respect to the
/// left and right cell values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceValue {
    pub value: f64,
    pub d_left: f64,
    pub d_right: f64,
}

/// Combine `g(a)` and `g(b)` according to the averaging rule. `gp` is the
/// derivative of `g`; it is only evaluated when `with_derivatives` is set.
pub fn average<G, Gp>(
    rule: MobilityAveraging,
    g: G,
    gp: Gp,
    a: f64,
    b: f64,
    with_derivatives: bool,
) -> FaceValue
where
    G: Fn(f64) -> f64,
    Gp: Fn(f64) -> f64,
{
    match rule {
        MobilityAveraging::Arithmetic => {
            let value = 0.5 * (g(a) + g(b));
            if with_derivatives {
                FaceValue { value, d_left: 0.5 * gp(a), d_right: 0.5 * gp(b) }
            } else {
                FaceValue { value, d_left: 0.0, d_right: 0.0 }
            }
        }
        MobilityAveraging::Harmonic => {
            let (ga, gb) = (g(a), g(b));
            let sum = ga + gb;
            let value = 2.0 * ga * gb / sum;
            if with_derivatives {
                let s2 = sum * sum;
                FaceValue {
                    value,
                    d_left: 2.0 * gb * gb * gp(a) / s2,
                    d_right: 2.0 * ga * ga * gp(b) / s2,
                }
            } else {
                FaceValue { value, d_left: 0.0, d_right: 0.0 }
            }
        }
        MobilityAveraging::Entropic => {
            // 1 / int_0^1 dt / g(a + t (b - a))
            let rule = GaussLegendre::eight();
            let delta = b - a;
            let mut inv = 0.0;
            let mut d_inv_a = 0.0;
            let mut d_inv_b = 0.0;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = a + t * delta;
                let gu = g(u);
                inv += w / gu;
                if with_derivatives {
                    let q = -gp(u) / (gu * gu);
                    d_inv_a += w * q * (1.0 - t);
                    d_inv_b += w * q * t;
                }
            }
            let value = 1.0 / inv;
            let scale = -value * value;
            FaceValue { value, d_left: scale * d_inv_a, d_right: scale * d_inv_b }
        }
    }
}

/// Secant mean `int_0^1 g(a + t (b - a)) dt`, so that
/// `secant_mean * (b - a) = G(b) - G(a)` for an antiderivative `G` of `g`.
pub fn secant_mean<G, Gp>(g: G, gp: Gp, a: f64, b: f64, with_derivatives: bool) -> FaceValue
where
    G: Fn(f64) -> f64,
    Gp: Fn(f64) -> f64,
{
    let rule = GaussLegendre::eight();
    let delta = b - a;
    let mut value = 0.0;
    let mut d_left = 0.0;
    let mut d_right = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let u = a + t * delta;
        value += w * g(u);
        if with_derivatives {
            let d = gp(u);
            d_left += w * d * (1.0 - t);
            d_right += w * d * t;
        }
    }
    FaceValue { value, d_left, d_right }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_on_cubic() {
        // exact for cubics at the face midpoint
        let dx = 0.1;
        let p = |x: f64| 2.0 - x + 0.5 * x * x + x * x * x;
        let w = [p(-dx), p(0.0), p(dx), p(2.0 * dx)];
        let xm: f64 = 0.5 * dx;
        assert!((hxxx(&w, dx) - 6.0).abs() < 1e-9);
        let exact_hx = -1.0 + xm + 3.0 * xm * xm;
        assert!((hx(&w, dx) - exact_hx).abs() < 0.3 * dx * dx);
        let exact_hxx = 1.0 + 6.0 * xm;
        assert!((hxx(&w, dx) - exact_hxx).abs() < 1e-10);
    }

    #[test]
    fn averages_of_equal_values() {
        let g = |z: f64| z * z;
        let gp = |z: f64| 2.0 * z;
        for rule in [MobilityAveraging::Arithmetic, MobilityAveraging::Harmonic, MobilityAveraging::Entropic] {
            let fv = average(rule, g, gp, 1.5, 1.5, true);
            assert!((fv.value - 2.25).abs() < 1e-14, "{rule}");
            assert!((fv.d_left - 1.5).abs() < 1e-13, "{rule}");
            assert!((fv.d_right - 1.5).abs() < 1e-13, "{rule}");
        }
    }

    #[test]
    fn average_derivatives_match_differences() {
        let g = |z: f64| z.powf(1.7) + 0.1;
        let gp = |z: f64| 1.7 * z.powf(0.7);
        let (a, b) = (0.8, 1.3);
        let step = 1e-6;
        for rule in [MobilityAveraging::Arithmetic, MobilityAveraging::Harmonic, MobilityAveraging::Entropic] {
            let fv = average(rule, g, gp, a, b, true);
            let da = (average(rule, g, gp, a + step, b, false).value
                - average(rule, g, gp, a - step, b, false).value)
                / (2.0 * step);
            let db = (average(rule, g, gp, a, b + step, false).value
                - average(rule, g, gp, a, b - step, false).value)
                / (2.0 * step);
            assert!((fv.d_left - da).abs() < 1e-8, "{rule}");
            assert!((fv.d_right - db).abs() < 1e-8, "{rule}");
        }
    }

    #[test]
    fn secant_mean_is_exact_antiderivative_difference() {
        // g = z^2 -> G = z^3 / 3
        let fv = secant_mean(|z| z * z, |z| 2.0 * z, 0.5, 2.0, true);
        assert!((fv.value * 1.5 - (8.0 - 0.125) / 3.0).abs() < 1e-14);
    }
}
