//! Real roots of univariate polynomials up to degree four.
//!
//! Closed-form (Ferrari / Cardano) roots followed by Newton polishing on the
//! original polynomial. Leading coefficients that vanish relative to the rest
//! drop the degree.

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::scalar::Real;

pub type Roots<T> = ArrayVec<T, 4>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QuarticError {
    #[error("all polynomial coefficients are zero")]
    IdenticallyZero,
}

const POLISH_STEPS: usize = 2;

/// Real roots of `c[0] x^4 + c[1] x^3 + c[2] x^2 + c[3] x + c[4]`, sorted ascending.
pub fn solve_quartic<T: Real>(coeffs: [T; 5]) -> Result<Roots<T>, QuarticError> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    if scale < T::ZERO_COEFF {
        return Err(QuarticError::IdenticallyZero);
    }
    let lead = coeffs
        .iter()
        .position(|c| c.abs() > T::ZERO_COEFF * scale)
        .expect("scale is attained by some coefficient");
    let mut roots = Roots::new();
    let poly = &coeffs[lead..];
    match poly.len() {
        5 => quartic_closed_form(poly, &mut roots),
        4 => {
            let a = poly[0];
            for r in solve_cubic_monic(poly[1] / a, poly[2] / a, poly[3] / a) {
                roots.push(r);
            }
        }
        3 => {
            for r in solve_quadratic(poly[0], poly[1], poly[2]) {
                roots.push(r);
            }
        }
        2 => roots.push(-poly[1] / poly[0]),
        _ => {}
    }
    for r in roots.iter_mut() {
        *r = polish(poly, *r);
    }
    Ok(sort_dedup(roots))
}

/// Evaluates the polynomial (highest degree first) and its derivative.
pub fn horner<T: Real>(poly: &[T], x: T) -> (T, T) {
    let mut value = T::zero();
    let mut deriv = T::zero();
    for &c in poly {
        deriv = deriv * x + value;
        value = value * x + c;
    }
    (value, deriv)
}

fn polish<T: Real>(poly: &[T], mut x: T) -> T {
    for _ in 0..POLISH_STEPS {
        let (f, df) = horner(poly, x);
        if f == T::zero() || df == T::zero() {
            break;
        }
        let next = x - f / df;
        if !next.is_finite() || horner(poly, next).0.abs() > f.abs() {
            break;
        }
        x = next;
    }
    x
}

fn sort_dedup<T: Real>(mut roots: Roots<T>) -> Roots<T> {
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = Roots::new();
    for r in roots {
        match out.last() {
            Some(&last) if (r - last).abs() < T::ROOT_DEDUP => {}
            _ => out.push(r),
        }
    }
    out
}

fn accept_imag<T: Real>(re: T, im: T) -> bool {
    im.abs() < T::ROOT_IMAG * (T::one() + re.abs())
}

/// Real roots of `a x^2 + b x + c`, `a != 0`.
fn solve_quadratic<T: Real>(a: T, b: T, c: T) -> ArrayVec<T, 2> {
    let mut out = ArrayVec::new();
    let two = T::lit(2.0);
    let disc = b * b - T::lit(4.0) * a * c;
    if disc >= T::zero() {
        let sq = disc.sqrt();
        let q = -(b + b.signum() * sq) / two;
        if q == T::zero() {
            out.push(T::zero());
            out.push(T::zero());
        } else {
            out.push(q / a);
            out.push(c / q);
        }
    } else {
        let re = -b / (two * a);
        let im = (-disc).sqrt() / (two * a.abs());
        if accept_imag(re, im) {
            out.push(re);
        }
    }
    out
}

/// Real roots of `x^3 + a x^2 + b x + c`.
fn solve_cubic_monic<T: Real>(a: T, b: T, c: T) -> ArrayVec<T, 3> {
    let mut out = ArrayVec::new();
    let three = T::lit(3.0);
    let shift = a / three;
    // depressed t^3 + p t + q with x = t - a/3
    let p = b - a * a / three;
    let q = T::lit(2.0) * a * a * a / T::lit(27.0) - a * b / three + c;
    let half_q = q / T::lit(2.0);
    let third_p = p / three;
    let disc = half_q * half_q + third_p * third_p * third_p;
    if p == T::zero() {
        out.push((-q).cbrt() - shift);
    } else if disc > T::zero() {
        let u = (-half_q - half_q.signum() * disc.sqrt()).cbrt();
        let v = if u == T::zero() {
            T::zero()
        } else {
            -third_p / u
        };
        let t = u + v;
        out.push(t - shift);
        // complex pair -t/2 +- i sqrt(3)/2 (u - v)
        let re = -t / T::lit(2.0);
        let im = three.sqrt() / T::lit(2.0) * (u - v);
        if accept_imag(re - shift, im) {
            out.push(re - shift);
        }
    } else {
        let m = (-third_p).sqrt();
        let arg = (-half_q / (m * m * m)).clamp(-T::one(), T::one());
        let phi = arg.acos() / three;
        let two_pi_3 = T::two_pi() / three;
        for k in 0..3 {
            let t = T::lit(2.0) * m * (phi - two_pi_3 * T::lit(k as f64)).cos();
            out.push(t - shift);
        }
    }
    out
}

fn quartic_closed_form<T: Real>(poly: &[T], roots: &mut Roots<T>) {
    let a = poly[0];
    let (b3, b2, b1, b0) = (poly[1] / a, poly[2] / a, poly[3] / a, poly[4] / a);
    let l = T::lit;
    let shift = b3 / l(4.0);
    let b3sq = b3 * b3;
    // depressed y^4 + p y^2 + q y + r with x = y - b3/4
    let p = b2 - l(3.0) * b3sq / l(8.0);
    let q = b1 - b3 * b2 / l(2.0) + b3sq * b3 / l(8.0);
    let r = b0 - b3 * b1 / l(4.0) + b3sq * b2 / l(16.0) - l(3.0) * b3sq * b3sq / l(256.0);

    let mag = T::one() + p.abs() + r.abs().sqrt();
    if q.abs() <= T::ZERO_COEFF * mag * mag.sqrt() {
        // biquadratic in z = y^2
        for z in biquadratic_roots(p, r) {
            if z >= T::zero() {
                let y = z.sqrt();
                roots.push(y - shift);
                roots.push(-y - shift);
            } else if accept_imag(-shift, (-z).sqrt()) {
                roots.push(-shift);
            }
        }
        return;
    }

    // resolvent: 8 m^3 + 8 p m^2 + (2 p^2 - 8 r) m - q^2 = 0, take largest root (> 0)
    let cubic = [l(8.0), l(8.0) * p, l(2.0) * p * p - l(8.0) * r, -q * q];
    let m0 = solve_cubic_monic(p, p * p / l(4.0) - r, -q * q / l(8.0))
        .into_iter()
        .fold(T::zero(), |acc, m| acc.max(m));
    let mut m = polish(&cubic, m0);
    if m <= T::zero() {
        m = m0;
    }
    if m <= T::zero() {
        return;
    }
    let s = (l(2.0) * m).sqrt();
    let offset = q / (l(2.0) * s);
    let half_p_m = p / l(2.0) + m;
    for (b, c) in [(s, half_p_m - offset), (-s, half_p_m + offset)] {
        for y in solve_quadratic(T::one(), b, c) {
            roots.push(y - shift);
        }
    }
}

fn biquadratic_roots<T: Real>(p: T, r: T) -> ArrayVec<T, 2> {
    let mut out = ArrayVec::new();
    let disc = p * p - T::lit(4.0) * r;
    if disc >= T::zero() {
        for z in solve_quadratic(T::one(), p, r) {
            out.push(z);
        }
    } else {
        // complex z: y^2 = z has no real solution unless |Im z| is negligible
        let re = -p / T::lit(2.0);
        let im = (-disc).sqrt() / T::lit(2.0);
        if accept_imag(re, im) {
            out.push(re);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn roots_of(c: [f64; 5]) -> Vec<f64> {
        solve_quartic(c).unwrap().to_vec()
    }

    #[test]
    fn four_simple_roots() {
        let r = roots_of([1.0, 0.0, -5.0, 0.0, 4.0]);
        assert_eq!(r.len(), 4);
        for (got, want) in r.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadruple_root_collapses() {
        let r = roots_of([1.0, -4.0, 6.0, -4.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn no_real_roots() {
        assert!(roots_of([1.0, 0.0, 2.0, 0.0, 5.0]).is_empty());
    }

    #[test]
    fn non_biquadratic_quartic() {
        // (x - 3)(x + 0.5)(x^2 + x + 1)
        let r = roots_of([1.0, -1.5, -3.0, -4.0, -1.5]);
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -0.5, epsilon = 1e-12);
        assert_relative_eq!(r[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degree_drops_when_leading_terms_vanish() {
        // cubic (x-1)(x-2)(x-3)
        let r = roots_of([0.0, 1.0, -6.0, 11.0, -6.0]);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-10);
        }
        assert_eq!(roots_of([0.0, 0.0, 1.0, 0.0, -4.0]), vec![-2.0, 2.0]);
        assert_eq!(roots_of([0.0, 0.0, 0.0, 2.0, -1.0]), vec![0.5]);
        assert!(roots_of([0.0, 0.0, 0.0, 0.0, 3.0]).is_empty());
        // cubic with a single real root
        let r = roots_of([0.0, 1.0, 0.0, 1.0, 2.0]);
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn all_zero_is_an_error() {
        assert_eq!(solve_quartic([0.0; 5]), Err(QuarticError::IdenticallyZero));
        assert_eq!(
            solve_quartic([1e-15, 0.0, -1e-15, 0.0, 0.0]),
            Err(QuarticError::IdenticallyZero)
        );
    }

    #[test]
    fn double_roots_are_found() {
        // (x-1)^2 (x+2)^2
        let r = roots_of([1.0, 2.0, -3.0, -4.0, 4.0]);
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -2.0, epsilon = 1e-7);
        assert_relative_eq!(r[1], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn works_in_f32() {
        let r = solve_quartic([1.0_f32, 0.0, -5.0, 0.0, 4.0]).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[3] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn horner_derivative() {
        let (v, d) = horner(&[1.0, -2.0, 3.0], 2.0);
        assert_eq!((v, d), (3.0, 2.0));
    }
}
