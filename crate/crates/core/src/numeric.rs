//! Multiprecision real and complex helpers, Bernoulli numbers, the Hurwitz
//! zeta function near s = 0 and rational recognition.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::sync::Mutex;

/// Working precision used for intermediate values given a target precision.
pub fn working_precision(bits: u32) -> u32 {
    bits + 64
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn float(prec: u32, x: i64) -> Float {
    Float::with_val(prec, x)
}

pub fn from_rational(prec: u32, x: &Rational) -> Float {
    Float::with_val(prec, x)
}

/// Absolute tolerance 2^{−bits}.
pub fn tolerance(prec: u32, bits: u32) -> Float {
    Float::with_val(prec, Float::i_exp(1, -(bits as i32)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Complex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn real(x: Float) -> Self {
        let prec = x.prec();
        Complex { re: x, im: Float::new(prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// exp(2πi·k/n).
    pub fn root_of_unity(prec: u32, k: i64, n: u64) -> Self {
        let k = k.rem_euclid(n as i64);
        let angle = pi(prec) * Float::with_val(prec, 2 * k) / Float::with_val(prec, n);
        let (s, c) = angle.sin_cos(Float::new(prec));
        Complex { re: c, im: s }
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re + &o.re), im: Float::with_val(self.prec(), &self.im + &o.im) }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re - &o.re), im: Float::with_val(self.prec(), &self.im - &o.im) }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Complex { re, im }
    }

    pub fn scale(&self, x: &Float) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re * x), im: Float::with_val(self.prec(), &self.im * x) }
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn abs(&self) -> Float {
        let p = self.prec();
        (Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())).sqrt()
    }

    pub fn is_one(&self, tol: &Float) -> bool {
        let one = Complex::real(Float::with_val(self.prec(), 1));
        self.sub(&one).abs() < *tol
    }
}

/// Bernoulli numbers B_0..B_n (B_1 = −1/2), cached.
pub fn bernoulli(n: usize) -> Rational {
    static CACHE: Mutex<Vec<Rational>> = Mutex::new(Vec::new());
    let mut c = CACHE.lock().unwrap();
    while c.len() <= n {
        let k = c.len();
        if k == 0 {
            c.push(Rational::from(1));
            continue;
        }
        // Σ_{j=0}^{k} C(k+1, j) B_j = 0
        let mut s = Rational::new();
        for (j, b) in c.iter().enumerate() {
            s += Rational::from(Integer::from(Integer::binomial_u(k as u32 + 1, j as u32)) * b);
        }
        c.push(-s / Integer::from(k + 1));
    }
    c[n].clone()
}

/// Hurwitz zeta ζ(s, a) for real s ≠ 1 and a > 0, by Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: &Float, a: &Float) -> Float {
    let prec = s.prec().max(a.prec());
    let n_terms = 40 + prec as usize / 4;
    let m_terms = 10 + prec as usize / 4;
    let mut sum = Float::new(prec);
    for k in 0..n_terms {
        let base = Float::with_val(prec, a + k as u32);
        sum += base.pow(&(-s.clone()));
    }
    let na = Float::with_val(prec, a + n_terms as u32);
    let one_minus_s = Float::with_val(prec, 1 - s.clone());
    sum += Float::with_val(prec, na.clone().pow(&one_minus_s)) / Float::with_val(prec, s - 1u32);
    sum += Float::with_val(prec, na.clone().pow(&(-s.clone()))) / 2u32;
    // Σ_j B_{2j}/(2j)! · s(s+1)…(s+2j−2) · N^{−s−2j+1}
    let mut rising = s.clone();
    let mut fact = Float::with_val(prec, 2);
    for j in 1..=m_terms {
        let b = from_rational(prec, &bernoulli(2 * j));
        let exp = Float::with_val(prec, -s.clone() - (2 * j - 1) as u32);
        let term = b * &rising / &fact * na.clone().pow(&exp);
        sum += term;
        // update rising product and factorial for j+1
        rising *= Float::with_val(prec, s + (2 * j - 1) as u32);
        rising *= Float::with_val(prec, s + (2 * j) as u32);
        fact *= Float::with_val(prec, (2 * j + 1) * (2 * j + 2));
    }
    sum
}

/// log Γ(x) for x > 0.
pub fn ln_gamma(x: &Float) -> Float {
    x.clone().ln_gamma()
}

/// Best rational approximation with denominator at most `bound`, accepted
/// only when within `tol` of x.
pub fn rationalize(x: &Float, bound: &Integer, tol: &Float) -> Option<Rational> {
    let prec = x.prec();
    let (mut p0, mut q0, mut p1, mut q1) = (Integer::from(0), Integer::from(1), Integer::from(1), Integer::from(0));
    let mut y = x.clone();
    let mut best: Option<Rational> = None;
    for _ in 0..200 {
        let a = y.clone().floor().to_integer()?;
        let p2 = Integer::from(&a * &p1) + &p0;
        let q2 = Integer::from(&a * &q1) + &q0;
        if q2 > *bound {
            break;
        }
        let r = Rational::from((p2.clone(), q2.clone()));
        let err = Float::with_val(prec, x - &r).abs();
        best = Some(r);
        if err < *tol {
            return best;
        }
        let frac = Float::with_val(prec, &y - &a);
        if frac.is_zero() {
            break;
        }
        y = Float::with_val(prec, 1) / frac;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    best.filter(|r| Float::with_val(prec, x - r).abs() < *tol)
}

/// Nearest integer together with the distance to it.
pub fn round_with_residual(x: &Float) -> (Integer, Float) {
    let r = x.clone().round();
    let d = Float::with_val(x.prec(), x - &r).abs();
    (r.to_integer().expect("finite"), d)
}

/// Leading part of a germ at s = 0: c·s^order, with an absolute error bound on c.
#[derive(Clone, Debug)]
pub struct TaylorGerm {
    pub order: usize,
    pub coeff: Complex,
    pub err: f64,
}

impl TaylorGerm {
    pub fn constant(c: Complex, err: f64) -> Self {
        TaylorGerm { order: 0, coeff: c, err }
    }

    pub fn mul(&self, o: &TaylorGerm) -> TaylorGerm {
        let a = self.coeff.abs().to_f64();
        let b = o.coeff.abs().to_f64();
        TaylorGerm { order: self.order + o.order, coeff: self.coeff.mul(&o.coeff), err: a * o.err + b * self.err + self.err * o.err }
    }
}

/// Solves a small dense real system A·x = b by Gaussian elimination with
/// partial pivoting. Returns `None` for a numerically singular matrix.
pub fn solve_real(mut a: Vec<Vec<Float>>, mut b: Vec<Float>) -> Option<Vec<Float>> {
    let n = a.len();
    let prec = b.first().map_or(64, |x| x.prec());
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].clone().abs().partial_cmp(&a[j][c].clone().abs()).unwrap())?;
        if a[p][c].is_zero() {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for i in c + 1..n {
            let f = Float::with_val(prec, &a[i][c] / &a[c][c]);
            for j in c..n {
                let t = Float::with_val(prec, &f * &a[c][j]);
                a[i][j] -= t;
            }
            let t = Float::with_val(prec, &f * &b[c]);
            b[i] -= t;
        }
    }
    let mut x = vec![Float::new(prec); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            s -= Float::with_val(prec, &a[i][j] * &x[j]);
        }
        x[i] = s / &a[i][i];
    }
    Some(x)
}

/// Least-squares coordinates y with y·B ≈ v for a full-row-rank B.
pub fn least_squares_left(b: &[Vec<Float>], v: &[Float]) -> Option<Vec<Float>> {
    let n = b.len();
    let prec = v.first().map_or(64, |x| x.prec());
    let dot = |x: &[Float], y: &[Float]| -> Float {
        let mut s = Float::new(prec);
        for (a, c) in x.iter().zip(y) {
            s += Float::with_val(prec, a * c);
        }
        s
    };
    let gram: Vec<Vec<Float>> = (0..n).map(|i| (0..n).map(|j| dot(&b[i], &b[j])).collect()).collect();
    let rhs: Vec<Float> = (0..n).map(|i| dot(&b[i], v)).collect();
    solve_real(gram, rhs)
}

/// Numerical rank by Gram–Schmidt with a relative threshold.
pub fn numerical_rank(rows: &[Vec<Float>], tol: &Float) -> usize {
    let mut basis: Vec<Vec<Float>> = Vec::new();
    for r in rows {
        let prec = r.first().map_or(64, |x| x.prec());
        let mut v = r.clone();
        for b in &basis {
            let mut num = Float::new(prec);
            let mut den = Float::new(prec);
            for (x, y) in v.iter().zip(b) {
                num += Float::with_val(prec, x * y);
                den += Float::with_val(prec, y * y);
            }
            let f = num / den;
            for (x, y) in v.iter_mut().zip(b) {
                *x -= Float::with_val(prec, &f * y);
            }
        }
        let mut norm = Float::new(prec);
        for x in &v {
            norm += Float::with_val(prec, x * x);
        }
        if norm.sqrt() > *tol {
            basis.push(v);
        }
    }
    basis.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(1), Rational::from((-1, 2)));
        assert_eq!(bernoulli(2), Rational::from((1, 6)));
        assert_eq!(bernoulli(4), Rational::from((-1, 30)));
        assert_eq!(bernoulli(12), Rational::from((-691, 2730)));
        assert_eq!(bernoulli(7), Rational::new());
    }

    #[test]
    fn hurwitz_against_closed_forms() {
        let prec = 192;
        let tol = tolerance(prec, 150);
        // ζ(0, a) = 1/2 − a
        let a = Float::with_val(prec, 0.3);
        let z0 = hurwitz_zeta(&Float::new(prec), &a);
        assert!(Float::with_val(prec, z0 - (Float::with_val(prec, 0.5) - &a)).abs() < tol);
        // ζ(2, 1) = π²/6
        let z2 = hurwitz_zeta(&Float::with_val(prec, 2), &Float::with_val(prec, 1));
        let expect = pi(prec).square() / 6u32;
        assert!(Float::with_val(prec, z2 - expect).abs() < tol);
        // ζ(−1, 1) = −1/12
        let zm1 = hurwitz_zeta(&Float::with_val(prec, -1), &Float::with_val(prec, 1));
        assert!(Float::with_val(prec, zm1 + Float::with_val(prec, 1) / 12u32).abs() < tol);
        // ∂_s ζ(s, a) at 0 equals log Γ(a) − ½ log 2π
        let h = Float::with_val(prec, Float::i_exp(1, -60));
        let d = (hurwitz_zeta(&h, &a) - hurwitz_zeta(&Float::with_val(prec, -h.clone()), &a)) / (Float::with_val(prec, 2) * &h);
        let expect = ln_gamma(&a) - (pi(prec) * 2u32).ln() / 2u32;
        assert!(Float::with_val(prec, d - expect).abs() < tolerance(prec, 50));
    }

    #[test]
    fn rational_recognition() {
        let prec = 128;
        let x = Float::with_val(prec, -355) / 113u32;
        let r = rationalize(&x, &Integer::from(1000), &tolerance(prec, 100)).unwrap();
        assert_eq!(r, Rational::from((-355, 113)));
        let pi_v = pi(prec);
        assert!(rationalize(&pi_v, &Integer::from(1000), &tolerance(prec, 100)).is_none());
        assert_eq!(
            rationalize(&Float::with_val(prec, 7), &Integer::from(10), &tolerance(prec, 100)).unwrap(),
            Rational::from(7)
        );
    }

    #[test]
    fn linear_solves() {
        let prec = 128;
        let f = |x: i64| Float::with_val(prec, x);
        let a = vec![vec![f(2), f(1)], vec![f(1), f(3)]];
        let x = solve_real(a, vec![f(3), f(5)]).unwrap();
        assert!(Float::with_val(prec, &x[0] - Float::with_val(prec, 4) / 5u32).abs() < tolerance(prec, 100));
        let b = vec![vec![f(1), f(0), f(-1)], vec![f(0), f(1), f(-1)]];
        let y = least_squares_left(&b, &[f(2), f(3), f(-5)]).unwrap();
        assert!(Float::with_val(prec, &y[1] - 3u32).abs() < tolerance(prec, 100));
        assert_eq!(numerical_rank(&[vec![f(1), f(2)], vec![f(2), f(4)]], &tolerance(prec, 60)), 1);
    }

    #[test]
    fn roots_of_unity() {
        let prec = 128;
        let z = Complex::root_of_unity(prec, 1, 4);
        assert!(Float::with_val(prec, &z.im - 1u32).abs() < tolerance(prec, 100));
        let w = Complex::root_of_unity(prec, 1, 6).mul(&Complex::root_of_unity(prec, 5, 6));
        assert!(w.is_one(&tolerance(prec, 100)));
    }
}
