//! Finite fields F_{p^f} as F_p[x]/(P) with x primitive, and discrete logs by
//! Pohlig–Hellman with baby-step giant-step.

use std::collections::HashMap;
use std::sync::Mutex;

/// Trial-division factorization.
pub fn factorize(mut n: u128) -> Vec<(u128, u32)> {
    let mut out = Vec::new();
    let mut d: u128 = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub type Elem = Vec<u64>;

#[derive(Debug)]
pub struct FiniteField {
    p: u64,
    deg: usize,
    /// Low coefficients of the monic modulus x^deg + Σ c_i x^i.
    modulus: Vec<u64>,
    order: u128,
    factors: Vec<(u128, u32)>,
    baby: Mutex<HashMap<u128, HashMap<Elem, u128>>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("field of order {0}^{1} is too large")]
    TooLarge(u64, usize),
    #[error("no primitive polynomial found")]
    NoPrimitive,
    #[error("discrete log of zero")]
    Zero,
}

impl FiniteField {
    /// The field of order p^deg with the lexicographically first modulus for
    /// which x generates the multiplicative group.
    pub fn new(p: u64, deg: usize) -> Result<Self, FieldError> {
        let order = (p as u128).checked_pow(deg as u32).filter(|&q| q < (1u128 << 62)).ok_or(FieldError::TooLarge(p, deg))?;
        let factors = factorize(order - 1);
        if factors.iter().any(|&(l, _)| l > 1u128 << 40) {
            return Err(FieldError::TooLarge(p, deg));
        }
        let mut f = FiniteField { p, deg, modulus: vec![0; deg], order, factors, baby: Mutex::new(HashMap::new()) };
        let total = (p as u128).pow(deg as u32);
        for idx in 0..total {
            let mut c = vec![0u64; deg];
            let mut k = idx;
            for x in c.iter_mut() {
                *x = (k % p as u128) as u64;
                k /= p as u128;
            }
            if deg > 0 && c[0] == 0 {
                continue;
            }
            f.modulus = c;
            if f.x_is_primitive() {
                return Ok(f);
            }
        }
        Err(FieldError::NoPrimitive)
    }

    fn x_is_primitive(&self) -> bool {
        let x = self.generator();
        let q1 = self.order - 1;
        if self.pow(&x, q1) != self.one() {
            return false;
        }
        self.factors.iter().all(|&(l, _)| self.pow(&x, q1 / l) != self.one())
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn order(&self) -> u128 {
        self.order
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn one(&self) -> Elem {
        self.from_int(1)
    }

    pub fn from_int(&self, a: i64) -> Elem {
        let mut e = vec![0; self.deg];
        e[0] = a.rem_euclid(self.p as i64) as u64;
        e
    }

    pub fn generator(&self) -> Elem {
        let mut e = vec![0; self.deg];
        if self.deg == 1 {
            // F_p: x ≡ −c_0
            e[0] = (self.p - self.modulus[0]) % self.p;
        } else {
            e[1] = 1;
        }
        e
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(x, y)| (x + self.p - y) % self.p).collect()
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let p = self.p as u128;
        let n = self.deg;
        let mut r = vec![0u128; 2 * n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = (r[i + j] + x as u128 * y as u128) % p;
            }
        }
        // x^n = −Σ c_i x^i
        for k in (n..2 * n).rev() {
            let c = r[k];
            if c == 0 {
                continue;
            }
            r[k] = 0;
            for (i, &m) in self.modulus.iter().enumerate() {
                r[k - n + i] = (r[k - n + i] + p * p - c * m as u128) % p;
            }
        }
        r.truncate(n);
        r.into_iter().map(|x| x as u64).collect()
    }

    pub fn pow(&self, a: &Elem, mut e: u128) -> Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// Discrete log to the base x, in [0, q − 1).
    pub fn dlog(&self, a: &Elem) -> Result<u128, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::Zero);
        }
        let q1 = self.order - 1;
        let g = self.generator();
        let mut residues = Vec::new();
        for &(l, e) in &self.factors {
            let le = l.pow(e);
            let gl = self.pow(&g, q1 / le);
            let al = self.pow(a, q1 / le);
            // digits of log in base l
            let gamma = self.pow(&gl, le / l);
            let mut x: u128 = 0;
            let mut lk: u128 = 1;
            for k in 0..e {
                let inv = self.pow(&gl, (le - x % le) % le);
                let h = self.pow(&self.mul(&inv, &al), le / (lk * l));
                let d = self.bsgs(&gamma, &h, l);
                x += d * lk;
                if k + 1 < e {
                    lk *= l;
                }
            }
            residues.push((x, le));
        }
        Ok(crt(&residues))
    }

    /// Solves γ^d = h for γ of prime order l.
    fn bsgs(&self, gamma: &Elem, h: &Elem, l: u128) -> u128 {
        let m = (l as f64).sqrt().ceil() as u128 + 1;
        let mut cache = self.baby.lock().unwrap();
        let table = cache.entry(l).or_insert_with(|| {
            let mut t = HashMap::new();
            let mut cur = self.one();
            for j in 0..m {
                t.entry(cur.clone()).or_insert(j);
                cur = self.mul(&cur, gamma);
            }
            t
        });
        let step = self.pow(gamma, (l - m % l) % l);
        let mut cur = h.clone();
        for i in 0..=m {
            if let Some(&j) = table.get(&cur) {
                return (i * m + j) % l;
            }
            cur = self.mul(&cur, &step);
        }
        unreachable!("element outside the subgroup")
    }
}

fn crt(parts: &[(u128, u128)]) -> u128 {
    let mut x: u128 = 0;
    let mut m: u128 = 1;
    for &(r, n) in parts {
        // find t with x + m t ≡ r mod n
        let mi = mod_inverse(m % n, n);
        let t = ((r + n - x % n) % n) * mi % n;
        x += m * t;
        m *= n;
    }
    x
}

fn mod_inverse(a: u128, n: u128) -> u128 {
    if n == 1 {
        return 0;
    }
    let (mut t, mut nt) = (0i128, 1i128);
    let (mut r, mut nr) = (n as i128, a as i128);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    t.rem_euclid(n as i128) as u128
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fields() {
        let f = FiniteField::new(3, 2).unwrap();
        assert_eq!(f.order(), 9);
        let g = f.generator();
        let mut cur = f.one();
        for k in 0..8u128 {
            assert_eq!(f.dlog(&cur).unwrap(), k);
            cur = f.mul(&cur, &g);
        }
        assert_eq!(cur, f.one());
        let p = FiniteField::new(7, 1).unwrap();
        assert_eq!(p.dlog(&p.from_int(1)).unwrap(), 0);
        assert_eq!(p.pow(&p.generator(), 6), p.one());
        assert!(p.dlog(&p.from_int(0)).is_err());
    }

    #[test]
    fn flagship_residue_field() {
        // F_{3^12} contains the 35th roots of unity
        let f = FiniteField::new(3, 12).unwrap();
        assert_eq!(f.modulus(), &[2, 2, 2, 1, 2, 0, 0, 0, 0, 0, 0, 0]);
        let z = f.pow(&f.generator(), (f.order() - 1) / 35);
        assert_eq!(f.pow(&z, 35), f.one());
        assert_ne!(f.pow(&z, 7), f.one());
        let a = f.add(&f.one(), &z);
        let l = f.dlog(&a).unwrap();
        assert_eq!(f.pow(&f.generator(), l), a);
    }

    #[test]
    fn pohlig_hellman_large() {
        let f = FiniteField::new(7, 12).unwrap();
        let z = f.pow(&f.generator(), (f.order() - 1) / 45);
        let a = f.sub(&f.one(), &z);
        let l = f.dlog(&a).unwrap();
        assert_eq!(f.pow(&f.generator(), l), a);
        assert_eq!(factorize(7u128.pow(12) - 1), vec![(2, 5), (3, 2), (5, 2), (13, 1), (19, 1), (43, 1), (181, 1)]);
    }
}
