//! Local reciprocity maps for abelian fields, the maps φ_v and the order of
//! the S-ray class group of Q modulo T.

use super::field::{crt, gcd, mod_inv, mod_pow, primitive_root, ArithmeticError, FieldInstance, Place};
use crate::group_ring::{GroupRingElement, ProductDecomposition};
use rug::{Integer, Rational};
use std::collections::HashSet;

/// rec_p(u) acts on ζ_{p^e} by u^{RECIPROCITY_UNIT_EXPONENT} for a p-adic
/// unit u. The value −1 is the one for which Σ_v φ_v = 0 on S-units, with
/// Frobenius taken to be arithmetic.
pub const RECIPROCITY_UNIT_EXPONENT: i64 = -1;

fn split_p(a: &Rational, p: u64) -> (i64, Integer, Integer) {
    let mut num = a.numer().clone();
    let mut den = a.denom().clone();
    let mut k = 0i64;
    while num.is_divisible_u(p as u32) {
        num /= p as u32;
        k += 1;
    }
    while den.is_divisible_u(p as u32) {
        den /= p as u32;
        k -= 1;
    }
    (k, num, den)
}

fn residue(x: &Integer, n: u64) -> u64 {
    let r = Integer::from(x % n);
    let r = if r < 0 { r + n } else { r };
    r.to_u64().expect("small")
}

/// The local Artin image of a ∈ Q_p^× in G (lying in the decomposition group G_p).
pub fn local_artin(inst: &FieldInstance, p: u64, a: &Rational) -> Result<usize, ArithmeticError> {
    if a.cmp0() == std::cmp::Ordering::Equal {
        return Err(ArithmeticError::NotCoprime("0".into(), p));
    }
    let m = inst.m;
    let (k, num, den) = split_p(a, p);
    let e = inst.prime_powers.iter().find(|x| x.0 == p).map_or(0, |x| x.1);
    if e == 0 {
        let fr = inst.frobenius(p);
        return Ok(inst.group.pow(fr, k));
    }
    let pe = p.pow(e);
    let rest = m / pe;
    let u = residue(&num, pe) * mod_inv(residue(&den, pe), pe) % pe;
    let ue = if RECIPROCITY_UNIT_EXPONENT < 0 {
        mod_pow(mod_inv(u, pe), (-RECIPROCITY_UNIT_EXPONENT) as u64, pe)
    } else {
        mod_pow(u, RECIPROCITY_UNIT_EXPONENT as u64, pe)
    };
    let pk = if rest == 1 {
        0
    } else if k >= 0 {
        mod_pow(p % rest, k as u64, rest)
    } else {
        mod_pow(mod_inv(p % rest, rest), (-k) as u64, rest)
    };
    Ok(inst.class_of(crt(ue, pe, pk, rest.max(1))))
}

/// rec_p(a) for a coprime to p; the value lies in the inertia group J_p.
pub fn reciprocity_unit(inst: &FieldInstance, p: u64, a: i64) -> Result<usize, ArithmeticError> {
    if a == 0 || a.unsigned_abs() % p == 0 {
        return Err(ArithmeticError::NotCoprime(a.to_string(), p));
    }
    local_artin(inst, p, &Rational::from(a))
}

/// φ_v(a) = π_X(rec_v(a)) − 1 ∈ I(H) ⊂ Z[G] for the level K_X, L = Q.
pub fn phi_v(
    inst: &FieldInstance,
    v: Place,
    a: &Rational,
    dec: &ProductDecomposition,
    x: &[u64],
) -> Result<GroupRingElement, ArithmeticError> {
    let g = &inst.group;
    let rec = match v {
        Place::Infinite => {
            if a.cmp0() == std::cmp::Ordering::Less {
                inst.class_of(inst.m.max(2) - 1)
            } else {
                0
            }
        }
        Place::Finite(p) => local_artin(inst, p, a)?,
    };
    let img = dec.project(rec, x);
    Ok(&GroupRingElement::basis(g, img) - &GroupRingElement::one(g))
}

/// |A_{Q,S,T}|: the order of ⊕_{t∈T}(Z/t)^× modulo the image of −1 and the
/// finite primes of S.
pub fn ray_class_order(s: &[Place], t: &[u64]) -> Integer {
    let logs = |a: i64| -> Vec<u64> {
        t.iter()
            .map(|&q| {
                let g = primitive_root(q, q);
                let a = a.rem_euclid(q as i64) as u64;
                let mut x = 1 % q;
                let mut k = 0;
                while x != a {
                    x = x * g % q;
                    k += 1;
                }
                k
            })
            .collect()
    };
    let orders: Vec<u64> = t.iter().map(|&q| q - 1).collect();
    let mut gens = vec![logs(-1)];
    for v in s {
        if let Place::Finite(p) = v {
            if t.iter().all(|&q| gcd(*p, q) == 1) {
                gens.push(logs(*p as i64));
            }
        }
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut stack = vec![vec![0u64; t.len()]];
    seen.insert(stack[0].clone());
    while let Some(x) = stack.pop() {
        for g in &gens {
            let y: Vec<u64> = x.iter().zip(g).zip(&orders).map(|((a, b), n)| (a + b) % n).collect();
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    let total: u64 = orders.iter().product();
    Integer::from(total / seen.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic_q::field::{build_instance, InstanceConfig};

    fn flagship() -> std::sync::Arc<FieldInstance> {
        let c = InstanceConfig {
            prime_powers: vec![(5, 1), (7, 1)],
            s: vec![Place::Infinite, Place::Finite(5), Place::Finite(7)],
            t: vec![3],
            v0: Some(Place::Finite(7)),
            ..Default::default()
        };
        build_instance(&c).unwrap()
    }

    #[test]
    fn reciprocity_examples() {
        let inst = flagship();
        let j5 = inst.inertia(5);
        let r = reciprocity_unit(&inst, 5, 7).unwrap();
        assert!(j5.contains(&r));
        assert_ne!(r, 0);
        assert_eq!(inst.group.element_order(r), 2);
        assert_eq!(reciprocity_unit(&inst, 5, 11).unwrap(), 0);
        assert!(reciprocity_unit(&inst, 5, 10).is_err());
        for a in [2i64, 3, 5, 13] {
            for b in [2i64, 3, 11] {
                let ab = reciprocity_unit(&inst, 7, a * b).unwrap();
                let prod = inst.group.op(reciprocity_unit(&inst, 7, a).unwrap(), reciprocity_unit(&inst, 7, b).unwrap());
                assert_eq!(ab, prod);
            }
        }
    }

    #[test]
    fn product_formula_on_units() {
        // Σ_{v∈S} rec_v(u) = 1 for S-units u (all other places contribute trivially)
        let inst = flagship();
        for u in [-5i64, 7, -1, 5, 35, -7] {
            let a = Rational::from(u);
            let r5 = local_artin(&inst, 5, &a).unwrap();
            let r7 = local_artin(&inst, 7, &a).unwrap();
            assert_eq!(inst.group.op(r5, r7), 0, "u = {}", u);
        }
    }

    #[test]
    fn unramified_reciprocity_is_frobenius() {
        let inst = flagship();
        let a = Rational::from(11 * 11 * 3);
        let r = local_artin(&inst, 11, &a).unwrap();
        assert_eq!(r, inst.group.pow(inst.frobenius(11), 2));
    }

    #[test]
    fn ray_class_orders() {
        let s = [Place::Infinite, Place::Finite(5), Place::Finite(7)];
        assert_eq!(ray_class_order(&s, &[3]), 1);
        assert_eq!(ray_class_order(&[Place::Infinite, Place::Finite(2)], &[5]), 1);
        assert_eq!(ray_class_order(&[Place::Infinite], &[7]), 3);
        assert_eq!(ray_class_order(&[Place::Infinite, Place::Finite(3)], &[7]), 1);
    }
}
