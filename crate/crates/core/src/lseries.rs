//! Dirichlet characters of Gal(K/Q), leading terms of (S,T)-modified
//! L-functions at s = 0, higher Stickelberger elements and x_{K,S,T,V}.

use crate::arithmetic_q::field::{gcd, ArithmeticError, Level, LevelPlace, Place};
use crate::group_ring::FiniteAbelianGroup;
use crate::multilinear::combinations;
use crate::numeric::{self, hurwitz_zeta, ln_gamma, tolerance, Complex, TaylorGerm};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};
use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// A character of a finite abelian group, by its exponents on the factors.
/// Values are ζ_N^k with N the exponent of the group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    pub index: usize,
    pub exps: Vec<usize>,
    factors: Vec<usize>,
    pub modulus: usize,
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a as u64, b as u64) as usize * b
}

impl DirichletCharacter {
    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// χ(σ) = ζ_N^k; returns k mod N.
    pub fn value_exp(&self, group: &FiniteAbelianGroup, sigma: usize) -> usize {
        let s = group.decode(sigma);
        let n = self.modulus;
        self.exps.iter().zip(&s).zip(&self.factors).map(|((e, x), f)| e * x * (n / f)).sum::<usize>() % n
    }

    pub fn value(&self, group: &FiniteAbelianGroup, sigma: usize, prec: u32) -> Complex {
        Complex::root_of_unity(prec, self.value_exp(group, sigma) as i64, self.modulus as u64)
    }

    /// Multiplicative order.
    pub fn order(&self) -> usize {
        self.exps.iter().zip(&self.factors).fold(1, |acc, (e, f)| lcm(acc, f / gcd(*e as u64, *f as u64) as usize))
    }

    pub fn inverse(&self, group: &FiniteAbelianGroup) -> DirichletCharacter {
        let exps: Vec<usize> = self.exps.iter().zip(&self.factors).map(|(e, f)| (f - e) % f).collect();
        let index = group.encode(&exps.iter().map(|&x| x as i64).collect::<Vec<_>>());
        DirichletCharacter { index, exps, factors: self.factors.clone(), modulus: self.modulus }
    }

    /// Trivial on the subgroup given by its elements.
    pub fn trivial_on(&self, group: &FiniteAbelianGroup, elems: &[usize]) -> bool {
        elems.iter().all(|&s| self.value_exp(group, s) == 0)
    }
}

/// All |G| characters, indexed like the group elements.
pub fn characters(group: &FiniteAbelianGroup) -> Vec<DirichletCharacter> {
    let factors = group.factors().to_vec();
    let modulus = factors.iter().fold(1, |a, &b| lcm(a, b));
    (0..group.order())
        .map(|i| DirichletCharacter { index: i, exps: group.decode(i), factors: factors.clone(), modulus })
        .collect()
}

/// r_χ = |{v ∈ S : χ(G_v) = 1}| for χ ≠ 1, and |S| − 1 for χ = 1.
pub fn r_chi(level: &Level, chi: &DirichletCharacter) -> usize {
    if chi.is_trivial() {
        return level.s.len() - 1;
    }
    let g = level.group();
    level.s.iter().filter(|&&v| chi.trivial_on(g, &level.decomposition(v))).count()
}

/// Conductor of χ as a Dirichlet character modulo m.
pub fn conductor(level: &Level, chi: &DirichletCharacter) -> u64 {
    let m = level.inst.m.max(1);
    let g = level.group();
    for f in (1..=m).filter(|f| m % f == 0) {
        let ok = level.inst.units().iter().filter(|&&a| a % f == 1 % f).all(|&a| chi.value_exp(g, level.class_of(a)) == 0);
        if ok {
            return f;
        }
    }
    m
}

/// The primitive character ψ mod f attached to χ: ψ(a) as an exponent, or
/// `None` when gcd(a, f) > 1.
pub struct Primitive {
    pub f: u64,
    table: Vec<Option<usize>>,
    pub modulus: usize,
}

impl Primitive {
    pub fn new(level: &Level, chi: &DirichletCharacter) -> Self {
        let f = conductor(level, chi);
        let m = level.inst.m.max(1);
        let g = level.group();
        let mut table = vec![None; f as usize];
        for &b in level.inst.units() {
            let a = (b % f) as usize;
            if table[a].is_none() {
                table[a] = Some(chi.value_exp(g, level.class_of(b)));
            }
        }
        if m == 1 {
            table = vec![Some(0)];
        }
        Primitive { f, table, modulus: chi.modulus }
    }

    pub fn exp(&self, a: u64) -> Option<usize> {
        if gcd(a, self.f) != 1 {
            return None;
        }
        self.table[(a % self.f) as usize]
    }

    pub fn value(&self, a: u64, prec: u32) -> Complex {
        match self.exp(a) {
            Some(k) => Complex::root_of_unity(prec, k as i64, self.modulus as u64),
            None => Complex::zero(prec),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.f == 1
    }
}

pub fn is_even(level: &Level, chi: &DirichletCharacter) -> bool {
    let m = level.inst.m;
    m <= 2 || chi.value_exp(level.group(), level.class_of(m - 1)) == 0
}

/// lim_{s→0} s^{−r} L_{S,T}(s, χ) together with the order r found.
pub fn leading_term(level: &Level, chi: &DirichletCharacter, prec: u32) -> Result<TaylorGerm, ArithmeticError> {
    let psi = Primitive::new(level, chi);
    let f = psi.f;
    let tol = 2f64.powi(-(prec as i32) + 16);
    let mut germ = if psi.is_trivial() {
        TaylorGerm::constant(Complex::real(Float::with_val(prec, -0.5)), 0.0)
    } else if is_even(level, chi) {
        let mut s = Complex::zero(prec);
        for a in (1..f).filter(|&a| gcd(a, f) == 1) {
            let lg = ln_gamma(&(Float::with_val(prec, a) / f));
            s = s.add(&psi.value(a, prec).scale(&lg));
        }
        TaylorGerm { order: 1, coeff: s, err: tol }
    } else {
        // −B_{1,ψ} = −(1/f) Σ ψ(a) a
        let mut s = Complex::zero(prec);
        for a in (1..f).filter(|&a| gcd(a, f) == 1) {
            s = s.add(&psi.value(a, prec).scale(&Float::with_val(prec, a)));
        }
        TaylorGerm::constant(s.scale(&(Float::with_val(prec, -1) / f)), tol)
    };
    for v in &level.s {
        if let Place::Finite(p) = v {
            if f % p == 0 {
                continue;
            }
            let factor = if psi.exp(*p) == Some(0) {
                TaylorGerm { order: 1, coeff: Complex::real(Float::with_val(prec, *p).ln()), err: tol }
            } else {
                TaylorGerm::constant(Complex::real(Float::with_val(prec, 1)).sub(&psi.value(*p, prec)), tol)
            };
            germ = germ.mul(&factor);
        }
    }
    for &t in &level.inst.t {
        let c = Complex::real(Float::with_val(prec, 1)).sub(&psi.value(t, prec).scale(&Float::with_val(prec, t)));
        germ = germ.mul(&TaylorGerm::constant(c, tol));
    }
    let expected = r_chi(level, chi);
    if germ.order != expected {
        return Err(ArithmeticError::Algebra(format!(
            "character {} vanishes to order {} but r_χ = {}",
            chi.index, germ.order, expected
        )));
    }
    Ok(germ)
}

/// L_{S,T}(s, χ) for real s ≠ 1.
pub fn l_value(level: &Level, chi: &DirichletCharacter, s: &Float) -> Complex {
    let prec = s.prec();
    let psi = Primitive::new(level, chi);
    let f = psi.f;
    let one = Float::with_val(prec, 1);
    let mut total = if psi.is_trivial() {
        Complex::real(hurwitz_zeta(s, &one))
    } else {
        let mut acc = Complex::zero(prec);
        for a in (1..f).filter(|&a| gcd(a, f) == 1) {
            let z = hurwitz_zeta(s, &(Float::with_val(prec, a) / f));
            acc = acc.add(&psi.value(a, prec).scale(&z));
        }
        acc.scale(&Float::with_val(prec, f).pow(&(-s.clone())))
    };
    for v in &level.s {
        if let Place::Finite(p) = v {
            if f % p == 0 {
                continue;
            }
            let ps = Float::with_val(prec, *p).pow(&(-s.clone()));
            total = total.mul(&Complex::real(one.clone()).sub(&psi.value(*p, prec).scale(&ps)));
        }
    }
    for &t in &level.inst.t {
        let ts = Float::with_val(prec, t).pow(&Float::with_val(prec, &one - s));
        total = total.mul(&Complex::real(one.clone()).sub(&psi.value(t, prec).scale(&ts)));
    }
    total
}

/// θ^{(r)} ∈ R[G] with the largest imaginary part met.
#[derive(Clone, Debug)]
pub struct StickelbergerVec {
    pub r: usize,
    pub coeffs: Vec<Float>,
    pub imag_residual: Float,
}

/// θ^{(r)} = Σ_{r_χ = r} L*_{S,T}(0, χ^{−1}) e_χ, e_χ = |G|^{−1} Σ χ(σ) σ^{−1}.
pub fn stickelberger(level: &Level, r: usize, cache: Option<&LValueCache>) -> Result<StickelbergerVec, ArithmeticError> {
    let prec = numeric::working_precision(level.precision());
    let g = level.group().clone();
    let chars: Vec<DirichletCharacter> = characters(&g).into_iter().filter(|c| r_chi(level, c) == r).collect();
    let terms: Vec<(DirichletCharacter, Complex)> = chars
        .par_iter()
        .map(|chi| {
            let inv = chi.inverse(&g);
            let v = match cache {
                Some(c) => c.leading_term(level, &inv, prec)?,
                None => leading_term(level, &inv, prec)?.coeff,
            };
            Ok((chi.clone(), v))
        })
        .collect::<Result<Vec<_>, ArithmeticError>>()?;
    let n = g.order();
    let mut coeffs = vec![Complex::zero(prec); n];
    for (chi, l) in &terms {
        for (tau, c) in coeffs.iter_mut().enumerate() {
            // coefficient of τ = σ^{−1} in e_χ is χ(τ^{−1})
            let k = (chi.modulus - chi.value_exp(&g, tau)) % chi.modulus;
            *c = c.add(&l.mul(&Complex::root_of_unity(prec, k as i64, chi.modulus as u64)));
        }
    }
    let mut imag = Float::new(prec);
    let coeffs: Vec<Float> = coeffs
        .into_iter()
        .map(|c| {
            let im = c.im.clone().abs() / n as u32;
            if im > imag {
                imag = im;
            }
            c.re / n as u32
        })
        .collect();
    if imag > tolerance(prec, level.precision() / 2) {
        return Err(ArithmeticError::Precision(format!("θ^({}) has imaginary part {}", r, imag.to_f64())));
    }
    Ok(StickelbergerVec { r, coeffs, imag_residual: imag })
}

/// x_{K,S,T,V} = θ^{(r)} ⋀_{v∈V}(w − w₀), as coordinates on the r-subsets of
/// `places` (in the order of `combinations`).
pub fn x_element(level: &Level, places: &[LevelPlace], theta: &StickelbergerVec, v: &[Place], v0: Place) -> Vec<Float> {
    let prec = theta.coeffs.first().map_or(64, |x| x.prec());
    let r = v.len();
    let combos = combinations(places.len(), r);
    let mut out = vec![Float::new(prec); combos.len()];
    let mut vs: Vec<Place> = v.to_vec();
    vs.sort();
    for (sigma, th) in theta.coeffs.iter().enumerate() {
        if th.is_zero() {
            continue;
        }
        let vectors: Vec<Vec<Float>> = vs
            .iter()
            .map(|&pl| {
                let mut e = vec![Float::new(prec); places.len()];
                e[level.place_index(places, pl, sigma)] += 1u32;
                e[level.place_index(places, v0, sigma)] -= 1u32;
                e
            })
            .collect();
        for (ci, c) in combos.iter().enumerate() {
            let m: Vec<Vec<Float>> = vectors.iter().map(|row| c.iter().map(|&j| row[j].clone()).collect()).collect();
            let d = crate::arithmetic_q::units::float_det(m);
            out[ci] += Float::with_val(prec, th * d);
        }
    }
    if r == 0 {
        return theta.coeffs.clone();
    }
    out
}

/// Append-only file cache of leading terms keyed by (m, χ, S, T, precision).
pub struct LValueCache {
    path: PathBuf,
    records: Mutex<BTreeMap<String, (String, String)>>,
    pub hits: Mutex<usize>,
    pub warnings: Mutex<Vec<String>>,
}

impl LValueCache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join("lvalues.txt");
        let mut records = BTreeMap::new();
        let mut warnings = Vec::new();
        if let Ok(text) = fs::read_to_string(&path) {
            for (i, line) in text.lines().enumerate() {
                let parts: Vec<&str> = line.split('\t').collect();
                if parts.len() == 4 && parts[1].parse::<f64>().is_ok() && parts[2].parse::<f64>().is_ok() {
                    records.insert(parts[0].to_string(), (parts[1].to_string(), parts[2].to_string()));
                } else if !line.trim().is_empty() {
                    warnings.push(format!("skipping corrupt cache record on line {}", i + 1));
                }
            }
        }
        Ok(LValueCache { path, records: Mutex::new(records), hits: Mutex::new(0), warnings: Mutex::new(warnings) })
    }

    pub fn key(level: &Level, chi: &DirichletCharacter, prec: u32) -> String {
        let s: Vec<String> = level.s.iter().map(|p| p.to_string()).collect();
        let t: Vec<String> = level.inst.t.iter().map(|p| p.to_string()).collect();
        let fix: Vec<String> = level.fixing_residues().iter().map(|x| x.to_string()).collect();
        format!(
            "m={};fix={};chi={};S={};T={};prec={}",
            level.inst.m,
            fix.join(","),
            chi.index,
            s.join(","),
            t.join(","),
            prec
        )
    }

    pub fn leading_term(&self, level: &Level, chi: &DirichletCharacter, prec: u32) -> Result<Complex, ArithmeticError> {
        let key = Self::key(level, chi, prec);
        if let Some((re, im)) = self.records.lock().unwrap().get(&key) {
            let parse = |s: &str| Float::parse(s).ok().map(|v| Float::with_val(prec, v));
            if let (Some(re), Some(im)) = (parse(re), parse(im)) {
                *self.hits.lock().unwrap() += 1;
                return Ok(Complex::new(re, im));
            }
        }
        let germ = leading_term(level, chi, prec)?;
        self.store(&key, &germ)?;
        Ok(germ.coeff)
    }

    fn store(&self, key: &str, germ: &TaylorGerm) -> Result<(), ArithmeticError> {
        let digits = (germ.coeff.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        let re = germ.coeff.re.to_string_radix(10, Some(digits));
        let im = germ.coeff.im.to_string_radix(10, Some(digits));
        let err_exp = if germ.err > 0.0 { germ.err.log2().ceil() as i64 } else { i64::MIN / 2 };
        let line = format!("{}\t{}\t{}\terr=2^{}\n", key, re, im, err_exp);
        let mut records = self.records.lock().unwrap();
        if records.contains_key(key) {
            return Ok(());
        }
        // one write call per record keeps appends atomic
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| ArithmeticError::Algebra(format!("cache write failed: {}", e)))?;
        file.write_all(line.as_bytes()).map_err(|e| ArithmeticError::Algebra(format!("cache write failed: {}", e)))?;
        records.insert(key.to_string(), (re, im));
        Ok(())
    }

    /// Records sorted by key.
    pub fn list(&self) -> Vec<(String, String, String)> {
        self.records.lock().unwrap().iter().map(|(k, (a, b))| (k.clone(), a.clone(), b.clone())).collect()
    }

    pub fn clear(&self) -> std::io::Result<()> {
        self.records.lock().unwrap().clear();
        if self.path.exists() {
            fs::remove_file(&self.path)?;
        }
        Ok(())
    }

    /// Computes and stores the leading terms of all characters of a level.
    pub fn warm(&self, level: &Level) -> Result<usize, ArithmeticError> {
        let prec = numeric::working_precision(level.precision());
        let chars = characters(level.group());
        chars.par_iter().map(|c| self.leading_term(level, c, prec).map(|_| ())).collect::<Result<Vec<_>, _>>()?;
        Ok(chars.len())
    }
}

/// The exact value L(0, ψ) = −B_{1,ψ} for odd χ with rational character
/// values (quadratic or trivial), as a rational number.
pub fn bernoulli_l0_rational(level: &Level, chi: &DirichletCharacter) -> Option<Rational> {
    let psi = Primitive::new(level, chi);
    if 2 % psi.modulus != 0 && psi.modulus != 1 {
        // values are ζ_N^k; only N ≤ 2 gives rational values
        let all_real = (1..psi.f).all(|a| psi.exp(a).map_or(true, |k| (2 * k) % psi.modulus == 0));
        if !all_real {
            return None;
        }
    }
    let mut s = Rational::new();
    for a in (1..psi.f).filter(|&a| gcd(a, psi.f) == 1) {
        let k = psi.exp(a)?;
        let sign = if k == 0 { 1 } else { -1 };
        s += Rational::from(a) * sign;
    }
    Some(-s / psi.f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic_q::field::{build_instance, FieldInstance, InstanceConfig};
    use std::sync::Arc;

    fn inst(pp: Vec<(u64, u32)>, s: Vec<Place>, t: Vec<u64>, v0: u64) -> Arc<FieldInstance> {
        let c = InstanceConfig { prime_powers: pp, s, t, v0: Some(Place::Finite(v0)), ..Default::default() };
        build_instance(&c).unwrap()
    }

    fn flagship() -> Arc<FieldInstance> {
        inst(vec![(5, 1), (7, 1)], vec![Place::Infinite, Place::Finite(5), Place::Finite(7)], vec![3], 7)
    }

    #[test]
    fn character_counts_and_orders() {
        let f = flagship();
        let top = Level::top(&f);
        let chars = characters(top.group());
        let mut orders: Vec<usize> = chars.iter().map(|c| c.order()).collect();
        orders.sort();
        assert_eq!(orders, vec![1, 2, 3, 3, 6, 6]);
        for c in &chars {
            assert!(chars.contains(&c.inverse(top.group())));
            assert_eq!(r_chi(&top, c), r_chi(&top, &c.inverse(top.group())));
            // trivial on the residues fixing K
            for a in f.fixing.iter() {
                assert_eq!(c.value_exp(top.group(), top.class_of(*a)), 0);
            }
        }
        let trivial = Level::new(&f, &f.group.generators(), &f.s);
        assert_eq!(characters(trivial.group()).len(), 1);
    }

    #[test]
    fn vanishing_orders() {
        let f = flagship();
        let top = Level::top(&f);
        for c in characters(top.group()) {
            let expected = if c.is_trivial() { 2 } else { 1 };
            assert_eq!(r_chi(&top, &c), expected);
        }
        let k5 = inst(vec![(5, 1)], vec![Place::Infinite, Place::Finite(5), Place::Finite(11)], vec![3], 5);
        let l = Level::top(&k5);
        let quad = characters(l.group()).into_iter().find(|c| !c.is_trivial()).unwrap();
        // 11 ≡ 1 mod 5 splits
        assert_eq!(r_chi(&l, &quad), 2);
        assert_eq!(r_chi(&l.with_places(&[Place::Infinite, Place::Finite(5)]), &quad), 1);
    }

    #[test]
    fn quadratic_derivative() {
        let k5 = inst(vec![(5, 1)], vec![Place::Infinite, Place::Finite(5)], vec![3], 5);
        let l = Level::top(&k5);
        let quad = characters(l.group()).into_iter().find(|c| !c.is_trivial()).unwrap();
        let prec = 192;
        let psi = Primitive::new(&l, &quad);
        assert_eq!(psi.f, 5);
        // L'(0, χ) = log((1+√5)/2) by the class number formula
        let mut s = Float::new(prec);
        for a in 1..5u64 {
            let sign = if a == 1 || a == 4 { 1 } else { -1 };
            s += ln_gamma(&(Float::with_val(prec, a) / 5u32)) * sign;
        }
        let golden = ((Float::with_val(prec, 5).sqrt() + 1u32) / 2u32).ln();
        assert!(Float::with_val(prec, &s - &golden).abs() < 1e-40);
        let germ = leading_term(&l, &quad, prec).unwrap();
        // T-factor 1 − χ(3)·3 = 4
        let expect = golden * 4u32;
        assert!(Float::with_val(prec, &germ.coeff.re - &expect).abs() < 1e-40);
        assert_eq!(germ.order, 1);
    }

    #[test]
    fn odd_character_desk_value() {
        let cfg = InstanceConfig {
            prime_powers: vec![(3, 1)],
            s: vec![Place::Infinite, Place::Finite(3)],
            t: vec![5],
            ..Default::default()
        };
        let f = Arc::new(FieldInstance::from_parts(&[(3, 1)], &[], false, cfg).unwrap());
        let l = Level::top(&f);
        let odd = characters(l.group()).into_iter().find(|c| !c.is_trivial()).unwrap();
        assert_eq!(bernoulli_l0_rational(&l, &odd), Some(Rational::from((1, 3))));
        let germ = leading_term(&l, &odd, 128).unwrap();
        assert!(Float::with_val(128, &germ.coeff.re - 2u32).abs() < 1e-30);
        let theta = stickelberger(&l, 0, None).unwrap();
        let one = l.class_of(1);
        let sigma = l.class_of(2);
        assert!(Float::with_val(128, &theta.coeffs[one] - 1u32).abs() < 1e-15);
        assert!(Float::with_val(128, &theta.coeffs[sigma] + 1u32).abs() < 1e-15);
    }

    #[test]
    fn full_l_value_matches_leading_term() {
        let k5 = inst(vec![(5, 1)], vec![Place::Infinite, Place::Finite(5)], vec![3], 5);
        let l = Level::top(&k5);
        let prec = 128;
        for c in characters(l.group()) {
            let germ = leading_term(&l, &c, prec).unwrap();
            let s = Float::with_val(prec, 1e-12);
            let v = l_value(&l, &c, &s);
            let approx = v.re.clone() / Float::with_val(prec, &s).pow(germ.order as u32);
            let rel = Float::with_val(prec, &approx - &germ.coeff.re).abs() / germ.coeff.re.clone().abs();
            assert!(rel < 1e-9, "χ = {}: {} vs {}", c.index, approx.to_f64(), germ.coeff.re.to_f64());
        }
    }

    #[test]
    fn x_independent_of_v0() {
        let f = flagship();
        let top = Level::top(&f);
        let places = top.places();
        let theta = stickelberger(&top, 1, None).unwrap();
        let x5 = x_element(&top, &places, &theta, &[Place::Infinite], Place::Finite(5));
        let x7 = x_element(&top, &places, &theta, &[Place::Infinite], Place::Finite(7));
        let tol = Float::with_val(192, 1e-20);
        for (a, b) in x5.iter().zip(&x7) {
            assert!(Float::with_val(192, a - b).abs() < tol);
        }
        let mut sum = Float::new(192);
        for a in &x5 {
            sum += a;
        }
        assert!(sum.abs() < tol);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let f = flagship();
        let top = Level::top(&f);
        let cache = LValueCache::open(dir.path()).unwrap();
        let t1 = stickelberger(&top, 1, Some(&cache)).unwrap();
        let cache2 = LValueCache::open(dir.path()).unwrap();
        let t2 = stickelberger(&top, 1, Some(&cache2)).unwrap();
        assert!(*cache2.hits.lock().unwrap() > 0);
        assert_eq!(t1.coeffs, t2.coeffs);
        let keys: Vec<String> = cache2.list().into_iter().map(|r| r.0).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
