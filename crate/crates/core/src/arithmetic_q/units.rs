//! (S,T)-unit lattices of real subfields of Q(ζ_m), built from cyclotomic
//! S-units cut down by the T-congruence.

use super::field::{euler_phi, gcd, ArithmeticError, Level, LevelPlace, Place};
use super::finite_field::FiniteField;
use crate::lattice::{hnf, kernel_mod, IntMatrix};
use crate::multilinear::{combinations, EquivariantHom, GModuleLattice, ModuleRole, WedgeVector};
use crate::numeric::{self, least_squares_left, numerical_rank, rationalize, round_with_residual, tolerance};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::sync::Arc;

/// Generators of the cyclotomic S-units of a level.
///
/// `Eta` is the norm ∏_{c∈C}(1 − ζ_n^c) over a coset C = R ∪ −R of the
/// subgroup fixing K ∩ Q(ζ_n); `Ratio` is ∏_{c∈R} ξ_c / ∏_{c∈R₁} ξ_c with
/// ξ_c = ζ_n^{−c(n+1)/2}(1 − ζ_n^c), which is real and lies in K.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyUnit {
    MinusOne,
    Prime(u64),
    Eta { n: u64, set: Vec<u64> },
    Ratio { n: u64, set: Vec<u64>, base: Vec<u64> },
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The generating family of S-units for a level.
pub fn unit_family(level: &Level) -> Vec<FamilyUnit> {
    let m = level.inst.m;
    let mut fam = vec![FamilyUnit::MinusOne];
    for v in &level.s {
        if let Place::Finite(p) = v {
            fam.push(FamilyUnit::Prime(*p));
        }
    }
    let units = level.inst.units();
    for n in (2..=m).filter(|n| m % n == 0) {
        let ps = prime_factors(n);
        if ps.len() == 1 && !level.s.contains(&Place::Finite(ps[0])) {
            continue;
        }
        // image of Gal(Q(ζ_m)/Q(ζ_n)) in Gal(K_X/Q)
        let mut img: Vec<usize> = units.iter().filter(|&&a| a % n == 1).map(|&a| level.class_of(a)).collect();
        img.sort_unstable();
        img.dedup();
        let mut dn: Vec<u64> = units.iter().filter(|&&a| img.contains(&level.class_of(a))).map(|&a| a % n).collect();
        dn.sort_unstable();
        dn.dedup();
        if dn.len() as u64 == euler_phi(n) {
            continue;
        }
        let mut seen = Vec::new();
        let mut cosets: Vec<Vec<u64>> = Vec::new();
        for a in (1..n).filter(|&a| gcd(a, n) == 1) {
            if seen.contains(&a) {
                continue;
            }
            let coset: Vec<u64> = dn.iter().map(|&d| a * d % n).collect();
            seen.extend(coset.iter().cloned());
            let mut r: Vec<u64> = coset.iter().map(|&c| c.min(n - c)).collect();
            r.sort_unstable();
            r.dedup();
            cosets.push(r);
        }
        fam.push(FamilyUnit::Eta { n, set: cosets[0].clone() });
        for r in &cosets[1..] {
            fam.push(FamilyUnit::Ratio { n, set: r.clone(), base: cosets[0].clone() });
        }
    }
    fam
}

/// log|τ_b(f)| under the embedding ζ_m ↦ exp(2πi/m).
pub fn log_abs_conjugate(f: &FamilyUnit, b: u64, prec: u32) -> Float {
    let pi = numeric::pi(prec);
    let log_chord = |n: u64, c: u64| -> Float {
        let x = Float::with_val(prec, &pi * ((b * c) % n)) / n;
        (Float::with_val(prec, 2) * x.sin()).abs().ln()
    };
    match f {
        FamilyUnit::MinusOne => Float::new(prec),
        FamilyUnit::Prime(p) => Float::with_val(prec, *p).ln(),
        FamilyUnit::Eta { n, set } => {
            let mut s = Float::new(prec);
            for &c in set {
                s += log_chord(*n, c) * 2u32;
            }
            s
        }
        FamilyUnit::Ratio { n, set, base } => {
            let mut s = Float::new(prec);
            for &c in set {
                s += log_chord(*n, c);
            }
            for &c in base {
                s -= log_chord(*n, c);
            }
            s
        }
    }
}

/// ord_w(f) at any place w of the level above p (these are Galois-invariant).
pub fn family_valuation(f: &FamilyUnit, p: u64, level: &Level) -> Rational {
    match f {
        FamilyUnit::Prime(q) if *q == p => Rational::from(level.ramification_index(p) as u64),
        FamilyUnit::Eta { n, set } => {
            let ps = prime_factors(*n);
            if ps.len() == 1 && ps[0] == p {
                Rational::from((2 * set.len() as u64 * level.ramification_index(p) as u64, euler_phi(*n)))
            } else {
                Rational::new()
            }
        }
        _ => Rational::new(),
    }
}

/// λ(f) = (−log|f|_w)_{w ∈ S_K} for a family element, at the given level.
pub fn family_lambda(f: &FamilyUnit, level: &Level, places: &[LevelPlace], prec: u32) -> Vec<Float> {
    let m = level.inst.m;
    places
        .iter()
        .map(|pl| match pl.place {
            Place::Infinite => {
                let b = super::field::mod_inv(level.rep(pl.sigma), m.max(2));
                -log_abs_conjugate(f, b, prec)
            }
            Place::Finite(p) => {
                let ord = family_valuation(f, p, level);
                let deg = level.residue_degree(p) as u32;
                Float::with_val(prec, &ord) * deg * Float::with_val(prec, p).ln()
            }
        })
        .collect()
}

/// Residue-field data for the T-congruence at one t ∈ T.
struct TResidue {
    field: FiniteField,
    t: u64,
    /// dlog(1 − z^k) for k = 1..m−1, with z = x^{(q−1)/m}.
    one_minus: Vec<Integer>,
    modulus: Integer,
    step: Integer,
}

impl TResidue {
    fn new(t: u64, m: u64) -> Result<Self, ArithmeticError> {
        let mut f = 1usize;
        let mut x = t % m;
        while x != 1 % m {
            x = x * t % m;
            f += 1;
        }
        let field = FiniteField::new(t, f).map_err(|e| ArithmeticError::TKernel(e.to_string()))?;
        let q1 = field.order() - 1;
        let z = field.pow(&field.generator(), q1 / m as u128);
        let mut one_minus = vec![Integer::new(); m as usize];
        let mut zk = field.one();
        for item in one_minus.iter_mut().skip(1) {
            zk = field.mul(&zk, &z);
            let a = field.sub(&field.one(), &zk);
            *item = Integer::from(field.dlog(&a).map_err(|e| ArithmeticError::TKernel(e.to_string()))?);
        }
        Ok(TResidue { t, one_minus, modulus: Integer::from(q1), step: Integer::from(q1 / m as u128), field })
    }

    fn dlog_int(&self, a: i64) -> Result<Integer, ArithmeticError> {
        let e = self.field.from_int(a);
        self.field.dlog(&e).map(Integer::from).map_err(|e| ArithmeticError::TKernel(e.to_string()))
    }

    /// dlog of τ_b(f) modulo the fixed prime above t.
    fn reduce(&self, f: &FamilyUnit, b: u64, m: u64) -> Result<Integer, ArithmeticError> {
        let om = |k: u64| -> Integer { self.one_minus[(k % m) as usize].clone() };
        let v = match f {
            FamilyUnit::MinusOne => self.dlog_int(-1)?,
            FamilyUnit::Prime(p) => self.dlog_int(*p as i64)?,
            FamilyUnit::Eta { n, set } => {
                let mut s = Integer::new();
                for &c in set {
                    let k = b * c % n * (m / n);
                    s += om(k) + om(m - k);
                }
                s
            }
            FamilyUnit::Ratio { n, set, base } => {
                let xi = |c: u64| -> Integer {
                    let k = b * c % n;
                    let h = (n - k * ((n + 1) / 2) % n) % n * (m / n);
                    om(k * (m / n)) + Integer::from(&self.step * h)
                };
                let mut s = Integer::new();
                for &c in set {
                    s += xi(c);
                }
                for &c in base {
                    s -= xi(c);
                }
                s
            }
        };
        Ok(mod_floor(v, &self.modulus))
    }
}

/// A Z-basis of O^×_{K_X,S,T} with its Galois action and logarithmic data.
#[derive(Debug)]
pub struct SUnitLattice {
    pub level: Level,
    pub family: Vec<FamilyUnit>,
    /// Basis units as exponent vectors on the family (rows).
    pub exponents: IntMatrix,
    pub places: Vec<LevelPlace>,
    /// λ(u_i) rows.
    pub log_matrix: Vec<Vec<Float>>,
    /// ord_w(u_i) per place (zero at infinite places).
    pub valuations: Vec<Vec<Integer>>,
    pub module: Arc<GModuleLattice>,
    pub prec: u32,
    /// Largest distance to an integer met while rounding coordinates.
    pub max_residual: Float,
    family_lambda: Vec<Vec<Float>>,
}

impl SUnitLattice {
    pub fn build(level: &Level) -> Result<Self, ArithmeticError> {
        let prec = numeric::working_precision(level.precision());
        let m = level.inst.m;
        let family = unit_family(level);
        let places = level.places();
        let g = level.group().clone();
        // T-congruence: kernel of the reduction map on family exponents
        let mut cols: Vec<Vec<Integer>> = Vec::new();
        let mut moduli = Vec::new();
        for &t in &level.inst.t {
            let res = TResidue::new(t, m.max(2))?;
            for sigma in 0..g.order() {
                let b = level.rep(sigma);
                let col = family.iter().map(|f| res.reduce(f, b, m.max(2))).collect::<Result<Vec<_>, _>>()?;
                cols.push(col);
                moduli.push(res.modulus.clone());
            }
            let _ = res.t;
        }
        let nf = family.len();
        let rho = IntMatrix::from_rows(cols.len(), (0..nf).map(|j| cols.iter().map(|c| c[j].clone()).collect()).collect());
        let ker = if moduli.is_empty() { IntMatrix::identity(nf) } else { kernel_mod(&rho, &moduli) };
        // coordinates of λ on an independent subfamily
        let fam_lambda: Vec<Vec<Float>> = family.iter().map(|f| family_lambda(f, level, &places, prec)).collect();
        let tol = tolerance(prec, level.precision() / 2);
        let mut indep: Vec<usize> = Vec::new();
        for j in 0..nf {
            let mut rows: Vec<Vec<Float>> = indep.iter().map(|&i| fam_lambda[i].clone()).collect();
            rows.push(fam_lambda[j].clone());
            if numerical_rank(&rows, &tol) == rows.len() {
                indep.push(j);
            }
        }
        let expected = places.len() - 1;
        if indep.len() != expected {
            return Err(ArithmeticError::Unsupported(format!(
                "cyclotomic S-units have rank {} but |S_K| − 1 = {}",
                indep.len(),
                expected
            )));
        }
        let b_rows: Vec<Vec<Float>> = indep.iter().map(|&i| fam_lambda[i].clone()).collect();
        let bound = level.denominator_bound();
        let mut coords: Vec<Vec<Rational>> = Vec::new();
        for lam in &fam_lambda {
            let y = least_squares_left(&b_rows, lam).ok_or_else(|| ArithmeticError::Precision("singular log matrix".into()))?;
            let r = y
                .iter()
                .map(|x| rationalize(x, &bound, &tol))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ArithmeticError::Rounding("family coordinates are not rational".into()))?;
            coords.push(r);
        }
        let rr = indep.len();
        let psi_rows: Vec<Vec<Rational>> = (0..ker.rows())
            .map(|i| {
                let mut acc = vec![Rational::new(); rr];
                for (j, c) in coords.iter().enumerate() {
                    let k = ker.get(i, j);
                    if k.cmp0() != std::cmp::Ordering::Equal {
                        for (a, x) in acc.iter_mut().zip(c) {
                            *a += Rational::from(x * k);
                        }
                    }
                }
                acc
            })
            .collect();
        let den = psi_rows.iter().fold(Integer::from(1), |d, r| {
            let mut d = d;
            d.lcm_mut(&crate::linalg::common_denominator(r));
            d
        });
        let psi_int = IntMatrix::from_rows(
            rr,
            psi_rows.iter().map(|r| r.iter().map(|x| (Rational::from(x * &den)).numer().clone()).collect()).collect(),
        );
        let (h, u) = hnf(&psi_int);
        let nz: Vec<usize> = (0..h.rows()).filter(|&i| !h.row_is_zero(i)).collect();
        if nz.len() != expected {
            return Err(ArithmeticError::TKernel(format!("(S,T)-unit rank {} differs from {}", nz.len(), expected)));
        }
        let exponents = u.select_rows(&nz).mul(&ker);
        let mut lat = SUnitLattice {
            level: level.clone(),
            family,
            exponents,
            places,
            log_matrix: Vec::new(),
            valuations: Vec::new(),
            module: Arc::new(GModuleLattice::trivial(&g, 0)),
            prec,
            max_residual: Float::new(prec),
            family_lambda: fam_lambda,
        };
        lat.log_matrix = (0..lat.exponents.rows()).map(|i| lat.lambda_of_exponents(lat.exponents.row(i))).collect();
        for row in &lat.log_matrix {
            let mut s = Float::new(prec);
            for x in row {
                s += x;
            }
            if s.abs() > tol {
                return Err(ArithmeticError::Precision("λ coordinates do not sum to zero".into()));
            }
        }
        lat.valuations = (0..lat.exponents.rows())
            .map(|i| {
                lat.places
                    .iter()
                    .map(|pl| match pl.place {
                        Place::Infinite => Ok(Integer::new()),
                        Place::Finite(p) => {
                            let mut v = Rational::new();
                            for (f, e) in lat.family.iter().zip(lat.exponents.row(i)) {
                                v += family_valuation(f, p, level) * e;
                            }
                            if *v.denom() != 1 {
                                return Err(ArithmeticError::Algebra("non-integral valuation".into()));
                            }
                            Ok(v.numer().clone())
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        let gens = g
            .generators()
            .into_iter()
            .map(|sigma| {
                let rows = (0..lat.rank())
                    .map(|i| {
                        let moved = lat.act_on_lambda(sigma, &lat.log_matrix[i]);
                        lat.coords_of_lambda(&moved)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(IntMatrix::from_rows(lat.rank(), rows))
            })
            .collect::<Result<Vec<_>, ArithmeticError>>()?;
        let module = GModuleLattice::new(&g, lat.rank(), gens, ModuleRole::Units)
            .map_err(|e| ArithmeticError::Algebra(e.to_string()))?;
        lat.module = Arc::new(module);
        Ok(lat)
    }

    pub fn rank(&self) -> usize {
        self.exponents.rows()
    }

    pub fn lambda_of_exponents(&self, e: &[Integer]) -> Vec<Float> {
        let mut out = vec![Float::new(self.prec); self.places.len()];
        for (lam, k) in self.family_lambda.iter().zip(e) {
            if k.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (o, x) in out.iter_mut().zip(lam) {
                *o += Float::with_val(self.prec, x * k);
            }
        }
        out
    }

    /// λ(σu) from λ(u): the coordinate at σ·pl is the old coordinate at pl.
    pub fn act_on_lambda(&self, sigma: usize, lam: &[Float]) -> Vec<Float> {
        let g = self.level.group();
        let mut out = vec![Float::new(self.prec); lam.len()];
        for (i, pl) in self.places.iter().enumerate() {
            let j = self.level.place_index(&self.places, pl.place, g.op(sigma, pl.sigma));
            out[j] = lam[i].clone();
        }
        out
    }

    /// Integer coordinates of a unit from its λ-image.
    pub fn coords_of_lambda(&mut self, lam: &[Float]) -> Result<Vec<Integer>, ArithmeticError> {
        let (c, r) = self.real_coords(lam)?;
        let tol = tolerance(self.prec, self.level.precision() / 2);
        let mut out = Vec::new();
        for x in &c {
            let (k, d) = round_with_residual(x);
            if d > tol {
                return Err(ArithmeticError::Rounding(format!("coordinate {} is not integral", x.to_f64())));
            }
            if d > self.max_residual {
                self.max_residual = d;
            }
            out.push(k);
        }
        if r > tol {
            return Err(ArithmeticError::Rounding("vector is not in the span of the unit lattice".into()));
        }
        Ok(out)
    }

    /// Least-squares real coordinates and the residual norm.
    pub fn real_coords(&self, lam: &[Float]) -> Result<(Vec<Float>, Float), ArithmeticError> {
        let y = least_squares_left(&self.log_matrix, lam).ok_or_else(|| ArithmeticError::Precision("singular regulator".into()))?;
        let mut res = Float::new(self.prec);
        for (k, target) in lam.iter().enumerate() {
            let mut s = Float::new(self.prec);
            for (i, yi) in y.iter().enumerate() {
                s += Float::with_val(self.prec, yi * &self.log_matrix[i][k]);
            }
            let d = Float::with_val(self.prec, s - target).abs();
            if d > res {
                res = d;
            }
        }
        Ok((y, res))
    }

    /// λ of a wedge in Q ⊗ ⋀^r, as coordinates on r-subsets of places.
    pub fn lambda_wedge(&self, w: &WedgeVector) -> Vec<Float> {
        let r = w.degree();
        let np = self.places.len();
        let combos_p = combinations(np, r);
        let mut out = vec![Float::new(self.prec); combos_p.len()];
        for (ti, t) in combinations(self.rank(), r).iter().enumerate() {
            let c = &w.coords()[ti];
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let cf = Float::with_val(self.prec, c);
            for (pi, pt) in combos_p.iter().enumerate() {
                let m: Vec<Vec<Float>> = t.iter().map(|&i| pt.iter().map(|&j| self.log_matrix[i][j].clone()).collect()).collect();
                out[pi] += Float::with_val(self.prec, &cf * float_det(m));
            }
        }
        out
    }

    /// The equivariant valuation map at p: u ↦ Σ_τ ord_{τw}(u) τ.
    pub fn ord_hom(&self, p: u64) -> Result<EquivariantHom, ArithmeticError> {
        if !self.level.s.contains(&Place::Finite(p)) {
            return Err(ArithmeticError::Algebra(format!("{} is not in S", p)));
        }
        let g = self.level.group();
        let rows = (0..self.rank())
            .map(|i| {
                (0..g.order())
                    .map(|tau| self.valuations[i][self.level.place_index(&self.places, Place::Finite(p), tau)].clone())
                    .collect()
            })
            .collect();
        Ok(EquivariantHom { matrix: IntMatrix::from_rows(g.order(), rows) })
    }

    /// The basis unit as a rational number, when it only involves −1 and primes.
    pub fn rational_value(&self, i: usize) -> Option<Rational> {
        let mut v = Rational::from(1);
        for (f, e) in self.family.iter().zip(self.exponents.row(i)) {
            if e.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let e = e.to_i32()?;
            let base = match f {
                FamilyUnit::MinusOne => Rational::from(-1),
                FamilyUnit::Prime(p) => Rational::from(*p),
                _ => return None,
            };
            v *= base.pow(e);
        }
        Some(v)
    }

    /// Matrix (rows: basis of `lower` in coordinates of `self`) of the
    /// inclusion of a sub-level or smaller-S lattice.
    pub fn inclusion_from(&mut self, lower: &SUnitLattice) -> Result<IntMatrix, ArithmeticError> {
        let fam_here: Vec<Vec<Float>> =
            lower.family.iter().map(|f| family_lambda(f, &self.level, &self.places, self.prec)).collect();
        let rows = (0..lower.rank())
            .map(|i| {
                let mut lam = vec![Float::new(self.prec); self.places.len()];
                for (fl, e) in fam_here.iter().zip(lower.exponents.row(i)) {
                    for (o, x) in lam.iter_mut().zip(fl) {
                        *o += Float::with_val(self.prec, x * e);
                    }
                }
                self.coords_of_lambda(&lam)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntMatrix::from_rows(self.rank(), rows))
    }

    /// Checks the T-congruence of every basis element by recomputing its reductions.
    pub fn check_t_congruence(&self) -> Result<bool, ArithmeticError> {
        let m = self.level.inst.m.max(2);
        for &t in &self.level.inst.t {
            let res = TResidue::new(t, m)?;
            for sigma in 0..self.level.group().order() {
                let b = self.level.rep(sigma);
                for i in 0..self.rank() {
                    let mut s = Integer::new();
                    for (f, e) in self.family.iter().zip(self.exponents.row(i)) {
                        s += res.reduce(f, b, m)? * e;
                    }
                    if mod_floor(s, &res.modulus) != 0 {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn mod_floor(v: Integer, m: &Integer) -> Integer {
    let r = v % m;
    if r < 0 {
        r + m
    } else {
        r
    }
}

pub fn float_det(mut m: Vec<Vec<Float>>) -> Float {
    let n = m.len();
    let prec = m.first().and_then(|r| r.first()).map_or(64, |x| x.prec());
    let mut det = Float::with_val(prec, 1);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].clone().abs().partial_cmp(&m[j][c].clone().abs()).unwrap())
            .unwrap();
        if m[p][c].is_zero() {
            return Float::new(prec);
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for i in c + 1..n {
            let f = Float::with_val(prec, &m[i][c] / &m[c][c]);
            for j in c..n {
                let t = Float::with_val(prec, &f * &m[c][j]);
                m[i][j] -= t;
            }
        }
    }
    det
}

/// Unit lattices for several levels, built once.
#[derive(Default)]
pub struct LatticeCache {
    map: HashMap<(Vec<usize>, Vec<Place>), Arc<std::sync::Mutex<SUnitLattice>>>,
}

impl LatticeCache {
    pub fn get(&mut self, level: &Level) -> Result<Arc<std::sync::Mutex<SUnitLattice>>, ArithmeticError> {
        let key = (level.kernel.clone(), level.s.clone());
        if let Some(l) = self.map.get(&key) {
            return Ok(l.clone());
        }
        let l = Arc::new(std::sync::Mutex::new(SUnitLattice::build(level)?));
        self.map.insert(key, l.clone());
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic_q::field::{build_instance, InstanceConfig};

    fn config(pp: Vec<(u64, u32)>, s: Vec<Place>, t: Vec<u64>, v0: u64) -> InstanceConfig {
        InstanceConfig { prime_powers: pp, s, t, v0: Some(Place::Finite(v0)), ..Default::default() }
    }

    #[test]
    fn rational_lattice() {
        let c = config(vec![(5, 1), (7, 1)], vec![Place::Infinite, Place::Finite(5), Place::Finite(7)], vec![3], 7);
        let inst = build_instance(&c).unwrap();
        let q = Level::new(&inst, &inst.group.generators(), &inst.s);
        let lat = SUnitLattice::build(&q).unwrap();
        assert_eq!(lat.rank(), 2);
        // the basis spans the same group as −5 and 7, the S-units ≡ 1 mod 3
        let ords = IntMatrix::from_rows(2, (0..2).map(|i| vec![lat.valuations[i][1].clone(), lat.valuations[i][2].clone()]).collect());
        assert_eq!(ords.det().abs(), 1);
        for i in 0..2 {
            let v = lat.rational_value(i).unwrap();
            let r = Rational::from(&v - 1u32);
            assert!(r.numer().is_divisible_u(3), "{} is not 1 mod 3", v);
        }
        assert!(lat.check_t_congruence().unwrap());
    }

    #[test]
    fn quadratic_lattice() {
        let c = config(vec![(5, 1)], vec![Place::Infinite, Place::Finite(5)], vec![3], 5);
        let inst = build_instance(&c).unwrap();
        let top = Level::top(&inst);
        let lat = SUnitLattice::build(&top).unwrap();
        assert_eq!(lat.rank(), 2);
        assert!(lat.check_t_congruence().unwrap());
        // the Galois action has order 2 and fixes the rational part
        let a = lat.module.action(1);
        assert_eq!(a.mul(a), IntMatrix::identity(2));
    }

    #[test]
    fn flagship_lattice() {
        let c = config(vec![(5, 1), (7, 1)], vec![Place::Infinite, Place::Finite(5), Place::Finite(7)], vec![3], 7);
        let inst = build_instance(&c).unwrap();
        let top = Level::top(&inst);
        let mut lat = SUnitLattice::build(&top).unwrap();
        assert_eq!(lat.rank(), 7);
        assert!(lat.check_t_congruence().unwrap());
        let q = Level::new(&inst, &inst.group.generators(), &inst.s);
        let low = SUnitLattice::build(&q).unwrap();
        let e = lat.inclusion_from(&low).unwrap();
        assert_eq!(e.rows(), 2);
        // ord_7 is equivariant
        let h = lat.ord_hom(7).unwrap();
        assert!(h.is_equivariant(&lat.module));
    }
}
