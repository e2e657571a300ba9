//! Subfields of Q(ζ_m) given by subgroups D ⊂ (Z/m)^×, their Galois groups,
//! inertia and decomposition data, and the intermediate levels K_X.

use crate::group_ring::{FiniteAbelianGroup, GroupHom, ProductDecomposition};
use rug::Integer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Real conductors with h⁺ = 1 accepted by the unit-lattice builder.
pub const SUPPORTED_CONDUCTORS: &[u64] = &[
    3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 33, 35, 37, 39, 41, 43, 45, 47, 49, 51, 53, 55, 57,
    59, 61, 63, 65, 67, 69, 71, 73, 75, 77, 79, 81, 83, 85, 87, 89, 91, 93, 95, 97, 99,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    Infinite,
    Finite(u64),
}

impl Place {
    /// Sort key for the fixed total order ∞ < 2 < 3 < 5 < ….
    pub fn key(&self) -> u64 {
        match self {
            Place::Infinite => 0,
            Place::Finite(p) => *p,
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match self {
            Place::Infinite => None,
            Place::Finite(p) => Some(*p),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Infinite => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{}", p),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithmeticError {
    #[error("admissibility failure: {0}")]
    Admissibility(String),
    #[error("hypothesis (iii) fails: {0}")]
    Hypothesis(String),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("T-kernel computation failure: {0}")]
    TKernel(String),
    #[error("{0} is not coprime to {1}")]
    NotCoprime(String, u64),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("rounding failure: {0}")]
    Rounding(String),
    #[error("algebra error: {0}")]
    Algebra(String),
}

/// Instance parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub prime_powers: Vec<(u64, u32)>,
    pub s: Vec<Place>,
    pub t: Vec<u64>,
    pub v: Vec<Place>,
    pub v0: Option<Place>,
    pub precision: u32,
    pub denominator_bound: u64,
    pub seed: u64,
    /// Extra residues mod m added to the subgroup fixing K.
    pub fix: Vec<u64>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            prime_powers: Vec::new(),
            s: vec![Place::Infinite],
            t: Vec::new(),
            v: vec![Place::Infinite],
            v0: None,
            precision: 128,
            denominator_bound: 1_000_000,
            seed: 0,
            fix: Vec::new(),
        }
    }
}

impl InstanceConfig {
    pub fn conductor(&self) -> u64 {
        self.prime_powers.iter().map(|&(p, e)| p.pow(e)).product()
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

pub fn mod_inv(a: u64, m: u64) -> u64 {
    let (mut t, mut nt) = (0i64, 1i64);
    let (mut r, mut nr) = (m as i64, (a % m) as i64);
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    assert_eq!(r, 1, "{} not invertible mod {}", a, m);
    t.rem_euclid(m as i64) as u64
}

/// x ≡ a mod n1, x ≡ b mod n2 for coprime n1, n2.
pub fn crt(a: u64, n1: u64, b: u64, n2: u64) -> u64 {
    let n = n1 * n2;
    let t = (b + n2 - a % n2) % n2 * mod_inv(n1 % n2.max(1), n2.max(1)) % n2.max(1);
    (a + n1 * t) % n
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn euler_phi(n: u64) -> u64 {
    (1..=n).filter(|&a| gcd(a, n) == 1).count() as u64
}

pub fn primitive_root(pe: u64, p: u64) -> u64 {
    let phi = euler_phi(pe);
    let fs: Vec<u64> = (2..=phi).filter(|&d| phi % d == 0 && is_prime(d)).collect();
    let _ = p;
    (2..pe).find(|&g| gcd(g, pe) == 1 && fs.iter().all(|&l| mod_pow(g, phi / l, pe) != 1)).unwrap_or(1)
}

/// Inertia, decomposition and Frobenius data of a rational prime in G.
#[derive(Clone, Debug)]
pub struct PrimeData {
    pub p: u64,
    pub exponent: u32,
    pub inertia: Vec<usize>,
    pub decomposition: Vec<usize>,
    pub frobenius: usize,
}

/// K ⊂ Q(ζ_m) fixed by D, with the places S, T, V and v₀.
#[derive(Debug)]
pub struct FieldInstance {
    pub m: u64,
    pub prime_powers: Vec<(u64, u32)>,
    pub config: InstanceConfig,
    units: Vec<u64>,
    class: Vec<usize>,
    reps: Vec<u64>,
    pub group: Arc<FiniteAbelianGroup>,
    pub fixing: Vec<u64>,
    pub real: bool,
    pub s: Vec<Place>,
    pub t: Vec<u64>,
    pub v: Vec<Place>,
    pub v0: Option<Place>,
    primes: BTreeMap<u64, PrimeData>,
}

impl FieldInstance {
    /// The subfield of Q(ζ_m) fixed by the subgroup generated by `fix`
    /// (and −1 when `real`), without any admissibility checks.
    pub fn from_parts(
        prime_powers: &[(u64, u32)],
        fix: &[u64],
        real: bool,
        config: InstanceConfig,
    ) -> Result<Self, ArithmeticError> {
        let mut pp = prime_powers.to_vec();
        pp.sort_unstable();
        if pp.iter().any(|&(p, e)| !is_prime(p) || e == 0) {
            return Err(ArithmeticError::Unsupported("prime powers must be p^e with e ≥ 1".into()));
        }
        if pp.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(ArithmeticError::Unsupported("repeated prime".into()));
        }
        if pp.iter().any(|&(p, _)| p == 2) {
            return Err(ArithmeticError::Unsupported("even conductors are not supported".into()));
        }
        let m: u64 = pp.iter().map(|&(p, e)| p.pow(e)).product();
        let units: Vec<u64> = (1..=m.max(1)).filter(|&a| gcd(a, m) == 1).map(|a| a % m.max(1)).collect();
        let mut units = units;
        units.sort_unstable();
        units.dedup();
        // (Z/m)^× ≅ ∏ (Z/p^e)^× with a primitive root per factor
        let comps: Vec<(u64, u64, u64)> = pp
            .iter()
            .map(|&(p, e)| {
                let pe = p.pow(e);
                (pe, primitive_root(pe, p), euler_phi(pe))
            })
            .collect();
        let u_group = FiniteAbelianGroup::new(comps.iter().map(|c| c.2 as usize).collect());
        let mut u_index = vec![usize::MAX; m.max(1) as usize];
        for idx in 0..u_group.order() {
            let e = u_group.decode(idx);
            let mut res = 0u64;
            let mut modulus = 1u64;
            for (k, &(pe, g, _)) in e.iter().zip(&comps) {
                let r = mod_pow(g, *k as u64, pe);
                res = crt(res, modulus, r, pe);
                modulus *= pe;
            }
            u_index[(res % m.max(1)) as usize] = idx;
        }
        let index_of = |a: u64| u_index[(a % m.max(1)) as usize];
        let mut fixing_gens: Vec<u64> = fix.iter().map(|&a| a % m.max(1)).collect();
        if real && m > 2 {
            fixing_gens.push(m - 1);
        }
        if fixing_gens.iter().any(|&a| gcd(a, m) != 1) {
            return Err(ArithmeticError::Unsupported("fixing residues must be units".into()));
        }
        let gens_idx: Vec<usize> = fixing_gens.iter().map(|&a| index_of(a)).collect();
        let q = u_group.quotient(&gens_idx);
        let group = q.target.clone();
        let mut class = vec![usize::MAX; m.max(1) as usize];
        let mut reps = vec![u64::MAX; group.order()];
        for &a in &units {
            let c = q.apply(index_of(a));
            class[a as usize] = c;
            if reps[c] == u64::MAX {
                reps[c] = a;
            }
        }
        let fixing: Vec<u64> = units.iter().cloned().filter(|&a| class[a as usize] == 0).collect();
        let mut inst = FieldInstance {
            m,
            prime_powers: pp,
            s: config.s.clone(),
            t: config.t.clone(),
            v: config.v.clone(),
            v0: config.v0,
            config,
            units,
            class,
            reps,
            group,
            fixing,
            real,
            primes: BTreeMap::new(),
        };
        inst.s.sort();
        inst.s.dedup();
        inst.v.sort();
        inst.v.dedup();
        inst.t.sort_unstable();
        inst.t.dedup();
        let mut ps: Vec<u64> = inst.prime_powers.iter().map(|x| x.0).collect();
        ps.extend(inst.s.iter().filter_map(|v| v.prime()));
        ps.extend(inst.t.iter().cloned());
        for p in ps {
            let d = inst.compute_prime(p);
            inst.primes.insert(p, d);
        }
        Ok(inst)
    }

    fn compute_prime(&self, p: u64) -> PrimeData {
        let g = &self.group;
        let m = self.m;
        match self.prime_powers.iter().find(|x| x.0 == p) {
            Some(&(_, e)) => {
                let pe = p.pow(e);
                let rest = m / pe;
                let gen = primitive_root(pe, p);
                let j_gen = crt(gen, pe, 1 % rest.max(1), rest.max(1));
                let inertia = g.subgroup(&[self.class_of(j_gen)]);
                let fr = self.class_of(crt(1 % pe, pe, p % rest.max(1), rest.max(1)));
                let mut gens = inertia.clone();
                gens.push(fr);
                PrimeData { p, exponent: e, inertia, decomposition: g.subgroup(&gens), frobenius: fr }
            }
            None => {
                let fr = self.class_of(p % m.max(1));
                PrimeData { p, exponent: 0, inertia: vec![0], decomposition: g.subgroup(&[fr]), frobenius: fr }
            }
        }
    }

    pub fn units(&self) -> &[u64] {
        &self.units
    }

    /// Class in G of a residue coprime to m.
    pub fn class_of(&self, a: u64) -> usize {
        let c = self.class[(a % self.m.max(1)) as usize];
        assert!(c != usize::MAX, "{} is not a unit mod {}", a, self.m);
        c
    }

    /// Smallest residue in the class σ.
    pub fn rep(&self, sigma: usize) -> u64 {
        self.reps[sigma]
    }

    pub fn prime(&self, p: u64) -> PrimeData {
        self.primes.get(&p).cloned().unwrap_or_else(|| self.compute_prime(p))
    }

    pub fn inertia(&self, p: u64) -> Vec<usize> {
        self.prime(p).inertia
    }

    pub fn frobenius(&self, p: u64) -> usize {
        self.prime(p).frobenius
    }

    pub fn decomposition(&self, v: Place) -> Vec<usize> {
        match v {
            Place::Infinite => self.group.subgroup(&[self.class_of(self.m - 1)]),
            Place::Finite(p) => self.prime(p).decomposition,
        }
    }

    pub fn ramified_primes(&self) -> Vec<u64> {
        self.prime_powers.iter().map(|x| x.0).filter(|&p| self.inertia(p).len() > 1).collect()
    }

    /// W = S ∖ V.
    pub fn w(&self) -> Vec<Place> {
        self.s.iter().cloned().filter(|x| !self.v.contains(x)).collect()
    }

    /// The decomposition H = ∏_{v∈W} J_v, checked to be internal and direct.
    pub fn inertia_decomposition(&self, places: &[Place]) -> Result<ProductDecomposition, ArithmeticError> {
        let mut factors = Vec::new();
        for v in places {
            match v {
                Place::Infinite => {
                    return Err(ArithmeticError::Hypothesis("an infinite place in W has trivial inertia only when K is real".into()))
                }
                Place::Finite(p) => {
                    let j = self.inertia(*p);
                    let gens = minimal_generators(&self.group, &j);
                    factors.push((*p, gens));
                }
            }
        }
        ProductDecomposition::new(&self.group, factors).map_err(|e| ArithmeticError::Hypothesis(e.to_string()))
    }
}

/// A small generating set of a subgroup given by its elements.
pub fn minimal_generators(g: &FiniteAbelianGroup, elems: &[usize]) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut span = vec![0usize];
    let mut sorted: Vec<usize> = elems.to_vec();
    sorted.sort_by_key(|&x| std::cmp::Reverse(g.element_order(x)));
    for x in sorted {
        if !span.contains(&x) {
            gens.push(x);
            span = g.subgroup(&gens);
        }
    }
    gens
}

/// Admissibility checks and hypotheses (i)–(iii).
pub fn build_instance(config: &InstanceConfig) -> Result<Arc<FieldInstance>, ArithmeticError> {
    let m = config.conductor();
    if m > 1 && !SUPPORTED_CONDUCTORS.contains(&m) {
        return Err(ArithmeticError::Unsupported(format!("conductor {} is not on the supported list", m)));
    }
    // K is the compositum of the real subfields Q(ζ_{p^e})⁺
    let mut fix = config.fix.clone();
    for &(p, e) in &config.prime_powers {
        let pe = p.pow(e);
        fix.push(crt(pe - 1, pe, 1 % (m / pe).max(1), (m / pe).max(1)));
    }
    let inst = FieldInstance::from_parts(&config.prime_powers, &fix, true, config.clone())?;
    check_admissible(&inst)?;
    // (i) V splits completely; (ii) holds with L = Q; (iii) H = G = ∏_{v∈W} J_v
    for v in &inst.v {
        if inst.decomposition(*v).len() != 1 {
            return Err(ArithmeticError::Hypothesis(format!("{} ∈ V does not split completely in K", v)));
        }
    }
    let w = inst.w();
    if w.is_empty() {
        return Err(ArithmeticError::Hypothesis("W = S ∖ V is empty".into()));
    }
    let dec = inst.inertia_decomposition(&w)?;
    if dec.sub_product(&dec.places().to_vec()).len() != inst.group.order() {
        return Err(ArithmeticError::Hypothesis("∏_{v∈W} J_v is a proper subgroup of G, so L ≠ Q".into()));
    }
    match inst.v0 {
        Some(v0) if w.contains(&v0) => {}
        Some(v0) => return Err(ArithmeticError::Admissibility(format!("v0 = {} is not in S ∖ V", v0))),
        None => return Err(ArithmeticError::Admissibility("v0 missing".into())),
    }
    Ok(Arc::new(inst))
}

/// S ⊇ S_∞ ∪ ramified, S ∩ T = ∅, and the (S,T)-units torsion-free.
pub fn check_admissible(inst: &FieldInstance) -> Result<(), ArithmeticError> {
    if !inst.s.contains(&Place::Infinite) {
        return Err(ArithmeticError::Admissibility("S must contain the infinite place".into()));
    }
    for (p, _) in &inst.prime_powers {
        if inst.inertia(*p).len() > 1 && !inst.s.contains(&Place::Finite(*p)) {
            return Err(ArithmeticError::Admissibility(format!("ramified prime {} missing from S", p)));
        }
    }
    for t in &inst.t {
        if !is_prime(*t) {
            return Err(ArithmeticError::Admissibility(format!("{} in T is not prime", t)));
        }
        if inst.s.contains(&Place::Finite(*t)) {
            return Err(ArithmeticError::Admissibility(format!("S ∩ T contains {}", t)));
        }
        if inst.m % t == 0 {
            return Err(ArithmeticError::Admissibility(format!("{} in T divides the conductor", t)));
        }
    }
    if !inst.v.iter().all(|v| inst.s.contains(v)) {
        return Err(ArithmeticError::Admissibility("V ⊄ S".into()));
    }
    if inst.real {
        // torsion is ±1, killed exactly when some t ∈ T is odd
        if !inst.t.iter().any(|&t| t != 2) {
            return Err(ArithmeticError::Admissibility(
                "torsion-free violation: −1 ≡ 1 modulo every place above T".into(),
            ));
        }
    } else {
        // roots of unity of order w_K: need some t ∈ T with t ∤ w_K … here K ⊂ Q(ζ_m) has w_K | 2m
        let w = 2 * inst.m;
        if !inst.t.iter().any(|&t| w % t != 0 && gcd(t, w) == 1) {
            return Err(ArithmeticError::Admissibility("torsion-free violation".into()));
        }
    }
    Ok(())
}

/// An intermediate field K_X = K^{H′} with its own set of places S′.
#[derive(Clone, Debug)]
pub struct Level {
    pub inst: Arc<FieldInstance>,
    /// Gal(K/K_X) as elements of G.
    pub kernel: Vec<usize>,
    /// G → Gal(K_X/Q).
    pub quotient: GroupHom,
    pub s: Vec<Place>,
}

/// A place σw of a level above v ∈ S.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelPlace {
    pub place: Place,
    pub sigma: usize,
}

impl Level {
    pub fn top(inst: &Arc<FieldInstance>) -> Self {
        Level::new(inst, &[], &inst.s)
    }

    /// The fixed field of the subgroup generated by `kernel_gens`.
    pub fn new(inst: &Arc<FieldInstance>, kernel_gens: &[usize], s: &[Place]) -> Self {
        let g = &inst.group;
        let kernel = g.subgroup(kernel_gens);
        let quotient = if kernel.len() == 1 {
            GroupHom { source: g.clone(), target: g.clone(), map: (0..g.order()).collect() }
        } else {
            g.quotient(&kernel)
        };
        let mut s = s.to_vec();
        s.sort();
        s.dedup();
        Level { inst: inst.clone(), kernel, quotient, s }
    }

    /// The same field with another set of places.
    pub fn with_places(&self, s: &[Place]) -> Self {
        let mut l = self.clone();
        l.s = s.to_vec();
        l.s.sort();
        l.s.dedup();
        l
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.quotient.target
    }

    pub fn class_of(&self, a: u64) -> usize {
        self.quotient.apply(self.inst.class_of(a))
    }

    /// Smallest residue whose class maps to τ.
    pub fn rep(&self, tau: usize) -> u64 {
        self.inst.units().iter().cloned().find(|&a| self.class_of(a) == tau).expect("surjective")
    }

    fn image(&self, elems: &[usize]) -> Vec<usize> {
        let mut v: Vec<usize> = elems.iter().map(|&x| self.quotient.apply(x)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn inertia(&self, p: u64) -> Vec<usize> {
        self.image(&self.inst.inertia(p))
    }

    pub fn decomposition(&self, v: Place) -> Vec<usize> {
        self.image(&self.inst.decomposition(v))
    }

    pub fn frobenius(&self, p: u64) -> usize {
        self.quotient.apply(self.inst.frobenius(p))
    }

    pub fn ramification_index(&self, p: u64) -> usize {
        self.inertia(p).len()
    }

    pub fn residue_degree(&self, p: u64) -> usize {
        self.decomposition(Place::Finite(p)).len() / self.inertia(p).len()
    }

    /// Residues fixing K_X.
    pub fn fixing_residues(&self) -> Vec<u64> {
        self.inst.units().iter().cloned().filter(|&a| self.class_of(a) == 0).collect()
    }

    /// Places of S_{K_X} in the fixed order: v by v, and above each v the
    /// places σw for σ running over coset representatives of G_v.
    pub fn places(&self) -> Vec<LevelPlace> {
        let g = self.group();
        let mut out = Vec::new();
        for &v in &self.s {
            let dec = self.decomposition(v);
            let mut seen = vec![false; g.order()];
            for sigma in 0..g.order() {
                if seen[sigma] {
                    continue;
                }
                for &d in &dec {
                    seen[g.op(sigma, d)] = true;
                }
                out.push(LevelPlace { place: v, sigma });
            }
        }
        out
    }

    /// Index of the place σw_v in `places()`.
    pub fn place_index(&self, places: &[LevelPlace], v: Place, sigma: usize) -> usize {
        let g = self.group();
        let dec = self.decomposition(v);
        places
            .iter()
            .position(|pl| pl.place == v && dec.iter().any(|&d| g.op(pl.sigma, d) == sigma))
            .expect("place exists")
    }

    /// Embedding of Gal(K_X/Q) onto ∏_{v∈X} J_v ⊂ G, for a level obtained by
    /// dividing out ∏_{v∉X} J_v.
    pub fn section(&self, dec: &ProductDecomposition, x: &[u64]) -> GroupHom {
        let sub = dec.sub_product(x);
        let target = self.inst.group.clone();
        let source = self.group().clone();
        let mut map = vec![usize::MAX; source.order()];
        for s in sub {
            map[self.quotient.apply(s)] = s;
        }
        assert!(map.iter().all(|&x| x != usize::MAX), "H_X does not map onto Gal(K_X/Q)");
        GroupHom { source, target, map }
    }

    pub fn denominator_bound(&self) -> Integer {
        Integer::from(self.inst.config.denominator_bound)
    }

    pub fn precision(&self) -> u32 {
        self.inst.config.precision
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn flagship_config() -> InstanceConfig {
        InstanceConfig {
            prime_powers: vec![(5, 1), (7, 1)],
            s: vec![Place::Infinite, Place::Finite(5), Place::Finite(7)],
            t: vec![3],
            v: vec![Place::Infinite],
            v0: Some(Place::Finite(7)),
            ..Default::default()
        }
    }

    #[test]
    fn flagship_galois_data() {
        let inst = build_instance(&flagship_config()).unwrap();
        assert_eq!(inst.group.order(), 6);
        assert_eq!(inst.inertia(5).len(), 2);
        assert_eq!(inst.inertia(7).len(), 3);
        assert_eq!(inst.decomposition(Place::Infinite).len(), 1);
        assert_eq!(inst.decomposition(Place::Finite(5)).len(), 6);
        // 7 ≡ 2 mod 5 generates (Z/5)^×/±1
        let fr7 = inst.frobenius(7);
        assert!(inst.inertia(5).contains(&fr7) && fr7 != 0);
        assert_eq!(inst.fixing, vec![1, 6, 29, 34]);
    }

    #[test]
    fn rejections() {
        let mut c = flagship_config();
        c.t = vec![2];
        assert!(matches!(build_instance(&c), Err(ArithmeticError::Admissibility(_))));
        let c35 = InstanceConfig {
            prime_powers: vec![(5, 1), (7, 1)],
            s: vec![Place::Infinite, Place::Finite(5), Place::Finite(7)],
            t: vec![3],
            v0: Some(Place::Finite(7)),
            fix: vec![],
            ..Default::default()
        };
        let full = FieldInstance::from_parts(&c35.prime_powers, &[], true, c35.clone()).unwrap();
        assert_eq!(full.group.order(), 12);
        assert_eq!(full.inertia(5).len() * full.inertia(7).len(), 24);
        assert!(full.inertia_decomposition(&[Place::Finite(5), Place::Finite(7)]).is_err());
        let mut c = flagship_config();
        c.s = vec![Place::Infinite, Place::Finite(7)];
        assert!(build_instance(&c).is_err());
        let mut c = flagship_config();
        c.t = vec![5];
        assert!(build_instance(&c).is_err());
    }

    #[test]
    fn levels_and_places() {
        let inst = build_instance(&flagship_config()).unwrap();
        let top = Level::top(&inst);
        let places = top.places();
        // 6 infinite places, one above 5, one above 7
        assert_eq!(places.len(), 8);
        let j7 = inst.inertia(7);
        let k5 = Level::new(&inst, &j7, &[Place::Infinite, Place::Finite(5)]);
        assert_eq!(k5.group().order(), 2);
        assert_eq!(k5.places().len(), 3);
        assert_eq!(k5.fixing_residues().len(), 12);
        let q = Level::new(&inst, &inst.group.generators(), &inst.s);
        assert_eq!(q.group().order(), 1);
        assert_eq!(q.places().len(), 3);
    }
}
