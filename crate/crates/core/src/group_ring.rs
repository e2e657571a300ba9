//! Finite abelian groups, integral group rings and the augmentation filtration.

use crate::lattice::{
    hnf, membership, quotient_presentation, snf, FinitePresentation, IntMatrix, LatticeBasis,
};
use rug::Integer;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupRingError {
    #[error("group ring elements live over different groups")]
    GroupMismatch,
    #[error("element does not lie in I(H)^{0}")]
    NotInPower(usize),
    #[error("invalid product decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("inclusion-exclusion defect is not in I(H)^{0}")]
    DefectNotInPower(usize),
}

/// A finite abelian group ∏ Z/n_i with elements enumerated lexicographically
/// on exponent tuples (first coordinate most significant).
#[derive(Clone)]
pub struct FiniteAbelianGroup {
    factors: Vec<usize>,
    tags: Vec<Option<u64>>,
    order: usize,
    table: Vec<u32>,
}

const TABLE_LIMIT: usize = 1024;

impl PartialEq for FiniteAbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
    }
}
impl Eq for FiniteAbelianGroup {}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group{:?}", self.factors)
    }
}

impl FiniteAbelianGroup {
    /// Product of cyclic groups of the given orders; factors equal to 1 are dropped.
    pub fn new(factors: Vec<usize>) -> Self {
        let n = factors.len();
        Self::with_tags(factors, vec![None; n])
    }

    /// Like [`new`](Self::new) with a place tag per factor.
    pub fn with_tags(factors: Vec<usize>, tags: Vec<Option<u64>>) -> Self {
        assert_eq!(factors.len(), tags.len());
        assert!(factors.iter().all(|&n| n >= 1), "cyclic factor of order 0");
        let (factors, tags): (Vec<usize>, Vec<Option<u64>>) =
            factors.into_iter().zip(tags).filter(|(n, _)| *n > 1).unzip();
        let order = factors.iter().product();
        let mut g = FiniteAbelianGroup { factors, tags, order, table: Vec::new() };
        if order <= TABLE_LIMIT {
            let mut t = vec![0u32; order * order];
            for a in 0..order {
                for b in 0..order {
                    t[a * order + b] = g.op_direct(a, b) as u32;
                }
            }
            g.table = t;
        }
        g
    }

    pub fn trivial() -> Self {
        Self::new(Vec::new())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn tags(&self) -> &[Option<u64>] {
        &self.tags
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut e = vec![0; self.factors.len()];
        for i in (0..self.factors.len()).rev() {
            e[i] = idx % self.factors[i];
            idx /= self.factors[i];
        }
        e
    }

    /// Element with the given exponents (reduced modulo the factor orders).
    pub fn encode(&self, e: &[i64]) -> usize {
        assert_eq!(e.len(), self.factors.len());
        let mut idx = 0;
        for (x, &n) in e.iter().zip(&self.factors) {
            idx = idx * n + x.rem_euclid(n as i64) as usize;
        }
        idx
    }

    fn op_direct(&self, a: usize, b: usize) -> usize {
        let (ea, eb) = (self.decode(a), self.decode(b));
        let e: Vec<i64> = ea.iter().zip(&eb).map(|(x, y)| (x + y) as i64).collect();
        self.encode(&e)
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        if self.table.is_empty() {
            self.op_direct(a, b)
        } else {
            self.table[a * self.order + b] as usize
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        let e: Vec<i64> = self.decode(a).iter().map(|&x| -(x as i64)).collect();
        self.encode(&e)
    }

    pub fn pow(&self, a: usize, k: i64) -> usize {
        let e: Vec<i64> = self.decode(a).iter().map(|&x| x as i64 * k).collect();
        self.encode(&e)
    }

    /// Standard generators e_i, one per cyclic factor.
    pub fn generators(&self) -> Vec<usize> {
        (0..self.factors.len())
            .map(|i| {
                let mut e = vec![0i64; self.factors.len()];
                e[i] = 1;
                self.encode(&e)
            })
            .collect()
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut x = a;
        while x != 0 {
            x = self.op(x, a);
            k += 1;
        }
        k
    }

    /// Sorted list of the elements of the subgroup generated by `gens`.
    pub fn subgroup(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut elems = vec![0];
        let mut i = 0;
        while i < elems.len() {
            let x = elems[i];
            for &g in gens {
                let y = self.op(x, g);
                if !seen[y] {
                    seen[y] = true;
                    elems.push(y);
                }
            }
            i += 1;
        }
        elems.sort_unstable();
        elems
    }

    /// The quotient G/⟨gens⟩ in invariant-factor form, with the projection.
    pub fn quotient(&self, gens: &[usize]) -> GroupHom {
        let k = self.factors.len();
        let mut rel = IntMatrix::zeros(0, k);
        for (i, &n) in self.factors.iter().enumerate() {
            let mut r = vec![Integer::new(); k];
            r[i] = Integer::from(n);
            rel.push_row(r);
        }
        for &g in gens {
            rel.push_row(self.decode(g).into_iter().map(Integer::from).collect());
        }
        let (d, _, v) = snf(&rel);
        let mut keep = Vec::new();
        let mut orders = Vec::new();
        for i in 0..k {
            let di = d.get(i, i).to_usize().expect("finite quotient");
            if di != 1 {
                keep.push(i);
                orders.push(di);
            }
        }
        let target = Arc::new(FiniteAbelianGroup::new(orders.clone()));
        let map = (0..self.order)
            .map(|x| {
                let ex: Vec<Integer> = self.decode(x).into_iter().map(Integer::from).collect();
                let y = v.vec_mul(&ex);
                let e: Vec<i64> = keep
                    .iter()
                    .zip(&orders)
                    .map(|(&i, &o)| y[i].mod_u(o as u32) as i64)
                    .collect();
                target.encode(&e)
            })
            .collect();
        GroupHom { source: Arc::new(self.clone()), target, map }
    }
}

/// A homomorphism between enumerated groups, stored as an element table.
#[derive(Clone, Debug)]
pub struct GroupHom {
    pub source: Arc<FiniteAbelianGroup>,
    pub target: Arc<FiniteAbelianGroup>,
    pub map: Vec<usize>,
}

impl GroupHom {
    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// Induced ring map Z[source] → Z[target].
    pub fn push(&self, a: &GroupRingElement) -> GroupRingElement {
        assert_eq!(*a.group, *self.source);
        let mut c = vec![Integer::new(); self.target.order()];
        for (x, v) in a.coeffs.iter().enumerate() {
            c[self.map[x]] += v;
        }
        GroupRingElement { group: self.target.clone(), coeffs: c }
    }

    /// Checks the homomorphism property on all pairs.
    pub fn is_homomorphism(&self) -> bool {
        let s = &self.source;
        (0..s.order()).all(|a| {
            (0..s.order()).all(|b| self.map[s.op(a, b)] == self.target.op(self.map[a], self.map[b]))
        })
    }
}

/// Element of Z[G] as a coefficient vector over the enumeration of G.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupRingElement {
    group: Arc<FiniteAbelianGroup>,
    coeffs: Vec<Integer>,
}

impl fmt::Debug for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coeffs.iter().map(|x| x.to_string()).collect();
        write!(f, "{:?}({})", self.group, c.join(","))
    }
}

impl GroupRingElement {
    pub fn zero(group: &Arc<FiniteAbelianGroup>) -> Self {
        GroupRingElement { group: group.clone(), coeffs: vec![Integer::new(); group.order()] }
    }

    pub fn one(group: &Arc<FiniteAbelianGroup>) -> Self {
        Self::basis(group, 0)
    }

    pub fn basis(group: &Arc<FiniteAbelianGroup>, sigma: usize) -> Self {
        let mut z = Self::zero(group);
        z.coeffs[sigma] = Integer::from(1);
        z
    }

    pub fn from_coeffs(group: &Arc<FiniteAbelianGroup>, coeffs: Vec<Integer>) -> Self {
        assert_eq!(coeffs.len(), group.order());
        GroupRingElement { group: group.clone(), coeffs }
    }

    pub fn from_i64(group: &Arc<FiniteAbelianGroup>, coeffs: &[i64]) -> Self {
        Self::from_coeffs(group, coeffs.iter().map(|&x| Integer::from(x)).collect())
    }

    /// σ − 1.
    pub fn aug_generator(group: &Arc<FiniteAbelianGroup>, sigma: usize) -> Self {
        let mut z = Self::basis(group, sigma);
        z.coeffs[0] -= 1;
        z
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn coeff(&self, sigma: usize) -> &Integer {
        &self.coeffs[sigma]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }

    pub fn augmentation(&self) -> Integer {
        self.coeffs.iter().sum()
    }

    fn check(&self, other: &Self) -> Result<(), GroupRingError> {
        if *self.group != *other.group {
            Err(GroupRingError::GroupMismatch)
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, GroupRingError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| Integer::from(a + b)).collect();
        Ok(GroupRingElement { group: self.group.clone(), coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, GroupRingError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| Integer::from(a - b)).collect();
        Ok(GroupRingElement { group: self.group.clone(), coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, GroupRingError> {
        self.check(other)?;
        let g = &self.group;
        let mut c = vec![Integer::new(); g.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            if x.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (b, y) in other.coeffs.iter().enumerate() {
                if y.cmp0() != std::cmp::Ordering::Equal {
                    c[g.op(a, b)] += Integer::from(x * y);
                }
            }
        }
        Ok(GroupRingElement { group: g.clone(), coeffs: c })
    }

    pub fn scale(&self, k: &Integer) -> Self {
        GroupRingElement {
            group: self.group.clone(),
            coeffs: self.coeffs.iter().map(|x| Integer::from(x * k)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&Integer::from(-1))
    }

    /// Multiplication by a group element.
    pub fn shift(&self, sigma: usize) -> Self {
        let mut c = vec![Integer::new(); self.group.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            c[self.group.op(a, sigma)] = x.clone();
        }
        GroupRingElement { group: self.group.clone(), coeffs: c }
    }

    /// The involution σ ↦ σ^{-1}.
    pub fn involution(&self) -> Self {
        let mut c = vec![Integer::new(); self.group.order()];
        for (a, x) in self.coeffs.iter().enumerate() {
            c[self.group.inv(a)] = x.clone();
        }
        GroupRingElement { group: self.group.clone(), coeffs: c }
    }
}

impl std::ops::Add for &GroupRingElement {
    type Output = GroupRingElement;
    fn add(self, rhs: Self) -> GroupRingElement {
        self.try_add(rhs).expect("group mismatch")
    }
}

impl std::ops::Sub for &GroupRingElement {
    type Output = GroupRingElement;
    fn sub(self, rhs: Self) -> GroupRingElement {
        self.try_sub(rhs).expect("group mismatch")
    }
}

impl std::ops::Mul for &GroupRingElement {
    type Output = GroupRingElement;
    fn mul(self, rhs: Self) -> GroupRingElement {
        self.try_mul(rhs).expect("group mismatch")
    }
}

/// N_H = Σ_{σ∈H} σ.
pub fn norm_element(group: &Arc<FiniteAbelianGroup>) -> GroupRingElement {
    GroupRingElement::from_coeffs(group, vec![Integer::from(1); group.order()])
}

/// Σ_{σ∈S} σ for a list of elements of G (typically a subgroup).
pub fn subset_sum(group: &Arc<FiniteAbelianGroup>, elems: &[usize]) -> GroupRingElement {
    let mut z = GroupRingElement::zero(group);
    for &e in elems {
        z.coeffs[e] += 1;
    }
    z
}

/// All tuples e with 0 ≤ e_i < bounds_i, in lexicographic order.
pub fn tuples(bounds: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        let mut next = Vec::with_capacity(out.len() * b);
        for t in &out {
            for x in 0..b {
                let mut u = t.clone();
                u.push(x);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn multisets(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i, k, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, n, &mut Vec::new(), &mut out);
    out
}

/// I(H)^n as a sublattice of Z[H], generated by h·∏_j (g_{i_j} − 1) over the
/// standard generators.
pub fn aug_power(group: &Arc<FiniteAbelianGroup>, n: usize) -> LatticeBasis {
    let order = group.order();
    if n == 0 {
        return LatticeBasis::full(order);
    }
    let gens = group.generators();
    let mut rows = IntMatrix::zeros(0, order);
    for ms in multisets(gens.len(), n) {
        let mut p = GroupRingElement::one(group);
        for i in ms {
            p = &p * &GroupRingElement::aug_generator(group, gens[i]);
        }
        for h in 0..order {
            rows.push_row(p.shift(h).coeffs);
        }
    }
    LatticeBasis::from_generators(order, &rows)
}

type PresentationKey = (Vec<usize>, usize, bool);

fn presentation_cache() -> &'static Mutex<HashMap<PresentationKey, Arc<FinitePresentation>>> {
    static CACHE: OnceLock<Mutex<HashMap<PresentationKey, Arc<FinitePresentation>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Presentation of Z[H]/I(H)^n (graded = false) or Q(H)^n = I^n/I^{n+1}.
pub fn filtration_presentation(group: &Arc<FiniteAbelianGroup>, n: usize, graded: bool) -> Arc<FinitePresentation> {
    let key = (group.factors().to_vec(), n, graded);
    if let Some(p) = presentation_cache().lock().unwrap().get(&key) {
        return p.clone();
    }
    let p = if graded {
        quotient_presentation(&aug_power(group, n + 1), &aug_power(group, n))
    } else {
        quotient_presentation(&aug_power(group, n), &LatticeBasis::full(group.order()))
    }
    .expect("augmentation powers are nested");
    let p = Arc::new(p);
    presentation_cache().lock().unwrap().insert(key, p.clone());
    p
}

/// Canonical residue in Z[H]/I(H)^n or in Q(H)^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationResidue {
    pub level: usize,
    pub graded: bool,
    pub orders: Vec<Integer>,
    pub coords: Vec<Integer>,
}

impl FiltrationResidue {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }
}

/// Residue of a modulo I(H)^n.
pub fn reduce_mod(a: &GroupRingElement, n: usize) -> FiltrationResidue {
    let p = filtration_presentation(a.group(), n, false);
    let coords = p.project(a.coeffs()).expect("Z[H] contains every element");
    FiltrationResidue { level: n, graded: false, orders: p.cyclic_orders().to_vec(), coords }
}

/// Class of a ∈ I(H)^n in Q(H)^n.
pub fn graded_component(a: &GroupRingElement, n: usize) -> Result<FiltrationResidue, GroupRingError> {
    let p = filtration_presentation(a.group(), n, true);
    let coords = p.project(a.coeffs()).map_err(|_| GroupRingError::NotInPower(n))?;
    Ok(FiltrationResidue { level: n, graded: true, orders: p.cyclic_orders().to_vec(), coords })
}

/// Fast membership test for I(H)^k.
///
/// In the basis y^e = ∏(g_i − 1)^{e_i} (0 ≤ e_i < n_i) of Z[H], every
/// monomial of total degree ≥ k is a basis vector lying in I^k, so membership
/// only depends on the coordinates of degree < k. Those are tested against
/// the projection of the generators y^{a+b} (|a| = k, b_i < n_i) after
/// reducing each factor with (1 + y)^n = 1.
pub struct AugmentationMembership {
    group: Arc<FiniteAbelianGroup>,
    k: usize,
    low: Vec<Vec<usize>>,
    low_index: HashMap<Vec<usize>, usize>,
    lattice: LatticeBasis,
}

/// Powers y^m (m < bound) of y = g − 1 in Z[C_n], in the basis 1, y, …, y^{n−1}.
fn cyclic_y_powers(n: usize, bound: usize) -> Vec<Vec<Integer>> {
    // y^n = −Σ_{j=1}^{n−1} C(n, j) y^j
    let binom = |a: usize, b: usize| -> Integer { Integer::from(Integer::binomial_u(a as u32, b as u32)) };
    let mut out: Vec<Vec<Integer>> = Vec::new();
    let mut cur = vec![Integer::new(); n];
    cur[0] = Integer::from(1);
    for _ in 0..bound {
        out.push(cur.clone());
        // multiply by y
        let top = cur[n - 1].clone();
        for j in (1..n).rev() {
            cur[j] = cur[j - 1].clone();
        }
        cur[0] = Integer::new();
        if top.cmp0() != std::cmp::Ordering::Equal {
            for j in 1..n {
                cur[j] -= Integer::from(&top * &binom(n, j));
            }
        }
    }
    out
}

impl AugmentationMembership {
    pub fn new(group: &Arc<FiniteAbelianGroup>, k: usize) -> Self {
        let ns = group.factors().to_vec();
        let r = ns.len();
        let low: Vec<Vec<usize>> = tuples(&ns).into_iter().filter(|e| e.iter().sum::<usize>() < k).collect();
        let low_index: HashMap<Vec<usize>, usize> = low.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let pows: Vec<Vec<Vec<Integer>>> = ns.iter().map(|&n| cyclic_y_powers(n, n + k)).collect();
        let mut rows = IntMatrix::zeros(0, low.len());
        if !low.is_empty() && k > 0 {
            // exponents e with some e_i ≥ n_i, e_i < n_i + k, decomposable as a + b
            let bounds: Vec<usize> = ns.iter().map(|&n| n + k).collect();
            for e in tuples(&bounds) {
                let excess: usize = e.iter().zip(&ns).map(|(&x, &n)| x.saturating_sub(n - 1)).sum();
                let total: usize = e.iter().sum();
                if excess == 0 || excess > k || total < k {
                    continue;
                }
                let mut v = vec![Integer::new(); low.len()];
                for (li, le) in low.iter().enumerate() {
                    let mut c = Integer::from(1);
                    for i in 0..r {
                        c *= &pows[i][e[i]][le[i]];
                        if c.cmp0() == std::cmp::Ordering::Equal {
                            break;
                        }
                    }
                    v[li] = c;
                }
                rows.push_row(v);
            }
        }
        let lattice = LatticeBasis::from_generators(low.len(), &rows);
        AugmentationMembership { group: group.clone(), k, low, low_index, lattice }
    }

    pub fn level(&self) -> usize {
        self.k
    }

    /// Coordinates of a in the y-monomial basis, keyed by exponent tuple.
    fn y_coords(&self, a: &GroupRingElement) -> Vec<Integer> {
        let ns = self.group.factors();
        let mut v: Vec<Integer> = a.coeffs().to_vec();
        let nmax = ns.iter().copied().max().unwrap_or(1);
        let binom: Vec<Vec<Integer>> =
            (0..nmax).map(|j| (0..=j).map(|t| Integer::from(Integer::binomial_u(j as u32, t as u32))).collect()).collect();
        // apply g^j = Σ_t C(j, t) y^t along each axis
        let mut stride = 1;
        for axis in (0..ns.len()).rev() {
            let n = ns[axis];
            let block = stride * n;
            let mut out = vec![Integer::new(); v.len()];
            for base in (0..v.len()).step_by(block) {
                for off in 0..stride {
                    for j in 0..n {
                        let x = &v[base + j * stride + off];
                        if x.cmp0() == std::cmp::Ordering::Equal {
                            continue;
                        }
                        for (t, c) in binom[j].iter().enumerate() {
                            out[base + t * stride + off] += x * c;
                        }
                    }
                }
            }
            v = out;
            stride = block;
        }
        v
    }

    /// Returns the certificate (coordinates of the low-degree part in the
    /// projected lattice) when a ∈ I(H)^k.
    pub fn certify(&self, a: &GroupRingElement) -> Option<Vec<Integer>> {
        assert_eq!(**a.group(), *self.group);
        if self.k == 0 {
            return Some(Vec::new());
        }
        let y = self.y_coords(a);
        let mut low = vec![Integer::new(); self.low.len()];
        for (x, val) in y.into_iter().enumerate() {
            let e = self.group.decode(x);
            if let Some(&i) = self.low_index.get(&e) {
                low[i] = val;
            }
        }
        membership(&low, &self.lattice).ok().flatten()
    }

    pub fn contains(&self, a: &GroupRingElement) -> bool {
        self.certify(a).is_some()
    }
}

/// Internal direct product decomposition H = ∏_v J_v indexed by places.
#[derive(Clone, Debug)]
pub struct ProductDecomposition {
    group: Arc<FiniteAbelianGroup>,
    places: Vec<u64>,
    factor_elems: Vec<Vec<usize>>,
    components: Vec<Vec<usize>>,
}

impl ProductDecomposition {
    /// Validates that every element factors uniquely as ∏_v σ_v with σ_v in
    /// the subgroup generated by the listed generators for v.
    pub fn new(group: &Arc<FiniteAbelianGroup>, factors: Vec<(u64, Vec<usize>)>) -> Result<Self, GroupRingError> {
        let mut places: Vec<u64> = factors.iter().map(|f| f.0).collect();
        let mut sorted = places.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != places.len() {
            return Err(GroupRingError::InvalidDecomposition("repeated place".into()));
        }
        let mut factors = factors;
        factors.sort_by_key(|f| f.0);
        places.sort_unstable();
        let factor_elems: Vec<Vec<usize>> = factors.iter().map(|(_, g)| group.subgroup(g)).collect();
        let size: usize = factor_elems.iter().map(|f| f.len()).product();
        if size != group.order() {
            return Err(GroupRingError::InvalidDecomposition(format!(
                "product of factor orders {} differs from |H| = {}",
                size,
                group.order()
            )));
        }
        let mut components: Vec<Option<Vec<usize>>> = vec![None; group.order()];
        let mut idx = vec![0usize; factor_elems.len()];
        loop {
            let comp: Vec<usize> = idx.iter().zip(&factor_elems).map(|(&i, f)| f[i]).collect();
            let prod = comp.iter().fold(0, |acc, &x| group.op(acc, x));
            if components[prod].is_some() {
                return Err(GroupRingError::InvalidDecomposition("factorization is not unique".into()));
            }
            components[prod] = Some(comp);
            let mut i = idx.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                idx[i] += 1;
                if idx[i] < factor_elems[i].len() {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if done {
                break;
            }
        }
        let components = components.into_iter().map(|c| c.expect("bijective")).collect();
        Ok(ProductDecomposition { group: group.clone(), places, factor_elems, components })
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    pub fn places(&self) -> &[u64] {
        &self.places
    }

    pub fn factor_elements(&self, v: u64) -> Option<&[usize]> {
        self.places.iter().position(|&p| p == v).map(|i| &self.factor_elems[i][..])
    }

    /// Component σ_v of σ.
    pub fn component(&self, sigma: usize, v: u64) -> usize {
        let i = self.places.iter().position(|&p| p == v).expect("unknown place");
        self.components[sigma][i]
    }

    /// Image of σ under H → H_X ↪ H.
    pub fn project(&self, sigma: usize, x: &[u64]) -> usize {
        self.places
            .iter()
            .enumerate()
            .filter(|(_, p)| x.contains(p))
            .fold(0, |acc, (i, _)| self.group.op(acc, self.components[sigma][i]))
    }

    /// Elements of H_X = ∏_{v∈X} J_v.
    pub fn sub_product(&self, x: &[u64]) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.group.order()).filter(|&s| self.project(s, x) == s).collect();
        out.sort_unstable();
        out
    }
}

/// The ring endomorphism π_X of Z[H].
pub fn pi_x(a: &GroupRingElement, x: &[u64], d: &ProductDecomposition) -> Result<GroupRingElement, GroupRingError> {
    if **a.group() != *d.group {
        return Err(GroupRingError::GroupMismatch);
    }
    if let Some(v) = x.iter().find(|v| !d.places.contains(v)) {
        return Err(GroupRingError::InvalidDecomposition(format!("place {} is not a factor", v)));
    }
    let mut c = vec![Integer::new(); d.group.order()];
    for (s, v) in a.coeffs().iter().enumerate() {
        c[d.project(s, x)] += v;
    }
    Ok(GroupRingElement::from_coeffs(&d.group, c))
}

fn subsets(places: &[u64]) -> Vec<Vec<u64>> {
    (0..1usize << places.len())
        .map(|mask| places.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect())
        .collect()
}

/// Σ_{X⊆W} (−1)^{|W∖X|} π_X(a).
pub fn alternating_projection_sum(a: &GroupRingElement, d: &ProductDecomposition) -> GroupRingElement {
    let w = d.places.len();
    let mut acc = GroupRingElement::zero(&d.group);
    for x in subsets(&d.places) {
        let p = pi_x(a, &x, d).expect("valid subset");
        acc = if (w - x.len()) % 2 == 0 { &acc + &p } else { &acc - &p };
    }
    acc
}

/// Certificate that the inclusion-exclusion defect of σ lies in I(H)^{|W|}.
#[derive(Clone, Debug)]
pub struct DefectCertificate {
    pub level: usize,
    pub low_degree_coords: Vec<Integer>,
}

/// Computes Σ_{X⊆W}(−1)^{|W∖X|}π_X(σ), checks it equals ∏_v(σ_v − 1) and
/// certifies membership in I(H)^{|W|}.
pub fn inclusion_exclusion_defect(
    sigma: usize,
    d: &ProductDecomposition,
) -> Result<(GroupRingElement, DefectCertificate), GroupRingError> {
    let g = &d.group;
    let s = GroupRingElement::basis(g, sigma);
    let defect = alternating_projection_sum(&s, d);
    let mut prod = GroupRingElement::one(g);
    for &v in &d.places {
        prod = &prod * &GroupRingElement::aug_generator(g, d.component(sigma, v));
    }
    if prod != defect {
        return Err(GroupRingError::InvalidDecomposition("defect differs from ∏(σ_v − 1)".into()));
    }
    let level = d.places.len();
    let test = AugmentationMembership::new(g, level);
    let coords = test.certify(&defect).ok_or(GroupRingError::DefectNotInPower(level))?;
    Ok((defect, DefectCertificate { level, low_degree_coords: coords }))
}

/// Brute-force span of h·∏(σ_j − 1) over all n-multisets of elements σ_j.
pub fn aug_power_bruteforce(group: &Arc<FiniteAbelianGroup>, n: usize) -> LatticeBasis {
    let order = group.order();
    if n == 0 {
        return LatticeBasis::full(order);
    }
    let mut rows = IntMatrix::zeros(0, order);
    for ms in multisets(order, n) {
        let mut p = GroupRingElement::one(group);
        for s in ms {
            p = &p * &GroupRingElement::aug_generator(group, s);
        }
        for h in 0..order {
            rows.push_row(p.shift(h).coeffs);
        }
        // keep the generating set small
        if rows.rows() > 4 * order {
            let (hh, _) = hnf(&rows);
            let nz: Vec<usize> = (0..hh.rows()).filter(|&i| !hh.row_is_zero(i)).collect();
            rows = hh.select_rows(&nz);
        }
    }
    LatticeBasis::from_generators(order, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grp(f: &[usize]) -> Arc<FiniteAbelianGroup> {
        Arc::new(FiniteAbelianGroup::new(f.to_vec()))
    }

    #[test]
    fn ring_examples() {
        let g = grp(&[2]);
        let tau = GroupRingElement::aug_generator(&g, 1);
        assert_eq!(&tau * &tau, tau.scale(&Integer::from(-2)));
        let a = GroupRingElement::from_i64(&g, &[3, -1]);
        assert_eq!(&GroupRingElement::one(&g) * &a, a);
        let n = norm_element(&g);
        assert!((&n * &tau).is_zero());
        assert_eq!(norm_element(&grp(&[])), GroupRingElement::one(&grp(&[])));
        let v = grp(&[2, 2]);
        let nv = norm_element(&v);
        assert_eq!(&nv * &nv, nv.scale(&Integer::from(4)));
        assert!(GroupRingElement::one(&g).try_mul(&GroupRingElement::one(&v)).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let g = grp(&[2, 3]);
        assert_eq!(g.decode(1), vec![0, 1]);
        assert_eq!(g.decode(3), vec![1, 0]);
        assert_eq!(g.encode(&[1, 2]), 5);
        assert_eq!(g.op(4, 5), g.encode(&[0, 0]));
        assert_eq!(g.element_order(4), 6);
    }

    #[test]
    fn augmentation_powers() {
        let g = grp(&[2]);
        assert_eq!(aug_power(&g, 1).basis(), &IntMatrix::from_i64(&[vec![1, -1]]));
        let i2 = aug_power(&g, 2);
        assert_eq!(i2, LatticeBasis::from_generators(2, &IntMatrix::from_i64(&[vec![-2, 2]])));
        assert_eq!(aug_power(&g, 0), LatticeBasis::full(2));
    }

    #[test]
    fn residues() {
        let g = grp(&[4]);
        let s = GroupRingElement::basis(&g, 1);
        let s2 = GroupRingElement::basis(&g, 2);
        let rhs = &s.scale(&Integer::from(2)) - &GroupRingElement::one(&g);
        assert_eq!(reduce_mod(&s2, 2), reduce_mod(&rhs, 2));
        assert!(reduce_mod(&s, 0).is_zero());
        assert_eq!(reduce_mod(&s, 1), reduce_mod(&GroupRingElement::one(&g), 1));
        let z2 = grp(&[2]);
        let t = GroupRingElement::aug_generator(&z2, 1);
        let r = graded_component(&t, 1).unwrap();
        assert_eq!(r.orders, vec![Integer::from(2)]);
        assert!(!r.is_zero());
        assert!(graded_component(&t.scale(&Integer::from(2)), 1).unwrap().is_zero());
        assert!(graded_component(&GroupRingElement::one(&z2), 1).is_err());
        let v = grp(&[2, 2]);
        let st = &GroupRingElement::aug_generator(&v, 2) * &GroupRingElement::aug_generator(&v, 1);
        assert!(!graded_component(&st, 2).unwrap().is_zero());
    }

    #[test]
    fn quotient_groups() {
        let g = grp(&[2, 3]);
        let q = g.quotient(&[g.encode(&[1, 0])]);
        assert_eq!(q.target.order(), 3);
        assert!(q.is_homomorphism());
        let q = g.quotient(&[]);
        assert_eq!(q.target.factors(), &[6]);
        assert!(q.is_homomorphism());
    }

    #[test]
    fn projections() {
        let g = grp(&[2, 3]);
        let d = ProductDecomposition::new(&g, vec![(5, vec![g.encode(&[1, 0])]), (7, vec![g.encode(&[0, 1])])]).unwrap();
        let st = g.encode(&[1, 1]);
        let a = GroupRingElement::basis(&g, st);
        assert_eq!(pi_x(&a, &[5], &d).unwrap(), GroupRingElement::basis(&g, g.encode(&[1, 0])));
        assert_eq!(pi_x(&a, &[5, 7], &d).unwrap(), a);
        assert_eq!(pi_x(&a, &[], &d).unwrap(), GroupRingElement::one(&g));
        let (def, _) = inclusion_exclusion_defect(st, &d).unwrap();
        let s = GroupRingElement::aug_generator(&g, g.encode(&[1, 0]));
        let t = GroupRingElement::aug_generator(&g, g.encode(&[0, 1]));
        assert_eq!(def, &s * &t);
        assert!(inclusion_exclusion_defect(0, &d).unwrap().0.is_zero());
        assert!(ProductDecomposition::new(&g, vec![(5, vec![st]), (7, vec![g.encode(&[0, 1])])]).is_err());
        let h = grp(&[4, 3, 2]);
        let d3 = ProductDecomposition::new(
            &h,
            vec![(2, vec![h.encode(&[1, 0, 0])]), (3, vec![h.encode(&[0, 1, 0])]), (5, vec![h.encode(&[0, 0, 1])])],
        )
        .unwrap();
        for s in 0..h.order() {
            inclusion_exclusion_defect(s, &d3).unwrap();
        }
    }

    #[test]
    fn fast_membership_matches_hnf() {
        for f in [vec![2], vec![3], vec![4], vec![2, 2], vec![2, 3], vec![2, 4], vec![2, 2, 2]] {
            let g = grp(&f);
            for k in 0..=4 {
                let lat = aug_power(&g, k);
                let fast = AugmentationMembership::new(&g, k);
                for i in 0..lat.rank() {
                    let a = GroupRingElement::from_coeffs(&g, lat.basis().row_vec(i));
                    assert!(fast.contains(&a), "{:?} level {}", f, k);
                }
                if k > 0 {
                    let prev = aug_power(&g, k - 1);
                    for i in 0..prev.rank() {
                        let v = prev.basis().row_vec(i);
                        let a = GroupRingElement::from_coeffs(&g, v.clone());
                        assert_eq!(fast.contains(&a), lat.contains(&v));
                    }
                }
            }
        }
    }

    fn decomposed_group() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(2usize..=5, 1..=3)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pi_composition(f in decomposed_group(), coeffs in proptest::collection::vec(-4i64..=4, 125)) {
            let g = grp(&f);
            let places: Vec<u64> = (0..f.len() as u64).map(|i| 2 + i).collect();
            let gens = g.generators();
            let d = ProductDecomposition::new(&g, places.iter().cloned().zip(gens.into_iter().map(|x| vec![x])).collect()).unwrap();
            let a = GroupRingElement::from_i64(&g, &coeffs[..g.order()]);
            for x in subsets(&places) {
                for y in subsets(&places) {
                    let xy: Vec<u64> = x.iter().filter(|v| y.contains(v)).cloned().collect();
                    let lhs = pi_x(&pi_x(&a, &y, &d).unwrap(), &x, &d).unwrap();
                    prop_assert_eq!(lhs, pi_x(&a, &xy, &d).unwrap());
                }
            }
        }

        #[test]
        fn ring_laws(f in decomposed_group(), c in proptest::collection::vec(-4i64..=4, 375)) {
            let g = grp(&f);
            let n = g.order();
            let a = GroupRingElement::from_i64(&g, &c[..n]);
            let b = GroupRingElement::from_i64(&g, &c[125..125 + n]);
            let e = GroupRingElement::from_i64(&g, &c[250..250 + n]);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &e, &a * &(&b * &e));
        }

        #[test]
        fn filtration_is_multiplicative(f in proptest::collection::vec(2usize..=3, 1..=2), i in 0usize..=2, j in 0usize..=2) {
            let g = grp(&f);
            let li = aug_power(&g, i);
            let lj = aug_power(&g, j);
            let lij = aug_power(&g, i + j);
            prop_assert!(aug_power(&g, i).contains_lattice(&aug_power(&g, i + 1)));
            for a in 0..li.rank() {
                for b in 0..lj.rank() {
                    let x = GroupRingElement::from_coeffs(&g, li.basis().row_vec(a));
                    let y = GroupRingElement::from_coeffs(&g, lj.basis().row_vec(b));
                    prop_assert!(lij.contains((&x * &y).coeffs()));
                }
            }
        }
    }
}
