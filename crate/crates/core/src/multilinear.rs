//! G-module lattices, equivariant homs, exterior powers realized inside the
//! exterior algebra over Z, Rubin lattices and the maps between them.
//!
//! Conventions: vectors are rows, σ·x = x·A_σ, and a hom f is stored as the
//! n × |G| matrix F with f(x) = x·F ∈ Z[G]. Equivariance reads A_σ F = F P_σ.
//!
//! The Rubin lattice ∩^r is described through its evaluation map
//! α(a) = (Φ(a))_Φ over the r-fold wedges Φ of a Z-basis of Hom_G(M, Z[G]).
//! A Z-basis of Hom is a Z[G]-generating set, so these wedges Z[G]-generate
//! the r-th exterior power of Hom and α is injective on Q ⊗ ⋀^r_{Z[G]} M.

use crate::group_ring::{FiniteAbelianGroup, GroupHom, GroupRingElement};
use crate::lattice::{express_in_generators, integer_kernel, hnf_basis, membership, saturate, IntMatrix, LatticeBasis};
use crate::linalg::{self, as_integers, solve_left};
use crate::group_ring::filtration_presentation;
use rug::{Integer, Rational};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultilinearError {
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("contraction of a degree-0 element")]
    DegreeZero,
    #[error("operator of length {s} applied to a wedge of degree {r}")]
    TooManyOperators { s: usize, r: usize },
    #[error("action matrices are inconsistent: {0}")]
    BadAction(String),
    #[error("element is not in the Rubin lattice")]
    NotInLattice,
    #[error("descent system has no solution")]
    Unsolvable,
    #[error("descent map is not injective")]
    NotInjective,
    #[error("place sets: V is not contained in V'")]
    NotSubset,
    #[error("value is not integral: {0}")]
    NotIntegral(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleRole {
    Units,
    Divisors,
    Generic,
}

/// A Z-lattice of rank n with a G-action given by matrices.
#[derive(Clone, Debug)]
pub struct GModuleLattice {
    rank: usize,
    group: Arc<FiniteAbelianGroup>,
    gen_actions: Vec<IntMatrix>,
    actions: Vec<IntMatrix>,
    role: ModuleRole,
}

impl GModuleLattice {
    /// `gen_actions[i]` is the matrix of the i-th standard generator of G.
    pub fn new(
        group: &Arc<FiniteAbelianGroup>,
        rank: usize,
        gen_actions: Vec<IntMatrix>,
        role: ModuleRole,
    ) -> Result<Self, MultilinearError> {
        if gen_actions.len() != group.factors().len() {
            return Err(MultilinearError::BadAction("one matrix per generator required".into()));
        }
        let id = IntMatrix::identity(rank);
        for (a, &n) in gen_actions.iter().zip(group.factors()) {
            if a.rows() != rank || a.cols() != rank {
                return Err(MultilinearError::BadAction("matrix shape".into()));
            }
            let mut p = id.clone();
            for _ in 0..n {
                p = p.mul(a);
            }
            if p != id {
                return Err(MultilinearError::BadAction("generator order".into()));
            }
        }
        for a in &gen_actions {
            for b in &gen_actions {
                if a.mul(b) != b.mul(a) {
                    return Err(MultilinearError::BadAction("matrices do not commute".into()));
                }
            }
        }
        let actions = (0..group.order())
            .map(|s| {
                let e = group.decode(s);
                let mut m = id.clone();
                for (a, k) in gen_actions.iter().zip(e) {
                    for _ in 0..k {
                        m = m.mul(a);
                    }
                }
                m
            })
            .collect();
        Ok(GModuleLattice { rank, group: group.clone(), gen_actions, actions, role })
    }

    /// Z^n with trivial action.
    pub fn trivial(group: &Arc<FiniteAbelianGroup>, rank: usize) -> Self {
        let gens = vec![IntMatrix::identity(rank); group.factors().len()];
        Self::new(group, rank, gens, ModuleRole::Generic).expect("trivial action")
    }

    /// Z[G] with basis the group elements.
    pub fn regular(group: &Arc<FiniteAbelianGroup>) -> Self {
        let gens = group.generators().into_iter().map(|g| regular_matrix(group, g)).collect();
        Self::new(group, group.order(), gens, ModuleRole::Generic).expect("regular action")
    }

    /// Direct sum of modules over the same group.
    pub fn direct_sum(&self, other: &GModuleLattice) -> Self {
        let n = self.rank + other.rank;
        let gens = self
            .gen_actions
            .iter()
            .zip(&other.gen_actions)
            .map(|(a, b)| {
                let mut m = IntMatrix::zeros(n, n);
                for i in 0..self.rank {
                    for j in 0..self.rank {
                        m.set(i, j, a.get(i, j).clone());
                    }
                }
                for i in 0..other.rank {
                    for j in 0..other.rank {
                        m.set(self.rank + i, self.rank + j, b.get(i, j).clone());
                    }
                }
                m
            })
            .collect();
        Self::new(&self.group, n, gens, self.role).expect("direct sum")
    }

    pub fn with_role(mut self, role: ModuleRole) -> Self {
        self.role = role;
        self
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    pub fn role(&self) -> ModuleRole {
        self.role
    }

    pub fn action(&self, sigma: usize) -> &IntMatrix {
        &self.actions[sigma]
    }

    pub fn gen_actions(&self) -> &[IntMatrix] {
        &self.gen_actions
    }

    pub fn act(&self, sigma: usize, x: &[Integer]) -> Vec<Integer> {
        self.actions[sigma].vec_mul(x)
    }

    pub fn act_rational(&self, sigma: usize, x: &[Rational]) -> Vec<Rational> {
        let a = &self.actions[sigma];
        let mut out = vec![Rational::new(); self.rank];
        for (k, c) in x.iter().enumerate() {
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let e = a.get(k, j);
                if e.cmp0() != std::cmp::Ordering::Equal {
                    *o += Rational::from(c * e);
                }
            }
        }
        out
    }

    /// Fixed sublattice M^H as a module over G/H, with the inclusion matrix
    /// E (rows are the basis of M^H in M-coordinates).
    pub fn fixed_submodule(&self, h_elems: &[usize]) -> (GModuleLattice, IntMatrix, GroupHom) {
        let n = self.rank;
        let mut eqs = IntMatrix::zeros(n, 0);
        for &h in h_elems {
            let mut d = self.actions[h].clone();
            for i in 0..n {
                *d.get_mut(i, i) -= 1;
            }
            eqs = eqs.hconcat(&d);
        }
        let e = if eqs.cols() == 0 { IntMatrix::identity(n) } else { integer_kernel(&eqs) };
        let q = self.group.quotient(h_elems);
        let lat = LatticeBasis::from_generators(n, &e);
        let e = lat.basis().clone();
        // action of a lift of each standard generator of G/H
        let gens = q
            .target
            .generators()
            .into_iter()
            .map(|t| {
                let lift = (0..self.group.order()).find(|&s| q.apply(s) == t).expect("surjective");
                let rows = (0..e.rows())
                    .map(|i| {
                        let img = self.act(lift, e.row(i));
                        membership(&img, &lat).unwrap().expect("fixed lattice is G-stable")
                    })
                    .collect();
                IntMatrix::from_rows(lat.rank(), rows)
            })
            .collect::<Vec<_>>();
        let module = GModuleLattice::new(&q.target, e.rows(), gens, self.role).expect("quotient action");
        (module, e, q)
    }
}

/// Matrix of multiplication by σ on Z[G]: e_τ ↦ e_{στ}.
pub fn regular_matrix(group: &FiniteAbelianGroup, sigma: usize) -> IntMatrix {
    let n = group.order();
    let mut m = IntMatrix::zeros(n, n);
    for t in 0..n {
        m.set(t, group.op(sigma, t), Integer::from(1));
    }
    m
}

/// An equivariant map M → Z[G], x ↦ x·F.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivariantHom {
    pub matrix: IntMatrix,
}

impl EquivariantHom {
    pub fn eval(&self, group: &Arc<FiniteAbelianGroup>, x: &[Integer]) -> GroupRingElement {
        GroupRingElement::from_coeffs(group, self.matrix.vec_mul(x))
    }

    /// Value on the i-th basis vector.
    pub fn value(&self, group: &Arc<FiniteAbelianGroup>, i: usize) -> GroupRingElement {
        GroupRingElement::from_coeffs(group, self.matrix.row_vec(i))
    }

    pub fn is_equivariant(&self, m: &GModuleLattice) -> bool {
        let g = m.group();
        (0..g.order()).all(|s| m.action(s).mul(&self.matrix) == self.matrix.mul(&regular_matrix(g, s)))
    }
}

/// A Z-basis of Hom_G(M, Z[G]).
///
/// F ↦ (identity coefficient of F) is an isomorphism onto Hom_Z(M, Z) with
/// inverse φ ↦ Σ_τ φ(τ⁻¹·x) τ, so the dual basis gives a basis directly.
pub fn hom_lattice(m: &GModuleLattice) -> Vec<EquivariantHom> {
    let n = m.rank();
    let g = m.group();
    let k = g.order();
    let mut flat = IntMatrix::zeros(n, n * k);
    for t in 0..k {
        let a = m.action(g.inv(t));
        for i in 0..n {
            for j in 0..n {
                flat.set(i, j * k + t, a.get(j, i).clone());
            }
        }
    }
    let basis = hnf_basis(&flat);
    (0..basis.rows())
        .map(|r| {
            let rows = (0..n).map(|i| basis.row(r)[i * k..(i + 1) * k].to_vec()).collect();
            let f = EquivariantHom { matrix: IntMatrix::from_rows(k, rows) };
            debug_assert!(f.is_equivariant(m));
            f
        })
        .collect()
}

/// Sorted r-subsets of {0..n} in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if r <= n {
        rec(0, n, r, &mut Vec::new(), &mut out);
    }
    out
}

/// Element of Q ⊗ ⋀^r M, realized inside the exterior power over Z.
///
/// Degree 0 elements are elements of Q[G], indexed by the group enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WedgeVector {
    rank: usize,
    degree: usize,
    coords: Vec<Rational>,
}

impl WedgeVector {
    pub fn zero(rank: usize, degree: usize, group_order: usize) -> Self {
        let len = if degree == 0 { group_order } else { combinations(rank, degree).len() };
        WedgeVector { rank, degree, coords: vec![Rational::new(); len] }
    }

    pub fn from_coords(rank: usize, degree: usize, coords: Vec<Rational>) -> Self {
        WedgeVector { rank, degree, coords }
    }

    /// Degree-0 element from a group ring element.
    pub fn scalar(rank: usize, a: &GroupRingElement) -> Self {
        WedgeVector { rank, degree: 0, coords: a.coeffs().iter().map(|x| Rational::from(x.clone())).collect() }
    }

    /// The basis wedge e_{t_1} ∧ … ∧ e_{t_r} for a sorted tuple.
    pub fn basis(rank: usize, tuple: &[usize]) -> Self {
        let combos = combinations(rank, tuple.len());
        let mut w = WedgeVector { rank, degree: tuple.len(), coords: vec![Rational::new(); combos.len()] };
        let i = combos.iter().position(|c| c == tuple).expect("sorted tuple");
        w.coords[i] = Rational::from(1);
        w
    }

    /// v_1 ∧ … ∧ v_r for rational vectors (coordinates are r × r minors).
    pub fn wedge_of(rank: usize, vectors: &[Vec<Rational>]) -> Self {
        let r = vectors.len();
        let combos = combinations(rank, r);
        let coords = combos
            .iter()
            .map(|t| {
                let m: Vec<Vec<Rational>> = vectors.iter().map(|v| t.iter().map(|&j| v[j].clone()).collect()).collect();
                rational_det(m)
            })
            .collect();
        WedgeVector { rank, degree: r, coords }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        WedgeVector {
            rank: self.rank,
            degree: self.degree,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| Rational::from(a + b)).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        WedgeVector {
            rank: self.rank,
            degree: self.degree,
            coords: self.coords.iter().map(|a| Rational::from(a * k)).collect(),
        }
    }

    /// Action of x ∈ Q[G] (coefficient vector): on degree 0 by multiplication,
    /// otherwise through the first wedge factor.
    pub fn group_ring_scale(&self, m: &GModuleLattice, x: &[Rational]) -> Self {
        let g = m.group();
        if self.degree == 0 {
            let mut c = vec![Rational::new(); g.order()];
            for (a, u) in self.coords.iter().enumerate() {
                if u.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                for (b, v) in x.iter().enumerate() {
                    if v.cmp0() != std::cmp::Ordering::Equal {
                        c[g.op(a, b)] += Rational::from(u * v);
                    }
                }
            }
            return WedgeVector { rank: self.rank, degree: 0, coords: c };
        }
        let combos = combinations(self.rank, self.degree);
        let index: HashMap<&Vec<usize>, usize> = combos.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut out = vec![Rational::new(); combos.len()];
        for (ti, t) in combos.iter().enumerate() {
            let c = &self.coords[ti];
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (s, xs) in x.iter().enumerate() {
                if xs.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let row = m.action(s).row(t[0]);
                let coef = Rational::from(c * xs);
                for (j, a) in row.iter().enumerate() {
                    if a.cmp0() == std::cmp::Ordering::Equal || t[1..].contains(&j) {
                        continue;
                    }
                    let mut tup: Vec<usize> = t[1..].to_vec();
                    let pos = tup.iter().filter(|&&u| u < j).count();
                    tup.insert(pos, j);
                    let sign = if pos % 2 == 0 { 1 } else { -1 };
                    out[index[&tup]] += Rational::from(&coef * a) * sign;
                }
            }
        }
        WedgeVector { rank: self.rank, degree: self.degree, coords: out }
    }

    /// Image under the Z-linear map given by `m` (rows: images of basis vectors).
    pub fn push_forward(&self, m: &IntMatrix) -> Self {
        let n = m.cols();
        if self.degree == 0 {
            return WedgeVector { rank: n, degree: 0, coords: self.coords.clone() };
        }
        let mut out = WedgeVector::zero(n, self.degree, 0);
        for (ti, t) in combinations(self.rank, self.degree).iter().enumerate() {
            let c = &self.coords[ti];
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let vs: Vec<Vec<Rational>> =
                t.iter().map(|&i| m.row(i).iter().map(|x| Rational::from(x.clone())).collect()).collect();
            out = out.add(&WedgeVector::wedge_of(n, &vs).scale(c));
        }
        out
    }

    /// σ·ω, acting on every wedge factor (the natural action on ⋀_Z).
    pub fn act(&self, m: &GModuleLattice, sigma: usize) -> Self {
        if self.degree == 0 {
            let g = m.group();
            let mut c = vec![Rational::new(); g.order()];
            for (a, u) in self.coords.iter().enumerate() {
                c[g.op(a, sigma)] = u.clone();
            }
            return WedgeVector { rank: self.rank, degree: 0, coords: c };
        }
        let combos = combinations(self.rank, self.degree);
        let a = m.action(sigma);
        let mut out = WedgeVector::zero(self.rank, self.degree, 0);
        for (ti, t) in combos.iter().enumerate() {
            let c = &self.coords[ti];
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let vs: Vec<Vec<Rational>> =
                t.iter().map(|&i| a.row(i).iter().map(|x| Rational::from(x.clone())).collect()).collect();
            out = out.add(&WedgeVector::wedge_of(self.rank, &vs).scale(c));
        }
        out
    }
}

fn rational_det(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::from(1);
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| m[i][c].cmp0() != std::cmp::Ordering::Equal) else {
            return Rational::new();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for i in c + 1..n {
            if m[i][c].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let f = Rational::from(&m[i][c] / &m[c][c]);
            for j in c..n {
                let t = Rational::from(&f * &m[c][j]);
                m[i][j] -= t;
            }
        }
    }
    det
}

/// Σ_i (−1)^{i−1} φ(m_i) · m_1 ∧ … m̂_i … ∧ m_r.
pub fn contract(phi: &EquivariantHom, omega: &WedgeVector, m: &GModuleLattice) -> Result<WedgeVector, MultilinearError> {
    let r = omega.degree;
    if r == 0 {
        return Err(MultilinearError::DegreeZero);
    }
    let g = m.group();
    let combos = combinations(omega.rank, r);
    let mut out = WedgeVector::zero(omega.rank, r - 1, g.order());
    let target_index: HashMap<Vec<usize>, usize> =
        combinations(omega.rank, r - 1).into_iter().enumerate().map(|(i, c)| (c, i)).collect();
    for (ti, t) in combos.iter().enumerate() {
        let c = &omega.coords[ti];
        if c.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        for i in 0..r {
            let val: Vec<Rational> = phi.matrix.row(t[i]).iter().map(|x| Rational::from(x * c)).collect();
            let val: Vec<Rational> = if i % 2 == 0 { val } else { val.into_iter().map(|x| -x).collect() };
            let mut rest = t.clone();
            rest.remove(i);
            if r == 1 {
                for (o, v) in out.coords.iter_mut().zip(val) {
                    *o += v;
                }
            } else {
                let mut e = WedgeVector::zero(omega.rank, r - 1, 0);
                e.coords[target_index[&rest]] = Rational::from(1);
                out = out.add(&e.group_ring_scale(m, &val));
            }
        }
    }
    Ok(out)
}

/// (φ_1 ∧ … ∧ φ_s)(ω) = φ_s ∘ … ∘ φ_1 (ω).
pub fn wedge_operator(
    phis: &[EquivariantHom],
    omega: &WedgeVector,
    m: &GModuleLattice,
) -> Result<WedgeVector, MultilinearError> {
    if phis.len() > omega.degree {
        return Err(MultilinearError::TooManyOperators { s: phis.len(), r: omega.degree });
    }
    let mut w = omega.clone();
    for phi in phis {
        w = contract(phi, &w, m)?;
    }
    Ok(w)
}

/// Parity of the permutation (V′∖V, V) ↦ V′ for sorted keys.
pub fn sgn_perm(v_prime: &[u64], v: &[u64]) -> Result<i32, MultilinearError> {
    if !v.iter().all(|x| v_prime.contains(x)) {
        return Err(MultilinearError::NotSubset);
    }
    let mut seq: Vec<u64> = v_prime.iter().filter(|x| !v.contains(x)).cloned().collect();
    seq.extend(v.iter().cloned());
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    Ok(if inv % 2 == 0 { 1 } else { -1 })
}

/// An element of ∩^r together with its α-values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RubinElement {
    pub wedge: WedgeVector,
    pub certificate: Vec<Integer>,
}

/// The Rubin lattice ∩^r M described by its α-values.
#[derive(Debug)]
pub struct RubinLattice {
    module: Arc<GModuleLattice>,
    degree: usize,
    homs: Vec<EquivariantHom>,
    subsets: Vec<Vec<usize>>,
    alpha_rows: Vec<Vec<Rational>>,
    image: LatticeBasis,
}

impl RubinLattice {
    pub fn new(module: &Arc<GModuleLattice>, degree: usize) -> Self {
        let homs = hom_lattice(module);
        let subsets = combinations(homs.len(), degree);
        let n = module.rank();
        let mut lat = RubinLattice {
            module: module.clone(),
            degree,
            homs,
            subsets,
            alpha_rows: Vec::new(),
            image: LatticeBasis::zero(0),
        };
        let basis_wedges: Vec<WedgeVector> = if degree == 0 {
            (0..module.group().order())
                .map(|s| WedgeVector::scalar(n, &GroupRingElement::basis(module.group(), s)))
                .collect()
        } else {
            combinations(n, degree).iter().map(|t| WedgeVector::basis(n, t)).collect()
        };
        lat.alpha_rows = basis_wedges.iter().map(|w| lat.alpha(w).expect("degree matches")).collect();
        let width = lat.subsets.len() * module.group().order();
        let int_rows: Vec<Vec<Integer>> =
            lat.alpha_rows.iter().map(|r| as_integers(r).expect("integral wedges have integral α")).collect();
        lat.image = saturate(width, &IntMatrix::from_rows(width, int_rows));
        lat
    }

    pub fn module(&self) -> &Arc<GModuleLattice> {
        &self.module
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn homs(&self) -> &[EquivariantHom] {
        &self.homs
    }

    /// Rank of ∩^r as a Z-lattice.
    pub fn base_rank(&self) -> usize {
        self.image.rank()
    }

    pub fn image(&self) -> &LatticeBasis {
        &self.image
    }

    /// α(ω): the concatenated values Φ(ω) ∈ Q[G] over all hom wedges Φ.
    pub fn alpha(&self, omega: &WedgeVector) -> Result<Vec<Rational>, MultilinearError> {
        if omega.degree != self.degree {
            return Err(MultilinearError::DegreeMismatch { expected: self.degree, got: omega.degree });
        }
        let mut out = Vec::new();
        for s in &self.subsets {
            let phis: Vec<EquivariantHom> = s.iter().map(|&i| self.homs[i].clone()).collect();
            out.extend(wedge_operator(&phis, omega, &self.module)?.coords);
        }
        Ok(out)
    }

    /// Returns the element with its integral certificate when ω ∈ ∩^r.
    pub fn membership(&self, omega: &WedgeVector) -> Result<Option<RubinElement>, MultilinearError> {
        let a = self.alpha(omega)?;
        Ok(as_integers(&a).map(|certificate| RubinElement { wedge: omega.clone(), certificate }))
    }

    /// Coordinates of an element in the canonical Z-basis of ∩^r.
    pub fn base_coords(&self, a: &RubinElement) -> Result<Vec<Integer>, MultilinearError> {
        membership(&a.certificate, &self.image)
            .map_err(|_| MultilinearError::NotInLattice)?
            .ok_or(MultilinearError::NotInLattice)
    }

    /// Element with the given α-values (solving α(x) = values).
    pub fn from_alpha(&self, values: &[Integer]) -> Result<RubinElement, MultilinearError> {
        let b: Vec<Rational> = values.iter().map(|x| Rational::from(x.clone())).collect();
        let x = solve_left(&self.alpha_rows, &b).ok_or(MultilinearError::Unsolvable)?;
        let wedge = WedgeVector { rank: self.module.rank(), degree: self.degree, coords: x };
        if self.degree == 0 {
            return Ok(RubinElement { wedge: WedgeVector { rank: self.module.rank(), ..wedge }, certificate: values.to_vec() });
        }
        Ok(RubinElement { wedge, certificate: values.to_vec() })
    }

    /// Basis element of ∩^r with index i.
    pub fn basis_element(&self, i: usize) -> RubinElement {
        self.from_alpha(self.image.basis().row(i)).expect("image vectors are solvable")
    }

    /// σ·a, computed on α-values: Φ(σa) = σΦ(a).
    pub fn act(&self, a: &RubinElement, sigma: usize) -> RubinElement {
        let g = self.module.group();
        let k = g.order();
        let mut cert = vec![Integer::new(); a.certificate.len()];
        for blk in 0..self.subsets.len() {
            for t in 0..k {
                cert[blk * k + g.op(sigma, t)] = a.certificate[blk * k + t].clone();
            }
        }
        RubinElement { wedge: a.wedge.act(&self.module, sigma), certificate: cert }
    }

    /// x·a for x ∈ Z[G].
    pub fn scale(&self, a: &RubinElement, x: &GroupRingElement) -> RubinElement {
        let g = self.module.group();
        let k = g.order();
        let mut cert = vec![Integer::new(); a.certificate.len()];
        for blk in 0..self.subsets.len() {
            let v = GroupRingElement::from_coeffs(g, a.certificate[blk * k..(blk + 1) * k].to_vec());
            let p = &v * x;
            cert[blk * k..(blk + 1) * k].clone_from_slice(p.coeffs());
        }
        let xr: Vec<Rational> = x.coeffs().iter().map(|c| Rational::from(c.clone())).collect();
        RubinElement { wedge: a.wedge.group_ring_scale(&self.module, &xr), certificate: cert }
    }

    pub fn add(&self, a: &RubinElement, b: &RubinElement) -> RubinElement {
        RubinElement {
            wedge: a.wedge.add(&b.wedge),
            certificate: a.certificate.iter().zip(&b.certificate).map(|(x, y)| Integer::from(x + y)).collect(),
        }
    }

    pub fn zero(&self) -> RubinElement {
        RubinElement {
            wedge: WedgeVector::zero(self.module.rank(), self.degree, self.module.group().order()),
            certificate: vec![Integer::new(); self.subsets.len() * self.module.group().order()],
        }
    }
}

/// rubin_membership as a free function (builds the lattice data).
pub fn rubin_membership(
    omega: &WedgeVector,
    m: &Arc<GModuleLattice>,
    r: usize,
) -> Result<Option<RubinElement>, MultilinearError> {
    RubinLattice::new(m, r).membership(omega)
}

/// Element of (base lattice) ⊗ Z[H]/I(H)^level, or ⊗ Q(H)^level when graded.
/// Stored with one representative leg in Z[H] per base basis vector.
#[derive(Clone, Debug)]
pub struct TensorResidueElement {
    group: Arc<FiniteAbelianGroup>,
    level: usize,
    graded: bool,
    legs: Vec<GroupRingElement>,
}

impl TensorResidueElement {
    pub fn zero(group: &Arc<FiniteAbelianGroup>, base_rank: usize, level: usize, graded: bool) -> Self {
        TensorResidueElement { group: group.clone(), level, graded, legs: vec![GroupRingElement::zero(group); base_rank] }
    }

    pub fn base_rank(&self) -> usize {
        self.legs.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn graded(&self) -> bool {
        self.graded
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    pub fn legs(&self) -> &[GroupRingElement] {
        &self.legs
    }

    /// Adds base ⊗ leg.
    pub fn add_term(&mut self, base: &[Integer], leg: &GroupRingElement) {
        assert_eq!(base.len(), self.legs.len());
        for (l, c) in self.legs.iter_mut().zip(base) {
            if c.cmp0() != std::cmp::Ordering::Equal {
                *l = &*l + &leg.scale(c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.legs.len(), other.legs.len());
        TensorResidueElement {
            group: self.group.clone(),
            level: self.level,
            graded: self.graded,
            legs: self.legs.iter().zip(&other.legs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&Integer::from(-1))
    }

    pub fn scale(&self, k: &Integer) -> Self {
        self.map_legs(|l| l.scale(k))
    }

    /// Applies a map to every leg.
    pub fn map_legs<F: Fn(&GroupRingElement) -> GroupRingElement>(&self, f: F) -> Self {
        let legs: Vec<GroupRingElement> = self.legs.iter().map(f).collect();
        let group = legs.first().map_or(self.group.clone(), |l| l.group().clone());
        TensorResidueElement { group, level: self.level, graded: self.graded, legs }
    }

    /// (1 ⊗ x)·self.
    pub fn mul_leg(&self, x: &GroupRingElement) -> Self {
        self.map_legs(|l| l * x)
    }

    /// Applies a Z-linear map on the base given by a matrix (old rank × new rank).
    pub fn map_base(&self, m: &IntMatrix) -> Self {
        assert_eq!(m.rows(), self.legs.len());
        let mut out = TensorResidueElement::zero(&self.group, m.cols(), self.level, self.graded);
        for (i, l) in self.legs.iter().enumerate() {
            out.add_term(m.row(i), l);
        }
        out
    }

    /// Reinterprets the legs at another level (e.g. Q(H)^d → Z[H]/I^{d+1}).
    pub fn at_level(&self, level: usize, graded: bool) -> Self {
        TensorResidueElement { group: self.group.clone(), level, graded, legs: self.legs.clone() }
    }

    /// Canonical matrix (base × residue coordinates).
    pub fn canonical(&self) -> Result<IntMatrix, MultilinearError> {
        let p = filtration_presentation(&self.group, self.level, self.graded);
        let rows: Result<Vec<Vec<Integer>>, MultilinearError> = self
            .legs
            .iter()
            .map(|l| {
                p.project(l.coeffs())
                    .map_err(|_| MultilinearError::NotIntegral(format!("leg not in I^{}", self.level)))
            })
            .collect();
        Ok(IntMatrix::from_rows(p.cyclic_orders().len(), rows?))
    }

    pub fn residue_orders(&self) -> Vec<Integer> {
        filtration_presentation(&self.group, self.level, self.graded).cyclic_orders().to_vec()
    }

    pub fn equals(&self, other: &Self) -> Result<bool, MultilinearError> {
        if self.legs.len() != other.legs.len() || *self.group != *other.group {
            return Ok(false);
        }
        Ok(self.canonical()? == other.canonical()?)
    }

    pub fn is_zero(&self) -> Result<bool, MultilinearError> {
        Ok(self.canonical()?.is_zero())
    }
}

/// 𝒩(a) = Σ_{σ∈H} σa ⊗ σ^{−1} ∈ ∩^r ⊗ Z[H]/I(H)^{d+1}; `h` embeds H into G.
pub fn cal_n(a: &RubinElement, lat: &RubinLattice, h: &GroupHom, d: usize) -> Result<TensorResidueElement, MultilinearError> {
    let hg = &h.source;
    let mut out = TensorResidueElement::zero(hg, lat.base_rank(), d + 1, false);
    for s in 0..hg.order() {
        let sa = lat.act(a, h.apply(s));
        let coords = lat.base_coords(&sa)?;
        out.add_term(&coords, &GroupRingElement::basis(hg, hg.inv(s)));
    }
    Ok(out)
}

/// Data for the descent map ν from the L-level lattice ∩^r_{G/H} M^H to the
/// K-level lattice ∩^r_G M.
pub struct Descent {
    pub upper: Arc<RubinLattice>,
    pub lower: Arc<RubinLattice>,
    /// Rows: basis of the lower module in upper coordinates.
    pub inclusion: IntMatrix,
    /// G → G/H.
    pub quotient: GroupHom,
    beta_rows: Vec<Vec<Rational>>,
}

impl Descent {
    pub fn new(
        upper: &Arc<RubinLattice>,
        lower: &Arc<RubinLattice>,
        inclusion: IntMatrix,
        quotient: GroupHom,
    ) -> Result<Self, MultilinearError> {
        assert_eq!(upper.degree, lower.degree);
        let mut d = Descent { upper: upper.clone(), lower: lower.clone(), inclusion, quotient, beta_rows: Vec::new() };
        let n = lower.module.rank();
        let r = lower.degree;
        let basis: Vec<WedgeVector> = if r == 0 {
            (0..lower.module.group().order())
                .map(|s| WedgeVector::scalar(n, &GroupRingElement::basis(lower.module.group(), s)))
                .collect()
        } else {
            combinations(n, r).iter().map(|t| WedgeVector::basis(n, t)).collect()
        };
        d.beta_rows = basis.iter().map(|w| d.beta(w)).collect::<Result<_, _>>()?;
        if linalg::rank(&d.beta_rows) != linalg::rank(&lower.alpha_rows) {
            return Err(MultilinearError::NotInjective);
        }
        Ok(d)
    }

    /// κ^{−1}∘φ restricted to the lower module, as a hom over G/H.
    fn descend_hom(&self, phi: &EquivariantHom) -> Result<EquivariantHom, MultilinearError> {
        let q = &self.quotient;
        let restricted = self.inclusion.mul(&phi.matrix);
        let k = q.target.order();
        let mut out = IntMatrix::zeros(restricted.rows(), k);
        for i in 0..restricted.rows() {
            let mut set = vec![false; k];
            for s in 0..q.source.order() {
                let t = q.apply(s);
                let v = restricted.get(i, s);
                if set[t] {
                    if out.get(i, t) != v {
                        return Err(MultilinearError::NotIntegral("restricted hom is not H-invariant".into()));
                    }
                } else {
                    out.set(i, t, v.clone());
                    set[t] = true;
                }
            }
        }
        Ok(EquivariantHom { matrix: out })
    }

    /// β(α_{G/H}(ω)) for a lower-level wedge ω.
    fn beta(&self, omega: &WedgeVector) -> Result<Vec<Rational>, MultilinearError> {
        let q = &self.quotient;
        let mut out = Vec::new();
        for s in &self.upper.subsets {
            let phis: Vec<EquivariantHom> =
                s.iter().map(|&i| self.descend_hom(&self.upper.homs[i])).collect::<Result<_, _>>()?;
            let v = wedge_operator(&phis, omega, &self.lower.module)?;
            // κ: Z[G/H] → Z[G], 1 ↦ N_H
            for sigma in 0..q.source.order() {
                out.push(v.coords[q.apply(sigma)].clone());
            }
        }
        Ok(out)
    }

    /// ν(a) for a ∈ ∩^r_{G/H}.
    pub fn nu(&self, a: &RubinElement) -> Result<RubinElement, MultilinearError> {
        let b = self.beta(&a.wedge)?;
        let x = solve_left(&self.upper.alpha_rows, &b).ok_or(MultilinearError::Unsolvable)?;
        let certificate = as_integers(&b).ok_or_else(|| MultilinearError::NotIntegral("β-values".into()))?;
        let wedge = WedgeVector { rank: self.upper.module.rank(), degree: self.upper.degree, coords: x };
        Ok(RubinElement { wedge, certificate })
    }

    /// Matrix of ν on canonical bases (lower base rank × upper base rank).
    pub fn matrix(&self) -> Result<IntMatrix, MultilinearError> {
        let rows = (0..self.lower.base_rank())
            .map(|i| {
                let a = self.lower.basis_element(i);
                self.upper.base_coords(&self.nu(&a)?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntMatrix::from_rows(self.upper.base_rank(), rows))
    }

    /// N^r(a): the wedge of the norms N_H m_i, written in lower coordinates.
    pub fn norm_power(&self, a: &RubinElement, h_elems: &[usize]) -> Result<RubinElement, MultilinearError> {
        let up = &self.upper.module;
        let n = up.rank();
        let r = self.upper.degree;
        let norm_coords = |i: usize| -> Vec<Rational> {
            let mut v = vec![Integer::new(); n];
            for &h in h_elems {
                for (x, y) in v.iter_mut().zip(up.action(h).row(i)) {
                    *x += y;
                }
            }
            express_in_generators(&v, &self.inclusion).expect("norms are H-invariant").into_iter().map(Rational::from).collect()
        };
        let wedge = if r == 0 {
            let q = &self.quotient;
            let mut c = vec![Rational::new(); q.target.order()];
            for (s, x) in a.wedge.coords.iter().enumerate() {
                c[q.apply(s)] += x;
            }
            WedgeVector { rank: self.lower.module.rank(), degree: 0, coords: c }
        } else {
            let mut w = WedgeVector::zero(self.lower.module.rank(), r, 0);
            for (ti, t) in combinations(n, r).iter().enumerate() {
                let c = &a.wedge.coords[ti];
                if c.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let vs: Vec<Vec<Rational>> = t.iter().map(|&i| norm_coords(i)).collect();
                w = w.add(&WedgeVector::wedge_of(self.lower.module.rank(), &vs).scale(c));
            }
            w
        };
        self.lower.membership(&wedge)?.ok_or(MultilinearError::NotInLattice)
    }
}

/// Graded regulator (⋀ φ_v)(ω) for a module with trivial group, where each φ_v
/// is given by its values φ_v(e_i) ∈ I(H) ⊂ Z[H] on the basis.
///
/// Returns an element of ∩^{r′−d} ⊗ Q(H)^d.
pub fn regulator_operator(
    phis: &[Vec<GroupRingElement>],
    omega: &RubinElement,
    source: &RubinLattice,
    target: &RubinLattice,
    h: &Arc<FiniteAbelianGroup>,
) -> Result<TensorResidueElement, MultilinearError> {
    let r_src = source.degree;
    let d = phis.len();
    if target.degree + d != r_src || omega.wedge.degree != r_src {
        return Err(MultilinearError::DegreeMismatch { expected: r_src, got: target.degree + d });
    }
    let n = source.module.rank();
    // map from sorted tuple to accumulated Z[H] coefficient
    let mut terms: HashMap<Vec<usize>, GroupRingElement> = HashMap::new();
    for (ti, t) in combinations(n, r_src).iter().enumerate() {
        let c = &omega.wedge.coords[ti];
        if c.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        if *c.denom() != 1 {
            return Err(MultilinearError::NotIntegral("regulator input".into()));
        }
        let e = terms.entry(t.clone()).or_insert_with(|| GroupRingElement::zero(h));
        *e = &*e + &GroupRingElement::one(h).scale(c.numer());
    }
    for phi in phis {
        let mut next: HashMap<Vec<usize>, GroupRingElement> = HashMap::new();
        for (t, coef) in terms {
            for i in 0..t.len() {
                let mut val = &coef * &phi[t[i]];
                if i % 2 == 1 {
                    val = val.neg();
                }
                let mut rest = t.clone();
                rest.remove(i);
                let e = next.entry(rest).or_insert_with(|| GroupRingElement::zero(h));
                *e = &*e + &val;
            }
        }
        terms = next;
    }
    let mut out = TensorResidueElement::zero(h, target.base_rank(), d, true);
    let mut keys: Vec<&Vec<usize>> = terms.keys().collect();
    keys.sort();
    for t in keys {
        let w = if target.degree == 0 {
            WedgeVector::scalar(n, &GroupRingElement::one(target.module.group()))
        } else {
            WedgeVector::basis(n, t)
        };
        let elem = target.membership(&w)?.ok_or(MultilinearError::NotInLattice)?;
        out.add_term(&target.base_coords(&elem)?, &terms[t]);
    }
    Ok(out)
}

/// Φ_{V′,V} = sgn(V′,V) ⋀_{v∈V′∖V} ord_v, applied to ω.
pub fn phi_operator(
    ord_homs: &[EquivariantHom],
    sign: i32,
    omega: &WedgeVector,
    m: &GModuleLattice,
) -> Result<WedgeVector, MultilinearError> {
    let w = wedge_operator(ord_homs, omega, m)?;
    Ok(w.scale(&Rational::from(sign)))
}
