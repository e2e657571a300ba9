//! Exact integer matrices, Hermite and Smith normal forms, lattice membership
//! and presentations of finitely generated quotients.

use rug::ops::{DivRounding, RemRounding};
use rug::{Assign, Integer, Rational};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sublattice is not contained in the ambient lattice")]
    NotContained,
}

/// Dense integer matrix stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Integer>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![Integer::new(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Integer::from(1);
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Integer>>) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row);
        }
        IntMatrix { rows: r, cols, data }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            cols,
            rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Integer {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Integer {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Integer) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Integer] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Integer> {
        self.row(i).to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<Integer>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn push_row(&mut self, row: Vec<Integer>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_rows(self.cols, idx.iter().map(|&i| self.row_vec(i)).collect())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_rows(
            idx.len(),
            (0..self.rows)
                .map(|i| idx.iter().map(|&j| self.get(i, j).clone()).collect())
                .collect(),
        )
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Horizontal concatenation.
    pub fn hconcat(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.rows, other.rows);
        let rows = (0..self.rows)
            .map(|i| {
                let mut r = self.row_vec(i);
                r.extend(other.row(i).iter().cloned());
                r
            })
            .collect();
        Self::from_rows(self.cols + other.cols, rows)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.cmp0() != std::cmp::Ordering::Equal {
                        *out.get_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[Integer]) -> Vec<Integer> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Integer::new(); self.cols];
        for (k, a) in v.iter().enumerate() {
            if a.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += a * self.get(k, j);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let x = self.get_mut(i, j);
            *x = -std::mem::take(x);
        }
    }

    /// row[target] -= k * row[src]
    fn sub_row_multiple(&mut self, target: usize, src: usize, k: &Integer) {
        for j in 0..self.cols {
            let s = self.get(src, j).clone();
            *self.get_mut(target, j) -= k * s;
        }
    }

    /// Replaces rows (a, b) by (s·a + t·b, u·a + v·b).
    fn combine_rows(&mut self, a: usize, b: usize, s: &Integer, t: &Integer, u: &Integer, v: &Integer) {
        for j in 0..self.cols {
            let x = self.get(a, j).clone();
            let y = self.get(b, j).clone();
            let nx = Integer::from(s * &x) + t * &y;
            let ny = Integer::from(u * &x) + v * &y;
            self.set(a, j, nx);
            self.set(b, j, ny);
        }
    }

    fn combine_cols(&mut self, a: usize, b: usize, s: &Integer, t: &Integer, u: &Integer, v: &Integer) {
        for i in 0..self.rows {
            let x = self.get(i, a).clone();
            let y = self.get(i, b).clone();
            let nx = Integer::from(s * &x) + t * &y;
            let ny = Integer::from(u * &x) + v * &y;
            self.set(i, a, nx);
            self.set(i, b, ny);
        }
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> Integer {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Integer::from(1);
        }
        let mut a = self.clone();
        let mut sign = 1;
        let mut prev = Integer::from(1);
        for k in 0..n - 1 {
            if a.get(k, k).cmp0() == std::cmp::Ordering::Equal {
                match (k + 1..n).find(|&i| a.get(i, k).cmp0() != std::cmp::Ordering::Equal) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return Integer::new(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = Integer::from(a.get(i, j) * a.get(k, k)) - Integer::from(a.get(i, k) * a.get(k, j));
                    a.set(i, j, v / &prev);
                }
            }
            prev = a.get(k, k).clone();
        }
        let d = a.get(n - 1, n - 1).clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }
}

/// Unimodular coefficients (s, t, u, v) with s·a + t·b = gcd(a, b) and
/// u·a + v·b = 0. When a divides b the pivot row is kept unchanged.
fn elim_coeffs(a: &Integer, b: &Integer) -> (Integer, Integer, Integer, Integer) {
    if b.is_divisible(a) {
        let q = Integer::from(b / a);
        return (Integer::from(1), Integer::new(), -q, Integer::from(1));
    }
    let (g, s, t) = a.clone().gcd_cofactors(b.clone(), Integer::new());
    let u = Integer::from(-b) / &g;
    let v = Integer::from(a / &g);
    (s, t, u, v)
}

/// Row-style Hermite normal form. Returns (H, U) with U unimodular and U·M = H.
///
/// H is in upper echelon form with positive pivots, entries above each pivot
/// reduced into [0, pivot), and zero rows at the bottom.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    hnf_impl(m, true)
}

/// The nonzero rows of the HNF of `m`, without the transform.
pub fn hnf_basis(m: &IntMatrix) -> IntMatrix {
    let (h, _) = hnf_impl(m, false);
    let nz: Vec<usize> = (0..h.rows()).filter(|&i| !h.row_is_zero(i)).collect();
    h.select_rows(&nz)
}

fn hnf_impl(m: &IntMatrix, track: bool) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(if track { m.rows } else { 0 });
    let mut pr = 0;
    for col in 0..h.cols {
        if pr == h.rows {
            break;
        }
        for i in pr + 1..h.rows {
            if h.get(i, col).cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let a = h.get(pr, col).clone();
            let b = h.get(i, col).clone();
            if a.cmp0() == std::cmp::Ordering::Equal {
                h.swap_rows(pr, i);
                if track {
                    u.swap_rows(pr, i);
                }
                continue;
            }
            let (s, t, ua, va) = elim_coeffs(&a, &b);
            h.combine_rows(pr, i, &s, &t, &ua, &va);
            if track {
                u.combine_rows(pr, i, &s, &t, &ua, &va);
            }
        }
        let p = h.get(pr, col).clone();
        if p.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        if p.cmp0() == std::cmp::Ordering::Less {
            h.negate_row(pr);
            if track {
                u.negate_row(pr);
            }
        }
        let p = h.get(pr, col).clone();
        for i in 0..pr {
            let q = h.get(i, col).clone().div_floor(&p);
            if q.cmp0() != std::cmp::Ordering::Equal {
                h.sub_row_multiple(i, pr, &q);
                if track {
                    u.sub_row_multiple(i, pr, &q);
                }
            }
        }
        pr += 1;
    }
    (h, u)
}

/// Smith normal form. Returns (D, U, V) with U, V unimodular and U·M·V = D,
/// D diagonal, nonnegative, with d_1 | d_2 | … and zeros last.
pub fn snf(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let mut d = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let n = m.rows.min(m.cols);
    for t in 0..n {
        // pivot of least absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..d.rows {
            for j in t..d.cols {
                let x = d.get(i, j);
                if x.cmp0() != std::cmp::Ordering::Equal
                    && best.map_or(true, |(bi, bj)| x.cmp_abs(d.get(bi, bj)) == std::cmp::Ordering::Less)
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        d.swap_rows(t, bi);
        u.swap_rows(t, bi);
        d.swap_cols(t, bj);
        v.swap_cols(t, bj);
        loop {
            for i in t + 1..d.rows {
                if d.get(i, t).cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let a = d.get(t, t).clone();
                let b = d.get(i, t).clone();
                let (s, tt, ua, va) = elim_coeffs(&a, &b);
                d.combine_rows(t, i, &s, &tt, &ua, &va);
                u.combine_rows(t, i, &s, &tt, &ua, &va);
            }
            for j in t + 1..d.cols {
                if d.get(t, j).cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let a = d.get(t, t).clone();
                let b = d.get(t, j).clone();
                let (s, tt, ua, va) = elim_coeffs(&a, &b);
                d.combine_cols(t, j, &s, &tt, &ua, &va);
                v.combine_cols(t, j, &s, &tt, &ua, &va);
            }
            let col_clear = (t + 1..d.rows).all(|i| d.get(i, t).cmp0() == std::cmp::Ordering::Equal);
            if !col_clear {
                continue;
            }
            let p = d.get(t, t).clone();
            let bad = (t + 1..d.rows)
                .find(|&i| (t + 1..d.cols).any(|j| !d.get(i, j).is_divisible(&p)));
            match bad {
                Some(i) => {
                    // fold the offending row into the pivot row and repeat
                    let one = Integer::from(1);
                    let zero = Integer::new();
                    d.combine_rows(t, i, &one, &one, &zero, &one);
                    u.combine_rows(t, i, &one, &one, &zero, &one);
                }
                None => break,
            }
        }
        if d.get(t, t).cmp0() == std::cmp::Ordering::Less {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    (d, u, v)
}

/// A sublattice of Z^n stored by its canonical HNF basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBasis {
    ambient: usize,
    basis: IntMatrix,
}

impl LatticeBasis {
    /// The lattice spanned by the rows of `gens` (which must have `ambient` columns).
    pub fn from_generators(ambient: usize, gens: &IntMatrix) -> Self {
        assert_eq!(gens.cols(), ambient);
        LatticeBasis { ambient, basis: hnf_basis(gens) }
    }

    pub fn full(ambient: usize) -> Self {
        LatticeBasis { ambient, basis: IntMatrix::identity(ambient) }
    }

    pub fn zero(ambient: usize) -> Self {
        LatticeBasis { ambient, basis: IntMatrix::zeros(0, ambient) }
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn contains(&self, v: &[Integer]) -> bool {
        matches!(membership(v, self), Ok(Some(_)))
    }

    pub fn contains_lattice(&self, other: &LatticeBasis) -> bool {
        (0..other.rank()).all(|i| self.contains(other.basis.row(i)))
    }

    /// Sum of two lattices.
    pub fn join(&self, other: &LatticeBasis) -> Self {
        Self::from_generators(self.ambient, &self.basis.stack(&other.basis))
    }

    /// Index-independent determinant of the Gram data: the product of pivots
    /// (equal to the covolume when the lattice has full rank).
    pub fn pivot_product(&self) -> Integer {
        let mut p = Integer::from(1);
        for i in 0..self.rank() {
            let j = (0..self.ambient).find(|&j| self.basis.get(i, j).cmp0() != std::cmp::Ordering::Equal).unwrap();
            p *= self.basis.get(i, j);
        }
        p
    }
}

/// Integer coordinates of `v` in the basis of `l`, or `None` when v ∉ L.
pub fn membership(v: &[Integer], l: &LatticeBasis) -> Result<Option<Vec<Integer>>, LatticeError> {
    if v.len() != l.ambient {
        return Err(LatticeError::DimensionMismatch { expected: l.ambient, got: v.len() });
    }
    let mut rem: Vec<Integer> = v.to_vec();
    let mut coords = Vec::with_capacity(l.rank());
    for i in 0..l.rank() {
        let row = l.basis.row(i);
        let p = (0..l.ambient).find(|&j| row[j].cmp0() != std::cmp::Ordering::Equal).unwrap();
        if rem[..p].iter().any(|x| x.cmp0() != std::cmp::Ordering::Equal) {
            return Ok(None);
        }
        if !rem[p].is_divisible(&row[p]) {
            return Ok(None);
        }
        let c = Integer::from(&rem[p] / &row[p]);
        if c.cmp0() != std::cmp::Ordering::Equal {
            for j in p..l.ambient {
                rem[j] -= Integer::from(&c * &row[j]);
            }
        }
        coords.push(c);
    }
    if rem.iter().any(|x| x.cmp0() != std::cmp::Ordering::Equal) {
        return Ok(None);
    }
    Ok(Some(coords))
}

/// Writes `v` as an integer combination of the rows of `gens` (not necessarily
/// independent), or returns `None` if v is not in their span.
pub fn express_in_generators(v: &[Integer], gens: &IntMatrix) -> Option<Vec<Integer>> {
    let (h, u) = hnf(gens);
    let nz: Vec<usize> = (0..h.rows()).filter(|&i| !h.row_is_zero(i)).collect();
    let lat = LatticeBasis { ambient: gens.cols(), basis: h.select_rows(&nz) };
    let c = membership(v, &lat).ok()??;
    let mut out = vec![Integer::new(); gens.rows()];
    for (k, &i) in nz.iter().enumerate() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += Integer::from(&c[k] * u.get(i, j));
        }
    }
    Some(out)
}

/// Basis (rows, in HNF) of the left kernel {x ∈ Z^rows : x·A = 0}.
///
/// The rational kernel comes from an RREF with one vector per free variable.
/// Those vectors restrict to the identity on the free coordinates, so when
/// they are integral they already span the saturated kernel; otherwise the
/// integral combinations are cut out by congruences on the pivot coordinates.
pub fn integer_kernel(a: &IntMatrix) -> IntMatrix {
    let n = a.rows();
    let mut sys = crate::linalg::to_rational_rows(&a.transpose());
    let pivots = crate::linalg::rref(&mut sys);
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let vecs: Vec<Vec<Rational>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![Rational::new(); n];
            v[f] = Rational::from(1);
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -sys[r][f].clone();
            }
            v
        })
        .collect();
    let all: Vec<Rational> = vecs.iter().flatten().cloned().collect();
    let den = crate::linalg::common_denominator(&all);
    let scaled: Vec<Vec<Integer>> = vecs
        .iter()
        .map(|v| v.iter().map(|x| Rational::from(x * &den).numer().clone()).collect())
        .collect();
    let scaled = IntMatrix::from_rows(n, scaled);
    if den == 1 {
        return hnf_basis(&scaled);
    }
    // c ∈ Z^free with c·scaled ≡ 0 mod den on the pivot columns
    let cong = scaled.select_cols(&pivots);
    let c = congruence_lattice(&cong, &vec![den.clone(); pivots.len()]);
    hnf_basis(&divide_exact(&c.mul(&scaled), &den))
}

fn divide_exact(m: &IntMatrix, d: &Integer) -> IntMatrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.set(i, j, Integer::from(m.get(i, j).div_exact_ref(d)));
        }
    }
    out
}

/// Basis (in HNF) of {c ∈ Z^k : c·B ≡ 0 mod moduli_j in column j}, a zero
/// modulus meaning equality,
/// imposing one column at a time so every intermediate basis stays small.
fn congruence_lattice(b: &IntMatrix, moduli: &[Integer]) -> IntMatrix {
    let k = b.rows();
    let mut c = IntMatrix::identity(k);
    for (j, m) in moduli.iter().enumerate() {
        let r = c.rows();
        let mut col = IntMatrix::zeros(r + 1, 1);
        let mut all_zero = true;
        for i in 0..r {
            let mut v = Integer::new();
            for l in 0..k {
                v += Integer::from(c.get(i, l) * b.get(l, j));
            }
            if m.cmp0() != std::cmp::Ordering::Equal {
                v = v.rem_euc(m);
            }
            all_zero &= v.cmp0() == std::cmp::Ordering::Equal;
            col.set(i, 0, v);
        }
        if all_zero {
            continue;
        }
        col.set(r, 0, m.clone());
        let y = hnf_kernel(&col).select_cols(&(0..r).collect::<Vec<_>>());
        c = hnf_basis(&y.mul(&c));
    }
    c
}

/// Left kernel read off the zero rows of the HNF transform.
fn hnf_kernel(a: &IntMatrix) -> IntMatrix {
    let (h, u) = hnf(a);
    let zr: Vec<usize> = (0..h.rows()).filter(|&i| h.row_is_zero(i)).collect();
    hnf_basis(&u.select_rows(&zr))
}

/// Basis of {x ∈ Z^rows : x·A ≡ 0 mod moduli_j in column j}.
pub fn kernel_mod(a: &IntMatrix, moduli: &[Integer]) -> IntMatrix {
    assert_eq!(moduli.len(), a.cols());
    congruence_lattice(a, moduli)
}

/// Saturation Q·L ∩ Z^n of the lattice spanned by the rows of `gens`.
///
/// The RREF rows are the identity on the pivot columns, so integral
/// combinations have integral coefficients cut out by congruences on the
/// remaining columns.
pub fn saturate(ambient: usize, gens: &IntMatrix) -> LatticeBasis {
    let mut rows = crate::linalg::to_rational_rows(gens);
    let pivots = crate::linalg::rref(&mut rows);
    rows.truncate(pivots.len());
    let all: Vec<Rational> = rows.iter().flatten().cloned().collect();
    let den = crate::linalg::common_denominator(&all);
    let scaled: Vec<Vec<Integer>> =
        rows.iter().map(|v| v.iter().map(|x| Rational::from(x * &den).numer().clone()).collect()).collect();
    let scaled = IntMatrix::from_rows(ambient, scaled);
    if den == 1 {
        return LatticeBasis { ambient, basis: hnf_basis(&scaled) };
    }
    let rest: Vec<usize> = (0..ambient).filter(|j| !pivots.contains(j)).collect();
    let c = congruence_lattice(&scaled.select_cols(&rest), &vec![den.clone(); rest.len()]);
    LatticeBasis { ambient, basis: hnf_basis(&divide_exact(&c.mul(&scaled), &den)) }
}

/// Canonical presentation of M/L as ⊕ Z/d_i with d_1 | d_2 | … (free factors
/// recorded as 0, listed last).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePresentation {
    lattice: LatticeBasis,
    cyclic_orders: Vec<Integer>,
    /// Maps coordinates with respect to the basis of M to canonical coordinates.
    coord_map: IntMatrix,
}

impl FinitePresentation {
    pub fn cyclic_orders(&self) -> &[Integer] {
        &self.cyclic_orders
    }

    pub fn coord_map(&self) -> &IntMatrix {
        &self.coord_map
    }

    pub fn ambient_lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    /// Order of the quotient, or `None` when it is infinite.
    pub fn order(&self) -> Option<Integer> {
        let mut o = Integer::from(1);
        for d in &self.cyclic_orders {
            if d.cmp0() == std::cmp::Ordering::Equal {
                return None;
            }
            o *= d;
        }
        Some(o)
    }

    /// Canonical coordinates of the class of v ∈ M.
    pub fn project(&self, v: &[Integer]) -> Result<Vec<Integer>, LatticeError> {
        let c = membership(v, &self.lattice)?.ok_or(LatticeError::NotContained)?;
        let mut out = self.coord_map.vec_mul(&c);
        for (x, d) in out.iter_mut().zip(&self.cyclic_orders) {
            if d.cmp0() != std::cmp::Ordering::Equal {
                *x = std::mem::take(x).rem_euc(d);
            }
        }
        Ok(out)
    }
}

/// Presentation of M/L for L ⊆ M.
pub fn quotient_presentation(l: &LatticeBasis, m: &LatticeBasis) -> Result<FinitePresentation, LatticeError> {
    if l.ambient != m.ambient {
        return Err(LatticeError::DimensionMismatch { expected: m.ambient, got: l.ambient });
    }
    let mut rel = IntMatrix::zeros(0, m.rank());
    for i in 0..l.rank() {
        let c = membership(l.basis.row(i), m)?.ok_or(LatticeError::NotContained)?;
        rel.push_row(c);
    }
    let (d, _, v) = snf(&rel);
    let mut orders = Vec::new();
    let mut keep = Vec::new();
    for i in 0..m.rank() {
        let di = if i < d.rows() { d.get(i, i).clone() } else { Integer::new() };
        if di != 1 {
            orders.push(di);
            keep.push(i);
        }
    }
    Ok(FinitePresentation { lattice: m.clone(), cyclic_orders: orders, coord_map: v.select_cols(&keep) })
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(u: &IntMatrix) -> IntMatrix {
    let n = u.rows();
    let (h, w) = hnf(u);
    assert_eq!(h, IntMatrix::identity(n), "matrix is not unimodular");
    w
}

pub fn int(x: i64) -> Integer {
    let mut i = Integer::new();
    i.assign(x);
    i
}

pub fn ints(xs: &[i64]) -> Vec<Integer> {
    xs.iter().map(|&x| Integer::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_i64(rows)
    }

    #[test]
    fn hnf_examples() {
        let (h, u) = hnf(&IntMatrix::identity(2));
        assert_eq!(h, IntMatrix::identity(2));
        assert_eq!(u, IntMatrix::identity(2));
        let a = m(&[vec![1, 2], vec![3, 4]]);
        let (h, u) = hnf(&a);
        assert_eq!(h, m(&[vec![1, 0], vec![0, 2]]));
        assert_eq!(u.mul(&a), h);
        let (h, _) = hnf(&IntMatrix::zeros(2, 2));
        assert!(h.is_zero());
    }

    #[test]
    fn snf_examples() {
        let (d, u, v) = snf(&m(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(d, m(&[vec![1, 0], vec![0, 6]]));
        assert_eq!(u.mul(&m(&[vec![2, 0], vec![0, 3]])).mul(&v), d);
        let (d, _, _) = snf(&m(&[vec![2, 4], vec![6, 8]]));
        assert_eq!(d, m(&[vec![2, 0], vec![0, 4]]));
        let (d, _, _) = snf(&IntMatrix::identity(3));
        assert_eq!(d, IntMatrix::identity(3));
    }

    #[test]
    fn membership_examples() {
        let l = LatticeBasis::from_generators(2, &m(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(membership(&ints(&[0, 0]), &l).unwrap(), Some(ints(&[0, 0])));
        assert_eq!(membership(&ints(&[2, 0]), &l).unwrap(), Some(ints(&[1, 0])));
        assert_eq!(membership(&ints(&[1, 0]), &l).unwrap(), None);
        assert!(membership(&ints(&[1]), &l).is_err());
    }

    #[test]
    fn quotient_examples() {
        let full = LatticeBasis::full(2);
        let two = LatticeBasis::from_generators(2, &m(&[vec![2, 0], vec![0, 2]]));
        let p = quotient_presentation(&two, &full).unwrap();
        assert_eq!(p.cyclic_orders(), &ints(&[2, 2])[..]);
        // Z[Z/2] / I², with I² = span{2(τ−1)}
        let i2 = LatticeBasis::from_generators(2, &m(&[vec![-2, 2]]));
        let p = quotient_presentation(&i2, &full).unwrap();
        assert_eq!(p.cyclic_orders(), &ints(&[2, 0])[..]);
        let p = quotient_presentation(&full, &full).unwrap();
        assert!(p.cyclic_orders().is_empty());
        assert!(quotient_presentation(&full, &two).is_err());
    }

    #[test]
    fn projection_kills_sublattice() {
        let full = LatticeBasis::full(3);
        let sub = LatticeBasis::from_generators(3, &m(&[vec![2, 4, 6], vec![0, 3, 9]]));
        let p = quotient_presentation(&sub, &full).unwrap();
        for i in 0..sub.rank() {
            assert!(p.project(sub.basis().row(i)).unwrap().iter().all(|x| *x == 0));
        }
        for w in p.cyclic_orders().windows(2) {
            assert!(w[1].is_divisible(&w[0]));
        }
    }

    #[test]
    fn kernels_and_saturation() {
        let a = m(&[vec![1, 2], vec![2, 4], vec![0, 1]]);
        let k = integer_kernel(&a);
        assert_eq!(k.rows(), 1);
        assert!(k.mul(&a).is_zero());
        // non-integral rational kernel: 2x + 3y = 0
        let k = integer_kernel(&m(&[vec![2, 4], vec![3, 6]]));
        assert_eq!(k, m(&[vec![3, -2]]));
        assert_eq!(integer_kernel(&m(&[vec![6, 10], vec![4, 6], vec![2, 4]])), hnf_kernel(&m(&[vec![6, 10], vec![4, 6], vec![2, 4]])));
        let km = kernel_mod(&m(&[vec![1], vec![3]]), &ints(&[6]));
        // x + 3y ≡ 0 mod 6
        let l = LatticeBasis { ambient: 2, basis: km };
        assert!(l.contains(&ints(&[3, 1])));
        assert!(!l.contains(&ints(&[1, 0])));
        let s = saturate(2, &m(&[vec![2, 4]]));
        assert_eq!(s.basis(), &m(&[vec![1, 2]]));
        assert_eq!(m(&[vec![2, 1], vec![1, 1]]).det(), 1);
        assert_eq!(m(&[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 9]]).det(), -3);
    }

    #[test]
    fn express_in_dependent_generators() {
        let g = m(&[vec![2, 0], vec![4, 0], vec![0, 3]]);
        let c = express_in_generators(&ints(&[6, 3]), &g).unwrap();
        let back = g.transpose().transpose();
        let v = back.vec_mul(&c);
        assert_eq!(v, ints(&[6, 3]));
        assert!(express_in_generators(&ints(&[1, 0]), &g).is_none());
    }

    fn small_matrix() -> impl Strategy<Value = IntMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-9i64..=9, r * c).prop_map(move |v| {
                IntMatrix::from_i64(&v.chunks(c).map(|x| x.to_vec()).collect::<Vec<_>>())
            })
        })
    }

    fn unimodular(n: usize) -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec((0..n, 0..n, -3i64..=3), 0..12).prop_map(move |ops| {
            let mut u = IntMatrix::identity(n);
            for (a, b, k) in ops {
                if a != b {
                    u.sub_row_multiple(a, b, &Integer::from(k));
                }
            }
            u
        })
    }

    proptest! {
        #[test]
        fn kernel_routes_agree(a in small_matrix()) {
            let k = integer_kernel(&a);
            prop_assert_eq!(&k, &hnf_kernel(&a));
            prop_assert!(k.mul(&a).is_zero());
            let gens = a.transpose();
            let sat = saturate(gens.cols(), &gens);
            let old = hnf_kernel(&hnf_kernel(&gens.transpose()).transpose());
            prop_assert_eq!(sat.basis(), &old);
        }

        #[test]
        fn hnf_is_unimodular_and_idempotent(a in small_matrix()) {
            let (h, u) = hnf(&a);
            prop_assert_eq!(u.mul(&a), h.clone());
            prop_assert_eq!(u.det().abs(), 1);
            let (h2, _) = hnf(&h);
            prop_assert_eq!(h2, h);
        }

        #[test]
        fn snf_is_basis_independent(a in small_matrix(), seed in 0u64..1000) {
            let _ = seed;
            let (d, u, v) = snf(&a);
            prop_assert_eq!(u.mul(&a).mul(&v), d.clone());
            prop_assert_eq!(u.det().abs(), 1);
            prop_assert_eq!(v.det().abs(), 1);
            for i in 1..a.rows().min(a.cols()) {
                prop_assert!(d.get(i, i).is_divisible(d.get(i - 1, i - 1)));
            }
        }

        #[test]
        fn snf_invariant_under_unimodular_change(
            (a, p, q) in small_matrix().prop_flat_map(|a| {
                let (r, c) = (a.rows(), a.cols());
                (Just(a), unimodular(r), unimodular(c))
            })
        ) {
            let (d1, _, _) = snf(&a);
            let (d2, _, _) = snf(&p.mul(&a).mul(&q));
            prop_assert_eq!(d1, d2);
        }

        #[test]
        fn membership_coordinates_reconstruct(a in small_matrix(), coeffs in proptest::collection::vec(-5i64..=5, 6)) {
            let l = LatticeBasis::from_generators(a.cols(), &a);
            let c: Vec<Integer> = coeffs[..a.rows()].iter().map(|&x| Integer::from(x)).collect();
            let v = a.vec_mul(&c);
            let got = membership(&v, &l).unwrap().expect("combination of generators must be a member");
            prop_assert_eq!(l.basis().vec_mul(&got), v);
        }
    }
}
