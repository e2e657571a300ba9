//! Seeded property suites over the pure algebra layer, shared by the CLI.

use crate::group_ring::{
    alternating_projection_sum, aug_power, aug_power_bruteforce, AugmentationMembership, FiniteAbelianGroup,
    GroupRingElement, ProductDecomposition,
};
use crate::lattice::IntMatrix;
use crate::multilinear::{hom_lattice, wedge_operator, EquivariantHom, GModuleLattice, WedgeVector};
use crate::verifier::CheckResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use serde_json::json;
use std::sync::Arc;

/// Nondecreasing factor lists with entries in 2..=max_factor and at most
/// `max_len` entries, optionally bounded in order.
pub fn factor_lists(max_len: usize, max_factor: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for f in &frontier {
            let lo = f.last().copied().unwrap_or(2);
            for n in lo..=max_factor {
                let mut g: Vec<usize> = f.clone();
                g.push(n);
                if g.iter().product::<usize>() <= max_order {
                    next.push(g);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// The inclusion–exclusion defect of random elements of Z[∏ Z/n_i] lies in
/// I(H)^{|W|}, W indexing the cyclic factors.
pub fn lemma54_suite(seed: u64, samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let lists: Vec<Vec<usize>> = factor_lists(4, 6, usize::MAX).into_iter().filter(|f| !f.is_empty()).collect();
    for f in &lists {
        let g = Arc::new(FiniteAbelianGroup::new(f.clone()));
        let factors: Vec<(u64, Vec<usize>)> = (0..f.len())
            .map(|i| {
                let mut e = vec![0i64; f.len()];
                e[i] = 1;
                (i as u64 + 1, vec![g.encode(&e)])
            })
            .collect();
        let dec = ProductDecomposition::new(&g, factors).expect("cyclic factors");
        let test = AugmentationMembership::new(&g, f.len());
        for _ in 0..samples {
            let coeffs: Vec<i64> = (0..g.order()).map(|_| rng.gen_range(-5..=5)).collect();
            let a = GroupRingElement::from_i64(&g, &coeffs);
            if !test.contains(&alternating_projection_sum(&a, &dec)) {
                failures.push(json!({ "group": f, "element": coeffs }));
                break;
            }
        }
    }
    CheckResult::exact(
        "algebra.lemma54",
        failures.is_empty(),
        json!({ "groups": lists.len(), "samples": samples, "seed": seed, "failures": failures }),
    )
}

/// aug_power against the brute-force span of products of (σ − 1).
pub fn filtration_suite(max_order: usize, max_power: usize) -> CheckResult {
    let mut failures = Vec::new();
    let lists = factor_lists(3, max_order, max_order);
    for f in &lists {
        let g = Arc::new(FiniteAbelianGroup::new(f.clone()));
        for n in 0..=max_power {
            if aug_power(&g, n).basis() != aug_power_bruteforce(&g, n).basis() {
                failures.push(json!({ "group": f, "n": n }));
            }
        }
    }
    CheckResult::exact("algebra.filtration", failures.is_empty(), json!({ "groups": lists.len(), "failures": failures }))
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    if n == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            // moving n−1 from the end to position i crosses n−1−i entries
            let sign = if (n - 1 - i) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

/// (φ_1 ∧ … ∧ φ_r)(m_1 ∧ … ∧ m_r) = det(φ_i(m_j)) in Z[G].
pub fn determinant_suite(seed: u64, cases: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let groups = factor_lists(2, 6, 6);
    for case in 0..cases {
        let f = &groups[case % groups.len()];
        let g = Arc::new(FiniteAbelianGroup::new(f.clone()));
        let m = GModuleLattice::regular(&g).direct_sum(&GModuleLattice::trivial(&g, 2));
        let homs = hom_lattice(&m);
        let n = m.rank();
        let r = 1 + case % 3;
        let phis: Vec<EquivariantHom> = (0..r)
            .map(|_| {
                let mut mat = IntMatrix::zeros(n, g.order());
                for h in &homs {
                    let c = Integer::from(rng.gen_range(-3..=3));
                    for i in 0..n {
                        for t in 0..g.order() {
                            *mat.get_mut(i, t) += Integer::from(&c * h.matrix.get(i, t));
                        }
                    }
                }
                EquivariantHom { matrix: mat }
            })
            .collect();
        let vecs: Vec<Vec<Integer>> =
            (0..r).map(|_| (0..n).map(|_| Integer::from(rng.gen_range(-3..=3))).collect()).collect();
        let rat: Vec<Vec<Rational>> = vecs.iter().map(|v| v.iter().map(|x| Rational::from(x.clone())).collect()).collect();
        let w = WedgeVector::wedge_of(n, &rat);
        let lhs = match wedge_operator(&phis, &w, &m) {
            Ok(x) => x,
            Err(e) => {
                failures.push(json!({ "case": case, "error": e.to_string() }));
                continue;
            }
        };
        let vals: Vec<Vec<GroupRingElement>> = phis.iter().map(|p| vecs.iter().map(|v| p.eval(&g, v)).collect()).collect();
        let mut det = GroupRingElement::zero(&g);
        for (perm, sign) in permutations(r) {
            let mut term = GroupRingElement::one(&g);
            for (i, &j) in perm.iter().enumerate() {
                term = &term * &vals[i][j];
            }
            det = if sign > 0 { &det + &term } else { &det - &term };
        }
        let rhs: Vec<Rational> = det.coeffs().iter().map(|x| Rational::from(x.clone())).collect();
        if lhs.coords() != &rhs[..] {
            failures.push(json!({ "case": case, "group": f, "r": r }));
        }
    }
    CheckResult::exact("algebra.determinant", failures.is_empty(), json!({ "cases": cases, "seed": seed, "failures": failures }))
}

/// All three suites.
pub fn algebra_suite(seed: u64) -> Vec<CheckResult> {
    vec![lemma54_suite(seed, 100), filtration_suite(8, 4), determinant_suite(seed, 60)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_list_counts() {
        // groups of order ≤ 8 as nondecreasing factor lists
        let l = factor_lists(3, 8, 8);
        assert!(l.contains(&vec![2, 2, 2]) && l.contains(&vec![2, 4]) && l.contains(&vec![8]));
        assert!(!l.contains(&vec![3, 3]));
        assert_eq!(factor_lists(4, 6, usize::MAX).len(), 1 + 5 + 15 + 35 + 70);
    }

    #[test]
    fn permutation_signs() {
        for (p, s) in permutations(4) {
            let mut inv = 0;
            for i in 0..4 {
                for j in i + 1..4 {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            assert_eq!(s, if inv % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(determinant_suite(7, 12).pass);
        assert!(filtration_suite(4, 3).pass);
    }
}
