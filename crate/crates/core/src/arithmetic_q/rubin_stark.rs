//! Rubin–Stark elements over Q: the explicit split case and recovery from
//! the L-value datum x_{K,S,T,V} when r = 1.

use super::field::{ArithmeticError, Place};
use super::reciprocity::ray_class_order;
use super::units::{float_det, SUnitLattice};
use crate::multilinear::{RubinElement, RubinLattice, WedgeVector};
use crate::numeric::{rationalize, tolerance};
use rug::{Float, Integer, Rational};

/// A recovered Rubin–Stark element with its numerical certificates.
#[derive(Clone, Debug)]
pub struct RsRecovery {
    pub element: RubinElement,
    /// Largest |λ(ε) − x| coordinate.
    pub residual: Float,
}

/// Max-norm distance between λ(ω) and a target over the r-subsets of places.
pub fn lambda_residual(units: &SUnitLattice, omega: &WedgeVector, x: &[Float]) -> Float {
    let lam = units.lambda_wedge(omega);
    let mut res = Float::new(units.prec);
    for (a, b) in lam.iter().zip(x) {
        let d = Float::with_val(units.prec, a - b).abs();
        if d > res {
            res = d;
        }
    }
    res
}

/// Solves λ(ε) = x for r = 1 over the unit basis, recognizes rational
/// coordinates and certifies membership in ∩¹.
pub fn rs_element_r1(units: &SUnitLattice, rubin: &RubinLattice, x: &[Float]) -> Result<RsRecovery, ArithmeticError> {
    if rubin.degree() != 1 {
        return Err(ArithmeticError::Unsupported(format!("rs_element_r1 needs r = 1, got {}", rubin.degree())));
    }
    let tol = tolerance(units.prec, units.level.precision() / 2);
    let n = units.rank();
    let coords: Vec<Rational> = if x.iter().all(|c| c.clone().abs() < tol) {
        vec![Rational::new(); n]
    } else {
        let (y, _) = units.real_coords(x)?;
        let bound = units.level.denominator_bound();
        y.iter()
            .map(|c| rationalize(c, &bound, &tol))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ArithmeticError::Rounding("no rational exponent vector near λ^{-1}(x); raise the precision or the denominator bound".into()))?
    };
    let wedge = WedgeVector::from_coords(n, 1, coords);
    let residual = lambda_residual(units, &wedge, x);
    if residual > tol {
        return Err(ArithmeticError::Rounding(format!("λ(ε) − x has size {}", residual.to_f64())));
    }
    let element = rubin
        .membership(&wedge)
        .map_err(|e| ArithmeticError::Algebra(e.to_string()))?
        .ok_or_else(|| ArithmeticError::Algebra("recovered element is not in ∩¹".into()))?;
    Ok(RsRecovery { element, residual })
}

/// The split-case element ε_{Q,S,T,V′} with V′ = S ∖ {v₀}.
#[derive(Clone, Debug)]
pub struct RsSplit {
    pub element: RubinElement,
    /// ±|A_{Q,S,T}|, the coefficient of u_1 ∧ … ∧ u_{r′}.
    pub coefficient: Integer,
    /// det(−log|u_j|_v)_{v∈V′}.
    pub log_det: Float,
    /// | |A|·|det| − |θ| |, which vanishes by the class number formula.
    pub class_number_residual: Float,
    /// Whether the coefficient times the log determinant is negative.
    pub negative_normalization: bool,
}

/// ε_{Q,S,T,V′} = ±|A_{Q,S,T}| u_1 ∧ … ∧ u_{r′}, the sign fixed by λ(ε) = x,
/// i.e. by the sign of θ^{(r′)}.
pub fn rs_element_split(
    units: &SUnitLattice,
    rubin: &RubinLattice,
    theta: &Float,
    v0: Place,
) -> Result<RsSplit, ArithmeticError> {
    let level = &units.level;
    if level.group().order() != 1 {
        return Err(ArithmeticError::Unsupported("the split constructor works over L = Q".into()));
    }
    let r = units.rank();
    if rubin.degree() != r || r + 1 != level.s.len() {
        return Err(ArithmeticError::Algebra(format!("r′ = {} must equal |S| − 1 = {}", rubin.degree(), level.s.len() - 1)));
    }
    let cols: Vec<usize> = (0..units.places.len()).filter(|&j| units.places[j].place != v0).collect();
    let m: Vec<Vec<Float>> = (0..r).map(|i| cols.iter().map(|&j| units.log_matrix[i][j].clone()).collect()).collect();
    let det = float_det(m);
    let tol = tolerance(units.prec, level.precision() / 2);
    if det.clone().abs() < tol {
        return Err(ArithmeticError::Precision("regulator determinant is numerically zero".into()));
    }
    if theta.clone().abs() < tol {
        return Err(ArithmeticError::Precision("θ^{(r′)} is numerically zero".into()));
    }
    let a = ray_class_order(&level.s, &level.inst.t);
    let positive = (theta.is_sign_positive()) == (det.is_sign_positive());
    let coefficient = if positive { a.clone() } else { -a.clone() };
    let class_number_residual =
        Float::with_val(units.prec, Float::with_val(units.prec, &det * &a).abs() - theta.clone().abs()).abs();
    if class_number_residual > tol {
        return Err(ArithmeticError::Precision(format!(
            "|A|·|R| differs from |θ| by {}",
            class_number_residual.to_f64()
        )));
    }
    let negative_normalization = Float::with_val(units.prec, &det * &coefficient).is_sign_negative();
    let all: Vec<usize> = (0..r).collect();
    let wedge = WedgeVector::basis(r, &all).scale(&Rational::from(coefficient.clone()));
    let element = rubin
        .membership(&wedge)
        .map_err(|e| ArithmeticError::Algebra(e.to_string()))?
        .ok_or_else(|| ArithmeticError::Algebra("split element is not integral".into()))?;
    Ok(RsSplit { element, coefficient, log_det: det, class_number_residual, negative_normalization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic_q::field::{build_instance, InstanceConfig, Level};
    use crate::lseries::{stickelberger, x_element};
    use std::sync::Arc;

    fn cfg(pp: Vec<(u64, u32)>, s: Vec<Place>, t: Vec<u64>, v0: u64) -> InstanceConfig {
        InstanceConfig { prime_powers: pp, s, t, v0: Some(Place::Finite(v0)), ..Default::default() }
    }

    #[test]
    fn quadratic_recovery() {
        let inst = build_instance(&cfg(vec![(5, 1)], vec![Place::Infinite, Place::Finite(5)], vec![3], 5)).unwrap();
        let top = Level::top(&inst);
        let units = SUnitLattice::build(&top).unwrap();
        let theta = stickelberger(&top, 1, None).unwrap();
        let x = x_element(&top, &units.places, &theta, &[Place::Infinite], Place::Finite(5));
        let rubin = RubinLattice::new(&units.module, 1);
        let rec = rs_element_r1(&units, &rubin, &x).unwrap();
        assert!(rec.residual < 1e-9);
        assert!(rec.element.wedge.coords().iter().all(|c| *c.denom() == 1));
        assert!(!rec.element.wedge.is_zero());
    }

    #[test]
    fn split_element_over_q() {
        let c = cfg(vec![(5, 1), (7, 1)], vec![Place::Infinite, Place::Finite(5), Place::Finite(7)], vec![3], 7);
        let inst = build_instance(&c).unwrap();
        let q = Level::new(&inst, &inst.group.generators(), &inst.s);
        let units = SUnitLattice::build(&q).unwrap();
        let theta = stickelberger(&q, 2, None).unwrap();
        let rubin = RubinLattice::new(&Arc::clone(&units.module), 2);
        let eps = rs_element_split(&units, &rubin, &theta.coeffs[0], Place::Finite(7)).unwrap();
        assert_eq!(eps.coefficient.clone().abs(), 1);
        // λ(ε) = x in Λ² of the place lattice
        let x = x_element(&q, &units.places, &theta, &[Place::Infinite, Place::Finite(5)], Place::Finite(7));
        assert!(lambda_residual(&units, &eps.element.wedge, &x) < 1e-20);
        // with |T| odd the coefficient and the log determinant have the same sign
        assert!(!eps.negative_normalization);
    }
}
