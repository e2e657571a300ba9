//! Builds L_X and R_X for every nonempty X ⊆ W and runs the norm, Φ,
//! product-formula, inclusion–exclusion and functoriality checks that make
//! up the proof of L_W = ν_{K/L}(R_W) in (∩^r) ⊗ Z[H]/I(H)^{d+1}.
//!
//! Throughout L = Q, V = {∞} and r = 1, so d = |W| − 1. All group-ring legs
//! are stored in Z[G]; a leg of a level K_X lives on H_X = ∏_{v∈X} J_v and
//! is carried there by `Level::section`.

use crate::arithmetic_q::field::{crt, ArithmeticError, FieldInstance, InstanceConfig, Level, Place};
use crate::arithmetic_q::reciprocity::phi_v;
use crate::arithmetic_q::rubin_stark::{rs_element_r1, rs_element_split};
use crate::arithmetic_q::units::SUnitLattice;
use crate::arithmetic_q::build_instance;
use crate::group_ring::{
    alternating_projection_sum, pi_x, AugmentationMembership, FiniteAbelianGroup, GroupHom, GroupRingElement,
    ProductDecomposition,
};
use crate::lattice::{IntMatrix, LatticeBasis};
use crate::linalg::common_denominator;
use crate::lseries::{stickelberger, x_element, LValueCache};
use crate::multilinear::{
    cal_n, phi_operator, regulator_operator, sgn_perm, Descent, MultilinearError, RubinElement, RubinLattice,
    TensorResidueElement, WedgeVector,
};
use crate::numeric::tolerance;
use rug::Integer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error(transparent)]
    Algebra(#[from] MultilinearError),
    #[error("R_X depends on the choice of v0' for X = {0:?}")]
    V0Dependence(Vec<u64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Exact,
    Numeric,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub residual: f64,
    /// Acceptance threshold for numeric checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub pass: bool,
    pub witness: Value,
}

impl CheckResult {
    pub fn exact(name: impl Into<String>, pass: bool, witness: Value) -> Self {
        CheckResult { name: name.into(), kind: CheckKind::Exact, residual: 0.0, bound: None, pass, witness }
    }

    pub fn numeric(name: impl Into<String>, residual: f64, bound: f64, witness: Value) -> Self {
        CheckResult { name: name.into(), kind: CheckKind::Numeric, residual, bound: Some(bound), pass: residual <= bound, witness }
    }

    fn failed(name: impl Into<String>, err: &VerifyError) -> Self {
        CheckResult::exact(name, false, json!({ "error": err.to_string() }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceReport {
    pub config: InstanceConfig,
    pub checks: Vec<CheckResult>,
    pub verdict: bool,
    pub precision: u32,
    /// Least common denominators of the wedge coordinates of every ε built.
    pub denominators: BTreeMap<String, String>,
    pub cache_hits: usize,
    pub elapsed_ms: u128,
}

impl InstanceReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

type LevelKey = (Vec<usize>, Vec<Place>);

fn key(level: &Level) -> LevelKey {
    (level.kernel.clone(), level.s.clone())
}

fn set_name(x: &[u64]) -> String {
    let v: Vec<String> = x.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn matrix_json(m: &IntMatrix) -> Value {
    Value::Array(
        m.to_rows().iter().map(|r| Value::Array(r.iter().map(|x| Value::String(x.to_string())).collect())).collect(),
    )
}

fn tensor_json(t: &TensorResidueElement) -> Value {
    match t.canonical() {
        Ok(m) => json!({ "level": t.level(), "graded": t.graded(), "coords": matrix_json(&m) }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn identity_hom(g: &Arc<FiniteAbelianGroup>) -> GroupHom {
    GroupHom { source: g.clone(), target: g.clone(), map: (0..g.order()).collect() }
}

/// The map Gal(K_a/Q) → Gal(K_b/Q) for K_b ⊆ K_a.
fn level_map(upper: &Level, lower: &Level) -> GroupHom {
    let g = &upper.inst.group;
    let mut map = vec![0; upper.group().order()];
    for s in 0..g.order() {
        map[upper.quotient.apply(s)] = lower.quotient.apply(s);
    }
    GroupHom { source: upper.group().clone(), target: lower.group().clone(), map }
}

/// Shared state: unit lattices, Rubin lattices, descents and ε elements,
/// each built once.
pub struct Context {
    pub inst: Arc<FieldInstance>,
    pub dec: ProductDecomposition,
    /// Finite primes of W = S ∖ V.
    pub w: Vec<u64>,
    pub d: usize,
    cache: Option<LValueCache>,
    units: HashMap<LevelKey, Arc<Mutex<SUnitLattice>>>,
    rubin: HashMap<(LevelKey, usize), Arc<RubinLattice>>,
    inclusions: HashMap<(LevelKey, LevelKey), IntMatrix>,
    descents: HashMap<(LevelKey, LevelKey), Arc<Descent>>,
    eps: HashMap<(LevelKey, Vec<Place>), RubinElement>,
    pub numeric: Vec<CheckResult>,
    pub denominators: BTreeMap<String, String>,
}

impl Context {
    pub fn new(inst: Arc<FieldInstance>, cache: Option<LValueCache>) -> Result<Self, VerifyError> {
        if inst.v != [Place::Infinite] {
            return Err(ArithmeticError::Unsupported("the verifier works with V = {∞}".into()).into());
        }
        let w: Vec<u64> = inst.w().iter().filter_map(|v| v.prime()).collect();
        let places: Vec<Place> = w.iter().map(|&p| Place::Finite(p)).collect();
        let dec = inst.inertia_decomposition(&places)?;
        let d = w.len() - 1;
        Ok(Context {
            inst,
            dec,
            w,
            d,
            cache,
            units: HashMap::new(),
            rubin: HashMap::new(),
            inclusions: HashMap::new(),
            descents: HashMap::new(),
            eps: HashMap::new(),
            numeric: Vec::new(),
            denominators: BTreeMap::new(),
        })
    }

    pub fn cache_hits(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| *c.hits.lock().unwrap())
    }

    pub fn precision(&self) -> u32 {
        self.inst.config.precision
    }

    /// S_X = V ∪ X.
    pub fn s_x(&self, x: &[u64]) -> Vec<Place> {
        let mut s = vec![Place::Infinite];
        s.extend(x.iter().map(|&p| Place::Finite(p)));
        s
    }

    pub fn full_s(&self) -> Vec<Place> {
        self.inst.s.clone()
    }

    /// K_X, the fixed field of ∏_{v∈W∖X} J_v, with the given places.
    pub fn level_x(&self, x: &[u64], s: &[Place]) -> Level {
        let rest: Vec<u64> = self.w.iter().cloned().filter(|p| !x.contains(p)).collect();
        Level::new(&self.inst, &self.dec.sub_product(&rest), s)
    }

    pub fn rational_level(&self, s: &[Place]) -> Level {
        self.level_x(&[], s)
    }

    pub fn units(&mut self, level: &Level) -> Result<Arc<Mutex<SUnitLattice>>, VerifyError> {
        let k = key(level);
        if let Some(u) = self.units.get(&k) {
            return Ok(u.clone());
        }
        let u = Arc::new(Mutex::new(SUnitLattice::build(level)?));
        self.units.insert(k, u.clone());
        Ok(u)
    }

    pub fn rubin(&mut self, level: &Level, degree: usize) -> Result<Arc<RubinLattice>, VerifyError> {
        let k = (key(level), degree);
        if let Some(r) = self.rubin.get(&k) {
            return Ok(r.clone());
        }
        let module = self.units(level)?.lock().unwrap().module.clone();
        let r = Arc::new(RubinLattice::new(&module, degree));
        self.rubin.insert(k, r.clone());
        Ok(r)
    }

    /// Rows: the basis of U(lower) in the coordinates of U(upper).
    pub fn inclusion(&mut self, upper: &Level, lower: &Level) -> Result<IntMatrix, VerifyError> {
        let k = (key(upper), key(lower));
        if let Some(m) = self.inclusions.get(&k) {
            return Ok(m.clone());
        }
        let m = if k.0 == k.1 {
            let n = self.units(upper)?.lock().unwrap().rank();
            IntMatrix::identity(n)
        } else {
            let up = self.units(upper)?;
            let low = self.units(lower)?;
            let low = low.lock().unwrap();
            let m = up.lock().unwrap().inclusion_from(&low)?;
            m
        };
        self.inclusions.insert(k, m.clone());
        Ok(m)
    }

    /// ν from ∩¹ U(lower) to ∩¹ U(upper), lower ⊆ upper.
    pub fn descent(&mut self, upper: &Level, lower: &Level) -> Result<Arc<Descent>, VerifyError> {
        let k = (key(upper), key(lower));
        if let Some(d) = self.descents.get(&k) {
            return Ok(d.clone());
        }
        let up = self.rubin(upper, 1)?;
        let low = self.rubin(lower, 1)?;
        let inc = self.inclusion(upper, lower)?;
        let d = Arc::new(Descent::new(&up, &low, inc, level_map(upper, lower))?);
        self.descents.insert(k, d.clone());
        Ok(d)
    }

    /// Base-coordinate matrix of ∩^r U(from) → ∩^r U(to) for U(from) ⊆ U(to).
    pub fn rubin_map(&mut self, to: &Level, from: &Level, degree: usize) -> Result<IntMatrix, VerifyError> {
        let src = self.rubin(from, degree)?;
        let dst = self.rubin(to, degree)?;
        let inc = self.inclusion(to, from)?;
        let rows = (0..src.base_rank())
            .map(|i| {
                let w = src.basis_element(i).wedge.push_forward(&inc);
                let e = dst.membership(&w)?.ok_or(MultilinearError::NotInLattice)?;
                dst.base_coords(&e)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntMatrix::from_rows(dst.base_rank(), rows))
    }

    /// An element of ∩^r U(from) viewed in ∩^r U(to).
    pub fn push(&mut self, a: &RubinElement, to: &Level, from: &Level) -> Result<RubinElement, VerifyError> {
        let inc = self.inclusion(to, from)?;
        let dst = self.rubin(to, a.wedge.degree())?;
        let w = a.wedge.push_forward(&inc);
        Ok(dst.membership(&w)?.ok_or(MultilinearError::NotInLattice)?)
    }

    fn record_denominator(&mut self, name: String, w: &WedgeVector) {
        self.denominators.insert(name, common_denominator(w.coords()).to_string());
    }

    /// ε_{K_X,S,T,V} for V = {∞}, recovered from θ^{(1)}.
    pub fn eps_r1(&mut self, level: &Level) -> Result<RubinElement, VerifyError> {
        let k = (key(level), vec![Place::Infinite]);
        if let Some(e) = self.eps.get(&k) {
            return Ok(e.clone());
        }
        let rubin = self.rubin(level, 1)?;
        let units = self.units(level)?;
        let units = units.lock().unwrap();
        let theta = stickelberger(level, 1, self.cache.as_ref())?;
        let v0 = match self.inst.v0 {
            Some(v) if level.s.contains(&v) => v,
            _ => *level.s.iter().find(|v| **v != Place::Infinite).expect("S_X has a finite place"),
        };
        let x = x_element(level, &units.places, &theta, &[Place::Infinite], v0);
        let rec = rs_element_r1(&units, &rubin, &x)?;
        let name = format!("eps[{}]", level_name(level));
        let bound = tolerance(units.prec, self.precision() / 2).to_f64();
        self.numeric.push(CheckResult::numeric(
            format!("rs_recovery{}", &name[3..]),
            rec.residual.to_f64(),
            bound,
            json!({ "coords": rec.element.wedge.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>() }),
        ));
        drop(units);
        self.record_denominator(name, &rec.element.wedge);
        self.eps.insert(k, rec.element.clone());
        Ok(rec.element)
    }

    /// ε_{Q,S,T,V′} with V′ = S ∖ {v₀}.
    pub fn eps_split(&mut self, s: &[Place], v0: Place) -> Result<RubinElement, VerifyError> {
        let level = self.rational_level(s);
        let vp: Vec<Place> = level.s.iter().cloned().filter(|v| *v != v0).collect();
        let k = (key(&level), vp);
        if let Some(e) = self.eps.get(&k) {
            return Ok(e.clone());
        }
        let r = level.s.len() - 1;
        let rubin = self.rubin(&level, r)?;
        let units = self.units(&level)?;
        let units = units.lock().unwrap();
        let theta = stickelberger(&level, r, self.cache.as_ref())?;
        let eps = rs_element_split(&units, &rubin, &theta.coeffs[0], v0)?;
        let name = format!("eps[Q,S={},V'=S-{}]", places_name(&level.s), v0);
        let bound = tolerance(units.prec, self.precision() / 2).to_f64();
        self.numeric.push(CheckResult::numeric(
            format!("class_number_formula[Q,S={},v0={}]", places_name(&level.s), v0),
            eps.class_number_residual.to_f64(),
            bound,
            json!({
                "coefficient": eps.coefficient.to_string(),
                "log_det": eps.log_det.to_f64(),
                "negative_log_normalization": eps.negative_normalization,
            }),
        ));
        drop(units);
        self.record_denominator(name, &eps.element.wedge);
        self.eps.insert(k, eps.element.clone());
        Ok(eps.element)
    }

    /// Fr_v ∈ Gal(K_X/Q), carried to H_X ⊂ G.
    pub fn frobenius_x(&self, x: &[u64], v: u64) -> usize {
        let lx = self.level_x(x, &self.s_x(x));
        lx.section(&self.dec, x).apply(lx.frobenius(v))
    }

    /// ∏_{v∈W∖X}(1 − Fr_v^{−1}) in Z[G].
    pub fn euler_factor(&self, x: &[u64]) -> GroupRingElement {
        let g = &self.inst.group;
        let mut out = GroupRingElement::one(g);
        for &v in self.w.iter().filter(|p| !x.contains(p)) {
            let f = g.inv(self.frobenius_x(x, v));
            out = &out * &(&GroupRingElement::one(g) - &GroupRingElement::basis(g, f));
        }
        out
    }

    /// ∏_{v∈W∖X}(Fr_v − 1) in Z[G].
    pub fn regulator_factor(&self, x: &[u64]) -> GroupRingElement {
        let g = &self.inst.group;
        let mut out = GroupRingElement::one(g);
        for &v in self.w.iter().filter(|p| !x.contains(p)) {
            out = &out * &GroupRingElement::aug_generator(g, self.frobenius_x(x, v));
        }
        out
    }

    /// 𝒩_{K_X/Q}(ε_{K_X,S_X,T,V}) viewed in ∩¹ U(K_X, s) ⊗ Z[G], ungraded at
    /// `level` (the leg group is identified with H_X).
    pub fn l_x_in(&mut self, x: &[u64], s: &[Place], level: usize) -> Result<TensorResidueElement, VerifyError> {
        let lx = self.level_x(x, &self.s_x(x));
        let target = self.level_x(x, s);
        let eps = self.eps_r1(&lx)?;
        let eps = self.push(&eps, &target, &lx)?;
        let lat = self.rubin(&target, 1)?;
        let n = cal_n(&eps, &lat, &identity_hom(target.group()), level - 1)?;
        let sec = lx.section(&self.dec, x);
        Ok(n.map_legs(|l| sec.push(l)))
    }

    /// L_X in ∩¹ U(K_X, S_X) ⊗ Z[H_X]/I^{|X|}.
    pub fn build_lx(&mut self, x: &[u64]) -> Result<TensorResidueElement, VerifyError> {
        let s = self.s_x(x);
        self.l_x_in(x, &s, x.len())
    }

    /// sgn(V′_X,V)(⋀_{v∈V′_X∖V} φ_v)(ε_{Q,S_X,T,V′_X}) with V′_X = S_X ∖ {v0′},
    /// in ∩¹ U(Q, S_X) ⊗ Q(H_X)^{|X|−1}.
    pub fn build_rx_with(&mut self, x: &[u64], v0p: u64) -> Result<TensorResidueElement, VerifyError> {
        let s = self.s_x(x);
        let q = self.rational_level(&s);
        let eps = self.eps_split(&s, Place::Finite(v0p))?;
        let source = self.rubin(&q, x.len())?;
        let target = self.rubin(&q, 1)?;
        let units = self.units(&q)?;
        let units = units.lock().unwrap();
        let xs: Vec<u64> = x.to_vec();
        let mut phis = Vec::new();
        for &v in x.iter().filter(|&&v| v != v0p) {
            let vals = (0..units.rank())
                .map(|i| {
                    let a = units.rational_value(i).ok_or_else(|| ArithmeticError::Algebra("non-rational unit over Q".into()))?;
                    phi_v(&self.inst, Place::Finite(v), &a, &self.dec, &xs)
                })
                .collect::<Result<Vec<_>, ArithmeticError>>()?;
            phis.push(vals);
        }
        drop(units);
        let vp: Vec<u64> = s.iter().filter(|v| **v != Place::Finite(v0p)).map(|v| v.key()).collect();
        let sign = sgn_perm(&vp, &[Place::Infinite.key()])?;
        let r = regulator_operator(&phis, &eps, &source, &target, &self.inst.group)?;
        Ok(if sign < 0 { r.neg() } else { r })
    }

    /// R_X for every admissible v0′ ∈ X; errors when two choices disagree.
    pub fn build_rx(&mut self, x: &[u64]) -> Result<TensorResidueElement, VerifyError> {
        let first = match self.inst.v0.and_then(|v| v.prime()) {
            Some(p) if x.contains(&p) => p,
            _ => x[0],
        };
        let r = self.build_rx_with(x, first)?;
        for &other in x.iter().filter(|&&p| p != first) {
            let r2 = self.build_rx_with(x, other)?;
            if !r.equals(&r2)? {
                return Err(VerifyError::V0Dependence(x.to_vec()));
            }
        }
        Ok(r)
    }

    /// ν_{K_X/Q}(R_X) in ∩¹ U(K_X, S_X) ⊗ Z[H]/I^{|X|}.
    pub fn nu_rx(&mut self, x: &[u64]) -> Result<TensorResidueElement, VerifyError> {
        let s = self.s_x(x);
        let lx = self.level_x(x, &s);
        let q = self.rational_level(&s);
        let r = self.build_rx(x)?;
        let nu = self.descent(&lx, &q)?;
        Ok(r.map_base(&nu.matrix()?).at_level(x.len(), false))
    }

    pub fn proper_subsets(&self) -> Vec<Vec<u64>> {
        subsets(&self.w).into_iter().filter(|x| !x.is_empty() && x.len() < self.w.len()).collect()
    }

    pub fn nonempty_subsets(&self) -> Vec<Vec<u64>> {
        let mut v: Vec<Vec<u64>> = subsets(&self.w).into_iter().filter(|x| !x.is_empty()).collect();
        v.sort_by_key(|x| x.len());
        v
    }
}

fn subsets(w: &[u64]) -> Vec<Vec<u64>> {
    (0..1usize << w.len())
        .map(|mask| w.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect())
        .collect()
}

fn places_name(s: &[Place]) -> String {
    let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn level_name(level: &Level) -> String {
    format!("K^{},S={}", level.fixing_residues().len(), places_name(&level.s))
}

/// Solves ν(y) = a for y in the lower lattice tensor the same residue group,
/// column by column. Returns the solution or None.
fn preimage(nu: &IntMatrix, a: &TensorResidueElement) -> Result<Option<IntMatrix>, VerifyError> {
    let c = a.canonical()?;
    let orders = a.residue_orders();
    let upper = nu.cols();
    let mut cols = Vec::new();
    for (k, o) in orders.iter().enumerate() {
        let mut gens = nu.clone();
        if *o != 0 {
            for j in 0..upper {
                let mut row = vec![Integer::new(); upper];
                row[j] = o.clone();
                gens.push_row(row);
            }
        }
        let target: Vec<Integer> = (0..c.rows()).map(|j| c.get(j, k).clone()).collect();
        let lat = LatticeBasis::from_generators(upper, &gens);
        match crate::lattice::express_in_generators(&target, &gens) {
            Some(y) if lat.contains(&target) => cols.push(y[..nu.rows()].to_vec()),
            _ => return Ok(None),
        }
    }
    let rows = (0..nu.rows()).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    Ok(Some(IntMatrix::from_rows(orders.len(), rows)))
}

/// check_main at X: L_X = ν_{K_X/Q}(R_X) in (∩¹) ⊗ Z[H_X]/I^{|X|}.
pub fn check_main_at(ctx: &mut Context, x: &[u64]) -> CheckResult {
    let name = format!("main{}", set_name(x));
    let mut run = || -> Result<CheckResult, VerifyError> {
        let lhs = ctx.build_lx(x)?;
        let rhs = ctx.nu_rx(x)?;
        let eq = lhs.equals(&rhs)?;
        let s = ctx.s_x(x);
        let lx = ctx.level_x(x, &s);
        let q = ctx.rational_level(&s);
        let nu = ctx.descent(&lx, &q)?.matrix()?;
        let pre = preimage(&nu, &lhs)?;
        Ok(CheckResult::exact(
            name.clone(),
            eq && pre.is_some(),
            json!({
                "level": x.len(),
                "L_X": tensor_json(&lhs),
                "nu_R_X": tensor_json(&rhs),
                "preimage": pre.as_ref().map(matrix_json),
            }),
        ))
    };
    run().unwrap_or_else(|e| CheckResult::failed(&name, &e))
}

/// At a proper nonempty X: π_X(L_W) = ν_{K/K_X}(L_X)·∏(1 − Fr_v⁻¹) and
/// π_X(R_W) = R_X·∏(Fr_v − 1) over v ∈ W ∖ X, plus the Frobenius
/// consistency of the factors.
pub fn check_lemma52(ctx: &mut Context, x: &[u64]) -> Vec<CheckResult> {
    let d = ctx.d;
    let nx = set_name(x);
    let first = |ctx: &mut Context| -> Result<CheckResult, VerifyError> {
        let s = ctx.full_s();
        let top = ctx.level_x(&ctx.w.clone(), &s);
        let lw = ctx.build_lx(&ctx.w.clone())?;
        let dec = ctx.dec.clone();
        let lhs = lw.map_legs(|l| pi_x(l, x, &dec).expect("X ⊆ W"));
        let lxs = ctx.l_x_in(x, &s, d + 1)?;
        let kx = ctx.level_x(x, &s);
        let nu = ctx.descent(&top, &kx)?.matrix()?;
        let rhs = lxs.map_base(&nu).mul_leg(&ctx.euler_factor(x));
        Ok(CheckResult::exact(
            format!("lemma52i{}", nx),
            lhs.equals(&rhs)?,
            json!({ "pi_X(L_W)": tensor_json(&lhs), "rhs": tensor_json(&rhs) }),
        ))
    };
    let second = |ctx: &mut Context| -> Result<CheckResult, VerifyError> {
        let rw = ctx.build_rx(&ctx.w.clone())?;
        let dec = ctx.dec.clone();
        let lhs = rw.map_legs(|l| pi_x(l, x, &dec).expect("X ⊆ W"));
        let rx = ctx.build_rx(x)?;
        let q_s = ctx.rational_level(&ctx.full_s());
        let q_sx = ctx.rational_level(&ctx.s_x(x));
        let m = ctx.rubin_map(&q_s, &q_sx, 1)?;
        let rhs = rx.map_base(&m).mul_leg(&ctx.regulator_factor(x)).at_level(d, true);
        Ok(CheckResult::exact(
            format!("lemma52ii{}", nx),
            lhs.equals(&rhs)?,
            json!({ "pi_X(R_W)": tensor_json(&lhs), "rhs": tensor_json(&rhs) }),
        ))
    };
    let mut out = vec![
        first(ctx).unwrap_or_else(|e| CheckResult::failed(format!("lemma52i{}", nx), &e)),
        second(ctx).unwrap_or_else(|e| CheckResult::failed(format!("lemma52ii{}", nx), &e)),
    ];
    // Fr_v on K_X from the residue data: b ≡ p away from p, b ≡ 1 at p
    let m = ctx.inst.m;
    let mut ok = true;
    let mut wit = Vec::new();
    for &p in ctx.w.iter().filter(|p| !x.contains(p)) {
        let pe = ctx.inst.prime_powers.iter().find(|q| q.0 == p).map_or(1, |q| p.pow(q.1));
        let rest = m / pe;
        let b = crt(1 % pe, pe, p % rest, rest);
        let expected = ctx.dec.project(ctx.inst.class_of(b), x);
        let got = ctx.frobenius_x(x, p);
        ok &= expected == got;
        wit.push(json!({ "v": p, "residue": b, "frobenius": got }));
    }
    out.push(CheckResult::exact(format!("frobenius_factor{}", nx), ok, Value::Array(wit)));
    out
}

/// π_∅(L_W) = π_∅(ν(R_W)).
pub fn check_lemma53(ctx: &mut Context) -> CheckResult {
    let mut run = || -> Result<CheckResult, VerifyError> {
        let w = ctx.w.clone();
        let lw = ctx.build_lx(&w)?;
        let nrw = ctx.nu_rx(&w)?;
        let g = ctx.inst.group.clone();
        let aug = |l: &GroupRingElement| GroupRingElement::one(&g).scale(&l.augmentation());
        let lhs = lw.map_legs(aug);
        let rhs = nrw.map_legs(aug);
        Ok(CheckResult::exact(
            "lemma53",
            lhs.equals(&rhs)?,
            json!({ "pi_empty(L_W)": tensor_json(&lhs), "pi_empty(nu(R_W))": tensor_json(&rhs) }),
        ))
    };
    run().unwrap_or_else(|e| CheckResult::failed("lemma53", &e))
}

/// On the legs of L_W and of L_W − ν(R_W): the inclusion–exclusion defect
/// lies in I(H)^{|W|}.
pub fn check_lemma54(ctx: &mut Context) -> CheckResult {
    let mut run = || -> Result<CheckResult, VerifyError> {
        let w = ctx.w.clone();
        let lw = ctx.build_lx(&w)?;
        let diff = lw.add(&ctx.nu_rx(&w)?.neg());
        let test = AugmentationMembership::new(&ctx.inst.group, w.len());
        let mut ok = true;
        for t in [&lw, &diff] {
            for l in t.legs() {
                ok &= test.contains(&alternating_projection_sum(l, &ctx.dec));
            }
        }
        Ok(CheckResult::exact("lemma54", ok, json!({ "power": w.len(), "legs": lw.base_rank() })))
    };
    run().unwrap_or_else(|e| CheckResult::failed("lemma54", &e))
}

/// The norm relation N_{K/K_X}(ε_{K,S}) = ∏_{v∈S∖S_small}(1 − Fr_v^{−1}) ε_{K_X,S_small}.
pub fn check_norm_relation(ctx: &mut Context, x: &[u64], s_small: &[Place]) -> CheckResult {
    let name = format!("norm_relation[X={},S={}]", set_name(x), places_name(s_small));
    let mut run = || -> Result<CheckResult, VerifyError> {
        let s = ctx.full_s();
        let top = ctx.level_x(&ctx.w.clone(), &s);
        let kx = ctx.level_x(x, &s);
        let ksmall = ctx.level_x(x, s_small);
        let desc = ctx.descent(&top, &kx)?;
        let eps_top = ctx.eps_r1(&top)?;
        let lhs = desc.norm_power(&eps_top, &kx.kernel)?;
        let eps_small = ctx.eps_r1(&ksmall)?;
        let pushed = ctx.push(&eps_small, &kx, &ksmall)?;
        // the Euler factor as an element of Z[Gal(K_X/Q)]
        let g = kx.group().clone();
        let mut factor = GroupRingElement::one(&g);
        for v in s.iter().filter(|v| !s_small.contains(v)) {
            let p = v.prime().expect("finite");
            let fr = g.inv(kx.frobenius(p));
            factor = &factor * &(&GroupRingElement::one(&g) - &GroupRingElement::basis(&g, fr));
        }
        let lat = ctx.rubin(&kx, 1)?;
        let rhs = lat.scale(&pushed, &factor);
        let a = lat.base_coords(&lhs)?;
        let b = lat.base_coords(&rhs)?;
        let strs = |v: &[Integer]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Ok(CheckResult::exact(name.clone(), a == b, json!({ "lhs": strs(&a), "rhs": strs(&b) })))
    };
    run().unwrap_or_else(|e| CheckResult::failed(&name, &e))
}

/// Φ_{V′,V_small}(ε_{Q,S,T,V′}) = ε_{Q,S∖Y,T,V′∖Y} with V′ = S ∖ {v₀}.
pub fn check_ord_relation(ctx: &mut Context, v0: u64, y: &[u64]) -> CheckResult {
    let name = format!("ord_relation[v0={},Y={}]", v0, set_name(y));
    let mut run = || -> Result<CheckResult, VerifyError> {
        let s = ctx.full_s();
        let small: Vec<Place> = s.iter().cloned().filter(|v| !v.prime().map_or(false, |p| y.contains(&p))).collect();
        let q = ctx.rational_level(&s);
        let q_small = ctx.rational_level(&small);
        let big = ctx.eps_split(&s, Place::Finite(v0))?;
        let target = ctx.eps_split(&small, Place::Finite(v0))?;
        let target = ctx.push(&target, &q, &q_small)?;
        let units = ctx.units(&q)?;
        let units = units.lock().unwrap();
        let homs = y.iter().map(|&p| units.ord_hom(p)).collect::<Result<Vec<_>, _>>()?;
        let vp: Vec<u64> = s.iter().filter(|v| **v != Place::Finite(v0)).map(|v| v.key()).collect();
        let vs: Vec<u64> = vp.iter().cloned().filter(|k| !y.contains(k)).collect();
        let sign = sgn_perm(&vp, &vs)?;
        let lhs = phi_operator(&homs, sign, &big.wedge, &units.module)?;
        let flipped = phi_operator(&homs, -sign, &big.wedge, &units.module)?;
        let eq = lhs == target.wedge;
        let sign_sensitive = target.wedge.is_zero() || flipped != target.wedge;
        let strs = |w: &WedgeVector| w.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>();
        Ok(CheckResult::exact(
            name.clone(),
            eq && sign_sensitive,
            json!({
                "sign": sign,
                "lhs": strs(&lhs),
                "rhs": strs(&target.wedge),
                "flipped_sign_differs": sign_sensitive,
                "denominator": common_denominator(lhs.coords()).to_string(),
            }),
        ))
    };
    run().unwrap_or_else(|e| CheckResult::failed(&name, &e))
}

/// Functoriality for K′ = K_X with the full S: the intermediate identity
/// π(𝒩_{K/Q}(ε_K)) = ν_{K/K′}(𝒩_{K′/Q}(ε_{K′})) and the K′-level equality.
pub fn check_functoriality(ctx: &mut Context, x: &[u64]) -> Vec<CheckResult> {
    let d = ctx.d;
    let nx = set_name(x);
    let mut run = || -> Result<Vec<CheckResult>, VerifyError> {
        let s = ctx.full_s();
        let w = ctx.w.clone();
        let top = ctx.level_x(&w, &s);
        let kp = ctx.level_x(x, &s);
        let q = ctx.rational_level(&s);
        let pi = kp.quotient.clone();
        let lw = ctx.build_lx(&w)?;
        let lhs = lw.map_legs(|l| pi.push(l));
        let eps = ctx.eps_r1(&kp)?;
        let lat = ctx.rubin(&kp, 1)?;
        let nkp = cal_n(&eps, &lat, &identity_hom(kp.group()), d)?;
        let nu_kp = ctx.descent(&top, &kp)?.matrix()?;
        let rhs = nkp.map_base(&nu_kp);
        let intermediate = CheckResult::exact(
            format!("functoriality_intermediate{}", nx),
            lhs.equals(&rhs)?,
            json!({ "pi(L_W)": tensor_json(&lhs), "nu(N(eps'))": tensor_json(&rhs) }),
        );
        let rw = ctx.build_rx(&w)?;
        let nu_q = ctx.descent(&kp, &q)?.matrix()?;
        let r_kp = rw.map_legs(|l| pi.push(l)).map_base(&nu_q).at_level(d + 1, false);
        let level_eq = CheckResult::exact(
            format!("functoriality_conjecture{}", nx),
            nkp.equals(&r_kp)?,
            json!({ "N(eps')": tensor_json(&nkp), "nu(R')": tensor_json(&r_kp) }),
        );
        Ok(vec![intermediate, level_eq])
    };
    run().unwrap_or_else(|e| {
        vec![
            CheckResult::failed(format!("functoriality_intermediate{}", nx), &e),
            CheckResult::failed(format!("functoriality_conjecture{}", nx), &e),
        ]
    })
}

/// Σ_{v∈W} φ_v(u) ∈ I(H)² for every u in the basis of U(Q, S).
pub fn check_product_formula(ctx: &mut Context) -> CheckResult {
    let mut run = || -> Result<CheckResult, VerifyError> {
        let q = ctx.rational_level(&ctx.full_s());
        let units = ctx.units(&q)?;
        let units = units.lock().unwrap();
        let g = &ctx.inst.group;
        let test = AugmentationMembership::new(g, 2);
        let mut ok = true;
        let mut wit = Vec::new();
        for i in 0..units.rank() {
            let a = units.rational_value(i).ok_or_else(|| ArithmeticError::Algebra("non-rational unit".into()))?;
            let mut sum = GroupRingElement::zero(g);
            for &p in &ctx.w {
                sum = &sum + &phi_v(&ctx.inst, Place::Finite(p), &a, &ctx.dec, &ctx.w)?;
            }
            let inside = test.contains(&sum);
            ok &= inside;
            wit.push(json!({ "u": a.to_string(), "in_I2": inside }));
        }
        Ok(CheckResult::exact("product_formula", ok, Value::Array(wit)))
    };
    run().unwrap_or_else(|e| CheckResult::failed("product_formula", &e))
}

/// Runs every check on one instance. Subsets X are processed small to large.
pub fn verify_instance(inst: Arc<FieldInstance>, cache: Option<LValueCache>) -> Result<InstanceReport, VerifyError> {
    let start = Instant::now();
    let mut ctx = Context::new(inst.clone(), cache)?;
    let mut checks = vec![check_product_formula(&mut ctx)];
    for x in ctx.nonempty_subsets() {
        checks.push(check_main_at(&mut ctx, &x));
    }
    for x in ctx.proper_subsets() {
        checks.extend(check_lemma52(&mut ctx, &x));
    }
    checks.push(check_lemma53(&mut ctx));
    checks.push(check_lemma54(&mut ctx));
    for x in ctx.proper_subsets() {
        let sx = ctx.s_x(&x);
        checks.push(check_norm_relation(&mut ctx, &x, &sx));
    }
    let s = ctx.full_s();
    checks.push(check_norm_relation(&mut ctx, &[], &s));
    for v0 in ctx.w.clone() {
        let rest: Vec<u64> = ctx.w.iter().cloned().filter(|&p| p != v0).collect();
        for y in subsets(&rest).into_iter().filter(|y| !y.is_empty()) {
            checks.push(check_ord_relation(&mut ctx, v0, &y));
        }
    }
    for x in ctx.proper_subsets() {
        checks.extend(check_functoriality(&mut ctx, &x));
    }
    Ok(finish(ctx, checks, start))
}

fn finish(mut ctx: Context, mut checks: Vec<CheckResult>, start: Instant) -> InstanceReport {
    checks.extend(ctx.numeric.drain(..));
    let verdict = checks.iter().all(|c| c.pass);
    InstanceReport {
        config: ctx.inst.config.clone(),
        checks,
        verdict,
        precision: ctx.inst.config.precision,
        denominators: ctx.denominators.clone(),
        cache_hits: ctx.cache_hits(),
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Only the inclusion–exclusion lemmas (5.2 for every proper X, 5.3, 5.4).
pub fn verify_lemmas(inst: Arc<FieldInstance>, cache: Option<LValueCache>) -> Result<InstanceReport, VerifyError> {
    let start = Instant::now();
    let mut ctx = Context::new(inst, cache)?;
    let mut checks = Vec::new();
    for x in ctx.proper_subsets() {
        checks.extend(check_lemma52(&mut ctx, &x));
    }
    checks.push(check_lemma53(&mut ctx));
    checks.push(check_lemma54(&mut ctx));
    Ok(finish(ctx, checks, start))
}

/// Fills the cache with every leading term the full verification reads.
pub fn warm_cache(inst: Arc<FieldInstance>, cache: &LValueCache) -> Result<usize, VerifyError> {
    let ctx = Context::new(inst, None)?;
    let mut n = 0;
    for x in subsets(&ctx.w) {
        let sx = ctx.s_x(&x);
        for s in [sx.clone(), ctx.full_s()] {
            n += cache.warm(&ctx.level_x(&x, &s))?;
        }
        n += cache.warm(&ctx.rational_level(&sx))?;
    }
    Ok(n)
}

/// Builds the instance (admissibility and hypotheses first) and verifies it.
pub fn verify(config: &InstanceConfig, cache: Option<LValueCache>) -> Result<InstanceReport, VerifyError> {
    let inst = build_instance(config)?;
    verify_instance(inst, cache)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagship() -> InstanceConfig {
        InstanceConfig {
            prime_powers: vec![(5, 1), (7, 1)],
            s: vec![Place::Infinite, Place::Finite(5), Place::Finite(7)],
            t: vec![3],
            v0: Some(Place::Finite(7)),
            ..Default::default()
        }
    }

    #[test]
    fn flagship_pieces() {
        let inst = build_instance(&flagship()).unwrap();
        let mut ctx = Context::new(inst, None).unwrap();
        assert_eq!(ctx.d, 1);
        let pf = check_product_formula(&mut ctx);
        assert!(pf.pass, "{:?}", pf);
        for x in ctx.nonempty_subsets() {
            let c = check_main_at(&mut ctx, &x);
            assert!(c.pass, "{}", serde_json::to_string(&c).unwrap());
        }
    }

    fn assert_all_pass(report: &InstanceReport) {
        let failed: Vec<String> =
            report.checks.iter().filter(|c| !c.pass).map(|c| serde_json::to_string(c).unwrap()).collect();
        assert!(failed.is_empty(), "failed checks:\n{}", failed.join("\n"));
    }

    #[test]
    fn flagship_verifies() {
        let report = verify(&flagship(), None).unwrap();
        assert_all_pass(&report);
        for name in ["main{5,7}", "lemma52i{5}", "lemma52ii{7}", "lemma53", "lemma54", "product_formula"] {
            assert!(report.check(name).is_some(), "{} missing", name);
        }
    }

    #[test]
    fn second_instance_verifies() {
        let c = InstanceConfig {
            prime_powers: vec![(3, 2), (5, 1)],
            s: vec![Place::Infinite, Place::Finite(3), Place::Finite(5)],
            t: vec![7],
            v0: Some(Place::Finite(5)),
            ..Default::default()
        };
        assert_all_pass(&verify(&c, None).unwrap());
    }

    #[test]
    fn single_prime_main_agrees_with_norm_relation() {
        let c = InstanceConfig {
            prime_powers: vec![(5, 1)],
            s: vec![Place::Infinite, Place::Finite(5)],
            t: vec![3],
            v0: Some(Place::Finite(5)),
            ..Default::default()
        };
        let report = verify(&c, None).unwrap();
        assert_all_pass(&report);
        assert!(report.check("main{5}").unwrap().pass);
        assert!(report.check("norm_relation[X={},S={inf,5}]").unwrap().pass);
    }
}
