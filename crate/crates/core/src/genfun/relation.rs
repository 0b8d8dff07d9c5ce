//! Exact solution of the functional equation for g_ν.
//!
//! G(0) is nonzero, so G∘G is not a formal composition and plain iteration never fixes a
//! coefficient exactly. Instead we solve in floating point, recover a polynomial relation
//! P(z, G) = 0 from the float coefficients, certify it exactly against the equation, and
//! expand the relevant root of P by Hensel lifting.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use super::series::Series;
use crate::error::{Error, Result};
use crate::model::{Displacement, Offspring, TreeModel};
use crate::num::{int, rational_sqrt, rationalize, Rational, Scalar};

/// Right-hand side of the functional equation in the variables z, y = G, w = G∘G.
/// An increment −1 contributes z, 0 contributes y and +1 contributes w.
#[derive(Debug, Clone)]
pub(crate) enum Equation {
    /// p / (1 − (1−p)(m_z z + m_y y + m_w w)).
    Geometric { p: Rational, m: [Rational; 3] },
    /// Σ c · z^a y^b w^c.
    Finite(BTreeMap<[u32; 3], Rational>),
}

const MAX_VECTORS: usize = 1 << 20;

impl Equation {
    pub(crate) fn of(model: &TreeModel) -> Result<Self> {
        let iid = |d: &Displacement| -> Option<[Rational; 3]> {
            match d {
                Displacement::IidPm1 => Some([Rational::new(1.into(), 2.into()), int(0), Rational::new(1.into(), 2.into())]),
                Displacement::IidPm01 => {
                    let t = Rational::new(1.into(), 3.into());
                    Some([t.clone(), t.clone(), t])
                }
                Displacement::PerArity(_) => None,
            }
        };
        match &model.offspring {
            Offspring::GeometricHalf | Offspring::Geometric(_) => {
                let p = match &model.offspring {
                    Offspring::Geometric(p) => p.clone(),
                    _ => Rational::new(1.into(), 2.into()),
                };
                let m = iid(&model.displacement).ok_or_else(|| {
                    Error::Unsupported("geometric offspring with per-arity displacements".into())
                })?;
                Ok(Equation::Geometric { p, m })
            }
            Offspring::Table(_) => {
                let mut terms = BTreeMap::new();
                let top = model.max_arity().unwrap_or(0);
                for d in model.arities_up_to(top) {
                    let count = match model.displacement {
                        Displacement::IidPm1 => 1usize.checked_shl(d as u32),
                        Displacement::IidPm01 => 3usize.checked_pow(d as u32),
                        Displacement::PerArity(_) => Some(0),
                    };
                    if count.map_or(true, |c| c > MAX_VECTORS) {
                        return Err(Error::resource("displacement vectors", MAX_VECTORS as u64));
                    }
                    let xi = model.xi(d);
                    for (v, p) in model.displacement_support(d) {
                        let mut e = [0u32; 3];
                        for &x in &v {
                            e[(x + 1) as usize] += 1;
                        }
                        let cell = terms.entry(e).or_insert_with(Rational::zero);
                        *cell += &xi * &p;
                    }
                }
                terms.retain(|_, c: &mut Rational| !c.is_zero());
                Ok(Equation::Finite(terms))
            }
        }
    }

    /// Evaluates the right-hand side on truncated series.
    pub(crate) fn rhs<S: Scalar>(&self, z: &Series<S>, y: &Series<S>, w: &Series<S>) -> Result<Series<S>> {
        let d = z.order();
        match self {
            Equation::Geometric { p, m } => {
                let q = S::from_rational(&(int(1) - p));
                let mix = &(&z.scale(&S::from_rational(&m[0])) + &y.scale(&S::from_rational(&m[1])))
                    + &w.scale(&S::from_rational(&m[2]));
                let den = &Series::constant(S::one(), d) - &mix.scale(&q);
                Ok(den.inverse()?.scale(&S::from_rational(p)))
            }
            Equation::Finite(terms) => {
                let base = [z, y, w];
                let mut pows: [Vec<Series<S>>; 3] = Default::default();
                let mut acc = Series::zero(d);
                for (e, c) in terms {
                    let mut term = Series::constant(S::from_rational(c), d);
                    for var in 0..3 {
                        let k = e[var] as usize;
                        let table = &mut pows[var];
                        if table.is_empty() {
                            table.push(Series::constant(S::one(), d));
                        }
                        while table.len() <= k {
                            let next = table.last().unwrap().mul_trunc(base[var]);
                            table.push(next);
                        }
                        if k > 0 {
                            term = term.mul_trunc(&table[k]);
                        }
                    }
                    acc = &acc + &term;
                }
                Ok(acc)
            }
        }
    }

    /// (F, ∂F/∂y, ∂F/∂w) on truncated series.
    pub(crate) fn partials<S: Scalar>(
        &self,
        z: &Series<S>,
        y: &Series<S>,
        w: &Series<S>,
    ) -> Result<(Series<S>, Series<S>, Series<S>)> {
        let d = z.order();
        match self {
            Equation::Geometric { p, m } => {
                let q = S::from_rational(&(int(1) - p));
                let mix = &(&z.scale(&S::from_rational(&m[0])) + &y.scale(&S::from_rational(&m[1])))
                    + &w.scale(&S::from_rational(&m[2]));
                let inv = (&Series::constant(S::one(), d) - &mix.scale(&q)).inverse()?;
                let f = inv.scale(&S::from_rational(p));
                let inv2 = inv.mul_trunc(&inv);
                let pq = S::from_rational(p) * q;
                let fy = inv2.scale(&(pq.clone() * S::from_rational(&m[1])));
                let fw = inv2.scale(&(pq * S::from_rational(&m[2])));
                Ok((f, fy, fw))
            }
            Equation::Finite(terms) => {
                let base = [z, y, w];
                let mut pows: [Vec<Series<S>>; 3] = Default::default();
                for (var, table) in pows.iter_mut().enumerate() {
                    let top = terms.keys().map(|e| e[var]).max().unwrap_or(0) as usize;
                    table.push(Series::constant(S::one(), d));
                    for _ in 0..top {
                        let next = table.last().unwrap().mul_trunc(base[var]);
                        table.push(next);
                    }
                }
                let mono = |e: [u32; 3]| -> Series<S> {
                    let mut t = pows[0][e[0] as usize].mul_trunc(&pows[1][e[1] as usize]);
                    t = t.mul_trunc(&pows[2][e[2] as usize]);
                    t
                };
                let (mut f, mut fy, mut fw) = (Series::zero(d), Series::zero(d), Series::zero(d));
                for (e, c) in terms {
                    let c = S::from_rational(c);
                    f = &f + &mono(*e).scale(&c);
                    if e[1] > 0 {
                        let k = S::from_i64(e[1] as i64) * c.clone();
                        fy = &fy + &mono([e[0], e[1] - 1, e[2]]).scale(&k);
                    }
                    if e[2] > 0 {
                        let k = S::from_i64(e[2] as i64) * c.clone();
                        fw = &fw + &mono([e[0], e[1], e[2] - 1]).scale(&k);
                    }
                }
                Ok((f, fy, fw))
            }
        }
    }

    /// E(z,y,w), vanishing exactly on solutions: y − RHS, or y(1 − (1−p)m) − p.
    pub(crate) fn polynomial(&self) -> Poly3 {
        let y = Poly3::monomial(int(1), [0, 1, 0]);
        match self {
            Equation::Geometric { p, m } => {
                let q = int(1) - p;
                let mut mix = Poly3::zero();
                for (var, c) in m.iter().enumerate() {
                    let mut e = [0; 3];
                    e[var] = 1;
                    mix = mix.add(&Poly3::monomial(c * &q, e));
                }
                y.mul(&Poly3::constant(int(1)).sub(&mix)).sub(&Poly3::constant(p.clone()))
            }
            Equation::Finite(terms) => {
                let mut rhs = Poly3::zero();
                for (e, c) in terms {
                    rhs = rhs.add(&Poly3::monomial(c.clone(), *e));
                }
                y.sub(&rhs)
            }
        }
    }
}

/// Sparse polynomial in (z, y, w) with rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Poly3 {
    t: BTreeMap<[u32; 3], Rational>,
}

impl Poly3 {
    pub(crate) fn zero() -> Self {
        Self::default()
    }

    pub(crate) fn constant(c: Rational) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub(crate) fn monomial(c: Rational, e: [u32; 3]) -> Self {
        let mut p = Self::zero();
        p.push(e, c);
        p
    }

    fn push(&mut self, e: [u32; 3], c: Rational) {
        if c.is_zero() {
            return;
        }
        let cell = self.t.entry(e).or_insert_with(Rational::zero);
        *cell += c;
        if cell.is_zero() {
            self.t.remove(&e);
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.t.is_empty()
    }

    pub(crate) fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.t {
            r.push(*e, c.clone());
        }
        r
    }

    pub(crate) fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.t {
            r.push(*e, -c);
        }
        r
    }

    pub(crate) fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (e1, c1) in &self.t {
            for (e2, c2) in &o.t {
                r.push([e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]], c1 * c2);
            }
        }
        r
    }

    pub(crate) fn degree(&self, var: usize) -> Option<u32> {
        self.t.keys().map(|e| e[var]).max()
    }

    /// Coefficient of var^k, as a polynomial in the other variables.
    fn coeff_in(&self, var: usize, k: u32) -> Self {
        let mut r = Self::zero();
        for (e, c) in &self.t {
            if e[var] == k {
                let mut e2 = *e;
                e2[var] = 0;
                r.push(e2, c.clone());
            }
        }
        r
    }

    fn shift(&self, var: usize, k: u32) -> Self {
        let mut r = Self::zero();
        for (e, c) in &self.t {
            let mut e2 = *e;
            e2[var] += k;
            r.push(e2, c.clone());
        }
        r
    }

    /// Pseudo-remainder of self by b with respect to `var`.
    pub(crate) fn prem(&self, b: &Self, var: usize) -> Result<Self> {
        let db = b.degree(var).ok_or_else(|| Error::Internal("pseudo-division by zero".into()))?;
        let lb = b.coeff_in(var, db);
        let mut r = self.clone();
        while let Some(dr) = r.degree(var) {
            if dr < db || r.is_zero() {
                break;
            }
            let lr = r.coeff_in(var, dr);
            r = lb.mul(&r).sub(&lr.mul(&b.shift(var, dr - db)));
        }
        Ok(r)
    }

    /// Renames variables: exponent triple e becomes f(e).
    pub(crate) fn map_exps(&self, f: impl Fn([u32; 3]) -> [u32; 3]) -> Self {
        let mut r = Self::zero();
        for (e, c) in &self.t {
            r.push(f(*e), c.clone());
        }
        r
    }

    pub(crate) fn eval_f64(&self, x: [f64; 3]) -> f64 {
        self.t
            .iter()
            .map(|(e, c)| {
                Scalar::to_f64(c) * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
            })
            .sum()
    }
}

/// P(z, y) = a(z) y² + b(z) y + c(z); coefficient vectors in z.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

impl Relation {
    fn to_poly(&self) -> Poly3 {
        let mut p = Poly3::zero();
        for (ydeg, coeffs) in [(2, &self.a), (1, &self.b), (0, &self.c)] {
            for (k, x) in coeffs.iter().enumerate() {
                p.push([k as u32, ydeg, 0], x.clone());
            }
        }
        p
    }

    /// Removes a common factor z^k.
    fn reduce(&mut self) {
        let low = |v: &Vec<Rational>| v.iter().position(|x| !x.is_zero()).unwrap_or(usize::MAX);
        let k = low(&self.a).min(low(&self.b)).min(low(&self.c));
        if k == usize::MAX || k == 0 {
            return;
        }
        for v in [&mut self.a, &mut self.b, &mut self.c] {
            let n = v.len().min(k);
            v.drain(..n);
        }
    }

    fn coeff(v: &[Rational], k: usize) -> Rational {
        v.get(k).cloned().unwrap_or_else(Rational::zero)
    }
}

/// Float solution of the functional equation to order `order`, iterated from G = 0.
pub fn float_fixed_point(model: &TreeModel, order: usize) -> Result<Series<f64>> {
    let eq = Equation::of(model)?;
    float_fixed_point_eq(&eq, order)
}

const WARMUP: usize = 30;
const NEWTON_CAP: usize = 60;

/// A few plain iterations from G = 0, then Newton's method on Φ(G) = G − F(z, G, G∘G).
/// Plain iteration alone converges only sublinearly because the model is critical.
fn float_fixed_point_eq(eq: &Equation, order: usize) -> Result<Series<f64>> {
    let n = order + 1;
    let z = Series::<f64>::var(order);
    let mut g = Series::<f64>::zero(order);
    for _ in 0..WARMUP {
        let w = g.compose(&g);
        g = eq.rhs(&z, &g, &w)?;
    }
    for _ in 0..NEWTON_CAP {
        let w = g.compose(&g);
        let (f, fy, fw) = eq.partials(&z, &g, &w)?;
        let dg_at_g = g.derivative().compose(&g);
        let diag = &fy + &fw.mul_trunc(&dg_at_g);
        // powers[k] = G^k, the columns of δ ↦ δ∘G
        let mut powers = Vec::with_capacity(n);
        powers.push(Series::constant(1.0, order));
        for k in 1..n {
            let next = powers[k - 1].mul_trunc(&g);
            powers.push(next);
        }
        let mut jac = DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            for i in 0..=j {
                jac[(j, i)] -= diag.coeff(j - i);
            }
        }
        // − M_{F_w} · C
        for k in 0..n {
            let col = powers[k].coeffs();
            for j in 0..n {
                let mut acc = 0.0;
                for i in 0..=j {
                    acc += fw.coeff(j - i) * col[i];
                }
                jac[(j, k)] -= acc;
            }
        }
        let resid = nalgebra::DVector::from_iterator(n, (0..n).map(|j| f.coeff(j) - g.coeff(j)));
        let delta = jac
            .lu()
            .solve(&resid)
            .ok_or_else(|| Error::Convergence("singular Newton system".into()))?;
        let step = delta.amax();
        g = Series::from_coeffs((0..n).map(|j| g.coeff(j) + delta[j]).collect(), order);
        if step < 1e-15 {
            return Ok(g);
        }
    }
    Err(Error::Convergence(format!("float fixed point not reached in {NEWTON_CAP} Newton steps")))
}

const WORK_ORDER: usize = 320;
const ROWS: usize = 40;
const MAX_ZDEG: usize = 6;

/// Finds an integer-free rational relation between z and G from float coefficients.
fn find_relation(g: &Series<f64>) -> Option<Relation> {
    let d_all = g.order();
    let one = Series::<f64>::constant(1.0, d_all);
    let g2 = g.mul_trunc(g);
    for ydeg in 1..=2usize {
        for zdeg in 1..=MAX_ZDEG {
            let bases: Vec<&Series<f64>> = match ydeg {
                1 => vec![g, &one],
                _ => vec![&g2, g, &one],
            };
            let ncols = bases.len() * (zdeg + 1);
            let mut m = DMatrix::<f64>::zeros(ROWS, ncols);
            for (bi, s) in bases.iter().enumerate() {
                for k in 0..=zdeg {
                    for row in k..ROWS {
                        m[(row, bi * (zdeg + 1) + k)] = s.coeff(row - k);
                    }
                }
            }
            let svd = m.svd(false, true);
            let sv = svd.singular_values.clone();
            let mut idx: Vec<usize> = (0..sv.len()).collect();
            idx.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap());
            let (smin, s2, smax) = (sv[idx[0]], sv[idx[1]], sv[idx[sv.len() - 1]]);
            if smax == 0.0 || smin / smax >= 1e-6 || s2 < 1e3 * smin {
                continue;
            }
            let vt = svd.v_t.as_ref()?;
            let v: Vec<f64> = (0..ncols).map(|j| vt[(idx[0], j)]).collect();
            let scale = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            let q: Vec<Rational> = v.iter().map(|x| rationalize(x / scale, 10_000)).collect();
            let mut parts = q.chunks(zdeg + 1).map(|c| c.to_vec()).collect::<Vec<_>>();
            let c = parts.pop().unwrap();
            let b = parts.pop().unwrap();
            let a = parts.pop().unwrap_or_else(|| vec![Rational::zero(); zdeg + 1]);
            return Some(Relation { a, b, c });
        }
    }
    None
}

/// Checks exactly that every root y = G of P with G∘G on the branch seen numerically
/// satisfies E(z, G, G∘G) = 0.
fn certify(eq: &Equation, rel: &Relation, g: &Series<f64>) -> Result<()> {
    let p = rel.to_poly();
    if p.degree(1).unwrap_or(0) == 0 {
        return Err(Error::Internal("relation does not involve G".into()));
    }
    let e = eq.polynomial();
    // Q(y, w) = P(y, w)
    let q = p.map_exps(|x| [0, x[0], x[1]]);
    let r = e.prem(&q, 2)?;
    if r.degree(2).unwrap_or(0) > 1 {
        return Err(Error::Internal("remainder of degree > 1 in G∘G".into()));
    }
    let r1 = r.coeff_in(2, 1);
    let r0 = r.coeff_in(2, 0);
    let fail = |what: &str| Err(Error::Internal(format!("relation certification failed: {what}")));
    if r1.prem(&p, 1)?.is_zero() {
        if !r0.prem(&p, 1)?.is_zero() {
            return fail("constant remainder");
        }
        return Ok(());
    }
    let qa = q.coeff_in(2, 2);
    let qb = q.coeff_in(2, 1);
    let qc = q.coeff_in(2, 0);
    let t = qa.mul(&r0).mul(&r0).sub(&qb.mul(&r0).mul(&r1)).add(&qc.mul(&r1).mul(&r1));
    if !t.prem(&p, 1)?.is_zero() {
        return fail("eliminant not divisible by P");
    }
    for i in 1..=5 {
        let z = i as f64 / 10.0;
        let y = g.eval_f64(z);
        let w_true = g.eval_f64(y);
        let r1v = r1.eval_f64([z, y, 0.0]);
        if r1v.abs() < 1e-9 {
            return fail("degenerate branch point");
        }
        let w_star = -r0.eval_f64([z, y, 0.0]) / r1v;
        if (w_star - w_true).abs() > 1e-9 {
            return fail("wrong branch");
        }
        let a = qa.eval_f64([0.0, y, 0.0]);
        if a.abs() > 1e-12 {
            let other = -qb.eval_f64([0.0, y, 0.0]) / a - w_star;
            if (other - w_star).abs() < 1e-6 {
                return fail("branches not separated");
            }
        }
    }
    Ok(())
}

/// Expands the root of P(z, y) = 0 whose constant term is closest to `y0_hint`.
fn hensel(rel: &Relation, y0_hint: f64, order: usize) -> Result<Series<Rational>> {
    let mut rel = rel.clone();
    rel.reduce();
    let (a0, b0, c0) = (Relation::coeff(&rel.a, 0), Relation::coeff(&rel.b, 0), Relation::coeff(&rel.c, 0));
    let roots: Vec<Rational> = if a0.is_zero() {
        if b0.is_zero() {
            return Err(Error::Internal("relation degenerate at z = 0".into()));
        }
        vec![-&c0 / &b0]
    } else {
        let disc = &b0 * &b0 - int(4) * &a0 * &c0;
        let s = rational_sqrt(&disc).ok_or_else(|| Error::Internal("irrational constant term".into()))?;
        vec![(-&b0 + &s) / (int(2) * &a0), (-&b0 - &s) / (int(2) * &a0)]
    };
    let y0 = roots
        .into_iter()
        .min_by(|x, y| {
            let dx = (Scalar::to_f64(x) - y0_hint).abs();
            let dy = (Scalar::to_f64(y) - y0_hint).abs();
            dx.partial_cmp(&dy).unwrap()
        })
        .unwrap();
    let slope = int(2) * &a0 * &y0 + &b0;
    if slope.is_zero() {
        return Err(Error::Unsupported("double root of the relation at z = 0".into()));
    }
    let mut y = vec![Rational::zero(); order + 1];
    y[0] = y0;
    for n in 1..=order {
        // [z^n] P(z, y) with y_n still zero
        let mut rest = Relation::coeff(&rel.c, n);
        for i in 0..=n {
            let bi = Relation::coeff(&rel.b, i);
            if !bi.is_zero() {
                rest += &bi * &y[n - i];
            }
            let ai = Relation::coeff(&rel.a, i);
            if !ai.is_zero() {
                let m = n - i;
                let mut sq = Rational::zero();
                for j in 0..=m {
                    sq += &y[j] * &y[m - j];
                }
                rest += &ai * &sq;
            }
        }
        y[n] = -rest / &slope;
    }
    Ok(Series::from_coeffs(y, order))
}

/// Exact ν coefficients (the law of n_τ under Π⁺) to order `order`.
pub fn solve_nu_gf(model: &TreeModel, order: usize) -> Result<Series<Rational>> {
    Ok(solve_with_relation(model, order)?.0)
}

/// As [`solve_nu_gf`], also returning the certified relation P(z, g_ν) = 0.
pub fn solve_with_relation(model: &TreeModel, order: usize) -> Result<(Series<Rational>, Relation)> {
    let eq = Equation::of(model)?;
    let work = WORK_ORDER.max(order + ROWS);
    let g = float_fixed_point_eq(&eq, work)?;
    let rel = find_relation(&g)
        .ok_or_else(|| Error::Unsupported("no polynomial relation of degree <= 2 in G found".into()))?;
    certify(&eq, &rel, &g)?;
    let exact = hensel(&rel, g.coeff(0), order)?;
    let check = order.min(ROWS);
    if exact.truncate(check).to_f64().max_abs_diff(&g.truncate(check)) > 1e-6 {
        return Err(Error::Internal("exact expansion disagrees with the float solution".into()));
    }
    if let Some(k) = exact.coeffs().iter().position(|c| c.is_negative()) {
        return Err(Error::Internal(format!("negative probability at z^{k}")));
    }
    let partial: Rational = exact.coeffs().iter().sum();
    if partial > Rational::one() {
        return Err(Error::Internal("coefficients sum past 1".into()));
    }
    Ok((exact, rel))
}

/// ν₋: the same law for negative excursions, i.e. for the mirrored model.
pub fn solve_nu_minus_gf(model: &TreeModel, order: usize) -> Result<Series<Rational>> {
    solve_nu_gf(&model.mirrored(), order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Builtin;
    use crate::num::rat;

    fn r(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    #[test]
    fn prem_basic() {
        // (y^2 - z) mod (y - z) = z^2 - z
        let a = Poly3::monomial(int(1), [0, 2, 0]).sub(&Poly3::monomial(int(1), [1, 0, 0]));
        let b = Poly3::monomial(int(1), [0, 1, 0]).sub(&Poly3::monomial(int(1), [1, 0, 0]));
        let expect = Poly3::monomial(int(1), [2, 0, 0]).sub(&Poly3::monomial(int(1), [1, 0, 0]));
        assert_eq!(a.prem(&b, 1).unwrap(), expect);
    }

    #[test]
    fn recovers_known_relations() {
        let expect = [
            (Builtin::GeomPm1, r(&[(0, 1), (-2, 9), (1, 18)]), r(&[(-4, 9), (1, 1), (-2, 9)]), r(&[(5, 18), (-4, 9)])),
            (Builtin::IncompleteBinary, r(&[(-5, 16), (-1, 16)]), r(&[(-3, 16), (1, 1), (-1, 16)]), r(&[(1, 8), (-3, 16), (-5, 16)])),
        ];
        for (b, a, bb, c) in expect {
            let (_, rel) = solve_with_relation(&TreeModel::builtin(b), 10).unwrap();
            let trim = |v: &Vec<Rational>| {
                let mut v = v.clone();
                while v.last().is_some_and(|x| x.is_zero()) {
                    v.pop();
                }
                v
            };
            assert_eq!(trim(&rel.a), a, "{b:?}");
            assert_eq!(trim(&rel.b), bb, "{b:?}");
            assert_eq!(trim(&rel.c), c, "{b:?}");
        }
    }

    #[test]
    fn degenerate_model_is_linear() {
        // every vertex is a leaf: G = 1
        let m = TreeModel::new(Offspring::Table(vec![int(1)]), Displacement::IidPm1).unwrap();
        let g = solve_nu_gf(&m, 5).unwrap();
        assert_eq!(g.coeff(0), int(1));
        assert!(g.coeffs()[1..].iter().all(|c| c.is_zero()));
    }

    #[test]
    fn corrupted_relation_is_rejected() {
        let m = TreeModel::builtin(Builtin::CompleteBinary);
        let eq = Equation::of(&m).unwrap();
        let g = float_fixed_point_eq(&eq, 160).unwrap();
        let (_, mut rel) = solve_with_relation(&m, 5).unwrap();
        rel.c[0] += rat(1, 1000);
        assert!(certify(&eq, &rel, &g).is_err());
    }
}
