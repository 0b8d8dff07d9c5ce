use num_traits::Zero;

use super::series::{BivariateSeries, Series};
use crate::error::{Error, Result};
use crate::model::{Displacement, TreeModel};
use crate::num::{rat, Rational, Scalar};

/// f_p(q) = P(S_p = q) for the ν-walk, p ≤ p_max, q ≤ q_max.
#[derive(Debug, Clone, PartialEq)]
pub struct FTable<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> FTable<S> {
    pub fn p_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn q_max(&self) -> usize {
        self.rows[0].len() - 1
    }

    /// `None` outside the computed range.
    pub fn get(&self, p: usize, q: usize) -> Option<&S> {
        self.rows.get(p)?.get(q)
    }

    pub fn row(&self, p: usize) -> &[S] {
        &self.rows[p]
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FTable<T> {
        FTable { rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }
}

pub fn f_table<S: Scalar>(nu: &Series<S>, p_max: usize, q_max: usize) -> Result<FTable<S>> {
    if nu.order() < q_max {
        return Err(Error::Domain(format!("ν known to order {} < q_max = {q_max}", nu.order())));
    }
    let nu = nu.truncate(q_max);
    let mut rows = Vec::with_capacity(p_max + 1);
    let mut cur = Series::constant(S::one(), q_max);
    for _ in 0..=p_max {
        rows.push(cur.coeffs().to_vec());
        cur = cur.mul_trunc(&nu);
    }
    Ok(FTable { rows })
}

/// f̃_p(q, l): joint law of the total number of label-0 leaves and total edge count of
/// p independent Π⁺ excursions.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<S> {
    /// cells[p] has z-degree q and u-degree l
    cells: Vec<BivariateSeries<S>>,
}

impl<S: Scalar> JointTable<S> {
    pub fn p_max(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn q_max(&self) -> usize {
        self.cells[0].dims().0
    }

    pub fn l_max(&self) -> usize {
        self.cells[0].dims().1
    }

    /// `None` outside the computed range.
    pub fn get(&self, p: usize, q: usize, l: usize) -> Option<S> {
        if p > self.p_max() || q > self.q_max() || l > self.l_max() {
            return None;
        }
        Some(self.cells[p].get(q, l))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> JointTable<T> {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let (dz, du) = c.dims();
                let mut out = BivariateSeries::zero(dz, du);
                for i in 0..=dz {
                    for j in 0..=du {
                        out.set(i, j, f(&c.get(i, j)));
                    }
                }
                out
            })
            .collect();
        JointTable { cells }
    }
}

pub const JOINT_TABLE_CELLS: u64 = 10_000_000;

pub fn joint_table(model: &TreeModel, p_max: usize, q_max: usize, l_max: usize) -> Result<JointTable<Rational>> {
    joint_table_cap(model, p_max, q_max, l_max, JOINT_TABLE_CELLS)
}

pub fn joint_table_cap(
    model: &TreeModel,
    p_max: usize,
    q_max: usize,
    l_max: usize,
    max_cells: u64,
) -> Result<JointTable<Rational>> {
    let cells = (p_max as u64 + 1)
        .saturating_mul(q_max as u64 + 1)
        .saturating_mul(l_max as u64 + 1);
    if cells > max_cells {
        return Err(Error::resource("joint table cells", max_cells));
    }
    let single = single_excursion(model, l_max)?;
    let mut one = BivariateSeries::zero(q_max, l_max);
    for q in 0..=q_max {
        for l in 0..=l_max {
            one.set(q, l, single.get(q, l));
        }
    }
    let mut out = Vec::with_capacity(p_max + 1);
    let mut cur = BivariateSeries::constant(Rational::from_integer(1.into()), q_max, l_max);
    for _ in 0..=p_max {
        let next = cur.mul(&one);
        out.push(cur);
        cur = next;
    }
    Ok(JointTable { cells: out })
}

/// Σ over Π⁺ excursions with at most `l` edges of Π⁺(τ) z^{n_τ} u^{|τ|}.
///
/// A_h is the generating function of the subtree of a vertex labelled h, cut at label 0.
/// A_0 = z, and a vertex above label l cannot reach 0 within budget, so there A_h is the
/// plain size generating function T(u).
fn single_excursion(model: &TreeModel, l: usize) -> Result<BivariateSeries<Rational>> {
    let dz = l.max(1);
    let zero = BivariateSeries::<Rational>::zero(dz, l);
    let one = BivariateSeries::constant(rat(1, 1), dz, l);
    let arities = model.arities_up_to(l);

    let offspring_sum = |child: &dyn Fn(i8) -> BivariateSeries<Rational>| -> BivariateSeries<Rational> {
        let mut acc = zero.clone();
        match &model.displacement {
            Displacement::IidPm1 | Displacement::IidPm01 => {
                let (incs, w): (&[i8], Rational) = match model.displacement {
                    Displacement::IidPm1 => (&[-1, 1], rat(1, 2)),
                    _ => (&[-1, 0, 1], rat(1, 3)),
                };
                let mut step = zero.clone();
                for &e in incs {
                    step = step.add(&child(e));
                }
                let step = step.scale(&w).shift_u(1);
                let mut pow = one.clone();
                let mut d = 0;
                for &a in &arities {
                    while d < a {
                        pow = pow.mul(&step);
                        d += 1;
                    }
                    acc = acc.add(&pow.scale(&model.xi(a)));
                }
            }
            Displacement::PerArity(_) => {
                for &a in &arities {
                    let xi = model.xi(a);
                    for (v, p) in model.displacement_support(a) {
                        let mut term = one.clone();
                        for &e in &v {
                            term = term.mul(&child(e).shift_u(1));
                        }
                        acc = acc.add(&term.scale(&(&xi * &p)));
                    }
                }
            }
        }
        acc
    };

    let mut t = zero.clone();
    for _ in 0..=l {
        let prev = t.clone();
        t = offspring_sum(&|_| prev.clone());
    }

    let mut z = zero.clone();
    z.set(1, 0, rat(1, 1));
    // a[h] for h = 0..=l+1; a[l+1] stands for every label above l
    let mut a = vec![zero.clone(); l + 2];
    a[0] = z;
    a[l + 1] = t;
    for _ in 0..=l {
        let prev = a.clone();
        for h in 1..=l {
            a[h] = offspring_sum(&|e| prev[((h as i64 + e as i64) as usize).min(l + 1)].clone());
        }
    }
    Ok(a[1].clone())
}

/// B(z, u) solving B = ¼(1 + zu)(1 + u·B(B(z,u), u)), exact up to u^l.
pub fn bivariate_incomplete_binary(l: usize) -> BivariateSeries<Rational> {
    let dz = l.max(1);
    let mut left = BivariateSeries::constant(rat(1, 1), dz, l);
    left.set(1, 1, rat(1, 1));
    let left = left.scale(&rat(1, 4));
    let one = BivariateSeries::constant(rat(1, 1), dz, l);
    let mut b = BivariateSeries::<Rational>::zero(dz, l);
    for _ in 0..=l {
        let inner = b.compose_z(&b);
        b = left.mul(&one.add(&inner.shift_u(1)));
    }
    b
}

impl<S: Scalar> FTable<S> {
    /// Σ_q f_p(q) for q within range.
    pub fn row_mass(&self, p: usize) -> S {
        self.rows[p].iter().cloned().fold(S::zero(), |a, x| a + x)
    }
}

impl JointTable<Rational> {
    /// Σ_{l ≤ l_max} f̃_p(q, l).
    pub fn edge_marginal(&self, p: usize, q: usize) -> Rational {
        (0..=self.l_max()).map(|l| self.cells[p].get(q, l)).fold(Rational::zero(), |a, x| a + x)
    }
}
