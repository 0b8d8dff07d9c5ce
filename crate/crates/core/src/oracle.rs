//! Exhaustive exact computations used to check the formulas: weighted tree enumeration,
//! exact laws of the conditioned chain, bicoloured and marked forest counts.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excursion::{decompose, reconstruct, Excursion, ExcursionDecomposition, Sign};
use crate::genfun::{joint_table, FTable};
use crate::kernel::{cond_transition_prob_shifted, profile_cardinality, CondState};
use crate::model::{Builtin, TreeModel};
use crate::num::{binomial, factorial, int, quarter_pow, Rational};
use crate::sampler::{run_chunks, SamplerConfig, TreeSampler};
use crate::tree::LabelledPlaneTree;

pub const ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub items: Vec<(LabelledPlaneTree, Rational)>,
    pub total: Rational,
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative integers.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(left - x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Number of positive-weight trees with e edges, for e ≤ edges, saturating.
fn tree_counts(model: &TreeModel, edges: usize) -> Vec<u64> {
    let mut count = vec![0u64; edges + 1];
    count[0] = 1;
    for e in 1..=edges {
        let mut c = 0u64;
        for d in model.arities_up_to(e).into_iter().filter(|&d| d >= 1) {
            let support = model.displacement_support(d).len() as u64;
            for comp in compositions(e - d, d) {
                let prod = comp.iter().fold(1u64, |a, &x| a.saturating_mul(count[x]));
                c = c.saturating_add(prod.saturating_mul(support));
            }
        }
        count[e] = c;
    }
    count
}

/// Π₀(|T| = e) for e ≤ edges, without listing trees.
pub fn size_mass(model: &TreeModel, edges: usize) -> Vec<Rational> {
    let mut mass = vec![Rational::zero(); edges + 1];
    mass[0] = model.xi(0);
    for e in 1..=edges {
        let mut m = Rational::zero();
        for d in model.arities_up_to(e).into_iter().filter(|&d| d >= 1) {
            let xi = model.xi(d);
            for comp in compositions(e - d, d) {
                m += comp.iter().fold(xi.clone(), |a, &x| a * &mass[x]);
            }
        }
        mass[e] = m;
    }
    mass
}

fn graft(children: &[(&LabelledPlaneTree, i8)]) -> LabelledPlaneTree {
    let mut parents = vec![None];
    let mut labels = vec![0i64];
    for &(t, inc) in children {
        let off = parents.len();
        for v in 0..t.len() {
            parents.push(Some(t.parent(v).map_or(0, |p| p + off)));
            labels.push(t.label(v) + inc as i64);
        }
    }
    LabelledPlaneTree::from_preorder(parents, labels).expect("grafted trees are in preorder")
}

pub fn enumerate_trees(model: &TreeModel, edges: usize) -> Result<WeightedEnsemble> {
    enumerate_trees_cap(model, edges, ENUMERATION_CAP)
}

/// Every tree rooted at 0 with `edges` edges and positive weight, each exactly once.
pub fn enumerate_trees_cap(model: &TreeModel, edges: usize, cap: u64) -> Result<WeightedEnsemble> {
    model.validate()?;
    let counts = tree_counts(model, edges);
    if counts.iter().any(|&c| c > cap) {
        return Err(Error::resource("enumerated trees", cap));
    }
    let mut memo: Vec<Vec<(LabelledPlaneTree, Rational)>> = Vec::with_capacity(edges + 1);
    memo.push(vec![(LabelledPlaneTree::single(0), model.xi(0))]);
    for e in 1..=edges {
        let mut out = Vec::with_capacity(counts[e] as usize);
        for d in model.arities_up_to(e).into_iter().filter(|&d| d >= 1) {
            let xi = model.xi(d);
            let support = model.displacement_support(d);
            for comp in compositions(e - d, d) {
                let lists: Vec<&Vec<(LabelledPlaneTree, Rational)>> = comp.iter().map(|&x| &memo[x]).collect();
                if lists.iter().any(|l| l.is_empty()) {
                    continue;
                }
                let mut idx = vec![0usize; d];
                'product: loop {
                    let w_children = idx.iter().zip(&lists).fold(Rational::one(), |a, (&i, l)| a * &l[i].1);
                    for (v, p) in &support {
                        let kids: Vec<(&LabelledPlaneTree, i8)> =
                            idx.iter().zip(&lists).zip(v).map(|((&i, l), &inc)| (&l[i].0, inc)).collect();
                        out.push((graft(&kids), &xi * p * &w_children));
                    }
                    let mut k = d;
                    loop {
                        if k == 0 {
                            break 'product;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < lists[k].len() {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
        }
        memo.push(out);
    }
    let items = memo.pop().unwrap();
    let total = items.iter().fold(Rational::zero(), |a, (_, w)| a + w);
    Ok(WeightedEnsemble { items, total })
}

/// Exact law of the path (X_m⁺, X_m⁻, M_m⁻) for m = 1 ..= V+1 of uniform binary trees
/// with V edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLaw {
    pub total_edges: usize,
    pub paths: BTreeMap<Vec<CondState>, Rational>,
}

pub fn exact_chain_law(total: usize) -> Result<ChainLaw> {
    let model = TreeModel::builtin(Builtin::IncompleteBinary);
    let ens = enumerate_trees(&model, total)?;
    let mut paths: BTreeMap<Vec<CondState>, Rational> = BTreeMap::new();
    for (t, w) in &ens.items {
        let prof = t.edge_profile()?;
        let path: Vec<CondState> = (1..=total as i64 + 1)
            .map(|m| CondState { p: prof.xp(m) as usize, q: prof.xm(m) as usize, v: prof.mass(m) as usize })
            .collect();
        *paths.entry(path).or_insert_with(Rational::zero) += w / &ens.total;
    }
    Ok(ChainLaw { total_edges: total, paths })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub history: Vec<CondState>,
    pub next: CondState,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub histories: usize,
    pub transitions: usize,
    pub discrepancies: Vec<Discrepancy>,
}

impl MarkovReport {
    pub fn ok(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Checks that next-state laws given the full history equal those given the current state,
/// and that those equal `kernel`.
pub fn verify_markov_with(
    law: &ChainLaw,
    kernel: impl Fn(CondState, CondState) -> Result<Rational>,
) -> Result<MarkovReport> {
    type Row = BTreeMap<CondState, Rational>;
    let mut by_history: BTreeMap<&[CondState], Row> = BTreeMap::new();
    let mut by_state: BTreeMap<CondState, Row> = BTreeMap::new();
    for (path, w) in &law.paths {
        for m in 1..path.len() {
            *by_history.entry(&path[..m]).or_default().entry(path[m]).or_insert_with(Rational::zero) += w;
            *by_state.entry(path[m - 1]).or_default().entry(path[m]).or_insert_with(Rational::zero) += w;
        }
    }
    let normalise = |row: &Row| {
        let s = row.values().fold(Rational::zero(), |a, x| a + x);
        row.iter().map(|(k, v)| (*k, v / &s)).collect::<Row>()
    };
    let state_law: BTreeMap<CondState, Row> = by_state.iter().map(|(k, r)| (*k, normalise(r))).collect();
    let mut report = MarkovReport { histories: by_history.len(), transitions: 0, discrepancies: Vec::new() };
    for (h, row) in &by_history {
        let cond = normalise(row);
        let s = *h.last().unwrap();
        let expect = &state_law[&s];
        for (next, p) in &cond {
            let e = expect.get(next).cloned().unwrap_or_else(Rational::zero);
            if *p != e {
                report.discrepancies.push(Discrepancy {
                    history: h.to_vec(),
                    next: *next,
                    observed: p.to_string(),
                    expected: e.to_string(),
                });
            }
        }
    }
    for (s, row) in &state_law {
        for (next, p) in row {
            report.transitions += 1;
            let k = kernel(*s, *next)?;
            if *p != k {
                report.discrepancies.push(Discrepancy {
                    history: vec![*s],
                    next: *next,
                    observed: p.to_string(),
                    expected: k.to_string(),
                });
            }
        }
        // the kernel must not put mass outside the observed support
        let mass = row.keys().map(|n| kernel(*s, *n)).collect::<Result<Vec<_>>>()?;
        let mass = mass.into_iter().fold(Rational::zero(), |a, x| a + x);
        if !mass.is_one() {
            report.discrepancies.push(Discrepancy {
                history: vec![*s],
                next: *s,
                observed: "1".into(),
                expected: format!("kernel mass {mass} on the observed support"),
            });
        }
    }
    Ok(report)
}

/// [`verify_markov_with`] against the conditioned binary-tree kernel. `w_shift` ≠ 0 gives
/// the corrupted kernel used as a negative control.
pub fn verify_markov_exact_shifted(law: &ChainLaw, w_shift: i64) -> Result<MarkovReport> {
    let v = law.total_edges;
    let ft = joint_table(&TreeModel::builtin(Builtin::IncompleteBinary), v + 2, v + 2, v + 1)?;
    verify_markov_with(law, |a, b| cond_transition_prob_shifted(&ft, v, a, b, w_shift))
}

pub fn verify_markov_exact(law: &ChainLaw) -> Result<MarkovReport> {
    verify_markov_exact_shifted(law, 0)
}

/// Number of bicoloured plane forests with `n` positive roots on labelled vertices
/// v_1..v_p (positive, `plus[j]` children) and u_1..u_q (negative, `minus[i]` children).
pub fn enumerate_bicoloured_forests(n: usize, plus: &[usize], minus: &[usize]) -> Result<BigInt> {
    let (p, q) = (plus.len(), minus.len());
    if n == 0 || p < n || p != n + minus.iter().sum::<usize>() || q != plus.iter().sum::<usize>() {
        return Err(Error::Domain("forest parameters violate p = n + Σn⁻, q = Σn⁺".into()));
    }
    struct St<'a> {
        plus: &'a [usize],
        minus: &'a [usize],
        used_p: Vec<bool>,
        used_m: Vec<bool>,
        // pending child slots: (sign of the children to come, how many)
        stack: Vec<(bool, usize)>,
        trees: usize,
        n: usize,
    }
    fn rec(s: &mut St, left: usize) -> u64 {
        if left == 0 {
            return (s.trees == s.n && s.stack.is_empty()) as u64;
        }
        let positive = match s.stack.last() {
            Some(&(sign, _)) => sign,
            None => {
                if s.trees == s.n {
                    return 0;
                }
                true
            }
        };
        let new_tree = s.stack.is_empty();
        let mut total = 0;
        let options = if positive { s.plus.len() } else { s.minus.len() };
        for i in 0..options {
            let used = if positive { &s.used_p[i] } else { &s.used_m[i] };
            if *used {
                continue;
            }
            let kids = if positive { s.plus[i] } else { s.minus[i] };
            if positive { s.used_p[i] = true } else { s.used_m[i] = true }
            let saved = s.stack.clone();
            if new_tree {
                s.trees += 1;
            } else {
                let top = s.stack.last_mut().unwrap();
                top.1 -= 1;
                if top.1 == 0 {
                    s.stack.pop();
                }
            }
            if kids > 0 {
                s.stack.push((!positive, kids));
            }
            total += rec(s, left - 1);
            s.stack = saved;
            if new_tree {
                s.trees -= 1;
            }
            if positive { s.used_p[i] = false } else { s.used_m[i] = false }
        }
        total
    }
    let mut st = St { plus, minus, used_p: vec![false; p], used_m: vec![false; q], stack: Vec::new(), trees: 0, n };
    Ok(BigInt::from(rec(&mut st, p + q)))
}

/// q!(p−1)!·n.
pub fn counting_lemma_formula(n: usize, p: usize, q: usize) -> BigInt {
    factorial(q) * factorial(p - 1) * BigInt::from(n)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub checked: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    /// sampled draws dropped because they hit the vertex cap
    pub skipped: usize,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }

    pub fn merge(mut self, other: SweepReport) -> SweepReport {
        self.checked += other.checked;
        self.failures += other.failures;
        self.skipped += other.skipped;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
        self
    }

    pub fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }
}

/// Every admissible (n, n⁺, n⁻) with p + q ≤ `max_pq`, compared with `formula(n, p, q)`.
pub fn counting_lemma_sweep(max_pq: usize, formula: impl Fn(usize, usize, usize) -> BigInt) -> Result<SweepReport> {
    let mut report = SweepReport::default();
    for p in 1..=max_pq {
        for q in 0..=max_pq - p {
            for plus in compositions(q, p) {
                for n in 1..=p {
                    for minus in compositions(p - n, q) {
                        let got = enumerate_bicoloured_forests(n, &plus, &minus)?;
                        let want = formula(n, p, q);
                        report.record(got == want, || format!("n={n} n+={plus:?} n-={minus:?}: {got} != {want}"));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// A plane tree with per-vertex booleans σ (in R) and ι (in L); σ = 0 forces a leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedTree {
    pub tree: Vec<Option<usize>>,
    pub sigma: Vec<bool>,
    pub iota: Vec<bool>,
    children: Vec<Vec<usize>>,
}

impl MarkedTree {
    /// `parents` in preorder, as for [`LabelledPlaneTree::from_preorder`].
    pub fn new(parents: Vec<Option<usize>>, sigma: Vec<bool>, iota: Vec<bool>) -> Result<Self> {
        let n = parents.len();
        if n == 0 || sigma.len() != n || iota.len() != n {
            return Err(Error::Domain("marked tree arrays must be nonempty and of equal length".into()));
        }
        // reuse the preorder validation of labelled trees
        LabelledPlaneTree::from_preorder(parents.clone(), vec![0; n])?;
        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(v);
            }
        }
        for v in 0..n {
            if !sigma[v] && !children[v].is_empty() {
                return Err(Error::Domain(format!("vertex {v} has σ = 0 but has children")));
            }
        }
        Ok(MarkedTree { tree: parents, sigma, iota, children })
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// |T|, the number of edges.
    pub fn edges(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// |L|
    pub fn l_count(&self) -> usize {
        self.iota.iter().filter(|&&b| b).count()
    }

    /// |R|
    pub fn r_count(&self) -> usize {
        self.sigma.iter().filter(|&&b| b).count()
    }

    /// 𝔓-probability given ν.
    pub fn probability(&self, nu: &[Rational]) -> Rational {
        let mut w = quarter_pow(self.len());
        for v in 0..self.len() {
            if self.sigma[v] {
                w *= nu.get(self.children[v].len()).cloned().unwrap_or_else(Rational::zero);
            }
        }
        w
    }
}

/// (y⁺, y⁻): edges 1 → 2 and 2 → 1 of a positive excursion.
pub fn excursion_y(tau: &Excursion) -> (usize, usize) {
    let t = &tau.tree;
    let (mut up, mut down) = (0, 0);
    for v in 1..t.len() {
        let (a, b) = (t.label(t.parent(v).unwrap()), t.label(v));
        if (a, b) == (1, 2) {
            up += 1;
        } else if (a, b) == (2, 1) {
            down += 1;
        }
    }
    (up, down)
}

/// Marked tree of the label-1 vertices of a positive binary excursion, joined to their
/// nearest label-1 ancestor; σ marks a child labelled 2, ι a child labelled 0.
pub fn to_marked(tau: &Excursion) -> Result<MarkedTree> {
    if tau.sign != Sign::Plus {
        return Err(Error::Domain("to_marked expects a positive excursion".into()));
    }
    let t = &tau.tree;
    let mut near = vec![usize::MAX; t.len()];
    let (mut parents, mut sigma, mut iota) = (Vec::new(), Vec::new(), Vec::new());
    for v in 0..t.len() {
        if t.label(v) == 1 {
            let p = t.parent(v).map(|u| near[u]);
            if p == Some(usize::MAX) {
                return Err(Error::Internal("label-1 vertex without a label-1 ancestor".into()));
            }
            near[v] = parents.len();
            parents.push(p);
            let kids = t.children(v);
            sigma.push(kids.iter().any(|&c| t.label(c as usize) == 2));
            iota.push(kids.iter().any(|&c| t.label(c as usize) == 0));
        } else if let Some(u) = t.parent(v) {
            near[v] = near[u];
        }
    }
    let m = MarkedTree::new(parents, sigma, iota)?;
    let (yp, ym) = excursion_y(tau);
    if (m.edges(), m.l_count(), m.r_count()) != (ym, tau.n, yp) {
        return Err(Error::Internal("marked tree does not reproduce (y⁻, n, y⁺)".into()));
    }
    Ok(m)
}

/// Exhaustive law of (Σ|L_k|, Σ|R_k|) over p marked trees with Σ|T_k| = s:
/// `out[q][r]` = P(Σ|T| = s, Σ|L| = q, Σ|R| = r).
pub fn enumerate_marked_forests(nu: &[Rational], p: usize, s: usize) -> Result<Vec<Vec<Rational>>> {
    if nu.len() <= s {
        return Err(Error::Domain(format!("ν needs {} coefficients, got {}", s + 1, nu.len())));
    }
    let n = p + s;
    if 4u64.saturating_pow(n as u32) > ENUMERATION_CAP {
        return Err(Error::resource("marked forest vertices", ENUMERATION_CAP));
    }
    let mut out = vec![vec![Rational::zero(); n + 1]; n + 1];
    // forest shapes as child-count sequences in depth-first order
    let mut shapes = Vec::new();
    lukasiewicz_sequences(p, s, &mut Vec::new(), 0, true, &mut shapes);
    for ks in shapes {
        for mask in 0u64..(1 << (2 * n)) {
            let mut w = quarter_pow(n);
            let (mut l, mut r) = (0, 0);
            for (j, &k) in ks.iter().enumerate() {
                let sigma = mask >> (2 * j) & 1 == 1;
                let iota = mask >> (2 * j + 1) & 1 == 1;
                if sigma {
                    w *= &nu[k];
                    r += 1;
                } else if k > 0 {
                    w = Rational::zero();
                    break;
                }
                l += iota as usize;
            }
            if !w.is_zero() {
                out[l][r] += w;
            }
        }
    }
    Ok(out)
}

/// Child-count sequences of length p + s summing to s; with `forest_only`, only those
/// whose walk Σ(k_j − 1) first reaches −p at the last step.
fn lukasiewicz_sequences(p: usize, s: usize, cur: &mut Vec<usize>, sum: usize, forest_only: bool, out: &mut Vec<Vec<usize>>) {
    let n = p + s;
    let j = cur.len();
    if j == n {
        if sum == s {
            out.push(cur.clone());
        }
        return;
    }
    for k in 0..=s - sum {
        // walk after step j+1 is (sum + k) − (j + 1); it must stay above −p until the end
        let pos = (sum + k) as i64 - (j as i64 + 1);
        if forest_only && j + 1 < n && pos <= -(p as i64) {
            continue;
        }
        cur.push(k);
        lukasiewicz_sequences(p, s, cur, sum + k, forest_only, out);
        cur.pop();
    }
}

/// 4^{−p−s}·(p/(p+s))·C(p+s, q)·C(p+s, r)·f_r(s).
pub fn marked_forest_formula(f: &FTable<Rational>, p: usize, s: usize, q: usize, r: usize) -> Rational {
    let n = p + s;
    let fr = f.get(r, s).cloned().unwrap_or_else(Rational::zero);
    quarter_pow(n) * Rational::new(BigInt::from(p), BigInt::from(n)) * Rational::from_integer(binomial(n, q) * binomial(n, r)) * fr
}

/// Exhaustive marked-forest laws for 1 ≤ p ≤ p_max, s ≤ s_max against `formula`.
pub fn marked_forest_sweep(
    nu: &[Rational],
    p_max: usize,
    s_max: usize,
    formula: impl Fn(&FTable<Rational>, usize, usize, usize, usize) -> Rational,
) -> Result<SweepReport> {
    let series = crate::genfun::Series::from_coeffs(nu[..=s_max].to_vec(), s_max);
    let f = crate::genfun::f_table(&series, p_max + s_max, s_max)?;
    let mut report = SweepReport::default();
    for p in 1..=p_max {
        for s in 0..=s_max {
            let law = enumerate_marked_forests(nu, p, s)?;
            for q in 0..=p + s {
                for r in 0..=p + s {
                    let want = formula(&f, p, s, q, r);
                    let got = &law[q][r];
                    report.record(*got == want, || format!("p={p} s={s} q={q} r={r}: {got} != {want}"));
                }
            }
        }
    }
    Ok(report)
}

/// Cycle-lemma identity behind the joint law: for every (q, r), the weight of sequences
/// that first reach −p at time p+s equals p/(p+s) times the weight of all sequences ending
/// at −p.
pub fn lukasiewicz_check(nu: &[Rational], p: usize, s: usize) -> Result<bool> {
    let n = p + s;
    let weigh = |forest_only: bool| {
        let mut seqs = Vec::new();
        lukasiewicz_sequences(p, s, &mut Vec::new(), 0, forest_only, &mut seqs);
        let mut table = vec![vec![Rational::zero(); n + 1]; n + 1];
        for ks in seqs {
            // each vertex: ι free (factor 2 spread over q), σ = 1 needed when k > 0
            let mut cells = vec![vec![Rational::zero(); n + 1]; n + 1];
            cells[0][0] = Rational::one();
            for &k in &ks {
                let mut next = vec![vec![Rational::zero(); n + 1]; n + 1];
                for q in 0..=n {
                    for r in 0..=n {
                        let w = &cells[q][r];
                        if w.is_zero() {
                            continue;
                        }
                        for iota in 0..2 {
                            if k == 0 {
                                next[q + iota][r] += w * quarter_pow(1);
                            }
                            next[q + iota][r + 1] += w * quarter_pow(1) * &nu[k];
                        }
                    }
                }
                cells = next;
            }
            for q in 0..=n {
                for r in 0..=n {
                    table[q][r] += &cells[q][r];
                }
            }
        }
        table
    };
    if nu.len() <= s {
        return Err(Error::Domain("ν table too short".into()));
    }
    let first = weigh(true);
    let all = weigh(false);
    let ratio = Rational::new(BigInt::from(p), BigInt::from(n));
    Ok((0..=n).all(|q| (0..=n).all(|r| first[q][r] == &all[q][r] * &ratio)))
}

/// Card(𝓑) against exhaustive profile counts of binary trees with at most `max_edges` edges.
pub fn remark_profile_check(max_edges: usize) -> Result<SweepReport> {
    let model = TreeModel::builtin(Builtin::IncompleteBinary);
    let mut report = SweepReport::default();
    type Profile = (Vec<(usize, usize)>, Vec<(usize, usize)>);
    for e in 0..=max_edges {
        let mut counts: BTreeMap<Profile, u64> = BTreeMap::new();
        for (t, _) in enumerate_trees(&model, e)?.items {
            let prof = t.edge_profile()?;
            let conv = |v: Vec<(u64, u64)>| -> Vec<(usize, usize)> {
                let mut v: Vec<_> = v.into_iter().map(|(a, b)| (a as usize, b as usize)).collect();
                while v.last() == Some(&(0, 0)) {
                    v.pop();
                }
                v
            };
            *counts.entry((conv(prof.upper_path()), conv(prof.lower_path()))).or_insert(0) += 1;
        }
        for ((up, low), c) in counts {
            let card = profile_cardinality(&up, &low)?;
            report.record(card == int(c as i64), || format!("upper {up:?} lower {low:?}: {card} != {c}"));
        }
    }
    Ok(report)
}

/// Exact weights of larger sampled trees are not worth the bignum cost.
const FACTORIZATION_MAX_EDGES: usize = 400;

/// Π(t) against the root-component weight times the excursion weights of the decorations.
pub fn weight_factorizes(model: &TreeModel, t: &LabelledPlaneTree, d: &ExcursionDecomposition) -> Result<bool> {
    let mut w = model.root_component_weight(&d.root_component, d.level);
    for tau in &d.forest.decorations {
        w *= model.excursion_weight(tau)?;
    }
    Ok(w == model.tree_weight(t))
}

fn roundtrip_levels(model: &TreeModel, t: &LabelledPlaneTree, report: &mut SweepReport) -> Result<()> {
    let lo = t.min_label().min(-1) - 1;
    let hi = t.max_label().max(1) + 1;
    let weigh = t.edges() <= FACTORIZATION_MAX_EDGES;
    for m in (lo..=hi).filter(|&m| m != 0) {
        let ok = match decompose(t, m) {
            Ok(d) => {
                d.forest.check().is_ok()
                    && reconstruct(&d).as_ref() == Ok(t)
                    && (!weigh || weight_factorizes(model, t, &d)?)
            }
            Err(_) => false,
        };
        report.record(ok, || format!("tree {} at level {m}", t.encode()));
    }
    Ok(())
}

/// reconstruct ∘ decompose, and the weight factorization, on every tree of the model with at most `max_edges` edges, at
/// every level that cuts it plus one empty level on each side.
pub fn decompose_sweep(model: &TreeModel, max_edges: usize) -> Result<SweepReport> {
    let mut report = SweepReport::default();
    for e in 0..=max_edges {
        for (t, _) in enumerate_trees(model, e)?.items {
            roundtrip_levels(model, &t, &mut report)?;
        }
    }
    Ok(report)
}

/// The same round trip on `n` sampled Π₀ trees. Draws that hit the vertex cap are skipped.
pub fn decompose_sample_sweep(model: &TreeModel, n: u64, cfg: &SamplerConfig, workers: usize) -> Result<SweepReport> {
    let sampler = TreeSampler::new(model)?;
    let parts = run_chunks(n, workers, |range| -> Result<SweepReport> {
        let mut report = SweepReport::default();
        for i in range {
            match sampler.tree(0, cfg, &mut cfg.rng(i)) {
                Ok(t) => roundtrip_levels(model, &t, &mut report)?,
                Err(Error::Resource { .. }) => report.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    });
    parts.into_iter().try_fold(SweepReport::default(), |acc, r| Ok(acc.merge(r?)))
}
