//! Pearson χ² tests and transition censuses for Monte Carlo checks.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::excursion::{decompose, first_hit_offspring, Excursion, Sign};
use crate::genfun::{f_table, solve_nu_gf, Series};
use crate::kernel::{ChainSampler, State};
use crate::maps::{ball_profile, tree_to_map};
use crate::model::TreeModel;
use crate::num::Rational;
use crate::oracle::enumerate_trees;
use crate::sampler::{run_chunks, QuadrangulationSampler, SamplerConfig, TreeSampler};
use crate::tree::LabelledPlaneTree;

/// Cells with expected count below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// set when pooling leaves a single cell and there is nothing to test
    pub skipped: bool,
}

impl ChiSquare {
    pub fn passes(&self, alpha: f64) -> bool {
        self.skipped || self.p_value > alpha
    }
}

fn survival(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Groups cell indices so that every group has expected count ≥ [`MIN_EXPECTED`]: small
/// cells go into one pool, which is merged into the smallest large cell if still too small.
fn pool(expected: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut small = Vec::new();
    for (i, &e) in expected.iter().enumerate() {
        if e >= MIN_EXPECTED {
            groups.push(vec![i]);
        } else {
            small.push(i);
        }
    }
    if !small.is_empty() {
        let mass: f64 = small.iter().map(|&i| expected[i]).sum();
        if mass >= MIN_EXPECTED || groups.is_empty() {
            groups.push(small);
        } else {
            let target = (0..groups.len())
                .min_by(|&a, &b| {
                    let ea: f64 = groups[a].iter().map(|&i| expected[i]).sum();
                    let eb: f64 = groups[b].iter().map(|&i| expected[i]).sum();
                    ea.total_cmp(&eb)
                })
                .unwrap();
            groups[target].extend(small);
        }
    }
    groups
}

/// Goodness of fit of `observed` counts to `expected` probabilities (renormalised over the
/// listed cells).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::Domain("observed and expected differ in length".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::Domain("empty observation".into()));
    }
    let mass: f64 = expected.iter().sum();
    if !(mass > 0.0) || expected.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::Domain("expected probabilities must be finite, nonnegative and not all zero".into()));
    }
    for (o, e) in observed.iter().zip(expected) {
        if *o > 0 && *e == 0.0 {
            return Err(Error::Domain("observation in a cell of probability zero".into()));
        }
    }
    let counts: Vec<f64> = expected.iter().map(|e| e / mass * n as f64).collect();
    let groups = pool(&counts);
    if groups.len() < 2 {
        return Ok(ChiSquare { statistic: 0.0, dof: 0, p_value: 1.0, skipped: true });
    }
    let mut stat = 0.0;
    for g in &groups {
        let o: f64 = g.iter().map(|&i| observed[i] as f64).sum();
        let e: f64 = g.iter().map(|&i| counts[i]).sum();
        stat += (o - e) * (o - e) / e;
    }
    let dof = groups.len() - 1;
    Ok(ChiSquare { statistic: stat, dof, p_value: survival(stat, dof), skipped: false })
}

/// χ² test that several count vectors over the same cells come from one law.
pub fn homogeneity(rows: &[Vec<u64>]) -> Result<ChiSquare> {
    let rows: Vec<&Vec<u64>> = rows.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.is_empty() {
        return Err(Error::Domain("empty observation".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Domain("rows differ in length".into()));
    }
    let row_tot: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let grand: f64 = row_tot.iter().sum();
    let col_tot: Vec<f64> = (0..width).map(|j| rows.iter().map(|r| r[j] as f64).sum()).collect();
    if rows.len() < 2 {
        return Ok(ChiSquare { statistic: 0.0, dof: 0, p_value: 1.0, skipped: true });
    }
    // pool columns on the smallest row's expected counts
    let smallest = row_tot.iter().cloned().fold(f64::INFINITY, f64::min);
    let scaled: Vec<f64> = col_tot.iter().map(|c| c / grand * smallest).collect();
    let groups: Vec<Vec<usize>> = pool(&scaled).into_iter().filter(|g| g.iter().any(|&j| col_tot[j] > 0.0)).collect();
    if groups.len() < 2 {
        return Ok(ChiSquare { statistic: 0.0, dof: 0, p_value: 1.0, skipped: true });
    }
    let mut stat = 0.0;
    for (r, rt) in rows.iter().zip(&row_tot) {
        for g in &groups {
            let o: f64 = g.iter().map(|&j| r[j] as f64).sum();
            let e: f64 = rt * g.iter().map(|&j| col_tot[j]).sum::<f64>() / grand;
            stat += (o - e) * (o - e) / e;
        }
    }
    let dof = (rows.len() - 1) * (groups.len() - 1);
    Ok(ChiSquare { statistic: stat, dof, p_value: survival(stat, dof), skipped: false })
}

/// Counts of transitions from-state → to-state. Censuses merge by adding counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionCensus<K: Ord> {
    pub rows: BTreeMap<K, BTreeMap<State, u64>>,
}

impl<K: Ord> Default for TransitionCensus<K> {
    fn default() -> Self {
        TransitionCensus { rows: BTreeMap::new() }
    }
}

impl<K: Ord + Clone> TransitionCensus<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, from: K, to: State) {
        *self.rows.entry(from).or_default().entry(to).or_insert(0) += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (k, row) in other.rows {
            let mine = self.rows.entry(k).or_default();
            for (s, c) in row {
                *mine.entry(s).or_insert(0) += c;
            }
        }
        self
    }

    pub fn row_total(&self, from: &K) -> u64 {
        self.rows.get(from).map_or(0, |r| r.values().sum())
    }

    pub fn total(&self) -> u64 {
        self.rows.values().flat_map(|r| r.values()).sum()
    }
}

fn upper_states(t: &LabelledPlaneTree) -> Result<Vec<State>> {
    let prof = t.edge_profile()?;
    Ok(prof.upper_path().into_iter().map(|(p, q)| State { p: p as usize, q: q as usize }).collect())
}

/// Adds the transitions (X_m⁺, X_m⁻) → (X_{m+1}⁺, X_{m+1}⁻) for m in `levels` (m ≥ 1).
/// Beyond the height the chain sits at (0, 0).
pub fn add_tree_transitions(census: &mut TransitionCensus<State>, t: &LabelledPlaneTree, levels: std::ops::RangeInclusive<usize>) -> Result<()> {
    let path = upper_states(t)?;
    let at = |m: usize| path.get(m - 1).copied().unwrap_or(State::ABSORBING);
    for m in levels {
        if m == 0 {
            return Err(Error::Domain("levels start at 1".into()));
        }
        census.add(at(m), at(m + 1));
        if at(m) == State::ABSORBING && m >= path.len() {
            break;
        }
    }
    Ok(())
}

pub fn markov_census<'a>(
    trees: impl IntoIterator<Item = &'a LabelledPlaneTree>,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<TransitionCensus<State>> {
    let mut census = TransitionCensus::new();
    for t in trees {
        add_tree_transitions(&mut census, t, levels.clone())?;
    }
    Ok(census)
}

/// Transitions keyed by (previous state, current state), for m ≥ 2.
pub fn add_history_transitions(census: &mut TransitionCensus<(State, State)>, t: &LabelledPlaneTree) -> Result<()> {
    let path = upper_states(t)?;
    for m in 1..path.len() - 1 {
        census.add((path[m - 1], path[m]), path[m + 1]);
    }
    Ok(())
}

/// One row of the census against a kernel row given on a fixed list of cells. Observations
/// outside the list share one tail cell carrying the remaining mass. The cells must not be
/// chosen from the data.
pub fn row_test(row: &BTreeMap<State, u64>, cells: &[(State, f64)]) -> Result<ChiSquare> {
    let mut obs: Vec<u64> = cells.iter().map(|(s, _)| row.get(s).copied().unwrap_or(0)).collect();
    let mut exp: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let inside: u64 = obs.iter().sum();
    obs.push(row.values().sum::<u64>() - inside);
    exp.push((1.0 - exp.iter().sum::<f64>()).max(0.0));
    chi_square(&obs, &exp)
}

/// Cells (r, s) of the free kernel row from `from`, in order of s, until the remaining mass
/// drops below `tail` or s reaches the end of the ν table.
pub fn kernel_row_cells(chain: &mut ChainSampler, nu_len: usize, from: State, tail: f64) -> Vec<(State, f64)> {
    if from == State::ABSORBING {
        return vec![(State::ABSORBING, 1.0)];
    }
    let mut cells = Vec::new();
    let mut mass = 0.0;
    for s in 0..nu_len {
        for r in 0..=from.p + s {
            let x = chain.prob(from, r, s);
            if x > 0.0 {
                cells.push((State { p: r, q: s }, x));
                mass += x;
            }
        }
        if 1.0 - mass < tail {
            break;
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiTest {
    pub tests: Vec<(String, ChiSquare)>,
    /// smallest p-value times the number of tests, capped at 1
    pub bonferroni_p: f64,
}

impl MultiTest {
    pub fn from_tests(tests: Vec<(String, ChiSquare)>) -> Self {
        let k = tests.iter().filter(|(_, t)| !t.skipped).count().max(1) as f64;
        let min = tests.iter().filter(|(_, t)| !t.skipped).map(|(_, t)| t.p_value).fold(1.0, f64::min);
        MultiTest { tests, bonferroni_p: (min * k).min(1.0) }
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.bonferroni_p > alpha
    }
}

/// For each current state, compares the next-state rows across previous states with at
/// least `min_visits` visits.
pub fn history_dependence(census: &TransitionCensus<(State, State)>, min_visits: u64) -> Result<MultiTest> {
    let mut by_current: BTreeMap<State, Vec<&BTreeMap<State, u64>>> = BTreeMap::new();
    for ((_, cur), row) in &census.rows {
        if row.values().sum::<u64>() >= min_visits {
            by_current.entry(*cur).or_default().push(row);
        }
    }
    let mut tests = Vec::new();
    for (cur, rows) in by_current {
        if rows.len() < 2 {
            continue;
        }
        let cells: Vec<State> = {
            let mut c: Vec<State> = rows.iter().flat_map(|r| r.keys().copied()).collect();
            c.sort();
            c.dedup();
            c
        };
        let table: Vec<Vec<u64>> = rows.iter().map(|r| cells.iter().map(|s| r.get(s).copied().unwrap_or(0)).collect()).collect();
        tests.push((format!("({},{})", cur.p, cur.q), homogeneity(&table)?));
    }
    Ok(MultiTest::from_tests(tests))
}

/// Histogram of nonnegative integer observations against a law given by its first
/// `law.len()` masses; observations past the table fall into one tail cell.
pub fn histogram_test(values: &[usize], law: &[f64]) -> Result<ChiSquare> {
    let k = law.len();
    let mut obs = vec![0u64; k + 1];
    for &v in values {
        obs[v.min(k)] += 1;
    }
    let mut exp = law.to_vec();
    exp.push((1.0 - law.iter().sum::<f64>()).max(0.0));
    chi_square(&obs, &exp)
}

/// Every census row with at least `min_visits` visits against the free kernel built on `nu`.
pub fn kernel_row_tests(census: &TransitionCensus<State>, nu: &Series<f64>, min_visits: u64) -> Result<MultiTest> {
    let mut chain = ChainSampler::new(nu);
    let mut tests = Vec::new();
    for (from, row) in &census.rows {
        if census.row_total(from) < min_visits {
            continue;
        }
        let cells = kernel_row_cells(&mut chain, nu.coeffs().len(), *from, 1e-9);
        let t = row_test(row, &cells)?;
        tests.push((format!("({},{})", from.p, from.q), t));
    }
    Ok(MultiTest::from_tests(tests))
}

/// Pooled level census and history census of `n` Π₀ trees, plus the number of draws
/// skipped at the vertex cap. `lower` holds the transitions of (X̌_m⁻, X̌_m⁺) below the root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCensus {
    pub census: TransitionCensus<State>,
    pub history: TransitionCensus<(State, State)>,
    pub lower: TransitionCensus<State>,
    pub trees: u64,
    pub skipped: u64,
}

impl MonteCarloCensus {
    fn empty() -> Self {
        MonteCarloCensus {
            census: TransitionCensus::new(),
            history: TransitionCensus::new(),
            lower: TransitionCensus::new(),
            trees: 0,
            skipped: 0,
        }
    }
}

pub fn sample_census(model: &TreeModel, n: u64, cfg: &SamplerConfig, workers: usize) -> Result<MonteCarloCensus> {
    let sampler = TreeSampler::new(model)?;
    let parts = run_chunks(n, workers, |range| -> Result<MonteCarloCensus> {
        let mut out = MonteCarloCensus::empty();
        for i in range {
            match sampler.tree(0, cfg, &mut cfg.rng(i)) {
                Ok(t) => {
                    let prof = t.edge_profile()?;
                    let path: Vec<State> = prof.upper_path().into_iter().map(|(p, q)| State { p: p as usize, q: q as usize }).collect();
                    for w in path.windows(2) {
                        out.census.add(w[0], w[1]);
                    }
                    for w in path.windows(3) {
                        out.history.add((w[0], w[1]), w[2]);
                    }
                    let lower: Vec<State> = prof.lower_path().into_iter().map(|(p, q)| State { p: q as usize, q: p as usize }).collect();
                    for w in lower.windows(2) {
                        out.lower.add(w[0], w[1]);
                    }
                    out.trees += 1;
                }
                Err(Error::Resource { .. }) => out.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut acc = MonteCarloCensus::empty();
    for part in parts {
        let part = part?;
        acc.census = acc.census.merge(part.census);
        acc.history = acc.history.merge(part.history);
        acc.lower = acc.lower.merge(part.lower);
        acc.trees += part.trees;
        acc.skipped += part.skipped;
    }
    Ok(acc)
}

/// Offspring counts of the level-`level` excursion forests of `n` sampled Π₀ trees,
/// indexed by forest height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestOffspring {
    pub by_height: Vec<Vec<usize>>,
    pub trees: u64,
    pub skipped: u64,
}

pub fn sample_forest_offspring(model: &TreeModel, level: i64, n: u64, cfg: &SamplerConfig, workers: usize) -> Result<ForestOffspring> {
    let sampler = TreeSampler::new(model)?;
    let parts = run_chunks(n, workers, |range| -> Result<ForestOffspring> {
        let mut out = ForestOffspring { by_height: Vec::new(), trees: 0, skipped: 0 };
        for i in range {
            match sampler.tree(0, cfg, &mut cfg.rng(i)) {
                Ok(t) => {
                    let d = decompose(&t, level)?;
                    for (h, kids) in d.forest.offspring_by_height().into_iter().enumerate() {
                        if out.by_height.len() <= h {
                            out.by_height.resize(h + 1, Vec::new());
                        }
                        out.by_height[h].extend(kids);
                    }
                    out.trees += 1;
                }
                Err(Error::Resource { .. }) => out.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut acc = ForestOffspring { by_height: Vec::new(), trees: 0, skipped: 0 };
    for part in parts {
        let part = part?;
        for (h, kids) in part.by_height.into_iter().enumerate() {
            if acc.by_height.len() <= h {
                acc.by_height.resize(h + 1, Vec::new());
            }
            acc.by_height[h].extend(kids);
        }
        acc.trees += part.trees;
        acc.skipped += part.skipped;
    }
    Ok(acc)
}

/// Per-height histogram tests: heights of the root sign use `nu_root`, the others `nu_other`.
/// Heights with fewer than `min_count` vertices are left out.
pub fn forest_law_tests(off: &ForestOffspring, nu_root: &[f64], nu_other: &[f64], min_count: usize) -> Result<MultiTest> {
    let mut tests = Vec::new();
    for (h, kids) in off.by_height.iter().enumerate() {
        if kids.len() < min_count {
            continue;
        }
        let law = if h % 2 == 0 { nu_root } else { nu_other };
        tests.push((format!("height {h}"), histogram_test(kids, law)?));
    }
    Ok(MultiTest::from_tests(tests))
}

fn merge_by_height(acc: &mut Vec<Vec<usize>>, part: Vec<Vec<usize>>) {
    for (h, kids) in part.into_iter().enumerate() {
        if acc.len() <= h {
            acc.resize(h + 1, Vec::new());
        }
        acc[h].extend(kids);
    }
}

/// Offspring counts of the first-hit cascade above 0 (entry k: for each first hit of level
/// k, the number of first hits of level k+1 below it), in the same shape as
/// [`ForestOffspring`].
pub fn sample_first_hit_offspring(model: &TreeModel, n: u64, cfg: &SamplerConfig, workers: usize) -> Result<ForestOffspring> {
    let sampler = TreeSampler::new(model)?;
    let parts = run_chunks(n, workers, |range| -> Result<ForestOffspring> {
        let mut out = ForestOffspring { by_height: Vec::new(), trees: 0, skipped: 0 };
        for i in range {
            match sampler.tree(0, cfg, &mut cfg.rng(i)) {
                Ok(t) => {
                    let g = first_hit_offspring(&t)?;
                    merge_by_height(&mut out.by_height, g.into_iter().map(|l| l.into_iter().map(|x| x as usize).collect()).collect());
                    out.trees += 1;
                }
                Err(Error::Resource { .. }) => out.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut acc = ForestOffspring { by_height: Vec::new(), trees: 0, skipped: 0 };
    for part in parts {
        let part = part?;
        merge_by_height(&mut acc.by_height, part.by_height);
        acc.trees += part.trees;
        acc.skipped += part.skipped;
    }
    Ok(acc)
}

/// For every from-state visited at least `min_visits` times in both censuses, a
/// homogeneity test of the two next-state rows.
pub fn chain_agreement(a: &TransitionCensus<State>, b: &TransitionCensus<State>, min_visits: u64) -> Result<MultiTest> {
    let mut tests = Vec::new();
    for (from, ra) in &a.rows {
        let Some(rb) = b.rows.get(from) else { continue };
        if a.row_total(from) < min_visits || b.row_total(from) < min_visits {
            continue;
        }
        let mut cells: Vec<State> = ra.keys().chain(rb.keys()).copied().collect();
        cells.sort();
        cells.dedup();
        let table: Vec<Vec<u64>> =
            [ra, rb].iter().map(|r| cells.iter().map(|s| r.get(s).copied().unwrap_or(0)).collect()).collect();
        tests.push((format!("({},{})", from.p, from.q), homogeneity(&table)?));
    }
    Ok(MultiTest::from_tests(tests))
}

/// Transitions of the two ball processes of pointed quadrangulations, with states written
/// as (P, C): the upper process (P_{k−1+d⋆}, C_{k−1+d⋆}) and the lower process
/// (P_{d⋆−k}, ½P_{d⋆−k} − C_{d⋆−k} + 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallChains {
    pub upper: TransitionCensus<State>,
    pub lower: TransitionCensus<State>,
    pub maps: u64,
    pub skipped: u64,
}

pub fn sample_ball_chains(n: u64, cfg: &SamplerConfig, workers: usize) -> Result<BallChains> {
    let sampler = QuadrangulationSampler::new();
    let empty = || BallChains { upper: TransitionCensus::new(), lower: TransitionCensus::new(), maps: 0, skipped: 0 };
    let parts = run_chunks(n, workers, |range| -> Result<BallChains> {
        let mut out = empty();
        for i in range {
            match sampler.tree(cfg, &mut cfg.rng(i)) {
                Ok((t, b)) => {
                    let summary = ball_profile(&tree_to_map(&t, b)?);
                    let st = |(p, c): (u64, u64)| State { p: p as usize, q: c as usize };
                    for w in summary.upper_chain().windows(2) {
                        out.upper.add(st(w[0]), st(w[1]));
                    }
                    for w in summary.lower_chain().windows(2) {
                        out.lower.add(st(w[0]), st(w[1]));
                    }
                    out.maps += 1;
                }
                Err(Error::Resource { .. }) => out.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut acc = empty();
    for part in parts {
        let part = part?;
        acc.upper = acc.upper.merge(part.upper);
        acc.lower = acc.lower.merge(part.lower);
        acc.maps += part.maps;
        acc.skipped += part.skipped;
    }
    Ok(acc)
}

/// Law of one excursion picked uniformly among the p positive excursions of a tree with
/// (X_m⁺, X_m⁻) = (p, q): Π⁺(t) f_{p−1}(q − n_t) / f_p(q), on every positive excursion with at
/// most `max_edges` edges. Keys are the excursions' text encodings.
pub fn conditional_excursion_cells(model: &TreeModel, p: usize, q: usize, max_edges: usize) -> Result<Vec<(String, Rational)>> {
    if p == 0 {
        return Err(Error::Domain("no positive excursion to pick when p = 0".into()));
    }
    let nu = solve_nu_gf(model, q)?;
    let f = f_table(&nu, p, q)?;
    let fpq = f.get(p, q).cloned().unwrap_or_else(Rational::zero);
    if fpq.is_zero() {
        return Err(Error::Domain(format!("(p, q) = ({p}, {q}) has probability 0")));
    }
    let mut cells = Vec::new();
    for e in 0..=max_edges {
        for (t, _) in enumerate_trees(model, e)?.items {
            let Ok(tau) = Excursion::new(t.shifted(1)) else { continue };
            if tau.sign != Sign::Plus || tau.n > q {
                continue;
            }
            let w = model.excursion_weight(&tau)? * f.get(p - 1, q - tau.n).cloned().unwrap_or_else(Rational::zero) / &fpq;
            if !w.is_zero() {
                cells.push((tau.key(), w));
            }
        }
    }
    Ok(cells)
}

/// Keys of one uniformly chosen positive excursion at level `level` from each sampled Π₀
/// tree with (X⁺, X⁻) = (p, q) at that level, against `cells` (normally from
/// [`conditional_excursion_cells`]). Excursions outside the cells share a tail cell.
/// Also returns the number of trees that met the condition.
pub fn conditional_excursion_test(
    model: &TreeModel,
    level: i64,
    (p, q): (usize, usize),
    cells: &[(String, Rational)],
    n: u64,
    cfg: &SamplerConfig,
    workers: usize,
) -> Result<(ChiSquare, u64)> {
    if level < 1 {
        return Err(Error::Domain("level must be at least 1".into()));
    }
    if p == 0 {
        return Err(Error::Domain("no positive excursion to pick when p = 0".into()));
    }
    let index: BTreeMap<&str, usize> = cells.iter().enumerate().map(|(i, (k, _))| (k.as_str(), i)).collect();
    let sampler = TreeSampler::new(model)?;
    let parts = run_chunks(n, workers, |range| -> Result<Vec<u64>> {
        let mut obs = vec![0u64; cells.len() + 1];
        for i in range {
            let mut rng = cfg.rng(i);
            let t = match sampler.tree(0, cfg, &mut rng) {
                Ok(t) => t,
                Err(Error::Resource { .. }) => continue,
                Err(e) => return Err(e),
            };
            let d = decompose(&t, level)?;
            let plus: Vec<&Excursion> = d.forest.decorations.iter().filter(|x| x.sign == Sign::Plus).collect();
            let nq: usize = plus.iter().map(|x| x.n).sum();
            if plus.len() != p || nq != q {
                continue;
            }
            let pick = plus[rng.gen_range(0..p)];
            obs[index.get(pick.key().as_str()).copied().unwrap_or(cells.len())] += 1;
        }
        Ok(obs)
    });
    let mut obs = vec![0u64; cells.len() + 1];
    for part in parts {
        for (o, x) in obs.iter_mut().zip(part?) {
            *o += x;
        }
    }
    let mut exp: Vec<f64> = cells.iter().map(|(_, w)| crate::num::Scalar::to_f64(w)).collect();
    exp.push((1.0 - exp.iter().sum::<f64>()).max(0.0));
    let hits = obs.iter().sum();
    Ok((chi_square(&obs, &exp)?, hits))
}

/// CSV of a census: from_p,from_q,to_p,to_q,count.
pub fn census_csv(census: &TransitionCensus<State>) -> String {
    let mut out = String::from("from_p,from_q,to_p,to_q,count\n");
    for (from, row) in &census.rows {
        for (to, c) in row {
            out.push_str(&format!("{},{},{},{},{}\n", from.p, from.q, to.p, to.q, c));
        }
    }
    out
}

/// CSV of named tests: name,statistic,dof,p_value,skipped.
pub fn tests_csv(tests: &MultiTest) -> String {
    let mut out = String::from("test,statistic,dof,p_value,skipped\n");
    for (name, t) in &tests.tests {
        out.push_str(&format!("\"{}\",{},{},{},{}\n", name, t.statistic, t.dof, t.p_value, t.skipped));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let r = chi_square(&[25, 25, 25, 25], &[0.25; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.dof, 3);
        let r = chi_square(&[10, 20, 30], &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let r = chi_square(&[7], &[1.0]).unwrap();
        assert!(r.skipped && r.dof == 0);
        assert!(chi_square(&[0, 0], &[0.5, 0.5]).is_err());
        assert!(chi_square(&[1, 1], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn pooling_small_cells() {
        // the small cells carry 2 expected counts, so they join a large cell
        let r = chi_square(&[50, 48, 1, 0, 1], &[0.49, 0.49, 0.01, 0.005, 0.005]).unwrap();
        assert_eq!(r.dof, 1);
        let r = chi_square(&[300, 300, 20, 10], &[0.47, 0.47, 0.04, 0.02]).unwrap();
        assert_eq!(r.dof, 3);
        let bad = chi_square(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn homogeneity_detects_difference() {
        let same = homogeneity(&[vec![50, 50], vec![49, 51]]).unwrap();
        assert!(same.p_value > 0.5);
        let diff = homogeneity(&[vec![90, 10], vec![10, 90]]).unwrap();
        assert!(diff.p_value < 1e-10);
    }

    #[test]
    fn small_monte_carlo() {
        use crate::genfun::closed_form_series;
        use crate::model::Builtin;
        let m = TreeModel::builtin(Builtin::IncompleteBinary);
        let cfg = SamplerConfig::new(1).with_vertex_cap(100_000);
        let mc = sample_census(&m, 3000, &cfg, 2).unwrap();
        assert_eq!(mc, sample_census(&m, 3000, &cfg, 3).unwrap());
        let nu = closed_form_series::<f64>(Builtin::IncompleteBinary, 60).unwrap();
        let rows = kernel_row_tests(&mc.census, &nu, 200).unwrap();
        assert!(rows.tests.len() >= 2);
        assert!(rows.passes(1e-3), "{rows:?}");
        let hist = history_dependence(&mc.history, 100).unwrap();
        assert!(hist.passes(1e-3), "{hist:?}");

        let g = TreeModel::builtin(Builtin::GeomPm1);
        let off = sample_forest_offspring(&g, 1, 3000, &cfg, 2).unwrap();
        let nu = closed_form_series::<f64>(Builtin::GeomPm1, 60).unwrap();
        let t = forest_law_tests(&off, nu.coeffs(), nu.coeffs(), 100).unwrap();
        assert!(!t.tests.is_empty() && t.passes(1e-3), "{t:?}");
        // a wrong law is rejected
        let mut bad = nu.coeffs().to_vec();
        bad.swap(0, 1);
        assert!(!forest_law_tests(&off, &bad, &bad, 100).unwrap().passes(1e-3));
    }

    #[test]
    fn new_samplers_are_deterministic() {
        use crate::model::Builtin;
        let m = TreeModel::builtin(Builtin::GeomPm1);
        let cfg = SamplerConfig::new(4).with_vertex_cap(10_000);
        let a = sample_first_hit_offspring(&m, 300, &cfg, 1).unwrap();
        assert_eq!(a, sample_first_hit_offspring(&m, 300, &cfg, 3).unwrap());
        assert_eq!(a.by_height[0].len() as u64, a.trees);
        let b = sample_ball_chains(200, &cfg, 1).unwrap();
        assert_eq!(b, sample_ball_chains(200, &cfg, 2).unwrap());
        assert!(b.upper.rows.keys().chain(b.lower.rows.keys()).all(|s| s.p % 2 == 0));
        let c = sample_census(&m, 300, &cfg, 2).unwrap();
        assert!(c.lower.total() > 0);
    }

    #[test]
    fn conditional_cells() {
        use crate::model::Builtin;
        let m = TreeModel::builtin(Builtin::GeomPm1);
        let cells = conditional_excursion_cells(&m, 1, 1, 2).unwrap();
        // the one-edge excursion 1 → 0 is among them
        assert!(cells.iter().any(|(k, _)| k == &LabelledPlaneTree::decode("1(-())").unwrap().encode()));
        for (k, w) in &cells {
            let t = LabelledPlaneTree::decode(k).unwrap();
            assert_eq!(t.labels().filter(|&l| l == 0).count(), 1);
            assert!(*w > Rational::zero());
        }
        let total: Rational = cells.iter().map(|c| c.1.clone()).sum();
        assert!(total < Rational::from_integer(1.into()));
        assert!(conditional_excursion_cells(&m, 0, 1, 2).is_err());
    }

    #[test]
    fn census_merges_and_absorbs() {
        let t = LabelledPlaneTree::decode("0(+(+()-()))").unwrap();
        let a = markov_census([&t], 1..=5).unwrap();
        let b = markov_census([&t], 1..=5).unwrap();
        let m = a.clone().merge(b);
        assert_eq!(m.total(), 2 * a.total());
        let zero = &a.rows[&State::ABSORBING];
        assert_eq!(zero.keys().collect::<Vec<_>>(), vec![&State::ABSORBING]);
    }
}
