//! Seeded samplers for Π_x, Π±, Π₀ conditioned on size, the marked-tree law 𝔓 and
//! Boltzmann quadrangulations.
//!
//! Randomness comes from ChaCha8. Draw `i` of a run seeded with `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` on stream `i`, so results never depend on how draws are
//! split across threads.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::{Excursion, Sign};
use crate::genfun::Series;
use crate::maps::{tree_to_map, Quadrangulation};
use crate::model::{Builtin, Displacement, Offspring, TreeModel};
use crate::num::Scalar;
use crate::oracle::MarkedTree;
use crate::tree::LabelledPlaneTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub vertex_cap: usize,
    pub rejection_cap: u64,
}

impl SamplerConfig {
    pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;
    pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

    pub fn new(seed: u64) -> Self {
        SamplerConfig { seed, vertex_cap: Self::DEFAULT_VERTEX_CAP, rejection_cap: Self::DEFAULT_REJECTION_CAP }
    }

    pub fn with_vertex_cap(mut self, cap: usize) -> Self {
        self.vertex_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertex_cap == 0 || self.rejection_cap == 0 {
            return Err(Error::Config("sampler caps must be positive".into()));
        }
        Ok(())
    }

    /// Generator for draw number `stream`.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// Runs `f(i)` for i in 0..n on `workers` threads and returns the results in index order.
pub fn run_indexed<T: Send>(n: u64, workers: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let workers = workers.max(1).min(n.max(1) as usize);
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers as u64);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let lo = (w * chunk).min(n);
                let hi = ((w + 1) * chunk).min(n);
                s.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Splits `0..n` into one contiguous range per worker and returns the per-range results in
/// order. Combine them with an order-insensitive merge to stay independent of `workers`.
pub fn run_chunks<T: Send>(n: u64, workers: usize, f: impl Fn(std::ops::Range<u64>) -> T + Sync) -> Vec<T> {
    let workers = workers.max(1).min(n.max(1) as usize) as u64;
    let chunk = n.div_ceil(workers);
    run_indexed(workers, workers as usize, |w| f((w * chunk).min(n)..((w + 1) * chunk).min(n)))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

enum Arity {
    Table(WeightedIndex<f64>),
    Geometric(rand_distr::Geometric),
}

enum Steps {
    Iid(&'static [i8]),
    PerArity(BTreeMap<usize, (Vec<Vec<i8>>, WeightedIndex<f64>)>),
}

/// Precomputed draw tables for one model.
pub struct TreeSampler {
    arity: Arity,
    steps: Steps,
}

impl TreeSampler {
    pub fn new(model: &TreeModel) -> Result<Self> {
        model.validate()?;
        let arity = match &model.offspring {
            Offspring::Table(t) => Arity::Table(
                WeightedIndex::new(t.iter().map(Scalar::to_f64))
                    .map_err(|e| Error::Config(format!("offspring table: {e}")))?,
            ),
            Offspring::GeometricHalf => Arity::Geometric(rand_distr::Geometric::new(0.5).unwrap()),
            Offspring::Geometric(p) => Arity::Geometric(
                rand_distr::Geometric::new(Scalar::to_f64(p)).map_err(|e| Error::Config(e.to_string()))?,
            ),
        };
        let steps = match &model.displacement {
            Displacement::IidPm1 => Steps::Iid(&[-1, 1]),
            Displacement::IidPm01 => Steps::Iid(&[-1, 0, 1]),
            Displacement::PerArity(map) => {
                let mut out = BTreeMap::new();
                for &d in map.keys() {
                    if model.xi(d).is_zero() {
                        continue;
                    }
                    let (vs, ps): (Vec<_>, Vec<_>) = model.displacement_support(d).into_iter().unzip();
                    let w = WeightedIndex::new(ps.iter().map(Scalar::to_f64))
                        .map_err(|e| Error::Config(format!("displacement law of arity {d}: {e}")))?;
                    out.insert(d, (vs, w));
                }
                Steps::PerArity(out)
            }
        };
        Ok(TreeSampler { arity, steps })
    }

    fn arity<R: Rng>(&self, rng: &mut R) -> usize {
        match &self.arity {
            Arity::Table(w) => w.sample(rng),
            Arity::Geometric(g) => g.sample(rng) as usize,
        }
    }

    fn push_children<R: Rng>(&self, d: usize, rng: &mut R, out: &mut Vec<i8>) -> Result<()> {
        out.clear();
        match &self.steps {
            Steps::Iid(set) => out.extend((0..d).map(|_| set[rng.gen_range(0..set.len())])),
            Steps::PerArity(map) => {
                let (vs, w) = map
                    .get(&d)
                    .ok_or_else(|| Error::Internal(format!("no displacement law for arity {d}")))?;
                out.extend_from_slice(&vs[w.sample(rng)]);
            }
        }
        Ok(())
    }

    /// Depth-first generation in preorder. With `stop_at_zero`, non-root label-0 vertices
    /// are never expanded. Returns `Ok(None)` once more than `budget` vertices exist and
    /// `budget_is_error` is false.
    fn generate<R: Rng>(
        &self,
        root: i64,
        stop_at_zero: bool,
        budget: usize,
        budget_is_error: bool,
        rng: &mut R,
    ) -> Result<Option<LabelledPlaneTree>> {
        let mut parents = Vec::new();
        let mut labels = Vec::new();
        let mut stack: Vec<(Option<usize>, i64)> = vec![(None, root)];
        let mut incs = Vec::new();
        while let Some((p, l)) = stack.pop() {
            let id = labels.len();
            if id >= budget {
                if budget_is_error {
                    return Err(Error::resource("vertex_cap", budget as u64));
                }
                return Ok(None);
            }
            parents.push(p);
            labels.push(l);
            if stop_at_zero && l == 0 && p.is_some() {
                continue;
            }
            let d = self.arity(rng);
            if d == 0 {
                continue;
            }
            self.push_children(d, rng, &mut incs)?;
            for &e in incs.iter().rev() {
                stack.push((Some(id), l + e as i64));
            }
        }
        LabelledPlaneTree::from_preorder(parents, labels).map(Some)
    }

    pub fn tree<R: Rng>(&self, root: i64, cfg: &SamplerConfig, rng: &mut R) -> Result<LabelledPlaneTree> {
        Ok(self.generate(root, false, cfg.vertex_cap, true, rng)?.unwrap())
    }

    pub fn excursion<R: Rng>(&self, sign: Sign, cfg: &SamplerConfig, rng: &mut R) -> Result<Excursion> {
        let t = self.generate(sign.as_i64(), true, cfg.vertex_cap, true, rng)?.unwrap();
        let n = t.labels().filter(|&l| l == 0).count();
        Ok(Excursion { tree: t, sign, n })
    }

    /// Rejection sampling of Π₀ given |T| = edges. Oversized draws are abandoned early.
    pub fn conditioned<R: Rng>(&self, edges: usize, cfg: &SamplerConfig, rng: &mut R) -> Result<LabelledPlaneTree> {
        let budget = (edges + 1).min(cfg.vertex_cap);
        if edges + 1 > cfg.vertex_cap {
            return Err(Error::resource("vertex_cap", cfg.vertex_cap as u64));
        }
        for _ in 0..cfg.rejection_cap {
            // one spare vertex so that an exactly full tree is distinguishable from an overflow
            if let Some(t) = self.generate(0, false, budget + 1, false, rng)? {
                if t.edges() == edges {
                    return Ok(t);
                }
            }
        }
        Err(Error::resource("rejection_cap", cfg.rejection_cap))
    }
}

pub fn sample_tree(model: &TreeModel, root_label: i64, cfg: &SamplerConfig) -> Result<LabelledPlaneTree> {
    cfg.validate()?;
    TreeSampler::new(model)?.tree(root_label, cfg, &mut cfg.rng(0))
}

pub fn sample_excursion(model: &TreeModel, sign: Sign, cfg: &SamplerConfig) -> Result<Excursion> {
    cfg.validate()?;
    TreeSampler::new(model)?.excursion(sign, cfg, &mut cfg.rng(0))
}

/// Whether Π₀(|T| = edges) > 0: `edges` must be a sum of positive arities in the support of ξ.
pub fn size_reachable(model: &TreeModel, edges: usize) -> bool {
    let arities: Vec<usize> = model.arities_up_to(edges).into_iter().filter(|&a| a > 0).collect();
    let mut ok = vec![false; edges + 1];
    ok[0] = true;
    for s in 1..=edges {
        ok[s] = arities.iter().any(|&a| a <= s && ok[s - a]);
    }
    ok[edges]
}

pub fn sample_conditioned(model: &TreeModel, edges: usize, cfg: &SamplerConfig) -> Result<LabelledPlaneTree> {
    cfg.validate()?;
    if !size_reachable(model, edges) {
        return Err(Error::Domain(format!("{} has no tree with {edges} edges", model.name())));
    }
    TreeSampler::new(model)?.conditioned(edges, cfg, &mut cfg.rng(0))
}

/// Source of the child-count law ν for 𝔓.
pub enum NuSource {
    /// A truncated table, renormalised. `tail` is the mass dropped by the truncation.
    Table { weights: WeightedIndex<f64>, tail: f64 },
    /// Child counts drawn as n_τ of fresh Π⁺ excursions of the model: exactly ν, no truncation.
    Excursion(TreeSampler),
}

impl NuSource {
    pub const DEFAULT_TAIL_GUARD: f64 = 1e-12;

    /// Fails when the truncated tail mass 1 − Σ ν(k) reaches `guard`.
    pub fn table(nu: &Series<f64>, guard: f64) -> Result<Self> {
        let mass: f64 = nu.coeffs().iter().sum();
        let tail = (1.0 - mass).max(0.0);
        if tail >= guard {
            return Err(Error::Domain(format!(
                "ν table of order {} leaves tail mass {tail:.3e}, guard is {guard:.1e}",
                nu.order()
            )));
        }
        let weights = WeightedIndex::new(nu.coeffs().iter().map(|x| x.max(0.0)))
            .map_err(|e| Error::Domain(format!("ν table: {e}")))?;
        Ok(NuSource::Table { weights, tail })
    }

    pub fn excursion(model: &TreeModel) -> Result<Self> {
        Ok(NuSource::Excursion(TreeSampler::new(model)?))
    }

    /// Truncated mass recorded for the output metadata.
    pub fn tail_mass(&self) -> f64 {
        match self {
            NuSource::Table { tail, .. } => *tail,
            NuSource::Excursion(_) => 0.0,
        }
    }

    fn draw<R: Rng>(&self, cfg: &SamplerConfig, rng: &mut R) -> Result<usize> {
        match self {
            NuSource::Table { weights, .. } => Ok(weights.sample(rng)),
            NuSource::Excursion(s) => Ok(s.excursion(Sign::Plus, cfg, rng)?.n),
        }
    }

    pub fn marked_tree<R: Rng>(&self, cfg: &SamplerConfig, rng: &mut R) -> Result<MarkedTree> {
        let mut parents = Vec::new();
        let mut sigma = Vec::new();
        let mut iota = Vec::new();
        let mut stack: Vec<Option<usize>> = vec![None];
        while let Some(p) = stack.pop() {
            let id = parents.len();
            if id >= cfg.vertex_cap {
                return Err(Error::resource("vertex_cap", cfg.vertex_cap as u64));
            }
            parents.push(p);
            let s: bool = rng.gen();
            let i: bool = rng.gen();
            sigma.push(s);
            iota.push(i);
            if s {
                let k = self.draw(cfg, rng)?;
                stack.extend(std::iter::repeat(Some(id)).take(k));
            }
        }
        MarkedTree::new(parents, sigma, iota)
    }
}

pub fn sample_marked_tree(nu: &NuSource, cfg: &SamplerConfig) -> Result<MarkedTree> {
    cfg.validate()?;
    nu.marked_tree(cfg, &mut cfg.rng(0))
}

/// Boltzmann pointed rooted quadrangulation: a geom-pm01 tree conditioned on |T| ≥ 1 and a
/// fair orientation bit, through the Schaeffer bijection.
pub struct QuadrangulationSampler(TreeSampler);

impl QuadrangulationSampler {
    pub fn new() -> Self {
        QuadrangulationSampler(TreeSampler::new(&TreeModel::builtin(Builtin::GeomPm01)).unwrap())
    }

    pub fn tree<R: Rng>(&self, cfg: &SamplerConfig, rng: &mut R) -> Result<(LabelledPlaneTree, bool)> {
        for _ in 0..cfg.rejection_cap {
            let t = self.0.tree(0, cfg, rng)?;
            if t.edges() >= 1 {
                return Ok((t, rng.gen()));
            }
        }
        Err(Error::resource("rejection_cap", cfg.rejection_cap))
    }

    pub fn sample<R: Rng>(&self, cfg: &SamplerConfig, rng: &mut R) -> Result<Quadrangulation> {
        let (t, b) = self.tree(cfg, rng)?;
        tree_to_map(&t, b)
    }
}

impl Default for QuadrangulationSampler {
    fn default() -> Self {
        Self::new()
    }
}

pub fn sample_quadrangulation(cfg: &SamplerConfig) -> Result<Quadrangulation> {
    cfg.validate()?;
    QuadrangulationSampler::new().sample(cfg, &mut cfg.rng(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::map_to_tree;
    use crate::model::Builtin;

    fn frequency(n: u64, hit: impl Fn(u64) -> bool + Sync) -> f64 {
        run_indexed(n, default_workers(), hit).into_iter().filter(|&b| b).count() as f64 / n as f64
    }

    #[test]
    fn single_vertex_frequencies() {
        let cfg = SamplerConfig::new(11).with_vertex_cap(100_000);
        for (b, want) in [(Builtin::IncompleteBinary, 0.25), (Builtin::GeomPm1, 0.5)] {
            let s = TreeSampler::new(&TreeModel::builtin(b)).unwrap();
            let f = frequency(100_000, |i| match s.tree(0, &cfg, &mut cfg.rng(i)) {
                Ok(t) => t.edges() == 0,
                Err(_) => false,
            });
            assert!((f - want).abs() < 0.01, "{b:?}: {f}");
        }
    }

    #[test]
    fn same_seed_same_tree() {
        let m = TreeModel::builtin(Builtin::GeomPm01);
        let cfg = SamplerConfig::new(5).with_vertex_cap(100_000);
        let a = sample_tree(&m, 0, &cfg);
        assert_eq!(a, sample_tree(&m, 0, &cfg));
        let many = |w| run_indexed(50, w, |i| TreeSampler::new(&m).unwrap().tree(0, &cfg, &mut cfg.rng(i)));
        assert_eq!(many(1), many(4));
    }

    #[test]
    fn excursions_are_truncated_at_zero() {
        let m = TreeModel::builtin(Builtin::IncompleteBinary);
        let s = TreeSampler::new(&m).unwrap();
        let cfg = SamplerConfig::new(3).with_vertex_cap(100_000);
        let mut zero = 0;
        let n = 100_000;
        for i in 0..n {
            let Ok(e) = s.excursion(Sign::Plus, &cfg, &mut cfg.rng(i)) else { continue };
            e.check().unwrap();
            if e.n == 0 {
                zero += 1;
            }
        }
        let f = zero as f64 / n as f64;
        assert!((f - 0.4).abs() < 0.01, "{f}");
    }

    #[test]
    fn conditioned_sampling() {
        let cfg = SamplerConfig::new(1);
        let ib = TreeModel::builtin(Builtin::IncompleteBinary);
        assert_eq!(sample_conditioned(&ib, 0, &cfg).unwrap().edges(), 0);
        assert_eq!(sample_conditioned(&ib, 9, &cfg).unwrap().edges(), 9);
        let cb = TreeModel::builtin(Builtin::CompleteBinary);
        assert!(matches!(sample_conditioned(&cb, 1, &cfg), Err(Error::Domain(_))));
        assert_eq!(sample_conditioned(&cb, 4, &cfg).unwrap().edges(), 4);
        let tight = SamplerConfig { rejection_cap: 1, ..SamplerConfig::new(2) };
        let r = (0..20).map(|s| sample_conditioned(&ib, 40, &SamplerConfig { seed: s, ..tight.clone() }));
        assert!(r.into_iter().any(|x| matches!(x, Err(Error::Resource { .. }))));
    }

    #[test]
    fn vertex_cap_is_reported() {
        let m = TreeModel::builtin(Builtin::GeomPm1);
        let cfg = SamplerConfig::new(0).with_vertex_cap(3);
        let hit = (0..50).any(|i| matches!(m_tree(&m, &cfg, i), Err(Error::Resource { .. })));
        assert!(hit);
    }

    fn m_tree(m: &TreeModel, cfg: &SamplerConfig, i: u64) -> Result<LabelledPlaneTree> {
        TreeSampler::new(m)?.tree(0, cfg, &mut cfg.rng(i))
    }

    #[test]
    fn marked_trees() {
        let nu = NuSource::excursion(&TreeModel::builtin(Builtin::IncompleteBinary)).unwrap();
        let cfg = SamplerConfig::new(9).with_vertex_cap(100_000);
        let n = 100_000;
        let mut empty_not_right = 0;
        for i in 0..n {
            let Ok(t) = nu.marked_tree(&cfg, &mut cfg.rng(i)) else { continue };
            for v in 0..t.len() {
                if !t.sigma[v] {
                    assert!(t.children(v).is_empty());
                }
            }
            if t.edges() == 0 && !t.sigma[0] {
                empty_not_right += 1;
            }
        }
        let f = empty_not_right as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn nu_table_guard() {
        let nu = crate::genfun::closed_form_series::<f64>(Builtin::IncompleteBinary, 50).unwrap();
        assert!(NuSource::table(&nu, 1e-12).is_err());
        let src = NuSource::table(&nu, 0.1).unwrap();
        assert!(src.tail_mass() > 0.0);
        assert!(sample_marked_tree(&src, &SamplerConfig::new(1)).is_ok());
    }

    #[test]
    fn quadrangulation_round_trip() {
        let s = QuadrangulationSampler::new();
        let cfg = SamplerConfig::new(4).with_vertex_cap(20_000);
        for i in 0..200 {
            let Ok((t, b)) = s.tree(&cfg, &mut cfg.rng(i)) else { continue };
            let q = tree_to_map(&t, b).unwrap();
            assert_eq!(q.face_count(), t.edges());
            assert_eq!(map_to_tree(&q).unwrap(), (t, b));
        }
    }
}
