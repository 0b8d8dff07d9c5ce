//! Pointed rooted quadrangulations as dart permutations, the Schaeffer bijection with
//! labelled trees, balls around the pointed vertex and their perimeter profile.
//!
//! Conventions for the forward direction: the contour of the tree is read from the root
//! corner with children left to right, each corner is joined to the next corner (cyclically)
//! whose label is one less, and corners of minimal label are joined to the pointed vertex.
//! `sigma` lists the darts around a vertex in contour order, and `phi = sigma ∘ alpha` runs
//! through each face counterclockwise, so the clockwise neighbour of the corner at position
//! i of a face cycle is the one at position i − 1. The root dart is the arc leaving the root corner, reversed when the
//! orientation bit is false.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Builtin, TreeModel};
use crate::num::{binomial, int, Rational};
use crate::oracle::{enumerate_trees, SweepReport};
use crate::sampler::{run_chunks, QuadrangulationSampler, SamplerConfig};
use crate::tree::LabelledPlaneTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadrangulation {
    alpha: Vec<u32>,
    sigma: Vec<u32>,
    root_dart: usize,
    pointed_vertex: usize,
    /// origin vertex of every dart, vertices numbered by first dart of their sigma orbit
    origin: Vec<u32>,
    first_dart: Vec<u32>,
    faces: Vec<[u32; 4]>,
}

impl Quadrangulation {
    /// Checks that alpha is a fixed-point-free involution, sigma a permutation, the map is
    /// connected and every face has degree 4.
    pub fn new(alpha: Vec<usize>, sigma: Vec<usize>, root_dart: usize, pointed_vertex: usize) -> Result<Self> {
        let n = alpha.len();
        if n == 0 || sigma.len() != n {
            return Err(Error::Integrity("alpha and sigma must be nonempty and of equal length".into()));
        }
        for d in 0..n {
            if alpha[d] >= n || alpha[d] == d || alpha[alpha[d]] != d {
                return Err(Error::Integrity(format!("alpha is not a fixed-point-free involution at dart {d}")));
            }
        }
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Integrity("sigma is not a permutation".into()));
            }
        }
        if root_dart >= n {
            return Err(Error::Integrity("root dart out of range".into()));
        }
        let mut origin = vec![u32::MAX; n];
        let mut first_dart = Vec::new();
        for d in 0..n {
            if origin[d] != u32::MAX {
                continue;
            }
            let v = first_dart.len() as u32;
            first_dart.push(d as u32);
            let mut e = d;
            loop {
                origin[e] = v;
                e = sigma[e];
                if e == d {
                    break;
                }
            }
        }
        if pointed_vertex >= first_dart.len() {
            return Err(Error::Integrity("pointed vertex out of range".into()));
        }
        let mut face_seen = vec![false; n];
        let mut faces = Vec::new();
        for d in 0..n {
            if face_seen[d] {
                continue;
            }
            let mut cyc = Vec::with_capacity(4);
            let mut e = d;
            loop {
                face_seen[e] = true;
                cyc.push(e as u32);
                e = sigma[alpha[e]];
                if e == d || cyc.len() > 4 {
                    break;
                }
            }
            if cyc.len() != 4 || e != d {
                return Err(Error::Integrity(format!("face through dart {d} does not have degree 4")));
            }
            faces.push([cyc[0], cyc[1], cyc[2], cyc[3]]);
        }
        let q = Quadrangulation {
            alpha: alpha.into_iter().map(|x| x as u32).collect(),
            sigma: sigma.into_iter().map(|x| x as u32).collect(),
            root_dart,
            pointed_vertex,
            origin,
            first_dart,
            faces,
        };
        if q.distances().iter().any(|&x| x == usize::MAX) {
            return Err(Error::Integrity("map is not connected".into()));
        }
        Ok(q)
    }

    pub fn dart_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, d: usize) -> usize {
        self.alpha[d] as usize
    }

    pub fn sigma(&self, d: usize) -> usize {
        self.sigma[d] as usize
    }

    /// Next dart of the face on the right of `d`.
    pub fn phi(&self, d: usize) -> usize {
        self.sigma(self.alpha(d))
    }

    pub fn origin(&self, d: usize) -> usize {
        self.origin[d] as usize
    }

    pub fn root_dart(&self) -> usize {
        self.root_dart
    }

    pub fn pointed_vertex(&self) -> usize {
        self.pointed_vertex
    }

    pub fn vertex_count(&self) -> usize {
        self.first_dart.len()
    }

    pub fn edge_count(&self) -> usize {
        self.alpha.len() / 2
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Faces as dart cycles in `phi` order.
    pub fn faces(&self) -> &[[u32; 4]] {
        &self.faces
    }

    /// Darts leaving `v`, in `sigma` order.
    pub fn darts_around(&self, v: usize) -> Vec<usize> {
        let d0 = self.first_dart[v] as usize;
        let mut out = vec![d0];
        let mut e = self.sigma(d0);
        while e != d0 {
            out.push(e);
            e = self.sigma(e);
        }
        out
    }

    /// Graph distances from the pointed vertex (`usize::MAX` if unreachable).
    pub fn distances(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[self.pointed_vertex] = 0;
        let mut queue = VecDeque::from([self.pointed_vertex]);
        while let Some(u) = queue.pop_front() {
            for d in self.darts_around(u) {
                let w = self.origin(self.alpha(d));
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// d⋆ = max of the distances of the two root endpoints to the pointed vertex.
    pub fn d_star(&self) -> usize {
        let dist = self.distances();
        dist[self.origin(self.root_dart)].max(dist[self.origin(self.alpha(self.root_dart))])
    }

    /// Header `root_dart,pointed_vertex` with its values, then `dart,alpha,sigma` rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!("root_dart,pointed_vertex\n{},{}\ndart,alpha,sigma\n", self.root_dart, self.pointed_vertex);
        for d in 0..self.dart_count() {
            let _ = writeln!(s, "{d},{},{}", self.alpha[d], self.sigma[d]);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut offset = 0;
        let mut lines = Vec::new();
        for line in text.split_inclusive('\n') {
            let t = line.trim();
            if !t.is_empty() {
                lines.push((offset, t));
            }
            offset += line.len();
        }
        let perr = |offset: usize, msg: &str| Error::Parse { offset, msg: msg.to_string() };
        let nums = |(off, l): (usize, &str)| -> Result<Vec<usize>> {
            l.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| perr(off, "expected an unsigned integer")))
                .collect()
        };
        if lines.len() < 3 || lines[0].1 != "root_dart,pointed_vertex" || lines[2].1 != "dart,alpha,sigma" {
            return Err(perr(0, "missing map CSV header"));
        }
        let head = nums(lines[1])?;
        if head.len() != 2 {
            return Err(perr(lines[1].0, "expected root_dart,pointed_vertex"));
        }
        let rows = &lines[3..];
        let mut alpha = vec![0; rows.len()];
        let mut sigma = vec![0; rows.len()];
        for (i, &row) in rows.iter().enumerate() {
            let r = nums(row)?;
            if r.len() != 3 || r[0] != i {
                return Err(perr(row.0, "expected dart,alpha,sigma with darts in order"));
            }
            alpha[i] = r[1];
            sigma[i] = r[2];
        }
        Quadrangulation::new(alpha, sigma, head[0], head[1])
    }
}

/// Contour of a tree with at least one edge: vertex of each of the 2n corners.
fn contour(t: &LabelledPlaneTree) -> Vec<usize> {
    let mut out = Vec::with_capacity(2 * t.edges());
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    out.push(0);
    while let Some(top) = stack.last_mut() {
        let (v, i) = *top;
        if i < t.out_degree(v) {
            top.1 += 1;
            let c = t.children(v)[i] as usize;
            out.push(c);
            stack.push((c, 0));
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                out.push(p);
            }
        }
    }
    out.pop();
    out
}

/// Schaeffer's forward construction.
pub fn tree_to_map(t: &LabelledPlaneTree, orientation: bool) -> Result<Quadrangulation> {
    if t.edges() == 0 {
        return Err(Error::Domain("a tree without edges has no quadrangulation".into()));
    }
    if t.root_label() != 0 {
        return Err(Error::Domain("tree must be rooted at label 0".into()));
    }
    if let Err(v) = t.validate() {
        return Err(Error::Domain(format!("label jump {} at vertex {}", v.jump, v.vertex)));
    }
    let c = contour(t);
    let k = c.len();
    let lab = |i: usize| t.label(c[i % k]);
    let min = t.min_label();
    // successor corner of each corner, None for the pointed vertex
    let mut succ: Vec<Option<usize>> = vec![None; k];
    let mut next_at: HashMap<i64, usize> = HashMap::new();
    for pos in (0..2 * k).rev() {
        let l = lab(pos);
        if pos < k && l > min {
            succ[pos] = Some(next_at[&(l - 1)] % k);
        }
        next_at.insert(l, pos);
    }
    // arc i runs from corner i: dart 2i leaves the corner, dart 2i+1 is its reverse
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut to_star = Vec::new();
    for i in 0..k {
        match succ[i] {
            Some(j) => incoming[j].push(i),
            None => to_star.push(i),
        }
    }
    let mut around: Vec<Vec<usize>> = vec![Vec::new(); t.len() + 1];
    for i in 0..k {
        let inc = &mut incoming[i];
        inc.sort_by_key(|&j| (i + k - j) % k);
        let ring = &mut around[c[i]];
        ring.extend(inc.iter().map(|&j| 2 * j + 1));
        ring.push(2 * i);
    }
    let star = t.len();
    around[star] = to_star.iter().rev().map(|&j| 2 * j + 1).collect();
    let mut sigma = vec![0; 2 * k];
    for ring in &around {
        for (a, &d) in ring.iter().enumerate() {
            sigma[d] = ring[(a + 1) % ring.len()];
        }
    }
    let alpha: Vec<usize> = (0..2 * k).map(|d| d ^ 1).collect();
    let root_dart = if orientation { 0 } else { 1 };
    // vertex ids follow the first dart of each orbit
    let mut first = vec![usize::MAX; t.len() + 1];
    for (v, ring) in around.iter().enumerate() {
        first[v] = *ring.iter().min().unwrap();
    }
    let star_id = first.iter().filter(|&&d| d < first[star]).count();
    Quadrangulation::new(alpha, sigma, root_dart, star_id)
}

/// Inverse of [`tree_to_map`]: labels ℓ = Δ(x⋆, ·) − d⋆, one tree edge per face.
pub fn map_to_tree(q: &Quadrangulation) -> Result<(LabelledPlaneTree, bool)> {
    let dist = q.distances();
    let d_star = q.d_star() as i64;
    let label = |v: usize| dist[v] as i64 - d_star;
    let nv = q.vertex_count();
    // tree-edge ends at each vertex, keyed by the dart that closes their corner
    let mut ends: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for f in q.faces() {
        let d: Vec<usize> = f.iter().map(|&x| x as usize).collect();
        let u: Vec<usize> = d.iter().map(|&x| q.origin(x)).collect();
        let l: Vec<i64> = u.iter().map(|&x| label(x)).collect();
        let mut pick = None;
        for r in 0..4 {
            let at = |i: usize| l[(r + i) % 4];
            if at(0) == at(2) && at(1) == at(3) && at(1) == at(0) - 1 {
                pick = Some((r, (r + 2) % 4));
                break;
            }
            if at(1) == at(0) - 1 && at(2) == at(0) - 2 && at(3) == at(0) - 1 {
                // the clockwise neighbour of the top corner
                pick = Some((r, (r + 3) % 4));
                break;
            }
        }
        let (a, b) = pick.ok_or_else(|| Error::Integrity(format!("face {d:?} has labels {l:?}")))?;
        if u[a] == u[b] {
            return Err(Error::Integrity(format!("face {d:?} selects a loop")));
        }
        if u[a] == q.pointed_vertex() || u[b] == q.pointed_vertex() {
            return Err(Error::Integrity("a selected edge touches the pointed vertex".into()));
        }
        ends[u[a]].push((d[a], u[b]));
        ends[u[b]].push((d[b], u[a]));
    }
    let r = q.root_dart();
    let (x0, x1) = (q.origin(r), q.origin(q.alpha(r)));
    let orientation = dist[x0] >= dist[x1];
    let (root, root_arc) = if orientation { (x0, r) } else { (x1, q.alpha(r)) };
    // position of every dart in the rotation at its origin
    let mut pos = vec![0usize; q.dart_count()];
    for v in 0..nv {
        for (i, d) in q.darts_around(v).into_iter().enumerate() {
            pos[d] = i;
        }
    }
    let ring_len: Vec<usize> = (0..nv).map(|v| q.darts_around(v).len()).collect();
    let mut parents = Vec::with_capacity(nv - 1);
    let mut labels = Vec::with_capacity(nv - 1);
    let mut visited = vec![false; nv];
    // (vertex, parent tree id, dart after which children start)
    let mut stack = vec![(root, None::<usize>, q.sigma(root_arc))];
    let mut from_parent = vec![usize::MAX; nv];
    while let Some((v, p, start)) = stack.pop() {
        if std::mem::replace(&mut visited[v], true) {
            return Err(Error::Integrity("selected edges contain a cycle".into()));
        }
        let id = labels.len();
        parents.push(p);
        labels.push(label(v));
        let n = ring_len[v];
        let key = |d: usize| (pos[d] + n - pos[start]) % n;
        let mut kids: Vec<(usize, usize)> = ends[v]
            .iter()
            .filter(|&&(d, _)| p.is_none() || d != from_parent[v])
            .copied()
            .collect();
        if kids.len() + p.is_some() as usize != ends[v].len() {
            return Err(Error::Integrity("inconsistent tree edge ends".into()));
        }
        kids.sort_by_key(|&(d, _)| key(d));
        for &(_, w) in kids.iter().rev() {
            let back = ends[w].iter().find(|&&(_, x)| x == v).map(|&(d, _)| d);
            let back = back.ok_or_else(|| Error::Integrity("dangling tree edge".into()))?;
            from_parent[w] = back;
            stack.push((w, Some(id), back));
        }
    }
    if labels.len() != nv - 1 {
        return Err(Error::Integrity(format!("selected edges reach {} of {} vertices", labels.len(), nv - 1)));
    }
    Ok((LabelledPlaneTree::from_preorder(parents, labels)?, orientation))
}

/// A face of a ball, as a dart cycle of the submap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallFace {
    pub darts: Vec<usize>,
    pub external: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub radius: usize,
    pub kept: Vec<bool>,
    pub faces: Vec<BallFace>,
}

impl Ball {
    pub fn external(&self) -> impl Iterator<Item = &BallFace> {
        self.faces.iter().filter(|f| f.external)
    }
}

fn ball_with(q: &Quadrangulation, dist: &[usize], k: usize) -> Ball {
    let n = q.dart_count();
    let kept: Vec<bool> = (0..n).map(|d| dist[q.origin(d)] <= k && dist[q.origin(q.alpha(d))] <= k).collect();
    let sigma_k = |d: usize| {
        let mut e = q.sigma(d);
        while !kept[e] {
            e = q.sigma(e);
        }
        e
    };
    let mut seen = vec![false; n];
    let mut faces = Vec::new();
    for d in 0..n {
        if !kept[d] || seen[d] {
            continue;
        }
        let mut darts = Vec::new();
        let mut external = false;
        let mut e = d;
        loop {
            seen[e] = true;
            darts.push(e);
            let next = sigma_k(q.alpha(e));
            external |= next != q.phi(e);
            e = next;
            if e == d {
                break;
            }
        }
        faces.push(BallFace { darts, external });
    }
    Ball { radius: k, kept, faces }
}

/// Submap of the edges whose endpoints both lie within distance k of the pointed vertex.
pub fn ball(q: &Quadrangulation, k: usize) -> Result<Ball> {
    if k == 0 {
        return Err(Error::Domain("ball radius must be at least 1".into()));
    }
    Ok(ball_with(q, &q.distances(), k))
}

/// (P_k, C_k) for 1 ≤ k ≤ eccentricity of the pointed vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallSummary {
    pub d_star: usize,
    /// perimeter[k-1] = P_k
    pub perimeter: Vec<u64>,
    /// components[k-1] = C_k
    pub components: Vec<u64>,
}

impl BallSummary {
    pub fn eccentricity(&self) -> usize {
        self.perimeter.len()
    }

    /// P_k for any k: 0 for k ≤ 0 and beyond the eccentricity.
    pub fn p(&self, k: i64) -> u64 {
        if k <= 0 {
            return 0;
        }
        self.perimeter.get(k as usize - 1).copied().unwrap_or(0)
    }

    /// C_k for any k: 1 for k ≤ 0, 0 beyond the eccentricity.
    pub fn c(&self, k: i64) -> u64 {
        if k <= 0 {
            return 1;
        }
        self.components.get(k as usize - 1).copied().unwrap_or(0)
    }

    /// (P_{k−1+d⋆}, C_{k−1+d⋆}) for k = 1 ..= until absorbed at (0, 0).
    pub fn upper_chain(&self) -> Vec<(u64, u64)> {
        let d = self.d_star as i64;
        let mut out = Vec::new();
        for k in 1.. {
            let s = (self.p(k - 1 + d), self.c(k - 1 + d));
            out.push(s);
            if s == (0, 0) {
                break;
            }
        }
        out
    }

    /// (P_{d⋆−k}, ½P_{d⋆−k} − C_{d⋆−k} + 1) for k = 1 ..= d⋆ (which ends at (0, 0)).
    pub fn lower_chain(&self) -> Vec<(u64, u64)> {
        let d = self.d_star as i64;
        (1..=d)
            .map(|k| {
                let (p, c) = (self.p(d - k), self.c(d - k) as i64);
                (p, (p as i64 / 2 - c + 1) as u64)
            })
            .collect()
    }
}

pub fn ball_profile(q: &Quadrangulation) -> BallSummary {
    let dist = q.distances();
    let ecc = dist.iter().copied().max().unwrap_or(0);
    let mut perimeter = Vec::with_capacity(ecc);
    let mut components = Vec::with_capacity(ecc);
    for k in 1..=ecc {
        let b = ball_with(q, &dist, k);
        perimeter.push(b.external().map(|f| f.darts.len() as u64).sum());
        components.push(b.external().count() as u64);
    }
    BallSummary { d_star: q.d_star(), perimeter, components }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileMismatch {
    pub k: i64,
    pub quantity: &'static str,
    pub map_side: u64,
    pub tree_side: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileReport {
    pub checked: usize,
    pub mismatches: Vec<ProfileMismatch>,
}

impl ProfileReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares (P_k, C_k) from the balls with the edge profile of the Schaeffer tree.
pub fn verify_profile_relations(q: &Quadrangulation) -> Result<ProfileReport> {
    verify_profile_relations_shifted(q, 0)
}

/// As [`verify_profile_relations`] with d⋆ replaced by d⋆ + `shift` on the tree side.
pub fn verify_profile_relations_shifted(q: &Quadrangulation, shift: i64) -> Result<ProfileReport> {
    let summary = ball_profile(q);
    let (t, _) = map_to_tree(q)?;
    let prof = t.edge_profile()?;
    let d = summary.d_star as i64 + shift;
    let mut report = ProfileReport { checked: 0, mismatches: Vec::new() };
    for k in 1..=summary.eccentricity() as i64 {
        let (c_tree, half_p_tree) = if k < d {
            let i = d - k;
            (prof.cp(i) + 1, prof.cp(i) + prof.cm(i))
        } else {
            let i = k - d + 1;
            (prof.xp(i), prof.xp(i) + prof.xm(i))
        };
        let (p, c) = (summary.p(k), summary.c(k));
        report.checked += 1;
        let mut push = |quantity, map_side, tree_side| {
            if map_side != tree_side {
                report.mismatches.push(ProfileMismatch { k, quantity, map_side, tree_side });
            }
        };
        push("C", c, c_tree);
        push("P/2", p / 2, half_p_tree);
        push("P mod 2", p % 2, 0);
    }
    Ok(report)
}

/// Z• = Σ_{n≥1} Card(Q_n•)·12^{−n}, with n ≤ n_max counted by enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZBullet {
    pub n_max: usize,
    /// Σ_{n ≤ n_max} of 2·(number of trees) ·12^{−n}, trees enumerated
    pub enumerated: f64,
    /// the remaining terms, from the closed count 2·3^n·Cat(n)
    pub tail: f64,
    pub total: f64,
}

pub fn z_bullet(n_max: usize) -> Result<ZBullet> {
    let model = TreeModel::builtin(Builtin::GeomPm01);
    let mut enumerated = Rational::zero();
    let mut head = Rational::zero();
    let twelfth = Rational::new(1.into(), 12.into());
    for n in 1..=n_max {
        let count = enumerate_trees(&model, n)?.items.len() as i64;
        let w = twelfth.pow(n as i32);
        enumerated += int(2 * count) * &w;
        let catalan = Rational::from_integer(binomial(2 * n, n)) / int(n as i64 + 1);
        head += int(2) * int(3).pow(n as i32) * catalan * w;
    }
    // Σ_{n≥1} Cat(n)4^{-n} = 1
    let tail = int(2) - head;
    let e = crate::num::Scalar::to_f64(&enumerated);
    let t = crate::num::Scalar::to_f64(&tail);
    Ok(ZBullet { n_max, enumerated: e, tail: t, total: e + t })
}

fn check_schaeffer(t: &LabelledPlaneTree, orientation: bool, report: &mut SweepReport) -> Result<()> {
    let q = tree_to_map(t, orientation)?;
    let back = map_to_tree(&q)?;
    report.record(back.0 == *t && back.1 == orientation, || format!("round trip of {} ({orientation})", t.encode()));
    let rel = verify_profile_relations(&q)?;
    report.record(rel.ok(), || format!("profile relations of {} ({orientation}): {:?}", t.encode(), rel.mismatches.first()));
    Ok(())
}

/// Round trip and profile relations for every geom-pm01 tree with 1..=`max_edges` edges, both
/// orientations.
pub fn schaeffer_sweep(max_edges: usize) -> Result<SweepReport> {
    let model = TreeModel::builtin(Builtin::GeomPm01);
    let mut report = SweepReport::default();
    for n in 1..=max_edges {
        for (t, _) in enumerate_trees(&model, n)?.items {
            for b in [false, true] {
                check_schaeffer(&t, b, &mut report)?;
            }
        }
    }
    Ok(report)
}

/// The same checks on `n` Boltzmann quadrangulations. Draws that hit the vertex cap are skipped.
pub fn schaeffer_sample_sweep(n: u64, cfg: &SamplerConfig, workers: usize) -> Result<SweepReport> {
    let sampler = QuadrangulationSampler::new();
    let parts = run_chunks(n, workers, |range| -> Result<SweepReport> {
        let mut report = SweepReport::default();
        for i in range {
            match sampler.tree(cfg, &mut cfg.rng(i)) {
                Ok((t, b)) => check_schaeffer(&t, b, &mut report)?,
                Err(Error::Resource { .. }) => report.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    });
    parts.into_iter().try_fold(SweepReport::default(), |acc, r| Ok(acc.merge(r?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(labels: &[i64]) -> LabelledPlaneTree {
        let parents = (0..labels.len()).map(|i| i.checked_sub(1)).collect();
        LabelledPlaneTree::from_preorder(parents, labels.to_vec()).unwrap()
    }

    #[test]
    fn one_edge_trees() {
        for l in [-1, 0, 1] {
            for b in [false, true] {
                let t = path(&[0, l]);
                let q = tree_to_map(&t, b).unwrap();
                assert_eq!(q.face_count(), 1);
                assert_eq!(q.vertex_count() + q.face_count(), q.edge_count() + 2);
                assert_eq!(map_to_tree(&q).unwrap(), (t, b));
            }
        }
        assert!(tree_to_map(&LabelledPlaneTree::single(0), true).is_err());
    }

    #[test]
    fn exhaustive_round_trip_small() {
        let m = TreeModel::builtin(Builtin::GeomPm01);
        for n in 1..=4 {
            for (t, _) in enumerate_trees(&m, n).unwrap().items {
                for b in [false, true] {
                    let q = tree_to_map(&t, b).unwrap();
                    assert_eq!(q.face_count(), n);
                    assert_eq!(q.vertex_count() + q.face_count(), q.edge_count() + 2);
                    assert_eq!(map_to_tree(&q).unwrap(), (t.clone(), b), "{}", t.encode());
                    let r = verify_profile_relations(&q).unwrap();
                    assert!(r.ok(), "{}: {:?}", t.encode(), r.mismatches);
                }
            }
        }
    }

    #[test]
    fn sweeps_pass() {
        let r = schaeffer_sweep(3).unwrap();
        assert!(r.ok() && r.checked > 0, "{r:?}");
        let cfg = SamplerConfig::new(3).with_vertex_cap(2_000);
        let r = schaeffer_sample_sweep(100, &cfg, 3).unwrap();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.checked + 2 * r.skipped, 200);
    }

    #[test]
    fn distances_match_labels() {
        let t = LabelledPlaneTree::decode("0(+(+()0(-()))-(+()0()))").unwrap();
        let q = tree_to_map(&t, true).unwrap();
        let dist = q.distances();
        for d in 0..q.dart_count() {
            let (a, b) = (dist[q.origin(d)], dist[q.origin(q.alpha(d))]);
            assert_eq!(a.abs_diff(b), 1);
        }
        assert_eq!(q.d_star() as i64, 1 - t.min_label());
    }

    #[test]
    fn full_ball_has_no_external_face() {
        let t = LabelledPlaneTree::decode("0(+(-())+()-())").unwrap();
        let q = tree_to_map(&t, false).unwrap();
        let ecc = *q.distances().iter().max().unwrap();
        assert_eq!(ball(&q, ecc).unwrap().external().count(), 0);
        assert!(ball(&q, 0).is_err());
        let s = ball_profile(&q);
        assert_eq!((s.p(0), s.c(0), s.p(-3), s.c(-3)), (0, 1, 0, 1));
        assert!(s.perimeter.iter().all(|p| p % 2 == 0));
    }

    #[test]
    fn shifted_d_star_is_detected() {
        let t = LabelledPlaneTree::decode("0(+(+())-(-()+()))").unwrap();
        let q = tree_to_map(&t, true).unwrap();
        assert!(verify_profile_relations(&q).unwrap().ok());
        assert!(!verify_profile_relations_shifted(&q, 1).unwrap().ok());
        assert!(!verify_profile_relations_shifted(&q, -1).unwrap().ok());
    }

    #[test]
    fn csv_round_trip() {
        let t = LabelledPlaneTree::decode("0(0(+())-())").unwrap();
        let q = tree_to_map(&t, true).unwrap();
        assert_eq!(Quadrangulation::from_csv(&q.to_csv()).unwrap(), q);
        let broken = q.to_csv().replace("dart,alpha,sigma\n0,1", "dart,alpha,sigma\n0,0");
        assert!(Quadrangulation::from_csv(&broken).is_err());
        assert!(matches!(Quadrangulation::from_csv("junk"), Err(Error::Parse { .. })));
    }

    #[test]
    fn z_bullet_value() {
        let z = z_bullet(5).unwrap();
        assert!((z.total - 2.0).abs() < 1e-12);
        assert!(z.enumerated > 0.0 && z.tail > 0.0);
    }
}
