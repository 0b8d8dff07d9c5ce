//! Level-m decomposition into root component and excursion forest, and its inverse.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tree::LabelledPlaneTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A tree excursion: root ±1, labels of one sign, label-0 vertices are leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Excursion {
    pub tree: LabelledPlaneTree,
    pub sign: Sign,
    /// n_τ, the number of label-0 vertices.
    pub n: usize,
}

impl Excursion {
    pub fn new(tree: LabelledPlaneTree) -> Result<Self> {
        let sign = match tree.root_label() {
            1 => Sign::Plus,
            -1 => Sign::Minus,
            r => return Err(Error::Domain(format!("excursion root label {r}"))),
        };
        let n = tree.labels().filter(|&l| l == 0).count();
        let e = Excursion { tree, sign, n };
        e.check()?;
        Ok(e)
    }

    pub fn check(&self) -> Result<()> {
        let t = &self.tree;
        if t.root_label() != self.sign.as_i64() {
            return Err(Error::Domain("excursion root label does not match its sign".into()));
        }
        if let Err(v) = t.validate() {
            return Err(Error::Domain(format!("label jump {} at vertex {}", v.jump, v.vertex)));
        }
        let s = self.sign.as_i64();
        let mut zeros = 0;
        for v in 0..t.len() {
            let l = t.label(v);
            if l * s < 0 {
                return Err(Error::Domain(format!("vertex {v} has label {l} of the wrong sign")));
            }
            if l == 0 {
                zeros += 1;
                if t.out_degree(v) > 0 {
                    return Err(Error::Domain(format!("label-0 vertex {v} is not a leaf")));
                }
            }
        }
        if zeros != self.n {
            return Err(Error::Domain("stored n differs from the label-0 count".into()));
        }
        Ok(())
    }

    pub fn key(&self) -> String {
        self.tree.encode()
    }

    pub fn mirrored(&self) -> Self {
        Excursion { tree: self.tree.map_labels(|l| -l), sign: self.sign.flip(), n: self.n }
    }

    /// Local indices of the label-0 leaves, in preorder.
    pub fn zero_leaves(&self) -> Vec<usize> {
        (0..self.tree.len()).filter(|&v| self.tree.label(v) == 0).collect()
    }
}

/// Plane forest of excursions. Vertex ids are creation order (preorder of the original tree).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcursionForest {
    pub roots: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub decorations: Vec<Excursion>,
    /// Local index of the leaf copy this excursion hangs from, in the parent decoration
    /// (or in the root component for forest roots).
    pub attach: Vec<usize>,
    pub height: Vec<usize>,
    /// Sign carried by the roots: + for positive levels, − for negative ones.
    pub root_sign: Sign,
}

impl ExcursionForest {
    pub fn len(&self) -> usize {
        self.decorations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decorations.is_empty()
    }

    /// ε_F(v): the root sign at even height, flipped at odd height.
    pub fn sign(&self, v: usize) -> Sign {
        if self.height[v] % 2 == 0 {
            self.root_sign
        } else {
            self.root_sign.flip()
        }
    }

    /// Shape as nested parentheses, one group per tree.
    pub fn shape_string(&self) -> String {
        let mut out = String::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for &r in &self.roots {
            out.push('(');
            stack.push((r, 0));
            while let Some(top) = stack.last_mut() {
                let (v, i) = *top;
                if i < self.children[v].len() {
                    top.1 += 1;
                    out.push('(');
                    stack.push((self.children[v][i], 0));
                } else {
                    out.push(')');
                    stack.pop();
                }
            }
        }
        out
    }

    /// Offspring counts per height: entry h lists the child counts of height-h vertices.
    pub fn offspring_by_height(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for v in 0..self.len() {
            let h = self.height[v];
            if out.len() <= h {
                out.resize(h + 1, Vec::new());
            }
            out[h].push(self.children[v].len());
        }
        out
    }

    /// Sign alternation and admissibility.
    pub fn check(&self) -> Result<()> {
        for v in 0..self.len() {
            let d = &self.decorations[v];
            if d.sign != self.sign(v) {
                return Err(Error::Reconstruction { vertex: v, msg: "sign does not alternate".into() });
            }
            if d.n != self.children[v].len() {
                return Err(Error::Reconstruction {
                    vertex: v,
                    msg: format!("decoration has n={} but the vertex has {} children", d.n, self.children[v].len()),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcursionDecomposition {
    pub level: i64,
    pub root_component: LabelledPlaneTree,
    pub forest: ExcursionForest,
}

impl ExcursionDecomposition {
    /// X_m⁺ for m ≥ 1 (positive decorations); X̌⁺_{−m} for m ≤ −1.
    pub fn plus_count(&self) -> usize {
        self.forest.decorations.iter().filter(|d| d.sign == Sign::Plus).count()
    }

    pub fn minus_count(&self) -> usize {
        self.forest.decorations.iter().filter(|d| d.sign == Sign::Minus).count()
    }
}

/// Cuts every edge crossing level m−½ (m ≥ 1) or m+½ (m ≤ −1).
pub fn decompose(t: &LabelledPlaneTree, m: i64) -> Result<ExcursionDecomposition> {
    if t.root_label() != 0 {
        return Err(Error::Domain("decompose needs root label 0".into()));
    }
    if m == 0 {
        return Err(Error::Domain("level must be nonzero".into()));
    }
    if let Err(v) = t.validate() {
        return Err(Error::Domain(format!("label jump at vertex {}", v.vertex)));
    }
    if m < 0 {
        let d = decompose_positive(&t.map_labels(|l| -l), -m);
        return Ok(mirror(d, m));
    }
    Ok(decompose_positive(t, m))
}

fn mirror(d: ExcursionDecomposition, level: i64) -> ExcursionDecomposition {
    let mut forest = d.forest;
    forest.decorations = forest.decorations.iter().map(Excursion::mirrored).collect();
    forest.root_sign = forest.root_sign.flip();
    ExcursionDecomposition {
        level,
        root_component: d.root_component.map_labels(|l| -l),
        forest,
    }
}

struct Piece {
    parents: Vec<Option<usize>>,
    labels: Vec<i64>,
}

fn decompose_positive(t: &LabelledPlaneTree, m: i64) -> ExcursionDecomposition {
    let n = t.len();
    // piece 0 is the root component; piece i+1 is forest vertex i
    let mut pieces = vec![Piece { parents: vec![None], labels: vec![0] }];
    let mut fparent: Vec<Option<usize>> = Vec::new();
    let mut attach: Vec<usize> = Vec::new();
    let mut height: Vec<usize> = Vec::new();
    let mut loc = vec![(0usize, 0usize); n];
    for v in 1..n {
        let u = t.parent(v).unwrap();
        let (pu, xu) = loc[u];
        let (a, b) = (t.label(u), t.label(v));
        let crossing = (a == m - 1 && b == m) || (a == m && b == m - 1);
        let piece = &mut pieces[pu];
        let local = piece.labels.len();
        piece.parents.push(Some(xu));
        piece.labels.push(b);
        if crossing {
            let f = pieces.len() - 1;
            fparent.push(if pu == 0 { None } else { Some(pu - 1) });
            attach.push(local);
            height.push(if pu == 0 { 0 } else { height[pu - 1] + 1 });
            pieces.push(Piece { parents: vec![None], labels: vec![b] });
            loc[v] = (f + 1, 0);
        } else {
            loc[v] = (pu, local);
        }
    }
    let mut it = pieces.into_iter();
    let root = it.next().unwrap();
    let root_component = LabelledPlaneTree::from_preorder(root.parents, root.labels).unwrap();
    let mut decorations = Vec::new();
    for (i, p) in it.enumerate() {
        let shift = if height[i] % 2 == 0 { m - 1 } else { m };
        let labels = p.labels.iter().map(|l| l - shift).collect();
        let tree = LabelledPlaneTree::from_preorder(p.parents, labels).unwrap();
        decorations.push(Excursion::new(tree).expect("decomposition produced an invalid excursion"));
    }
    let k = decorations.len();
    let mut children = vec![Vec::new(); k];
    let mut roots = Vec::new();
    for f in 0..k {
        match fparent[f] {
            Some(p) => children[p].push(f),
            None => roots.push(f),
        }
    }
    ExcursionDecomposition {
        level: m,
        root_component,
        forest: ExcursionForest {
            roots,
            parent: fparent,
            children,
            decorations,
            attach,
            height,
            root_sign: Sign::Plus,
        },
    }
}

/// Φ^m: glues the decorations back onto the root component.
pub fn reconstruct(d: &ExcursionDecomposition) -> Result<LabelledPlaneTree> {
    if d.level == 0 {
        return Err(Error::Domain("level must be nonzero".into()));
    }
    if d.level < 0 {
        let t = reconstruct(&mirror(d.clone(), -d.level))?;
        return Ok(t.map_labels(|l| -l));
    }
    let m = d.level;
    let f = &d.forest;
    if f.root_sign != Sign::Plus {
        return Err(Error::Reconstruction { vertex: 0, msg: "forest roots must be positive".into() });
    }
    f.check()?;
    let rc = &d.root_component;
    if rc.root_label() != 0 {
        return Err(Error::Domain("root component must be rooted at 0".into()));
    }
    // leaf slots: piece 0 is the root component, piece i+1 is forest vertex i
    let level_leaves: Vec<usize> = (0..rc.len()).filter(|&v| rc.label(v) == m).collect();
    if level_leaves.iter().any(|&v| rc.out_degree(v) > 0) {
        return Err(Error::Domain(format!("root component has a non-leaf vertex labelled {m}")));
    }
    let mut slots: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); f.len() + 1];
    let check_slots = |expected: &[usize], kids: &[usize], owner: Option<usize>| -> Result<()> {
        let got: Vec<usize> = kids.iter().map(|&c| f.attach[c]).collect();
        if got != expected {
            return Err(Error::Reconstruction {
                vertex: owner.unwrap_or(usize::MAX),
                msg: "attachment points do not match the leaves of the parent piece".into(),
            });
        }
        Ok(())
    };
    if level_leaves.len() != f.roots.len() {
        return Err(Error::Reconstruction {
            vertex: usize::MAX,
            msg: format!("{} leaves labelled {m} but {} forest roots", level_leaves.len(), f.roots.len()),
        });
    }
    check_slots(&level_leaves, &f.roots, None)?;
    for (&leaf, &r) in level_leaves.iter().zip(&f.roots) {
        slots[0].insert(leaf, r);
    }
    for v in 0..f.len() {
        let leaves = f.decorations[v].zero_leaves();
        check_slots(&leaves, &f.children[v], Some(v))?;
        for (&leaf, &c) in leaves.iter().zip(&f.children[v]) {
            slots[v + 1].insert(leaf, c);
        }
    }
    let shift = |fv: usize| if f.height[fv] % 2 == 0 { m - 1 } else { m };

    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    // (piece, local vertex, parent in output)
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(0, 0, None)];
    while let Some((mut piece, mut x, out_parent)) = stack.pop() {
        if let Some(&fv) = slots[piece].get(&x) {
            piece = fv + 1;
            x = 0;
        }
        let (tree, s) = if piece == 0 {
            (rc, 0)
        } else {
            (&f.decorations[piece - 1].tree, shift(piece - 1))
        };
        let idx = labels.len();
        parents.push(out_parent);
        labels.push(tree.label(x) + s);
        for &c in tree.children(x).iter().rev() {
            stack.push((piece, c as usize, Some(idx)));
        }
    }
    LabelledPlaneTree::from_preorder(parents, labels)
}

/// Multiset counts (c⁺, c⁻) keyed by the canonical encoding of each excursion.
pub fn excursion_counts(d: &ExcursionDecomposition) -> (BTreeMap<String, u64>, BTreeMap<String, u64>) {
    let mut plus = BTreeMap::new();
    let mut minus = BTreeMap::new();
    for e in &d.forest.decorations {
        let target = if e.sign == Sign::Plus { &mut plus } else { &mut minus };
        *target.entry(e.key()).or_insert(0) += 1;
    }
    (plus, minus)
}

/// First-hitting counts: `up[k]` = N_k and `down[k]` = Ň_k, index 0 holds the convention 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstHits {
    pub up: Vec<u64>,
    pub down: Vec<u64>,
}

impl FirstHits {
    pub fn n(&self, k: i64) -> u64 {
        let (v, i) = if k >= 0 { (&self.up, k) } else { (&self.down, -k) };
        v.get(i as usize).copied().unwrap_or(0)
    }
}

pub fn first_hit_counts(t: &LabelledPlaneTree) -> Result<FirstHits> {
    if t.root_label() != 0 {
        return Err(Error::Domain("first hits need root label 0".into()));
    }
    let n = t.len();
    let (mut hi, mut lo) = (vec![0i64; n], vec![0i64; n]);
    let mut up = vec![1u64];
    let mut down = vec![1u64];
    for v in 1..n {
        let p = t.parent(v).unwrap();
        let l = t.label(v);
        if l > hi[p] {
            let k = l as usize;
            if up.len() <= k {
                up.resize(k + 1, 0);
            }
            up[k] += 1;
        }
        if l < lo[p] {
            let k = (-l) as usize;
            if down.len() <= k {
                down.resize(k + 1, 0);
            }
            down[k] += 1;
        }
        hi[v] = hi[p].max(l);
        lo[v] = lo[p].min(l);
    }
    Ok(FirstHits { up, down })
}

/// Genealogy of the first-hit cascade above 0: entry k lists, for each first hit of level k
/// (the root for k = 0), the number of first hits of level k+1 below it.
pub fn first_hit_offspring(t: &LabelledPlaneTree) -> Result<Vec<Vec<u64>>> {
    if t.root_label() != 0 {
        return Err(Error::Domain("first hits need root label 0".into()));
    }
    let n = t.len();
    let mut hi = vec![0i64; n];
    // for each vertex, the index (within its level list) of its latest first-hit ancestor
    let mut owner = vec![0usize; n];
    let mut out: Vec<Vec<u64>> = vec![vec![0]];
    for v in 1..n {
        let p = t.parent(v).unwrap();
        let l = t.label(v);
        owner[v] = owner[p];
        hi[v] = hi[p].max(l);
        if l > hi[p] {
            let k = l as usize;
            out[k - 1][owner[p]] += 1;
            if out.len() <= k {
                out.push(Vec::new());
            }
            owner[v] = out[k].len();
            out[k].push(0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> LabelledPlaneTree {
        LabelledPlaneTree::decode(s).unwrap()
    }

    #[test]
    fn single_vertex() {
        let d = decompose(&t("0()"), 1).unwrap();
        assert_eq!(d.root_component, t("0()"));
        assert!(d.forest.is_empty());
        assert_eq!(reconstruct(&d).unwrap(), t("0()"));
    }

    #[test]
    fn path_to_one() {
        let d = decompose(&t("0(+())"), 1).unwrap();
        assert_eq!(d.root_component.encode(), "0(+())");
        assert_eq!(d.forest.len(), 1);
        assert_eq!(d.forest.decorations[0].key(), "1()");
        assert_eq!(d.forest.decorations[0].n, 0);
        let (p, m) = excursion_counts(&d);
        assert_eq!(p.get("1()"), Some(&1));
        assert!(m.is_empty());
    }

    #[test]
    fn two_leaves() {
        let d = decompose(&t("0(+()+())"), 1).unwrap();
        assert_eq!(d.forest.roots.len(), 2);
        assert_eq!(d.plus_count(), 2);
        assert_eq!(d.forest.shape_string(), "()()");
    }

    #[test]
    fn nested_excursions() {
        let tr = t("0(+(-(+())+())0())");
        let d = decompose(&tr, 1).unwrap();
        assert_eq!(d.root_component.encode(), "0(+()0())");
        assert_eq!(d.forest.decorations[0].key(), "1(-()+())");
        assert_eq!(d.forest.decorations[1].key(), "-1(+())");
        assert_eq!(d.forest.decorations[2].key(), "1()");
        assert_eq!(d.forest.shape_string(), "((()))");
        d.forest.check().unwrap();
        assert_eq!(reconstruct(&d).unwrap(), tr);
        for m in [-2, -1, 1, 2, 3] {
            assert_eq!(reconstruct(&decompose(&tr, m).unwrap()).unwrap(), tr, "level {m}");
        }
    }

    #[test]
    fn negative_level_mirrors() {
        let tr = t("0(-(+()))");
        let d = decompose(&tr, -1).unwrap();
        assert_eq!(d.root_component.encode(), "0(-())");
        assert_eq!(d.forest.root_sign, Sign::Minus);
        assert_eq!(d.forest.decorations[0].key(), "-1(+())");
        assert_eq!(d.forest.decorations[1].key(), "1()");
        let p = tr.edge_profile().unwrap();
        assert_eq!(d.plus_count() as u64, p.cp(1));
        assert_eq!(d.minus_count() as u64, p.cm(1));
    }

    #[test]
    fn forged_admissibility_fails() {
        let mut d = decompose(&t("0(+())"), 1).unwrap();
        let forged = Excursion::new(t("1(-()-())")).unwrap();
        d.forest.decorations[0] = forged;
        match reconstruct(&d) {
            Err(Error::Reconstruction { vertex, .. }) => assert_eq!(vertex, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn excursion_invariants() {
        assert!(Excursion::new(t("1(-(+()))")).is_err());
        assert!(Excursion::new(t("0()")).is_err());
        assert!(Excursion::new(t("1(-(-()))")).is_err());
        assert!(Excursion::new(t("1(+(-(-())))")).is_ok());
        assert_eq!(Excursion::new(t("1(-()0(-()))")).unwrap().n, 2);
    }

    #[test]
    fn first_hits() {
        let h = first_hit_counts(&t("0()")).unwrap();
        assert_eq!(h.n(1), 0);
        let h = first_hit_counts(&t("0(+(+()))")).unwrap();
        assert_eq!((h.n(1), h.n(2)), (1, 1));
        let tr = t("0(+(-(+())+())+()-(-()))");
        let h = first_hit_counts(&tr).unwrap();
        assert_eq!((h.n(1), h.n(2), h.n(-1), h.n(-2)), (2, 1, 1, 1));
        assert_eq!(decompose(&tr, 1).unwrap().forest.roots.len(), 2);
        let g = first_hit_offspring(&tr).unwrap();
        assert_eq!(g, vec![vec![2], vec![1, 0], vec![0]]);
    }
}
