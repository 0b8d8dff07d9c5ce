//! Labelled plane trees stored in preorder, with profiles and the text grammar.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

const NO_PARENT: u32 = u32::MAX;

/// Rooted plane tree with integer labels. Vertex 0 is the root and indices follow preorder,
/// so the children of a vertex appear in increasing index order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LabelledPlaneTree {
    labels: Vec<i32>,
    parent: Vec<u32>,
    offsets: Vec<u32>,
    kids: Vec<u32>,
}

impl fmt::Debug for LabelledPlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 200 {
            write!(f, "Tree({})", self.encode())
        } else {
            write!(f, "Tree(<{} vertices>)", self.len())
        }
    }
}

impl LabelledPlaneTree {
    pub fn single(label: i64) -> Self {
        Self::from_preorder(vec![None], vec![label]).unwrap()
    }

    /// `parents[i]` must be `None` for i = 0 and otherwise `i-1` or an ancestor of `i-1`.
    pub fn from_preorder(parents: Vec<Option<usize>>, labels: Vec<i64>) -> Result<Self> {
        let n = parents.len();
        if n == 0 || labels.len() != n {
            return Err(Error::Domain("empty tree or label length mismatch".into()));
        }
        if n >= NO_PARENT as usize {
            return Err(Error::resource("tree vertices", NO_PARENT as u64 - 1));
        }
        if parents[0].is_some() {
            return Err(Error::Domain("vertex 0 must be the root".into()));
        }
        let mut parent = Vec::with_capacity(n);
        parent.push(NO_PARENT);
        // rightmost path of the tree built so far
        let mut spine: Vec<usize> = vec![0];
        for (i, p) in parents.iter().enumerate().skip(1) {
            let p = p.ok_or_else(|| Error::Domain(format!("second root at {i}")))?;
            while spine.last().is_some_and(|&s| s != p) {
                spine.pop();
            }
            if spine.is_empty() {
                return Err(Error::Domain(format!("vertex {i} is not in preorder position")));
            }
            spine.push(i);
            parent.push(p as u32);
        }
        let labels = labels
            .into_iter()
            .map(|l| i32::try_from(l).map_err(|_| Error::Domain("label out of range".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(labels, parent))
    }

    fn from_parts(labels: Vec<i32>, parent: Vec<u32>) -> Self {
        let n = labels.len();
        let mut offsets = vec![0u32; n + 1];
        for &p in &parent[1..] {
            offsets[p as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut kids = vec![0u32; n - 1];
        for (i, &p) in parent.iter().enumerate().skip(1) {
            kids[fill[p as usize] as usize] = i as u32;
            fill[p as usize] += 1;
        }
        LabelledPlaneTree { labels, parent, offsets, kids }
    }

    /// Builds from ordered child lists in any index order; output is re-indexed to preorder.
    pub fn from_children(root: usize, children: &[Vec<usize>], labels: &[i64]) -> Result<Self> {
        let n = children.len();
        if labels.len() != n || root >= n {
            return Err(Error::Domain("child lists and labels disagree".into()));
        }
        let mut seen = vec![false; n];
        let mut parents = Vec::with_capacity(n);
        let mut labs = Vec::with_capacity(n);
        let mut stack = vec![(root, None)];
        while let Some((v, p)) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Domain(format!("vertex {v} reached twice")));
            }
            let idx = parents.len();
            parents.push(p);
            labs.push(labels[v]);
            for &c in children[v].iter().rev() {
                if c >= n {
                    return Err(Error::Domain(format!("child index {c} out of range")));
                }
                stack.push((c, Some(idx)));
            }
        }
        if parents.len() != n {
            return Err(Error::Domain("child lists do not span a tree".into()));
        }
        Self::from_preorder(parents, labs)
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// |t|, the number of edges.
    pub fn edges(&self) -> usize {
        self.len() - 1
    }

    pub fn root_label(&self) -> i64 {
        self.labels[0] as i64
    }

    pub fn label(&self, v: usize) -> i64 {
        self.labels[v] as i64
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> + '_ {
        self.labels.iter().map(|&l| l as i64)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn children(&self, v: usize) -> &[u32] {
        &self.kids[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn min_label(&self) -> i64 {
        self.labels().min().unwrap()
    }

    pub fn max_label(&self) -> i64 {
        self.labels().max().unwrap()
    }

    /// Subtree sizes; the subtree of v is the index range `v..v+size[v]`.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1usize; self.len()];
        for v in (1..self.len()).rev() {
            size[self.parent[v] as usize] += size[v];
        }
        size
    }

    /// Same shape with every label replaced by `f(label)`.
    pub fn map_labels(&self, f: impl Fn(i64) -> i64) -> Self {
        let mut t = self.clone();
        for l in &mut t.labels {
            *l = f(*l as i64) as i32;
        }
        t
    }

    pub fn shifted(&self, by: i64) -> Self {
        self.map_labels(|l| l + by)
    }

    /// Checks the increment constraint; reports the first offending vertex.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        for v in 1..self.len() {
            let p = self.parent[v] as usize;
            let jump = self.labels[v] as i64 - self.labels[p] as i64;
            if jump.abs() > 1 {
                return Err(Violation { vertex: v, jump });
            }
        }
        Ok(())
    }

    /// t^[l]: drop every vertex with a strict ancestor labelled l.
    pub fn truncate(&self, l: i64) -> Self {
        let n = self.len();
        let mut keep = vec![true; n];
        let mut map = vec![usize::MAX; n];
        let mut parents = Vec::new();
        let mut labels = Vec::new();
        for v in 0..n {
            if v > 0 {
                let p = self.parent[v] as usize;
                keep[v] = keep[p] && self.labels[p] as i64 != l;
            }
            if keep[v] {
                map[v] = parents.len();
                parents.push(self.parent(v).map(|p| map[p]));
                labels.push(self.labels[v] as i64);
            }
        }
        Self::from_preorder(parents, labels).unwrap()
    }

    /// Canonical text form, e.g. `0(+(-()))`.
    pub fn encode(&self) -> String {
        let mut out = String::with_capacity(3 * self.len() + 4);
        out.push_str(&self.labels[0].to_string());
        out.push('(');
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(top) = stack.last_mut() {
            let (v, i) = *top;
            let kids = self.children(v);
            if i < kids.len() {
                top.1 += 1;
                let c = kids[i] as usize;
                out.push(match self.labels[c] - self.labels[v] {
                    1 => '+',
                    -1 => '-',
                    0 => '0',
                    // invalid jumps cannot be written in the grammar
                    _ => '?',
                });
                out.push('(');
                stack.push((c, 0));
            } else {
                out.push(')');
                stack.pop();
            }
        }
        out
    }

    pub fn decode(text: &str) -> Result<Self> {
        let b = text.as_bytes();
        let err = |offset: usize, msg: &str| Error::Parse { offset, msg: msg.to_string() };
        let mut i = 0;
        if i < b.len() && b[i] == b'-' {
            i += 1;
        }
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        let root: i64 = text[..i].parse().map_err(|_| err(0, "expected root label"))?;
        if i >= b.len() || b[i] != b'(' {
            return Err(err(i, "expected '('"));
        }
        i += 1;
        let mut parents = vec![None];
        let mut labels = vec![root];
        let mut stack = vec![0usize];
        while let Some(&v) = stack.last() {
            if i >= b.len() {
                return Err(err(i, "unbalanced parentheses"));
            }
            match b[i] {
                b')' => {
                    stack.pop();
                    i += 1;
                }
                c @ (b'+' | b'-' | b'0') => {
                    let inc = match c {
                        b'+' => 1,
                        b'-' => -1,
                        _ => 0,
                    };
                    if b.get(i + 1) != Some(&b'(') {
                        return Err(err(i + 1, "expected '(' after increment"));
                    }
                    let idx = labels.len();
                    parents.push(Some(v));
                    labels.push(labels[v] + inc);
                    stack.push(idx);
                    i += 2;
                }
                _ => return Err(err(i, "unexpected character")),
            }
        }
        if i != b.len() {
            return Err(err(i, "trailing input"));
        }
        Self::from_preorder(parents, labels)
    }

    /// Vertical edge profile; defined for trees rooted at label 0.
    pub fn edge_profile(&self) -> Result<VerticalEdgeProfile> {
        if self.root_label() != 0 {
            return Err(Error::Domain("edge profile needs root label 0".into()));
        }
        let lo = self.min_label();
        let hi = self.max_label();
        let up = hi.max(0) as usize + 2;
        let down = (-lo).max(0) as usize + 2;
        let mut p = VerticalEdgeProfile {
            x_plus: vec![0; up],
            x_minus: vec![0; up],
            check_plus: vec![0; down],
            check_minus: vec![0; down],
            mass_below: vec![0; up],
            vertical: BTreeMap::new(),
            zero_edges: 0,
        };
        // edges with both endpoints <= m-1, bucketed by max endpoint label
        let mut by_max: BTreeMap<i64, u64> = BTreeMap::new();
        for v in 0..self.len() {
            *p.vertical.entry(self.label(v)).or_insert(0) += 1;
            let Some(u) = self.parent(v) else { continue };
            let (a, b) = (self.label(u), self.label(v));
            if a == b {
                p.zero_edges += 1;
            } else if a.min(b) >= 0 {
                let m = a.max(b) as usize;
                if b > a {
                    p.x_plus[m] += 1;
                } else {
                    p.x_minus[m] += 1;
                }
            } else {
                let m = (-a.min(b)) as usize;
                if b > a {
                    p.check_plus[m] += 1;
                } else {
                    p.check_minus[m] += 1;
                }
            }
            *by_max.entry(a.max(b)).or_insert(0) += 1;
        }
        let mut acc = 0u64;
        let mut it = by_max.iter().peekable();
        for m in 1..up {
            while let Some((&k, &c)) = it.peek() {
                if k <= m as i64 - 1 {
                    acc += c;
                    it.next();
                } else {
                    break;
                }
            }
            p.mass_below[m] = acc;
        }
        Ok(p)
    }
}

/// First vertex whose label differs from its parent's by more than one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub vertex: usize,
    pub jump: i64,
}

/// (X±, X̌±, M⁻, vertical profile) of a tree rooted at 0. Index 0 of the edge tables is unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerticalEdgeProfile {
    pub x_plus: Vec<u64>,
    pub x_minus: Vec<u64>,
    pub check_plus: Vec<u64>,
    pub check_minus: Vec<u64>,
    pub mass_below: Vec<u64>,
    pub vertical: BTreeMap<i64, u64>,
    pub zero_edges: u64,
}

fn at(v: &[u64], m: i64) -> u64 {
    if m < 0 {
        0
    } else {
        v.get(m as usize).copied().unwrap_or(0)
    }
}

impl VerticalEdgeProfile {
    /// X_m⁺ (m ≥ 1).
    pub fn xp(&self, m: i64) -> u64 {
        if m < 1 {
            0
        } else {
            at(&self.x_plus, m)
        }
    }

    pub fn xm(&self, m: i64) -> u64 {
        if m < 1 {
            0
        } else {
            at(&self.x_minus, m)
        }
    }

    /// X̌_m⁺: edges −m → −m+1.
    pub fn cp(&self, m: i64) -> u64 {
        if m < 1 {
            0
        } else {
            at(&self.check_plus, m)
        }
    }

    /// X̌_m⁻: edges −m+1 → −m.
    pub fn cm(&self, m: i64) -> u64 {
        if m < 1 {
            0
        } else {
            at(&self.check_minus, m)
        }
    }

    /// M_m⁻; beyond the label range every edge counts.
    pub fn mass(&self, m: i64) -> u64 {
        if m < 1 {
            return 0;
        }
        match self.mass_below.get(m as usize) {
            Some(&x) => x,
            None => *self.mass_below.last().unwrap(),
        }
    }

    pub fn vertical_at(&self, k: i64) -> u64 {
        self.vertical.get(&k).copied().unwrap_or(0)
    }

    /// Last m with X_m⁺ > 0 (0 if none).
    pub fn height(&self) -> i64 {
        self.x_plus.iter().rposition(|&x| x > 0).unwrap_or(0) as i64
    }

    pub fn depth(&self) -> i64 {
        self.check_minus.iter().rposition(|&x| x > 0).unwrap_or(0) as i64
    }

    /// (X_m⁺, X_m⁻) for m = 1 ..= height+1 (ends in (0,0)).
    pub fn upper_path(&self) -> Vec<(u64, u64)> {
        (1..=self.height() + 1).map(|m| (self.xp(m), self.xm(m))).collect()
    }

    /// (X̌_m⁺, X̌_m⁻) for m = 1 ..= depth+1.
    pub fn lower_path(&self) -> Vec<(u64, u64)> {
        (1..=self.depth() + 1).map(|m| (self.cp(m), self.cm(m))).collect()
    }

    pub fn total_edges(&self) -> u64 {
        self.x_plus.iter().chain(&self.x_minus).chain(&self.check_plus).chain(&self.check_minus).sum::<u64>()
            + self.zero_edges
    }
}
