//! Explicit transition kernels of the binary tree model, the harmonic function of the
//! conditioned chain, kernel-driven simulation and the vertical-profile count.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::genfun::{FTable, JointTable, Series};
use crate::num::{binomial, quarter_pow, Rational, Scalar};
use crate::sampler::SamplerConfig;

/// (X⁺, X⁻) in 𝔖: q = 0 whenever p = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub p: usize,
    pub q: usize,
}

impl State {
    pub const ABSORBING: State = State { p: 0, q: 0 };

    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 && q > 0 {
            return Err(Error::Domain(format!("({p},{q}) is outside the state space")));
        }
        Ok(State { p, q })
    }

    pub fn is_valid(&self) -> bool {
        self.p > 0 || self.q == 0
    }
}

/// (X⁺, X⁻, M⁻) for trees with V edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CondState {
    pub p: usize,
    pub q: usize,
    pub v: usize,
}

impl CondState {
    pub fn new(p: usize, q: usize, v: usize, total: usize) -> Result<Self> {
        let s = CondState { p, q, v };
        if !s.is_valid(total) {
            return Err(Error::Domain(format!("({p},{q},{v}) is outside the state space for V={total}")));
        }
        Ok(s)
    }

    pub fn absorbing(total: usize) -> Self {
        CondState { p: 0, q: 0, v: total }
    }

    pub fn is_valid(&self, total: usize) -> bool {
        if self.p == 0 {
            self.q == 0 && self.v == total
        } else {
            self.v <= total
        }
    }
}

fn bin<S: Scalar>(n: usize, k: usize) -> S {
    S::from_rational(&Rational::from_integer(binomial(n, k)))
}

/// p·4^{−p−s}/(p+s)·C(p+s, r)·C(p+s, q), the combinatorial factor shared by both kernels.
fn kernel_factor<S: Scalar>(from_p: usize, from_q: usize, r: usize, s: usize) -> S {
    let n = from_p + s;
    let lead = Rational::from_integer(BigInt::from(from_p)) * quarter_pow(n) / Rational::from_integer(BigInt::from(n));
    S::from_rational(&lead) * bin::<S>(n, r) * bin::<S>(n, from_q)
}

fn f_at<S: Scalar>(f: &FTable<S>, p: usize, q: usize) -> Result<S> {
    f.get(p, q)
        .cloned()
        .ok_or_else(|| Error::Domain(format!("f table does not cover f_{p}({q})")))
}

/// Transition probability of the free binary tree model from (p, q) to (r, s).
pub fn transition_prob<S: Scalar>(f: &FTable<S>, from: State, to: State) -> Result<S> {
    if !from.is_valid() || !to.is_valid() {
        return Err(Error::Domain("state outside 𝔖".into()));
    }
    if from == State::ABSORBING {
        return Ok(if to == State::ABSORBING { S::one() } else { S::zero() });
    }
    let den = f_at(f, from.p, from.q)?;
    if den == S::zero() {
        return Err(Error::Unreachable(format!("f_{}({}) = 0", from.p, from.q)));
    }
    let n = from.p + to.q;
    if to.p > n || from.q > n {
        return Ok(S::zero());
    }
    let num = f_at(f, to.p, to.q)?;
    Ok(kernel_factor::<S>(from.p, from.q, to.p, to.q) * num / den)
}

fn ft_at<S: Scalar>(ft: &JointTable<S>, p: usize, q: usize, l: i64) -> Result<S> {
    if l < 0 {
        return Ok(S::zero());
    }
    ft.get(p, q, l as usize)
        .ok_or_else(|| Error::Domain(format!("joint table does not cover f̃_{p}({q},{l})")))
}

/// Transition probability of the chain conditioned on V edges.
pub fn cond_transition_prob<S: Scalar>(
    ft: &JointTable<S>,
    total: usize,
    from: CondState,
    to: CondState,
) -> Result<S> {
    cond_transition_prob_shifted(ft, total, from, to, 0)
}

/// The conditioned kernel with the target edge mass rule moved to w = v + p + q + `w_shift`.
/// Only `w_shift = 0` is the true kernel; other values serve as a deliberate mutation.
pub fn cond_transition_prob_shifted<S: Scalar>(
    ft: &JointTable<S>,
    total: usize,
    from: CondState,
    to: CondState,
    w_shift: i64,
) -> Result<S> {
    if !from.is_valid(total) || !to.is_valid(total) {
        return Err(Error::Domain("state outside 𝔖^(V)".into()));
    }
    if from == CondState::absorbing(total) {
        return Ok(if to == from { S::one() } else { S::zero() });
    }
    if to.v as i64 != (from.v + from.p + from.q) as i64 + w_shift {
        return Ok(S::zero());
    }
    let vt = total as i64;
    let den = ft_at(ft, from.p, from.q, vt - from.v as i64 - from.p as i64)?;
    if den == S::zero() {
        return Err(Error::Unreachable(format!("f̃ vanishes at ({},{},{})", from.p, from.q, from.v)));
    }
    let n = from.p + to.q;
    if to.p > n || from.q > n {
        return Ok(S::zero());
    }
    let num = ft_at(ft, to.p, to.q, vt - to.v as i64 - to.p as i64)?;
    Ok(kernel_factor::<S>(from.p, from.q, to.p, to.q) * num / den)
}

/// H(p, q, v) = f̃_p(q, V − v − p) / f_p(q).
pub fn harmonic_h<S: Scalar>(f: &FTable<S>, ft: &JointTable<S>, total: usize, s: CondState) -> Result<S> {
    let den = f_at(f, s.p, s.q)?;
    if den == S::zero() {
        return Err(Error::Unreachable(format!("f_{}({}) = 0", s.p, s.q)));
    }
    let num = ft_at(ft, s.p, s.q, total as i64 - s.v as i64 - s.p as i64)?;
    Ok(num / den)
}

/// Draws rows of the free kernel by inverse CDF, in floating point.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    nu: Vec<f64>,
    /// rows[r][s] = f_r(s) for s < nu.len()
    rows: Vec<Vec<f64>>,
}

const TAIL: f64 = 1e-15;
const S_CAP: usize = 10_000;

impl ChainSampler {
    pub fn new(nu: &Series<f64>) -> Self {
        let nu = nu.coeffs().to_vec();
        let mut first = vec![0.0; nu.len()];
        first[0] = 1.0;
        ChainSampler { nu, rows: vec![first] }
    }

    fn f(&mut self, r: usize, s: usize) -> f64 {
        while self.rows.len() <= r {
            let last = self.rows.last().unwrap();
            let n = self.nu.len();
            let mut next = vec![0.0; n];
            for (i, a) in last.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (j, b) in self.nu[..n - i].iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            self.rows.push(next);
        }
        self.rows[r][s]
    }

    /// Probability of (r, s) from (p, q), evaluated in log space.
    pub fn prob(&mut self, from: State, r: usize, s: usize) -> f64 {
        let n = from.p + s;
        if r > n || from.q > n {
            return 0.0;
        }
        let fr = self.f(r, s);
        let fp = self.f(from.p, from.q);
        if fr == 0.0 {
            return 0.0;
        }
        let (nn, p) = (n as u64, from.p as f64);
        let log = p.ln() - n as f64 * 4f64.ln() - (n as f64).ln()
            + ln_binomial(nn, r as u64)
            + ln_binomial(nn, from.q as u64)
            + fr.ln()
            - fp.ln();
        log.exp()
    }

    pub fn step<R: Rng>(&mut self, from: State, rng: &mut R) -> Result<State> {
        if from == State::ABSORBING {
            return Ok(from);
        }
        let cap = S_CAP.min(self.nu.len() - 1);
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut last = None;
        for s in 0..=cap {
            for r in 0..=from.p + s {
                let x = self.prob(from, r, s);
                if x == 0.0 {
                    continue;
                }
                cum += x;
                last = Some(State { p: r, q: s });
                if cum >= u {
                    return Ok(State { p: r, q: s });
                }
            }
            if 1.0 - cum < TAIL {
                return last.ok_or_else(|| Error::Internal("empty kernel row".into()));
            }
        }
        Err(Error::resource("kernel row length", cap as u64))
    }
}

/// A path of `steps` transitions of the free kernel started at `start`.
pub fn simulate_chain(nu: &Series<f64>, start: State, steps: usize, cfg: &SamplerConfig) -> Result<Vec<State>> {
    let mut sampler = ChainSampler::new(nu);
    let mut rng = cfg.rng(0);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    let mut cur = start;
    for _ in 0..steps {
        cur = sampler.step(cur, &mut rng)?;
        path.push(cur);
    }
    Ok(path)
}

/// Card(𝓑) and U for a prescribed vertical edge profile of binary trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCount<S> {
    pub card: Rational,
    pub u: S,
}

/// `upper[k-1] = (p_k, q_k) = (x_k⁺, x_k⁻)`, `lower[k-1] = (p̌_k, q̌_k) = (x̌_k⁺, x̌_k⁻)`.
/// Trailing zero states may be omitted.
pub fn count_profile<S: Scalar>(
    f: &FTable<S>,
    upper: &[(usize, usize)],
    lower: &[(usize, usize)],
) -> Result<ProfileCount<S>> {
    let card = profile_cardinality(upper, lower)?;
    let get = |v: &[(usize, usize)], k: usize| v.get(k).copied().unwrap_or((0, 0));
    let (p1, q1) = get(upper, 0);
    let (pc1, qc1) = get(lower, 0);
    let m0 = pc1 + q1 + 1;
    let u = if card.is_zero() {
        S::zero()
    } else {
        let lead = quarter_pow(m0) / Rational::from_integer(BigInt::from(m0));
        S::from_rational(&lead) * bin::<S>(m0, p1) * bin::<S>(m0, qc1) * f_at(f, p1, q1)? * f_at(f, qc1, pc1)?
    };
    Ok(ProfileCount { card, u })
}

fn prefix_len(v: &[(usize, usize)], key: impl Fn((usize, usize)) -> usize) -> Result<usize> {
    let m = v.iter().take_while(|&&x| key(x) > 0).count();
    if v[m..].iter().any(|&x| key(x) > 0) {
        return Err(Error::Domain("profile support is not an initial interval".into()));
    }
    Ok(m)
}

/// The product formula for Card(𝓑).
pub fn profile_cardinality(upper: &[(usize, usize)], lower: &[(usize, usize)]) -> Result<Rational> {
    if upper.iter().any(|&(p, q)| p == 0 && q > 0) || lower.iter().any(|&(pc, qc)| qc == 0 && pc > 0) {
        return Ok(Rational::zero());
    }
    let m = prefix_len(upper, |x| x.0)?;
    let mc = prefix_len(lower, |x| x.1)?;
    let get = |v: &[(usize, usize)], k: usize| v.get(k).copied().unwrap_or((0, 0));
    let int = |n: usize| Rational::from_integer(BigInt::from(n));
    let binr = |n: usize, k: usize| Rational::from_integer(binomial(n, k));
    let (p1, q1) = get(upper, 0);
    let (pc1, qc1) = get(lower, 0);
    let m0 = pc1 + q1 + 1;
    let mut card = binr(m0, p1) * binr(m0, qc1) / int(m0);
    for i in 0..mc {
        let (pc_i, qc_i) = get(lower, i);
        let (pc_next, qc_next) = get(lower, i + 1);
        let mi = pc_next + qc_i;
        card *= int(qc_i) / int(mi) * binr(mi, qc_next) * binr(mi, pc_i);
    }
    for j in 0..m {
        let (p_j, q_j) = get(upper, j);
        let (p_next, q_next) = get(upper, j + 1);
        let mj = p_j + q_next;
        card *= int(p_j) / int(mj) * binr(mj, p_next) * binr(mj, q_j);
    }
    debug_assert!(card.is_integer() || card < Rational::one());
    Ok(card)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{closed_form_series, f_table, joint_table};
    use crate::model::{Builtin, TreeModel};
    use crate::num::{int, rat};

    fn table(n: usize) -> FTable<Rational> {
        let nu = closed_form_series::<Rational>(Builtin::IncompleteBinary, n).unwrap();
        f_table(&nu, n, n).unwrap()
    }

    #[test]
    fn free_kernel_values() {
        let f = table(10);
        let p = |a, b, c, d| transition_prob(&f, State::new(a, b).unwrap(), State::new(c, d).unwrap()).unwrap();
        assert_eq!(p(0, 0, 0, 0), int(1));
        assert_eq!(p(0, 0, 1, 0), int(0));
        assert_eq!(p(1, 0, 0, 0), rat(5, 8));
        assert!(transition_prob(&f, State { p: 2, q: 1 }, State { p: 0, q: 3 }).is_err());
        assert!(transition_prob(&f, State { p: 20, q: 0 }, State { p: 0, q: 0 }).is_err());
    }

    #[test]
    fn free_rows_nearly_sum_to_one() {
        let nu = closed_form_series::<f64>(Builtin::IncompleteBinary, 220).unwrap();
        let f = f_table(&nu, 220, 220).unwrap();
        for from in [State { p: 1, q: 0 }, State { p: 2, q: 3 }] {
            let mut total = 0.0;
            for s in 0..=200 {
                for r in 0..=from.p + s {
                    total += transition_prob(&f, from, State { p: r, q: s }).unwrap_or(0.0);
                }
            }
            assert!((1.0 - total).abs() < 1e-9, "{from:?}: {total}");
        }
    }

    #[test]
    fn conditioned_kernel_is_h_transform() {
        let total = 6;
        let m = TreeModel::builtin(Builtin::IncompleteBinary);
        let ft = joint_table(&m, 8, 8, total).unwrap();
        let f = table(8);
        for p in 1..=3 {
            for q in 0..=3 {
                for v in 0..=total {
                    let from = CondState { p, q, v };
                    let hf = harmonic_h(&f, &ft, total, from).unwrap();
                    if hf.is_zero() {
                        continue;
                    }
                    for r in 0..=3 {
                        for s in 0..=3 {
                            if r == 0 && s > 0 {
                                continue;
                            }
                            let w = v + p + q;
                            if w > total || (r == 0 && w != total) {
                                continue;
                            }
                            let to = CondState { p: r, q: s, v: w };
                            let c = cond_transition_prob(&ft, total, from, to).unwrap();
                            let free = transition_prob(&f, State { p, q }, State { p: r, q: s }).unwrap();
                            let ht = harmonic_h(&f, &ft, total, to).unwrap();
                            assert_eq!(c, ht / &hf * free);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn conditioned_kernel_support() {
        let m = TreeModel::builtin(Builtin::IncompleteBinary);
        let ft = joint_table(&m, 4, 4, 4).unwrap();
        let a = CondState::absorbing(4);
        assert_eq!(cond_transition_prob(&ft, 4, a, a).unwrap(), int(1));
        let from = CondState { p: 1, q: 0, v: 0 };
        assert_eq!(cond_transition_prob(&ft, 4, from, CondState { p: 1, q: 0, v: 2 }).unwrap(), int(0));
    }

    #[test]
    fn profile_counts() {
        let f = table(6);
        // root with a single child labelled 1
        let c = count_profile(&f, &[(1, 0)], &[]).unwrap();
        assert_eq!(c.card, int(1));
        assert_eq!(profile_cardinality(&[(0, 1)], &[]).unwrap(), int(0));
        assert!(profile_cardinality(&[(1, 0), (0, 0), (1, 0)], &[]).is_err());
        // the single vertex
        let c = count_profile(&f, &[], &[]).unwrap();
        assert_eq!(c.card, int(1));
        assert_eq!(c.u, rat(1, 4));
    }

    #[test]
    fn simulated_paths_absorb() {
        let nu = closed_form_series::<f64>(Builtin::IncompleteBinary, 600).unwrap();
        let cfg = SamplerConfig::new(7);
        let path = simulate_chain(&nu, State { p: 1, q: 0 }, 30, &cfg).unwrap();
        if let Some(k) = path.iter().position(|s| *s == State::ABSORBING) {
            assert!(path[k..].iter().all(|s| *s == State::ABSORBING));
        }
        assert_eq!(simulate_chain(&nu, State::ABSORBING, 5, &cfg).unwrap(), vec![State::ABSORBING; 6]);
        assert_eq!(path, simulate_chain(&nu, State { p: 1, q: 0 }, 30, &cfg).unwrap());
    }
}
