//! Exact and statistical verification: enumeration of both constructions
//! with rational probabilities, the coalescence-time law, and Monte Carlo
//! suites for the height, two-point and cross-pipeline limit checks.

use crate::builders::{build_coalescent, build_forward, FrozenTree, VertexLabel};
use crate::continuum::{limit_distance_matrix, sample_coalescent, FunctionTable};
use crate::metrics::{dc_distance, graph_distance, height};
use crate::sequences::{
    alternating_sequence, excursion_sequence, profile_sequence, walk, FreezeSequence,
    HarmonicSums, ProfileShape, ProfileSpec,
};
use crate::stats;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// State-space guard for the exact enumerations.
pub const MAX_ENUM_STEPS: usize = 8;

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("enumeration guard exceeded: {n} steps > {max}")]
    GuardExceeded { n: usize, max: usize },
    #[error("walk extinct at step {tau}, cannot enumerate {n} steps")]
    Extinct { tau: usize, n: usize },
    #[error("label {0} does not belong to the sequence's vertex set")]
    UnknownLabel(String),
    #[error("the two vertices must be distinct")]
    DistinctRequired,
}

/// Vertex label with the actives collapsed to one symbol, as in the
/// distribution-equality statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonLabel {
    Frozen(u32),
    Active,
}

/// Identifies a vertex by the label of its parent edge (the root is special).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParentRef {
    Root,
    Edge(u32),
}

/// Canonical form of a rooted, edge-labelled, vertex-labelled tree with the
/// active labels collapsed. Since edge labels are distinct, every non-root
/// vertex is identified by its parent-edge label, so the sorted edge list is
/// a faithful encoding with no ordering choices left.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalTree {
    pub root_label: CanonLabel,
    /// `(edge label, parent, child label)`, sorted by edge label.
    pub edges: Vec<(u32, ParentRef, CanonLabel)>,
}

impl CanonicalTree {
    pub fn of(tree: &FrozenTree) -> Self {
        let n = tree.vertex_count() as u32;
        let parent: Vec<u32> = (0..n)
            .map(|v| tree.parent(v).unwrap_or(NO_PARENT))
            .collect();
        let edge: Vec<u32> = (0..n).map(|v| tree.edge_label(v).unwrap_or(0)).collect();
        let frozen: Vec<u32> = (0..n)
            .map(|v| match tree.vertex_label(v) {
                VertexLabel::Frozen(t) => t,
                VertexLabel::Active(_) => 0,
            })
            .collect();
        canonical_from_raw(&parent, &edge, &frozen, tree.root())
    }
}

impl std::fmt::Display for CanonLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CanonLabel::Frozen(t) => write!(f, "{t}"),
            CanonLabel::Active => write!(f, "a"),
        }
    }
}

impl std::fmt::Display for CanonicalTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "root={}", self.root_label)?;
        for (e, p, l) in &self.edges {
            match p {
                ParentRef::Root => write!(f, "; {e}<root:{l}")?,
                ParentRef::Edge(pe) => write!(f, "; {e}<{pe}:{l}")?,
            }
        }
        Ok(())
    }
}

fn canonical_from_raw(parent: &[u32], edge: &[u32], frozen: &[u32], root: u32) -> CanonicalTree {
    let label = |v: u32| {
        if frozen[v as usize] > 0 {
            CanonLabel::Frozen(frozen[v as usize])
        } else {
            CanonLabel::Active
        }
    };
    let mut edges = Vec::with_capacity(parent.len().saturating_sub(1));
    for v in 0..parent.len() as u32 {
        if v == root || parent[v as usize] == NO_PARENT {
            continue;
        }
        let p = parent[v as usize];
        let pref = if p == root {
            ParentRef::Root
        } else {
            ParentRef::Edge(edge[p as usize])
        };
        edges.push((edge[v as usize], pref, label(v)));
    }
    edges.sort_unstable();
    CanonicalTree {
        root_label: label(root),
        edges,
    }
}

/// Exact distribution over canonical trees with rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    probs: BTreeMap<CanonicalTree, BigRational>,
}

impl ExactDistribution {
    fn from_counts(counts: BTreeMap<CanonicalTree, u64>, total: u64) -> Self {
        let total = BigInt::from(total);
        let probs = counts
            .into_iter()
            .map(|(t, c)| (t, BigRational::new(BigInt::from(c), total.clone())))
            .collect();
        ExactDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.probs.values().sum()
    }

    pub fn prob_of(&self, tree: &CanonicalTree) -> BigRational {
        self.probs.get(tree).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (&CanonicalTree, &BigRational)> {
        self.probs.iter()
    }

    /// Exact equality of the two distributions.
    pub fn identical(&self, other: &ExactDistribution) -> bool {
        self.probs == other.probs
    }

    /// Total variation distance, exact.
    pub fn tv_distance(&self, other: &ExactDistribution) -> BigRational {
        let mut keys: Vec<&CanonicalTree> = self.probs.keys().collect();
        keys.extend(other.probs.keys());
        keys.sort_unstable();
        keys.dedup();
        let mut acc = BigRational::zero();
        for k in keys {
            acc += (self.prob_of(k) - other.prob_of(k)).abs();
        }
        acc / BigRational::from_integer(BigInt::from(2))
    }
}

struct ForwardState {
    parent: Vec<u32>,
    edge: Vec<u32>,
    frozen: Vec<u32>,
    active: Vec<u32>,
}

fn dfs_forward<F: FnMut(&ForwardState)>(
    seq: &FreezeSequence,
    i: usize,
    st: &mut ForwardState,
    leaf: &mut F,
) {
    if i > seq.len() || st.active.is_empty() {
        leaf(st);
        return;
    }
    let m = st.active.len();
    if seq.step(i) > 0 {
        for j in 0..m {
            let p = st.active[j];
            let v = st.parent.len() as u32;
            st.parent.push(p);
            st.edge.push(i as u32);
            st.frozen.push(0);
            st.active.push(v);
            dfs_forward(seq, i + 1, st, leaf);
            st.active.pop();
            st.parent.pop();
            st.edge.pop();
            st.frozen.pop();
        }
    } else {
        for j in 0..m {
            let v = st.active.remove(j);
            st.frozen[v as usize] = i as u32;
            dfs_forward(seq, i + 1, st, leaf);
            st.frozen[v as usize] = 0;
            st.active.insert(j, v);
        }
    }
}

/// Exact distribution of the forward construction (uniform choices expanded
/// with equal weights; the per-step branching factor is determined by the
/// walk, so all paths share one probability).
pub fn enumerate_forward(seq: &FreezeSequence) -> Result<ExactDistribution, VerifyError> {
    let n = seq.len();
    if n > MAX_ENUM_STEPS {
        return Err(VerifyError::GuardExceeded {
            n,
            max: MAX_ENUM_STEPS,
        });
    }
    let mut st = ForwardState {
        parent: vec![NO_PARENT],
        edge: vec![0],
        frozen: vec![0],
        active: vec![0],
    };
    let mut counts: BTreeMap<CanonicalTree, u64> = BTreeMap::new();
    let mut total: u64 = 0;
    dfs_forward(seq, 1, &mut st, &mut |st| {
        let c = canonical_from_raw(&st.parent, &st.edge, &st.frozen, 0);
        *counts.entry(c).or_insert(0) += 1;
        total += 1;
    });
    Ok(ExactDistribution::from_counts(counts, total))
}

struct CoalState {
    parent: Vec<u32>,
    edge: Vec<u32>,
    frozen: Vec<u32>,
    roots: Vec<u32>,
}

fn dfs_coalescent<F: FnMut(&CoalState, u32)>(
    seq: &FreezeSequence,
    i: usize,
    st: &mut CoalState,
    leaf: &mut F,
) {
    if i == 0 {
        debug_assert_eq!(st.roots.len(), 1);
        let root = st.roots[0];
        leaf(st, root);
        return;
    }
    if seq.step(i) < 0 {
        let v = st.parent.len() as u32;
        st.parent.push(NO_PARENT);
        st.edge.push(0);
        st.frozen.push(i as u32);
        st.roots.push(v);
        dfs_coalescent(seq, i - 1, st, leaf);
        st.roots.pop();
        st.parent.pop();
        st.edge.pop();
        st.frozen.pop();
    } else {
        let m = st.roots.len();
        for j1 in 0..m {
            for j2 in 0..m {
                if j2 == j1 {
                    continue;
                }
                let rv1 = st.roots[j1];
                let rv2 = st.roots[j2];
                st.parent[rv2 as usize] = rv1;
                st.edge[rv2 as usize] = i as u32;
                st.roots.remove(j2);
                dfs_coalescent(seq, i - 1, st, leaf);
                st.roots.insert(j2, rv2);
                st.parent[rv2 as usize] = NO_PARENT;
                st.edge[rv2 as usize] = 0;
            }
        }
    }
}

fn coalescent_initial_state(seq: &FreezeSequence) -> Result<CoalState, VerifyError> {
    let n = seq.len();
    let w = walk(seq);
    if let Some(tau) = w.tau() {
        if tau < n {
            return Err(VerifyError::Extinct { tau, n });
        }
    }
    let s_n = w.value(n) as usize;
    Ok(CoalState {
        parent: vec![NO_PARENT; s_n],
        edge: vec![0; s_n],
        frozen: vec![0; s_n],
        roots: (0..s_n as u32).collect(),
    })
}

/// Exact distribution of the growth-coalescent construction with the actives
/// relabelled to one symbol (ordered pairs carry weight `1/(m(m-1))`, again
/// constant across paths).
pub fn enumerate_coalescent(seq: &FreezeSequence) -> Result<ExactDistribution, VerifyError> {
    let n = seq.len();
    if n > MAX_ENUM_STEPS {
        return Err(VerifyError::GuardExceeded {
            n,
            max: MAX_ENUM_STEPS,
        });
    }
    let mut st = coalescent_initial_state(seq)?;
    let mut counts: BTreeMap<CanonicalTree, u64> = BTreeMap::new();
    let mut total: u64 = 0;
    dfs_coalescent(seq, n, &mut st, &mut |st, root| {
        let c = canonical_from_raw(&st.parent, &st.edge, &st.frozen, root);
        *counts.entry(c).or_insert(0) += 1;
        total += 1;
    });
    Ok(ExactDistribution::from_counts(counts, total))
}

fn resolve_label(
    seq: &FreezeSequence,
    w: &crate::sequences::Walk,
    label: VertexLabel,
) -> Result<u32, VerifyError> {
    let n = seq.len();
    match label {
        VertexLabel::Frozen(t) => {
            if t >= 1 && (t as usize) <= n && seq.step(t as usize) < 0 {
                Ok(t - 1)
            } else {
                Err(VerifyError::UnknownLabel(format!("{t}")))
            }
        }
        VertexLabel::Active(j) => {
            if j >= 1 && i64::from(j) <= i64::from(w.value(n)) {
                Ok(n as u32)
            } else {
                Err(VerifyError::UnknownLabel(format!("a{j}")))
            }
        }
    }
}

/// Exact law of the coalescence time between two labelled vertices:
/// `P(coal = c) = 1/C(S_{c+1},2) * prod over +1 steps i in (c+1, b_u ^ b_v]
/// of (1 - 1/C(S_i,2))` for the valid `c` (those with a `+1` step at `c+1`).
pub fn coal_density_exact(
    seq: &FreezeSequence,
    u: VertexLabel,
    v: VertexLabel,
) -> Result<Vec<(u32, BigRational)>, VerifyError> {
    if u == v {
        return Err(VerifyError::DistinctRequired);
    }
    let n = seq.len();
    let w = walk(seq);
    if let Some(tau) = w.tau() {
        if tau < n {
            return Err(VerifyError::Extinct { tau, n });
        }
    }
    let bu = resolve_label(seq, &w, u)?;
    let bv = resolve_label(seq, &w, v)?;
    let bmin = bu.min(bv) as usize;
    let binom2 = |s: i32| -> BigRational {
        BigRational::from_integer(BigInt::from((s as i64) * (s as i64 - 1) / 2))
    };
    let one = BigRational::one();
    let mut tail = BigRational::one();
    let mut out: Vec<(u32, BigRational)> = Vec::new();
    for c in (0..bmin).rev() {
        if seq.step(c + 1) > 0 {
            let b = binom2(w.value(c + 1));
            out.push((c as u32, tail.clone() / b.clone()));
            tail *= one.clone() - one.clone() / b;
        }
    }
    out.reverse();
    Ok(out)
}

/// Outcome record of one statistical or exact check.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub pass: bool,
    pub samples: Vec<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl TestReport {
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let p = self
            .p_value
            .map(|p| format!(" p={p:.4}"))
            .unwrap_or_default();
        format!(
            "{verdict}  {name}  stat={stat:.5} thr={thr:.5}{p}",
            name = self.name,
            stat = self.statistic,
            thr = self.threshold,
        )
    }
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic parallel map over replicate indices; stream `offset + i`
/// seeds replicate `i`, and results keep index order.
fn par_replicates<T, F>(replicates: usize, seed: u64, offset: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, offset + rep as u64);
            job(&mut rng)
        })
        .collect()
}

fn seq_tag(seq: &FreezeSequence) -> String {
    if seq.len() <= 24 {
        seq.to_signs()
    } else {
        let steps = seq.steps();
        let mut h: u64 = 0xcbf29ce484222325;
        for &s in steps {
            h = (h ^ (s as u8 as u64)).wrapping_mul(0x100000001b3);
        }
        format!("n{}#{:08x}", seq.len(), h as u32)
    }
}

/// Empirical birth-time CDF of a uniform vertex against
/// `(m + 1 - S_m) / (n + 1 + S_n)` at every checkpoint `m`. The statistic is
/// the worst deviation in SE units; the pass threshold is Bonferroni-corrected
/// at family level 0.01 over `family` deviation checks (use `family = n` for
/// a standalone run; suites pass their total).
pub fn check_birth_law_in_family(
    seq: &FreezeSequence,
    samples: usize,
    seed: u64,
    family: usize,
) -> TestReport {
    let n = seq.len();
    let w = walk(seq);
    assert!(w.alive_through(n - 1), "birth law needs a surviving walk");
    let mut rng = replicate_rng(seed, 0);
    let tree = build_forward(seq, &mut rng).tree;
    let nv = tree.vertex_count() as u32;

    let mut birth_counts = vec![0u64; n + 1];
    for _ in 0..samples {
        let v = rng.random_range(0..nv);
        birth_counts[tree.birth(v) as usize] += 1;
    }
    let mut worst = 0.0f64;
    let mut cum = 0u64;
    let denom = f64::from(w.value(n)) + n as f64 + 1.0;
    for m in 1..=n {
        // cumulative count of births < m
        cum += birth_counts[m - 1];
        let emp = cum as f64 / samples as f64;
        let truth = (m as f64 + 1.0 - f64::from(w.value(m))) / denom;
        if truth <= 0.0 || truth >= 1.0 {
            if (emp - truth).abs() > 0.0 {
                worst = f64::INFINITY;
            }
            continue;
        }
        let se = stats::proportion_se(truth, samples);
        worst = worst.max((emp - truth).abs() / se);
    }
    let threshold = stats::bonferroni_z(0.01, family);
    TestReport {
        name: format!("birth_law({})", seq_tag(seq)),
        statistic: worst,
        threshold,
        p_value: None,
        pass: worst <= threshold,
        samples: vec![samples as u64],
        seed,
        notes: Some(format!("max CDF deviation over {n} checkpoints, in SE units")),
    }
}

/// Standalone birth-law check (family = its own checkpoint count).
pub fn check_birth_law(seq: &FreezeSequence, samples: usize, seed: u64) -> TestReport {
    check_birth_law_in_family(seq, samples, seed, seq.len())
}

/// Chi-square of the Monte Carlo coalescence-time histogram against the
/// exact product law.
pub fn check_coal_density(
    seq: &FreezeSequence,
    u: VertexLabel,
    v: VertexLabel,
    samples: usize,
    seed: u64,
) -> Result<TestReport, VerifyError> {
    let law = coal_density_exact(seq, u, v)?;
    let mass: BigRational = law.iter().map(|(_, p)| p.clone()).sum();
    assert!(mass.is_one(), "the exact law must sum to one");

    let mut rng = replicate_rng(seed, 0);
    let (probe, _) = build_coalescent(seq, &mut rng)
        .map_err(|_| VerifyError::Extinct { tau: 0, n: seq.len() })?;
    let uid = probe
        .vertex_with_label(u)
        .ok_or_else(|| VerifyError::UnknownLabel(u.to_string()))?;
    let vid = probe
        .vertex_with_label(v)
        .ok_or_else(|| VerifyError::UnknownLabel(v.to_string()))?;

    let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..samples {
        let (_, gen) = build_coalescent(seq, &mut rng).expect("precondition checked");
        *hist.entry(gen.coal_time(uid, vid).expect("ids valid")).or_insert(0) += 1;
    }
    let mut observed = Vec::with_capacity(law.len());
    let mut expected = Vec::with_capacity(law.len());
    let mut impossible_hits = 0u64;
    for (c, p) in &law {
        let obs = hist.remove(c).unwrap_or(0);
        if p.is_zero() {
            // Structurally impossible time (a forced merge below); it must
            // never be observed, and it carries no chi-square mass.
            impossible_hits += obs;
            continue;
        }
        observed.push(obs);
        expected.push(rational_to_f64(p) * samples as f64);
    }
    impossible_hits += hist.values().sum::<u64>();
    let (stat, p) = if observed.len() <= 1 {
        (0.0, 1.0)
    } else {
        let stat = stats::chi_square_stat(&observed, &expected);
        (stat, stats::chi_square_p(stat, (observed.len() - 1) as f64))
    };
    let pass = p > 0.01 && impossible_hits == 0;
    Ok(TestReport {
        name: format!("coal_density({}, {u}, {v})", seq_tag(seq)),
        statistic: stat,
        threshold: 0.01,
        p_value: Some(p),
        pass,
        samples: vec![samples as u64],
        seed,
        notes: (impossible_hits > 0)
            .then(|| format!("{impossible_hits} samples hit zero-probability times")),
    })
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let den = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    num / den
}

fn power_profile(alpha: f64, beta: f64) -> ProfileSpec {
    ProfileSpec::new(alpha, ProfileShape::Power(beta)).expect("valid power profile")
}

/// Mean height against `n^{1-alpha} / (2 (1 - beta))`, 5% relative tolerance.
pub fn height_report(
    alpha: f64,
    beta: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> TestReport {
    let seq = profile_sequence(n, &power_profile(alpha, beta)).expect("feasible profile");
    let heights = par_replicates(replicates, seed, 0, |rng| {
        f64::from(height(&build_forward(&seq, rng).tree))
    });
    let mean: f64 = heights.iter().sum::<f64>() / replicates as f64;
    let ratio = mean / (n as f64).powf(1.0 - alpha);
    let limit = 0.5 / (1.0 - beta);
    let rel = (ratio - limit).abs() / limit;
    TestReport {
        name: format!("height(alpha={alpha}, beta={beta}, n={n})"),
        statistic: rel,
        threshold: 0.05,
        p_value: None,
        pass: rel <= 0.05,
        samples: vec![replicates as u64, n as u64],
        seed,
        notes: Some(format!("mean height/n^(1-alpha) = {ratio:.5}, limit {limit:.5}")),
    }
}

fn sample_two_point(seq: &FreezeSequence, exponent: f64, rng: &mut ChaCha8Rng) -> f64 {
    let tree = build_forward(seq, rng).tree;
    let nv = tree.vertex_count() as u32;
    let u = rng.random_range(0..nv);
    let v = rng.random_range(0..nv);
    f64::from(graph_distance(&tree, u, v).expect("sampled ids valid"))
        / (seq.len() as f64).powf(exponent)
}

/// Two-point distance law against the closed-form regime target:
/// `|sqrt(U1) - sqrt(U2)|` below the critical exponent, `sqrt(U1) + sqrt(U2)`
/// above (for `beta = 1/2` profiles). Two-sample KS at level 0.01.
pub fn two_point_report(
    alpha: f64,
    beta: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> TestReport {
    assert!(alpha != 0.5, "use critical_cross_report at the critical exponent");
    let seq = profile_sequence(n, &power_profile(alpha, beta)).expect("feasible profile");
    let discrete = par_replicates(replicates, seed, 0, |rng| {
        sample_two_point(&seq, 1.0 - alpha, rng)
    });
    let subcritical = alpha < 0.5;
    let target = par_replicates(replicates, seed, 1 << 32, |rng| {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let (a, b) = (integral_half_inv_power(beta, u1), integral_half_inv_power(beta, u2));
        if subcritical {
            (a - b).abs()
        } else {
            a + b
        }
    });
    let d = stats::ks_statistic(&discrete, &target);
    let p = stats::ks_p_value(d, discrete.len(), target.len());
    let regime = if subcritical { "subcritical" } else { "supercritical" };
    TestReport {
        name: format!("two_point_{regime}(alpha={alpha}, beta={beta}, n={n})"),
        statistic: d,
        threshold: 0.01,
        p_value: Some(p),
        pass: p > 0.01,
        samples: vec![replicates as u64, n as u64],
        seed,
        notes: None,
    }
}

/// `int_0^u dt / (2 t^beta) = u^{1-beta} / (2 (1 - beta))`.
fn integral_half_inv_power(beta: f64, u: f64) -> f64 {
    u.powf(1.0 - beta) / (2.0 * (1.0 - beta))
}

/// Critical regime: discrete two-point distances over `sqrt(n)` against the
/// continuum coalescent's limit distance, two-sample KS at level 0.01.
pub fn critical_cross_report(beta: f64, n: usize, replicates: usize, seed: u64) -> TestReport {
    let seq = profile_sequence(n, &power_profile(0.5, beta)).expect("feasible profile");
    let discrete = par_replicates(replicates, seed, 0, |rng| {
        sample_two_point(&seq, 0.5, rng)
    });
    let table = FunctionTable::power(beta).expect("power shape is usable");
    let continuum = par_replicates(replicates, seed, 1 << 32, |rng| {
        let real = sample_coalescent(&table, 2, rng);
        limit_distance_matrix(&real, &table)[1]
    });
    let d = stats::ks_statistic(&discrete, &continuum);
    let p = stats::ks_p_value(d, discrete.len(), continuum.len());
    TestReport {
        name: format!("critical_cross(beta={beta}, n={n})"),
        statistic: d,
        threshold: 0.01,
        p_value: Some(p),
        pass: p > 0.01,
        samples: vec![replicates as u64, n as u64],
        seed,
        notes: None,
    }
}

/// Orchestrates the regime checks for one `(alpha, beta)` across sizes:
/// the height limit plus the matching two-point law (`k` sampled vertices
/// feed the distance matrices; the KS uses the first pair).
pub fn regime_suite(
    alpha: f64,
    beta: f64,
    n_list: &[usize],
    _k: usize,
    replicates: usize,
    seed: u64,
) -> Vec<TestReport> {
    let mut reports = Vec::new();
    for &n in n_list {
        reports.push(height_report(alpha, beta, n, replicates.min(200), seed));
        if (alpha - 0.5).abs() < 1e-12 {
            reports.push(critical_cross_report(beta, n, replicates, seed));
        } else {
            reports.push(two_point_report(alpha, beta, n, replicates, seed));
        }
    }
    reports
}

/// Bounded-regime check on the alternating profile: `Height / h_plus` close
/// to 1 and side subtrees of the longest branch short relative to `n`.
pub fn check_bounded_regime(m: usize, n: usize, replicates: usize, seed: u64) -> TestReport {
    let seq = alternating_sequence(n, m).expect("m >= 2");
    let sums = HarmonicSums::new(&seq);
    let h_plus = sums.h_plus(1, n);
    let results = par_replicates(replicates, seed, 0, |rng| {
        let tree = build_forward(&seq, rng).tree;
        let depths = tree.depths();
        let height = *depths.iter().max().unwrap();
        // Mark the longest branch, then measure every vertex's hop count to
        // the branch; the max is the tallest side subtree.
        let deepest = depths
            .iter()
            .enumerate()
            .max_by_key(|(_, &d)| d)
            .map(|(v, _)| v as u32)
            .unwrap();
        let nv = tree.vertex_count();
        let mut to_branch = vec![u32::MAX; nv];
        let mut v = deepest;
        loop {
            to_branch[v as usize] = 0;
            match tree.parent(v) {
                Some(p) => v = p,
                None => break,
            }
        }
        let mut chain = Vec::new();
        for v in 0..nv as u32 {
            if to_branch[v as usize] != u32::MAX {
                continue;
            }
            let mut w = v;
            while to_branch[w as usize] == u32::MAX {
                chain.push(w);
                w = tree.parent(w).expect("branch contains the root");
            }
            let mut d = to_branch[w as usize];
            while let Some(x) = chain.pop() {
                d += 1;
                to_branch[x as usize] = d;
            }
        }
        let max_side = to_branch.iter().filter(|&&d| d != u32::MAX).max().copied().unwrap_or(0);
        (f64::from(height) / h_plus, f64::from(max_side) / n as f64)
    });
    let mean_ratio: f64 = results.iter().map(|r| r.0).sum::<f64>() / replicates as f64;
    let frac_small_sides =
        results.iter().filter(|r| r.1 < 0.01).count() as f64 / replicates as f64;
    let stat = (mean_ratio - 1.0).abs();
    let pass = stat <= 0.05 && frac_small_sides >= 0.99;
    TestReport {
        name: format!("bounded_regime(M={m}, n={n})"),
        statistic: stat,
        threshold: 0.05,
        p_value: None,
        pass,
        samples: vec![replicates as u64, n as u64],
        seed,
        notes: Some(format!(
            "mean Height/h_plus = {mean_ratio:.5}; P(max side height < n/100) = {frac_small_sides:.4}"
        )),
    }
}

/// Distribution equality of the two constructions: exact enumeration over
/// every ±1 sequence of length at most `max_len` whose walk survives, total
/// variation distance required to vanish identically.
pub fn distribution_equality_report(max_len: usize) -> TestReport {
    let mut max_tv = BigRational::zero();
    let mut sequences = 0u64;
    for len in 1..=max_len {
        for bits in 0..(1u32 << len) {
            let steps: Vec<i8> = (0..len)
                .map(|k| if bits >> k & 1 == 1 { 1 } else { -1 })
                .collect();
            let seq = FreezeSequence::new(steps).expect("nonempty");
            if !walk(&seq).alive_through(len) {
                continue;
            }
            sequences += 1;
            let fwd = enumerate_forward(&seq).expect("guard respected");
            let coal = enumerate_coalescent(&seq).expect("guard respected");
            let tv = fwd.tv_distance(&coal);
            if tv > max_tv {
                max_tv = tv;
            }
        }
    }
    let stat = rational_to_f64(&max_tv);
    TestReport {
        name: format!("distribution_equality(len<={max_len})"),
        statistic: stat,
        threshold: 0.0,
        p_value: None,
        pass: max_tv.is_zero(),
        samples: vec![sequences],
        seed: 0,
        notes: Some(format!("{sequences} surviving sequences compared exactly")),
    }
}

/// Height of excursion-driven trees against the maximum of independent
/// excursion walks, both over `sqrt(2n + 1)`: two-sample KS at level 0.01.
pub fn crt_identity_report(n: usize, replicates: usize, seed: u64) -> TestReport {
    let scale = ((2 * n + 1) as f64).sqrt();
    let heights = par_replicates(replicates, seed, 0, |rng| {
        let seq = excursion_sequence(n, rng);
        f64::from(height(&build_forward(&seq, rng).tree)) / scale
    });
    let maxima = par_replicates(replicates, seed, 1 << 32, |rng| {
        let seq = excursion_sequence(n, rng);
        f64::from(walk(&seq).max_value()) / scale
    });
    let d = stats::ks_statistic(&heights, &maxima);
    let p = stats::ks_p_value(d, heights.len(), maxima.len());
    TestReport {
        name: format!("crt_identity(n={n})"),
        statistic: d,
        threshold: 0.01,
        p_value: Some(p),
        pass: p > 0.01,
        samples: vec![replicates as u64],
        seed,
        notes: None,
    }
}

/// Sequences exercised by the birth-law suite: the five-step walk from the
/// worked example plus ten pseudo-random surviving sequences of growing size.
/// The deviation threshold is corrected across the whole family of
/// checkpoints at level 0.01.
pub fn birth_law_suite(samples: usize, seed: u64) -> Vec<TestReport> {
    let mut sequences = vec![FreezeSequence::from_signs("+-++-").expect("valid signs")];
    for i in 0..10u64 {
        let n = 100 * (i as usize + 1);
        let mut rng = replicate_rng(seed, (2 << 32) + i);
        sequences.push(crate::sequences::iid_sequence_surviving(n, &mut rng));
    }
    let family: usize = sequences.iter().map(|s| s.len()).sum();
    sequences
        .iter()
        .enumerate()
        .map(|(i, seq)| check_birth_law_in_family(seq, samples, seed.wrapping_add(i as u64), family))
        .collect()
}

/// Sequences exercised by the coalescence-density suite: the all-plus
/// three-step case plus five further small sequences with mixed label kinds.
pub fn coal_density_suite(samples: usize, seed: u64) -> Vec<TestReport> {
    let cases: [(&str, VertexLabel, VertexLabel); 6] = [
        ("+++", VertexLabel::Active(1), VertexLabel::Active(2)),
        ("++-", VertexLabel::Active(1), VertexLabel::Active(2)),
        ("+-++-", VertexLabel::Frozen(2), VertexLabel::Frozen(5)),
        ("+-++-", VertexLabel::Active(1), VertexLabel::Frozen(5)),
        ("++-+-", VertexLabel::Active(1), VertexLabel::Frozen(3)),
        ("++++", VertexLabel::Active(2), VertexLabel::Active(4)),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(i, (signs, u, v))| {
            let seq = FreezeSequence::from_signs(signs).expect("valid signs");
            check_coal_density(&seq, *u, *v, samples, seed.wrapping_add(i as u64))
                .expect("suite cases are valid")
        })
        .collect()
}

/// Continuum genealogy density at `k = 2`, `f = t^{1/4}`: the survival
/// frequency must match `exp(-2 sqrt(B1 ^ B2))` bin by bin (conditional) and
/// the quadrature oracle overall (marginal).
pub fn continuum_density_report(runs: usize, seed: u64) -> TestReport {
    let table = FunctionTable::power(0.25).expect("usable shape");
    let bins = 50;
    // Deterministic chunked parallel accumulation.
    let chunks = 64usize;
    let per_chunk = runs / chunks;
    let partials: Vec<(Vec<u64>, Vec<u64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, c as u64);
            let mut count = vec![0u64; bins];
            let mut survived = vec![0u64; bins];
            let mut expected = vec![0.0f64; bins];
            for _ in 0..per_chunk {
                let real = sample_coalescent(&table, 2, &mut rng);
                let m = real.births[0].min(real.births[1]);
                let b = ((m * bins as f64) as usize).min(bins - 1);
                count[b] += 1;
                expected[b] += (-2.0 * m.sqrt()).exp();
                if real.surviving == 2 {
                    survived[b] += 1;
                }
            }
            (count, survived, expected)
        })
        .collect();
    let mut count = vec![0u64; bins];
    let mut survived = vec![0u64; bins];
    let mut expected = vec![0.0f64; bins];
    for (c, s, e) in partials {
        for b in 0..bins {
            count[b] += c[b];
            survived[b] += s[b];
            expected[b] += e[b];
        }
    }
    let total_runs = per_chunk * chunks;
    let mut worst_z = 0.0f64;
    for b in 0..bins {
        if count[b] == 0 {
            continue;
        }
        let p = expected[b] / count[b] as f64;
        let freq = survived[b] as f64 / count[b] as f64;
        let se = stats::proportion_se(p, count[b] as usize);
        if se > 0.0 {
            worst_z = worst_z.max((freq - p).abs() / se);
        }
    }
    // Marginal survival against the quadrature oracle.
    let oracle = crate::continuum::quadrature(
        &|m: f64| 2.0 * (1.0 - m) * (-2.0 * m.sqrt()).exp(),
        0.0,
        1.0,
        1e-10,
    );
    let marg = survived.iter().sum::<u64>() as f64 / total_runs as f64;
    let marg_se = stats::proportion_se(oracle, total_runs);
    let marg_z = (marg - oracle).abs() / marg_se;
    let stat = worst_z.max(marg_z);
    // Family correction over the bins plus the marginal comparison.
    let threshold = stats::bonferroni_z(0.01, bins + 1);
    TestReport {
        name: format!("continuum_density(k=2, f=t^0.25, bins={bins})"),
        statistic: stat,
        threshold,
        p_value: None,
        pass: stat <= threshold,
        samples: vec![total_runs as u64],
        seed,
        notes: Some(format!(
            "marginal survival {marg:.5} vs oracle {oracle:.5} (z={marg_z:.2}); worst bin z={worst_z:.2}"
        )),
    }
}

/// Condensation dichotomy: under `f = sqrt(t)` every run fully merges; under
/// `f = t^{1/4}` the surviving-pair fraction matches the quadrature oracle.
pub fn condensation_report(runs: usize, seed: u64) -> TestReport {
    let divergent = FunctionTable::power(0.5).expect("usable shape");
    let violations: u64 = (0..64usize)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, c as u64);
            let mut bad = 0u64;
            for _ in 0..runs / 64 {
                for k in [2usize, 3] {
                    if sample_coalescent(&divergent, k, &mut rng).surviving != 1 {
                        bad += 1;
                    }
                }
            }
            bad
        })
        .sum();

    let finite = FunctionTable::power(0.25).expect("usable shape");
    let survived: u64 = (0..64usize)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, (1 << 32) + c as u64);
            let mut survived = 0u64;
            for _ in 0..runs / 64 {
                if sample_coalescent(&finite, 2, &mut rng).surviving == 2 {
                    survived += 1;
                }
            }
            survived
        })
        .sum();
    let total = (runs / 64) * 64;
    let oracle = crate::continuum::quadrature(
        &|m: f64| 2.0 * (1.0 - m) * (-2.0 * m.sqrt()).exp(),
        0.0,
        1.0,
        1e-10,
    );
    let frac = survived as f64 / total as f64;
    let se = stats::proportion_se(oracle, total);
    let z = (frac - oracle).abs() / se;
    let pass = violations == 0 && z <= 3.0;
    TestReport {
        name: "condensation_dichotomy(f=sqrt vs f=t^0.25)".to_string(),
        statistic: z,
        threshold: 3.0,
        p_value: None,
        pass,
        samples: vec![total as u64],
        seed,
        notes: Some(format!(
            "divergent-rate violations: {violations}; surviving fraction {frac:.5} vs oracle {oracle:.5}"
        )),
    }
}

/// Median of the max over sampled pairs of `|d - dc| / n^{1-alpha}` at the
/// critical exponent, required to decrease strictly across the sizes.
pub fn distance_equivalence_report(
    beta: f64,
    n_list: &[usize],
    pairs: usize,
    replicates: usize,
    seed: u64,
) -> TestReport {
    let mut medians = Vec::with_capacity(n_list.len());
    for (idx, &n) in n_list.iter().enumerate() {
        let seq = profile_sequence(n, &power_profile(0.5, beta)).expect("feasible profile");
        let sums = HarmonicSums::new(&seq);
        let maxima = par_replicates(replicates, seed, (idx as u64) << 40, |rng| {
            let (tree, gen) = build_coalescent(&seq, rng).expect("surviving walk");
            let nv = tree.vertex_count() as u32;
            let mut worst = 0.0f64;
            for _ in 0..pairs {
                let u = rng.random_range(0..nv);
                let v = rng.random_range(0..nv);
                let d = f64::from(graph_distance(&tree, u, v).expect("valid ids"));
                let dc = dc_distance(&sums, &gen, u, v).expect("valid ids");
                worst = worst.max((d - dc).abs());
            }
            worst / (n as f64).sqrt()
        });
        medians.push(stats::median(&maxima));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let worst_step = medians
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    TestReport {
        name: format!("distance_equivalence(beta={beta})"),
        statistic: worst_step,
        threshold: 0.0,
        p_value: None,
        pass: decreasing,
        samples: n_list.iter().map(|&n| n as u64).collect(),
        seed,
        notes: Some(format!("medians of max |d - dc|/sqrt(n): {medians:?}")),
    }
}
