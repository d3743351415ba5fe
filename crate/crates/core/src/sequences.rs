//! Driving ±1 sequences, their walks, and regime profiles.
//!
//! A [`FreezeSequence`] holds the ±1 steps read by the tree builders. Its
//! [`Walk`] starts at `S_0 = 1` and moves by the steps; `S_k` counts the
//! active vertices after `k` steps and the extinction time `tau` is the first
//! hit of zero. Profile generators realize sequences whose rescaled walk
//! `S_{nt} / n^alpha` tracks a target shape `f` on `[0, 1]`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error("sequence entries must be +1 or -1, found {0}")]
    BadStep(i8),
    #[error("sequence must be nonempty")]
    Empty,
    #[error("invalid range [{a}, {b}] for sequence of length {n}")]
    BadRange { a: usize, b: usize, n: usize },
    #[error("walk hits zero at step {0} inside the requested range")]
    ExtinctInRange(usize),
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("power exponent must lie in (0, 1), got {0}")]
    BadBeta(f64),
    #[error("profile target infeasible: n^alpha * f(1) = {target} >= n = {n}")]
    InfeasibleTarget { target: f64, n: usize },
    #[error("shape `{0}` is random; use its dedicated generator")]
    RandomShape(&'static str),
    #[error("unknown profile shape `{0}`")]
    UnknownShape(String),
    #[error("custom profile table must be nonempty with finite nonnegative values")]
    BadTable,
    #[error("bound must be at least 2, got {0}")]
    BadBound(usize),
}

/// A ±1 driving sequence. Steps are indexed 1-based to match the walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct FreezeSequence {
    steps: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    n: usize,
    steps: Vec<i8>,
}

impl TryFrom<SequenceRepr> for FreezeSequence {
    type Error = SequenceError;
    fn try_from(repr: SequenceRepr) -> Result<Self, SequenceError> {
        if repr.steps.len() != repr.n {
            return Err(SequenceError::BadRange {
                a: repr.n,
                b: repr.steps.len(),
                n: repr.steps.len(),
            });
        }
        FreezeSequence::new(repr.steps)
    }
}

impl From<FreezeSequence> for SequenceRepr {
    fn from(seq: FreezeSequence) -> Self {
        SequenceRepr {
            n: seq.len(),
            steps: seq.steps,
        }
    }
}

impl FreezeSequence {
    pub fn new(steps: Vec<i8>) -> Result<Self, SequenceError> {
        if steps.is_empty() {
            return Err(SequenceError::Empty);
        }
        if let Some(&bad) = steps.iter().find(|&&s| s != 1 && s != -1) {
            return Err(SequenceError::BadStep(bad));
        }
        Ok(FreezeSequence { steps })
    }

    /// Parse a compact sign line such as `"+-++-"`.
    pub fn from_signs(text: &str) -> Result<Self, SequenceError> {
        let steps = text
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(SequenceError::UnknownShape(other.to_string())),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        FreezeSequence::new(steps)
    }

    pub fn to_signs(&self) -> String {
        self.steps
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// The `i`-th step, 1-based.
    pub fn step(&self, i: usize) -> i8 {
        self.steps[i - 1]
    }
}

/// The walk `S_0 = 1, S_k = 1 + sum of the first k steps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    values: Vec<i32>,
    tau: Option<usize>,
    max_value: i32,
}

impl Walk {
    pub fn values(&self) -> &[i32] {
        &self.values
    }

    /// `S_k`, 0-based in `k`.
    pub fn value(&self, k: usize) -> i32 {
        self.values[k]
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 1
    }

    /// First `k >= 1` with `S_k = 0`, if any.
    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    pub fn max_value(&self) -> i32 {
        self.max_value
    }

    /// True when `S_k >= 1` for all `k <= m`, i.e. `tau > m`.
    pub fn alive_through(&self, m: usize) -> bool {
        self.tau.is_none_or(|t| t > m)
    }
}

/// Compute the walk of a sequence in one pass.
pub fn walk(seq: &FreezeSequence) -> Walk {
    let mut values = Vec::with_capacity(seq.len() + 1);
    let mut s: i32 = 1;
    let mut max_value = 1;
    let mut tau = None;
    values.push(s);
    for (idx, &step) in seq.steps().iter().enumerate() {
        s += i32::from(step);
        values.push(s);
        if s > max_value {
            max_value = s;
        }
        if s == 0 && tau.is_none() {
            tau = Some(idx + 1);
        }
    }
    Walk {
        values,
        tau,
        max_value,
    }
}

/// Harmonic sums `h(a,b) = sum over a <= i <= b of 1/S_i` and the restriction
/// `h_plus` to the `+1` steps, for `1 <= a <= b <= n` with the walk positive
/// on the range.
pub fn h_sums(seq: &FreezeSequence, a: usize, b: usize) -> Result<(f64, f64), SequenceError> {
    let n = seq.len();
    if a < 1 || a > b || b > n {
        return Err(SequenceError::BadRange { a, b, n });
    }
    let w = walk(seq);
    let mut h = 0.0;
    let mut h_plus = 0.0;
    for i in a..=b {
        let s = w.value(i);
        if s <= 0 {
            return Err(SequenceError::ExtinctInRange(i));
        }
        let inv = 1.0 / f64::from(s);
        h += inv;
        if seq.step(i) > 0 {
            h_plus += inv;
        }
    }
    Ok((h, h_plus))
}

/// Prefix tables for `1/S_i` enabling O(1) harmonic-sum queries. Index 0 is
/// included with `S_0 = 1`.
#[derive(Debug, Clone)]
pub struct HarmonicSums {
    /// `cum[k] = sum over 0 <= i <= k of 1/S_i`.
    cum: Vec<f64>,
    /// Same restricted to `+1` steps (index 0 contributes nothing).
    cum_plus: Vec<f64>,
    /// First index with `S_i = 0`, if any; queries must stay below it.
    first_zero: Option<usize>,
}

impl HarmonicSums {
    pub fn new(seq: &FreezeSequence) -> Self {
        let w = walk(seq);
        let n = seq.len();
        let mut cum = Vec::with_capacity(n + 1);
        let mut cum_plus = Vec::with_capacity(n + 1);
        cum.push(1.0);
        cum_plus.push(0.0);
        let mut first_zero = None;
        for i in 1..=n {
            let s = w.value(i);
            if s <= 0 && first_zero.is_none() {
                first_zero = Some(i);
            }
            let inv = if s > 0 { 1.0 / f64::from(s) } else { 0.0 };
            cum.push(cum[i - 1] + inv);
            let plus = if seq.step(i) > 0 { inv } else { 0.0 };
            cum_plus.push(cum_plus[i - 1] + plus);
        }
        HarmonicSums {
            cum,
            cum_plus,
            first_zero,
        }
    }

    fn check(&self, a: usize, b: usize) {
        assert!(a <= b && b < self.cum.len(), "harmonic range out of bounds");
        if let Some(z) = self.first_zero {
            assert!(b < z, "harmonic range touches an extinct walk index");
        }
    }

    /// `sum over a <= i <= b of 1/S_i`, allowing `a = 0` (where `S_0 = 1`).
    pub fn h(&self, a: usize, b: usize) -> f64 {
        self.check(a, b);
        if a == 0 {
            self.cum[b]
        } else {
            self.cum[b] - self.cum[a - 1]
        }
    }

    /// Same restricted to `+1` steps.
    pub fn h_plus(&self, a: usize, b: usize) -> f64 {
        self.check(a.max(1), b);
        let a = a.max(1);
        self.cum_plus[b] - self.cum_plus[a - 1]
    }
}

/// Target shape of a regime profile.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `f(t) = t^beta` with `beta` in `(0, 1)`.
    Power(f64),
    /// Conditioned random-walk excursion (random; see [`excursion_sequence`]).
    Excursion,
    /// I.i.d. uniform ±1 steps (random; see [`iid_sequence`]).
    Iid,
    /// Every step is `+1`.
    AllPlus,
    /// `f` sampled on a uniform grid over `[0, 1]`, linearly interpolated.
    Custom(Vec<f64>),
}

impl std::str::FromStr for ProfileShape {
    type Err = SequenceError;
    fn from_str(s: &str) -> Result<Self, SequenceError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("power:") {
            let beta: f64 = rest
                .parse()
                .map_err(|_| SequenceError::UnknownShape(s.to_string()))?;
            return Ok(ProfileShape::Power(beta));
        }
        match s {
            "excursion" => Ok(ProfileShape::Excursion),
            "iid" => Ok(ProfileShape::Iid),
            "all_plus" => Ok(ProfileShape::AllPlus),
            other => Err(SequenceError::UnknownShape(other.to_string())),
        }
    }
}

impl std::fmt::Display for ProfileShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileShape::Power(beta) => write!(f, "power:{beta}"),
            ProfileShape::Excursion => write!(f, "excursion"),
            ProfileShape::Iid => write!(f, "iid"),
            ProfileShape::AllPlus => write!(f, "all_plus"),
            ProfileShape::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Regime profile: a target shape together with the scaling exponent alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub alpha: f64,
    pub shape: ProfileShape,
}

impl ProfileSpec {
    pub fn new(alpha: f64, shape: ProfileShape) -> Result<Self, SequenceError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SequenceError::BadAlpha(alpha));
        }
        match &shape {
            ProfileShape::Power(beta) => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(SequenceError::BadBeta(*beta));
                }
            }
            ProfileShape::Custom(table)
                if (table.is_empty() || table.iter().any(|v| !v.is_finite() || *v < 0.0)) => {
                    return Err(SequenceError::BadTable);
                }
            _ => {}
        }
        Ok(ProfileSpec { alpha, shape })
    }

    /// Evaluate the target shape at `t` in `[0, 1]`.
    fn shape_value(&self, t: f64) -> f64 {
        match &self.shape {
            ProfileShape::Power(beta) => t.powf(*beta),
            ProfileShape::Custom(table) => {
                if table.len() == 1 {
                    return table[0];
                }
                let x = t.clamp(0.0, 1.0) * (table.len() - 1) as f64;
                let lo = (x.floor() as usize).min(table.len() - 2);
                let frac = x - lo as f64;
                table[lo] * (1.0 - frac) + table[lo + 1] * frac
            }
            _ => f64::NAN,
        }
    }
}

/// Deterministic staircase realization of a profile: each step moves the walk
/// one unit toward `round(max(1, n^alpha f(k/n)))`, which keeps `S_k >= 1` and
/// pins the uniform tracking error to the rounding scale.
pub fn profile_sequence(n: usize, spec: &ProfileSpec) -> Result<FreezeSequence, SequenceError> {
    if n == 0 {
        return Err(SequenceError::Empty);
    }
    match &spec.shape {
        ProfileShape::AllPlus => return FreezeSequence::new(vec![1; n]),
        ProfileShape::Iid => return Err(SequenceError::RandomShape("iid")),
        ProfileShape::Excursion => return Err(SequenceError::RandomShape("excursion")),
        _ => {}
    }
    let scale = (n as f64).powf(spec.alpha);
    let final_target = scale * spec.shape_value(1.0);
    if spec.alpha >= 1.0 && final_target >= n as f64 {
        return Err(SequenceError::InfeasibleTarget {
            target: final_target,
            n,
        });
    }
    let mut steps = Vec::with_capacity(n);
    let mut s: i64 = 1;
    for k in 1..=n {
        let target = (scale * spec.shape_value(k as f64 / n as f64)).max(1.0).round() as i64;
        if s > target {
            steps.push(-1);
            s -= 1;
        } else {
            steps.push(1);
            s += 1;
        }
        debug_assert!(s >= 1);
    }
    FreezeSequence::new(steps)
}

/// I.i.d. uniform ±1 steps.
pub fn iid_sequence<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FreezeSequence {
    let steps = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    FreezeSequence::new(steps).expect("nonempty ±1 sequence")
}

/// Reject-and-retry wrapper around [`iid_sequence`] until the walk survives
/// through step `n`. The survival probability decays like `n^{-1/2}`, so this
/// is only meant for moderate `n`.
pub fn iid_sequence_surviving<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FreezeSequence {
    loop {
        let seq = iid_sequence(n, rng);
        if walk(&seq).alive_through(n) {
            return seq;
        }
    }
}

/// Uniform excursion of length `2n + 1`: a simple random walk from 1 killed at
/// its first hit of zero at time `2n + 1`. Sampling is exact via the cycle
/// lemma: shuffle `n` pluses and `n + 1` minuses, then take the unique cyclic
/// rotation that starts right after the first prefix-sum minimum.
pub fn excursion_sequence<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FreezeSequence {
    let m = 2 * n + 1;
    let mut steps: Vec<i8> = Vec::with_capacity(m);
    steps.extend(std::iter::repeat_n(1, n));
    steps.extend(std::iter::repeat_n(-1, n + 1));
    steps.shuffle(rng);

    let mut partial = 0i64;
    let mut min_val = i64::MAX;
    let mut min_at = 0usize;
    for (idx, &s) in steps.iter().enumerate() {
        partial += i64::from(s);
        if partial < min_val {
            min_val = partial;
            min_at = idx + 1;
        }
    }
    steps.rotate_left(min_at % m);
    FreezeSequence::new(steps).expect("nonempty ±1 sequence")
}

/// Finite-n tightness diagnostic
/// `(1/n^{1-alpha}) * sum_{i<=n} (1/S_i) 1{S_i <= delta n^alpha}`.
///
/// The caller must ensure the walk survives through `n`.
pub fn tightness_diagnostic(seq: &FreezeSequence, alpha: f64, delta: f64) -> f64 {
    let n = seq.len();
    let w = walk(seq);
    debug_assert!(w.alive_through(n), "tightness diagnostic needs tau > n");
    let cutoff = delta * (n as f64).powf(alpha);
    let mut sum = 0.0;
    for i in 1..=n {
        let s = f64::from(w.value(i));
        if s <= cutoff {
            sum += 1.0 / s;
        }
    }
    sum / (n as f64).powf(1.0 - alpha)
}

/// Deterministic sequence whose walk stays within `[1, m]`: ramp up to `m`,
/// then alternate. Used for the bounded-regime checks.
pub fn alternating_sequence(n: usize, m: usize) -> Result<FreezeSequence, SequenceError> {
    if m < 2 {
        return Err(SequenceError::BadBound(m));
    }
    if n == 0 {
        return Err(SequenceError::Empty);
    }
    let ramp = (m - 1).min(n);
    let mut steps = vec![1i8; ramp];
    for k in ramp..n {
        steps.push(if (k - ramp).is_multiple_of(2) { -1 } else { 1 });
    }
    FreezeSequence::new(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(signs: &str) -> FreezeSequence {
        FreezeSequence::from_signs(signs).unwrap()
    }

    #[test]
    fn walk_of_figure_sequence() {
        let w = walk(&seq("+-++-"));
        assert_eq!(w.values(), &[1, 2, 1, 2, 3, 2]);
        assert_eq!(w.tau(), None);
        assert_eq!(w.max_value(), 3);
    }

    #[test]
    fn walk_immediate_extinction() {
        let w = walk(&seq("-"));
        assert_eq!(w.values(), &[1, 0]);
        assert_eq!(w.tau(), Some(1));
    }

    #[test]
    fn walk_all_plus() {
        let w = walk(&seq("+++"));
        assert_eq!(w.values(), &[1, 2, 3, 4]);
        assert_eq!(w.max_value(), 4);
        assert!(w.alive_through(3));
    }

    #[test]
    fn h_sums_all_plus() {
        let (h, h_plus) = h_sums(&seq("+++"), 1, 3).unwrap();
        let expect = 0.5 + 1.0 / 3.0 + 0.25;
        assert!((h - expect).abs() < 1e-12);
        assert_eq!(h, h_plus);
    }

    #[test]
    fn h_sums_mixed() {
        let (h, h_plus) = h_sums(&seq("+-"), 1, 2).unwrap();
        assert!((h - 1.5).abs() < 1e-12);
        assert!((h_plus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn h_sums_single_minus_step() {
        let (h, h_plus) = h_sums(&seq("+-"), 2, 2).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(h_plus, 0.0);
    }

    #[test]
    fn h_sums_rejects_extinct_range() {
        assert_eq!(
            h_sums(&seq("-+"), 1, 2),
            Err(SequenceError::ExtinctInRange(1))
        );
    }

    #[test]
    fn harmonic_sums_match_h_sums() {
        let s = seq("+-++-+");
        let hs = HarmonicSums::new(&s);
        for a in 1..=6 {
            for b in a..=6 {
                let (h, hp) = h_sums(&s, a, b).unwrap();
                assert!((hs.h(a, b) - h).abs() < 1e-12);
                assert!((hs.h_plus(a, b) - hp).abs() < 1e-12);
            }
        }
        // Index 0 contributes 1/S_0 = 1.
        assert!((hs.h(0, 2) - (1.0 + hs.h(1, 2))).abs() < 1e-12);
    }

    #[test]
    fn profile_tracks_sqrt() {
        let spec = ProfileSpec::new(0.5, ProfileShape::Power(0.5)).unwrap();
        let s = profile_sequence(10_000, &spec).unwrap();
        let w = walk(&s);
        let mut worst: f64 = 0.0;
        for k in 1..=10_000usize {
            let dev = (f64::from(w.value(k)) - (k as f64).sqrt()).abs();
            worst = worst.max(dev);
        }
        assert!(worst <= 3.0, "max |S_k - sqrt(k)| = {worst}");
    }

    #[test]
    fn profile_all_plus() {
        let spec = ProfileSpec::new(0.5, ProfileShape::AllPlus).unwrap();
        let s = profile_sequence(4, &spec).unwrap();
        assert_eq!(s.steps(), &[1, 1, 1, 1]);
    }

    #[test]
    fn profile_stays_positive() {
        let spec = ProfileSpec::new(0.3, ProfileShape::Power(0.5)).unwrap();
        let s = profile_sequence(100, &spec).unwrap();
        let w = walk(&s);
        assert!((1..=100).all(|k| w.value(k) >= 1));
    }

    #[test]
    fn profile_rejects_infeasible_alpha_one() {
        let spec = ProfileSpec {
            alpha: 1.0,
            shape: ProfileShape::Custom(vec![0.0, 1.5]),
        };
        assert!(matches!(
            profile_sequence(100, &spec),
            Err(SequenceError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn profile_positivity_property() {
        // walk ∘ profile_sequence stays >= 1 for a grid of (n, alpha, beta);
        // alpha = 1 power targets are infeasible and covered separately.
        for &n in &[17usize, 100, 1001] {
            for &alpha in &[0.2, 0.5, 0.8] {
                for &beta in &[0.25, 0.5, 0.75] {
                    let spec = ProfileSpec::new(alpha, ProfileShape::Power(beta)).unwrap();
                    let s = profile_sequence(n, &spec).unwrap();
                    let w = walk(&s);
                    assert!((1..=n).all(|k| w.value(k) >= 1), "n={n} a={alpha} b={beta}");
                }
            }
        }
    }

    #[test]
    fn iid_is_reproducible_and_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = iid_sequence(100_000, &mut rng);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let b = iid_sequence(100_000, &mut rng2);
        assert_eq!(a, b);
        let mut rng3 = ChaCha8Rng::seed_from_u64(8);
        assert_ne!(a, iid_sequence(100_000, &mut rng3));
        let plus = a.steps().iter().filter(|&&s| s > 0).count() as f64 / 1e5;
        assert!((0.49..=0.51).contains(&plus), "plus fraction {plus}");
    }

    #[test]
    fn excursion_has_defining_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let s = excursion_sequence(n, &mut rng);
            assert_eq!(s.len(), 2 * n + 1);
            let w = walk(&s);
            assert_eq!(w.tau(), Some(2 * n + 1));
            assert!((1..2 * n + 1).all(|k| w.value(k) >= 1));
            assert_eq!(w.value(2 * n + 1), 0);
        }
    }

    #[test]
    fn cycle_lemma_rotation_is_unique() {
        // For every arrangement of one +1 and two -1 steps, exactly one cyclic
        // rotation is an excursion, and the generator picks it.
        let arrangements = [
            vec![1i8, -1, -1],
            vec![-1i8, 1, -1],
            vec![-1i8, -1, 1],
        ];
        for arr in arrangements {
            let mut valid = 0;
            for r in 0..3 {
                let mut rot = arr.clone();
                rot.rotate_left(r);
                let w = walk(&FreezeSequence::new(rot).unwrap());
                if w.tau() == Some(3) {
                    valid += 1;
                }
            }
            assert_eq!(valid, 1);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = excursion_sequence(1, &mut rng);
            assert_eq!(s.steps(), &[1, -1, -1]);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn excursions_are_uniform_over_shapes() {
        // Catalan(n) distinct excursions for n <= 5; chi-square uniformity.
        let catalan = [1usize, 1, 2, 5, 14, 42];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for n in 2..=5usize {
            let shapes = catalan[n];
            let samples = 2000 * shapes;
            let mut counts: std::collections::HashMap<Vec<i8>, usize> =
                std::collections::HashMap::new();
            for _ in 0..samples {
                let s = excursion_sequence(n, &mut rng);
                *counts.entry(s.steps().to_vec()).or_default() += 1;
            }
            assert_eq!(counts.len(), shapes, "n={n}");
            let expected = samples as f64 / shapes as f64;
            let stat: f64 = counts
                .values()
                .map(|&c| {
                    let d = c as f64 - expected;
                    d * d / expected
                })
                .sum();
            let p = crate::stats::chi_square_p(stat, (shapes - 1) as f64);
            assert!(p > 1e-4, "n={n} chi2={stat} p={p}");
        }
    }

    #[test]
    fn tightness_diagnostic_edges() {
        let s = seq("+++++");
        assert_eq!(tightness_diagnostic(&s, 0.5, 0.0), 0.0);
        // all_plus with alpha = 1, delta = 1: every index with S_i <= n
        // contributes, i.e. all but the last, giving sum_{k=2}^{n} 1/k ~ ln n.
        let n = 10_000;
        let spec = ProfileSpec::new(1.0, ProfileShape::AllPlus).unwrap();
        let s = profile_sequence(n, &spec).unwrap();
        let d = tightness_diagnostic(&s, 1.0, 1.0);
        let harmonic: f64 = (2..=n).map(|k| 1.0 / k as f64).sum();
        assert!((d - harmonic).abs() < 1e-9);
        assert!(d > 0.7 * (n as f64).ln());
    }

    #[test]
    fn tightness_diagnostic_vanishes_with_delta() {
        // The diagnostic is the tightness witness: decreasing in delta and
        // uniformly bounded by ~2 delta on critical power profiles (the fixed
        // n-limit at fixed delta is 2 delta, approached from below).
        let spec = ProfileSpec::new(0.5, ProfileShape::Power(0.5)).unwrap();
        for &n in &[1_000usize, 10_000, 100_000] {
            let s = profile_sequence(n, &spec).unwrap();
            let mut prev = f64::INFINITY;
            for &delta in &[0.2, 0.1, 0.05] {
                let d = tightness_diagnostic(&s, 0.5, delta);
                assert!(d <= prev, "n={n} delta={delta}");
                assert!(d <= 2.5 * delta, "n={n} delta={delta}: {d}");
                prev = d;
            }
        }
    }

    #[test]
    fn harmonic_limit_on_power_profiles() {
        // 2 n^{alpha-1} h_plus and n^{alpha-1} h both approach 1/(1-beta).
        // For alpha = 0.3 the h_plus side converges like alpha ln(n) n^{-alpha}
        // (plateau oscillation of the ±1 staircase), measured at 6.6% for
        // n = 1e6, hence the wider tolerance there.
        let n = 1_000_000;
        for &(alpha, beta, tol_hp) in &[(0.3, 0.5, 0.08), (0.5, 0.25, 0.05), (0.5, 0.5, 0.05)] {
            let spec = ProfileSpec::new(alpha, ProfileShape::Power(beta)).unwrap();
            let s = profile_sequence(n, &spec).unwrap();
            let (h, h_plus) = h_sums(&s, 1, n).unwrap();
            let scale = (n as f64).powf(alpha - 1.0);
            let limit = 1.0 / (1.0 - beta);
            let rel_h = (scale * h - limit).abs() / limit;
            let rel_hp = (2.0 * scale * h_plus - limit).abs() / limit;
            assert!(rel_h <= 0.05, "alpha={alpha} beta={beta} rel_h={rel_h}");
            assert!(rel_hp <= tol_hp, "alpha={alpha} beta={beta} rel_hp={rel_hp}");
        }
    }

    #[test]
    fn plus_half_balance_improves_with_n() {
        // max_{a<=b} |h_plus(a,b) - h(a,b)/2| / n^{1-alpha} decreases in n.
        let spec = ProfileSpec::new(0.5, ProfileShape::Power(0.5)).unwrap();
        let mut prev = f64::INFINITY;
        for &n in &[1_000usize, 10_000, 100_000] {
            let s = profile_sequence(n, &spec).unwrap();
            let hs = HarmonicSums::new(&s);
            // max |D_b - D_{a-1}| over a<=b where D_k = h_plus(1,k) - h(1,k)/2,
            // computed as max span of the prefix differences.
            let mut lo = 0.0f64;
            let mut hi = 0.0f64;
            for k in 1..=n {
                let d = hs.h_plus(1, k) - 0.5 * hs.h(1, k);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            let m = (hi - lo) / (n as f64).powf(0.5);
            assert!(m < prev, "n={n}: {m} !< {prev}");
            prev = m;
        }
    }

    #[test]
    fn alternating_sequence_bounded() {
        let s = alternating_sequence(1000, 3).unwrap();
        let w = walk(&s);
        assert!((1..=1000).all(|k| (1..=3).contains(&w.value(k))));
        assert!(alternating_sequence(10, 1).is_err());
    }

    #[test]
    fn profile_shapes_parse_from_cli_strings() {
        assert_eq!("power:0.5".parse::<ProfileShape>().unwrap(), ProfileShape::Power(0.5));
        assert_eq!("excursion".parse::<ProfileShape>().unwrap(), ProfileShape::Excursion);
        assert_eq!("iid".parse::<ProfileShape>().unwrap(), ProfileShape::Iid);
        assert_eq!("all_plus".parse::<ProfileShape>().unwrap(), ProfileShape::AllPlus);
        assert!("power:x".parse::<ProfileShape>().is_err());
        assert!("gaussian".parse::<ProfileShape>().is_err());
    }

    #[test]
    fn sign_and_json_round_trip() {
        let s = seq("+-++-");
        assert_eq!(s.to_signs(), "+-++-");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n":5,"steps":[1,-1,1,1,-1]}"#);
        let back: FreezeSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_seq() -> impl Strategy<Value = FreezeSequence> {
            proptest::collection::vec(prop::bool::ANY, 1..80).prop_map(|bits| {
                let steps: Vec<i8> = bits.iter().map(|&b| if b { 1 } else { -1 }).collect();
                FreezeSequence::new(steps).expect("nonempty ±1")
            })
        }

        proptest! {
            #[test]
            fn walk_tracks_steps(seq in arb_seq()) {
                let w = walk(&seq);
                prop_assert_eq!(w.value(0), 1);
                let mut max = 1;
                let mut tau = None;
                for k in 1..=seq.len() {
                    prop_assert_eq!(w.value(k) - w.value(k - 1), i32::from(seq.step(k)));
                    max = max.max(w.value(k));
                    if w.value(k) == 0 && tau.is_none() {
                        tau = Some(k);
                    }
                }
                prop_assert_eq!(w.max_value(), max);
                prop_assert_eq!(w.tau(), tau);
            }

            #[test]
            fn h_sums_are_additive(
                n in 2usize..80,
                seed in any::<u64>(),
                split in any::<prop::sample::Index>(),
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let seq = iid_sequence_surviving(n, &mut rng);
                let m = 1 + split.index(n - 1);
                let (h, hp) = h_sums(&seq, 1, n).unwrap();
                let (h1, hp1) = h_sums(&seq, 1, m).unwrap();
                let (h2, hp2) = h_sums(&seq, m + 1, n).unwrap();
                prop_assert!((h - h1 - h2).abs() < 1e-12);
                prop_assert!((hp - hp1 - hp2).abs() < 1e-12);
            }

            #[test]
            fn serde_round_trips(seq in arb_seq()) {
                prop_assert_eq!(&FreezeSequence::from_signs(&seq.to_signs()).unwrap(), &seq);
                let json = serde_json::to_string(&seq).unwrap();
                prop_assert_eq!(&serde_json::from_str::<FreezeSequence>(&json).unwrap(), &seq);
            }

            #[test]
            fn profiles_keep_walks_positive(
                n in 1usize..2000,
                alpha in 0.05f64..0.95,
                beta in 0.05f64..0.95,
            ) {
                let spec = ProfileSpec::new(alpha, ProfileShape::Power(beta)).unwrap();
                let s = profile_sequence(n, &spec).unwrap();
                let w = walk(&s);
                prop_assert!((1..=n).all(|k| w.value(k) >= 1));
            }

            #[test]
            fn excursions_have_the_defining_shape(n in 1usize..60, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = excursion_sequence(n, &mut rng);
                let w = walk(&s);
                prop_assert_eq!(s.len(), 2 * n + 1);
                prop_assert_eq!(w.tau(), Some(2 * n + 1));
                prop_assert!((1..2 * n + 1).all(|k| w.value(k) >= 1));
            }
        }
    }
}
