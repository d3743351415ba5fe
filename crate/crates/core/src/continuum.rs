//! Continuous-time inhomogeneous coalescent on `[0, 1]`.
//!
//! Time runs from 1 down to 0. Each of `k` particles is born at an
//! independent uniform time; while `m` clusters are alive every pair merges
//! with rate `1/f(t)^2`, so the next merge solves an exponential clock
//! against the cumulative rate `Lambda(a, b) = integral of 1/f^2`. When
//! `1/f^2` is integrable at 0 the clock may overshoot and several clusters
//! survive to time 0 (condensation); otherwise everything merges.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ContinuumError {
    #[error("integral diverges (partial sums exceeded the guard)")]
    Divergent,
    #[error("1/(2f) is not integrable near 0; the shape is unusable")]
    NonIntegrable,
    #[error("shape must be positive on the interior of (0, 1)")]
    BadShape,
    #[error("resolution must be at least 16")]
    BadResolution,
    #[error("inadmissible genealogy triplet: {0}")]
    Inadmissible(&'static str),
}

const DIVERGENCE_GUARD: f64 = 1e12;
/// Lower grid floor; event times below this are beyond resolution.
const T_FLOOR: f64 = 1e-15;

// 7-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 7] = [
    -0.949107912342759,
    -0.741531185599394,
    -0.405845151377397,
    0.0,
    0.405845151377397,
    0.741531185599394,
    0.949107912342759,
];
const GL_W: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn gauss7(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..7 {
        acc += GL_W[i] * f(c + h * GL_X[i]);
    }
    acc * h
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1)
                + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    let eps = rel_tol * whole.abs().max(1e-300);
    rec(f, a, fa, b, fb, m, fm, whole, eps, 48)
}

/// Adaptive quadrature helper for in-crate oracles (finite smooth integrands).
pub(crate) fn quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    adaptive_simpson(f, a, b, rel_tol)
}

/// Adaptive quadrature of `integrand` over `[a, b]` with graded dyadic
/// subdivision toward endpoints where the integrand blows up. Geometric tail
/// extrapolation handles power-law singularities; non-decaying ladders and
/// partial sums beyond the guard signal divergence.
fn adaptive_integral(
    integrand: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, ContinuumError> {
    assert!(a <= b, "integration bounds out of order");
    if a == b {
        return Ok(0.0);
    }
    let singular_low = !integrand(a).is_finite();
    let singular_high = !integrand(b).is_finite();
    let mid = if singular_low && singular_high {
        0.5 * (a + b)
    } else if singular_low {
        b
    } else {
        a
    };
    let mut total = 0.0;
    if singular_low {
        total += ladder(integrand, a, mid, rel_tol, true)?;
    }
    if singular_high {
        total += ladder(integrand, mid, b, rel_tol, false)?;
    }
    if !singular_low && !singular_high {
        total = adaptive_simpson(integrand, a, b, rel_tol);
    }
    if total > DIVERGENCE_GUARD {
        return Err(ContinuumError::Divergent);
    }
    Ok(total)
}

/// Dyadic ladder toward a singular endpoint (`toward_low`: the endpoint is
/// `lo`, otherwise `hi`).
fn ladder(
    integrand: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    toward_low: bool,
) -> Result<f64, ContinuumError> {
    let len = hi - lo;
    let mut acc = 0.0;
    let mut prev_seg = f64::NAN;
    let mut ratio = f64::NAN;
    let mut half = 0.5 * len;
    for _ in 0..220 {
        let (a, b) = if toward_low {
            (lo + half, lo + half * 2.0)
        } else {
            (hi - half * 2.0, hi - half)
        };
        let seg = adaptive_simpson(integrand, a, b, rel_tol);
        acc += seg;
        if acc > DIVERGENCE_GUARD {
            return Err(ContinuumError::Divergent);
        }
        if prev_seg.is_finite() && prev_seg > 0.0 {
            ratio = seg / prev_seg;
        }
        prev_seg = seg;
        if seg.abs() <= 0.25 * rel_tol * acc.abs() && acc > 0.0 {
            return Ok(acc);
        }
        // After enough rungs a power-law tail has a stable ratio; sum it.
        if half < 1e-40 * len {
            if ratio.is_finite() && ratio < 1.0 - 1e-9 {
                return Ok(acc + seg * ratio / (1.0 - ratio));
            }
            return Err(ContinuumError::Divergent);
        }
        half *= 0.5;
    }
    if ratio.is_finite() && ratio < 1.0 - 1e-9 {
        Ok(acc + prev_seg * ratio / (1.0 - ratio))
    } else {
        Err(ContinuumError::Divergent)
    }
}

/// A rate shape `f` on `[0, 1]` with cached cumulative integrals of `1/(2f)`
/// and `1/f^2` on a grid graded geometrically near 0.
pub struct FunctionTable {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    grid: Vec<f64>,
    /// `G(grid[i]) = integral of 1/(2f) over [0, grid[i]]`.
    g_cum: Vec<f64>,
    /// `Lambda(grid[0], grid[i]) = integral of 1/f^2 over [grid[0], grid[i]]`.
    lam_cum: Vec<f64>,
    /// Mass of `1/f^2` on `[0, grid[0]]`; infinite under condensation-free
    /// shapes (condition for all particles to merge).
    lam_zero: f64,
    /// Local power-law exponent of `f` at the grid floor.
    floor_exponent: f64,
}

impl std::fmt::Debug for FunctionTable {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("FunctionTable")
            .field("grid_points", &self.grid.len())
            .field("g_total", &self.g_cum.last())
            .field("lambda_zero", &self.lam_zero)
            .finish()
    }
}

impl FunctionTable {
    /// Build from a closure with the default resolution of 2^16 grid points.
    pub fn from_fn<F>(f: F) -> Result<Self, ContinuumError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_resolution(f, 1 << 16)
    }

    pub fn with_resolution<F>(f: F, resolution: usize) -> Result<Self, ContinuumError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if resolution < 16 {
            return Err(ContinuumError::BadResolution);
        }
        let f: Box<dyn Fn(f64) -> f64 + Send + Sync> = Box::new(f);
        let first_uniform = 1.0 / resolution as f64;

        let mut grid = Vec::with_capacity(resolution + 300);
        let mut t = T_FLOOR;
        let ratio = 2f64.powf(0.125);
        while t < first_uniform {
            grid.push(t);
            t *= ratio;
        }
        for k in 1..=resolution {
            grid.push(k as f64 / resolution as f64);
        }

        // Local power-law exponent of f at the floor, from two samples.
        let f0 = f(grid[0]);
        let f1 = f(grid[0] * 4.0);
        if !(f0 > 0.0 && f0.is_finite() && f1 > 0.0 && f1.is_finite()) {
            return Err(ContinuumError::BadShape);
        }
        let p = (f1 / f0).ln() / 4f64.ln();
        if p >= 1.0 {
            return Err(ContinuumError::NonIntegrable);
        }
        let g_tail = grid[0] / (2.0 * f0 * (1.0 - p));
        let lam_zero = if 2.0 * p >= 1.0 {
            f64::INFINITY
        } else {
            grid[0] / (f0 * f0 * (1.0 - 2.0 * p))
        };

        let cap = |x: f64| {
            if x.is_finite() {
                x.min(DIVERGENCE_GUARD)
            } else {
                DIVERGENCE_GUARD
            }
        };
        let inv2f = |t: f64| 0.5 / (f)(t);
        let invf2 = |t: f64| {
            let v = (f)(t);
            1.0 / (v * v)
        };
        let mut g_cum = Vec::with_capacity(grid.len());
        let mut lam_cum = Vec::with_capacity(grid.len());
        g_cum.push(g_tail);
        lam_cum.push(0.0);
        for w in grid.windows(2) {
            let g_inc = cap(gauss7(&inv2f, w[0], w[1]));
            let l_inc = cap(gauss7(&invf2, w[0], w[1]));
            g_cum.push(g_cum.last().unwrap() + g_inc);
            lam_cum.push(lam_cum.last().unwrap() + l_inc);
        }
        let g_total = *g_cum.last().unwrap();
        if !g_total.is_finite() || g_total > DIVERGENCE_GUARD {
            return Err(ContinuumError::NonIntegrable);
        }
        Ok(FunctionTable {
            f,
            grid,
            g_cum,
            lam_cum,
            lam_zero,
            floor_exponent: p,
        })
    }

    /// Power shape `f(t) = t^beta`.
    pub fn power(beta: f64) -> Result<Self, ContinuumError> {
        Self::from_fn(move |t: f64| t.powf(beta))
    }

    /// Build from values sampled on a uniform grid over `[0, 1]` (linear
    /// interpolation in between). Zero endpoint samples are clamped to the
    /// nearest positive neighbour: a linear interpolant hitting zero at an
    /// endpoint would make `1/(2f)` non-integrable even when the sampled
    /// process is not (walk-derived tables end at exactly zero).
    pub fn from_samples(values: Vec<f64>, resolution: usize) -> Result<Self, ContinuumError> {
        let mut values = values;
        if values.len() < 2 {
            return Err(ContinuumError::BadShape);
        }
        if let Some(&first_pos) = values.iter().find(|&&v| v > 0.0) {
            if values[0] <= 0.0 {
                values[0] = first_pos;
            }
        } else {
            return Err(ContinuumError::BadShape);
        }
        if values.last() == Some(&0.0) {
            let last_pos = *values.iter().rfind(|&&v| v > 0.0).expect("checked above");
            *values.last_mut().expect("nonempty") = last_pos;
        }
        let interp = move |t: f64| {
            let x = t.clamp(0.0, 1.0) * (values.len() - 1) as f64;
            let lo = (x.floor() as usize).min(values.len() - 2);
            let frac = x - lo as f64;
            values[lo] * (1.0 - frac) + values[lo + 1] * frac
        };
        Self::with_resolution(interp, resolution)
    }

    pub fn f_at(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// True when `1/f^2` has infinite mass at 0 (all clusters must merge).
    pub fn lambda_diverges_at_zero(&self) -> bool {
        self.lam_zero.is_infinite()
    }

    fn interval_of(&self, t: f64) -> usize {
        match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// `G(t) = integral of 1/(2f) over [0, t]`.
    pub fn g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t <= self.grid[0] {
            // Power-law scaling of the sub-floor tail.
            return self.g_cum[0] * (t / self.grid[0]).powf(1.0 - self.floor_exponent);
        }
        let i = self.interval_of(t);
        let inv2f = |x: f64| 0.5 / (self.f)(x);
        self.g_cum[i] + gauss7(&inv2f, self.grid[i], t.min(1.0))
    }

    /// `Lambda(grid floor, t)`, the cached cumulative merge rate.
    fn lam_at(&self, t: f64) -> f64 {
        if t <= self.grid[0] {
            return 0.0;
        }
        let i = self.interval_of(t);
        let invf2 = |x: f64| {
            let v = (self.f)(x);
            1.0 / (v * v)
        };
        self.lam_cum[i] + gauss7(&invf2, self.grid[i], t.min(1.0))
    }

    /// `integral of 1/f^2 over [a, b]`; infinite when `a = 0` and the mass
    /// diverges there.
    pub fn lambda_between(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b, "lambda bounds out of order");
        let t0 = self.grid[0];
        if a > t0 {
            return self.lam_at(b) - self.lam_at(a);
        }
        // Mass on [a, min(b, t0)], by the local power-law form of f.
        let hi = b.min(t0);
        let below = if self.lam_zero.is_finite() {
            let gamma = 1.0 - 2.0 * self.floor_exponent;
            let frac = |x: f64| {
                if x <= 0.0 {
                    0.0
                } else {
                    (x / t0).powf(gamma)
                }
            };
            self.lam_zero * (frac(hi) - frac(a))
        } else if a <= 0.0 {
            f64::INFINITY
        } else {
            // Divergent tail: closed form of the power integrand on [a, hi].
            let p2 = 2.0 * self.floor_exponent;
            let f0 = self.f_at(t0);
            let scaled = if (p2 - 1.0).abs() < 1e-12 {
                (hi / a).ln() * t0.powf(p2)
            } else {
                (hi.powf(1.0 - p2) - a.powf(1.0 - p2)) / (1.0 - p2) * t0.powf(p2)
            };
            scaled / (f0 * f0)
        };
        below + self.lam_at(b)
    }

    /// Solve `Lambda(t*, t_hi) = mass` for `t*`; `None` when the total mass
    /// down to 0 is finite and insufficient (the clusters never merge).
    /// Bisection refines to a relative tolerance of 1e-8.
    pub fn invert_lambda(&self, t_hi: f64, mass: f64) -> Option<f64> {
        let lam_hi = self.lam_at(t_hi);
        let target = lam_hi - mass;
        if target >= 0.0 {
            // Lands on the cached grid range.
            let mut lo_idx = 0usize;
            let mut hi_idx = self.interval_of(t_hi).min(self.grid.len() - 1);
            while lo_idx < hi_idx {
                let mid = (lo_idx + hi_idx).div_ceil(2);
                if self.lam_cum[mid] <= target {
                    lo_idx = mid;
                } else {
                    hi_idx = mid - 1;
                }
            }
            let mut lo = self.grid[lo_idx];
            let mut hi = if lo_idx + 1 < self.grid.len() {
                self.grid[lo_idx + 1].min(t_hi)
            } else {
                t_hi
            };
            // Lambda(t, t_hi) decreases in t: keep mass bracketed.
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if self.lam_at(mid) <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-8 * hi.abs().max(T_FLOOR) {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        // The merge time lies below the grid floor.
        let rem = -target;
        if self.lam_zero.is_infinite() {
            // Power-law inversion of the tail would land below resolution.
            return Some(self.grid[0]);
        }
        if rem >= self.lam_zero {
            return None;
        }
        let frac = 1.0 - rem / self.lam_zero;
        Some(self.grid[0] * frac.powf(1.0 / (1.0 - 2.0 * self.floor_exponent)))
    }
}

/// `integral of 1/(2f) over [a, b]` by adaptive quadrature with relative
/// tolerance 1e-8; errors when the mass diverges.
pub fn integral_inv_f(table: &FunctionTable, a: f64, b: f64) -> Result<f64, ContinuumError> {
    let f = &table.f;
    adaptive_integral(&|t| 0.5 / f(t), a, b, 1e-8)
}

/// `integral of 1/f^2 over [a, b]`; returns `f64::INFINITY` when `a = 0` and
/// the integral diverges there.
pub fn integral_inv_f2(table: &FunctionTable, a: f64, b: f64) -> Result<f64, ContinuumError> {
    let f = &table.f;
    match adaptive_integral(&|t| 1.0 / (f(t) * f(t)), a, b, 1e-8) {
        Ok(v) => Ok(v),
        Err(ContinuumError::Divergent) if a == 0.0 => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// Leaf carrying the particle index.
    Leaf(u32),
    /// Merge of two cluster nodes; the child order is uniformly random.
    Internal(u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    pub time: f64,
    pub parent: Option<u32>,
    pub kind: NodeKind,
}

/// Binary genealogy forest of a coalescent realization. Leaves are the
/// particles (node id = particle index); internal nodes carry merge times.
#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyForest {
    pub nodes: Vec<ForestNode>,
    /// Cluster nodes still alive at time 0.
    pub roots: Vec<u32>,
}

impl GenealogyForest {
    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf(_)))
            .count()
    }

    /// Merge time of the clusters of particles `i` and `j`; `None` when they
    /// never merge.
    pub fn merge_time_of(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return Some(self.nodes[i].time);
        }
        let mut ancestors = Vec::new();
        let mut a = Some(i as u32);
        while let Some(x) = a {
            ancestors.push(x);
            a = self.nodes[x as usize].parent;
        }
        let mut b = Some(j as u32);
        while let Some(x) = b {
            if ancestors.contains(&x) {
                return Some(self.nodes[x as usize].time);
            }
            b = self.nodes[x as usize].parent;
        }
        None
    }
}

/// One continuum sample: particle births, ordered merge times, surviving
/// cluster count `r + 1`, and the genealogy forest.
#[derive(Debug, Clone)]
pub struct CoalescentRealization {
    pub births: Vec<f64>,
    /// Merge times in increasing order (`C_{r+1} < ... < C_{k-1}`).
    pub merge_times: Vec<f64>,
    /// Number of clusters alive at time 0 (`r + 1`).
    pub surviving: usize,
    pub forest: GenealogyForest,
}

impl CoalescentRealization {
    pub fn k(&self) -> usize {
        self.births.len()
    }
}

/// Sample the coalescent: births are i.i.d. uniform, and with `m` clusters
/// alive the next merge solves `C(m,2) * Lambda(t*, t) = Exp(1)`, interleaved
/// with the deterministic birth insertions. On overshoot past the total mass
/// to 0 the remaining clusters survive.
pub fn sample_coalescent<R: Rng + ?Sized>(
    table: &FunctionTable,
    k: usize,
    rng: &mut R,
) -> CoalescentRealization {
    assert!(k >= 1);
    let births: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| births[b].total_cmp(&births[a]));

    let mut nodes: Vec<ForestNode> = births
        .iter()
        .enumerate()
        .map(|(p, &b)| ForestNode {
            time: b,
            parent: None,
            kind: NodeKind::Leaf(p as u32),
        })
        .collect();
    let mut alive: Vec<u32> = Vec::with_capacity(k);
    let mut merge_times: Vec<f64> = Vec::new();
    let mut next_birth = 0usize;
    let mut t_now = 1.0f64;

    loop {
        if alive.len() < 2 {
            match order.get(next_birth) {
                Some(&p) => {
                    t_now = births[p];
                    alive.push(p as u32);
                    next_birth += 1;
                    continue;
                }
                None => break,
            }
        }
        let m = alive.len();
        let pairs = (m * (m - 1) / 2) as f64;
        let u: f64 = rng.random();
        let mass = -(1.0 - u).ln() / pairs;
        let boundary = order.get(next_birth).map(|&p| births[p]);
        let avail = table.lambda_between(boundary.unwrap_or(0.0), t_now);
        if mass < avail {
            let t_star = table
                .invert_lambda(t_now, mass)
                .expect("mass is below the available rate");
            let j1 = rng.random_range(0..m);
            let mut j2 = rng.random_range(0..m - 1);
            if j2 >= j1 {
                j2 += 1;
            }
            let (na, nb) = (alive[j1], alive[j2]);
            let id = nodes.len() as u32;
            nodes.push(ForestNode {
                time: t_star,
                parent: None,
                kind: NodeKind::Internal(na, nb),
            });
            nodes[na as usize].parent = Some(id);
            nodes[nb as usize].parent = Some(id);
            alive[j1] = id;
            alive.swap_remove(j2);
            merge_times.push(t_star);
            t_now = t_star;
        } else if let Some(b) = boundary {
            let p = order[next_birth];
            t_now = b;
            alive.push(p as u32);
            next_birth += 1;
        } else {
            break;
        }
    }
    merge_times.reverse();
    let surviving = alive.len();
    CoalescentRealization {
        births,
        merge_times,
        surviving,
        forest: GenealogyForest {
            nodes,
            roots: alive,
        },
    }
}

/// Limit distance matrix: entry `(j, l)` is
/// `G(B_j) + G(B_l) - 2 G(C_{j,l})` with `C_{j,l}` the merge time of the
/// clusters of `j` and `l` (0 when they never merge), row-major `k x k`.
pub fn limit_distance_matrix(real: &CoalescentRealization, table: &FunctionTable) -> Vec<f64> {
    let k = real.k();
    let g_b: Vec<f64> = real.births.iter().map(|&b| table.g(b)).collect();
    let mut matrix = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let c = real.forest.merge_time_of(i, j).unwrap_or(0.0);
            let v = g_b[i] + g_b[j] - 2.0 * table.g(c);
            matrix[i * k + j] = v;
            matrix[j * k + i] = v;
        }
    }
    matrix
}

/// Genealogy density
/// `g_{r,k} = 2^{-(k-1-r)} exp(-integral of C(a(t),2)/f(t)^2) prod 1/f(c_j)^2`
/// with `a(t)` the cluster count. The triplet is validated for admissibility;
/// an impossible surviving configuration under divergent rate returns exactly
/// zero.
pub fn density_g(
    forest: &GenealogyForest,
    births: &[f64],
    merge_times: &[f64],
    table: &FunctionTable,
) -> Result<f64, ContinuumError> {
    let k = births.len();
    if forest.leaf_count() != k {
        return Err(ContinuumError::Inadmissible("leaf count mismatch"));
    }
    let internal_count = forest.nodes.len() - k;
    if merge_times.len() != internal_count {
        return Err(ContinuumError::Inadmissible("merge count mismatch"));
    }
    let r_plus_1 = forest.roots.len();
    if internal_count != k - r_plus_1 {
        return Err(ContinuumError::Inadmissible("root count mismatch"));
    }
    // Leaf times carry the births.
    for (p, &b) in births.iter().enumerate() {
        if !(0.0..=1.0).contains(&b) {
            return Err(ContinuumError::Inadmissible("birth outside [0, 1]"));
        }
        if forest.nodes[p].time != b || !matches!(forest.nodes[p].kind, NodeKind::Leaf(q) if q as usize == p)
        {
            return Err(ContinuumError::Inadmissible("leaf times disagree with births"));
        }
    }
    // Merge times are sorted, interior, and carried by the internal nodes.
    let mut internal_times: Vec<f64> = forest.nodes[k..].iter().map(|n| n.time).collect();
    internal_times.sort_by(|a, b| a.total_cmp(b));
    if internal_times
        .iter()
        .zip(merge_times)
        .any(|(a, b)| a != b)
    {
        return Err(ContinuumError::Inadmissible("merge times disagree with forest"));
    }
    for w in merge_times.windows(2) {
        if w[0] >= w[1] {
            return Err(ContinuumError::Inadmissible("merge times not increasing"));
        }
    }
    if merge_times.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(ContinuumError::Inadmissible("merge time outside (0, 1)"));
    }
    // Order preservation: an internal node is older (smaller time) than both
    // children.
    for node in &forest.nodes {
        if let NodeKind::Internal(a, b) = node.kind {
            let ta = forest.nodes[a as usize].time;
            let tb = forest.nodes[b as usize].time;
            if !(node.time < ta && node.time < tb) {
                return Err(ContinuumError::Inadmissible("merge older than a child"));
            }
        }
    }
    let mut all_times: Vec<f64> = forest.nodes.iter().map(|n| n.time).collect();
    all_times.sort_by(|a, b| a.total_cmp(b));
    if all_times.windows(2).any(|w| w[0] == w[1]) {
        return Err(ContinuumError::Inadmissible("event times not distinct"));
    }

    // Sweep events from time 1 downwards, accumulating C(a(t), 2) * Lambda.
    let mut events: Vec<(f64, i32)> = births.iter().map(|&b| (b, 1)).collect();
    events.extend(merge_times.iter().map(|&c| (c, -1)));
    events.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut exponent = 0.0f64;
    let mut a_count: i64 = 0;
    let mut t_hi = 1.0f64;
    for &(t, delta) in &events {
        if a_count >= 2 {
            let pairs = (a_count * (a_count - 1) / 2) as f64;
            exponent += pairs * table.lambda_between(t, t_hi);
        }
        a_count += i64::from(delta);
        t_hi = t;
    }
    debug_assert_eq!(a_count as usize, r_plus_1);
    if a_count >= 2 {
        let tail = table.lambda_between(0.0, t_hi);
        if tail.is_infinite() {
            return Ok(0.0);
        }
        let pairs = (a_count * (a_count - 1) / 2) as f64;
        exponent += pairs * tail;
    }

    let mut density = 0.5f64.powi(internal_count as i32) * (-exponent).exp();
    for &c in merge_times {
        let v = table.f_at(c);
        density /= v * v;
    }
    Ok(density)
}

/// Empirical law of the surviving-cluster count over a batch, as sorted
/// `(count, fraction)` pairs.
pub fn root_degree_stat(realizations: &[CoalescentRealization]) -> Vec<(usize, f64)> {
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for r in realizations {
        *counts.entry(r.surviving).or_default() += 1;
    }
    let total = realizations.len() as f64;
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total))
        .collect()
}
