//! Distance-based selection utilities: farthest-first traversal, k-means++
//! seeding, Lloyd iterations and unique nearest-point mapping. All distances
//! are Euclidean and all ties go to the lowest row index.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;

use crate::seed;

pub(crate) fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-center selection.
///
/// Each step picks the candidate whose distance to the nearest selected point
/// or anchor is largest. Without anchors the first pick is row 0.
pub fn farthest_first(candidates: ArrayView2<f64>, anchors: ArrayView2<f64>, b: usize) -> Vec<usize> {
    let n = candidates.nrows();
    let b = b.min(n);
    if b == 0 {
        return Vec::new();
    }
    let mut min_d = vec![f64::INFINITY; n];
    for a in anchors.axis_iter(Axis(0)) {
        for (i, c) in candidates.axis_iter(Axis(0)).enumerate() {
            min_d[i] = min_d[i].min(sq_dist(c, a));
        }
    }
    let mut selected = vec![false; n];
    let mut picks = Vec::with_capacity(b);
    while picks.len() < b {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|&i| !selected[i]) {
            if best.map_or(true, |j| min_d[i] > min_d[j]) {
                best = Some(i);
            }
        }
        let pick = best.expect("fewer picks than candidates");
        selected[pick] = true;
        picks.push(pick);
        let p = candidates.row(pick);
        for (i, c) in candidates.axis_iter(Axis(0)).enumerate() {
            if !selected[i] {
                min_d[i] = min_d[i].min(sq_dist(c, p));
            }
        }
    }
    picks
}

/// Largest distance from any candidate to its nearest center or anchor.
pub fn covering_radius(points: ArrayView2<f64>, anchors: ArrayView2<f64>, centers: &[usize]) -> f64 {
    points
        .axis_iter(Axis(0))
        .map(|p| {
            centers
                .iter()
                .map(|&c| sq_dist(p, points.row(c)))
                .chain(anchors.axis_iter(Axis(0)).map(|a| sq_dist(p, a)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// k-means++ seeding: a uniform first seed, then each next seed with
/// probability proportional to its squared distance to the nearest seed.
///
/// Stream usage: one `random_range(0..n)` for the first seed, then one
/// `random::<f64>()` per further seed. When every remaining point sits on a
/// seed, the lowest-index unselected point is taken without a draw.
pub fn kmeanspp_seed(points: ArrayView2<f64>, b: usize, rng_seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(rng_seed);
    let n = points.nrows();
    if n == 0 || b == 0 {
        return Vec::new();
    }
    let first = rng.random_range(0..n);
    kmeanspp_seed_from(points, b, first, &mut rng)
}

/// [`kmeanspp_seed`] with the first seed fixed.
pub fn kmeanspp_seed_from(points: ArrayView2<f64>, b: usize, first: usize, rng: &mut seed::Rng) -> Vec<usize> {
    let n = points.nrows();
    let b = b.min(n);
    if b == 0 {
        return Vec::new();
    }
    let mut selected = vec![false; n];
    let mut d2 = vec![f64::INFINITY; n];
    let mut seeds = Vec::with_capacity(b);
    let add = |i: usize, seeds: &mut Vec<usize>, selected: &mut [bool], d2: &mut [f64]| {
        selected[i] = true;
        seeds.push(i);
        let c = points.row(i);
        for (j, p) in points.axis_iter(Axis(0)).enumerate() {
            d2[j] = if selected[j] { 0.0 } else { d2[j].min(sq_dist(p, c)) };
        }
    };
    add(first, &mut seeds, &mut selected, &mut d2);
    while seeds.len() < b {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (j, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(j);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            (0..n).find(|&j| !selected[j]).expect("unselected point remains")
        };
        add(pick, &mut seeds, &mut selected, &mut d2);
    }
    seeds
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// k-means++ seeding followed by Lloyd iterations until the largest centroid
/// shift drops below `tol` or `max_iter` is reached. An empty cluster is
/// re-seeded at the point farthest from its assigned centroid.
pub fn lloyd_kmeans(points: ArrayView2<f64>, b: usize, rng_seed: u64, max_iter: usize, tol: f64) -> KMeansResult {
    let n = points.nrows();
    let k = b.min(n);
    let seeds = kmeanspp_seed(points, k, rng_seed);
    let mut centroids = points.select(Axis(0), &seeds);
    let mut assign = vec![0usize; n];
    let mut dist = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        for (i, p) in points.axis_iter(Axis(0)).enumerate() {
            let (best, d) = centroids
                .axis_iter(Axis(0))
                .enumerate()
                .map(|(c, mu)| (c, sq_dist(p, mu)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            assign[i] = best;
            dist[i] = d;
        }
        let mut next = Array2::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, p) in points.axis_iter(Axis(0)).enumerate() {
            counts[assign[i]] += 1;
            let mut row = next.row_mut(assign[i]);
            row += &p;
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = next.row_mut(c);
                row /= counts[c] as f64;
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(j) if dist[j] >= dist[i] => Some(j),
                        _ => Some(i),
                    })
                    .expect("k <= n");
                taken[far] = true;
                dist[far] = 0.0;
                next.row_mut(c).assign(&points.row(far));
            }
        }
        let shift = centroids
            .axis_iter(Axis(0))
            .zip(next.axis_iter(Axis(0)))
            .map(|(a, b)| sq_dist(a, b))
            .fold(0.0, f64::max)
            .sqrt();
        centroids = next;
        if shift < tol {
            converged = true;
            break;
        }
    }
    KMeansResult {
        centroids,
        iterations,
        converged,
    }
}

/// Distances within this relative margin count as ties, so equidistant rows
/// (e.g. both members of a two-point cluster) resolve to the lowest index
/// regardless of rounding.
const TIE_EPS: f64 = 1e-9;

/// For each target in order, the nearest pool row not already claimed.
pub fn nearest_unique_mapping(targets: ArrayView2<f64>, pool: ArrayView2<f64>) -> Vec<usize> {
    let mut claimed = vec![false; pool.nrows()];
    targets
        .axis_iter(Axis(0))
        .map_while(|t| {
            let mut best: Option<(usize, f64)> = None;
            for (j, p) in pool.axis_iter(Axis(0)).enumerate() {
                if claimed[j] {
                    continue;
                }
                let d = sq_dist(t, p);
                if best.map_or(true, |(_, bd)| d < bd - TIE_EPS * (1.0 + bd)) {
                    best = Some((j, d));
                }
            }
            let (j, _) = best?;
            claimed[j] = true;
            Some(j)
        })
        .collect()
}
