//! Finite ball covers of sampled obstacles.
//!
//! Given `0 < r < R/2` the construction sets `δ = (R − 2r)/2` and
//! `r* = (2r + δ + R)/2`, samples the offset surface `∂B_r(P)` by shooting
//! geodesics of length `r` from the cloud points, keeps a greedy δ-net of
//! those samples and returns the cloud points that generated the net.
//!
//! The offset surface alone does not reach the interior of fat obstacles
//! (a point deep inside `B_r(P)` can be farther than `r` from `∂B_r(P)`), so
//! the centers are completed by farthest-point insertion until every cloud
//! point lies within `r* − r` of a center. With that completion every point
//! of `B_r(P)` lies within `r*` of a center by the triangle inequality.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ObstacleCloud;
use crate::error::{Error, Result};
use crate::manifold::{ManifoldChart, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverOptions {
    /// Offset directions per cloud point (ignored in one dimension).
    pub directions: usize,
    /// Offset samples with `d(·, P) < r(1 − ε)` are discarded.
    pub rejection_tolerance: f64,
    /// Seeds the direction set in dimension four and above.
    pub seed: u64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            directions: 64,
            rejection_tolerance: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    #[serde(with = "crate::serde_vec::list")]
    pub centers: Vec<Vector>,
    /// Cloud index of each center.
    pub generators: Vec<usize>,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r_star: f64,
    pub delta: f64,
    /// Accepted samples of the offset surface.
    pub boundary_samples: usize,
    pub net_size: usize,
    /// Centers added by the completion pass.
    pub completion_centers: usize,
}

/// Unit tangent directions at `q` (unit in `g(q)`).
///
/// One dimension gives `±1`, two dimensions equispaced angles, three a
/// Fibonacci lattice and higher dimensions seeded Gaussian directions.
pub fn tangent_directions(chart: &dyn ManifoldChart, q: &Vector, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let n = chart.dim();
    let count = count.max(1);
    let euclidean: Vec<Vector> = match n {
        1 => vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)],
        2 => (0..count)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / count as f64;
                Vector::from_row_slice(&[phi.cos(), phi.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    Vector::from_row_slice(&[rho * phi.cos(), rho * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| gaussian_unit(n, &mut rng)).collect()
        }
    };
    let l = metric_factor(chart, q)?;
    Ok(euclidean.iter().map(|w| g_normalize(&l, w)).collect())
}

fn gaussian_unit<R: Rng>(n: usize, rng: &mut R) -> Vector {
    loop {
        let w = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = w.norm();
        if norm > 1e-12 {
            return w / norm;
        }
    }
}

fn metric_factor(chart: &dyn ManifoldChart, q: &Vector) -> Result<nalgebra::DMatrix<f64>> {
    let g = chart.metric_at(q)?;
    Cholesky::new(g)
        .map(|c| c.l())
        .ok_or_else(|| Error::Domain(format!("metric is not positive definite at {}", crate::manifold::fmt_vec(q))))
}

/// Maps a Euclidean unit vector `w` to `L^{-T} w`, which has unit `g`-norm for `g = L Lᵀ`.
fn g_normalize(l: &nalgebra::DMatrix<f64>, w: &Vector) -> Vector {
    l.transpose()
        .solve_upper_triangular(w)
        .expect("Cholesky factor has a positive diagonal")
}

/// Random point of the geodesic ball of radius `radius` around `x`.
///
/// The radial coordinate is drawn as `radius · U^{1/n}`, which is uniform in
/// volume on flat charts. Samples landing off the chart are redrawn.
pub fn sample_ball_around<R: Rng>(chart: &dyn ManifoldChart, x: &Vector, radius: f64, rng: &mut R) -> Result<Vector> {
    let n = chart.dim();
    let l = metric_factor(chart, x)?;
    for _ in 0..1000 {
        let u = g_normalize(&l, &gaussian_unit(n, rng));
        let rho = radius * rng.gen::<f64>().powf(1.0 / n as f64);
        if let Ok(m) = chart.exp_at(x, &(u * rho)) {
            if chart.check_point(&m).is_ok() {
                return Ok(m);
            }
        }
    }
    Err(Error::Domain(format!(
        "could not sample the ball of radius {radius} around {} on the chart",
        crate::manifold::fmt_vec(x)
    )))
}

/// Greedy farthest-point δ-net; returns indices into `points`.
fn farthest_point_net(chart: &dyn ManifoldChart, points: &[Vector], delta: f64) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let mut net = vec![0];
    let mut gap = vec![f64::INFINITY; points.len()];
    let mut newest = 0;
    loop {
        let mut far = (0.0, 0);
        for (i, p) in points.iter().enumerate() {
            gap[i] = gap[i].min(chart.distance(&points[newest], p)?);
            if gap[i] > far.0 {
                far = (gap[i], i);
            }
        }
        if far.0 <= delta {
            return Ok(net);
        }
        newest = far.1;
        net.push(newest);
    }
}

pub fn cover_obstacle(
    chart: &dyn ManifoldChart,
    cloud: &ObstacleCloud,
    r: f64,
    big_r: f64,
    opts: &CoverOptions,
) -> Result<Cover> {
    if !(r.is_finite() && big_r.is_finite() && r > 0.0) {
        return Err(Error::validation(format!("cover radii must be positive and finite, got r = {r}, R = {big_r}")));
    }
    if !(r < big_r / 2.0) {
        return Err(Error::validation(format!("cover requires r < R/2, got r = {r} and R = {big_r}")));
    }
    cloud.check_chart(chart)?;
    if cloud.dim() != chart.dim() {
        return Err(Error::validation(format!(
            "cloud dimension {} does not match chart dimension {}",
            cloud.dim(),
            chart.dim()
        )));
    }
    let delta = (big_r - 2.0 * r) / 2.0;
    let r_star = (2.0 * r + delta + big_r) / 2.0;

    let mut samples = Vec::new();
    let mut sample_generator = Vec::new();
    let floor = r * (1.0 - opts.rejection_tolerance);
    for (gi, x) in cloud.points.iter().enumerate() {
        for u in tangent_directions(chart, x, opts.directions, opts.seed)? {
            let Ok(m) = chart.exp_at(x, &(u * r)) else { continue };
            if chart.check_point(&m).is_err() {
                continue;
            }
            if cloud.distance(chart, &m)? >= floor {
                samples.push(m);
                sample_generator.push(gi);
            }
        }
    }

    let net = farthest_point_net(chart, &samples, delta)?;
    let mut generators: Vec<usize> = Vec::new();
    for &i in &net {
        let g = sample_generator[i];
        if !generators.contains(&g) {
            generators.push(g);
        }
    }

    let reach = r_star - r;
    let mut gap = vec![f64::INFINITY; cloud.len()];
    for &g in &generators {
        for (i, p) in cloud.points.iter().enumerate() {
            gap[i] = gap[i].min(chart.distance(&cloud.points[g], p)?);
        }
    }
    let mut completion = 0;
    loop {
        let (far, idx) = gap
            .iter()
            .enumerate()
            .fold((0.0f64, 0usize), |acc, (i, &d)| if d > acc.0 { (d, i) } else { acc });
        if far < reach {
            break;
        }
        generators.push(idx);
        completion += 1;
        for (i, p) in cloud.points.iter().enumerate() {
            gap[i] = gap[i].min(chart.distance(&cloud.points[idx], p)?);
        }
    }

    Ok(Cover {
        centers: generators.iter().map(|&g| cloud.points[g].clone()).collect(),
        generators,
        r,
        big_r,
        r_star,
        delta,
        boundary_samples: samples.len(),
        net_size: net.len(),
        completion_centers: completion,
    })
}

/// Worst-case distance and violation count of `samples` against the union of balls.
pub fn check_coverage(chart: &dyn ManifoldChart, samples: &[Vector], centers: &[Vector], radius: f64) -> Result<(usize, f64)> {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for m in samples {
        let mut nearest = f64::INFINITY;
        for c in centers {
            nearest = nearest.min(chart.distance(c, m)?);
        }
        if !(nearest < radius) {
            violations += 1;
        }
        worst = worst.max(nearest);
    }
    Ok((violations, worst))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverVerification {
    pub samples: usize,
    /// Samples of `B_r(P)` outside every `B_{r*}(p_i)`.
    pub inner_violations: usize,
    /// Samples of some `B_{r*}(p_i)` outside `B_R(P)`.
    pub outer_violations: usize,
    pub worst_inner_distance: f64,
    pub worst_outer_distance: f64,
}

impl CoverVerification {
    pub fn passed(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// Monte-Carlo check of `B_r(P) ⊂ ∪ B_{r*}(p_i) ⊂ B_R(P)` with `samples` draws per inclusion.
pub fn verify_cover(
    chart: &dyn ManifoldChart,
    cloud: &ObstacleCloud,
    cover: &Cover,
    samples: usize,
    seed: u64,
) -> Result<CoverVerification> {
    if cover.centers.is_empty() {
        return Err(Error::validation("cover has no centers"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inner = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = &cloud.points[rng.gen_range(0..cloud.len())];
        inner.push(sample_ball_around(chart, x, cover.r, &mut rng)?);
    }
    let (inner_violations, worst_inner_distance) = check_coverage(chart, &inner, &cover.centers, cover.r_star)?;

    let mut outer_violations = 0;
    let mut worst_outer_distance = 0.0f64;
    for _ in 0..samples {
        let c = &cover.centers[rng.gen_range(0..cover.centers.len())];
        let m = sample_ball_around(chart, c, cover.r_star, &mut rng)?;
        let d = cloud.distance(chart, &m)?;
        if !(d < cover.big_r) {
            outer_violations += 1;
        }
        worst_outer_distance = worst_outer_distance.max(d);
    }

    Ok(CoverVerification {
        samples,
        inner_violations,
        outer_violations,
        worst_inner_distance,
        worst_outer_distance,
    })
}
