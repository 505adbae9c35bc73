//! Metric-only fallbacks for connection, curvature, exponential and logarithm.

use super::{fmt_vec, Christoffel, ManifoldChart, Matrix, Vector};
use crate::error::{Error, Result};

/// Central-difference step for metric partial derivatives.
pub const METRIC_FD_STEP: f64 = 1e-5;
/// Central-difference step for directional derivatives of the Christoffel symbols.
pub const CURVATURE_FD_STEP: f64 = 1e-4;
/// RK4 steps used to flow the geodesic equation over unit time.
pub const GEODESIC_STEPS: usize = 256;

const LOG_MAX_ITERS: usize = 60;
const LOG_JACOBIAN_STEP: f64 = 1e-6;
const LOG_MIN_DAMPING: f64 = 1e-10;

fn symmetric_metric<C: ManifoldChart + ?Sized>(chart: &C, q: &Vector) -> Result<Matrix> {
    let g = chart.metric_at(q)?;
    Ok((&g + g.transpose()) * 0.5)
}

/// Levi-Civita connection from central differences of the metric:
/// `Γ^i_{jk} = ½ g^{im} (∂_j g_{mk} + ∂_k g_{mj} − ∂_m g_{jk})`.
pub fn christoffel_from_metric<C: ManifoldChart + ?Sized>(chart: &C, q: &Vector, step: f64) -> Result<Christoffel> {
    let n = chart.dim();
    let g = symmetric_metric(chart, q)?;
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| Error::domain(format!("singular metric at {}", fmt_vec(q))))?;
    let mut partials = Vec::with_capacity(n);
    for l in 0..n {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[l] += step;
        qm[l] -= step;
        let gp = symmetric_metric(chart, &qp)?;
        let gm = symmetric_metric(chart, &qm)?;
        partials.push((gp - gm) / (2.0 * step));
    }
    let mut gamma = Christoffel::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += g_inv[(i, m)] * (partials[j][(m, k)] + partials[k][(m, j)] - partials[m][(j, k)]);
                }
                gamma.set(i, j, k, 0.5 * acc);
                gamma.set(i, k, j, 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

/// Directional derivative `(∂_x Γ)(y, z)` by central differences along `x`.
fn christoffel_derivative<C: ManifoldChart + ?Sized>(
    chart: &C,
    q: &Vector,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    step: f64,
) -> Result<Vector> {
    let len = x.norm();
    if len == 0.0 {
        return Ok(Vector::zeros(q.len()));
    }
    let dir = x / len;
    let plus = chart.christoffel_contract(&(q + &dir * step), y, z)?;
    let minus = chart.christoffel_contract(&(q - &dir * step), y, z)?;
    Ok((plus - minus) * (len / (2.0 * step)))
}

/// `R(a,b)c = (∂_a Γ)(b,c) − (∂_b Γ)(a,c) + Γ(a, Γ(b,c)) − Γ(b, Γ(a,c))`.
pub fn curvature_from_christoffel<C: ManifoldChart + ?Sized>(
    chart: &C,
    q: &Vector,
    a: &Vector,
    b: &Vector,
    c: &Vector,
    step: f64,
) -> Result<Vector> {
    let d_a = christoffel_derivative(chart, q, a, b, c, step)?;
    let d_b = christoffel_derivative(chart, q, b, a, c, step)?;
    let gamma = chart.christoffel_at(q)?;
    let gbc = gamma.contract(b, c);
    let gac = gamma.contract(a, c);
    Ok(d_a - d_b + gamma.contract(a, &gbc) - gamma.contract(b, &gac))
}

/// Exponential map by RK4 integration of `ẍ = −Γ(x; ẋ, ẋ)` over `[0, 1]`.
pub fn geodesic_exp<C: ManifoldChart + ?Sized>(chart: &C, q: &Vector, v: &Vector, steps: usize) -> Result<Vector> {
    chart.check_point(q)?;
    let h = 1.0 / steps as f64;
    let mut x = q.clone();
    let mut u = v.clone();
    let accel = |x: &Vector, u: &Vector| -> Result<Vector> { Ok(-chart.christoffel_contract(x, u, u)?) };
    for _ in 0..steps {
        let k1x = u.clone();
        let k1u = accel(&x, &u)?;
        let x2 = &x + &k1x * (0.5 * h);
        let u2 = &u + &k1u * (0.5 * h);
        let k2u = accel(&x2, &u2)?;
        let x3 = &x + &u2 * (0.5 * h);
        let u3 = &u + &k2u * (0.5 * h);
        let k3u = accel(&x3, &u3)?;
        let x4 = &x + &u3 * h;
        let u4 = &u + &k3u * h;
        let k4u = accel(&x4, &u4)?;
        x += (k1x + &u2 * 2.0 + &u3 * 2.0 + &u4) * (h / 6.0);
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("geodesic flow left the chart"));
    }
    Ok(x)
}

/// Logarithm map by damped Newton iteration on `v ↦ exp_q(v) − y`, with a
/// finite-difference Jacobian and the coordinate difference as initial guess.
/// Steps are halved until the residual decreases and the flow stays on the chart.
pub fn newton_log<C: ManifoldChart + ?Sized>(chart: &C, q: &Vector, y: &Vector) -> Result<Vector> {
    chart.check_point(q)?;
    chart.check_point(y)?;
    let n = chart.dim();
    let scale = 1.0 + y.norm();
    let mut v = y - q;
    let mut r = chart.exp_at(q, &v)? - y;
    for _ in 0..LOG_MAX_ITERS {
        if r.norm() < 1e-13 * scale {
            return Ok(v);
        }
        let mut jac = Matrix::zeros(n, n);
        for i in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[i] += LOG_JACOBIAN_STEP;
            vm[i] -= LOG_JACOBIAN_STEP;
            let col = (chart.exp_at(q, &vp)? - chart.exp_at(q, &vm)?) / (2.0 * LOG_JACOBIAN_STEP);
            jac.set_column(i, &col);
        }
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::domain("exponential map is singular; point outside the injectivity radius"))?;
        let mut lambda = 1.0;
        loop {
            let trial = &v - &delta * lambda;
            if let Ok(x) = chart.exp_at(q, &trial) {
                let rt = x - y;
                if rt.norm() < r.norm() {
                    v = trial;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < LOG_MIN_DAMPING {
                return Err(Error::domain(format!(
                    "logarithm from {} to {} stalled at residual {:e}",
                    fmt_vec(q),
                    fmt_vec(y),
                    r.norm()
                )));
            }
        }
    }
    if r.norm() < 1e-9 * scale {
        Ok(v)
    } else {
        Err(Error::domain(format!(
            "logarithm from {} to {} did not converge",
            fmt_vec(q),
            fmt_vec(y)
        )))
    }
}
