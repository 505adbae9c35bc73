//! Exponential and logarithm maps on the built-in charts.

use geospline::manifold::{chart_from_name, Vector};

fn main() -> geospline::Result<()> {
    let cases = [
        ("euclidean:2", vec![0.5, -1.0], vec![0.3, 0.4]),
        ("sphere2", vec![1.0, 0.5], vec![0.4, -0.3]),
        ("hyperbolic2", vec![0.0, 1.0], vec![0.8, 0.5]),
    ];
    for (name, q, v) in cases {
        let chart = chart_from_name(name)?;
        let (q, v) = (Vector::from_vec(q), Vector::from_vec(v));
        let y = chart.exp_at(&q, &v)?;
        let back = chart.log_at(&q, &y)?;
        println!(
            "{name:12} exp = {:?}  |v| = {:.6}  d(q, exp v) = {:.6}  log error {:.2e}",
            y.as_slice(),
            chart.norm(&q, &v)?,
            chart.distance(&q, &y)?,
            (&back - &v).amax()
        );
    }
    Ok(())
}
