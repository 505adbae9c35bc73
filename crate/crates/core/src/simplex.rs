//! Downhill simplex (Nelder–Mead) minimisation.

use serde::{Deserialize, Serialize};

/// Reflection, expansion, contraction and shrink coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexCoefficients {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexCoefficients {
    fn default() -> Self {
        SimplexCoefficients {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexOptions {
    pub coefficients: SimplexCoefficients,
    /// Per-coordinate offset of the initial simplex vertices.
    pub initial_step: f64,
    pub max_evaluations: usize,
    /// Stop as soon as the best value drops to this level.
    pub target_value: f64,
    /// A simplex whose value spread falls below this has stagnated.
    pub value_tolerance: f64,
    /// A simplex whose diameter falls below this has stagnated.
    pub size_tolerance: f64,
    /// Number of fresh simplices built around the best vertex after stagnation.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            coefficients: SimplexCoefficients::default(),
            initial_step: 0.1,
            max_evaluations: 20_000,
            target_value: 0.0,
            value_tolerance: 1e-20,
            size_tolerance: 1e-12,
            restarts: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub restarts_used: usize,
    /// Best value after each iteration.
    pub best_history: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_nan() {
            f64::INFINITY
        } else {
            y
        }
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimises `f` from `x0`. Non-finite values are treated as `+∞`, so the
/// objective may report failed evaluations that way.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome {
    let n = x0.len();
    let c = opts.coefficients;
    let mut obj = Counted { f, evaluations: 0 };
    let mut best_history = Vec::new();
    let mut iterations = 0;
    let mut restarts_used = 0;
    let mut start = x0.to_vec();
    let mut best_x = start.clone();
    let mut best_f = f64::INFINITY;

    'outer: loop {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f_start = if best_f.is_finite() && restarts_used > 0 { best_f } else { obj.eval(&start) };
        simplex.push((start.clone(), f_start));
        for i in 0..n {
            let mut x = start.clone();
            x[i] += opts.initial_step;
            let fx = obj.eval(&x);
            simplex.push((x, fx));
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 <= best_f {
                best_f = simplex[0].1;
                best_x = simplex[0].0.clone();
            }
            best_history.push(best_f);
            if best_f <= opts.target_value || obj.evaluations >= opts.max_evaluations {
                break 'outer;
            }
            let spread = simplex[n].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= opts.value_tolerance || diameter <= opts.size_tolerance {
                if restarts_used < opts.restarts {
                    restarts_used += 1;
                    start = best_x.clone();
                    continue 'outer;
                }
                break 'outer;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (ci, xi) in centroid.iter_mut().zip(x) {
                    *ci += xi / n as f64;
                }
            }
            let worst = simplex[n].0.clone();
            let f_worst = simplex[n].1;
            let f_second = simplex[n - 1].1;
            let f_best = simplex[0].1;

            let xr = lerp(&centroid, &worst, -c.reflection);
            let fr = obj.eval(&xr);
            if fr < f_best {
                let xe = lerp(&centroid, &xr, c.expansion);
                let fe = obj.eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < f_second {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc, accepted) = if fr < f_worst {
                let xc = lerp(&centroid, &xr, c.contraction);
                let fc = obj.eval(&xc);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = lerp(&centroid, &worst, c.contraction);
                let fc = obj.eval(&xc);
                let ok = fc < f_worst;
                (xc, fc, ok)
            };
            if accepted {
                simplex[n] = (xc, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = lerp(&anchor, &vertex.0, c.shrink);
                let fx = obj.eval(&x);
                *vertex = (x, fx);
            }
        }
    }

    SimplexOutcome {
        x: best_x,
        value: best_f,
        evaluations: obj.evaluations,
        iterations,
        restarts_used,
        best_history,
    }
}
