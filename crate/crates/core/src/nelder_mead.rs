//! Nelder–Mead simplex minimization.
//!
//! Derivative-free, with the standard reflection/expansion/contraction/
//! shrink coefficients (1, 2, 1/2, 1/2). Convergence is declared when
//! the objective spread across the simplex falls below the tolerance.
//! Non-finite objective values are tolerated; they sort worst and the
//! simplex moves away from them.

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iterations: usize,
    /// Convergence threshold on `f(worst) - f(best)`.
    pub tolerance: f64,
    /// Offset added per coordinate to build the initial simplex.
    pub initial_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iterations: 5000,
            tolerance: 1e-8,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

pub fn minimize<F>(f: F, start: &[f64], options: &Options) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    assert!(n > 0, "cannot optimize a zero-dimensional point");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut vertex = start.to_vec();
        vertex[i] += options.initial_step;
        simplex.push(vertex);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        if spread < options.tolerance {
            converged = true;
            break;
        }

        // centroid of all vertices but the worst
        let mut centroid = vec![0.0; n];
        for &idx in &order[..n] {
            for (slot, &x) in centroid.iter_mut().zip(&simplex[idx]) {
                *slot += x;
            }
        }
        for slot in &mut centroid {
            *slot /= n as f64;
        }

        let move_from_centroid = |coeff: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coeff * (c - w))
                .collect()
        };

        let reflected = move_from_centroid(REFLECT);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = move_from_centroid(EXPAND);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                move_from_centroid(CONTRACT) // outside contraction
            } else {
                move_from_centroid(-CONTRACT) // inside contraction
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                let anchor = simplex[best].clone();
                for (idx, vertex) in simplex.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for (x, a) in vertex.iter_mut().zip(&anchor) {
                        *x = a + SHRINK * (*x - a);
                    }
                    values[idx] = f(vertex);
                }
            }
        }

        iterations += 1;
        let current_best = values.iter().copied().fold(f64::INFINITY, f64::min);
        history.push(current_best);
    }

    let best_index = (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is non-empty");
    Minimum {
        point: simplex[best_index].clone(),
        value: values[best_index],
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_the_sphere() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let result = minimize(sphere, &[5.0, -3.0, 2.0], &Options::default());
        assert!(result.converged);
        assert!(result.value < 1e-8, "value {}", result.value);
        for x in &result.point {
            assert!(x.abs() < 1e-3);
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let rosenbrock = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let options = Options {
            max_iterations: 10_000,
            tolerance: 1e-12,
            initial_step: 0.25,
        };
        let result = minimize(rosenbrock, &[-1.2, 1.0], &options);
        assert!((result.point[0] - 1.0).abs() < 1e-4);
        assert!((result.point[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn never_returns_worse_than_the_start() {
        let bumpy = |x: &[f64]| (x[0] * 3.0).sin() + x[0] * x[0] * 0.1;
        let start = [2.0];
        let result = minimize(bumpy, &start, &Options::default());
        assert!(result.value <= bumpy(&start));
    }

    #[test]
    fn history_is_non_increasing() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let result = minimize(sphere, &[4.0, 4.0], &Options::default());
        for pair in result.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15);
        }
    }

    #[test]
    fn survives_partially_infinite_objectives() {
        // objective undefined (infinite) for negative coordinates
        let guarded = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let result = minimize(guarded, &[0.5], &Options::default());
        assert!((result.point[0] - 2.0).abs() < 1e-3);
    }
}
