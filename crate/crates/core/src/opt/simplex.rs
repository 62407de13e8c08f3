//! Nelder–Mead simplex minimization over unconstrained coordinates.

/// Convergence thresholds; diameters are measured by the caller-supplied
/// metric so constrained reparameterizations can report in problem units.
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop when the simplex diameter under `metric` falls below this.
    pub diameter_tol: f64,
    /// ... and the objective spread falls below this.
    pub spread_tol: f64,
}

pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: u64,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). `metric` maps a point to the coordinates in which the
/// diameter stop rule applies.
pub fn nelder_mead<F, M>(
    mut f: F,
    metric: M,
    x0: &[f64],
    initial_step: f64,
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    let mut evals = 0u64;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += initial_step;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex
        .iter()
        .map(|v| {
            evals += 1;
            f(v)
        })
        .collect();

    let mut converged = false;
    for _ in 0..opts.max_iter {
        // Order ascending by objective.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = fvals[worst] - fvals[best];
        let diameter = simplex_diameter(&simplex, &metric);
        if diameter < opts.diameter_tol && spread < opts.spread_tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst.
        let mut centroid = vec![0.0; dim];
        for (i, v) in simplex.iter().enumerate() {
            if i == worst {
                continue;
            }
            for k in 0..dim {
                centroid[k] += v[k];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|k| centroid[k] + (centroid[k] - simplex[worst][k]))
            .collect();
        let f_reflect = {
            evals += 1;
            f(&reflect)
        };

        if f_reflect < fvals[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]))
                .collect();
            let f_expand = {
                evals += 1;
                f(&expand)
            };
            if f_expand < f_reflect {
                simplex[worst] = expand;
                fvals[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                fvals[worst] = f_reflect;
            }
        } else if f_reflect < fvals[second_worst] {
            simplex[worst] = reflect;
            fvals[worst] = f_reflect;
        } else {
            let toward_reflect = f_reflect < fvals[worst];
            let contract: Vec<f64> = if toward_reflect {
                (0..dim)
                    .map(|k| centroid[k] + 0.5 * (reflect[k] - centroid[k]))
                    .collect()
            } else {
                (0..dim)
                    .map(|k| centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]))
                    .collect()
            };
            let f_contract = {
                evals += 1;
                f(&contract)
            };
            let accept = if toward_reflect {
                f_contract <= f_reflect
            } else {
                f_contract < fvals[worst]
            };
            if accept {
                simplex[worst] = contract;
                fvals[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for (i, v) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for k in 0..dim {
                        v[k] = anchor[k] + 0.5 * (v[k] - anchor[k]);
                    }
                    evals += 1;
                    fvals[i] = f(v);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if fvals[i] < fvals[best] {
            best = i;
        }
    }
    SimplexResult {
        x: simplex[best].clone(),
        fx: fvals[best],
        evaluations: evals,
        converged,
    }
}

fn simplex_diameter<M: Fn(&[f64]) -> Vec<f64>>(simplex: &[Vec<f64>], metric: &M) -> f64 {
    let mapped: Vec<Vec<f64>> = simplex.iter().map(|v| metric(v)).collect();
    let mut diam = 0.0f64;
    for i in 0..mapped.len() {
        for j in (i + 1)..mapped.len() {
            let d = mapped[i]
                .iter()
                .zip(&mapped[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            diam = diam.max(d);
        }
    }
    diam
}
