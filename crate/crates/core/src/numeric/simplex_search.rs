//! Nelder-Mead downhill simplex, used for the percentile fits and the
//! parameter estimation. Unconstrained; callers map boxes onto the real line.

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub max_evals: usize,
    /// Stop when the spread of objective values across the simplex drops
    /// below this (absolute).
    pub f_tol: f64,
    /// ... and the simplex diameter drops below this.
    pub x_tol: f64,
    /// Number of restarts from the best vertex with a fresh simplex.
    pub restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_evals: 20_000, f_tol: 1e-22, x_tol: 1e-12, restarts: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: &[f64], opts: SearchOptions) -> SearchResult {
    let mut best = x0.to_vec();
    let mut evals = 0;
    let mut value = f(&best);
    evals += 1;
    for round in 0..=opts.restarts {
        let shrink = 0.5f64.powi(round as i32);
        let steps: Vec<f64> = step.iter().map(|s| s * shrink).collect();
        let (x, v, used) = run(&mut f, &best, &steps, &opts, opts.max_evals.saturating_sub(evals));
        evals += used;
        let improved = v < value;
        if v <= value {
            best = x;
            value = v;
        }
        if !improved && round > 0 {
            break;
        }
        if evals >= opts.max_evals {
            break;
        }
    }
    SearchResult { x: best, value, evals }
}

fn run<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: &[f64], opts: &SearchOptions, budget: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut evals = 0;
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts
        .iter()
        .map(|p| {
            evals += 1;
            sanitize(f(p))
        })
        .collect();

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && diameter <= opts.x_tol * (1.0 + pts[0].iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
        if spread == 0.0 && diameter == 0.0 {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = pts[n].clone();
        let along = |coef: f64, out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&worst) {
                *o = c + coef * (c - w);
            }
        };

        along(1.0, &mut trial);
        let fr = sanitize(f(&trial));
        evals += 1;
        if fr < vals[0] {
            along(2.0, &mut trial2);
            let fe = sanitize(f(&trial2));
            evals += 1;
            if fe < fr {
                pts[n].clone_from(&trial2);
                vals[n] = fe;
            } else {
                pts[n].clone_from(&trial);
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n].clone_from(&trial);
            vals[n] = fr;
        } else {
            let outside = fr < vals[n];
            along(if outside { 0.5 } else { -0.5 }, &mut trial2);
            let fc = sanitize(f(&trial2));
            evals += 1;
            if fc < fr.min(vals[n]) {
                pts[n].clone_from(&trial2);
                vals[n] = fc;
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    for (x, b) in pts[i].iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    vals[i] = sanitize(f(&pts[i]));
                    evals += 1;
                }
            }
        }
    }
    let (i, v) = vals.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    (pts[i].clone(), v, evals)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
