//! Derivative-free minimization (Nelder–Mead) for low-dimensional center searches.

#[derive(Clone, Debug)]
pub struct NelderMead {
    /// Initial simplex edge length.
    pub step: f64,
    /// Stop when the simplex diameter falls below this.
    pub xtol: f64,
    /// If positive, additionally require the spread of simplex values to fall below this.
    pub ftol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn new(step: f64, xtol: f64) -> Self {
        NelderMead { step, xtol, ftol: 0.0, max_iter: 10_000 }
    }

    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let d = x0.len();
        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for k in 0..d {
            let mut x = x0.to_vec();
            x[k] += self.step;
            simplex.push(x);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
        let mut it = 0;
        let mut converged = false;
        while it < self.max_iter {
            it += 1;
            let mut idx: Vec<usize> = (0..=d).collect();
            // ties broken by index so runs are reproducible
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();

            let diam = simplex[1..]
                .iter()
                .map(|x| dist(x, &simplex[0]))
                .fold(0.0, f64::max);
            if diam < self.xtol && (self.ftol <= 0.0 || vals[d] - vals[0] <= self.ftol) {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..d)
                .map(|k| simplex[..d].iter().map(|x| x[k]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect()
            };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                if fe < fr {
                    simplex[d] = xe;
                    vals[d] = fe;
                } else {
                    simplex[d] = xr;
                    vals[d] = fr;
                }
            } else if fr < vals[d - 1] {
                simplex[d] = xr;
                vals[d] = fr;
            } else {
                let (xc, fc) = if fr < vals[d] {
                    let x = along(-0.5);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = f(&x);
                    (x, v)
                };
                if fc < vals[d].min(fr) {
                    simplex[d] = xc;
                    vals[d] = fc;
                } else {
                    for i in 1..=d {
                        let x: Vec<f64> =
                            (0..d).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                        vals[i] = f(&x);
                        simplex[i] = x;
                    }
                }
            }
        }
        let best = (0..=d)
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
            .unwrap_or(0);
        Minimum { x: simplex[best].clone(), value: vals[best], iterations: it, converged }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = NelderMead::new(0.5, 1e-10).minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5 * (x[2] - 0.25).powi(2),
            &[0.0, 0.0, 0.0],
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let m = NelderMead::new(0.5, 1e-12).minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!((m.x[0] - 1.0).abs() < 1e-6, "{m:?}");
    }
}
