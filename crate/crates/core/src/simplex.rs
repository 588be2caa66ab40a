//! Nelder–Mead downhill simplex minimization.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2). Convergence is declared when every vertex lies within
//! `tolerance` of the best vertex in every coordinate; callers that want a
//! relative criterion should minimize over log-transformed parameters.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Offset of vertex `j` from the start point along coordinate `j`.
    pub initial_step: Vec<f64>,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn spread(vertices: &[Vec<f64>], best: usize) -> f64 {
    vertices
        .iter()
        .flat_map(|v| v.iter().zip(&vertices[best]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Minimize `f` starting from `start`.
///
/// # Panics
///
/// Panics if `initial_step` and `start` differ in length.
pub fn minimize<F>(start: &[f64], options: &SimplexOptions, f: F) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert_eq!(options.initial_step.len(), n, "one initial step per coordinate");
    let mut obj = Counted { f, evaluations: 0 };

    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    vertices.push(start.to_vec());
    for j in 0..n {
        let mut v = start.to_vec();
        v[j] += options.initial_step[j];
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| obj.eval(v)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n.saturating_sub(1)];

        if spread(&vertices, best) < options.tolerance {
            return SimplexResult {
                best: vertices[best].clone(),
                value: values[best],
                evaluations: obj.evaluations,
                converged: true,
            };
        }
        if obj.evaluations >= options.max_evaluations {
            return SimplexResult {
                best: vertices[best].clone(),
                value: values[best],
                evaluations: obj.evaluations,
                converged: false,
            };
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&vertices[i]) {
                *c += x / n as f64;
            }
        }
        let towards = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + coef * (x - c)).collect()
        };

        let reflected = towards(-REFLECT, &vertices[worst]);
        let f_r = obj.eval(&reflected);
        if f_r < values[best] {
            let expanded = towards(-EXPAND, &vertices[worst]);
            let f_e = obj.eval(&expanded);
            if f_e < f_r {
                vertices[worst] = expanded;
                values[worst] = f_e;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second_worst] {
            vertices[worst] = reflected;
            values[worst] = f_r;
            continue;
        }
        // outside contraction when the reflection beat the worst vertex, inside otherwise
        let (candidate, reference) = if f_r < values[worst] {
            (towards(-CONTRACT, &vertices[worst]), f_r)
        } else {
            (towards(CONTRACT, &vertices[worst]), values[worst])
        };
        let f_c = obj.eval(&candidate);
        if f_c < reference {
            vertices[worst] = candidate;
            values[worst] = f_c;
            continue;
        }
        let anchor = vertices[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (x, a) in vertices[i].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            values[i] = obj.eval(&vertices[i]);
        }
    }
}
