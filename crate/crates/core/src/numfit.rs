//! Shape-weighted scoring and derivative-free parameter fitting.
//!
//! The score is a mean relative squared error with per-point denominators
//! floored by a global characteristic scale, so it rewards matching the
//! overall shape of the target rather than its largest values. Lower is
//! better; zero means an exact fit. Failed (non-finite) predictions score
//! +infinity.

use crate::expr::{evaluate, EvalResult, Expression};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("dataset needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dataset contains non-finite entries")]
    NonFinite,
    #[error("dataset shape inconsistent: {0}")]
    Shape(String),
    #[error("declared range {0:?} does not cover column {1}")]
    BadRange((f64, f64), usize),
}

/// N samples of d-dimensional inputs with scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    targets: Vec<f64>,
    ranges: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, DataError> {
        if columns.is_empty() {
            return Err(DataError::Shape("no input columns".to_string()));
        }
        let n = targets.len();
        if n < 2 {
            return Err(DataError::TooFewSamples(n));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(DataError::Shape(format!(
                "column lengths {:?} vs {} targets",
                columns.iter().map(Vec::len).collect::<Vec<_>>(),
                n
            )));
        }
        if columns.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite);
        }
        let ranges = columns
            .iter()
            .map(|c| {
                let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect();
        Ok(Dataset { columns, targets, ranges })
    }

    /// Univariate constructor.
    pub fn from_xy(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DataError> {
        Dataset::new(vec![xs], ys)
    }

    /// Overrides the sampling ranges (must cover the data extents).
    pub fn with_ranges(mut self, ranges: Vec<(f64, f64)>) -> Result<Self, DataError> {
        if ranges.len() != self.columns.len() {
            return Err(DataError::Shape("range count != input dim".to_string()));
        }
        for (i, ((lo, hi), col)) in ranges.iter().zip(&self.columns).enumerate() {
            let data_lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let data_hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if *lo > data_lo || *hi < data_hi {
                return Err(DataError::BadRange((*lo, *hi), i));
            }
        }
        self.ranges = ranges;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }
}

/// Score hyperparameters: relative-tolerance fraction and absolute floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { alpha: 0.01, epsilon: 1e-9 }
    }
}

/// Multi-start simplex-descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_evals_per_restart: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { restarts: 10, max_evals_per_restart: 2000, seed: 0, init_scale: 1.0 }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Non-vanishing characteristic scale of the targets:
/// max(MAD, alpha * mean(|y|), epsilon).
pub fn global_scale(targets: &[f64], cfg: &ScoreConfig) -> f64 {
    let mut ys = targets.to_vec();
    let med = median(&mut ys);
    let mut devs: Vec<f64> = targets.iter().map(|y| (y - med).abs()).collect();
    let mad = median(&mut devs);
    let mean_abs = targets.iter().map(|y| y.abs()).sum::<f64>() / targets.len() as f64;
    mad.max(cfg.alpha * mean_abs).max(cfg.epsilon)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("length mismatch: {predictions} predictions vs {targets} targets")]
pub struct LengthMismatch {
    pub predictions: usize,
    pub targets: usize,
}

/// The loss: (1/N) * sum |f(x_i) - y_i|^2 / max(alpha*|y_i|, global-scale)^2.
/// Any non-finite prediction makes the whole score +infinity.
pub fn score(predictions: &EvalResult, targets: &[f64], cfg: &ScoreConfig) -> Result<f64, LengthMismatch> {
    if predictions.values.len() != targets.len() {
        return Err(LengthMismatch {
            predictions: predictions.values.len(),
            targets: targets.len(),
        });
    }
    if !predictions.all_finite() {
        return Ok(f64::INFINITY);
    }
    let gs = global_scale(targets, cfg);
    let n = targets.len() as f64;
    let mut total = 0.0;
    for (p, y) in predictions.values.iter().zip(targets) {
        let denom = (cfg.alpha * y.abs()).max(gs);
        let r = p - y;
        total += r * r / (denom * denom);
    }
    Ok(total / n)
}

/// Convenience: evaluate-and-score an expression on a dataset.
pub fn score_expression(
    expr: &Expression,
    params: &[f64],
    data: &Dataset,
    cfg: &ScoreConfig,
) -> f64 {
    match evaluate(expr, data.columns(), params) {
        Ok(pred) => score(&pred, data.targets(), cfg).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

/// Fits the free parameters of `expr` to `data` by multi-start Nelder-Mead
/// on the score. The first start is the all-ones vector; the rest are drawn
/// Normal(0, init_scale^2) from the given seed. Deterministic.
pub fn fit_params(
    expr: &Expression,
    data: &Dataset,
    score_cfg: &ScoreConfig,
    fit_cfg: &FitConfig,
) -> (Vec<f64>, f64) {
    let p = expr.param_count();
    if p == 0 {
        let s = score_expression(expr, &[], data, score_cfg);
        return (Vec::new(), s);
    }

    let objective = |params: &[f64]| score_expression(expr, params, data, score_cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(fit_cfg.seed);
    let normal = Normal::new(0.0, fit_cfg.init_scale).expect("positive init scale");

    let mut best_params = vec![1.0; p];
    let mut best_score = f64::INFINITY;
    for restart in 0..fit_cfg.restarts.max(1) {
        let x0: Vec<f64> = if restart == 0 {
            vec![1.0; p]
        } else {
            (0..p).map(|_| normal.sample(&mut rng)).collect()
        };
        let (x, fx) = nelder_mead(&objective, &x0, fit_cfg.max_evals_per_restart);
        // strict inequality: ties resolve to the earliest restart
        if fx < best_score {
            best_score = fx;
            best_params = x;
        }
    }
    // polish from the winner; never returns a worse point
    let (x, fx) = nelder_mead(&objective, &best_params, fit_cfg.max_evals_per_restart);
    if fx < best_score {
        best_score = fx;
        best_params = x;
    }
    (best_params, best_score)
}

/// Standard Nelder-Mead simplex descent. Returns the best vertex found
/// within the evaluation budget; never worse than f(x0).
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], max_evals: usize) -> (Vec<f64>, f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink
    const FTOL: f64 = 1e-12;
    const XTOL: f64 = 1e-12;

    let n = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: perturb one coordinate per vertex
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut xi = x0.to_vec();
        if xi[i] != 0.0 {
            xi[i] *= 1.05;
        } else {
            xi[i] = 0.00025;
        }
        let fi = eval(&xi, &mut evals);
        simplex.push((xi, fi));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fbest = simplex[0].1;
        let fworst = simplex[n].1;
        if fbest.is_finite() && fworst.is_finite() {
            let fspread = (fworst - fbest).abs();
            let xspread = (0..n)
                .map(|i| {
                    simplex
                        .iter()
                        .map(|(x, _)| (x[i] - simplex[0].0[i]).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if fspread <= FTOL && xspread <= XTOL {
                break;
            }
        }

        // centroid of all but worst
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        for c in &mut centroid {
            *c /= n as f64;
        }

        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
        };

        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -ALPHA);
        let fr = eval(&reflected, &mut evals);

        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -ALPHA * GAMMA);
            let fe = eval(&expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                lerp(&centroid, &reflected, RHO)
            } else {
                lerp(&centroid, &worst, RHO)
            };
            let fc = eval(&contracted, &mut evals);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // shrink toward best
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, SIGMA);
                    v.1 = eval(&v.0, &mut evals);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_candidate;

    #[test]
    fn global_scale_examples() {
        let cfg = ScoreConfig::default();
        assert_eq!(global_scale(&[1.0, 2.0, 3.0], &cfg), 1.0);
        assert_eq!(global_scale(&[0.0, 0.0, 0.0], &cfg), cfg.epsilon);
        assert_eq!(global_scale(&[5.0, 5.0, 5.0, 5.0], &cfg), 0.05);
    }

    #[test]
    fn score_perfect_fit_is_zero() {
        let cfg = ScoreConfig::default();
        let pred = EvalResult { values: vec![1.0, 2.0], finite_mask: vec![true, true] };
        assert_eq!(score(&pred, &[1.0, 2.0], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn score_hand_computed_example() {
        let cfg = ScoreConfig::default();
        let pred = EvalResult { values: vec![1.1, 1.0], finite_mask: vec![true, true] };
        let s = score(&pred, &[1.0, 1.0], &cfg).unwrap();
        assert!((s - 50.0).abs() < 1e-9, "got {s}");
    }

    #[test]
    fn score_nan_prediction_is_infinite() {
        let cfg = ScoreConfig::default();
        let pred = EvalResult { values: vec![f64::NAN, 1.0], finite_mask: vec![false, true] };
        assert_eq!(score(&pred, &[1.0, 1.0], &cfg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn score_length_mismatch() {
        let cfg = ScoreConfig::default();
        let pred = EvalResult { values: vec![1.0], finite_mask: vec![true] };
        assert!(score(&pred, &[1.0, 2.0], &cfg).is_err());
    }

    #[test]
    fn score_scale_invariance_when_mad_dominates() {
        // alpha*|y_i| < gs for every i, before and after scaling
        let cfg = ScoreConfig::default();
        let targets: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let preds: Vec<f64> = vec![1.1, 1.9, 3.2, 3.9];
        let s1 = {
            let pred = EvalResult { values: preds.clone(), finite_mask: vec![true; 4] };
            score(&pred, &targets, &cfg).unwrap()
        };
        let k = 7.0;
        let s2 = {
            let pred = EvalResult {
                values: preds.iter().map(|p| p * k).collect(),
                finite_mask: vec![true; 4],
            };
            let scaled: Vec<f64> = targets.iter().map(|y| y * k).collect();
            score(&pred, &scaled, &cfg).unwrap()
        };
        assert!((s1 - s2).abs() / s1 < 1e-12);
    }

    #[test]
    fn fit_linear_slope() {
        let xs: Vec<f64> = (0..100).map(|i| 0.1 + i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let data = Dataset::from_xy(xs, ys).unwrap();
        let expr = parse_candidate("params[0]*x", 1).unwrap();
        let (params, s) = fit_params(&expr, &data, &ScoreConfig::default(), &FitConfig::default());
        assert!((params[0] - 2.0).abs() < 1e-6, "slope {}", params[0]);
        assert!(s < 1e-12, "score {s}");
    }

    #[test]
    fn fit_constant() {
        let data = Dataset::from_xy(vec![0.0, 1.0, 2.0], vec![7.0, 7.0, 7.0]).unwrap();
        let expr = parse_candidate("lambda x,*params: params[0]", 1).unwrap();
        let (params, s) = fit_params(&expr, &data, &ScoreConfig::default(), &FitConfig::default());
        assert!((params[0] - 7.0).abs() < 1e-8);
        assert!(s < 1e-15);
    }

    #[test]
    fn fit_no_params_returns_direct_score() {
        let data = Dataset::from_xy(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let expr = parse_candidate("x", 1).unwrap();
        let (params, s) = fit_params(&expr, &data, &ScoreConfig::default(), &FitConfig::default());
        assert!(params.is_empty());
        assert_eq!(s, 0.0);
    }

    #[test]
    fn fit_never_worse_than_all_ones_start() {
        let xs: Vec<f64> = (0..50).map(|i| 0.1 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
        let data = Dataset::from_xy(xs, ys).unwrap();
        let expr = parse_candidate("np.sin(params[0]*x)*params[1]", 1).unwrap();
        let cfg = ScoreConfig::default();
        let ones_score = score_expression(&expr, &[1.0, 1.0], &data, &cfg);
        let (_, s) = fit_params(&expr, &data, &cfg, &FitConfig::default());
        assert!(s <= ones_score);
    }

    #[test]
    fn fit_is_deterministic() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let data = Dataset::from_xy(xs, ys).unwrap();
        let expr = parse_candidate("params[0]*x + params[1]", 1).unwrap();
        let cfg = FitConfig { seed: 42, ..FitConfig::default() };
        let a = fit_params(&expr, &data, &ScoreConfig::default(), &cfg);
        let b = fit_params(&expr, &data, &ScoreConfig::default(), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(
            Dataset::from_xy(vec![1.0], vec![1.0]),
            Err(DataError::TooFewSamples(1))
        ));
        assert!(matches!(
            Dataset::from_xy(vec![1.0, f64::NAN], vec![1.0, 2.0]),
            Err(DataError::NonFinite)
        ));
        let d = Dataset::from_xy(vec![1.0, 3.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(d.ranges(), &[(1.0, 3.0)]);
        assert!(d.clone().with_ranges(vec![(0.0, 5.0)]).is_ok());
        assert!(d.with_ranges(vec![(2.0, 5.0)]).is_err());
    }
}
