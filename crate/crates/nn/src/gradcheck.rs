//! Finite-difference validation of tape gradients.

use std::collections::BTreeSet;

use rand::seq::IteratorRandom;
use rand::Rng;

use crate::error::NnError;
use crate::params::{Gradients, ParamId, ParamStore};
use crate::tape::{Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// `|a − b| / max(|a|, |b|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients of the scalar built by `loss` against central
/// differences with step `h` at each `(param, flat index)` sample.
pub fn grad_check<F>(
    store: &mut ParamStore,
    loss: F,
    samples: &[(ParamId, usize)],
    h: f64,
) -> Result<GradCheckReport, NnError>
where
    F: Fn(&mut Tape) -> Result<Var, NnError>,
{
    let mut grads = Gradients::zeros_like(store);
    {
        let mut tape = Tape::new(store);
        let l = loss(&mut tape)?;
        tape.backward(l, &mut grads);
    }
    let eval = |s: &ParamStore| -> Result<f64, NnError> {
        let mut tape = Tape::new(s);
        let l = loss(&mut tape)?;
        Ok(tape.value(l).get(0, 0))
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: None,
    };
    for &(id, k) in samples {
        let analytic = grads.get(id).as_slice()[k];
        let orig = store.get(id).as_slice()[k];
        store.get_mut(id).as_mut_slice()[k] = orig + h;
        let up = eval(store);
        store.get_mut(id).as_mut_slice()[k] = orig - h;
        let down = eval(store);
        store.get_mut(id).as_mut_slice()[k] = orig;
        let numeric = (up? - down?) / (2.0 * h);
        if !analytic.is_finite() || !numeric.is_finite() {
            return Err(NnError::NonFiniteGradient {
                param: store.name(id).to_string(),
                index: k,
            });
        }
        let err = relative_error(analytic, numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((store.name(id).to_string(), k));
        }
    }
    Ok(report)
}

/// Up to `per_param` random entries from every parameter. For parameters in
/// `tables`, entries are drawn only from the listed rows (the rows a forward
/// pass actually reads).
pub fn sample_entries<R: Rng>(
    store: &ParamStore,
    per_param: usize,
    tables: &[(ParamId, BTreeSet<usize>)],
    rng: &mut R,
) -> Vec<(ParamId, usize)> {
    let mut out = Vec::new();
    for id in store.ids() {
        let m = store.get(id);
        let pool: Vec<usize> = match tables.iter().find(|(t, _)| *t == id) {
            Some((_, rows)) => rows.iter().flat_map(|r| r * m.cols()..(r + 1) * m.cols()).collect(),
            None => (0..m.len()).collect(),
        };
        let mut picked = pool.into_iter().choose_multiple(rng, per_param);
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|k| (id, k)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_layer_with_squared_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        let w = store.xavier("w", 5, 3, &mut rng);
        let b = store.xavier("b", 1, 3, &mut rng);
        let x = Matrix::from_vec(4, 5, (0..20).map(|i| (i as f64 * 0.37).sin()).collect());
        let y = Matrix::from_vec(4, 3, (0..12).map(|i| (i as f64 * 0.71).cos()).collect());
        let loss = |t: &mut Tape| {
            let (vx, vy) = (t.constant(x.clone()), t.constant(y.clone()));
            let (vw, vb) = (t.param(w), t.param(b));
            let xw = t.matmul(vx, vw);
            let pred = t.add_broadcast(xw, vb);
            let d = t.sub(pred, vy);
            let sq = t.mul(d, d);
            Ok(t.sum_all(sq))
        };
        let samples: Vec<_> = store
            .ids()
            .flat_map(|id| (0..store.get(id).len()).map(move |k| (id, k)))
            .collect();
        let report = grad_check(&mut store, loss, &samples, 1e-5).unwrap();
        assert_eq!(report.checked, 18);
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut store = ParamStore::new();
        let w = store.add("w", Matrix::row_vector(vec![1.0, 2.0]));
        let mut grads = Gradients::zeros_like(&store);
        let mut tape = Tape::new(&store);
        let vw = tape.param(w);
        let zero = tape.scale(vw, 0.0);
        let c = tape.affine(zero, 1.0, 3.0);
        let l = tape.sum_all(c);
        tape.backward(l, &mut grads);
        assert!(grads.get(w).as_slice().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
