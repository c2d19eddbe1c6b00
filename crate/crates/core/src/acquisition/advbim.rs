use ndarray::{Array1, ArrayView1};

use crate::error::Result;
use crate::models::{variance_gradient_wrt_input, EnsembleMlp};

/// Basic iterative method on the ensemble variance: `steps` signed-gradient
/// ascent steps of size `gamma * |t| / steps`, each followed by projection
/// of the displacement onto the ball of radius `gamma * |t|` around `t`.
pub fn adversarial_perturb(model: &EnsembleMlp, t: ArrayView1<f64>, gamma: f64, steps: usize) -> Result<Array1<f64>> {
    let radius = gamma * t.dot(&t).sqrt();
    let mut point = t.to_owned();
    if steps == 0 || radius == 0.0 {
        return Ok(point);
    }
    let step = radius / steps as f64;
    for _ in 0..steps {
        let grad = variance_gradient_wrt_input(model, point.view())?;
        point.zip_mut_with(&grad, |p, g| {
            if *g != 0.0 {
                *p += step * g.signum();
            }
        });
        let mut delta = &point - &t;
        let norm = delta.dot(&delta).sqrt();
        if norm > radius {
            delta *= radius / norm;
            point = &t + &delta;
        }
    }
    Ok(point)
}
