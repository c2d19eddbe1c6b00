use disco_core::acquisition::{tempered_softmax, tempered_softmax_without_replacement};

fn check(scores: &[f64], temperature: f64) -> Result<(), String> {
    if scores.is_empty() {
        return Err("no scores".into());
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err("scores must be finite".into());
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(format!("temperature must be positive, got {temperature}"));
    }
    Ok(())
}

pub(crate) fn probabilities(scores: &[f64], temperature: f64) -> Result<Vec<f64>, String> {
    check(scores, temperature)?;
    Ok(tempered_softmax(scores, temperature))
}

pub fn sample_batch(scores: &[f64], temperature: f64, b: usize, seed: u64) -> Result<Vec<usize>, String> {
    check(scores, temperature)?;
    Ok(tempered_softmax_without_replacement(scores, temperature, b, seed))
}

pub fn inclusion_frequencies(
    scores: &[f64],
    temperature: f64,
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    check(scores, temperature)?;
    if trials == 0 {
        return Err("trials must be >= 1".into());
    }
    let mut counts = vec![0usize; scores.len()];
    for t in 0..trials as u64 {
        for i in tempered_softmax_without_replacement(scores, temperature, b, seed.wrapping_add(t)) {
            counts[i] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / trials as f64).collect())
}
