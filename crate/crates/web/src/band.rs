use disco_core::acquisition::bald_scores;
use disco_core::models::{predict_ensemble, train_mlp_ensemble, MlpConfig};
use ndarray::{Array1, Array2};

/// Ensemble settings for the band view; smaller than the library defaults so
/// a refit stays interactive.
#[derive(Debug, Clone)]
pub struct BandConfig {
    pub ensemble_size: usize,
    pub hidden_grid: Vec<usize>,
    pub max_epochs: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 6,
            hidden_grid: vec![16, 32],
            max_epochs: 200,
        }
    }
}

/// `[mean, sd, bald]` of the fitted ensemble at every grid point.
pub fn ensemble_band(
    xs: &[f64],
    ys: &[f64],
    grid: &[f64],
    cfg: &BandConfig,
    seed: u64,
) -> Result<Vec<[f64; 3]>, String> {
    if xs.len() != ys.len() {
        return Err(format!("{} x values but {} y values", xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).chain(grid).any(|v| !v.is_finite()) {
        return Err("inputs must be finite".into());
    }
    let mlp = MlpConfig {
        ensemble_size: cfg.ensemble_size,
        hidden_grid: cfg.hidden_grid.clone(),
        max_epochs: cfg.max_epochs,
        batch_size: 8,
        patience: 20,
        ..MlpConfig::default()
    };
    let x = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).map_err(|e| e.to_string())?;
    let y = Array1::from(ys.to_vec());
    let model = train_mlp_ensemble(x.view(), y.view(), &mlp, seed).map_err(|e| e.to_string())?;
    let g = Array2::from_shape_vec((grid.len(), 1), grid.to_vec()).map_err(|e| e.to_string())?;
    let out = predict_ensemble(&model, g.view()).map_err(|e| e.to_string())?;
    let bald = bald_scores(&out).values;
    Ok((0..grid.len())
        .map(|i| [out.mean()[i], out.variance()[i].sqrt(), bald[i]])
        .collect())
}
