use std::str::FromStr;

use disco_core::acquisition::{
    farthest_first, kmeanspp_seed, lloyd_kmeans, nearest_unique_mapping, uniform_without_replacement,
};
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Coreset,
    KMeansPP,
    KMeansData,
    Random,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coreset" => Ok(Self::Coreset),
            "kmeanspp" => Ok(Self::KMeansPP),
            "kmeansdata" => Ok(Self::KMeansData),
            "random" => Ok(Self::Random),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

fn pairs(flat: &[f64], what: &str) -> Result<Array2<f64>, String> {
    if !flat.len().is_multiple_of(2) {
        return Err(format!("{what} must hold x, y pairs"));
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(format!("{what} must be finite"));
    }
    Array2::from_shape_vec((flat.len() / 2, 2), flat.to_vec()).map_err(|e| e.to_string())
}

/// Indices into `points` picked by `method`. Anchors only affect coreset.
pub fn select_2d(points: &[f64], anchors: &[f64], method: Method, b: usize, seed: u64) -> Result<Vec<usize>, String> {
    let pts = pairs(points, "points")?;
    let anc = pairs(anchors, "anchors")?;
    if pts.nrows() == 0 {
        return Err("no points".into());
    }
    let b = b.min(pts.nrows());
    Ok(match method {
        Method::Coreset => farthest_first(pts.view(), anc.view(), b),
        Method::KMeansPP => kmeanspp_seed(pts.view(), b, seed),
        Method::KMeansData => {
            let km = lloyd_kmeans(pts.view(), b, seed, 300, 1e-4);
            nearest_unique_mapping(km.centroids.view(), pts.view())
        }
        Method::Random => uniform_without_replacement(pts.nrows(), b, seed),
    })
}
