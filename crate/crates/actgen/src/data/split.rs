//! Video-level cross-validation splits. Segments never straddle folds;
//! fold sizes differ by at most one video.

use super::{DataError, Dataset, Result};
use crate::numerics::RngState;

/// Partition the dataset's videos into `folds` groups, deterministic in
/// `seed`. Returns the video ids per fold.
pub fn split_dataset(ds: &Dataset, folds: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if folds < 2 {
        return Err(DataError::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut videos = ds.video_ids();
    if videos.len() < folds {
        return Err(DataError::Config(format!(
            "cannot split {} videos into {folds} folds",
            videos.len()
        )));
    }
    let mut rng = RngState::new(seed).derive(0xf01d);
    rng.shuffle(&mut videos);
    let base = videos.len() / folds;
    let rem = videos.len() % folds;
    let mut out = Vec::with_capacity(folds);
    let mut it = videos.into_iter();
    for f in 0..folds {
        let size = base + usize::from(f < rem);
        out.push(it.by_ref().take(size).collect());
    }
    Ok(out)
}

/// Materialize the sub-dataset containing exactly the given videos.
pub fn materialize_fold(ds: &Dataset, videos: &[String]) -> Dataset {
    let mut records = Vec::new();
    let mut features = Vec::new();
    for (r, f) in ds.records.iter().zip(&ds.features) {
        if videos.contains(&r.video_id) {
            records.push(r.clone());
            features.push(f.clone());
        }
    }
    Dataset {
        header: ds.header.clone(),
        records,
        features,
    }
}
