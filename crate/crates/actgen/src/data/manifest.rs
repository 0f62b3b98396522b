//! On-disk dataset format. A dataset directory holds `manifest.jsonl`
//! (header line followed by one record per line) and a `feats/`
//! directory of shape-prefixed little-endian f64 feature files.

use super::{
    DataError, Dataset, DatasetHeader, FeatureBundle, Result, SegmentRecord, SCHEMA_VERSION,
};
use crate::numerics::Matrix;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const FEAT_MAGIC: &[u8; 4] = b"AVFT";
const FEAT_VERSION: u32 = 1;

/// Write a dataset directory: `manifest.jsonl` plus one `.feat` file per
/// segment. Deterministic byte-for-byte given the same dataset.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    let feats = dir.join("feats");
    fs::create_dir_all(&feats)?;
    let mut out = BufWriter::new(fs::File::create(dir.join("manifest.jsonl"))?);
    serde_json::to_writer(&mut out, &ds.header).map_err(|e| DataError::Schema(e.to_string()))?;
    out.write_all(b"\n")?;
    for (r, f) in ds.records.iter().zip(&ds.features) {
        let name = format!("feats/{}_{:04}.feat", r.video_id, r.segment_index);
        write_feature_file(&dir.join(&name), f)?;
        let mut rec = r.clone();
        rec.feature_ref = Some(name);
        serde_json::to_writer(&mut out, &rec).map_err(|e| DataError::Schema(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Load a dataset directory written by [`write_dataset`] (or produced
/// externally to the same schema).
pub fn load_manifest(dir: &Path) -> Result<Dataset> {
    let manifest = dir.join("manifest.jsonl");
    if !manifest.exists() {
        return Err(DataError::MissingFile {
            path: manifest.display().to_string(),
        });
    }
    let reader = BufReader::new(fs::File::open(&manifest)?);
    let mut lines = reader.lines().enumerate();
    let header: DatasetHeader = match lines.next() {
        Some((_, Ok(line))) => serde_json::from_str(&line).map_err(|e| DataError::Parse {
            line: 1,
            msg: e.to_string(),
        })?,
        _ => {
            return Err(DataError::Parse {
                line: 1,
                msg: "empty manifest".into(),
            })
        }
    };
    if header.schema_version != SCHEMA_VERSION {
        return Err(DataError::Schema(format!(
            "unsupported schema version {} (expected {})",
            header.schema_version, SCHEMA_VERSION
        )));
    }
    let mut records = Vec::new();
    let mut features = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SegmentRecord = serde_json::from_str(&line).map_err(|e| DataError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let ref_name = rec.feature_ref.clone().ok_or_else(|| DataError::Parse {
            line: i + 1,
            msg: "record has no feature_ref".into(),
        })?;
        let path = dir.join(&ref_name);
        if !path.exists() {
            return Err(DataError::MissingFile {
                path: path.display().to_string(),
            });
        }
        features.push(read_feature_file(&path)?);
        records.push(rec);
    }
    let ds = Dataset {
        header,
        records,
        features,
    };
    ds.validate()?;
    Ok(ds)
}

fn write_matrix(w: &mut impl Write, m: &Matrix) -> Result<()> {
    w.write_all(&(m.rows as u32).to_le_bytes())?;
    w.write_all(&(m.cols as u32).to_le_bytes())?;
    for v in &m.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_matrix(r: &mut impl Read) -> Result<Matrix> {
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let rows = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let cols = u32::from_le_bytes(b4) as usize;
    let mut data = vec![0.0; rows * cols];
    let mut b8 = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok(Matrix { rows, cols, data })
}

fn write_feature_file(path: &Path, f: &FeatureBundle) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(FEAT_MAGIC)?;
    w.write_all(&FEAT_VERSION.to_le_bytes())?;
    w.write_all(&[if f.x_t.is_some() { 3 } else { 2 }])?;
    write_matrix(&mut w, &f.x_a)?;
    write_matrix(&mut w, &f.x_v)?;
    if let Some(t) = &f.x_t {
        write_matrix(&mut w, t)?;
    }
    w.flush()?;
    Ok(())
}

fn read_feature_file(path: &Path) -> Result<FeatureBundle> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FEAT_MAGIC {
        return Err(DataError::Schema(format!(
            "{}: bad feature-file magic",
            path.display()
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FEAT_VERSION {
        return Err(DataError::Schema(format!(
            "{}: unsupported feature-file version {version}",
            path.display()
        )));
    }
    let mut count = [0u8; 1];
    r.read_exact(&mut count)?;
    let x_a = read_matrix(&mut r)?;
    let x_v = read_matrix(&mut r)?;
    let x_t = if count[0] == 3 {
        Some(read_matrix(&mut r)?)
    } else {
        None
    };
    Ok(FeatureBundle { x_a, x_v, x_t })
}
