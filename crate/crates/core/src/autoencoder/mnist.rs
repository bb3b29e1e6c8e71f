use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Result, SrmError};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images as rows rescaled to `[-1, 1]`, with their digit labels.
#[derive(Debug, Clone)]
pub struct MnistData {
    pub images: DMatrix<f64>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl MnistData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Samples whose label is in `digits`, in file order.
    pub fn filter_labels(&self, digits: &[u8]) -> MnistData {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| digits.contains(&self.labels[i]))
            .collect();
        MnistData {
            images: DMatrix::from_fn(keep.len(), self.images.ncols(), |r, c| {
                self.images[(keep[r], c)]
            }),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }
}

/// `p ↦ p/127.5 − 1`.
pub fn rescale_pixel(p: u8) -> f64 {
    p as f64 / 127.5 - 1.0
}

/// Inverse of [`rescale_pixel`].
pub fn unscale_pixel(x: f64) -> u8 {
    ((x + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

fn header(bytes: &[u8], magic: u32, dims: usize, what: &str) -> Result<Vec<usize>> {
    let need = 4 * (1 + dims);
    if bytes.len() < need {
        return Err(SrmError::TruncatedFile(format!("{what}: header shorter than {need} bytes")));
    }
    let mut cur = Cursor::new(bytes);
    let found = cur.read_u32::<BigEndian>()?;
    if found != magic {
        return Err(SrmError::BadMagic {
            expected: magic,
            found,
        });
    }
    (0..dims)
        .map(|_| Ok(cur.read_u32::<BigEndian>()? as usize))
        .collect()
}

/// Parses an IDX image/label file pair. `limit` keeps only the first
/// samples.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path, limit: Option<usize>) -> Result<MnistData> {
    parse_mnist_idx(&fs::read(images_path)?, &fs::read(labels_path)?, limit)
}

pub fn parse_mnist_idx(images: &[u8], labels: &[u8], limit: Option<usize>) -> Result<MnistData> {
    let dims = header(images, IMAGE_MAGIC, 3, "images")?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let label_count = header(labels, LABEL_MAGIC, 1, "labels")?[0];
    if count != label_count {
        return Err(SrmError::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let pixels = rows * cols;
    let image_body = &images[16..];
    let label_body = &labels[8..];
    if image_body.len() < count * pixels {
        return Err(SrmError::TruncatedFile(format!(
            "images: expected {} pixel bytes, found {}",
            count * pixels,
            image_body.len()
        )));
    }
    if label_body.len() < count {
        return Err(SrmError::TruncatedFile(format!(
            "labels: expected {count} bytes, found {}",
            label_body.len()
        )));
    }
    let take = limit.map_or(count, |l| l.min(count));
    let images = DMatrix::from_fn(take, pixels, |r, c| rescale_pixel(image_body[r * pixels + c]));
    Ok(MnistData {
        images,
        labels: label_body[..take].to_vec(),
        rows,
        cols,
    })
}

/// Gaussian mixture around `clusters` random unit directions with isotropic
/// noise `σ = 0.05`.
pub fn synthetic_dataset(n_dims: usize, clusters: usize, samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    if clusters == 0 || n_dims == 0 {
        return Err(SrmError::InvalidInput("need clusters >= 1 and n_dims >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| loop {
            let v: Vec<f64> = (0..n_dims).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    Ok(synthetic_around(&centers, samples, 0.05, &mut rng))
}

/// Samples scattered around the given centres with isotropic Gaussian
/// noise of standard deviation `noise`.
pub fn synthetic_around<R: Rng>(centers: &[Vec<f64>], samples: usize, noise: f64, rng: &mut R) -> DMatrix<f64> {
    let n = centers[0].len();
    let normal = Normal::new(0.0, noise.max(0.0)).expect("noise is finite");
    let mut data = DMatrix::zeros(samples, n);
    for r in 0..samples {
        let c = &centers[rng.random_range(0..centers.len())];
        for k in 0..n {
            data[(r, k)] = c[k] + normal.sample(rng);
        }
    }
    data
}
