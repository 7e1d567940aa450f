use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use super::{stream_rng, Batch, Task, PROBE_STREAM};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images and labels read from a pair of IDX files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxDataset {
    /// Row-major pixels, `count * rows * cols` bytes.
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        let chunk = self.bytes.get(self.offset..end).ok_or_else(|| Error::Parse {
            offset: self.offset as u64,
            message: format!("truncated while reading {what}"),
        })?;
        self.offset = end;
        Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let at = self.offset as u64;
        let magic = self.u32_be("magic number")?;
        if magic != expected {
            return Err(Error::Parse {
                offset: at,
                message: format!("bad magic number {magic:#010x}, expected {expected:#010x}"),
            });
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.offset;
        if available < len {
            return Err(Error::Parse {
                offset: self.bytes.len() as u64,
                message: format!("truncated payload: expected {len} bytes, found {available}"),
            });
        }
        let data = &self.bytes[self.offset..self.offset + len];
        self.offset += len;
        Ok(data)
    }
}

/// Parses an IDX image file, returning `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut r = Reader { bytes, offset: 0 };
    r.magic(IMAGE_MAGIC)?;
    let count = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    let len = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| Error::Parse { offset: 4, message: "image dimensions overflow".into() })?;
    let pixels = r.payload(len)?.to_vec();
    Ok((count, rows, cols, pixels))
}

/// Parses an IDX label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, offset: 0 };
    r.magic(LABEL_MAGIC)?;
    let count = r.u32_be("label count")? as usize;
    Ok(r.payload(count)?.to_vec())
}

pub fn load_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<IdxDataset> {
    let (count, rows, cols, images) = parse_idx_images(&std::fs::read(image_path)?)?;
    let labels = parse_idx_labels(&std::fs::read(label_path)?)?;
    IdxDataset::new(images, labels, count, rows, cols)
}

impl IdxDataset {
    pub fn new(images: Vec<u8>, labels: Vec<u8>, count: usize, rows: usize, cols: usize) -> Result<Self> {
        if labels.len() != count {
            return Err(Error::Validation(format!(
                "{count} images but {} labels",
                labels.len()
            )));
        }
        if images.len() != count * rows * cols {
            return Err(Error::Validation("pixel buffer does not match header dimensions".into()));
        }
        Ok(Self { images, labels, count, rows, cols })
    }

    /// Flattened input dimension `rows * cols`.
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn pixels(&self, index: usize) -> &[u8] {
        let d = self.dim();
        &self.images[index * d..(index + 1) * d]
    }

    /// Pixels of one image mapped to `[0, 1]`.
    pub fn scaled(&self, index: usize) -> Vec<f64> {
        self.pixels(index).iter().map(|&p| p as f64 / 255.0).collect()
    }
}

/// Classification stream over an IDX dataset. Examples are drawn uniformly with
/// replacement, since a finite file cannot supply a repetition-free stream.
#[derive(Clone, Debug)]
pub struct IdxTask {
    data: IdxDataset,
    classes: usize,
    seed: u64,
}

impl IdxTask {
    pub fn new(data: IdxDataset, seed: u64) -> Result<Self> {
        if data.count == 0 || data.dim() == 0 {
            return Err(Error::Config("IDX dataset is empty".into()));
        }
        let classes = data.labels.iter().copied().max().unwrap_or(0) as usize + 1;
        Ok(Self { data, classes: classes.max(2), seed })
    }

    fn draw(&self, size: usize, stream: u64, step: u64) -> Batch {
        let mut rng = stream_rng(self.seed, stream);
        let dim = self.data.dim();
        let mut inputs = DMatrix::zeros(dim, size);
        let mut targets = DMatrix::zeros(self.classes, size);
        for j in 0..size {
            let index = rng.random_range(0..self.data.count);
            for (i, p) in self.data.pixels(index).iter().enumerate() {
                inputs[(i, j)] = *p as f64 / 255.0;
            }
            targets[(self.data.labels[index] as usize, j)] = 1.0;
        }
        Batch { inputs, targets, step }
    }
}

impl Task for IdxTask {
    fn input_dim(&self) -> usize {
        self.data.dim()
    }

    fn output_dim(&self) -> usize {
        self.classes
    }

    fn is_classification(&self) -> bool {
        true
    }

    fn next_batch(&self, size: usize, step: u64) -> Batch {
        self.draw(size, step, step)
    }

    fn probe(&self, size: usize) -> Batch {
        self.draw(size, PROBE_STREAM, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_fixture() -> Vec<u8> {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend_from_slice(&[0, 51, 102, 255, 10, 20, 30, 40]);
        bytes
    }

    fn label_fixture() -> Vec<u8> {
        vec![0, 0, 8, 1, 0, 0, 0, 2, 7, 3]
    }

    #[test]
    fn parses_handcrafted_fixture_exactly() {
        let (count, rows, cols, pixels) = parse_idx_images(&image_fixture()).unwrap();
        assert_eq!((count, rows, cols), (2, 2, 2));
        assert_eq!(pixels, vec![0, 51, 102, 255, 10, 20, 30, 40]);
        let labels = parse_idx_labels(&label_fixture()).unwrap();
        let data = IdxDataset::new(pixels, labels, count, rows, cols).unwrap();
        assert_eq!(data.pixels(1), &[10, 20, 30, 40]);
        assert_eq!(data.scaled(0), vec![0.0, 0.2, 0.4, 1.0]);
        assert_eq!(data.labels, vec![7, 3]);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut bytes = image_fixture();
        bytes.truncate(19);
        match parse_idx_images(&bytes).unwrap_err() {
            Error::Parse { offset, message } => {
                assert_eq!(offset, 19);
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_header_reports_offset() {
        let bytes = &image_fixture()[..10];
        match parse_idx_images(bytes).unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        match parse_idx_images(&label_fixture()).unwrap_err() {
            Error::Parse { offset, message } => {
                assert_eq!(offset, 0);
                assert!(message.contains("magic"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_a_validation_error() {
        let (count, rows, cols, pixels) = parse_idx_images(&image_fixture()).unwrap();
        let err = IdxDataset::new(pixels, vec![1], count, rows, cols).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn loads_from_disk_and_streams_batches() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img.idx");
        let lbl = dir.path().join("lbl.idx");
        std::fs::write(&img, image_fixture()).unwrap();
        std::fs::write(&lbl, label_fixture()).unwrap();
        let data = load_idx(&img, &lbl).unwrap();
        let task = IdxTask::new(data, 1).unwrap();
        assert_eq!(task.input_dim(), 4);
        assert_eq!(task.output_dim(), 8);
        let batch = task.next_batch(16, 0);
        batch.check_one_hot().unwrap();
        assert!(batch.inputs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}
