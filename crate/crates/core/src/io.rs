//! Small file helpers shared by the CLI and tests.

use crate::Result;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

/// Open a buffered writer, creating parent directories as needed.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Inclusive-of-lo grid `lo, lo+step, ...` up to `hi`; the endpoint is kept
/// when it lands on the grid up to float rounding.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive_of_lo_and_respects_hi() {
        let g = grid(0.0, 1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = grid(1.0, 1.0, 0.5);
        assert_eq!(g, vec![1.0]);
        let g = grid(0.0, 0.9, 0.25);
        assert_eq!(g.len(), 4);
    }
}
