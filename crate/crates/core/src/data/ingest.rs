//! PNG frame-sequence ingestion.

use crate::types::{Frame, VideoClip};
use crate::{Error, Result, Scalar};
use image::imageops::FilterType;
use ndarray::Array3;
use std::path::Path;

/// Loads an ordered PNG sequence from a directory, resizing every frame to
/// `height`×`width` with bilinear resampling and scaling intensities to
/// `[0, 1]`. Filenames must sort lexicographically into frame order
/// (zero-padded numeric names).
pub fn ingest_video<S: Scalar>(dir: &Path, height: usize, width: usize) -> Result<VideoClip<S>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Ingestion {
            path: dir.to_path_buf(),
            reason: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::Ingestion {
            path: dir.to_path_buf(),
            reason: "no PNG frames found".into(),
        });
    }
    paths.sort();

    let scale = S::of(1.0 / 255.0);
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let img = image::open(p)
            .map_err(|e| Error::Ingestion {
                path: p.clone(),
                reason: e.to_string(),
            })?
            .resize_exact(width as u32, height as u32, FilterType::Triangle)
            .to_rgb8();
        let mut px = Array3::zeros((height, width, 3));
        for (x, y, pixel) in img.enumerate_pixels() {
            for c in 0..3 {
                px[[y as usize, x as usize, c]] = S::of(pixel.0[c] as f64) * scale;
            }
        }
        frames.push(Frame::new(px)?);
    }
    VideoClip::new(frames, None)
}

/// Writes a frame as an 8-bit PNG.
pub fn write_frame_png<S: Scalar>(frame: &Frame<S>, path: &Path) -> Result<()> {
    let (h, w) = (frame.height(), frame.width());
    let mut img = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let px = [0, 1, 2].map(|c| {
                (frame.pixels()[[y, x, c]].to_f64c() * 255.0).round().clamp(0.0, 255.0) as u8
            });
            img.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    img.save(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
