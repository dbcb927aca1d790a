//! File-layout helpers shared by the subcommands.

use crate::config::{CliError, CliResult};
use image::codecs::gif::{GifEncoder, Repeat};
use image::{Delay, Rgba, RgbaImage};
use std::path::{Path, PathBuf};
use stillflow_core::data::{ingest_video, read_flo, write_flo, write_frame_png};
use stillflow_core::types::{FlowField, FlowVolume, Frame, VideoClip};
use stillflow_core::Real;

pub fn load_frame(path: &Path) -> CliResult<Frame<Real>> {
    let img = image::open(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut px = ndarray::Array3::<Real>::zeros((h, w, 3));
    for y in 0..h {
        for x in 0..w {
            let p = img.get_pixel(x as u32, y as u32);
            for c in 0..3 {
                px[[y, x, c]] = p.0[c] as Real / 255.0;
            }
        }
    }
    Ok(Frame::new(px)?)
}

fn sorted_files(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map_or(false, |x| x.eq_ignore_ascii_case(ext))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Runtime(format!(
            "no .{ext} files in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

pub fn load_frames_dir(dir: &Path) -> CliResult<Vec<Frame<Real>>> {
    let first = &sorted_files(dir, "png")?[0];
    let (w, h) = image::image_dimensions(first)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", first.display())))?;
    let clip: VideoClip<Real> = ingest_video(dir, h as usize, w as usize)?;
    Ok(clip.frames().to_vec())
}

pub fn load_flows_dir(dir: &Path) -> CliResult<Vec<FlowField<Real>>> {
    sorted_files(dir, "flo")?
        .iter()
        .map(|p| read_flo(p).map_err(CliError::from))
        .collect()
}

/// Loads a training corpus: each subdirectory of `root` is one clip holding
/// `frames/*.png` and `flows/*.flo`; `root` itself may also be a single clip.
pub fn load_clipset(root: &Path) -> CliResult<Vec<(VideoClip<Real>, FlowVolume<Real>)>> {
    let mut clip_dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("frames").is_dir())
        .collect();
    clip_dirs.sort();
    if clip_dirs.is_empty() && root.join("frames").is_dir() {
        clip_dirs.push(root.to_path_buf());
    }
    if clip_dirs.is_empty() {
        return Err(CliError::Runtime(format!(
            "{}: no clip directories (expected subdirs with frames/ and flows/)",
            root.display()
        )));
    }
    clip_dirs
        .iter()
        .map(|d| {
            let frames = load_frames_dir(&d.join("frames"))?;
            let flows = load_flows_dir(&d.join("flows"))?;
            Ok((
                VideoClip::new(frames, None)?,
                FlowVolume::new(flows)?,
            ))
        })
        .collect()
}

pub fn write_frames(frames: &[Frame<Real>], dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for (i, f) in frames.iter().enumerate() {
        write_frame_png(f, &dir.join(format!("{i:03}.png")))?;
    }
    Ok(())
}

pub fn write_flows(flows: &[FlowField<Real>], dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for (i, f) in flows.iter().enumerate() {
        write_flo(f, &dir.join(format!("{i:03}.flo")))?;
    }
    Ok(())
}

/// Animated GIF with a fixed inter-frame delay; frame count is preserved.
pub fn export_gif(frames: &[Frame<Real>], path: &Path, delay_ms: u32) -> CliResult<()> {
    if frames.is_empty() {
        return Err(CliError::Runtime("gif export needs at least one frame".into()));
    }
    if delay_ms == 0 {
        return Err(CliError::Config("gif delay must be positive".into()));
    }
    let file = std::fs::File::create(path)?;
    let mut enc = GifEncoder::new(file);
    enc.set_repeat(Repeat::Infinite)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for f in frames {
        let (h, w) = (f.height(), f.width());
        let mut img = RgbaImage::new(w as u32, h as u32);
        for y in 0..h {
            for x in 0..w {
                let px = [0, 1, 2].map(|c| {
                    (f.pixels()[[y, x, c]] as f64 * 255.0).round().clamp(0.0, 255.0) as u8
                });
                img.put_pixel(x as u32, y as u32, Rgba([px[0], px[1], px[2], 255]));
            }
        }
        let gf = image::Frame::from_parts(img, 0, 0, Delay::from_numer_denom_ms(delay_ms, 1));
        enc.encode_frame(gf)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

pub fn write_run_log(out: &Path, command: &str, resolved: &str) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(
        out.join("run.log"),
        format!("command = {command}\n{resolved}"),
    )?;
    Ok(())
}
