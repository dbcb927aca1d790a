//! "FSV1" checkpoint container: a model-kind tag, a key=value configuration
//! block and named f32 tensors with explicit shapes, all little-endian.
//! Round trips are bitwise for f32 parameters.

use crate::flow2rgb::{Flow2Rgb, Flow2RgbConfig};
use crate::vae::{FlowVae, FlowVaeConfig};
use crate::{Error, Result, Scalar};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"FSV1";
pub const KIND_FLOW_VAE: &str = "flow_vae";
pub const KIND_FLOW2RGB: &str = "flow2rgb";

/// In-memory form of the container.
pub struct Checkpoint {
    pub kind: String,
    pub config: Vec<(String, String)>,
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    if len > 1 << 20 {
        return Err(Error::Format("implausible string length".into()));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("invalid utf-8 in checkpoint".into()))
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        write_str(&mut w, &self.kind)?;
        w.write_u32::<LittleEndian>(self.config.len() as u32)?;
        for (k, v) in &self.config {
            write_str(&mut w, k)?;
            write_str(&mut w, v)?;
        }
        w.write_u32::<LittleEndian>(self.tensors.len() as u32)?;
        for (name, shape, data) in &self.tensors {
            write_str(&mut w, name)?;
            w.write_u32::<LittleEndian>(shape.len() as u32)?;
            for &d in shape {
                w.write_u32::<LittleEndian>(d as u32)?;
            }
            for &v in data {
                w.write_f32::<LittleEndian>(v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "{}: bad checkpoint magic {magic:?}",
                path.display()
            )));
        }
        let kind = read_str(&mut r)?;
        let n_cfg = r.read_u32::<LittleEndian>()? as usize;
        let mut config = Vec::with_capacity(n_cfg);
        for _ in 0..n_cfg {
            let k = read_str(&mut r)?;
            let v = read_str(&mut r)?;
            config.push((k, v));
        }
        let n_t = r.read_u32::<LittleEndian>()? as usize;
        let mut tensors = Vec::with_capacity(n_t);
        for _ in 0..n_t {
            let name = read_str(&mut r)?;
            let nd = r.read_u32::<LittleEndian>()? as usize;
            let mut shape = Vec::with_capacity(nd);
            for _ in 0..nd {
                shape.push(r.read_u32::<LittleEndian>()? as usize);
            }
            let len: usize = shape.iter().product();
            let mut data = vec![0f32; len];
            r.read_f32_into::<LittleEndian>(&mut data)
                .map_err(|_| Error::Format(format!("{}: truncated tensor", path.display())))?;
            tensors.push((name, shape, data));
        }
        Ok(Self {
            kind,
            config,
            tensors,
        })
    }

    pub fn config_value(&self, key: &str) -> Result<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("checkpoint missing config key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.config_value(key)?
            .parse()
            .map_err(|_| Error::Format(format!("checkpoint config '{key}' unparsable")))
    }
}

fn collect_tensors<S: Scalar>(params: &[&crate::nn::Param<S>]) -> Vec<(String, Vec<usize>, Vec<f32>)> {
    params
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                p.w.shape().to_vec(),
                p.w.iter().map(|&v| v.to_f64c() as f32).collect(),
            )
        })
        .collect()
}

fn restore_tensors<S: Scalar>(
    params: &mut [&mut crate::nn::Param<S>],
    tensors: &[(String, Vec<usize>, Vec<f32>)],
) -> Result<()> {
    if params.len() != tensors.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} tensors, model expects {}",
            tensors.len(),
            params.len()
        )));
    }
    for (p, (name, shape, data)) in params.iter_mut().zip(tensors) {
        if &p.name != name || p.w.shape() != shape.as_slice() {
            return Err(Error::Format(format!(
                "tensor mismatch: model {} {:?} vs checkpoint {} {:?}",
                p.name,
                p.w.shape(),
                name,
                shape
            )));
        }
        for (w, &v) in p.w.iter_mut().zip(data) {
            *w = S::of(v as f64);
        }
    }
    Ok(())
}

pub fn save_flow_vae<S: Scalar>(model: &FlowVae<S>, path: &Path) -> Result<()> {
    let c = model.config();
    let ckpt = Checkpoint {
        kind: KIND_FLOW_VAE.into(),
        config: vec![
            ("m".into(), c.m.to_string()),
            ("height".into(), c.height.to_string()),
            ("width".into(), c.width.to_string()),
            ("latent_dim".into(), c.latent_dim.to_string()),
            ("max_disp".into(), c.max_disp.to_string()),
            ("channel_scale".into(), c.channel_scale.to_string()),
        ],
        tensors: collect_tensors(&model.params()),
    };
    ckpt.write(path)
}

pub fn load_flow_vae<S: Scalar>(path: &Path) -> Result<FlowVae<S>> {
    let ckpt = Checkpoint::read(path)?;
    if ckpt.kind != KIND_FLOW_VAE {
        return Err(Error::Format(format!(
            "expected {KIND_FLOW_VAE} checkpoint, found '{}'",
            ckpt.kind
        )));
    }
    let cfg = FlowVaeConfig {
        m: ckpt.parse("m")?,
        height: ckpt.parse("height")?,
        width: ckpt.parse("width")?,
        latent_dim: ckpt.parse("latent_dim")?,
        max_disp: ckpt.parse("max_disp")?,
        channel_scale: ckpt.parse("channel_scale")?,
    };
    let mut model = FlowVae::new(cfg, 0)?;
    restore_tensors(&mut model.params_mut(), &ckpt.tensors)?;
    Ok(model)
}

pub fn save_flow2rgb<S: Scalar>(model: &Flow2Rgb<S>, path: &Path) -> Result<()> {
    let c = model.config();
    let join = |v: &[usize]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let ckpt = Checkpoint {
        kind: KIND_FLOW2RGB.into(),
        config: vec![
            ("widths".into(), join(&c.widths)),
            ("convs_per_stage".into(), join(&c.convs_per_stage)),
            ("max_disp".into(), c.max_disp.to_string()),
        ],
        tensors: collect_tensors(&model.params()),
    };
    ckpt.write(path)
}

pub fn load_flow2rgb<S: Scalar>(path: &Path) -> Result<Flow2Rgb<S>> {
    let ckpt = Checkpoint::read(path)?;
    if ckpt.kind != KIND_FLOW2RGB {
        return Err(Error::Format(format!(
            "expected {KIND_FLOW2RGB} checkpoint, found '{}'",
            ckpt.kind
        )));
    }
    let split = |s: &str| -> Result<Vec<usize>> {
        s.split(',')
            .map(|x| {
                x.parse()
                    .map_err(|_| Error::Format("unparsable width list".into()))
            })
            .collect()
    };
    let cfg = Flow2RgbConfig {
        widths: split(ckpt.config_value("widths")?)?,
        convs_per_stage: split(ckpt.config_value("convs_per_stage")?)?,
        max_disp: ckpt.parse("max_disp")?,
    };
    let mut model = Flow2Rgb::new(cfg, 0)?;
    restore_tensors(&mut model.params_mut(), &ckpt.tensors)?;
    Ok(model)
}
