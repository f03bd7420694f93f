//! Binary policy checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field          | type                                         |
//! |----------------|----------------------------------------------|
//! | magic          | `b"CCGF"` (float) or `b"CCGQ"` (int8)        |
//! | version        | u32                                          |
//! | feature_count  | u32                                          |
//! | feature codes  | u8 × feature_count                           |
//! | scale table    | f32 × 5, int8 files only                     |
//! | tensors        | declaration order: w1 b1 w2 b2 wx wh bl w3 b3 |
//!
//! Float files store every tensor as f32. Int8 files store the five weight
//! matrices as i8 and the biases as f32; the scale table lists the weight
//! scales in the same order.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use ccgym_core::policy::{Feature, Layout, ObsConfig, PolicyParams, QTensor, QuantizedPolicy, TensorSpec};

pub const MAGIC_FLOAT: [u8; 4] = *b"CCGF";
pub const MAGIC_INT8: [u8; 4] = *b"CCGQ";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Float { obs: ObsConfig, params: PolicyParams },
    Int8 { obs: ObsConfig, policy: QuantizedPolicy },
}

impl Checkpoint {
    pub fn obs(&self) -> &ObsConfig {
        match self {
            Checkpoint::Float { obs, .. } | Checkpoint::Int8 { obs, .. } => obs,
        }
    }

    pub fn quantize(&self) -> Result<Checkpoint> {
        match self {
            Checkpoint::Float { obs, params } => Ok(Checkpoint::Int8 {
                obs: obs.clone(),
                policy: QuantizedPolicy::quantize(params)?,
            }),
            Checkpoint::Int8 { .. } => bail!("checkpoint is already quantized"),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let (magic, obs) = match self {
            Checkpoint::Float { obs, .. } => (MAGIC_FLOAT, obs),
            Checkpoint::Int8 { obs, .. } => (MAGIC_INT8, obs),
        };
        w.write_all(&magic)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(obs.features.len() as u32).to_le_bytes())?;
        w.write_all(&obs.features.iter().map(|f| f.code()).collect::<Vec<_>>())?;
        match self {
            Checkpoint::Float { params, .. } => write_f32s(w, &params.data)?,
            Checkpoint::Int8 { policy, .. } => {
                for t in policy.weights() {
                    w.write_all(&t.scale.to_le_bytes())?;
                }
                let p = policy;
                let qs = |w: &mut dyn Write, t: &QTensor| w.write_all(&t.data.iter().map(|&v| v as u8).collect::<Vec<_>>());
                qs(w, &p.w1)?;
                write_f32s(w, &p.b1)?;
                qs(w, &p.w2)?;
                write_f32s(w, &p.b2)?;
                qs(w, &p.wx)?;
                qs(w, &p.wh)?;
                write_f32s(w, &p.bl)?;
                qs(w, &p.w3)?;
                write_f32s(w, &p.b3)?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn from_bytes(mut b: &[u8]) -> Result<Checkpoint> {
        let r = &mut b;
        let magic: [u8; 4] = take(r, 4)?.try_into().unwrap();
        let version = u32::from_le_bytes(take(r, 4)?.try_into().unwrap());
        ensure!(version == VERSION, "unsupported checkpoint version {version}");
        let n = u32::from_le_bytes(take(r, 4)?.try_into().unwrap()) as usize;
        ensure!(n > 0 && n <= Feature::ALL.len() * 4, "implausible feature count {n}");
        let features = take(r, n)?
            .iter()
            .map(|&c| Feature::from_code(c).with_context(|| format!("unknown feature code {c}")))
            .collect::<Result<Vec<_>>>()?;
        let obs = ObsConfig { features };
        let layout = Layout::new(n);
        let ck = match magic {
            MAGIC_FLOAT => {
                let data = read_f32s(r, layout.total())?;
                Checkpoint::Float {
                    params: PolicyParams::from_data(n, data)?,
                    obs,
                }
            }
            MAGIC_INT8 => {
                let scales = read_f32s(r, 5)?;
                ensure!(scales.iter().all(|s| s.is_finite() && *s > 0.0), "bad scale table");
                let q = |r: &mut &[u8], t: TensorSpec, scale: f32| -> Result<QTensor> {
                    Ok(QTensor {
                        rows: t.rows,
                        cols: t.cols,
                        scale,
                        data: take(r, t.len())?.iter().map(|&v| v as i8).collect(),
                    })
                };
                let l = &layout;
                let w1 = q(r, l.w1, scales[0])?;
                let b1 = read_f32s(r, l.b1.len())?;
                let w2 = q(r, l.w2, scales[1])?;
                let b2 = read_f32s(r, l.b2.len())?;
                let wx = q(r, l.wx, scales[2])?;
                let wh = q(r, l.wh, scales[3])?;
                let bl = read_f32s(r, l.bl.len())?;
                let w3 = q(r, l.w3, scales[4])?;
                let b3 = read_f32s(r, l.b3.len())?;
                ensure!(
                    [&b1, &b2, &bl, &b3].iter().all(|b| b.iter().all(|v| v.is_finite())),
                    "non-finite bias in checkpoint"
                );
                Checkpoint::Int8 {
                    obs,
                    policy: QuantizedPolicy {
                        input: n,
                        w1,
                        b1,
                        w2,
                        b2,
                        wx,
                        wh,
                        bl,
                        w3,
                        b3,
                    },
                }
            }
            _ => bail!("not a checkpoint (bad magic)"),
        };
        ensure!(r.is_empty(), "{} trailing bytes after checkpoint", r.len());
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut b = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut b))
            .with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&b).with_context(|| format!("in {}", path.display()))
    }

    /// Human-readable shapes and norms.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let feats: Vec<&str> = self.obs().features.iter().map(|f| f.as_str()).collect();
        let names = ["w1", "b1", "w2", "b2", "wx", "wh", "bl", "w3", "b3"];
        match self {
            Checkpoint::Float { params, .. } => {
                out += &format!("float checkpoint, {} parameters\nfeatures: {}\n", params.len(), feats.join(", "));
                for (name, t) in names.iter().zip(params.layout.tensors()) {
                    out += &format!("{name:<3} {:>3} x {:<3} l2 {:.6}\n", t.rows, t.cols, params.l2_norm(t));
                }
            }
            Checkpoint::Int8 { policy, .. } => {
                out += &format!("int8 checkpoint\nfeatures: {}\n", feats.join(", "));
                let wnames = ["w1", "w2", "wx", "wh", "w3"];
                for (name, t) in wnames.iter().zip(policy.weights()) {
                    let l2 = t.dequantize().iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                    out += &format!("{name:<3} {:>3} x {:<3} scale {:.6e} l2 {:.6}\n", t.rows, t.cols, t.scale, l2);
                }
                for (name, b) in [("b1", &policy.b1), ("b2", &policy.b2), ("bl", &policy.bl), ("b3", &policy.b3)] {
                    let l2 = b.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                    out += &format!("{name:<3} {:>3} x 1   l2 {:.6}\n", b.len(), l2);
                }
            }
        }
        out
    }
}

fn take<'a>(r: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    ensure!(r.len() >= n, "checkpoint truncated");
    let (a, b) = r.split_at(n);
    *r = b;
    Ok(a)
}

fn read_f32s(r: &mut &[u8], n: usize) -> Result<Vec<f32>> {
    Ok(take(r, n * 4)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
}

fn write_f32s(w: &mut (impl Write + ?Sized), v: &[f32]) -> std::io::Result<()> {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    w.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn float_ckpt() -> Checkpoint {
        let obs = ObsConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        Checkpoint::Float {
            params: PolicyParams::init_uniform(obs.dim(), 0.3, &mut rng),
            obs,
        }
    }

    #[test]
    fn float_round_trip_is_exact() {
        let ck = float_ckpt();
        assert_eq!(Checkpoint::from_bytes(&ck.to_bytes()).unwrap(), ck);
    }

    #[test]
    fn int8_round_trip_is_exact() {
        let q = float_ckpt().quantize().unwrap();
        assert_eq!(Checkpoint::from_bytes(&q.to_bytes()).unwrap(), q);
    }

    #[test]
    fn header_layout() {
        let b = float_ckpt().to_bytes();
        assert_eq!(&b[..4], b"CCGF");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), VERSION);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 4);
        let total = Layout::new(4).total();
        assert_eq!(b.len(), 12 + 4 + 4 * total);
        let q = float_ckpt().quantize().unwrap().to_bytes();
        let biases = 32 + 16 + 64 + 1;
        assert_eq!(q.len(), 12 + 4 + 20 + (total - biases) + 4 * biases);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let b = float_ckpt().to_bytes();
        assert!(Checkpoint::from_bytes(&b[..b.len() - 1]).is_err());
        let mut longer = b.clone();
        longer.push(0);
        assert!(Checkpoint::from_bytes(&longer).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = b;
        bad[4] = 9;
        assert!(Checkpoint::from_bytes(&bad).is_err());
    }
}
