//! Binary checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "NBADCKPT"  u32 version  u64 len + spec JSON
//! u64 count, then per parameter tensor:
//!     u64 len + name  u64 rank  rank × u64 extent  f32 payload
//! u64 count + velocity tensors, same encoding
//! u64 len + RNG state bytes
//! u64 iteration
//! ```

use std::path::Path;

use crate::nn::{OptState, Tensor};
use crate::rng::{self, Stream};
use crate::{Error, Result};

use super::{Network, NetworkSpec};

pub const MAGIC: &[u8; 8] = b"NBADCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to resume training bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub parameters: Vec<(String, Tensor<f32>)>,
    pub velocities: Vec<(String, Tensor<f32>)>,
    pub rng_state: Vec<u8>,
    pub iteration: u64,
}

impl Checkpoint {
    /// Snapshot of a training run. Missing momentum buffers are stored as
    /// zeros, which is what the optimizer would start from.
    pub fn capture(net: &Network<f32>, opt: &OptState<f32>, rng: &Stream, iteration: u64) -> Checkpoint {
        let params = net.parameters();
        let parameters = params.iter().map(|p| (p.name.clone(), p.value.clone())).collect();
        let velocities = params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let v = opt
                    .velocities
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(p.value.shape()));
                (p.name.clone(), v)
            })
            .collect();
        Checkpoint {
            spec: net.spec().clone(),
            parameters,
            velocities,
            rng_state: rng::save_state(rng),
            iteration,
        }
    }

    /// Rebuilds the network, momentum buffers and RNG.
    pub fn restore(&self) -> Result<(Network<f32>, Vec<Tensor<f32>>, Stream)> {
        let mut net = Network::zeroed(&self.spec)?;
        let params = net.parameters_mut();
        if params.len() != self.parameters.len() || params.len() != self.velocities.len() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint holds {} tensors, network has {}",
                self.parameters.len(),
                params.len()
            )));
        }
        let mut velocities = Vec::with_capacity(params.len());
        for ((p, (name, value)), (_, vel)) in params.into_iter().zip(&self.parameters).zip(&self.velocities) {
            if &p.name != name || p.value.shape() != value.shape() || vel.shape() != value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint tensor {name} {:?} does not fit {} {:?}",
                    value.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            p.value = value.clone();
            velocities.push(vel.clone());
        }
        Ok((net, velocities, rng::load_state(&self.rng_state)?))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_bytes(&mut out, serde_json::to_string(&self.spec)?.as_bytes());
        for set in [&self.parameters, &self.velocities] {
            put_u64(&mut out, set.len() as u64);
            for (name, t) in set {
                put_bytes(&mut out, name.as_bytes());
                put_u64(&mut out, t.rank() as u64);
                for &d in t.shape() {
                    put_u64(&mut out, d as u64);
                }
                out.reserve(t.len() * 4);
                for v in t.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        put_bytes(&mut out, &self.rng_state);
        put_u64(&mut out, self.iteration);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        r.pos = MAGIC.len();
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let spec: NetworkSpec = serde_json::from_slice(r.bytes_field()?)?;
        let parameters = r.tensors()?;
        let velocities = r.tensors()?;
        let rng_state = r.bytes_field()?.to_vec();
        let iteration = r.u64()?;
        if r.pos != bytes.len() {
            return Err(Error::MalformedHeader(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            spec,
            parameters,
            velocities,
            rng_state,
            iteration,
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::harness::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_bytes(&bytes).map_err(|e| e.at(path))
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // anything longer than what is left cannot be satisfied
        if n > (self.bytes.len() - self.pos) as u64 {
            return Err(Error::Truncated);
        }
        Ok(n as usize)
    }

    fn bytes_field(&mut self) -> Result<&'a [u8]> {
        let n = self.len()?;
        self.take(n)
    }

    fn tensors(&mut self) -> Result<Vec<(String, Tensor<f32>)>> {
        let count = self.len()?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let name = String::from_utf8(self.bytes_field()?.to_vec())
                .map_err(|_| Error::MalformedHeader("tensor name is not UTF-8".into()))?;
            let rank = self.len()?;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(self.len()?);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|n| n.checked_mul(4))
                .ok_or(Error::Truncated)?;
            let data = self
                .take(n)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let t = Tensor::from_vec(&shape, data)
                .map_err(|_| Error::MalformedHeader(format!("tensor {name} has shape {shape:?}")))?;
            out.push((name, t));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetworkSpec, Preset};
    use crate::nn::Mode;

    fn fixture() -> Checkpoint {
        let net = Network::<f32>::build(&NetworkSpec::from_preset(Preset::Desk), 3).unwrap();
        let opt = OptState::new(0.001, 0.0005, 0.9).unwrap();
        Checkpoint::capture(&net, &opt, &rng::stream(4, &[]), 17)
    }

    #[test]
    fn bytes_roundtrip() {
        let c = fixture();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(&bytes[..8], b"NBADCKPT");
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn restored_forward_is_bitwise_equal() {
        let spec = NetworkSpec::from_preset(Preset::Desk);
        let net = Network::<f32>::build(&spec, 3).unwrap();
        let opt = OptState::new(0.001, 0.0005, 0.9).unwrap();
        let c = Checkpoint::capture(&net, &opt, &rng::stream(4, &[]), 0);
        let (back, _, _) = Checkpoint::from_bytes(&c.to_bytes().unwrap())
            .unwrap()
            .restore()
            .unwrap();
        let x = Tensor::from_vec(
            &[1, 3, 64, 64],
            (0..3 * 64 * 64).map(|i| (i % 97) as f32 / 97.0).collect(),
        )
        .unwrap();
        let mut r = rng::stream(0, &[]);
        assert_eq!(
            net.forward(&x, Mode::Eval, &mut r).unwrap().0,
            back.forward(&x, Mode::Eval, &mut r).unwrap().0
        );
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = fixture().to_bytes().unwrap();
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = fixture().to_bytes().unwrap();
        bytes[8] = 9;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::VersionMismatch { found: 9, expected: 1 })
        ));
    }

    #[test]
    fn truncation_anywhere() {
        let bytes = fixture().to_bytes().unwrap();
        for cut in [12, 20, 500, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Truncated)),
                "cut {cut}"
            );
        }
    }
}
