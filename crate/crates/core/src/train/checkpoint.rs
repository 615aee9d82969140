//! Binary model checkpoints and ensemble bundle directories.
//!
//! Layout of one checkpoint (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "STLFCKPT"
//! version      u32
//! desc_len     u32
//! descriptor   desc_len bytes of UTF-8 JSON (see CheckpointDescriptor)
//! n_arrays     u32
//! n_arrays x { name_len u32, name bytes, count u64, count x f64 }
//! checksum     32 bytes, SHA-256 of everything before it
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arch::{ArchitectureConfig, Model};
use crate::data::{hex, Normalization};
use crate::error::{Error, Result};
use crate::nn::Parameters;

use super::ensemble::{BundleMetadata, EnsembleBundle, Member};

pub const MAGIC: &[u8; 8] = b"STLFCKPT";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDescriptor {
    pub architecture: ArchitectureConfig,
    pub normalization: Option<Normalization>,
    pub init_id: usize,
    pub epoch: usize,
    pub metadata: BundleMetadata,
}

pub fn encode_checkpoint(model: &Model, descriptor: &CheckpointDescriptor) -> Result<Vec<u8>> {
    if descriptor.architecture != model.config {
        return Err(Error::ArchitectureMismatch(
            "descriptor and model disagree on the architecture".into(),
        ));
    }
    let desc = serde_json::to_vec(descriptor)?;
    let mut arrays: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit(&mut |name, values| arrays.push((name.to_string(), values.to_vec())));

    let mut out = Vec::with_capacity(64 + desc.len() + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    out.extend_from_slice(&desc);
    out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for (name, values) in &arrays {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt("unexpected end of checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Model, CheckpointDescriptor)> {
    if bytes.len() < MAGIC.len() + 4 + 32 {
        return Err(Error::Corrupt("checkpoint is truncated".into()));
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Corrupt("not a checkpoint file (bad magic)".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let desc_len = r.u32()? as usize;
    let descriptor: CheckpointDescriptor = serde_json::from_slice(r.take(desc_len)?)
        .map_err(|e| Error::Corrupt(format!("bad descriptor: {e}")))?;
    let mut model = Model::zeroed(descriptor.architecture)
        .map_err(|e| Error::Corrupt(format!("descriptor holds an invalid architecture: {e}")))?;

    let count = r.u32()? as usize;
    let mut arrays = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Corrupt("array name is not UTF-8".into()))?
            .to_string();
        let n = r.u64()? as usize;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Corrupt("array too large".into()))?)?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        arrays.push((name, values));
    }
    if r.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after parameter arrays".into()));
    }

    let mut next = arrays.into_iter();
    let mut problem: Option<String> = None;
    model.visit_mut(&mut |name, slot| {
        if problem.is_some() {
            return;
        }
        match next.next() {
            Some((n, v)) if n == name && v.len() == slot.len() => slot.copy_from_slice(&v),
            Some((n, v)) => problem = Some(format!("expected {name}[{}], found {n}[{}]", slot.len(), v.len())),
            None => problem = Some(format!("missing parameter array {name}")),
        }
    });
    if let Some(p) = problem {
        return Err(Error::ArchitectureMismatch(p));
    }
    if let Some((n, _)) = next.next() {
        return Err(Error::ArchitectureMismatch(format!("unexpected parameter array {n}")));
    }
    Ok((model, descriptor))
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &Model, descriptor: &CheckpointDescriptor) -> Result<()> {
    fs::write(path, encode_checkpoint(model, descriptor)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, CheckpointDescriptor)> {
    decode_checkpoint(&fs::read(path)?)
}

/// Loads a checkpoint and insists that it was written for `expected`.
pub fn load_checkpoint_for(
    path: impl AsRef<Path>,
    expected: &ArchitectureConfig,
) -> Result<(Model, CheckpointDescriptor)> {
    let (model, desc) = load_checkpoint(path)?;
    if &desc.architecture != expected {
        return Err(Error::ArchitectureMismatch(format!(
            "checkpoint holds {:?}, configuration asks for {:?}",
            desc.architecture, expected
        )));
    }
    Ok((model, desc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub init_id: usize,
    pub epoch: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub metadata: BundleMetadata,
    pub normalization: Option<Normalization>,
    pub members: Vec<ManifestEntry>,
}

fn member_file(m: &Member) -> String {
    format!("member-i{:02}-e{:05}.ckpt", m.init_id, m.epoch)
}

/// Writes one checkpoint per member plus `manifest.json` into `dir`.
pub fn save_bundle(dir: impl AsRef<Path>, bundle: &EnsembleBundle) -> Result<BundleManifest> {
    bundle.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut members = Vec::with_capacity(bundle.members.len());
    for m in &bundle.members {
        let desc = CheckpointDescriptor {
            architecture: m.model.config,
            normalization: bundle.normalization,
            init_id: m.init_id,
            epoch: m.epoch,
            metadata: bundle.metadata.clone(),
        };
        let bytes = encode_checkpoint(&m.model, &desc)?;
        let file = member_file(m);
        fs::write(dir.join(&file), &bytes)?;
        members.push(ManifestEntry {
            file,
            init_id: m.init_id,
            epoch: m.epoch,
            sha256: hex(&Sha256::digest(&bytes)),
        });
    }
    let manifest = BundleManifest {
        format_version: FORMAT_VERSION,
        metadata: bundle.metadata.clone(),
        normalization: bundle.normalization,
        members,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn manifest_path(dir: impl AsRef<Path>) -> PathBuf {
    dir.as_ref().join(MANIFEST_FILE)
}

/// Reads a bundle directory, verifying every member's hash.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<EnsembleBundle> {
    let dir = dir.as_ref();
    let manifest: BundleManifest = serde_json::from_slice(&fs::read(manifest_path(dir))?)
        .map_err(|e| Error::Corrupt(format!("bad bundle manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let mut members = Vec::with_capacity(manifest.members.len());
    for entry in &manifest.members {
        let bytes = fs::read(dir.join(&entry.file))?;
        if hex(&Sha256::digest(&bytes)) != entry.sha256 {
            return Err(Error::Corrupt(format!("{} does not match its manifest hash", entry.file)));
        }
        let (model, desc) = decode_checkpoint(&bytes)?;
        if desc.init_id != entry.init_id || desc.epoch != entry.epoch {
            return Err(Error::Corrupt(format!("{} carries mismatched member ids", entry.file)));
        }
        members.push(Member {
            init_id: entry.init_id,
            epoch: entry.epoch,
            model,
        });
    }
    let bundle = EnsembleBundle {
        members,
        metadata: manifest.metadata,
        normalization: manifest.normalization,
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{ResNetConfig, ResidualStageConfig};
    use crate::data::FeatureConfig;
    use crate::nn::{flatten, job_rng};

    fn model(stage: ResidualStageConfig) -> Model {
        let cfg = ArchitectureConfig {
            features: FeatureConfig { month_lags: 2 },
            stage,
            ..Default::default()
        };
        Model::initialized(cfg, &mut job_rng(3, 1)).unwrap()
    }

    fn descriptor(m: &Model) -> CheckpointDescriptor {
        CheckpointDescriptor {
            architecture: m.config,
            normalization: Some(Normalization { max_load: 1234.5, max_temp: 98.6 }),
            init_id: 2,
            epoch: 7,
            metadata: BundleMetadata::default(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model(ResidualStageConfig::ResNet(ResNetConfig::default()));
        let bytes = encode_checkpoint(&m, &descriptor(&m)).unwrap();
        let (back, desc) = decode_checkpoint(&bytes).unwrap();
        let a: Vec<u64> = flatten(&m).iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = flatten(&back).iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(desc, descriptor(&m));
    }

    #[test]
    fn header_layout() {
        let m = model(ResidualStageConfig::None);
        let bytes = encode_checkpoint(&m, &descriptor(&m)).unwrap();
        assert_eq!(&bytes[..8], b"STLFCKPT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        let n = bytes.len();
        assert_eq!(&bytes[n - 32..], Sha256::digest(&bytes[..n - 32]).as_slice());
    }

    #[test]
    fn truncated_is_corrupt() {
        let m = model(ResidualStageConfig::None);
        let bytes = encode_checkpoint(&m, &descriptor(&m)).unwrap();
        for cut in [0, 5, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
    }

    #[test]
    fn flipped_byte_is_corrupt() {
        let m = model(ResidualStageConfig::None);
        let mut bytes = encode_checkpoint(&m, &descriptor(&m)).unwrap();
        let i = bytes.len() / 2;
        bytes[i] ^= 0x40;
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Corrupt(_))));
    }

    #[test]
    fn unknown_version() {
        let m = model(ResidualStageConfig::None);
        let mut bytes = encode_checkpoint(&m, &descriptor(&m)).unwrap();
        bytes[8] = 9;
        let n = bytes.len();
        let digest = Sha256::digest(&bytes[..n - 32]);
        bytes[n - 32..].copy_from_slice(&digest);
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Version { found: 9, expected: 1 })));
    }

    #[test]
    fn architecture_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let m = model(ResidualStageConfig::None);
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &m, &descriptor(&m)).unwrap();
        let other = ArchitectureConfig::default();
        assert!(matches!(load_checkpoint_for(&path, &other), Err(Error::ArchitectureMismatch(_))));
        assert!(load_checkpoint_for(&path, &m.config).is_ok());
    }

    #[test]
    fn bundle_round_trip_and_deterministic_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = EnsembleBundle::single(model(ResidualStageConfig::None));
        let mut second = bundle.members[0].clone();
        second.epoch = 9;
        bundle.members.push(second);
        bundle.normalization = Some(Normalization { max_load: 10.0, max_temp: 90.0 });
        save_bundle(dir.path().join("a"), &bundle).unwrap();
        save_bundle(dir.path().join("b"), &bundle).unwrap();
        let ma = fs::read(dir.path().join("a").join(MANIFEST_FILE)).unwrap();
        let mb = fs::read(dir.path().join("b").join(MANIFEST_FILE)).unwrap();
        assert_eq!(ma, mb);
        let back = load_bundle(dir.path().join("a")).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn tampered_member_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = EnsembleBundle::single(model(ResidualStageConfig::None));
        let manifest = save_bundle(dir.path(), &bundle).unwrap();
        let path = dir.path().join(&manifest.members[0].file);
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::Corrupt(_))));
    }
}
