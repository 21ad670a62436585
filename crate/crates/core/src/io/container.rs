//! Binary containers for cubes and volumes.
//!
//! Layout: 8 magic bytes, a little-endian `u64` header length, a UTF-8 JSON
//! header, then the payload as little-endian `f32` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{CaptureTopology, RelayGeometry};
use crate::transient::{TimingSpec, TransientCube};
use crate::volume::{VolumeSpec, VoxelVolume};

pub const CUBE_MAGIC: &[u8; 8] = b"NLOSCUBE";
pub const VOLUME_MAGIC: &[u8; 8] = b"NLOSVOL ";
pub const FORMAT_VERSION: u32 = 1;

/// Headers larger than this are rejected as corrupt.
const MAX_HEADER_BYTES: u64 = 1 << 24;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CubeHeader {
    version: u32,
    relay: RelayGeometry,
    topology: CaptureTopology,
    timing: TimingSpec,
    shape: [usize; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeHeader {
    version: u32,
    spec: VolumeSpec,
}

fn write_container<W: Write, H: Serialize>(mut w: W, magic: &[u8; 8], header: &H, values: &Array3<f64>) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| NlosError::Header(e.to_string()))?;
    w.write_all(magic)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut payload = Vec::with_capacity(values.len() * 4);
    for v in values.iter() {
        payload.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Reads magic, header and raw payload bytes.
fn read_container<R: Read, H: DeserializeOwned>(mut r: R, magic: &[u8; 8]) -> Result<(H, Vec<u8>)> {
    let mut got = [0u8; 8];
    read_exact_or(&mut r, &mut got, || NlosError::BadMagic { expected: String::from_utf8_lossy(magic).into() })?;
    if &got != magic {
        return Err(NlosError::BadMagic { expected: String::from_utf8_lossy(magic).into() });
    }
    let mut len = [0u8; 8];
    read_exact_or(&mut r, &mut len, || NlosError::Header("missing header length".into()))?;
    let len = u64::from_le_bytes(len);
    if len > MAX_HEADER_BYTES {
        return Err(NlosError::Header(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    read_exact_or(&mut r, &mut json, || NlosError::Header("header shorter than its declared length".into()))?;

    let value: serde_json::Value = serde_json::from_slice(&json).map_err(|e| NlosError::Header(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| NlosError::Header("header has no version field".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(NlosError::VersionMismatch { found: version as u32, supported: FORMAT_VERSION });
    }
    let header: H = serde_json::from_value(value).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => NlosError::Invalid(format!("header: {e}")),
        _ => NlosError::Header(e.to_string()),
    })?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    Ok((header, payload))
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], err: impl FnOnce() -> NlosError) -> Result<()> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(err()),
        Err(e) => Err(e.into()),
    }
}

fn decode_payload(bytes: &[u8], shape: (usize, usize, usize)) -> Result<Array3<f64>> {
    let expected = shape.0 * shape.1 * shape.2 * 4;
    if bytes.len() != expected {
        return Err(NlosError::TruncatedPayload { expected, found: bytes.len() });
    }
    let data: Vec<f64> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Ok(Array3::from_shape_vec(shape, data).expect("length checked above"))
}

pub fn write_cube_to<W: Write>(w: W, cube: &TransientCube) -> Result<()> {
    let d = cube.values().dim();
    let header = CubeHeader {
        version: FORMAT_VERSION,
        relay: cube.relay().clone(),
        topology: cube.topology().clone(),
        timing: *cube.timing(),
        shape: [d.0, d.1, d.2],
    };
    write_container(w, CUBE_MAGIC, &header, cube.values())
}

pub fn read_cube_from<R: Read>(r: R) -> Result<TransientCube> {
    let (h, payload): (CubeHeader, _) = read_container(r, CUBE_MAGIC)?;
    let [a, b, c] = h.shape;
    if a * b * c == 0 {
        return Err(NlosError::invalid("cube header has an empty shape"));
    }
    let values = decode_payload(&payload, (a, b, c))?;
    TransientCube::new(h.relay, h.topology, h.timing, values)
}

pub fn write_volume_to<W: Write>(w: W, vol: &VoxelVolume) -> Result<()> {
    let header = VolumeHeader { version: FORMAT_VERSION, spec: *vol.spec() };
    write_container(w, VOLUME_MAGIC, &header, vol.values())
}

pub fn read_volume_from<R: Read>(r: R) -> Result<VoxelVolume> {
    let (h, payload): (VolumeHeader, _) = read_container(r, VOLUME_MAGIC)?;
    let values = decode_payload(&payload, h.spec.shape())?;
    VoxelVolume::new(h.spec, values)
}

pub fn write_cube(path: impl AsRef<Path>, cube: &TransientCube) -> Result<()> {
    write_cube_to(BufWriter::new(File::create(path)?), cube)
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<TransientCube> {
    read_cube_from(BufReader::new(File::open(path)?))
}

pub fn write_volume(path: impl AsRef<Path>, vol: &VoxelVolume) -> Result<()> {
    write_volume_to(BufWriter::new(File::create(path)?), vol)
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<VoxelVolume> {
    read_volume_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ScanGrid, Vec3};
    use rand::{Rng, SeedableRng};

    fn random_cube(seed: u64) -> TransientCube {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let relay = RelayGeometry::canonical(1.0, 1.0).unwrap();
        let topo = CaptureTopology::Confocal { grid: ScanGrid::new(2, 2).unwrap() };
        let timing = TimingSpec::new(4e-12, 16, 6e-9, 80e-12).unwrap();
        let v = Array3::from_shape_fn((1, 4, 16), |_| rng.random::<f64>() * 10.0);
        TransientCube::new(relay, topo, timing, v).unwrap()
    }

    fn bytes_of(cube: &TransientCube) -> Vec<u8> {
        let mut buf = Vec::new();
        write_cube_to(&mut buf, cube).unwrap();
        buf
    }

    #[test]
    fn cube_round_trip_at_f32_precision() {
        let cube = random_cube(7);
        let back = read_cube_from(bytes_of(&cube).as_slice()).unwrap();
        assert_eq!(back.topology(), cube.topology());
        assert_eq!(back.timing(), cube.timing());
        for (a, b) in back.values().iter().zip(cube.values()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        // A second trip is bit-exact.
        assert_eq!(bytes_of(&back), bytes_of(&cube));
    }

    #[test]
    fn distinct_errors_for_corruption() {
        let good = bytes_of(&random_cube(1));
        let truncated = &good[..good.len() - 3];
        assert!(matches!(read_cube_from(truncated), Err(NlosError::TruncatedPayload { .. })));

        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(read_cube_from(magic.as_slice()), Err(NlosError::BadMagic { .. })));

        let text = String::from_utf8_lossy(&good).replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(read_cube_from(text.as_bytes()), Err(NlosError::VersionMismatch { found: 9, .. })));

        let vol = VoxelVolume::zeros(VolumeSpec::new(Vec3::ZERO, [0.1; 3], [2, 2, 2]).unwrap());
        let mut buf = Vec::new();
        write_volume_to(&mut buf, &vol).unwrap();
        assert!(matches!(read_cube_from(buf.as_slice()), Err(NlosError::BadMagic { .. })));
    }

    #[test]
    fn zero_dims_in_header_is_a_validation_error() {
        let header = br#"{"version":1,"spec":{"origin":[0,0,0],"pitch":[0.1,0.1,0.1],"dims":[0,2,2]}}"#;
        let mut buf = VOLUME_MAGIC.to_vec();
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(header);
        let err = read_volume_from(buf.as_slice()).unwrap_err();
        assert!(matches!(err, NlosError::Invalid(_)), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn volume_round_trip() {
        let spec = VolumeSpec::new(Vec3::new(-0.5, -0.5, 0.9), [0.25, 0.25, 0.01], [4, 4, 3]).unwrap();
        let vol =
            VoxelVolume::new(spec, Array3::from_shape_fn((4, 4, 3), |(i, j, k)| (i * 12 + j * 3 + k) as f64 / 7.0))
                .unwrap();
        let mut buf = Vec::new();
        write_volume_to(&mut buf, &vol).unwrap();
        let back = read_volume_from(buf.as_slice()).unwrap();
        assert_eq!(back.spec(), vol.spec());
        for (a, b) in back.values().iter().zip(vol.values()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }
}
