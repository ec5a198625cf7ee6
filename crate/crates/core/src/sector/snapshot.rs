//! Binary state snapshots.
//!
//! Layout, all little-endian: magic `TLSNAP01`, endianness tag `0x01020304`
//! (u32), `n_sites` (u32), `electrons` (u32), `sz_twice` (i32), ordering
//! (u32, 0 interleaved / 1 blocked), step counter (u64), dimension (u64),
//! then `dimension` pairs of f64 `(re, im)`.

use std::io::{Read, Write};

use super::SectorSpec;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::pauli::SpinOrdering;

const MAGIC: &[u8; 8] = b"TLSNAP01";
const ENDIAN_TAG: u32 = 0x0102_0304;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub spec: SectorSpec,
    /// Free counter, e.g. the number of product-formula steps applied.
    pub step: u64,
    pub amplitudes: Vec<C64>,
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&ENDIAN_TAG.to_le_bytes())?;
    w.write_all(&(snap.spec.n_sites as u32).to_le_bytes())?;
    w.write_all(&(snap.spec.electrons as u32).to_le_bytes())?;
    w.write_all(&snap.spec.sz_twice.to_le_bytes())?;
    let ord: u32 = match snap.spec.ordering {
        SpinOrdering::Interleaved => 0,
        SpinOrdering::Blocked => 1,
    };
    w.write_all(&ord.to_le_bytes())?;
    w.write_all(&snap.step.to_le_bytes())?;
    w.write_all(&(snap.amplitudes.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * snap.amplitudes.len());
    for a in &snap.amplitudes {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a state snapshot".into()));
    }
    let tag = read_u32(&mut r)?;
    if tag != ENDIAN_TAG {
        return Err(Error::Parse(format!("bad endianness tag {tag:#x}")));
    }
    let n_sites = read_u32(&mut r)? as usize;
    let electrons = read_u32(&mut r)? as usize;
    let sz_twice = read_u32(&mut r)? as i32;
    let ordering = match read_u32(&mut r)? {
        0 => SpinOrdering::Interleaved,
        1 => SpinOrdering::Blocked,
        other => return Err(Error::Parse(format!("unknown ordering code {other}"))),
    };
    let step = read_u64(&mut r)?;
    let dim = read_u64(&mut r)? as usize;
    let mut buf = vec![0u8; 16 * dim];
    r.read_exact(&mut buf)?;
    let amplitudes = buf
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok(Snapshot {
        spec: SectorSpec {
            n_sites,
            electrons,
            sz_twice,
            ordering,
        },
        step,
        amplitudes,
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let snap = Snapshot {
            spec: SectorSpec {
                n_sites: 6,
                electrons: 6,
                sz_twice: -2,
                ordering: SpinOrdering::Blocked,
            },
            step: 17,
            amplitudes: vec![C64::new(0.5, -0.25), C64::new(-1e-300, 3.0)],
        };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &snap).unwrap();
        assert_eq!(bytes.len(), 8 + 4 * 5 + 8 + 8 + 32);
        assert_eq!(read_snapshot(bytes.as_slice()).unwrap(), snap);
        bytes[0] = b'X';
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }
}
