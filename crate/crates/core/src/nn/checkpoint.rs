//! Flat binary parameter checkpoints.
//!
//! Layout (all integers little-endian u64, floats little-endian f64):
//!
//! ```text
//! magic "FDTNCKPT" | version | tensor count
//! per tensor: name length | name bytes (UTF-8) | rank | dims... | values...
//! ```

use std::io::{Read, Write};

use crate::error::{FdtnError, Result};
use crate::nn::param::{ParamSet, ParamTensor};

pub const MAGIC: &[u8; 8] = b"FDTNCKPT";
pub const VERSION: u64 = 1;

// Reject absurd headers before allocating.
const MAX_NAME: u64 = 4096;
const MAX_RANK: u64 = 16;
const MAX_VALUES: u64 = 1 << 32;

pub fn write_checkpoint(params: &ParamSet, mut out: impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(params.len() as u64).to_le_bytes())?;
    for t in params.tensors() {
        out.write_all(&(t.name.len() as u64).to_le_bytes())?;
        out.write_all(t.name.as_bytes())?;
        out.write_all(&(t.shape.len() as u64).to_le_bytes())?;
        for &d in &t.shape {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in &t.value {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn encode_checkpoint(params: &ParamSet) -> Vec<u8> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf).expect("writing to memory cannot fail");
    buf
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input
        .read_exact(&mut b)
        .map_err(|_| FdtnError::format("checkpoint", "truncated"))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint(mut input: impl Read) -> Result<ParamSet> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| FdtnError::format("checkpoint", "truncated header"))?;
    if &magic != MAGIC {
        return Err(FdtnError::format("checkpoint", "bad magic"));
    }
    let version = read_u64(&mut input)?;
    if version != VERSION {
        return Err(FdtnError::format(
            "checkpoint",
            format!("unsupported version {version}"),
        ));
    }
    let count = read_u64(&mut input)?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = read_u64(&mut input)?;
        if name_len > MAX_NAME {
            return Err(FdtnError::format("checkpoint", "name too long"));
        }
        let mut name = vec![0u8; name_len as usize];
        input
            .read_exact(&mut name)
            .map_err(|_| FdtnError::format("checkpoint", "truncated name"))?;
        let name = String::from_utf8(name)
            .map_err(|_| FdtnError::format("checkpoint", "name is not UTF-8"))?;
        let rank = read_u64(&mut input)?;
        if rank > MAX_RANK {
            return Err(FdtnError::format(
                "checkpoint",
                format!("rank {rank} too large"),
            ));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut total: u64 = 1;
        for _ in 0..rank {
            let d = read_u64(&mut input)?;
            total = total.saturating_mul(d);
            shape.push(d as usize);
        }
        if total > MAX_VALUES {
            return Err(FdtnError::format("checkpoint", "tensor too large"));
        }
        let mut value = Vec::with_capacity(total as usize);
        let mut b = [0u8; 8];
        for _ in 0..total {
            input
                .read_exact(&mut b)
                .map_err(|_| FdtnError::format("checkpoint", "truncated values"))?;
            value.push(f64::from_le_bytes(b));
        }
        params.add(ParamTensor::new(name, shape, value)?)?;
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(FdtnError::format("checkpoint", "trailing bytes"));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParamSet {
        let mut p = ParamSet::new();
        p.add(
            ParamTensor::new(
                "a.weight",
                vec![2, 3],
                vec![1.0, -2.5, 3.25, 0.0, -0.0, 1e-300],
            )
            .unwrap(),
        )
        .unwrap();
        p.add(ParamTensor::new("a.bias", vec![2], vec![f64::MIN_POSITIVE, 7.0]).unwrap())
            .unwrap();
        p
    }

    #[test]
    fn header_layout() {
        let bytes = encode_checkpoint(&sample());
        assert_eq!(&bytes[..8], b"FDTNCKPT");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 8);
        assert_eq!(&bytes[32..40], b"a.weight");
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_checkpoint(&sample());
        assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&bad[..]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_checkpoint(&extra[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in proptest::collection::vec(any::<f64>(), 1..40)) {
            let mut p = ParamSet::new();
            p.add(ParamTensor::new("x", vec![values.len()], values.clone()).unwrap()).unwrap();
            let bytes = encode_checkpoint(&p);
            let back = read_checkpoint(&bytes[..]).unwrap();
            let got = &back.tensors()[0].value;
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(encode_checkpoint(&back), bytes);
        }
    }
}
