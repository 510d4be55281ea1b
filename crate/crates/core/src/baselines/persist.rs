//! Factor files: header, token lists, then `U` and `V` as row-major
//! little-endian f32.
//!
//! ```text
//! magic b"L2VF" | u32 version | u64 users | u64 venues | u32 rank | f64 lambda
//! per user token, then per venue token: u32 byte length + UTF-8 bytes
//! f32 × users·rank, f32 × venues·rank
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::FactorModel;
use crate::{Error, Result};

pub const FACTOR_MAGIC: &[u8; 4] = b"L2VF";
pub const FACTOR_VERSION: u32 = 1;

pub fn write_factors<W: Write>(mut w: W, f: &FactorModel) -> Result<()> {
    w.write_all(FACTOR_MAGIC)?;
    w.write_u32::<LittleEndian>(FACTOR_VERSION)?;
    w.write_u64::<LittleEndian>(f.users.len() as u64)?;
    w.write_u64::<LittleEndian>(f.venues.len() as u64)?;
    w.write_u32::<LittleEndian>(f.rank as u32)?;
    w.write_f64::<LittleEndian>(f.lambda)?;
    for t in f.users.iter().chain(&f.venues) {
        w.write_u32::<LittleEndian>(t.len() as u32)?;
        w.write_all(t.as_bytes())?;
    }
    for &x in f.u.iter().chain(&f.v) {
        w.write_f32::<LittleEndian>(x as f32)?;
    }
    Ok(())
}

pub fn read_factors<R: Read>(mut r: R) -> Result<FactorModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FACTOR_MAGIC {
        return Err(Error::Format("not a factor file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FACTOR_VERSION {
        return Err(Error::Format(format!("unsupported factor file version {version}")));
    }
    let users = r.read_u64::<LittleEndian>()? as usize;
    let venues = r.read_u64::<LittleEndian>()? as usize;
    let rank = r.read_u32::<LittleEndian>()? as usize;
    let lambda = r.read_f64::<LittleEndian>()?;
    let mut read_tokens = |n: usize| -> Result<Vec<String>> {
        (0..n)
            .map(|_| {
                let len = r.read_u32::<LittleEndian>()? as usize;
                let mut buf = vec![0u8; len];
                r.read_exact(&mut buf)?;
                String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
            })
            .collect()
    };
    let user_tokens = read_tokens(users)?;
    let venue_tokens = read_tokens(venues)?;
    let mut read_matrix = |n: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0f32; n];
        r.read_f32_into::<LittleEndian>(&mut buf)?;
        Ok(buf.into_iter().map(f64::from).collect())
    };
    let u = read_matrix(users * rank)?;
    let v = read_matrix(venues * rank)?;
    Ok(FactorModel {
        users: user_tokens,
        venues: venue_tokens,
        rank,
        lambda,
        u,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::InteractionMatrix;

    #[test]
    fn round_trip_at_f32_precision() {
        let m = InteractionMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0], vec![4.0, 0.0]]);
        let f = FactorModel::new(&m, 2, 0.1, vec![0.5, -1.0, 0.25, 2.0, 3.0, 0.125], vec![1.0, 1.5, -0.5, 8.0]).unwrap();
        let mut buf = Vec::new();
        write_factors(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"L2VF");
        assert_eq!(read_factors(buf.as_slice()).unwrap(), f);
    }
}
