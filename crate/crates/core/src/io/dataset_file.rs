//! `FDMV` video container.
//!
//! ```text
//! "FDMV" | version u32 | num_videos u32 | N u32 | frame_dim u32 | f32 LE data, video-major
//! ```

use ndarray::Array2;

use super::bytes::{put_f32s, put_u32, to_u32, Reader};
use crate::{Error, Result};

pub const VIDEO_MAGIC: &[u8; 4] = b"FDMV";
pub const VIDEO_VERSION: u32 = 1;

const WHAT: &str = "FDMV video file";

/// All videos must share one `(N, frame_dim)` shape.
pub fn encode_videos(videos: &[Array2<f32>]) -> Result<Vec<u8>> {
    let (n, dim) = videos.first().map_or((0, 0), |v| v.dim());
    if videos.iter().any(|v| v.dim() != (n, dim)) {
        return Err(Error::Shape("videos differ in shape".into()));
    }
    let mut out = Vec::with_capacity(20 + videos.len() * n * dim * 4);
    out.extend_from_slice(VIDEO_MAGIC);
    put_u32(&mut out, VIDEO_VERSION);
    put_u32(&mut out, to_u32(videos.len(), WHAT)?);
    put_u32(&mut out, to_u32(n, WHAT)?);
    put_u32(&mut out, to_u32(dim, WHAT)?);
    for v in videos {
        put_f32s(&mut out, v.iter().copied());
    }
    Ok(out)
}

pub fn decode_videos(bytes: &[u8]) -> Result<Vec<Array2<f32>>> {
    let mut r = Reader::new(bytes, WHAT);
    r.magic(VIDEO_MAGIC)?;
    let version = r.u32()?;
    if version != VIDEO_VERSION {
        return Err(Error::format(WHAT, format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let per_video = n
        .checked_mul(dim)
        .ok_or_else(|| Error::format(WHAT, "frame count overflows"))?;
    let total = per_video
        .checked_mul(count)
        .and_then(|t| t.checked_mul(4))
        .ok_or_else(|| Error::format(WHAT, "payload size overflows"))?;
    if total != r.remaining() {
        return Err(Error::format(
            WHAT,
            format!("payload is {} bytes, header implies {total}", r.remaining()),
        ));
    }
    let mut videos = Vec::with_capacity(count);
    for i in 0..count {
        let data = r.f32s(per_video)?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(WHAT, format!("non-finite value in video {i}")));
        }
        videos.push(Array2::from_shape_vec((n, dim), data).map_err(|e| Error::Shape(e.to_string()))?);
    }
    r.finish()?;
    Ok(videos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn header_and_order() {
        let v = vec![array![[1.0f32, 2.0], [3.0, 4.0]], array![[5.0f32, 6.0], [7.0, 8.0]]];
        let bytes = encode_videos(&v).unwrap();
        assert_eq!(&bytes[..4], b"FDMV");
        assert_eq!(bytes.len(), 20 + 8 * 4);
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[36..40], &5.0f32.to_le_bytes());
        assert_eq!(decode_videos(&bytes).unwrap(), v);
    }

    #[test]
    fn rejects_size_lies() {
        let v = vec![array![[1.0f32, 2.0]]];
        let mut bytes = encode_videos(&v).unwrap();
        bytes[8] = 200;
        assert!(decode_videos(&bytes).is_err());
        assert!(decode_videos(b"FDMV").is_err());
    }

    #[test]
    fn rejects_mixed_shapes() {
        let v = vec![array![[1.0f32, 2.0]], array![[1.0f32], [2.0]]];
        assert!(encode_videos(&v).is_err());
    }
}
