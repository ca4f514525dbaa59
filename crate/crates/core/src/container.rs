//! Shared binary envelope: 4-byte magic, u32 version, u64 header length,
//! UTF-8 JSON header, payload, trailing CRC32 of everything before it.
//! All integers little-endian.

use crate::error::{Error, Result};

pub(crate) fn encode(magic: &[u8; 4], version: u32, header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + header.len() + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Returns `(header, payload)` slices after checking magic, version and CRC.
pub(crate) fn decode<'a>(bytes: &'a [u8], magic: &[u8; 4], version: u32) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned();
        return Err(Error::Format(format!(
            "bad magic {found:?}, expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    if bytes.len() < 20 {
        return Err(Error::Corruption(format!("file truncated to {} bytes", bytes.len())));
    }
    let found = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if found != version {
        return Err(Error::Version { expected: version, found });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Corruption("checksum mismatch".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if hlen > (body.len() - 16) as u64 {
        return Err(Error::Corruption("header length exceeds file size".into()));
    }
    let hlen = hlen as usize;
    Ok((&body[16..16 + hlen], &body[16 + hlen..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_failures() {
        let b = encode(b"TEST", 3, b"{}", &[1, 2, 3]);
        let (h, p) = decode(&b, b"TEST", 3).unwrap();
        assert_eq!((h, p), (&b"{}"[..], &[1u8, 2, 3][..]));
        assert!(matches!(decode(&b, b"NOPE", 3), Err(Error::Format(_))));
        assert!(matches!(decode(&b, b"TEST", 4), Err(Error::Version { expected: 4, found: 3 })));
        assert!(matches!(decode(&b[..b.len() - 1], b"TEST", 3), Err(Error::Corruption(_))));
        assert!(matches!(decode(&b[..10], b"TEST", 3), Err(Error::Corruption(_))));
        let mut flipped = b.clone();
        flipped[17] ^= 1;
        assert!(matches!(decode(&flipped, b"TEST", 3), Err(Error::Corruption(_))));
    }
}
